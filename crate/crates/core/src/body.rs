//! Properly convex bodies on the sphere of rays.
//!
//! A body lives in a declared affine chart; chart positivity of every vertex
//! keeps the closure inside an open half-sphere, so no antipodal pair can
//! appear in the hull. Polygons (`d = 2`) and intervals (`d = 1`) carry their
//! exact face lattice; higher-dimensional polytopes are vertex-presented and
//! support the vertex-based operations only; balls are kept analytic.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::ray::{Chart, Ray};

/// One codimension-1 face, as a linear functional on `R^{d+1}` normalized so
/// that its value at a chart representative is the Euclidean distance to the
/// face line within the chart. Inside means `n . z >= 0`.
#[derive(Debug, Clone)]
pub struct Facet {
    pub normal: DVector<f64>,
    /// Indices of the vertices spanning the facet, in boundary order.
    pub vertices: (usize, usize),
}

#[derive(Debug, Clone)]
pub enum Shape {
    /// Convex polygon with counterclockwise boundary vertices (`d = 2`).
    Polygon { facets: Vec<Facet> },
    /// Properly convex segment (`d = 1`).
    Interval { facets: [Facet; 2] },
    /// Vertex-presented polytope, any dimension.
    Polytope,
    /// Euclidean ball in the chart.
    Ball { center: DVector<f64>, radius: f64 },
}

#[derive(Debug, Clone)]
pub struct ConvexBody {
    chart: Chart,
    vertices: Vec<Ray>,
    shape: Shape,
}

impl ConvexBody {
    /// Convex polygon from boundary-ordered vertices (either orientation).
    pub fn polygon(vertices: Vec<Ray>, chart: Chart) -> Result<Self> {
        ConvexBody::polygon_with_tol(vertices, chart, 1e-9)
    }

    /// Polygon constructor with an explicit convexity slack, for developed
    /// tiles whose vertices carry accumulated word error.
    pub fn polygon_with_tol(vertices: Vec<Ray>, chart: Chart, convexity_tol: f64) -> Result<Self> {
        ConvexBody::polygon_impl(vertices, chart, convexity_tol, true)
    }

    /// Polygon from vertices already known to be convex and boundary-ordered
    /// (hull output); skips the quadratic convexity validation.
    pub fn polygon_prevalidated(vertices: Vec<Ray>, chart: Chart) -> Result<Self> {
        ConvexBody::polygon_impl(vertices, chart, 1e-7, false)
    }

    fn polygon_impl(
        vertices: Vec<Ray>,
        chart: Chart,
        convexity_tol: f64,
        validate: bool,
    ) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::BadParameter("polygon needs >= 3 vertices".into()));
        }
        if vertices.iter().any(|v| v.ambient_dim() != 2) {
            return Err(Error::BadParameter("polygon vertices must lie on S^2".into()));
        }
        let mut verts = vertices;
        let reps = chart_reps(&verts, &chart)?;

        // Orientation from the signed area; reverse if clockwise.
        let mut area2 = 0.0;
        for i in 0..reps.len() {
            let a = &reps[i];
            let b = &reps[(i + 1) % reps.len()];
            area2 += cross3(a, b).dot(chart.functional());
        }
        if area2 < 0.0 {
            verts.reverse();
        }
        let reps = chart_reps(&verts, &chart)?;
        let n = verts.len();
        let mut facets = Vec::with_capacity(n);
        for i in 0..n {
            let j = (i + 1) % n;
            let normal = normalize_functional(cross3(&reps[i], &reps[j]), &chart)?;
            // Convexity: every other vertex weakly inside this edge.
            if validate {
                for (k, r) in reps.iter().enumerate() {
                    if k != i && k != j && normal.dot(r) < -convexity_tol {
                        return Err(Error::BadParameter(format!(
                            "vertex {k} violates convexity of edge ({i},{j}) by {:.3e}",
                            -normal.dot(r)
                        )));
                    }
                }
            }
            facets.push(Facet {
                normal,
                vertices: (i, j),
            });
        }
        Ok(ConvexBody {
            chart,
            vertices: verts,
            shape: Shape::Polygon { facets },
        })
    }

    /// Properly convex segment of `S^1`.
    pub fn interval(a: Ray, b: Ray, chart: Chart) -> Result<Self> {
        if a.ambient_dim() != 1 || b.ambient_dim() != 1 {
            return Err(Error::BadParameter("interval endpoints must lie on S^1".into()));
        }
        let verts = vec![a, b];
        let reps = chart_reps(&verts, &chart)?;
        let dir = &reps[1] - &reps[0];
        if dir.norm() < 1e-12 {
            return Err(Error::BadParameter("degenerate interval".into()));
        }
        let e = dir.normalize();
        // Affine functionals (z - a).e >= 0 and (b - z).e >= 0, extended
        // linearly via the chart functional.
        let fa = &e - chart.functional() * reps[0].dot(&e);
        let fb = chart.functional() * reps[1].dot(&e) - &e;
        let facets = [
            Facet {
                normal: normalize_functional(fa, &chart)?,
                vertices: (0, 0),
            },
            Facet {
                normal: normalize_functional(fb, &chart)?,
                vertices: (1, 1),
            },
        ];
        Ok(ConvexBody {
            chart,
            vertices: verts,
            shape: Shape::Interval { facets },
        })
    }

    /// Vertex-presented polytope in any dimension. Only the vertex-based
    /// operations (support certificates, hull membership) apply.
    pub fn polytope(vertices: Vec<Ray>, chart: Chart) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyInput("polytope vertex list"));
        }
        chart_reps(&vertices, &chart)?;
        Ok(ConvexBody {
            chart,
            vertices,
            shape: Shape::Polytope,
        })
    }

    /// Euclidean ball in the chart, center given as a chart representative.
    pub fn ball(center: DVector<f64>, radius: f64, chart: Chart) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::BadParameter("ball radius must be positive".into()));
        }
        if (chart.functional().dot(&center) - 1.0).abs() > 1e-9 {
            return Err(Error::BadParameter("ball center must be a chart representative".into()));
        }
        Ok(ConvexBody {
            chart,
            vertices: Vec::new(),
            shape: Shape::Ball { center, radius },
        })
    }

    /// The Klein ball model of `H^d`: unit ball in the standard chart.
    pub fn klein_ball(ambient_dim: usize) -> Self {
        let chart = Chart::standard(ambient_dim);
        let mut center = DVector::zeros(ambient_dim + 1);
        center[ambient_dim] = 1.0;
        ConvexBody::ball(center, 1.0, chart).expect("unit ball is valid")
    }

    /// Regular polygon inscribed in the circle of the given chart radius;
    /// used as the dense-vertex stand-in for a disk.
    pub fn disk_polygon(sides: usize, radius: f64) -> Result<Self> {
        let chart = Chart::standard(2);
        let mut verts = Vec::with_capacity(sides);
        for i in 0..sides {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / sides as f64;
            verts.push(Ray::from_slice(&[radius * phi.cos(), radius * phi.sin(), 1.0])?);
        }
        ConvexBody::polygon(verts, chart)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn vertices(&self) -> &[Ray] {
        &self.vertices
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.shape {
            Shape::Ball { center, .. } => center.len() - 1,
            _ => self.vertices[0].ambient_dim(),
        }
    }

    pub fn facets(&self) -> Option<&[Facet]> {
        match &self.shape {
            Shape::Polygon { facets } => Some(facets),
            Shape::Interval { facets } => Some(facets),
            _ => None,
        }
    }

    /// Chart representative of an interior reference point.
    pub fn barycenter_rep(&self) -> DVector<f64> {
        match &self.shape {
            Shape::Ball { center, .. } => center.clone(),
            _ => {
                let mut acc = DVector::zeros(self.vertices[0].coords().len());
                for v in &self.vertices {
                    acc += self.chart.rep(v).expect("vertices are chart positive");
                }
                acc / self.vertices.len() as f64
            }
        }
    }

    /// Signed inward margin of a ray, in chart units. Positive inside,
    /// negative outside. Faceted shapes and balls only.
    pub fn margin(&self, r: &Ray) -> Result<f64> {
        let rep = self
            .chart
            .rep(r)
            .ok_or(Error::OutsideDomain { margin: f64::NEG_INFINITY })?;
        self.margin_rep(&rep)
    }

    /// Same as [`ConvexBody::margin`] on an explicit chart representative.
    pub fn margin_rep(&self, rep: &DVector<f64>) -> Result<f64> {
        match &self.shape {
            Shape::Polygon { facets } => Ok(facets
                .iter()
                .map(|f| f.normal.dot(rep))
                .fold(f64::INFINITY, f64::min)),
            Shape::Interval { facets } => Ok(facets
                .iter()
                .map(|f| f.normal.dot(rep))
                .fold(f64::INFINITY, f64::min)),
            Shape::Ball { center, radius } => Ok(radius - (rep - center).norm()),
            Shape::Polytope => Err(Error::UnsupportedBody(
                "signed margins need a face lattice; this polytope is vertex-presented",
            )),
        }
    }

    pub fn contains(&self, r: &Ray, tol: f64) -> Result<bool> {
        Ok(self.margin(r)? >= -tol)
    }

    /// Intersection parameters of the chart line `rep + t * dir` with the
    /// boundary: `(t_minus, t_plus)` with `t_minus <= 0 <= t_plus` for
    /// interior base points.
    pub fn boundary_hits(&self, rep: &DVector<f64>, dir: &DVector<f64>) -> Result<(f64, f64)> {
        match &self.shape {
            Shape::Polygon { facets } => hits_faceted(facets, rep, dir),
            Shape::Interval { facets } => hits_faceted(facets, rep, dir),
            Shape::Ball { center, radius } => {
                // |rep + t dir - center|^2 = r^2
                let w = rep - center;
                let a = dir.dot(dir);
                let b = 2.0 * w.dot(dir);
                let c = w.dot(&w) - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if disc <= 0.0 || a <= 0.0 {
                    return Err(Error::OutsideDomain { margin: c });
                }
                let s = disc.sqrt();
                Ok(((-b - s) / (2.0 * a), (-b + s) / (2.0 * a)))
            }
            Shape::Polytope => Err(Error::UnsupportedBody(
                "boundary hits need a face lattice; this polytope is vertex-presented",
            )),
        }
    }
}

fn hits_faceted(facets: &[Facet], rep: &DVector<f64>, dir: &DVector<f64>) -> Result<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for f in facets {
        let v0 = f.normal.dot(rep);
        let dv = f.normal.dot(dir);
        if dv.abs() < 1e-15 {
            if v0 < 0.0 {
                return Err(Error::OutsideDomain { margin: v0 });
            }
            continue;
        }
        let t = -v0 / dv;
        if dv > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
    }
    if lo >= hi {
        return Err(Error::OutsideDomain { margin: lo - hi });
    }
    Ok((lo, hi))
}

fn chart_reps(vertices: &[Ray], chart: &Chart) -> Result<Vec<DVector<f64>>> {
    vertices
        .iter()
        .map(|v| {
            chart.rep(v).ok_or_else(|| {
                Error::BadParameter("vertex outside the chart half-sphere".into())
            })
        })
        .collect()
}

fn cross3(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_column_slice(&[
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

/// Rescale a linear functional so that its gradient within the chart
/// hyperplane has unit Euclidean norm (values become chart distances).
fn normalize_functional(n: DVector<f64>, chart: &Chart) -> Result<DVector<f64>> {
    let c = chart.functional();
    let chat = c / c.norm();
    let tangential = &n - &chat * n.dot(&chat);
    let s = tangential.norm();
    if s < 1e-14 {
        return Err(Error::BadParameter("degenerate facet functional".into()));
    }
    Ok(n / s)
}

/// Convenience margin check used throughout the tests.
pub fn inside_tol(body: &ConvexBody, r: &Ray, tol: f64) -> bool {
    body.contains(r, tol).unwrap_or(false)
}
