//! Supporting half-space certificates and C1-point tests.

use nalgebra::{DMatrix, DVector};

use crate::body::{ConvexBody, Shape};
use crate::error::{Error, Result};
use crate::lp::{maximize_free, nonneg_solution, LpOutcome};
use crate::ray::Ray;

/// A verified supporting functional: vanishes at the base point, nonnegative
/// on the body within `min_vertex_value`.
#[derive(Debug, Clone)]
pub struct SupportCertificate {
    /// Linear functional on `R^{d+1}`, unit norm.
    pub functional: DVector<f64>,
    pub value_at_point: f64,
    /// Smallest value over the body's vertices (balls: the exact minimum 0).
    pub min_vertex_value: f64,
}

/// Supporting half-space of `body` at `p`: `Ok(None)` for interior points,
/// a certificate for boundary points, `NotInClosure` outside.
pub fn supporting_halfspace(
    body: &ConvexBody,
    p: &Ray,
    tol: f64,
) -> Result<Option<SupportCertificate>> {
    match body.shape() {
        Shape::Ball { center, radius } => {
            let rep = body
                .chart()
                .rep(p)
                .ok_or(Error::NotInClosure { margin: f64::NEG_INFINITY })?;
            let dist = (&rep - center).norm();
            let margin = radius - dist;
            if margin > tol {
                return Ok(None);
            }
            if margin < -tol {
                return Err(Error::NotInClosure { margin });
            }
            // Inward normal, extended to a linear functional vanishing at p.
            let inward = center - &rep;
            let functional = extend_vanishing(&inward, &rep, body);
            Ok(Some(certificate(functional, p, body)))
        }
        Shape::Polygon { .. } | Shape::Interval { .. } => {
            let margin = body.margin(p)?;
            if margin > tol {
                return Ok(None);
            }
            if margin < -tol {
                return Err(Error::NotInClosure { margin });
            }
            let rep = body.chart().rep(p).expect("boundary point is chart positive");
            let facets = body.facets().expect("faceted shape");
            let mut active: Vec<&DVector<f64>> = Vec::new();
            for f in facets {
                if f.normal.dot(&rep) <= tol.max(1e-12) {
                    active.push(&f.normal);
                }
            }
            if active.is_empty() {
                return Ok(None);
            }
            // The mean of active facet functionals still vanishes at p (each
            // vanishes there) and is nonnegative on the body.
            let mut functional = DVector::zeros(rep.len());
            for n in &active {
                functional += *n;
            }
            Ok(Some(certificate(functional, p, body)))
        }
        Shape::Polytope => supporting_halfspace_lp(body, p, tol),
    }
}

/// LP route for vertex-presented polytopes: hull membership first, then a
/// maximum-total-slack functional vanishing at `p`.
fn supporting_halfspace_lp(
    body: &ConvexBody,
    p: &Ray,
    tol: f64,
) -> Result<Option<SupportCertificate>> {
    let chart = body.chart();
    let prep = chart.rep(p).ok_or(Error::NotInClosure { margin: f64::NEG_INFINITY })?;
    let reps: Vec<DVector<f64>> = body
        .vertices()
        .iter()
        .map(|v| chart.rep(v).expect("validated at construction"))
        .collect();
    let n = prep.len();
    let k = reps.len();

    // Hull membership: p = sum lambda_i v_i, sum lambda = 1, lambda >= 0.
    let mut e = DMatrix::zeros(n + 1, k);
    for (j, r) in reps.iter().enumerate() {
        for i in 0..n {
            e[(i, j)] = r[i];
        }
        e[(n, j)] = 1.0;
    }
    let mut f = DVector::zeros(n + 1);
    for i in 0..n {
        f[i] = prep[i];
    }
    f[n] = 1.0;
    if nonneg_solution(&e, &f).is_none() {
        return Err(Error::NotInClosure { margin: -1.0 });
    }

    // Maximize total slack of psi . (v_i - p) subject to nonnegativity and a
    // box; a positive optimum exhibits a supporting functional, a zero
    // optimum means p is interior.
    let mut a = DMatrix::zeros(k + 2 * n, n);
    let mut b = DVector::zeros(k + 2 * n);
    let mut cost = DVector::zeros(n);
    for (i, r) in reps.iter().enumerate() {
        let d = r - &prep;
        for j in 0..n {
            a[(i, j)] = -d[j];
            cost[j] += d[j];
        }
        b[i] = 0.0;
    }
    for j in 0..n {
        a[(k + 2 * j, j)] = 1.0;
        b[k + 2 * j] = 1.0;
        a[(k + 2 * j + 1, j)] = -1.0;
        b[k + 2 * j + 1] = 1.0;
    }
    match maximize_free(&cost, &a, &b) {
        LpOutcome::Optimal { x, value } => {
            let spread: f64 = reps.iter().map(|r| (r - &prep).norm()).sum();
            if value <= tol * (1.0 + spread) {
                return Ok(None); // interior
            }
            let functional = extend_vanishing(&x, &prep, body);
            Ok(Some(certificate(functional, p, body)))
        }
        _ => Err(Error::NormalFormFailure("support LP did not solve")),
    }
}

/// Extend a chart covector `psi` to the linear functional
/// `w -> psi . w - (psi . p_rep)(c . w)` vanishing on the ray through `p_rep`.
fn extend_vanishing(psi: &DVector<f64>, p_rep: &DVector<f64>, body: &ConvexBody) -> DVector<f64> {
    psi - body.chart().functional() * psi.dot(p_rep)
}

fn certificate(functional: DVector<f64>, p: &Ray, body: &ConvexBody) -> SupportCertificate {
    let functional = &functional / functional.norm();
    let value_at_point = functional.dot(p.coords());
    let min_vertex_value = if body.vertices().is_empty() {
        0.0
    } else {
        body.vertices()
            .iter()
            .map(|v| functional.dot(v.coords()))
            .fold(f64::INFINITY, f64::min)
    };
    SupportCertificate {
        functional,
        value_at_point,
        min_vertex_value,
    }
}

#[derive(Debug, Clone)]
pub struct C1Verdict {
    pub c1: bool,
    /// Angular spread of the normal cone at the point (radians).
    pub spread: f64,
    /// Chart gradients of the active supporting functionals.
    pub normals: Vec<DVector<f64>>,
}

/// Is `p` a C1 point of the boundary of `body`? Exact normal-cone spread for
/// faceted shapes, `spread <= spread_tol` decides for densely sampled ones.
pub fn is_c1_point(body: &ConvexBody, p: &Ray, spread_tol: f64) -> Result<C1Verdict> {
    let boundary_tol = 1e-9;
    match body.shape() {
        Shape::Ball { center, radius } => {
            let rep = body.chart().rep(p).ok_or(Error::NotOnBoundary)?;
            let dist = (&rep - center).norm();
            if (dist - radius).abs() > 1e-7 {
                return Err(Error::NotOnBoundary);
            }
            Ok(C1Verdict {
                c1: true,
                spread: 0.0,
                normals: vec![(center - &rep) / *radius],
            })
        }
        Shape::Polygon { .. } | Shape::Interval { .. } => {
            let m = body.margin(p)?;
            if m.abs() > boundary_tol && m.abs() > 1e-7 {
                return Err(Error::NotOnBoundary);
            }
            let rep = body.chart().rep(p).expect("chart positive");
            let facets = body.facets().expect("faceted");
            let c = body.chart().functional();
            let chat = c / c.norm();
            let mut normals = Vec::new();
            for f in facets {
                if f.normal.dot(&rep).abs() <= 1e-7 {
                    let g = &f.normal - &chat * f.normal.dot(&chat);
                    normals.push(g.normalize());
                }
            }
            if normals.is_empty() {
                return Err(Error::NotOnBoundary);
            }
            let mut spread = 0.0_f64;
            for i in 0..normals.len() {
                for j in (i + 1)..normals.len() {
                    let ang = normals[i].dot(&normals[j]).clamp(-1.0, 1.0).acos();
                    spread = spread.max(ang);
                }
            }
            Ok(C1Verdict {
                c1: spread <= spread_tol,
                spread,
                normals,
            })
        }
        Shape::Polytope => Err(Error::UnsupportedBody(
            "C1 test needs a face lattice; this polytope is vertex-presented",
        )),
    }
}
