//! Points and maps of the sphere of rays.
//!
//! A ray is a unit vector of `R^{d+1}` with *significant sign*: `v` and `-v`
//! are antipodal, distinct points. Projective maps act by matrix-vector
//! product followed by renormalization, never by sign fixing; the sphere of
//! rays is the double cover of projective space and the engine stays on the
//! cover throughout.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default absolute tolerance for boundary classifications.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A point of the sphere of rays `S^d`, stored as a unit vector of `R^{d+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    v: DVector<f64>,
}

impl Ray {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::BadParameter("zero or non-finite ray vector".into()));
        }
        Ok(Ray { v: v / n })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Ray::new(DVector::from_column_slice(coords))
    }

    /// Ambient dimension `d` (the vector lives in `R^{d+1}`).
    pub fn ambient_dim(&self) -> usize {
        self.v.len() - 1
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn antipode(&self) -> Ray {
        Ray { v: -self.v.clone() }
    }

    pub fn dot(&self, other: &Ray) -> f64 {
        self.v.dot(&other.v)
    }

    /// Distance on the sphere of rays (chordal, sign sensitive).
    pub fn chordal_distance(&self, other: &Ray) -> f64 {
        (&self.v - &other.v).norm()
    }

    pub fn approx_eq(&self, other: &Ray, tol: f64) -> bool {
        self.chordal_distance(other) <= tol
    }

    /// Whether `other` is within `tol` of the antipode of `self`.
    pub fn is_antipodal(&self, other: &Ray, tol: f64) -> bool {
        (&self.v + &other.v).norm() <= tol
    }
}

/// A projective transformation of `S^d`: an invertible `(d+1) x (d+1)` matrix
/// normalized to `|det| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjMap {
    m: DMatrix<f64>,
}

impl ProjMap {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::BadParameter("projective map must be square".into()));
        }
        let n = m.nrows();
        let det = m.determinant();
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(Error::BadParameter(format!(
                "projective map must be invertible (det = {det:.3e})"
            )));
        }
        // Rescale so |det| = 1; the sign of the matrix is preserved.
        let scale = det.abs().powf(1.0 / n as f64);
        Ok(ProjMap { m: m / scale })
    }

    pub fn identity(ambient_dim: usize) -> Self {
        ProjMap {
            m: DMatrix::identity(ambient_dim + 1, ambient_dim + 1),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::BadParameter("ragged matrix rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        ProjMap::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Ambient dimension `d`.
    pub fn ambient_dim(&self) -> usize {
        self.m.nrows() - 1
    }

    pub fn apply(&self, r: &Ray) -> Ray {
        let w = &self.m * r.coords();
        let n = w.norm();
        Ray { v: w / n }
    }

    pub fn apply_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.m * v
    }

    pub fn compose(&self, rhs: &ProjMap) -> ProjMap {
        // |det| = 1 is preserved by products up to rounding; renormalize.
        ProjMap::new(&self.m * &rhs.m).expect("product of invertible maps")
    }

    pub fn inverse(&self) -> ProjMap {
        let inv = self
            .m
            .clone()
            .try_inverse()
            .expect("ProjMap is invertible by construction");
        ProjMap::new(inv).expect("inverse is invertible")
    }

    pub fn det(&self) -> f64 {
        self.m.determinant()
    }

    /// Row-major entries, the serialization order used by the scene schema.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.m.nrows())
            .map(|i| self.m.row(i).iter().copied().collect())
            .collect()
    }
}

/// The minimal properly convex segment `[a, b]` between two non-antipodal rays.
#[derive(Debug, Clone)]
pub struct Segment {
    a: Ray,
    b: Ray,
}

impl Segment {
    pub fn new(a: Ray, b: Ray) -> Result<Self> {
        if a.is_antipodal(&b, DEFAULT_TOL) {
            return Err(Error::BadParameter(
                "antipodal rays bound no minimal segment".into(),
            ));
        }
        Ok(Segment { a, b })
    }

    pub fn endpoints(&self) -> (&Ray, &Ray) {
        (&self.a, &self.b)
    }

    /// Point at parameter `t` in `[0, 1]` of the minimal arc, via normalized
    /// linear interpolation (the chord from `a` to `b` never meets the origin
    /// for non-antipodal endpoints).
    pub fn point(&self, t: f64) -> Ray {
        let w = self.a.coords() * (1.0 - t) + self.b.coords() * t;
        let n = w.norm();
        Ray { v: w / n }
    }

    /// Arc length on the unit sphere.
    pub fn arc_length(&self) -> f64 {
        self.a.dot(&self.b).clamp(-1.0, 1.0).acos()
    }
}

/// An affine chart `{ c . x = 1 }` of the sphere of rays. Rays with `c . v > 0`
/// have a representative in the chart.
#[derive(Debug, Clone)]
pub struct Chart {
    functional: DVector<f64>,
}

impl Chart {
    pub fn new(functional: DVector<f64>) -> Result<Self> {
        if functional.norm() < 1e-300 {
            return Err(Error::BadParameter("zero chart functional".into()));
        }
        Ok(Chart { functional })
    }

    /// The standard chart `x_{d+1} = 1`.
    pub fn standard(ambient_dim: usize) -> Self {
        let mut f = DVector::zeros(ambient_dim + 1);
        f[ambient_dim] = 1.0;
        Chart { functional: f }
    }

    pub fn functional(&self) -> &DVector<f64> {
        &self.functional
    }

    pub fn height(&self, r: &Ray) -> f64 {
        self.functional.dot(r.coords())
    }

    /// Affine representative of `r`, if it lies in the open chart half-sphere.
    pub fn rep(&self, r: &Ray) -> Option<DVector<f64>> {
        let h = self.height(r);
        if h > 1e-12 {
            Some(r.coords() / h)
        } else {
            None
        }
    }

    /// Ray through an affine representative (chart-positive side).
    pub fn ray(&self, rep: &DVector<f64>) -> Result<Ray> {
        let r = Ray::new(rep.clone())?;
        if self.height(&r) > 0.0 {
            Ok(r)
        } else {
            Ok(r.antipode())
        }
    }
}
