//! Projective tubes around codimension-2 singularities: lifted circle maps,
//! the complete / uniformisable dichotomy, the special-tube criterion, and
//! totally geodesic blowup data.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ray::{ProjMap, Ray};

/// Band around `tr = 2` inside which the elliptic/parabolic/hyperbolic type
/// is numerically ambiguous; classification reports `Indeterminate` there.
pub const TRACE_BAND: f64 = 1e-9;

/// Maximum continuation step for angle lifts.
const LIFT_STEP: f64 = PI / 8.0;

/// An element of the universal cover of `SL2(R)` acting on the line of
/// lifted ray angles: the matrix plus an integer deck index.
///
/// The base lift (`lift_index = 0`) is fixed by continuation of the image
/// angle in the base point, starting from the principal value at angle 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSl2 {
    m: Matrix2<f64>,
    lift_index: i32,
}

impl LiftedSl2 {
    pub fn new(m: Matrix2<f64>, lift_index: i32) -> Result<Self> {
        let det = m.determinant();
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(Error::BadParameter("singular SL2 part".into()));
        }
        if det < 0.0 {
            return Err(Error::BadParameter(
                "orientation-reversing angle: the lifted circle map must be increasing".into(),
            ));
        }
        Ok(LiftedSl2 {
            m: m / det.sqrt(),
            lift_index,
        })
    }

    pub fn rotation(phi: f64, lift_index: i32) -> Self {
        LiftedSl2 {
            m: Matrix2::new(phi.cos(), -phi.sin(), phi.sin(), phi.cos()),
            lift_index,
        }
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.m
    }

    pub fn lift_index(&self) -> i32 {
        self.lift_index
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn with_lift(&self, lift_index: i32) -> Self {
        LiftedSl2 {
            m: self.m,
            lift_index,
        }
    }

    pub fn is_identity_matrix(&self, tol: f64) -> bool {
        (self.m - Matrix2::identity()).norm() <= tol
    }

    /// Image angle of the base lift at `x`, computed by continuation from the
    /// principal value at angle 0, with adaptive steps so that no branch is
    /// ever skipped.
    fn base_image_angle(&self, x: f64) -> f64 {
        let image = |t: f64| {
            let u = Vector2::new(t.cos(), t.sin());
            let w = self.m * u;
            w.y.atan2(w.x)
        };
        let mut t = 0.0_f64;
        let mut y = image(0.0); // principal value in (-pi, pi]
        while (t - x).abs() > 1e-15 {
            let remaining = x - t;
            let mut step = remaining.clamp(-LIFT_STEP, LIFT_STEP);
            // Halve the step until the principal image moves by less than
            // pi/2, then re-align the branch by continuity.
            loop {
                let raw = image(t + step);
                let mut delta = raw - wrap_to_principal(y);
                delta = wrap_to_pm_pi(delta);
                if delta.abs() < PI / 2.0 || step.abs() < 1e-12 {
                    y += delta;
                    t += step;
                    break;
                }
                step *= 0.5;
            }
        }
        y
    }

    /// Displacement `f(x) - x` of the canonical lift at angle `x`.
    pub fn displacement(&self, x: f64) -> f64 {
        self.base_image_angle(x) + 2.0 * PI * self.lift_index as f64 - x
    }

    /// Fixed ray angle of the projected matrix, for `tr >= 2 - band`
    /// (eigenvector of the nonnegative-trace representative).
    fn fixed_ray_angle(&self) -> Result<f64> {
        let m = if self.m.trace() >= 0.0 { self.m } else { -self.m };
        let tr = m.trace();
        if tr < 2.0 - TRACE_BAND {
            return Err(Error::BadParameter("no fixed ray: trace below 2".into()));
        }
        // Eigenvector for the top eigenvalue (parabolic band: the unique one).
        let disc = (tr * tr - 4.0).max(0.0);
        let lam = (tr + disc.sqrt()) / 2.0;
        let a = m[(0, 0)] - lam;
        let b = m[(0, 1)];
        let c = m[(1, 0)];
        let d = m[(1, 1)] - lam;
        // Null vector of [[a, b], [c, d]].
        let v = if a.abs().max(b.abs()) >= c.abs().max(d.abs()) {
            Vector2::new(b, -a)
        } else {
            Vector2::new(d, -c)
        };
        if v.norm() < 1e-14 {
            // The matrix is lam * I within rounding; every ray is fixed.
            return Ok(0.0);
        }
        Ok(v.y.atan2(v.x))
    }

    /// Deck winding at a fixed ray of the projected map: the displacement
    /// there is `2 pi k`; `k = 0` characterizes the distinguished lift with
    /// fixed points.
    pub fn winding_at_fixed_ray(&self) -> Result<i32> {
        let x = self.fixed_ray_angle()?;
        let disp = self.displacement(x);
        let k = (disp / (2.0 * PI)).round();
        if (disp - 2.0 * PI * k).abs() > 1e-6 {
            return Err(Error::NormalFormFailure(
                "displacement at a fixed ray is not a deck translation",
            ));
        }
        Ok(k as i32)
    }

    /// The distinguished lift with fixed points, for `tr >= 2`, `m != I`.
    pub fn distinguished_lift(m: Matrix2<f64>) -> Result<Self> {
        let base = LiftedSl2::new(m, 0)?;
        let k = base.winding_at_fixed_ray()?;
        Ok(base.with_lift(-k))
    }

    /// Inverse element of the universal cover.
    pub fn inverse(&self) -> Self {
        let minv = self.m.try_inverse().expect("det 1");
        let base_inv = LiftedSl2 {
            m: minv,
            lift_index: 0,
        };
        // f(0) = y0; the inverse lift must send y0 back to 0.
        let y0 = self.base_image_angle(0.0) + 2.0 * PI * self.lift_index as f64;
        let back = base_inv.base_image_angle(y0);
        let k = (-back / (2.0 * PI)).round() as i32;
        LiftedSl2 {
            m: minv,
            lift_index: k,
        }
    }
}

fn wrap_to_principal(y: f64) -> f64 {
    let mut w = y % (2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

fn wrap_to_pm_pi(d: f64) -> f64 {
    let mut w = d % (2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    if w < -PI {
        w += 2.0 * PI;
    }
    w
}

/// Displacement of the canonical lift of `h` at angle `x`.
pub fn lifted_displacement(h: &LiftedSl2, x: f64) -> f64 {
    h.displacement(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TubeClass {
    Complete,
    Uniformisable,
    /// Trace within the ambiguity band of 2: the verdict would flip across
    /// the band, so it is reported instead of silently classified.
    Indeterminate,
}

#[derive(Debug, Clone)]
pub struct AngleClassification {
    pub class: TubeClass,
    /// `tr(h) - 2` of the positive-trace representative.
    pub trace_margin: f64,
    /// Deck winding at a fixed ray (`None` for elliptic angles).
    pub winding: Option<i32>,
}

/// Classify a lifted SL2 angle: `Uniformisable` iff `tr(h) >= 2`, `h != I`,
/// and the lift is the distinguished one with fixed points; `Complete`
/// otherwise.
pub fn classify_sl2_angle(h: &LiftedSl2) -> Result<AngleClassification> {
    let tol = 1e-12;
    if h.is_identity_matrix(tol) && h.lift_index() == 0 {
        return Err(Error::TrivialAngle);
    }
    if h.is_identity_matrix(tol) {
        // Nontrivial deck translation: acts freely on the lifted circle.
        return Ok(AngleClassification {
            class: TubeClass::Complete,
            trace_margin: 0.0,
            winding: Some(h.lift_index()),
        });
    }
    let tr = h.trace();
    let margin = tr - 2.0;
    if tr < 2.0 - TRACE_BAND {
        // Elliptic, or trace <= -2: either way the lift acts freely.
        return Ok(AngleClassification {
            class: TubeClass::Complete,
            trace_margin: margin,
            winding: None,
        });
    }
    if margin.abs() < TRACE_BAND {
        return Ok(AngleClassification {
            class: TubeClass::Indeterminate,
            trace_margin: margin,
            winding: h.winding_at_fixed_ray().ok(),
        });
    }
    let k = h.winding_at_fixed_ray()?;
    Ok(AngleClassification {
        class: if k == 0 {
            TubeClass::Uniformisable
        } else {
            TubeClass::Complete
        },
        trace_margin: margin,
        winding: Some(k),
    })
}

/// Uniformisability reading used by the special-tube tests: the trace band is
/// resolved as parabolic (trace exactly 2) instead of `Indeterminate`.
fn uniformisable_reading(h: &LiftedSl2) -> bool {
    if h.is_identity_matrix(1e-12) {
        return false;
    }
    if h.trace() < 2.0 - TRACE_BAND {
        return false;
    }
    matches!(h.winding_at_fixed_ray(), Ok(0))
}

/// A tube: holonomy data `(mu, angle, translation block)` of the generator
/// `g = [[mu^{-1} I_{d-1}, C], [0, mu^{(d-1)/2} B]]`.
#[derive(Debug, Clone)]
pub struct Tube {
    pub dim: usize,
    pub mu: f64,
    pub angle: LiftedSl2,
    /// Translation block, `(d-1) x 2` (the top-right block of the generator).
    pub translation: DMatrix<f64>,
}

impl Tube {
    pub fn new(dim: usize, mu: f64, angle: LiftedSl2, translation: DMatrix<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::BadParameter("tube dimension must be >= 2".into()));
        }
        if mu <= 0.0 {
            return Err(Error::BadParameter("tube mu must be positive".into()));
        }
        if translation.nrows() != dim - 1 || translation.ncols() != 2 {
            return Err(Error::BadParameter(format!(
                "translation block must be {} x 2",
                dim - 1
            )));
        }
        Ok(Tube {
            dim,
            mu,
            angle,
            translation,
        })
    }

    pub fn without_translation(dim: usize, mu: f64, angle: LiftedSl2) -> Result<Self> {
        let translation = DMatrix::zeros(dim - 1, 2);
        Tube::new(dim, mu, angle, translation)
    }

    /// The holonomy generator as a projective map.
    pub fn holonomy(&self) -> ProjMap {
        let d = self.dim;
        let n = d + 1;
        let mut m = DMatrix::zeros(n, n);
        let s = self.mu.powf((d as f64 - 1.0) / 2.0);
        for i in 0..d - 1 {
            m[(i, i)] = 1.0 / self.mu;
        }
        for i in 0..d - 1 {
            for j in 0..2 {
                m[(i, d - 1 + j)] = self.translation[(i, j)];
            }
        }
        let b = self.angle.matrix();
        for i in 0..2 {
            for j in 0..2 {
                m[(d - 1 + i, d - 1 + j)] = s * b[(i, j)];
            }
        }
        ProjMap::new(m).expect("tube holonomy is invertible")
    }

    /// The tube generated by the inverse generator.
    pub fn inverse(&self) -> Tube {
        let g = self.holonomy().inverse();
        tube_normal_form_with_lift(&g, Some(self.angle.inverse()))
            .expect("inverse of a tube generator is a tube generator")
    }

    pub fn classify(&self) -> Result<AngleClassification> {
        classify_sl2_angle(&self.angle)
    }
}

#[derive(Debug, Clone)]
pub struct SpecialCheck {
    pub special: bool,
    /// `mu^{d+1} - mu^{(d+1)/2} tr(B) + 1`, positive for special tubes.
    pub margin: f64,
    /// Smallest eigenvalue of `mu^{(d-1)/2} B` minus `mu^{-1}`.
    pub eigenvalue_gap: f64,
}

/// Special-tube test: the tube must be uniformisable and every eigenvalue of
/// `mu^{(d-1)/2} B` must exceed `mu^{-1}`.
pub fn is_special(t: &Tube) -> Result<SpecialCheck> {
    if !uniformisable_reading(&t.angle) {
        return Err(Error::NotUniformisable);
    }
    let d = t.dim as f64;
    let tr = {
        let raw = t.angle.trace();
        if raw >= 0.0 {
            raw
        } else {
            -raw
        }
    };
    let margin = t.mu.powf(d + 1.0) - t.mu.powf((d + 1.0) / 2.0) * tr + 1.0;
    // Direct eigenvalue comparison (B has real spectrum here, tr >= 2).
    let disc = (tr * tr - 4.0).max(0.0).sqrt();
    let beta_min = (tr - disc) / 2.0;
    let gap = t.mu.powf((d - 1.0) / 2.0) * beta_min - 1.0 / t.mu;
    Ok(SpecialCheck {
        special: gap > 0.0,
        margin,
        eigenvalue_gap: gap,
    })
}

/// The generator (`g` or `g^{-1}`) that satisfies the special criterion.
pub fn special_generator(t: &Tube) -> Result<ProjMap> {
    if is_special(t)?.special {
        return Ok(t.holonomy());
    }
    let inv = t.inverse();
    if is_special(&inv)?.special {
        return Ok(inv.holonomy());
    }
    Err(Error::NotSpecial {
        margin: is_special(t)?.margin,
    })
}

/// The wall of a sector bounded by the codimension-2 sphere: its span and the
/// distinguished ray it contains.
#[derive(Debug, Clone)]
pub struct WallSpan {
    /// Basis of the spanning hyperplane: the `d-1` sphere directions plus the
    /// distinguished ray.
    pub span: Vec<DVector<f64>>,
    /// Unit normal of the spanning hyperplane.
    pub normal: DVector<f64>,
    /// The fixed ray of the generator inside this wall.
    pub marked_ray: Ray,
}

#[derive(Debug, Clone)]
pub struct BlowupData {
    /// Attracting wall `H^+` (contains the top fixed ray).
    pub attracting: WallSpan,
    /// Repelling wall `H^-` (equals `H^+` in the parabolic case).
    pub repelling: WallSpan,
    /// Top fixed ray `x^+`.
    pub x_plus: Ray,
    /// Generators of the boundary wall `conv(S^{d-2}, x^+)`: a basis of the
    /// codimension-2 sphere followed by `x^+`.
    pub boundary_wall: Vec<Ray>,
    /// Whether the SL2 part is parabolic (single invariant wall).
    pub parabolic: bool,
    /// Topological type of the blown-up boundary.
    pub quotient_topology: &'static str,
    /// Eigenvalue data of the normal form: `lambda >= 1`.
    pub lambda: f64,
}

/// Totally geodesic blowup data of a special tube: the normal form basis, the
/// invariant walls, and the attracting ray.
pub fn blowup(t: &Tube) -> Result<BlowupData> {
    let check = is_special(t)?;
    if !check.special {
        return Err(Error::NotSpecial {
            margin: check.margin,
        });
    }
    let d = t.dim;
    let s = t.mu.powf((d as f64 - 1.0) / 2.0);
    let b = if t.angle.trace() >= 0.0 {
        *t.angle.matrix()
    } else {
        -t.angle.matrix()
    };

    // Invariant 2-plane {(Wz, z)}: solve W (s B - mu^{-1} I) = C.
    let sb = b * s - Matrix2::identity() / t.mu;
    let sb_inv = sb
        .try_inverse()
        .ok_or(Error::NormalFormFailure("resonant translation block"))?;
    let mut w = DMatrix::zeros(d - 1, 2);
    for i in 0..d - 1 {
        let row = Vector2::new(t.translation[(i, 0)], t.translation[(i, 1)]);
        let sol = (sb_inv.transpose() * row).transpose();
        w[(i, 0)] = sol[(0, 0)];
        w[(i, 1)] = sol[(0, 1)];
    }

    let tr = b.trace();
    let parabolic = (tr - 2.0).abs() < TRACE_BAND;
    let (u_plus, u_minus, lambda) = if parabolic {
        // Jordan form: unique eigenvector.
        let v = parabolic_eigenvector(&b);
        (v, v, 1.0)
    } else {
        let disc = (tr * tr - 4.0).sqrt();
        let lp = (tr + disc) / 2.0;
        let lm = (tr - disc) / 2.0;
        let vp = eigvec2(&b, lp).ok_or(Error::NormalFormFailure("defective hyperbolic block"))?;
        let vm = eigvec2(&b, lm).ok_or(Error::NormalFormFailure("defective hyperbolic block"))?;
        (vp, vm, lp)
    };

    let lift = |z: Vector2<f64>| -> DVector<f64> {
        // The invariant-plane vector (W z, z) in ambient coordinates.
        let mut v = DVector::zeros(d + 1);
        for i in 0..d - 1 {
            v[i] = w[(i, 0)] * z.x + w[(i, 1)] * z.y;
        }
        v[d - 1] = z.x;
        v[d] = z.y;
        v
    };
    let xp_vec = sign_normalize(lift(u_plus));
    let xm_vec = sign_normalize(lift(u_minus));
    let x_plus = Ray::new(xp_vec.clone())?;
    let x_minus = Ray::new(xm_vec.clone())?;

    // Sphere basis e_1 .. e_{d-1}.
    let mut sphere_basis = Vec::with_capacity(d - 1);
    for i in 0..d - 1 {
        let mut e = DVector::zeros(d + 1);
        e[i] = 1.0;
        sphere_basis.push(e);
    }

    let wall = |marked: &Ray, marked_vec: &DVector<f64>| -> Result<WallSpan> {
        let mut span = sphere_basis.clone();
        span.push(marked_vec.clone());
        let normal = hyperplane_normal(&span)?;
        Ok(WallSpan {
            span,
            normal,
            marked_ray: marked.clone(),
        })
    };
    let attracting = wall(&x_plus, &xp_vec)?;
    let repelling = if parabolic {
        attracting.clone()
    } else {
        wall(&x_minus, &xm_vec)?
    };

    let mut boundary_wall = Vec::with_capacity(d);
    for e in &sphere_basis {
        boundary_wall.push(Ray::new(e.clone())?);
    }
    boundary_wall.push(x_plus.clone());

    Ok(BlowupData {
        attracting,
        repelling,
        x_plus,
        boundary_wall,
        parabolic,
        quotient_topology: "base x circle",
        lambda,
    })
}

fn parabolic_eigenvector(b: &Matrix2<f64>) -> Vector2<f64> {
    let shifted = b - Matrix2::identity();
    // Null vector of the rank-1 (or zero) matrix.
    let r0 = Vector2::new(shifted[(0, 0)], shifted[(0, 1)]);
    let r1 = Vector2::new(shifted[(1, 0)], shifted[(1, 1)]);
    let r = if r0.norm() >= r1.norm() { r0 } else { r1 };
    if r.norm() < 1e-12 {
        return Vector2::new(1.0, 0.0); // b = I within rounding
    }
    Vector2::new(r.y, -r.x).normalize()
}

fn eigvec2(b: &Matrix2<f64>, lam: f64) -> Option<Vector2<f64>> {
    let m = b - Matrix2::identity() * lam;
    let r0 = Vector2::new(m[(0, 0)], m[(0, 1)]);
    let r1 = Vector2::new(m[(1, 0)], m[(1, 1)]);
    let r = if r0.norm() >= r1.norm() { r0 } else { r1 };
    if r.norm() < 1e-14 {
        return None;
    }
    Some(Vector2::new(r.y, -r.x).normalize())
}

fn sign_normalize(mut v: DVector<f64>) -> DVector<f64> {
    let lead = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    if v[lead] < 0.0 {
        v = -v;
    }
    v.normalize()
}

/// Unit normal of the hyperplane spanned by `d` vectors of `R^{d+1}`, by
/// cofactor expansion (the generalized cross product).
fn hyperplane_normal(span: &[DVector<f64>]) -> Result<DVector<f64>> {
    let n = span[0].len();
    if span.len() != n - 1 {
        return Err(Error::NormalFormFailure("wall span has wrong rank"));
    }
    let mut m = DMatrix::zeros(n - 1, n);
    for (i, v) in span.iter().enumerate() {
        m.row_mut(i).copy_from(&v.transpose());
    }
    let mut normal = DVector::zeros(n);
    for i in 0..n {
        let minor = m.clone().remove_column(i);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        normal[i] = sign * minor.determinant();
    }
    let nn = normal.norm();
    if nn < 1e-12 {
        return Err(Error::NormalFormFailure("degenerate wall span"));
    }
    Ok(sign_normalize(normal))
}

/// Extract `(mu, angle, C)` from a map fixing the codimension-2 sphere
/// pointwise in standard position. The lift of the angle is the base lift.
pub fn tube_normal_form(g: &ProjMap) -> Result<Tube> {
    tube_normal_form_with_lift(g, None)
}

fn tube_normal_form_with_lift(g: &ProjMap, lift: Option<LiftedSl2>) -> Result<Tube> {
    let n = g.matrix().nrows();
    if n < 3 {
        return Err(Error::BadParameter("tube maps need ambient dimension >= 2".into()));
    }
    let d = n - 1;
    let m = g.matrix();
    let tol = 1e-9 * m.norm();

    // Lower-left block must vanish.
    for i in d - 1..n {
        for j in 0..d - 1 {
            if m[(i, j)].abs() > tol {
                return Err(Error::NotInFixator("sphere span is not invariant"));
            }
        }
    }
    // Top-left block must be a positive scalar matrix.
    let scal = m[(0, 0)];
    if scal <= 0.0 {
        return Err(Error::NotInFixator(
            "sphere rays are reversed, not fixed (negative scalar)",
        ));
    }
    for i in 0..d - 1 {
        for j in 0..d - 1 {
            let want = if i == j { scal } else { 0.0 };
            if (m[(i, j)] - want).abs() > tol {
                return Err(Error::NotInFixator("sphere is not fixed pointwise"));
            }
        }
    }
    let mu = 1.0 / scal;
    let s = mu.powf((d as f64 - 1.0) / 2.0);
    let b = Matrix2::new(
        m[(d - 1, d - 1)] / s,
        m[(d - 1, d)] / s,
        m[(d, d - 1)] / s,
        m[(d, d)] / s,
    );
    let det_b = b.determinant();
    if (det_b.abs() - 1.0).abs() > 1e-7 {
        return Err(Error::NotInFixator("block scaling is inconsistent"));
    }
    if (b - Matrix2::identity()).norm() < 1e-9 && lift.as_ref().is_none_or(|l| l.lift_index() == 0)
    {
        return Err(Error::TrivialAngle);
    }
    let mut c = DMatrix::zeros(d - 1, 2);
    for i in 0..d - 1 {
        c[(i, 0)] = m[(i, d - 1)];
        c[(i, 1)] = m[(i, d)];
    }
    let angle = match lift {
        Some(l) => l,
        None => LiftedSl2::new(b, 0)?,
    };
    Tube::new(d, mu, angle, c)
}
