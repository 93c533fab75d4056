//! Hyperbolic building blocks and the bulging calculus: hyperboloid-model
//! geometry, bulging matrices, meridian holonomies around corners, the
//! trace/eigenvalue criteria for glued doubles, and the boundary-torus
//! parameter solver.

use nalgebra::{DMatrix, DVector};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::ray::{Chart, ProjMap, Ray};

/// A point of the hyperboloid `q(x) = -1`, `x_{d+1} > 0`, for the standard
/// Lorentz form `q = x_1^2 + ... + x_d^2 - x_{d+1}^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypPoint {
    x: DVector<f64>,
}

/// Standard Lorentz pairing on `R^{d,1}`.
pub fn lorentz_dot(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n - 1 {
        s += a[i] * b[i];
    }
    s - a[n - 1] * b[n - 1]
}

impl HypPoint {
    pub fn new(x: DVector<f64>) -> Result<Self> {
        let q = lorentz_dot(&x, &x);
        if (q + 1.0).abs() > 1e-10 || x[x.len() - 1] <= 0.0 {
            return Err(Error::OffHyperboloid { q });
        }
        Ok(HypPoint { x })
    }

    /// Lift a point of the open Klein ball onto the hyperboloid.
    pub fn from_klein(k: &[f64]) -> Result<Self> {
        let r2: f64 = k.iter().map(|v| v * v).sum();
        if r2 >= 1.0 {
            return Err(Error::OffHyperboloid { q: r2 - 1.0 });
        }
        let s = 1.0 / (1.0 - r2).sqrt();
        let mut x = DVector::zeros(k.len() + 1);
        for (i, v) in k.iter().enumerate() {
            x[i] = s * v;
        }
        x[k.len()] = s;
        Ok(HypPoint { x })
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn ambient_dim(&self) -> usize {
        self.x.len() - 1
    }

    pub fn to_ray(&self) -> Ray {
        Ray::new(self.x.clone()).expect("hyperboloid points are nonzero")
    }

    /// Base point `(0, ..., 0, 1)`.
    pub fn origin(dim: usize) -> Self {
        let mut x = DVector::zeros(dim + 1);
        x[dim] = 1.0;
        HypPoint { x }
    }

    /// Geodesic step of length `s` from `self` in the unit tangent
    /// direction `u` (Lorentz-orthogonal to `self`, `q(u) = 1`).
    pub fn geodesic_step(&self, u: &DVector<f64>, s: f64) -> HypPoint {
        HypPoint {
            x: &self.x * s.cosh() + u * s.sinh(),
        }
    }

    /// Unit tangent at `self` pointing toward `other`.
    pub fn direction_to(&self, other: &HypPoint) -> Result<DVector<f64>> {
        let c = lorentz_dot(&self.x, &other.x);
        let u = &other.x + &self.x * c;
        let n2 = lorentz_dot(&u, &u);
        if n2 <= 1e-24 {
            return Err(Error::BadParameter("coincident hyperbolic points".into()));
        }
        Ok(u / n2.sqrt())
    }
}

/// Hyperbolic distance `arcosh(-<p, q>)`.
pub fn hyp_distance(p: &HypPoint, q: &HypPoint) -> f64 {
    let c = -lorentz_dot(p.coords(), q.coords());
    c.max(1.0).acosh()
}

/// Standard bulging matrix `B_mu = diag(mu^{-1} I_d, mu^d)`: fixes the
/// hyperplane `span{e_1..e_d}` pointwise and the polar point `[e_{d+1}]`.
pub fn bulge_matrix(mu: f64, dim: usize) -> Result<ProjMap> {
    if mu <= 0.0 || !mu.is_finite() {
        return Err(Error::BadParameter(format!("bulging parameter mu = {mu}")));
    }
    let n = dim + 1;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..dim {
        m[(i, i)] = 1.0 / mu;
    }
    m[(dim, dim)] = mu.powi(dim as i32);
    ProjMap::new(m)
}

/// A declared (hyperplane, polar) frame: the columns are a basis of the fixed
/// hyperplane followed by the polar point.
#[derive(Debug, Clone)]
pub struct PolarFrame {
    pub hyperplane_basis: Vec<DVector<f64>>,
    pub polar: DVector<f64>,
}

/// General-position bulging: conjugate the standard matrix by the declared
/// frame.
pub fn bulge_matrix_at(mu: f64, frame: &PolarFrame) -> Result<ProjMap> {
    let n = frame.polar.len();
    if frame.hyperplane_basis.len() != n - 1 {
        return Err(Error::BadParameter(
            "polar frame needs a full hyperplane basis".into(),
        ));
    }
    let mut p = DMatrix::zeros(n, n);
    for (j, v) in frame.hyperplane_basis.iter().enumerate() {
        p.column_mut(j).copy_from(v);
    }
    p.column_mut(n - 1).copy_from(&frame.polar);
    let pm =
        ProjMap::new(p).map_err(|_| Error::BadParameter("degenerate polar frame".into()))?;
    Ok(pm.compose(&bulge_matrix(mu, n - 1)?).compose(&pm.inverse()))
}

/// The rotation `R_theta = diag(I_{d-1}, r_theta)`, acting on the last two
/// coordinates.
pub fn rot_last_two(theta: f64, dim: usize) -> ProjMap {
    let n = dim + 1;
    let mut m = DMatrix::identity(n, n);
    m[(n - 2, n - 2)] = theta.cos();
    m[(n - 2, n - 1)] = -theta.sin();
    m[(n - 1, n - 2)] = theta.sin();
    m[(n - 1, n - 1)] = theta.cos();
    ProjMap::new(m).expect("rotation is invertible")
}

/// Corner data of a bulged double: angle and the two adjacent wall
/// parameters.
#[derive(Debug, Clone, Copy)]
pub struct CornerSpec {
    pub theta: f64,
    pub mu: f64,
    pub mu_prime: f64,
    pub dim: usize,
}

impl CornerSpec {
    pub fn new(theta: f64, mu: f64, mu_prime: f64, dim: usize) -> Result<Self> {
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::BadParameter(format!(
                "corner angle must be in (0, pi/2); got {theta}"
            )));
        }
        if mu <= 0.0 || mu_prime <= 0.0 {
            return Err(Error::BadParameter("wall parameters must be positive".into()));
        }
        if dim < 2 {
            return Err(Error::BadParameter("corner dimension must be >= 2".into()));
        }
        Ok(CornerSpec {
            theta,
            mu,
            mu_prime,
            dim,
        })
    }

    pub fn nu(&self) -> f64 {
        self.mu.powf((self.dim as f64 + 1.0) / 2.0)
    }

    pub fn nu_prime(&self) -> f64 {
        self.mu_prime.powf((self.dim as f64 + 1.0) / 2.0)
    }
}

/// Meridian holonomy around the corner: `R_theta B_mu R_theta B_{mu'}^{-1}`.
pub fn meridian_holonomy(c: &CornerSpec) -> ProjMap {
    let r = rot_last_two(c.theta, c.dim);
    let b = bulge_matrix(c.mu, c.dim).expect("mu > 0");
    let bp_inv = bulge_matrix(c.mu_prime, c.dim).expect("mu' > 0").inverse();
    r.compose(&b).compose(&r).compose(&bp_inv)
}

/// The trace of the SL2 angle of the meridian:
/// `t = cos^2(theta)(nu/nu' + nu'/nu) - sin^2(theta)(nu nu' + 1/(nu nu'))`.
pub fn corner_trace(c: &CornerSpec) -> f64 {
    let (nu, nup) = (c.nu(), c.nu_prime());
    let cs = c.theta.cos().powi(2);
    let sn = c.theta.sin().powi(2);
    cs * (nu / nup + nup / nu) - sn * (nu * nup + 1.0 / (nu * nup))
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    /// `r^2 - r t + 1 - sin^2(theta)(r^2 + 1 + r p + r/p)` for `r = nu/nu'`.
    pub residual_fwd: f64,
    /// Same with `r = nu'/nu`.
    pub residual_bwd: f64,
    /// `r^2 - r t + 1` for the larger ratio; positive for admissible corners.
    pub positivity: f64,
}

/// The special-tube identity of the meridian: with `r` either ratio of the
/// wall weights and `p = nu nu'`,
/// `r^2 - r t + 1 = sin^2(theta)(r^2 + 1 + r p + r/p)`.
pub fn special_identity_check(c: &CornerSpec) -> IdentityReport {
    let t = corner_trace(c);
    let (nu, nup) = (c.nu(), c.nu_prime());
    let p = nu * nup;
    let sn = c.theta.sin().powi(2);
    let eval = |r: f64| r * r - r * t + 1.0 - sn * (r * r + 1.0 + r * p + r / p);
    let r_fwd = nu / nup;
    let r_bwd = nup / nu;
    let r_big = r_fwd.max(r_bwd);
    IdentityReport {
        residual_fwd: eval(r_fwd),
        residual_bwd: eval(r_bwd),
        positivity: r_big * r_big - r_big * t + 1.0,
    }
}

/// The wall eigendata of an admissible corner:
/// `mu_C = max(mu/mu', mu'/mu)`, `lambda_C = t/2 + sqrt(t^2/4 - 1)`.
pub fn corner_lambda_mu(c: &CornerSpec) -> Result<(f64, f64)> {
    let t = corner_trace(c);
    if t < 2.0 {
        return Err(Error::SubcriticalTrace { margin: t - 2.0 });
    }
    let lambda = t / 2.0 + (t * t / 4.0 - 1.0).max(0.0).sqrt();
    let mu_c = (c.mu / c.mu_prime).max(c.mu_prime / c.mu);
    Ok((lambda, mu_c))
}

/// Holonomy generators of the wall that blows up the corner: the corner
/// holonomy block-extended by the identity, and the meridian normal form
/// `diag(mu_C^{-1} I_{d-1}, mu_C^{(d-1)/2} lambda_C, mu_C^{(d-1)/2} / lambda_C)`
/// (parabolic variant when `lambda_C = 1`).
pub fn wall_holonomy_generators(
    base_generators: &[DMatrix<f64>],
    c: &CornerSpec,
) -> Result<Vec<ProjMap>> {
    let (lambda, mu_c) = corner_lambda_mu(c)?;
    let d = c.dim;
    let n = d + 1;
    let mut out = Vec::with_capacity(base_generators.len() + 1);

    // Lorentz form on the corner space R^{d-1}.
    let mut j = DMatrix::identity(d - 1, d - 1);
    if d >= 2 {
        j[(d - 2, d - 2)] = -1.0;
    }
    for g in base_generators {
        if g.nrows() != d - 1 || g.ncols() != d - 1 {
            return Err(Error::BadParameter(format!(
                "corner generators must be {} x {}",
                d - 1,
                d - 1
            )));
        }
        let residual = (g.transpose() * &j * g - &j).norm();
        if residual > 1e-8 * (1.0 + g.norm().powi(2)) {
            return Err(Error::NotLorentz { residual });
        }
        let mut m = DMatrix::identity(n, n);
        for i in 0..d - 1 {
            for k in 0..d - 1 {
                m[(i, k)] = g[(i, k)];
            }
        }
        out.push(ProjMap::new(m)?);
    }

    let s = mu_c.powf((d as f64 - 1.0) / 2.0);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..d - 1 {
        m[(i, i)] = 1.0 / mu_c;
    }
    m[(d - 1, d - 1)] = s * lambda;
    m[(d, d)] = s / lambda;
    if (lambda - 1.0).abs() < 1e-12 {
        m[(d - 1, d)] = 1.0;
    }
    out.push(ProjMap::new(m)?);
    Ok(out)
}

/// Parameters of a boundary-torus family: `a > 1`, `b > 3`,
/// `1 < c <= -2 + b^2 / 2`.
#[derive(Debug, Clone, Copy)]
pub struct ParamTriple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ParamTriple {
    // Negated comparisons keep NaN inputs on the rejection path.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn membership(&self) -> std::result::Result<(), String> {
        if !(self.a > 1.0) {
            return Err(format!("a must exceed 1 (got {})", self.a));
        }
        if !(self.b > 3.0) {
            return Err(format!("b must exceed 3 (got {})", self.b));
        }
        if !(self.c > 1.0) {
            return Err(format!("c must exceed 1 (got {})", self.c));
        }
        let cap = -2.0 + self.b * self.b / 2.0;
        if !(self.c <= cap) {
            return Err(format!("c must be at most -2 + b^2/2 = {cap} (got {})", self.c));
        }
        Ok(())
    }

    /// Distance to the open boundary pieces `b = 3` and `c = -2 + b^2/2`.
    pub fn boundary_margins(&self) -> (f64, f64) {
        (self.b - 3.0, -2.0 + self.b * self.b / 2.0 - self.c)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TorusParams {
    /// Corner length `2 ln a`.
    pub ell: f64,
    /// The unique `d > 1` with `d^2 + d^{-2} = (cos^2 t (b^2+b^{-2}) - (c+c^{-1})) / sin^2 t`.
    pub dval: f64,
    pub mu: f64,
    pub mu_prime: f64,
    /// `cos^2 theta (b^2 + b^{-2}) - sin^2 theta (d^2 + d^{-2}) = c + 1/c`.
    pub t: f64,
    /// `t/2 + sqrt(t^2/4 - 1) = c`.
    pub lambda: f64,
}

/// Solve the boundary-torus parameters: `ell = 2 ln a`, `mu = sqrt(b d)`,
/// `mu' = sqrt(d / b)` with `d > 1` from the displayed quadratic.
pub fn solve_torus_params(p: &ParamTriple, theta: f64) -> Result<TorusParams> {
    p.membership().map_err(Error::OutsidePolytope)?;
    let cs = theta.cos().powi(2);
    let sn = theta.sin().powi(2);
    if sn <= 0.0 {
        return Err(Error::Infeasible("theta must be positive".into()));
    }
    let s = (cs * (p.b * p.b + 1.0 / (p.b * p.b)) - (p.c + 1.0 / p.c)) / sn;
    if s <= 2.0 {
        return Err(Error::Infeasible(format!(
            "no d > 1 solves d^2 + d^-2 = {s} (needs > 2); increase cos^2 theta"
        )));
    }
    let d2 = s / 2.0 + (s * s / 4.0 - 1.0).sqrt();
    let dval = d2.sqrt();
    let mu = (p.b * dval).sqrt();
    let mu_prime = (dval / p.b).sqrt();
    let t = cs * (p.b * p.b + 1.0 / (p.b * p.b)) - sn * (d2 + 1.0 / d2);
    let lambda = t / 2.0 + (t * t / 4.0 - 1.0).max(0.0).sqrt();
    Ok(TorusParams {
        ell: 2.0 * p.a.ln(),
        dval,
        mu,
        mu_prime,
        t,
        lambda,
    })
}

/// The two commuting diagonal boundary-torus matrices
/// `A = diag(a, a^{-1}, 1, 1)` and `B = diag(b^{-1}, b^{-1}, b c, b c^{-1})`.
pub fn boundary_torus_matrices(p: &ParamTriple) -> Result<(ProjMap, ProjMap)> {
    p.membership().map_err(Error::OutsidePolytope)?;
    let a = ProjMap::from_rows(&[
        vec![p.a, 0.0, 0.0, 0.0],
        vec![0.0, 1.0 / p.a, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ])?;
    let b = ProjMap::from_rows(&[
        vec![1.0 / p.b, 0.0, 0.0, 0.0],
        vec![0.0, 1.0 / p.b, 0.0, 0.0],
        vec![0.0, 0.0, p.b * p.c, 0.0],
        vec![0.0, 0.0, 0.0, p.b / p.c],
    ])?;
    Ok((a, b))
}

/// A geodesic line of `H^2`, encoded by its unit spacelike Lorentz normal.
#[derive(Debug, Clone)]
pub struct HypLine {
    normal: DVector<f64>,
}

impl HypLine {
    pub fn from_normal(n: DVector<f64>) -> Result<Self> {
        let q = lorentz_dot(&n, &n);
        if q <= 1e-12 {
            return Err(Error::BadParameter("line normal must be spacelike".into()));
        }
        Ok(HypLine {
            normal: n / q.sqrt(),
        })
    }

    /// Line through `p` with unit tangent `u` (in `T_p H^2`): the normal is
    /// the Lorentz-orthogonal of `p` and `u`.
    pub fn through(p: &HypPoint, u: &DVector<f64>) -> Result<Self> {
        let x = p.coords();
        // Lorentz cross product (gives a vector orthogonal to both).
        let n = DVector::from_column_slice(&[
            x[1] * u[2] - x[2] * u[1],
            x[2] * u[0] - x[0] * u[2],
            -(x[0] * u[1] - x[1] * u[0]),
        ]);
        HypLine::from_normal(n)
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.normal
    }

    /// Bulging matrix along this line: homothety `1/mu` on the plane of the
    /// line, `mu^2` on its Lorentz-orthogonal.
    pub fn bulge(&self, mu: f64) -> Result<ProjMap> {
        if mu <= 0.0 {
            return Err(Error::BadParameter("bulging parameter must be positive".into()));
        }
        let n = &self.normal;
        let dim = n.len();
        let mut jn = n.clone();
        jn[dim - 1] = -jn[dim - 1];
        // Projection onto the normal direction: P x = <x, n> n.
        let p = n * jn.transpose();
        let m = (DMatrix::identity(dim, dim) - &p) / mu + &p * (mu * mu);
        ProjMap::new(m)
    }

    /// Hyperbolic reflection across this line.
    pub fn reflection(&self) -> ProjMap {
        let n = &self.normal;
        let dim = n.len();
        let mut jn = n.clone();
        jn[dim - 1] = -jn[dim - 1];
        let m = DMatrix::identity(dim, dim) - n * jn.transpose() * 2.0;
        ProjMap::new(m).expect("reflections are invertible")
    }
}

/// Rotation of `H^2` by `angle` around the point `v`.
pub fn rotation_about(v: &HypPoint, angle: f64) -> ProjMap {
    let x = v.coords();
    let dim = x.len();
    // Lorentz-orthonormal tangent frame at v.
    let mut u1 = DVector::zeros(dim);
    u1[0] = 1.0;
    let c = lorentz_dot(&u1, x);
    u1 = &u1 + x * c;
    u1 /= lorentz_dot(&u1, &u1).sqrt();
    let mut u2 = DVector::zeros(dim);
    u2[1] = 1.0;
    let c1 = lorentz_dot(&u2, x);
    u2 = &u2 + x * c1;
    let c2 = lorentz_dot(&u2, &u1);
    u2 -= &u1 * c2;
    u2 /= lorentz_dot(&u2, &u2).sqrt();

    // R = cos(a)(P1 + P2) + sin(a)(u2 w1 - u1 w2) + v-part, assembled from
    // the frame F = [u1 u2 v] with F^{-1} = diag(1,1,-1) F^T J.
    let mut f = DMatrix::zeros(dim, dim);
    f.column_mut(0).copy_from(&u1);
    f.column_mut(1).copy_from(&u2);
    f.column_mut(2).copy_from(x);
    let mut block = DMatrix::identity(dim, dim);
    block[(0, 0)] = angle.cos();
    block[(0, 1)] = -angle.sin();
    block[(1, 0)] = angle.sin();
    block[(1, 1)] = angle.cos();
    let mut jft = f.transpose();
    for i in 0..dim {
        for j in 0..dim {
            let mut s = jft[(i, j)];
            if j == dim - 1 {
                s = -s;
            }
            if i == dim - 1 {
                s = -s;
            }
            jft[(i, j)] = s;
        }
    }
    ProjMap::new(&f * block * jft).expect("rotation is invertible")
}

#[derive(Debug, Clone)]
pub struct RhoVerdict {
    /// Whether the holonomy is diagonalizable with three real eigenvalues
    /// ordered `mu_1/mu_2 < mu < mu'`.
    pub pass: bool,
    pub eigenvalues: Vec<f64>,
    pub vertex_eigenvalue: f64,
    pub vertex_residual: f64,
}

/// Bulged sector holonomy `rho = B_{l2,mu2} R_{2 theta} B_{l1,mu1}^{-1}` for
/// two lines through `v` at angle `theta`, with its eigen verdict.
pub fn guiding_rho(
    theta: f64,
    mu1: f64,
    mu2: f64,
    l1: &HypLine,
    l2: &HypLine,
    v: &HypPoint,
) -> Result<(ProjMap, RhoVerdict)> {
    let b2 = l2.bulge(mu2)?;
    let b1_inv = l1.bulge(mu1)?.inverse();
    let rot = rotation_about(v, 2.0 * theta);
    let rho = b2.compose(&rot).compose(&b1_inv);

    let split = crate::eigen::eigen_split(&rho);
    let all_real = split.all_real();
    let vals = split.real_values();
    let gv = rho.apply_vec(v.coords());
    let vertex_eigenvalue = gv.dot(v.coords()) / v.coords().dot(v.coords());
    let vertex_residual = (gv - v.coords() * vertex_eigenvalue).norm();
    let distinct = vals.len() == 3
        && vals
            .windows(2)
            .all(|w| (w[0] - w[1]).abs() > 1e-9 * (1.0 + w[0].abs()));
    let smallest_is_vertex = all_real
        && !vals.is_empty()
        && (vals[vals.len() - 1] - vertex_eigenvalue).abs()
            < 1e-6 * (1.0 + vertex_eigenvalue.abs());
    Ok((
        rho,
        RhoVerdict {
            pass: all_real && distinct && smallest_is_vertex && vertex_residual < 1e-8,
            eigenvalues: vals,
            vertex_eigenvalue,
            vertex_residual,
        },
    ))
}

/// Corner record of a constructed polygon: vertex index, realized interior
/// angle, indices of the two adjacent edges.
#[derive(Debug, Clone)]
pub struct PolygonCorner {
    pub vertex: usize,
    pub angle: f64,
    pub edges: (usize, usize),
}

/// Compact convex hyperbolic polygon realizing the requested interior angles
/// (regular when the angles are all equal), returned in the Klein model.
///
/// The general-angle construction places the vertices with Gauss-Newton
/// refinement starting from the regular initializer; failure to converge
/// reports `NotRealizable`.
pub fn hyperbolic_polygon(angles: &[f64]) -> Result<(ConvexBody, Vec<PolygonCorner>)> {
    let n = angles.len();
    if n < 3 {
        return Err(Error::NotRealizable("a polygon needs >= 3 angles".into()));
    }
    if angles.iter().any(|&a| !(a > 0.0 && a < std::f64::consts::PI)) {
        return Err(Error::NotRealizable(
            "each interior angle must lie in (0, pi)".into(),
        ));
    }
    let total: f64 = angles.iter().sum();
    let cap = (n as f64 - 2.0) * std::f64::consts::PI;
    if total >= cap {
        return Err(Error::NotRealizable(format!(
            "angle sum {total:.6} violates the Gauss-Bonnet bound {cap:.6}"
        )));
    }

    let equal = angles
        .iter()
        .all(|&a| (a - angles[0]).abs() < 1e-13);
    let points = if equal {
        regular_polygon_points(n, angles[0])
    } else {
        general_polygon_points(angles)?
    };

    // Verify realized angles.
    let realized = polygon_angles(&points);
    for (i, (&want, got)) in angles.iter().zip(realized.iter()).enumerate() {
        if (want - got).abs() > 1e-8 {
            return Err(Error::NotRealizable(format!(
                "vertex {i}: requested {want:.9}, realized {got:.9}"
            )));
        }
    }

    let chart = Chart::standard(2);
    let rays: Vec<Ray> = points.iter().map(|p| p.to_ray()).collect();
    let body = ConvexBody::polygon(rays, chart)?;
    let corners = (0..n)
        .map(|i| PolygonCorner {
            vertex: i,
            angle: realized[i],
            edges: ((i + n - 1) % n, i),
        })
        .collect();
    Ok((body, corners))
}

/// Regular n-gon with interior angle `theta`: circumradius from
/// `cosh R = cot(pi/n) cot(theta/2)`.
fn regular_polygon_points(n: usize, theta: f64) -> Vec<HypPoint> {
    let cosh_r = (std::f64::consts::PI / n as f64).tan().recip() * (theta / 2.0).tan().recip();
    let r = cosh_r.acosh();
    polar_points(&vec![r; n], &uniform_phis(n))
}

fn uniform_phis(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64)
        .collect()
}

fn polar_points(radii: &[f64], phis: &[f64]) -> Vec<HypPoint> {
    radii
        .iter()
        .zip(phis)
        .map(|(&r, &phi)| {
            HypPoint::new(DVector::from_column_slice(&[
                r.sinh() * phi.cos(),
                r.sinh() * phi.sin(),
                r.cosh(),
            ]))
            .expect("polar points are on the hyperboloid")
        })
        .collect()
}

fn polygon_angles(points: &[HypPoint]) -> Vec<f64> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let prev = &points[(i + n - 1) % n];
            let next = &points[(i + 1) % n];
            let u = points[i].direction_to(prev).expect("distinct vertices");
            let w = points[i].direction_to(next).expect("distinct vertices");
            lorentz_dot(&u, &w).clamp(-1.0, 1.0).acos()
        })
        .collect()
}

/// Gauss-Newton placement for unequal angles: unknowns are the vertex radii
/// and the central angles (gauge-fixed), residuals the angle errors plus a
/// soft centering term.
fn general_polygon_points(angles: &[f64]) -> Result<Vec<HypPoint>> {
    let n = angles.len();
    let mean = angles.iter().sum::<f64>() / n as f64;
    let init_r = {
        let cosh_r =
            (std::f64::consts::PI / n as f64).tan().recip() * (mean / 2.0).tan().recip();
        cosh_r.max(1.0 + 1e-6).acosh().max(0.05)
    };
    // Unknowns: log-radii (n) and phi increments (n, normalized to sum 2 pi).
    let mut x = DVector::zeros(2 * n);
    for i in 0..n {
        x[i] = init_r.ln();
        x[n + i] = (2.0 * std::f64::consts::PI / n as f64).ln();
    }

    let unpack = |x: &DVector<f64>| -> (Vec<f64>, Vec<f64>) {
        let radii: Vec<f64> = (0..n).map(|i| x[i].exp()).collect();
        let incs: Vec<f64> = (0..n).map(|i| x[n + i].exp()).collect();
        let total: f64 = incs.iter().sum();
        let mut phis = Vec::with_capacity(n);
        let mut acc = 0.0;
        for inc in &incs {
            phis.push(acc);
            acc += inc * 2.0 * std::f64::consts::PI / total;
        }
        (radii, phis)
    };
    let residual = |x: &DVector<f64>| -> DVector<f64> {
        let (radii, phis) = unpack(x);
        let pts = polar_points(&radii, &phis);
        let got = polygon_angles(&pts);
        let mut r = DVector::zeros(n);
        for i in 0..n {
            r[i] = got[i] - angles[i];
        }
        r
    };

    let mut damping = 1e-8;
    for _ in 0..200 {
        let r0 = residual(&x);
        let err = r0.norm();
        if err < 1e-12 {
            break;
        }
        // Numerical Jacobian (central differences).
        let m = r0.len();
        let mut jac = DMatrix::zeros(m, 2 * n);
        let h = 1e-5;
        for j in 0..2 * n {
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let rp = residual(&xp);
            let rm = residual(&xm);
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let jtj = jac.transpose() * &jac + DMatrix::identity(2 * n, 2 * n) * damping;
        let jtr = jac.transpose() * &r0;
        let Some(step) = jtj.lu().solve(&jtr) else {
            return Err(Error::NotRealizable("singular polygon placement system".into()));
        };
        let mut xn = &x - &step;
        // Keep increments within sane bounds.
        for i in 0..2 * n {
            xn[i] = xn[i].clamp(-8.0, 8.0);
        }
        let rn = residual(&xn);
        if rn.norm() < err {
            x = xn;
            damping = (damping * 0.3).max(1e-12);
        } else {
            damping *= 10.0;
            if damping > 1e6 {
                break;
            }
        }
    }
    let r_final = residual(&x);
    if r_final.rows(0, n).norm() > 1e-9 {
        return Err(Error::NotRealizable(format!(
            "angle placement did not converge (residual {:.3e})",
            r_final.norm()
        )));
    }
    let (radii, phis) = unpack(&x);
    Ok(polar_points(&radii, &phis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::hilbert_distance;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hyperboloid_distance_normal_form() {
        let d = 3;
        let o = HypPoint::origin(d);
        assert_eq!(hyp_distance(&o, &o), 0.0);
        let s = 1.7_f64;
        let p = HypPoint::new(DVector::from_column_slice(&[s.sinh(), 0.0, 0.0, s.cosh()]))
            .unwrap();
        assert_relative_eq!(hyp_distance(&o, &p), s, epsilon = 1e-12);
    }

    #[test]
    fn klein_hilbert_matches_hyperboloid() {
        let ball = ConvexBody::klein_ball(2);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let mut k = [0.0; 2];
            let mut k2 = [0.0; 2];
            loop {
                for v in k.iter_mut() {
                    *v = rng.random_range(-0.95..0.95);
                }
                if k.iter().map(|v| v * v).sum::<f64>() < 0.9 {
                    break;
                }
            }
            loop {
                for v in k2.iter_mut() {
                    *v = rng.random_range(-0.95..0.95);
                }
                if k2.iter().map(|v| v * v).sum::<f64>() < 0.9 {
                    break;
                }
            }
            let p = HypPoint::from_klein(&k).unwrap();
            let q = HypPoint::from_klein(&k2).unwrap();
            let dh = hyp_distance(&p, &q);
            let dk = hilbert_distance(&ball, &p.to_ray(), &q.to_ray()).unwrap();
            assert_relative_eq!(dh, dk, epsilon = 1e-9);
        }
    }

    #[test]
    fn bulge_matrix_values() {
        let b = bulge_matrix(1.0, 3).unwrap();
        assert!((b.matrix() - DMatrix::identity(4, 4)).norm() < 1e-14);
        let b = bulge_matrix(2.0, 3).unwrap();
        assert_relative_eq!(b.matrix()[(0, 0)], 0.5, epsilon = 1e-14);
        assert_relative_eq!(b.matrix()[(3, 3)], 8.0, epsilon = 1e-14);
        assert_relative_eq!(b.det(), 1.0, epsilon = 1e-12);
        // B_mu B_{1/mu} = I.
        let prod = b.compose(&bulge_matrix(0.5, 3).unwrap());
        assert!((prod.matrix() - DMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn general_position_bulge_fixes_the_declared_frame() {
        // Conjugated bulging: the declared hyperplane is fixed pointwise with
        // eigenvalue 1/mu, the polar with mu^d.
        let frame = PolarFrame {
            hyperplane_basis: vec![
                DVector::from_column_slice(&[1.0, 0.2, 0.0, 0.1]),
                DVector::from_column_slice(&[0.0, 1.0, 0.3, 0.0]),
                DVector::from_column_slice(&[0.2, 0.0, 1.0, 0.4]),
            ],
            polar: DVector::from_column_slice(&[0.1, 0.3, -0.2, 1.0]),
        };
        let mu = 1.7_f64;
        let b = bulge_matrix_at(mu, &frame).unwrap();
        for h in &frame.hyperplane_basis {
            let img = b.apply_vec(h);
            assert!((img - h * (1.0 / mu)).norm() < 1e-10);
        }
        let img = b.apply_vec(&frame.polar);
        assert!((img - &frame.polar * mu.powi(3)).norm() < 1e-9);
        assert_relative_eq!(b.det().abs(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn meridian_holonomy_structure() {
        // mu = mu' = 1: pure rotation by 2 theta.
        let c = CornerSpec::new(0.6, 1.0, 1.0, 3).unwrap();
        let g = meridian_holonomy(&c);
        let r2 = rot_last_two(1.2, 3);
        assert!((g.matrix() - r2.matrix()).norm() < 1e-12);

        // Top-left block is (mu'/mu) I.
        let c = CornerSpec::new(0.7, 1.9, 0.4, 3).unwrap();
        let g = meridian_holonomy(&c);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 0.4 / 1.9 } else { 0.0 };
                assert_relative_eq!(g.matrix()[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn corner_trace_matches_matrix_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let c = CornerSpec::new(
                rng.random_range(0.05..1.5),
                rng.random_range(0.3..3.0),
                rng.random_range(0.3..3.0),
                3,
            )
            .unwrap();
            let g = meridian_holonomy(&c);
            // SL2 angle block: bottom-right 2x2 over (mu/mu')^{(d-1)/2}.
            let ratio: f64 = c.mu / c.mu_prime;
            let s = ratio.powf((c.dim as f64 - 1.0) / 2.0);
            let tr = (g.matrix()[(2, 2)] + g.matrix()[(3, 3)]) / s;
            assert_relative_eq!(corner_trace(&c), tr, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn worked_corner_trace_and_lambda() {
        // theta = pi/4, nu = 3, nu' = 1/3 in dimension 3: mu = sqrt 3.
        let c = CornerSpec::new(
            std::f64::consts::FRAC_PI_4,
            3.0_f64.sqrt(),
            1.0 / 3.0_f64.sqrt(),
            3,
        )
        .unwrap();
        assert_relative_eq!(c.nu(), 3.0, epsilon = 1e-12);
        assert_relative_eq!(c.nu_prime(), 1.0 / 3.0, epsilon = 1e-12);
        let t = corner_trace(&c);
        assert_relative_eq!(t, 0.5 * (9.0 + 1.0 / 9.0) - 1.0, epsilon = 1e-12);
        let (lambda, mu_c) = corner_lambda_mu(&c).unwrap();
        assert_relative_eq!(mu_c, 3.0, epsilon = 1e-12);
        assert_relative_eq!(lambda + 1.0 / lambda, t, epsilon = 1e-10);
        // Identity: r = 9, both sides equal 50.
        let rep = special_identity_check(&c);
        assert!(rep.residual_fwd.abs() < 1e-10);
        assert_relative_eq!(rep.positivity, 50.0, epsilon = 1e-10);
    }

    #[test]
    fn identity_residual_vanishes_randomly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let c = CornerSpec::new(
                rng.random_range(0.05..1.5),
                rng.random_range(0.25..4.0),
                rng.random_range(0.25..4.0),
                3,
            )
            .unwrap();
            let rep = special_identity_check(&c);
            assert!(rep.residual_fwd.abs() < 1e-10, "{:?}", rep);
            assert!(rep.residual_bwd.abs() < 1e-10, "{:?}", rep);
            assert!(rep.positivity > 0.0);
        }
    }

    #[test]
    fn subcritical_trace_is_an_error() {
        let c = CornerSpec::new(0.8, 1.0, 1.0, 3).unwrap();
        assert!(matches!(
            corner_lambda_mu(&c),
            Err(Error::SubcriticalTrace { .. })
        ));
    }

    #[test]
    fn wall_generators_commute_and_have_the_right_spectrum() {
        let c = CornerSpec::new(
            std::f64::consts::FRAC_PI_4,
            3.0_f64.sqrt(),
            1.0 / 3.0_f64.sqrt(),
            3,
        )
        .unwrap();
        // Nontrivial corner holonomy in SO(1,1).
        let s = 0.8_f64;
        let gamma = DMatrix::from_row_slice(2, 2, &[s.cosh(), s.sinh(), s.sinh(), s.cosh()]);
        let gens = wall_holonomy_generators(&[gamma], &c).unwrap();
        assert_eq!(gens.len(), 2);
        let ab = gens[0].compose(&gens[1]);
        let ba = gens[1].compose(&gens[0]);
        assert!((ab.matrix() - ba.matrix()).norm() < 1e-12);

        let (lambda, mu_c) = corner_lambda_mu(&c).unwrap();
        let m = gens[1].matrix();
        assert_relative_eq!(m[(0, 0)], 1.0 / mu_c, epsilon = 1e-12);
        assert_relative_eq!(m[(2, 2)], mu_c * lambda, epsilon = 1e-12);
        assert_relative_eq!(m[(3, 3)], mu_c / lambda, epsilon = 1e-12);
    }

    #[test]
    fn non_lorentz_generator_rejected() {
        let c = CornerSpec::new(0.5, 2.0, 0.5, 3).unwrap();
        let bad = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        assert!(matches!(
            wall_holonomy_generators(&[bad], &c),
            Err(Error::NotLorentz { .. })
        ));
    }

    #[test]
    fn torus_solver_worked_instance() {
        let p = ParamTriple {
            a: 1.01,
            b: 4.0,
            c: 2.0,
        };
        let sol = solve_torus_params(&p, std::f64::consts::FRAC_PI_6).unwrap();
        assert_relative_eq!(sol.ell, 2.0 * 1.01_f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(sol.t, 2.5, epsilon = 1e-12);
        assert_relative_eq!(sol.lambda, 2.0, epsilon = 1e-12);
        // Round-trip identities.
        assert_relative_eq!(sol.mu / sol.mu_prime, 4.0, epsilon = 1e-12);
        assert_relative_eq!(sol.mu * sol.mu_prime, sol.dval, epsilon = 1e-12);
        // Regression constants, from the closed-form quadratic.
        assert_relative_eq!(sol.dval, 6.1775, epsilon = 1e-4);
        assert_relative_eq!(sol.mu, 4.9709, epsilon = 1e-4);
        assert_relative_eq!(sol.mu_prime, 1.2427, epsilon = 1e-4);
    }

    #[test]
    fn feasibility_margin_shrinks_toward_the_angle_wall() {
        // c on the closed wall c = -2 + b^2/2: raising theta toward pi/4
        // shrinks the feasibility margin s - 2 monotonically, but the cap on
        // c is a sufficient bound, not a tight one: the limit margin at
        // theta = pi/4 is (b^2 + b^-2) - 2(c + 1/c) - 2 > 0, about 1.73 for
        // b = 4. Solutions exist on the whole closed wall.
        let b = 4.0_f64;
        let p = ParamTriple {
            a: 1.2,
            b,
            c: -2.0 + b * b / 2.0,
        };
        let margin = |theta: f64| {
            let cs = theta.cos().powi(2);
            let sn = theta.sin().powi(2);
            (cs * (b * b + 1.0 / (b * b)) - (p.c + 1.0 / p.c)) / sn - 2.0
        };
        let limit = (b * b + 1.0 / (b * b)) - 2.0 * (p.c + 1.0 / p.c) - 2.0;
        let mut last = f64::INFINITY;
        for &eps in &[0.3, 0.1, 0.03, 0.01, 0.003, 0.001, 0.0003, 0.0001] {
            let theta = std::f64::consts::FRAC_PI_4 - eps;
            let m = margin(theta);
            assert!(m > limit, "margin stays above the pi/4 limit");
            assert!(m < last, "margin shrinks toward the angle wall");
            // The solver agrees with the closed form.
            let sol = solve_torus_params(&p, theta).unwrap();
            let s = sol.dval.powi(2) + sol.dval.powi(-2);
            assert_relative_eq!(s - 2.0, m, epsilon = 1e-9, max_relative = 1e-9);
            last = m;
        }
        assert!((last - limit).abs() < 0.05, "margin approaches {limit} (got {last})");
        assert!(limit > 1.7 && limit < 1.8);
    }

    #[test]
    fn polytope_membership_is_enforced() {
        let p = ParamTriple {
            a: 1.01,
            b: 3.0,
            c: 2.0,
        };
        assert!(matches!(
            solve_torus_params(&p, 0.5),
            Err(Error::OutsidePolytope(_))
        ));
        let p = ParamTriple {
            a: 1.01,
            b: 4.0,
            c: 6.1,
        };
        assert!(matches!(
            solve_torus_params(&p, 0.5),
            Err(Error::OutsidePolytope(_))
        ));
    }

    #[test]
    fn torus_matrices_are_unimodular_and_commute() {
        let p = ParamTriple {
            a: 2.0,
            b: 4.0,
            c: 2.0,
        };
        let (a, b) = boundary_torus_matrices(&p).unwrap();
        assert_relative_eq!(a.matrix()[(0, 0)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(b.matrix()[(0, 0)], 0.25, epsilon = 1e-12);
        assert_relative_eq!(b.matrix()[(2, 2)], 8.0, epsilon = 1e-12);
        assert_relative_eq!(b.matrix()[(3, 3)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(a.det(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(b.det(), 1.0, epsilon = 1e-12);
        let ab = a.compose(&b);
        let ba = b.compose(&a);
        assert!((ab.matrix() - ba.matrix()).norm() < 1e-12);
    }

    #[test]
    fn guiding_rho_verdicts() {
        let v = HypPoint::origin(2);
        let u1 = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let theta = std::f64::consts::PI / 5.0;
        let u2 = DVector::from_column_slice(&[theta.cos(), theta.sin(), 0.0]);
        let l1 = HypLine::through(&v, &u1).unwrap();
        let l2 = HypLine::through(&v, &u2).unwrap();

        // Unbulged: pure rotation, complex spectrum, verdict fail.
        let (rho, verdict) = guiding_rho(theta, 1.0, 1.0, &l1, &l2, &v).unwrap();
        assert!(!verdict.pass);
        let rot = rotation_about(&v, 2.0 * theta);
        assert!((rho.matrix() - rot.matrix()).norm() < 1e-10);

        // Strong bulging: three real eigenvalues, vertex carries mu1/mu2.
        let (_, verdict) = guiding_rho(theta, 0.1, 10.0, &l1, &l2, &v).unwrap();
        assert!(verdict.pass, "{verdict:?}");
        assert_relative_eq!(verdict.vertex_eigenvalue, 0.01, epsilon = 1e-9);
    }

    #[test]
    fn guiding_rho_verdict_is_isometry_invariant() {
        // Conjugating the whole configuration by an isometry of the
        // hyperbolic plane must not change the verdict or the eigenvalues.
        let theta = std::f64::consts::PI / 5.0;
        let base_v = HypPoint::origin(2);
        let u1 = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let u2 = DVector::from_column_slice(&[theta.cos(), theta.sin(), 0.0]);
        let l1 = HypLine::through(&base_v, &u1).unwrap();
        let l2 = HypLine::through(&base_v, &u2).unwrap();
        let (_, base_verdict) = guiding_rho(theta, 0.15, 8.0, &l1, &l2, &base_v).unwrap();
        assert!(base_verdict.pass);

        // An isometry moving the configuration: rotate about a shifted point.
        let other = HypPoint::from_klein(&[0.4, -0.2]).unwrap();
        let iso = rotation_about(&other, 1.1);
        let conj = |l: &HypLine| {
            // Transport the line by mapping its normal with the inverse
            // transpose (Lorentz isometries: same matrix works through J).
            let m = iso.matrix();
            HypLine::from_normal(m * l.normal()).unwrap()
        };
        let moved_v = HypPoint::new(iso.apply_vec(base_v.coords())).unwrap();
        let (_, verdict) =
            guiding_rho(theta, 0.15, 8.0, &conj(&l1), &conj(&l2), &moved_v).unwrap();
        assert!(verdict.pass);
        for (a, b) in base_verdict.eigenvalues.iter().zip(&verdict.eigenvalues) {
            assert_relative_eq!(a, b, epsilon = 1e-8, max_relative = 1e-8);
        }
        assert_relative_eq!(
            verdict.vertex_eigenvalue,
            base_verdict.vertex_eigenvalue,
            epsilon = 1e-9
        );
    }

    #[test]
    fn regular_polygon_realizes_angles() {
        let angles = vec![std::f64::consts::PI / 5.0; 4];
        let (body, corners) = hyperbolic_polygon(&angles).unwrap();
        assert_eq!(body.vertices().len(), 4);
        for c in &corners {
            assert_relative_eq!(c.angle, std::f64::consts::PI / 5.0, epsilon = 1e-8);
        }
        // All vertices strictly inside the Klein disk.
        for v in body.vertices() {
            let rep = body.chart().rep(v).unwrap();
            assert!(rep[0] * rep[0] + rep[1] * rep[1] < 1.0);
        }
    }

    #[test]
    fn unequal_angles_are_realized() {
        let angles = vec![0.5, 0.7, 0.6, 0.55];
        let (_, corners) = hyperbolic_polygon(&angles).unwrap();
        for (c, &want) in corners.iter().zip(&angles) {
            assert!((c.angle - want).abs() < 1e-8, "{} vs {want}", c.angle);
        }
    }

    #[test]
    fn gauss_bonnet_obstruction() {
        let angles = vec![std::f64::consts::FRAC_PI_2; 4];
        assert!(matches!(
            hyperbolic_polygon(&angles),
            Err(Error::NotRealizable(_))
        ));
    }
}

