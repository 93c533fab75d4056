//! Desk-scale verification of the arithmetic construction: the quadratic
//! form with an irrational coefficient, the rotation generating the
//! hyperplane pattern, orthogonal 2-planes through dual points, and the
//! ping-pong angle and quasi-geodesic estimates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::ray::ProjMap;

/// Diagonal form `q = x_1^2 + ... + x_d^2 - tau x_{d+1}^2` of signature
/// `(d, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct LorentzForm {
    pub dim: usize,
    pub tau: f64,
}

impl LorentzForm {
    pub fn new(dim: usize, tau: f64) -> Result<Self> {
        if tau <= 0.0 {
            return Err(Error::BadParameter("tau must be positive".into()));
        }
        if dim < 2 {
            return Err(Error::BadParameter("form dimension must be >= 2".into()));
        }
        Ok(LorentzForm { dim, tau })
    }

    pub fn standard(dim: usize) -> Self {
        LorentzForm { dim, tau: 1.0 }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut q = DMatrix::identity(self.dim + 1, self.dim + 1);
        q[(self.dim, self.dim)] = -self.tau;
        q
    }

    pub fn pairing(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            s += a[i] * b[i];
        }
        s - self.tau * a[n] * b[n]
    }

    /// Validate `q(x) = -1`, positive last coordinate.
    pub fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        let q = self.pairing(x, x);
        if (q + 1.0).abs() > 1e-9 || x[self.dim] <= 0.0 {
            return Err(Error::OffHyperboloid { q });
        }
        Ok(())
    }

    /// Hyperboloid point with prescribed spacelike part `y`:
    /// `x_{d+1} = sqrt((1 + |y|^2) / tau)`.
    pub fn lift(&self, y: &[f64]) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim + 1);
        let mut s = 1.0;
        for (i, v) in y.iter().enumerate() {
            x[i] = *v;
            s += v * v;
        }
        x[self.dim] = (s / self.tau).sqrt();
        x
    }

    /// Unit tangent at `p` toward `x` (`x` on the hyperboloid or ideal).
    pub fn direction(&self, p: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        let c = self.pairing(p, x);
        let u = x + p * c;
        let n2 = self.pairing(&u, &u);
        if n2 <= 1e-20 {
            return Err(Error::DegenerateConfiguration("coincident points"));
        }
        Ok(u / n2.sqrt())
    }

    /// Angle at `p` between the directions toward `a` and `b`.
    pub fn angle_at(&self, p: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
        let u = self.direction(p, a)?;
        let w = self.direction(p, b)?;
        Ok(self.pairing(&u, &w).clamp(-1.0, 1.0).acos())
    }

    /// Distance `arcosh(-q(p, x))` for hyperboloid points.
    pub fn distance(&self, p: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(x)?;
        Ok((-self.pairing(p, x)).max(1.0).acosh())
    }
}

/// Distance on the hyperboloid of a general form.
pub fn q_hyp_distance(form: &LorentzForm, p: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
    form.distance(p, x)
}

/// The `pi/k`-rotation around `{x_1 = x_2 = 0}`: rotation block in the first
/// two coordinates, identity elsewhere. An exact isometry of every
/// [`LorentzForm`].
pub fn rotation_rho(k: usize, dim: usize) -> Result<ProjMap> {
    if k < 2 {
        return Err(Error::BadParameter("rotation order k must be >= 2".into()));
    }
    let phi = std::f64::consts::PI / k as f64;
    let n = dim + 1;
    let mut m = DMatrix::identity(n, n);
    m[(0, 0)] = phi.cos();
    m[(0, 1)] = -phi.sin();
    m[(1, 0)] = phi.sin();
    m[(1, 1)] = phi.cos();
    ProjMap::new(m)
}

#[derive(Debug, Clone)]
pub struct TauReport {
    pub tau: f64,
    /// Galois conjugates of tau, trivial embedding first.
    pub conjugates: Vec<f64>,
    pub pass: bool,
    pub detail: String,
}

/// Sign check for the field coefficient at `k = 4`: `tau = sqrt 2` has
/// conjugates `(sqrt 2, -sqrt 2)`, positive under the trivial embedding and
/// negative under the other. A rational `tau` has itself as the only
/// conjugate and fails.
pub fn check_tau(k: usize, tau: f64) -> Result<TauReport> {
    if k != 4 {
        return Err(Error::UnsupportedField);
    }
    let sqrt2 = 2.0_f64.sqrt();
    if (tau - sqrt2).abs() < 1e-12 {
        // Minimal polynomial x^2 - 2: conjugates +-sqrt 2.
        return Ok(TauReport {
            tau,
            conjugates: vec![sqrt2, -sqrt2],
            pass: true,
            detail: "tau = sqrt 2 generates Q(sqrt 2); sigma_2(tau) = -sqrt 2 < 0".into(),
        });
    }
    // Rational-looking tau: conjugate equals itself.
    Ok(TauReport {
        tau,
        conjugates: vec![tau],
        pass: false,
        detail: "tau is fixed by every embedding; the companion form stays indefinite".into(),
    })
}

/// Ping-pong configuration: the hyperplanes `H_j = rho^j H` with
/// `H = {x_1 = 0}`, their double-quadrant sectors, and the separation radius.
#[derive(Debug, Clone)]
pub struct PingPongConfig {
    pub k: usize,
    pub dim: usize,
    pub r_separation: f64,
    pub form: LorentzForm,
    /// Normals of `H_1 .. H_k` (unit spacelike vectors in the x1-x2 plane).
    pub normals: Vec<DVector<f64>>,
    /// Sector functionals: `U_j = { x : (m'_j . x)(m''_j . x) <= 0 }`.
    sector_functionals: Vec<(DVector<f64>, DVector<f64>)>,
}

impl PingPongConfig {
    pub fn new(k: usize, dim: usize, r_separation: f64, form: LorentzForm) -> Result<Self> {
        if k < 2 {
            return Err(Error::BadParameter("k must be >= 2".into()));
        }
        if form.dim != dim {
            return Err(Error::BadParameter("form dimension mismatch".into()));
        }
        let planar = |phi: f64, n: usize| {
            let mut v = DVector::zeros(n + 1);
            v[0] = phi.cos();
            v[1] = phi.sin();
            v
        };
        let step = std::f64::consts::PI / k as f64;
        let mut normals = Vec::with_capacity(k);
        let mut sector_functionals = Vec::with_capacity(k);
        for j in 1..=k {
            let phi = j as f64 * step;
            normals.push(planar(phi, dim));
            sector_functionals.push((
                planar(phi + step / 2.0, dim),
                planar(phi - step / 2.0, dim),
            ));
        }
        Ok(PingPongConfig {
            k,
            dim,
            r_separation,
            form,
            normals,
            sector_functionals,
        })
    }

    /// Membership in the double-quadrant sector `U_j` (1-based `j`).
    pub fn in_sector(&self, j: usize, x: &DVector<f64>) -> bool {
        let (ref a, ref b) = self.sector_functionals[j - 1];
        a.dot(x) * b.dot(x) <= 1e-12 * x.norm().powi(2)
    }

    /// Sampled check that distinct sectors meet only along
    /// `V = {x_1 = x_2 = 0}`: any sampled vector in two sectors must have a
    /// negligible x1-x2 part.
    pub fn sectors_meet_only_in_v<R: Rng>(&self, samples: usize, rng: &mut R) -> bool {
        for _ in 0..samples {
            let mut x: DVector<f64> = DVector::zeros(self.dim + 1);
            for i in 0..=self.dim {
                x[i] = rng.random_range(-1.0..1.0);
            }
            let planar: f64 = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if planar < 1e-6 {
                continue;
            }
            let mut hits = 0;
            for j in 1..=self.k {
                if self.in_sector(j, &x) {
                    hits += 1;
                }
            }
            if hits > 1 {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
pub struct AngleBoundReport {
    pub samples: usize,
    /// max over samples of measured_sine / bound; at most 1 when the law of
    /// cosines estimate holds.
    pub max_ratio: f64,
    pub worst_distance: f64,
    pub worst_sine: f64,
}

/// Sampled verification of the ping-pong angle estimate: configurations of a
/// base point `p`, a far point `q` at distance `>= R`, and a line through `q`
/// making the sector angle `|j - i| pi / k`; the apex-angle sine at `p` obeys
/// `sin <= 2 / (cosh(d(p,q)) sin(|j-i| pi/k))`.
pub fn pingpong_angle_bound<R: Rng>(
    cfg: &PingPongConfig,
    samples: usize,
    rng: &mut R,
) -> Result<AngleBoundReport> {
    let form = &cfg.form;
    let mut max_ratio: f64 = 0.0;
    let mut worst = (0.0, 0.0);
    for _ in 0..samples {
        // Random q on the hyperboloid, random orthonormal tangent pair.
        let mut y = vec![0.0; form.dim];
        for v in y.iter_mut() {
            *v = rng.random_range(-1.5..1.5);
        }
        let q = form.lift(&y);
        let u = random_unit_tangent(form, &q, rng);
        let mut w = random_unit_tangent(form, &q, rng);
        // Orthogonalize w against u.
        let c = form.pairing(&w, &u);
        w = &w - &u * c;
        let n2 = form.pairing(&w, &w);
        if n2 < 1e-10 {
            continue;
        }
        w /= n2.sqrt();

        let gap = rng.random_range(1..cfg.k) as f64;
        let psi = gap * std::f64::consts::PI / cfg.k as f64;
        let dist = cfg.r_separation + rng.random_range(0.0..4.0);

        // p at distance `dist` from q along u; the line через q has direction
        // v at angle psi to u, ideal endpoints q +- v.
        let p = &q * dist.cosh() + &u * dist.sinh();
        let v_dir = &u * psi.cos() + &w * psi.sin();
        for sign in [1.0_f64, -1.0] {
            let xi = &q + &v_dir * sign;
            let angle = form.angle_at(&p, &q, &xi)?;
            let sine = angle.sin().abs();
            let bound = 2.0 / (dist.cosh() * (gap * std::f64::consts::PI / cfg.k as f64).sin());
            let ratio = sine / bound;
            if ratio > max_ratio {
                max_ratio = ratio;
                worst = (dist, sine);
            }
        }
    }
    Ok(AngleBoundReport {
        samples,
        max_ratio,
        worst_distance: worst.0,
        worst_sine: worst.1,
    })
}

fn random_unit_tangent<R: Rng>(form: &LorentzForm, p: &DVector<f64>, rng: &mut R) -> DVector<f64> {
    loop {
        let mut v = DVector::zeros(form.dim + 1);
        for i in 0..=form.dim {
            v[i] = rng.random_range(-1.0..1.0);
        }
        let c = form.pairing(&v, p);
        let mut u = &v + p * c;
        let n2 = form.pairing(&u, &u);
        if n2 > 1e-6 {
            u /= n2.sqrt();
            return u;
        }
    }
}

/// The 2-plane through the dual points of three hyperplanes, orthogonal to
/// all of them when their triple intersection avoids the closed hyperboloid.
#[derive(Debug, Clone)]
pub struct OrthogonalPlane {
    /// Basis of the 2-plane's linear span (3 vectors).
    pub span: Vec<DVector<f64>>,
    /// Signature of the form restricted to the span.
    pub signature: (usize, usize),
    /// Largest orthogonality residual against the three hyperplanes.
    pub residual: f64,
}

/// Hyperplanes are given by their spacelike normals (`q`-duals).
pub fn orthogonal_plane(
    form: &LorentzForm,
    normals: [&DVector<f64>; 3],
) -> Result<Option<OrthogonalPlane>> {
    let n = form.dim + 1;
    let mut m = DMatrix::zeros(n, 3);
    for (j, v) in normals.iter().enumerate() {
        m.column_mut(j).copy_from(*v);
    }
    // Rank check of the span.
    let svd = m.clone().svd(false, false);
    let sv = &svd.singular_values;
    if sv[2] < 1e-10 * sv[0] {
        return Err(Error::DegenerateConfiguration("dual points are coplanar"));
    }

    // Gram matrix of the span; signature must be (2, 1).
    let mut gram = DMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            gram[(i, j)] = form.pairing(normals[i], normals[j]);
        }
    }
    let eig = gram.symmetric_eigen();
    let pos = eig.eigenvalues.iter().filter(|&&l| l > 1e-10).count();
    let neg = eig.eigenvalues.iter().filter(|&&l| l < -1e-10).count();
    if (pos, neg) != (2, 1) {
        return Ok(None);
    }

    // Orthogonality residual at each hyperplane: find the point z where the
    // plane meets the hyperplane inside the hyperboloid, the tangent u along
    // the intersection, and the transverse plane tangent w; orthogonality
    // means w lies in span{z, n_i}.
    let mut residual: f64 = 0.0;
    for (idx, ni) in normals.iter().enumerate() {
        let others: Vec<&DVector<f64>> = (0..3).filter(|&j| j != idx).map(|j| normals[j]).collect();
        let qnn = form.pairing(ni, ni);
        // W = n_i-orthogonal complement within the span (2-dimensional).
        let w1 = others[0] - *ni * (form.pairing(others[0], ni) / qnn);
        let w2 = others[1] - *ni * (form.pairing(others[1], ni) / qnn);
        // Timelike direction of W from the 2x2 Gram eigenproblem.
        let g11 = form.pairing(&w1, &w1);
        let g12 = form.pairing(&w1, &w2);
        let g22 = form.pairing(&w2, &w2);
        let tr = g11 + g22;
        let det = g11 * g22 - g12 * g12;
        let lam_min = tr / 2.0 - (tr * tr / 4.0 - det).max(0.0).sqrt();
        if lam_min >= -1e-12 {
            // The plane does not cross this hyperplane inside the
            // hyperboloid: diagnostic failure.
            return Ok(None);
        }
        // Eigenvector for lam_min.
        let (a, b) = if g12.abs() > 1e-14 {
            (g12, lam_min - g11)
        } else if g11 < g22 {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let mut z = &w1 * a + &w2 * b;
        let qz = form.pairing(&z, &z);
        if qz >= -1e-14 {
            return Ok(None);
        }
        z /= (-qz).sqrt();
        if z[form.dim] < 0.0 {
            z = -z;
        }
        // Tangent along the intersection: the z-orthogonal line of W.
        let mut u = &w1 + &z * form.pairing(&w1, &z);
        if form.pairing(&u, &u).abs() < 1e-12 {
            u = &w2 + &z * form.pairing(&w2, &z);
        }
        let u = &u / form.pairing(&u, &u).max(1e-300).sqrt();
        // Transverse tangent of the plane at z: q-orthogonal to z and u
        // within the span.
        let mut w_t = DVector::zeros(form.dim + 1);
        let mut best = 0.0;
        for cand in normals.iter() {
            let mut c = (*cand).clone();
            c = &c + &z * form.pairing(cand, &z);
            c = &c - &u * form.pairing(&c, &u);
            let nrm = c.norm();
            if nrm > best {
                best = nrm;
                w_t = c;
            }
        }
        if best < 1e-12 {
            return Err(Error::DegenerateConfiguration("flat transverse tangent"));
        }
        w_t /= best;
        // Defect of w_t from span{z, n_i}.
        let mut basis = DMatrix::zeros(form.dim + 1, 2);
        basis.column_mut(0).copy_from(&z);
        basis.column_mut(1).copy_from(*ni);
        let proj = project_onto_span(&basis, &w_t);
        residual = residual.max((&w_t - &proj).norm());
    }
    Ok(Some(OrthogonalPlane {
        span: normals.iter().map(|v| (*v).clone()).collect(),
        signature: (2, 1),
        residual,
    }))
}

fn project_onto_span(basis: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    // Euclidean least squares projection onto the column span.
    let bt = basis.transpose();
    let gram = &bt * basis;
    let rhs = &bt * v;
    match gram.lu().solve(&rhs) {
        Some(c) => basis * c,
        None => DVector::zeros(v.len()),
    }
}

/// A concatenation of geodesic segments: lengths and interior angles between
/// consecutive segments (`pi` means straight).
#[derive(Debug, Clone)]
pub struct Concatenation {
    pub lengths: Vec<f64>,
    pub angles: Vec<f64>,
    /// Optional per-joint side selectors: `cos(twist) >= 0` turns one way,
    /// otherwise the other. Alternating `0, pi` makes a planar zig-zag;
    /// empty keeps every turn on the same side.
    pub twists: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QuasiGeodesicReport {
    /// Smallest `c >= 1` such that every window satisfies
    /// `endpoint distance >= path length / c - c`.
    pub c_fit: f64,
    pub verdict: bool,
    pub total_length: f64,
    pub endpoint_distance: f64,
}

/// Realize the concatenation in the hyperboloid of `form`, measure endpoint
/// distances of all contiguous windows against path lengths, and fit the
/// quasi-geodesic constant. `verdict` is `pass` for the configured `c`.
pub fn quasigeodesic_check(
    form: &LorentzForm,
    path: &Concatenation,
    r_min: f64,
    theta_min: f64,
    c_config: f64,
) -> Result<QuasiGeodesicReport> {
    let n = path.lengths.len();
    if n == 0 {
        return Err(Error::BadConcatenation("no segments".into()));
    }
    if path.angles.len() + 1 != n {
        return Err(Error::BadConcatenation(
            "need exactly one interior angle between consecutive segments".into(),
        ));
    }
    if let Some(&l) = path.lengths.iter().find(|&&l| l < r_min) {
        return Err(Error::BadConcatenation(format!(
            "segment of length {l} below the minimum {r_min}"
        )));
    }
    if let Some(&a) = path.angles.iter().find(|&&a| a < theta_min || a > std::f64::consts::PI) {
        return Err(Error::BadConcatenation(format!(
            "interior angle {a} outside [{theta_min}, pi]"
        )));
    }

    // Each window (i, j) is re-walked from the origin with an orthonormal
    // tangent frame; distances to the origin come from the last coordinate
    // alone and are cancellation-free even for very long windows. The
    // turning normal is invariant under geodesic transport, and the twist
    // picks the side (planar zig-zags alternate 0 and pi).
    let sqrt_tau = form.tau.sqrt();
    let window_distances = |start: usize| -> Vec<f64> {
        let mut out = Vec::with_capacity(n - start);
        let mut p = form.lift(&vec![0.0; form.dim]);
        let mut fwd: DVector<f64> = DVector::zeros(form.dim + 1);
        fwd[0] = 1.0;
        let mut side: DVector<f64> = DVector::zeros(form.dim + 1);
        side[1] = 1.0;
        for i in start..n {
            let (ch, sh) = (path.lengths[i].cosh(), path.lengths[i].sinh());
            let next = &p * ch + &fwd * sh;
            let fwd_next = &p * sh + &fwd * ch;
            p = next;
            fwd = fwd_next;
            out.push((sqrt_tau * p[form.dim]).max(1.0).acosh());
            if i < n - 1 {
                let twist = path.twists.get(i).copied().unwrap_or(0.0);
                let sigma = if twist.cos() >= 0.0 { 1.0 } else { -1.0 };
                let turn = std::f64::consts::PI - path.angles[i];
                let new_fwd = &fwd * turn.cos() + &side * (sigma * turn.sin());
                let new_side = &side * turn.cos() - &fwd * (sigma * turn.sin());
                fwd = new_fwd;
                side = new_side;
            }
        }
        out
    };

    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + path.lengths[i];
    }
    let mut c_fit = 1.0_f64;
    let mut endpoint_distance = 0.0;
    for i in 0..n {
        let dists = window_distances(i);
        for (off, dist) in dists.iter().enumerate() {
            let j = i + off + 1;
            let len = prefix[j] - prefix[i];
            // Smallest c with dist >= len / c - c: c^2 + dist c - len >= 0.
            let c_star = (-dist + (dist * dist + 4.0 * len).sqrt()) / 2.0;
            c_fit = c_fit.max(c_star);
            if i == 0 && j == n {
                endpoint_distance = *dist;
            }
        }
    }
    Ok(QuasiGeodesicReport {
        c_fit,
        verdict: c_fit <= c_config,
        total_length: prefix[n],
        endpoint_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rotation_rho_entries_at_k4() {
        let rho = rotation_rho(4, 3).unwrap();
        let s = 2.0_f64.sqrt() / 2.0;
        assert_relative_eq!(rho.matrix()[(0, 0)], s, epsilon = 1e-12);
        assert_relative_eq!(rho.matrix()[(0, 1)], -s, epsilon = 1e-12);
        assert_relative_eq!(rho.matrix()[(1, 0)], s, epsilon = 1e-12);
        assert_relative_eq!(rho.matrix()[(2, 2)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_rho_order_and_isometry() {
        let k = 4;
        let rho = rotation_rho(k, 3).unwrap();
        let mut power = ProjMap::identity(3);
        for _ in 0..2 * k {
            power = power.compose(&rho);
        }
        assert!((power.matrix() - DMatrix::identity(4, 4)).norm() < 1e-12);
        for tau in [1.0, 2.0_f64.sqrt()] {
            let q = LorentzForm::new(3, tau).unwrap().matrix();
            let res = (rho.matrix().transpose() * &q * rho.matrix() - &q).norm();
            assert!(res < 1e-12, "isometry residual {res}");
        }
    }

    #[test]
    fn tau_sign_check() {
        let rep = check_tau(4, 2.0_f64.sqrt()).unwrap();
        assert!(rep.pass);
        assert_relative_eq!(rep.conjugates[0], 2.0_f64.sqrt(), epsilon = 1e-12);
        assert!(rep.conjugates[1] < 0.0);
        let rep = check_tau(4, 2.0).unwrap();
        assert!(!rep.pass);
        assert!(matches!(check_tau(5, 1.0), Err(Error::UnsupportedField)));
    }

    #[test]
    fn scaled_form_distance_matches_standard() {
        let tau = 2.0_f64.sqrt();
        let f = LorentzForm::new(3, tau).unwrap();
        let std = LorentzForm::standard(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let y1: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y2: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = f.lift(&y1);
            let q = f.lift(&y2);
            // Change of variables x_{d+1} -> sqrt(tau) x_{d+1}.
            let mut ps = p.clone();
            ps[3] *= tau.sqrt();
            let mut qs = q.clone();
            qs[3] *= tau.sqrt();
            assert_relative_eq!(
                f.distance(&p, &q).unwrap(),
                std.distance(&ps, &qs).unwrap(),
                epsilon = 1e-10
            );
            assert_relative_eq!(
                f.distance(&p, &q).unwrap(),
                f.distance(&q, &p).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn orthogonal_plane_through_dual_points() {
        let f = LorentzForm::standard(3);
        let e1 = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]);
        let e2 = DVector::from_column_slice(&[0.0, 1.0, 0.0, 0.0]);
        // A translate of the first hyperplane, pushed off along the x1-axis
        // geodesic: the triple intersection stays spacelike.
        let s = 2.0_f64;
        let h3 = DVector::from_column_slice(&[s.cosh(), 0.0, 0.0, s.sinh()]);
        let plane = orthogonal_plane(&f, [&e1, &e2, &h3]).unwrap().unwrap();
        assert_eq!(plane.signature, (2, 1));
        assert!(plane.residual < 1e-10, "residual {}", plane.residual);
        // A skew configuration with all three normals tilted.
        let h1 = DVector::from_column_slice(&[1.0, 0.1, 0.05, 0.02]);
        let h2 = DVector::from_column_slice(&[-0.2, 1.0, 0.1, 0.05]);
        let plane = orthogonal_plane(&f, [&h1, &h2, &h3]).unwrap().unwrap();
        assert!(plane.residual < 1e-10, "residual {}", plane.residual);
    }

    #[test]
    fn common_point_configurations_are_rejected() {
        let f = LorentzForm::standard(3);
        // Three hyperplanes through a common hyperboloid point: normals all
        // orthogonal to a timelike vector.
        let e1 = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]);
        let e2 = DVector::from_column_slice(&[0.0, 1.0, 0.0, 0.0]);
        let e3 = DVector::from_column_slice(&[0.0, 0.0, 1.0, 0.0]);
        // All contain the origin point (0,0,0,1): triple intersection is
        // spanned by it, which is timelike, so signature fails.
        assert!(orthogonal_plane(&f, [&e1, &e2, &e3]).unwrap().is_none());
    }

    #[test]
    fn worked_angle_bound_value() {
        // R = 5, k = 4, gap 1: bound = 2 / (cosh 5 sin(pi/4)) ~ 0.03811.
        let bound = 2.0 / (5.0_f64.cosh() * (std::f64::consts::PI / 4.0).sin());
        assert_relative_eq!(bound, 0.038113, epsilon = 1e-5);
    }

    #[test]
    fn sampled_angle_bound_holds() {
        let form = LorentzForm::new(3, 2.0_f64.sqrt()).unwrap();
        let cfg = PingPongConfig::new(4, 3, 5.0, form).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rep = pingpong_angle_bound(&cfg, 500, &mut rng).unwrap();
        assert!(rep.max_ratio <= 1.0, "max ratio {}", rep.max_ratio);
    }

    #[test]
    fn sectors_intersect_only_in_v() {
        let form = LorentzForm::standard(3);
        let cfg = PingPongConfig::new(4, 3, 5.0, form).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        assert!(cfg.sectors_meet_only_in_v(5000, &mut rng));
    }

    #[test]
    fn single_segment_is_a_geodesic() {
        let form = LorentzForm::standard(3);
        let path = Concatenation {
            lengths: vec![7.0],
            angles: vec![],
            twists: vec![],
        };
        let rep = quasigeodesic_check(&form, &path, 1.0, 0.1, 1.0).unwrap();
        assert_relative_eq!(rep.c_fit, 1.0, epsilon = 1e-9);
        assert!(rep.verdict);
        assert_relative_eq!(rep.endpoint_distance, 7.0, epsilon = 1e-9);
    }

    #[test]
    fn right_angle_two_segment_distance() {
        // Law of cosines: cosh d = cosh 10 cosh 10 (right angle kills the
        // product term); d ~ 19.31.
        let form = LorentzForm::standard(2);
        let path = Concatenation {
            lengths: vec![10.0, 10.0],
            angles: vec![std::f64::consts::FRAC_PI_2],
            twists: vec![],
        };
        let rep = quasigeodesic_check(&form, &path, 5.0, 0.5, 2.0).unwrap();
        let expect = (10.0_f64.cosh() * 10.0_f64.cosh()).acosh();
        assert_relative_eq!(rep.endpoint_distance, expect, epsilon = 1e-8);
        assert!(rep.verdict, "c_fit = {}", rep.c_fit);
    }

    #[test]
    fn zigzag_constant_stabilizes() {
        let form = LorentzForm::standard(2);
        let build = |n: usize| Concatenation {
            lengths: vec![5.0; n],
            angles: vec![std::f64::consts::FRAC_PI_4; n - 1],
            twists: (0..n - 1)
                .map(|i| if i % 2 == 0 { 0.0 } else { std::f64::consts::PI })
                .collect(),
        };
        let c15 = quasigeodesic_check(&form, &build(15), 5.0, 0.5, 10.0)
            .unwrap()
            .c_fit;
        let c20 = quasigeodesic_check(&form, &build(20), 5.0, 0.5, 10.0)
            .unwrap()
            .c_fit;
        assert!((c20 - c15).abs() < 0.2, "c15 = {c15}, c20 = {c20}");
        assert!(c20 < 5.0);
    }

    #[test]
    fn violated_preconditions_error() {
        let form = LorentzForm::standard(2);
        let path = Concatenation {
            lengths: vec![1.0, 10.0],
            angles: vec![1.0],
            twists: vec![],
        };
        assert!(matches!(
            quasigeodesic_check(&form, &path, 5.0, 0.5, 2.0),
            Err(Error::BadConcatenation(_))
        ));
    }
}
