//! Full real spectral data of projective maps: eigenvalues sorted by modulus,
//! real eigenvectors, invariant 2-planes for complex pairs.

use nalgebra::{DMatrix, DVector};

use crate::ray::ProjMap;

const CLUSTER_REL_TOL: f64 = 1e-8;
const NULLSPACE_REL_TOL: f64 = 1e-8;
const ILL_CONDITION_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone)]
pub enum SpectralItem {
    Real {
        value: f64,
        /// Algebraic multiplicity of the cluster.
        multiplicity: usize,
        /// Basis of the eigenspace (geometric multiplicity many vectors).
        vectors: Vec<DVector<f64>>,
    },
    ComplexPair {
        modulus: f64,
        /// Rotation angle in `(0, pi)`.
        angle: f64,
        multiplicity: usize,
        /// Basis of the invariant plane (2 vectors per pair).
        plane: Vec<DVector<f64>>,
    },
}

impl SpectralItem {
    pub fn modulus(&self) -> f64 {
        match self {
            SpectralItem::Real { value, .. } => value.abs(),
            SpectralItem::ComplexPair { modulus, .. } => *modulus,
        }
    }

    fn lex_key(&self) -> &[f64] {
        match self {
            SpectralItem::Real { vectors, .. } => vectors
                .first()
                .map(|v| v.as_slice())
                .unwrap_or(&[]),
            SpectralItem::ComplexPair { plane, .. } => plane
                .first()
                .map(|v| v.as_slice())
                .unwrap_or(&[]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSplit {
    /// Sorted by decreasing modulus; ties broken lexicographically by the
    /// first basis vector.
    pub items: Vec<SpectralItem>,
    /// Condition number of the matrix itself.
    pub condition: f64,
    pub ill_conditioned: bool,
}

impl EigenSplit {
    /// All real eigenvalues with multiplicity, descending modulus.
    pub fn real_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for item in &self.items {
            if let SpectralItem::Real { value, multiplicity, .. } = item {
                for _ in 0..*multiplicity {
                    out.push(*value);
                }
            }
        }
        out
    }

    pub fn all_real(&self) -> bool {
        self.items
            .iter()
            .all(|i| matches!(i, SpectralItem::Real { .. }))
    }

    /// The eigenvalue of largest modulus together with one eigenvector, if the
    /// top item is real.
    pub fn dominant_real(&self) -> Option<(f64, &DVector<f64>)> {
        match self.items.first()? {
            SpectralItem::Real { value, vectors, .. } => {
                vectors.first().map(|v| (*value, v))
            }
            _ => None,
        }
    }
}

/// Spectral decomposition of `g`. Always defined for invertible maps;
/// ill-conditioned inputs are flagged, never rejected.
pub fn eigen_split(g: &ProjMap) -> EigenSplit {
    let m = g.matrix();
    let n = m.nrows();
    let eigs = m.clone().complex_eigenvalues();
    let scale = eigs.iter().map(|c| c.norm()).fold(0.0_f64, f64::max).max(1e-300);

    // Cluster eigenvalues; conjugates are handled jointly by clustering on
    // (re, |im|).
    let mut used = vec![false; n];
    let mut items = Vec::new();
    for i in 0..n {
        if used[i] {
            continue;
        }
        let mut cluster = vec![i];
        used[i] = true;
        for j in (i + 1)..n {
            if used[j] {
                continue;
            }
            let same = (eigs[i].re - eigs[j].re).abs() <= CLUSTER_REL_TOL * scale
                && (eigs[i].im.abs() - eigs[j].im.abs()).abs() <= CLUSTER_REL_TOL * scale;
            if same {
                cluster.push(j);
                used[j] = true;
            }
        }
        let re: f64 = cluster.iter().map(|&k| eigs[k].re).sum::<f64>() / cluster.len() as f64;
        let im: f64 =
            cluster.iter().map(|&k| eigs[k].im.abs()).sum::<f64>() / cluster.len() as f64;
        if im <= CLUSTER_REL_TOL * scale {
            // Real cluster.
            let shifted = m - DMatrix::identity(n, n) * re;
            let vectors = null_space(&shifted, scale);
            items.push(SpectralItem::Real {
                value: re,
                multiplicity: cluster.len(),
                vectors,
            });
        } else {
            // Conjugate pair(s): invariant plane from the real quadratic
            // factor l^2 - 2 re l + (re^2 + im^2).
            let modulus = (re * re + im * im).sqrt();
            let angle = im.atan2(re).abs();
            let quad = m * m - m * (2.0 * re) + DMatrix::identity(n, n) * (re * re + im * im);
            let plane = null_space(&quad, scale * scale.max(1.0));
            items.push(SpectralItem::ComplexPair {
                modulus,
                angle,
                multiplicity: cluster.len() / 2,
                plane,
            });
        }
    }

    items.sort_by(|a, b| {
        b.modulus()
            .partial_cmp(&a.modulus())
            .unwrap()
            .then_with(|| lex_cmp(a.lex_key(), b.lex_key()))
    });

    let svd = m.clone().svd(false, false);
    let sv = &svd.singular_values;
    let (smax, smin) = (
        sv.iter().copied().fold(0.0_f64, f64::max),
        sv.iter().copied().fold(f64::INFINITY, f64::min),
    );
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    EigenSplit {
        items,
        condition,
        ill_conditioned: condition > ILL_CONDITION_THRESHOLD,
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Orthonormal basis of the numerical null space, each vector sign-normalized
/// so its largest-magnitude entry is positive.
fn null_space(m: &DMatrix<f64>, scale: f64) -> Vec<DVector<f64>> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let sv = &svd.singular_values;
    let cutoff = NULLSPACE_REL_TOL * scale.max(sv.iter().copied().fold(0.0, f64::max));
    let mut basis = Vec::new();
    for k in 0..sv.len().min(n) {
        if sv[k] <= cutoff {
            let mut v: DVector<f64> = v_t.row(k).transpose();
            let lead = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap_or(0);
            if v[lead] < 0.0 {
                v = -v;
            }
            basis.push(v);
        }
    }
    basis
}
