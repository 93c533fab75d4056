//! Property tests for the algebraic invariants.

use nalgebra::DMatrix;
use proptest::prelude::*;

use bulgekit::blocks::{bulge_matrix, corner_trace, meridian_holonomy, CornerSpec};
use bulgekit::eigen::{eigen_split, SpectralItem};
use bulgekit::metric::cross_ratio;
use bulgekit::{ProjMap, Ray};

fn well_conditioned_map(entries: &[f64; 9]) -> Option<ProjMap> {
    let m = DMatrix::from_row_slice(3, 3, entries);
    let det = m.determinant();
    if det.abs() < 0.1 {
        return None;
    }
    let g = ProjMap::new(m).ok()?;
    let svd = g.matrix().clone().svd(false, false);
    let sv = &svd.singular_values;
    if sv[0] / sv[sv.len() - 1] > 50.0 {
        return None;
    }
    Some(g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cross_ratio_is_projectively_invariant(
        entries in prop::array::uniform9(-2.0_f64..2.0),
        params in prop::array::uniform4(-3.0_f64..3.0),
        line in prop::array::uniform2(0.1_f64..1.0),
    ) {
        // Points on an affine line through a tilted direction.
        let sep = 0.35;
        let mut ts = params;
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assume!(ts.windows(2).all(|w| w[1] - w[0] > sep));
        let point = |t: f64| Ray::from_slice(&[t * line[0], t * line[1], 1.0]).unwrap();
        let (a, x, y, b) = (point(ts[0]), point(ts[1]), point(ts[2]), point(ts[3]));
        let cr = cross_ratio(&a, &x, &y, &b).unwrap();
        prop_assume!(cr.abs() < 1e3);

        if let Some(g) = well_conditioned_map(&entries) {
            let cr_g = cross_ratio(&g.apply(&a), &g.apply(&x), &g.apply(&y), &g.apply(&b)).unwrap();
            prop_assert!(
                (cr - cr_g).abs() <= 1e-10 * cr.abs().max(1.0),
                "invariance violated: {cr} vs {cr_g}"
            );
        }
    }

    #[test]
    fn bulge_matrices_invert_pairwise(mu in 0.05_f64..20.0, d in 2usize..6) {
        let fwd = bulge_matrix(mu, d).unwrap();
        let bwd = bulge_matrix(1.0 / mu, d).unwrap();
        let prod = fwd.compose(&bwd);
        let id = DMatrix::identity(d + 1, d + 1);
        prop_assert!((prod.matrix() - id).norm() < 1e-11);
    }

    #[test]
    fn corner_trace_symmetry_and_matrix_agreement(
        theta in 0.05_f64..1.5,
        mu in 0.3_f64..3.0,
        mu_prime in 0.3_f64..3.0,
    ) {
        let c = CornerSpec::new(theta, mu, mu_prime, 3).unwrap();
        let swapped = CornerSpec::new(theta, mu_prime, mu, 3).unwrap();
        prop_assert!((corner_trace(&c) - corner_trace(&swapped)).abs() < 1e-12);

        // The SL2-angle block of the meridian carries the same trace.
        let g = meridian_holonomy(&c);
        let ratio: f64 = mu / mu_prime;
        let s = ratio.powf(1.0);
        let tr = (g.matrix()[(2, 2)] + g.matrix()[(3, 3)]) / s;
        prop_assert!((corner_trace(&c) - tr).abs() < 1e-10 * (1.0 + tr.abs()));
    }

    #[test]
    fn eigen_split_real_pairs_have_small_residuals(
        entries in prop::array::uniform9(-2.0_f64..2.0),
    ) {
        let m = DMatrix::from_row_slice(3, 3, &entries);
        prop_assume!(m.determinant().abs() > 0.05);
        let g = ProjMap::new(m).unwrap();
        let split = eigen_split(&g);
        let gnorm = g.matrix().norm();
        for item in &split.items {
            if let SpectralItem::Real { value, vectors, .. } = item {
                for v in vectors {
                    let r = (g.matrix() * v - v * *value).norm();
                    prop_assert!(r <= 1e-9 * gnorm, "residual {r:.3e}");
                }
            }
        }
    }
}
