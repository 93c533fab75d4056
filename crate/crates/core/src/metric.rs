//! Cross-ratio and the Hilbert metric.

use nalgebra::{DMatrix, DVector};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::ray::Ray;

/// Cross-ratio `[a, x, y, b]` of four rays on one projective line, normalized
/// so that `[0, 1, t, oo] = t` in any affine coordinate.
///
/// The four vectors are projected onto their common 2-plane; with plane
/// coordinates `p`, the value is
/// `det(y, a) det(b, x) / (det(x, a) det(b, y))`,
/// which is independent of the plane basis and of representative signs.
pub fn cross_ratio(a: &Ray, x: &Ray, y: &Ray, b: &Ray) -> Result<f64> {
    let n = a.coords().len();
    let mut m = DMatrix::zeros(4, n);
    for (i, r) in [a, x, y, b].iter().enumerate() {
        m.row_mut(i).copy_from(&r.coords().transpose());
    }
    let svd = m.clone().svd(false, true);
    let sv = &svd.singular_values;
    if sv.len() < 2 || sv[1] < 1e-12 * sv[0] {
        return Err(Error::DegenerateQuadruple("rays span less than a line"));
    }
    if sv.len() > 2 && sv[2] > 1e-8 * sv[0] {
        return Err(Error::CollinearityViolation {
            defect: sv[2] / sv[0],
        });
    }
    let v_t = svd.v_t.expect("requested");
    let basis = v_t.rows(0, 2); // 2 x n, orthonormal rows spanning the plane
    let coords: Vec<[f64; 2]> = [a, x, y, b]
        .iter()
        .map(|r| {
            let p = basis * r.coords();
            [p[0], p[1]]
        })
        .collect();
    let det = |p: &[f64; 2], q: &[f64; 2]| p[0] * q[1] - p[1] * q[0];
    let (ca, cx, cy, cb) = (&coords[0], &coords[1], &coords[2], &coords[3]);
    let num = det(cy, ca) * det(cb, cx);
    let den = det(cx, ca) * det(cb, cy);
    if den.abs() < 1e-14 * (num.abs() + 1.0) {
        return Err(Error::DegenerateQuadruple("a = x or y = b"));
    }
    Ok(num / den)
}

/// Hilbert distance `d_K(x, y) = (1/2) log [a, x, y, b]`, where `a, b` are the
/// boundary points of `K` on the line through `x` and `y`, `a` on the side of
/// `x` and `b` on the side of `y`.
pub fn hilbert_distance(body: &ConvexBody, x: &Ray, y: &Ray) -> Result<f64> {
    let mx = body.margin(x)?;
    if mx <= 0.0 {
        return Err(Error::OutsideDomain { margin: mx });
    }
    let my = body.margin(y)?;
    if my <= 0.0 {
        return Err(Error::OutsideDomain { margin: my });
    }
    let rx = body.chart().rep(x).expect("interior point is chart positive");
    let ry = body.chart().rep(y).expect("interior point is chart positive");
    let dir = &ry - &rx;
    if dir.norm() < 1e-14 {
        return Ok(0.0);
    }
    let (t_minus, t_plus) = body.boundary_hits(&rx, &dir)?;
    debug_assert!(t_minus < 0.0 && t_plus > 1.0 - 1e-12);
    let a_rep: DVector<f64> = &rx + &dir * t_minus;
    let b_rep: DVector<f64> = &rx + &dir * t_plus;
    let a = body.chart().ray(&a_rep)?;
    let b = body.chart().ray(&b_rep)?;
    let cr = cross_ratio(&a, x, y, &b)?;
    Ok(0.5 * cr.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::Chart;
    use approx::assert_relative_eq;

    fn line_ray(t: f64) -> Ray {
        // Affine coordinate t on the standard chart of S^1.
        Ray::from_slice(&[t, 1.0]).unwrap()
    }

    fn infinity_ray() -> Ray {
        Ray::from_slice(&[1.0, 0.0]).unwrap()
    }

    #[test]
    fn normalization_zero_one_t_infinity() {
        for &t in &[0.5, 2.0, -3.0, 17.25] {
            let cr = cross_ratio(&line_ray(0.0), &line_ray(1.0), &line_ray(t), &infinity_ray())
                .unwrap();
            assert_relative_eq!(cr, t, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn repeated_middle_point_gives_one() {
        let x = line_ray(0.3);
        let cr = cross_ratio(&line_ray(-1.0), &x, &x, &line_ray(1.0)).unwrap();
        assert_relative_eq!(cr, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn worked_quadruple_on_the_interval() {
        // Direct evaluation of the normalized formula at (-1, 0, 1/2, 1).
        let cr = cross_ratio(&line_ray(-1.0), &line_ray(0.0), &line_ray(0.5), &line_ray(1.0))
            .unwrap();
        assert_relative_eq!(cr, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_and_noncollinear_inputs_error() {
        let a = line_ray(0.0);
        let b = line_ray(1.0);
        assert!(matches!(
            cross_ratio(&a, &a, &b, &infinity_ray()),
            Err(Error::DegenerateQuadruple(_))
        ));
        let p = Ray::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let q = Ray::from_slice(&[1.0, 0.0, 1.0]).unwrap();
        let r = Ray::from_slice(&[0.0, 1.0, 1.0]).unwrap();
        let s = Ray::from_slice(&[1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            cross_ratio(&p, &q, &r, &s),
            Err(Error::CollinearityViolation { .. })
        ));
    }

    #[test]
    fn hilbert_distance_on_the_unit_interval() {
        // K = (-1, 1): d(0, 1/2) = (1/2) ln 3, frozen from the cross-ratio
        // oracle cross_ratio(-1, 0, 1/2, 1) = 3.
        let chart = Chart::standard(1);
        let k = ConvexBody::interval(line_ray(-1.0), line_ray(1.0), chart).unwrap();
        let d = hilbert_distance(&k, &line_ray(0.0), &line_ray(0.5)).unwrap();
        assert_relative_eq!(d, 0.5 * 3.0_f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(
            hilbert_distance(&k, &line_ray(0.5), &line_ray(0.0)).unwrap(),
            d,
            epsilon = 1e-12
        );
        assert_eq!(
            hilbert_distance(&k, &line_ray(0.2), &line_ray(0.2)).unwrap(),
            0.0
        );
    }

    #[test]
    fn points_outside_are_rejected() {
        let chart = Chart::standard(1);
        let k = ConvexBody::interval(line_ray(-1.0), line_ray(1.0), chart).unwrap();
        assert!(matches!(
            hilbert_distance(&k, &line_ray(2.0), &line_ray(0.0)),
            Err(Error::OutsideDomain { .. })
        ));
    }
}
