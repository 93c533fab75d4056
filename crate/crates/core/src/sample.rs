//! Randomized convexity cross-check: segments between points of distinct
//! tiles must stay inside the union of tiles.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::ray::Ray;

#[derive(Debug, Clone)]
pub struct SampleOptions {
    pub segments: usize,
    pub points_per_segment: usize,
    pub tol: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            segments: 10_000,
            points_per_segment: 12,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub enum OracleOutcome {
    Pass {
        segments: usize,
    },
    Counterexample {
        tile_a: usize,
        tile_b: usize,
        endpoint_a: Ray,
        endpoint_b: Ray,
        violating: Ray,
    },
}

impl OracleOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, OracleOutcome::Pass { .. })
    }
}

/// Uniform grid over the first two chart coordinates; buckets hold tile
/// indices whose bounding box meets the cell.
pub(crate) struct TileGrid {
    cell: f64,
    origin: [f64; 2],
    ncells: [usize; 2],
    buckets: Vec<Vec<usize>>,
    axes: [DVector<f64>; 2],
}

impl TileGrid {
    pub(crate) fn build(tiles: &[ConvexBody]) -> Option<TileGrid> {
        let chart = tiles[0].chart();
        let c = chart.functional().clone().normalize();
        let n = c.len();
        if n != 3 {
            return None;
        }
        // Orthonormal tangent axes of the chart plane.
        let mut u = DVector::zeros(n);
        u[if c[0].abs() < 0.9 { 0 } else { 1 }] = 1.0;
        let a0 = (&u - &c * c.dot(&u)).normalize();
        let a1 = DVector::from_column_slice(&[
            c[1] * a0[2] - c[2] * a0[1],
            c[2] * a0[0] - c[0] * a0[2],
            c[0] * a0[1] - c[1] * a0[0],
        ]);
        let coords = |rep: &DVector<f64>| [a0.dot(rep), a1.dot(rep)];

        let mut boxes = Vec::with_capacity(tiles.len());
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for t in tiles {
            let mut blo = [f64::INFINITY; 2];
            let mut bhi = [f64::NEG_INFINITY; 2];
            for v in t.vertices() {
                let rep = t.chart().rep(v)?;
                let xy = coords(&rep);
                for k in 0..2 {
                    blo[k] = blo[k].min(xy[k]);
                    bhi[k] = bhi[k].max(xy[k]);
                }
            }
            for k in 0..2 {
                lo[k] = lo[k].min(blo[k]);
                hi[k] = hi[k].max(bhi[k]);
            }
            boxes.push((blo, bhi));
        }
        // Cell size scales with the domain so the bucket count stays near the
        // tile count even when deep tiles are orders of magnitude smaller
        // than shallow ones.
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let per_axis = ((2.0 * tiles.len() as f64).sqrt().ceil() as usize).clamp(4, 512);
        let cell = extent / per_axis as f64;
        let ncells = [
            (((hi[0] - lo[0]) / cell).ceil() as usize + 1).min(per_axis + 1),
            (((hi[1] - lo[1]) / cell).ceil() as usize + 1).min(per_axis + 1),
        ];
        let mut buckets = vec![Vec::new(); ncells[0] * ncells[1]];
        let clampi = |x: f64, k: usize, nc: &[usize; 2]| -> usize {
            let i = ((x - lo[k]) / cell).floor();
            (i.max(0.0) as usize).min(nc[k] - 1)
        };
        for (ti, (blo, bhi)) in boxes.iter().enumerate() {
            let i0 = clampi(blo[0], 0, &ncells);
            let i1 = clampi(bhi[0], 0, &ncells);
            let j0 = clampi(blo[1], 1, &ncells);
            let j1 = clampi(bhi[1], 1, &ncells);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    buckets[i * ncells[1] + j].push(ti);
                }
            }
        }
        Some(TileGrid {
            cell,
            origin: lo,
            ncells,
            buckets,
            axes: [a0, a1],
        })
    }

    pub(crate) fn candidates(&self, rep: &DVector<f64>) -> &[usize] {
        let x = self.axes[0].dot(rep);
        let y = self.axes[1].dot(rep);
        let i = (((x - self.origin[0]) / self.cell).floor().max(0.0) as usize)
            .min(self.ncells[0] - 1);
        let j = (((y - self.origin[1]) / self.cell).floor().max(0.0) as usize)
            .min(self.ncells[1] - 1);
        &self.buckets[i * self.ncells[1] + j]
    }
}

/// Sample segments between random interior points of distinct tiles and check
/// that every sampled point of each segment lies in some tile. Returns the
/// first violating segment (by sample index) as a counterexample.
pub fn convexity_sample_oracle<R: Rng>(
    tiles: &[ConvexBody],
    opts: &SampleOptions,
    rng: &mut R,
) -> Result<OracleOutcome> {
    if tiles.is_empty() {
        return Err(Error::EmptyInput("tile list"));
    }
    let grid = if tiles.len() >= 16 {
        TileGrid::build(tiles)
    } else {
        None
    };

    // Draw all sample data up front so the parallel check cannot perturb
    // the random stream (reruns stay byte-identical).
    let mut jobs = Vec::with_capacity(opts.segments);
    for _ in 0..opts.segments {
        let ta = rng.random_range(0..tiles.len());
        let tb = if tiles.len() == 1 {
            ta
        } else {
            let mut t = rng.random_range(0..tiles.len() - 1);
            if t >= ta {
                t += 1;
            }
            t
        };
        let pa = random_interior_rep(&tiles[ta], rng);
        let pb = random_interior_rep(&tiles[tb], rng);
        jobs.push((ta, tb, pa, pb));
    }

    let in_union = |rep: &DVector<f64>| -> bool {
        let idxs: Vec<usize> = match &grid {
            Some(g) => g.candidates(rep).to_vec(),
            None => (0..tiles.len()).collect(),
        };
        idxs.iter().any(|&i| {
            tiles[i]
                .margin_rep(rep)
                .map(|m| m >= -opts.tol)
                .unwrap_or(false)
        })
    };

    let violation = jobs
        .par_iter()
        .enumerate()
        .filter_map(|(si, (ta, tb, pa, pb))| {
            let steps = opts.points_per_segment.max(2);
            for k in 0..steps {
                let t = k as f64 / (steps - 1) as f64;
                let rep = pa * (1.0 - t) + pb * t;
                if !in_union(&rep) {
                    return Some((si, *ta, *tb, pa.clone(), pb.clone(), rep));
                }
            }
            None
        })
        .min_by_key(|v| v.0);

    match violation {
        None => Ok(OracleOutcome::Pass {
            segments: opts.segments,
        }),
        Some((_, ta, tb, pa, pb, rep)) => {
            let chart = tiles[0].chart();
            Ok(OracleOutcome::Counterexample {
                tile_a: ta,
                tile_b: tb,
                endpoint_a: chart.ray(&pa)?,
                endpoint_b: chart.ray(&pb)?,
                violating: chart.ray(&rep)?,
            })
        }
    }
}

/// Random interior chart representative: a positive convex combination of the
/// tile's vertices (ball: rejection-free radial sample).
fn random_interior_rep<R: Rng>(tile: &ConvexBody, rng: &mut R) -> DVector<f64> {
    use crate::body::Shape;
    if let Shape::Ball { center, radius } = tile.shape() {
        let dim = center.len();
        let mut dir = DVector::zeros(dim);
        let c = tile.chart().functional();
        loop {
            for k in 0..dim {
                dir[k] = rng.random_range(-1.0..1.0);
            }
            dir -= c * (c.dot(&dir) / c.dot(c));
            let n = dir.norm();
            if n > 1e-6 {
                dir /= n;
                break;
            }
        }
        let r: f64 = rng.random_range(0.0..1.0);
        return center + dir * (radius * 0.95 * r.sqrt());
    }
    let verts = tile.vertices();
    let mut w = Vec::with_capacity(verts.len());
    let mut total = 0.0;
    for _ in verts {
        let u: f64 = rng.random_range(1e-9..1.0);
        let e = -u.ln();
        w.push(e);
        total += e;
    }
    let mut acc = DVector::zeros(verts[0].coords().len());
    for (v, wi) in verts.iter().zip(&w) {
        let rep = tile.chart().rep(v).expect("chart positive");
        acc += rep * (*wi / total);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::Chart;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square(x0: f64, y0: f64) -> ConvexBody {
        let chart = Chart::standard(2);
        let vs = [
            [x0, y0, 1.0],
            [x0 + 1.0, y0, 1.0],
            [x0 + 1.0, y0 + 1.0, 1.0],
            [x0, y0 + 1.0, 1.0],
        ];
        let verts = vs.iter().map(|v| Ray::from_slice(v).unwrap()).collect();
        ConvexBody::polygon(verts, chart).unwrap()
    }

    #[test]
    fn two_squares_sharing_an_edge_pass() {
        let tiles = vec![square(0.0, 0.0), square(1.0, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let opts = SampleOptions {
            segments: 2000,
            ..Default::default()
        };
        let out = convexity_sample_oracle(&tiles, &opts, &mut rng).unwrap();
        assert!(out.passed());
    }

    #[test]
    fn corner_touching_squares_yield_a_counterexample() {
        let tiles = vec![square(0.0, 0.0), square(1.0, 1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let opts = SampleOptions {
            segments: 2000,
            ..Default::default()
        };
        let out = convexity_sample_oracle(&tiles, &opts, &mut rng).unwrap();
        assert!(!out.passed());
    }

    #[test]
    fn empty_input_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            convexity_sample_oracle(&[], &SampleOptions::default(), &mut rng),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn deterministic_for_a_fixed_seed() {
        let tiles = vec![square(0.0, 0.0), square(1.0, 1.0)];
        let opts = SampleOptions {
            segments: 500,
            ..Default::default()
        };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            match convexity_sample_oracle(&tiles, &opts, &mut rng).unwrap() {
                OracleOutcome::Counterexample { violating, .. } => {
                    violating.coords().as_slice().to_vec()
                }
                OracleOutcome::Pass { .. } => vec![],
            }
        };
        assert_eq!(run(), run());
    }
}
