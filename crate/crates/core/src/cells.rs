//! Cells at infinity of a developed tiling: fan cones around periodic
//! corners, telescope limit points along wall-crossing rays, and the sampled
//! classification of boundary directions.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::body::{ConvexBody, Shape};
use crate::error::{Error, Result};
use crate::gluekit::{check_corner_condition, corner_orbit_members, TileSet};
use crate::lp::nnls;
use crate::ray::{ProjMap, Ray};
use crate::scene::GluingKit;

#[derive(Debug, Clone)]
pub enum CellAtInfinity {
    FanCone {
        /// The corner stratum generators.
        base: Vec<Ray>,
        /// Attracting eigenray of the fan recurrence.
        apex: Ray,
        /// Hausdorff estimate between the final iterate and `conv(base, apex)`.
        hausdorff: f64,
        /// How far applying the recurrence moves the returned cell.
        invariance: f64,
        iterations: usize,
    },
    TelescopePoint {
        limit: Ray,
        /// Fitted per-crossing growth factor of transversal Hilbert
        /// distances (`> 1` certifies contraction of the backward cell).
        contraction: f64,
        distances: Vec<f64>,
        diameters: Vec<f64>,
    },
    Undetermined {
        reason: String,
    },
}

/// Chordal distance from a unit vector to the cone spanned by `gens`
/// (both sign representatives of the target are tried).
fn cone_distance(gens: &[Ray], v: &Ray) -> f64 {
    let n = v.coords().len();
    let mut g = DMatrix::zeros(n, gens.len());
    for (j, r) in gens.iter().enumerate() {
        g.column_mut(j).copy_from(r.coords());
    }
    let mut best = f64::INFINITY;
    for cand in [v.coords().clone(), -v.coords()] {
        let (_, c) = nnls(&g, &cand);
        let proj = &g * &c;
        let nrm = proj.norm();
        if nrm > 1e-14 {
            best = best.min((cand - proj / nrm).norm());
        } else {
            best = best.min(2.0);
        }
    }
    best
}

/// Cone-generator Hausdorff estimate: extreme rays of each set against the
/// cone of the other.
fn cone_hausdorff(a: &[Ray], b: &[Ray]) -> f64 {
    let mut h: f64 = 0.0;
    for r in a {
        h = h.max(cone_distance(b, r));
    }
    for r in b {
        h = h.max(cone_distance(a, r));
    }
    h
}

/// Iterate a fan seed under the recurrence and estimate the limit cell
/// `conv(base, apex)`.
pub fn fan_limit_cell(
    g: &ProjMap,
    base: &[Ray],
    seed: &[Ray],
    iterations: usize,
) -> Result<CellAtInfinity> {
    if base.is_empty() || seed.is_empty() {
        return Err(Error::EmptyInput("fan base or seed"));
    }
    let split = crate::eigen::eigen_split(g);
    let Some((_, apex_vec)) = split.dominant_real() else {
        return Ok(CellAtInfinity::Undetermined {
            reason: "no dominant real eigenray".into(),
        });
    };
    let mut apex = Ray::new(apex_vec.clone())?;

    // Final iterate of the seed (the fan tile pushed to depth `iterations`).
    let mut iterate: Vec<Ray> = seed.to_vec();
    for _ in 0..iterations {
        iterate = iterate.iter().map(|r| g.apply(r)).collect();
    }
    // Orient the apex toward the side the iterates actually converge to;
    // base rays are orthogonal to the apex, so align against the most
    // apex-aligned iterate.
    let best = iterate
        .iter()
        .map(|r| r.dot(&apex))
        .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        .unwrap_or(1.0);
    if best < 0.0 {
        apex = apex.antipode();
    }
    let mut cell: Vec<Ray> = base.to_vec();
    cell.push(apex.clone());
    let mut iterate_with_base = iterate.clone();
    iterate_with_base.extend(base.iter().cloned());
    let hausdorff = cone_hausdorff(&iterate_with_base, &cell);

    // Invariance of the returned cell under the recurrence.
    let moved: Vec<Ray> = cell.iter().map(|r| g.apply(r)).collect();
    let invariance = cone_hausdorff(&moved, &cell);

    if !hausdorff.is_finite() || hausdorff > 0.5 {
        return Ok(CellAtInfinity::Undetermined {
            reason: format!("fan iteration did not converge (hausdorff {hausdorff:.3e})"),
        });
    }
    Ok(CellAtInfinity::FanCone {
        base: base.to_vec(),
        apex,
        hausdorff,
        invariance,
        iterations,
    })
}

/// Fan cell of a declared corner: iterates the period tiles under the
/// meridian holonomy.
pub fn fan_cell(kit: &GluingKit, corner_idx: usize, iterations: usize) -> Result<CellAtInfinity> {
    let check = check_corner_condition(kit, corner_idx)?;
    if check.trace_margin < -1e-9 {
        return Err(Error::SubcriticalTrace {
            margin: check.trace_margin,
        });
    }
    let corner = &kit.corners[corner_idx];
    let g = kit.word_matrix(&corner.word);
    let base = kit.corner_rays(corner);
    // Period tiles: all prefix placements of the meridian walk.
    let mut seed = Vec::new();
    let mut prefix: Vec<(usize, bool)> = Vec::new();
    let mut block = corner.block;
    for step in 0..corner.word.len() {
        let m = kit.word_matrix(&prefix);
        for v in kit.blocks[block].body.vertices() {
            seed.push(m.apply(v));
        }
        let (pi, inv) = corner.word[step];
        prefix.push((pi, inv));
        block = kit.crossing_target(pi, inv);
    }
    fan_limit_cell(&g, &base, &seed, iterations)
}

/// Hilbert distance between two chart representatives inside the union of
/// developed tiles, by clipping the chart line against every tile.
pub fn union_hilbert_distance(
    bodies: &[ConvexBody],
    a: &DVector<f64>,
    b: &DVector<f64>,
) -> Option<f64> {
    let sep = (b - a).norm();
    if sep < 1e-14 {
        return Some(0.0);
    }
    // Unit direction: interval parameters are chart distances, so the merge
    // tolerance is scale-independent even for very close query points.
    let dir = (b - a) / sep;
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for body in bodies {
        if let Ok((lo, hi)) = body.boundary_hits(a, &dir) {
            if hi > lo {
                intervals.push((lo, hi));
            }
        }
    }
    if intervals.is_empty() {
        return None;
    }
    intervals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    // Merge and locate the component containing [0, sep].
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 + 1e-9 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    let comp = merged
        .iter()
        .find(|(lo, hi)| *lo <= 1e-9 && *hi >= sep - 1e-9)?;
    let (s_min, s_max) = *comp;
    if s_min >= 0.0 || s_max <= sep {
        return None;
    }
    // Cross-ratio [a', x, y, b'] with affine parameters s_min, 0, sep, s_max.
    let cr = ((sep - s_min) * s_max) / ((-s_min) * (s_max - sep));
    Some(0.5 * cr.ln())
}

/// Telescope diagnostics along the branch from the root to `leaf`: tracks
/// two transversal rays through the successive shared walls, measures their
/// Hilbert distances in the developed union, and fits the growth factor.
pub fn telescope_diagnostics(
    kit: &GluingKit,
    tiles: &TileSet,
    leaf: usize,
) -> Result<CellAtInfinity> {
    if kit.dim != 2 {
        return Err(Error::UnsupportedBody(
            "telescope diagnostics run on 2-dimensional developments",
        ));
    }
    let branch = tiles.branch_to(leaf);
    if branch.len() < 5 {
        return Ok(CellAtInfinity::Undetermined {
            reason: format!("branch of {} tiles is too shallow", branch.len()),
        });
    }

    // Persistent common corner detection: a fan direction shares a vertex ray
    // along the whole branch.
    let mut common: Vec<Ray> = tiles.tiles[branch[0]].vertices.to_vec();
    for &ti in branch.iter().skip(1) {
        common.retain(|c| {
            tiles.tiles[ti]
                .vertices
                .iter()
                .any(|v| v.approx_eq(c, 1e-7) || v.antipode().approx_eq(c, 1e-7))
        });
        if common.is_empty() {
            break;
        }
    }
    if !common.is_empty() {
        return Err(Error::BadParameter(
            "branch shares a persistent common corner: this is a fan direction, not a telescope"
                .into(),
        ));
    }

    let chart = &kit.chart;
    // Distances are measured in the convex hull of the development: it is
    // sandwiched between the tile union and the true domain, and convexity
    // keeps the chordal cross-ratios monotone.
    let hull = development_hull(kit, tiles)?;
    let root_body = &tiles.bodies[branch[0]];
    let leaf_body = &tiles.bodies[leaf];
    let x = root_body.barycenter_rep();
    let leaf_bary = leaf_body.barycenter_rep();
    let v0 = chart
        .rep(&tiles.tiles[leaf].vertices[0])
        .ok_or(Error::SceneError("leaf vertex outside chart".into()))?;
    let v1 = chart
        .rep(&tiles.tiles[leaf].vertices[1])
        .ok_or(Error::SceneError("leaf vertex outside chart".into()))?;
    let ta = &leaf_bary * 0.5 + &v0 * 0.5;
    let tb = &leaf_bary * 0.5 + &v1 * 0.5;

    // Successive wall crossings of the two rays.
    let mut dists = Vec::new();
    for win in branch.windows(2) {
        let adj = tiles
            .adjacency
            .iter()
            .find(|a| a.from == win[0] && a.to == win[1])
            .ok_or(Error::NormalFormFailure("missing adjacency on branch"))?;
        if adj.face.len() != 2 {
            continue;
        }
        let f0 = chart.rep(&adj.face[0]).ok_or(Error::SceneError("wall outside chart".into()))?;
        let f1 = chart.rep(&adj.face[1]).ok_or(Error::SceneError("wall outside chart".into()))?;
        let ya = segment_line_intersection(&x, &ta, &f0, &f1);
        let yb = segment_line_intersection(&x, &tb, &f0, &f1);
        let (Some(ya), Some(yb)) = (ya, yb) else {
            return Ok(CellAtInfinity::Undetermined {
                reason: "transversal rays do not cross a branch wall".into(),
            });
        };
        let ra = chart.ray(&ya)?;
        let rb = chart.ray(&yb)?;
        match crate::metric::hilbert_distance(&hull, &ra, &rb) {
            Ok(d) => dists.push(d),
            Err(_) => {
                return Ok(CellAtInfinity::Undetermined {
                    reason: "wall points left the development hull".into(),
                })
            }
        }
    }
    if dists.len() < 3 || dists[0] <= 1e-12 {
        return Ok(CellAtInfinity::Undetermined {
            reason: "not enough transversal crossings".into(),
        });
    }
    let contraction =
        (dists[dists.len() - 1] / dists[0]).powf(1.0 / (dists.len() as f64 - 1.0));

    let diameters: Vec<f64> = branch
        .iter()
        .map(|&ti| {
            let t = &tiles.tiles[ti];
            let mut d: f64 = 0.0;
            for i in 0..t.vertices.len() {
                for j in (i + 1)..t.vertices.len() {
                    if let (Some(a), Some(b)) =
                        (chart.rep(&t.vertices[i]), chart.rep(&t.vertices[j]))
                    {
                        d = d.max((a - b).norm());
                    }
                }
            }
            d
        })
        .collect();

    let limit = chart.ray(&leaf_bary)?;
    Ok(CellAtInfinity::TelescopePoint {
        limit,
        contraction,
        distances: dists,
        diameters,
    })
}

/// Convex hull of all developed tile vertices as a chart polygon (Andrew's
/// monotone chain). The hull is sandwiched between the developed union and
/// the true convex domain, and gives a convex measuring domain for
/// transversal Hilbert distances.
pub fn development_hull(kit: &GluingKit, tiles: &TileSet) -> Result<ConvexBody> {
    if kit.dim != 2 {
        return Err(Error::UnsupportedBody("hull construction is 2-dimensional"));
    }
    let chart = &kit.chart;
    let mut pts: Vec<[f64; 3]> = Vec::new();
    for t in &tiles.tiles {
        for v in &t.vertices {
            let rep = chart
                .rep(v)
                .ok_or(Error::SceneError("development leaves the chart".into()))?;
            pts.push([rep[0], rep[1], rep[2]]);
        }
    }
    pts.sort_by(|a, b| a[..2].partial_cmp(&b[..2]).unwrap());
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    if pts.len() < 3 {
        return Err(Error::EmptyInput("hull needs at least 3 points"));
    }
    let cross = |o: &[f64; 3], a: &[f64; 3], b: &[f64; 3]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 3]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 3]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let rays: Result<Vec<Ray>> = lower
        .iter()
        .map(|p| chart.ray(&DVector::from_column_slice(p)))
        .collect();
    ConvexBody::polygon_prevalidated(rays?, chart.clone())
}

/// Intersection of the segment `[p, q]` with the segment `[a, b]` in chart
/// coordinates (first two components).
fn segment_line_intersection(
    p: &DVector<f64>,
    q: &DVector<f64>,
    a: &DVector<f64>,
    b: &DVector<f64>,
) -> Option<DVector<f64>> {
    let r = [q[0] - p[0], q[1] - p[1]];
    let s = [b[0] - a[0], b[1] - a[1]];
    let cross = |u: &[f64; 2], w: &[f64; 2]| u[0] * w[1] - u[1] * w[0];
    let rxs = cross(&r, &s);
    if rxs.abs() < 1e-14 {
        return None;
    }
    let ap = [a[0] - p[0], a[1] - p[1]];
    let t = cross(&ap, &s) / rxs;
    let u = cross(&ap, &r) / rxs;
    if !(0.0..=1.0).contains(&t) || !(-1e-9..=1.0 + 1e-9).contains(&u) {
        return None;
    }
    Some(p * (1.0 - t) + q * t)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundarySample {
    pub direction: f64,
    pub class: String,
    /// Corner orbit id for fan samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corner: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extremal: Option<bool>,
}

/// Default direction count for boundary sampling.
pub const DEFAULT_BOUNDARY_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryReport {
    pub samples: usize,
    pub inherited: usize,
    pub fan: usize,
    pub telescope: usize,
    pub undetermined: usize,
    /// Distinct corner orbits hit by fan directions.
    pub fan_orbits: Vec<String>,
    /// A few witnesses per class.
    pub witnesses: Vec<BoundarySample>,
}

/// Classify sampled boundary directions of a (certified) development into
/// inherited tile-boundary points, fan cells, and telescope directions.
pub fn classify_boundary(
    kit: &GluingKit,
    tiles: &TileSet,
    certified: bool,
    samples: usize,
) -> Result<BoundaryReport> {
    if !certified {
        return Err(Error::NotCertified);
    }
    if kit.dim != 2 {
        return Err(Error::UnsupportedBody(
            "boundary classification runs on 2-dimensional developments",
        ));
    }
    // Which block edges are glued walls (unglued edges are free boundary).
    let mut paired: Vec<Vec<bool>> = Vec::with_capacity(tiles.tiles.len());
    for t in &tiles.tiles {
        let mut flags = vec![false; t.vertices.len()];
        for &wi in &kit.blocks[t.block].walls {
            if let Some(e) = face_edge_index(&kit.walls[wi].face, t.vertices.len()) {
                flags[e] = true;
            }
        }
        paired.push(flags);
    }

    // Corner orbit lookup: (block, vertex index) -> corner id.
    let mut orbit_lookup: Vec<((usize, usize), String)> = Vec::new();
    for c in &kit.corners {
        for m in corner_orbit_members(kit, c) {
            orbit_lookup.push((m, c.id.clone()));
        }
    }

    let chart = &kit.chart;
    let x0 = tiles.bodies[0].barycenter_rep();
    let mut report = BoundaryReport {
        samples,
        inherited: 0,
        fan: 0,
        telescope: 0,
        undetermined: 0,
        fan_orbits: Vec::new(),
        witnesses: Vec::new(),
    };

    let grid = crate::sample::TileGrid::build(&tiles.bodies);
    let max_depth = tiles.tiles.iter().map(|t| t.depth).max().unwrap_or(0);
    for si in 0..samples {
        let phi = 2.0 * std::f64::consts::PI * si as f64 / samples as f64;
        let mut dir = DVector::zeros(kit.dim + 1);
        dir[0] = phi.cos();
        dir[1] = phi.sin();
        // Membership-driven walk: exit the current tile along the ray, step
        // slightly beyond, and continue in whichever tile contains the
        // stepped point. Robust at corner instances where many fan tiles
        // meet.
        let mut current = 0usize;
        let mut point = x0.clone();
        let mut crossings: Vec<usize> = vec![0];
        let mut outcome: Option<BoundarySample> = None;
        let cap = 8 * max_depth + 64;
        for step in 0..=cap {
            let body = &tiles.bodies[current];
            let Ok((_, t_exit)) = body.boundary_hits(&point, &dir) else {
                outcome = Some(classify_deep(tiles, &crossings, &orbit_lookup, phi));
                break;
            };
            let exit_point: DVector<f64> = &point + &dir * t_exit.max(0.0);
            let stepped: DVector<f64> = &exit_point + &dir * 1e-9;
            let next = {
                let cands: Vec<usize> = match &grid {
                    Some(g) => g.candidates(&stepped).to_vec(),
                    None => (0..tiles.bodies.len()).collect(),
                };
                cands
                    .into_iter()
                    .filter(|&ti| ti != current)
                    .filter_map(|ti| {
                        tiles.bodies[ti]
                            .margin_rep(&stepped)
                            .ok()
                            .filter(|m| *m >= -1e-12)
                            .map(|m| (ti, m))
                    })
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            };
            match next {
                Some((ti, _)) => {
                    point = stepped;
                    current = ti;
                    crossings.push(ti);
                    if step == cap {
                        // Spiraling into a corner fan: classify by the tail.
                        outcome =
                            Some(classify_deep(tiles, &crossings, &orbit_lookup, phi));
                        break;
                    }
                }
                None => {
                    // No tile beyond the exit: either a free facet of the
                    // scene or the depth truncation.
                    let facets = body.facets().expect("polygon");
                    let mut best = (0usize, f64::INFINITY);
                    for (e, f) in facets.iter().enumerate() {
                        let v = f.normal.dot(&exit_point).abs();
                        if v < best.1 {
                            best = (e, v);
                        }
                    }
                    let edge = best.0;
                    if paired[current][edge] {
                        outcome =
                            Some(classify_deep(tiles, &crossings, &orbit_lookup, phi));
                    } else {
                        let exit_ray = chart.ray(&exit_point)?;
                        let verdict = crate::support::is_c1_point(body, &exit_ray, 1e-7);
                        let (c1, extremal) = match verdict {
                            Ok(v) => {
                                // Vertex hits carry two active normals.
                                let at_vertex = v.normals.len() >= 2;
                                (Some(v.c1), Some(at_vertex))
                            }
                            Err(_) => (None, None),
                        };
                        outcome = Some(BoundarySample {
                            direction: phi,
                            class: "inherited".into(),
                            corner: None,
                            c1,
                            extremal,
                        });
                    }
                    break;
                }
            }
        }
        let sample = outcome.unwrap_or(BoundarySample {
            direction: phi,
            class: "undetermined".into(),
            corner: None,
            c1: None,
            extremal: None,
        });
        match sample.class.as_str() {
            "inherited" => report.inherited += 1,
            "fan" => {
                report.fan += 1;
                if let Some(c) = &sample.corner {
                    if !report.fan_orbits.contains(c) {
                        report.fan_orbits.push(c.clone());
                    }
                }
            }
            "telescope" => report.telescope += 1,
            _ => report.undetermined += 1,
        }
        if report.witnesses.len() < 16 {
            report.witnesses.push(sample);
        }
    }
    Ok(report)
}

/// A direction truncated by depth: fan if the deepest crossed tiles share a
/// common vertex ray, telescope otherwise.
fn classify_deep(
    tiles: &TileSet,
    crossings: &[usize],
    orbit_lookup: &[((usize, usize), String)],
    phi: f64,
) -> BoundarySample {
    let k = crossings.len().min(6);
    let tail = &crossings[crossings.len() - k..];
    if k >= 3 {
        let last = &tiles.tiles[tail[k - 1]];
        for (vi, v) in last.vertices.iter().enumerate() {
            let shared = tail[..k - 1].iter().all(|&ti| {
                tiles.tiles[ti]
                    .vertices
                    .iter()
                    .any(|w| w.approx_eq(v, 1e-7) || w.antipode().approx_eq(v, 1e-7))
            });
            if shared {
                let key = (last.block, vi);
                let corner = orbit_lookup
                    .iter()
                    .find(|(m, _)| *m == key)
                    .map(|(_, id)| id.clone());
                return BoundarySample {
                    direction: phi,
                    class: "fan".into(),
                    corner,
                    c1: None,
                    extremal: None,
                };
            }
        }
    }
    BoundarySample {
        direction: phi,
        class: "telescope".into(),
        corner: None,
        c1: None,
        extremal: None,
    }
}

fn face_edge_index(face: &[usize], nverts: usize) -> Option<usize> {
    if face.len() != 2 {
        return None;
    }
    let (a, b) = (face[0], face[1]);
    if (a + 1) % nverts == b {
        Some(a)
    } else if (b + 1) % nverts == a {
        Some(b)
    } else {
        None
    }
}

/// Boundary classification of a single standalone tile: every sampled
/// direction is an inherited boundary point with the tile's own regularity.
pub fn classify_single_body(
    body: &ConvexBody,
    samples: usize,
    spread_tol: f64,
) -> Result<BoundaryReport> {
    let x0 = body.barycenter_rep();
    let mut report = BoundaryReport {
        samples,
        inherited: 0,
        fan: 0,
        telescope: 0,
        undetermined: 0,
        fan_orbits: Vec::new(),
        witnesses: Vec::new(),
    };
    for si in 0..samples {
        let phi = 2.0 * std::f64::consts::PI * si as f64 / samples as f64;
        let mut dir = DVector::zeros(x0.len());
        dir[0] = phi.cos();
        dir[1] = phi.sin();
        let (_, t_exit) = body.boundary_hits(&x0, &dir)?;
        let exit: DVector<f64> = &x0 + &dir * t_exit;
        let ray = body.chart().ray(&exit)?;
        let (c1, extremal) = match body.shape() {
            Shape::Ball { .. } => (Some(true), Some(true)),
            _ => match crate::support::is_c1_point(body, &ray, spread_tol) {
                Ok(v) => (Some(v.c1), Some(v.normals.len() >= 2)),
                Err(_) => (None, None),
            },
        };
        report.inherited += 1;
        if report.witnesses.len() < 16 {
            report.witnesses.push(BoundarySample {
                direction: phi,
                class: "inherited".into(),
                corner: None,
                c1,
                extremal,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fan_limit_of_the_diagonal_recurrence() {
        // g = diag(1/2, 1/2, 3, 4/3); base segment in the span of e1, e2.
        let g = ProjMap::from_rows(&[
            vec![0.5, 0.0, 0.0, 0.0],
            vec![0.0, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 3.0, 0.0],
            vec![0.0, 0.0, 0.0, 4.0 / 3.0],
        ])
        .unwrap();
        let alpha = 0.8_f64;
        let base = vec![
            Ray::from_slice(&[1.0, 0.0, 0.0, 0.0]).unwrap(),
            Ray::from_slice(&[alpha.cos(), alpha.sin(), 0.0, 0.0]).unwrap(),
        ];
        let u = Ray::from_slice(&[0.4, 0.2, 0.6, 0.8]).unwrap();
        let gu = g.apply(&u);
        let seed = vec![base[0].clone(), base[1].clone(), u, gu];
        match fan_limit_cell(&g, &base, &seed, 200).unwrap() {
            CellAtInfinity::FanCone {
                apex,
                hausdorff,
                invariance,
                ..
            } => {
                // Apex is the ray of e3.
                assert_relative_eq!(apex.coords()[2].abs(), 1.0, epsilon = 1e-9);
                assert!(hausdorff < 1e-6, "hausdorff {hausdorff}");
                assert!(invariance < 1e-8, "invariance {invariance}");
            }
            other => panic!("expected a fan cone, got {other:?}"),
        }
    }

    #[test]
    fn trivial_fan_of_a_fixed_tile() {
        // A seed already inside the eigen-cone of g stays put: the cell is
        // the corner face joined with the apex.
        let g = ProjMap::from_rows(&[
            vec![0.5, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let base = vec![Ray::from_slice(&[1.0, 0.0, 0.0]).unwrap()];
        let seed = vec![
            base[0].clone(),
            Ray::from_slice(&[0.0, 1.0, 0.0]).unwrap(),
        ];
        match fan_limit_cell(&g, &base, &seed, 100).unwrap() {
            CellAtInfinity::FanCone { hausdorff, .. } => {
                assert!(hausdorff < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn elliptic_recurrence_is_undetermined() {
        // No dominant real eigenray: the fan iteration cannot converge.
        let th = 0.9_f64;
        let g = ProjMap::from_rows(&[
            vec![th.cos(), -th.sin(), 0.0],
            vec![th.sin(), th.cos(), 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let base = vec![Ray::from_slice(&[0.0, 0.0, 1.0]).unwrap()];
        let seed = vec![Ray::from_slice(&[1.0, 0.2, 0.4]).unwrap()];
        assert!(matches!(
            fan_limit_cell(&g, &base, &seed, 50).unwrap(),
            CellAtInfinity::Undetermined { .. }
        ));
    }

    #[test]
    fn union_hilbert_reduces_to_single_tile() {
        use crate::ray::Chart;
        let chart = Chart::standard(2);
        let vs = [
            [-1.0, -1.0, 1.0],
            [1.0, -1.0, 1.0],
            [1.0, 1.0, 1.0],
            [-1.0, 1.0, 1.0],
        ];
        let verts: Vec<Ray> = vs.iter().map(|v| Ray::from_slice(v).unwrap()).collect();
        let sq = ConvexBody::polygon(verts, chart).unwrap();
        // Along the x-axis the square is the interval (-1, 1).
        let a = DVector::from_column_slice(&[0.0, 0.0, 1.0]);
        let b = DVector::from_column_slice(&[0.5, 0.0, 1.0]);
        let d = union_hilbert_distance(&[sq], &a, &b).unwrap();
        assert_relative_eq!(d, 0.5 * 3.0_f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn nested_interval_birkhoff_contraction() {
        // Three nested segments forming a visible triple: the Hilbert metric
        // of the inner domain strictly dominates, with a uniform factor.
        use crate::ray::Chart;
        let chart = Chart::standard(1);
        let line = |t: f64| Ray::from_slice(&[t, 1.0]).unwrap();
        let outer = ConvexBody::interval(line(-2.0), line(2.0), chart.clone()).unwrap();
        let inner = ConvexBody::interval(line(-1.0), line(1.0), chart).unwrap();
        let mut min_ratio = f64::INFINITY;
        for k in 1..20 {
            let x = line(-0.9 + 0.04 * k as f64);
            let y = line(-0.9 + 0.04 * (k + 5) as f64);
            let di = crate::metric::hilbert_distance(&inner, &x, &y).unwrap();
            let do_ = crate::metric::hilbert_distance(&outer, &x, &y).unwrap();
            if do_ > 1e-12 {
                min_ratio = min_ratio.min(di / do_);
            }
        }
        assert!(min_ratio > 1.0, "contraction factor {min_ratio}");
    }
}
