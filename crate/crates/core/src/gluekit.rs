//! Developing the tree of tiles of a glued scene and certifying the
//! local-to-global convexity conditions: half-space certificates along walls,
//! the half-circle criterion at corners, ghost-stratum detection, and the
//! sampling cross-check.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::lp::{maximize_free, LpOutcome};
use crate::ray::{ProjMap, Ray};
use crate::sample::{convexity_sample_oracle, OracleOutcome, SampleOptions};
use crate::scene::{GluingKit, KitCorner};

#[derive(Debug, Clone)]
pub struct TileRecord {
    pub block: usize,
    /// Signed 1-based pairing references from the root.
    pub word: Vec<i64>,
    pub map: ProjMap,
    pub vertices: Vec<Ray>,
    pub parent: Option<usize>,
    /// The pairing reference by which this tile was entered.
    pub via: Option<i64>,
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct Adjacency {
    pub from: usize,
    pub to: usize,
    pub pairing: i64,
    /// Developed shared face.
    pub face: Vec<Ray>,
}

#[derive(Debug, Clone)]
pub struct TileSet {
    pub dim: usize,
    pub tiles: Vec<TileRecord>,
    pub adjacency: Vec<Adjacency>,
    /// Developed polygon bodies (dimension 2 only); empty when some tile
    /// failed to embed as a chart-convex polygon.
    pub bodies: Vec<ConvexBody>,
    /// Why the bodies are unavailable, when they are.
    pub body_failure: Option<String>,
}

impl TileSet {
    /// Children of a tile in the development tree.
    pub fn children(&self, tile: usize) -> Vec<usize> {
        self.tiles
            .iter()
            .enumerate()
            .filter(|(_, t)| t.parent == Some(tile))
            .map(|(i, _)| i)
            .collect()
    }

    /// The root-to-leaf path of tile indices.
    pub fn branch_to(&self, leaf: usize) -> Vec<usize> {
        let mut path = vec![leaf];
        let mut cur = leaf;
        while let Some(p) = self.tiles[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

/// BFS development of the scene tree to the given depth. Deterministic: tiles
/// are processed in index order and children spawned in wall order.
pub fn develop(kit: &GluingKit, depth: usize) -> Result<TileSet> {
    let root_block = 0;
    let mut tiles = vec![TileRecord {
        block: root_block,
        word: Vec::new(),
        map: ProjMap::identity(kit.dim),
        vertices: kit.blocks[root_block].body.vertices().to_vec(),
        parent: None,
        via: None,
        depth: 0,
    }];
    let mut adjacency = Vec::new();
    let mut cursor = 0;
    while cursor < tiles.len() {
        let tile = tiles[cursor].clone();
        if tile.depth == depth {
            cursor += 1;
            continue;
        }
        for &wi in &kit.blocks[tile.block].walls {
            let wall = &kit.walls[wi];
            let (pi, inverse) = (wall.pairing, !wall.is_side_a);
            let signed: i64 = if inverse {
                -((pi + 1) as i64)
            } else {
                (pi + 1) as i64
            };
            // Do not cross back through the wall we entered by.
            if tile.via == Some(-signed) {
                continue;
            }
            let step = if inverse {
                kit.pairings[pi].map.inverse()
            } else {
                kit.pairings[pi].map.clone()
            };
            let child_block = kit.crossing_target(pi, inverse);
            let child_map = tile.map.compose(&step);
            let child_vertices: Vec<Ray> = kit.blocks[child_block]
                .body
                .vertices()
                .iter()
                .map(|v| child_map.apply(v))
                .collect();

            // The developed shared face must match from both sides.
            let (src_wall, dst_wall) = kit.crossing_walls(pi, inverse);
            let src_face: Vec<Ray> = kit
                .face_rays(src_wall)
                .iter()
                .map(|v| tile.map.apply(v))
                .collect();
            let dst_face: Vec<Ray> = kit
                .face_rays(dst_wall)
                .iter()
                .map(|v| child_map.apply(v))
                .collect();
            let deviation = face_set_deviation(&src_face, &dst_face);
            if deviation > kit.tol.max(1e-12) * 1e3 {
                return Err(Error::WallMismatch {
                    edge: kit.walls[src_wall].id.clone(),
                    deviation,
                });
            }

            let mut word = tile.word.clone();
            word.push(signed);
            tiles.push(TileRecord {
                block: child_block,
                word,
                map: child_map,
                vertices: child_vertices,
                parent: Some(cursor),
                via: Some(signed),
                depth: tile.depth + 1,
            });
            adjacency.push(Adjacency {
                from: cursor,
                to: tiles.len() - 1,
                pairing: signed,
                face: src_face,
            });
        }
        cursor += 1;
    }

    let (bodies, body_failure) = if kit.dim == 2 {
        match tiles
            .iter()
            .map(|t| {
                ConvexBody::polygon_with_tol(
                    t.vertices.clone(),
                    kit.chart.clone(),
                    kit.tol.max(1e-9) * 100.0,
                )
            })
            .collect::<Result<Vec<_>>>()
        {
            Ok(b) => (b, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        }
    } else {
        (Vec::new(), None)
    };
    Ok(TileSet {
        dim: kit.dim,
        tiles,
        adjacency,
        bodies,
        body_failure,
    })
}

/// Largest distance between corresponding vertices of two developed faces,
/// matched as sets.
fn face_set_deviation(a: &[Ray], b: &[Ray]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for ra in a {
        let best = b
            .iter()
            .map(|rb| {
                ra.chordal_distance(rb)
                    .min(ra.antipode().chordal_distance(rb))
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct WallCheck {
    pub pairing: usize,
    pub wall_a: String,
    pub wall_b: String,
    pub pass: bool,
    /// Smallest LP slack over the boundary classes of the shared face.
    pub margin: f64,
    /// Failing boundary point, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

/// Half-space condition along one wall orbit: for every relative-boundary
/// class of the shared face, a half-space of the sphere containing both
/// adjacent tiles with the class on its boundary.
pub fn check_wall_condition(kit: &GluingKit, pairing: usize) -> Result<WallCheck> {
    if pairing >= kit.pairings.len() {
        return Err(Error::SceneError(format!("no pairing {pairing}")));
    }
    let p = &kit.pairings[pairing];
    let block_a = kit.walls[p.id_a].block;
    let block_b = kit.walls[p.id_b].block;
    // Develop the representative edge: block_a at identity, the neighbor by
    // the pairing map.
    let verts_a: Vec<Ray> = kit.blocks[block_a].body.vertices().to_vec();
    let verts_b: Vec<Ray> = kit.blocks[block_b]
        .body
        .vertices()
        .iter()
        .map(|v| p.map.apply(v))
        .collect();
    let face: Vec<Ray> = kit.face_rays(p.id_a);

    // Relative-boundary classes of the face. For an edge (d = 2): its two
    // endpoints. In higher dimension every vertex of the face is checked (a
    // conservative subset of the full class list).
    let classes: Vec<Vec<&Ray>> = if face.len() == 2 {
        vec![vec![&face[0]], vec![&face[1]]]
    } else {
        face.iter().map(|r| vec![r]).collect()
    };

    let mut margin = f64::INFINITY;
    for class in &classes {
        match halfspace_through(class, &[&verts_a, &verts_b]) {
            Some(m) => margin = margin.min(m),
            None => {
                return Ok(WallCheck {
                    pairing,
                    wall_a: kit.walls[p.id_a].id.clone(),
                    wall_b: kit.walls[p.id_b].id.clone(),
                    pass: false,
                    margin: f64::NEG_INFINITY,
                    witness: Some(class[0].coords().as_slice().to_vec()),
                });
            }
        }
    }
    Ok(WallCheck {
        pairing,
        wall_a: kit.walls[p.id_a].id.clone(),
        wall_b: kit.walls[p.id_b].id.clone(),
        pass: true,
        margin,
        witness: None,
    })
}

/// LP search for a half-space functional vanishing on `anchor` rays and
/// nonnegative on all vertex groups; returns the achieved mean slack.
fn halfspace_through(anchors: &[&Ray], groups: &[&Vec<Ray>]) -> Option<f64> {
    let n = anchors[0].coords().len();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut total = DVector::zeros(n);
    for g in groups {
        for v in g.iter() {
            rows.push(v.coords().clone());
            total += v.coords();
        }
    }
    let k = rows.len();
    // Constraints: -(v . psi) <= 0, psi(anchor) = 0 (two inequalities), box.
    let m = k + 2 * anchors.len() + 2 * n;
    let mut a = DMatrix::zeros(m, n);
    let mut b = DVector::zeros(m);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..n {
            a[(i, j)] = -r[j];
        }
    }
    for (t, anchor) in anchors.iter().enumerate() {
        for j in 0..n {
            a[(k + 2 * t, j)] = anchor.coords()[j];
            a[(k + 2 * t + 1, j)] = -anchor.coords()[j];
        }
    }
    for j in 0..n {
        a[(k + 2 * anchors.len() + 2 * j, j)] = 1.0;
        b[k + 2 * anchors.len() + 2 * j] = 1.0;
        a[(k + 2 * anchors.len() + 2 * j + 1, j)] = -1.0;
        b[k + 2 * anchors.len() + 2 * j + 1] = 1.0;
    }
    match maximize_free(&total, &a, &b) {
        LpOutcome::Optimal { x, value } => {
            if value <= 1e-9 * k as f64 {
                None
            } else {
                // Mean slack of the normalized functional.
                let nrm = x.norm().max(1e-300);
                Some(value / (k as f64 * nrm))
            }
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CornerCheck {
    pub corner: String,
    pub pass: bool,
    /// Trace of the normalized quotient meridian.
    pub trace: f64,
    /// `trace - 2`; criterion (i) needs `>= 0` (within tolerance).
    pub trace_margin: f64,
    /// Minimal angular distance from the period arcs to an eigenline;
    /// criterion (ii) needs `> 0`.
    pub eigenline_distance: f64,
    pub parabolic: bool,
}

/// Half-circle criterion at a corner: project the period's tiles to the
/// quotient circle of the corner span, normalize the meridian, and test the
/// trace and eigenline conditions.
pub fn check_corner_condition(kit: &GluingKit, corner_idx: usize) -> Result<CornerCheck> {
    let corner = kit
        .corners
        .get(corner_idx)
        .ok_or_else(|| Error::SceneError(format!("no corner {corner_idx}")))?;
    let g = kit.word_matrix(&corner.word);
    let corner_rays = kit.corner_rays(corner);
    let n = kit.dim + 1;
    if corner_rays.len() != kit.dim - 1 {
        return Err(Error::BadMeridian {
            corner: corner.id.clone(),
            reason: format!(
                "corner face must span codimension 2 ({} rays for dimension {})",
                corner_rays.len(),
                kit.dim
            ),
        });
    }

    // The span must be fixed pointwise by the meridian.
    let mut span = DMatrix::zeros(n, corner_rays.len());
    for (j, r) in corner_rays.iter().enumerate() {
        span.column_mut(j).copy_from(r.coords());
    }
    let sigma = {
        let gv = g.apply_vec(corner_rays[0].coords());
        gv.dot(corner_rays[0].coords())
    };
    for r in &corner_rays {
        let gv = g.apply_vec(r.coords());
        if (gv.clone() - r.coords() * sigma).norm() > 1e-7 * (1.0 + sigma.abs()) {
            return Err(Error::BadMeridian {
                corner: corner.id.clone(),
                reason: "meridian does not fix the corner span pointwise".into(),
            });
        }
    }
    if sigma <= 0.0 {
        return Err(Error::BadMeridian {
            corner: corner.id.clone(),
            reason: "meridian reverses the corner rays".into(),
        });
    }

    // Quotient by the span: complete the basis, conjugate, read the 2x2
    // bottom block.
    let basis = complete_basis(&span)?;
    let binv = basis
        .clone()
        .try_inverse()
        .ok_or(Error::NormalFormFailure("corner basis inversion"))?;
    let conj = &binv * g.matrix() * &basis;
    let k = corner_rays.len();
    let mut gq = DMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            gq[(i, j)] = conj[(k + i, k + j)];
        }
    }
    // Lower-left block must vanish (span invariance already checked).
    let det = gq.determinant();
    if det <= 0.0 {
        return Err(Error::BadMeridian {
            corner: corner.id.clone(),
            reason: "orientation-reversing meridian on the quotient circle".into(),
        });
    }
    let gq_n = &gq / det.sqrt();
    let trace = gq_n.trace();
    let trace_margin = trace - 2.0;
    let nontrivial = (&gq_n - DMatrix::identity(2, 2)).norm() > 1e-9;
    let parabolic = trace_margin.abs() < 1e-9;

    // Project the period tiles to the quotient circle and collect arcs.
    let mut arcs: Vec<(f64, f64)> = Vec::new();
    let mut prefix: Vec<(usize, bool)> = Vec::new();
    let mut block = corner.block;
    for step in 0..=corner.word.len() {
        let m = kit.word_matrix(&prefix);
        let tile_rays: Vec<Ray> = kit.blocks[block]
            .body
            .vertices()
            .iter()
            .map(|v| m.apply(v))
            .collect();
        // Every period tile must contain the corner face.
        for cr in &corner_rays {
            let hit = tile_rays
                .iter()
                .any(|t| t.approx_eq(cr, 1e-7) || t.antipode().approx_eq(cr, 1e-7));
            if !hit {
                return Err(Error::BadMeridian {
                    corner: corner.id.clone(),
                    reason: format!("period tile {step} does not contain the corner face"),
                });
            }
        }
        if step == corner.word.len() {
            break;
        }
        let mut angles = Vec::new();
        for t in &tile_rays {
            let q = &binv * t.coords();
            let (x, y) = (q[k], q[k + 1]);
            if (x * x + y * y).sqrt() > 1e-7 {
                angles.push(y.atan2(x));
            }
        }
        if let Some(arc) = angular_hull(&angles) {
            arcs.push(arc);
        }
        let (pi, inv) = corner.word[step];
        prefix.push((pi, inv));
        block = kit.crossing_target(pi, inv);
    }

    // Eigenline angles of the normalized quotient map.
    let eigen_angles = circle_eigen_angles(&gq_n);
    let mut eigenline_distance = f64::INFINITY;
    for (lo, hi) in &arcs {
        for &alpha in &eigen_angles {
            for shift in [0.0, std::f64::consts::PI] {
                let d = arc_distance(alpha + shift, *lo, *hi);
                eigenline_distance = eigenline_distance.min(d);
            }
        }
    }
    if eigen_angles.is_empty() {
        eigenline_distance = f64::NEG_INFINITY; // elliptic: no eigenline
    }

    let pass = nontrivial && trace_margin >= -1e-9 && eigenline_distance > 1e-9;
    Ok(CornerCheck {
        corner: corner.id.clone(),
        pass,
        trace,
        trace_margin,
        eigenline_distance: if eigenline_distance.is_finite() {
            eigenline_distance
        } else {
            0.0
        },
        parabolic,
    })
}

/// The `(block, vertex index)` members of a corner orbit, found by walking
/// the meridian word and matching the corner face rays in each period tile.
pub fn corner_orbit_members(kit: &GluingKit, corner: &KitCorner) -> Vec<(usize, usize)> {
    let corner_rays = kit.corner_rays(corner);
    let mut members = Vec::new();
    let mut prefix: Vec<(usize, bool)> = Vec::new();
    let mut block = corner.block;
    for step in 0..corner.word.len() {
        let m = kit.word_matrix(&prefix);
        for (vi, v) in kit.blocks[block].body.vertices().iter().enumerate() {
            let dev = m.apply(v);
            if corner_rays
                .iter()
                .any(|cr| dev.approx_eq(cr, 1e-7) || dev.antipode().approx_eq(cr, 1e-7))
                && !members.contains(&(block, vi))
            {
                members.push((block, vi));
            }
        }
        let (pi, inv) = corner.word[step];
        prefix.push((pi, inv));
        block = kit.crossing_target(pi, inv);
    }
    members
}

/// Complete `k` independent columns to a basis of `R^n` with orthonormal
/// completion.
fn complete_basis(cols: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cols.nrows();
    let k = cols.ncols();
    let mut basis = DMatrix::zeros(n, n);
    for j in 0..k {
        basis.column_mut(j).copy_from(&cols.column(j));
    }
    let mut have = k;
    for i in 0..n {
        if have == n {
            break;
        }
        let mut e: DVector<f64> = DVector::zeros(n);
        e[i] = 1.0;
        // Orthogonalize against current columns (Euclidean).
        for j in 0..have {
            let c: DVector<f64> = basis.column(j).into();
            let denom = c.dot(&c);
            e -= &c * (c.dot(&e) / denom);
        }
        if e.norm() > 1e-8 {
            e /= e.norm();
            basis.column_mut(have).copy_from(&e);
            have += 1;
        }
    }
    if have < n {
        return Err(Error::NormalFormFailure("could not complete corner basis"));
    }
    Ok(basis)
}

/// Minimal arc containing the given angles, as `(lo, hi)` with
/// `hi - lo < 2 pi`; `None` for empty input.
fn angular_hull(angles: &[f64]) -> Option<(f64, f64)> {
    if angles.is_empty() {
        return None;
    }
    let mut sorted: Vec<f64> = angles.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len();
    let two_pi = 2.0 * std::f64::consts::PI;
    // Largest gap determines the complement of the hull.
    let mut best_gap = sorted[0] + two_pi - sorted[m - 1];
    let mut best_at = m - 1;
    for i in 0..m - 1 {
        let gap = sorted[i + 1] - sorted[i];
        if gap > best_gap {
            best_gap = gap;
            best_at = i;
        }
    }
    let lo = sorted[(best_at + 1) % m];
    let hi = if best_at == m - 1 {
        sorted[m - 1]
    } else {
        sorted[best_at] + two_pi
    };
    Some((lo, hi))
}

/// Distance from the angle `alpha` to the arc `[lo, hi]` on the circle.
fn arc_distance(alpha: f64, lo: f64, hi: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = alpha;
    while a < lo - std::f64::consts::PI {
        a += two_pi;
    }
    while a > hi + std::f64::consts::PI {
        a -= two_pi;
    }
    if a >= lo && a <= hi {
        0.0
    } else if a < lo {
        lo - a
    } else {
        a - hi
    }
}

/// Fixed-ray angles of a normalized 2x2 map on the circle (empty when
/// elliptic).
fn circle_eigen_angles(m: &DMatrix<f64>) -> Vec<f64> {
    let tr = m.trace();
    if tr.abs() < 2.0 - 1e-12 {
        return Vec::new();
    }
    let disc = (tr * tr / 4.0 - 1.0).max(0.0).sqrt();
    let mut out = Vec::new();
    for lam in [tr / 2.0 + disc, tr / 2.0 - disc] {
        let a = m[(0, 0)] - lam;
        let b = m[(0, 1)];
        let c = m[(1, 0)];
        let d = m[(1, 1)] - lam;
        let v = if a.abs().max(b.abs()) >= c.abs().max(d.abs()) {
            (b, -a)
        } else {
            (d, -c)
        };
        if (v.0 * v.0 + v.1 * v.1).sqrt() > 1e-12 {
            out.push(v.1.atan2(v.0));
        }
    }
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ContainmentCheck {
    pub wall: String,
    pub pass: bool,
    /// 1.0 when every block vertex lies in `cone(face, polar)`, -1.0 if some
    /// vertex escapes the cone.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GhostReport {
    /// Pairs of wall instances whose closed developed faces intersect away
    /// from declared corner instances.
    pub flagged: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplingReport {
    pub segments: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub pass: bool,
    pub depth: usize,
    pub walls: Vec<WallCheck>,
    pub corners: Vec<CornerCheck>,
    pub containment: Vec<ContainmentCheck>,
    pub ghosts: GhostReport,
    pub sampling: SamplingReport,
}

/// Full convexity certification: wall condition on every wall orbit, corner
/// condition on every corner orbit, ghost-stratum detection, and the
/// sampling oracle as an independent cross-check on the developed tiles.
pub fn certify_convexity(kit: &GluingKit, depth: usize) -> Result<Certificate> {
    let mut pass = true;

    let mut walls = Vec::with_capacity(kit.pairings.len());
    for pi in 0..kit.pairings.len() {
        let chk = check_wall_condition(kit, pi)?;
        pass &= chk.pass;
        walls.push(chk);
    }

    let mut corners = Vec::with_capacity(kit.corners.len());
    for ci in 0..kit.corners.len() {
        let chk = check_corner_condition(kit, ci)?;
        pass &= chk.pass;
        corners.push(chk);
    }

    // Declared polars: containment condition via cone membership.
    let mut containment = Vec::new();
    for w in &kit.walls {
        if let Some(polar) = &w.polar {
            let face = kit.face_rays_of(w);
            let chk = containment_margin(&kit.blocks[w.block].body, &face, polar);
            pass &= chk >= -1e-9;
            containment.push(ContainmentCheck {
                wall: w.id.clone(),
                pass: chk >= -1e-9,
                margin: chk,
            });
        }
    }

    // Ghost strata at a shallow depth.
    let ghost_depth = depth.min(4);
    let tiles_shallow = develop(kit, ghost_depth)?;
    let ghosts = detect_ghost_strata(kit, &tiles_shallow);
    pass &= ghosts.flagged.is_empty();

    // Sampling cross-check on the full development.
    let tiles = develop(kit, depth)?;
    let sampling = if kit.dim == 2 && tiles.bodies.is_empty() {
        // The development left the chart or produced a non-convex chart
        // polygon: not properly convex in this chart.
        pass = false;
        SamplingReport {
            segments: 0,
            pass: false,
            counterexample: None,
        }
    } else if kit.dim == 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(kit.seed);
        let opts = SampleOptions {
            segments: kit.samples,
            points_per_segment: 12,
            tol: kit.tol.max(1e-9) * 100.0,
        };
        match convexity_sample_oracle(&tiles.bodies, &opts, &mut rng)? {
            OracleOutcome::Pass { segments } => SamplingReport {
                segments,
                pass: true,
                counterexample: None,
            },
            OracleOutcome::Counterexample { violating, .. } => {
                pass = false;
                SamplingReport {
                    segments: kit.samples,
                    pass: false,
                    counterexample: Some(violating.coords().as_slice().to_vec()),
                }
            }
        }
    } else {
        SamplingReport {
            segments: 0,
            pass: true,
            counterexample: None,
        }
    };

    Ok(Certificate {
        pass,
        depth,
        walls,
        corners,
        containment,
        ghosts,
        sampling,
    })
}

impl GluingKit {
    fn face_rays_of(&self, w: &crate::scene::KitWall) -> Vec<Ray> {
        w.face
            .iter()
            .map(|&vi| self.blocks[w.block].body.vertices()[vi].clone())
            .collect()
    }
}

/// Cone membership margin of every block vertex in `cone(face, polar)`:
/// the least coefficient margin of the nonnegative solve (negative when some
/// vertex leaves the cone).
fn containment_margin(body: &ConvexBody, face: &[Ray], polar: &Ray) -> f64 {
    let n = polar.coords().len();
    let k = face.len() + 1;
    let mut gens = DMatrix::zeros(n, k);
    for (j, f) in face.iter().enumerate() {
        gens.column_mut(j).copy_from(f.coords());
    }
    gens.column_mut(face.len()).copy_from(polar.coords());
    let mut worst = f64::INFINITY;
    for v in body.vertices() {
        // Does v = sum c_i g_i with c >= 0 for one of the sign choices of v?
        let ok = [v.coords().clone(), -v.coords()]
            .iter()
            .any(|cand| crate::lp::nonneg_solution(&gens, cand).is_some());
        worst = worst.min(if ok { 1.0 } else { -1.0 });
    }
    worst
}

/// Pairwise closed-wall intersection check: any intersection point of two
/// developed walls that is not a developed corner instance is flagged.
pub fn detect_ghost_strata(kit: &GluingKit, tiles: &TileSet) -> GhostReport {
    let mut flagged = Vec::new();
    if kit.dim != 2 {
        return GhostReport { flagged };
    }
    let chart = &kit.chart;
    // Developed corner instances: every vertex in any corner orbit, pushed
    // around by all tile words.
    let mut orbit_vertices: Vec<(usize, usize)> = Vec::new();
    for c in &kit.corners {
        for m in corner_orbit_members(kit, c) {
            if !orbit_vertices.contains(&m) {
                orbit_vertices.push(m);
            }
        }
    }
    let mut corner_points: Vec<DVector<f64>> = Vec::new();
    for t in &tiles.tiles {
        for &(b, vi) in &orbit_vertices {
            if b == t.block {
                let r = t.map.apply(&kit.blocks[b].body.vertices()[vi]);
                if let Some(rep) = chart.rep(&r) {
                    corner_points.push(rep);
                }
            }
        }
    }
    let near_corner = |p: &DVector<f64>| corner_points.iter().any(|c| (c - p).norm() < 1e-7);

    let segs: Vec<(usize, [DVector<f64>; 2])> = tiles
        .adjacency
        .iter()
        .enumerate()
        .filter_map(|(i, adj)| {
            if adj.face.len() != 2 {
                return None;
            }
            let a = chart.rep(&adj.face[0])?;
            let b = chart.rep(&adj.face[1])?;
            Some((i, [a, b]))
        })
        .collect();
    for i in 0..segs.len() {
        for j in (i + 1)..segs.len() {
            if let Some(p) = closed_segment_intersection(&segs[i].1, &segs[j].1) {
                if !near_corner(&p) {
                    flagged.push(format!(
                        "walls of adjacency {} and {} meet at an undeclared point",
                        segs[i].0, segs[j].0
                    ));
                }
            }
        }
    }
    GhostReport { flagged }
}

/// Intersection point of two closed 2-D segments (chart reps), if isolated.
/// Collinear overlaps report the overlap midpoint.
fn closed_segment_intersection(
    s1: &[DVector<f64>; 2],
    s2: &[DVector<f64>; 2],
) -> Option<DVector<f64>> {
    // Work in the first two chart coordinates.
    let p = [s1[0][0], s1[0][1]];
    let r = [s1[1][0] - p[0], s1[1][1] - p[1]];
    let q = [s2[0][0], s2[0][1]];
    let s = [s2[1][0] - q[0], s2[1][1] - q[1]];
    let cross = |a: &[f64; 2], b: &[f64; 2]| a[0] * b[1] - a[1] * b[0];
    let qp = [q[0] - p[0], q[1] - p[1]];
    let rxs = cross(&r, &s);
    let scale = (r[0].hypot(r[1])) * (s[0].hypot(s[1]));
    if rxs.abs() <= 1e-12 * scale.max(1e-300) {
        // Parallel; check collinear overlap.
        if cross(&qp, &r).abs() > 1e-9 * scale.max(1e-300) {
            return None;
        }
        let rr = r[0] * r[0] + r[1] * r[1];
        if rr < 1e-300 {
            return None;
        }
        let t0 = (qp[0] * r[0] + qp[1] * r[1]) / rr;
        let t1 = t0 + (s[0] * r[0] + s[1] * r[1]) / rr;
        let (lo, hi) = (t0.min(t1).max(0.0), t0.max(t1).min(1.0));
        if lo > hi + 1e-9 {
            return None;
        }
        let tm = (lo + hi) / 2.0;
        let mut out = s1[0].clone();
        out[0] = p[0] + tm * r[0];
        out[1] = p[1] + tm * r[1];
        return Some(out);
    }
    let t = cross(&qp, &s) / rxs;
    let u = cross(&qp, &r) / rxs;
    let eps = 1e-9;
    if t < -eps || t > 1.0 + eps || u < -eps || u > 1.0 + eps {
        return None;
    }
    let mut out = s1[0].clone();
    out[0] = p[0] + t * r[0];
    out[1] = p[1] + t * r[1];
    Some(out)
}
