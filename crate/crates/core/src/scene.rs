//! Scene files: a single versioned JSON document declaring the blocks, walls
//! with bulging parameters, wall pairings, and corner orbits of a glued
//! scene. Matrices are row-major, rays are length-`(d+1)` arrays.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::ray::{Chart, ProjMap, Ray};

pub const SCENE_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    pub version: u32,
    pub dimension: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub seed: u64,
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Chart functional, length `d + 1`.
    pub chart: Vec<f64>,
    pub blocks: Vec<SceneBlock>,
    pub walls: Vec<SceneWall>,
    pub pairings: Vec<ScenePairing>,
    #[serde(default)]
    pub corners: Vec<SceneCorner>,
    /// Segment count for the sampling cross-check.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_depth() -> usize {
    3
}

fn default_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneBlock {
    pub id: String,
    /// Boundary-ordered vertex rays (d = 2) or a general vertex list.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
    /// Alternative half-space presentation `{x : n . x >= 0}`, d = 2 only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halfspaces: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneWall {
    pub id: String,
    pub block: String,
    /// Vertex indices of the wall face in its block.
    pub face: Vec<usize>,
    /// Optional polar point for the containment check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polar: Option<Vec<f64>>,
    #[serde(default = "default_mu")]
    pub mu: f64,
}

fn default_mu() -> f64 {
    1.0
}

/// `[wall_a, wall_b, matrix]`: crossing a tile's `wall_a` spawns a copy of
/// `wall_b`'s block with the word extended by the matrix; the reverse
/// crossing uses the inverse.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenePairing(pub String, pub String, pub Vec<Vec<f64>>);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneCorner {
    pub id: String,
    pub block: String,
    /// Vertex indices of the codimension-2 face in the block.
    pub face: Vec<usize>,
    pub angle: f64,
    /// Signed 1-based pairing references; negative means the reverse
    /// crossing. The full product is the meridian holonomy.
    pub meridian_word: Vec<i64>,
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Scene> {
        let scene: Scene =
            serde_json::from_str(text).map_err(|e| Error::SceneError(format!("parse: {e}")))?;
        if scene.version != SCENE_VERSION {
            return Err(Error::SceneError(format!(
                "unsupported scene version {} (expected {SCENE_VERSION})",
                scene.version
            )));
        }
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

/// Compiled scene: validated bodies, resolved references, ready to develop.
#[derive(Debug, Clone)]
pub struct GluingKit {
    pub dim: usize,
    pub tol: f64,
    pub seed: u64,
    pub default_depth: usize,
    pub samples: usize,
    pub chart: Chart,
    pub blocks: Vec<KitBlock>,
    pub walls: Vec<KitWall>,
    pub pairings: Vec<KitPairing>,
    pub corners: Vec<KitCorner>,
}

#[derive(Debug, Clone)]
pub struct KitBlock {
    pub id: String,
    pub body: ConvexBody,
    /// Walls declared on this block (indices into `walls`).
    pub walls: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct KitWall {
    pub id: String,
    pub block: usize,
    pub face: Vec<usize>,
    pub mu: f64,
    pub polar: Option<Ray>,
    /// The pairing this wall belongs to and whether it is the `a` side.
    pub pairing: usize,
    pub is_side_a: bool,
}

#[derive(Debug, Clone)]
pub struct KitPairing {
    pub id_a: usize,
    pub id_b: usize,
    pub map: ProjMap,
}

#[derive(Debug, Clone)]
pub struct KitCorner {
    pub id: String,
    pub block: usize,
    pub face: Vec<usize>,
    pub angle: f64,
    /// `(pairing index, inverse?)` factors of the meridian word.
    pub word: Vec<(usize, bool)>,
}

impl GluingKit {
    pub fn compile(scene: &Scene) -> Result<GluingKit> {
        let dim = scene.dimension;
        let chart = Chart::new(DVector::from_column_slice(&scene.chart))
            .map_err(|_| Error::SceneError("bad chart functional".into()))?;
        if scene.chart.len() != dim + 1 {
            return Err(Error::SceneError("chart length must be d + 1".into()));
        }
        if scene.blocks.is_empty() {
            return Err(Error::SceneError("scene has no blocks".into()));
        }

        let mut blocks = Vec::with_capacity(scene.blocks.len());
        for b in &scene.blocks {
            let vertices = block_vertices(b, dim, &chart)?;
            let body = match dim {
                2 => ConvexBody::polygon(vertices, chart.clone())
                    .map_err(|e| Error::SceneError(format!("block `{}`: {e}", b.id)))?,
                1 => {
                    if vertices.len() != 2 {
                        return Err(Error::SceneError(format!(
                            "block `{}`: 1-dimensional blocks are intervals",
                            b.id
                        )));
                    }
                    ConvexBody::interval(vertices[0].clone(), vertices[1].clone(), chart.clone())
                        .map_err(|e| Error::SceneError(format!("block `{}`: {e}", b.id)))?
                }
                _ => ConvexBody::polytope(vertices, chart.clone())
                    .map_err(|e| Error::SceneError(format!("block `{}`: {e}", b.id)))?,
            };
            blocks.push(KitBlock {
                id: b.id.clone(),
                body,
                walls: Vec::new(),
            });
        }
        let block_ids: Vec<String> = blocks.iter().map(|b| b.id.clone()).collect();
        let block_index = move |id: &str| -> Result<usize> {
            block_ids
                .iter()
                .position(|b| b == id)
                .ok_or_else(|| Error::SceneError(format!("unknown block `{id}`")))
        };

        let mut walls = Vec::with_capacity(scene.walls.len());
        for w in &scene.walls {
            let bi = block_index(&w.block)?;
            let nverts = blocks[bi].body.vertices().len();
            if w.face.is_empty() || w.face.iter().any(|&v| v >= nverts) {
                return Err(Error::SceneError(format!(
                    "wall `{}` has face indices outside block `{}`",
                    w.id, w.block
                )));
            }
            if w.mu <= 0.0 {
                return Err(Error::SceneError(format!(
                    "wall `{}` has non-positive bulge parameter",
                    w.id
                )));
            }
            let polar = match &w.polar {
                Some(p) => Some(
                    Ray::from_slice(p)
                        .map_err(|_| Error::SceneError(format!("wall `{}`: bad polar", w.id)))?,
                ),
                None => None,
            };
            walls.push(KitWall {
                id: w.id.clone(),
                block: bi,
                face: w.face.clone(),
                mu: w.mu,
                polar,
                pairing: usize::MAX,
                is_side_a: false,
            });
        }
        let wall_ids: Vec<String> = walls.iter().map(|w| w.id.clone()).collect();
        let wall_index = move |id: &str| -> Result<usize> {
            wall_ids
                .iter()
                .position(|w| w == id)
                .ok_or_else(|| Error::SceneError(format!("unknown wall `{id}`")))
        };

        let mut pairings = Vec::with_capacity(scene.pairings.len());
        for (pi, p) in scene.pairings.iter().enumerate() {
            let ia = wall_index(&p.0)?;
            let ib = wall_index(&p.1)?;
            if ia == ib {
                return Err(Error::SceneError(format!(
                    "pairing {pi} fixes wall `{}`; the involution must not preserve a boundary component",
                    p.0
                )));
            }
            let map = ProjMap::from_rows(&p.2)
                .map_err(|e| Error::SceneError(format!("pairing {pi}: {e}")))?;
            if map.matrix().nrows() != dim + 1 {
                return Err(Error::SceneError(format!(
                    "pairing {pi}: matrix must be {} x {}",
                    dim + 1,
                    dim + 1
                )));
            }
            pairings.push(KitPairing {
                id_a: ia,
                id_b: ib,
                map,
            });
        }
        // Each wall belongs to exactly one pairing.
        for (pi, p) in pairings.iter().enumerate() {
            for (wi, side_a) in [(p.id_a, true), (p.id_b, false)] {
                if walls[wi].pairing != usize::MAX {
                    return Err(Error::SceneError(format!(
                        "wall `{}` appears in two pairings",
                        walls[wi].id
                    )));
                }
                walls[wi].pairing = pi;
                walls[wi].is_side_a = side_a;
            }
        }
        if let Some(w) = walls.iter().find(|w| w.pairing == usize::MAX) {
            return Err(Error::SceneError(format!("wall `{}` is unpaired", w.id)));
        }
        let wall_blocks: Vec<usize> = walls.iter().map(|w| w.block).collect();
        for (wi, &bi) in wall_blocks.iter().enumerate() {
            blocks[bi].walls.push(wi);
        }

        let mut corners = Vec::with_capacity(scene.corners.len());
        for c in &scene.corners {
            let bi = block_index(&c.block)?;
            let nverts = blocks[bi].body.vertices().len();
            if c.face.is_empty() || c.face.iter().any(|&v| v >= nverts) {
                return Err(Error::SceneError(format!(
                    "corner `{}` has face indices outside block `{}`",
                    c.id, c.block
                )));
            }
            if c.meridian_word.is_empty() {
                return Err(Error::SceneError(format!(
                    "corner `{}` has an empty meridian word",
                    c.id
                )));
            }
            let mut word = Vec::with_capacity(c.meridian_word.len());
            for &s in &c.meridian_word {
                if s == 0 || s.unsigned_abs() as usize > pairings.len() {
                    return Err(Error::SceneError(format!(
                        "corner `{}`: meridian entry {s} out of range",
                        c.id
                    )));
                }
                word.push((s.unsigned_abs() as usize - 1, s < 0));
            }
            corners.push(KitCorner {
                id: c.id.clone(),
                block: bi,
                face: c.face.clone(),
                angle: c.angle,
                word,
            });
        }

        Ok(GluingKit {
            dim,
            tol: scene.tolerance,
            seed: scene.seed,
            default_depth: scene.depth,
            samples: scene.samples,
            chart,
            blocks,
            walls,
            pairings,
            corners,
        })
    }

    /// Matrix of a signed word of pairing crossings (leftmost factor first).
    pub fn word_matrix(&self, word: &[(usize, bool)]) -> ProjMap {
        let mut m = ProjMap::identity(self.dim);
        for &(pi, inv) in word {
            let f = if inv {
                self.pairings[pi].map.inverse()
            } else {
                self.pairings[pi].map.clone()
            };
            m = m.compose(&f);
        }
        m
    }

    /// The block entered by crossing pairing `pi` in the given direction.
    pub fn crossing_target(&self, pi: usize, inverse: bool) -> usize {
        let p = &self.pairings[pi];
        if inverse {
            self.walls[p.id_a].block
        } else {
            self.walls[p.id_b].block
        }
    }

    /// The wall (on the source block) crossed by pairing `pi` in the given
    /// direction, and the wall arrived at on the target block.
    pub fn crossing_walls(&self, pi: usize, inverse: bool) -> (usize, usize) {
        let p = &self.pairings[pi];
        if inverse {
            (p.id_b, p.id_a)
        } else {
            (p.id_a, p.id_b)
        }
    }

    pub fn face_rays(&self, wall: usize) -> Vec<Ray> {
        let w = &self.walls[wall];
        w.face
            .iter()
            .map(|&vi| self.blocks[w.block].body.vertices()[vi].clone())
            .collect()
    }

    pub fn corner_rays(&self, corner: &KitCorner) -> Vec<Ray> {
        corner
            .face
            .iter()
            .map(|&vi| self.blocks[corner.block].body.vertices()[vi].clone())
            .collect()
    }
}

fn block_vertices(b: &SceneBlock, dim: usize, chart: &Chart) -> Result<Vec<Ray>> {
    match (&b.vertices, &b.halfspaces) {
        (Some(vs), None) => vs
            .iter()
            .map(|v| {
                if v.len() != dim + 1 {
                    return Err(Error::SceneError(format!(
                        "block `{}`: vertex length must be d + 1",
                        b.id
                    )));
                }
                Ray::from_slice(v)
                    .map_err(|_| Error::SceneError(format!("block `{}`: zero vertex", b.id)))
            })
            .collect(),
        (None, Some(hs)) => {
            if dim != 2 {
                return Err(Error::SceneError(
                    "half-space blocks are supported in dimension 2 only".into(),
                ));
            }
            halfspace_polygon_vertices(hs, chart)
                .map_err(|e| Error::SceneError(format!("block `{}`: {e}", b.id)))
        }
        _ => Err(Error::SceneError(format!(
            "block `{}` must declare exactly one of vertices, halfspaces",
            b.id
        ))),
    }
}

/// Vertex enumeration for a 2-dimensional half-space intersection
/// `{x : n_i . x >= 0}`: pairwise boundary intersections filtered by the
/// remaining constraints, ordered by angle around the centroid.
fn halfspace_polygon_vertices(halfspaces: &[Vec<f64>], chart: &Chart) -> Result<Vec<Ray>> {
    if halfspaces.len() < 3 {
        return Err(Error::SceneError("need at least 3 half-spaces".into()));
    }
    let normals: Vec<DVector<f64>> = halfspaces
        .iter()
        .map(|h| DVector::from_column_slice(h))
        .collect();
    if normals.iter().any(|n| n.len() != 3) {
        return Err(Error::SceneError("half-space functionals must have length 3".into()));
    }
    let mut verts: Vec<DVector<f64>> = Vec::new();
    for i in 0..normals.len() {
        for j in (i + 1)..normals.len() {
            // Intersection line of the two functionals: cross product.
            let a = &normals[i];
            let b = &normals[j];
            let x = DVector::from_column_slice(&[
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ]);
            if x.norm() < 1e-12 {
                continue;
            }
            for cand in [x.clone(), -x] {
                let r = match Ray::new(cand) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                if chart.height(&r) <= 1e-9 {
                    continue;
                }
                if normals
                    .iter()
                    .all(|n| n.dot(r.coords()) >= -1e-9)
                {
                    verts.push(r.coords().clone());
                }
            }
        }
    }
    if verts.len() < 3 {
        return Err(Error::SceneError(
            "half-space intersection has no 2-dimensional vertex set".into(),
        ));
    }
    // Deduplicate and order by angle around the centroid (chart coords).
    let mut reps: Vec<DVector<f64>> = Vec::new();
    for v in verts {
        let r = Ray::new(v).unwrap();
        let rep = chart.rep(&r).unwrap();
        if !reps.iter().any(|p| (p - &rep).norm() < 1e-9) {
            reps.push(rep);
        }
    }
    let centroid = reps.iter().fold(DVector::zeros(3), |acc, p| acc + p) / reps.len() as f64;
    reps.sort_by(|p, q| {
        let pa = (p[1] - centroid[1]).atan2(p[0] - centroid[0]);
        let qa = (q[1] - centroid[1]).atan2(q[0] - centroid[0]);
        pa.partial_cmp(&qa).unwrap()
    });
    reps.iter().map(|p| chart.ray(p)).collect()
}
