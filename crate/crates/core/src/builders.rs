//! Ready-made demo scenes: the bulged double of a hyperbolic polygon and the
//! one-corner sector double.
//!
//! The double carries two copies of the block; crossing a wall of the first
//! copy applies the bulged reflection `B_{l,mu} r_l`, crossing back applies
//! its inverse, so the meridian around a corner between walls with
//! parameters `mu`, `mu'` develops as the bulged rotation around the vertex.

use crate::blocks::{hyperbolic_polygon, HypLine, HypPoint};
use crate::error::{Error, Result};
use crate::ray::ProjMap;
use crate::scene::{Scene, SceneBlock, SceneCorner, ScenePairing, SceneWall, SCENE_VERSION};

fn hyp_points_of_polygon(body: &crate::body::ConvexBody) -> Result<Vec<HypPoint>> {
    body.vertices()
        .iter()
        .map(|v| {
            let rep = body
                .chart()
                .rep(v)
                .ok_or_else(|| Error::SceneError("vertex outside chart".into()))?;
            HypPoint::from_klein(&[rep[0], rep[1]])
        })
        .collect()
}

/// Pairing matrix across one wall of the double: bulged reflection.
fn bulged_reflection(a: &HypPoint, b: &HypPoint, mu: f64) -> Result<ProjMap> {
    let u = a.direction_to(b)?;
    let line = HypLine::through(a, &u)?;
    Ok(line.bulge(mu)?.compose(&line.reflection()))
}

/// Hyperbolic polar of the wall through `a`, `b`, oriented so the cone over
/// the wall from the polar contains `inside`.
fn wall_polar(a: &HypPoint, b: &HypPoint, inside: &crate::ray::Ray) -> Result<Vec<f64>> {
    let u = a.direction_to(b)?;
    let line = HypLine::through(a, &u)?;
    let mut n = line.normal().clone();
    // The cone conv(W, polar) lies on the polar's side of the wall plane:
    // q(n, .) is positive on the cone interior minus the wall. Flip so the
    // block's interior direction has positive pairing.
    let mut jn = n.clone();
    let last = jn.len() - 1;
    jn[last] = -jn[last];
    if jn.dot(inside.coords()) < 0.0 {
        n = -n;
    }
    Ok(n.as_slice().to_vec())
}

/// The bulged double of a regular hyperbolic polygon with interior angle
/// `theta` and per-wall bulging parameters `mus` (one per edge). Corners are
/// declared with meridian words walking once around each vertex.
pub fn polygon_double_scene(
    theta: f64,
    mus: &[f64],
    seed: u64,
    depth: usize,
    samples: usize,
) -> Result<Scene> {
    let n = mus.len();
    if n < 3 {
        return Err(Error::BadParameter("polygon double needs >= 3 edges".into()));
    }
    let (body, _corners) = hyperbolic_polygon(&vec![theta; n])?;
    let pts = hyp_points_of_polygon(&body)?;
    let verts: Vec<Vec<f64>> = body
        .vertices()
        .iter()
        .map(|v| v.coords().as_slice().to_vec())
        .collect();

    let blocks = vec![
        SceneBlock {
            id: "M".into(),
            vertices: Some(verts.clone()),
            halfspaces: None,
        },
        SceneBlock {
            id: "M'".into(),
            vertices: Some(verts),
            halfspaces: None,
        },
    ];

    let barycenter = {
        let rep = body.barycenter_rep();
        body.chart().ray(&rep)?
    };
    let mut walls = Vec::with_capacity(2 * n);
    let mut pairings = Vec::with_capacity(n);
    for i in 0..n {
        let j = (i + 1) % n;
        let polar = wall_polar(&pts[i], &pts[j], &barycenter)?;
        walls.push(SceneWall {
            id: format!("w{i}"),
            block: "M".into(),
            face: vec![i, j],
            polar: Some(polar.clone()),
            mu: mus[i],
        });
        walls.push(SceneWall {
            id: format!("w{i}'"),
            block: "M'".into(),
            face: vec![i, j],
            polar: Some(polar),
            mu: 1.0,
        });
        let map = bulged_reflection(&pts[i], &pts[j], mus[i])?;
        pairings.push(ScenePairing(
            format!("w{i}"),
            format!("w{i}'"),
            map.rows(),
        ));
    }

    // Corner at vertex i sits between edge i (outgoing) and edge i-1
    // (incoming); the meridian crosses edge i forward and edge i-1 backward.
    let corners = (0..n)
        .map(|i| {
            let prev = (i + n - 1) % n;
            SceneCorner {
                id: format!("c{i}"),
                block: "M".into(),
                face: vec![i],
                angle: theta,
                meridian_word: vec![(i + 1) as i64, -((prev + 1) as i64)],
            }
        })
        .collect();

    Ok(Scene {
        version: SCENE_VERSION,
        dimension: 2,
        tolerance: 1e-9,
        seed,
        depth,
        chart: vec![0.0, 0.0, 1.0],
        blocks,
        walls,
        pairings,
        corners,
        samples,
    })
}

/// The quadrilateral double with alternating bulging `m, 1/m, m, 1/m`.
pub fn quad_double_scene(
    theta: f64,
    bulge: f64,
    seed: u64,
    depth: usize,
    samples: usize,
) -> Result<Scene> {
    polygon_double_scene(
        theta,
        &[bulge, 1.0 / bulge, bulge, 1.0 / bulge],
        seed,
        depth,
        samples,
    )
}

/// The double of a hyperbolic triangle glued along the two apex edges only:
/// the development tree is a path, a pure fan around the apex.
pub fn sector_double_scene(
    theta: f64,
    mu1: f64,
    mu2: f64,
    seed: u64,
    depth: usize,
) -> Result<Scene> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::BadParameter("sector angle must be in (0, pi/2)".into()));
    }
    // Apex at the origin, two unit-speed rays of length s at angle theta.
    let s = 1.2_f64;
    let apex = HypPoint::origin(2);
    let dir = |phi: f64| {
        nalgebra::DVector::from_column_slice(&[phi.cos(), phi.sin(), 0.0])
    };
    let p1 = apex.geodesic_step(&dir(0.0), s);
    let p2 = apex.geodesic_step(&dir(theta), s);
    let verts: Vec<Vec<f64>> = [&apex, &p1, &p2]
        .iter()
        .map(|p| p.to_ray().coords().as_slice().to_vec())
        .collect();

    let blocks = vec![
        SceneBlock {
            id: "S".into(),
            vertices: Some(verts.clone()),
            halfspaces: None,
        },
        SceneBlock {
            id: "S'".into(),
            vertices: Some(verts),
            halfspaces: None,
        },
    ];
    // Apex edges: (0, 1) and (2, 0); the far edge (1, 2) stays free.
    let walls = vec![
        SceneWall {
            id: "wa".into(),
            block: "S".into(),
            face: vec![0, 1],
            polar: None,
            mu: mu1,
        },
        SceneWall {
            id: "wa'".into(),
            block: "S'".into(),
            face: vec![0, 1],
            polar: None,
            mu: 1.0,
        },
        SceneWall {
            id: "wb".into(),
            block: "S".into(),
            face: vec![2, 0],
            polar: None,
            mu: mu2,
        },
        SceneWall {
            id: "wb'".into(),
            block: "S'".into(),
            face: vec![2, 0],
            polar: None,
            mu: 1.0,
        },
    ];
    let pairings = vec![
        ScenePairing(
            "wa".into(),
            "wa'".into(),
            bulged_reflection(&apex, &p1, mu1)?.rows(),
        ),
        ScenePairing(
            "wb".into(),
            "wb'".into(),
            bulged_reflection(&apex, &p2, mu2)?.rows(),
        ),
    ];
    let corners = vec![SceneCorner {
        id: "apex".into(),
        block: "S".into(),
        face: vec![0],
        angle: theta,
        meridian_word: vec![1, -2],
    }];

    Ok(Scene {
        version: SCENE_VERSION,
        dimension: 2,
        tolerance: 1e-9,
        seed,
        depth,
        chart: vec![0.0, 0.0, 1.0],
        blocks,
        walls,
        pairings,
        corners,
        samples: 2000,
    })
}
