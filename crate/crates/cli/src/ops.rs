//! Subcommand implementations and file formats.

use std::fmt;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use serde::{Deserialize, Serialize};

use bulgekit::blocks::{solve_torus_params, ParamTriple};
use bulgekit::builders::{quad_double_scene, sector_double_scene};
use bulgekit::gluekit::{certify_convexity, develop as develop_tiles, TileSet};
use bulgekit::scene::{GluingKit, Scene};
use bulgekit::svg::render_tileset;
use bulgekit::tubes::{classify_sl2_angle, is_special, LiftedSl2, Tube, TubeClass};
use bulgekit::Error as CoreError;

/// CLI-level error with the exit-code policy baked in.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError {
            message: msg.into(),
            code: 2,
        }
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError {
            message: msg.into(),
            code: 3,
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::WallMismatch { .. } | CoreError::NormalFormFailure(_) => 3,
            _ => 2,
        };
        CliError {
            message: e.to_string(),
            code,
        }
    }
}

pub type CliResult = Result<ExitCode, CliError>;

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// On-disk tube descriptor.
#[derive(Debug, Serialize, Deserialize)]
struct TubeFile {
    d: usize,
    mu: f64,
    /// 2x2 SL2 part, row-major.
    sl2: Vec<Vec<f64>>,
    #[serde(default)]
    lift_index: i32,
    /// Translation block, (d-1) rows of length 2.
    #[serde(default, rename = "C")]
    c: Option<Vec<Vec<f64>>>,
}

pub fn classify_tube(file: &Path) -> CliResult {
    let text = read_file(file)?;
    let tf: TubeFile =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("tube file: {e}")))?;
    if tf.sl2.len() != 2 || tf.sl2.iter().any(|r| r.len() != 2) {
        return Err(CliError::input("sl2 must be a 2 x 2 matrix"));
    }
    let m = nalgebra::Matrix2::new(tf.sl2[0][0], tf.sl2[0][1], tf.sl2[1][0], tf.sl2[1][1]);
    let angle = LiftedSl2::new(m, tf.lift_index)?;
    let tube = match &tf.c {
        Some(rows) => {
            if rows.len() != tf.d - 1 || rows.iter().any(|r| r.len() != 2) {
                return Err(CliError::input(format!("C must be {} rows of length 2", tf.d - 1)));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            let c = nalgebra::DMatrix::from_row_slice(tf.d - 1, 2, &flat);
            Tube::new(tf.d, tf.mu, angle, c)?
        }
        None => Tube::without_translation(tf.d, tf.mu, angle)?,
    };

    let class = classify_sl2_angle(&tube.angle)?;
    match class.class {
        TubeClass::Complete => {
            let kind = if class.trace_margin < 0.0 {
                "elliptic"
            } else {
                "wound lift"
            };
            println!("Complete ({kind})");
        }
        TubeClass::Indeterminate => {
            println!(
                "Indeterminate (trace within {:.1e} of 2; margin {:.3e})",
                1e-9, class.trace_margin
            );
        }
        TubeClass::Uniformisable => {
            let chk = is_special(&tube)?;
            if chk.special {
                println!("Uniformisable, special, margin {}", chk.margin);
            } else {
                println!("Uniformisable, not special, margin {}", chk.margin);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Tile record of the exported tile set.
#[derive(Debug, Serialize)]
struct TileOut {
    word: Vec<i64>,
    vertices: Vec<Vec<f64>>,
    walls: Vec<WallOut>,
}

#[derive(Debug, Serialize)]
struct WallOut {
    pairing: i64,
    tile: usize,
}

fn tiles_json(tiles: &TileSet) -> String {
    let mut out: Vec<TileOut> = tiles
        .tiles
        .iter()
        .map(|t| TileOut {
            word: t.word.clone(),
            vertices: t
                .vertices
                .iter()
                .map(|v| v.coords().as_slice().to_vec())
                .collect(),
            walls: Vec::new(),
        })
        .collect();
    for adj in &tiles.adjacency {
        out[adj.from].walls.push(WallOut {
            pairing: adj.pairing,
            tile: adj.to,
        });
        out[adj.to].walls.push(WallOut {
            pairing: -adj.pairing,
            tile: adj.from,
        });
    }
    serde_json::to_string_pretty(&out).expect("tile set serializes")
}

pub fn develop(scene_path: &Path, depth: Option<usize>, out: &Path, svg: Option<&Path>) -> CliResult {
    let scene = Scene::from_json(&read_file(scene_path)?)?;
    let kit = GluingKit::compile(&scene)?;
    let depth = depth.unwrap_or(kit.default_depth);
    let tiles = develop_inner(&kit, depth)?;
    write_file(out, &tiles_json(&tiles))?;
    if let Some(svg_path) = svg {
        if kit.dim != 2 {
            return Err(CliError::input(
                "SVG rendering is available for dimension 2 scenes only",
            ));
        }
        write_file(svg_path, &render_tileset(&kit, &tiles, 900))?;
    }
    println!("developed {} tiles to depth {depth}", tiles.tiles.len());
    Ok(ExitCode::SUCCESS)
}

fn develop_inner(kit: &GluingKit, depth: usize) -> Result<TileSet, CliError> {
    develop_tiles(kit, depth).map_err(|e| match &e {
        CoreError::WallMismatch { .. } => CliError::internal(e.to_string()),
        _ => CliError::from(e),
    })
}

pub fn certify(
    scene_path: &Path,
    depth: Option<usize>,
    samples: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> CliResult {
    let scene = Scene::from_json(&read_file(scene_path)?)?;
    let mut kit = GluingKit::compile(&scene)?;
    if let Some(s) = samples {
        kit.samples = s;
    }
    if let Some(t) = tol {
        kit.tol = t;
    }
    if let Some(s) = seed {
        kit.seed = s;
    }
    let depth = depth.unwrap_or(kit.default_depth);
    let cert = certify_convexity(&kit, depth)?;
    let json = serde_json::to_string_pretty(&cert).expect("certificate serializes");
    if let Some(path) = out {
        write_file(path, &json)?;
    }
    if cert.pass {
        println!("certified convex at depth {depth}");
        for c in &cert.corners {
            println!(
                "  corner {}: trace {:.9} (margin {:.3e}), eigenline distance {:.3e}",
                c.corner, c.trace, c.trace_margin, c.eigenline_distance
            );
        }
        for w in &cert.walls {
            println!("  wall {}~{}: margin {:.3e}", w.wall_a, w.wall_b, w.margin);
        }
        Ok(ExitCode::SUCCESS)
    } else {
        println!("certification FAILED at depth {depth}");
        for c in cert.corners.iter().filter(|c| !c.pass) {
            println!(
                "  witness: corner {} trace t = {:.9} (margin {:.3e}), eigenline distance {:.3e}",
                c.corner, c.trace, c.trace_margin, c.eigenline_distance
            );
        }
        for w in cert.walls.iter().filter(|w| !w.pass) {
            println!("  witness: wall {}~{} at {:?}", w.wall_a, w.wall_b, w.witness);
        }
        if !cert.ghosts.flagged.is_empty() {
            println!("  ghost strata: {}", cert.ghosts.flagged.len());
        }
        if !cert.sampling.pass {
            println!(
                "  sampling oracle: counterexample {:?}",
                cert.sampling.counterexample
            );
        }
        Ok(ExitCode::from(1))
    }
}

#[derive(Debug, Serialize)]
struct ScanRow {
    a: f64,
    b: f64,
    c: f64,
    theta: f64,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
}

fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::input(format!(
            "range `{spec}` must be start:end:count"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::input(format!("bad range start in `{spec}`")))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::input(format!("bad range end in `{spec}`")))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| CliError::input(format!("bad range count in `{spec}`")))?;
    if n == 0 {
        return Err(CliError::input("range count must be positive"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

pub fn scan(theta: f64, a: &str, b: &str, c: &str, out: Option<&Path>) -> CliResult {
    let avals = parse_range(a)?;
    let bvals = parse_range(b)?;
    let cvals = parse_range(c)?;
    let mut rows = Vec::new();
    for &av in &avals {
        for &bv in &bvals {
            for &cv in &cvals {
                let p = ParamTriple { a: av, b: bv, c: cv };
                let (b_margin, c_margin) = p.boundary_margins();
                let status;
                let mut row = ScanRow {
                    a: av,
                    b: bv,
                    c: cv,
                    theta,
                    status: String::new(),
                    d: None,
                    mu: None,
                    mu_prime: None,
                    t: None,
                    lambda: None,
                };
                if b_margin.abs() < 1e-12 {
                    // b = 3 lies on an open face: excluded from the polytope.
                    status = "boundary-excluded";
                } else {
                    match solve_torus_params(&p, theta) {
                        Ok(sol) => {
                            // c on the closed wall c = -2 + b^2/2 is inside
                            // the polytope; flag it as a boundary row.
                            status = if cv > 1.0 && c_margin.abs() < 1e-12 {
                                "boundary"
                            } else {
                                "feasible"
                            };
                            row.d = Some(sol.dval);
                            row.mu = Some(sol.mu);
                            row.mu_prime = Some(sol.mu_prime);
                            row.t = Some(sol.t);
                            row.lambda = Some(sol.lambda);
                        }
                        Err(CoreError::OutsidePolytope(_)) => status = "infeasible",
                        Err(CoreError::Infeasible(_)) => status = "infeasible",
                        Err(e) => return Err(e.into()),
                    }
                }
                row.status = status.into();
                rows.push(row);
            }
        }
    }

    let is_json = out
        .map(|p| p.extension().map(|e| e == "json").unwrap_or(false))
        .unwrap_or(false);
    let text = if is_json {
        serde_json::to_string_pretty(&rows).expect("rows serialize")
    } else {
        let mut s = String::from("a,b,c,theta,status,d,mu,mu_prime,t,lambda\n");
        for r in &rows {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.12}")).unwrap_or_default();
            s.push_str(&format!(
                "{:.12},{:.12},{:.12},{:.12},{},{},{},{},{},{}\n",
                r.a,
                r.b,
                r.c,
                r.theta,
                r.status,
                opt(r.d),
                opt(r.mu),
                opt(r.mu_prime),
                opt(r.t),
                opt(r.lambda)
            ));
        }
        s
    };
    match out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    let feas = rows
        .iter()
        .filter(|r| r.status == "feasible" || r.status == "boundary")
        .count();
    eprintln!("scan: {} rows, {} feasible", rows.len(), feas);
    Ok(ExitCode::SUCCESS)
}

pub fn demo_scene(
    kind: &str,
    theta: f64,
    bulge: f64,
    seed: u64,
    depth: usize,
    samples: usize,
    out: &Path,
) -> CliResult {
    let scene = match kind {
        "quad-double" => quad_double_scene(theta, bulge, seed, depth, samples)?,
        "sector-double" => sector_double_scene(theta, bulge, 1.0 / bulge, seed, depth)?,
        other => {
            return Err(CliError::input(format!(
                "unknown demo scene `{other}` (use quad-double or sector-double)"
            )))
        }
    };
    write_file(out, &scene.to_json())?;
    println!("wrote {kind} scene to {}", out.display());
    Ok(ExitCode::SUCCESS)
}
