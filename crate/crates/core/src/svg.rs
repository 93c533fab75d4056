//! SVG export of 2-dimensional developments in the declared affine chart.
//! Output is deterministic: fixed float precision, tiles in development
//! order.

use crate::gluekit::TileSet;
use crate::scene::GluingKit;

const FILLS: [&str; 2] = ["#7aa6c2", "#e8d8a8"];

/// Render the development to an SVG document. Coordinates are clipped to a
/// view box around the union of tiles.
pub fn render_tileset(kit: &GluingKit, tiles: &TileSet, width_px: u32) -> String {
    let chart = &kit.chart;
    let mut polys: Vec<(usize, Vec<(f64, f64)>)> = Vec::new();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for t in &tiles.tiles {
        let mut pts = Vec::with_capacity(t.vertices.len());
        let mut ok = true;
        for v in &t.vertices {
            match chart.rep(v) {
                Some(rep) => {
                    let (x, y) = (rep[0], rep[1]);
                    lo[0] = lo[0].min(x);
                    lo[1] = lo[1].min(y);
                    hi[0] = hi[0].max(x);
                    hi[1] = hi[1].max(y);
                    pts.push((x, y));
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            polys.push((t.block, pts));
        }
    }
    if polys.is_empty() {
        lo = [-1.0, -1.0];
        hi = [1.0, 1.0];
    }
    let pad = 0.05 * ((hi[0] - lo[0]).max(hi[1] - lo[1])).max(1e-6);
    let (x0, y0) = (lo[0] - pad, lo[1] - pad);
    let (w, h) = (hi[0] - lo[0] + 2.0 * pad, hi[1] - lo[1] + 2.0 * pad);
    let scale = width_px as f64 / w;
    let height_px = (h * scale).ceil() as u32;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width_px}\" height=\"{height_px}\" viewBox=\"0 0 {width_px} {height_px}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (block, pts) in &polys {
        let path: Vec<String> = pts
            .iter()
            .map(|(x, y)| {
                // Flip y for screen coordinates.
                format!("{:.4},{:.4}", (x - x0) * scale, (h - (y - y0)) * scale)
            })
            .collect();
        out.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{}\" stroke=\"#333333\" stroke-width=\"0.6\"/>\n",
            path.join(" "),
            FILLS[block % FILLS.len()]
        ));
    }
    out.push_str("</svg>\n");
    out
}
