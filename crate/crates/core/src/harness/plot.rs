//! SVG figures and curve data, rendered purely from a run directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{read_csv, write_csv};
use super::scenario::Scenario;
use super::sweep::SweepPoint;
use crate::error::{Error, Result};
use crate::trajectory::EpisodeLog;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];
const UAV_COLORS: [&str; 4] = ["#000000", "#d62728", "#1f77b4", "#2ca02c"];

/// Maps metres in `[-h, h]^2` to SVG pixels with y pointing up.
struct Frame {
    half: f64,
}

impl Frame {
    fn px(&self, xy: [f64; 2]) -> (f64, f64) {
        let s = SIZE / (2.0 * self.half);
        (MARGIN + (xy[0] + self.half) * s, MARGIN + (self.half - xy[1]) * s)
    }
}

fn svg_open(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, "<title>{}</title>", escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grid, base station, depots, devices by cluster, centroids and one
/// polyline per UAV starting at its depot.
pub fn trajectory_svg(scenario: &Scenario, log: &EpisodeLog) -> Result<String> {
    if log.slots.is_empty() {
        return Err(Error::Format(format!(
            "episode {} of {} has no slots to plot",
            log.header.episode, log.header.policy
        )));
    }
    if log.header.uavs != scenario.uavs || log.header.clusters != scenario.assignment.len() {
        return Err(Error::Format("log does not belong to this scenario".into()));
    }
    let grid = scenario.grid;
    let f = Frame { half: grid.half_extent() };
    let mut s = String::new();
    let side = SIZE + 2.0 * MARGIN;
    let h = &log.header;
    let lambda = h.lambda.map_or(String::new(), |l| format!(" lambda={l}"));
    svg_open(
        &mut s,
        side,
        side,
        &format!("{}{} episode {} config {} seed {}", h.policy, lambda, h.episode, h.config_hash, h.seed),
    );

    // cell boundaries
    let n = grid.cells_per_side as i32;
    for i in 0..=n {
        let m = -f.half + f64::from(i) * grid.cell_side;
        let (x0, y0) = f.px([m, -f.half]);
        let (x1, y1) = f.px([m, f.half]);
        let _ = writeln!(s, r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="#dddddd"/>"##);
        let (x0, y0) = f.px([-f.half, m]);
        let (x1, y1) = f.px([f.half, m]);
        let _ = writeln!(s, r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="#dddddd"/>"##);
    }
    // depots
    let cell_px = SIZE / f64::from(grid.cells_per_side);
    for d in grid.depots() {
        let (x, y) = f.px(grid.center_m(d));
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#fff3bf" stroke="#e0a800"/>"##,
            x - cell_px / 2.0,
            y - cell_px / 2.0,
            cell_px,
            cell_px
        );
    }
    // base station at the origin
    let (bx, by) = f.px([0.0, 0.0]);
    let _ = writeln!(
        s,
        r##"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="#444444"/>"##,
        bx,
        by - 9.0,
        bx - 8.0,
        by + 6.0,
        bx + 8.0,
        by + 6.0
    );
    // devices and centroids
    for (l, members) in scenario.assignment.members.iter().enumerate() {
        let color = PALETTE[l % PALETTE.len()];
        for &k in members {
            let (x, y) = f.px(scenario.devices[k].xy);
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#);
        }
        let (x, y) = f.px(scenario.assignment.centroids[l]);
        let _ = writeln!(
            s,
            r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{color}" stroke-width="2"/>"#,
            x - 6.0,
            y - 6.0,
            x + 6.0,
            y + 6.0,
            x - 6.0,
            y + 6.0,
            x + 6.0,
            y - 6.0
        );
    }
    // UAV paths
    for u in 0..h.uavs {
        let mut pts = vec![log.slots[0].cells[u]];
        pts.extend(log.slots.iter().map(|slot| slot.next_cells[u]));
        let coords: Vec<String> = pts
            .iter()
            .map(|c| {
                let (x, y) = f.px(grid.center_m(*c));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let color = UAV_COLORS[u % UAV_COLORS.len()];
        let _ = writeln!(
            s,
            r#"<polyline class="uav" points="{}" fill="none" stroke="{color}" stroke-width="2" stroke-opacity="0.8"/>"#,
            coords.join(" ")
        );
        let (x, y) = f.px(grid.center_m(pts[0]));
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="none" stroke="{color}" stroke-width="2"/>"#);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Ergodic age against ergodic power, one marker per sweep point.
pub fn region_svg(points: &[SweepPoint]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::Format("no sweep points to plot".into()));
    }
    let w = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    svg_open(&mut s, w, w, &format!("achievable region, config {}", points[0].config_hash));
    let (pmin, pmax) = bounds(points.iter().map(|p| p.ergodic_power_w * 1e9));
    let (amin, amax) = bounds(points.iter().map(|p| p.ergodic_age));
    let x = |v: f64| MARGIN + (v - pmin) / (pmax - pmin) * SIZE;
    let y = |v: f64| MARGIN + (amax - v) / (amax - amin) * SIZE;
    let _ = writeln!(
        s,
        r##"<path d="M{m:.2},{m:.2}L{m:.2},{b:.2}L{r:.2},{b:.2}" fill="none" stroke="#000000"/>"##,
        m = MARGIN,
        b = MARGIN + SIZE,
        r = MARGIN + SIZE
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">ergodic power (nW) {pmin:.4} .. {pmax:.4}</text>"#,
        MARGIN + SIZE / 2.0,
        w - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{:.2}" font-size="12" transform="rotate(-90 12 {:.2})" text-anchor="middle">ergodic age {amin:.3} .. {amax:.3}</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0
    );
    for p in points {
        let color = match p.policy.as_str() {
            "dqn" => "#1f77b4",
            "ga" => "#d62728",
            "nn" => "#2ca02c",
            _ => "#7f7f7f",
        };
        let (px, py) = (x(p.ergodic_power_w * 1e9), y(p.ergodic_age));
        let label = match (p.lambda, p.train_seed) {
            (Some(l), Some(sd)) => format!("{} l={l} s={sd}", p.policy),
            _ => p.policy.clone(),
        };
        let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="{color}"/>"#);
        let _ =
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#, px + 6.0, py - 4.0, escape(&label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let pad = if hi > lo { 0.05 * (hi - lo) } else { lo.abs().max(1.0) * 0.05 };
    (lo - pad, hi + pad)
}

/// Reward, age and power against lambda, averaged over training seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCurveRow {
    pub config_hash: String,
    pub policy: String,
    pub lambda: Option<f64>,
    pub seeds: usize,
    pub reward: f64,
    pub ergodic_age: f64,
    pub ergodic_power_w: f64,
}

pub fn lambda_curves(points: &[SweepPoint]) -> Vec<LambdaCurveRow> {
    // key: (policy, lambda bits) keeps a stable, total order
    let mut groups: BTreeMap<(String, Option<u64>), Vec<&SweepPoint>> = BTreeMap::new();
    for p in points {
        groups.entry((p.policy.clone(), p.lambda.map(f64::to_bits))).or_default().push(p);
    }
    let mut rows: Vec<LambdaCurveRow> = groups
        .into_values()
        .map(|g| {
            let n = g.len() as f64;
            LambdaCurveRow {
                config_hash: g[0].config_hash.clone(),
                policy: g[0].policy.clone(),
                lambda: g[0].lambda,
                seeds: g.len(),
                reward: g.iter().map(|p| p.reward).sum::<f64>() / n,
                ergodic_age: g.iter().map(|p| p.ergodic_age).sum::<f64>() / n,
                ergodic_power_w: g.iter().map(|p| p.ergodic_power_w).sum::<f64>() / n,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.policy.cmp(&b.policy).then(a.lambda.unwrap_or(-1.0).total_cmp(&b.lambda.unwrap_or(-1.0))));
    rows
}

/// Render every figure for the run in `dir` into `dir/plots`. All inputs
/// are read and checked before anything is written.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let scenario = Scenario::load(&dir.join("scenario.json"))?;
    let logs_dir = dir.join("logs");
    let mut log_paths: Vec<PathBuf> = match std::fs::read_dir(&logs_dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect(),
        Err(e) => return Err(Error::Missing(format!("trajectory logs in {}: {e}", logs_dir.display()))),
    };
    if log_paths.is_empty() {
        return Err(Error::Missing(format!("no trajectory logs in {}", logs_dir.display())));
    }
    log_paths.sort();

    let plots = dir.join("plots");
    let mut svgs: Vec<(PathBuf, String)> = Vec::new();
    for p in &log_paths {
        let bytes = std::fs::read(p)?;
        let log = EpisodeLog::from_slice(&bytes).map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
        svgs.push((plots.join(format!("trajectory_{stem}.svg")), trajectory_svg(&scenario, &log)?));
    }
    let sweep = dir.join("sweep.csv");
    let mut curves = None;
    if sweep.exists() {
        let points: Vec<SweepPoint> = read_csv(&sweep)?;
        svgs.push((plots.join("region.svg"), region_svg(&points)?));
        curves = Some(lambda_curves(&points));
    }

    let mut written = Vec::new();
    for (path, body) in svgs {
        super::io::write_atomic(&path, body.as_bytes())?;
        written.push(path);
    }
    if let Some(rows) = curves {
        let path = plots.join("lambda_curves.csv");
        write_csv(&path, &rows)?;
        written.push(path);
    }
    Ok(written)
}
