//! SVG figures of a run: density heatmaps with agent trajectories, cost
//! curves, and convergence across runs.

use crate::compare::{MetricsReport, RunData};
use crate::error::HarnessError;
use crate::io::{read_csv, write_atomic, GridSeries};
use crate::records::{AgentRow, AGENTS_FILE, SNAPSHOTS_FILE};
use plotters::prelude::*;
use std::path::{Path, PathBuf};

const SIZE: (u32, u32) = (720, 640);

/// Frame values scaled to `[0, 1]` by the frame's own maximum.
pub fn heat_levels(frame: &[f64]) -> Vec<f64> {
    let max = frame.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        frame.iter().map(|v| (v / max).max(0.0)).collect()
    } else {
        vec![0.0; frame.len()]
    }
}

fn heat_color(s: f64) -> RGBColor {
    let c = |lo: f64, hi: f64| (lo + (hi - lo) * s).round() as u8;
    RGBColor(c(255.0, 20.0), c(255.0, 60.0), c(255.0, 140.0))
}

/// Agent paths up to and including `last_slice`, one polyline per agent.
pub fn trajectories(rows: &[AgentRow], last_slice: usize) -> Vec<Vec<(f64, f64)>> {
    let m = rows.iter().map(|r| r.agent + 1).max().unwrap_or(0);
    let mut out = vec![Vec::new(); m];
    for r in rows.iter().filter(|r| r.slice <= last_slice) {
        out[r.agent].push((r.x, r.y));
    }
    out
}

fn render(path: &Path, draw: impl FnOnce(&DrawingArea<SVGBackend, plotters::coord::Shift>) -> Result<(), String>) -> Result<(), HarnessError> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(|e| HarnessError::format(path, e))?;
        draw(&root).map_err(|e| HarnessError::format(path, e))?;
        root.present().map_err(|e| HarnessError::format(path, e))?;
    }
    write_atomic(path, svg.as_bytes())
}

/// Heatmap of one spatial frame with agent paths (lines), current agent
/// positions (triangles) and the destination (dot).
pub fn density_figure(
    path: &Path,
    title: &str,
    rho: &GridSeries,
    frame: usize,
    paths: &[Vec<(f64, f64)>],
    destination: (f64, f64),
) -> Result<(), HarnessError> {
    let (n, l, h) = (rho.n, rho.lx, rho.dx());
    let levels = heat_levels(&rho.frames[frame]);
    render(path, |root| {
        let mut chart = ChartBuilder::on(root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(44)
            .build_cartesian_2d(-l..l, -l..l)
            .map_err(|e| e.to_string())?;
        chart.configure_mesh().disable_mesh().x_desc("x1").y_desc("x2").draw().map_err(|e| e.to_string())?;
        let cells = (0..n * n).filter(|&i| levels[i] > 0.0).map(|i| {
            let (x0, y0) = (-l + (i / n) as f64 * h, -l + (i % n) as f64 * h);
            Rectangle::new([(x0, y0), (x0 + h, y0 + h)], heat_color(levels[i]).filled())
        });
        chart.draw_series(cells).map_err(|e| e.to_string())?;
        for p in paths {
            chart.draw_series(LineSeries::new(p.iter().cloned(), RED.stroke_width(2))).map_err(|e| e.to_string())?;
        }
        let heads = paths.iter().filter_map(|p| p.last()).map(|&q| TriangleMarker::new(q, 7, RED.filled()));
        chart.draw_series(heads).map_err(|e| e.to_string())?;
        chart
            .draw_series(std::iter::once(Circle::new(destination, 6, GREEN.filled())))
            .map_err(|e| e.to_string())?;
        Ok(())
    })
}

/// `J, J1, J2, J3` per slice over `[0, T]` on a log axis.
pub fn cost_figure(path: &Path, title: &str, run: &RunData) -> Result<(), HarnessError> {
    let horizon = run.manifest.config.time.horizon;
    let parts: [(&str, RGBColor, Box<dyn Fn(&crate::records::CostRow) -> f64>); 4] = [
        ("J", BLACK, Box::new(|c| c.total)),
        ("J1", BLUE, Box::new(|c| c.variance)),
        ("J2", RED, Box::new(|c| c.destination)),
        ("J3", GREEN, Box::new(|c| c.control)),
    ];
    let positive = run.costs.iter().flat_map(|c| [c.total, c.variance, c.destination, c.control]).filter(|v| *v > 0.0);
    let (lo, hi) = positive.fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo / 2.0, hi * 2.0) } else { (1e-12, 1.0) };
    render(path, |root| {
        let mut chart = ChartBuilder::on(root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(64)
            .build_cartesian_2d(0.0..horizon, (lo..hi).log_scale())
            .map_err(|e| e.to_string())?;
        chart.configure_mesh().x_desc("t").y_desc("slice cost").draw().map_err(|e| e.to_string())?;
        for (name, color, get) in parts.iter() {
            let pts: Vec<(f64, f64)> = run.costs.iter().map(|c| (c.time, get(c))).filter(|p| p.1 > 0.0).collect();
            let color = *color;
            chart
                .draw_series(LineSeries::new(pts, color))
                .map_err(|e| e.to_string())?
                .label(*name)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
        }
        chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw().map_err(|e| e.to_string())?;
        Ok(())
    })
}

/// Relative errors of several runs against one reference.
pub fn convergence_figure(path: &Path, reports: &[MetricsReport]) -> Result<(), HarnessError> {
    let vals = reports.iter().flat_map(|r| [r.control_error, r.cost_error, r.density_error]).filter(|v| *v > 0.0 && v.is_finite());
    let (lo, hi) = vals.fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo / 2.0, hi * 2.0) } else { (1e-6, 1.0) };
    let labels: Vec<String> = reports.iter().map(|r| r.candidate.clone()).collect();
    let reference = reports.first().map(|r| r.reference.clone()).unwrap_or_default();
    let k = reports.len().max(1) as f64;
    render(path, |root| {
        let mut chart = ChartBuilder::on(root)
            .caption(format!("relative errors vs {reference}"), ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(64)
            .build_cartesian_2d(-0.5..k - 0.5, (lo..hi).log_scale())
            .map_err(|e| e.to_string())?;
        chart
            .configure_mesh()
            .x_labels(reports.len().max(1))
            .x_label_formatter(&|x| {
                let i = x.round();
                if (x - i).abs() < 1e-9 && i >= 0.0 {
                    labels.get(i as usize).cloned().unwrap_or_default()
                } else {
                    String::new()
                }
            })
            .y_desc("relative error")
            .draw()
            .map_err(|e| e.to_string())?;
        let series: [(&str, RGBColor, fn(&MetricsReport) -> f64); 3] = [
            ("control", BLUE, |r| r.control_error),
            ("cost", BLACK, |r| r.cost_error),
            ("density", RED, |r| r.density_error),
        ];
        for (name, color, get) in series {
            let pts: Vec<(f64, f64)> =
                reports.iter().enumerate().map(|(i, r)| (i as f64, get(r))).filter(|p| p.1 > 0.0 && p.1.is_finite()).collect();
            chart
                .draw_series(LineSeries::new(pts.clone(), color))
                .map_err(|e| e.to_string())?
                .label(name)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
            chart.draw_series(pts.into_iter().map(|p| Circle::new(p, 4, color.filled()))).map_err(|e| e.to_string())?;
        }
        chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw().map_err(|e| e.to_string())?;
        Ok(())
    })
}

/// Writes `costs.svg` and one `density_<slice>.svg` per snapshot into `out`.
/// Missing input files are reported together.
pub fn plot_run(dir: &Path, out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let run = RunData::load(dir);
    let agents: Result<Vec<AgentRow>, _> = read_csv(&dir.join(AGENTS_FILE));
    let snaps = GridSeries::load(&dir.join(SNAPSHOTS_FILE));
    let (run, agents, snaps) = match (run, agents, snaps) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (a, b, c) => {
            let msgs: Vec<String> = [a.err(), b.err(), c.err()].into_iter().flatten().map(|e| e.to_string()).collect();
            return Err(HarnessError::format(dir, format!("cannot plot run: {}", msgs.join("; "))));
        }
    };
    crate::io::create_dir(out)?;
    let label = run.label();
    let mut files = Vec::new();
    let p = out.join("costs.svg");
    cost_figure(&p, &format!("{label}: cost per slice"), &run)?;
    files.push(p);
    let dest = run.manifest.config.cost.destination;
    let dt = run.dt();
    for (i, t) in snaps.times.iter().enumerate() {
        let slice = (t / dt).round() as usize;
        let paths = trajectories(&agents, slice);
        let p = out.join(format!("density_{slice:05}.svg"));
        density_figure(&p, &format!("{label}: density at t = {t:.2}"), &snaps, i, &paths, (dest[0], dest[1]))?;
        files.push(p);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_levels_use_the_frame_maximum() {
        let l = heat_levels(&[0.0, 2.0, 4.0, 1.0]);
        assert_eq!(l, vec![0.0, 0.5, 1.0, 0.25]);
        assert_eq!(heat_levels(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn one_polyline_per_agent() {
        let rows: Vec<AgentRow> = (0..4)
            .flat_map(|k| (0..3).map(move |m| AgentRow { slice: k, time: k as f64, agent: m, x: m as f64, y: k as f64 }))
            .collect();
        let p = trajectories(&rows, 2);
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|q| q.len() == 3));
    }

    #[test]
    fn density_figure_draws_m_paths() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = GridSeries::new(2, 4, 10.0, 1.0);
        s.push(0.0, (0..16).map(|i| i as f64).collect());
        let paths = vec![vec![(0.0, 0.0), (1.0, 1.0)], vec![(2.0, 0.0), (3.0, -1.0)], vec![(-2.0, 0.0), (-3.0, 1.0)]];
        let p = dir.path().join("d.svg");
        density_figure(&p, "t", &s, 0, &paths, (-5.0, -5.0)).unwrap();
        let svg = std::fs::read_to_string(&p).unwrap();
        // axis ticks are thin black polylines; the paths are the red ones
        let red = svg.lines().filter(|l| l.contains("<polyline") && l.contains("stroke=\"#FF0000\"")).count();
        assert_eq!(red, 3);
    }
}
