//! Relative errors of a run against a reference run, integrated in time:
//!
//! - controls: `∫ |u - u_ref| dt / ∫ |u_ref| dt`, with `|·|` the Euclidean
//!   norm over all agent components of a slice
//! - cost: `∫ |J - J_ref| dt / ∫ |J_ref| dt`
//! - density: `∫∫ |ρ - ρ_ref| dx dt / ∫∫ |ρ_ref| dx dt` on the reference grid
//!
//! Densities on other grids are remapped to the reference grid by cell
//! averages over the overlaps, which leaves a coarser grid's values
//! piecewise constant on the finer one.

use crate::error::HarnessError;
use crate::io::{read_csv, GridSeries};
use crate::records::{ControlRow, CostRow, CONTROLS_FILE, COSTS_FILE, MANIFEST_FILE, RHO_SERIES_FILE};
use crate::run::Manifest;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// The parts of a result bundle that comparisons and plots read.
pub struct RunData {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub costs: Vec<CostRow>,
    /// `controls[k][m] = [ux, uy]`.
    pub controls: Vec<Vec<[f64; 2]>>,
    pub rho: GridSeries,
}

impl RunData {
    pub fn load(dir: &Path) -> Result<Self, HarnessError> {
        let manifest = Manifest::load(&dir.join(MANIFEST_FILE))?;
        let costs: Vec<CostRow> = read_csv(&dir.join(COSTS_FILE))?;
        let rows: Vec<ControlRow> = read_csv(&dir.join(CONTROLS_FILE))?;
        let m = manifest.derived.agents;
        let mut controls = vec![vec![[0.0; 2]; m]; costs.len()];
        for r in rows {
            let slot = controls.get_mut(r.slice).and_then(|s| s.get_mut(r.agent));
            match slot {
                Some(s) => *s = [r.ux, r.uy],
                None => {
                    return Err(HarnessError::format(&dir.join(CONTROLS_FILE), format!("row for slice {} agent {} out of range", r.slice, r.agent)))
                }
            }
        }
        let rho = GridSeries::load(&dir.join(RHO_SERIES_FILE))?;
        Ok(Self { dir: dir.to_path_buf(), manifest, costs, controls, rho })
    }

    pub fn label(&self) -> String {
        let c = &self.manifest.config;
        match c.level {
            crate::config::LevelKind::Micro => format!("N{}", c.crowd.particles),
            crate::config::LevelKind::Meanfield => format!("M{}", c.grid.n),
        }
    }

    pub fn dt(&self) -> f64 {
        self.manifest.config.time.dt
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub candidate: String,
    pub reference: String,
    pub control_error: f64,
    pub cost_error: f64,
    pub density_error: f64,
    pub wall_time_s: f64,
    pub peak_rss_kib: Option<u64>,
}

pub const METRICS_HEADER: [&str; 7] = [
    "candidate",
    "reference",
    "control_error [1]",
    "cost_error [1]",
    "density_error [1]",
    "wall_time [s]",
    "peak_rss [KiB]",
];

/// 1-D overlap weights `w[r][c]`: the fraction of reference cell `r`
/// covered by candidate cell `c`.
fn overlap(n_ref: usize, l_ref: f64, n_c: usize, l_c: f64) -> Vec<Vec<(usize, f64)>> {
    let h_ref = 2.0 * l_ref / n_ref as f64;
    let h_c = 2.0 * l_c / n_c as f64;
    (0..n_ref)
        .map(|r| {
            let a = -l_ref + r as f64 * h_ref;
            let b = a + h_ref;
            let first = (((a + l_c) / h_c).floor().max(0.0)) as usize;
            let mut w = Vec::new();
            for c in first..n_c {
                let lo = -l_c + c as f64 * h_c;
                let hi = lo + h_c;
                if lo >= b {
                    break;
                }
                let len = hi.min(b) - lo.max(a);
                if len > 0.0 {
                    w.push((c, len / h_ref));
                }
            }
            w
        })
        .collect()
}

/// Cell averages of a density on an `n × n` grid over `[-l, l]²` on the
/// reference `n_ref × n_ref` grid over `[-l_ref, l_ref]²`.
pub fn remap(values: &[f64], n: usize, l: f64, n_ref: usize, l_ref: f64) -> Vec<f64> {
    if n == n_ref && l == l_ref {
        return values.to_vec();
    }
    let w = overlap(n_ref, l_ref, n, l);
    let mut out = vec![0.0; n_ref * n_ref];
    for (r1, w1) in w.iter().enumerate() {
        for (r2, w2) in w.iter().enumerate() {
            let mut s = 0.0;
            for &(c1, a) in w1 {
                for &(c2, b) in w2 {
                    s += a * b * values[c1 * n + c2];
                }
            }
            out[r1 * n_ref + r2] = s;
        }
    }
    out
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn compare_runs(cand: &RunData, reference: &RunData) -> Result<MetricsReport, HarnessError> {
    let (c, r) = (&cand.manifest.config, &reference.manifest.config);
    let mut e = Vec::new();
    if (c.time.horizon - r.time.horizon).abs() > 1e-12 * r.time.horizon {
        e.push(format!("horizons differ: {} vs {}", c.time.horizon, r.time.horizon));
    }
    if (c.time.dt - r.time.dt).abs() > 1e-15 * r.time.dt.abs().max(1.0) {
        e.push(format!("time steps differ: {} vs {}", c.time.dt, r.time.dt));
    }
    if cand.manifest.derived.agents != reference.manifest.derived.agents {
        e.push(format!("agent counts differ: {} vs {}", cand.manifest.derived.agents, reference.manifest.derived.agents));
    }
    if cand.costs.len() != reference.costs.len() {
        e.push(format!("slice counts differ: {} vs {} (incomplete run?)", cand.costs.len(), reference.costs.len()));
    }
    if cand.rho.frames.len() != reference.rho.frames.len() {
        e.push(format!("density frame counts differ: {} vs {}", cand.rho.frames.len(), reference.rho.frames.len()));
    }
    if !e.is_empty() {
        return Err(HarnessError::Config(e.into_iter().map(|m| format!("incompatible runs: {m}")).collect()));
    }

    let dt = reference.dt();
    let (mut du, mut nu) = (0.0, 0.0);
    for (a, b) in cand.controls.iter().zip(&reference.controls) {
        let diff: f64 = a.iter().zip(b).map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sum();
        let norm: f64 = b.iter().map(|q| q[0] * q[0] + q[1] * q[1]).sum();
        du += diff.sqrt() * dt;
        nu += norm.sqrt() * dt;
    }
    let (mut dj, mut nj) = (0.0, 0.0);
    for (a, b) in cand.costs.iter().zip(&reference.costs) {
        dj += (a.total - b.total).abs();
        nj += b.total.abs();
    }
    let rs = &reference.rho;
    let cs = &cand.rho;
    let area = rs.dx() * rs.dx();
    let (mut dr, mut nr) = (0.0, 0.0);
    // slice-end frames, rectangle rule like the cost
    for (fc, fr) in cs.frames.iter().zip(&rs.frames).skip(1) {
        let fc = remap(fc, cs.n, cs.lx, rs.n, rs.lx);
        for (a, b) in fc.iter().zip(fr) {
            dr += (a - b).abs() * area * dt;
            nr += b.abs() * area * dt;
        }
    }
    Ok(MetricsReport {
        candidate: cand.label(),
        reference: reference.label(),
        control_error: ratio(du, nu),
        cost_error: ratio(dj, nj),
        density_error: ratio(dr, nr),
        wall_time_s: cand.manifest.timing.total_s,
        peak_rss_kib: cand.manifest.timing.peak_rss_kib,
    })
}
