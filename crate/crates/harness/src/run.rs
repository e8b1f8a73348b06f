//! Runs one experiment and writes its result bundle:
//!
//! - `costs.csv`: `J, J1, J2, J3` per slice, one row per slice
//! - `controls.csv`: agent velocities per slice
//! - `moments.csv`: center of mass, variance and mass after every slice
//! - `agents.csv`: agent positions after every slice
//! - `rho_series.bin`: spatial density after every slice (grid dump, rank 2)
//! - `snapshots.bin`: spatial density at the snapshot times
//! - `phase_snapshots.bin`: phase-space density at the snapshot times, if enabled
//! - `manifest.json`: config echo, derived quantities, versions, timings
//!
//! Outputs are also written when a slice fails, covering the completed
//! slices, and the manifest then carries the error.

use crate::checkpoint::{Checkpoint, CheckpointHeader, FrameIndex, Rows, CHECKPOINT_VERSION};
use crate::config::{ExperimentConfig, LevelKind};
use crate::error::HarnessError;
use crate::io::{csv_bytes, peak_rss_kib, reset_peak_rss, write_atomic, GridSeries};
use crate::records::*;
use crate::state::RunState;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::path::Path;
use std::time::Instant;
use swarm_core::icontrol::{ic_run, run_prescribed, IcStart, Level, MeanFieldLevel, MicroLevel, SliceEvent};
use swarm_core::meanfield::{cfl_check, MeanFieldSolver, PhaseGrid};
use swarm_core::microsim::sample_initial;
use swarm_core::objective::CostWeights;
use swarm_core::{ConfigError, Density, Ensemble, Point, Record, SolverError};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Software {
    pub harness: String,
    pub core: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub slices: usize,
    pub agents: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    /// `V̄`, frozen at startup.
    pub desired_variance: f64,
    pub initial_center: [f64; 2],
    pub initial_variance: f64,
    pub initial_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaled_cfl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position_courant: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub completed_slices: usize,
    /// `Σ J` over the completed slices.
    pub total_cost: f64,
    /// `[J, J1, J2, J3]` of the last completed slice.
    pub final_cost: [f64; 4],
    pub final_center: [f64; 2],
    pub final_variance: f64,
    pub final_mass: f64,
    pub max_control_speed: f64,
    pub exhausted_slices: usize,
    /// Largest number of particles outside the output grid at any time.
    pub particles_outside_grid: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resumed_from_slice: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub setup_s: f64,
    pub solve_s: f64,
    pub write_s: f64,
    pub total_s: f64,
    pub peak_rss_kib: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub software: Software,
    pub config: ExperimentConfig,
    pub derived: Derived,
    pub summary: Summary,
    pub timing: Timing,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let bytes = crate::io::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| HarnessError::format(path, e))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Continue from `checkpoint.bin` in the output directory.
    pub resume: bool,
}

struct Recorder {
    rows: Rows,
    rho: GridSeries,
    snaps: GridSeries,
    phase: Option<GridSeries>,
    snapshot_slices: Vec<usize>,
    outside_max: usize,
    grid: PhaseGrid<f64>,
    dt: f64,
}

impl Recorder {
    fn new(cfg: &ExperimentConfig, grid: PhaseGrid<f64>) -> Self {
        let g = &cfg.grid;
        Self {
            rows: Rows::default(),
            rho: GridSeries::new(2, g.n, g.lx, g.lv),
            snaps: GridSeries::new(2, g.n, g.lx, g.lv),
            phase: cfg.output.phase_snapshots.then(|| GridSeries::new(4, g.n, g.lx, g.lv)),
            snapshot_slices: cfg.snapshot_slices(),
            outside_max: 0,
            grid,
            dt: cfg.time.dt,
        }
    }

    fn state<S: RunState>(&mut self, k: usize, s: &S) {
        let t = k as f64 * self.dt;
        let o = s.observe(&self.grid);
        self.rows.moments.push(MomentRow {
            slice: k,
            time: t,
            ex: o.center.x,
            ey: o.center.y,
            variance: o.variance,
            mass: o.mass,
        });
        for (m, p) in s.agent_positions().iter().enumerate() {
            self.rows.agents.push(AgentRow { slice: k, time: t, agent: m, x: p.x, y: p.y });
        }
        self.outside_max = self.outside_max.max(o.outside);
        if self.snapshot_slices.contains(&k) {
            self.snaps.push(t, o.rho.clone());
            if let Some(p) = &mut self.phase {
                p.push(t, s.phase_density(&self.grid));
            }
        }
        self.rho.push(t, o.rho);
    }

    fn slice(&mut self, r: &Record) {
        let c = &r.cost;
        self.rows.costs.push(CostRow {
            slice: r.slice,
            time: r.time,
            total: c.total,
            variance: c.variance,
            destination: c.destination,
            control: c.control,
            step: r.step,
            halvings: r.halvings,
            gradient_norm: r.gradient_norm,
            exhausted: r.exhausted,
        });
        let t0 = r.slice as f64 * self.dt;
        for (m, u) in r.control.iter().enumerate() {
            self.rows.controls.push(ControlRow { slice: r.slice, time: t0, agent: m, ux: u.x, uy: u.y, speed: u.norm() });
        }
    }

    fn series(&self) -> Vec<&GridSeries> {
        let mut v = vec![&self.rho, &self.snaps];
        v.extend(self.phase.as_ref());
        v
    }

    fn checkpoint(&self, cfg: &ExperimentConfig, next: usize, warm: &[Point], vbar: f64, state: Vec<f64>) -> Checkpoint {
        let series = self.series();
        Checkpoint {
            header: CheckpointHeader {
                format_version: CHECKPOINT_VERSION,
                config: cfg.clone(),
                next_slice: next,
                warm: warm.iter().map(|p| [p.x, p.y]).collect(),
                desired_variance: vbar,
                outside_max: self.outside_max,
                rows: self.rows.clone(),
                state_len: state.len(),
                frames: series.iter().map(|s| FrameIndex { rank: s.rank, n: s.n, times: s.times.clone() }).collect(),
            },
            state,
            frames: series.iter().map(|s| s.frames.clone()).collect(),
        }
    }

    fn restore(&mut self, ck: Checkpoint) -> Result<(), String> {
        let h = ck.header;
        self.rows = h.rows;
        self.outside_max = h.outside_max;
        let mut targets: Vec<&mut GridSeries> = vec![&mut self.rho, &mut self.snaps];
        targets.extend(self.phase.as_mut());
        if targets.len() != h.frames.len() {
            return Err("checkpoint frame sets do not match the output settings".to_string());
        }
        for ((t, ix), frames) in targets.into_iter().zip(h.frames).zip(ck.frames) {
            if ix.rank != t.rank || ix.n != t.n {
                return Err("checkpoint grid does not match the config".to_string());
            }
            t.times = ix.times;
            t.frames = frames;
        }
        Ok(())
    }

    fn write(&self, out: &Path) -> Result<Vec<String>, HarnessError> {
        let r = &self.rows;
        let mut files = Vec::new();
        let mut put = |name: &str, bytes: Vec<u8>| -> Result<(), HarnessError> {
            write_atomic(&out.join(name), &bytes)?;
            files.push(name.to_string());
            Ok(())
        };
        put(COSTS_FILE, csv_bytes(&COST_HEADER, &r.costs))?;
        put(CONTROLS_FILE, csv_bytes(&CONTROL_HEADER, &r.controls))?;
        put(MOMENTS_FILE, csv_bytes(&MOMENT_HEADER, &r.moments))?;
        put(AGENTS_FILE, csv_bytes(&AGENT_HEADER, &r.agents))?;
        put(RHO_SERIES_FILE, self.rho.to_bytes())?;
        put(SNAPSHOTS_FILE, self.snaps.to_bytes())?;
        if let Some(p) = &self.phase {
            put(PHASE_SNAPSHOTS_FILE, p.to_bytes())?;
        }
        Ok(files)
    }

    fn summary(&self, resumed: Option<usize>) -> Summary {
        let r = &self.rows;
        let last = r.moments.last();
        Summary {
            completed_slices: r.costs.len(),
            total_cost: r.costs.iter().map(|c| c.total).sum(),
            final_cost: r.costs.last().map_or([0.0; 4], |c| [c.total, c.variance, c.destination, c.control]),
            final_center: last.map_or([0.0; 2], |m| [m.ex, m.ey]),
            final_variance: last.map_or(0.0, |m| m.variance),
            final_mass: last.map_or(0.0, |m| m.mass),
            max_control_speed: r.controls.iter().map(|c| c.speed).fold(0.0, f64::max),
            exhausted_slices: r.costs.iter().filter(|c| c.exhausted).count(),
            particles_outside_grid: self.outside_max,
            resumed_from_slice: resumed,
        }
    }
}

/// Settings that must agree between a checkpoint and the run resuming it.
fn resume_key(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.output.dir = None;
    c.output.checkpoint_every = 0;
    c
}

/// Validates `cfg`, runs it, and writes the bundle into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<Manifest, HarnessError> {
    cfg.validate()?;
    let clock = Instant::now();
    reset_peak_rss();
    crate::io::create_dir(out)?;
    let grid = PhaseGrid::<f64>::new(cfg.grid.n, cfg.grid.lx, cfg.grid.lv)?;
    let support = cfg.crowd.support.rect();
    let dest = cfg.destination();
    let c = &cfg.cost;
    let weights = |v0: f64| {
        let vbar = c.desired_variance.unwrap_or(c.variance_factor * v0);
        CostWeights::new(c.sigma1, c.sigma2, c.sigma3, cfg.time.horizon, vbar, dest)
    };
    match cfg.level {
        LevelKind::Micro => {
            let (x, v) = sample_initial::<f64>(cfg.crowd.particles, &support, cfg.crowd.velocity, cfg.seed)?;
            let y0 = Ensemble::new(x, v, cfg.agent_positions())?;
            let o = y0.observe(&grid);
            let level = MicroLevel {
                params: cfg.model.params(),
                weights: weights(o.variance),
                dt: cfg.time.dt,
                u_max: cfg.control.u_max,
            };
            let derived = derived(cfg, &level.weights, &o, Some(y0.n()), None);
            drive(cfg, out, opts, &level, y0, derived, grid, clock)
        }
        LevelKind::Meanfield => {
            let f0 = Density::initial(grid, &support, cfg.crowd.velocity, cfg.agent_positions())?;
            let report = cfl_check(&grid, cfg.time.dt, cfg.time.horizon);
            if !report.passes() {
                return Err(HarnessError::Numerical(format!(
                    "CFL condition violated: scaled ratio {:.4} (limit {}), position Courant number {:.4} (limit 1)",
                    report.scaled_ratio,
                    swarm_core::meanfield::SCALED_CFL_LIMIT,
                    report.position_courant
                )));
            }
            let solver = MeanFieldSolver::new(grid, cfg.model.params(), cfg.time.dt)?;
            let o = f0.observe(&grid);
            let level = MeanFieldLevel { solver, weights: weights(o.variance), u_max: cfg.control.u_max };
            let derived = derived(cfg, &level.weights, &o, None, Some(report));
            drive(cfg, out, opts, &level, f0, derived, grid, clock)
        }
    }
}

fn derived(
    cfg: &ExperimentConfig,
    w: &CostWeights<f64>,
    o: &crate::state::Observation,
    particles: Option<usize>,
    cfl: Option<swarm_core::meanfield::CflReport>,
) -> Derived {
    Derived {
        slices: cfg.slices(),
        agents: cfg.agents.count,
        particles,
        desired_variance: w.desired_variance,
        initial_center: [o.center.x, o.center.y],
        initial_variance: o.variance,
        initial_mass: o.mass,
        scaled_cfl: cfl.map(|r| r.scaled_ratio),
        position_courant: cfl.map(|r| r.position_courant),
    }
}

#[allow(clippy::too_many_arguments)]
fn drive<L>(
    cfg: &ExperimentConfig,
    out: &Path,
    opts: RunOptions,
    level: &L,
    y0: L::State,
    derived: Derived,
    grid: PhaseGrid<f64>,
    clock: Instant,
) -> Result<Manifest, HarnessError>
where
    L: Level<f64>,
    L::State: RunState,
{
    let total = cfg.slices();
    let m = cfg.agents.count;
    let vbar = derived.desired_variance;
    let mut rec = Recorder::new(cfg, grid);
    let mut start = IcStart::new(y0.clone(), m);
    let mut resumed = None;
    if opts.resume {
        let path = out.join(CHECKPOINT_FILE);
        let ck = Checkpoint::load(&path)?;
        if resume_key(&ck.header.config) != resume_key(cfg) {
            return Err(HarnessError::config("checkpoint was written by a different configuration"));
        }
        let state = y0.restore(&ck.state).ok_or_else(|| HarnessError::format(&path, "state does not match the config"))?;
        let next = ck.header.next_slice;
        let warm = ck.header.warm.iter().map(|p| Point::new(p[0], p[1])).collect();
        rec.restore(ck).map_err(|msg| HarnessError::format(&path, msg))?;
        start = IcStart { slice: next, state, warm };
        resumed = Some(next);
    } else {
        rec.state(0, &y0);
    }
    let setup_s = clock.elapsed().as_secs_f64();

    let every = cfg.output.checkpoint_every;
    let stash: RefCell<Option<HarnessError>> = RefCell::new(None);
    let observer = |ev: SliceEvent<'_, f64, L::State>| -> Result<(), SolverError> {
        let k = ev.record.slice + 1;
        rec.slice(ev.record);
        rec.state(k, ev.state);
        if every > 0 && k % every == 0 && k < total {
            let ck = rec.checkpoint(cfg, k, ev.warm, vbar, ev.state.payload());
            if let Err(e) = ck.write(&out.join(CHECKPOINT_FILE)) {
                *stash.borrow_mut() = Some(e);
                return Err(ConfigError::single("checkpoint write failed").into());
            }
        }
        Ok(())
    };
    let result = if cfg.control.enabled {
        ic_run(level, start, total, &cfg.control.armijo.params(), observer)
    } else {
        let zeros = vec![vec![Point::zero(); m]; total];
        run_prescribed(level, start, &zeros, observer)
    };
    let solve_s = clock.elapsed().as_secs_f64() - setup_s;
    let error = match result {
        Ok(_) => None,
        Err(fail) => Some(stash.into_inner().unwrap_or_else(|| HarnessError::from(fail.error))),
    };

    let mut files = rec.write(out)?;
    files.push(MANIFEST_FILE.to_string());
    let total_s = clock.elapsed().as_secs_f64();
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        status: if error.is_some() { RunStatus::Failed } else { RunStatus::Completed },
        error: error.as_ref().map(|e| e.to_string()),
        software: Software { harness: env!("CARGO_PKG_VERSION").to_string(), core: swarm_core::VERSION.to_string() },
        config: cfg.clone(),
        derived,
        summary: rec.summary(resumed),
        timing: Timing {
            setup_s,
            solve_s,
            write_s: total_s - setup_s - solve_s,
            total_s,
            peak_rss_kib: peak_rss_kib(),
        },
        files,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&out.join(MANIFEST_FILE), &json)?;
    match error {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}
