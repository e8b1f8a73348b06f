use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use swarm_harness::compare::METRICS_HEADER;
use swarm_harness::io::{csv_bytes, write_atomic};
use swarm_harness::plot::{convergence_figure, plot_run};
use swarm_harness::report::{format_table, timing_entries, timing_report, TIMING_HEADER};
use swarm_harness::{compare_runs, run_experiment, ExperimentConfig, HarnessError, LevelKind, Manifest, Preset, RunData, RunOptions};

/// Controlled swarm experiments at the particle and mean-field level.
#[derive(Parser)]
#[command(name = "swarm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the particle model.
    Micro(RunArgs),
    /// Run the mean-field model.
    Meanfield(RunArgs),
    /// Relative control, cost and density errors of runs against a reference run.
    Compare {
        #[arg(long)]
        reference: PathBuf,
        /// Directory for metrics.csv and convergence.svg.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Figures of one or more runs.
    Plot {
        /// Defaults to <run>/figures; with several runs, one subdirectory each.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Wall time and peak memory relative to a reference run.
    Report {
        /// Reference run; defaults to the first run given.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Directory for timing.csv and timing.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Parse and check a configuration without running it.
    ValidateConfig(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config, or the manifest.json of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Result directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Required unless the config sets one.
    #[arg(long)]
    seed: Option<u64>,
    /// Cost weights of a named setting; without --config, also the defaults.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Cells per phase-space direction.
    #[arg(long)]
    grid: Option<usize>,
    /// Crowd size of a particle run.
    #[arg(long)]
    particles: Option<usize>,
    /// Continue from the checkpoint in the output directory.
    #[arg(long)]
    resume: bool,
}

fn load_config(args: &RunArgs, level: Option<LevelKind>) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match (&args.config, args.preset) {
        (Some(path), preset) => {
            let mut c = if path.extension().is_some_and(|e| e == "json") {
                Manifest::load(path)?.config
            } else {
                ExperimentConfig::load(path)?
            };
            if let Some(p) = preset {
                c.apply_preset(p);
            }
            c
        }
        (None, Some(p)) => {
            let seed = args.seed.ok_or_else(|| HarnessError::config("a seed is required: pass --seed or use a config file"))?;
            ExperimentConfig::from_preset(p, level.unwrap_or(LevelKind::Micro), seed)
        }
        (None, None) => return Err(HarnessError::config("pass --config or --preset")),
    };
    if let Some(l) = level {
        cfg.level = l;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.grid {
        cfg.grid.n = n;
    }
    if let Some(n) = args.particles {
        cfg.crowd.particles = n;
    }
    if let Some(o) = &args.out {
        cfg.output.dir = Some(o.clone());
    }
    Ok(cfg)
}

fn run(args: RunArgs, level: LevelKind) -> Result<(), HarnessError> {
    let cfg = load_config(&args, Some(level))?;
    let out = cfg.output.dir.clone().ok_or_else(|| HarnessError::config("no output directory: pass --out or set output.dir"))?;
    let m = run_experiment(&cfg, &out, RunOptions { resume: args.resume })?;
    let s = &m.summary;
    println!(
        "{} slices in {:.2} s; final J = {:.6e} (J1 {:.4e}, J2 {:.4e}, J3 {:.4e}); results in {}",
        s.completed_slices,
        m.timing.total_s,
        s.final_cost[0],
        s.final_cost[1],
        s.final_cost[2],
        s.final_cost[3],
        out.display()
    );
    Ok(())
}

fn validate(args: RunArgs) -> Result<(), HarnessError> {
    let cfg = load_config(&args, None)?;
    cfg.validate()?;
    if cfg.level == LevelKind::Meanfield {
        let g = swarm_core::Grid::new(cfg.grid.n, cfg.grid.lx, cfg.grid.lv)?;
        let r = swarm_core::meanfield::cfl_check(&g, cfg.time.dt, cfg.time.horizon);
        if !r.passes() {
            return Err(HarnessError::Numerical(format!(
                "CFL condition violated: scaled ratio {:.4} (limit {}), position Courant number {:.4} (limit 1)",
                r.scaled_ratio,
                swarm_core::meanfield::SCALED_CFL_LIMIT,
                r.position_courant
            )));
        }
        println!("scaled CFL ratio {:.4}, position Courant number {:.4}", r.scaled_ratio, r.position_courant);
    }
    println!("configuration is valid: {} level, {} slices", cfg.level.name(), cfg.slices());
    Ok(())
}

fn load_runs(dirs: &[PathBuf]) -> Result<Vec<RunData>, HarnessError> {
    dirs.iter().map(|d| RunData::load(d)).collect()
}

fn compare(reference: &Path, runs: &[PathBuf], out: Option<&Path>) -> Result<(), HarnessError> {
    let r = RunData::load(reference)?;
    let reports = load_runs(runs)?.iter().map(|c| compare_runs(c, &r)).collect::<Result<Vec<_>, _>>()?;
    println!("{:<10} {:<10} {:>14} {:>14} {:>14}", "candidate", "reference", "control [%]", "cost [%]", "density [%]");
    for m in &reports {
        println!(
            "{:<10} {:<10} {:>14.4} {:>14.4} {:>14.4}",
            m.candidate,
            m.reference,
            100.0 * m.control_error,
            100.0 * m.cost_error,
            100.0 * m.density_error
        );
    }
    if let Some(out) = out {
        swarm_harness::io::create_dir(out)?;
        write_atomic(&out.join("metrics.csv"), &csv_bytes(&METRICS_HEADER, &reports))?;
        convergence_figure(&out.join("convergence.svg"), &reports)?;
    }
    Ok(())
}

fn plot(runs: &[PathBuf], out: Option<&Path>) -> Result<(), HarnessError> {
    for dir in runs {
        let target = match out {
            Some(o) if runs.len() > 1 => o.join(dir.file_name().unwrap_or(dir.as_os_str())),
            Some(o) => o.to_path_buf(),
            None => dir.join("figures"),
        };
        for f in plot_run(dir, &target)? {
            println!("{}", f.display());
        }
    }
    Ok(())
}

fn report(reference: Option<&Path>, runs: &[PathBuf], out: Option<&Path>) -> Result<(), HarnessError> {
    let mut all = runs.to_vec();
    let idx = match reference {
        Some(r) => match all.iter().position(|d| d == r) {
            Some(i) => i,
            None => {
                all.insert(0, r.to_path_buf());
                0
            }
        },
        None => 0,
    };
    if all.len() < 2 {
        return Err(HarnessError::config("a timing report needs at least two runs"));
    }
    let rows = timing_report(&timing_entries(&load_runs(&all)?), idx);
    let text = format_table(&rows);
    print!("{text}");
    if let Some(out) = out {
        swarm_harness::io::create_dir(out)?;
        write_atomic(&out.join("timing.csv"), &csv_bytes(&TIMING_HEADER, &rows))?;
        write_atomic(&out.join("timing.txt"), text.as_bytes())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Micro(a) => run(a, LevelKind::Micro),
        Command::Meanfield(a) => run(a, LevelKind::Meanfield),
        Command::Compare { reference, out, runs } => compare(&reference, &runs, out.as_deref()),
        Command::Plot { out, runs } => plot(&runs, out.as_deref()),
        Command::Report { reference, out, runs } => report(reference.as_deref(), &runs, out.as_deref()),
        Command::ValidateConfig(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
