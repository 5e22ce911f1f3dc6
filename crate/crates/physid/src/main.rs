use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use physid::config::{parse_grid, parse_seeds, parse_theta_grid, RunConfig};
use physid::experiments::{self, TrajectoryRow};
use physid::report;

#[derive(Parser)]
#[command(
    name = "physid",
    version,
    about = "Model identification and push planning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Held-out prediction error vs. training pushes, GES against random search.
    Identify(Common),
    /// k-fold cross-validated prediction error.
    Predict(Common),
    /// Two-push goal reaching with oracle, GES and random-search models.
    GoalPush(Common),
    /// High-speed pushing: identify-then-plan against PoWER.
    HighSpeedBench(Common),
    /// Simulate the configured push sequence and write the trajectory.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated seeds and ranges, e.g. `0..10,42`.
    #[arg(long)]
    seeds: Option<String>,
    /// Objective evaluations per search.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
    /// `MASS_LO:MASS_HI:N,MU_LO:MU_HI:M[,RATIO]`.
    #[arg(long)]
    theta_grid: Option<String>,
    /// `LO:HI:N` for the policy grid of the command.
    #[arg(long)]
    pi_grid: Option<String>,
    #[arg(long)]
    random_pi: bool,
    /// Record file used instead of synthetic data.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

/// Errors in the configuration or command line (exit code 1).
#[derive(Debug)]
struct UsageError(anyhow::Error);

fn usage(e: impl Into<anyhow::Error>) -> UsageError {
    UsageError(e.into())
}

fn resolve(c: &Common, which: &Command) -> Result<RunConfig, UsageError> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p).map_err(usage)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &c.seeds {
        cfg.seeds = parse_seeds(s).map_err(usage)?;
    }
    if let Some(b) = c.budget {
        cfg.search.eval_budget = b;
    }
    if let Some(m) = c.mc_samples {
        cfg.search.mc_samples = m;
    }
    if let Some(t) = &c.theta_grid {
        cfg.theta = parse_theta_grid(t, &cfg.theta).map_err(usage)?;
        cfg.high_speed.theta = cfg.theta;
    }
    if let Some(g) = &c.pi_grid {
        let g = parse_grid(g).map_err(usage)?;
        match which {
            Command::HighSpeedBench(_) => cfg.high_speed.pi_grid = g,
            _ => cfg.goal_push.pi_grid = g,
        }
    }
    cfg.random_pi |= c.random_pi;
    if let Some(d) = &c.dataset {
        cfg.dataset = Some(d.clone());
    }
    if let Some(d) = &cfg.dataset {
        if !d.is_file() {
            return Err(usage(anyhow::anyhow!("dataset {} does not exist", d.display())));
        }
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn run(cmd: &Command, cfg: &RunConfig, out: &Path) -> anyhow::Result<String> {
    report::create_dir(out)?;
    let summary = match cmd {
        Command::Identify(_) => {
            let rows = experiments::per_seed(cfg, experiments::identify_seed)?.concat();
            let curve = experiments::per_seed(cfg, experiments::convergence_seed)?.concat();
            report::write_csv(&out.join("identify.csv"), &rows)?;
            report::write_csv(&out.join("convergence.csv"), &curve)?;
            report::identify_summary(&rows, &curve)
        }
        Command::Predict(_) => {
            let rows = experiments::per_seed(cfg, experiments::predict_seed)?.concat();
            report::write_csv(&out.join("predict.csv"), &rows)?;
            report::predict_summary(&rows)
        }
        Command::GoalPush(_) => {
            let rows = experiments::per_seed(cfg, experiments::goal_push_seed)?.concat();
            report::write_csv(&out.join("goal_push.csv"), &rows)?;
            report::goal_push_summary(&rows)
        }
        Command::HighSpeedBench(_) => {
            let (rows, curves): (Vec<_>, Vec<_>) = experiments::per_seed(cfg, experiments::high_speed_seed)?
                .into_iter()
                .unzip();
            let (rows, curves) = (rows.concat(), curves.concat());
            report::write_csv(&out.join("high_speed.csv"), &rows)?;
            report::write_csv(&out.join("high_speed_curves.csv"), &curves)?;
            report::bench_summary(&rows)
        }
        Command::Simulate(_) => {
            let traj = experiments::simulate(cfg).context("simulation failed")?;
            let stride = cfg.simulate.stride.max(1);
            let last = traj.poses.len() - 1;
            let rows: Vec<TrajectoryRow> = traj
                .poses
                .iter()
                .enumerate()
                .filter(|(i, _)| i % stride == 0 || *i == last)
                .map(|(_, p)| TrajectoryRow {
                    t: p.t,
                    x: p.pose.x,
                    y: p.pose.y,
                    yaw: p.pose.yaw,
                })
                .collect();
            report::write_csv(&out.join("trajectory.csv"), &rows)?;
            let f = traj.final_pose();
            format!(
                "outcome {:?}\nfinal pose {:.6} {:.6} {:.6}\n",
                traj.outcome, f.x, f.y, f.yaw
            )
        }
    };
    report::write_text(&out.join("summary.txt"), &report::with_config(&summary, cfg))?;
    Ok(summary)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let common = match &cli.command {
        Command::Identify(c)
        | Command::Predict(c)
        | Command::GoalPush(c)
        | Command::HighSpeedBench(c)
        | Command::Simulate(c) => c,
    };
    let cfg = match resolve(common, &cli.command) {
        Ok(cfg) => cfg,
        Err(UsageError(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match run(&cli.command, &cfg, &common.out) {
        Ok(summary) => {
            if !common.quiet {
                print!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
