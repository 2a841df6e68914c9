use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use homog_harness::pipeline::{
    boundary_mass, compare_oracle, convergence_verdict, frame_snapshots, keystone_check, run_cell, run_convergence, run_residual,
    simulate_epsilon,
};
use homog_harness::report::{num, write_cell_tables, write_corrector_fields, write_convergence, write_snapshot, Report};
use homog_harness::{fft::RustFft, HarnessError, RunConfig};

#[derive(Parser)]
#[command(name = "homog", version, about = "Homogenization of nonlocal convolution-type parabolic problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated ε list (each 1/q).
    #[arg(long, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration, kernel and coefficient.
    Validate(Common),
    /// Cell problems and corrector chain; writes report and CSV tables.
    Cell(Common),
    /// Drift decomposition and effective matrix.
    Effective(Common),
    /// Direct ε-simulation with snapshot export.
    Simulate(Common),
    /// ε-sweep of the homogenization errors.
    Converge(Common),
    /// Compare production cell data with the dense oracle.
    Oracle(Common),
    /// Ansatz residual across the ε list.
    Residual(Common),
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), HarnessError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(eps) = &common.epsilon {
        cfg.time.epsilons = eps.clone();
    }
    if let Some(alpha) = common.alpha {
        cfg.alpha = alpha;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common.out_dir.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn cell(c: &Common, fields: bool) -> Result<(), HarnessError> {
    let (cfg, out) = load(c)?;
    let stage = run_cell(&cfg)?;
    let mut report = Report::new(&cfg);
    report.cell(&stage);
    report.write(&out)?;
    write_cell_tables(&out, &stage)?;
    if fields {
        write_corrector_fields(&out, &stage)?;
    }
    println!("b = {:?}", stage.drift.means);
    println!("Theta = {:?}, Theta_sym = {:?}", stage.effective.theta, stage.effective.theta_sym);
    println!("lambda in [{:.6e}, {:.6e}]", stage.effective.lambda_min, stage.effective.lambda_max);
    Ok(())
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Validate(c) => {
            let (cfg, _) = load(&c)?;
            cfg.validate()?;
            println!("valid: digest {}", cfg.digest());
        }
        Command::Cell(c) => cell(&c, true)?,
        Command::Effective(c) => cell(&c, false)?,
        Command::Simulate(c) => {
            let (cfg, out) = load(&c)?;
            let stage = run_cell(&cfg)?;
            let tr = RustFft::new();
            for &eps in &cfg.time.epsilons {
                let state = simulate_epsilon(&cfg, &stage, eps)?;
                let framed = frame_snapshots(&stage, &state, &tr)?;
                for (k, (raw, moved)) in state.checkpoints.iter().zip(&framed).enumerate() {
                    write_snapshot(&out, &format!("u_eps{}_t{k}", state.grid.q), state.grid, raw)?;
                    write_snapshot(&out, &format!("u_eps{}_t{k}_frame", state.grid.q), state.grid, moved)?;
                }
                println!("eps = {eps}: {} steps, dt = {:.3e}, sup increase {:.3e}", state.steps, state.dt, state.max_sup_increase());
            }
        }
        Command::Converge(c) => {
            let (cfg, out) = load(&c)?;
            let stage = run_cell(&cfg)?;
            let table = run_convergence(&cfg, &stage)?;
            let mut report = Report::new(&cfg);
            report.cell(&stage);
            report.convergence(&table);
            let edge = boundary_mass(&cfg, &stage);
            if edge > 1e-8 {
                log::warn!("homogenized mass {edge:.3e} within distance 1 of the box boundary at T");
            }
            report.insert("boundary_mass", num(edge));
            report.write(&out)?;
            write_cell_tables(&out, &stage)?;
            write_convergence(&out, &table)?;
            let (ok, detail) = convergence_verdict(&table, 0.6);
            println!("{detail}");
            let positivity = table.rows.iter().all(|r| r.max_sup_increase <= 0.0 && r.min_value >= 0.0);
            if !ok || !positivity {
                return Err(HarnessError::Acceptance(format!("convergence: {detail}; maximum principle {positivity}")));
            }
        }
        Command::Oracle(c) => {
            let (cfg, out) = load(&c)?;
            let stage = run_cell(&cfg)?;
            let cmp = compare_oracle(&cfg, &stage)?;
            let keystone = if cfg.grid.dim == 1 { Some(keystone_check(&cfg, &stage, 100, cfg.seed)?) } else { None };
            let mut report = Report::new(&cfg);
            report.cell(&stage);
            report.oracle(&cmp);
            report.write(&out)?;
            println!("oracle max deviation {:.3e}; keystone {:?}", cmp.max(), keystone);
            if cmp.max() > 1e-8 || keystone.is_some_and(|k| k > 1e-14) {
                return Err(HarnessError::Acceptance(format!("oracle deviation {:.3e}, keystone {keystone:?}", cmp.max())));
            }
        }
        Command::Residual(c) => {
            let (cfg, out) = load(&c)?;
            let stage = run_cell(&cfg)?;
            let rows = run_residual(&cfg, &stage, &cfg.time.epsilons)?;
            let mut report = Report::new(&cfg);
            report.cell(&stage);
            report.residual(&rows);
            report.write(&out)?;
            for r in &rows {
                println!("eps = {}: residual {:.6e}", r.eps, r.report.max);
            }
            if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
                if rows.len() > 1 && last.report.max > 0.5 * first.report.max {
                    return Err(HarnessError::Acceptance(format!(
                        "residual {:.4e} at eps = {} exceeds half of {:.4e} at eps = {}",
                        last.report.max, last.eps, first.report.max, first.eps
                    )));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
