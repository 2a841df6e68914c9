//! End-to-end stages: cell data, ε-sweeps, ansatz residuals and checks.

use std::time::Instant;

use homog_core::ansatz::{ansatz_residual, Ansatz, ResidualReport};
use homog_core::cell::{CellContext, Tolerances};
use homog_core::kernel::{validate_kernel, ValidationReport};
use homog_core::simulate::{
    evolve_epsilon, gaussian, shift_field, solve_heat_multiplier, sup_l2_error, BoxGrid, BoxOperator, EvolutionState,
    EvolveOptions, Snapshot, Transform,
};
use homog_core::{
    build_corrector_chain, corrector_schedule, CorrectorSet, DriftDecomposition, EffectiveTensors, FrameVariant,
    SSampleSet, TorusGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::fft::RustFft;
use crate::oracle::dense_oracle;
use crate::{HarnessError, RunConfig};

/// Everything derived from the cell problems; independent of ε.
pub struct CellStage {
    pub kernel: ValidationReport,
    pub ctx: CellContext,
    pub set: CorrectorSet,
    pub drift: DriftDecomposition,
    pub effective: EffectiveTensors,
}

pub fn run_cell(cfg: &RunConfig) -> Result<CellStage, HarnessError> {
    cfg.validate()?;
    let kern = cfg.kernel_spec()?;
    let kernel = validate_kernel(&kern)?;
    let grid = TorusGrid::new(cfg.grid.dim, cfg.grid.n_cell)?;
    let ctx = CellContext::new(grid, &kern, &cfg.coefficient_spec())?;
    let schedule = corrector_schedule(cfg.alpha)?;
    let tol = Tolerances { compat: cfg.tolerances.compat, solve: cfg.tolerances.solve };
    let set = build_corrector_chain(&schedule, &ctx, SSampleSet::new(cfg.grid.s_samples)?, tol)?;
    let drift = DriftDecomposition::from_correctors(&set)?;
    let effective = EffectiveTensors::from_correctors(&set)?;
    log::info!(
        "cell stage: k = {}, b0 = {:?}, Theta = {:?}, max defect {:.3e}",
        schedule.k,
        drift.means[0],
        effective.theta,
        set.max_defect()
    );
    Ok(CellStage { kernel, ctx, set, drift, effective })
}

fn options(cfg: &RunConfig) -> EvolveOptions {
    EvolveOptions { cfl_fraction: cfg.time.cfl_fraction, rate_scan: cfg.time.rate_scan }
}

/// One ε-run and its comparisons against the homogenized and intermediate flows.
#[derive(Debug, Clone)]
pub struct EpsilonRun {
    pub eps: f64,
    pub e_full: f64,
    pub e_partial: f64,
    pub steps: usize,
    pub dt: f64,
    /// Largest step-to-step sup-norm increase.
    pub max_sup_increase: f64,
    pub min_value: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub digest: String,
    /// Sorted by decreasing ε.
    pub rows: Vec<EpsilonRun>,
}

/// Snapshots of `u^ε` pulled back to the moving frame.
pub fn frame_snapshots(
    stage: &CellStage,
    state: &EvolutionState,
    tr: &dyn Transform,
) -> Result<Vec<Snapshot>, HarnessError> {
    let eps = state.grid.epsilon();
    state
        .checkpoints
        .iter()
        .map(|snap| {
            let b = stage.drift.frame(eps, snap.t, FrameVariant::Theorem)?[0];
            Ok(Snapshot { t: snap.t, values: shift_field(&snap.values, -b, state.grid, tr)? })
        })
        .collect()
}

pub fn simulate_epsilon(cfg: &RunConfig, stage: &CellStage, eps: f64) -> Result<EvolutionState, HarnessError> {
    let grid = BoxGrid::from_epsilon(cfg.box_.length, eps, cfg.grid.n_cell)?;
    let op = BoxOperator::new(grid, &stage.ctx, cfg.alpha)?;
    Ok(evolve_epsilon(&gaussian(grid), cfg.time.t_final, &op, &cfg.time.checkpoints, options(cfg))?)
}

pub fn run_epsilon(cfg: &RunConfig, stage: &CellStage, eps: f64) -> Result<EpsilonRun, HarnessError> {
    let start = Instant::now();
    let tr = RustFft::new();
    let state = simulate_epsilon(cfg, stage, eps)?;
    let grid = state.grid;
    let u0 = gaussian(grid);
    let framed = frame_snapshots(stage, &state, &tr)?;
    let theta = stage.effective.theta_sym[0];
    let homogenized = solve_heat_multiplier(&u0, &|t| theta * t, grid, &cfg.time.checkpoints, &tr)?;
    let eff = &stage.effective;
    let alpha = cfg.alpha;
    let intermediate = solve_heat_multiplier(&u0, &|t| eff.cumulative_sym(eps, alpha, t)[0], grid, &cfg.time.checkpoints, &tr)?;
    let run = EpsilonRun {
        eps,
        e_full: sup_l2_error(&framed, &homogenized, grid)?,
        e_partial: sup_l2_error(&framed, &intermediate, grid)?,
        steps: state.steps,
        dt: state.dt,
        max_sup_increase: state.max_sup_increase(),
        min_value: state.min_value,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    log::info!("eps = {eps}: E_full = {:.6e}, E_partial = {:.6e}, {} steps", run.e_full, run.e_partial, run.steps);
    Ok(run)
}

pub fn run_convergence(cfg: &RunConfig, stage: &CellStage) -> Result<ConvergenceTable, HarnessError> {
    let mut eps = cfg.time.epsilons.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    let rows = eps.par_iter().map(|&e| run_epsilon(cfg, stage, e)).collect::<Result<Vec<_>, _>>()?;
    Ok(ConvergenceTable { digest: cfg.digest(), rows })
}

/// Strict decrease of both errors and `E_full(last) <= factor * E_full(first)`.
pub fn convergence_verdict(table: &ConvergenceTable, factor: f64) -> (bool, String) {
    let rows = &table.rows;
    let decreasing = |f: fn(&EpsilonRun) -> f64| rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let full_dec = decreasing(|r| r.e_full);
    let partial_dec = decreasing(|r| r.e_partial);
    let ratio = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if rows.len() > 1 => b.e_full / a.e_full,
        _ => f64::NAN,
    };
    let ok = full_dec && partial_dec && ratio <= factor;
    let detail = format!(
        "E_full {:?}, E_partial {:?}, ratio {ratio:.4}",
        rows.iter().map(|r| format!("{:.4e}", r.e_full)).collect::<Vec<_>>(),
        rows.iter().map(|r| format!("{:.4e}", r.e_partial)).collect::<Vec<_>>()
    );
    (ok, detail)
}

#[derive(Debug, Clone)]
pub struct ResidualRow {
    pub eps: f64,
    pub report: ResidualReport,
}

pub fn run_residual(cfg: &RunConfig, stage: &CellStage, eps_list: &[f64]) -> Result<Vec<ResidualRow>, HarnessError> {
    let mut eps = eps_list.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.par_iter()
        .map(|&e| {
            let tr = RustFft::new();
            let grid = BoxGrid::from_epsilon(cfg.box_.length, e, cfg.grid.n_cell)?;
            let op = BoxOperator::new(grid, &stage.ctx, cfg.alpha)?;
            let u0 = gaussian(grid);
            let ans = Ansatz::new(&stage.set, &stage.drift, &stage.effective, &op, &u0)?;
            let report = ansatz_residual(&ans, cfg.time.residual_t0, cfg.time.residual_phases, &tr)?;
            log::info!("eps = {e}: ansatz residual {:.6e}", report.max);
            Ok(ResidualRow { eps: e, report })
        })
        .collect()
}

/// Largest deviation between folded box rows and cell generator rows over random nodes and times.
pub fn keystone_check(cfg: &RunConfig, stage: &CellStage, rows: usize, seed: u64) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for &eps in &cfg.time.epsilons {
        let grid = BoxGrid::from_epsilon(cfg.box_.length, eps, cfg.grid.n_cell)?;
        let op = BoxOperator::new(grid, &stage.ctx, cfg.alpha)?;
        for _ in 0..rows {
            let i = rng.gen_range(0..grid.len());
            let t = rng.gen_range(0.0..cfg.time.t_final);
            let a = stage.ctx.generator(op.fast_time(t));
            let r = grid.residue(i);
            for (j, v) in op.folded_row(i, t).iter().enumerate() {
                worst = worst.max((v - a.matrix[(r, j)]).abs());
            }
        }
    }
    Ok(worst)
}

/// Largest production-vs-oracle deviations.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleComparison {
    pub p: f64,
    pub chi1: f64,
    pub f1: f64,
    pub theta: f64,
    pub big_theta: f64,
    pub b0: f64,
}

impl OracleComparison {
    pub fn max(&self) -> f64 {
        [self.p, self.chi1, self.f1, self.theta, self.big_theta, self.b0].into_iter().fold(0.0, f64::max)
    }
}

pub fn compare_oracle(cfg: &RunConfig, stage: &CellStage) -> Result<OracleComparison, HarnessError> {
    let oracle = dense_oracle(&cfg.kernel_spec()?, &cfg.coefficient_spec(), cfg.grid.n_cell, cfg.grid.s_samples)?;
    let mut cmp = OracleComparison::default();
    let dev = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    for (prod, orc) in stage.set.per_sample.iter().zip(&oracle.samples) {
        cmp.p = cmp.p.max(dev(&prod.p.data, &orc.p));
        cmp.chi1 = cmp.chi1.max(dev(prod.chis[0].component(0), &orc.chi1));
        cmp.f1 = cmp.f1.max((prod.forcing[0][0] - orc.f1).abs());
        cmp.theta = cmp.theta.max((prod.theta[0] - orc.theta).abs());
    }
    cmp.big_theta = (stage.effective.theta[0] - oracle.theta_mean).abs();
    cmp.b0 = (stage.drift.means[0][0] - oracle.b0).abs();
    Ok(cmp)
}

/// Mass of the homogenized Gaussian profile within distance 1 of the box boundary at `T`.
pub fn boundary_mass(cfg: &RunConfig, stage: &CellStage) -> f64 {
    let half = cfg.box_.length as f64 / 2.0;
    let width = (1.0 + 4.0 * stage.effective.theta_sym[0] * cfg.time.t_final).sqrt();
    std::f64::consts::PI.sqrt() * (libm::erfc((half - 1.0) / width) - libm::erfc(half / width))
}
