//! The corrector chain `chi_1 .. chi_{k+1}`, the second-order corrector
//! `kappa`, the solvability functions `F_j(s)` and the matrix `theta(s)`.
//!
//! Every level is a family of frozen-`s` singular solves: `A(s) chi_1 =
//! f - F_1`, then `A(s) chi_{j+1} = d_s chi_j - F_{j+1}` with the
//! `s`-derivative taken spectrally across the sample set. Level `j + 1`
//! therefore needs level `j` on every sample first.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cell::{invariant_density, s_derivative, CellContext, MeanZeroSolver, Tolerances};
use crate::field::{CellField, FieldShape};
use crate::grid::{SSampleSet, TorusGrid};
use crate::{Error, Result};

const EXCEPTIONAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorSchedule {
    pub alpha: f64,
    pub k: usize,
    /// `gamma_j = 1 + (j - 1)(2 - alpha)` for `j = 1..=k+1`.
    pub gammas: Vec<f64>,
    /// `alpha == 2 - 1/k`: then `gamma_k == alpha` and `gamma_{k+1} == 2`.
    pub exceptional: bool,
}

impl CorrectorSchedule {
    pub fn levels(&self) -> usize {
        self.k + 1
    }

    fn check(&self) -> Result<()> {
        if self.gammas.len() != self.k + 1 {
            return Err(Error::ScheduleMismatch(format!("{} exponents for k = {}", self.gammas.len(), self.k)));
        }
        Ok(())
    }
}

pub fn corrector_schedule(alpha: f64) -> Result<CorrectorSchedule> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let ratio = 1.0 / (2.0 - alpha);
    let nearest = libm::round(ratio);
    let (k, exceptional) = if nearest >= 1.0 && libm::fabs(alpha - (2.0 - 1.0 / nearest)) <= EXCEPTIONAL_TOL {
        (nearest as usize, true)
    } else {
        (libm::floor(ratio) as usize, false)
    };
    let gammas = (0..=k).map(|j| 1.0 + j as f64 * (2.0 - alpha)).collect();
    Ok(CorrectorSchedule { alpha, k, gammas, exceptional })
}

/// One frozen-`s` solve, kept for the solvability audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveRecord {
    /// Chain level `j` of `chi_j`; `None` for `kappa`.
    pub level: Option<usize>,
    pub sample: usize,
    pub component: usize,
    pub defect: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SampleCorrectors {
    pub s: f64,
    pub p: CellField,
    /// `chi_1 .. chi_{k+1}`, each a `d`-vector field.
    pub chis: Vec<CellField>,
    pub kappa: CellField,
    /// `F_1(s) .. F_{k+1}(s)`.
    pub forcing: Vec<Vec<f64>>,
    /// `theta(s)`, `d x d` row-major.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CorrectorSet {
    pub schedule: CorrectorSchedule,
    pub grid: TorusGrid,
    pub samples: SSampleSet,
    pub per_sample: Vec<SampleCorrectors>,
    pub records: Vec<SolveRecord>,
}

impl CorrectorSet {
    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    /// Samples of `F_{level}` (1-based) for component `c`.
    pub fn forcing_samples(&self, level: usize, c: usize) -> Vec<f64> {
        self.per_sample.iter().map(|smp| smp.forcing[level - 1][c]).collect()
    }

    pub fn theta_samples(&self) -> Vec<Vec<f64>> {
        self.per_sample.iter().map(|smp| smp.theta.clone()).collect()
    }

    pub fn max_defect(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(libm::fabs(r.defect)))
    }

    pub fn max_residual(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.residual))
    }
}

pub fn rhs_first_corrector(ctx: &CellContext, s: f64) -> CellField {
    ctx.first_corrector_rhs(s)
}

/// `F = int rhs p`, per component.
pub fn solvability_value(rhs: &CellField, p: &CellField) -> Vec<f64> {
    (0..rhs.components()).map(|c| rhs.grid.inner(rhs.component(c), &p.data)).collect()
}

fn subtract_constants(rhs: &CellField, consts: &[f64]) -> CellField {
    let mut out = rhs.clone();
    for (c, k) in consts.iter().enumerate() {
        for v in out.component_mut(c) {
            *v -= k;
        }
    }
    out
}

/// `theta(s) = (int chi_1 p) (x) F_1(s) + int int a mu (z (x) z / 2 - z (x) chi_1(xi - z)) p`.
pub fn theta_of_s(ctx: &CellContext, chi1: &CellField, p: &CellField, f1: &[f64], s: f64) -> Vec<f64> {
    let d = ctx.dim();
    let flux = ctx.second_order_flux(chi1, s);
    let chi_p = solvability_value(chi1, p);
    let flux_p = solvability_value(&flux, p);
    let mut theta = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            theta[a * d + b] = chi_p[a] * f1[b] + flux_p[a * d + b];
        }
    }
    theta
}

/// Right-hand side `theta - chi_1 (x) F_1 - G` of the `kappa` problem.
pub fn kappa_rhs(ctx: &CellContext, chi1: &CellField, theta: &[f64], f1: &[f64], s: f64) -> CellField {
    let d = ctx.dim();
    let n = ctx.grid.len();
    let mut rhs = ctx.second_order_flux(chi1, s);
    for a in 0..d {
        for b in 0..d {
            let c = a * d + b;
            for i in 0..n {
                rhs.data[c * n + i] = theta[c] - chi1.data[a * n + i] * f1[b] - rhs.data[c * n + i];
            }
        }
    }
    rhs
}

/// Mean-zero `kappa` with `A kappa = theta - chi_1 (x) F_1 - G`.
pub fn solve_kappa(
    ctx: &CellContext,
    solver: &MeanZeroSolver,
    chi1: &CellField,
    p: &CellField,
    theta: &[f64],
    f1: &[f64],
    s: f64,
) -> Result<(CellField, Vec<(f64, f64)>)> {
    let rhs = kappa_rhs(ctx, chi1, theta, f1, s);
    let mut kappa = CellField::zeros(ctx.grid, FieldShape::Matrix(ctx.dim()));
    let mut audit = Vec::with_capacity(rhs.components());
    for c in 0..rhs.components() {
        let sol = solver.solve(rhs.component(c), &p.data)?;
        kappa.component_mut(c).copy_from_slice(&sol.values);
        audit.push((sol.defect, sol.residual));
    }
    Ok((kappa, audit))
}

fn solve_vector(
    solver: &MeanZeroSolver,
    rhs: &CellField,
    p: &CellField,
    level: usize,
    sample: usize,
    records: &mut Vec<SolveRecord>,
) -> Result<CellField> {
    let mut out = CellField::zeros(rhs.grid, rhs.shape).with_sample(sample);
    for c in 0..rhs.components() {
        let sol = solver.solve(rhs.component(c), &p.data)?;
        out.component_mut(c).copy_from_slice(&sol.values);
        records.push(SolveRecord { level: Some(level), sample, component: c, defect: sol.defect, residual: sol.residual });
    }
    Ok(out)
}

pub fn build_corrector_chain(schedule: &CorrectorSchedule, ctx: &CellContext, samples: SSampleSet, tol: Tolerances) -> Result<CorrectorSet> {
    schedule.check()?;
    let d = ctx.dim();
    let m = samples.len();
    let mut records = Vec::new();
    let mut solvers = Vec::with_capacity(m);
    let mut densities = Vec::with_capacity(m);
    let mut chain: Vec<Vec<CellField>> = vec![Vec::with_capacity(m); schedule.levels()];
    let mut forcing: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(m); schedule.levels()];

    for (idx, s) in samples.times().enumerate() {
        let op = ctx.generator(s);
        let p = invariant_density(&op.adjoint())?.with_sample(idx);
        let solver = MeanZeroSolver::new(&op, tol)?;
        let f = ctx.first_corrector_rhs(s);
        let f1 = solvability_value(&f, &p);
        let chi1 = solve_vector(&solver, &subtract_constants(&f, &f1), &p, 1, idx, &mut records)?;
        chain[0].push(chi1);
        forcing[0].push(f1);
        solvers.push(solver);
        densities.push(p);
    }

    for level in 1..schedule.levels() {
        let derivs = s_derivative(&chain[level - 1])?;
        for (idx, ds) in derivs.iter().enumerate() {
            let p = &densities[idx];
            let fj = solvability_value(ds, p);
            let chi = solve_vector(&solvers[idx], &subtract_constants(ds, &fj), p, level + 1, idx, &mut records)?;
            chain[level].push(chi);
            forcing[level].push(fj);
        }
    }

    let mut per_sample = Vec::with_capacity(m);
    for (idx, s) in samples.times().enumerate() {
        let p = densities[idx].clone();
        let chi1 = &chain[0][idx];
        let f1 = &forcing[0][idx];
        let theta = theta_of_s(ctx, chi1, &p, f1, s);
        let (kappa, audit) = solve_kappa(ctx, &solvers[idx], chi1, &p, &theta, f1, s)?;
        for (c, (defect, residual)) in audit.into_iter().enumerate() {
            records.push(SolveRecord { level: None, sample: idx, component: c, defect, residual });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverBreakdown(format!("non-finite theta at sample {idx}")));
        }
        per_sample.push(SampleCorrectors {
            s,
            p,
            chis: chain.iter().map(|lvl| lvl[idx].clone()).collect(),
            kappa: kappa.with_sample(idx),
            forcing: forcing.iter().map(|lvl| lvl[idx].clone()).collect(),
            theta,
        });
    }
    debug_assert!(per_sample.iter().all(|smp| smp.forcing.iter().all(|f| f.len() == d)));
    Ok(CorrectorSet { schedule: schedule.clone(), grid: ctx.grid, samples, per_sample, records })
}
