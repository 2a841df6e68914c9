//! Two-scale ansatz on the simulation box and its defect.
//!
//! For a smooth profile `u` the ansatz is
//! `w(x,t) = u(y,t) + Σ_j ε^{γ_j} χ_j(ξ,s) ∂u(y,t) + ε² ϰ(ξ,s) ∂²u(y,t)` with
//! `y = x - b^ε(t)`, `ξ = x/ε`, `s = t/ε^α`. The defect is
//! `∂_t w - L^ε w - [∂_t u - θ(s) ∂²u](y,t)`; `∂_t w` is taken by the chain
//! rule through the full moving frame. One-dimensional only.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::correctors::CorrectorSet;
use crate::effective::{DriftDecomposition, EffectiveTensors, FrameVariant};
use crate::simulate::{solve_heat_multiplier, spectral_derivatives, BoxOperator, Transform};
use crate::trig::{derivative_weights, interpolation_weights};
use crate::{Error, Result};

/// Correctors, frame and effective data needed to build `w^ε`.
pub struct Ansatz<'a> {
    pub correctors: &'a CorrectorSet,
    pub drift: &'a DriftDecomposition,
    pub effective: &'a EffectiveTensors,
    pub op: &'a BoxOperator,
    /// Initial profile; `u(·,t)` is its heat flow with `Θ_sym`.
    pub u0: &'a [f64],
}

/// `w^ε(·,t)` and the chain-rule `∂_t w^ε(·,t)`.
#[derive(Debug, Clone)]
pub struct AnsatzEvaluation {
    pub t: f64,
    pub w: Vec<f64>,
    pub dw_dt: Vec<f64>,
    /// `[∂_t u - θ(s) ∂²u](x - b^ε(t), t)`.
    pub target: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// `(t, ||defect(t)||_2)` at each probe time.
    pub samples: Vec<(f64, f64)>,
    pub max: f64,
}

/// Values at a fast time `s` of every cell field, interpolated across s-samples.
struct CellSlice {
    /// `[level][residue]`.
    chi: Vec<Vec<f64>>,
    dchi: Vec<Vec<f64>>,
    kappa: Vec<f64>,
    dkappa: Vec<f64>,
}

impl<'a> Ansatz<'a> {
    pub fn new(
        correctors: &'a CorrectorSet,
        drift: &'a DriftDecomposition,
        effective: &'a EffectiveTensors,
        op: &'a BoxOperator,
        u0: &'a [f64],
    ) -> Result<Self> {
        if correctors.dim() != 1 {
            return Err(Error::UnsupportedDimension(correctors.dim()));
        }
        if correctors.grid.n != op.grid.n_cell {
            return Err(Error::GridMismatch(format!("cell N = {} vs box N_cell = {}", correctors.grid.n, op.grid.n_cell)));
        }
        if libm::fabs(correctors.schedule.alpha - op.alpha) > 1e-14 {
            return Err(Error::ScheduleMismatch(format!("alpha {} vs {}", correctors.schedule.alpha, op.alpha)));
        }
        if u0.len() != op.grid.len() {
            return Err(Error::GridMismatch(format!("profile of length {} on a box of {}", u0.len(), op.grid.len())));
        }
        Ok(Self { correctors, drift, effective, op, u0 })
    }

    fn slice(&self, s: f64) -> CellSlice {
        let m = self.correctors.samples.len();
        let wi = interpolation_weights(m, s);
        let wd = derivative_weights(m, s);
        let n = self.correctors.grid.n;
        let combine = |weights: &[f64], field: &dyn Fn(usize) -> &'a [f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (idx, w) in weights.iter().enumerate() {
                for (o, v) in out.iter_mut().zip(field(idx)) {
                    *o += w * v;
                }
            }
            out
        };
        let per = &self.correctors.per_sample;
        let levels = self.correctors.schedule.levels();
        let chi = (0..levels).map(|j| combine(&wi, &|idx| per[idx].chis[j].component(0))).collect();
        let dchi = (0..levels).map(|j| combine(&wd, &|idx| per[idx].chis[j].component(0))).collect();
        CellSlice {
            chi,
            dchi,
            kappa: combine(&wi, &|idx| per[idx].kappa.component(0)),
            dkappa: combine(&wd, &|idx| per[idx].kappa.component(0)),
        }
    }

    pub fn evaluate(&self, t: f64, tr: &dyn Transform) -> Result<AnsatzEvaluation> {
        let grid = self.op.grid;
        let eps = grid.epsilon();
        let alpha = self.op.alpha;
        let eps_a = libm::pow(eps, alpha);
        let s = t / eps_a;
        let big_theta = self.effective.theta_sym[0];
        let theta_s = self.effective.theta_at(s)[0];
        let b = self.drift.frame(eps, t, FrameVariant::Full)?[0];
        let db = self.drift.velocity(eps, t, FrameVariant::Full)?[0];

        let u_t = &solve_heat_multiplier(self.u0, &|tt| big_theta * tt, grid, &[t], tr)?[0].values;
        let du = spectral_derivatives(u_t, b, 4, grid, tr)?;
        let cell = self.slice(s);
        let scales: Vec<f64> = self.correctors.schedule.gammas.iter().map(|g| libm::pow(eps, *g)).collect();

        let n = grid.len();
        let mut w = vec![0.0; n];
        let mut dw = vec![0.0; n];
        let mut target = vec![0.0; n];
        for i in 0..n {
            let r = grid.residue(i);
            let (u0, u1, u2, u3, u4) = (du[0][i], du[1][i], du[2][i], du[3][i], du[4][i]);
            let mut chi_sum = 0.0;
            let mut dchi_sum = 0.0;
            for (j, sc) in scales.iter().enumerate() {
                chi_sum += sc * cell.chi[j][r];
                dchi_sum += sc * cell.dchi[j][r];
            }
            let k = eps * eps * cell.kappa[r];
            let dk = eps * eps * cell.dkappa[r];
            w[i] = u0 + chi_sum * u1 + k * u2;
            dw[i] = big_theta * u2 - db * u1
                + dchi_sum / eps_a * u1
                + chi_sum * (big_theta * u3 - db * u2)
                + dk / eps_a * u2
                + k * (big_theta * u4 - db * u3);
            target[i] = (big_theta - theta_s) * u2;
        }
        Ok(AnsatzEvaluation { t, w, dw_dt: dw, target })
    }

    /// `||∂_t w - L^ε w - target||_2` at time `t`.
    pub fn defect_norm(&self, t: f64, tr: &dyn Transform) -> Result<f64> {
        let ev = self.evaluate(t, tr)?;
        let lw = self.op.apply(&ev.w, t)?;
        let r: Vec<f64> = (0..ev.w.len()).map(|i| ev.dw_dt[i] - lw[i] - ev.target[i]).collect();
        Ok(self.op.grid.l2_norm(&r))
    }
}

/// Largest defect over `phases` equispaced times in one fast period starting at `t0`.
pub fn ansatz_residual(ansatz: &Ansatz<'_>, t0: f64, phases: usize, tr: &dyn Transform) -> Result<ResidualReport> {
    let eps_a = libm::pow(ansatz.op.grid.epsilon(), ansatz.op.alpha);
    let mut samples = Vec::with_capacity(phases);
    for m in 0..phases.max(1) {
        let t = t0 + m as f64 / phases.max(1) as f64 * eps_a;
        samples.push((t, ansatz.defect_norm(t, tr)?));
    }
    let max = samples.iter().fold(0.0f64, |m, &(_, v)| m.max(v));
    Ok(ResidualReport { samples, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::{CellContext, Tolerances};
    use crate::coefficient::{CoefficientSpec, CoefficientTerm, SpatialFactor, TimeFactor};
    use crate::correctors::{build_corrector_chain, corrector_schedule};
    use crate::grid::{SSampleSet, TorusGrid};
    use crate::kernel::KernelSpec;
    use crate::simulate::{gaussian, BoxGrid, DirectDft};
    use approx::assert_relative_eq;

    fn mu() -> CoefficientSpec {
        CoefficientSpec::constant(1.0)
            .with_term(CoefficientTerm::new(0.2, SpatialFactor::sin(1), SpatialFactor::ONE, TimeFactor::ONE))
            .with_term(CoefficientTerm::new(0.1, SpatialFactor::ONE, SpatialFactor::sin(1), TimeFactor::ONE))
            .with_term(CoefficientTerm::new(0.2, SpatialFactor::ONE, SpatialFactor::cos(1), TimeFactor::cos(1)))
    }

    #[test]
    fn chain_rule_matches_finite_difference() {
        let n = 8;
        for alpha in [0.5, 1.5] {
            let ctx = CellContext::new(TorusGrid::new(1, n).unwrap(), &KernelSpec::triangular(0.0, 1.0), &mu()).unwrap();
            let set = build_corrector_chain(&corrector_schedule(alpha).unwrap(), &ctx, SSampleSet::new(16).unwrap(), Tolerances::default()).unwrap();
            let drift = DriftDecomposition::from_correctors(&set).unwrap();
            let eff = EffectiveTensors::from_correctors(&set).unwrap();
            let grid = BoxGrid::new(8, 4, n).unwrap();
            let op = BoxOperator::new(grid, &ctx, alpha).unwrap();
            let u0 = gaussian(grid);
            let ans = Ansatz::new(&set, &drift, &eff, &op, &u0).unwrap();
            let (t, dt) = (0.3, 1e-5);
            let mid = ans.evaluate(t, &DirectDft).unwrap();
            let plus = ans.evaluate(t + dt, &DirectDft).unwrap();
            let minus = ans.evaluate(t - dt, &DirectDft).unwrap();
            let scale = mid.dw_dt.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
            for i in 0..grid.len() {
                let fd = (plus.w[i] - minus.w[i]) / (2.0 * dt);
                assert!(libm::fabs(fd - mid.dw_dt[i]) <= 1e-5 * scale, "alpha {alpha} node {i}: {fd} vs {}", mid.dw_dt[i]);
            }
        }
    }

    #[test]
    fn homogeneous_defect_is_the_quadrature_remainder() {
        let n = 16;
        let ctx = CellContext::new(TorusGrid::new(1, n).unwrap(), &KernelSpec::triangular(0.0, 1.0), &CoefficientSpec::constant(1.0)).unwrap();
        let set = build_corrector_chain(&corrector_schedule(0.5).unwrap(), &ctx, SSampleSet::new(8).unwrap(), Tolerances::default()).unwrap();
        let drift = DriftDecomposition::from_correctors(&set).unwrap();
        let eff = EffectiveTensors::from_correctors(&set).unwrap();
        let m4: f64 = {
            let w = ctx.kernel.weight();
            ctx.kernel.offsets.iter().zip(&ctx.kernel.values).map(|(o, v)| w * v * libm::pow(o[0] as f64 / n as f64, 4.0)).sum()
        };
        for q in [8usize, 16] {
            let grid = BoxGrid::new(8, q, n).unwrap();
            let op = BoxOperator::new(grid, &ctx, 0.5).unwrap();
            let u0 = gaussian(grid);
            let ans = Ansatz::new(&set, &drift, &eff, &op, &u0).unwrap();
            let defect = ans.defect_norm(0.5, &DirectDft).unwrap();
            let theta = eff.theta_sym[0];
            let u_t = &solve_heat_multiplier(&u0, &|t| theta * t, grid, &[0.5], &DirectDft).unwrap()[0].values;
            let d4 = &spectral_derivatives(u_t, 0.0, 4, grid, &DirectDft).unwrap()[4];
            let eps = grid.epsilon();
            let leading = eps * eps * m4 / 24.0 * grid.l2_norm(d4);
            assert_relative_eq!(defect, leading, max_relative = 0.05);
        }
    }
}
