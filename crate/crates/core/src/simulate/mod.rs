//! Direct simulation of the ε-problem on a periodic box in one dimension.
//!
//! The box `[-L/2, L/2)` holds `L·q` cells of size `ε = 1/q`, each resolved
//! by the same `N_cell` nodes as the cell torus. Jumps use the lattice nodes
//! `z_l = l/N_cell`, so a jump of length `ε z_l` is an index shift by `l`
//! and the stencil of a node depends only on its residue modulo `N_cell`.

mod spectral;

pub use spectral::{
    box_wavenumber, gaussian, shift_field, solve_heat_multiplier, spectral_derivatives, DirectDft, Transform,
};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cell::{CellContext, GridCoefficient};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxGrid {
    /// Box length in macroscopic units.
    pub length: usize,
    /// `ε = 1/q`.
    pub q: usize,
    pub n_cell: usize,
}

impl BoxGrid {
    pub fn new(length: usize, q: usize, n_cell: usize) -> Result<Self> {
        if length == 0 || q == 0 || n_cell < 4 {
            return Err(Error::InvalidArgument(format!("box L = {length}, q = {q}, N_cell = {n_cell}")));
        }
        let grid = Self { length, q, n_cell };
        if grid.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!("box point count {} is odd", grid.len())));
        }
        Ok(grid)
    }

    /// Box for `ε`, which must be the reciprocal of an integer.
    pub fn from_epsilon(length: usize, eps: f64, n_cell: usize) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::EpsilonNonPositive(eps));
        }
        let q = libm::round(1.0 / eps);
        if q < 1.0 || libm::fabs(q * eps - 1.0) > 1e-9 {
            return Err(Error::InvalidArgument(format!("epsilon {eps} is not 1/q for an integer q")));
        }
        Self::new(length, q as usize, n_cell)
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.q as f64
    }

    pub fn len(&self) -> usize {
        self.length * self.q * self.n_cell
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.epsilon() / self.n_cell as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -0.5 * self.length as f64 + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Cell-torus index of `x_i / ε mod 1`.
    pub fn residue(&self, i: usize) -> usize {
        (i as i64 - (self.len() / 2) as i64).rem_euclid(self.n_cell as i64) as usize
    }

    /// `sqrt(h sum v^2)`.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        libm::sqrt(self.spacing() * v.iter().map(|x| x * x).sum::<f64>())
    }
}

/// Stencil of `L^ε(t)` on a [`BoxGrid`].
#[derive(Debug, Clone)]
pub struct BoxOperator {
    pub grid: BoxGrid,
    pub alpha: f64,
    offsets: Vec<i64>,
    /// `N^-1 a(z_l)` for each offset.
    weights: Vec<f64>,
    mu: GridCoefficient,
}

impl BoxOperator {
    pub fn new(grid: BoxGrid, ctx: &CellContext, alpha: f64) -> Result<Self> {
        if ctx.dim() != 1 {
            return Err(Error::UnsupportedDimension(ctx.dim()));
        }
        if ctx.grid.n != grid.n_cell {
            return Err(Error::GridMismatch(format!("cell N = {} vs box N_cell = {}", ctx.grid.n, grid.n_cell)));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        let max_offset = ctx.kernel.offsets.iter().map(|o| o[0].unsigned_abs() as usize).max().unwrap_or(0);
        if 2 * max_offset >= grid.len() {
            return Err(Error::GridMismatch(format!("kernel reach {max_offset} exceeds half the box")));
        }
        let w = ctx.kernel.weight();
        Ok(Self {
            grid,
            alpha,
            offsets: ctx.kernel.offsets.iter().map(|o| o[0]).collect(),
            weights: ctx.kernel.values.iter().map(|v| w * v).collect(),
            mu: ctx.mu.clone(),
        })
    }

    pub fn fast_time(&self, t: f64) -> f64 {
        t / libm::pow(self.grid.epsilon(), self.alpha)
    }

    /// Jump rates `ε^-2 N^-1 a(z_l) μ(ξ_r, ξ_r - z_l, s)`, indexed `[r * L + l]`.
    pub fn rates(&self, t: f64) -> Vec<f64> {
        let n = self.grid.n_cell;
        let eps = self.grid.epsilon();
        let scale = 1.0 / (eps * eps);
        let tw = self.mu.time_weights(self.fast_time(t));
        let mut out = Vec::with_capacity(n * self.offsets.len());
        for r in 0..n {
            for (l, w) in self.offsets.iter().zip(&self.weights) {
                let arrival = (r as i64 - l).rem_euclid(n as i64) as usize;
                out.push(scale * w * self.mu.at(&tw, r, arrival));
            }
        }
        out
    }

    /// Largest total jump rate out of any node at time `t`.
    pub fn total_rate(&self, t: f64) -> f64 {
        let width = self.offsets.len();
        self.rates(t).chunks(width).map(|c| c.iter().sum::<f64>()).fold(0.0, f64::max)
    }

    /// Largest total jump rate over `scan` samples of one fast period.
    pub fn max_rate(&self, scan: usize) -> f64 {
        let eps_a = libm::pow(self.grid.epsilon(), self.alpha);
        (0..scan.max(1)).map(|m| self.total_rate(m as f64 / scan.max(1) as f64 * eps_a)).fold(0.0, f64::max)
    }

    fn apply_rates(&self, rates: &[f64], u: &[f64], out: &mut [f64]) {
        let n = u.len() as i64;
        let width = self.offsets.len();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &rates[self.grid.residue(i) * width..][..width];
            let ui = u[i];
            let mut acc = 0.0;
            for (l, c) in self.offsets.iter().zip(row) {
                let mut j = i as i64 - l;
                if j < 0 {
                    j += n;
                } else if j >= n {
                    j -= n;
                }
                acc += c * (u[j as usize] - ui);
            }
            *o = acc;
        }
    }

    /// `(L^ε(t) u)(x_i)`.
    pub fn apply(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        if u.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!("field of length {} on a box of {}", u.len(), self.grid.len())));
        }
        let mut out = vec![0.0; u.len()];
        self.apply_rates(&self.rates(t), u, &mut out);
        Ok(out)
    }

    /// Row `i` of `L^ε(t)` as `(column, value)` pairs, the diagonal last.
    pub fn row(&self, i: usize, t: f64) -> Vec<(usize, f64)> {
        let n = self.grid.len() as i64;
        let width = self.offsets.len();
        let rates = self.rates(t);
        let row = &rates[self.grid.residue(i) * width..][..width];
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(width + 1);
        let mut diag = 0.0;
        for (l, c) in self.offsets.iter().zip(row) {
            out.push(((i as i64 - l).rem_euclid(n) as usize, *c));
            diag -= c;
        }
        out.push((i, diag));
        out
    }

    /// `ε^2` times row `i` folded onto the cell torus.
    pub fn folded_row(&self, i: usize, t: f64) -> Vec<f64> {
        let eps = self.grid.epsilon();
        let mut out = vec![0.0; self.grid.n_cell];
        for (j, v) in self.row(i, t) {
            out[self.grid.residue(j)] += eps * eps * v;
        }
        out
    }
}

pub fn apply_l_eps(u: &[f64], t: f64, grid: BoxGrid, ctx: &CellContext, alpha: f64) -> Result<Vec<f64>> {
    BoxOperator::new(grid, ctx, alpha)?.apply(u, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// `dt = cfl_fraction / max_rate`.
    pub cfl_fraction: f64,
    /// Fast-period samples used to bound the jump rate.
    pub rate_scan: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { cfl_fraction: 0.9, rate_scan: 512 }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub grid: BoxGrid,
    pub values: Vec<f64>,
    pub t: f64,
    pub checkpoints: Vec<Snapshot>,
    /// Sup-norm after every step, starting with the initial datum.
    pub sup_history: Vec<f64>,
    /// Smallest value seen over the whole run.
    pub min_value: f64,
    /// `h sum u` at each checkpoint.
    pub mass: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
}

impl EvolutionState {
    /// Largest step-to-step increase of the sup-norm (`<= 0` under the maximum principle).
    pub fn max_sup_increase(&self) -> f64 {
        self.sup_history.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
}

fn check_checkpoints(checkpoints: &[f64], t_final: f64) -> Result<()> {
    let mut prev = 0.0;
    for &c in checkpoints {
        if !(c > prev && c <= t_final * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!("checkpoint {c} outside (0, {t_final}] or out of order")));
        }
        prev = c;
    }
    Ok(())
}

/// Explicit Euler for `∂_t u = L^ε(t) u` up to `t_final`, hitting each checkpoint exactly.
pub fn evolve_epsilon(
    u0: &[f64],
    t_final: f64,
    op: &BoxOperator,
    checkpoints: &[f64],
    opts: EvolveOptions,
) -> Result<EvolutionState> {
    let grid = op.grid;
    if u0.len() != grid.len() {
        return Err(Error::GridMismatch(format!("initial datum of length {} on a box of {}", u0.len(), grid.len())));
    }
    check_checkpoints(checkpoints, t_final)?;
    if !(opts.cfl_fraction > 0.0 && opts.cfl_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("cfl fraction {}", opts.cfl_fraction)));
    }
    let dt_max = opts.cfl_fraction / op.max_rate(opts.rate_scan);
    let mut stops: Vec<f64> = checkpoints.to_vec();
    if stops.last().map_or(true, |&c| c < t_final) {
        stops.push(t_final);
    }

    let mut u = u0.to_vec();
    let mut lu = vec![0.0; u.len()];
    let mut state = EvolutionState {
        grid,
        values: Vec::new(),
        t: 0.0,
        checkpoints: Vec::with_capacity(checkpoints.len()),
        sup_history: vec![sup_norm(&u)],
        min_value: u.iter().copied().fold(f64::INFINITY, f64::min),
        mass: Vec::with_capacity(checkpoints.len()),
        dt: dt_max,
        steps: 0,
    };
    let mut t = 0.0;
    for stop in stops {
        let span = stop - t;
        let n_steps = libm::ceil(span / dt_max - 1e-9).max(1.0) as usize;
        let dt = span / n_steps as f64;
        for m in 0..n_steps {
            let tn = t + m as f64 * dt;
            let rates = op.rates(tn);
            let width = op.offsets.len();
            let rate = rates.chunks(width).map(|c| c.iter().sum::<f64>()).fold(0.0, f64::max);
            if dt * rate > 1.0 {
                return Err(Error::CflViolation { dt, bound: 1.0 / rate });
            }
            op.apply_rates(&rates, &u, &mut lu);
            for (ui, li) in u.iter_mut().zip(&lu) {
                *ui += dt * li;
            }
            state.steps += 1;
            let sup = sup_norm(&u);
            if !sup.is_finite() {
                return Err(Error::NonFiniteValue { step: state.steps });
            }
            state.sup_history.push(sup);
            state.min_value = u.iter().copied().fold(state.min_value, f64::min);
        }
        t = stop;
        if checkpoints.iter().any(|&c| c == stop) {
            state.mass.push(grid.spacing() * u.iter().sum::<f64>());
            state.checkpoints.push(Snapshot { t: stop, values: u.clone() });
        }
    }
    state.t = t;
    state.values = u;
    Ok(state)
}

/// `max_k ||a_k - b_k||_2` over matching checkpoints.
pub fn sup_l2_error(a: &[Snapshot], b: &[Snapshot], grid: BoxGrid) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::CheckpointMismatch(format!("{} vs {} checkpoints", a.len(), b.len())));
    }
    let mut worst = 0.0f64;
    for (sa, sb) in a.iter().zip(b) {
        if libm::fabs(sa.t - sb.t) > 1e-12 * sa.t.max(1.0) {
            return Err(Error::CheckpointMismatch(format!("times {} vs {}", sa.t, sb.t)));
        }
        if sa.values.len() != grid.len() || sb.values.len() != grid.len() {
            return Err(Error::CheckpointMismatch(format!("snapshot length vs box of {}", grid.len())));
        }
        let diff: Vec<f64> = sa.values.iter().zip(&sb.values).map(|(x, y)| x - y).collect();
        worst = worst.max(grid.l2_norm(&diff));
    }
    Ok(worst)
}

/// [`sup_l2_error`] divided by `max_k ||b_k||_2`.
pub fn relative_sup_l2_error(a: &[Snapshot], b: &[Snapshot], grid: BoxGrid) -> Result<f64> {
    let abs = sup_l2_error(a, b, grid)?;
    let scale = b.iter().map(|s| grid.l2_norm(&s.values)).fold(0.0, f64::max);
    Ok(if scale > 0.0 { abs / scale } else { abs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{CoefficientSpec, CoefficientTerm, SpatialFactor, TimeFactor};
    use crate::grid::TorusGrid;
    use crate::kernel::KernelSpec;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::TAU;

    fn context(n: usize, kern: KernelSpec, mu: CoefficientSpec) -> CellContext {
        CellContext::new(TorusGrid::new(1, n).unwrap(), &kern, &mu).unwrap()
    }

    fn wavy() -> CoefficientSpec {
        CoefficientSpec::constant(1.0)
            .with_term(CoefficientTerm::new(0.2, SpatialFactor::sin(1), SpatialFactor::ONE, TimeFactor::ONE))
            .with_term(CoefficientTerm::new(0.1, SpatialFactor::ONE, SpatialFactor::sin(1), TimeFactor::ONE))
            .with_term(CoefficientTerm::new(0.2, SpatialFactor::ONE, SpatialFactor::cos(1), TimeFactor::cos(1)))
    }

    #[test]
    fn box_geometry() {
        let g = BoxGrid::new(2, 4, 8).unwrap();
        assert_eq!(g.len(), 64);
        assert_abs_diff_eq!(g.node(0), -1.0);
        assert_abs_diff_eq!(g.node(32), 0.0);
        assert_eq!(g.residue(32), 0);
        assert_eq!(g.residue(33), 1);
        assert_eq!(g.residue(31), 7);
        assert!(BoxGrid::new(1, 1, 5).is_err());
        assert_eq!(BoxGrid::from_epsilon(8, 1.0 / 16.0, 32).unwrap().q, 16);
        assert!(BoxGrid::from_epsilon(8, 0.3, 32).is_err());
    }

    #[test]
    fn constants_are_annihilated() {
        let ctx = context(16, KernelSpec::triangular(0.1, 0.7), wavy());
        let op = BoxOperator::new(BoxGrid::new(2, 4, 16).unwrap(), &ctx, 0.5).unwrap();
        let lu = op.apply(&vec![3.0; op.grid.len()], 0.3).unwrap();
        assert!(lu.iter().all(|v| libm::fabs(*v) < 1e-9));
        assert!(matches!(op.apply(&[1.0; 3], 0.0), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn grid_mismatch_and_dimension() {
        let ctx = context(16, KernelSpec::triangular(0.0, 1.0), CoefficientSpec::constant(1.0));
        assert!(matches!(BoxOperator::new(BoxGrid::new(2, 4, 8).unwrap(), &ctx, 0.5), Err(Error::GridMismatch(_))));
        let ctx2 = CellContext::new(
            TorusGrid::new(2, 8).unwrap(),
            &KernelSpec::triangular(0.0, 1.0).with_dim(2),
            &CoefficientSpec::constant(1.0),
        )
        .unwrap();
        assert!(matches!(BoxOperator::new(BoxGrid::new(2, 4, 8).unwrap(), &ctx2, 0.5), Err(Error::UnsupportedDimension(2))));
    }

    #[test]
    fn harmonic_multiplier_for_constant_mu() {
        let ctx = context(16, KernelSpec::triangular(0.0, 1.0), CoefficientSpec::constant(1.0));
        let grid = BoxGrid::new(2, 4, 16).unwrap();
        let op = BoxOperator::new(grid, &ctx, 1.0).unwrap();
        let kappa = 3.0 / grid.length as f64;
        let u: Vec<f64> = grid.nodes().iter().map(|x| libm::cos(TAU * kappa * x)).collect();
        let eps = grid.epsilon();
        let w = ctx.kernel.weight();
        let symbol: f64 = ctx
            .kernel
            .offsets
            .iter()
            .zip(&ctx.kernel.values)
            .map(|(o, v)| w * v * libm::cos(TAU * kappa * eps * o[0] as f64 / 16.0))
            .sum();
        let lu = op.apply(&u, 0.0).unwrap();
        for (l, x) in lu.iter().zip(&u) {
            assert_abs_diff_eq!(*l, (symbol - 1.0) / (eps * eps) * x, epsilon = 1e-9);
        }
    }

    #[test]
    fn folded_rows_match_cell_generator() {
        let ctx = context(16, KernelSpec::triangular(0.2, 0.9), wavy());
        let op = BoxOperator::new(BoxGrid::new(2, 4, 16).unwrap(), &ctx, 1.5).unwrap();
        for (i, t) in [(0usize, 0.0), (17, 0.31), (100, 0.77), (127, 1.0)] {
            let a = ctx.generator(op.fast_time(t));
            let folded = op.folded_row(i, t);
            let r = op.grid.residue(i);
            for (j, v) in folded.iter().enumerate() {
                assert_abs_diff_eq!(*v, a.matrix[(r, j)], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn schur_bound() {
        let ctx = context(16, KernelSpec::triangular(0.0, 1.0), wavy());
        let op = BoxOperator::new(BoxGrid::new(2, 4, 16).unwrap(), &ctx, 0.5).unwrap();
        let (_, mu_plus) = wavy().bounds();
        let eps = op.grid.epsilon();
        let u: Vec<f64> = (0..op.grid.len()).map(|i| libm::sin(i as f64 * 1.7) + libm::cos(i as f64 * i as f64)).collect();
        let lhs = op.grid.l2_norm(&op.apply(&u, 0.2).unwrap());
        assert!(lhs <= 2.0 * mu_plus / (eps * eps) * op.grid.l2_norm(&u));
    }

    #[test]
    fn euler_harmonic_and_positivity() {
        let ctx = context(16, KernelSpec::triangular(0.0, 1.0), CoefficientSpec::constant(1.0));
        let grid = BoxGrid::new(2, 2, 16).unwrap();
        let op = BoxOperator::new(grid, &ctx, 1.0).unwrap();
        let kappa = 1.0 / grid.length as f64;
        let u0: Vec<f64> = grid.nodes().iter().map(|x| 1.0 + libm::cos(TAU * kappa * x)).collect();
        let state = evolve_epsilon(&u0, 0.5, &op, &[0.25, 0.5], EvolveOptions { cfl_fraction: 0.05, rate_scan: 8 }).unwrap();
        let eps = grid.epsilon();
        let w = ctx.kernel.weight();
        let symbol: f64 = ctx
            .kernel
            .offsets
            .iter()
            .zip(&ctx.kernel.values)
            .map(|(o, v)| w * v * libm::cos(TAU * kappa * eps * o[0] as f64 / 16.0))
            .sum();
        let lambda = (symbol - 1.0) / (eps * eps);
        let last = state.checkpoints.last().unwrap();
        for (v, x) in last.values.iter().zip(grid.nodes()) {
            assert_abs_diff_eq!(*v, 1.0 + libm::exp(lambda * 0.5) * libm::cos(TAU * kappa * x), epsilon = 2e-3);
        }
        assert!(state.min_value >= 0.0);
        assert!(state.max_sup_increase() <= 0.0);
        assert_eq!(state.checkpoints.len(), 2);
        assert_abs_diff_eq!(state.checkpoints[0].t, 0.25);
    }

    #[test]
    fn mass_conserved_for_symmetric_data() {
        let ctx = context(16, KernelSpec::triangular(0.0, 1.0), CoefficientSpec::constant(1.0).with_term(CoefficientTerm::new(
            0.3,
            SpatialFactor::ONE,
            SpatialFactor::ONE,
            TimeFactor::sin(1),
        )));
        let grid = BoxGrid::new(2, 2, 16).unwrap();
        let op = BoxOperator::new(grid, &ctx, 0.5).unwrap();
        let u0: Vec<f64> = grid.nodes().iter().map(|x| libm::exp(-4.0 * x * x)).collect();
        let m0 = grid.spacing() * u0.iter().sum::<f64>();
        let state = evolve_epsilon(&u0, 0.1, &op, &[0.05, 0.1], EvolveOptions::default()).unwrap();
        for m in &state.mass {
            assert_abs_diff_eq!(*m, m0, epsilon = 1e-12);
        }
    }

    #[test]
    fn checkpoint_errors() {
        let g = BoxGrid::new(2, 2, 8).unwrap();
        let a = [Snapshot { t: 0.5, values: vec![1.0; g.len()] }];
        let b = [Snapshot { t: 0.5, values: vec![1.5; g.len()] }];
        assert_abs_diff_eq!(sup_l2_error(&a, &a, g).unwrap(), 0.0);
        assert_abs_diff_eq!(sup_l2_error(&a, &b, g).unwrap(), 0.5 * libm::sqrt(2.0), epsilon = 1e-14);
        let c = [Snapshot { t: 0.7, values: vec![1.0; g.len()] }];
        assert!(matches!(sup_l2_error(&a, &c, g), Err(Error::CheckpointMismatch(_))));
        assert!(matches!(sup_l2_error(&a, &[], g), Err(Error::CheckpointMismatch(_))));
    }
}
