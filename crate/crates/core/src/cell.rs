//! Frozen-time cell operators on the torus and their singular solves.
//!
//! The generator `A(s)` is assembled densely from the periodized kernel
//! `â_0`, so its rows sum to zero and, under uniform weights, the adjoint is
//! the transpose. Singular systems are solved through a bordered matrix:
//! the mean constraint is appended as a row and a constant multiplier as a
//! column, which makes the system regular whenever the null space is
//! one-dimensional.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, LU};

use crate::coefficient::CoefficientSpec;
use crate::field::{CellField, FieldShape};
use crate::grid::TorusGrid;
use crate::kernel::{DiscreteKernel, KernelSpec, PeriodizedKernel};
use crate::trig::differentiation_matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub compat: f64,
    pub solve: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { compat: 1e-10, solve: 1e-10 }
    }
}

/// Coefficient factors tabulated at grid nodes.
#[derive(Debug, Clone)]
pub struct GridCoefficient {
    pub spec: CoefficientSpec,
    departure: Vec<Vec<f64>>,
    arrival: Vec<Vec<f64>>,
}

impl GridCoefficient {
    pub fn new(grid: &TorusGrid, spec: &CoefficientSpec) -> Self {
        let tab = |f: &crate::coefficient::SpatialFactor| -> Vec<f64> {
            (0..grid.len()).map(|i| f.eval(&grid.point(i)[..grid.dim])).collect()
        };
        Self {
            spec: spec.clone(),
            departure: spec.terms.iter().map(|t| tab(&t.departure)).collect(),
            arrival: spec.terms.iter().map(|t| tab(&t.arrival)).collect(),
        }
    }

    /// Time factors `c_k m_k(s)`.
    pub fn time_weights(&self, s: f64) -> Vec<f64> {
        self.spec.terms.iter().map(|t| t.coeff * t.time.eval(s)).collect()
    }

    /// `mu(xi_i, xi_j, s)` given precomputed time weights.
    #[inline]
    pub fn at(&self, tw: &[f64], i: usize, j: usize) -> f64 {
        let mut acc = self.spec.constant;
        for (k, w) in tw.iter().enumerate() {
            acc += w * self.departure[k][i] * self.arrival[k][j];
        }
        acc
    }
}

/// Kernel and coefficient data shared by every cell computation on one grid.
#[derive(Debug, Clone)]
pub struct CellContext {
    pub grid: TorusGrid,
    pub kernel_spec: KernelSpec,
    pub kernel: DiscreteKernel,
    pub a0: PeriodizedKernel,
    pub a1: PeriodizedKernel,
    pub a2: PeriodizedKernel,
    pub mu: GridCoefficient,
}

impl CellContext {
    pub fn new(grid: TorusGrid, kern: &KernelSpec, mu: &CoefficientSpec) -> Result<Self> {
        mu.check()?;
        if kern.dim != grid.dim {
            return Err(Error::GridMismatch(format!("kernel dimension {} vs grid dimension {}", kern.dim, grid.dim)));
        }
        let kernel = DiscreteKernel::sample(kern, grid.n)?;
        Ok(Self {
            grid,
            kernel_spec: *kern,
            a0: kernel.periodize(0)?,
            a1: kernel.periodize(1)?,
            a2: kernel.periodize(2)?,
            kernel,
            mu: GridCoefficient::new(&grid, mu),
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn generator(&self, s: f64) -> CellOperator {
        let n = self.grid.len();
        let w = self.grid.weight();
        let tw = self.mu.time_weights(s);
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let v = w * self.a0.values[self.grid.difference(i, j)] * self.mu.at(&tw, i, j);
                m[(i, j)] = v;
                row_sum += v;
            }
            m[(i, i)] -= row_sum;
        }
        CellOperator { grid: self.grid, s, adjoint: false, matrix: m }
    }

    /// `f(xi, s) = int z a(z) mu(xi, xi - z, s) dz`, one component per axis.
    pub fn first_corrector_rhs(&self, s: f64) -> CellField {
        let d = self.dim();
        let n = self.grid.len();
        let w = self.grid.weight();
        let tw = self.mu.time_weights(s);
        let mut out = CellField::zeros(self.grid, FieldShape::Vector(d));
        for a in 0..d {
            let a1 = self.a1.component(a);
            for i in 0..n {
                let mut acc = 0.0;
                for (j, &ka) in a1.iter().enumerate() {
                    acc += ka * self.mu.at(&tw, i, self.grid.difference(i, j));
                }
                out.data[a * n + i] = w * acc;
            }
        }
        out
    }

    /// `G(xi, s) = int a mu (z (x) z / 2 - z (x) chi1(xi - z)) dz`.
    pub fn second_order_flux(&self, chi1: &CellField, s: f64) -> CellField {
        let d = self.dim();
        let n = self.grid.len();
        let w = self.grid.weight();
        let tw = self.mu.time_weights(s);
        let mut out = CellField::zeros(self.grid, FieldShape::Matrix(d));
        for i in 0..n {
            for j in 0..n {
                let target = self.grid.difference(i, j);
                let wm = w * self.mu.at(&tw, i, target);
                for a in 0..d {
                    let za = self.a1.values[a * n + j];
                    for b in 0..d {
                        let zz = self.a2.values[(a * d + b) * n + j];
                        out.data[(a * d + b) * n + i] += wm * (0.5 * zz - za * chi1.data[b * n + target]);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CellOperator {
    pub grid: TorusGrid,
    pub s: f64,
    pub adjoint: bool,
    pub matrix: DMatrix<f64>,
}

impl CellOperator {
    pub fn adjoint(&self) -> CellOperator {
        CellOperator { grid: self.grid, s: self.s, adjoint: !self.adjoint, matrix: self.matrix.transpose() }
    }

    /// `A v`; a generator is applied in jump form `sum_j A_ij (v_j - v_i)`, so constants map to exact zeros.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            if self.adjoint {
                for j in 0..n {
                    acc += self.matrix[(i, j)] * v[j];
                }
            } else {
                for j in 0..n {
                    if j != i {
                        acc += self.matrix[(i, j)] * (v[j] - v[i]);
                    }
                }
            }
            out[i] = acc;
        }
        out
    }

    /// Largest absolute row sum (zero for a generator).
    pub fn max_row_sum(&self) -> f64 {
        self.matrix.row_iter().map(|r| libm::fabs(r.sum())).fold(0.0, f64::max)
    }

    pub fn max_col_sum(&self) -> f64 {
        self.matrix.column_iter().map(|c| libm::fabs(c.sum())).fold(0.0, f64::max)
    }

    fn bordered(&self) -> DMatrix<f64> {
        let n = self.grid.len();
        let w = self.grid.weight();
        let mut b = DMatrix::<f64>::zeros(n + 1, n + 1);
        b.view_mut((0, 0), (n, n)).copy_from(&self.matrix);
        for i in 0..n {
            b[(i, n)] = 1.0;
            b[(n, i)] = w;
        }
        b
    }
}

/// Assembles the generator `A(s)` or, with `adjoint`, `A*(s)`.
pub fn assemble_generator(grid: TorusGrid, kern: &KernelSpec, mu: &CoefficientSpec, s: f64, adjoint: bool) -> Result<CellOperator> {
    let op = CellContext::new(grid, kern, mu)?.generator(s);
    Ok(if adjoint { op.adjoint() } else { op })
}

fn l2(grid: &TorusGrid, v: &[f64]) -> f64 {
    libm::sqrt(grid.inner(v, v))
}

fn pivot_ratio(lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    let diag = u.diagonal();
    let max = diag.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(libm::fabs(*v)));
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

const PIVOT_FLOOR: f64 = 1e-13;

/// Positive solution of `A* p = 0` with discrete mean one.
pub fn invariant_density(adjoint_op: &CellOperator) -> Result<CellField> {
    if !adjoint_op.adjoint {
        return Err(Error::InvalidArgument("invariant density needs the adjoint operator".into()));
    }
    let grid = adjoint_op.grid;
    let n = grid.len();
    let lu = adjoint_op.bordered().lu();
    let pivot = pivot_ratio(&lu);
    if pivot < PIVOT_FLOOR {
        return Err(Error::NullSpaceDimension { pivot });
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let sol = lu.solve(&rhs).ok_or_else(|| Error::SolverBreakdown("singular bordered adjoint".into()))?;
    let p: Vec<f64> = sol.iter().take(n).copied().collect();
    let residual = l2(&grid, &adjoint_op.apply(&p));
    if !(residual <= 1e-10) {
        return Err(Error::SolverBreakdown(format!("invariant density residual {residual:e}")));
    }
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NonPositiveDensity { min });
    }
    Ok(CellField::scalar(grid, p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanZeroSolution {
    pub values: Vec<f64>,
    /// `int rhs p`, which a compatible right-hand side makes vanish.
    pub defect: f64,
    /// `||A chi - (rhs - defect)||_2`.
    pub residual: f64,
}

/// Factorized bordered system for repeated solves of `A chi = g`,
/// `<chi> = 0`.
pub struct MeanZeroSolver {
    op: CellOperator,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pub tol: Tolerances,
}

impl MeanZeroSolver {
    pub fn new(op: &CellOperator, tol: Tolerances) -> Result<Self> {
        if op.adjoint {
            return Err(Error::InvalidArgument("mean-zero solves use the generator, not its adjoint".into()));
        }
        let lu = op.bordered().lu();
        let pivot = pivot_ratio(&lu);
        if pivot < PIVOT_FLOOR {
            return Err(Error::NullSpaceDimension { pivot });
        }
        Ok(Self { op: op.clone(), lu, tol })
    }

    pub fn operator(&self) -> &CellOperator {
        &self.op
    }

    pub fn solve(&self, rhs: &[f64], p: &[f64]) -> Result<MeanZeroSolution> {
        let grid = self.op.grid;
        let n = grid.len();
        let scale = l2(&grid, rhs).max(1.0);
        let defect = grid.inner(rhs, p);
        if !(libm::fabs(defect) <= self.tol.compat * scale) {
            return Err(Error::CompatibilityViolation { defect });
        }
        let mut b = DVector::<f64>::zeros(n + 1);
        for i in 0..n {
            b[i] = rhs[i];
        }
        let sol = self.lu.solve(&b).ok_or_else(|| Error::SolverBreakdown("singular bordered generator".into()))?;
        let values: Vec<f64> = sol.iter().take(n).copied().collect();
        let multiplier = sol[n];
        let applied = self.op.apply(&values);
        let diff: Vec<f64> = applied.iter().zip(rhs).map(|(a, g)| a - (g - multiplier)).collect();
        let residual = l2(&grid, &diff);
        if !(residual <= self.tol.solve * scale) {
            return Err(Error::SolverBreakdown(format!("mean-zero solve residual {residual:e}")));
        }
        Ok(MeanZeroSolution { values, defect, residual })
    }
}

/// Solves `A chi = rhs` on the mean-zero complement, component by component.
pub fn solve_on_mean_zero(op: &CellOperator, rhs: &CellField, p: &CellField) -> Result<CellField> {
    let solver = MeanZeroSolver::new(op, Tolerances::default())?;
    let mut out = CellField::zeros(rhs.grid, rhs.shape);
    out.sample = rhs.sample;
    for c in 0..rhs.components() {
        let sol = solver.solve(rhs.component(c), &p.data)?;
        out.component_mut(c).copy_from_slice(&sol.values);
    }
    Ok(out)
}

/// Spectral derivative in `s` of fields sampled at `s_m = m/M`.
pub fn s_derivative(samples: &[CellField]) -> Result<Vec<CellField>> {
    let m = samples.len();
    if m < 2 || m % 2 != 0 {
        return Err(Error::InvalidArgument(format!("s-derivative needs an even sample count, got {m}")));
    }
    let len = samples[0].data.len();
    if samples.iter().any(|f| f.data.len() != len || f.shape != samples[0].shape) {
        return Err(Error::InvalidArgument("s-samples differ in shape".into()));
    }
    let dm = differentiation_matrix(m);
    let mut out: Vec<CellField> = samples
        .iter()
        .enumerate()
        .map(|(idx, f)| {
            let mut g = CellField::zeros(f.grid, f.shape);
            g.sample = Some(idx);
            g
        })
        .collect();
    for (row, field) in out.iter_mut().enumerate() {
        let weights = &dm[row * m..(row + 1) * m];
        for (k, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for (o, v) in field.data.iter_mut().zip(&samples[k].data) {
                *o += w * v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{CoefficientTerm, SpatialFactor, TimeFactor};
    use approx::assert_abs_diff_eq;
    use core::f64::consts::TAU;

    fn grid64() -> TorusGrid {
        TorusGrid::new(1, 64).unwrap()
    }

    #[test]
    fn generator_rows_sum_to_zero_and_adjoint_is_transpose() {
        let mu = CoefficientSpec::constant(1.0)
            .with_term(CoefficientTerm::new(0.3, SpatialFactor::sin(1), SpatialFactor::cos(2), TimeFactor::sin(1)));
        let a = assemble_generator(grid64(), &KernelSpec::triangular(0.3, 0.8), &mu, 0.37, false).unwrap();
        assert!(a.max_row_sum() < 1e-13);
        assert!(a.apply(&vec![2.5; 64]).iter().all(|v| *v == 0.0));
        let at = assemble_generator(grid64(), &KernelSpec::triangular(0.3, 0.8), &mu, 0.37, true).unwrap();
        assert!(at.max_col_sum() < 1e-13);
        assert_eq!(at.matrix, a.matrix.transpose());
    }

    #[test]
    fn uniform_kernel_is_projection() {
        let grid = grid64();
        let a = assemble_generator(grid, &KernelSpec::uniform(0.0, 1.0), &CoefficientSpec::constant(1.0), 0.0, false).unwrap();
        let v: Vec<f64> = (0..64).map(|i| libm::sin(0.3 * i as f64) + 0.1 * i as f64).collect();
        let mean = grid.mean(&v);
        for (av, vi) in a.apply(&v).iter().zip(&v) {
            assert_abs_diff_eq!(*av, mean - vi, epsilon = 1e-13);
        }
        let beta = 0.5;
        let a = assemble_generator(grid, &KernelSpec::uniform(0.0, 1.0), &CoefficientSpec::arrival_modulated(beta), 0.0, false).unwrap();
        let weighted: f64 = (0..64).map(|i| (1.0 + beta * libm::cos(TAU * i as f64 / 64.0)) * v[i]).sum::<f64>() / 64.0;
        for (av, vi) in a.apply(&v).iter().zip(&v) {
            assert_abs_diff_eq!(*av, weighted - vi, epsilon = 1e-13);
        }
    }

    #[test]
    fn invariant_density_closed_forms() {
        let grid = grid64();
        let p = invariant_density(&assemble_generator(grid, &KernelSpec::triangular(0.2, 1.0), &CoefficientSpec::constant(1.0), 0.0, true).unwrap()).unwrap();
        for v in &p.data {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
        let sym = CoefficientSpec::constant(1.0)
            .with_term(CoefficientTerm::new(0.3, SpatialFactor::cos(1), SpatialFactor::cos(1), TimeFactor::ONE));
        let p = invariant_density(&assemble_generator(grid, &KernelSpec::triangular(0.0, 1.0), &sym, 0.0, true).unwrap()).unwrap();
        for v in &p.data {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
        let p = invariant_density(&assemble_generator(grid, &KernelSpec::uniform(0.0, 1.0), &CoefficientSpec::arrival_modulated(0.5), 0.0, true).unwrap()).unwrap();
        for (i, v) in p.data.iter().enumerate() {
            assert_abs_diff_eq!(*v, 1.0 + 0.5 * libm::cos(TAU * i as f64 / 64.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn invariant_density_needs_adjoint() {
        let a = assemble_generator(grid64(), &KernelSpec::uniform(0.0, 1.0), &CoefficientSpec::constant(1.0), 0.0, false).unwrap();
        assert!(matches!(invariant_density(&a), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn degenerate_kernel_has_large_null_space() {
        // Jumps by exactly half a period split the torus into disconnected pairs.
        let grid = TorusGrid::new(1, 8).unwrap();
        let kern = KernelSpec::triangular(0.5, 0.125);
        let a = assemble_generator(grid, &kern, &CoefficientSpec::constant(1.0), 0.0, true).unwrap();
        assert!(matches!(invariant_density(&a), Err(Error::NullSpaceDimension { .. })));
    }

    #[test]
    fn mean_zero_solves() {
        let grid = grid64();
        let one = CoefficientSpec::constant(1.0);
        let a = assemble_generator(grid, &KernelSpec::uniform(0.0, 1.0), &one, 0.0, false).unwrap();
        let p = CellField::scalar(grid, vec![1.0; 64]);
        let zero = solve_on_mean_zero(&a, &CellField::zeros(grid, FieldShape::Scalar), &p).unwrap();
        assert!(zero.max_abs() == 0.0);
        let rhs = CellField::from_fn(grid, |x| libm::sin(TAU * x[0]));
        let chi = solve_on_mean_zero(&a, &rhs, &p).unwrap();
        for (c, r) in chi.data.iter().zip(&rhs.data) {
            assert_abs_diff_eq!(*c, -r, epsilon = 1e-12);
        }
        let bad = CellField::from_fn(grid, |x| 1.0 + libm::sin(TAU * x[0]));
        assert!(matches!(solve_on_mean_zero(&a, &bad, &p), Err(Error::CompatibilityViolation { .. })));
    }

    #[test]
    fn s_derivative_is_spectral() {
        let grid = TorusGrid::new(1, 8).unwrap();
        let m = 16;
        let samples: Vec<CellField> = (0..m)
            .map(|k| {
                let s = k as f64 / m as f64;
                CellField::from_fn(grid, |x| libm::cos(TAU * x[0]) * libm::cos(TAU * s) + libm::cos(3.0 * TAU * s) + 2.0)
            })
            .collect();
        let d = s_derivative(&samples).unwrap();
        for (k, f) in d.iter().enumerate() {
            let s = k as f64 / m as f64;
            for (i, v) in f.data.iter().enumerate() {
                let x = i as f64 / 8.0;
                let expect = -TAU * libm::cos(TAU * x) * libm::sin(TAU * s) - 3.0 * TAU * libm::sin(3.0 * TAU * s);
                assert_abs_diff_eq!(*v, expect, epsilon = 1e-12);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn discrete_adjointness(seed in 0u64..1000, s in 0.0f64..1.0) {
            let grid = TorusGrid::new(1, 16).unwrap();
            let mu = CoefficientSpec::constant(1.0)
                .with_term(CoefficientTerm::new(0.4, SpatialFactor::sin(1), SpatialFactor::cos(1), TimeFactor::cos(1)));
            let a = assemble_generator(grid, &KernelSpec::triangular(0.2, 0.9), &mu, s, false).unwrap();
            let at = a.adjoint();
            let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut next = || { x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5 };
            let v: Vec<f64> = (0..16).map(|_| next()).collect();
            let w: Vec<f64> = (0..16).map(|_| next()).collect();
            let lhs = grid.inner(&a.apply(&v), &w);
            let rhs = grid.inner(&v, &at.apply(&w));
            proptest::prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
