//! Jump-size densities `a(z)` and their lattice samples.
//!
//! Only compactly supported families are admitted, so every lattice sum is a
//! finite sum and periodization onto the unit torus is exact. A density is
//! sampled at the nodes `z_l = l/N`; at a jump discontinuity on the support
//! boundary the node takes half the interior value, which makes the sampled
//! sums the trapezoidal rule for the discontinuous families. After sampling
//! the values are rescaled so that the discrete mass is one; the discrete
//! moments computed from those values are what every downstream identity is
//! checked against.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// Density `1/(2r)` on `[c-r, c+r]`.
    Uniform { center: f64, half_width: f64 },
    /// Density `(1 - |z-c|/r)/r` on `[c-r, c+r]`.
    Triangular { center: f64, half_width: f64 },
    /// Centered Gaussian with standard deviation `sigma`, cut off at
    /// `|z| = cutoff` and renormalized.
    TruncatedGaussian { sigma: f64, cutoff: f64 },
}

/// Jump density on `R^d`; in two dimensions the density is the product of
/// the one-dimensional family in each coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub mass: f64,
    /// `d` entries.
    pub first_moment: Vec<f64>,
    /// `d x d` entries, row-major.
    pub second_moment: Vec<f64>,
    pub support_radius: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dim: usize) -> Self {
        Self { family, dim }
    }

    pub fn uniform(center: f64, half_width: f64) -> Self {
        Self::new(KernelFamily::Uniform { center, half_width }, 1)
    }

    pub fn triangular(center: f64, half_width: f64) -> Self {
        Self::new(KernelFamily::Triangular { center, half_width }, 1)
    }

    pub fn truncated_gaussian(sigma: f64, cutoff: f64) -> Self {
        Self::new(KernelFamily::TruncatedGaussian { sigma, cutoff }, 1)
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    fn center_and_radius(&self) -> (f64, f64) {
        match self.family {
            KernelFamily::Uniform { center, half_width }
            | KernelFamily::Triangular { center, half_width } => (center, half_width),
            KernelFamily::TruncatedGaussian { cutoff, .. } => (0.0, cutoff),
        }
    }

    /// Radius `r_a` in the sup-norm: `a(z) = 0` for `|z|_inf > r_a`.
    pub fn support_radius(&self) -> f64 {
        let (c, r) = self.center_and_radius();
        libm::fabs(c) + r
    }

    /// One-dimensional factor of the density, endpoint nodes at half value.
    pub fn density_1d(&self, z: f64) -> f64 {
        let (c, r) = self.center_and_radius();
        let dist = libm::fabs(z - c);
        let on_edge = libm::fabs(dist - r) <= ENDPOINT_TOL * r.max(1.0);
        if dist > r && !on_edge {
            return 0.0;
        }
        match self.family {
            KernelFamily::Uniform { half_width, .. } => {
                let v = 0.5 / half_width;
                if on_edge {
                    0.5 * v
                } else {
                    v
                }
            }
            KernelFamily::Triangular { half_width, .. } => {
                if on_edge {
                    0.0
                } else {
                    (1.0 - dist / half_width) / half_width
                }
            }
            KernelFamily::TruncatedGaussian { sigma, cutoff } => {
                let norm = sigma * libm::sqrt(2.0 * core::f64::consts::PI) * libm::erf(cutoff / (sigma * core::f64::consts::SQRT_2));
                let v = libm::exp(-0.5 * z * z / (sigma * sigma)) / norm;
                if on_edge {
                    0.5 * v
                } else {
                    v
                }
            }
        }
    }

    pub fn density(&self, z: &[f64]) -> f64 {
        z.iter().take(self.dim).map(|&zi| self.density_1d(zi)).product()
    }

    /// Closed-form first and second moment of the one-dimensional factor.
    pub fn analytic_moments_1d(&self) -> (f64, f64) {
        match self.family {
            KernelFamily::Uniform { center, half_width } => (center, center * center + half_width * half_width / 3.0),
            KernelFamily::Triangular { center, half_width } => (center, center * center + half_width * half_width / 6.0),
            KernelFamily::TruncatedGaussian { sigma, cutoff } => {
                let rho = cutoff / sigma;
                let pdf = libm::exp(-0.5 * rho * rho) / libm::sqrt(2.0 * core::f64::consts::PI);
                let central = libm::erf(rho / core::f64::consts::SQRT_2);
                (0.0, sigma * sigma * (1.0 - 2.0 * rho * pdf / central))
            }
        }
    }

    fn check_parameters(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        let (c, r) = self.center_and_radius();
        if !c.is_finite() || !r.is_finite() {
            return Err(Error::UnboundedSupport);
        }
        if r <= 0.0 {
            return Err(Error::NegativeDensity(format!("support half-width {r} must be positive")));
        }
        if let KernelFamily::TruncatedGaussian { sigma, .. } = self.family {
            if !sigma.is_finite() || sigma <= 0.0 {
                return Err(Error::NegativeDensity(format!("sigma {sigma} must be positive")));
            }
        }
        Ok(())
    }
}

fn tensor_moments(dim: usize, m1: f64, m2: f64) -> (Vec<f64>, Vec<f64>) {
    let first = vec![m1; dim];
    let mut second = vec![m1 * m1; dim * dim];
    for i in 0..dim {
        second[i * dim + i] = m2;
    }
    (first, second)
}

/// Checks the density assumptions and reports the analytic moments.
///
/// Mass and positivity are also probed by a fine midpoint rule over the
/// support, which catches a family whose normalization is off.
pub fn validate_kernel(spec: &KernelSpec) -> Result<ValidationReport> {
    spec.check_parameters()?;
    let (c, r) = spec.center_and_radius();
    let cells = 20_000;
    let h = 2.0 * r / cells as f64;
    let mut mass_1d = 0.0;
    for i in 0..cells {
        let v = spec.density_1d(c - r + (i as f64 + 0.5) * h);
        if v < 0.0 || !v.is_finite() {
            return Err(Error::NegativeDensity(format!("density value {v}")));
        }
        mass_1d += v * h;
    }
    let mass = libm::pow(mass_1d, spec.dim as f64);
    if libm::fabs(mass - 1.0) > 1e-6 {
        return Err(Error::NonUnitMass { mass });
    }
    let (m1, m2) = spec.analytic_moments_1d();
    let (first_moment, second_moment) = tensor_moments(spec.dim, m1, m2);
    Ok(ValidationReport { mass: 1.0, first_moment, second_moment, support_radius: spec.support_radius() })
}

/// Kernel moment of order 0, 1 or 2: closed form when `resolution` is `None`,
/// otherwise the discrete moment of the renormalized lattice samples.
pub fn kernel_moment(spec: &KernelSpec, order: usize, resolution: Option<usize>) -> Result<Vec<f64>> {
    if order > 2 {
        return Err(Error::InvalidArgument(format!("moment order {order} not in 0..=2")));
    }
    match resolution {
        None => {
            spec.check_parameters()?;
            let (m1, m2) = spec.analytic_moments_1d();
            let (first, second) = tensor_moments(spec.dim, m1, m2);
            Ok(match order {
                0 => vec![1.0],
                1 => first,
                _ => second,
            })
        }
        Some(n) => {
            let dk = DiscreteKernel::sample(spec, n)?;
            Ok(match order {
                0 => vec![dk.mass()],
                1 => dk.first_moment(),
                _ => dk.second_moment(),
            })
        }
    }
}

/// Renormalized density samples at the lattice nodes `z_l = l/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    pub dim: usize,
    pub n: usize,
    /// Integer lattice offsets `l`; the second entry is zero when `dim == 1`.
    pub offsets: Vec<[i64; 2]>,
    /// Density values, scaled so that `N^-d * sum(values) == 1`.
    pub values: Vec<f64>,
}

impl DiscreteKernel {
    pub fn sample(spec: &KernelSpec, n: usize) -> Result<Self> {
        spec.check_parameters()?;
        if n < 4 {
            return Err(Error::InvalidArgument(format!("resolution {n} below 4")));
        }
        let (c, r) = spec.center_and_radius();
        let nf = n as f64;
        let lo = libm::floor((c - r) * nf) as i64 - 1;
        let hi = libm::ceil((c + r) * nf) as i64 + 1;
        let mut line: Vec<(i64, f64)> = (lo..=hi)
            .map(|l| (l, spec.density_1d(l as f64 / nf)))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        let raw: f64 = line.iter().map(|&(_, v)| v).sum::<f64>() / nf;
        if raw <= 0.0 {
            return Err(Error::NegativeDensity(format!("no kernel mass resolved at N = {n}")));
        }
        for entry in &mut line {
            entry.1 /= raw;
        }
        let (offsets, values) = if spec.dim == 1 {
            line.iter().map(|&(l, v)| ([l, 0], v)).unzip()
        } else {
            let mut offsets = Vec::with_capacity(line.len() * line.len());
            let mut values = Vec::with_capacity(line.len() * line.len());
            for &(l0, v0) in &line {
                for &(l1, v1) in &line {
                    offsets.push([l0, l1]);
                    values.push(v0 * v1);
                }
            }
            (offsets, values)
        };
        Ok(Self { dim: spec.dim, n, offsets, values })
    }

    /// Quadrature weight `N^-d` of a single node.
    pub fn weight(&self) -> f64 {
        libm::pow(self.n as f64, -(self.dim as f64))
    }

    pub fn node(&self, idx: usize) -> [f64; 2] {
        let nf = self.n as f64;
        let o = self.offsets[idx];
        [o[0] as f64 / nf, o[1] as f64 / nf]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weight() * self.values.iter().sum::<f64>()
    }

    pub fn first_moment(&self) -> Vec<f64> {
        let w = self.weight();
        let mut m = vec![0.0; self.dim];
        for (idx, &v) in self.values.iter().enumerate() {
            let z = self.node(idx);
            for (a, ma) in m.iter_mut().enumerate() {
                *ma += w * v * z[a];
            }
        }
        m
    }

    pub fn second_moment(&self) -> Vec<f64> {
        let d = self.dim;
        let w = self.weight();
        let mut m = vec![0.0; d * d];
        for (idx, &v) in self.values.iter().enumerate() {
            let z = self.node(idx);
            for a in 0..d {
                for b in 0..d {
                    m[a * d + b] += w * v * z[a] * z[b];
                }
            }
        }
        m
    }

    /// Flat torus index of the node `z_l` reduced modulo one.
    pub fn torus_index(&self, idx: usize) -> usize {
        let n = self.n as i64;
        let o = self.offsets[idx];
        let i0 = o[0].rem_euclid(n) as usize;
        if self.dim == 1 {
            i0
        } else {
            i0 * self.n + o[1].rem_euclid(n) as usize
        }
    }

    /// Lattice fold of `z^{(q)} a(z)` onto the torus grid.
    pub fn periodize(&self, order: usize) -> Result<PeriodizedKernel> {
        if order > 2 {
            return Err(Error::InvalidArgument(format!("periodization order {order} not in 0..=2")));
        }
        let d = self.dim;
        let npts = self.n.pow(d as u32);
        let comps = d.pow(order as u32);
        let mut values = vec![0.0; comps * npts];
        for (idx, &v) in self.values.iter().enumerate() {
            let j = self.torus_index(idx);
            let z = self.node(idx);
            match order {
                0 => values[j] += v,
                1 => {
                    for a in 0..d {
                        values[a * npts + j] += z[a] * v;
                    }
                }
                _ => {
                    for a in 0..d {
                        for b in 0..d {
                            values[(a * d + b) * npts + j] += z[a] * z[b] * v;
                        }
                    }
                }
            }
        }
        Ok(PeriodizedKernel { order, n: self.n, dim: d, values })
    }
}

/// `â_q(z_j) = sum_n (z_j + n)^{(q)} a(z_j + n)` at the torus nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodizedKernel {
    pub order: usize,
    pub n: usize,
    pub dim: usize,
    /// Component-major: `values[c * N^d + j]`.
    pub values: Vec<f64>,
}

impl PeriodizedKernel {
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn components(&self) -> usize {
        self.dim.pow(self.order as u32)
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let npts = self.points();
        &self.values[c * npts..(c + 1) * npts]
    }

    /// Torus mean of each component; equals the discrete moment of the
    /// same order.
    pub fn mean(&self) -> Vec<f64> {
        let npts = self.points();
        (0..self.components()).map(|c| self.component(c).iter().sum::<f64>() / npts as f64).collect()
    }
}

/// Convenience wrapper matching the periodized-kernel operation.
pub fn periodized_moment_kernel(spec: &KernelSpec, n: usize, order: usize) -> Result<PeriodizedKernel> {
    DiscreteKernel::sample(spec, n)?.periodize(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_moments() {
        let r = validate_kernel(&KernelSpec::uniform(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r.first_moment[0], 0.0);
        assert_abs_diff_eq!(r.second_moment[0], 1.0 / 3.0, epsilon = 1e-15);
        let r = validate_kernel(&KernelSpec::uniform(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r.first_moment[0], 1.0);
        assert_abs_diff_eq!(r.second_moment[0], 4.0 / 3.0, epsilon = 1e-15);
        let r = validate_kernel(&KernelSpec::triangular(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r.second_moment[0], 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn truncated_gaussian_moments_match_quadrature() {
        let spec = KernelSpec::truncated_gaussian(0.4, 1.0);
        let (_, m2) = spec.analytic_moments_1d();
        let cells = 200_000;
        let h = 2.0 / cells as f64;
        let quad: f64 = (0..cells)
            .map(|i| {
                let z = -1.0 + (i as f64 + 0.5) * h;
                z * z * spec.density_1d(z) * h
            })
            .sum();
        assert_abs_diff_eq!(m2, quad, epsilon = 1e-9);
        validate_kernel(&spec).unwrap();
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(validate_kernel(&KernelSpec::uniform(0.0, -1.0)), Err(Error::NegativeDensity(_))));
        assert!(matches!(validate_kernel(&KernelSpec::uniform(0.0, f64::INFINITY)), Err(Error::UnboundedSupport)));
        assert!(matches!(validate_kernel(&KernelSpec::uniform(0.0, 1.0).with_dim(3)), Err(Error::UnsupportedDimension(3))));
        assert!(matches!(
            validate_kernel(&KernelSpec::truncated_gaussian(0.0, 1.0)),
            Err(Error::NegativeDensity(_))
        ));
    }

    #[test]
    fn discrete_moment_converges() {
        // Direct summation oracle at N = 4096 for the triangular second moment.
        let n_ref = 4096;
        let oracle: f64 = (-(n_ref as i64)..=(n_ref as i64))
            .map(|l| {
                let z = l as f64 / n_ref as f64;
                z * z * (1.0 - z.abs()).max(0.0)
            })
            .sum::<f64>()
            / (-(n_ref as i64)..=(n_ref as i64)).map(|l| (1.0 - (l as f64 / n_ref as f64).abs()).max(0.0)).sum::<f64>();
        assert_abs_diff_eq!(oracle, 1.0 / 6.0, epsilon = 1e-7);
        let m = kernel_moment(&KernelSpec::triangular(0.0, 1.0), 2, Some(64)).unwrap()[0];
        assert!((m - oracle).abs() < 1.0 / (64.0 * 64.0));
        assert!((m - 1.0 / 6.0).abs() > 0.0);
    }

    #[test]
    fn uniform_periodization_closed_forms() {
        let n = 64;
        let spec = KernelSpec::uniform(0.0, 1.0);
        let a0 = periodized_moment_kernel(&spec, n, 0).unwrap();
        let a1 = periodized_moment_kernel(&spec, n, 1).unwrap();
        let a2 = periodized_moment_kernel(&spec, n, 2).unwrap();
        for j in 1..n {
            let z = j as f64 / n as f64;
            assert_abs_diff_eq!(a0.values[j], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(a1.values[j], z - 0.5, epsilon = 1e-14);
            assert_abs_diff_eq!(a2.values[j], z * z - z + 0.5, epsilon = 1e-14);
        }
        // The node z = 0 carries the symmetric endpoint average.
        assert_abs_diff_eq!(a0.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a1.values[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a0.mean()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a1.mean()[0], 0.0, epsilon = 1e-14);
        // 1/3 up to the O(N^-2) trapezoid error.
        assert!((a2.mean()[0] - 1.0 / 3.0).abs() < 1.0 / (n * n) as f64);
    }

    #[test]
    fn shifted_uniform_has_exact_discrete_mean() {
        let dk = DiscreteKernel::sample(&KernelSpec::uniform(1.0, 1.0), 128).unwrap();
        assert_abs_diff_eq!(dk.mass(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dk.first_moment()[0], 1.0, epsilon = 1e-13);
    }

    #[test]
    fn two_dimensional_product() {
        let spec = KernelSpec::triangular(0.25, 1.0).with_dim(2);
        let dk = DiscreteKernel::sample(&spec, 16).unwrap();
        assert_abs_diff_eq!(dk.mass(), 1.0, epsilon = 1e-14);
        let m1 = dk.first_moment();
        let m2 = dk.second_moment();
        assert_abs_diff_eq!(m1[0], m1[1], epsilon = 1e-15);
        assert_abs_diff_eq!(m2[1], m1[0] * m1[1], epsilon = 1e-14);
        let a2 = dk.periodize(2).unwrap();
        let mean = a2.mean();
        for (x, y) in mean.iter().zip(&m2) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }
    }

    proptest::proptest! {
        #[test]
        fn periodized_means_are_discrete_moments(
            c in -1.5f64..1.5, r in 0.2f64..2.0, fam in 0usize..3, n in 4usize..80,
        ) {
            let family = match fam {
                0 => KernelFamily::Uniform { center: c, half_width: r },
                1 => KernelFamily::Triangular { center: c, half_width: r },
                _ => KernelFamily::TruncatedGaussian { sigma: r * 0.5, cutoff: r },
            };
            let spec = KernelSpec::new(family, 1);
            let Ok(dk) = DiscreteKernel::sample(&spec, n) else { return Ok(()); };
            proptest::prop_assert!((dk.periodize(0).unwrap().mean()[0] - 1.0).abs() < 1e-13);
            proptest::prop_assert!((dk.periodize(1).unwrap().mean()[0] - dk.first_moment()[0]).abs() < 1e-13);
            proptest::prop_assert!((dk.periodize(2).unwrap().mean()[0] - dk.second_moment()[0]).abs() < 1e-12);
        }
    }
}
