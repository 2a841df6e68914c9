//! Drift decomposition, moving frame and the effective matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::correctors::CorrectorSet;
use crate::trig::TrigSeries;
use crate::{Error, Result};

const MEAN_TOL: f64 = 1e-12;

/// `(mean, samples - mean)` over one uniformly sampled period.
pub fn split_mean(samples: &[f64]) -> (f64, Vec<f64>) {
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    (mean, samples.iter().map(|v| v - mean).collect())
}

/// `B(s) = int_0^s beta`, spectral, with `B(0) = 0`.
pub fn periodic_antiderivative(beta: &[f64]) -> Result<TrigSeries> {
    let series = TrigSeries::from_samples(beta);
    let scale = beta.iter().fold(1.0f64, |m, v| m.max(libm::fabs(*v)));
    if libm::fabs(series.mean()) > MEAN_TOL * scale {
        return Err(Error::NonZeroMean { mean: series.mean() });
    }
    Ok(series.antiderivative())
}

/// Which moving frame to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameVariant {
    /// `sum_j eps^{-1+j(2-alpha)} b_j t + eps^{alpha-1} B_0(t/eps^alpha)`.
    Theorem,
    /// Exact solution of the frame equations, including the `O(eps)`
    /// oscillating parts `eps^{-1+j(2-alpha)+alpha} B_j` of levels `j >= 1`.
    Full,
}

#[derive(Debug, Clone)]
pub struct DriftDecomposition {
    pub alpha: f64,
    pub k: usize,
    pub dim: usize,
    /// `b_0 .. b_k`.
    pub means: Vec<Vec<f64>>,
    /// `beta_j(s_m)`, indexed `[level][component][sample]`.
    pub oscillations: Vec<Vec<Vec<f64>>>,
    /// `B_j`, indexed `[level][component]`.
    pub antiderivatives: Vec<Vec<TrigSeries>>,
    oscillation_series: Vec<Vec<TrigSeries>>,
    pub samples: usize,
}

impl DriftDecomposition {
    pub fn from_correctors(set: &CorrectorSet) -> Result<Self> {
        let d = set.dim();
        let levels = set.schedule.levels();
        let mut means = Vec::with_capacity(levels);
        let mut oscillations = Vec::with_capacity(levels);
        let mut antiderivatives = Vec::with_capacity(levels);
        let mut oscillation_series = Vec::with_capacity(levels);
        for level in 1..=levels {
            let mut b = Vec::with_capacity(d);
            let mut osc = Vec::with_capacity(d);
            let mut anti = Vec::with_capacity(d);
            let mut ser = Vec::with_capacity(d);
            for c in 0..d {
                let (mean, beta) = split_mean(&set.forcing_samples(level, c));
                anti.push(periodic_antiderivative(&beta)?);
                ser.push(TrigSeries::from_samples(&beta));
                b.push(mean);
                osc.push(beta);
            }
            means.push(b);
            oscillations.push(osc);
            antiderivatives.push(anti);
            oscillation_series.push(ser);
        }
        Ok(Self {
            alpha: set.schedule.alpha,
            k: set.schedule.k,
            dim: d,
            means,
            oscillations,
            antiderivatives,
            oscillation_series,
            samples: set.samples.len(),
        })
    }

    /// Exponent `-1 + j(2 - alpha)` of level `j`.
    pub fn exponent(&self, level: usize) -> f64 {
        -1.0 + level as f64 * (2.0 - self.alpha)
    }

    fn check_eps(eps: f64) -> Result<()> {
        if !(eps > 0.0) {
            return Err(Error::EpsilonNonPositive(eps));
        }
        Ok(())
    }

    /// Moving frame `b^eps(t)`.
    pub fn frame(&self, eps: f64, t: f64, variant: FrameVariant) -> Result<Vec<f64>> {
        Self::check_eps(eps)?;
        let s = t / libm::pow(eps, self.alpha);
        let mut out = self.linear_part(eps, t)?;
        for (level, anti) in self.antiderivatives.iter().enumerate() {
            let scale = match (variant, level) {
                (_, 0) => libm::pow(eps, self.alpha - 1.0),
                (FrameVariant::Full, _) => libm::pow(eps, self.exponent(level) + self.alpha),
                (FrameVariant::Theorem, _) => continue,
            };
            for (o, series) in out.iter_mut().zip(anti) {
                *o += scale * series.eval(s);
            }
        }
        Ok(out)
    }

    /// `sum_j eps^{-1+j(2-alpha)} b_j t`.
    pub fn linear_part(&self, eps: f64, t: f64) -> Result<Vec<f64>> {
        Self::check_eps(eps)?;
        let mut out = vec![0.0; self.dim];
        for (level, b) in self.means.iter().enumerate() {
            let scale = libm::pow(eps, self.exponent(level)) * t;
            for (o, bj) in out.iter_mut().zip(b) {
                *o += scale * bj;
            }
        }
        Ok(out)
    }

    /// `d b^eps / dt` for the given variant.
    pub fn velocity(&self, eps: f64, t: f64, variant: FrameVariant) -> Result<Vec<f64>> {
        Self::check_eps(eps)?;
        let s = t / libm::pow(eps, self.alpha);
        let mut out = vec![0.0; self.dim];
        for (level, b) in self.means.iter().enumerate() {
            let scale = libm::pow(eps, self.exponent(level));
            let oscillating = level == 0 || variant == FrameVariant::Full;
            for c in 0..self.dim {
                let beta = if oscillating { self.oscillation_series[level][c].eval(s) } else { 0.0 };
                out[c] += scale * (b[c] + beta);
            }
        }
        Ok(out)
    }

    /// `max_s |B_0(s)|` over a fine scan, per component.
    pub fn periodic_amplitude(&self) -> Vec<f64> {
        self.antiderivatives[0].iter().map(|b| b.max_abs_on(16 * self.samples)).collect()
    }
}

/// `theta(s)` samples with their period average and ellipticity bounds.
#[derive(Debug, Clone)]
pub struct EffectiveTensors {
    pub dim: usize,
    pub theta_samples: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
    pub theta_sym: Vec<f64>,
    /// Eigenvalue bounds of the symmetrized samples.
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Eigenvalues of `theta_sym`, ascending.
    pub theta_sym_eigenvalues: Vec<f64>,
    theta_series: Vec<TrigSeries>,
    sym_antiderivative: Vec<TrigSeries>,
}

fn symmetrize(m: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            out[a * d + b] = 0.5 * (m[a * d + b] + m[b * d + a]);
        }
    }
    out
}

/// Ascending eigenvalues of a symmetric `d x d` matrix, `d <= 2`.
pub fn symmetric_eigenvalues(m: &[f64], d: usize) -> Vec<f64> {
    match d {
        1 => vec![m[0]],
        2 => {
            let (a, b, c) = (m[0], 0.5 * (m[1] + m[2]), m[3]);
            let mid = 0.5 * (a + c);
            let rad = libm::hypot(0.5 * (a - c), b);
            vec![mid - rad, mid + rad]
        }
        _ => panic!("symmetric_eigenvalues supports d <= 2"),
    }
}

pub fn average_theta(theta_samples: &[Vec<f64>], dim: usize) -> Result<EffectiveTensors> {
    let m = theta_samples.len();
    let dd = dim * dim;
    let mut theta = vec![0.0; dd];
    for smp in theta_samples {
        for (t, v) in theta.iter_mut().zip(smp) {
            *t += v / m as f64;
        }
    }
    let mut lambda_min = f64::INFINITY;
    let mut lambda_max = f64::NEG_INFINITY;
    for smp in theta_samples {
        let eig = symmetric_eigenvalues(&symmetrize(smp, dim), dim);
        lambda_min = lambda_min.min(eig[0]);
        lambda_max = lambda_max.max(eig[dim - 1]);
    }
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eig: lambda_min });
    }
    let theta_sym = symmetrize(&theta, dim);
    let theta_sym_eigenvalues = symmetric_eigenvalues(&theta_sym, dim);
    if !(theta_sym_eigenvalues[0] > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eig: theta_sym_eigenvalues[0] });
    }
    let component = |c: usize| -> Vec<f64> { theta_samples.iter().map(|s| s[c]).collect() };
    let theta_series = (0..dd).map(|c| TrigSeries::from_samples(&component(c))).collect();
    let sym_antiderivative = (0..dd)
        .map(|c| {
            let (a, b) = (c / dim, c % dim);
            let sym: Vec<f64> = theta_samples.iter().map(|s| 0.5 * (s[a * dim + b] + s[b * dim + a])).collect();
            TrigSeries::from_samples(&split_mean(&sym).1).antiderivative()
        })
        .collect();
    Ok(EffectiveTensors {
        dim,
        theta_samples: theta_samples.to_vec(),
        theta,
        theta_sym,
        lambda_min,
        lambda_max,
        theta_sym_eigenvalues,
        theta_series,
        sym_antiderivative,
    })
}

impl EffectiveTensors {
    pub fn from_correctors(set: &CorrectorSet) -> Result<Self> {
        average_theta(&set.theta_samples(), set.dim())
    }

    /// Trigonometric interpolant of `theta` at `s`.
    pub fn theta_at(&self, s: f64) -> Vec<f64> {
        self.theta_series.iter().map(|t| t.eval(s)).collect()
    }

    /// `int_0^t theta_sym(t'/eps^alpha) dt' = Theta_sym t + eps^alpha Phi(t/eps^alpha)`.
    pub fn cumulative_sym(&self, eps: f64, alpha: f64, t: f64) -> Vec<f64> {
        let scale = libm::pow(eps, alpha);
        self.theta_sym
            .iter()
            .zip(&self.sym_antiderivative)
            .map(|(th, phi)| th * t + scale * phi.eval(t / scale))
            .collect()
    }

    /// `Theta_sym t`.
    pub fn averaged_cumulative(&self, t: f64) -> Vec<f64> {
        self.theta_sym.iter().map(|v| v * t).collect()
    }
}
