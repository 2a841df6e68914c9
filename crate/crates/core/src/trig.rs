//! Trigonometric interpolation of 1-periodic sample sets.
//!
//! `M` (even) samples at `s_n = n/M` determine the interpolant
//! `a0 + sum_{m<M/2} (a_m cos 2 pi m s + b_m sin 2 pi m s) + c cos(pi M s)`.
//! Differentiation and antidifferentiation drop the Nyquist term, so both
//! are exact for trigonometric polynomials of degree below `M/2`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub constant: f64,
    /// `cos[m-1]` multiplies `cos(2 pi m s)`.
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub nyquist: f64,
    /// Number of samples the series was built from.
    pub samples: usize,
}

impl TrigSeries {
    pub fn from_samples(values: &[f64]) -> Self {
        let m = values.len();
        assert!(m >= 2 && m % 2 == 0, "trigonometric interpolation needs an even sample count");
        let half = m / 2;
        let mf = m as f64;
        let constant = values.iter().sum::<f64>() / mf;
        let mut cos = vec![0.0; half - 1];
        let mut sin = vec![0.0; half - 1];
        for k in 1..half {
            let (mut a, mut b) = (0.0, 0.0);
            for (n, &v) in values.iter().enumerate() {
                let phase = TAU * ((k * n) % m) as f64 / mf;
                a += v * libm::cos(phase);
                b += v * libm::sin(phase);
            }
            cos[k - 1] = 2.0 * a / mf;
            sin[k - 1] = 2.0 * b / mf;
        }
        let nyquist = values.iter().enumerate().map(|(n, &v)| if n % 2 == 0 { v } else { -v }).sum::<f64>() / mf;
        Self { constant, cos, sin, nyquist, samples: m }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let mut acc = self.constant;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let phase = TAU * (k + 1) as f64 * s;
            acc += a * libm::cos(phase) + b * libm::sin(phase);
        }
        acc + self.nyquist * libm::cos(PI * self.samples as f64 * s)
    }

    pub fn mean(&self) -> f64 {
        self.constant
    }

    pub fn derivative(&self) -> Self {
        let cos = self.sin.iter().enumerate().map(|(k, b)| TAU * (k + 1) as f64 * b).collect();
        let sin = self.cos.iter().enumerate().map(|(k, a)| -TAU * (k + 1) as f64 * a).collect();
        Self { constant: 0.0, cos, sin, nyquist: 0.0, samples: self.samples }
    }

    /// Antiderivative of the oscillating part, normalized to vanish at `s = 0`.
    /// The mean of `self` is ignored; callers check it.
    pub fn antiderivative(&self) -> Self {
        let cos: Vec<f64> = self.sin.iter().enumerate().map(|(k, b)| -b / (TAU * (k + 1) as f64)).collect();
        let sin = self.cos.iter().enumerate().map(|(k, a)| a / (TAU * (k + 1) as f64)).collect();
        let constant = -cos.iter().sum::<f64>();
        Self { constant, cos, sin, nyquist: 0.0, samples: self.samples }
    }

    pub fn sample(&self, m: usize) -> Vec<f64> {
        (0..m).map(|n| self.eval(n as f64 / m as f64)).collect()
    }

    pub fn max_abs_on(&self, m: usize) -> f64 {
        self.sample(m).iter().fold(0.0, |acc, v| acc.max(libm::fabs(*v)))
    }
}

/// Weights `w_n(s)` with `f(s) = sum_n w_n f(s_n)` for the interpolant of `m`
/// samples.
pub fn interpolation_weights(m: usize, s: f64) -> Vec<f64> {
    let mf = m as f64;
    let half = m / 2;
    (0..m)
        .map(|n| {
            let d = s - n as f64 / mf;
            let mut acc = 1.0;
            for k in 1..half {
                acc += 2.0 * libm::cos(TAU * k as f64 * d);
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            (acc + sign * libm::cos(PI * mf * s)) / mf
        })
        .collect()
}

/// Weights for the derivative of the interpolant at `s` (Nyquist dropped).
pub fn derivative_weights(m: usize, s: f64) -> Vec<f64> {
    let mf = m as f64;
    let half = m / 2;
    (0..m)
        .map(|n| {
            let d = s - n as f64 / mf;
            let mut acc = 0.0;
            for k in 1..half {
                let w = TAU * k as f64;
                acc -= 2.0 * w * libm::sin(w * d);
            }
            acc / mf
        })
        .collect()
}

/// Spectral differentiation matrix on `m` uniform samples of one period,
/// row-major.
pub fn differentiation_matrix(m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for row in 0..m {
        let w = derivative_weights(m, row as f64 / m as f64);
        out[row * m..(row + 1) * m].copy_from_slice(&w);
    }
    out
}
