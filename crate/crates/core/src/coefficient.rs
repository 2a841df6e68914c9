//! Rate modulation `mu(xi, eta, s)` as a finite trigonometric family.
//!
//! `mu = c0 + sum_k c_k * phi_k(xi) * psi_k(eta) * m_k(s)` where every factor
//! is `1`, `sin(2 pi l . x)` or `cos(2 pi l . x)` with integer harmonics. Such a
//! family is periodic in all arguments and analytic in `s`.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigKind {
    One,
    Sin,
    Cos,
}

impl TrigKind {
    fn apply(self, phase: f64) -> f64 {
        match self {
            TrigKind::One => 1.0,
            TrigKind::Sin => libm::sin(phase),
            TrigKind::Cos => libm::cos(phase),
        }
    }

    fn apply_derivative(self, phase: f64, rate: f64) -> f64 {
        match self {
            TrigKind::One => 0.0,
            TrigKind::Sin => rate * libm::cos(phase),
            TrigKind::Cos => -rate * libm::sin(phase),
        }
    }
}

/// Spatial factor `f(2 pi l . x)`; only the first `d` harmonic entries are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpatialFactor {
    pub kind: TrigKind,
    pub harmonic: [i32; 2],
}

impl SpatialFactor {
    pub const ONE: SpatialFactor = SpatialFactor { kind: TrigKind::One, harmonic: [0, 0] };

    pub fn sin(l: i32) -> Self {
        Self { kind: TrigKind::Sin, harmonic: [l, 0] }
    }

    pub fn cos(l: i32) -> Self {
        Self { kind: TrigKind::Cos, harmonic: [l, 0] }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.kind == TrigKind::One {
            return 1.0;
        }
        let phase: f64 = x.iter().zip(self.harmonic.iter()).map(|(xi, &l)| xi * l as f64).sum::<f64>() * TAU;
        self.kind.apply(phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeFactor {
    pub kind: TrigKind,
    pub harmonic: i32,
}

impl TimeFactor {
    pub const ONE: TimeFactor = TimeFactor { kind: TrigKind::One, harmonic: 0 };

    pub fn sin(l: i32) -> Self {
        Self { kind: TrigKind::Sin, harmonic: l }
    }

    pub fn cos(l: i32) -> Self {
        Self { kind: TrigKind::Cos, harmonic: l }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.kind.apply(TAU * self.harmonic as f64 * s)
    }

    pub fn eval_derivative(&self, s: f64) -> f64 {
        let rate = TAU * self.harmonic as f64;
        self.kind.apply_derivative(rate * s, rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientTerm {
    pub coeff: f64,
    /// Factor in the departure point `xi`.
    pub departure: SpatialFactor,
    /// Factor in the arrival point `eta`.
    pub arrival: SpatialFactor,
    pub time: TimeFactor,
}

impl CoefficientTerm {
    pub fn new(coeff: f64, departure: SpatialFactor, arrival: SpatialFactor, time: TimeFactor) -> Self {
        Self { coeff, departure, arrival, time }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec {
    pub constant: f64,
    pub terms: Vec<CoefficientTerm>,
}

impl CoefficientSpec {
    pub fn constant(c0: f64) -> Self {
        Self { constant: c0, terms: Vec::new() }
    }

    pub fn with_term(mut self, term: CoefficientTerm) -> Self {
        self.terms.push(term);
        self
    }

    /// `1 + beta cos(2 pi eta)`.
    pub fn arrival_modulated(beta: f64) -> Self {
        Self::constant(1.0).with_term(CoefficientTerm::new(beta, SpatialFactor::ONE, SpatialFactor::cos(1), TimeFactor::ONE))
    }

    /// `1 + beta cos(2 pi xi)`.
    pub fn departure_modulated(beta: f64) -> Self {
        Self::constant(1.0).with_term(CoefficientTerm::new(beta, SpatialFactor::cos(1), SpatialFactor::ONE, TimeFactor::ONE))
    }

    pub fn eval(&self, xi: &[f64], eta: &[f64], s: f64) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|t| t.coeff * t.departure.eval(xi) * t.arrival.eval(eta) * t.time.eval(s))
                .sum::<f64>()
    }

    /// Certified bounds `(mu_minus, mu_plus)`.
    pub fn bounds(&self) -> (f64, f64) {
        let spread: f64 = self.terms.iter().map(|t| libm::fabs(t.coeff)).sum();
        (self.constant - spread, self.constant + spread)
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|t| t.time.kind == TrigKind::One || t.time.harmonic == 0)
    }

    /// Largest time harmonic present.
    pub fn max_time_harmonic(&self) -> u32 {
        self.terms
            .iter()
            .filter(|t| t.time.kind != TrigKind::One)
            .map(|t| t.time.harmonic.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn check(&self) -> Result<()> {
        let (lo, _) = self.bounds();
        if !(lo > 0.0) {
            return Err(Error::CoercivityViolation { mu_minus: lo });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bounds_and_eval() {
        let mu = CoefficientSpec::constant(1.0)
            .with_term(CoefficientTerm::new(0.3, SpatialFactor::sin(1), SpatialFactor::ONE, TimeFactor::ONE))
            .with_term(CoefficientTerm::new(-0.2, SpatialFactor::ONE, SpatialFactor::cos(1), TimeFactor::cos(1)));
        assert_eq!(mu.bounds(), (0.5, 1.5));
        assert_abs_diff_eq!(mu.eval(&[0.25], &[0.0], 0.0), 1.3 - 0.2, epsilon = 1e-15);
        assert!(mu.check().is_ok());
        assert!(!mu.is_time_independent());
        assert_eq!(mu.max_time_harmonic(), 1);
    }

    #[test]
    fn coercivity_violation() {
        let mu = CoefficientSpec::constant(0.5)
            .with_term(CoefficientTerm::new(0.5, SpatialFactor::sin(1), SpatialFactor::ONE, TimeFactor::ONE));
        assert!(matches!(mu.check(), Err(Error::CoercivityViolation { .. })));
    }

    #[test]
    fn two_dimensional_harmonic() {
        let f = SpatialFactor { kind: TrigKind::Cos, harmonic: [1, 2] };
        assert_abs_diff_eq!(f.eval(&[0.1, 0.2]), libm::cos(TAU * 0.5), epsilon = 1e-15);
    }
}
