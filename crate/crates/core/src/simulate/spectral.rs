//! Box Fourier tools: exact heat flows, phase shifts and derivatives.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;

use super::{BoxGrid, Snapshot};
use crate::{Error, Result};

/// Unnormalized discrete Fourier transform of a fixed length.
pub trait Transform {
    /// `X_k = sum_j x_j e^{-2πi jk/n}`.
    fn forward(&self, data: &mut [Complex64]);
    /// `x_j = sum_k X_k e^{2πi jk/n}`.
    fn inverse(&self, data: &mut [Complex64]);
}

/// Quadratic-cost DFT with a tabulated twiddle factor.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectDft;

impl DirectDft {
    fn run(data: &mut [Complex64], sign: f64) {
        let n = data.len();
        let twiddle: Vec<Complex64> =
            (0..n).map(|m| Complex64::from_polar(1.0, sign * TAU * m as f64 / n as f64)).collect();
        let input = data.to_vec();
        for (k, out) in data.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, x) in input.iter().enumerate() {
                acc += x * twiddle[(j * k) % n];
            }
            *out = acc;
        }
    }
}

impl Transform for DirectDft {
    fn forward(&self, data: &mut [Complex64]) {
        Self::run(data, -1.0);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        Self::run(data, 1.0);
    }
}

/// Physical wavenumber `κ = k/L` of FFT index `k`, and whether it is the Nyquist index.
pub fn box_wavenumber(k: usize, grid: BoxGrid) -> (f64, bool) {
    let n = grid.len();
    let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    (signed / grid.length as f64, k == n / 2)
}

fn forward_real(u: &[f64], tr: &dyn Transform) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    tr.forward(&mut data);
    data
}

fn inverse_real(mut data: Vec<Complex64>, tr: &dyn Transform) -> Vec<f64> {
    let n = data.len() as f64;
    tr.inverse(&mut data);
    data.iter().map(|z| z.re / n).collect()
}

fn check_len(u: &[f64], grid: BoxGrid) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::GridMismatch(format!("field of length {} on a box of {}", u.len(), grid.len())));
    }
    Ok(())
}

/// `u(x - c)` for the trigonometric interpolant of `u`; the Nyquist mode keeps the real part of its phase.
pub fn shift_field(u: &[f64], c: f64, grid: BoxGrid, tr: &dyn Transform) -> Result<Vec<f64>> {
    check_len(u, grid)?;
    let c = c.rem_euclid(grid.length as f64);
    let mut hat = forward_real(u, tr);
    for (k, z) in hat.iter_mut().enumerate() {
        let (kappa, nyquist) = box_wavenumber(k, grid);
        let phase = -TAU * kappa * c;
        *z *= if nyquist { Complex64::new(libm::cos(phase), 0.0) } else { Complex64::from_polar(1.0, phase) };
    }
    Ok(inverse_real(hat, tr))
}

/// Derivatives of orders `0..=orders` of `u(x - c)`; the Nyquist mode is dropped for orders above zero.
pub fn spectral_derivatives(
    u: &[f64],
    c: f64,
    orders: usize,
    grid: BoxGrid,
    tr: &dyn Transform,
) -> Result<Vec<Vec<f64>>> {
    check_len(u, grid)?;
    let c = c.rem_euclid(grid.length as f64);
    let hat = forward_real(u, tr);
    let mut out = Vec::with_capacity(orders + 1);
    for order in 0..=orders {
        let mut spec = hat.clone();
        for (k, z) in spec.iter_mut().enumerate() {
            let (kappa, nyquist) = box_wavenumber(k, grid);
            let phase = -TAU * kappa * c;
            if nyquist {
                *z *= if order == 0 { libm::cos(phase) } else { 0.0 };
            } else {
                let ik = Complex64::new(0.0, TAU * kappa);
                *z *= Complex64::from_polar(1.0, phase) * ik.powu(order as u32);
            }
        }
        out.push(inverse_real(spec, tr));
    }
    Ok(out)
}

/// Exact solution of `∂_t u = D'(t) ∂_xx u` with cumulative diffusivity `D`, at each checkpoint.
pub fn solve_heat_multiplier(
    u0: &[f64],
    cumulative: &dyn Fn(f64) -> f64,
    grid: BoxGrid,
    checkpoints: &[f64],
    tr: &dyn Transform,
) -> Result<Vec<Snapshot>> {
    check_len(u0, grid)?;
    let hat = forward_real(u0, tr);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut prev = 0.0f64;
    for &t in checkpoints {
        let d = cumulative(t);
        if !(d >= prev - 1e-14 * prev.max(1.0)) {
            return Err(Error::NotPsd { min_eig: d - prev });
        }
        prev = d;
        let mut spec = hat.clone();
        for (k, z) in spec.iter_mut().enumerate() {
            let (kappa, _) = box_wavenumber(k, grid);
            *z *= libm::exp(-TAU * TAU * kappa * kappa * d);
        }
        out.push(Snapshot { t, values: inverse_real(spec, tr) });
    }
    Ok(out)
}

/// `exp(-x^2)` on the box nodes.
pub fn gaussian(grid: BoxGrid) -> Vec<f64> {
    grid.nodes().iter().map(|x| libm::exp(-x * x)).collect()
}
