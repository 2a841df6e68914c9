//! Independent dense reference for one-dimensional cell quantities.
//!
//! Assembles `A(s)` by plain lattice sums over the unfolded kernel samples,
//! evaluates the coefficient directly, and solves the bordered systems with
//! a fully pivoted LU. Nothing here calls the production cell or corrector
//! code.

use homog_core::{CoefficientSpec, KernelSpec};
use nalgebra::{DMatrix, DVector};

use crate::HarnessError;

#[derive(Debug, Clone)]
pub struct OracleSample {
    pub s: f64,
    pub p: Vec<f64>,
    pub chi1: Vec<f64>,
    pub f1: f64,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub n: usize,
    pub samples: Vec<OracleSample>,
    pub theta_mean: f64,
    pub b0: f64,
}

/// `(z_l, a_l)` with `N^-1 sum a_l = 1`.
fn lattice(kernel: &KernelSpec, n: usize) -> Vec<(f64, f64)> {
    let reach = (kernel.support_radius() * n as f64).ceil() as i64 + 2;
    let mut nodes: Vec<(f64, f64)> = (-reach..=reach)
        .map(|l| {
            let z = l as f64 / n as f64;
            (z, kernel.density_1d(z))
        })
        .filter(|&(_, a)| a != 0.0)
        .collect();
    let mass: f64 = nodes.iter().map(|&(_, a)| a).sum::<f64>() / n as f64;
    for node in &mut nodes {
        node.1 /= mass;
    }
    nodes
}

fn bordered_solve(a: &DMatrix<f64>, rhs: &[f64], border: f64, last: f64) -> Result<Vec<f64>, HarnessError> {
    let n = a.nrows();
    let mut b = DMatrix::<f64>::zeros(n + 1, n + 1);
    b.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        b[(i, n)] = 1.0;
        b[(n, i)] = border;
    }
    let mut r = DVector::<f64>::zeros(n + 1);
    for (i, v) in rhs.iter().enumerate() {
        r[i] = *v;
    }
    r[n] = last;
    let sol = b
        .full_piv_lu()
        .solve(&r)
        .ok_or_else(|| HarnessError::Oracle("singular bordered system".into()))?;
    Ok(sol.iter().take(n).copied().collect())
}

pub fn dense_oracle(kernel: &KernelSpec, mu: &CoefficientSpec, n: usize, m: usize) -> Result<OracleResult, HarnessError> {
    if kernel.dim != 1 || n > 1024 {
        return Err(HarnessError::Oracle(format!("oracle handles d = 1 with N <= 1024, got d = {}, N = {n}", kernel.dim)));
    }
    let w = 1.0 / n as f64;
    let nodes = lattice(kernel, n);
    let xi = |i: usize| i as f64 * w;
    let wrap = |i: usize, z: f64| -> usize { (i as i64 - (z * n as f64).round() as i64).rem_euclid(n as i64) as usize };

    let mut samples = Vec::with_capacity(m);
    for k in 0..m {
        let s = k as f64 / m as f64;
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut f = vec![0.0; n];
        for i in 0..n {
            for &(z, al) in &nodes {
                let j = wrap(i, z);
                let rate = w * al * mu.eval(&[xi(i)], &[xi(j)], s);
                a[(i, j)] += rate;
                a[(i, i)] -= rate;
                f[i] += rate * z;
            }
        }
        let p = bordered_solve(&a.transpose(), &vec![0.0; n], w, 1.0)?;
        let f1: f64 = (0..n).map(|i| w * p[i] * f[i]).sum();
        let rhs: Vec<f64> = f.iter().map(|v| v - f1).collect();
        let chi1 = bordered_solve(&a, &rhs, w, 0.0)?;
        let chi_p: f64 = (0..n).map(|i| w * chi1[i] * p[i]).sum();
        let mut second = 0.0;
        for i in 0..n {
            for &(z, al) in &nodes {
                let j = wrap(i, z);
                second += w * p[i] * w * al * mu.eval(&[xi(i)], &[xi(j)], s) * (0.5 * z * z - z * chi1[j]);
            }
        }
        samples.push(OracleSample { s, p, chi1, f1, theta: chi_p * f1 + second });
    }
    let theta_mean = samples.iter().map(|x| x.theta).sum::<f64>() / m as f64;
    let b0 = samples.iter().map(|x| x.f1).sum::<f64>() / m as f64;
    Ok(OracleResult { n, samples, theta_mean, b0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_reference() {
        let kern = KernelSpec::triangular(0.0, 1.0);
        let r = dense_oracle(&kern, &CoefficientSpec::constant(1.0), 32, 4).unwrap();
        let m2: f64 = lattice(&kern, 32).iter().map(|&(z, a)| a * z * z).sum::<f64>() / 32.0;
        for smp in &r.samples {
            assert!(smp.p.iter().all(|v| (v - 1.0).abs() < 1e-12));
            assert!(smp.chi1.iter().all(|v| v.abs() < 1e-12));
        }
        assert!((r.theta_mean - 0.5 * m2).abs() < 1e-13);
    }

    #[test]
    fn arrival_modulated_density() {
        let r = dense_oracle(&KernelSpec::uniform(0.0, 1.0), &CoefficientSpec::arrival_modulated(0.5), 64, 1).unwrap();
        for (i, v) in r.samples[0].p.iter().enumerate() {
            let x = i as f64 / 64.0;
            assert!((v - (1.0 + 0.5 * (std::f64::consts::TAU * x).cos())).abs() < 1e-12);
        }
    }
}
