use alloc::format;

use crate::{Error, Result};

/// Uniform grid on the unit torus `T^d` with nodes `i/N` per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    pub dim: usize,
    pub n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if n < 4 {
            return Err(Error::InvalidArgument(format!("grid resolution {n} below 4")));
        }
        Ok(Self { dim, n })
    }

    /// Default resolution: 64 in one dimension, 32 per dimension in two.
    pub fn with_default_resolution(dim: usize) -> Result<Self> {
        Self::new(dim, if dim == 1 { 64 } else { 32 })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn multi_index(&self, i: usize) -> [usize; 2] {
        if self.dim == 1 {
            [i, 0]
        } else {
            [i / self.n, i % self.n]
        }
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        let m = self.multi_index(i);
        let nf = self.n as f64;
        [m[0] as f64 / nf, m[1] as f64 / nf]
    }

    /// Flat index of `xi_i - z_j` where both are torus nodes.
    pub fn difference(&self, i: usize, j: usize) -> usize {
        let n = self.n;
        let a = self.multi_index(i);
        let b = self.multi_index(j);
        if self.dim == 1 {
            (a[0] + n - b[0]) % n
        } else {
            ((a[0] + n - b[0]) % n) * n + (a[1] + n - b[1]) % n
        }
    }

    pub fn mean(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.weight()
    }

    /// Discrete `L^2(T^d)` inner product.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.weight()
    }
}

/// `M` uniform samples `s_m = m/M` of the unit time period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SSampleSet {
    pub m: usize,
}

impl SSampleSet {
    pub fn new(m: usize) -> Result<Self> {
        if m < 8 || m % 2 != 0 {
            return Err(Error::InvalidArgument(format!("sample count {m} must be even and at least 8")));
        }
        Ok(Self { m })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn time(&self, idx: usize) -> f64 {
        idx as f64 / self.m as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(|i| self.time(i))
    }
}
