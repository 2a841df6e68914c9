use alloc::vec;
use alloc::vec::Vec;

use crate::grid::TorusGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldShape {
    Scalar,
    Vector(usize),
    /// `d x d`, row-major components.
    Matrix(usize),
}

impl FieldShape {
    pub fn components(self) -> usize {
        match self {
            FieldShape::Scalar => 1,
            FieldShape::Vector(d) => d,
            FieldShape::Matrix(d) => d * d,
        }
    }
}

/// Grid function on the torus, component-major (`data[c * len + i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub grid: TorusGrid,
    pub shape: FieldShape,
    pub data: Vec<f64>,
    /// Index into the sample set this field belongs to.
    pub sample: Option<usize>,
}

impl CellField {
    pub fn zeros(grid: TorusGrid, shape: FieldShape) -> Self {
        Self { grid, shape, data: vec![0.0; grid.len() * shape.components()], sample: None }
    }

    pub fn scalar(grid: TorusGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        Self { grid, shape: FieldShape::Scalar, data: values, sample: None }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::scalar(grid, data)
    }

    pub fn with_sample(mut self, sample: usize) -> Self {
        self.sample = Some(sample);
        self
    }

    pub fn components(&self) -> usize {
        self.shape.components()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.components()).map(|c| self.grid.mean(self.component(c))).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
