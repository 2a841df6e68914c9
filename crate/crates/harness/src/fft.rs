//! `rustfft` backend for the box transforms.

use std::sync::Mutex;

use homog_core::simulate::Transform;
use num_complex::Complex64;
use rustfft::FftPlanner;

pub struct RustFft {
    planner: Mutex<FftPlanner<f64>>,
}

impl RustFft {
    pub fn new() -> Self {
        Self { planner: Mutex::new(FftPlanner::new()) }
    }
}

impl Default for RustFft {
    fn default() -> Self {
        Self::new()
    }
}

impl Transform for RustFft {
    fn forward(&self, data: &mut [Complex64]) {
        let plan = self.planner.lock().expect("planner lock").plan_fft_forward(data.len());
        plan.process(data);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        let plan = self.planner.lock().expect("planner lock").plan_fft_inverse(data.len());
        plan.process(data);
    }
}
