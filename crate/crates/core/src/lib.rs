//! Homogenization objects for non-autonomous nonlocal convolution-type
//! parabolic equations under non-diffusive time scaling.
//!
//! The crate is `no_std` (with `alloc`). It covers the torus cell problems
//! (invariant density, corrector chain, second-order corrector), the drift
//! decomposition and moving frame, the effective matrix, and direct
//! simulation of the ε-problem on a periodic box. Fourier transforms on the
//! box are abstracted behind [`simulate::Transform`] so that a host crate
//! can plug in an FFT; [`simulate::DirectDft`] is the built-in fallback.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ansatz;
pub mod cell;
pub mod coefficient;
pub mod correctors;
pub mod effective;
pub mod error;
pub mod field;
pub mod grid;
pub mod kernel;
pub mod simulate;
pub mod trig;

pub use cell::{assemble_generator, invariant_density, solve_on_mean_zero, CellOperator, MeanZeroSolver};
pub use coefficient::{CoefficientSpec, CoefficientTerm, SpatialFactor, TimeFactor, TrigKind};
pub use correctors::{build_corrector_chain, corrector_schedule, CorrectorSchedule, CorrectorSet};
pub use effective::{average_theta, DriftDecomposition, EffectiveTensors, FrameVariant};
pub use error::Error;
pub use field::{CellField, FieldShape};
pub use grid::{SSampleSet, TorusGrid};
pub use kernel::{DiscreteKernel, KernelFamily, KernelSpec, PeriodizedKernel};

pub type Result<T, E = Error> = core::result::Result<T, E>;
