//! Phase-separation simulation of MMC hydrogels with the simplified
//! time-dependent Ginzburg–Landau equation
//!
//! ```text
//! φ_t = M₀ G'(φ) |∇φ|² + M₀ G(φ) Δφ - 2 M₀ k_B T K Δ²φ
//! ```
//!
//! on a periodic rectangle, advanced by L²-stable semi-implicit finite
//! difference schemes with an optional energy-driven adaptive step.
//!
//! * [`grid`]: periodic grid, stencils, discrete L² norms
//! * [`physics`]: parameters, reticular free energy, total energy
//! * [`linsolve`]: matrix-free CG / CGNR and Jacobian-vector products
//! * [`schemes`]: one step of the linear or nonlinear scheme
//! * [`stepper`]: constant and adaptive time-step policies
//! * [`sim`]: initial data, the time loop, error comparison, benchmarks
//! * [`io`]: energy logs and snapshots on disk
//! * [`config`] and [`cli`]: text configuration and command front end

// `!(x > 0.0)` is the NaN-rejecting form of every positivity check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod io;
pub mod linsolve;
pub mod physics;
pub mod schemes;
pub mod sim;
pub mod stepper;

pub use error::{Error, Result};
pub use grid::{Field2D, Grid2D, VectorField2D};
pub use physics::{AdmissibleBand, SimParams};
pub use schemes::{SchemeKind, StepOptions};
pub use sim::{RunConfig, RunOutput};
pub use stepper::{AdaptiveControl, StepControl};
