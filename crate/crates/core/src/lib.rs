//! Numerical laboratory for the one-dimensional nonlocal aggregation-diffusion
//! equation
//!
//! ```text
//! u_t = u_xx - (u (K' * u))_x,    x in R, t > 0
//! ```
//!
//! truncated to a symmetric interval `[-L, L]`. The crate provides
//!
//! - [`grid`] and [`field`]: the uniform cell-centred mesh, cell-average fields
//!   and the quadratures on them (mass, `L^p` norms, first moment, parabolic
//!   rescaling);
//! - [`kernel`] and [`convolution`]: cell-integrated aggregation kernels and the
//!   zero-padded FFT convolution producing the drift velocity `K' * u`;
//! - [`solver`]: a finite-volume IMEX scheme (explicit upwind transport,
//!   backward-Euler diffusion) that conserves mass exactly and keeps densities
//!   nonnegative under a CFL bound, plus the elliptic solve `-v'' + v = u`;
//! - [`profiles`]: the heat kernel and the viscous-Burgers diffusion wave;
//! - [`diagnostics`]: decay-exponent fits, scaled profile distances and the
//!   first-moment concentration audit.

pub mod convolution;
pub mod diagnostics;
mod error;
pub mod field;
pub mod grid;
pub mod kernel;
pub mod profiles;
pub mod quadrature;
pub mod solver;
mod tridiag;

pub use convolution::{convolve, convolve_direct, Convolver};
pub use diagnostics::{
    concentration_audit, convergence_report, fit_decay_exponent, record, BaseBump,
    ConcentrationAudit, ConcentrationSpec, ConvergenceReport, DecayFit, DiagnosticsRecord,
    DistanceKind, NormTable, Recorder,
};
pub use error::{Error, Result};
pub use field::Field;
pub use grid::Grid;
pub use kernel::{sample_kernel, Kernel, KernelSpec};
pub use profiles::{burgers_constant, evaluate_heat, evaluate_wave, DiffusionWave, HeatProfile};
pub use solver::{
    advective_flux, choose_dt, run, run_with_telemetry, solve_elliptic, step, SolverConfig,
    StepReport, VelocityMode,
};
