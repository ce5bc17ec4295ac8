//! Implicit λ-schemes for the diffusion equation with an imaginary diffusion
//! coefficient, together with tools to find, track, and measure the localized
//! structures ("λ-solitons") they produce, and a Grünwald–Letnikov
//! fractional-time stepper for comparison.
//!
//! The pipeline is:
//!
//! 1. [`field`] builds a [`SimulationConfig`] and its initial field.
//! 2. [`scheme::simulate`] (or [`fractional::gl_simulate`]) produces a
//!    [`Trajectory`].
//! 3. [`metrics`] detects peaks of `|u|`, links them into tracks, and reports
//!    velocities, heights, collisions, and reflections.
//! 4. [`experiments`] runs the parameter studies on top of the above.

pub mod error;
pub mod experiments;
pub mod field;
pub mod fractional;
pub mod metrics;
pub mod scheme;
pub mod tridiag;

pub use error::{Error, Result};
pub use field::{
    apply_boundary, build_initial_field, GridSpec, InitialCondition, SimulationConfig, StateVector, C64,
};
pub use scheme::{amplification_factor, simulate, step, Trajectory};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lambda-scheme.md")]
    mod lambda_scheme {}
    #[doc = include_str!("../../../book/src/stability.md")]
    mod stability {}
    #[doc = include_str!("../../../book/src/fractional.md")]
    mod fractional {}
    #[doc = include_str!("../../../book/src/tracking.md")]
    mod tracking {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
