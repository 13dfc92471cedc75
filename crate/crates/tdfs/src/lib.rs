//! Deterministic simulation and control synthesis for a two-level open
//! quantum system steered along a time-dependent decoherence-free subspace.
//!
//! The crate builds, for an engineered squeezed-vacuum reservoir with linear
//! ramps `r(t) = mu t + o`, `theta(t) = nu t`:
//!
//! * the time-dependent decoherence operator and its dissipator
//!   ([`reservoir`]),
//! * the gauge-fixed eigenframe of `L(t)` and the coherent control field
//!   that keeps the state locked inside the moving subspace ([`synthesis`]),
//! * a stiff-safe fixed-step integrator for the controlled Lindblad master
//!   equation with trajectory recording, steady-state detection and
//!   parameter sweeps ([`evolve`]),
//! * and a configuration-driven CLI that exports CSV datasets and runs the
//!   verification suite ([`cli`], [`config`]).
//!
//! All rates are in units of the spontaneous decay rate `gamma = 1`; times
//! are in units of `1/gamma`.

pub mod cli;
pub mod config;
pub mod evolve;
pub mod qcore;
pub mod reservoir;
pub mod synthesis;

pub use qcore::{BlochVector, DensityMatrix, Operator, PureState};
pub use reservoir::{ReservoirSample, SqueezeSchedule};
pub use synthesis::{ControlLaw, DfsFrame};
pub use evolve::{IntegratorConfig, Trajectory};
