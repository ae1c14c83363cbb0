//! Toolkit for evaluated conditional-mutual-information generalization bounds.
//!
//! The crate is organized around a simple pipeline:
//!
//! 1. [`simulate`] draws supersamples from finite data distributions, runs toy
//!    learners on the selected halves, and records loss tables together with
//!    exactly computed population losses.
//! 2. [`estimators`] turns those loss tables into information quantities:
//!    samplewise evaluated-CMI estimates from plug-in mutual information,
//!    exact full-table conditional KL by enumeration, and pointwise
//!    information densities.
//! 3. [`bounds`] maps estimated (or analytic) information quantities to
//!    generalization bounds: square-root, linear, interpolation, binary-KL
//!    inversions, their high-probability variants, and complexity-based
//!    instantiations via the Natarajan dimension.
//! 4. [`verify`] checks the concentration inequalities behind the bounds by
//!    exact enumeration or Monte Carlo, and measures empirical coverage of
//!    the high-probability bounds.
//! 5. [`analyze`] compares bounds against each other and against exactly
//!    known generalization gaps.
//!
//! The `ecmi` binary exposes all of this behind `simulate`, `bounds`,
//! `verify`, and `compare` subcommands.

pub mod analyze;
pub mod bounds;
pub mod core;
pub mod divergence;
pub mod estimators;
pub mod output;
pub mod simulate;
pub mod verify;
