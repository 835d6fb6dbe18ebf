//! Simulator and analytic toolkit for the N-stars network evolution model.
//!
//! The model grows a directed multigraph of star-shaped interactions: at each
//! step either a new vertex joins an existing team (preferentially or
//! uniformly) or an old team is activated again. The crate provides
//!
//! * [`simulator`] — the stochastic evolution process itself,
//! * [`analytic`] — the exact limit joint distribution of (central weight,
//!   peripheral weight), its marginals, conditional moments and the constant
//!   of the quadratic fluctuation-scaling (Taylor) law,
//! * [`stats`] — empirical reductions of a simulated graph and the log-log
//!   moment fit,
//! * [`params`] / [`gammakit`] — parameter derivation and the Gamma-function
//!   primitives everything else is built on.

pub mod analytic;
pub mod gammakit;
pub mod params;
pub mod simulator;
pub mod stats;
