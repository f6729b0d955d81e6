//! Simulation and diagnostics for second-order Edgeworth expansions and
//! Berry-Esseen characteristics of normalized sums of weakly dependent
//! stationary processes.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`processes`] generates reproducible paths and replicate sums of
//!   Bernoulli-shift models (iid, linear filters, GARCH, iterated maps,
//!   the doubling map, and a compact-spectrum smoothed example),
//! * [`cumulants`] estimates the finite-n scale and skewness inputs
//!   (by Monte Carlo, closed form, or brute-force series),
//! * [`edgeworth`], [`charfn`], [`laws`], and [`metrics`] evaluate the
//!   expansion, the tail-integral characteristics, the comparison laws,
//!   and the distances between them,
//! * [`highdim`] and [`dependence`] cover projected high-dimensional sums
//!   and coupling-based dependence diagnostics.
//!
//! All numeric code is generic over a [`Real`] scalar (`f32` or `f64`);
//! the `*64` aliases below pin the default precision. Everything is
//! deterministic given a seed: replicate `j` of any experiment is a pure
//! function of `(seed, stream_id, j)` regardless of thread count.

pub mod charfn;
pub mod cumulants;
pub mod dependence;
pub mod edgeworth;
pub mod error;
pub mod highdim;
pub mod laws;
pub mod metrics;
pub mod processes;
pub mod quad;
pub mod real;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use real::{c, Real};

/// Default-precision aliases for the main data-carrying types.
pub type Path64 = processes::Path<f64>;
pub type SampleSet64 = processes::SampleSet<f64>;
pub type Edgeworth64 = edgeworth::EdgeworthExpansion<f64>;
pub type DistReport64 = metrics::DistReport<f64>;

