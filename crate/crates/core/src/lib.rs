//! Numerical laboratory for stationary measures on homogeneous bundles over
//! flag varieties.
//!
//! The crate is organised bottom-up:
//!
//! * [`group`]: matrix groups, Iwasawa factors, irreducible `SL_2`
//!   representations and `sl_2`-triples.
//! * [`cocycle`]: the Iwasawa cocycle, the sign cocycle on the circle double
//!   cover, the `D^±`-valued fibre cocycle, morphism-type and conjugated
//!   cocycles, and the drift cross-ratio.
//! * [`boundary`]: random matrix products on the circle and projective line,
//!   stationary measures, limit vectors and forms, invariant cones.
//! * [`fiber`]: the space of unimodular lattices as reduced bases, with the
//!   diagonal action and orbit averages.
//! * [`walk`]: walks on the bundle, Lyapunov and large-deviation estimators,
//!   renewal sums and the equidistribution experiment.
//! * [`classifier`]: the case taxonomy for a flag configuration and an
//!   embedded copy of `SL_2`.
//! * [`catalog`]: canned configurations and step measures.

pub mod boundary;
pub mod catalog;
pub mod circle;
pub mod classifier;
pub mod cocycle;
pub mod error;
pub mod fiber;
pub mod group;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
