//! Exact sampling from finite signed mixtures of Normal or Gamma densities.

pub mod bench;
pub mod component;
pub mod error;
pub mod interval;
pub mod invcdf;
pub mod io;
pub mod lp;
pub mod mixture;
pub mod modelgen;
pub mod pair;
pub mod pairing;
pub mod rng;
pub mod stats;
pub mod validate;
