//! Numerical engine for the dynamics of the cosine family
//! E(z) = a e^z + b e^{-z}.
//!
//! The crate builds dynamic rays of escaping points by inverse-branch
//! iteration, computes symbolic itineraries against the partition through the
//! critical values, classifies escaping orbits into (address, potential)
//! pairs, and runs desk-scale box-counting experiments on the geometry of the
//! escaping set.

pub mod classify;
pub mod dimension;
pub mod map;
pub mod pgm;
pub mod rays;
pub mod render;
pub mod symbolic;
pub mod tower;

pub use map::{CosineMap, MapError};
pub use symbolic::{ExternalAddress, Generator, PartitionConfig, Side, StripSymbol};
pub use tower::PotentialTower;
