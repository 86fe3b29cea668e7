//! Symbolic dynamics: strip symbols, external addresses, the partition of the
//! plane, and inverse branches.

mod address;
mod partition;

pub use address::{tail_threshold, AddressError, ExternalAddress, Generator, Side, StripSymbol};
pub use partition::{
    Margin, OrbitAddress, OrbitStatus, PartitionConfig, PartitionError, RayDirection,
};

pub(crate) use partition::newton_solve;
