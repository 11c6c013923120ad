//! Queueing maps, multi-type TASEP and stationary-horizon sampling.

pub mod error;
pub mod horizon;
pub mod queue;
pub mod rng;
pub mod scaling;
pub mod seq;
pub mod stats;
pub mod tasep;
pub mod verify;

pub use error::{Error, Result};
pub use queue::{DensityVector, QueueResult};
pub use seq::{BinarySeq, Label, MultiClassSeq, PathFn, Reflect, Window, HOLE};
