//! Construction and verification of degular partitions, pairs, and the
//! layered weighted graphs whose degular partitions need many clusters.
//!
//! The `parallel` feature (on by default) runs the heavy kernels on rayon;
//! without it every kernel runs sequentially with identical results.

pub mod construction;
pub mod error;
pub mod graph;
pub mod hosts;
pub mod io;
pub mod pair;
pub mod par;
pub mod partition;
pub mod rng;
pub mod rounding;
pub mod separators;
pub mod tournaments;

pub use error::{Error, Result};
pub use graph::{GraphKind, Partition, VertexSet, WeightedGraph};
