//! Objective quality assessment for compressed point clouds.
//!
//! The crate is organized around an immutable [`PointCloud`] and an exact
//! [`NeighborIndex`]. On top of those sit content characterization, seven
//! full-reference quality metrics, texture transfer for stimulus
//! preparation, and the statistics used to benchmark metrics against
//! subjective scores.

pub mod characterization;
pub mod cloud;
pub mod color;
pub mod error;
pub mod hull;
pub mod index;
pub mod metrics;
pub mod normals;
pub mod numfmt;
pub mod ply;
pub mod stats;
pub mod texture;

pub use cloud::{Point3, PointCloud, Rgb8};
pub use error::{Error, Result};
pub use index::{Neighbor, NeighborIndex};
pub use metrics::{MetricConfig, MetricKind, MetricResult, Polarity};
