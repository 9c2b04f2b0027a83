//! Voxel super-resolution by multi-view depth map decomposition.
//!
//! A low-resolution voxel object is described by its six axis-aligned
//! orthographic depth maps. Each map is super-resolved by two small
//! convolutional networks, one predicting the high-resolution silhouette and
//! one predicting a bounded depth residual on top of the nearest-neighbour
//! up-sampled map. The predicted maps are then carved out of the up-sampled
//! object.

pub mod carving;
mod codec;
pub mod error;
pub mod metrics;
pub mod odm;
pub mod pipeline;
pub mod predictor;
pub mod shape;
pub mod voxel;

pub use error::{Error, Result};
pub use odm::{extract_all, extract_odm, Axis, Direction, Odm, OdmSet, ViewId};
pub use shape::{rasterize, ShapeSpec};
pub use voxel::VoxelGrid;
