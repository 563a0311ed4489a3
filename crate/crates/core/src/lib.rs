//! Projection-based multi-modal LiDAR segmentation at desk scale.
//!
//! The crate covers the full pipeline: point-cloud projection into
//! perspective-view maps, cross-modal guided tree filtering over a minimum
//! spanning tree of camera features, dynamic cross pseudo supervision, a
//! small two-stream encoder/decoder network with hand-written backprop, a
//! synthetic camera+LiDAR scene generator, and segmentation metrics. Every
//! numeric mechanism is paired with an independent oracle (brute-force
//! filtering, reverse-delete MST, finite differences) in [`check`] and the
//! test suites.

pub mod check;
pub mod error;
pub mod evalkit;
pub mod labels;
pub mod losses;
pub mod micronet;
pub mod mmtf;
pub mod ppm;
pub mod projection;
pub mod rng;
pub mod selftest;
pub mod synthdata;
pub mod tensor;
pub mod treefilter;

pub use error::{Error, Result};
pub use labels::{LabelMap, IGNORE, UNPROJECTED};
pub use rng::Rng;
pub use tensor::{softmax_channels, AnyTensor, DType, Scalar, Tensor};
