//! Cross-modal guided tree filtering.
//!
//! A 4-connected grid graph over guide features defines pixel
//! dissimilarities; its minimum spanning tree turns them into tree distances
//! `D`, affinities `exp(-D)`, and a normalized affinity-weighted smoothing of
//! a prediction map. Both a brute-force reference and the linear-time
//! two-pass implementation are provided, plus the backward pass used by the
//! training loop.
//!
//! Graph and tree construction are single-owner per image; filtering reads
//! the tree immutably and may run per-channel work on separate threads.

mod filter;
mod graph;
mod mst;

pub use filter::{
    affinity, filter_backward, filter_brute, filter_linear, filter_linear_counted, guided_filter,
};
pub use graph::{build_grid_graph, GridEdge, GridGraph};
pub use mst::{build_mst, build_mst_rooted, SpanningTree};

/// Which feature map drives the affinities. Low-level camera features are
/// the default; the other variants exist for the ablation harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GuideSource {
    /// Embedded low-level camera feature (the default).
    CamLow,
    /// The raw camera image.
    CamImage,
    /// High-level camera encoder feature, upsampled to full resolution.
    CamHigh,
    /// Low-level LiDAR encoder feature.
    LidarLow,
}

impl GuideSource {
    pub fn as_str(self) -> &'static str {
        match self {
            GuideSource::CamLow => "cam-low",
            GuideSource::CamImage => "cam-image",
            GuideSource::CamHigh => "cam-high",
            GuideSource::LidarLow => "lidar-low",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cam-low" => Some(GuideSource::CamLow),
            "cam-image" => Some(GuideSource::CamImage),
            "cam-high" => Some(GuideSource::CamHigh),
            "lidar-low" => Some(GuideSource::LidarLow),
            _ => None,
        }
    }
}

impl std::fmt::Display for GuideSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
