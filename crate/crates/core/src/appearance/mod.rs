//! Multi-scale Haar-like appearance features.
//!
//! A face region inside each frame is sampled on a fixed 9x9 grid; a square
//! window is centered at every grid point for each configured spatial scale,
//! cropped to the face region, and six Haar-like feature layouts are
//! evaluated on it through an integral image. Per frame this yields one
//! 81-dimensional vector per (feature kind, scale) channel; per sequence,
//! one time series per channel.

mod extract;
mod haar;
mod image;

pub use extract::{extract_sequence, ExtractionConfig, FeatureChannelSeries, SequenceFeatures};
pub use haar::{haar_value, sample_grid, window_at, FaceRegion, HaarKind, SamplingGrid, WindowSpec};
pub use image::{GrayImage, IntegralImage, PixelRect};

use thiserror::Error;

/// Points per grid axis; the grid is always `GRID_AXIS` x `GRID_AXIS`.
pub const GRID_AXIS: usize = 9;
/// Dimension of one per-frame feature vector (one value per grid point).
pub const FEATURE_DIM: usize = GRID_AXIS * GRID_AXIS;
/// Smallest face region side for which the sampling grid is constructible.
pub const MIN_REGION_SIDE: usize = 10;

#[derive(Debug, Error)]
pub enum AppearanceError {
    #[error("image must be at least 1x1")]
    EmptyImage,
    #[error("image {width}x{height} needs {expected} pixels, got {got}")]
    PixelCountMismatch { width: usize, height: usize, expected: usize, got: usize },
    #[error("rectangle {rect:?} exceeds {width}x{height} image bounds")]
    RectOutOfBounds { rect: PixelRect, width: usize, height: usize },
    #[error("rectangle has zero area")]
    DegenerateRect,
    #[error("face region sides must be at least {min} px, got {w}x{h}")]
    RegionSideTooSmall { w: usize, h: usize, min: usize },
    #[error("face region ({x},{y}) {w}x{h} does not fit in {width}x{height} image")]
    RegionOutsideImage { x: usize, y: usize, w: usize, h: usize, width: usize, height: usize },
    #[error("region {w}x{h} too small for a 9x9 grid with step fraction {step_frac}")]
    RegionTooSmall { w: usize, h: usize, step_frac: f64 },
    #[error("scale fraction {0} outside (0, 1]")]
    InvalidScale(f64),
    #[error("grid point ({px},{py}) lies outside the {w}x{h} face region")]
    PointOutsideRegion { px: usize, py: usize, w: usize, h: usize },
    #[error("{kind:?} window of effective size {w}x{h} cannot host non-empty regions")]
    DegenerateWindow { kind: HaarKind, w: usize, h: usize },
    #[error("{frames} frames but {regions} face regions")]
    FrameCountMismatch { frames: usize, regions: usize },
    #[error("sequence has no frames")]
    NoFrames,
    #[error("invalid extraction config: {0}")]
    InvalidConfig(String),
    #[error("frame {frame}: {source}")]
    AtFrame { frame: usize, source: Box<AppearanceError> },
}

/// Rounds half-up to the nearest integer (0.5 goes toward +inf).
pub(crate) fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}
