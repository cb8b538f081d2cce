//! Per-sequence feature extraction: frames in, one time series per
//! (Haar kind, scale) channel out.

use serde::{Deserialize, Serialize};

use super::haar::{haar_value, sample_grid, window_at, FaceRegion, HaarKind};
use super::image::{GrayImage, IntegralImage};
use super::{AppearanceError, FEATURE_DIM};
use crate::parallel;

/// What to extract: which Haar kinds, which window scales, and the grid
/// step, all as fractions of the face region size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub kinds: Vec<HaarKind>,
    pub scales: Vec<f64>,
    pub step_frac: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            kinds: HaarKind::ALL.to_vec(),
            scales: vec![0.30, 0.35, 0.40, 0.50, 0.60],
            step_frac: 0.10,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), AppearanceError> {
        if self.kinds.is_empty() {
            return Err(AppearanceError::InvalidConfig("no Haar kinds selected".into()));
        }
        let mut seen = [false; 6];
        for k in &self.kinds {
            let id = k.id() as usize;
            if seen[id] {
                return Err(AppearanceError::InvalidConfig(format!("duplicate kind {}", k.name())));
            }
            seen[id] = true;
        }
        if self.scales.is_empty() {
            return Err(AppearanceError::InvalidConfig("no scales selected".into()));
        }
        for &s in &self.scales {
            if !(s > 0.0 && s <= 1.0) {
                return Err(AppearanceError::InvalidScale(s));
            }
        }
        // Nine grid steps must fit strictly inside the region on both axes.
        if !(self.step_frac > 0.0 && self.step_frac < 1.0 / 9.0) {
            return Err(AppearanceError::InvalidConfig(format!(
                "step fraction {} outside (0, 1/9)",
                self.step_frac
            )));
        }
        Ok(())
    }

    /// Number of feature channels this config produces.
    pub fn channel_count(&self) -> usize {
        self.kinds.len() * self.scales.len()
    }
}

/// The time series of one feature channel: for each of `len` frames, one
/// vector of [`FEATURE_DIM`] values (one per grid point).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureChannelSeries {
    pub kind: HaarKind,
    pub scale_index: u8,
    pub scale_frac: f64,
    len: usize,
    values: Vec<f64>,
}

impl FeatureChannelSeries {
    pub fn new(
        kind: HaarKind,
        scale_index: u8,
        scale_frac: f64,
        len: usize,
        values: Vec<f64>,
    ) -> Result<Self, AppearanceError> {
        if len == 0 || values.len() != len * FEATURE_DIM {
            return Err(AppearanceError::InvalidConfig(format!(
                "channel series needs len*{FEATURE_DIM} values, got {} for len {len}",
                values.len()
            )));
        }
        Ok(Self { kind, scale_index, scale_frac, len, values })
    }

    /// Number of frames.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The feature vector of frame `t`.
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * FEATURE_DIM..(t + 1) * FEATURE_DIM]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Extraction result for one sequence.
#[derive(Debug, Clone)]
pub struct SequenceFeatures {
    /// Channels ordered by (kind, scale index), kinds in config order.
    pub channels: Vec<FeatureChannelSeries>,
    /// Windows too small to host a feature layout; their value was
    /// substituted with 0.
    pub degenerate_windows: u64,
}

/// Extracts every configured feature channel from a frame sequence. The
/// sampling grid is recomputed per frame from that frame's face region.
pub fn extract_sequence(
    frames: &[GrayImage],
    regions: &[FaceRegion],
    config: &ExtractionConfig,
) -> Result<SequenceFeatures, AppearanceError> {
    config.validate()?;
    if frames.is_empty() {
        return Err(AppearanceError::NoFrames);
    }
    if frames.len() != regions.len() {
        return Err(AppearanceError::FrameCountMismatch {
            frames: frames.len(),
            regions: regions.len(),
        });
    }

    let indices: Vec<usize> = (0..frames.len()).collect();
    let per_frame = parallel::map_collect(&indices, |&i| {
        extract_frame(&frames[i], &regions[i], config)
            .map_err(|e| AppearanceError::AtFrame { frame: i, source: Box::new(e) })
    });

    let channel_count = config.channel_count();
    let t = frames.len();
    let mut values = vec![vec![0.0f64; t * FEATURE_DIM]; channel_count];
    let mut degenerate = 0u64;
    for (i, frame_result) in per_frame.into_iter().enumerate() {
        let frame_out = frame_result?;
        degenerate += frame_out.degenerate;
        for (ch, chunk) in frame_out.values.chunks_exact(FEATURE_DIM).enumerate() {
            values[ch][i * FEATURE_DIM..(i + 1) * FEATURE_DIM].copy_from_slice(chunk);
        }
    }

    let mut channels = Vec::with_capacity(channel_count);
    let mut it = values.into_iter();
    for &kind in &config.kinds {
        for (j, &scale) in config.scales.iter().enumerate() {
            channels.push(FeatureChannelSeries::new(
                kind,
                j as u8,
                scale,
                t,
                it.next().expect("channel count matches layout"),
            )?);
        }
    }
    Ok(SequenceFeatures { channels, degenerate_windows: degenerate })
}

struct FrameFeatures {
    /// Channel-major: kinds in config order, scales inner, 81 values each.
    values: Vec<f64>,
    degenerate: u64,
}

fn extract_frame(
    frame: &GrayImage,
    region: &FaceRegion,
    config: &ExtractionConfig,
) -> Result<FrameFeatures, AppearanceError> {
    region.check_within(frame.width(), frame.height())?;
    let ii = IntegralImage::new(frame);
    let grid = sample_grid(region, config.step_frac)?;

    // Windows depend on (point, scale) only, shared across kinds.
    let mut windows = Vec::with_capacity(config.scales.len());
    for &scale in &config.scales {
        let per_scale: Result<Vec<_>, _> =
            grid.points().iter().map(|&p| window_at(p, scale, region)).collect();
        windows.push(per_scale?);
    }

    let mut values = Vec::with_capacity(config.channel_count() * FEATURE_DIM);
    let mut degenerate = 0u64;
    for &kind in &config.kinds {
        for per_scale in &windows {
            for win in per_scale {
                match haar_value(&ii, win, kind) {
                    Ok(v) => values.push(v),
                    Err(AppearanceError::DegenerateWindow { .. }) => {
                        values.push(0.0);
                        degenerate += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(FrameFeatures { values, degenerate })
}
