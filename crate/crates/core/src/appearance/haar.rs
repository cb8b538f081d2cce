//! Face regions, the sampling grid, window placement and the six Haar-like
//! feature layouts.

use serde::{Deserialize, Serialize};

use super::image::{IntegralImage, PixelRect};
use super::{round_half_up, AppearanceError, GRID_AXIS, MIN_REGION_SIDE};

/// Axis-aligned face bounding box inside an image, in absolute pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceRegion {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl FaceRegion {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Result<Self, AppearanceError> {
        if w < MIN_REGION_SIDE || h < MIN_REGION_SIDE {
            return Err(AppearanceError::RegionSideTooSmall { w, h, min: MIN_REGION_SIDE });
        }
        Ok(Self { x, y, w, h })
    }

    /// Checks that the region lies fully inside a `width` x `height` image.
    pub fn check_within(&self, width: usize, height: usize) -> Result<(), AppearanceError> {
        if self.x + self.w > width || self.y + self.h > height {
            return Err(AppearanceError::RegionOutsideImage {
                x: self.x,
                y: self.y,
                w: self.w,
                h: self.h,
                width,
                height,
            });
        }
        Ok(())
    }
}

/// The six Haar-like feature layouts. Each partitions its window into
/// disjoint "white" and "black" rectangles covering the whole window; the
/// feature value is mean(white) - mean(black).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaarKind {
    /// Top half white, bottom half black.
    EdgeHorizontal,
    /// Left half white, right half black.
    EdgeVertical,
    /// Three horizontal bands, middle band black.
    LineHorizontal,
    /// Three vertical bands, middle band black.
    LineVertical,
    /// 2x2 checkerboard, main-diagonal cells white.
    Diagonal,
    /// Centered inner rectangle at one third of each side black,
    /// surround white.
    CenterSurround,
}

impl HaarKind {
    pub const ALL: [HaarKind; 6] = [
        HaarKind::EdgeHorizontal,
        HaarKind::EdgeVertical,
        HaarKind::LineHorizontal,
        HaarKind::LineVertical,
        HaarKind::Diagonal,
        HaarKind::CenterSurround,
    ];

    pub fn id(self) -> u8 {
        match self {
            HaarKind::EdgeHorizontal => 0,
            HaarKind::EdgeVertical => 1,
            HaarKind::LineHorizontal => 2,
            HaarKind::LineVertical => 3,
            HaarKind::Diagonal => 4,
            HaarKind::CenterSurround => 5,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            HaarKind::EdgeHorizontal => "edge-horizontal",
            HaarKind::EdgeVertical => "edge-vertical",
            HaarKind::LineHorizontal => "line-horizontal",
            HaarKind::LineVertical => "line-vertical",
            HaarKind::Diagonal => "diagonal",
            HaarKind::CenterSurround => "center-surround",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Smallest effective window side on which the layout is non-degenerate:
    /// 2 px for the two-way splits, 3 px for the three-way splits.
    fn min_side(self) -> usize {
        match self {
            HaarKind::EdgeHorizontal | HaarKind::EdgeVertical | HaarKind::Diagonal => 2,
            HaarKind::LineHorizontal | HaarKind::LineVertical | HaarKind::CenterSurround => 3,
        }
    }
}

/// The 81 sampling points of the 9x9 grid, in row-major order, relative to
/// the face region origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingGrid {
    points: Vec<(usize, usize)>,
}

impl SamplingGrid {
    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Uniformly sampled 9x9 grid: point `(kx, ky)` sits at
/// `(round(kx * step_frac * w), round(ky * step_frac * h))` for
/// `kx, ky = 1..=9`, row-major. Every point must fall strictly inside the
/// region, otherwise the region is too small for the requested step.
pub fn sample_grid(region: &FaceRegion, step_frac: f64) -> Result<SamplingGrid, AppearanceError> {
    if !(step_frac > 0.0 && step_frac.is_finite()) {
        return Err(AppearanceError::InvalidConfig(format!(
            "step fraction {step_frac} must be positive and finite"
        )));
    }
    let axis = |dim: usize| -> Result<Vec<usize>, AppearanceError> {
        let mut coords = Vec::with_capacity(GRID_AXIS);
        for k in 1..=GRID_AXIS {
            let c = round_half_up(k as f64 * step_frac * dim as f64);
            if c < 1 || c as usize > dim - 1 {
                return Err(AppearanceError::RegionTooSmall { w: region.w, h: region.h, step_frac });
            }
            coords.push(c as usize);
        }
        Ok(coords)
    };
    let xs = axis(region.w)?;
    let ys = axis(region.h)?;
    let mut points = Vec::with_capacity(GRID_AXIS * GRID_AXIS);
    for &y in &ys {
        for &x in &xs {
            points.push((x, y));
        }
    }
    Ok(SamplingGrid { points })
}

/// A sampling window: nominal square centered at a grid point, then
/// intersected with the face region. `rect` is the effective (post-crop)
/// rectangle in absolute image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    /// Center, relative to the face region origin.
    pub center: (usize, usize),
    /// Side of the nominal (pre-crop) square.
    pub nominal_side: usize,
    /// Effective rectangle, absolute image coordinates.
    pub rect: PixelRect,
}

/// Centers a square of side `round(scale_frac * min(w, h))` at grid point
/// `p` and crops it to the face region.
pub fn window_at(
    p: (usize, usize),
    scale_frac: f64,
    region: &FaceRegion,
) -> Result<WindowSpec, AppearanceError> {
    if !(scale_frac > 0.0 && scale_frac <= 1.0) {
        return Err(AppearanceError::InvalidScale(scale_frac));
    }
    let (px, py) = p;
    if px >= region.w || py >= region.h {
        return Err(AppearanceError::PointOutsideRegion { px, py, w: region.w, h: region.h });
    }
    let side = round_half_up(scale_frac * region.w.min(region.h) as f64).max(1) as usize;
    let clip = |center: usize, dim: usize| -> (usize, usize) {
        let lo = center as i64 - (side / 2) as i64;
        let hi = lo + side as i64;
        let lo = lo.max(0) as usize;
        let hi = (hi.min(dim as i64)) as usize;
        (lo, hi - lo)
    };
    let (x0, w) = clip(px, region.w);
    let (y0, h) = clip(py, region.h);
    debug_assert!(w > 0 && h > 0);
    Ok(WindowSpec {
        center: p,
        nominal_side: side,
        rect: PixelRect::new(region.x + x0, region.y + y0, w, h),
    })
}

/// Evaluates one Haar-like feature on a window: the difference between the
/// mean intensity of the white and black regions, with region boundaries at
/// the proportional split points of the effective rectangle.
pub fn haar_value(
    ii: &IntegralImage,
    win: &WindowSpec,
    kind: HaarKind,
) -> Result<f64, AppearanceError> {
    let r = win.rect;
    if r.w.min(r.h) < kind.min_side() {
        return Err(AppearanceError::DegenerateWindow { kind, w: r.w, h: r.h });
    }

    // Split offsets, rounded half-up; adjacent regions share the split
    // index, exclusive on one side, so the partition is exact.
    let half = |d: usize| round_half_up(d as f64 / 2.0) as usize;
    let third = |d: usize| round_half_up(d as f64 / 3.0) as usize;
    let two_thirds = |d: usize| round_half_up(2.0 * d as f64 / 3.0) as usize;

    let mean =
        |rects: &[PixelRect]| -> Result<f64, AppearanceError> {
            let mut sum = 0.0;
            let mut area = 0usize;
            for rect in rects {
                sum += ii.rect_sum(*rect)?;
                area += rect.area();
            }
            debug_assert!(area > 0);
            Ok(sum / area as f64)
        };

    let (white, black): (Vec<PixelRect>, Vec<PixelRect>) = match kind {
        HaarKind::EdgeHorizontal => {
            let ys = half(r.h);
            (
                vec![PixelRect::new(r.x, r.y, r.w, ys)],
                vec![PixelRect::new(r.x, r.y + ys, r.w, r.h - ys)],
            )
        }
        HaarKind::EdgeVertical => {
            let xs = half(r.w);
            (
                vec![PixelRect::new(r.x, r.y, xs, r.h)],
                vec![PixelRect::new(r.x + xs, r.y, r.w - xs, r.h)],
            )
        }
        HaarKind::LineHorizontal => {
            let (y1, y2) = (third(r.h), two_thirds(r.h));
            (
                vec![
                    PixelRect::new(r.x, r.y, r.w, y1),
                    PixelRect::new(r.x, r.y + y2, r.w, r.h - y2),
                ],
                vec![PixelRect::new(r.x, r.y + y1, r.w, y2 - y1)],
            )
        }
        HaarKind::LineVertical => {
            let (x1, x2) = (third(r.w), two_thirds(r.w));
            (
                vec![
                    PixelRect::new(r.x, r.y, x1, r.h),
                    PixelRect::new(r.x + x2, r.y, r.w - x2, r.h),
                ],
                vec![PixelRect::new(r.x + x1, r.y, x2 - x1, r.h)],
            )
        }
        HaarKind::Diagonal => {
            let (xs, ys) = (half(r.w), half(r.h));
            (
                vec![
                    PixelRect::new(r.x, r.y, xs, ys),
                    PixelRect::new(r.x + xs, r.y + ys, r.w - xs, r.h - ys),
                ],
                vec![
                    PixelRect::new(r.x + xs, r.y, r.w - xs, ys),
                    PixelRect::new(r.x, r.y + ys, xs, r.h - ys),
                ],
            )
        }
        HaarKind::CenterSurround => {
            let (x1, x2) = (third(r.w), two_thirds(r.w));
            let (y1, y2) = (third(r.h), two_thirds(r.h));
            let inner = PixelRect::new(r.x + x1, r.y + y1, x2 - x1, y2 - y1);
            // Surround = window minus inner; computed by subtraction below.
            let white_sum = ii.rect_sum(r)? - ii.rect_sum(inner)?;
            let white_area = r.area() - inner.area();
            debug_assert!(white_area > 0 && !inner.is_empty());
            return Ok(white_sum / white_area as f64 - mean(&[inner])?);
        }
    };

    Ok(mean(&white)? - mean(&black)?)
}
