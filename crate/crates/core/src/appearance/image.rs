//! Grayscale images, integral images and rectangle queries.

use super::AppearanceError;

/// A grayscale image with real-valued, range-agnostic intensities stored
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, AppearanceError> {
        if width == 0 || height == 0 {
            return Err(AppearanceError::EmptyImage);
        }
        if pixels.len() != width * height {
            return Err(AppearanceError::PixelCountMismatch {
                width,
                height,
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    /// 8-bit grayscale input, one byte per pixel.
    pub fn from_luma8(width: usize, height: usize, data: &[u8]) -> Result<Self, AppearanceError> {
        Self::new(width, height, data.iter().map(|&p| p as f64).collect())
    }

    /// Packed RGB8 input converted with luma = 0.299 R + 0.587 G + 0.114 B.
    pub fn from_rgb8(width: usize, height: usize, data: &[u8]) -> Result<Self, AppearanceError> {
        if data.len() != width * height * 3 {
            return Err(AppearanceError::PixelCountMismatch {
                width,
                height,
                expected: width * height * 3,
                got: data.len(),
            });
        }
        let pixels = data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect();
        Self::new(width, height, pixels)
    }

    /// Packed RGBA8 input; the alpha channel is ignored.
    pub fn from_rgba8(width: usize, height: usize, data: &[u8]) -> Result<Self, AppearanceError> {
        if data.len() != width * height * 4 {
            return Err(AppearanceError::PixelCountMismatch {
                width,
                height,
                expected: width * height * 4,
                got: data.len(),
            });
        }
        let pixels = data
            .chunks_exact(4)
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// Axis-aligned pixel rectangle: origin `(x, y)`, extent `w` x `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct PixelRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl PixelRect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }
}

/// Cumulative-sum table of size `(w+1) x (h+1)`; entry `(x, y)` holds the
/// sum of all pixels with column `< x` and row `< y`, so any rectangle sum
/// is four lookups.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<f64>,
}

impl IntegralImage {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width, img.height);
        let stride = w + 1;
        let mut table = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row_sum = 0.0;
            for x in 0..w {
                row_sum += img.pixels[y * w + x];
                table[(y + 1) * stride + (x + 1)] = table[y * stride + (x + 1)] + row_sum;
            }
        }
        Self { width: w, height: h, table }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Raw table entry; `(x, y)` ranges over `0..=width` x `0..=height`.
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.table[y * (self.width + 1) + x]
    }

    /// Sum of the pixels covered by `rect`, in four lookups.
    pub fn rect_sum(&self, rect: PixelRect) -> Result<f64, AppearanceError> {
        if rect.x + rect.w > self.width || rect.y + rect.h > self.height {
            return Err(AppearanceError::RectOutOfBounds {
                rect,
                width: self.width,
                height: self.height,
            });
        }
        let (x0, y0) = (rect.x, rect.y);
        let (x1, y1) = (rect.x + rect.w, rect.y + rect.h);
        Ok(self.entry(x1, y1) - self.entry(x0, y1) - self.entry(x1, y0) + self.entry(x0, y0))
    }

    /// Mean intensity over `rect`. Zero-area rectangles are rejected.
    pub fn rect_mean(&self, rect: PixelRect) -> Result<f64, AppearanceError> {
        if rect.is_empty() {
            return Err(AppearanceError::DegenerateRect);
        }
        Ok(self.rect_sum(rect)? / rect.area() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_image(rng: &mut SplitMix64, w: usize, h: usize) -> GrayImage {
        let pixels = (0..w * h).map(|_| rng.range_f64(0.0, 255.0)).collect();
        GrayImage::new(w, h, pixels).unwrap()
    }

    /// Nested-loop rectangle sum, the oracle for the integral-image path.
    fn brute_rect_sum(img: &GrayImage, rect: PixelRect) -> f64 {
        let mut sum = 0.0;
        for y in rect.y..rect.y + rect.h {
            for x in rect.x..rect.x + rect.w {
                sum += img.get(x, y);
            }
        }
        sum
    }

    #[test]
    fn corner_entry_is_total_sum() {
        let img = GrayImage::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let ii = IntegralImage::new(&img);
        assert_eq!(ii.entry(2, 2), 10.0);
        assert_eq!(ii.entry(0, 2), 0.0);
        assert_eq!(ii.entry(2, 0), 0.0);
    }

    #[test]
    fn zero_image_gives_zero_table() {
        let img = GrayImage::new(4, 3, vec![0.0; 12]).unwrap();
        let ii = IntegralImage::new(&img);
        for y in 0..=3 {
            for x in 0..=4 {
                assert_eq!(ii.entry(x, y), 0.0);
            }
        }
    }

    #[test]
    fn all_rect_sums_match_brute_force_on_random_7x5() {
        let mut rng = SplitMix64::new(0x7a5);
        let img = random_image(&mut rng, 7, 5);
        let ii = IntegralImage::new(&img);
        for y in 0..5 {
            for x in 0..7 {
                for h in 1..=5 - y {
                    for w in 1..=7 - x {
                        let rect = PixelRect::new(x, y, w, h);
                        let got = ii.rect_sum(rect).unwrap();
                        let want = brute_rect_sum(&img, rect);
                        assert!(
                            (got - want).abs() <= 1e-9 * want.abs().max(1.0),
                            "rect {rect:?}: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn exhaustive_small_images_match_brute_force() {
        let mut rng = SplitMix64::new(99);
        for (w, h) in [(1, 1), (2, 3), (8, 8), (5, 8)] {
            let img = random_image(&mut rng, w, h);
            let ii = IntegralImage::new(&img);
            for y in 0..h {
                for x in 0..w {
                    for hh in 1..=h - y {
                        for ww in 1..=w - x {
                            let rect = PixelRect::new(x, y, ww, hh);
                            let got = ii.rect_sum(rect).unwrap();
                            let want = brute_rect_sum(&img, rect);
                            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mean_of_uniform_image_is_the_constant() {
        let img = GrayImage::new(6, 4, vec![5.0; 24]).unwrap();
        let ii = IntegralImage::new(&img);
        for rect in [PixelRect::new(0, 0, 6, 4), PixelRect::new(2, 1, 3, 2), PixelRect::new(5, 3, 1, 1)] {
            assert!((ii.rect_mean(rect).unwrap() - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_matches_arithmetic() {
        let img = GrayImage::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let ii = IntegralImage::new(&img);
        assert!((ii.rect_mean(PixelRect::new(0, 0, 2, 2)).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn mean_matches_brute_force_on_random_rects() {
        let mut rng = SplitMix64::new(31);
        let img = random_image(&mut rng, 13, 9);
        let ii = IntegralImage::new(&img);
        for _ in 0..200 {
            let x = rng.range_usize(0, 12);
            let y = rng.range_usize(0, 8);
            let w = rng.range_usize(1, 13 - x);
            let h = rng.range_usize(1, 9 - y);
            let rect = PixelRect::new(x, y, w, h);
            let want = brute_rect_sum(&img, rect) / rect.area() as f64;
            let got = ii.rect_mean(rect).unwrap();
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn degenerate_and_out_of_bounds_rects_error() {
        let img = GrayImage::new(3, 3, vec![1.0; 9]).unwrap();
        let ii = IntegralImage::new(&img);
        assert!(matches!(
            ii.rect_mean(PixelRect::new(1, 1, 0, 2)),
            Err(AppearanceError::DegenerateRect)
        ));
        assert!(matches!(
            ii.rect_sum(PixelRect::new(2, 2, 2, 1)),
            Err(AppearanceError::RectOutOfBounds { .. })
        ));
    }

    #[test]
    fn image_constructors_validate() {
        assert!(matches!(GrayImage::new(0, 3, vec![]), Err(AppearanceError::EmptyImage)));
        assert!(matches!(
            GrayImage::new(2, 2, vec![0.0; 3]),
            Err(AppearanceError::PixelCountMismatch { .. })
        ));
        let g = GrayImage::from_rgb8(1, 1, &[255, 0, 0]).unwrap();
        assert!((g.get(0, 0) - 0.299 * 255.0).abs() < 1e-12);
        let g = GrayImage::from_rgba8(1, 1, &[0, 255, 0, 9]).unwrap();
        assert!((g.get(0, 0) - 0.587 * 255.0).abs() < 1e-12);
    }
}
