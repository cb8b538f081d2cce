//! Image-file frame loading for the evaluation harness.

use std::path::Path;

use facedyn_core::appearance::GrayImage;
use facedyn_core::eval::FrameSource;

/// Decodes frames with the `image` crate. Grayscale files are taken as-is;
/// anything else goes through RGB with luma = 0.299 R + 0.587 G + 0.114 B.
pub struct ImageFrameSource;

impl FrameSource for ImageFrameSource {
    fn load(&self, path: &Path) -> Result<GrayImage, String> {
        let img = image::open(path).map_err(|e| e.to_string())?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        match img {
            image::DynamicImage::ImageLuma8(luma) => {
                GrayImage::from_luma8(w, h, luma.as_raw()).map_err(|e| e.to_string())
            }
            other => {
                let rgb = other.to_rgb8();
                GrayImage::from_rgb8(w, h, rgb.as_raw()).map_err(|e| e.to_string())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_gray_and_color_pngs() {
        let dir = std::env::temp_dir().join(format!("facedyn-frames-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();

        let gray_path = dir.join("gray.png");
        let mut gray = image::GrayImage::new(4, 3);
        gray.put_pixel(1, 1, image::Luma([200]));
        gray.save(&gray_path).unwrap();
        let loaded = ImageFrameSource.load(&gray_path).unwrap();
        assert_eq!(loaded.width(), 4);
        assert_eq!(loaded.get(1, 1), 200.0);

        let rgb_path = dir.join("rgb.png");
        let mut rgb = image::RgbImage::new(2, 2);
        rgb.put_pixel(0, 0, image::Rgb([255, 0, 0]));
        rgb.save(&rgb_path).unwrap();
        let loaded = ImageFrameSource.load(&rgb_path).unwrap();
        assert!((loaded.get(0, 0) - 0.299 * 255.0).abs() < 1e-9);

        let err = ImageFrameSource.load(&dir.join("missing.png")).unwrap_err();
        assert!(!err.is_empty());
        std::fs::remove_dir_all(&dir).ok();
    }
}
