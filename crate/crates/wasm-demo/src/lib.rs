//! Browser demo bindings.
//!
//! Three interactive operations, each returning JSON for the static page
//! in `www/`:
//!
//! * [`haar_response`] — Haar-like feature values over the 9x9 sampling
//!   grid of an image, plus the window geometry, for heatmap rendering.
//! * [`compare_dynamics`] — two seeded damped-rotation systems, their
//!   output curves, the Hankel similarity score and the DTW distance.
//! * [`synth_confusion`] — a small in-browser synthetic benchmark
//!   comparing the Hankel route against the DTW baseline.
//!
//! The computational logic lives in plain functions (`*_impl`) so it can
//! be tested natively; the `#[wasm_bindgen]` wrappers only translate
//! errors.

use facedyn_core::appearance::{
    haar_value, sample_grid, window_at, FaceRegion, GrayImage, HaarKind, IntegralImage,
};
use facedyn_core::classify::dtw_distance;
use facedyn_core::dynamics::{build_hankel, normalize, similarity, zero_mean, SystemOrder};
use facedyn_core::eval::bench::{run_bench, BenchSpec};
use facedyn_core::eval::synth::SyntheticSystem;
use facedyn_core::rng::SplitMix64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// A procedurally drawn face-like test image (grayscale, `size` x `size`).
#[wasm_bindgen]
pub fn demo_face(size: u32) -> Vec<u8> {
    let n = size.clamp(32, 512) as usize;
    let mut pixels = vec![0u8; n * n];
    let s = n as f64;
    let ellipse = |x: f64, y: f64, cx: f64, cy: f64, rx: f64, ry: f64| -> bool {
        let (dx, dy) = ((x - cx) / rx, (y - cy) / ry);
        dx * dx + dy * dy <= 1.0
    };
    for y in 0..n {
        for x in 0..n {
            let (fx, fy) = (x as f64 / s, y as f64 / s);
            let mut v = 40.0 + 30.0 * fy;
            if ellipse(fx, fy, 0.5, 0.52, 0.34, 0.42) {
                v = 190.0 - 60.0 * (fy - 0.5).abs();
            }
            // Eyes, brows, nose shadow, mouth.
            if ellipse(fx, fy, 0.38, 0.42, 0.055, 0.035) || ellipse(fx, fy, 0.62, 0.42, 0.055, 0.035) {
                v = 70.0;
            }
            if ellipse(fx, fy, 0.38, 0.42, 0.02, 0.02) || ellipse(fx, fy, 0.62, 0.42, 0.02, 0.02) {
                v = 25.0;
            }
            if ellipse(fx, fy, 0.38, 0.35, 0.07, 0.012) || ellipse(fx, fy, 0.62, 0.35, 0.07, 0.012) {
                v = 55.0;
            }
            if ellipse(fx, fy, 0.5, 0.58, 0.025, 0.07) {
                v -= 35.0;
            }
            if ellipse(fx, fy, 0.5, 0.74, 0.11, 0.03) {
                v = 60.0;
            }
            pixels[y * n + x] = v.clamp(0.0, 255.0) as u8;
        }
    }
    pixels
}

/// Converts canvas RGBA bytes into the grayscale buffer the other calls
/// expect (luma = 0.299 R + 0.587 G + 0.114 B).
#[wasm_bindgen]
pub fn rgba_to_gray(rgba: &[u8], width: u32, height: u32) -> Result<Vec<u8>, JsError> {
    let img = GrayImage::from_rgba8(width as usize, height as usize, rgba)
        .map_err(|e| JsError::new(&e.to_string()))?;
    Ok(img.pixels().iter().map(|&v| v.clamp(0.0, 255.0) as u8).collect())
}

#[derive(Serialize)]
struct HaarPoint {
    x: usize,
    y: usize,
    value: f64,
    window: [usize; 4],
    degenerate: bool,
}

#[derive(Serialize)]
struct HaarResponse {
    kind: String,
    scale: f64,
    width: usize,
    height: usize,
    region: [usize; 4],
    points: Vec<HaarPoint>,
    min_value: f64,
    max_value: f64,
}

fn haar_response_impl(
    gray: &[u8],
    width: usize,
    height: usize,
    kind_id: u8,
    scale: f64,
    step: f64,
) -> Result<String, String> {
    let kind = HaarKind::from_id(kind_id).ok_or_else(|| format!("unknown kind id {kind_id}"))?;
    let img = GrayImage::from_luma8(width, height, gray).map_err(|e| e.to_string())?;
    let region = FaceRegion::new(0, 0, width, height).map_err(|e| e.to_string())?;
    let ii = IntegralImage::new(&img);
    let grid = sample_grid(&region, step).map_err(|e| e.to_string())?;
    let mut points = Vec::with_capacity(grid.len());
    let (mut min_value, mut max_value) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(px, py) in grid.points() {
        let win = window_at((px, py), scale, &region).map_err(|e| e.to_string())?;
        let (value, degenerate) = match haar_value(&ii, &win, kind) {
            Ok(v) => (v, false),
            Err(_) => (0.0, true),
        };
        if !degenerate {
            min_value = min_value.min(value);
            max_value = max_value.max(value);
        }
        points.push(HaarPoint {
            x: px,
            y: py,
            value,
            window: [win.rect.x, win.rect.y, win.rect.w, win.rect.h],
            degenerate,
        });
    }
    if points.iter().all(|p| p.degenerate) {
        min_value = 0.0;
        max_value = 0.0;
    }
    serde_json::to_string(&HaarResponse {
        kind: kind.name().to_string(),
        scale,
        width,
        height,
        region: [0, 0, width, height],
        points,
        min_value,
        max_value,
    })
    .map_err(|e| e.to_string())
}

/// Haar-like feature values over the sampling grid of a grayscale image,
/// treating the whole image as the face region.
#[wasm_bindgen]
pub fn haar_response(
    gray: &[u8],
    width: u32,
    height: u32,
    kind_id: u8,
    scale: f64,
    step: f64,
) -> Result<String, JsError> {
    haar_response_impl(gray, width as usize, height as usize, kind_id, scale, step)
        .map_err(|e| JsError::new(&e))
}

#[derive(Serialize)]
struct DynamicsComparison {
    ya: Vec<Vec<f64>>,
    yb: Vec<Vec<f64>>,
    similarity: f64,
    dtw_distance: f64,
}

#[allow(clippy::too_many_arguments)]
fn compare_dynamics_impl(
    rho_a: f64,
    theta_a: f64,
    rho_b: f64,
    theta_b: f64,
    c_seed: u64,
    x0_seed_a: u64,
    x0_seed_b: u64,
    t: usize,
    noise: f64,
) -> Result<String, String> {
    let t = t.clamp(6, 256);
    let order = SystemOrder::default();
    // The output matrix comes from `c_seed` alone, so equal (rho, theta)
    // means the very same system observed from different initial states.
    let sys_a = SyntheticSystem::damped_rotation(rho_a, theta_a, 2, c_seed)
        .map_err(|e| e.to_string())?
        .with_noise(noise)
        .with_seed(x0_seed_a);
    let sys_b = SyntheticSystem::damped_rotation(rho_b, theta_b, 2, c_seed)
        .map_err(|e| e.to_string())?
        .with_noise(noise)
        .with_seed(x0_seed_b.wrapping_add(1_000_003));
    let ya = sys_a.generate(t).map_err(|e| e.to_string())?;
    let yb = sys_b.generate(t).map_err(|e| e.to_string())?;

    let ha = normalize(&build_hankel(&ya, order).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let hb = normalize(&build_hankel(&yb, order).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let score = similarity(&ha, &hb).map_err(|e| e.to_string())?;
    let dtw = dtw_distance(&zero_mean(&ya), &zero_mean(&yb)).map_err(|e| e.to_string())?;

    let split = |series: &facedyn_core::dynamics::TimeSeries| -> Vec<Vec<f64>> {
        (0..series.dim())
            .map(|d| (0..series.len()).map(|k| series.sample(k)[d]).collect())
            .collect()
    };
    serde_json::to_string(&DynamicsComparison {
        ya: split(&ya),
        yb: split(&yb),
        similarity: score,
        dtw_distance: dtw,
    })
    .map_err(|e| e.to_string())
}

/// Generates two damped-rotation systems, returns their output curves and
/// both comparison scores (Hankel similarity, DTW distance).
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn compare_dynamics(
    rho_a: f64,
    theta_a: f64,
    rho_b: f64,
    theta_b: f64,
    c_seed: u32,
    x0_seed_a: u32,
    x0_seed_b: u32,
    t: u32,
    noise: f64,
) -> Result<String, JsError> {
    compare_dynamics_impl(
        rho_a,
        theta_a,
        rho_b,
        theta_b,
        c_seed as u64,
        x0_seed_a as u64,
        x0_seed_b as u64,
        t as usize,
        noise,
    )
    .map_err(|e| JsError::new(&e))
}

#[derive(Serialize)]
struct BenchResult {
    labels: Vec<String>,
    confusion: Vec<Vec<u64>>,
    hankel_accuracy: f64,
    dtw_accuracy: f64,
    sequences: usize,
}

fn synth_confusion_impl(seed: u64, noise: f64, seqs_per_class: usize, t: usize) -> Result<String, String> {
    let t = t.clamp(8, 64);
    let spec = BenchSpec {
        classes: 3,
        sequences_per_class: seqs_per_class.clamp(2, 12),
        channels: 2,
        t_min: t,
        t_max: t + 4,
        noise_levels: vec![noise.max(0.0)],
        seed,
        ..BenchSpec::default()
    };
    let outcome = run_bench(&spec).map_err(|e| e.to_string())?;
    let level = &outcome.levels[0];
    serde_json::to_string(&BenchResult {
        labels: level.hankel.confusion.labels.clone(),
        confusion: level.hankel.confusion.counts.clone(),
        hankel_accuracy: level.hankel.accuracy.average_pct,
        dtw_accuracy: level.dtw.accuracy.average_pct,
        sequences: spec.classes * spec.sequences_per_class,
    })
    .map_err(|e| e.to_string())
}

/// Runs a seeded three-class synthetic benchmark in the browser and
/// returns the Hankel-route confusion matrix plus both accuracies.
#[wasm_bindgen]
pub fn synth_confusion(seed: u32, noise: f64, seqs_per_class: u32, t: u32) -> Result<String, JsError> {
    synth_confusion_impl(seed as u64, noise, seqs_per_class as usize, t as usize)
        .map_err(|e| JsError::new(&e))
}

/// Spreads a deterministic seed from a text field; lets the page accept
/// arbitrary strings as seeds.
#[wasm_bindgen]
pub fn seed_from_text(text: &str) -> u32 {
    let mut rng = SplitMix64::new(text.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64)));
    (rng.next_u64() & 0xffff_ffff) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_face_has_contrast() {
        let face = demo_face(96);
        assert_eq!(face.len(), 96 * 96);
        let (min, max) = face.iter().fold((255u8, 0u8), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!(max - min > 80, "flat image: {min}..{max}");
    }

    #[test]
    fn haar_response_is_wellformed_json() {
        let face = demo_face(96);
        let json = haar_response_impl(&face, 96, 96, 5, 0.4, 0.1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 81);
        assert_eq!(v["kind"], "center-surround");
        assert!(v["max_value"].as_f64().unwrap() >= v["min_value"].as_f64().unwrap());
        assert!(haar_response_impl(&face, 96, 96, 9, 0.4, 0.1).is_err());
        assert!(haar_response_impl(&face, 90, 96, 0, 0.4, 0.1).is_err());
    }

    #[test]
    fn same_system_scores_near_one_different_systems_lower() {
        let same = compare_dynamics_impl(0.97, 1.2, 0.97, 1.2, 7, 1, 2, 24, 0.0).unwrap();
        let same: serde_json::Value = serde_json::from_str(&same).unwrap();
        let s_same = same["similarity"].as_f64().unwrap();
        assert!(s_same > 0.99, "same-system similarity {s_same}");

        let diff = compare_dynamics_impl(0.97, 1.2, 0.97, 2.1, 7, 1, 2, 24, 0.0).unwrap();
        let diff: serde_json::Value = serde_json::from_str(&diff).unwrap();
        let s_diff = diff["similarity"].as_f64().unwrap();
        assert!(s_diff < s_same, "expected separation, got {s_diff} vs {s_same}");
        assert_eq!(diff["ya"].as_array().unwrap().len(), 2);
        assert_eq!(diff["ya"][0].as_array().unwrap().len(), 24);

        // Unstable radius is rejected.
        assert!(compare_dynamics_impl(1.2, 1.0, 0.9, 1.0, 7, 1, 2, 24, 0.0).is_err());
    }

    #[test]
    fn synth_confusion_reports_three_classes() {
        let json = synth_confusion_impl(5, 0.2, 4, 18).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["labels"].as_array().unwrap().len(), 3);
        assert_eq!(v["confusion"].as_array().unwrap().len(), 3);
        assert_eq!(v["sequences"], 12);
        let hankel = v["hankel_accuracy"].as_f64().unwrap();
        assert!((0.0..=100.0).contains(&hankel));
    }

    #[test]
    fn seed_from_text_is_deterministic() {
        assert_eq!(seed_from_text("hello"), seed_from_text("hello"));
        assert_ne!(seed_from_text("hello"), seed_from_text("world"));
    }
}
