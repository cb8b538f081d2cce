//! Shared helpers for the CLI test suites: synthetic PNG datasets with
//! class-specific dynamics, and process-running utilities.
//!
//! Compiled once per test target, so not every helper is used everywhere.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use facedyn_core::rng::SplitMix64;

pub const BIN: &str = env!("CARGO_BIN_EXE_facedyn");
pub const IMG: u32 = 40;
pub const T: usize = 8;

pub fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

/// Writes a PNG dataset whose classes differ only in the rotation angle of
/// the two-state system modulating two fixed spatial patterns, and returns
/// the manifest path. Every sequence gets its own subject.
pub fn write_dataset(dir: &Path, classes: &[(&str, f64)], seqs_per_class: usize) -> PathBuf {
    fs::create_dir_all(dir).unwrap();
    let pattern = |tag: u64, x: u32, y: u32| -> f64 {
        SplitMix64::new(tag.wrapping_mul(31).wrapping_add((y * IMG + x) as u64)).next_f64() - 0.5
    };
    let labels: Vec<String> = classes.iter().map(|(l, _)| format!("\"{l}\"")).collect();
    let mut manifest = format!(
        "{{\"format\":\"facedyn-manifest\",\"version\":1,\"labels\":[{}]}}\n",
        labels.join(",")
    );
    for (k, (label, theta)) in classes.iter().enumerate() {
        for i in 0..seqs_per_class {
            let mut rng = SplitMix64::new(900 + (k * 11 + i) as u64);
            let (mut s1, mut s2) = (rng.normal(), rng.normal());
            let mut frame_names = Vec::new();
            for t in 0..T {
                let mut img = image::GrayImage::new(IMG, IMG);
                for y in 0..IMG {
                    for x in 0..IMG {
                        let base = 110.0 + 0.5 * x as f64 + 0.3 * y as f64;
                        let v = base
                            + 25.0 * s1 * pattern(7, x, y)
                            + 25.0 * s2 * pattern(13, x, y);
                        img.put_pixel(x, y, image::Luma([v.clamp(0.0, 255.0) as u8]));
                    }
                }
                let name = format!("c{k}-s{i}-f{t}.png");
                img.save(dir.join(&name)).unwrap();
                frame_names.push(format!("\"{name}\""));
                let rho = 0.97f64;
                let (n1, n2) = (
                    rho * (theta.cos() * s1 - theta.sin() * s2),
                    rho * (theta.sin() * s1 + theta.cos() * s2),
                );
                s1 = n1;
                s2 = n2;
            }
            manifest.push_str(&format!(
                "{{\"id\":\"c{k}s{i}\",\"subject\":\"subj-{k}-{i}\",\"label\":\"{label}\",\"frames\":[{}],\"box\":[2,2,36,36]}}\n",
                frame_names.join(",")
            ));
        }
    }
    let path = dir.join("manifest.jsonl");
    fs::write(&path, manifest).unwrap();
    path
}
