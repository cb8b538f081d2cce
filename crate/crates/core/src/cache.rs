//! On-disk feature cache.
//!
//! Extracting Haar-like features is the only part of an evaluation that
//! touches image files, so extracted channel series are cached keyed by
//! (manifest hash, extraction config hash) and reused across runs and
//! across the many folds of a leave-one-subject-out evaluation.
//!
//! Container format (`FDFC`, version 1, little-endian throughout):
//!
//! ```text
//! magic            4 bytes  "FDFC"
//! version          u32      1
//! manifest_hash    u64      FNV-1a of the manifest file bytes
//! config_hash      u64      FNV-1a of the canonical extraction config
//! sequence_count   u32
//! per sequence:
//!   id, subject, label     length-prefixed utf-8 strings (u32 + bytes)
//!   degenerate_windows      u64
//!   channel_count           u32
//!   per channel:
//!     kind id               u8
//!     scale index           u8
//!     scale fraction        f64
//!     frame count T         u32
//!     dim                   u32   (81)
//!     values                T * dim f64, frame-major
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::appearance::{ExtractionConfig, FeatureChannelSeries, HaarKind, SequenceFeatures, FEATURE_DIM};
use crate::wire::{self, Reader};

const CACHE_MAGIC: &[u8; 4] = b"FDFC";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache io at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot decode cache: {0}")]
    Decode(String),
    #[error("cache was built for different inputs (manifest or config hash mismatch)")]
    KeyMismatch,
}

/// Cached features of one sequence.
#[derive(Debug, Clone)]
pub struct CachedSequence {
    pub id: String,
    pub subject: String,
    pub label: String,
    pub features: SequenceFeatures,
}

/// FNV-1a 64-bit, the hash behind cache keys. Stable across platforms.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Hash of an extraction config over its canonical byte encoding (kind
/// ids, scale bit patterns, step bit pattern), so equal configs hash equal
/// regardless of how they were produced.
pub fn config_hash(config: &ExtractionConfig) -> u64 {
    let mut bytes = Vec::new();
    for k in &config.kinds {
        bytes.push(k.id());
    }
    bytes.push(0xff);
    for &s in &config.scales {
        bytes.extend_from_slice(&s.to_bits().to_le_bytes());
    }
    bytes.extend_from_slice(&config.step_frac.to_bits().to_le_bytes());
    fnv1a(&bytes)
}

/// Cache file path for a (manifest, config) key pair.
pub fn cache_path(dir: &Path, manifest_hash: u64, config_hash: u64) -> PathBuf {
    dir.join(format!("{manifest_hash:016x}-{config_hash:016x}.fdfc"))
}

pub fn write_cache(
    path: &Path,
    manifest_hash: u64,
    config_hash: u64,
    sequences: &[CachedSequence],
) -> Result<(), CacheError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CACHE_MAGIC);
    wire::put_u32(&mut buf, CACHE_VERSION);
    wire::put_u64(&mut buf, manifest_hash);
    wire::put_u64(&mut buf, config_hash);
    wire::put_u32(&mut buf, sequences.len() as u32);
    for seq in sequences {
        wire::put_str(&mut buf, &seq.id);
        wire::put_str(&mut buf, &seq.subject);
        wire::put_str(&mut buf, &seq.label);
        wire::put_u64(&mut buf, seq.features.degenerate_windows);
        wire::put_u32(&mut buf, seq.features.channels.len() as u32);
        for ch in &seq.features.channels {
            buf.push(ch.kind.id());
            buf.push(ch.scale_index);
            wire::put_f64(&mut buf, ch.scale_frac);
            wire::put_u32(&mut buf, ch.len() as u32);
            wire::put_u32(&mut buf, FEATURE_DIM as u32);
            for &x in ch.values() {
                wire::put_f64(&mut buf, x);
            }
        }
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|source| CacheError::Io { path: parent.to_path_buf(), source })?;
    }
    let mut file = fs::File::create(path)
        .map_err(|source| CacheError::Io { path: path.to_path_buf(), source })?;
    file.write_all(&buf)
        .map_err(|source| CacheError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

/// Loads a cache file, verifying it was built for the given key pair.
pub fn read_cache(
    path: &Path,
    manifest_hash: u64,
    config_hash: u64,
) -> Result<Vec<CachedSequence>, CacheError> {
    let bytes =
        fs::read(path).map_err(|source| CacheError::Io { path: path.to_path_buf(), source })?;
    let mut r = Reader::new(&bytes);
    let magic = r.take(4).map_err(CacheError::Decode)?;
    if magic != CACHE_MAGIC {
        return Err(CacheError::Decode("bad magic, not a feature cache".into()));
    }
    let version = r.u32().map_err(CacheError::Decode)?;
    if version != CACHE_VERSION {
        return Err(CacheError::Decode(format!("unsupported cache version {version}")));
    }
    let stored_manifest = r.u64().map_err(CacheError::Decode)?;
    let stored_config = r.u64().map_err(CacheError::Decode)?;
    if stored_manifest != manifest_hash || stored_config != config_hash {
        return Err(CacheError::KeyMismatch);
    }
    let count = r.u32().map_err(CacheError::Decode)?;
    let mut sequences = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id = r.string().map_err(CacheError::Decode)?;
        let subject = r.string().map_err(CacheError::Decode)?;
        let label = r.string().map_err(CacheError::Decode)?;
        let degenerate_windows = r.u64().map_err(CacheError::Decode)?;
        let channel_count = r.u32().map_err(CacheError::Decode)?;
        let mut channels = Vec::with_capacity(channel_count as usize);
        for _ in 0..channel_count {
            let kind_id = r.u8().map_err(CacheError::Decode)?;
            let kind = HaarKind::from_id(kind_id)
                .ok_or_else(|| CacheError::Decode(format!("unknown kind id {kind_id}")))?;
            let scale_index = r.u8().map_err(CacheError::Decode)?;
            let scale_frac = r.f64().map_err(CacheError::Decode)?;
            let t = r.u32().map_err(CacheError::Decode)? as usize;
            let dim = r.u32().map_err(CacheError::Decode)? as usize;
            if dim != FEATURE_DIM {
                return Err(CacheError::Decode(format!(
                    "channel dim {dim} unsupported, expected {FEATURE_DIM}"
                )));
            }
            let mut values = Vec::with_capacity(t * dim);
            for _ in 0..t * dim {
                values.push(r.f64().map_err(CacheError::Decode)?);
            }
            channels.push(
                FeatureChannelSeries::new(kind, scale_index, scale_frac, t, values)
                    .map_err(|e| CacheError::Decode(e.to_string()))?,
            );
        }
        sequences.push(CachedSequence {
            id,
            subject,
            label,
            features: SequenceFeatures { channels, degenerate_windows },
        });
    }
    if !r.is_at_end() {
        return Err(CacheError::Decode("trailing bytes after last sequence".into()));
    }
    Ok(sequences)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appearance::HaarKind;
    use crate::rng::SplitMix64;

    fn sample_sequences(seed: u64) -> Vec<CachedSequence> {
        let mut rng = SplitMix64::new(seed);
        (0..3)
            .map(|i| {
                let channels = (0..4)
                    .map(|c| {
                        let t = 5 + i;
                        let values = (0..t * FEATURE_DIM).map(|_| rng.normal()).collect();
                        FeatureChannelSeries::new(
                            HaarKind::from_id(c as u8 % 6).unwrap(),
                            c as u8 / 6,
                            0.3,
                            t,
                            values,
                        )
                        .unwrap()
                    })
                    .collect();
                CachedSequence {
                    id: format!("seq{i}"),
                    subject: format!("subj{}", i % 2),
                    label: "happy".into(),
                    features: SequenceFeatures { channels, degenerate_windows: i as u64 },
                }
            })
            .collect()
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = std::env::temp_dir().join(format!("fdfc-test-{}", std::process::id()));
        let path = cache_path(&dir, 0xabc, 0xdef);
        let seqs = sample_sequences(1);
        write_cache(&path, 0xabc, 0xdef, &seqs).unwrap();
        let back = read_cache(&path, 0xabc, 0xdef).unwrap();
        assert_eq!(back.len(), seqs.len());
        for (a, b) in seqs.iter().zip(&back) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.subject, b.subject);
            assert_eq!(a.label, b.label);
            assert_eq!(a.features.degenerate_windows, b.features.degenerate_windows);
            assert_eq!(a.features.channels.len(), b.features.channels.len());
            for (ca, cb) in a.features.channels.iter().zip(&b.features.channels) {
                assert_eq!(ca.kind, cb.kind);
                assert_eq!(ca.scale_index, cb.scale_index);
                for (x, y) in ca.values().iter().zip(cb.values()) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn key_mismatch_is_detected() {
        let dir = std::env::temp_dir().join(format!("fdfc-test-key-{}", std::process::id()));
        let path = cache_path(&dir, 1, 2);
        write_cache(&path, 1, 2, &sample_sequences(2)).unwrap();
        assert!(matches!(read_cache(&path, 1, 3), Err(CacheError::KeyMismatch)));
        assert!(matches!(read_cache(&path, 9, 2), Err(CacheError::KeyMismatch)));
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn config_hash_tracks_content_not_identity() {
        let a = ExtractionConfig::default();
        let b = ExtractionConfig::default();
        assert_eq!(config_hash(&a), config_hash(&b));
        let mut c = ExtractionConfig::default();
        c.scales[0] = 0.31;
        assert_ne!(config_hash(&a), config_hash(&c));
        let mut d = ExtractionConfig::default();
        d.kinds.truncate(3);
        assert_ne!(config_hash(&a), config_hash(&d));
    }

    #[test]
    fn fnv_matches_reference_vectors() {
        // Standard FNV-1a 64 test vectors.
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }
}
