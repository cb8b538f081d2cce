//! Evaluation harness: dataset ingestion, leave-one-subject-out cross
//! validation, accuracy/confusion reporting, and synthetic benchmarks.

pub mod bench;
mod manifest;
mod report;
pub mod synth;

pub use manifest::{
    loso_folds, DatasetManifest, Fold, RegionSpec, SequenceEntry, MANIFEST_FORMAT,
    MANIFEST_VERSION,
};
pub use report::{confusion, AccuracyReport, ClassAccuracy, ConfusionMatrix, FoldSummary};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appearance::{extract_sequence, ExtractionConfig, GrayImage};
use crate::cache::{self, CachedSequence, CacheError};
use crate::classify::{
    classify, dtw_classify, ClassifyError, Gallery, LabelVocab, Prediction, RawEntry, RawGallery,
    TieBreak,
};
use crate::dynamics::{
    build_ensemble, zero_mean, ChannelKey, DynamicsError, EnsembleRepresentation, SequenceMeta,
    SystemOrder, TimeSeries,
};
use crate::error::ErrorCategory;
use crate::{appearance::AppearanceError, parallel};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ingestion failed:\n{}", format_issues(issues))]
    Ingestion { issues: Vec<String> },
    #[error("io error at {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid synthetic system: {0}")]
    BadSystem(String),
    #[error("unstable system: spectral radius estimate {rho:.4} exceeds {}", synth::SPECTRAL_RADIUS_CAP)]
    UnstableSystem { rho: f64 },
    #[error("invalid benchmark spec: {0}")]
    BadBenchSpec(String),
    #[error("fold `{subject}` failed: {source}")]
    FoldFailure { subject: String, source: Box<EvalError> },
    #[error(transparent)]
    Appearance(#[from] AppearanceError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

fn format_issues(issues: &[String]) -> String {
    issues.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n")
}

impl EvalError {
    pub fn ingestion(issues: Vec<String>) -> Self {
        Self::Ingestion { issues }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            EvalError::Ingestion { .. } | EvalError::Io { .. } | EvalError::Cache(_) => {
                ErrorCategory::Ingestion
            }
            EvalError::Protocol(_) | EvalError::BadBenchSpec(_) => ErrorCategory::Protocol,
            EvalError::FoldFailure { source, .. } => source.category(),
            _ => ErrorCategory::Computation,
        }
    }
}

/// Loads frames referenced by a manifest. The evaluation harness itself is
/// image-format agnostic; the CLI plugs in a decoder, tests plug in
/// synthetic sources.
pub trait FrameSource: Sync {
    fn load(&self, path: &Path) -> Result<GrayImage, String>;
}

/// Which classification route to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Ensemble of normalized Hankel matrices + similarity-score NN.
    Hankel,
    /// DTW over the raw (zero-meaned) feature series + NN.
    Dtw,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hankel => "hankel",
            Method::Dtw => "dtw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hankel" => Some(Method::Hankel),
            "dtw" => Some(Method::Dtw),
            _ => None,
        }
    }
}

/// Everything that determines an evaluation, hashed into outputs for
/// provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub method: Method,
    pub extraction: ExtractionConfig,
    pub order: SystemOrder,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            method: Method::Hankel,
            extraction: ExtractionConfig::default(),
            order: SystemOrder::default(),
        }
    }
}

/// One sequence reduced to channel time series; the common currency
/// between the appearance front end, synthetic generators, and the
/// evaluation harness.
#[derive(Debug, Clone)]
pub struct SequenceChannels {
    pub id: String,
    pub subject: String,
    pub label: String,
    pub channels: Vec<(ChannelKey, TimeSeries)>,
}

/// One channel's vote in a serialized prediction record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoteRecord {
    pub kind: u8,
    pub scale: u8,
    pub label: Option<String>,
    pub score: f64,
}

/// Per-sequence prediction, serialized as one JSON line in prediction
/// output files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub id: String,
    pub subject: String,
    pub truth: String,
    pub predicted: String,
    pub tie_break: String,
    pub tally: BTreeMap<String, u32>,
    pub votes: Vec<VoteRecord>,
}

/// Full outcome of one evaluation run.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub method: Method,
    pub order: usize,
    pub accuracy: AccuracyReport,
    pub confusion: ConfusionMatrix,
    pub predictions: Vec<PredictionRecord>,
    /// Degenerate windows substituted with 0 during extraction (0 for
    /// synthetic data).
    pub degenerate_windows: u64,
}

/// Cache outcome of [`extract_or_load`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheStatus {
    /// No cache directory configured.
    Disabled,
    /// Features loaded from an existing cache file.
    Hit(PathBuf),
    /// Features extracted and written to the cache file.
    Written(PathBuf),
}

/// Extracts features for every sequence of the manifest (in parallel),
/// or loads them from the cache keyed by (manifest hash, config hash).
pub fn extract_or_load(
    manifest: &DatasetManifest,
    frames: &dyn FrameSource,
    extraction: &ExtractionConfig,
    cache_dir: Option<&Path>,
) -> Result<(Vec<CachedSequence>, CacheStatus), EvalError> {
    extraction.validate()?;
    let Some(dir) = cache_dir else {
        return Ok((extract_all(manifest, frames, extraction)?, CacheStatus::Disabled));
    };
    let manifest_hash = manifest.source_hash();
    let config_hash = cache::config_hash(extraction);
    let path = cache::cache_path(dir, manifest_hash, config_hash);
    if path.is_file() {
        match cache::read_cache(&path, manifest_hash, config_hash) {
            Ok(seqs) => return Ok((seqs, CacheStatus::Hit(path))),
            // Corrupt or stale cache: fall through and rebuild it.
            Err(CacheError::Decode(_)) | Err(CacheError::KeyMismatch) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let seqs = extract_all(manifest, frames, extraction)?;
    cache::write_cache(&path, manifest_hash, config_hash, &seqs)?;
    Ok((seqs, CacheStatus::Written(path)))
}

fn extract_all(
    manifest: &DatasetManifest,
    frames: &dyn FrameSource,
    extraction: &ExtractionConfig,
) -> Result<Vec<CachedSequence>, EvalError> {
    parallel::try_map_collect(manifest.entries(), |entry| {
        let mut imgs = Vec::with_capacity(entry.frames.len());
        let mut regions = Vec::with_capacity(entry.frames.len());
        for (i, path) in entry.frames.iter().enumerate() {
            let img = frames.load(path).map_err(|msg| {
                EvalError::ingestion(vec![format!(
                    "sequence `{}`: cannot load frame {}: {msg}",
                    entry.id,
                    path.display()
                )])
            })?;
            regions.push(*entry.region_for_frame(i));
            imgs.push(img);
        }
        let features = extract_sequence(&imgs, &regions, extraction)?;
        Ok(CachedSequence {
            id: entry.id.clone(),
            subject: entry.subject.clone(),
            label: entry.label.clone(),
            features,
        })
    })
}

/// Turns extracted features into the channel-series form the harness
/// consumes.
pub fn sequences_from_features(features: &[CachedSequence]) -> Vec<SequenceChannels> {
    features
        .iter()
        .map(|seq| SequenceChannels {
            id: seq.id.clone(),
            subject: seq.subject.clone(),
            label: seq.label.clone(),
            channels: seq
                .features
                .channels
                .iter()
                .map(|ch| (ChannelKey::for_feature(ch), TimeSeries::from(ch)))
                .collect(),
        })
        .collect()
}

/// End-to-end evaluation of a manifest: extraction (cached), one
/// leave-one-subject-out fold per subject, classification of every test
/// sequence, aggregation. Deterministic given the manifest and config.
pub fn evaluate(
    manifest: &DatasetManifest,
    config: &EvalConfig,
    frames: &dyn FrameSource,
    cache_dir: Option<&Path>,
) -> Result<Evaluation, EvalError> {
    let (features, _) = extract_or_load(manifest, frames, &config.extraction, cache_dir)?;
    let degenerate: u64 = features.iter().map(|f| f.features.degenerate_windows).sum();
    let data = sequences_from_features(&features);
    let mut evaluation = evaluate_channels(&data, manifest.vocab(), config.method, config.order)?;
    evaluation.degenerate_windows = degenerate;
    Ok(evaluation)
}

/// Leave-one-subject-out evaluation over channel series from any source
/// (extracted features or synthetic benchmarks).
pub fn evaluate_channels(
    data: &[SequenceChannels],
    vocab: &LabelVocab,
    method: Method,
    order: SystemOrder,
) -> Result<Evaluation, EvalError> {
    let pairs: Vec<(&str, &str)> =
        data.iter().map(|s| (s.id.as_str(), s.subject.as_str())).collect();
    let folds = manifest::subject_folds(&pairs)?;
    let index_of: BTreeMap<&str, usize> =
        data.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();

    let fold_fail = |fold: &Fold, e: EvalError| EvalError::FoldFailure {
        subject: fold.subject.clone(),
        source: Box::new(e),
    };

    // (sequence index, prediction) pairs, gathered fold by fold.
    let mut indexed: Vec<(usize, Prediction)> = Vec::with_capacity(data.len());
    match method {
        Method::Hankel => {
            let ensembles: Vec<Arc<EnsembleRepresentation>> =
                parallel::try_map_collect(data, |s| {
                    build_ensemble(
                        s.channels.iter().map(|(k, ts)| (*k, ts.clone())),
                        order,
                        SequenceMeta {
                            id: s.id.clone(),
                            subject: s.subject.clone(),
                            label: Some(s.label.clone()),
                        },
                    )
                    .map(Arc::new)
                    .map_err(EvalError::from)
                })?;
            let per_fold = parallel::try_map_collect(&folds, |fold| {
                let train: Vec<Arc<EnsembleRepresentation>> =
                    fold.train_ids.iter().map(|id| ensembles[index_of[id.as_str()]].clone()).collect();
                let gallery = Gallery::new(train, vocab.clone())
                    .map_err(|e| fold_fail(fold, e.into()))?;
                let mut out = Vec::with_capacity(fold.test_ids.len());
                for id in &fold.test_ids {
                    let qi = index_of[id.as_str()];
                    let p = classify(&ensembles[qi], &gallery)
                        .map_err(|e| fold_fail(fold, e.into()))?;
                    out.push((qi, p));
                }
                Ok::<_, EvalError>(out)
            })?;
            indexed.extend(per_fold.into_iter().flatten());
        }
        Method::Dtw => {
            let raw: Vec<Arc<RawEntry>> = parallel::try_map_collect(data, |s| {
                let label = vocab.id(&s.label).map_err(EvalError::from)?;
                Ok::<_, EvalError>(Arc::new(RawEntry {
                    id: s.id.clone(),
                    subject: s.subject.clone(),
                    label,
                    channels: s
                        .channels
                        .iter()
                        .map(|(k, ts)| (*k, zero_mean(ts)))
                        .collect(),
                }))
            })?;
            let per_fold = parallel::try_map_collect(&folds, |fold| {
                let train: Vec<Arc<RawEntry>> =
                    fold.train_ids.iter().map(|id| raw[index_of[id.as_str()]].clone()).collect();
                let gallery = RawGallery::new(train, vocab.clone())
                    .map_err(|e| fold_fail(fold, e.into()))?;
                let mut out = Vec::with_capacity(fold.test_ids.len());
                for id in &fold.test_ids {
                    let qi = index_of[id.as_str()];
                    let p = dtw_classify(&raw[qi].channels, &gallery)
                        .map_err(|e| fold_fail(fold, e.into()))?;
                    out.push((qi, p));
                }
                Ok::<_, EvalError>(out)
            })?;
            indexed.extend(per_fold.into_iter().flatten());
        }
    }

    indexed.sort_by_key(|(i, _)| *i);
    let records: Vec<PredictionRecord> = indexed
        .iter()
        .map(|(i, p)| prediction_record(&data[*i], p, vocab))
        .collect();

    let truths: Vec<String> = data.iter().map(|s| s.label.clone()).collect();
    let predicted: Vec<String> = records.iter().map(|r| r.predicted.clone()).collect();
    let cm = report::confusion(&truths, &predicted, vocab)?;

    let correct_by_subject: BTreeMap<&str, (usize, usize)> = {
        let mut m: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for (r, s) in records.iter().zip(data) {
            let e = m.entry(s.subject.as_str()).or_insert((0, 0));
            e.0 += 1;
            if r.predicted == r.truth {
                e.1 += 1;
            }
        }
        m
    };
    let fold_summaries: Vec<FoldSummary> = folds
        .iter()
        .map(|f| {
            let (test_count, correct) =
                correct_by_subject.get(f.subject.as_str()).copied().unwrap_or((0, 0));
            FoldSummary { subject: f.subject.clone(), test_count, correct }
        })
        .collect();

    Ok(Evaluation {
        method,
        order: order.n(),
        accuracy: AccuracyReport::from_confusion(&cm, fold_summaries),
        confusion: cm,
        predictions: records,
        degenerate_windows: 0,
    })
}

fn prediction_record(
    seq: &SequenceChannels,
    p: &Prediction,
    vocab: &LabelVocab,
) -> PredictionRecord {
    let tally: BTreeMap<String, u32> = vocab
        .names()
        .iter()
        .enumerate()
        .map(|(i, name)| (name.clone(), p.tally[i]))
        .collect();
    PredictionRecord {
        id: seq.id.clone(),
        subject: seq.subject.clone(),
        truth: seq.label.clone(),
        predicted: vocab.name(p.label).to_string(),
        tie_break: match &p.tie_break {
            TieBreak::Majority => "majority".into(),
            TieBreak::ScoreSum { .. } => "score-sum".into(),
            TieBreak::LabelIndex { .. } => "label-index".into(),
        },
        tally,
        votes: p
            .votes
            .iter()
            .map(|v| VoteRecord {
                kind: v.key.kind,
                scale: v.key.scale,
                label: v.label.map(|l| vocab.name(l).to_string()),
                score: v.score,
            })
            .collect(),
    }
}
