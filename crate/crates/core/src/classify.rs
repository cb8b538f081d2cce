//! Nearest-neighbor classification over Hankel ensembles and the
//! DTW-on-raw-features baseline.
//!
//! Each channel of a query ensemble is compared only against gallery
//! channels with the same key (same Haar kind and scale); the channel
//! votes for the label of its nearest gallery neighbour (maximum
//! similarity for Hankel matrices, minimum DTW distance for raw series)
//! and the final prediction is a majority vote across channels.
//! Ties are broken deterministically: vote tally, then the summed score of
//! the tied labels, then the lowest label index.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{
    similarity, ChannelDynamics, ChannelKey, DynamicsError, EnsembleRepresentation, TimeSeries,
};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("label vocabulary must be non-empty and unique (problem: {0})")]
    BadVocabulary(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("gallery member `{0}` has no label")]
    MissingLabel(String),
    #[error("gallery is empty")]
    EmptyGallery,
    #[error("gallery has no channel {0}")]
    EmptyGalleryChannel(ChannelKey),
    #[error("incompatible configurations: {0}")]
    ConfigMismatch(String),
    #[error("every channel abstained; input is undecidable")]
    Undecidable,
    #[error("series dimensions differ: {da} vs {db}")]
    IncompatibleSeries { da: usize, db: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Index into a [`LabelVocab`]. The ordering of label ids is the final
/// tie-break, so it is part of the classifier's observable behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LabelId(pub usize);

/// The fixed label vocabulary of a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocab {
    names: Vec<String>,
}

impl LabelVocab {
    pub fn new(names: Vec<String>) -> Result<Self, ClassifyError> {
        if names.is_empty() {
            return Err(ClassifyError::BadVocabulary("no labels".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(ClassifyError::BadVocabulary("empty label name".into()));
            }
            if names[..i].contains(n) {
                return Err(ClassifyError::BadVocabulary(format!("duplicate label `{n}`")));
            }
        }
        Ok(Self { names })
    }

    /// The seven emotion labels of the CK+ dataset, in its usual order.
    pub fn ck_emotions() -> Self {
        Self::new(
            ["angry", "contempt", "disgust", "fear", "happy", "sadness", "surprise"]
                .into_iter()
                .map(String::from)
                .collect(),
        )
        .expect("static vocabulary is valid")
    }

    pub fn id(&self, name: &str) -> Result<LabelId, ClassifyError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(LabelId)
            .ok_or_else(|| ClassifyError::UnknownLabel(name.to_string()))
    }

    pub fn name(&self, id: LabelId) -> &str {
        &self.names[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// A labeled ensemble inside the gallery.
#[derive(Debug, Clone)]
pub struct GalleryEntry {
    pub ensemble: Arc<EnsembleRepresentation>,
    pub label: LabelId,
}

/// The training side of the nearest-neighbor classifier: labeled
/// ensembles, all sharing the same channel keys and order.
#[derive(Debug, Clone)]
pub struct Gallery {
    entries: Vec<GalleryEntry>,
    vocab: LabelVocab,
}

impl Gallery {
    pub fn new(
        members: Vec<Arc<EnsembleRepresentation>>,
        vocab: LabelVocab,
    ) -> Result<Self, ClassifyError> {
        if members.is_empty() {
            return Err(ClassifyError::EmptyGallery);
        }
        let keys: Vec<ChannelKey> = members[0].keys().copied().collect();
        let order = members[0].order();
        let mut entries = Vec::with_capacity(members.len());
        for m in members {
            let label_name = m
                .meta
                .label
                .as_deref()
                .ok_or_else(|| ClassifyError::MissingLabel(m.meta.id.clone()))?;
            let label = vocab.id(label_name)?;
            if m.order() != order {
                return Err(ClassifyError::ConfigMismatch(format!(
                    "member `{}` has order {} but gallery order is {}",
                    m.meta.id,
                    m.order().n(),
                    order.n()
                )));
            }
            let m_keys: Vec<ChannelKey> = m.keys().copied().collect();
            if m_keys != keys {
                return Err(ClassifyError::ConfigMismatch(format!(
                    "member `{}` has a different channel set",
                    m.meta.id
                )));
            }
            entries.push(GalleryEntry { ensemble: m, label });
        }
        Ok(Self { entries, vocab })
    }

    pub fn entries(&self) -> &[GalleryEntry] {
        &self.entries
    }

    pub fn vocab(&self) -> &LabelVocab {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn has_channel(&self, key: &ChannelKey) -> bool {
        self.entries[0].ensemble.channel(key).is_some()
    }
}

/// One channel's contribution to the vote. `label` is `None` when the
/// channel abstained (no usable dynamics on the query side, or no
/// informative gallery channel to compare against). `score` is the best
/// similarity for Hankel votes and the negated best DTW distance for raw
/// votes, so larger is always better.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelVote {
    pub key: ChannelKey,
    pub label: Option<LabelId>,
    pub score: f64,
}

impl ChannelVote {
    pub fn abstained(&self) -> bool {
        self.label.is_none()
    }

    fn abstain(key: ChannelKey) -> Self {
        Self { key, label: None, score: 0.0 }
    }
}

/// Which rule decided the final label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TieBreak {
    /// A single label had the strictly largest tally.
    Majority,
    /// Tally tie, resolved by the largest summed score among tied labels.
    ScoreSum { tied: Vec<LabelId> },
    /// Tally and score-sum tie, resolved by the lowest label index.
    LabelIndex { tied: Vec<LabelId> },
}

/// Final decision plus the full voting trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub label: LabelId,
    /// Votes per label id, aligned with the vocabulary.
    pub tally: Vec<u32>,
    pub votes: Vec<ChannelVote>,
    pub tie_break: TieBreak,
}

/// Nearest neighbor for one channel: the vote goes to the label of the
/// gallery member whose channel matrix maximizes the similarity score.
/// Similarity ties prefer the lower label id, then the earlier gallery
/// entry.
pub fn nn_channel(
    query: &ChannelDynamics,
    key: ChannelKey,
    gallery: &Gallery,
) -> Result<ChannelVote, ClassifyError> {
    if !gallery.has_channel(&key) {
        return Err(ClassifyError::EmptyGalleryChannel(key));
    }
    let query_matrix = match query.matrix() {
        Some(m) => m,
        None => return Ok(ChannelVote::abstain(key)),
    };
    let mut best: Option<(f64, LabelId)> = None;
    for entry in &gallery.entries {
        let candidate = match entry.ensemble.channel(&key) {
            Some(ChannelDynamics::Informative(h)) => h,
            Some(ChannelDynamics::Uninformative) => continue,
            None => return Err(ClassifyError::EmptyGalleryChannel(key)),
        };
        let s = similarity(query_matrix, candidate)?;
        let better = match best {
            None => true,
            Some((bs, bl)) => s > bs || (s == bs && entry.label < bl),
        };
        if better {
            best = Some((s, entry.label));
        }
    }
    Ok(match best {
        Some((score, label)) => ChannelVote { key, label: Some(label), score },
        // Every gallery member is uninformative on this channel.
        None => ChannelVote::abstain(key),
    })
}

/// Majority vote across channel votes with the documented deterministic
/// tie-break: tally, then summed score among tied labels, then lowest
/// label index.
pub fn majority_vote(votes: Vec<ChannelVote>, n_labels: usize) -> Result<Prediction, ClassifyError> {
    let mut tally = vec![0u32; n_labels];
    let mut score_sum = vec![0.0f64; n_labels];
    for v in &votes {
        if let Some(LabelId(l)) = v.label {
            tally[l] += 1;
            score_sum[l] += v.score;
        }
    }
    let top = match tally.iter().max() {
        Some(&m) if m > 0 => m,
        _ => return Err(ClassifyError::Undecidable),
    };
    let tied: Vec<LabelId> =
        (0..n_labels).filter(|&l| tally[l] == top).map(LabelId).collect();
    if tied.len() == 1 {
        return Ok(Prediction { label: tied[0], tally, votes, tie_break: TieBreak::Majority });
    }
    let best_sum = tied
        .iter()
        .map(|&LabelId(l)| score_sum[l])
        .fold(f64::NEG_INFINITY, f64::max);
    let by_score: Vec<LabelId> = tied
        .iter()
        .copied()
        .filter(|&LabelId(l)| score_sum[l] == best_sum)
        .collect();
    if by_score.len() == 1 {
        return Ok(Prediction {
            label: by_score[0],
            tally,
            votes,
            tie_break: TieBreak::ScoreSum { tied },
        });
    }
    Ok(Prediction {
        label: by_score[0],
        tally,
        votes,
        tie_break: TieBreak::LabelIndex { tied: by_score },
    })
}

/// Full ensemble classification: [`nn_channel`] over every channel of the
/// query, then [`majority_vote`].
pub fn classify(
    query: &EnsembleRepresentation,
    gallery: &Gallery,
) -> Result<Prediction, ClassifyError> {
    let gallery_keys: Vec<ChannelKey> = gallery.entries[0].ensemble.keys().copied().collect();
    let query_keys: Vec<ChannelKey> = query.keys().copied().collect();
    if query_keys != gallery_keys {
        return Err(ClassifyError::ConfigMismatch(
            "query and gallery have different channel sets".into(),
        ));
    }
    if query.order() != gallery.entries[0].ensemble.order() {
        return Err(ClassifyError::ConfigMismatch("query and gallery orders differ".into()));
    }
    let mut votes = Vec::with_capacity(query.channel_count());
    for (key, dynamics) in query.channels() {
        votes.push(nn_channel(dynamics, *key, gallery)?);
    }
    majority_vote(votes, gallery.vocab.len())
}

/// Classic dynamic time warping distance with Euclidean local cost,
/// symmetric match/insert/delete steps, no warping window, and anchored
/// endpoints. Returns the accumulated cost of the optimal path.
pub fn dtw_distance(a: &TimeSeries, b: &TimeSeries) -> Result<f64, ClassifyError> {
    if a.dim() != b.dim() {
        return Err(ClassifyError::IncompatibleSeries { da: a.dim(), db: b.dim() });
    }
    let (ta, tb) = (a.len(), b.len());
    let dist = |i: usize, j: usize| -> f64 {
        a.sample(i)
            .iter()
            .zip(b.sample(j))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut prev = vec![f64::INFINITY; tb + 1];
    let mut curr = vec![f64::INFINITY; tb + 1];
    prev[0] = 0.0;
    for i in 1..=ta {
        curr[0] = f64::INFINITY;
        for j in 1..=tb {
            let step = prev[j].min(curr[j - 1]).min(prev[j - 1]);
            curr[j] = dist(i - 1, j - 1) + step;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[tb])
}

/// A labeled raw-feature sequence for the DTW baseline. Channels are
/// expected to be zero-meaned with the same preprocessing as the Hankel
/// path.
#[derive(Debug, Clone)]
pub struct RawEntry {
    pub id: String,
    pub subject: String,
    pub label: LabelId,
    pub channels: BTreeMap<ChannelKey, TimeSeries>,
}

/// Gallery of raw channel series for the DTW + NN baseline.
#[derive(Debug, Clone)]
pub struct RawGallery {
    entries: Vec<Arc<RawEntry>>,
    vocab: LabelVocab,
}

impl RawGallery {
    pub fn new(entries: Vec<Arc<RawEntry>>, vocab: LabelVocab) -> Result<Self, ClassifyError> {
        if entries.is_empty() {
            return Err(ClassifyError::EmptyGallery);
        }
        let keys: Vec<ChannelKey> = entries[0].channels.keys().copied().collect();
        for e in &entries {
            let e_keys: Vec<ChannelKey> = e.channels.keys().copied().collect();
            if e_keys != keys {
                return Err(ClassifyError::ConfigMismatch(format!(
                    "entry `{}` has a different channel set",
                    e.id
                )));
            }
        }
        Ok(Self { entries, vocab })
    }

    pub fn entries(&self) -> &[Arc<RawEntry>] {
        &self.entries
    }

    pub fn vocab(&self) -> &LabelVocab {
        &self.vocab
    }
}

/// DTW baseline classification: per-channel nearest neighbor under
/// minimum DTW distance, then the same majority vote (vote scores are
/// negated distances, so tally ties resolve to the lowest summed
/// distance).
pub fn dtw_classify(
    query: &BTreeMap<ChannelKey, TimeSeries>,
    gallery: &RawGallery,
) -> Result<Prediction, ClassifyError> {
    let gallery_keys: Vec<ChannelKey> = gallery.entries[0].channels.keys().copied().collect();
    let query_keys: Vec<ChannelKey> = query.keys().copied().collect();
    if query_keys != gallery_keys {
        return Err(ClassifyError::ConfigMismatch(
            "query and gallery have different channel sets".into(),
        ));
    }
    let mut votes = Vec::with_capacity(query.len());
    for (key, series) in query {
        let mut best: Option<(f64, LabelId)> = None;
        for entry in &gallery.entries {
            let d = dtw_distance(series, &entry.channels[key])?;
            let better = match best {
                None => true,
                Some((bd, bl)) => d < bd || (d == bd && entry.label < bl),
            };
            if better {
                best = Some((d, entry.label));
            }
        }
        let (d, label) = best.expect("gallery is non-empty");
        votes.push(ChannelVote { key: *key, label: Some(label), score: -d });
    }
    majority_vote(votes, gallery.vocab.len())
}
