//! Dynamics representation: block-Hankel lifting of channel time series,
//! normalization, and the subspace-angle similarity score.
//!
//! A length-`T` series of `v`-vectors is lifted into a block-Hankel matrix
//! with `r = n + 1` block rows and `c = T - n` columns, block entry
//! `(a, b)` being sample `a + b`. The matrix is scaled so that the
//! Frobenius norm of its Gram matrix is one; two normalized matrices `Hp`,
//! `Hq` are compared with `s(Hp, Hq) = ||Hp' * Hq||_F`, which lies in
//! `[0, 1]` and approximates the cosine of the principal angle between
//! their column spaces. For the noise-free output of a linear
//! time-invariant system the column space is spanned by the observability
//! matrix, so the score measures whether two series could come from the
//! same dynamical system regardless of initial state.
//!
//! Ensembles serialize to a versioned binary record (`FDEN`, version 1):
//! header (id, subject, optional label, order, channel count), then per
//! channel `kind: u8`, `scale: u8`, `informative: u8` and, for informative
//! channels, `r`, `v`, `c` as `u32` followed by the `(r*v) x c` matrix as
//! row-major little-endian `f64` — bit-exact round trips.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appearance::{FeatureChannelSeries, SequenceFeatures, FEATURE_DIM};
use crate::wire::{self, Reader};

/// A channel series collapses to "no dynamics" when, after zero-meaning,
/// its largest magnitude is below this fraction of the raw series
/// magnitude. Zero-meaning a constant leaves residuals no larger than
/// about `T * eps` relative (~2e-14 at T = 71), so this floor separates
/// rounding dust from real, if tiny, dynamics.
const UNINFORMATIVE_RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("time series values ({got}) not divisible by dimension {dim}")]
    RaggedSeries { dim: usize, got: usize },
    #[error("time series must have dimension >= 1 and length >= 1")]
    EmptySeries,
    #[error("sample dimension {got} does not match series dimension {dim}")]
    DimMismatch { dim: usize, got: usize },
    #[error("sequence of length {len} too short for order {order} (needs at least order + 1)")]
    SequenceTooShort { len: usize, order: usize },
    #[error("matrix has no dynamics (zero after zero-meaning)")]
    ZeroDynamics,
    #[error("incompatible channels: {rows_p} vs {rows_q} rows")]
    IncompatibleChannels { rows_p: usize, rows_q: usize },
    #[error("similarity requires normalized matrices")]
    NotNormalized,
    #[error("invalid order: must be >= 1")]
    InvalidOrder,
    #[error("cannot decode ensemble: {0}")]
    Decode(String),
}

/// A uniformly sampled vector time series: `len` samples of dimension
/// `dim`, stored sample-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dim: usize,
    len: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self, DynamicsError> {
        if dim == 0 || values.is_empty() {
            return Err(DynamicsError::EmptySeries);
        }
        if !values.len().is_multiple_of(dim) {
            return Err(DynamicsError::RaggedSeries { dim, got: values.len() });
        }
        let len = values.len() / dim;
        Ok(Self { dim, len, values })
    }

    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self, DynamicsError> {
        let dim = samples.first().ok_or(DynamicsError::EmptySeries)?.len();
        let mut values = Vec::with_capacity(dim * samples.len());
        for s in samples {
            if s.len() != dim {
                return Err(DynamicsError::DimMismatch { dim, got: s.len() });
            }
            values.extend_from_slice(s);
        }
        Self::new(dim, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sample(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl From<&FeatureChannelSeries> for TimeSeries {
    fn from(ch: &FeatureChannelSeries) -> Self {
        TimeSeries {
            dim: FEATURE_DIM,
            len: ch.len(),
            values: ch.values().to_vec(),
        }
    }
}

/// Subtracts the per-coordinate temporal mean from every sample.
pub fn zero_mean(s: &TimeSeries) -> TimeSeries {
    let mut mean = vec![0.0; s.dim];
    for t in 0..s.len {
        for (m, &x) in mean.iter_mut().zip(s.sample(t)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= s.len as f64;
    }
    let mut values = Vec::with_capacity(s.values.len());
    for t in 0..s.len {
        for (x, m) in s.sample(t).iter().zip(&mean) {
            values.push(x - m);
        }
    }
    TimeSeries { dim: s.dim, len: s.len, values }
}

/// Maximal system order considered when lifting a series; the Hankel
/// matrix gets `order + 1` block rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct SystemOrder(usize);

impl TryFrom<usize> for SystemOrder {
    type Error = DynamicsError;

    fn try_from(n: usize) -> Result<Self, DynamicsError> {
        Self::new(n)
    }
}

impl From<SystemOrder> for usize {
    fn from(o: SystemOrder) -> usize {
        o.0
    }
}

impl SystemOrder {
    pub fn new(n: usize) -> Result<Self, DynamicsError> {
        if n == 0 {
            return Err(DynamicsError::InvalidOrder);
        }
        Ok(Self(n))
    }

    pub fn n(&self) -> usize {
        self.0
    }

    pub fn block_rows(&self) -> usize {
        self.0 + 1
    }
}

impl Default for SystemOrder {
    fn default() -> Self {
        Self(2)
    }
}

/// Block-Hankel lift of a time series, stored column-major (each column is
/// a contiguous window of `block_rows` consecutive samples).
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    block_rows: usize,
    block_dim: usize,
    cols: usize,
    values: Vec<f64>,
    normalized: bool,
}

impl HankelMatrix {
    /// Total row count `block_rows * block_dim`.
    pub fn rows(&self) -> usize {
        self.block_rows * self.block_dim
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn column(&self, b: usize) -> &[f64] {
        let rows = self.rows();
        &self.values[b * rows..(b + 1) * rows]
    }

    /// Block entry `(a, b)`: the `block_dim`-vector at block row `a`,
    /// column `b` (equal to sample `a + b` of the source series).
    pub fn block(&self, a: usize, b: usize) -> &[f64] {
        &self.column(b)[a * self.block_dim..(a + 1) * self.block_dim]
    }

    /// Dense row-major copy, for interop and tests.
    pub fn to_row_major(&self) -> Vec<f64> {
        let (rows, cols) = (self.rows(), self.cols);
        let mut out = vec![0.0; rows * cols];
        for b in 0..cols {
            for (i, &x) in self.column(b).iter().enumerate() {
                out[i * cols + b] = x;
            }
        }
        out
    }

    pub(crate) fn from_parts(
        block_rows: usize,
        block_dim: usize,
        cols: usize,
        values: Vec<f64>,
        normalized: bool,
    ) -> Self {
        debug_assert_eq!(values.len(), block_rows * block_dim * cols);
        Self { block_rows, block_dim, cols, values, normalized }
    }

    /// Frobenius norm of the Gram matrix `H * H'` (equal to that of
    /// `H' * H`; the smaller of the two is computed).
    pub fn gram_frobenius(&self) -> f64 {
        let (rows, cols) = (self.rows(), self.cols);
        let mut acc = 0.0;
        if cols <= rows {
            for a in 0..cols {
                let ca = self.column(a);
                for b in a..cols {
                    let dot: f64 = ca.iter().zip(self.column(b)).map(|(x, y)| x * y).sum();
                    acc += if a == b { dot * dot } else { 2.0 * dot * dot };
                }
            }
        } else {
            for i in 0..rows {
                for j in i..rows {
                    let mut dot = 0.0;
                    for b in 0..cols {
                        let col = self.column(b);
                        dot += col[i] * col[j];
                    }
                    acc += if i == j { dot * dot } else { 2.0 * dot * dot };
                }
            }
        }
        acc.sqrt()
    }
}

/// Builds the (unnormalized) block-Hankel matrix of `s` with `n + 1` block
/// rows and `T - n` columns; block entry `(a, b)` is sample `a + b`, so
/// every sample is consumed and `block_rows + cols - 1 = T`.
pub fn build_hankel(s: &TimeSeries, order: SystemOrder) -> Result<HankelMatrix, DynamicsError> {
    let n = order.n();
    if s.len <= n {
        return Err(DynamicsError::SequenceTooShort { len: s.len, order: n });
    }
    let block_rows = n + 1;
    let cols = s.len - n;
    let rows = block_rows * s.dim;
    let mut values = Vec::with_capacity(rows * cols);
    for b in 0..cols {
        values.extend_from_slice(&s.values[b * s.dim..(b + block_rows) * s.dim]);
    }
    Ok(HankelMatrix { block_rows, block_dim: s.dim, cols, values, normalized: false })
}

/// Scales `h` by `1 / sqrt(||H * H'||_F)` so the normalized matrix has a
/// unit-Frobenius Gram matrix.
pub fn normalize(h: &HankelMatrix) -> Result<HankelMatrix, DynamicsError> {
    let gram = h.gram_frobenius();
    if gram <= 0.0 {
        return Err(DynamicsError::ZeroDynamics);
    }
    let factor = 1.0 / gram.sqrt();
    Ok(HankelMatrix {
        block_rows: h.block_rows,
        block_dim: h.block_dim,
        cols: h.cols,
        values: h.values.iter().map(|x| x * factor).collect(),
        normalized: true,
    })
}

/// Similarity score `||Hp' * Hq||_F` between two normalized Hankel
/// matrices. Symmetric, in `[0, 1]`, and 1 exactly when the two matrices
/// have identical Gram matrices (same observability subspace, equally
/// excited).
pub fn similarity(hp: &HankelMatrix, hq: &HankelMatrix) -> Result<f64, DynamicsError> {
    if !hp.normalized || !hq.normalized {
        return Err(DynamicsError::NotNormalized);
    }
    if hp.rows() != hq.rows() {
        return Err(DynamicsError::IncompatibleChannels { rows_p: hp.rows(), rows_q: hq.rows() });
    }
    let mut acc = 0.0;
    for a in 0..hp.cols {
        let ca = hp.column(a);
        for b in 0..hq.cols {
            let dot: f64 = ca.iter().zip(hq.column(b)).map(|(x, y)| x * y).sum();
            acc += dot * dot;
        }
    }
    Ok(acc.sqrt())
}

/// Identifies one feature channel: for appearance channels `kind` is the
/// Haar kind id and `scale` the scale index; synthetic data may use any
/// small integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelKey {
    pub kind: u8,
    pub scale: u8,
}

impl ChannelKey {
    pub fn new(kind: u8, scale: u8) -> Self {
        Self { kind, scale }
    }

    pub fn for_feature(ch: &FeatureChannelSeries) -> Self {
        Self { kind: ch.kind.id(), scale: ch.scale_index }
    }
}

impl std::fmt::Display for ChannelKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.kind, self.scale)
    }
}

/// Per-channel outcome of the lift: a normalized Hankel matrix, or a
/// marker for channels with no usable dynamics (constant in time). Such
/// channels stay in the ensemble so the channel set is stable, but they
/// abstain from classification.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelDynamics {
    Informative(HankelMatrix),
    Uninformative,
}

impl ChannelDynamics {
    pub fn matrix(&self) -> Option<&HankelMatrix> {
        match self {
            ChannelDynamics::Informative(h) => Some(h),
            ChannelDynamics::Uninformative => None,
        }
    }
}

/// Identity of a sequence inside a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub id: String,
    pub subject: String,
    pub label: Option<String>,
}

/// The classification object: one normalized Hankel matrix per feature
/// channel, plus sequence identity.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRepresentation {
    pub meta: SequenceMeta,
    order: SystemOrder,
    channels: BTreeMap<ChannelKey, ChannelDynamics>,
}

impl EnsembleRepresentation {
    #[cfg(test)]
    pub(crate) fn from_raw_parts(
        meta: SequenceMeta,
        order: SystemOrder,
        channels: BTreeMap<ChannelKey, ChannelDynamics>,
    ) -> Self {
        Self { meta, order, channels }
    }

    pub fn order(&self) -> SystemOrder {
        self.order
    }

    pub fn channels(&self) -> impl Iterator<Item = (&ChannelKey, &ChannelDynamics)> {
        self.channels.iter()
    }

    pub fn channel(&self, key: &ChannelKey) -> Option<&ChannelDynamics> {
        self.channels.get(key)
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &ChannelKey> {
        self.channels.keys()
    }
}

/// Lifts every channel series into a normalized Hankel matrix: zero-mean
/// first, then build and normalize. Channels that are constant in time
/// become [`ChannelDynamics::Uninformative`] instead of failing the whole
/// sequence.
pub fn build_ensemble(
    channels: impl IntoIterator<Item = (ChannelKey, TimeSeries)>,
    order: SystemOrder,
    meta: SequenceMeta,
) -> Result<EnsembleRepresentation, DynamicsError> {
    let mut out = BTreeMap::new();
    for (key, series) in channels {
        let raw_peak = series.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let centered = zero_mean(&series);
        let peak = centered.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if peak <= UNINFORMATIVE_RELATIVE_FLOOR * raw_peak || peak == 0.0 {
            // Sequence length must still be checked so short sequences are
            // rejected rather than silently marked uninformative.
            if series.len() <= order.n() {
                return Err(DynamicsError::SequenceTooShort { len: series.len(), order: order.n() });
            }
            out.insert(key, ChannelDynamics::Uninformative);
            continue;
        }
        let hankel = build_hankel(&centered, order)?;
        match normalize(&hankel) {
            Ok(h) => out.insert(key, ChannelDynamics::Informative(h)),
            Err(DynamicsError::ZeroDynamics) => out.insert(key, ChannelDynamics::Uninformative),
            Err(e) => return Err(e),
        };
    }
    Ok(EnsembleRepresentation { meta, order, channels: out })
}

/// Convenience wrapper over [`build_ensemble`] for extracted appearance
/// features.
pub fn build_ensemble_from_features(
    features: &SequenceFeatures,
    order: SystemOrder,
    meta: SequenceMeta,
) -> Result<EnsembleRepresentation, DynamicsError> {
    build_ensemble(
        features
            .channels
            .iter()
            .map(|ch| (ChannelKey::for_feature(ch), TimeSeries::from(ch))),
        order,
        meta,
    )
}

const ENSEMBLE_MAGIC: &[u8; 4] = b"FDEN";
const ENSEMBLE_VERSION: u32 = 1;

impl EnsembleRepresentation {
    /// Serializes to the versioned binary record described in the module
    /// docs. Round trips are bit-exact in double precision.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(ENSEMBLE_MAGIC);
        wire::put_u32(&mut buf, ENSEMBLE_VERSION);
        wire::put_str(&mut buf, &self.meta.id);
        wire::put_str(&mut buf, &self.meta.subject);
        match &self.meta.label {
            Some(l) => {
                buf.push(1);
                wire::put_str(&mut buf, l);
            }
            None => buf.push(0),
        }
        wire::put_u32(&mut buf, self.order.n() as u32);
        wire::put_u32(&mut buf, self.channels.len() as u32);
        for (key, dynamics) in &self.channels {
            buf.push(key.kind);
            buf.push(key.scale);
            match dynamics {
                ChannelDynamics::Uninformative => buf.push(0),
                ChannelDynamics::Informative(h) => {
                    buf.push(1);
                    wire::put_u32(&mut buf, h.block_rows as u32);
                    wire::put_u32(&mut buf, h.block_dim as u32);
                    wire::put_u32(&mut buf, h.cols as u32);
                    for x in h.to_row_major() {
                        wire::put_f64(&mut buf, x);
                    }
                }
            }
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DynamicsError> {
        let mut r = Reader::new(bytes);
        let magic = r.take(4).map_err(DynamicsError::Decode)?;
        if magic != ENSEMBLE_MAGIC {
            return Err(DynamicsError::Decode("bad magic, not an ensemble record".into()));
        }
        let version = r.u32().map_err(DynamicsError::Decode)?;
        if version != ENSEMBLE_VERSION {
            return Err(DynamicsError::Decode(format!("unsupported version {version}")));
        }
        let id = r.string().map_err(DynamicsError::Decode)?;
        let subject = r.string().map_err(DynamicsError::Decode)?;
        let label = match r.u8().map_err(DynamicsError::Decode)? {
            0 => None,
            1 => Some(r.string().map_err(DynamicsError::Decode)?),
            other => return Err(DynamicsError::Decode(format!("bad label flag {other}"))),
        };
        let order = SystemOrder::new(r.u32().map_err(DynamicsError::Decode)? as usize)
            .map_err(|_| DynamicsError::Decode("order must be >= 1".into()))?;
        let count = r.u32().map_err(DynamicsError::Decode)?;
        let mut channels = BTreeMap::new();
        for _ in 0..count {
            let kind = r.u8().map_err(DynamicsError::Decode)?;
            let scale = r.u8().map_err(DynamicsError::Decode)?;
            let key = ChannelKey::new(kind, scale);
            let dynamics = match r.u8().map_err(DynamicsError::Decode)? {
                0 => ChannelDynamics::Uninformative,
                1 => {
                    let block_rows = r.u32().map_err(DynamicsError::Decode)? as usize;
                    let block_dim = r.u32().map_err(DynamicsError::Decode)? as usize;
                    let cols = r.u32().map_err(DynamicsError::Decode)? as usize;
                    let rows = block_rows * block_dim;
                    if rows == 0 || cols == 0 {
                        return Err(DynamicsError::Decode("empty matrix in record".into()));
                    }
                    let mut row_major = Vec::with_capacity(rows * cols);
                    for _ in 0..rows * cols {
                        row_major.push(r.f64().map_err(DynamicsError::Decode)?);
                    }
                    let mut values = vec![0.0; rows * cols];
                    for i in 0..rows {
                        for b in 0..cols {
                            values[b * rows + i] = row_major[i * cols + b];
                        }
                    }
                    ChannelDynamics::Informative(HankelMatrix::from_parts(
                        block_rows, block_dim, cols, values, true,
                    ))
                }
                other => return Err(DynamicsError::Decode(format!("bad channel flag {other}"))),
            };
            if channels.insert(key, dynamics).is_some() {
                return Err(DynamicsError::Decode(format!("duplicate channel {key}")));
            }
        }
        Ok(EnsembleRepresentation {
            meta: SequenceMeta { id, subject, label },
            order,
            channels,
        })
    }
}
