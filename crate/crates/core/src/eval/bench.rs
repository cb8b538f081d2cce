//! Seeded synthetic classification benchmarks.
//!
//! For every channel a base family of damped rotations is drawn; class
//! `k` shifts each rotation angle by `k * class_separation` while the
//! damping, the output matrix, and any shared real pole stay identical.
//! Classes therefore differ only in their dynamics. Each sequence draws
//! its own initial state with a log-uniform amplitude, so raw
//! trajectories of one class vary wildly in phase and scale while their
//! underlying system is fixed — the regime the Hankel representation is
//! built for and raw-feature DTW is not.

use serde::{Deserialize, Serialize};

use super::synth::{InitialState, SyntheticSystem};
use super::{evaluate_channels, EvalError, Evaluation, Method, SequenceChannels};
use crate::classify::LabelVocab;
use crate::dynamics::{ChannelKey, SystemOrder};
use crate::rng::SplitMix64;

pub const BENCH_SPEC_VERSION: u32 = 1;

/// Declarative benchmark description; serializable so runs are fully
/// reproducible from a spec file plus nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub version: u32,
    pub classes: usize,
    pub sequences_per_class: usize,
    pub channels: usize,
    pub state_dim: usize,
    pub output_dim: usize,
    pub t_min: usize,
    pub t_max: usize,
    /// Process-noise standard deviations to sweep, low to high.
    pub noise_levels: Vec<f64>,
    pub seed: u64,
    pub order: usize,
    /// Rotation-angle offset between consecutive classes, in radians.
    pub class_separation: f64,
    /// Per-sequence initial-state amplitude is log-uniform in
    /// `[1/spread, spread]`.
    pub amplitude_spread: f64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            version: BENCH_SPEC_VERSION,
            classes: 3,
            sequences_per_class: 10,
            channels: 4,
            state_dim: 2,
            output_dim: 3,
            t_min: 18,
            t_max: 24,
            noise_levels: vec![0.0, 0.2, 0.5],
            seed: 42,
            order: 2,
            class_separation: 0.2,
            amplitude_spread: 3.0,
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let fail = |msg: String| Err(EvalError::BadBenchSpec(msg));
        if self.version != BENCH_SPEC_VERSION {
            return fail(format!("unsupported spec version {}", self.version));
        }
        if self.classes < 2 {
            return fail("need at least 2 classes".into());
        }
        if self.sequences_per_class < 2 {
            return fail("need at least 2 sequences per class".into());
        }
        if self.channels == 0 || self.channels > 256 {
            return fail("channels must be in 1..=256".into());
        }
        if self.state_dim < 2 || self.output_dim == 0 {
            // Classes differ in rotation angles, so at least one 2x2
            // rotation block must exist.
            return fail("state dim must be >= 2 and output dim >= 1".into());
        }
        if self.order == 0 {
            return fail("order must be >= 1".into());
        }
        if self.t_min <= self.order || self.t_min > self.t_max {
            return fail(format!(
                "sequence lengths must satisfy order < t_min <= t_max, got {} <= {} for order {}",
                self.t_min, self.t_max, self.order
            ));
        }
        if self.noise_levels.is_empty() {
            return fail("need at least one noise level".into());
        }
        for &n in &self.noise_levels {
            if !(n >= 0.0 && n.is_finite()) {
                return fail(format!("bad noise level {n}"));
            }
        }
        // NaN fails this check too, hence the negation.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.class_separation > 0.0) {
            return fail("class separation must be positive".into());
        }
        // Shifted angles must stay inside (0, pi) so classes remain
        // distinct systems; base angles are drawn from [0.9, 1.9].
        if 1.9 + (self.classes - 1) as f64 * self.class_separation >= 3.0 {
            return fail(format!(
                "class separation {} too large for {} classes",
                self.class_separation, self.classes
            ));
        }
        if !(self.amplitude_spread >= 1.0 && self.amplitude_spread.is_finite()) {
            return fail("amplitude spread must be >= 1".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let spec: BenchSpec = serde_json::from_str(text)
            .map_err(|e| EvalError::BadBenchSpec(format!("cannot parse spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn label_vocab(&self) -> LabelVocab {
        LabelVocab::new((0..self.classes).map(|k| format!("class{k}")).collect())
            .expect("generated names are unique")
    }
}

/// Both methods evaluated on one generated dataset.
#[derive(Debug, Clone, Serialize)]
pub struct LevelOutcome {
    pub noise_std: f64,
    pub hankel: Evaluation,
    pub dtw: Evaluation,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchOutcome {
    pub spec: BenchSpec,
    pub levels: Vec<LevelOutcome>,
}

/// Generates the labeled sequences for one noise level. Each sequence is
/// its own subject, so leave-one-subject-out degenerates to leave-one-out.
pub fn generate_dataset(
    spec: &BenchSpec,
    noise_std: f64,
) -> Result<Vec<SequenceChannels>, EvalError> {
    spec.validate()?;
    let base = SplitMix64::new(spec.seed);

    // Per channel: a family of systems that differ across classes only in
    // their rotation angles (damping, real pole and output matrix shared).
    let u = spec.state_dim;
    let mut class_systems: Vec<Vec<SyntheticSystem>> =
        vec![Vec::with_capacity(spec.channels); spec.classes];
    for ch in 0..spec.channels {
        let mut stream = base.fork(0xc4a).fork(ch as u64);
        let n_blocks = u / 2;
        let rhos: Vec<f64> = (0..n_blocks).map(|_| stream.range_f64(0.95, 0.985)).collect();
        let thetas: Vec<f64> = (0..n_blocks).map(|_| stream.range_f64(0.9, 1.9)).collect();
        let real_pole = stream.range_f64(0.95, 0.985);
        let c: Vec<f64> = (0..spec.output_dim * u).map(|_| stream.normal()).collect();
        for (k, systems) in class_systems.iter_mut().enumerate() {
            let mut a = vec![0.0; u * u];
            for b in 0..n_blocks {
                let i = 2 * b;
                let theta = thetas[b] + k as f64 * spec.class_separation;
                a[i * u + i] = rhos[b] * theta.cos();
                a[i * u + i + 1] = -rhos[b] * theta.sin();
                a[(i + 1) * u + i] = rhos[b] * theta.sin();
                a[(i + 1) * u + i + 1] = rhos[b] * theta.cos();
            }
            if u % 2 == 1 {
                a[(u - 1) * u + (u - 1)] = real_pole;
            }
            systems.push(SyntheticSystem::new(
                u,
                spec.output_dim,
                a,
                c.clone(),
                noise_std,
                InitialState::Gaussian { std: 1.0 },
                0,
            )?);
        }
    }

    let vocab = spec.label_vocab();
    let mut data = Vec::with_capacity(spec.classes * spec.sequences_per_class);
    for (k, (systems, label)) in class_systems.iter().zip(vocab.names()).enumerate() {
        for i in 0..spec.sequences_per_class {
            let mut seq_stream = base.fork(0x5e9).fork(k as u64).fork(i as u64);
            let t = seq_stream.range_usize(spec.t_min, spec.t_max);
            // One amplitude per sequence, log-uniform in [1/spread, spread].
            let amplitude = spec.amplitude_spread.powf(seq_stream.range_f64(-1.0, 1.0));
            let mut channels = Vec::with_capacity(spec.channels);
            for (ch, sys) in systems.iter().enumerate() {
                let sample_seed = seq_stream.fork(ch as u64).next_u64();
                let series = sys
                    .with_seed(sample_seed)
                    .with_init(InitialState::Gaussian { std: amplitude })
                    .generate(t)?;
                channels.push((ChannelKey::new(ch as u8, 0), series));
            }
            data.push(SequenceChannels {
                id: format!("{label}-{i}"),
                subject: format!("synth-{k}-{i}"),
                label: label.clone(),
                channels,
            });
        }
    }
    Ok(data)
}

/// Runs the full benchmark: for every noise level, generate one dataset
/// and evaluate both methods on it with leave-one-subject-out folds.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchOutcome, EvalError> {
    spec.validate()?;
    let order = SystemOrder::new(spec.order).map_err(EvalError::from)?;
    let vocab = spec.label_vocab();
    let mut levels = Vec::with_capacity(spec.noise_levels.len());
    for &noise_std in &spec.noise_levels {
        let data = generate_dataset(spec, noise_std)?;
        let hankel = evaluate_channels(&data, &vocab, Method::Hankel, order)?;
        let dtw = evaluate_channels(&data, &vocab, Method::Dtw, order)?;
        levels.push(LevelOutcome { noise_std, hankel, dtw });
    }
    Ok(BenchOutcome { spec: spec.clone(), levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation_catches_mistakes() {
        assert!(BenchSpec::default().validate().is_ok());
        assert!(BenchSpec { classes: 1, ..BenchSpec::default() }.validate().is_err());
        // Order 2 needs at least 3 samples.
        assert!(BenchSpec { t_min: 2, ..BenchSpec::default() }.validate().is_err());
        assert!(BenchSpec { noise_levels: vec![-0.1], ..BenchSpec::default() }
            .validate()
            .is_err());
        assert!(BenchSpec { version: 9, ..BenchSpec::default() }.validate().is_err());
        assert!(BenchSpec { class_separation: 0.0, ..BenchSpec::default() }.validate().is_err());
        assert!(BenchSpec { amplitude_spread: 0.5, ..BenchSpec::default() }.validate().is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = BenchSpec::default();
        let text = serde_json::to_string(&spec).unwrap();
        let back = BenchSpec::from_json(&text).unwrap();
        assert_eq!(spec, back);
        assert!(BenchSpec::from_json("{}").is_err());
    }

    #[test]
    fn dataset_is_deterministic_and_shaped() {
        let spec = BenchSpec { sequences_per_class: 3, ..BenchSpec::default() };
        let a = generate_dataset(&spec, 0.1).unwrap();
        let b = generate_dataset(&spec, 0.1).unwrap();
        assert_eq!(a.len(), 9);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.subject, y.subject);
            for ((ka, ta), (kb, tb)) in x.channels.iter().zip(&y.channels) {
                assert_eq!(ka, kb);
                assert_eq!(ta.values(), tb.values());
            }
        }
        // Sequences of one class share systems but not trajectories.
        assert_ne!(
            a[0].channels[0].1.values(),
            a[1].channels[0].1.values(),
            "different initial states must differ"
        );
        for s in &a {
            assert_eq!(s.channels.len(), spec.channels);
            let t = s.channels[0].1.len();
            assert!((spec.t_min..=spec.t_max).contains(&t));
            assert!(s.channels.iter().all(|(_, ts)| ts.len() == t));
        }
    }

    #[test]
    fn noise_level_changes_data_but_not_shape() {
        let spec = BenchSpec { sequences_per_class: 2, ..BenchSpec::default() };
        let clean = generate_dataset(&spec, 0.0).unwrap();
        let noisy = generate_dataset(&spec, 0.3).unwrap();
        assert_eq!(clean.len(), noisy.len());
        assert_ne!(clean[0].channels[0].1.values(), noisy[0].channels[0].1.values());
    }

    #[test]
    fn noise_free_benchmark_is_perfect_for_hankel() {
        let spec = BenchSpec {
            sequences_per_class: 4,
            channels: 2,
            noise_levels: vec![0.0],
            ..BenchSpec::default()
        };
        let outcome = run_bench(&spec).unwrap();
        let level = &outcome.levels[0];
        assert!(
            (level.hankel.accuracy.average_pct - 100.0).abs() < 1e-9,
            "hankel accuracy {}",
            level.hankel.accuracy.average_pct
        );
    }
}
