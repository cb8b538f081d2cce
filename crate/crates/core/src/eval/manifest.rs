//! Dataset manifests and leave-one-subject-out folds.
//!
//! A manifest is line-oriented JSON: a header object followed by one
//! record per sequence.
//!
//! ```text
//! {"format":"facedyn-manifest","version":1,"labels":["angry","happy"]}
//! {"id":"S01_a","subject":"S01","label":"happy","frames":["S01/a/1.png"],"box":[10,20,100,120]}
//! {"id":"S02_b","subject":"S02","label":"angry","frames":["S02/b/1.png","S02/b/2.png"],"frame_boxes":[[1,2,64,64],[3,2,64,64]]}
//! ```
//!
//! `labels` is optional and defaults to the seven CK+ emotions. Each
//! record carries either one `box` applied to all frames or `frame_boxes`
//! with one box per frame (both are `[x, y, w, h]` in pixels). Frame paths
//! resolve relative to the manifest location. Loading is atomic: every
//! problem is collected into one itemized ingestion report and nothing is
//! returned on failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::appearance::FaceRegion;
use crate::cache::fnv1a;
use crate::classify::LabelVocab;
use crate::dynamics::SystemOrder;

pub const MANIFEST_FORMAT: &str = "facedyn-manifest";
pub const MANIFEST_VERSION: u32 = 1;

/// Face region assignment for a sequence: one box for all frames, or one
/// box per frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionSpec {
    PerSequence(FaceRegion),
    PerFrame(Vec<FaceRegion>),
}

/// One labeled sequence of frame paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceEntry {
    pub id: String,
    pub subject: String,
    pub label: String,
    pub frames: Vec<PathBuf>,
    pub regions: RegionSpec,
}

impl SequenceEntry {
    pub fn region_for_frame(&self, index: usize) -> &FaceRegion {
        match &self.regions {
            RegionSpec::PerSequence(r) => r,
            RegionSpec::PerFrame(rs) => &rs[index],
        }
    }
}

/// A validated dataset: sequences, the label vocabulary, and the hash that
/// keys the feature cache.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    entries: Vec<SequenceEntry>,
    vocab: LabelVocab,
    source_hash: u64,
}

#[derive(Deserialize)]
struct HeaderLine {
    format: String,
    version: u32,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    id: String,
    subject: String,
    label: String,
    frames: Vec<String>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    seq_box: Option<[i64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame_boxes: Option<Vec<[i64; 4]>>,
}

fn parse_box(raw: [i64; 4]) -> Result<FaceRegion, String> {
    let [x, y, w, h] = raw;
    if x < 0 || y < 0 || w < 0 || h < 0 {
        return Err(format!("box [{x},{y},{w},{h}] has negative components"));
    }
    FaceRegion::new(x as usize, y as usize, w as usize, h as usize).map_err(|e| e.to_string())
}

impl DatasetManifest {
    /// Parses and validates a manifest file. `order` determines the
    /// minimum usable sequence length (`order + 1` frames).
    pub fn load(path: &Path, order: SystemOrder) -> Result<Self, EvalError> {
        let bytes = fs::read(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| EvalError::ingestion(vec!["manifest is not valid utf-8".into()]))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));

        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

        let mut issues: Vec<String> = Vec::new();
        let header = match lines.next() {
            None => return Err(EvalError::ingestion(vec!["manifest is empty".into()])),
            Some((n, line)) => match serde_json::from_str::<HeaderLine>(line) {
                Ok(h) => h,
                Err(e) => {
                    return Err(EvalError::ingestion(vec![format!(
                        "line {}: cannot parse header: {e}",
                        n + 1
                    )]))
                }
            },
        };
        if header.format != MANIFEST_FORMAT {
            issues.push(format!("unknown manifest format `{}`", header.format));
        }
        if header.version != MANIFEST_VERSION {
            issues.push(format!("unsupported manifest version {}", header.version));
        }
        let vocab = match header.labels {
            None => LabelVocab::ck_emotions(),
            Some(names) => match LabelVocab::new(names) {
                Ok(v) => v,
                Err(e) => {
                    issues.push(format!("bad label vocabulary: {e}"));
                    LabelVocab::ck_emotions()
                }
            },
        };

        let mut entries = Vec::new();
        for (n, line) in lines {
            let lineno = n + 1;
            let record: RecordLine = match serde_json::from_str(line) {
                Ok(r) => r,
                Err(e) => {
                    issues.push(format!("line {lineno}: cannot parse record: {e}"));
                    continue;
                }
            };
            // A record with a bad box still takes part in the remaining
            // validation (duplicates, labels, lengths, frame existence)
            // under a placeholder region; the pushed issue already
            // guarantees the load fails.
            let placeholder = RegionSpec::PerSequence(
                FaceRegion::new(0, 0, crate::appearance::MIN_REGION_SIDE, crate::appearance::MIN_REGION_SIDE)
                    .expect("placeholder region is valid"),
            );
            let regions = match (record.seq_box, &record.frame_boxes) {
                (Some(_), Some(_)) => {
                    issues.push(format!(
                        "line {lineno} (`{}`): both `box` and `frame_boxes` given",
                        record.id
                    ));
                    placeholder
                }
                (None, None) => {
                    issues.push(format!(
                        "line {lineno} (`{}`): needs `box` or `frame_boxes`",
                        record.id
                    ));
                    placeholder
                }
                (Some(b), None) => match parse_box(b) {
                    Ok(r) => RegionSpec::PerSequence(r),
                    Err(e) => {
                        issues.push(format!("line {lineno} (`{}`): {e}", record.id));
                        placeholder
                    }
                },
                (None, Some(bs)) => {
                    if bs.len() != record.frames.len() {
                        issues.push(format!(
                            "line {lineno} (`{}`): {} frame_boxes for {} frames",
                            record.id,
                            bs.len(),
                            record.frames.len()
                        ));
                        placeholder
                    } else {
                        let mut regions = Vec::with_capacity(bs.len());
                        let mut ok = true;
                        for (i, &b) in bs.iter().enumerate() {
                            match parse_box(b) {
                                Ok(r) => regions.push(r),
                                Err(e) => {
                                    issues.push(format!(
                                        "line {lineno} (`{}`), frame {i}: {e}",
                                        record.id
                                    ));
                                    ok = false;
                                }
                            }
                        }
                        if ok {
                            RegionSpec::PerFrame(regions)
                        } else {
                            placeholder
                        }
                    }
                }
            };
            let frames: Vec<PathBuf> = record.frames.iter().map(|f| base.join(f)).collect();
            for f in &frames {
                if !f.is_file() {
                    issues.push(format!(
                        "line {lineno} (`{}`): missing frame {}",
                        record.id,
                        f.display()
                    ));
                }
            }
            entries.push(SequenceEntry {
                id: record.id,
                subject: record.subject,
                label: record.label,
                frames,
                regions,
            });
        }

        issues.extend(validate_entries(&entries, &vocab, order));
        if !issues.is_empty() {
            return Err(EvalError::ingestion(issues));
        }
        Ok(Self { entries, vocab, source_hash: fnv1a(&bytes) })
    }

    /// Builds a manifest from in-memory entries (no file-existence checks);
    /// used by synthetic pipelines and tests. The cache hash is computed
    /// over a canonical serialization of the entries.
    pub fn from_entries(
        entries: Vec<SequenceEntry>,
        vocab: LabelVocab,
        order: SystemOrder,
    ) -> Result<Self, EvalError> {
        let issues = validate_entries(&entries, &vocab, order);
        if !issues.is_empty() {
            return Err(EvalError::ingestion(issues));
        }
        let mut canonical = String::new();
        for e in &entries {
            canonical.push_str(&render_record(e));
            canonical.push('\n');
        }
        Ok(Self { entries, vocab, source_hash: fnv1a(canonical.as_bytes()) })
    }

    pub fn entries(&self) -> &[SequenceEntry] {
        &self.entries
    }

    pub fn vocab(&self) -> &LabelVocab {
        &self.vocab
    }

    /// Hash keying the feature cache together with the extraction config.
    pub fn source_hash(&self) -> u64 {
        self.source_hash
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn subjects(&self) -> Vec<String> {
        let mut subjects: Vec<String> = self.entries.iter().map(|e| e.subject.clone()).collect();
        subjects.sort();
        subjects.dedup();
        subjects
    }
}

fn render_record(e: &SequenceEntry) -> String {
    let (seq_box, frame_boxes) = match &e.regions {
        RegionSpec::PerSequence(r) => {
            (Some([r.x as i64, r.y as i64, r.w as i64, r.h as i64]), None)
        }
        RegionSpec::PerFrame(rs) => (
            None,
            Some(rs.iter().map(|r| [r.x as i64, r.y as i64, r.w as i64, r.h as i64]).collect()),
        ),
    };
    serde_json::to_string(&RecordLine {
        id: e.id.clone(),
        subject: e.subject.clone(),
        label: e.label.clone(),
        frames: e.frames.iter().map(|f| f.display().to_string()).collect(),
        seq_box,
        frame_boxes,
    })
    .expect("manifest records serialize")
}

fn validate_entries(
    entries: &[SequenceEntry],
    vocab: &LabelVocab,
    order: SystemOrder,
) -> Vec<String> {
    let mut issues = Vec::new();
    if entries.is_empty() {
        issues.push("manifest has no sequences".into());
    }
    let mut seen = std::collections::BTreeSet::new();
    for e in entries {
        if !seen.insert(e.id.clone()) {
            issues.push(format!("duplicate sequence id `{}`", e.id));
        }
        if e.subject.is_empty() {
            issues.push(format!("sequence `{}` has an empty subject id", e.id));
        }
        if vocab.id(&e.label).is_err() {
            issues.push(format!("sequence `{}` has unknown label `{}`", e.id, e.label));
        }
        let min_frames = order.n() + 1;
        if e.frames.len() < min_frames {
            issues.push(format!(
                "sequence `{}` too short: {} frames, order {} needs at least {}",
                e.id,
                e.frames.len(),
                order.n(),
                min_frames
            ));
        }
        if let RegionSpec::PerFrame(rs) = &e.regions {
            if rs.len() != e.frames.len() {
                issues.push(format!(
                    "sequence `{}`: {} frame boxes for {} frames",
                    e.id,
                    rs.len(),
                    e.frames.len()
                ));
            }
        }
    }
    issues
}

/// One leave-one-subject-out fold: the held-out subject's sequences form
/// the test side, everything else the training side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fold {
    pub subject: String,
    pub test_ids: Vec<String>,
    pub train_ids: Vec<String>,
}

/// One fold per distinct subject, ordered by subject id. The folds
/// partition the dataset exactly: no subject ever appears on both sides.
pub fn loso_folds(manifest: &DatasetManifest) -> Result<Vec<Fold>, EvalError> {
    let pairs: Vec<(&str, &str)> =
        manifest.entries.iter().map(|e| (e.id.as_str(), e.subject.as_str())).collect();
    subject_folds(&pairs)
}

/// Shared fold construction over (sequence id, subject id) pairs.
pub(crate) fn subject_folds(pairs: &[(&str, &str)]) -> Result<Vec<Fold>, EvalError> {
    let mut by_subject: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, subject) in pairs {
        by_subject.entry(subject).or_default().push(id);
    }
    if by_subject.len() < 2 {
        return Err(EvalError::Protocol(format!(
            "leave-one-subject-out needs at least 2 subjects, got {}",
            by_subject.len()
        )));
    }
    Ok(by_subject
        .iter()
        .map(|(subject, test_ids)| Fold {
            subject: subject.to_string(),
            test_ids: test_ids.iter().map(|s| s.to_string()).collect(),
            train_ids: pairs
                .iter()
                .filter(|(_, s)| s != subject)
                .map(|(id, _)| id.to_string())
                .collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;
    use std::io::Write;

    fn entry(id: &str, subject: &str, label: &str, n_frames: usize) -> SequenceEntry {
        SequenceEntry {
            id: id.into(),
            subject: subject.into(),
            label: label.into(),
            frames: (0..n_frames).map(|i| PathBuf::from(format!("{id}/{i}.png"))).collect(),
            regions: RegionSpec::PerSequence(FaceRegion::new(0, 0, 64, 64).unwrap()),
        }
    }

    fn write_manifest(dir: &Path, lines: &[String]) -> PathBuf {
        fs::create_dir_all(dir).unwrap();
        let path = dir.join("manifest.jsonl");
        let mut f = fs::File::create(&path).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        path
    }

    fn touch(path: &Path) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::File::create(path).unwrap();
    }

    #[test]
    fn well_formed_manifest_loads() {
        let dir = std::env::temp_dir().join(format!("facedyn-manifest-{}", std::process::id()));
        for id in ["a", "b", "c"] {
            touch(&dir.join(format!("{id}/0.png")));
            touch(&dir.join(format!("{id}/1.png")));
            touch(&dir.join(format!("{id}/2.png")));
        }
        let path = write_manifest(
            &dir,
            &[
                r#"{"format":"facedyn-manifest","version":1}"#.into(),
                r#"{"id":"a","subject":"s1","label":"happy","frames":["a/0.png","a/1.png","a/2.png"],"box":[0,0,64,64]}"#.into(),
                "# a comment".into(),
                r#"{"id":"b","subject":"s2","label":"angry","frames":["b/0.png","b/1.png","b/2.png"],"box":[0,0,64,64]}"#.into(),
                r#"{"id":"c","subject":"s2","label":"fear","frames":["c/0.png","c/1.png","c/2.png"],"frame_boxes":[[0,0,64,64],[1,0,64,64],[2,0,64,64]]}"#.into(),
            ],
        );
        let m = DatasetManifest::load(&path, SystemOrder::default()).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.vocab().len(), 7);
        assert_eq!(m.subjects(), vec!["s1".to_string(), "s2".to_string()]);
        assert_eq!(m.entries()[2].region_for_frame(1).x, 1);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn short_sequence_fails_atomically_with_itemized_report() {
        let dir = std::env::temp_dir().join(format!("facedyn-manifest-short-{}", std::process::id()));
        touch(&dir.join("a/0.png"));
        touch(&dir.join("a/1.png"));
        let path = write_manifest(
            &dir,
            &[
                r#"{"format":"facedyn-manifest","version":1}"#.into(),
                r#"{"id":"a","subject":"s1","label":"happy","frames":["a/0.png","a/1.png"],"box":[0,0,64,64]}"#.into(),
                r#"{"id":"a","subject":"s2","label":"nope","frames":["missing.png"],"box":[0,0,4,4]}"#.into(),
            ],
        );
        match DatasetManifest::load(&path, SystemOrder::default()) {
            Err(EvalError::Ingestion { issues }) => {
                let text = issues.join("\n");
                assert!(text.contains("too short"), "{text}");
                assert!(text.contains("duplicate sequence id"), "{text}");
                assert!(text.contains("unknown label"), "{text}");
                assert!(text.contains("missing frame"), "{text}");
                assert!(text.contains("at least"), "{text}");
            }
            other => panic!("expected ingestion failure, got {other:?}"),
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn from_entries_validates_without_touching_disk() {
        let vocab = LabelVocab::ck_emotions();
        let m = DatasetManifest::from_entries(
            vec![entry("a", "s1", "happy", 6), entry("b", "s2", "angry", 8)],
            vocab.clone(),
            SystemOrder::default(),
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_ne!(m.source_hash(), 0);
        assert!(DatasetManifest::from_entries(
            vec![entry("a", "s1", "happy", 2)],
            vocab,
            SystemOrder::default(),
        )
        .is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let vocab = LabelVocab::ck_emotions();
        let a = DatasetManifest::from_entries(
            vec![entry("a", "s1", "happy", 6), entry("b", "s2", "angry", 6)],
            vocab.clone(),
            SystemOrder::default(),
        )
        .unwrap();
        let b = DatasetManifest::from_entries(
            vec![entry("a", "s1", "happy", 6), entry("b", "s2", "angry", 6)],
            vocab.clone(),
            SystemOrder::default(),
        )
        .unwrap();
        assert_eq!(a.source_hash(), b.source_hash());
        let c = DatasetManifest::from_entries(
            vec![entry("a", "s1", "happy", 6), entry("b", "s2", "fear", 6)],
            vocab,
            SystemOrder::default(),
        )
        .unwrap();
        assert_ne!(a.source_hash(), c.source_hash());
    }

    #[test]
    fn folds_partition_exactly() {
        let vocab = LabelVocab::ck_emotions();
        let entries: Vec<SequenceEntry> = (0..10)
            .map(|i| entry(&format!("seq{i}"), &format!("subj{}", i % 4), "happy", 6))
            .collect();
        let m = DatasetManifest::from_entries(entries, vocab, SystemOrder::default()).unwrap();
        let folds = loso_folds(&m).unwrap();
        assert_eq!(folds.len(), 4);
        // Folds ordered by subject id.
        let subjects: Vec<&str> = folds.iter().map(|f| f.subject.as_str()).collect();
        assert_eq!(subjects, vec!["subj0", "subj1", "subj2", "subj3"]);
        // Union of test sets covers every sequence exactly once.
        let mut seen = BTreeSet::new();
        for f in &folds {
            assert_eq!(f.test_ids.len() + f.train_ids.len(), 10);
            for id in &f.test_ids {
                assert!(seen.insert(id.clone()), "{id} appears in two test sets");
            }
            // No leakage.
            for id in &f.test_ids {
                assert!(!f.train_ids.contains(id));
            }
        }
        assert_eq!(seen.len(), 10);
    }

    #[test]
    fn two_subjects_give_complementary_folds() {
        let vocab = LabelVocab::ck_emotions();
        let m = DatasetManifest::from_entries(
            vec![entry("a", "s1", "happy", 6), entry("b", "s2", "angry", 6)],
            vocab,
            SystemOrder::default(),
        )
        .unwrap();
        let folds = loso_folds(&m).unwrap();
        assert_eq!(folds.len(), 2);
        assert_eq!(folds[0].test_ids, vec!["a"]);
        assert_eq!(folds[0].train_ids, vec!["b"]);
        assert_eq!(folds[1].test_ids, vec!["b"]);
        assert_eq!(folds[1].train_ids, vec!["a"]);
    }

    #[test]
    fn ck_shaped_manifest_has_327_sequences_and_118_folds() {
        // The shape of the reference dataset: seven classes with counts
        // (45, 18, 59, 25, 69, 28, 83) over 118 subjects.
        let class_counts =
            [("angry", 45), ("contempt", 18), ("disgust", 59), ("fear", 25), ("happy", 69), ("sadness", 28), ("surprise", 83)];
        let vocab = LabelVocab::ck_emotions();
        let mut entries = Vec::new();
        let mut subject = 0usize;
        for (label, count) in class_counts {
            for i in 0..count {
                entries.push(entry(
                    &format!("{label}_{i:03}"),
                    &format!("S{:03}", subject % 118),
                    label,
                    6,
                ));
                subject += 1;
            }
        }
        assert_eq!(entries.len(), 327);
        let m = DatasetManifest::from_entries(entries, vocab, SystemOrder::default()).unwrap();
        assert_eq!(m.len(), 327);
        assert_eq!(m.subjects().len(), 118);
        let folds = loso_folds(&m).unwrap();
        assert_eq!(folds.len(), 118);
        let tested: usize = folds.iter().map(|f| f.test_ids.len()).sum();
        assert_eq!(tested, 327);
        for (label, count) in class_counts {
            let n = m.entries().iter().filter(|e| e.label == label).count();
            assert_eq!(n, count, "{label}");
        }
    }

    #[test]
    fn single_subject_is_a_protocol_error() {
        let vocab = LabelVocab::ck_emotions();
        let m = DatasetManifest::from_entries(
            vec![entry("a", "s1", "happy", 6), entry("b", "s1", "angry", 6)],
            vocab,
            SystemOrder::default(),
        )
        .unwrap();
        assert!(matches!(loso_folds(&m), Err(EvalError::Protocol(_))));
    }
}
