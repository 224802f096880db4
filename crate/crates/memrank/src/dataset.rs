//! Video metadata, ground-truth memorability scores, captions, and split
//! manifests.
//!
//! The canonical interchange format is UTF-8 CSV with a header row; an empty
//! cell means an absent value. Ground-truth files carry up to three targets
//! per video: `short_raw`, `short_norm`, `long`. Split manifests are TOML
//! files pointing at one-id-per-line membership lists with expected counts.
//!
//! All tables are immutable after loading and safe to share across threads.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dataset partition a video belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split \"{other}\""))),
        }
    }
}

/// Memorability target variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    ShortRaw,
    ShortNorm,
    Long,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::ShortRaw, Target::ShortNorm, Target::Long];

    /// Column name in ground-truth CSV files.
    pub fn as_str(self) -> &'static str {
        match self {
            Target::ShortRaw => "short_raw",
            Target::ShortNorm => "short_norm",
            Target::Long => "long",
        }
    }

    /// Human-readable label used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            Target::ShortRaw => "Short-raw",
            Target::ShortNorm => "Short-norm",
            Target::Long => "Long",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "short_raw" => Ok(Target::ShortRaw),
            "short_norm" => Ok(Target::ShortNorm),
            "long" => Ok(Target::Long),
            other => Err(Error::invalid(format!("unknown target \"{other}\""))),
        }
    }
}

/// Per-video scores; any subset of the three targets may be present.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TargetScores {
    pub short_raw: Option<f64>,
    pub short_norm: Option<f64>,
    pub long: Option<f64>,
}

impl TargetScores {
    pub fn get(&self, target: Target) -> Option<f64> {
        match target {
            Target::ShortRaw => self.short_raw,
            Target::ShortNorm => self.short_norm,
            Target::Long => self.long,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.short_raw.is_none() && self.short_norm.is_none() && self.long.is_none()
    }
}

/// One video's metadata.
#[derive(Debug, Clone)]
pub struct VideoRecord {
    pub video_id: String,
    pub dataset_id: String,
    pub split: Split,
    pub captions: Vec<String>,
    pub has_audio: bool,
}

impl VideoRecord {
    /// Captions joined in stored order with a single space; empty list gives
    /// an empty string.
    pub fn caption_paragraph(&self) -> String {
        self.captions.join(" ")
    }
}

/// Ground-truth scores for one dataset, keyed by video id in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTable {
    dataset_id: String,
    rows: IndexMap<String, TargetScores>,
}

impl GroundTruthTable {
    pub fn new(dataset_id: impl Into<String>) -> Self {
        GroundTruthTable {
            dataset_id: dataset_id.into(),
            rows: IndexMap::new(),
        }
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, video_id: &str) -> Option<&TargetScores> {
        self.rows.get(video_id)
    }

    pub fn contains(&self, video_id: &str) -> bool {
        self.rows.contains_key(video_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TargetScores)> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Insert one row, enforcing id uniqueness, score range and presence.
    pub fn insert(&mut self, video_id: impl Into<String>, scores: TargetScores) -> Result<()> {
        let video_id = video_id.into();
        if scores.is_empty() {
            return Err(Error::invalid(format!(
                "video \"{video_id}\" has no target score"
            )));
        }
        for target in Target::ALL {
            if let Some(v) = scores.get(target) {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!(
                        "video \"{video_id}\": {target} score {v} outside [0, 1]"
                    )));
                }
            }
        }
        if self.rows.contains_key(&video_id) {
            return Err(Error::invalid(format!("duplicate video_id \"{video_id}\"")));
        }
        self.rows.insert(video_id, scores);
        Ok(())
    }

    /// Load from CSV. The header must name `video_id` and at least one of the
    /// target columns; an empty cell records an absent score, not zero.
    pub fn load(path: impl AsRef<Path>, dataset_id: impl Into<String>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;

        let headers = reader
            .headers()
            .map_err(|e| csv_error(path, e))?
            .clone();
        let mut id_col = None;
        let mut target_cols: Vec<(usize, Target)> = Vec::new();
        for (i, name) in headers.iter().enumerate() {
            match name.trim() {
                "video_id" => id_col = Some(i),
                other => {
                    let target = Target::from_str(other).map_err(|_| {
                        Error::format(path, format!("unknown ground-truth column \"{other}\""))
                    })?;
                    target_cols.push((i, target));
                }
            }
        }
        let id_col = id_col
            .ok_or_else(|| Error::format(path, "header is missing a video_id column"))?;
        if target_cols.is_empty() {
            return Err(Error::format(path, "header names no target column"));
        }

        let mut table = GroundTruthTable::new(dataset_id);
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record
                .position()
                .map(|p| p.line())
                .unwrap_or(0);
            if record.len() != headers.len() {
                return Err(Error::parse(
                    path,
                    line,
                    format!("expected {} cells, found {}", headers.len(), record.len()),
                ));
            }
            let video_id = record.get(id_col).unwrap_or("").trim().to_string();
            if video_id.is_empty() {
                return Err(Error::parse(path, line, "empty video_id"));
            }
            let mut scores = TargetScores::default();
            for &(col, target) in &target_cols {
                let cell = record.get(col).unwrap_or("").trim();
                if cell.is_empty() {
                    continue;
                }
                let value: f64 = cell.parse().map_err(|_| {
                    Error::parse(
                        path,
                        line,
                        format!("non-numeric {target} score \"{cell}\""),
                    )
                })?;
                if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                    return Err(Error::parse(
                        path,
                        line,
                        format!("{target} score {value} outside [0, 1]"),
                    ));
                }
                match target {
                    Target::ShortRaw => scores.short_raw = Some(value),
                    Target::ShortNorm => scores.short_norm = Some(value),
                    Target::Long => scores.long = Some(value),
                }
            }
            if scores.is_empty() {
                return Err(Error::parse(
                    path,
                    line,
                    format!("video \"{video_id}\" has no target score"),
                ));
            }
            table.insert(video_id.clone(), scores).map_err(|_| {
                Error::parse(path, line, format!("duplicate video_id \"{video_id}\""))
            })?;
        }
        Ok(table)
    }

    /// Write as CSV with all three target columns and scores rendered with
    /// six fractional digits. Saving and reloading reproduces the same bytes.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        writer
            .write_record(["video_id", "short_raw", "short_norm", "long"])
            .map_err(|e| csv_error(path, e))?;
        for (id, scores) in &self.rows {
            let cell = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
            writer
                .write_record([
                    id.as_str(),
                    &cell(scores.short_raw),
                    &cell(scores.short_norm),
                    &cell(scores.long),
                ])
                .map_err(|e| csv_error(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::parse(path, pos.line(), e.to_string()),
        None => Error::format(path, e.to_string()),
    }
}

/// Split membership declaration for one dataset.
///
/// Loaded manifests are not forced to be consistent; [`validate_splits`]
/// reports violations instead so broken manifests can be diagnosed.
#[derive(Debug, Clone)]
pub struct SplitManifest {
    pub dataset_id: String,
    expected: HashMap<Split, usize>,
    members: HashMap<Split, Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct ManifestFile {
    dataset_id: String,
    splits: HashMap<String, ManifestSplit>,
}

#[derive(Debug, Deserialize)]
struct ManifestSplit {
    ids: String,
    expected: usize,
}

impl SplitManifest {
    pub fn new(dataset_id: impl Into<String>) -> Self {
        SplitManifest {
            dataset_id: dataset_id.into(),
            expected: HashMap::new(),
            members: HashMap::new(),
        }
    }

    pub fn set_split(&mut self, split: Split, expected: usize, ids: Vec<String>) {
        self.expected.insert(split, expected);
        self.members.insert(split, ids);
    }

    pub fn expected(&self, split: Split) -> Option<usize> {
        self.expected.get(&split).copied()
    }

    pub fn members(&self, split: Split) -> &[String] {
        self.members.get(&split).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_split(&self, split: Split) -> bool {
        self.members.contains_key(&split)
    }

    /// Load a TOML manifest; id-list paths are resolved relative to the
    /// manifest's directory. Duplicate ids within one list are rejected.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ManifestFile = toml::from_str(&text)
            .map_err(|e| Error::format(path, format!("invalid manifest: {e}")))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));

        let mut manifest = SplitManifest::new(file.dataset_id);
        for (name, decl) in &file.splits {
            let split: Split = name.parse()?;
            let ids_path = base.join(&decl.ids);
            let ids = read_id_list(&ids_path)?;
            manifest.set_split(split, decl.expected, ids);
        }
        Ok(manifest)
    }
}

fn read_id_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashMap::new();
    let mut ids = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let id = raw.trim();
        if id.is_empty() {
            continue;
        }
        if let Some(first) = seen.insert(id.to_string(), i + 1) {
            return Err(Error::parse(
                path,
                (i + 1) as u64,
                format!("duplicate id \"{id}\" (first on line {first})"),
            ));
        }
        ids.push(id.to_string());
    }
    Ok(ids)
}

/// A single problem found while cross-checking a manifest against a
/// ground-truth table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    CountMismatch {
        split: Split,
        expected: usize,
        actual: usize,
    },
    MissingGroundTruth {
        split: Split,
        video_id: String,
    },
    SplitOverlap {
        video_id: String,
        first: Split,
        second: Split,
    },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::CountMismatch {
                split,
                expected,
                actual,
            } => write!(
                f,
                "count mismatch: split {split} expected {expected} ids, found {actual}"
            ),
            Finding::MissingGroundTruth { split, video_id } => write!(
                f,
                "missing ground truth: \"{video_id}\" ({split}) has no score row"
            ),
            Finding::SplitOverlap {
                video_id,
                first,
                second,
            } => write!(
                f,
                "split overlap: \"{video_id}\" appears in both {first} and {second}"
            ),
        }
    }
}

/// Outcome of [`validate_splits`]; empty means the manifest is consistent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Cross-check a split manifest against a ground-truth table. All problems
/// are report entries, never errors, except for a dataset-id mismatch between
/// the two inputs.
pub fn validate_splits(
    manifest: &SplitManifest,
    ground_truth: &GroundTruthTable,
) -> Result<ValidationReport> {
    if manifest.dataset_id != ground_truth.dataset_id() {
        return Err(Error::invalid(format!(
            "dataset mismatch: manifest \"{}\" vs ground truth \"{}\"",
            manifest.dataset_id,
            ground_truth.dataset_id()
        )));
    }

    let mut report = ValidationReport::default();
    for split in Split::ALL {
        if !manifest.has_split(split) {
            continue;
        }
        let members = manifest.members(split);
        if let Some(expected) = manifest.expected(split) {
            if expected != members.len() {
                report.findings.push(Finding::CountMismatch {
                    split,
                    expected,
                    actual: members.len(),
                });
            }
        }
        for id in members {
            if !ground_truth.contains(id) {
                report.findings.push(Finding::MissingGroundTruth {
                    split,
                    video_id: id.clone(),
                });
            }
        }
    }

    for (i, &first) in Split::ALL.iter().enumerate() {
        for &second in &Split::ALL[i + 1..] {
            let second_members: std::collections::HashSet<&String> =
                manifest.members(second).iter().collect();
            for id in manifest.members(first) {
                if second_members.contains(id) {
                    report.findings.push(Finding::SplitOverlap {
                        video_id: id.clone(),
                        first,
                        second,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Score normalization used when aligning targets across datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeMode {
    Raw,
    MinMax,
    ZScore,
}

/// Normalize a score vector. `raw` is the identity, `minmax` maps onto
/// [0, 1], `zscore` yields mean 0 and sample standard deviation 1.
pub fn normalize_scores(values: &[f64], mode: NormalizeMode) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("cannot normalize an empty vector"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("cannot normalize non-finite values"));
    }
    match mode {
        NormalizeMode::Raw => Ok(values.to_vec()),
        NormalizeMode::MinMax => {
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max <= min {
                return Err(Error::invalid(
                    "minmax normalization undefined for a constant vector",
                ));
            }
            Ok(values.iter().map(|v| (v - min) / (max - min)).collect())
        }
        NormalizeMode::ZScore => {
            let n = values.len() as f64;
            if values.len() < 2 {
                return Err(Error::invalid(
                    "zscore normalization needs at least 2 values",
                ));
            }
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            if var <= 0.0 {
                return Err(Error::invalid(
                    "zscore normalization undefined for a constant vector",
                ));
            }
            let std = var.sqrt();
            Ok(values.iter().map(|v| (v - mean) / std).collect())
        }
    }
}

/// Load a captions CSV (`video_id,caption`); repeated ids accumulate captions
/// in file order.
pub fn load_captions(path: impl AsRef<Path>) -> Result<IndexMap<String, Vec<String>>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    {
        let headers = reader.headers().map_err(|e| csv_error(path, e))?;
        if headers.get(0).map(str::trim) != Some("video_id")
            || headers.get(1).map(str::trim) != Some("caption")
        {
            return Err(Error::format(path, "expected header video_id,caption"));
        }
    }
    let mut captions: IndexMap<String, Vec<String>> = IndexMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = record.get(0).unwrap_or("").trim();
        if id.is_empty() {
            return Err(Error::parse(path, line, "empty video_id"));
        }
        let caption = record.get(1).unwrap_or("").to_string();
        captions.entry(id.to_string()).or_default().push(caption);
    }
    Ok(captions)
}

/// Assemble one record per manifest member, attaching captions when present.
/// Audio availability defaults to true and is refined by the caller once a
/// feature table is known.
pub fn build_records(
    manifest: &SplitManifest,
    captions: Option<&IndexMap<String, Vec<String>>>,
) -> Vec<VideoRecord> {
    let mut records = Vec::new();
    for split in Split::ALL {
        for id in manifest.members(split) {
            records.push(VideoRecord {
                video_id: id.clone(),
                dataset_id: manifest.dataset_id.clone(),
                split,
                captions: captions
                    .and_then(|c| c.get(id))
                    .cloned()
                    .unwrap_or_default(),
                has_audio: true,
            });
        }
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::average_ranks;

    fn write(path: &Path, content: &str) {
        std::fs::write(path, content).unwrap();
    }

    #[test]
    fn load_full_and_partial_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.csv");
        write(
            &path,
            "video_id,short_raw,short_norm,long\nv001,0.85,0.77,0.50\nv002,0.85,,\n",
        );
        let table = GroundTruthTable::load(&path, "demo").unwrap();
        assert_eq!(
            table.get("v001"),
            Some(&TargetScores {
                short_raw: Some(0.85),
                short_norm: Some(0.77),
                long: Some(0.50),
            })
        );
        let v2 = table.get("v002").unwrap();
        assert_eq!(v2.short_raw, Some(0.85));
        assert_eq!(v2.short_norm, None);
        assert_eq!(v2.long, None);
    }

    #[test]
    fn load_rejects_duplicate_id() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.csv");
        write(
            &path,
            "video_id,short_raw\nv001,0.5\nv001,0.6\n",
        );
        let err = GroundTruthTable::load(&path, "demo").unwrap_err();
        assert!(err.to_string().contains("v001"), "{err}");
    }

    #[test]
    fn load_rejects_out_of_range_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.csv");
        write(&path, "video_id,short_raw\nv001,0.5\nv002,1.5\n");
        let err = GroundTruthTable::load(&path, "demo").unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
    }

    #[test]
    fn load_rejects_non_numeric() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.csv");
        write(&path, "video_id,short_raw\nv001,abc\n");
        let err = GroundTruthTable::load(&path, "demo").unwrap_err();
        assert!(err.to_string().contains("non-numeric"), "{err}");
    }

    #[test]
    fn save_load_round_trip_is_byte_stable() {
        let mut table = GroundTruthTable::new("demo");
        table
            .insert(
                "v001",
                TargetScores {
                    short_raw: Some(0.8512345678),
                    short_norm: Some(0.3),
                    long: None,
                },
            )
            .unwrap();
        table
            .insert(
                "v002",
                TargetScores {
                    short_raw: None,
                    short_norm: Some(1.0),
                    long: Some(0.0),
                },
            )
            .unwrap();

        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("a.csv");
        let second = dir.path().join("b.csv");
        table.save(&first).unwrap();
        let reloaded = GroundTruthTable::load(&first, "demo").unwrap();
        reloaded.save(&second).unwrap();
        assert_eq!(
            std::fs::read(&first).unwrap(),
            std::fs::read(&second).unwrap()
        );
        // values agree at the 6-digit rendering
        for ((ida, a), (idb, b)) in table.iter().zip(reloaded.iter()) {
            assert_eq!(ida, idb);
            for t in Target::ALL {
                let render = |v: Option<f64>| v.map(|v| format!("{v:.6}"));
                assert_eq!(render(a.get(t)), render(b.get(t)));
            }
        }
    }

    #[test]
    fn validate_matching_manifest_is_empty() {
        let mut gt = GroundTruthTable::new("trecvid-like");
        let mut train = Vec::new();
        let mut dev = Vec::new();
        let mut test = Vec::new();
        for i in 0..588 {
            let id = format!("tr{i:04}");
            gt.insert(&id, TargetScores { short_norm: Some(0.5), ..Default::default() })
                .unwrap();
            train.push(id);
        }
        for i in 0..1116 {
            let id = format!("dv{i:04}");
            gt.insert(&id, TargetScores { short_norm: Some(0.5), ..Default::default() })
                .unwrap();
            dev.push(id);
        }
        for i in 0..500 {
            let id = format!("te{i:04}");
            gt.insert(&id, TargetScores { short_norm: Some(0.5), ..Default::default() })
                .unwrap();
            test.push(id);
        }
        let mut manifest = SplitManifest::new("trecvid-like");
        manifest.set_split(Split::Train, 588, train);
        manifest.set_split(Split::Dev, 1116, dev);
        manifest.set_split(Split::Test, 500, test);

        let report = validate_splits(&manifest, &gt).unwrap();
        assert!(report.is_valid(), "{:?}", report.findings);
        // purity: identical inputs give identical reports
        assert_eq!(report, validate_splits(&manifest, &gt).unwrap());
    }

    #[test]
    fn validate_reports_overlap_and_count_mismatch() {
        let mut gt = GroundTruthTable::new("demo");
        for id in ["a", "b", "c"] {
            gt.insert(id, TargetScores { short_raw: Some(0.2), ..Default::default() })
                .unwrap();
        }
        let mut manifest = SplitManifest::new("demo");
        manifest.set_split(Split::Train, 3, vec!["a".into(), "b".into()]);
        manifest.set_split(Split::Dev, 1, vec!["b".into()]);
        let report = validate_splits(&manifest, &gt).unwrap();
        assert!(report.findings.contains(&Finding::CountMismatch {
            split: Split::Train,
            expected: 3,
            actual: 2,
        }));
        assert!(report.findings.contains(&Finding::SplitOverlap {
            video_id: "b".into(),
            first: Split::Train,
            second: Split::Dev,
        }));
    }

    #[test]
    fn validate_reports_missing_ground_truth() {
        let mut gt = GroundTruthTable::new("demo");
        gt.insert("a", TargetScores { short_raw: Some(0.2), ..Default::default() })
            .unwrap();
        let mut manifest = SplitManifest::new("demo");
        manifest.set_split(Split::Train, 2, vec!["a".into(), "ghost".into()]);
        let report = validate_splits(&manifest, &gt).unwrap();
        assert_eq!(
            report.findings,
            vec![Finding::MissingGroundTruth {
                split: Split::Train,
                video_id: "ghost".into(),
            }]
        );
    }

    #[test]
    fn manifest_round_trip_via_files() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path().join("train_ids.txt").as_path(), "a\nb\n");
        write(dir.path().join("test_ids.txt").as_path(), "c\n");
        write(
            dir.path().join("manifest.toml").as_path(),
            "dataset_id = \"demo\"\n\n[splits.train]\nids = \"train_ids.txt\"\nexpected = 2\n\n[splits.test]\nids = \"test_ids.txt\"\nexpected = 1\n",
        );
        let manifest = SplitManifest::load(dir.path().join("manifest.toml")).unwrap();
        assert_eq!(manifest.dataset_id, "demo");
        assert_eq!(manifest.members(Split::Train), ["a", "b"]);
        assert_eq!(manifest.expected(Split::Test), Some(1));
        assert!(!manifest.has_split(Split::Dev));
    }

    #[test]
    fn normalize_modes() {
        assert_eq!(
            normalize_scores(&[2.0, 4.0, 6.0], NormalizeMode::MinMax).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        assert_eq!(
            normalize_scores(&[0.3, 0.9], NormalizeMode::Raw).unwrap(),
            vec![0.3, 0.9]
        );
        // sample stddev of [1,2,3] is exactly 1
        assert_eq!(
            normalize_scores(&[1.0, 2.0, 3.0], NormalizeMode::ZScore).unwrap(),
            vec![-1.0, 0.0, 1.0]
        );
        assert!(normalize_scores(&[2.0, 2.0], NormalizeMode::MinMax).is_err());
        assert!(normalize_scores(&[2.0, 2.0], NormalizeMode::ZScore).is_err());
    }

    #[test]
    fn normalize_preserves_ranking() {
        let values = [0.4, 0.1, 0.9, 0.1, 0.5];
        let base = average_ranks(&values).unwrap();
        for mode in [NormalizeMode::MinMax, NormalizeMode::ZScore] {
            let out = normalize_scores(&values, mode).unwrap();
            assert_eq!(average_ranks(&out).unwrap(), base);
        }
    }

    #[test]
    fn caption_paragraph_rules() {
        let mut record = VideoRecord {
            video_id: "v".into(),
            dataset_id: "d".into(),
            split: Split::Train,
            captions: vec!["a dog runs".into(), "dog in park".into()],
            has_audio: true,
        };
        assert_eq!(record.caption_paragraph(), "a dog runs dog in park");
        record.captions.clear();
        assert_eq!(record.caption_paragraph(), "");
        record.captions = (1..=5).map(|i| format!("caption {i}")).collect();
        assert_eq!(
            record.caption_paragraph(),
            "caption 1 caption 2 caption 3 caption 4 caption 5"
        );
    }

    #[test]
    fn tables_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<GroundTruthTable>();
        assert_send_sync::<SplitManifest>();
        assert_send_sync::<VideoRecord>();
        assert_send_sync::<crate::features::FeatureTable>();
        assert_send_sync::<crate::features::Vocabulary>();
        assert_send_sync::<crate::ridge::BayesianRidge>();
    }

    #[test]
    fn captions_file_accumulates_repeated_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("captions.csv");
        write(
            &path,
            "video_id,caption\nv1,a dog runs\nv1,\"dog, in park\"\nv2,cat\n",
        );
        let captions = load_captions(&path).unwrap();
        assert_eq!(
            captions.get("v1").unwrap(),
            &vec!["a dog runs".to_string(), "dog, in park".to_string()]
        );
        assert_eq!(captions.get("v2").unwrap().len(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn minmax_hits_exact_bounds(mut xs in proptest::collection::vec(-1e6..1e6f64, 2..50)) {
                xs[0] = -2e6; // guarantee non-degenerate
                let out = normalize_scores(&xs, NormalizeMode::MinMax).unwrap();
                let min = out.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(min, 0.0);
                prop_assert_eq!(max, 1.0);
            }

            #[test]
            fn normalize_is_rank_preserving(xs in proptest::collection::vec(-1e6..1e6f64, 2..50)) {
                let base = average_ranks(&xs).unwrap();
                if let Ok(out) = normalize_scores(&xs, NormalizeMode::ZScore) {
                    prop_assert_eq!(average_ranks(&out).unwrap(), base);
                }
            }
        }
    }
}
