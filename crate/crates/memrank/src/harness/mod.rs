//! End-to-end experiment driver.
//!
//! An experiment fits one Bayesian ridge model per requested target on the
//! training source and scores its predictions on the test source with
//! Spearman and Pearson correlation. Two protocols exist: `subtask1` trains
//! and tests within one dataset, `subtask2` is the generalization setting
//! and refuses configurations whose training and testing data come from the
//! same source.

pub mod report;
pub mod synth;

pub use report::{render_table, ReportFormat, ReportRow, ReportTable};
pub use synth::{generate_synthetic, write_synthetic, SplitMix64, SyntheticSpec};

use std::path::Path;

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{
    load_captions, GroundTruthTable, Split, SplitManifest, Target, VideoRecord,
};
use crate::error::{Error, Result};
use crate::features::{
    aggregate_frame_features, bow_features, Aggregation, FeatureTable, Modality, Vocabulary,
};
use crate::metrics::{pearson, spearman};
use crate::ridge::{BayesianRidge, BayesianRidgeConfig};

/// Which experimental protocol a run follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Subtask1,
    Subtask2,
}

/// Training may draw on the train and dev splits only; the test split cannot
/// be named here by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainSplit {
    Train,
    Dev,
}

impl TrainSplit {
    fn as_split(self) -> Split {
        match self {
            TrainSplit::Train => Split::Train,
            TrainSplit::Dev => Split::Dev,
        }
    }
}

fn default_train_splits() -> Vec<TrainSplit> {
    vec![TrainSplit::Train, TrainSplit::Dev]
}

fn default_aggregation() -> Aggregation {
    Aggregation::Mean
}

fn default_vocab_size() -> usize {
    2000
}

/// File references for one side of an experiment. Paths are resolved
/// relative to the configuration file's directory.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub dataset_id: String,
    /// Splits used for fitting; ignored for the test side, which always
    /// evaluates the test split.
    #[serde(default = "default_train_splits")]
    pub splits: Vec<TrainSplit>,
    pub manifest: String,
    pub ground_truth: String,
    /// Feature CSVs; several files are aggregated per video (e.g. one file
    /// per extracted frame). Unused for the caption modality.
    #[serde(default)]
    pub features: Vec<String>,
    /// Captions CSV, required for the caption modality.
    #[serde(default)]
    pub captions: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run_name: String,
    pub protocol: Protocol,
    #[serde(default)]
    pub seed: u64,
    pub targets: Vec<Target>,
    pub modality: Modality,
    #[serde(default = "default_aggregation")]
    pub aggregation: Aggregation,
    #[serde(default = "default_vocab_size")]
    pub vocab_size: usize,
    pub train: DataSource,
    pub test: DataSource,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::format(path, format!("invalid experiment config: {e}")))
    }

    /// Hash of the canonical serialized form; identical configurations hash
    /// identically however they were constructed.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.protocol == Protocol::Subtask2 && self.train.dataset_id == self.test.dataset_id {
            return Err(Error::Config(format!(
                "sub-task 2 requires training and testing data from different sources \
                 (both are \"{}\")",
                self.train.dataset_id
            )));
        }
        if self.targets.is_empty() {
            return Err(Error::Config("no targets requested".into()));
        }
        if self.run_name.is_empty() {
            return Err(Error::Config("run_name must not be empty".into()));
        }
        match self.modality {
            Modality::CaptionBow => {
                if self.train.captions.is_none() || self.test.captions.is_none() {
                    return Err(Error::Config(
                        "caption modality needs a captions file on both sides".into(),
                    ));
                }
            }
            _ => {
                if self.train.features.is_empty() || self.test.features.is_empty() {
                    return Err(Error::Config(format!(
                        "{} modality needs at least one feature file on both sides",
                        self.modality
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One side of an experiment, fully loaded.
struct LoadedSource {
    manifest: SplitManifest,
    ground_truth: GroundTruthTable,
    features: FeatureSource,
}

/// Feature lookup: either aggregated feature tables or caption bag-of-words
/// vectors from a shared vocabulary.
enum FeatureSource {
    Tables(Vec<FeatureTable>, Aggregation),
    Bow {
        vocab: Vocabulary,
        paragraphs: IndexMap<String, String>,
    },
}

impl FeatureSource {
    /// `None` means the video has no row in an audio feature table.
    fn lookup(&self, video_id: &str) -> Result<Option<Vec<f64>>> {
        match self {
            FeatureSource::Tables(tables, aggregation) => {
                let mut frames = Vec::with_capacity(tables.len());
                for table in tables {
                    match table.get(video_id) {
                        Some(row) => frames.push(row.to_vec()),
                        None => return Ok(None),
                    }
                }
                if frames.len() == 1 {
                    Ok(Some(frames.pop().unwrap()))
                } else {
                    aggregate_frame_features(&frames, *aggregation).map(Some)
                }
            }
            FeatureSource::Bow { vocab, paragraphs } => {
                let paragraph = paragraphs.get(video_id).map(String::as_str).unwrap_or("");
                bow_features(paragraph, vocab).map(Some)
            }
        }
    }
}

fn load_source(
    config: &ExperimentConfig,
    source: &DataSource,
    base: &Path,
    train_vocab: Option<&Vocabulary>,
) -> Result<LoadedSource> {
    let manifest = SplitManifest::load(base.join(&source.manifest))?;
    if manifest.dataset_id != source.dataset_id {
        return Err(Error::Config(format!(
            "config names dataset \"{}\" but manifest declares \"{}\"",
            source.dataset_id, manifest.dataset_id
        )));
    }
    let ground_truth = GroundTruthTable::load(base.join(&source.ground_truth), &source.dataset_id)?;

    let features = match config.modality {
        Modality::CaptionBow => {
            let captions_path = source.captions.as_ref().expect("validated");
            let captions = load_captions(base.join(captions_path))?;
            let records = crate::dataset::build_records(&manifest, Some(&captions));
            let vocab = match train_vocab {
                Some(v) => v.clone(),
                None => {
                    // vocabulary comes from the training splits only
                    let train_splits: Vec<Split> =
                        source.splits.iter().map(|s| s.as_split()).collect();
                    let corpus: Vec<String> = records
                        .iter()
                        .filter(|r| train_splits.contains(&r.split))
                        .flat_map(|r| r.captions.iter().cloned())
                        .collect();
                    Vocabulary::build(&corpus, config.vocab_size)
                }
            };
            if vocab.is_empty() {
                return Err(Error::invalid(
                    "caption vocabulary is empty; no training captions found",
                ));
            }
            let paragraphs: IndexMap<String, String> = records
                .iter()
                .map(|r: &VideoRecord| (r.video_id.clone(), r.caption_paragraph()))
                .collect();
            FeatureSource::Bow { vocab, paragraphs }
        }
        modality => {
            let mut tables = Vec::with_capacity(source.features.len());
            for file in &source.features {
                tables.push(FeatureTable::load(
                    base.join(file),
                    modality,
                    &source.dataset_id,
                )?);
            }
            FeatureSource::Tables(tables, config.aggregation)
        }
    };

    Ok(LoadedSource {
        manifest,
        ground_truth,
        features,
    })
}

struct AssembledRows {
    video_ids: Vec<String>,
    splits: Vec<Split>,
    vectors: Vec<Vec<f64>>,
    dropped: usize,
}

/// Collect feature vectors for the given splits. Videos missing from an
/// audio feature table are dropped and counted; for any other modality a
/// missing vector is a hard error.
fn assemble_rows(
    source: &LoadedSource,
    splits: &[Split],
    modality: Modality,
) -> Result<AssembledRows> {
    let mut rows = AssembledRows {
        video_ids: Vec::new(),
        splits: Vec::new(),
        vectors: Vec::new(),
        dropped: 0,
    };
    for &split in splits {
        for id in source.manifest.members(split) {
            match source.features.lookup(id)? {
                Some(vector) => {
                    rows.video_ids.push(id.clone());
                    rows.splits.push(split);
                    rows.vectors.push(vector);
                }
                None if modality.is_audio() => rows.dropped += 1,
                None => {
                    return Err(Error::invalid(format!(
                        "video \"{id}\" has no {modality} features"
                    )));
                }
            }
        }
    }
    Ok(rows)
}

/// Run one experiment end to end and return its report.
pub fn run_experiment(config: &ExperimentConfig, base: &Path) -> Result<ReportTable> {
    config.validate()?;

    let train = load_source(config, &config.train, base, None)?;
    let train_vocab = match &train.features {
        FeatureSource::Bow { vocab, .. } => Some(vocab.clone()),
        _ => None,
    };
    let test = load_source(config, &config.test, base, train_vocab.as_ref())?;

    let train_splits: Vec<Split> = config.train.splits.iter().map(|s| s.as_split()).collect();
    if train_splits.is_empty() {
        return Err(Error::Config("no training splits selected".into()));
    }
    let train_rows = assemble_rows(&train, &train_splits, config.modality)?;
    // the test split must never reach a fit, whatever the protocol
    debug_assert!(train_rows.splits.iter().all(|s| *s != Split::Test));
    let test_rows = assemble_rows(&test, &[Split::Test], config.modality)?;

    if let (Some(a), Some(b)) = (train_rows.vectors.first(), test_rows.vectors.first()) {
        if a.len() != b.len() {
            return Err(Error::invalid(format!(
                "train features have dimension {}, test features {}",
                a.len(),
                b.len()
            )));
        }
    }

    let mut rows = Vec::with_capacity(config.targets.len());
    for &target in &config.targets {
        let score_of = |gt: &GroundTruthTable, id: &str| -> Result<f64> {
            gt.get(id)
                .and_then(|s| s.get(target))
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "video \"{id}\" has no {target} score in dataset \"{}\"",
                        gt.dataset_id()
                    ))
                })
        };

        let mut y_train = Vec::with_capacity(train_rows.video_ids.len());
        for id in &train_rows.video_ids {
            y_train.push(score_of(&train.ground_truth, id)?);
        }
        if train_rows.vectors.is_empty() {
            return Err(Error::invalid(
                "empty intersection of features and labels on the training side",
            ));
        }

        let dim = train_rows.vectors[0].len();
        let flat: Vec<f64> = train_rows.vectors.iter().flatten().copied().collect();
        let x = DMatrix::from_row_slice(train_rows.vectors.len(), dim, &flat);
        let y = DVector::from_vec(y_train);
        let model = BayesianRidge::fit(&x, &y, &BayesianRidgeConfig::default())?;

        let mut predicted = Vec::with_capacity(test_rows.video_ids.len());
        let mut actual = Vec::with_capacity(test_rows.video_ids.len());
        for (id, vector) in test_rows.video_ids.iter().zip(&test_rows.vectors) {
            actual.push(score_of(&test.ground_truth, id)?);
            predicted.push(model.predict(vector)?.mean);
        }
        if predicted.is_empty() {
            return Err(Error::invalid(
                "empty intersection of features and labels on the test side",
            ));
        }

        rows.push(ReportRow {
            run: config.run_name.clone(),
            target,
            spearman: spearman(&predicted, &actual)?,
            pearson: pearson(&predicted, &actual)?,
            n_test: predicted.len(),
            dropped: test_rows.dropped,
        });
    }

    let mut table = ReportTable::new(rows);
    table.config_hash = config.hash();
    table.train_dropped = train_rows.dropped;
    Ok(table)
}
