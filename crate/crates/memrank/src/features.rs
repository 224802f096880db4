//! Per-video feature vectors and the aggregation schemes applied to
//! frame-level visual features, per-second audio embeddings, and captions.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dataset::csv_error;
use crate::error::{Error, Result};

/// Provenance of a feature table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Visual,
    AudioEmbed,
    CaptionBow,
    MfccStackFlat,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Visual => "visual",
            Modality::AudioEmbed => "audio_embed",
            Modality::CaptionBow => "caption_bow",
            Modality::MfccStackFlat => "mfcc_stack_flat",
        }
    }

    /// Audio-derived modalities drop videos without audio instead of failing.
    pub fn is_audio(self) -> bool {
        matches!(self, Modality::AudioEmbed | Modality::MfccStackFlat)
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense id-indexed feature vectors of one uniform dimension.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    dataset_id: String,
    modality: Modality,
    dim: usize,
    rows: IndexMap<String, Vec<f64>>,
}

impl FeatureTable {
    pub fn new(dataset_id: impl Into<String>, modality: Modality, dim: usize) -> Self {
        FeatureTable {
            dataset_id: dataset_id.into(),
            modality,
            dim,
            rows: IndexMap::new(),
        }
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, video_id: &str) -> Option<&[f64]> {
        self.rows.get(video_id).map(Vec::as_slice)
    }

    pub fn contains(&self, video_id: &str) -> bool {
        self.rows.contains_key(video_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn insert(&mut self, video_id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let video_id = video_id.into();
        if vector.len() != self.dim {
            return Err(Error::invalid(format!(
                "feature row \"{video_id}\" has {} values, table dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "feature row \"{video_id}\" contains a non-finite value"
            )));
        }
        if self.rows.contains_key(&video_id) {
            return Err(Error::invalid(format!("duplicate video_id \"{video_id}\"")));
        }
        self.rows.insert(video_id, vector);
        Ok(())
    }

    /// Load from CSV with header `video_id,f0,...,f{d-1}`. Every row must
    /// carry exactly `d` finite values.
    pub fn load(
        path: impl AsRef<Path>,
        modality: Modality,
        dataset_id: impl Into<String>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        if headers.get(0).map(str::trim) != Some("video_id") {
            return Err(Error::format(path, "first header column must be video_id"));
        }
        let dim = headers.len().saturating_sub(1);
        if dim == 0 {
            return Err(Error::format(path, "header declares no feature columns"));
        }

        let mut table = FeatureTable::new(dataset_id, modality, dim);
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != dim + 1 {
                return Err(Error::parse(
                    path,
                    line,
                    format!("expected {} values, found {}", dim, record.len() - 1),
                ));
            }
            let id = record.get(0).unwrap_or("").trim().to_string();
            if id.is_empty() {
                return Err(Error::parse(path, line, "empty video_id"));
            }
            let mut vector = Vec::with_capacity(dim);
            for cell in record.iter().skip(1) {
                let value: f64 = cell.trim().parse().map_err(|_| {
                    Error::parse(path, line, format!("non-numeric value \"{cell}\""))
                })?;
                if !value.is_finite() {
                    return Err(Error::parse(
                        path,
                        line,
                        format!("non-finite value \"{cell}\""),
                    ));
                }
                vector.push(value);
            }
            table
                .insert(id.clone(), vector)
                .map_err(|e| Error::parse(path, line, e.to_string()))?;
        }
        Ok(table)
    }

    /// Write as CSV. Values use the shortest round-trip rendering, so a
    /// save/load cycle reproduces every value exactly.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let write = |out: &mut std::io::BufWriter<std::fs::File>, s: &str| {
            out.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
        };
        write(&mut out, "video_id")?;
        for i in 0..self.dim {
            write(&mut out, &format!(",f{i}"))?;
        }
        write(&mut out, "\n")?;
        for (id, row) in &self.rows {
            write(&mut out, id)?;
            for v in row {
                write(&mut out, &format!(",{v}"))?;
            }
            write(&mut out, "\n")?;
        }
        out.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// How multiple frame-level vectors collapse into one per-video vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    Concat,
}

/// Combine per-frame feature vectors: `mean` keeps the dimension, `concat`
/// stacks them in frame order.
pub fn aggregate_frame_features(frames: &[Vec<f64>], mode: Aggregation) -> Result<Vec<f64>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::invalid("cannot aggregate an empty frame list"))?;
    let dim = first.len();
    if frames.iter().any(|f| f.len() != dim) {
        return Err(Error::invalid("frame vectors have mixed lengths"));
    }
    match mode {
        Aggregation::Mean => {
            let mut out = vec![0.0; dim];
            for frame in frames {
                for (o, v) in out.iter_mut().zip(frame) {
                    *o += v;
                }
            }
            let k = frames.len() as f64;
            for o in &mut out {
                *o /= k;
            }
            Ok(out)
        }
        Aggregation::Concat => {
            let mut out = Vec::with_capacity(dim * frames.len());
            for frame in frames {
                out.extend_from_slice(frame);
            }
            Ok(out)
        }
    }
}

/// Concatenate the first `n_seconds` per-second embeddings in time order.
/// Shorter inputs are zero-padded to the full length; the flag reports
/// whether padding happened.
pub fn concat_second_embeddings(
    per_second: &[Vec<f64>],
    n_seconds: usize,
) -> Result<(Vec<f64>, bool)> {
    let first = per_second
        .first()
        .ok_or_else(|| Error::invalid("video has no audio embedding"))?;
    let dim = first.len();
    if per_second.iter().any(|v| v.len() != dim) {
        return Err(Error::invalid("per-second embeddings have mixed lengths"));
    }
    if n_seconds == 0 {
        return Err(Error::invalid("n_seconds must be at least 1"));
    }
    let mut out = Vec::with_capacity(dim * n_seconds);
    for second in per_second.iter().take(n_seconds) {
        out.extend_from_slice(second);
    }
    let padded = per_second.len() < n_seconds;
    out.resize(dim * n_seconds, 0.0);
    Ok((out, padded))
}

/// Ranked token list standing in for a learned text encoder: tokens are kept
/// by descending corpus frequency, ties broken lexicographically.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Build from a caption corpus, truncated to `max_size` tokens.
    pub fn build(captions: &[String], max_size: usize) -> Vocabulary {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for caption in captions {
            for token in tokenize(caption) {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(max_size);
        let tokens: Vec<String> = ranked.into_iter().map(|(t, _)| t).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// One token per line, order significant.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = String::new();
        for token in &self.tokens {
            text.push_str(token);
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Vocabulary> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let tokens: Vec<String> = text.lines().map(str::to_string).collect();
        let mut index = HashMap::new();
        for (i, token) in tokens.iter().enumerate() {
            if index.insert(token.clone(), i).is_some() {
                return Err(Error::parse(
                    path,
                    (i + 1) as u64,
                    format!("duplicate token \"{token}\""),
                ));
            }
        }
        Ok(Vocabulary { tokens, index })
    }
}

/// Lowercase, strip ASCII punctuation, split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let token: String = raw
                .to_lowercase()
                .chars()
                .filter(|c| !c.is_ascii_punctuation())
                .collect();
            if token.is_empty() {
                None
            } else {
                Some(token)
            }
        })
        .collect()
}

/// L2-normalized bag-of-words counts over the vocabulary. An all-zero count
/// vector stays all-zero.
pub fn bow_features(paragraph: &str, vocab: &Vocabulary) -> Result<Vec<f64>> {
    if vocab.is_empty() {
        return Err(Error::invalid("bag-of-words requires a nonempty vocabulary"));
    }
    let mut counts = vec![0.0; vocab.len()];
    for token in tokenize(paragraph) {
        if let Some(i) = vocab.index_of(&token) {
            counts[i] += 1.0;
        }
    }
    let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        for c in &mut counts {
            *c /= norm;
        }
    }
    Ok(counts)
}
