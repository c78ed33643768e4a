//! CSV inputs: raw opinion scores, stimulus manifests, objective scores and
//! pipeline manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pcqa_core::stats::{mos_with_ci, Bitrate};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawScoreRow {
    pub stimulus_id: String,
    pub subject_id: String,
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusRow {
    pub stimulus_id: String,
    pub content: String,
    pub codec: String,
    pub rate: String,
    pub geometry_bits: u64,
    pub texture_bits: u64,
    pub points: u64,
}

impl StimulusRow {
    pub fn bitrate(&self) -> CliResult<Bitrate> {
        Ok(pcqa_core::stats::bitrate(self.geometry_bits, self.texture_bits, self.points)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveRow {
    pub stimulus_id: String,
    pub metric: String,
    pub value: f64,
}

/// One row of a `run` manifest. Bit counts and point count may be left
/// empty when no rate accounting is wanted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRow {
    pub stimulus_id: String,
    pub content: String,
    pub codec: String,
    pub rate: String,
    pub reference: PathBuf,
    pub distorted: PathBuf,
    #[serde(default)]
    pub geometry_bits: Option<u64>,
    #[serde(default)]
    pub texture_bits: Option<u64>,
    #[serde(default)]
    pub points: Option<u64>,
}

impl PipelineRow {
    pub fn stimulus(&self) -> Option<StimulusRow> {
        Some(StimulusRow {
            stimulus_id: self.stimulus_id.clone(),
            content: self.content.clone(),
            codec: self.codec.clone(),
            rate: self.rate.clone(),
            geometry_bits: self.geometry_bits?,
            texture_bits: self.texture_bits.unwrap_or(0),
            points: self.points?,
        })
    }
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::csv(path, e))
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::csv(Path::new("<output>"), e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes a header and string cells; used where columns are dynamic.
pub fn cells_to_csv(header: &[String], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| CliError::csv(Path::new("<output>"), e);
    w.write_record(header).map_err(map)?;
    for r in rows {
        w.write_record(r).map_err(map)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MosEntry {
    pub stimulus_id: String,
    pub mos: f64,
    pub ci95: f64,
    pub ratings: usize,
}

/// MOS and CI per stimulus, keyed by stimulus id.
pub fn mos_table(rows: &[RawScoreRow]) -> CliResult<BTreeMap<String, MosEntry>> {
    let mut grouped: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rows {
        if !(1..=5).contains(&r.score) {
            return Err(CliError::Data(format!(
                "stimulus {} subject {}: score {} outside 1..=5",
                r.stimulus_id, r.subject_id, r.score
            )));
        }
        grouped.entry(&r.stimulus_id).or_default().push(r.score as f64);
    }
    grouped
        .into_iter()
        .map(|(id, scores)| {
            let (mos, ci95) = mos_with_ci(&scores)
                .map_err(|e| CliError::Data(format!("stimulus {id}: {e}")))?;
            let entry = MosEntry {
                stimulus_id: id.to_string(),
                mos,
                ci95,
                ratings: scores.len(),
            };
            Ok((id.to_string(), entry))
        })
        .collect()
}

/// Objective scores as metric → stimulus → value.
pub fn objective_table(rows: &[ObjectiveRow]) -> CliResult<BTreeMap<String, BTreeMap<String, f64>>> {
    let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for r in rows {
        if out
            .entry(r.metric.clone())
            .or_default()
            .insert(r.stimulus_id.clone(), r.value)
            .is_some()
        {
            return Err(CliError::Data(format!(
                "duplicate objective score for {} / {}",
                r.stimulus_id, r.metric
            )));
        }
    }
    Ok(out)
}
