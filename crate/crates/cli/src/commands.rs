//! Subcommand bodies shared by the single-shot CLI and the batch pipeline.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pcqa_core::characterization::{characterize, ContentProfile};
use pcqa_core::color::YcbcrMatrix;
use pcqa_core::metrics::compute;
use pcqa_core::ply::{read_ply_file, write_ply, PlyFormat};
use pcqa_core::stats::{
    benchmark_metric, kruskal_wallis, linear_fit_compare, normalize_opinion, BenchmarkReport,
    KruskalWallis, LinearComparison,
};
use pcqa_core::texture::{encode_texture_gpcc, recolor, CodecInvocation, EncodeOutcome, DEFAULT_RATE_SCHEDULE};
use pcqa_core::{MetricConfig, MetricKind, MetricResult, PointCloud};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::report::{csv_float, write_atomic};
use crate::tables::{cells_to_csv, MosEntry, StimulusRow};

pub const PCQM_COLOR_SPACE_NOTE: &str = "CIELAB (D65) used in place of LAB2000HL";

pub fn load_cloud(path: &Path) -> CliResult<PointCloud> {
    read_ply_file(path).map_err(|e| match e {
        pcqa_core::Error::Io(source) => CliError::io(path, source),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

pub fn parse_metric_list(list: &str) -> CliResult<Vec<MetricKind>> {
    let mut kinds = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        let kind: MetricKind = item.parse().map_err(|e: pcqa_core::Error| CliError::Usage(e.to_string()))?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(CliError::Usage("no metrics requested".into()));
    }
    Ok(kinds)
}

// ---- characterize -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacterizeRow {
    pub input: String,
    pub points: usize,
    #[serde(flatten)]
    pub profile: ContentProfile,
}

pub fn characterize_file(path: &Path, k: usize, matrix: YcbcrMatrix) -> CliResult<CharacterizeRow> {
    let cloud = load_cloud(path)?;
    Ok(CharacterizeRow {
        input: path.display().to_string(),
        points: cloud.len(),
        profile: characterize(&cloud, k, matrix)?,
    })
}

pub fn characterize_csv(rows: &[CharacterizeRow]) -> CliResult<String> {
    let header = ["input", "points", "sparsity", "gamut_volume_pct", "gamut_degenerate", "y_dev", "cb_dev", "cr_dev"]
        .map(String::from);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.input.clone(),
                r.points.to_string(),
                csv_float(Some(r.profile.sparsity)),
                csv_float(Some(r.profile.gamut_volume_pct)),
                r.profile.gamut_degenerate.to_string(),
                csv_float(Some(r.profile.y_dev)),
                csv_float(Some(r.profile.cb_dev)),
                csv_float(Some(r.profile.cr_dev)),
            ]
        })
        .collect();
    cells_to_csv(&header, &cells)
}

// ---- metric -------------------------------------------------------------

/// Runs each requested metric in order; the first failure aborts.
pub fn compute_metrics(
    reference: &PointCloud,
    distorted: &PointCloud,
    kinds: &[MetricKind],
    cfg: &MetricConfig,
) -> CliResult<Vec<MetricResult>> {
    kinds
        .iter()
        .map(|&k| compute(k, reference, distorted, cfg).map_err(|e| CliError::Data(format!("{k}: {e}"))))
        .collect()
}

pub fn metric_notes(kinds: &[MetricKind]) -> BTreeMap<String, String> {
    let mut notes = BTreeMap::new();
    if kinds.contains(&MetricKind::Pcqm) {
        notes.insert("pcqm_color_space".to_string(), PCQM_COLOR_SPACE_NOTE.to_string());
    }
    notes
}

pub fn metric_csv(rows: &[(String, &MetricResult)]) -> CliResult<String> {
    let header = ["stimulus_id", "metric", "value", "polarity", "identical"].map(String::from);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|(id, r)| {
            vec![
                id.clone(),
                r.name.id().to_string(),
                csv_float(Some(r.value)),
                serde_json::to_value(r.polarity)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
                r.identical.to_string(),
            ]
        })
        .collect();
    cells_to_csv(&header, &cells)
}

// ---- recolor / prepare-stimuli -----------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecolorSummary {
    pub geometry: String,
    pub reference: String,
    pub output: String,
    pub points: usize,
}

pub fn recolor_file(geometry: &Path, reference: &Path, out: &Path, format: PlyFormat) -> CliResult<RecolorSummary> {
    let g = load_cloud(geometry)?;
    let r = load_cloud(reference)?;
    let colored = recolor(&g, &r)?;
    write_atomic(out, &write_ply(&colored, format))?;
    Ok(RecolorSummary {
        geometry: geometry.display().to_string(),
        reference: reference.display().to_string(),
        output: out.display().to_string(),
        points: colored.len(),
    })
}

/// Input row for `prepare-stimuli`: decoded geometry from a geometry codec
/// plus the textured reference it came from.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PrepareRow {
    #[serde(default)]
    pub stimulus_id: Option<String>,
    pub content: String,
    pub codec: String,
    pub rate: String,
    pub reference: PathBuf,
    pub geometry: PathBuf,
    pub geometry_bits: u64,
    /// Overrides the rate-index lookup into the default schedule.
    #[serde(default)]
    pub texture_rate: Option<f64>,
}

impl PrepareRow {
    pub fn id(&self) -> String {
        self.stimulus_id
            .clone()
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| format!("{}_{}_{}", self.content, self.codec, self.rate))
    }

    pub fn texture_rate(&self) -> CliResult<f64> {
        match self.texture_rate {
            Some(r) => Ok(r),
            None => scheduled_texture_rate(&self.rate),
        }
    }
}

/// `R01`..`R05` map onto the default attribute rate schedule.
pub fn scheduled_texture_rate(rate: &str) -> CliResult<f64> {
    let idx = rate
        .trim()
        .trim_start_matches(['R', 'r'])
        .parse::<usize>()
        .ok()
        .filter(|i| (1..=DEFAULT_RATE_SCHEDULE.len()).contains(i))
        .ok_or_else(|| CliError::Data(format!("rate `{rate}` is not R01..R05 and no texture_rate was given")))?;
    Ok(DEFAULT_RATE_SCHEDULE[idx - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreparedStimulus {
    pub stimulus_id: String,
    pub content: String,
    pub codec: String,
    pub rate: String,
    pub geometry_bits: u64,
    pub texture_bits: u64,
    pub points: u64,
    pub texture_rate: Option<f64>,
    pub bpp_geom: f64,
    pub bpp_texture: f64,
    pub bpp_total: f64,
    pub path: String,
}

pub struct PrepareOptions<'a> {
    pub out_dir: &'a Path,
    /// Without a codec, stimuli are recolored only and carry no texture bits.
    pub codec: Option<&'a CodecInvocation>,
}

/// Attribute stream bits from the encoder log, or the whole file size when
/// the log names no attribute stream.
pub fn texture_bits(outcome: &EncodeOutcome) -> u64 {
    let attribute: u64 = outcome
        .streams
        .iter()
        .filter(|(name, _)| !name.contains("position"))
        .map(|(_, b)| b)
        .sum();
    if attribute > 0 {
        attribute
    } else {
        outcome.total_bits
    }
}

pub fn prepare_stimulus(row: &PrepareRow, opts: &PrepareOptions<'_>) -> CliResult<PreparedStimulus> {
    let id = row.id();
    let reference = load_cloud(&row.reference)?;
    let geometry = load_cloud(&row.geometry)?;
    let colored = recolor(&geometry, &reference)?;
    let points = reference.len() as u64;

    let (decoded, texture_bits, texture_rate) = match opts.codec {
        Some(base) => {
            let mut inv = base.clone();
            inv.rate_param = row.texture_rate()?;
            let outcome = encode_texture_gpcc(&colored, &inv)?;
            let bits = texture_bits(&outcome);
            (outcome.decoded, bits, Some(inv.rate_param))
        }
        None => (colored, 0, None),
    };

    let path = opts.out_dir.join(format!("{id}.ply"));
    write_atomic(&path, &write_ply(&decoded, PlyFormat::BinaryLittleEndian))?;
    let rate = pcqa_core::stats::bitrate(row.geometry_bits, texture_bits, points)?;
    Ok(PreparedStimulus {
        stimulus_id: id,
        content: row.content.clone(),
        codec: row.codec.clone(),
        rate: row.rate.clone(),
        geometry_bits: row.geometry_bits,
        texture_bits,
        points,
        texture_rate,
        bpp_geom: rate.bpp_geometry,
        bpp_texture: pcqa_core::stats::bpp(texture_bits, points)?,
        bpp_total: rate.bpp_total,
        path: path.display().to_string(),
    })
}

// ---- benchmark ----------------------------------------------------------

/// Fits every metric present in `objective` against MOS over the stimuli
/// that have both.
pub fn benchmark_all(
    evaluation: &str,
    mos: &BTreeMap<String, MosEntry>,
    objective: &BTreeMap<String, BTreeMap<String, f64>>,
) -> CliResult<Vec<BenchmarkReport>> {
    let mut reports = Vec::new();
    for (metric, scores) in objective {
        let ids: Vec<String> = scores.keys().filter(|id| mos.contains_key(*id)).cloned().collect();
        let x: Vec<f64> = ids.iter().map(|id| scores[id]).collect();
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(CliError::Data(format!("{metric}: non-finite score for {}", ids[i])));
        }
        let y: Vec<f64> = ids.iter().map(|id| mos[id].mos).collect();
        let ci: Vec<f64> = ids.iter().map(|id| mos[id].ci95).collect();
        let report = benchmark_metric(metric, evaluation, ids, &x, &y, &ci)
            .map_err(|e| CliError::Data(format!("{metric}: {e}")))?;
        reports.push(report);
    }
    Ok(reports)
}

pub fn benchmark_csv(reports: &[BenchmarkReport]) -> CliResult<String> {
    let header = [
        "metric", "evaluation", "n", "beta1", "beta2", "beta3", "beta4", "degenerate_fit", "pcc", "srocc", "rmse", "or",
    ]
    .map(String::from);
    let cells: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut row = vec![r.metric.clone(), r.evaluation.clone(), r.stimuli.len().to_string()];
            row.extend(r.logistic.iter().map(|b| csv_float(Some(*b))));
            row.push(r.degenerate_fit.to_string());
            row.extend([r.pcc, r.srocc, r.rmse, r.or_].map(|v| csv_float(Some(v))));
            row
        })
        .collect();
    cells_to_csv(&header, &cells)
}

// ---- compare-evals ------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationComparison {
    pub stimuli: Vec<String>,
    /// Fit on MOS normalized to [0, 1].
    pub linear: LinearComparison,
    pub kruskal_wallis: KruskalWallis,
}

pub fn compare_evaluations(
    a: &BTreeMap<String, MosEntry>,
    b: &BTreeMap<String, MosEntry>,
) -> CliResult<EvaluationComparison> {
    let ids: Vec<String> = a.keys().filter(|id| b.contains_key(*id)).cloned().collect();
    let mos_a: Vec<f64> = ids.iter().map(|id| normalize_opinion(a[id].mos)).collect();
    let mos_b: Vec<f64> = ids.iter().map(|id| normalize_opinion(b[id].mos)).collect();
    let ci_b: Vec<f64> = ids.iter().map(|id| b[id].ci95 / 4.0).collect();
    let linear = linear_fit_compare(&mos_a, &mos_b, &ci_b)?;
    let kruskal_wallis = kruskal_wallis(&[&mos_a, &mos_b])?;
    Ok(EvaluationComparison {
        stimuli: ids,
        linear,
        kruskal_wallis,
    })
}

// ---- rd-table -----------------------------------------------------------

/// Plot-ready rate–distortion rows, one per stimulus in manifest order.
/// MOS columns are empty for stimuli without ratings.
pub fn rd_table_csv(
    stimuli: &[StimulusRow],
    mos: &BTreeMap<String, MosEntry>,
    objective: &BTreeMap<String, BTreeMap<String, f64>>,
) -> CliResult<String> {
    let mut header: Vec<String> = ["stimulus_id", "content", "codec", "rate", "bpp_geom", "bpp_total", "mos", "ci95"]
        .map(String::from)
        .to_vec();
    header.extend(objective.keys().cloned());
    let mut cells = Vec::with_capacity(stimuli.len());
    for s in stimuli {
        let rate = s.bitrate().map_err(|e| CliError::Data(format!("{}: {e}", s.stimulus_id)))?;
        let m = mos.get(&s.stimulus_id);
        let mut row = vec![
            s.stimulus_id.clone(),
            s.content.clone(),
            s.codec.clone(),
            s.rate.clone(),
            csv_float(Some(rate.bpp_geometry)),
            csv_float(Some(rate.bpp_total)),
            csv_float(m.map(|m| m.mos)),
            csv_float(m.map(|m| m.ci95)),
        ];
        row.extend(objective.values().map(|by_id| csv_float(by_id.get(&s.stimulus_id).copied())));
        cells.push(row);
    }
    cells_to_csv(&header, &cells)
}
