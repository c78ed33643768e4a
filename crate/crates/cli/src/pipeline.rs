//! Batch execution of subcommands over a stimulus manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use pcqa_core::characterization::{characterize, ContentProfile, DEFAULT_SPARSITY_K};
use pcqa_core::ply::{write_ply, PlyFormat};
use pcqa_core::stats::BenchmarkReport;
use pcqa_core::texture::{encode_texture_gpcc, recolor, CodecInvocation};
use pcqa_core::{MetricKind, MetricResult, PointCloud};
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{benchmark_all, scheduled_texture_rate, texture_bits, compute_metrics, load_cloud, metric_notes, rd_table_csv};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::profile::LoadedProfile;
use crate::report::{to_canonical_json, write_atomic};
use crate::tables::{mos_table, read_csv, to_csv, ObjectiveRow, PipelineRow, RawScoreRow, StimulusRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Step {
    Characterize,
    Metric,
    Recolor,
    PrepareStimuli,
    Benchmark,
}

impl FromStr for Step {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s.trim() {
            "characterize" => Step::Characterize,
            "metric" => Step::Metric,
            "recolor" => Step::Recolor,
            "prepare-stimuli" => Step::PrepareStimuli,
            "benchmark" => Step::Benchmark,
            other => return Err(CliError::Usage(format!("unknown pipeline subcommand `{other}`"))),
        })
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Step::Characterize => "characterize",
            Step::Metric => "metric",
            Step::Recolor => "recolor",
            Step::PrepareStimuli => "prepare-stimuli",
            Step::Benchmark => "benchmark",
        })
    }
}

pub fn parse_steps(list: &str) -> CliResult<Vec<Step>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

pub struct PipelineOptions {
    pub manifest: PathBuf,
    pub steps: Vec<Step>,
    pub out_dir: PathBuf,
    pub metrics: Vec<MetricKind>,
    pub profile: LoadedProfile,
    pub codec: Option<CodecInvocation>,
    /// Raw opinion scores; required by the benchmark step, optional for
    /// the MOS columns of the RD table.
    pub scores: Option<PathBuf>,
    pub evaluation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowOutcome {
    pub stimulus_id: String,
    pub ok: bool,
    pub error: Option<String>,
    pub characterization: Option<ContentProfile>,
    pub recolored: Option<String>,
    pub stimulus: Option<String>,
    pub texture_bits: Option<u64>,
    pub metrics: Vec<MetricResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub manifest: RunManifest,
    pub steps: Vec<Step>,
    pub notes: BTreeMap<String, String>,
    pub failed_rows: usize,
    pub rows: Vec<RowOutcome>,
    pub benchmark: Option<Vec<BenchmarkReport>>,
}

impl PipelineReport {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.failed_rows > 0)
    }
}

fn run_row(row: &PipelineRow, opts: &PipelineOptions) -> RowOutcome {
    let mut outcome = RowOutcome {
        stimulus_id: row.stimulus_id.clone(),
        ok: true,
        error: None,
        characterization: None,
        recolored: None,
        stimulus: None,
        texture_bits: None,
        metrics: Vec::new(),
    };
    if let Err(e) = process_row(row, opts, &mut outcome) {
        outcome.ok = false;
        outcome.error = Some(e.to_string());
        outcome.metrics.clear();
    }
    outcome
}

fn process_row(row: &PipelineRow, opts: &PipelineOptions, out: &mut RowOutcome) -> CliResult<()> {
    let reference = load_cloud(&row.reference)?;
    let mut distorted: PointCloud = load_cloud(&row.distorted)?;
    for step in &opts.steps {
        match step {
            Step::Characterize => {
                out.characterization = Some(characterize(
                    &reference,
                    DEFAULT_SPARSITY_K,
                    opts.profile.config().ycbcr_matrix,
                )?);
            }
            Step::Recolor => {
                distorted = recolor(&distorted, &reference)?;
                let path = opts.out_dir.join("recolored").join(format!("{}.ply", row.stimulus_id));
                write_atomic(&path, &write_ply(&distorted, PlyFormat::BinaryLittleEndian))?;
                out.recolored = Some(path.display().to_string());
            }
            Step::PrepareStimuli => {
                let codec = opts
                    .codec
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("prepare-stimuli needs a G-PCC binary".into()))?;
                let colored = if distorted.colors().is_some() {
                    distorted.clone()
                } else {
                    recolor(&distorted, &reference)?
                };
                let mut inv = codec.clone();
                inv.rate_param = scheduled_texture_rate(&row.rate)?;
                let outcome = encode_texture_gpcc(&colored, &inv)?;
                out.texture_bits = Some(texture_bits(&outcome));
                distorted = outcome.decoded;
                let path = opts.out_dir.join("stimuli").join(format!("{}.ply", row.stimulus_id));
                write_atomic(&path, &write_ply(&distorted, PlyFormat::BinaryLittleEndian))?;
                out.stimulus = Some(path.display().to_string());
            }
            Step::Metric => {
                out.metrics = compute_metrics(&reference, &distorted, &opts.metrics, opts.profile.config())?;
            }
            Step::Benchmark => {}
        }
    }
    Ok(())
}

fn objective_rows(rows: &[RowOutcome]) -> Vec<ObjectiveRow> {
    rows.iter()
        .filter(|r| r.ok)
        .flat_map(|r| {
            r.metrics.iter().map(|m| ObjectiveRow {
                stimulus_id: r.stimulus_id.clone(),
                metric: m.name.id().to_string(),
                value: m.value,
            })
        })
        .collect()
}

/// Runs the steps over every manifest row and writes `report.json`,
/// `objective.csv` and `rd_table.csv` (plus `benchmark.json` when requested)
/// into the output directory. Row failures are recorded, not fatal.
pub fn run_pipeline(opts: &PipelineOptions) -> CliResult<PipelineReport> {
    if opts.steps.contains(&Step::Benchmark) && opts.scores.is_none() {
        return Err(CliError::Usage("the benchmark step needs --scores".into()));
    }
    if opts.steps.contains(&Step::PrepareStimuli) && opts.codec.is_none() {
        return Err(CliError::Usage("prepare-stimuli needs a G-PCC binary (--gpcc-bin)".into()));
    }
    let rows: Vec<PipelineRow> = read_csv(&opts.manifest).map_err(|e| CliError::Usage(format!("unreadable manifest: {e}")))?;

    let mut manifest = RunManifest::new("run", &opts.profile)?;
    manifest.add_input(&opts.manifest)?;
    if let Some(s) = &opts.scores {
        manifest.add_input(s)?;
    }
    for r in &rows {
        for p in [&r.reference, &r.distorted] {
            if p.is_file() {
                manifest.add_input(p)?;
            }
        }
    }

    let outcomes: Vec<RowOutcome> = rows.par_iter().map(|r| run_row(r, opts)).collect();
    for o in &outcomes {
        match &o.error {
            None => eprintln!("row {}: ok", o.stimulus_id),
            Some(e) => eprintln!("row {}: FAILED: {e}", o.stimulus_id),
        }
    }

    let objective = objective_rows(&outcomes);
    let objective_map = crate::tables::objective_table(&objective)?;
    let mos = match &opts.scores {
        Some(path) => mos_table(&read_csv::<RawScoreRow>(path)?)?,
        None => BTreeMap::new(),
    };
    let benchmark = if opts.steps.contains(&Step::Benchmark) {
        Some(benchmark_all(&opts.evaluation, &mos, &objective_map)?)
    } else {
        None
    };

    let stimuli: Vec<StimulusRow> = rows
        .iter()
        .zip(&outcomes)
        .filter_map(|(r, o)| {
            let mut s = r.stimulus()?;
            if let Some(bits) = o.texture_bits {
                s.texture_bits = bits;
            }
            Some(s)
        })
        .collect();

    let report = PipelineReport {
        manifest,
        steps: opts.steps.clone(),
        notes: if opts.steps.contains(&Step::Metric) { metric_notes(&opts.metrics) } else { BTreeMap::new() },
        failed_rows: outcomes.iter().filter(|o| !o.ok).count(),
        rows: outcomes,
        benchmark,
    };

    let out = &opts.out_dir;
    write_atomic(&out.join("objective.csv"), to_csv(&objective)?.as_bytes())?;
    write_atomic(&out.join("rd_table.csv"), rd_table_csv(&stimuli, &mos, &objective_map)?.as_bytes())?;
    if let Some(b) = &report.benchmark {
        write_atomic(&out.join("benchmark.json"), to_canonical_json(b)?.as_bytes())?;
    }
    write_atomic(&out.join("report.json"), to_canonical_json(&report)?.as_bytes())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_names_round_trip() {
        let steps = parse_steps("characterize,metric,recolor,prepare-stimuli,benchmark").unwrap();
        let joined: Vec<String> = steps.iter().map(Step::to_string).collect();
        assert_eq!(joined.join(","), "characterize,metric,recolor,prepare-stimuli,benchmark");
        assert!(matches!(parse_steps("metric,plot"), Err(CliError::Usage(_))));
    }
}
