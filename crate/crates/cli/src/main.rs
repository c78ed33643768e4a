use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pcqa_cli::commands::{
    benchmark_all, benchmark_csv, characterize_csv, characterize_file, compare_evaluations, compute_metrics,
    load_cloud, metric_csv, metric_notes, parse_metric_list, prepare_stimulus, rd_table_csv, recolor_file,
    PrepareOptions, PrepareRow,
};
use pcqa_cli::pipeline::{parse_steps, run_pipeline, PipelineOptions};
use pcqa_cli::report::{emit, to_canonical_json, write_atomic};
use pcqa_cli::tables::{mos_table, objective_table, read_csv, to_csv, ObjectiveRow, RawScoreRow, StimulusRow};
use pcqa_cli::{CliError, CliResult, LoadedProfile, RunManifest};
use pcqa_core::characterization::DEFAULT_SPARSITY_K;
use pcqa_core::ply::PlyFormat;
use pcqa_core::texture::CodecInvocation;
use serde::Serialize;

const ALL_METRICS: &str = "d1,d2,pssim,pcqm,p2d,pcmrr,graphsim";

#[derive(Parser)]
#[command(name = "pcqa", version, about = "Point-cloud quality assessment and codec benchmarking")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Metric profile (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct CodecArgs {
    /// TMC13 encoder/decoder binary.
    #[arg(long, env = "PCQA_GPCC_BIN")]
    gpcc_bin: Option<PathBuf>,

    /// Encoder configuration template with a `{{rate_param}}` placeholder.
    #[arg(long)]
    template: Option<PathBuf>,

    /// Keep per-run codec working directories.
    #[arg(long)]
    keep_workdir: bool,
}

impl CodecArgs {
    fn invocation(&self) -> CliResult<Option<CodecInvocation>> {
        let Some(bin) = &self.gpcc_bin else {
            return Ok(None);
        };
        let mut inv = CodecInvocation::new(bin, 0.0);
        if let Some(t) = &self.template {
            inv.config_template = std::fs::read_to_string(t).map_err(|e| CliError::io(t, e))?;
        }
        inv.keep_workdir = self.keep_workdir;
        inv.validate()?;
        Ok(Some(inv))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sparsity, color gamut volume and YCbCr deviations of each cloud.
    Characterize {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SPARSITY_K)]
        k: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full-reference metrics between two clouds.
    Metric {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, default_value = ALL_METRICS)]
        metrics: String,
        /// PSNR peak; overrides the profile.
        #[arg(long)]
        peak: Option<f64>,
        /// D1/D2 from distorted to reference only.
        #[arg(long)]
        one_way: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transfers reference colors onto decoded geometry by nearest neighbor.
    Recolor {
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ascii: bool,
    },
    /// Recolors decoded geometries and, with a G-PCC binary, codes their
    /// texture with lossless geometry.
    PrepareStimuli {
        /// CSV: content, codec, rate, reference, geometry, geometry_bits
        /// [, stimulus_id, texture_rate].
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Logistic fit and PCC/SROCC/RMSE/OR of each metric against MOS.
    Benchmark {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        objective: PathBuf,
        #[arg(long, default_value = "evaluation")]
        evaluation: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linear fit and Kruskal–Wallis test between two subjective evaluations.
    CompareEvals {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate–distortion table: bitrates, MOS and metric columns per stimulus.
    RdTable {
        #[arg(long)]
        stimuli: PathBuf,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        objective: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs subcommands over every row of a stimulus manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated steps: characterize, recolor, prepare-stimuli,
        /// metric, benchmark.
        #[arg(long, default_value = "metric")]
        commands: String,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = ALL_METRICS)]
        metrics: String,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, default_value = "evaluation")]
        evaluation: String,
        #[command(flatten)]
        codec: CodecArgs,
    },
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    manifest: RunManifest,
    #[serde(skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    notes: std::collections::BTreeMap<String, String>,
    #[serde(flatten)]
    body: &'a T,
}

fn json_report<T: Serialize>(manifest: RunManifest, body: &T) -> CliResult<String> {
    json_report_with_notes(manifest, Default::default(), body)
}

fn json_report_with_notes<T: Serialize>(
    manifest: RunManifest,
    notes: std::collections::BTreeMap<String, String>,
    body: &T,
) -> CliResult<String> {
    to_canonical_json(&Report { manifest, notes, body })
}

fn manifest_for(command: &str, profile: &LoadedProfile, inputs: &[&Path]) -> CliResult<RunManifest> {
    let mut m = RunManifest::new(command, profile)?;
    for p in inputs {
        m.add_input(p)?;
    }
    Ok(m)
}

fn run(cli: Cli) -> CliResult<i32> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut profile = LoadedProfile::load(cli.config.as_deref())?;

    match cli.command {
        Command::Characterize { inputs, k, format, out } => {
            let matrix = profile.config().ycbcr_matrix;
            let rows = inputs
                .iter()
                .map(|p| characterize_file(p, k, matrix))
                .collect::<CliResult<Vec<_>>>()?;
            let text = match format {
                Format::Csv => characterize_csv(&rows)?,
                Format::Json => {
                    let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
                    #[derive(Serialize)]
                    struct Body<'a> {
                        sparsity_k: usize,
                        profiles: &'a [pcqa_cli::commands::CharacterizeRow],
                    }
                    json_report(manifest_for("characterize", &profile, &refs)?, &Body { sparsity_k: k, profiles: &rows })?
                }
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Metric { reference, dist, metrics, peak, one_way, format, out } => {
            let kinds = parse_metric_list(&metrics)?;
            if peak.is_some() {
                profile.profile.metrics.peak_value = peak;
            }
            if one_way {
                profile.profile.metrics.symmetric = false;
            }
            profile.config().validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let r = load_cloud(&reference)?;
            let d = load_cloud(&dist)?;
            let results = compute_metrics(&r, &d, &kinds, profile.config())?;
            let text = match format {
                Format::Csv => {
                    let id = dist.display().to_string();
                    let rows: Vec<_> = results.iter().map(|m| (id.clone(), m)).collect();
                    metric_csv(&rows)?
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Body<'a> {
                        results: &'a [pcqa_core::MetricResult],
                    }
                    let manifest = manifest_for("metric", &profile, &[&reference, &dist])?;
                    json_report_with_notes(manifest, metric_notes(&kinds), &Body { results: &results })?
                }
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Recolor { geometry, reference, out, ascii } => {
            let format = if ascii { PlyFormat::Ascii } else { PlyFormat::BinaryLittleEndian };
            let manifest = manifest_for("recolor", &profile, &[&geometry, &reference])?;
            let summary = recolor_file(&geometry, &reference, &out, format)?;
            emit(None, &json_report(manifest, &summary)?)?;
        }
        Command::PrepareStimuli { manifest, out_dir, codec } => {
            let rows: Vec<PrepareRow> =
                read_csv(&manifest).map_err(|e| CliError::Usage(format!("unreadable manifest: {e}")))?;
            let invocation = codec.invocation()?;
            let run_manifest = manifest_for("prepare-stimuli", &profile, &[&manifest])?;
            let opts = PrepareOptions {
                out_dir: &out_dir,
                codec: invocation.as_ref(),
            };
            use rayon::prelude::*;
            let results: Vec<CliResult<_>> = rows.par_iter().map(|r| prepare_stimulus(r, &opts)).collect();
            let mut prepared = Vec::new();
            let mut failures = Vec::new();
            for (row, res) in rows.iter().zip(results) {
                match res {
                    Ok(p) => {
                        eprintln!("row {}: ok", p.stimulus_id);
                        prepared.push(p);
                    }
                    Err(e) => {
                        eprintln!("row {}: FAILED: {e}", row.id());
                        failures.push((row.id(), e.to_string()));
                    }
                }
            }
            write_atomic(&out_dir.join("stimuli.csv"), to_csv(&prepared)?.as_bytes())?;
            #[derive(Serialize)]
            struct Body<'a, P: Serialize> {
                stimuli: &'a [P],
                failures: std::collections::BTreeMap<String, String>,
            }
            let body = Body {
                stimuli: &prepared,
                failures: failures.iter().cloned().collect(),
            };
            emit(None, &json_report(run_manifest, &body)?)?;
            return Ok(i32::from(!failures.is_empty()));
        }
        Command::Benchmark { scores, objective, evaluation, format, out } => {
            let mos = mos_table(&read_csv::<RawScoreRow>(&scores)?)?;
            let obj = objective_table(&read_csv::<ObjectiveRow>(&objective)?)?;
            let reports = benchmark_all(&evaluation, &mos, &obj)?;
            let text = match format {
                Format::Csv => benchmark_csv(&reports)?,
                Format::Json => {
                    #[derive(Serialize)]
                    struct Body<'a> {
                        reports: &'a [pcqa_core::stats::BenchmarkReport],
                    }
                    json_report(manifest_for("benchmark", &profile, &[&scores, &objective])?, &Body { reports: &reports })?
                }
            };
            emit(out.as_deref(), &text)?;
        }
        Command::CompareEvals { a, b, out } => {
            let mos_a = mos_table(&read_csv::<RawScoreRow>(&a)?)?;
            let mos_b = mos_table(&read_csv::<RawScoreRow>(&b)?)?;
            let cmp = compare_evaluations(&mos_a, &mos_b)?;
            emit(out.as_deref(), &json_report(manifest_for("compare-evals", &profile, &[&a, &b])?, &cmp)?)?;
        }
        Command::RdTable { stimuli, scores, objective, out } => {
            let rows = read_csv::<StimulusRow>(&stimuli)?;
            let mos = match &scores {
                Some(p) => mos_table(&read_csv::<RawScoreRow>(p)?)?,
                None => Default::default(),
            };
            let obj = match &objective {
                Some(p) => objective_table(&read_csv::<ObjectiveRow>(p)?)?,
                None => Default::default(),
            };
            emit(out.as_deref(), &rd_table_csv(&rows, &mos, &obj)?)?;
        }
        Command::Run { manifest, commands, out_dir, metrics, scores, evaluation, codec } => {
            let opts = PipelineOptions {
                manifest,
                steps: parse_steps(&commands)?,
                out_dir,
                metrics: parse_metric_list(&metrics)?,
                profile,
                codec: codec.invocation()?,
                scores,
                evaluation,
            };
            let report = run_pipeline(&opts)?;
            eprintln!(
                "{} row(s), {} failed; report at {}",
                report.rows.len(),
                report.failed_rows,
                opts.out_dir.join("report.json").display()
            );
            return Ok(report.exit_code());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
