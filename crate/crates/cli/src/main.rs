use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use polygen_core::dataset::{
    convert_rep, dataset_stats, filter_by_vrep_length, half_split, load_dataset,
    resolve_data_path, serialize_dataset, ParsedSample, Sample, SplitManifest, SplitSpec,
};
use polygen_core::equivalence::DatasetIndex;
use polygen_core::eval::{
    evaluate, perturbation_draws, perturbation_experiment_with, EvalReport, Reference, RunConfig,
};
use polygen_core::ngram::{render_generated, NGramModel, DEFAULT_ORDER};
use polygen_core::polytope::DEFAULT_CAP;
use polygen_core::properties::{check_matrix, Representation};
use polygen_core::Error;

#[derive(Parser)]
#[command(name = "polygen", version, about = "Lattice polytope dataset and evaluation toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Dataset file; relative paths are also looked up under POLYGEN_DATA_DIR.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Encoding of the dataset rows.
    #[arg(long, global = true, value_enum, default_value_t = Rep::H)]
    rep: Rep,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1000)]
    num_samples: usize,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Maximum number of lattice points held at once; the normality check may
    /// stream up to 500 times as many parallelepiped points.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    cap: usize,
    #[arg(long, global = true)]
    split_manifest: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rep {
    H,
    V,
}

impl From<Rep> for Representation {
    fn from(r: Rep) -> Self {
        match r {
            Rep::H => Representation::Hyperplane,
            Rep::V => Representation::ConvexHull,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a dataset and report sample and ill-formed block counts.
    Ingest,
    /// Dataset statistics as JSON.
    Stats,
    /// Switch every sample to the other encoding.
    Convert {
        /// Keep only hyperplane samples whose hull encoding has fewer tokens.
        #[arg(long)]
        vrep_threshold: Option<usize>,
        /// With --vrep-threshold, write the kept samples unconverted.
        #[arg(long)]
        keep_rep: bool,
    },
    /// Write a seeded half split manifest.
    Split,
    /// Perturb random dataset members once each and report their properties.
    Perturb {
        /// Also write the perturbed samples here.
        #[arg(long)]
        samples_out: Option<PathBuf>,
    },
    /// Fit the n-gram baseline on the dataset.
    BaselineFit {
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
    },
    /// Sample matrices from a fitted baseline.
    BaselineSample {
        #[arg(long)]
        model: PathBuf,
        /// Token bound per sample (default: longest training sequence + 16).
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Check the properties of every sample, one JSON line each.
    Check {
        /// Samples file (default: --data).
        samples: Option<PathBuf>,
    },
    /// Build the invariant-key index of the dataset.
    IndexBuild,
    /// Evaluate generated samples against the training dataset.
    Evaluate {
        #[arg(long)]
        samples: PathBuf,
        /// Encoding of the generated samples (default: --rep).
        #[arg(long, value_enum)]
        samples_rep: Option<Rep>,
        /// Prebuilt index (default: built from --data).
        #[arg(long)]
        index: Option<PathBuf>,
        /// Also write the CSV table here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render a saved JSON report.
    Report {
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<Usage>()) {
                return ExitCode::from(1);
            }
            let inconsistent = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::Inconsistency(_))));
            ExitCode::from(if inconsistent { 3 } else { 2 })
        }
    }
}

/// A missing or contradictory argument that clap cannot detect.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn run(cli: Cli) -> anyhow::Result<()> {
    let c = &cli.common;
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    match &cli.command {
        Command::Ingest => {
            let parsed = load(c.data.as_deref(), c.rep.into())?;
            let ill: Vec<usize> = parsed
                .iter()
                .filter(|p| p.as_sample().is_none())
                .map(ParsedSample::id)
                .collect();
            let samples: Vec<Sample> = parsed.iter().filter_map(|p| p.as_sample().cloned()).collect();
            let out_of_range = samples
                .iter()
                .filter(|s| {
                    let d = s.matrix.ncols();
                    s.matrix.nrows() < d + 1 || s.matrix.nrows() > 3 * d
                })
                .count();
            let summary = serde_json::json!({
                "samples": samples.len(),
                "ill_formed": ill.len(),
                "ill_formed_ids": ill,
                "row_count_outside_d_plus_1_to_3d": out_of_range,
            });
            emit(c, &format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
            if !ill.is_empty() {
                bail!("{} ill-formed blocks", ill.len());
            }
        }
        Command::Stats => {
            let samples = load_samples(c)?;
            emit(c, &format!("{}\n", serde_json::to_string_pretty(&dataset_stats(&samples))?))?;
        }
        Command::Convert {
            vrep_threshold,
            keep_rep,
        } => {
            let mut samples = load_samples(c)?;
            if let Some(t) = vrep_threshold {
                samples = filter_by_vrep_length(&samples, *t)?;
            }
            let out = if *keep_rep {
                samples
            } else {
                samples.iter().map(convert_rep).collect::<Result<Vec<_>, _>>()?
            };
            emit(c, &serialize_dataset(out.iter().map(|s| &s.matrix)))?;
        }
        Command::Split => {
            let parsed = load(c.data.as_deref(), c.rep.into())?;
            let ids: Vec<usize> = parsed.iter().map(ParsedSample::id).collect();
            emit(c, &format!("{}\n", half_split(&ids, SplitSpec::halves(c.seed)).to_json()))?;
        }
        Command::Perturb { samples_out } => {
            let samples = load_samples(c)?;
            let config = run_config(c, None);
            if let Some(path) = samples_out {
                let draws = perturbation_draws(&samples, c.num_samples, c.seed)?;
                write_file(path, &serialize_dataset(draws.iter().map(|s| &s.matrix)))?;
            }
            let report = perturbation_experiment_with(&samples, &config)?;
            emit(c, &report.to_json())?;
        }
        Command::BaselineFit { order } => {
            let samples = load_samples(c)?;
            emit(c, &NGramModel::fit(&samples, *order)?.to_text())?;
        }
        Command::BaselineSample { model, max_len } => {
            let text = fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
            let model = NGramModel::from_text(&text)?;
            let max_len = max_len.unwrap_or_else(|| model.default_max_len());
            let blocks: Vec<String> = model
                .sample_many(c.num_samples, c.seed, max_len)
                .iter()
                .map(render_generated)
                .collect();
            emit(c, &blocks.join("\n"))?;
        }
        Command::Check { samples } => {
            let path = samples.as_deref().or(c.data.as_deref());
            let parsed = load(path, c.rep.into())?;
            let cap = c.cap;
            let lines: Vec<String> = {
                use rayon::prelude::*;
                parsed
                    .par_iter()
                    .map(|p| {
                        let report = match p {
                            ParsedSample::Sample(s) => check_matrix(&s.matrix, s.rep, cap),
                            ParsedSample::IllFormed(_) => {
                                polygen_core::properties::PropertyReport::ill_formed()
                            }
                        };
                        let mut v = serde_json::to_value(report).expect("report serializes");
                        v["id"] = p.id().into();
                        v.to_string()
                    })
                    .collect()
            };
            let mut out = lines.join("\n");
            if !out.is_empty() {
                out.push('\n');
            }
            emit(c, &out)?;
        }
        Command::IndexBuild => {
            let samples = load_samples(c)?;
            emit(c, &DatasetIndex::build(&samples)?.to_text())?;
        }
        Command::Evaluate {
            samples,
            samples_rep,
            index,
            csv,
        } => {
            let training = load_samples(c)?;
            let rep = samples_rep.unwrap_or(c.rep).into();
            let generated = load(Some(samples), rep)?;
            let index = match index {
                Some(p) => DatasetIndex::from_text(&read(p)?)?,
                None => DatasetIndex::build(&training)?,
            };
            let manifest = match &c.split_manifest {
                Some(p) => Some(SplitManifest::from_json(&read(p)?)?),
                None => None,
            };
            let reference = Reference {
                training: &training,
                index: &index,
                manifest: manifest.as_ref(),
            };
            let mut config = run_config(c, Some(samples));
            config.rep = rep;
            config.num_samples = generated.len();
            let report = evaluate(&generated, Some(&reference), &config)?;
            if let Some(path) = csv {
                write_file(path, &report.to_csv())?;
            }
            emit(c, &report.to_json())?;
        }
        Command::Report { report, format } => {
            let report = EvalReport::from_json(&read(report)?)?;
            report.check_invariants().map_err(|e| anyhow!(e))?;
            emit(c, &match format {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
            })?;
        }
    }
    Ok(())
}

fn run_config(c: &Common, samples: Option<&Path>) -> RunConfig {
    RunConfig {
        dataset: c.data.as_ref().map(|p| p.display().to_string()),
        rep: c.rep.into(),
        samples: samples.map(|p| p.display().to_string()),
        num_samples: c.num_samples,
        seed: c.seed,
        threads: None,
        cap: c.cap,
        split_manifest: c.split_manifest.as_ref().map(|p| p.display().to_string()),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(resolve_data_path(path)).with_context(|| format!("reading {}", path.display()))
}

fn load(path: Option<&Path>, rep: Representation) -> anyhow::Result<Vec<ParsedSample>> {
    let path = path.ok_or_else(|| Usage("--data is required".into()))?;
    load_dataset(path, rep).with_context(|| format!("reading {}", path.display()))
}

/// Well-formed samples of --data; any ill-formed block is an error.
fn load_samples(c: &Common) -> anyhow::Result<Vec<Sample>> {
    load(c.data.as_deref(), c.rep.into())?
        .into_iter()
        .map(|p| match p {
            ParsedSample::Sample(s) => Ok(s),
            ParsedSample::IllFormed(b) => Err(anyhow!("block {} of the dataset: {}", b.id, b.reason)),
        })
        .collect()
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(c: &Common, text: &str) -> anyhow::Result<()> {
    match &c.out {
        Some(path) => write_file(path, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
