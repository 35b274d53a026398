//! Command-line surface of the screening pipeline. Each subcommand is a thin
//! wrapper over the library stages; see the crate examples for programmatic
//! use.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mci_screen::classifiers::{self, ClassifierSpec};
use mci_screen::dataset::{read_dataset, write_dataset, Dataset};
use mci_screen::evaluation::cer;
use mci_screen::pipeline::{self, PipelineConfig};
use mci_screen::selection;
use mci_screen::synth::{synth_corpus, SynthCorpusSpec};

#[derive(Parser)]
#[command(
    name = "mci-screen",
    about = "Speech/disfluency screening pipeline: segment, extract, select, classify",
    version
)]
struct Cli {
    /// Flat key=value config file (flags > file > defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config entry, e.g. --set selection.alpha=0.05 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// VAD a recording into speech/disfluency segments (CSV).
    Segment {
        wav: PathBuf,
        /// Output CSV (stdout when omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Extract the per-recording feature dataset from a directory of WAVs.
    Extract {
        dir: PathBuf,
        /// Manifest with `filename,label` lines (labels CR or MCI).
        #[arg(long)]
        labels: PathBuf,
        #[arg(short, long, default_value = "dataset.csv")]
        out: PathBuf,
        /// Skip unreadable or unlabeled files instead of aborting.
        #[arg(long)]
        skip_bad: bool,
    },
    /// Two-stage feature selection (U-test then SVM ranking) on a dataset.
    Select {
        dataset: PathBuf,
        #[arg(short, long, default_value = "selected.csv")]
        out: PathBuf,
        /// Where to write the per-feature selection report CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train one classifier on a prepared (selected + normalized) dataset.
    Train {
        dataset: PathBuf,
        /// knn | svm | mlp | cnn | majority
        #[arg(long)]
        classifier: String,
        #[arg(short, long, default_value = "model.txt")]
        out: PathBuf,
    },
    /// Evaluate a saved model on a prepared dataset.
    Evaluate {
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Full pipeline: extract (or load), select, cross-validate all four
    /// classifiers, and write the report artifacts.
    Run {
        /// Directory of WAVs (with --labels); omit when using --dataset.
        dir: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Reuse an extracted dataset CSV instead of a WAV directory.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Directory for report.json, selection.csv and cer_rows.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Cross-validation seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Repeat cross-validation with consecutive seeds.
        #[arg(long)]
        repeats: Option<usize>,
        /// Fit selection and normalization once on the full dataset instead
        /// of per training fold.
        #[arg(long)]
        global_preprocess: bool,
        #[arg(long)]
        skip_bad: bool,
    },
    /// Generate the synthetic two-class corpus (WAVs + labels + ground truth).
    Synth {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 30)]
        n_per_class: usize,
        /// Recording length in seconds.
        #[arg(long, default_value_t = 3.0)]
        duration: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>, String> {
    raw.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| format!("--set expects KEY=VALUE, got {s:?}"))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let overrides = parse_overrides(&cli.set)?;
    let mut cfg = PipelineConfig::resolve(cli.config.as_deref(), &overrides)?;

    match cli.cmd {
        Cmd::Segment { wav, out } => {
            let csv = pipeline::cmd_segment(&wav, &cfg)?;
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
        }
        Cmd::Extract {
            dir,
            labels,
            out,
            skip_bad,
        } => {
            let outcome = pipeline::cmd_extract(&dir, &labels, &cfg, skip_bad)?;
            report_skips(&outcome.skipped);
            write_dataset(&outcome.dataset, &out)?;
            println!(
                "extracted {} recordings x {} features -> {}",
                outcome.dataset.n_rows(),
                outcome.dataset.dim(),
                out.display()
            );
        }
        Cmd::Select {
            dataset,
            out,
            report,
        } => {
            let mut ds = read_dataset(&dataset)?;
            ds.impute_sentinels();
            let outcome = selection::two_stage_select(&ds, &cfg.selection)?;
            let params = selection::fit_minmax(&outcome.dataset);
            let mut selected = selection::apply_minmax(&outcome.dataset, &params);
            selected.provenance = ds.provenance.clone();
            write_dataset(&selected, &out)?;
            if let Some(path) = report {
                std::fs::write(
                    path,
                    format!("# config={}\n{}", cfg.hash(), outcome.report.to_csv()),
                )?;
            }
            println!("funnel: {}", outcome.funnel);
            println!("selected dataset -> {}", out.display());
        }
        Cmd::Train {
            dataset,
            classifier,
            out,
        } => {
            let ds = read_dataset(&dataset)?;
            let spec = spec_by_name(&classifier, &cfg)?;
            let model = classifiers::train(&spec, &ds)?;
            classifiers::save_model_tagged(
                &model,
                &out,
                &[("config".to_string(), cfg.hash())],
            )?;
            let cer = training_cer(&model, &ds)?;
            println!("trained {} on {} rows; training CER {cer:.2}%", spec.name(), ds.n_rows());
        }
        Cmd::Evaluate { dataset, model } => {
            let ds = read_dataset(&dataset)?;
            let model = classifiers::load_model(&model)?;
            let cer = training_cer(&model, &ds)?;
            println!("{}: CER {cer:.2}% on {} rows", model.kind(), ds.n_rows());
        }
        Cmd::Run {
            dir,
            labels,
            dataset,
            out_dir,
            seed,
            repeats,
            global_preprocess,
            skip_bad,
        } => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = repeats {
                cfg.repeats = r;
            }
            if global_preprocess {
                cfg.global_preprocess = true;
            }
            let ds = match (dataset, dir, labels) {
                (Some(csv), _, _) => {
                    // sentinels must not reach selection
                    let mut ds = read_dataset(&csv)?;
                    ds.impute_sentinels();
                    ds
                }
                (None, Some(dir), Some(labels)) => {
                    let outcome = pipeline::cmd_extract(&dir, &labels, &cfg, skip_bad)?;
                    report_skips(&outcome.skipped);
                    outcome.dataset
                }
                _ => return Err("run needs either --dataset or a DIR with --labels".into()),
            };
            let outcome = pipeline::cmd_run(&ds, &cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(
                out_dir.join("report.json"),
                serde_json::to_string_pretty(&outcome.report)?,
            )?;
            std::fs::write(
                out_dir.join("selection.csv"),
                format!("# config={}\n{}", cfg.hash(), outcome.selection.to_csv()),
            )?;
            let mut rows = format!(
                "# config={}\n{}\n",
                cfg.hash(),
                mci_screen::evaluation::EvaluationReport::csv_header()
            );
            for e in &outcome.report.evaluations {
                rows.push_str(&e.to_csv_row());
                rows.push('\n');
            }
            std::fs::write(out_dir.join("cer_rows.csv"), rows)?;

            println!("config: {}", outcome.report.config_hash);
            println!("{}", outcome.report.funnel_line());
            for e in &outcome.report.evaluations {
                println!(
                    "{:<8} seed {}: CER {:.2}% (CR {:.2}%, MCI {:.2}%) in {:.1}s",
                    e.classifier.name(),
                    e.seed,
                    e.overall_cer,
                    e.per_class_cer[0],
                    e.per_class_cer[1],
                    e.timing_s
                );
            }
            println!("report -> {}", out_dir.join("report.json").display());
        }
        Cmd::Synth {
            out_dir,
            n_per_class,
            duration,
            seed,
        } => {
            let spec = SynthCorpusSpec {
                n_per_class,
                duration_s: duration,
                seed,
                ..SynthCorpusSpec::default()
            };
            let hash = pipeline::sha256_short(&serde_json::to_string(&spec)?);
            let manifest = synth_corpus(&spec, &out_dir, &hash)?;
            println!(
                "wrote {} recordings (+ labels.csv, ground-truth segments) -> {}",
                manifest.len(),
                out_dir.display()
            );
        }
    }
    Ok(())
}

fn report_skips(skipped: &[String]) {
    for s in skipped {
        eprintln!("skipped {s}");
    }
}

fn spec_by_name(name: &str, cfg: &PipelineConfig) -> Result<ClassifierSpec, String> {
    Ok(match name {
        "knn" => ClassifierSpec::Knn(cfg.knn),
        "svm" => ClassifierSpec::Svm(cfg.svm.clone()),
        "mlp" => ClassifierSpec::Mlp(cfg.mlp.clone()),
        "cnn" => ClassifierSpec::Cnn(cfg.cnn.clone()),
        "majority" => ClassifierSpec::Majority,
        other => return Err(format!("unknown classifier {other:?}")),
    })
}

fn training_cer(
    model: &classifiers::TrainedModel,
    ds: &Dataset,
) -> Result<f64, mci_screen::Error> {
    let mut predicted = Vec::with_capacity(ds.n_rows());
    for row in &ds.rows {
        predicted.push(classifiers::predict(model, row)?);
    }
    cer(&predicted, &ds.labels)
}
