//! Pipeline configuration and stage orchestration.
//!
//! The configuration is a flat `key=value` text format with defaults,
//! file values, and explicit overrides layered in that order. Its canonical
//! serialization is hashed (SHA-256, first 16 hex digits) and the hash is
//! embedded in every artifact the pipeline writes, so artifacts with equal
//! hashes came from identical configs.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::assembly::{self, FeatureConfig};
use crate::audio::{self, AudioSignal};
use crate::classifiers::{ClassifierSpec, CnnSpec, KnnSpec, MlpSpec, SvmSpec};
use crate::dataset::{ClassLabel, Dataset, NamedFeatureVector};
use crate::error::{Error, Result};
use crate::evaluation::{self, CvConfig, EvaluationReport, PreprocessPolicy};
use crate::segmentation::{self, VadConfig};
use crate::selection::{self, Funnel, SelectionConfig, SelectionReport};

/// Everything the pipeline needs, wired from flat keys.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PipelineConfig {
    /// Canonical analysis rate; inputs are resampled to it on load.
    pub rate: u32,
    pub vad: VadConfig,
    pub features: FeatureConfig,
    pub selection: SelectionConfig,
    pub cv_folds: usize,
    pub seed: u64,
    pub repeats: usize,
    pub global_preprocess: bool,
    pub knn: KnnSpec,
    pub svm: SvmSpec,
    pub mlp: MlpSpec,
    pub cnn: CnnSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            rate: audio::CANONICAL_RATE,
            vad: VadConfig::default(),
            features: FeatureConfig::default(),
            selection: SelectionConfig::default(),
            cv_folds: 10,
            seed: 42,
            repeats: 1,
            global_preprocess: false,
            knn: KnnSpec::default(),
            svm: SvmSpec::default(),
            mlp: MlpSpec::default(),
            cnn: CnnSpec::default(),
        }
    }
}

fn fmt_bool(v: bool) -> String {
    v.to_string()
}

impl PipelineConfig {
    /// Canonical flat serialization, fixed key order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let f = &self.features;
        let mut e: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| e.push((k.to_string(), v));
        push("audio.rate", self.rate.to_string());
        push("vad.frame_ms", self.vad.frame_ms.to_string());
        push("vad.hop_ms", self.vad.hop_ms.to_string());
        push(
            "vad.energy_threshold_factor",
            self.vad.energy_threshold_factor.to_string(),
        );
        push("vad.zcr_threshold", self.vad.zcr_threshold.to_string());
        push("vad.hangover_frames", self.vad.hangover_frames.to_string());
        push("vad.min_segment_ms", self.vad.min_segment_ms.to_string());
        push(
            "vad.min_active_energy",
            self.vad.min_active_energy.to_string(),
        );
        push("features.frame_ms", f.frame_ms.to_string());
        push("features.hop_ms", f.hop_ms.to_string());
        push("features.n_mels", f.n_mels.to_string());
        push("features.n_mfcc", f.n_mfcc.to_string());
        push("features.lpcc_order", f.lpcc_order.to_string());
        push("features.lpcc_coeffs", f.lpcc_coeffs.to_string());
        push("features.plp_order", f.plp_order.to_string());
        push("features.delta_width", f.delta_width.to_string());
        push("features.deltas_on_lpcc", fmt_bool(f.deltas_on_lpcc));
        push("features.deltas_on_plp", fmt_bool(f.deltas_on_plp));
        push("features.f0_min", f.f0_min.to_string());
        push("features.f0_max", f.f0_max.to_string());
        push(
            "features.voicing_threshold",
            f.voicing_threshold.to_string(),
        );
        push(
            "features.formant_lpc_order",
            f.formant_lpc_order
                .map(|v| v.to_string())
                .unwrap_or_else(|| "auto".to_string()),
        );
        push("features.entropy_bins", f.entropy_bins.to_string());
        push("features.higuchi_kmax", f.higuchi_kmax.to_string());
        push("features.pe_order", f.pe_order.to_string());
        push("features.pe_delay", f.pe_delay.to_string());
        push("features.mspe_scales", f.mspe_scales.to_string());
        push("selection.alpha", self.selection.alpha.to_string());
        push("selection.top_k", self.selection.top_k.to_string());
        push("cv.folds", self.cv_folds.to_string());
        push("cv.seed", self.seed.to_string());
        push("cv.repeats", self.repeats.to_string());
        push("cv.global_preprocess", fmt_bool(self.global_preprocess));
        push("knn.k", self.knn.k.to_string());
        push("svm.c", self.svm.c.to_string());
        push("svm.tolerance", self.svm.tolerance.to_string());
        push("svm.max_iters", self.svm.max_iters.to_string());
        push(
            "mlp.hidden",
            self.mlp
                .hidden
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        push("mlp.learning_rate", self.mlp.learning_rate.to_string());
        push("mlp.epochs", self.mlp.epochs.to_string());
        push("mlp.seed", self.mlp.seed.to_string());
        push("cnn.n_filters", self.cnn.n_filters.to_string());
        push("cnn.conv", self.cnn.conv.to_string());
        push("cnn.pool", self.cnn.pool.to_string());
        push("cnn.dense", self.cnn.dense.to_string());
        push("cnn.learning_rate", self.cnn.learning_rate.to_string());
        push("cnn.epochs", self.cnn.epochs.to_string());
        push("cnn.seed", self.cnn.seed.to_string());
        e
    }

    /// Apply one flat `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.trim().parse::<T>().map_err(|e| Error::BadConfig {
                key: key.to_string(),
                detail: format!("{e} (value {v:?})"),
            })
        }
        let f = &mut self.features;
        match key {
            "audio.rate" => self.rate = num(key, value)?,
            "vad.frame_ms" => self.vad.frame_ms = num(key, value)?,
            "vad.hop_ms" => self.vad.hop_ms = num(key, value)?,
            "vad.energy_threshold_factor" => self.vad.energy_threshold_factor = num(key, value)?,
            "vad.zcr_threshold" => self.vad.zcr_threshold = num(key, value)?,
            "vad.hangover_frames" => self.vad.hangover_frames = num(key, value)?,
            "vad.min_segment_ms" => self.vad.min_segment_ms = num(key, value)?,
            "vad.min_active_energy" => self.vad.min_active_energy = num(key, value)?,
            "features.frame_ms" => f.frame_ms = num(key, value)?,
            "features.hop_ms" => f.hop_ms = num(key, value)?,
            "features.n_mels" => f.n_mels = num(key, value)?,
            "features.n_mfcc" => f.n_mfcc = num(key, value)?,
            "features.lpcc_order" => f.lpcc_order = num(key, value)?,
            "features.lpcc_coeffs" => f.lpcc_coeffs = num(key, value)?,
            "features.plp_order" => f.plp_order = num(key, value)?,
            "features.delta_width" => f.delta_width = num(key, value)?,
            "features.deltas_on_lpcc" => f.deltas_on_lpcc = num(key, value)?,
            "features.deltas_on_plp" => f.deltas_on_plp = num(key, value)?,
            "features.f0_min" => f.f0_min = num(key, value)?,
            "features.f0_max" => f.f0_max = num(key, value)?,
            "features.voicing_threshold" => f.voicing_threshold = num(key, value)?,
            "features.formant_lpc_order" => {
                f.formant_lpc_order = if value.trim() == "auto" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "features.entropy_bins" => f.entropy_bins = num(key, value)?,
            "features.higuchi_kmax" => f.higuchi_kmax = num(key, value)?,
            "features.pe_order" => f.pe_order = num(key, value)?,
            "features.pe_delay" => f.pe_delay = num(key, value)?,
            "features.mspe_scales" => f.mspe_scales = num(key, value)?,
            "selection.alpha" => self.selection.alpha = num(key, value)?,
            "selection.top_k" => self.selection.top_k = num(key, value)?,
            "cv.folds" => self.cv_folds = num(key, value)?,
            "cv.seed" => self.seed = num(key, value)?,
            "cv.repeats" => self.repeats = num(key, value)?,
            "cv.global_preprocess" => self.global_preprocess = num(key, value)?,
            "knn.k" => self.knn.k = num(key, value)?,
            "svm.c" => self.svm.c = num(key, value)?,
            "svm.tolerance" => self.svm.tolerance = num(key, value)?,
            "svm.max_iters" => self.svm.max_iters = num(key, value)?,
            "mlp.hidden" => {
                self.mlp.hidden = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num::<usize>(key, s))
                    .collect::<Result<Vec<_>>>()?
            }
            "mlp.learning_rate" => self.mlp.learning_rate = num(key, value)?,
            "mlp.epochs" => self.mlp.epochs = num(key, value)?,
            "mlp.seed" => self.mlp.seed = num(key, value)?,
            "cnn.n_filters" => self.cnn.n_filters = num(key, value)?,
            "cnn.conv" => self.cnn.conv = num(key, value)?,
            "cnn.pool" => self.cnn.pool = num(key, value)?,
            "cnn.dense" => self.cnn.dense = num(key, value)?,
            "cnn.learning_rate" => self.cnn.learning_rate = num(key, value)?,
            "cnn.epochs" => self.cnn.epochs = num(key, value)?,
            "cnn.seed" => self.cnn.seed = num(key, value)?,
            other => {
                return Err(Error::BadConfig {
                    key: other.to_string(),
                    detail: "unknown key".to_string(),
                })
            }
        }
        Ok(())
    }

    /// Canonical text form (one `key=value` per line).
    pub fn to_flat_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// SHA-256 of the canonical serialization, first 16 hex digits.
    pub fn hash(&self) -> String {
        sha256_short(&self.to_flat_text())
    }

    /// Defaults, then file entries, then overrides (highest precedence).
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.to_owned(),
                source,
            })?;
            for (k, v) in parse_flat_text(&text)? {
                cfg.set(&k, &v)?;
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// The four classifiers configured here.
    pub fn classifier_suite(&self) -> Vec<ClassifierSpec> {
        vec![
            ClassifierSpec::Knn(self.knn),
            ClassifierSpec::Svm(self.svm.clone()),
            ClassifierSpec::Mlp(self.mlp.clone()),
            ClassifierSpec::Cnn(self.cnn.clone()),
        ]
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            k: self.cv_folds,
            seed: self.seed,
            policy: if self.global_preprocess {
                PreprocessPolicy::Global
            } else {
                PreprocessPolicy::PerFold
            },
            selection: self.selection,
        }
    }
}

/// First 16 hex digits of SHA-256.
pub fn sha256_short(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse flat `key=value` lines; `#` comments and blank lines are skipped.
pub fn parse_flat_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::BadConfig {
            key: line.to_string(),
            detail: "expected key=value".to_string(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Load a WAV and resample it to the configured analysis rate.
pub fn prepare_signal(path: &Path, cfg: &PipelineConfig) -> Result<AudioSignal> {
    let sig = audio::read_wav(path)?;
    Ok(audio::resample(&sig, cfg.rate))
}

/// VAD one recording and render the segment CSV (config hash embedded).
pub fn cmd_segment(wav: &Path, cfg: &PipelineConfig) -> Result<String> {
    let sig = prepare_signal(wav, cfg)?;
    let segs = segmentation::vad(&sig, &cfg.vad)?;
    Ok(format!("# config={}\n{}", cfg.hash(), segs.to_csv(cfg.rate)))
}

/// Segment, split and assemble the feature vector of one loaded recording.
pub fn extract_recording(
    id: &str,
    label: Option<ClassLabel>,
    sig: &AudioSignal,
    cfg: &PipelineConfig,
) -> Result<NamedFeatureVector> {
    let segs = segmentation::vad(sig, &cfg.vad)?;
    let (speech, disfluency) = segmentation::split_streams(sig, &segs);
    let mut v = assembly::assemble(&speech, &disfluency, &segs, &cfg.features)?;
    v.id = id.to_string();
    v.label = label;
    Ok(v)
}

/// Parse a `filename,label` manifest (with optional `#` comments).
pub fn read_labels(path: &Path) -> Result<Vec<(String, ClassLabel)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "filename,label" {
            continue;
        }
        let (name, label) = line.split_once(',').ok_or_else(|| Error::BadInput {
            path: path.to_owned(),
            detail: format!("bad label line {line:?}"),
        })?;
        out.push((name.trim().to_string(), label.trim().parse::<ClassLabel>()?));
    }
    Ok(out)
}

/// Dataset extraction over a directory of labeled WAVs.
pub struct ExtractOutcome {
    pub dataset: Dataset,
    /// Files skipped under `--skip-bad`, with reasons.
    pub skipped: Vec<String>,
}

/// Extract a dataset from every `.wav` in `dir` using the label manifest.
///
/// Rows are ordered by sorted filename, so reruns on identical inputs write
/// byte-identical CSVs. Unlabeled or unreadable files abort the run unless
/// `skip_bad` is set, in which case they are listed in the outcome.
pub fn cmd_extract(
    dir: &Path,
    labels_path: &Path,
    cfg: &PipelineConfig,
    skip_bad: bool,
) -> Result<ExtractOutcome> {
    let manifest = read_labels(labels_path)?;
    let labels: std::collections::HashMap<&str, ClassLabel> = manifest
        .iter()
        .map(|(name, label)| (name.as_str(), *label))
        .collect();

    let mut wavs: Vec<String> = std::fs::read_dir(dir)
        .map_err(|source| Error::Io {
            path: dir.to_owned(),
            source,
        })?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|name| name.ends_with(".wav"))
        .collect();
    wavs.sort();

    let mut problems: Vec<String> = Vec::new();
    let mut vectors = Vec::new();
    for name in &wavs {
        let Some(&label) = labels.get(name.as_str()) else {
            problems.push(format!("{name}: unlabeled file"));
            continue;
        };
        let path = dir.join(name);
        match prepare_signal(&path, cfg)
            .and_then(|sig| extract_recording(name, Some(label), &sig, cfg))
        {
            Ok(v) => vectors.push(v),
            Err(e) => problems.push(format!("{name}: {e}")),
        }
    }
    for (name, _) in &manifest {
        if !wavs.iter().any(|w| w == name) {
            problems.push(format!("{name}: listed in labels but not found"));
        }
    }
    if !problems.is_empty() && !skip_bad {
        return Err(Error::BadInput {
            path: dir.to_owned(),
            detail: problems.join("; "),
        });
    }
    let mut dataset = Dataset::from_vectors(&vectors)?;
    dataset.impute_sentinels();
    dataset.provenance = vec![
        ("config".to_string(), cfg.hash()),
        ("inventory".to_string(), format!("v1,d={}", dataset.dim())),
    ];
    Ok(ExtractOutcome {
        dataset,
        skipped: problems,
    })
}

/// Summary of a full pipeline run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunReport {
    pub config_hash: String,
    pub n_recordings: usize,
    /// Funnel of the whole-dataset selection pass (the per-fold funnels live
    /// in each evaluation).
    pub funnel: Funnel,
    pub evaluations: Vec<EvaluationReport>,
}

impl RunReport {
    /// `D_initial -> D_utest -> D_final` line.
    pub fn funnel_line(&self) -> String {
        format!("funnel: {}", self.funnel)
    }
}

/// Outputs of [`cmd_run`]: the serializable report plus the whole-dataset
/// selection report for the CSV artifact.
pub struct RunOutcome {
    pub report: RunReport,
    pub selection: SelectionReport,
}

/// Select globally (for the funnel and report artifacts), then cross-validate
/// every configured classifier under the configured preprocessing policy,
/// repeating with consecutive seeds when `repeats > 1`.
pub fn cmd_run(ds: &Dataset, cfg: &PipelineConfig) -> Result<RunOutcome> {
    let outcome = selection::two_stage_select(ds, &cfg.selection)?;
    let mut evaluations = Vec::new();
    for repeat in 0..cfg.repeats.max(1) {
        let mut cv = cfg.cv_config();
        cv.seed = cfg.seed + repeat as u64;
        for spec in cfg.classifier_suite() {
            evaluations.push(evaluation::cross_validate(ds, &spec, &cv)?);
        }
    }
    Ok(RunOutcome {
        report: RunReport {
            config_hash: cfg.hash(),
            n_recordings: ds.n_rows(),
            funnel: outcome.funnel,
            evaluations,
        },
        selection: outcome.report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_flat_text() {
        let cfg = PipelineConfig::default();
        let text = cfg.to_flat_text();
        let parsed = parse_flat_text(&text).unwrap();
        let mut rebuilt = PipelineConfig::default();
        for (k, v) in parsed {
            rebuilt.set(&k, &v).unwrap();
        }
        assert_eq!(rebuilt, cfg);
        assert_eq!(rebuilt.hash(), cfg.hash());
    }

    #[test]
    fn overrides_take_precedence_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("cfg.txt");
        std::fs::write(&file, "selection.alpha=0.2\ncv.folds=5\n").unwrap();
        let cfg = PipelineConfig::resolve(
            Some(&file),
            &[("selection.alpha".to_string(), "0.05".to_string())],
        )
        .unwrap();
        assert_eq!(cfg.selection.alpha, 0.05); // flag beats file
        assert_eq!(cfg.cv_folds, 5); // file beats default
        assert_eq!(cfg.repeats, 1); // default survives
    }

    #[test]
    fn equal_configs_hash_equal_and_changes_move_the_hash() {
        let a = PipelineConfig::default();
        let mut b = PipelineConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.set("selection.top_k", "40").unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_and_malformed_keys_are_errors() {
        let mut cfg = PipelineConfig::default();
        assert!(matches!(
            cfg.set("no.such.key", "1"),
            Err(Error::BadConfig { .. })
        ));
        assert!(matches!(
            cfg.set("cv.folds", "many"),
            Err(Error::BadConfig { .. })
        ));
        assert!(parse_flat_text("justtext\n").is_err());
    }

    #[test]
    fn mlp_hidden_list_round_trips() {
        let mut cfg = PipelineConfig::default();
        cfg.set("mlp.hidden", "32,16,8").unwrap();
        assert_eq!(cfg.mlp.hidden, vec![32, 16, 8]);
        assert!(cfg.to_flat_text().contains("mlp.hidden=32,16,8"));
    }

    #[test]
    fn formant_order_auto_round_trips() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.to_flat_text().contains("features.formant_lpc_order=auto"));
        cfg.set("features.formant_lpc_order", "18").unwrap();
        assert_eq!(cfg.features.formant_lpc_order, Some(18));
        cfg.set("features.formant_lpc_order", "auto").unwrap();
        assert_eq!(cfg.features.formant_lpc_order, None);
    }

    #[test]
    fn repeats_rerun_cv_with_consecutive_seeds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let n = 24;
        let labels: Vec<ClassLabel> = (0..n)
            .map(|i| {
                if i < 12 {
                    ClassLabel::Cr
                } else {
                    ClassLabel::Mci
                }
            })
            .collect();
        // enough informative columns that the selected set still feeds the
        // CNN's pooling stage inside every fold
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| {
                (0..20)
                    .map(|j| {
                        let v: f64 = rng.gen_range(0.0..0.3);
                        if j < 12 && l == ClassLabel::Mci {
                            v + 0.6
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        let ds = Dataset {
            feature_names: (0..20).map(|j| format!("f{j}")).collect(),
            ids: (0..n).map(|i| format!("r{i}")).collect(),
            rows,
            labels,
            provenance: Vec::new(),
        };
        let mut cfg = PipelineConfig {
            cv_folds: 4,
            repeats: 2,
            seed: 42,
            ..PipelineConfig::default()
        };
        cfg.mlp.epochs = 30;
        cfg.cnn.epochs = 30;
        cfg.selection.top_k = 12;
        let outcome = cmd_run(&ds, &cfg).unwrap();
        // 2 repeats x 4 classifiers, seeds 42 then 43
        assert_eq!(outcome.report.evaluations.len(), 8);
        assert!(outcome.report.evaluations[..4].iter().all(|e| e.seed == 42));
        assert!(outcome.report.evaluations[4..].iter().all(|e| e.seed == 43));
    }

    #[test]
    fn pure_silence_recording_extracts_with_sentinel_speech_block() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let cfg = PipelineConfig::default();
        let sig = AudioSignal::new(
            (0..cfg.rate as usize).map(|_| rng.gen_range(-1e-4..1e-4)).collect(),
            cfg.rate,
        );
        let v = extract_recording("silence", Some(ClassLabel::Cr), &sig, &cfg).unwrap();
        for (name, value) in v.names.iter().zip(&v.values) {
            if name.starts_with("speech.") && !name.contains("n_segments") {
                assert!(
                    value.is_nan() || name.contains("total_pause") || name.contains("mean_segment"),
                    "{name} = {value}"
                );
            }
            if name.starts_with("disfluency.classical") {
                assert!(value.is_finite(), "{name} = {value}");
            }
        }
    }

    #[test]
    fn labels_parser_accepts_manifest_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        std::fs::write(&path, "# config=ff\nfilename,label\na.wav,CR\nb.wav,MCI\n").unwrap();
        let labels = read_labels(&path).unwrap();
        assert_eq!(labels.len(), 2);
        assert_eq!(labels[0], ("a.wav".to_string(), ClassLabel::Cr));
        assert_eq!(labels[1], ("b.wav".to_string(), ClassLabel::Mci));

        std::fs::write(&path, "a.wav,HEALTHY\n").unwrap();
        assert!(matches!(read_labels(&path), Err(Error::UnknownLabel(_))));
    }
}
