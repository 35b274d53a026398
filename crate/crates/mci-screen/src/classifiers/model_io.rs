//! Self-describing structured-text model files.
//!
//! Line-oriented `key=value` format with a kind tag, dimensions and all
//! parameters. Floats use shortest round-trip formatting, so load(save(m))
//! reproduces every parameter exactly. The training loss history is a
//! training-time artifact and is not persisted.

use std::path::Path;

use super::{
    CnnModel, CnnSpec, KnnModel, MajorityModel, MlpModel, SvmModel, TrainedModel,
};
use crate::classifiers::mlp::Layer;
use crate::classifiers::svm::LinearSvm;
use crate::dataset::ClassLabel;
use crate::error::{Error, Result};

const MAGIC: &str = "mci-screen-model v1";

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Serialize a trained model to text, with optional `# key=value` comment
/// lines (e.g. the pipeline config hash) after the magic.
pub fn model_to_string_tagged(model: &TrainedModel, comments: &[(String, String)]) -> String {
    let mut out = format!("{MAGIC}\n");
    for (k, v) in comments {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&model_body(model));
    out
}

/// Serialize a trained model to text.
pub fn model_to_string(model: &TrainedModel) -> String {
    model_to_string_tagged(model, &[])
}

fn model_body(model: &TrainedModel) -> String {
    let mut out = format!("kind={}\ndim={}\n", model.kind(), model.input_dim());
    match model {
        TrainedModel::Knn(m) => {
            out.push_str(&format!("k={}\nn={}\n", m.k, m.points.len()));
            out.push_str(&format!(
                "labels={}\n",
                m.labels
                    .iter()
                    .map(ClassLabel::to_string)
                    .collect::<Vec<_>>()
                    .join(" ")
            ));
            for p in &m.points {
                out.push_str(&format!("row={}\n", fmt_vec(p)));
            }
        }
        TrainedModel::Svm(m) => {
            out.push_str(&format!("c={}\n", m.c));
            out.push_str(&format!("b={}\n", m.svm.b));
            out.push_str(&format!("w={}\n", fmt_vec(&m.svm.w)));
            out.push_str(&format!("alpha={}\n", fmt_vec(&m.svm.alpha)));
            out.push_str(&format!("iterations={}\n", m.svm.iterations));
        }
        TrainedModel::Mlp(m) => {
            out.push_str(&format!("n_layers={}\n", m.layers.len()));
            for layer in &m.layers {
                out.push_str(&format!("layer={} {}\n", layer.w.len(), layer.w[0].len()));
                for row in &layer.w {
                    out.push_str(&format!("w={}\n", fmt_vec(row)));
                }
                out.push_str(&format!("b={}\n", fmt_vec(&layer.b)));
            }
        }
        TrainedModel::Cnn(m) => {
            out.push_str(&format!(
                "filters={} {}\npool={}\n",
                m.filters.len(),
                m.filters[0].len(),
                m.pool
            ));
            for f in &m.filters {
                let flat: Vec<f64> = f.iter().flatten().copied().collect();
                out.push_str(&format!("filter={}\n", fmt_vec(&flat)));
            }
            out.push_str(&format!("filter_bias={}\n", fmt_vec(&m.filter_bias)));
            out.push_str(&format!(
                "dense1={} {}\n",
                m.dense1_w.len(),
                m.dense1_w[0].len()
            ));
            for row in &m.dense1_w {
                out.push_str(&format!("w1={}\n", fmt_vec(row)));
            }
            out.push_str(&format!("b1={}\n", fmt_vec(&m.dense1_b)));
            for row in &m.dense2_w {
                out.push_str(&format!("w2={}\n", fmt_vec(row)));
            }
            out.push_str(&format!("b2={}\n", fmt_vec(&m.dense2_b)));
        }
        TrainedModel::Majority(m) => {
            out.push_str(&format!("label={}\n", m.label));
        }
    }
    out
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    save_model_tagged(model, path, &[])
}

/// Save with `# key=value` comment lines after the magic (skipped on load).
pub fn save_model_tagged(
    model: &TrainedModel,
    path: &Path,
    comments: &[(String, String)],
) -> Result<()> {
    std::fs::write(path, model_to_string_tagged(model, comments)).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    at: usize,
}

impl<'a> Lines<'a> {
    fn take(&mut self, key: &str) -> Result<&'a str> {
        while matches!(self.lines.get(self.at), Some(l) if l.starts_with('#')) {
            self.at += 1;
        }
        let line = self.lines.get(self.at).ok_or(Error::MalformedModel {
            line: self.at + 1,
            detail: format!("expected {key}=..., found end of file"),
        })?;
        self.at += 1;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or(Error::MalformedModel {
                line: self.at,
                detail: format!("expected {key}=..., found {line:?}"),
            })
    }

    fn take_floats(&mut self, key: &str) -> Result<Vec<f64>> {
        let at = self.at;
        let raw = self.take(key)?;
        raw.split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|e| Error::MalformedModel {
                    line: at + 1,
                    detail: format!("bad float {t:?}: {e}"),
                })
            })
            .collect()
    }

    fn take_usize(&mut self, key: &str) -> Result<usize> {
        let at = self.at;
        self.take(key)?.trim().parse().map_err(|e| Error::MalformedModel {
            line: at + 1,
            detail: format!("bad count: {e}"),
        })
    }
}

/// Parse a model file produced by [`model_to_string`].
pub fn model_from_string(text: &str) -> Result<TrainedModel> {
    let mut lines = Lines {
        lines: text.lines().collect(),
        at: 0,
    };
    let magic = lines.lines.first().copied().unwrap_or_default();
    if magic != MAGIC {
        return Err(Error::MalformedModel {
            line: 1,
            detail: format!("bad magic {magic:?}"),
        });
    }
    lines.at = 1;
    let kind = lines.take("kind")?.to_string();
    let dim = lines.take_usize("dim")?;

    match kind.as_str() {
        "knn" => {
            let k = lines.take_usize("k")?;
            let n = lines.take_usize("n")?;
            let labels = lines
                .take("labels")?
                .split_whitespace()
                .map(str::parse::<ClassLabel>)
                .collect::<Result<Vec<_>>>()?;
            let mut points = Vec::with_capacity(n);
            for _ in 0..n {
                points.push(lines.take_floats("row")?);
            }
            Ok(TrainedModel::Knn(KnnModel { k, points, labels }))
        }
        "svm" => {
            let c = lines.take_floats("c")?[0];
            let b = lines.take_floats("b")?[0];
            let w = lines.take_floats("w")?;
            let alpha = lines.take_floats("alpha")?;
            let iterations = lines.take_usize("iterations")?;
            Ok(TrainedModel::Svm(SvmModel {
                svm: LinearSvm {
                    w,
                    b,
                    alpha,
                    iterations,
                },
                c,
            }))
        }
        "mlp" => {
            let n_layers = lines.take_usize("n_layers")?;
            let mut layers = Vec::with_capacity(n_layers);
            for _ in 0..n_layers {
                let dims = lines.take("layer")?.to_string();
                let mut it = dims.split_whitespace();
                let rows: usize = it.next().unwrap_or("0").parse().unwrap_or(0);
                let mut w = Vec::with_capacity(rows);
                for _ in 0..rows {
                    w.push(lines.take_floats("w")?);
                }
                let b = lines.take_floats("b")?;
                layers.push(Layer { w, b });
            }
            Ok(TrainedModel::Mlp(MlpModel {
                layers,
                loss_history: Vec::new(),
            }))
        }
        "cnn" => {
            let fk = lines.take("filters")?.to_string();
            let mut it = fk.split_whitespace();
            let n_filters: usize = it.next().unwrap_or("0").parse().unwrap_or(0);
            let k: usize = it.next().unwrap_or("0").parse().unwrap_or(0);
            let pool = lines.take_usize("pool")?;
            let mut filters = Vec::with_capacity(n_filters);
            for _ in 0..n_filters {
                let flat = lines.take_floats("filter")?;
                filters.push(flat.chunks(k).map(<[f64]>::to_vec).collect::<Vec<_>>());
            }
            let filter_bias = lines.take_floats("filter_bias")?;
            let d1 = lines.take("dense1")?.to_string();
            let dense: usize = d1
                .split_whitespace()
                .next()
                .unwrap_or("0")
                .parse()
                .unwrap_or(0);
            let mut dense1_w = Vec::with_capacity(dense);
            for _ in 0..dense {
                dense1_w.push(lines.take_floats("w1")?);
            }
            let dense1_b = lines.take_floats("b1")?;
            let mut dense2_w = Vec::with_capacity(2);
            for _ in 0..2 {
                dense2_w.push(lines.take_floats("w2")?);
            }
            let dense2_b = lines.take_floats("b2")?;
            let spec = CnnSpec {
                n_filters,
                conv: k,
                pool,
                dense,
                ..CnnSpec::default()
            };
            let spec_shape = super::shape_chain(dim, &spec)?;
            Ok(TrainedModel::Cnn(CnnModel {
                spec_shape,
                input_dim: dim,
                pool,
                filters,
                filter_bias,
                dense1_w,
                dense1_b,
                dense2_w,
                dense2_b,
                loss_history: Vec::new(),
            }))
        }
        "majority" => {
            let label = lines.take("label")?.parse::<ClassLabel>()?;
            Ok(TrainedModel::Majority(MajorityModel {
                label,
                input_dim: dim,
            }))
        }
        other => Err(Error::MalformedModel {
            line: 2,
            detail: format!("unknown kind {other:?}"),
        }),
    }
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    model_from_string(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::tests::toy_dataset;
    use crate::classifiers::{predict, train, ClassifierSpec, KnnSpec, MlpSpec, SvmSpec};

    fn ds() -> crate::dataset::Dataset {
        toy_dataset(
            vec![
                vec![0.61, 0.21, 0.09, 0.33],
                vec![0.12, 0.44, 0.01, 0.91],
                vec![0.95, 0.87, 0.99, 0.12],
                vec![0.88, 0.79, 0.93, 0.05],
                vec![0.07, 0.18, 0.14, 0.77],
                vec![0.91, 0.66, 0.81, 0.22],
            ],
            vec![
                ClassLabel::Cr,
                ClassLabel::Cr,
                ClassLabel::Mci,
                ClassLabel::Mci,
                ClassLabel::Cr,
                ClassLabel::Mci,
            ],
        )
    }

    fn round_trip_preserves_predictions(spec: ClassifierSpec) {
        let data = ds();
        let model = train(&spec, &data).unwrap();
        let text = model_to_string(&model);
        let back = model_from_string(&text).unwrap();
        assert_eq!(model_to_string(&back), text, "second save differs");
        for row in &data.rows {
            assert_eq!(
                predict(&model, row).unwrap(),
                predict(&back, row).unwrap()
            );
        }
    }

    #[test]
    fn knn_round_trip() {
        round_trip_preserves_predictions(ClassifierSpec::Knn(KnnSpec { k: 3 }));
    }

    #[test]
    fn svm_round_trip() {
        round_trip_preserves_predictions(ClassifierSpec::Svm(SvmSpec::default()));
    }

    #[test]
    fn mlp_round_trip() {
        round_trip_preserves_predictions(ClassifierSpec::Mlp(MlpSpec {
            hidden: vec![5],
            learning_rate: 0.5,
            epochs: 30,
            seed: 2,
        }));
    }

    #[test]
    fn cnn_round_trip() {
        // 4 features -> 2x2 grid is too small; use a 25-feature toy
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..25).map(|j| ((i * 25 + j) as f64 * 0.013) % 1.0).collect())
            .collect();
        let labels = vec![
            ClassLabel::Cr,
            ClassLabel::Mci,
            ClassLabel::Cr,
            ClassLabel::Mci,
            ClassLabel::Cr,
            ClassLabel::Mci,
        ];
        let data = toy_dataset(rows, labels);
        let spec = ClassifierSpec::Cnn(crate::classifiers::CnnSpec {
            n_filters: 2,
            dense: 3,
            epochs: 10,
            seed: 8,
            ..crate::classifiers::CnnSpec::default()
        });
        let model = train(&spec, &data).unwrap();
        let text = model_to_string(&model);
        let back = model_from_string(&text).unwrap();
        assert_eq!(model_to_string(&back), text);
        for row in &data.rows {
            assert_eq!(predict(&model, row).unwrap(), predict(&back, row).unwrap());
        }
    }

    #[test]
    fn majority_round_trip_and_bad_files() {
        round_trip_preserves_predictions(ClassifierSpec::Majority);
        assert!(matches!(
            model_from_string("not a model"),
            Err(Error::MalformedModel { .. })
        ));
        assert!(matches!(
            model_from_string("mci-screen-model v1\nkind=forest\ndim=2\n"),
            Err(Error::MalformedModel { .. })
        ));
    }

    #[test]
    fn tagged_comments_survive_parsing() {
        let data = ds();
        let model = train(&ClassifierSpec::Svm(SvmSpec::default()), &data).unwrap();
        let text = model_to_string_tagged(
            &model,
            &[("config".to_string(), "deadbeefcafe".to_string())],
        );
        assert!(text.contains("# config=deadbeefcafe"));
        let back = model_from_string(&text).unwrap();
        for row in &data.rows {
            assert_eq!(predict(&model, row).unwrap(), predict(&back, row).unwrap());
        }
    }
}
