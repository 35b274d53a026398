//! Small convolutional network for feature-vector classification.
//!
//! A feature vector of length D is reshaped row-major onto a
//! `ceil(sqrt(D))` square grid (zero-padded tail), then passed through a
//! valid 3x3 convolution bank, sigmoid, 2x2 max-pooling (stride 2, floor), a
//! sigmoid dense layer, and a softmax pair. Trained exactly like the MLP:
//! full-batch gradient descent with step rejection and learning-rate halving.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mlp::{cross_entropy, sigmoid, softmax, targets_of};
use crate::dataset::{ClassLabel, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CnnSpec {
    pub n_filters: usize,
    /// Convolution kernel side.
    pub conv: usize,
    /// Max-pool window and stride.
    pub pool: usize,
    /// Width of the dense layer between the pooled maps and the softmax.
    pub dense: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for CnnSpec {
    fn default() -> Self {
        Self {
            n_filters: 20,
            conv: 3,
            pool: 2,
            dense: 20,
            learning_rate: 0.5,
            epochs: 300,
            seed: 1,
        }
    }
}

/// Layer output sizes for a given input dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeChain {
    pub side: usize,
    pub conv_out: usize,
    pub pool_out: usize,
    pub flat: usize,
    pub dense: usize,
    pub classes: usize,
}

/// Compute the shape chain, rejecting grids smaller than the kernel or pools
/// that collapse to nothing.
pub fn shape_chain(input_dim: usize, spec: &CnnSpec) -> Result<ShapeChain> {
    assert!(input_dim >= 1);
    let side = (input_dim as f64).sqrt().ceil() as usize;
    if side < spec.conv {
        return Err(Error::GridTooSmall {
            rows: side,
            cols: side,
            kernel: spec.conv,
        });
    }
    let conv_out = side - spec.conv + 1;
    let pool_out = conv_out / spec.pool;
    if pool_out == 0 {
        return Err(Error::GridTooSmall {
            rows: conv_out,
            cols: conv_out,
            kernel: spec.pool,
        });
    }
    Ok(ShapeChain {
        side,
        conv_out,
        pool_out,
        flat: pool_out * pool_out * spec.n_filters,
        dense: spec.dense,
        classes: 2,
    })
}

/// Row-major reshape of a feature vector onto the smallest square grid that
/// holds it; the tail is zero-padded.
pub fn reshape_to_grid(x: &[f64]) -> Vec<Vec<f64>> {
    let side = (x.len() as f64).sqrt().ceil() as usize;
    let mut grid = vec![vec![0.0; side]; side];
    for (i, &v) in x.iter().enumerate() {
        grid[i / side][i % side] = v;
    }
    grid
}

#[derive(Debug, Clone)]
pub struct CnnModel {
    pub spec_shape: ShapeChain,
    pub input_dim: usize,
    pub pool: usize,
    /// F x k x k filters.
    pub filters: Vec<Vec<Vec<f64>>>,
    pub filter_bias: Vec<f64>,
    /// dense x flat.
    pub dense1_w: Vec<Vec<f64>>,
    pub dense1_b: Vec<f64>,
    /// 2 x dense.
    pub dense2_w: Vec<Vec<f64>>,
    pub dense2_b: Vec<f64>,
    pub loss_history: Vec<f64>,
}

impl CnnModel {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn predict(&self, x: &[f64]) -> ClassLabel {
        let probs = cnn_forward(self, &reshape_to_grid(x));
        if probs[ClassLabel::Mci.index()] > probs[ClassLabel::Cr.index()] {
            ClassLabel::Mci
        } else {
            ClassLabel::Cr
        }
    }
}

/// Valid convolution of one filter over the grid.
fn convolve(grid: &[Vec<f64>], filter: &[Vec<f64>], bias: f64) -> Vec<Vec<f64>> {
    let k = filter.len();
    let out = grid.len() - k + 1;
    let mut map = vec![vec![0.0; out]; out];
    for (r, row) in map.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate() {
            let mut acc = bias;
            for i in 0..k {
                for j in 0..k {
                    acc += filter[i][j] * grid[r + i][c + j];
                }
            }
            *slot = acc;
        }
    }
    map
}

/// Per-window coordinates of the pooling maxima, for gradient routing.
type PoolArgmax = Vec<Vec<(usize, usize)>>;

/// Max-pool with window = stride = `p` (floor); also returns the grid
/// coordinates of each window's (first) maximum.
pub(crate) fn max_pool(map: &[Vec<f64>], p: usize) -> (Vec<Vec<f64>>, PoolArgmax) {
    let out = map.len() / p;
    let mut pooled = vec![vec![0.0; out]; out];
    let mut arg = vec![vec![(0usize, 0usize); out]; out];
    for r in 0..out {
        for c in 0..out {
            let mut best = f64::NEG_INFINITY;
            let mut best_at = (r * p, c * p);
            for i in 0..p {
                for j in 0..p {
                    let v = map[r * p + i][c * p + j];
                    if v > best {
                        best = v;
                        best_at = (r * p + i, c * p + j);
                    }
                }
            }
            pooled[r][c] = best;
            arg[r][c] = best_at;
        }
    }
    (pooled, arg)
}

struct ForwardState {
    grid: Vec<Vec<f64>>,
    conv_act: Vec<Vec<Vec<f64>>>,
    pool_arg: Vec<Vec<Vec<(usize, usize)>>>,
    flat: Vec<f64>,
    hidden: Vec<f64>,
    probs: Vec<f64>,
}

fn forward_state(model: &CnnModel, grid: Vec<Vec<f64>>) -> ForwardState {
    let mut conv_act = Vec::with_capacity(model.filters.len());
    let mut pool_arg = Vec::with_capacity(model.filters.len());
    let mut flat = Vec::with_capacity(model.spec_shape.flat);
    for (f, filter) in model.filters.iter().enumerate() {
        let act: Vec<Vec<f64>> = convolve(&grid, filter, model.filter_bias[f])
            .into_iter()
            .map(|row| row.into_iter().map(sigmoid).collect())
            .collect();
        let (pooled, arg) = max_pool(&act, model.pool);
        for row in &pooled {
            flat.extend_from_slice(row);
        }
        conv_act.push(act);
        pool_arg.push(arg);
    }
    let hidden: Vec<f64> = model
        .dense1_w
        .iter()
        .zip(&model.dense1_b)
        .map(|(row, b)| sigmoid(row.iter().zip(&flat).map(|(w, v)| w * v).sum::<f64>() + b))
        .collect();
    let logits: Vec<f64> = model
        .dense2_w
        .iter()
        .zip(&model.dense2_b)
        .map(|(row, b)| row.iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>() + b)
        .collect();
    ForwardState {
        grid,
        conv_act,
        pool_arg,
        flat,
        hidden,
        probs: softmax(&logits),
    }
}

/// Class probabilities (CR, MCI) for a grid from [`reshape_to_grid`].
pub fn cnn_forward(model: &CnnModel, grid: &[Vec<f64>]) -> Vec<f64> {
    forward_state(model, grid.to_vec()).probs
}

struct Grads {
    filters: Vec<Vec<Vec<f64>>>,
    filter_bias: Vec<f64>,
    dense1_w: Vec<Vec<f64>>,
    dense1_b: Vec<f64>,
    dense2_w: Vec<Vec<f64>>,
    dense2_b: Vec<f64>,
}

impl Grads {
    fn zeros(model: &CnnModel) -> Grads {
        let k = model.filters[0].len();
        Grads {
            filters: vec![vec![vec![0.0; k]; k]; model.filters.len()],
            filter_bias: vec![0.0; model.filter_bias.len()],
            dense1_w: model.dense1_w.iter().map(|r| vec![0.0; r.len()]).collect(),
            dense1_b: vec![0.0; model.dense1_b.len()],
            dense2_w: model.dense2_w.iter().map(|r| vec![0.0; r.len()]).collect(),
            dense2_b: vec![0.0; model.dense2_b.len()],
        }
    }
}

fn batch_backprop(model: &CnnModel, xs: &[Vec<f64>], targets: &[usize]) -> (f64, Grads) {
    let n = xs.len() as f64;
    let mut grads = Grads::zeros(model);
    let mut total_loss = 0.0;
    let k = model.filters[0].len();
    let pool_out = model.spec_shape.pool_out;

    for (x, &t) in xs.iter().zip(targets) {
        let state = forward_state(model, reshape_to_grid(x));
        total_loss += cross_entropy(&state.probs, t);

        let delta_logits: Vec<f64> = state
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (p - if i == t { 1.0 } else { 0.0 }) / n)
            .collect();
        for (i, d) in delta_logits.iter().enumerate() {
            for (j, h) in state.hidden.iter().enumerate() {
                grads.dense2_w[i][j] += d * h;
            }
            grads.dense2_b[i] += d;
        }
        let delta_hidden: Vec<f64> = (0..state.hidden.len())
            .map(|j| {
                let back: f64 = delta_logits
                    .iter()
                    .enumerate()
                    .map(|(i, d)| d * model.dense2_w[i][j])
                    .sum();
                back * state.hidden[j] * (1.0 - state.hidden[j])
            })
            .collect();
        for (j, d) in delta_hidden.iter().enumerate() {
            for (m, v) in state.flat.iter().enumerate() {
                grads.dense1_w[j][m] += d * v;
            }
            grads.dense1_b[j] += d;
        }
        let delta_flat: Vec<f64> = (0..state.flat.len())
            .map(|m| {
                delta_hidden
                    .iter()
                    .enumerate()
                    .map(|(j, d)| d * model.dense1_w[j][m])
                    .sum()
            })
            .collect();

        // route pooled gradients back through argmax and the sigmoid
        for (f, arg) in state.pool_arg.iter().enumerate() {
            for r in 0..pool_out {
                for c in 0..pool_out {
                    let d_pool = delta_flat[f * pool_out * pool_out + r * pool_out + c];
                    if d_pool == 0.0 {
                        continue;
                    }
                    let (ar, ac) = arg[r][c];
                    let a = state.conv_act[f][ar][ac];
                    let d_pre = d_pool * a * (1.0 - a);
                    for i in 0..k {
                        for j in 0..k {
                            grads.filters[f][i][j] += d_pre * state.grid[ar + i][ac + j];
                        }
                    }
                    grads.filter_bias[f] += d_pre;
                }
            }
        }
    }
    (total_loss / n, grads)
}

fn batch_loss(model: &CnnModel, xs: &[Vec<f64>], targets: &[usize]) -> f64 {
    xs.iter()
        .zip(targets)
        .map(|(x, &t)| cross_entropy(&forward_state(model, reshape_to_grid(x)).probs, t))
        .sum::<f64>()
        / xs.len() as f64
}

fn apply_step(model: &CnnModel, grads: &Grads, lr: f64) -> CnnModel {
    let mut out = model.clone();
    for (f, filter) in out.filters.iter_mut().enumerate() {
        for (i, row) in filter.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                *w -= lr * grads.filters[f][i][j];
            }
        }
        out.filter_bias[f] -= lr * grads.filter_bias[f];
    }
    for (i, row) in out.dense1_w.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            *w -= lr * grads.dense1_w[i][j];
        }
        out.dense1_b[i] -= lr * grads.dense1_b[i];
    }
    for (i, row) in out.dense2_w.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            *w -= lr * grads.dense2_w[i][j];
        }
        out.dense2_b[i] -= lr * grads.dense2_b[i];
    }
    out
}

fn init_model(spec: &CnnSpec, input_dim: usize) -> Result<CnnModel> {
    let shape = shape_chain(input_dim, spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut uniform = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect() };
    let filters = (0..spec.n_filters)
        .map(|_| {
            (0..spec.conv)
                .map(|_| uniform(spec.conv))
                .collect::<Vec<_>>()
        })
        .collect();
    let filter_bias = uniform(spec.n_filters);
    let dense1_w = (0..spec.dense).map(|_| uniform(shape.flat)).collect();
    let dense1_b = uniform(spec.dense);
    let dense2_w = (0..2).map(|_| uniform(spec.dense)).collect();
    let dense2_b = uniform(2);
    Ok(CnnModel {
        spec_shape: shape,
        input_dim,
        pool: spec.pool,
        filters,
        filter_bias,
        dense1_w,
        dense1_b,
        dense2_w,
        dense2_b,
        loss_history: Vec::new(),
    })
}

pub fn train(spec: &CnnSpec, ds: &Dataset) -> Result<CnnModel> {
    let targets = targets_of(ds);
    let mut model = init_model(spec, ds.dim())?;
    let (mut loss, mut grads) = batch_backprop(&model, &ds.rows, &targets);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    let mut history = vec![loss];
    let mut lr = spec.learning_rate;
    for _ in 0..spec.epochs {
        let candidate = apply_step(&model, &grads, lr);
        let new_loss = batch_loss(&candidate, &ds.rows, &targets);
        if new_loss.is_finite() && new_loss <= loss {
            model = candidate;
            loss = new_loss;
            grads = batch_backprop(&model, &ds.rows, &targets).1;
        } else {
            lr *= 0.5;
            if lr < 1e-15 {
                history.push(loss);
                break;
            }
        }
        history.push(loss);
    }
    model.loss_history = history;
    Ok(model)
}

/// Backprop gradient against central finite differences at the seeded start.
pub fn gradient_check(spec: &CnnSpec, ds: &Dataset) -> Result<f64> {
    let targets = targets_of(ds);
    let model = init_model(spec, ds.dim())?;
    let shape = model.spec_shape;
    let n_params = spec.n_filters * (spec.conv * spec.conv + 1)
        + spec.dense * (shape.flat + 1)
        + 2 * (spec.dense + 1);
    assert!(n_params <= 200, "gradient check is for tiny nets ({n_params} params)");

    let (loss, grads) = batch_backprop(&model, &ds.rows, &targets);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    let h = 1e-5;
    let mut worst = 0.0f64;
    // probe every parameter through a mutable clone
    let mut check = |get: &mut dyn FnMut(&mut CnnModel) -> &mut f64, analytic: f64| {
        let mut probe = model.clone();
        let base = *get(&mut probe);
        *get(&mut probe) = base + h;
        let up = batch_loss(&probe, &ds.rows, &targets);
        *get(&mut probe) = base - h;
        let down = batch_loss(&probe, &ds.rows, &targets);
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max(super::grad_rel_error(analytic, numeric));
    };
    for f in 0..spec.n_filters {
        for i in 0..spec.conv {
            for j in 0..spec.conv {
                check(&mut |m| &mut m.filters[f][i][j], grads.filters[f][i][j]);
            }
        }
        check(&mut |m| &mut m.filter_bias[f], grads.filter_bias[f]);
    }
    for i in 0..spec.dense {
        for j in 0..shape.flat {
            check(&mut |m| &mut m.dense1_w[i][j], grads.dense1_w[i][j]);
        }
        check(&mut |m| &mut m.dense1_b[i], grads.dense1_b[i]);
    }
    for i in 0..2 {
        for j in 0..spec.dense {
            check(&mut |m| &mut m.dense2_w[i][j], grads.dense2_w[i][j]);
        }
        check(&mut |m| &mut m.dense2_b[i], grads.dense2_b[i]);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::tests::toy_dataset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shape_chain_for_80_features() {
        let spec = CnnSpec::default();
        let s = shape_chain(80, &spec).unwrap();
        assert_eq!(s.side, 9);
        assert_eq!(s.conv_out, 7);
        assert_eq!(s.pool_out, 3);
        assert_eq!(s.flat, 180);
        assert_eq!(s.dense, 20);
        assert_eq!(s.classes, 2);
    }

    #[test]
    fn reshape_is_row_major_with_zero_tail() {
        let x: Vec<f64> = (1..=80).map(|i| i as f64).collect();
        let grid = reshape_to_grid(&x);
        assert_eq!(grid.len(), 9);
        assert_eq!(grid[0][0], 1.0);
        assert_eq!(grid[0][8], 9.0);
        assert_eq!(grid[8][7], 80.0);
        assert_eq!(grid[8][8], 0.0); // one trailing zero

        let x81: Vec<f64> = (1..=81).map(|i| i as f64).collect();
        let grid81 = reshape_to_grid(&x81);
        assert_eq!(grid81[8][8], 81.0); // no padding

        // invertible: first D entries of the flattened grid equal x
        let flat: Vec<f64> = grid.iter().flatten().copied().collect();
        assert_eq!(&flat[..80], &x[..]);
    }

    #[test]
    fn grid_smaller_than_kernel_is_an_error() {
        let spec = CnnSpec::default();
        assert!(matches!(
            shape_chain(4, &spec), // 2x2 grid < 3x3 kernel
            Err(Error::GridTooSmall { .. })
        ));
    }

    #[test]
    fn zero_weights_give_symmetric_softmax() {
        let spec = CnnSpec {
            n_filters: 2,
            dense: 3,
            ..CnnSpec::default()
        };
        let mut model = init_model(&spec, 81).unwrap();
        for f in &mut model.filters {
            for row in f {
                row.fill(0.0);
            }
        }
        model.filter_bias.fill(0.0);
        for r in &mut model.dense1_w {
            r.fill(0.0);
        }
        model.dense1_b.fill(0.0);
        for r in &mut model.dense2_w {
            r.fill(0.0);
        }
        model.dense2_b.fill(0.0);
        let probs = cnn_forward(&model, &reshape_to_grid(&vec![0.3; 81]));
        assert_eq!(probs, vec![0.5, 0.5]);
    }

    #[test]
    fn max_pool_of_constant_map_is_that_constant() {
        let map = vec![vec![0.7; 6]; 6];
        let (pooled, _) = max_pool(&map, 2);
        assert_eq!(pooled, vec![vec![0.7; 3]; 3]);
    }

    fn tiny_cnn_ds(seed: u64) -> Dataset {
        // 25 features -> 5x5 grid
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..5 {
            let base = if i % 2 == 0 { 0.2 } else { 0.8 };
            rows.push((0..25).map(|_| base + 0.1 * rng.gen_range(-1.0..1.0)).collect());
            labels.push(if i % 2 == 0 {
                crate::dataset::ClassLabel::Cr
            } else {
                crate::dataset::ClassLabel::Mci
            });
        }
        toy_dataset(rows, labels)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = CnnSpec {
            n_filters: 1,
            conv: 3,
            pool: 2,
            dense: 2,
            learning_rate: 0.5,
            epochs: 5,
            seed: 11,
        };
        let err = gradient_check(&spec, &tiny_cnn_ds(1)).unwrap();
        assert!(err < 1e-4, "max relative error = {err}");
    }

    #[test]
    fn fixed_seed_trains_bit_identical_models() {
        let spec = CnnSpec {
            n_filters: 2,
            dense: 4,
            epochs: 30,
            seed: 9,
            ..CnnSpec::default()
        };
        let ds = tiny_cnn_ds(2);
        let a = train(&spec, &ds).unwrap();
        let b = train(&spec, &ds).unwrap();
        assert_eq!(a.filters, b.filters);
        assert_eq!(a.dense1_w, b.dense1_w);
        assert_eq!(a.dense2_w, b.dense2_w);
        assert_eq!(a.loss_history, b.loss_history);
    }

    #[test]
    fn loss_history_is_non_increasing() {
        let spec = CnnSpec {
            n_filters: 2,
            dense: 4,
            learning_rate: 3.0,
            epochs: 60,
            seed: 4,
            ..CnnSpec::default()
        };
        let model = train(&spec, &tiny_cnn_ds(3)).unwrap();
        for w in model.loss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }
}
