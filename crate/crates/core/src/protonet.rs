//! Prototypical metric-learning classifier over SFA histograms.
//!
//! A two-layer fully connected network maps a histogram into a 64-d
//! embedding. Each class is summarized by the mean embedding of its
//! samples, and a sample's class probabilities are the softmax of negative
//! squared Euclidean distances to those centers. Training minimizes the
//! cross-entropy of that softmax with Adam; gradients are derived by hand,
//! including the path through the prototypes.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HIDDEN_DIM: usize = 256;
pub const OUTPUT_DIM: usize = 64;

/// Weights of the embedding network. Matrices are row-major,
/// `w1: hidden x input`, `w2: output x hidden`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl NetParams {
    fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        NetParams {
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; output * hidden],
            b2: vec![0.0; output],
        }
    }

    fn zeros_like(&self) -> Self {
        NetParams {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
        }
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All parameters in `w1, b1, w2, b2` order.
    pub fn flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    /// Mutable access to the `i`-th parameter of [`NetParams::flat`].
    pub fn flat_mut(&mut self, mut i: usize) -> &mut f64 {
        for t in self.tensors_mut() {
            if i < t.len() {
                return &mut t[i];
            }
            i -= t.len();
        }
        panic!("parameter index out of range");
    }

    /// L2 norm of each tensor.
    pub fn norms(&self) -> [f64; 4] {
        self.tensors()
            .map(|t| t.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// The embedding network `x -> W2 relu(W1 x + b1) + b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformNet {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    /// Scale inputs to unit L2 norm before the first layer.
    #[serde(default)]
    pub l2_normalize_input: bool,
    #[serde(flatten)]
    pub params: NetParams,
}

struct Activation {
    hidden_pre: Vec<f64>,
    output: Vec<f64>,
}

impl TransformNet {
    pub fn zeros(input_dim: usize, hidden_dim: usize, output_dim: usize) -> Self {
        TransformNet {
            input_dim,
            hidden_dim,
            output_dim,
            l2_normalize_input: false,
            params: NetParams::zeros(input_dim, hidden_dim, output_dim),
        }
    }

    /// Uniform Glorot initialization with zero biases.
    pub fn init<R: Rng>(
        input_dim: usize,
        hidden_dim: usize,
        output_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mut net = Self::zeros(input_dim, hidden_dim, output_dim);
        let l1 = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        net.params
            .w1
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-l1..=l1));
        let l2 = (6.0 / (hidden_dim + output_dim) as f64).sqrt();
        net.params
            .w2
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-l2..=l2));
        net
    }

    pub fn validate(&self) -> Result<()> {
        let expect = [
            ("w1", self.hidden_dim * self.input_dim, self.params.w1.len()),
            ("b1", self.hidden_dim, self.params.b1.len()),
            (
                "w2",
                self.output_dim * self.hidden_dim,
                self.params.w2.len(),
            ),
            ("b2", self.output_dim, self.params.b2.len()),
        ];
        for (name, expected, actual) in expect {
            if expected != actual {
                return Err(Error::InvalidParameter(format!(
                    "{name} has {actual} entries, shape needs {expected}"
                )));
            }
        }
        if !self.params.is_finite() {
            return Err(Error::InvalidParameter(
                "non-finite network parameter".into(),
            ));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Non-zero entries of the (optionally normalized) input.
    fn sparse_input(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let scale = if self.l2_normalize_input {
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        } else {
            1.0
        };
        x.iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, v * scale))
            .collect()
    }

    fn activate(&self, x: &[(usize, f64)]) -> Activation {
        let p = &self.params;
        let mut hidden_pre = p.b1.clone();
        for (h, acc) in hidden_pre.iter_mut().enumerate() {
            let row = &p.w1[h * self.input_dim..(h + 1) * self.input_dim];
            for &(j, v) in x {
                *acc += row[j] * v;
            }
        }
        let mut output = p.b2.clone();
        for (o, acc) in output.iter_mut().enumerate() {
            let row = &p.w2[o * self.hidden_dim..(o + 1) * self.hidden_dim];
            for (w, &a) in row.iter().zip(&hidden_pre) {
                if a > 0.0 {
                    *acc += w * a;
                }
            }
        }
        Activation { hidden_pre, output }
    }

    /// Accumulates parameter gradients for one input given `d loss / d output`.
    fn backward(
        &self,
        x: &[(usize, f64)],
        act: &Activation,
        grad_out: &[f64],
        grads: &mut NetParams,
    ) {
        let (hd, id) = (self.hidden_dim, self.input_dim);
        let mut grad_hidden = vec![0.0; hd];
        for (o, &g) in grad_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grads.b2[o] += g;
            let w_row = &self.params.w2[o * hd..(o + 1) * hd];
            let gw_row = &mut grads.w2[o * hd..(o + 1) * hd];
            for h in 0..hd {
                let a = act.hidden_pre[h];
                if a > 0.0 {
                    gw_row[h] += g * a;
                    grad_hidden[h] += g * w_row[h];
                }
            }
        }
        for (h, &g) in grad_hidden.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grads.b1[h] += g;
            let gw_row = &mut grads.w1[h * id..(h + 1) * id];
            for &(j, v) in x {
                gw_row[j] += g * v;
            }
        }
    }

    /// Embedding of one feature vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.activate(&self.sparse_input(x)).output)
    }
}

/// One center per class, ordered by class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototypes {
    pub centers: Vec<Vec<f64>>,
}

impl Prototypes {
    pub fn num_classes(&self) -> usize {
        self.centers.len()
    }

    /// Squared Euclidean distance from `z` to every center.
    pub fn squared_distances(&self, z: &[f64]) -> Vec<f64> {
        self.centers
            .iter()
            .map(|c| squared_distance(z, c))
            .collect()
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_of(rows: &[&[f64]], dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    for r in rows {
        c.iter_mut().zip(r.iter()).for_each(|(a, b)| *a += b);
    }
    let n = rows.len() as f64;
    c.iter_mut().for_each(|v| *v /= n);
    c
}

/// Mean embedding of each class's support features.
pub fn compute_prototypes(net: &TransformNet, support: &[Vec<&[f64]>]) -> Result<Prototypes> {
    let centers = support
        .iter()
        .enumerate()
        .map(|(k, xs)| {
            if xs.is_empty() {
                return Err(Error::EmptyClass(k));
            }
            let emb = xs
                .iter()
                .map(|x| net.forward(x))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&[f64]> = emb.iter().map(Vec::as_slice).collect();
            Ok(mean_of(&refs, net.output_dim))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prototypes { centers })
}

fn log_sum_exp_neg(d: &[f64]) -> f64 {
    let m = d.iter().copied().fold(f64::INFINITY, f64::min);
    -m + d.iter().map(|v| (m - v).exp()).sum::<f64>().ln()
}

/// Softmax over negative squared distances, shifted by the minimum distance.
pub fn softmax_neg(d: &[f64]) -> Vec<f64> {
    let m = d.iter().copied().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = d.iter().map(|v| (m - v).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn class_probs(net: &TransformNet, protos: &Prototypes, x: &[f64]) -> Result<Vec<f64>> {
    if protos.centers.is_empty() {
        return Err(Error::Empty("prototypes"));
    }
    let z = net.forward(x)?;
    Ok(softmax_neg(&protos.squared_distances(&z)))
}

/// Index of the smallest value; ties go to the lowest index.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Nearest prototype, ties to the lowest class index.
pub fn predict(net: &TransformNet, protos: &Prototypes, x: &[f64]) -> Result<usize> {
    if protos.centers.is_empty() {
        return Err(Error::Empty("prototypes"));
    }
    let z = net.forward(x)?;
    Ok(argmin(&protos.squared_distances(&z)))
}

/// Loss and gradients for an episode given as indices into `inputs`:
/// `support[k]` lists class `k`'s support rows and `queries` holds
/// `(row, class)` pairs. A row may serve as both support and query.
pub fn episode_loss_indexed(
    net: &TransformNet,
    inputs: &[&[f64]],
    support: &[Vec<usize>],
    queries: &[(usize, usize)],
) -> Result<(f64, NetParams)> {
    if queries.is_empty() {
        return Err(Error::Empty("queries"));
    }
    for x in inputs {
        net.check_input(x)?;
    }
    for (k, s) in support.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::EmptyClass(k));
        }
    }
    if let Some(&(_, y)) = queries.iter().find(|(_, y)| *y >= support.len()) {
        return Err(Error::EmptyClass(y));
    }

    let sparse: Vec<Vec<(usize, f64)>> = inputs.iter().map(|x| net.sparse_input(x)).collect();
    let acts: Vec<Activation> = sparse.iter().map(|x| net.activate(x)).collect();
    let dim = net.output_dim;
    let centers: Vec<Vec<f64>> = support
        .iter()
        .map(|s| {
            let rows: Vec<&[f64]> = s.iter().map(|&i| acts[i].output.as_slice()).collect();
            mean_of(&rows, dim)
        })
        .collect();

    let nq = queries.len() as f64;
    let mut loss = 0.0;
    let mut grad_z = vec![vec![0.0; dim]; inputs.len()];
    let mut grad_c = vec![vec![0.0; dim]; centers.len()];
    for &(i, y) in queries {
        let z = &acts[i].output;
        let d: Vec<f64> = centers.iter().map(|c| squared_distance(z, c)).collect();
        let lse = log_sum_exp_neg(&d);
        loss += d[y] + lse;
        for (k, c) in centers.iter().enumerate() {
            let p = (-d[k] - lse).exp();
            let gd = (f64::from(u8::from(k == y)) - p) / nq;
            if gd == 0.0 {
                continue;
            }
            for ((gz, gc), (zv, cv)) in grad_z[i]
                .iter_mut()
                .zip(grad_c[k].iter_mut())
                .zip(z.iter().zip(c))
            {
                let diff = 2.0 * gd * (zv - cv);
                *gz += diff;
                *gc -= diff;
            }
        }
    }
    loss /= nq;

    for (k, s) in support.iter().enumerate() {
        let share = 1.0 / s.len() as f64;
        for &i in s {
            for (gz, gc) in grad_z[i].iter_mut().zip(&grad_c[k]) {
                *gz += gc * share;
            }
        }
    }

    let mut grads = net.params.zeros_like();
    for ((x, act), g) in sparse.iter().zip(&acts).zip(&grad_z) {
        net.backward(x, act, g, &mut grads);
    }
    Ok((loss, grads))
}

/// Mean query cross-entropy `-log p_y(x)` of an episode and its exact
/// gradient with respect to every network parameter.
pub fn episode_loss(
    net: &TransformNet,
    support: &[Vec<&[f64]>],
    queries: &[(&[f64], usize)],
) -> Result<(f64, NetParams)> {
    let mut inputs: Vec<&[f64]> = Vec::new();
    let mut support_idx = Vec::with_capacity(support.len());
    for xs in support {
        support_idx.push(
            xs.iter()
                .map(|x| {
                    inputs.push(x);
                    inputs.len() - 1
                })
                .collect(),
        );
    }
    let query_idx: Vec<(usize, usize)> = queries
        .iter()
        .map(|(x, y)| {
            inputs.push(x);
            (inputs.len() - 1, *y)
        })
        .collect();
    episode_loss_indexed(net, &inputs, &support_idx, &query_idx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Inverse-time decay: step `t` uses `learning_rate / (1 + lr_decay * t)`.
    pub lr_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    /// Queries drawn per class each epoch; `None` uses the whole batch.
    pub queries_per_class: Option<usize>,
    /// Samples per class forming the epoch's batch; `None` uses all.
    pub batch_per_class: Option<usize>,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub normalize_features: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            learning_rate: 0.002,
            lr_decay: 1e-5,
            beta1: 0.7,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            queries_per_class: None,
            batch_per_class: None,
            hidden_dim: HIDDEN_DIM,
            output_dim: OUTPUT_DIM,
            normalize_features: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.epochs < 1 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)".into());
        }
        if self.lr_decay.is_nan()
            || self.lr_decay < 0.0
            || self.adam_epsilon.is_nan()
            || self.adam_epsilon <= 0.0
        {
            return bad("lr_decay must be >= 0 and adam_epsilon > 0".into());
        }
        if self.queries_per_class == Some(0) || self.batch_per_class == Some(0) {
            return bad("queries_per_class and batch_per_class must be at least 1".into());
        }
        if self.hidden_dim == 0 || self.output_dim == 0 {
            return bad("layer sizes must be positive".into());
        }
        Ok(())
    }
}

/// Adam with inverse-time learning-rate decay.
pub struct Adam {
    m: NetParams,
    v: NetParams,
    step: u64,
    lr: f64,
    decay: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(like: &NetParams, cfg: &TrainConfig) -> Self {
        Adam {
            m: like.zeros_like(),
            v: like.zeros_like(),
            step: 0,
            lr: cfg.learning_rate,
            decay: cfg.lr_decay,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_epsilon,
        }
    }

    pub fn update(&mut self, params: &mut NetParams, grads: &NetParams) {
        let lr = self.lr / (1.0 + self.decay * self.step as f64);
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub net: TransformNet,
    pub prototypes: Prototypes,
    /// Episode loss of each epoch, measured before that epoch's update.
    pub losses: Vec<f64>,
}

/// Trains the embedding network on `features` with class indices `labels`
/// in `0..num_classes`.
///
/// Every epoch draws a per-class batch, builds prototypes from it, picks
/// queries from the same batch and takes one Adam step on the episode loss.
/// The returned prototypes are recomputed from all training features.
pub fn train(
    features: &[&[f64]],
    labels: &[usize],
    num_classes: usize,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    if features.is_empty() {
        return Err(Error::Empty("training features"));
    }
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "labels",
            expected: features.len(),
            actual: labels.len(),
        });
    }
    let dim = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::DimensionMismatch {
            context: "training features",
            expected: dim,
            actual: bad.len(),
        });
    }
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &y) in labels.iter().enumerate() {
        if y >= num_classes {
            return Err(Error::InvalidParameter(format!(
                "label {y} outside 0..{num_classes}"
            )));
        }
        by_class[y].push(i);
    }
    if let Some(k) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass(k));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = TransformNet::init(dim, cfg.hidden_dim, cfg.output_dim, &mut rng);
    net.l2_normalize_input = cfg.normalize_features;
    let mut adam = Adam::new(&net.params, cfg);
    let mut losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut support: Vec<Vec<usize>> = Vec::with_capacity(num_classes);
        let mut queries: Vec<(usize, usize)> = Vec::new();
        for (k, members) in by_class.iter().enumerate() {
            let batch: Vec<usize> = match cfg.batch_per_class {
                Some(b) if b < members.len() => {
                    let mut pick: Vec<usize> = index::sample(&mut rng, members.len(), b)
                        .into_iter()
                        .map(|i| members[i])
                        .collect();
                    pick.sort_unstable();
                    pick
                }
                _ => members.clone(),
            };
            let nq = cfg
                .queries_per_class
                .unwrap_or(batch.len())
                .min(batch.len());
            if nq == batch.len() {
                queries.extend(batch.iter().map(|&i| (i, k)));
            } else {
                queries.extend(
                    index::sample(&mut rng, batch.len(), nq)
                        .into_iter()
                        .map(|j| (batch[j], k)),
                );
            }
            support.push(batch);
        }

        let (loss, grads) = episode_loss_indexed(&net, features, &support, &queries)?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                loss,
                norms: net.params.norms(),
            });
        }
        losses.push(loss);
        adam.update(&mut net.params, &grads);
    }
    if !net.params.is_finite() {
        return Err(Error::NonFiniteLoss {
            epoch: cfg.epochs,
            loss: f64::NAN,
            norms: net.params.norms(),
        });
    }

    let support: Vec<Vec<&[f64]>> = by_class
        .iter()
        .map(|m| m.iter().map(|&i| features[i]).collect())
        .collect();
    let prototypes = compute_prototypes(&net, &support)?;
    Ok(TrainedModel {
        net,
        prototypes,
        losses,
    })
}
