//! A small dense feed-forward network engine.
//!
//! The same [`MlpModel`] type plays three roles in an explanation pipeline:
//! the black-box predictor, the encoder (every layer up to the penultimate
//! one), and the decoder that maps latent vectors back to input space.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{check_finite, Mat64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Linear,
    Softmax,
}

impl Activation {
    fn apply(self, z: &[f64], out: &mut [f64]) {
        match self {
            Activation::Relu => out.iter_mut().zip(z).for_each(|(o, &v)| *o = v.max(0.0)),
            Activation::Tanh => out.iter_mut().zip(z).for_each(|(o, &v)| *o = v.tanh()),
            Activation::Sigmoid => out.iter_mut().zip(z).for_each(|(o, &v)| *o = sigmoid(v)),
            Activation::Linear => out.copy_from_slice(z),
            Activation::Softmax => {
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for (o, &v) in out.iter_mut().zip(z) {
                    *o = (v - max).exp();
                    sum += *o;
                }
                out.iter_mut().for_each(|o| *o /= sum);
            }
        }
    }

    /// Multiplies `grad` (dL/da) by da/dz in place, given pre-activation `z`
    /// and post-activation `a`.
    fn backprop(self, z: &[f64], a: &[f64], grad: &mut [f64]) {
        match self {
            Activation::Relu => grad
                .iter_mut()
                .zip(z)
                .for_each(|(g, &v)| *g = if v > 0.0 { *g } else { 0.0 }),
            Activation::Tanh => grad.iter_mut().zip(a).for_each(|(g, &v)| *g *= 1.0 - v * v),
            Activation::Sigmoid => grad.iter_mut().zip(a).for_each(|(g, &v)| *g *= v * (1.0 - v)),
            Activation::Linear => {}
            Activation::Softmax => {
                let s: f64 = grad.iter().zip(a).map(|(g, v)| g * v).sum();
                grad.iter_mut().zip(a).for_each(|(g, &v)| *g = v * (*g - s));
            }
        }
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    BinaryClassification,
    Regression,
    Reconstruction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out x in`
    pub weights: Mat64,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Mat64, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::Validation(format!(
                "bias length {} does not match {} weight rows",
                bias.len(),
                weights.rows()
            )));
        }
        check_finite(&bias)?;
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    fn affine(&self, x: &[f64], z: &mut [f64]) {
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = self.bias[i] + self.weights.row(i).iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

/// Output of a forward pass: the post-activation vector of every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub activations: Vec<Vec<f64>>,
}

impl Forward {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    input_dim: usize,
    task: Task,
    layers: Vec<DenseLayer>,
}

impl MlpModel {
    /// Assembles a model from layers, validating the dimension chain.
    pub fn from_layers(input_dim: usize, task: Task, layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Validation("model has no layers".into()));
        }
        let mut width = input_dim;
        for (k, layer) in layers.iter().enumerate() {
            if layer.input_dim() != width {
                return Err(Error::Validation(format!(
                    "layer {k} expects {} inputs but receives {width}",
                    layer.input_dim()
                )));
            }
            if layer.activation == Activation::Softmax && k + 1 != layers.len() {
                return Err(Error::Validation(format!(
                    "softmax is only allowed on the final layer (found on layer {k})"
                )));
            }
            width = layer.output_dim();
        }
        Ok(MlpModel {
            input_dim,
            task,
            layers,
        })
    }

    /// Glorot-uniform initialised network with the given `(width, activation)`
    /// stack.
    pub fn new(input_dim: usize, stack: &[(usize, Activation)], task: Task, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fan_in = input_dim;
        let mut layers = Vec::with_capacity(stack.len());
        for &(width, activation) in stack {
            if width == 0 || fan_in == 0 {
                return Err(Error::Structure("layer widths must be >= 1".into()));
            }
            let limit = (6.0 / (fan_in + width) as f64).sqrt();
            let values = (0..width * fan_in).map(|_| rng.random_range(-limit..=limit)).collect();
            layers.push(DenseLayer::new(
                Mat64::new(width, fan_in, values)?,
                vec![0.0; width],
                activation,
            )?);
            fan_in = width;
        }
        MlpModel::from_layers(input_dim, task, layers)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::output_dim)
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Width of the penultimate layer, i.e. the latent size used by `encode`.
    pub fn latent_dim(&self) -> Result<usize> {
        self.check_encoder()?;
        Ok(self.layers[self.layers.len() - 2].output_dim())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::dim(self.input_dim, x.len()));
        }
        check_finite(x)
    }

    fn check_encoder(&self) -> Result<()> {
        if self.layers.len() < 2 {
            return Err(Error::Structure(format!(
                "encoding needs at least 2 layers, model has {}",
                self.layers.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        self.check_input(x)?;
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = activations.last().map_or(x, Vec::as_slice);
            let mut z = vec![0.0; layer.output_dim()];
            layer.affine(input, &mut z);
            let mut a = vec![0.0; z.len()];
            layer.activation.apply(&z, &mut a);
            activations.push(a);
        }
        Ok(Forward { activations })
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.activations.pop().unwrap_or_default())
    }

    /// Scalar model output used for explanations: the positive-class
    /// probability of a binary classifier (last softmax entry when the head
    /// has several outputs) or the raw value of a regressor.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let out = self.predict(x)?;
        Ok(out[out.len() - 1])
    }

    /// Runs `predict` on every row.
    pub fn predict_rows(&self, x: &Mat64) -> Result<Mat64> {
        let mut values = Vec::with_capacity(x.rows() * self.output_dim());
        for row in x.iter_rows() {
            values.extend(self.predict(row)?);
        }
        Mat64::new(x.rows(), self.output_dim(), values)
    }

    pub fn score_rows(&self, x: &Mat64) -> Result<Vec<f64>> {
        x.iter_rows().map(|r| self.score(r)).collect()
    }

    /// Post-activation output of the penultimate layer.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_encoder()?;
        let mut f = self.forward(x)?;
        let idx = f.activations.len() - 2;
        Ok(f.activations.swap_remove(idx))
    }

    pub fn encode_rows(&self, x: &Mat64) -> Result<Mat64> {
        let latent = self.latent_dim()?;
        let mut values = Vec::with_capacity(x.rows() * latent);
        for row in x.iter_rows() {
            values.extend(self.encode(row)?);
        }
        Mat64::new(x.rows(), latent, values)
    }

    /// Gradient of `output[output_index]` with respect to the input.
    pub fn gradient_wrt_input(&self, x: &[f64], output_index: usize) -> Result<Vec<f64>> {
        if output_index >= self.output_dim() {
            return Err(Error::dim(self.output_dim(), output_index + 1));
        }
        let trace = self.trace(x)?;
        let mut grad = vec![0.0; self.output_dim()];
        grad[output_index] = 1.0;
        Ok(self.backward(&trace, x, grad, None))
    }

    fn trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = post.last().map_or(x, Vec::as_slice);
            let mut z = vec![0.0; layer.output_dim()];
            layer.affine(input, &mut z);
            let mut a = vec![0.0; z.len()];
            layer.activation.apply(&z, &mut a);
            pre.push(z);
            post.push(a);
        }
        Ok(Trace { pre, post })
    }

    /// Backpropagates dL/d(output) through the network. When `grads` is given,
    /// parameter gradients are accumulated into it. Returns dL/dx.
    fn backward(&self, trace: &Trace, x: &[f64], out_grad: Vec<f64>, grads: Option<&mut [LayerGrad]>) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut delta = out_grad;
        self.layers[last]
            .activation
            .backprop(&trace.pre[last], &trace.post[last], &mut delta);
        self.backward_from_logits(trace, x, delta, grads)
    }

    fn backward_from_logits(
        &self,
        trace: &Trace,
        x: &[f64],
        mut delta: Vec<f64>,
        mut grads: Option<&mut [LayerGrad]>,
    ) -> Vec<f64> {
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let input = if k == 0 { x } else { &trace.post[k - 1] };
            if let Some(g) = grads.as_deref_mut() {
                let g = &mut g[k];
                let cols = layer.input_dim();
                for (i, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    g.bias[i] += d;
                    let row = &mut g.weights[i * cols..(i + 1) * cols];
                    for (w, &v) in row.iter_mut().zip(input) {
                        *w += d * v;
                    }
                }
            }
            let mut prev = vec![0.0; layer.input_dim()];
            for (i, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (p, &w) in prev.iter_mut().zip(layer.weights.row(i)) {
                    *p += d * w;
                }
            }
            if k > 0 {
                let below = &self.layers[k - 1];
                below
                    .activation
                    .backprop(&trace.pre[k - 1], &trace.post[k - 1], &mut prev);
            }
            delta = prev;
        }
        delta
    }

    /// Trains in place with Adam and returns the mean training loss of every
    /// epoch.
    pub fn train(&mut self, x: &Mat64, y: &Mat64, cfg: &TrainConfig) -> Result<Vec<f64>> {
        cfg.validate(x.rows())?;
        if x.cols() != self.input_dim {
            return Err(Error::dim(self.input_dim, x.cols()));
        }
        if y.rows() != x.rows() {
            return Err(Error::dim(x.rows(), y.rows()));
        }
        if y.cols() != self.output_dim() {
            return Err(Error::dim(self.output_dim(), y.cols()));
        }
        let head = self.layers[self.layers.len() - 1].activation;
        match cfg.loss {
            Loss::BinaryCrossEntropy if head != Activation::Sigmoid => {
                return Err(Error::Precondition(
                    "binary cross-entropy needs a sigmoid output layer".into(),
                ))
            }
            Loss::CategoricalCrossEntropy if head != Activation::Softmax => {
                return Err(Error::Precondition(
                    "categorical cross-entropy needs a softmax output layer".into(),
                ))
            }
            _ => {}
        }

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut adam = AdamState::new(&self.layers);
        let mut grads: Vec<LayerGrad> = self.layers.iter().map(LayerGrad::zeros).collect();
        let mut order: Vec<usize> = (0..x.rows()).collect();
        let mut history = Vec::with_capacity(cfg.epochs);

        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                grads.iter_mut().for_each(LayerGrad::clear);
                for &i in batch {
                    let (xi, yi) = (x.row(i), y.row(i));
                    let trace = self.trace(xi)?;
                    let out = &trace.post[trace.post.len() - 1];
                    epoch_loss += cfg.loss.value(out, yi);
                    let logits_grad = cfg.loss.logit_gradient(head, out, yi);
                    match logits_grad {
                        Some(delta) => {
                            self.backward_from_logits(&trace, xi, delta, Some(&mut grads));
                        }
                        None => {
                            let g = cfg.loss.output_gradient(out, yi);
                            self.backward(&trace, xi, g, Some(&mut grads));
                        }
                    }
                }
                let scale = 1.0 / batch.len() as f64;
                adam.step(&mut self.layers, &grads, scale, &cfg.optimizer);
            }
            let mean = epoch_loss / x.rows() as f64;
            if !mean.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            history.push(mean);
        }
        Ok(history)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            input_dim: self.input_dim,
            task: self.task,
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    rows: l.weights.rows(),
                    cols: l.weights.cols(),
                    weights: l.weights.values().to_vec(),
                    bias: l.bias.clone(),
                    activation: l.activation,
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::from_json(e, text))?;
        let layers = file
            .layers
            .into_iter()
            .enumerate()
            .map(|(k, l)| {
                let weights = Mat64::new(l.rows, l.cols, l.weights)
                    .map_err(|e| Error::Validation(format!("layer {k} weights: {e}")))?;
                DenseLayer::new(weights, l.bias, l.activation).map_err(|e| Error::Validation(format!("layer {k}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        MlpModel::from_layers(file.input_dim, file.task, layers)
    }
}

pub fn save_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model.to_json())?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    let text = fs::read_to_string(path)?;
    MlpModel::from_json(&text)
}

/// Layer widths of a decoder shaped roughly like the predictor's inverse:
/// the encoder's hidden widths in reverse order, ending at the input width.
/// Use a sigmoid head for data scaled to `[0, 1]`.
pub fn decoder_stack(predictor: &MlpModel, unit_interval: bool) -> Result<Vec<(usize, Activation)>> {
    predictor.check_encoder()?;
    let layers = predictor.layers();
    let mut stack: Vec<(usize, Activation)> = layers[..layers.len() - 2]
        .iter()
        .rev()
        .map(|l| (l.output_dim(), l.activation))
        .collect();
    let head = if unit_interval {
        Activation::Sigmoid
    } else {
        Activation::Linear
    };
    stack.push((predictor.input_dim(), head));
    Ok(stack)
}

struct Trace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

#[derive(Clone)]
struct LayerGrad {
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LayerGrad {
    fn zeros(layer: &DenseLayer) -> Self {
        LayerGrad {
            weights: vec![0.0; layer.weights.values().len()],
            bias: vec![0.0; layer.bias.len()],
        }
    }

    fn clear(&mut self) {
        self.weights.iter_mut().for_each(|v| *v = 0.0);
        self.bias.iter_mut().for_each(|v| *v = 0.0);
    }
}

struct AdamState {
    first: Vec<LayerGrad>,
    second: Vec<LayerGrad>,
    step: i32,
}

impl AdamState {
    fn new(layers: &[DenseLayer]) -> Self {
        let zeros: Vec<LayerGrad> = layers.iter().map(LayerGrad::zeros).collect();
        AdamState {
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }

    fn step(&mut self, layers: &mut [DenseLayer], grads: &[LayerGrad], scale: f64, opt: &Adam) {
        self.step += 1;
        let c1 = 1.0 - opt.beta1.powi(self.step);
        let c2 = 1.0 - opt.beta2.powi(self.step);
        for (k, layer) in layers.iter_mut().enumerate() {
            let update = |param: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                let g = g * scale;
                *m = opt.beta1 * *m + (1.0 - opt.beta1) * g;
                *v = opt.beta2 * *v + (1.0 - opt.beta2) * g * g;
                *param -= opt.lr * (*m / c1) / ((*v / c2).sqrt() + opt.epsilon);
            };
            let weights = layer.weights.values_mut();
            for idx in 0..weights.len() {
                update(
                    &mut weights[idx],
                    grads[k].weights[idx],
                    &mut self.first[k].weights[idx],
                    &mut self.second[k].weights[idx],
                );
            }
            for idx in 0..layer.bias.len() {
                update(
                    &mut layer.bias[idx],
                    grads[k].bias[idx],
                    &mut self.first[k].bias[idx],
                    &mut self.second[k].bias[idx],
                );
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mae,
    Mse,
    BinaryCrossEntropy,
    CategoricalCrossEntropy,
}

const PROB_EPS: f64 = 1e-12;

impl Loss {
    fn value(self, out: &[f64], target: &[f64]) -> f64 {
        let k = out.len() as f64;
        match self {
            Loss::Mae => out.iter().zip(target).map(|(a, y)| (a - y).abs()).sum::<f64>() / k,
            Loss::Mse => out.iter().zip(target).map(|(a, y)| (a - y) * (a - y)).sum::<f64>() / k,
            Loss::BinaryCrossEntropy => {
                -out.iter()
                    .zip(target)
                    .map(|(&a, &y)| {
                        let a = a.clamp(PROB_EPS, 1.0 - PROB_EPS);
                        y * a.ln() + (1.0 - y) * (1.0 - a).ln()
                    })
                    .sum::<f64>()
                    / k
            }
            Loss::CategoricalCrossEntropy => -out
                .iter()
                .zip(target)
                .map(|(&a, &y)| y * a.max(PROB_EPS).ln())
                .sum::<f64>(),
        }
    }

    /// dL/da for the per-sample loss.
    fn output_gradient(self, out: &[f64], target: &[f64]) -> Vec<f64> {
        let k = out.len() as f64;
        out.iter()
            .zip(target)
            .map(|(&a, &y)| match self {
                Loss::Mae if a == y => 0.0,
                Loss::Mae => (a - y).signum() / k,
                Loss::Mse => 2.0 * (a - y) / k,
                Loss::BinaryCrossEntropy => {
                    let a = a.clamp(PROB_EPS, 1.0 - PROB_EPS);
                    (a - y) / (a * (1.0 - a)) / k
                }
                Loss::CategoricalCrossEntropy => -y / a.max(PROB_EPS),
            })
            .collect()
    }

    /// Closed-form dL/dz for the matched sigmoid/BCE and softmax/CCE pairs.
    fn logit_gradient(self, head: Activation, out: &[f64], target: &[f64]) -> Option<Vec<f64>> {
        let k = out.len() as f64;
        match (self, head) {
            (Loss::BinaryCrossEntropy, Activation::Sigmoid) => {
                Some(out.iter().zip(target).map(|(a, y)| (a - y) / k).collect())
            }
            (Loss::CategoricalCrossEntropy, Activation::Softmax) => {
                let total: f64 = target.iter().sum();
                Some(out.iter().zip(target).map(|(a, y)| a * total - y).collect())
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: Loss,
    pub optimizer: Adam,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(loss: Loss, epochs: usize, batch_size: usize, seed: u64) -> Self {
        TrainConfig {
            loss,
            optimizer: Adam::default(),
            epochs,
            batch_size,
            seed,
        }
    }

    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.optimizer.lr = lr;
        self
    }

    fn validate(&self, samples: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Precondition("epochs must be >= 1".into()));
        }
        if !(self.optimizer.lr > 0.0) {
            return Err(Error::Precondition("learning rate must be > 0".into()));
        }
        if self.batch_size == 0 || self.batch_size > samples {
            return Err(Error::Precondition(format!(
                "batch size must be in 1..={samples}, got {}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    input_dim: usize,
    task: Task,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(rows: &[&[f64]], bias: &[f64], act: Activation) -> DenseLayer {
        DenseLayer::new(Mat64::from_rows(rows).unwrap(), bias.to_vec(), act).unwrap()
    }

    #[test]
    fn affine_forward() {
        let m = MlpModel::from_layers(1, Task::Regression, vec![layer(&[&[2.0]], &[1.0], Activation::Linear)]).unwrap();
        assert_eq!(m.predict(&[3.0]).unwrap(), vec![7.0]);
    }

    #[test]
    fn sigmoid_of_zero() {
        let m = MlpModel::from_layers(
            2,
            Task::BinaryClassification,
            vec![layer(&[&[0.0, 0.0]], &[0.0], Activation::Sigmoid)],
        )
        .unwrap();
        assert_eq!(m.predict(&[0.3, -4.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn forward_is_deterministic_and_dimension_checked() {
        let m = MlpModel::new(
            3,
            &[(5, Activation::Tanh), (1, Activation::Sigmoid)],
            Task::BinaryClassification,
            4,
        )
        .unwrap();
        let x = [0.1, 0.2, 0.3];
        assert_eq!(m.forward(&x).unwrap(), m.forward(&x).unwrap());
        assert!(matches!(m.forward(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn encode_is_penultimate_activation() {
        let m = MlpModel::new(
            6,
            &[(8, Activation::Tanh), (4, Activation::Tanh), (1, Activation::Sigmoid)],
            Task::BinaryClassification,
            1,
        )
        .unwrap();
        let x = [0.28, 0.35, 0.41, 0.19, 0.66, 0.94];
        let h = m.encode(&x).unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h, m.forward(&x).unwrap().activations[1]);
        let single = MlpModel::new(2, &[(1, Activation::Linear)], Task::Regression, 0).unwrap();
        assert!(matches!(single.encode(&[0.0, 0.0]), Err(Error::Structure(_))));
    }

    #[test]
    fn linear_gradient() {
        let m = MlpModel::from_layers(
            2,
            Task::Regression,
            vec![layer(&[&[2.0, 3.0]], &[0.0], Activation::Linear)],
        )
        .unwrap();
        assert_eq!(m.gradient_wrt_input(&[5.0, -1.0], 0).unwrap(), vec![2.0, 3.0]);
        assert!(m.gradient_wrt_input(&[5.0, -1.0], 1).is_err());
    }

    #[test]
    fn sigmoid_gradient_chain_rule() {
        let m = MlpModel::from_layers(
            2,
            Task::BinaryClassification,
            vec![layer(&[&[0.7, -1.2]], &[0.1], Activation::Sigmoid)],
        )
        .unwrap();
        let x = [0.4, 0.9];
        let s = m.score(&x).unwrap();
        let g = m.gradient_wrt_input(&x, 0).unwrap();
        assert!((g[0] - s * (1.0 - s) * 0.7).abs() < 1e-15);
        assert!((g[1] - s * (1.0 - s) * -1.2).abs() < 1e-15);
    }

    #[test]
    fn linear_regression_converges() {
        let xs: Vec<[f64; 1]> = (0..20).map(|i| [i as f64 / 10.0 - 1.0]).collect();
        let ys: Vec<[f64; 1]> = xs.iter().map(|x| [2.0 * x[0]]).collect();
        let x = Mat64::from_rows(&xs).unwrap();
        let y = Mat64::from_rows(&ys).unwrap();
        let mut m = MlpModel::new(1, &[(1, Activation::Linear)], Task::Regression, 3).unwrap();
        let cfg = TrainConfig::new(Loss::Mse, 200, 4, 3).with_learning_rate(0.05);
        let history = m.train(&x, &y, &cfg).unwrap();
        assert_eq!(history.len(), 200);
        assert!(*history.last().unwrap() < 1e-3, "{history:?}");
    }

    #[test]
    fn training_preconditions() {
        let x = Mat64::from_rows(&[[0.0], [1.0]]).unwrap();
        let y = Mat64::from_rows(&[[0.0], [1.0]]).unwrap();
        let mut m = MlpModel::new(1, &[(1, Activation::Linear)], Task::Regression, 0).unwrap();
        let zero_epochs = TrainConfig::new(Loss::Mse, 0, 1, 0);
        assert!(matches!(m.train(&x, &y, &zero_epochs), Err(Error::Precondition(_))));
        let big_batch = TrainConfig::new(Loss::Mse, 1, 3, 0);
        assert!(matches!(m.train(&x, &y, &big_batch), Err(Error::Precondition(_))));
        let bce = TrainConfig::new(Loss::BinaryCrossEntropy, 1, 1, 0);
        assert!(matches!(m.train(&x, &y, &bce), Err(Error::Precondition(_))));
    }

    #[test]
    fn divergence_names_epoch() {
        let x = Mat64::from_rows(&[[1e200], [2e200]]).unwrap();
        let y = Mat64::from_rows(&[[1.0], [2.0]]).unwrap();
        let mut m = MlpModel::new(1, &[(1, Activation::Linear)], Task::Regression, 0).unwrap();
        let err = m.train(&x, &y, &TrainConfig::new(Loss::Mse, 3, 2, 0)).unwrap_err();
        assert!(matches!(err, Error::Diverged { epoch: 1 }), "{err}");
    }

    #[test]
    fn softmax_only_on_final_layer() {
        let layers = vec![
            layer(&[&[1.0], &[1.0]], &[0.0, 0.0], Activation::Softmax),
            layer(&[&[1.0, 1.0]], &[0.0], Activation::Linear),
        ];
        assert!(matches!(
            MlpModel::from_layers(1, Task::Regression, layers),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn softmax_classifier_trains() {
        let x = Mat64::from_rows(&[[0.0, 1.0], [1.0, 0.0], [0.1, 0.9], [0.9, 0.2]]).unwrap();
        let y = Mat64::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let mut m = MlpModel::new(2, &[(2, Activation::Softmax)], Task::BinaryClassification, 2).unwrap();
        let h = m
            .train(
                &x,
                &y,
                &TrainConfig::new(Loss::CategoricalCrossEntropy, 300, 2, 0).with_learning_rate(0.05),
            )
            .unwrap();
        assert!(h.last().unwrap() < &h[0]);
        assert!(m.score(&[1.0, 0.0]).unwrap() > 0.5);
    }

    #[test]
    fn model_file_errors() {
        assert!(matches!(MlpModel::from_json(""), Err(Error::Parse { offset: 0, .. })));
        let bad_bias = r#"{"input_dim":1,"task":"regression","layers":[{"rows":1,"cols":1,"weights":[1.0],"bias":[0.0,1.0],"activation":"linear"}]}"#;
        assert!(matches!(MlpModel::from_json(bad_bias), Err(Error::Validation(_))));
        let broken_chain = r#"{"input_dim":2,"task":"regression","layers":[{"rows":1,"cols":1,"weights":[1.0],"bias":[0.0],"activation":"linear"}]}"#;
        assert!(matches!(MlpModel::from_json(broken_chain), Err(Error::Validation(_))));
        let truncated = r#"{"input_dim":1,"task":"#;
        match MlpModel::from_json(truncated) {
            Err(Error::Parse { offset, .. }) => assert!(offset > 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decoder_mirrors_hidden_widths() {
        let p = MlpModel::new(
            6,
            &[
                (16, Activation::Relu),
                (8, Activation::Tanh),
                (4, Activation::Tanh),
                (1, Activation::Sigmoid),
            ],
            Task::BinaryClassification,
            0,
        )
        .unwrap();
        assert_eq!(
            decoder_stack(&p, true).unwrap(),
            vec![(8, Activation::Tanh), (16, Activation::Relu), (6, Activation::Sigmoid)]
        );
    }
}
