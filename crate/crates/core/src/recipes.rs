//! Default predictor and decoder set-ups for the bundled dataset kinds.

use serde::{Deserialize, Serialize};

use crate::data::DataKind;
use crate::error::{Error, Result};
use crate::neural::{decoder_stack, Activation, Loss, MlpModel, Task, TrainConfig};
use crate::numerics::Mat64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub loss: Loss,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Schedule {
    /// Training config for `samples` rows; the batch is capped at `samples`.
    pub fn config(&self, samples: usize, seed: u64) -> TrainConfig {
        TrainConfig::new(self.loss, self.epochs, self.batch_size.min(samples.max(1)), seed)
            .with_learning_rate(self.learning_rate)
    }
}

/// Architecture and schedules of one predictor/decoder pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    /// Hidden layers of the predictor; the last one is the latent space.
    pub hidden: Vec<(usize, Activation)>,
    pub task: Task,
    pub predictor: Schedule,
    pub decoder: Schedule,
    /// Inputs lie in `[0, 1]`, so the decoder ends in a sigmoid.
    pub unit_interval: bool,
}

impl Recipe {
    pub fn for_kind(kind: DataKind) -> Recipe {
        let bce = |epochs, batch_size, learning_rate| Schedule {
            loss: Loss::BinaryCrossEntropy,
            epochs,
            batch_size,
            learning_rate,
        };
        let mse = |epochs, batch_size, learning_rate| Schedule {
            loss: Loss::Mse,
            epochs,
            batch_size,
            learning_rate,
        };
        match kind {
            DataKind::Toy => Recipe {
                hidden: vec![(8, Activation::Tanh), (4, Activation::Linear)],
                task: Task::BinaryClassification,
                predictor: bce(200, 10, 0.01),
                decoder: mse(6000, 10, 0.01),
                unit_interval: true,
            },
            DataKind::Text => Recipe {
                hidden: vec![(32, Activation::Relu), (16, Activation::Tanh)],
                task: Task::BinaryClassification,
                predictor: bce(20, 16, 0.005),
                decoder: mse(300, 16, 0.005),
                unit_interval: true,
            },
            DataKind::Timeseries => Recipe {
                hidden: vec![(32, Activation::Tanh), (8, Activation::Tanh)],
                task: Task::BinaryClassification,
                predictor: bce(30, 32, 0.003),
                decoder: mse(120, 32, 0.003),
                unit_interval: true,
            },
        }
    }

    /// Untrained predictor for `input_dim` features.
    pub fn predictor_model(&self, input_dim: usize, seed: u64) -> Result<MlpModel> {
        let head = match self.task {
            Task::BinaryClassification => Activation::Sigmoid,
            Task::Regression | Task::Reconstruction => Activation::Linear,
        };
        let mut stack = self.hidden.clone();
        stack.push((1, head));
        MlpModel::new(input_dim, &stack, self.task, seed)
    }

    /// Trains a fresh predictor on `x` against `targets` (one per row).
    pub fn train_predictor(&self, x: &Mat64, targets: &[f64], seed: u64) -> Result<(MlpModel, Vec<f64>)> {
        if targets.len() != x.rows() {
            return Err(Error::dim(x.rows(), targets.len()));
        }
        let mut model = self.predictor_model(x.cols(), seed)?;
        let y = Mat64::new(targets.len(), 1, targets.to_vec())?;
        let history = model.train(x, &y, &self.predictor.config(x.rows(), seed))?;
        Ok((model, history))
    }

    /// Trains a decoder from the predictor's latent encoding of `x` back to `x`.
    pub fn train_decoder(&self, predictor: &MlpModel, x: &Mat64, seed: u64) -> Result<(MlpModel, Vec<f64>)> {
        let latent = predictor.encode_rows(x)?;
        let stack = decoder_stack(predictor, self.unit_interval)?;
        let mut decoder = MlpModel::new(latent.cols(), &stack, Task::Reconstruction, seed)?;
        let history = decoder.train(&latent, x, &self.decoder.config(x.rows(), seed))?;
        Ok((decoder, history))
    }
}

/// Mean absolute reconstruction error of `decoder(encode(x))` against `x`.
pub fn reconstruction_mae(predictor: &MlpModel, decoder: &MlpModel, x: &Mat64) -> Result<f64> {
    let rebuilt = decoder.predict_rows(&predictor.encode_rows(x)?)?;
    if rebuilt.cols() != x.cols() {
        return Err(Error::dim(x.cols(), rebuilt.cols()));
    }
    let total: f64 = rebuilt
        .values()
        .iter()
        .zip(x.values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(total / x.values().len() as f64)
}

/// Share of rows whose score is on the same side of 0.5 as the 0/1 target.
pub fn accuracy(predictor: &MlpModel, x: &Mat64, targets: &[f64]) -> Result<f64> {
    if targets.len() != x.rows() {
        return Err(Error::dim(x.rows(), targets.len()));
    }
    let scores = predictor.score_rows(x)?;
    let hits = scores
        .iter()
        .zip(targets)
        .filter(|(s, t)| (**s >= 0.5) == (**t >= 0.5))
        .count();
    Ok(hits as f64 / targets.len() as f64)
}
