//! Editing an instance in its raw form and re-scoring it.

use serde::{Deserialize, Serialize};

use crate::data::{flat_index, preprocess_text, stem_token, tfidf_transform, Vocabulary};
use crate::error::{Error, Result};
use crate::neural::MlpModel;

/// How raw instances become predictor inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum PipelineContext {
    Dense { features: usize },
    Text { vocab: Vocabulary },
    Windows { window: usize, sensors: usize },
}

impl PipelineContext {
    pub fn input_dim(&self) -> usize {
        match self {
            PipelineContext::Dense { features } => *features,
            PipelineContext::Text { vocab } => vocab.len(),
            PipelineContext::Windows { window, sensors } => window * sensors,
        }
    }

    /// Display name of every input feature.
    pub fn feature_names(&self) -> Vec<String> {
        match self {
            PipelineContext::Dense { features } => (1..=*features).map(|j| format!("x_{j}")).collect(),
            PipelineContext::Text { vocab } => vocab.tokens().to_vec(),
            PipelineContext::Windows { window, sensors } => (0..*window)
                .flat_map(|t| (0..*sensors).map(move |s| format!("sensor_{}@t{}", s + 1, t)))
                .collect(),
        }
    }

    pub fn vectorize(&self, source: &InstanceSource) -> Result<Vec<f64>> {
        let v = match (self, source) {
            (PipelineContext::Text { vocab }, InstanceSource::Text(text)) => tfidf_transform(vocab, text),
            (PipelineContext::Dense { .. }, InstanceSource::Dense(v))
            | (PipelineContext::Windows { .. }, InstanceSource::Window(v)) => v.clone(),
            _ => return Err(Error::Domain("instance kind does not match the pipeline".into())),
        };
        if v.len() != self.input_dim() {
            return Err(Error::dim(self.input_dim(), v.len()));
        }
        Ok(v)
    }
}

/// An instance in the form a person edits it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "data")]
pub enum InstanceSource {
    Dense(Vec<f64>),
    Text(String),
    /// Flattened timestep-major window.
    Window(Vec<f64>),
}

/// A single edit of a raw instance. Timestep ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum Edit {
    RemoveToken {
        token: String,
    },
    AddToken {
        token: String,
    },
    SetFeature {
        feature: usize,
        value: f64,
    },
    SetValue {
        sensor: usize,
        timestep: usize,
        value: f64,
    },
    AddDelta {
        sensor: usize,
        from: usize,
        to: usize,
        delta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfOutcome {
    pub original_prediction: f64,
    pub prediction: f64,
    pub edited: InstanceSource,
    /// Predictor input of the edited instance.
    pub vector: Vec<f64>,
    /// Edits that had no effect on the vector (e.g. out-of-vocabulary words).
    pub warnings: Vec<String>,
}

/// Applies `edits` in order to a copy of `source`, re-runs the full
/// preprocessing path and scores the result.
pub fn what_if(
    predictor: &MlpModel,
    ctx: &PipelineContext,
    source: &InstanceSource,
    edits: &[Edit],
) -> Result<WhatIfOutcome> {
    let original_prediction = predictor.score(&ctx.vectorize(source)?)?;
    let mut edited = source.clone();
    let mut warnings = Vec::new();
    for edit in edits {
        apply(ctx, &mut edited, edit, &mut warnings)?;
    }
    let vector = ctx.vectorize(&edited)?;
    Ok(WhatIfOutcome {
        original_prediction,
        prediction: predictor.score(&vector)?,
        edited,
        vector,
        warnings,
    })
}

fn apply(ctx: &PipelineContext, source: &mut InstanceSource, edit: &Edit, warnings: &mut Vec<String>) -> Result<()> {
    match (ctx, source, edit) {
        (PipelineContext::Text { .. }, InstanceSource::Text(text), Edit::RemoveToken { token }) => {
            let targets: Vec<String> = preprocess_text(token).split_whitespace().map(stem_token).collect();
            let base = preprocess_text(text);
            let words: Vec<&str> = base.split_whitespace().collect();
            let kept: Vec<String> = words
                .iter()
                .filter(|w| !targets.contains(&stem_token(w)))
                .map(|w| w.to_string())
                .collect();
            if kept.len() == words.len() {
                warnings.push(format!("{token:?} does not occur in the text"));
            }
            *text = kept.join(" ");
        }
        (PipelineContext::Text { vocab }, InstanceSource::Text(text), Edit::AddToken { token }) => {
            let added = preprocess_text(token);
            if added.is_empty() {
                warnings.push(format!("{token:?} has no content after preprocessing"));
                return Ok(());
            }
            for word in added.split_whitespace() {
                if vocab.index_of(&stem_token(word)).is_none() {
                    warnings.push(format!("{word:?} is not in the vocabulary; the vector is unchanged"));
                }
            }
            let base = preprocess_text(text);
            *text = if base.is_empty() {
                added
            } else {
                format!("{base} {added}")
            };
        }
        (PipelineContext::Dense { features }, InstanceSource::Dense(v), Edit::SetFeature { feature, value }) => {
            if feature >= features {
                return Err(Error::Domain(format!("feature {feature} out of range (< {features})")));
            }
            v[*feature] = *value;
        }
        (
            PipelineContext::Windows { window, sensors },
            InstanceSource::Window(v),
            Edit::SetValue {
                sensor,
                timestep,
                value,
            },
        ) => {
            check_cell(*sensor, *timestep, *window, *sensors)?;
            v[flat_index(*timestep, *sensor, *sensors)] = *value;
        }
        (
            PipelineContext::Windows { window, sensors },
            InstanceSource::Window(v),
            Edit::AddDelta {
                sensor,
                from,
                to,
                delta,
            },
        ) => {
            if from > to {
                return Err(Error::Domain(format!("empty timestep range {from}..={to}")));
            }
            check_cell(*sensor, *to, *window, *sensors)?;
            for t in *from..=*to {
                v[flat_index(t, *sensor, *sensors)] += delta;
            }
        }
        (_, _, edit) => {
            return Err(Error::Domain(format!(
                "edit {edit:?} does not apply to this kind of instance"
            )));
        }
    }
    Ok(())
}

fn check_cell(sensor: usize, timestep: usize, window: usize, sensors: usize) -> Result<()> {
    if sensor >= sensors {
        return Err(Error::Domain(format!("sensor {sensor} out of range (< {sensors})")));
    }
    if timestep >= window {
        return Err(Error::Domain(format!("timestep {timestep} out of range (< {window})")));
    }
    Ok(())
}
