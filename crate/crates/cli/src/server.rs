//! JSON endpoints for browsing instances, predicting, explaining and what-if edits.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lionex::data::DataKind;
use lionex::lionets::{what_if, Edit, InstanceSource, PipelineContext};
use lionex::ExplanationFile;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::commands::{explanation_file, ExplainOptions, ExplainerKind, Models};
use crate::workspace::{SplitData, Workspace, SPLITS};

/// Everything the service reads; never mutated after start-up.
pub struct AppState {
    pub workspace: Workspace,
    pub context: PipelineContext,
    pub models: Models,
    pub splits: Vec<SplitData>,
    pub predictions: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
    pub options: ExplainOptions,
}

impl AppState {
    /// Loads the workspace; the decoder and stats are optional and only
    /// needed for the `lionets` explainer.
    pub fn load(workspace: Workspace, options: ExplainOptions) -> anyhow::Result<Self> {
        let predictor = workspace.predictor()?;
        let decoder = workspace.decoder().ok();
        let stats = workspace.stats().ok();
        let mut splits = Vec::new();
        let mut predictions = Vec::new();
        for name in SPLITS {
            if workspace.manifest.splits.contains_key(name) {
                let data = workspace.split(name)?;
                predictions.push(predictor.score_rows(&data.x)?);
                splits.push(data);
            }
        }
        Ok(AppState {
            context: workspace.context()?,
            feature_names: workspace.feature_names()?,
            models: Models {
                predictor,
                decoder,
                stats,
            },
            splits,
            predictions,
            workspace,
            options,
        })
    }

    fn find(&self, id: &str) -> Option<(usize, usize)> {
        self.splits
            .iter()
            .enumerate()
            .find_map(|(s, data)| data.position(id).map(|i| (s, i)))
    }

    fn explainers(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.models.decoder.is_some() && self.models.stats.is_some() {
            out.push("lionets");
        }
        if self.workspace.kind() != DataKind::Toy {
            out.push("lime");
        }
        out.push("gxi");
        out
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, format!("unknown instance id {id:?}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<lionex::Error> for ApiError {
    fn from(e: lionex::Error) -> Self {
        let status = match e {
            lionex::Error::Io(_) | lionex::Error::Diverged { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<anyhow::Error> for ApiError {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<lionex::Error>() {
            Ok(e) => e.into(),
            Err(e) => match e.downcast_ref::<crate::error::CliError>() {
                Some(c) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, c.message.clone()),
                None => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("{e:#}")),
            },
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.body_text())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub id: String,
    pub split: String,
    pub label: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDetail {
    #[serde(flatten)]
    pub summary: InstanceSummary,
    pub instance: InstanceSource,
}

fn summary(state: &AppState, s: usize, i: usize) -> InstanceSummary {
    InstanceSummary {
        id: state.splits[s].ids[i].clone(),
        split: state.splits[s].name.clone(),
        label: state.splits[s].targets[i],
        prediction: state.predictions[s][i],
    }
}

async fn instances(State(state): State<Arc<AppState>>) -> Json<Vec<InstanceSummary>> {
    let mut out = Vec::new();
    for (s, data) in state.splits.iter().enumerate() {
        out.extend((0..data.ids.len()).map(|i| summary(&state, s, i)));
    }
    Json(out)
}

async fn instance(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<InstanceDetail> {
    let (s, i) = state.find(&id).ok_or_else(|| ApiError::not_found(&id))?;
    Ok(Json(InstanceDetail {
        summary: summary(&state, s, i),
        instance: state.splits[s].sources[i].clone(),
    }))
}

async fn model_info(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let p = &state.models.predictor;
    let layers: Vec<_> = p
        .layers()
        .iter()
        .map(|l| json!({ "inputs": l.input_dim(), "outputs": l.output_dim(), "activation": l.activation }))
        .collect();
    Json(json!({
        "kind": state.workspace.kind(),
        "task": p.task(),
        "input_dim": p.input_dim(),
        "latent_dim": p.latent_dim().ok(),
        "layers": layers,
        "features": state.feature_names,
        "window": state.workspace.manifest.window,
        "sensors": state.workspace.manifest.sensors,
        "explainers": state.explainers(),
    }))
}

#[derive(Debug, Deserialize)]
pub struct PredictRequest {
    pub instance: InstanceSource,
}

async fn predict(
    State(state): State<Arc<AppState>>,
    body: Result<Json<PredictRequest>, JsonRejection>,
) -> ApiResult<serde_json::Value> {
    let Json(req) = body?;
    let x = state.context.vectorize(&req.instance)?;
    Ok(Json(json!({ "prediction": state.models.predictor.score(&x)? })))
}

/// Either a stored instance or an ad-hoc one (e.g. an edited instance).
#[derive(Debug, Deserialize)]
pub struct InstanceRef {
    pub instance_id: Option<String>,
    pub instance: Option<InstanceSource>,
}

impl InstanceRef {
    fn resolve(&self, state: &AppState) -> Result<(String, InstanceSource), ApiError> {
        match (&self.instance_id, &self.instance) {
            (_, Some(source)) => Ok((
                self.instance_id.clone().unwrap_or_else(|| "custom".into()),
                source.clone(),
            )),
            (Some(id), None) => {
                let (s, i) = state.find(id).ok_or_else(|| ApiError::not_found(id))?;
                Ok((id.clone(), state.splits[s].sources[i].clone()))
            }
            (None, None) => Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "request needs an instance_id or an instance",
            )),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct ExplainRequest {
    #[serde(flatten)]
    pub target: InstanceRef,
    #[serde(default = "default_explainer")]
    pub explainer: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

fn default_explainer() -> String {
    "lionets".into()
}

fn default_top_k() -> usize {
    10
}

async fn explain(
    State(state): State<Arc<AppState>>,
    body: Result<Json<ExplainRequest>, JsonRejection>,
) -> ApiResult<ExplanationFile> {
    let Json(req) = body?;
    let (id, source) = req.target.resolve(&state)?;
    let kind = ExplainerKind::parse(&req.explainer)?;
    let file = tokio::task::spawn_blocking(move || -> Result<ExplanationFile, ApiError> {
        let x = state.context.vectorize(&source)?;
        let explainer = state.models.explainer(kind, state.workspace.kind(), &state.options)?;
        let expl = explainer.explain(&x, req.seed)?;
        Ok(explanation_file(
            &state.workspace,
            &state.feature_names,
            &id,
            explainer.id(),
            &expl,
            &x,
            req.top_k,
        )?)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(file))
}

#[derive(Debug, Deserialize)]
pub struct WhatIfRequest {
    #[serde(flatten)]
    pub target: InstanceRef,
    #[serde(default)]
    pub edits: Vec<Edit>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub instance_id: String,
    pub original_prediction: f64,
    pub prediction: f64,
    pub edited: InstanceSource,
    pub warnings: Vec<String>,
}

async fn whatif(
    State(state): State<Arc<AppState>>,
    body: Result<Json<WhatIfRequest>, JsonRejection>,
) -> ApiResult<WhatIfResponse> {
    let Json(req) = body?;
    let (id, source) = req.target.resolve(&state)?;
    let out = what_if(&state.models.predictor, &state.context, &source, &req.edits)?;
    Ok(Json(WhatIfResponse {
        instance_id: id,
        original_prediction: out.original_prediction,
        prediction: out.prediction,
        edited: out.edited,
        warnings: out.warnings,
    }))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/instances", get(instances))
        .route("/api/instances/{id}", get(instance))
        .route("/api/model-info", get(model_info))
        .route("/api/predict", post(predict))
        .route("/api/explain", post(explain))
        .route("/api/whatif", post(whatif))
        .fallback(not_found)
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
