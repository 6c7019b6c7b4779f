//! JSON API over a [`Service`].
//!
//! | method | path                         | body                                   |
//! |--------|------------------------------|----------------------------------------|
//! | GET    | /volumes                     |                                        |
//! | POST   | /volumes                     | volume metadata                        |
//! | GET    | /volumes/{id}                |                                        |
//! | GET    | /volumes/{id}/scans          |                                        |
//! | GET    | /scans/{id}/image            |                                        |
//! | POST   | /volumes/{id}/pages          | `expected_version` + page action       |
//! | POST   | /volumes/{id}/transition     | `expected_version`, optional `target`  |
//! | POST   | /volumes/{id}/articles       | `expected_version` + article or remove |
//! | POST   | /volumes/{id}/finalize       | `expected_version`                     |
//! | GET    | /volumes/{id}/export         |                                        |
//!
//! Mutations record the `X-Operator` header in the event log. Errors are
//! `{"error": <code>, "message": <text>, "details": <object or null>}`;
//! a stale `expected_version` is the only 409.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bibcap_core::article::{ArticleDraft, ArticleRecord};
use bibcap_core::pagination::{
    LabelOverride, PaginationError, PaginationReport, ScanId, ScanStatus,
};
use bibcap_core::workflow::{NewVolume, PageCommand, VolumeSummary};
use bibcap_core::{PageLabel, RegistryError, Service, ServiceError, VolumeState};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const OPERATOR_HEADER: &str = "x-operator";
const DEFAULT_OPERATOR: &str = "anonymous";

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/volumes", get(list_volumes).post(create_volume))
        .route("/volumes/{id}", get(get_volume))
        .route("/volumes/{id}/scans", get(list_scans))
        .route("/volumes/{id}/pages", post(page_command))
        .route("/volumes/{id}/transition", post(transition))
        .route("/volumes/{id}/articles", post(articles))
        .route("/volumes/{id}/finalize", post(finalize))
        .route("/volumes/{id}/export", get(export))
        .route("/scans/{id}/image", get(scan_image))
        .with_state(service)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn invalid_request(message: String) -> ApiError {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": "InvalidRequest", "message": message, "details": null }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        ApiError::invalid_request(rejection.body_text())
    }
}

fn status_of(err: &ServiceError) -> StatusCode {
    match err {
        ServiceError::VersionConflict { .. } => StatusCode::CONFLICT,
        ServiceError::UnknownVolume(_)
        | ServiceError::UnknownArticle(_)
        | ServiceError::ImageNotFound(_)
        | ServiceError::Pagination(PaginationError::UnknownScan(_)) => StatusCode::NOT_FOUND,
        e if e.is_environmental() => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

fn details_of(err: &ServiceError) -> Value {
    match err {
        ServiceError::VersionConflict { expected, actual } => {
            json!({ "expected": expected, "actual": actual })
        }
        ServiceError::WrongState { expected, actual } => {
            json!({ "expected": expected, "actual": actual })
        }
        ServiceError::PaginationIncomplete(report) => json!(report),
        ServiceError::Pagination(PaginationError::DuplicateLabel {
            label,
            conflicting_scan,
        }) => json!({ "label": label, "conflicting_scan": conflicting_scan }),
        ServiceError::StemUnresolved(RegistryError::Ambiguous { candidates, .. }) => {
            json!({ "candidates": candidates })
        }
        ServiceError::UnderivedBibcodes(ids) => json!({ "articles": ids }),
        _ => Value::Null,
    }
}

impl From<ServiceError> for ApiError {
    fn from(err: ServiceError) -> Self {
        ApiError {
            status: status_of(&err),
            body: json!({
                "error": err.code(),
                "message": err.to_string(),
                "details": details_of(&err),
            }),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn operator(headers: &HeaderMap) -> String {
    headers
        .get(OPERATOR_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .unwrap_or(DEFAULT_OPERATOR)
        .to_string()
}

/// Runs a service call off the async executor; mutations may fsync.
async fn blocking<T: Send + 'static>(
    service: Arc<Service>,
    f: impl FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(move || f(&service))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: json!({ "error": "Internal", "message": e.to_string(), "details": null }),
        })?
        .map_err(ApiError::from)
}

#[derive(Debug, Serialize)]
pub struct VolumeView {
    #[serde(flatten)]
    pub summary: VolumeSummary,
    pub pagination: PaginationReport,
    pub articles: Vec<ArticleRecord>,
}

#[derive(Debug, Serialize)]
pub struct ScanView {
    pub scan_id: ScanId,
    pub sequence_index: u32,
    pub status: ScanStatus,
    pub has_image: bool,
    pub label: Option<PageLabel>,
    #[serde(rename = "override")]
    pub override_label: Option<LabelOverride>,
    pub effective_label: Option<PageLabel>,
    /// Only offered while the volume is in page numbering.
    pub suggested_label: Option<PageLabel>,
}

async fn list_volumes(State(service): State<Arc<Service>>) -> Json<Vec<VolumeSummary>> {
    Json(service.list_volumes())
}

async fn create_volume(
    State(service): State<Arc<Service>>,
    headers: HeaderMap,
    body: Result<Json<NewVolume>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<VolumeSummary>)> {
    let Json(meta) = body?;
    let operator = operator(&headers);
    let volume = blocking(service, move |s| s.create_volume(meta, &operator)).await?;
    Ok((StatusCode::CREATED, Json(volume.summary())))
}

async fn get_volume(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
) -> ApiResult<Json<VolumeView>> {
    let volume = service.volume(&id)?;
    Ok(Json(VolumeView {
        summary: volume.summary(),
        pagination: volume.pages().verify(),
        articles: volume.articles().to_vec(),
    }))
}

async fn list_scans(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Vec<ScanView>>> {
    let volume = service.volume(&id)?;
    let pages = volume.pages();
    let numbering = volume.state == VolumeState::PageNumbering;
    let views = pages
        .scans()
        .iter()
        .map(|scan| {
            let assignment = pages.assignment(&scan.scan_id);
            ScanView {
                scan_id: scan.scan_id.clone(),
                sequence_index: scan.sequence_index,
                status: scan.status,
                has_image: scan.image_ref.is_some(),
                label: assignment.map(|a| a.label),
                override_label: assignment.and_then(|a| a.override_label.clone()),
                effective_label: assignment.map(|a| a.effective()),
                suggested_label: if numbering {
                    pages.suggest_next_label(&scan.scan_id).ok().flatten()
                } else {
                    None
                },
            }
        })
        .collect();
    Ok(Json(views))
}

async fn scan_image(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let (bytes, content_type) = service.scan_image(&ScanId::new(id))?;
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}

#[derive(Debug, Deserialize)]
pub struct PagesRequest {
    pub expected_version: u64,
    #[serde(flatten)]
    pub command: PageCommand,
}

async fn page_command(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Result<Json<PagesRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(request) = body?;
    let operator = operator(&headers);
    let outcome = blocking(service, move |s| {
        s.apply_page_command(&id, request.expected_version, &operator, request.command)
    })
    .await?;
    Ok(Json(json!(outcome)))
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionTarget {
    #[default]
    ArticleEntry,
    PageNumbering,
}

#[derive(Debug, Deserialize)]
pub struct TransitionRequest {
    pub expected_version: u64,
    #[serde(default)]
    pub target: TransitionTarget,
}

async fn transition(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Result<Json<TransitionRequest>, JsonRejection>,
) -> ApiResult<Json<VolumeSummary>> {
    let Json(request) = body?;
    let operator = operator(&headers);
    let volume = blocking(service, move |s| match request.target {
        TransitionTarget::ArticleEntry => {
            s.transition_to_article_mode(&id, request.expected_version, &operator)
        }
        TransitionTarget::PageNumbering => {
            s.reopen_pagination(&id, request.expected_version, &operator)
        }
    })
    .await?;
    Ok(Json(volume.summary()))
}

/// `action` is `create` (the default) with article fields, or `remove`
/// with an `article_id`.
#[derive(Debug, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
enum ArticleAction {
    Create(ArticleDraft),
    Remove { article_id: String },
}

#[derive(Debug, Deserialize)]
struct ArticlesRequest {
    expected_version: u64,
    #[serde(flatten)]
    action: ArticleAction,
}

async fn articles(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Result<Json<Value>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(mut body) = body?;
    if let Some(map) = body.as_object_mut() {
        map.entry("action").or_insert_with(|| json!("create"));
    }
    let request: ArticlesRequest =
        serde_json::from_value(body).map_err(|e| ApiError::invalid_request(e.to_string()))?;
    let operator = operator(&headers);
    let expected = request.expected_version;
    let response = blocking(service, move |s| match request.action {
        ArticleAction::Create(draft) => {
            Ok(json!(s.create_article(&id, expected, &operator, &draft)?))
        }
        ArticleAction::Remove { article_id } => {
            let volume = s.remove_article(&id, expected, &operator, &article_id)?;
            Ok(json!({ "version": volume.version, "removed": article_id }))
        }
    })
    .await?;
    Ok(Json(response))
}

#[derive(Debug, Deserialize)]
pub struct FinalizeRequest {
    pub expected_version: u64,
}

async fn finalize(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Result<Json<FinalizeRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(request) = body?;
    let operator = operator(&headers);
    let response = blocking(service, move |s| {
        let records = s.finalize_volume(&id, request.expected_version, &operator)?;
        let version = s.volume(&id)?.version;
        Ok(json!({ "version": version, "records": records }))
    })
    .await?;
    Ok(Json(response))
}

async fn export(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let text = service.export_records(&id)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}
