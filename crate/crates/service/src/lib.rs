//! HTTP facade over a season built from the artifact store.
//!
//! The season is computed once at startup and shared read-only between
//! requests; every response is a pure function of it and the request.

use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use runlens_core::aggregation::{compare_lineups, LineupEntry, LineupError, LineupGap, PlayerProfile, Season};
use runlens_core::config::EngineConfig;
use runlens_core::formations::simplify_role;
use runlens_core::io::{load_season, Store, StoreError};
use runlens_core::model::{PlayerId, Role, SpeedCategory, TeamId};
use runlens_core::tactical::{MovementType, Zone};

pub struct AppState {
    pub season: Season,
    pub config: EngineConfig,
    pub matches: usize,
}

impl AppState {
    pub fn new(season: Season, config: EngineConfig, matches: usize) -> Self {
        Self {
            season,
            config,
            matches,
        }
    }

    /// Loads every processed match in the store, verifying hashes.
    pub fn from_store(root: &Path) -> Result<Self, StoreError> {
        let store = Store::open(root)?;
        let config = store.config()?;
        let season = load_season(&store)?;
        let matches = store.load_all()?.len();
        Ok(Self::new(season, config, matches))
    }
}

pub type Shared = Arc<AppState>;

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    InvalidLineup { message: String, gaps: Vec<LineupGap> },
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": m })),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "error": m })),
            ApiError::InvalidLineup { message, gaps } => {
                (StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": message, "gaps": gaps }))
            }
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn to_json<T: Serialize>(x: &T) -> Json<Value> {
    Json(serde_json::to_value(x).expect("response serializes"))
}

fn parse_role(s: &str) -> Option<Role> {
    Role::parse(s)
}

/// All API routes. With `ui_dir`, other paths are served from it.
pub fn router(state: Shared, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/meta", get(meta))
        .route("/players", get(players))
        .route("/players/{id}/profile", get(profile))
        .route("/teams/{id}/style", get(team_style))
        .route("/roles/{role}/percentiles", get(role_percentiles))
        .route("/lineups/compare", post(lineup_compare))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn health(State(s): State<Shared>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "matches": s.matches,
        "profiles": s.season.profiles.len(),
        "teams": s.season.teams.len(),
    }))
}

async fn meta(State(s): State<Shared>) -> Json<Value> {
    let templates: Vec<Value> = s
        .config
        .formations
        .templates
        .iter()
        .map(|t| {
            json!({
                "name": t.name,
                "slots": t.slots.iter().map(|sl| json!({
                    "x": sl.xy.x,
                    "y": sl.xy.y,
                    "side": sl.side,
                    "role": simplify_role(sl.role, sl.side),
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let movement_types: Vec<Value> = MovementType::ALL
        .iter()
        .map(|m| json!({ "name": m.name(), "origin": m.origin(), "destination": m.destination() }))
        .collect();
    Json(json!({
        "templates": templates,
        "roles": Role::ALL.iter().map(|r| r.name()).collect::<Vec<_>>(),
        "zones": [Zone::Inside, Zone::Wing, Zone::Back, Zone::Front],
        "movement_types": movement_types,
        "speed_categories": SpeedCategory::ALL,
        "speed_thresholds_kmh": s.config.thresholds.bounds(),
        "min_role_minutes": s.config.aggregation.min_role_minutes,
    }))
}

#[derive(Debug, Deserialize)]
struct PlayersQuery {
    role: Option<String>,
    min_minutes: Option<f64>,
}

async fn players(State(s): State<Shared>, Query(q): Query<PlayersQuery>) -> ApiResult {
    let role = match q.role.as_deref() {
        Some(r) => Some(parse_role(r).ok_or_else(|| ApiError::BadRequest(format!("unknown role {r}")))?),
        None => None,
    };
    let rows: Vec<_> = s
        .season
        .roster
        .iter()
        .filter(|r| role.is_none_or(|x| x == r.role) && q.min_minutes.is_none_or(|m| r.minutes_total >= m))
        .collect();
    Ok(to_json(&rows))
}

#[derive(Debug, Deserialize)]
struct RoleQuery {
    role: Option<String>,
}

/// Without a role, the player's qualified role with the most minutes.
async fn profile(State(s): State<Shared>, UrlPath(id): UrlPath<String>, Query(q): Query<RoleQuery>) -> ApiResult {
    let player = PlayerId::new(&id);
    let role = match q.role.as_deref() {
        Some(r) => Some(parse_role(r).ok_or_else(|| ApiError::NotFound(format!("unknown role {r}")))?),
        None => None,
    };
    let found: Option<&PlayerProfile> = match role {
        Some(r) => s.season.profile(&player, r),
        None => s
            .season
            .profiles
            .iter()
            .filter(|p| p.player_id == player)
            .max_by(|a, b| a.minutes_total.total_cmp(&b.minutes_total).then(b.role.cmp(&a.role))),
    };
    match found {
        Some(p) => Ok(to_json(p)),
        None if s.season.roster.iter().any(|r| r.player_id == player && role.is_none_or(|x| x == r.role)) => {
            Err(ApiError::NotFound(format!(
                "player {id} has no qualifying profile (minimum {} minutes in a role)",
                s.config.aggregation.min_role_minutes
            )))
        }
        None => Err(ApiError::NotFound(format!("unknown player {id}"))),
    }
}

async fn team_style(State(s): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult {
    s.season
        .team(&TeamId::new(&id))
        .map(to_json)
        .ok_or_else(|| ApiError::NotFound(format!("unknown team {id}")))
}

async fn role_percentiles(State(s): State<Shared>, UrlPath(role): UrlPath<String>) -> ApiResult {
    let r = parse_role(&role).ok_or_else(|| ApiError::NotFound(format!("unknown role {role}")))?;
    let players: Vec<Value> = s
        .season
        .profiles
        .iter()
        .filter(|p| p.role == r)
        .map(|p| {
            json!({
                "player_id": p.player_id,
                "minutes_total": p.minutes_total,
                "movement_per30": p.in_possession.movement_per30,
                "movement_percentile": p.in_possession.movement_percentile,
            })
        })
        .collect();
    Ok(Json(json!({ "role": r, "players": players })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareRequest {
    a: Vec<LineupEntry>,
    b: Vec<LineupEntry>,
}

/// The body is parsed here rather than by an extractor so that every
/// malformed body, whatever the content type, is a 400.
async fn lineup_compare(State(s): State<Shared>, body: Bytes) -> ApiResult {
    let req: CompareRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("malformed request body: {e}")))?;
    match compare_lineups(&req.a, &req.b, &s.season.profiles) {
        Ok(cmp) => Ok(to_json(&cmp)),
        Err(e @ LineupError::WrongSize { .. }) => Err(ApiError::InvalidLineup {
            message: e.to_string(),
            gaps: Vec::new(),
        }),
        Err(e @ LineupError::Gaps { .. }) => {
            let message = e.to_string();
            let LineupError::Gaps { gaps } = e else { unreachable!() };
            Err(ApiError::InvalidLineup { message, gaps })
        }
    }
}
