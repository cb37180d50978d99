//! `POST /score` and `GET /healthz` over a shared [`RewardEngine`].
//!
//! Scoring runs on the blocking pool, at most `max_concurrent_groups` at a
//! time; excess requests get 503 immediately rather than queueing.

use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use tactic_reward::reward::{ErrorBody, RewardEngine};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{RwLock, Semaphore};

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen: String,
    pub max_concurrent_groups: usize,
    pub body_limit_bytes: usize,
    pub probe_interval: Duration,
    pub probe_timeout: Duration,
    /// Delay before the first probe; `/healthz` reports pending until then.
    pub probe_initial_delay: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            max_concurrent_groups: 16,
            body_limit_bytes: 2 * 1024 * 1024,
            probe_interval: Duration::from_secs(10),
            probe_timeout: Duration::from_secs(2),
            probe_initial_delay: Duration::ZERO,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid service config: {0}")]
    Config(String),
    #[error("could not bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(#[from] std::io::Error),
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.max_concurrent_groups == 0 {
            return Err(ServiceError::Config(
                "max concurrent groups must be >= 1".into(),
            ));
        }
        if self.body_limit_bytes == 0 {
            return Err(ServiceError::Config("body limit must be > 0".into()));
        }
        if self.probe_interval.is_zero() || self.probe_timeout.is_zero() {
            return Err(ServiceError::Config(
                "probe interval and timeout must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// A downstream endpoint whose reachability `/healthz` reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeTarget {
    /// Key in the health body, e.g. `tagger` or `quality`.
    pub name: String,
    pub url: String,
}

impl ProbeTarget {
    pub fn new(name: impl Into<String>, url: impl Into<String>) -> Self {
        ProbeTarget {
            name: name.into(),
            url: url.into(),
        }
    }
}

/// `host:port` of an http(s) URL.
fn authority(url: &str) -> Option<String> {
    let (default_port, rest) = if let Some(r) = url.strip_prefix("http://") {
        (80, r)
    } else {
        (443, url.strip_prefix("https://")?)
    };
    let host = rest.split(['/', '?', '#']).next()?;
    let host = host.rsplit('@').next()?;
    if host.is_empty() {
        return None;
    }
    let has_port = match host.rfind(':') {
        Some(i) => !host[i..].contains(']'),
        None => false,
    };
    Some(if has_port {
        host.to_string()
    } else {
        format!("{host}:{default_port}")
    })
}

async fn reachable(url: &str, timeout: Duration) -> bool {
    let Some(addr) = authority(url) else {
        return false;
    };
    matches!(
        tokio::time::timeout(timeout, tokio::net::TcpStream::connect(addr)).await,
        Ok(Ok(_))
    )
}

type ProbeCache = Arc<RwLock<Option<Vec<(String, bool)>>>>;

#[derive(Clone)]
struct AppState {
    engine: Arc<RewardEngine>,
    limit: Arc<Semaphore>,
    probes: ProbeCache,
}

#[derive(Serialize)]
struct Overloaded {
    error: &'static str,
    reason: String,
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn handle_score(State(state): State<AppState>, body: Bytes) -> Response {
    let Ok(permit) = state.limit.clone().try_acquire_owned() else {
        let body = Overloaded {
            error: "overloaded",
            reason: "concurrent group limit reached".into(),
        };
        return (StatusCode::SERVICE_UNAVAILABLE, Json(body)).into_response();
    };
    let engine = state.engine.clone();
    let result = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        engine.score_json(&body)
    })
    .await;
    match result {
        Ok(Ok(json)) => json_response(StatusCode::OK, json),
        Ok(Err(failure)) => {
            let status = if failure.is_client_error() {
                StatusCode::BAD_REQUEST
            } else {
                StatusCode::BAD_GATEWAY
            };
            tracing::warn!(%status, error = %failure, "score request failed");
            (status, Json(failure.to_body())).into_response()
        }
        Err(e) => {
            tracing::error!(error = %e, "scoring task panicked");
            let body = ErrorBody {
                error: "internal".into(),
                reason: "scoring task failed".into(),
                stage: None,
                candidate: None,
            };
            (StatusCode::INTERNAL_SERVER_ERROR, Json(body)).into_response()
        }
    }
}

async fn handle_health(State(state): State<AppState>) -> Json<Value> {
    let config = serde_json::to_value(state.engine.config()).expect("config serializes");
    let snapshot = state.probes.read().await.clone();
    let mut body = serde_json::Map::new();
    match snapshot {
        None => {
            body.insert("status".into(), json!("ok"));
            body.insert("probes".into(), json!("pending"));
        }
        Some(results) => {
            let all_up = results.iter().all(|(_, up)| *up);
            body.insert(
                "status".into(),
                json!(if all_up { "ok" } else { "degraded" }),
            );
            for (name, up) in results {
                body.insert(name, json!(if up { "reachable" } else { "unreachable" }));
            }
        }
    }
    body.insert("config".into(), config);
    Json(Value::Object(body))
}

/// A configured service, ready to be served on a listener.
pub struct Service {
    config: ServiceConfig,
    engine: Arc<RewardEngine>,
    targets: Vec<ProbeTarget>,
}

impl Service {
    pub fn new(
        config: ServiceConfig,
        engine: RewardEngine,
        targets: Vec<ProbeTarget>,
    ) -> Result<Self, ServiceError> {
        config.validate()?;
        Ok(Service {
            config,
            engine: Arc::new(engine),
            targets,
        })
    }

    pub async fn bind(&self) -> Result<TcpListener, ServiceError> {
        TcpListener::bind(&self.config.listen)
            .await
            .map_err(|source| ServiceError::Bind {
                addr: self.config.listen.clone(),
                source,
            })
    }

    /// Serve until `shutdown` resolves, then drain in-flight requests.
    pub async fn serve<F>(self, listener: TcpListener, shutdown: F) -> Result<(), ServiceError>
    where
        F: Future<Output = ()> + Send + 'static,
    {
        let probes: ProbeCache = Arc::new(RwLock::new(None));
        let prober = tokio::spawn(probe_loop(
            self.targets.clone(),
            probes.clone(),
            self.config.probe_interval,
            self.config.probe_timeout,
            self.config.probe_initial_delay,
        ));
        let state = AppState {
            engine: self.engine.clone(),
            limit: Arc::new(Semaphore::new(self.config.max_concurrent_groups)),
            probes,
        };
        let app = Router::new()
            .route("/score", post(handle_score))
            .route("/healthz", get(handle_health))
            .layer(DefaultBodyLimit::max(self.config.body_limit_bytes))
            .with_state(state);
        if let Ok(addr) = listener.local_addr() {
            tracing::info!(%addr, "listening");
        }
        let result = axum::serve(listener, app)
            .with_graceful_shutdown(shutdown)
            .await;
        prober.abort();
        tracing::info!("shut down");
        result.map_err(ServiceError::from)
    }

    /// Bind, then serve until ctrl-c or SIGTERM.
    pub async fn run(self) -> Result<(), ServiceError> {
        let listener = self.bind().await?;
        self.serve(listener, shutdown_signal()).await
    }
}

async fn probe_loop(
    targets: Vec<ProbeTarget>,
    cache: ProbeCache,
    interval: Duration,
    timeout: Duration,
    initial_delay: Duration,
) {
    tokio::time::sleep(initial_delay).await;
    loop {
        let mut results = Vec::with_capacity(targets.len());
        for t in &targets {
            let up = reachable(&t.url, timeout).await;
            if !up {
                tracing::debug!(target = %t.name, url = %t.url, "probe failed");
            }
            results.push((t.name.clone(), up));
        }
        *cache.write().await = Some(results);
        tokio::time::sleep(interval).await;
    }
}

/// Resolves on ctrl-c or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn authority_parsing() {
        assert_eq!(
            authority("http://localhost:9000/score").as_deref(),
            Some("localhost:9000")
        );
        assert_eq!(
            authority("https://example.org/x").as_deref(),
            Some("example.org:443")
        );
        assert_eq!(authority("http://h").as_deref(), Some("h:80"));
        assert_eq!(authority("http://[::1]:81/").as_deref(), Some("[::1]:81"));
        assert_eq!(authority("http://[::1]/").as_deref(), Some("[::1]:80"));
        assert_eq!(authority("ftp://h"), None);
        assert_eq!(authority("http:///x"), None);
    }

    #[test]
    fn config_validation() {
        assert!(ServiceConfig::default().validate().is_ok());
        let c = ServiceConfig {
            max_concurrent_groups: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
