use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use aetheria_core::clock::FixedClock;
use aetheria_core::model::{AgentRole, Tier};
use aetheria_core::provider::{standard_routes, CallLog, Gateway, OpenAiCompatible, RetryPolicy, TierModels};
use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

#[derive(Clone, Default)]
struct Mock {
    fail_first: usize,
    hits: Arc<AtomicUsize>,
    bodies: Arc<Mutex<Vec<(Option<String>, Value)>>>,
}

async fn chat(State(mock): State<Mock>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let n = mock.hits.fetch_add(1, Ordering::SeqCst);
    let auth = headers.get("authorization").and_then(|v| v.to_str().ok()).map(String::from);
    mock.bodies.lock().unwrap().push((auth, body.clone()));
    if n < mock.fail_first {
        return (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": "overloaded"})));
    }
    let reply = format!("echo:{}", body["model"].as_str().unwrap_or_default());
    (
        StatusCode::OK,
        Json(json!({
            "choices": [{"message": {"role": "assistant", "content": reply}}],
            "usage": {"prompt_tokens": 120, "completion_tokens": 30}
        })),
    )
}

async fn serve(mock: Mock) -> String {
    let app = Router::new().route("/v1/chat/completions", post(chat)).with_state(mock);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}/v1")
}

fn gateway(endpoint: &str, retry: RetryPolicy, key: Option<&str>) -> Gateway {
    let client = OpenAiCompatible::new(Duration::from_secs(5), key.map(String::from), Some("vision-key".into())).unwrap();
    let models = TierModels { debater: "small".into(), arbiter: "large".into(), vision: "eye".into() };
    Gateway::new(Arc::new(client), standard_routes(endpoint, &models, 256), retry, Arc::new(FixedClock::epoch())).unwrap()
}

#[tokio::test]
async fn request_shape_and_token_accounting() {
    let mock = Mock::default();
    let endpoint = serve(mock.clone()).await;
    let gw = gateway(&endpoint, RetryPolicy::none(), Some("secret"));
    let mut log = CallLog::new();

    let ex = gw.complete(AgentRole::StrictDebater, "assess this", &mut log).await.unwrap();
    assert_eq!(ex.response, "echo:small");
    gw.complete(AgentRole::Arbiter, "judge", &mut log).await.unwrap();

    assert_eq!(log.ledger.calls(Tier::DebaterTier), 1);
    assert_eq!(log.ledger.calls(Tier::ArbiterTier), 1);
    assert_eq!((log.ledger.tokens_in, log.ledger.tokens_out), (240, 60));

    let bodies = mock.bodies.lock().unwrap();
    let (auth, body) = &bodies[0];
    assert_eq!(auth.as_deref(), Some("Bearer secret"));
    assert_eq!(body["model"], "small");
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "assess this");
    assert_eq!(body["max_tokens"], 256);
    assert!((body["temperature"].as_f64().unwrap() - 0.2).abs() < 1e-9);
    assert_eq!(bodies[1].1["model"], "large");
    assert_eq!(bodies[1].1["temperature"].as_f64(), Some(0.0));
}

#[tokio::test]
async fn vision_requests_carry_the_image_and_vision_key() {
    let mock = Mock::default();
    let endpoint = serve(mock.clone()).await;
    let gw = gateway(&endpoint, RetryPolicy::none(), Some("secret"));
    let mut log = CallLog::new();
    let desc = gw.describe_image("https://example.test/cat.png", &mut log).await.unwrap();
    assert_eq!(desc, "echo:eye");
    assert_eq!(log.ledger.calls(Tier::VisionTier), 1);
    let bodies = mock.bodies.lock().unwrap();
    let (auth, body) = &bodies[0];
    assert_eq!(auth.as_deref(), Some("Bearer vision-key"));
    let parts = body["messages"][0]["content"].as_array().unwrap();
    assert_eq!(parts[0]["type"], "text");
    assert_eq!(parts[1]["image_url"]["url"], "https://example.test/cat.png");
}

#[tokio::test]
async fn server_errors_are_retried_and_only_success_is_billed() {
    let mock = Mock { fail_first: 2, ..Default::default() };
    let endpoint = serve(mock.clone()).await;
    let gw = gateway(&endpoint, RetryPolicy { max_attempts: 3, initial_backoff_ms: 1 }, None);
    let mut log = CallLog::new();
    let ex = gw.complete(AgentRole::Supporter, "p", &mut log).await.unwrap();
    assert_eq!(ex.attempt, 3);
    assert_eq!(mock.hits.load(Ordering::SeqCst), 3);
    assert_eq!(log.exchanges.len(), 3);
    assert!(log.exchanges[..2].iter().all(|e| e.error.is_some() && e.tokens_in == 0));
    assert_eq!(log.ledger.calls(Tier::DebaterTier), 1);
    assert_eq!(log.ledger.tokens_in, 120);
    assert!(mock.bodies.lock().unwrap()[0].0.is_none());
}

#[tokio::test]
async fn retries_are_bounded() {
    let mock = Mock { fail_first: 10, ..Default::default() };
    let endpoint = serve(mock.clone()).await;
    let gw = gateway(&endpoint, RetryPolicy { max_attempts: 3, initial_backoff_ms: 1 }, None);
    let mut log = CallLog::new();
    assert!(gw.complete(AgentRole::Arbiter, "p", &mut log).await.is_err());
    assert_eq!(mock.hits.load(Ordering::SeqCst), 3);
    assert_eq!(log.ledger.total_calls(), 0);
}

#[tokio::test]
async fn unreachable_endpoint_is_a_transport_error() {
    let gw = gateway("http://127.0.0.1:9/v1", RetryPolicy::none(), None);
    let mut log = CallLog::new();
    let err = gw.complete(AgentRole::Arbiter, "p", &mut log).await.unwrap_err();
    assert!(err.to_string().contains("arbiter"), "{err}");
}
