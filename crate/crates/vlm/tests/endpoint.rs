//! Client behavior against a local axum stub speaking the chat-completions API.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use embviz_core::data::TaskKind;
use embviz_vlm::{EndpointConfig, PromptBundle, PromptMode, VlmClient, VlmError};
use serde_json::{json, Value};

/// What the stub does on the `n`-th request (0-based).
type Script = Arc<dyn Fn(usize) -> Reply + Send + Sync>;

#[derive(Clone)]
enum Reply {
    Ok(&'static str),
    Status(u16),
    Raw(&'static str),
    Slow(Duration),
}

#[derive(Clone)]
struct Stub {
    script: Script,
    calls: Arc<AtomicUsize>,
    in_flight: Arc<AtomicUsize>,
    max_in_flight: Arc<AtomicUsize>,
    last: Arc<Mutex<Option<(HeaderMap, Value)>>>,
}

fn completion(text: &str) -> Value {
    json!({
        "id": "cmpl-1",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 3, "total_tokens": 13},
    })
}

async fn handler(State(s): State<Stub>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    let n = s.calls.fetch_add(1, Ordering::SeqCst);
    *s.last.lock().unwrap() = Some((headers, body));
    let now = s.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    s.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let reply = (s.script)(n);
    let resp = match reply {
        Reply::Ok(text) => Json(completion(text)).into_response(),
        Reply::Status(code) => (StatusCode::from_u16(code).unwrap(), "nope").into_response(),
        Reply::Raw(body) => body.into_response(),
        Reply::Slow(d) => {
            tokio::time::sleep(d).await;
            Json(completion("FINAL ANSWER: A")).into_response()
        }
    };
    s.in_flight.fetch_sub(1, Ordering::SeqCst);
    resp
}

async fn spawn(script: impl Fn(usize) -> Reply + Send + Sync + 'static) -> (String, Stub) {
    let stub = Stub {
        script: Arc::new(script),
        calls: Arc::default(),
        in_flight: Arc::default(),
        max_in_flight: Arc::default(),
        last: Arc::default(),
    };
    let app = Router::new()
        .route("/v1/chat/completions", post(handler))
        .with_state(stub.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}"), stub)
}

fn config(base_url: String) -> EndpointConfig {
    EndpointConfig {
        base_url,
        model: "stub-model".into(),
        token_env: None,
        timeout_secs: 5.0,
        max_retries: 3,
        backoff_base_secs: 0.01,
        ..Default::default()
    }
}

fn bundle() -> PromptBundle {
    PromptBundle {
        system_text: "system".into(),
        user_text: "Which class? FINAL ANSWER: <class>".into(),
        image: vec![0x89, b'P', b'N', b'G', 1, 2, 3],
        classmap: vec![("A".into(), "blue".into())],
        colormap: Vec::new(),
        mode: PromptMode::TsneKnn,
        task_kind: TaskKind::Classification,
    }
}

#[tokio::test]
async fn round_trip() {
    let (url, stub) = spawn(|_| Reply::Ok("FINAL ANSWER: A")).await;
    let r = VlmClient::new(config(url))
        .unwrap()
        .query(&bundle())
        .await
        .unwrap();
    assert_eq!(r.text, "FINAL ANSWER: A");
    assert_eq!(r.retries, 0);
    assert_eq!(r.request_id.as_deref(), Some("cmpl-1"));
    assert_eq!(r.usage.unwrap().total_tokens, Some(13));
    assert_eq!(stub.calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn request_shape_and_auth_header() {
    let var = "EMBVIZ_TEST_TOKEN_REQUEST_SHAPE";
    std::env::set_var(var, "sekrit");
    let (url, stub) = spawn(|_| Reply::Ok("ok")).await;
    let cfg = EndpointConfig {
        token_env: Some(var.into()),
        max_tokens: Some(64),
        ..config(url)
    };
    VlmClient::new(cfg).unwrap().query(&bundle()).await.unwrap();
    let (headers, body) = stub.last.lock().unwrap().clone().unwrap();
    assert_eq!(headers["authorization"], "Bearer sekrit");
    assert_eq!(body["model"], "stub-model");
    assert_eq!(body["max_tokens"], 64);
    assert_eq!(body["temperature"], 0.0);
    let msgs = body["messages"].as_array().unwrap();
    assert_eq!(msgs[0]["role"], "system");
    let parts = msgs[1]["content"].as_array().unwrap();
    assert_eq!(parts[0]["text"], "Which class? FINAL ANSWER: <class>");
    let url = parts[1]["image_url"]["url"].as_str().unwrap();
    assert_eq!(url, "data:image/png;base64,iVBORwECAw==");
}

#[tokio::test]
async fn no_auth_header_without_token() {
    let (url, stub) = spawn(|_| Reply::Ok("ok")).await;
    let cfg = EndpointConfig {
        token_env: Some("EMBVIZ_TEST_TOKEN_NEVER_SET".into()),
        ..config(url)
    };
    VlmClient::new(cfg).unwrap().query(&bundle()).await.unwrap();
    let (headers, _) = stub.last.lock().unwrap().clone().unwrap();
    assert!(headers.get("authorization").is_none());
}

#[tokio::test]
async fn rate_limit_then_success_counts_retries() {
    let (url, stub) = spawn(|n| {
        if n < 2 {
            Reply::Status(429)
        } else {
            Reply::Ok("FINAL ANSWER: A")
        }
    })
    .await;
    let r = VlmClient::new(config(url))
        .unwrap()
        .query(&bundle())
        .await
        .unwrap();
    assert_eq!(r.retries, 2);
    assert_eq!(stub.calls.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn server_errors_exhaust_retries() {
    let (url, stub) = spawn(|_| Reply::Status(500)).await;
    let e = VlmClient::new(config(url))
        .unwrap()
        .query(&bundle())
        .await
        .unwrap_err();
    assert!(
        matches!(e, VlmError::RetriesExhausted { attempts: 4, .. }),
        "{e}"
    );
    assert!(e.is_endpoint_failure());
    assert_eq!(stub.calls.load(Ordering::SeqCst), 4);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let (url, stub) = spawn(|_| Reply::Status(400)).await;
    let e = VlmClient::new(config(url))
        .unwrap()
        .query(&bundle())
        .await
        .unwrap_err();
    assert!(matches!(e, VlmError::Http { status: 400, .. }), "{e}");
    assert_eq!(stub.calls.load(Ordering::SeqCst), 1);

    let (url, stub) = spawn(|_| Reply::Status(401)).await;
    let e = VlmClient::new(config(url))
        .unwrap()
        .query(&bundle())
        .await
        .unwrap_err();
    assert!(matches!(e, VlmError::Auth { status: 401 }), "{e}");
    assert_eq!(stub.calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn malformed_body_is_reported() {
    let (url, _) = spawn(|_| Reply::Raw(r#"{"choices": []}"#)).await;
    let e = VlmClient::new(config(url))
        .unwrap()
        .query(&bundle())
        .await
        .unwrap_err();
    assert!(matches!(e, VlmError::Malformed(_)), "{e}");
}

#[tokio::test]
async fn timeouts_are_retried_then_fail() {
    let (url, stub) = spawn(|_| Reply::Slow(Duration::from_secs(3))).await;
    let cfg = EndpointConfig {
        timeout_secs: 0.2,
        max_retries: 1,
        ..config(url)
    };
    let e = VlmClient::new(cfg)
        .unwrap()
        .query(&bundle())
        .await
        .unwrap_err();
    match e {
        VlmError::RetriesExhausted { attempts, last } => {
            assert_eq!(attempts, 2);
            assert!(last.contains("timed out"), "{last}");
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(stub.calls.load(Ordering::SeqCst), 2);
}

#[tokio::test]
async fn oversized_image_is_rejected_before_sending() {
    let (url, stub) = spawn(|_| Reply::Ok("ok")).await;
    let cfg = EndpointConfig {
        max_image_bytes: 4,
        ..config(url)
    };
    let e = VlmClient::new(cfg)
        .unwrap()
        .query(&bundle())
        .await
        .unwrap_err();
    assert!(
        matches!(e, VlmError::ImageTooLarge { bytes: 7, max: 4 }),
        "{e}"
    );
    assert!(!e.is_endpoint_failure());
    assert_eq!(stub.calls.load(Ordering::SeqCst), 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrency_is_bounded() {
    let (url, stub) = spawn(|_| Reply::Slow(Duration::from_millis(100))).await;
    let cfg = EndpointConfig {
        max_concurrency: 3,
        ..config(url)
    };
    let client = VlmClient::new(cfg).unwrap();
    let b = bundle();
    let tasks: Vec<_> = (0..12)
        .map(|_| {
            let (c, b) = (client.clone(), b.clone());
            tokio::spawn(async move { c.query(&b).await })
        })
        .collect();
    for t in tasks {
        t.await.unwrap().unwrap();
    }
    let max = stub.max_in_flight.load(Ordering::SeqCst);
    assert!(max <= 3, "saw {max} concurrent requests");
    assert!(max >= 2, "requests never overlapped");
}
