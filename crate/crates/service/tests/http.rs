use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use metasens_core::sens::confounded_proportion;
use metasens_core::{MetaFit, Threshold};
use metasens_service::router;

async fn call(method: &str, uri: &str, body: &str) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = router(None).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

fn soy() -> Value {
    json!({"pooled_rr": 0.82, "se_log_rr": 0.088, "tau2": 0.10, "se_tau2": 0.050, "k": 20})
}

fn soy_fit() -> MetaFit {
    MetaFit::from_summary(0.82f64.ln(), 0.088, 0.10, 0.050, Some(20)).unwrap()
}

#[tokio::test]
async fn health_reports_version() {
    let (status, body) = call("GET", "/api/health", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["version"], env!("CARGO_PKG_VERSION"));
}

#[tokio::test]
async fn analyze_soy_summary() {
    let req = json!({"summary": soy(), "q_rr": 0.90, "r": 0.1});
    let (status, body) = call("POST", "/api/analyze", &req.to_string()).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let t = body["result"]["t"]["estimate"].as_f64().unwrap();
    let g = body["result"]["g"]["estimate"].as_f64().unwrap();
    assert!((t - 1.63).abs() < 0.05, "T = {t}");
    assert!((g - 2.64).abs() < 0.07, "G = {g}");
    assert_eq!(body["input"], req_with_defaults(&req));
    assert_eq!(body["result"]["direction"], "preventive");
    assert_eq!(body["validity"]["max_var_log_bias"], 0.10);
    assert!(body["warnings"].is_array());
}

fn req_with_defaults(req: &Value) -> Value {
    let mut v = req.clone();
    v["bias"] = json!({"mean_bias_factor": 1.0, "var_log_bias": 0.0});
    v["q_opposite_rr"] = Value::Null;
    v["direction"] = Value::Null;
    v
}

#[tokio::test]
async fn curve_starts_at_confounded_proportion() {
    let req = json!({"summary": soy(), "q_rr": 0.90, "var_log_bias": 0.0, "from": 1.0, "to": 3.0, "points": 21});
    let (status, body) = call("POST", "/api/curve", &req.to_string()).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let points = body["points"].as_array().unwrap();
    assert_eq!(points.len(), 21);
    let expected = confounded_proportion(&soy_fit(), Threshold::from_rr(0.90), None).unwrap();
    assert_eq!(points[0]["p_hat"].as_f64().unwrap(), expected.estimate);
    // More bias toward the null leaves fewer preventive effects below q.
    let last = points[20]["p_hat"].as_f64().unwrap();
    assert!(last < expected.estimate);
}

#[tokio::test]
async fn table_has_blank_cells() {
    let req = json!({"summary": soy()});
    let (status, body) = call("POST", "/api/table", &req.to_string()).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let cells = body["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 15);
    let blank = cells
        .iter()
        .filter(|c| c["t"]["no_bias_required"] == true)
        .count();
    assert!(blank >= 3);
}

#[tokio::test]
async fn malformed_json_is_400() {
    let (status, body) = call("POST", "/api/analyze", "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["kind"], "schema");
}

#[tokio::test]
async fn schema_errors_name_the_field() {
    let mut s = soy();
    s["tau2"] = json!("lots");
    let (status, body) = call("POST", "/api/analyze", &json!({"summary": s}).to_string()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["path"], "summary.tau2");

    let (status, body) = call(
        "POST",
        "/api/table",
        &json!({"summary": soy(), "extra": 1}).to_string(),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["message"].as_str().unwrap().contains("extra"));
}

#[tokio::test]
async fn domain_errors_are_422_with_core_message() {
    let req = json!({"summary": soy(), "bias": {"mean_bias_factor": 1.2, "var_log_bias": 0.2}});
    let (status, body) = call("POST", "/api/analyze", &req.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let expected = metasens_core::Error::InsufficientHeterogeneity {
        tau2: 0.10,
        var_log_bias: 0.2,
    }
    .to_string();
    assert_eq!(body["message"], expected);
}

#[tokio::test]
async fn responses_do_not_depend_on_request_order() {
    let a = json!({"summary": soy(), "q_rr": 0.8, "r": 0.2}).to_string();
    let b = json!({"summary": soy(), "bias": {"mean_bias_factor": 1.3, "var_log_bias": 0.02}})
        .to_string();
    let first = call("POST", "/api/analyze", &a).await;
    call("POST", "/api/analyze", &b).await;
    let again = call("POST", "/api/analyze", &a).await;
    assert_eq!(first, again);
}
