mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::OnceLock;

use lionex_cli::commands::KindArg;

fn lionex(ws: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lionex"))
        .env_remove("LIONEX_WORKSPACE")
        .arg("--workspace")
        .arg(ws)
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn text_ws() -> &'static Path {
    static WS: OnceLock<PathBuf> = OnceLock::new();
    WS.get_or_init(|| common::trained("cli-text", KindArg::Text).dir)
}

fn series_ws() -> &'static Path {
    static WS: OnceLock<PathBuf> = OnceLock::new();
    WS.get_or_init(|| common::trained("cli-series", KindArg::Timeseries).dir)
}

#[test]
fn missing_manifest_is_a_validation_error() {
    let dir = common::scratch("cli-empty");
    let out = lionex(&dir, &["train-predictor"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("dataset manifest not found"), "{}", stderr(&out));
}

#[test]
fn decoder_needs_a_predictor() {
    let dir = common::scratch("cli-order");
    assert_eq!(code(&lionex(&dir, &["generate-data", "--kind", "toy"])), 0);
    let out = lionex(&dir, &["train-decoder"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("predictor model not found"), "{}", stderr(&out));
}

#[test]
fn workspace_from_environment() {
    let dir = common::scratch("cli-env");
    let out = Command::new(env!("CARGO_BIN_EXE_lionex"))
        .env("LIONEX_WORKSPACE", &dir)
        .args(["generate-data", "--kind", "toy", "--samples", "40"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.join("manifest.json").is_file());
}

#[test]
fn environment_overrides_flag() {
    let dir = common::scratch("cli-env-wins");
    let ignored = common::scratch("cli-env-ignored");
    let out = Command::new(env!("CARGO_BIN_EXE_lionex"))
        .env("LIONEX_WORKSPACE", &dir)
        .arg("--workspace")
        .arg(&ignored)
        .args(["generate-data", "--kind", "toy", "--samples", "40"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.join("manifest.json").is_file());
    assert!(!ignored.join("manifest.json").exists());
}

#[test]
fn lime_is_rejected_on_toy_data() {
    let dir = common::scratch("cli-toy-lime");
    assert_eq!(code(&lionex(&dir, &["generate-data", "--kind", "toy"])), 0);
    assert_eq!(code(&lionex(&dir, &["train-predictor", "--epochs", "5"])), 0);
    let out = lionex(&dir, &["explain", "--instance", "val-0", "--explainer", "lime"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn unknown_instance() {
    let out = lionex(text_ws(), &["explain", "--instance", "val-5000"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("val-5000"));
}

#[test]
fn explain_is_byte_identical_across_runs() {
    let ws = text_ws();
    let run = |dir: &str| {
        let out_dir = ws.join(dir);
        let out = lionex(
            ws,
            &["explain", "--instance", "val-2", "--out", out_dir.to_str().unwrap()],
        );
        assert!(out.status.success(), "{}", stderr(&out));
        (
            std::fs::read(out_dir.join("val-2-lionets.json")).unwrap(),
            std::fs::read(out_dir.join("val-2-lionets-plot.csv")).unwrap(),
        )
    };
    let first = run("explain-a");
    assert_eq!(first, run("explain-b"));
    let json: serde_json::Value = serde_json::from_slice(&first.0).unwrap();
    assert_eq!(json["explainer"], "lionets");
    assert!(json["fidelity_mae"].is_number());
    let plot = String::from_utf8(first.1).unwrap();
    assert!(plot.starts_with("feature,importance\n"));
    assert_eq!(plot.lines().count() - 1, json["importances"].as_array().unwrap().len());
}

#[test]
fn gxi_file_has_no_fidelity() {
    let ws = text_ws();
    let out_dir = ws.join("explain-gxi");
    let out = lionex(
        ws,
        &[
            "explain",
            "--instance",
            "val-0",
            "--explainer",
            "gxi",
            "--out",
            out_dir.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("val-0-gxi.json")).unwrap()).unwrap();
    assert!(json.get("fidelity_mae").is_none());
    assert!(json.get("alpha").is_none());
}

#[test]
fn windowed_explain_writes_sensor_table() {
    let ws = series_ws();
    let out_dir = ws.join("explain-series");
    let out = lionex(
        ws,
        &["explain", "--instance", "val-0", "--out", out_dir.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(out_dir.join("val-0-lionets-sensors.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "sensor,mean,std,min,max");
    assert_eq!(lines.len(), 1 + 5);
    assert!(lines[1].starts_with("sensor_1,"));
}

#[test]
fn evaluate_single_explainer() {
    let ws = series_ws();
    let out_dir = ws.join("eval-gxi");
    let out = lionex(
        ws,
        &[
            "evaluate",
            "--explainers",
            "gxi",
            "--limit",
            "5",
            "--out",
            out_dir.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(out_dir.join("metrics-val.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("gxi,val,5,0,,,"), "{}", lines[1]);
    assert!(out_dir.join("metrics-val.md").is_file());
}

#[test]
fn busy_port_exits_with_three() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let out = lionex(text_ws(), &["serve", "--port", &port]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("already in use"));
}

#[test]
fn serve_answers_over_http() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lionex"))
        .env_remove("LIONEX_WORKSPACE")
        .arg("--workspace")
        .arg(text_ws())
        .args(["serve", "--port", "0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap().to_string();

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(
        stream,
        "GET /api/model-info HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();

    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"kind\":\"text\""));
}
