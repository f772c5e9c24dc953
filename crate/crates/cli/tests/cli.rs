use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};
use tempfile::TempDir;

fn primo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_primo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout))
    })
}

fn generate(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["generate", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = primo(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let flags = ["--seed", "7", "--depth", "3", "--defects", "4"];
    let a = generate(dir.path(), "a.json", &flags);
    let b = generate(dir.path(), "b.json", &flags);
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["primo_schema"], 1);
    assert_eq!(v["palette"].as_array().unwrap().len(), 8);
}

#[test]
fn generate_error_codes() {
    assert_eq!(code(&primo(&["generate", "--defects", "9", "--depth", "1"])), 1);
    assert_eq!(code(&primo(&["generate", "--style", "sideways"])), 2);
    assert_eq!(code(&primo(&["generate", "--depth", "0"])), 2);
    assert_eq!(code(&primo(&["teleport"])), 2);
}

#[test]
fn agent_action_counts_and_replay_closure() {
    let dir = TempDir::new().unwrap();
    for (style, aims) in [("structured", 3), ("unstructured", 1)] {
        let scene = generate(dir.path(), &format!("{style}.json"), &["--seed", "11", "--style", style]);
        let log = dir.path().join(format!("{style}.jsonl"));
        let o = primo(&["agent", "--scene", p(&scene), "--log-out", p(&log)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let report = stdout_json(&o);
        assert_eq!(report["aims"], aims);
        assert_eq!(report["confirms"], 3);
        assert_eq!(report["completed"], true);

        let r = primo(&["replay", "--scene", p(&scene), "--log", p(&log)]);
        assert_eq!(code(&r), 0);
        let replayed = stdout_json(&r);
        assert_eq!(replayed["completed"], true);
        assert_eq!(replayed["total_ms"], report["total_ms"]);

        let again = primo(&["agent", "--scene", p(&scene), "--log-out", p(&dir.path().join("again.jsonl"))]);
        assert_eq!(again.stdout, o.stdout);
        assert_eq!(std::fs::read(&log).unwrap(), std::fs::read(dir.path().join("again.jsonl")).unwrap());
    }
}

/// A depth-1 scene and a hand-built log whose gate opens at 1000 ms and
/// whose reveal lands at 5000 ms.
fn constructed(dir: &Path, pre_gate_confirm: bool) -> (PathBuf, PathBuf) {
    let scene = generate(dir, "d1.json", &["--seed", "4", "--depth", "1"]);
    let doc: Value = serde_json::from_slice(&std::fs::read(&scene).unwrap()).unwrap();
    let target = doc["defects"]
        .as_array()
        .unwrap()
        .iter()
        .find(|d| d["id"] == doc["target"])
        .unwrap()
        .clone();
    let center: Vec<f64> = serde_json::from_value(target["center"].clone()).unwrap();
    let octant = target["cell_path"][0].as_u64().unwrap();
    let child: Vec<f64> = (0..3)
        .map(|a| if octant >> a & 1 == 1 { 0.75 } else { 0.25 })
        .collect();
    let origin: Vec<f64> = child.iter().map(|c| 0.5 + (c - 0.5) * 8.0).collect();
    let dir_v: Vec<f64> = child.iter().zip(&origin).map(|(c, o)| c - o).collect();
    let mut lines = vec![json!({"t": 0, "e": "start", "data": {}})];
    if pre_gate_confirm {
        lines.push(json!({"t": 200, "e": "aim", "data": {"origin": origin, "dir": dir_v}}));
        lines.push(json!({"t": 300, "e": "confirm", "data": {}}));
    }
    lines.extend([
        json!({"t": 1000, "e": "clip", "data": {"h": center[1]}}),
        json!({"t": 2000, "e": "aim", "data": {"origin": origin, "dir": dir_v}}),
        json!({"t": 3000, "e": "confirm", "data": {}}),
        json!({"t": 5000, "e": "tick", "data": {"dt_ms": 500.0}}),
    ]);
    let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
    let log = dir.join(if pre_gate_confirm { "pre.jsonl" } else { "plain.jsonl" });
    std::fs::write(&log, text).unwrap();
    (scene, log)
}

#[test]
fn replay_constructed_metrics() {
    let dir = TempDir::new().unwrap();
    for (pre, rejections) in [(false, 0), (true, 1)] {
        let (scene, log) = constructed(dir.path(), pre);
        let o = primo(&["replay", "--scene", p(&scene), "--log", p(&log)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let v = stdout_json(&o);
        assert_eq!(v["clipping_ms"], 1000);
        assert_eq!(v["navigation_ms"], 4000);
        assert_eq!(v["total_ms"], 5000);
        assert_eq!(v["rejections"], rejections);
    }
}

#[test]
fn replay_exit_codes() {
    let dir = TempDir::new().unwrap();
    let (scene, log) = constructed(dir.path(), false);
    let text = std::fs::read_to_string(&log).unwrap();

    // cut mid-line
    let cut = dir.path().join("cut.jsonl");
    std::fs::write(&cut, &text[..text.len() - 10]).unwrap();
    assert_eq!(code(&primo(&["replay", "--scene", p(&scene), "--log", p(&cut)])), 3);

    // stops before the reveal
    let short = dir.path().join("short.jsonl");
    let first: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
    std::fs::write(&short, first).unwrap();
    let o = primo(&["replay", "--scene", p(&scene), "--log", p(&short)]);
    assert_eq!(code(&o), 3);
    assert_eq!(stdout_json(&o)["completed"], false);

    // schema mismatch
    let bad = dir.path().join("v2.json");
    let s = std::fs::read_to_string(&scene).unwrap().replacen("\"primo_schema\":1", "\"primo_schema\":2", 1);
    std::fs::write(&bad, s).unwrap();
    assert_eq!(code(&primo(&["replay", "--scene", p(&bad), "--log", p(&log)])), 2);

    // decreasing timestamps
    let back = dir.path().join("back.jsonl");
    std::fs::write(&back, text.replace("\"t\":5000", "\"t\":10")).unwrap();
    assert_eq!(code(&primo(&["replay", "--scene", p(&scene), "--log", p(&back)])), 2);

    // missing file
    assert_eq!(code(&primo(&["replay", "--scene", p(&scene), "--log", "/nonexistent.jsonl"])), 2);
}

#[test]
fn schedule_output() {
    let o = primo(&["schedule", "--n", "24"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["primo_schema"], 1);
    let ps = v["participants"].as_array().unwrap();
    assert_eq!(ps.len(), 24);
    for g in 0..4 {
        assert_eq!(ps.iter().filter(|p| p["group"] == g).count(), 6);
    }
    assert_eq!(code(&primo(&["schedule", "--n", "6"])), 2);
}

fn records(shift: f64) -> Vec<Value> {
    let conditions = [
        ("SELECTION", "STRUCTURED"),
        ("SELECTION", "UNSTRUCTURED"),
        ("EVERYTHING", "STRUCTURED"),
        ("EVERYTHING", "UNSTRUCTURED"),
    ];
    let mut out = Vec::new();
    for (display, style) in conditions {
        for k in 0..8u64 {
            let base = 4000.0 + 150.0 * k as f64;
            let total = base + if display == "EVERYTHING" { shift } else { 0.0 };
            let total = total as u64;
            out.push(json!({
                "participant": k,
                "condition": {"display": display, "style": style},
                "measure": "TIME",
                "phase": "MAIN",
                "completed": true,
                "metrics": {"clipping_ms": 1000, "navigation_ms": total - 1000, "total_ms": total},
            }));
        }
    }
    out
}

#[test]
fn analyze_reports() {
    let dir = TempDir::new().unwrap();
    let null = dir.path().join("null");
    let effect = dir.path().join("effect");
    for (d, shift) in [(&null, 0.0), (&effect, 3000.0)] {
        std::fs::create_dir(d).unwrap();
        std::fs::write(d.join("records.json"), serde_json::to_string(&records(shift)).unwrap()).unwrap();
    }
    let v = stdout_json(&primo(&["analyze", "--metrics", p(&null)]));
    let total = v["measures"].as_array().unwrap().iter().find(|m| m["measure"] == "total_ms").unwrap();
    for e in ["display", "style", "interaction"] {
        assert_eq!(total["anova"][e]["p"], 1.0);
    }
    let v = stdout_json(&primo(&["analyze", "--metrics", p(&effect)]));
    let total = v["measures"].as_array().unwrap().iter().find(|m| m["measure"] == "total_ms").unwrap();
    assert!(total["anova"]["display"]["p"].as_f64().unwrap() < 0.05);
    assert_eq!(total["anova"]["style"]["p"], 1.0);

    let ssq = dir.path().join("ssq.json");
    let rows: Vec<Value> = (0..6)
        .map(|i| json!({"participant": i, "pre": vec![0; 16], "post": vec![1; 16]}))
        .collect();
    std::fs::write(&ssq, serde_json::to_string(&rows).unwrap()).unwrap();
    let o = primo(&["analyze", "--metrics", p(&effect), "--ssq", p(&ssq), "--text"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("total_ms (n = 32)"));
    assert!(text.contains("ssq total"));

    assert_eq!(code(&primo(&["analyze", "--metrics", "/nonexistent"])), 2);
}

#[test]
fn bridge_round_trip() {
    let dir = TempDir::new().unwrap();
    let scene = generate(dir.path(), "b.json", &["--seed", "2", "--depth", "1"]);
    let log = dir.path().join("bridge.jsonl");
    let mut child = Command::new(env!("CARGO_BIN_EXE_primo"))
        .args(["bridge", "--scene", p(&scene), "--log-out", p(&log)])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let requests = [
        r#"{"op":"clip","data":{"h":0.5}}"#,
        r#"{"op":"confirm","data":{}}"#,
        r#"{"op":"tick","data":{"dt_ms":16}}"#,
        r#"{"op":"bogus"}"#,
    ];
    {
        let stdin = child.stdin.as_mut().unwrap();
        for r in requests {
            writeln!(stdin, "{r}").unwrap();
        }
    }
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let replies: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(replies.len(), 4);
    assert_eq!(replies[0]["state"]["nav"]["clip"], 0.5);
    assert!(replies[1]["state"]["rejected"].is_string());
    assert_eq!(replies[2]["state"]["t"], 16);
    assert!(replies[3]["error"].is_string());
    let recorded = std::fs::read_to_string(&log).unwrap();
    assert!(recorded.starts_with("{\"t\":0,\"e\":\"start\",\"data\":{}}\n"));
    let o = primo(&["replay", "--scene", p(&scene), "--log", p(&log)]);
    assert_eq!(code(&o), 3);
    assert_eq!(stdout_json(&o)["depth"], 0);
}
