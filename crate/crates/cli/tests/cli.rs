use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use otlab::fixtures;
use otlab::measures::DiscreteMeasure;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ot")).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("error JSON on stderr");
    v["error"]["kind"].as_str().unwrap().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_measure(path: &Path, m: &DiscreteMeasure<f64>) {
    fs::write(path, serde_json::to_string(&m.to_file()).unwrap()).unwrap();
}

#[test]
fn solve_writes_report_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let r = ot(&[
        "solve", "--mu", p(&fixture("plane_mu.json")), "--nu", p(&fixture("plane_nu.json")),
        "--cost", "euclidean", "--pow", "2", "--out", p(&out),
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let v = json(&out);
    assert_eq!(v["duality_gap"], 0.0);
    assert_eq!(v["primal_value"], v["dual_value"]);
    let meta = json(&dir.path().join("report.meta.json"));
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["flags"][0], "solve");
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn missing_file_is_an_io_error() {
    let r = ot(&["solve", "--mu", "/nonexistent/a.json", "--nu", p(&fixture("plane_nu.json"))]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(error_kind(&r), "io");
}

#[test]
fn sublinear_exponent_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let r = ot(&[
        "solve", "--mu", p(&fixture("plane_mu.json")), "--nu", p(&fixture("plane_nu.json")),
        "--pow", "0.5", "--out", p(&out),
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(error_kind(&r), "validation");
    assert!(!out.exists());
}

#[test]
fn malformed_input_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"points": [[0.0]], "weights": [-1.0]}"#).unwrap();
    let r = ot(&["solve", "--mu", p(&bad), "--nu", p(&fixture("book_nu.json"))]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(error_kind(&r), "validation");
    let r = ot(&["solve", "--mu"]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(error_kind(&r), "validation");
}

#[test]
fn select_book_shift() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sel.json");
    let r = ot(&["select", "--mu", p(&fixture("book_mu.json")), "--nu", p(&fixture("book_nu.json")), "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["stabilized"], true);
    assert_eq!(v["secondary_value"], 0.0);
    assert_eq!(v["family"], "power");
    assert!(v.get("plans").is_none());
    assert_eq!(v["limit_plan"]["entries"], serde_json::json!([[0, 0, 0.5], [1, 1, 0.5]]));
}

#[test]
fn select_routes_crystalline_norms_and_checks_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sel.json");
    let r = ot(&[
        "select", "--mu", p(&fixture("plane_mu.json")), "--nu", p(&fixture("plane_nu.json")),
        "--norm", "linf", "--eps", "0.5,0.1,0.01", "--include-plans", "--out", p(&out),
    ]);
    assert_eq!(r.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["family"], "crystalline");
    assert_eq!(v["plans"].as_array().unwrap().len(), 3);
    let r = ot(&[
        "select", "--mu", p(&fixture("book_mu.json")), "--nu", p(&fixture("book_nu.json")),
        "--eps", "0.5,0.25", "--out", p(&out),
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(error_kind(&r), "validation");
}

#[test]
fn rearrangement_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let r = ot(&["rearrange1d", "--mu", p(&fixture("book_mu.json")), "--nu", p(&fixture("book_nu.json")), "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(json(&out)["cost"], 1.0);

    let crossing = dir.path().join("crossing.json");
    fs::write(&crossing, r#"{"entries": [[0, 1, 0.5], [1, 0, 0.5]]}"#).unwrap();
    let cert = dir.path().join("c.json");
    let r = ot(&[
        "certify", "--mu", p(&fixture("book_mu.json")), "--nu", p(&fixture("book_nu.json")),
        "--plan", p(&crossing), "--pow", "2", "--out", p(&cert),
    ]);
    assert_eq!(r.status.code(), Some(0));
    let v = json(&cert);
    assert_eq!(v["monotonicity"]["ok"], false);
    assert!(v["monotonicity"]["gain"].as_f64().unwrap() > 0.0);
    assert_eq!(v["quadratic_monotone_support"], false);
    assert_eq!(v["is_graph"], true);
}

#[test]
fn oracles() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let r = ot(&["oracle", "brute", "--mu", p(&fixture("book_mu.json")), "--nu", p(&fixture("book_nu.json")), "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(json(&out)["optimum"], 1.0);
    let r = ot(&["oracle", "secondary", "--mu", p(&fixture("book_mu.json")), "--nu", p(&fixture("book_nu.json")), "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["secondary_value"], 0.0);
    assert!((v["gap"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn density_of_diagonal_plan_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let diag = dir.path().join("diag.json");
    fs::write(&diag, r#"{"entries": [[0, 0, 0.2], [1, 1, 0.4], [2, 2, 0.2], [3, 3, 0.2]]}"#).unwrap();
    let out = dir.path().join("d.json");
    let mu = fixture("plane_mu.json");
    let r = ot(&[
        "density", "--mu", p(&mu), "--nu", p(&mu), "--plan", p(&diag),
        "--origin", "0", "0", "--cell", "0.5", "--nx", "2", "--ny", "2", "--out", p(&out),
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# origin_x=0"));
    assert!(lines.all(|l| l == "0,0"));
    assert_eq!(json(&out)["outside"], 0.0);
}

#[test]
fn uncovered_plan_warns_and_reports_outside_mass() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let r = ot(&[
        "solve", "--mu", p(&fixture("plane_mu.json")), "--nu", p(&fixture("plane_nu.json")), "--out", p(&plan),
    ]);
    assert_eq!(r.status.code(), Some(0));
    // the report embeds the plan under "plan"
    let report = json(&plan);
    fs::write(&plan, report["plan"].to_string()).unwrap();
    let out = dir.path().join("d.json");
    let r = ot(&[
        "density", "--mu", p(&fixture("plane_mu.json")), "--nu", p(&fixture("plane_nu.json")), "--plan", p(&plan),
        "--origin", "-0.5", "-0.5", "--cell", "0.5", "--nx", "4", "--ny", "4", "--out", p(&out),
    ]);
    assert_eq!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stderr).contains("warning"));
    let v = json(&out);
    let outside = v["outside"].as_f64().unwrap();
    assert!(outside > 0.0);
    let total = v["total"].as_f64().unwrap() + outside;
    let cost = report["primal_value"].as_f64().unwrap();
    assert!((total - cost).abs() <= 1e-9 * cost);
}

#[test]
fn pde_writes_fields_and_dumps_levels() {
    let dir = tempfile::tempdir().unwrap();
    let b = fixtures::two_bumps(16).unwrap();
    let (mu, nu) = (dir.path().join("mu.json"), dir.path().join("nu.json"));
    write_measure(&mu, &b.mu);
    write_measure(&nu, &b.nu);
    let out = dir.path().join("run");
    let r = ot(&[
        "pde", "--mu", p(&mu), "--nu", p(&nu), "--p", "4,8,16", "--n", "16", "--dump-every", "2", "--out-dir", p(&out),
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["u.csv", "a.csv", "u.json", "a.json", "pde.json", "pde.meta.json", "u_p4.csv", "u_p16.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let v = json(&out.join("pde.json"));
    assert_eq!(v["converged"], true);
    assert_eq!(v["p_final"], 16.0);
    assert_eq!(v["levels"].as_array().unwrap().len(), 4);
}

#[test]
fn pde_non_convergence_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let b = fixtures::two_bumps(16).unwrap();
    let (mu, nu) = (dir.path().join("mu.json"), dir.path().join("nu.json"));
    write_measure(&mu, &b.mu);
    write_measure(&nu, &b.nu);
    let out = dir.path().join("run");
    let r = ot(&["pde", "--mu", p(&mu), "--nu", p(&nu), "--p", "16", "--n", "16", "--max-iter", "1", "--out-dir", p(&out)]);
    assert_eq!(r.status.code(), Some(3));
    assert_eq!(error_kind(&r), "non_convergence");
    assert_eq!(json(&out.join("pde.json"))["converged"], false);
    assert!(out.join("u.csv").exists());
}

#[test]
fn incomplete_grid_flags_are_rejected() {
    let r = ot(&[
        "density", "--mu", p(&fixture("plane_mu.json")), "--nu", p(&fixture("plane_nu.json")),
        "--plan", p(&fixture("plane_mu.json")), "--cell", "0.5",
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(error_kind(&r), "validation");
}
