use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use motives_core::TabularRule;

const UNIFORM: &str = r#"
[model.x]
dist = "uniform"
lo = 0.0
hi = 1.0
n = NX

[model.y]
dist = "uniform"
lo = 0.0
hi = 1.0
n = NX
"#;

fn config(dir: &Path, name: &str, head: &str, n: usize, tail: &str) -> PathBuf {
    let text = format!(
        "schema = 1\n{head}\n{}\n{tail}",
        UNIFORM.replace("NX", &n.to_string())
    );
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motives"))
        .args([
            "run",
            cfg.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--threads",
            "2",
        ])
        .output()
        .unwrap()
}

fn read_csv_column(path: &Path, col: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let k = r.headers().unwrap().iter().position(|h| h == col).unwrap();
    r.records()
        .map(|rec| rec.unwrap()[k].parse().unwrap())
        .collect()
}

#[test]
fn solve_reports_quadrant_thresholds_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        "solve.toml",
        "kind = \"solve\"\nseed = 7",
        100,
        "",
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = run(&cfg, &a);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("x_bar=0.500000 y_bar=0.500000"), "{stdout}");
    assert!(run(&cfg, &b).status.success());
    for f in ["solve.json", "solve_rule.csv", "solve_threshold.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("solve.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["foc_violations_off_boundary"], 0);
}

#[test]
fn rule_csv_reingests_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        "solve.toml",
        "kind = \"solve\"\n[demand]\nkind = \"sqrt\"",
        30,
        "",
    );
    assert!(run(&cfg, tmp.path()).status.success());
    let bytes = std::fs::read(tmp.path().join("solve_rule.csv")).unwrap();
    let (rule, xs, ys) = TabularRule::read_csv(bytes.as_slice()).unwrap();
    assert_eq!((xs.len(), ys.len()), (30, 30));
    let model = motives_core::JointModel::product(
        motives_core::Grid1D::new(xs, vec![1.0; 30]).unwrap(),
        motives_core::Grid1D::new(ys, vec![1.0; 30]).unwrap(),
    )
    .unwrap();
    let mut again = Vec::new();
    rule.write_csv(&model, &mut again).unwrap();
    assert_eq!(again, bytes);
}

#[test]
fn sweep_tracks_closed_form_precision() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        "sweep.toml",
        "kind = \"sweep\"",
        40,
        "[acquisition]\ncost = { kind = \"power\", k = 0.03125, q = 2.0 }\n[sweep]\ntaus = [0.0, 0.25, 0.5, 0.75, 1.0]\n",
    );
    let out = run(&cfg, tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let taus = read_csv_column(&tmp.path().join("sweep.csv"), "tau");
    let stars = read_csv_column(&tmp.path().join("sweep.csv"), "theta_star");
    for (t, s) in taus.iter().zip(&stars) {
        assert!((s - (1.0 - t) / 2.0).abs() <= 1e-3, "tau {t}: {s}");
    }
}

#[test]
fn oracle_gap_is_small() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        "oracle.toml",
        "kind = \"oracle\"\n[oracle]\nn = 20",
        60,
        "",
    );
    assert!(run(&cfg, tmp.path()).status.success());
    let gaps = read_csv_column(&tmp.path().join("oracle.csv"), "gap");
    assert!(gaps.iter().all(|&g| g <= 1e-3), "{gaps:?}");
}

#[test]
fn every_kind_writes_its_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    for (kind, files) in [
        (
            "transparency",
            &["transparency.csv", "transparency_rule.csv"][..],
        ),
        ("acquire", &["acquire.json", "value_curve.csv"][..]),
        (
            "equilibrium",
            &["equilibrium.json", "equilibrium_rule.csv"][..],
        ),
    ] {
        let cfg = config(
            tmp.path(),
            &format!("{kind}.toml"),
            &format!("kind = \"{kind}\""),
            20,
            "",
        );
        let out_dir = tmp.path().join(kind);
        let out = run(&cfg, &out_dir);
        assert!(
            out.status.success(),
            "{kind}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        for f in files {
            assert!(out_dir.join(f).is_file(), "{kind}: missing {f}");
        }
    }
}

#[test]
fn schema_errors_exit_two_with_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        "bad.toml",
        "kind = \"solve\"\n[solver]\ntol = \"tight\"",
        10,
        "",
    );
    let out = run(&cfg, tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.tol"));

    let cfg = config(tmp.path(), "kind.toml", "kind = \"simulate\"", 10, "");
    assert_eq!(run(&cfg, tmp.path()).status.code(), Some(2));
}

#[test]
fn invalid_models_exit_two_and_budget_failures_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "grid.toml", "kind = \"solve\"", 0, "");
    let out = run(&cfg, tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.x"));

    let cfg = config(
        tmp.path(),
        "budget.toml",
        "kind = \"oracle\"\n[oracle]\nn = 5\nfamily = \"tabular\"",
        5,
        "",
    );
    assert_eq!(run(&cfg, tmp.path()).status.code(), Some(3));
}
