use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_matryoshka");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("-o")
        .arg(out)
        .env_remove("MATRYOSHKA_OUT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> Value {
    let o = run(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let status: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(status["status"], "ok");
    manifest(out)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn error(o: &Output) -> (i32, String) {
    let v: Value = serde_json::from_slice(&o.stderr).expect("error JSON on stderr");
    let code = o.status.code().unwrap();
    assert_eq!(v["error"]["exit_code"], code);
    (code, v["error"]["kind"].as_str().unwrap().to_string())
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn same_outputs(a: &Path, b: &Path) {
    let m = manifest(a);
    let outputs = m["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for name in outputs {
        let name = name.as_str().unwrap();
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn spectrum_of_eighty_site_chain_flags_fourteen_edge_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("eighty_site.toml");
    let m = ok(&["spectrum", "-c", cfg.to_str().unwrap()], tmp.path());
    let t = rows(&tmp.path().join("spectrum.csv"));
    assert_eq!(t[0], ["index", "energy", "left_weight", "right_weight", "is_edge"]);
    assert_eq!(t.len() - 1, 80);
    assert_eq!(t.iter().filter(|r| r[4] == "true").count(), 14);
    assert_eq!(m["command"], "spectrum");
    assert_eq!(m["outputs"], serde_json::json!(["spectrum.csv"]));
}

#[test]
fn numbers_use_scientific_format() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("tower.toml");
    ok(&["spectrum", "-c", cfg.to_str().unwrap(), "--set", "chain.cells=4"], tmp.path());
    let t = rows(&tmp.path().join("spectrum.csv"));
    for r in &t[1..] {
        for x in &r[1..4] {
            let (mantissa, exp) = x.split_once('e').expect("exponent");
            let digits = mantissa.trim_start_matches('-').split_once('.').unwrap().1;
            assert_eq!(digits.len(), 16, "{x}");
            exp.parse::<i32>().unwrap();
        }
    }
}

#[test]
fn bands_have_two_to_the_order_plus_one_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("tower.toml");
    for order in [1usize, 2] {
        let out = tmp.path().join(format!("p{order}"));
        let set = format!("chain.order={order}");
        let m = ok(
            &["bands", "-c", cfg.to_str().unwrap(), "--set", &set, "--set", "chain.k_points=32"],
            &out,
        );
        let t = rows(&out.join("bands.csv"));
        assert_eq!(t[0].len() - 1, 1 << (order + 1));
        assert_eq!(t.len() - 1, 32);
        assert!(m["derived"]["closed_form_max_deviation"].as_f64().unwrap() < 1e-8);
    }
}

#[test]
fn sqrt_check_residuals_are_tiny() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("tower.toml");
    ok(&["sqrt-check", "-c", cfg.to_str().unwrap(), "--set", "chain.cells=6"], tmp.path());
    let t = rows(&tmp.path().join("sqrt_check.csv"));
    assert_eq!(t.len() - 1, 4);
    for r in &t[1..] {
        for x in &r[3..6] {
            assert!(x.parse::<f64>().unwrap() < 1e-10, "{r:?}");
        }
    }
}

#[test]
fn transfer_writes_three_channels() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("transfer.toml");
    let m = ok(
        &["transfer", "-c", cfg.to_str().unwrap(), "--set", "schedule.duration=20.0", "--set", "schedule.samples=11"],
        tmp.path(),
    );
    for tag in ["plus1", "minus1", "zero"] {
        let obs = rows(&tmp.path().join(format!("observables_{tag}.csv")));
        assert_eq!(obs[0], ["t", "fidelity_initial", "fidelity_expected", "entropy"]);
        assert!(tmp.path().join(format!("trajectory_{tag}.csv")).exists());
    }
    assert_eq!(m["derived"]["channels"].as_array().unwrap().len(), 3);
    assert_eq!(m["config"]["schedule"]["duration"], 20.0);
}

#[test]
fn braid_reports_sectors() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("braid.toml");
    let m = ok(
        &["braid", "-c", cfg.to_str().unwrap(), "--set", "schedule.duration=20.0", "--set", "protocol.moves=1"],
        tmp.path(),
    );
    let sectors = rows(&tmp.path().join("sectors.csv"));
    assert_eq!(sectors.len() - 1, 3);
    assert!(tmp.path().join("gate.csv").exists());
    assert_eq!(m["derived"]["protocol"]["moves"], 1);
}

#[test]
fn memory_and_qudit_memory_run() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("m");
    let m = ok(&["memory", "--set", "protocol.waits=[0.0, 100.0]"], &a);
    let t = rows(&a.join("memory.csv"));
    assert_eq!(t.len() - 1, 2);
    assert!(m["derived"]["tau"].as_f64().unwrap() > 0.0);

    let b = tmp.path().join("q");
    let m = ok(&["qudit-memory"], &b);
    assert_eq!(m["derived"]["edge_count"], 14);
    let q = rows(&b.join("qudit.csv"));
    for r in &q[1..] {
        assert!(r[4].parse::<f64>().unwrap() > 0.99, "{r:?}");
    }
}

#[test]
fn bloch_tracks_schroedinger() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("bloch.toml");
    let m = ok(
        &["bloch", "-c", cfg.to_str().unwrap(), "--set", "schedule.duration=4.0", "--set", "schedule.samples=21"],
        tmp.path(),
    );
    let t = rows(&tmp.path().join("bloch.csv"));
    assert_eq!(t[0], ["t", "x", "y", "z", "gap"]);
    assert_eq!(t.len() - 1, 22);
    assert!(m["derived"]["norm_drift"].as_f64().unwrap() < 1e-9);
}

const SWEEP: &str = r#"
[schedule]
duration = 20.0
samples = 6

[disorder]
kinds = ["onsite", "hopping"]
sigmas = [0.0, 0.2]
knots = 4
seed = 11
realizations = 4

[protocol]
target = "transfer"
"#;

#[test]
fn disorder_sweep_is_clean_at_zero_sigma() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SWEEP);
    let out = tmp.path().join("run");
    ok(&["disorder-sweep", "-c", cfg.to_str().unwrap()], &out);
    let s = rows(&out.join("summary.csv"));
    assert_eq!(s.len() - 1, 4);
    for r in &s[1..] {
        if r[1].parse::<f64>().unwrap() == 0.0 {
            assert!(r[2].parse::<f64>().unwrap() >= 0.999, "{r:?}");
        }
    }
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SWEEP);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    ok(&["disorder-sweep", "-c", cfg.to_str().unwrap(), "--seed", "99"], &a);
    let again = a.join("manifest.json");
    ok(&["disorder-sweep", "-c", again.to_str().unwrap()], &b);
    same_outputs(&a, &b);
    assert_eq!(manifest(&b)["seed"], 99);

    // same seed twice, different thread cap
    ok(&["disorder-sweep", "-c", cfg.to_str().unwrap(), "--seed", "99", "--threads", "1"], &c);
    same_outputs(&a, &c);
    assert_eq!(manifest(&c)["threads"], 1);

    let d = tmp.path().join("d");
    ok(&["disorder-sweep", "-c", cfg.to_str().unwrap(), "--seed", "100"], &d);
    assert_ne!(
        fs::read(a.join("summary.csv")).unwrap(),
        fs::read(d.join("summary.csv")).unwrap()
    );
}

#[test]
fn env_var_sets_default_output_dir() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("tower.toml");
    let o = Command::new(BIN)
        .args(["spectrum", "-c", cfg.to_str().unwrap(), "--set", "chain.cells=2"])
        .env("MATRYOSHKA_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("spectrum.csv").exists());
}

#[test]
fn empty_config_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "");
    let o = run(&["spectrum", "-c", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(error(&o), (2, "usage".into()));
    assert!(!tmp.path().join("manifest.json").exists());
}

#[test]
fn failures_map_to_distinct_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let mut seen = Vec::new();

    let o = run(&["spectrum", "--bogus"], tmp.path());
    seen.push(error(&o));

    let o = run(&["spectrum", "-c", "/nonexistent/cfg.toml"], tmp.path());
    seen.push(error(&o));

    let cfg = write_config(
        tmp.path(),
        "[chain]\norder = 1\nbase_angle = 1.1029915516061317\nscales = [0.7900968917744355]\ncells = 4\n",
    );
    let o = run(&["spectrum", "-c", cfg.to_str().unwrap()], tmp.path());
    seen.push(error(&o));

    let o = run(&["memory", "--set", "protocol.theta1=pi/12"], tmp.path());
    seen.push(error(&o));

    let o = run(&["transfer", "--set", "protocol.gamma=1.0"], tmp.path());
    seen.push(error(&o));

    assert_eq!(
        seen,
        [
            (2, "usage".to_string()),
            (3, "io".to_string()),
            (6, "infeasible".to_string()),
            (10, "missing_edge_state".to_string()),
            (4, "config".to_string()),
        ]
    );
}

#[test]
fn unknown_fields_are_rejected_with_a_location() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[chain]\norder = 1\nwobble = 2\n");
    let o = run(&["spectrum", "-c", cfg.to_str().unwrap()], tmp.path());
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    let msg = v["error"]["message"].as_str().unwrap();
    assert!(msg.contains("wobble") && msg.contains("line 3"), "{msg}");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_scalars() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("tower.toml");
    let m = ok(
        &["spectrum", "-c", cfg.to_str().unwrap(), "--set", "chain.cells=3", "--set", "chain.base_angle=asin(0.6)"],
        tmp.path(),
    );
    assert_eq!(m["config"]["chain"]["cells"], 3);
    assert_eq!(m["config"]["chain"]["base_angle"], "asin(0.6)");
    assert_eq!(rows(&tmp.path().join("spectrum.csv")).len() - 1, 3 * 8);
}
