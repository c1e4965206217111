use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn hgl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgl")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn hgl_env(args: &[&str], cwd: &Path, key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgl")).args(args).current_dir(cwd).env(key, value).output().expect("binary runs")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// All files below `dir` except manifests, as (relative path, bytes).
fn data_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else if p.file_name().unwrap() != "run_manifest.json" {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

#[test]
fn shoot_writes_trajectory_summary_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hgl(&["selfsim", "shoot", "--slope", "-1", "--out", "run"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("run");
    let csv = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("eta,g,gp,gpp\n"));
    let s = json(dir.join("summary.json"));
    for key in ["slope", "termination", "eta_bar", "decay_residual", "n_steps"] {
        assert!(s.get(key).is_some(), "{key}");
    }
    assert_eq!(s["termination"], "ReachedEnd");
    let m = json(dir.join("run_manifest.json"));
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["subcommand"], "selfsim shoot");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["parameters"]["slope"], -1.0);
    assert!(m["duration_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["tool_version"].is_string());
}

#[test]
fn verify_accepts_computed_and_rejects_tampered_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    for slope in ["-1", "1"] {
        let out = format!("shoot{slope}");
        assert_eq!(code(&hgl(&["selfsim", "shoot", "--slope", slope, "--out", &out], tmp.path())), 0);
        let input = format!("{out}/trajectory.csv");
        let o = hgl(&["selfsim", "verify", "--input", &input, "--out", &format!("verify{slope}")], tmp.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let r = json(tmp.path().join(format!("verify{slope}/verify.json")));
        assert_eq!(r["passed"], true);
        if slope == "1" {
            assert_eq!(r["termination"], "BlowUp");
            assert_eq!(r["certificate"]["passed"], true);
        } else {
            assert_eq!(r["ansatz"]["passed"], true);
        }
    }
    let text = std::fs::read_to_string(tmp.path().join("shoot-1/trajectory.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let k = lines.len() / 2;
    let mut cols: Vec<f64> = lines[k].split(',').map(|c| c.parse().unwrap()).collect();
    cols[3] *= 1.01;
    lines[k] = cols.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",");
    std::fs::write(tmp.path().join("bad.csv"), lines.join("\n") + "\n").unwrap();
    let o = hgl(&["selfsim", "verify", "--input", "bad.csv", "--out", "bad"], tmp.path());
    assert_eq!(code(&o), 3);
    assert_eq!(json(tmp.path().join("bad/verify.json"))["passed"], false);
}

#[test]
fn sweep_writes_one_directory_per_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hgl(&["selfsim", "sweep", "--slopes", "-1,-10,1", "--eta-max", "8", "--out", "sw"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("sw");
    for k in 0..3 {
        assert!(dir.join(format!("runs/run_{k:03}/trajectory.csv")).exists());
    }
    let csv = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(3).unwrap().contains("BlowUp"));
}

#[test]
fn stationary_divergence_exits_3_with_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hgl(&["stationary", "solve", "--lambda", "1e4", "--h", "const", "--bc", "navier", "--out", "st"], tmp.path());
    assert_eq!(code(&o), 3);
    let s = json(tmp.path().join("st/summary.json"));
    assert_eq!(s["converged"], false);
    assert_eq!(s["error"]["kind"], "Divergence");
    assert_eq!(json(tmp.path().join("st/run_manifest.json"))["status"], "solver_failure");
}

#[test]
fn stationary_solve_and_field_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["stationary", "solve", "--lambda", "2", "--h", "sine", "--bc", "dirichlet", "--nx", "17", "--out", "a"];
    assert_eq!(code(&hgl(&args, tmp.path())), 0);
    let s = json(tmp.path().join("a/summary.json"));
    assert_eq!(s["converged"], true);
    for key in ["quadratic", "cubic", "linear", "total"] {
        assert!(s["energy"][key].is_number(), "{key}");
    }
    let field = hgl_core::grid::read_field_csv(tmp.path().join("a/field.csv")).unwrap();
    assert_eq!(field.spec().nx, 17);
    // The solution as forcing file: the grid comes from the file.
    let o = hgl(&["stationary", "solve", "--lambda", "1", "--h", "file:a/field.csv", "--bc", "dirichlet", "--out", "b"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(tmp.path().join("b/run_manifest.json"))["inputs"][0], "a/field.csv");
    let o = hgl(&["stationary", "solve", "--method", "descent", "--bc", "navier", "--out", "c"], tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn stationary_continue_brackets_loss_of_convergence() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hgl(&["stationary", "continue", "--lambda-grid", "log:1:1e4:5", "--nx", "33", "--out", "c"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("c/continuation.csv")).unwrap();
    assert!(csv.starts_with("lambda,converged,residual,norm\n"));
    let s = json(tmp.path().join("c/summary.json"));
    let (ok, fail) = (s["bracket"]["lambda_ok"].as_f64().unwrap(), s["bracket"]["lambda_fail"].as_f64().unwrap());
    assert!(ok < fail);
}

#[test]
fn radial_solve_and_continue() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&hgl(&["radial", "solve", "--lambda", "20", "--nr", "101", "--out", "r"], tmp.path())), 0);
    let csv = std::fs::read_to_string(tmp.path().join("r/profile.csv")).unwrap();
    assert!(csv.starts_with("r,u,up,lap\n"));
    assert_eq!(csv.lines().count(), 102);
    assert_eq!(code(&hgl(&["radial", "solve", "--lambda", "5000", "--nr", "101", "--out", "far"], tmp.path())), 3);
    assert_eq!(json(tmp.path().join("far/summary.json"))["error"]["kind"], "NewtonFailure");
    let o = hgl(&["radial", "continue", "--bc", "navier", "--lambda-max", "64", "--nr", "101", "--out", "c"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let b = &json(tmp.path().join("c/summary.json"))["bracket"];
    assert!(b["relative_width"].as_f64().unwrap() <= 1e-3);
    assert!(b["lambda_ok"].as_f64().unwrap() > 16.0);
}

#[test]
fn evolve_small_data_decays_and_large_data_blows_up() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hgl(&["evolve", "--ic", "sine:0.01", "--lambda", "0", "--bc", "navier", "--out", "small"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(tmp.path().join("small/summary.json"))["outcome"], "Decayed");
    let norms = std::fs::read_to_string(tmp.path().join("small/norms.csv")).unwrap();
    assert!(norms.starts_with("t,sobolev22\n"));

    let args = ["evolve", "--ic", "sine:1000", "--dt", "1e-6", "--t-max", "1e-2", "--snapshot-every", "2", "--out", "big"];
    assert_eq!(code(&hgl(&args, tmp.path())), 0);
    let s = json(tmp.path().join("big/summary.json"));
    assert_eq!(s["outcome"], "BlowUp");
    assert!(s["t_star_estimate"].as_f64().unwrap().is_finite());
    let index = std::fs::read_to_string(tmp.path().join("big/snapshots.csv")).unwrap();
    for line in index.lines().skip(1) {
        let file = line.split(',').nth(2).unwrap();
        assert!(tmp.path().join("big").join(file).exists(), "{file}");
    }

    let o = hgl(&["evolve", "--bc", "dirichlet", "--ic", "sine:0.1", "--t-max", "1e-3", "--out", "clamped"], tmp.path());
    assert_eq!(code(&o), 0);
    let norms = std::fs::read_to_string(tmp.path().join("clamped/norms.csv")).unwrap();
    assert!(norms.starts_with("t,sobolev22,energy\n"));
}

#[test]
fn config_file_precedence_and_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("cfg.txt"), "# radial run\nlambda = 3\nnr = 65\nbc = navier\n").unwrap();
    let o = hgl(&["radial", "solve", "--config", "cfg.txt", "--lambda", "7", "--out", "r"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(tmp.path().join("r/run_manifest.json"));
    assert_eq!(m["parameters"]["lambda"], 7.0);
    assert_eq!(m["parameters"]["nr"], 65);
    assert_eq!(m["parameters"]["bc"], "navier");
    assert_eq!(json(tmp.path().join("r/summary.json"))["lambda"], 7.0);

    std::fs::write(tmp.path().join("bad.txt"), "lamda = 3\n").unwrap();
    let o = hgl(&["radial", "solve", "--config", "bad.txt", "--out", "x"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("lamda"));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&hgl(&["selfsim", "shoot", "--slope", "1", "--no-such-flag"], tmp.path())), 2);
    assert_eq!(code(&hgl(&["selfsim", "shoot"], tmp.path())), 2);
    assert_eq!(code(&hgl(&["selfsim", "shoot", "--slope", "1", "--eta0", "50"], tmp.path())), 2);
    assert_eq!(code(&hgl(&["stationary", "solve", "--bc", "sideways"], tmp.path())), 2);
    assert_eq!(code(&hgl(&["evolve", "--ic", "cosine:1"], tmp.path())), 2);
    assert_eq!(code(&hgl_env(&["selfsim", "shoot", "--slope", "1"], tmp.path(), "HGL_THREADS", "zero")), 2);
    let help = hgl(&["--help"], tmp.path());
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("key = value"));
}

#[test]
fn figure1_bundles_are_complete_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hgl_env(&["figures", "fig1", "a"], tmp.path(), "HGL_THREADS", "2");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::create_dir(tmp.path().join("b")).unwrap();
    assert_eq!(code(&hgl(&["figures", "fig1", "b"], tmp.path())), 0);
    let (a, b) = (data_files(&tmp.path().join("a")), data_files(&tmp.path().join("b")));
    assert_eq!(a, b);
    for (panel, n) in [("a", 3), ("b", 3), ("c", 4), ("d", 4)] {
        let s = json(tmp.path().join(format!("a/panel_{panel}/summary.json")));
        assert_eq!(s["tally"]["reached_end"], n, "panel {panel}");
        for k in 0..n {
            assert!(tmp.path().join(format!("a/panel_{panel}/runs/run_{k:03}/trajectory.csv")).exists());
        }
    }
    // Re-running into a populated directory leaves the data unchanged.
    assert_eq!(code(&hgl(&["figures", "fig1", "a"], tmp.path())), 0);
    assert_eq!(data_files(&tmp.path().join("a")), b);
}
