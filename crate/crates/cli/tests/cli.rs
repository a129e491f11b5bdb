use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const P_POINT: &str = "[model]\nfamily = brusselator\nB = 15\n[diffusion]\nD1 = 0.1\n";

fn turing(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("input.cfg");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_turing"))
        .arg("--config")
        .arg(&path)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn classify_p_point() {
    let tmp = tempfile::tempdir().unwrap();
    let o = turing(tmp.path(), P_POINT, &["classify", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"]["case"], "T22d");
    assert_eq!(v["verdict"]["outcome"], "Instability");
    assert_eq!(v["oracle"]["argmax_modes"], serde_json::json!([[10]]));
    assert_eq!(v["oracle"]["class"], "TuringInstability");
    assert_eq!(v["agree"], true);
}

#[test]
fn empty_config_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = turing(tmp.path(), "", &["classify"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("model family required"), "{}", stderr(&o));
}

#[test]
fn inconsistent_side_is_reported_with_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let o = turing(
        tmp.path(),
        &format!("{P_POINT}[domain]\nN = 250\ndt = 0.001\nS = 19.365\n"),
        &["classify"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 9: S = 19.365"), "{}", stderr(&o));
}

#[test]
fn unstable_time_step_exits_before_stepping() {
    // Consistent within the S tolerance, yet dx is short enough that the
    // ratio exceeds 1/6 by more than the slack.
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let side = 250.0 * 0.006f64.sqrt() - 9e-10;
    let cfg = format!("{P_POINT}[domain]\nN = 250\ndt = 0.001\nS = {side:?}\n[run]\nsteps = 10\n");
    let o = turing(tmp.path(), &cfg, &["simulate", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("stability ratio"), "{}", stderr(&o));
    assert!(!out.join("final.bin").exists());
}

#[test]
fn blow_up_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "[model]\nfamily = normal_form\nnu = 1\nbeta = 0\na = 1\nb = 0\n[domain]\nN = 8\n\
               [run]\nsteps = 20000\nstride = 0\namplitude = 0.5\n";
    let o = turing(
        tmp.path(),
        cfg,
        &["simulate", "--out", tmp.path().join("run").to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite"), "{}", stderr(&o));
}

#[test]
fn sidecar_reproduces_the_run_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let cfg = format!("{P_POINT}[domain]\nk = 2\nN = 12\n[run]\nsteps = 400\nstride = 100\n");
    let o = turing(
        tmp.path(),
        &cfg,
        &["simulate", "--seed", "42", "--out", a.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let sidecar = fs::read_to_string(a.join("run.cfg")).unwrap();
    assert!(sidecar.contains("seed = 42") && sidecar.contains("phi1_min"));
    for n in ["final.bin", "final_phi1.pgm", "final_phi2.pgm", "snap_0000000400.bin"] {
        assert!(a.join(n).is_file(), "{n}");
    }

    let o = turing(tmp.path(), &sidecar, &["simulate", "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(files(&a), files(&b));

    let o = turing(
        tmp.path(),
        &cfg,
        &["simulate", "--seed", "43", "--out", c.to_str().unwrap()],
    );
    assert!(o.status.success());
    assert_ne!(
        fs::read(a.join("final.bin")).unwrap(),
        fs::read(c.join("final.bin")).unwrap()
    );
}

#[test]
fn simulate_then_analyze_at_p_point() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let cfg = format!("{P_POINT}[run]\nseed = 1\n");
    let o = turing(tmp.path(), &cfg, &["simulate", "--out", run.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_turing"))
        .args(["analyze", "--json", run.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["class"], "TuringPattern");
    assert_eq!(v["period_count"], 7);
    assert_eq!(v["snapshots"], 100);
    let csv = fs::read_to_string(run.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("n,c_phi1,c_phi2\n0,"));
    assert!(run.join("analysis.json").is_file());
}

#[test]
fn dispersion_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = turing(tmp.path(), P_POINT, &["dispersion"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("norm2,n_indices,trace,det,re_lambda_plus"));
    assert!(lines.next().unwrap().starts_with("0,0,10,4,"));
}

#[test]
fn sweep_is_deterministic_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{P_POINT}[domain]\nN = 100\nS = 19.365\n[sweep]\naxis1 = D1 0.02 1 3\naxis2 = B 2 16 2\nN = 16\nt_end = 2\nsnapshots = 10\n"
    );
    let run = |workers: &str, name: &str| {
        let out = tmp.path().join(name);
        let o = turing(
            tmp.path(),
            &cfg,
            &["sweep", "--workers", workers, "--out", out.to_str().unwrap()],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stderr(&o).matches("point ").count(), 6);
        fs::read_to_string(out.join("sweep.csv")).unwrap()
    };
    let serial = run("1", "s");
    assert_eq!(serial, run("3", "p"));
    let lines: Vec<&str> = serial.lines().collect();
    assert_eq!(
        lines[0],
        "idx,param1,param2,thm_outcome,thm_case,window_lo,window_hi,oracle_lambda,oracle_class,argmax_norm2,sim_class,period_count,error"
    );
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("0,0.02,2,"));
    let summary: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("s/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["points"], 6);
}

#[test]
fn sweep_without_section_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = turing(tmp.path(), P_POINT, &["sweep"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[sweep]"));
}
