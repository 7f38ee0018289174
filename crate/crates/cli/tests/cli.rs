//! End-to-end tests of the binary: file outputs, exit codes and
//! reproducibility of every subcommand.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_patchalign"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("patchalign-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn generate_is_deterministic_and_reports_summary() {
    let dir = tempdir("gen");
    let args = [
        "generate", "--grid", "10", "--d", "2", "--tiles", "3", "--overlap", "0.3", "--seed",
        "7", "--out", "fw.json",
    ];
    let out = run(&args, &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("n = 100"), "{stdout}");
    assert!(stdout.contains("connected = true"), "{stdout}");
    assert!(dir.join("fw.json").exists());
    assert!(dir.join("fw.gt.json").exists());
    let first = std::fs::read(dir.join("fw.json")).unwrap();
    let out2 = run(
        &[
            "generate", "--grid", "10", "--d", "2", "--tiles", "3", "--overlap", "0.3",
            "--seed", "7", "--out", "fw2.json",
        ],
        &dir,
    );
    assert!(out2.status.success());
    let second = std::fs::read(dir.join("fw2.json")).unwrap();
    assert_eq!(first, second, "same seed must give byte-identical output");
}

#[test]
fn generate_rejects_oversized_tilings_with_exit_2() {
    let dir = tempdir("gen-bad");
    let out = run(
        &["generate", "--grid", "4", "--tiles", "50", "--overlap", "0.3", "--out", "bad.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.join("bad.json").exists());
}

#[test]
fn align_certify_rigidity_pipeline() {
    let dir = tempdir("pipeline");
    assert!(run(
        &[
            "generate", "--grid", "8", "--d", "2", "--tiles", "2", "--overlap", "0.4",
            "--seed", "3", "--out", "fw.json",
        ],
        &dir,
    )
    .status
    .success());

    // spectral init converges on the noiseless fixture, exit 0
    let out = run(
        &[
            "align", "--framework", "fw.json", "--init", "spectral", "--out", "result.json",
            "--trace", "trace.csv", "--dump-matrices", "mats",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("result.json")).unwrap()).unwrap();
    assert!(result["final_f"].as_f64().unwrap() < 1e-10);
    assert!(dir.join("trace.csv").exists());
    for name in ["c.csv", "b.csv", "d.csv", "laplacian.csv"] {
        let text = std::fs::read_to_string(dir.join("mats").join(name)).unwrap();
        assert!(text.starts_with("rows,cols\n"), "{name} header");
    }

    // certify the ground truth: non-degenerate
    let out = run(
        &[
            "certify", "--framework", "fw.json", "--alignment", "fw.gt.json", "--out",
            "cert.json",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("cert.json")).unwrap()).unwrap();
    assert_eq!(cert["nondegenerate"], serde_json::Value::Bool(true));
    assert_eq!(cert["invariance_check"], serde_json::Value::Bool(true));

    // rigidity of the ground truth: affinely rigid and unique
    let out = run(
        &[
            "rigidity", "--framework", "fw.json", "--alignment", "fw.gt.json", "--out",
            "rig.json", "--dump-certificates", "certs.json",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let rig: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("rig.json")).unwrap()).unwrap();
    assert_eq!(rig["affinely_rigid"], serde_json::Value::Bool(true));
    assert_eq!(rig["infinitesimally_rigid"], serde_json::Value::Bool(true));
    assert_eq!(rig["graphs"]["unique_sufficient"], serde_json::Value::Bool(true));
    let certs: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("certs.json")).unwrap()).unwrap();
    assert!(certs.as_array().unwrap().iter().all(|c| c["trivial"] == true));
}

#[test]
fn align_hits_max_iters_with_exit_3() {
    let dir = tempdir("maxiters");
    assert!(run(
        &[
            "generate", "--grid", "6", "--d", "2", "--tiles", "2", "--overlap", "0.4",
            "--seed", "5", "--out", "fw.json",
        ],
        &dir,
    )
    .status
    .success());
    let out = run(
        &[
            "align", "--framework", "fw.json", "--init", "identity", "--max-iters", "1",
            "--out", "r.json", "--trace", "t.csv",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(3));
    let trace = std::fs::read_to_string(dir.join("t.csv")).unwrap();
    assert!(trace.starts_with("iter,F,grad_norm,alpha,dist_to_ref,ratio\n"));
    assert_eq!(trace.lines().count(), 3, "header + both iterates");
}

#[test]
fn align_accepts_a_file_initializer() {
    let dir = tempdir("file-init");
    assert!(run(
        &[
            "generate", "--grid", "6", "--d", "2", "--tiles", "2", "--overlap", "0.4",
            "--seed", "13", "--out", "fw.json",
        ],
        &dir,
    )
    .status
    .success());
    // initializing at the ground truth converges immediately
    let out = run(
        &[
            "align", "--framework", "fw.json", "--init", "fw.gt.json", "--ref", "fw.gt.json",
            "--out", "r.json", "--trace", "t.csv",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("r.json")).unwrap()).unwrap();
    assert_eq!(result["iterations"], 0);
    assert_eq!(result["termination"], "gradient_tolerance");
}

#[test]
fn missing_files_exit_2() {
    let dir = tempdir("missing");
    let out = run(
        &["align", "--framework", "absent.json", "--out", "r.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run(
        &["certify", "--framework", "absent.json", "--alignment", "also.json", "--out", "c.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn noncritical_alignment_certifies_not_applicable_with_exit_0() {
    let dir = tempdir("noncrit");
    assert!(run(
        &[
            "generate", "--grid", "6", "--d", "2", "--tiles", "2", "--overlap", "0.4",
            "--seed", "9", "--out", "fw.json",
        ],
        &dir,
    )
    .status
    .success());
    // the identity stack is in general not critical for a scrambled grid
    let identity = patchalign::manifold::Alignment::identity(2, 4);
    std::fs::write(dir.join("id.json"), identity.to_json()).unwrap();
    let out = run(
        &["certify", "--framework", "fw.json", "--alignment", "id.json", "--out", "cert.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("cert.json")).unwrap()).unwrap();
    assert_eq!(cert["verdict"], "not_applicable");
    assert_eq!(cert["nondegenerate"], serde_json::Value::Null);
}

#[test]
fn fixture_generation_and_degenerate_verdict() {
    let dir = tempdir("fixture");
    let out = run(
        &["generate", "--fixture", "two-view-1pt", "--out", "fx.json"],
        &dir,
    );
    assert!(out.status.success());
    let out = run(
        &[
            "certify", "--framework", "fx.json", "--alignment", "fx.gt.json", "--out",
            "cert.json",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("cert.json")).unwrap()).unwrap();
    assert_eq!(cert["nondegenerate"], serde_json::Value::Bool(false));
    // listing does not require --out
    let out = run(&["generate", "--fixture", "list"], &dir);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("four-bar-linkage"));
}

#[test]
fn experiment_writes_the_sweep_csv() {
    let dir = tempdir("experiment");
    assert!(run(
        &[
            "generate", "--grid", "8", "--d", "2", "--tiles", "2", "--overlap", "0.4",
            "--seed", "11", "--out", "fw.json",
        ],
        &dir,
    )
    .status
    .success());
    let out = run(
        &[
            "experiment", "--framework", "fw.json", "--ground-truth", "fw.gt.json", "--eps",
            "0:0.05:0.1", "--trials", "2", "--out", "sweep.csv",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2, "header + 3 levels x 2 trials");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("inversion"), "{stdout}");
}
