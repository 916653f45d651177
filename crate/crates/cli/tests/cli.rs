use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spinfill(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinfill"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn synth_thin_classify_metrics_round() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = spinfill(
        &[
            "synth", "--lx", "24", "--ly", "20", "--seed", "3", "--output", "full.asc",
        ],
        d,
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let out = spinfill(
        &[
            "thin",
            "--input",
            "full.asc",
            "--p",
            "0.5",
            "--seed",
            "1",
            "--train-out",
            "train.asc",
            "--mask-out",
            "mask.asc",
        ],
        d,
    );
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(stdout(&out).contains("removed 240 of 480"));

    for model in ["ising", "potts", "knn"] {
        let est = format!("{model}.asc");
        let out = spinfill(
            &[
                "classify",
                "--input",
                "train.asc",
                "--model",
                model,
                "--nc",
                "8",
                "--seed",
                "2",
                "--output",
                &est,
                "--strict",
            ],
            d,
        );
        assert_eq!(code(&out), 0, "{model}: {out:?}");
        let text = fs::read_to_string(d.join(&est)).unwrap();
        assert!(text.starts_with("ncols 24\nnrows 20\nnodata NA\n"));
        assert!(!text.lines().skip(3).any(|l| l.contains("NA")));
    }

    // self-comparison: F = 0, plus CSV emissions
    let out = spinfill(
        &[
            "metrics",
            "--truth",
            "ising.asc",
            "--estimate",
            "ising.asc",
            "--mask",
            "mask.asc",
            "--variograms",
            "v.csv",
            "--histogram",
            "h.csv",
            "--nc",
            "8",
        ],
        d,
    );
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(stdout(&out).contains("f = 0\n"));
    let v = fs::read_to_string(d.join("v.csv")).unwrap();
    assert!(v.starts_with("axis,lag,gamma,npairs\nx,1,"));
    assert!(v.contains("\ny,5,"));
    let h = fs::read_to_string(d.join("h.csv")).unwrap();
    assert!(h.starts_with("class,count,log_count\n"));
    assert_eq!(h.lines().count(), 9);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&spinfill(&["classify", "--model", "ising"], dir.path())), 1);
    assert_eq!(code(&spinfill(&["frobnicate"], dir.path())), 1);
    assert_eq!(
        code(&spinfill(
            &[
                "thin",
                "--input",
                "x",
                "--p",
                "abc",
                "--train-out",
                "a",
                "--mask-out",
                "b"
            ],
            dir.path()
        )),
        1
    );
    assert_eq!(code(&spinfill(&["--help"], dir.path())), 0);
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.asc"), "ncols 3\nnrows 1\nnodata NA\n1 2\n").unwrap();
    let out = spinfill(
        &[
            "classify", "--input", "bad.asc", "--model", "potts", "--nc", "4", "--output", "o.asc",
        ],
        d,
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
    let out = spinfill(
        &[
            "classify",
            "--input",
            "missing.asc",
            "--model",
            "potts",
            "--nc",
            "4",
            "--output",
            "o.asc",
        ],
        d,
    );
    assert_eq!(code(&out), 2);
    fs::write(d.join("full.asc"), "ncols 2\nnrows 1\nnodata NA\n1 2\n").unwrap();
    let out = spinfill(
        &[
            "thin",
            "--input",
            "full.asc",
            "--p",
            "1.5",
            "--train-out",
            "a",
            "--mask-out",
            "b",
        ],
        d,
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn strict_mode_reports_sweep_cap() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        code(&spinfill(
            &["synth", "--lx", "30", "--ly", "30", "--seed", "5", "--output", "full.asc"],
            d
        )),
        0
    );
    let thin = [
        "thin",
        "--input",
        "full.asc",
        "--p",
        "0.66",
        "--train-out",
        "t.asc",
        "--mask-out",
        "m.asc",
    ];
    assert_eq!(code(&spinfill(&thin, d)), 0);
    let base = [
        "classify",
        "--input",
        "t.asc",
        "--model",
        "potts",
        "--nc",
        "16",
        "--output",
        "o.asc",
        "--max-sweeps",
        "1",
    ];
    let relaxed = spinfill(&base, d);
    assert_eq!(code(&relaxed), 0, "{relaxed:?}");
    assert!(stdout(&relaxed).contains("converged false"));
    let mut strict = base.to_vec();
    strict.push("--strict");
    assert_eq!(code(&spinfill(&strict, d)), 3);
}

#[test]
fn bench_writes_deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("exp.cfg"),
        "synth.lx = 16\nsynth.ly = 14\nmodels = ising, potts, knn\nnc = 4\np = 0.5\nrealizations = 3\ntiming = false\n",
    )
    .unwrap();
    for out_dir in ["a", "b"] {
        let out = spinfill(
            &[
                "bench",
                "--config",
                "exp.cfg",
                "--output-dir",
                out_dir,
                "--strict",
            ],
            d,
        );
        assert_eq!(code(&out), 0, "{out:?}");
        assert!(stdout(&out).starts_with("model,nc,p,f_mean,f_std,sweeps_mean,cost_mean,time_mean\n"));
    }
    let a = fs::read(d.join("a/aggregates.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b/aggregates.csv")).unwrap());
    assert!(d.join("a/runs/ising_nc4_p0.5_r0000.json").exists());
    assert!(d.join("a/cells/potts_nc4_p0.5/std_map.asc").exists());

    fs::write(d.join("bad.cfg"), "nc = 1\n").unwrap();
    assert_eq!(code(&spinfill(&["bench", "--config", "bad.cfg"], d)), 2);
}
