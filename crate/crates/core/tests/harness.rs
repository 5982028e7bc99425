use std::path::Path;
use std::process::Command;

use farcs::harness::{
    empirical_cdf, run, run_with_threads, write_outputs, ExperimentConfig, ExperimentKind, ExperimentResult,
    Overrides, CodeKind,
};
use farcs::Error;

fn config(kind: ExperimentKind, text: &str, dir: &Path, name: &str) -> ExperimentConfig {
    let overrides = Overrides {
        output: Some(dir.join(name)),
        ..Default::default()
    };
    ExperimentConfig::resolve_str(kind, Some(text), &overrides).unwrap()
}

fn small(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Spark => "experiment = \"spark\"\nn_trials = 2",
        ExperimentKind::Mip => "experiment = \"mip\"\nn_trials = 40\n[params]\nn_pulses = 16\nn_hrr_bins = 4\nn_codes = 4",
        ExperimentKind::PhaseTransition => "experiment = \"phase\"\nn_trials = 4\n[sweep]\nk_values = [1, 6]",
        ExperimentKind::NoisyRecovery => "experiment = \"noisy\"\nn_trials = 4\n[sweep]\nsigma2_db = [-15.0, 5.0]",
        ExperimentKind::Bounds => "experiment = \"bounds\"",
    }
}

const KINDS: [ExperimentKind; 5] = [
    ExperimentKind::Spark,
    ExperimentKind::Mip,
    ExperimentKind::PhaseTransition,
    ExperimentKind::NoisyRecovery,
    ExperimentKind::Bounds,
];

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    for kind in KINDS {
        let a = config(kind, small(kind), dir.path(), "a.csv");
        let b = config(kind, small(kind), dir.path(), "b.csv");
        let files_a = write_outputs(&a, &run_with_threads(&a, Some(1)).unwrap()).unwrap();
        let files_b = write_outputs(&b, &run_with_threads(&b, Some(3)).unwrap()).unwrap();
        assert_eq!(files_a.len(), files_b.len());
        // CSVs must match exactly; sidecars differ only in the output path.
        for (fa, fb) in files_a.iter().zip(&files_b) {
            let ta = std::fs::read_to_string(fa).unwrap();
            let tb = std::fs::read_to_string(fb).unwrap();
            if fa.extension().unwrap() == "csv" {
                assert_eq!(ta, tb, "{kind:?} {}", fa.display());
            } else {
                let (pa, pb) = (dir.path().join("a"), dir.path().join("b"));
                let (pa, pb) = (pa.display().to_string(), pb.display().to_string());
                assert_eq!(ta.replace(&pa, &pb), tb);
            }
        }
    }
}

#[test]
fn single_trial_spark_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(ExperimentKind::Spark, "n_trials = 1\nmaster_seed = 77", dir.path(), "s.csv");
    write_outputs(&c, &run(&c).unwrap()).unwrap();
    let first = std::fs::read(dir.path().join("s.csv")).unwrap();
    write_outputs(&c, &run(&c).unwrap()).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("s.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("trial,sigma_omega,n_below_eps\n0,"));
}

#[test]
fn csv_headers_follow_schema() {
    let dir = tempfile::tempdir().unwrap();
    let headers = [
        (ExperimentKind::Spark, "trial,sigma_omega,n_below_eps"),
        (ExperimentKind::Mip, "arm,trial,mu"),
        (ExperimentKind::PhaseTransition, "solver,K,trial,success"),
        (ExperimentKind::NoisyRecovery, "solver,sigma2_db,trial,success"),
        (ExperimentKind::Bounds, "N,M,delta,k_mip,k_l0"),
    ];
    for (kind, header) in headers {
        let c = config(kind, small(kind), dir.path(), &format!("{}.csv", kind.name()));
        let files = write_outputs(&c, &run(&c).unwrap()).unwrap();
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text.lines().next().unwrap(), header);
        let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(files.last().unwrap()).unwrap()).unwrap();
        assert_eq!(sidecar["config"]["experiment"], kind.name());
        assert!(sidecar["seed_rule"].is_string());
    }
}

#[test]
fn continuous_spark_has_no_deficient_submatrices() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        ExperimentKind::Spark,
        "n_trials = 3\n[spark]\ncodes = \"continuous\"",
        dir.path(),
        "c.csv",
    );
    assert_eq!(c.spark.codes, CodeKind::Continuous);
    match run(&c).unwrap() {
        ExperimentResult::Spark { records, summary } => {
            assert!(records.iter().all(|r| r.sigma_omega > 1e-12 && r.n_below_eps == 0));
            assert_eq!(summary.fraction_submatrices_below, 0.0);
            assert_eq!(summary.sigma_n_histogram.total(), 3 * 18_564);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn mip_cdfs_are_probabilities_and_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{}\n[sweep]\neps_grid = [0.0, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0]", small(ExperimentKind::Mip));
    let c = config(ExperimentKind::Mip, &text, dir.path(), "m.csv");
    match run(&c).unwrap() {
        ExperimentResult::Mip { records, summary } => {
            assert_eq!(summary.arms.len(), 4);
            assert_eq!(records.len(), 4 * 40);
            for arm in &summary.arms {
                assert_eq!(arm.cdf[0], 0.0);
                assert_eq!(*arm.cdf.last().unwrap(), 1.0);
                assert!(arm.cdf.windows(2).all(|w| w[0] <= w[1]));
                assert!(arm.cdf.iter().all(|p| (0.0..=1.0).contains(p)));
            }
            assert!(summary.theoretical_cdf.windows(2).all(|w| w[0] <= w[1]));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn sweep_probabilities_are_in_range() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [ExperimentKind::PhaseTransition, ExperimentKind::NoisyRecovery] {
        let c = config(kind, small(kind), dir.path(), "p.csv");
        let summary = match run(&c).unwrap() {
            ExperimentResult::PhaseTransition { summary, .. } | ExperimentResult::NoisyRecovery { summary, .. } => summary,
            other => panic!("unexpected {other:?}"),
        };
        for curve in &summary.curves {
            assert_eq!(curve.probability.len(), summary.axis.len());
            assert!(curve.probability.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}

#[test]
fn single_atom_phase_point_always_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        ExperimentKind::PhaseTransition,
        "n_trials = 30\n[sweep]\nk_values = [1]",
        dir.path(),
        "k1.csv",
    );
    match run(&c).unwrap() {
        ExperimentResult::PhaseTransition { summary, .. } => {
            assert_eq!(summary.curve("bp").unwrap(), &[1.0]);
            assert_eq!(summary.curve("mf").unwrap(), &[1.0]);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn bounds_report_rows_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(ExperimentKind::Bounds, "", dir.path(), "b.csv");
    match run(&c).unwrap() {
        ExperimentResult::Bounds { records, union_curves } => {
            assert!((records[0].k_mip - 1.476).abs() < 1e-3);
            assert!(records.iter().all(|r| r.k_l0 == r.n_pulses as f64 / 2.0));
            assert_eq!(union_curves.len(), records.len() * c.sweep.eps_grid.len());
        }
        other => panic!("unexpected {other:?}"),
    }
    let bad = config(
        ExperimentKind::Bounds,
        "[[sweep.bounds]]\nn_pulses = 64\nn_hrr_bins = 1\ndelta = 0.1",
        dir.path(),
        "bad.csv",
    );
    assert!(matches!(run(&bad), Err(Error::Domain(_))));
}

#[test]
fn empirical_cdf_counts_inclusive() {
    assert_eq!(empirical_cdf(&[0.1, 0.2, 0.2, 0.4], &[0.0, 0.2, 0.39, 0.4]), vec![0.0, 0.75, 0.75, 1.0]);
}

fn farcs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_farcs"))
}

#[test]
fn cli_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("phase.toml");
    std::fs::write(&cfg, "experiment = \"phase\"\n[sweep]\nk_values = [2]\n").unwrap();
    let out = dir.path().join("nested/phase.csv");
    let status = farcs()
        .args(["phase", "--trials", "3", "--seed", "5", "--threads", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout: serde_json::Value = serde_json::from_slice(&status.stdout).unwrap();
    assert_eq!(stdout["experiment"], "phase");
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("nested/phase.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config"]["master_seed"], 5);
    assert_eq!(sidecar["config"]["n_trials"], 3);
}

#[test]
fn cli_reports_machine_readable_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "experiment = \"spark\"\nunknown_key = 1\n").unwrap();
    let cases: Vec<(Vec<String>, &str)> = vec![
        (vec!["spark".into(), "--config".into(), cfg.display().to_string()], "toml"),
        (vec!["bounds".into(), "--trials".into(), "0".into()], "config"),
        (vec!["frobnicate".into()], "usage"),
        (vec!["mip".into(), "--config".into(), dir.path().join("missing.toml").display().to_string()], "io"),
    ];
    for (args, kind) in cases {
        let out = farcs().args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
        let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(err["error"]["kind"], kind, "{args:?}");
        assert!(err["error"]["message"].is_string());
    }
}
