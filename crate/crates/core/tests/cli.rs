use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ikm::cli::{parse_trace_csv, RunConfig, TRACE_HEADER};

fn ikm(args: &[&str], dir: &Path, envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ikm"));
    cmd.args(args).current_dir(dir);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn ikm")
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn picard_on_contraction_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "q.cfg",
        "problem.kind = quadratic\nproblem.dim = 20\nalgorithm.scheme = gradient\n\
         stopping.residual_tol = 1e-9\noutputs.trace_path = t.csv\n",
    );
    let o = ikm(&["run", cfg.to_str().unwrap()], dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("status: converged"));
    let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(text.starts_with("# config: problem.kind = quadratic\n"));
    assert!(text.lines().any(|l| l == TRACE_HEADER));
    let parsed = parse_trace_csv(&text).unwrap();
    assert!(parsed.rows.last().unwrap().residual <= 1e-9);
    // the embedded config is complete: it parses back to the run's config
    let original = RunConfig::parse(&fs::read_to_string(&cfg).unwrap()).unwrap();
    assert_eq!(RunConfig::parse(&parsed.config).unwrap(), original);
}

#[test]
fn trace_goes_to_stdout_without_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "q.cfg",
        "problem.kind = quadratic\nproblem.dim = 5\nalgorithm.scheme = gradient\nstopping.max_iters = 7\n",
    );
    let o = ikm(&["run", cfg.to_str().unwrap()], dir.path(), &[]);
    assert_eq!(code(&o), 2);
    let parsed = parse_trace_csv(&stdout(&o)).unwrap();
    assert_eq!(parsed.rows.len(), 7);
    assert!(String::from_utf8_lossy(&o.stderr).contains("status: max_iters"));
}

#[test]
fn inertial_lasso_trace_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "l.cfg",
        "problem.kind = lasso\nalgorithm.scheme = fb\nschedule.alpha_value = 0.2\n\
         schedule.lambda_value = 0.5\nstopping.max_iters = 3000\nstopping.residual_tol = 1e-13\n\
         outputs.trace_path = l.csv\noutputs.checks = lemma1, ck_monotone\n",
    );
    let o = ikm(&["run", cfg.to_str().unwrap()], dir.path(), &[]);
    assert!(matches!(code(&o), 0 | 2));
    let o = ikm(&["certify", "l.csv"], dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("lemma1: PASS"));
    assert!(out.contains("ck_monotone: PASS"));
    assert!(out.contains("contraction: skipped"));
}

#[test]
fn tampered_trace_fails_certification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "q.cfg",
        "problem.kind = quadratic\nproblem.dim = 6\nalgorithm.scheme = gradient\n\
         schedule.alpha_value = 0.1\nschedule.lambda_value = 0.8\nstopping.max_iters = 30\noutputs.trace_path = q.csv\n",
    );
    ikm(&["run", cfg.to_str().unwrap()], dir.path(), &[]);
    let text = fs::read_to_string(dir.path().join("q.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let i = lines.iter().position(|l| l.starts_with("10,")).unwrap();
    let mut fields: Vec<String> = lines[i].split(',').map(String::from).collect();
    fields[6] = "1.0e6".into();
    lines[i] = fields.join(",");
    fs::write(dir.path().join("bad.csv"), lines.join("\n")).unwrap();
    let o = ikm(&["certify", "bad.csv"], dir.path(), &[]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("ck_monotone: FAIL"));
    fs::write(dir.path().join("junk.csv"), "not a trace\n").unwrap();
    assert_eq!(code(&ikm(&["certify", "junk.csv"], dir.path(), &[])), 64);
}

#[test]
fn forced_divergent_run_exits_three_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let body = "problem.kind = quadratic\nproblem.dim = 10\nalgorithm.scheme = gradient\n\
                schedule.lambda_value = 40\nstopping.max_iters = 5000\noutputs.trace_path = d.csv\n";
    let cfg = write_cfg(dir.path(), "d.cfg", body);
    let o = ikm(&["run", cfg.to_str().unwrap()], dir.path(), &[]);
    assert_eq!(code(&o), 64);
    assert!(!dir.path().join("d.csv").exists());

    let cfg = write_cfg(dir.path(), "f.cfg", &format!("{body}algorithm.force = true\n"));
    let o = ikm(&["run", cfg.to_str().unwrap()], dir.path(), &[]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("WARNING"));
    let text = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert!(text.contains("# WARNING: precheck failed; run forced"));
    let parsed = parse_trace_csv(&text).unwrap();
    assert!(!parsed.rows.is_empty() && parsed.rows.len() < 5000);
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_cfg(dir.path(), "bad.cfg", "problem.kind = lasso\nalgorithm.scheme = fb\nschedule.alpha = 0.2\n");
    let o = ikm(&["run", bad.to_str().unwrap()], dir.path(), &[]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(code(&ikm(&["run", "missing.cfg"], dir.path(), &[])), 64);
    assert_eq!(code(&ikm(&["frobnicate"], dir.path(), &[])), 64);
    assert_eq!(code(&ikm(&["check-params", "--alpha", "1.5", "--lambda", "0.5"], dir.path(), &[])), 64);
    assert_eq!(code(&ikm(&["lambda-grid", "--alpha-steps", "1"], dir.path(), &[])), 64);
    let wrong = write_cfg(dir.path(), "w.cfg", "problem.kind = tv1d\nproblem.n = 20\nalgorithm.scheme = fb\n");
    assert_eq!(code(&ikm(&["run", wrong.to_str().unwrap()], dir.path(), &[])), 64);
}

#[test]
fn check_params_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = ikm(&["check-params", "--alpha", "0", "--lambda", "0.5"], dir.path(), &[]);
    assert_eq!(code(&o), 0);
    let o = ikm(&["check-params", "--alpha", "0.2", "--lambda", "0.5"], dir.path(), &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("lhs=4.4"));
    let o = ikm(
        &["check-params", "--alpha", "0.5", "--lambda", "0.9", "--q", "0.9", "--xi", "1"],
        dir.path(),
        &[],
    );
    assert_eq!(code(&o), 1);
    let h2 = stdout(&o).lines().find(|l| l.starts_with("H2")).unwrap().to_string();
    assert!(h2.contains("FAIL") && h2.contains("margin=-"), "{h2}");
}

#[test]
fn lambda_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = ikm(
        &["lambda-grid", "--alpha-steps", "10", "--q-steps", "9", "--out", "g.csv"],
        dir.path(),
        &[],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("g.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("alpha"))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 90);
    assert!(text.lines().nth(1).unwrap() == "alpha,q,lambda_alpha_q");
    for r in &rows {
        if r[0] == 0.0 {
            assert_eq!(r[2], 1.0);
        } else {
            assert!(r[2] > 0.0 && r[2] < 1.0);
        }
    }
}

#[test]
fn sweep_report_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "s.cfg",
        "problem.kind = quadratic\nproblem.dim = 30\nalgorithm.scheme = gradient\n\
         stopping.residual_tol = 1e-8\noutputs.report_path = s.csv\n\
         sweep.schedules = 0.3:0.9, 0.1:0.9, 0.2:0.5, 0.7:0.99\n",
    );
    let mut reports = Vec::new();
    for threads in ["1", "4"] {
        let o = ikm(&["sweep", cfg.to_str().unwrap()], dir.path(), &[("IKM_THREADS", threads)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("vs baseline"));
        reports.push(fs::read(dir.path().join("s.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let text = String::from_utf8(reports.pop().unwrap()).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    // four listed schedules and one added baseline per distinct lambda
    assert_eq!(rows.len(), 7);
    assert!(rows[3].ends_with("precheck_failed"));
    assert!(rows[4].starts_with("0.0000000000000000e0,9.0000000000000002e-1,true"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(&root).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "cfg") {
            RunConfig::parse(&fs::read_to_string(&p).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}
