//! End-to-end runs of the `streaming-svrg` binary.

use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

const SMOKE: &str = r#"
seed = 5
[problem]
family = "least_squares"
d = 2
[schedule]
preset = "practical"
budget = 10000
"#;

fn bin(args: &[&str], cfg: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_streaming-svrg"));
    cmd.args(args);
    if let Some(cfg) = cfg {
        cmd.arg("--config").arg(cfg);
    }
    cmd.output().unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn smoke_simulate_is_fast_and_one_row_per_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "smoke.toml", SMOKE);
    let t = Instant::now();
    let o = bin(&["simulate"], Some(&cfg));
    assert!(t.elapsed().as_secs_f64() < 1.0);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("stage,N_s,excess_risk,grad_evals,seed"));
    let stages = stderr(&o).split(": ").nth(1).unwrap().split(' ').next().unwrap().parse::<usize>().unwrap();
    assert_eq!(lines.count(), stages);
    assert!(stderr(&o).contains("sigma^2/N"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "smoke.toml", SMOKE);
    let a = stdout(&bin(&["simulate"], Some(&cfg)));
    let b = stdout(&bin(&["simulate", "--seed", "5"], Some(&cfg)));
    let c = stdout(&bin(&["simulate", "--seed", "6"], Some(&cfg)));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(c.lines().nth(1).unwrap().ends_with(",6"));
}

#[test]
fn thread_count_does_not_change_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "big.toml", &SMOKE.replace("budget = 10000", "budget = 200000"));
    let a = bin(&["simulate", "--threads", "1"], Some(&cfg));
    let b = bin(&["simulate", "--threads", "4"], Some(&cfg));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "smoke.toml", SMOKE);
    let out = dir.path().join("trace.csv");
    let o = bin(&["simulate", "--out", out.to_str().unwrap()], Some(&cfg));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    assert!(std::fs::read_to_string(out).unwrap().starts_with("stage,N_s"));
}

#[test]
fn config_errors_exit_two_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(&dir, "m.toml", "[problem]\nd = 3\n");
    let o = bin(&["simulate"], Some(&missing));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing key: problem.family"));

    let unknown = write(&dir, "u.toml", "[problem]\nfamily = \"ridge\"\nd = 3\nlambda = 1.0\ncolour = 1\n");
    let o = bin(&["simulate"], Some(&unknown));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));

    let negative = write(&dir, "n.toml", "[problem]\nfamily = \"ridge\"\nd = 3\nlambda = -0.5\n");
    let o = bin(&["check"], Some(&negative));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("problem.lambda"));

    let o = bin(&["simulate"], Some(&dir.path().join("absent.toml")));
    assert_eq!(o.status.code(), Some(2));

    let o = bin(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn default_check_passes() {
    let o = bin(&["check"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let log = stderr(&o);
    assert!(log.lines().all(|l| l.starts_with("PASS ")), "{log}");
    for suite in ["gradient_fd", "lemma1", "lemma2", "self_concordance", "hessian_bound", "unbiasedness", "schedule_algebra", "kurtosis"] {
        assert!(log.contains(&format!("PASS {suite}[")), "{suite}");
    }
}

#[test]
fn check_report_file_has_one_row_per_probe() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "[problem]\nfamily = \"ridge\"\nd = 2\nlambda = 0.5\n[check]\nprobes = 7\ndraws = 500\n",
    );
    let out = dir.path().join("report.csv");
    let o = bin(&["check", "--out", out.to_str().unwrap()], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("suite,problem,probe,lhs,lhs_std_err,rhs,passed\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("lemma1,")).count(), 7);
}

#[test]
fn compare_with_one_trial_warns_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.toml", "trials = 1\nn_grid = [2000, 4000]\n[problem]\nfamily = \"least_squares\"\nd = 2\n");
    let o = bin(&["compare"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("CI unavailable"));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "2000");
    assert!(row[1].parse::<f64>().is_ok());
}

#[test]
fn noiseless_compare_marks_the_ratio_undefined() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "trials = 5\nn_grid = [3000]\n[problem]\nfamily = \"least_squares\"\nd = 2\nsigma_noise = 0.0\n",
    );
    let o = bin(&["compare"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "erm_over_streaming").unwrap();
    assert_eq!(row[col], "undefined");
}

#[test]
fn sweep_writes_the_experiment_schema() {
    let dir = tempfile::tempdir().unwrap();
    for sweep in ["erm", "streaming"] {
        let cfg = write(
            &dir,
            "s.toml",
            &format!("trials = 20\nn_grid = [1000, 2000]\nsweep = \"{sweep}\"\n[problem]\nfamily = \"least_squares\"\nd = 2\n"),
        );
        let o = bin(&["sweep"], Some(&cfg));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = stdout(&o);
        assert!(text.starts_with("N,mean_excess,ci_lo,ci_hi,ratio_to_sigma2_over_N,failures\n"));
        assert_eq!(text.lines().count(), 3);
    }
}

#[test]
fn sweep_needs_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "s.toml", "[problem]\nfamily = \"least_squares\"\nd = 2\n");
    let o = bin(&["sweep"], Some(&cfg));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing key: n_grid"));
}
