use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spatial_mlp::config::ExperimentConfig;
use spatial_mlp::pipeline::config_from_meta;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spatial-mlp"))
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let o = bin()
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs");
    o
}

fn ok(o: Output) -> Output {
    assert!(
        o.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn records(path: &Path) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    let rows = r.records().map(|x| x.unwrap()).collect();
    (header, rows)
}

const TOY: &str = r#"
seed = 11

[simulation]
design = "sim1-strong"
n = 100

[kernel]
family = "matern"
lambda = 20.0

[approx]
method = "exact"

[mcmc]
iterations = 300
burnin = 100
"#;

#[test]
fn simulate_strong_design_writes_2000_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.toml",
        "seed = 1\n[simulation]\ndesign = \"sim1-strong\"\n[kernel]\nfamily = \"matern\"\nlambda = 20.0\n[approx]\nmethod = \"exact\"\n",
    );
    let out = dir.path().join("out");
    ok(run("simulate", &cfg, &out, &[]));
    let (header, rows) = records(&out.join("dataset.csv"));
    assert_eq!(header.iter().collect::<Vec<_>>(), ["x", "y", "x1", "value"]);
    assert_eq!(rows.len(), 2000);
    assert!(rows.iter().all(|r| r.len() == 4));
    assert_eq!(records(&out.join("train.csv")).1.len(), 1500);
    assert_eq!(records(&out.join("test.csv")).1.len(), 500);
    let meta = std::fs::read_to_string(out.join("dataset.meta.txt")).unwrap();
    assert!(meta.contains("# seed: 1"));
}

#[test]
fn fit_exact_toy_keeps_iterations_minus_burnin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "toy.toml", TOY);
    let out = dir.path().join("out");
    let o = ok(run("fit", &cfg, &out, &[]));
    let listed = String::from_utf8(o.stdout).unwrap();
    assert!(listed.contains("chain.csv") && listed.contains("summary.csv"));
    let (header, rows) = records(&out.join("chain.csv"));
    assert_eq!(rows.len(), 200);
    for name in ["beta_0", "beta_1", "tau2", "sigma2", "lambda"] {
        assert!(header.iter().any(|h| h == name), "missing {name} in {header:?}");
    }
    let (_, summary) = records(&out.join("summary.csv"));
    assert!(summary.iter().any(|r| &r[0] == "tau2"));

    ok(run("diagnostics", &cfg, &out, &[]));
    let (header, diag) = records(&out.join("diagnostics.csv"));
    assert_eq!(&header[4], "change_rate");
    let tau = diag.iter().find(|r| &r[0] == "tau2").unwrap();
    let rate: f64 = tau[4].parse().unwrap();
    assert!(rate > 0.0 && rate < 1.0);
}

#[test]
fn approx_error_report_decreases_along_the_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ae.toml",
        r#"
seed = 5

[simulation]
design = "sim1-strong"
n = 700
n_train = 525

[kernel]
family = "matern"
lambda = 20.0

[approx]
method = "exact"

[approx_error]
n = 500
methods = [
  { method = "lp", eps = 200.0, r = 4 },
  { method = "mlp", eps = 200.0, r = 4, gamma = 2.8 },
  { method = "mlp", eps = 200.0, r = 4, gamma = 10.0 },
]
"#,
    );
    let out = dir.path().join("out");
    ok(run("approx-error", &cfg, &out, &[]));
    let (header, rows) = records(&out.join("approx_error.csv"));
    assert_eq!(rows.len(), 3);
    let col = header.iter().position(|h| h == "frobenius").unwrap();
    let fro: Vec<f64> = rows.iter().map(|r| r[col].parse().unwrap()).collect();
    assert!(fro[0] > fro[1] && fro[1] > fro[2], "{fro:?}");
    let rank = header.iter().position(|h| h == "rank").unwrap();
    assert!(rows.iter().all(|r| r[rank] == rows[0][rank]));
}

#[test]
fn bad_config_exits_nonzero_with_field_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let typo = write_config(dir.path(), "typo.toml", &TOY.replace("burnin = 100", "burnin = 100\nburn = 1"));
    let o = run("fit", &typo, &out, &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("burn"));

    let no_eps = write_config(dir.path(), "noeps.toml", &TOY.replace("\"exact\"", "\"lp\""));
    let o = run("fit", &no_eps, &out, &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("approx.eps"));

    let missing = run("fit", &dir.path().join("absent.toml"), &out, &[]);
    assert!(!missing.status.success());

    let cfg = write_config(dir.path(), "toy.toml", TOY);
    let o = run("predict", &cfg, &dir.path().join("empty"), &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("run fit first"));
}

#[test]
fn seed_override_and_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "toy.toml", TOY);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    ok(run("fit", &cfg_path, &a, &["--seed", "99", "--threads", "1"]));
    ok(run("fit", &cfg_path, &b, &["--seed", "99", "--threads", "2"]));
    ok(run("fit", &cfg_path, &c, &[]));
    let chain = |d: &Path| std::fs::read_to_string(d.join("chain.csv")).unwrap();
    assert_eq!(chain(&a), chain(&b));
    assert_ne!(chain(&a), chain(&c));

    let meta = std::fs::read_to_string(a.join("chain.meta.txt")).unwrap();
    assert!(meta.contains("# seed: 99"));
    let echoed = config_from_meta(&meta).unwrap();
    let mut want = ExperimentConfig::load(&cfg_path).unwrap();
    want.seed = 99;
    assert_eq!(echoed, want);
}

#[test]
fn csv_data_pipeline_with_predict_and_surface() {
    let dir = tempfile::tempdir().unwrap();
    let sim = write_config(dir.path(), "sim.toml", TOY);
    let data = dir.path().join("data");
    ok(run("simulate", &sim, &data, &[]));

    // Grid regressors: intercept plus the covariate, 3x3 grid.
    let mut grid = String::from("x0,x1\n");
    for i in 0..9 {
        grid.push_str(&format!("1,{}\n", i as f64 / 10.0));
    }
    std::fs::write(dir.path().join("grid.csv"), grid).unwrap();
    let text = TOY.replace(
        "[simulation]\ndesign = \"sim1-strong\"\nn = 100\n",
        "[data]\ntrain = \"data/train.csv\"\ntest = \"data/test.csv\"\n",
    ) + "\n[predict]\nmax_draws = 50\n[predict.grid]\nbounds = [[0.0, 100.0], [0.0, 100.0]]\nresolution = 3\nmax_draws = 20\ncovariates = \"grid.csv\"\n";
    let cfg = write_config(dir.path(), "csv.toml", &text);
    let out = dir.path().join("fit");
    ok(run("fit", &cfg, &out, &[]));
    ok(run("predict", &cfg, &out, &[]));
    let (header, rows) = records(&out.join("mspe.csv"));
    assert_eq!(&header[2], "mspe");
    assert_eq!(&rows[0][1], "25");
    let mspe: f64 = rows[0][2].parse().unwrap();
    assert!(mspe.is_finite() && mspe > 0.0);
    let (_, surface) = records(&out.join("surface.csv"));
    assert_eq!(surface.len(), 9);
    assert!(out.join("predict.meta.txt").exists());
}
