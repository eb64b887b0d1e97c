use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_levy-kac"));
    c.env_remove("LEVY_KAC_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Rows of a CSV as string cells, header first.
fn cells(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let rows = cells(text);
    let j = rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows[1..].iter().map(|r| r[j].parse().unwrap()).collect()
}

fn sidecar(dir: &Path, command: &str) -> String {
    fs::read_to_string(dir.join(format!("{command}.meta"))).unwrap()
}

#[test]
fn stable_density_at_zero_matches_closed_form() {
    let o = run(&["stable-density", "--alpha", "1.5", "--sigma", "1", "--beta", "0", "--x", "0"]);
    assert_eq!(code(&o), 0);
    // Γ(1 + 2/3) / π
    let want = 0.902_745_292_950_933_6 / std::f64::consts::PI;
    let got = column(&stdout(&o), "density")[0];
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

#[test]
fn negative_arguments_are_accepted() {
    let o = run(&["stable-density", "--alpha", "1.5", "--sigma", "1", "--beta", "-1", "--x", "-2,0,2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&stdout(&o), "x"), vec![-2.0, 0.0, 2.0]);
}

#[test]
fn floats_round_trip_with_seventeen_digits() {
    let o = run(&["stable-density", "--alpha", "1.7", "--sigma", "0.3", "--beta", "0.5", "--x", "0.1"]);
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let cell = &cells(&text)[1][1];
    let mantissa = cell.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{cell}");
    let v: f64 = cell.parse().unwrap();
    assert_eq!(&format!("{v:.16e}"), cell);
}

#[test]
fn uniform_sphere_law_has_zero_entropy() {
    let o = run(&["chaos", "--model", "gauss", "--n", "64"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(
        cells(&text)[0],
        ["N", "l1_k1", "l1_k2", "entropy_pp", "entropy_target", "w1", "pinsker_margin"]
    );
    assert!(column(&text, "entropy_pp")[0].abs() < 1e-6);
}

#[test]
fn clt_schema_and_profile() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let o = run(&["clt", "--n", "16,64", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("clt.csv")).unwrap();
    assert_eq!(cells(&text)[0], ["N", "sup_err", "gamma0_ratio", "xi_max", "beta_N", "trusted"]);
    let sup = column(&text, "sup_err");
    assert!(sup[1] < sup[0]);
    assert!(cells(&text)[1..].iter().all(|r| r[5] == "true"));
    let profile = fs::read_to_string(out.join("clt_profile.csv")).unwrap();
    assert_eq!(profile.lines().count(), 1 + 2 * 401);
    assert!(sidecar(&out, "clt").contains("command = clt"));
}

#[test]
fn literal_cosine_fails_certification() {
    let o = run(&["clt", "--n", "16", "--cosine", "literal"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("envelope"));
}

#[test]
fn exit_codes_for_bad_input() {
    assert_eq!(code(&run(&["chaos", "--bogus"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["clt", "--grid-pow", "8"])), 2);
    assert_eq!(code(&run(&["clt", "--grid-pow", "23"])), 2);
    assert_eq!(code(&run(&["clt", "--tau", "0"])), 2);
    assert_eq!(code(&run(&["clt", "--n", "64,16"])), 2);
    assert_eq!(code(&run(&["clt", "--model", "gauss", "--n", "16"])), 2);
    assert_eq!(code(&run(&["chaos", "--model", "cauchy"])), 2);
    assert_eq!(code(&run(&["stable-density", "--alpha", "2.5", "--sigma", "1", "--beta", "0"])), 2);
}

#[test]
fn empty_sweep_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("empty.cfg");
    fs::write(&cfg, "n =\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!out.join("summary.csv").exists());
    assert_eq!(code(&run(&["sweep", "--n", "16"])), 2, "sweep without an output directory");
}

#[test]
fn config_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# defaults for this study\nmodel = gauss\nthreads = 3\ngrid-pow = 12\n").unwrap();
    let out = dir.path().join("out");
    let o = |extra: &[&str], env: Option<&str>| {
        let mut c = bin();
        c.args(["density-info", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        c.args(extra);
        if let Some(t) = env {
            c.env("LEVY_KAC_THREADS", t);
        }
        let r = c.output().unwrap();
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        sidecar(&out, "density-info")
    };
    let meta = o(&[], Some("5"));
    assert!(meta.contains("model = gauss") && meta.contains("threads = 3") && meta.contains("grid_pow = 12"));
    let meta = o(&["--model", "quartic", "--threads", "2"], None);
    assert!(meta.contains("model = quartic") && meta.contains("threads = 2"));

    fs::write(&cfg, "model = gauss\n").unwrap();
    assert!(o(&[], Some("4")).contains("threads = 4"));
    assert!(o(&[], None).contains("threads = 0"));

    fs::write(&cfg, "modle = gauss\n").unwrap();
    let r = run(&["density-info", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&r), 2);
}

#[test]
fn density_info_reports_closed_forms() {
    let o = run(&["density-info", "--model", "quartic"]);
    let rows = cells(&stdout(&o));
    let get = |k: &str| -> f64 { rows.iter().find(|r| r[0] == k).unwrap()[1].parse().unwrap() };
    assert!((get("mass") - 1.0).abs() < 1e-8);
    assert!((get("c_s") - 2.0 * 2f64.sqrt() / std::f64::consts::PI).abs() < 1e-12);
    assert!((get("fisher_relative") - 0.5).abs() < 1e-6);
}

#[test]
fn gaussian_sphere_marginal_is_closed_form() {
    // Π₁(v) = Γ(N/2) / (Γ((N−1)/2) √(πN)) (1 − v²/N)^{(N−3)/2}; for N = 16, Γ(8)/Γ(7.5) = 5040·128/(135135 √π).
    let n = 16.0;
    let ratio = 5040.0 * 128.0 / (135_135.0 * std::f64::consts::PI.sqrt());
    let o = run(&["marginal", "--model", "gauss", "--n", "16", "--points", "9", "--v-max", "3"]);
    let text = stdout(&o);
    for (v, m) in column(&text, "v").into_iter().zip(column(&text, "marginal")) {
        let want = ratio / (std::f64::consts::PI * n).sqrt() * (1.0 - v * v / n).powf((n - 3.0) / 2.0);
        assert!((m - want).abs() < 1e-9, "v = {v}: {m} vs {want}");
    }
}

#[test]
fn cross_entropy_of_identical_laws_vanishes() {
    let o = run(&["cross-entropy", "--model", "quartic", "--base", "quartic", "--n", "64"]);
    let text = stdout(&o);
    assert_eq!(cells(&text)[0], ["N", "value", "target"]);
    assert!(column(&text, "value")[0].abs() < 1e-9);
    assert!(column(&text, "target")[0].abs() < 1e-12);
}

#[test]
fn highfreq_gap_for_chi_square() {
    let o = run(&["highfreq", "--model", "gauss", "--beta", "1"]);
    let eta = column(&stdout(&o), "eta")[0];
    assert!((eta - (1.0 - 5f64.powf(-0.25))).abs() < 1e-9);
}

#[test]
fn fda_schema_and_negative_control() {
    let dir = TempDir::new().unwrap();
    let o = run(&["fda", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("fda.csv")).unwrap();
    assert_eq!(cells(&text)[0], ["beta", "omega"]);
    let w = column(&text, "omega");
    assert!(w.windows(2).all(|p| p[1] < p[0]));
    let order = fs::read_to_string(dir.path().join("fda_order.csv")).unwrap();
    assert!(cells(&order)[1][4] == "true");

    let o = run(&["fda", "--sigma-scale", "2", "--beta", "0.001"]);
    assert!(column(&stdout(&o), "omega")[0] > 1.0);
}
