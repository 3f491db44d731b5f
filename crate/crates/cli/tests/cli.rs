use std::path::Path;
use std::process::{Command, Output};

use oufet::mean_exit::met_interval;
use oufet::spectral::SpectralBasis;
use serde_json::Value;

fn oufet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oufet")).args(args).env_remove("OUFET_OUT_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV body (comment lines and header skipped).
fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn error_json(o: &Output) -> Value {
    let err = String::from_utf8_lossy(&o.stderr);
    let line = err.lines().last().unwrap();
    serde_json::from_str(line).unwrap()
}

#[test]
fn mean_exit_curve_rises_and_meets_its_asymptote() {
    let out = stdout(&oufet(&["mean-exit", "--kappa", "0..20", "--count", "21", "--phi", "0", "--z0", "0", "--asymptotic"]));
    let r = rows(&out);
    assert_eq!(r.len(), 21);
    assert!(r.windows(2).all(|w| w[1][1] > w[0][1]));
    assert_eq!(r[0][1], 0.5);
    // values are written losslessly
    assert_eq!(r[7][1], met_interval(7.0, 0.0, 0.0).unwrap());
    let gaps: Vec<f64> = r.iter().filter(|x| x[0] >= 8.0).map(|x| (x[2] / x[1] - 1.0).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    for x in r.iter().filter(|x| x[0] >= 12.0) {
        assert!((x[2] / x[1] - 1.0).abs() < 0.05, "kappa {}", x[0]);
    }
}

#[test]
fn physical_units_reproduce_the_tracer_times() {
    let out = stdout(&oufet(&["mean-exit", "--stiffness", "1e-6", "--length", "9.0996e-8,1.81992e-7"]));
    let r = rows(&out);
    assert!((r[0][1] / 27.2e-3 - 1.0).abs() < 0.01);
    assert!((r[1][1] / 517e-3 - 1.0).abs() < 0.01);
}

#[test]
fn forced_survival_profiles_lean_left() {
    let out = stdout(&oufet(&["survival", "--geometry", "interval", "--kappa", "1", "--phi", "0.9", "--times", "0.1,0.5,1", "--count", "201"]));
    assert!(out.lines().any(|l| l.starts_with("z0,S(t=0.1),S(t=0.5),S(t=1)")));
    let r = rows(&out);
    for col in 1..4 {
        let best = r.iter().max_by(|a, b| a[col].total_cmp(&b[col])).unwrap();
        assert!(best[0] < 0.0, "column {col} peaks at {}", best[0]);
    }
}

#[test]
fn mgf_at_zero_is_one() {
    let out = stdout(&oufet(&["mgf", "--s", "0", "--count", "11"]));
    let r = rows(&out);
    assert_eq!(r.len(), 11);
    for x in &r {
        assert!((x[1] - 1.0).abs() < 1e-12, "{x:?}");
    }
}

#[test]
fn two_sweeps_are_a_usage_error() {
    let o = oufet(&["mean-exit", "--kappa", "0..1", "--phi", "0..1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["kind"], "usage");
    let o = oufet(&["mean-exit", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    let o = oufet(&["mean-exit", "--kappa", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["kind"], "domain");
}

#[test]
fn solver_failures_exit_with_one() {
    let o = oufet(&["simulate", "--paths", "10", "--t-max", "1e-3", "--delta", "1e-4"]);
    assert_eq!(o.status.code(), Some(1));
    let e = error_json(&o);
    assert_eq!(e["error"]["kind"], "all_censored");
    assert_eq!(e["error"]["exit_code"], 1);
}

#[test]
fn config_file_sits_below_command_line_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, "{\n  \"kappa\": 2,\n  \"z0\": [0, 0.5]\n}\n").unwrap();
    let c = cfg.to_str().unwrap();
    let r = rows(&stdout(&oufet(&["mean-exit", "--config", c])));
    assert_eq!(r[1][1], met_interval(2.0, 0.0, 0.5).unwrap());
    let out = stdout(&oufet(&["mean-exit", "--config", c, "--kappa", "3"]));
    assert_eq!(rows(&out)[1][1], met_interval(3.0, 0.0, 0.5).unwrap());
    assert!(out.contains("\"kappa\":\"3\""), "effective config is echoed");
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("{\n  \"kappa\": 2,\n  \"bogus\": 1\n}\n", 3),
        ("{\n  \"kappa\": 2,\n  \"phi\": \"abc\"\n}\n", 3),
        ("{\n  \"asymptotic\": 1\n}\n", 2),
        ("{\n  \"kappa\": 2,\n  \"phi\": 1,\n", 4),
    ];
    for (i, (text, line)) in cases.iter().enumerate() {
        let p = dir.path().join(format!("c{i}.json"));
        std::fs::write(&p, text).unwrap();
        let o = oufet(&["mean-exit", "--config", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2));
        let e = error_json(&o);
        assert_eq!(e["error"]["kind"], "config");
        assert_eq!(e["error"]["line"], *line, "case {i}: {e}");
    }
}

#[test]
fn output_directory_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_oufet"))
        .args(["splitting", "--count", "5", "--format", "json"])
        .env("OUFET_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("splitting.json")).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert!((v["rows"][2][1].as_f64().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn csv_is_rfc4180() {
    let out = stdout(&oufet(&["survival", "--z0", "0", "--times", "0.1,0.5"]));
    // no other sweep, so the listed times become the rows
    assert!(out.split("\r\n").any(|l| l == "t,S"));
    assert!(!out.replace("\r\n", "").contains('\n'));
    let digits = out.lines().last().unwrap().split(',').nth(1).unwrap().split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(digits.len(), 17);
}

#[test]
fn spectrum_dumps_the_basis() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("basis.json");
    let out = stdout(&oufet(&["spectrum", "--kappa", "2", "--modes", "4", "--basis-json", p.to_str().unwrap()]));
    let b = SpectralBasis::from_json(&std::fs::read_to_string(&p).unwrap()).unwrap();
    let r = rows(&out);
    for n in 0..4 {
        assert_eq!(r[0][n + 1], b.alphas[n] * b.alphas[n]);
    }
    let o = oufet(&["spectrum", "--basis-json", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulation_is_reproducible() {
    let args = ["simulate", "--paths", "300", "--seed", "5", "--delta", "1e-3"];
    let a = stdout(&oufet(&args));
    assert_eq!(a, stdout(&oufet(&args)));
    let lines: Vec<&str> = a.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "exit_time,side,censored");
    assert_eq!(lines.len(), 301);
    assert!(lines[1..].iter().all(|l| l.ends_with(",false") && (l.contains(",lower,") || l.contains(",upper,"))));
}

#[test]
fn other_models_run() {
    let r = rows(&stdout(&oufet(&["single-barrier", "--ell", "0", "--t", "0.5,1,2"])));
    assert_eq!(r.len(), 3);
    let r = rows(&stdout(&oufet(&["double-well", "--x", "-1,1", "--t", "200"])));
    // the stiffer left well holds a taller, narrower peak at equilibrium
    assert!(r[1][1] > 0.0 && r[0][1] > r[1][1]);
    let r = rows(&stdout(&oufet(&["sqrt-boundary", "--quantity", "moment", "--nu", "0"])));
    assert!((r[0][1] - 1.0).abs() < 1e-12);
    let r = rows(&stdout(&oufet(&["ctrw", "--t", "1e2,1e4"])));
    let slope = (r[1][1] / r[0][1]).ln() / 100f64.ln();
    assert!((slope + 0.5).abs() < 0.05);
    let r = rows(&stdout(&oufet(&["density", "--z0", "0", "--t", "0.5"])));
    assert!(r[0][1] > 0.0);
}

#[test]
fn specfun_eval_prints_json() {
    let v: Value = serde_json::from_str(&stdout(&oufet(&["specfun", "eval", "kummer-m", "--a", "-5", "--b", "0.5", "--z", "1"]))).unwrap();
    let want = oufet::specfun::kummer_m(-5.0, 0.5, 1.0).unwrap().value;
    assert_eq!(v["value"].as_f64().unwrap(), want);
    assert_eq!(v["function"], "kummer-m");
    let v: Value = serde_json::from_str(&stdout(&oufet(&["specfun", "eval", "gamma", "--x", "-1"]))).unwrap();
    assert_eq!(v["value"], "inf");
    assert_eq!(oufet(&["specfun", "eval", "parabolic-d", "--nu", "1"]).status.code(), Some(2));
    let help = stdout(&oufet(&["--help"]));
    assert!(!help.contains("specfun"));
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn figure_pack_is_complete_and_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    stdout(&oufet(&["figure-pack", "--out-dir", a.path().to_str().unwrap(), "--paths", "20000"]));
    stdout(&oufet(&["figure-pack", "--out-dir", b.path().to_str().unwrap(), "--paths", "20000"]));
    let fa = read_all(a.path());
    assert_eq!(fa, read_all(b.path()));
    let m: Value = serde_json::from_slice(&fa.iter().find(|f| f.0 == "manifest.json").unwrap().1).unwrap();
    let files: Vec<&str> = m["panels"].as_array().unwrap().iter().map(|p| p["file"].as_str().unwrap()).collect();
    let want: Vec<String> = (1..=7).flat_map(|n| ["a", "b"].map(|p| format!("fig{n}{p}.csv"))).collect();
    assert_eq!(files, want);
    assert_eq!(fa.len(), 15);

    // spectral density and histogram agree where the mass is
    let text = std::fs::read_to_string(a.path().join("fig7a.csv")).unwrap();
    let r = rows(&text);
    let (mut num, mut den) = (0.0, 0.0);
    for x in &r {
        // p(t=0.5) in column 2, its histogram in column 6
        num += (x[2] - x[6]).abs();
        den += x[2];
    }
    assert!(num / den < 0.1, "{}", num / den);
    // Brownian circles of fig1b are (1 - z0^2)/2
    let r = rows(&std::fs::read_to_string(a.path().join("fig1b.csv")).unwrap());
    assert!(r.iter().all(|x| x[5] == 0.5 * (1.0 - x[0] * x[0])));
}
