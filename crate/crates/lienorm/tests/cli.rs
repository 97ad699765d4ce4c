//! End-to-end runs of the command-line tool.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lienorm::format::read_kv;
use lienorm_core::constants::PhysicalConstants;
use lienorm_core::j2::average_j2;

fn lienorm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lienorm")).args(args).arg("--output").arg(out).output().expect("failed to run lienorm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// CSV rows of the named table in a report.
fn rows(csv: &str, table: &str) -> Vec<Vec<String>> {
    let mut lines = csv.lines().skip_while(|l| *l != format!("# table: {table}")).skip(2);
    let mut out = Vec::new();
    for l in lines.by_ref() {
        if l.is_empty() {
            break;
        }
        out.push(l.split(',').map(str::to_string).collect());
    }
    out
}

/// Secular Kepler + averaged J2 energy as a function of the Delaunay actions.
fn secular_energy(l: f64, p: f64, q: f64, k: &PhysicalConstants) -> (f64, f64) {
    let g = l - p;
    let e = (1.0 - (g / l).powi(2)).max(0.0).sqrt();
    let i = ((g - q) / g).clamp(-1.0, 1.0).acos();
    (-k.mu_e * k.mu_e / (2.0 * l * l), average_j2(l * l / k.mu_e, e, i, k))
}

/// One-sided derivative with Richardson extrapolation.
fn forward_derivative(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(0.0)) / h;
    2.0 * d(h / 2.0) - d(h)
}

#[test]
fn build_writes_linear_part_matching_the_secular_frequencies() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lienorm(tmp.path(), &["build", "--model", "j2", "--a-star-km", "42164"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let man = read_kv(&fs::read_to_string(tmp.path().join("j2_hamiltonian.manifest")).unwrap()).unwrap();
    let lin: Vec<f64> = man["linear_part"].split_whitespace().map(|v| v.parse().unwrap()).collect();

    let k = PhysicalConstants::default();
    let l = k.big_l(42164.0 / k.r_e_km);
    let h = 1e-4 * l;
    let kep = |dl: f64| secular_energy(l + dl, 0.0, 0.0, &k).0;
    let j2 = |dl: f64| secular_energy(l + dl, 0.0, 0.0, &k).1;
    let n = (kep(h) - kep(-h)) / (2.0 * h) + (j2(h) - j2(-h)) / (2.0 * h);
    let wp = forward_derivative(&|p| secular_energy(l, p, 0.0, &k).1, 1e-2);
    let wq = forward_derivative(&|q| secular_energy(l, 0.0, q, &k).1, 1e-2);
    for (got, want) in lin.iter().zip([n, wp, wq]) {
        assert!((got - want).abs() <= 1e-6 * want.abs(), "linear part {lin:?} vs {:?}", [n, wp, wq]);
    }
}

#[test]
fn gls_manifest_has_the_equilibrium() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lienorm(tmp.path(), &["build", "--model", "gls", "--altitude-km", "35786", "--N", "8"]);
    assert!(o.status.success());
    let man = read_kv(&fs::read_to_string(tmp.path().join("gls_hamiltonian.manifest")).unwrap()).unwrap();
    for key in ["i_eq", "nu1", "nu2"] {
        assert!(man.get(key).is_some_and(|v| v.parse::<f64>().is_ok()), "missing {key}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(lienorm(tmp.path(), &["build", "--altitude-km", "0"]).status.code(), Some(2));
    assert_eq!(lienorm(tmp.path(), &["build", "--model", "nope"]).status.code(), Some(2));
    assert_eq!(lienorm(tmp.path(), &["report", "--table", "12", "--N", "5"]).status.code(), Some(2));
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "bogus_key = 1\n").unwrap();
    let o = lienorm(tmp.path(), &["build", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_overrides_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "model = gls\nN = 6\n").unwrap();
    let o = lienorm(tmp.path(), &["build", "--model", "j2", "--N", "9", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("# model = gls") && out.contains("# N = 6"), "{out}");
}

#[test]
fn normalize_checks_structure_and_warns_on_high_order() {
    let tmp = tempfile::tempdir().unwrap();
    for model in ["j2", "gls"] {
        let o = lienorm(tmp.path(), &["normalize", "--model", model, "--N", "9", "--M", "8"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
        let r = rows(&stdout(&o), "normal_form");
        let resid: f64 = r.iter().find(|r| r[0] == "structural_residual").unwrap()[1].parse().unwrap();
        assert!(resid < 1e-14);
        assert!(tmp.path().join(format!("{model}_normal_form/manifest.txt")).exists());
    }
}

#[test]
fn identical_configurations_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["estimate-kozai", "--model", "gls", "--N", "8", "--grid-e", "5", "--grid-i", "5", "--angle-nodes", "6"];
    let oa = lienorm(a.path(), &args);
    let ob = lienorm(b.path(), &args);
    assert!(oa.status.success());
    assert_eq!(oa.stdout, ob.stdout);
    let j = lienorm(a.path(), &[&args[..], &["--emit", "json"]].concat());
    let doc: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert!(doc["config_hash"].is_string() && doc["constants_fingerprint"].is_string());
    let csv = fs::read_to_string(a.path().join("estimate-kozai.csv")).unwrap();
    assert!(csv.contains("# config_hash = ") && csv.contains("# constants_fingerprint = "));
    let cache: Vec<_> = fs::read_dir(a.path().join("cache")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(cache.len(), 1);
    for f in fs::read_dir(a.path().join("cache").join(&cache[0])).unwrap() {
        let name = f.unwrap().file_name();
        let fa = fs::read(a.path().join("cache").join(&cache[0]).join(&name)).unwrap();
        let fb = fs::read(b.path().join("cache").join(&cache[0]).join(&name)).unwrap();
        assert_eq!(fa, fb, "{name:?}");
    }
}

#[test]
fn report_tables_have_the_reference_shapes() {
    let tmp = tempfile::tempdir().unwrap();
    let fast = ["--N", "7", "--M", "4", "--grid-e", "5", "--grid-i", "5", "--angle-nodes", "6"];
    let t1 = lienorm(tmp.path(), &[&["report", "--table", "1"][..], &fast].concat());
    assert!(t1.status.success());
    assert_eq!(rows(&stdout(&t1), "j2_stability").len(), 4);
    let t4 = lienorm(tmp.path(), &[&["report", "--table", "4"][..], &fast].concat());
    let r = rows(&stdout(&t4), "gls_stability");
    assert_eq!(r.len(), 5);
    assert!(r.iter().all(|row| row[11].parse::<f64>().is_ok_and(f64::is_finite)));
    let f5 = lienorm(tmp.path(), &[&["report", "--fig", "5", "--points", "6"][..], &fast].concat());
    let r = rows(&stdout(&f5), "stability_time_vs_a");
    assert_eq!(r.len(), 6);
    assert_eq!(r[0][0].parse::<f64>().unwrap(), 1.15679);
    assert!((r[5][0].parse::<f64>().unwrap() - 16.6786).abs() < 1e-12);
}

#[test]
fn oracle_flags_bound_satisfaction() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lienorm(tmp.path(), &["oracle", "--model", "j2", "--N", "7", "--M", "4", "--samples", "2", "--horizon", "0.05"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o), "oracle");
    assert_eq!(r.len(), 2);
    assert!(r.iter().all(|row| row[6] == "true"));
    assert!(tmp.path().join("j2_oracle/trajectory_001.txt").exists());
}

#[test]
fn steepness_grade_cap_is_echoed_and_applied() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ["steepness", "--model", "j2", "--N", "7", "--M", "4", "--steep-grid", "5"];
    let full = lienorm(tmp.path(), &base);
    let capped = lienorm(tmp.path(), &[&base[..], &["--secular-grade-cap", "2"]].concat());
    assert!(full.status.success() && capped.status.success(), "{}", String::from_utf8_lossy(&capped.stderr));
    assert!(stdout(&capped).contains("# secular_grade_cap = 2"));
    assert_ne!(rows(&stdout(&full), "steepness"), rows(&stdout(&capped), "steepness"));
}
