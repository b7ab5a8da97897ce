use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fxxz"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(dir: &Path, name: &str, body: &str, extra: &[&str]) -> Output {
    let cfg = write_config(dir, name, body);
    bin()
        .arg("run")
        .arg("--config")
        .arg(cfg)
        .args(extra)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn compare(dir: &Path, run_csv: &Path, theory_csv: &Path) -> Output {
    bin()
        .args(["compare", "--run"])
        .arg(run_csv)
        .arg("--theory")
        .arg(theory_csv)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> toml::Table {
    fs::read_to_string(dir.join("manifest.toml"))
        .unwrap()
        .parse()
        .unwrap()
}

fn checksums(dir: &Path) -> Vec<(String, String)> {
    manifest(dir)["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| {
            (
                o["file"].as_str().unwrap().to_string(),
                o["sha256"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

fn theory_config(phi: &str, out: &str) -> String {
    format!(
        "experiment = \"theory\"\nsites = 24\nphotons = [1, 2, 3, 4, 5]\ntheta = \"pi/6\"\nphi = \"{phi}\"\noutput = \"{out}\"\n"
    )
}

const SPECTROSCOPY: &str = "experiment = \"spectroscopy\"\nsites = 24\nphotons = 2\ntheta = \"pi/6\"\nphi = \"2pi/3\"\noutput = \"spec\"\n";

#[test]
fn theory_writes_dispersion_per_photon_number() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), "t.toml", &theory_config("2pi/3", "th"), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for n in 1..=5 {
        let text = fs::read_to_string(d.path().join(format!("th/dispersion_n{n}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,E_plus,E_minus"));
        assert_eq!(lines.count(), 24);
    }
}

#[test]
fn trajectory_writes_all_observables() {
    let d = TempDir::new().unwrap();
    let cfg = "experiment = \"trajectory\"\nsites = 24\nphotons = 3\ntheta = \"pi/6\"\nphi = \"2pi/3\"\ncycles = 30\noutput = \"tr\"\n";
    let o = run(d.path(), "t.toml", cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.path().join("tr");
    for f in ["occupancy_n3.csv", "cm_n3.csv", "bound_fraction_n3.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let occ = fs::read_to_string(out.join("occupancy_n3.csv")).unwrap();
    assert_eq!(occ.lines().count(), 32);
    assert!(occ.starts_with("t,n_0,n_1,"));
}

#[test]
fn missing_theta_is_a_config_error_naming_the_field() {
    let d = TempDir::new().unwrap();
    let o = run(
        d.path(),
        "bad.toml",
        "experiment = \"theory\"\nphi = 1.0\noutput = \"x\"\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("theta") && err.contains("bad.toml:"), "{err}");
}

#[test]
fn malformed_value_reports_its_line() {
    let d = TempDir::new().unwrap();
    let o = run(
        d.path(),
        "bad.toml",
        "experiment = \"theory\"\ntheta = 0.5\nphi = \"two\"\noutput = \"x\"\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.toml:3"));
}

#[test]
fn identical_config_and_seed_reproduce_checksums() {
    let d = TempDir::new().unwrap();
    let cfg = "experiment = \"trajectory\"\nsites = 16\nphotons = [2, 3]\ntheta = \"pi/6\"\nphi = \"2pi/3\"\ncycles = 20\nshots = 100\ntrajectories = 8\nseed = 9\noutput = \"a\"\n[noise]\nkind = \"dephasing\"\nsigma = 0.2\n";
    assert!(run(d.path(), "c.toml", cfg, &["--jobs", "1"])
        .status
        .success());
    assert!(run(d.path(), "c.toml", cfg, &["--jobs", "4", "--out", "b"])
        .status
        .success());
    let a = checksums(&d.path().join("a"));
    assert!(!a.is_empty());
    assert_eq!(a, checksums(&d.path().join("b")));
    assert!(
        run(d.path(), "c.toml", cfg, &["--seed", "10", "--out", "c"])
            .status
            .success()
    );
    assert_ne!(a, checksums(&d.path().join("c")));
}

#[test]
fn sampling_without_seed_is_rejected() {
    let d = TempDir::new().unwrap();
    let cfg = "experiment = \"trajectory\"\nsites = 12\nphotons = 2\ntheta = 0.5\nphi = 2.0\nshots = 10\noutput = \"x\"\n";
    assert_eq!(run(d.path(), "c.toml", cfg, &[]).status.code(), Some(2));
}

#[test]
fn manifest_lists_exactly_the_produced_files() {
    let d = TempDir::new().unwrap();
    let cfg = "experiment = \"flux_sweep\"\nsites = 12\nphotons = [1, 2]\ntheta = \"pi/6\"\nphi = \"2pi/3\"\nflux = [0.25]\ncycles = 32\noutput = \"fs\"\n";
    assert!(run(d.path(), "c.toml", cfg, &[]).status.success());
    let out = d.path().join("fs");
    let listed: BTreeSet<String> = checksums(&out).into_iter().map(|c| c.0).collect();
    let on_disk: BTreeSet<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|f| f != "manifest.toml")
        .collect();
    assert_eq!(listed, on_disk);
    for (file, sum) in checksums(&out) {
        let bytes = fs::read(out.join(&file)).unwrap();
        let hex: String = sha2_hex(&bytes);
        assert_eq!(hex, sum, "{file}");
    }
}

fn sha2_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

#[test]
fn theory_against_itself_has_zero_deviation() {
    let d = TempDir::new().unwrap();
    assert!(run(d.path(), "t.toml", &theory_config("2pi/3", "th"), &[])
        .status
        .success());
    let f = d.path().join("th/dispersion_n3.csv");
    let o = compare(d.path(), &f, &f);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    let rows: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| l.ends_with("PASS"))
        .collect();
    assert_eq!(rows.len(), 24);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("0")));
}

#[test]
fn spectroscopy_matches_theory_and_rejects_wrong_phi() {
    let d = TempDir::new().unwrap();
    assert!(run(d.path(), "s.toml", SPECTROSCOPY, &[]).status.success());
    assert!(
        run(d.path(), "t.toml", &theory_config("2pi/3", "good"), &[])
            .status
            .success()
    );
    assert!(run(d.path(), "w.toml", &theory_config("pi/2", "bad"), &[])
        .status
        .success());
    let band = d.path().join("spec/band_n2.csv");
    let ok = compare(d.path(), &band, &d.path().join("good/dispersion_n2.csv"));
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stdout)
    );
    let bad = compare(d.path(), &band, &d.path().join("bad/dispersion_n2.csv"));
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}

#[test]
fn grid_mismatch_is_a_runtime_error() {
    let d = TempDir::new().unwrap();
    assert!(run(d.path(), "s.toml", SPECTROSCOPY, &[]).status.success());
    let cfg = "experiment = \"theory\"\nsites = 20\nphotons = 2\ntheta = \"pi/6\"\nphi = \"2pi/3\"\noutput = \"th20\"\n";
    assert!(run(d.path(), "t.toml", cfg, &[]).status.success());
    let o = compare(
        d.path(),
        &d.path().join("spec/band_n2.csv"),
        &d.path().join("th20/dispersion_n2.csv"),
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn oversized_sector_hits_the_dimension_guard() {
    let d = TempDir::new().unwrap();
    let cfg = "experiment = \"spectroscopy\"\nsites = 40\nphotons = 8\ntheta = \"pi/6\"\nphi = \"2pi/3\"\noutput = \"big\"\n";
    let o = run(d.path(), "b.toml", cfg, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("max_dimension"));
    assert!(!d.path().join("big/manifest.toml").exists());
}

#[test]
fn calibrate_and_ladder_produce_tables() {
    let d = TempDir::new().unwrap();
    let cal = "experiment = \"calibrate\"\ntheta = 0.5\nphi = 2.0\noutput = \"cal\"\n";
    assert!(run(d.path(), "c.toml", cal, &[]).status.success());
    let res = fs::read_to_string(d.path().join("cal/results.csv")).unwrap();
    assert_eq!(res.lines().count(), 5);
    assert!(res
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(6) == Some("1")));
    let lad = "experiment = \"ladder\"\nsites = 10\ntheta = \"pi/6\"\nphi = \"2pi/3\"\ntheta_prime = [0, \"pi/4\"]\ncycles = 20\noutput = \"lad\"\n";
    assert!(run(d.path(), "l.toml", lad, &[]).status.success());
    let s = fs::read_to_string(d.path().join("lad/summary.csv")).unwrap();
    assert_eq!(s.lines().count(), 3);
}
