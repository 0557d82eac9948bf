use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spectro::noisesim::MeasurementSet;

fn spectro(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectro")).args(args).arg("--out").arg(out).output().unwrap()
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn header(path: &Path) -> String {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().collect::<Vec<_>>().join(",")
}

fn col(rec: &csv::StringRecord, i: usize) -> f64 {
    rec[i].parse().unwrap()
}

#[test]
fn design_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bod_tau1_us = 5\nbod_eps = 0.5\nbod_cap = 3\n", 17),
        ("bod_tau1_us = 5\nbod_eps = 0.5\nbod_cap = 5\n", 25),
    ];
    for (i, (text, n)) in cases.iter().enumerate() {
        let conf = config(dir.path(), &format!("d{i}.conf"), text);
        let out = dir.path().join(format!("out{i}"));
        let o = spectro(&["design", "--config", conf.to_str().unwrap()], &out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = out.join("design.csv");
        assert_eq!(header(&csv), "n,tau_s,peak_rad_s,lower_edge_rad_s,upper_edge_rad_s");
        assert_eq!(rows(&csv).len(), *n);
    }

    // ε = 0 makes consecutive bands touch
    for (flips, cap, min_rows) in [(4, 3, 1), (4, 5, 2), (32, 3, 3)] {
        let text = format!("bod_tau1_us = 5\nbod_eps = 0\nflips = {flips}\nbod_cap = {cap}\n");
        let conf = config(dir.path(), "touch.conf", &text);
        let out = dir.path().join(format!("touch_{flips}_{cap}"));
        assert!(spectro(&["design", "--config", conf.to_str().unwrap()], &out).status.success());
        let r = rows(&out.join("design.csv"));
        assert!(r.len() >= min_rows, "M={flips} cap={cap}: {} rows", r.len());
        for pair in r.windows(2) {
            let (upper, lower) = (col(&pair[0], 4), col(&pair[1], 3));
            assert!((upper - lower).abs() <= 1e-9 * upper, "{upper} vs {lower}");
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for text in ["bogus = 1\n", "seed = 1\nseed = 2\n", "samples = ten\n", "protocols = cpmg\n", "protocols = bod\nbod_cap = 4\n"] {
        let conf = config(dir.path(), "bad.conf", text);
        let o = spectro(&["scan", "--config", conf.to_str().unwrap()], &out);
        assert_eq!(o.status.code(), Some(1), "{text}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    let o = spectro(&["scan", "--config", dir.path().join("missing.conf").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));

    // an explicit filter count that contradicts the stopping rule aborts under strict_counts
    let conf = config(dir.path(), "strict.conf", "protocols = bod(eps=0.75, n=34)\nstrict_counts = true\n");
    assert_eq!(spectro(&["design", "--config", conf.to_str().unwrap()], &out).status.code(), Some(1));
    let conf = config(dir.path(), "lenient.conf", "protocols = bod(eps=0.75, n=34)\n");
    let o = spectro(&["design", "--config", conf.to_str().unwrap()], &out);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("stopping rule yields 32"));
    assert_eq!(rows(&out.join("design.csv")).len(), 34);
}

#[test]
fn help_lists_every_key() {
    let o = Command::new(env!("CARGO_BIN_EXE_spectro")).arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    for (key, _) in spectro::harness::config::KEYS {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn scan_and_table_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let conf = config(dir.path(), "scan.conf", "scan_step_khz = 100\nmethods = ls, nnls\n");
    let out = dir.path().join("scan");
    let o = spectro(&["scan", "--config", conf.to_str().unwrap(), "--plot-script"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = out.join("scan.csv");
    assert_eq!(header(&csv), "nu_rad_s,fidelity,mse,method,protocol");
    let r = rows(&csv);
    assert_eq!(r.len(), 4 * 6 * 2);
    assert!(r.iter().all(|rec| (0.0..=1.0).contains(&col(rec, 1))));
    assert!(out.join("plot_scan.py").exists());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "scan");
    assert_eq!(report["config"]["scan_step_khz"], "100");
    assert_eq!(report["protocols"].as_array().unwrap().len(), 4);

    let conf = config(dir.path(), "table.conf", "samples = 10\nrepetitions = 4\n");
    let out = dir.path().join("table");
    let o = spectro(&["table", "--config", conf.to_str().unwrap(), "--seed", "3"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = out.join("table.csv");
    assert_eq!(header(&csv), "protocol,N,samples,method,fidelity_mean,fidelity_std");
    let r = rows(&csv);
    assert_eq!(r.len(), 5 * 2);
    let n: Vec<&str> = r.iter().step_by(2).map(|rec| &rec[1]).collect();
    assert_eq!(n, ["32", "32", "34", "17", "11"]);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 3);
    assert!(report["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("stopping rule")));
}

#[test]
fn seeds_change_monte_carlo_output() {
    let dir = tempfile::tempdir().unwrap();
    let conf = config(dir.path(), "r.conf", "protocols = bod(cap=3)\nsamples = 10\n");
    let read = |seed: &str| {
        let out = dir.path().join(format!("s{seed}"));
        assert!(spectro(&["reconstruct", "--config", conf.to_str().unwrap(), "--seed", seed], &out).status.success());
        std::fs::read(out.join("reconstruct_bod_3_ls.csv")).unwrap()
    };
    assert_eq!(read("5"), read("5"));
    assert_ne!(read("5"), read("6"));
}

#[test]
fn measurement_set_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let conf = config(dir.path(), "r.conf", "protocols = pdd\nsamples = 12\n");
    let out = dir.path().join("mc");
    assert!(spectro(&["reconstruct", "--config", conf.to_str().unwrap()], &out).status.success());
    let text = std::fs::read_to_string(out.join("measurements_pdd.json")).unwrap();
    let ms = MeasurementSet::from_json(&text).unwrap();
    assert_eq!(ms.samples, 12);
    assert_eq!(ms.chi.len(), 32);
    assert_eq!(ms.per_sample.as_ref().unwrap()[0].len(), 12);
    assert_eq!(ms.to_json().unwrap(), text);

    let out = dir.path().join("exact");
    assert!(spectro(&["reconstruct", "--config", conf.to_str().unwrap(), "--exact-chi"], &out).status.success());
    let ms = MeasurementSet::from_json(&std::fs::read_to_string(out.join("measurements_pdd.json")).unwrap()).unwrap();
    assert!(ms.per_sample.is_none() && ms.seed.is_none());
}
