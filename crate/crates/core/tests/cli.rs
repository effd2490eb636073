use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swiptcast"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn solve_default_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 5\n");
    let out = run(&[
        "solve",
        &cfg,
        "--out",
        &p(dir.path(), "o"),
        "--samples",
        "2000",
    ]);
    assert!(out.status.success(), "{}", text(&out));
    for s in ["sdr", "scheme1", "scheme2", "baseline"] {
        assert!(text(&out).contains(s));
    }
    let v = run(&[
        "verify",
        &p(dir.path(), "o/solution.json"),
        &cfg,
        "--samples",
        "10000",
    ]);
    assert!(v.status.success(), "{}", text(&v));

    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/report.json")).unwrap())
            .unwrap();
    for r in report.as_array().unwrap() {
        let e = &r["evaluation"];
        let p_hat = e["chance_prob_hat"].as_f64().unwrap();
        let ci = e["chance_ci_halfwidth"].as_f64().unwrap();
        assert!(p_hat >= 0.99 - 3.0 * ci);
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    for out in ["a", "b"] {
        let o = run(&[
            "solve",
            &cfg,
            "--seed",
            "17",
            "--out",
            &p(dir.path(), out),
            "--samples",
            "1000",
        ]);
        assert!(o.status.success(), "{}", text(&o));
    }
    for f in ["solution.json", "report.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let o = run(&[
        "solve",
        &cfg,
        "--seed",
        "18",
        "--out",
        &p(dir.path(), "c"),
        "--samples",
        "1000",
    ]);
    assert!(o.status.success());
    assert_ne!(
        fs::read(dir.path().join("a/solution.json")).unwrap(),
        fs::read(dir.path().join("c/solution.json")).unwrap()
    );
}

#[test]
fn single_receiver_prints_analytic_power() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "n_video_receivers = 1\nn_basic = 0\nn_idle = 0\nn_layers = 1\nsinr_req_db = [6.0]\nkappa = 0.0\n",
    );
    let out = run(&[
        "solve",
        &cfg,
        "--schemes",
        "sdr",
        "--out",
        &p(dir.path(), "o"),
    ]);
    assert!(out.status.success(), "{}", text(&out));
    let sol: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/solution.json")).unwrap())
            .unwrap();
    let h = sol["realization"]["receivers"][0]["channel"]
        .as_array()
        .unwrap();
    let norm: f64 = h
        .iter()
        .map(|z| {
            let (re, im) = (z[0].as_f64().unwrap(), z[1].as_f64().unwrap());
            re * re + im * im
        })
        .sum();
    let gamma = 10f64.powf(0.6);
    let sigma2 = 10f64.powf(-2.3) * 1e-3;
    let analytic = gamma * sigma2 / norm;
    let line = String::from_utf8_lossy(&out.stdout).to_string();
    let printed: f64 = line
        .split_whitespace()
        .skip_while(|w| *w != "power")
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        (printed - analytic).abs() <= 1e-5 * analytic,
        "{printed} vs {analytic}"
    );
}

#[test]
fn corrupted_energy_signal_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let out = run(&[
        "solve",
        &cfg,
        "--schemes",
        "sdr",
        "--out",
        &p(dir.path(), "o"),
        "--samples",
        "1000",
    ]);
    assert!(out.status.success(), "{}", text(&out));
    let path = dir.path().join("o/solution.json");
    let mut sol: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    for row in sol["solutions"][0]["w_energy"].as_array_mut().unwrap() {
        for z in row.as_array_mut().unwrap() {
            for x in z.as_array_mut().unwrap() {
                *x = Value::from(x.as_f64().unwrap() * 0.1);
            }
        }
    }
    let bad = write(dir.path(), "bad.json", &sol.to_string());
    let v = run(&["verify", &bad, &cfg, "--samples", "1000"]);
    assert_eq!(v.status.code(), Some(1), "{}", text(&v));
    assert!(text(&v).contains("C4["), "{}", text(&v));
}

#[test]
fn config_errors_exit_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "n_antennas = 6\nkappa = \"x\"\n");
    let out = run(&["solve", &cfg, "--out", &p(dir.path(), "o")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).contains("line 2"), "{}", text(&out));

    let cfg = write(dir.path(), "d.toml", "n_antennas = 6\nn_layer = 2\n");
    let out = run(&["solve", &cfg, "--out", &p(dir.path(), "o")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).contains("n_layer"), "{}", text(&out));

    let out = run(&["solve", &p(dir.path(), "missing.toml")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert!(out.status.success(), "{}", text(&out));
    assert!(!text(&out).contains("FAIL"));
}

fn csv_without_runtime(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            rec.iter().take(rec.len() - 1).map(str::to_string).collect()
        })
        .collect()
}

#[test]
fn sweep_outputs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "s.toml",
        "axis = \"n_receivers\"\nvalues = [3, 4]\ntrials_per_point = 3\nschemes = [\"sdr\", \"scheme1\", \"baseline\"]\nn_samples = 1000\n",
    );
    let mut outs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "2")] {
        let out = bin()
            .args(["sweep", &spec, "--out", &p(dir.path(), name)])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", text(&out));
        outs.push(dir.path().join(name));
    }

    let mut r = csv::Reader::from_path(outs[0].join("results.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(
        header,
        [
            "axis_value",
            "scheme",
            "trial_index",
            "total_power_dbm",
            "harvested_total_dbm",
            "chance_p_hat",
            "secrecy_ok_fraction",
            "status",
            "runtime_ms"
        ]
    );
    let rows = csv_without_runtime(&outs[0].join("results.csv"));
    assert_eq!(rows.len(), 2 * 3 * 3);
    assert_eq!(rows, csv_without_runtime(&outs[1].join("results.csv")));
    assert_eq!(
        fs::read(outs[0].join("summary.json")).unwrap(),
        fs::read(outs[1].join("summary.json")).unwrap()
    );

    // dBm values round-trip through watts.
    for row in &rows {
        let dbm: f64 = row[3].parse().unwrap();
        let w = 10f64.powf(dbm / 10.0) * 1e-3;
        assert!(((10.0 * (w / 1e-3).log10()) - dbm).abs() <= 1e-9 * dbm.abs().max(1.0));
    }

    // Summary means are the means of the persisted rows.
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(outs[0].join("summary.json")).unwrap()).unwrap();
    for s in summary["rows"].as_array().unwrap() {
        let v = s["axis_value"].as_u64().unwrap().to_string();
        let scheme = s["scheme"].as_str().unwrap();
        let xs: Vec<f64> = rows
            .iter()
            .filter(|r| r[0] == v && r[1] == scheme && !r[3].is_empty())
            .map(|r| r[3].parse().unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((s["mean_power_dbm"].as_f64().unwrap() - mean).abs() <= 1e-9 * mean.abs());
    }

    for scheme in ["sdr", "scheme1", "baseline"] {
        let dat = fs::read_to_string(outs[0].join(format!("power_{scheme}.dat"))).unwrap();
        assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 2);
        assert!(outs[0].join(format!("harvested_{scheme}.dat")).exists());
    }
}
