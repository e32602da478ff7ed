use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use serde_json::Value;
use zetawb_core::*;

fn zetawb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zetawb")).args(args).env_remove("ZETAWB_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows `(z_re, z_im, quantity, value_re, value_im)`.
fn grid_rows(text: &str) -> Vec<(f64, f64, String, f64, f64)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap(), vec!["z_re", "z_im", "quantity", "value_re", "value_im"]);
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            let f = |i: usize| rec[i].parse::<f64>().unwrap();
            (f(0), f(1), rec[2].to_string(), f(3), f(4))
        })
        .collect()
}

fn orbits(dir: &tempfile::TempDir, name: &str, args: &[&str]) -> PathBuf {
    let out = path(dir, name);
    let mut full = vec!["orbits", "--catalog", s(&out)];
    full.extend_from_slice(args);
    let o = zetawb(&full);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn orbit_examples() {
    let dir = tempfile::tempdir().unwrap();
    for (args, want) in [
        (&["--model", "cat", "--roof", "const:1", "--nmax", "6"][..], 92),
        (&["--model", "sft", "--alphabet", "2", "--nmax", "4"][..], 8),
        (&["--model", "ptorus", "--lmax", "1"][..], 4),
    ] {
        let out = path(&dir, "c.json");
        let mut full = vec!["orbits", "--catalog", s(&out)];
        full.extend_from_slice(args);
        let o = zetawb(&full);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).starts_with(&format!("primes: {want}\n")), "{}", stdout(&o));
        assert!(stdout(&o).contains("T_complete") && stdout(&o).contains("wall time"));
        assert_eq!(read_catalog_file(&out).unwrap().len(), want);
    }
}

#[test]
fn model_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(&dir, "c.json");
    for args in [
        &["orbits", "--model", "cat", "--roof", "const:0", "--nmax", "3"][..],
        &["orbits", "--model", "toral", "--matrix", "1,1,0,1", "--nmax", "3"][..],
        &["orbits", "--model", "ptorus"][..],
        &["orbits", "--model", "moebius", "--nmax", "3"][..],
    ] {
        let mut full = args.to_vec();
        full.extend(["--catalog", s(&out)]);
        let o = zetawb(&full);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(!stderr(&o).is_empty());
    }
    let cfg = path(&dir, "job.toml");
    std::fs::write(&cfg, "[model]\nmodel = \"cat\"\nnmax = 3\nroof_typo = \"const:1\"\n").unwrap();
    let o = zetawb(&["--config", s(&cfg), "orbits", "--catalog", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("roof_typo"), "{}", stderr(&o));
}

#[test]
fn ruelle_log_at_one_and_a_half() {
    let dir = tempfile::tempdir().unwrap();
    let cat = orbits(&dir, "cat.json", &["--model", "cat", "--nmax", "16"]);
    let o = zetawb(&["zeta-grid", "--catalog", s(&cat), "--re-min", "1.5", "--quantities", "ruelle_log"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = grid_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].0, rows[0].1, rows[0].2.as_str()), (1.5, 0.0, "ruelle_log"));
    assert!((rows[0].3 - 0.46156).abs() < 5e-6, "{}", rows[0].3);
    assert_eq!(rows[0].4, 0.0);
}

#[test]
fn grid_shapes_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cat = orbits(&dir, "cat.json", &["--model", "cat", "--nmax", "10"]);

    let o = zetawb(&["zeta-grid", "--catalog", s(&cat), "--re-min", "1.5", "--quantities", ""]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "z_re,z_im,quantity,value_re,value_im\n");

    // straddles z = h: truncated sums are entire
    let csv_path = path(&dir, "g.csv");
    let o = zetawb(&[
        "zeta-grid",
        "--catalog",
        s(&cat),
        "--re-min",
        "0.5",
        "--re-max",
        "1.5",
        "--re-steps",
        "5",
        "--im-min",
        "-0.5",
        "--im-max",
        "0.5",
        "--im-steps",
        "3",
        "--quantities",
        "flat_trace_8,det_log_0",
        "--csv",
        s(&csv_path),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = grid_rows(&std::fs::read_to_string(&csv_path).unwrap());
    assert_eq!(rows.len(), 5 * 3 * 2);
    assert!(rows.iter().all(|r| r.3.is_finite() && r.4.is_finite()));
    // re fastest, quantities in declared order
    assert_eq!((rows[0].0, rows[0].1, rows[0].2.as_str()), (0.5, -0.5, "flat_trace_8"));
    assert_eq!(rows[1].2, "det_log_0");
    assert_eq!((rows[2].0, rows[2].1), (0.75, -0.5));
    assert_eq!((rows[10].0, rows[10].1), (0.5, 0.0));

    // orientation-reversing orbits have no Selberg product
    let fib = orbits(&dir, "fib.json", &["--model", "fib", "--nmax", "8"]);
    let o = zetawb(&[
        "zeta-grid",
        "--catalog",
        s(&fib),
        "--re-min",
        "1.5",
        "--re-max",
        "2",
        "--re-steps",
        "2",
        "--quantities",
        "ruelle_log,selberg_log",
    ]);
    assert_eq!(code(&o), 3);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[2].ends_with(",selberg_log,nan,nan") && lines[4].ends_with(",selberg_log,nan,nan"));
    assert!(grid_rows(&text)[0].3.is_finite());
    assert!(stderr(&o).contains("selberg_log"));

    let o = zetawb(&["zeta-grid", "--catalog", s(&cat), "--re-min", "1.5", "--quantities", "mock_log_1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_to_reevaluation_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let cat = path(&dir, "mix.json");
    let csv_path = path(&dir, "g.csv");
    let cfg = path(&dir, "job.toml");
    std::fs::write(
        &cfg,
        format!(
            "seed = 3\n[model]\nmodel = \"cat\"\nroof = \"mixing\"\nnmax = 9\n\n[policy]\nt_max = 6.0\n\n\
             [grid]\nre_min = 1.1\nre_max = 2.3\nre_steps = 4\nim_min = -3.0\nim_max = 3.0\nim_steps = 3\n\
             quantities = [\"ruelle_log\", \"det_log_0\", \"det_log_1\", \"mock_log_1\", \"flat_trace_3\"]\n\
             xi = [2.0, 0.25]\n\n[files]\ncatalog = {:?}\ncsv = {:?}\n",
            s(&cat),
            s(&csv_path)
        ),
    )
    .unwrap();
    assert_eq!(code(&zetawb(&["--config", s(&cfg), "orbits"])), 0);
    let o = zetawb(&["--config", s(&cfg), "zeta-grid"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first = std::fs::read(&csv_path).unwrap();
    let rows = grid_rows(std::str::from_utf8(&first).unwrap());
    assert_eq!(rows.len(), 4 * 3 * 5);

    let fresh = toral_suspension_catalog(&[[2, 1], [1, 1]], &RoofFunction::mixing_default(), 9).unwrap();
    assert_eq!(read_catalog_file(&cat).unwrap(), fresh);
    let engine = ZetaEngine::new(&fresh, TruncationPolicy::new(6.0)).unwrap();
    let xi = Complex64::new(2.0, 0.25);
    for (re, im, q, vr, vi) in &rows {
        let z = Complex64::new(*re, *im);
        let want = match q.as_str() {
            "ruelle_log" => engine.ruelle_log(z),
            "det_log_0" => engine.dyn_determinant_log(0, z),
            "det_log_1" => engine.dyn_determinant_log(1, z),
            "mock_log_1" => engine.mock_determinant_log(1, xi - z, xi),
            "flat_trace_3" => engine.flat_trace(1, z, 3, 0.0),
            _ => unreachable!(),
        }
        .unwrap();
        assert_eq!((vr.to_bits(), vi.to_bits()), (want.re.to_bits(), want.im.to_bits()), "{q} at {z}");
    }

    // same bytes on a second run and on another pool size
    let o = Command::new(env!("CARGO_BIN_EXE_zetawb"))
        .args(["--config", s(&cfg), "zeta-grid"])
        .env("ZETAWB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&csv_path).unwrap(), first);
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(&dir, "job.toml");
    std::fs::write(&cfg, "threads = 2\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_zetawb"))
        .args(["--config", s(&cfg), "orbits", "--model", "cat", "--nmax", "3", "--catalog", s(&path(&dir, "c.json"))])
        .env("ZETAWB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("threads"));
}

#[test]
fn resonances_on_the_cat_map() {
    let dir = tempfile::tempdir().unwrap();
    let cat = orbits(&dir, "cat.json", &["--model", "cat", "--nmax", "14"]);
    let json = path(&dir, "r.json");
    let o = zetawb(&["resonances", "--catalog", s(&cat), "--json", s(&json)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let h = 2.0 * (0.5 + 1.25f64.sqrt()).ln();
    assert_eq!(report["converged"], true);
    let first = &report["estimates"][0];
    assert_eq!(first["n"], 2);
    assert!((first["estimate"][0].as_f64().unwrap() - h).abs() < 0.02);
    let w = &report["windings"][0];
    assert_eq!(w["count"], 1);
    assert!((w["zero"][0].as_f64().unwrap() - h).abs() < 5e-3, "{w}");
    assert!(stdout(&o).contains("aitken"));

    // entropy given, several rectangles; one holds no zero
    let o = zetawb(&[
        "resonances",
        "--catalog",
        s(&cat),
        "--h",
        "0.9624236501",
        "--rect",
        "0.9,1.0,-0.05,0.05",
        "--rect",
        "1.3,1.4,-0.05,0.05",
        "--json",
        s(&json),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["entropy_source"], "given");
    assert_eq!(report["windings"][0]["count"], 1);
    assert_eq!(report["windings"][1]["count"], 0);

    // a tolerance nothing meets: exit 4, report still written
    std::fs::remove_file(&json).unwrap();
    let o = zetawb(&["resonances", "--catalog", s(&cat), "--tol", "1e-9", "--json", s(&json)]);
    assert_eq!(code(&o), 4);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["converged"], false);
    assert!(report["estimates"][0]["error"].as_str().unwrap().contains("differ"));
}

#[test]
fn counting_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cat = orbits(&dir, "cat.json", &["--model", "cat", "--nmax", "8"]);
    let o = zetawb(&["count", "--catalog", s(&cat)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--allow-non-mixing"));
    let o = zetawb(&["count", "--catalog", s(&cat), "--allow-non-mixing", "--t-from", "6", "--t-to", "6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let f: Vec<&str> = line.split(',').collect();
    assert_eq!((f[1], f[4], f[5], f[7]), ("92", "106", "92", "true"));

    let torus = orbits(&dir, "t.json", &["--model", "ptorus", "--tmax", "9"]);
    let (csv_path, json) = (path(&dir, "c.csv"), path(&dir, "c.json"));
    let o = zetawb(&[
        "count",
        "--catalog",
        s(&torus),
        "--h",
        "1",
        "--t-from",
        "2",
        "--t-to",
        "9",
        "--t-step",
        "0.5",
        "--csv",
        s(&csv_path),
        "--json",
        s(&json),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let catalog = read_catalog_file(&torus).unwrap();
    let grid: Vec<f64> = (0..15).map(|i| 2.0 + 0.5 * i as f64).collect();
    let want = counting_report(&catalog, 1.0, &grid, false).unwrap();
    let mut r = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["T", "pi", "psi", "psi1", "pi0", "pi1", "li_ehT", "complete"]);
    let recs: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(recs.len(), 15);
    for (i, rec) in recs.iter().enumerate() {
        assert_eq!(rec[0].parse::<f64>().unwrap(), grid[i]);
        assert_eq!(rec[1].parse::<u64>().unwrap(), prime_counting(&catalog, grid[i]).count);
        assert_eq!(rec[2].parse::<f64>().unwrap().to_bits(), want.psi[i].to_bits());
        assert_eq!(rec[3].parse::<f64>().unwrap().to_bits(), want.psi1[i].to_bits());
        assert_eq!(rec[6].parse::<f64>().unwrap().to_bits(), want.li[i].to_bits());
    }
    assert_eq!(&recs[0][1], "6");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let psi: Vec<f64> = report["psi"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(psi, want.psi);
    assert_eq!(report["h_source"], "given");
}

#[test]
fn verify_cat_map_and_modular_torus() {
    let dir = tempfile::tempdir().unwrap();
    let cat = orbits(&dir, "cat.json", &["--model", "cat", "--nmax", "10"]);
    let o = zetawb(&["verify", "--catalog", s(&cat)]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let out = stdout(&o);
    for name in [
        "exterior algebra",
        "orientation",
        "product term identity",
        "mock quotient",
        "natural trace",
        "2pi periodicity",
        "Ruelle-Selberg relation",
        "linearization coherence",
    ] {
        assert!(out.contains(&format!("PASS {name}:")), "{name}\n{out}");
    }
    assert!(!out.contains("FAIL"));

    let torus = orbits(&dir, "t.json", &["--model", "ptorus", "--tmax", "8"]);
    let o = zetawb(&["verify", "--catalog", s(&torus), "--seed", "99"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let line = stdout(&o).lines().find(|l| l.contains("Ruelle-Selberg")).unwrap().to_string();
    let r: f64 = line.split("residual ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!(line.starts_with("PASS") && r <= 1e-8, "{line}");
    assert!(stdout(&o).contains("SKIP 2pi periodicity"));
}

#[test]
fn verify_catches_a_perturbed_linearization() {
    let dir = tempfile::tempdir().unwrap();
    let mut catalog = toral_suspension_catalog(&[[2, 1], [1, 1]], &RoofFunction::constant(1.0), 8).unwrap();
    let victim = catalog.orbits.len() / 2;
    let m = &catalog.orbits[victim].linearization;
    let mut e = m.to_f64_entries();
    e[1] += 1e-3;
    catalog.orbits[victim].linearization = Arc::new(SmallMatrix::from_f64(2, e).unwrap());
    let bad = path(&dir, "bad.json");
    write_catalog_file(&catalog, &bad).unwrap();
    let o = zetawb(&["verify", "--catalog", s(&bad)]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL linearization coherence"));
    assert!(stdout(&o).contains(&catalog.orbits[victim].label()));
    assert!(stderr(&o).contains("verification failed: linearization coherence"), "{}", stderr(&o));
}
