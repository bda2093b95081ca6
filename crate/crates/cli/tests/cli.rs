use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::Path;
use std::process::{Command, Output};

use dipent::io::Table;
use dipent::montecarlo::EventRow;

fn dipent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dipent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_to_table(args: &[&str]) -> Table {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let mut full = args.to_vec();
    let p = path.to_str().unwrap();
    full.extend(["--out", p]);
    let out = dipent(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    read_table(&path)
}

fn read_table(path: &Path) -> Table {
    Table::read(std::io::BufReader::new(std::fs::File::open(path).unwrap())).unwrap()
}

fn col(t: &Table, row: &[String], name: &str) -> f64 {
    row[t.column(name).unwrap()].parse().unwrap()
}

#[test]
fn ef_map_limits_and_phi_invariance() {
    let t = run_to_table(&["ef-map", "--grid", "5"]);
    assert_eq!(t.meta("schema"), Some("dipent.ef-map/1"));
    assert_eq!(t.meta("seed"), Some("2024"));
    assert_eq!(t.meta("config_hash").map(str::len), Some(64));
    assert_eq!(t.rows.len(), 25);
    for row in &t.rows {
        let theta = col(&t, row, "theta");
        let ef = col(&t, row, "ef");
        let c2 = theta.cos().powi(2);
        assert!((col(&t, row, "p") - c2 / (1.0 + c2)).abs() < 1e-12);
        if theta == 0.0 {
            assert!((ef - 1.0).abs() < 1e-12, "ef at theta=0: {ef}");
        }
        if (theta - PI / 2.0).abs() < 1e-15 {
            assert!(ef.abs() < 1e-12, "ef at theta=pi/2: {ef}");
        }
    }
    for chunk in t.rows.chunks(5) {
        let ef0 = col(&t, &chunk[0], "ef");
        for row in chunk {
            assert_eq!(col(&t, row, "theta"), col(&t, &chunk[0], "theta"));
            assert!((col(&t, row, "ef") - ef0).abs() < 1e-14);
        }
    }
}

#[test]
fn rings_at_two_pi() {
    let t = run_to_table(&["rings", "--k0d", &(2.0 * PI).to_string()]);
    let pick = |parity: &str| -> Vec<f64> {
        t.rows
            .iter()
            .filter(|r| r[0] == parity)
            .map(|r| col(&t, r, "cos_alpha"))
            .collect()
    };
    let plus = pick("plus");
    let minus = pick("minus");
    assert_eq!(plus.len(), 3);
    for (got, want) in plus.iter().zip([-1.0, 0.0, 1.0]) {
        assert!((got - want).abs() < 1e-12, "{plus:?}");
    }
    assert_eq!(minus.len(), 2);
    for (got, want) in minus.iter().zip([-0.5, 0.5]) {
        assert!((got - want).abs() < 1e-12, "{minus:?}");
    }
}

fn amplitudes(t: &Table) -> Vec<(f64, f64)> {
    t.rows.iter().map(|r| (col(t, r, "re"), col(t, r, "im"))).collect()
}

#[test]
fn pair_state_on_axis_is_the_singlet() {
    let t = run_to_table(&["pair-state", "--theta-b", "0"]);
    assert_eq!(t.meta("method"), Some("analytic"));
    let amps = amplitudes(&t);
    let want = [0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0];
    // global phase fixed by the first nonzero amplitude
    let (r, i) = amps[1];
    let phase_norm = r.hypot(i);
    for ((re, im), w) in amps.iter().zip(want) {
        let re_rot = (re * r + im * i) / phase_norm;
        let im_rot = (im * r - re * i) / phase_norm;
        assert!((re_rot - w).abs() < 1e-12 && im_rot.abs() < 1e-12, "{amps:?}");
    }
    let ef: f64 = t.meta("ef").unwrap().parse().unwrap();
    assert!((ef - 1.0).abs() < 1e-12);
}

#[test]
fn pair_state_near_axis_converges_to_the_singlet() {
    let t = run_to_table(&["pair-state", "--theta-b", "1e-4", "--auto-place", "--method", "conditional"]);
    assert_eq!(t.meta("method"), Some("conditional"));
    let fid: f64 = t.meta("fidelity_analytic").unwrap().parse().unwrap();
    assert!((fid - 1.0).abs() < 1e-9);
    let probs: Vec<f64> = t.rows.iter().map(|r| col(&t, r, "probability")).collect();
    for (p, w) in probs.iter().zip([0.0, 0.5, 0.5, 0.0]) {
        assert!((p - w).abs() < 1e-7, "{probs:?}");
    }
}

#[test]
fn efficiency_estimators_agree() {
    let t = run_to_table(&["efficiency", "--n-cycles", "20000"]);
    let reference: f64 = t.meta("analytic_reference").unwrap().parse().unwrap();
    let row = |name: &str| t.rows.iter().find(|r| r[0] == name).unwrap().clone();
    let quad = col(&t, &row("quadrature"), "value");
    assert!(((quad - reference) / reference).abs() < 1e-6);
    let mc = row("forced-mc");
    let z = col(&t, &mc, "z_analytic");
    assert!(z.abs() < 3.0, "forced-mc z = {z}");
}

#[test]
fn simulate_round_trips_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = dipent(&["simulate", "--n-cycles", "300", "--seed", "9", "--out", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(summary["n_cycles"], 300);
        assert_eq!(summary["window"]["cross_cycle_coincidences"], 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let t = read_table(&a);
    assert_eq!(t.meta("schema"), Some("dipent.events/1"));
    assert_eq!(t.meta("seed"), Some("9"));
    let rows: Vec<EventRow> = t.rows.iter().map(|r| EventRow::from_record(r).unwrap()).collect();
    assert!(!rows.is_empty());
    assert!(rows.windows(2).all(|w| w[0].cycle_index <= w[1].cycle_index));
    let pairs: u64 = t.meta("n_pairs_in_cones").unwrap().parse().unwrap();
    assert!(pairs > 0);

    let other = dir.path().join("c.csv");
    let out = dipent(&["simulate", "--n-cycles", "300", "--seed", "10", "--out", other.to_str().unwrap()]);
    assert!(out.status.success());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&other).unwrap());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, format!(r#"{{"k0d": {}, "seed": 3}}"#, 4.0 * PI)).unwrap();
    let cfg_s = cfg.to_str().unwrap();
    let t = run_to_table(&["rings", "--config", cfg_s]);
    assert_eq!(t.meta("seed"), Some("3"));
    assert_eq!(t.rows.iter().filter(|r| r[0] == "plus").count(), 5);
    let t2 = run_to_table(&["rings", "--config", cfg_s, "--seed", "4", "--k0d", &(2.0 * PI).to_string()]);
    assert_eq!(t2.meta("seed"), Some("4"));
    assert_eq!(t2.rows.iter().filter(|r| r[0] == "plus").count(), 3);
    assert_ne!(t.meta("config_hash"), t2.meta("config_hash"));
}

fn error_record(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("error record");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {stderr}"))
}

#[test]
fn exit_codes() {
    let out = dipent(&["ef-map", "--grid", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["error"]["kind"], "config");

    let out = dipent(&["rings", "--gamma0", "-1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = dipent(&["simulate", "--sampler", "nope", "--n-cycles", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_record(&out)["error"]["message"].as_str().unwrap().contains("forced"));

    // Bob off every minus ring
    let out = dipent(&["pair-state", "--theta-b", "0.7", "--method", "conditional"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_record(&out)["error"]["kind"], "numerical");

    let out = dipent(&["rings", "--out", "/nonexistent-dir/rings.csv"]);
    assert_eq!(out.status.code(), Some(4));
    let rec = error_record(&out);
    assert_eq!(rec["error"]["path"], "/nonexistent-dir/rings.csv");

    let out = dipent(&["rings", "--config", "/nonexistent-dir/run.json"]);
    assert_eq!(out.status.code(), Some(4));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = dipent(&["rings", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stdout_output_matches_file_output() {
    let out = dipent(&["ef-map", "--grid", "3"]);
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let file_out = dipent(&["ef-map", "--grid", "3", "--out", path.to_str().unwrap()]);
    assert!(file_out.status.success());
    assert_eq!(out.stdout, std::fs::read(&path).unwrap());
}
