use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const HI_MOLECULE: &str = "\
[molecule]
D = 0.1125 au
beta = 2.0793 au
r0 = 3.0416 au
mu = 1819.99 au
";

fn subplanck(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subplanck"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path, command: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("manifest_{command}.json"))).unwrap()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.ini");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn eigen_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = subplanck(&["eigen", "--preset", "HI"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("bound_states = 30"), "{stdout}");
    let energies = fs::read_to_string(dir.path().join("energies.csv")).unwrap();
    let lines: Vec<&str> = energies.lines().collect();
    assert_eq!(lines[0], "n,energy,s");
    assert_eq!(lines.len(), 31);
    let m = manifest(dir.path(), "eigen");
    let t_rev = m["revival_time_au"].as_f64().unwrap();
    assert!((t_rev / 4.89e4 - 1.0).abs() < 5e-3, "{t_rev}");
    assert_eq!(m["bound_states"], 30);
    let xm = fs::read_to_string(dir.path().join("position_matrix.csv")).unwrap();
    assert_eq!(xm.lines().count(), 30);
    assert!(xm.lines().all(|l| l.split(',').count() == 30));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &HI_MOLECULE.replace("D = 0.1125 au\n", ""));
    let o = subplanck(&["eigen", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'D'"), "{}", stderr(&o));

    let o = subplanck(&["eigen", "--preset", "XY"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = subplanck(&["eigen"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = subplanck(&["eigen", "--config", "/nonexistent/run.ini"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = subplanck(&["wigner", "--preset", "HI", "not_a_density.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

const EVOLVE: &str = "
[state]
nbar = 4

[bath]
delta = 0 au
T = 0 au

[times]
snapshots = 0.125, 0.25 trev

[grid]
x = -0.5, 0.9, 281
p = -50, 50, 1001
";

#[test]
fn evolve_cat_and_compass_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write_config(a.path(), &format!("{HI_MOLECULE}{EVOLVE}"));
    for dir in [&a, &b] {
        let o = subplanck(&["evolve", "--config", &cfg], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let m = manifest(a.path(), "evolve");
    assert_eq!(m["invariants_ok"], true);
    let snaps = m["snapshots"].as_array().unwrap();
    assert_eq!(snaps.len(), 2);
    assert_eq!(snaps[0]["lobes"].as_array().unwrap().len(), 4);
    assert_eq!(snaps[0]["central_interference"], true);
    assert_eq!(snaps[1]["lobes"].as_array().unwrap().len(), 2);
    for s in snaps {
        assert!(s["trace_residual"].as_f64().unwrap() < 1e-8);
        assert!((s["wigner_normalization"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    }
    for name in ["rho_0_re.csv", "rho_0_im.csv", "rho_1_re.csv", "wigner_0.csv", "wigner_1.csv", "manifest_evolve.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
    let head = fs::read_to_string(a.path().join("rho_0_re.csv")).unwrap();
    let first = head.lines().next().unwrap();
    for key in ["time=", "delta=", "T=", "dt=", "trace_residual="] {
        assert!(first.starts_with('#') && first.contains(key), "{first}");
    }

    // transform the stored compass-state density matrix again
    let c = tempfile::tempdir().unwrap();
    let rho = a.path().join("rho_0_re.csv");
    let o = subplanck(&["wigner", "--config", &cfg, rho.to_str().unwrap()], c.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let w = manifest(c.path(), "wigner");
    assert_eq!(w["lobe_count"], 4);
    assert!((w["normalization"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    let grid = fs::read_to_string(c.path().join("wigner.csv")).unwrap();
    let mut lines = grid.lines();
    assert!(lines.next().unwrap().starts_with("# "));
    assert_eq!(lines.next().unwrap().split(',').count(), 1002);
    assert_eq!(lines.count(), 281);
}

#[test]
fn sweep_tables_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write_config(a.path(), &format!("{HI_MOLECULE}[state]\nnbar = 4\n[sweep]\ndeltas = 0, 1500 au\ntemperatures = 1, 10 hw01\n"));
    for dir in [&a, &b] {
        let o = subplanck(&["sweep", "--config", &cfg, "--axis", "delta"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let table = fs::read_to_string(a.path().join("sweep_delta.csv")).unwrap();
    assert_eq!(table, fs::read_to_string(b.path().join("sweep_delta.csv")).unwrap());
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "delta,left,right,central");
    assert_eq!(lines.len(), 3);
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    let last: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
    assert!(first[1] > 0.0 && first[2] > 0.0 && first[3] < 0.0, "{first:?}");
    assert!(last[3].is_nan() || last[3].abs() < first[3].abs());
    let m = manifest(a.path(), "sweep");
    assert_eq!(m["axis"], "delta");
    assert_eq!(m["points"].as_array().unwrap().len(), 2);

    let o = subplanck(&["sweep", "--config", &cfg, "--axis", "temperature"], a.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(a.path().join("sweep_T.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "T,central");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1.00000000e0,") && lines[2].starts_with("1.00000000e1,"));

    // two points are not enough for a fit
    let o = subplanck(&["fit", "--model", "exp", a.path().join("sweep_delta.csv").to_str().unwrap()], a.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).to_lowercase().contains("insufficient"), "{}", stderr(&o));
}

#[test]
fn fit_synthetic_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("delta,left,right,central\n");
    for i in 0..8 {
        let d = 300.0 * i as f64;
        let x = d / 1e3;
        csv.push_str(&format!("{d},{},{},{}\n", 0.2 * (-0.1 * x).exp(), 0.3 * (-0.12 * x).exp(), -0.5 * (-0.4 * x).exp()));
    }
    let path = dir.path().join("sweep_delta.csv");
    fs::write(&path, csv).unwrap();
    let o = subplanck(&["fit", "--model", "exp", path.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("fit_exponential.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "probe,A,c,rms_residual,amplitude_range,accepted");
    assert_eq!(lines.len(), 4);
    let m = manifest(dir.path(), "fit");
    assert_eq!(m["axis_unit"], "1e3 au");
    let central = &m["fits"]["central"];
    assert!((central["params"]["A"].as_f64().unwrap() - 0.5).abs() < 1e-8);
    assert!((central["params"]["c"].as_f64().unwrap() - 0.4).abs() < 1e-8);
    assert_eq!(central["accepted"], true);

    let truth = [0.58, 0.05, 0.7];
    let mut csv = String::from("T,central\n");
    for t in [0.1, 0.2, 0.4, 0.7, 1.0, 2.0, 4.0, 8.0] {
        let y = truth[0] * (-truth[1] / (truth[2] / t as f64).exp_m1()).exp();
        csv.push_str(&format!("{t},{}\n", -y));
    }
    let path = dir.path().join("sweep_T.csv");
    fs::write(&path, csv).unwrap();
    let o = subplanck(&["fit", "--model", "bose", path.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(dir.path(), "fit");
    assert!((m["fits"]["central"]["params"]["T_c"].as_f64().unwrap() - 0.7).abs() < 1e-5);
    let table = fs::read_to_string(dir.path().join("fit_bose.csv")).unwrap();
    assert!(table.starts_with("probe,a,b,T_c,rms_residual,amplitude_range,accepted\n"));

    fs::write(&path, "T,central\n0.1,oops\n").unwrap();
    let o = subplanck(&["fit", "--model", "bose", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
