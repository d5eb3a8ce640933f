use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orthospec"))
}

fn run(dir: &Path, cfg: &str, args: &[&str], out: &str) -> std::process::Output {
    let path = dir.join("config.json");
    std::fs::write(&path, cfg).unwrap();
    bin()
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join(out))
        .env_remove("ORTHOSPEC_WORKERS")
        .output()
        .unwrap()
}

fn report(dir: &Path, out: &str, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(out).join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn volumes_of_a_ball() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"bodies": {"K1": {"type": "ball", "center": [0, 0, 0], "radius": 0.5},
                             "K2": {"type": "point", "center": [0, 0, 0]}}}"#;
    let o = run(dir.path(), cfg, &["volumes"], "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "out", "volumes");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["ranges"]["t0"].as_f64().unwrap(), 2.0);
    let v: Vec<f64> = r["report"]["bodies"]["K1"]["intrinsic"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    // r = 1/2: V₁ = 4r, V₂ = 2πr², V₃ = 4πr³/3
    let want = [1.0, 2.0, PI / 2.0, PI / 6.0];
    for (a, b) in v.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{v:?}");
    }
    assert!(dir.path().join("out/volumes.csv").exists());
    assert!(dir.path().join("out/volumes.gp").exists());
}

#[test]
fn spectrum_multiplicities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"bodies": {"K1": {"type": "point", "center": [0, 0]}, "K2": {"type": "point", "center": [0, 0]}},
                  "ranges": {"t_max": 400, "t_ladder": [100, 400]}}"#;
    let o = run(dir.path(), cfg, &["spectrum"], "out");
    assert!(o.status.success());
    let groups = std::fs::read_to_string(dir.path().join("out/spectrum_groups.csv")).unwrap();
    let rows: Vec<(f64, usize)> = groups
        .lines()
        .skip(1)
        .take(2)
        .map(|l| {
            let mut it = l.split(',');
            (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    assert!((rows[0].0 - 2.0 * PI).abs() < 1e-12 && rows[0].1 == 4);
    assert!((rows[1].0 - 2.0 * PI * 2f64.sqrt()).abs() < 1e-12 && rows[1].1 == 4);
    let r = report(dir.path(), "out", "spectrum");
    let n = r["report"]["counts"][1]["N"].as_f64().unwrap();
    assert!((n * 4.0 * PI / 400f64.powi(2) - 1.0).abs() < 0.01);
}

#[test]
fn residue_table_matches_volumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"bodies": {"K1": {"type": "ellipsoid", "center": [0, 0], "axes": [1.3, 0.7]},
                             "K2": {"type": "point", "center": [0.2, 0.1]}},
                  "ranges": {"t_max": 500}}"#;
    assert!(run(dir.path(), cfg, &["zeta", "--report-residues"], "z").status.success());
    assert!(run(dir.path(), cfg, &["volumes"], "v").status.success());
    let z = report(dir.path(), "z", "zeta");
    let v = report(dir.path(), "v", "volumes");
    let vol = &v["report"]["difference_body"]["intrinsic"];
    let norm = (2.0 * PI).powi(-2);
    // Res_1 = 2·V_1/(2π)², Res_2 = 2π·V_0/(2π)²
    let res = &z["report"]["residues"];
    let r1 = res[0]["residue"][0].as_f64().unwrap();
    let r2 = res[1]["residue"][0].as_f64().unwrap();
    assert!((r1 - 2.0 * vol[1].as_f64().unwrap() * norm).abs() < 1e-10);
    assert!((r2 - 2.0 * PI * vol[0].as_f64().unwrap() * norm).abs() < 1e-12);
    for e in res[0]["empirical"].as_array().unwrap() {
        assert!((e[0].as_f64().unwrap() - r1).abs() < 0.01 * r1);
    }
}

#[test]
fn deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"bodies": {"K1": {"type": "ball", "center": [0, 0, 0], "radius": 0.3},
                             "K2": {"type": "ellipsoid", "center": [1, 0.5, 0.2], "axes": [0.2, 0.3, 0.25]}},
                  "ranges": {"t_max": 60, "t_ladder": [20, 40]}}"#;
    std::fs::write(dir.path().join("config.json"), cfg).unwrap();
    for (w, out) in [("1", "w1"), ("4", "w4")] {
        for cmd in ["spectrum", "zeta"] {
            let o = bin()
                .arg(cmd)
                .arg("--config")
                .arg(dir.path().join("config.json"))
                .arg("--out")
                .arg(dir.path().join(out))
                .env("ORTHOSPEC_WORKERS", w)
                .output()
                .unwrap();
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
    }
    for f in ["spectrum.csv", "spectrum.json", "spectrum_counts.csv", "zeta.json", "zeta.csv"] {
        let a = std::fs::read(dir.path().join("w1").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("w4").join(f)).unwrap();
        assert!(a == b, "{f} differs between worker counts");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = r#"{"bodies": {"K1": {"type": "point", "center": [0, 0]}, "K2": {"type": "point", "center": [0, 0]}}, "tmax": 3}"#;
    assert_eq!(run(dir.path(), unknown, &["spectrum"], "out").status.code(), Some(2));
    let orient = r#"{"bodies": {"K1": {"type": "point", "center": [0, 0]}, "K2": {"type": "point", "center": [0, 0]}}, "orientation": "++"}"#;
    assert_eq!(run(dir.path(), orient, &["spectrum"], "out").status.code(), Some(2));
    let missing = r#"{"bodies": {"A": {"type": "point", "center": [0, 0]}}}"#;
    assert_eq!(run(dir.path(), missing, &["volumes"], "out").status.code(), Some(2));
    // a module error is reported with exit code 1
    let bad = r#"{"bodies": {"K1": {"type": "ball", "center": [0, 0], "radius": 0.3}, "K2": {"type": "point", "center": [0, 0]}}}"#;
    assert_eq!(run(dir.path(), bad, &["guinand"], "out").status.code(), Some(1));
}

#[test]
fn guinand_and_correlate_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"bodies": {"K1": {"type": "point", "center": [0, 0, 0]}, "K2": {"type": "point", "center": [-2.9, -2.3, -1.7]}},
                  "twist": {"beta0": [0.41, 0.57, 0.61]},
                  "ranges": {"t_max": 60, "t_ladder": [50, 100, 200]},
                  "phi": {"modes": [{"xi": [1, 0, 0], "re": 1}, {"xi": [0, 1, 1], "terms": [{"exponents": [1, 0, 0], "re": 0.5}]}]}}"#;
    assert!(run(dir.path(), cfg, &["guinand"], "g").status.success());
    let g = report(dir.path(), "g", "guinand");
    assert!(g["report"]["rel_diff"].as_f64().unwrap() < 1e-3);
    assert!(run(dir.path(), cfg, &["correlate"], "c").status.success());
    let c = report(dir.path(), "c", "correlate");
    let p = &c["report"]["parseval"];
    assert!((p["mode_sum"][0].as_f64().unwrap() - p["direct"][0].as_f64().unwrap()).abs() < 1e-10);
    let csv = std::fs::read_to_string(dir.path().join("c/correlate.csv")).unwrap();
    assert!(csv.starts_with("t,value_re,value_im,expansion_re,expansion_im,residual\n"));
}
