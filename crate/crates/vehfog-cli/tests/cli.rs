//! Black-box tests of the `vehfog` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vehfog"))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_minimal_config_prints_full_delivery() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("min.conf");
    fs::write(
        &cfg,
        "trace.n_vehicles = 2\ntrace.road_length_m = 200\ntrace.lanes = 1\nprotocol = relay_multihop\nduration_s = 2\n",
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("delivery_prob 1.000000"), "{}", stdout(&out));
    for f in ["events.csv", "hops.csv", "frames.csv", "results.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "missing {f}");
    }
}

#[test]
fn unknown_config_key_exits_one_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "radio.power_w = 5\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("radio.power_w"), "{}", stderr(&out));
}

#[test]
fn repo_configs_validate_and_run_quickly() {
    let configs = repo_root().join("configs");
    let mut found = 0;
    for entry in fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().map(|e| e != "conf").unwrap_or(true) {
            continue;
        }
        found += 1;
        let dir = tempfile::tempdir().unwrap();
        let started = std::time::Instant::now();
        let out = bin()
            .args(["run", "--config"])
            .arg(&path)
            .arg("--out-dir")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{}: {}", path.display(), stderr(&out));
        assert!(
            started.elapsed().as_secs() < 60,
            "{} exceeded the 60 s budget",
            path.display()
        );
    }
    assert!(found >= 3, "expected the example configs to be present");
}

#[test]
fn print_config_dumps_resolved_values() {
    let out = bin().args(["run", "--print-config"]).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("radio.range_m = 300"), "{text}");
    assert!(text.contains("mac.cw_max = 1023"), "{text}");
    assert!(text.contains("protocol = hybrid_vehfog"), "{text}");
}

#[test]
fn help_lists_config_keys_with_units() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    for needle in ["radio.range_m", "[m]", "mac.slot_time_us", "[us]", "msg.schedule", "fog.spacing_m"] {
        assert!(text.contains(needle), "help misses {needle}:\n{text}");
    }
}

#[test]
fn link_calculator_matches_worked_example() {
    let out = bin()
        .args(["link", "--distance", "200", "--crossings", "2", "--l-obs", "20"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("o_shadow_db 26.000"), "{text}");
    assert!(text.contains("rx_power_dbm -99.878"), "{text}");
    assert!(text.contains("loc 1"), "{text}");

    let out = bin()
        .args([
            "link", "--distance", "200", "--crossings", "2", "--l-obs", "20", "--alpha", "0",
            "--beta", "0",
        ])
        .output()
        .unwrap();
    assert!(stdout(&out).contains("loc 0"), "{}", stdout(&out));

    let out = bin().args(["link", "--distance", "-5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_map_grid_example() {
    let dir = tempfile::tempdir().unwrap();
    let map_path = dir.path().join("grid.map");
    let out = bin()
        .args(["gen", "map", "--nx", "3", "--ny", "3", "--block-m", "80", "--street-m", "20", "--out"])
        .arg(&map_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&map_path).unwrap();
    let map = vehfog::geometry::ObstacleMap::parse(&text).unwrap();
    assert_eq!(map.buildings().len(), 9);
}

#[test]
fn generators_are_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = bin()
            .args(["gen", "trace", "--n-vehicles", "20", "--seed", "7", "--out"])
            .arg(path)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let m1 = dir.path().join("m1.map");
    let m2 = dir.path().join("m2.map");
    for path in [&m1, &m2] {
        let out = bin()
            .args(["gen", "map", "--nx", "4", "--ny", "2", "--stagger-m", "60", "--out"])
            .arg(path)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
}

#[test]
fn sweep_single_point_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.conf");
    fs::write(&cfg, "trace.n_vehicles = 20\nmsg.schedule = 0@1.0\n").unwrap();

    let run_dir = dir.path().join("run");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seed", "3", "--protocol", "flooding", "--out-dir"])
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let sweep_dir = dir.path().join("sweep");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args([
            "--densities", "20", "--seeds", "3", "--protocols", "flooding", "--jobs", "1",
            "--out-dir",
        ])
        .arg(&sweep_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let run_csv = fs::read_to_string(run_dir.join("results.csv")).unwrap();
    let sweep_csv = fs::read_to_string(sweep_dir.join("results.csv")).unwrap();
    assert_eq!(run_csv, sweep_csv);
    assert!(sweep_dir.join("delivery_prob.dat").exists());
    assert!(sweep_dir.join("delay_mean_s.dat").exists());
}
