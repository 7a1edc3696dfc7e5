use std::path::Path;
use std::process::{Command, Output};

fn geostoch(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geostoch"))
        .args(args)
        .env("GEOSTOCH_THREADS", threads)
        .output()
        .expect("spawn geostoch")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.conf");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn list_shows_catalog() {
    let out = geostoch(&["list"], "1");
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = s.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(names.len(), 10, "{s}");
    assert!(names.contains(&"fki") && names.contains(&"chernoff"));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "# small run\nexperiment = in-measure\nmanifold = torus:2\nform = cos_dtheta:1\nn = 64\nk_min = 3\nk_max = 7\n",
    );
    let mut csvs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let od = dir.path().join(format!("o{i}"));
        let out = geostoch(&["run", &cfg, "--set", &format!("output_dir={}", od.display())], threads);
        assert!(out.status.code() == Some(0) || out.status.code() == Some(1), "{out:?}");
        csvs.push(std::fs::read(od.join("results.csv")).unwrap());
        let manifest: serde_json::Value =
            serde_json::from_slice(&std::fs::read(od.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["experiment"], "in-measure");
        csvs.push(manifest["config_hash"].as_str().unwrap().as_bytes().to_vec());
    }
    assert_eq!(csvs[0], csvs[2]);
    assert_eq!(csvs[1], csvs[3]);
}

#[test]
fn unknown_manifold_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = strat-exactness\nmanifold = klein_bottle\n");
    let out = geostoch(&["run", &cfg], "1");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("manifold"), "{err}");
}

#[test]
fn unknown_experiment_and_key_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = nope\n");
    let out = geostoch(&["run", &cfg], "1");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("classical-rate"));

    let cfg = write_config(dir.path(), "experiment = diamagnetic\nbogus = 1\n");
    let out = geostoch(&["run", &cfg], "1");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("bogus"));
}

#[test]
fn diamagnetic_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = diamagnetic\n");
    let od = dir.path().join("out");
    let out = geostoch(&["run", &cfg, "--set", &format!("output_dir={}", od.display())], "1");
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
    assert!(od.join("results.csv").exists());
}
