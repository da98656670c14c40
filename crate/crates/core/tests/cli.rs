use std::path::Path;
use std::process::{Command, Output};

fn vortexlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortexlab"))
        .args(args)
        .arg("--output")
        .arg(dir.join("out"))
        .env_remove("VORTEXLAB_OUT")
        .output()
        .unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = vortexlab(tmp.path(), &["spectrum", "--delta", "0.9"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("delta must be < K"));

    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "current = 3.0\n").unwrap();
    let o = vortexlab(tmp.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_errors_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = vortexlab(tmp.path(), &["normal-form", "--I", "5", "--nx", "21", "--ny", "15"]);
    assert_eq!(o.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "RealLeadingEigenvalue");
}

#[test]
fn flags_override_file_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "I = 10.0\nnx = 21\nny = 15\n").unwrap();
    let o = vortexlab(tmp.path(), &["spectrum", "--config", cfg.to_str().unwrap(), "--I", "25"]);
    let v = stdout_json(&o);
    let dir = Path::new(v["dir"].as_str().unwrap());
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(written["data"]["I"], 25.0);
    assert_eq!(written["data"]["nx"], 21);
}

#[test]
fn second_run_is_served_from_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["beta", "--h", "20", "--I", "25", "--nx", "33", "--ny", "23"];
    let a = stdout_json(&vortexlab(tmp.path(), &args));
    assert_eq!(a["cached"], false);
    assert_eq!(a["record"]["summary"]["scenario"], "MIN_AND_MAX");
    let dir = Path::new(a["dir"].as_str().unwrap()).to_path_buf();
    let first = read_dir_sorted(&dir);
    let b = stdout_json(&vortexlab(tmp.path(), &args));
    assert_eq!(b["cached"], true);
    assert_eq!(read_dir_sorted(&dir), first);
}

#[test]
fn recomputation_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["normal-form", "--h", "2", "--I", "30", "--nx", "25", "--ny", "17", "--no-cache"];
    let a = stdout_json(&vortexlab(tmp.path(), &args));
    let dir = Path::new(a["dir"].as_str().unwrap()).to_path_buf();
    let first = read_dir_sorted(&dir);
    let b = stdout_json(&vortexlab(tmp.path(), &args));
    assert_eq!(b["cached"], false);
    assert_eq!(read_dir_sorted(&dir), first);
    // every file names the config hash
    let hash = a["record"]["config_hash"].as_str().unwrap();
    for (name, bytes) in &first {
        if name.ends_with(".field") {
            assert_eq!(bytes.len(), 16 * 25 * 17);
        } else {
            assert!(String::from_utf8_lossy(bytes).contains(hash), "{name}");
        }
    }
}

#[test]
fn spectrum_sweep_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let o = vortexlab(
        tmp.path(),
        &["spectrum", "--nx", "21", "--ny", "15", "--sweep-param", "I", "--sweep-from", "0", "--sweep-to", "24", "--sweep-count", "5"],
    );
    let v = stdout_json(&o);
    let dir = Path::new(v["dir"].as_str().unwrap());
    let csv = std::fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# vortexlab"));
    assert_eq!(lines.next().unwrap(), "value,index,branch,re,im");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 5 * 4);
    assert!(rows.iter().all(|r| r.split(',').count() == 5));
    let events = std::fs::read_to_string(dir.join("events.json")).unwrap();
    assert!(events.contains("COLLISION"));
}

#[test]
fn parallel_sweep_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ["sweep", "--h", "1", "--nx", "21", "--ny", "15", "--sweep-param", "I", "--sweep-from", "20", "--sweep-to", "40", "--sweep-count", "4", "--no-cache"];
    let a = stdout_json(&vortexlab(tmp.path(), &[&base[..], &["--workers", "1"]].concat()));
    let da = Path::new(a["dir"].as_str().unwrap()).to_path_buf();
    let first = read_dir_sorted(&da);
    let b = stdout_json(&vortexlab(tmp.path(), &[&base[..], &["--workers", "3"]].concat()));
    assert_eq!(a["dir"], b["dir"]);
    assert_eq!(read_dir_sorted(&da), first);
}
