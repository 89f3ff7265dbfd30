use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kgz_lab::output::{read_manifest, sha256_hex};

const SMALL: &str =
    "[grid]\ndr = 0.05\n[time]\nt_max = 8\nsnapshot_stride = 4\n[data]\nfamily = gaussian\neps = 0.01\n";

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgz-lab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn identities_are_byte_identical_for_a_fixed_seed() {
    let d = tempfile::tempdir().unwrap();
    let (a, b, c) = (out_arg(d.path(), "a"), out_arg(d.path(), "b"), out_arg(d.path(), "c"));
    for o in [&a, &b] {
        assert!(lab(&["identities", "--seed", "7", "--out", o]).status.success());
    }
    assert!(lab(&["identities", "--seed", "8", "--out", &c]).status.success());
    let read = |o: &str| fs::read(Path::new(o).join("identity_report.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let text = String::from_utf8(read(&a)).unwrap();
    assert!(text.starts_with("check_name,samples,max_residual,scale,pass\n"));
    assert!(!text.contains('\r'));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")), "{text}");
}

#[test]
fn zero_data_gives_zero_energies() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), &SMALL.replace("eps = 0.01", "eps = 0"));
    let out = out_arg(d.path(), "o");
    let r = lab(&["solve", "--config", &cfg, "--out", &out]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let mut rdr = csv::Reader::from_path(Path::new(&out).join("energies.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["t", "component", "kind", "value"]);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[3].parse::<f64>().unwrap(), 0.0, "{rec:?}");
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn manifest_lists_every_emitted_file_with_its_hash() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let out = out_arg(d.path(), "o");
    assert!(
        lab(&["solve", "--config", &cfg, "--out", &out, "--seed", "3", "--jobs", "2"])
            .status
            .success()
    );
    let m = read_manifest(Path::new(&out)).unwrap();
    assert_eq!(
        (m.subcommand.as_str(), m.seed, m.jobs, m.status.as_str()),
        ("solve", 3, 2, "complete")
    );
    assert!(m.end_unix_ms >= m.start_unix_ms);
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = m.files.iter().map(|f| f.name.clone()).collect();
    listed.sort();
    assert_eq!(on_disk, listed);
    for f in &m.files {
        assert_eq!(f.sha256, sha256_hex(&fs::read(Path::new(&out).join(&f.name)).unwrap()));
    }
}

#[test]
fn bad_configuration_exits_with_code_one_and_names_every_key() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        &SMALL.replace("dr = 0.05", "dr = -1").replace("eps = 0.01", "eps = -2"),
    );
    let r = lab(&["solve", "--config", &cfg, "--out", &out_arg(d.path(), "o")]);
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("grid.dr") && err.contains("data.eps"), "{err}");
    assert!(!d.path().join("o").exists());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(lab(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let d = tempfile::tempdir().unwrap();
    let r = lab(&["solve", "--config", &out_arg(d.path(), "absent.cfg")]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn failed_run_leaves_a_partial_manifest() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let out = out_arg(d.path(), "o");
    let r = lab(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        &out,
        "--resume",
        &out_arg(d.path(), "none.kgzl"),
    ]);
    assert_eq!(r.status.code(), Some(3));
    let m = read_manifest(Path::new(&out)).unwrap();
    assert_eq!(m.status, "partial");
    assert!(m.error.unwrap().contains("none.kgzl"));
    assert!(m.files.is_empty());
}

#[test]
fn csv_only_output_skips_the_summary() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), &format!("{SMALL}[output]\nformats = csv\n"));
    let out = out_arg(d.path(), "o");
    assert!(lab(&["identities", "--config", &cfg, "--out", &out, "--samples", "20"])
        .status
        .success());
    assert!(Path::new(&out).join("identity_report.csv").exists());
    assert!(!Path::new(&out).join("summary.json").exists());
}
