use dissipator::io::Snapshot;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dissipator(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dissipator"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("DISSIPATOR_OUT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn two_cell_field_vanishes_after_its_last_pulse() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dissipator(tmp.path(), &["field", "--which", "v", "--time", "0.75", "--grid", "64", "--export", "v.bin"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let snap = Snapshot::load(&tmp.path().join("field-v-t0.75/v.bin")).unwrap();
    assert_eq!((snap.header.nx, snap.header.components), (64, 2));
    assert!(snap.planes.iter().flatten().all(|&x| x == 0.0));
}

#[test]
fn checks_are_reproducible_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["check", "--suite", "all", "--kappas", "1e-2,3e-3", "--grid", "128", "--samples", "500", "--seed", "11"];
    for run in ["a", "b"] {
        let o = dissipator(&tmp.path().join(run), &args);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (a, b) = (files(&tmp.path().join("a")), files(&tmp.path().join("b")));
    assert!(a.iter().any(|(name, _)| name.ends_with("atoms.csv")));
    assert!(a.iter().filter(|(name, _)| name.ends_with(".csv")).count() >= 7);
    assert_eq!(a, b);
}

#[test]
fn a_manifest_replays_its_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let o = dissipator(&first, &["--seed", "4", "sde", "--which", "v", "--grid", "64", "--point", "0.3,0.4", "--point", "1.1,0.6", "--samples", "400", "--kappa", "1e-2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = first.join("sde-v");
    let manifest = fs::read_to_string(run.join("manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"sde\"") && manifest.contains("seed = 4"), "{manifest}");

    let second = tmp.path().join("second");
    let config = run.join("manifest.toml");
    let o = dissipator(&second, &["--config", config.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let replay = second.join("sde-v");
    assert_eq!(fs::read(run.join("sde.csv")).unwrap(), fs::read(replay.join("sde.csv")).unwrap());
    assert_eq!(manifest, fs::read_to_string(replay.join("manifest.toml")).unwrap());
}

#[test]
fn sweep_writes_one_row_per_kappa_and_report_fits_them() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dissipator(tmp.path(), &["sweep", "--kappas", "1e-2,3e-3,1e-3", "--grid", "128"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("sweep-two-cell/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    assert!(tmp.path().join("sweep-two-cell/manifest.toml").exists());

    let o = dissipator(tmp.path(), &["report", "--dir", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rates = fs::read_to_string(tmp.path().join("rates.csv")).unwrap();
    assert!(rates.starts_with("experiment,datum,norm,points,exponent"), "{rates}");
    assert_eq!(rates.lines().count(), 2, "{rates}");
}

#[test]
fn exit_codes_separate_bad_input_from_blowup() {
    let tmp = tempfile::tempdir().unwrap();

    let o = dissipator(tmp.path(), &["check", "--suite", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));

    let o = dissipator(tmp.path(), &["--set", "kappas=[-1.0]", "check", "--suite", "depths"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kappa"), "{}", stderr(&o));

    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "seed = 1\n[job]\ncommand = \"check\"\nsuite = \"depths\"\nkappas = [1e-2]\nsamplez = 3\n").unwrap();
    let o = dissipator(tmp.path(), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("samplez") && msg.contains("line"), "{msg}");

    let o = dissipator(
        tmp.path(),
        &["solve", "--which", "zero", "--domain", "box", "--grid", "32", "--kappa", "1e-2", "--end", "0.1",
          "--data", "{kind=\"constant\",value=1.7e308}", "--set", "boundary={kind=\"zero\"}"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("blowup"));
}
