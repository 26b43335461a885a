use std::path::Path;
use std::process::{Command, Output};

fn airgnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_airgnn")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY: &[&str] = &[
    "--set", "channel.pairs=4",
    "--set", "channel.frames=3",
    "--set", "channel.field_length_m=150",
    "--set", "data.train_layouts=20",
    "--set", "data.test_layouts=4",
    "--set", "train.iterations=3",
    "--set", "train.batch_size=5",
];

fn with_tiny<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend_from_slice(TINY);
    v
}

#[test]
fn show_config_applies_overrides() {
    let o = airgnn(&["show-config", "--set", "train.iterations=42"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("iterations = 42"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(airgnn(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(airgnn(&["train", "--kind", "transformer", "--out", "x"]).status.code(), Some(1));
    assert_eq!(airgnn(&["show-config", "--set", "train.foo=1"]).status.code(), Some(1));
    assert_eq!(airgnn(&["eval"]).status.code(), Some(1));
    assert_eq!(airgnn(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[train]\niterations = 5\nfoo = 1\n").unwrap();
    let o = airgnn(&["show-config", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.ckpt");
    std::fs::write(&junk, b"not a checkpoint").unwrap();
    assert_eq!(airgnn(&["inspect-checkpoint", junk.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.ckpt");
    assert_eq!(airgnn(&["eval", "--checkpoint", missing.to_str().unwrap()]).status.code(), Some(2));

    let out = dir.path().join("t3.csv");
    let ck = dir.path().join("none");
    let o = airgnn(&with_tiny(&["experiment", "table3", "--checkpoints", ck.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("airgnn train --kind"), "{}", stderr(&o));
}

#[test]
fn generate_train_evaluate_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (data, ckpt, curve, rows) = (p("test.ds"), p("air-mpnn.ckpt"), p("curve.csv"), p("rows.csv"));

    let o = airgnn(&with_tiny(&["gen-data", "--split", "test", "--out", &data]));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(Path::new(&data).exists());

    let o = airgnn(&with_tiny(&["eval", "--scheme", "epa", "--data", &data, "--per-layout", &rows]));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("epa K=4"));
    assert_eq!(std::fs::read_to_string(&rows).unwrap().lines().count(), 5);

    let o = airgnn(&with_tiny(&["train", "--kind", "air-mpnn", "--out", &ckpt, "--curve", &curve]));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(&curve).unwrap().starts_with("iteration,validation_sum_rate,learning_rate\n"));

    let o = airgnn(&["inspect-checkpoint", &ckpt]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("parameters  1882"), "{}", stdout(&o));

    let o = airgnn(&with_tiny(&["eval", "--checkpoint", &ckpt, "--data", &data]));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("air-mpnn K=4"));
    let o = airgnn(&with_tiny(&["eval", "--scheme", "mpnn", "--checkpoint", &ckpt]));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn experiments_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let ck = p("ck");
    let o = airgnn(&with_tiny(&["experiment", "fig5-curve", "--checkpoints", &ck, "--out", &p("curve.csv")]));
    assert!(o.status.success(), "{}", stderr(&o));
    for kind in ["mpnn", "air-mpnn", "air-mprnn"] {
        assert!(dir.path().join("ck").join(format!("{kind}.ckpt")).exists());
    }
    let args = |out: &str| {
        let mut v = vec!["experiment".to_string(), "fig6-size-sweep".into(), "--checkpoints".into(), ck.clone()];
        v.extend(["--out".into(), out.to_string(), "--layouts".into(), "2".into(), "--pairs".into(), "4,30".into()]);
        v.extend(TINY.iter().map(|s| s.to_string()));
        v
    };
    for out in ["a.csv", "b.csv"] {
        let a: Vec<String> = args(&p(out));
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        let o = airgnn(&refs);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read_to_string(p("a.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(p("b.csv")).unwrap());
    assert!(a.starts_with("# schema=airgnn-sweep v1 experiment=fig6-size-sweep\nscheme,pairs,"));
    let cliff = a
        .lines()
        .find(|l| l.starts_with("mpnn,30,2,20,"))
        .expect("MPNN row at K=30 with the hard overhead setting");
    assert_eq!(cliff.split(',').nth(7), Some("0.000000"));
}

#[test]
fn oracle_smoke_passes() {
    let o = airgnn(&["oracle", "--scale", "small"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(!stdout(&o).contains("FAIL"));
}
