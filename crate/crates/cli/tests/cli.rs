use std::fs;
use std::process::Command;

fn smt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smt"))
}

#[test]
fn eval_prints_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let (cand, refr) = (tmp.path().join("hyp"), tmp.path().join("ref"));
    fs::write(&cand, "the cat sat on the mat\n").unwrap();
    fs::write(&refr, "the cat sat on the mat\n").unwrap();
    let out = smt()
        .args(["eval", "--metric", "bleu,ter", "--cand"])
        .arg(&cand)
        .arg("--refs")
        .arg(&refr)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("BLEU   1.0000"));
    assert_eq!(lines.next(), Some("TER    0.0000"));
}

#[test]
fn missing_training_file_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("x.cfg");
    fs::write(&cfg, "id = x\ntrain.src = nope.pl\ntrain.tgt = nope.en\nout_dir = runs\n").unwrap();
    let out = smt().args(["experiment", "run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("[tokenize]"), "{err}");
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn toy_data_then_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let st = smt()
        .args(["toy-data", "--size", "300", "--seed", "9", "--out"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(st.success());
    let cfg = tmp.path().join("toy.cfg");
    fs::write(
        &cfg,
        "id = t\ntrain.src = data/toy.pl\ntrain.tgt = data/toy.en\ntuning = 20\ntest = 30\ntune.rounds = 1\nout_dir = runs\n",
    )
    .unwrap();
    let out = smt().args(["experiment", "run", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("runs/t/report.txt").is_file());
    let out = smt()
        .args(["report", "--glob"])
        .arg(tmp.path().join("runs/*/report"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("Lang. Model"));
}
