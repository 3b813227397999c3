use std::path::Path;
use std::process::{Command, Output};

fn oucr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oucr")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = oucr(dir, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["gen-data", "--out", "data", "--count", "20", "--seed", "3"]);
    for split in ["train", "val", "test"] {
        assert!(d.join("data").join(split).join("manifest.json").exists());
    }
    assert!(d.join("data/run_config.json").exists());

    let train_args =
        ["train", "--data", "data", "--out", "run", "--base-channels", "2", "--iterations", "1", "--epochs", "2"];
    ok(d, &train_args);
    for f in ["metrics.csv", "last.state.json", "best.state.json", "run_config.json"] {
        assert!(d.join("run").join(f).exists(), "{f}");
    }
    let metrics = std::fs::read_to_string(d.join("run/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);

    ok(d, &["reconstruct", "--data", "data/test", "--checkpoint", "run", "--out", "recon", "--no-png"]);
    ok(d, &["reconstruct", "--data", "data/test", "--zero-filled", "--out", "zf"]);
    assert!(d.join("zf/png").is_dir());
    let out = ok(d, &["eval", "--recon", "recon", "--reference", "data/test", "--out", "eval", "--method", "oucr"]);
    assert!(out.contains("oucr"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("eval/summary.json")).unwrap()).unwrap();
    for band in ["full", "low", "high"] {
        assert!(summary["oucr"][band]["psnr"]["mean"].is_number(), "{band}");
    }
    let csv = std::fs::read_to_string(d.join("eval/report.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "id,method,af,band,psnr_db,ssim");

    ok(d, &["cs", "--data", "data/test", "--out", "cs", "--max-iters", "20", "--trace", "--no-png"]);
    assert!(d.join("cs/traces").read_dir().unwrap().count() > 0);
    ok(d, &["kband", "--recon", "cs", "--reference", "data/test", "--out", "kb"]);
    assert!(d.join("kb/bands.csv").exists());

    // resuming a finished run with a larger budget continues the history
    let mut more = train_args.to_vec();
    let last = more.len() - 1;
    more[last] = "3";
    more.push("--resume");
    let out = ok(d, &more);
    assert!(out.contains("epoch   2"), "{out}");
    assert!(!out.contains("epoch   0"));
}

#[test]
fn mask_and_small_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = ok(d, &["mask", "--af", "8", "--w", "64", "--h", "16"]);
    assert!(out.contains("sampled 8 of 64"), "{out}");
    assert_eq!(std::fs::read(d.join("mask.bin")).unwrap().len(), 16 * 64);
    assert!(d.join("mask.json").exists() && d.join("run_config.json").exists());

    let n: usize = ok(d, &["param-count", "--base-channels", "2", "--iterations", "1"]).trim().parse().unwrap();
    assert!(n > 0);
    let n_uc: usize =
        ok(d, &["param-count", "--base-channels", "2", "--no-oc", "--no-rm"]).trim().parse().unwrap();
    assert!(n_uc < n);

    let rf = ok(d, &["rf-probe", "--size", "64"]);
    let rows: Vec<Vec<&str>> = rf.lines().skip(1).map(|l| l.split(' ').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "oc");
    let area = |r: &Vec<&str>| r[4].parse::<usize>().unwrap();
    assert!(area(&rows[0]) < area(&rows[1]));
}

#[test]
fn errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(oucr(d, &["train"]).status.code(), Some(2));
    assert_eq!(oucr(d, &["no-such-command"]).status.code(), Some(2));
    assert_eq!(oucr(d, &["param-count", "--no-oc", "--no-uc"]).status.code(), Some(2));

    std::fs::write(d.join("conflict.json"), r#"{"seed": 1, "train": {"seed": 2}}"#).unwrap();
    assert_eq!(oucr(d, &["param-count", "--config", "conflict.json"]).status.code(), Some(2));

    std::fs::create_dir(d.join("broken")).unwrap();
    std::fs::write(d.join("broken/manifest.json"), "{ not json").unwrap();
    let o = oucr(d, &["cs", "--data", "broken"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn identical_configs_give_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for run in ["a", "b"] {
        let data = format!("{run}/data");
        let out = format!("{run}/run");
        ok(d, &["gen-data", "--out", &data, "--count", "12", "--seed", "7"]);
        ok(d, &["train", "--data", &data, "--out", &out, "--base-channels", "2", "--iterations", "1", "--epochs", "2"]);
    }
    for f in ["data/train/samples.bin", "data/test/manifest.json", "run/last.bin", "run/last.adam_v.bin"] {
        let a = std::fs::read(d.join("a").join(f)).unwrap();
        let b = std::fs::read(d.join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}
