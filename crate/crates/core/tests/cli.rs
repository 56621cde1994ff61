use std::path::Path;
use std::process::{Command, Output};

fn odece(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odece"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        r#"{
  "problem": "mdkp_weights",
  "seed": 5,
  "mdkp": {"num_items": 8, "num_instances": 40, "split": {"train": 24, "validation": 6, "test": 10}},
  "train": {"epochs": 2, "batch_size": 8, "learning_rate": 0.05},
  "alphas": [0.2, 0.8],
  "seeds": [0, 1]
}"#,
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn gen_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = odece(&["gen", "--config", &cfg, "--out", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read_dir_bytes(&a), read_dir_bytes(&b));
}

#[test]
fn default_gen_manifest_records_default_split() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("data");
    let out = odece(&["gen", "--seed", "2", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let text = manifest.to_string();
    assert!(text.contains("\"train\":900"), "{text}");
    assert!(text.contains("\"validation\":100"));
    assert!(text.contains("\"test\":500"));
    assert!(text.contains("\"seed\":2"));
}

#[test]
fn input_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let unwritable = blocker.join("sub");
    let out = odece(&["gen", "--out", unwritable.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let missing = tmp.path().join("nope");
    let out = odece(&["train", "--data", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = odece(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_eval_sweep_plot_round() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let data = tmp.path().join("data");
    let data_s = data.to_str().unwrap();
    assert!(odece(&["gen", "--config", &cfg, "--out", data_s]).status.success());

    let run = tmp.path().join("run");
    let out = odece(&["train", "--config", &cfg, "--data", data_s, "--loss", "mse", "--out", run.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run.join("model.json").exists());
    let history = std::fs::read_to_string(run.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
    assert!(history.starts_with("epoch,train_loss,validation_loss,validation_infeasibility,validation_regret"));

    let eval = tmp.path().join("eval");
    let model = run.join("model.json");
    let out = odece(&["eval", "--data", data_s, "--model", model.to_str().unwrap(), "--out", eval.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval.join("report.json")).unwrap()).unwrap();
    assert!(report.get("infeasibility_ratio").is_some());
    assert!(report.get("normalized_regret").is_some());
    assert_eq!(report["num_instances"], 10);
    assert!(eval.join("instances.csv").exists());

    let sweep = tmp.path().join("sweep");
    let out = odece(&["sweep", "--config", &cfg, "--data", data_s, "--epochs", "40", "--out", sweep.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let frontier = std::fs::read_to_string(sweep.join("frontier.csv")).unwrap();
    // 2 alphas x 2 seeds plus 2 MSE runs.
    assert_eq!(frontier.lines().count(), 1 + 6);
    assert!(sweep.join("aggregate.csv").exists());
    assert_eq!(std::fs::read_dir(sweep.join("history")).unwrap().count(), 6);

    let svg = tmp.path().join("frontier.svg");
    let frontier_path = sweep.join("frontier.csv");
    for _ in 0..2 {
        let out = odece(&["plot", "--input", frontier_path.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let first = std::fs::read(&svg).unwrap();
    let out = odece(&["plot", "--input", frontier_path.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(first, std::fs::read(&svg).unwrap());
    assert!(String::from_utf8(first).unwrap().starts_with("<svg"));
}

#[test]
fn plot_rejects_header_only_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("f.csv");
    std::fs::write(&csv, "model,alpha,seed,infeasibility,regret\n").unwrap();
    let svg = tmp.path().join("f.svg");
    let out = odece(&["plot", "--input", csv.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!svg.exists());
}
