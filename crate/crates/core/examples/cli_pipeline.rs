//! Runs the whole command-line pipeline in-process on a small synthetic cohort.
//!
//! `cargo run --release --example cli_pipeline -- [work_dir]`

use drgrade::pipeline::cli::main_with;

fn step(args: &[&str]) {
    println!("$ drgrade {}", args.join(" "));
    let code = main_with(std::iter::once("drgrade").chain(args.iter().copied()).map(Into::into));
    assert_eq!(code, 0, "step failed");
}

fn main() {
    let work = std::env::args().nth(1).unwrap_or_else(|| "pipeline_demo".into());
    std::fs::create_dir_all(&work).expect("work dir");
    std::env::set_current_dir(&work).expect("cd");
    std::fs::write(
        "config.json",
        r#"{
  "out_dir": "run",
  "data": {"manifest": "data/manifest.csv"},
  "augmentation": {"multiplier": 2},
  "model": {
    "input_size": [16, 16],
    "branch_a": {"kind": "toy_cnn", "channels": [4, 8]},
    "branch_b": {"kind": "toy_cnn", "channels": [4, 8]},
    "head": {"hidden": [32, 16, 8]}
  },
  "train": {"epochs": 4, "batch_size": 16},
  "tune": {"space": {"budget": 8}}
}"#,
    )
    .expect("config");
    step(&["synth", "--out", "data", "--counts", "40,20,20,20,20", "--size", "16", "--seed", "1"]);
    for cmd in ["prepare", "train", "evaluate"] {
        step(&["--config", "config.json", "--seed", "1", cmd]);
    }
    step(&["--config", "config.json", "predict", "data/images/syn00000.png", "data/images/syn00050.png"]);
    step(&["--config", "config.json", "tune", "--stub"]);
    step(&["--config", "config.json", "report"]);
}
