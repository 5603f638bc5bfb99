#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lionex_cli::commands::{
    compute_stats, generate_data, train_decoder, train_predictor, GenerateArgs, KindArg, TrainArgs,
};
use lionex_cli::workspace::Workspace;

pub fn generate_args(kind: KindArg) -> GenerateArgs {
    GenerateArgs {
        kind,
        seed: 7,
        from: None,
        samples: None,
        features: 6,
        units: 6,
        sensors: 5,
        window: 20,
        threshold: 40.0,
        regression: false,
        max_features: None,
        train_ratio: 0.8,
    }
}

/// Fresh directory under the cargo test scratch area.
pub fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Generated data plus trained predictor, decoder and stats.
pub fn trained(name: &str, kind: KindArg) -> Workspace {
    let dir = scratch(name);
    generate_data(&dir, &generate_args(kind)).unwrap();
    let ws = Workspace::open(&dir).unwrap();
    let args = TrainArgs { seed: 7, epochs: None };
    train_predictor(&ws, &args).unwrap();
    train_decoder(&ws, &args).unwrap();
    compute_stats(&ws).unwrap();
    ws
}
