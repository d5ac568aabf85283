//! Dataset generation, training and model export in one go, with the
//! per-epoch learning curve written next to the model.
//!
//! ```bash
//! cargo run --release --example train_surrogate -- crates/core/configs/pipeline_desk.toml out/desk
//! ```

use std::path::PathBuf;

use hdgel::bench::{train_pipeline, PipelineConfig};

fn main() -> hdgel::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(p) => PipelineConfig::load(&PathBuf::from(p))?,
        // Small enough to finish in a few seconds.
        None => PipelineConfig {
            n_samples: 60,
            epochs: vec![40, 20, 10],
            ..PipelineConfig::default()
        },
    };
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("hdgel_train"), PathBuf::from);

    let outcome = train_pipeline(&cfg, &out)?;
    let first = outcome.history.first().expect("at least one epoch");
    let last = outcome.history.last().expect("at least one epoch");
    println!(
        "test MAE {:.3e} after epoch {} -> {:.3e} after epoch {}",
        first.test_mae, first.epoch, last.test_mae, last.epoch
    );
    println!(
        "model:  {} ({} parameters)",
        outcome.model_path.display(),
        outcome.model.n_params()
    );
    println!("curve:  {}", outcome.curve_path.display());
    Ok(())
}
