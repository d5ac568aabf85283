//! Replace exact local solves with network predictions and compare the
//! resulting solution against exact HDG and an overrefined reference.
//!
//! Pass a trained model to skip the short training run:
//!
//! ```bash
//! cargo run --release --example element_learning -- out/desk/model.bin
//! ```

use std::path::PathBuf;

use hdgel::bench::{gen_data, run_case, train_model, Method, PipelineConfig, RunOptions};
use hdgel::cases::CaseConfig;
use hdgel::dg::overrefined_reference;
use hdgel::surrogate::load_model_for;

fn main() -> hdgel::Result<()> {
    let cfg = CaseConfig {
        p: 3,
        n_a: 8,
        ..CaseConfig::default()
    };
    let model = match std::env::args().nth(1) {
        Some(p) => load_model_for(&PathBuf::from(p), cfg.p, cfg.n_a)?,
        None => {
            let pc = PipelineConfig {
                n_samples: 100,
                epochs: vec![150, 50, 20],
                ..PipelineConfig::default()
            };
            let ds = gen_data(&pc)?;
            let (model, history) = train_model(&pc, &ds, |_| {})?;
            println!(
                "trained a quick model, test MAE {:.3e}",
                history.last().map_or(f64::NAN, |r| r.test_mae)
            );
            model
        }
    };

    let level = 1;
    let reference = overrefined_reference(&cfg, Some(level + 4))?;
    let opts = RunOptions {
        model: Some(&model),
        reference: Some(&reference),
        ..RunOptions::default()
    };
    for method in Method::ALL {
        let r = run_case(&cfg, method, level, &opts)?.report;
        println!(
            "{:>6}: error {:.3e}, local phase {:.4}s, total {:.4}s",
            r.method,
            r.err_rel_l2.unwrap_or(f64::NAN),
            r.t_local,
            r.t_total
        );
    }
    Ok(())
}
