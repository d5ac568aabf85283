//! Refinement sweep producing the error/DOF/time tables.
//!
//! ```bash
//! cargo run --release --example sweep -- crates/core/configs/idealized1_desk.toml 2 out/sweep
//! ```

use std::path::PathBuf;

use hdgel::bench::{sweep, Method, RunOptions};
use hdgel::cases::CaseConfig;
use hdgel::dg::overrefined_reference;

fn main() -> hdgel::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(p) => CaseConfig::load(&PathBuf::from(p))?,
        None => CaseConfig {
            p: 3,
            n_a: 8,
            ..CaseConfig::default()
        },
    };
    let max_level: usize = args.next().map_or(2, |s| s.parse().expect("level must be an integer"));
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("hdgel_sweep"), PathBuf::from);

    let reference = overrefined_reference(&cfg, Some(max_level + 4))?;
    let opts = RunOptions {
        reference: Some(&reference),
        ..RunOptions::default()
    };
    let levels: Vec<usize> = (0..=max_level).collect();
    let reports = sweep(&cfg, &[Method::Dg, Method::Hdg], &levels, &opts, &out)?;
    println!(
        "{:>6} {:>5} {:>8} {:>10} {:>9}",
        "method", "level", "dofs", "error", "time"
    );
    for r in &reports {
        println!(
            "{:>6} {:>5} {:>8} {:>10.3e} {:>9.4}",
            r.method,
            r.level,
            r.dofs,
            r.err_rel_l2.unwrap_or(f64::NAN),
            r.t_total
        );
    }
    println!("tables in {}", out.display());
    Ok(())
}
