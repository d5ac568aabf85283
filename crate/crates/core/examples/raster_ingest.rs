//! Load a cloud extinction raster, inspect it, and solve the beam problem on it.
//!
//! ```bash
//! cargo run --release --example raster_ingest -- crates/core/configs/i3rc_desk.toml
//! ```

use std::path::PathBuf;

use hdgel::bench::{run_case, Method, RunOptions};
use hdgel::cases::{CaseConfig, CloudRaster};

fn main() -> hdgel::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/i3rc_desk.toml"));
    let cfg = CaseConfig::load(&path)?;
    let (lx, ly) = cfg.extents();
    let raster_path = cfg.paths.raster.clone().expect("raster case");
    let raster = CloudRaster::load(&raster_path, lx, ly, cfg.sigma_scale)?;
    let peak = raster.values.iter().cloned().fold(0.0, f64::max);
    println!(
        "{}: {} x {} samples over {lx} x {ly}, peak {peak:.2}, {} negative values clamped",
        raster_path.display(),
        raster.cols,
        raster.rows,
        raster.clamped
    );
    for x in [1.0, 4.0, 9.5] {
        println!("  sigma({x}, 0.5) = {:.3}", raster.sample(x, 0.5));
    }

    let r = run_case(&cfg, Method::Hdg, cfg.l, &RunOptions::default())?.report;
    println!(
        "hdg level {}: {} dofs, {} iterations, {:.3}s",
        r.level, r.dofs, r.gmres_iters, r.t_total
    );
    Ok(())
}
