//! Collimated beam through the two-bump scattering field, solved with DG and
//! HDG, with the mean intensity written to CSV for plotting.
//!
//! ```bash
//! cargo run --release --example beam_case -- crates/core/configs/idealized1_desk.toml
//! ```

use std::io::Write;
use std::path::PathBuf;

use hdgel::bench::{run_case, Method, RunOptions};
use hdgel::cases::CaseConfig;

fn main() -> hdgel::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/idealized1_desk.toml"));
    let cfg = CaseConfig::load(&path)?;
    println!("case {} at level {} (p={}, N_a={})", cfg.case, cfg.l, cfg.p, cfg.n_a);

    let opts = RunOptions::default();
    let mut last = None;
    for method in [Method::Dg, Method::Hdg] {
        let out = run_case(&cfg, method, cfg.l, &opts)?;
        let r = &out.report;
        println!(
            "{:>4}: {} dofs, {} iterations, local {:.3}s global {:.3}s total {:.3}s",
            r.method, r.dofs, r.gmres_iters, r.t_local, r.t_global, r.t_total
        );
        last = Some(out.field);
    }

    // Sample the HDG field on a regular grid.
    let field = last.expect("two methods ran");
    let quad = hdgel::basis::lgl_quadrature(field.degree)?;
    let out = std::env::temp_dir().join("beam_case_mean_intensity.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&out)?);
    writeln!(f, "x,y,mean_intensity")?;
    let (nx, ny) = (120, 80);
    for j in 0..=ny {
        for i in 0..=nx {
            let x = field.lx * i as f64 / nx as f64;
            let y = field.ly * j as f64 / ny as f64;
            writeln!(f, "{x},{y},{}", field.eval(&quad, x, y)?)?;
        }
    }
    println!("mean intensity written to {}", out.display());
    Ok(())
}
