//! Exact element-local operators: inflow trace to outflow trace, and inflow
//! trace to mean intensity. Also shows that the operators only depend on
//! `h sigma`, which is what lets one network serve every mesh size.
//!
//! ```bash
//! cargo run --release --example local_operators
//! ```

use hdgel::local::{exact_local_operators, Discretization, ElementSize, SigmaField};

fn main() -> hdgel::Result<()> {
    let disc = Discretization::new(3, 8, 0.8)?;
    let nodes = disc.n_nodes();
    let scattering: Vec<f64> = (0..nodes).map(|k| 1.0 + 0.5 * (k as f64).sin()).collect();
    let sigma = SigmaField::from_scattering(3, scattering.clone(), 1.0)?;

    let ops = exact_local_operators(&disc, &sigma, ElementSize::square(0.5), None)?;
    println!(
        "A_i2o is {}x{}, A_i2m is {}x{}",
        ops.a_i2o.nrows(),
        ops.a_i2o.ncols(),
        ops.a_i2m.nrows(),
        ops.a_i2m.ncols()
    );

    // Unit inflow from every direction with omega = 1 is a uniform radiation
    // field, so both the mean intensity and the outflow stay at one.
    let ones = nalgebra::DVector::from_element(disc.n_in(), 1.0);
    let mean = &ops.a_i2m * &ones;
    let out = &ops.a_i2o * &ones;
    println!(
        "unit inflow: mean in [{:.10}, {:.10}], outflow in [{:.10}, {:.10}]",
        mean.min(),
        mean.max(),
        out.min(),
        out.max()
    );

    // Same element at h = 0.5 versus the reference element h = 2 with sigma * h / 2.
    let scaled = SigmaField::from_scattering(3, scattering.iter().map(|s| s * 0.25).collect(), 1.0)?;
    let reference = exact_local_operators(&disc, &scaled, ElementSize::square(2.0), None)?;
    let diff = (&ops.a_i2o - &reference.a_i2o).norm() / ops.a_i2o.norm();
    println!("relative difference after rescaling: {diff:.2e}");
    Ok(())
}
