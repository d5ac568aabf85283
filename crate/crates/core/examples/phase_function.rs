//! Henyey-Greenstein scattering on a discrete angular grid.
//!
//! ```bash
//! cargo run --example phase_function -- 0.8
//! ```

use hdgel::angular::{build_angular_grid, scattering_kernel_matrix, HenyeyGreenstein};

fn main() -> hdgel::Result<()> {
    let g: f64 = std::env::args()
        .nth(1)
        .map_or(0.8, |s| s.parse().expect("asymmetry must be a number"));
    let hg = HenyeyGreenstein::new(g)?;
    println!("g = {g}, normalization = {:.6}", hg.normalization());
    for deg in [0.0f64, 30.0, 90.0, 180.0] {
        println!("  phase({deg:>5} deg) = {:.5}", hg.eval(deg.to_radians()));
    }

    let grid = build_angular_grid(16, 0)?;
    let kernel = scattering_kernel_matrix(&grid, g)?;
    // Scattering neither creates nor destroys energy, so the transfer
    // matrix is row-stochastic.
    let t = kernel.transfer();
    for a in [0, 5, 11] {
        let s: f64 = t.row(a).sum();
        println!("  row {a:>2}: sum {s:.12}, self-transfer {:.4}", t[(a, a)]);
    }
    println!(
        "  angular cell width {:.4}, kernel entry (0,0) {:.4}",
        grid.width(),
        kernel.entry(0, 0)
    );
    Ok(())
}
