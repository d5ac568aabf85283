//! Hybridized solve versus the monolithic DG system on a small mesh.
//!
//! Both discretizations share the same upwind fluxes, so once the local
//! problems are eliminated the hybrid solution must reproduce DG.
//!
//! ```bash
//! cargo run --release --example hdg_vs_dg
//! ```

use hdgel::dg::{assemble_dg, solve_dg};
use hdgel::global::{assemble_hybrid, project_boundary, recover_mean, relative_l2_error, solve_hybrid};
use hdgel::local::{exact_local_operators, Discretization, ElementSize, SigmaField};
use hdgel::mesh::{build_mesh, skeleton_numbering};

fn main() -> hdgel::Result<()> {
    let (p, n_a) = (2, 8);
    let mesh = build_mesh(2.0, 2.0, 3, 3)?;
    let disc = Discretization::new(p, n_a, 0.8)?;
    let (h, _) = mesh.element_size();

    // A smooth scattering field sampled at each element's LGL nodes.
    let sigma: Vec<SigmaField> = (0..mesh.n_elements())
        .map(|e| {
            let s = mesh
                .element_nodes(e, disc.quad.nodes())
                .iter()
                .map(|&(x, y)| 2.0 + (x * 1.7).sin() * (y * 2.3).cos())
                .collect();
            SigmaField::from_scattering(p, s, 0.9)
        })
        .collect::<hdgel::Result<_>>()?;

    // Light entering through the left wall in every direction that points inward.
    let inflow = |x: f64, _y: f64, _a: usize| if x < 1e-12 { 1.0 } else { 0.0 };

    let dg = assemble_dg(&mesh, &disc, &sigma, None, &inflow)?;
    let (u, dg_stats) = solve_dg(&dg, 1e-12)?;
    let dg_mean = dg.mean_intensity(&u)?;

    let index = skeleton_numbering(&mesh, &disc.grid, p);
    let ops = sigma
        .iter()
        .map(|s| exact_local_operators(&disc, s, ElementSize::square(h), None))
        .collect::<hdgel::Result<Vec<_>>>()?;
    let sys = assemble_hybrid(&mesh, &disc.grid, &index, &ops)?;
    let bc = project_boundary(&inflow, &mesh, &index, &disc);
    let (state, hdg_stats) = solve_hybrid(&sys, &bc, 1e-12)?;
    let hdg_mean = recover_mean(&mesh, &index, &ops, &state)?;

    println!(
        "DG : {} unknowns, {} GMRES iterations",
        dg.n_dofs(),
        dg_stats.iterations
    );
    println!(
        "HDG: {} unknowns, {} GMRES iterations",
        sys.n_free(),
        hdg_stats.iterations
    );
    println!(
        "relative L2 difference of mean intensity: {:.2e}",
        relative_l2_error(&hdg_mean, &dg_mean)?
    );
    Ok(())
}
