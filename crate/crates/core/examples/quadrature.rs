//! Legendre-Gauss-Lobatto rules and the nodal basis built on them.
//!
//! ```bash
//! cargo run --example quadrature
//! ```

use hdgel::basis::{lgl_quadrature, modal_nodal_transform};

fn main() -> hdgel::Result<()> {
    for p in [1, 2, 4, 6] {
        let q = lgl_quadrature(p)?;
        let nodes: Vec<String> = q.nodes().iter().map(|x| format!("{x:+.6}")).collect();
        println!("p={p}: nodes [{}]", nodes.join(", "));
        // An LGL rule with p+1 points integrates degree 2p-1 exactly.
        let k = 2 * p - 1;
        let approx: f64 = q
            .nodes()
            .iter()
            .zip(q.weights())
            .map(|(x, w)| w * x.powi(k as i32 - 1))
            .sum();
        let exact = if (k - 1) % 2 == 0 { 2.0 / k as f64 } else { 0.0 };
        println!("      integral of x^{} = {approx:.15} (exact {exact:.15})", k - 1);
    }

    // Differentiation of an interpolated polynomial is exact up to degree p.
    let q = lgl_quadrature(4)?;
    let d = q.differentiation_matrix();
    let f: Vec<f64> = q.nodes().iter().map(|x| x.powi(3)).collect();
    let df = &d * nalgebra::DVector::from_vec(f);
    let err = q
        .nodes()
        .iter()
        .zip(df.iter())
        .map(|(x, v)| (v - 3.0 * x * x).abs())
        .fold(0.0, f64::max);
    println!("max error differentiating x^3 at p=4: {err:.2e}");

    // Round trip between modal Legendre coefficients and nodal values.
    let t = modal_nodal_transform(3)?;
    let modal = vec![1.0, -0.5, 0.25, 0.125];
    let back = t.to_modal(&t.to_nodal(&modal));
    println!("modal round trip: {back:?}");
    Ok(())
}
