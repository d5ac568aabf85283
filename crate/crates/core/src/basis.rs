//! One-dimensional spectral-element primitives on the reference interval
//! `[-1, 1]`: Legendre–Gauss–Lobatto quadrature, the nodal Lagrange basis on
//! its nodes, the Legendre modal basis and the modal/nodal change of basis.
//!
//! Two-dimensional element quantities are tensor products of these objects.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITERS: usize = 100;

/// Legendre–Gauss–Lobatto rule of degree `p` (`p + 1` points).
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature1D {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
}

impl Quadrature1D {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Ascending nodes, including both endpoints.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Value of the `i`-th Lagrange cardinal polynomial at `x`.
    pub fn lagrange(&self, i: usize, x: f64) -> Result<f64> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        Ok(self.lagrange_all(x)[i])
    }

    /// All cardinal polynomials evaluated at `x` (barycentric form).
    pub fn lagrange_all(&self, x: f64) -> Vec<f64> {
        if let Some(k) = self.nodes.iter().position(|&xn| xn == x) {
            let mut out = vec![0.0; self.len()];
            out[k] = 1.0;
            return out;
        }
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.bary)
            .map(|(&xn, &b)| b / (x - xn))
            .collect();
        let denom: f64 = terms.iter().sum();
        terms.into_iter().map(|t| t / denom).collect()
    }

    /// Interpolate nodal values at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        self.lagrange_all(x).iter().zip(values).map(|(l, v)| l * v).sum()
    }

    /// `D[k][i] = phi_i'(x_k)`.
    pub fn differentiation_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut d = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut diag = 0.0;
            for i in 0..n {
                if i != k {
                    let v = (self.bary[i] / self.bary[k]) / (self.nodes[k] - self.nodes[i]);
                    d[(k, i)] = v;
                    diag -= v;
                }
            }
            d[(k, k)] = diag;
        }
        d
    }
}

/// Legendre polynomial `L_n(x)` and its predecessor `L_{n-1}(x)`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut prev, mut cur) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Legendre polynomial `L_n(x)`, normalized so that `L_n(1) = 1`.
pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_pair(n, x).0
}

/// Nodes and weights of the `(p + 1)`-point Gauss–Lobatto rule.
///
/// Newton iteration on `(1 - x^2) L_p'(x)` started from the Chebyshev–Lobatto
/// points, using the identity `(1 - x^2) L_p' = p (L_{p-1} - x L_p)`.
pub fn lgl_quadrature(p: usize) -> Result<Quadrature1D> {
    if p < 1 {
        return Err(Error::InvalidDegree(p));
    }
    let n = p + 1;
    let pf = p as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // descending Chebyshev guess; reversed below
        let mut x = (std::f64::consts::PI * k as f64 / pf).cos();
        if k != 0 && k != p {
            for _ in 0..NEWTON_MAX_ITERS {
                let (lp, lpm1) = legendre_pair(p, x);
                let dx = (x * lp - lpm1) / (n as f64 * lp);
                x -= dx;
                if dx.abs() < NEWTON_TOL {
                    break;
                }
            }
        }
        let lp = legendre(p, x);
        nodes[p - k] = x;
        weights[p - k] = 2.0 / (pf * (pf + 1.0) * lp * lp);
    }
    // enforce exact symmetry
    for k in 0..n / 2 {
        let x = 0.5 * (nodes[p - k] - nodes[k]);
        nodes[k] = -x;
        nodes[p - k] = x;
        let w = 0.5 * (weights[k] + weights[p - k]);
        weights[k] = w;
        weights[p - k] = w;
    }
    if n % 2 == 1 {
        nodes[p / 2] = 0.0;
    }
    let bary = barycentric_weights(&nodes);
    Ok(Quadrature1D {
        degree: p,
        nodes,
        weights,
        bary,
    })
}

fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= nodes[j] - nodes[k];
            }
        }
    }
    // rescale to avoid under/overflow at high degree; the barycentric formula is scale invariant
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    w.iter().map(|v| v / scale).collect()
}

/// Change of basis between Legendre modal coefficients and nodal values at
/// the Gauss–Lobatto nodes of the same degree.
#[derive(Debug, Clone)]
pub struct ModalNodalTransform {
    degree: usize,
    forward: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl ModalNodalTransform {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// nodal <- modal; column `m` holds `L_m` at the nodes.
    pub fn forward(&self) -> &DMatrix<f64> {
        &self.forward
    }

    /// modal <- nodal.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn to_nodal(&self, modal: &[f64]) -> Vec<f64> {
        mat_vec(&self.forward, modal)
    }

    pub fn to_modal(&self, nodal: &[f64]) -> Vec<f64> {
        mat_vec(&self.inverse, nodal)
    }

    /// 2D tensor transform. `modal[m + (p+1) n]` multiplies `L_m(x) L_n(y)`;
    /// the result is indexed `i + (p+1) j` for node `(x_i, y_j)`.
    pub fn to_nodal_2d(&self, modal: &[f64]) -> Vec<f64> {
        tensor_apply(&self.forward, modal)
    }

    pub fn to_modal_2d(&self, nodal: &[f64]) -> Vec<f64> {
        tensor_apply(&self.inverse, nodal)
    }
}

fn mat_vec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.nrows())
        .map(|r| (0..a.ncols()).map(|c| a[(r, c)] * x[c]).sum())
        .collect()
}

// out[i + n j] = sum_{m, l} A[i, m] A[j, l] x[m + n l]
fn tensor_apply(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut tmp = vec![0.0; n * n];
    for l in 0..n {
        for i in 0..n {
            tmp[i + n * l] = (0..n).map(|m| a[(i, m)] * x[m + n * l]).sum();
        }
    }
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            out[i + n * j] = (0..n).map(|l| a[(j, l)] * tmp[i + n * l]).sum();
        }
    }
    out
}

pub fn modal_nodal_transform(p: usize) -> Result<ModalNodalTransform> {
    let q = lgl_quadrature(p)?;
    let n = p + 1;
    let forward = DMatrix::from_fn(n, n, |k, m| legendre(m, q.nodes()[k]));
    let inverse = forward
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Internal("singular Legendre-Vandermonde matrix".into()))?;
    Ok(ModalNodalTransform {
        degree: p,
        forward,
        inverse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_one_is_trapezoid() {
        let q = lgl_quadrature(1).unwrap();
        assert_eq!(q.nodes(), &[-1.0, 1.0]);
        assert_eq!(q.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn degree_two_matches_simpson() {
        // Lobatto conditions for 3 points: symmetric nodes (-1, 0, 1), weights
        // solve w0 + w1 + w2 = 2 and 2 w0 = 2/3.
        let q = lgl_quadrature(2).unwrap();
        let expect_nodes = [-1.0, 0.0, 1.0];
        let expect_w = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0];
        for k in 0..3 {
            assert!((q.nodes()[k] - expect_nodes[k]).abs() < 1e-15);
            assert!((q.weights()[k] - expect_w[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn degree_six_symmetric_and_normalized() {
        let q = lgl_quadrature(6).unwrap();
        assert_eq!(q.len(), 7);
        for k in 0..7 {
            assert_eq!(q.nodes()[k], -q.nodes()[6 - k]);
            assert_eq!(q.weights()[k], q.weights()[6 - k]);
            assert!(q.weights()[k] > 0.0);
        }
        let s: f64 = q.weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
    }

    #[test]
    fn zero_degree_rejected() {
        assert!(matches!(lgl_quadrature(0), Err(Error::InvalidDegree(0))));
        assert!(modal_nodal_transform(0).is_err());
    }

    #[test]
    fn exact_for_degree_2p_minus_1() {
        for p in 1..=12 {
            let q = lgl_quadrature(p).unwrap();
            for k in 0..=(2 * p - 1) {
                let num: f64 = q
                    .nodes()
                    .iter()
                    .zip(q.weights())
                    .map(|(x, w)| w * x.powi(k as i32))
                    .sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-12, "p={p} k={k}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn cardinality_and_partition_of_unity() {
        let q = lgl_quadrature(6).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let v = q.lagrange(i, q.nodes()[j]).unwrap();
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
        for x in [-0.93, -0.4, 0.0123, 0.77] {
            let s: f64 = q.lagrange_all(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-13);
        }
        assert!(matches!(
            q.lagrange(7, 0.0),
            Err(Error::IndexOutOfRange { index: 7, len: 7 })
        ));
    }

    #[test]
    fn differentiation_matrix_exact_on_monomials() {
        for p in [2, 4, 6, 9] {
            let q = lgl_quadrature(p).unwrap();
            let d = q.differentiation_matrix();
            for k in 0..=p {
                let row_sum: f64 = (0..=p).map(|i| d[(k, i)]).sum();
                assert!(row_sum.abs() < 1e-12);
            }
            for pow in 1..=p {
                for k in 0..=p {
                    let dv: f64 = (0..=p).map(|i| d[(k, i)] * q.nodes()[i].powi(pow as i32)).sum();
                    let exact = pow as f64 * q.nodes()[k].powi(pow as i32 - 1);
                    assert!((dv - exact).abs() < 1e-11, "p={p} pow={pow}");
                }
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let q = lgl_quadrature(5).unwrap();
        let f = |x: f64| 0.3 - 2.0 * x + x.powi(3) - 0.5 * x.powi(5);
        let vals: Vec<f64> = q.nodes().iter().map(|&x| f(x)).collect();
        for x in [-0.99, -0.2, 0.31, 0.9] {
            assert!((q.interpolate(&vals, x) - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn modal_unit_vectors() {
        let t = modal_nodal_transform(6).unwrap();
        let q = lgl_quadrature(6).unwrap();
        let mut e0 = vec![0.0; 7];
        e0[0] = 1.0;
        assert!(t.to_nodal(&e0).iter().all(|&v| v == 1.0));
        let mut e1 = vec![0.0; 7];
        e1[1] = 1.0;
        assert_eq!(t.to_nodal(&e1), q.nodes().to_vec());
        let prod = t.forward() * t.inverse();
        for r in 0..7 {
            for c in 0..7 {
                let id = if r == c { 1.0 } else { 0.0 };
                assert!((prod[(r, c)] - id).abs() < 1e-12);
            }
        }
    }
}
