//! Element-local HDG machinery.
//!
//! Volume unknowns of one element are ordered spatial-node-major with the
//! angular element fastest: `dof = (i + (p+1) j) * N_a + a`. All spatial
//! integrals use LGL collocation at the `(p+1)^2` nodes, and angular
//! integrals the midpoint rule, so the face and mass terms are diagonal.
//!
//! The element system is
//!
//! ```text
//! (B - C + M - S) u = -B_hat u_in + [f]
//! ```
//!
//! with `B` the outflow face term, `B_hat` the inflow coupling, `C` the volume
//! advection term, `M` the extinction mass and `S` the scattering operator.

use nalgebra::{DMatrix, DVector};

use crate::angular::{AngularGrid, PhaseKernel};
use crate::basis::Quadrature1D;
use crate::error::{Error, Result};
use crate::mesh::{LocalFace, TraceLayout};

/// Nodal optical coefficients on one element (`i + (p+1) j` ordering).
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaField {
    degree: usize,
    extinction: Vec<f64>,
    scattering: Vec<f64>,
}

impl SigmaField {
    pub fn new(degree: usize, extinction: Vec<f64>, scattering: Vec<f64>) -> Result<Self> {
        let n = (degree + 1) * (degree + 1);
        if extinction.len() != n || scattering.len() != n {
            return Err(Error::Dimension(format!(
                "sigma field needs {n} nodal values, got {} and {}",
                extinction.len(),
                scattering.len()
            )));
        }
        if extinction.iter().chain(&scattering).any(|v| !(*v >= 0.0)) {
            return Err(Error::Config("optical coefficients must be nonnegative".into()));
        }
        Ok(Self {
            degree,
            extinction,
            scattering,
        })
    }

    /// Fixed single-scattering albedo: `sigma_e = sigma_s / omega`.
    pub fn from_scattering(degree: usize, scattering: Vec<f64>, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega <= 1.0) {
            return Err(Error::Config(format!("albedo {omega} outside (0, 1]")));
        }
        let extinction = scattering.iter().map(|s| s / omega).collect();
        Self::new(degree, extinction, scattering)
    }

    pub fn constant(degree: usize, extinction: f64, scattering: f64) -> Result<Self> {
        let n = (degree + 1) * (degree + 1);
        Self::new(degree, vec![extinction; n], vec![scattering; n])
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn extinction(&self) -> &[f64] {
        &self.extinction
    }

    pub fn scattering(&self) -> &[f64] {
        &self.scattering
    }

    /// Coefficients of the equivalent problem on `[-1, 1]^2` for a square element of side `h`.
    pub fn rescaled(&self, h: f64) -> Self {
        let s = 0.5 * h;
        Self {
            degree: self.degree,
            extinction: self.extinction.iter().map(|v| s * v).collect(),
            scattering: self.scattering.iter().map(|v| s * v).collect(),
        }
    }
}

/// Side lengths of a rectangular element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementSize {
    pub hx: f64,
    pub hy: f64,
}

impl ElementSize {
    pub fn square(h: f64) -> Self {
        Self { hx: h, hy: h }
    }

    pub const REFERENCE: ElementSize = ElementSize { hx: 2.0, hy: 2.0 };

    fn jacobian(&self) -> f64 {
        0.25 * self.hx * self.hy
    }

    fn face_scale(&self, face: LocalFace) -> f64 {
        if face.is_vertical() {
            0.5 * self.hy
        } else {
            0.5 * self.hx
        }
    }
}

/// Discretization shared by every element: the spatial rule and the angular grid.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub quad: Quadrature1D,
    pub grid: AngularGrid,
    pub kernel: PhaseKernel,
    pub layout: TraceLayout,
    diff: DMatrix<f64>,
}

impl Discretization {
    pub fn new(p: usize, n_a: usize, g_asym: f64) -> Result<Self> {
        let quad = crate::basis::lgl_quadrature(p)?;
        let grid = crate::angular::build_angular_grid(n_a, 0)?;
        let kernel = crate::angular::scattering_kernel_matrix(&grid, g_asym)?;
        Ok(Self::from_parts(quad, grid, kernel))
    }

    pub fn from_parts(quad: Quadrature1D, grid: AngularGrid, kernel: PhaseKernel) -> Self {
        let layout = TraceLayout::new(quad.degree(), &grid);
        let diff = quad.differentiation_matrix();
        Self {
            quad,
            grid,
            kernel,
            layout,
            diff,
        }
    }

    pub fn degree(&self) -> usize {
        self.quad.degree()
    }

    pub fn n_angles(&self) -> usize {
        self.grid.len()
    }

    pub fn n_nodes(&self) -> usize {
        let n = self.degree() + 1;
        n * n
    }

    pub fn n_volume(&self) -> usize {
        self.n_nodes() * self.n_angles()
    }

    pub fn n_in(&self) -> usize {
        self.layout.n_in()
    }

    /// Collocation weight of node `k` on the reference element.
    pub fn node_weight(&self, k: usize) -> f64 {
        let n = self.degree() + 1;
        let w = self.quad.weights();
        w[k % n] * w[k / n]
    }

    /// Advection block `C_a` (test node row, trial node column) for one angular element.
    pub fn advection_block(&self, size: ElementSize, a: usize) -> DMatrix<f64> {
        let n = self.degree() + 1;
        let nn = n * n;
        let w = self.quad.weights();
        let d = &self.diff;
        let [sx, sy] = self.grid.direction(a);
        let scale = self.grid.weight() * size.jacobian();
        let (cx, cy) = (sx * 2.0 / size.hx, sy * 2.0 / size.hy);
        let mut c = DMatrix::zeros(nn, nn);
        for i2 in 0..n {
            for i1 in 0..n {
                let row = i1 + n * i2;
                // trial nodes sharing the test node's y index
                for j1 in 0..n {
                    c[(row, j1 + n * i2)] += scale * w[j1] * w[i2] * cx * d[(j1, i1)];
                }
                for j2 in 0..n {
                    c[(row, i1 + n * j2)] += scale * w[i1] * w[j2] * cy * d[(j2, i2)];
                }
            }
        }
        c
    }

    /// Diagonal outflow face term `B` for one angular element, per spatial node.
    pub fn outflow_face_diag(&self, size: ElementSize, a: usize) -> Vec<f64> {
        let p = self.degree();
        let w = self.quad.weights();
        let s = self.grid.direction(a);
        let mut diag = vec![0.0; self.n_nodes()];
        for face in LocalFace::ALL {
            let nrm = face.outward_normal();
            let sn = s[0] * nrm[0] + s[1] * nrm[1];
            if sn > 0.0 {
                let scale = self.grid.weight() * sn * size.face_scale(face);
                for (m, wm) in w.iter().enumerate() {
                    diag[face.volume_node(p, m)] += scale * wm;
                }
            }
        }
        diag
    }

    /// Value of the single nonzero of `B_hat` in the column of inflow slot `slot`.
    pub fn inflow_coupling(&self, size: ElementSize, slot: usize) -> f64 {
        let s = &self.layout.inflow[slot];
        let dir = self.grid.direction(s.angle);
        let nrm = s.face.outward_normal();
        let sn = dir[0] * nrm[0] + dir[1] * nrm[1];
        self.grid.weight() * sn * size.face_scale(s.face) * self.quad.weights()[s.node]
    }
}

/// Element matrices in structured form.
#[derive(Debug, Clone)]
pub struct LocalMatrices {
    n_nodes: usize,
    n_angles: usize,
    /// Diagonal of `B`.
    pub outflow_diag: Vec<f64>,
    /// `C` as one block per angular element.
    pub advection: Vec<DMatrix<f64>>,
    /// Diagonal of `M`.
    pub mass_diag: Vec<f64>,
    /// `S = diag(scatter_weights) (x) kernel`.
    pub scatter_weights: Vec<f64>,
    pub kernel: DMatrix<f64>,
    /// Column `c` of `B_hat` has the single entry `inflow[c].1` in row `inflow[c].0`.
    pub inflow: Vec<(usize, f64)>,
    pub forcing: Vec<f64>,
}

impl LocalMatrices {
    pub fn n_volume(&self) -> usize {
        self.n_nodes * self.n_angles
    }

    pub fn n_in(&self) -> usize {
        self.inflow.len()
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn outflow_dense(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.outflow_diag))
    }

    pub fn mass_dense(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.mass_diag))
    }

    pub fn advection_dense(&self) -> DMatrix<f64> {
        let n = self.n_volume();
        let na = self.n_angles;
        let mut c = DMatrix::zeros(n, n);
        for (a, blk) in self.advection.iter().enumerate() {
            for i in 0..self.n_nodes {
                for j in 0..self.n_nodes {
                    c[(i * na + a, j * na + a)] = blk[(i, j)];
                }
            }
        }
        c
    }

    pub fn scattering_dense(&self) -> DMatrix<f64> {
        let n = self.n_volume();
        let na = self.n_angles;
        let mut s = DMatrix::zeros(n, n);
        for k in 0..self.n_nodes {
            for a in 0..na {
                for b in 0..na {
                    s[(k * na + a, k * na + b)] = self.scatter_weights[k] * self.kernel[(a, b)];
                }
            }
        }
        s
    }

    pub fn inflow_dense(&self) -> DMatrix<f64> {
        let mut bh = DMatrix::zeros(self.n_volume(), self.n_in());
        for (c, &(r, v)) in self.inflow.iter().enumerate() {
            bh[(r, c)] = v;
        }
        bh
    }

    /// `B - C + M - S` as a dense matrix.
    pub fn system_matrix(&self) -> DMatrix<f64> {
        let n = self.n_volume();
        let na = self.n_angles;
        let mut k = DMatrix::zeros(n, n);
        for (a, blk) in self.advection.iter().enumerate() {
            for j in 0..self.n_nodes {
                for i in 0..self.n_nodes {
                    k[(i * na + a, j * na + a)] = -blk[(i, j)];
                }
            }
        }
        for node in 0..self.n_nodes {
            let sw = self.scatter_weights[node];
            for a in 0..na {
                let r = node * na + a;
                if sw != 0.0 {
                    for b in 0..na {
                        k[(r, node * na + b)] -= sw * self.kernel[(a, b)];
                    }
                }
                k[(r, r)] += self.outflow_diag[r] + self.mass_diag[r];
            }
        }
        k
    }
}

/// Assemble the element matrices.
///
/// `forcing` holds nodal source values `f(x_k, theta_a)` in volume ordering;
/// `None` means zero forcing.
pub fn assemble_local(
    disc: &Discretization,
    sigma: &SigmaField,
    size: ElementSize,
    forcing: Option<&[f64]>,
) -> Result<LocalMatrices> {
    let nn = disc.n_nodes();
    let na = disc.n_angles();
    let nv = disc.n_volume();
    if sigma.degree() != disc.degree() {
        return Err(Error::Dimension(format!(
            "sigma degree {} vs discretization degree {}",
            sigma.degree(),
            disc.degree()
        )));
    }
    if disc.kernel.len() != na {
        return Err(Error::Dimension("kernel size does not match angular grid".into()));
    }
    if let Some(f) = forcing {
        if f.len() != nv {
            return Err(Error::Dimension(format!(
                "forcing has {} values, expected {nv}",
                f.len()
            )));
        }
    }
    if !(size.hx > 0.0 && size.hy > 0.0) {
        return Err(Error::Dimension(format!("element size {size:?}")));
    }
    let jac = size.jacobian();
    let dtheta = disc.grid.weight();

    let advection = (0..na).map(|a| disc.advection_block(size, a)).collect();
    let mut outflow_diag = vec![0.0; nv];
    for a in 0..na {
        for (k, v) in disc.outflow_face_diag(size, a).into_iter().enumerate() {
            outflow_diag[k * na + a] = v;
        }
    }
    let mut mass_diag = vec![0.0; nv];
    let mut scatter_weights = vec![0.0; nn];
    for k in 0..nn {
        let wk = jac * disc.node_weight(k);
        scatter_weights[k] = wk * sigma.scattering()[k];
        for a in 0..na {
            mass_diag[k * na + a] = dtheta * wk * sigma.extinction()[k];
        }
    }
    let kernel = DMatrix::from_fn(na, na, |a, b| disc.kernel.entry(a, b));
    let inflow = disc
        .layout
        .inflow
        .iter()
        .enumerate()
        .map(|(c, slot)| (slot.volume_dof, disc.inflow_coupling(size, c)))
        .collect();
    let forcing = match forcing {
        Some(f) => (0..nv)
            .map(|d| dtheta * jac * disc.node_weight(d / na) * f[d])
            .collect(),
        None => vec![0.0; nv],
    };
    Ok(LocalMatrices {
        n_nodes: nn,
        n_angles: na,
        outflow_diag,
        advection,
        mass_diag,
        scatter_weights,
        kernel,
        inflow,
        forcing,
    })
}

/// Discrete Green's function of one element.
#[derive(Debug, Clone)]
pub struct LocalSolution {
    /// In2sol operator, `n_vol x n_in`.
    pub a_i2u: DMatrix<f64>,
    pub f_u: Vec<f64>,
}

impl LocalSolution {
    /// Volume solution for the given inflow trace values.
    pub fn solve(&self, inflow: &[f64]) -> Vec<f64> {
        let u = &self.a_i2u * DVector::from_column_slice(inflow);
        u.iter().zip(&self.f_u).map(|(a, b)| a + b).collect()
    }
}

/// Invert the element system for every inflow basis function at once.
pub fn local_solve(m: &LocalMatrices) -> Result<LocalSolution> {
    let k = m.system_matrix();
    let lu = k.lu();
    if !lu.is_invertible() {
        return Err(Error::SingularLocal { element: 0 });
    }
    let mut rhs = DMatrix::zeros(m.n_volume(), m.n_in());
    for (c, &(r, v)) in m.inflow.iter().enumerate() {
        rhs[(r, c)] = -v;
    }
    if !lu.solve_mut(&mut rhs) {
        return Err(Error::SingularLocal { element: 0 });
    }
    let f_u = if m.forcing.iter().any(|&v| v != 0.0) {
        let mut f = DVector::from_column_slice(&m.forcing);
        if !lu.solve_mut(&mut f) {
            return Err(Error::SingularLocal { element: 0 });
        }
        f.as_slice().to_vec()
    } else {
        vec![0.0; m.n_volume()]
    };
    Ok(LocalSolution { a_i2u: rhs, f_u })
}

/// Operators consumed by the hybrid system and mean-intensity recovery.
#[derive(Debug, Clone)]
pub struct LocalOperators {
    /// Only available from the exact local solver.
    pub a_i2u: Option<DMatrix<f64>>,
    pub f_u: Option<Vec<f64>>,
    /// In2out operator, `n_out x n_in` (`n_out == n_in`).
    pub a_i2o: DMatrix<f64>,
    /// Inflow to nodal mean intensity, `(p+1)^2 x n_in`.
    pub a_i2m: DMatrix<f64>,
    /// Forcing response on the outflow trace.
    pub f_hat: Vec<f64>,
    /// Forcing response of the mean intensity.
    pub f_mean: Vec<f64>,
}

impl LocalOperators {
    pub fn drop_full(mut self) -> Self {
        self.a_i2u = None;
        self.f_u = None;
        self
    }

    /// Operators with zero forcing response, e.g. from a surrogate.
    pub fn from_parts(a_i2o: DMatrix<f64>, a_i2m: DMatrix<f64>) -> Self {
        let (n_out, n_nodes) = (a_i2o.nrows(), a_i2m.nrows());
        Self {
            a_i2u: None,
            f_u: None,
            a_i2o,
            a_i2m,
            f_hat: vec![0.0; n_out],
            f_mean: vec![0.0; n_nodes],
        }
    }
}

/// Angular-average weights `dtheta / 2 pi` for each angular element.
pub fn mean_weights(grid: &AngularGrid) -> Vec<f64> {
    vec![grid.weight() / (2.0 * std::f64::consts::PI); grid.len()]
}

pub fn extract_operators(sol: &LocalSolution, layout: &TraceLayout, grid: &AngularGrid) -> LocalOperators {
    let n_in = sol.a_i2u.ncols();
    let na = grid.len();
    let nn = sol.a_i2u.nrows() / na;
    let rows: Vec<usize> = layout.outflow.iter().map(|s| s.volume_dof).collect();
    let a_i2o = sol.a_i2u.select_rows(rows.iter());
    let f_hat = rows.iter().map(|&r| sol.f_u[r]).collect();
    let w = mean_weights(grid);
    let mut a_i2m = DMatrix::zeros(nn, n_in);
    let mut f_mean = vec![0.0; nn];
    for k in 0..nn {
        for (a, wa) in w.iter().enumerate() {
            let r = k * na + a;
            f_mean[k] += wa * sol.f_u[r];
            for c in 0..n_in {
                a_i2m[(k, c)] += wa * sol.a_i2u[(r, c)];
            }
        }
    }
    LocalOperators {
        a_i2u: Some(sol.a_i2u.clone()),
        f_u: Some(sol.f_u.clone()),
        a_i2o,
        a_i2m,
        f_hat,
        f_mean,
    }
}

/// Assemble, solve and extract in one call.
pub fn exact_local_operators(
    disc: &Discretization,
    sigma: &SigmaField,
    size: ElementSize,
    forcing: Option<&[f64]>,
) -> Result<LocalOperators> {
    let m = assemble_local(disc, sigma, size, forcing)?;
    let sol = local_solve(&m)?;
    Ok(extract_operators(&sol, &disc.layout, &disc.grid))
}

/// Flatten `(A_i2o, A_i2m)` row-major into one vector, `A_i2o` first.
pub fn flatten_operators(ops: &LocalOperators) -> Vec<f64> {
    let mut out = Vec::with_capacity(ops.a_i2o.len() + ops.a_i2m.len());
    for m in [&ops.a_i2o, &ops.a_i2m] {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.push(m[(r, c)]);
            }
        }
    }
    out
}

/// Inverse of [`flatten_operators`].
pub fn unflatten_operators(flat: &[f64], n_in: usize, n_nodes: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let expect = n_in * (n_in + n_nodes);
    if flat.len() != expect {
        return Err(Error::Dimension(format!(
            "flattened operator length {} (expected {expect})",
            flat.len()
        )));
    }
    let (o, m) = flat.split_at(n_in * n_in);
    Ok((
        DMatrix::from_row_slice(n_in, n_in, o),
        DMatrix::from_row_slice(n_nodes, n_in, m),
    ))
}
