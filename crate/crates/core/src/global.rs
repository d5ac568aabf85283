//! Skeleton (hybrid) system: boundary data, matrix-free assembly of the
//! consistency condition, GMRES solve and element-wise recovery.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::{AngularGrid, Flow};
use crate::basis::Quadrature1D;
use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresConfig, LinearOperator};
use crate::local::{mean_weights, Discretization, LocalOperators};
use crate::mesh::{Axis, Mesh, SkeletonIndex};

/// Inflow radiance already projected onto the angular elements.
pub trait BoundaryData: Sync {
    /// Value on angular element `angle` at boundary point `(x, y)`.
    fn value(&self, x: f64, y: f64, angle: usize) -> f64;
}

impl<F> BoundaryData for F
where
    F: Fn(f64, f64, usize) -> f64 + Sync,
{
    fn value(&self, x: f64, y: f64, angle: usize) -> f64 {
        self(x, y, angle)
    }
}

/// Angular averages of a continuous boundary radiance `g(x, y, theta)`.
pub struct ProjectedBoundary<G> {
    g: G,
    points: Vec<Vec<(f64, f64)>>,
}

impl<G: Fn(f64, f64, f64) -> f64 + Sync> ProjectedBoundary<G> {
    pub fn new(g: G, grid: &AngularGrid) -> Self {
        let (x, w) = crate::angular::gauss_legendre(16);
        let half = 0.5 * grid.width();
        let points = grid
            .midpoints()
            .iter()
            .map(|&mid| x.iter().zip(&w).map(|(xi, wi)| (mid + half * xi, 0.5 * wi)).collect())
            .collect();
        Self { g, points }
    }
}

impl<G: Fn(f64, f64, f64) -> f64 + Sync> BoundaryData for ProjectedBoundary<G> {
    fn value(&self, x: f64, y: f64, angle: usize) -> f64 {
        self.points[angle].iter().map(|&(t, w)| w * (self.g)(x, y, t)).sum()
    }
}

/// Outward normal of a boundary face, `None` for interior faces.
pub fn boundary_normal(mesh: &Mesh, face: usize) -> Option<[f64; 2]> {
    let f = &mesh.faces()[face];
    match (f.minus, f.plus) {
        (None, Some(_)) => Some([-f.normal[0], -f.normal[1]]),
        (Some(_), None) => Some(f.normal),
        _ => None,
    }
}

/// Physical location of face node `node` on global face `face`.
pub fn face_point(mesh: &Mesh, quad: &Quadrature1D, face: usize, node: usize) -> (f64, f64) {
    let f = &mesh.faces()[face];
    let along = f.start + 0.5 * f.length * (quad.nodes()[node] + 1.0);
    match f.axis {
        Axis::X => (f.position, along),
        Axis::Y => (along, f.position),
    }
}

/// Hybrid unknowns together with the Dirichlet mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonState {
    pub values: Vec<f64>,
    pub fixed: Vec<bool>,
}

impl SkeletonState {
    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&d| !self.fixed[d]).collect()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| alpha * v).collect(),
            fixed: self.fixed.clone(),
        }
    }
}

/// Mask of hybrid unknowns on the inflow part of the domain boundary.
pub fn inflow_boundary_mask(mesh: &Mesh, index: &SkeletonIndex, grid: &AngularGrid) -> Vec<bool> {
    let mut mask = vec![false; index.n_dofs()];
    for face in 0..mesh.n_faces() {
        if let Some(n) = boundary_normal(mesh, face) {
            for node in 0..=index.degree() {
                for a in grid.inflow(n) {
                    mask[index.dof(face, node, a)] = true;
                }
            }
        }
    }
    mask
}

/// Set inflow-boundary unknowns to the projected data; everything else is zero.
pub fn project_boundary(
    g: &dyn BoundaryData,
    mesh: &Mesh,
    index: &SkeletonIndex,
    disc: &Discretization,
) -> SkeletonState {
    let fixed = inflow_boundary_mask(mesh, index, &disc.grid);
    let mut values = vec![0.0; index.n_dofs()];
    for face in 0..mesh.n_faces() {
        if let Some(n) = boundary_normal(mesh, face) {
            for node in 0..=index.degree() {
                let (x, y) = face_point(mesh, &disc.quad, face, node);
                for a in disc.grid.inflow(n) {
                    values[index.dof(face, node, a)] = g.value(x, y, a);
                }
            }
        }
    }
    SkeletonState { values, fixed }
}

/// Matrix-free form of the consistency condition
/// `sum_K (R_K u_hat - A_i2o^K u_hat|in,K) = sum_K f_hat^K` on the free unknowns.
pub struct HybridSystem<'a> {
    index: &'a SkeletonIndex,
    ops: &'a [LocalOperators],
    fixed: Vec<bool>,
    free: Vec<usize>,
    position: Vec<usize>,
}

pub fn assemble_hybrid<'a>(
    mesh: &Mesh,
    grid: &AngularGrid,
    index: &'a SkeletonIndex,
    ops: &'a [LocalOperators],
) -> Result<HybridSystem<'a>> {
    if ops.len() != mesh.n_elements() {
        return Err(Error::MissingOperators(ops.len().min(mesh.n_elements())));
    }
    let n_in = index.layout().n_in();
    for (e, op) in ops.iter().enumerate() {
        if op.a_i2o.nrows() != index.outflow(e).len() || op.a_i2o.ncols() != n_in {
            return Err(Error::Dimension(format!(
                "element {e}: in2out is {}x{}, expected {}x{}",
                op.a_i2o.nrows(),
                op.a_i2o.ncols(),
                index.outflow(e).len(),
                n_in
            )));
        }
    }
    let fixed = inflow_boundary_mask(mesh, index, grid);
    let free: Vec<usize> = (0..fixed.len()).filter(|&d| !fixed[d]).collect();
    let mut position = vec![usize::MAX; fixed.len()];
    for (i, &d) in free.iter().enumerate() {
        position[d] = i;
    }
    Ok(HybridSystem {
        index,
        ops,
        fixed,
        free,
        position,
    })
}

impl HybridSystem<'_> {
    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    /// `sum_K scatter(A_i2o^K u_hat|in,K)` over all hybrid unknowns.
    fn transfer(&self, full: &[f64]) -> Vec<f64> {
        let parts: Vec<Vec<f64>> = self
            .ops
            .par_iter()
            .enumerate()
            .map(|(e, op)| {
                let u_in = DVector::from_iterator(
                    self.index.inflow(e).len(),
                    self.index.inflow(e).iter().map(|&d| full[d]),
                );
                (&op.a_i2o * u_in).as_slice().to_vec()
            })
            .collect();
        let mut out = vec![0.0; full.len()];
        for (e, part) in parts.iter().enumerate() {
            for (&d, v) in self.index.outflow(e).iter().zip(part) {
                out[d] += v;
            }
        }
        out
    }

    fn forcing(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.fixed.len()];
        for (e, op) in self.ops.iter().enumerate() {
            for (&d, v) in self.index.outflow(e).iter().zip(&op.f_hat) {
                out[d] += v;
            }
        }
        out
    }

    fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.fixed.len()];
        for (&d, &v) in self.free.iter().zip(x) {
            full[d] = v;
        }
        full
    }

    /// Full affine residual `R u_hat - A u_hat - f_hat` on the free unknowns.
    pub fn residual(&self, state: &SkeletonState) -> Vec<f64> {
        let t = self.transfer(&state.values);
        let f = self.forcing();
        self.free.iter().map(|&d| state.values[d] - t[d] - f[d]).collect()
    }

    /// Right-hand side for the free unknowns given the Dirichlet values in `bc`.
    pub fn rhs(&self, bc: &SkeletonState) -> Vec<f64> {
        let fixed_only: Vec<f64> = self
            .fixed
            .iter()
            .zip(&bc.values)
            .map(|(&f, &v)| if f { v } else { 0.0 })
            .collect();
        let t = self.transfer(&fixed_only);
        let f = self.forcing();
        self.free.iter().map(|&d| t[d] + f[d]).collect()
    }

    pub fn position(&self, dof: usize) -> Option<usize> {
        let p = self.position[dof];
        (p != usize::MAX).then_some(p)
    }
}

impl LinearOperator for HybridSystem<'_> {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let full = self.expand(x);
        let t = self.transfer(&full);
        for (i, &d) in self.free.iter().enumerate() {
            y[i] = x[i] - t[d];
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub history: Vec<f64>,
}

pub fn solve_hybrid(sys: &HybridSystem<'_>, bc: &SkeletonState, tol: f64) -> Result<(SkeletonState, SolveStats)> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("GMRES tolerance must be positive, got {tol}")));
    }
    if bc.values.len() != sys.fixed.len() {
        return Err(Error::Dimension("boundary state does not match skeleton".into()));
    }
    let b = sys.rhs(bc);
    let cfg = GmresConfig::for_size(sys.n_free(), tol);
    let out = gmres(sys, None, &b, &cfg)?;
    let mut values = bc.values.clone();
    for (&d, v) in sys.free.iter().zip(&out.x) {
        values[d] = *v;
    }
    Ok((
        SkeletonState {
            values,
            fixed: sys.fixed.clone(),
        },
        SolveStats {
            iterations: out.iterations,
            history: out.history,
        },
    ))
}

/// Nodal mean intensity on a rectangular mesh, one `(p+1)^2` block per element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanIntensityField {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub degree: usize,
    pub values: Vec<f64>,
}

impl MeanIntensityField {
    pub fn new(mesh: &Mesh, degree: usize, values: Vec<f64>) -> Result<Self> {
        let (lx, ly) = mesh.extents();
        let (nx, ny) = mesh.counts();
        let nn = (degree + 1) * (degree + 1);
        if values.len() != nx * ny * nn {
            return Err(Error::Dimension(format!(
                "mean field has {} values, expected {}",
                values.len(),
                nx * ny * nn
            )));
        }
        Ok(Self {
            lx,
            ly,
            nx,
            ny,
            degree,
            values,
        })
    }

    pub fn mesh(&self) -> Result<Mesh> {
        crate::mesh::build_mesh(self.lx, self.ly, self.nx, self.ny)
    }

    pub fn element(&self, e: usize) -> &[f64] {
        let nn = (self.degree + 1) * (self.degree + 1);
        &self.values[e * nn..(e + 1) * nn]
    }

    /// Evaluate through the element polynomial. `(hint_x, hint_y)` selects the
    /// element when the point lies on an element edge.
    pub fn eval_toward(&self, quad: &Quadrature1D, x: f64, y: f64, hint_x: f64, hint_y: f64) -> Result<f64> {
        let hx = self.lx / self.nx as f64;
        let hy = self.ly / self.ny as f64;
        let nudge = 1e-9;
        let px = x + nudge * hx * (hint_x - x).signum();
        let py = y + nudge * hy * (hint_y - y).signum();
        let tol = 1e-9 * self.lx.max(self.ly);
        if px < -tol || py < -tol || px > self.lx + tol || py > self.ly + tol {
            return Err(Error::OutOfDomain { x, y });
        }
        let ix = ((px / hx).floor().max(0.0) as usize).min(self.nx - 1);
        let iy = ((py / hy).floor().max(0.0) as usize).min(self.ny - 1);
        let xi = (2.0 * (x - ix as f64 * hx) / hx - 1.0).clamp(-1.0, 1.0);
        let eta = (2.0 * (y - iy as f64 * hy) / hy - 1.0).clamp(-1.0, 1.0);
        let lx = quad.lagrange_all(xi);
        let ly = quad.lagrange_all(eta);
        let vals = self.element(ix + self.nx * iy);
        let n = self.degree + 1;
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                s += lx[i] * ly[j] * vals[i + n * j];
            }
        }
        Ok(s)
    }

    pub fn eval(&self, quad: &Quadrature1D, x: f64, y: f64) -> Result<f64> {
        self.eval_toward(quad, x, y, x, y)
    }
}

/// Relative L2 difference `||field - reference|| / ||reference||`, integrated
/// with the reference mesh's LGL rule.
pub fn relative_l2_error(field: &MeanIntensityField, reference: &MeanIntensityField) -> Result<f64> {
    let fq = crate::basis::lgl_quadrature(field.degree)?;
    let rq = crate::basis::lgl_quadrature(reference.degree)?;
    let rmesh = reference.mesh()?;
    let n = reference.degree + 1;
    let (hx, hy) = rmesh.element_size();
    let jac = 0.25 * hx * hy;
    let mut num = 0.0;
    let mut den = 0.0;
    for e in 0..rmesh.n_elements() {
        let nodes = rmesh.element_nodes(e, rq.nodes());
        let (x0, y0) = rmesh.origin(e);
        let (cx, cy) = (x0 + 0.5 * hx, y0 + 0.5 * hy);
        let rv = reference.element(e);
        for (k, &(x, y)) in nodes.iter().enumerate() {
            let w = jac * rq.weights()[k % n] * rq.weights()[k / n];
            let fv = field.eval_toward(&fq, x, y, cx, cy)?;
            num += w * (fv - rv[k]).powi(2);
            den += w * rv[k].powi(2);
        }
    }
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// Mean intensity `A_i2m u_hat|in + R_u2m f_u` on every element.
pub fn recover_mean(
    mesh: &Mesh,
    index: &SkeletonIndex,
    ops: &[LocalOperators],
    state: &SkeletonState,
) -> Result<MeanIntensityField> {
    let degree = index.degree();
    let blocks: Vec<Vec<f64>> = ops
        .par_iter()
        .enumerate()
        .map(|(e, op)| {
            let u_in = DVector::from_iterator(index.inflow(e).len(), index.inflow(e).iter().map(|&d| state.values[d]));
            (&op.a_i2m * u_in).iter().zip(&op.f_mean).map(|(a, b)| a + b).collect()
        })
        .collect();
    MeanIntensityField::new(mesh, degree, blocks.concat())
}

/// Full volume solution `A_i2u u_hat|in + f_u` per element; requires operators
/// from the exact local solver.
pub fn recover_solution(index: &SkeletonIndex, ops: &[LocalOperators], state: &SkeletonState) -> Result<Vec<Vec<f64>>> {
    ops.par_iter()
        .enumerate()
        .map(|(e, op)| {
            let (a, f) = match (&op.a_i2u, &op.f_u) {
                (Some(a), Some(f)) => (a, f),
                _ => return Err(Error::MissingOperators(e)),
            };
            let u_in = DVector::from_iterator(index.inflow(e).len(), index.inflow(e).iter().map(|&d| state.values[d]));
            Ok((a * u_in).iter().zip(f).map(|(x, y)| x + y).collect())
        })
        .collect()
}

/// Nodal mean intensity of a volume solution in `(node, angle)` ordering.
pub fn angular_mean(grid: &AngularGrid, u: &[f64]) -> Vec<f64> {
    let w = mean_weights(grid);
    u.chunks(grid.len())
        .map(|c| c.iter().zip(&w).map(|(a, b)| a * b).sum())
        .collect()
}

/// Radiative flux through the domain boundary, `(inflow, outflow)`, both
/// nonnegative for nonnegative radiance.
pub fn boundary_fluxes(mesh: &Mesh, index: &SkeletonIndex, disc: &Discretization, state: &SkeletonState) -> (f64, f64) {
    let (mut fin, mut fout) = (0.0, 0.0);
    let w = disc.quad.weights();
    for face in 0..mesh.n_faces() {
        let Some(n) = boundary_normal(mesh, face) else {
            continue;
        };
        let half = 0.5 * mesh.faces()[face].length;
        for a in 0..disc.grid.len() {
            let s = disc.grid.direction(a);
            let sn = s[0] * n[0] + s[1] * n[1];
            for (node, wn) in w.iter().enumerate() {
                let flux = disc.grid.weight() * sn * half * wn * state.values[index.dof(face, node, a)];
                match disc.grid.classify(a, n) {
                    Flow::Inflow => fin -= flux,
                    Flow::Outflow => fout += flux,
                }
            }
        }
    }
    (fin, fout)
}

/// Skeleton values induced by a volume solution: every outflow slot takes the
/// upwind element's nodal value; inflow-boundary unknowns come from `bc`.
pub fn skeleton_from_volume(index: &SkeletonIndex, bc: &SkeletonState, u: &[Vec<f64>]) -> SkeletonState {
    let mut values = bc.values.clone();
    let layout = index.layout();
    for (e, ue) in u.iter().enumerate() {
        for (slot, &d) in layout.outflow.iter().zip(index.outflow(e)) {
            values[d] = ue[slot.volume_dof];
        }
    }
    SkeletonState {
        values,
        fixed: bc.fixed.clone(),
    }
}
