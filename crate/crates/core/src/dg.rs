//! Monolithic upwind DG discretization on the same nodes and angular grid as
//! the hybrid solver, solved by GMRES preconditioned with transport sweeps.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::Flow;
use crate::cases::CaseConfig;
use crate::error::{Error, Result};
use crate::global::{angular_mean, BoundaryData, MeanIntensityField, SolveStats};
use crate::krylov::{gmres, GmresConfig, LinearOperator, Preconditioner};
use crate::local::{assemble_local, Discretization, ElementSize, LocalMatrices, SigmaField};
use crate::mesh::{CaseTag, LocalFace, Mesh};

/// Upwind source of an element's inflow slot.
#[derive(Debug, Clone, Copy)]
enum Upwind {
    Boundary,
    Element { element: usize, volume_dof: usize },
}

fn opposite(f: LocalFace) -> LocalFace {
    match f {
        LocalFace::Left => LocalFace::Right,
        LocalFace::Right => LocalFace::Left,
        LocalFace::Bottom => LocalFace::Top,
        LocalFace::Top => LocalFace::Bottom,
    }
}

pub struct DgSystem {
    mesh: Mesh,
    disc: Discretization,
    /// `B - C` restricted to one angular element (shared by all elements).
    transport: Vec<DMatrix<f64>>,
    mass: Vec<Vec<f64>>,
    scatter: Vec<Vec<f64>>,
    kernel: DMatrix<f64>,
    coupling: Vec<f64>,
    upwind: Vec<Vec<Upwind>>,
    rhs: Vec<f64>,
    blocks: Vec<LU<f64, Dyn, Dyn>>,
}

/// Assemble the DG system; `forcing` holds nodal source values per element.
pub fn assemble_dg(
    mesh: &Mesh,
    disc: &Discretization,
    sigma: &[SigmaField],
    forcing: Option<&[Vec<f64>]>,
    g: &dyn BoundaryData,
) -> Result<DgSystem> {
    let ne = mesh.n_elements();
    if sigma.len() != ne {
        return Err(Error::Dimension(format!(
            "{} sigma fields for {ne} elements",
            sigma.len()
        )));
    }
    if let Some(f) = forcing {
        if f.len() != ne {
            return Err(Error::Dimension(format!(
                "{} forcing blocks for {ne} elements",
                f.len()
            )));
        }
    }
    let (hx, hy) = mesh.element_size();
    let size = ElementSize { hx, hy };
    let (na, nn, nv) = (disc.n_angles(), disc.n_nodes(), disc.n_volume());
    let p = disc.degree();

    let mats: Vec<LocalMatrices> = (0..ne)
        .into_par_iter()
        .map(|e| assemble_local(disc, &sigma[e], size, forcing.map(|f| f[e].as_slice())))
        .collect::<Result<_>>()?;

    let transport: Vec<DMatrix<f64>> = (0..na)
        .map(|a| {
            let mut t = -&mats[0].advection[a];
            for k in 0..nn {
                t[(k, k)] += mats[0].outflow_diag[k * na + a];
            }
            t
        })
        .collect();
    let coupling: Vec<f64> = mats[0].inflow.iter().map(|&(_, v)| v).collect();

    let layout = &disc.layout;
    let upwind: Vec<Vec<Upwind>> = (0..ne)
        .map(|e| {
            layout
                .inflow
                .iter()
                .map(|s| match mesh.neighbor(e, s.face) {
                    None => Upwind::Boundary,
                    Some(n) => Upwind::Element {
                        element: n,
                        volume_dof: opposite(s.face).volume_node(p, s.node) * na + s.angle,
                    },
                })
                .collect()
        })
        .collect();

    let mut rhs = vec![0.0; ne * nv];
    for e in 0..ne {
        let base = e * nv;
        rhs[base..base + nv].copy_from_slice(&mats[e].forcing);
        let nodes = mesh.element_nodes(e, disc.quad.nodes());
        for (c, s) in layout.inflow.iter().enumerate() {
            if let Upwind::Boundary = upwind[e][c] {
                let (x, y) = nodes[s.face.volume_node(p, s.node)];
                rhs[base + s.volume_dof] -= coupling[c] * g.value(x, y, s.angle);
            }
        }
    }

    let blocks = (0..ne * na)
        .into_par_iter()
        .map(|ea| {
            let (e, a) = (ea / na, ea % na);
            let mut t = transport[a].clone();
            for k in 0..nn {
                t[(k, k)] += mats[e].mass_diag[k * na + a];
            }
            let lu = t.lu();
            if lu.is_invertible() {
                Ok(lu)
            } else {
                Err(Error::SingularLocal { element: e })
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let kernel = mats[0].kernel.clone();
    let (mass, scatter) = mats.into_iter().map(|m| (m.mass_diag, m.scatter_weights)).unzip();
    Ok(DgSystem {
        mesh: mesh.clone(),
        disc: disc.clone(),
        transport,
        mass,
        scatter,
        kernel,
        coupling,
        upwind,
        rhs,
        blocks,
    })
}

impl DgSystem {
    pub fn n_dofs(&self) -> usize {
        self.rhs.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn n_volume(&self) -> usize {
        self.disc.n_volume()
    }

    fn apply_element(&self, e: usize, u: &[f64], y: &mut [f64]) {
        let (na, nn, nv) = (self.disc.n_angles(), self.disc.n_nodes(), self.n_volume());
        let ue = &u[e * nv..(e + 1) * nv];
        y.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..na {
            let t = &self.transport[a];
            for j in 0..nn {
                let x = ue[j * na + a];
                if x != 0.0 {
                    for k in 0..nn {
                        y[k * na + a] += t[(k, j)] * x;
                    }
                }
            }
        }
        for k in 0..nn {
            let sw = self.scatter[e][k];
            for a in 0..na {
                let r = k * na + a;
                y[r] += self.mass[e][r] * ue[r];
                if sw != 0.0 {
                    let mut s = 0.0;
                    for b in 0..na {
                        s += self.kernel[(a, b)] * ue[k * na + b];
                    }
                    y[r] -= sw * s;
                }
            }
        }
        for (c, slot) in self.disc.layout.inflow.iter().enumerate() {
            if let Upwind::Element { element, volume_dof } = self.upwind[e][c] {
                y[slot.volume_dof] += self.coupling[c] * u[element * nv + volume_dof];
            }
        }
    }

    /// Dense assembly for small-instance checks.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n_dofs();
        let mut m = DMatrix::zeros(n, n);
        let mut col = vec![0.0; n];
        let mut y = vec![0.0; n];
        for j in 0..n {
            col[j] = 1.0;
            self.apply(&col, &mut y);
            m.set_column(j, &DVector::from_column_slice(&y));
            col[j] = 0.0;
        }
        m
    }

    /// Direct dense solve, only sensible for small meshes.
    pub fn solve_dense(&self) -> Result<Vec<f64>> {
        let lu = self.to_dense().lu();
        lu.solve(&DVector::from_column_slice(&self.rhs))
            .map(|x| x.as_slice().to_vec())
            .ok_or_else(|| Error::Internal("singular DG matrix".into()))
    }

    /// Elements in upwind order for angular element `a`.
    fn sweep_order(&self, a: usize) -> Vec<usize> {
        let (nx, ny) = self.mesh.counts();
        let grid = &self.disc.grid;
        let xs: Vec<usize> = match grid.classify(a, [1.0, 0.0]) {
            Flow::Outflow => (0..nx).collect(),
            Flow::Inflow => (0..nx).rev().collect(),
        };
        let ys: Vec<usize> = match grid.classify(a, [0.0, 1.0]) {
            Flow::Outflow => (0..ny).collect(),
            Flow::Inflow => (0..ny).rev().collect(),
        };
        ys.iter()
            .flat_map(|&iy| xs.iter().map(move |&ix| ix + nx * iy))
            .collect()
    }

    /// One transport sweep per angular element without scattering.
    fn sweep(&self, a: usize, r: &[f64]) -> Vec<f64> {
        let (na, nn, nv) = (self.disc.n_angles(), self.disc.n_nodes(), self.n_volume());
        let ne = self.mesh.n_elements();
        let mut z = vec![0.0; ne * nn];
        let slots: Vec<usize> = (0..self.disc.layout.inflow.len())
            .filter(|&c| self.disc.layout.inflow[c].angle == a)
            .collect();
        for e in self.sweep_order(a) {
            let mut b = DVector::from_iterator(nn, (0..nn).map(|k| r[e * nv + k * na + a]));
            for &c in &slots {
                if let Upwind::Element { element, volume_dof } = self.upwind[e][c] {
                    let k = self.disc.layout.inflow[c].volume_dof / na;
                    b[k] -= self.coupling[c] * z[element * nn + volume_dof / na];
                }
            }
            self.blocks[e * na + a].solve_mut(&mut b);
            z[e * nn..(e + 1) * nn].copy_from_slice(b.as_slice());
        }
        z
    }

    /// Nodal mean intensity of a global volume vector.
    pub fn mean_intensity(&self, u: &[f64]) -> Result<MeanIntensityField> {
        let vals: Vec<f64> = u
            .chunks(self.n_volume())
            .flat_map(|ue| angular_mean(&self.disc.grid, ue))
            .collect();
        MeanIntensityField::new(&self.mesh, self.disc.degree(), vals)
    }

    /// Per-element volume blocks of a global vector.
    pub fn split(&self, u: &[f64]) -> Vec<Vec<f64>> {
        u.chunks(self.n_volume()).map(<[f64]>::to_vec).collect()
    }
}

impl LinearOperator for DgSystem {
    fn dim(&self) -> usize {
        self.n_dofs()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nv = self.n_volume();
        y.par_chunks_mut(nv)
            .enumerate()
            .for_each(|(e, ye)| self.apply_element(e, x, ye));
    }
}

impl Preconditioner for DgSystem {
    fn apply_inv(&self, x: &[f64], y: &mut [f64]) {
        let (na, nn, nv) = (self.disc.n_angles(), self.disc.n_nodes(), self.n_volume());
        let parts: Vec<Vec<f64>> = (0..na).into_par_iter().map(|a| self.sweep(a, x)).collect();
        for (a, z) in parts.iter().enumerate() {
            for e in 0..self.mesh.n_elements() {
                for k in 0..nn {
                    y[e * nv + k * na + a] = z[e * nn + k];
                }
            }
        }
    }
}

/// Solve with sweep-preconditioned GMRES; returns the global volume vector.
pub fn solve_dg(sys: &DgSystem, tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("GMRES tolerance must be positive, got {tol}")));
    }
    let cfg = GmresConfig::for_size(sys.n_dofs(), tol);
    let out = gmres(sys, Some(sys), &sys.rhs, &cfg)?;
    Ok((
        out.x,
        SolveStats {
            iterations: out.iterations,
            history: out.history,
        },
    ))
}

/// Refinement level of the standard overrefined reference meshes.
pub const DEFAULT_REFERENCE_LEVEL: usize = 10;

/// Mean intensity of an overrefined DG solve plus what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceField {
    pub case: CaseTag,
    pub level: usize,
    pub tol: f64,
    pub p: usize,
    pub n_a: usize,
    /// True when the level differs from the standard reference level.
    pub level_overridden: bool,
    pub gmres_iters: usize,
    pub config_hash: String,
    pub field: MeanIntensityField,
}

impl ReferenceField {
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(f)?)
    }
}

/// DG solve of the configured case at level `level` (default `cfg.l_ref`)
/// with tolerance `cfg.ref_tol`.
pub fn overrefined_reference(cfg: &CaseConfig, level: Option<usize>) -> Result<ReferenceField> {
    let level = level.unwrap_or(cfg.l_ref);
    let mesh = cfg.mesh(level)?;
    let disc = Discretization::new(cfg.p, cfg.n_a, cfg.g_asym)?;
    let sigma = cfg.sigma_fields(&mesh, &disc.quad)?;
    let beam = crate::cases::build_beam_bc(cfg, &disc.grid)?;
    let sys = assemble_dg(&mesh, &disc, &sigma, None, &beam)?;
    let (u, stats) = solve_dg(&sys, cfg.ref_tol)?;
    Ok(ReferenceField {
        case: cfg.case,
        level,
        tol: cfg.ref_tol,
        p: cfg.p,
        n_a: cfg.n_a,
        level_overridden: level != DEFAULT_REFERENCE_LEVEL,
        gmres_iters: stats.iterations,
        config_hash: cfg.hash(),
        field: sys.mean_intensity(&u)?,
    })
}
