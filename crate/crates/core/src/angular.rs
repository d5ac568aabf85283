//! Angular discretization of the unit circle and the Henyey–Greenstein
//! scattering kernel.
//!
//! Angular elements are `[2 pi k / N_a, 2 pi (k+1) / N_a)` with piecewise
//! constant basis functions. Every angular integral of a direction-dependent
//! quantity uses the midpoint rule with weight `2 pi / N_a`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Gauss points per angular element for the kernel integrals.
const KERNEL_GAUSS_POINTS: usize = 16;

/// Sign of `s . n` on an angular element relative to a face normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Inflow,
    Outflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    n_elements: usize,
    degree: usize,
    boundaries: Vec<f64>,
    midpoints: Vec<f64>,
}

impl AngularGrid {
    pub fn len(&self) -> usize {
        self.n_elements
    }

    pub fn is_empty(&self) -> bool {
        self.n_elements == 0
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Angular unknowns per spatial point, `N_a (p_a + 1)`.
    pub fn dofs(&self) -> usize {
        self.n_elements * (self.degree + 1)
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    /// Measure of every angular element.
    pub fn width(&self) -> f64 {
        2.0 * PI / self.n_elements as f64
    }

    /// Quadrature weight attached to the midpoint of each element.
    pub fn weight(&self) -> f64 {
        self.width()
    }

    pub fn direction(&self, a: usize) -> [f64; 2] {
        let t = self.midpoints[a];
        [t.cos(), t.sin()]
    }

    pub fn classify(&self, a: usize, normal: [f64; 2]) -> Flow {
        let [sx, sy] = self.direction(a);
        if sx * normal[0] + sy * normal[1] > 0.0 {
            Flow::Outflow
        } else {
            Flow::Inflow
        }
    }

    /// Angular elements flowing out through a face with the given normal, ascending.
    pub fn outflow(&self, normal: [f64; 2]) -> Vec<usize> {
        (0..self.n_elements)
            .filter(|&a| self.classify(a, normal) == Flow::Outflow)
            .collect()
    }

    pub fn inflow(&self, normal: [f64; 2]) -> Vec<usize> {
        (0..self.n_elements)
            .filter(|&a| self.classify(a, normal) == Flow::Inflow)
            .collect()
    }

    /// Index of the element containing angle `theta` (taken mod 2 pi).
    pub fn locate(&self, theta: f64) -> usize {
        let t = theta.rem_euclid(2.0 * PI);
        ((t / self.width()).floor() as usize).min(self.n_elements - 1)
    }
}

pub fn build_angular_grid(n_a: usize, p_a: usize) -> Result<AngularGrid> {
    if n_a < 4 || !n_a.is_multiple_of(4) {
        return Err(Error::AngularPartition(n_a));
    }
    if p_a != 0 {
        return Err(Error::AngularDegree(p_a));
    }
    let dt = 2.0 * PI / n_a as f64;
    let boundaries: Vec<f64> = (0..=n_a).map(|k| dt * k as f64).collect();
    let midpoints = (0..n_a).map(|k| dt * (k as f64 + 0.5)).collect();
    Ok(AngularGrid {
        n_elements: n_a,
        degree: p_a,
        boundaries,
        midpoints,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * z * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[n - 1 - i] = z;
        w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn hg_unnormalized(g: f64, cos_angle: f64) -> f64 {
    (1.0 - g * g) / (1.0 + g * g - 2.0 * g * cos_angle).powf(1.5)
}

/// Normalization constant `c` of the Henyey–Greenstein kernel on the circle.
///
/// Composite Gauss–Legendre over panels whose count grows as the kernel
/// sharpens (pole at imaginary distance `ln(1/g)` from the real axis).
pub fn hg_normalization(g_asym: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&g_asym) {
        return Err(Error::Asymmetry(g_asym));
    }
    if g_asym == 0.0 {
        return Ok(2.0 * PI);
    }
    let panels = ((8.0 / (1.0 / g_asym).ln()).ceil() as usize).clamp(16, 1 << 16);
    let (gx, gw) = gauss_legendre(KERNEL_GAUSS_POINTS);
    let h = 2.0 * PI / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let a0 = h * k as f64;
        for (x, w) in gx.iter().zip(&gw) {
            let alpha = a0 + 0.5 * h * (x + 1.0);
            total += 0.5 * h * w * hg_unnormalized(g_asym, alpha.cos());
        }
    }
    Ok(total)
}

/// Henyey–Greenstein phase function `p(alpha)` on the circle.
#[derive(Debug, Clone, Copy)]
pub struct HenyeyGreenstein {
    g_asym: f64,
    c: f64,
}

impl HenyeyGreenstein {
    pub fn new(g_asym: f64) -> Result<Self> {
        Ok(Self {
            g_asym,
            c: hg_normalization(g_asym)?,
        })
    }

    pub fn g_asym(&self) -> f64 {
        self.g_asym
    }

    pub fn normalization(&self) -> f64 {
        self.c
    }

    pub fn eval(&self, angle: f64) -> f64 {
        hg_unnormalized(self.g_asym, angle.cos()) / self.c
    }
}

/// Discretized scattering operator on an [`AngularGrid`].
#[derive(Debug, Clone)]
pub struct PhaseKernel {
    phase: HenyeyGreenstein,
    raw: DMatrix<f64>,
    transfer: DMatrix<f64>,
    width: f64,
}

impl PhaseKernel {
    pub fn g_asym(&self) -> f64 {
        self.phase.g_asym
    }

    pub fn normalization(&self) -> f64 {
        self.phase.c
    }

    /// `P[a, a'] = int_{K^a} int_{K^a'} p(s, s') ds' ds` before renormalization.
    pub fn raw(&self) -> &DMatrix<f64> {
        &self.raw
    }

    /// Row-stochastic angular transfer matrix.
    pub fn transfer(&self) -> &DMatrix<f64> {
        &self.transfer
    }

    /// Entry `(a, a')` of the renormalized kernel, `width * transfer[a, a']`;
    /// rows sum to the element measure as the continuous kernel does.
    pub fn entry(&self, a: usize, a_src: usize) -> f64 {
        self.width * self.transfer[(a, a_src)]
    }

    pub fn len(&self) -> usize {
        self.transfer.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn scattering_kernel_matrix(grid: &AngularGrid, g_asym: f64) -> Result<PhaseKernel> {
    let phase = HenyeyGreenstein::new(g_asym)?;
    let n = grid.len();
    let (gx, gw) = gauss_legendre(KERNEL_GAUSS_POINTS);
    let half = 0.5 * grid.width();
    let points: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|a| {
            let mid = grid.midpoints()[a];
            gx.iter().zip(&gw).map(|(x, w)| (mid + half * x, half * w)).collect()
        })
        .collect();
    let mut raw = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for &(t, wt) in &points[a] {
                for &(s, ws) in &points[b] {
                    acc += wt * ws * phase.eval(t - s);
                }
            }
            raw[(a, b)] = acc;
        }
    }
    let mut transfer = raw.clone();
    for a in 0..n {
        let row_sum: f64 = (0..n).map(|b| raw[(a, b)]).sum();
        for b in 0..n {
            transfer[(a, b)] /= row_sum;
        }
    }
    Ok(PhaseKernel {
        phase,
        raw,
        transfer,
        width: grid.width(),
    })
}
