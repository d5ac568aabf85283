//! Benchmark problems: the idealized two-cloud fields, raster cloud ingestion
//! and the collimated-beam boundary condition.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::angular::AngularGrid;
use crate::basis::Quadrature1D;
use crate::error::{Error, Result};
use crate::global::BoundaryData;
use crate::local::SigmaField;
use crate::mesh::{CaseTag, Mesh};

/// Parameters of the two-bump scattering field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdealizedParams {
    pub centers: [[f64; 2]; 2],
    pub radius: f64,
    pub amplitude: f64,
    /// Edge width for case 1 (soft) and case 2 (sharp).
    pub width: [f64; 2],
}

impl Default for IdealizedParams {
    fn default() -> Self {
        Self {
            centers: [[1.2, 1.0], [1.8, 1.0]],
            radius: 0.35,
            amplitude: 10.0,
            width: [0.12, 0.03],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CasePaths {
    pub raster: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

/// Everything needed to set up one benchmark problem. Loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseConfig {
    pub case: CaseTag,
    /// Refinement level.
    pub l: usize,
    /// GMRES relative tolerance for the solve under test.
    pub tol: f64,
    pub omega: f64,
    pub g_asym: f64,
    pub p: usize,
    pub n_a: usize,
    /// Domain extents; `None` picks the case default.
    pub lx: Option<f64>,
    pub ly: Option<f64>,
    /// Element counts for custom cases (refinement levels do not apply).
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    /// 1-based angular element carrying the beam; `None` picks the case default.
    pub beam_index: Option<usize>,
    /// Beam radiance; `None` means `N_a / (2 pi)`.
    pub beam_amplitude: Option<f64>,
    /// Multiplier applied to raster values.
    pub sigma_scale: f64,
    pub l_ref: usize,
    pub ref_tol: f64,
    pub idealized: IdealizedParams,
    pub paths: CasePaths,
}

impl Default for CaseConfig {
    fn default() -> Self {
        Self {
            case: CaseTag::Idealized1,
            l: 0,
            tol: 1e-4,
            omega: 1.0,
            g_asym: 0.8,
            p: 6,
            n_a: 28,
            lx: None,
            ly: None,
            nx: None,
            ny: None,
            beam_index: None,
            beam_amplitude: None,
            sigma_scale: 1.0,
            l_ref: 10,
            ref_tol: 1e-8,
            idealized: IdealizedParams::default(),
            paths: CasePaths::default(),
        }
    }
}

impl CaseConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file; relative paths inside are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(dir) = path.parent() {
            for p in [
                &mut cfg.paths.raster,
                &mut cfg.paths.model,
                &mut cfg.paths.dataset,
                &mut cfg.paths.reference,
            ]
            .into_iter()
            .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Short SHA-256 of the serialized config.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let d = Sha256::digest(self.to_toml_string().as_bytes());
        crate::surrogate::hex(&d[..8])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return bad(format!("omega = {} outside (0, 1]", self.omega));
        }
        if !(self.g_asym.abs() < 1.0) {
            return bad(format!("g_asym = {} outside (-1, 1)", self.g_asym));
        }
        if !(self.tol > 0.0 && self.ref_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.p == 0 {
            return bad("polynomial degree must be at least 1".into());
        }
        if self.n_a == 0 || !self.n_a.is_multiple_of(4) {
            return bad(format!("N_a = {} must be a positive multiple of 4", self.n_a));
        }
        if let Some(b) = self.beam_index {
            if b == 0 || b > self.n_a {
                return bad(format!("beam_index {b} outside 1..={}", self.n_a));
            }
        }
        if !(self.sigma_scale >= 0.0) {
            return bad("sigma_scale must be nonnegative".into());
        }
        if self.case == CaseTag::Custom && (self.nx.is_none() || self.ny.is_none()) {
            return bad("custom cases need nx and ny".into());
        }
        Ok(())
    }

    pub fn extents(&self) -> (f64, f64) {
        let (dx, dy) = match self.case {
            CaseTag::I3rc => (13.0, 1.0),
            _ => (3.0, 2.0),
        };
        (self.lx.unwrap_or(dx), self.ly.unwrap_or(dy))
    }

    pub fn counts(&self, level: usize) -> Result<(usize, usize)> {
        match (self.case, self.nx, self.ny) {
            (CaseTag::Custom, Some(nx), Some(ny)) => Ok((nx, ny)),
            (case, _, _) => crate::mesh::refinement_schedule(case, level),
        }
    }

    pub fn mesh(&self, level: usize) -> Result<Mesh> {
        let (lx, ly) = self.extents();
        let (nx, ny) = self.counts(level)?;
        crate::mesh::build_mesh(lx, ly, nx, ny)
    }

    /// 0-based beam angular element.
    pub fn beam_angle(&self) -> usize {
        match self.beam_index {
            Some(b) => b - 1,
            None => {
                // the full-scale elements are 23 and 25 of 28; keep the same direction
                let k = if self.case == CaseTag::I3rc { 24.5 } else { 22.5 };
                ((k / 28.0) * self.n_a as f64).floor() as usize
            }
        }
    }

    pub fn beam_amplitude(&self) -> f64 {
        self.beam_amplitude.unwrap_or(self.n_a as f64 / (2.0 * PI))
    }

    /// Nodal scattering coefficients on every element.
    pub fn scattering_fields(&self, mesh: &Mesh, quad: &Quadrature1D) -> Result<Vec<Vec<f64>>> {
        match self.case {
            CaseTag::Idealized1 | CaseTag::Idealized2 => {
                let which = if self.case == CaseTag::Idealized1 { 1 } else { 2 };
                let (lx, ly) = self.extents();
                (0..mesh.n_elements())
                    .map(|e| {
                        mesh.element_nodes(e, quad.nodes())
                            .into_iter()
                            .map(|(x, y)| idealized_sigma(&self.idealized, which, lx, ly, x, y))
                            .collect()
                    })
                    .collect()
            }
            CaseTag::I3rc | CaseTag::Custom => {
                let path = self
                    .paths
                    .raster
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("case {} needs paths.raster", self.case)))?;
                let (lx, ly) = self.extents();
                let raster = CloudRaster::load(path, lx, ly, self.sigma_scale)?;
                if raster.clamped > 0 {
                    log::warn!("{} negative raster values clamped to 0", raster.clamped);
                }
                Ok(raster.nodal_values(mesh, quad))
            }
        }
    }

    pub fn sigma_fields(&self, mesh: &Mesh, quad: &Quadrature1D) -> Result<Vec<SigmaField>> {
        self.scattering_fields(mesh, quad)?
            .into_iter()
            .map(|s| SigmaField::from_scattering(quad.degree(), s, self.omega))
            .collect()
    }
}

fn smooth_step(t: f64) -> f64 {
    1.0 / (1.0 + (4.0 * t).exp())
}

/// Scattering coefficient of idealized case `which` (1 or 2) at `(x, y)`.
pub fn idealized_sigma(params: &IdealizedParams, which: u8, lx: f64, ly: f64, x: f64, y: f64) -> Result<f64> {
    let w = match which {
        1 => params.width[0],
        2 => params.width[1],
        _ => return Err(Error::UnknownCase(format!("idealized case {which}"))),
    };
    let tol = 1e-12 * lx.max(ly);
    if !(x >= -tol && y >= -tol && x <= lx + tol && y <= ly + tol) {
        return Err(Error::OutOfDomain { x, y });
    }
    Ok(params
        .centers
        .iter()
        .map(|c| {
            let r = (x - c[0]).hypot(y - c[1]);
            params.amplitude * smooth_step((r - params.radius) / w)
        })
        .sum())
}

/// Gridded cloud coefficients. Value `(i, j)` sits at
/// `(i * lx / (cols - 1), j * ly / (rows - 1))`; row `j = 0` is `y = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudRaster {
    pub cols: usize,
    pub rows: usize,
    pub lx: f64,
    pub ly: f64,
    pub values: Vec<f64>,
    /// Number of negative raw values set to zero.
    pub clamped: usize,
}

impl CloudRaster {
    /// Parse a whitespace-delimited matrix, one raster row per line.
    pub fn parse(text: &str, lx: f64, ly: f64, scale: f64) -> std::result::Result<Self, String> {
        let mut values = Vec::new();
        let mut cols = 0;
        let mut rows = 0;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| format!("line {}: {t:?}: {e}", ln + 1)))
                .collect::<std::result::Result<_, _>>()?;
            if rows == 0 {
                cols = row.len();
            } else if row.len() != cols {
                return Err(format!("line {}: {} columns, expected {cols}", ln + 1, row.len()));
            }
            values.extend(row);
            rows += 1;
        }
        if rows < 2 || cols < 2 {
            return Err(format!("raster must be at least 2x2, got {rows}x{cols}"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err("non-finite raster value".into());
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(format!("extents {lx} x {ly}"));
        }
        let mut clamped = 0;
        for v in &mut values {
            if *v < 0.0 {
                *v = 0.0;
                clamped += 1;
            }
            *v *= scale;
        }
        Ok(Self {
            cols,
            rows,
            lx,
            ly,
            values,
            clamped,
        })
    }

    pub fn load(path: &Path, lx: f64, ly: f64, scale: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Raster {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        Self::parse(&text, lx, ly, scale).map_err(|detail| Error::Raster {
            path: path.to_path_buf(),
            detail,
        })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.cols * j]
    }

    /// Bilinear interpolation; points outside the extents are clamped to the edge.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let fx = (x / self.lx * (self.cols - 1) as f64).clamp(0.0, (self.cols - 1) as f64);
        let fy = (y / self.ly * (self.rows - 1) as f64).clamp(0.0, (self.rows - 1) as f64);
        let i = (fx.floor() as usize).min(self.cols - 2);
        let j = (fy.floor() as usize).min(self.rows - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        (1.0 - tx) * (1.0 - ty) * self.at(i, j)
            + tx * (1.0 - ty) * self.at(i + 1, j)
            + (1.0 - tx) * ty * self.at(i, j + 1)
            + tx * ty * self.at(i + 1, j + 1)
    }

    pub fn nodal_values(&self, mesh: &Mesh, quad: &Quadrature1D) -> Vec<Vec<f64>> {
        (0..mesh.n_elements())
            .map(|e| {
                mesh.element_nodes(e, quad.nodes())
                    .into_iter()
                    .map(|(x, y)| self.sample(x, y))
                    .collect()
            })
            .collect()
    }
}

/// Collimated beam entering through the top and left boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    pub angle: usize,
    pub amplitude: f64,
    pub lx: f64,
    pub ly: f64,
}

impl BoundaryData for Beam {
    fn value(&self, x: f64, y: f64, angle: usize) -> f64 {
        let tol = 1e-12 * self.lx.max(self.ly);
        let lit = (y - self.ly).abs() <= tol || x.abs() <= tol;
        if angle == self.angle && lit {
            self.amplitude
        } else {
            0.0
        }
    }
}

pub fn build_beam_bc(cfg: &CaseConfig, grid: &AngularGrid) -> Result<Beam> {
    let angle = cfg.beam_angle();
    if angle >= grid.len() {
        return Err(Error::IndexOutOfRange {
            index: angle,
            len: grid.len(),
        });
    }
    let (lx, ly) = cfg.extents();
    Ok(Beam {
        angle,
        amplitude: cfg.beam_amplitude(),
        lx,
        ly,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_field_and_saturation() {
        let p = IdealizedParams::default();
        let far = idealized_sigma(&p, 1, 3.0, 2.0, 0.0, 0.0).unwrap();
        assert!(far < 1e-3 * p.amplitude);
        let c2 = idealized_sigma(&p, 2, 3.0, 2.0, 1.2, 1.0).unwrap();
        let expect = p.amplitude * (smooth_step(-p.radius / 0.03) + smooth_step((0.6 - 0.35) / 0.03));
        assert!((c2 - expect).abs() < 1e-12);
        assert!((c2 - p.amplitude).abs() < 1e-6 * p.amplitude);
        assert!(idealized_sigma(&p, 1, 3.0, 2.0, 3.5, 1.0).is_err());
    }

    #[test]
    fn edge_slope_ratio() {
        let p = IdealizedParams::default();
        let slope = |which| {
            let h = 1e-6;
            let f = |r: f64| idealized_sigma(&p, which, 3.0, 2.0, 1.2 - r, 1.0).unwrap();
            ((f(p.radius + h) - f(p.radius - h)) / (2.0 * h)).abs()
        };
        let ratio = slope(2) / slope(1);
        assert!((ratio / 4.0 - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn raster_bilinear() {
        let r = CloudRaster::parse("0 1\n1 0\n", 1.0, 1.0, 1.0).unwrap();
        assert!((r.sample(0.5, 0.5) - 0.5).abs() < 1e-15);
        let c = CloudRaster::parse("2 2 2\n2 2 2\n", 3.0, 1.0, 1.0).unwrap();
        assert_eq!(c.sample(1.3, 0.2), 2.0);
        let neg = CloudRaster::parse("-1 1\n1 1\n", 1.0, 1.0, 2.0).unwrap();
        assert_eq!(neg.clamped, 1);
        assert_eq!(neg.values, vec![0.0, 2.0, 2.0, 2.0]);
        assert!(CloudRaster::parse("1 2\n3\n", 1.0, 1.0, 1.0).is_err());
        assert!(CloudRaster::parse("1 2\n", 1.0, 1.0, 1.0).is_err());
        assert!(CloudRaster::parse("1 x\n1 1\n", 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn beam_defaults() {
        let cfg = CaseConfig::default();
        assert_eq!(cfg.beam_angle(), 22);
        let i3 = CaseConfig {
            case: CaseTag::I3rc,
            ..CaseConfig::default()
        };
        assert_eq!(i3.beam_angle(), 24);
        let desk = CaseConfig {
            n_a: 8,
            ..CaseConfig::default()
        };
        assert_eq!(desk.beam_angle(), 6);
        let grid = crate::angular::build_angular_grid(28, 0).unwrap();
        let b = build_beam_bc(&cfg, &grid).unwrap();
        assert!((b.amplitude * grid.width() - 1.0).abs() < 1e-14);
        assert_eq!(b.value(0.0, 1.0, 22), b.amplitude);
        assert_eq!(b.value(1.0, 2.0, 22), b.amplitude);
        assert_eq!(b.value(3.0, 1.0, 22), 0.0);
        assert_eq!(b.value(1.0, 0.0, 22), 0.0);
        assert_eq!(b.value(0.0, 1.0, 21), 0.0);
    }

    #[test]
    fn toml_round_trip_and_validation() {
        let cfg = CaseConfig::from_toml_str("case = \"idealized-2\"\nl = 2\np = 3\nn_a = 8\n").unwrap();
        assert_eq!(cfg.case, CaseTag::Idealized2);
        assert_eq!(CaseConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
        assert!(CaseConfig::from_toml_str("n_a = 6").is_err());
        assert!(CaseConfig::from_toml_str("omega = 0").is_err());
        assert!(CaseConfig::from_toml_str("bogus = 1").is_err());
        assert!(CaseConfig::from_toml_str("case = \"custom\"").is_err());
    }
}
