//! Timed runs of the three solvers, refinement sweeps, and the
//! data-generation/training pipeline.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cases::{build_beam_bc, CaseConfig};
use crate::datagen::{generate_dataset, save_dataset, Dataset, SamplerConfig};
use crate::dg::{assemble_dg, solve_dg, ReferenceField};
use crate::error::{Error, Result};
use crate::global::{
    assemble_hybrid, project_boundary, recover_mean, relative_l2_error, solve_hybrid, MeanIntensityField,
};
use crate::local::{exact_local_operators, Discretization, ElementSize, LocalOperators, SigmaField};
use crate::mesh::{skeleton_numbering, Mesh};
use crate::surrogate::{init_mlp, predict_local_ops_batch, save_model, train_with, MlpModel, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dg,
    Hdg,
    HdgEl,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dg, Method::Hdg, Method::HdgEl];
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dg" => Ok(Method::Dg),
            "hdg" => Ok(Method::Hdg),
            "hdg-el" => Ok(Method::HdgEl),
            other => Err(Error::Config(format!("unknown method `{other}` (dg, hdg, hdg-el)"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Method::Dg => "dg",
            Method::Hdg => "hdg",
            Method::HdgEl => "hdg-el",
        })
    }
}

/// Exact local operators for every element, in parallel.
pub fn exact_operators(disc: &Discretization, sigma: &[SigmaField], size: ElementSize) -> Result<Vec<LocalOperators>> {
    sigma
        .par_iter()
        .enumerate()
        .map(|(e, s)| {
            exact_local_operators(disc, s, size, None)
                .map(LocalOperators::drop_full)
                .map_err(|err| match err {
                    Error::SingularLocal { .. } => Error::SingularLocal { element: e },
                    other => other,
                })
        })
        .collect()
}

/// One row of a benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub level: usize,
    /// Volume unknowns, the count used for every method.
    pub dofs: usize,
    pub hybrid_dofs: usize,
    pub err_rel_l2: Option<f64>,
    pub t_local: f64,
    pub t_global: f64,
    pub t_recover: f64,
    pub t_total: f64,
    pub gmres_iters: usize,
    pub workers: usize,
    pub config_hash: String,
    pub model_fingerprint: Option<String>,
    pub seed: u64,
    pub reference_level: Option<usize>,
    /// Forcing responses computed exactly next to predicted operators.
    pub hybrid_exact_forcing: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub field: MeanIntensityField,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions<'a> {
    /// Overrides `cfg.tol`.
    pub tol: Option<f64>,
    pub workers: usize,
    pub model: Option<&'a MlpModel>,
    pub reference: Option<&'a ReferenceField>,
    pub seed: u64,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self {
            tol: None,
            workers: 1,
            model: None,
            reference: None,
            seed: 0,
        }
    }
}

/// Run `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    Ok(pool.install(f))
}

struct Setup {
    mesh: Mesh,
    disc: Discretization,
    scattering: Vec<Vec<f64>>,
    sigma: Vec<SigmaField>,
}

fn setup(cfg: &CaseConfig, level: usize) -> Result<Setup> {
    cfg.validate()?;
    let mesh = cfg.mesh(level)?;
    let disc = Discretization::new(cfg.p, cfg.n_a, cfg.g_asym)?;
    let scattering = cfg.scattering_fields(&mesh, &disc.quad)?;
    let sigma = scattering
        .iter()
        .map(|s| SigmaField::from_scattering(cfg.p, s.clone(), cfg.omega))
        .collect::<Result<_>>()?;
    Ok(Setup {
        mesh,
        disc,
        scattering,
        sigma,
    })
}

/// Run one method on the configured case at refinement `level`.
pub fn run_case(cfg: &CaseConfig, method: Method, level: usize, opts: &RunOptions<'_>) -> Result<RunOutput> {
    let tol = opts.tol.unwrap_or(cfg.tol);
    if method == Method::HdgEl {
        let model = opts
            .model
            .ok_or_else(|| Error::Config("method hdg-el needs a trained model".into()))?;
        model.check_discretization(cfg.p, cfg.n_a)?;
    }
    let s = setup(cfg, level)?;
    let beam = build_beam_bc(cfg, &s.disc.grid)?;
    let (hx, hy) = s.mesh.element_size();
    let index = skeleton_numbering(&s.mesh, &s.disc.grid, cfg.p);
    let bc = project_boundary(&beam, &s.mesh, &index, &s.disc);
    let dofs = s.mesh.n_elements() * s.disc.n_volume();

    let run = || -> Result<(MeanIntensityField, [f64; 4], usize)> {
        let start = Instant::now();
        match method {
            Method::Dg => {
                let sys = assemble_dg(&s.mesh, &s.disc, &s.sigma, None, &beam)?;
                let (u, stats) = solve_dg(&sys, tol)?;
                let t_global = start.elapsed().as_secs_f64();
                let field = sys.mean_intensity(&u)?;
                let total = start.elapsed().as_secs_f64();
                Ok((field, [0.0, t_global, total - t_global, total], stats.iterations))
            }
            Method::Hdg | Method::HdgEl => {
                let ops = if method == Method::Hdg {
                    exact_operators(&s.disc, &s.sigma, ElementSize { hx, hy })?
                } else {
                    if !s.mesh.is_square() {
                        return Err(Error::Config("hdg-el needs square elements".into()));
                    }
                    predict_local_ops_batch(opts.model.expect("checked above"), &s.scattering, hx)?
                };
                let t_local = start.elapsed().as_secs_f64();
                let sys = assemble_hybrid(&s.mesh, &s.disc.grid, &index, &ops)?;
                let (state, stats) = solve_hybrid(&sys, &bc, tol)?;
                let t_global = start.elapsed().as_secs_f64() - t_local;
                let field = recover_mean(&s.mesh, &index, &ops, &state)?;
                let total = start.elapsed().as_secs_f64();
                Ok((
                    field,
                    [t_local, t_global, total - t_local - t_global, total],
                    stats.iterations,
                ))
            }
        }
    };
    let (field, [t_local, t_global, t_recover, t_total], iters) = with_workers(opts.workers, run)??;

    let err_rel_l2 = match opts.reference {
        Some(r) => Some(relative_l2_error(&field, &r.field)?),
        None => None,
    };
    Ok(RunOutput {
        report: RunReport {
            method,
            level,
            dofs,
            hybrid_dofs: index.n_dofs(),
            err_rel_l2,
            t_local,
            t_global,
            t_recover,
            t_total,
            gmres_iters: iters,
            workers: opts.workers.max(1),
            config_hash: cfg.hash(),
            model_fingerprint: (method == Method::HdgEl)
                .then(|| opts.model.map(MlpModel::fingerprint_hex))
                .flatten(),
            seed: opts.seed,
            reference_level: opts.reference.map(|r| r.level),
            hybrid_exact_forcing: false,
        },
        field,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Run every `(method, level)` pair and write `sweep.csv` plus one CSV per
/// plot panel (`dofs_vs_error.csv`, `dofs_vs_time.csv`, `time_vs_error.csv`).
pub fn sweep(
    cfg: &CaseConfig,
    methods: &[Method],
    levels: &[usize],
    opts: &RunOptions<'_>,
    out_dir: &Path,
) -> Result<Vec<RunReport>> {
    std::fs::create_dir_all(out_dir)?;
    let mut reports = Vec::new();
    for &m in methods {
        for &l in levels {
            let r = run_case(cfg, m, l, opts)?.report;
            log::info!(
                "{m} l={l}: dofs {} err {:?} t_total {:.3}s iters {}",
                r.dofs,
                r.err_rel_l2,
                r.t_total,
                r.gmres_iters
            );
            reports.push(r);
        }
    }
    let key = |r: &RunReport| vec![r.method.to_string(), r.level.to_string()];
    write_table(
        &out_dir.join("sweep.csv"),
        &[
            "method",
            "level",
            "dofs",
            "err_rel_l2",
            "t_local",
            "t_global",
            "t_total",
            "gmres_iters",
        ],
        reports.iter().map(|r| {
            let mut row = key(r);
            row.extend([
                r.dofs.to_string(),
                fmt_opt(r.err_rel_l2),
                format!("{:e}", r.t_local),
                format!("{:e}", r.t_global),
                format!("{:e}", r.t_total),
                r.gmres_iters.to_string(),
            ]);
            row
        }),
    )?;
    write_table(
        &out_dir.join("dofs_vs_error.csv"),
        &["method", "level", "dofs", "err_rel_l2"],
        reports.iter().map(|r| {
            let mut row = key(r);
            row.extend([r.dofs.to_string(), fmt_opt(r.err_rel_l2)]);
            row
        }),
    )?;
    write_table(
        &out_dir.join("dofs_vs_time.csv"),
        &["method", "level", "dofs", "t_total"],
        reports.iter().map(|r| {
            let mut row = key(r);
            row.extend([r.dofs.to_string(), format!("{:e}", r.t_total)]);
            row
        }),
    )?;
    write_table(
        &out_dir.join("time_vs_error.csv"),
        &["method", "level", "t_total", "err_rel_l2"],
        reports.iter().map(|r| {
            let mut row = key(r);
            row.extend([format!("{:e}", r.t_total), fmt_opt(r.err_rel_l2)]);
            row
        }),
    )?;
    Ok(reports)
}

/// Settings for dataset generation and training. Loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub p: usize,
    pub n_a: usize,
    pub g_asym: f64,
    pub omega: f64,
    pub n_samples: usize,
    pub c_sm: f64,
    pub a_sigma: f64,
    pub difference_exponent: bool,
    pub n_layer: usize,
    /// Epochs per learning-rate phase.
    pub epochs: Vec<usize>,
    pub rates: Vec<f64>,
    pub batch_size: usize,
    pub seed: u64,
    /// Existing dataset to train on instead of generating one.
    pub dataset: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            p: 3,
            n_a: 8,
            g_asym: 0.8,
            omega: 1.0,
            n_samples: 200,
            c_sm: 2.0,
            a_sigma: 10.0,
            difference_exponent: false,
            n_layer: 4,
            epochs: vec![300, 300, 300],
            rates: vec![1e-3, 1e-4, 1e-5],
            batch_size: 50,
            seed: 0,
            dataset: None,
        }
    }
}

impl PipelineConfig {
    pub fn full_scale() -> Self {
        Self {
            p: 6,
            n_a: 28,
            n_samples: 1000,
            epochs: vec![3000, 3000, 3000],
            ..Self::default()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.epochs.len() != cfg.rates.len() {
            return Err(Error::Config("epochs and rates need the same length".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(d), Some(dir)) = (cfg.dataset.as_mut(), path.parent()) {
            if d.is_relative() {
                *d = dir.join(&*d);
            }
        }
        Ok(cfg)
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            p: self.p,
            c_sm: self.c_sm,
            a_sigma: self.a_sigma,
            difference_exponent: self.difference_exponent,
            seed: self.seed,
        }
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Discretization::new(self.p, self.n_a, self.g_asym)
    }

    /// Training settings. Initialization uses `seed + 1`, shuffling `seed + 2`.
    pub fn train_config(&self) -> TrainConfig {
        let mut t = TrainConfig::new(
            self.epochs.iter().copied().zip(self.rates.iter().copied()).collect(),
            self.seed.wrapping_add(2),
        );
        t.batch_size = self.batch_size;
        t
    }
}

pub fn gen_data(cfg: &PipelineConfig) -> Result<Dataset> {
    generate_dataset(&cfg.sampler(), &cfg.discretization()?, cfg.omega, cfg.n_samples)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub model_path: PathBuf,
    pub dataset_path: Option<PathBuf>,
    pub curve_path: PathBuf,
    pub history: Vec<crate::surrogate::EpochRecord>,
}

/// Train a model on `ds` according to `cfg` (no files written).
pub fn train_model(
    cfg: &PipelineConfig,
    ds: &Dataset,
    on_epoch: impl FnMut(&crate::surrogate::EpochRecord),
) -> Result<(MlpModel, Vec<crate::surrogate::EpochRecord>)> {
    let mut model = init_mlp(cfg.p, cfg.n_a, cfg.n_layer, cfg.a_sigma, cfg.seed.wrapping_add(1))?;
    let state = train_with(&mut model, ds, &cfg.train_config(), on_epoch)?;
    Ok((model, state.history))
}

/// Dataset generation (unless `cfg.dataset` is set), training, and output of
/// `dataset.bin`, `model.bin` and `training_curve.csv` in `out_dir`.
pub fn train_pipeline(cfg: &PipelineConfig, out_dir: &Path) -> Result<TrainOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let (ds, dataset_path) = match &cfg.dataset {
        Some(p) => (crate::datagen::load_dataset_for(p, cfg.p, cfg.n_a)?, None),
        None => {
            let ds = gen_data(cfg)?;
            let p = out_dir.join("dataset.bin");
            save_dataset(&ds, &p)?;
            (ds, Some(p))
        }
    };
    let (model, history) = train_model(cfg, &ds, |r| {
        if r.epoch % 100 == 0 {
            log::info!(
                "epoch {} lr {:.0e} train {:.3e} test {:.3e}",
                r.epoch,
                r.lr,
                r.train_mae,
                r.test_mae
            );
        }
    })?;
    let model_path = out_dir.join("model.bin");
    save_model(&model, &model_path)?;
    let curve_path = out_dir.join("training_curve.csv");
    write_table(
        &curve_path,
        &["epoch", "lr", "train_mae", "test_mae"],
        history.iter().map(|r| {
            vec![
                r.epoch.to_string(),
                format!("{:e}", r.lr),
                format!("{:e}", r.train_mae),
                format!("{:e}", r.test_mae),
            ]
        }),
    )?;
    Ok(TrainOutcome {
        model,
        model_path,
        dataset_path,
        curve_path,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::CaseTag;

    fn tiny() -> CaseConfig {
        CaseConfig {
            case: CaseTag::Custom,
            nx: Some(2),
            ny: Some(2),
            lx: Some(1.0),
            ly: Some(1.0),
            p: 2,
            n_a: 4,
            beam_index: Some(4),
            ..CaseConfig::default()
        }
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("fem".parse::<Method>().is_err());
    }

    #[test]
    fn full_scale_dof_counts() {
        let cfg = CaseConfig::default();
        let mesh = cfg.mesh(0).unwrap();
        assert_eq!(mesh.n_elements() * 49 * 28, 32_928);
        let i3 = CaseConfig {
            case: CaseTag::I3rc,
            ..CaseConfig::default()
        };
        assert_eq!(i3.mesh(0).unwrap().n_elements() * 1372, 71_344);
    }

    #[test]
    fn hdg_el_needs_model() {
        let mut cfg = tiny();
        cfg.paths.raster = None;
        let err = run_case(&cfg, Method::HdgEl, 0, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn pipeline_config_parses() {
        let c = PipelineConfig::from_toml_str("p = 2\nn_a = 4\nepochs = [1, 1]\nrates = [1e-3, 1e-4]").unwrap();
        assert_eq!(c.train_config().schedule, vec![(1, 1e-3), (1, 1e-4)]);
        assert!(PipelineConfig::from_toml_str("epochs = [1]").is_err());
    }
}
