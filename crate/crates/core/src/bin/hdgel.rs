use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hdgel::bench::{self, Method, PipelineConfig, RunOptions, RunReport};
use hdgel::cases::CaseConfig;
use hdgel::datagen::save_dataset;
use hdgel::dg::{overrefined_reference, ReferenceField};
use hdgel::surrogate::{load_model_for, MlpModel};
use hdgel::Error;

#[derive(Parser)]
#[command(
    name = "hdgel",
    version,
    about = "Radiative transfer solvers with learned element operators"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a training dataset from a pipeline config.
    GenData(PipelineArgs),
    /// Generate data (unless the config names a dataset) and train a model.
    Train(PipelineArgs),
    /// Solve one case with one method.
    Run(CaseArgs),
    /// Run levels 0..=level for one or all methods and write the comparison CSVs.
    Sweep(CaseArgs),
    /// Compute the overrefined reference solution for a case.
    Reference(CaseArgs),
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct CaseArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tol: Option<f64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::UnknownCase(_)
        | Error::Raster { .. }
        | Error::InvalidMesh(_)
        | Error::InvalidDegree(_)
        | Error::AngularPartition(_)
        | Error::AngularDegree(_)
        | Error::Asymmetry(_) => 2,
        Error::SolverFailure { .. } | Error::SingularLocal { .. } | Error::Diverged { .. } => 3,
        Error::ModelMismatch(_) | Error::DatasetMismatch(_) | Error::Version { .. } | Error::Corrupt(_) => 4,
        _ => 1,
    }
}

fn pipeline_config(args: &PipelineArgs) -> hdgel::Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn load_model(args: &CaseArgs, cfg: &CaseConfig) -> hdgel::Result<Option<MlpModel>> {
    let path = args.model.as_ref().or(cfg.paths.model.as_ref());
    path.map(|p| load_model_for(p, cfg.p, cfg.n_a)).transpose()
}

fn reference_for(cfg: &CaseConfig, level: usize, workers: usize) -> hdgel::Result<ReferenceField> {
    if let Some(p) = &cfg.paths.reference {
        if p.exists() {
            let r = ReferenceField::load(p)?;
            if r.config_hash != cfg.hash() {
                log::warn!("reference {} was computed for a different config", p.display());
            }
            return Ok(r);
        }
    }
    let l_ref = cfg.l_ref.max(level + 1);
    log::info!("computing reference at level {l_ref}");
    bench::with_workers(workers, || overrefined_reference(cfg, Some(l_ref)))?
}

fn write_report(out: &Path, r: &RunReport) -> hdgel::Result<()> {
    std::fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join("run.csv"))?;
    w.serialize(r)?;
    w.flush()?;
    std::fs::write(out.join("run.json"), serde_json::to_string_pretty(r)?)?;
    Ok(())
}

fn execute(cmd: Cmd) -> hdgel::Result<()> {
    match cmd {
        Cmd::GenData(args) => {
            let cfg = pipeline_config(&args)?;
            let ds = bench::with_workers(args.workers.unwrap_or(1), || bench::gen_data(&cfg))??;
            std::fs::create_dir_all(&args.out)?;
            let path = args.out.join("dataset.bin");
            save_dataset(&ds, &path)?;
            println!("wrote {} samples to {}", ds.meta.n_samples, path.display());
        }
        Cmd::Train(args) => {
            let cfg = pipeline_config(&args)?;
            let outcome = bench::with_workers(args.workers.unwrap_or(1), || bench::train_pipeline(&cfg, &args.out))??;
            let last = outcome.history.last().ok_or(Error::EmptyDataset)?;
            println!(
                "model {} (test MAE {:.3e}, fingerprint {})",
                outcome.model_path.display(),
                last.test_mae,
                outcome.model.fingerprint_hex()
            );
        }
        Cmd::Run(args) => {
            let cfg = CaseConfig::load(&args.config)?;
            let method = args.method.unwrap_or(Method::Hdg);
            let level = args.level.unwrap_or(cfg.l);
            let model = load_model(&args, &cfg)?;
            let reference = match &cfg.paths.reference {
                Some(p) if p.exists() => Some(ReferenceField::load(p)?),
                _ => None,
            };
            let opts = RunOptions {
                tol: args.tol,
                workers: args.workers,
                model: model.as_ref(),
                reference: reference.as_ref(),
                seed: args.seed,
            };
            let out = bench::run_case(&cfg, method, level, &opts)?;
            write_report(&args.out, &out.report)?;
            let r = &out.report;
            println!(
                "{} level {}: dofs {} iters {} t_total {:.3}s err {}",
                r.method,
                r.level,
                r.dofs,
                r.gmres_iters,
                r.t_total,
                r.err_rel_l2.map_or("n/a".into(), |e| format!("{e:.3e}"))
            );
        }
        Cmd::Sweep(args) => {
            let cfg = CaseConfig::load(&args.config)?;
            let model = load_model(&args, &cfg)?;
            let methods: Vec<Method> = match args.method {
                Some(m) => vec![m],
                None => Method::ALL
                    .into_iter()
                    .filter(|m| *m != Method::HdgEl || model.is_some())
                    .collect(),
            };
            let max_level = args.level.unwrap_or(cfg.l);
            let levels: Vec<usize> = (0..=max_level).collect();
            let reference = reference_for(&cfg, max_level, args.workers)?;
            let opts = RunOptions {
                tol: args.tol,
                workers: args.workers,
                model: model.as_ref(),
                reference: Some(&reference),
                seed: args.seed,
            };
            let reports = bench::sweep(&cfg, &methods, &levels, &opts, &args.out)?;
            println!("{} runs written to {}", reports.len(), args.out.display());
        }
        Cmd::Reference(args) => {
            let cfg = CaseConfig::load(&args.config)?;
            let reference = bench::with_workers(args.workers, || overrefined_reference(&cfg, args.level))??;
            std::fs::create_dir_all(&args.out)?;
            let path = args.out.join("reference.json");
            reference.save(&path)?;
            println!(
                "reference level {} ({} GMRES iterations) written to {}",
                reference.level,
                reference.gmres_iters,
                path.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
