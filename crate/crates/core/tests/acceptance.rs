//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported but do not fail `cargo test` unless
//! `ACCEPTANCE_STRICT=1` is set.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use hdgel::bench::{
    exact_operators, gen_data, run_case, train_model, with_workers, Method, PipelineConfig, RunOptions,
};
use hdgel::cases::{Beam, CaseConfig};
use hdgel::datagen::{generate_dataset, high_mode_fraction, sample_sigma_detailed, write_dataset, SamplerConfig};
use hdgel::dg::{assemble_dg, overrefined_reference, solve_dg};
use hdgel::global::{
    assemble_hybrid, boundary_fluxes, project_boundary, recover_mean, recover_solution, relative_l2_error, solve_hybrid,
};
use hdgel::local::{exact_local_operators, Discretization, ElementSize, LocalOperators, SigmaField};
use hdgel::mesh::{build_mesh, skeleton_numbering, Mesh};
use hdgel::surrogate::{
    evaluate, gradient_check, init_mlp, load_model, predict_local_ops_batch, save_model, write_model, MlpModel,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::Digest;

type Outcome = Result<(bool, String), hdgel::Error>;
type Check = (&'static str, fn() -> Outcome);

/// Desk-scale surrogate shared by the transport and accuracy checks.
struct DeskModel {
    model: MlpModel,
    test_mae: f64,
}

fn desk_pipeline() -> PipelineConfig {
    PipelineConfig {
        n_samples: 1000,
        epochs: vec![1000, 1000, 1000],
        ..PipelineConfig::default()
    }
}

fn desk_model() -> &'static DeskModel {
    static MODEL: OnceLock<DeskModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let cfg = desk_pipeline();
        let ds = gen_data(&cfg).expect("dataset");
        let key = toml::to_string(&cfg).expect("config serializes");
        let tag = hdgel::surrogate::hex(&sha2::Sha256::digest(key.as_bytes())[..8]);
        let cache = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("desk_model_{tag}.bin"));
        let model = match load_model(&cache) {
            Ok(m) if m.dataset_fingerprint == ds.fingerprint() => m,
            _ => {
                eprintln!("training the desk model (one time, cached in {})", cache.display());
                let (m, _) = train_model(&cfg, &ds, |_| {}).expect("training");
                save_model(&m, &cache).expect("cache model");
                m
            }
        };
        let test_mae = evaluate(&model, &ds, &ds.test_indices().collect::<Vec<_>>()).expect("evaluate");
        DeskModel { model, test_mae }
    })
}

fn exact_ops(disc: &Discretization, mesh: &Mesh, sigma: &[SigmaField]) -> hdgel::Result<Vec<LocalOperators>> {
    let (hx, hy) = mesh.element_size();
    sigma
        .iter()
        .map(|s| exact_local_operators(disc, s, ElementSize { hx, hy }, None))
        .collect()
}

fn nodal_sigma(
    mesh: &Mesh,
    disc: &Discretization,
    omega: f64,
    f: impl Fn(f64, f64) -> f64,
) -> hdgel::Result<Vec<SigmaField>> {
    (0..mesh.n_elements())
        .map(|e| {
            let s = mesh
                .element_nodes(e, disc.quad.nodes())
                .iter()
                .map(|&(x, y)| f(x, y))
                .collect();
            SigmaField::from_scattering(disc.degree(), s, omega)
        })
        .collect()
}

fn c1_oracle_equivalence() -> Outcome {
    let (p, n_a) = (2, 4);
    let mesh = build_mesh(1.0, 1.0, 2, 2)?;
    let disc = Discretization::new(p, n_a, 0.8)?;
    let index = skeleton_numbering(&mesh, &disc.grid, p);
    let beam = Beam {
        angle: 3,
        amplitude: n_a as f64 / (2.0 * std::f64::consts::PI),
        lx: 1.0,
        ly: 1.0,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let (a, b): (f64, f64) = (rng.random_range(0.5..4.0), rng.random_range(0.5..4.0));
        let (phi, psi): (f64, f64) = (rng.random_range(0.0..6.3), rng.random_range(0.0..6.3));
        let sigma = nodal_sigma(&mesh, &disc, 1.0, |x, y| {
            2.5 * (1.0 + (a * x + phi).sin() * (b * y + psi).cos())
        })?;
        let dg = assemble_dg(&mesh, &disc, &sigma, None, &beam)?;
        let dense = dg.mean_intensity(&dg.solve_dense()?)?;
        let ops = exact_ops(&disc, &mesh, &sigma)?;
        let sys = assemble_hybrid(&mesh, &disc.grid, &index, &ops)?;
        let (state, _) = solve_hybrid(&sys, &project_boundary(&beam, &mesh, &index, &disc), 1e-12)?;
        let hdg = recover_mean(&mesh, &index, &ops, &state)?;
        worst = worst.max(relative_l2_error(&hdg, &dense)?);
    }
    Ok((
        worst <= 1e-8,
        format!("max relative L2 difference {worst:.2e} over 5 fields (limit 1e-8)"),
    ))
}

fn c2_transport_exactness() -> Outcome {
    let (p, n_a) = (3, 8);
    let mesh = build_mesh(3.0, 2.0, 3, 2)?;
    let disc = Discretization::new(p, n_a, 0.8)?;
    let index = skeleton_numbering(&mesh, &disc.grid, p);
    let sigma: Vec<_> = (0..mesh.n_elements())
        .map(|_| SigmaField::constant(p, 0.0, 0.0))
        .collect::<hdgel::Result<_>>()?;
    let exact = exact_ops(&disc, &mesh, &sigma)?;
    let desk = desk_model();
    let zero = vec![vec![0.0; disc.n_nodes()]; mesh.n_elements()];
    let learned = predict_local_ops_batch(&desk.model, &zero, 1.0)?;

    let (mut e_dg, mut e_hdg, mut e_trace, mut e_mean): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for lit in 0..n_a {
        let g = move |_: f64, _: f64, a: usize| if a == lit { 1.0 } else { 0.0 };
        let want = |a: usize| if a == lit { 1.0 } else { 0.0 };

        let dg = assemble_dg(&mesh, &disc, &sigma, None, &g)?;
        let (u, _) = solve_dg(&dg, 1e-13)?;
        for (i, v) in u.iter().enumerate() {
            e_dg = e_dg.max((v - want(i % n_a)).abs());
        }

        let bc = project_boundary(&g, &mesh, &index, &disc);
        let sys = assemble_hybrid(&mesh, &disc.grid, &index, &exact)?;
        let (state, _) = solve_hybrid(&sys, &bc, 1e-13)?;
        for block in recover_solution(&index, &exact, &state)? {
            for (i, v) in block.iter().enumerate() {
                e_hdg = e_hdg.max((v - want(i % n_a)).abs());
            }
        }

        // Without A_i2u the learned path only recovers the trace and the
        // mean intensity, whose exact value is the lit element's share.
        let sys = assemble_hybrid(&mesh, &disc.grid, &index, &learned)?;
        let (state, _) = solve_hybrid(&sys, &bc, 1e-13)?;
        for (d, v) in state.values.iter().enumerate() {
            e_trace = e_trace.max((v - want(index.decompose(d).2)).abs());
        }
        let mean = recover_mean(&mesh, &index, &learned, &state)?;
        for v in &mean.values {
            e_mean = e_mean.max((v - 1.0 / n_a as f64).abs());
        }
    }
    let e_el = e_trace.max(e_mean);
    let pass = e_dg <= 1e-10 && e_hdg <= 1e-10 && e_el <= 5e-3 && desk.test_mae <= 1e-3;
    Ok((
        pass,
        format!(
            "max deviation dg {e_dg:.1e}, hdg {e_hdg:.1e} (limit 1e-10), hdg-el trace {e_trace:.1e} mean {e_mean:.1e} (limit 5e-3, model test MAE {:.2e})",
            desk.test_mae
        ),
    ))
}

fn c3_energy_balance() -> Outcome {
    let cfg = CaseConfig {
        p: 4,
        n_a: 8,
        omega: 1.0,
        ..CaseConfig::default()
    };
    let mesh = cfg.mesh(0)?;
    if mesh.counts() != (6, 4) {
        return Ok((false, format!("level 0 mesh is {:?}, expected 6x4", mesh.counts())));
    }
    let disc = Discretization::new(cfg.p, cfg.n_a, cfg.g_asym)?;
    let sigma = cfg.sigma_fields(&mesh, &disc.quad)?;
    let index = skeleton_numbering(&mesh, &disc.grid, cfg.p);
    let beam = hdgel::cases::build_beam_bc(&cfg, &disc.grid)?;
    let bc = project_boundary(&beam, &mesh, &index, &disc);
    let ops = exact_ops(&disc, &mesh, &sigma)?;
    let sys = assemble_hybrid(&mesh, &disc.grid, &index, &ops)?;
    let imbalance = |tol: f64| -> hdgel::Result<f64> {
        let (state, _) = solve_hybrid(&sys, &bc, tol)?;
        let (inflow, outflow) = boundary_fluxes(&mesh, &index, &disc, &state);
        Ok((inflow - outflow).abs() / inflow)
    };
    let (loose, tight) = (imbalance(1e-4)?, imbalance(1e-8)?);
    Ok((
        loose <= 1e-3 && tight <= 1e-7,
        format!("relative flux imbalance {loose:.2e} at tol 1e-4 (limit 1e-3), {tight:.2e} at tol 1e-8 (limit 1e-7)"),
    ))
}

fn c4_scaling_identity() -> Outcome {
    let disc = Discretization::new(3, 8, 0.8)?;
    let sampler = SamplerConfig::new(3, 2.0, 10.0, 44);
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (s, _) = sample_sigma_detailed(&sampler, &mut sampler.rng(k))?;
        let h: f64 = rng.random_range(0.05..2.0);
        let a = exact_local_operators(
            &disc,
            &SigmaField::from_scattering(3, s.sigma.clone(), 1.0)?,
            ElementSize::square(h),
            None,
        )?;
        let scaled: Vec<f64> = s.sigma.iter().map(|v| v * h / 2.0).collect();
        let b = exact_local_operators(
            &disc,
            &SigmaField::from_scattering(3, scaled, 1.0)?,
            ElementSize::square(2.0),
            None,
        )?;
        let (ua, ub) = (a.a_i2u.expect("exact"), b.a_i2u.expect("exact"));
        worst = worst.max((&ua - &ub).norm() / ua.norm());
    }
    Ok((
        worst <= 1e-12,
        format!("max relative difference {worst:.2e} over 20 fields (limit 1e-12)"),
    ))
}

fn c5_capacity_ordering() -> Outcome {
    // desk data with the full three-phase schedule; 300-epoch phases leave
    // the deeper networks short of convergence
    let base = PipelineConfig {
        epochs: vec![3000, 3000, 3000],
        ..PipelineConfig::default()
    };
    let ds = gen_data(&base)?;
    let mut mae = Vec::new();
    for n_layer in [1, 2, 4] {
        let cfg = PipelineConfig {
            n_layer,
            ..base.clone()
        };
        let (_, history) = train_model(&cfg, &ds, |_| {})?;
        mae.push(history.last().map_or(f64::NAN, |r| r.test_mae));
    }
    let (m1, m2, m4) = (mae[0], mae[1], mae[2]);
    Ok((
        m4 < m2 && m2 < m1 && m4 <= m1 / 2.0,
        format!("test MAE 1 layer {m1:.3e}, 2 layers {m2:.3e}, 4 layers {m4:.3e}"),
    ))
}

fn c6_gradient_check() -> Outcome {
    let model = init_mlp(3, 8, 4, 10.0, 6)?;
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let x = DMatrix::from_fn(model.n_in(), 4, |_, _| rng.random_range(0.0..10.0));
    let y = model.forward_batch(&x)?;
    // offsets keep every residual away from the kink of |.|
    let t = y.map(|v| v + if rng.random::<bool>() { 0.3 } else { -0.3 });
    let probes = gradient_check(&model, &x, &t, 30, 1e-3, &mut rng)?;
    let worst = probes.iter().map(|p| p.relative_error()).fold(0.0, f64::max);
    Ok((
        worst < 1e-5,
        format!("{} probes, max relative error {worst:.2e} (limit 1e-5)", probes.len()),
    ))
}

fn c7_hdg_el_accuracy() -> Outcome {
    let cfg = CaseConfig {
        p: 3,
        n_a: 8,
        ..CaseConfig::default()
    };
    let desk = desk_model();
    // finest idealized level; exact HDG sits well below 5e-3 there
    let level = 4;
    let reference = overrefined_reference(&cfg, Some(level + 4))?;
    let opts = RunOptions {
        model: Some(&desk.model),
        reference: Some(&reference),
        ..RunOptions::default()
    };
    let err = |m| -> hdgel::Result<f64> { Ok(run_case(&cfg, m, level, &opts)?.report.err_rel_l2.unwrap_or(f64::NAN)) };
    let (e_hdg, e_el) = (err(Method::Hdg)?, err(Method::HdgEl)?);
    Ok((
        e_el <= 5e-3 && e_el <= e_hdg + 5e-3,
        format!(
            "level {level} vs level {}: hdg {e_hdg:.3e}, hdg-el {e_el:.3e} (limits 5e-3 and hdg + 5e-3)",
            level + 4
        ),
    ))
}

fn c8_local_speedup() -> Outcome {
    let cfg = CaseConfig {
        p: 6,
        n_a: 28,
        ..CaseConfig::default()
    };
    let mesh = cfg.mesh(0)?;
    let disc = Discretization::new(cfg.p, cfg.n_a, cfg.g_asym)?;
    let scattering = cfg.scattering_fields(&mesh, &disc.quad)?;
    let sigma = cfg.sigma_fields(&mesh, &disc.quad)?;
    let (h, _) = mesh.element_size();
    // Untrained network of the production size; the damped output layer
    // keeps the predicted operators contractive so the global solve converges.
    let mut model = init_mlp(cfg.p, cfg.n_a, 4, 10.0, 8)?;
    let last = model.n_layers() - 1;
    model.weights_mut()[last].scale_mut(1e-3);
    model.biases_mut()[last].fill(0.0);

    let (t_exact, t_learned) = with_workers(1, || -> hdgel::Result<(f64, f64)> {
        let start = Instant::now();
        exact_operators(&disc, &sigma, ElementSize::square(h))?;
        let t_exact = start.elapsed().as_secs_f64();
        let start = Instant::now();
        predict_local_ops_batch(&model, &scattering, h)?;
        Ok((t_exact, start.elapsed().as_secs_f64()))
    })??;
    let ratio = t_exact / t_learned;

    let opts = RunOptions {
        model: Some(&model),
        ..RunOptions::default()
    };
    let hdg = run_case(&cfg, Method::Hdg, 0, &opts)?.report;
    let el = run_case(&cfg, Method::HdgEl, 0, &opts)?.report;
    Ok((
        ratio >= 5.0,
        format!(
            "{} elements: exact {t_exact:.2}s, learned {t_learned:.3}s, local speed-up {ratio:.1}x (limit 5x); end to end {:.1}x (not gated)",
            mesh.n_elements(),
            hdg.t_total / el.t_total
        ),
    ))
}

fn c9_datagen_contract() -> Outcome {
    let p = 3;
    let cfg = SamplerConfig::new(p, 2.0, 10.0, 9);
    let (mut min_pre, mut max_pre, mut max_post): (f64, f64, f64) = (f64::INFINITY, 0.0, 0.0);
    let mut worst_min: f64 = 0.0;
    for k in 0..500 {
        let (s, _) = sample_sigma_detailed(&cfg, &mut cfg.rng(k))?;
        let lo = s.normalized.iter().cloned().fold(f64::INFINITY, f64::min);
        worst_min = worst_min.max(lo.abs());
        min_pre = min_pre.min(lo);
        max_pre = max_pre.max(s.normalized.iter().cloned().fold(0.0, f64::max));
        max_post = max_post.max(s.sigma.iter().cloned().fold(0.0, f64::max));
    }
    let mut smooth = Vec::new();
    for c_sm in [0.5, 1.0, 2.0, 4.0] {
        let cfg = SamplerConfig::new(p, c_sm, 10.0, 9);
        let mut acc = 0.0;
        for k in 0..500 {
            let (s, _) = sample_sigma_detailed(&cfg, &mut cfg.rng(k))?;
            acc += high_mode_fraction(p, &s.normalized)?;
        }
        smooth.push(acc / 500.0);
    }
    let monotone = smooth.windows(2).all(|w| w[1] < w[0]);
    let pass = worst_min <= 1e-12 && max_post <= 10.0 && monotone;
    Ok((
        pass,
        format!(
            "per-sample min {min_pre:.1e} (worst |min| {worst_min:.1e}), max before {max_pre:.3}, after {max_post:.3} (A = 10); high-mode share {:?} for c_sm 0.5..4",
            smooth.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()
        ),
    ))
}

fn c10_determinism() -> Outcome {
    let sampler = SamplerConfig::new(3, 2.0, 10.0, 10);
    let disc = Discretization::new(3, 8, 0.8)?;
    let data_bytes = |workers| -> hdgel::Result<Vec<u8>> {
        let ds = with_workers(workers, || generate_dataset(&sampler, &disc, 1.0, 40))??;
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf)?;
        Ok(buf)
    };
    let d1 = data_bytes(1)?;
    let same_data = d1 == data_bytes(1)? && d1 == data_bytes(2)?;

    let pc = PipelineConfig {
        n_samples: 40,
        epochs: vec![20, 10, 5],
        ..PipelineConfig::default()
    };
    let ds = gen_data(&pc)?;
    let model_bytes = || -> hdgel::Result<(MlpModel, Vec<u8>)> {
        let (m, _) = train_model(&pc, &ds, |_| {})?;
        let mut buf = Vec::new();
        write_model(&m, &mut buf)?;
        Ok((m, buf))
    };
    let (model, m1) = model_bytes()?;
    let same_model = m1 == model_bytes()?.1;

    let cfg = CaseConfig {
        p: 3,
        n_a: 8,
        ..CaseConfig::default()
    };
    let mut same_fields = true;
    for method in Method::ALL {
        let run = |workers| {
            let opts = RunOptions {
                model: Some(&model),
                workers,
                ..RunOptions::default()
            };
            run_case(&cfg, method, 1, &opts)
        };
        let (a, b, c) = (run(1)?, run(1)?, run(2)?);
        let bits = |f: &hdgel::global::MeanIntensityField| f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        same_fields &= bits(&a.field) == bits(&b.field) && bits(&a.field) == bits(&c.field);
        same_fields &= a.report.gmres_iters == b.report.gmres_iters;
    }
    Ok((
        same_data && same_model && same_fields,
        format!("datasets identical: {same_data}, models identical: {same_model}, fields identical: {same_fields}"),
    ))
}

fn main() {
    let criteria: [Check; 10] = [
        ("oracle equivalence", c1_oracle_equivalence),
        ("transport exactness", c2_transport_exactness),
        ("energy balance", c3_energy_balance),
        ("scaling identity", c4_scaling_identity),
        ("network capacity ordering", c5_capacity_ordering),
        ("gradient check", c6_gradient_check),
        ("hdg-el accuracy", c7_hdg_el_accuracy),
        ("local-phase speed-up", c8_local_speedup),
        ("data-generation contract", c9_datagen_contract),
        ("determinism", c10_determinism),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {}: {name}: {detail} [{secs:.1}s]",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("{failed} criteria failing");
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
