//! Fully connected network that predicts an element's `(A_i2o, A_i2m)` from
//! its rescaled nodal scattering coefficients.
//!
//! Activations are stored column-wise (`dim x batch`). Hidden layers use ELU,
//! the output layer is affine. Training minimizes the mean absolute error
//! with Adam.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::datagen::{map_eof, Dataset, HashingReader, HashingWriter};
use crate::error::{Error, Result};
use crate::local::{unflatten_operators, LocalOperators};

/// Learning-rate phases: `(epochs, rate)`.
pub type Schedule = Vec<(usize, f64)>;

pub fn full_schedule() -> Schedule {
    vec![(3000, 1e-3), (3000, 1e-4), (3000, 1e-5)]
}

pub fn desk_schedule() -> Schedule {
    vec![(300, 1e-3), (300, 1e-4), (300, 1e-5)]
}

pub fn elu(z: f64) -> f64 {
    if z >= 0.0 {
        z
    } else {
        z.exp_m1()
    }
}

fn elu_prime(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        z.exp()
    }
}

/// Number of inflow (= outflow) trace unknowns per element.
pub fn trace_size(p: usize, n_a: usize) -> usize {
    2 * (p + 1) * n_a
}

pub fn output_size(p: usize, n_a: usize) -> usize {
    let t = trace_size(p, n_a);
    t * (t + (p + 1) * (p + 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub p: usize,
    pub n_a: usize,
    /// Angular polynomial degree; only 0 is supported.
    pub p_a: usize,
    dims: Vec<usize>,
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    /// Inputs are divided by this before the first layer.
    pub input_scale: f64,
    pub seed: u64,
    pub schedule: Schedule,
    pub dataset_fingerprint: [u8; 32],
}

/// Network for degree `p`, `n_a` angular elements and `n_layer` affine layers.
/// Hidden widths are twice the input size.
pub fn init_mlp(p: usize, n_a: usize, n_layer: usize, input_scale: f64, seed: u64) -> Result<MlpModel> {
    if p == 0 || n_a == 0 || !n_a.is_multiple_of(4) {
        return Err(Error::Dimension(format!("unsupported p={p}, N_a={n_a}")));
    }
    if n_layer == 0 {
        return Err(Error::Dimension("network needs at least one layer".into()));
    }
    if !(input_scale > 0.0) {
        return Err(Error::Config(format!("input scale {input_scale} must be positive")));
    }
    let n_in = (p + 1) * (p + 1);
    let mut dims = vec![n_in];
    dims.extend(std::iter::repeat_n(2 * n_in, n_layer - 1));
    dims.push(output_size(p, n_a));
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(n_layer);
    let mut biases = Vec::with_capacity(n_layer);
    for l in 0..n_layer {
        let (fan_in, fan_out) = (dims[l], dims[l + 1]);
        let bound = 1.0 / (fan_in as f64).sqrt();
        // row-major draw order so the stream layout matches the file layout
        let w: Vec<f64> = (0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect();
        weights.push(DMatrix::from_row_slice(fan_out, fan_in, &w));
        biases.push(DVector::from_fn(fan_out, |_, _| rng.random_range(-bound..bound)));
    }
    Ok(MlpModel {
        p,
        n_a,
        p_a: 0,
        dims,
        weights,
        biases,
        input_scale,
        seed,
        schedule: Vec::new(),
        dataset_fingerprint: [0; 32],
    })
}

/// Parameter gradients, shaped like the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl MlpModel {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn n_in(&self) -> usize {
        self.dims[0]
    }

    pub fn n_out(&self) -> usize {
        *self.dims.last().expect("nonempty dims")
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[DVector<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [DVector<f64>] {
        &mut self.biases
    }

    /// Weight (column-major index) or bias entry of layer `l`.
    pub fn param_mut(&mut self, l: usize, is_bias: bool, index: usize) -> &mut f64 {
        if is_bias {
            &mut self.biases[l][index]
        } else {
            &mut self.weights[l].as_mut_slice()[index]
        }
    }

    pub fn check_discretization(&self, p: usize, n_a: usize) -> Result<()> {
        if self.p != p || self.n_a != n_a {
            return Err(Error::ModelMismatch(format!(
                "model trained for p={} N_a={}, discretization has p={p} N_a={n_a}",
                self.p, self.n_a
            )));
        }
        Ok(())
    }

    fn scaled_input(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.n_in() {
            return Err(Error::Dimension(format!(
                "input has {} rows, model expects {}",
                x.nrows(),
                self.n_in()
            )));
        }
        Ok(x / self.input_scale)
    }

    fn affine(&self, l: usize, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &self.weights[l] * a;
        for mut col in z.column_iter_mut() {
            col += &self.biases[l];
        }
        z
    }

    /// Batched forward pass; column `k` of `x` is one raw input.
    pub fn forward_batch(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut a = self.scaled_input(x)?;
        let last = self.n_layers() - 1;
        for l in 0..=last {
            let mut z = self.affine(l, &a);
            if l < last {
                z.apply(|v| *v = elu(*v));
            }
            a = z;
        }
        Ok(a)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let out = self.forward_batch(&DMatrix::from_column_slice(x.len(), 1, x))?;
        Ok(out.as_slice().to_vec())
    }

    /// Mean absolute error over all entries and its gradient.
    pub fn mae_and_gradient(&self, x: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<(f64, Gradients)> {
        if t.nrows() != self.n_out() || t.ncols() != x.ncols() {
            return Err(Error::Dimension("target shape does not match".into()));
        }
        let n_layers = self.n_layers();
        let mut acts = vec![self.scaled_input(x)?];
        let mut pre = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let z = self.affine(l, &acts[l]);
            if l + 1 < n_layers {
                acts.push(z.map(elu));
            }
            pre.push(z);
        }
        let y = pre.last().expect("at least one layer");
        let count = (t.nrows() * t.ncols()) as f64;
        let mut loss = 0.0;
        let mut delta = DMatrix::zeros(t.nrows(), t.ncols());
        for ((d, &yv), &tv) in delta.iter_mut().zip(y.iter()).zip(t.iter()) {
            let r = yv - tv;
            loss += r.abs();
            *d = if r > 0.0 {
                1.0 / count
            } else if r < 0.0 {
                -1.0 / count
            } else {
                0.0
            };
        }
        let mut gw = vec![DMatrix::zeros(0, 0); n_layers];
        let mut gb = vec![DVector::zeros(0); n_layers];
        for l in (0..n_layers).rev() {
            gw[l] = &delta * acts[l].transpose();
            gb[l] = delta.column_sum();
            if l > 0 {
                let mut back = self.weights[l].tr_mul(&delta);
                back.zip_apply(&pre[l - 1], |b, z| *b *= elu_prime(z));
                delta = back;
            }
        }
        Ok((
            loss / count,
            Gradients {
                weights: gw,
                biases: gb,
            },
        ))
    }

    pub fn mae(&self, x: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<f64> {
        let y = self.forward_batch(x)?;
        if y.shape() != t.shape() {
            return Err(Error::Dimension("target shape does not match".into()));
        }
        Ok((y - t).abs().sum() / t.len() as f64)
    }

    /// SHA-256 over all weights and biases in file order.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    h.update(w[(r, c)].to_le_bytes());
                }
            }
            for v in b.iter() {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().into()
    }

    pub fn fingerprint_hex(&self) -> String {
        hex(&self.fingerprint())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Network input for an element of side `h`: nodal `h sigma_s / 2`.
pub fn surrogate_input(sigma_s: &[f64], h: f64) -> Vec<f64> {
    sigma_s.iter().map(|s| 0.5 * h * s).collect()
}

fn to_operators(model: &MlpModel, flat: &[f64]) -> Result<LocalOperators> {
    let n_in = trace_size(model.p, model.n_a);
    let nn = (model.p + 1) * (model.p + 1);
    let (o, m) = unflatten_operators(flat, n_in, nn)?;
    Ok(LocalOperators::from_parts(o, m))
}

/// Operators for one square element of side `h`.
pub fn predict_local_ops(model: &MlpModel, sigma_s: &[f64], h: f64) -> Result<LocalOperators> {
    let y = model.forward(&surrogate_input(sigma_s, h))?;
    to_operators(model, &y)
}

/// Operators for many square elements of side `h` in one batched pass.
pub fn predict_local_ops_batch(model: &MlpModel, sigma_s: &[Vec<f64>], h: f64) -> Result<Vec<LocalOperators>> {
    if sigma_s.is_empty() {
        return Ok(Vec::new());
    }
    let n_in = model.n_in();
    if let Some(bad) = sigma_s.iter().find(|s| s.len() != n_in) {
        return Err(Error::Dimension(format!(
            "element input of length {}, model expects {n_in}",
            bad.len()
        )));
    }
    let x = DMatrix::from_fn(n_in, sigma_s.len(), |r, c| 0.5 * h * sigma_s[c][r]);
    let y = model.forward_batch(&x)?;
    y.column_iter().map(|col| to_operators(model, col.as_slice())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_mae: f64,
    pub test_mae: f64,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub schedule: Schedule,
    /// Seed for minibatch shuffling.
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl TrainConfig {
    pub fn new(schedule: Schedule, seed: u64) -> Self {
        Self {
            batch_size: 50,
            schedule,
            seed,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments and the loss history.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub step: u64,
    pub epoch: usize,
    m: Gradients,
    v: Gradients,
    pub history: Vec<EpochRecord>,
}

impl TrainState {
    pub fn new(model: &MlpModel) -> Self {
        let zeros = || Gradients {
            weights: model
                .weights
                .iter()
                .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
                .collect(),
            biases: model.biases.iter().map(|b| DVector::zeros(b.len())).collect(),
        };
        Self {
            step: 0,
            epoch: 0,
            m: zeros(),
            v: zeros(),
            history: Vec::new(),
        }
    }
}

fn adam_update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr_t: f64, cfg: &TrainConfig) {
    for i in 0..p.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        p[i] -= lr_t * m[i] / (v[i].sqrt() + cfg.eps);
    }
}

/// One Adam step with bias-corrected rate.
pub fn adam_step(model: &mut MlpModel, state: &mut TrainState, grads: &Gradients, lr: f64, cfg: &TrainConfig) {
    state.step += 1;
    let t = state.step as i32;
    // fold the bias correction into the rate; eps is then scaled by sqrt(1 - b2^t)
    let lr_t = lr * (1.0 - cfg.beta2.powi(t)).sqrt() / (1.0 - cfg.beta1.powi(t));
    for l in 0..model.n_layers() {
        adam_update(
            model.weights[l].as_mut_slice(),
            grads.weights[l].as_slice(),
            state.m.weights[l].as_mut_slice(),
            state.v.weights[l].as_mut_slice(),
            lr_t,
            cfg,
        );
        adam_update(
            model.biases[l].as_mut_slice(),
            grads.biases[l].as_slice(),
            state.m.biases[l].as_mut_slice(),
            state.v.biases[l].as_mut_slice(),
            lr_t,
            cfg,
        );
    }
}

fn gather(ds: &Dataset, idx: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n_in, n_out) = (ds.meta.n_in, ds.meta.n_out);
    let mut x = DMatrix::zeros(n_in, idx.len());
    let mut t = DMatrix::zeros(n_out, idx.len());
    for (c, &k) in idx.iter().enumerate() {
        x.column_mut(c).copy_from_slice(ds.input(k));
        t.column_mut(c).copy_from_slice(ds.label(k));
    }
    (x, t)
}

/// MAE of the model over a set of dataset rows, evaluated in chunks.
pub fn evaluate(model: &MlpModel, ds: &Dataset, idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for chunk in idx.chunks(64) {
        let (x, t) = gather(ds, chunk);
        total += model.mae(&x, &t)? * chunk.len() as f64;
    }
    Ok(total / idx.len() as f64)
}

/// Train on the dataset's training split, recording train/test MAE per epoch.
/// `on_epoch` sees every record as it is produced.
pub fn train_with(
    model: &mut MlpModel,
    ds: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainState> {
    if ds.meta.n_train == 0 {
        return Err(Error::EmptyDataset);
    }
    model.check_discretization(ds.meta.p, ds.meta.n_a).map_err(|_| {
        Error::DatasetMismatch(format!(
            "dataset p={} N_a={} vs model p={} N_a={}",
            ds.meta.p, ds.meta.n_a, model.p, model.n_a
        ))
    })?;
    if ds.meta.n_in != model.n_in() || ds.meta.n_out != model.n_out() {
        return Err(Error::DatasetMismatch(
            "input/output sizes differ from the model".into(),
        ));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut state = TrainState::new(model);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = ds.train_indices().collect();
    let test: Vec<usize> = ds.test_indices().collect();
    for &(epochs, lr) in &cfg.schedule {
        for _ in 0..epochs {
            state.epoch += 1;
            order.shuffle(&mut rng);
            let mut sum = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                let (x, t) = gather(ds, batch);
                let (loss, grads) = model.mae_and_gradient(&x, &t)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged {
                        epoch: state.epoch,
                        detail: format!("loss {loss} at step {} (lr {lr})", state.step + 1),
                    });
                }
                sum += loss * batch.len() as f64;
                adam_step(model, &mut state, &grads, lr, cfg);
            }
            let rec = EpochRecord {
                epoch: state.epoch,
                lr,
                train_mae: sum / order.len() as f64,
                test_mae: evaluate(model, ds, &test)?,
            };
            on_epoch(&rec);
            state.history.push(rec);
        }
    }
    model.schedule = cfg.schedule.clone();
    model.dataset_fingerprint = ds.fingerprint();
    Ok(state)
}

pub fn train(model: &mut MlpModel, ds: &Dataset, cfg: &TrainConfig) -> Result<TrainState> {
    train_with(model, ds, cfg, |_| {})
}

/// Analytic vs central-difference derivative of the MAE for one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientProbe {
    pub layer: usize,
    pub is_bias: bool,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradientProbe {
    pub fn relative_error(&self) -> f64 {
        let scale = self.analytic.abs().max(self.numeric.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.analytic - self.numeric).abs() / scale
        }
    }
}

/// Compare gradients at `per_layer` random weights of every layer (plus one bias).
pub fn gradient_check<R: Rng>(
    model: &MlpModel,
    x: &DMatrix<f64>,
    t: &DMatrix<f64>,
    per_layer: usize,
    step: f64,
    rng: &mut R,
) -> Result<Vec<GradientProbe>> {
    let (_, grads) = model.mae_and_gradient(x, t)?;
    let mut probes = Vec::new();
    let mut work = model.clone();
    for l in 0..model.n_layers() {
        let mut picks: Vec<(bool, usize)> = (0..per_layer)
            .map(|_| (false, rng.random_range(0..model.weights[l].len())))
            .collect();
        picks.push((true, rng.random_range(0..model.biases[l].len())));
        for (is_bias, index) in picks {
            let orig = *work.param_mut(l, is_bias, index);
            *work.param_mut(l, is_bias, index) = orig + step;
            let up = work.mae(x, t)?;
            *work.param_mut(l, is_bias, index) = orig - step;
            let down = work.mae(x, t)?;
            *work.param_mut(l, is_bias, index) = orig;
            let analytic = if is_bias {
                grads.biases[l][index]
            } else {
                grads.weights[l].as_slice()[index]
            };
            probes.push(GradientProbe {
                layer: l,
                is_bias,
                index,
                analytic,
                numeric: (up - down) / (2.0 * step),
            });
        }
    }
    Ok(probes)
}

const MODEL_MAGIC: &[u8; 8] = b"HDGELNN\0";
pub const MODEL_VERSION: u32 = 1;
const ACTIVATION_ELU_IDENTITY: u8 = 1;

/// Binary layout (little-endian): magic, version, `p_x`, `p_y`, `N_a`, `p_a`,
/// `N_layer` (u32 each), dims (u64 each), activation tag (u8), input scale
/// (f64), seed (u64), schedule length (u32) and `(epochs u64, lr f64)`
/// phases, 32-byte dataset fingerprint, then per layer the weight matrix
/// row-major followed by the bias, and a SHA-256 trailer of all preceding bytes.
pub fn write_model<W: Write>(model: &MlpModel, w: W) -> Result<()> {
    let mut w = HashingWriter::new(w);
    w.write_all(MODEL_MAGIC)?;
    w.write_u32::<LittleEndian>(MODEL_VERSION)?;
    for v in [model.p, model.p, model.n_a, model.p_a, model.n_layers()] {
        w.write_u32::<LittleEndian>(v as u32)?;
    }
    for &d in &model.dims {
        w.write_u64::<LittleEndian>(d as u64)?;
    }
    w.write_u8(ACTIVATION_ELU_IDENTITY)?;
    w.write_f64::<LittleEndian>(model.input_scale)?;
    w.write_u64::<LittleEndian>(model.seed)?;
    w.write_u32::<LittleEndian>(model.schedule.len() as u32)?;
    for &(e, lr) in &model.schedule {
        w.write_u64::<LittleEndian>(e as u64)?;
        w.write_f64::<LittleEndian>(lr)?;
    }
    w.write_all(&model.dataset_fingerprint)?;
    for (wm, b) in model.weights.iter().zip(&model.biases) {
        for r in 0..wm.nrows() {
            for c in 0..wm.ncols() {
                w.write_f64::<LittleEndian>(wm[(r, c)])?;
            }
        }
        for v in b.iter() {
            w.write_f64::<LittleEndian>(*v)?;
        }
    }
    w.finish()
}

pub fn read_model<R: Read>(r: R) -> Result<MlpModel> {
    read_model_inner(r).map_err(map_eof)
}

fn read_model_inner<R: Read>(r: R) -> Result<MlpModel> {
    let mut r = HashingReader::new(r);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Corrupt("not a model file".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != MODEL_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let mut hdr = [0usize; 5];
    for h in &mut hdr {
        *h = r.read_u32::<LittleEndian>()? as usize;
    }
    let [px, py, n_a, p_a, n_layer] = hdr;
    if px != py || p_a != 0 || n_layer == 0 || n_layer > 64 {
        return Err(Error::Corrupt(format!(
            "unsupported header p_x={px} p_y={py} p_a={p_a} N_layer={n_layer}"
        )));
    }
    let dims = (0..=n_layer)
        .map(|_| r.read_u64::<LittleEndian>().map(|d| d as usize))
        .collect::<std::io::Result<Vec<_>>>()?;
    if dims[0] != (px + 1) * (px + 1) || dims[n_layer] != output_size(px, n_a) {
        return Err(Error::Corrupt("layer sizes inconsistent with (p, N_a)".into()));
    }
    let tag = r.read_u8()?;
    if tag != ACTIVATION_ELU_IDENTITY {
        return Err(Error::Corrupt(format!("unknown activation tag {tag}")));
    }
    let input_scale = r.read_f64::<LittleEndian>()?;
    let seed = r.read_u64::<LittleEndian>()?;
    let n_phases = r.read_u32::<LittleEndian>()? as usize;
    if n_phases > 1024 {
        return Err(Error::Corrupt("oversized schedule".into()));
    }
    let mut schedule = Vec::with_capacity(n_phases);
    for _ in 0..n_phases {
        let e = r.read_u64::<LittleEndian>()? as usize;
        schedule.push((e, r.read_f64::<LittleEndian>()?));
    }
    let mut dataset_fingerprint = [0u8; 32];
    r.read_exact(&mut dataset_fingerprint)?;
    let mut weights = Vec::with_capacity(n_layer);
    let mut biases = Vec::with_capacity(n_layer);
    for l in 0..n_layer {
        let mut w = vec![0.0; dims[l] * dims[l + 1]];
        r.read_f64_into::<LittleEndian>(&mut w)?;
        weights.push(DMatrix::from_row_slice(dims[l + 1], dims[l], &w));
        let mut b = vec![0.0; dims[l + 1]];
        r.read_f64_into::<LittleEndian>(&mut b)?;
        biases.push(DVector::from_vec(b));
    }
    r.verify()?;
    Ok(MlpModel {
        p: px,
        n_a,
        p_a,
        dims,
        weights,
        biases,
        input_scale,
        seed,
        schedule,
        dataset_fingerprint,
    })
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    write_model(model, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    read_model(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Load a model and check it against the discretization.
pub fn load_model_for(path: &Path, p: usize, n_a: usize) -> Result<MlpModel> {
    let m = load_model(path)?;
    m.check_discretization(p, n_a)?;
    Ok(m)
}
