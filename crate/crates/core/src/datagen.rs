//! Random coefficient fields on the reference element and labeled datasets
//! of exact local operators.
//!
//! Every sample owns an independent ChaCha20 stream (`seed`, stream = sample
//! index), so datasets do not depend on thread count or generation order.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::modal_nodal_transform;
use crate::error::{Error, Result};
use crate::local::{exact_local_operators, flatten_operators, Discretization, ElementSize, SigmaField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub p: usize,
    /// Decay rate of high modes.
    pub c_sm: f64,
    /// Upper bound of the amplification factor.
    pub a_sigma: f64,
    /// Use `exp(-c ((m/p)^2 - (n/p)^2))` instead of the sum of squares.
    pub difference_exponent: bool,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(p: usize, c_sm: f64, a_sigma: f64, seed: u64) -> Self {
        Self {
            p,
            c_sm,
            a_sigma,
            difference_exponent: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidDegree(0));
        }
        if !(self.c_sm >= 0.0) || !(self.a_sigma > 0.0) {
            return Err(Error::Config(format!(
                "need c_sm >= 0 and A_sigma > 0, got {} and {}",
                self.c_sm, self.a_sigma
            )));
        }
        Ok(())
    }

    /// Generator for sample `index`.
    pub fn rng(&self, index: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    fn decay(&self, m: usize, n: usize) -> f64 {
        let p = self.p as f64;
        let (a, b) = ((m as f64 / p).powi(2), (n as f64 / p).powi(2));
        let e = if self.difference_exponent { a - b } else { a + b };
        (-self.c_sm * e).exp()
    }
}

/// Raw modal draw `exp(-c(...)) (X_mn - 1/2)`, indexed `m + (p+1) n`.
pub fn sample_modal<R: Rng>(cfg: &SamplerConfig, rng: &mut R) -> Vec<f64> {
    let n = cfg.p + 1;
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            out[i + n * j] = cfg.decay(i, j) * (rng.random::<f64>() - 0.5);
        }
    }
    out
}

/// One sample split into its stages.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSample {
    /// Nodal field before post-processing.
    pub raw: Vec<f64>,
    /// Shifted and normalized to `[0, 1]`.
    pub normalized: Vec<f64>,
    pub amplification: f64,
    pub sigma: Vec<f64>,
}

/// Draw one nodal coefficient field on the reference element. Degenerate
/// (constant) draws are redrawn from the same stream; the redraw count is returned.
pub fn sample_sigma_detailed<R: Rng>(cfg: &SamplerConfig, rng: &mut R) -> Result<(SigmaSample, usize)> {
    cfg.validate()?;
    let tr = modal_nodal_transform(cfg.p)?;
    let mut redraws = 0;
    loop {
        let raw = tr.to_nodal_2d(&sample_modal(cfg, rng));
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let shifted: Vec<f64> = raw.iter().map(|v| v - min).collect();
        let max = shifted.iter().copied().fold(0.0, f64::max);
        if !(max > 0.0) || !max.is_finite() {
            redraws += 1;
            continue;
        }
        let normalized: Vec<f64> = shifted.iter().map(|v| v / max).collect();
        let amplification = rng.random_range(0.0..=cfg.a_sigma);
        let sigma = normalized.iter().map(|v| amplification * v).collect();
        return Ok((
            SigmaSample {
                raw,
                normalized,
                amplification,
                sigma,
            },
            redraws,
        ));
    }
}

pub fn sample_sigma<R: Rng>(cfg: &SamplerConfig, rng: &mut R) -> Result<Vec<f64>> {
    Ok(sample_sigma_detailed(cfg, rng)?.0.sigma)
}

/// Fraction of modal energy in modes with `m + n > p / 2`.
pub fn high_mode_fraction(p: usize, nodal: &[f64]) -> Result<f64> {
    let tr = modal_nodal_transform(p)?;
    let modal = tr.to_modal_2d(nodal);
    let n = p + 1;
    let (mut hi, mut total) = (0.0, 0.0);
    for (k, c) in modal.iter().enumerate() {
        let e = c * c;
        total += e;
        if 2 * (k % n + k / n) > p {
            hi += e;
        }
    }
    Ok(if total > 0.0 { hi / total } else { 0.0 })
}

/// Discretization parameters a dataset was generated for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub p: usize,
    pub n_a: usize,
    pub g_asym: f64,
    pub omega: f64,
    pub sampler: SamplerConfig,
    pub n_samples: usize,
    pub n_train: usize,
    pub n_in: usize,
    pub n_out: usize,
    /// Draws discarded because the field was constant or the local solve failed.
    pub resamples: usize,
}

/// Inputs (nodal `sigma_s` on the reference element) and labels (flattened
/// `A_i2o` then `A_i2m`), both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub inputs: Vec<f64>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.meta.n_samples
    }

    pub fn is_empty(&self) -> bool {
        self.meta.n_samples == 0
    }

    pub fn input(&self, k: usize) -> &[f64] {
        &self.inputs[k * self.meta.n_in..(k + 1) * self.meta.n_in]
    }

    pub fn label(&self, k: usize) -> &[f64] {
        &self.labels[k * self.meta.n_out..(k + 1) * self.meta.n_out]
    }

    pub fn train_indices(&self) -> std::ops::Range<usize> {
        0..self.meta.n_train
    }

    pub fn test_indices(&self) -> std::ops::Range<usize> {
        self.meta.n_train..self.meta.n_samples
    }

    /// SHA-256 over the header and both arrays.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.meta).expect("meta serializes"));
        for v in self.inputs.iter().chain(&self.labels) {
            h.update(v.to_le_bytes());
        }
        h.finalize().into()
    }

    pub fn check_discretization(&self, p: usize, n_a: usize) -> Result<()> {
        if self.meta.p != p || self.meta.n_a != n_a {
            return Err(Error::DatasetMismatch(format!(
                "file has p={} N_a={}, requested p={p} N_a={n_a}",
                self.meta.p, self.meta.n_a
            )));
        }
        Ok(())
    }
}

/// Label for one coefficient field: exact operators on the reference element.
pub fn label_for(disc: &Discretization, sigma_s: &[f64], omega: f64) -> Result<Vec<f64>> {
    let sig = SigmaField::from_scattering(disc.degree(), sigma_s.to_vec(), omega)?;
    let ops = exact_local_operators(disc, &sig, ElementSize::REFERENCE, None)?;
    Ok(flatten_operators(&ops))
}

/// Generate `n_samples` labeled samples, the first 80% forming the training split.
pub fn generate_dataset(cfg: &SamplerConfig, disc: &Discretization, omega: f64, n_samples: usize) -> Result<Dataset> {
    cfg.validate()?;
    if n_samples < 5 {
        return Err(Error::Config(format!("need at least 5 samples, got {n_samples}")));
    }
    if cfg.p != disc.degree() {
        return Err(Error::Dimension(format!(
            "sampler degree {} vs discretization degree {}",
            cfg.p,
            disc.degree()
        )));
    }
    let rows: Vec<(Vec<f64>, Vec<f64>, usize)> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = cfg.rng(k as u64);
            let mut resamples = 0;
            loop {
                let (s, redraws) = sample_sigma_detailed(cfg, &mut rng)?;
                resamples += redraws;
                match label_for(disc, &s.sigma, omega) {
                    Ok(label) => return Ok((s.sigma, label, resamples)),
                    Err(Error::SingularLocal { .. }) if resamples < 100 => {
                        log::warn!("sample {k}: singular local system, redrawing");
                        resamples += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect::<Result<_>>()?;
    let n_in = disc.n_nodes();
    let n_out = rows[0].1.len();
    let mut inputs = Vec::with_capacity(n_samples * n_in);
    let mut labels = Vec::with_capacity(n_samples * n_out);
    let mut resamples = 0;
    for (i, l, r) in rows {
        inputs.extend(i);
        labels.extend(l);
        resamples += r;
    }
    Ok(Dataset {
        meta: DatasetMeta {
            p: disc.degree(),
            n_a: disc.n_angles(),
            g_asym: disc.kernel.g_asym(),
            omega,
            sampler: *cfg,
            n_samples,
            n_train: n_samples * 4 / 5,
            n_in,
            n_out,
            resamples,
        },
        inputs,
        labels,
    })
}

const DATASET_MAGIC: &[u8; 8] = b"HDGELDS\0";
pub const DATASET_VERSION: u32 = 1;

/// Binary layout: magic, version (u32), header length (u64), JSON header,
/// inputs and labels as little-endian f64, SHA-256 of everything before it.
pub fn write_dataset<W: Write>(ds: &Dataset, w: W) -> Result<()> {
    let mut w = HashingWriter::new(w);
    w.write_all(DATASET_MAGIC)?;
    w.write_u32::<LittleEndian>(DATASET_VERSION)?;
    let header = serde_json::to_vec(&ds.meta)?;
    w.write_u64::<LittleEndian>(header.len() as u64)?;
    w.write_all(&header)?;
    for v in ds.inputs.iter().chain(&ds.labels) {
        w.write_f64::<LittleEndian>(*v)?;
    }
    w.finish()
}

pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    read_dataset_inner(r).map_err(map_eof)
}

fn read_dataset_inner<R: Read>(r: R) -> Result<Dataset> {
    let mut r = HashingReader::new(r);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DATASET_MAGIC {
        return Err(Error::Corrupt("not a dataset file".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != DATASET_VERSION {
        return Err(Error::Version {
            found: version,
            expected: DATASET_VERSION,
        });
    }
    let len = r.read_u64::<LittleEndian>()? as usize;
    if len > 1 << 20 {
        return Err(Error::Corrupt("oversized header".into()));
    }
    let mut header = vec![0u8; len];
    r.read_exact(&mut header)?;
    let meta: DatasetMeta = serde_json::from_slice(&header)?;
    let mut read_vec = |n: usize| -> Result<Vec<f64>> {
        let mut v = vec![0.0; n];
        r.read_f64_into::<LittleEndian>(&mut v)?;
        Ok(v)
    };
    let inputs = read_vec(meta.n_samples * meta.n_in)?;
    let labels = read_vec(meta.n_samples * meta.n_out)?;
    r.verify()?;
    Ok(Dataset { meta, inputs, labels })
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dataset(ds, f)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Load and check the discretization in one step.
pub fn load_dataset_for(path: &Path, p: usize, n_a: usize) -> Result<Dataset> {
    let ds = load_dataset(path)?;
    ds.check_discretization(p, n_a)?;
    Ok(ds)
}

/// Writer that appends a SHA-256 trailer.
pub(crate) struct HashingWriter<W: Write> {
    inner: W,
    hash: Sha256,
}

impl<W: Write> HashingWriter<W> {
    pub(crate) fn new(inner: W) -> Self {
        Self {
            inner,
            hash: Sha256::new(),
        }
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        let digest = self.hash.finalize_reset();
        self.inner.write_all(&digest)?;
        self.inner.flush()?;
        Ok(())
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hash.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Reader that checks a SHA-256 trailer.
pub(crate) struct HashingReader<R: Read> {
    inner: R,
    hash: Sha256,
}

impl<R: Read> HashingReader<R> {
    pub(crate) fn new(inner: R) -> Self {
        Self {
            inner,
            hash: Sha256::new(),
        }
    }

    pub(crate) fn verify(mut self) -> Result<()> {
        let digest: [u8; 32] = self.hash.finalize_reset().into();
        let mut stored = [0u8; 32];
        self.inner
            .read_exact(&mut stored)
            .map_err(|_| Error::Corrupt("missing checksum".into()))?;
        if stored != digest {
            return Err(Error::Corrupt("checksum mismatch".into()));
        }
        let mut rest = [0u8; 1];
        if self.inner.read(&mut rest)? != 0 {
            return Err(Error::Corrupt("trailing bytes".into()));
        }
        Ok(())
    }
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hash.update(&buf[..n]);
        Ok(n)
    }
}

pub(crate) fn map_eof(e: Error) -> Error {
    match e {
        Error::Io(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => Error::Corrupt("truncated file".into()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn post_processing_bounds() {
        let cfg = SamplerConfig::new(3, 2.0, 10.0, 7);
        let mut rng = cfg.rng(0);
        for _ in 0..50 {
            let (s, _) = sample_sigma_detailed(&cfg, &mut rng).unwrap();
            let min = s.normalized.iter().copied().fold(f64::INFINITY, f64::min);
            let max = s.normalized.iter().copied().fold(0.0, f64::max);
            assert_eq!(min, 0.0);
            assert_eq!(max, 1.0);
            assert!(s.sigma.iter().all(|&v| (0.0..=10.0).contains(&v)));
        }
    }

    #[test]
    fn heavy_smoothing_kills_high_modes() {
        let cfg = SamplerConfig::new(4, 1e3, 10.0, 1);
        let mut rng = cfg.rng(3);
        let modal = sample_modal(&cfg, &mut rng);
        let n = 5;
        let total: f64 = modal.iter().map(|c| c * c).sum();
        let low: f64 = [0, 1, n].iter().map(|&k| modal[k] * modal[k]).sum();
        assert!((total - low) / total < 0.01);
    }

    #[test]
    fn streams_are_independent_of_order() {
        let cfg = SamplerConfig::new(2, 2.0, 10.0, 42);
        let a = sample_sigma(&cfg, &mut cfg.rng(5)).unwrap();
        let _ = sample_sigma(&cfg, &mut cfg.rng(4)).unwrap();
        let b = sample_sigma(&cfg, &mut cfg.rng(5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_sigma(&cfg, &mut cfg.rng(6)).unwrap());
    }

    #[test]
    fn dataset_round_trip() {
        let disc = Discretization::new(2, 4, 0.8).unwrap();
        let cfg = SamplerConfig::new(2, 2.0, 10.0, 11);
        let ds = generate_dataset(&cfg, &disc, 1.0, 10).unwrap();
        assert_eq!(ds.meta.n_train, 8);
        assert_eq!(ds.meta.n_out, 24 * (24 + 9));
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
        assert!(back.check_discretization(3, 4).is_err());
        let last = buf.len() - 40;
        buf[last] ^= 1;
        assert!(matches!(read_dataset(buf.as_slice()), Err(Error::Corrupt(_))));
        assert_eq!(label_for(&disc, ds.input(3), 1.0).unwrap(), ds.label(3));
    }

    #[test]
    fn too_few_samples() {
        let disc = Discretization::new(2, 4, 0.8).unwrap();
        let cfg = SamplerConfig::new(2, 2.0, 10.0, 11);
        assert!(generate_dataset(&cfg, &disc, 1.0, 4).is_err());
    }
}
