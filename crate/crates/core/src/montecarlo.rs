//! Monte Carlo samplers of the matched-filter SNR `γ₁ = ∫₀ᵂ |h(x)|² dx` and
//! empirical-distribution statistics.
//!
//! Randomness: replicate `i` of a run with seed `s` draws from a ChaCha8
//! generator seeded with `s` and switched to stream `i`. Each replicate is
//! therefore a function of `(s, i)` alone, independent of how replicates
//! are split across threads or calls.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{covariance_matrix, CorrelationKernel, KernelKind, SystemConfig};
use crate::kleigen::EigenSpectrum;
use crate::linalg::hermitian_eigen;

/// Relative floor below which covariance eigenvalues are treated as zero.
pub const FACTOR_RANK_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Kl,
    Grid,
    Ray,
    DiscreteArray,
}

/// Replicates of `γ₁` with the settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub n_rep: usize,
    pub first_index: u64,
    pub config_snapshot: Option<SystemConfig>,
}

impl SampleSet {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn summary(&self) -> Result<Summary> {
        summarize(&self.values)
    }
}

/// Generator for replicate `index` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed of the `part`-th independent sub-run of a run seeded with `seed`
/// (SplitMix64 finaliser of `seed + (part + 1)·φ`).
pub fn derive_seed(seed: u64, part: u64) -> u64 {
    let mut z = seed.wrapping_add(part.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_reps(n_rep: usize) -> Result<()> {
    if n_rep == 0 {
        return Err(Error::Usage("number of replicates must be at least 1".into()));
    }
    Ok(())
}

fn run<F>(first: u64, n_rep: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    (first..first + n_rep as u64)
        .into_par_iter()
        .map(|i| f(&mut replicate_rng(seed, i)))
        .collect()
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `γ₁ = Σ λ_n e_n` with `e_n` i.i.d. standard exponential.
pub fn sample_kl(spec: &EigenSpectrum, n_rep: usize, seed: u64) -> Result<SampleSet> {
    sample_kl_range(spec, 0, n_rep, seed)
}

/// Replicates `first .. first + n_rep` of [`sample_kl`].
pub fn sample_kl_range(spec: &EigenSpectrum, first: u64, n_rep: usize, seed: u64) -> Result<SampleSet> {
    check_reps(n_rep)?;
    let lambdas: Vec<f64> = spec.values().iter().copied().filter(|v| *v > 0.0).collect();
    let values = run(first, n_rep, seed, |rng| {
        lambdas.iter().map(|l| l * rng.sample::<f64, _>(Exp1)).sum()
    });
    Ok(SampleSet {
        values,
        sampler: SamplerKind::Kl,
        seed,
        n_rep,
        first_index: first,
        config_snapshot: None,
    })
}

/// Default grid density `max(256, ⌈40 W/λ⌉)`.
pub fn default_grid_points(cfg: &SystemConfig) -> usize {
    256usize.max((40.0 * cfg.aperture_w / cfg.wavelength).ceil() as usize)
}

fn check_grid(cfg: &SystemConfig, m: usize) -> Result<()> {
    let needed = 20.0 * cfg.aperture_w / cfg.wavelength;
    if (m as f64) < needed || m == 0 {
        return Err(Error::Usage(format!(
            "grid of {m} points is coarser than 20 per wavelength (needs {})",
            needed.ceil()
        )));
    }
    Ok(())
}

/// Columns `√μ_k v_k` of the clipped eigen-factorisation of `C` on `points`.
fn factor_covariance(kernel: &CorrelationKernel, points: &[f64]) -> Result<DMatrix<Complex64>> {
    let cov = covariance_matrix(kernel, points)?;
    let (vals, vecs) = hermitian_eigen(&cov)?;
    let top = vals.iter().cloned().fold(0.0f64, f64::max);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > FACTOR_RANK_TOL * top).collect();
    let mut l = DMatrix::<Complex64>::zeros(points.len(), keep.len());
    for (col, &k) in keep.iter().enumerate() {
        let s = vals[k].sqrt();
        for i in 0..points.len() {
            l[(i, col)] = vecs[(i, k)] * s;
        }
    }
    Ok(l)
}

/// `Σ_k |(G z)_k|²` per replicate, `z` i.i.d. circular standard complex normal.
fn run_quadratic(g: &DMatrix<Complex64>, n_rep: usize, seed: u64) -> Vec<f64> {
    // row-major copy for contiguous inner loops
    let rows: Vec<Vec<Complex64>> = (0..g.nrows()).map(|r| g.row(r).iter().copied().collect()).collect();
    let k = g.ncols();
    (0..n_rep as u64)
        .into_par_iter()
        .map_init(
            || vec![Complex64::new(0.0, 0.0); k],
            |z, i| {
                let mut rng = replicate_rng(seed, i);
                for zk in z.iter_mut() {
                    *zk = complex_normal(&mut rng);
                }
                rows.iter()
                    .map(|row| {
                        row.iter()
                            .zip(z.iter())
                            .map(|(a, b)| a * b)
                            .sum::<Complex64>()
                            .norm_sqr()
                    })
                    .sum()
            },
        )
        .collect()
}

/// Riemann sum `Σ |h(x_i)|² W/M` with `h` drawn on the midpoint grid
/// `x_i = (i + ½)W/M`.
pub fn sample_grid(kernel: &CorrelationKernel, m: usize, n_rep: usize, seed: u64) -> Result<SampleSet> {
    check_reps(n_rep)?;
    let cfg = *kernel.config();
    check_grid(&cfg, m)?;
    let w = cfg.aperture_w;
    let points: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * w / m as f64).collect();
    let l = factor_covariance(kernel, &points)? * Complex64::new((w / m as f64).sqrt(), 0.0);
    Ok(SampleSet {
        values: run_quadratic(&l, n_rep, seed),
        sampler: SamplerKind::Grid,
        seed,
        n_rep,
        first_index: 0,
        config_snapshot: Some(cfg),
    })
}

/// Ray-based simulation with fresh uniform phases per replicate, integrated
/// on the midpoint grid.
pub fn sample_rays(kernel: &CorrelationKernel, m: usize, n_rep: usize, seed: u64) -> Result<SampleSet> {
    check_reps(n_rep)?;
    if kernel.kind() != KernelKind::RayBased {
        return Err(Error::Usage("ray sampler needs a ray-based kernel".into()));
    }
    let cfg = *kernel.config();
    check_grid(&cfg, m)?;
    let w = cfg.aperture_w;
    let dx = w / m as f64;
    let points: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * dx).collect();

    // Rays sharing a spatial frequency add coherently, so merge them per
    // replicate: h(x) = Σ_q e^{jα_q x} Σ_{r∈q} √β_r e^{jΦ_r}.
    let alphas = kernel.ray_wavenumbers();
    let tol = 1e-12 * cfg.wavenumber.max(1.0);
    let mut groups: Vec<f64> = Vec::new();
    let mut group_of = Vec::with_capacity(alphas.len());
    for a in &alphas {
        match groups.iter().position(|g| (g - a).abs() <= tol) {
            Some(q) => group_of.push(q),
            None => {
                group_of.push(groups.len());
                groups.push(*a);
            }
        }
    }
    // Gram matrix of the plane waves under the Riemann sum
    let q = groups.len();
    let mut gram = vec![Complex64::new(0.0, 0.0); q * q];
    for a in 0..q {
        for b in a..q {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in &points {
                acc += Complex64::from_polar(dx, (groups[b] - groups[a]) * x);
            }
            gram[a * q + b] = acc;
            gram[b * q + a] = acc.conj();
        }
    }
    let amps: Vec<f64> = kernel.ray_gains().iter().map(|g| g.sqrt()).collect();
    let values = run(0, n_rep, seed, |rng| {
        let mut coef = vec![Complex64::new(0.0, 0.0); q];
        for (r, amp) in amps.iter().enumerate() {
            let phase = rng.random::<f64>() * 2.0 * PI;
            coef[group_of[r]] += Complex64::from_polar(*amp, phase);
        }
        let mut total = 0.0;
        for a in 0..q {
            let mut acc = Complex64::new(0.0, 0.0);
            for b in 0..q {
                acc += gram[a * q + b] * coef[b];
            }
            total += (coef[a].conj() * acc).re;
        }
        total.max(0.0)
    });
    Ok(SampleSet {
        values,
        sampler: SamplerKind::Ray,
        seed,
        n_rep,
        first_index: 0,
        config_snapshot: Some(cfg),
    })
}

/// Midpoints used by [`sample_discrete_array`]: `m / n_elem` per element
/// (at least one), element `k` of length `Δ = f·W/n_elem` centred at
/// `(2k − 1)W / (2 n_elem)`.
pub fn discrete_array_points(w: f64, n_elem: usize, energy_fraction: f64, m: usize) -> Vec<Vec<f64>> {
    let delta = energy_fraction * w / n_elem as f64;
    let per = (m / n_elem).max(1);
    (1..=n_elem)
        .map(|k| {
            let start = (2 * k - 1) as f64 * w / (2 * n_elem) as f64 - 0.5 * delta;
            (0..per)
                .map(|j| start + (j as f64 + 0.5) * delta / per as f64)
                .collect()
        })
        .collect()
}

/// Array of `n_elem` segments covering `energy_fraction` of the aperture.
/// Each element aggregates `h_k = ∫_segment h(x) dx` and the SNR replicate is
/// `Σ_k |h_k|² / Δ`.
pub fn sample_discrete_array(
    kernel: &CorrelationKernel,
    n_elem: usize,
    energy_fraction: f64,
    m: usize,
    n_rep: usize,
    seed: u64,
) -> Result<SampleSet> {
    check_reps(n_rep)?;
    if n_elem == 0 {
        return Err(Error::Usage("discrete array needs at least one element".into()));
    }
    if !(energy_fraction > 0.0 && energy_fraction <= 1.0) {
        return Err(Error::Usage(format!(
            "energy fraction must lie in (0, 1], got {energy_fraction}"
        )));
    }
    let cfg = *kernel.config();
    check_grid(&cfg, m)?;
    let w = cfg.aperture_w;
    let delta = energy_fraction * w / n_elem as f64;
    let elements = discrete_array_points(w, n_elem, energy_fraction, m);
    let per = elements[0].len();
    let points: Vec<f64> = elements.iter().flatten().copied().collect();
    let l = factor_covariance(kernel, &points)?;
    // row k: (Δ/per) Σ_{i∈k} L_i, scaled by 1/√Δ
    let scale = delta.sqrt() / per as f64;
    let mut g = DMatrix::<Complex64>::zeros(n_elem, l.ncols());
    for k in 0..n_elem {
        for i in k * per..(k + 1) * per {
            for col in 0..l.ncols() {
                g[(k, col)] += l[(i, col)] * scale;
            }
        }
    }
    Ok(SampleSet {
        values: run_quadratic(&g, n_rep, seed),
        sampler: SamplerKind::DiscreteArray,
        seed,
        n_rep,
        first_index: 0,
        config_snapshot: Some(cfg),
    })
}

/// Right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Usage("empirical CDF of an empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Usage("sample contains NaN".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        Ok(Self { sorted })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Smallest sample value `v` with `F(v) ≥ p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

pub fn empirical_cdf(s: &SampleSet) -> Result<EmpiricalCdf> {
    EmpiricalCdf::new(&s.values)
}

/// `sup_x |F_n(x) − F(x)|` for a continuous `F`.
pub fn ks_distance<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> Result<f64> {
    let e = EmpiricalCdf::new(values)?;
    let n = e.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in e.sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 / n - f).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (ea, eb) = (EmpiricalCdf::new(a)?, EmpiricalCdf::new(b)?);
    let (sa, sb) = (ea.sorted(), eb.sorted());
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub median: f64,
    pub cv: f64,
    /// `√(variance / n)`.
    pub std_error: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    let e = EmpiricalCdf::new(values)?;
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok(Summary {
        n,
        mean,
        variance,
        median: e.median(),
        cv: variance.sqrt() / mean,
        std_error: (variance / n as f64).sqrt(),
    })
}
