//! System configuration, spatial correlation kernels, exact SNR moments and
//! covariance matrices on grids.
//!
//! Both kernels carry the channel gain `β` (with the `Eₛ/σ²` factor folded
//! in), so that the kernel trace over `[0, W]` is `βW` and the mean SNR is
//! `βW`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{converge_by_doubling, GaussLegendre, PANEL_ORDER};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Aperture length (m) at which the reference mean SNR is calibrated.
pub const REFERENCE_APERTURE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Aperture length `W` in metres.
    pub aperture_w: f64,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// `c₀ / f` in metres.
    pub wavelength: f64,
    /// `2π / λ` in rad/m.
    pub wavenumber: f64,
    /// Channel gain with `Eₛ/σ²` folded in; mean SNR is `beta · W`.
    pub beta: f64,
    /// Number of KL modes kept (`N`).
    pub n_modes: usize,
    /// Number of rays in the ray-based channel (`R`).
    pub n_rays: usize,
    pub seed: u64,
}

/// Builds a configuration whose gain is calibrated so that the mean SNR of a
/// 1 m aperture equals `mean_snr_db_at_ref`.
pub fn make_config(
    aperture_w: f64,
    carrier_freq: f64,
    mean_snr_db_at_ref: f64,
    n_modes: usize,
    n_rays: usize,
    seed: u64,
) -> Result<SystemConfig> {
    if !(aperture_w > 0.0) || !aperture_w.is_finite() {
        return Err(Error::Config(format!(
            "aperture length must be positive, got {aperture_w}"
        )));
    }
    if !(carrier_freq > 0.0) || !carrier_freq.is_finite() {
        return Err(Error::Config(format!(
            "carrier frequency must be positive, got {carrier_freq}"
        )));
    }
    if !mean_snr_db_at_ref.is_finite() {
        return Err(Error::Config(format!(
            "reference mean SNR must be finite, got {mean_snr_db_at_ref}"
        )));
    }
    if n_modes == 0 {
        return Err(Error::Config("number of modes must be at least 1".into()));
    }
    if n_rays == 0 {
        return Err(Error::Config("number of rays must be at least 1".into()));
    }
    let wavelength = SPEED_OF_LIGHT / carrier_freq;
    Ok(SystemConfig {
        aperture_w,
        carrier_freq,
        wavelength,
        wavenumber: 2.0 * PI / wavelength,
        beta: 10f64.powf(mean_snr_db_at_ref / 10.0) / REFERENCE_APERTURE_M,
        n_modes,
        n_rays,
        seed,
    })
}

impl SystemConfig {
    /// Same calibration, different aperture.
    pub fn with_aperture(&self, aperture_w: f64) -> Result<Self> {
        let mut cfg = make_config(aperture_w, self.carrier_freq, 0.0, self.n_modes, self.n_rays, self.seed)?;
        cfg.beta = self.beta;
        Ok(cfg)
    }

    pub fn mean_snr(&self) -> f64 {
        self.beta * self.aperture_w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Sinc,
    RayBased,
}

/// Spatial covariance `C(x₁, x₂)` of the channel along the aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationKernel {
    kind: KernelKind,
    config: SystemConfig,
    ray_angles: Vec<f64>,
    ray_gains: Vec<f64>,
}

impl CorrelationKernel {
    /// `β · sinc(c(x₁ − x₂))`, isotropic 3D scattering.
    pub fn sinc(config: SystemConfig) -> Self {
        Self {
            kind: KernelKind::Sinc,
            config,
            ray_angles: Vec::new(),
            ray_gains: Vec::new(),
        }
    }

    /// Ray-based channel with `R = config.n_rays` equal-power rays on the
    /// midpoint grid `θ_r = 2π(r − ½)/R`. Converges to Jakes as `R → ∞`.
    pub fn jakes(config: SystemConfig) -> Self {
        let r = config.n_rays;
        let ray_angles = (1..=r).map(|i| 2.0 * PI * (i as f64 - 0.5) / r as f64).collect();
        let ray_gains = vec![config.beta / r as f64; r];
        Self {
            kind: KernelKind::RayBased,
            config,
            ray_angles,
            ray_gains,
        }
    }

    /// Ray-based channel with explicit angles of arrival and gains.
    pub fn ray_based(config: SystemConfig, ray_angles: Vec<f64>, ray_gains: Vec<f64>) -> Result<Self> {
        if ray_angles.len() != config.n_rays || ray_gains.len() != config.n_rays {
            return Err(Error::Config(format!(
                "expected {} ray angles and gains, got {} and {}",
                config.n_rays,
                ray_angles.len(),
                ray_gains.len()
            )));
        }
        if ray_gains.iter().any(|g| !(*g >= 0.0)) || ray_angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("ray gains must be nonnegative and angles finite".into()));
        }
        let total: f64 = ray_gains.iter().sum();
        if (total - config.beta).abs() > 1e-12 * config.beta {
            return Err(Error::Config(format!(
                "ray gains sum to {total}, expected beta = {}",
                config.beta
            )));
        }
        Ok(Self {
            kind: KernelKind::RayBased,
            config,
            ray_angles,
            ray_gains,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn ray_angles(&self) -> &[f64] {
        &self.ray_angles
    }

    pub fn ray_gains(&self) -> &[f64] {
        &self.ray_gains
    }

    /// `α_r = c · sin(θ_r)`.
    pub fn ray_wavenumbers(&self) -> Vec<f64> {
        let c = self.config.wavenumber;
        self.ray_angles.iter().map(|t| c * t.sin()).collect()
    }

    /// Largest spatial frequency present in the kernel (rad/m).
    pub fn bandwidth(&self) -> f64 {
        match self.kind {
            KernelKind::Sinc => self.config.wavenumber,
            KernelKind::RayBased => self.ray_wavenumbers().iter().fold(0.0f64, |m, a| m.max(a.abs())),
        }
    }

    pub fn label(&self) -> String {
        let cfg = &self.config;
        match self.kind {
            KernelKind::Sinc => format!("sinc(W={}, f={}, beta={})", cfg.aperture_w, cfg.carrier_freq, cfg.beta),
            KernelKind::RayBased => format!(
                "ray(W={}, f={}, beta={}, R={})",
                cfg.aperture_w, cfg.carrier_freq, cfg.beta, cfg.n_rays
            ),
        }
    }

    /// `C(x₁, x₂)` for either kernel.
    pub fn eval(&self, x1: f64, x2: f64) -> Complex64 {
        match self.kind {
            KernelKind::Sinc => Complex64::new(sinc_corr(x1, x2, &self.config), 0.0),
            KernelKind::RayBased => self.ray_sum(x1 - x2),
        }
    }

    fn ray_sum(&self, lag: f64) -> Complex64 {
        let c = self.config.wavenumber;
        self.ray_angles
            .iter()
            .zip(&self.ray_gains)
            .map(|(t, g)| Complex64::from_polar(*g, c * t.sin() * lag))
            .sum()
    }

    /// `Vᵀ C V` by tensor quadrature: `B_nm = Σ_ij V_in C(x_i, x_j) V_jm`,
    /// where `V` already includes the quadrature weights.
    pub(crate) fn weighted_gram(&self, xs: &[f64], v: &DMatrix<f64>) -> DMatrix<Complex64> {
        let q = xs.len();
        let n = v.ncols();
        match self.kind {
            KernelKind::Sinc => {
                let mut k = DMatrix::<f64>::zeros(q, q);
                for j in 0..q {
                    k[(j, j)] = self.config.beta;
                    for i in (j + 1)..q {
                        let val = sinc_corr(xs[i], xs[j], &self.config);
                        k[(i, j)] = val;
                        k[(j, i)] = val;
                    }
                }
                let kv = &k * v;
                (v.transpose() * kv).map(|x| Complex64::new(x, 0.0))
            }
            KernelKind::RayBased => {
                // P_rn = Σ_i V_in e^{jα_r x_i};  B = Pᵀ diag(β) conj(P)
                let alphas = self.ray_wavenumbers();
                let r = alphas.len();
                let mut p = DMatrix::<Complex64>::zeros(r, n);
                for (ri, alpha) in alphas.iter().enumerate() {
                    let phases: Vec<Complex64> = xs.iter().map(|x| Complex64::from_polar(1.0, alpha * x)).collect();
                    for col in 0..n {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for i in 0..q {
                            acc += phases[i] * v[(i, col)];
                        }
                        p[(ri, col)] = acc;
                    }
                }
                let mut b = DMatrix::<Complex64>::zeros(n, n);
                for nn in 0..n {
                    for mm in nn..n {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for ri in 0..r {
                            acc += p[(ri, nn)] * p[(ri, mm)].conj() * self.ray_gains[ri];
                        }
                        b[(nn, mm)] = acc;
                        b[(mm, nn)] = acc.conj();
                    }
                }
                b
            }
        }
    }
}

fn sinc(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        u.sin() / u
    }
}

/// `β · sinc(c(x₁ − x₂))` with `sinc(u) = sin(u)/u`.
pub fn sinc_corr(x1: f64, x2: f64, cfg: &SystemConfig) -> f64 {
    cfg.beta * sinc(cfg.wavenumber * (x1 - x2))
}

/// `Σ_r β_r exp(j α_r (x₁ − x₂))`.
pub fn ray_corr(x1: f64, x2: f64, kernel: &CorrelationKernel) -> Result<Complex64> {
    if kernel.kind != KernelKind::RayBased {
        return Err(Error::Usage("ray_corr needs a ray-based kernel".into()));
    }
    Ok(kernel.ray_sum(x1 - x2))
}

/// Mean and variance of the SNR `γ₁ = ∫₀ᵂ |h(x)|² dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Exact moments: `mean = βW` and `variance = ∬ |C(x₁,x₂)|² dx₁dx₂` by
/// tensor Gauss–Legendre quadrature with panel doubling.
pub fn exact_moments(kernel: &CorrelationKernel) -> Result<Moments> {
    let cfg = kernel.config();
    let w = cfg.aperture_w;
    let gl = GaussLegendre::new(PANEL_ORDER);
    // |C|² has spatial frequencies up to twice the kernel bandwidth.
    let k_max = 2.0 * kernel.bandwidth();
    let start = (k_max * w / (2.0 * PI)).ceil() as usize + 1;
    let alphas = kernel.ray_wavenumbers();
    let converged = converge_by_doubling("exact_moments", start, 1 << 14, 1e-10, 0.0, |panels| {
        let (xs, ws) = gl.composite(0.0, w, panels);
        hilbert_schmidt_sum(kernel, &alphas, &xs, &ws)
    })?;
    Ok(Moments {
        mean: cfg.beta * w,
        variance: converged.value,
    })
}

fn hilbert_schmidt_sum(kernel: &CorrelationKernel, alphas: &[f64], xs: &[f64], ws: &[f64]) -> f64 {
    let q = xs.len();
    let mut total = 0.0;
    match kernel.kind() {
        KernelKind::Sinc => {
            for i in 0..q {
                let mut row = 0.5 * kernel.config().beta.powi(2) * ws[i];
                for j in (i + 1)..q {
                    let c = sinc_corr(xs[i], xs[j], kernel.config());
                    row += ws[j] * c * c;
                }
                total += 2.0 * ws[i] * row;
            }
        }
        KernelKind::RayBased => {
            let phases: Vec<Vec<Complex64>> = xs
                .iter()
                .map(|x| alphas.iter().map(|a| Complex64::from_polar(1.0, a * x)).collect())
                .collect();
            let gains = kernel.ray_gains();
            for i in 0..q {
                let mut row = 0.0;
                for j in i..q {
                    let mut c = Complex64::new(0.0, 0.0);
                    for r in 0..gains.len() {
                        c += phases[i][r] * phases[j][r].conj() * gains[r];
                    }
                    let weight = if i == j { 1.0 } else { 2.0 };
                    row += weight * ws[j] * c.norm_sqr();
                }
                total += ws[i] * row;
            }
        }
    }
    total
}

/// `M×M` Hermitian matrix `C(g_i, g_j)` on a strictly increasing grid in `[0, W]`.
pub fn covariance_matrix(kernel: &CorrelationKernel, grid: &[f64]) -> Result<DMatrix<Complex64>> {
    let w = kernel.config().aperture_w;
    let slack = 1e-12 * w;
    if grid.is_empty() {
        return Err(Error::Usage("covariance grid is empty".into()));
    }
    if grid.iter().any(|g| !(*g >= -slack && *g <= w + slack)) {
        return Err(Error::Usage(format!("covariance grid must lie within [0, {w}]")));
    }
    if grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::Usage("covariance grid must be strictly increasing".into()));
    }
    let m = grid.len();
    let beta = kernel.config().beta;
    let mut out = DMatrix::<Complex64>::zeros(m, m);
    for j in 0..m {
        out[(j, j)] = Complex64::new(beta, 0.0);
        for i in (j + 1)..m {
            let c = kernel.eval(grid[i], grid[j]);
            out[(i, j)] = c;
            out[(j, i)] = c.conj();
        }
    }
    Ok(out)
}
