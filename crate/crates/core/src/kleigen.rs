//! Karhunen–Loève eigenvalues of the correlation kernels.
//!
//! The eigenfunctions are approximated by the cosine basis
//! `u_n(x) = √(ε_n/W) cos(a_n x)`, `a_n = nπ/W`, and the eigenvalues by the
//! diagonal `λ_n = ⟨u_n, C u_n⟩`. Closed forms exist for both kernels; the
//! 2D quadrature, Galerkin and Nyström routines are independent checks.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{covariance_matrix, CorrelationKernel, KernelKind, SystemConfig};
use crate::linalg::hermitian_eigenvalues;
use crate::quad::{converge_by_doubling, GaussLegendre, PANEL_ORDER};
use crate::specfun::{cin_paper, cos_m1, si};

/// Branch switch for `a_n = c` and `|α_r| = a_n`, on the scale of `W`.
pub const DEGENERATE_TOL: f64 = 1e-9;

/// Below this `|z|` the phasor integral uses its Taylor series.
pub const PHASOR_SERIES_TOL: f64 = 1e-6;

/// `u_n(x) = √(ε_n/W) cos(nπx/W)` on `[0, W]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineBasis {
    pub w: f64,
    pub n: usize,
}

impl CosineBasis {
    pub fn new(w: f64, n: usize) -> Self {
        Self { w, n }
    }

    pub fn a_n(&self) -> f64 {
        self.n as f64 * PI / self.w
    }

    pub fn eps_n(&self) -> f64 {
        if self.n == 0 {
            1.0
        } else {
            2.0
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eps_n() / self.w).sqrt() * (self.a_n() * x).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    ClosedFormSinc,
    ClosedFormRay,
    Quadrature,
    Galerkin,
    Nystrom,
}

/// Eigenvalues sorted in descending order, nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    values: Vec<f64>,
    provenance: Provenance,
    trace_target: f64,
    kernel_id: String,
}

impl EigenSpectrum {
    /// Sorts, clips round-off negatives and checks the trace bound.
    pub fn new(mut values: Vec<f64>, provenance: Provenance, trace_target: f64, kernel_id: String) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("EigenSpectrum::new", "non-finite eigenvalue"));
        }
        if let Some(v) = values.iter().copied().find(|v| *v < -1e-8 * trace_target) {
            return Err(Error::numeric(
                "EigenSpectrum::new",
                format!("eigenvalue {v:e} is too negative for a covariance operator"),
            ));
        }
        for v in &mut values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = values.iter().sum();
        if total > trace_target * (1.0 + 1e-6) {
            return Err(Error::numeric(
                "EigenSpectrum::new",
                format!("eigenvalues sum to {total:e}, above the trace {trace_target:e}"),
            ));
        }
        Ok(Self {
            values,
            provenance,
            trace_target,
            kernel_id,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn trace_target(&self) -> f64 {
        self.trace_target
    }

    pub fn kernel_id(&self) -> &str {
        &self.kernel_id
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Number of eigenvalues at or above `fraction · λ_max`.
    pub fn count_above(&self, fraction: f64) -> usize {
        let top = self.values.first().copied().unwrap_or(0.0);
        self.values.iter().filter(|v| **v >= fraction * top).count()
    }

    /// Smallest `K` whose leading eigenvalues carry `fraction` of the trace target.
    pub fn modes_for_energy(&self, fraction: f64) -> Option<usize> {
        let mut acc = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            acc += v;
            if acc >= fraction * self.trace_target {
                return Some(k + 1);
            }
        }
        None
    }
}

/// How the sinc closed form is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SincScaling {
    /// The three branches exactly as printed.
    AsPrinted,
    /// With the `ε_n/W` normalisation applied uniformly to all branches.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SincBranch {
    Zero,
    Resonant,
    General,
}

fn sinc_branch(n: usize, cfg: &SystemConfig) -> SincBranch {
    let a = CosineBasis::new(cfg.aperture_w, n).a_n();
    if n == 0 {
        SincBranch::Zero
    } else if ((cfg.wavenumber - a) * cfg.aperture_w).abs() < DEGENERATE_TOL {
        SincBranch::Resonant
    } else {
        SincBranch::General
    }
}

/// Closed-form `λ_n` of the sinc kernel (normalised scaling).
pub fn sinc_eigenvalue_closed(n: usize, cfg: &SystemConfig) -> Result<f64> {
    sinc_eigenvalue_closed_with(n, cfg, SincScaling::Normalized)
}

pub fn sinc_eigenvalue_closed_with(n: usize, cfg: &SystemConfig, scaling: SincScaling) -> Result<f64> {
    let w = cfg.aperture_w;
    let c = cfg.wavenumber;
    let beta = cfg.beta;
    let a = CosineBasis::new(w, n).a_n();
    let c2 = 2.0 * c * w;
    let value = match (sinc_branch(n, cfg), scaling) {
        (SincBranch::Zero, _) => {
            let cw = c * w;
            let i0 = 2.0 * w / c * si(cw)? + 2.0 / (c * c) * cos_m1(cw);
            match scaling {
                SincScaling::AsPrinted => beta * i0,
                SincScaling::Normalized => beta * i0 / w,
            }
        }
        (SincBranch::Resonant, SincScaling::AsPrinted) => {
            let (s, k) = (si(c2)?, cin_paper(c2)?);
            beta * (2.0 * w / c2 * s * (1.0 + c2.sin() / (2.0 * c))
                + 2.0 * w / (c2 * c2) * (c2.cos() * (k + 1.0) + k - 1.0))
        }
        (SincBranch::Resonant, SincScaling::Normalized) => {
            let (s, k) = (si(c2)?, cin_paper(c2)?);
            let denom = 2.0 * c * c * w;
            beta * (s * (c2 + c2.sin()) + (1.0 + c2.cos()) * k + cos_m1(c2)) / denom
        }
        (SincBranch::General, _) => {
            let a2 = 2.0 * a * w;
            let cp = w * (c + a);
            let cm = w * (c - a);
            let bracket = w / a2
                * ((a2.sin() + a2) * (si(cp)? + si(cm)?) + (1.0 + a2.cos()) * (cin_paper(cp)? - cin_paper(cm)?))
                + cos_m1(cp) / (c + a)
                + cos_m1(cm) / (c - a);
            beta * 2.0 / c2 * bracket
        }
    };
    if !value.is_finite() {
        return Err(Error::numeric(
            "sinc_eigenvalue_closed",
            format!("non-finite value at n = {n}"),
        ));
    }
    Ok(value)
}

/// The four partial integrals whose sum, over `4 a_n c`, is `I_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixTerms {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub a_n: f64,
    pub c: f64,
}

impl AppendixTerms {
    /// Contribution of lags `t < 0`.
    pub fn negative_half(&self) -> f64 {
        self.i1 + self.i2
    }

    /// Contribution of lags `t > 0`.
    pub fn positive_half(&self) -> f64 {
        self.i3 + self.i4
    }

    /// `I_n = (I₁ + I₂ + I₃ + I₄) / (4 a_n c)`.
    pub fn integral(&self) -> f64 {
        (self.negative_half() + self.positive_half()) / (4.0 * self.a_n * self.c)
    }

    /// Same integral with the two lag halves assembled in the other order.
    pub fn integral_halves_swapped(&self) -> f64 {
        (self.positive_half() + self.negative_half()) / (4.0 * self.a_n * self.c)
    }
}

pub fn sinc_appendix_terms(n: usize, cfg: &SystemConfig) -> Result<AppendixTerms> {
    if sinc_branch(n, cfg) != SincBranch::General {
        return Err(Error::Usage(format!(
            "the four-term assembly needs a_n outside {{0, c}}; n = {n} is degenerate"
        )));
    }
    let w = cfg.aperture_w;
    let c = cfg.wavenumber;
    let a = CosineBasis::new(w, n).a_n();
    let a2 = 2.0 * a * w;
    let (cp, cm) = (w * (c + a), w * (c - a));
    let (c3p, c3m) = (w * (c + 3.0 * a), w * (c - 3.0 * a));
    let (sip, sim, si3p, si3m) = (si(cp)?, si(cm)?, si(c3p)?, si(c3m)?);
    let (kp, km, k3p, k3m) = (cin_paper(cp)?, cin_paper(cm)?, cin_paper(c3p)?, cin_paper(c3m)?);
    let (sa, ca) = a2.sin_cos();

    let d = a * (cos_m1(cp) / (c + a) + cos_m1(cm) / (c - a));
    let i1 = d + 0.25 * (k3p - k3m + kp - km) + 0.5 * (sa + a2) * (sip + sim);
    let i2 = 0.5 * ca * (kp - km) + 0.25 * (kp - km - k3p + k3m);
    let i3 = d + 0.5 * a2 * (sip + sim) - 0.25 * ca * (k3m - k3p + km - kp) + 0.25 * sa * (si3p + si3m + sip + sim);
    let i4 = 0.5 * (kp - km) + 0.25 * ca * (k3m - k3p - km + kp) + 0.25 * sa * (sip + sim - si3p - si3m);
    Ok(AppendixTerms {
        i1,
        i2,
        i3,
        i4,
        a_n: a,
        c,
    })
}

/// `λ_n = β (ε_n/W) I_n` from the four-term assembly.
pub fn sinc_eigenvalue_appendix(n: usize, cfg: &SystemConfig) -> Result<f64> {
    let terms = sinc_appendix_terms(n, cfg)?;
    Ok(cfg.beta * 2.0 / cfg.aperture_w * terms.integral())
}

/// `∫₀ᵂ e^{jkx} dx`.
pub(crate) fn phasor_integral(k: f64, w: f64) -> Complex64 {
    let z = k * w;
    if z.abs() < PHASOR_SERIES_TOL {
        let z2 = z * z;
        Complex64::new(w * (1.0 - z2 / 6.0), w * (z / 2.0 - z * z2 / 24.0))
    } else {
        // (e^{jz} − 1)/(jz)
        Complex64::new(z.sin(), -cos_m1(z)) * (w / z)
    }
}

/// Closed-form `λ_n` of the ray-based kernel.
pub fn ray_eigenvalue_closed(n: usize, kernel: &CorrelationKernel) -> Result<f64> {
    if kernel.kind() != KernelKind::RayBased {
        return Err(Error::Usage("ray_eigenvalue_closed needs a ray-based kernel".into()));
    }
    let w = kernel.config().aperture_w;
    let basis = CosineBasis::new(w, n);
    let a = basis.a_n();
    let mut total = 0.0;
    for (alpha, gain) in kernel.ray_wavenumbers().iter().zip(kernel.ray_gains()) {
        let mag2 = if n == 0 {
            if (alpha * w).abs() < DEGENERATE_TOL {
                4.0 * w * w
            } else {
                4.0 * phasor_integral(*alpha, w).norm_sqr()
            }
        } else if ((alpha.abs() - a) * w).abs() < DEGENERATE_TOL {
            w * w
        } else {
            (phasor_integral(alpha + a, w) + phasor_integral(alpha - a, w)).norm_sqr()
        };
        total += gain * mag2;
    }
    Ok(basis.eps_n() / (4.0 * w) * total)
}

fn closed_form(n: usize, kernel: &CorrelationKernel) -> Result<f64> {
    match kernel.kind() {
        KernelKind::Sinc => sinc_eigenvalue_closed(n, kernel.config()),
        KernelKind::RayBased => ray_eigenvalue_closed(n, kernel),
    }
}

/// `λ_n = ∬ C(x₁,x₂) u_n(x₁) u_n(x₂) dx₁dx₂` by tensor Gauss–Legendre with
/// panel doubling until successive estimates agree to `1e−10` relative.
pub fn eigenvalue_quadrature(n: usize, kernel: &CorrelationKernel) -> Result<f64> {
    let w = kernel.config().aperture_w;
    let basis = CosineBasis::new(w, n);
    let k_max = basis.a_n() + kernel.bandwidth();
    // two periods of the fastest oscillation per 16-node panel to start
    let start = (k_max * w / (4.0 * PI)).ceil() as usize + 1;
    let gl = GaussLegendre::new(PANEL_ORDER);
    let abs_tol = 1e-14 * kernel.config().beta * w;
    let converged = converge_by_doubling("eigenvalue_quadrature", start, 1 << 12, 1e-10, abs_tol, |panels| {
        let (xs, ws) = gl.composite(0.0, w, panels);
        let v = DMatrix::from_iterator(xs.len(), 1, xs.iter().zip(&ws).map(|(x, wt)| wt * basis.eval(*x)));
        kernel.weighted_gram(&xs, &v)[(0, 0)].re
    })?;
    Ok(converged.value)
}

/// `B_nm = ⟨u_n, C u_m⟩` for `n, m < N`.
pub fn galerkin_matrix(kernel: &CorrelationKernel, n_modes: usize) -> Result<DMatrix<Complex64>> {
    if n_modes == 0 {
        return Err(Error::Usage("Galerkin matrix needs at least one mode".into()));
    }
    let w = kernel.config().aperture_w;
    let k_max = CosineBasis::new(w, n_modes - 1).a_n() + kernel.bandwidth();
    // one period of the fastest oscillation per panel
    let panels = (k_max * w / (2.0 * PI)).ceil() as usize + 1;
    let gl = GaussLegendre::new(PANEL_ORDER);
    let (xs, ws) = gl.composite(0.0, w, panels);
    let mut v = DMatrix::<f64>::zeros(xs.len(), n_modes);
    for m in 0..n_modes {
        let basis = CosineBasis::new(w, m);
        for (i, (x, wt)) in xs.iter().zip(&ws).enumerate() {
            v[(i, m)] = wt * basis.eval(*x);
        }
    }
    Ok(kernel.weighted_gram(&xs, &v))
}

/// Eigenvalues of the full Galerkin matrix.
pub fn galerkin_spectrum(kernel: &CorrelationKernel, n_modes: usize) -> Result<EigenSpectrum> {
    let b = galerkin_matrix(kernel, n_modes)?;
    let values = hermitian_eigenvalues(&b)?;
    let cfg = kernel.config();
    EigenSpectrum::new(values, Provenance::Galerkin, cfg.beta * cfg.aperture_w, kernel.label())
}

/// Eigenvalues of `D^½ K D^½` on a uniform `M`-point grid over `[0, W]`,
/// trapezoid weights `D`.
pub fn nystrom_spectrum(kernel: &CorrelationKernel, m: usize) -> Result<EigenSpectrum> {
    if m < 16 {
        return Err(Error::Usage(format!("Nystrom discretisation needs M >= 16, got {m}")));
    }
    let w = kernel.config().aperture_w;
    let h = w / (m - 1) as f64;
    let grid: Vec<f64> = (0..m).map(|i| if i == m - 1 { w } else { i as f64 * h }).collect();
    let sqrt_w: Vec<f64> = (0..m)
        .map(|i| {
            if i == 0 || i == m - 1 {
                (0.5 * h).sqrt()
            } else {
                h.sqrt()
            }
        })
        .collect();
    let mut k = covariance_matrix(kernel, &grid)?;
    for j in 0..m {
        for i in 0..m {
            k[(i, j)] *= sqrt_w[i] * sqrt_w[j];
        }
    }
    let values = hermitian_eigenvalues(&k)?;
    let cfg = kernel.config();
    EigenSpectrum::new(values, Provenance::Nystrom, cfg.beta * w, kernel.label())
}

/// `2W/λ`, the approximate number of significant eigenvalues.
pub fn dominant_mode_estimate(cfg: &SystemConfig) -> f64 {
    2.0 * cfg.aperture_w / cfg.wavelength
}

/// Closed-form diagonal spectrum `λ_0 … λ_{N−1}`, sorted descending.
pub fn spectrum(kernel: &CorrelationKernel, n_modes: usize) -> Result<EigenSpectrum> {
    if n_modes == 0 {
        return Err(Error::Usage("spectrum needs at least one mode".into()));
    }
    let values = (0..n_modes)
        .into_par_iter()
        .map(|n| closed_form(n, kernel))
        .collect::<Result<Vec<f64>>>()?;
    let provenance = match kernel.kind() {
        KernelKind::Sinc => Provenance::ClosedFormSinc,
        KernelKind::RayBased => Provenance::ClosedFormRay,
    };
    let cfg = kernel.config();
    EigenSpectrum::new(values, provenance, cfg.beta * cfg.aperture_w, kernel.label())
}

/// Diagonal spectrum evaluated by 2D quadrature instead of the closed forms.
pub fn quadrature_spectrum(kernel: &CorrelationKernel, n_modes: usize) -> Result<EigenSpectrum> {
    if n_modes == 0 {
        return Err(Error::Usage("spectrum needs at least one mode".into()));
    }
    let values = (0..n_modes)
        .into_par_iter()
        .map(|n| eigenvalue_quadrature(n, kernel))
        .collect::<Result<Vec<f64>>>()?;
    let cfg = kernel.config();
    EigenSpectrum::new(
        values,
        Provenance::Quadrature,
        cfg.beta * cfg.aperture_w,
        kernel.label(),
    )
}
