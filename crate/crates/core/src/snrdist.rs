//! Analytical SNR distributions.
//!
//! The leading KL eigenvalues give a hypoexponential law (a sum of
//! independent exponentials with distinct means). Everything that is not
//! retained is absorbed into an independent gamma variable fitted by the
//! method of moments, and the two are convolved in closed form.

use crate::error::{Error, Result};
use crate::kernels::{exact_moments, CorrelationKernel, Moments};
use crate::kleigen::{spectrum, EigenSpectrum};
use crate::specfun::{ln_gamma, ln_reg_lower_inc_gamma, reg_lower_inc_gamma};

/// Neumaier-compensated sum of signed terms.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn check_x(func: &'static str, x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(func, format!("argument must be nonnegative, got {x}")));
    }
    Ok(())
}

/// A continuous distribution on `[0, ∞)`.
pub trait SnrDistribution {
    fn pdf(&self, x: f64) -> Result<f64>;
    fn cdf(&self, x: f64) -> Result<f64>;
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;

    fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }
}

/// Which eigenvalues enter the hypoexponential part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionPolicy {
    /// Minimum relative gap `|λ_i − λ_j| / λ_i` between retained values.
    pub min_rel_gap: f64,
    /// Values below `min_rel_value · λ_max` are never retained.
    pub min_rel_value: f64,
    /// Upper bound on `Σ|w_n|`, the amplification of rounding in the
    /// partial-fraction sums.
    pub max_condition: f64,
    /// Optional hard cap on the number of retained values.
    pub max_terms: Option<usize>,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        Self {
            min_rel_gap: 1e-3,
            min_rel_value: 1e-6,
            max_condition: 1e6,
            max_terms: None,
        }
    }
}

/// Partial-fraction weights `w_n = λ_n^{N−1} / Π_{m≠n}(λ_n − λ_m)` as
/// `(ln|w_n|, sign)` pairs. The magnitude is formed as the linear product
/// `Π λ_n/(λ_n − λ_m)`, whose rounding error does not grow with `|ln λ|`.
fn log_weights(values: &[f64]) -> Vec<(f64, f64)> {
    let k = values.len();
    (0..k)
        .map(|n| {
            let mut w = 1.0f64;
            let mut log_shift = 0.0;
            for m in 0..k {
                if m != n {
                    w *= values[n] / (values[n] - values[m]);
                    // rescale to stay clear of overflow for badly conditioned sets
                    if !(1e-100..=1e100).contains(&w.abs()) {
                        log_shift += w.abs().ln();
                        w = w.signum();
                    }
                }
            }
            (w.abs().ln() + log_shift, w.signum())
        })
        .collect()
}

fn condition_number(values: &[f64]) -> f64 {
    log_weights(values).iter().map(|(l, _)| l.exp()).sum()
}

/// Sum of independent exponentials with distinct means `λ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypoexpModel {
    retained: Vec<f64>,
    log_weights: Vec<(f64, f64)>,
}

impl HypoexpModel {
    /// Fails if the values are not positive and distinct enough for the
    /// partial-fraction sums to be accurate to `1e−9`: both `Σ|w_n|·ε` and
    /// the residual of the identity `Σ w_n = 1` are checked.
    pub fn new(mut retained: Vec<f64>) -> Result<Self> {
        if retained.is_empty() {
            return Err(Error::Model(
                "hypoexponential model needs at least one eigenvalue".into(),
            ));
        }
        if retained.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Model("eigenvalues must be positive and finite".into()));
        }
        retained.sort_by(|a, b| b.total_cmp(a));
        if retained.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::Model("eigenvalues must be distinct".into()));
        }
        let model = Self {
            log_weights: log_weights(&retained),
            retained,
        };
        let cond = model.condition();
        if !(cond * f64::EPSILON <= 1e-9) {
            return Err(Error::Model(format!(
                "partial-fraction weights reach {cond:e} in magnitude; eigenvalues are too close together"
            )));
        }
        let residual = model.weight_sum() - 1.0;
        if !(residual.abs() <= 1e-9) {
            return Err(Error::Model(format!(
                "partial-fraction weights sum to 1 {residual:+e}; eigenvalues are too close together"
            )));
        }
        Ok(model)
    }

    pub fn retained(&self) -> &[f64] {
        &self.retained
    }

    /// `ln|Π_{m≠n}(λ_n − λ_m)|` and its sign, per retained value.
    pub fn log_denominators(&self) -> Vec<(f64, f64)> {
        let k = self.retained.len() as f64;
        self.log_weights
            .iter()
            .zip(&self.retained)
            .map(|((lw, s), lam)| ((k - 1.0) * lam.ln() - lw, *s))
            .collect()
    }

    /// The signed weights `w_n`.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|(l, s)| s * l.exp()).collect()
    }

    /// `Σ w_n`, which equals one exactly in exact arithmetic.
    pub fn weight_sum(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for (l, s) in &self.log_weights {
            acc.add(s * l.exp());
        }
        acc.value()
    }

    /// `Σ |w_n|`.
    pub fn condition(&self) -> f64 {
        self.log_weights.iter().map(|(l, _)| l.exp()).sum()
    }
}

impl SnrDistribution for HypoexpModel {
    fn pdf(&self, x: f64) -> Result<f64> {
        check_x("hypoexp_pdf", x)?;
        let mut acc = CompensatedSum::default();
        for ((lw, s), lam) in self.log_weights.iter().zip(&self.retained) {
            acc.add(s * (lw - lam.ln() - x / lam).exp());
        }
        Ok(acc.value().max(0.0))
    }

    fn cdf(&self, x: f64) -> Result<f64> {
        check_x("hypoexp_cdf", x)?;
        // 1 − Σ w e^{−x/λ} = −Σ w (e^{−x/λ} − 1), using Σ w = 1
        let mut acc = CompensatedSum::default();
        for ((lw, s), lam) in self.log_weights.iter().zip(&self.retained) {
            acc.add(-s * lw.exp() * (-x / lam).exp_m1());
        }
        Ok(acc.value().clamp(0.0, 1.0))
    }

    fn mean(&self) -> f64 {
        self.retained.iter().sum()
    }

    fn variance(&self) -> f64 {
        self.retained.iter().map(|v| v * v).sum()
    }
}

/// Gamma variable with shape `r` and rate `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaCorrection {
    pub shape_r: f64,
    pub rate_theta: f64,
}

/// Hypoexponential part plus an independent gamma correction.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaCorrectedModel {
    hypo: HypoexpModel,
    correction: Option<GammaCorrection>,
    exact: Moments,
}

impl GammaCorrectedModel {
    /// Requires `θ > 1/λ_n` for every retained `λ_n`.
    pub fn new(hypo: HypoexpModel, correction: Option<GammaCorrection>, exact: Moments) -> Result<Self> {
        if let Some(g) = correction {
            if !(g.shape_r > 0.0 && g.rate_theta > 0.0 && g.shape_r.is_finite() && g.rate_theta.is_finite()) {
                return Err(Error::Model(format!("invalid gamma correction {g:?}")));
            }
            let lam_min = *hypo.retained.last().expect("nonempty");
            if !(g.rate_theta * lam_min > 1.0) {
                return Err(Error::Model(format!(
                    "gamma rate {} must exceed 1/lambda_min = {}",
                    g.rate_theta,
                    1.0 / lam_min
                )));
            }
        }
        Ok(Self {
            hypo,
            correction,
            exact,
        })
    }

    pub fn hypo(&self) -> &HypoexpModel {
        &self.hypo
    }

    pub fn correction(&self) -> Option<GammaCorrection> {
        self.correction
    }

    pub fn exact_moments(&self) -> Moments {
        self.exact
    }

    /// `ln|w_n| + r ln(θ/(θ − 1/λ_n))` and `θ − 1/λ_n`, per retained value.
    fn shifted_terms(&self, g: GammaCorrection) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.hypo
            .log_weights
            .iter()
            .zip(&self.hypo.retained)
            .map(move |((lw, s), lam)| {
                let shifted = g.rate_theta - 1.0 / lam;
                let log_scale = lw + g.shape_r * (g.rate_theta.ln() - shifted.ln());
                (log_scale, *s, *lam, shifted)
            })
    }
}

impl SnrDistribution for GammaCorrectedModel {
    fn pdf(&self, x: f64) -> Result<f64> {
        check_x("gc_pdf", x)?;
        let Some(g) = self.correction else {
            return self.hypo.pdf(x);
        };
        if x == 0.0 {
            return Ok(0.0);
        }
        let mut acc = CompensatedSum::default();
        for (log_scale, s, lam, shifted) in self.shifted_terms(g) {
            let lp = ln_reg_lower_inc_gamma(g.shape_r, shifted * x)?;
            acc.add(s * (log_scale - lam.ln() - x / lam + lp).exp());
        }
        let v = acc.value();
        if !v.is_finite() {
            return Err(Error::Model(format!("non-finite density at x = {x}")));
        }
        Ok(v.max(0.0))
    }

    fn cdf(&self, x: f64) -> Result<f64> {
        check_x("gc_cdf", x)?;
        let Some(g) = self.correction else {
            return self.hypo.cdf(x);
        };
        if x == 0.0 {
            return Ok(0.0);
        }
        let mut acc = CompensatedSum::default();
        acc.add(reg_lower_inc_gamma(g.shape_r, g.rate_theta * x)?);
        for (log_scale, s, lam, shifted) in self.shifted_terms(g) {
            let lp = ln_reg_lower_inc_gamma(g.shape_r, shifted * x)?;
            acc.add(-s * (log_scale - x / lam + lp).exp());
        }
        let v = acc.value();
        if !v.is_finite() {
            return Err(Error::Model(format!("non-finite CDF at x = {x}")));
        }
        Ok(v.clamp(0.0, 1.0))
    }

    fn mean(&self) -> f64 {
        self.hypo.mean() + self.correction.map_or(0.0, |g| g.shape_r / g.rate_theta)
    }

    fn variance(&self) -> f64 {
        self.hypo.variance()
            + self
                .correction
                .map_or(0.0, |g| g.shape_r / (g.rate_theta * g.rate_theta))
    }
}

/// Method-of-moments gamma for a residual with the given mean and variance.
pub fn gamma_from_residual(res_mean: f64, res_var: f64) -> Result<GammaCorrection> {
    if !(res_mean > 0.0 && res_var > 0.0) {
        return Err(Error::Fit(format!(
            "residual mean {res_mean:e} and variance {res_var:e} must both be positive; \
             retain fewer eigenvalues or supply consistent moments"
        )));
    }
    Ok(GammaCorrection {
        shape_r: res_mean * res_mean / res_var,
        rate_theta: res_mean / res_var,
    })
}

/// Greedy descending selection under `policy`.
pub fn select_eigenvalues(values: &[f64], policy: &SelectionPolicy) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite() && *v > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let Some(&top) = sorted.first() else {
        return Vec::new();
    };
    let mut kept: Vec<f64> = Vec::new();
    for v in sorted {
        if policy.max_terms.is_some_and(|m| kept.len() >= m) || v < policy.min_rel_value * top {
            break;
        }
        // descending order: the nearest retained value is the last one
        if let Some(&last) = kept.last() {
            if (last - v) / last < policy.min_rel_gap {
                continue;
            }
        }
        kept.push(v);
        if condition_number(&kept) > policy.max_condition {
            kept.pop();
        }
    }
    kept
}

/// Fits the gamma correction to the moments not carried by the retained
/// eigenvalues. While `θ ≤ 1/λ_min` the smallest retained value is moved
/// into the correction and the fit repeated.
pub fn fit_gamma_correction(
    spec: &EigenSpectrum,
    moments: Moments,
    policy: &SelectionPolicy,
) -> Result<GammaCorrectedModel> {
    fit_gamma_correction_values(spec.values(), moments, policy)
}

pub fn fit_gamma_correction_values(
    values: &[f64],
    moments: Moments,
    policy: &SelectionPolicy,
) -> Result<GammaCorrectedModel> {
    if !(moments.mean > 0.0 && moments.variance > 0.0) {
        return Err(Error::Fit(format!("moments must be positive, got {moments:?}")));
    }
    let mut retained = select_eigenvalues(values, policy);
    loop {
        if retained.is_empty() {
            return Err(Error::Fit(
                "no eigenvalue can be retained with a valid gamma correction".into(),
            ));
        }
        let hypo = HypoexpModel::new(retained.clone())?;
        let res_mean = moments.mean - hypo.mean();
        let res_var = moments.variance - hypo.variance();
        if res_mean < 1e-9 * moments.mean {
            if res_mean < -1e-6 * moments.mean {
                return Err(Error::Fit(format!(
                    "retained eigenvalues exceed the mean by {:e}; retain fewer eigenvalues",
                    -res_mean
                )));
            }
            return GammaCorrectedModel::new(hypo, None, moments);
        }
        // residual variance lost in the rounding of the total
        if res_var <= 64.0 * f64::EPSILON * moments.variance && res_mean <= 1e-6 * moments.mean {
            return GammaCorrectedModel::new(hypo, None, moments);
        }
        let g = gamma_from_residual(res_mean, res_var)?;
        let (theta, r) = (g.rate_theta, g.shape_r);
        let lam_min = *retained.last().expect("nonempty");
        if theta * lam_min <= 1.0 + 1e-9 {
            retained.pop();
            continue;
        }
        return GammaCorrectedModel::new(
            hypo,
            Some(GammaCorrection {
                shape_r: r,
                rate_theta: theta,
            }),
            moments,
        );
    }
}

/// Moment-matched gamma approximation of the whole SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBaseline {
    pub shape_k: f64,
    pub rate: f64,
}

impl GammaBaseline {
    pub fn from_moments(m: Moments) -> Result<Self> {
        if !(m.mean > 0.0 && m.variance > 0.0) {
            return Err(Error::Fit(format!("moments must be positive, got {m:?}")));
        }
        Ok(Self {
            shape_k: m.mean * m.mean / m.variance,
            rate: m.mean / m.variance,
        })
    }
}

impl SnrDistribution for GammaBaseline {
    fn pdf(&self, x: f64) -> Result<f64> {
        check_x("gamma_baseline_pdf", x)?;
        if x == 0.0 {
            return Ok(if self.shape_k < 1.0 {
                f64::INFINITY
            } else if self.shape_k == 1.0 {
                self.rate
            } else {
                0.0
            });
        }
        let k = self.shape_k;
        Ok((k * self.rate.ln() + (k - 1.0) * x.ln() - self.rate * x - ln_gamma(k)?).exp())
    }

    fn cdf(&self, x: f64) -> Result<f64> {
        check_x("gamma_baseline_cdf", x)?;
        reg_lower_inc_gamma(self.shape_k, self.rate * x)
    }

    fn mean(&self) -> f64 {
        self.shape_k / self.rate
    }

    fn variance(&self) -> f64 {
        self.shape_k / (self.rate * self.rate)
    }
}

pub fn hypoexp_pdf(model: &HypoexpModel, x: f64) -> Result<f64> {
    model.pdf(x)
}

pub fn hypoexp_cdf(model: &HypoexpModel, x: f64) -> Result<f64> {
    model.cdf(x)
}

pub fn gc_pdf(model: &GammaCorrectedModel, x: f64) -> Result<f64> {
    model.pdf(x)
}

pub fn gc_cdf(model: &GammaCorrectedModel, x: f64) -> Result<f64> {
    model.cdf(x)
}

pub fn gamma_baseline_cdf(b: &GammaBaseline, x: f64) -> Result<f64> {
    b.cdf(x)
}

/// `P(γ ≤ γ_th)`.
pub fn outage<D: SnrDistribution + ?Sized>(model: &D, gamma_th: f64) -> Result<f64> {
    model.cdf(gamma_th)
}

/// Inverse CDF by bisection on `[0, mean + 40·std]`.
pub fn quantile<D: SnrDistribution + ?Sized>(model: &D, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(
            "quantile",
            format!("probability must lie in (0, 1), got {p}"),
        ));
    }
    let mut lo = 0.0;
    let mut hi = model.mean() + 40.0 * model.std_dev();
    if model.cdf(hi)? < p {
        return Err(Error::numeric(
            "quantile",
            format!("upper bracket {hi:e} does not reach p = {p}"),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = model.cdf(mid)?;
        if (f - p).abs() < 1e-8 {
            return Ok(mid);
        }
        if f < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Err(Error::numeric(
        "quantile",
        format!("bisection stalled near {lo:e} for p = {p}"),
    ))
}

/// `√Var / mean`.
pub fn coefficient_of_variation(moments: Moments) -> Result<f64> {
    if !(moments.mean > 0.0) {
        return Err(Error::domain(
            "coefficient_of_variation",
            format!("mean must be positive, got {}", moments.mean),
        ));
    }
    Ok(moments.variance.sqrt() / moments.mean)
}

/// Where the variance fed to the gamma fit comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentSource {
    /// `mean = βW`, `variance = Σλ²` over the truncated diagonal spectrum.
    #[default]
    Spectrum,
    /// `mean = βW`, `variance = ∬|C|²` by quadrature.
    HilbertSchmidt,
}

pub fn model_moments(kernel: &CorrelationKernel, spec: &EigenSpectrum, source: MomentSource) -> Result<Moments> {
    let cfg = kernel.config();
    match source {
        MomentSource::Spectrum => Ok(Moments {
            mean: cfg.beta * cfg.aperture_w,
            variance: spec.sum_of_squares(),
        }),
        MomentSource::HilbertSchmidt => exact_moments(kernel),
    }
}

/// Spectrum, moments, gamma-corrected model and gamma baseline for a kernel.
#[derive(Debug, Clone)]
pub struct AnalyticModel {
    pub spectrum: EigenSpectrum,
    pub moments: Moments,
    pub model: GammaCorrectedModel,
    pub baseline: GammaBaseline,
}

pub fn analytic_model(
    kernel: &CorrelationKernel,
    n_modes: usize,
    source: MomentSource,
    policy: &SelectionPolicy,
) -> Result<AnalyticModel> {
    let spectrum = spectrum(kernel, n_modes)?;
    let moments = model_moments(kernel, &spectrum, source)?;
    let model = fit_gamma_correction(&spectrum, moments, policy)?;
    let baseline = GammaBaseline::from_moments(moments)?;
    Ok(AnalyticModel {
        spectrum,
        moments,
        model,
        baseline,
    })
}
