//! Scalar special functions used by the closed-form eigenvalues and the
//! distribution formulas.
//!
//! `cin_paper` follows the sign convention `Cin(x) = ∫₀ˣ (cos t − 1)/t dt`,
//! which is the negative of the usual Abramowitz–Stegun `Cin`. Every
//! closed-form eigenvalue in [`crate::kleigen`] is written against this
//! convention.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const EPS: f64 = f64::EPSILON;
const FPMIN: f64 = f64::MIN_POSITIVE / EPS;
const MAX_ITER: usize = 100_000;

/// Power series are used up to this magnitude, the complex continued
/// fraction for `E₁(ix)` beyond it.
const SICI_SERIES_LIMIT: f64 = 4.0;

/// Trapezoid evaluation of the Bessel integral below this magnitude,
/// Hankel asymptotics above.
const J0_ASYMPTOTIC_LIMIT: f64 = 25.0;

/// A function value together with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecFunResult {
    pub value: f64,
    pub est_abs_error: f64,
}

fn require_finite(func: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(func, format!("non-finite argument {x}")))
    }
}

/// Sine integral `Si(x) = ∫₀ˣ sin(t)/t dt`.
pub fn si(x: f64) -> Result<f64> {
    si_with_error(x).map(|r| r.value)
}

pub fn si_with_error(x: f64) -> Result<SpecFunResult> {
    require_finite("si", x)?;
    let t = x.abs();
    let r = if t <= SICI_SERIES_LIMIT {
        si_series(t)
    } else {
        let (_, s, err) = cisi_continued_fraction(t)?;
        SpecFunResult {
            value: s,
            est_abs_error: err,
        }
    };
    Ok(SpecFunResult {
        value: r.value.copysign(x),
        est_abs_error: r.est_abs_error,
    })
}

/// `∫₀ˣ (cos t − 1)/t dt`. Even in `x` and never positive.
pub fn cin_paper(x: f64) -> Result<f64> {
    cin_paper_with_error(x).map(|r| r.value)
}

pub fn cin_paper_with_error(x: f64) -> Result<SpecFunResult> {
    require_finite("cin_paper", x)?;
    let t = x.abs();
    if t <= SICI_SERIES_LIMIT {
        return Ok(cin_series(t));
    }
    let (ci, _, err) = cisi_continued_fraction(t)?;
    // Ci(t) = γ + ln t + ∫₀ᵗ (cos u − 1)/u du
    let value = ci - EULER_GAMMA - t.ln();
    Ok(SpecFunResult {
        value,
        est_abs_error: err + 4.0 * EPS * (t.ln().abs() + 1.0),
    })
}

fn si_series(t: f64) -> SpecFunResult {
    let t2 = t * t;
    let mut term = t; // (-1)^k t^(2k+1) / (2k+1)!
    let mut sum = 0.0;
    let mut max_mag: f64 = 0.0;
    let mut k = 0usize;
    loop {
        let contrib = term / (2 * k + 1) as f64;
        sum += contrib;
        max_mag = max_mag.max(contrib.abs());
        if contrib.abs() <= EPS * sum.abs() * 0.25 || contrib == 0.0 {
            return SpecFunResult {
                value: sum,
                est_abs_error: contrib.abs() + 4.0 * EPS * max_mag,
            };
        }
        term *= -t2 / ((2 * k + 2) as f64 * (2 * k + 3) as f64);
        k += 1;
    }
}

fn cin_series(t: f64) -> SpecFunResult {
    if t == 0.0 {
        return SpecFunResult {
            value: 0.0,
            est_abs_error: 0.0,
        };
    }
    let t2 = t * t;
    let mut term = -t2 / 2.0; // (-1)^k t^(2k) / (2k)!
    let mut sum = 0.0;
    let mut max_mag: f64 = 0.0;
    let mut k = 1usize;
    loop {
        let contrib = term / (2 * k) as f64;
        sum += contrib;
        max_mag = max_mag.max(contrib.abs());
        if contrib.abs() <= EPS * sum.abs() * 0.25 {
            return SpecFunResult {
                value: sum,
                est_abs_error: contrib.abs() + 4.0 * EPS * max_mag,
            };
        }
        term *= -t2 / ((2 * k + 1) as f64 * (2 * k + 2) as f64);
        k += 1;
    }
}

/// `(Ci(t), Si(t), err)` for `t > 0` from the continued fraction of
/// `E₁(it)` (modified Lentz).
fn cisi_continued_fraction(t: f64) -> Result<(f64, f64, f64)> {
    let mut b = Complex64::new(1.0, t);
    let mut c = Complex64::new(1.0 / FPMIN, 0.0);
    let mut d = b.inv();
    let mut h = d;
    let mut converged = false;
    for i in 2..MAX_ITER {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numeric(
            "cisi",
            format!("continued fraction did not converge at t = {t}"),
        ));
    }
    h *= Complex64::new(t.cos(), -t.sin());
    let ci = -h.re;
    let si = FRAC_PI_2 + h.im;
    Ok((ci, si, 8.0 * EPS * (1.0 + h.norm())))
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> Result<f64> {
    bessel_j0_with_error(x).map(|r| r.value)
}

pub fn bessel_j0_with_error(x: f64) -> Result<SpecFunResult> {
    require_finite("bessel_j0", x)?;
    let t = x.abs();
    if t <= J0_ASYMPTOTIC_LIMIT {
        Ok(j0_trapezoid(t))
    } else {
        Ok(j0_hankel(t))
    }
}

/// `J₀(x) = (1/π)∫₀^π cos(x sin θ) dθ` by the midpoint rule. The integrand
/// is analytic and π-periodic, so the aliasing error is `2|J_{2N}(x)|`.
fn j0_trapezoid(t: f64) -> SpecFunResult {
    let n = (0.6 * t).ceil() as usize + 24;
    let h = PI / n as f64;
    let mut sum = 0.0;
    for k in 0..n {
        let theta = (k as f64 + 0.5) * h;
        sum += (t * theta.sin()).cos();
    }
    let value = sum / n as f64;
    // |J_m(x)| ≤ (x/2)^m / m!
    let m = 2 * n;
    let log_bound = m as f64 * (0.5 * t).max(f64::MIN_POSITIVE).ln() - ln_gamma_unchecked(m as f64 + 1.0);
    SpecFunResult {
        value,
        est_abs_error: 2.0 * log_bound.exp() + 2.0 * EPS * (n as f64).sqrt(),
    }
}

fn j0_hankel(t: f64) -> SpecFunResult {
    // a_k = Π_{j=1..k} (−(2j−1)²) / (k! 8^k)
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a: f64 = 1.0;
    let mut z_pow = 1.0;
    let mut last = f64::INFINITY;
    let mut k = 0usize;
    loop {
        let term = a / z_pow;
        if term.abs() > last || term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        // even k contributes to P with sign (−1)^(k/2), odd k to Q with sign (−1)^((k−1)/2)
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        k += 1;
        let odd = (2 * k - 1) as f64;
        a *= -odd * odd / (8.0 * k as f64);
        z_pow *= t;
    }
    let chi = t - FRAC_PI_4;
    let scale = (2.0 / (PI * t)).sqrt();
    SpecFunResult {
        value: scale * (p * chi.cos() - q * chi.sin()),
        est_abs_error: scale * (last.min(1.0) + 4.0 * EPS * t),
    }
}

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, relative error ~1e−15).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "ln_gamma",
            format!("argument {x} must be positive and finite"),
        ));
    }
    Ok(ln_gamma_unchecked(x))
}

// published Lanczos coefficients, kept as printed
#[allow(clippy::excessive_precision)]
fn ln_gamma_unchecked(x: f64) -> f64 {
    const COF: [f64; 14] = [
        57.156_235_665_862_923_5,
        -59.597_960_355_475_491_2,
        14.136_097_974_741_747_1,
        -0.491_913_816_097_620_199,
        0.339_946_499_848_118_887e-4,
        0.465_236_289_270_485_756e-4,
        -0.983_744_753_048_795_646e-4,
        0.158_088_703_224_912_494e-3,
        -0.210_264_441_724_104_883e-3,
        0.217_439_618_115_212_643e-3,
        -0.164_318_106_536_763_890e-3,
        0.844_182_239_838_527_433e-4,
        -0.261_908_384_015_814_087e-4,
        0.368_991_826_595_316_234e-5,
    ];
    let mut y = x;
    let tmp = x + 5.242_187_5;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = 0.999_999_999_999_997_092;
    for c in COF {
        y += 1.0;
        ser += c / y;
    }
    tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// Regularized lower incomplete gamma function `P(r, x) = γ(r, x)/Γ(r)`.
pub fn reg_lower_inc_gamma(r: f64, x: f64) -> Result<f64> {
    Ok(ln_reg_lower_inc_gamma(r, x)?.exp())
}

/// `ln P(r, x)`; returns `-inf` at `x = 0`.
///
/// Series for `x < r + 1`, continued fraction for the complement otherwise.
/// Both are assembled in log space so large shapes do not overflow.
pub fn ln_reg_lower_inc_gamma(r: f64, x: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(
            "reg_lower_inc_gamma",
            format!("shape {r} must be positive"),
        ));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(
            "reg_lower_inc_gamma",
            format!("argument {x} must be nonnegative"),
        ));
    }
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    let log_prefactor = -x + r * x.ln() - ln_gamma_unchecked(r);
    if x < r + 1.0 {
        let mut ap = r;
        let mut del = 1.0 / r;
        let mut sum = del;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                return Ok(sum.ln() + log_prefactor);
            }
        }
        Err(Error::numeric(
            "reg_lower_inc_gamma",
            format!("series did not converge for r = {r}, x = {x}"),
        ))
    } else {
        let mut b = x + 1.0 - r;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - r);
            b += 2.0;
            d = an * d + b;
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            c = b + an / c;
            if c.abs() < FPMIN {
                c = FPMIN;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                let q = (h.ln() + log_prefactor).exp();
                return Ok((-q).ln_1p());
            }
        }
        Err(Error::numeric(
            "reg_lower_inc_gamma",
            format!("continued fraction did not converge for r = {r}, x = {x}"),
        ))
    }
}

/// `−2 sin²(x/2)`, i.e. `cos(x) − 1` without cancellation near zero.
pub(crate) fn cos_m1(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    -2.0 * s * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_arguments() {
        assert_eq!(si(0.0).unwrap(), 0.0);
        assert_eq!(cin_paper(0.0).unwrap(), 0.0);
        assert!((bessel_j0(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(reg_lower_inc_gamma(2.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_inputs_are_domain_errors() {
        for f in [si, cin_paper, bessel_j0] {
            assert!(matches!(f(f64::NAN), Err(Error::Domain { .. })));
            assert!(matches!(f(f64::INFINITY), Err(Error::Domain { .. })));
        }
        assert!(reg_lower_inc_gamma(0.0, 1.0).is_err());
        assert!(reg_lower_inc_gamma(-1.0, 1.0).is_err());
        assert!(reg_lower_inc_gamma(1.0, -0.1).is_err());
    }

    #[test]
    fn si_known_values() {
        // Si(π), the Wilbraham–Gibbs constant
        assert!((si(PI).unwrap() - 1.851_937_051_982_466).abs() < 1e-13);
        assert!((si(200.0).unwrap() - FRAC_PI_2).abs() < 0.01);
        assert_eq!(si(-3.0).unwrap(), -si(3.0).unwrap());
    }

    #[test]
    fn cin_known_values() {
        // −Cin_AS(π) with Cin_AS(π) = γ + ln π − Ci(π)
        assert!((cin_paper(PI).unwrap() + 1.648_277_638_704_507_5).abs() < 1e-13);
        assert_eq!(cin_paper(-PI).unwrap(), cin_paper(PI).unwrap());
    }

    #[test]
    fn series_and_continued_fraction_agree_at_the_switch() {
        let t = SICI_SERIES_LIMIT;
        let (ci, s, _) = cisi_continued_fraction(t).unwrap();
        assert!((s - si_series(t).value).abs() < 1e-14);
        assert!((ci - EULER_GAMMA - t.ln() - cin_series(t).value).abs() < 1e-14);
    }

    #[test]
    fn j0_near_first_zero_and_switch() {
        assert!(bessel_j0(2.404_825_557_695_773).unwrap().abs() < 1e-14);
        assert!(bessel_j0(2.404826).unwrap().abs() < 1e-5);
        let below = j0_trapezoid(J0_ASYMPTOTIC_LIMIT).value;
        let above = j0_hankel(J0_ASYMPTOTIC_LIMIT).value;
        assert!((below - above).abs() < 1e-14, "{below} vs {above}");
    }

    #[test]
    fn incomplete_gamma_exponential_identity() {
        for x in [1e-8, 0.1, 1.0, 2.0, 5.0, 30.0] {
            let p = reg_lower_inc_gamma(1.0, x).unwrap();
            let expected = -(-x).exp_m1();
            assert!((p - expected).abs() <= 1e-12 * expected, "x={x}: {p} vs {expected}");
        }
    }

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            fact *= n as f64;
            let lg = ln_gamma(n as f64 + 1.0).unwrap();
            assert!((lg - fact.ln()).abs() < 1e-13 * fact.ln().max(1.0));
        }
        assert!((ln_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn cos_m1_is_accurate_near_zero() {
        assert!((cos_m1(2e-8) + 2e-16).abs() < 1e-30);
        assert!((cos_m1(1.0) - (1.0f64.cos() - 1.0)).abs() < 1e-16);
    }
}
