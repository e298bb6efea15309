//! Reference implementations used as test oracles. They share no code with
//! the library.
#![allow(dead_code)]

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15): bisect the interval with the
/// largest error estimate until the total estimate is below `tol` or the
/// subdivision budget is spent.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    let mut parts: Vec<(f64, f64, f64, f64)> = (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (v, e) = gk15(&mut f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    for _ in 0..4000 {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= tol {
            break;
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    parts.iter().map(|p| p.2).sum()
}

/// `∬_{[0,W]²} f(x, y)` by nested adaptive quadrature.
pub fn adaptive_2d<F: Fn(f64, f64) -> f64>(f: F, w: f64, tol: f64) -> f64 {
    adaptive(|x| adaptive(|y| f(x, y), 0.0, w, tol), 0.0, w, tol)
}

/// `J₀` by its power series (accurate for moderate arguments).
pub fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// `J₀(x) = (1/π)∫₀^π cos(x sin t) dt` by adaptive quadrature.
pub fn j0_integral(x: f64) -> f64 {
    adaptive(|t| (x * t.sin()).cos(), 0.0, PI, 1e-14) / PI
}

/// `Si(x)` by adaptive quadrature of `sin t / t`.
pub fn si_integral(x: f64) -> f64 {
    adaptive(|t| if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0, x, 1e-14)
}

/// `∫₀ˣ (cos t − 1)/t dt` by adaptive quadrature.
pub fn cin_integral(x: f64) -> f64 {
    adaptive(
        |t| {
            if t == 0.0 {
                0.0
            } else {
                -2.0 * (0.5 * t).sin().powi(2) / t
            }
        },
        0.0,
        x,
        1e-14,
    )
}

/// Constant-kernel ray configuration: one ray at broadside.
pub fn constant_kernel(w: f64, beta_db: f64) -> capa_core::CorrelationKernel {
    let mut cfg = capa_core::make_config(w, 800e6, beta_db, 20, 1, 7).unwrap();
    cfg.n_rays = 1;
    capa_core::CorrelationKernel::ray_based(cfg, vec![0.0], vec![cfg.beta]).unwrap()
}

/// Kolmogorov–Smirnov distance between samples and a CDF.
pub fn ks_against<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in s.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}
