mod common;

use capa_core::kleigen::spectrum;
use capa_core::snrdist::{
    analytic_model, coefficient_of_variation, fit_gamma_correction, fit_gamma_correction_values, gamma_baseline_cdf,
    gc_cdf, gc_pdf, hypoexp_cdf, hypoexp_pdf, model_moments, outage, quantile, select_eigenvalues, GammaBaseline,
    GammaCorrectedModel, GammaCorrection, HypoexpModel, MomentSource, SelectionPolicy, SnrDistribution,
};
use capa_core::{kernels::exact_moments, make_config, CorrelationKernel, Error, Moments};
use common::adaptive;

fn sinc_model(w: f64, f: f64) -> capa_core::snrdist::AnalyticModel {
    let cfg = make_config(w, f, 0.0, 100, 200, 1).unwrap();
    analytic_model(
        &CorrelationKernel::sinc(cfg),
        100,
        MomentSource::Spectrum,
        &SelectionPolicy::default(),
    )
    .unwrap()
}

fn jakes_model(w: f64, f: f64) -> capa_core::snrdist::AnalyticModel {
    let cfg = make_config(w, f, 0.0, 100, 200, 1).unwrap();
    analytic_model(
        &CorrelationKernel::jakes(cfg),
        100,
        MomentSource::Spectrum,
        &SelectionPolicy::default(),
    )
    .unwrap()
}

fn exp_pdf(lam: f64, x: f64) -> f64 {
    (-x / lam).exp() / lam
}

#[test]
fn single_exponential() {
    let m = HypoexpModel::new(vec![1.0]).unwrap();
    for x in [0.0, 0.3, 2.0, 7.5] {
        assert!((hypoexp_pdf(&m, x).unwrap() - (-x).exp()).abs() < 1e-15);
        assert!((hypoexp_cdf(&m, x).unwrap() - (1.0 - (-x).exp())).abs() < 1e-15);
    }
}

#[test]
fn two_term_values() {
    let m = HypoexpModel::new(vec![2.0, 1.0]).unwrap();
    assert!((hypoexp_pdf(&m, 1.0).unwrap() - 0.238_651_218_541_191_1).abs() < 1e-14);
    assert!((hypoexp_cdf(&m, 1.0).unwrap() - 0.154_818_121_746_175_5).abs() < 1e-14);
}

#[test]
fn three_term_pdf_matches_iterated_convolution() {
    let m = HypoexpModel::new(vec![3.0, 2.0, 1.0]).unwrap();
    let f12 = |x: f64| adaptive(|y| exp_pdf(3.0, y) * exp_pdf(2.0, x - y), 0.0, x, 1e-14);
    for x in [0.5, 2.0, 6.0] {
        let oracle = adaptive(|y| f12(y) * exp_pdf(1.0, x - y), 0.0, x, 1e-13);
        let v = m.pdf(x).unwrap();
        assert!((v - oracle).abs() < 1e-8, "x={x}: {v} vs {oracle}");
    }
}

#[test]
fn hypoexp_limits_and_domain() {
    let m = HypoexpModel::new(vec![0.7, 0.4, 0.1]).unwrap();
    assert_eq!(m.cdf(0.0).unwrap(), 0.0);
    let far = m.mean() + 40.0 * m.std_dev();
    assert!(m.cdf(far).unwrap() >= 1.0 - 1e-6);
    assert!(matches!(m.pdf(-1.0), Err(Error::Domain { .. })));
    assert!(matches!(m.cdf(f64::NAN), Err(Error::Domain { .. })));
}

#[test]
fn partial_fraction_identity_holds_for_fitted_spectra() {
    for (w, f) in [(0.25, 400e6), (0.5, 400e6), (1.0, 800e6), (2.0, 800e6), (3.0, 1600e6)] {
        for a in [sinc_model(w, f), jakes_model(w, f)] {
            let h = a.model.hypo();
            assert!((h.weight_sum() - 1.0).abs() <= 1e-9, "W={w} f={f}");
            assert_eq!(h.cdf(0.0).unwrap(), 0.0);
            assert_eq!(a.model.cdf(0.0).unwrap(), 0.0);
            let r = h.retained();
            for i in 0..r.len() {
                for j in (i + 1)..r.len() {
                    assert!((r[i] - r[j]).abs() / r[i] >= 1e-3);
                }
            }
            if let Some(g) = a.model.correction() {
                assert!(r.iter().all(|l| g.rate_theta > 1.0 / l));
            }
        }
    }
}

#[test]
fn near_equal_eigenvalues_fail_loudly() {
    let r = HypoexpModel::new(vec![1.0, 1.0 - 1e-13, 0.5]);
    assert!(matches!(r, Err(Error::Model(_))), "{r:?}");
    assert!(matches!(HypoexpModel::new(vec![0.5, 0.5]), Err(Error::Model(_))));
    assert!(matches!(HypoexpModel::new(vec![]), Err(Error::Model(_))));
}

#[test]
fn selection_skips_near_duplicates() {
    let vals = [1.0, 0.9999, 0.5, 0.4999, 0.25];
    let kept = select_eigenvalues(&vals, &SelectionPolicy::default());
    assert_eq!(kept, vec![1.0, 0.5, 0.25]);
}

#[test]
fn fit_drops_correction_for_full_rank_three_spectrum() {
    let values = [0.6, 0.3, 0.1];
    let moments = Moments {
        mean: 1.0,
        variance: 0.36 + 0.09 + 0.01,
    };
    let m = fit_gamma_correction_values(&values, moments, &SelectionPolicy::default()).unwrap();
    assert!(m.correction().is_none());
    for x in [0.1, 0.5, 1.0, 3.0] {
        assert_eq!(m.pdf(x).unwrap(), m.hypo().pdf(x).unwrap());
        assert_eq!(m.cdf(x).unwrap(), m.hypo().cdf(x).unwrap());
    }
}

#[test]
fn fit_rejects_inconsistent_moments() {
    // residual mean positive but residual variance negative
    let values = [0.6, 0.3];
    let moments = Moments {
        mean: 1.0,
        variance: 0.40,
    };
    let r = fit_gamma_correction_values(&values, moments, &SelectionPolicy::default());
    assert!(matches!(r, Err(Error::Fit(_))), "{r:?}");
}

#[test]
fn unresolvable_residual_variance_drops_the_correction() {
    // a dominant value plus a tail far below the selection floor
    let mut values = vec![1.0];
    values.extend(std::iter::repeat_n(1e-9, 100));
    let moments = Moments {
        mean: values.iter().sum(),
        variance: values.iter().map(|v| v * v).sum(),
    };
    let m = fit_gamma_correction_values(&values, moments, &SelectionPolicy::default()).unwrap();
    assert!(m.correction().is_none());
    assert_eq!(m.hypo().retained(), &[1.0]);

    // a tail that carries real mean but no resolvable variance stays an error
    let moments = Moments {
        mean: 1.01,
        variance: 1.0,
    };
    assert!(matches!(
        fit_gamma_correction_values(&[1.0], moments, &SelectionPolicy::default()),
        Err(Error::Fit(_))
    ));
}

#[test]
fn fitted_model_closes_the_moments() {
    for a in [sinc_model(1.0, 800e6), jakes_model(2.0, 800e6)] {
        let m = &a.model;
        assert!((m.mean() - a.moments.mean).abs() <= 1e-10);
        assert!((m.variance() - a.moments.variance).abs() <= 1e-10);
    }
}

#[test]
fn vanishing_correction_reduces_to_hypoexponential() {
    let hypo = HypoexpModel::new(vec![0.6, 0.3, 0.1]).unwrap();
    let moments = Moments {
        mean: 1.0,
        variance: 0.46,
    };
    let tiny = GammaCorrection {
        shape_r: 1e-6,
        rate_theta: 1e4,
    };
    let gc = GammaCorrectedModel::new(hypo.clone(), Some(tiny), moments).unwrap();
    for i in 1..=40 {
        let x = 0.1 * i as f64;
        assert!((gc.pdf(x).unwrap() - hypo.pdf(x).unwrap()).abs() < 1e-8, "pdf x={x}");
        assert!((gc.cdf(x).unwrap() - hypo.cdf(x).unwrap()).abs() < 1e-8, "cdf x={x}");
    }
}

#[test]
fn gamma_corrected_pdf_matches_convolution_oracle() {
    let hypo = HypoexpModel::new(vec![2.0, 1.0]).unwrap();
    let g = GammaCorrection {
        shape_r: 2.0,
        rate_theta: 10.0,
    };
    let moments = Moments {
        mean: 3.0 + 0.2,
        variance: 5.0 + 0.02,
    };
    let gc = GammaCorrectedModel::new(hypo, Some(g), moments).unwrap();
    let hypo_pdf = |x: f64| (-x / 2.0).exp() - (-x).exp();
    let gamma_pdf = |y: f64| 100.0 * y * (-10.0 * y).exp();
    for x in [0.2, 1.0, 3.0] {
        let oracle = adaptive(|y| hypo_pdf(x - y) * gamma_pdf(y), 0.0, x, 1e-14);
        let v = gc_pdf(&gc, x).unwrap();
        assert!((v - oracle).abs() < 1e-7, "x={x}: {v} vs {oracle}");
        let cdf_oracle = adaptive(
            |t| adaptive(|y| hypo_pdf(t - y) * gamma_pdf(y), 0.0, t, 1e-14),
            0.0,
            x,
            1e-13,
        );
        assert!((gc_cdf(&gc, x).unwrap() - cdf_oracle).abs() < 1e-7);
    }
}

#[test]
fn gamma_corrected_model_rejects_slow_gamma_rate() {
    let hypo = HypoexpModel::new(vec![2.0, 1.0]).unwrap();
    let g = GammaCorrection {
        shape_r: 1.0,
        rate_theta: 0.9,
    };
    let m = Moments {
        mean: 4.0,
        variance: 6.0,
    };
    assert!(matches!(
        GammaCorrectedModel::new(hypo, Some(g), m),
        Err(Error::Model(_))
    ));
}

#[test]
fn pdfs_are_normalised_and_reproduce_the_moments() {
    for a in [sinc_model(1.0, 800e6), jakes_model(1.0, 800e6), sinc_model(0.5, 400e6)] {
        let m = &a.model;
        let top = m.mean() + 12.0 * m.std_dev();
        let mass = adaptive(|x| m.pdf(x).unwrap(), 0.0, top, 1e-10);
        assert!((mass - 1.0).abs() < 1e-5, "mass {mass}");
        let hmass = adaptive(
            |x| m.hypo().pdf(x).unwrap(),
            0.0,
            m.hypo().mean() + 12.0 * m.hypo().std_dev(),
            1e-10,
        );
        assert!((hmass - 1.0).abs() < 1e-5, "hypo mass {hmass}");
        let mean = adaptive(|x| x * m.pdf(x).unwrap(), 0.0, top, 1e-10);
        let second = adaptive(|x| x * x * m.pdf(x).unwrap(), 0.0, top, 1e-10);
        let var = second - mean * mean;
        assert!((mean - a.moments.mean).abs() <= 1e-3 * a.moments.mean);
        assert!((var - a.moments.variance).abs() <= 1e-3 * a.moments.variance);
    }
}

#[test]
fn cdf_is_monotone_and_consistent_with_pdf() {
    for a in [sinc_model(1.0, 800e6), jakes_model(2.0, 800e6)] {
        let m = &a.model;
        let top = m.mean() + 10.0 * m.std_dev();
        let mut last = 0.0;
        for i in 0..=1000 {
            let f = m.cdf(top * i as f64 / 1000.0).unwrap();
            assert!(f >= last - 1e-9);
            last = f;
        }
        assert!(last > 0.999);
        for x in [0.5 * m.mean(), m.mean(), 2.0 * m.mean()] {
            let h = 1e-4 * m.mean();
            let fd = (m.cdf(x + h).unwrap() - m.cdf(x - h).unwrap()) / (2.0 * h);
            let p = m.pdf(x).unwrap();
            assert!((fd - p).abs() <= 1e-4 * p, "x={x}: {fd} vs {p}");
            let hd = (m.hypo().cdf(x + h).unwrap() - m.hypo().cdf(x - h).unwrap()) / (2.0 * h);
            let hp = m.hypo().pdf(x).unwrap();
            assert!((hd - hp).abs() <= 1e-4 * hp);
        }
    }
}

#[test]
fn medians_and_outage_at_the_median() {
    let one = sinc_model(1.0, 800e6);
    let med1 = quantile(&one.model, 0.5).unwrap();
    assert!((med1 - 0.95).abs() <= 0.02, "{med1}");
    assert!((outage(&one.model, 0.95).unwrap() - 0.5).abs() <= 0.02);
    assert_eq!(outage(&one.model, 0.0).unwrap(), 0.0);
    let two = sinc_model(2.0, 800e6);
    let med2 = quantile(&two.model, 0.5).unwrap();
    assert!((med2 - 1.94).abs() <= 0.03, "{med2}");
}

#[test]
fn quantile_inverts_the_cdf() {
    let a = jakes_model(1.0, 800e6);
    for p in [0.01, 0.5, 0.99] {
        let x = quantile(&a.model, p).unwrap();
        assert!((a.model.cdf(x).unwrap() - p).abs() < 1e-8);
    }
    assert!(quantile(&a.model, 0.0).is_err());
    assert!(quantile(&a.model, 1.0).is_err());
}

#[test]
fn wider_aperture_is_stochastically_larger() {
    let (one, two) = (sinc_model(1.0, 800e6), sinc_model(2.0, 800e6));
    for i in 0..=20 {
        let x = 0.5 + 0.05 * i as f64;
        assert!(two.model.cdf(x).unwrap() < one.model.cdf(x).unwrap(), "x={x}");
    }
}

#[test]
fn coefficient_of_variation_examples() {
    let m = Moments {
        mean: 2.0,
        variance: 4.0,
    };
    assert_eq!(coefficient_of_variation(m).unwrap(), 1.0);
    assert!(matches!(
        coefficient_of_variation(Moments {
            mean: 0.0,
            variance: 1.0
        }),
        Err(Error::Domain { .. })
    ));
    // W=1, f=800 MHz: diagonal-spectrum moments give 0.40
    let one = sinc_model(1.0, 800e6);
    let cv = coefficient_of_variation(one.moments).unwrap();
    assert!((cv - 0.40).abs() <= 0.01, "{cv}");
    // W=3, f=1600 MHz from the exact Hilbert–Schmidt moments
    let cfg = make_config(3.0, 1600e6, 0.0, 100, 200, 1).unwrap();
    let cv = coefficient_of_variation(exact_moments(&CorrelationKernel::sinc(cfg)).unwrap()).unwrap();
    assert!((cv - 0.17).abs() <= 0.01, "{cv}");
}

#[test]
fn hilbert_schmidt_cv_at_one_metre_is_above_the_diagonal_value() {
    // The exact ∬|C|² exceeds Σλ² of the diagonal approximation; at W = 1,
    // f = 800 MHz the gap moves the CV from 0.399 to 0.411.
    let cfg = make_config(1.0, 800e6, 0.0, 100, 200, 1).unwrap();
    let k = CorrelationKernel::sinc(cfg);
    let hs = coefficient_of_variation(exact_moments(&k).unwrap()).unwrap();
    let spec = spectrum(&k, 100).unwrap();
    let diag = coefficient_of_variation(model_moments(&k, &spec, MomentSource::Spectrum).unwrap()).unwrap();
    assert!((hs - 0.4114).abs() < 5e-4, "{hs}");
    assert!((diag - 0.399).abs() < 1e-3, "{diag}");
}

#[test]
fn gamma_baseline_examples() {
    let b = GammaBaseline::from_moments(Moments {
        mean: 1.0,
        variance: 0.16,
    })
    .unwrap();
    assert!((b.shape_k - 6.25).abs() < 1e-12 && (b.rate - 6.25).abs() < 1e-12);
    assert!((b.mean() - 1.0).abs() < 1e-12 && (b.variance() - 0.16).abs() < 1e-12);
    let e = GammaBaseline {
        shape_k: 1.0,
        rate: 1.0,
    };
    assert!((gamma_baseline_cdf(&e, 1.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
}

#[test]
fn gamma_baseline_overestimates_low_outage() {
    for w in [0.25, 0.5, 0.75] {
        let a = sinc_model(w, 400e6);
        let mut checked = 0;
        for i in 0..=60 {
            let th_db = -30.0 + 0.5 * i as f64;
            let th = 10f64.powf(th_db / 10.0);
            let p = a.model.cdf(th).unwrap();
            if p <= 10f64.powf(-1.5) && p > 0.0 {
                checked += 1;
                assert!(a.baseline.cdf(th).unwrap() > p, "W={w} th={th_db} dB");
            }
        }
        assert!(checked > 5);
    }
}

#[test]
fn fit_from_spectrum_uses_supplied_moments() {
    let cfg = make_config(1.0, 800e6, 0.0, 100, 200, 1).unwrap();
    let k = CorrelationKernel::sinc(cfg);
    let spec = spectrum(&k, 100).unwrap();
    let hs = exact_moments(&k).unwrap();
    let m = fit_gamma_correction(&spec, hs, &SelectionPolicy::default()).unwrap();
    assert!((m.variance() - hs.variance).abs() < 1e-10);
    assert!((m.mean() - hs.mean).abs() < 1e-10);
}
