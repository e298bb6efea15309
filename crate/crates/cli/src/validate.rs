use serde_json::json;

use capa_core::kernels::exact_moments;
use capa_core::kleigen::{
    eigenvalue_quadrature, galerkin_spectrum, nystrom_spectrum, ray_eigenvalue_closed, sinc_eigenvalue_appendix,
    sinc_eigenvalue_closed, spectrum, CosineBasis,
};
use capa_core::montecarlo::{default_grid_points, ks_distance, ks_two_sample, sample_grid, sample_kl, sample_rays};
use capa_core::snrdist::{analytic_model, coefficient_of_variation, MomentSource, SelectionPolicy, SnrDistribution};
use capa_core::{make_config, CorrelationKernel, KernelKind};

use crate::error::CliError;
use crate::output::{destination, to_stdout, write_atomic};
use crate::scenario::ScenarioSpec;

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
    /// Reported but not counted toward the exit status.
    informational: bool,
    detail: String,
}

fn within(name: &'static str, value: f64, tolerance: f64, detail: String) -> Check {
    Check {
        name,
        value,
        tolerance,
        pass: value <= tolerance,
        informational: false,
        detail,
    }
}

/// Replicates for the Monte Carlo checks; their KS tolerances assume this
/// many, so `--reps` does not apply.
const MC_REPS: usize = 100_000;

fn checks(spec: &ScenarioSpec, corrupt: Option<f64>) -> Result<Vec<Check>, CliError> {
    let kernel = spec.kernel()?;
    let cfg = *kernel.config();
    let mut out = Vec::new();

    let n_check = spec.modes.min(30);
    let mut closed: Vec<f64> = (0..n_check)
        .map(|n| match kernel.kind() {
            KernelKind::Sinc => sinc_eigenvalue_closed(n, &cfg),
            KernelKind::RayBased => ray_eigenvalue_closed(n, &kernel),
        })
        .collect::<Result<_, _>>()?;
    if let Some(eps) = corrupt {
        closed[0] *= 1.0 + eps;
    }
    let quad: Vec<f64> = (0..n_check)
        .map(|n| eigenvalue_quadrature(n, &kernel))
        .collect::<Result<_, _>>()?;
    let lmax = quad.iter().cloned().fold(0.0, f64::max);
    let worst = closed
        .iter()
        .zip(&quad)
        .map(|(a, b)| (a - b).abs() / lmax)
        .fold(0.0, f64::max);
    out.push(within(
        "closed_form_vs_quadrature",
        worst,
        1e-6,
        format!("{n_check} modes, max deviation relative to the largest eigenvalue"),
    ));

    if kernel.kind() == KernelKind::Sinc {
        let mut worst = 0.0f64;
        let mut count = 0;
        for n in 1..=n_check {
            let a = CosineBasis::new(cfg.aperture_w, n).a_n();
            if ((a - cfg.wavenumber) * cfg.aperture_w).abs() < 1e-9 {
                continue;
            }
            let c = sinc_eigenvalue_closed(n, &cfg)?;
            let d = sinc_eigenvalue_appendix(n, &cfg)?;
            worst = worst.max((c - d).abs() / c.abs().max(1e-300));
            count += 1;
        }
        out.push(within(
            "appendix_assembly",
            worst,
            1e-9,
            format!("{count} modes, relative"),
        ));
    }

    let s = spectrum(&kernel, spec.modes)?;
    let target = if kernel.kind() == KernelKind::Sinc { 0.99 } else { 0.95 };
    let frac = s.sum() / s.trace_target();
    out.push(Check {
        name: "trace_fraction",
        value: frac,
        tolerance: target,
        pass: frac >= target,
        informational: false,
        detail: format!(
            "sum of {} eigenvalues over beta*W, must be at least the tolerance",
            spec.modes
        ),
    });

    let g = galerkin_spectrum(&kernel, 200)?;
    let hs = exact_moments(&kernel)?;
    out.push(within(
        "galerkin_hilbert_schmidt",
        (g.sum_of_squares() - hs.variance).abs() / hs.variance,
        5e-3,
        "Galerkin N=200 sum of squares against the double integral of |C|^2, relative".into(),
    ));

    let m_nys = spec.grid.unwrap_or(1024).max(default_grid_points(&cfg));
    let ny = nystrom_spectrum(&kernel, m_nys)?;
    let worst = (0..10.min(g.len()))
        .map(|k| (g.values()[k] - ny.values()[k]).abs() / g.values()[k].max(1e-300))
        .fold(0.0, f64::max);
    out.push(within(
        "nystrom_vs_galerkin",
        worst,
        0.01,
        format!("top 10 eigenvalues, Nystrom M={m_nys} against Galerkin N=200, relative"),
    ));

    let reps = MC_REPS;
    let kl_ref = sample_kl(&g, reps, spec.seed)?;
    let m_grid = spec.grid.unwrap_or_else(|| default_grid_points(&cfg));
    let grid = sample_grid(&kernel, m_grid, reps, spec.seed.wrapping_add(1))?;
    out.push(within(
        "grid_vs_kl",
        ks_two_sample(grid.values(), kl_ref.values())?,
        0.01,
        format!("two-sample KS, {reps} replicates each"),
    ));
    if kernel.kind() == KernelKind::RayBased {
        let rays = sample_rays(&kernel, m_grid, reps, spec.seed.wrapping_add(2))?;
        out.push(within(
            "rays_vs_kl",
            ks_two_sample(rays.values(), kl_ref.values())?,
            0.015,
            format!("two-sample KS, {reps} replicates each"),
        ));
    }

    let am = analytic_model(&kernel, spec.modes, MomentSource::Spectrum, &SelectionPolicy::default())?;
    let hypo = am.model.hypo();
    out.push(within(
        "partial_fraction_identity",
        (hypo.weight_sum() - 1.0).abs().max(hypo.cdf(0.0)?.abs()),
        1e-9,
        format!("{} retained terms", hypo.retained().len()),
    ));
    let kl = sample_kl(&am.spectrum, reps, spec.seed.wrapping_add(3))?;
    out.push(within(
        "model_vs_kl_monte_carlo",
        ks_distance(kl.values(), |x| am.model.cdf(x).unwrap_or(f64::NAN))?,
        0.01,
        format!("KS of the gamma-corrected CDF, {reps} replicates"),
    ));

    let cells = [
        (1.0, 800e6, 0.40),
        (2.0, 800e6, 0.29),
        (3.0, 800e6, 0.24),
        (1.0, 1.6e9, 0.29),
        (2.0, 1.6e9, 0.21),
        (3.0, 1.6e9, 0.17),
    ];
    let mut worst_diag = 0.0f64;
    let mut worst_hs = 0.0f64;
    let mut cells_text = Vec::new();
    for (w, f, paper) in cells {
        let k = CorrelationKernel::sinc(make_config(w, f, spec.snr_db, 100, spec.rays, spec.seed)?);
        let s = spectrum(&k, 100)?;
        let diag = s.sum_of_squares().sqrt() / k.config().mean_snr();
        let hs = coefficient_of_variation(exact_moments(&k)?)?;
        worst_diag = worst_diag.max((diag - paper).abs());
        worst_hs = worst_hs.max((hs - paper).abs());
        cells_text.push(format!("W={w} f={:.0}MHz {diag:.4}/{hs:.4}", f / 1e6));
    }
    out.push(within(
        "table_i_cv",
        worst_diag,
        0.01,
        format!(
            "CV from the 100-mode spectrum, max deviation over six cells (spectrum/HS: {})",
            cells_text.join(", ")
        ),
    ));
    out.push(Check {
        name: "table_i_cv_hilbert_schmidt",
        value: worst_hs,
        tolerance: 0.01,
        pass: worst_hs <= 0.01,
        informational: true,
        detail: "CV from the double integral of |C|^2; reported only".into(),
    });
    Ok(out)
}

/// Prints the report and writes JSON lines; returns whether all counted
/// checks passed.
pub fn run(spec: &ScenarioSpec, corrupt: Option<f64>) -> Result<bool, CliError> {
    let results = checks(spec, corrupt)?;
    let mut jsonl = String::new();
    let mut all = true;
    let mut report = String::new();
    for c in &results {
        let status = match (c.pass, c.informational) {
            (true, _) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "INFO",
        };
        if !c.pass && !c.informational {
            all = false;
        }
        report.push_str(&format!(
            "{status} {}: {:.6e} (tolerance {:e}) {}\n",
            c.name, c.value, c.tolerance, c.detail
        ));
        jsonl.push_str(
            &json!({
                "check": c.name,
                "pass": c.pass,
                "counted": !c.informational,
                "value": c.value,
                "tolerance": c.tolerance,
                "detail": c.detail,
            })
            .to_string(),
        );
        jsonl.push('\n');
    }
    report.push_str(&format!(
        "{}\n",
        if all { "all checks passed" } else { "validation FAILED" }
    ));
    to_stdout(&report)?;
    match destination(spec, "validate.jsonl") {
        Some(path) => write_atomic(&path, &jsonl)?,
        None => to_stdout(&jsonl)?,
    }
    Ok(all)
}
