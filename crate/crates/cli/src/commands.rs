use capa_core::kleigen::{dominant_mode_estimate, spectrum, EigenSpectrum};
use capa_core::montecarlo::{
    default_grid_points, ks_distance, sample_discrete_array, sample_grid, sample_kl, sample_rays, EmpiricalCdf,
    SampleSet,
};
use capa_core::snrdist::{
    analytic_model, coefficient_of_variation, outage as p_out, AnalyticModel, MomentSource, SelectionPolicy,
    SnrDistribution,
};
use capa_core::CorrelationKernel;

use crate::error::CliError;
use crate::output::{emit, num, Csv};
use crate::scenario::{Sampler, ScenarioSpec};

fn model(spec: &ScenarioSpec, kernel: &CorrelationKernel) -> Result<AnalyticModel, CliError> {
    Ok(analytic_model(
        kernel,
        spec.modes,
        MomentSource::Spectrum,
        &SelectionPolicy::default(),
    )?)
}

fn describe_model(csv: &mut Csv, m: &AnalyticModel) {
    csv.comment("mean", &num(m.moments.mean));
    csv.comment("variance", &num(m.moments.variance));
    csv.comment("retained_terms", &m.model.hypo().retained().len().to_string());
    match m.model.correction() {
        Some(g) => {
            csv.comment("gamma_shape", &num(g.shape_r));
            csv.comment("gamma_rate", &num(g.rate_theta));
        }
        None => csv.comment("gamma_correction", "none"),
    }
}

pub fn eigen(spec: &ScenarioSpec) -> Result<(), CliError> {
    let kernel = spec.kernel()?;
    let s = spectrum(&kernel, spec.modes)?;
    let mut csv = Csv::new("eigen", spec);
    csv.comment("dominant_mode_estimate", &num(dominant_mode_estimate(kernel.config())));
    csv.comment("trace_target", &num(s.trace_target()));
    csv.header(&["n", "lambda", "cumulative_fraction"]);
    let mut acc = 0.0;
    for (n, l) in s.values().iter().enumerate() {
        acc += l;
        csv.row(&[n.to_string(), num(*l), num(acc / s.trace_target())]);
    }
    emit(spec, "eigen.csv", &csv.into_string())
}

pub fn dist(spec: &ScenarioSpec) -> Result<(), CliError> {
    let kernel = spec.kernel()?;
    let m = model(spec, &kernel)?;
    let x_max = spec.x_max.unwrap_or(m.model.mean() + 10.0 * m.model.std_dev());
    let mut csv = Csv::new("dist", spec);
    describe_model(&mut csv, &m);
    csv.comment("cv", &num(coefficient_of_variation(m.moments)?));
    csv.header(&["x", "pdf", "cdf", "gamma_baseline_cdf"]);
    for i in 0..spec.points {
        let x = x_max * i as f64 / (spec.points - 1) as f64;
        csv.row(&[
            num(x),
            num(m.model.pdf(x)?),
            num(m.model.cdf(x)?),
            num(m.baseline.cdf(x)?),
        ]);
    }
    emit(spec, "dist.csv", &csv.into_string())
}

pub fn outage(spec: &ScenarioSpec) -> Result<(), CliError> {
    let kernel = spec.kernel()?;
    let m = model(spec, &kernel)?;
    let n = ((spec.th_max_db - spec.th_min_db) / spec.th_step_db + 1e-9).floor() as usize + 1;
    let mc = if spec.mc {
        Some(EmpiricalCdf::new(draw(spec, &kernel, &m.spectrum)?.values())?)
    } else {
        None
    };
    let mut csv = Csv::new("outage", spec);
    describe_model(&mut csv, &m);
    let mut cols = vec!["gamma_th_db", "p_out_analytic", "p_out_gamma_baseline"];
    if mc.is_some() {
        csv.comment("sampler", &spec.sampler.to_string());
        csv.comment("reps", &spec.reps.to_string());
        cols.push("p_out_mc");
    }
    csv.header(&cols);
    for i in 0..n {
        let db = spec.th_min_db + i as f64 * spec.th_step_db;
        let x = 10f64.powf(db / 10.0);
        let mut row = vec![num(db), num(p_out(&m.model, x)?), num(p_out(&m.baseline, x)?)];
        if let Some(e) = &mc {
            row.push(num(e.eval(x)));
        }
        csv.row(&row);
    }
    emit(spec, "outage.csv", &csv.into_string())
}

/// Draws `spec.reps` replicates with the selected sampler.
pub fn draw(spec: &ScenarioSpec, kernel: &CorrelationKernel, spectrum: &EigenSpectrum) -> Result<SampleSet, CliError> {
    let m = spec.grid.unwrap_or_else(|| default_grid_points(kernel.config()));
    Ok(match spec.sampler {
        Sampler::Kl => sample_kl(spectrum, spec.reps, spec.seed)?,
        Sampler::Grid => sample_grid(kernel, m, spec.reps, spec.seed)?,
        Sampler::Ray => sample_rays(kernel, m, spec.reps, spec.seed)?,
        Sampler::Discrete(_) => {
            sample_discrete_array(kernel, spec.elements, spec.discrete_fraction(), m, spec.reps, spec.seed)?
        }
    })
}

pub fn simulate(spec: &ScenarioSpec) -> Result<(), CliError> {
    let kernel = spec.kernel()?;
    let m = model(spec, &kernel)?;
    let set = draw(spec, &kernel, &m.spectrum)?;
    let summary = set.summary()?;
    let ecdf = EmpiricalCdf::new(set.values())?;
    let ks = ks_distance(set.values(), |x| m.model.cdf(x).unwrap_or(f64::NAN))?;

    let mut csv = Csv::new("simulate", spec);
    csv.comment("sampler", &spec.sampler.to_string());
    if let Sampler::Discrete(_) = spec.sampler {
        csv.comment("elements", &spec.elements.to_string());
        csv.comment("energy_fraction", &num(spec.discrete_fraction()));
    }
    csv.comment("reps", &spec.reps.to_string());
    csv.comment("mean", &num(summary.mean));
    csv.comment("median", &num(summary.median));
    csv.comment("variance", &num(summary.variance));
    csv.comment("cv", &num(summary.cv));
    csv.comment("std_error", &num(summary.std_error));
    csv.comment("ks_vs_analytic", &num(ks));
    csv.header(&["quantile_p", "value"]);
    for i in 0..=1000 {
        let p = i as f64 / 1000.0;
        csv.row(&[num(p), num(ecdf.quantile(p))]);
    }
    emit(spec, "simulate.csv", &csv.into_string())
}
