//! The subcommands. Each returns a JSON report and, for tabular output, CSV.

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{parse_observable_name, ExperimentConfig, ObservableName};
use super::hash::spec_hash;
use super::{CliError, Command};
use crate::analysis::cohom::cohomological_sweep;
use crate::analysis::spectral::uniform_grid;
use crate::analysis::{
    atom_probe, fit_decay_exponent, furstenberg_best_defect, rokhlin_eigenfunction, spectral_density,
    square_summability_report, AnalysisError,
};
use crate::bundle::{
    admissible_b_space, circular_distance, frac, is_admissible, BundleSpec, CircleExtension, SkewProduct,
};
use crate::dynamics::birkhoff::{birkhoff_average, discrepancy_2d, skew_orbit};
use crate::dynamics::correlation::{
    correlation_series_grid, correlation_series_monte_carlo, CorrelationError, CorrelationSeries,
};
use crate::dynamics::observable::ModeObservable;
use crate::flow::{FlowError, FlowState, HeisenbergFlow};
use crate::iet::{IetMap, IetSummary};
use crate::suspension::build_zippered_rectangles;

/// Result of one subcommand.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub spec_hash: String,
    pub json: Value,
    pub csv: Option<String>,
    /// Set when the run finished but a numerical guard tripped.
    pub guard_failure: Option<String>,
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn skew_product(config: &ExperimentConfig) -> Result<SkewProduct, CliError> {
    let suspension = build_zippered_rectangles(&config.spec, config.tau()).map_err(validation)?;
    let bundle = BundleSpec::new(&config.spec, suspension, config.b().to_vec()).map_err(validation)?;
    Ok(bundle.skew_product(&config.spec))
}

fn observable(name: &str, mode: i64, map: &IetMap) -> Result<ModeObservable, CliError> {
    Ok(match parse_observable_name(name, map.spec())? {
        ObservableName::Const => ModeObservable::one(mode),
        ObservableName::Indicator(a) => ModeObservable::letter_indicator(map, a, mode),
        ObservableName::Cos(k) => ModeObservable::cosine(mode, k, map.total_length()),
    })
}

fn analysis_error(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::TowerConstructionFailed(_) | AnalysisError::Iet(_) => CliError::Numerical(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    }
}

fn correlation_error(e: CorrelationError) -> CliError {
    match e {
        CorrelationError::Iet(_) => CliError::Numerical(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    }
}

/// Runs `command` on a validated configuration.
pub fn run_command(command: Command, config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let hash = spec_hash(&config.semantic);
    let (result, csv, guard_failure) = match command {
        Command::Validate => validate(config)?,
        Command::Suspend => suspend(config)?,
        Command::Admissible => admissible(config)?,
        Command::Iterate => iterate(config)?,
        Command::Birkhoff => birkhoff(config)?,
        Command::Correlate => correlate(config, &hash)?,
        Command::Spectrum => spectrum(config, &hash)?,
        Command::Rokhlin => rokhlin(config)?,
        Command::Cohom => cohom(config)?,
        Command::Commutator => commutator(config)?,
    };
    let json = json!({
        "command": command.name(),
        "spec_hash": hash,
        "config": config.semantic,
        "result": result,
    });
    Ok(Outcome { spec_hash: hash, json, csv, guard_failure })
}

type Parts = (Value, Option<String>, Option<String>);

fn validate(config: &ExperimentConfig) -> Result<Parts, CliError> {
    let report = is_admissible(&config.spec, config.h(), config.b()).map_err(validation)?;
    let result = json!({
        "iet": IetSummary::of(&config.spec),
        "total_length": config.spec.total_length(),
        "admissibility": report,
    });
    Ok((result, None, None))
}

fn suspend(config: &ExperimentConfig) -> Result<Parts, CliError> {
    let s = build_zippered_rectangles(&config.spec, config.tau()).map_err(validation)?;
    let (upper, lower) = s.zipper_heights();
    let rows = s.rectangles.iter().flat_map(|r| {
        [("upper", r.upper), ("lower", r.lower)].map(|(layer, q)| {
            vec![r.symbol.clone(), layer.into(), num(q.x0), num(q.x1), num(q.y0), num(q.y1)]
        })
    });
    let csv = table(&["symbol", "layer", "x0", "x1", "y0", "y1"], rows);
    let result = json!({
        "suspension": s,
        "zipper_heights": { "upper": upper, "lower": lower },
        "singularity_count": s.singularity_count(),
    });
    Ok((result, Some(csv), None))
}

fn admissible(config: &ExperimentConfig) -> Result<Parts, CliError> {
    let space = admissible_b_space(&config.spec, config.h()).map_err(validation)?;
    let report = is_admissible(&config.spec, config.h(), config.b()).map_err(validation)?;
    let result = json!({
        "constraints": space.constraints,
        "codimension": space.codimension,
        "b": config.b(),
        "admissible": report.admissible,
        "constraint_residuals": report.constraint_residuals,
    });
    Ok((result, None, None))
}

fn start(config: &ExperimentConfig) -> (f64, f64) {
    (config.run().x0, frac(config.run().rho0))
}

fn iterate(config: &ExperimentConfig) -> Result<Parts, CliError> {
    let skew = skew_product(config)?;
    let steps = config.run().steps;
    let orbit = skew_orbit(&skew, start(config), steps + 1).map_err(|e| CliError::Numerical(e.to_string()))?;
    let rows = orbit.points.iter().enumerate().map(|(k, &(x, r))| vec![k.to_string(), num(x), num(r)]);
    let csv = table(&["k", "x", "rho"], rows);
    let last = *orbit.points.last().expect("at least the start");
    let guard = (!orbit.reliable).then(|| "orbit passed within the guard of a breakpoint".to_string());
    let result = json!({ "steps": steps, "reliable": orbit.reliable, "final": last });
    Ok((result, Some(csv), guard))
}

fn birkhoff(config: &ExperimentConfig) -> Result<Parts, CliError> {
    let skew = skew_product(config)?;
    let run = config.run();
    let n = run.n;
    let observables = run
        .modes
        .iter()
        .map(|&m| observable(&run.f, m, skew.base()))
        .collect::<Result<Vec<_>, _>>()?;
    let averages = observables
        .par_iter()
        .map(|o| birkhoff_average(&skew, o, start(config), n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let orbit = skew_orbit(&skew, start(config), n).map_err(|e| CliError::Numerical(e.to_string()))?;
    let discrepancy = discrepancy_2d(&orbit.points, skew.base().total_length());
    let rows = run.modes.iter().zip(&averages).map(|(m, a)| {
        vec![m.to_string(), num(a.average.re), num(a.average.im), num(a.average.norm())]
    });
    let csv = table(&["mode", "re", "im", "abs"], rows);
    let max_abs = averages.iter().map(|a| a.average.norm()).fold(0.0, f64::max);
    let guard = (!orbit.reliable).then(|| "orbit passed within the guard of a breakpoint".to_string());
    let per_mode: Vec<Value> = run
        .modes
        .iter()
        .zip(&averages)
        .zip(&observables)
        .map(|((m, a), o)| json!({ "mode": m, "observable": o.description, "average": a }))
        .collect();
    let result = json!({
        "n": n,
        "discrepancy": discrepancy,
        "max_abs_average": max_abs,
        "reliable": orbit.reliable,
        "averages": per_mode,
    });
    Ok((result, Some(csv), guard))
}

fn series(config: &ExperimentConfig, skew: &SkewProduct, hash: &str) -> Result<CorrelationSeries, CliError> {
    let run = config.run();
    let f = observable(&run.f, run.mode_f, skew.base())?;
    let g = observable(&run.g, run.mode_g, skew.base())?;
    let mut s = if run.method == "grid" {
        let mesh = run.mesh.expect("resolved for the grid method");
        correlation_series_grid(skew, &f, &g, run.n_max, mesh)
    } else {
        correlation_series_monte_carlo(skew, &f, &g, run.n_max, run.samples, config.seed())
    }
    .map_err(correlation_error)?;
    s.spec_hash = Some(hash.to_string());
    Ok(s)
}

fn correlate(config: &ExperimentConfig, hash: &str) -> Result<Parts, CliError> {
    let skew = skew_product(config)?;
    let s = series(config, &skew, hash)?;
    let moduli = s.moduli();
    let rows = s.values.iter().enumerate().map(|(n, c)| {
        let mut r = vec![n.to_string(), num(c.re), num(c.im), num(c.norm())];
        if let Some(se) = &s.std_err {
            r.push(num(se[n]));
        }
        r
    });
    let csv = if s.std_err.is_some() {
        table(&["n", "re", "im", "abs", "std_err"], rows)
    } else {
        table(&["n", "re", "im", "abs"], rows)
    };
    let fit = fit_decay_exponent(&moduli).ok();
    let result = json!({
        "method": s.method,
        "seed": config.seed(),
        "n_max": s.n_max(),
        "f": config.run().f,
        "g": config.run().g,
        "mode_f": config.run().mode_f,
        "mode_g": config.run().mode_g,
        "decay_fit": fit,
        "summability": square_summability_report(&moduli),
        "series": s,
    });
    Ok((result, Some(csv), None))
}

fn spectrum(config: &ExperimentConfig, hash: &str) -> Result<Parts, CliError> {
    let skew = skew_product(config)?;
    let s = series(config, &skew, hash)?;
    let run = config.run();
    let mut est = spectral_density(&s.values, run.window).map_err(analysis_error)?;
    est.source_hash = Some(hash.to_string());
    let probe = atom_probe(&s.values, &uniform_grid(run.lambda_grid)).map_err(analysis_error)?;
    let rows = est
        .frequencies
        .iter()
        .zip(&est.density)
        .zip(&est.raw)
        .map(|((l, d), r)| vec![num(*l), num(*d), num(*r)]);
    let csv = table(&["lambda", "density", "raw"], rows);
    let result = json!({
        "method": s.method,
        "window": est.window,
        "window_len": est.window_len,
        "negative_lobe": est.negative_lobe,
        "total_mass": est.total_mass,
        "max_bin_mass": est.max_bin_mass,
        "atom_probe": probe,
        "lambda_grid": run.lambda_grid,
    });
    Ok((result, Some(csv), None))
}

fn rokhlin(config: &ExperimentConfig) -> Result<Parts, CliError> {
    let skew = skew_product(config)?;
    let run = config.run();
    let jobs: Vec<(usize, f64)> = run
        .tower_heights
        .iter()
        .flat_map(|&t| run.lambdas.iter().map(move |&l| (t, l)))
        .collect();
    let reports = jobs
        .par_iter()
        .map(|&(t, l)| rokhlin_eigenfunction(&skew, l, t, run.rokhlin_mode))
        .collect::<Result<Vec<_>, _>>()
        .map_err(analysis_error)?;
    let rows = reports.iter().map(|r| {
        vec![
            r.tower_height.to_string(),
            num(r.lambda),
            r.mode.to_string(),
            num(r.base_lo),
            num(r.base_len),
            num(r.overlap),
            num(r.defect),
            num(r.bound),
        ]
    });
    let csv = table(&["tower_height", "lambda", "mode", "base_lo", "base_len", "overlap", "defect", "bound"], rows);
    let worst = reports.iter().map(|r| r.defect - r.bound).fold(f64::NEG_INFINITY, f64::max);
    let result = json!({ "reports": reports, "max_defect_minus_bound": worst });
    Ok((result, Some(csv), None))
}

fn cohom(config: &ExperimentConfig) -> Result<Parts, CliError> {
    let skew = skew_product(config)?;
    let run = config.run();
    let sweep = cohomological_sweep(&skew, run.cohom_mode, &run.bases, run.orbit_length, run.x0)
        .map_err(analysis_error)?;
    let invariance: Vec<Option<f64>> = if run.invariance_grid == 0 {
        vec![None; run.bases.len()]
    } else {
        run.bases
            .par_iter()
            .map(|&b| furstenberg_best_defect(&skew, run.cohom_mode, b, run.invariance_grid).map(Some))
            .collect::<Result<Vec<_>, _>>()
            .map_err(analysis_error)?
    };
    let rows = sweep.reports.iter().zip(&invariance).map(|(r, inv)| {
        vec![
            r.basis_size.to_string(),
            num(r.residual),
            num(r.condition_number_sq),
            r.ill_conditioned.to_string(),
            inv.map(num).unwrap_or_default(),
        ]
    });
    let csv = table(
        &["basis", "residual", "condition_number_sq", "ill_conditioned", "best_invariance_defect"],
        rows,
    );
    let result = json!({ "sweep": sweep, "best_invariance_defect": invariance, "invariance_grid": run.invariance_grid });
    Ok((result, Some(csv), None))
}

fn commutator(config: &ExperimentConfig) -> Result<Parts, CliError> {
    let skew = skew_product(config)?;
    let run = config.run();
    let map = skew.base();
    let lambda = map.spec().lambda();
    let letter = match &run.letter {
        Some(sym) => map.spec().perm().symbol_index(sym).expect("validated letter"),
        None => (0..lambda.len()).fold(0, |best, a| if lambda[a] > lambda[best] { a } else { best }),
    };
    let x = run.x.unwrap_or(map.breakpoints()[letter] + 0.25 * lambda[letter]);
    let s = run.s.unwrap_or(0.25 * skew.h()[letter]);
    let state = FlowState { letter, x, s, rho: frac(run.rho0) };
    let flow = HeisenbergFlow::new(skew.clone());
    let chart = |e: FlowError| match e {
        FlowError::ChartExit { .. } => validation(format!("{e}; choose smaller t_values or another start")),
        other => CliError::Numerical(other.to_string()),
    };
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut max_diff: f64 = 0.0;
    for &t in &run.t_values {
        let shift = flow.commutator_shift(state, t).map_err(chart)?;
        let composed = flow.commutator_shift_composed(state, t).map_err(chart)?;
        let area = frac(t * t);
        let diff = circular_distance(shift, area);
        max_diff = max_diff.max(diff);
        rows.push(vec![num(t), num(shift), num(t * t), num(diff)]);
        entries.push(json!({ "t": t, "shift": shift, "t2": t * t, "diff": diff, "composed_shift": composed }));
    }
    let csv = table(&["t", "shift", "t2", "diff"], rows);
    let result = json!({
        "start": { "letter": map.spec().perm().alphabet()[letter], "x": x, "s": s, "rho": state.rho },
        "max_diff": max_diff,
        "rows": entries,
    });
    Ok((result, Some(csv), None))
}
