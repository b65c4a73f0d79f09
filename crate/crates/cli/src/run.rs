use homdyn::boundary::{detect_cone, StepMeasure};
use homdyn::catalog;
use homdyn::circle::CirclePoint;
use homdyn::classifier::{classify, Case};
use homdyn::cocycle::{CircleSection, CocycleHandle};
use homdyn::fiber::{capped_shortest, LatticePoint};
use homdyn::stats::Histogram;
use homdyn::walk::{
    cesaro_distribution, decompose_experiment, drift_experiment, equidist_experiment, ldp_tail, lyapunov,
    renewal_limit, renewal_sum, walk_series, BundlePoint, CesaroParams, DecomposeConfig, DriftConfig,
    EquidistConfig, RenewalParams,
};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Kind, Observable};
use crate::CliError;

/// Results of one experiment, ready to be written.
pub struct Outcome {
    pub report: Value,
    pub series_header: Vec<&'static str>,
    pub series: Vec<Vec<f64>>,
    pub pass: bool,
    /// One line for humans.
    pub summary: String,
}

fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing params.{key}")))
}

fn lattice(cfg: &ExperimentConfig, dim: usize) -> Result<LatticePoint, CliError> {
    match &cfg.params.z0 {
        Some(rows) => {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(CliError::Config("params.z0 must be square".into()));
            }
            Ok(LatticePoint::reduce(&DMatrix::from_fn(n, n, |i, j| rows[i][j]))?)
        }
        None => Ok(catalog::default_lattice(dim)?),
    }
}

fn observable(o: Observable) -> fn(&LatticePoint) -> f64 {
    fn one(_: &LatticePoint) -> f64 {
        1.0
    }
    match o {
        Observable::CappedShortest => capped_shortest,
        Observable::One => one,
    }
}

fn cdf_series(a: &Histogram, b: &Histogram) -> Vec<Vec<f64>> {
    let (ca, cb) = (a.cdf(), b.cdf());
    let width = (a.hi - a.lo) / a.bins() as f64;
    ca.iter().zip(&cb).enumerate().map(|(i, (x, y))| vec![a.lo + width * (i + 1) as f64, *x, *y]).collect()
}

fn section_for(mu: &StepMeasure) -> Result<CircleSection, CliError> {
    let cone = detect_cone(mu)?;
    Ok(match cone.arc.filter(|_| cone.has_cone()) {
        Some(arc) => CircleSection::cone(arc.start, arc.len),
        None => CircleSection::plain(),
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match cfg.kind {
        Kind::Classify => run_classify(cfg),
        Kind::Walk => run_walk(cfg),
        Kind::Lyapunov => run_lyapunov(cfg),
        Kind::Ldp => run_ldp(cfg),
        Kind::Renewal => run_renewal(cfg),
        Kind::Drift => run_drift(cfg),
        Kind::Equidist => run_equidist(cfg),
        Kind::Decompose => run_decompose(cfg),
    }
}

fn run_classify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (flag, emb) = cfg.geometry()?;
    let label = classify(&flag, &emb)?;
    let expected = cfg.example()?.map(|e| e.expected);
    let pass = expected.is_none_or(|e| e == label.case);
    let mut summary = format!("case {}", label.case);
    if let Some(e) = expected {
        summary += &format!(" (catalog: {e})");
    }
    for w in &label.diagnostics.warnings {
        summary += &format!("\nwarning: {w}");
    }
    Ok(Outcome {
        report: json!({ "label": label, "expected": expected }),
        series_header: vec![],
        series: vec![],
        pass,
        summary,
    })
}

fn run_walk(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let (flag, emb) = cfg.geometry()?;
    let label = classify(&flag, &emb)?;
    let mu = cfg.mu()?;
    let sec = section_for(&mu)?;
    let handle = catalog::walk_cocycle(&flag, &emb, label.case, sec)?;
    let z0 = lattice(cfg, catalog::fibre_dim(&flag, &emb)?)?;
    let x0 = BundlePoint::new(CirclePoint::from_angle(need(p.theta0, "theta0")?), z0);
    let f = observable(need(p.observable, "observable")?);
    let (steps, trials) = (need(p.steps, "steps")?, need(p.trials, "trials")?);
    let mut cp = CesaroParams::new(steps, trials, cfg.seed());
    cp.bins = need(p.bins, "bins")?;
    let c = cesaro_distribution(&mu, &x0, &handle, f, &cp)?;
    let (series, _) = walk_series(&mu, &x0, &handle, f, steps, need(p.every, "every")?, cfg.seed())?;
    Ok(Outcome {
        report: json!({
            "case": label.case,
            "cocycle": handle.kind(),
            "fibre_dim": handle.fibre_dim(),
            "mean": c.mean,
            "std_error": c.std_error,
            "product_v": c.product_v,
            "min": c.min,
            "max": c.max,
            "steps": steps,
            "trials": trials,
        }),
        series_header: vec!["step", "value"],
        series: series.into_iter().map(|(k, v)| vec![k as f64, v]).collect(),
        pass: true,
        summary: format!("case {}: Cesàro mean {:.6} ± {:.2e}", label.case, c.mean, c.std_error),
    })
}

fn run_lyapunov(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let r = lyapunov(&cfg.mu()?, need(p.steps, "steps")?, need(p.trials, "trials")?, cfg.seed())?;
    Ok(Outcome {
        summary: format!("λ = {:.10} ± {:.2e}{}", r.estimate, r.std_error, if r.deterministic { " (deterministic)" } else { "" }),
        report: serde_json::to_value(&r)?,
        series_header: vec![],
        series: vec![],
        pass: true,
    })
}

/// Growth rate of `σ` for the LDP and renewal experiments.
fn sigma_rate(cfg: &ExperimentConfig, mu: &StepMeasure) -> Result<(f64, f64), CliError> {
    let p = &cfg.params;
    let r = lyapunov(mu, need(p.lyapunov_steps, "lyapunov_steps")?, need(p.lyapunov_trials, "lyapunov_trials")?, cfg.seed() ^ 0x1)?;
    Ok((2.0 * r.estimate, 2.0 * r.std_error))
}

fn run_ldp(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let mu = cfg.mu()?;
    let (lambda, lambda_se) = sigma_rate(cfg, &mu)?;
    let eps1 = p.eps1.unwrap_or(lambda / 4.0);
    let grid = p.n_grid.clone().ok_or_else(|| CliError::Config("missing params.n_grid".into()))?;
    let n_min = grid.iter().copied().min().unwrap_or(0).max(1);
    if !(eps1 < lambda / 2.0 && eps1 > 2.0 / n_min as f64) {
        return Err(CliError::Config(format!(
            "params.eps1 = {eps1} must lie in (2/n, λ/2) = ({}, {})",
            2.0 / n_min as f64,
            lambda / 2.0
        )));
    }
    let w = CirclePoint::from_angle(need(p.theta0, "theta0")?);
    let table = ldp_tail(&mu, w, lambda, eps1, &grid, need(p.trials, "trials")?, cfg.seed())?;
    let r2_min = need(p.r2_min, "r2_min")?;
    let pass = table.fit.is_some_and(|f| f.slope < 0.0 && f.r2 >= r2_min);
    let summary = match table.fit {
        Some(f) => format!("log tail slope {:.3e}, R² {:.4}", f.slope, f.r2),
        None => "no tail events to fit".to_string(),
    };
    Ok(Outcome {
        report: json!({ "lambda_se": lambda_se, "table": table, "constants": table.constants() }),
        series_header: vec!["n", "tail", "events", "upper_bound"],
        series: table
            .rows
            .iter()
            .map(|r| vec![r.n as f64, r.tail, r.events as f64, if r.upper_bound { 1.0 } else { 0.0 }])
            .collect(),
        pass,
        summary,
    })
}

fn run_renewal(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let mu = cfg.mu()?;
    let (lambda, _) = sigma_rate(cfg, &mu)?;
    let w = CirclePoint::from_angle(need(p.theta0, "theta0")?);
    let f = need(p.test_function, "test_function")?;
    let grid = p.n_grid.clone().ok_or_else(|| CliError::Config("missing params.n_grid".into()))?;
    let eps1 = p.eps1.unwrap_or(lambda / 4.0);
    let table = ldp_tail(&mu, w, lambda, eps1, &grid, need(p.ldp_trials, "ldp_trials")?, cfg.seed() ^ 0x2)?;
    let params = RenewalParams {
        t: need(p.t, "t")?,
        k_max: need(p.k_max, "k_max")?,
        trials: need(p.trials, "trials")?,
        seed: cfg.seed(),
        lambda,
        ldp: table.constants(),
    };
    let r = renewal_sum(&mu, &f, w, &params)?;
    let limit = renewal_limit(&mu, &f, w, lambda, 100_000, 10_000, cfg.seed() ^ 0x3)?;
    let rel = (r.estimate - limit.value).abs() / limit.value.abs();
    let pass = rel <= need(p.tol, "tol")? && !r.truncation_warning;
    Ok(Outcome {
        summary: format!(
            "R f = {:.5} ± {:.1e}, limit {:.5}, relative error {:.4}{}",
            r.estimate,
            r.std_error,
            limit.value,
            rel,
            if r.truncation_warning { ", truncation not certified" } else { "" }
        ),
        report: json!({ "lambda": lambda, "renewal": r, "limit": limit, "relative_error": rel, "ldp_fit": table.fit }),
        series_header: vec![],
        series: vec![],
        pass,
    })
}

fn run_drift(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let r = drift_experiment(&DriftConfig {
        mu: cfg.mu()?,
        quadruples: need(p.quadruples, "quadruples")?,
        n: need(p.steps, "steps")?,
        word_len: need(p.word_len, "word_len")?,
        seed: cfg.seed(),
        tol: need(p.tol, "tol")?,
    })?;
    Ok(Outcome {
        summary: format!("max |finite - limit| = {:.3e}, degenerate quadruples give 0: {}", r.max_abs_diff, r.degenerate_zero),
        series_header: vec!["finite", "limit"],
        series: r.values.iter().map(|(a, b)| vec![*a, *b]).collect(),
        pass: r.pass,
        report: serde_json::to_value(&r)?,
    })
}

fn require_case(cfg: &ExperimentConfig, want: Case) -> Result<(), CliError> {
    let (flag, emb) = cfg.geometry()?;
    let got = classify(&flag, &emb)?.case;
    if got != want {
        return Err(CliError::Config(format!("{} needs a {want} configuration, got {got}", cfg.kind.name())));
    }
    Ok(())
}

fn run_equidist(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    require_case(cfg, Case::Case22)?;
    let p = &cfg.params;
    let mut e = EquidistConfig::new(cfg.mu()?, lattice(cfg, 2)?, need(p.steps, "steps")?, need(p.trials, "trials")?, cfg.seed());
    e.theta0 = p.theta0.map(CirclePoint::from_angle);
    e.burn_in = need(p.burn_in, "burn_in")?;
    e.dt = need(p.dt, "dt")?;
    e.lyapunov_n = need(p.lyapunov_steps, "lyapunov_steps")?;
    e.lyapunov_trials = need(p.lyapunov_trials, "lyapunov_trials")?;
    e.bins = need(p.bins, "bins")?;
    e.ks_tol = need(p.tol, "tol")?;
    e.product_tol = need(p.product_tol, "product_tol")?;
    e.check_monotone = need(p.check_monotone, "check_monotone")?;
    let r = equidist_experiment(&e)?;
    Ok(Outcome {
        summary: format!(
            "KS {:.5} (tolerance {}), product V {:.5}, KS at n/4 {}",
            r.ks,
            e.ks_tol,
            r.product_v,
            r.ks_quarter.map_or("-".into(), |k| format!("{k:.5}"))
        ),
        series_header: vec!["x", "walk_cdf", "orbit_cdf"],
        series: cdf_series(&r.walk_hist, &r.orbit_hist),
        pass: r.pass,
        report: serde_json::to_value(&r)?,
    })
}

fn run_decompose(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    require_case(cfg, Case::Case23a)?;
    let p = &cfg.params;
    let (flag, emb) = cfg.geometry()?;
    let mu = cfg.mu()?;
    let bundle: CocycleHandle = catalog::walk_cocycle(&flag, &emb, Case::Case23a, section_for(&mu)?)?;
    let direct = catalog::direct_cocycle(&flag, &emb)?;
    let r = decompose_experiment(&DecomposeConfig {
        z0: lattice(cfg, bundle.fibre_dim())?,
        theta0: CirclePoint::from_angle(need(p.theta0, "theta0")?),
        mu,
        bundle,
        direct,
        n: need(p.steps, "steps")?,
        trials: need(p.trials, "trials")?,
        seed: cfg.seed(),
        bins: need(p.bins, "bins")?,
        ks_tol: need(p.tol, "tol")?,
    })?;
    Ok(Outcome {
        summary: format!("KS {:.5}, bundle mean {:.5}, direct mean {:.5}", r.ks, r.bundle_mean, r.direct_mean),
        series_header: vec!["x", "bundle_cdf", "direct_cdf"],
        series: cdf_series(&r.bundle_hist, &r.direct_hist),
        pass: r.pass,
        report: serde_json::to_value(&r)?,
    })
}
