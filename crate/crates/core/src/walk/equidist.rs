use serde::{Deserialize, Serialize};

use super::{cesaro_distribution, lyapunov, BundlePoint, CesaroParams, CesaroResult};
use crate::boundary::{detect_cone, sample_furstenberg, sample_word, BoundarySpace, StepMeasure};
use crate::circle::CirclePoint;
use crate::cocycle::{cross_ratio, cross_ratio_limit, CircleSection, CocycleHandle};
use crate::error::{Error, Result};
use crate::fiber::{capped_shortest, diag_orbit_values, LatticePoint};
use crate::rng::trial_rng;
use crate::stats::Histogram;

const LYAPUNOV_STREAM: u64 = 0x51a9_0000_0000_0001;
const SUPPORT_SAMPLES: usize = 10_000;
const SUPPORT_TOL: f64 = 1e-2;

/// The bundle walk against the diagonal flow on the fibre.
#[derive(Clone, Debug)]
pub struct EquidistConfig {
    pub mu: StepMeasure,
    pub z0: LatticePoint,
    /// Starting base point; by default `e1` pushed `burn_in` steps by the walk.
    pub theta0: Option<CirclePoint>,
    pub burn_in: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub dt: f64,
    pub lyapunov_n: usize,
    pub lyapunov_trials: usize,
    pub bins: usize,
    pub joint_bins: usize,
    pub ks_tol: f64,
    pub product_tol: f64,
    /// Also run with `n/4` and require the KS distance not to grow.
    pub check_monotone: bool,
}

impl EquidistConfig {
    pub fn new(mu: StepMeasure, z0: LatticePoint, n: usize, trials: usize, seed: u64) -> Self {
        Self {
            mu,
            z0,
            theta0: None,
            burn_in: 1000,
            n,
            trials,
            seed,
            dt: 0.05,
            lyapunov_n: 10_000,
            lyapunov_trials: 100,
            bins: 1000,
            joint_bins: 8,
            ks_tol: 0.05,
            product_tol: 0.05,
            check_monotone: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistReport {
    /// Growth rate of `σ` and its standard error.
    pub lambda: f64,
    pub lambda_se: f64,
    /// Flow time `λ̂n` matched to the walk length.
    pub t: f64,
    pub cone: bool,
    /// The orbit average runs over `D^±` instead of `D`.
    pub signed: bool,
    pub theta0: CirclePoint,
    pub ks: f64,
    pub product_v: f64,
    pub ks_quarter: Option<f64>,
    pub monotone: Option<bool>,
    pub cesaro_mean: f64,
    pub cesaro_se: f64,
    pub orbit_mean: f64,
    pub pass: bool,
    /// Fibre histograms of the walk and of the orbit at length `n`.
    #[serde(skip)]
    pub walk_hist: Histogram,
    #[serde(skip)]
    pub orbit_hist: Histogram,
}

fn orbit_hist(z0: &LatticePoint, t: f64, dt: f64, signed: bool, bins: usize) -> Result<Histogram> {
    let mut h = Histogram::new(0.0, 1.0, bins);
    for v in diag_orbit_values(z0, t, dt, signed, capped_shortest)? {
        h.add(v, 1.0);
    }
    Ok(h)
}

/// Runs the walk and the flow for `n` steps and flow time `λ̂n`, and
/// compares the two distributions of the capped shortest vector.
pub fn equidist_experiment(cfg: &EquidistConfig) -> Result<EquidistReport> {
    cfg.mu.require_dim2()?;
    if cfg.z0.dim() != 2 {
        return Err(Error::Config("the equidistribution experiment needs a 2-dimensional fibre".into()));
    }
    let ly = lyapunov(&cfg.mu, cfg.lyapunov_n, cfg.lyapunov_trials, cfg.seed ^ LYAPUNOV_STREAM)?;
    let lambda = 2.0 * ly.estimate;
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("walk has no positive drift (λ̂ = {lambda})")));
    }
    let cone = detect_cone(&cfg.mu)?;
    let mats = cfg.mu.mats2();
    let theta0 = match cfg.theta0 {
        Some(p) => p,
        None => {
            let mut rng = trial_rng(cfg.seed, u64::MAX);
            let mut p = CirclePoint::e1();
            for _ in 0..cfg.burn_in {
                p = p.act(&mats[cfg.mu.sample(&mut rng)]);
            }
            p
        }
    };
    let (sec, signed) = match (cone.has_cone(), cone.arc) {
        (true, Some(arc)) => {
            let sample =
                sample_furstenberg(&cfg.mu, arc.midpoint(), 1000, SUPPORT_SAMPLES, BoundarySpace::Circle, cfg.seed)?;
            let d = sample
                .points
                .iter()
                .map(|p| p.arc_distance(&theta0).min(p.arc_distance(&theta0.antipode())))
                .fold(f64::INFINITY, f64::min);
            if d > SUPPORT_TOL {
                return Err(Error::Config(format!(
                    "starting point is {d:.3} away from the support of the stationary measure"
                )));
            }
            (CircleSection::cone(arc.start, arc.len), false)
        }
        _ => (CircleSection::plain(), true),
    };
    let handle = CocycleHandle::iwasawa_sign(sec);
    let x0 = BundlePoint::new(theta0, cfg.z0.clone());

    let run = |n: usize| -> Result<(CesaroResult, Histogram)> {
        let mut p = CesaroParams::new(n, cfg.trials, cfg.seed);
        p.bins = cfg.bins;
        p.joint_bins = cfg.joint_bins;
        let c = cesaro_distribution(&cfg.mu, &x0, &handle, capped_shortest, &p)?;
        let o = orbit_hist(&cfg.z0, (lambda * n as f64).max(1.0), cfg.dt, signed, cfg.bins)?;
        Ok((c, o))
    };
    let (c, o) = run(cfg.n)?;
    let ks = c.fibre.ks(&o);
    let (ks_quarter, monotone) = if cfg.check_monotone {
        let (cq, oq) = run((cfg.n / 4).max(1))?;
        let kq = cq.fibre.ks(&oq);
        (Some(kq), Some(ks <= kq))
    } else {
        (None, None)
    };
    let pass = ks <= cfg.ks_tol && c.product_v <= cfg.product_tol && monotone.unwrap_or(true);
    Ok(EquidistReport {
        lambda,
        lambda_se: 2.0 * ly.std_error,
        t: lambda * cfg.n as f64,
        cone: cone.has_cone(),
        signed,
        theta0,
        ks,
        product_v: c.product_v,
        ks_quarter,
        monotone,
        cesaro_mean: c.mean,
        cesaro_se: c.std_error,
        orbit_mean: o.mean(),
        pass,
        walk_hist: c.fibre,
        orbit_hist: o,
    })
}

/// A twisted bundle walk against the untwisted walk through a morphism.
#[derive(Clone, Debug)]
pub struct DecomposeConfig {
    pub mu: StepMeasure,
    pub z0: LatticePoint,
    pub theta0: CirclePoint,
    /// `α(g, η) = ρ(s(gη))⁻¹ ρ(g) ρ(s(η))`.
    pub bundle: CocycleHandle,
    /// `α(g, η) = ρ(g)`.
    pub direct: CocycleHandle,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub bins: usize,
    pub ks_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub ks: f64,
    pub bundle_mean: f64,
    pub bundle_se: f64,
    pub direct_mean: f64,
    pub direct_se: f64,
    pub product_v: f64,
    pub pass: bool,
    #[serde(skip)]
    pub bundle_hist: Histogram,
    #[serde(skip)]
    pub direct_hist: Histogram,
}

/// Fibre distributions of the two walks, run on disjoint seeds.
pub fn decompose_experiment(cfg: &DecomposeConfig) -> Result<DecomposeReport> {
    let x0 = BundlePoint::new(cfg.theta0, cfg.z0.clone());
    let mut p = CesaroParams::new(cfg.n, cfg.trials, cfg.seed);
    p.bins = cfg.bins;
    let b = cesaro_distribution(&cfg.mu, &x0, &cfg.bundle, capped_shortest, &p)?;
    p.seed = cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let d = cesaro_distribution(&cfg.mu, &x0, &cfg.direct, capped_shortest, &p)?;
    let ks = b.fibre.ks(&d.fibre);
    Ok(DecomposeReport {
        ks,
        bundle_mean: b.mean,
        bundle_se: b.std_error,
        direct_mean: d.mean,
        direct_se: d.std_error,
        product_v: b.product_v,
        pass: ks <= cfg.ks_tol,
        bundle_hist: b.fibre,
        direct_hist: d.fibre,
    })
}

/// Random cross-ratios against their limits.
#[derive(Clone, Debug)]
pub struct DriftConfig {
    pub mu: StepMeasure,
    pub quadruples: usize,
    /// `n = m` used for the finite cross-ratio.
    pub n: usize,
    /// Length of the sampled words; limits use the full words.
    pub word_len: usize,
    pub seed: u64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// `(finite, limit)` per quadruple.
    pub values: Vec<(f64, f64)>,
    pub max_abs_diff: f64,
    pub ill_conditioned: usize,
    /// `b = b'` and `a = a'` both gave exactly 0.
    pub degenerate_zero: bool,
    pub pass: bool,
}

pub fn drift_experiment(cfg: &DriftConfig) -> Result<DriftReport> {
    cfg.mu.require_dim2()?;
    if cfg.n > cfg.word_len {
        return Err(Error::Config("n must not exceed the word length".into()));
    }
    let mut rng = trial_rng(cfg.seed, 0);
    let mut values = Vec::with_capacity(cfg.quadruples);
    let mut ill = 0;
    let mut degenerate_zero = true;
    for _ in 0..cfg.quadruples {
        let w: Vec<_> = (0..4).map(|_| sample_word(&cfg.mu, cfg.word_len, &mut rng)).collect();
        let fin = cross_ratio(&w[0], &w[1], &w[2], &w[3], cfg.n, cfg.n)?;
        let lim = cross_ratio_limit(&w[0], &w[1], &w[2], &w[3])?;
        if lim.ill_conditioned {
            ill += 1;
        }
        values.push((fin.value, lim.value));
        let same_past = cross_ratio(&w[0], &w[1], &w[2], &w[2], cfg.n, cfg.n)?.value;
        let same_future = cross_ratio(&w[0], &w[0], &w[2], &w[3], cfg.n, cfg.n)?.value;
        degenerate_zero &= same_past == 0.0 && same_future == 0.0;
    }
    let max_abs_diff = values.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(DriftReport { values, max_abs_diff, ill_conditioned: ill, degenerate_zero, pass: max_abs_diff <= cfg.tol && degenerate_zero })
}
