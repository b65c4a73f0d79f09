use serde::{Deserialize, Serialize};

use super::ldp::LdpConstants;
use crate::boundary::{detect_cone, estimate_p1p2_in, sample_furstenberg, AttractionParams, BoundarySpace, StepMeasure};
use crate::circle::CirclePoint;
use crate::cocycle::iwasawa_fast;
use crate::error::{Error, Result};
use crate::rng::par_trials;
use crate::stats::mean_se;

/// Test functions `f(y, u)` on circle × line, compactly supported in `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFunction {
    Zero,
    /// `(1 - u²)^4 (1 + slope·y_x)` on `|u| ≤ 1`.
    Bump { slope: f64 },
    /// `(1 - u²)^4`, independent of `y`.
    BumpU,
}

impl TestFunction {
    #[inline]
    pub fn bump(u: f64) -> f64 {
        if u.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - u * u).powi(4)
        }
    }

    #[inline]
    pub fn eval(&self, y: &CirclePoint, u: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Bump { slope } => Self::bump(u) * (1.0 + slope * y.vec().x),
            Self::BumpU => Self::bump(u),
        }
    }

    /// `(u_lo, u_hi)` outside which `f` vanishes.
    pub fn support(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    /// `∫ f(y, u) du` as a function of `y`.
    pub fn u_integral(&self, y: &CirclePoint) -> f64 {
        // ∫_{-1}^{1} (1 - u²)^4 du
        const BUMP_MASS: f64 = 256.0 / 315.0;
        match self {
            Self::Zero => 0.0,
            Self::Bump { slope } => BUMP_MASS * (1.0 + slope * y.vec().x),
            Self::BumpU => BUMP_MASS,
        }
    }

    /// `sup |f|`.
    pub fn sup(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Bump { slope } => 1.0 + slope.abs(),
            Self::BumpU => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewalParams {
    pub t: f64,
    pub k_max: usize,
    pub trials: usize,
    pub seed: u64,
    /// Growth rate of `σ`, used for the `k_max` check and the tail bound.
    pub lambda: f64,
    /// Large-deviation constants certifying the omitted tail.
    pub ldp: Option<LdpConstants>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalReport {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: usize,
    pub k_max: usize,
    pub t: f64,
    /// Upper bound on `Σ_{k > k_max} E|f(g w, σ_k - t)|`; absent without
    /// large-deviation constants.
    pub truncation_bound: Option<f64>,
    /// The bound is missing or exceeds 1% of the estimate.
    pub truncation_warning: bool,
}

/// `sup|f| · [#{k_max < k < k*} + Σ_{k ≥ max(k_max+1, k*)} C e^{-ck}]`
/// with `k* = ⌊(t + u_hi)/(λ - ε₁)⌋ + 1`: past `k*` a nonzero term needs a
/// deviation `σ_k - λk ≤ -ε₁k`.
fn truncation_bound(f: &TestFunction, t: f64, k_max: usize, ldp: &LdpConstants) -> Option<f64> {
    let slope = ldp.lambda - ldp.eps1;
    if !(slope > 0.0) {
        return None;
    }
    let k_star = ((t + f.support().1) / slope).floor() as usize + 1;
    let certain = k_star.saturating_sub(k_max + 1) as f64;
    let k0 = (k_max + 1).max(k_star) as f64;
    let geometric = if ldp.c == 0.0 {
        0.0
    } else {
        ldp.c * (-ldp.rate * k0).exp() / (1.0 - (-ldp.rate).exp())
    };
    Some(f.sup() * (certain + geometric))
}

/// `Rf(w, t) = Σ_{k=1}^{k_max} E f(g w, σ(g, w) - t)` with `g` distributed as
/// `μ^{*k}`; each trajectory contributes one term per step.
pub fn renewal_sum(mu: &StepMeasure, f: &TestFunction, w: CirclePoint, p: &RenewalParams) -> Result<RenewalReport> {
    mu.require_dim2()?;
    if p.trials == 0 {
        return Err(Error::Precondition("need at least one trial".into()));
    }
    if !(p.lambda > 0.0) {
        return Err(Error::Precondition(format!("growth rate must be positive, got {}", p.lambda)));
    }
    if (p.k_max as f64) < 3.0 * p.t / p.lambda {
        return Err(Error::Precondition(format!(
            "k_max = {} is below 3t/λ = {:.1}",
            p.k_max,
            3.0 * p.t / p.lambda
        )));
    }
    let mats = mu.mats2();
    let trials = if mu.is_deterministic() { 1 } else { p.trials };
    let sums = par_trials(p.seed, trials, |rng, _| {
        let mut theta = w;
        let mut s = 0.0;
        let mut acc = 0.0;
        for _ in 0..p.k_max {
            let g = &mats[mu.sample(rng)];
            s += iwasawa_fast(g, &theta.vec());
            theta = theta.act(g);
            acc += f.eval(&theta, s - p.t);
        }
        acc
    });
    let (estimate, std_error) = mean_se(&sums);
    let truncation_bound = p.ldp.as_ref().and_then(|l| truncation_bound(f, p.t, p.k_max, l));
    let truncation_warning = truncation_bound.is_none_or(|b| b > 0.01 * estimate.abs());
    Ok(RenewalReport { estimate, std_error, trials, k_max: p.k_max, t: p.t, truncation_bound, truncation_warning })
}

/// `(1/λ) ∫∫ f(y, u) du dν_w(y)` with `ν_w` the limit of `μ^{*k} * δ_w`:
/// `p₁(w)ν₁ + p₂(w)ν₂` when an invariant cone exists, the unique stationary
/// measure on the circle otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalLimit {
    pub value: f64,
    /// Standard error from the `p₁` estimate; the stationary sample is
    /// treated as exact.
    pub std_error: f64,
    pub p1: Option<f64>,
}

pub fn renewal_limit(
    mu: &StepMeasure,
    f: &TestFunction,
    w: CirclePoint,
    lambda: f64,
    samples: usize,
    p1_trials: usize,
    seed: u64,
) -> Result<RenewalLimit> {
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("growth rate must be positive, got {lambda}")));
    }
    let cone = detect_cone(mu)?;
    let start = cone.arc.map_or(CirclePoint::from_angle(0.3), |a| a.midpoint());
    let nu = sample_furstenberg(mu, start, 1000, samples, BoundarySpace::Circle, seed)?;
    let avg = |pts: &mut dyn Iterator<Item = CirclePoint>| {
        let v: Vec<f64> = pts.map(|p| f.u_integral(&p)).collect();
        mean_se(&v).0
    };
    match cone.arc.filter(|_| cone.has_cone()) {
        Some(arc) => {
            let p = estimate_p1p2_in(mu, &arc, w, p1_trials, 10_000, AttractionParams::default(), seed ^ 1)?;
            let on_arc = avg(&mut nu.points.iter().copied());
            let on_anti = avg(&mut nu.points.iter().map(|q| q.antipode()));
            let value = (p.p1 * on_arc + p.p2 * on_anti) / lambda;
            Ok(RenewalLimit { value, std_error: p.se * (on_arc - on_anti).abs() / lambda, p1: Some(p.p1) })
        }
        None => Ok(RenewalLimit { value: avg(&mut nu.points.iter().copied()) / lambda, std_error: 0.0, p1: None }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupElement;

    fn det_params(t: f64, k_max: usize) -> RenewalParams {
        RenewalParams {
            t,
            k_max,
            trials: 4,
            seed: 1,
            lambda: 1.0,
            ldp: Some(LdpConstants { c: 0.0, rate: 1.0, lambda: 1.0, eps1: 0.25 }),
        }
    }

    #[test]
    fn zero_function() {
        let mu = StepMeasure::dirac(GroupElement::diag_flow(1.0));
        let r = renewal_sum(&mu, &TestFunction::Zero, CirclePoint::e1(), &det_params(5.0, 20)).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn deterministic_unit_increments() {
        let mu = StepMeasure::dirac(GroupElement::diag_flow(1.0));
        let t = 7.3;
        let r = renewal_sum(&mu, &TestFunction::BumpU, CirclePoint::e1(), &det_params(t, 30)).unwrap();
        let direct: f64 = (1..=30).map(|k| TestFunction::bump(k as f64 - t)).sum();
        assert!((r.estimate - direct).abs() < 1e-12);
        assert_eq!(r.truncation_bound, Some(0.0));
    }

    #[test]
    fn limit_of_y_independent_function() {
        let mu = StepMeasure::uniform_rows(&[[[2.0, 1.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 2.0]]]).unwrap();
        let l = renewal_limit(&mu, &TestFunction::BumpU, CirclePoint::e1(), 2.0, 1000, 100, 3).unwrap();
        assert!((l.value - 128.0 / 315.0).abs() < 1e-12);
    }

    #[test]
    fn short_horizon_is_refused() {
        let mu = StepMeasure::dirac(GroupElement::diag_flow(1.0));
        assert!(renewal_sum(&mu, &TestFunction::BumpU, CirclePoint::e1(), &det_params(10.0, 20)).is_err());
    }
}
