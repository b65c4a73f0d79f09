//! Random walks on the trivialised bundle `H/Q_H ×_α S/Λ`.
//!
//! A state is a boundary point `θ` (kept on the circle, so signs are
//! available) and a lattice `z`; one step by `g` is
//! `(θ, z) ↦ (gθ, α(g, θ)·z)`.

mod equidist;
mod ldp;
mod renewal;

pub use equidist::{
    decompose_experiment, drift_experiment, equidist_experiment, DecomposeConfig, DecomposeReport, DriftConfig,
    DriftReport, EquidistConfig, EquidistReport,
};
pub use ldp::{ldp_tail, LdpConstants, LdpRow, LdpTable};
pub use renewal::{renewal_limit, renewal_sum, RenewalLimit, RenewalParams, RenewalReport, TestFunction};

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::boundary::{RenormProduct, StepMeasure};
use crate::circle::CirclePoint;
use crate::cocycle::{CocycleHandle, CocycleValue};
use crate::error::{Error, Result};
use crate::fiber::LatticePoint;
use crate::rng::par_trials;
use crate::stats::{cramers_v, mean_se, pairwise_sum, EmpiricalMeasure, Histogram};

/// A point `(θ, z)` of the bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundlePoint {
    pub theta: CirclePoint,
    pub z: LatticePoint,
}

impl BundlePoint {
    pub fn new(theta: CirclePoint, z: LatticePoint) -> Self {
        Self { theta, z }
    }
}

fn apply_value(z: &LatticePoint, v: &CocycleValue) -> Result<LatticePoint> {
    match v {
        CocycleValue::Diag(d) => z.diag_action(*d),
        CocycleValue::Matrix(m) => z.act(m),
    }
}

/// `(θ, z) ↦ (gθ, α(g, θ)·z)`.
pub fn step(g: &nalgebra::Matrix2<f64>, x: &BundlePoint, cocycle: &CocycleHandle) -> Result<BundlePoint> {
    let theta = x.theta.act(g);
    if cocycle.is_trivial() {
        return Ok(BundlePoint { theta, z: x.z.clone() });
    }
    if cocycle.fibre_dim() != x.z.dim() {
        return Err(Error::DimensionMismatch { expected: cocycle.fibre_dim(), got: x.z.dim() });
    }
    let z = match cocycle.eval_diag(g, &x.theta) {
        Some(d) => x.z.diag_action(d)?,
        None => apply_value(&x.z, &cocycle.eval2(g, &x.theta)?)?,
    };
    Ok(BundlePoint { theta, z })
}

/// Summary of a Monte Carlo estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkReport {
    pub estimator: String,
    pub estimate: f64,
    /// Sample standard deviation over `√trials`; 0 when deterministic.
    pub std_error: f64,
    pub trials: usize,
    pub steps: usize,
    pub seed: u64,
    pub deterministic: bool,
    /// Seconds spent; left out of serialised reports so they stay
    /// bit-reproducible.
    #[serde(skip)]
    pub wall_clock: f64,
}

/// `(1/n) log ‖g_n ⋯ g_1‖`, averaged over independent trials.
pub fn lyapunov(mu: &StepMeasure, n: usize, trials: usize, seed: u64) -> Result<WalkReport> {
    mu.require_dim2()?;
    if n < 1000 {
        return Err(Error::Precondition(format!("Lyapunov estimates need n >= 1000, got {n}")));
    }
    if trials == 0 {
        return Err(Error::Precondition("need at least one trial".into()));
    }
    let start = Instant::now();
    let mats = mu.mats2();
    let deterministic = mu.is_deterministic();
    let run = |rng: &mut rand_chacha::ChaCha8Rng, _| {
        let mut p = RenormProduct::identity();
        for _ in 0..n {
            p.left_mul(&mats[mu.sample(rng)]);
        }
        p.log_norm() / n as f64
    };
    let vals = if deterministic { par_trials(seed, 1, &run) } else { par_trials(seed, trials, &run) };
    let (estimate, std_error) = mean_se(&vals);
    Ok(WalkReport {
        estimator: "lyapunov".into(),
        estimate,
        std_error,
        trials: vals.len(),
        steps: n,
        seed,
        deterministic,
        wall_clock: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CesaroParams {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Range and bin count of the fibre-observable histogram.
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    /// Bins of the projective base coordinate and of the fibre observable
    /// in the contingency table.
    pub joint_bins: usize,
}

impl CesaroParams {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        Self { n, trials, seed, lo: 0.0, hi: 1.0, bins: 1000, joint_bins: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CesaroResult {
    /// Cesàro mean of the observable and its standard error over trials.
    pub mean: f64,
    pub std_error: f64,
    pub fibre: Histogram,
    /// Counts of (base bin, fibre bin) pairs.
    pub joint: Vec<Vec<f64>>,
    /// Cramér's V of `joint`.
    pub product_v: f64,
    pub min: f64,
    pub max: f64,
}

struct TrialAcc {
    mean: f64,
    hist: Histogram,
    joint: Vec<Vec<f64>>,
    min: f64,
    max: f64,
}

/// Monte Carlo estimate of `(1/n) Σ_{k≤n} μ^{*k} * δ_x` read through the
/// fibre observable `f`: every trial contributes `f(z_k)` for `k = 1..n`.
pub fn cesaro_distribution<F>(
    mu: &StepMeasure,
    x: &BundlePoint,
    cocycle: &CocycleHandle,
    f: F,
    p: &CesaroParams,
) -> Result<CesaroResult>
where
    F: Fn(&LatticePoint) -> f64 + Sync,
{
    mu.require_dim2()?;
    if p.n == 0 || p.trials == 0 {
        return Err(Error::Precondition("need n >= 1 and at least one trial".into()));
    }
    let mats = mu.mats2();
    let jb = p.joint_bins;
    let per_trial: Vec<Result<TrialAcc>> = par_trials(p.seed, p.trials, |rng, _| {
        let mut hist = Histogram::new(p.lo, p.hi, p.bins);
        let jhist = Histogram::new(p.lo, p.hi, jb);
        let base = Histogram::new(0.0, PI, jb);
        let mut joint = vec![vec![0.0; jb]; jb];
        let mut state = x.clone();
        let mut sum = Vec::with_capacity(p.n);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..p.n {
            state = step(&mats[mu.sample(rng)], &state, cocycle)?;
            let v = f(&state.z);
            sum.push(v);
            min = min.min(v);
            max = max.max(v);
            hist.add(v, 1.0);
            joint[base.bin_of(state.theta.proj_angle())][jhist.bin_of(v)] += 1.0;
        }
        Ok(TrialAcc { mean: pairwise_sum(&sum) / p.n as f64, hist, joint, min, max })
    });
    let mut fibre = Histogram::new(p.lo, p.hi, p.bins);
    let mut joint = vec![vec![0.0; jb]; jb];
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut means = Vec::with_capacity(p.trials);
    for t in per_trial {
        let t = t?;
        fibre.merge(&t.hist);
        for (row, trow) in joint.iter_mut().zip(&t.joint) {
            for (a, b) in row.iter_mut().zip(trow) {
                *a += b;
            }
        }
        min = min.min(t.min);
        max = max.max(t.max);
        means.push(t.mean);
    }
    let (mean, std_error) = mean_se(&means);
    let product_v = cramers_v(&joint);
    Ok(CesaroResult { mean, std_error, fibre, joint, product_v, min, max })
}

/// Single-trajectory time series `(k, f(z_k))`, thinned to every `every`-th
/// step.
pub fn walk_series<F>(
    mu: &StepMeasure,
    x: &BundlePoint,
    cocycle: &CocycleHandle,
    f: F,
    n: usize,
    every: usize,
    seed: u64,
) -> Result<(Vec<(usize, f64)>, EmpiricalMeasure)>
where
    F: Fn(&LatticePoint) -> f64,
{
    mu.require_dim2()?;
    let every = every.max(1);
    let mut rng = crate::rng::trial_rng(seed, 0);
    let mut state = x.clone();
    let mut series = Vec::with_capacity(n / every + 1);
    let mut vals = Vec::with_capacity(n);
    for k in 1..=n {
        state = step(&mu.mats2()[mu.sample(&mut rng)], &state, cocycle)?;
        let v = f(&state.z);
        vals.push(v);
        if k % every == 0 {
            series.push((k, v));
        }
    }
    Ok((series, EmpiricalMeasure::uniform(vals)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{morphism_cocycle, CircleSection, Morphism};
    use crate::group::GroupElement;
    use nalgebra::Matrix2;

    fn positive_pair() -> StepMeasure {
        StepMeasure::uniform_rows(&[[[2.0, 1.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 2.0]]]).unwrap()
    }

    #[test]
    fn identity_step_is_noop() {
        let x = BundlePoint::new(CirclePoint::from_angle(0.4), LatticePoint::standard(2));
        let h = CocycleHandle::iwasawa_sign(CircleSection::plain());
        let y = step(&Matrix2::identity(), &x, &h).unwrap();
        assert_eq!(x.z, y.z);
        assert!(x.theta.arc_distance(&y.theta) < 1e-15);
    }

    #[test]
    fn two_steps_equal_product_step() {
        let x = BundlePoint::new(
            CirclePoint::from_angle(2.0),
            LatticePoint::reduce2(&Matrix2::new(1.0, 0.3, 0.0, 1.0)).unwrap(),
        );
        let h = CocycleHandle::iwasawa_sign(CircleSection::plain());
        let g1 = Matrix2::new(0.5, 1.5, -1.0, -1.0);
        let g2 = Matrix2::new(1.2, 0.2, 0.7, 0.95f64);
        let g2 = g2 / g2.determinant().sqrt();
        let two = step(&g1, &step(&g2, &x, &h).unwrap(), &h).unwrap();
        let one = step(&(g1 * g2), &x, &h).unwrap();
        assert!(two.z.distance(&one.z) < 1e-9);
        assert!(two.theta.arc_distance(&one.theta) < 1e-12);
    }

    #[test]
    fn lyapunov_of_diagonal_dirac() {
        let mu = StepMeasure::dirac(GroupElement::from_rows(&[&[2.0, 0.0], &[0.0, 0.5]]).unwrap());
        let r = lyapunov(&mu, 1000, 10, 1).unwrap();
        assert!((r.estimate - 2f64.ln()).abs() < 1e-14);
        assert_eq!(r.std_error, 0.0);
        let rot = StepMeasure::dirac(GroupElement::rotation(0.7));
        assert!(lyapunov(&rot, 1000, 5, 1).unwrap().estimate.abs() < 1e-12);
    }

    #[test]
    fn lyapunov_is_seed_deterministic() {
        let a = lyapunov(&positive_pair(), 1000, 8, 3).unwrap();
        let b = lyapunov(&positive_pair(), 1000, 8, 3).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn trivial_cocycle_keeps_fibre_fixed() {
        let z = LatticePoint::reduce2(&Matrix2::new(1.0, 0.3, 0.1, 1.03)).unwrap();
        let x = BundlePoint::new(CirclePoint::e1(), z.clone());
        let h = morphism_cocycle(Morphism::trivial(2), None);
        let f = |z: &LatticePoint| z.shortest_vector().min(1.0);
        let r = cesaro_distribution(&positive_pair(), &x, &h, f, &CesaroParams::new(500, 4, 9)).unwrap();
        assert_eq!(r.min, f(&z));
        assert_eq!(r.max, f(&z));
    }
}
