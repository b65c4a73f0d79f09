use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::StepMeasure;
use crate::circle::CirclePoint;
use crate::error::{Error, Result};
use crate::rng::{par_trials, trial_rng};
use crate::stats::{mean_se, EmpiricalMeasure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySpace {
    /// The circle `K`, angles in `[0, 2π)`.
    Circle,
    /// The projective line, angles in `[0, π)`.
    Projective,
}

impl BoundarySpace {
    pub fn period(self) -> f64 {
        match self {
            Self::Circle => 2.0 * PI,
            Self::Projective => PI,
        }
    }

    pub fn coordinate(self, p: &CirclePoint) -> f64 {
        match self {
            Self::Circle => p.angle().rem_euclid(2.0 * PI),
            Self::Projective => p.proj_angle(),
        }
    }
}

/// One long trajectory of the walk on the boundary.
#[derive(Clone, Debug)]
pub struct FurstenbergSample {
    pub space: BoundarySpace,
    pub points: Vec<CirclePoint>,
    pub measure: EmpiricalMeasure,
    /// Lag-1 autocorrelation of `cos` of the coordinate scaled to a full
    /// turn; values near 1 flag slow mixing.
    pub autocorrelation: f64,
}

pub fn sample_furstenberg(
    mu: &StepMeasure,
    start: CirclePoint,
    burn_in: usize,
    samples: usize,
    space: BoundarySpace,
    seed: u64,
) -> Result<FurstenbergSample> {
    mu.require_dim2()?;
    if samples == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    let mut rng = trial_rng(seed, 0);
    let mats = mu.mats2();
    let mut x = start;
    for _ in 0..burn_in {
        x = x.act(&mats[mu.sample(&mut rng)]);
    }
    let mut points = Vec::with_capacity(samples);
    for _ in 0..samples {
        x = x.act(&mats[mu.sample(&mut rng)]);
        points.push(x);
    }
    let coords: Vec<f64> = points.iter().map(|p| space.coordinate(p)).collect();
    let scale = 2.0 * PI / space.period();
    let c: Vec<f64> = coords.iter().map(|a| (a * scale).cos()).collect();
    let autocorrelation = lag1(&c);
    let measure = EmpiricalMeasure::uniform(coords)?;
    Ok(FurstenbergSample { space, points, measure, autocorrelation })
}

fn lag1(x: &[f64]) -> f64 {
    if x.len() < 3 {
        return 0.0;
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let var: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    if var == 0.0 {
        return 1.0;
    }
    let cov: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    cov / var
}

/// `W₁(μ * ν̂, ν̂)` on the sample's space.
pub fn stationarity_w1(mu: &StepMeasure, sample: &FurstenbergSample) -> Result<f64> {
    let n = sample.points.len() as f64;
    let mut vals = Vec::with_capacity(sample.points.len() * mu.len());
    let mut wts = Vec::with_capacity(vals.capacity());
    for p in &sample.points {
        for (g, w) in mu.mats2().iter().zip(mu.weights()) {
            vals.push(sample.space.coordinate(&p.act(g)));
            wts.push(w / n);
        }
    }
    let pushed = EmpiricalMeasure::new(vals, wts)?;
    Ok(pushed.w1_circle(&sample.measure, sample.space.period()))
}

/// Closed arc `[start, start + len]` of the circle, `len < π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub len: f64,
}

impl Arc {
    pub fn new(start: f64, len: f64) -> Self {
        Self { start: start.rem_euclid(2.0 * PI), len }
    }

    fn offset(&self, p: &CirclePoint) -> f64 {
        (p.angle() - self.start).rem_euclid(2.0 * PI)
    }

    pub fn contains(&self, p: &CirclePoint, tol: f64) -> bool {
        self.distance(p) <= tol
    }

    /// Arc-length distance from `p` to the arc (0 inside).
    pub fn distance(&self, p: &CirclePoint) -> f64 {
        let o = self.offset(p);
        if o <= self.len {
            0.0
        } else {
            (o - self.len).min(2.0 * PI - o)
        }
    }

    pub fn endpoints(&self) -> (CirclePoint, CirclePoint) {
        (CirclePoint::from_angle(self.start), CirclePoint::from_angle(self.start + self.len))
    }

    pub fn midpoint(&self) -> CirclePoint {
        CirclePoint::from_angle(self.start + self.len / 2.0)
    }

    pub fn antipode(&self) -> Self {
        Self::new(self.start + PI, self.len)
    }

    /// Whether `g` maps the cone over the arc into itself.
    pub fn is_invariant(&self, g: &Matrix2<f64>, tol: f64) -> bool {
        let (a, b) = self.endpoints();
        self.contains(&a.act(g), tol) && self.contains(&b.act(g), tol)
    }

    /// Smallest arc containing all points, if shorter than `π`.
    pub fn hull(points: &[CirclePoint]) -> Option<Self> {
        let mut ang: Vec<f64> = points.iter().map(|p| p.angle().rem_euclid(2.0 * PI)).collect();
        ang.sort_by(f64::total_cmp);
        let n = ang.len();
        if n == 0 {
            return None;
        }
        let (mut best_gap, mut best_end) = (ang[0] + 2.0 * PI - ang[n - 1], 0);
        for i in 1..n {
            let gap = ang[i] - ang[i - 1];
            if gap > best_gap {
                best_gap = gap;
                best_end = i;
            }
        }
        let len = 2.0 * PI - best_gap;
        if len < PI {
            Some(Self::new(ang[best_end], len))
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeVerdict {
    True,
    False,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeDetection {
    pub verdict: ConeVerdict,
    pub arc: Option<Arc>,
    /// `W₁(ν̂, -ν̂)` on the circle when the arc search failed.
    pub antipodal_w1: Option<f64>,
}

impl ConeDetection {
    pub fn has_cone(&self) -> bool {
        self.verdict == ConeVerdict::True
    }
}

const INVARIANCE_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 0.02;

fn invariant_for_all(arc: &Arc, mats: &[Matrix2<f64>]) -> bool {
    mats.iter().all(|g| arc.is_invariant(g, INVARIANCE_TOL))
}

/// Grow the arc hull from an attracting direction until it is invariant.
fn hull_search(mats: &[Matrix2<f64>]) -> Option<Arc> {
    // start from the expanding eigendirection of the most hyperbolic atom
    let g = mats.iter().max_by(|a, b| a.trace().abs().total_cmp(&b.trace().abs()))?;
    let mut p = CirclePoint::e1();
    for _ in 0..200 {
        p = p.act(g);
    }
    let mut arc = Arc::new(p.angle(), 0.0);
    for _ in 0..2000 {
        let (a, b) = arc.endpoints();
        let mut pts = vec![a, b];
        for m in mats {
            pts.push(a.act(m));
            pts.push(b.act(m));
        }
        let next = Arc::hull(&pts)?;
        let grown = next.len - arc.len;
        arc = next;
        if grown < 1e-14 {
            return invariant_for_all(&arc, mats).then_some(arc);
        }
    }
    invariant_for_all(&arc, mats).then_some(arc)
}

/// Looks for a closed arc of length `< π` mapped into itself by every atom.
pub fn detect_cone(mu: &StepMeasure) -> Result<ConeDetection> {
    mu.require_dim2()?;
    let mats = mu.mats2();
    for cand in [Arc::new(0.0, FRAC_PI_2), Arc::new(FRAC_PI_2, FRAC_PI_2)] {
        if invariant_for_all(&cand, mats) {
            return Ok(ConeDetection { verdict: ConeVerdict::True, arc: Some(cand), antipodal_w1: None });
        }
    }
    if let Some(arc) = hull_search(mats) {
        return Ok(ConeDetection { verdict: ConeVerdict::True, arc: Some(arc), antipodal_w1: None });
    }
    let s = sample_furstenberg(mu, CirclePoint::from_angle(0.3), 1000, 100_000, BoundarySpace::Circle, 0x5eed)?;
    let anti = s.measure.rotated(PI, 2.0 * PI);
    let w = s.measure.w1_circle(&anti, 2.0 * PI);
    let verdict = if w <= SYMMETRY_TOL { ConeVerdict::False } else { ConeVerdict::Unknown };
    Ok(ConeDetection { verdict, arc: None, antipodal_w1: Some(w) })
}

/// Classification rule for walks attracted to `Λ₁` or `-Λ₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractionParams {
    /// Arc distance counted as close.
    pub eps: f64,
    /// Consecutive close steps needed to decide.
    pub sustain: usize,
}

impl Default for AttractionParams {
    fn default() -> Self {
        Self { eps: 0.05, sustain: 50 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct P1P2 {
    pub p1: f64,
    pub p2: f64,
    /// Monte Carlo standard error of `p1` (equal to that of `p2`).
    pub se: f64,
    /// Walks undecided at the horizon, assigned to the nearer side.
    pub undecided: usize,
}

/// `p₁(x)`, `p₂(x)` for the invariant arc `arc ⊇ Λ₁`.
pub fn estimate_p1p2_in(
    mu: &StepMeasure,
    arc: &Arc,
    x: CirclePoint,
    trials: usize,
    horizon: usize,
    params: AttractionParams,
    seed: u64,
) -> Result<P1P2> {
    mu.require_dim2()?;
    if trials == 0 {
        return Err(Error::Precondition("need at least one trial".into()));
    }
    let anti = arc.antipode();
    let mats = mu.mats2();
    let outcomes = par_trials(seed, trials, |rng, _| {
        let mut y = x;
        let (mut c1, mut c2) = (0usize, 0usize);
        for _ in 0..horizon {
            y = y.act(&mats[mu.sample(rng)]);
            if arc.distance(&y) <= params.eps {
                c1 += 1;
                c2 = 0;
            } else if anti.distance(&y) <= params.eps {
                c2 += 1;
                c1 = 0;
            } else {
                c1 = 0;
                c2 = 0;
            }
            if c1 >= params.sustain {
                return (1.0, false);
            }
            if c2 >= params.sustain {
                return (0.0, false);
            }
        }
        (if arc.distance(&y) <= anti.distance(&y) { 1.0 } else { 0.0 }, true)
    });
    let ones: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let (p1, se) = mean_se(&ones);
    let undecided = outcomes.iter().filter(|o| o.1).count();
    Ok(P1P2 { p1, p2: 1.0 - p1, se, undecided })
}

/// As [`estimate_p1p2_in`], locating the invariant arc first; errors when
/// no invariant cone exists.
pub fn estimate_p1p2(
    mu: &StepMeasure,
    x: CirclePoint,
    trials: usize,
    horizon: usize,
    params: AttractionParams,
    seed: u64,
) -> Result<P1P2> {
    let cone = detect_cone(mu)?;
    let arc = cone.arc.filter(|_| cone.has_cone()).ok_or_else(|| {
        Error::Unsupported("no invariant cone: the circle carries a single stationary measure".into())
    })?;
    estimate_p1p2_in(mu, &arc, x, trials, horizon, params, seed)
}
