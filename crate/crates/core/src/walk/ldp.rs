use serde::{Deserialize, Serialize};

use crate::boundary::StepMeasure;
use crate::circle::CirclePoint;
use crate::cocycle::iwasawa_fast;
use crate::error::{Error, Result};
use crate::rng::par_trials;
use crate::stats::{linear_fit, LinearFit};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdpRow {
    pub n: usize,
    /// Empirical tail probability, or `3/trials` when no event was seen.
    pub tail: f64,
    pub events: usize,
    /// `tail` is an upper confidence bound rather than an estimate.
    pub upper_bound: bool,
}

/// `P(|σ_n - λn| ≥ ε₁n) ≤ C e^{-rate·n}` as fitted from a table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdpConstants {
    pub c: f64,
    pub rate: f64,
    pub lambda: f64,
    pub eps1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdpTable {
    /// Growth rate of `σ` the deviations are measured from.
    pub lambda: f64,
    pub eps1: f64,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<LdpRow>,
    /// Fit of `log tail` against `n` over rows with at least one event.
    pub fit: Option<LinearFit>,
}

impl LdpTable {
    /// `(C, c)` from the fit, when its slope is negative.
    pub fn constants(&self) -> Option<LdpConstants> {
        let fit = self.fit?;
        (fit.slope < 0.0).then(|| LdpConstants {
            c: fit.intercept.exp(),
            rate: -fit.slope,
            lambda: self.lambda,
            eps1: self.eps1,
        })
    }
}

/// Empirical `μ^{*n}{g : |σ(g, w) - λn| ≥ ε₁n}` for every `n` in `n_grid`,
/// where `σ(g, w) = 2 log ‖g w‖` and `λ` is its growth rate.
pub fn ldp_tail(
    mu: &StepMeasure,
    w: CirclePoint,
    lambda: f64,
    eps1: f64,
    n_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<LdpTable> {
    mu.require_dim2()?;
    if trials == 0 || n_grid.is_empty() {
        return Err(Error::Precondition("need trials and a non-empty n grid".into()));
    }
    if !(eps1 > 0.0) {
        return Err(Error::Precondition(format!("eps1 must be positive, got {eps1}")));
    }
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let n_max = *grid.last().expect("non-empty");
    let mats = mu.mats2();
    let hits: Vec<Vec<bool>> = par_trials(seed, trials, |rng, _| {
        let mut v = w.vec();
        let mut s = 0.0;
        let mut out = Vec::with_capacity(grid.len());
        let mut next = 0;
        for k in 1..=n_max {
            let g = &mats[mu.sample(rng)];
            s += iwasawa_fast(g, &v);
            v = g * v;
            v /= v.norm();
            if k == grid[next] {
                out.push((s - lambda * k as f64).abs() >= eps1 * k as f64);
                next += 1;
            }
        }
        out
    });
    let rows: Vec<LdpRow> = grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let events = hits.iter().filter(|h| h[i]).count();
            if events == 0 {
                LdpRow { n, tail: 3.0 / trials as f64, events, upper_bound: true }
            } else {
                LdpRow { n, tail: events as f64 / trials as f64, events, upper_bound: false }
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| !r.upper_bound).map(|r| (r.n as f64, r.tail.ln())).unzip();
    let fit = linear_fit(&xs, &ys).ok();
    Ok(LdpTable { lambda, eps1, trials, seed, rows, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupElement;

    #[test]
    fn deterministic_measure_has_no_tail() {
        let mu = StepMeasure::dirac(GroupElement::diag_flow(1.0));
        let t = ldp_tail(&mu, CirclePoint::e1(), 1.0, 0.25, &[10, 20, 40], 100, 1).unwrap();
        assert!(t.rows.iter().all(|r| r.upper_bound && r.tail == 0.03));
        assert!(t.fit.is_none());
    }

    #[test]
    fn huge_eps_has_no_tail() {
        let mu = StepMeasure::uniform_rows(&[[[2.0, 1.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 2.0]]]).unwrap();
        // each increment is at most 2 log ‖g‖ < 2
        let t = ldp_tail(&mu, CirclePoint::e1(), 1.9, 4.0, &[5, 10], 200, 2).unwrap();
        assert!(t.rows.iter().all(|r| r.events == 0));
    }
}
