//! Empirical measures, distances between them, and small estimators.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum in a fixed binary-tree order, independent of how the input was
/// produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and its standard error `sd / √n`.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Weighted sample on the line (or on a circle read as `[0, period)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: values.len(), got: weights.len() });
        }
        if values.is_empty() {
            return Err(Error::Precondition("empty sample".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("weights must be non-negative and values finite".into()));
        }
        let total = pairwise_sum(&weights);
        if !(total > 0.0) {
            return Err(Error::Precondition("zero total weight".into()));
        }
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        Ok(Self {
            values: idx.iter().map(|&i| values[i]).collect(),
            weights: idx.iter().map(|&i| weights[i] / total).collect(),
        })
    }

    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let w = vec![1.0; values.len()];
        Self::new(values, w)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted support points.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        let p: Vec<f64> = self.values.iter().zip(&self.weights).map(|(v, w)| v * w).collect();
        pairwise_sum(&p)
    }

    /// Reduce every value modulo `period`.
    pub fn wrapped(&self, period: f64) -> Self {
        Self::new(self.values.iter().map(|v| v.rem_euclid(period)).collect(), self.weights.clone())
            .expect("same weights")
    }

    /// Shift by `c` modulo `period`.
    pub fn rotated(&self, c: f64, period: f64) -> Self {
        Self::new(
            self.values.iter().map(|v| (v + c).rem_euclid(period)).collect(),
            self.weights.clone(),
        )
        .expect("same weights")
    }

    /// Breakpoints and `F - G` on each interval `[x_i, x_{i+1})`.
    fn cdf_difference(&self, other: &Self) -> (Vec<f64>, Vec<f64>) {
        let (mut i, mut j) = (0, 0);
        let (mut f, mut g) = (0.0, 0.0);
        let mut xs = Vec::with_capacity(self.len() + other.len());
        let mut ds = Vec::with_capacity(self.len() + other.len());
        while i < self.len() || j < other.len() {
            let x = match (self.values.get(i), other.values.get(j)) {
                (Some(&a), Some(&b)) => a.min(b),
                (Some(&a), None) => a,
                (None, Some(&b)) => b,
                (None, None) => unreachable!(),
            };
            while i < self.len() && self.values[i] == x {
                f += self.weights[i];
                i += 1;
            }
            while j < other.len() && other.values[j] == x {
                g += other.weights[j];
                j += 1;
            }
            xs.push(x);
            ds.push(f - g);
        }
        (xs, ds)
    }

    /// Kolmogorov–Smirnov distance `sup |F - G|`.
    pub fn ks(&self, other: &Self) -> f64 {
        let (_, ds) = self.cdf_difference(other);
        ds.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Wasserstein-1 distance on the line, `∫ |F - G|`.
    pub fn w1_line(&self, other: &Self) -> f64 {
        let (xs, ds) = self.cdf_difference(other);
        let parts: Vec<f64> = xs.windows(2).zip(&ds).map(|(w, d)| (w[1] - w[0]) * d.abs()).collect();
        pairwise_sum(&parts)
    }

    /// Wasserstein-1 distance on the circle `R / period Z`:
    /// `min_c ∫ |F - G - c|`, attained at a weighted median of `F - G`.
    pub fn w1_circle(&self, other: &Self, period: f64) -> f64 {
        let a = self.wrapped(period);
        let b = other.wrapped(period);
        let (mut xs, mut ds) = a.cdf_difference(&b);
        // the interval before the first point carries difference 0
        xs.insert(0, 0.0);
        ds.insert(0, 0.0);
        xs.push(period);
        let segs: Vec<(f64, f64)> = ds.iter().enumerate().map(|(k, &d)| (d, xs[k + 1] - xs[k])).collect();
        let mut sorted = segs.clone();
        sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut acc = 0.0;
        let mut c = sorted.last().map(|p| p.0).unwrap_or(0.0);
        for &(d, len) in &sorted {
            acc += len;
            if acc >= period / 2.0 {
                c = d;
                break;
            }
        }
        let parts: Vec<f64> = segs.iter().map(|(d, len)| (d - c).abs() * len).collect();
        pairwise_sum(&parts)
    }

    /// Writes `value,weight` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "value,weight")?;
        for (v, p) in self.values.iter().zip(&self.weights) {
            writeln!(w, "{v},{p}")?;
        }
        Ok(())
    }
}

/// Fixed-bin histogram on `[lo, hi]`; values outside are clamped into the
/// end bins.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<f64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(hi > lo && bins > 0);
        Self { lo, hi, counts: vec![0.0; bins] }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn bin_of(&self, x: f64) -> usize {
        let b = ((x - self.lo) / (self.hi - self.lo) * self.bins() as f64).floor();
        if b.is_nan() || b < 0.0 {
            0
        } else {
            (b as usize).min(self.bins() - 1)
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64, w: f64) {
        let b = self.bin_of(x);
        self.counts[b] += w;
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.bins(), other.bins());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.counts)
    }

    /// Cumulative distribution at the right edge of each bin.
    pub fn cdf(&self) -> Vec<f64> {
        let t = self.total();
        let mut acc = 0.0;
        self.counts
            .iter()
            .map(|c| {
                acc += c;
                acc / t
            })
            .collect()
    }

    /// KS distance evaluated at bin edges.
    pub fn ks(&self, other: &Self) -> f64 {
        self.cdf()
            .iter()
            .zip(other.cdf())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Upper edges splitting the mass into `k` roughly equal parts.
    pub fn quantile_edges(&self, k: usize) -> Vec<f64> {
        let cdf = self.cdf();
        let width = (self.hi - self.lo) / self.bins() as f64;
        (1..k)
            .map(|q| {
                let target = q as f64 / k as f64;
                let b = cdf.iter().position(|&c| c >= target).unwrap_or(self.bins() - 1);
                self.lo + (b + 1) as f64 * width
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        let width = (self.hi - self.lo) / self.bins() as f64;
        let p: Vec<f64> = self
            .counts
            .iter()
            .enumerate()
            .map(|(b, c)| c * (self.lo + (b as f64 + 0.5) * width))
            .collect();
        pairwise_sum(&p) / self.total()
    }
}

/// Cramér's V of a contingency table; empty rows and columns are dropped.
pub fn cramers_v(table: &[Vec<f64>]) -> f64 {
    let rows: Vec<&Vec<f64>> = table.iter().filter(|r| r.iter().sum::<f64>() > 0.0).collect();
    if rows.is_empty() {
        return 0.0;
    }
    let ncols = rows[0].len();
    let col_tot: Vec<f64> = (0..ncols).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
    let cols: Vec<usize> = (0..ncols).filter(|&j| col_tot[j] > 0.0).collect();
    let (r, c) = (rows.len(), cols.len());
    if r < 2 || c < 2 {
        return 0.0;
    }
    let n: f64 = col_tot.iter().sum();
    let mut chi2 = 0.0;
    for row in &rows {
        let rt: f64 = row.iter().sum();
        for &j in &cols {
            let e = rt * col_tot[j] / n;
            chi2 += (row[j] - e) * (row[j] - e) / e;
        }
    }
    (chi2 / (n * (r.min(c) - 1) as f64)).sqrt()
}

/// Ordinary least squares `y ≈ intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::Precondition("need at least two points for a fit".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499500.0);
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample sd = sqrt(5/3)
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn ks_and_w1_of_shifted_points() {
        let a = EmpiricalMeasure::uniform(vec![0.0, 1.0]).unwrap();
        let b = EmpiricalMeasure::uniform(vec![0.5, 1.5]).unwrap();
        assert!((a.ks(&b) - 0.5).abs() < 1e-15);
        assert!((a.w1_line(&b) - 0.5).abs() < 1e-15);
        assert_eq!(a.ks(&a), 0.0);
    }

    #[test]
    fn circle_w1_uses_the_short_way_round() {
        // masses at 0.1 and 0.9 on a circle of length 1 are 0.2 apart
        let a = EmpiricalMeasure::uniform(vec![0.1]).unwrap();
        let b = EmpiricalMeasure::uniform(vec![0.9]).unwrap();
        assert!((a.w1_circle(&b, 1.0) - 0.2).abs() < 1e-12);
        assert!((a.w1_line(&b) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn circle_w1_of_uniform_grid_rotation() {
        let n = 100;
        let a = EmpiricalMeasure::uniform((0..n).map(|i| i as f64 / n as f64).collect()).unwrap();
        let b = a.rotated(0.5 / n as f64, 1.0);
        assert!((a.w1_circle(&b, 1.0) - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn histogram_ks_and_quantiles() {
        let mut h = Histogram::new(0.0, 1.0, 10);
        for i in 0..100 {
            h.add(i as f64 / 100.0, 1.0);
        }
        assert_eq!(h.total(), 100.0);
        let e = h.quantile_edges(2);
        assert!((e[0] - 0.5).abs() < 1e-12);
        let mut g = Histogram::new(0.0, 1.0, 10);
        g.add(0.05, 1.0);
        assert!((h.ks(&g) - 0.9).abs() < 1e-12);
        h.add(5.0, 1.0);
        assert_eq!(h.counts[9], 11.0);
    }

    #[test]
    fn cramers_v_extremes() {
        assert!(cramers_v(&[vec![10.0, 10.0], vec![5.0, 5.0]]) < 1e-12);
        assert!((cramers_v(&[vec![10.0, 0.0], vec![0.0, 10.0]]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12 && (f.intercept - 3.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }
}
