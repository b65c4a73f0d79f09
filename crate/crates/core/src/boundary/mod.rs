//! Random matrix products acting on the circle and the projective line.

mod furstenberg;

pub use furstenberg::{
    detect_cone, estimate_p1p2, estimate_p1p2_in, sample_furstenberg, stationarity_w1, Arc,
    AttractionParams, BoundarySpace, ConeDetection, ConeVerdict, FurstenbergSample, P1P2,
};

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, Matrix2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circle::CirclePoint;
use crate::error::{Error, Result};
use crate::group::{op_norm2, GroupElement, Normalization};

/// A finitely supported probability measure on a matrix group.
#[derive(Clone, Debug)]
pub struct StepMeasure {
    weights: Vec<f64>,
    atoms: Vec<GroupElement>,
    cumulative: Vec<f64>,
    mats2: Vec<Matrix2<f64>>,
}

/// Serialisable form: weights with matrix rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub weight: f64,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepMeasureSpec {
    pub atoms: Vec<AtomSpec>,
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
}

fn default_normalization() -> Normalization {
    Normalization::PlusMinus
}

impl StepMeasure {
    pub fn new(atoms: Vec<(f64, GroupElement)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        let dim = atoms[0].1.dim();
        let mut weights = Vec::with_capacity(atoms.len());
        let mut elems = Vec::with_capacity(atoms.len());
        for (w, g) in atoms {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
            }
            if g.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: g.dim() });
            }
            weights.push(w);
            elems.push(g);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let mats2 = if dim == 2 { elems.iter().map(|g| g.mat2()).collect() } else { Vec::new() };
        Ok(Self { weights, atoms: elems, cumulative, mats2 })
    }

    pub fn uniform(atoms: Vec<GroupElement>) -> Result<Self> {
        let w = 1.0 / atoms.len() as f64;
        Self::new(atoms.into_iter().map(|g| (w, g)).collect())
    }

    pub fn dirac(g: GroupElement) -> Self {
        Self::new(vec![(1.0, g)]).expect("one atom of weight 1")
    }

    /// Uniform measure on 2×2 matrices given by rows, each rescaled to
    /// `|det| = 1`.
    pub fn uniform_rows(mats: &[[[f64; 2]; 2]]) -> Result<Self> {
        let atoms = mats
            .iter()
            .map(|m| GroupElement::from_rows(&[&m[0], &m[1]]))
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(atoms)
    }

    pub fn from_spec(spec: &StepMeasureSpec) -> Result<Self> {
        let atoms = spec
            .atoms
            .iter()
            .map(|a| {
                let n = a.rows.len();
                let mut m = DMatrix::zeros(n, n);
                for (i, row) in a.rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::NotSquare { rows: n, cols: row.len() });
                    }
                    for (j, v) in row.iter().enumerate() {
                        m[(i, j)] = *v;
                    }
                }
                Ok((a.weight, GroupElement::new(m, spec.normalization)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }

    pub fn to_spec(&self) -> StepMeasureSpec {
        let normalization = self.atoms[0].normalization();
        StepMeasureSpec {
            atoms: self
                .weights
                .iter()
                .zip(&self.atoms)
                .map(|(w, g)| AtomSpec {
                    weight: *w,
                    rows: g.matrix().row_iter().map(|r| r.iter().copied().collect()).collect(),
                })
                .collect(),
            normalization,
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atom(&self, i: usize) -> &GroupElement {
        &self.atoms[i]
    }

    pub fn atoms(&self) -> &[GroupElement] {
        &self.atoms
    }

    /// The atoms as fixed-size matrices; empty unless `dim() == 2`.
    pub fn mats2(&self) -> &[Matrix2<f64>] {
        &self.mats2
    }

    pub fn require_dim2(&self) -> Result<()> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dim() });
        }
        Ok(())
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.atoms.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.atoms.len() - 1)
    }

    pub fn is_deterministic(&self) -> bool {
        self.atoms.len() == 1
    }

    pub fn non_commuting(&self) -> bool {
        for (i, a) in self.atoms.iter().enumerate() {
            for b in &self.atoms[i + 1..] {
                let ab = a.matrix() * b.matrix();
                let ba = b.matrix() * a.matrix();
                if (ab - ba).amax() > 1e-9 {
                    return true;
                }
            }
        }
        false
    }

    /// Heuristic stand-in for Zariski density in `SL_2`: two atoms fail to
    /// commute and some word of length ≤ 2 is hyperbolic.
    pub fn zariski_dense_heuristic(&self) -> bool {
        if self.dim() != 2 || !self.non_commuting() {
            return false;
        }
        let hyperbolic = |m: &Matrix2<f64>| m.trace().abs() > 2.0 + 1e-9 && m.determinant() > 0.0;
        self.mats2.iter().any(hyperbolic)
            || self
                .mats2
                .iter()
                .any(|a| self.mats2.iter().any(|b| hyperbolic(&(a * b))))
    }
}

/// Draw a word of `len` atoms.
pub fn sample_word<R: Rng + ?Sized>(mu: &StepMeasure, len: usize, rng: &mut R) -> Vec<Matrix2<f64>> {
    (0..len).map(|_| mu.mats2()[mu.sample(rng)]).collect()
}

/// A 2×2 product kept at unit scale by exact powers of two, with the
/// discarded exponent tracked separately.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenormProduct {
    m: Matrix2<f64>,
    exp2: i64,
}

impl Default for RenormProduct {
    fn default() -> Self {
        Self::identity()
    }
}

impl RenormProduct {
    pub fn identity() -> Self {
        Self { m: Matrix2::identity(), exp2: 0 }
    }

    /// `self ← g · self`.
    #[inline]
    pub fn left_mul(&mut self, g: &Matrix2<f64>) {
        self.m = g * self.m;
        self.renormalize();
    }

    /// `self ← self · g`.
    #[inline]
    pub fn right_mul(&mut self, g: &Matrix2<f64>) {
        self.m *= g;
        self.renormalize();
    }

    #[inline]
    fn renormalize(&mut self) {
        let a = self.m.amax();
        if a > 0.0 && a.is_finite() {
            let e = a.log2().floor() as i32;
            if e != 0 {
                self.m *= 2f64.powi(-e);
                self.exp2 += e as i64;
            }
        }
    }

    /// The product divided by `2^exponent`.
    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.m
    }

    pub fn exponent(&self) -> i64 {
        self.exp2
    }

    pub fn log_scale(&self) -> f64 {
        self.exp2 as f64 * LN_2
    }

    /// `log ‖product‖` in the operator norm.
    pub fn log_norm(&self) -> f64 {
        op_norm2(&self.m).ln() + self.log_scale()
    }

    /// `log ‖product · v‖`.
    pub fn log_norm_apply(&self, v: &nalgebra::Vector2<f64>) -> f64 {
        (self.m * v).norm().ln() + self.log_scale()
    }
}

/// Attracting direction of a product with its proximality gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitDirection {
    /// Unit vector (or covector), first nonzero coordinate positive.
    pub v: CirclePoint,
    /// `log(s₁/s₂)` of the product's singular values.
    pub log_gap: f64,
    /// False when `s₁/s₂ < 1 + 1e-6`: the direction is not yet trustworthy.
    pub proximal: bool,
}

const PROXIMAL_GAP: f64 = 1e-6;

fn direction_from(m: &Matrix2<f64>, log_top: f64, log_det: f64, left: bool) -> Result<LimitDirection> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let k = if svd.singular_values[0] >= svd.singular_values[1] { 0 } else { 1 };
    let dir = if left { u.column(k).into_owned() } else { vt.row(k).transpose() };
    let v = CirclePoint::from_vec(dir)?.canonical();
    // s₂ = |det| / s₁, which stays accurate when the product is numerically rank one
    let log_gap = 2.0 * log_top - log_det;
    Ok(LimitDirection { v, log_gap, proximal: log_gap >= PROXIMAL_GAP.ln_1p() })
}

fn check_len(len: usize, n: usize) -> Result<()> {
    if n == 0 || n > len {
        return Err(Error::Precondition(format!("need 1 <= n <= {len}, got {n}")));
    }
    Ok(())
}

/// Top left-singular direction of `b[0] · b[1] ⋯ b[n-1]`, where `b[0]` is the
/// most recent step of the past word.
pub fn limit_vector(b: &[Matrix2<f64>], n: usize) -> Result<LimitDirection> {
    check_len(b.len(), n)?;
    let mut p = RenormProduct::identity();
    let mut log_det = 0.0;
    for g in &b[..n] {
        p.right_mul(g);
        log_det += g.determinant().abs().ln();
    }
    direction_from(p.matrix(), p.log_norm(), log_det, true)
}

/// Top right-singular direction of `a[n-1] ⋯ a[1] · a[0]`: the unit form
/// `φ_a` with `‖A v‖ / ‖A‖ → |φ_a(v)|`.
pub fn limit_form(a: &[Matrix2<f64>], n: usize) -> Result<LimitDirection> {
    check_len(a.len(), n)?;
    let mut p = RenormProduct::identity();
    let mut log_det = 0.0;
    for g in &a[..n] {
        p.left_mul(g);
        log_det += g.determinant().abs().ln();
    }
    direction_from(p.matrix(), p.log_norm(), log_det, false)
}

/// `a[n-1] ⋯ a[0]` as a renormalised product.
pub fn forward_product(a: &[Matrix2<f64>], n: usize) -> RenormProduct {
    let mut p = RenormProduct::identity();
    for g in &a[..n] {
        p.left_mul(g);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    #[test]
    fn measure_validation() {
        let g = GroupElement::identity(2);
        assert!(StepMeasure::new(vec![(0.5, g.clone())]).is_err());
        assert!(StepMeasure::new(vec![(1.0, g.clone()), (0.0, g.clone())]).is_err());
        assert!(StepMeasure::new(vec![(0.5, g.clone()), (0.5, GroupElement::identity(3))]).is_err());
        assert!(StepMeasure::new(vec![(1.0, g)]).is_ok());
    }

    #[test]
    fn spec_round_trip() {
        let mu = StepMeasure::uniform_rows(&[[[2.0, 1.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 2.0]]]).unwrap();
        let back = StepMeasure::from_spec(&mu.to_spec()).unwrap();
        assert_eq!(back.mats2(), mu.mats2());
        assert!(mu.zariski_dense_heuristic());
        let rot = StepMeasure::dirac(GroupElement::rotation(1.0));
        assert!(!rot.zariski_dense_heuristic());
    }

    #[test]
    fn renormalised_product_is_exact_for_diagonals() {
        let mut p = RenormProduct::identity();
        let d = Matrix2::new(2.0, 0.0, 0.0, 0.5);
        for _ in 0..2000 {
            p.left_mul(&d);
        }
        assert_eq!(p.exponent(), 2000);
        assert_eq!(p.matrix()[(0, 0)], 1.0);
        assert!((p.log_norm() - 2000.0 * LN_2).abs() < 1e-9);
    }

    #[test]
    fn limit_directions_of_diagonal_words() {
        let d = vec![Matrix2::new(2.0, 0.0, 0.0, 0.5); 20];
        let v = limit_vector(&d, 20).unwrap();
        assert!((v.v.vec() - Vector2::new(1.0, 0.0)).norm() < 1e-12);
        assert!(v.proximal);
        let f = limit_form(&d, 20).unwrap();
        assert!((f.v.vec() - Vector2::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn limit_vector_of_triangular_word() {
        let d = vec![Matrix2::new(2.0, 1.0, 0.0, 0.5); 40];
        let v = limit_vector(&d, 40).unwrap();
        assert!((v.v.vec() - Vector2::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn limit_form_annihilates_contracted_direction() {
        let d = vec![Matrix2::new(2.0, 0.0, 1.0, 0.5); 40];
        let f = limit_form(&d, 40).unwrap();
        assert!(f.v.vec().dot(&Vector2::new(0.0, 1.0)).abs() < 1e-10);
    }

    #[test]
    fn rotations_are_not_proximal() {
        let r = vec![GroupElement::rotation(0.3).mat2(); 10];
        assert!(!limit_vector(&r, 10).unwrap().proximal);
    }
}
