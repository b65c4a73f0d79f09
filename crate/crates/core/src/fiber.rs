//! Unimodular lattices as reduced bases, acted on from the left.
//!
//! Columns of the basis matrix are the basis vectors. For `k = 2` the basis
//! is Gauss reduced and put in a canonical form, so two bases of the same
//! lattice reduce to the same matrix (up to rounding). For `k ≥ 3` LLL with
//! `δ = 0.99` is used and the representative is reduced but not canonical.

use std::fmt;

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cocycle::DiagSignValue;
use crate::error::{Error, Result};
use crate::stats::pairwise_sum;

const DET_TOL: f64 = 1e-6;
const RENORM_EVERY: u32 = 100;
const TIE: f64 = 1e-12;
const LLL_DELTA: f64 = 0.99;

#[derive(Clone, PartialEq)]
enum Basis {
    Two(Matrix2<f64>),
    General(DMatrix<f64>),
}

/// A point of `SL_k(R)/SL_k(Z)` (or `PGL`), stored as a reduced basis.
#[derive(Clone)]
pub struct LatticePoint {
    basis: Basis,
    since_renorm: u32,
}

impl PartialEq for LatticePoint {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LatticePoint({:?})", self.rows())
    }
}

fn check_det(det: f64) -> Result<()> {
    if !det.is_finite() || det.abs() < 1e-12 {
        return Err(Error::Singular { det });
    }
    if (det.abs() - 1.0).abs() > DET_TOL {
        return Err(Error::Precondition(format!("lattice basis must have |det| = 1, got {det}")));
    }
    Ok(())
}

impl LatticePoint {
    /// `Z^k`.
    pub fn standard(k: usize) -> Self {
        if k == 2 {
            Self { basis: Basis::Two(Matrix2::identity()), since_renorm: 0 }
        } else {
            Self { basis: Basis::General(DMatrix::identity(k, k)), since_renorm: 0 }
        }
    }

    /// Reduces the lattice spanned by the columns of `b`.
    pub fn reduce(b: &DMatrix<f64>) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::NotSquare { rows: b.nrows(), cols: b.ncols() });
        }
        check_det(b.determinant())?;
        if b.nrows() == 2 {
            Ok(Self { basis: Basis::Two(gauss_reduce(&Matrix2::new(b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]))?), since_renorm: 0 })
        } else {
            Ok(Self { basis: Basis::General(lll_reduce(b)?), since_renorm: 0 })
        }
    }

    pub fn reduce2(b: &Matrix2<f64>) -> Result<Self> {
        check_det(b.determinant())?;
        Ok(Self { basis: Basis::Two(gauss_reduce(b)?), since_renorm: 0 })
    }

    pub fn dim(&self) -> usize {
        match &self.basis {
            Basis::Two(_) => 2,
            Basis::General(m) => m.nrows(),
        }
    }

    pub fn basis(&self) -> DMatrix<f64> {
        match &self.basis {
            Basis::Two(m) => DMatrix::from_fn(2, 2, |i, j| m[(i, j)]),
            Basis::General(m) => m.clone(),
        }
    }

    /// The basis of a 2-dimensional lattice.
    pub fn basis2(&self) -> Option<&Matrix2<f64>> {
        match &self.basis {
            Basis::Two(m) => Some(m),
            Basis::General(_) => None,
        }
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        let b = self.basis();
        (0..b.nrows()).map(|i| b.row(i).iter().copied().collect()).collect()
    }

    /// The lattice `s·L`.
    pub fn act(&self, s: &DMatrix<f64>) -> Result<Self> {
        if s.nrows() != self.dim() || s.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: s.nrows() });
        }
        match &self.basis {
            Basis::Two(_) => self.act2(&Matrix2::new(s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)])),
            Basis::General(b) => {
                let mut m = s * b;
                let count = self.since_renorm + 1;
                let count = if count >= RENORM_EVERY {
                    let det = m.determinant();
                    check_det(det)?;
                    m /= det.abs().powf(1.0 / m.nrows() as f64);
                    0
                } else {
                    count
                };
                Ok(Self { basis: Basis::General(lll_reduce(&m)?), since_renorm: count })
            }
        }
    }

    /// Fast path of [`act`](Self::act) for `k = 2`.
    pub fn act2(&self, s: &Matrix2<f64>) -> Result<Self> {
        let Basis::Two(b) = &self.basis else {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: 2 });
        };
        let mut m = s * b;
        let mut count = self.since_renorm + 1;
        if count >= RENORM_EVERY {
            let det = m.determinant();
            check_det(det)?;
            m /= det.abs().sqrt();
            count = 0;
        }
        Ok(Self { basis: Basis::Two(gauss_reduce(&m)?), since_renorm: count })
    }

    /// `𝒢(r, sign)·L`, i.e. the action of `diag(e^{r/2}, sign·e^{-r/2})`.
    pub fn diag_action(&self, d: DiagSignValue) -> Result<Self> {
        self.act2(&d.matrix())
    }

    /// Length of the first reduced basis vector. For `k = 2` this is the
    /// lattice minimum; for LLL bases it is within `2^{(k-1)/2}` of it.
    pub fn shortest_vector(&self) -> f64 {
        match &self.basis {
            Basis::Two(m) => m.column(0).norm(),
            Basis::General(m) => m.column(0).norm(),
        }
    }

    /// Largest entrywise difference of the reduced bases.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.basis() - other.basis()).amax()
    }
}

impl Serialize for LatticePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(D::Error::custom("lattice basis must be square"));
        }
        let m = DMatrix::from_fn(k, k, |i, j| rows[i][j]);
        LatticePoint::reduce(&m).map_err(D::Error::custom)
    }
}

fn positive(v: &Vector2<f64>) -> Vector2<f64> {
    if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) {
        -v
    } else {
        *v
    }
}

fn det2(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Gauss reduction followed by the canonical choice: `b1` is the shortest
/// vector with positive first nonzero coordinate (smallest angle on ties),
/// `(b1, b2)` is positively oriented and `⟨b1, b2⟩ ∈ (-|b1|²/2, |b1|²/2]`.
fn gauss_reduce(m: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let mut b1: Vector2<f64> = m.column(0).into();
    let mut b2: Vector2<f64> = m.column(1).into();
    if !(b1.iter().chain(b2.iter()).all(|x| x.is_finite())) {
        return Err(Error::Decomposition("non-finite lattice basis".into()));
    }
    let mut iters = 0;
    loop {
        if b2.norm_squared() < b1.norm_squared() {
            std::mem::swap(&mut b1, &mut b2);
        }
        let n1 = b1.norm_squared();
        if n1 == 0.0 {
            return Err(Error::Singular { det: 0.0 });
        }
        let mu = b1.dot(&b2) / n1;
        if mu.abs() > 0.5 {
            b2 -= mu.round() * b1;
        }
        if b2.norm_squared() >= b1.norm_squared() {
            break;
        }
        iters += 1;
        if iters > 10_000 {
            return Err(Error::Decomposition("Gauss reduction did not terminate".into()));
        }
    }

    // ties between several shortest vectors: smallest angle wins
    let n1 = b1.norm_squared();
    let cands = [(b1, b2), (b2, b1), (b1 + b2, b1), (b1 - b2, b1)];
    let mut best = (positive(&b1), b2);
    let mut best_angle = best.0.y.atan2(best.0.x);
    for (c, comp) in cands.iter().skip(1) {
        if c.norm_squared() <= n1 * (1.0 + TIE) {
            let p = positive(c);
            let a = p.y.atan2(p.x);
            if a < best_angle {
                best = (p, *comp);
                best_angle = a;
            }
        }
    }
    let (b1, mut v) = best;
    if det2(&b1, &v) < 0.0 {
        v = -v;
    }
    let n1 = b1.norm_squared();
    let mu = b1.dot(&v) / n1;
    if mu.abs() > 0.5 + TIE {
        v -= mu.round() * b1;
    }
    if b1.dot(&v) / n1 < -0.5 + TIE {
        v += b1;
    }
    Ok(Matrix2::from_columns(&[b1, v]))
}

/// LLL reduction with `δ = 0.99`, then sign fixes: the first vector has
/// positive first nonzero coordinate and the basis is positively oriented.
fn lll_reduce(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = b.ncols();
    let mut m = b.clone();
    let gso = |m: &DMatrix<f64>| {
        let mut bs = m.clone();
        let mut mu = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..i {
                let bj = bs.column(j).clone_owned();
                mu[(i, j)] = m.column(i).dot(&bj) / bj.norm_squared();
                let upd = bs.column(i) - bj * mu[(i, j)];
                bs.set_column(i, &upd);
            }
        }
        (bs, mu)
    };
    let (mut bs, mut mu) = gso(&m);
    let mut i = 1;
    let mut guard = 0usize;
    while i < k {
        for j in (0..i).rev() {
            let q = mu[(i, j)].round();
            if q != 0.0 {
                let upd = m.column(i) - m.column(j) * q;
                m.set_column(i, &upd);
                for l in 0..=j {
                    let d = if l == j { 1.0 } else { mu[(j, l)] };
                    mu[(i, l)] -= q * d;
                }
            }
        }
        let lhs = bs.column(i).norm_squared();
        let rhs = (LLL_DELTA - mu[(i, i - 1)].powi(2)) * bs.column(i - 1).norm_squared();
        if lhs >= rhs {
            i += 1;
        } else {
            m.swap_columns(i, i - 1);
            (bs, mu) = gso(&m);
            i = (i - 1).max(1);
        }
        guard += 1;
        if guard > 100_000 {
            return Err(Error::Decomposition("LLL did not terminate".into()));
        }
    }
    let first = m.column(0).iter().copied().find(|x| *x != 0.0).unwrap_or(1.0);
    if first < 0.0 {
        m.column_mut(0).neg_mut();
    }
    if m.determinant() < 0.0 {
        m.column_mut(k - 1).neg_mut();
    }
    Ok(m)
}

/// Values `f(𝒢(r, 1)·z)` at the midpoints `r = (i + 1/2)·h` of a uniform
/// grid on `[0, t]` with `h ≤ dt`. The orbit is followed incrementally, so
/// for long times it is a pseudo-orbit of the flow. With `signed`, the
/// values along the orbit of `diag(1, -1)·z` are appended.
pub fn diag_orbit_values<F>(z: &LatticePoint, t: f64, dt: f64, signed: bool, f: F) -> Result<Vec<f64>>
where
    F: Fn(&LatticePoint) -> f64,
{
    if !(dt > 0.0 && dt <= 0.05) {
        return Err(Error::Precondition(format!("orbit step must be in (0, 0.05], got {dt}")));
    }
    if !(t >= 1.0) {
        return Err(Error::Precondition(format!("orbit length must be at least 1, got {t}")));
    }
    let steps = (t / dt).ceil() as usize;
    let h = t / steps as f64;
    let half = DiagSignValue::new(h / 2.0, 1).matrix();
    let full = DiagSignValue::new(h, 1).matrix();
    let run = |start: &LatticePoint, out: &mut Vec<f64>| -> Result<()> {
        let mut p = start.act2(&half)?;
        out.push(f(&p));
        for _ in 1..steps {
            p = p.act2(&full)?;
            out.push(f(&p));
        }
        Ok(())
    };
    let mut out = Vec::with_capacity(if signed { 2 * steps } else { steps });
    run(z, &mut out)?;
    if signed {
        run(&z.diag_action(DiagSignValue::new(0.0, -1))?, &mut out)?;
    }
    Ok(out)
}

/// Midpoint-rule approximation of `(1/t)∫₀ᵗ f(𝒢(r, 1)·z) dr`, averaged with
/// the orbit of `diag(1, -1)·z` when `signed`.
pub fn diag_orbit_average<F>(z: &LatticePoint, t: f64, dt: f64, signed: bool, f: F) -> Result<f64>
where
    F: Fn(&LatticePoint) -> f64,
{
    let v = diag_orbit_values(z, t, dt, signed, f)?;
    Ok(pairwise_sum(&v) / v.len() as f64)
}

/// `min(shortest_vector, 1)`, the default bounded fibre observable.
pub fn capped_shortest(z: &LatticePoint) -> f64 {
    z.shortest_vector().min(1.0)
}
