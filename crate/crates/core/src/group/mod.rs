//! Matrix-group arithmetic for `SL_n`, `SL_n^±` and `PGL_n` realisations.

mod iwasawa;
mod sl2;

pub use iwasawa::{iwasawa2, iwasawa_decompose, IwasawaFactors};
pub use sl2::{
    extend_sl2_triple, principal_triple, principal_triple_int, sym_power, Representation,
    Sl2Triple, TripleExtension, TripleMorphism, DEFAULT_EXTENSION_TOL,
};

use std::fmt;
use std::ops::Mul;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries below this (relative to the largest entry) count as zero when
/// canonicalising projective representatives.
const ZERO_REL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `det = +1`.
    Special,
    /// `det = ±1`.
    PlusMinus,
    /// Projective class; representative has `|det| = 1` and its first
    /// nonzero entry of the first column is positive.
    Projective,
}

/// An `n×n` real matrix with normalised determinant.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    m: DMatrix<f64>,
    norm: Normalization,
}

impl GroupElement {
    /// Rescales `m` to `|det| = 1` and applies the requested normalisation.
    pub fn new(m: DMatrix<f64>, norm: Normalization) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let n = m.nrows();
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let det = m.determinant();
        let scale = m.amax().max(f64::MIN_POSITIVE);
        if !det.is_finite() || det.abs() <= 1e-300 || det.abs() < (1e-13 * scale).powi(n as i32) {
            return Err(Error::Singular { det });
        }
        let mut m = m * det.abs().powf(-1.0 / n as f64);
        match norm {
            Normalization::Special => {
                if det < 0.0 {
                    if n % 2 == 1 {
                        m.neg_mut();
                    } else {
                        return Err(Error::Precondition(
                            "negative determinant cannot be normalised into SL_n for even n".into(),
                        ));
                    }
                }
            }
            Normalization::PlusMinus => {}
            Normalization::Projective => canonicalize_projective(&mut m),
        }
        Ok(Self { m, norm })
    }

    pub fn special(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m, Normalization::Special)
    }

    pub fn projective(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m, Normalization::Projective)
    }

    /// Builds an element from rows, normalised into `SL_n^±` (or `SL_n`
    /// when the determinant is positive).
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare { rows: n, cols: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Self::new(m, Normalization::PlusMinus)
    }

    pub fn from_mat2(m: Matrix2<f64>) -> Result<Self> {
        Self::new(DMatrix::from_fn(2, 2, |i, j| m[(i, j)]), Normalization::PlusMinus)
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n), norm: Normalization::Special }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { m: DMatrix::from_row_slice(2, 2, &[c, -s, s, c]), norm: Normalization::Special }
    }

    /// `diag(e^{t/2}, e^{-t/2})`.
    pub fn diag_flow(t: f64) -> Self {
        Self {
            m: DMatrix::from_row_slice(2, 2, &[(t / 2.0).exp(), 0.0, 0.0, (-t / 2.0).exp()]),
            norm: Normalization::Special,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn normalization(&self) -> Normalization {
        self.norm
    }

    pub fn det(&self) -> f64 {
        self.m.determinant()
    }

    /// The 2×2 block as a fixed-size matrix. Panics unless `dim() == 2`.
    pub fn mat2(&self) -> Matrix2<f64> {
        assert_eq!(self.dim(), 2, "mat2 on a {}x{} element", self.dim(), self.dim());
        Matrix2::new(self.m[(0, 0)], self.m[(0, 1)], self.m[(1, 0)], self.m[(1, 1)])
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let norm = combine(self.norm, other.norm);
        let mut m = &self.m * &other.m;
        if norm == Normalization::Projective {
            canonicalize_projective(&mut m);
        }
        Ok(Self { m, norm })
    }

    pub fn inverse(&self) -> Self {
        let mut m = self
            .m
            .clone()
            .try_inverse()
            .expect("group elements are invertible by construction");
        if self.norm == Normalization::Projective {
            canonicalize_projective(&mut m);
        }
        Self { m, norm: self.norm }
    }

    /// Same normalisation class, new matrix; used by morphisms whose image
    /// is already unimodular.
    pub fn with_matrix(m: DMatrix<f64>, norm: Normalization) -> Result<Self> {
        Self::new(m, norm)
    }

    pub fn as_projective(&self) -> Self {
        let mut m = self.m.clone();
        canonicalize_projective(&mut m);
        Self { m, norm: Normalization::Projective }
    }

    /// Sup-norm distance; projective elements are compared up to sign.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let plain = (&self.m - &other.m).amax();
        if self.norm == Normalization::Projective || other.norm == Normalization::Projective {
            plain.min((&self.m + &other.m).amax())
        } else {
            plain
        }
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: &GroupElement) -> GroupElement {
        self.try_mul(rhs).expect("dimension mismatch in group product")
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.m)
    }
}

fn combine(a: Normalization, b: Normalization) -> Normalization {
    use Normalization::*;
    match (a, b) {
        (Projective, _) | (_, Projective) => Projective,
        (PlusMinus, _) | (_, PlusMinus) => PlusMinus,
        _ => Special,
    }
}

/// Fixes the sign of a projective representative: the first nonzero entry
/// of the first column becomes positive.
pub fn canonicalize_projective(m: &mut DMatrix<f64>) {
    let tol = ZERO_REL * m.amax();
    let mut pivot = None;
    'outer: for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)].abs() > tol {
                pivot = Some(m[(i, j)]);
                break 'outer;
            }
        }
    }
    if matches!(pivot, Some(p) if p < 0.0) {
        m.neg_mut();
    }
}

/// Lie bracket `ab - ba`.
pub fn bracket(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    Ok(a * b - b * a)
}

/// Elementary matrix `E_{ij}` of size `n`.
pub fn elementary(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

/// Operator 2-norm of a 2×2 matrix, in closed form.
pub fn op_norm2(m: &Matrix2<f64>) -> f64 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    ((s + disc) / 2.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalisation_rescales_determinant() {
        let g = GroupElement::from_rows(&[&[2.0, 0.0], &[0.0, 8.0]]).unwrap();
        assert!((g.det() - 1.0).abs() < 1e-12);
        assert!((g.matrix()[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn special_rejects_negative_det_in_even_dimension() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(GroupElement::special(m).is_err());
        let m3 = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
        let g = GroupElement::special(m3).unwrap();
        assert!((g.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projective_representatives_are_canonical() {
        let a = GroupElement::projective(DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 3.0, 1.0])).unwrap();
        let b = GroupElement::projective(DMatrix::from_row_slice(2, 2, &[1.0, -2.0, -3.0, -1.0])).unwrap();
        assert_eq!(a, b);
        assert!(a.matrix()[(0, 0)] > 0.0);
        let c = GroupElement::projective(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        assert!(c.matrix()[(1, 0)] > 0.0);
    }

    #[test]
    fn singular_input_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(GroupElement::special(m), Err(Error::Singular { .. })));
    }

    #[test]
    fn bracket_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        let b = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        assert_eq!(bracket(&id, &b).unwrap(), DMatrix::zeros(3, 3));

        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let e = elementary(2, 0, 1);
        assert_eq!(bracket(&h, &e).unwrap(), 2.0 * e);

        assert!(bracket(&h, &id).is_err());
    }

    #[test]
    fn bracket_matches_direct_product_difference() {
        // fixed pseudo-random entries; the oracle multiplies entrywise by hand
        let a = DMatrix::from_row_slice(3, 3, &[0.3, -1.2, 2.0, 0.7, 0.1, -0.4, 1.5, 0.9, -2.2]);
        let b = DMatrix::from_row_slice(3, 3, &[-0.8, 0.6, 0.2, 1.1, -1.9, 0.5, 0.4, 0.0, 1.3]);
        let got = bracket(&a, &b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut ab = 0.0;
                let mut ba = 0.0;
                for k in 0..3 {
                    ab += a[(i, k)] * b[(k, j)];
                    ba += b[(i, k)] * a[(k, j)];
                }
                assert!((got[(i, j)] - (ab - ba)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn op_norm_matches_svd() {
        let m = Matrix2::new(2.0, 1.0, -0.5, 3.0);
        let svd = m.svd(false, false);
        assert!((op_norm2(&m) - svd.singular_values.max()).abs() < 1e-12);
    }
}
