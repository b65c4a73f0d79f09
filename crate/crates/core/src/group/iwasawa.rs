use nalgebra::{DMatrix, Matrix2};

use super::GroupElement;
use crate::error::{Error, Result};

/// Frobenius condition number above which the decomposition is refused.
const MAX_CONDITION: f64 = 1e12;

/// `g = k · a · nu` with `k` orthogonal, `a` positive diagonal and `nu`
/// unipotent upper triangular.
///
/// `k` has determinant `+1` whenever `det g > 0`; for elements of `SL_n^±`
/// with negative determinant it is a reflection, since `a > 0` and
/// `det nu = 1` force `det k = det g`.
#[derive(Clone, Debug, PartialEq)]
pub struct IwasawaFactors {
    pub k: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub nu: DMatrix<f64>,
}

impl IwasawaFactors {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.k * (&self.a * &self.nu)
    }

    /// Diagonal entries of `a`.
    pub fn a_diag(&self) -> Vec<f64> {
        (0..self.a.nrows()).map(|i| self.a[(i, i)]).collect()
    }
}

/// Iwasawa decomposition by modified Gram–Schmidt on the columns, taking
/// every pivot positive.
pub fn iwasawa_decompose(g: &GroupElement) -> Result<IwasawaFactors> {
    decompose_matrix(g.matrix())
}

pub(crate) fn decompose_matrix(g: &DMatrix<f64>) -> Result<IwasawaFactors> {
    let n = g.nrows();
    let mut q = g.clone();
    let mut r = DMatrix::<f64>::zeros(n, n);
    let scale = g.amax().max(f64::MIN_POSITIVE);
    for j in 0..n {
        for i in 0..j {
            let rij = q.column(i).dot(&q.column(j));
            r[(i, j)] = rij;
            let qi = q.column(i).clone_owned();
            q.column_mut(j).axpy(-rij, &qi, 1.0);
        }
        let norm = q.column(j).norm();
        if !(norm > 1e-14 * scale) {
            return Err(Error::Decomposition(format!("column {j} is linearly dependent")));
        }
        r[(j, j)] = norm;
        q.column_mut(j).unscale_mut(norm);
    }
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Decomposition("triangular factor not invertible".into()))?;
    let cond = r.norm() * r_inv.norm();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Decomposition(format!("condition number {cond:e} exceeds {MAX_CONDITION:e}")));
    }
    let a = DMatrix::from_diagonal(&r.diagonal());
    let mut nu = r;
    for i in 0..n {
        let d = a[(i, i)];
        for j in i..n {
            nu[(i, j)] /= d;
        }
    }
    Ok(IwasawaFactors { k: q, a, nu })
}

/// Allocation-free 2×2 variant returning `(k, (a₁, a₂), n₁₂)`.
pub fn iwasawa2(g: &Matrix2<f64>) -> (Matrix2<f64>, (f64, f64), f64) {
    let (c0x, c0y) = (g[(0, 0)], g[(1, 0)]);
    let a1 = c0x.hypot(c0y);
    let (q0x, q0y) = (c0x / a1, c0y / a1);
    let (c1x, c1y) = (g[(0, 1)], g[(1, 1)]);
    let r12 = q0x * c1x + q0y * c1y;
    let (vx, vy) = (c1x - r12 * q0x, c1y - r12 * q0y);
    let a2 = vx.hypot(vy);
    let k = Matrix2::new(q0x, vx / a2, q0y, vy / a2);
    (k, (a1, a2), r12 / a1)
}
