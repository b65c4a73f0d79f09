//! Rational linear algebra for configurations given by integer triples.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

pub type Q = BigRational;
/// Square matrix as rows.
pub type QMat = Vec<Vec<Q>>;

pub fn q(v: i64) -> Q {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact copy of a float matrix whose entries are all integers.
pub fn from_integral(m: &nalgebra::DMatrix<f64>) -> Option<QMat> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| {
                    let v = m[(i, j)];
                    (v.fract() == 0.0 && v.abs() < 1e15).then(|| q(v as i64))
                })
                .collect()
        })
        .collect()
}

pub fn flatten(m: &QMat) -> Vec<Q> {
    m.iter().flatten().cloned().collect()
}

/// Rank of the span of `rows`, by fraction-exact Gaussian elimination.
pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut a: Vec<Vec<Q>> = rows.to_vec();
    let ncols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let piv = a[r][c].clone();
        for i in r + 1..a.len() {
            if a[i][c].is_zero() {
                continue;
            }
            let k = &a[i][c] / &piv;
            for j in c..ncols {
                let d = &k * &a[r][j];
                a[i][j] -= d;
            }
        }
        r += 1;
        if r == a.len() {
            break;
        }
    }
    r
}

/// `dim(span A ∩ span B) = rank A + rank B - rank(A ∪ B)`.
pub fn intersection_dim(a: &[Vec<Q>], b: &[Vec<Q>]) -> usize {
    let both: Vec<Vec<Q>> = a.iter().chain(b).cloned().collect();
    rank(a) + rank(b) - rank(&both)
}

/// Whether `M f = rhs` has a solution, `M` given by its rows.
pub fn is_consistent(m: &[Vec<Q>], rhs: &[Q]) -> bool {
    let aug: Vec<Vec<Q>> = m
        .iter()
        .zip(rhs)
        .map(|(row, b)| row.iter().cloned().chain(std::iter::once(b.clone())).collect())
        .collect();
    rank(m) == rank(&aug)
}

/// Whether some `f` satisfies `[x, f] = -2f` and `[e, f] = x` exactly.
pub fn triple_extends(x: &QMat, e: &QMat) -> bool {
    let n = x.len();
    let nn = n * n;
    let mut rows = Vec::with_capacity(2 * nn);
    let mut rhs = Vec::with_capacity(2 * nn);
    for (a, shift, target) in [(x, true, None), (e, false, Some(x))] {
        for r in 0..n {
            for c in 0..n {
                // (aF - Fa)[r][c] (+ 2F[r][c]); unknown F[i][j] sits at i*n + j
                let mut row = vec![Q::zero(); nn];
                for k in 0..n {
                    row[k * n + c] += &a[r][k];
                    row[r * n + k] -= &a[k][c];
                }
                if shift {
                    row[r * n + c] += q(2);
                }
                rows.push(row);
                rhs.push(target.map_or_else(Q::zero, |t| t[r][c].clone()));
            }
        }
    }
    is_consistent(&rows, &rhs)
}

/// Diagonal block `[lo, hi)` of `m` with its trace removed.
pub fn traceless_block(m: &QMat, lo: usize, hi: usize) -> QMat {
    let size = hi - lo;
    let mut tr = Q::zero();
    for i in lo..hi {
        tr += &m[i][i];
    }
    let shift = tr / q(size as i64);
    (lo..hi)
        .map(|i| {
            (lo..hi)
                .map(|j| if i == j { &m[i][j] - &shift } else { m[i][j].clone() })
                .collect()
        })
        .collect()
}

pub fn is_zero_mat(m: &QMat) -> bool {
    m.iter().flatten().all(|v| v.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qm(rows: &[&[i64]]) -> QMat {
        rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect()
    }

    #[test]
    fn rank_of_dependent_rows() {
        let a = qm(&[&[1, 2, 3], &[2, 4, 6], &[0, 1, 1]]);
        assert_eq!(rank(&a), 2);
    }

    #[test]
    fn standard_pair_extends() {
        let x = qm(&[&[1, 0], &[0, -1]]);
        let e = qm(&[&[0, 1], &[0, 0]]);
        assert!(triple_extends(&x, &e));
    }

    #[test]
    fn shifted_pair_does_not_extend() {
        let x = traceless_block(&qm(&[&[2, 0, 0], &[0, 0, 0], &[0, 0, 0]]), 0, 3);
        let e = qm(&[&[0, 1, 0], &[0, 0, 0], &[0, 0, 0]]);
        assert!(!triple_extends(&x, &e));
    }
}
