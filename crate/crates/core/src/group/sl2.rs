//! Irreducible representations of `SL_2`, `sl_2`-triples and their
//! integration to group morphisms.
//!
//! Basis convention: `Sym^{n-1}(R^2)` is realised on homogeneous polynomials
//! of degree `n-1` with the monomial basis `x^{n-1}, x^{n-2}y, ..., y^{n-1}`,
//! so the weight string `n-1, n-3, ..., 1-n` is read top to bottom.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::{bracket, GroupElement};
use crate::error::{Error, Result};

/// Residual threshold separating extendable pairs from obstructed ones.
pub const DEFAULT_EXTENSION_TOL: f64 = 1e-6;

/// Matrix of `g` acting on degree-`(n-1)` binary forms via
/// `x -> ax + cy`, `y -> bx + dy`.
pub fn sym_power(g: &GroupElement, n: usize) -> DMatrix<f64> {
    sym_power2(&g.mat2(), n)
}

pub fn sym_power2(g: &Matrix2<f64>, n: usize) -> DMatrix<f64> {
    assert!(n >= 1, "sym_power needs n >= 1");
    let d = n - 1;
    let (a, b, c, dd) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    // powers of the two linear forms, as coefficient vectors in x^{k-j} y^j
    let pow = |p: f64, q: f64| {
        let mut out = vec![vec![1.0]];
        for k in 1..=d {
            let prev = &out[k - 1];
            let mut next = vec![0.0; k + 1];
            for (j, &v) in prev.iter().enumerate() {
                next[j] += v * p;
                next[j + 1] += v * q;
            }
            out.push(next);
        }
        out
    };
    let u = pow(a, c);
    let v = pow(b, dd);
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let (p, q) = (&u[d - j], &v[j]);
        for (i1, &x1) in p.iter().enumerate() {
            for (i2, &x2) in q.iter().enumerate() {
                m[(i1 + i2, j)] += x1 * x2;
            }
        }
    }
    m
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `SL_2 -> GL_n` given by a matrix rule.
#[derive(Clone)]
pub struct Representation {
    dim: usize,
    kind: RepKind,
}

#[derive(Clone)]
enum RepKind {
    Sym,
    /// `c · Sym · c^{-1}`.
    Conjugated { c: DMatrix<f64>, c_inv: DMatrix<f64> },
    Morphism(TripleMorphism),
}

impl std::fmt::Debug for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            RepKind::Sym => "sym",
            RepKind::Conjugated { .. } => "conjugated-sym",
            RepKind::Morphism(_) => "triple-morphism",
        };
        write!(f, "Representation({kind}, dim {})", self.dim)
    }
}

impl Representation {
    pub fn standard() -> Self {
        Self::sym(2)
    }

    pub fn sym(n: usize) -> Self {
        assert!(n >= 1);
        Self { dim: n, kind: RepKind::Sym }
    }

    /// The irreducible representation in the basis where [`principal_triple`]
    /// is its derivative: `diag(0!, 1!, ...) · Sym · diag(0!, 1!, ...)^{-1}`.
    pub fn principal(n: usize) -> Self {
        let c = DMatrix::from_diagonal(&DVector::from_fn(n, |j, _| factorial(j)));
        let c_inv = DMatrix::from_diagonal(&DVector::from_fn(n, |j, _| 1.0 / factorial(j)));
        Self { dim: n, kind: RepKind::Conjugated { c, c_inv } }
    }

    pub fn from_morphism(m: TripleMorphism) -> Self {
        Self { dim: m.dim(), kind: RepKind::Morphism(m) }
    }

    pub fn source_dim(&self) -> usize {
        2
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, g: &GroupElement) -> Result<DMatrix<f64>> {
        if g.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: g.dim() });
        }
        self.eval2(&g.mat2())
    }

    pub fn eval2(&self, g: &Matrix2<f64>) -> Result<DMatrix<f64>> {
        match &self.kind {
            RepKind::Sym => Ok(sym_power2(g, self.dim)),
            RepKind::Conjugated { c, c_inv } => Ok(c * sym_power2(g, self.dim) * c_inv),
            RepKind::Morphism(m) => m.eval2(g),
        }
    }

    /// Norm invariant under `rho(SO(2))`; for `Sym^d` the monomial
    /// `x^{d-j}y^j` has squared weight `1/binom(d, j)`.
    pub fn k_norm(&self, v: &DVector<f64>) -> Result<f64> {
        let d = self.dim - 1;
        let sym_norm = |w: &DVector<f64>| {
            w.iter()
                .enumerate()
                .map(|(j, c)| c * c / binomial(d, j))
                .sum::<f64>()
                .sqrt()
        };
        match &self.kind {
            RepKind::Sym => Ok(sym_norm(v)),
            RepKind::Conjugated { c_inv, .. } => Ok(sym_norm(&(c_inv * v))),
            RepKind::Morphism(_) => Err(Error::Unsupported(
                "no invariant norm recorded for a triple morphism".into(),
            )),
        }
    }

    /// Vector spanning the highest-weight line over the direction `u`,
    /// i.e. the image of `u^{n-1}`.
    pub fn highest_weight_lift(&self, u: &Vector2<f64>) -> Result<DVector<f64>> {
        let d = self.dim - 1;
        let sym = DVector::from_fn(self.dim, |j, _| {
            binomial(d, j) * u[0].powi((d - j) as i32) * u[1].powi(j as i32)
        });
        match &self.kind {
            RepKind::Sym => Ok(sym),
            RepKind::Conjugated { c, .. } => Ok(c * sym),
            RepKind::Morphism(_) => Err(Error::Unsupported(
                "no highest-weight lift recorded for a triple morphism".into(),
            )),
        }
    }
}

/// `(e, x, f)` with `[x,e] = 2e`, `[x,f] = -2f`, `[e,f] = x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sl2Triple {
    pub e: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub f: DMatrix<f64>,
}

impl Sl2Triple {
    pub fn new(e: DMatrix<f64>, x: DMatrix<f64>, f: DMatrix<f64>) -> Result<Self> {
        let t = Self { e, x, f };
        let r = t.residual()?;
        if r > 1e-9 * (1.0 + t.scale()) {
            return Err(Error::Precondition(format!("bracket relations fail (residual {r:e})")));
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    fn scale(&self) -> f64 {
        self.e.amax().max(self.x.amax()).max(self.f.amax())
    }

    /// Largest entrywise violation of the three bracket relations.
    pub fn residual(&self) -> Result<f64> {
        let r1 = (bracket(&self.x, &self.e)? - 2.0 * &self.e).amax();
        let r2 = (bracket(&self.x, &self.f)? + 2.0 * &self.f).amax();
        let r3 = (bracket(&self.e, &self.f)? - &self.x).amax();
        Ok(r1.max(r2).max(r3))
    }

    /// Whether every entry is an integer, so brackets can be checked exactly.
    pub fn is_integral(&self) -> bool {
        [&self.e, &self.x, &self.f]
            .iter()
            .all(|m| m.iter().all(|v| v.fract() == 0.0 && v.abs() < 1e15))
    }

    pub fn standard() -> Self {
        principal_triple(2).expect("m = 2 is valid")
    }

    /// Conjugate every element by `p`.
    pub fn conjugate(&self, p: &DMatrix<f64>) -> Result<Self> {
        let p_inv = p.clone().try_inverse().ok_or(Error::Singular { det: p.determinant() })?;
        Ok(Self {
            e: p * &self.e * &p_inv,
            x: p * &self.x * &p_inv,
            f: p * &self.f * &p_inv,
        })
    }
}

/// Integer matrices `(e, x, f)` of the principal triple in dimension `m`.
pub fn principal_triple_int(m: usize) -> Result<[DMatrix<i64>; 3]> {
    if m < 2 {
        return Err(Error::Precondition(format!("principal triple needs m >= 2, got {m}")));
    }
    let d = (m - 1) as i64;
    let mut e = DMatrix::<i64>::zeros(m, m);
    let mut x = DMatrix::<i64>::zeros(m, m);
    let mut f = DMatrix::<i64>::zeros(m, m);
    for j in 0..m {
        x[(j, j)] = d - 2 * j as i64;
        if j + 1 < m {
            e[(j, j + 1)] = 1;
            f[(j + 1, j)] = (j as i64 + 1) * (d - j as i64);
        }
    }
    Ok([e, x, f])
}

/// `x = diag(m-1, m-3, ...)`, `e` the unit superdiagonal, `f` the
/// subdiagonal `(m-1), 2(m-2), 3(m-3), ...`.
pub fn principal_triple(m: usize) -> Result<Sl2Triple> {
    let [e, x, f] = principal_triple_int(m)?;
    let conv = |a: DMatrix<i64>| a.map(|v| v as f64);
    Ok(Sl2Triple { e: conv(e), x: conv(x), f: conv(f) })
}

/// Outcome of completing a pair `(x, e)` to an `sl_2`-triple.
#[derive(Clone, Debug, PartialEq)]
pub enum TripleExtension {
    Extended { f: DMatrix<f64>, residual: f64 },
    Obstructed { residual: f64 },
}

impl TripleExtension {
    pub fn residual(&self) -> f64 {
        match self {
            Self::Extended { residual, .. } | Self::Obstructed { residual } => *residual,
        }
    }

    pub fn f(&self) -> Option<&DMatrix<f64>> {
        match self {
            Self::Extended { f, .. } => Some(f),
            Self::Obstructed { .. } => None,
        }
    }

    pub fn is_extended(&self) -> bool {
        matches!(self, Self::Extended { .. })
    }
}

/// Least-squares solve of `[x,f] = -2f`, `[e,f] = x` for `f`.
///
/// The residual is the Euclidean norm of the stacked defect
/// `([x,f] + 2f, [e,f] - x)` at the minimiser.
pub fn extend_sl2_triple(x: &DMatrix<f64>, e: &DMatrix<f64>, tol: f64) -> Result<TripleExtension> {
    let n = x.nrows();
    if !x.is_square() || e.shape() != x.shape() {
        return Err(Error::DimensionMismatch { expected: n, got: e.nrows() });
    }
    let pre = (bracket(x, e)? - 2.0 * e).amax();
    if pre > tol {
        return Err(Error::Precondition(format!("[x,e] != 2e (defect {pre:e})")));
    }
    let nn = n * n;
    // vec(AF - FA) = (I⊗A - Aᵀ⊗I) vec F in column-major order
    let mut a = DMatrix::<f64>::zeros(2 * nn, nn);
    for col_j in 0..n {
        for col_i in 0..n {
            let unknown = col_i + n * col_j; // F[(col_i, col_j)]
            for r in 0..n {
                // (xF)[(r, col_j)] += x[(r, col_i)]
                a[(r + n * col_j, unknown)] += x[(r, col_i)];
                a[(nn + r + n * col_j, unknown)] += e[(r, col_i)];
                // (Fx)[(col_i, c)] -= x[(col_j, c)]
                a[(col_i + n * r, unknown)] -= x[(col_j, r)];
                a[(nn + col_i + n * r, unknown)] -= e[(col_j, r)];
            }
            a[(unknown, unknown)] += 2.0;
        }
    }
    let mut b = DVector::<f64>::zeros(2 * nn);
    for j in 0..n {
        for i in 0..n {
            b[nn + i + n * j] = x[(i, j)];
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let sol = svd
        .solve(&b, 1e-10 * smax.max(1.0))
        .map_err(|m| Error::Decomposition(m.to_string()))?;
    let residual = (&a * &sol - &b).norm();
    if residual <= tol {
        let f = DMatrix::from_column_slice(n, n, sol.as_slice());
        Ok(TripleExtension::Extended { f, residual })
    } else {
        Ok(TripleExtension::Obstructed { residual })
    }
}

/// The group morphism `SL_2 -> SL_n` integrating an `sl_2`-triple.
///
/// Evaluation uses `g = [[1,0],[c/a,1]] · diag(a, 1/a) · [[1,b/a],[0,1]]`
/// and the exponentials of `f`, `x`, `e`.
#[derive(Clone)]
pub struct TripleMorphism {
    triple: Arc<Sl2Triple>,
    minus_one: DMatrix<f64>,
    /// `e^k / k!` and `f^k / k!` for `k < n`; both are nilpotent.
    e_pows: Arc<Vec<DMatrix<f64>>>,
    f_pows: Arc<Vec<DMatrix<f64>>>,
    x_diag: Option<DVector<f64>>,
}

fn scaled_powers(m: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = m.nrows();
    let mut out = vec![DMatrix::identity(n, n)];
    for k in 1..n {
        let next = &out[k - 1] * m / k as f64;
        out.push(next);
    }
    out
}

/// `exp(c·m)` from the scaled powers of a nilpotent `m`.
fn exp_nilpotent(pows: &[DMatrix<f64>], c: f64) -> DMatrix<f64> {
    let mut acc = pows[0].clone();
    let mut ck = 1.0;
    for p in &pows[1..] {
        ck *= c;
        acc += p * ck;
    }
    acc
}

impl TripleMorphism {
    pub fn new(triple: Sl2Triple) -> Self {
        let minus_one = ((&triple.f - &triple.e) * PI).exp();
        let x = &triple.x;
        let is_diag = (0..x.nrows()).all(|i| (0..x.ncols()).all(|j| i == j || x[(i, j)] == 0.0));
        let x_diag = is_diag.then(|| x.diagonal());
        Self {
            e_pows: Arc::new(scaled_powers(&triple.e)),
            f_pows: Arc::new(scaled_powers(&triple.f)),
            triple: Arc::new(triple),
            minus_one,
            x_diag,
        }
    }

    pub fn dim(&self) -> usize {
        self.triple.dim()
    }

    pub fn triple(&self) -> &Sl2Triple {
        &self.triple
    }

    pub fn eval(&self, g: &GroupElement) -> Result<DMatrix<f64>> {
        if g.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: g.dim() });
        }
        self.eval2(&g.mat2())
    }

    /// `g` must have determinant `+1`.
    pub fn eval2(&self, g: &Matrix2<f64>) -> Result<DMatrix<f64>> {
        let det = g.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!("morphism needs det +1, got {det}")));
        }
        let (a, b) = (g[(0, 0)], g[(0, 1)]);
        if a.abs() >= b.abs() {
            return self.eval_ldu(g);
        }
        // shift by a lower unipotent so the pivot is large
        let s = -b.signum();
        let l_inv = Matrix2::new(1.0, 0.0, -s, 1.0);
        let head = self.eval_ldu(&(g * l_inv))?;
        Ok(head * exp_nilpotent(&self.f_pows, s))
    }

    fn eval_ldu(&self, g: &Matrix2<f64>) -> Result<DMatrix<f64>> {
        let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(1, 0)]);
        if a < 0.0 {
            return Ok(&self.minus_one * self.eval_ldu(&(-g))?);
        }
        if a == 0.0 {
            return Err(Error::Decomposition("zero pivot in LDU factorisation".into()));
        }
        let lower = exp_nilpotent(&self.f_pows, c / a);
        let upper = exp_nilpotent(&self.e_pows, b / a);
        let la = a.ln();
        Ok(match &self.x_diag {
            // scale the columns of `lower` instead of forming the diagonal
            Some(d) => {
                let mut ld = lower;
                for (j, mut col) in ld.column_iter_mut().enumerate() {
                    col *= (d[j] * la).exp();
                }
                ld * upper
            }
            None => lower * (&self.triple.x * la).exp() * upper,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(n: usize, rows: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, rows)
    }

    #[test]
    fn sym_power_standard_is_identity_map() {
        let g = GroupElement::from_rows(&[&[2.0, 1.0], &[3.0, 2.0]]).unwrap();
        assert_eq!(sym_power(&g, 2), g.matrix().clone());
        assert_eq!(sym_power(&g, 1), DMatrix::identity(1, 1));
    }

    #[test]
    fn sym_power_diagonal_weight_string() {
        let t: f64 = 1.7;
        let g = GroupElement::from_mat2(Matrix2::new(t, 0.0, 0.0, 1.0 / t)).unwrap();
        let s = sym_power(&g, 3);
        assert_abs_diff_eq!(s, mat(3, &[t * t, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0 / (t * t)]), epsilon = 1e-14);
    }

    #[test]
    fn sym_power_quarter_turn_by_substitution() {
        // rotation by π/2 sends x -> y, y -> -x: x² -> y², xy -> -xy, y² -> x²
        let s = sym_power(&GroupElement::rotation(PI / 2.0), 3);
        assert_abs_diff_eq!(s, mat(3, &[0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn principal_triple_small_cases() {
        let t2 = principal_triple(2).unwrap();
        assert_eq!(t2.e, mat(2, &[0.0, 1.0, 0.0, 0.0]));
        assert_eq!(t2.x, mat(2, &[1.0, 0.0, 0.0, -1.0]));
        assert_eq!(t2.f, mat(2, &[0.0, 0.0, 1.0, 0.0]));
        let t3 = principal_triple(3).unwrap();
        assert_eq!(t3.x, DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0, -2.0])));
        assert_eq!((t3.f[(1, 0)], t3.f[(2, 1)]), (2.0, 2.0));
        let t4 = principal_triple(4).unwrap();
        assert_eq!((t4.f[(1, 0)], t4.f[(2, 1)], t4.f[(3, 2)]), (3.0, 4.0, 3.0));
        assert!(principal_triple(1).is_err());
    }

    #[test]
    fn principal_brackets_exact_in_integers() {
        for m in 2..=8 {
            let [e, x, f] = principal_triple_int(m).unwrap();
            assert_eq!(&x * &e - &e * &x, &e * 2);
            assert_eq!(&x * &f - &f * &x, &f * -2);
            assert_eq!(&e * &f - &f * &e, x);
        }
    }

    #[test]
    fn extension_of_standard_pair() {
        let t = Sl2Triple::standard();
        let ext = extend_sl2_triple(&t.x, &t.e, DEFAULT_EXTENSION_TOL).unwrap();
        assert_abs_diff_eq!(ext.f().unwrap().clone(), t.f, epsilon = 1e-12);
    }

    #[test]
    fn extension_reproduces_principal_f() {
        for m in 2..=8 {
            let t = principal_triple(m).unwrap();
            let ext = extend_sl2_triple(&t.x, &t.e, DEFAULT_EXTENSION_TOL).unwrap();
            assert!(ext.residual() < 1e-10, "m = {m}: {}", ext.residual());
            assert_abs_diff_eq!(ext.f().unwrap().clone(), t.f, epsilon = 1e-9);
        }
    }

    #[test]
    fn obstructed_block_pair() {
        // traceless block of x = diag(2,0,0) with e = E12: the weights of e do
        // not fit any triple, the stacked least-squares defect is √(2/3)
        let x = mat(3, &[4.0 / 3.0, 0.0, 0.0, 0.0, -2.0 / 3.0, 0.0, 0.0, 0.0, -2.0 / 3.0]);
        let e = super::super::elementary(3, 0, 1);
        let ext = extend_sl2_triple(&x, &e, DEFAULT_EXTENSION_TOL).unwrap();
        assert!(!ext.is_extended());
        assert_abs_diff_eq!(ext.residual(), 0.816496580927726, epsilon = 1e-12);
    }

    #[test]
    fn extension_checks_precondition() {
        let x = mat(2, &[1.0, 0.0, 0.0, -1.0]);
        let e = mat(2, &[0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(extend_sl2_triple(&x, &e, 1e-6), Err(Error::Precondition(_))));
    }

    #[test]
    fn morphism_of_standard_triple_is_identity_map() {
        let m = TripleMorphism::new(Sl2Triple::standard());
        for g in [
            Matrix2::<f64>::new(2.0, 1.0, 1.0, 1.0),
            Matrix2::new(-0.5, 3.0, -1.0, 4.0),
            Matrix2::new(0.0, -1.0, 1.0, 0.0),
            Matrix2::new(1e-3, 2.0, -0.5, 1e-3f64),
        ] {
            let g = g / g.determinant().sqrt();
            let got = m.eval2(&g).unwrap();
            assert_abs_diff_eq!(got, DMatrix::from_fn(2, 2, |i, j| g[(i, j)]), epsilon = 1e-10);
        }
    }

    #[test]
    fn principal_morphism_matches_conjugated_sym() {
        for n in 2..=5 {
            let m = TripleMorphism::new(principal_triple(n).unwrap());
            let rep = Representation::principal(n);
            for g in [Matrix2::<f64>::new(2.0, 1.0, 1.0, 1.0), Matrix2::new(-0.3, -2.0, 0.5, 0.0)] {
                let g = g / g.determinant().sqrt();
                assert_abs_diff_eq!(m.eval2(&g).unwrap(), rep.eval2(&g).unwrap(), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn k_norm_is_rotation_invariant() {
        for n in 1..=6 {
            let rep = Representation::sym(n);
            let v = DVector::from_fn(n, |j, _| (j as f64 * 0.7).sin() + 0.3);
            let r = rep.eval(&GroupElement::rotation(0.83)).unwrap();
            assert_abs_diff_eq!(rep.k_norm(&(r * &v)).unwrap(), rep.k_norm(&v).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn highest_weight_lift_is_equivariant() {
        let rep = Representation::principal(4);
        let g = Matrix2::new(2.0, 1.0, 1.0, 1.0);
        let u = Vector2::new(0.6, 0.8);
        let lhs = rep.eval2(&g).unwrap() * rep.highest_weight_lift(&u).unwrap();
        let rhs = rep.highest_weight_lift(&(g * u)).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }
}
