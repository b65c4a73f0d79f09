//! Which case a configuration `(G = SL_n, Q, R₀, H)` falls into.
//!
//! `Q` is the stabiliser of a standard partial flag, so `𝔮` is block upper
//! triangular. `R₀` is the solvable radical of `Q` (unipotent radical plus
//! the centre of the Levi factor), optionally with some simple block factors
//! absorbed. `H` is given by an `sl_2`-triple whose Borel direction
//! `span(x, e)` must lie in `𝔮`.

pub mod exact;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{extend_sl2_triple, Sl2Triple, TripleExtension, DEFAULT_EXTENSION_TOL};

const RANK_TOL: f64 = 1e-9;

/// The flag `R^{k₁} ⊂ … ⊂ R^{k_j} ⊂ R^n` and the choice of `R₀`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagConfig {
    pub n: usize,
    pub dims: Vec<usize>,
    /// Indices of diagonal blocks whose `sl_m` factor is absorbed into `R₀`.
    #[serde(default)]
    pub absorb: Vec<usize>,
}

impl FlagConfig {
    pub fn new(n: usize, dims: Vec<usize>) -> Self {
        Self { n, dims, absorb: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("ambient dimension must be at least 2, got {}", self.n)));
        }
        if self.dims.is_empty() {
            return Err(Error::Config("flag needs at least one subspace".into()));
        }
        let mut prev = 0;
        for &k in &self.dims {
            if k <= prev || k >= self.n {
                return Err(Error::Config(format!(
                    "flag dimensions must increase strictly within (0, {}), got {:?}",
                    self.n, self.dims
                )));
            }
            prev = k;
        }
        let blocks = self.blocks().len();
        if let Some(b) = self.absorb.iter().find(|&&b| b >= blocks) {
            return Err(Error::Config(format!("absorbed block {b} does not exist ({blocks} blocks)")));
        }
        Ok(())
    }

    /// Half-open index ranges of the diagonal blocks.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        let mut edges = vec![0];
        edges.extend(&self.dims);
        edges.push(self.n);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }

    fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (b, (lo, hi)) in self.blocks().into_iter().enumerate() {
            out[lo..hi].iter_mut().for_each(|v| *v = b);
        }
        out
    }

    /// Basis of `𝔮`, the traceless block upper triangular matrices.
    pub fn q_basis(&self) -> Vec<DMatrix<f64>> {
        let n = self.n;
        let bl = self.block_of();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && bl[i] <= bl[j] {
                    out.push(unit(n, i, j));
                }
            }
        }
        for i in 0..n - 1 {
            out.push(unit(n, i, i) - unit(n, i + 1, i + 1));
        }
        out
    }

    /// Basis of `𝔯₀`: the unipotent radical, the centre of the Levi factor
    /// and the absorbed `sl_m` factors.
    pub fn r0_basis(&self) -> Vec<DMatrix<f64>> {
        let n = self.n;
        let bl = self.block_of();
        let blocks = self.blocks();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if bl[i] < bl[j] {
                    out.push(unit(n, i, j));
                }
            }
        }
        // centre: block scalars with zero total trace
        let scalar = |b: usize| {
            let (lo, hi) = blocks[b];
            let mut m = DMatrix::zeros(n, n);
            for i in lo..hi {
                m[(i, i)] = 1.0 / (hi - lo) as f64;
            }
            m
        };
        for b in 0..blocks.len() - 1 {
            out.push(scalar(b) - scalar(b + 1));
        }
        for &b in &self.absorb {
            let (lo, hi) = blocks[b];
            for i in lo..hi {
                for j in lo..hi {
                    if i != j {
                        out.push(unit(n, i, j));
                    }
                }
            }
            for i in lo..hi.saturating_sub(1) {
                out.push(unit(n, i, i) - unit(n, i + 1, i + 1));
            }
        }
        out
    }

    /// Whether `m` is block upper triangular (to `tol`).
    pub fn preserves(&self, m: &DMatrix<f64>, tol: f64) -> bool {
        let bl = self.block_of();
        (0..self.n).all(|i| (0..self.n).all(|j| bl[i] <= bl[j] || m[(i, j)].abs() <= tol))
    }
}

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GroupFlag {
    Sl2,
    Pgl2,
}

/// `H` as the integral of an `sl_2`-triple in `n × n` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpec {
    pub triple: Sl2Triple,
    pub group: GroupFlag,
}

/// Serialised form of [`EmbeddingSpec`], matrices as rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpecRows {
    pub e: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    #[serde(default = "default_group")]
    pub group: GroupFlag,
}

fn default_group() -> GroupFlag {
    GroupFlag::Sl2
}

fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config("triple matrices must be square and non-empty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl EmbeddingSpec {
    pub fn from_rows(spec: &EmbeddingSpecRows) -> Result<Self> {
        let triple = Sl2Triple::new(from_rows(&spec.e)?, from_rows(&spec.x)?, from_rows(&spec.f)?)?;
        Ok(Self { triple, group: spec.group })
    }

    pub fn to_rows(&self) -> EmbeddingSpecRows {
        EmbeddingSpecRows {
            e: to_rows(&self.triple.e),
            x: to_rows(&self.triple.x),
            f: to_rows(&self.triple.f),
            group: self.group,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "Case1")]
    Case1,
    #[serde(rename = "Case2_1")]
    Case21,
    #[serde(rename = "Case2_2")]
    Case22,
    #[serde(rename = "Case2_3a")]
    Case23a,
    #[serde(rename = "Case2_3b")]
    Case23b,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Case1 => "Case1",
            Self::Case21 => "Case2_1",
            Self::Case22 => "Case2_2",
            Self::Case23a => "Case2_3a",
            Self::Case23b => "Case2_3b",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `dim(𝔥 ∩ 𝔮)`.
    pub dim_h_q: usize,
    /// `dim(𝔮_H ∩ 𝔯₀)`, absent in Case 1.
    pub dim_qh_r0: Option<usize>,
    pub irreducible_components: usize,
    /// Least-squares residual of the triple extension on each `S`-block.
    pub extension_residuals: Vec<f64>,
    /// In Case 2.2, whether the intersection `𝔮_H ∩ 𝔯₀` is nilpotent.
    pub intersection_nilpotent: Option<bool>,
    /// Dimensions and extendability were decided in rational arithmetic.
    pub exact: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseLabel {
    pub case: Case,
    pub diagnostics: Diagnostics,
}

/// Orthonormal basis of a subspace of matrices.
#[derive(Clone, Debug)]
pub struct Intersection {
    pub basis: Vec<DMatrix<f64>>,
    /// A singular value fell within a factor 10 of the rank threshold.
    pub ill_conditioned: bool,
}

impl Intersection {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

fn coords(basis: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let first = basis.first().ok_or_else(|| Error::Precondition("empty basis".into()))?;
    let (r, c) = first.shape();
    if basis.iter().any(|m| m.shape() != (r, c)) {
        return Err(Error::DimensionMismatch { expected: r, got: basis.iter().map(|m| m.nrows()).max().unwrap_or(0) });
    }
    Ok(DMatrix::from_fn(r * c, basis.len(), |k, j| basis[j][(k % r, k / r)]))
}

/// Orthonormal columns spanning the columns of `a`; also reports whether a
/// singular value sat near the threshold.
fn orthonormal(a: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > RANK_TOL).collect();
    let ill = svd.singular_values.iter().any(|&s| s > RANK_TOL / 10.0 && s < RANK_TOL * 10.0);
    (DMatrix::from_columns(&keep.iter().map(|&i| u.column(i)).collect::<Vec<_>>()), ill)
}

/// `span A ∩ span B` from the null space of `[Q_A, -Q_B]`, with
/// singular-value threshold `1e-9`.
pub fn lie_intersection(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> Result<Intersection> {
    let (qa, ill_a) = orthonormal(&coords(a)?);
    let (qb, ill_b) = orthonormal(&coords(b)?);
    if qa.nrows() != qb.nrows() {
        return Err(Error::DimensionMismatch { expected: qa.nrows(), got: qb.nrows() });
    }
    let (ka, kb) = (qa.ncols(), qb.ncols());
    let (r, c) = a[0].shape();
    if ka == 0 || kb == 0 {
        return Ok(Intersection { basis: Vec::new(), ill_conditioned: ill_a || ill_b });
    }
    // pad with zero rows so the SVD returns a full set of right vectors
    let rows = qa.nrows().max(ka + kb);
    let mut m = DMatrix::zeros(rows, ka + kb);
    m.view_mut((0, 0), (qa.nrows(), ka)).copy_from(&qa);
    m.view_mut((0, ka), (qb.nrows(), kb)).copy_from(&(-&qb));
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut ill = ill_a || ill_b;
    let mut vecs = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > RANK_TOL / 10.0 && s < RANK_TOL * 10.0 {
            ill = true;
        }
        if s <= RANK_TOL {
            let alpha = vt.row(i).columns(0, ka).transpose();
            vecs.push(&qa * alpha);
        }
    }
    let basis = if vecs.is_empty() {
        Vec::new()
    } else {
        let (q, _) = orthonormal(&DMatrix::from_columns(&vecs));
        q.column_iter().map(|col| DMatrix::from_fn(r, c, |i, j| col[i + r * j])).collect()
    };
    Ok(Intersection { basis, ill_conditioned: ill })
}

fn is_nilpotent(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let scale = m.amax().max(1.0);
    let mut p = m / scale;
    for _ in 1..n {
        p = &p * (m / scale);
    }
    p.amax() <= 1e-9
}

/// `dim ker e`: the number of irreducible summands of the `sl_2`-module
/// `R^n`, one highest-weight vector each.
pub fn count_irreducible_components(e: &DMatrix<f64>) -> Result<usize> {
    if !e.is_square() {
        return Err(Error::NotSquare { rows: e.nrows(), cols: e.ncols() });
    }
    if !is_nilpotent(e) {
        return Err(Error::Precondition("raising element is not nilpotent".into()));
    }
    let sv = e.clone().singular_values();
    let thr = RANK_TOL * sv.max().max(1.0);
    Ok(sv.iter().filter(|&&s| s <= thr).count())
}

/// `(x̄, ē)` on one factor `SL_m` of `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPair {
    pub block: usize,
    pub range: (usize, usize),
    pub xbar: DMatrix<f64>,
    pub ebar: DMatrix<f64>,
}

/// The Lie algebra map `𝔮_H → 𝔰`: diagonal blocks of `x` and `e` on every
/// non-absorbed block of size at least 2, with the trace removed.
pub fn induced_morphism(cfg: &FlagConfig, emb: &EmbeddingSpec) -> Result<Vec<BlockPair>> {
    cfg.validate()?;
    let t = &emb.triple;
    if t.dim() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, got: t.dim() });
    }
    let tol = 1e-9 * (1.0 + t.x.amax().max(t.e.amax()));
    if !cfg.preserves(&t.x, tol) || !cfg.preserves(&t.e, tol) {
        return Err(Error::Config(
            "the Borel direction span(x, e) does not preserve the flag; conjugate Q first".into(),
        ));
    }
    let mut out = Vec::new();
    for (b, (lo, hi)) in cfg.blocks().into_iter().enumerate() {
        if hi - lo < 2 || cfg.absorb.contains(&b) {
            continue;
        }
        let m = hi - lo;
        let block = |a: &DMatrix<f64>| {
            let s = a.view((lo, lo), (m, m)).into_owned();
            let tr = s.trace() / m as f64;
            s - DMatrix::identity(m, m) * tr
        };
        out.push(BlockPair { block: b, range: (lo, hi), xbar: block(&t.x), ebar: block(&t.e) });
    }
    Ok(out)
}

struct Dims {
    h_q: usize,
    qh_r0: usize,
    extends: Vec<bool>,
}

fn exact_dims(cfg: &FlagConfig, emb: &EmbeddingSpec) -> Option<Dims> {
    let t = &emb.triple;
    let (e, x, f) = (exact::from_integral(&t.e)?, exact::from_integral(&t.x)?, exact::from_integral(&t.f)?);
    // 𝔮 and 𝔯₀ have entries in {0, ±1, ±1/m}: rebuild them exactly
    let to_q = |m: &DMatrix<f64>| -> Vec<exact::Q> {
        let mut v = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                v.push(rational(m[(i, j)]));
            }
        }
        v
    };
    let h: Vec<_> = [&e, &x, &f].iter().map(|m| exact::flatten(m)).collect();
    let qh: Vec<_> = [&x, &e].iter().map(|m| exact::flatten(m)).collect();
    let q: Vec<_> = cfg.q_basis().iter().map(to_q).collect();
    let r0: Vec<_> = cfg.r0_basis().iter().map(to_q).collect();
    let mut extends = Vec::new();
    for (b, (lo, hi)) in cfg.blocks().into_iter().enumerate() {
        if hi - lo < 2 || cfg.absorb.contains(&b) {
            continue;
        }
        let xb = exact::traceless_block(&x, lo, hi);
        let eb = exact::traceless_block(&e, lo, hi);
        extends.push(!exact::is_zero_mat(&eb) && exact::triple_extends(&xb, &eb) || exact::is_zero_mat(&xb) && exact::is_zero_mat(&eb));
    }
    Some(Dims { h_q: exact::intersection_dim(&h, &q), qh_r0: exact::intersection_dim(&qh, &r0), extends })
}

/// `v` is `0`, `±1` or `±1/m` for a small `m`.
fn rational(v: f64) -> exact::Q {
    use num_bigint::BigInt;
    for den in 1..=64i64 {
        let num = v * den as f64;
        if (num - num.round()).abs() < 1e-12 {
            return num_rational::BigRational::new(BigInt::from(num.round() as i64), BigInt::from(den));
        }
    }
    unreachable!("basis entries are reciprocals of block sizes")
}

/// Decides the case of `(cfg, emb)`; see the module documentation for the
/// conventions.
pub fn classify(cfg: &FlagConfig, emb: &EmbeddingSpec) -> Result<CaseLabel> {
    cfg.validate()?;
    let t = &emb.triple;
    if t.dim() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, got: t.dim() });
    }
    let mut warnings = Vec::new();
    let h = vec![t.e.clone(), t.x.clone(), t.f.clone()];
    let hq = lie_intersection(&h, &cfg.q_basis())?;
    if hq.ill_conditioned {
        warnings.push("rank of h ∩ q is ill-conditioned".to_string());
    }
    let exact = exact_dims(cfg, emb);
    let dim_h_q = exact.as_ref().map_or(hq.dim(), |d| d.h_q);
    let components = count_irreducible_components(&t.e)?;
    let mut diag = Diagnostics {
        dim_h_q,
        dim_qh_r0: None,
        irreducible_components: components,
        extension_residuals: Vec::new(),
        intersection_nilpotent: None,
        exact: exact.is_some(),
        warnings,
    };
    if dim_h_q == 3 {
        return Ok(CaseLabel { case: Case::Case1, diagnostics: diag });
    }
    if dim_h_q != 2 {
        return Err(Error::Config(format!(
            "H is not positioned against this Q: dim(h ∩ q) = {dim_h_q}; conjugate Q so that it contains a Borel of H"
        )));
    }
    let pairs = induced_morphism(cfg, emb)?;
    let qh = vec![t.x.clone(), t.e.clone()];
    let inter = lie_intersection(&qh, &cfg.r0_basis())?;
    if inter.ill_conditioned {
        diag.warnings.push("rank of q_H ∩ r_0 is ill-conditioned".to_string());
    }
    let dim_qh_r0 = exact.as_ref().map_or(inter.dim(), |d| d.qh_r0);
    diag.dim_qh_r0 = Some(dim_qh_r0);
    let case = match dim_qh_r0 {
        2 => Case::Case21,
        1 => {
            let nil = inter.basis.first().is_some_and(is_nilpotent);
            if !nil {
                diag.warnings.push("q_H ∩ r_0 is not the unipotent radical of q_H".to_string());
            }
            diag.intersection_nilpotent = Some(nil);
            Case::Case22
        }
        _ => {
            let mut all = true;
            for (i, p) in pairs.iter().enumerate() {
                let ext = extend_sl2_triple(&p.xbar, &p.ebar, DEFAULT_EXTENSION_TOL)?;
                diag.extension_residuals.push(ext.residual());
                let ok = match &exact {
                    Some(d) => d.extends[i],
                    None => matches!(ext, TripleExtension::Extended { .. }),
                };
                all &= ok;
            }
            if all {
                Case::Case23a
            } else {
                if components == 1 {
                    diag.warnings.push("irreducible H should extend to S".to_string());
                }
                Case::Case23b
            }
        }
    };
    Ok(CaseLabel { case, diagnostics: diag })
}

/// The `sl_2`-triple on each `S`-block of a Case 2.3.a configuration.
pub fn extended_block_triples(cfg: &FlagConfig, emb: &EmbeddingSpec) -> Result<Vec<(BlockPair, Sl2Triple)>> {
    let mut out = Vec::new();
    for p in induced_morphism(cfg, emb)? {
        match extend_sl2_triple(&p.xbar, &p.ebar, DEFAULT_EXTENSION_TOL)? {
            TripleExtension::Extended { f, .. } => {
                let t = Sl2Triple::new(p.ebar.clone(), p.xbar.clone(), f)?;
                out.push((p, t));
            }
            TripleExtension::Obstructed { residual } => {
                return Err(Error::Unsupported(format!(
                    "block {} does not extend to a morphism (residual {residual:.3})",
                    p.block
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{elementary, principal_triple};
    use nalgebra::DVector;

    fn emb(t: Sl2Triple) -> EmbeddingSpec {
        EmbeddingSpec { triple: t, group: GroupFlag::Sl2 }
    }

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn intersection_of_triangular_algebras() {
        let up = vec![diag(&[1.0, -1.0]), elementary(2, 0, 1)];
        let low = vec![diag(&[1.0, -1.0]), elementary(2, 1, 0)];
        let i = lie_intersection(&up, &low).unwrap();
        assert_eq!(i.dim(), 1);
        let b = &i.basis[0];
        assert!((b[(0, 0)] + b[(1, 1)]).abs() < 1e-12 && b[(0, 1)].abs() < 1e-12);
        assert_eq!(lie_intersection(&up, &up).unwrap().dim(), 2);
    }

    #[test]
    fn irreducible_components() {
        let p = principal_triple(4).unwrap();
        assert_eq!(count_irreducible_components(&p.e).unwrap(), 1);
        let mut e = DMatrix::zeros(4, 4);
        e[(0, 1)] = 1.0;
        e[(2, 3)] = 1.0;
        assert_eq!(count_irreducible_components(&e).unwrap(), 2);
        assert!(count_irreducible_components(&DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn principal_sl3_is_case_2_3a() {
        let l = classify(&FlagConfig::new(3, vec![2]), &emb(principal_triple(3).unwrap())).unwrap();
        assert_eq!(l.case, Case::Case23a);
        assert!(l.diagnostics.exact);
        assert!(l.diagnostics.extension_residuals.iter().all(|r| *r < 1e-9));
    }

    #[test]
    fn incompatible_flag_is_refused() {
        // the opposite Borel of the principal triple
        let p = principal_triple(3).unwrap();
        let t = Sl2Triple::new(p.f.clone(), -p.x.clone(), p.e.clone()).unwrap();
        assert!(classify(&FlagConfig::new(3, vec![2]), &emb(t)).is_err());
    }

    #[test]
    fn bad_flags_are_rejected() {
        assert!(FlagConfig::new(3, vec![2, 2]).validate().is_err());
        assert!(FlagConfig::new(3, vec![3]).validate().is_err());
        let mut c = FlagConfig::new(3, vec![1]);
        c.absorb = vec![5];
        assert!(c.validate().is_err());
    }
}
