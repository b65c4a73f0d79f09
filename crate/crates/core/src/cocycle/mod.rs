//! Cocycles `H × H/Q_H → S` over the circle and the projective line.
//!
//! `D` is parametrised by `t ↦ diag(e^{t/2}, e^{-t/2})`, so the Iwasawa
//! cocycle is `σ(h, ξ) = 2 log ‖h u‖` for a unit lift `u` of `ξ`, and the
//! sign element of `D^±` is the class of `diag(1, -1)`.

mod cross_ratio;

pub use cross_ratio::{cross_ratio, cross_ratio_limit, matched_lengths, CrossRatio};

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::circle::CirclePoint;
use crate::error::{Error, Result};
use crate::group::{iwasawa_decompose, GroupElement, Representation};

/// An element `𝒢(r, sign)` of `D^± ≅ D × Z/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagSignValue {
    pub r: f64,
    pub sign: i8,
}

impl DiagSignValue {
    pub const IDENTITY: Self = Self { r: 0.0, sign: 1 };

    pub fn new(r: f64, sign: i8) -> Self {
        debug_assert!(sign == 1 || sign == -1);
        Self { r, sign }
    }

    pub fn inverse(self) -> Self {
        Self { r: -self.r, sign: self.sign }
    }

    /// `diag(e^{r/2}, sign · e^{-r/2})`.
    pub fn matrix(self) -> Matrix2<f64> {
        Matrix2::new((self.r / 2.0).exp(), 0.0, 0.0, self.sign as f64 * (-self.r / 2.0).exp())
    }
}

impl Mul for DiagSignValue {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self { r: self.r + rhs.r, sign: self.sign * rhs.sign }
    }
}

impl Default for DiagSignValue {
    fn default() -> Self {
        Self::IDENTITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionMode {
    /// Lifts into the half circle of angles `[0, π)`.
    Plain,
    /// Lifts into a half circle centred on an invariant cone.
    ConeHalfCircle,
    /// `PGL_2` with values in the identity component of `K`: the sign is
    /// the sign of the determinant.
    ConnectedComponent,
}

/// A section `K/M → K`, recorded by the half circle `[start, start + π)` its
/// lifts land in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleSection {
    mode: SectionMode,
    start: f64,
}

impl CircleSection {
    pub fn plain() -> Self {
        Self { mode: SectionMode::Plain, start: 0.0 }
    }

    /// Half circle centred on the arc `[arc_start, arc_start + arc_len]`.
    pub fn cone(arc_start: f64, arc_len: f64) -> Self {
        let mid = arc_start + arc_len / 2.0;
        Self { mode: SectionMode::ConeHalfCircle, start: mid - PI / 2.0 }
    }

    pub fn connected_component() -> Self {
        Self { mode: SectionMode::ConnectedComponent, start: 0.0 }
    }

    pub fn mode(&self) -> SectionMode {
        self.mode
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// The representative of `±eta` in the section's half circle.
    pub fn lift(&self, eta: &CirclePoint) -> CirclePoint {
        let rel = (eta.angle() - self.start).rem_euclid(2.0 * PI);
        if rel < PI {
            *eta
        } else {
            eta.antipode()
        }
    }

    /// `s(η)` as a rotation matrix.
    pub fn rotation(&self, eta: &CirclePoint) -> Matrix2<f64> {
        let u = self.lift(eta).vec();
        Matrix2::new(u.x, -u.y, u.y, u.x)
    }
}

/// `2 log a₁₁` of the Iwasawa decomposition of `h·k`, where `k` is the
/// rotation taking `e1` to a lift of `xi`.
pub fn iwasawa_cocycle(h: &GroupElement, xi: &CirclePoint) -> Result<f64> {
    if h.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: h.dim() });
    }
    let u = xi.vec();
    let k = DMatrix::from_row_slice(2, 2, &[u.x, -u.y, u.y, u.x]);
    let hk = GroupElement::with_matrix(h.matrix() * k, h.normalization())?;
    let f = iwasawa_decompose(&hk)?;
    Ok(2.0 * f.a[(0, 0)].ln())
}

/// Closed form of [`iwasawa_cocycle`]: `2 log ‖h u‖`.
#[inline]
pub fn iwasawa_fast(h: &Matrix2<f64>, u: &Vector2<f64>) -> f64 {
    (h * u).norm_squared().ln()
}

/// `2 log(‖ρ(h)v‖ / ‖v‖)` for `v` on the highest-weight line over `xi`, with
/// the `K`-invariant norm of `rep`.
pub fn sigma_chi(h: &GroupElement, xi: &CirclePoint, rep: &Representation) -> Result<f64> {
    let v = rep.highest_weight_lift(&xi.vec())?;
    let nv = rep.k_norm(&v)?;
    if !(nv > 0.0) {
        return Err(Error::Precondition("zero highest-weight lift".into()));
    }
    let w = rep.eval(h)? * v;
    Ok(2.0 * (rep.k_norm(&w)? / nv).ln())
}

/// `sg(g, η)`: `+1` when `g` carries the section's lift of `η` onto the
/// section's lift of `gη` (after normalising), `-1` otherwise.
pub fn sign_cocycle(g: &GroupElement, eta: &CirclePoint, sec: &CircleSection) -> i8 {
    sign_fast(&g.mat2(), eta, sec)
}

#[inline]
pub fn sign_fast(g: &Matrix2<f64>, eta: &CirclePoint, sec: &CircleSection) -> i8 {
    if sec.mode == SectionMode::ConnectedComponent {
        return if g.determinant() > 0.0 { 1 } else { -1 };
    }
    let v = g * sec.lift(eta).vec();
    let target = sec.lift(&CirclePoint::from_vec(v).expect("invertible image")).vec();
    if v.dot(&target) > 0.0 {
        1
    } else {
        -1
    }
}

/// `α(g, η) = (σ(g, η), sg(g, η)) ∈ D^±`.
pub fn alpha_cocycle(g: &GroupElement, eta: &CirclePoint, sec: &CircleSection) -> Result<DiagSignValue> {
    Ok(DiagSignValue::new(iwasawa_cocycle(g, eta)?, sign_cocycle(g, eta, sec)))
}

#[inline]
pub fn alpha_fast(g: &Matrix2<f64>, eta: &CirclePoint, sec: &CircleSection) -> DiagSignValue {
    DiagSignValue { r: iwasawa_fast(g, &eta.vec()), sign: sign_fast(g, eta, sec) }
}

/// A group morphism out of `SL_2`.
#[derive(Clone, Debug)]
pub struct Morphism {
    target_dim: usize,
    kind: MorphismKind,
}

#[derive(Clone, Debug)]
enum MorphismKind {
    Trivial,
    Identity,
    Rep(Representation),
    /// Defined on the upper triangular Borel only, from `(x̄, ē)` with
    /// `[x̄, ē] = 2ē`; `±I` is ignored.
    Borel { x: DMatrix<f64>, e: DMatrix<f64> },
}

impl Morphism {
    pub fn trivial(target_dim: usize) -> Self {
        Self { target_dim, kind: MorphismKind::Trivial }
    }

    pub fn identity() -> Self {
        Self { target_dim: 2, kind: MorphismKind::Identity }
    }

    pub fn from_representation(rep: Representation) -> Self {
        Self { target_dim: rep.dim(), kind: MorphismKind::Rep(rep) }
    }

    /// `[[a, b], [0, 1/a]] ↦ exp(log|a| x̄) exp((b/a) ē)`.
    pub fn borel(x: DMatrix<f64>, e: DMatrix<f64>) -> Result<Self> {
        if !x.is_square() || x.shape() != e.shape() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: e.nrows() });
        }
        let br = &x * &e - &e * &x - &e * 2.0;
        if br.amax() > 1e-9 * (1.0 + e.amax()) {
            return Err(Error::Precondition("Borel pair must satisfy [x, e] = 2e".into()));
        }
        Ok(Self { target_dim: x.nrows(), kind: MorphismKind::Borel { x, e } })
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    /// Whether the morphism is only defined on upper triangular elements.
    pub fn is_borel(&self) -> bool {
        matches!(self.kind, MorphismKind::Borel { .. })
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.kind, MorphismKind::Trivial)
    }

    pub fn eval2(&self, g: &Matrix2<f64>) -> Result<DMatrix<f64>> {
        match &self.kind {
            MorphismKind::Trivial => Ok(DMatrix::identity(self.target_dim, self.target_dim)),
            MorphismKind::Identity => Ok(DMatrix::from_fn(2, 2, |i, j| g[(i, j)])),
            MorphismKind::Rep(r) => r.eval2(g),
            MorphismKind::Borel { x, e } => {
                let a = g[(0, 0)];
                if g[(1, 0)].abs() > 1e-9 * (1.0 + g.abs().max()) || a == 0.0 {
                    return Err(Error::Precondition("Borel morphism evaluated off the Borel subgroup".into()));
                }
                Ok((x * a.abs().ln()).exp() * (e * (g[(0, 1)] / a)).exp())
            }
        }
    }
}

/// Value of a cocycle: either in `D^±` or a general matrix in `S`.
#[derive(Clone, Debug, PartialEq)]
pub enum CocycleValue {
    Diag(DiagSignValue),
    Matrix(DMatrix<f64>),
}

impl CocycleValue {
    pub fn dim(&self) -> usize {
        match self {
            Self::Diag(_) => 2,
            Self::Matrix(m) => m.nrows(),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            Self::Diag(d) => {
                let m = d.matrix();
                DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
            }
            Self::Matrix(m) => m.clone(),
        }
    }

    /// Group product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        match (self, rhs) {
            (Self::Diag(a), Self::Diag(b)) => Self::Diag(*a * *b),
            _ => Self::Matrix(self.to_matrix() * rhs.to_matrix()),
        }
    }

    /// Distance in the value group; `D^±` values with different signs are
    /// infinitely far apart.
    pub fn distance(&self, other: &Self) -> f64 {
        match (self, other) {
            (Self::Diag(a), Self::Diag(b)) => {
                if a.sign != b.sign {
                    f64::INFINITY
                } else {
                    (a.r - b.r).abs()
                }
            }
            _ => {
                let (a, b) = (self.to_matrix(), other.to_matrix());
                if a.shape() != b.shape() {
                    f64::INFINITY
                } else {
                    (a - b).amax()
                }
            }
        }
    }

    /// `D^±` part of an upper-triangular 2×2 value.
    pub fn diag_part(&self) -> Option<DiagSignValue> {
        match self {
            Self::Diag(d) => Some(*d),
            Self::Matrix(m) if m.nrows() == 2 => {
                let scale = m.amax();
                if m[(1, 0)].abs() > 1e-9 * scale {
                    return None;
                }
                let a = m[(0, 0)];
                let sign = if a * m[(1, 1)] > 0.0 { 1 } else { -1 };
                Some(DiagSignValue::new(2.0 * a.abs().ln(), sign))
            }
            Self::Matrix(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CocycleKind {
    IwasawaSign,
    MorphismType,
    Conjugated,
}

type ConjugatorFn = dyn Fn(&CirclePoint) -> DMatrix<f64> + Send + Sync;

/// A cocycle `α(g, η)` ready for evaluation.
#[derive(Clone)]
pub struct CocycleHandle(Arc<HandleInner>);

enum HandleInner {
    IwasawaSign(CircleSection),
    Morphism { morphism: Morphism, section: Option<CircleSection> },
    Conjugated { base: CocycleHandle, phi: Arc<ConjugatorFn> },
}

impl fmt::Debug for CocycleHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            HandleInner::IwasawaSign(s) => write!(f, "CocycleHandle::IwasawaSign({:?})", s.mode()),
            HandleInner::Morphism { morphism, section } => write!(
                f,
                "CocycleHandle::Morphism(dim {}, section {:?})",
                morphism.target_dim(),
                section.map(|s| s.mode())
            ),
            HandleInner::Conjugated { base, .. } => write!(f, "CocycleHandle::Conjugated({base:?})"),
        }
    }
}

impl CocycleHandle {
    pub fn iwasawa_sign(sec: CircleSection) -> Self {
        Self(Arc::new(HandleInner::IwasawaSign(sec)))
    }

    pub fn kind(&self) -> CocycleKind {
        match &*self.0 {
            HandleInner::IwasawaSign(_) => CocycleKind::IwasawaSign,
            HandleInner::Morphism { .. } => CocycleKind::MorphismType,
            HandleInner::Conjugated { .. } => CocycleKind::Conjugated,
        }
    }

    /// Dimension of the matrices the values act through.
    pub fn fibre_dim(&self) -> usize {
        match &*self.0 {
            HandleInner::IwasawaSign(_) => 2,
            HandleInner::Morphism { morphism, .. } => morphism.target_dim(),
            HandleInner::Conjugated { base, .. } => base.fibre_dim(),
        }
    }

    /// The section of an Iwasawa-sign handle.
    pub fn section(&self) -> Option<CircleSection> {
        match &*self.0 {
            HandleInner::IwasawaSign(s) => Some(*s),
            HandleInner::Morphism { section, .. } => *section,
            HandleInner::Conjugated { base, .. } => base.section(),
        }
    }

    /// Whether every value is the identity.
    pub fn is_trivial(&self) -> bool {
        matches!(&*self.0, HandleInner::Morphism { morphism, .. } if morphism.is_trivial())
    }

    pub fn eval(&self, g: &GroupElement, eta: &CirclePoint) -> Result<CocycleValue> {
        if g.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: g.dim() });
        }
        self.eval2(&g.mat2(), eta)
    }

    pub fn eval2(&self, g: &Matrix2<f64>, eta: &CirclePoint) -> Result<CocycleValue> {
        match &*self.0 {
            HandleInner::IwasawaSign(sec) => Ok(CocycleValue::Diag(alpha_fast(g, eta, sec))),
            HandleInner::Morphism { morphism, section } => {
                if morphism.is_trivial() {
                    return Ok(CocycleValue::Matrix(morphism.eval2(g)?));
                }
                match section {
                    None => Ok(CocycleValue::Matrix(morphism.eval2(g)?)),
                    Some(sec) => {
                        // ρ is a homomorphism, so compose in SL_2 and evaluate once
                        let h = sec.rotation(&eta.act(g)).transpose() * g * sec.rotation(eta);
                        Ok(CocycleValue::Matrix(morphism.eval2(&h)?))
                    }
                }
            }
            HandleInner::Conjugated { base, phi } => {
                let inner = base.eval2(g, eta)?.to_matrix();
                let left = phi(&eta.act(g));
                let left_inv = left
                    .clone()
                    .try_inverse()
                    .ok_or(Error::Singular { det: left.determinant() })?;
                Ok(CocycleValue::Matrix(left_inv * inner * phi(eta)))
            }
        }
    }

    /// Fast path for `D^±`-valued handles; `None` for matrix-valued ones.
    #[inline]
    pub fn eval_diag(&self, g: &Matrix2<f64>, eta: &CirclePoint) -> Option<DiagSignValue> {
        match &*self.0 {
            HandleInner::IwasawaSign(sec) => Some(alpha_fast(g, eta, sec)),
            _ => None,
        }
    }

    /// `max |α(g₁g₂, η) - α(g₁, g₂η) α(g₂, η)|`.
    pub fn identity_residual(&self, g1: &Matrix2<f64>, g2: &Matrix2<f64>, eta: &CirclePoint) -> Result<f64> {
        let lhs = self.eval2(&(g1 * g2), eta)?;
        let rhs = self.eval2(g1, &eta.act(g2))?.compose(&self.eval2(g2, eta)?);
        Ok(lhs.distance(&rhs))
    }
}

/// `α(h₁, η) = ρ(s(h₁η))⁻¹ ρ(h₁) ρ(s(η))`; with no section this is `ρ(h₁)`.
pub fn morphism_cocycle(rho: Morphism, sec: Option<CircleSection>) -> CocycleHandle {
    CocycleHandle(Arc::new(HandleInner::Morphism { morphism: rho, section: sec }))
}

/// `α'(g, x) = φ(gx)⁻¹ α(g, x) φ(x)`.
pub fn conjugate_cocycle<F>(alpha: CocycleHandle, phi: F) -> CocycleHandle
where
    F: Fn(&CirclePoint) -> DMatrix<f64> + Send + Sync + 'static,
{
    CocycleHandle(Arc::new(HandleInner::Conjugated { base: alpha, phi: Arc::new(phi) }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ge(m: Matrix2<f64>) -> GroupElement {
        GroupElement::from_mat2(m).unwrap()
    }

    #[test]
    fn diagonal_flow_on_e1() {
        let t = 0.37;
        let g = GroupElement::diag_flow(t);
        assert_abs_diff_eq!(iwasawa_cocycle(&g, &CirclePoint::e1()).unwrap(), t, epsilon = 1e-14);
        assert_abs_diff_eq!(
            sigma_chi(&g, &CirclePoint::e1(), &Representation::standard()).unwrap(),
            t,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            sigma_chi(&g, &CirclePoint::e1(), &Representation::sym(3)).unwrap(),
            2.0 * t,
            epsilon = 1e-14
        );
    }

    #[test]
    fn rotations_have_zero_cocycle() {
        let r = GroupElement::rotation(1.1);
        for a in [0.0, 0.4, 2.0, -1.3] {
            assert_abs_diff_eq!(iwasawa_cocycle(&r, &CirclePoint::from_angle(a)).unwrap(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn upper_triangular_matches_log_norm() {
        // g e1 = (2, 0): σ = 2 log 2 by the log-norm formula
        let g = ge(Matrix2::new(2.0, 1.0, 0.0, 0.5));
        let xi = CirclePoint::e1();
        let s = iwasawa_cocycle(&g, &xi).unwrap();
        assert_abs_diff_eq!(s, 2.0 * 2f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(s, sigma_chi(&g, &xi, &Representation::standard()).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn sym_power_scales_cocycle() {
        let g = ge(Matrix2::new(1.3, -0.4, 0.7, 0.55));
        let xi = CirclePoint::from_angle(0.9);
        let s = iwasawa_cocycle(&g, &xi).unwrap();
        for n in 2..=6 {
            let v = sigma_chi(&g, &xi, &Representation::sym(n)).unwrap();
            assert_abs_diff_eq!(v, (n - 1) as f64 * s, epsilon = 1e-11);
            let p = sigma_chi(&g, &xi, &Representation::principal(n)).unwrap();
            assert_abs_diff_eq!(p, (n - 1) as f64 * s, epsilon = 1e-11);
        }
    }

    #[test]
    fn sign_of_identity_and_minus_identity() {
        let id = GroupElement::identity(2);
        let minus = ge(Matrix2::new(-1.0, 0.0, 0.0, -1.0));
        let eta = CirclePoint::from_angle(0.8);
        for sec in [CircleSection::plain(), CircleSection::cone(0.0, PI / 2.0)] {
            assert_eq!(sign_cocycle(&id, &eta, &sec), 1);
            // -I maps the lift u to -u, whose section lift is u again
            assert_eq!(sign_cocycle(&minus, &eta, &sec), -1);
        }
        assert_eq!(sign_cocycle(&minus, &eta, &CircleSection::connected_component()), 1);
    }

    #[test]
    fn sign_crossing_the_cut() {
        // plain section cuts at angle 0: a small rotation taking 3 rad past π flips
        let sec = CircleSection::plain();
        let r = GroupElement::rotation(0.3);
        assert_eq!(sign_cocycle(&r, &CirclePoint::from_angle(3.0), &sec), -1);
        assert_eq!(sign_cocycle(&r, &CirclePoint::from_angle(1.0), &sec), 1);
    }

    #[test]
    fn lift_independence() {
        let g = ge(Matrix2::new(0.3, 2.0, -1.0, 1.1));
        let eta = CirclePoint::from_angle(2.2);
        let sec = CircleSection::plain();
        let a = alpha_cocycle(&g, &eta, &sec).unwrap();
        let b = alpha_cocycle(&g, &eta.antipode(), &sec).unwrap();
        assert_eq!(a.sign, b.sign);
        assert_abs_diff_eq!(a.r, b.r, epsilon = 1e-12);
    }

    #[test]
    fn identity_morphism_recovers_iwasawa_part() {
        let sec = CircleSection::plain();
        let h = morphism_cocycle(Morphism::identity(), Some(sec));
        let iw = CocycleHandle::iwasawa_sign(sec);
        let g = Matrix2::new(1.2, 0.5, -0.7, 0.8f64);
        let g = g / g.determinant().sqrt();
        for a in [0.1, 1.0, 2.5, -0.7] {
            let eta = CirclePoint::from_angle(a);
            let d = h.eval2(&g, &eta).unwrap().diag_part().expect("upper triangular value");
            let e = iw.eval_diag(&g, &eta).unwrap();
            assert_abs_diff_eq!(d.r, e.r, epsilon = 1e-12);
            // -I acts trivially on the fibre, so only the D part survives.
            assert_eq!(d.sign, 1);
        }
    }

    #[test]
    fn trivial_and_principal_morphisms() {
        let eta = CirclePoint::from_angle(0.4);
        let g = Matrix2::new(2.0, 1.0, 1.0, 1.0);
        let t = morphism_cocycle(Morphism::trivial(2), None);
        assert_eq!(t.eval2(&g, &eta).unwrap().diag_part(), Some(DiagSignValue::IDENTITY));
        let p = morphism_cocycle(Morphism::from_representation(Representation::sym(3)), None);
        let v = p.eval2(&g, &eta).unwrap().to_matrix();
        assert_eq!(v, crate::group::sym_power(&ge(g), 3));
        let v2 = p.eval2(&g, &CirclePoint::from_angle(2.0)).unwrap().to_matrix();
        assert_eq!(v, v2);
    }

    #[test]
    fn conjugation_by_identity_is_noop() {
        let base = morphism_cocycle(Morphism::from_representation(Representation::sym(3)), Some(CircleSection::plain()));
        let c = conjugate_cocycle(base.clone(), |_| DMatrix::identity(3, 3));
        let g = Matrix2::new(1.0, 1.0, 0.0, 1.0);
        let eta = CirclePoint::from_angle(0.3);
        assert_eq!(c.eval2(&g, &eta).unwrap(), base.eval2(&g, &eta).unwrap());
        assert_eq!(c.kind(), CocycleKind::Conjugated);
    }

    #[test]
    fn cocycle_identity_for_each_kind() {
        let sec = CircleSection::plain();
        let handles = [
            CocycleHandle::iwasawa_sign(sec),
            morphism_cocycle(Morphism::from_representation(Representation::principal(3)), Some(sec)),
            conjugate_cocycle(CocycleHandle::iwasawa_sign(sec), |eta: &CirclePoint| {
                let a = eta.proj_angle();
                DMatrix::from_row_slice(2, 2, &[1.0, a, 0.0, 1.0])
            }),
        ];
        let g1 = Matrix2::new(2.0, 1.0, 1.0, 1.0);
        let g2 = Matrix2::new(0.0, -1.0, 1.0, 0.5);
        for h in &handles {
            for a in [0.2, 1.3, 2.9, -2.0] {
                let r = h.identity_residual(&g1, &g2, &CirclePoint::from_angle(a)).unwrap();
                assert!(r < 1e-9, "{h:?}: {r}");
            }
        }
    }

    #[test]
    fn borel_morphism_matches_identity_up_to_sign() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let e = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let sec = CircleSection::plain();
        let b = morphism_cocycle(Morphism::borel(x, e).unwrap(), Some(sec));
        let id = morphism_cocycle(Morphism::identity(), Some(sec));
        let g = Matrix2::new(0.3, 2.0, -1.0, 1.1f64);
        let g = g / g.determinant().sqrt();
        for a in [0.2, 1.3, 2.9, -2.0] {
            let eta = CirclePoint::from_angle(a);
            let u = b.eval2(&g, &eta).unwrap().to_matrix();
            let v = id.eval2(&g, &eta).unwrap().to_matrix();
            let d = (&u - &v).amax().min((&u + &v).amax());
            assert!(d < 1e-12, "{d}");
            assert!(b.identity_residual(&g, &Matrix2::new(2.0, 1.0, 1.0, 1.0), &eta).unwrap() < 1e-9);
        }
    }

    #[test]
    fn borel_morphism_rejects_bad_pairs() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert!(Morphism::borel(x.clone(), f).is_err());
        let e = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let m = Morphism::borel(x, e).unwrap();
        assert!(m.eval2(&Matrix2::new(1.0, 0.0, 1.0, 1.0)).is_err());
    }
}
