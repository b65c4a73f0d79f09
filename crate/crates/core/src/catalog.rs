//! Named configurations and step measures.

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::boundary::StepMeasure;
use crate::classifier::{extended_block_triples, induced_morphism, Case, EmbeddingSpec, FlagConfig, GroupFlag};
use crate::cocycle::{morphism_cocycle, CircleSection, CocycleHandle, Morphism};
use crate::error::{Error, Result};
use crate::fiber::LatticePoint;
use crate::group::{elementary, principal_triple, GroupElement, Representation, Sl2Triple, TripleMorphism};

/// A configuration with the case it is known to fall into and defaults for
/// running walks on it.
#[derive(Clone, Debug, Serialize)]
pub struct Example {
    pub name: &'static str,
    pub summary: &'static str,
    pub expected: Case,
    pub flag: FlagConfig,
    #[serde(serialize_with = "ser_embedding")]
    pub embedding: EmbeddingSpec,
    /// Name of the default step measure, see [`measure`].
    pub measure: &'static str,
    pub steps: usize,
    pub trials: usize,
}

fn ser_embedding<S: serde::Serializer>(e: &EmbeddingSpec, s: S) -> std::result::Result<S::Ok, S::Error> {
    e.to_rows().serialize(s)
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

fn triple(e: DMatrix<f64>, x: DMatrix<f64>, f: DMatrix<f64>, group: GroupFlag) -> EmbeddingSpec {
    EmbeddingSpec { triple: Sl2Triple::new(e, x, f).expect("catalog triples are valid"), group }
}

fn sl2_in_block(n: usize, i: usize, j: usize) -> EmbeddingSpec {
    let mut x = DMatrix::zeros(n, n);
    x[(i, i)] = 1.0;
    x[(j, j)] = -1.0;
    triple(elementary(n, i, j), x, elementary(n, j, i), GroupFlag::Sl2)
}

fn principal(n: usize) -> EmbeddingSpec {
    EmbeddingSpec { triple: principal_triple(n).expect("n >= 2"), group: GroupFlag::Pgl2 }
}

pub fn examples() -> Vec<Example> {
    let e = |n, i, j| elementary(n, i, j);
    vec![
        Example {
            name: "ex-ss",
            summary: "SO(2,1) acting on homothety classes of rank-2 lattices in R^3",
            expected: Case::Case23a,
            flag: FlagConfig::new(3, vec![2]),
            embedding: principal(3),
            measure: "positive-pair",
            steps: 100_000,
            trials: 200,
        },
        Example {
            name: "ex-reducible",
            summary: "SL2 in the lower right block of SL3, Q the stabiliser of a plane",
            expected: Case::Case22,
            flag: FlagConfig::new(3, vec![2]),
            embedding: sl2_in_block(3, 1, 2),
            measure: "positive-pair",
            steps: 100_000,
            trials: 200,
        },
        Example {
            name: "ex-case-2.1-a",
            summary: "SL2 in the top left block of SL4, Q the Borel subgroup",
            expected: Case::Case21,
            flag: FlagConfig::new(4, vec![1, 2, 3]),
            embedding: sl2_in_block(4, 0, 1),
            measure: "positive-pair",
            steps: 10_000,
            trials: 20,
        },
        Example {
            name: "ex-case-2.1-b",
            summary: "SL2 acting diagonally on R^2 + R^2 in SL4, Q the stabiliser of a plane",
            expected: Case::Case21,
            flag: FlagConfig::new(4, vec![2]),
            embedding: triple(
                e(4, 0, 3) + e(4, 1, 2),
                diag(&[1.0, 1.0, -1.0, -1.0]),
                e(4, 3, 0) + e(4, 2, 1),
                GroupFlag::Sl2,
            ),
            measure: "positive-pair",
            steps: 10_000,
            trials: 20,
        },
        Example {
            name: "ex-2.3.b",
            summary: "PGL2 acting on Sym^2 + trivial in SL4, Q the stabiliser of a hyperplane",
            expected: Case::Case23b,
            flag: FlagConfig::new(4, vec![3]),
            embedding: triple(
                e(4, 0, 1) + e(4, 1, 3) * 2.0,
                diag(&[2.0, 0.0, 0.0, -2.0]),
                e(4, 1, 0) * 2.0 + e(4, 3, 1),
                GroupFlag::Pgl2,
            ),
            measure: "positive-pair",
            steps: 10_000,
            trials: 20,
        },
        Example {
            name: "ex-principal-sl3",
            summary: "principal SL2 in SL3, Q the stabiliser of a line",
            expected: Case::Case23a,
            flag: FlagConfig::new(3, vec![1]),
            embedding: principal(3),
            measure: "positive-pair",
            steps: 100_000,
            trials: 200,
        },
        Example {
            name: "ex-principal-sl4",
            summary: "principal SL2 in SL4, Q the stabiliser of a plane",
            expected: Case::Case23a,
            flag: FlagConfig::new(4, vec![2]),
            embedding: principal(4),
            measure: "positive-pair",
            steps: 10_000,
            trials: 20,
        },
        Example {
            name: "ex-reducible-case1",
            summary: "SL2 in the top left block of SL3, contained in Q",
            expected: Case::Case1,
            flag: FlagConfig::new(3, vec![2]),
            embedding: sl2_in_block(3, 0, 1),
            measure: "positive-pair",
            steps: 10_000,
            trials: 20,
        },
    ]
}

pub fn example(name: &str) -> Result<Example> {
    examples().into_iter().find(|e| e.name == name).ok_or_else(|| {
        let names: Vec<_> = examples().iter().map(|e| e.name).collect();
        Error::Config(format!("unknown example {name:?}; known: {}", names.join(", ")))
    })
}

pub const MEASURES: &[&str] =
    &["positive-pair", "positive-triple", "ldp-spread", "unipotent-pair", "rotation-rich", "delta-diag", "delta-rotation"];

/// `s` and `δ` of the `ldp-spread` measure.
const SPREAD_S: f64 = 0.5;
const SPREAD_DELTA: f64 = 0.01;

fn sl2(m: [[f64; 2]; 2]) -> GroupElement {
    GroupElement::from_mat2(Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])).expect("determinant one")
}

/// Step measures on `SL_2(R)` by name.
pub fn measure(name: &str) -> Result<StepMeasure> {
    match name {
        "positive-pair" => StepMeasure::uniform_rows(&[[[2.0, 1.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 2.0]]]),
        "positive-triple" => StepMeasure::uniform_rows(&[
            [[2.0, 1.0], [1.0, 1.0]],
            [[1.0, 1.0], [1.0, 2.0]],
            [[3.0, 2.0], [1.0, 1.0]],
        ]),
        "ldp-spread" => {
            let (s, d) = (SPREAD_S, SPREAD_DELTA);
            let (big, small) = (s.exp(), (1.0 + d * d) * (-s).exp());
            StepMeasure::uniform(vec![sl2([[big, d], [d, small]]), sl2([[small, d], [d, big]])])
        }
        "unipotent-pair" => StepMeasure::uniform_rows(&[[[1.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 1.0]]]),
        "rotation-rich" => StepMeasure::uniform(vec![GroupElement::rotation(1.0), sl2([[2.0, 0.0], [0.0, 0.5]])]),
        "delta-diag" => Ok(StepMeasure::dirac(sl2([[2.0, 0.0], [0.0, 0.5]]))),
        "delta-rotation" => Ok(StepMeasure::dirac(GroupElement::rotation(1.0))),
        _ => Err(Error::Config(format!("unknown measure {name:?}; known: {}", MEASURES.join(", ")))),
    }
}

/// Default starting lattice of dimension `k`: `U L Z^k` with `U`, `L` the
/// upper and lower shears by `√3 - 1`. No lattice vector lies on a
/// coordinate axis, so diagonal orbits stay bounded in both directions.
pub fn default_lattice(k: usize) -> Result<LatticePoint> {
    let c = 3f64.sqrt() - 1.0;
    let mut u = DMatrix::identity(k, k);
    let mut l = DMatrix::identity(k, k);
    for i in 0..k.saturating_sub(1) {
        u[(i, i + 1)] = c;
        l[(i + 1, i)] = c;
    }
    LatticePoint::reduce(&(u * l))
}

/// The fibre block: the first non-absorbed block of size at least 2 on which
/// the Borel of `H` acts nontrivially, else the first one of size at least 2.
fn fibre_block(cfg: &FlagConfig, emb: &EmbeddingSpec) -> Result<Option<(usize, DMatrix<f64>, DMatrix<f64>)>> {
    let pairs = induced_morphism(cfg, emb)?;
    let pick = pairs.iter().find(|p| p.xbar.amax() > 1e-12 || p.ebar.amax() > 1e-12).or(pairs.first());
    Ok(pick.map(|p| (p.range.1 - p.range.0, p.xbar.clone(), p.ebar.clone())))
}

/// Dimension of the fibre lattices [`walk_cocycle`] acts on.
pub fn fibre_dim(cfg: &FlagConfig, emb: &EmbeddingSpec) -> Result<usize> {
    Ok(fibre_block(cfg, emb)?.map_or(1, |b| b.0))
}

fn block_morphism(cfg: &FlagConfig, emb: &EmbeddingSpec, xbar: &DMatrix<f64>, ebar: &DMatrix<f64>) -> Result<Morphism> {
    let (_, t) = extended_block_triples(cfg, emb)?
        .into_iter()
        .find(|(p, _)| &p.xbar == xbar && &p.ebar == ebar)
        .ok_or_else(|| Error::Unsupported("fibre block has no extended triple".into()))?;
    Ok(Morphism::from_representation(Representation::from_morphism(TripleMorphism::new(t))))
}

/// Cocycle of the `H`-action on the bundle, evaluated on one fibre block.
///
/// Case 1 uses the morphism on the block with no section. Case 2.1 is trivial.
/// Cases 2.2 and 2.3.b use the Borel map `Q_H → S` through `sec`, and Case
/// 2.3.a uses the extended triple through `sec`.
pub fn walk_cocycle(cfg: &FlagConfig, emb: &EmbeddingSpec, case: Case, sec: CircleSection) -> Result<CocycleHandle> {
    let Some((m, xbar, ebar)) = fibre_block(cfg, emb)? else {
        // S is trivial: the fibre is a point
        return match case {
            Case::Case21 => Ok(morphism_cocycle(Morphism::trivial(1), None)),
            _ => Err(Error::Unsupported("no block of size at least 2 outside R0".into())),
        };
    };
    match case {
        Case::Case1 => Ok(morphism_cocycle(block_morphism(cfg, emb, &xbar, &ebar)?, None)),
        Case::Case21 => Ok(morphism_cocycle(Morphism::trivial(m), None)),
        Case::Case23a => Ok(morphism_cocycle(block_morphism(cfg, emb, &xbar, &ebar)?, Some(sec))),
        Case::Case22 | Case::Case23b => Ok(morphism_cocycle(Morphism::borel(xbar, ebar)?, Some(sec))),
    }
}

/// `α(g, η) = ρ(g)` for the morphism `ρ: H → S` of a Case 2.3.a
/// configuration, with no twist by the section.
pub fn direct_cocycle(cfg: &FlagConfig, emb: &EmbeddingSpec) -> Result<CocycleHandle> {
    let (_, xbar, ebar) =
        fibre_block(cfg, emb)?.ok_or_else(|| Error::Unsupported("no block of size at least 2 outside R0".into()))?;
    Ok(morphism_cocycle(block_morphism(cfg, emb, &xbar, &ebar)?, None))
}
