use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use proptest::prelude::*;

use homdyn::boundary::StepMeasure;
use homdyn::catalog::{self, default_lattice, walk_cocycle};
use homdyn::circle::CirclePoint;
use homdyn::classifier::{classify, exact, lie_intersection, Case, EmbeddingSpec, FlagConfig};
use homdyn::cocycle::{morphism_cocycle, CircleSection, CocycleHandle, Morphism};
use homdyn::fiber::{capped_shortest, LatticePoint};
use homdyn::group::{iwasawa_decompose, GroupElement, Representation};
use homdyn::walk::{
    cesaro_distribution, ldp_tail, lyapunov, renewal_sum, step, BundlePoint, CesaroParams, RenewalParams,
    TestFunction,
};

fn sl(n: usize, entries: &[f64]) -> Option<GroupElement> {
    let m = DMatrix::from_row_slice(n, n, &entries[..n * n]);
    let d = m.determinant();
    if d.abs() < 0.05 {
        return None;
    }
    let mut m = m / d.abs().powf(1.0 / n as f64);
    if d < 0.0 {
        m.row_mut(0).neg_mut();
    }
    GroupElement::special(m).ok()
}

fn sl2(entries: [f64; 4]) -> Option<Matrix2<f64>> {
    sl(2, &entries).map(|g| g.mat2())
}

fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0..3.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn iwasawa_factors_have_their_shape(n in 2usize..5, v in entries(16)) {
        let Some(g) = sl(n, &v) else { return Ok(()) };
        let f = iwasawa_decompose(&g).unwrap();
        prop_assert!((g.matrix() - f.reconstruct()).amax() <= 1e-11);
        prop_assert!((f.k.transpose() * &f.k - DMatrix::identity(n, n)).amax() <= 1e-12);
        let a = f.a_diag();
        prop_assert!(a.iter().all(|v| *v > 0.0));
        prop_assert!((a.iter().product::<f64>() - 1.0).abs() <= 1e-10);
        for i in 0..n {
            prop_assert!((f.nu[(i, i)] - 1.0).abs() <= 1e-12);
            for j in 0..i {
                prop_assert_eq!(f.nu[(i, j)], 0.0);
                prop_assert_eq!(f.a[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn cocycle_identity_holds(
        a in prop::array::uniform4(-3.0..3.0f64),
        b in prop::array::uniform4(-3.0..3.0f64),
        theta in 0.0..2.0 * PI,
        m in 2usize..5,
    ) {
        let (Some(g1), Some(g2)) = (sl2(a), sl2(b)) else { return Ok(()) };
        let eta = CirclePoint::from_angle(theta);
        let handles = [
            CocycleHandle::iwasawa_sign(CircleSection::plain()),
            CocycleHandle::iwasawa_sign(CircleSection::connected_component()),
            morphism_cocycle(Morphism::from_representation(Representation::principal(m)), Some(CircleSection::plain())),
            morphism_cocycle(Morphism::from_representation(Representation::sym(m)), None),
        ];
        for h in &handles {
            let r = h.identity_residual(&g1, &g2, &eta).unwrap();
            // values grow like ‖g‖^(m-1); compare relative to that scale
            let scale = (g1 * g2).norm().max(1.0).powi(m as i32);
            prop_assert!(r <= 1e-11 * scale, "{h:?}: residual {r:e}");
        }
    }

    #[test]
    fn two_steps_compose(
        a in prop::array::uniform4(-2.0..2.0f64),
        b in prop::array::uniform4(-2.0..2.0f64),
        theta in 0.0..2.0 * PI,
    ) {
        let (Some(g1), Some(g2)) = (sl2(a), sl2(b)) else { return Ok(()) };
        let x = BundlePoint::new(CirclePoint::from_angle(theta), default_lattice(2).unwrap());
        let h = CocycleHandle::iwasawa_sign(CircleSection::plain());
        let two = step(&g2, &step(&g1, &x, &h).unwrap(), &h).unwrap();
        let one = step(&(g2 * g1), &x, &h).unwrap();
        prop_assert!(two.theta.arc_distance(&one.theta) <= 1e-12);
        prop_assert!((two.z.shortest_vector() - one.z.shortest_vector()).abs() <= 1e-9);
    }

    #[test]
    fn reduction_spans_the_same_lattice(n in 2usize..5, v in entries(16)) {
        let Some(g) = sl(n, &v) else { return Ok(()) };
        let b = g.matrix().clone();
        let z = LatticePoint::reduce(&b).unwrap();
        let red = z.basis();
        prop_assert!((red.determinant().abs() - 1.0).abs() <= 1e-9);
        // change of basis is integral and unimodular
        let u = b.clone().try_inverse().unwrap() * &red;
        prop_assert!(u.iter().all(|c| (c - c.round()).abs() <= 1e-6), "{u}");
        prop_assert!((u.map(f64::round).determinant().abs() - 1.0).abs() <= 1e-9);
        // the first reduced vector is no longer than any input column
        let shortest_in = b.column_iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
        prop_assert!(z.shortest_vector() <= shortest_in * (1.0 + 1e-9) * 2f64.powf((n as f64 - 1.0) / 2.0));
        if n == 2 {
            prop_assert!(z.shortest_vector() <= shortest_in * (1.0 + 1e-9));
        }
        let again = LatticePoint::reduce(&red).unwrap();
        prop_assert!(again.distance(&z) <= 1e-9);
    }

    #[test]
    fn lie_intersection_matches_rational_rank(
        a in proptest::collection::vec(proptest::collection::vec(-2i64..3, 9), 1..5),
        b in proptest::collection::vec(proptest::collection::vec(-2i64..3, 9), 1..5),
    ) {
        let to_mats = |s: &[Vec<i64>]| -> Vec<DMatrix<f64>> {
            s.iter().map(|v| DMatrix::from_row_slice(3, 3, &v.iter().map(|&x| x as f64).collect::<Vec<_>>())).collect()
        };
        let to_q = |s: &[Vec<i64>]| -> Vec<Vec<exact::Q>> { s.iter().map(|v| v.iter().map(|&x| exact::q(x)).collect()).collect() };
        let (ma, mb) = (to_mats(&a), to_mats(&b));
        let (qa, qb) = (to_q(&a), to_q(&b));
        let float = lie_intersection(&ma, &mb).unwrap();
        if !float.ill_conditioned {
            prop_assert_eq!(float.dim(), exact::intersection_dim(&qa, &qb));
        }
    }

    #[test]
    fn case_is_invariant_under_block_upper_conjugation(
        which in 0usize..8,
        upper in proptest::collection::vec(-1.0..1.0f64, 16),
        diag in proptest::collection::vec(0.5..2.0f64, 4),
    ) {
        let ex = &catalog::examples()[which];
        let n = ex.flag.n;
        // P in the parabolic of the flag: anything above the diagonal blocks
        let mut p = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&diag[..n]));
        for (lo, hi) in ex.flag.blocks() {
            for i in lo..hi {
                for j in (i + 1)..n {
                    p[(i, j)] = upper[i * 4 + j];
                }
            }
        }
        prop_assume!(ex.flag.preserves(&p, 1e-12));
        let emb = EmbeddingSpec { triple: ex.embedding.triple.conjugate(&p).unwrap(), group: ex.embedding.group };
        let label = classify(&ex.flag, &emb).unwrap();
        prop_assert_eq!(label.case, ex.expected, "{}", ex.name);
    }
}

#[test]
fn case_diagnostics_follow_the_taxonomy() {
    for ex in catalog::examples() {
        let d = classify(&ex.flag, &ex.embedding).unwrap().diagnostics;
        match ex.expected {
            Case::Case22 => assert_eq!(d.intersection_nilpotent, Some(true), "{}", ex.name),
            Case::Case23a => assert!(d.extension_residuals.iter().all(|r| *r <= 1e-9), "{}", ex.name),
            Case::Case23b => assert!(d.extension_residuals.iter().any(|r| *r > 0.1), "{}", ex.name),
            Case::Case1 => assert!(d.dim_qh_r0.is_none(), "{}", ex.name),
            Case::Case21 => {}
        }
    }
}

#[test]
fn invalid_flags_are_refused() {
    let emb = catalog::example("ex-reducible").unwrap().embedding;
    for dims in [vec![0], vec![3], vec![2, 1], vec![4]] {
        assert!(classify(&FlagConfig::new(3, dims.clone()), &emb).is_err(), "{dims:?}");
    }
}

#[test]
fn walks_are_seed_deterministic() {
    let ex = catalog::example("ex-principal-sl4").unwrap();
    let mu = catalog::measure(ex.measure).unwrap();
    let h = walk_cocycle(&ex.flag, &ex.embedding, ex.expected, CircleSection::cone(0.0, PI / 2.0)).unwrap();
    let x = BundlePoint::new(CirclePoint::e1(), default_lattice(h.fibre_dim()).unwrap());
    let p = CesaroParams::new(2000, 6, 77);
    let a = cesaro_distribution(&mu, &x, &h, capped_shortest, &p).unwrap();
    let b = cesaro_distribution(&mu, &x, &h, capped_shortest, &p).unwrap();
    assert_eq!(a, b);
    let c = cesaro_distribution(&mu, &x, &h, capped_shortest, &CesaroParams::new(2000, 6, 78)).unwrap();
    assert_ne!(a.mean, c.mean);
    assert_eq!(lyapunov(&mu, 1000, 8, 5).unwrap().estimate, lyapunov(&mu, 1000, 8, 5).unwrap().estimate);
}

/// The certified bound on the terms past `k_max` covers a Monte Carlo
/// estimate of those terms.
#[test]
fn truncation_bound_covers_the_omitted_tail() {
    let mu = catalog::measure("ldp-spread").unwrap();
    let lambda = 2.0 * lyapunov(&mu, 10_000, 100, 1).unwrap().estimate;
    let grid: Vec<usize> = (1..=10).map(|k| 100 * k).collect();
    let table = ldp_tail(&mu, CirclePoint::e1(), lambda, lambda / 4.0, &grid, 10_000, 2).unwrap();
    let ldp = table.constants().expect("negative slope");
    let f = TestFunction::BumpU;
    let w = CirclePoint::e1();
    let t = 5.0;
    let k_max = (3.0 * t / lambda).ceil() as usize;
    let params = |k_max, trials| RenewalParams { t, k_max, trials, seed: 3, lambda, ldp: Some(ldp) };
    let short = renewal_sum(&mu, &f, w, &params(k_max, 4000)).unwrap();
    let long = renewal_sum(&mu, &f, w, &params(20 * k_max, 4000)).unwrap();
    // same seed, so the long sums extend the short ones trajectory by trajectory
    let omitted = long.estimate - short.estimate;
    let bound = short.truncation_bound.unwrap();
    assert!(omitted >= -1e-12);
    assert!(bound >= omitted, "bound {bound} < omitted {omitted}");
}

#[test]
fn deterministic_walk_has_exact_rate() {
    let mu = StepMeasure::dirac(GroupElement::diag_flow(0.5));
    let r = lyapunov(&mu, 1000, 10, 1).unwrap();
    assert!(r.deterministic);
    assert!((r.estimate - 0.25).abs() < 1e-12);
}
