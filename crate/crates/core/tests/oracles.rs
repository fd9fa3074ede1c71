//! Worked examples checked against direct summation, exhaustive search or
//! closed-form values.

mod common;

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specdbl::coherence::{build_matrix, Side};
use specdbl::diagnostics::{example_counterexample, statistical_doubling, sumset_stats};
use specdbl::fourier::{dft, parseval_capacity, spectrum};
use specdbl::group::{random_subset, FiniteAbelianGroup};
use specdbl::linalg::CMatrix;
use specdbl::refine::{
    audit_trace, final_bound_report, refine_linear, refine_quadratic, RefineConfig, Variant,
};
use specdbl::regularity::{
    brute_force_max, decide_regularity, extract_minor, resolution, spectral_certificate,
    witness_search, witness_search_best, ExtractionConstants, ExtractionMode, RegularityBudget,
    RegularityStatus,
};

fn block_sign(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| {
        let s = |i: usize| if i < n / 2 { 1.0 } else { -1.0 };
        Complex64::new(s(r) * s(c), 0.0)
    })
}

#[test]
fn two_plane_coefficients_by_direct_summation() {
    let (a, _) = example_counterexample(2).unwrap();
    let g = a.group();
    let table = dft(&a).unwrap();
    let naive = common::naive_table(&a);
    assert!((naive[0] - Complex64::new(7.0, 0.0)).norm() < 1e-12);
    for x in a.iter().filter(|&x| x != 0) {
        assert!((naive[x] - Complex64::new(3.0, 0.0)).norm() < 1e-12);
        assert!((table.coeff(x) - naive[x]).norm() < 1e-12);
    }
    let idx: BTreeSet<usize> = a.iter().collect();
    let at_04: BTreeSet<usize> = spectrum(&table, 0.4).unwrap().members().iter().collect();
    assert_eq!(at_04, idx);
    assert_eq!(at_04, common::naive_spectrum(&a, 0.4));
    let at_half: Vec<usize> = spectrum(&table, 0.5).unwrap().members().iter().collect();
    assert_eq!(at_half, vec![0]);
    assert_eq!(common::naive_sumset(g, &idx, &idx, 1).len(), 16);
}

#[test]
fn two_plane_sizes() {
    for n in 2..=5 {
        let (a, check) = example_counterexample(n).unwrap();
        assert_eq!(a.len(), (1 << (n + 1)) - 1);
        assert_eq!(check.spectrum_at_threshold, a.len());
        let stats = sumset_stats(&a).unwrap();
        assert_eq!(stats.sum_size, a.group().size());
        assert_eq!(stats.doubling, a.group().size() as f64 / a.len() as f64);
    }
}

#[test]
fn capacity_closed_form() {
    assert_eq!(parseval_capacity(16, 4, 0.5), 16.0);
    assert_eq!(resolution(0.1), 100);
    assert_eq!(resolution(0.5), 20);
}

#[test]
fn coherence_mean_against_direct_average() {
    let g = FiniteAbelianGroup::binary(6).unwrap();
    let a = random_subset(&g, 8, 3).unwrap();
    let table = dft(&a).unwrap();
    let gamma = spectrum(&table, 0.3).unwrap().into_members();
    let cm = build_matrix(&a, &gamma, &table).unwrap();
    let rows = a.indices();
    let mut total = 0.0;
    for gm in gamma.iter() {
        total += common::naive_coeff(&g, &rows, gm).norm() / a.len() as f64;
    }
    let want = total / gamma.len() as f64;
    assert!((cm.mean_value() - Complex64::new(want, 0.0)).norm() < 1e-12);
    assert!(want >= 0.3);
}

#[test]
fn block_sign_bounds() {
    let m = block_sign(4);
    let cert = spectral_certificate(&m, 0.99, 1e-10, 1000);
    assert!(cert.upper_bound >= 1.0 && !cert.certified);
    for side in [Side::Rows, Side::Cols] {
        let b = brute_force_max(&m, 2, side, 1_000_000).unwrap();
        assert!((b.value - 1.0).abs() < 1e-12);
    }
    let w = witness_search(&block_sign(10), 0.5, &RegularityBudget::default()).unwrap();
    assert!(w.value >= 0.5);
}

#[test]
fn two_plane_matrix_is_irregular() {
    let (a, _) = example_counterexample(2).unwrap();
    let table = dft(&a).unwrap();
    let gamma = spectrum(&table, 0.4).unwrap().into_members();
    let cm = build_matrix(&a, &gamma, &table).unwrap();
    let v = decide_regularity(cm.matrix(), 0.01, &RegularityBudget::default());
    assert_eq!(v.status, RegularityStatus::Irregular);
    let w = v.witness.unwrap();
    // exhaustive search over {0, +1, -1} on the 7 rows
    let b = brute_force_max(cm.matrix(), 2, Side::Rows, 1_000_000).unwrap();
    assert!(b.value >= 0.01 && b.value <= v.upper_bound + 1e-9);
    let e = extract_minor(
        cm.matrix(),
        &w,
        0.01,
        ExtractionMode::Opportunistic,
        &ExtractionConstants::default(),
    )
    .unwrap();
    assert!(e.new_mean > e.old_mean);
    // direct mean of the chosen minor
    let direct = cm.matrix().submatrix(&e.rows, &e.cols).mean().norm();
    assert!((direct - e.new_mean).abs() < 1e-12);
}

#[test]
fn random_phases_are_undetermined_between_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let data = (0..1600)
        .map(|_| Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU))
        .collect();
    let m = CMatrix::new(40, 40, data).unwrap();
    let budget = RegularityBudget::default();
    let w = witness_search_best(&m, &budget).unwrap();
    let cert = spectral_certificate(&m, 1.0, budget.power_tol, budget.power_max_iter);
    assert!(w.value < cert.upper_bound);
    let lambda = (w.value + cert.upper_bound) / 2.0;
    let v = decide_regularity(&m, lambda, &budget);
    assert_eq!(v.status, RegularityStatus::Undetermined);
    assert!(v.lower_bound < lambda && lambda <= v.upper_bound);
}

#[test]
fn two_plane_pairs_within_planes() {
    let (a, _) = example_counterexample(2).unwrap();
    let r = statistical_doubling(&a, 0.4, 0).unwrap();
    assert!(r.exact && r.total_pairs == 49);
    // pairs inside the first plane or inside the second plane
    let direct = (4 * 4 + 4 * 4 - 1) as f64 / 49.0;
    assert!(r.probability >= direct - 1e-12 && r.probability >= 0.4);
}

#[test]
fn two_plane_refinement_both_variants() {
    for n in 3..=5 {
        let (a, _) = example_counterexample(n).unwrap();
        let g = a.group().clone();
        for (variant, delta) in [(Variant::Linear, 0.3), (Variant::Quadratic, 0.4)] {
            let mut cfg = RefineConfig::new(variant, 0.4, delta);
            cfg.max_iterations = 200;
            let r = match variant {
                Variant::Linear => refine_linear(&a, &cfg),
                Variant::Quadratic => refine_quadratic(&a, &cfg),
            }
            .unwrap();
            assert!(
                r.terminated.finished(),
                "n={n} {variant:?}: {:?}",
                r.terminated
            );
            let star = r.a_star_set().unwrap();
            let spec = common::naive_spectrum(&star, 0.4);
            assert!(common::naive_sumset(&g, &spec, &spec, 1).len() < g.size());
            let audit = audit_trace(&r, &cfg).unwrap();
            assert!(audit.passed, "{:?}", audit.violations);
            let (_, k2) = r.step_counts();
            assert!(r.rho_star >= variant.rho_floor(0.4, k2) - 1e-12);
            // before any growth step the threshold never drops below eps/2
            for step in r.trace.iter().take_while(|s| s.gate_ok) {
                assert!(step.rho >= 0.2);
            }
            let bounds = final_bound_report(&r, &a, &cfg).unwrap();
            assert!(
                bounds.passed && bounds.pairing_holds,
                "{:?}",
                bounds.violations
            );
        }
    }
}
