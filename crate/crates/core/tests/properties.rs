mod common;

use std::collections::BTreeSet;

use num_complex::Complex64;
use proptest::prelude::*;

use specdbl::coherence::{bilinear, build_matrix, BoundedFunction, Side};
use specdbl::diagnostics::{high_threshold_closure, statistical_doubling};
use specdbl::fourier::{dft, inverse, parseval_capacity, spectrum};
use specdbl::group::{difference_set, sumset, ElementSet, FiniteAbelianGroup};
use specdbl::io::SetFile;
use specdbl::refine::{audit_trace, refine, RefineConfig, Variant};
use specdbl::regularity::{
    spectral_certificate, step_approximate, witness_search_best, ExtractionMode, RegularityBudget,
};

fn group_strategy() -> impl Strategy<Value = FiniteAbelianGroup> {
    prop::collection::vec(2usize..=6, 1..=3)
        .prop_filter("small", |o| o.iter().product::<usize>() <= 128)
        .prop_map(|o| FiniteAbelianGroup::new(&o).unwrap())
}

fn set_in(g: FiniteAbelianGroup) -> impl Strategy<Value = ElementSet> {
    let n = g.size();
    prop::collection::btree_set(0..n, 1..=n.min(40))
        .prop_map(move |s| ElementSet::from_indices(&g, s).unwrap())
}

fn set_strategy() -> impl Strategy<Value = ElementSet> {
    group_strategy().prop_flat_map(set_in)
}

fn binary_set(rank: usize) -> impl Strategy<Value = ElementSet> {
    set_in(FiniteAbelianGroup::binary(rank).unwrap())
}

fn bounded(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((0.0f64..=1.0, 0.0f64..std::f64::consts::TAU), len).prop_map(|v| {
        v.into_iter()
            .map(|(r, t)| Complex64::from_polar(r, t))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn characters_are_homomorphisms(g in group_strategy(), seed in any::<u64>()) {
        let n = g.size() as u64;
        let (gamma, x, y) = ((seed % n) as usize, ((seed >> 20) % n) as usize, ((seed >> 40) % n) as usize);
        let lhs = g.char_value_index(gamma, g.add_index(x, y));
        let rhs = g.char_value_index(gamma, x) * g.char_value_index(gamma, y);
        prop_assert!((lhs - rhs).norm() < 1e-12);
        prop_assert_eq!(g.encode(&g.decode(x).unwrap()).unwrap(), x);
        prop_assert_eq!(g.add_index(x, y), common::naive_add(&g, x, y, 1));
        prop_assert_eq!(g.sub_index(x, y), common::naive_add(&g, x, y, -1));
    }

    #[test]
    fn sumsets_match_direct_enumeration(
        (s, t) in group_strategy().prop_flat_map(|g| (set_in(g.clone()), set_in(g)))
    ) {
        let g = s.group().clone();
        let si: BTreeSet<usize> = s.iter().collect();
        let ti: BTreeSet<usize> = t.iter().collect();
        let fast: BTreeSet<usize> = sumset(&s, &t).unwrap().iter().collect();
        prop_assert_eq!(fast, common::naive_sumset(&g, &si, &ti, 1));
        let diff: BTreeSet<usize> = difference_set(&s, &t).unwrap().iter().collect();
        prop_assert_eq!(diff, common::naive_sumset(&g, &si, &ti, -1));
    }

    #[test]
    fn spectra_are_symmetric_and_within_capacity(a in set_strategy(), eps in 0.05f64..=1.0) {
        let table = dft(&a).unwrap();
        let spec = spectrum(&table, eps).unwrap().into_members();
        let g = a.group();
        prop_assert!(spec.contains(0));
        for x in spec.iter() {
            prop_assert!(spec.contains(g.neg_index(x)));
        }
        prop_assert!(spec.len() as f64 <= parseval_capacity(g.size(), a.len(), eps));
        // Parseval identity itself
        let energy: f64 = table.coeffs().iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((energy - (g.size() * a.len()) as f64).abs() < 1e-8 * energy);
    }

    #[test]
    fn transform_inverts(a in set_strategy()) {
        let back = inverse(&dft(&a).unwrap());
        for (x, v) in back.iter().enumerate() {
            let want = if a.contains(x) { 1.0 } else { 0.0 };
            prop_assert!((v - Complex64::new(want, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn coherence_columns_are_phase_normalised(a in set_strategy(), rho in 0.1f64..=0.9) {
        let table = dft(&a).unwrap();
        let gamma = spectrum(&table, rho).unwrap().into_members();
        let cm = build_matrix(&a, &gamma, &table).unwrap();
        let m = cm.matrix();
        prop_assert!(m.data().iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
        for s in m.column_sums() {
            prop_assert!(s.im.abs() < 1e-9 * a.len() as f64 && s.re >= -1e-9);
        }
        let one = Complex64::new(1.0, 0.0);
        let f = BoundedFunction::constant(Side::Rows, m.rows(), one).unwrap();
        let g = BoundedFunction::constant(Side::Cols, m.cols(), one).unwrap();
        let cells = (m.rows() * m.cols()) as f64;
        let b = bilinear(&f, m, &g).unwrap();
        prop_assert!((b - cells * cm.mean_value()).norm() < 1e-9 * cells);
        prop_assert!(cm.mean_value().re >= rho - 1e-9);
        // against a direct average of gamma(a) conj(gamma(A)) / |gamma(A)|
        let rows = a.indices();
        let mut acc = Complex64::new(0.0, 0.0);
        for &gm in cm.col_elements() {
            let c = common::naive_coeff(a.group(), &rows, gm);
            for &x in &rows {
                acc += common::naive_coeff(a.group(), &[x], gm) * c.conj() / c.norm();
            }
        }
        prop_assert!((acc / cells - cm.mean_value()).norm() < 1e-9);
    }

    #[test]
    fn witness_never_beats_certificate(a in set_strategy(), rho in 0.1f64..=0.6, seed in 0u64..1000) {
        let table = dft(&a).unwrap();
        let gamma = spectrum(&table, rho).unwrap().into_members();
        let cm = build_matrix(&a, &gamma, &table).unwrap();
        let budget = RegularityBudget { restarts: 3, seed, ..RegularityBudget::default() };
        let cert = spectral_certificate(cm.matrix(), 0.1, budget.power_tol, budget.power_max_iter);
        if let Some(w) = witness_search_best(cm.matrix(), &budget) {
            prop_assert!(w.value <= cert.upper_bound + 1e-9);
            prop_assert!(w.residual() <= 1e-8 * w.f.len().max(w.g.len()) as f64);
            prop_assert!(w.f.sup_norm() <= 1.0 + 1e-9 && w.g.sup_norm() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn step_approximation_is_uniform(v in (1usize..50).prop_flat_map(bounded), eta in 0.02f64..=1.0) {
        let f = BoundedFunction::new(Side::Cols, v.clone()).unwrap();
        let s = step_approximate(&f, eta).unwrap();
        let approx = s.values();
        for (x, y) in v.iter().zip(&approx) {
            prop_assert!((x - y).norm() <= eta);
        }
        prop_assert!(s.piece_count() as f64 <= 100.0 / (eta * eta));
        let total: usize = s.pieces.iter().map(|p| p.members.len()).sum();
        prop_assert_eq!(total, v.len());
    }

    #[test]
    fn doubling_probability_floor(a in binary_set(5), eps in 0.1f64..=1.0) {
        let r = statistical_doubling(&a, eps, 0).unwrap();
        prop_assert!(r.exact);
        prop_assert!(r.holds(), "{:?}", r);
    }

    #[test]
    fn high_threshold_spectra_are_closed(a in set_strategy(), eps in 0.76f64..=1.0) {
        prop_assert!(high_threshold_closure(&a, eps).unwrap().holds());
    }

    #[test]
    fn set_files_round_trip(a in set_strategy(), seed in any::<u64>()) {
        let file = SetFile::from_set(&a, Some("p".into()), Some(seed));
        let text = serde_json::to_string(&file).unwrap();
        let back = SetFile::parse(&text).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_set().unwrap(), a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn refinement_is_deterministic_and_audits(
        a in binary_set(6),
        quadratic in any::<bool>(),
        eps in 0.3f64..=0.6,
        seed in 0u64..100,
    ) {
        let variant = if quadratic { Variant::Quadratic } else { Variant::Linear };
        let mut cfg = RefineConfig::new(variant, eps, 0.3);
        cfg.mode = ExtractionMode::Opportunistic;
        cfg.seed = seed;
        let r1 = refine(&a, &cfg).unwrap();
        let r2 = refine(&a, &cfg).unwrap();
        prop_assert_eq!(&r1, &r2);
        let audit = audit_trace(&r1, &cfg).unwrap();
        prop_assert!(audit.passed, "{:?}", audit.violations);
        let star = r1.a_star_set().unwrap();
        prop_assert!(star.is_subset(&a));
        prop_assert!(r1.rho_star >= eps - 1e-12 && r1.rho_star <= 1.0);
    }
}
