//! Wick-enumeration oracle: agreement with the recursion and identity
//! residuals, on top of its own guard behavior.

use proptest::prelude::*;

use schatten::moments::{MomentEvaluator, MomentQuery};
use schatten::oracle::{isserlis_moment, quartic_identity_residual};
use schatten::spectrum::{trace_powers, Spectrum};
use schatten::Matrix;

fn spectrum_strategy(max_dim: usize) -> impl Strategy<Value = Spectrum> {
    proptest::collection::vec(0.05_f64..3.0, 2..=max_dim)
        .prop_map(|eig| Spectrum::new(eig).expect("positive entries"))
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(48) })]

    #[test]
    fn enumeration_matches_recursion_for_short_chains(
        (s, k, m, reversed) in (1usize..=2).prop_flat_map(|q| {
            (
                spectrum_strategy(4),
                proptest::collection::vec(0u32..=2, q),
                proptest::collection::vec(0u32..=2, q),
                proptest::bool::ANY,
            )
        })
    ) {
        let t = trace_powers(&s, (k.iter().sum::<u32>() + m.iter().sum::<u32>()) as usize)
            .expect("fits");
        let query = if reversed {
            MomentQuery::reversed(k, m).expect("equal lengths")
        } else {
            MomentQuery::same_order(k, m).expect("equal lengths")
        };
        let rec = MomentEvaluator::new(&t).evaluate(&query).expect("in budget");
        let wick = isserlis_moment(&query, &s).expect("small dimension");
        prop_assert!((rec - wick).abs() <= 1e-10 * rec.abs().max(1.0), "{rec} vs {wick}");
    }

    #[test]
    fn quartic_identity_residual_vanishes(
        (dim, seed) in (2usize..=4, 0u64..1000)
    ) {
        // Deterministic pseudo-random (A, S) pairs from a tiny generator.
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let a = Matrix::new(
            dim,
            dim,
            (0..dim * dim).map(|_| next()).collect(),
        ).expect("valid");
        let s = Spectrum::new(
            (0..dim)
                .map(|_| {
                    let v = next();
                    v * v + 0.05
                })
                .collect(),
        ).expect("positive");
        let residual = quartic_identity_residual(&a, &s).expect("small dimension");
        prop_assert!(residual < 1e-12, "residual {residual}");
    }
}

#[test]
fn pass_order_matters_beyond_symmetric_cases() {
    // Same exponent multiset, different pass orders: on a skewed
    // spectrum the two kinds disagree, and the oracle tracks each.
    let s = Spectrum::new(vec![3.0, 0.2]).expect("valid");
    let t = trace_powers(&s, 8).expect("fits");
    let ev = MomentEvaluator::new(&t);
    let same = MomentQuery::same_order(vec![2, 1], vec![1, 2]).expect("valid");
    let rev = MomentQuery::reversed(vec![2, 1], vec![1, 2]).expect("valid");
    let v_same = ev.evaluate(&same).expect("in budget");
    let v_rev = ev.evaluate(&rev).expect("in budget");
    assert!((v_same - v_rev).abs() > 1e-9 * v_same.abs().max(1.0));
    let w_same = isserlis_moment(&same, &s).expect("small dimension");
    let w_rev = isserlis_moment(&rev, &s).expect("small dimension");
    assert!((v_same - w_same).abs() <= 1e-10 * v_same.abs().max(1.0));
    assert!((v_rev - w_rev).abs() <= 1e-10 * v_rev.abs().max(1.0));
}

#[test]
fn oversized_enumerations_are_refused() {
    let s = Spectrum::identity(12);
    let query = MomentQuery::same_order(vec![1; 4], vec![1; 4]).expect("valid");
    let err = isserlis_moment(&query, &s).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn identity_requires_matching_shapes() {
    let a = Matrix::new(2, 3, vec![0.0; 6]).expect("valid");
    let s = Spectrum::identity(2);
    assert!(quartic_identity_residual(&a, &s).is_err());
}
