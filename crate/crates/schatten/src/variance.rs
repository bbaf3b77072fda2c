//! Exact second moment and variance of the cycle-average estimator.
//!
//! The estimator averages cycle products over all `C(n,p)` increasing
//! p-cycles, so its second moment is the pair-count-weighted sum of
//! pair expectations over overlap pattern classes:
//!
//! ```text
//! E[V²] = C(n,p)⁻² Σ_classes multiplicity(class) · E[pair]
//! ```
//!
//! Disjoint pairs contribute `Tr²(S^p)`; single-overlap pairs contribute
//! `2·S_{2p} + S_p²` (both with closed pair counts); classes with `q ≥ 2`
//! shared indices reduce to a same-order chain moment after folding the
//! wraparound windows into the tails. Counts stay exact big integers
//! until one final conversion per class, and aggregation order is fixed
//! (ascending `q`, classes in sorted order, compensated summation), so
//! results are bit-stable.
//!
//! Three slower routes cross-check the pipeline: `variance_literal`
//! transcribes an alternative printed expansion verbatim (diagnostic,
//! known to disagree; see ERRATA.md), `brute_variance` walks every
//! ordered cycle pair, and `oracle_variance` replaces the recursion with
//! the Wick-expansion oracle.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::cycles::{
    binomial, enumerate_increasing_cycles, overlap_decompose, pair_count, pattern_classes_from,
    OverlapPattern,
};
use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::moments::{MomentEvaluator, MomentQuery};
use crate::oracle::isserlis_moment;
use crate::spectrum::{schatten_2p_power, Spectrum, TracePowerTable};
use crate::words::star_sum;

/// Pair count and summed pair expectation for one overlap size.
#[derive(Debug, Clone, Serialize)]
pub struct QContribution {
    pub q: usize,
    /// Number of ordered pairs with this overlap size, exact; serialized
    /// as a decimal string because it overflows u64 at modest `n`.
    #[serde(serialize_with = "serialize_biguint")]
    pub pair_count: BigUint,
    /// Multiplicity-weighted sum of pair expectations at this `q`.
    pub expectation_sum: f64,
}

fn serialize_biguint<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Exact variance of the estimator with its per-overlap breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub p: u32,
    pub n: u32,
    pub d: usize,
    /// Estimator mean `Tr(S^p)`; the estimator is unbiased.
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub per_q: Vec<QContribution>,
}

/// Diagnostic evaluation of the printed variance expansion next to the
/// normative value.
#[derive(Debug, Clone, Serialize)]
pub struct LiteralVarianceReport {
    pub p: u32,
    pub n: u32,
    pub d: usize,
    /// Value of the expansion exactly as printed.
    pub literal_variance: f64,
    /// Value from [`exact_variance`].
    pub normative_variance: f64,
    pub discrepancy: f64,
    /// Convention chosen for the under-determined wraparound windows.
    pub convention_note: String,
}

/// Expectation of one ordered cycle pair from its overlap pattern.
///
/// Disjoint cycles factor into `Tr²(S^p)`. Otherwise the wraparound
/// windows fold into the final ones (`k_q += k₀`, `m_q += m₀`) and the
/// pair is the same-order chain moment on the folded exponents.
pub fn pair_expectation(pattern: &OverlapPattern, table: &TracePowerTable) -> Result<f64> {
    let evaluator = MomentEvaluator::new(table);
    pair_expectation_with(pattern, &evaluator, table)
}

fn folded_query(pattern: &OverlapPattern) -> Result<MomentQuery> {
    let q = pattern.q();
    let mut k = pattern.k()[1..].to_vec();
    let mut m = pattern.m()[1..].to_vec();
    k[q - 1] += pattern.k()[0];
    m[q - 1] += pattern.m()[0];
    MomentQuery::same_order(k, m)
}

fn pair_expectation_with(
    pattern: &OverlapPattern,
    evaluator: &MomentEvaluator<'_>,
    table: &TracePowerTable,
) -> Result<f64> {
    let p = pattern.p() as usize;
    if pattern.q() == 0 {
        let sp = table.get(p).ok_or_else(|| {
            Error::Range(format!("table holds powers up to {}, need {p}", table.k_max()))
        })?;
        return Ok(sp * sp);
    }
    evaluator.evaluate(&folded_query(pattern)?)
}

fn check_variance_inputs(p: u32, n: u32, table: &TracePowerTable) -> Result<()> {
    if p == 0 || n < p {
        return Err(Error::InvalidInput(format!(
            "need 1 <= p <= n, got p={p}, n={n}"
        )));
    }
    if table.k_max() < 2 * p as usize {
        return Err(Error::Range(format!(
            "variance at p={p} needs trace powers up to {}, table holds up to {}",
            2 * p,
            table.k_max()
        )));
    }
    Ok(())
}

/// Exact estimator variance by pattern-class enumeration.
///
/// Overlap sizes 0 and 1 use their closed forms; classes with `q ≥ 2`
/// are enumerated canonically and evaluated through one shared memoizing
/// evaluator in sorted order. The per-q pair counts are checked to sum
/// to `C(n,p)²` exactly.
pub fn exact_variance(p: u32, n: u32, table: &TracePowerTable) -> Result<VarianceReport> {
    check_variance_inputs(p, n, table)?;
    let sp = table.value(p as usize);
    let s2p = table.value(2 * p as usize);

    let mut per_q: Vec<QContribution> = Vec::with_capacity(p as usize + 1);

    let count0 = pair_count(n, p, 0);
    per_q.push(QContribution {
        q: 0,
        expectation_sum: big_to_f64(&count0)? * sp * sp,
        pair_count: count0,
    });

    let count1 = pair_count(n, p, 1);
    per_q.push(QContribution {
        q: 1,
        expectation_sum: big_to_f64(&count1)? * (2.0 * s2p + sp * sp),
        pair_count: count1,
    });

    if p >= 2 {
        let evaluator = MomentEvaluator::new(table);
        let classes = pattern_classes_from(n, p, 2);
        let mut counts: Vec<BigUint> = vec![BigUint::zero(); p as usize + 1];
        let mut sums: Vec<KahanSum> = (0..=p as usize).map(|_| KahanSum::new()).collect();
        for class in &classes {
            let e = pair_expectation_with(class, &evaluator, table)?;
            let w = big_to_f64(class.multiplicity())?;
            sums[class.q()].add(w * e);
            counts[class.q()] += class.multiplicity();
        }
        for q in 2..=p as usize {
            per_q.push(QContribution {
                q,
                pair_count: counts[q].clone(),
                expectation_sum: sums[q].value(),
            });
        }
    }

    let total_pairs: BigUint = per_q.iter().map(|c| c.pair_count.clone()).sum();
    let cnp = binomial(n as u64, p as u64);
    assert_eq!(total_pairs, &cnp * &cnp, "per-q pair counts must sum to C(n,p)^2");

    let mut num = KahanSum::new();
    for c in &per_q {
        num.add(c.expectation_sum);
    }
    let denom = big_to_f64(&(&cnp * &cnp))?;
    let second_moment = num.value() / denom;
    let variance = second_moment - sp * sp;
    if variance < -1e-9 * (sp * sp).max(1.0) {
        return Err(Error::Numerical(format!(
            "computed variance {variance} is negative beyond tolerance"
        )));
    }
    Ok(VarianceReport { p, n, d: table.dim(), mean: sp, second_moment, variance, per_q })
}

/// Closed-form variance at `p = 2`:
/// `C(n,2)⁻²[C(n,4)·6·S₂² + C(n,3)·6·(2S₄+S₂²) + C(n,2)·(6S₄+3S₂²)] − S₂²`.
pub fn exact_variance_closed_p2(n: u32, table: &TracePowerTable) -> Result<f64> {
    check_variance_inputs(2, n, table)?;
    let s2 = table.value(2);
    let s4 = table.value(4);
    let c2 = big_to_f64(&binomial(n as u64, 2))?;
    let c3 = big_to_f64(&binomial(n as u64, 3))?;
    let c4 = big_to_f64(&binomial(n as u64, 4))?;
    let second =
        (c4 * 6.0 * s2 * s2 + c3 * 6.0 * (2.0 * s4 + s2 * s2) + c2 * (6.0 * s4 + 3.0 * s2 * s2))
            / (c2 * c2);
    Ok(second - s2 * s2)
}

/// Evaluates the printed variance expansion verbatim and reports its gap
/// to the normative value.
///
/// The printed window partial sums run over indexes `1..q` only, so the
/// wraparound windows (`k₀`, `m₀`) never enter the word letters; classes
/// with `k₀ + m₀ > 0` therefore contribute words whose letter sum falls
/// short of `2p`. That convention is transcribed as printed and flagged
/// in the report, not silently corrected. The expansion also inherits
/// the same-order literal discrepancy (see ERRATA.md), so this value is
/// diagnostic output, never an input to other results.
pub fn variance_literal(p: u32, n: u32, table: &TracePowerTable) -> Result<LiteralVarianceReport> {
    check_variance_inputs(p, n, table)?;
    let sp = table.value(p as usize);
    let s2p = table.value(2 * p as usize);

    let mut num = KahanSum::new();
    let t1 = binomial(n as u64, 2 * p as u64) * binomial(2 * p as u64, p as u64);
    num.add(big_to_f64(&t1)? * sp * sp);
    let t2 = binomial(n as u64, (2 * p - 1) as u64)
        * BigUint::from((2 * p - 1) as u64)
        * binomial((2 * p - 2) as u64, (p - 1) as u64);
    num.add(big_to_f64(&t2)? * (2.0 * s2p + sp * sp));

    if p >= 2 {
        for class in pattern_classes_from(n, p, 2) {
            let q = class.q();
            let (k, m) = (class.k(), class.m());
            let mut inner = KahanSum::new();
            for t in 1..q {
                let r = q - t;
                // Letters β₀ = K_{r+1..q} + M_{r+1..q} (window indexes
                // 1..q only, as printed), β_i = k_i + m_i for 1 <= i <= r.
                let mut letters = Vec::with_capacity(r + 1);
                letters.push(class.k_sum(r + 1, q) + class.m_sum(r + 1, q));
                for i in 1..=r {
                    letters.push(k[i] + m[i]);
                }
                inner.add((2.0f64).powi((t - 1) as i32) * star_sum(&letters, table)?);
            }
            num.add(big_to_f64(class.multiplicity())? * inner.value());
        }
    }

    let cnp = binomial(n as u64, p as u64);
    let denom = big_to_f64(&(&cnp * &cnp))?;
    let literal = num.value() / denom - sp * sp;
    let normative = exact_variance(p, n, table)?.variance;
    Ok(LiteralVarianceReport {
        p,
        n,
        d: table.dim(),
        literal_variance: literal,
        normative_variance: normative,
        discrepancy: literal - normative,
        convention_note: "window partial sums taken over indexes 1..q as printed; wraparound \
                          windows (index 0) are excluded, so classes with k0 + m0 > 0 yield \
                          letter sums below 2p"
            .into(),
    })
}

/// Estimator variance by brute force: every ordered pair of increasing
/// p-cycles is decomposed and its expectation taken from the
/// Wick-expansion oracle (pattern-keyed caching only).
///
/// Guards: `C(n,p)² ≤ 10⁶` pairs and `d^{2p} ≤ 10⁷` oracle tuples.
pub fn brute_variance(p: u32, n: u32, spectrum: &Spectrum) -> Result<f64> {
    if p == 0 || n < p {
        return Err(Error::InvalidInput(format!("need 1 <= p <= n, got p={p}, n={n}")));
    }
    let cnp = binomial(n as u64, p as u64);
    let pairs = &cnp * &cnp;
    if pairs > BigUint::from(1_000_000u64) {
        return Err(Error::SizeGuard(format!(
            "brute force over {pairs} ordered cycle pairs exceeds the 10^6 guard"
        )));
    }
    let d = spectrum.dim();
    if (d as f64).powi(2 * p as i32) > 1e7 {
        return Err(Error::SizeGuard(format!(
            "brute force oracle calls would visit up to {d}^{} tuples; the guard is 10^7",
            2 * p
        )));
    }

    let sp = schatten_2p_power(spectrum, p as usize)?;
    let cycles = enumerate_increasing_cycles(n, p);
    let mut cache: HashMap<(usize, Vec<u32>, Vec<u32>), f64> = HashMap::new();
    let mut acc = KahanSum::new();
    for sigma in &cycles {
        for tau in &cycles {
            let pat = overlap_decompose(sigma, tau)?;
            let key = (pat.q(), pat.k().to_vec(), pat.m().to_vec());
            let e = match cache.get(&key) {
                Some(&v) => v,
                None => {
                    let v = if pat.q() == 0 {
                        sp * sp
                    } else {
                        isserlis_moment(&folded_query(&pat)?, spectrum)?
                    };
                    cache.insert(key, v);
                    v
                }
            };
            acc.add(e);
        }
    }
    let denom = big_to_f64(&pairs)?;
    Ok(acc.value() / denom - sp * sp)
}

/// Estimator variance with pair expectations from the Wick-expansion
/// oracle over pattern classes; exact counting, oracle moments.
///
/// Guard: the largest class has `q = p`, so `d^{2p} ≤ 10⁷` is required.
pub fn oracle_variance(p: u32, n: u32, spectrum: &Spectrum) -> Result<f64> {
    if p == 0 || n < p {
        return Err(Error::InvalidInput(format!("need 1 <= p <= n, got p={p}, n={n}")));
    }
    let d = spectrum.dim();
    if (d as f64).powi(2 * p as i32) > 1e7 {
        return Err(Error::SizeGuard(format!(
            "oracle would visit up to {d}^{} tuples; the guard is 10^7",
            2 * p
        )));
    }
    let sp = schatten_2p_power(spectrum, p as usize)?;
    let mut acc = KahanSum::new();
    for class in pattern_classes_from(n, p, 0) {
        let e = if class.q() == 0 {
            sp * sp
        } else {
            isserlis_moment(&folded_query(&class)?, spectrum)?
        };
        acc.add(big_to_f64(class.multiplicity())? * e);
    }
    let cnp = binomial(n as u64, p as u64);
    let denom = big_to_f64(&(&cnp * &cnp))?;
    Ok(acc.value() / denom - sp * sp)
}

fn big_to_f64(v: &BigUint) -> Result<f64> {
    v.to_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Numerical("integer count exceeds f64 range".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::trace_powers;

    fn id_table(d: usize, k_max: usize) -> TracePowerTable {
        trace_powers(&Spectrum::identity(d), k_max).unwrap()
    }

    #[test]
    fn identity_anchor_p2_n3() {
        let t = id_table(3, 4);
        let rep = exact_variance(2, 3, &t).unwrap();
        assert!((rep.variance - 16.0).abs() < 1e-12, "got {}", rep.variance);
        assert!((rep.mean - 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_anchor_p2_n6() {
        let t = id_table(3, 4);
        let rep = exact_variance(2, 6, &t).unwrap();
        assert!((rep.variance - 5.6).abs() < 1e-12, "got {}", rep.variance);
    }

    #[test]
    fn closed_form_matches_engine_at_p2() {
        let s = Spectrum::new(vec![0.4, 1.3, 2.1, 0.9]).unwrap();
        let t = trace_powers(&s, 4).unwrap();
        for n in 2..=9 {
            let a = exact_variance(2, n, &t).unwrap().variance;
            let b = exact_variance_closed_p2(n, &t).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn p1_variance_is_two_s2_over_n() {
        let s = Spectrum::new(vec![1.0, 2.0, 3.0]).unwrap();
        let t = trace_powers(&s, 2).unwrap();
        for n in 1..=8 {
            let rep = exact_variance(1, n, &t).unwrap();
            let expect = 2.0 * 14.0 / n as f64;
            assert!((rep.variance - expect).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn brute_force_agrees_with_engine() {
        let s = Spectrum::new(vec![0.7, 1.9, 1.1]).unwrap();
        let t = trace_powers(&s, 6).unwrap();
        for (p, n) in [(1u32, 4u32), (2, 4), (2, 5), (3, 4)] {
            let a = exact_variance(p, n, &t).unwrap().variance;
            let b = brute_variance(p, n, &s).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "p={p} n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn oracle_route_agrees_with_engine() {
        let s = Spectrum::new(vec![0.5, 2.5]).unwrap();
        let t = trace_powers(&s, 6).unwrap();
        for (p, n) in [(2u32, 5u32), (3, 5)] {
            let a = exact_variance(p, n, &t).unwrap().variance;
            let b = oracle_variance(p, n, &s).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "p={p} n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn literal_expansion_p1_matches_exact() {
        let s = Spectrum::new(vec![0.8, 1.7, 2.4]).unwrap();
        let t = trace_powers(&s, 2).unwrap();
        let rep = variance_literal(1, 5, &t).unwrap();
        assert!((rep.literal_variance - rep.normative_variance).abs() < 1e-12);
        assert!(rep.discrepancy.abs() < 1e-12);
    }

    #[test]
    fn literal_expansion_diverges_at_p2() {
        // The q = 2 classes evaluate through the printed expansion,
        // which disagrees with the normative chain moment.
        let t = id_table(3, 4);
        let rep = variance_literal(2, 6, &t).unwrap();
        assert!(rep.discrepancy.abs() > 1e-6, "discrepancy {}", rep.discrepancy);
        assert!((rep.normative_variance - 5.6).abs() < 1e-12);
    }

    #[test]
    fn brute_force_guards_trip() {
        let s = Spectrum::identity(2);
        assert!(matches!(brute_variance(5, 30, &s), Err(Error::SizeGuard(_))));
        let wide = Spectrum::identity(12);
        assert!(matches!(brute_variance(4, 6, &wide), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn variance_rejects_short_tables() {
        let t = id_table(3, 3);
        assert!(matches!(exact_variance(2, 4, &t), Err(Error::Range(_))));
    }

    #[test]
    fn pair_expectation_identity_q1_fold() {
        // Any single-overlap pattern folds to exponents (p | p).
        let t = id_table(3, 4);
        let pat = OverlapPattern::new(1, vec![1, 1], vec![0, 2], BigUint::from(1u32)).unwrap();
        let e = pair_expectation(&pat, &t).unwrap();
        // 2·S_4 + S_2² at identity d = 3.
        assert!((e - (2.0 * 3.0 + 9.0)).abs() < 1e-12);
    }
}
