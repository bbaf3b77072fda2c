//! Increasing cycles, overlap patterns, and exact pair counting.
//!
//! An increasing p-cycle is a strictly increasing tuple of indices in
//! `[1, n]`. The estimator averages cycle products over all `C(n,p)` of
//! them, and its second moment is a sum over ordered pairs `(σ, τ)`. The
//! expectation of a pair depends only on its *overlap pattern*: with
//! `γ = σ∩τ` (as an increasing q-cycle), count how many elements of `σ`
//! and of `τ` fall before `γ₁`, in each half-open window `[γ_i, γ_{i+1})`,
//! and at or after `γ_q`:
//!
//! ```text
//! k₀ = #{j∈σ : j < γ₁}       m₀ = #{j∈τ : j < γ₁}
//! k_i = #{j∈σ : γ_i ≤ j < γ_{i+1}}   (1 ≤ i < q), likewise m_i
//! k_q = #{j∈σ : j ≥ γ_q}      m_q = #{j∈τ : j ≥ γ_q}
//! ```
//!
//! with the convention `k₀ = m₀ = p` when the cycles are disjoint. The
//! pattern depends only on the relative order of `σ∪τ`, so ordered pairs
//! over `[1,n]` collapse into pattern classes: canonical pairs over the
//! support `[1, s]`, `s = |σ∪τ| = 2p−q`, each worth `C(n,s)` ordered
//! pairs. Enumerating classes instead of pairs turns the `O(C(n,p)²)`
//! double sum into a sum over a few hundred classes.
//!
//! All counting is exact big-integer arithmetic; callers convert to
//! `f64` at the last step.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Binomial coefficient `C(n, k)` in exact arithmetic; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut res = BigUint::one();
    for i in 0..k {
        // Each intermediate product is divisible by i+1: the running value
        // is C(n, i+1) * (i+1)! / (i+1)! scaled, so the division is exact.
        res = (res * BigUint::from(n - i)) / BigUint::from(i + 1);
    }
    res
}

/// Strictly increasing tuple of indices in `[1, n]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct IncreasingCycle {
    indices: Vec<u32>,
}

impl IncreasingCycle {
    /// Validates strict monotonicity and the range `[1, n]`.
    pub fn new(indices: Vec<u32>, n: u32) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("cycle must be non-empty".into()));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidInput(format!(
                    "cycle indices must be strictly increasing, got {:?}",
                    indices
                )));
            }
        }
        if indices[0] < 1 || *indices.last().expect("non-empty") > n {
            return Err(Error::InvalidInput(format!(
                "cycle indices must lie in [1, {n}], got {:?}",
                indices
            )));
        }
        Ok(Self { indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }
}

/// All increasing p-cycles over `[1, n]` in lexicographic order: exactly
/// `C(n, p)` of them. Out-of-range requests (`p = 0` or `p > n`) yield an
/// empty sequence, consistent with a vanishing binomial coefficient.
pub fn enumerate_increasing_cycles(n: u32, p: u32) -> Vec<IncreasingCycle> {
    if p == 0 || p > n {
        return Vec::new();
    }
    let p = p as usize;
    let mut out = Vec::new();
    let mut cur: Vec<u32> = (1..=p as u32).collect();
    loop {
        out.push(IncreasingCycle { indices: cur.clone() });
        // Advance the rightmost index that can still grow.
        let mut i = p;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - (p - 1 - i) as u32 {
                cur[i] += 1;
                for j in i + 1..p {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Overlap statistics of an ordered cycle pair, with the number of
/// ordered pairs over `[1, n]` realizing the same statistics.
///
/// `k` and `m` have length `q+1` (entries `k₀..k_q`); window counts with
/// index ≥ 1 are at least 1 because each window contains its own `γ_i`.
/// For `q = 0` the convention is `k = m = [p]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OverlapPattern {
    q: usize,
    k: Vec<u32>,
    m: Vec<u32>,
    multiplicity: BigUint,
}

impl OverlapPattern {
    /// Validates the window invariants: `Σk = Σm`, positive inner
    /// windows, and the `q = 0` convention.
    pub fn new(q: usize, k: Vec<u32>, m: Vec<u32>, multiplicity: BigUint) -> Result<Self> {
        if k.len() != q + 1 || m.len() != q + 1 {
            return Err(Error::InvalidInput(format!(
                "pattern with q={q} needs q+1 window counts, got {} and {}",
                k.len(),
                m.len()
            )));
        }
        let p: u32 = k.iter().sum();
        if m.iter().sum::<u32>() != p {
            return Err(Error::InvalidInput(
                "window counts of the two cycles must sum to the same p".into(),
            ));
        }
        if q == 0 && (k[0] != p || m[0] != p) {
            return Err(Error::InvalidInput(
                "disjoint pattern must have k0 = m0 = p".into(),
            ));
        }
        if k.iter().skip(1).any(|&x| x == 0) || m.iter().skip(1).any(|&x| x == 0) {
            return Err(Error::InvalidInput(
                "inner windows contain their own common index, so k_i, m_i >= 1 for i >= 1".into(),
            ));
        }
        Ok(Self { q, k, m, multiplicity })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Window counts `k₀..k_q` of the first cycle.
    pub fn k(&self) -> &[u32] {
        &self.k
    }

    /// Window counts `m₀..m_q` of the second cycle.
    pub fn m(&self) -> &[u32] {
        &self.m
    }

    /// Cycle length `p = Σ k_i`.
    pub fn p(&self) -> u32 {
        self.k.iter().sum()
    }

    /// Number of ordered pairs over `[1, n]` with these statistics.
    pub fn multiplicity(&self) -> &BigUint {
        &self.multiplicity
    }

    /// Partial sum `K_{i,j} = Σ_{ℓ=i}^{j} k_ℓ`; zero when `i > j`.
    pub fn k_sum(&self, i: usize, j: usize) -> u32 {
        if i > j {
            0
        } else {
            self.k[i..=j.min(self.q)].iter().sum()
        }
    }

    /// Partial sum `M_{i,j} = Σ_{ℓ=i}^{j} m_ℓ`; zero when `i > j`.
    pub fn m_sum(&self, i: usize, j: usize) -> u32 {
        if i > j {
            0
        } else {
            self.m[i..=j.min(self.q)].iter().sum()
        }
    }
}

/// Reduces an ordered cycle pair to its overlap pattern (multiplicity 1).
///
/// The decomposition assumes the first cycle starts no later than the
/// second; when it does not, the roles are swapped first. Swapping is
/// harmless downstream because the pair expectation is symmetric in the
/// two cycles.
pub fn overlap_decompose(sigma: &IncreasingCycle, tau: &IncreasingCycle) -> Result<OverlapPattern> {
    if sigma.len() != tau.len() {
        return Err(Error::InvalidInput(format!(
            "cycles must have equal length, got {} and {}",
            sigma.len(),
            tau.len()
        )));
    }
    let (a, b) = if sigma.indices()[0] <= tau.indices()[0] {
        (sigma.indices(), tau.indices())
    } else {
        (tau.indices(), sigma.indices())
    };
    let p = a.len() as u32;
    // Intersection of two sorted index lists.
    let mut gamma: Vec<u32> = Vec::new();
    {
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    gamma.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    let q = gamma.len();
    if q == 0 {
        return OverlapPattern::new(0, vec![p], vec![p], BigUint::one());
    }
    let windows = |cyc: &[u32]| -> Vec<u32> {
        let mut w = vec![0u32; q + 1];
        for &x in cyc {
            // Window index: 0 before γ₁, i for [γ_i, γ_{i+1}), q at or after γ_q.
            let idx = gamma.partition_point(|&g| g <= x);
            w[idx] += 1;
        }
        w
    };
    OverlapPattern::new(q, windows(a), windows(b), BigUint::one())
}

/// Canonical pattern classes whose multiplicities reproduce all
/// `C(n,p)²` ordered cycle pairs over `[1, n]`.
///
/// For each overlap size `q = 0..p` the support has size `s = 2p−q`;
/// every ordered pair of p-subsets of `[1, s]` with union `[1, s]` is
/// decomposed, and its pattern accumulates multiplicity `C(n, s)`.
/// Canonicalization is valid because the window statistics depend only
/// on the relative order of `σ∪τ`. Classes are returned sorted by `q`,
/// then lexicographically by `(k, m)`: the fixed aggregation order.
pub fn enumerate_pattern_classes(n: u32, p: u32) -> Vec<OverlapPattern> {
    pattern_classes_from(n, p, 0)
}

/// Pattern classes restricted to `q ≥ q_min`; the public entry point uses
/// `q_min = 0`, while the variance engine skips `q ∈ {0, 1}` (closed
/// forms cover them) and with them the two largest support enumerations.
pub(crate) fn pattern_classes_from(n: u32, p: u32, q_min: usize) -> Vec<OverlapPattern> {
    use std::collections::BTreeMap;
    let mut classes: BTreeMap<(usize, Vec<u32>, Vec<u32>), BigUint> = BTreeMap::new();
    for q in q_min..=p as usize {
        let s = 2 * p - q as u32;
        let weight = binomial(n as u64, s as u64);
        if weight.is_zero() {
            continue;
        }
        let subsets = enumerate_increasing_cycles(s, p);
        for sigma in &subsets {
            for tau in &subsets {
                if union_size(sigma.indices(), tau.indices()) != s as usize {
                    continue;
                }
                let pat = overlap_decompose(sigma, tau).expect("equal lengths");
                debug_assert_eq!(pat.q(), q);
                *classes
                    .entry((pat.q, pat.k, pat.m))
                    .or_insert_with(BigUint::zero) += &weight;
            }
        }
    }
    classes
        .into_iter()
        .map(|((q, k, m), multiplicity)| OverlapPattern { q, k, m, multiplicity })
        .collect()
}

fn union_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
        count += 1;
    }
    count + (a.len() - i) + (b.len() - j)
}

/// Number of ordered cycle pairs over `[1, n]` sharing exactly `q`
/// indices: `C(n, 2p−q)·C(2p−q, q)·C(2p−2q, p−q)`, exact.
pub fn pair_count(n: u32, p: u32, q: u32) -> BigUint {
    let (n, p, q) = (n as u64, p as u64, q as u64);
    binomial(n, 2 * p - q) * binomial(2 * p - q, q) * binomial(2 * p - 2 * q, p - q)
}

/// The exact ratio `pair_count(n, p, q) / C(n, p)`, which is always an
/// integer and equals `C(n−p, p−q)·C(p, q)`.
///
/// # Panics
/// Panics if the division is not exact; that would falsify an identity
/// the test suite checks exhaustively.
pub fn tech1_ratio(n: u32, p: u32, q: u32) -> BigUint {
    let num = pair_count(n, p, q);
    let den = binomial(n as u64, p as u64);
    if den.is_zero() {
        return BigUint::zero();
    }
    let quot = &num / &den;
    let rem = &num % &den;
    assert!(rem.is_zero(), "pair_count(n,p,q) must be divisible by C(n,p)");
    quot
}

/// Exact check of the tail inequality
/// `C(n−p, p−q)/C(n, p) ≤ min(((n−p)/(n−q))^{p−q}, (p/n)^q)`
/// by integer cross-multiplication (no floating point).
pub fn tech2_holds(n: u32, p: u32, q: u32) -> bool {
    let lhs = binomial((n - p) as u64, (p - q) as u64);
    let cnp = binomial(n as u64, p as u64);
    // lhs/cnp <= ((n-p)/(n-q))^{p-q}
    let first = &lhs * BigUint::from((n - q) as u64).pow(p - q)
        <= &cnp * BigUint::from((n - p) as u64).pow(p - q);
    // lhs/cnp <= (p/n)^q
    let second = &lhs * BigUint::from(n as u64).pow(q) <= &cnp * BigUint::from(p as u64).pow(q);
    first && second
}
