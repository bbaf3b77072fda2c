//! Chain moments of repeated Gaussian quadratic forms.
//!
//! For independent standard Gaussian vectors `X₁..X_q` in dimension `d`
//! and a PSD matrix `S` with trace powers `S_k`, the engine evaluates
//! expectations of two trace chains. Both visit every vector twice; the
//! first pass runs `X₁..X_q`, and the kinds differ in the second pass:
//!
//! ```text
//! same order:  E Tr( X₁X₁ᵀS^{k₁} ⋯ X_qX_qᵀS^{k_q} · X₁X₁ᵀS^{m₁} ⋯ X_qX_qᵀS^{m_q} )
//! reversed:    E Tr( X₁X₁ᵀS^{k₁} ⋯ X_qX_qᵀS^{k_q} · X_qX_qᵀS^{m'₁} ⋯ X₁X₁ᵀS^{m'_q} )
//! ```
//!
//! Conditioning on all vectors but the last reduces either chain to a
//! quadratic form in that vector, so both satisfy two- or three-term
//! recursions over `q` with the shared base
//! `2·S_{k+m} + S_k·S_m` at `q = 1`. Values are polynomials in the trace
//! powers with positive integer coefficients; the evaluator memoizes
//! reduced queries behind a `RefCell`, so it is cheap to reuse within a
//! worker but is not `Sync`; concurrent callers build one evaluator
//! each, which keeps results independent of thread count.
//!
//! `m_moment_literal` is not part of the normative pipeline: it
//! transcribes an alternative closed-form expansion verbatim for
//! diagnostic comparison. Its value disagrees with the recursion and
//! with the independent moment oracle (see ERRATA.md); it is retained so
//! the discrepancy stays measurable.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::spectrum::TracePowerTable;
use crate::words::star_sum;

/// Order of the second pass through the Gaussian vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentKind {
    /// Second pass repeats the first-pass order `X₁..X_q`.
    SameOrder,
    /// Second pass runs backwards, `X_q..X₁`.
    Reversed,
}

/// A moment query: the kind plus the exponent lists of both passes.
///
/// `k` is always in first-pass order. For `SameOrder`, `m[i]` follows
/// the factor of `X_{i+1}` in the second pass. For `Reversed`, `m` is in
/// *chain order*: `m[0]` follows the first factor of the second pass
/// (which uses `X_q`) and `m[q-1]` the last (which uses `X₁`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentQuery {
    kind: MomentKind,
    k: Vec<u32>,
    m: Vec<u32>,
}

impl MomentQuery {
    /// Query with the second pass in first-pass order.
    pub fn same_order(k: Vec<u32>, m: Vec<u32>) -> Result<Self> {
        Self::new(MomentKind::SameOrder, k, m)
    }

    /// Query with the second pass reversed; `m` is given in chain order.
    pub fn reversed(k: Vec<u32>, m: Vec<u32>) -> Result<Self> {
        Self::new(MomentKind::Reversed, k, m)
    }

    fn new(kind: MomentKind, k: Vec<u32>, m: Vec<u32>) -> Result<Self> {
        if k.is_empty() || k.len() != m.len() {
            return Err(Error::InvalidInput(format!(
                "moment query needs equal, non-empty exponent lists, got {} and {}",
                k.len(),
                m.len()
            )));
        }
        Ok(Self { kind, k, m })
    }

    pub fn kind(&self) -> MomentKind {
        self.kind
    }

    /// Number of distinct Gaussian vectors in the chain.
    pub fn q(&self) -> usize {
        self.k.len()
    }

    /// First-pass exponents.
    pub fn k(&self) -> &[u32] {
        &self.k
    }

    /// Second-pass exponents in the convention of the kind (see type
    /// docs): visit order for `Reversed`, vector order for `SameOrder`.
    pub fn m(&self) -> &[u32] {
        &self.m
    }

    /// Total exponent budget `Σk + Σm`; every trace power the evaluation
    /// touches has index at most this.
    pub fn exponent_sum(&self) -> u32 {
        self.k.iter().sum::<u32>() + self.m.iter().sum::<u32>()
    }

    /// Second-pass exponents re-indexed by vector: entry `i` follows the
    /// factor of `X_{i+1}` regardless of visit order.
    pub fn m_by_vector(&self) -> Vec<u32> {
        match self.kind {
            MomentKind::SameOrder => self.m.clone(),
            MomentKind::Reversed => self.m.iter().rev().copied().collect(),
        }
    }
}

/// Memoizing evaluator bound to one trace power table.
pub struct MomentEvaluator<'a> {
    table: &'a TracePowerTable,
    memo: RefCell<HashMap<(MomentKind, Vec<u32>, Vec<u32>), f64>>,
}

impl<'a> MomentEvaluator<'a> {
    pub fn new(table: &'a TracePowerTable) -> Self {
        Self { table, memo: RefCell::new(HashMap::new()) }
    }

    /// Evaluates a query by the recursion; errors when the exponent
    /// budget exceeds the table's range.
    pub fn evaluate(&self, query: &MomentQuery) -> Result<f64> {
        self.check_budget(query)?;
        let m_nat = query.m_by_vector();
        match query.kind {
            MomentKind::SameOrder => self.same_order_rec(&query.k, &m_nat),
            MomentKind::Reversed => self.reversed_rec(&query.k, &m_nat),
        }
    }

    /// Evaluates a reversed-order query by the star-sum expansion
    /// instead of the recursion. The chain flattens into the letters
    /// `(m₁, k₁+m₂, …, k_{q−1}+m_q, k_q)` (vector-indexed), and the
    /// moment is the sum over all `2^q` merge/split words on them.
    pub fn evaluate_closed(&self, query: &MomentQuery) -> Result<f64> {
        if query.kind != MomentKind::Reversed {
            return Err(Error::InvalidInput(
                "the star-sum closed form applies to reversed-order queries".into(),
            ));
        }
        self.check_budget(query)?;
        let k = &query.k;
        let m_nat = query.m_by_vector();
        let q = k.len();
        let mut letters = Vec::with_capacity(q + 1);
        letters.push(m_nat[0]);
        for i in 1..q {
            letters.push(k[i - 1] + m_nat[i]);
        }
        letters.push(k[q - 1]);
        star_sum(&letters, self.table)
    }

    /// Literal transcription of an alternative expansion for same-order
    /// queries; diagnostic only, see the module docs. Requires `q ≥ 2`.
    pub fn evaluate_literal(&self, query: &MomentQuery) -> Result<f64> {
        if query.kind != MomentKind::SameOrder {
            return Err(Error::InvalidInput(
                "the literal expansion is defined for same-order queries".into(),
            ));
        }
        let q = query.q();
        if q < 2 {
            return Err(Error::InvalidInput(
                "the literal expansion needs at least two vectors".into(),
            ));
        }
        self.check_budget(query)?;
        let k = &query.k;
        let m = &query.m;
        let mut acc = KahanSum::new();
        for t in 1..q {
            let r = q - t;
            // Tail sums over the merged blocks r+1..q.
            let tail: u32 = k[r..].iter().sum::<u32>() + m[r..].iter().sum::<u32>();
            let mut a = k[..r].to_vec();
            a[r - 1] += m[r - 1];
            let mut b = Vec::with_capacity(r);
            b.push(tail);
            b.extend_from_slice(&m[..r - 1]);
            let coeff = (2.0f64).powi((t - 1) as i32);
            acc.add(coeff * self.reversed_rec(&a, &b)?);
        }
        Ok(acc.value())
    }

    fn check_budget(&self, query: &MomentQuery) -> Result<()> {
        let budget = query.exponent_sum() as usize;
        if budget > self.table.k_max() {
            return Err(Error::Range(format!(
                "query needs trace powers up to {budget}, table holds up to {}",
                self.table.k_max()
            )));
        }
        Ok(())
    }

    fn power(&self, k: u32) -> f64 {
        // Budget was checked at entry; folds only merge exponents, so
        // every index stays within Σk + Σm.
        self.table.value(k as usize)
    }

    fn base(&self, k: u32, m: u32) -> f64 {
        2.0 * self.power(k + m) + self.power(k) * self.power(m)
    }

    /// Reversed-order chain with `m` indexed by vector. Conditioning on
    /// `X_q` splits into a merged chain (factor 2) and a split chain
    /// weighted by `S_{k_q}`.
    fn reversed_rec(&self, k: &[u32], m: &[u32]) -> Result<f64> {
        let q = k.len();
        if q == 1 {
            return Ok(self.base(k[0], m[0]));
        }
        let key = (MomentKind::Reversed, k.to_vec(), m.to_vec());
        if let Some(&v) = self.memo.borrow().get(&key) {
            return Ok(v);
        }
        let (kq, mq) = (k[q - 1], m[q - 1]);
        let mut merged = k[..q - 1].to_vec();
        merged[q - 2] += kq + mq;
        let mut split = k[..q - 1].to_vec();
        split[q - 2] += mq;
        let rest = &m[..q - 1];
        let val =
            2.0 * self.reversed_rec(&merged, rest)? + self.power(kq) * self.reversed_rec(&split, rest)?;
        self.memo.borrow_mut().insert(key, val);
        Ok(val)
    }

    /// Same-order chain with `m` indexed by vector. Conditioning on
    /// `X_q` yields two shorter same-order chains and one reversed chain
    /// across the seam.
    fn same_order_rec(&self, k: &[u32], m: &[u32]) -> Result<f64> {
        let q = k.len();
        if q == 1 {
            return Ok(self.base(k[0], m[0]));
        }
        let key = (MomentKind::SameOrder, k.to_vec(), m.to_vec());
        if let Some(&v) = self.memo.borrow().get(&key) {
            return Ok(v);
        }
        let (kq, mq) = (k[q - 1], m[q - 1]);

        let mut k_fold = k[..q - 1].to_vec();
        k_fold[q - 2] += kq;
        let mut m_fold = m[..q - 1].to_vec();
        m_fold[q - 2] += mq;

        let mut a = k[..q - 1].to_vec();
        a[q - 2] += m[q - 2];
        let mut b = Vec::with_capacity(q - 1);
        b.push(kq + mq);
        b.extend_from_slice(&m[..q - 2]);

        let mut k_swap = k[..q - 1].to_vec();
        k_swap[q - 2] += mq;
        let mut m_swap = m[..q - 1].to_vec();
        m_swap[q - 2] += kq;

        let val = self.same_order_rec(&k_fold, &m_fold)?
            + self.reversed_rec(&a, &b)?
            + self.same_order_rec(&k_swap, &m_swap)?;
        self.memo.borrow_mut().insert(key, val);
        Ok(val)
    }
}

/// Single-vector moment `2·S_{k+m} + S_k·S_m`.
pub fn base_moment(k: u32, m: u32, table: &TracePowerTable) -> Result<f64> {
    if (k + m) as usize > table.k_max() {
        return Err(Error::Range(format!(
            "base moment needs trace power {}, table holds up to {}",
            k + m,
            table.k_max()
        )));
    }
    Ok(2.0 * table.value((k + m) as usize) + table.value(k as usize) * table.value(m as usize))
}

/// Reversed-order moment by the recursion.
pub fn n_moment(query: &MomentQuery, table: &TracePowerTable) -> Result<f64> {
    if query.kind() != MomentKind::Reversed {
        return Err(Error::InvalidInput("n_moment expects a reversed-order query".into()));
    }
    MomentEvaluator::new(table).evaluate(query)
}

/// Reversed-order moment by the star-sum closed form; agrees with
/// [`n_moment`] and serves as its structural cross-check.
pub fn n_moment_closed(query: &MomentQuery, table: &TracePowerTable) -> Result<f64> {
    MomentEvaluator::new(table).evaluate_closed(query)
}

/// Same-order moment by the recursion.
pub fn m_moment(query: &MomentQuery, table: &TracePowerTable) -> Result<f64> {
    if query.kind() != MomentKind::SameOrder {
        return Err(Error::InvalidInput("m_moment expects a same-order query".into()));
    }
    MomentEvaluator::new(table).evaluate(query)
}

/// Literal transcription of an alternative same-order expansion, kept
/// for diagnostics; disagrees with [`m_moment`] (see ERRATA.md).
pub fn m_moment_literal(query: &MomentQuery, table: &TracePowerTable) -> Result<f64> {
    MomentEvaluator::new(table).evaluate_literal(query)
}
