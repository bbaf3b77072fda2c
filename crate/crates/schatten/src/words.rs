//! Formal words over trace powers and the star-sum expansion.
//!
//! A word is a coefficient `2^r` times a sequence of letters, each letter
//! a non-negative exponent standing for the trace power `S_k`. Two
//! binary operations build words from words:
//!
//! ```text
//! w ⊕ v : merge.  The last letter of w absorbs the first letter of v
//!                  (indices add) and the coefficient doubles.
//! w ⊗ v : split.  Plain concatenation, coefficient multiplies.
//! ```
//!
//! `r` counts the ⊕ operations used, and the letter-index sum is
//! conserved by both operations. The star sum expands a letter list
//! `(α₀, …, α_q)` over all `2^q` left-associated choices of ⊕ or ⊗ in
//! `α₀ ∗ α₁ ∗ … ∗ α_q` and evaluates each word on a trace power table.
//! The chain moments with reversed second pass expand exactly this way,
//! which gives a closed form the recursion is tested against.
//!
//! Letters are stored in construction order: ⊕ must know which letter is
//! currently last, and canonicalizing to a sorted multiset mid-build
//! would merge onto the wrong letter. Equality compares the coefficient
//! and the letter *multiset*, since evaluation is order-independent.

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::spectrum::TracePowerTable;

/// A coefficient `2^r` and a letter list, letters in construction order.
#[derive(Debug, Clone, Eq)]
pub struct Word {
    oplus_count: u32,
    letters: Vec<u32>,
}

impl Word {
    /// Single-letter word with coefficient 1.
    pub fn letter(index: u32) -> Self {
        Self { oplus_count: 0, letters: vec![index] }
    }

    /// Number of ⊕ operations in the word's construction; the
    /// coefficient is `2^r`.
    pub fn oplus_count(&self) -> u32 {
        self.oplus_count
    }

    /// Letters in construction order.
    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    /// Sum of letter indices; conserved by ⊕ and ⊗.
    pub fn letter_sum(&self) -> u32 {
        self.letters.iter().sum()
    }
}

impl PartialEq for Word {
    /// Words are equal when their coefficients match and their letters
    /// agree as multisets; evaluation cannot tell reorderings apart.
    fn eq(&self, other: &Self) -> bool {
        if self.oplus_count != other.oplus_count || self.letters.len() != other.letters.len() {
            return false;
        }
        let mut a = self.letters.clone();
        let mut b = other.letters.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

/// Merge: the last letter of `w` absorbs the first letter of `v`, and
/// the coefficient picks up a factor of 2.
pub fn oplus(w: &Word, v: &Word) -> Word {
    let mut letters = w.letters.clone();
    let last = letters.last_mut().expect("words are non-empty");
    *last += v.letters[0];
    letters.extend_from_slice(&v.letters[1..]);
    Word { oplus_count: w.oplus_count + v.oplus_count + 1, letters }
}

/// Split: plain concatenation; coefficients multiply.
pub fn otimes(w: &Word, v: &Word) -> Word {
    let mut letters = w.letters.clone();
    letters.extend_from_slice(&v.letters);
    Word { oplus_count: w.oplus_count + v.oplus_count, letters }
}

/// Evaluates `2^r · ∏ S_{letter}` on a trace power table.
///
/// A letter exceeding the table's range is a range error rather than a
/// silent extrapolation.
pub fn eval_word(w: &Word, table: &TracePowerTable) -> Result<f64> {
    let mut prod = (2.0f64).powi(w.oplus_count as i32);
    for &letter in &w.letters {
        let s = table.get(letter as usize).ok_or_else(|| {
            Error::Range(format!(
                "word letter {letter} exceeds the table's maximum power {}",
                table.k_max()
            ))
        })?;
        prod *= s;
    }
    Ok(prod)
}

/// Expands `α₀ ∗ α₁ ∗ … ∗ α_q` over all `2^q` left-associated ⊕/⊗
/// choices and sums the evaluations.
///
/// Bit `j` of the mask selects the operation applied when letter
/// `α_{j+1}` joins (set = ⊕). Masks are visited in increasing order and
/// accumulated with compensated summation, so the result is a fixed
/// function of the inputs.
pub fn star_sum(letters: &[u32], table: &TracePowerTable) -> Result<f64> {
    if letters.is_empty() {
        return Err(Error::InvalidInput("star sum needs at least one letter".into()));
    }
    let q = letters.len() - 1;
    if q >= usize::BITS as usize {
        return Err(Error::SizeGuard(format!(
            "star sum over {} letters would expand 2^{q} words",
            letters.len()
        )));
    }
    let mut acc = KahanSum::new();
    for mask in 0u64..(1u64 << q) {
        let mut w = Word::letter(letters[0]);
        for (j, &letter) in letters.iter().skip(1).enumerate() {
            let v = Word::letter(letter);
            w = if mask >> j & 1 == 1 { oplus(&w, &v) } else { otimes(&w, &v) };
        }
        acc.add(eval_word(&w, table)?);
    }
    Ok(acc.value())
}

/// All `2^q` words of the expansion, in mask order. Exposed for tests
/// that check structural invariants (letter-sum conservation, the
/// coefficient tally `Σ 2^r = 3^q`).
pub fn star_words(letters: &[u32]) -> Result<Vec<Word>> {
    if letters.is_empty() {
        return Err(Error::InvalidInput("star expansion needs at least one letter".into()));
    }
    let q = letters.len() - 1;
    if q >= usize::BITS as usize {
        return Err(Error::SizeGuard(format!(
            "star expansion over {} letters would produce 2^{q} words",
            letters.len()
        )));
    }
    let mut out = Vec::with_capacity(1usize << q);
    for mask in 0u64..(1u64 << q) {
        let mut w = Word::letter(letters[0]);
        for (j, &letter) in letters.iter().skip(1).enumerate() {
            let v = Word::letter(letter);
            w = if mask >> j & 1 == 1 { oplus(&w, &v) } else { otimes(&w, &v) };
        }
        out.push(w);
    }
    Ok(out)
}
