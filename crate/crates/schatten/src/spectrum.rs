//! Spectra of `S = BᵀB` and the trace powers `S_k = Tr(S^k)`.
//!
//! Every downstream computation (moments, variance, bounds) consumes only
//! the table of trace powers, never `B` or `S` itself. Trace powers are
//! computed from eigenvalues rather than repeated matrix products: the
//! cost is `O(d·k_max)` and each `S_k` is a compensated sum of `d`
//! non-negative terms, so the table is as accurate as the eigenvalues.
//!
//! A [`Spectrum`] stores the eigenvalues of `S`, i.e. the squared
//! singular values of `B`, sorted non-increasing as the canonical form.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::matrix::Matrix;

/// Eigenvalues of `S = BᵀB`: non-negative, sorted non-increasing, length `d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Validates and canonicalizes a list of eigenvalues: all entries must
    /// be finite and non-negative; they are stored sorted non-increasing.
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidInput("spectrum must be non-empty".into()));
        }
        for &x in &eigenvalues {
            if !x.is_finite() {
                return Err(Error::InvalidInput("spectrum entries must be finite".into()));
            }
            if x < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "spectrum entries must be non-negative, got {x}"
                )));
            }
        }
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
        Ok(Self { eigenvalues })
    }

    /// Identity spectrum: `d` ones (so `S_k = d` for every `k`).
    ///
    /// # Panics
    /// Panics on dimension zero.
    pub fn identity(d: usize) -> Self {
        assert!(d > 0, "spectrum dimension must be positive");
        Self { eigenvalues: vec![1.0; d] }
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues, sorted non-increasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Largest eigenvalue.
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Reads a spectrum from a JSON array of non-negative numbers.
    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let values: Vec<f64> = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("expected a JSON array of numbers: {e}"),
        })?;
        Self::new(values)
    }
}

/// Table of trace powers `S_k = Σ_j λ_j^k` for `0 ≤ k ≤ k_max`.
///
/// `S_0` is exactly `d`. Entries are non-negative and satisfy the Hölder
/// sandwiches: for `0 < β ≤ p`, `S_p^{β/p} ≤ S_β ≤ S_p^{β/p}·d^{1−β/p}`,
/// and for `β ≥ p` the reversed inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePowerTable {
    values: Vec<f64>,
    dim: usize,
}

impl TracePowerTable {
    /// Trace power `S_k`, or `None` beyond the table.
    pub fn get(&self, k: usize) -> Option<f64> {
        self.values.get(k).copied()
    }

    /// Trace power `S_k`.
    ///
    /// # Panics
    /// Panics if `k > k_max`; internal callers validate their maximal
    /// exponent up front.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Largest tabulated exponent.
    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Ambient dimension `d = S_0`.
    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Clamps the tiny negative eigenvalues a symmetric eigensolve of a PSD
/// matrix may produce. Values in `[-tol, 0)` with `tol =
/// 1e-10·max(1, λ_max)` are set to zero; anything below `-tol` is an
/// error, because PSD structure is a property of `BᵀB` and a real
/// violation signals bad input rather than roundoff.
fn clamp_psd_eigenvalues(mut vals: Vec<f64>) -> Result<Vec<f64>> {
    let lambda_max = vals.iter().cloned().fold(0.0_f64, f64::max);
    let tol = 1e-10 * lambda_max.max(1.0);
    for v in &mut vals {
        if *v < 0.0 {
            if *v < -tol {
                return Err(Error::Numerical(format!(
                    "Gram matrix eigenvalue {v} below the PSD tolerance -{tol}"
                )));
            }
            *v = 0.0;
        }
    }
    Ok(vals)
}

/// Spectrum of `S = BᵀB` for an input matrix `B`.
///
/// The output dimension equals the number of columns of `B` (the ambient
/// dimension of `S`); at most `min(rows, cols)` entries are nonzero, the
/// rest are exact zeros. Implementation route: form the Gram matrix and
/// run a symmetric eigendecomposition. This squares the condition number
/// relative to a singular-value route, which is acceptable at the
/// supported scale (dense `B`, `d` up to ~10³); the PSD clamp absorbs the
/// roundoff that squaring introduces.
///
/// # Errors
/// `InvalidInput` for non-finite entries; `Numerical` if an eigenvalue
/// falls below the PSD tolerance.
pub fn gram_spectrum(b: &Matrix) -> Result<Spectrum> {
    if !b.is_finite() {
        return Err(Error::InvalidInput("matrix entries must be finite".into()));
    }
    let bm = DMatrix::from_row_slice(b.rows(), b.cols(), b.as_slice());
    let gram = bm.transpose() * &bm;
    let eigen = gram.symmetric_eigen();
    let vals = clamp_psd_eigenvalues(eigen.eigenvalues.iter().cloned().collect())?;
    Spectrum::new(vals)
}

/// Tabulates `S_k` for `0 ≤ k ≤ k_max` by compensated summation over the
/// eigenvalues. `S_0` is set to `d` exactly.
///
/// # Errors
/// `Range` if any power sum overflows to infinity.
pub fn trace_powers(s: &Spectrum, k_max: usize) -> Result<TracePowerTable> {
    let d = s.dim();
    let mut values = Vec::with_capacity(k_max + 1);
    values.push(d as f64);
    for k in 1..=k_max {
        let sk = KahanSum::sum_iter(s.eigenvalues().iter().map(|l| l.powi(k as i32)));
        if !sk.is_finite() {
            return Err(Error::Range(format!("trace power S_{k} overflows f64")));
        }
        values.push(sk);
    }
    Ok(TracePowerTable { values, dim: d })
}

/// Schatten p-norm of `B`, `‖B‖_p = (Σ_j σ_j^p)^{1/p}`, where the stored
/// eigenvalues are the squared singular values `σ_j²`.
///
/// # Errors
/// `InvalidInput` when `p < 1`.
pub fn schatten_norm(s: &Spectrum, p: usize) -> Result<f64> {
    if p < 1 {
        return Err(Error::InvalidInput("schatten_norm requires p >= 1".into()));
    }
    let sum = KahanSum::sum_iter(
        s.eigenvalues()
            .iter()
            .map(|l| l.powf(p as f64 / 2.0)),
    );
    Ok(sum.powf(1.0 / p as f64))
}

/// `Tr(S^p) = ‖B‖_{2p}^{2p}`, the quantity the sketch estimator targets.
///
/// # Errors
/// `InvalidInput` when `p < 1`.
pub fn schatten_2p_power(s: &Spectrum, p: usize) -> Result<f64> {
    if p < 1 {
        return Err(Error::InvalidInput("schatten_2p_power requires p >= 1".into()));
    }
    Ok(KahanSum::sum_iter(
        s.eigenvalues().iter().map(|l| l.powi(p as i32)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn gram_spectrum_of_diagonal_matrix_squares_the_entries() {
        let b = Matrix::new(2, 2, vec![3.0, 0.0, 0.0, 4.0]).unwrap();
        let s = gram_spectrum(&b).unwrap();
        assert!((s.eigenvalues()[0] - 16.0).abs() < 1e-9);
        assert!((s.eigenvalues()[1] - 9.0).abs() < 1e-9);
    }

    #[test]
    fn gram_spectrum_of_identity_is_all_ones() {
        let b = Matrix::identity(3);
        let s = gram_spectrum(&b).unwrap();
        for &l in s.eigenvalues() {
            assert!((l - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_spectrum_of_zero_matrix_is_all_zeros() {
        let b = Matrix::zeros(2, 2);
        let s = gram_spectrum(&b).unwrap();
        assert_eq!(s.eigenvalues(), &[0.0, 0.0]);
    }

    #[test]
    fn gram_spectrum_dimension_is_the_column_count() {
        let b = Matrix::new(2, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let s = gram_spectrum(&b).unwrap();
        assert_eq!(s.dim(), 3);
        // rank 2, so exactly one zero eigenvalue
        assert!(s.eigenvalues()[2].abs() < 1e-12);
    }

    #[test]
    fn clamp_accepts_roundoff_negatives_and_rejects_real_ones() {
        let ok = clamp_psd_eigenvalues(vec![2.0, -1e-12]).unwrap();
        assert_eq!(ok, vec![2.0, 0.0]);
        let err = clamp_psd_eigenvalues(vec![2.0, -1e-3]).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn trace_powers_match_direct_power_sums() {
        let t = trace_powers(&spectrum(&[1.0, 2.0, 3.0]), 4).unwrap();
        assert_eq!(t.value(0), 3.0);
        assert_eq!(t.value(2), 14.0);
        assert_eq!(t.value(4), 98.0);
    }

    #[test]
    fn trace_powers_of_identity_spectrum_are_all_d() {
        let t = trace_powers(&Spectrum::identity(5), 8).unwrap();
        for k in 0..=8 {
            assert_eq!(t.value(k), 5.0);
        }
    }

    #[test]
    fn trace_powers_overflow_is_a_range_error() {
        let err = trace_powers(&spectrum(&[1e300]), 2).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
    }

    #[test]
    fn schatten_norm_interprets_eigenvalues_as_squared_singular_values() {
        // singular values 4 and 3: ‖B‖₄ = (3⁴+4⁴)^{1/4} = 337^{1/4}
        let s = spectrum(&[16.0, 9.0]);
        let got = schatten_norm(&s, 4).unwrap();
        assert!((got - 337.0_f64.powf(0.25)).abs() < 1e-12);
        assert!((schatten_2p_power(&s, 2).unwrap() - 337.0).abs() < 1e-12);
    }

    #[test]
    fn frobenius_norm_of_orthonormal_columns_is_sqrt_d() {
        let s = Spectrum::identity(7);
        assert!((schatten_norm(&s, 2).unwrap() - 7.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spectrum_rejects_negative_and_non_finite_entries() {
        assert!(Spectrum::new(vec![1.0, -0.5]).is_err());
        assert!(Spectrum::new(vec![f64::NAN]).is_err());
        assert!(Spectrum::new(vec![]).is_err());
    }

    #[test]
    fn spectrum_canonicalizes_to_non_increasing_order() {
        let s = spectrum(&[1.0, 3.0, 2.0]);
        assert_eq!(s.eigenvalues(), &[3.0, 2.0, 1.0]);
    }
}
