//! Reference oracle: exact chain moments by direct fourth-moment
//! expansion, independent of the recursion engine.
//!
//! The chain trace is a sum over index tuples `a ∈ [d]^{2q}`: position
//! `t` holding vector `X_v` and exponent `e_t` contributes
//! `X_v[a_t] · X_v[a_{t+1}] · λ_{a_{t+1}}^{e_t}` (with wraparound
//! `a_{2q+1} = a_1`). Every vector appears exactly twice, so its four
//! coordinates integrate by the Gaussian fourth-moment rule
//! `E[Z_aZ_bZ_cZ_d] = δ_{ab}δ_{cd} + δ_{ac}δ_{bd} + δ_{ad}δ_{bc}`, and
//! the moment is the exact integer-weighted sum of eigenvalue products
//! over all `d^{2q}` tuples. Nothing here shares code with the
//! recursion: this is the ground truth it is tested against.
//!
//! Cost is `Θ(d^{2q})`, so a size guard refuses tuples beyond `10^7`.

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::matrix::Matrix;
use crate::moments::{MomentKind, MomentQuery};
use crate::spectrum::Spectrum;

const MAX_TUPLES: f64 = 1e7;

/// Maximum dimension for the quartic identity check; the check is
/// `Θ(d⁴)` and diagnostic, so it stays small.
const MAX_QUARTIC_DIM: usize = 6;

/// Exact chain moment by Wick expansion over all index tuples.
///
/// Refuses with a size error when `d^{2q}` exceeds `10^7`.
pub fn isserlis_moment(query: &MomentQuery, spectrum: &Spectrum) -> Result<f64> {
    let d = spectrum.dim();
    let q = query.q();
    let len = 2 * q;
    if (d as f64).powi(len as i32) > MAX_TUPLES {
        return Err(Error::SizeGuard(format!(
            "oracle would visit {d}^{len} index tuples; the guard is 10^7"
        )));
    }

    // Position t carries (vector id, exponent). First pass is always
    // X₁..X_q; the second pass order depends on the kind, and the
    // reversed kind's m list is already in visit order.
    let mut vector_at: Vec<usize> = (0..q).collect();
    match query.kind() {
        MomentKind::SameOrder => vector_at.extend(0..q),
        MomentKind::Reversed => vector_at.extend((0..q).rev()),
    }
    let exponents: Vec<u32> = query.k().iter().chain(query.m().iter()).copied().collect();

    // Per-position eigenvalue powers: pow[t][x] = λ_x^{e_t}.
    let lambda = spectrum.eigenvalues();
    let pow: Vec<Vec<f64>> = exponents
        .iter()
        .map(|&e| lambda.iter().map(|&l| l.powi(e as i32)).collect())
        .collect();

    // Occurrences of each vector along the chain (each appears twice).
    let mut occ = vec![[0usize; 2]; q];
    let mut seen = vec![0usize; q];
    for (t, &v) in vector_at.iter().enumerate() {
        occ[v][seen[v]] = t;
        seen[v] += 1;
    }
    debug_assert!(seen.iter().all(|&s| s == 2));

    let mut acc = KahanSum::new();
    let mut a = vec![0usize; len];
    loop {
        // Eigenvalue weight: ∏_t λ_{a_{t+1}}^{e_t}.
        let mut weight = 1.0f64;
        for t in 0..len {
            weight *= pow[t][a[(t + 1) % len]];
        }
        if weight != 0.0 {
            // Gaussian factor: product over vectors of the fourth-moment
            // rule on that vector's four coordinates.
            let mut factor = 1.0f64;
            for v in 0..q {
                let (t1, t2) = (occ[v][0], occ[v][1]);
                let (i, j) = (a[t1], a[(t1 + 1) % len]);
                let (k, l) = (a[t2], a[(t2 + 1) % len]);
                let wick = u32::from(i == j && k == l)
                    + u32::from(i == k && j == l)
                    + u32::from(i == l && j == k);
                if wick == 0 {
                    factor = 0.0;
                    break;
                }
                factor *= wick as f64;
            }
            acc.add(weight * factor);
        }
        // Odometer increment keeps the tuple order fixed.
        let mut t = 0;
        loop {
            if t == len {
                return Ok(acc.value());
            }
            a[t] += 1;
            if a[t] < d {
                break;
            }
            a[t] = 0;
            t += 1;
        }
    }
}

/// Max-abs entrywise residual of the quartic identity
/// `E[XXᵀAXXᵀ] = Λ(A + Aᵀ)Λ + Tr(AΛ)·Λ` for `X ~ N(0, Λ)` with diagonal
/// `Λ`. Both sides are evaluated independently: the left by the Wick
/// rule on `E[X_iX_aX_bX_j]`, the right as written.
pub fn quartic_identity_residual(a: &Matrix, spectrum: &Spectrum) -> Result<f64> {
    let d = spectrum.dim();
    if a.rows() != d || a.cols() != d {
        return Err(Error::InvalidInput(format!(
            "matrix must be {d}x{d} to match the spectrum, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if d > MAX_QUARTIC_DIM {
        return Err(Error::InvalidInput(format!(
            "quartic identity check supports dimension up to {MAX_QUARTIC_DIM}, got {d}"
        )));
    }
    let lam = spectrum.eigenvalues();

    let mut trace_al = 0.0;
    for i in 0..d {
        trace_al += a.get(i, i) * lam[i];
    }

    let mut max_resid = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            // Left side: E[XXᵀAXXᵀ]_{ij} = Σ_{r,s} A_{rs} E[X_i X_r X_s X_j]
            // with E[X_i X_r X_s X_j] = Λ_{ir}Λ_{sj} + Λ_{is}Λ_{rj} + Λ_{ij}Λ_{rs},
            // summed without exploiting the claimed identity.
            let mut lhs = 0.0;
            for r in 0..d {
                for s in 0..d {
                    let e4 = f64::from(u32::from(i == r && s == j)) * lam[i] * lam[s]
                        + f64::from(u32::from(i == s && r == j)) * lam[i] * lam[r]
                        + f64::from(u32::from(i == j && r == s)) * lam[i] * lam[r];
                    lhs += a.get(r, s) * e4;
                }
            }
            let mut rhs = lam[i] * (a.get(i, j) + a.get(j, i)) * lam[j];
            if i == j {
                rhs += trace_al * lam[i];
            }
            max_resid = max_resid.max((lhs - rhs).abs());
        }
    }
    Ok(max_resid)
}
