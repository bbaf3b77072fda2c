//! Monte Carlo harness behavior: determinism, stream separation, and
//! statistics bookkeeping.

use schatten::matrix::Matrix;
use schatten::sketch::{estimate_vpn, run_experiment, sample_sketch, SketchConfig};
use schatten::spectrum::{trace_powers, Spectrum};
use schatten::variance::exact_variance;

#[test]
fn experiments_are_bit_deterministic_across_runs() {
    let config = SketchConfig::new(2, 6, 42, 500, Spectrum::identity(3)).expect("valid");
    let a = run_experiment(&config).expect("valid");
    let b = run_experiment(&config).expect("valid");
    assert_eq!(a.empirical_mean.to_bits(), b.empirical_mean.to_bits());
    assert_eq!(
        a.empirical_variance.map(f64::to_bits),
        b.empirical_variance.map(f64::to_bits)
    );
    assert_eq!(a.stderr_mean.map(f64::to_bits), b.stderr_mean.map(f64::to_bits));
    assert_eq!(
        a.stderr_variance.map(f64::to_bits),
        b.stderr_variance.map(f64::to_bits)
    );
}

#[test]
fn replicates_use_separated_streams_and_seeds_matter() {
    let x0 = sample_sketch(4, 3, 7, 0);
    let x1 = sample_sketch(4, 3, 7, 1);
    let y0 = sample_sketch(4, 3, 8, 0);
    assert_ne!(x0.as_slice(), x1.as_slice());
    assert_ne!(x0.as_slice(), y0.as_slice());
    // Re-sampling the same (seed, stream) reproduces the sketch exactly.
    let x0_again = sample_sketch(4, 3, 7, 0);
    assert_eq!(x0.as_slice(), x0_again.as_slice());
}

#[test]
fn single_index_estimates_reduce_to_the_mean_quadratic_form() {
    let spectrum = Spectrum::new(vec![2.0, 0.5]).expect("valid");
    let x = sample_sketch(5, 2, 3, 0);
    let estimate = estimate_vpn(&x, &spectrum, 1).expect("valid");
    // p = 1 averages the diagonal quadratic forms X_i S X_iᵀ.
    let eig = spectrum.eigenvalues();
    let mut direct = 0.0;
    for i in 0..5 {
        for j in 0..2 {
            direct += eig[j] * x.get(i, j) * x.get(i, j);
        }
    }
    direct /= 5.0;
    assert!((estimate - direct).abs() <= 1e-12 * direct.abs().max(1.0));
}

#[test]
fn statistics_fields_gate_on_replicate_count() {
    let one = SketchConfig::new(1, 2, 0, 1, Spectrum::identity(2)).expect("valid");
    let s1 = run_experiment(&one).expect("valid");
    assert_eq!(s1.reps, 1);
    assert!(s1.empirical_variance.is_none());
    assert!(s1.stderr_mean.is_none());
    assert!(s1.stderr_variance.is_none());

    let few = SketchConfig::new(1, 2, 0, 10, Spectrum::identity(2)).expect("valid");
    let s10 = run_experiment(&few).expect("valid");
    assert!(s10.empirical_variance.is_some());
    assert!(s10.stderr_mean.is_some());
    assert!(s10.stderr_variance.is_none(), "batched errors need 50 replicates");

    let many = SketchConfig::new(1, 2, 0, 200, Spectrum::identity(2)).expect("valid");
    let s200 = run_experiment(&many).expect("valid");
    assert!(s200.stderr_variance.is_some());
}

#[test]
fn invalid_configurations_are_rejected() {
    assert!(SketchConfig::new(0, 3, 0, 10, Spectrum::identity(2)).is_err());
    assert!(SketchConfig::new(4, 3, 0, 10, Spectrum::identity(2)).is_err());
    assert!(SketchConfig::new(2, 3, 0, 0, Spectrum::identity(2)).is_err());
}

#[test]
fn fixed_sketches_reproduce_hand_computed_estimates() {
    // Eigenvalues are stored sorted, so diag(3, 2) acts on the columns.
    // Rows (0,1) and (1,1) share only the weight-2 column: W₁₂ = W₂₁ = 2
    // and the single 2-cycle gives 4.
    let s = Spectrum::new(vec![2.0, 3.0]).expect("valid");
    let x = Matrix::new(2, 2, vec![0.0, 1.0, 1.0, 1.0]).expect("valid");
    assert!((estimate_vpn(&x, &s, 2).expect("valid") - 4.0).abs() < 1e-12);
    // Orthogonal rows zero the off-diagonal of W and hence the estimate.
    let id = Matrix::identity(2);
    assert!(estimate_vpn(&id, &s, 2).expect("valid").abs() < 1e-12);
}

#[test]
fn column_statistics_match_the_standard_normal() {
    let rows = 1_000_000u32;
    let x = sample_sketch(rows, 3, 2026, 0);
    for j in 0..3 {
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..rows as usize {
            let v = x.get(i, j);
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / rows as f64;
        let var = (sumsq - rows as f64 * mean * mean) / (rows as f64 - 1.0);
        assert!(mean.abs() <= 5.0 / (rows as f64).sqrt(), "column {j} mean {mean}");
        assert!((var - 1.0).abs() <= 0.01, "column {j} variance {var}");
    }
}

#[test]
fn hutchinson_anchor_matches_its_classical_moments() {
    // p = 1, n = 4 averages four independent quadratic forms, so the
    // mean is Tr(S) = 6 and the variance is 2·Tr(S²)/4 = 7.
    let s = Spectrum::new(vec![1.0, 2.0, 3.0]).expect("valid");
    let config = SketchConfig::new(1, 4, 17, 40_000, s).expect("valid");
    let stats = run_experiment(&config).expect("valid");
    let se_mean = stats.stderr_mean.expect("reps >= 2");
    let se_var = stats.stderr_variance.expect("reps >= 50");
    assert!(
        (stats.empirical_mean - 6.0).abs() <= 4.0 * se_mean,
        "mean {} vs 6",
        stats.empirical_mean
    );
    let ev = stats.empirical_variance.expect("reps >= 2");
    assert!((ev - 7.0).abs() <= 4.0 * se_var, "variance {ev} vs 7");
}

#[test]
fn empirical_variance_tracks_the_exact_variance_on_the_grid() {
    let mut stream = 0u64;
    for p in [1u32, 2, 3] {
        for n in [p, p + 2, 2 * p + 2] {
            for d in [2usize, 3, 5] {
                let draw = sample_sketch(1, d, 1012, stream);
                stream += 1;
                let eig: Vec<f64> = (0..d).map(|j| draw.get(0, j).powi(2) + 0.05).collect();
                let s = Spectrum::new(eig).expect("positive");
                let t = trace_powers(&s, 2 * p as usize).expect("fits");
                let exact = exact_variance(p, n, &t).expect("valid").variance;
                let config = SketchConfig::new(p, n, 31, 100_000, s).expect("valid");
                let stats = run_experiment(&config).expect("valid");
                let ev = stats.empirical_variance.expect("reps >= 2");
                let se = stats.stderr_variance.expect("reps >= 50");
                let tol = (4.0 * se).max(0.05 * exact);
                assert!(
                    (ev - exact).abs() <= tol,
                    "p={p}, n={n}, d={d}: empirical {ev} vs exact {exact} (tol {tol})"
                );
            }
        }
    }
}

#[test]
fn estimator_tracks_a_known_mean_loosely() {
    // 2000 replicates put the mean within a wide safety band; systematic
    // unbiasedness at tight tolerances is covered by the acceptance run.
    let config = SketchConfig::new(2, 6, 11, 2000, Spectrum::identity(3)).expect("valid");
    let stats = run_experiment(&config).expect("valid");
    let se = stats.stderr_mean.expect("reps >= 2");
    assert!(
        (stats.empirical_mean - 3.0).abs() <= 6.0 * se,
        "mean {} too far from 3",
        stats.empirical_mean
    );
}
