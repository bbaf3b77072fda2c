//! Gaussian sketching and the Monte Carlo estimator harness.
//!
//! A sketch is an `n×d` matrix with iid standard normal entries. With
//! `W = X S Xᵀ`, the estimator averages the cyclic products
//! `∏_{ℓ=1}^{p} W_{i_ℓ i_{ℓ+1}}` (wrapping `i_{p+1} = i_1`) over all
//! increasing p-cycles and is unbiased for `Tr(S^p)`: distinct row
//! indexes keep the Gaussian factors independent, so each cycle product
//! has expectation `Tr(S^p)` exactly.
//!
//! Reproducibility: replicate `r` draws from a counter-based generator
//! seeded with the master seed and stream `r`. Streams are independent
//! by construction, every replicate is generated from scratch, and
//! results are aggregated in replicate order, so an experiment is a
//! pure function of `(config)` regardless of how many threads run it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::cycles::{binomial, enumerate_increasing_cycles, IncreasingCycle};
use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::matrix::Matrix;
use crate::spectrum::Spectrum;

use num_traits::ToPrimitive;

/// Parameters of a Monte Carlo experiment.
#[derive(Debug, Clone, Serialize)]
pub struct SketchConfig {
    pub p: u32,
    pub n: u32,
    pub d: usize,
    pub seed: u64,
    pub reps: usize,
    spectrum: Spectrum,
}

impl SketchConfig {
    pub fn new(p: u32, n: u32, seed: u64, reps: usize, spectrum: Spectrum) -> Result<Self> {
        if p == 0 || n < p {
            return Err(Error::InvalidInput(format!("need 1 <= p <= n, got p={p}, n={n}")));
        }
        if reps == 0 {
            return Err(Error::InvalidInput("need at least one replicate".into()));
        }
        Ok(Self { p, n, d: spectrum.dim(), seed, reps, spectrum })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }
}

/// Aggregate statistics of the replicated estimates.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateStats {
    pub reps: usize,
    pub empirical_mean: f64,
    /// Unbiased sample variance; absent for fewer than 2 replicates.
    pub empirical_variance: Option<f64>,
    /// `sqrt(empirical_variance / reps)`.
    pub stderr_mean: Option<f64>,
    /// Standard error of the variance estimate from 50 equal batches of
    /// squared deviations; absent for fewer than 50 replicates. Uses the
    /// first `50·(reps/50)` replicates.
    pub stderr_variance: Option<f64>,
}

/// Draws the `n×d` standard normal sketch for one replicate.
///
/// The generator is keyed by the master seed; the stream index isolates
/// replicates from each other, so any subset can be regenerated
/// independently and in parallel.
pub fn sample_sketch(n: u32, d: usize, seed: u64, stream: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut m = Matrix::zeros(n as usize, d);
    for i in 0..n as usize {
        for j in 0..d {
            m.set(i, j, StandardNormal.sample(&mut rng));
        }
    }
    m
}

/// Single-sketch estimate: the cycle-product average described in the
/// module docs. Costs `Θ(n²d + C(n,p)·p)`.
pub fn estimate_vpn(x: &Matrix, spectrum: &Spectrum, p: u32) -> Result<f64> {
    let n = x.rows() as u32;
    if p == 0 || p > n {
        return Err(Error::InvalidInput(format!("need 1 <= p <= n, got p={p}, n={n}")));
    }
    if x.cols() != spectrum.dim() {
        return Err(Error::InvalidInput(format!(
            "sketch has {} columns but the spectrum has dimension {}",
            x.cols(),
            spectrum.dim()
        )));
    }
    let cycles = enumerate_increasing_cycles(n, p);
    estimate_with_cycles(x, spectrum, &cycles)
}

fn estimate_with_cycles(x: &Matrix, spectrum: &Spectrum, cycles: &[IncreasingCycle]) -> Result<f64> {
    let n = x.rows();
    let d = x.cols();
    let lambda = spectrum.eigenvalues();

    // W = X S Xᵀ through the scaled sketch; symmetric, built row-major.
    let mut w = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for a in 0..d {
                acc += x.get(i, a) * lambda[a] * x.get(j, a);
            }
            w[i * n + j] = acc;
            w[j * n + i] = acc;
        }
    }

    let mut sum = KahanSum::new();
    for cycle in cycles {
        let idx = cycle.indices();
        let mut prod = 1.0f64;
        for l in 0..idx.len() {
            let a = (idx[l] - 1) as usize;
            let b = (idx[(l + 1) % idx.len()] - 1) as usize;
            prod *= w[a * n + b];
        }
        sum.add(prod);
    }
    let count = binomial(n as u64, cycles[0].len() as u64)
        .to_f64()
        .ok_or_else(|| Error::Numerical("cycle count exceeds f64 range".into()))?;
    Ok(sum.value() / count)
}

/// Runs the replicated experiment; replicates are independent streams
/// evaluated in parallel and aggregated in replicate order, so the
/// result depends only on the config.
pub fn run_experiment(config: &SketchConfig) -> Result<EstimateStats> {
    let cycles = enumerate_increasing_cycles(config.n, config.p);
    let values: Vec<f64> = (0..config.reps)
        .into_par_iter()
        .map(|r| {
            let x = sample_sketch(config.n, config.d, config.seed, r as u64);
            estimate_with_cycles(&x, &config.spectrum, &cycles)
                .expect("config was validated at construction")
        })
        .collect();
    Ok(summarize(&values))
}

fn summarize(values: &[f64]) -> EstimateStats {
    let reps = values.len();
    let mean = values.iter().fold(KahanSum::new(), |mut acc, &v| {
        acc.add(v);
        acc
    });
    let mean = mean.value() / reps as f64;

    let (variance, stderr_mean) = if reps >= 2 {
        let mut ss = KahanSum::new();
        for &v in values {
            ss.add((v - mean) * (v - mean));
        }
        let var = ss.value() / (reps - 1) as f64;
        (Some(var), Some((var / reps as f64).sqrt()))
    } else {
        (None, None)
    };

    let stderr_variance = if reps >= 50 {
        const BATCHES: usize = 50;
        let batch_size = reps / BATCHES;
        let mut batch_means = Vec::with_capacity(BATCHES);
        for b in 0..BATCHES {
            let mut acc = KahanSum::new();
            for &v in &values[b * batch_size..(b + 1) * batch_size] {
                acc.add((v - mean) * (v - mean));
            }
            batch_means.push(acc.value() / batch_size as f64);
        }
        let grand = batch_means.iter().sum::<f64>() / BATCHES as f64;
        let mut sv = KahanSum::new();
        for &b in &batch_means {
            sv.add((b - grand) * (b - grand));
        }
        // SE of the mean of the batch means estimates the SE of the
        // plugin variance; adequate as a convergence yardstick.
        Some((sv.value() / (BATCHES - 1) as f64 / BATCHES as f64).sqrt())
    } else {
        None
    };

    EstimateStats { reps, empirical_mean: mean, empirical_variance: variance, stderr_mean, stderr_variance }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sketches_are_reproducible_and_stream_separated() {
        let a = sample_sketch(4, 3, 42, 7);
        let b = sample_sketch(4, 3, 42, 7);
        assert_eq!(a.as_slice(), b.as_slice());
        let c = sample_sketch(4, 3, 42, 8);
        assert_ne!(a.as_slice(), c.as_slice());
        let e = sample_sketch(4, 3, 43, 7);
        assert_ne!(a.as_slice(), e.as_slice());
    }

    #[test]
    fn p1_estimate_is_the_mean_diagonal_quadratic_form() {
        let s = Spectrum::new(vec![1.0, 2.0, 3.0]).unwrap();
        let x = sample_sketch(4, 3, 1, 0);
        let v = estimate_vpn(&x, &s, 1).unwrap();
        let lambda = s.eigenvalues();
        let mut expect = 0.0;
        for i in 0..4 {
            for a in 0..3 {
                expect += x.get(i, a) * x.get(i, a) * lambda[a] / 4.0;
            }
        }
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn experiment_is_deterministic() {
        let s = Spectrum::identity(3);
        let cfg = SketchConfig::new(2, 5, 99, 400, s).unwrap();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.empirical_mean.to_bits(), b.empirical_mean.to_bits());
        assert_eq!(
            a.empirical_variance.unwrap().to_bits(),
            b.empirical_variance.unwrap().to_bits()
        );
        assert_eq!(
            a.stderr_variance.unwrap().to_bits(),
            b.stderr_variance.unwrap().to_bits()
        );
    }

    #[test]
    fn stats_fields_gate_on_replicate_count() {
        let s = Spectrum::identity(2);
        let one = run_experiment(&SketchConfig::new(1, 2, 5, 1, s.clone()).unwrap()).unwrap();
        assert!(one.empirical_variance.is_none() && one.stderr_mean.is_none());
        let few = run_experiment(&SketchConfig::new(1, 2, 5, 49, s.clone()).unwrap()).unwrap();
        assert!(few.empirical_variance.is_some() && few.stderr_variance.is_none());
        let many = run_experiment(&SketchConfig::new(1, 2, 5, 100, s).unwrap()).unwrap();
        assert!(many.stderr_variance.unwrap() > 0.0);
    }

    #[test]
    fn config_validation() {
        let s = Spectrum::identity(2);
        assert!(SketchConfig::new(0, 2, 1, 10, s.clone()).is_err());
        assert!(SketchConfig::new(3, 2, 1, 10, s.clone()).is_err());
        assert!(SketchConfig::new(1, 2, 1, 0, s).is_err());
    }

    #[test]
    fn estimate_rejects_mismatched_sketch() {
        let s = Spectrum::identity(3);
        let x = sample_sketch(4, 2, 1, 0);
        assert!(estimate_vpn(&x, &s, 2).is_err());
        let x = sample_sketch(4, 3, 1, 0);
        assert!(estimate_vpn(&x, &s, 5).is_err());
    }
}
