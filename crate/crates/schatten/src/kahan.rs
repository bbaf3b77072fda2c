//! Compensated (Kahan–Neumaier) summation.
//!
//! Every accumulation that feeds a reported number goes through
//! [`KahanSum`] in a fixed order, so parallel callers must reduce into it
//! sequentially after collecting their per-item results.

/// Neumaier variant of Kahan summation: tracks a running compensation so
/// the error of `value()` is O(1) ulp instead of O(len) ulps.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one term. The Neumaier branch keeps the compensation valid
    /// even when the incoming term is larger than the running sum.
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Current compensated total.
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Sums an iterator in its own order.
    pub fn sum_iter<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancellation_that_naive_summation_loses() {
        // 1 + 1e100 - 1e100 naive-sums to 0; the compensation keeps the 1.
        let v = KahanSum::sum_iter([1.0, 1e100, -1e100]);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn matches_exact_sum_on_small_integers() {
        let v = KahanSum::sum_iter((1..=1000).map(f64::from));
        assert_eq!(v, 500_500.0);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(KahanSum::new().value(), 0.0);
    }
}
