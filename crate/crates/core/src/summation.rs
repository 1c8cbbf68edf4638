//! Compensated accumulation for long lattice sums.
//!
//! Lattice sums over ~10^6 terms are accumulated with Neumaier's variant of
//! Kahan summation, which also handles terms larger than the running sum.
//! Parallel sums are reduced block by block in a fixed order so results do
//! not depend on the thread count.

use crate::scalar::Real;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), compensation: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, value: T) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation = self.compensation + ((self.sum - t) + value);
        } else {
            self.compensation = self.compensation + ((value - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum<T: Real>(values: &[T]) -> T {
    values.iter().copied().collect::<CompensatedSum<T>>().value()
}

/// Sorts by decreasing magnitude, then accumulates with compensation.
pub fn sorted_compensated_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| b.abs().total_cmp(&a.abs()));
    compensated_sum(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(&v), 2.0);
        assert_eq!(v.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn merge_matches_single_pass() {
        let values: Vec<f64> = (1..10_000).map(|i| 1.0 / (i as f64).powi(2)).collect();
        let whole = compensated_sum(&values);
        let mut left: CompensatedSum<f64> = values[..5000].iter().copied().collect();
        let right: CompensatedSum<f64> = values[5000..].iter().copied().collect();
        left.merge(&right);
        assert!((left.value() - whole).abs() <= 1e-16 * whole);
    }
}
