use crate::error::{Error, Result};

/// A finite sorted multiset of reals with a merge resolution `ε`: values
/// closer than `ε` are considered the same spectral point.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSet {
    values: Vec<f64>,
    resolution: f64,
}

impl SpectralSet {
    pub fn new(mut values: Vec<f64>, resolution: f64) -> Result<Self> {
        if !(resolution >= 0.0 && resolution.is_finite()) {
            return Err(Error::Invalid(format!("resolution must be ≥ 0, got {resolution}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("spectral set has non-finite values".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(SpectralSet { values, resolution })
    }

    pub fn singleton(value: f64) -> Self {
        SpectralSet {
            values: vec![value],
            resolution: 0.0,
        }
    }

    /// Uniform sample of `[lo, hi]` with spacing at most `step`.
    pub fn interval(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo <= hi) || !(step > 0.0) {
            return Err(Error::Invalid(format!("bad interval [{lo}, {hi}] step {step}")));
        }
        let k = ((hi - lo) / step).ceil().max(1.0) as usize;
        let values = (0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect();
        Ok(SpectralSet {
            values,
            resolution: step,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = resolution.max(0.0);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Collapses chains of values with consecutive gaps below the resolution
    /// to the midpoint of each chain. Idempotent: distinct chains end up at
    /// least `ε` apart.
    pub fn merged(&self) -> SpectralSet {
        let mut out = Vec::new();
        let mut iter = self.values.iter().copied();
        if let Some(first) = iter.next() {
            let (mut lo, mut hi) = (first, first);
            for v in iter {
                if v - hi < self.resolution {
                    hi = v;
                } else {
                    out.push(0.5 * (lo + hi));
                    lo = v;
                    hi = v;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        SpectralSet {
            values: out,
            resolution: self.resolution,
        }
    }

    /// Distance from `t` to the nearest member.
    pub fn distance_to(&self, t: f64) -> f64 {
        if self.values.is_empty() {
            return f64::INFINITY;
        }
        let i = self.values.partition_point(|&v| v < t);
        let mut best = f64::INFINITY;
        if i < self.values.len() {
            best = best.min(self.values[i] - t);
        }
        if i > 0 {
            best = best.min(t - self.values[i - 1]);
        }
        best
    }

    /// Members inside `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> SpectralSet {
        SpectralSet {
            values: self.values.iter().copied().filter(|v| *v >= lo && *v <= hi).collect(),
            resolution: self.resolution,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SpectralSet> {
        SpectralSet::new(self.values.iter().map(|&v| f(v)).collect(), self.resolution)
    }

    /// Number of members within `radius` of `t`.
    pub fn count_within(&self, t: f64, radius: f64) -> usize {
        let lo = self.values.partition_point(|&v| v < t - radius);
        let hi = self.values.partition_point(|&v| v <= t + radius);
        hi - lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn construction_sorts_and_validates() {
        let s = SpectralSet::new(vec![3.0, -1.0, 2.0], 0.1).unwrap();
        assert_eq!(s.values(), &[-1.0, 2.0, 3.0]);
        assert!(SpectralSet::new(vec![1.0], -0.1).is_err());
        assert!(SpectralSet::new(vec![f64::NAN], 0.0).is_err());
    }

    #[test]
    fn merging_chains() {
        let s = SpectralSet::new(vec![0.0, 0.05, 0.09, 1.0, 1.2], 0.1).unwrap();
        assert_eq!(s.merged().values(), &[0.045, 1.0, 1.2]);
    }

    #[test]
    fn distance_and_window() {
        let s = SpectralSet::new(vec![-1.0, 0.5, 2.0], 0.0).unwrap();
        assert_eq!(s.distance_to(0.0), 0.5);
        assert_eq!(s.distance_to(5.0), 3.0);
        assert_eq!(s.restrict(0.0, 2.0).values(), &[0.5, 2.0]);
        assert_eq!(s.count_within(0.0, 1.0), 2);
    }

    proptest! {
        #[test]
        fn merging_is_idempotent(v in prop::collection::vec(-5.0f64..5.0, 1..60), eps in 0.0f64..0.5) {
            let s = SpectralSet::new(v, eps).unwrap();
            let once = s.merged();
            prop_assert_eq!(once.merged(), once);
        }
    }
}
