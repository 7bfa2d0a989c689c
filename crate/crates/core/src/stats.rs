//! Small estimation helpers: binomial proportions with Wilson intervals and
//! running mean/variance.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A binomial proportion with its Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn wilson(successes: u64, trials: u64) -> Self {
        Self::wilson_z(successes, trials, Z95)
    }

    pub fn wilson_z(successes: u64, trials: u64, z: f64) -> Self {
        if trials == 0 {
            return Self { successes, trials, estimate: f64::NAN, ci_low: 0.0, ci_high: 1.0 };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            successes,
            trials,
            estimate: p,
            ci_low: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
            ci_high: if successes == trials { 1.0 } else { (centre + half).min(1.0) },
        }
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    /// Standard error of the plain estimate.
    pub fn std_error(&self) -> f64 {
        if self.trials == 0 {
            return f64::NAN;
        }
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }

    pub fn excludes_zero(&self) -> bool {
        self.ci_low > 0.0
    }
}

/// Welford accumulator. Merging is exact up to float rounding; callers that
/// need bit-identical output merge in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.m2 / (self.count - 1) as f64
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        iter.into_iter().for_each(|x| m.push(x));
        m
    }
}

/// Pearson chi-square statistic of observed counts against probabilities.
/// Cells with zero expected mass must have zero counts; they are skipped.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> (f64, usize) {
    let n: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells: usize = 0;
    for (&o, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            continue;
        }
        let e = n as f64 * p;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    (stat, cells.saturating_sub(1))
}
