use serde::Serialize;
use thiserror::Error;

use super::traceset::ClassLabel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TvlaError {
    #[error("{class:?} class has {found} traces, at least 2 are needed")]
    TooFewTraces { class: ClassLabel, found: u64 },
    #[error("trace has {found} samples, expected {expected}")]
    SampleCount { expected: usize, found: usize },
    #[error("threshold must be positive, got {0}")]
    BadThreshold(f64),
}

/// Welch's t with a flag for the zero-variance cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchT {
    pub t: f64,
    /// Both classes had zero variance. `t` is then 0 for equal means and
    /// an infinity carrying the sign of the mean difference otherwise.
    pub degenerate: bool,
}

/// Running mean and sum of squared deviations (Welford), accumulated
/// around the first observation to keep large offsets from eating
/// precision.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    shift: f64,
    shifted_mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        if self.n == 0 {
            self.shift = x;
        }
        self.n += 1;
        let y = x - self.shift;
        let delta = y - self.shifted_mean;
        self.shifted_mean += delta / self.n as f64;
        self.m2 += delta * (y - self.shifted_mean);
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Moments::default();
        for &x in xs {
            m.push(x);
        }
        m
    }

    pub fn mean(&self) -> f64 {
        self.shift + self.shifted_mean
    }

    /// Sample variance, n - 1 divisor.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        self.m2 / (self.n - 1) as f64
    }

    /// `self.mean() - other.mean()` without rounding either mean first.
    fn mean_difference(&self, other: &Moments) -> f64 {
        (self.shift - other.shift) + (self.shifted_mean - other.shifted_mean)
    }
}

/// t from the two classes' moments. Both need at least two observations.
pub fn welch_t_moments(fixed: &Moments, random: &Moments) -> Result<WelchT, TvlaError> {
    for (class, m) in [(ClassLabel::Fixed, fixed), (ClassLabel::Random, random)] {
        if m.n < 2 {
            return Err(TvlaError::TooFewTraces { class, found: m.n });
        }
    }
    let diff = fixed.mean_difference(random);
    let se2 = fixed.variance() / fixed.n as f64 + random.variance() / random.n as f64;
    if se2 > 0.0 {
        return Ok(WelchT {
            t: diff / se2.sqrt(),
            degenerate: false,
        });
    }
    let t = if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    Ok(WelchT {
        t,
        degenerate: true,
    })
}

/// `(mean_F - mean_R) / sqrt(var_F / n_F + var_R / n_R)` over two series.
pub fn welch_t(fixed: &[f64], random: &[f64]) -> Result<WelchT, TvlaError> {
    welch_t_moments(&Moments::from_slice(fixed), &Moments::from_slice(random))
}

/// One-pass per-sample statistics of a fixed-vs-random trace stream.
#[derive(Debug, Clone)]
pub struct TvlaAccumulator {
    n_samples: usize,
    fixed: Vec<Moments>,
    random: Vec<Moments>,
}

impl TvlaAccumulator {
    pub fn new(n_samples: usize) -> Self {
        TvlaAccumulator {
            n_samples,
            fixed: vec![Moments::default(); n_samples],
            random: vec![Moments::default(); n_samples],
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn count(&self, label: ClassLabel) -> u64 {
        let class = match label {
            ClassLabel::Fixed => &self.fixed,
            ClassLabel::Random => &self.random,
        };
        class.first().map_or(0, |m| m.n)
    }

    pub fn add(&mut self, label: ClassLabel, samples: &[f32]) -> Result<(), TvlaError> {
        if samples.len() != self.n_samples {
            return Err(TvlaError::SampleCount {
                expected: self.n_samples,
                found: samples.len(),
            });
        }
        let class = match label {
            ClassLabel::Fixed => &mut self.fixed,
            ClassLabel::Random => &mut self.random,
        };
        for (m, &x) in class.iter_mut().zip(samples) {
            m.push(f64::from(x));
        }
        Ok(())
    }

    /// Per-sample t values.
    pub fn t_values(&self) -> Result<Vec<WelchT>, TvlaError> {
        self.fixed
            .iter()
            .zip(&self.random)
            .map(|(f, r)| welch_t_moments(f, r))
            .collect()
    }
}
