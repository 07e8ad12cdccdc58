use std::fmt;
use std::io::{self, Write};

use serde::Serialize;

use super::stats::{TvlaAccumulator, TvlaError};
use super::traceset::{ClassLabel, TraceSet};

pub const DEFAULT_THRESHOLD: f64 = 4.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Leaks,
    NoEvidence,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Leaks => "LEAKS",
            Verdict::NoEvidence => "NO EVIDENCE OF LEAKAGE",
        })
    }
}

/// Fixed-vs-random result for a whole trace set. Non-finite t values are
/// written as `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvlaReport {
    pub t_values: Vec<f64>,
    pub max_abs_t: f64,
    /// Sample index where `max_abs_t` occurs.
    pub max_index: usize,
    pub threshold: f64,
    pub verdict: Verdict,
    pub n_fixed: u64,
    pub n_random: u64,
    /// Samples where both classes had zero variance.
    pub degenerate_samples: usize,
}

impl TvlaReport {
    pub fn from_accumulator(acc: &TvlaAccumulator, threshold: f64) -> Result<Self, TvlaError> {
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(TvlaError::BadThreshold(threshold));
        }
        let ts = acc.t_values()?;
        let degenerate_samples = ts.iter().filter(|w| w.degenerate).count();
        let t_values: Vec<f64> = ts.into_iter().map(|w| w.t).collect();
        let (max_index, max_abs_t) =
            t_values
                .iter()
                .map(|t| t.abs())
                .enumerate()
                .fold(
                    (0, 0.0),
                    |best, (i, a)| if a > best.1 { (i, a) } else { best },
                );
        let verdict = if max_abs_t >= threshold {
            Verdict::Leaks
        } else {
            Verdict::NoEvidence
        };
        Ok(TvlaReport {
            t_values,
            max_abs_t,
            max_index,
            threshold,
            verdict,
            n_fixed: acc.count(ClassLabel::Fixed),
            n_random: acc.count(ClassLabel::Random),
            degenerate_samples,
        })
    }

    pub fn write_json(&self, w: impl Write) -> io::Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(io::Error::from)
    }

    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "sample_index,t")?;
        for (i, t) in self.t_values.iter().enumerate() {
            writeln!(w, "{i},{t}")?;
        }
        Ok(())
    }
}

impl fmt::Display for TvlaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "max|t| = {:.4} at sample {} (threshold {}, {} fixed / {} random): {}",
            self.max_abs_t,
            self.max_index,
            self.threshold,
            self.n_fixed,
            self.n_random,
            self.verdict
        )
    }
}

pub fn tvla_fixed_vs_random(ts: &TraceSet, threshold: f64) -> Result<TvlaReport, TvlaError> {
    let mut acc = TvlaAccumulator::new(ts.n_samples());
    for t in &ts.traces {
        acc.add(t.label, &t.samples)?;
    }
    TvlaReport::from_accumulator(&acc, threshold)
}
