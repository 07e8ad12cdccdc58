//! Fixed-vs-random leakage assessment and the trace-set file format.

mod report;
mod stats;
mod traceset;

pub use report::{tvla_fixed_vs_random, TvlaReport, Verdict, DEFAULT_THRESHOLD};
pub use stats::{welch_t, welch_t_moments, Moments, TvlaAccumulator, TvlaError, WelchT};
pub use traceset::{
    read_trace_set, write_trace_set, ClassLabel, Trace, TraceFormatError, TraceSet, TraceSetHeader,
    TraceSetReader, TraceSetWriter, HEADER_LEN, MAGIC, VERSION,
};

#[cfg(test)]
mod tests;
