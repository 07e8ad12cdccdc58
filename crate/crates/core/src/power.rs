//! Power traces from register transitions.
//!
//! One sample per clock cycle: the summed leakage of every register that
//! changed in that cycle plus Gaussian noise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datapath::{Design, RcSharing, Simulator, TransitionLog};
use crate::rng::{derive_seed, SplitMix64};
use crate::ti::SharedSbox;
use crate::tvla::{ClassLabel, Trace, TraceSet};

pub const DEFAULT_SEED: u64 = 0x1ED7_1ED7_1ED7_1ED7;
pub const DEFAULT_SIGMA: f64 = 1.0;
/// Plaintext of the fixed class.
pub const FIXED_PLAINTEXT: u64 = 0;
/// Key used for leakage assessment runs.
pub const TVLA_KEY: u128 = 0x0123_4567_89AB_CDEF_FEDC_BA98_7654_3210;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LeakageModel {
    #[default]
    HammingDistance,
    HammingWeight,
}

impl LeakageModel {
    pub fn tag(self) -> u8 {
        match self {
            LeakageModel::HammingDistance => 0,
            LeakageModel::HammingWeight => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(LeakageModel::HammingDistance),
            1 => Some(LeakageModel::HammingWeight),
            _ => None,
        }
    }

    #[inline]
    fn leak(self, old: u8, new: u8) -> u32 {
        match self {
            LeakageModel::HammingDistance => (old ^ new).count_ones(),
            LeakageModel::HammingWeight => new.count_ones(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("noise sigma must be finite and non-negative, got {0}")]
    BadSigma(f64),
    #[error("bit widths differ: {0} and {1}")]
    WidthMismatch(u32, u32),
    #[error("value {value:#x} does not fit in {width} bits")]
    ValueTooWide { value: u64, width: u32 },
    #[error("need at least 2 traces, got {0}")]
    TooFewTraces(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageConfig {
    pub model: LeakageModel,
    pub noise_sigma: f64,
    pub base_seed: u64,
}

impl LeakageConfig {
    pub fn new(model: LeakageModel, noise_sigma: f64, base_seed: u64) -> Result<Self, PowerError> {
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(PowerError::BadSigma(noise_sigma));
        }
        Ok(LeakageConfig {
            model,
            noise_sigma,
            base_seed,
        })
    }
}

impl Default for LeakageConfig {
    fn default() -> Self {
        LeakageConfig {
            model: LeakageModel::HammingDistance,
            noise_sigma: DEFAULT_SIGMA,
            base_seed: DEFAULT_SEED,
        }
    }
}

/// A value with an explicit bit width, at most 64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitString {
    value: u64,
    width: u32,
}

impl BitString {
    pub fn new(value: u64, width: u32) -> Result<Self, PowerError> {
        if width > 64 || (width < 64 && value >> width != 0) {
            return Err(PowerError::ValueTooWide { value, width });
        }
        Ok(BitString { value, width })
    }
}

pub fn hamming_distance(a: BitString, b: BitString) -> Result<u32, PowerError> {
    if a.width != b.width {
        return Err(PowerError::WidthMismatch(a.width, b.width));
    }
    Ok((a.value ^ b.value).count_ones())
}

pub fn hamming_weight(a: BitString) -> u32 {
    a.value.count_ones()
}

/// One sample per cycle of `log`. Noise comes from a generator seeded with
/// `cfg.base_seed`, one Gaussian per cycle in cycle order; none is drawn
/// when sigma is 0.
pub fn synthesize_trace(log: &TransitionLog, cfg: &LeakageConfig) -> Vec<f32> {
    let mut noise = SplitMix64::new(cfg.base_seed);
    log.iter()
        .map(|entry| {
            let leak: u32 = entry
                .transitions
                .iter()
                .map(|t| cfg.model.leak(t.old, t.new))
                .sum();
            let mut sample = f64::from(leak);
            if cfg.noise_sigma > 0.0 {
                sample += cfg.noise_sigma * noise.next_gaussian();
            }
            sample as f32
        })
        .collect()
}

/// Recipe for a fixed-vs-random trace set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSetConfig {
    pub design: Design,
    pub n_traces: usize,
    pub fixed_plaintext: u64,
    pub key: u128,
    pub leakage: LeakageConfig,
    pub rc_sharing: RcSharing,
}

impl TraceSetConfig {
    pub fn new(design: Design, n_traces: usize) -> Self {
        TraceSetConfig {
            design,
            n_traces,
            fixed_plaintext: FIXED_PLAINTEXT,
            key: TVLA_KEY,
            leakage: LeakageConfig::default(),
            rc_sharing: RcSharing::default(),
        }
    }
}

/// The inputs chosen for trace `index`.
///
/// Drawn from a generator seeded with `derive_seed(base_seed, index)`, in
/// order: the class coin (top bit), the random plaintext (random class
/// only), the simulator mask seed, the noise seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceInputs {
    pub label: ClassLabel,
    pub plaintext: u64,
    pub sim_seed: u64,
    pub noise_seed: u64,
}

impl TraceInputs {
    pub fn derive(cfg: &TraceSetConfig, index: u64) -> Self {
        let mut rng = SplitMix64::new(derive_seed(cfg.leakage.base_seed, index));
        let label = if rng.next_bool() {
            ClassLabel::Random
        } else {
            ClassLabel::Fixed
        };
        let plaintext = match label {
            ClassLabel::Fixed => cfg.fixed_plaintext,
            ClassLabel::Random => rng.next_u64(),
        };
        TraceInputs {
            label,
            plaintext,
            sim_seed: rng.next_u64(),
            noise_seed: rng.next_u64(),
        }
    }
}

/// Generates the traces in index order and hands each to `sink`, so large
/// sets never have to be held in memory.
pub fn generate_traces(
    cfg: &TraceSetConfig,
    sbox: &SharedSbox,
    mut sink: impl FnMut(usize, Trace),
) -> Result<(), PowerError> {
    if cfg.n_traces < 2 {
        return Err(PowerError::TooFewTraces(cfg.n_traces));
    }
    LeakageConfig::new(
        cfg.leakage.model,
        cfg.leakage.noise_sigma,
        cfg.leakage.base_seed,
    )?;
    let mut sim = Simulator::with_sbox(cfg.design, sbox).with_rc_sharing(cfg.rc_sharing);
    for i in 0..cfg.n_traces {
        let inputs = TraceInputs::derive(cfg, i as u64);
        sim.load_inputs(inputs.plaintext, cfg.key, inputs.sim_seed)
            .expect("simulator is idle between traces");
        while sim.step_cycle().is_ok() {}
        let noise = LeakageConfig {
            base_seed: inputs.noise_seed,
            ..cfg.leakage
        };
        sink(
            i,
            Trace {
                label: inputs.label,
                samples: synthesize_trace(sim.log(), &noise),
            },
        );
    }
    Ok(())
}

/// Number of samples in every trace of `design`.
pub fn samples_per_trace(design: Design) -> usize {
    let mut sim = Simulator::new(design);
    sim.load_inputs(0, 0, 0).expect("fresh simulator is idle");
    while sim.step_cycle().is_ok() {}
    sim.cycles()
}

pub fn generate_trace_set(cfg: &TraceSetConfig) -> Result<TraceSet, PowerError> {
    let mut traces = Vec::with_capacity(cfg.n_traces);
    generate_traces(cfg, SharedSbox::shipped(), |_, t| traces.push(t))?;
    Ok(TraceSet {
        model: cfg.leakage.model,
        noise_sigma: cfg.leakage.noise_sigma,
        base_seed: cfg.leakage.base_seed,
        traces,
    })
}
