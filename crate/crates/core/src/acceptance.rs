//! The acceptance suite, shared by the integration tests and the
//! `selftest` command.

use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use crate::datapath::{
    Design, FsmState, Simulator, TransitionLog, BCOUNT_END, RCOUNT_END, SCOUNT_END,
};
use crate::led::{encrypt_block, sbox_lookup, Nibble};
use crate::power::{generate_traces, samples_per_trace, TraceSetConfig, DEFAULT_SEED};
use crate::rng::SplitMix64;
use crate::ti::{verify_all, SboxDecomposition, SharedSbox, Stage};
use crate::tvla::{
    welch_t, ClassLabel, TraceFormatError, TraceSet, TvlaAccumulator, TvlaReport, DEFAULT_THRESHOLD,
};
use crate::TEST_VECTORS;

/// The PRESENT Sbox, entry `x` at index `x`, written out independently of
/// `led::SBOX`.
const PRESENT_SBOX: [u8; 16] = [
    0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2,
];

pub const ORACLE_TRIPLES: usize = 1000;
pub const SCHEDULE_RUNS: usize = 100;
pub const UNPROTECTED_TRACES: usize = 10_000;
pub const PROTECTED_TRACES: usize = 50_000;
pub const NULL_TEST_TRACES: usize = 10_000;
pub const ROUND_TRIP_TRACES: usize = 1000;
pub const SUITE_SEED: u64 = 0x5EED_0FAC_CE97;

/// Inputs shared by all criteria.
#[derive(Debug, Clone)]
pub struct Context {
    pub tables: SboxDecomposition,
    pub seed: u64,
}

impl Context {
    pub fn new(tables: SboxDecomposition) -> Self {
        Context {
            tables,
            seed: SUITE_SEED,
        }
    }

    fn shared_sbox(&self) -> Result<SharedSbox, String> {
        SharedSbox::new(self.tables.clone()).map_err(|e| format!("Sbox tables rejected: {e}"))
    }
}

type Check = fn(&Context) -> Result<String, String>;

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    check: Check,
}

pub const CRITERIA: [Criterion; 9] = [
    Criterion {
        id: 1,
        name: "sbox-fidelity",
        check: sbox_fidelity,
    },
    Criterion {
        id: 2,
        name: "ti-properties",
        check: ti_properties,
    },
    Criterion {
        id: 3,
        name: "oracle-equivalence",
        check: oracle_equivalence,
    },
    Criterion {
        id: 4,
        name: "cycle-counts",
        check: cycle_counts,
    },
    Criterion {
        id: 5,
        name: "schedule-independence",
        check: schedule_independence,
    },
    Criterion {
        id: 6,
        name: "welch-t-oracle",
        check: welch_oracle,
    },
    Criterion {
        id: 7,
        name: "leakage-detection",
        check: leakage_detection,
    },
    Criterion {
        id: 8,
        name: "null-hypothesis",
        check: null_hypothesis,
    },
    Criterion {
        id: 9,
        name: "file-round-trip",
        check: file_round_trip,
    },
];

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} {:<22} {} ({:.2}s) {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

impl Criterion {
    /// Runs the check; a panic counts as a failure.
    pub fn run(&self, ctx: &Context) -> Outcome {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(|| (self.check)(ctx)));
        let (passed, detail) = match result {
            Ok(Ok(d)) => (true, d),
            Ok(Err(d)) => (false, d),
            Err(p) => {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        Outcome {
            id: self.id,
            name: self.name,
            passed,
            detail,
            elapsed: start.elapsed(),
        }
    }
}

pub fn criterion(id: u8) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sbox_fidelity(_: &Context) -> Result<String, String> {
    for (x, &want) in PRESENT_SBOX.iter().enumerate() {
        let got = sbox_lookup(Nibble::from_low_bits(x as u8)).get();
        ensure(got == want, || {
            format!("S[{x:X}] = {got:X}, expected {want:X}")
        })?;
    }
    Ok("16/16 entries match".into())
}

fn ti_properties(ctx: &Context) -> Result<String, String> {
    let start = Instant::now();
    let report = verify_all(&ctx.tables);
    let elapsed = start.elapsed();
    ensure(report.all_passed(), || report.to_string())?;
    ensure(elapsed < Duration::from_secs(1), || {
        format!("verification took {elapsed:?}")
    })?;

    let mut rng = SplitMix64::new(ctx.seed);
    for _ in 0..20 {
        let mut mutant = ctx.tables.clone();
        let stage = Stage::BOTH[(rng.next_u64() % 2) as usize];
        let component = (rng.next_u64() % 3) as usize;
        let index = (rng.next_u64() % 256) as usize;
        let flip = 1 + (rng.next_u64() % 15) as u8;
        mutant.table_mut(stage, component)[index] ^= flip;
        ensure(!verify_all(&mutant).all_passed(), || {
            format!(
                "mutation {stage:?}{} [{index}] ^= {flip:X} not caught",
                component + 1
            )
        })?;
    }
    Ok(format!(
        "{} in {:.0} ms; 20/20 mutations caught",
        report.summary(),
        elapsed.as_secs_f64() * 1e3
    ))
}

fn oracle_equivalence(ctx: &Context) -> Result<String, String> {
    let sbox = ctx.shared_sbox()?;
    let mut protected = Simulator::with_sbox(Design::Protected, &sbox);
    let mut unprotected = Simulator::with_sbox(Design::Unprotected, &sbox);
    let run = |sim: &mut Simulator, pt, key, seed| -> u64 {
        sim.load_inputs(pt, key, seed).expect("idle");
        sim.run_to_completion().expect("loaded").ciphertext
    };
    for (pt, key, ct) in TEST_VECTORS {
        let got = [
            encrypt_block(pt, key),
            run(&mut unprotected, pt, key, 0),
            run(&mut protected, pt, key, 1),
        ];
        ensure(got.iter().all(|&c| c == ct), || {
            format!("test vector {pt:016X}/{key:032X}: got {got:016X?}, expected {ct:016X}")
        })?;
    }
    let mut rng = SplitMix64::new(ctx.seed);
    for _ in 0..ORACLE_TRIPLES {
        let pt = rng.next_u64();
        let key = u128::from(rng.next_u64()) << 64 | u128::from(rng.next_u64());
        let seed = rng.next_u64();
        let reference = encrypt_block(pt, key);
        let serial = run(&mut unprotected, pt, key, seed);
        let ti = run(&mut protected, pt, key, seed);
        ensure(serial == reference && ti == reference, || {
            format!("{pt:016X}/{key:032X}: reference {reference:016X}, serial {serial:016X}, ti {ti:016X}")
        })?;
    }
    Ok(format!(
        "{} test vectors and {ORACLE_TRIPLES} random triples agree",
        TEST_VECTORS.len()
    ))
}

/// `(state, cycles)` for each maximal run of one state.
fn runs(log: &TransitionLog) -> Vec<(FsmState, usize)> {
    let mut out: Vec<(FsmState, usize)> = Vec::new();
    for s in log.states() {
        match out.last_mut() {
            Some((last, n)) if *last == s => *n += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

fn cycle_counts(ctx: &Context) -> Result<String, String> {
    let sbox = ctx.shared_sbox()?;
    let mut sim = Simulator::with_sbox(Design::Protected, &sbox);
    sim.load_inputs(
        0x0123_4567_89AB_CDEF,
        0x0123_4567_89AB_CDEF_0123_4567_89AB_CDEF,
        ctx.seed,
    )
    .expect("idle");
    let log = sim.run_to_completion().expect("loaded").log;
    let runs = runs(&log);
    let expect_all = |state: FsmState, cycles: usize| -> Result<usize, String> {
        let visits: Vec<usize> = runs.iter().filter(|r| r.0 == state).map(|r| r.1).collect();
        ensure(
            !visits.is_empty() && visits.iter().all(|&n| n == cycles),
            || format!("{state} visits last {visits:?}, expected {cycles} cycles each"),
        )?;
        Ok(visits.len())
    };
    ensure(expect_all(FsmState::AddShare, 16)? == 1, || {
        "ADDSHARE visited more than once".into()
    })?;
    let mixcols = expect_all(FsmState::MixCol, 16)?;
    ensure(expect_all(FsmState::Back, 16)? == 1, || {
        "BACK visited more than once".into()
    })?;
    expect_all(FsmState::AddConstant, 1)?;

    // SBOX_CAL visits and the AC+SB sweeps between ADDCONSTANT and SHIFTROW
    let mut sweeps = Vec::new();
    let mut cal_visits_per_sweep = Vec::new();
    let mut i = 0;
    while i < runs.len() {
        if runs[i].0 == FsmState::AddConstant {
            let mut j = i + 1;
            let (mut cycles, mut cals) = (0, 0);
            while runs[j].0 != FsmState::ShiftRow {
                match runs[j] {
                    (FsmState::SboxCal, n) => {
                        ensure(n == 3, || format!("SBOX_CAL visit of {n} cycles"))?;
                        cals += 1;
                    }
                    (FsmState::SboxShift, _) => {}
                    (other, _) => return Err(format!("{other} inside an Sbox sweep")),
                }
                cycles += runs[j].1;
                j += 1;
            }
            sweeps.push(cycles);
            cal_visits_per_sweep.push(cals);
            i = j;
        } else {
            i += 1;
        }
    }
    ensure(sweeps.iter().all(|&n| n == 64), || {
        format!("sweep lengths {sweeps:?}")
    })?;
    ensure(
        cal_visits_per_sweep
            .iter()
            .all(|&n| n == BCOUNT_END as usize),
        || format!("SBOX_CAL visits per round {cal_visits_per_sweep:?}"),
    )?;
    let steps = runs.iter().filter(|r| r.0 == FsmState::AddKey).count();
    ensure(steps == SCOUNT_END as usize, || format!("{steps} steps"))?;
    ensure(mixcols == RCOUNT_END as usize * steps, || {
        format!("{mixcols} rounds in {steps} steps")
    })?;
    ensure(sweeps.len() == mixcols, || {
        "sweep count differs from round count".into()
    })?;
    Ok(format!(
        "ADDSHARE 16, sweeps {}x64, SBOX_CAL {}x3, MIXCOL 16, BACK 16, loops {}/{}/{}, {} cycles total",
        sweeps.len(),
        sweeps.len() * BCOUNT_END as usize,
        BCOUNT_END,
        RCOUNT_END,
        SCOUNT_END,
        log.len()
    ))
}

fn schedule_independence(ctx: &Context) -> Result<String, String> {
    let sbox = ctx.shared_sbox()?;
    let mut rng = SplitMix64::new(ctx.seed);
    let mut totals = Vec::new();
    for design in [Design::Protected, Design::Unprotected] {
        let mut sim = Simulator::with_sbox(design, &sbox);
        let mut reference: Option<Vec<FsmState>> = None;
        for _ in 0..SCHEDULE_RUNS {
            let pt = rng.next_u64();
            let key = u128::from(rng.next_u64()) << 64 | u128::from(rng.next_u64());
            sim.load_inputs(pt, key, rng.next_u64()).expect("idle");
            let states: Vec<FsmState> = sim
                .run_to_completion()
                .expect("loaded")
                .log
                .states()
                .collect();
            match &reference {
                None => reference = Some(states),
                Some(r) => ensure(*r == states, || {
                    format!(
                        "{}: schedule differs for {pt:016X}/{key:032X}",
                        design.name()
                    )
                })?,
            }
        }
        totals.push(format!(
            "{} {} cycles",
            design.name(),
            reference.map_or(0, |r| r.len())
        ));
    }
    Ok(format!(
        "{SCHEDULE_RUNS} runs per design identical: {}",
        totals.join(", ")
    ))
}

fn two_pass_t(f: &[f64], r: &[f64]) -> f64 {
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let var =
        |x: &[f64], m: f64| x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
    let (mf, mr) = (mean(f), mean(r));
    (mf - mr) / (var(f, mf) / f.len() as f64 + var(r, mr) / r.len() as f64).sqrt()
}

fn welch_oracle(ctx: &Context) -> Result<String, String> {
    let example = welch_t(&[1.0, 1.0, 3.0, 3.0], &[0.0; 6])
        .map_err(|e| e.to_string())?
        .t;
    ensure((example - 3.4641).abs() < 1e-4, || {
        format!("hand example gave {example}")
    })?;
    let mut rng = SplitMix64::new(ctx.seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let nf = 2 + (rng.next_u64() % 30) as usize;
        let nr = 2 + (rng.next_u64() % 30) as usize;
        let f: Vec<f64> = (0..nf).map(|_| 2.0 * rng.next_gaussian() + 0.5).collect();
        let r: Vec<f64> = (0..nr).map(|_| rng.next_gaussian()).collect();
        let got = welch_t(&f, &r).map_err(|e| e.to_string())?.t;
        let want = two_pass_t(&f, &r);
        worst = worst.max(((got - want) / want).abs());
    }
    ensure(worst < 1e-9, || format!("worst relative error {worst:e}"))?;
    Ok(format!(
        "example t = {example:.6}; worst relative error over 100 vectors {worst:.1e}"
    ))
}

/// Max |t| of a freshly generated set, streamed through the accumulator.
fn streamed_tvla(cfg: &TraceSetConfig, sbox: &SharedSbox) -> Result<TvlaReport, String> {
    let mut acc = TvlaAccumulator::new(samples_per_trace(cfg.design));
    let mut err = None;
    generate_traces(cfg, sbox, |_, t| {
        if let Err(e) = acc.add(t.label, &t.samples) {
            err.get_or_insert(e);
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(e) = err {
        return Err(e.to_string());
    }
    TvlaReport::from_accumulator(&acc, DEFAULT_THRESHOLD).map_err(|e| e.to_string())
}

fn leakage_detection(ctx: &Context) -> Result<String, String> {
    let sbox = ctx.shared_sbox()?;
    let unprotected = streamed_tvla(
        &TraceSetConfig::new(Design::Unprotected, UNPROTECTED_TRACES),
        &sbox,
    )?;
    ensure(unprotected.max_abs_t >= DEFAULT_THRESHOLD, || {
        format!("unprotected design not flagged: {unprotected}")
    })?;
    let protected = streamed_tvla(
        &TraceSetConfig::new(Design::Protected, PROTECTED_TRACES),
        &sbox,
    )?;
    ensure(protected.max_abs_t < DEFAULT_THRESHOLD, || {
        format!("protected design flagged: {protected}")
    })?;
    Ok(format!(
        "led max|t| {:.2} over {UNPROTECTED_TRACES} traces, led-ti max|t| {:.2} over {PROTECTED_TRACES} traces (seed {DEFAULT_SEED:#x})",
        unprotected.max_abs_t, protected.max_abs_t
    ))
}

fn null_hypothesis(ctx: &Context) -> Result<String, String> {
    let sbox = ctx.shared_sbox()?;
    let cfg = TraceSetConfig::new(Design::Protected, NULL_TEST_TRACES);
    // random-class traces alternate between the two pseudo-classes
    let mut acc = TvlaAccumulator::new(samples_per_trace(cfg.design));
    let mut toggle = false;
    let mut err = None;
    generate_traces(&cfg, &sbox, |_, t| {
        if t.label == ClassLabel::Random {
            let half = if toggle {
                ClassLabel::Random
            } else {
                ClassLabel::Fixed
            };
            toggle = !toggle;
            if let Err(e) = acc.add(half, &t.samples) {
                err.get_or_insert(e);
            }
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(e) = err {
        return Err(e.to_string());
    }
    let report =
        TvlaReport::from_accumulator(&acc, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    ensure(report.max_abs_t < DEFAULT_THRESHOLD, || {
        format!("random halves differ: {report}")
    })?;
    Ok(format!(
        "random halves of {} / {} traces: max|t| {:.2}",
        report.n_fixed, report.n_random, report.max_abs_t
    ))
}

fn file_round_trip(ctx: &Context) -> Result<String, String> {
    let sbox = ctx.shared_sbox()?;
    let mut cfg = TraceSetConfig::new(Design::Unprotected, ROUND_TRIP_TRACES);
    cfg.leakage.base_seed = ctx.seed;
    let mut traces = Vec::with_capacity(ROUND_TRIP_TRACES);
    generate_traces(&cfg, &sbox, |_, t| traces.push(t)).map_err(|e| e.to_string())?;
    let set = TraceSet {
        model: cfg.leakage.model,
        noise_sigma: cfg.leakage.noise_sigma,
        base_seed: cfg.leakage.base_seed,
        traces,
    };
    let mut bytes = Vec::new();
    set.write_to(&mut bytes).map_err(|e| e.to_string())?;
    let back = TraceSet::read_from(&bytes[..]).map_err(|e| e.to_string())?;
    ensure(back == set, || "read set differs from written set".into())?;
    let mut again = Vec::new();
    back.write_to(&mut again).map_err(|e| e.to_string())?;
    ensure(again == bytes, || "rewritten bytes differ".into())?;

    let patch = |at: usize, with: &[u8]| {
        let mut b = bytes.clone();
        b[at..at + with.len()].copy_from_slice(with);
        TraceSet::read_from(&b[..]).err()
    };
    type Expect = fn(&TraceFormatError) -> bool;
    let cases: [(&str, Option<TraceFormatError>, Expect); 9] = [
        ("bad magic", patch(0, b"XEDT"), |e| {
            matches!(e, TraceFormatError::BadMagic(_))
        }),
        ("bad version", patch(4, &9u32.to_le_bytes()), |e| {
            matches!(e, TraceFormatError::UnsupportedVersion(9))
        }),
        ("zero traces", patch(8, &0u32.to_le_bytes()), |e| {
            matches!(e, TraceFormatError::Empty("n_traces"))
        }),
        ("zero samples", patch(12, &0u32.to_le_bytes()), |e| {
            matches!(e, TraceFormatError::Empty("n_samples"))
        }),
        ("bad model", patch(16, &[2]), |e| {
            matches!(e, TraceFormatError::BadModelTag(2))
        }),
        ("bad sigma", patch(17, &f64::NAN.to_le_bytes()), |e| {
            matches!(e, TraceFormatError::BadSigma(_))
        }),
        (
            "extra declared traces",
            patch(8, &1001u32.to_le_bytes()),
            |e| matches!(e, TraceFormatError::LengthMismatch { .. }),
        ),
        (
            "truncated payload",
            TraceSet::read_from(&bytes[..bytes.len() - 3]).err(),
            |e| matches!(e, TraceFormatError::LengthMismatch { .. }),
        ),
        (
            "truncated header",
            TraceSet::read_from(&bytes[..10]).err(),
            |e| {
                matches!(
                    e,
                    TraceFormatError::LengthMismatch {
                        field: "header",
                        ..
                    }
                )
            },
        ),
    ];
    for (name, err, expected) in &cases {
        match err {
            Some(e) if expected(e) => {}
            Some(e) => return Err(format!("{name}: wrong error {e}")),
            None => return Err(format!("{name}: accepted")),
        }
    }
    Ok(format!(
        "{ROUND_TRIP_TRACES} traces, {} bytes identical; {} malformed headers rejected",
        bytes.len(),
        cases.len()
    ))
}
