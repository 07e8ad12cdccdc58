use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use led_ti::acceptance::{Context, CRITERIA};
use led_ti::datapath::{Design, RunResult, Simulator};
use led_ti::led::encrypt_block;
use led_ti::power::{
    generate_traces, samples_per_trace, LeakageConfig, LeakageModel, TraceSetConfig, DEFAULT_SEED,
};
use led_ti::ti::{verify_all, SboxDecomposition, SharedSbox};
use led_ti::tvla::{
    ClassLabel, TraceSetHeader, TraceSetReader, TraceSetWriter, TvlaAccumulator, TvlaReport,
    Verdict, DEFAULT_THRESHOLD,
};

/// LED-128 threshold implementation lab: encrypt, verify the shared Sbox,
/// synthesize power traces and run fixed-vs-random TVLA.
///
/// Every command is deterministic. Randomness comes from --seed, which
/// defaults to 0x1ED71ED71ED71ED7.
#[derive(Parser)]
#[command(name = "led-ti", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encrypt one block and print the ciphertext as hex.
    Encrypt {
        /// Plaintext, 16 hex digits.
        plaintext: String,
        /// Key, 32 hex digits.
        key: String,
        #[arg(long = "impl", value_enum, default_value_t = Impl::Reference)]
        implementation: Impl,
        /// Mask seed for the ti datapath.
        #[arg(long, value_parser = parse_u64, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Also print the cycle count of the serial datapaths.
        #[arg(long)]
        verbose: bool,
        /// Write the per-cycle register transitions as CSV.
        #[arg(long, value_name = "PATH")]
        log: Option<PathBuf>,
    },
    /// Check correctness, non-completeness and uniformity of Sbox tables.
    VerifyTi {
        /// Tables file; defaults to the shipped tables.
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Write a fixed-vs-random trace set.
    GenTraces {
        #[arg(long, value_enum)]
        design: DesignArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, value_parser = parse_u64, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModelArg::Hd)]
        model: ModelArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fixed-vs-random Welch t-test over a trace set.
    Tvla {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// JSON report path; the CSV goes next to it with a .csv extension.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Selftest {
        /// Use these Sbox tables instead of the shipped ones.
        #[arg(long)]
        tables: Option<PathBuf>,
        /// Only run these criteria, e.g. 1,2,4.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Impl {
    Reference,
    Serial,
    Ti,
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignArg {
    Led,
    LedTi,
}

impl From<DesignArg> for Design {
    fn from(d: DesignArg) -> Design {
        match d {
            DesignArg::Led => Design::Unprotected,
            DesignArg::LedTi => Design::Protected,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Hd,
    Hw,
}

impl From<ModelArg> for LeakageModel {
    fn from(m: ModelArg) -> LeakageModel {
        match m {
            ModelArg::Hd => LeakageModel::HammingDistance,
            ModelArg::Hw => LeakageModel::HammingWeight,
        }
    }
}

/// Decimal or 0x-prefixed hex.
fn parse_u64(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("{s:?}: {e}"))
}

fn parse_hex(field: &str, s: &str, digits: usize) -> Result<u128, String> {
    if s.len() != digits {
        return Err(format!(
            "{field} must be exactly {digits} hex digits, got {}",
            s.len()
        ));
    }
    if !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(format!("{field} is not hexadecimal: {s:?}"));
    }
    u128::from_str_radix(s, 16).map_err(|e| format!("{field}: {e}"))
}

const LEAK: ExitCode = ExitCode::FAILURE;

fn usage_error() -> ExitCode {
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encrypt {
            plaintext,
            key,
            implementation,
            seed,
            verbose,
            log,
        } => encrypt(
            &plaintext,
            &key,
            implementation,
            seed,
            verbose,
            log.as_deref(),
        ),
        Command::VerifyTi { tables } => verify_ti(tables.as_deref()),
        Command::GenTraces {
            design,
            n,
            sigma,
            seed,
            model,
            out,
        } => gen_traces(design.into(), n, sigma, seed, model.into(), &out),
        Command::Tvla {
            input,
            threshold,
            report,
        } => tvla(&input, threshold, report.as_deref()),
        Command::Selftest { tables, only } => selftest(tables.as_deref(), &only),
    };
    result.unwrap_or_else(|msg| {
        eprintln!("error: {msg}");
        usage_error()
    })
}

fn load_tables(path: Option<&Path>) -> Result<SboxDecomposition, String> {
    match path {
        Some(p) => SboxDecomposition::load(p),
        None => SboxDecomposition::shipped(),
    }
    .map_err(|e| e.to_string())
}

fn encrypt(
    pt: &str,
    key: &str,
    imp: Impl,
    seed: u64,
    verbose: bool,
    log: Option<&Path>,
) -> Result<ExitCode, String> {
    let pt = parse_hex("plaintext", pt, 16)? as u64;
    let key = parse_hex("key", key, 32)?;
    let run = |design| -> RunResult {
        let mut sim = Simulator::new(design);
        sim.load_inputs(pt, key, seed)
            .expect("fresh simulator is idle");
        sim.run_to_completion().expect("loaded simulator runs")
    };
    let result = match imp {
        Impl::Reference => {
            if log.is_some() {
                return Err("--log needs --impl serial or ti".into());
            }
            println!("{:016X}", encrypt_block(pt, key));
            return Ok(ExitCode::SUCCESS);
        }
        Impl::Serial => run(Design::Unprotected),
        Impl::Ti => run(Design::Protected),
    };
    println!("{:016X}", result.ciphertext);
    if verbose {
        println!("cycles: {}", result.log.len());
        println!("register transitions: {}", result.log.transition_count());
    }
    if let Some(path) = log {
        let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut w = BufWriter::new(file);
        result
            .log
            .write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_ti(tables: Option<&Path>) -> Result<ExitCode, String> {
    let tables = load_tables(tables)?;
    let report = verify_all(&tables);
    println!("{report}");
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn gen_traces(
    design: Design,
    n: usize,
    sigma: f64,
    seed: u64,
    model: LeakageModel,
    out: &Path,
) -> Result<ExitCode, String> {
    if n < 2 {
        return Err(format!("--n must be at least 2, got {n}"));
    }
    let n_traces = u32::try_from(n).map_err(|_| format!("--n {n} does not fit the file format"))?;
    let leakage = LeakageConfig::new(model, sigma, seed).map_err(|e| e.to_string())?;
    let cfg = TraceSetConfig {
        leakage,
        ..TraceSetConfig::new(design, n)
    };
    let n_samples = samples_per_trace(design);
    let header = TraceSetHeader {
        n_traces,
        n_samples: n_samples as u32,
        model,
        noise_sigma: sigma,
        base_seed: seed,
    };
    let mut writer = TraceSetWriter::create(out, header).map_err(|e| e.to_string())?;
    let mut fixed = 0usize;
    let mut err = None;
    let start = Instant::now();
    generate_traces(&cfg, SharedSbox::shipped(), |_, t| {
        fixed += usize::from(t.label == ClassLabel::Fixed);
        if err.is_none() {
            err = writer.push(&t).err();
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(e) = err {
        return Err(e.to_string());
    }
    writer.finish().map_err(|e| e.to_string())?;
    println!(
        "{}: {n} traces x {n_samples} samples ({fixed} fixed / {} random), design {}, {:.1}s",
        out.display(),
        n - fixed,
        design.name(),
        start.elapsed().as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}

fn tvla(input: &Path, threshold: f64, report_path: Option<&Path>) -> Result<ExitCode, String> {
    let mut reader = TraceSetReader::open(input).map_err(|e| e.to_string())?;
    let header = reader.header();
    let mut acc = TvlaAccumulator::new(header.n_samples as usize);
    while let Some(t) = reader.next_trace().map_err(|e| e.to_string())? {
        acc.add(t.label, &t.samples).map_err(|e| e.to_string())?;
    }
    let report = TvlaReport::from_accumulator(&acc, threshold).map_err(|e| e.to_string())?;
    println!("{report}");
    if report.degenerate_samples > 0 {
        eprintln!(
            "warning: {} samples have zero variance in both classes",
            report.degenerate_samples
        );
    }
    if let Some(path) = report_path {
        write_report(&report, path).map_err(|e| format!("{}: {e}", path.display()))?;
        write_report_csv(&report, &path.with_extension("csv"))
            .map_err(|e| format!("{}: {e}", path.with_extension("csv").display()))?;
    }
    Ok(match report.verdict {
        Verdict::Leaks => LEAK,
        Verdict::NoEvidence => ExitCode::SUCCESS,
    })
}

fn write_report(report: &TvlaReport, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    report.write_json(&mut w)?;
    writeln!(w)?;
    w.flush()
}

fn write_report_csv(report: &TvlaReport, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    report.write_csv(&mut w)?;
    w.flush()
}

fn selftest(tables: Option<&Path>, only: &[u8]) -> Result<ExitCode, String> {
    if let Some(bad) = only
        .iter()
        .find(|id| !CRITERIA.iter().any(|c| c.id == **id))
    {
        return Err(format!("unknown criterion {bad}"));
    }
    let ctx = Context::new(load_tables(tables)?);
    let mut failed = 0;
    let start = Instant::now();
    for c in CRITERIA
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.id))
    {
        let outcome = c.run(&ctx);
        println!("{outcome}");
        failed += usize::from(!outcome.passed);
    }
    println!(
        "{} ({:.1}s)",
        if failed == 0 {
            "all criteria passed".to_string()
        } else {
            format!("{failed} criteria failed")
        },
        start.elapsed().as_secs_f64()
    );
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
