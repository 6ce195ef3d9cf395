//! `odm` subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use odm_core::channel::{format_bitstream, read_bitstream};
use odm_core::{decode_bitstream, encode_samples, sample, AdaptationRule, CodecParams, Error};
use serde::Serialize;

use crate::compare::compare;
use crate::config::{ExperimentConfig, Overrides};
use crate::error::{HarnessError, Result};
use crate::run::{simulate, verify, RunReport, Verification};
use crate::trace_csv::{parse_samples, parse_trace, render_trace};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATIONS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "odm", version, about = "One-bit adaptive delta modulation: simulate, verify, compare, encode, decode")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample, encode, transmit and decode a signal; write the trace CSV and report JSON.
    Simulate(Common),
    /// Simulate (or load a trace) and check the tracking guarantees. Exit 1 on violations.
    Verify(VerifyArgs),
    /// Recovery after the first jump: floored rule against the baseline rule.
    Compare(Common),
    /// Encode a samples CSV (column `x`) into an ODM/1 bitstream file.
    Encode(EncodeArgs),
    /// Decode an ODM/1 bitstream file into a trace CSV.
    Decode(DecodeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config (JSON). Flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory that relative output paths are resolved against.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "a")]
    pub a: Option<f64>,
    #[arg(long)]
    pub m0: Option<f64>,
    #[arg(long)]
    pub mbar: Option<f64>,
    #[arg(long)]
    pub y0: Option<f64>,
    /// `modified` or `jayant`.
    #[arg(long)]
    pub rule: Option<AdaptationRule>,
    /// Erasure channel seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out_dir: self.out.clone(),
            delta: self.delta,
            a: self.a,
            m0: self.m0,
            m_bar: self.mbar,
            y0: self.y0,
            rule: self.rule,
            seed: self.seed,
        }
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::resolve(self.config.as_deref(), &self.overrides())
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Verify this trace CSV instead of simulating.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Encode(args) => cmd_encode(&args),
        Command::Decode(args) => cmd_decode(&args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

/// Writes every file or none: contents go to temporary siblings first and are
/// renamed into place only once all of them were written.
pub fn write_outputs(files: &[(&Path, &[u8])]) -> Result<()> {
    let mut staged: Vec<(PathBuf, &Path)> = Vec::new();
    let cleanup = |staged: &[(PathBuf, &Path)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (path, bytes) in files {
        let tmp = staging_path(path);
        let written = match path.parent().filter(|p| !p.as_os_str().is_empty()) {
            Some(dir) => fs::create_dir_all(dir).and_then(|()| fs::write(&tmp, bytes)),
            None => fs::write(&tmp, bytes),
        };
        if let Err(e) = written {
            cleanup(&staged);
            return Err(HarnessError::io(path, e));
        }
        staged.push((tmp, path));
    }
    for (i, (tmp, path)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, path) {
            cleanup(&staged[i..]);
            return Err(HarnessError::io(path, e));
        }
    }
    Ok(())
}

fn staging_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

fn print_verification(verification: &Verification) {
    for note in verification.notes() {
        eprintln!("warning: {note}");
    }
    if let Some(g) = &verification.growth {
        if g.violations > 0 {
            eprintln!("warning: growth bound fails on {} grid pairs; acquisition not checked", g.violations);
        }
    }
    for seg in &verification.segments {
        let Some(t) = &seg.theorem else { continue };
        for v in &t.violations {
            println!("violation [{}, {}] {:?} at k={}: {}", seg.start, seg.end, v.claim, v.k, v.detail);
        }
    }
}

pub fn cmd_simulate(args: &Common) -> Result<u8> {
    let config = args.resolve()?;
    let sim = simulate(&config)?;
    let verification = verify(&config, &sim.decoded, &sim.samples)?;
    let report = RunReport::new(&config, &sim, verification);
    let trace = render_trace(&sim.decoded)?;
    write_outputs(&[(&config.outputs.trace_csv, &trace), (&config.outputs.report_json, &to_json(&report))])?;
    println!(
        "simulated {} samples ({} bits, {} erased), max |x - y| = {}, {} violations",
        report.samples, report.bits, report.erasures, report.max_abs_error, report.violations
    );
    println!("wrote {} and {}", config.outputs.trace_csv.display(), config.outputs.report_json.display());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct TraceVerificationReport<'a> {
    trace: &'a Path,
    codec: CodecParams,
    steps: usize,
    verification: &'a Verification,
    violations: usize,
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<u8> {
    let config = args.common.resolve()?;
    let verification = match &args.trace {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            let trace = parse_trace(path, &text, config.codec)?;
            let samples = sample(&config.signal, config.codec.delta, config.horizon)?;
            if samples.len() != trace.len() {
                return Err(Error::Param(format!(
                    "trace has {} steps, config horizon gives {} samples",
                    trace.len(),
                    samples.len()
                ))
                .into());
            }
            let verification = verify(&config, &trace, &samples)?;
            let json = to_json(&TraceVerificationReport {
                trace: path,
                codec: config.codec,
                steps: trace.len(),
                violations: verification.violation_count(),
                verification: &verification,
            });
            write_outputs(&[(&config.outputs.report_json, &json)])?;
            verification
        }
        None => {
            let sim = simulate(&config)?;
            let verification = verify(&config, &sim.decoded, &sim.samples)?;
            let report = RunReport::new(&config, &sim, verification.clone());
            let trace = render_trace(&sim.decoded)?;
            write_outputs(&[(&config.outputs.trace_csv, &trace), (&config.outputs.report_json, &to_json(&report))])?;
            verification
        }
    };
    print_verification(&verification);
    let count = verification.violation_count();
    if count == 0 {
        println!("verified: no violations");
        Ok(EXIT_OK)
    } else {
        println!("{count} violations");
        Ok(EXIT_VIOLATIONS)
    }
}

pub fn cmd_compare(args: &Common) -> Result<u8> {
    let config = args.resolve()?;
    let comparison = config
        .comparison
        .ok_or_else(|| Error::Param("config has no comparison section".into()))?;
    let samples = sample(&config.signal, config.codec.delta, config.horizon)?;
    let run = compare(&config, &comparison, &samples)?;
    let baseline_csv = sibling(&config.outputs.trace_csv, &comparison.baseline.to_string());
    let modified = render_trace(&run.modified)?;
    let baseline = render_trace(&run.baseline)?;
    write_outputs(&[
        (&config.outputs.trace_csv, &modified),
        (&baseline_csv, &baseline),
        (&config.outputs.report_json, &to_json(&run.report)),
    ])?;
    let show = |s: Option<usize>| s.map_or_else(|| "not recovered".to_string(), |s| format!("{s} steps"));
    let r = &run.report;
    println!("jump at t = {} (k = {}), band = {}", r.jump_time, r.jump_step, r.band);
    println!("modified: {}", show(r.recovery_steps_modified));
    println!("{}: {}", r.baseline, show(r.recovery_steps_baseline));
    Ok(EXIT_OK)
}

/// `trace.csv` -> `trace_jayant.csv`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{tag}"),
    };
    path.with_file_name(name)
}

pub fn cmd_encode(args: &EncodeArgs) -> Result<u8> {
    let config = args.common.resolve()?;
    let text = fs::read_to_string(&args.input).map_err(|e| HarnessError::io(&args.input, e))?;
    let values = parse_samples(&args.input, &text)?;
    let (bits, _) = encode_samples(&config.codec, &values)?;
    let file = format_bitstream(&config.codec, &bits)?;
    write_outputs(&[(&args.output, file.as_bytes())])?;
    println!("encoded {} samples into {}", bits.len(), args.output.display());
    Ok(EXIT_OK)
}

pub fn cmd_decode(args: &DecodeArgs) -> Result<u8> {
    let (params, bits) = read_bitstream(&args.input).map_err(|e| match e {
        Error::Io(io) => HarnessError::io(&args.input, io),
        other => other.into(),
    })?;
    let trace = decode_bitstream(&params, &bits)?;
    write_outputs(&[(&args.output, &render_trace(&trace)?)])?;
    println!("decoded {} symbols into {}", bits.len(), args.output.display());
    Ok(EXIT_OK)
}
