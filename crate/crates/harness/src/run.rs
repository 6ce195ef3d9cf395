//! Simulation pipeline: sample, encode, transmit, decode, verify.

use odm_core::channel::{decode_with_erasures, transmit, ChannelModel, ErasurePolicy};
use odm_core::signals::{estimate_variation_bound, grid_len, verify_growth};
use odm_core::theory::{verify_theorem, TheoremReport};
use odm_core::{encode_signal, sample, CodecParams, Error, GrowthBound, SampledSignal, SignalSpec, Trace, VariationBound};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;

pub struct Simulation {
    pub samples: SampledSignal,
    pub encoded: Trace,
    /// Decoder trace with the samples attached.
    pub decoded: Trace,
    pub erasures: usize,
    pub substituted: Vec<usize>,
}

pub fn simulate(config: &ExperimentConfig) -> Result<Simulation> {
    let samples = sample(&config.signal, config.codec.delta, config.horizon)?;
    let (bits, encoded) = encode_signal(&config.codec, &samples)?;
    let received = transmit(&bits, &config.channel)?;
    let recovered = decode_with_erasures(&config.codec, &received, ErasurePolicy::HoldSymbol)?;
    let mut decoded = recovered.trace;
    for (r, &x) in decoded.records.iter_mut().zip(&samples.values) {
        r.x = Some(x);
    }
    Ok(Simulation { samples, encoded, decoded, erasures: received.erasures(), substituted: recovered.substituted })
}

/// Verification of one stretch of the signal where the variation bound holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub start: f64,
    pub end: f64,
    pub variation: Option<VariationBound>,
    pub theorem: Option<TheoremReport>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub bound: GrowthBound,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub growth: Option<GrowthCheck>,
    pub segments: Vec<SegmentReport>,
}

impl Verification {
    pub fn violation_count(&self) -> usize {
        self.segments.iter().filter_map(|s| s.theorem.as_ref()).map(|t| t.violations.len()).sum()
    }

    pub fn notes(&self) -> impl Iterator<Item = String> + '_ {
        self.segments.iter().flat_map(|s| {
            let head = s.note.iter().map(move |n| format!("[{}, {}]: {n}", s.start, s.end));
            let tail = s.theorem.iter().flat_map(move |t| t.notes.iter().map(move |n| format!("[{}, {}]: {n}", s.start, s.end)));
            head.chain(tail)
        })
    }
}

/// Continuity stretches of `signal` within `[0, horizon]`: one per piecewise
/// segment, each verified as a restart from its first grid step.
pub fn stretches(signal: &SignalSpec, horizon: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0];
    cuts.extend(signal.breakpoints().into_iter().filter(|&b| b < horizon));
    cuts.push(horizon);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Right end of the usable variation interval for a stretch ending at `end`.
/// A cell whose right edge sits on a jump sees the post-jump value, so for
/// inner breakpoints the interval stops at the last grid point before it.
pub fn variation_end(delta: f64, end: f64, horizon: f64) -> f64 {
    if end >= horizon {
        return end;
    }
    grid_len(delta, end).saturating_sub(1) as f64 * delta
}

pub fn verify(config: &ExperimentConfig, trace: &Trace, samples: &SampledSignal) -> Result<Verification> {
    let growth = config.growth.map(|bound| GrowthCheck { bound, violations: verify_growth(samples, &bound).len() });
    let usable_growth = growth.as_ref().filter(|g| g.violations == 0).map(|g| g.bound);

    let mut segments = Vec::new();
    for (start, end) in stretches(&config.signal, config.horizon) {
        let mut seg = SegmentReport { start, end, variation: None, theorem: None, note: None };
        let delta = trace.params.delta;
        let interval = (start, variation_end(delta, end, config.horizon));
        match estimate_variation_bound(&config.signal, delta, interval, config.oversample_factor) {
            Ok(v) => {
                seg.variation = Some(v);
                seg.theorem = Some(verify_theorem(trace, samples, &v, usable_growth.as_ref(), config.oversample_factor)?);
            }
            Err(Error::EmptyDomain(msg)) => seg.note = Some(msg),
            Err(e) => return Err(e.into()),
        }
        segments.push(seg);
    }
    Ok(Verification { growth, segments })
}

/// JSON report written by `simulate` and `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub codec: CodecParams,
    pub signal: SignalSpec,
    pub horizon: f64,
    pub channel: ChannelModel,
    pub samples: usize,
    pub bits: usize,
    pub erasures: usize,
    pub substituted: Vec<usize>,
    /// Largest `|y_decoder - y_encoder|`; zero on a noiseless channel.
    pub max_decoder_divergence: f64,
    pub max_abs_error: f64,
    pub verification: Verification,
    pub violations: usize,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig, sim: &Simulation, verification: Verification) -> Self {
        let max_decoder_divergence = sim
            .encoded
            .records
            .iter()
            .zip(&sim.decoded.records)
            .map(|(e, d)| (e.y - d.y).abs())
            .fold(0.0, f64::max);
        let max_abs_error = sim.decoded.records.iter().filter_map(|r| r.abs_error()).fold(0.0, f64::max);
        RunReport {
            codec: config.codec,
            signal: config.signal.clone(),
            horizon: config.horizon,
            channel: config.channel,
            samples: sim.samples.len(),
            bits: sim.encoded.len(),
            erasures: sim.erasures,
            substituted: sim.substituted.clone(),
            max_decoder_divergence,
            max_abs_error,
            violations: verification.violation_count(),
            verification,
        }
    }
}
