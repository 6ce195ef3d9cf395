//! Proximity recovery after a jump, floored rule against a baseline.

use std::cmp::Ordering;

use odm_core::signals::estimate_variation_bound;
use odm_core::{encode_signal, AdaptationRule, CodecParams, Error, SampledSignal, Trace};
use serde::{Deserialize, Serialize};

use crate::config::{Comparison, ExperimentConfig};
use crate::error::Result;
use crate::run::variation_end;

/// Consecutive in-band steps needed before proximity counts as recovered.
pub const RECOVERY_HOLD: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub jump_time: f64,
    pub jump_step: usize,
    pub band: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub baseline: AdaptationRule,
    /// `None` when proximity is not recovered within the horizon.
    pub recovery_steps_modified: Option<usize>,
    pub recovery_steps_baseline: Option<usize>,
}

impl ComparisonReport {
    /// Ordering of recovery times, an unrecovered run counting as slowest.
    pub fn ordering(&self) -> Ordering {
        match (self.recovery_steps_modified, self.recovery_steps_baseline) {
            (Some(m), Some(b)) => m.cmp(&b),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        }
    }

    pub fn modified_not_slower(&self) -> bool {
        self.ordering() != Ordering::Greater
    }
}

/// `multiplier * (a Mbar + D) * delta`.
pub fn proximity_band(params: &CodecParams, d: f64, multiplier: f64) -> f64 {
    multiplier * (params.a * params.m_bar + d) * params.delta
}

/// Steps from `from` until `errors` enters `[0, band]` and stays there for
/// [`RECOVERY_HOLD`] consecutive steps.
pub fn recovery_steps(errors: &[f64], from: usize, band: f64) -> Option<usize> {
    (from..errors.len())
        .find(|&k| errors.get(k..k + RECOVERY_HOLD).is_some_and(|w| w.iter().all(|&e| e <= band)))
        .map(|k| k - from)
}

pub struct ComparisonRun {
    pub report: ComparisonReport,
    pub modified: Trace,
    pub baseline: Trace,
}

/// Runs the floored rule and the baseline on the same samples and measures
/// recovery after the first jump of the signal.
pub fn compare(config: &ExperimentConfig, comparison: &Comparison, samples: &SampledSignal) -> Result<ComparisonRun> {
    let breaks = config.signal.breakpoints();
    let jump_time = *breaks
        .first()
        .ok_or_else(|| Error::Param("comparison needs a signal with at least one jump".into()))?;
    let segment_end = breaks.get(1).copied().unwrap_or(config.horizon).min(config.horizon);
    let segment_end = variation_end(config.codec.delta, segment_end, config.horizon);
    let delta = config.codec.delta;
    let variation = estimate_variation_bound(&config.signal, delta, (jump_time, segment_end), config.oversample_factor)?;

    let modified_params = config.codec.with_rule(AdaptationRule::Modified);
    let baseline_params = config.codec.with_rule(comparison.baseline);
    let band = proximity_band(&modified_params, variation.d, comparison.proximity_band_multiplier);
    let jump_step = variation.cells(delta).start;

    let (_, modified) = encode_signal(&modified_params, samples)?;
    let (_, baseline) = encode_signal(&baseline_params, samples)?;
    let steps = |t: &Trace| {
        let errors: Vec<f64> = t.records.iter().map(|r| r.abs_error().unwrap_or(f64::INFINITY)).collect();
        recovery_steps(&errors, jump_step, band)
    };
    let report = ComparisonReport {
        jump_time,
        jump_step,
        band,
        d: variation.d,
        baseline: comparison.baseline,
        recovery_steps_modified: steps(&modified),
        recovery_steps_baseline: steps(&baseline),
    };
    Ok(ComparisonRun { report, modified, baseline })
}
