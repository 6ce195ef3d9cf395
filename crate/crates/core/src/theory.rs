//! Worst-case tracking guarantees of the floored adaptive rule, checked
//! against concrete traces.
//!
//! The guarantees come in three phases:
//!
//! 1. acquisition: the first switch `tau` happens no later than the first
//!    `m` with `M0 (1 + a + ... + a^m) delta >= |y0 - x(0)| + C (1 + m^c delta^c)`;
//! 2. settling: when `Mbar >= 2D`, some `eta` in `[tau, tau + ceil(3 log_a(M_tau / Mbar) + 6)]`
//!    has `M_eta = Mbar` and `|x(t_eta) - y(t_eta)| <= (a Mbar + D) delta`;
//! 3. steady state: from `eta` on, `M_k` is `Mbar` or `a Mbar` (and `Mbar` at every
//!    switch), sample errors stay within `(a Mbar + D) delta`, errors between
//!    samples within `(a Mbar + 2D) delta`, switches are at most 3 steps apart,
//!    and no symbol repeats four times in a row.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::codec::{AdaptationRule, CodecParams, Trace};
use crate::error::{Error, Result};
use crate::signals::{sub_offset, GrowthBound, SampledSignal, VariationBound};

/// Default iteration cap of [`acquisition_bound`].
pub const DEFAULT_ACQUISITION_CAP: usize = 1_000_000;

/// Relative tolerance when identifying a slope with `Mbar` or `a * Mbar`.
/// Dividing `a * Mbar` by `a` may land an ulp away from `Mbar`.
pub const SLOPE_RTOL: f64 = 1e-12;

/// Longest gap between consecutive switches in steady state.
pub const MAX_SWITCH_GAP: usize = 3;

/// Longest run of equal symbols in steady state.
pub const MAX_SYMBOL_RUN: usize = 3;

pub fn slope_matches(m: f64, target: f64) -> bool {
    (m - target).abs() <= SLOPE_RTOL * target.abs()
}

/// Indices `k >= 1` with `h_{k-1} != h_k`.
pub fn switch_set(trace: &Trace) -> BTreeSet<usize> {
    trace
        .records
        .windows(2)
        .filter(|w| w[0].h != w[1].h)
        .map(|w| w[1].k)
        .collect()
}

pub fn acquisition_bound(params: &CodecParams, initial_gap: f64, growth: &GrowthBound) -> Result<usize> {
    acquisition_bound_capped(params, initial_gap, growth, DEFAULT_ACQUISITION_CAP)
}

/// Smallest `m` with `M0 (1 + a + ... + a^m) delta >= gap + C (1 + m^c delta^c)`.
pub fn acquisition_bound_capped(
    params: &CodecParams,
    initial_gap: f64,
    growth: &GrowthBound,
    cap: usize,
) -> Result<usize> {
    if !(initial_gap >= 0.0) {
        return Err(Error::Param(format!("initial gap {initial_gap} must be >= 0")));
    }
    if !(growth.scale >= 0.0 && growth.exponent > 0.0) {
        return Err(Error::Param(format!("invalid growth bound {growth:?}")));
    }
    let c = growth.exponent;
    let delta_c = params.delta.powf(c);
    let mut travelled = 0.0;
    let mut step = params.m0 * params.delta;
    for m in 0..=cap {
        travelled += step;
        step *= params.a;
        let needed = initial_gap + growth.scale * (1.0 + (m as f64).powf(c) * delta_c);
        if travelled >= needed {
            return Ok(m);
        }
    }
    Err(Error::Divergence { cap })
}

/// `ceil(3 log_a(M_tau / Mbar) + 6)`, clamped to 6 when `M_tau < Mbar`.
pub fn settling_window(m_tau: f64, params: &CodecParams) -> Result<usize> {
    if !(params.m_bar > 0.0) {
        return Err(Error::Param("settling window needs a positive slope floor".into()));
    }
    if !(m_tau > 0.0 && m_tau.is_finite()) {
        return Err(Error::Param(format!("M_tau = {m_tau} must be finite and > 0")));
    }
    let log = ((m_tau / params.m_bar).ln() / params.a.ln()).max(0.0);
    let window = 3.0 * log + 6.0;
    // M_tau = a^j Mbar should give exactly 3j + 6, not one more
    let nearest = window.round();
    let window = if (window - nearest).abs() <= 1e-9 * window { nearest } else { window.ceil() };
    Ok(window as usize)
}

/// `((a Mbar + D) delta, (a Mbar + 2D) delta)`: bounds at samples and between samples.
pub fn steady_error_bounds(params: &CodecParams, d: f64) -> (f64, f64) {
    let base = params.a * params.m_bar;
    ((base + d) * params.delta, (base + 2.0 * d) * params.delta)
}

fn check_grid(trace: &Trace, samples: &SampledSignal) -> Result<()> {
    if samples.delta != trace.params.delta || samples.len() != trace.len() {
        return Err(Error::Param(format!(
            "samples (delta {}, {} values) do not match trace (delta {}, {} steps)",
            samples.delta,
            samples.len(),
            trace.params.delta,
            trace.len()
        )));
    }
    Ok(())
}

/// First `k` with `M_k = Mbar` and `|x_k - y_k| <= (a Mbar + D) delta`.
pub fn detect_settling(trace: &Trace, samples: &SampledSignal, d: f64) -> Result<Option<usize>> {
    detect_settling_from(trace, samples, d, 0)
}

/// As [`detect_settling`], searching from step `start` on.
pub fn detect_settling_from(trace: &Trace, samples: &SampledSignal, d: f64, start: usize) -> Result<Option<usize>> {
    if trace.params.rule != AdaptationRule::Modified {
        return Err(Error::Param("settling is defined for the floored rule only".into()));
    }
    check_grid(trace, samples)?;
    let (bound, _) = steady_error_bounds(&trace.params, d);
    let m_bar = trace.params.m_bar;
    Ok(trace
        .records
        .iter()
        .skip(start)
        .find(|r| slope_matches(r.m, m_bar) && (samples.values[r.k] - r.y).abs() <= bound)
        .map(|r| r.k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// First switch no later than the acquisition bound.
    Acquisition,
    /// Settling index inside the window after the first switch.
    Settling,
    /// Slope is `Mbar` or `a Mbar` after settling.
    SlopeSet,
    /// Slope is `Mbar` at every switch after settling.
    SwitchFloor,
    SampleError,
    IntervalError,
    SwitchGap,
    SymbolRun,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub claim: Claim,
    pub k: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    /// First switch after the start of the checked range.
    pub tau: Option<usize>,
    pub tau_bound: Option<usize>,
    pub eta: Option<usize>,
    pub eta_window_end: Option<usize>,
    pub sample_error_bound: f64,
    pub interval_error_bound: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub oversample_factor: usize,
    /// Steps `[start, end)` whose cells lie inside the variation interval.
    pub checked_from: usize,
    pub checked_to: usize,
    pub max_sample_error: Option<f64>,
    pub max_interval_error: Option<f64>,
    pub max_switch_gap: Option<usize>,
    pub max_symbol_run: Option<usize>,
    /// Claims that could not be checked, and why.
    pub notes: Vec<String>,
    pub violations: Vec<Violation>,
}

impl TheoremReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations_of(&self, claim: Claim) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.claim == claim)
    }

    fn flag(&mut self, claim: Claim, k: usize, detail: String) {
        self.violations.push(Violation { claim, k, detail });
    }
}

/// Checks every applicable guarantee on `trace`.
///
/// Only steps whose cell `[t_k, t_{k+1}]` lies inside the variation interval
/// are examined, and the interval start acts as a restart point: the
/// acquisition bound is evaluated from `y`, `M` at that step, and `tau` is the
/// first switch after it. Settling and steady-state claims need the floored
/// rule with `Mbar >= 2D`; otherwise they are skipped with a note. Errors
/// between samples are evaluated at `oversample_factor + 1` points per cell
/// when the samples carry their signal definition.
pub fn verify_theorem(
    trace: &Trace,
    samples: &SampledSignal,
    variation: &VariationBound,
    growth: Option<&GrowthBound>,
    oversample_factor: usize,
) -> Result<TheoremReport> {
    check_grid(trace, samples)?;
    if oversample_factor < 2 {
        return Err(Error::Param(format!("oversample factor {oversample_factor} must be >= 2")));
    }
    let params = &trace.params;
    let d = variation.d;
    let (sample_bound, interval_bound) = steady_error_bounds(params, d);
    let cells = variation.cells(params.delta);
    let start = cells.start;
    let end = cells.end.min(trace.len());

    let mut report = TheoremReport {
        sample_error_bound: sample_bound,
        interval_error_bound: interval_bound,
        d,
        oversample_factor,
        checked_from: start,
        checked_to: end,
        ..TheoremReport::default()
    };
    if start >= end {
        report.notes.push("no step inside the variation interval".into());
        return Ok(report);
    }

    let switches = switch_set(trace);
    report.tau = switches.range(start + 1..end).next().copied();

    match growth {
        Some(growth) => check_acquisition(trace, samples, growth, start, end, &mut report)?,
        None => report.notes.push("acquisition: no growth bound supplied".into()),
    }

    if params.rule != AdaptationRule::Modified || !(params.m_bar > 0.0) || params.m_bar < 2.0 * d {
        report.notes.push(format!(
            "settling/steady state: need the floored rule with Mbar >= 2D (Mbar = {}, D = {d})",
            params.m_bar
        ));
        return Ok(report);
    }

    let Some(tau) = report.tau else {
        report.notes.push("settling: no switch inside the checked range".into());
        return Ok(report);
    };
    let window_end = tau + settling_window(trace.records[tau].m, params)?;
    report.eta_window_end = Some(window_end);
    let eta = detect_settling_from(trace, samples, d, tau)?.filter(|&k| k < end);
    report.eta = eta;
    match eta {
        Some(k) if k > window_end => {
            report.flag(Claim::Settling, k, format!("settled at {k}, after window end {window_end}"))
        }
        None if window_end < end => {
            report.flag(Claim::Settling, window_end, format!("not settled by window end {window_end}"))
        }
        None => report.notes.push(format!("settling: window end {window_end} beyond checked range")),
        Some(_) => {}
    }

    if let Some(eta) = eta {
        check_steady_state(trace, samples, &switches, eta, end, &mut report);
    }
    Ok(report)
}

/// [`verify_theorem`] restarted at the first grid step at or after `restart_time`,
/// for use after a jump.
pub fn verify_restart(
    trace: &Trace,
    samples: &SampledSignal,
    variation: &VariationBound,
    growth: Option<&GrowthBound>,
    oversample_factor: usize,
    restart_time: f64,
) -> Result<TheoremReport> {
    let restarted = VariationBound { alpha: variation.alpha.max(restart_time), ..*variation };
    verify_theorem(trace, samples, &restarted, growth, oversample_factor)
}

fn check_acquisition(
    trace: &Trace,
    samples: &SampledSignal,
    growth: &GrowthBound,
    start: usize,
    end: usize,
    report: &mut TheoremReport,
) -> Result<()> {
    let first = &trace.records[start];
    let restarted = CodecParams { y0: first.y, m0: first.m, ..trace.params };
    let gap = (first.y - samples.values[start]).abs();
    let bound = start + acquisition_bound(&restarted, gap, growth)?;
    report.tau_bound = Some(bound);
    match report.tau {
        Some(tau) if tau > bound => {
            report.flag(Claim::Acquisition, tau, format!("first switch at {tau}, bound {bound}"))
        }
        None if bound < end => {
            report.flag(Claim::Acquisition, bound, format!("no switch by bound {bound}"))
        }
        None => report.notes.push(format!("acquisition: bound {bound} beyond checked range")),
        Some(_) => {}
    }
    Ok(())
}

fn check_steady_state(
    trace: &Trace,
    samples: &SampledSignal,
    switches: &BTreeSet<usize>,
    eta: usize,
    end: usize,
    report: &mut TheoremReport,
) {
    let params = &trace.params;
    let delta = params.delta;
    let m_bar = params.m_bar;
    let high = params.a * m_bar;
    let factor = report.oversample_factor;
    let spec = samples.spec.as_ref();
    if spec.is_none() {
        report.notes.push("interval error: samples carry no signal definition".into());
    }

    let mut max_sample: f64 = 0.0;
    let mut max_interval: f64 = 0.0;
    for r in &trace.records[eta..end] {
        let k = r.k;
        if !(slope_matches(r.m, m_bar) || slope_matches(r.m, high)) {
            report.flag(Claim::SlopeSet, k, format!("M = {} not in {{{m_bar}, {high}}}", r.m));
        }
        if switches.contains(&k) && !slope_matches(r.m, m_bar) {
            report.flag(Claim::SwitchFloor, k, format!("M = {} at a switch", r.m));
        }
        let err = (samples.values[k] - r.y).abs();
        max_sample = max_sample.max(err);
        if err > report.sample_error_bound {
            report.flag(Claim::SampleError, k, format!("|x - y| = {err} > {}", report.sample_error_bound));
        }
        if let Some(spec) = spec {
            for j in 0..=factor {
                let offset = sub_offset(delta, j, factor);
                let estimate = r.y + r.h.sign() * r.m * offset;
                let err = (spec.eval(r.t + offset) - estimate).abs();
                max_interval = max_interval.max(err);
                if err > report.interval_error_bound {
                    report.flag(
                        Claim::IntervalError,
                        k,
                        format!("|x - y| = {err} > {} at offset {offset}", report.interval_error_bound),
                    );
                    break;
                }
            }
        }
    }
    report.max_sample_error = Some(max_sample);
    report.max_interval_error = spec.map(|_| max_interval);

    let steady: Vec<usize> = switches.range(eta..end).copied().collect();
    let mut max_gap = 0;
    for (i, &s) in steady.iter().enumerate() {
        match steady.get(i + 1) {
            Some(&next) => {
                max_gap = max_gap.max(next - s);
                if next - s > MAX_SWITCH_GAP {
                    report.flag(Claim::SwitchGap, s, format!("next switch at {next}"));
                }
            }
            None if s + MAX_SWITCH_GAP < end => {
                max_gap = max_gap.max(end - s);
                report.flag(Claim::SwitchGap, s, format!("no switch in ({s}, {end})"));
            }
            None => {}
        }
    }
    report.max_switch_gap = Some(max_gap);

    // runs within h_{eta+1}, h_{eta+2}, ...
    let mut max_run = 0;
    let mut run = 0;
    for k in eta + 1..end {
        let h = trace.records[k].h;
        run = if k > eta + 1 && trace.records[k - 1].h == h { run + 1 } else { 1 };
        max_run = max_run.max(run);
        if run == MAX_SYMBOL_RUN + 1 {
            report.flag(Claim::SymbolRun, k, format!("{} equal symbols ending at {k}", run));
        }
    }
    report.max_symbol_run = Some(max_run);
}
