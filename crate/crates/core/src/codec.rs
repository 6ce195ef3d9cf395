//! One-bit adaptive delta modulation.
//!
//! Encoder and decoder run the same recursion. At every step `k >= 1` the
//! predictor is advanced first,
//!
//! ```text
//! y_k = y_{k-1} + h_{k-1} * M_{k-1} * delta
//! ```
//!
//! then the symbol `h_k` is chosen (by comparing `y_k` with the sample on the
//! encoder side, or read from the channel on the decoder side), `k` is
//! classified as a switch when `h_k != h_{k-1}`, and finally the slope `M_k`
//! is adapted. Step 0 emits `h_0` against `y_0` with `h_{-1} = +1` and never
//! counts as a switch.
//!
//! Two adaptation rules share the machine:
//!
//! * [`AdaptationRule::Modified`] grows the slope by `a` only after two
//!   consecutive non-switch steps, holds it for one step right after a
//!   switch, and on a switch divides by `a` but never goes below the floor
//!   `m_bar`.
//! * [`AdaptationRule::Jayant`] is the classical rule: multiply by `a` on a
//!   repeat, divide by `a` on a switch, no hold and no floor.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};
use crate::signals::SampledSignal;

/// One transmitted bit. `Plus` means the estimate was below the sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Plus,
    Minus,
}

impl Symbol {
    pub fn sign(self) -> f64 {
        match self {
            Symbol::Plus => 1.0,
            Symbol::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Symbol::Plus => 1,
            Symbol::Minus => -1,
        }
    }

    #[must_use]
    pub fn flip(self) -> Self {
        match self {
            Symbol::Plus => Symbol::Minus,
            Symbol::Minus => Symbol::Plus,
        }
    }

    /// `'1'` for `Plus`, `'0'` for `Minus`.
    pub fn to_bit_char(self) -> char {
        match self {
            Symbol::Plus => '1',
            Symbol::Minus => '0',
        }
    }

    pub fn from_bit_char(c: char) -> Option<Self> {
        match c {
            '1' => Some(Symbol::Plus),
            '0' => Some(Symbol::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symbol::Plus => "+1",
            Symbol::Minus => "-1",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdaptationRule {
    #[default]
    Modified,
    Jayant,
}

impl fmt::Display for AdaptationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdaptationRule::Modified => "modified",
            AdaptationRule::Jayant => "jayant",
        })
    }
}

impl std::str::FromStr for AdaptationRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modified" => Ok(AdaptationRule::Modified),
            "jayant" => Ok(AdaptationRule::Jayant),
            other => Err(Error::Param(format!("unknown adaptation rule {other:?}"))),
        }
    }
}

/// Parameters shared by encoder and decoder.
///
/// Slopes (`m0`, `m_bar`) are in signal units per second, `delta` is the
/// sampling period in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodecParams {
    pub y0: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
    #[serde(rename = "Mbar")]
    pub m_bar: f64,
    pub a: f64,
    pub delta: f64,
    pub rule: AdaptationRule,
}

impl CodecParams {
    /// Builds and validates a parameter set. For the Jayant rule the floor is
    /// forced to zero.
    pub fn new(y0: f64, m0: f64, m_bar: f64, a: f64, delta: f64, rule: AdaptationRule) -> Result<Self> {
        let m_bar = match rule {
            AdaptationRule::Modified => m_bar,
            AdaptationRule::Jayant => 0.0,
        };
        let params = CodecParams { y0, m0, m_bar, a, delta, rule };
        params.validate()?;
        Ok(params)
    }

    pub fn modified(y0: f64, m0: f64, m_bar: f64, a: f64, delta: f64) -> Result<Self> {
        Self::new(y0, m0, m_bar, a, delta, AdaptationRule::Modified)
    }

    pub fn jayant(y0: f64, m0: f64, a: f64, delta: f64) -> Result<Self> {
        Self::new(y0, m0, 0.0, a, delta, AdaptationRule::Jayant)
    }

    /// Same parameters under another rule. Switching to Jayant drops the floor.
    #[must_use]
    pub fn with_rule(mut self, rule: AdaptationRule) -> Self {
        self.rule = rule;
        if rule == AdaptationRule::Jayant {
            self.m_bar = 0.0;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        finite("y0", self.y0)?;
        finite("M0", self.m0)?;
        finite("Mbar", self.m_bar)?;
        finite("a", self.a)?;
        finite("delta", self.delta)?;
        if !(self.a > 1.0 && self.a <= 2.0) {
            return Err(Error::Param(format!("a = {} outside (1, 2]", self.a)));
        }
        if self.delta <= 0.0 {
            return Err(Error::Param(format!("delta = {} must be > 0", self.delta)));
        }
        if self.m0 <= 0.0 {
            return Err(Error::Param(format!("M0 = {} must be > 0", self.m0)));
        }
        if self.m_bar < 0.0 {
            return Err(Error::Param(format!("Mbar = {} must be >= 0", self.m_bar)));
        }
        if self.rule == AdaptationRule::Jayant && self.m_bar != 0.0 {
            return Err(Error::Param(format!("Jayant rule has no floor, got Mbar = {}", self.m_bar)));
        }
        Ok(())
    }

    /// Grid time `t_k = k * delta`, never accumulated.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.delta
    }
}

/// State after the most recent step (or before step 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodecState {
    next: usize,
    y: f64,
    m: f64,
    h: Symbol,
    in_switch: bool,
}

impl CodecState {
    /// Index of the step this state is waiting for.
    pub fn next_step(&self) -> usize {
        self.next
    }

    /// Current estimate `y_k`.
    pub fn y(&self) -> f64 {
        self.y
    }

    /// Current slope `M_k`.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Last symbol `h_k`; `+1` before step 0.
    pub fn h(&self) -> Symbol {
        self.h
    }

    /// Whether the last completed step was a switch.
    pub fn in_switch(&self) -> bool {
        self.in_switch
    }
}

/// Per-step log entry. `x` is absent on the decoder side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    pub x: Option<f64>,
    pub y: f64,
    pub h: Symbol,
    #[serde(rename = "M")]
    pub m: f64,
    pub in_switch: bool,
}

impl StepRecord {
    /// Piecewise-linear estimate `y_k + h_k M_k (t - t_k)` on `[t_k, t_{k+1}]`.
    ///
    /// At the right endpoint the elapsed time is taken as exactly `delta`, so
    /// the value equals the next record's `y` bit for bit.
    pub fn reconstruct(&self, delta: f64, t: f64) -> Result<f64> {
        let end = (self.k + 1) as f64 * delta;
        if !(t >= self.t && t <= end) {
            return Err(Error::Domain { t, start: self.t, end });
        }
        let elapsed = if t == end { delta } else { t - self.t };
        Ok(self.y + self.h.sign() * self.m * elapsed)
    }

    /// `|x_k - y_k|` when the sample is known.
    pub fn abs_error(&self) -> Option<f64> {
        self.x.map(|x| (x - self.y).abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub params: CodecParams,
    pub records: Vec<StepRecord>,
}

impl Trace {
    pub fn new(params: CodecParams) -> Self {
        Trace { params, records: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn bits(&self) -> Vec<Symbol> {
        self.records.iter().map(|r| r.h).collect()
    }

    /// Reconstructed estimate `y(t)` for `t` in `[0, t_n]`.
    pub fn estimate_at(&self, t: f64) -> Result<f64> {
        let delta = self.params.delta;
        let end = self.records.len() as f64 * delta;
        if self.records.is_empty() || !(t >= 0.0 && t <= end) {
            return Err(Error::Domain { t, start: 0.0, end });
        }
        let mut k = ((t / delta).floor() as usize).min(self.records.len() - 1);
        // floor() can land one cell off near the grid points
        if t < self.records[k].t && k > 0 {
            k -= 1;
        } else if k + 1 < self.records.len() && t >= self.records[k + 1].t {
            k += 1;
        }
        self.records[k].reconstruct(delta, t)
    }

    /// Same trace with the samples stripped, as the decoder would see it.
    #[must_use]
    pub fn without_samples(&self) -> Trace {
        let records = self.records.iter().map(|r| StepRecord { x: None, ..*r }).collect();
        Trace { params: self.params, records }
    }
}

/// State before step 0.
pub fn init_state(params: &CodecParams) -> Result<CodecState> {
    params.validate()?;
    Ok(CodecState {
        next: 0,
        y: params.y0,
        m: params.m0,
        h: Symbol::Plus,
        in_switch: false,
    })
}

/// Symbol for sample `x` given the predicted estimate `y`. On an exact tie the
/// previous symbol is inverted.
pub fn symbol_for_sample(y: f64, x: f64, h_prev: Symbol) -> Result<Symbol> {
    finite("estimate", y)?;
    finite("sample", x)?;
    Ok(if y < x {
        Symbol::Plus
    } else if y > x {
        Symbol::Minus
    } else {
        h_prev.flip()
    })
}

/// Slope after a step, given whether this step and the previous one were
/// switches.
pub fn step_size_update(m_prev: f64, in_switch: bool, prev_in_switch: bool, params: &CodecParams) -> f64 {
    let a = params.a;
    match params.rule {
        AdaptationRule::Modified => {
            if in_switch {
                (m_prev / a).max(params.m_bar)
            } else if prev_in_switch {
                m_prev
            } else {
                a * m_prev
            }
        }
        AdaptationRule::Jayant => {
            if in_switch {
                m_prev / a
            } else {
                a * m_prev
            }
        }
    }
}

fn check_step(state: &CodecState, k: usize) -> Result<()> {
    if state.next != k {
        return Err(Error::Sequencing { expected: state.next, found: k });
    }
    Ok(())
}

/// Shared recursion. `choose` maps the predicted estimate to the symbol.
fn advance<F>(params: &CodecParams, state: &CodecState, x: Option<f64>, choose: F) -> Result<(CodecState, StepRecord)>
where
    F: FnOnce(f64, Symbol) -> Result<Symbol>,
{
    let k = state.next;
    let (y, h, m, in_switch) = if k == 0 {
        let h = choose(state.y, state.h)?;
        (state.y, h, state.m, false)
    } else {
        let y = state.y + state.h.sign() * state.m * params.delta;
        let h = choose(y, state.h)?;
        let in_switch = h != state.h;
        let m = step_size_update(state.m, in_switch, state.in_switch, params);
        (y, h, m, in_switch)
    };
    let next = CodecState { next: k + 1, y, m, h, in_switch };
    let record = StepRecord { k, t: params.time(k), x, y, h, m, in_switch };
    Ok((next, record))
}

/// Encodes sample `x` taken at step `k`.
pub fn encode_step(params: &CodecParams, state: &CodecState, k: usize, x: f64) -> Result<(CodecState, Symbol, StepRecord)> {
    check_step(state, k)?;
    finite("sample", x)?;
    let (next, record) = advance(params, state, Some(x), |y, h_prev| symbol_for_sample(y, x, h_prev))?;
    Ok((next, record.h, record))
}

/// Applies received symbol `h` at step `k`.
pub fn decode_step(params: &CodecParams, state: &CodecState, k: usize, h: Symbol) -> Result<(CodecState, StepRecord)> {
    check_step(state, k)?;
    advance(params, state, None, |_, _| Ok(h))
}

/// Streaming encoder that tracks the step index itself.
#[derive(Clone, Debug)]
pub struct Encoder {
    params: CodecParams,
    state: CodecState,
}

impl Encoder {
    pub fn new(params: CodecParams) -> Result<Self> {
        let state = init_state(&params)?;
        Ok(Encoder { params, state })
    }

    pub fn state(&self) -> &CodecState {
        &self.state
    }

    pub fn push(&mut self, x: f64) -> Result<StepRecord> {
        let (state, _, record) = encode_step(&self.params, &self.state, self.state.next, x)?;
        self.state = state;
        Ok(record)
    }
}

#[derive(Clone, Debug)]
pub struct Decoder {
    params: CodecParams,
    state: CodecState,
}

impl Decoder {
    pub fn new(params: CodecParams) -> Result<Self> {
        let state = init_state(&params)?;
        Ok(Decoder { params, state })
    }

    pub fn state(&self) -> &CodecState {
        &self.state
    }

    pub fn push(&mut self, h: Symbol) -> Result<StepRecord> {
        let (state, record) = decode_step(&self.params, &self.state, self.state.next, h)?;
        self.state = state;
        Ok(record)
    }
}

/// Encodes raw grid samples `x(k * delta)`.
pub fn encode_samples(params: &CodecParams, samples: &[f64]) -> Result<(Vec<Symbol>, Trace)> {
    let mut encoder = Encoder::new(*params)?;
    let mut trace = Trace::new(*params);
    trace.records.reserve(samples.len());
    for &x in samples {
        trace.records.push(encoder.push(x)?);
    }
    Ok((trace.bits(), trace))
}

/// Encodes a sampled signal; its grid must match `params.delta`.
pub fn encode_signal(params: &CodecParams, samples: &SampledSignal) -> Result<(Vec<Symbol>, Trace)> {
    if samples.delta != params.delta {
        return Err(Error::Param(format!(
            "sample grid delta {} does not match codec delta {}",
            samples.delta, params.delta
        )));
    }
    encode_samples(params, &samples.values)
}

pub fn decode_bitstream(params: &CodecParams, bits: &[Symbol]) -> Result<Trace> {
    let mut decoder = Decoder::new(*params)?;
    let mut trace = Trace::new(*params);
    trace.records.reserve(bits.len());
    for &h in bits {
        trace.records.push(decoder.push(h)?);
    }
    Ok(trace)
}
