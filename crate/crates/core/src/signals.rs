//! Test signals, grid sampling, and empirical regularity constants.

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};

/// A deterministic test signal `x(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SignalSpec {
    Constant {
        level: f64,
    },
    Ramp {
        slope: f64,
        intercept: f64,
    },
    Sine {
        amplitude: f64,
        frequency_hz: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Segments switch at their start times (right-continuous). Each segment
    /// is evaluated in local time `t - start`.
    Piecewise { segments: Vec<Segment> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub signal: SignalSpec,
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SignalSpec::Constant { level } => finite("level", *level).map(drop),
            SignalSpec::Ramp { slope, intercept } => {
                finite("slope", *slope)?;
                finite("intercept", *intercept).map(drop)
            }
            SignalSpec::Sine { amplitude, frequency_hz, phase } => {
                finite("amplitude", *amplitude)?;
                finite("frequency", *frequency_hz)?;
                finite("phase", *phase).map(drop)
            }
            SignalSpec::Piecewise { segments } => {
                let first = segments
                    .first()
                    .ok_or_else(|| Error::Param("piecewise signal has no segments".into()))?;
                if first.start != 0.0 {
                    return Err(Error::Param(format!("first segment starts at {}, not 0", first.start)));
                }
                for pair in segments.windows(2) {
                    if !(pair[1].start > pair[0].start) {
                        return Err(Error::Param(format!(
                            "segment starts not strictly increasing: {} then {}",
                            pair[0].start, pair[1].start
                        )));
                    }
                }
                segments.iter().try_for_each(|s| s.signal.validate())
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SignalSpec::Constant { level } => *level,
            SignalSpec::Ramp { slope, intercept } => intercept + slope * t,
            SignalSpec::Sine { amplitude, frequency_hz, phase } => {
                amplitude * (std::f64::consts::TAU * frequency_hz * t + phase).sin()
            }
            SignalSpec::Piecewise { segments } => {
                let idx = segments.partition_point(|s| s.start <= t).saturating_sub(1);
                let seg = &segments[idx];
                seg.signal.eval(t - seg.start)
            }
        }
    }

    /// Start times of the second and later piecewise segments.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            SignalSpec::Piecewise { segments } => segments.iter().skip(1).map(|s| s.start).collect(),
            _ => Vec::new(),
        }
    }
}

/// Samples `x(k * delta)` for `k = 0..n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub delta: f64,
    pub values: Vec<f64>,
    pub spec: Option<SignalSpec>,
}

impl SampledSignal {
    pub fn from_values(delta: f64, values: Vec<f64>) -> Result<Self> {
        check_delta(delta)?;
        for &v in &values {
            finite("sample", v)?;
        }
        Ok(SampledSignal { delta, values, spec: None })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.delta
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Param(format!("delta = {delta} must be finite and > 0")));
    }
    Ok(())
}

/// Number of grid points `k * delta` in `[0, horizon)`.
pub fn grid_len(delta: f64, horizon: f64) -> usize {
    let mut n = (horizon / delta).ceil().max(0.0) as usize;
    while n > 0 && (n - 1) as f64 * delta >= horizon {
        n -= 1;
    }
    while (n as f64) * delta < horizon {
        n += 1;
    }
    n
}

pub fn sample(spec: &SignalSpec, delta: f64, horizon: f64) -> Result<SampledSignal> {
    check_delta(delta)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Param(format!("horizon = {horizon} must be finite and > 0")));
    }
    spec.validate()?;
    let values = (0..grid_len(delta, horizon))
        .map(|k| finite("sample", spec.eval(k as f64 * delta)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledSignal { delta, values, spec: Some(spec.clone()) })
}

/// Certified variation constant `D` on `[alpha, beta]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationBound {
    #[serde(rename = "D")]
    pub d: f64,
    pub alpha: f64,
    pub beta: f64,
    pub oversample_factor: usize,
}

impl VariationBound {
    /// Grid cells `[t_k, t_{k+1}]` fully inside `[alpha, beta]`, as a range of `k`.
    pub fn cells(&self, delta: f64) -> std::ops::Range<usize> {
        cell_range(delta, self.alpha, self.beta)
    }
}

fn cell_range(delta: f64, alpha: f64, beta: f64) -> std::ops::Range<usize> {
    let mut first = (alpha / delta).ceil().max(0.0) as usize;
    while first > 0 && ((first - 1) as f64 * delta) >= alpha {
        first -= 1;
    }
    while (first as f64 * delta) < alpha {
        first += 1;
    }
    let mut end = first;
    while ((end + 1) as f64 * delta) <= beta {
        end += 1;
    }
    first..end
}

/// Offset of the `j`-th of `factor` subdivision points inside a cell. Grids for
/// factors that divide each other share their common points exactly.
pub(crate) fn sub_offset(delta: f64, j: usize, factor: usize) -> f64 {
    if j == factor {
        delta
    } else {
        delta * (j as f64 / factor as f64)
    }
}

/// Largest `sup |x(t) - x(t_k)| / delta` over full cells inside `[alpha, beta]`,
/// with the supremum taken over `oversample_factor + 1` points per cell.
pub fn estimate_variation_bound(
    spec: &SignalSpec,
    delta: f64,
    interval: (f64, f64),
    oversample_factor: usize,
) -> Result<VariationBound> {
    check_delta(delta)?;
    spec.validate()?;
    if oversample_factor < 2 {
        return Err(Error::Param(format!("oversample factor {oversample_factor} must be >= 2")));
    }
    let (alpha, beta) = interval;
    if !(alpha < beta) {
        return Err(Error::Param(format!("empty interval [{alpha}, {beta}]")));
    }
    let cells = cell_range(delta, alpha, beta);
    if cells.is_empty() {
        return Err(Error::EmptyDomain(format!(
            "[{alpha}, {beta}] contains no full grid cell of width {delta}"
        )));
    }
    let mut worst: f64 = 0.0;
    for k in cells {
        let t_k = k as f64 * delta;
        let x_k = spec.eval(t_k);
        for j in 1..=oversample_factor {
            let x = spec.eval(t_k + sub_offset(delta, j, oversample_factor));
            worst = worst.max((x - x_k).abs());
        }
    }
    Ok(VariationBound { d: worst / delta, alpha, beta, oversample_factor })
}

/// Constants of the growth condition `|x(t + s)| <= C (|x(t)| + s^c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    #[serde(rename = "C")]
    pub scale: f64,
    #[serde(rename = "c")]
    pub exponent: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthViolation {
    pub k: usize,
    pub m: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl GrowthBound {
    /// Smallest scale for which every grid pair of `samples` holds exactly.
    pub fn fit(samples: &SampledSignal, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) {
            return Err(Error::Param(format!("growth exponent {exponent} must be > 0")));
        }
        let mut scale = f64::MIN_POSITIVE;
        for (_, _, lhs, base) in growth_pairs(samples, exponent) {
            if lhs > 0.0 {
                scale = scale.max(lhs / base);
            }
        }
        // division rounding can leave the ratio an ulp short
        while growth_pairs(samples, exponent).any(|(_, _, lhs, base)| lhs > scale * base) {
            scale = f64::from_bits(scale.to_bits() + 1);
        }
        Ok(GrowthBound { scale, exponent })
    }
}

fn growth_pairs(samples: &SampledSignal, exponent: f64) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
    let n = samples.values.len();
    (0..n).flat_map(move |k| {
        (1..n - k).map(move |m| {
            let tau = m as f64 * samples.delta;
            let lhs = samples.values[k + m].abs();
            let base = samples.values[k].abs() + tau.powf(exponent);
            (k, m, lhs, base)
        })
    })
}

/// Relative slack for the growth check: `(k + m) delta` and `k delta + m delta`
/// can differ in the last bit, which would break a bound that is tight.
pub const GROWTH_RTOL: f64 = 1e-12;

/// All grid pairs `(k, m)`, `m >= 1`, that break the growth condition
/// by more than [`GROWTH_RTOL`].
pub fn verify_growth(samples: &SampledSignal, bound: &GrowthBound) -> Vec<GrowthViolation> {
    growth_pairs(samples, bound.exponent)
        .filter_map(|(k, m, lhs, base)| {
            let rhs = bound.scale * base;
            (lhs > rhs * (1.0 + GROWTH_RTOL)).then_some(GrowthViolation { k, m, lhs, rhs })
        })
        .collect()
}
