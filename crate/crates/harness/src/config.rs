//! Experiment configuration.
//!
//! Precedence, lowest to highest: built-in defaults, the `--config` JSON
//! document, command-line flags. Relative output paths are resolved against
//! `--out` when given.

use std::fs;
use std::path::{Path, PathBuf};

use odm_core::channel::ChannelModel;
use odm_core::{AdaptationRule, CodecParams, GrowthBound, Segment, SignalSpec};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DEFAULT_OVERSAMPLE_FACTOR: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub trace_csv: PathBuf,
    pub report_json: PathBuf,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { trace_csv: "trace.csv".into(), report_json: "report.json".into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: AdaptationRule,
    pub proximity_band_multiplier: f64,
}

impl Default for Comparison {
    fn default() -> Self {
        Comparison { baseline: AdaptationRule::Jayant, proximity_band_multiplier: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub signal: SignalSpec,
    pub codec: CodecParams,
    pub horizon: f64,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default = "default_oversample")]
    pub oversample_factor: usize,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub comparison: Option<Comparison>,
    /// Growth constants to check the acquisition bound against. They are
    /// verified on the samples first and ignored with a warning if they fail.
    #[serde(default)]
    pub growth: Option<GrowthBound>,
}

fn default_oversample() -> usize {
    DEFAULT_OVERSAMPLE_FACTOR
}

/// Constant 2 on `[0, 1)`, then a jump to -1 followed by a slow ramp of slope 0.02.
///
/// This is a reconstruction in the spirit of a discontinuous test input, not
/// recovered figure data.
pub fn canonical_jump_signal() -> SignalSpec {
    SignalSpec::Piecewise {
        segments: vec![
            Segment { start: 0.0, signal: SignalSpec::Constant { level: 2.0 } },
            Segment { start: 1.0, signal: SignalSpec::Ramp { slope: 0.02, intercept: -1.0 } },
        ],
    }
}

/// `y0 = 5`, `a = 1.5`, `M0 = Mbar = 2 delta`.
pub fn reference_codec(delta: f64) -> CodecParams {
    CodecParams {
        y0: 5.0,
        m0: 2.0 * delta,
        m_bar: 2.0 * delta,
        a: 1.5,
        delta,
        rule: AdaptationRule::Modified,
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            signal: canonical_jump_signal(),
            codec: reference_codec(0.04),
            horizon: 2.0,
            channel: ChannelModel::Noiseless,
            oversample_factor: DEFAULT_OVERSAMPLE_FACTOR,
            outputs: Outputs::default(),
            comparison: Some(Comparison::default()),
            growth: None,
        }
    }
}

/// Command-line overrides of individual config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub delta: Option<f64>,
    pub a: Option<f64>,
    pub m0: Option<f64>,
    pub m_bar: Option<f64>,
    pub y0: Option<f64>,
    pub rule: Option<AdaptationRule>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config { path: path.to_owned(), detail: e.to_string() })
    }

    /// Loads `path` (or the defaults) and applies `overrides`.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut config = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let c = &mut self.codec;
        if let Some(v) = o.delta {
            c.delta = v;
        }
        if let Some(v) = o.a {
            c.a = v;
        }
        if let Some(v) = o.m0 {
            c.m0 = v;
        }
        if let Some(v) = o.m_bar {
            c.m_bar = v;
        }
        if let Some(v) = o.y0 {
            c.y0 = v;
        }
        if let Some(rule) = o.rule {
            *c = c.with_rule(rule);
        }
        if let (Some(seed), ChannelModel::Erasure { seed: s, .. }) = (o.seed, &mut self.channel) {
            *s = seed;
        }
        if let Some(dir) = &o.out_dir {
            let outputs = &mut self.outputs;
            outputs.trace_csv = dir.join(&outputs.trace_csv);
            outputs.report_json = dir.join(&outputs.report_json);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.codec.validate()?;
        self.signal.validate()?;
        self.channel.validate()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(odm_core::Error::Param(format!("horizon {} must be finite and > 0", self.horizon)).into());
        }
        if self.oversample_factor < 2 {
            return Err(odm_core::Error::Param(format!("oversample factor {} must be >= 2", self.oversample_factor)).into());
        }
        if let Some(cmp) = &self.comparison {
            if !(cmp.proximity_band_multiplier > 0.0) {
                return Err(odm_core::Error::Param("band multiplier must be > 0".into()).into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_experiment() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!((c.codec.y0, c.codec.a, c.codec.m0, c.codec.m_bar), (5.0, 1.5, 0.08, 0.08));
        assert_eq!(c.signal.eval(0.5), 2.0);
        assert_eq!(c.signal.eval(1.0), -1.0);
    }

    #[test]
    fn flags_override_config() {
        let mut c = ExperimentConfig { channel: ChannelModel::Erasure { p: 0.1, seed: 1 }, ..Default::default() };
        c.apply(&Overrides {
            delta: Some(0.02),
            rule: Some(AdaptationRule::Jayant),
            seed: Some(9),
            out_dir: Some("runs".into()),
            ..Default::default()
        });
        assert_eq!(c.codec.delta, 0.02);
        assert_eq!(c.codec.m_bar, 0.0);
        assert_eq!(c.channel, ChannelModel::Erasure { p: 0.1, seed: 9 });
        assert_eq!(c.outputs.trace_csv, PathBuf::from("runs/trace.csv"));
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
        let minimal = r#"{"signal":{"kind":"constant","level":1},
            "codec":{"y0":0,"M0":1,"Mbar":1,"a":2,"delta":1,"rule":"modified"},"horizon":3}"#;
        let c: ExperimentConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(c.oversample_factor, 32);
        assert!(serde_json::from_str::<ExperimentConfig>(&minimal.replace("\"horizon\"", "\"horizn\"")).is_err());
    }
}
