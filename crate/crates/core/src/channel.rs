//! Bitstream files and transport models.
//!
//! The `ODM/1` file is three `\n`-terminated lines:
//!
//! ```text
//! ODM/1
//! {"y0":0.0,"M0":1.0,"Mbar":1.0,"a":2.0,"delta":1.0,"rule":"modified","count":10}
//! 1111001101
//! ```
//!
//! The body holds exactly `count` characters, `'1'` for `+1` and `'0'` for `-1`.
//! Erasures only exist in transit and are never written.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{decode_step, init_state, CodecParams, Symbol, Trace};
use crate::error::{Error, Result};

pub const MAGIC: &str = "ODM/1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelModel {
    #[default]
    Noiseless,
    /// Each symbol is independently lost with probability `p`; the receiver
    /// always knows which positions were lost.
    Erasure { p: f64, seed: u64 },
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelModel::Noiseless => Ok(()),
            ChannelModel::Erasure { p, .. } if (0.0..1.0).contains(&p) => Ok(()),
            ChannelModel::Erasure { p, .. } => Err(Error::Param(format!("erasure probability {p} outside [0, 1)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Received {
    Plus,
    Minus,
    Erased,
}

impl From<Symbol> for Received {
    fn from(s: Symbol) -> Self {
        match s {
            Symbol::Plus => Received::Plus,
            Symbol::Minus => Received::Minus,
        }
    }
}

impl Received {
    pub fn symbol(self) -> Option<Symbol> {
        match self {
            Received::Plus => Some(Symbol::Plus),
            Received::Minus => Some(Symbol::Minus),
            Received::Erased => None,
        }
    }
}

/// Position-preserving view of what arrived.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceivedStream {
    pub symbols: Vec<Received>,
}

impl ReceivedStream {
    pub fn erasures(&self) -> usize {
        self.symbols.iter().filter(|s| **s == Received::Erased).count()
    }
}

pub fn transmit(bits: &[Symbol], model: &ChannelModel) -> Result<ReceivedStream> {
    model.validate()?;
    let symbols = match *model {
        ChannelModel::Noiseless => bits.iter().map(|&b| Received::from(b)).collect(),
        ChannelModel::Erasure { p, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            bits.iter()
                .map(|&b| if rng.random::<f64>() < p { Received::Erased } else { Received::from(b) })
                .collect()
        }
    };
    Ok(ReceivedStream { symbols })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErasurePolicy {
    /// Replace a lost symbol by the previous one.
    #[default]
    HoldSymbol,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveredTrace {
    pub trace: Trace,
    /// Steps whose symbol was substituted.
    pub substituted: Vec<usize>,
}

pub fn decode_with_erasures(params: &CodecParams, received: &ReceivedStream, policy: ErasurePolicy) -> Result<RecoveredTrace> {
    let mut state = init_state(params)?;
    let mut trace = Trace::new(*params);
    let mut substituted = Vec::new();
    for (k, r) in received.symbols.iter().enumerate() {
        let h = match (r.symbol(), policy) {
            (Some(h), _) => h,
            (None, ErasurePolicy::HoldSymbol) => {
                substituted.push(k);
                state.h()
            }
        };
        let (next, record) = decode_step(params, &state, k, h)?;
        state = next;
        trace.records.push(record);
    }
    Ok(RecoveredTrace { trace, substituted })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    #[serde(flatten)]
    params: CodecParams,
    count: usize,
}

pub fn format_bitstream(params: &CodecParams, bits: &[Symbol]) -> Result<String> {
    params.validate()?;
    let header = serde_json::to_string(&Header { params: *params, count: bits.len() })
        .map_err(|e| Error::Param(e.to_string()))?;
    let body: String = bits.iter().map(|b| b.to_bit_char()).collect();
    Ok(format!("{MAGIC}\n{header}\n{body}\n"))
}

pub fn parse_bitstream(text: &str) -> Result<(CodecParams, Vec<Symbol>)> {
    let fail = |line, detail: String| Error::Format { line, detail };
    let text = text.strip_suffix('\n').unwrap_or(text);
    let lines: Vec<&str> = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();

    if lines[0] != MAGIC {
        return Err(fail(1, format!("expected magic {MAGIC:?}, found {:?}", lines[0])));
    }
    let header_line = *lines.get(1).ok_or_else(|| fail(2, "missing header".into()))?;
    let header: Header = serde_json::from_str(header_line).map_err(|e| fail(2, format!("bad header: {e}")))?;
    header.params.validate().map_err(|e| fail(2, e.to_string()))?;
    let body = *lines.get(2).ok_or_else(|| fail(3, "missing body".into()))?;
    if lines.len() > 3 {
        return Err(fail(4, "unexpected content after body".into()));
    }

    let bits = body
        .chars()
        .enumerate()
        .map(|(offset, c)| {
            Symbol::from_bit_char(c).ok_or_else(|| fail(3, format!("invalid symbol {c:?} at offset {offset}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if bits.len() != header.count {
        return Err(fail(3, format!("body has {} symbols, header says {}", bits.len(), header.count)));
    }
    Ok((header.params, bits))
}

pub fn write_bitstream(path: &Path, params: &CodecParams, bits: &[Symbol]) -> Result<()> {
    let text = format_bitstream(params, bits)?;
    fs::write(path, text)?;
    Ok(())
}

pub fn read_bitstream(path: &Path) -> Result<(CodecParams, Vec<Symbol>)> {
    parse_bitstream(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{decode_bitstream, encode_samples, AdaptationRule};

    fn hand_params() -> CodecParams {
        CodecParams::modified(0.0, 1.0, 1.0, 2.0, 1.0).unwrap()
    }

    fn hand_bits() -> Vec<Symbol> {
        encode_samples(&hand_params(), &[10.0; 10]).unwrap().0
    }

    #[test]
    fn noiseless_is_identity() {
        let bits = hand_bits();
        let rx = transmit(&bits, &ChannelModel::Noiseless).unwrap();
        assert_eq!(rx.symbols.iter().map(|r| r.symbol().unwrap()).collect::<Vec<_>>(), bits);
        let rx = transmit(&bits, &ChannelModel::Erasure { p: 0.0, seed: 1 }).unwrap();
        assert_eq!(rx.erasures(), 0);
    }

    #[test]
    fn erasure_rate_and_reproducibility() {
        let bits: Vec<Symbol> = (0..1000).map(|k| if k % 3 == 0 { Symbol::Minus } else { Symbol::Plus }).collect();
        let model = ChannelModel::Erasure { p: 0.1, seed: 7 };
        let rx = transmit(&bits, &model).unwrap();
        assert!((60..=140).contains(&rx.erasures()), "{}", rx.erasures());
        assert_eq!(rx, transmit(&bits, &model).unwrap());
        for (r, b) in rx.symbols.iter().zip(&bits) {
            if let Some(s) = r.symbol() {
                assert_eq!(s, *b);
            }
        }
        assert!(transmit(&bits, &ChannelModel::Erasure { p: 1.0, seed: 7 }).is_err());
    }

    #[test]
    fn erasure_free_decode_matches_plain_decode() {
        let bits = hand_bits();
        let rx = transmit(&bits, &ChannelModel::Noiseless).unwrap();
        let rec = decode_with_erasures(&hand_params(), &rx, ErasurePolicy::HoldSymbol).unwrap();
        assert!(rec.substituted.is_empty());
        assert_eq!(rec.trace, decode_bitstream(&hand_params(), &bits).unwrap());
    }

    #[test]
    fn harmless_erasure() {
        // h_2 equals h_1, so holding reproduces it
        let bits = hand_bits();
        let mut rx = transmit(&bits, &ChannelModel::Noiseless).unwrap();
        rx.symbols[2] = Received::Erased;
        let rec = decode_with_erasures(&hand_params(), &rx, ErasurePolicy::HoldSymbol).unwrap();
        assert_eq!(rec.substituted, vec![2]);
        assert_eq!(rec.trace, decode_bitstream(&hand_params(), &bits).unwrap());
    }

    #[test]
    fn harmful_erasure_diverges() {
        let bits = hand_bits();
        let mut rx = transmit(&bits, &ChannelModel::Noiseless).unwrap();
        rx.symbols[4] = Received::Erased;
        let rec = decode_with_erasures(&hand_params(), &rx, ErasurePolicy::HoldSymbol).unwrap();
        let clean = decode_bitstream(&hand_params(), &bits).unwrap();
        assert_eq!(rec.trace.records[..5].iter().map(|r| r.y).collect::<Vec<_>>(),
                   clean.records[..5].iter().map(|r| r.y).collect::<Vec<_>>());
        assert_ne!(rec.trace.records[5].y, clean.records[5].y);
    }

    #[test]
    fn hand_trace_body() {
        let text = format_bitstream(&hand_params(), &hand_bits()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ODM/1");
        assert_eq!(lines[2], "1111001101");
        let header: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(header["count"], 10);
        assert_eq!(header["rule"], "modified");
        assert_eq!(header["M0"], 1.0);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bits.odm");
        let params = CodecParams::jayant(5.0, 0.08, 1.5, 0.04).unwrap();
        let bits = hand_bits();
        write_bitstream(&path, &params, &bits).unwrap();
        assert_eq!(read_bitstream(&path).unwrap(), (params, bits));
        assert_eq!(params.rule, AdaptationRule::Jayant);

        write_bitstream(&path, &params, &[]).unwrap();
        assert_eq!(read_bitstream(&path).unwrap(), (params, vec![]));
    }

    #[test]
    fn malformed_files() {
        let good = format_bitstream(&hand_params(), &hand_bits()).unwrap();
        let err = |s: &str| match parse_bitstream(s) {
            Err(Error::Format { line, .. }) => line,
            other => panic!("expected format error, got {other:?}"),
        };
        assert_eq!(err(&good.replace("ODM/1", "ODM/2")), 1);
        assert_eq!(err(""), 1);
        assert_eq!(err("ODM/1\n"), 2);
        assert_eq!(err("ODM/1\n{not json}\n1\n"), 2);
        assert_eq!(err(&good.replace("1111001101", "111100110")), 3);
        assert_eq!(err(&good.replace("1111001101", "11110011012")), 3);
        assert_eq!(err(&good.replace("\"a\":2.0", "\"a\":3.0")), 2);
        assert_eq!(err(&format!("{good}extra\n")), 4);
        assert_eq!(err(&good.replace("\"count\"", "\"bogus\":1,\"count\"")), 2);
        assert_eq!(err(&good.replace(",\"count\":10", "")), 2);
        let missing_body: String = good.lines().take(2).map(|l| format!("{l}\n")).collect();
        assert_eq!(err(&missing_body), 3);
    }
}
