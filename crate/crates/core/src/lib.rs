//! One-bit-per-sample signal tracking.
//!
//! * [`codec`]: the adaptive delta modulation encoder/decoder pair.
//! * [`signals`]: test signals, sampling, and regularity constants.
//! * [`theory`]: worst-case tracking bounds and trace verification.
//! * [`channel`]: bitstream files and noiseless/erasure transport.

pub mod channel;
pub mod codec;
pub mod error;
pub mod signals;
pub mod theory;

pub use codec::{
    decode_bitstream, decode_step, encode_samples, encode_signal, encode_step, init_state, step_size_update,
    symbol_for_sample, AdaptationRule, CodecParams, CodecState, Decoder, Encoder, StepRecord, Symbol, Trace,
};
pub use error::{Error, Result};
pub use signals::{sample, GrowthBound, SampledSignal, Segment, SignalSpec, VariationBound};
