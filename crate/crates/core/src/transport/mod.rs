//! Moving slices between sites: binary framing, a simulated channel, and a
//! TCP conduit.

mod channel;
pub mod socket;
pub mod wire;

use thiserror::Error;

use crate::model::SliceViolation;

pub use channel::{ChannelConfig, ChannelMode, SimChannel};
pub use wire::{decode_slice, encode_slice, read_slice};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("unsupported protocol version {0}")]
    VersionMismatch(u8),
    #[error("decoded slice is invalid: {}", join(.0))]
    SequenceGap(Vec<SliceViolation>),
    #[error("channel closed")]
    ChannelClosed,
    #[error("{0} too large for its wire field")]
    TooLarge(&'static str),
    #[error("i/o: {0}")]
    Io(String),
}

fn join(v: &[SliceViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<std::io::Error> for TransportError {
    fn from(e: std::io::Error) -> Self {
        TransportError::Io(e.to_string())
    }
}
