//! Byte-exact encoders/decoders for the three emulated C2 wire formats.
//!
//! Everything in here is pure: no clock, no hidden randomness. Keys and
//! session material are always caller-supplied, so two calls with the same
//! inputs produce the same bytes.

mod emotet;
mod rc4;
mod zeus;
mod zitmo;

pub use emotet::{
    emotet_open, emotet_seal, EmotetKeyPair, EmotetPrivateKey, EmotetPublicKey,
};
pub use rc4::rc4;
pub use zeus::{zeus_open, zeus_seal, zeus_visual_decode, zeus_visual_encode};
pub use zitmo::{
    zitmo_decrypt, zitmo_encrypt, zitmo_format, zitmo_parse, ZitMoMessage, ZitMoService,
    ZITMO_DEFAULT_KEY, ZITMO_TERMINATOR,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("empty key")]
    EmptyKey,
    #[error("key must be {expected} bytes, got {got}")]
    BadKeyLength { expected: usize, got: usize },
    #[error("invalid base64 input: {0}")]
    Base64(#[from] base64::DecodeError),
    #[error("ciphertext length {0} is not a multiple of 16")]
    BadCiphertextLength(usize),
    #[error("message is missing the signature terminator")]
    MissingTerminator,
    #[error("unknown service `{0}`")]
    UnknownService(String),
    #[error("unknown message key `{0}`")]
    UnknownKey(String),
    #[error("malformed field `{field}`: {reason}")]
    MalformedField { field: &'static str, reason: String },
    #[error("payload must not be empty")]
    EmptyPayload,
    #[error("envelope too short")]
    TruncatedEnvelope,
    #[error("session key unwrap failed")]
    KeyUnwrap,
    #[error("bad block padding")]
    BadPadding,
    #[error("rsa: {0}")]
    Rsa(String),
}

/// Standard CRC-32 (IEEE polynomial) rendered as zero-padded uppercase hex.
pub fn crc32_hex(data: &[u8]) -> String {
    format!("{:08X}", crc32fast::hash(data))
}
