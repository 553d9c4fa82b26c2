//! Benign traffic generators reproducing the three C2 families'
//! communication patterns. Scripted mode emits deterministic event lists
//! for the simulator; live mode runs the same state machines over real
//! HTTP on loopback.

pub mod http;

mod emotet;
mod zeus;
mod zitmo;

pub use emotet::{
    emotet_client_live, emotet_traffic, EmotetCnc, EmotetTrafficConfig, PayloadProfile,
};
pub use zeus::{
    zeus_bot_run, zeus_bot_run_resumed, zeus_client_live, ZeusBotConfig, ZeusCnc,
    ZEUS_BOT_USER_AGENT,
};
pub use zitmo::{
    zitmo_client_live, zitmo_client_run, ZitMoClient, ZitMoClientConfig, ZitMoCnc,
    ZitMoLocalEvent, ZitMoRun,
};

use thiserror::Error;

/// First ephemeral source port; connections count up from here, which is
/// what makes the "constantly changing ports" condition reproducible.
pub const EPHEMERAL_PORT_BASE: u16 = 49152;

#[derive(Debug, Error)]
pub enum EmulatorError {
    #[error("bad emulator config: {0}")]
    BadConfig(String),
    #[error("unsupported or malformed URL `{0}`")]
    BadUrl(String),
    #[error("refusing to bind non-loopback address {0} without explicit opt-in")]
    NonLoopbackBind(String),
    #[error(transparent)]
    Codec(#[from] crate::codecs::CodecError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
