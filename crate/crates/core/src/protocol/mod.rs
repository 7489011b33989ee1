//! Executable models of the four 802.16e authentication handshakes plus an
//! anonymous Diffie-Hellman baseline.

mod dh;
mod eap;
pub mod message;
mod pkmv1;
mod pkmv2;
pub mod principal;
pub mod run;
pub mod session;
pub mod transcript;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use message::ProtocolMessage;
pub use pkmv1::AK_BITS;
pub use pkmv2::PREPAK_BITS;
pub use principal::{MacAddress, Principal, PrincipalId, Role, SaDescriptor, SecurityCapabilities};
pub use run::{
    dh_bare_run, dh_proposed_run, dh_proposed_run_with, drive, drive_with, eap_tls_run, pkmv1_run, pkmv2_run, HandshakeResult, Lab,
};
pub use session::{Check, KeyKind, Outgoing, Phase, RejectReason, SessionConfig, SessionKey, SessionState, Verdict};
pub use transcript::{Transcript, TranscriptEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "pkmv1")]
    Pkmv1,
    #[serde(rename = "pkmv2")]
    Pkmv2,
    #[serde(rename = "eap")]
    EapTls,
    #[serde(rename = "dh-proposed")]
    DhProposed,
    #[serde(rename = "dh-bare")]
    DhBare,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Pkmv1,
        Protocol::Pkmv2,
        Protocol::EapTls,
        Protocol::DhProposed,
        Protocol::DhBare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Pkmv1 => "pkmv1",
            Protocol::Pkmv2 => "pkmv2",
            Protocol::EapTls => "eap",
            Protocol::DhProposed => "dh-proposed",
            Protocol::DhBare => "dh-bare",
        }
    }

    /// Messages in an honest run.
    pub fn honest_message_count(self) -> usize {
        match self {
            Protocol::Pkmv1 => 3,
            Protocol::Pkmv2 | Protocol::DhProposed => 4,
            Protocol::EapTls => 6,
            Protocol::DhBare => 2,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown protocol `{0}` (expected pkmv1, pkmv2, eap, dh-proposed or dh-bare)")]
pub struct UnknownProtocol(pub String);

impl FromStr for Protocol {
    type Err = UnknownProtocol;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s || (s == "eap-tls" && *p == Protocol::EapTls))
            .ok_or_else(|| UnknownProtocol(s.to_owned()))
    }
}
