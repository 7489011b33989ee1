//! Per-principal handshake state machines and the single-step driver.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::message::ProtocolMessage;
use super::principal::{Principal, PrincipalId, Role, SaDescriptor, SecurityCapabilities};
use super::{dh, eap, pkmv1, pkmv2, Protocol};
use crate::crypto::{CertError, Certificate, DhGroup, DhKeyPair, Nonce, TrustAnchor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Initial,
    AwaitAuthInfo,
    AwaitAuthRequest,
    AwaitAuthReply,
    AwaitAuthAck,
    AwaitIdentityRequest,
    AwaitIdentityResponse,
    AwaitAccessRequest,
    AwaitServerCert,
    AwaitClientCert,
    AwaitAccessResult,
    AwaitM1,
    AwaitM2,
    AwaitM3,
    AwaitM4,
    AwaitBareInit,
    AwaitBareResp,
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    Cert(CertError),
    Liveness,
    Signature,
    Integrity,
    Binding,
    Confirm,
    Decode,
    Identity,
    AccessDenied,
    OutOfOrder,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Cert(CertError::UntrustedIssuer) => f.write_str("untrusted-issuer"),
            RejectReason::Cert(CertError::BadSignature) => f.write_str("cert"),
            RejectReason::Liveness => f.write_str("liveness"),
            RejectReason::Signature => f.write_str("signature"),
            RejectReason::Integrity => f.write_str("integrity"),
            RejectReason::Binding => f.write_str("binding"),
            RejectReason::Confirm => f.write_str("confirm"),
            RejectReason::Decode => f.write_str("decode"),
            RejectReason::Identity => f.write_str("identity"),
            RejectReason::AccessDenied => f.write_str("access-denied"),
            RejectReason::OutOfOrder => f.write_str("out-of-order"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    InProgress,
    Accepted,
    Rejected(RejectReason),
}

impl Verdict {
    pub fn is_accepted(self) -> bool {
        self == Verdict::Accepted
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::InProgress => f.write_str("in-progress"),
            Verdict::Accepted => f.write_str("accepted"),
            Verdict::Rejected(r) => write!(f, "rejected({r})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyKind {
    /// PKMv1 authorization key chosen by the BS.
    Ak,
    PrePak,
    /// EAP-TLS master session key.
    Msk,
    /// Diffie-Hellman authorization key.
    DhAk,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SessionKey {
    pub kind: KeyKind,
    pub value: BigUint,
}

/// A credential check performed by a session, kept as an audit trail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Check {
    Certificate { subject: String, ok: bool },
    Signature { ok: bool },
    Nonce { ok: bool },
    Tag { ok: bool },
}

/// A message addressed to a peer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outgoing {
    pub to: PrincipalId,
    pub message: ProtocolMessage,
}

/// Static configuration shared by all states of one session.
#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub me: Principal,
    pub anchor: TrustAnchor,
    pub peers: Vec<PrincipalId>,
    pub group: DhGroup,
    /// Pins the DH private exponent instead of drawing it.
    pub dh_exponent: Option<BigUint>,
    pub capabilities: SecurityCapabilities,
    pub said: u16,
    pub sa_descriptors: Vec<SaDescriptor>,
    pub key_lifetime: u32,
    pub key_seq: u8,
}

impl SessionConfig {
    pub fn new(me: Principal, anchor: TrustAnchor, peers: Vec<PrincipalId>) -> Self {
        Self {
            me,
            anchor,
            peers,
            group: DhGroup::toy(),
            dh_exponent: None,
            capabilities: SecurityCapabilities::default(),
            said: 0x2a01,
            sa_descriptors: vec![
                SaDescriptor {
                    said: 0x2a01,
                    cipher_suite: "aes-ccm".into(),
                },
                SaDescriptor {
                    said: 0x2a02,
                    cipher_suite: "des-cbc".into(),
                },
            ],
            key_lifetime: 604_800,
            key_seq: 1,
        }
    }

    pub fn with_group(mut self, group: DhGroup) -> Self {
        self.group = group;
        self
    }

    pub fn with_dh_exponent(mut self, x: Option<BigUint>) -> Self {
        self.dh_exponent = x;
        self
    }

    pub(crate) fn peer(&self, role: Role) -> PrincipalId {
        self.peers
            .iter()
            .find(|p| p.role == role)
            .cloned()
            .unwrap_or_else(|| PrincipalId::new(role, role.to_string(), [0; 6]))
    }

    pub(crate) fn dh_keypair<R: RngCore + ?Sized>(&self, rng: &mut R) -> DhKeyPair {
        match &self.dh_exponent {
            Some(x) => DhKeyPair::from_private(&self.group, x.clone()).expect("pinned exponent in range"),
            None => DhKeyPair::generate(&self.group, rng),
        }
    }
}

/// Ephemeral values a session remembers between steps.
#[derive(Clone, Debug, Default)]
pub struct Pending {
    pub nonce: Option<Nonce>,
    pub peer_nonce: Option<Nonce>,
    pub dh: Option<DhKeyPair>,
    pub peer_public: Option<BigUint>,
    pub secret: Option<BigUint>,
    pub peer_cert: Option<Certificate>,
    pub identity: Option<String>,
    pub advisory: Option<CertError>,
}

#[derive(Clone, Debug)]
pub struct SessionState {
    pub principal: PrincipalId,
    pub protocol: Protocol,
    pub phase: Phase,
    pub pending: Pending,
    pub derived_key: Option<SessionKey>,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    config: Arc<SessionConfig>,
}

/// The incoming message is not admissible in the current phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Inadmissible;

pub(crate) type StepResult = Result<Vec<Outgoing>, Inadmissible>;

impl SessionState {
    pub fn new(protocol: Protocol, config: SessionConfig) -> Self {
        let role = config.me.id.role;
        let phase = initial_phase(protocol, role);
        Self {
            principal: config.me.id.clone(),
            protocol,
            phase,
            pending: Pending::default(),
            derived_key: None,
            verdict: Verdict::InProgress,
            checks: Vec::new(),
            config: Arc::new(config),
        }
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn is_terminal(&self) -> bool {
        self.verdict != Verdict::InProgress
    }

    /// Feeds one message (or `None` to let an initiator start) and returns
    /// the messages to send plus the successor state. `self` is never
    /// modified; an inadmissible message yields a rejected successor.
    pub fn advance<R: RngCore + ?Sized>(
        &self,
        incoming: Option<&ProtocolMessage>,
        rng: &mut R,
    ) -> (Vec<Outgoing>, SessionState) {
        if self.is_terminal() {
            return match incoming {
                Some(_) => (Vec::new(), self.out_of_order()),
                None => (Vec::new(), self.clone()),
            };
        }
        let mut next = self.clone();
        let result = match self.protocol {
            Protocol::Pkmv1 => pkmv1::step(&mut next, incoming, rng),
            Protocol::Pkmv2 => pkmv2::step(&mut next, incoming, rng),
            Protocol::EapTls => eap::step(&mut next, incoming, rng),
            Protocol::DhProposed => dh::step_proposed(&mut next, incoming, rng),
            Protocol::DhBare => dh::step_bare(&mut next, incoming, rng),
        };
        match result {
            Ok(out) => {
                debug_assert!(next.phase >= self.phase || next.phase == Phase::Done);
                (out, next)
            }
            Err(Inadmissible) => (Vec::new(), self.out_of_order()),
        }
    }

    fn out_of_order(&self) -> SessionState {
        let mut s = self.clone();
        s.phase = Phase::Done;
        s.verdict = Verdict::Rejected(RejectReason::OutOfOrder);
        s.derived_key = None;
        s
    }

    pub(crate) fn reject(&mut self, reason: RejectReason) {
        self.phase = Phase::Done;
        self.verdict = Verdict::Rejected(reason);
        self.derived_key = None;
    }

    pub(crate) fn accept(&mut self, key: Option<SessionKey>) {
        self.phase = Phase::Done;
        self.verdict = Verdict::Accepted;
        self.derived_key = key;
    }

    pub(crate) fn send(&self, role: Role, message: ProtocolMessage) -> Outgoing {
        Outgoing {
            to: self.config.peer(role),
            message,
        }
    }

    /// Verifies a certificate against the session's trust anchor and logs it.
    pub(crate) fn check_cert(&mut self, cert: &Certificate) -> Result<(), CertError> {
        let result = crate::crypto::verify_cert(&self.config.anchor, cert);
        self.checks.push(Check::Certificate {
            subject: cert.subject_id.clone(),
            ok: result.is_ok(),
        });
        result
    }

    pub(crate) fn log(&mut self, check: Check) -> bool {
        let ok = match &check {
            Check::Certificate { ok, .. } | Check::Signature { ok } | Check::Nonce { ok } | Check::Tag { ok } => *ok,
        };
        self.checks.push(check);
        ok
    }

    /// Number of certificate verifications this session has performed.
    pub fn certificate_checks(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| matches!(c, Check::Certificate { .. }))
            .count()
    }
}

fn initial_phase(protocol: Protocol, role: Role) -> Phase {
    match (protocol, role) {
        (Protocol::Pkmv1 | Protocol::Pkmv2, Role::Bs) => Phase::AwaitAuthInfo,
        (Protocol::EapTls, Role::Ss) => Phase::AwaitIdentityRequest,
        (Protocol::EapTls, Role::Server) => Phase::AwaitAccessRequest,
        (Protocol::DhProposed, Role::Bs) => Phase::AwaitM1,
        (Protocol::DhBare, Role::Bs) => Phase::AwaitBareInit,
        _ => Phase::Initial,
    }
}
