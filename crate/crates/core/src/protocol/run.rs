//! Reliable-channel driver: folds `advance` over FIFO delivery.

use std::collections::VecDeque;

use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};

use super::principal::{Principal, PrincipalId, Role};
use super::session::{SessionConfig, SessionKey, SessionState, Verdict};
use super::transcript::Transcript;
use super::{Protocol, ProtocolMessage};
use crate::crypto::{CertificateAuthority, DhGroup, PkKeyPair, TrustAnchor, PRINCIPAL_MODULUS_BITS};
use crate::LabRng;

/// Safety bound on delivered messages per run.
const MAX_DELIVERIES: usize = 64;

#[derive(Clone, Debug)]
pub struct HandshakeResult {
    pub transcript: Transcript,
    /// Final session states, initiator first.
    pub sessions: Vec<SessionState>,
}

impl HandshakeResult {
    pub fn session(&self, role: Role) -> &SessionState {
        self.sessions
            .iter()
            .find(|s| s.principal.role == role)
            .expect("role takes part in this protocol")
    }

    pub fn verdict(&self, role: Role) -> Verdict {
        self.session(role).verdict
    }

    pub fn key(&self, role: Role) -> Option<&SessionKey> {
        self.session(role).derived_key.as_ref()
    }

    pub fn all_accepted(&self) -> bool {
        self.sessions.iter().all(|s| s.verdict.is_accepted())
    }

    /// True iff every session that derives a key holds the same one and at
    /// least two sessions hold it.
    pub fn keys_agree(&self) -> bool {
        let keys: Vec<&SessionKey> = self.sessions.iter().filter_map(|s| s.derived_key.as_ref()).collect();
        keys.len() >= 2 && keys.windows(2).all(|w| w[0] == w[1])
    }
}

/// Starts `sessions[0]` and delivers every emitted message in FIFO order
/// until the network is quiet.
pub fn drive<R: RngCore + ?Sized>(sessions: Vec<SessionState>, rng: &mut R) -> HandshakeResult {
    drive_with(sessions, rng, |_, m| m)
}

/// [`drive`] with a channel hook: `tamper(step, message)` returns what is
/// actually delivered.
pub fn drive_with<R, F>(mut sessions: Vec<SessionState>, rng: &mut R, mut tamper: F) -> HandshakeResult
where
    R: RngCore + ?Sized,
    F: FnMut(usize, ProtocolMessage) -> ProtocolMessage,
{
    let mut transcript = Transcript::new();
    let mut queue = VecDeque::new();
    let (out, first) = sessions[0].advance(None, rng);
    let sender = first.principal.name.clone();
    sessions[0] = first;
    queue.extend(out.into_iter().map(|o| (sender.clone(), o)));

    while let Some((from, o)) = queue.pop_front() {
        if transcript.len() >= MAX_DELIVERIES {
            break;
        }
        let message = tamper(transcript.len(), o.message);
        transcript.push(&from, &o.to.name, message.clone());
        let Some(idx) = sessions.iter().position(|s| s.principal.name == o.to.name) else {
            continue;
        };
        let (out, next) = sessions[idx].advance(Some(&message), rng);
        let sender = next.principal.name.clone();
        sessions[idx] = next;
        queue.extend(out.into_iter().map(|o| (sender.clone(), o)));
    }
    HandshakeResult { transcript, sessions }
}

fn two_party(
    protocol: Protocol,
    initiator: &Principal,
    responder: &Principal,
    anchor: &TrustAnchor,
    group: &DhGroup,
    exponents: (Option<BigUint>, Option<BigUint>),
) -> Vec<SessionState> {
    let cfg_i = SessionConfig::new(initiator.clone(), anchor.clone(), vec![responder.id.clone()])
        .with_group(group.clone())
        .with_dh_exponent(exponents.0);
    let cfg_r = SessionConfig::new(responder.clone(), anchor.clone(), vec![initiator.id.clone()])
        .with_group(group.clone())
        .with_dh_exponent(exponents.1);
    vec![SessionState::new(protocol, cfg_i), SessionState::new(protocol, cfg_r)]
}

pub fn pkmv1_run<R: RngCore + ?Sized>(ss: &Principal, bs: &Principal, anchor: &TrustAnchor, rng: &mut R) -> HandshakeResult {
    drive(two_party(Protocol::Pkmv1, ss, bs, anchor, &DhGroup::toy(), (None, None)), rng)
}

pub fn pkmv2_run<R: RngCore + ?Sized>(ss: &Principal, bs: &Principal, anchor: &TrustAnchor, rng: &mut R) -> HandshakeResult {
    drive(two_party(Protocol::Pkmv2, ss, bs, anchor, &DhGroup::toy(), (None, None)), rng)
}

pub fn eap_tls_sessions(
    supplicant: &Principal,
    authenticator: &Principal,
    server: &Principal,
    anchor: &TrustAnchor,
) -> Vec<SessionState> {
    let everyone = vec![supplicant.id.clone(), authenticator.id.clone(), server.id.clone()];
    let cfg = |p: &Principal| SessionConfig::new(p.clone(), anchor.clone(), everyone.clone());
    vec![
        SessionState::new(Protocol::EapTls, cfg(authenticator)),
        SessionState::new(Protocol::EapTls, cfg(supplicant)),
        SessionState::new(Protocol::EapTls, cfg(server)),
    ]
}

pub fn eap_tls_run<R: RngCore + ?Sized>(
    supplicant: &Principal,
    authenticator: &Principal,
    server: &Principal,
    anchor: &TrustAnchor,
    rng: &mut R,
) -> HandshakeResult {
    drive(eap_tls_sessions(supplicant, authenticator, server, anchor), rng)
}

pub fn dh_proposed_run<R: RngCore + ?Sized>(
    ms: &Principal,
    bs: &Principal,
    anchor: &TrustAnchor,
    group: &DhGroup,
    rng: &mut R,
) -> HandshakeResult {
    dh_proposed_run_with(ms, bs, anchor, group, (None, None), rng)
}

/// Like [`dh_proposed_run`] with optionally pinned `(X_MS, X_BS)`.
pub fn dh_proposed_run_with<R: RngCore + ?Sized>(
    ms: &Principal,
    bs: &Principal,
    anchor: &TrustAnchor,
    group: &DhGroup,
    exponents: (Option<BigUint>, Option<BigUint>),
    rng: &mut R,
) -> HandshakeResult {
    drive(two_party(Protocol::DhProposed, ms, bs, anchor, group, exponents), rng)
}

pub fn dh_bare_run<R: RngCore + ?Sized>(
    ms: &Principal,
    bs: &Principal,
    anchor: &TrustAnchor,
    group: &DhGroup,
    rng: &mut R,
) -> HandshakeResult {
    drive(two_party(Protocol::DhBare, ms, bs, anchor, group, (None, None)), rng)
}

/// A ready-made population: a trusted CA, a rogue CA, and one principal per
/// role, all derived from a single seed.
#[derive(Clone, Debug)]
pub struct Lab {
    pub ca: CertificateAuthority,
    pub rogue_ca: CertificateAuthority,
    pub ss: Principal,
    pub bs: Principal,
    pub authenticator: Principal,
    pub server: Principal,
    /// Holds a certificate from the rogue CA only.
    pub attacker: Principal,
    pub group: DhGroup,
}

impl Lab {
    pub fn new(seed: u64) -> Self {
        let mut rng = LabRng::seed_from_u64(seed);
        let ca = CertificateAuthority::new("wimax-ca", PkKeyPair::generate(PRINCIPAL_MODULUS_BITS, &mut rng));
        let rogue_ca = CertificateAuthority::new("rogue-ca", PkKeyPair::generate(PRINCIPAL_MODULUS_BITS, &mut rng));
        let mut enroll = |role, name: &str, mac: u8, ca: &CertificateAuthority| {
            Principal::enroll(PrincipalId::new(role, name, [0x00, 0x1a, 0x2b, 0x3c, 0x4d, mac]), ca, &mut rng)
        };
        let ss = enroll(Role::Ss, "ss-1", 0x01, &ca);
        let bs = enroll(Role::Bs, "bs-1", 0x02, &ca);
        let authenticator = enroll(Role::Authenticator, "ap-1", 0x03, &ca);
        let server = enroll(Role::Server, "aaa-1", 0x04, &ca);
        let attacker = enroll(Role::Attacker, "mallory", 0x66, &rogue_ca);
        Self {
            ca,
            rogue_ca,
            ss,
            bs,
            authenticator,
            server,
            attacker,
            group: DhGroup::toy(),
        }
    }

    pub fn anchor(&self) -> TrustAnchor {
        self.ca.anchor()
    }

    /// Fresh sessions for `protocol`, initiator first.
    pub fn sessions(&self, protocol: Protocol) -> Vec<SessionState> {
        let anchor = self.anchor();
        match protocol {
            Protocol::EapTls => eap_tls_sessions(&self.ss, &self.authenticator, &self.server, &anchor),
            p => two_party(p, &self.ss, &self.bs, &anchor, &self.group, (None, None)),
        }
    }

    pub fn run<R: RngCore + ?Sized>(&self, protocol: Protocol, rng: &mut R) -> HandshakeResult {
        drive(self.sessions(protocol), rng)
    }
}
