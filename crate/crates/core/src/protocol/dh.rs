//! The nonce-bound Diffie-Hellman handshake and the anonymous baseline.
//!
//! Roles: the MS initiates with its certificate, the BS answers with its
//! certificate, its DH public value, the nonce encrypted to the MS and
//! `H(Y_BS || f(nonce))`. The MS answers with `Y_MS` and `H(Y_MS || nonce)`
//! and confirms with `H(nonce)`. Both ends then compute `AK = Y_peer^x mod q`.

use num_bigint::BigUint;
use rand::RngCore;

use super::message::ProtocolMessage as M;
use super::principal::Role;
use super::session::{Check, Inadmissible, KeyKind, Phase, RejectReason, SessionKey, SessionState, StepResult};
use crate::crypto::{bind_tag, confirm_tag, derive_ak, f_transform, Nonce};

fn dh_key(value: BigUint) -> Option<SessionKey> {
    Some(SessionKey {
        kind: KeyKind::DhAk,
        value,
    })
}

pub(crate) fn step_proposed<R: RngCore + ?Sized>(s: &mut SessionState, incoming: Option<&M>, rng: &mut R) -> StepResult {
    match (s.principal.role, s.phase, incoming) {
        (Role::Ss, Phase::Initial, None) => {
            s.phase = Phase::AwaitM2;
            let ms_cert = s.config().me.cert.clone();
            Ok(vec![s.send(Role::Bs, M::DhM1 { ms_cert })])
        }
        (
            Role::Ss,
            Phase::AwaitM2,
            Some(M::DhM2 {
                bs_cert,
                y_bs,
                enc_nonce,
                tag_b,
            }),
        ) => {
            if let Err(e) = s.check_cert(bs_cert) {
                s.reject(RejectReason::Cert(e));
                return Ok(vec![]);
            }
            let cfg = s.config().clone();
            let nonce = match cfg.me.keys.decrypt(enc_nonce).ok().and_then(|n| u64::try_from(n).ok()) {
                Some(n) => Nonce(n),
                None => {
                    s.reject(RejectReason::Decode);
                    return Ok(vec![]);
                }
            };
            let ok = bind_tag(y_bs, f_transform(nonce)) == *tag_b;
            if !s.log(Check::Tag { ok }) {
                s.reject(RejectReason::Binding);
                return Ok(vec![]);
            }
            let own = cfg.dh_keypair(rng);
            let Ok(ak) = derive_ak(&own, y_bs, &cfg.group) else {
                s.reject(RejectReason::Binding);
                return Ok(vec![]);
            };
            let y_ms = own.public().clone();
            s.pending.nonce = Some(nonce);
            s.pending.dh = Some(own);
            s.pending.peer_public = Some(y_bs.clone());
            s.accept(dh_key(ak.0));
            Ok(vec![
                s.send(
                    Role::Bs,
                    M::DhM3 {
                        tag_m: bind_tag(&y_ms, nonce),
                        y_ms,
                    },
                ),
                s.send(
                    Role::Bs,
                    M::DhM4 {
                        confirm: confirm_tag(nonce),
                    },
                ),
            ])
        }
        (Role::Bs, Phase::AwaitM1, Some(M::DhM1 { ms_cert })) => {
            if let Err(e) = s.check_cert(ms_cert) {
                s.reject(RejectReason::Cert(e));
                return Ok(vec![]);
            }
            let cfg = s.config().clone();
            let nonce = Nonce::random(rng);
            let own = cfg.dh_keypair(rng);
            let Ok(enc_nonce) = ms_cert.subject_public_key.encrypt(&BigUint::from(nonce.0)) else {
                s.reject(RejectReason::Decode);
                return Ok(vec![]);
            };
            let y_bs = own.public().clone();
            let tag_b = bind_tag(&y_bs, f_transform(nonce));
            s.pending.nonce = Some(nonce);
            s.pending.dh = Some(own);
            s.pending.peer_cert = Some(ms_cert.clone());
            s.phase = Phase::AwaitM3;
            Ok(vec![s.send(
                Role::Ss,
                M::DhM2 {
                    bs_cert: cfg.me.cert.clone(),
                    y_bs,
                    enc_nonce,
                    tag_b,
                },
            )])
        }
        (Role::Bs, Phase::AwaitM3, Some(M::DhM3 { y_ms, tag_m })) => {
            let nonce = s.pending.nonce.expect("drawn on M1");
            let ok = bind_tag(y_ms, nonce) == *tag_m;
            if !s.log(Check::Tag { ok }) {
                s.reject(RejectReason::Binding);
                return Ok(vec![]);
            }
            let own = s.pending.dh.clone().expect("drawn on M1");
            s.pending.peer_public = Some(y_ms.clone());
            match derive_ak(&own, y_ms, &s.config().group) {
                Ok(ak) => {
                    s.pending.secret = Some(ak.0);
                    s.phase = Phase::AwaitM4;
                }
                Err(_) => s.reject(RejectReason::Binding),
            }
            Ok(vec![])
        }
        (Role::Bs, Phase::AwaitM4, Some(M::DhM4 { confirm })) => {
            let nonce = s.pending.nonce.expect("drawn on M1");
            if !s.log(Check::Tag {
                ok: confirm_tag(nonce) == *confirm,
            }) {
                s.reject(RejectReason::Confirm);
                return Ok(vec![]);
            }
            let ak = s.pending.secret.clone().expect("computed on M3");
            s.accept(dh_key(ak));
            Ok(vec![])
        }
        (_, _, None) => Ok(vec![]),
        _ => Err(Inadmissible),
    }
}

/// Unauthenticated Diffie-Hellman: each side sends its public value and
/// accepts whatever comes back.
pub(crate) fn step_bare<R: RngCore + ?Sized>(s: &mut SessionState, incoming: Option<&M>, rng: &mut R) -> StepResult {
    match (s.principal.role, s.phase, incoming) {
        (Role::Ss, Phase::Initial, None) => {
            let own = s.config().dh_keypair(rng);
            let y_ms = own.public().clone();
            s.pending.dh = Some(own);
            s.phase = Phase::AwaitBareResp;
            Ok(vec![s.send(Role::Bs, M::DhBareInit { y_ms })])
        }
        (Role::Ss, Phase::AwaitBareResp, Some(M::DhBareResp { y_bs })) => {
            let own = s.pending.dh.clone().expect("drawn at start");
            s.pending.peer_public = Some(y_bs.clone());
            match derive_ak(&own, y_bs, &s.config().group) {
                Ok(ak) => s.accept(dh_key(ak.0)),
                Err(_) => s.reject(RejectReason::Decode),
            }
            Ok(vec![])
        }
        (Role::Bs, Phase::AwaitBareInit, Some(M::DhBareInit { y_ms })) => {
            let cfg = s.config().clone();
            let own = cfg.dh_keypair(rng);
            let Ok(ak) = derive_ak(&own, y_ms, &cfg.group) else {
                s.reject(RejectReason::Decode);
                return Ok(vec![]);
            };
            let y_bs = own.public().clone();
            s.pending.dh = Some(own);
            s.pending.peer_public = Some(y_ms.clone());
            s.accept(dh_key(ak.0));
            Ok(vec![s.send(Role::Ss, M::DhBareResp { y_bs })])
        }
        (_, _, None) => Ok(vec![]),
        _ => Err(Inadmissible),
    }
}
