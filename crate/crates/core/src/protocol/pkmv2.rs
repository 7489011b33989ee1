//! PKMv2 RSA-based mutual authentication with SS and BS nonces.

use num_bigint::RandBigInt;
use rand::RngCore;

use super::message::{pkmv2_ack_checksum, pkmv2_reply_payload, pkmv2_request_payload, ProtocolMessage as M};
use super::principal::Role;
use super::session::{Check, Inadmissible, KeyKind, Phase, RejectReason, SessionKey, SessionState, StepResult};
use crate::crypto::Nonce;

pub const PREPAK_BITS: u64 = 256;

pub(crate) fn step<R: RngCore + ?Sized>(s: &mut SessionState, incoming: Option<&M>, rng: &mut R) -> StepResult {
    match (s.principal.role, s.phase, incoming) {
        (Role::Ss, Phase::Initial, None) => {
            let cfg = s.config().clone();
            let n_s = Nonce::random(rng);
            s.pending.nonce = Some(n_s);
            s.phase = Phase::AwaitAuthReply;
            let digest = pkmv2_request_payload(&cfg.me.cert, n_s, &cfg.capabilities, cfg.said);
            Ok(vec![
                s.send(
                    Role::Bs,
                    M::Pkmv2AuthInfo {
                        manufacturer_cert: cfg.me.manufacturer_cert.clone(),
                    },
                ),
                s.send(
                    Role::Bs,
                    M::Pkmv2AuthRequest {
                        ss_cert: cfg.me.cert.clone(),
                        n_s,
                        capabilities: cfg.capabilities.clone(),
                        said: cfg.said,
                        ss_signature: cfg.me.keys.sign_digest(&digest),
                    },
                ),
            ])
        }
        (
            Role::Ss,
            Phase::AwaitAuthReply,
            Some(M::Pkmv2AuthReply {
                n_s,
                n_b,
                enc_prepak,
                prepak_lifetime,
                prepak_seq,
                said_list,
                bs_cert,
                bs_signature,
            }),
        ) => {
            let sent = s.pending.nonce.expect("nonce drawn at start");
            if !s.log(Check::Nonce { ok: *n_s == sent }) {
                s.reject(RejectReason::Liveness);
                return Ok(vec![]);
            }
            if let Err(e) = s.check_cert(bs_cert) {
                s.reject(RejectReason::Cert(e));
                return Ok(vec![]);
            }
            let digest = pkmv2_reply_payload(*n_s, *n_b, enc_prepak, *prepak_lifetime, *prepak_seq, said_list, bs_cert);
            let ok = bs_cert.subject_public_key.verify_digest(&digest, bs_signature);
            if !s.log(Check::Signature { ok }) {
                s.reject(RejectReason::Signature);
                return Ok(vec![]);
            }
            let cfg = s.config().clone();
            let prepak = match cfg.me.keys.decrypt(enc_prepak) {
                Ok(p) if p.bits() <= PREPAK_BITS && *prepak_seq < 16 => p,
                _ => {
                    s.reject(RejectReason::Decode);
                    return Ok(vec![]);
                }
            };
            let ss_mac = cfg.me.id.mac_address;
            let checksum = pkmv2_ack_checksum(&prepak, *n_b, ss_mac);
            s.accept(Some(SessionKey {
                kind: KeyKind::PrePak,
                value: prepak,
            }));
            Ok(vec![s.send(
                Role::Bs,
                M::Pkmv2AuthAck {
                    n_b: *n_b,
                    ss_mac,
                    checksum,
                },
            )])
        }
        (Role::Bs, Phase::AwaitAuthInfo, Some(M::Pkmv2AuthInfo { manufacturer_cert })) => {
            if let Err(e) = s.check_cert(manufacturer_cert) {
                s.pending.advisory = Some(e);
            }
            s.phase = Phase::AwaitAuthRequest;
            Ok(vec![])
        }
        (
            Role::Bs,
            Phase::AwaitAuthRequest,
            Some(M::Pkmv2AuthRequest {
                ss_cert,
                n_s,
                capabilities,
                said,
                ss_signature,
            }),
        ) => {
            if let Err(e) = s.check_cert(ss_cert) {
                s.reject(RejectReason::Cert(e));
                return Ok(vec![]);
            }
            let digest = pkmv2_request_payload(ss_cert, *n_s, capabilities, *said);
            let ok = ss_cert.subject_public_key.verify_digest(&digest, ss_signature);
            if !s.log(Check::Signature { ok }) {
                s.reject(RejectReason::Signature);
                return Ok(vec![]);
            }
            let cfg = s.config().clone();
            let n_b = Nonce::random(rng);
            let prepak = rng.gen_biguint(PREPAK_BITS);
            let Ok(enc_prepak) = ss_cert.subject_public_key.encrypt(&prepak) else {
                s.reject(RejectReason::Decode);
                return Ok(vec![]);
            };
            let said_list: Vec<u16> = cfg.sa_descriptors.iter().map(|d| d.said).collect();
            let seq = cfg.key_seq & 0x0f;
            let reply_digest =
                pkmv2_reply_payload(*n_s, n_b, &enc_prepak, cfg.key_lifetime, seq, &said_list, &cfg.me.cert);
            s.pending.nonce = Some(n_b);
            s.pending.secret = Some(prepak);
            s.pending.peer_cert = Some(ss_cert.clone());
            s.phase = Phase::AwaitAuthAck;
            Ok(vec![s.send(
                Role::Ss,
                M::Pkmv2AuthReply {
                    n_s: *n_s,
                    n_b,
                    enc_prepak,
                    prepak_lifetime: cfg.key_lifetime,
                    prepak_seq: seq,
                    said_list,
                    bs_cert: cfg.me.cert.clone(),
                    bs_signature: cfg.me.keys.sign_digest(&reply_digest),
                },
            )])
        }
        (Role::Bs, Phase::AwaitAuthAck, Some(M::Pkmv2AuthAck { n_b, ss_mac, checksum })) => {
            let sent = s.pending.nonce.expect("nonce drawn on request");
            if !s.log(Check::Nonce { ok: *n_b == sent }) {
                s.reject(RejectReason::Liveness);
                return Ok(vec![]);
            }
            let prepak = s.pending.secret.clone().expect("pre-PAK drawn on request");
            let ok = pkmv2_ack_checksum(&prepak, *n_b, *ss_mac) == *checksum;
            if !s.log(Check::Tag { ok }) {
                s.reject(RejectReason::Integrity);
                return Ok(vec![]);
            }
            s.accept(Some(SessionKey {
                kind: KeyKind::PrePak,
                value: prepak,
            }));
            Ok(vec![])
        }
        (_, _, None) => Ok(vec![]),
        _ => Err(Inadmissible),
    }
}
