//! PKMv1: certificate push, authorization request, encrypted AK reply.
//! Only the SS is authenticated.

use num_bigint::{BigUint, RandBigInt};
use rand::RngCore;

use super::message::ProtocolMessage as M;
use super::principal::Role;
use super::session::{Inadmissible, KeyKind, Phase, RejectReason, SessionKey, SessionState, StepResult};

pub const AK_BITS: u64 = 160;

pub(crate) fn step<R: RngCore + ?Sized>(s: &mut SessionState, incoming: Option<&M>, rng: &mut R) -> StepResult {
    match (s.principal.role, s.phase, incoming) {
        (Role::Ss, Phase::Initial, None) => {
            let cfg = s.config().clone();
            s.phase = Phase::AwaitAuthReply;
            Ok(vec![
                s.send(
                    Role::Bs,
                    M::Pkmv1AuthInfo {
                        manufacturer_cert: cfg.me.manufacturer_cert.clone(),
                    },
                ),
                s.send(
                    Role::Bs,
                    M::Pkmv1AuthRequest {
                        ss_cert: cfg.me.cert.clone(),
                        capabilities: cfg.capabilities.clone(),
                        said: cfg.said,
                    },
                ),
            ])
        }
        (
            Role::Ss,
            Phase::AwaitAuthReply,
            Some(M::Pkmv1AuthReply {
                enc_ak,
                ak_seq,
                sa_descriptors,
                ..
            }),
        ) => {
            let mut saids: Vec<u16> = sa_descriptors.iter().map(|d| d.said).collect();
            saids.sort_unstable();
            saids.dedup();
            let well_formed = *ak_seq < 16 && saids.len() == sa_descriptors.len();
            match s.config().me.keys.decrypt(enc_ak) {
                Ok(ak) if well_formed && ak.bits() <= AK_BITS => s.accept(Some(SessionKey {
                    kind: KeyKind::Ak,
                    value: ak,
                })),
                _ => s.reject(RejectReason::Decode),
            }
            Ok(vec![])
        }
        (Role::Bs, Phase::AwaitAuthInfo, Some(M::Pkmv1AuthInfo { manufacturer_cert })) => {
            // advisory only: the BS may apply a manufacturer policy here
            if let Err(e) = s.check_cert(manufacturer_cert) {
                s.pending.advisory = Some(e);
            }
            s.phase = Phase::AwaitAuthRequest;
            Ok(vec![])
        }
        (Role::Bs, Phase::AwaitAuthRequest, Some(M::Pkmv1AuthRequest { ss_cert, .. })) => {
            if let Err(e) = s.check_cert(ss_cert) {
                s.reject(RejectReason::Cert(e));
                return Ok(vec![]);
            }
            let ak: BigUint = rng.gen_biguint(AK_BITS);
            let enc_ak = match ss_cert.subject_public_key.encrypt(&ak) {
                Ok(c) => c,
                Err(_) => {
                    s.reject(RejectReason::Decode);
                    return Ok(vec![]);
                }
            };
            let cfg = s.config().clone();
            s.accept(Some(SessionKey {
                kind: KeyKind::Ak,
                value: ak,
            }));
            Ok(vec![s.send(
                Role::Ss,
                M::Pkmv1AuthReply {
                    enc_ak,
                    ak_lifetime: cfg.key_lifetime,
                    ak_seq: cfg.key_seq & 0x0f,
                    sa_descriptors: cfg.sa_descriptors.clone(),
                },
            )])
        }
        (_, _, None) => Ok(vec![]),
        _ => Err(Inadmissible),
    }
}
