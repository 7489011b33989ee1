//! EAP-TLS between supplicant, authenticator and authentication server, at
//! the granularity of six messages. TLS randoms and the RSA-transported
//! premaster are carried explicitly; the record layer is not modelled.

use num_bigint::RandBigInt;
use rand::RngCore;

use super::message::{eap_client_payload, eap_msk, eap_server_payload, ProtocolMessage as M};
use super::principal::Role;
use super::session::{Check, Inadmissible, KeyKind, Phase, RejectReason, SessionKey, SessionState, StepResult};
use crate::crypto::Nonce;

pub const PREMASTER_BITS: u64 = 256;

pub(crate) fn step<R: RngCore + ?Sized>(s: &mut SessionState, incoming: Option<&M>, rng: &mut R) -> StepResult {
    match (s.principal.role, s.phase, incoming) {
        (Role::Authenticator, Phase::Initial, None) => {
            s.phase = Phase::AwaitIdentityResponse;
            Ok(vec![s.send(Role::Ss, M::EapIdentityRequest)])
        }
        (Role::Authenticator, Phase::AwaitIdentityResponse, Some(M::EapIdentityResponse { identity, client_random })) => {
            s.phase = Phase::AwaitAccessResult;
            Ok(vec![s.send(
                Role::Server,
                M::RadiusAccessRequest {
                    identity: identity.clone(),
                    client_random: *client_random,
                },
            )])
        }
        (Role::Authenticator, Phase::AwaitAccessResult, Some(M::RadiusAccessResult { success })) => {
            if *success {
                s.accept(None);
            } else {
                s.reject(RejectReason::AccessDenied);
            }
            Ok(vec![])
        }
        (Role::Ss, Phase::AwaitIdentityRequest, Some(M::EapIdentityRequest)) => {
            let client_random = Nonce::random(rng);
            s.pending.nonce = Some(client_random);
            s.phase = Phase::AwaitServerCert;
            let identity = s.config().me.id.name.clone();
            Ok(vec![s.send(
                Role::Authenticator,
                M::EapIdentityResponse {
                    identity,
                    client_random,
                },
            )])
        }
        (
            Role::Ss,
            Phase::AwaitServerCert,
            Some(M::EapServerCert {
                as_cert,
                cert_request,
                server_random,
                server_signature,
            }),
        ) => {
            // the client certificate is only released to a valid server
            if let Err(e) = s.check_cert(as_cert) {
                s.reject(RejectReason::Cert(e));
                return Ok(vec![]);
            }
            let client_random = s.pending.nonce.expect("random drawn on identity request");
            let digest = eap_server_payload(client_random, *server_random, *cert_request, as_cert);
            let ok = as_cert.subject_public_key.verify_digest(&digest, server_signature);
            if !s.log(Check::Signature { ok }) {
                s.reject(RejectReason::Signature);
                return Ok(vec![]);
            }
            let premaster = rng.gen_biguint(PREMASTER_BITS);
            let Ok(enc_premaster) = as_cert.subject_public_key.encrypt(&premaster) else {
                s.reject(RejectReason::Decode);
                return Ok(vec![]);
            };
            let cfg = s.config().clone();
            let client_signature = cfg
                .me
                .keys
                .sign_digest(&eap_client_payload(client_random, *server_random, &enc_premaster));
            let msk = eap_msk(&premaster, client_random, *server_random);
            s.pending.secret = Some(premaster);
            s.accept(Some(SessionKey {
                kind: KeyKind::Msk,
                value: msk.to_biguint(),
            }));
            Ok(vec![s.send(
                Role::Server,
                M::EapClientCert {
                    supplicant_cert: cfg.me.cert.clone(),
                    enc_premaster,
                    client_signature,
                },
            )])
        }
        (Role::Server, Phase::AwaitAccessRequest, Some(M::RadiusAccessRequest { identity, client_random })) => {
            let cfg = s.config().clone();
            let server_random = Nonce::random(rng);
            let digest = eap_server_payload(*client_random, server_random, true, &cfg.me.cert);
            s.pending.identity = Some(identity.clone());
            s.pending.peer_nonce = Some(*client_random);
            s.pending.nonce = Some(server_random);
            s.phase = Phase::AwaitClientCert;
            Ok(vec![s.send(
                Role::Ss,
                M::EapServerCert {
                    as_cert: cfg.me.cert.clone(),
                    cert_request: true,
                    server_random,
                    server_signature: cfg.me.keys.sign_digest(&digest),
                },
            )])
        }
        (
            Role::Server,
            Phase::AwaitClientCert,
            Some(M::EapClientCert {
                supplicant_cert,
                enc_premaster,
                client_signature,
            }),
        ) => {
            let outcome = verify_client(s, supplicant_cert, enc_premaster, client_signature);
            let success = match outcome {
                Ok(msk) => {
                    s.accept(Some(SessionKey {
                        kind: KeyKind::Msk,
                        value: msk,
                    }));
                    true
                }
                Err(reason) => {
                    s.reject(reason);
                    false
                }
            };
            Ok(vec![s.send(Role::Authenticator, M::RadiusAccessResult { success })])
        }
        (_, _, None) => Ok(vec![]),
        _ => Err(Inadmissible),
    }
}

fn verify_client(
    s: &mut SessionState,
    cert: &crate::crypto::Certificate,
    enc_premaster: &num_bigint::BigUint,
    signature: &num_bigint::BigUint,
) -> Result<num_bigint::BigUint, RejectReason> {
    s.check_cert(cert).map_err(RejectReason::Cert)?;
    if s.pending.identity.as_deref() != Some(cert.subject_id.as_str()) {
        return Err(RejectReason::Identity);
    }
    let client_random = s.pending.peer_nonce.expect("set on access request");
    let server_random = s.pending.nonce.expect("set on access request");
    let ok = cert
        .subject_public_key
        .verify_digest(&eap_client_payload(client_random, server_random, enc_premaster), signature);
    if !s.log(Check::Signature { ok }) {
        return Err(RejectReason::Signature);
    }
    let premaster = s
        .config()
        .me
        .keys
        .decrypt(enc_premaster)
        .map_err(|_| RejectReason::Decode)?;
    let msk = eap_msk(&premaster, client_random, server_random).to_biguint();
    s.pending.secret = Some(premaster);
    Ok(msk)
}
