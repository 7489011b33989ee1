//! Every message exchanged by the modelled handshakes.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::principal::{MacAddress, SaDescriptor, SecurityCapabilities};
use crate::crypto::{CanonicalEncoder, Certificate, Digest, Nonce};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ProtocolMessage {
    Pkmv1AuthInfo {
        manufacturer_cert: Certificate,
    },
    Pkmv1AuthRequest {
        ss_cert: Certificate,
        capabilities: SecurityCapabilities,
        said: u16,
    },
    Pkmv1AuthReply {
        enc_ak: BigUint,
        ak_lifetime: u32,
        ak_seq: u8,
        sa_descriptors: Vec<SaDescriptor>,
    },
    Pkmv2AuthInfo {
        manufacturer_cert: Certificate,
    },
    Pkmv2AuthRequest {
        ss_cert: Certificate,
        n_s: Nonce,
        capabilities: SecurityCapabilities,
        said: u16,
        ss_signature: BigUint,
    },
    Pkmv2AuthReply {
        n_s: Nonce,
        n_b: Nonce,
        enc_prepak: BigUint,
        prepak_lifetime: u32,
        prepak_seq: u8,
        said_list: Vec<u16>,
        bs_cert: Certificate,
        bs_signature: BigUint,
    },
    Pkmv2AuthAck {
        n_b: Nonce,
        ss_mac: MacAddress,
        checksum: Digest,
    },
    EapIdentityRequest,
    EapIdentityResponse {
        identity: String,
        client_random: Nonce,
    },
    RadiusAccessRequest {
        identity: String,
        client_random: Nonce,
    },
    EapServerCert {
        as_cert: Certificate,
        cert_request: bool,
        server_random: Nonce,
        server_signature: BigUint,
    },
    EapClientCert {
        supplicant_cert: Certificate,
        enc_premaster: BigUint,
        client_signature: BigUint,
    },
    RadiusAccessResult {
        success: bool,
    },
    DhM1 {
        ms_cert: Certificate,
    },
    DhM2 {
        bs_cert: Certificate,
        y_bs: BigUint,
        enc_nonce: BigUint,
        tag_b: Digest,
    },
    DhM3 {
        y_ms: BigUint,
        tag_m: Digest,
    },
    DhM4 {
        confirm: Digest,
    },
    /// Anonymous Diffie-Hellman baseline, initiator half.
    DhBareInit {
        y_ms: BigUint,
    },
    DhBareResp {
        y_bs: BigUint,
    },
}

fn render_cert(c: &Certificate) -> String {
    format!("{}@{}", c.subject_id, c.issuer_id)
}

fn render_list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    let parts: Vec<String> = items.iter().map(f).collect();
    format!("[{}]", parts.join(";"))
}

impl ProtocolMessage {
    pub fn variant(&self) -> &'static str {
        use ProtocolMessage::*;
        match self {
            Pkmv1AuthInfo { .. } => "Pkmv1AuthInfo",
            Pkmv1AuthRequest { .. } => "Pkmv1AuthRequest",
            Pkmv1AuthReply { .. } => "Pkmv1AuthReply",
            Pkmv2AuthInfo { .. } => "Pkmv2AuthInfo",
            Pkmv2AuthRequest { .. } => "Pkmv2AuthRequest",
            Pkmv2AuthReply { .. } => "Pkmv2AuthReply",
            Pkmv2AuthAck { .. } => "Pkmv2AuthAck",
            EapIdentityRequest => "EapIdentityRequest",
            EapIdentityResponse { .. } => "EapIdentityResponse",
            RadiusAccessRequest { .. } => "RadiusAccessRequest",
            EapServerCert { .. } => "EapServerCert",
            EapClientCert { .. } => "EapClientCert",
            RadiusAccessResult { .. } => "RadiusAccessResult",
            DhM1 { .. } => "DhM1",
            DhM2 { .. } => "DhM2",
            DhM3 { .. } => "DhM3",
            DhM4 { .. } => "DhM4",
            DhBareInit { .. } => "DhBareInit",
            DhBareResp { .. } => "DhBareResp",
        }
    }

    /// `(name, value)` pairs in declaration order, as rendered in text traces.
    /// Certificates are abbreviated to `subject@issuer`.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        use ProtocolMessage::*;
        match self {
            Pkmv1AuthInfo { manufacturer_cert } | Pkmv2AuthInfo { manufacturer_cert } => {
                vec![("manufacturer_cert", render_cert(manufacturer_cert))]
            }
            Pkmv1AuthRequest {
                ss_cert,
                capabilities,
                said,
            } => vec![
                ("ss_cert", render_cert(ss_cert)),
                ("capabilities", render_list(capabilities.cipher_suites(), Clone::clone)),
                ("said", said.to_string()),
            ],
            Pkmv1AuthReply {
                enc_ak,
                ak_lifetime,
                ak_seq,
                sa_descriptors,
            } => vec![
                ("enc_ak", enc_ak.to_string()),
                ("ak_lifetime", ak_lifetime.to_string()),
                ("ak_seq", ak_seq.to_string()),
                (
                    "sa_descriptors",
                    render_list(sa_descriptors, |d| format!("{}:{}", d.said, d.cipher_suite)),
                ),
            ],
            Pkmv2AuthRequest {
                ss_cert,
                n_s,
                capabilities,
                said,
                ss_signature,
            } => vec![
                ("ss_cert", render_cert(ss_cert)),
                ("n_s", n_s.to_string()),
                ("capabilities", render_list(capabilities.cipher_suites(), Clone::clone)),
                ("said", said.to_string()),
                ("ss_signature", ss_signature.to_string()),
            ],
            Pkmv2AuthReply {
                n_s,
                n_b,
                enc_prepak,
                prepak_lifetime,
                prepak_seq,
                said_list,
                bs_cert,
                bs_signature,
            } => vec![
                ("n_s", n_s.to_string()),
                ("n_b", n_b.to_string()),
                ("enc_prepak", enc_prepak.to_string()),
                ("prepak_lifetime", prepak_lifetime.to_string()),
                ("prepak_seq", prepak_seq.to_string()),
                ("said_list", render_list(said_list, u16::to_string)),
                ("bs_cert", render_cert(bs_cert)),
                ("bs_signature", bs_signature.to_string()),
            ],
            Pkmv2AuthAck { n_b, ss_mac, checksum } => vec![
                ("n_b", n_b.to_string()),
                ("ss_mac", ss_mac.to_string()),
                ("checksum", checksum.to_hex()),
            ],
            EapIdentityRequest => vec![],
            EapIdentityResponse {
                identity,
                client_random,
            }
            | RadiusAccessRequest {
                identity,
                client_random,
            } => vec![
                ("identity", identity.clone()),
                ("client_random", client_random.to_string()),
            ],
            EapServerCert {
                as_cert,
                cert_request,
                server_random,
                server_signature,
            } => vec![
                ("as_cert", render_cert(as_cert)),
                ("cert_request", cert_request.to_string()),
                ("server_random", server_random.to_string()),
                ("server_signature", server_signature.to_string()),
            ],
            EapClientCert {
                supplicant_cert,
                enc_premaster,
                client_signature,
            } => vec![
                ("supplicant_cert", render_cert(supplicant_cert)),
                ("enc_premaster", enc_premaster.to_string()),
                ("client_signature", client_signature.to_string()),
            ],
            RadiusAccessResult { success } => vec![("success", success.to_string())],
            DhM1 { ms_cert } => vec![("ms_cert", render_cert(ms_cert))],
            DhM2 {
                bs_cert,
                y_bs,
                enc_nonce,
                tag_b,
            } => vec![
                ("bs_cert", render_cert(bs_cert)),
                ("y_bs", y_bs.to_string()),
                ("enc_nonce", enc_nonce.to_string()),
                ("tag_b", tag_b.to_hex()),
            ],
            DhM3 { y_ms, tag_m } => vec![("y_ms", y_ms.to_string()), ("tag_m", tag_m.to_hex())],
            DhM4 { confirm } => vec![("confirm", confirm.to_hex())],
            DhBareInit { y_ms } => vec![("y_ms", y_ms.to_string())],
            DhBareResp { y_bs } => vec![("y_bs", y_bs.to_string())],
        }
    }
}

// Signed and checksummed payloads. Each is the canonical encoding of the
// listed fields in message order.

pub(crate) fn pkmv2_request_payload(ss_cert: &Certificate, n_s: Nonce, caps: &SecurityCapabilities, said: u16) -> Digest {
    let mut enc = CanonicalEncoder::new();
    enc.digest(&ss_cert.tbs_digest()).u64(n_s.0);
    for suite in caps.cipher_suites() {
        enc.str(suite);
    }
    enc.u16(said);
    enc.hash()
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn pkmv2_reply_payload(
    n_s: Nonce,
    n_b: Nonce,
    enc_prepak: &BigUint,
    lifetime: u32,
    seq: u8,
    said_list: &[u16],
    bs_cert: &Certificate,
) -> Digest {
    let mut enc = CanonicalEncoder::new();
    enc.u64(n_s.0).u64(n_b.0).uint(enc_prepak).u32(lifetime).u8(seq);
    for said in said_list {
        enc.u16(*said);
    }
    enc.digest(&bs_cert.tbs_digest());
    enc.hash()
}

/// Keyed checksum: `H(pre-PAK || n_b || ss_mac)`.
pub(crate) fn pkmv2_ack_checksum(prepak: &BigUint, n_b: Nonce, ss_mac: MacAddress) -> Digest {
    let mut enc = CanonicalEncoder::new();
    enc.uint(prepak).u64(n_b.0).field(&ss_mac.0);
    enc.hash()
}

pub(crate) fn eap_server_payload(client_random: Nonce, server_random: Nonce, cert_request: bool, as_cert: &Certificate) -> Digest {
    let mut enc = CanonicalEncoder::new();
    enc.str("server")
        .u64(client_random.0)
        .u64(server_random.0)
        .u8(cert_request.into())
        .digest(&as_cert.tbs_digest());
    enc.hash()
}

pub(crate) fn eap_client_payload(client_random: Nonce, server_random: Nonce, enc_premaster: &BigUint) -> Digest {
    let mut enc = CanonicalEncoder::new();
    enc.str("client").u64(client_random.0).u64(server_random.0).uint(enc_premaster);
    enc.hash()
}

/// Master session key derived from the transported premaster secret.
pub(crate) fn eap_msk(premaster: &BigUint, client_random: Nonce, server_random: Nonce) -> Digest {
    let mut enc = CanonicalEncoder::new();
    enc.uint(premaster).u64(client_random.0).u64(server_random.0);
    enc.hash()
}
