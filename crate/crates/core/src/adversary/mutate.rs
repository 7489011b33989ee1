//! Single-field tampering with a message in transit.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};

use crate::crypto::{Certificate, Digest, Nonce};
use crate::protocol::{drive_with, Lab, MacAddress, Protocol, ProtocolMessage as M, SaDescriptor, SecurityCapabilities};
use crate::LabRng;

fn flip_uint<R: Rng + ?Sized>(v: &BigUint, rng: &mut R) -> BigUint {
    let width = v.bits().max(8);
    v ^ (BigUint::from(1u8) << rng.gen_range(0..width))
}

fn flip_nonce<R: Rng + ?Sized>(n: Nonce, rng: &mut R) -> Nonce {
    Nonce(n.0 ^ (1u64 << rng.gen_range(0..64)))
}

fn flip_digest<R: Rng + ?Sized>(d: &Digest, rng: &mut R) -> Digest {
    let mut bytes = d.0;
    bytes[rng.gen_range(0..32)] ^= 1 << rng.gen_range(0..8);
    Digest(bytes)
}

fn tweak_str<R: Rng + ?Sized>(s: &str, rng: &mut R) -> String {
    let c = char::from(b'a' + rng.gen_range(0..26u8));
    format!("{s}{c}")
}

fn tweak_cert<R: Rng + ?Sized>(c: &Certificate, rng: &mut R) -> Certificate {
    let mut c = c.clone();
    match rng.gen_range(0..5) {
        0 => c.subject_id = tweak_str(&c.subject_id, rng),
        1 => c.subject_public_key.n = flip_uint(&c.subject_public_key.n, rng),
        2 => c.subject_public_key.e = flip_uint(&c.subject_public_key.e, rng),
        3 => c.issuer_id = tweak_str(&c.issuer_id, rng),
        _ => c.signature = flip_uint(&c.signature, rng),
    }
    c
}

fn tweak_caps<R: Rng + ?Sized>(caps: &SecurityCapabilities, rng: &mut R) -> SecurityCapabilities {
    let mut suites = caps.cipher_suites().to_vec();
    let i = rng.gen_range(0..suites.len());
    suites[i] = tweak_str(&suites[i], rng);
    SecurityCapabilities::new(suites).expect("non-empty")
}

fn tweak_descriptors<R: Rng + ?Sized>(ds: &[SaDescriptor], rng: &mut R) -> Vec<SaDescriptor> {
    let mut ds = ds.to_vec();
    if ds.is_empty() {
        ds.push(SaDescriptor {
            said: rng.gen(),
            cipher_suite: "null".into(),
        });
        return ds;
    }
    let i = rng.gen_range(0..ds.len());
    if rng.gen() {
        ds[i].said ^= 1 << rng.gen_range(0..16);
    } else {
        ds[i].cipher_suite = tweak_str(&ds[i].cipher_suite, rng);
    }
    ds
}

fn tweak_saids<R: Rng + ?Sized>(ids: &[u16], rng: &mut R) -> Vec<u16> {
    let mut ids = ids.to_vec();
    match ids.len() {
        0 => ids.push(rng.gen()),
        n => ids[rng.gen_range(0..n)] ^= 1 << rng.gen_range(0..16),
    }
    ids
}

fn tweak_mac<R: Rng + ?Sized>(mac: &MacAddress, rng: &mut R) -> MacAddress {
    let mut b = mac.0;
    b[rng.gen_range(0..6)] ^= 1 << rng.gen_range(0..8);
    MacAddress(b)
}

/// Changes exactly one field of `m`, chosen uniformly. Returns the field
/// name and the altered message, or `None` for a message without fields.
pub fn mutate_field<R: Rng + ?Sized>(m: &M, rng: &mut R) -> Option<(&'static str, M)> {
    let mut out = m.clone();
    let name = match &mut out {
        M::EapIdentityRequest => return None,
        M::Pkmv1AuthInfo { manufacturer_cert } | M::Pkmv2AuthInfo { manufacturer_cert } => {
            *manufacturer_cert = tweak_cert(manufacturer_cert, rng);
            "manufacturer_cert"
        }
        M::Pkmv1AuthRequest {
            ss_cert,
            capabilities,
            said,
        } => match rng.gen_range(0..3) {
            0 => {
                *ss_cert = tweak_cert(ss_cert, rng);
                "ss_cert"
            }
            1 => {
                *capabilities = tweak_caps(capabilities, rng);
                "capabilities"
            }
            _ => {
                *said ^= 1 << rng.gen_range(0..16);
                "said"
            }
        },
        M::Pkmv1AuthReply {
            enc_ak,
            ak_lifetime,
            ak_seq,
            sa_descriptors,
        } => match rng.gen_range(0..4) {
            0 => {
                *enc_ak = flip_uint(enc_ak, rng);
                "enc_ak"
            }
            1 => {
                *ak_lifetime ^= 1 << rng.gen_range(0..32);
                "ak_lifetime"
            }
            2 => {
                *ak_seq ^= 1 << rng.gen_range(0..8);
                "ak_seq"
            }
            _ => {
                *sa_descriptors = tweak_descriptors(sa_descriptors, rng);
                "sa_descriptors"
            }
        },
        M::Pkmv2AuthRequest {
            ss_cert,
            n_s,
            capabilities,
            said,
            ss_signature,
        } => match rng.gen_range(0..5) {
            0 => {
                *ss_cert = tweak_cert(ss_cert, rng);
                "ss_cert"
            }
            1 => {
                *n_s = flip_nonce(*n_s, rng);
                "n_s"
            }
            2 => {
                *capabilities = tweak_caps(capabilities, rng);
                "capabilities"
            }
            3 => {
                *said ^= 1 << rng.gen_range(0..16);
                "said"
            }
            _ => {
                *ss_signature = flip_uint(ss_signature, rng);
                "ss_signature"
            }
        },
        M::Pkmv2AuthReply {
            n_s,
            n_b,
            enc_prepak,
            prepak_lifetime,
            prepak_seq,
            said_list,
            bs_cert,
            bs_signature,
        } => match rng.gen_range(0..8) {
            0 => {
                *n_s = flip_nonce(*n_s, rng);
                "n_s"
            }
            1 => {
                *n_b = flip_nonce(*n_b, rng);
                "n_b"
            }
            2 => {
                *enc_prepak = flip_uint(enc_prepak, rng);
                "enc_prepak"
            }
            3 => {
                *prepak_lifetime ^= 1 << rng.gen_range(0..32);
                "prepak_lifetime"
            }
            4 => {
                *prepak_seq ^= 1 << rng.gen_range(0..8);
                "prepak_seq"
            }
            5 => {
                *said_list = tweak_saids(said_list, rng);
                "said_list"
            }
            6 => {
                *bs_cert = tweak_cert(bs_cert, rng);
                "bs_cert"
            }
            _ => {
                *bs_signature = flip_uint(bs_signature, rng);
                "bs_signature"
            }
        },
        M::Pkmv2AuthAck { n_b, ss_mac, checksum } => match rng.gen_range(0..3) {
            0 => {
                *n_b = flip_nonce(*n_b, rng);
                "n_b"
            }
            1 => {
                *ss_mac = tweak_mac(ss_mac, rng);
                "ss_mac"
            }
            _ => {
                *checksum = flip_digest(checksum, rng);
                "checksum"
            }
        },
        M::EapIdentityResponse {
            identity,
            client_random,
        }
        | M::RadiusAccessRequest {
            identity,
            client_random,
        } => {
            if rng.gen() {
                *identity = tweak_str(identity, rng);
                "identity"
            } else {
                *client_random = flip_nonce(*client_random, rng);
                "client_random"
            }
        }
        M::EapServerCert {
            as_cert,
            cert_request,
            server_random,
            server_signature,
        } => match rng.gen_range(0..4) {
            0 => {
                *as_cert = tweak_cert(as_cert, rng);
                "as_cert"
            }
            1 => {
                *cert_request = !*cert_request;
                "cert_request"
            }
            2 => {
                *server_random = flip_nonce(*server_random, rng);
                "server_random"
            }
            _ => {
                *server_signature = flip_uint(server_signature, rng);
                "server_signature"
            }
        },
        M::EapClientCert {
            supplicant_cert,
            enc_premaster,
            client_signature,
        } => match rng.gen_range(0..3) {
            0 => {
                *supplicant_cert = tweak_cert(supplicant_cert, rng);
                "supplicant_cert"
            }
            1 => {
                *enc_premaster = flip_uint(enc_premaster, rng);
                "enc_premaster"
            }
            _ => {
                *client_signature = flip_uint(client_signature, rng);
                "client_signature"
            }
        },
        M::RadiusAccessResult { success } => {
            *success = !*success;
            "success"
        }
        M::DhM1 { ms_cert } => {
            *ms_cert = tweak_cert(ms_cert, rng);
            "ms_cert"
        }
        M::DhM2 {
            bs_cert,
            y_bs,
            enc_nonce,
            tag_b,
        } => match rng.gen_range(0..4) {
            0 => {
                *bs_cert = tweak_cert(bs_cert, rng);
                "bs_cert"
            }
            1 => {
                *y_bs = flip_uint(y_bs, rng);
                "y_bs"
            }
            2 => {
                *enc_nonce = flip_uint(enc_nonce, rng);
                "enc_nonce"
            }
            _ => {
                *tag_b = flip_digest(tag_b, rng);
                "tag_b"
            }
        },
        M::DhM3 { y_ms, tag_m } => {
            if rng.gen() {
                *y_ms = flip_uint(y_ms, rng);
                "y_ms"
            } else {
                *tag_m = flip_digest(tag_m, rng);
                "tag_m"
            }
        }
        M::DhM4 { confirm } => {
            *confirm = flip_digest(confirm, rng);
            "confirm"
        }
        M::DhBareInit { y_ms: y } | M::DhBareResp { y_bs: y } => {
            *y = flip_uint(y, rng);
            "y"
        }
    };
    debug_assert_ne!(&out, m);
    Some((name, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn always_changes_the_message() {
        let mut rng = LabRng::seed_from_u64(3);
        let m = M::DhM3 {
            y_ms: BigUint::from(0u8),
            tag_m: Digest([0; 32]),
        };
        for _ in 0..200 {
            let (_, out) = mutate_field(&m, &mut rng).unwrap();
            assert_ne!(out, m);
        }
        assert!(mutate_field(&M::EapIdentityRequest, &mut rng).is_none());
    }
}

/// Result of a mutation campaign against honest runs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MutationReport {
    pub applied: usize,
    /// `Variant.field` of every mutation after which all parties still
    /// accepted with agreeing keys.
    pub survivors: Vec<String>,
}

/// Runs honest handshakes of `protocol`, altering one field of one
/// randomly chosen message per run, until `trials` mutations were applied.
pub fn mutation_campaign<R: Rng + ?Sized>(lab: &Lab, protocol: Protocol, trials: usize, rng: &mut R) -> MutationReport {
    let n = protocol.honest_message_count();
    let mut report = MutationReport::default();
    while report.applied < trials {
        let target = rng.gen_range(0..n);
        let mut mrng = LabRng::seed_from_u64(rng.gen());
        let mut field = None;
        let res = drive_with(lab.sessions(protocol), rng, |step, m| {
            if step != target {
                return m;
            }
            match mutate_field(&m, &mut mrng) {
                Some((name, out)) => {
                    field = Some(format!("{}.{name}", m.variant()));
                    out
                }
                None => m,
            }
        });
        let Some(field) = field else { continue };
        report.applied += 1;
        if res.all_accepted() && res.keys_agree() {
            report.survivors.push(field);
        }
    }
    report
}
