//! Translation of concrete messages into terms.
//!
//! The translator sees every honest key so it can name the plaintext inside
//! a ciphertext and the exponent behind a public value. The attacker only
//! ever receives the resulting terms and reasons over them symbolically.

use num_bigint::BigUint;

use super::term::Term;
use crate::crypto::{bind_tag, confirm_tag, f_transform, Certificate, Digest, Nonce, PkKeyPair};
use crate::protocol::message::{pkmv2_ack_checksum, ProtocolMessage as M};
use crate::protocol::{KeyKind, Lab, MacAddress, Protocol, SessionState};

#[derive(Clone, Debug)]
pub struct Symbolizer {
    keys: Vec<(String, PkKeyPair)>,
    ss: String,
    server: String,
    exponents: Vec<(BigUint, String)>,
    secrets: Vec<BigUint>,
}

impl Symbolizer {
    pub fn new(lab: &Lab) -> Self {
        let keys = [&lab.ss, &lab.bs, &lab.authenticator, &lab.server, &lab.attacker]
            .iter()
            .map(|p| (p.id.name.clone(), p.keys.clone()))
            .collect();
        Self {
            keys,
            ss: lab.ss.id.name.clone(),
            server: lab.server.id.name.clone(),
            exponents: Vec::new(),
            secrets: Vec::new(),
        }
    }

    /// Names the exponent behind public value `y`.
    pub fn register_exponent(&mut self, id: impl Into<String>, y: &BigUint) {
        if !self.exponents.iter().any(|(v, _)| v == y) {
            self.exponents.push((y.clone(), id.into()));
        }
    }

    /// Registers the DH value a session has drawn, if any, under `id`.
    pub fn register_session(&mut self, id: &str, s: &SessionState) {
        if let Some(dh) = &s.pending.dh {
            self.register_exponent(id, dh.public());
        }
    }

    /// Records a plaintext the attacker itself encrypted so later tags can
    /// be matched against it.
    pub fn remember_secret(&mut self, v: BigUint) {
        if !self.secrets.contains(&v) {
            self.secrets.push(v);
        }
    }

    pub fn dh_value(&self, y: &BigUint) -> Term {
        match self.exponents.iter().find(|(v, _)| v == y) {
            Some((_, id)) => Term::dh_pub(id.clone()),
            None => Term::int(y.clone()),
        }
    }

    pub fn cert(c: &Certificate) -> Term {
        Term::tuple([
            Term::name("cert"),
            Term::name(c.subject_id.clone()),
            Term::name(c.issuer_id.clone()),
            Term::public_key(&c.subject_id),
        ])
    }

    pub fn nonce(n: Nonce) -> Term {
        Term::int(n.0)
    }

    pub fn f(n: Nonce) -> Term {
        Term::pair(Term::name("f"), Self::nonce(n))
    }

    fn public(label: &str, v: impl ToString) -> Term {
        Term::name(format!("{label}={}", v.to_string()))
    }

    fn opaque(d: &Digest) -> Term {
        Term::name(format!("digest:{}", d.to_hex()))
    }

    fn ciphertext(&mut self, owner: &str, c: &BigUint) -> Term {
        let plain = self
            .keys
            .iter()
            .find(|(id, _)| id == owner)
            .and_then(|(_, k)| k.decrypt(c).ok());
        match plain {
            Some(p) => {
                self.remember_secret(p.clone());
                Term::pk_enc(owner, Term::int(p))
            }
            None => Term::int(c.clone()),
        }
    }

    fn nonces(&self) -> impl Iterator<Item = Nonce> + '_ {
        self.secrets.iter().filter_map(|s| u64::try_from(s).ok()).map(Nonce)
    }

    pub fn binding_tag(y: Term, n: Term) -> Term {
        Term::hash_of(Term::pair(y, n))
    }

    fn tag_over(&self, y: &BigUint, tag: &Digest, transform: bool) -> Term {
        for n in self.nonces() {
            if transform && bind_tag(y, f_transform(n)) == *tag {
                return Self::binding_tag(self.dh_value(y), Self::f(n));
            }
            if !transform && bind_tag(y, n) == *tag {
                return Self::binding_tag(self.dh_value(y), Self::nonce(n));
            }
        }
        Self::opaque(tag)
    }

    fn confirm(&self, tag: &Digest) -> Term {
        self.nonces()
            .find(|n| confirm_tag(*n) == *tag)
            .map(|n| Term::hash_of(Self::nonce(n)))
            .unwrap_or_else(|| Self::opaque(tag))
    }

    pub fn checksum_term(prepak: Term, n_b: Nonce, mac: &MacAddress) -> Term {
        Term::hash_of(Term::tuple([prepak, Self::nonce(n_b), Self::public("mac", mac)]))
    }

    fn checksum(&self, n_b: Nonce, mac: &MacAddress, tag: &Digest) -> Term {
        self.secrets
            .iter()
            .find(|p| pkmv2_ack_checksum(p, n_b, *mac) == *tag)
            .map(|p| Self::checksum_term(Term::int(p.clone()), n_b, mac))
            .unwrap_or_else(|| Self::opaque(tag))
    }

    /// The terms an eavesdropper learns from `m`.
    pub fn message(&mut self, m: &M) -> Vec<Term> {
        match m {
            M::Pkmv1AuthInfo { manufacturer_cert } | M::Pkmv2AuthInfo { manufacturer_cert } => {
                vec![Self::cert(manufacturer_cert)]
            }
            M::Pkmv1AuthRequest {
                ss_cert,
                capabilities,
                said,
            } => vec![
                Self::cert(ss_cert),
                Self::public("caps", capabilities.cipher_suites().join(";")),
                Self::public("said", said),
            ],
            M::Pkmv1AuthReply {
                enc_ak,
                ak_lifetime,
                ak_seq,
                sa_descriptors,
            } => {
                let ss = self.ss.clone();
                vec![
                    self.ciphertext(&ss, enc_ak),
                    Self::public("lifetime", ak_lifetime),
                    Self::public("seq", ak_seq),
                    Self::public("sa", sa_descriptors.len()),
                ]
            }
            M::Pkmv2AuthRequest {
                ss_cert,
                n_s,
                capabilities,
                said,
                ..
            } => {
                let body = vec![
                    Self::cert(ss_cert),
                    Self::nonce(*n_s),
                    Self::public("caps", capabilities.cipher_suites().join(";")),
                    Self::public("said", said),
                ];
                let sig = Term::signature(&ss_cert.subject_id, Term::tuple(body.clone()));
                body.into_iter().chain([sig]).collect()
            }
            M::Pkmv2AuthReply {
                n_s,
                n_b,
                enc_prepak,
                prepak_lifetime,
                prepak_seq,
                said_list,
                bs_cert,
                ..
            } => {
                let ss = self.ss.clone();
                let body = vec![
                    Self::nonce(*n_s),
                    Self::nonce(*n_b),
                    self.ciphertext(&ss, enc_prepak),
                    Self::public("lifetime", prepak_lifetime),
                    Self::public("seq", prepak_seq),
                    Self::public("saids", said_list.len()),
                    Self::cert(bs_cert),
                ];
                let sig = Term::signature(&bs_cert.subject_id, Term::tuple(body.clone()));
                body.into_iter().chain([sig]).collect()
            }
            M::Pkmv2AuthAck { n_b, ss_mac, checksum } => vec![
                Self::nonce(*n_b),
                Self::public("mac", ss_mac),
                self.checksum(*n_b, ss_mac, checksum),
            ],
            M::EapIdentityRequest => vec![Term::name("identity-request")],
            M::EapIdentityResponse {
                identity,
                client_random,
            }
            | M::RadiusAccessRequest {
                identity,
                client_random,
            } => vec![Self::public("identity", identity), Self::nonce(*client_random)],
            M::EapServerCert {
                as_cert,
                cert_request,
                server_random,
                ..
            } => {
                let body = vec![
                    Self::public("cert-request", cert_request),
                    Self::nonce(*server_random),
                    Self::cert(as_cert),
                ];
                let sig = Term::signature(&as_cert.subject_id, Term::tuple(body.clone()));
                body.into_iter().chain([sig]).collect()
            }
            M::EapClientCert {
                supplicant_cert,
                enc_premaster,
                ..
            } => {
                let server = self.server.clone();
                let body = vec![Self::cert(supplicant_cert), self.ciphertext(&server, enc_premaster)];
                let sig = Term::signature(&supplicant_cert.subject_id, Term::tuple(body.clone()));
                body.into_iter().chain([sig]).collect()
            }
            M::RadiusAccessResult { success } => vec![Self::public("success", success)],
            M::DhM1 { ms_cert } => vec![Self::cert(ms_cert)],
            M::DhM2 {
                bs_cert,
                y_bs,
                enc_nonce,
                tag_b,
            } => {
                let ss = self.ss.clone();
                let enc = self.ciphertext(&ss, enc_nonce);
                vec![Self::cert(bs_cert), self.dh_value(y_bs), enc, self.tag_over(y_bs, tag_b, true)]
            }
            M::DhM3 { y_ms, tag_m } => vec![self.dh_value(y_ms), self.tag_over(y_ms, tag_m, false)],
            M::DhM4 { confirm } => vec![self.confirm(confirm)],
            M::DhBareInit { y_ms: y } | M::DhBareResp { y_bs: y } => vec![self.dh_value(y)],
        }
    }

    /// The term naming the key `s` has installed, if any. `exp_id` is the
    /// name under which the session's own DH value was registered.
    pub fn session_key(&self, s: &SessionState, exp_id: &str) -> Option<Term> {
        let key = s.derived_key.as_ref()?;
        match (s.protocol, key.kind) {
            (Protocol::DhProposed | Protocol::DhBare, _) => {
                let peer = s.pending.peer_public.as_ref()?;
                Some(Term::dh_shared(exp_id, self.dh_value(peer)))
            }
            (Protocol::EapTls, KeyKind::Msk) => s.pending.secret.clone().map(Term::int),
            _ => Some(Term::int(key.value.clone())),
        }
    }
}
