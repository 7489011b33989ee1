//! Scripted man-in-the-middle, replay and interception runs.
//!
//! Every honest party is a [`Victim`] with its own seeded generator, so an
//! outcome can be re-checked by feeding each victim its recorded inputs
//! again. The attacker owns the channel: it sees every message, decides
//! what to deliver, and only sends what its knowledge base can derive.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigUint, RandBigInt};
use rand::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::symbolic::Symbolizer;
use super::term::{Atom, KnowledgeBase, Term};
use crate::crypto::{bind_tag, f_transform, DhGroup, DhKeyPair, Nonce};
use crate::protocol::message::{eap_client_payload, eap_server_payload, pkmv2_reply_payload, pkmv2_request_payload};
use crate::protocol::{
    Lab, Outgoing, Principal, Protocol, ProtocolMessage as M, Role, SessionState, Verdict, AK_BITS,
    PREPAK_BITS,
};
use crate::LabRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attack {
    Mitm,
    Replay,
    Interception,
}

impl Attack {
    pub const ALL: [Attack; 3] = [Attack::Mitm, Attack::Replay, Attack::Interception];

    pub fn name(self) -> &'static str {
        match self {
            Attack::Mitm => "mitm",
            Attack::Replay => "replay",
            Attack::Interception => "interception",
        }
    }
}

impl fmt::Display for Attack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown attack `{0}` (expected mitm, replay or interception)")]
pub struct UnknownAttack(pub String);

impl FromStr for Attack {
    type Err = UnknownAttack;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Attack::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| UnknownAttack(s.to_owned()))
    }
}

/// What one honest party saw and concluded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VictimRecord {
    pub name: String,
    pub role: Role,
    pub rng_seed: u64,
    /// Whether the session was started with an empty step first.
    pub started: bool,
    pub inputs: Vec<M>,
    pub verdict: Verdict,
    pub key: Option<BigUint>,
    /// The key as a term and whether the attacker can derive it.
    pub key_term: Option<String>,
    pub key_derivable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub attack: Attack,
    pub protocol: Protocol,
    pub broken: bool,
    pub evidence: String,
    pub victims: Vec<VictimRecord>,
    /// Concrete keys the attacker computed from its own material.
    pub attacker_keys: Vec<BigUint>,
    /// Key installed by the recorded session a replay draws on.
    pub recorded_key: Option<BigUint>,
}

struct Victim {
    record: VictimRecord,
    exp_id: String,
    state: SessionState,
    rng: LabRng,
}

impl Victim {
    fn is_accepted(&self) -> bool {
        self.state.verdict.is_accepted()
    }
}

/// Channel-controlling attacker plus the honest sessions it is attacking.
struct Stage<'h> {
    harness: &'h Harness,
    protocol: Protocol,
    sym: Symbolizer,
    kb: KnowledgeBase,
    victims: Vec<Victim>,
    keys: Vec<BigUint>,
    counter: usize,
}

impl<'h> Stage<'h> {
    fn new(harness: &'h Harness, protocol: Protocol) -> Self {
        let lab = &harness.lab;
        let mut kb = KnowledgeBase::new();
        for p in [&lab.ss, &lab.bs, &lab.authenticator, &lab.server, &lab.attacker] {
            kb.insert(Term::public_key(&p.id.name));
            kb.insert(Symbolizer::cert(&p.cert));
            kb.insert(Term::name(p.id.name.clone()));
        }
        kb.insert(Term::private_key(&lab.attacker.id.name));
        kb.insert(Term::name("f"));
        Self {
            harness,
            protocol,
            sym: Symbolizer::new(lab),
            kb,
            victims: Vec::new(),
            keys: Vec::new(),
            counter: 0,
        }
    }

    fn lab(&self) -> &Lab {
        &self.harness.lab
    }

    fn me(&self) -> &Principal {
        &self.harness.lab.attacker
    }

    fn victim<R: RngCore + ?Sized>(&mut self, role: Role, rng: &mut R) -> usize {
        let seed = rng.next_u64();
        let state = self.harness.fresh_session(self.protocol, role);
        self.counter += 1;
        self.victims.push(Victim {
            record: VictimRecord {
                name: state.principal.name.clone(),
                role,
                rng_seed: seed,
                started: false,
                inputs: Vec::new(),
                verdict: Verdict::InProgress,
                key: None,
                key_term: None,
                key_derivable: false,
            },
            exp_id: format!("{}#{}", state.principal.name, self.counter),
            state,
            rng: LabRng::seed_from_u64(seed),
        });
        self.victims.len() - 1
    }

    fn observe(&mut self, m: &M) {
        for v in &self.victims {
            self.sym.register_session(&v.exp_id, &v.state);
        }
        let terms = self.sym.message(m);
        self.kb.observe(terms);
    }

    fn absorb(&mut self, out: Vec<Outgoing>) -> Vec<Outgoing> {
        for o in &out {
            self.observe(&o.message);
        }
        out
    }

    fn start(&mut self, v: usize) -> Vec<Outgoing> {
        let victim = &mut self.victims[v];
        let (out, next) = victim.state.advance(None, &mut victim.rng);
        victim.state = next;
        victim.record.started = true;
        self.absorb(out)
    }

    fn deliver(&mut self, v: usize, m: M) -> Vec<Outgoing> {
        self.observe(&m);
        let victim = &mut self.victims[v];
        let (out, next) = victim.state.advance(Some(&m), &mut victim.rng);
        victim.state = next;
        victim.record.inputs.push(m);
        self.absorb(out)
    }

    /// Delivers queued messages to the victims they name until quiet;
    /// messages for anyone else are handed back.
    fn pump(&mut self, mut queue: VecDeque<Outgoing>) -> Vec<Outgoing> {
        let mut stray = Vec::new();
        while let Some(o) = queue.pop_front() {
            match self.victims.iter().position(|v| v.state.principal == o.to && !v.state.is_terminal()) {
                Some(v) => queue.extend(self.deliver(v, o.message)),
                None => stray.push(o),
            }
        }
        stray
    }

    /// A fresh DH exponent owned by the attacker.
    fn exponent<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> DhKeyPair {
        let kp = DhKeyPair::generate(&self.lab().group, rng);
        self.counter += 1;
        let id = format!("{}#{}", self.me().id.name, self.counter);
        self.sym.register_exponent(id.clone(), kp.public());
        self.kb.observe([Term::exponent(&id)]);
        kp
    }

    /// A fresh secret value chosen by the attacker.
    fn secret(&mut self, v: BigUint) -> BigUint {
        self.sym.remember_secret(v.clone());
        self.kb.observe([Term::int(v.clone())]);
        v
    }

    fn key_term(&self, v: usize) -> Option<Term> {
        let victim = &self.victims[v];
        self.sym.session_key(&victim.state, &victim.exp_id)
    }

    fn key_derivable(&self, v: usize) -> bool {
        self.key_term(v).is_some_and(|t| self.kb.derives(&t))
    }

    fn describe(&self, v: usize) -> String {
        let victim = &self.victims[v];
        match victim.state.verdict {
            Verdict::Accepted => match self.key_term(v) {
                Some(t) if self.kb.derives(&t) => format!("{} accepted; attacker derives its key {t}", victim.record.name),
                Some(t) => format!("{} accepted; key {t} not derivable", victim.record.name),
                None => format!("{} accepted", victim.record.name),
            },
            Verdict::Rejected(r) => format!("{} rejected ({r})", victim.record.name),
            Verdict::InProgress => format!("{} still waiting", victim.record.name),
        }
    }

    fn finish(mut self, attack: Attack, broken: bool, evidence: String, recorded_key: Option<BigUint>) -> AttackOutcome {
        let terms: Vec<Option<Term>> = (0..self.victims.len()).map(|v| self.key_term(v)).collect();
        for (v, t) in self.victims.iter_mut().zip(terms) {
            v.record.verdict = v.state.verdict;
            v.record.key = v.state.derived_key.as_ref().map(|k| k.value.clone());
            v.record.key_derivable = t.as_ref().is_some_and(|t| self.kb.derives(t));
            v.record.key_term = t.map(|t| t.to_string());
        }
        AttackOutcome {
            attack,
            protocol: self.protocol,
            broken,
            evidence,
            victims: self.victims.into_iter().map(|v| v.record).collect(),
            attacker_keys: self.keys,
            recorded_key,
        }
    }
}

/// A fixed population of principals to attack. DH runs use the realistic
/// group so attacker and victim values never collide by accident.
#[derive(Clone, Debug)]
pub struct Harness {
    lab: Lab,
}

impl Harness {
    pub fn new(seed: u64) -> Self {
        let mut lab = Lab::new(seed);
        lab.group = DhGroup::realistic();
        Self { lab }
    }

    pub fn from_lab(lab: Lab) -> Self {
        Self { lab }
    }

    pub fn lab(&self) -> &Lab {
        &self.lab
    }

    fn fresh_session(&self, protocol: Protocol, role: Role) -> SessionState {
        self.lab
            .sessions(protocol)
            .into_iter()
            .find(|s| s.principal.role == role)
            .expect("role takes part in protocol")
    }

    fn initiator(protocol: Protocol) -> Role {
        match protocol {
            Protocol::EapTls => Role::Authenticator,
            _ => Role::Ss,
        }
    }

    fn roles(protocol: Protocol) -> Vec<Role> {
        match protocol {
            Protocol::EapTls => vec![Role::Authenticator, Role::Ss, Role::Server],
            _ => vec![Role::Ss, Role::Bs],
        }
    }

    /// An honest run over the attacker-controlled channel.
    fn honest<'h, R: RngCore + ?Sized>(&'h self, protocol: Protocol, rng: &mut R) -> Stage<'h> {
        let mut st = Stage::new(self, protocol);
        for role in Self::roles(protocol) {
            st.victim(role, rng);
        }
        let first = st
            .victims
            .iter()
            .position(|v| v.record.role == Self::initiator(protocol))
            .expect("initiator present");
        let out = st.start(first);
        st.pump(out.into());
        st
    }

    pub fn run<R: RngCore + ?Sized>(&self, protocol: Protocol, attack: Attack, rng: &mut R) -> AttackOutcome {
        match attack {
            Attack::Interception => self.interception(protocol, rng),
            Attack::Replay => self.replay(protocol, rng),
            Attack::Mitm => match protocol {
                Protocol::Pkmv1 => self.mitm_pkmv1(rng),
                Protocol::Pkmv2 => self.mitm_pkmv2(rng),
                Protocol::EapTls => self.mitm_eap(rng),
                Protocol::DhProposed => self.mitm_dh_proposed(rng),
                Protocol::DhBare => self.mitm_dh_bare(rng),
            },
        }
    }

    fn interception<R: RngCore + ?Sized>(&self, protocol: Protocol, rng: &mut R) -> AttackOutcome {
        let st = self.honest(protocol, rng);
        let learned: Vec<usize> = (0..st.victims.len()).filter(|&v| st.key_derivable(v)).collect();
        let parts: Vec<String> = (0..st.victims.len())
            .filter(|&v| st.victims[v].state.derived_key.is_some())
            .map(|v| st.describe(v))
            .collect();
        let evidence = format!("passive attacker holds {} terms; {}", st.kb.len(), parts.join("; "));
        st.finish(Attack::Interception, !learned.is_empty(), evidence, None)
    }

    fn replay<R: RngCore + ?Sized>(&self, protocol: Protocol, rng: &mut R) -> AttackOutcome {
        let recorded = self.honest(protocol, rng);
        let reply = recorded
            .victims
            .iter()
            .find(|v| v.record.role == Role::Ss)
            .and_then(|v| {
                v.record.inputs.iter().find(|m| {
                    matches!(
                        m,
                        M::Pkmv1AuthReply { .. }
                            | M::Pkmv2AuthReply { .. }
                            | M::EapServerCert { .. }
                            | M::DhM2 { .. }
                            | M::DhBareResp { .. }
                    )
                })
            })
            .cloned()
            .expect("honest run carries a server reply");
        let recorded_key = recorded
            .victims
            .iter()
            .find(|v| v.record.role == Role::Ss)
            .and_then(|v| v.state.derived_key.as_ref().map(|k| k.value.clone()));

        let mut st = Stage::new(self, protocol);
        st.kb = recorded.kb.clone();
        st.sym = recorded.sym.clone();
        st.counter = recorded.counter;
        let v = st.victim(Role::Ss, rng);
        if protocol == Protocol::EapTls {
            st.deliver(v, M::EapIdentityRequest);
        } else {
            st.start(v);
        }
        let variant = reply.variant();
        st.deliver(v, reply);

        let victim = &st.victims[v];
        let key = victim.state.derived_key.as_ref().map(|k| k.value.clone());
        let stale = victim.is_accepted() && key.is_some() && key == recorded_key;
        let known = victim.is_accepted() && st.key_derivable(v);
        let broken = stale || known;
        let evidence = if stale {
            format!("{} accepted replayed {variant} and installed the recorded session key", victim.record.name)
        } else {
            format!("replayed {variant}: {}", st.describe(v))
        };
        st.finish(Attack::Replay, broken, evidence, recorded_key)
    }

    fn mitm_verdict(st: &Stage<'_>) -> bool {
        (0..st.victims.len()).all(|v| {
            st.victims[v].is_accepted() && (st.victims[v].state.derived_key.is_none() || st.key_derivable(v))
        })
    }

    fn summary(st: &Stage<'_>, notes: &[String]) -> String {
        let mut parts: Vec<String> = (0..st.victims.len()).map(|v| st.describe(v)).collect();
        parts.extend(notes.iter().cloned());
        parts.join("; ")
    }

    fn mitm_pkmv1<R: RngCore + ?Sized>(&self, rng: &mut R) -> AttackOutcome {
        let mut st = Stage::new(self, Protocol::Pkmv1);
        let me = st.me().clone();

        // Posing as the BS: answer with an AK of the attacker's choosing.
        let ss = st.victim(Role::Ss, rng);
        let out = st.start(ss);
        let ss_cert = out
            .iter()
            .find_map(|o| match &o.message {
                M::Pkmv1AuthRequest { ss_cert, .. } => Some(ss_cert.clone()),
                _ => None,
            })
            .expect("SS sends its certificate");
        let ak = st.secret(rng.gen_biguint(AK_BITS));
        let forged = Term::pk_enc(&ss_cert.subject_id, Term::int(ak.clone()));
        debug_assert!(st.kb.derives(&forged));
        let enc_ak = ss_cert.subject_public_key.encrypt(&ak).expect("AK below modulus");
        st.keys.push(ak);
        let cfg = st.victims[ss].state.config().clone();
        st.deliver(
            ss,
            M::Pkmv1AuthReply {
                enc_ak,
                ak_lifetime: cfg.key_lifetime,
                ak_seq: cfg.key_seq,
                sa_descriptors: cfg.sa_descriptors.clone(),
            },
        );

        // Posing as the SS with the attacker's own credentials.
        let bs = st.victim(Role::Bs, rng);
        st.deliver(
            bs,
            M::Pkmv1AuthInfo {
                manufacturer_cert: me.manufacturer_cert.clone(),
            },
        );
        st.deliver(
            bs,
            M::Pkmv1AuthRequest {
                ss_cert: me.cert.clone(),
                capabilities: cfg.capabilities.clone(),
                said: cfg.said,
            },
        );
        let notes = vec!["the BS is never authenticated to the SS, so the rogue-BS half succeeds".to_owned()];
        let broken = Self::mitm_verdict(&st);
        let evidence = Self::summary(&st, &notes);
        st.finish(Attack::Mitm, broken, evidence, None)
    }

    fn mitm_pkmv2<R: RngCore + ?Sized>(&self, rng: &mut R) -> AttackOutcome {
        let mut st = Stage::new(self, Protocol::Pkmv2);
        let me = st.me().clone();

        let ss = st.victim(Role::Ss, rng);
        let out = st.start(ss);
        let (ss_cert, n_s) = out
            .iter()
            .find_map(|o| match &o.message {
                M::Pkmv2AuthRequest { ss_cert, n_s, .. } => Some((ss_cert.clone(), *n_s)),
                _ => None,
            })
            .expect("SS sends its request");
        let signable = st.kb.derives(&Term::private_key(&self.lab.bs.id.name));
        let prepak = st.secret(rng.gen_biguint(PREPAK_BITS));
        let enc_prepak = ss_cert.subject_public_key.encrypt(&prepak).expect("pre-PAK below modulus");
        let n_b = Nonce::random(rng);
        let cfg = st.victims[ss].state.config().clone();
        let saids = vec![cfg.said];
        let digest = pkmv2_reply_payload(n_s, n_b, &enc_prepak, cfg.key_lifetime, cfg.key_seq, &saids, &me.cert);
        st.keys.push(prepak);
        st.deliver(
            ss,
            M::Pkmv2AuthReply {
                n_s,
                n_b,
                enc_prepak,
                prepak_lifetime: cfg.key_lifetime,
                prepak_seq: cfg.key_seq,
                said_list: saids,
                bs_cert: me.cert.clone(),
                bs_signature: me.keys.sign_digest(&digest),
            },
        );

        let bs = st.victim(Role::Bs, rng);
        st.deliver(
            bs,
            M::Pkmv2AuthInfo {
                manufacturer_cert: me.manufacturer_cert.clone(),
            },
        );
        let n_s = Nonce::random(rng);
        let digest = pkmv2_request_payload(&me.cert, n_s, &cfg.capabilities, cfg.said);
        st.deliver(
            bs,
            M::Pkmv2AuthRequest {
                ss_cert: me.cert.clone(),
                n_s,
                capabilities: cfg.capabilities.clone(),
                said: cfg.said,
                ss_signature: me.keys.sign_digest(&digest),
            },
        );
        let notes = vec![format!(
            "BS signature over a substituted pre-PAK derivable: {signable}; attacker certificate is {}-issued",
            me.cert.issuer_id
        )];
        let broken = Self::mitm_verdict(&st);
        let evidence = Self::summary(&st, &notes);
        st.finish(Attack::Mitm, broken, evidence, None)
    }

    fn mitm_eap<R: RngCore + ?Sized>(&self, rng: &mut R) -> AttackOutcome {
        let mut st = Stage::new(self, Protocol::EapTls);
        let me = st.me().clone();

        // Posing as the network to the supplicant.
        let sup = st.victim(Role::Ss, rng);
        let out = st.deliver(sup, M::EapIdentityRequest);
        let client_random = out
            .iter()
            .find_map(|o| match &o.message {
                M::EapIdentityResponse { client_random, .. } => Some(*client_random),
                _ => None,
            })
            .expect("supplicant answers the identity request");
        let server_random = Nonce::random(rng);
        let digest = eap_server_payload(client_random, server_random, true, &me.cert);
        st.deliver(
            sup,
            M::EapServerCert {
                as_cert: me.cert.clone(),
                cert_request: true,
                server_random,
                server_signature: me.keys.sign_digest(&digest),
            },
        );

        // Posing as the supplicant to authenticator and server.
        let ap = st.victim(Role::Authenticator, rng);
        let aaa = st.victim(Role::Server, rng);
        st.start(ap);
        let mut queue: VecDeque<Outgoing> = st
            .deliver(
                ap,
                M::EapIdentityResponse {
                    identity: me.id.name.clone(),
                    client_random: Nonce::random(rng),
                },
            )
            .into();
        let mut premaster = None;
        while !queue.is_empty() {
            for o in st.pump(std::mem::take(&mut queue)) {
                let M::EapServerCert {
                    as_cert, server_random, ..
                } = o.message
                else {
                    continue;
                };
                let pm = st.secret(rng.gen_biguint(PREPAK_BITS));
                let enc_premaster = as_cert.subject_public_key.encrypt(&pm).expect("premaster below modulus");
                let client_random = st.victims[aaa].state.pending.peer_nonce.unwrap_or(Nonce(0));
                let digest = eap_client_payload(client_random, server_random, &enc_premaster);
                premaster = Some(pm);
                queue.push_back(Outgoing {
                    to: st.victims[aaa].state.principal.clone(),
                    message: M::EapClientCert {
                        supplicant_cert: me.cert.clone(),
                        enc_premaster,
                        client_signature: me.keys.sign_digest(&digest),
                    },
                });
            }
        }
        st.keys.extend(premaster);
        let broken = Self::mitm_verdict(&st);
        let evidence = Self::summary(&st, &[]);
        st.finish(Attack::Mitm, broken, evidence, None)
    }

    fn mitm_dh_proposed<R: RngCore + ?Sized>(&self, rng: &mut R) -> AttackOutcome {
        let mut st = Stage::new(self, Protocol::DhProposed);
        let group = self.lab.group.clone();
        let mut notes = Vec::new();

        // Posing as the BS: own exponent, own nonce, the genuine BS cert.
        let ms = st.victim(Role::Ss, rng);
        let out = st.start(ms);
        let ms_cert = out
            .iter()
            .find_map(|o| match &o.message {
                M::DhM1 { ms_cert } => Some(ms_cert.clone()),
                _ => None,
            })
            .expect("MS sends its certificate");
        let a = st.exponent(rng);
        let nonce = Nonce(
            u64::try_from(st.secret(BigUint::from(rng.next_u64()))).expect("drawn from u64"),
        );
        let tag = Symbolizer::binding_tag(st.sym.dh_value(a.public()), Symbolizer::f(nonce));
        debug_assert!(st.kb.derives(&tag));
        let enc_nonce = ms_cert
            .subject_public_key
            .encrypt(&BigUint::from(nonce.0))
            .expect("nonce below modulus");
        let out = st.deliver(
            ms,
            M::DhM2 {
                bs_cert: self.lab.bs.cert.clone(),
                y_bs: a.public().clone(),
                enc_nonce,
                tag_b: bind_tag(a.public(), f_transform(nonce)),
            },
        );
        for o in &out {
            if let M::DhM3 { y_ms, .. } = &o.message {
                if let Ok(k) = a.derive_ak(y_ms, &group) {
                    st.keys.push(k.0);
                }
            }
        }
        if st.victims[ms].is_accepted() {
            notes.push("M2 carries no BS signature, so the MS half accepts a rogue BS".to_owned());
        }

        // Posing as the MS: the nonce the BS draws is only sent under the
        // MS key, so the attacker falls back on its own nonce.
        let bs = st.victim(Role::Bs, rng);
        let out = st.deliver(bs, M::DhM1 { ms_cert });
        let b = st.exponent(rng);
        let y_att = st.sym.dh_value(b.public());
        let mut guess = nonce;
        for o in &out {
            if let M::DhM2 { .. } = &o.message {
                let target = st.sym.message(&o.message);
                let inner = target.iter().find_map(|t| match t {
                    Term::PkEnc(_, body) => Some(body.as_ref().clone()),
                    _ => None,
                });
                if let Some(n) = inner {
                    let wanted = Symbolizer::binding_tag(y_att.clone(), n.clone());
                    if st.kb.derives(&wanted) {
                        if let Term::Atom(Atom::Int(v)) = n {
                            guess = Nonce(u64::try_from(v).unwrap_or_default());
                        }
                    } else {
                        notes.push(format!("{wanted} not derivable: nonce only seen as {{{n}}}pk"));
                    }
                }
            }
        }
        st.deliver(
            bs,
            M::DhM3 {
                y_ms: b.public().clone(),
                tag_m: bind_tag(b.public(), guess),
            },
        );
        if !st.victims[bs].state.is_terminal() {
            st.deliver(
                bs,
                M::DhM4 {
                    confirm: crate::crypto::confirm_tag(guess),
                },
            );
        }
        if let Some(y_bs) = st.victims[bs].state.pending.dh.as_ref().map(|d| d.public().clone()) {
            if let Ok(k) = b.derive_ak(&y_bs, &group) {
                st.keys.push(k.0);
            }
        }
        let broken = Self::mitm_verdict(&st);
        let evidence = Self::summary(&st, &notes);
        st.finish(Attack::Mitm, broken, evidence, None)
    }

    fn mitm_dh_bare<R: RngCore + ?Sized>(&self, rng: &mut R) -> AttackOutcome {
        let mut st = Stage::new(self, Protocol::DhBare);
        let group = self.lab.group.clone();

        let ms = st.victim(Role::Ss, rng);
        let out = st.start(ms);
        let y_ms = out
            .iter()
            .find_map(|o| match &o.message {
                M::DhBareInit { y_ms } => Some(y_ms.clone()),
                _ => None,
            })
            .expect("MS sends its public value");
        let to_bs = st.exponent(rng);
        let to_ms = st.exponent(rng);

        let bs = st.victim(Role::Bs, rng);
        let out = st.deliver(
            bs,
            M::DhBareInit {
                y_ms: to_bs.public().clone(),
            },
        );
        let y_bs = out
            .iter()
            .find_map(|o| match &o.message {
                M::DhBareResp { y_bs } => Some(y_bs.clone()),
                _ => None,
            })
            .expect("BS answers with its public value");
        st.deliver(
            ms,
            M::DhBareResp {
                y_bs: to_ms.public().clone(),
            },
        );
        for (own, peer) in [(&to_ms, &y_ms), (&to_bs, &y_bs)] {
            if let Ok(k) = own.derive_ak(peer, &group) {
                st.keys.push(k.0);
            }
        }
        let broken = Self::mitm_verdict(&st);
        let keys: Vec<String> = st.keys.iter().map(|k| format!("{:x}", k)).collect();
        let evidence = format!("{}; attacker-shared keys [{}]", Self::summary(&st, &[]), keys.join(", "));
        st.finish(Attack::Mitm, broken, evidence, None)
    }

    /// Whether the unauthenticated pre-authentication message of a PKM
    /// exchange can be replayed or forged without the BS objecting.
    pub fn preauth_probe<R: RngCore + ?Sized>(&self, protocol: Protocol, rng: &mut R) -> Option<String> {
        if !matches!(protocol, Protocol::Pkmv1 | Protocol::Pkmv2) {
            return None;
        }
        let recorded = self.honest(protocol, rng);
        let info = recorded
            .victims
            .iter()
            .find(|v| v.record.role == Role::Bs)
            .and_then(|v| v.record.inputs.first().cloned())?;
        let forged = match &info {
            M::Pkmv1AuthInfo { .. } => M::Pkmv1AuthInfo {
                manufacturer_cert: self.lab.attacker.manufacturer_cert.clone(),
            },
            _ => M::Pkmv2AuthInfo {
                manufacturer_cert: self.lab.attacker.manufacturer_cert.clone(),
            },
        };
        let mut st = Stage::new(self, protocol);
        let replayed = st.victim(Role::Bs, rng);
        st.deliver(replayed, info.clone());
        let spoofed = st.victim(Role::Bs, rng);
        st.deliver(spoofed, forged);
        let open = |v: usize| !st.victims[v].state.is_terminal();
        (open(replayed) && open(spoofed)).then(|| {
            format!(
                "BS took a replayed and a forged {} without an integrity check",
                info.variant()
            )
        })
    }

    /// Re-runs each recorded victim and confirms the outcome's claims: the
    /// same verdicts and keys, and for a broken outcome keys the attacker
    /// really holds.
    pub fn verify(&self, outcome: &AttackOutcome) -> bool {
        for rec in &outcome.victims {
            let mut state = self.fresh_session(outcome.protocol, rec.role);
            let mut rng = LabRng::seed_from_u64(rec.rng_seed);
            if rec.started {
                state = state.advance(None, &mut rng).1;
            }
            for m in &rec.inputs {
                state = state.advance(Some(m), &mut rng).1;
            }
            let key = state.derived_key.as_ref().map(|k| k.value.clone());
            if state.verdict != rec.verdict || key != rec.key {
                return false;
            }
        }
        if !outcome.broken {
            return true;
        }
        let held = |k: &BigUint| outcome.attacker_keys.contains(k) || outcome.recorded_key.as_ref() == Some(k);
        match outcome.attack {
            Attack::Mitm => outcome
                .victims
                .iter()
                .all(|v| v.verdict.is_accepted() && v.key.as_ref().is_none_or(held)),
            Attack::Replay => outcome
                .victims
                .iter()
                .any(|v| v.verdict.is_accepted() && v.key.as_ref().is_some_and(held)),
            Attack::Interception => outcome.victims.iter().any(|v| v.key_derivable),
        }
    }
}

/// Runs one attack against a fresh population derived from `seed`.
pub fn run_attack(protocol: Protocol, attack: Attack, seed: u64) -> AttackOutcome {
    let harness = Harness::new(seed);
    harness.run(protocol, attack, &mut LabRng::seed_from_u64(seed))
}
