use std::sync::OnceLock;

use num_bigint::BigUint;
use pkmlab::crypto::{CertError, DhGroup};
use pkmlab::protocol::*;
use pkmlab::LabRng;
use rand::SeedableRng;

fn lab() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| Lab::new(7))
}

fn rng(seed: u64) -> LabRng {
    LabRng::seed_from_u64(seed)
}

#[test]
fn pkmv1_honest() {
    let l = lab();
    let r = pkmv1_run(&l.ss, &l.bs, &l.anchor(), &mut rng(1));
    assert_eq!(r.transcript.len(), 3);
    assert!(r.all_accepted());
    assert!(r.keys_agree());
    assert_eq!(r.key(Role::Ss).unwrap().kind, KeyKind::Ak);
    assert!(r.key(Role::Ss).unwrap().value.bits() <= AK_BITS);
}

#[test]
fn pkmv1_untrusted_ss() {
    let l = lab();
    let rogue_ss = Principal::with_keys(l.ss.id.clone(), l.ss.keys.clone(), &l.rogue_ca);
    let r = pkmv1_run(&rogue_ss, &l.bs, &l.anchor(), &mut rng(1));
    assert_eq!(r.verdict(Role::Bs), Verdict::Rejected(RejectReason::Cert(CertError::UntrustedIssuer)));
    assert_eq!(r.verdict(Role::Ss), Verdict::InProgress);
    assert!(r.session(Role::Bs).pending.advisory.is_some());
}

#[test]
fn pkmv1_ss_never_checks_bs_credentials() {
    let l = lab();
    for seed in 0..20 {
        let r = pkmv1_run(&l.ss, &l.bs, &l.anchor(), &mut rng(seed));
        assert_eq!(r.session(Role::Ss).certificate_checks(), 0);
    }
}

#[test]
fn pkmv1_malformed_reply() {
    let l = lab();
    let ss = &l.sessions(Protocol::Pkmv1)[0];
    let (_, ss) = ss.advance(None, &mut rng(0));
    let bad = ProtocolMessage::Pkmv1AuthReply {
        enc_ak: l.ss.keys.modulus() + 1u32,
        ak_lifetime: 10,
        ak_seq: 1,
        sa_descriptors: vec![],
    };
    let (_, ss) = ss.advance(Some(&bad), &mut rng(0));
    assert_eq!(ss.verdict, Verdict::Rejected(RejectReason::Decode));
}

#[test]
fn pkmv2_honest() {
    let l = lab();
    let r = pkmv2_run(&l.ss, &l.bs, &l.anchor(), &mut rng(2));
    assert_eq!(r.transcript.len(), 4);
    assert!(r.all_accepted());
    assert!(r.keys_agree());
    assert_eq!(r.key(Role::Bs).unwrap().kind, KeyKind::PrePak);
}

#[test]
fn pkmv2_liveness_mismatch() {
    let l = lab();
    let mut s = l.sessions(Protocol::Pkmv2);
    let mut g = rng(3);
    let (out, ss) = s[0].advance(None, &mut g);
    s[0] = ss;
    let (_, bs) = s[1].advance(Some(&out[0].message), &mut g);
    let (reply, _) = bs.advance(Some(&out[1].message), &mut g);
    let mut msg = reply[0].message.clone();
    if let ProtocolMessage::Pkmv2AuthReply { n_s, .. } = &mut msg {
        n_s.0 ^= 1;
    }
    let (_, ss) = s[0].advance(Some(&msg), &mut g);
    assert_eq!(ss.verdict, Verdict::Rejected(RejectReason::Liveness));
}

#[test]
fn eap_honest() {
    let l = lab();
    let r = eap_tls_run(&l.ss, &l.authenticator, &l.server, &l.anchor(), &mut rng(4));
    assert_eq!(r.transcript.len(), 6);
    assert!(r.all_accepted());
    assert!(r.keys_agree());
    let last = r.transcript.entries().last().unwrap();
    assert_eq!(last.message, ProtocolMessage::RadiusAccessResult { success: true });
}

#[test]
fn eap_untrusted_server_gets_no_client_cert() {
    let l = lab();
    let rogue_server = Principal::with_keys(l.server.id.clone(), l.server.keys.clone(), &l.rogue_ca);
    let r = eap_tls_run(&l.ss, &l.authenticator, &rogue_server, &l.anchor(), &mut rng(4));
    assert!(!r.transcript.contains_variant("EapClientCert"));
    assert_eq!(r.verdict(Role::Ss), Verdict::Rejected(RejectReason::Cert(CertError::UntrustedIssuer)));
}

#[test]
fn eap_invalid_supplicant_denied() {
    let l = lab();
    let rogue_ss = Principal::with_keys(l.ss.id.clone(), l.ss.keys.clone(), &l.rogue_ca);
    let r = eap_tls_run(&rogue_ss, &l.authenticator, &l.server, &l.anchor(), &mut rng(4));
    let last = r.transcript.entries().last().unwrap();
    assert_eq!(last.message, ProtocolMessage::RadiusAccessResult { success: false });
    assert_eq!(r.verdict(Role::Authenticator), Verdict::Rejected(RejectReason::AccessDenied));
}

#[test]
fn dh_proposed_fixture_exponents() {
    let l = lab();
    let r = dh_proposed_run_with(
        &l.ss,
        &l.bs,
        &l.anchor(),
        &DhGroup::toy(),
        (Some(BigUint::from(6u32)), Some(BigUint::from(15u32))),
        &mut rng(5),
    );
    assert_eq!(r.transcript.len(), 4);
    assert!(r.all_accepted());
    assert_eq!(r.key(Role::Ss).unwrap().value, BigUint::from(2u32));
    assert_eq!(r.key(Role::Bs).unwrap().value, BigUint::from(2u32));
}

#[test]
fn dh_proposed_realistic_group() {
    let l = lab();
    let r = dh_proposed_run(&l.ss, &l.bs, &l.anchor(), &DhGroup::realistic(), &mut rng(6));
    assert!(r.all_accepted());
    assert!(r.keys_agree());
}

#[test]
fn dh_proposed_substituted_y_ms() {
    let l = lab();
    let mut s = l.sessions(Protocol::DhProposed);
    let mut g = rng(8);
    let (m1, ms) = s[0].advance(None, &mut g);
    s[0] = ms;
    let (m2, bs) = s[1].advance(Some(&m1[0].message), &mut g);
    let (m34, _) = s[0].advance(Some(&m2[0].message), &mut g);
    let mut m3 = m34[0].message.clone();
    if let ProtocolMessage::DhM3 { y_ms, .. } = &mut m3 {
        *y_ms = if *y_ms == BigUint::from(5u32) { BigUint::from(7u32) } else { BigUint::from(5u32) };
    }
    let (_, bs) = bs.advance(Some(&m3), &mut g);
    assert_eq!(bs.verdict, Verdict::Rejected(RejectReason::Binding));
}

#[test]
fn advance_initiator_and_terminal_absorption() {
    let l = lab();
    let ms = &l.sessions(Protocol::DhProposed)[0];
    let (out, _) = ms.advance(None, &mut rng(0));
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].message.variant(), "DhM1");

    let r = l.run(Protocol::DhProposed, &mut rng(0));
    let done = r.session(Role::Bs);
    assert_eq!(done.verdict, Verdict::Accepted);
    let (out, after) = done.advance(Some(&r.transcript.entries()[0].message), &mut rng(0));
    assert!(out.is_empty());
    assert_eq!(after.verdict, Verdict::Rejected(RejectReason::OutOfOrder));
    assert_eq!(done.verdict, Verdict::Accepted);
}

#[test]
fn inadmissible_message_leaves_original_untouched() {
    let l = lab();
    let bs = &l.sessions(Protocol::Pkmv2)[1];
    let (_, after) = bs.advance(Some(&ProtocolMessage::EapIdentityRequest), &mut rng(0));
    assert_eq!(after.verdict, Verdict::Rejected(RejectReason::OutOfOrder));
    assert_eq!(bs.verdict, Verdict::InProgress);
    assert_eq!(bs.phase, Phase::AwaitAuthInfo);
}

#[test]
fn key_agreement_over_many_seeds() {
    let l = lab();
    for protocol in [Protocol::Pkmv1, Protocol::Pkmv2, Protocol::DhProposed] {
        for seed in 0..1000 {
            let r = l.run(protocol, &mut rng(seed));
            assert!(r.all_accepted() && r.keys_agree(), "{protocol} seed {seed}");
        }
    }
}

#[test]
fn message_counts() {
    let l = lab();
    for p in Protocol::ALL {
        assert_eq!(l.run(p, &mut rng(11)).transcript.len(), p.honest_message_count(), "{p}");
    }
}

/// Delivers messages by hand, independently of the library driver.
fn manual_fold(protocol: Protocol, seed: u64) -> Transcript {
    let l = lab();
    let mut sessions = l.sessions(protocol);
    let mut g = rng(seed);
    let mut t = Transcript::new();
    let mut pending: Vec<(String, Outgoing)> = Vec::new();
    let (out, first) = sessions[0].advance(None, &mut g);
    pending.extend(out.into_iter().map(|o| (first.principal.name.clone(), o)));
    sessions[0] = first;
    while !pending.is_empty() {
        let (from, o) = pending.remove(0);
        t.push(&from, &o.to.name, o.message.clone());
        let idx = sessions.iter().position(|s| s.principal == o.to).unwrap();
        let (out, next) = sessions[idx].advance(Some(&o.message), &mut g);
        pending.extend(out.into_iter().map(|m| (next.principal.name.clone(), m)));
        sessions[idx] = next;
    }
    t
}

#[test]
fn fold_equivalence() {
    let l = lab();
    for p in [Protocol::Pkmv1, Protocol::Pkmv2, Protocol::EapTls, Protocol::DhProposed] {
        for seed in 0..100 {
            let a = manual_fold(p, seed);
            let b = l.run(p, &mut rng(seed)).transcript;
            assert_eq!(a.to_json(), b.to_json(), "{p} seed {seed}");
        }
    }
}

#[test]
fn transcript_formats() {
    let r = lab().run(Protocol::DhProposed, &mut rng(1));
    let text = r.transcript.to_text();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("1|ss-1|bs-1|DhM1|ms_cert=ss-1@wimax-ca"));
    assert!(lines[3].starts_with("4|ss-1|bs-1|DhM4|confirm="));
    let json = r.transcript.to_json();
    let back = Transcript::from_json(&json).unwrap();
    assert_eq!(back, r.transcript);
    assert_eq!(back.to_json(), json);
}

#[test]
fn protocol_names() {
    for p in Protocol::ALL {
        assert_eq!(p.name().parse::<Protocol>().unwrap(), p);
    }
    assert!("pkmv3".parse::<Protocol>().is_err());
}
