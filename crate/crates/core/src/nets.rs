//! Hand-built Petri net models of the analysed handshakes.
//!
//! Every transition takes five time units. Integer tokens on message places
//! carry message codes; certificate checks draw their outcome from a verdict
//! place so that rejection shows up as a separate branch of the state space.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::cpn::{int, plus, simulate, unit, var, ColorSet, Guard, Net, NetBuilder, Operand, SimulationRun, Value};
use crate::LabRng;

/// Delay of every transition.
pub const STEP_DELAY: u64 = 5;

fn v(name: &str) -> Operand {
    Operand::Var(name.into())
}

fn n(i: i64) -> Operand {
    Operand::Int(i)
}

fn ints(xs: &[i64]) -> Vec<Value> {
    xs.iter().map(|&i| Value::Int(i)).collect()
}

/// `m == msg && v` is one of `verdicts`, for each `(msg, verdicts)` row.
fn verdict_table(rows: &[(i64, &[i64])]) -> Guard {
    Guard::Any(
        rows.iter()
            .map(|(msg, verdicts)| {
                Guard::All(vec![
                    Guard::Eq(v("m"), n(*msg)),
                    Guard::Any(verdicts.iter().map(|x| Guard::Eq(v("v"), n(*x))).collect()),
                ])
            })
            .collect(),
    )
}

/// The proposed four-message exchange, run for two rounds.
///
/// `MS_Ready` carries the round number; `Send_M1` stops after round two.
/// The monitored places follow one token each: `recvie_ms` holds one
/// credit per round, `b` holds the MS exponent between M3 and M4 and
/// `Data_Received` is read once per completed round.
pub fn build_proposed_net() -> Net {
    let t = ["Send_M1", "Send_M2", "Send_M3", "Send_M4", "Derive_AK"];
    NetBuilder::new("proposed", STEP_DELAY)
        .place("MS_Ready", ColorSet::Int, ints(&[1]))
        .place("M1_Sent", ColorSet::Int, vec![])
        .place("M2_Sent", ColorSet::Int, vec![])
        .place("M3_Sent", ColorSet::Int, vec![])
        .place("M4_Sent", ColorSet::Int, vec![])
        .place("recvie_ms", ColorSet::Unit, vec![Value::Unit, Value::Unit])
        .place("Nonce", ColorSet::Int, vec![])
        .place("b", ColorSet::Int, vec![])
        .place("Data_Received", ColorSet::Unit, vec![Value::Unit])
        .place("AK", ColorSet::Int, vec![])
        .transition(t[0], Guard::Le(v("r"), n(2)))
        .transition(t[1], Guard::True)
        .transition(t[2], Guard::True)
        .transition(t[3], Guard::True)
        .transition(t[4], Guard::True)
        // M1: MS certificate
        .input("MS_Ready", t[0], var("r"))
        .output(t[0], "M1_Sent", var("r"))
        // M2: BS certificate, Y_BS, encrypted nonce, binding tag
        .input("M1_Sent", t[1], var("r"))
        .input("recvie_ms", t[1], unit())
        .output(t[1], "M2_Sent", var("r"))
        .output(t[1], "Nonce", var("r"))
        // M3: Y_MS and the MS binding tag
        .input("M2_Sent", t[2], var("r"))
        .input("Nonce", t[2], var("r"))
        .output(t[2], "M3_Sent", var("r"))
        .output(t[2], "b", var("r"))
        // M4: key confirmation
        .input("M3_Sent", t[3], var("r"))
        .input("b", t[3], var("r"))
        .output(t[3], "M4_Sent", var("r"))
        .input("M4_Sent", t[4], var("r"))
        .input("Data_Received", t[4], unit())
        .output(t[4], "Data_Received", unit())
        .output(t[4], "AK", var("r"))
        .output(t[4], "MS_Ready", plus("r", 1))
        .monitor("Data_Received")
        .monitor("b")
        .monitor("recvie_ms")
        .build()
        .expect("proposed net is well formed")
}

/// Message codes on the PKMv2 channel.
pub mod pkmv2_codes {
    pub const AUTH_INFO: i64 = 1;
    pub const AUTH_REQUEST: i64 = 2;
    pub const AUTH_REPLY: i64 = 3;
    pub const AUTH_ACK: i64 = 4;
}

/// PKMv2 RSA authorisation: AuthInfo, AuthRequest, AuthReply, AuthAck,
/// with the receiver checking each of the last three. The SS certificate
/// and the BS reply can fail validation; the ack checksum cannot.
pub fn build_pkmv2_net() -> Net {
    use pkmv2_codes::*;
    let t = ["Send_AuthInfo", "Send_AuthRequest", "Send_AuthReply", "Send_AuthAck", "Verify"];
    NetBuilder::new("pkmv2", STEP_DELAY)
        .place("SS_Start", ColorSet::Unit, vec![Value::Unit])
        .place("Manufacturer_Cert", ColorSet::Unit, vec![Value::Unit])
        .place("SS_Cert", ColorSet::Unit, vec![Value::Unit])
        .place("BS_Cert", ColorSet::Unit, vec![Value::Unit])
        .place("SS_Nonce", ColorSet::Unit, vec![Value::Unit])
        .place("BS_Nonce", ColorSet::Unit, vec![Value::Unit])
        .place("Pre_PAK", ColorSet::Unit, vec![Value::Unit])
        .place("Info_Received", ColorSet::Unit, vec![])
        .place("Channel", ColorSet::Int, vec![])
        // positive: the message passes its check, negative: it is rejected
        .place(
            "Verdict",
            ColorSet::Int,
            ints(&[AUTH_REQUEST, -AUTH_REQUEST, AUTH_REPLY, -AUTH_REPLY, AUTH_ACK]),
        )
        .place("Checked", ColorSet::Int, vec![])
        .place("AK", ColorSet::Int, vec![])
        .transition(t[0], Guard::True)
        .transition(t[1], Guard::True)
        .transition(t[2], Guard::True)
        .transition(t[3], Guard::True)
        .transition(
            t[4],
            verdict_table(&[
                (AUTH_REQUEST, &[AUTH_REQUEST, -AUTH_REQUEST]),
                (AUTH_REPLY, &[AUTH_REPLY, -AUTH_REPLY]),
                (AUTH_ACK, &[AUTH_ACK]),
            ]),
        )
        .input("SS_Start", t[0], unit())
        .input("Manufacturer_Cert", t[0], unit())
        .output(t[0], "Channel", int(AUTH_INFO))
        .input("Channel", t[1], int(AUTH_INFO))
        .input("SS_Cert", t[1], unit())
        .input("SS_Nonce", t[1], unit())
        .output(t[1], "Info_Received", unit())
        .output(t[1], "Channel", int(AUTH_REQUEST))
        .input("Checked", t[2], int(AUTH_REQUEST))
        .input("BS_Cert", t[2], unit())
        .input("BS_Nonce", t[2], unit())
        .input("Pre_PAK", t[2], unit())
        .output(t[2], "Channel", int(AUTH_REPLY))
        .output(t[2], "AK", int(2))
        .input("Checked", t[3], int(AUTH_REPLY))
        .output(t[3], "Channel", int(AUTH_ACK))
        .output(t[3], "AK", int(1))
        .input("Channel", t[4], var("m"))
        .input("Verdict", t[4], var("v"))
        .output(t[4], "Checked", var("v"))
        .build()
        .expect("pkmv2 net is well formed")
}

/// Message codes and principals of the EAP-TLS net.
pub mod eap_codes {
    pub const IDENTITY_REQUEST: i64 = 1;
    pub const IDENTITY_RESPONSE: i64 = 2;
    pub const SERVER_CERT: i64 = 3;
    pub const CLIENT_CERT: i64 = 4;
    pub const SUCCESS: i64 = 5;
    pub const SUPPLICANT: i64 = 1;
    pub const SERVER: i64 = 2;
}

/// EAP-TLS through a relaying access point.
///
/// Only the `clock` place is timed, so independent steps of the supplicant
/// and the server interleave without changing the model time. `Idle` holds
/// the principals ready to receive a frame: the supplicant derives its MSK
/// while the server checks its certificate, and only then gets the EAP
/// Success frame.
pub fn build_eap_net() -> Net {
    use eap_codes::*;
    let t = [
        "Identity_Request",
        "Identity_Response",
        "Relay_To_AS",
        "Access_Challenge",
        "Relay_To_Supplicant",
        "Verify_Cert",
        "Client_Cert",
        "Derive_MSK",
        "Access_Accept",
    ];
    let mut b = NetBuilder::new("eap", STEP_DELAY)
        .place("clock", ColorSet::Unit, vec![Value::Unit])
        .untimed_place("AP_Start", ColorSet::Unit, vec![Value::Unit])
        .untimed_place("Identity", ColorSet::Unit, vec![Value::Unit])
        .untimed_place("Server_Cert", ColorSet::Unit, vec![Value::Unit])
        .untimed_place("Supplicant_Cert", ColorSet::Unit, vec![Value::Unit])
        .untimed_place("Idle", ColorSet::Int, ints(&[SUPPLICANT, SERVER]))
        .untimed_place("Delivered", ColorSet::Int, vec![])
        .untimed_place("From_Supplicant", ColorSet::Int, vec![])
        .untimed_place("From_AS", ColorSet::Int, vec![])
        // server certificate valid or forged, supplicant certificate valid
        .untimed_place("Cert_Status", ColorSet::Int, ints(&[SERVER_CERT, -SERVER_CERT, SERVER]))
        .untimed_place("Key_Ready", ColorSet::Int, vec![])
        .untimed_place("MSK", ColorSet::Int, vec![]);
    for id in &t[..5] {
        b = b.transition(id, Guard::True);
    }
    b = b
        .transition(
            t[5],
            verdict_table(&[(SERVER_CERT, &[SERVER_CERT, -SERVER_CERT]), (CLIENT_CERT, &[SERVER])]),
        )
        .transition(t[6], Guard::True)
        .transition(t[7], Guard::All(vec![Guard::Le(n(SUPPLICANT), v("p")), Guard::Le(v("p"), n(SERVER))]))
        .transition(t[8], Guard::True);
    for id in t {
        b = b.input("clock", id, unit()).output(id, "clock", unit());
    }
    b.input("AP_Start", t[0], unit())
        .input("Idle", t[0], int(SUPPLICANT))
        .output(t[0], "Delivered", int(IDENTITY_REQUEST))
        .input("Delivered", t[1], int(IDENTITY_REQUEST))
        .input("Identity", t[1], unit())
        .output(t[1], "From_Supplicant", int(IDENTITY_RESPONSE))
        .output(t[1], "Idle", int(SUPPLICANT))
        .input("From_Supplicant", t[2], var("m"))
        .input("Idle", t[2], int(SERVER))
        .output(t[2], "Delivered", var("m"))
        .input("Delivered", t[3], int(IDENTITY_RESPONSE))
        .input("Server_Cert", t[3], unit())
        .output(t[3], "From_AS", int(SERVER_CERT))
        .output(t[3], "Idle", int(SERVER))
        .input("From_AS", t[4], var("m"))
        .input("Idle", t[4], int(SUPPLICANT))
        .output(t[4], "Delivered", var("m"))
        .input("Delivered", t[5], var("m"))
        .input("Cert_Status", t[5], var("v"))
        .output(t[5], "Key_Ready", var("v"))
        .input("Key_Ready", t[6], int(SERVER_CERT))
        .input("Supplicant_Cert", t[6], unit())
        .output(t[6], "From_Supplicant", int(CLIENT_CERT))
        .output(t[6], "Key_Ready", int(SUPPLICANT))
        .input("Key_Ready", t[7], var("p"))
        .output(t[7], "MSK", var("p"))
        .output(t[7], "Idle", var("p"))
        .input("MSK", t[8], int(SERVER))
        .output(t[8], "From_AS", int(SUCCESS))
        .build()
        .expect("eap net is well formed")
}

/// Figures a catalog net is expected to produce.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub places: usize,
    pub transitions: usize,
    /// Steps of the canonical run.
    pub steps: usize,
    /// `steps` times the step delay.
    pub model_time: u64,
    /// Model time as published, where it differs from `model_time`.
    pub published_model_time: Option<u64>,
    pub ss_nodes: usize,
    pub ss_arcs: usize,
    pub dead_markings: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetCatalogEntry {
    pub name: &'static str,
    pub net: Net,
    pub expected: Expected,
    /// Simulation seed whose run reaches the accepting marking.
    pub canonical_seed: u64,
}

impl NetCatalogEntry {
    pub fn canonical_run(&self) -> SimulationRun {
        simulate(&self.net, 1_000, &mut LabRng::seed_from_u64(self.canonical_seed))
    }
}

pub const NET_NAMES: [&str; 3] = ["pkmv2", "eap", "proposed"];

pub fn net_by_name(name: &str) -> Option<Net> {
    match name {
        "pkmv2" => Some(build_pkmv2_net()),
        "eap" => Some(build_eap_net()),
        "proposed" => Some(build_proposed_net()),
        _ => None,
    }
}

pub fn catalog() -> Vec<NetCatalogEntry> {
    let entry = |name, net: Net, steps: usize, published, nodes, arcs, dead, seed| NetCatalogEntry {
        name,
        expected: Expected {
            places: net.places().len(),
            transitions: net.transitions().len(),
            steps,
            model_time: steps as u64 * STEP_DELAY,
            published_model_time: published,
            ss_nodes: nodes,
            ss_arcs: arcs,
            dead_markings: dead,
        },
        net,
        canonical_seed: seed,
    };
    vec![
        entry("pkmv2", build_pkmv2_net(), 7, Some(40), 10, 9, 3, 1),
        entry("eap", build_eap_net(), 13, Some(90), 19, 22, 2, 1),
        entry("proposed", build_proposed_net(), 10, None, 11, 10, 1, 0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve_to_matching_nets() {
        for name in NET_NAMES {
            assert_eq!(net_by_name(name).unwrap().name(), name);
        }
        assert!(net_by_name("simple").is_none());
        let names: Vec<_> = catalog().into_iter().map(|e| e.name).collect();
        assert_eq!(names, NET_NAMES);
    }

    #[test]
    fn only_the_first_send_is_enabled_initially() {
        let net = build_proposed_net();
        let occ = crate::cpn::enabled(&net, &crate::cpn::Marking::initial(&net), 0);
        assert_eq!(occ.len(), 1);
        assert_eq!(occ[0].label(&net), "Send_M1 {r=1}");
    }
}
