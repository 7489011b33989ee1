//! The attack × protocol resistance matrix.

use std::fmt::Write as _;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::attacks::{Attack, AttackOutcome, Harness};
use crate::protocol::Protocol;

/// Column order of the rendered matrix: the three analysed protocols, then
/// PKMv1 and the anonymous Diffie-Hellman baseline.
pub const MATRIX_PROTOCOLS: [Protocol; 5] = [
    Protocol::Pkmv2,
    Protocol::EapTls,
    Protocol::DhProposed,
    Protocol::Pkmv1,
    Protocol::DhBare,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rating {
    Resistant,
    /// The core exchange holds but an unauthenticated pre-authentication
    /// message can be replayed or forged.
    ConditionallyWeak,
    Vulnerable,
}

impl Rating {
    pub fn label(self) -> &'static str {
        match self {
            Rating::Resistant => "resistant",
            Rating::ConditionallyWeak => "conditionally-weak (pre-auth messages)",
            Rating::Vulnerable => "vulnerable",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub outcome: AttackOutcome,
    pub rating: Rating,
    /// Pre-authentication finding behind a conditionally-weak rating.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackMatrix {
    pub cells: Vec<MatrixCell>,
}

fn column_label(p: Protocol) -> String {
    match p {
        Protocol::Pkmv1 => "pkmv1 (extension)".into(),
        Protocol::DhBare => "dh-bare (baseline)".into(),
        p => p.name().into(),
    }
}

/// Runs every attack against every protocol in [`MATRIX_PROTOCOLS`].
pub fn attack_matrix<R: RngCore + ?Sized>(harness: &Harness, rng: &mut R) -> AttackMatrix {
    let mut cells = Vec::new();
    for protocol in MATRIX_PROTOCOLS {
        let probe = harness.preauth_probe(protocol, rng);
        for attack in Attack::ALL {
            let outcome = harness.run(protocol, attack, rng);
            let weak = probe.is_some() && attack != Attack::Interception;
            let rating = match (outcome.broken, weak) {
                (true, _) => Rating::Vulnerable,
                (false, true) => Rating::ConditionallyWeak,
                (false, false) => Rating::Resistant,
            };
            let note = if weak { probe.clone() } else { None };
            cells.push(MatrixCell { outcome, rating, note });
        }
    }
    AttackMatrix { cells }
}

impl AttackMatrix {
    pub fn cell(&self, protocol: Protocol, attack: Attack) -> Option<&MatrixCell> {
        self.cells
            .iter()
            .find(|c| c.outcome.protocol == protocol && c.outcome.attack == attack)
    }

    fn protocols(&self) -> Vec<Protocol> {
        MATRIX_PROTOCOLS
            .into_iter()
            .filter(|p| self.cells.iter().any(|c| c.outcome.protocol == *p))
            .collect()
    }

    /// Attacks down, protocols across, columns padded to their widest cell.
    pub fn render_text(&self) -> String {
        let protocols = self.protocols();
        let mut rows = vec![std::iter::once("attack".to_owned())
            .chain(protocols.iter().map(|p| column_label(*p)))
            .collect::<Vec<_>>()];
        for attack in Attack::ALL {
            let mut row = vec![attack.name().to_owned()];
            for p in &protocols {
                row.push(self.cell(*p, attack).map_or("-", |c| c.rating.label()).to_owned());
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }

    /// `protocol -> attack -> {broken, rating, evidence}`.
    pub fn to_json(&self) -> Value {
        let mut top = Map::new();
        for p in self.protocols() {
            let mut row = Map::new();
            for attack in Attack::ALL {
                let Some(c) = self.cell(p, attack) else { continue };
                let mut cell = json!({
                    "broken": c.outcome.broken,
                    "rating": c.rating.label(),
                    "evidence": c.outcome.evidence,
                });
                if let Some(note) = &c.note {
                    cell["note"] = json!(note);
                }
                match p {
                    Protocol::Pkmv1 => cell["label"] = json!("extension"),
                    Protocol::DhBare => cell["label"] = json!("baseline"),
                    _ => {}
                }
                row.insert(attack.name().to_owned(), cell);
            }
            top.insert(p.name().to_owned(), Value::Object(row));
        }
        Value::Object(top)
    }
}
