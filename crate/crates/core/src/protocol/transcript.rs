use serde::{Deserialize, Serialize};

use super::message::ProtocolMessage;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: u32,
    pub sender: String,
    pub receiver: String,
    pub message: ProtocolMessage,
}

/// Append-only record of delivered messages.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sender: &str, receiver: &str, message: ProtocolMessage) -> u32 {
        let step = self.entries.last().map_or(1, |e| e.step + 1);
        self.entries.push(TranscriptEntry {
            step,
            sender: sender.to_owned(),
            receiver: receiver.to_owned(),
            message,
        });
        step
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains_variant(&self, variant: &str) -> bool {
        self.entries.iter().any(|e| e.message.variant() == variant)
    }

    /// One line per message: `step|sender|receiver|variant|field=value,...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let fields: Vec<String> = e
                .message
                .fields()
                .into_iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            out.push_str(&format!(
                "{}|{}|{}|{}|{}\n",
                e.step,
                e.sender,
                e.receiver,
                e.message.variant(),
                fields.join(",")
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript is always serializable")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        let t: Transcript = serde_json::from_str(s)?;
        let increasing = t.entries.windows(2).all(|w| w[0].step < w[1].step);
        if !increasing {
            return Err(serde::de::Error::custom("step indices must strictly increase"));
        }
        Ok(t)
    }
}
