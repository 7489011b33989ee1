//! Seeded random simulation with marking-size monitors.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::marking::{enabled, fire, next_enabled_time, Marking, Time};
use super::net::{Binding, Net};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub step: usize,
    pub time: Time,
    pub value: usize,
}

/// Samples of one marking-size monitor. A sample is taken for the initial
/// marking, after every step whose transition is connected to the place,
/// and once more when the run ends.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorLog {
    pub name: String,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogError {
    #[error("line {line}: expected `step;model_time;value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("log has no header line")]
    MissingHeader,
}

impl MonitorLog {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            samples: Vec::new(),
        }
    }

    /// Model time covered by the log.
    pub fn span(&self) -> Time {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.time - a.time,
            _ => 0,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("#{}\n", self.name);
        for x in &self.samples {
            let _ = writeln!(s, "{};{};{}", x.step, x.time, x.value);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let name = match lines.next() {
            Some((_, l)) if l.starts_with('#') => l[1..].trim().to_owned(),
            _ => return Err(LogError::MissingHeader),
        };
        let mut log = MonitorLog::new(name);
        for (i, l) in lines {
            let bad = || LogError::Malformed {
                line: i + 1,
                text: l.to_owned(),
            };
            let mut parts = l.trim().split(';');
            let mut next = || parts.next().ok_or_else(bad);
            let step = next()?.trim().parse().map_err(|_| bad())?;
            let time = next()?.trim().parse().map_err(|_| bad())?;
            let value = next()?.trim().parse().map_err(|_| bad())?;
            if parts.next().is_some() {
                return Err(bad());
            }
            log.samples.push(Sample { step, time, value });
        }
        Ok(log)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub step: usize,
    pub time: Time,
    pub transition: String,
    pub binding: Binding,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationRun {
    pub net: String,
    pub steps: Vec<Step>,
    pub model_time: Time,
    /// False when the run stopped at the step limit with work left.
    pub finished: bool,
    pub final_marking: Marking,
    pub monitors: Vec<MonitorLog>,
}

/// CPN Tools style monitor name for the marking size of `place`.
pub fn monitor_name(net: &Net, place: usize) -> String {
    format!("Marking_size_{}'{}_1", net.name(), net.places()[place].id)
}

/// Repeatedly fires a uniformly chosen enabled occurrence until none is
/// left or `max_steps` occurrences have fired.
pub fn simulate<R: Rng + ?Sized>(net: &Net, max_steps: usize, rng: &mut R) -> SimulationRun {
    let mut m = Marking::initial(net);
    let mut now = next_enabled_time(net, &m, 0).unwrap_or(0);
    let watched = net.monitored_places();
    let mut logs: Vec<MonitorLog> = watched
        .iter()
        .map(|&p| MonitorLog {
            name: monitor_name(net, p),
            samples: vec![Sample {
                step: 0,
                time: 0,
                value: m.size(p),
            }],
        })
        .collect();
    let mut steps = Vec::new();
    let finished = loop {
        let occs = enabled(net, &m, now);
        if occs.is_empty() {
            break true;
        }
        if steps.len() >= max_steps {
            break false;
        }
        let occ = &occs[rng.gen_range(0..occs.len())];
        let (next, after) = fire(net, &m, occ, now).expect("enabled occurrences fire");
        let step = steps.len() + 1;
        for (log, &p) in logs.iter_mut().zip(watched) {
            if net.touches(occ.transition, p) {
                log.samples.push(Sample {
                    step,
                    time: now,
                    value: next.size(p),
                });
            }
        }
        steps.push(Step {
            step,
            time: now,
            transition: net.transitions()[occ.transition].id.clone(),
            binding: occ.binding.clone(),
        });
        m = next;
        now = after;
    };
    for (log, &p) in logs.iter_mut().zip(watched) {
        log.samples.push(Sample {
            step: steps.len(),
            time: now,
            value: m.size(p),
        });
    }
    SimulationRun {
        net: net.name().to_owned(),
        steps,
        model_time: now,
        finished,
        final_marking: m,
        monitors: logs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_text_round_trips() {
        let log = MonitorLog {
            name: "Marking_size_n'p_1".into(),
            samples: vec![
                Sample { step: 0, time: 0, value: 2 },
                Sample { step: 3, time: 10, value: 1 },
            ],
        };
        assert_eq!(MonitorLog::parse(&log.to_text()).unwrap(), log);
        assert_eq!(log.span(), 10);
    }

    #[test]
    fn malformed_lines_are_reported() {
        assert_eq!(MonitorLog::parse("0;0;1\n"), Err(LogError::MissingHeader));
        let err = MonitorLog::parse("#m\n0;0;1\n1;x;2\n").unwrap_err();
        assert!(matches!(err, LogError::Malformed { line: 3, .. }));
        assert!(MonitorLog::parse("#m\n0;0;1;4\n").is_err());
    }
}
