//! Timed markings and the occurrence rule.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::net::{ArcExpr, Binding, Net, Value};

/// Model time in whole time units.
pub type Time = u64;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token {
    pub value: Value,
    /// Earliest time at which the token may be consumed.
    pub time: Time,
}

/// Tokens per place, each multiset kept sorted so equal markings compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Marking(Vec<Vec<Token>>);

impl Marking {
    pub fn initial(net: &Net) -> Self {
        let mut m = Marking(
            net.places()
                .iter()
                .map(|p| p.initial.iter().map(|v| Token { value: v.clone(), time: 0 }).collect())
                .collect(),
        );
        m.0.iter_mut().for_each(|ts| ts.sort());
        m
    }

    pub fn tokens(&self, place: usize) -> &[Token] {
        &self.0[place]
    }

    pub fn size(&self, place: usize) -> usize {
        self.0[place].len()
    }

    fn add(&mut self, place: usize, t: Token) {
        let ts = &mut self.0[place];
        let at = ts.binary_search(&t).unwrap_or_else(|i| i);
        ts.insert(at, t);
    }

    /// Removes the earliest ready token carrying `value`.
    fn take(&mut self, place: usize, value: &Value, now: Time) -> bool {
        let ts = &mut self.0[place];
        match ts.iter().position(|t| &t.value == value && t.time <= now) {
            Some(i) => {
                ts.remove(i);
                true
            }
            None => false,
        }
    }

    fn ready_count(&self, place: usize, value: &Value, now: Time) -> usize {
        self.0[place].iter().filter(|t| &t.value == value && t.time <= now).count()
    }

    fn latest(&self) -> Time {
        self.0.iter().flatten().map(|t| t.time).max().unwrap_or(0)
    }

    /// `place: value@time, ...` for every non-empty place, in net order.
    pub fn describe(&self, net: &Net) -> String {
        let mut parts = Vec::new();
        for (p, ts) in self.0.iter().enumerate() {
            if ts.is_empty() {
                continue;
            }
            let toks: Vec<String> = ts
                .iter()
                .map(|t| match net.places()[p].timed {
                    true => format!("{}@{}", t.value, t.time),
                    false => t.value.to_string(),
                })
                .collect();
            parts.push(format!("{}: {}", net.places()[p].id, toks.join(" ++ ")));
        }
        parts.join("; ")
    }
}

/// An enabled transition occurrence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Occurrence {
    pub transition: usize,
    pub binding: Binding,
}

impl Occurrence {
    pub fn label(&self, net: &Net) -> String {
        let id = &net.transitions()[self.transition].id;
        if self.binding.is_empty() {
            return id.clone();
        }
        let vars: Vec<String> = self.binding.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{id} {{{}}}", vars.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FireError {
    #[error("transition index {0} does not exist")]
    NoSuchTransition(usize),
    #[error("{0} is not enabled in the given marking at the given time")]
    NotEnabled(String),
}

impl fmt::Display for Occurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {:?}", self.transition, self.binding)
    }
}

fn bindings_of(net: &Net, m: &Marking, t: usize, now: Time) -> BTreeSet<Binding> {
    fn go(
        net: &Net,
        m: &Marking,
        t: usize,
        now: Time,
        i: usize,
        b: &mut Binding,
        used: &mut Vec<(usize, Value)>,
        out: &mut BTreeSet<Binding>,
    ) {
        let arcs = net.inputs(t);
        if i == arcs.len() {
            if net.transitions()[t].guard.holds(b) {
                out.insert(b.clone());
            }
            return;
        }
        let arc = &arcs[i];
        let free = |v: &Value, used: &[(usize, Value)]| {
            let taken = used.iter().filter(|(p, u)| *p == arc.place && u == v).count();
            m.ready_count(arc.place, v, now) > taken
        };
        let fixed = match &arc.expr {
            ArcExpr::Const(v) => Some(v.clone()),
            ArcExpr::Var(x) => b.get(x).cloned(),
            ArcExpr::Add(..) => unreachable!("rejected at construction"),
        };
        match fixed {
            Some(v) => {
                if free(&v, used) {
                    used.push((arc.place, v));
                    go(net, m, t, now, i + 1, b, used, out);
                    used.pop();
                }
            }
            None => {
                let ArcExpr::Var(x) = &arc.expr else { unreachable!() };
                let mut values: Vec<&Value> = m.tokens(arc.place).iter().map(|t| &t.value).collect();
                values.dedup();
                for v in values {
                    if !free(v, used) {
                        continue;
                    }
                    b.insert(x.clone(), v.clone());
                    used.push((arc.place, v.clone()));
                    go(net, m, t, now, i + 1, b, used, out);
                    used.pop();
                    b.remove(x);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(net, m, t, now, 0, &mut Binding::new(), &mut Vec::new(), &mut out);
    out
}

/// Every transition occurrence enabled in `m` at time `now`, ordered by
/// transition index and then binding.
pub fn enabled(net: &Net, m: &Marking, now: Time) -> Vec<Occurrence> {
    (0..net.transitions().len())
        .flat_map(|t| {
            bindings_of(net, m, t, now)
                .into_iter()
                .map(move |binding| Occurrence { transition: t, binding })
        })
        .collect()
}

/// The earliest time not before `now` at which some occurrence is enabled.
pub fn next_enabled_time(net: &Net, m: &Marking, now: Time) -> Option<Time> {
    let mut times: Vec<Time> = std::iter::once(now)
        .chain(m.0.iter().flatten().map(|t| t.time).filter(|&t| t > now))
        .collect();
    times.sort_unstable();
    times.dedup();
    times.into_iter().find(|&t| !enabled(net, m, t).is_empty())
}

fn eval(expr: &ArcExpr, b: &Binding) -> Value {
    match expr {
        ArcExpr::Const(v) => v.clone(),
        ArcExpr::Var(x) => b[x].clone(),
        ArcExpr::Add(x, k) => match &b[x] {
            Value::Int(i) => Value::Int(i + k),
            other => other.clone(),
        },
    }
}

/// Fires `occ` at `now`. Returns the successor marking and the new model
/// time: the earliest time something is enabled again, or the time of the
/// latest token when the successor is dead.
pub fn fire(net: &Net, m: &Marking, occ: &Occurrence, now: Time) -> Result<(Marking, Time), FireError> {
    let t = occ.transition;
    let tr = net.transitions().get(t).ok_or(FireError::NoSuchTransition(t))?;
    if !bindings_of(net, m, t, now).contains(&occ.binding) {
        return Err(FireError::NotEnabled(occ.label(net)));
    }
    let mut next = m.clone();
    for arc in net.inputs(t) {
        let v = eval(&arc.expr, &occ.binding);
        let ok = next.take(arc.place, &v, now);
        debug_assert!(ok);
    }
    for arc in net.outputs(t) {
        let value = eval(&arc.expr, &occ.binding);
        let time = if net.places()[arc.place].timed { now + tr.delay } else { 0 };
        next.add(arc.place, Token { value, time });
    }
    let after = next_enabled_time(net, &next, now).unwrap_or_else(|| now.max(next.latest()));
    Ok((next, after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpn::net::{int, plus, unit, var, ColorSet, Guard, NetBuilder, Operand};

    fn counter() -> Net {
        NetBuilder::new("counter", 5)
            .place("n", ColorSet::Int, vec![Value::Int(0)])
            .transition("inc", Guard::Lt(Operand::Var("x".into()), Operand::Int(2)))
            .input("n", "inc", var("x"))
            .output("inc", "n", plus("x", 1))
            .build()
            .unwrap()
    }

    #[test]
    fn guard_limits_occurrences() {
        let net = counter();
        let mut m = Marking::initial(&net);
        let mut now = 0;
        let mut steps = 0;
        while let Some(occ) = enabled(&net, &m, now).into_iter().next() {
            (m, now) = fire(&net, &m, &occ, now).unwrap();
            steps += 1;
        }
        assert_eq!(steps, 2);
        assert_eq!(now, 10);
        assert_eq!(m.tokens(0)[0].value, Value::Int(2));
    }

    #[test]
    fn firing_a_disabled_occurrence_is_an_error() {
        let net = counter();
        let m = Marking::initial(&net);
        let occ = Occurrence {
            transition: 0,
            binding: [("x".to_owned(), Value::Int(7))].into(),
        };
        assert!(matches!(fire(&net, &m, &occ, 0), Err(FireError::NotEnabled(_))));
        let occ = Occurrence {
            transition: 3,
            binding: Binding::new(),
        };
        assert_eq!(fire(&net, &m, &occ, 0), Err(FireError::NoSuchTransition(3)));
    }

    #[test]
    fn timed_tokens_wait_for_the_clock() {
        let net = counter();
        let m = Marking::initial(&net);
        let occ = enabled(&net, &m, 0).remove(0);
        let (m, now) = fire(&net, &m, &occ, 0).unwrap();
        assert_eq!(now, 5);
        assert!(enabled(&net, &m, 4).is_empty());
        assert_eq!(enabled(&net, &m, 5).len(), 1);
    }

    #[test]
    fn one_token_is_not_consumed_twice() {
        let net = NetBuilder::new("pair", 5)
            .untimed_place("p", ColorSet::Unit, vec![Value::Unit])
            .place("q", ColorSet::Unit, vec![])
            .transition("t", Guard::True)
            .input("p", "t", unit())
            .input("p", "t", unit())
            .output("t", "q", unit())
            .build()
            .unwrap();
        let m = Marking::initial(&net);
        assert!(enabled(&net, &m, 0).is_empty());
    }

    #[test]
    fn distinct_values_give_distinct_bindings() {
        let net = NetBuilder::new("choice", 5)
            .untimed_place("p", ColorSet::Int, vec![Value::Int(1), Value::Int(2), Value::Int(2)])
            .place("q", ColorSet::Int, vec![])
            .transition("t", Guard::Ne(Operand::Var("x".into()), Operand::Int(3)))
            .input("p", "t", var("x"))
            .output("t", "q", var("x"))
            .output("t", "q", int(0))
            .build()
            .unwrap();
        let m = Marking::initial(&net);
        let occs = enabled(&net, &m, 0);
        assert_eq!(occs.len(), 2);
        let (m2, _) = fire(&net, &m, &occs[1], 0).unwrap();
        assert_eq!(m2.size(0), 2);
        assert_eq!(m2.size(1), 2);
        assert_eq!(m2.tokens(0)[0].time, 0);
    }
}
