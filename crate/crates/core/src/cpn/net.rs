//! Net structure: places, transitions, arcs and their inscriptions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Unit,
    Int(i64),
    Str(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write!(f, "\"{s}\""),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSet {
    Unit,
    Int,
    Str,
}

impl ColorSet {
    pub fn admits(self, v: &Value) -> bool {
        matches!(
            (self, v),
            (ColorSet::Unit, Value::Unit) | (ColorSet::Int, Value::Int(_)) | (ColorSet::Str, Value::Str(_))
        )
    }
}

/// Inscription on an arc. Input arcs may only use `Var` and `Const`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcExpr {
    Var(String),
    Const(Value),
    /// `var + k` over integers.
    Add(String, i64),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operand {
    Var(String),
    Int(i64),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Guard {
    True,
    Eq(Operand, Operand),
    Ne(Operand, Operand),
    Lt(Operand, Operand),
    Le(Operand, Operand),
    All(Vec<Guard>),
    Any(Vec<Guard>),
}

/// Variable assignment for one transition occurrence.
pub type Binding = BTreeMap<String, Value>;

fn operand(op: &Operand, b: &Binding) -> Option<i64> {
    match op {
        Operand::Int(i) => Some(*i),
        Operand::Var(v) => match b.get(v) {
            Some(Value::Int(i)) => Some(*i),
            _ => None,
        },
    }
}

impl Guard {
    pub fn holds(&self, b: &Binding) -> bool {
        let cmp = |x: &Operand, y: &Operand, f: fn(i64, i64) -> bool| match (operand(x, b), operand(y, b)) {
            (Some(x), Some(y)) => f(x, y),
            _ => false,
        };
        match self {
            Guard::True => true,
            Guard::Eq(x, y) => cmp(x, y, |a, b| a == b),
            Guard::Ne(x, y) => cmp(x, y, |a, b| a != b),
            Guard::Lt(x, y) => cmp(x, y, |a, b| a < b),
            Guard::Le(x, y) => cmp(x, y, |a, b| a <= b),
            Guard::All(gs) => gs.iter().all(|g| g.holds(b)),
            Guard::Any(gs) => gs.iter().any(|g| g.holds(b)),
        }
    }

    fn vars(&self, out: &mut BTreeSet<String>) {
        let mut op = |o: &Operand| {
            if let Operand::Var(v) = o {
                out.insert(v.clone());
            }
        };
        match self {
            Guard::True => {}
            Guard::Eq(x, y) | Guard::Ne(x, y) | Guard::Lt(x, y) | Guard::Le(x, y) => {
                op(x);
                op(y);
            }
            Guard::All(gs) | Guard::Any(gs) => gs.iter().for_each(|g| g.vars(out)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Place {
    pub id: String,
    pub color: ColorSet,
    /// Untimed places hold tokens that are always ready.
    pub timed: bool,
    pub initial: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    pub guard: Guard,
    pub delay: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Place to transition.
    In,
    /// Transition to place.
    Out,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub place: String,
    pub transition: String,
    pub direction: Direction,
    pub expr: ArcExpr,
}

/// The serialisable description of a net.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub name: String,
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub arcs: Vec<Arc>,
    /// Places observed by marking-size monitors.
    #[serde(default)]
    pub monitors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetError {
    #[error("duplicate node id `{0}`")]
    Duplicate(String),
    #[error("arc references unknown place `{0}`")]
    UnknownPlace(String),
    #[error("arc references unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("transition `{0}` has no input arc")]
    NoInput(String),
    #[error("input arc of `{0}` uses an expression that cannot bind")]
    InputExpr(String),
    #[error("variable `{var}` of transition `{transition}` is not bound by an input arc")]
    Unbound { transition: String, var: String },
    #[error("token {value} does not belong to the colour set of place `{place}`")]
    Color { place: String, value: Value },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct ArcRef {
    pub place: usize,
    pub expr: ArcExpr,
}

/// A validated, immutable net with arcs indexed by transition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NetSpec", into = "NetSpec")]
pub struct Net {
    spec: NetSpec,
    #[serde(skip)]
    inputs: Vec<Vec<ArcRef>>,
    #[serde(skip)]
    outputs: Vec<Vec<ArcRef>>,
    #[serde(skip)]
    monitors: Vec<usize>,
}

impl From<Net> for NetSpec {
    fn from(n: Net) -> Self {
        n.spec
    }
}

impl TryFrom<NetSpec> for Net {
    type Error = NetError;

    fn try_from(spec: NetSpec) -> Result<Self, NetError> {
        Net::new(spec)
    }
}

impl Net {
    pub fn new(spec: NetSpec) -> Result<Self, NetError> {
        let mut seen = BTreeSet::new();
        for id in spec.places.iter().map(|p| &p.id).chain(spec.transitions.iter().map(|t| &t.id)) {
            if !seen.insert(id.clone()) {
                return Err(NetError::Duplicate(id.clone()));
            }
        }
        for p in &spec.places {
            if let Some(v) = p.initial.iter().find(|v| !p.color.admits(v)) {
                return Err(NetError::Color {
                    place: p.id.clone(),
                    value: v.clone(),
                });
            }
        }
        let place_idx = |id: &str| {
            spec.places
                .iter()
                .position(|p| p.id == id)
                .ok_or_else(|| NetError::UnknownPlace(id.to_owned()))
        };
        let mut inputs = vec![Vec::new(); spec.transitions.len()];
        let mut outputs = vec![Vec::new(); spec.transitions.len()];
        for a in &spec.arcs {
            let place = place_idx(&a.place)?;
            let t = spec
                .transitions
                .iter()
                .position(|t| t.id == a.transition)
                .ok_or_else(|| NetError::UnknownTransition(a.transition.clone()))?;
            let r = ArcRef {
                place,
                expr: a.expr.clone(),
            };
            match a.direction {
                Direction::In => {
                    if matches!(a.expr, ArcExpr::Add(..)) {
                        return Err(NetError::InputExpr(a.transition.clone()));
                    }
                    if let ArcExpr::Const(v) = &a.expr {
                        if !spec.places[place].color.admits(v) {
                            return Err(NetError::Color {
                                place: a.place.clone(),
                                value: v.clone(),
                            });
                        }
                    }
                    inputs[t].push(r)
                }
                Direction::Out => outputs[t].push(r),
            }
        }
        for (t, tr) in spec.transitions.iter().enumerate() {
            if inputs[t].is_empty() {
                return Err(NetError::NoInput(tr.id.clone()));
            }
            let bound: BTreeSet<String> = inputs[t]
                .iter()
                .filter_map(|a| match &a.expr {
                    ArcExpr::Var(v) => Some(v.clone()),
                    _ => None,
                })
                .collect();
            let mut used = BTreeSet::new();
            tr.guard.vars(&mut used);
            for a in &outputs[t] {
                if let ArcExpr::Var(v) | ArcExpr::Add(v, _) = &a.expr {
                    used.insert(v.clone());
                }
            }
            if let Some(var) = used.difference(&bound).next() {
                return Err(NetError::Unbound {
                    transition: tr.id.clone(),
                    var: var.clone(),
                });
            }
        }
        let monitors = spec.monitors.iter().map(|m| place_idx(m)).collect::<Result<_, _>>()?;
        Ok(Self {
            spec,
            inputs,
            outputs,
            monitors,
        })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn places(&self) -> &[Place] {
        &self.spec.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.spec.transitions
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.spec.places.iter().position(|p| p.id == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.spec.transitions.iter().position(|t| t.id == id)
    }

    pub(crate) fn inputs(&self, t: usize) -> &[ArcRef] {
        &self.inputs[t]
    }

    pub(crate) fn outputs(&self, t: usize) -> &[ArcRef] {
        &self.outputs[t]
    }

    pub fn monitored_places(&self) -> &[usize] {
        &self.monitors
    }

    /// Whether transition `t` has an arc to or from place `p`.
    pub fn touches(&self, t: usize, p: usize) -> bool {
        self.inputs[t].iter().chain(&self.outputs[t]).any(|a| a.place == p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("net specs always serialise")
    }

    pub fn from_json(text: &str) -> Result<Self, NetFileError> {
        let spec: NetSpec = serde_json::from_str(text)?;
        Ok(Net::new(spec)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NetFileError {
    #[error("malformed net JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid net: {0}")]
    Net(#[from] NetError),
}

/// Small fluent helper for writing nets in code.
#[derive(Clone, Debug)]
pub struct NetBuilder {
    spec: NetSpec,
    delay: u64,
}

impl NetBuilder {
    pub fn new(name: impl Into<String>, delay: u64) -> Self {
        Self {
            spec: NetSpec {
                name: name.into(),
                places: Vec::new(),
                transitions: Vec::new(),
                arcs: Vec::new(),
                monitors: Vec::new(),
            },
            delay,
        }
    }

    pub fn place(mut self, id: &str, color: ColorSet, initial: Vec<Value>) -> Self {
        self.spec.places.push(Place {
            id: id.into(),
            color,
            timed: true,
            initial,
        });
        self
    }

    pub fn untimed_place(mut self, id: &str, color: ColorSet, initial: Vec<Value>) -> Self {
        self.spec.places.push(Place {
            id: id.into(),
            color,
            timed: false,
            initial,
        });
        self
    }

    pub fn transition(mut self, id: &str, guard: Guard) -> Self {
        self.spec.transitions.push(Transition {
            id: id.into(),
            guard,
            delay: self.delay,
        });
        self
    }

    pub fn input(mut self, place: &str, transition: &str, expr: ArcExpr) -> Self {
        self.spec.arcs.push(Arc {
            place: place.into(),
            transition: transition.into(),
            direction: Direction::In,
            expr,
        });
        self
    }

    pub fn output(mut self, transition: &str, place: &str, expr: ArcExpr) -> Self {
        self.spec.arcs.push(Arc {
            place: place.into(),
            transition: transition.into(),
            direction: Direction::Out,
            expr,
        });
        self
    }

    pub fn monitor(mut self, place: &str) -> Self {
        self.spec.monitors.push(place.into());
        self
    }

    pub fn build(self) -> Result<Net, NetError> {
        Net::new(self.spec)
    }
}

/// Shorthands for inscriptions.
pub fn var(v: &str) -> ArcExpr {
    ArcExpr::Var(v.into())
}

pub fn unit() -> ArcExpr {
    ArcExpr::Const(Value::Unit)
}

pub fn int(i: i64) -> ArcExpr {
    ArcExpr::Const(Value::Int(i))
}

pub fn plus(v: &str, k: i64) -> ArcExpr {
    ArcExpr::Add(v.into(), k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_dangling_arcs() {
        let err = NetBuilder::new("n", 5)
            .place("p", ColorSet::Unit, vec![])
            .transition("t", Guard::True)
            .input("q", "t", unit())
            .build()
            .unwrap_err();
        assert_eq!(err, NetError::UnknownPlace("q".into()));
    }

    #[test]
    fn rejects_sourceless_transitions() {
        let err = NetBuilder::new("n", 5)
            .place("p", ColorSet::Unit, vec![])
            .transition("t", Guard::True)
            .output("t", "p", unit())
            .build()
            .unwrap_err();
        assert_eq!(err, NetError::NoInput("t".into()));
    }

    #[test]
    fn rejects_unbound_output_variables() {
        let err = NetBuilder::new("n", 5)
            .place("p", ColorSet::Int, vec![Value::Int(1)])
            .transition("t", Guard::True)
            .input("p", "t", var("x"))
            .output("t", "p", var("y"))
            .build()
            .unwrap_err();
        assert!(matches!(err, NetError::Unbound { .. }));
    }

    #[test]
    fn rejects_foreign_tokens() {
        let err = NetBuilder::new("n", 5)
            .place("p", ColorSet::Unit, vec![Value::Int(3)])
            .build()
            .unwrap_err();
        assert!(matches!(err, NetError::Color { .. }));
    }

    #[test]
    fn guards_evaluate_over_bindings() {
        let b: Binding = [("r".to_owned(), Value::Int(2))].into();
        let g = Guard::Le(Operand::Var("r".into()), Operand::Int(2));
        assert!(g.holds(&b));
        assert!(!Guard::Lt(Operand::Var("r".into()), Operand::Int(2)).holds(&b));
        assert!(Guard::Any(vec![Guard::Eq(Operand::Int(0), Operand::Int(1)), Guard::True]).holds(&b));
    }

    #[test]
    fn json_round_trip() {
        let net = NetBuilder::new("n", 5)
            .place("p", ColorSet::Int, vec![Value::Int(1)])
            .transition("t", Guard::True)
            .input("p", "t", var("x"))
            .output("t", "p", plus("x", 1))
            .build()
            .unwrap();
        assert_eq!(Net::from_json(&net.to_json()).unwrap(), net);
    }
}
