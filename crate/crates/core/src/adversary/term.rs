//! Symbolic messages and the attacker's deductive closure.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Atom {
    Name(String),
    Int(BigUint),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Atom(Atom),
    Pair(Box<Term>, Box<Term>),
    Hash(Box<Term>),
    PkEnc(String, Box<Term>),
    DhPub(String),
    /// Normalised so that `shared(a, pub(b)) == shared(b, pub(a))`.
    DhShared(String, Box<Term>),
}

impl Term {
    pub fn name(s: impl Into<String>) -> Term {
        Term::Atom(Atom::Name(s.into()))
    }

    pub fn int(v: impl Into<BigUint>) -> Term {
        Term::Atom(Atom::Int(v.into()))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    /// Right-nested tuple; a single element is returned as is.
    pub fn tuple(items: impl IntoIterator<Item = Term>) -> Term {
        let mut items: Vec<Term> = items.into_iter().collect();
        let mut acc = items.pop().unwrap_or_else(|| Term::name(""));
        while let Some(t) = items.pop() {
            acc = Term::pair(t, acc);
        }
        acc
    }

    pub fn hash_of(t: Term) -> Term {
        Term::Hash(Box::new(t))
    }

    pub fn pk_enc(key_id: impl Into<String>, t: Term) -> Term {
        Term::PkEnc(key_id.into(), Box::new(t))
    }

    pub fn dh_pub(exp_id: impl Into<String>) -> Term {
        Term::DhPub(exp_id.into())
    }

    pub fn dh_shared(exp_id: impl Into<String>, peer: Term) -> Term {
        let exp_id = exp_id.into();
        match peer {
            Term::DhPub(other) if other < exp_id => Term::DhShared(other, Box::new(Term::DhPub(exp_id))),
            peer => Term::DhShared(exp_id, Box::new(peer)),
        }
    }

    pub fn private_key(id: &str) -> Term {
        Term::name(format!("sk:{id}"))
    }

    pub fn public_key(id: &str) -> Term {
        Term::name(format!("pk:{id}"))
    }

    pub fn exponent(id: &str) -> Term {
        Term::name(format!("x:{id}"))
    }

    /// A signature by `signer` over `body`.
    pub fn signature(signer: &str, body: Term) -> Term {
        Term::hash_of(Term::pair(Term::private_key(signer), body))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(Atom::Name(s)) => write!(f, "{s}"),
            Term::Atom(Atom::Int(v)) => {
                let hex = v.to_str_radix(16);
                if hex.len() > 12 {
                    write!(f, "#{}..", &hex[..12])
                } else {
                    write!(f, "#{hex}")
                }
            }
            Term::Pair(a, b) => write!(f, "<{a}, {b}>"),
            Term::Hash(t) => write!(f, "H({t})"),
            Term::PkEnc(k, t) => write!(f, "{{{t}}}pk:{k}"),
            Term::DhPub(x) => write!(f, "g^{x}"),
            Term::DhShared(x, y) => write!(f, "({y})^{x}"),
        }
    }
}

/// Terms held by the attacker. After [`knowledge_closure`] the set is closed
/// under decomposition; [`KnowledgeBase::derives`] decides membership in the
/// (infinite) set of terms the attacker can build from it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    terms: BTreeSet<Term>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Self {
        Self {
            terms: terms.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, t: Term) -> bool {
        self.terms.insert(t)
    }

    pub fn extend(&mut self, ts: impl IntoIterator<Item = Term>) {
        self.terms.extend(ts);
    }

    /// Adds observed terms and restores closure.
    pub fn observe(&mut self, ts: impl IntoIterator<Item = Term>) {
        self.extend(ts);
        *self = knowledge_closure(self);
    }

    pub fn terms(&self) -> &BTreeSet<Term> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_subset(&self, other: &KnowledgeBase) -> bool {
        self.terms.is_subset(&other.terms)
    }

    /// Whether `t` can be composed from held terms by pairing, hashing,
    /// encryption under a known public key and exponentiation with a known
    /// exponent. Exact only on a closed knowledge base.
    pub fn derives(&self, t: &Term) -> bool {
        if self.terms.contains(t) {
            return true;
        }
        match t {
            Term::Atom(_) => false,
            Term::Pair(a, b) => self.derives(a) && self.derives(b),
            Term::Hash(a) => self.derives(a),
            Term::PkEnc(k, a) => self.derives(&Term::public_key(k)) && self.derives(a),
            Term::DhPub(x) => self.derives(&Term::exponent(x)),
            Term::DhShared(x, y) => {
                if self.derives(&Term::exponent(x)) && self.derives(y) {
                    return true;
                }
                match y.as_ref() {
                    Term::DhPub(z) => self.derives(&Term::exponent(z)) && self.derives(&Term::dh_pub(x.clone())),
                    _ => false,
                }
            }
        }
    }

    fn owned_exponents(&self) -> Vec<String> {
        self.terms
            .iter()
            .filter_map(|t| match t {
                Term::Atom(Atom::Name(n)) => n.strip_prefix("x:").map(str::to_owned),
                _ => None,
            })
            .collect()
    }
}

/// Least fixed point of decomposition: projections of pairs, decryption
/// under held private keys, public values and shared secrets for held
/// exponents. Composition is left implicit in [`KnowledgeBase::derives`] so
/// the result stays finite.
pub fn knowledge_closure(kb: &KnowledgeBase) -> KnowledgeBase {
    let mut out = kb.clone();
    loop {
        let mut fresh = Vec::new();
        for t in &out.terms {
            match t {
                Term::Pair(a, b) => {
                    fresh.push(a.as_ref().clone());
                    fresh.push(b.as_ref().clone());
                }
                Term::PkEnc(k, body) if out.derives(&Term::private_key(k)) => fresh.push(body.as_ref().clone()),
                _ => {}
            }
        }
        let exps = out.owned_exponents();
        let publics: Vec<Term> = out.terms.iter().filter(|t| matches!(t, Term::DhPub(_))).cloned().collect();
        for x in &exps {
            fresh.push(Term::dh_pub(x.clone()));
            for y in &publics {
                fresh.push(Term::dh_shared(x.clone(), y.clone()));
            }
        }
        let before = out.terms.len();
        out.terms.extend(fresh);
        if out.terms.len() == before {
            return out;
        }
    }
}
