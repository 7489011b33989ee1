//! A Dolev-Yao attacker: it controls the channel, records, replays and
//! recombines messages, but cannot invert hashes, decrypt without the key
//! or take discrete logarithms.

mod attacks;
mod matrix;
mod mutate;
mod symbolic;
mod term;

pub use attacks::{run_attack, Attack, AttackOutcome, Harness, UnknownAttack, VictimRecord};
pub use matrix::{attack_matrix, AttackMatrix, MatrixCell, Rating, MATRIX_PROTOCOLS};
pub use mutate::{mutate_field, mutation_campaign, MutationReport};
pub use symbolic::Symbolizer;
pub use term::{knowledge_closure, Atom, KnowledgeBase, Term};
