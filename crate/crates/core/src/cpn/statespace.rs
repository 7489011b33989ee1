//! Reachability graphs, strongly connected components and liveness.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::marking::{enabled, fire, next_enabled_time, Marking, Occurrence, Time};
use super::net::Net;

/// Default cap on the number of explored nodes.
pub const DEFAULT_NODE_LIMIT: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct State {
    pub marking: Marking,
    pub time: Time,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphArc {
    /// Source node, zero-based.
    pub from: usize,
    pub to: usize,
    pub occurrence: Occurrence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Full,
    /// Exploration stopped at the node limit.
    Partial,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpaceGraph {
    pub nodes: Vec<State>,
    pub arcs: Vec<GraphArc>,
    pub status: Status,
}

impl StateSpaceGraph {
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for a in &self.arcs {
            out[a.from].push(a.to);
        }
        out
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.arcs.iter().filter(|a| a.from == node).count()
    }
}

pub fn explore(net: &Net) -> StateSpaceGraph {
    explore_with_limit(net, DEFAULT_NODE_LIMIT)
}

/// Breadth-first generation of all reachable timed states. Node ids follow
/// discovery order; the initial state is node 0.
pub fn explore_with_limit(net: &Net, limit: usize) -> StateSpaceGraph {
    let m0 = Marking::initial(net);
    let t0 = next_enabled_time(net, &m0, 0).unwrap_or(0);
    let root = State { marking: m0, time: t0 };
    let mut index = HashMap::from([(root.clone(), 0usize)]);
    let mut nodes = vec![root];
    let mut arcs = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    let mut status = Status::Full;
    while let Some(n) = queue.pop_front() {
        let State { marking, time } = nodes[n].clone();
        for occ in enabled(net, &marking, time) {
            let (m, t) = fire(net, &marking, &occ, time).expect("enabled occurrences fire");
            let s = State { marking: m, time: t };
            let to = match index.get(&s) {
                Some(&i) => i,
                None => {
                    if nodes.len() >= limit {
                        status = Status::Partial;
                        continue;
                    }
                    index.insert(s.clone(), nodes.len());
                    queue.push_back(nodes.len());
                    nodes.push(s);
                    nodes.len() - 1
                }
            };
            arcs.push(GraphArc {
                from: n,
                to,
                occurrence: occ,
            });
        }
    }
    StateSpaceGraph { nodes, arcs, status }
}

/// Condensation of a graph into its strongly connected components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SccGraph {
    /// Member nodes of each component, components in reverse topological
    /// order as produced by Tarjan's algorithm.
    pub components: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
    /// Original arcs joining two different components, as component pairs.
    pub arcs: Vec<(usize, usize)>,
}

impl SccGraph {
    pub fn is_terminal(&self, c: usize) -> bool {
        self.arcs.iter().all(|&(from, _)| from != c)
    }
}

/// Iterative Tarjan over `succ` (adjacency lists on `0..succ.len()`).
pub fn tarjan(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work = vec![(root, 0usize)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = work.last_mut() {
            if let Some(&w) = succ[v].get(*i) {
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps
}

pub fn scc(graph: &StateSpaceGraph) -> SccGraph {
    let components = tarjan(&graph.successors());
    let mut component_of = vec![0; graph.nodes.len()];
    for (c, members) in components.iter().enumerate() {
        for &n in members {
            component_of[n] = c;
        }
    }
    let arcs = graph
        .arcs
        .iter()
        .map(|a| (component_of[a.from], component_of[a.to]))
        .filter(|(x, y)| x != y)
        .collect();
    SccGraph {
        components,
        component_of,
        arcs,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LivenessReport {
    /// One-based node ids without successors.
    pub dead_markings: Vec<usize>,
    /// Transitions that label no arc of the graph.
    pub dead_transitions: Vec<String>,
    /// Transitions that can occur again from every reachable marking.
    pub live_transitions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LivenessError {
    #[error("liveness needs the full state space, exploration stopped early")]
    Partial,
}

pub fn liveness(net: &Net, graph: &StateSpaceGraph, sccs: &SccGraph) -> Result<LivenessReport, LivenessError> {
    if graph.status == Status::Partial {
        return Err(LivenessError::Partial);
    }
    let mut out_deg = vec![0usize; graph.nodes.len()];
    let mut fired = vec![false; net.transitions().len()];
    for a in &graph.arcs {
        out_deg[a.from] += 1;
        fired[a.occurrence.transition] = true;
    }
    let dead_markings = (0..graph.nodes.len()).filter(|&n| out_deg[n] == 0).map(|n| n + 1).collect();
    let names = |pred: &dyn Fn(usize) -> bool| {
        (0..net.transitions().len())
            .filter(|&t| pred(t))
            .map(|t| net.transitions()[t].id.clone())
            .collect::<Vec<_>>()
    };
    let dead_transitions = names(&|t| !fired[t]);
    let terminal: Vec<usize> = (0..sccs.components.len()).filter(|&c| sccs.is_terminal(c)).collect();
    let live_transitions = names(&|t| {
        terminal.iter().all(|&c| {
            graph.arcs.iter().any(|a| {
                a.occurrence.transition == t && sccs.component_of[a.from] == c && sccs.component_of[a.to] == c
            })
        })
    });
    Ok(LivenessReport {
        dead_markings,
        dead_transitions,
        live_transitions,
    })
}

/// The state space summary in the layout of the CPN Tools report.
/// `secs` is the generation time to print for both graphs.
pub fn statespace_report(graph: &StateSpaceGraph, sccs: &SccGraph, live: Option<&LivenessReport>, secs: u64) -> String {
    let status = match graph.status {
        Status::Full => "Full",
        Status::Partial => "Partial",
    };
    let mut s = String::new();
    let _ = writeln!(s, " Statistics");
    let _ = writeln!(s, "-----");
    let _ = writeln!(s, " State Space");
    let _ = writeln!(s, "Nodes: {}", graph.nodes.len());
    let _ = writeln!(s, "Arcs: {}", graph.arcs.len());
    let _ = writeln!(s, "Secs: {secs}");
    let _ = writeln!(s, "Status: {status}");
    let _ = writeln!(s);
    let _ = writeln!(s, " Scc Graph");
    let _ = writeln!(s, "Nodes: {}", sccs.components.len());
    let _ = writeln!(s, "Arcs: {}", sccs.arcs.len());
    let _ = writeln!(s, "Secs: {secs}");
    let _ = writeln!(s);
    match live {
        Some(l) => {
            let ids: Vec<String> = l.dead_markings.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(s, "Dead Markings: [{}]", ids.join(","));
            let _ = writeln!(s, "Dead Transition Instances: [{}]", l.dead_transitions.join(","));
            let _ = writeln!(s, "Live Transition Instances: [{}]", l.live_transitions.join(","));
        }
        None => {
            let _ = writeln!(s, "Dead Markings: unknown (partial state space)");
            let _ = writeln!(s, "Dead Transition Instances: unknown (partial state space)");
            let _ = writeln!(s, "Live Transition Instances: unknown (partial state space)");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpn::net::{unit, var, ColorSet, Guard, NetBuilder, Value};

    fn succ(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut s = vec![Vec::new(); n];
        for &(a, b) in edges {
            s[a].push(b);
        }
        s
    }

    #[test]
    fn tarjan_on_a_dag_gives_singletons() {
        let comps = tarjan(&succ(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]));
        assert_eq!(comps.len(), 4);
        assert!(comps.iter().all(|c| c.len() == 1));
        // reverse topological: the sink comes first
        assert_eq!(comps[0], vec![3]);
    }

    #[test]
    fn tarjan_merges_cycles() {
        let comps = tarjan(&succ(2, &[(0, 1), (1, 0)]));
        assert_eq!(comps, vec![vec![0, 1]]);
        let comps = tarjan(&succ(5, &[(0, 1), (1, 2), (2, 1), (2, 3), (3, 4), (4, 3)]));
        let mut sizes: Vec<usize> = comps.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2, 2]);
    }

    fn toggle() -> Net {
        // Two places exchanging one untimed token forever.
        NetBuilder::new("toggle", 0)
            .untimed_place("a", ColorSet::Unit, vec![Value::Unit])
            .untimed_place("b", ColorSet::Unit, vec![])
            .transition("ab", Guard::True)
            .transition("ba", Guard::True)
            .input("a", "ab", unit())
            .output("ab", "b", unit())
            .input("b", "ba", var("u"))
            .output("ba", "a", var("u"))
            .build()
            .unwrap()
    }

    #[test]
    fn two_cycle_condenses_to_one_live_component() {
        let net = toggle();
        let g = explore(&net);
        assert_eq!((g.nodes.len(), g.arcs.len()), (2, 2));
        let s = scc(&g);
        assert_eq!((s.components.len(), s.arcs.len()), (1, 0));
        let l = liveness(&net, &g, &s).unwrap();
        assert!(l.dead_markings.is_empty());
        assert!(l.dead_transitions.is_empty());
        assert_eq!(l.live_transitions, vec!["ab", "ba"]);
    }

    #[test]
    fn node_limit_marks_graph_partial() {
        let net = NetBuilder::new("grow", 1)
            .place("n", ColorSet::Int, vec![Value::Int(0)])
            .transition("inc", Guard::True)
            .input("n", "inc", var("x"))
            .output("inc", "n", crate::cpn::net::plus("x", 1))
            .build()
            .unwrap();
        let g = explore_with_limit(&net, 50);
        assert_eq!(g.status, Status::Partial);
        assert_eq!(g.nodes.len(), 50);
        let s = scc(&g);
        assert_eq!(liveness(&net, &g, &s), Err(LivenessError::Partial));
        assert!(statespace_report(&g, &s, None, 0).contains("Status: Partial"));
    }
}
