use std::collections::{HashMap, HashSet};

use pkmlab::cpn::*;
use pkmlab::nets::{build_proposed_net, catalog};
use pkmlab::{LabRng, Stat};
use proptest::prelude::*;
use rand::SeedableRng;

/// Depth-first reachability with string keys, independent of `explore`.
fn naive_reachable(net: &Net) -> (HashSet<String>, usize) {
    let m0 = Marking::initial(net);
    let t0 = next_enabled_time(net, &m0, 0).unwrap_or(0);
    let key = |m: &Marking, t: Time| format!("{m:?}|{t}");
    let mut seen = HashSet::from([key(&m0, t0)]);
    let mut edges = 0;
    let mut stack = vec![(m0, t0)];
    while let Some((m, t)) = stack.pop() {
        for occ in enabled(net, &m, t) {
            edges += 1;
            let (m2, t2) = fire(net, &m, &occ, t).unwrap();
            if seen.insert(key(&m2, t2)) {
                stack.push((m2, t2));
            }
        }
    }
    (seen, edges)
}

#[test]
fn explore_agrees_with_naive_search() {
    let mut nets: Vec<Net> = catalog().into_iter().map(|e| e.net).collect();
    nets.push(fork_net());
    for net in nets {
        let g = explore(&net);
        let (naive, edges) = naive_reachable(&net);
        assert_eq!(g.nodes.len(), naive.len(), "{}", net.name());
        assert_eq!(g.arcs.len(), edges, "{}", net.name());
        for s in &g.nodes {
            assert!(naive.contains(&format!("{:?}|{}", s.marking, s.time)));
        }
    }
}

fn fork_net() -> Net {
    NetBuilder::new("fork", 5)
        .place("p", ColorSet::Unit, vec![Value::Unit])
        .place("q", ColorSet::Unit, vec![])
        .place("r", ColorSet::Unit, vec![])
        .transition("left", Guard::True)
        .transition("right", Guard::True)
        .input("p", "left", unit())
        .output("left", "q", unit())
        .input("p", "right", unit())
        .output("right", "r", unit())
        .build()
        .unwrap()
}

#[test]
fn small_graphs() {
    let g = explore(&fork_net());
    assert_eq!((g.nodes.len(), g.arcs.len()), (3, 2));

    let idle = NetBuilder::new("idle", 5)
        .place("p", ColorSet::Unit, vec![Value::Unit])
        .build()
        .unwrap();
    let g = explore(&idle);
    assert_eq!((g.nodes.len(), g.arcs.len()), (1, 0));
    let s = scc(&g);
    let l = liveness(&idle, &g, &s).unwrap();
    assert_eq!(l.dead_markings, vec![1]);
    let report = statespace_report(&g, &s, Some(&l), 0);
    assert!(report.contains("Nodes: 1\nArcs: 0\n"));

    let run = simulate(&idle, 10, &mut LabRng::seed_from_u64(0));
    assert!(run.steps.is_empty());
    assert_eq!(run.model_time, 0);
}

#[test]
fn self_loop_is_live() {
    let net = NetBuilder::new("loop", 5)
        .untimed_place("p", ColorSet::Unit, vec![Value::Unit])
        .transition("spin", Guard::True)
        .input("p", "spin", unit())
        .output("spin", "p", unit())
        .build()
        .unwrap();
    let g = explore(&net);
    assert_eq!((g.nodes.len(), g.arcs.len()), (1, 1));
    let s = scc(&g);
    let l = liveness(&net, &g, &s).unwrap();
    assert!(l.dead_markings.is_empty());
    assert_eq!(l.live_transitions, vec!["spin"]);
}

#[test]
fn delays_stamp_output_tokens() {
    let net = NetBuilder::new("line", 5)
        .place("a", ColorSet::Unit, vec![Value::Unit])
        .place("b", ColorSet::Unit, vec![])
        .transition("t", Guard::True)
        .input("a", "t", unit())
        .output("t", "b", unit())
        .build()
        .unwrap();
    let m = Marking::initial(&net);
    let occ = enabled(&net, &m, 0).remove(0);
    let (m2, now) = fire(&net, &m, &occ, 0).unwrap();
    assert_eq!(m2.tokens(1), &[Token { value: Value::Unit, time: 5 }]);
    assert_eq!(now, 5);
    assert_eq!(m.size(0) + m.size(1), m2.size(0) + m2.size(1));
    assert!(fire(&net, &m2, &occ, now).is_err());
}

const PROPOSED_REPORT: &str = " Statistics
-----
 State Space
Nodes: 11
Arcs: 10
Secs: 0
Status: Full

 Scc Graph
Nodes: 11
Arcs: 10
Secs: 0

Dead Markings: [11]
Dead Transition Instances: []
Live Transition Instances: []
";

#[test]
fn proposed_report_is_byte_exact() {
    let net = build_proposed_net();
    for _ in 0..2 {
        let g = explore(&net);
        let s = scc(&g);
        let l = liveness(&net, &g, &s).unwrap();
        assert_eq!(statespace_report(&g, &s, Some(&l), 0), PROPOSED_REPORT);
    }
}

#[test]
fn catalog_nets_meet_their_figures() {
    for e in catalog() {
        let x = &e.expected;
        assert_eq!(e.net.places().len(), x.places, "{}", e.name);
        assert_eq!(e.net.transitions().len(), x.transitions, "{}", e.name);
        let g = explore(&e.net);
        assert_eq!(g.status, Status::Full);
        assert_eq!((g.nodes.len(), g.arcs.len()), (x.ss_nodes, x.ss_arcs), "{}", e.name);
        let s = scc(&g);
        assert_eq!((s.components.len(), s.arcs.len()), (g.nodes.len(), g.arcs.len()), "{} is cyclic", e.name);
        let l = liveness(&e.net, &g, &s).unwrap();
        assert_eq!(l.dead_markings.len(), x.dead_markings, "{}", e.name);
        assert!(l.dead_transitions.is_empty(), "{}: {:?}", e.name, l.dead_transitions);
        assert!(l.live_transitions.is_empty());
        for &d in &l.dead_markings {
            let st = &g.nodes[d - 1];
            assert!(enabled(&e.net, &st.marking, st.time).is_empty());
            assert!(next_enabled_time(&e.net, &st.marking, st.time).is_none());
        }
        let run = e.canonical_run();
        assert_eq!(run.steps.len(), x.steps, "{}", e.name);
        assert_eq!(run.model_time, x.model_time, "{}", e.name);
        assert_eq!(x.model_time, x.steps as u64 * 5);
        assert!(run.finished);
        assert_eq!(Net::from_json(&e.net.to_json()).unwrap(), e.net);
    }
}

#[test]
fn runs_of_acyclic_nets_stay_within_the_graph() {
    for e in catalog() {
        let g = explore(&e.net);
        for seed in 0..30 {
            let run = simulate(&e.net, 1_000, &mut LabRng::seed_from_u64(seed));
            assert!(run.finished);
            assert!(run.steps.len() < g.nodes.len());
            assert_eq!(run.model_time, 5 * run.steps.len() as u64);
            let again = simulate(&e.net, 1_000, &mut LabRng::seed_from_u64(seed));
            assert_eq!(run, again);
        }
    }
}

#[test]
fn step_limit_stops_a_run() {
    let run = simulate(&build_proposed_net(), 4, &mut LabRng::seed_from_u64(0));
    assert_eq!(run.steps.len(), 4);
    assert!(!run.finished);
}

#[test]
fn proposed_simulation_regenerates_the_timed_statistics() {
    let run = simulate(&build_proposed_net(), 1_000, &mut LabRng::seed_from_u64(0));
    assert_eq!((run.steps.len(), run.model_time), (10, 50));
    let rows: HashMap<String, TimedStats<Stat>> = run
        .monitors
        .iter()
        .map(|m| (m.name.clone(), timed_stats(m).unwrap()))
        .collect();
    let b = &rows["Marking_size_proposed'b_1"];
    assert_eq!(b.count, 6);
    assert!((b.variance - 0.163265).abs() < 1e-6);
    let r = &rows["Marking_size_proposed'recvie_ms_1"];
    assert_eq!(r.count, 4);
    assert!((r.ssd - 20.5).abs() < 1e-12);
    let d = &rows["Marking_size_proposed'Data_Received_1"];
    assert_eq!((d.count, d.avg, d.std), (4, 1.0, 0.0));
}

fn t_pdf(x: f64, df: f64) -> f64 {
    // normalising constant via the gamma recurrence, no shared code
    fn gamma_half(k: u32) -> f64 {
        // Γ(k/2)
        let mut g = if k.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
        let mut z = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
        while z < k as f64 / 2.0 - 1e-9 {
            g *= z;
            z += 1.0;
        }
        g
    }
    let k = df as u32;
    let c = gamma_half(k + 1) / ((df * std::f64::consts::PI).sqrt() * gamma_half(k));
    c * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0)
}

fn simpson_cdf(t: f64, df: f64) -> f64 {
    let n = 20_000;
    let h = t / n as f64;
    let mut s = t_pdf(0.0, df) + t_pdf(t, df);
    for i in 1..n {
        s += t_pdf(i as f64 * h, df) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 + s * h / 3.0
}

fn oracle_quantile(p: f64, df: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while simpson_cdf(hi, df) < p {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if simpson_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn t_quantile_matches_numerical_integration() {
    for df in 1..=30u32 {
        for p in [0.95, 0.975, 0.995] {
            let got: f64 = t_quantile(p, df).unwrap();
            let want = oracle_quantile(p, df as f64);
            assert!((got - want).abs() < 1e-4, "df {df} p {p}: {got} vs {want}");
        }
    }
}

#[test]
fn table_critical_values_are_rounded() {
    let exact: f64 = CriticalValues::Exact.value(0.975, 5).unwrap();
    let table: f64 = CriticalValues::Table.value(0.975, 5).unwrap();
    assert_eq!(table, 2.571);
    assert!((exact - 2.570_582).abs() < 1e-6);
}

fn step_log(segments: &[(usize, u64)], count: usize) -> MonitorLog {
    // `segments` are (value, duration); extra samples repeat the last value
    let mut samples = Vec::new();
    let mut t = 0;
    for &(value, dur) in segments {
        samples.push(Sample { step: samples.len(), time: t, value });
        t += dur;
    }
    while samples.len() + 1 < count {
        let value = samples.last().unwrap().value;
        samples.push(Sample { step: samples.len(), time: t, value });
    }
    let value = samples.last().unwrap().value;
    samples.push(Sample { step: samples.len(), time: t, value });
    MonitorLog { name: "m".into(), samples }
}

#[test]
fn reconstructed_logs_reproduce_the_published_rows() {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-4;
    let row2: TimedStats<f64> = timed_stats(&step_log(&[(0, 10), (1, 5), (0, 20), (1, 5), (0, 10)], 6)).unwrap();
    assert_eq!(row2.count, 6);
    let want2 = [0.200000, 0.332389, 0.424105, 0.665108, 8.0, 0.163265, 0.404061];
    let row3: TimedStats<f64> = timed_stats(&step_log(&[(2, 5), (1, 25), (0, 20)], 4)).unwrap();
    assert_eq!(row3.count, 4);
    let want3 = [0.700000, 0.760976, 1.029080, 1.889018, 20.5, 0.418367, 0.646813];
    for (s, want) in [(row2, want2), (row3, want3)] {
        let got = [
            s.avg,
            s.half_length[0].unwrap(),
            s.half_length[1].unwrap(),
            s.half_length[2].unwrap(),
            s.ssd,
            s.variance,
            s.std,
        ];
        for (g, w) in got.iter().zip(want) {
            assert!(close(*g, w), "{got:?} vs {want:?}");
        }
    }
}

fn arb_log() -> impl Strategy<Value = MonitorLog> {
    prop::collection::vec((0usize..6, 1u64..20), 1..12).prop_map(|segs| {
        let mut samples = Vec::new();
        let mut t = 0;
        for (value, dur) in segs {
            samples.push(Sample { step: samples.len(), time: t, value });
            t += dur;
        }
        let value = samples.last().unwrap().value;
        samples.push(Sample { step: samples.len(), time: t, value });
        MonitorLog { name: "m".into(), samples }
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn stats_identities_hold(log in arb_log()) {
        prop_assume!(log.span() > 1);
        let s: TimedStats<f64> = timed_stats(&log).unwrap();
        let t = log.span() as f64;
        prop_assert!((s.variance * (t - 1.0) - s.ssd).abs() < 1e-9);
        prop_assert!((s.std * s.std - s.variance).abs() < 1e-9);
        let h: Vec<f64> = s.half_length.iter().map(|h| h.unwrap()).collect();
        prop_assert!(h[0] <= h[1] && h[1] <= h[2]);
        prop_assert_eq!(MonitorLog::parse(&log.to_text()).unwrap(), log);
    }
}
