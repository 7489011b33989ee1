//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines show up in a plain
//! `cargo test` run. Exits non-zero if any criterion fails.

use std::collections::HashSet;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use pkmlab::adversary::{knowledge_closure, mutation_campaign, Attack, Harness, KnowledgeBase, Term};
use pkmlab::cpn::*;
use pkmlab::crypto::{DhGroup, DhKeyPair};
use pkmlab::nets::{build_proposed_net, net_by_name};
use pkmlab::protocol::{Lab, Protocol};
use pkmlab::{LabRng, Stat};
use rand::{Rng, SeedableRng};

/// Absolute tolerance for published decimals.
const TOL: f64 = 1e-4;
/// Wall-clock budget for the exhaustive key agreement sweep.
const SWEEP_BUDGET: Duration = Duration::from_secs(1);
const MUTATIONS: usize = 1000;
const MITM_RUNS: u64 = 100;
const NAIVE_LIMIT: usize = 200;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);
/// (value, duration) segments, sample count, expected stats in `stat_vector` order.
type StatRow = (&'static [(usize, u64)], usize, [f64; 7]);
/// name, places, transitions, nodes, arcs, canonical seed, steps, dead markings (None = at least one)
type NetRow = (&'static str, usize, usize, usize, usize, u64, usize, Option<usize>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Square-and-multiply free oracle: repeated multiplication in u64.
fn pow_mod(g: u64, e: u64, q: u64) -> u64 {
    (0..e).fold(1, |acc, _| acc * g % q)
}

fn key_agreement() -> Check {
    let group = DhGroup::new(23u32.into(), 5u32.into()).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let mut cases = 0;
    for a in 1..=21u64 {
        let ms = DhKeyPair::from_private(&group, a.into()).map_err(|e| e.to_string())?;
        for b in 1..=21u64 {
            let bs = DhKeyPair::from_private(&group, b.into()).map_err(|e| e.to_string())?;
            let k1 = ms.derive_ak(bs.public(), &group).map_err(|e| e.to_string())?;
            let k2 = bs.derive_ak(ms.public(), &group).map_err(|e| e.to_string())?;
            let want = BigUint::from(pow_mod(5, a * b, 23));
            ensure(k1.value() == &want && k2.value() == &want, || format!("a={a} b={b}: {k1} {k2} vs {want}"))?;
            cases += 1;
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < SWEEP_BUDGET, || format!("sweep took {elapsed:?}"))?;
    let ms = DhKeyPair::from_private(&group, 6u32.into()).unwrap();
    let bs = DhKeyPair::from_private(&group, 15u32.into()).unwrap();
    let ak = ms.derive_ak(bs.public(), &group).unwrap();
    ensure(pow_mod(5, 90, 23) == 2 && ak.value() == &BigUint::from(2u32), || format!("fixture AK {ak}"))?;
    Ok(format!("{cases} cases equal in {elapsed:.2?}, fixture AK=2"))
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

fn state_space_report() -> Check {
    let out = Command::new(env!("CARGO_BIN_EXE_pkmlab"))
        .args(["cpn", "statespace", "--net", "proposed"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("exit {:?}", out.status.code()))?;
    let text = String::from_utf8_lossy(&out.stdout);
    ensure(text == PROPOSED_REPORT, || format!("report differs:\n{text}"))?;
    Ok("byte-exact: 11/10 nodes/arcs, 11/10 scc, Full, 1 dead marking".into())
}

fn step_log(segments: &[(usize, u64)], count: usize) -> MonitorLog {
    // (value, duration) pieces, padded with repeats of the final value
    let mut samples = Vec::new();
    let mut t = 0;
    for &(value, dur) in segments {
        samples.push(Sample { step: samples.len(), time: t, value });
        t += dur;
    }
    let last = samples.last().unwrap().value;
    while samples.len() < count {
        samples.push(Sample { step: samples.len(), time: t, value: last });
    }
    MonitorLog { name: "m".into(), samples }
}

fn stat_vector(s: &TimedStats<Stat>) -> [f64; 7] {
    let hl = |i: usize| s.half_length[i].unwrap_or(f64::NAN);
    [s.avg, s.ssd, s.variance, s.std, hl(0), hl(1), hl(2)]
}

fn timed_statistics() -> Check {
    let rows: [StatRow; 2] = [
        (
            &[(0, 10), (1, 5), (0, 20), (1, 5), (0, 10)],
            6,
            [0.200000, 8.0, 0.163265, 0.404061, 0.332389, 0.424105, 0.665108],
        ),
        (&[(2, 5), (1, 25), (0, 20)], 4, [0.700000, 20.5, 0.418367, 0.646813, 0.760976, 1.029080, 1.889018]),
    ];
    let mut worst: f64 = 0.0;
    for (segments, count, want) in rows {
        let s = timed_stats(&step_log(segments, count)).map_err(|e| e.to_string())?;
        ensure(s.count == count, || format!("count {} vs {count}", s.count))?;
        for (g, w) in stat_vector(&s).iter().zip(want) {
            let d = (g - w).abs();
            ensure(d <= TOL, || format!("{g} vs {w}"))?;
            worst = worst.max(d);
        }
    }
    let flat = timed_stats(&step_log(&[(1, 50)], 4)).map_err(|e| e.to_string())?;
    ensure(flat.avg == 1.0 && stat_vector(&flat)[1..] == [0.0; 6], || format!("constant row {flat:?}"))?;
    Ok(format!("9 values within {TOL:e} (worst {worst:.1e}), constant row exactly zero"))
}

fn simulation_footer() -> Check {
    let run = simulate(&build_proposed_net(), 10_000, &mut LabRng::seed_from_u64(0));
    ensure(run.finished && run.steps.len() == 10 && run.model_time == 50, || {
        format!("{} steps, model time {}", run.steps.len(), run.model_time)
    })?;
    let names: Vec<&str> = run.monitors.iter().map(|m| m.name.as_str()).collect();
    for m in &run.monitors {
        let s = timed_stats(m).map_err(|e| e.to_string())?;
        let want: &[f64] = match m.name.rsplit('\'').next().unwrap() {
            "Data_Received_1" => &[1.0, 0.0, 0.0, 0.0],
            "b_1" => &[0.2, 8.0, 0.163265, 0.404061],
            "recvie_ms_1" => &[0.7, 20.5, 0.418367, 0.646813],
            other => return Err(format!("unexpected monitor {other}")),
        };
        for (g, w) in stat_vector(&s).iter().zip(want) {
            ensure((g - w).abs() <= TOL, || format!("{}: {g} vs {w}", m.name))?;
        }
    }
    ensure(names.len() == 3, || format!("monitors {names:?}"))?;
    Ok("10 steps, model time 50.0 at delay 5, monitored rows match".into())
}

fn net_structure() -> Check {
    let table: [NetRow; 3] = [
        ("proposed", 10, 5, 11, 10, 0, 10, Some(1)),
        ("pkmv2", 12, 5, 10, 9, 1, 7, None),
        ("eap", 12, 9, 19, 22, 1, 13, Some(2)),
    ];
    let mut summary = Vec::new();
    for (name, places, transitions, nodes, arcs, seed, steps, dead) in table {
        let net = net_by_name(name).ok_or_else(|| format!("no net {name}"))?;
        let got = (net.places().len(), net.transitions().len());
        ensure(got == (places, transitions), || format!("{name}: {got:?}"))?;
        let g = explore(&net);
        let sccs = scc(&g);
        ensure(g.status == Status::Full && (g.nodes.len(), g.arcs.len()) == (nodes, arcs), || {
            format!("{name}: {} nodes, {} arcs", g.nodes.len(), g.arcs.len())
        })?;
        let live = liveness(&net, &g, &sccs).map_err(|e| e.to_string())?;
        let n_dead = live.dead_markings.len();
        ensure(dead.map_or(n_dead >= 1, |d| d == n_dead), || format!("{name}: {n_dead} dead markings"))?;
        let run = simulate(&net, 10_000, &mut LabRng::seed_from_u64(seed));
        ensure(run.finished && run.steps.len() == steps, || format!("{name}: {} steps", run.steps.len()))?;
        summary.push(format!("{name} {places}/{transitions} {nodes}/{arcs} {steps} steps {n_dead} dead"));
    }
    Ok(summary.join("; "))
}

fn attack_matrix_ratings() -> Check {
    let h = Harness::new(11);
    let run = |p, a, seed| h.run(p, a, &mut LabRng::seed_from_u64(seed));
    for p in [Protocol::Pkmv2, Protocol::EapTls, Protocol::DhProposed] {
        let out = run(p, Attack::Interception, 0);
        ensure(!out.broken && out.victims.iter().all(|v| !v.key_derivable), || format!("{p} interception: {}", out.evidence))?;
    }
    for p in [Protocol::EapTls, Protocol::DhProposed] {
        for a in [Attack::Mitm, Attack::Replay] {
            let out = run(p, a, 0);
            ensure(!out.broken, || format!("{p} {}: {}", a.name(), out.evidence))?;
        }
    }
    let wins = (0..MITM_RUNS).filter(|&s| run(Protocol::DhBare, Attack::Mitm, s).broken).count();
    ensure(wins as u64 == MITM_RUNS, || format!("dh-bare mitm {wins}/{MITM_RUNS}"))?;
    let replay = run(Protocol::Pkmv1, Attack::Replay, 0);
    ensure(replay.broken, || format!("pkmv1 replay: {}", replay.evidence))?;
    Ok(format!("passive keys secret, eap/dh-proposed resist, dh-bare mitm {wins}/{MITM_RUNS}, pkmv1 replay succeeds"))
}

fn naive_reachable(net: &Net) -> (HashSet<String>, usize) {
    let m0 = Marking::initial(net);
    let t0 = next_enabled_time(net, &m0, 0).unwrap_or(0);
    let key = |m: &Marking, t: Time| format!("{m:?}@{t}");
    let mut seen = HashSet::from([key(&m0, t0)]);
    let mut queue = std::collections::VecDeque::from([(m0, t0)]);
    let mut edges = 0;
    while let Some((m, t)) = queue.pop_front() {
        for occ in enabled(net, &m, t) {
            edges += 1;
            let (m2, t2) = fire(net, &m, &occ, t).unwrap();
            if seen.insert(key(&m2, t2)) {
                queue.push_back((m2, t2));
            }
        }
    }
    (seen, edges)
}

fn ring(k: i64) -> Net {
    NetBuilder::new("ring", 1)
        .untimed_place("c", ColorSet::Int, vec![Value::Int(0)])
        .untimed_place("d", ColorSet::Int, vec![Value::Int(0), Value::Int(1)])
        .transition("inc", Guard::Lt(Operand::Var("x".into()), Operand::Int(k)))
        .transition("reset", Guard::Eq(Operand::Var("x".into()), Operand::Int(k)))
        .transition("swap", Guard::True)
        .input("c", "inc", var("x"))
        .output("inc", "c", plus("x", 1))
        .input("c", "reset", var("x"))
        .output("reset", "c", int(0))
        .input("d", "swap", var("y"))
        .output("swap", "d", var("y"))
        .build()
        .unwrap()
}

fn random_term(rng: &mut LabRng, depth: u32) -> Term {
    let ids = ["ss", "bs", "m"];
    let pick = |rng: &mut LabRng| ids[rng.gen_range(0..3)];
    if depth == 0 || rng.gen_bool(0.4) {
        return match rng.gen_range(0..4) {
            0 => Term::name(format!("n{}", rng.gen_range(0..4))),
            1 => Term::private_key(pick(rng)),
            2 => Term::exponent(pick(rng)),
            _ => Term::dh_pub(pick(rng)),
        };
    }
    match rng.gen_range(0..4) {
        0 => Term::pair(random_term(rng, depth - 1), random_term(rng, depth - 1)),
        1 => Term::hash_of(random_term(rng, depth - 1)),
        2 => Term::pk_enc(pick(rng), random_term(rng, depth - 1)),
        _ => Term::dh_shared(pick(rng), random_term(rng, depth - 1)),
    }
}

fn property_suites() -> Check {
    let lab = Lab::new(5);
    let mut rng = LabRng::seed_from_u64(17);
    let mut notes = Vec::new();
    for p in [Protocol::Pkmv2, Protocol::EapTls, Protocol::DhProposed] {
        let r = mutation_campaign(&lab, p, MUTATIONS, &mut rng);
        // the unauthenticated certificate broadcast is outside the integrity envelope
        let bad: Vec<_> = r.survivors.iter().filter(|f| !f.starts_with("Pkmv2AuthInfo.")).collect();
        ensure(r.applied == MUTATIONS && bad.is_empty(), || format!("{p}: {bad:?}"))?;
    }
    notes.push(format!("{MUTATIONS} mutations each on pkmv2/eap/dh-proposed"));

    let mut nets: Vec<Net> = ["proposed", "pkmv2", "eap"].iter().filter_map(|n| net_by_name(n)).collect();
    nets.extend((1..=6).map(ring));
    let mut checked = 0;
    for net in &nets {
        let (naive, edges) = naive_reachable(net);
        if naive.len() > NAIVE_LIMIT {
            continue;
        }
        let g = explore(net);
        ensure(g.nodes.len() == naive.len() && g.arcs.len() == edges, || format!("{}: explore disagrees", net.name()))?;
        ensure(g.nodes.iter().all(|s| naive.contains(&format!("{:?}@{}", s.marking, s.time))), || net.name().into())?;
        checked += 1;
    }
    ensure(checked == nets.len(), || format!("only {checked} nets under {NAIVE_LIMIT} markings"))?;
    notes.push(format!("explore = BFS on {checked} nets"));

    for _ in 0..200 {
        let n = rng.gen_range(0..7);
        let ts: Vec<Term> = (0..n).map(|_| random_term(&mut rng, 3)).collect();
        let extra: Vec<Term> = (0..3).map(|_| random_term(&mut rng, 2)).collect();
        let small = KnowledgeBase::from_terms(ts.clone());
        let big = KnowledgeBase::from_terms(ts.into_iter().chain(extra));
        let (cs, cb) = (knowledge_closure(&small), knowledge_closure(&big));
        ensure(small.is_subset(&cs) && knowledge_closure(&cs) == cs, || "closure not idempotent".into())?;
        ensure(cs.is_subset(&cb), || "closure not monotone".into())?;
    }
    notes.push("closure monotone and idempotent on 200 draws".into());

    for df in 1..=30u32 {
        for p in [0.95, 0.975, 0.995] {
            let got: f64 = t_quantile(p, df).map_err(|e| e.to_string())?;
            let want = oracle_quantile(p, df as f64);
            ensure((got - want).abs() < TOL, || format!("t({p}, {df}) = {got} vs {want}"))?;
        }
    }
    notes.push("t quantiles df 1..30".into());
    Ok(notes.join(", "))
}

/// Student-t cdf by Simpson integration of the density.
fn oracle_cdf(x: f64, df: f64) -> f64 {
    let ln_c = ln_gamma_oracle((df + 1.0) / 2.0) - ln_gamma_oracle(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let pdf = |t: f64| (ln_c - (df + 1.0) / 2.0 * (1.0 + t * t / df).ln()).exp();
    let n = 20_000;
    let h = x / n as f64;
    let mut s = pdf(0.0) + pdf(x);
    for i in 1..n {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 + s * h / 3.0
}

fn ln_gamma_oracle(z: f64) -> f64 {
    // z is a positive multiple of 1/2
    let mut g = if (z.fract() - 0.5).abs() < 1e-9 { 0.5 * std::f64::consts::PI.ln() } else { 0.0 };
    let mut k = if (z.fract() - 0.5).abs() < 1e-9 { 0.5 } else { 1.0 };
    while k < z - 1e-9 {
        g += k.ln();
        k += 1.0;
    }
    g
}

fn oracle_quantile(p: f64, df: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1000.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if oracle_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("key agreement over q=23, g=5", key_agreement),
        ("proposed state space report", state_space_report),
        ("timed monitor statistics", timed_statistics),
        ("simulation footer", simulation_footer),
        ("catalog net structure", net_structure),
        ("attack matrix", attack_matrix_ratings),
        ("property suites", property_suites),
    ];
    let started = Instant::now();
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {title}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {title}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed in {:.1}s", criteria.len() - failed, criteria.len(), started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
