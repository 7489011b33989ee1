//! `pkmlab` command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pkmlab::adversary::{attack_matrix, Attack, AttackOutcome, Harness};
use pkmlab::cpn::{
    explore_with_limit, liveness, scc, simulate, stats_row, statespace_report, timed_stats_with, CriticalValues,
    MonitorLog, Net, Status, TimedStats, DEFAULT_NODE_LIMIT, STATS_HEADER,
};
use pkmlab::crypto::DhGroup;
use pkmlab::nets::{net_by_name, NET_NAMES};
use pkmlab::protocol::{HandshakeResult, Lab, Protocol};
use pkmlab::{LabRng, Stat};
use rand::SeedableRng;
use serde_json::{json, Value};

/// Environment variable naming a directory that replaces the bundled fixtures.
const FIXTURES_ENV: &str = "PKMLAB_FIXTURES";

const EXIT_CODES: &str = "\
Exit codes:
  0  success (for `auth run`: every party accepted)
  1  `auth run` finished with a party not accepting, or an I/O failure
  2  usage error: unknown protocol, net, attack or unreadable input
  3  state space exploration stopped at the node limit

Set PKMLAB_FIXTURES to a directory with groups/<name>.txt to override the
bundled Diffie-Hellman groups.";

#[derive(Parser, Debug)]
#[command(name = "pkmlab", version, about = "Handshake runs, symbolic attacks and Petri net analysis", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Authentication handshakes and attacks on them.
    #[command(subcommand)]
    Auth(AuthCommand),
    /// Coloured Petri net models.
    #[command(subcommand)]
    Cpn(CpnCommand),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Group {
    Toy,
    #[default]
    Realistic,
}

impl Group {
    fn name(self) -> &'static str {
        match self {
            Group::Toy => "toy",
            Group::Realistic => "realistic",
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for every random choice; equal seeds give equal output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Print every message or firing in full.
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand, Debug)]
enum AuthCommand {
    /// One honest handshake.
    Run {
        /// pkmv1, pkmv2, eap, dh-proposed or dh-bare.
        #[arg(long)]
        protocol: Protocol,
        /// Diffie-Hellman group for the DH protocols.
        #[arg(long, value_enum, default_value_t = Group::Realistic)]
        group: Group,
        #[command(flatten)]
        common: Common,
    },
    /// One scripted attack.
    Attack {
        /// pkmv1, pkmv2, eap, dh-proposed or dh-bare.
        #[arg(long)]
        protocol: Protocol,
        /// mitm, replay or interception.
        #[arg(long)]
        attack: Attack,
        #[command(flatten)]
        common: Common,
    },
    /// Every attack against every protocol.
    Matrix {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand, Debug)]
enum CpnCommand {
    /// Random run with monitor statistics.
    Simulate {
        /// Catalog name (pkmv2, eap, proposed) or path to a net JSON file.
        #[arg(long)]
        net: String,
        /// Stop after this many firings.
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Directory receiving one log file per monitor.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// State space report.
    Statespace {
        /// Catalog name or path to a net JSON file.
        #[arg(long)]
        net: String,
        /// Stop exploring after this many nodes and report a partial graph.
        #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
        max_nodes: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Timed statistics of a monitor log.
    Stats {
        /// Monitor log written by `cpn simulate --log`.
        #[arg(long)]
        log: PathBuf,
        /// Use unrounded t critical values.
        #[arg(long)]
        exact: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Net structure as JSON.
    Export {
        /// Catalog name or path to a net JSON file.
        #[arg(long)]
        net: String,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
}

type Outcome = Result<(String, u8), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Auth(c) => auth(c),
        Command::Cpn(c) => cpn(c),
    };
    match result {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialise");
    s.push('\n');
    s
}

fn group(g: Group) -> Result<DhGroup, Failure> {
    match std::env::var_os(FIXTURES_ENV) {
        Some(dir) => {
            let path = Path::new(&dir).join("groups").join(format!("{}.txt", g.name()));
            DhGroup::load_fixture(&path).map_err(|e| Failure::Usage(e.to_string()))
        }
        None => Ok(match g {
            Group::Toy => DhGroup::toy(),
            Group::Realistic => DhGroup::realistic(),
        }),
    }
}

fn harness(seed: u64) -> Result<Harness, Failure> {
    let mut lab = Lab::new(seed);
    lab.group = group(Group::Realistic)?;
    Ok(Harness::from_lab(lab))
}

fn auth(c: AuthCommand) -> Outcome {
    match c {
        AuthCommand::Run { protocol, group: g, common } => {
            let mut lab = Lab::new(common.seed);
            lab.group = group(g)?;
            let res = lab.run(protocol, &mut LabRng::seed_from_u64(common.seed));
            let code = if res.all_accepted() { 0 } else { 1 };
            let out = match common.format {
                Format::Text => run_text(protocol, common.seed, &res, common.trace),
                Format::Json => render_json(&run_json(protocol, common.seed, &res)),
            };
            Ok((out, code))
        }
        AuthCommand::Attack {
            protocol,
            attack,
            common,
        } => {
            let h = harness(common.seed)?;
            let out = h.run(protocol, attack, &mut LabRng::seed_from_u64(common.seed));
            let text = match common.format {
                Format::Text => attack_text(&out, common.trace),
                Format::Json => render_json(&serde_json::to_value(&out).expect("outcomes serialise")),
            };
            Ok((text, 0))
        }
        AuthCommand::Matrix { common } => {
            let h = harness(common.seed)?;
            let m = attack_matrix(&h, &mut LabRng::seed_from_u64(common.seed));
            let text = match common.format {
                Format::Text => {
                    let mut s = m.render_text();
                    if common.trace {
                        for c in &m.cells {
                            let _ = writeln!(s, "\n{} / {}: {}", c.outcome.protocol, c.outcome.attack, c.outcome.evidence);
                            if let Some(n) = &c.note {
                                let _ = writeln!(s, "  pre-auth: {n}");
                            }
                        }
                    }
                    s
                }
                Format::Json => render_json(&m.to_json()),
            };
            Ok((text, 0))
        }
    }
}

fn run_text(protocol: Protocol, seed: u64, res: &HandshakeResult, trace: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "protocol: {protocol}");
    let _ = writeln!(s, "seed: {seed}");
    let _ = writeln!(s, "messages: {}", res.transcript.len());
    if trace {
        s.push_str(&res.transcript.to_text());
    } else {
        for e in res.transcript.entries() {
            let _ = writeln!(s, "{} {} -> {} {}", e.step, e.sender, e.receiver, e.message.variant());
        }
    }
    for st in &res.sessions {
        let key = match &st.derived_key {
            Some(k) if trace => format!(", key {}={:x}", serde_json::to_value(k.kind).unwrap().as_str().unwrap(), k.value),
            Some(k) => format!(", key {}", serde_json::to_value(k.kind).unwrap().as_str().unwrap()),
            None => String::new(),
        };
        let _ = writeln!(s, "{} ({}): {}{key}", st.principal.name, st.principal.role, st.verdict);
    }
    let _ = writeln!(s, "keys agree: {}", if res.keys_agree() { "yes" } else { "no" });
    s
}

fn run_json(protocol: Protocol, seed: u64, res: &HandshakeResult) -> Value {
    let sessions: Vec<Value> = res
        .sessions
        .iter()
        .map(|st| {
            json!({
                "name": st.principal.name,
                "role": st.principal.role,
                "verdict": st.verdict.to_string(),
                "key": st.derived_key,
            })
        })
        .collect();
    json!({
        "protocol": protocol.name(),
        "seed": seed,
        "transcript": res.transcript,
        "sessions": sessions,
        "all_accepted": res.all_accepted(),
        "keys_agree": res.keys_agree(),
    })
}

fn attack_text(o: &AttackOutcome, trace: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "protocol: {}", o.protocol);
    let _ = writeln!(s, "attack: {}", o.attack);
    let _ = writeln!(s, "broken: {}", if o.broken { "yes" } else { "no" });
    let _ = writeln!(s, "evidence: {}", o.evidence);
    for v in &o.victims {
        let derivable = match (&v.key_term, v.key_derivable) {
            (None, _) => "no key",
            (Some(_), true) => "key known to attacker",
            (Some(_), false) => "key secret",
        };
        let _ = writeln!(s, "victim {} ({}): {}, {derivable}", v.name, v.role, v.verdict);
        if trace {
            for m in &v.inputs {
                let _ = writeln!(s, "  <- {}", m.variant());
            }
            if let Some(t) = &v.key_term {
                let _ = writeln!(s, "  key term: {t}");
            }
        }
    }
    s
}

fn load_net(spec: &str) -> Result<Net, Failure> {
    if let Some(net) = net_by_name(spec) {
        return Ok(net);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Failure::Usage(format!(
            "unknown net `{spec}` (expected one of {} or a JSON file)",
            NET_NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{spec}: {e}")))?;
    Net::from_json(&text).map_err(|e| Failure::Usage(format!("{spec}: {e}")))
}

fn stats_json(name: &str, s: &TimedStats<Stat>) -> Value {
    json!({
        "name": name,
        "count": s.count,
        "avg": s.avg,
        "half_length_90": s.half_length[0],
        "half_length_95": s.half_length[1],
        "half_length_99": s.half_length[2],
        "ssd": s.ssd,
        "variance": s.variance,
        "std": s.std,
    })
}

fn cpn(c: CpnCommand) -> Outcome {
    match c {
        CpnCommand::Simulate {
            net,
            max_steps,
            log,
            common,
        } => {
            let net = load_net(&net)?;
            let run = simulate(&net, max_steps, &mut LabRng::seed_from_u64(common.seed));
            let stats: Vec<(String, Option<TimedStats<Stat>>)> = run
                .monitors
                .iter()
                .map(|m| (m.name.clone(), timed_stats_with(m, CriticalValues::Table).ok()))
                .collect();
            let mut written = Vec::new();
            if let Some(dir) = &log {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
                for m in &run.monitors {
                    let file = format!("{}.log", m.name);
                    std::fs::write(dir.join(&file), m.to_text())
                        .map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
                    written.push(file);
                }
            }
            let out = match common.format {
                Format::Json => render_json(&json!({
                    "net": run.net,
                    "seed": common.seed,
                    "steps": run.steps.len(),
                    "model_time": run.model_time,
                    "finished": run.finished,
                    "firings": run.steps,
                    "monitors": run.monitors,
                    "statistics": stats.iter().filter_map(|(n, s)| s.as_ref().map(|s| stats_json(n, s))).collect::<Vec<_>>(),
                    "log_files": written,
                })),
                Format::Text => {
                    let mut s = String::new();
                    let _ = writeln!(s, "net: {}", run.net);
                    let _ = writeln!(s, "seed: {}", common.seed);
                    if common.trace {
                        for st in &run.steps {
                            let vars: Vec<String> = st.binding.iter().map(|(k, v)| format!("{k}={v}")).collect();
                            let _ = writeln!(s, "{} @{} {} {{{}}}", st.step, st.time, st.transition, vars.join(", "));
                        }
                    }
                    if !stats.is_empty() {
                        let _ = writeln!(s, "{STATS_HEADER}");
                        for (name, st) in &stats {
                            match st {
                                Some(st) => {
                                    let _ = writeln!(s, "{}", stats_row(name, st));
                                }
                                None => {
                                    let _ = writeln!(s, "{name}\tn/a");
                                }
                            }
                        }
                        s.push('\n');
                    }
                    for f in &written {
                        let _ = writeln!(s, "log: {f}");
                    }
                    let _ = writeln!(s, "Simulation steps executed: {}", run.steps.len());
                    let _ = writeln!(s, " Model time: {:.1}", run.model_time as f64);
                    if !run.finished {
                        let _ = writeln!(s, "stopped at the step limit");
                    }
                    s
                }
            };
            Ok((out, 0))
        }
        CpnCommand::Statespace { net, max_nodes, format } => {
            let net = load_net(&net)?;
            let g = explore_with_limit(&net, max_nodes);
            let s = scc(&g);
            let live = liveness(&net, &g, &s).ok();
            let code = if g.status == Status::Partial { 3 } else { 0 };
            let out = match format {
                Format::Text => statespace_report(&g, &s, live.as_ref(), 0),
                Format::Json => render_json(&json!({
                    "net": net.name(),
                    "nodes": g.nodes.len(),
                    "arcs": g.arcs.len(),
                    "status": g.status,
                    "scc_nodes": s.components.len(),
                    "scc_arcs": s.arcs.len(),
                    "liveness": live,
                })),
            };
            Ok((out, code))
        }
        CpnCommand::Stats { log, exact, format } => {
            let text =
                std::fs::read_to_string(&log).map_err(|e| Failure::Usage(format!("{}: {e}", log.display())))?;
            let parsed = MonitorLog::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", log.display())))?;
            let crit = if exact { CriticalValues::Exact } else { CriticalValues::Table };
            let st: TimedStats<Stat> =
                timed_stats_with(&parsed, crit).map_err(|e| Failure::Usage(format!("{}: {e}", log.display())))?;
            let out = match format {
                Format::Text => format!("{STATS_HEADER}\n{}\n", stats_row(&parsed.name, &st)),
                Format::Json => render_json(&stats_json(&parsed.name, &st)),
            };
            Ok((out, 0))
        }
        CpnCommand::Export { net } => Ok((format!("{}\n", load_net(&net)?.to_json()), 0)),
    }
}
