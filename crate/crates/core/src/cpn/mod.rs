//! Timed coloured Petri nets: occurrence rule, simulation, state spaces and
//! monitor statistics.

mod marking;
mod net;
mod simulate;
mod statespace;
mod stats;

pub use marking::{enabled, fire, next_enabled_time, FireError, Marking, Occurrence, Time, Token};
pub use net::{
    int, plus, unit, var, Arc, ArcExpr, Binding, ColorSet, Direction, Guard, Net, NetBuilder, NetError, NetFileError,
    NetSpec, Operand, Place, Transition, Value,
};
pub use simulate::{monitor_name, simulate, LogError, MonitorLog, Sample, SimulationRun, Step};
pub use statespace::{
    explore, explore_with_limit, liveness, scc, statespace_report, tarjan, GraphArc, LivenessError, LivenessReport,
    SccGraph, State, StateSpaceGraph, Status, DEFAULT_NODE_LIMIT,
};
pub use stats::{
    inc_beta, ln_gamma, stats_row, t_cdf, t_quantile, timed_stats, timed_stats_with, CriticalValues, StatsError,
    TimedStats, CONFIDENCE_LEVELS, STATS_HEADER,
};
