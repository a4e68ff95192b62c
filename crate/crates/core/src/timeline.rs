//! Discrete-event simulation of one dispatch / compute / collect round.
//!
//! A coordinating unit initializes, addresses the workers one after the other,
//! each worker computes once its message arrives, and the coordinator collects
//! the returned results in arrival order once its own dispatch loop is over.
//!
//! Times are held as integer femtosecond ticks, optionally rounded up to whole
//! clock periods, so a configuration always replays to bit-identical results.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use num_integer::Integer;
use thiserror::Error;

use crate::amdahl::{self, AmdahlError};
use crate::ledger::{self, Contribution, LedgerError, MachineSpec, WorkloadSpec};

const TICKS_PER_SECOND: f64 = 1e15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimelineError {
    #[error("timeline needs at least one worker")]
    NoWorkers,
    #[error("per-worker array {field} has {got} entries, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("invalid timeline parameter {field} = {value}")]
    InvalidValue { field: &'static str, value: f64 },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DispatchMode {
    /// Addressing of the next worker overlaps the flight of the previous message.
    #[default]
    Pipelined,
    /// The coordinator waits for each message to arrive before addressing the next worker.
    Blocking,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimelineConfig {
    pub t_init_sw: f64,
    pub t_init_os: f64,
    /// Addressing time per worker, paid by the coordinator.
    pub t_addr: f64,
    pub pd_out: Vec<f64>,
    pub pd_back: Vec<f64>,
    pub t_compute: Vec<f64>,
    /// Coordinator time to take in one returned result.
    pub t_collect: f64,
    pub dispatch_mode: DispatchMode,
    /// When set, every event time is rounded up to a whole clock period.
    pub clock_hz: Option<f64>,
}

impl TimelineConfig {
    /// `n` identical workers with no overheads at all.
    pub fn ideal(n: usize, t_compute: f64) -> Self {
        Self {
            t_init_sw: 0.0,
            t_init_os: 0.0,
            t_addr: 0.0,
            pd_out: vec![0.0; n],
            pd_back: vec![0.0; n],
            t_compute: vec![t_compute; n],
            t_collect: 0.0,
            dispatch_mode: DispatchMode::Pipelined,
            clock_hz: None,
        }
    }

    pub fn n_workers(&self) -> usize {
        self.t_compute.len()
    }

    pub fn validate(&self) -> Result<(), TimelineError> {
        let n = self.n_workers();
        if n == 0 {
            return Err(TimelineError::NoWorkers);
        }
        for (field, arr) in [("pd_out", &self.pd_out), ("pd_back", &self.pd_back)] {
            if arr.len() != n {
                return Err(TimelineError::LengthMismatch {
                    field,
                    got: arr.len(),
                    expected: n,
                });
            }
        }
        let bad = |field, value| Err(TimelineError::InvalidValue { field, value });
        for (field, value) in [
            ("t_init_sw", self.t_init_sw),
            ("t_init_os", self.t_init_os),
            ("t_addr", self.t_addr),
            ("t_collect", self.t_collect),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return bad(field, value);
            }
        }
        for (field, arr) in [("pd_out", &self.pd_out), ("pd_back", &self.pd_back)] {
            if let Some(&v) = arr.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return bad(field, v);
            }
        }
        if let Some(&v) = self.t_compute.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return bad("t_compute", v);
        }
        if let Some(hz) = self.clock_hz {
            if !(hz > 0.0) || !hz.is_finite() {
                return bad("clock_hz", hz);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimelineResult {
    pub n_workers: usize,
    pub total_time: f64,
    pub payload_time_sum: f64,
    pub per_worker_idle: Vec<f64>,
    /// `payload_time_sum / total_time`.
    pub speedup: f64,
    /// Empirical alpha of the measured speedup; `None` for a single worker.
    pub empirical_alpha: Option<f64>,
    pub utilization: f64,
    /// Time the coordinator works alone: initialization plus the dispatch loop.
    pub work_alone: f64,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Actor {
    Coordinator,
    Worker(usize),
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Coordinator => f.write_str("coordinator"),
            Actor::Worker(i) => write!(f, "worker{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    InitDone,
    Dispatch,
    DispatchLoopDone,
    Arrive,
    ComputeDone,
    ResultArrive,
    Collected,
}

impl EventKind {
    pub const fn name(self) -> &'static str {
        match self {
            EventKind::InitDone => "init_done",
            EventKind::Dispatch => "dispatch",
            EventKind::DispatchLoopDone => "dispatch_loop_done",
            EventKind::Arrive => "arrive",
            EventKind::ComputeDone => "compute_done",
            EventKind::ResultArrive => "result_arrive",
            EventKind::Collected => "collected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    ticks: u128,
    pub actor: Actor,
    pub kind: EventKind,
}

impl TraceEvent {
    pub fn time(&self) -> f64 {
        to_seconds(self.ticks)
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.time(), self.actor, self.kind.name())
    }
}

/// Renders a trace as `time<TAB>actor<TAB>event` lines.
pub fn format_trace(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in trace {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

fn to_ticks(seconds: f64) -> u128 {
    (seconds * TICKS_PER_SECOND).round() as u128
}

fn to_seconds(ticks: u128) -> f64 {
    ticks as f64 / TICKS_PER_SECOND
}

/// `num / den` as a float, reduced first so exact ratios stay exact.
fn ratio(num: u128, den: u128) -> f64 {
    let g = num.gcd(&den).max(1);
    (num / g) as f64 / (den / g) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Pending {
    Dispatch(usize),
    LoopDone,
    Arrive(usize),
    ComputeDone(usize),
    ResultArrive(usize),
    Collected(usize),
}

impl Pending {
    fn worker(self) -> usize {
        match self {
            Pending::Dispatch(i)
            | Pending::Arrive(i)
            | Pending::ComputeDone(i)
            | Pending::ResultArrive(i)
            | Pending::Collected(i) => i,
            Pending::LoopDone => usize::MAX,
        }
    }
}

struct Sim<'a> {
    cfg: &'a TimelineConfig,
    quantum: Option<u128>,
    queue: BinaryHeap<Reverse<(u128, usize, u64, Pending)>>,
    seq: u64,
    trace: Option<Vec<TraceEvent>>,
}

impl Sim<'_> {
    fn snap(&self, t: u128) -> u128 {
        match self.quantum {
            Some(q) if q > 0 => t.div_ceil(q) * q,
            _ => t,
        }
    }

    fn schedule(&mut self, at: u128, ev: Pending) {
        let at = self.snap(at);
        self.seq += 1;
        self.queue.push(Reverse((at, ev.worker(), self.seq, ev)));
    }

    fn record(&mut self, ticks: u128, actor: Actor, kind: EventKind) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceEvent { ticks, actor, kind });
        }
    }
}

pub fn simulate(cfg: &TimelineConfig) -> Result<TimelineResult, TimelineError> {
    run(cfg, false)
}

/// Like [`simulate`], also recording every event.
pub fn simulate_traced(cfg: &TimelineConfig) -> Result<TimelineResult, TimelineError> {
    run(cfg, true)
}

fn run(cfg: &TimelineConfig, traced: bool) -> Result<TimelineResult, TimelineError> {
    cfg.validate()?;
    let n = cfg.n_workers();
    let t_addr = to_ticks(cfg.t_addr);
    let t_collect = to_ticks(cfg.t_collect);
    let pd_out: Vec<u128> = cfg.pd_out.iter().map(|&v| to_ticks(v)).collect();
    let pd_back: Vec<u128> = cfg.pd_back.iter().map(|&v| to_ticks(v)).collect();
    let compute: Vec<u128> = cfg.t_compute.iter().map(|&v| to_ticks(v)).collect();

    let mut sim = Sim {
        cfg,
        quantum: cfg.clock_hz.map(|hz| to_ticks(1.0 / hz)),
        queue: BinaryHeap::with_capacity(2 * n),
        seq: 0,
        trace: traced.then(Vec::new),
    };

    let init = sim.snap(to_ticks(cfg.t_init_sw + cfg.t_init_os));
    sim.record(init, Actor::Coordinator, EventKind::InitDone);
    sim.schedule(init + t_addr, Pending::Dispatch(0));

    let mut loop_done = false;
    let mut loop_end = 0u128;
    let mut busy = false;
    let mut waiting: VecDeque<usize> = VecDeque::new();
    let mut last = init;

    while let Some(Reverse((now, _, _, ev))) = sim.queue.pop() {
        last = last.max(now);
        match ev {
            Pending::Dispatch(i) => {
                sim.record(now, Actor::Coordinator, EventKind::Dispatch);
                sim.schedule(now + pd_out[i], Pending::Arrive(i));
                let free_at = match sim.cfg.dispatch_mode {
                    DispatchMode::Pipelined => now,
                    DispatchMode::Blocking => now + pd_out[i],
                };
                if i + 1 < n {
                    sim.schedule(free_at + t_addr, Pending::Dispatch(i + 1));
                } else {
                    sim.schedule(free_at, Pending::LoopDone);
                }
            }
            Pending::LoopDone => {
                sim.record(now, Actor::Coordinator, EventKind::DispatchLoopDone);
                loop_done = true;
                loop_end = now;
            }
            Pending::Arrive(i) => {
                sim.record(now, Actor::Worker(i), EventKind::Arrive);
                sim.schedule(now + compute[i], Pending::ComputeDone(i));
            }
            Pending::ComputeDone(i) => {
                sim.record(now, Actor::Worker(i), EventKind::ComputeDone);
                sim.schedule(now + pd_back[i], Pending::ResultArrive(i));
            }
            Pending::ResultArrive(i) => {
                sim.record(now, Actor::Coordinator, EventKind::ResultArrive);
                waiting.push_back(i);
            }
            Pending::Collected(_) => {
                sim.record(now, Actor::Coordinator, EventKind::Collected);
                busy = false;
            }
        }
        if loop_done && !busy {
            if let Some(j) = waiting.pop_front() {
                busy = true;
                sim.schedule(now + t_collect, Pending::Collected(j));
            }
        }
    }

    let total = last;
    let payload: u128 = compute.iter().sum();
    let speedup = ratio(payload, total);
    let per_worker_idle = (0..n)
        .map(|i| to_seconds(total - (pd_out[i] + compute[i] + pd_back[i])))
        .collect();
    Ok(TimelineResult {
        n_workers: n,
        total_time: to_seconds(total),
        payload_time_sum: to_seconds(payload),
        per_worker_idle,
        speedup,
        empirical_alpha: amdahl::empirical_alpha(speedup, n as u64).ok(),
        utilization: ratio(payload, total * n as u128),
        work_alone: to_seconds(loop_end),
        trace: sim.trace.unwrap_or_default(),
    })
}

/// Empirical alpha of a finished run on `n` units.
pub fn empirical_alpha(r: &TimelineResult, n: u64) -> Result<f64, AmdahlError> {
    amdahl::empirical_alpha(r.speedup, n)
}

/// Timeline equivalent of a ledger operating point.
///
/// Initialization carries the fixed, application and grid-sync serial times;
/// the per-unit looping cost is split evenly between addressing and
/// collection; the propagation delay is split evenly between the outbound and
/// return flights; every worker computes for the payload time.
pub fn timeline_config_for(m: &MachineSpec, w: &WorkloadSpec, n: u64) -> Result<TimelineConfig, TimelineError> {
    let times = ledger::serial_times(m, w, n)?;
    let per_unit_loop = times.get(Contribution::Looping) / n as f64;
    let flight = times.get(Contribution::Propagation) / 2.0;
    let workers = n as usize;
    Ok(TimelineConfig {
        t_init_sw: times.get(Contribution::SwOsFixed),
        t_init_os: times.get(Contribution::ApplicationIteration) + times.get(Contribution::GridSync),
        t_addr: per_unit_loop / 2.0,
        pd_out: vec![flight; workers],
        pd_back: vec![flight; workers],
        t_compute: vec![w.payload_time(m, n); workers],
        t_collect: per_unit_loop / 2.0,
        dispatch_mode: DispatchMode::Pipelined,
        clock_hz: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub n: u64,
    pub simulated_efficiency: f64,
    pub ledger_efficiency: f64,
    pub relative_difference: f64,
    /// Payload time is at least ten times the total serial time.
    pub payload_dominated: bool,
}

impl CrossCheck {
    pub const TOLERANCE: f64 = 0.05;

    /// `None` outside the payload-dominated regime, where no agreement is expected.
    pub fn within_tolerance(&self) -> Option<bool> {
        self.payload_dominated
            .then_some(self.relative_difference <= Self::TOLERANCE)
    }

    pub fn regime_mismatch(&self) -> bool {
        !self.payload_dominated
    }
}

/// Runs `c` and compares its utilization with the ledger efficiency of (`m`, `w`)
/// at `c.n_workers()` units.
pub fn compare_to_analytic(c: &TimelineConfig, m: &MachineSpec, w: &WorkloadSpec) -> Result<CrossCheck, TimelineError> {
    let n = c.n_workers() as u64;
    let sim = simulate(c)?;
    let l = ledger::ledger(m, w, n)?;
    Ok(CrossCheck {
        n,
        simulated_efficiency: sim.utilization,
        ledger_efficiency: l.efficiency,
        relative_difference: (sim.utilization - l.efficiency).abs() / l.efficiency,
        payload_dominated: l.payload_time >= 10.0 * l.serial_time(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn two_worker(mode: DispatchMode) -> TimelineConfig {
        TimelineConfig {
            t_addr: 0.5,
            dispatch_mode: mode,
            ..TimelineConfig::ideal(2, 1.0)
        }
    }

    #[test]
    fn ideal_two_workers() {
        let r = simulate(&TimelineConfig::ideal(2, 1.0)).unwrap();
        assert_eq!(r.total_time, 1.0);
        assert_eq!(r.speedup, 2.0);
        assert_eq!(r.empirical_alpha, Some(1.0));
        assert_eq!(r.utilization, 1.0);
    }

    #[test]
    fn ideal_is_exact_for_awkward_times() {
        for n in [3usize, 7, 10, 1000] {
            let r = simulate(&TimelineConfig::ideal(n, 0.1)).unwrap();
            assert_eq!(r.speedup, n as f64);
            assert_eq!(r.empirical_alpha, Some(1.0));
        }
    }

    #[test]
    fn single_worker_has_no_empirical_alpha() {
        let mut c = TimelineConfig::ideal(1, 2.0);
        c.t_addr = 0.3;
        c.t_init_os = 1.0;
        let r = simulate(&c).unwrap();
        assert_eq!(r.empirical_alpha, None);
        assert_eq!(empirical_alpha(&r, 1), Err(AmdahlError::SingleUnit));
    }

    #[test]
    fn hand_walked_pipelined_example() {
        let r = simulate_traced(&two_worker(DispatchMode::Pipelined)).unwrap();
        assert_eq!(r.total_time, 2.0);
        assert_eq!(r.speedup, 1.0);
        assert_eq!(r.empirical_alpha, Some(0.0));
        assert_eq!(r.work_alone, 1.0);
        let dispatches: Vec<f64> = r
            .trace
            .iter()
            .filter(|e| e.kind == EventKind::Dispatch)
            .map(TraceEvent::time)
            .collect();
        assert_eq!(dispatches, vec![0.5, 1.0]);
        let done: Vec<(Actor, f64)> = r
            .trace
            .iter()
            .filter(|e| e.kind == EventKind::ComputeDone)
            .map(|e| (e.actor, e.time()))
            .collect();
        assert_eq!(done, vec![(Actor::Worker(0), 1.5), (Actor::Worker(1), 2.0)]);
        assert_eq!(r.per_worker_idle, vec![1.0, 1.0]);
    }

    #[test]
    fn blocking_waits_for_flight() {
        let mut c = two_worker(DispatchMode::Blocking);
        c.pd_out = vec![0.25, 0.25];
        let r = simulate(&c).unwrap();
        // dispatch 0.5, arrive 0.75, next dispatch 1.25, arrive 1.5, done 2.5
        assert_eq!(r.total_time, 2.5);
        assert_eq!(r.work_alone, 1.5);
        c.dispatch_mode = DispatchMode::Pipelined;
        assert_eq!(simulate(&c).unwrap().total_time, 2.25);
    }

    #[test]
    fn collection_is_sequential_in_arrival_order() {
        let c = TimelineConfig {
            t_collect: 1.0,
            t_compute: vec![3.0, 1.0, 1.0],
            ..TimelineConfig::ideal(3, 1.0)
        };
        let r = simulate_traced(&c).unwrap();
        // results of workers 1 and 2 arrive at 1, worker 0 at 3: collections end at 2, 3, 4
        assert_eq!(r.total_time, 4.0);
        let arrivals: Vec<String> = r
            .trace
            .iter()
            .filter(|e| e.kind == EventKind::Collected)
            .map(|e| e.time().to_string())
            .collect();
        assert_eq!(arrivals, vec!["2", "3", "4"]);
    }

    #[test]
    fn clock_quantum_rounds_up() {
        let c = TimelineConfig {
            t_addr: 0.3,
            clock_hz: Some(1.0),
            ..TimelineConfig::ideal(2, 1.0)
        };
        let r = simulate(&c).unwrap();
        // dispatch 0.3 -> 1, arrive 1, done 2; dispatch 1.3 -> 2, done 3
        assert_eq!(r.total_time, 3.0);
    }

    #[test]
    fn trace_lines_are_tab_separated() {
        let r = simulate_traced(&two_worker(DispatchMode::Pipelined)).unwrap();
        let text = format_trace(&r.trace);
        let first = text.lines().nth(1).unwrap();
        assert_eq!(first, "0.5\tcoordinator\tdispatch");
        assert!(text.lines().all(|l| l.split('\t').count() == 3));
    }

    #[test]
    fn validation_errors() {
        let mut c = TimelineConfig::ideal(2, 1.0);
        c.pd_out.pop();
        assert!(matches!(simulate(&c), Err(TimelineError::LengthMismatch { field: "pd_out", .. })));
        let mut c = TimelineConfig::ideal(2, 1.0);
        c.t_compute[1] = 0.0;
        assert!(simulate(&c).unwrap_err().to_string().contains("t_compute"));
        assert_eq!(simulate(&TimelineConfig::ideal(0, 1.0)), Err(TimelineError::NoWorkers));
    }

    #[test]
    fn deterministic_replay() {
        let mut rng = StdRng::seed_from_u64(7);
        let c = random_config(&mut rng, 50);
        assert_eq!(simulate_traced(&c).unwrap(), simulate_traced(&c).unwrap());
    }

    fn random_config(rng: &mut impl Rng, max_n: usize) -> TimelineConfig {
        let n = rng.gen_range(1..=max_n);
        TimelineConfig {
            t_init_sw: rng.gen_range(0.0..1.0),
            t_init_os: rng.gen_range(0.0..1.0),
            t_addr: rng.gen_range(0.0..0.1),
            pd_out: (0..n).map(|_| rng.gen_range(0.0..0.5)).collect(),
            pd_back: (0..n).map(|_| rng.gen_range(0.0..0.5)).collect(),
            t_compute: (0..n).map(|_| rng.gen_range(0.01..3.0)).collect(),
            t_collect: rng.gen_range(0.0..0.1),
            dispatch_mode: DispatchMode::Pipelined,
            clock_hz: None,
        }
    }

    #[test]
    fn result_invariants_on_random_configs() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..300 {
            let c = random_config(&mut rng, 40);
            let r = simulate(&c).unwrap();
            let n = c.n_workers() as f64;
            assert!(r.speedup <= n);
            assert!((0.0..=1.0).contains(&r.utilization));
            assert!(r.per_worker_idle.iter().all(|&v| v >= 0.0));
            assert_relative_eq!(r.work_alone, c.t_init_sw + c.t_init_os + n * c.t_addr, max_relative = 1e-9);
            if let Some(a) = r.empirical_alpha {
                if r.speedup >= 1.0 {
                    assert!((0.0..=1.0).contains(&a));
                }
            }
            let mut b = c.clone();
            b.dispatch_mode = DispatchMode::Blocking;
            assert!(r.total_time <= simulate(&b).unwrap().total_time);
        }
    }

    #[test]
    fn total_time_monotone_in_each_parameter() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let c = random_config(&mut rng, 20);
            let base = simulate(&c).unwrap().total_time;
            type Bump = Box<dyn Fn(&mut TimelineConfig)>;
            let bumps: Vec<Bump> = vec![
                Box::new(|c| c.t_init_sw += 0.1),
                Box::new(|c| c.t_init_os += 0.1),
                Box::new(|c| c.t_addr += 0.01),
                Box::new(|c| c.t_collect += 0.01),
                Box::new(|c| c.pd_out[0] += 0.2),
                Box::new(|c| *c.pd_back.last_mut().unwrap() += 0.2),
                Box::new(|c| c.t_compute[0] += 0.2),
            ];
            for bump in bumps {
                let mut d = c.clone();
                bump(&mut d);
                assert!(simulate(&d).unwrap().total_time >= base);
            }
        }
    }

    #[test]
    fn alpha_falls_as_addressing_grows() {
        let mut last = f64::INFINITY;
        for k in 0..10 {
            let c = TimelineConfig {
                t_addr: k as f64 * 0.01,
                ..TimelineConfig::ideal(16, 1.0)
            };
            let a = simulate(&c).unwrap().empirical_alpha.unwrap();
            assert!(a < last || (k == 0 && a == 1.0));
            // analytic: total = 1 + 16 t_addr, S = 16 / total
            let s = 16.0 / (1.0 + 16.0 * k as f64 * 0.01);
            assert_relative_eq!(a, 16.0 * (s - 1.0) / (15.0 * s), max_relative = 1e-9);
            last = a;
        }
    }

    #[test]
    fn alpha_approaches_utilization_as_overheads_vanish() {
        let mut gaps = Vec::new();
        for k in 1..=6 {
            let t = 10f64.powi(-k);
            let c = TimelineConfig {
                t_init_sw: t,
                t_addr: t,
                t_collect: t,
                ..TimelineConfig::ideal(64, 1.0)
            };
            let r = simulate(&c).unwrap();
            gaps.push((r.empirical_alpha.unwrap() - r.utilization).abs());
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        assert!(*gaps.last().unwrap() < 1e-3);
    }

    #[test]
    fn cross_check_against_ledger() {
        let ideal = MachineSpec::ideal(1e9, 1e9);
        let w = WorkloadSpec::strong(crate::ledger::WorkloadKind::HplLike, 1e15);
        let c = timeline_config_for(&ideal, &w, 100).unwrap();
        let x = compare_to_analytic(&c, &ideal, &w).unwrap();
        assert_eq!(x.relative_difference, 0.0);

        let m = MachineSpec {
            t_addr: 1e-3,
            ..ideal
        };
        let c = timeline_config_for(&m, &w, 1000).unwrap();
        let x = compare_to_analytic(&c, &m, &w).unwrap();
        assert!(x.payload_dominated);
        assert_eq!(x.within_tolerance(), Some(true));

        let collapse = MachineSpec { t_addr: 10.0, ..ideal };
        let c = timeline_config_for(&collapse, &w, 1000).unwrap();
        let x = compare_to_analytic(&c, &collapse, &w).unwrap();
        assert!(x.regime_mismatch());
        assert_eq!(x.within_tolerance(), None);
    }
}
