//! Message counts and serialized communication time for the HPL, HPCG,
//! layered-ANN and brain-simulation workload classes.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommError {
    #[error("invalid communication parameter {field} = {value}")]
    Invalid { field: &'static str, value: f64 },
}

fn invalid<T>(field: &'static str, value: f64) -> Result<T, CommError> {
    Err(CommError::Invalid { field, value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WorkloadClass {
    Hpl,
    Hpcg,
    Ann,
    Brain,
}

impl fmt::Display for WorkloadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorkloadClass::Hpl => "HPL",
            WorkloadClass::Hpcg => "HPCG",
            WorkloadClass::Ann => "ANN",
            WorkloadClass::Brain => "Brain",
        })
    }
}

/// `n_in` input nodes, `h` hidden layers of `m` nodes, `k_out` output nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnTopology {
    pub n_in: u64,
    pub m: u64,
    pub h: u64,
    pub k_out: u64,
}

impl AnnTopology {
    pub fn new(n_in: u64, m: u64, h: u64, k_out: u64) -> Result<Self, CommError> {
        for (field, v) in [("n_in", n_in), ("m", m), ("h", h), ("k_out", k_out)] {
            if v < 1 {
                return invalid(field, v as f64);
            }
        }
        Ok(Self { n_in, m, h, k_out })
    }
}

/// Per-stage message counts of one forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnMessages {
    /// Input layer to the first hidden layer.
    pub input: u64,
    /// All hidden-to-hidden transfers together.
    pub hidden: u64,
    /// Last hidden layer to the outputs.
    pub output: u64,
}

impl AnnMessages {
    pub fn total(&self) -> u64 {
        self.input + self.hidden + self.output
    }
}

pub fn messages_hpl(m_workers: u64) -> u64 {
    2 * m_workers
}

pub fn messages_hpcg(m_workers: u64, iterations: u64) -> u64 {
    2 * iterations * m_workers
}

pub fn messages_ann(t: &AnnTopology) -> AnnMessages {
    AnnMessages {
        input: t.n_in * t.m,
        hidden: (t.h - 1) * t.m * t.m,
        output: t.k_out * t.m,
    }
}

/// Message count of each synchronized transfer stage, in order.
pub fn ann_stages(t: &AnnTopology) -> Vec<u64> {
    let mut stages = Vec::with_capacity(t.h as usize + 1);
    stages.push(t.n_in * t.m);
    stages.extend(std::iter::repeat_n(t.m * t.m, (t.h - 1) as usize));
    stages.push(t.k_out * t.m);
    stages
}

/// Node evaluations of one forward pass: every hidden and output node computes once.
pub fn ann_compute_ops(t: &AnnTopology) -> u64 {
    t.h * t.m + t.k_out
}

/// Messages per computation operation.
pub fn ann_comm_compute_ratio(t: &AnnTopology) -> f64 {
    messages_ann(t).total() as f64 / ann_compute_ops(t) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    /// One bus carries every message.
    Shared,
    /// Each pair of adjacent layers has its own bus.
    PerLayer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusModel {
    pub kind: BusKind,
    pub t_msg: f64,
    /// Arbitration time per message.
    pub t_arb: f64,
    queuing_stages: u32,
}

impl BusModel {
    /// Source send queue, bus arbitration, destination receive queue.
    pub const QUEUING_STAGES: u32 = 3;

    pub fn new(kind: BusKind, t_msg: f64, t_arb: f64) -> Result<Self, CommError> {
        if !(t_msg > 0.0) || !t_msg.is_finite() {
            return invalid("t_msg", t_msg);
        }
        if !(t_arb >= 0.0) || !t_arb.is_finite() {
            return invalid("t_arb", t_arb);
        }
        Ok(Self {
            kind,
            t_msg,
            t_arb,
            queuing_stages: Self::QUEUING_STAGES,
        })
    }

    pub fn queuing_stages(&self) -> u32 {
        self.queuing_stages
    }

    pub fn per_message(&self) -> f64 {
        self.t_msg + self.t_arb
    }
}

/// Time to push the given stages through the bus.
///
/// Every queue is FIFO with a fixed service time, so queuing reduces to
/// serialization. On a shared bus all messages serialize; with one bus per
/// layer pair the stages run side by side between synchronized stage
/// boundaries and the busiest stage sets the pace.
pub fn serialized_comm_time(stages: &[u64], bus: &BusModel) -> f64 {
    let per = bus.per_message();
    match bus.kind {
        BusKind::Shared => stages.iter().sum::<u64>() as f64 * per,
        BusKind::PerLayer => stages.iter().copied().max().unwrap_or(0) as f64 * per,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommProfile {
    pub message_count: u64,
    pub serialized_time: f64,
    pub workload_class: WorkloadClass,
}

pub fn profile_hpl(m_workers: u64, bus: &BusModel) -> CommProfile {
    CommProfile {
        message_count: messages_hpl(m_workers),
        serialized_time: serialized_comm_time(&[m_workers, m_workers], bus),
        workload_class: WorkloadClass::Hpl,
    }
}

pub fn profile_hpcg(m_workers: u64, iterations: u64, bus: &BusModel) -> CommProfile {
    let stages = vec![m_workers; 2 * iterations as usize];
    CommProfile {
        message_count: messages_hpcg(m_workers, iterations),
        serialized_time: serialized_comm_time(&stages, bus),
        workload_class: WorkloadClass::Hpcg,
    }
}

pub fn profile_ann(t: &AnnTopology, bus: &BusModel) -> CommProfile {
    CommProfile {
        message_count: messages_ann(t).total(),
        serialized_time: serialized_comm_time(&ann_stages(t), bus),
        workload_class: WorkloadClass::Ann,
    }
}

/// Calibrated sequential-only fractions behind the class rooflines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RooflineCalibration {
    /// `1 - alpha` of HPL-class work.
    pub serial_hpl: f64,
    /// How many times lower the HPCG roofline is than the HPL one.
    pub hpl_hpcg_ratio: f64,
    /// Performance-gain cap of brain simulation.
    pub brain_cap: f64,
}

impl Default for RooflineCalibration {
    fn default() -> Self {
        Self {
            serial_hpl: 1e-7,
            hpl_hpcg_ratio: 200.0,
            brain_cap: 1e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RooflineClass {
    Hpl,
    Hpcg,
    Brain,
}

impl RooflineClass {
    pub const ALL: [RooflineClass; 3] = [RooflineClass::Hpl, RooflineClass::Hpcg, RooflineClass::Brain];

    pub const fn name(self) -> &'static str {
        match self {
            RooflineClass::Hpl => "HPL",
            RooflineClass::Hpcg => "HPCG",
            RooflineClass::Brain => "Brain",
        }
    }
}

/// Performance-gain roofline `1 / (1 - alpha_class)`.
pub fn roofline_for_class(class: RooflineClass, cal: &RooflineCalibration) -> Result<f64, CommError> {
    if !(cal.serial_hpl > 0.0 && cal.serial_hpl < 1.0) {
        return invalid("serial_hpl", cal.serial_hpl);
    }
    if !(cal.hpl_hpcg_ratio >= 1.0) || !cal.hpl_hpcg_ratio.is_finite() {
        return invalid("hpl_hpcg_ratio", cal.hpl_hpcg_ratio);
    }
    if !(cal.brain_cap >= 1.0) || !cal.brain_cap.is_finite() {
        return invalid("brain_cap", cal.brain_cap);
    }
    let serial = match class {
        RooflineClass::Hpl => cal.serial_hpl,
        RooflineClass::Hpcg => (cal.serial_hpl * cal.hpl_hpcg_ratio).min(1.0),
        RooflineClass::Brain => 1.0 / cal.brain_cap,
    };
    Ok(1.0 / serial)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrainParams {
    pub neurons: u64,
    /// Fellow neurons each neuron reports to after a computational step.
    pub fanout: f64,
    /// Synchronization quantum of the simulation, seconds.
    pub grid_period: f64,
    /// Computation time of one neuron step, seconds.
    pub t_comp: f64,
    /// Time of one message, seconds.
    pub t_comm: f64,
}

impl Default for BrainParams {
    fn default() -> Self {
        Self {
            neurons: 10_000_000_000,
            fanout: 1e4,
            grid_period: 1e-3,
            t_comp: 1e-8,
            t_comm: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrainProfile {
    pub params: BrainParams,
    /// Messages per grid period and the time one neuron waits for its own.
    pub profile: CommProfile,
    /// Efficacy with communication divided by efficacy without it.
    pub efficiency_ratio: f64,
    /// `neurons * efficiency_ratio`: the gain left over when every neuron has its own unit.
    pub implied_gain: f64,
    /// Wall time of one neuron step (compute plus serialized messages) over the grid period.
    pub real_time_factor: f64,
}

impl BrainProfile {
    pub fn within_cap(&self, cal: &RooflineCalibration) -> bool {
        self.implied_gain <= 1.1 * cal.brain_cap
    }
}

pub fn brain_profile(p: BrainParams) -> Result<BrainProfile, CommError> {
    if p.neurons < 1 {
        return invalid("neurons", 0.0);
    }
    if !(p.fanout >= 0.0) || !p.fanout.is_finite() {
        return invalid("fanout", p.fanout);
    }
    for (field, v) in [("grid_period", p.grid_period), ("t_comp", p.t_comp), ("t_comm", p.t_comm)] {
        if !(v > 0.0) || !v.is_finite() {
            return invalid(field, v);
        }
    }
    let wait = p.fanout * p.t_comm;
    let efficiency_ratio = p.t_comp / (p.t_comp + wait);
    Ok(BrainProfile {
        params: p,
        profile: CommProfile {
            message_count: (p.neurons as f64 * p.fanout).round() as u64,
            serialized_time: wait,
            workload_class: WorkloadClass::Brain,
        },
        efficiency_ratio,
        implied_gain: p.neurons as f64 * efficiency_ratio,
        real_time_factor: (p.t_comp + wait) / p.grid_period,
    })
}

/// Hierarchic communication paths: the fan-out-induced traffic shrinks by
/// `reduction_factor` (about 100 for partly hierarchic designs).
pub fn hierarchic_reduction(b: &BrainProfile, reduction_factor: f64) -> Result<BrainProfile, CommError> {
    if !(reduction_factor >= 1.0) || !reduction_factor.is_finite() {
        return invalid("reduction_factor", reduction_factor);
    }
    brain_profile(BrainParams {
        fanout: b.params.fanout / reduction_factor,
        ..b.params
    })
}

pub const DEFAULT_HIERARCHIC_REDUCTION: f64 = 100.0;
