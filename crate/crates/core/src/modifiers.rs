//! Machine transformers: accelerators with copy overhead, reduced precision,
//! and direct core-to-core (cooperative) transfer.
//!
//! Modifiers compose: [`apply_all`] applies them in the order given.

use thiserror::Error;

use crate::ledger::{self, Contribution, LedgerError, MachineSpec, WorkloadSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModifierError {
    #[error("invalid modifier parameter {field} = {value}")]
    Invalid { field: &'static str, value: f64 },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

fn invalid<T>(field: &'static str, value: f64) -> Result<T, ModifierError> {
    Err(ModifierError::Invalid { field, value })
}

/// A compute accelerator whose data has to be copied between address spaces
/// on every dispatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accelerator {
    pub compute_speedup: f64,
    /// Copy cost per dispatched data exchange, seconds.
    pub t_copy: f64,
    /// Whether the coordinator's serial recompute also runs on the accelerator.
    pub scale_serial_compute: bool,
}

impl Accelerator {
    pub fn new(compute_speedup: f64, t_copy: f64) -> Result<Self, ModifierError> {
        let a = Self {
            compute_speedup,
            t_copy,
            scale_serial_compute: true,
        };
        a.validate()?;
        Ok(a)
    }

    /// Five times faster compute, copy cost of four addressing times.
    pub fn calibrated_for(m: &MachineSpec) -> Self {
        Self {
            compute_speedup: 5.0,
            t_copy: 4.0 * m.t_addr,
            scale_serial_compute: true,
        }
    }

    pub fn validate(&self) -> Result<(), ModifierError> {
        if !(self.compute_speedup > 1.0) || !self.compute_speedup.is_finite() {
            return invalid("compute_speedup", self.compute_speedup);
        }
        if !(self.t_copy >= 0.0) || !self.t_copy.is_finite() {
            return invalid("t_copy", self.t_copy);
        }
        Ok(())
    }
}

/// The copy lands in `t_addr`: it is paid serially for every dispatch.
pub fn apply_accelerator(m: &MachineSpec, a: &Accelerator) -> Result<MachineSpec, ModifierError> {
    a.validate()?;
    let mut out = *m;
    out.p_single *= a.compute_speedup;
    out.t_addr += a.t_copy;
    if a.scale_serial_compute {
        out.serial_compute_scale /= a.compute_speedup;
    }
    Ok(out)
}

/// Largest unit count of the accelerator comparison sweep: 250 Pflop/s nominal
/// for the non-accelerated fictive machine.
pub const ACCELERATOR_SWEEP_MAX_N: u64 = 250_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPoint {
    pub n: u64,
    pub base_r_max: f64,
    pub accelerated_r_max: f64,
    pub base_efficiency: f64,
    pub accelerated_efficiency: f64,
}

impl GainPoint {
    pub fn gain_ratio(&self) -> f64 {
        self.accelerated_r_max / self.base_r_max
    }
}

pub fn accelerator_gain_curve(
    m: &MachineSpec,
    w: &WorkloadSpec,
    a: &Accelerator,
    n_values: &[u64],
) -> Result<Vec<GainPoint>, ModifierError> {
    let accelerated = apply_accelerator(m, a)?;
    let base = ledger::sweep(m, w, n_values)?;
    let acc = ledger::sweep(&accelerated, w, n_values)?;
    Ok(base
        .iter()
        .zip(&acc)
        .map(|(b, a)| GainPoint {
            n: b.ledger.n,
            base_r_max: b.ledger.r_max,
            accelerated_r_max: a.ledger.r_max,
            base_efficiency: b.ledger.efficiency,
            accelerated_efficiency: a.ledger.efficiency,
        })
        .collect())
}

/// Reduced precision: computation shrinks by `compute_scale`, communication does not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionMode {
    pub compute_scale: f64,
}

impl PrecisionMode {
    /// Half precision against double precision.
    pub const HALF: PrecisionMode = PrecisionMode { compute_scale: 0.25 };
    pub const COMM_SCALE: f64 = 1.0;

    pub fn new(compute_scale: f64) -> Result<Self, ModifierError> {
        let p = Self { compute_scale };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModifierError> {
        if !(self.compute_scale > 0.0 && self.compute_scale <= 1.0) {
            return invalid("compute_scale", self.compute_scale);
        }
        Ok(())
    }
}

/// `(T_c + T_comm) / (T_c * compute_scale + T_comm)`.
pub fn predicted_total_speedup(t_compute: f64, t_comm: f64, p: &PrecisionMode) -> Result<f64, ModifierError> {
    p.validate()?;
    if !(t_compute >= 0.0) || !t_compute.is_finite() {
        return invalid("t_compute", t_compute);
    }
    if !(t_comm >= 0.0) || !t_comm.is_finite() {
        return invalid("t_comm", t_comm);
    }
    if t_compute + t_comm <= 0.0 {
        return invalid("t_compute + t_comm", 0.0);
    }
    Ok((t_compute + t_comm) / (t_compute * p.compute_scale + t_comm * PrecisionMode::COMM_SCALE))
}

fn precision_machine(m: &MachineSpec, p: &PrecisionMode) -> MachineSpec {
    let mut out = *m;
    out.p_single /= p.compute_scale;
    out.serial_compute_scale *= p.compute_scale;
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionOutcome {
    pub machine: MachineSpec,
    pub workload: WorkloadSpec,
    pub predicted_total_speedup: f64,
    /// Compute operations weighted by `compute_scale`; a stand-in for energy.
    pub energy_proxy: f64,
}

/// Applies reduced precision and predicts the run-time gain at `n` units.
///
/// Payload time and the coordinator's recompute count as computation; every
/// other serial contribution counts as communication.
pub fn apply_precision(
    m: &MachineSpec,
    w: &WorkloadSpec,
    p: &PrecisionMode,
    n: u64,
) -> Result<PrecisionOutcome, ModifierError> {
    p.validate()?;
    let times = ledger::serial_times(m, w, n)?;
    let no_recompute = MachineSpec {
        serial_compute_scale: 0.0,
        ..*m
    };
    let recompute = times.get(Contribution::ApplicationIteration)
        - ledger::serial_times(&no_recompute, w, n)?.get(Contribution::ApplicationIteration);
    let t_compute = w.payload_time(m, n) + recompute;
    let t_comm = times.total() - recompute;
    Ok(PrecisionOutcome {
        machine: precision_machine(m, p),
        workload: *w,
        predicted_total_speedup: predicted_total_speedup(t_compute, t_comm, p)?,
        energy_proxy: w.total_flops(m, n) * p.compute_scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CooperativeTransfer {
    pub msg_scale: f64,
}

impl CooperativeTransfer {
    pub fn new(msg_scale: f64) -> Result<Self, ModifierError> {
        let c = Self { msg_scale };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ModifierError> {
        if !(self.msg_scale > 0.0 && self.msg_scale <= 1.0) {
            return invalid("msg_scale", self.msg_scale);
        }
        Ok(())
    }
}

/// Direct core-to-core transfer bypasses the global bus for both the message
/// exchange and the per-core dispatch.
pub fn apply_cooperative(m: &MachineSpec, c: &CooperativeTransfer) -> Result<MachineSpec, ModifierError> {
    c.validate()?;
    let mut out = *m;
    out.t_msg *= c.msg_scale;
    out.t_addr *= c.msg_scale;
    Ok(out)
}

/// How many times a mixed-precision HPL result exceeds the double-precision one.
pub fn hpl_ai_equivalence(r_mixed: f64, r_dp: f64) -> Result<f64, ModifierError> {
    if !(r_mixed > 0.0) || !r_mixed.is_finite() {
        return invalid("r_mixed", r_mixed);
    }
    if !(r_dp > 0.0) || !r_dp.is_finite() {
        return invalid("r_dp", r_dp);
    }
    Ok(r_mixed / r_dp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modifier {
    Accelerator(Accelerator),
    Precision(PrecisionMode),
    Cooperative(CooperativeTransfer),
}

pub fn apply_all(
    m: &MachineSpec,
    w: &WorkloadSpec,
    modifiers: &[Modifier],
) -> Result<(MachineSpec, WorkloadSpec), ModifierError> {
    let mut machine = *m;
    for modifier in modifiers {
        machine = match modifier {
            Modifier::Accelerator(a) => apply_accelerator(&machine, a)?,
            Modifier::Precision(p) => {
                p.validate()?;
                precision_machine(&machine, p)
            }
            Modifier::Cooperative(c) => apply_cooperative(&machine, c)?,
        };
    }
    Ok((machine, *w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{ledger, log_grid, WorkloadKind};
    use approx::assert_relative_eq;

    #[test]
    fn accelerator_raises_rmax_and_lowers_efficiency() {
        let m = MachineSpec::fictive();
        let w = WorkloadSpec::fictive_hpl();
        let a = Accelerator::calibrated_for(&m);
        let grid = log_grid(1000, ACCELERATOR_SWEEP_MAX_N, 10);
        let curve = accelerator_gain_curve(&m, &w, &a, &grid).unwrap();
        for p in &curve {
            assert!(p.accelerated_r_max > p.base_r_max);
            assert!(p.accelerated_efficiency < p.base_efficiency);
        }
        assert!(curve.windows(2).all(|w| w[1].gain_ratio() <= w[0].gain_ratio()));
        assert!(curve[0].gain_ratio() > 4.0);
        let last = curve.last().unwrap().gain_ratio();
        assert!(last > 2.0 && last < 2.5, "{last}");
    }

    #[test]
    fn copy_free_accelerator_still_loses_efficiency() {
        let m = MachineSpec::fictive();
        let a = Accelerator::new(5.0, 0.0).unwrap();
        let fast = apply_accelerator(&m, &a).unwrap();
        let w = WorkloadSpec::fictive_hpl();
        let base = ledger(&m, &w, 1 << 20).unwrap();
        let acc = ledger(&fast, &w, 1 << 20).unwrap();
        assert!(acc.efficiency < base.efficiency);
        assert!(acc.r_max > base.r_max);
    }

    #[test]
    fn marginal_accelerator_with_costly_copy_regresses() {
        let m = MachineSpec::fictive();
        let a = Accelerator::new(1.01, 10.0 * m.t_addr).unwrap();
        let fast = apply_accelerator(&m, &a).unwrap();
        let w = WorkloadSpec::fictive_hpl();
        let n = 100_000_000;
        assert!(ledger(&fast, &w, n).unwrap().r_max < ledger(&m, &w, n).unwrap().r_max);
        assert!(Accelerator::new(1.0, 0.0).is_err());
    }

    #[test]
    fn precision_examples() {
        let half = PrecisionMode::HALF;
        assert_relative_eq!(predicted_total_speedup(8.0, 1.0, &half).unwrap(), 3.0, max_relative = 1e-12);
        assert_eq!(predicted_total_speedup(8.0, 1.0, &PrecisionMode::new(1.0).unwrap()).unwrap(), 1.0);
        assert_eq!(predicted_total_speedup(8.0, 0.0, &half).unwrap(), 4.0);
        assert_eq!(predicted_total_speedup(0.0, 3.0, &half).unwrap(), 1.0);
        assert!(PrecisionMode::new(0.0).is_err());
        assert!(PrecisionMode::new(1.5).is_err());
    }

    #[test]
    fn precision_prediction_matches_ledger() {
        let m = MachineSpec::fictive();
        let w = WorkloadSpec::fictive_hpcg();
        let n = 1 << 24;
        let out = apply_precision(&m, &w, &PrecisionMode::HALF, n).unwrap();
        let before = ledger(&m, &w, n).unwrap();
        let after = ledger(&out.machine, &out.workload, n).unwrap();
        assert_relative_eq!(after.r_max / before.r_max, out.predicted_total_speedup, max_relative = 1e-9);
        assert!(out.predicted_total_speedup > 1.0 && out.predicted_total_speedup < 4.0);
        // relative serial share rises
        assert!(after.efficiency < before.efficiency);
        assert_relative_eq!(out.energy_proxy, 0.25 * WorkloadSpec::FICTIVE_TOTAL_FLOPS);
    }

    #[test]
    fn cooperative_transfer() {
        let m = MachineSpec::fictive();
        assert_eq!(apply_cooperative(&m, &CooperativeTransfer::new(1.0).unwrap()).unwrap(), m);
        let coop = apply_cooperative(&m, &CooperativeTransfer::new(0.1).unwrap()).unwrap();
        let w = WorkloadSpec::strong(WorkloadKind::hpcg(20), 1e21);
        let a = ledger(&m, &w, 1 << 22).unwrap();
        let b = ledger(&coop, &w, 1 << 22).unwrap();
        assert_relative_eq!(
            b.entry(Contribution::ApplicationIteration).one_minus_alpha_share,
            0.1 * a.entry(Contribution::ApplicationIteration).one_minus_alpha_share,
            max_relative = 1e-12
        );
        assert!(b.r_max >= a.r_max);
        assert!(CooperativeTransfer::new(0.0).is_err());
    }

    #[test]
    fn cooperative_large_machine_beats_uncooperative_small_one() {
        let m = MachineSpec {
            t_addr: 1e-3,
            ..MachineSpec::fictive()
        };
        let w = WorkloadSpec::strong(WorkloadKind::HplLike, 1e18);
        let small = ledger(&m, &w, 1_000_000).unwrap().r_max;
        let large = ledger(&m, &w, 10_000_000).unwrap().r_max;
        assert!(large < small);
        let coop = apply_cooperative(&m, &CooperativeTransfer::new(0.01).unwrap()).unwrap();
        assert!(ledger(&coop, &w, 10_000_000).unwrap().r_max > small);
    }

    #[test]
    fn hpl_ai_ratio() {
        assert_relative_eq!(hpl_ai_equivalence(445.0, 148.6).unwrap(), 2.994_616_419_919_246, max_relative = 1e-12);
        assert_eq!(hpl_ai_equivalence(3.0, 3.0).unwrap(), 1.0);
        assert_eq!(hpl_ai_equivalence(4.0, 1.0).unwrap(), 4.0);
        assert!(hpl_ai_equivalence(0.0, 1.0).is_err());
    }

    #[test]
    fn modifiers_compose_in_order() {
        let m = MachineSpec::fictive();
        let w = WorkloadSpec::fictive_hpl();
        let a = Accelerator::calibrated_for(&m);
        let c = CooperativeTransfer::new(0.5).unwrap();
        let (ac, _) = apply_all(&m, &w, &[Modifier::Accelerator(a), Modifier::Cooperative(c)]).unwrap();
        let (ca, _) = apply_all(&m, &w, &[Modifier::Cooperative(c), Modifier::Accelerator(a)]).unwrap();
        assert_relative_eq!(ac.t_addr, (m.t_addr + a.t_copy) * 0.5);
        assert_relative_eq!(ca.t_addr, m.t_addr * 0.5 + a.t_copy);
        let (p, _) = apply_all(&m, &w, &[Modifier::Precision(PrecisionMode::HALF)]).unwrap();
        assert_eq!(p.p_single, 4.0 * m.p_single);
        assert_eq!(p.t_msg, m.t_msg);
    }
}
