//! Sequential-only time contributions of a parameterized machine running a
//! parameterized workload, and the payload performance they leave over.
//!
//! The attribution rule is linear: a serial time `T_X` contributes
//! `(1 - alpha_X) = T_X / (T_pp (N - 1))`, where `T_pp` is the payload time of
//! one unit. Shares therefore add up exactly to the total sequential fraction,
//! and the efficiency computed in the time domain agrees with the Amdahl form
//! `1 / (N (1 - alpha) + alpha)`.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::amdahl::{AmdahlError, AmdahlPoint, Parallelism};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("invalid machine parameter {field} = {value}")]
    InvalidMachine { field: &'static str, value: f64 },
    #[error("invalid workload parameter {field} = {value}")]
    InvalidWorkload { field: &'static str, value: f64 },
    #[error("ledger needs at least 2 units, got {0}")]
    TooFewUnits(u64),
    #[error("sweep needs at least {needed} points, got {got}")]
    SweepTooShort { needed: usize, got: usize },
    #[error(transparent)]
    Amdahl(#[from] AmdahlError),
}

/// Time constants and per-core performance of a machine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineSpec {
    /// flop/s of one core.
    pub p_single: f64,
    pub clock_hz: f64,
    /// One-time software and OS initialization plus termination, seconds.
    pub t_fix: f64,
    /// Per-core addressing cost paid serially by the coordinating core, seconds.
    pub t_addr: f64,
    /// One message transfer on the interconnect, seconds.
    pub t_msg: f64,
    /// Propagation delay scale: the delay is `prop_coeff * N^prop_exponent`.
    pub prop_coeff: f64,
    pub prop_exponent: f64,
    /// Multiplier on serial computation done by the coordinator (HPCG parameter
    /// recompute). Accelerators and reduced precision shrink it.
    pub serial_compute_scale: f64,
}

impl MachineSpec {
    /// The 1 Gflop/s @ 1 GHz illustrative machine with the default overheads.
    pub fn fictive() -> Self {
        Self {
            p_single: 1e9,
            clock_hz: 1e9,
            t_fix: 10.0,
            t_addr: 1e-6,
            t_msg: 1e-6,
            prop_coeff: 1e-8,
            prop_exponent: 1.0 / 3.0,
            serial_compute_scale: 1.0,
        }
    }

    /// Same rates, no sequential overhead at all.
    pub fn ideal(p_single: f64, clock_hz: f64) -> Self {
        Self {
            p_single,
            clock_hz,
            t_fix: 0.0,
            t_addr: 0.0,
            t_msg: 0.0,
            prop_coeff: 0.0,
            prop_exponent: 1.0 / 3.0,
            serial_compute_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), LedgerError> {
        let bad = |field, value| Err(LedgerError::InvalidMachine { field, value });
        if !(self.p_single >= 1.0) || !self.p_single.is_finite() {
            return bad("p_single", self.p_single);
        }
        if !(self.clock_hz > 0.0) || !self.clock_hz.is_finite() {
            return bad("clock_hz", self.clock_hz);
        }
        for (field, value) in [
            ("t_fix", self.t_fix),
            ("t_addr", self.t_addr),
            ("t_msg", self.t_msg),
            ("prop_coeff", self.prop_coeff),
            ("prop_exponent", self.prop_exponent),
            ("serial_compute_scale", self.serial_compute_scale),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return bad(field, value);
            }
        }
        Ok(())
    }

    pub fn clock_period(&self) -> f64 {
        1.0 / self.clock_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkloadKind {
    /// Dispatch at the start, collect at the end.
    HplLike,
    /// Iterative: every iteration the coordinator exchanges a message with each
    /// unit in both directions and recomputes the parameters. The recompute
    /// time is `recompute_fraction * N * t_msg` per iteration.
    HpcgLike {
        iterations: u64,
        recompute_fraction: f64,
    },
    /// Time-stepped execution synchronized to a grid period. The grid period
    /// becomes the time quantum of the run, so the clock-denominated serial
    /// costs (`t_addr`, `t_msg`) stretch by `grid_period * clock_hz`, and the
    /// dispatch loop and signal propagation recur once per period.
    GridSynced {
        grid_period: f64,
        periods: u64,
        per_period_serial_msgs: u64,
    },
}

impl WorkloadKind {
    pub const DEFAULT_RECOMPUTE_FRACTION: f64 = 0.1;

    pub fn hpcg(iterations: u64) -> Self {
        Self::HpcgLike {
            iterations,
            recompute_fraction: Self::DEFAULT_RECOMPUTE_FRACTION,
        }
    }
}

/// How the problem size behaves when the unit count changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemSize {
    /// Constant problem size (strong scaling).
    Fixed { total_flops: f64 },
    /// Constant payload time per unit; the problem grows with `N`.
    FixedTime { payload_seconds: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub size: ProblemSize,
}

impl WorkloadSpec {
    /// Total work of the illustrative runs: 1000 s of payload time on 10^9
    /// cores of the fictive machine (1 Eflop/s nominal).
    pub const FICTIVE_TOTAL_FLOPS: f64 = 1e21;

    pub fn strong(kind: WorkloadKind, total_flops: f64) -> Self {
        Self {
            kind,
            size: ProblemSize::Fixed { total_flops },
        }
    }

    pub fn fixed_time(kind: WorkloadKind, payload_seconds: f64) -> Self {
        Self {
            kind,
            size: ProblemSize::FixedTime { payload_seconds },
        }
    }

    pub fn fictive_hpl() -> Self {
        Self::strong(WorkloadKind::HplLike, Self::FICTIVE_TOTAL_FLOPS)
    }

    pub fn fictive_hpcg() -> Self {
        Self::strong(WorkloadKind::hpcg(50), Self::FICTIVE_TOTAL_FLOPS)
    }

    /// Grid-synchronized run whose grid period is `cycles` clock periods of `m`.
    pub fn fictive_grid(m: &MachineSpec, cycles: f64) -> Self {
        Self::strong(
            WorkloadKind::GridSynced {
                grid_period: cycles / m.clock_hz,
                periods: 10,
                per_period_serial_msgs: 100,
            },
            Self::FICTIVE_TOTAL_FLOPS,
        )
    }

    pub fn validate(&self) -> Result<(), LedgerError> {
        let bad = |field, value| Err(LedgerError::InvalidWorkload { field, value });
        match self.size {
            ProblemSize::Fixed { total_flops } => {
                if !(total_flops > 0.0) || !total_flops.is_finite() {
                    return bad("total_flops", total_flops);
                }
            }
            ProblemSize::FixedTime { payload_seconds } => {
                if !(payload_seconds > 0.0) || !payload_seconds.is_finite() {
                    return bad("payload_seconds", payload_seconds);
                }
            }
        }
        match self.kind {
            WorkloadKind::HplLike => {}
            WorkloadKind::HpcgLike {
                iterations,
                recompute_fraction,
            } => {
                if iterations < 1 {
                    return bad("iterations", iterations as f64);
                }
                if !(recompute_fraction >= 0.0) || !recompute_fraction.is_finite() {
                    return bad("recompute_fraction", recompute_fraction);
                }
            }
            WorkloadKind::GridSynced {
                grid_period,
                periods,
                ..
            } => {
                if !(grid_period > 0.0) || !grid_period.is_finite() {
                    return bad("grid_period", grid_period);
                }
                if periods < 1 {
                    return bad("periods", periods as f64);
                }
            }
        }
        Ok(())
    }

    /// Payload time of one unit when the work is spread over `n` units.
    pub fn payload_time(&self, m: &MachineSpec, n: u64) -> f64 {
        match self.size {
            ProblemSize::Fixed { total_flops } => total_flops / (n as f64 * m.p_single),
            ProblemSize::FixedTime { payload_seconds } => payload_seconds,
        }
    }

    pub fn total_flops(&self, m: &MachineSpec, n: u64) -> f64 {
        match self.size {
            ProblemSize::Fixed { total_flops } => total_flops,
            ProblemSize::FixedTime { payload_seconds } => n as f64 * m.p_single * payload_seconds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Contribution {
    SwOsFixed,
    Looping,
    Propagation,
    ApplicationIteration,
    GridSync,
}

impl Contribution {
    pub const ALL: [Contribution; 5] = [
        Contribution::SwOsFixed,
        Contribution::Looping,
        Contribution::Propagation,
        Contribution::ApplicationIteration,
        Contribution::GridSync,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Contribution::SwOsFixed => "sw_os_fixed",
            Contribution::Looping => "looping",
            Contribution::Propagation => "propagation",
            Contribution::ApplicationIteration => "application_iteration",
            Contribution::GridSync => "grid_sync",
        }
    }

    const fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Contribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Serial seconds per contribution kind.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SerialTimes([f64; 5]);

impl SerialTimes {
    pub fn get(&self, kind: Contribution) -> f64 {
        self.0[kind.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Contribution, f64)> + '_ {
        Contribution::ALL.into_iter().map(|k| (k, self.get(k)))
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Serial time per contribution at `n` units.
pub fn serial_times(m: &MachineSpec, w: &WorkloadSpec, n: u64) -> Result<SerialTimes, LedgerError> {
    if n < 2 {
        return Err(LedgerError::TooFewUnits(n));
    }
    m.validate()?;
    w.validate()?;
    let nf = n as f64;
    let propagation = m.prop_coeff * nf.powf(m.prop_exponent);
    let mut t = [0.0; 5];
    t[Contribution::SwOsFixed.index()] = m.t_fix;
    t[Contribution::Looping.index()] = nf * m.t_addr;
    t[Contribution::Propagation.index()] = propagation;
    match w.kind {
        WorkloadKind::HplLike => {}
        WorkloadKind::HpcgLike {
            iterations,
            recompute_fraction,
        } => {
            let exchange = 2.0 * nf * m.t_msg;
            let recompute = recompute_fraction * nf * m.t_msg * m.serial_compute_scale;
            t[Contribution::ApplicationIteration.index()] = iterations as f64 * (exchange + recompute);
        }
        WorkloadKind::GridSynced {
            grid_period,
            periods,
            per_period_serial_msgs,
        } => {
            let stretch = (grid_period * m.clock_hz).max(1.0);
            let periods = periods as f64;
            t[Contribution::Looping.index()] = periods * nf * m.t_addr * stretch;
            t[Contribution::Propagation.index()] = periods * propagation;
            t[Contribution::GridSync.index()] =
                periods * per_period_serial_msgs as f64 * m.t_msg * stretch;
        }
    }
    Ok(SerialTimes(t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub time: f64,
    pub one_minus_alpha_share: f64,
}

/// Decomposition of one operating point into serial contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct SerialLedger {
    pub n: u64,
    entries: [LedgerEntry; 5],
    pub payload_time: f64,
    pub total_flops: f64,
    pub one_minus_alpha_total: f64,
    pub alpha_eff: f64,
    /// Payload performance, flop/s.
    pub r_max: f64,
    /// `N * p_single`, flop/s.
    pub nominal: f64,
    pub efficiency: f64,
    /// Serial time exceeds `N - 1` payload times, so `alpha_eff < 0`. Values
    /// are reported unclamped.
    pub beyond_model: bool,
}

impl SerialLedger {
    pub fn entry(&self, kind: Contribution) -> LedgerEntry {
        self.entries[kind.index()]
    }

    pub fn entries(&self) -> impl Iterator<Item = (Contribution, LedgerEntry)> + '_ {
        Contribution::ALL.into_iter().map(|k| (k, self.entry(k)))
    }

    pub fn serial_time(&self) -> f64 {
        self.entries.iter().map(|e| e.time).sum()
    }

    /// The ledger as an Amdahl point, when it lies inside the model.
    pub fn amdahl_point(&self) -> Option<AmdahlPoint> {
        if self.beyond_model {
            return None;
        }
        let p = Parallelism::from_serial(self.one_minus_alpha_total).ok()?;
        AmdahlPoint::with_parallelism(p, self.n as f64).ok()
    }
}

pub fn ledger(m: &MachineSpec, w: &WorkloadSpec, n: u64) -> Result<SerialLedger, LedgerError> {
    let times = serial_times(m, w, n)?;
    let nf = n as f64;
    let payload_time = w.payload_time(m, n);
    let scale = payload_time * (nf - 1.0);
    let mut entries = [LedgerEntry {
        time: 0.0,
        one_minus_alpha_share: 0.0,
    }; 5];
    for (kind, time) in times.iter() {
        entries[kind.index()] = LedgerEntry {
            time,
            one_minus_alpha_share: time / scale,
        };
    }
    let one_minus_alpha_total: f64 = entries.iter().map(|e| e.one_minus_alpha_share).sum();
    let total_flops = w.total_flops(m, n);
    let r_max = total_flops / (payload_time + times.total());
    let nominal = nf * m.p_single;
    Ok(SerialLedger {
        n,
        entries,
        payload_time,
        total_flops,
        one_minus_alpha_total,
        alpha_eff: 1.0 - one_minus_alpha_total,
        r_max,
        nominal,
        efficiency: r_max / nominal,
        beyond_model: one_minus_alpha_total > 1.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub nominal: f64,
    pub ledger: SerialLedger,
}

/// Ledgers over a list of unit counts, in the order given.
pub fn sweep(m: &MachineSpec, w: &WorkloadSpec, n_values: &[u64]) -> Result<Vec<SweepPoint>, LedgerError> {
    if n_values.is_empty() {
        return Err(LedgerError::SweepTooShort { needed: 1, got: 0 });
    }
    n_values
        .par_iter()
        .map(|&n| {
            ledger(m, w, n).map(|ledger| SweepPoint {
                nominal: ledger.nominal,
                ledger,
            })
        })
        .collect()
}

/// Logarithmically spaced unit counts from `n_min` to `n_max` inclusive,
/// rounded to integers and deduplicated.
pub fn log_grid(n_min: u64, n_max: u64, points_per_decade: u32) -> Vec<u64> {
    let n_min = n_min.max(2);
    if n_max <= n_min || points_per_decade == 0 {
        return vec![n_min];
    }
    let lo = (n_min as f64).log10();
    let hi = (n_max as f64).log10();
    let steps = ((hi - lo) * points_per_decade as f64).ceil() as u64;
    let mut out: Vec<u64> = (0..=steps)
        .map(|k| {
            let e = lo + (hi - lo) * k as f64 / steps as f64;
            (10f64.powf(e).round() as u64).clamp(n_min, n_max)
        })
        .collect();
    out.dedup();
    out
}

/// `n = 2^k` for `k` in the inclusive range.
pub fn pow2_grid(k_min: u32, k_max: u32) -> Vec<u64> {
    (k_min..=k_max).map(|k| 1u64 << k).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakPoint {
    pub n_at_peak: u64,
    pub r_max_peak: f64,
    /// False when the maximum sits on either end of the range.
    pub interior: bool,
}

pub fn peak_operating_point(m: &MachineSpec, w: &WorkloadSpec, n_range: &[u64]) -> Result<PeakPoint, LedgerError> {
    if n_range.len() < 3 {
        return Err(LedgerError::SweepTooShort {
            needed: 3,
            got: n_range.len(),
        });
    }
    let points = sweep(m, w, n_range)?;
    Ok(peak_of(&points))
}

/// Argmax of `r_max` over an existing sweep (first maximum wins on ties).
pub fn peak_of(points: &[SweepPoint]) -> PeakPoint {
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.ledger.r_max > points[best].ledger.r_max {
            best = i;
        }
    }
    PeakPoint {
        n_at_peak: points[best].ledger.n,
        r_max_peak: points[best].ledger.r_max,
        interior: best > 0 && best + 1 < points.len(),
    }
}

/// Unit count minimizing `T_pp + N t_addr` for a fixed problem size.
pub fn analytic_peak_n(total_flops: f64, p_single: f64, t_addr: f64) -> f64 {
    (total_flops / (p_single * t_addr)).sqrt()
}

/// Fixed-time configurations for the saturation curves of summed performance:
/// HPCG, HPL, HPL on reduced precision, the empty loop, and physical size alone.
pub fn saturation_presets(m: &MachineSpec, payload_seconds: f64) -> Vec<(&'static str, MachineSpec, WorkloadSpec)> {
    let hpl = WorkloadSpec::fixed_time(WorkloadKind::HplLike, payload_seconds);
    let hpcg = WorkloadSpec::fixed_time(WorkloadKind::hpcg(50), payload_seconds);
    // four times faster compute, same payload time: four times more work per unit
    let mut ai = *m;
    ai.p_single *= 4.0;
    ai.serial_compute_scale *= 0.25;
    let empty_loop = MachineSpec {
        prop_coeff: 0.0,
        ..*m
    };
    let physical = MachineSpec {
        t_fix: 0.0,
        t_addr: 0.0,
        t_msg: 0.0,
        ..*m
    };
    vec![
        ("HPCG", *m, hpcg),
        ("HPL", *m, hpl),
        ("HPL-AI", ai, hpl),
        ("FP-0", MachineSpec { t_fix: 0.0, ..empty_loop }, hpl),
        ("physical-size-only", physical, hpl),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn only_addr(t_addr: f64) -> MachineSpec {
        MachineSpec {
            t_addr,
            ..MachineSpec::ideal(1e9, 1e9)
        }
    }

    #[test]
    fn serial_times_examples() {
        let w = WorkloadSpec::fictive_hpl();
        let t = serial_times(&only_addr(1e-6), &w, 1_000_000).unwrap();
        assert_relative_eq!(t.get(Contribution::Looping), 1.0, max_relative = 1e-12);
        assert_eq!(t.get(Contribution::SwOsFixed), 0.0);

        let zero = serial_times(&MachineSpec::ideal(1e9, 1e9), &WorkloadSpec::fictive_hpcg(), 1000).unwrap();
        assert!(zero.iter().all(|(_, v)| v == 0.0));

        let m = MachineSpec::fictive();
        let one = serial_times(&m, &WorkloadSpec::strong(WorkloadKind::hpcg(1), 1e18), 4096).unwrap();
        let ten = serial_times(&m, &WorkloadSpec::strong(WorkloadKind::hpcg(10), 1e18), 4096).unwrap();
        assert_relative_eq!(
            ten.get(Contribution::ApplicationIteration),
            10.0 * one.get(Contribution::ApplicationIteration),
            max_relative = 1e-12
        );
        // 2 n t_msg + n t_msg / 10 per iteration
        assert_relative_eq!(one.get(Contribution::ApplicationIteration), 2.1 * 4096.0 * 1e-6, max_relative = 1e-12);
    }

    #[test]
    fn serial_times_rejects_single_unit() {
        let r = serial_times(&MachineSpec::fictive(), &WorkloadSpec::fictive_hpl(), 1);
        assert_eq!(r, Err(LedgerError::TooFewUnits(1)));
    }

    #[test]
    fn invalid_specs_name_the_field() {
        let m = MachineSpec {
            t_addr: -1.0,
            ..MachineSpec::fictive()
        };
        let err = ledger(&m, &WorkloadSpec::fictive_hpl(), 10).unwrap_err();
        assert!(err.to_string().contains("t_addr"));
        let w = WorkloadSpec::strong(WorkloadKind::hpcg(0), 1e12);
        let err = ledger(&MachineSpec::fictive(), &w, 10).unwrap_err();
        assert!(err.to_string().contains("iterations"));
    }

    #[test]
    fn zero_overhead_ledger_is_ideal() {
        let m = MachineSpec::ideal(1e9, 1e9);
        let l = ledger(&m, &WorkloadSpec::fictive_hpl(), 12345).unwrap();
        assert_eq!(l.alpha_eff, 1.0);
        assert_relative_eq!(l.r_max, 12345.0 * 1e9, max_relative = 1e-12);
        assert!(!l.beyond_model);
    }

    #[test]
    fn doubling_one_contribution_doubles_its_share_only() {
        let w = WorkloadSpec::fictive_hpl();
        let m = MachineSpec::fictive();
        let doubled = MachineSpec {
            t_fix: 2.0 * m.t_fix,
            ..m
        };
        let a = ledger(&m, &w, 1 << 20).unwrap();
        let b = ledger(&doubled, &w, 1 << 20).unwrap();
        assert_relative_eq!(
            b.entry(Contribution::SwOsFixed).one_minus_alpha_share,
            2.0 * a.entry(Contribution::SwOsFixed).one_minus_alpha_share,
            max_relative = 1e-15
        );
        for kind in [Contribution::Looping, Contribution::Propagation] {
            assert_eq!(a.entry(kind), b.entry(kind));
        }
    }

    #[test]
    fn beyond_model_is_flagged_not_clamped() {
        let m = MachineSpec {
            t_fix: 1e6,
            ..MachineSpec::ideal(1e9, 1e9)
        };
        let w = WorkloadSpec::strong(WorkloadKind::HplLike, 1e12);
        let l = ledger(&m, &w, 4).unwrap();
        assert!(l.beyond_model);
        assert!(l.alpha_eff < 0.0);
        assert!(l.amdahl_point().is_none());
        // 1/(1 + (N-1)s) still holds outside the model
        let expected = 1.0 / (1.0 + 3.0 * l.one_minus_alpha_total);
        assert_relative_eq!(l.efficiency, expected, max_relative = 1e-9);
    }

    #[test]
    fn sweep_shape_and_order() {
        let grid = pow2_grid(1, 24);
        assert_eq!(grid.len(), 24);
        let points = sweep(&MachineSpec::fictive(), &WorkloadSpec::fictive_hpl(), &grid).unwrap();
        assert_eq!(points.len(), 24);
        assert!(points.windows(2).all(|w| w[0].nominal < w[1].nominal));
        assert!(points.iter().zip(&grid).all(|(p, &n)| p.ledger.n == n));
        assert!(sweep(&MachineSpec::fictive(), &WorkloadSpec::fictive_hpl(), &[]).is_err());
    }

    #[test]
    fn log_grid_covers_range() {
        let g = log_grid(1000, 1_000_000_000_000, 20);
        assert_eq!(g.first(), Some(&1000));
        assert_eq!(g.last(), Some(&1_000_000_000_000));
        assert_eq!(g.len(), 181);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    // coarse grid search of T_pp + N t_addr, independent of the ledger code
    fn grid_search_minimizer(total_flops: f64, p: f64, t_addr: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=4000 {
            let n = 10f64.powf(3.0 + 9.0 * k as f64 / 4000.0);
            let t = total_flops / (n * p) + n * t_addr;
            if t < best.0 {
                best = (t, n);
            }
        }
        best.1
    }

    #[test]
    fn peak_matches_closed_form() {
        let m = only_addr(1e-6);
        let w = WorkloadSpec::strong(WorkloadKind::HplLike, 1e18);
        let n_star = analytic_peak_n(1e18, 1e9, 1e-6);
        assert_relative_eq!(n_star, 10f64.powf(7.5), max_relative = 1e-12);
        assert_relative_eq!(grid_search_minimizer(1e18, 1e9, 1e-6), n_star, max_relative = 0.01);

        let grid = log_grid(1000, 1_000_000_000_000, 20);
        let peak = peak_operating_point(&m, &w, &grid).unwrap();
        assert!(peak.interior);
        let step = 10f64.powf(1.0 / 20.0);
        let ratio = peak.n_at_peak as f64 / n_star;
        assert!(ratio <= step && ratio >= 1.0 / step, "ratio {ratio}");

        let doubled = only_addr(2e-6);
        let n2 = analytic_peak_n(1e18, 1e9, 2e-6);
        assert_relative_eq!(n_star / n2, 2f64.sqrt(), max_relative = 1e-12);
        let peak2 = peak_operating_point(&doubled, &w, &grid).unwrap();
        assert!(peak2.n_at_peak < peak.n_at_peak);
    }

    #[test]
    fn fixed_overhead_only_has_no_interior_peak() {
        let m = MachineSpec {
            t_fix: 10.0,
            ..MachineSpec::ideal(1e9, 1e9)
        };
        let grid = log_grid(1000, 1_000_000_000_000, 10);
        let peak = peak_operating_point(&m, &WorkloadSpec::fictive_hpl(), &grid).unwrap();
        assert!(!peak.interior);
        assert_eq!(peak.n_at_peak, *grid.last().unwrap());
        assert!(peak_operating_point(&m, &WorkloadSpec::fictive_hpl(), &[2, 3]).is_err());
    }

    #[test]
    fn grid_synced_peaks_lower() {
        let m = MachineSpec::fictive();
        let grid = log_grid(1000, 1_000_000_000_000, 20);
        let hpl = peak_operating_point(&m, &WorkloadSpec::fictive_hpl(), &grid).unwrap();
        let g = peak_operating_point(&m, &WorkloadSpec::fictive_grid(&m, 5000.0), &grid).unwrap();
        assert!(g.interior);
        assert!(hpl.n_at_peak as f64 / g.n_at_peak as f64 >= 100.0);
        assert!(g.r_max_peak < hpl.r_max_peak / 100.0);
    }

    #[test]
    fn fixed_time_mode_saturates() {
        let m = only_addr(1e-6);
        let w = WorkloadSpec::fixed_time(WorkloadKind::HplLike, 1.0);
        let l = ledger(&m, &w, 1_000_000_000_000).unwrap();
        // n P T / (T + n t_addr) -> P T / t_addr
        assert_relative_eq!(l.r_max, 1e9 * 1.0 / 1e-6, max_relative = 1e-5);
        let presets = saturation_presets(&MachineSpec::fictive(), 1.0);
        assert_eq!(presets.len(), 5);
        for (_, pm, pw) in &presets {
            assert!(ledger(pm, pw, 1 << 30).is_ok());
        }
    }

    proptest! {
        #[test]
        fn shares_add_exactly_and_views_agree(
            t_fix in 0.0f64..100.0,
            t_addr in 0.0f64..1e-5,
            t_msg in 0.0f64..1e-5,
            prop_coeff in 0.0f64..1e-6,
            iterations in 1u64..200,
            log_n in 1.0f64..10.0,
        ) {
            let m = MachineSpec { t_fix, t_addr, t_msg, prop_coeff, ..MachineSpec::fictive() };
            let w = WorkloadSpec::strong(WorkloadKind::hpcg(iterations), 1e21);
            let n = 10f64.powf(log_n) as u64;
            let l = ledger(&m, &w, n).unwrap();
            let sum: f64 = l.entries().map(|(_, e)| e.one_minus_alpha_share).sum();
            prop_assert_eq!(sum, l.one_minus_alpha_total);
            if let Some(p) = l.amdahl_point() {
                let e = crate::amdahl::efficiency(p);
                prop_assert!((e - l.efficiency).abs() <= 1e-9 * l.efficiency);
                let r = l.nominal * e;
                prop_assert!((r - l.r_max).abs() <= 1e-9 * l.r_max);
            }
        }

        #[test]
        fn removing_a_contribution_never_hurts(
            log_n in 1.0f64..11.0,
            which in 0usize..4,
        ) {
            let m = MachineSpec::fictive();
            let mut reduced = m;
            match which {
                0 => reduced.t_fix = 0.0,
                1 => reduced.t_addr = 0.0,
                2 => reduced.t_msg = 0.0,
                _ => reduced.prop_coeff = 0.0,
            }
            let n = 10f64.powf(log_n) as u64;
            for w in [WorkloadSpec::fictive_hpl(), WorkloadSpec::fictive_hpcg(), WorkloadSpec::fictive_grid(&m, 5000.0)] {
                let a = ledger(&m, &w, n).unwrap();
                let b = ledger(&reduced, &w, n).unwrap();
                prop_assert!(b.r_max >= a.r_max);
            }
        }
    }

    #[test]
    fn decline_beyond_some_n_when_looping_present() {
        let grid = log_grid(1000, 1_000_000_000_000, 10);
        let points = sweep(&MachineSpec::fictive(), &WorkloadSpec::fictive_hpcg(), &grid).unwrap();
        let peak = peak_of(&points);
        let idx = points.iter().position(|p| p.ledger.n == peak.n_at_peak).unwrap();
        assert!(points[idx..].windows(2).all(|w| w[1].ledger.r_max < w[0].ledger.r_max));
    }

    #[test]
    fn longer_grid_period_lowers_peak() {
        let m = MachineSpec::fictive();
        let grid = log_grid(100, 1_000_000_000_000, 20);
        let mut last: Option<PeakPoint> = None;
        for cycles in [10.0, 100.0, 1000.0, 5000.0, 50_000.0] {
            let p = peak_operating_point(&m, &WorkloadSpec::fictive_grid(&m, cycles), &grid).unwrap();
            if let Some(prev) = last {
                assert!(p.r_max_peak < prev.r_max_peak);
                assert!(p.n_at_peak < prev.n_at_peak);
            }
            last = Some(p);
        }
    }
}
