//! Speedup and efficiency algebra for a parallelized sequential system.
//!
//! Every statement about efficiency is made at an [`AmdahlPoint`]: a parallel
//! fraction `alpha` together with a processing-unit count `n`. The sequential-only
//! fraction `1 - alpha` is stored next to `alpha` rather than recomputed from it,
//! because top machines live at `1 - alpha` around `1e-7` where the subtraction
//! would throw away most of the significant digits.
//!
//! `n` is an integer in the model, but all forward formulas accept it as a real
//! number so that sweeps can be plotted on continuous axes.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmdahlError {
    #[error("parallel fraction {0} outside [0, 1]")]
    FractionOutOfRange(f64),
    #[error("unit count {0} must be a finite number >= 1")]
    InvalidUnitCount(f64),
    #[error("empirical α undefined for a single unit")]
    SingleUnit,
    #[error("super-linear speedup outside model (speedup {speedup} > {n} units)")]
    SuperLinear { speedup: f64, n: u64 },
    #[error("speedup {0} below one")]
    SpeedupBelowOne(f64),
    #[error("efficiency below serial floor ({efficiency} < 1/{n})")]
    BelowSerialFloor { efficiency: f64, n: u64 },
    #[error("efficiency {0} above one")]
    EfficiencyAboveOne(f64),
    #[error("unbounded gain: fully parallel workload has no roofline")]
    UnboundedGain,
    #[error("single-unit performance must be positive, got {0}")]
    NonPositivePerformance(f64),
    #[error("invalid relativistic parameter {name} = {value}")]
    InvalidRelativistic { name: &'static str, value: f64 },
}

/// A parallel fraction `alpha` carried together with `1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parallelism {
    alpha: f64,
    serial: f64,
}

impl Parallelism {
    pub fn new(alpha: f64) -> Result<Self, AmdahlError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(AmdahlError::FractionOutOfRange(alpha));
        }
        Ok(Self {
            alpha,
            serial: 1.0 - alpha,
        })
    }

    /// Builds the fraction from its sequential-only part, which is kept exact.
    pub fn from_serial(serial: f64) -> Result<Self, AmdahlError> {
        if !(0.0..=1.0).contains(&serial) {
            return Err(AmdahlError::FractionOutOfRange(1.0 - serial));
        }
        Ok(Self {
            alpha: 1.0 - serial,
            serial,
        })
    }

    pub const fn fully_parallel() -> Self {
        Self {
            alpha: 1.0,
            serial: 0.0,
        }
    }

    pub const fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The sequential-only fraction `1 - alpha`.
    pub const fn serial(&self) -> f64 {
        self.serial
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmdahlPoint {
    parallelism: Parallelism,
    n: f64,
}

impl AmdahlPoint {
    pub fn new(alpha: f64, n: f64) -> Result<Self, AmdahlError> {
        Self::with_parallelism(Parallelism::new(alpha)?, n)
    }

    pub fn from_serial(serial: f64, n: f64) -> Result<Self, AmdahlError> {
        Self::with_parallelism(Parallelism::from_serial(serial)?, n)
    }

    pub fn with_parallelism(parallelism: Parallelism, n: f64) -> Result<Self, AmdahlError> {
        if !n.is_finite() || n < 1.0 {
            return Err(AmdahlError::InvalidUnitCount(n));
        }
        Ok(Self { parallelism, n })
    }

    pub const fn parallelism(&self) -> Parallelism {
        self.parallelism
    }

    pub const fn alpha(&self) -> f64 {
        self.parallelism.alpha
    }

    pub const fn serial(&self) -> f64 {
        self.parallelism.serial
    }

    pub const fn n(&self) -> f64 {
        self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerfKind {
    Nominal,
    Payload,
}

/// A performance figure in flop/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfFigure {
    pub value: f64,
    pub kind: PerfKind,
}

/// `E = 1 / (N(1 - alpha) + alpha)`, which is also `R_Max / R_Peak`.
pub fn efficiency(p: AmdahlPoint) -> f64 {
    1.0 / (p.n * p.serial() + p.alpha())
}

/// `S = N / (N(1 - alpha) + alpha)`.
///
/// Computed as `efficiency(p) * N` so that the two views agree bit for bit.
pub fn speedup(p: AmdahlPoint) -> f64 {
    efficiency(p) * p.n
}

/// Raw empirical parallelization `alpha = N/(N-1) * (S-1)/S` of a measured speedup.
///
/// Unlike [`alpha_from_speedup`] this does not reject speedups below one; a
/// measurement slower than a single unit yields a negative value.
pub fn empirical_alpha(s: f64, n: u64) -> Result<f64, AmdahlError> {
    if n < 2 {
        return Err(AmdahlError::SingleUnit);
    }
    let n = n as f64;
    // one rounding per side keeps alpha exactly 1 at s == n
    Ok((n * (s - 1.0)) / ((n - 1.0) * s))
}

fn check_speedup(s: f64, n: u64) -> Result<(), AmdahlError> {
    if n < 2 {
        return Err(AmdahlError::SingleUnit);
    }
    if s.is_nan() || s < 1.0 {
        return Err(AmdahlError::SpeedupBelowOne(s));
    }
    if s > n as f64 {
        return Err(AmdahlError::SuperLinear { speedup: s, n });
    }
    Ok(())
}

/// Empirical parallel fraction of a speedup `1 <= s <= n` measured on `n >= 2` units.
pub fn alpha_from_speedup(s: f64, n: u64) -> Result<f64, AmdahlError> {
    check_speedup(s, n)?;
    empirical_alpha(s, n)
}

/// Same as [`alpha_from_speedup`], returning a point whose `1 - alpha` is
/// computed as `(N - S) / ((N - 1) S)` instead of by subtraction.
pub fn point_from_speedup(s: f64, n: u64) -> Result<AmdahlPoint, AmdahlError> {
    check_speedup(s, n)?;
    let nf = n as f64;
    let serial = (nf - s) / ((nf - 1.0) * s);
    let alpha = (nf * (s - 1.0)) / ((nf - 1.0) * s);
    Ok(AmdahlPoint {
        parallelism: Parallelism { alpha, serial },
        n: nf,
    })
}

fn check_efficiency(e: f64, n: u64) -> Result<(), AmdahlError> {
    if n < 2 {
        return Err(AmdahlError::SingleUnit);
    }
    if e.is_nan() || e * (n as f64) < 1.0 {
        return Err(AmdahlError::BelowSerialFloor { efficiency: e, n });
    }
    if e > 1.0 {
        return Err(AmdahlError::EfficiencyAboveOne(e));
    }
    Ok(())
}

/// Parallel fraction `(N - 1/E) / (N - 1)` implied by an efficiency `1/n <= e <= 1`.
pub fn alpha_from_efficiency(e: f64, n: u64) -> Result<f64, AmdahlError> {
    check_efficiency(e, n)?;
    let n = n as f64;
    Ok((n - 1.0 / e) / (n - 1.0))
}

/// Sequential-only fraction `(1/E - 1) / (N - 1)` implied by an efficiency.
pub fn serial_from_efficiency(e: f64, n: u64) -> Result<f64, AmdahlError> {
    check_efficiency(e, n)?;
    Ok((1.0 / e - 1.0) / (n as f64 - 1.0))
}

pub fn point_from_efficiency(e: f64, n: u64) -> Result<AmdahlPoint, AmdahlError> {
    let serial = serial_from_efficiency(e, n)?;
    let alpha = alpha_from_efficiency(e, n)?;
    Ok(AmdahlPoint {
        parallelism: Parallelism { alpha, serial },
        n: n as f64,
    })
}

/// Payload performance of `N` units of `p_single` flop/s each.
///
/// Bounded above by `p_single / (1 - alpha)`; reduces to plain addition of
/// performances when `alpha = 1`.
pub fn perf_total(p: AmdahlPoint, p_single: f64) -> Result<PerfFigure, AmdahlError> {
    if !(p_single > 0.0) || !p_single.is_finite() {
        return Err(AmdahlError::NonPositivePerformance(p_single));
    }
    Ok(PerfFigure {
        value: speedup(p) * p_single,
        kind: PerfKind::Payload,
    })
}

pub fn perf_nominal(n: f64, p_single: f64) -> PerfFigure {
    PerfFigure {
        value: n * p_single,
        kind: PerfKind::Nominal,
    }
}

/// Asymptotic roofline `1 / (1 - alpha)` of the speedup as `N` grows without bound.
pub fn perf_gain_limit(p: Parallelism) -> Result<f64, AmdahlError> {
    if p.serial <= 0.0 {
        return Err(AmdahlError::UnboundedGain);
    }
    Ok(1.0 / p.serial)
}

/// Inputs of the velocity-addition correction used as an analogy for the
/// saturation of summed performance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativisticParams {
    t: f64,
    g: f64,
    c: f64,
    n_optical: f64,
}

impl RelativisticParams {
    pub fn new(t: f64, g: f64, c: f64, n_optical: f64) -> Result<Self, AmdahlError> {
        let bad = |name, value| Err(AmdahlError::InvalidRelativistic { name, value });
        if !(t >= 0.0) {
            return bad("t", t);
        }
        if !(g > 0.0) || !g.is_finite() {
            return bad("g", g);
        }
        if !(c > 0.0) || !c.is_finite() {
            return bad("c", c);
        }
        if !(n_optical >= 1.0) || !n_optical.is_finite() {
            return bad("n_optical", n_optical);
        }
        Ok(Self { t, g, c, n_optical })
    }

    pub fn speed_limit(&self) -> f64 {
        self.c / self.n_optical
    }
}

/// `v(t) = t g / sqrt(1 + (t g / (c/n))^2)`.
///
/// Evaluated as `(c/n) * x / hypot(1, x)` with `x = t g / (c/n)` so that large
/// `t` saturates at `c/n` instead of overflowing to zero.
pub fn relativistic_speed(p: RelativisticParams) -> f64 {
    let limit = p.speed_limit();
    let x = p.t * p.g / limit;
    if x.is_infinite() {
        return limit;
    }
    limit * (x / 1.0_f64.hypot(x))
}
