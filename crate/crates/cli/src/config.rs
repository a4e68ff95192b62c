//! Run configuration files.
//!
//! The format is TOML: flat `key = value` pairs grouped under section
//! headers. Every section is optional and every key falls back to the fictive
//! machine defaults. Unknown keys are rejected.
//!
//! ```toml
//! [machine]            # p_single, clock_hz, t_fix, t_addr, t_msg,
//! preset = "fictive"   # prop_coeff, prop_exponent, serial_compute_scale
//!
//! [workload]
//! kind = "hpl"         # "hpl" | "hpcg" | "grid"
//! total_flops = 1e21   # or payload_seconds = ... for fixed-time scaling
//!
//! [sweep]
//! n_min = 1000
//! n_max = 1e12
//! points_per_decade = 20   # or n = [2, 4, 8] for an explicit list
//!
//! [timeline]
//! workers = 2
//! t_compute = 1.0      # scalar or one entry per worker
//!
//! [[modifier]]
//! kind = "accelerator"
//! compute_speedup = 5.0
//! t_copy = 4e-6
//! ```

use std::path::Path;

use parlimit_core::comm::RooflineCalibration;
use parlimit_core::ledger::{MachineSpec, WorkloadKind, WorkloadSpec};
use parlimit_core::modifiers::{Accelerator, CooperativeTransfer, Modifier, ModifierError, PrecisionMode};
use parlimit_core::timeline::{DispatchMode, TimelineConfig};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("[{section}] {field}: {message}")]
    Field {
        section: &'static str,
        field: String,
        message: String,
    },
    #[error("missing [{0}] section")]
    MissingSection(&'static str),
}

fn field_err(section: &'static str, field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        section,
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub machine: MachineSection,
    #[serde(default)]
    pub workload: WorkloadSection,
    pub sweep: Option<SweepSection>,
    pub timeline: Option<TimelineSection>,
    #[serde(default, rename = "modifier")]
    pub modifiers: Vec<ModifierSection>,
    #[serde(default)]
    pub roofline: RooflineSection,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MachinePreset {
    #[default]
    Fictive,
    /// Zero overheads.
    Ideal,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSection {
    #[serde(default)]
    pub preset: MachinePreset,
    pub p_single: Option<f64>,
    pub clock_hz: Option<f64>,
    pub t_fix: Option<f64>,
    pub t_addr: Option<f64>,
    pub t_msg: Option<f64>,
    pub prop_coeff: Option<f64>,
    pub prop_exponent: Option<f64>,
    pub serial_compute_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindName {
    #[default]
    Hpl,
    Hpcg,
    Grid,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    #[serde(default)]
    pub kind: KindName,
    pub total_flops: Option<f64>,
    pub payload_seconds: Option<f64>,
    pub iterations: Option<u64>,
    pub recompute_fraction: Option<f64>,
    pub grid_period: Option<f64>,
    /// Grid period in clock cycles of the machine.
    pub grid_cycles: Option<f64>,
    pub periods: Option<u64>,
    pub per_period_serial_msgs: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_min: Option<f64>,
    pub n_max: Option<f64>,
    pub points_per_decade: Option<u32>,
    pub n: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PerWorker {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerWorker {
    fn expand(&self, n: usize) -> Vec<f64> {
        match self {
            PerWorker::Scalar(v) => vec![*v; n],
            PerWorker::List(v) => v.clone(),
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            PerWorker::Scalar(_) => None,
            PerWorker::List(v) => Some(v.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DispatchName {
    #[default]
    Pipelined,
    Blocking,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineSection {
    /// Build the timeline from [machine] and [workload] at this many units.
    pub from_model: Option<u64>,
    pub workers: Option<usize>,
    pub t_init_sw: Option<f64>,
    pub t_init_os: Option<f64>,
    pub t_addr: Option<f64>,
    pub t_collect: Option<f64>,
    pub pd_out: Option<PerWorker>,
    pub pd_back: Option<PerWorker>,
    pub t_compute: Option<PerWorker>,
    #[serde(default)]
    pub dispatch: DispatchName,
    pub clock_hz: Option<f64>,
    #[serde(default)]
    pub trace: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModifierSection {
    Accelerator {
        compute_speedup: Option<f64>,
        t_copy: Option<f64>,
        scale_serial_compute: Option<bool>,
    },
    Precision {
        compute_scale: Option<f64>,
    },
    Cooperative {
        msg_scale: f64,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RooflineSection {
    pub serial_hpl: Option<f64>,
    pub hpl_hpcg_ratio: Option<f64>,
    pub brain_cap: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn machine(&self) -> Result<MachineSpec, ConfigError> {
        let s = &self.machine;
        let base = match s.preset {
            MachinePreset::Fictive => MachineSpec::fictive(),
            MachinePreset::Ideal => MachineSpec::ideal(
                s.p_single.unwrap_or(MachineSpec::fictive().p_single),
                s.clock_hz.unwrap_or(MachineSpec::fictive().clock_hz),
            ),
        };
        let m = MachineSpec {
            p_single: s.p_single.unwrap_or(base.p_single),
            clock_hz: s.clock_hz.unwrap_or(base.clock_hz),
            t_fix: s.t_fix.unwrap_or(base.t_fix),
            t_addr: s.t_addr.unwrap_or(base.t_addr),
            t_msg: s.t_msg.unwrap_or(base.t_msg),
            prop_coeff: s.prop_coeff.unwrap_or(base.prop_coeff),
            prop_exponent: s.prop_exponent.unwrap_or(base.prop_exponent),
            serial_compute_scale: s.serial_compute_scale.unwrap_or(base.serial_compute_scale),
        };
        m.validate().map_err(|e| match e {
            parlimit_core::ledger::LedgerError::InvalidMachine { field, value } => {
                field_err("machine", field, format!("invalid value {value}"))
            }
            other => field_err("machine", "?", other.to_string()),
        })?;
        Ok(m)
    }

    pub fn workload(&self, m: &MachineSpec) -> Result<WorkloadSpec, ConfigError> {
        let s = &self.workload;
        let reject = |field: &str, kind: &str| {
            field_err("workload", field, format!("not used by kind = \"{kind}\""))
        };
        let kind = match s.kind {
            KindName::Hpl => {
                for (f, set) in [
                    ("iterations", s.iterations.is_some()),
                    ("recompute_fraction", s.recompute_fraction.is_some()),
                    ("grid_period", s.grid_period.is_some()),
                    ("grid_cycles", s.grid_cycles.is_some()),
                    ("periods", s.periods.is_some()),
                    ("per_period_serial_msgs", s.per_period_serial_msgs.is_some()),
                ] {
                    if set {
                        return Err(reject(f, "hpl"));
                    }
                }
                WorkloadKind::HplLike
            }
            KindName::Hpcg => {
                for (f, set) in [
                    ("grid_period", s.grid_period.is_some()),
                    ("grid_cycles", s.grid_cycles.is_some()),
                    ("periods", s.periods.is_some()),
                    ("per_period_serial_msgs", s.per_period_serial_msgs.is_some()),
                ] {
                    if set {
                        return Err(reject(f, "hpcg"));
                    }
                }
                WorkloadKind::HpcgLike {
                    iterations: s.iterations.unwrap_or(50),
                    recompute_fraction: s
                        .recompute_fraction
                        .unwrap_or(WorkloadKind::DEFAULT_RECOMPUTE_FRACTION),
                }
            }
            KindName::Grid => {
                for (f, set) in [
                    ("iterations", s.iterations.is_some()),
                    ("recompute_fraction", s.recompute_fraction.is_some()),
                ] {
                    if set {
                        return Err(reject(f, "grid"));
                    }
                }
                let grid_period = match (s.grid_period, s.grid_cycles) {
                    (Some(_), Some(_)) => {
                        return Err(field_err("workload", "grid_cycles", "conflicts with grid_period"))
                    }
                    (Some(p), None) => p,
                    (None, Some(c)) => c / m.clock_hz,
                    (None, None) => 5000.0 / m.clock_hz,
                };
                WorkloadKind::GridSynced {
                    grid_period,
                    periods: s.periods.unwrap_or(10),
                    per_period_serial_msgs: s.per_period_serial_msgs.unwrap_or(100),
                }
            }
        };
        let w = match (s.total_flops, s.payload_seconds) {
            (Some(_), Some(_)) => {
                return Err(field_err("workload", "payload_seconds", "conflicts with total_flops"))
            }
            (None, Some(t)) => WorkloadSpec::fixed_time(kind, t),
            (f, None) => WorkloadSpec::strong(kind, f.unwrap_or(WorkloadSpec::FICTIVE_TOTAL_FLOPS)),
        };
        w.validate().map_err(|e| match e {
            parlimit_core::ledger::LedgerError::InvalidWorkload { field, value } => {
                field_err("workload", field, format!("invalid value {value}"))
            }
            other => field_err("workload", "?", other.to_string()),
        })?;
        Ok(w)
    }

    /// Unit counts of the sweep; defaults to 1e3..1e12 at 20 points per decade.
    pub fn sweep_points(&self) -> Result<Vec<u64>, ConfigError> {
        let s = self.sweep.clone().unwrap_or_default();
        if let Some(list) = s.n {
            for (f, set) in [
                ("n_min", s.n_min.is_some()),
                ("n_max", s.n_max.is_some()),
                ("points_per_decade", s.points_per_decade.is_some()),
            ] {
                if set {
                    return Err(field_err("sweep", f, "conflicts with n"));
                }
            }
            if list.len() < 3 {
                return Err(field_err("sweep", "n", "needs at least 3 unit counts"));
            }
            if let Some(bad) = list.iter().find(|&&n| n < 2) {
                return Err(field_err("sweep", "n", format!("unit count {bad} is below 2")));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(field_err("sweep", "n", "must be strictly increasing"));
            }
            return Ok(list);
        }
        let as_count = |field: &str, v: f64| -> Result<u64, ConfigError> {
            if !(v >= 2.0) || !v.is_finite() || v > u64::MAX as f64 || v.fract() != 0.0 {
                return Err(field_err("sweep", field, format!("invalid unit count {v}")));
            }
            Ok(v as u64)
        };
        let n_min = as_count("n_min", s.n_min.unwrap_or(1e3))?;
        let n_max = as_count("n_max", s.n_max.unwrap_or(1e12))?;
        if n_max <= n_min {
            return Err(field_err("sweep", "n_max", "must exceed n_min"));
        }
        let ppd = s.points_per_decade.unwrap_or(20);
        if ppd == 0 {
            return Err(field_err("sweep", "points_per_decade", "must be at least 1"));
        }
        Ok(parlimit_core::ledger::log_grid(n_min, n_max, ppd))
    }

    pub fn modifiers(&self, m: &MachineSpec) -> Result<Vec<Modifier>, ConfigError> {
        let map = |i: usize| {
            move |e: ModifierError| match e {
                ModifierError::Invalid { field, value } => {
                    field_err("modifier", format!("#{} {field}", i + 1), format!("invalid value {value}"))
                }
                other => field_err("modifier", format!("#{}", i + 1), other.to_string()),
            }
        };
        self.modifiers
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(match s {
                    ModifierSection::Accelerator {
                        compute_speedup,
                        t_copy,
                        scale_serial_compute,
                    } => {
                        let cal = Accelerator::calibrated_for(m);
                        let a = Accelerator {
                            compute_speedup: compute_speedup.unwrap_or(cal.compute_speedup),
                            t_copy: t_copy.unwrap_or(cal.t_copy),
                            scale_serial_compute: scale_serial_compute.unwrap_or(cal.scale_serial_compute),
                        };
                        a.validate().map_err(map(i))?;
                        Modifier::Accelerator(a)
                    }
                    ModifierSection::Precision { compute_scale } => Modifier::Precision(
                        PrecisionMode::new(compute_scale.unwrap_or(PrecisionMode::HALF.compute_scale)).map_err(map(i))?,
                    ),
                    ModifierSection::Cooperative { msg_scale } => {
                        Modifier::Cooperative(CooperativeTransfer::new(*msg_scale).map_err(map(i))?)
                    }
                })
            })
            .collect()
    }

    pub fn roofline(&self) -> Result<RooflineCalibration, ConfigError> {
        let d = RooflineCalibration::default();
        let r = &self.roofline;
        let cal = RooflineCalibration {
            serial_hpl: r.serial_hpl.unwrap_or(d.serial_hpl),
            hpl_hpcg_ratio: r.hpl_hpcg_ratio.unwrap_or(d.hpl_hpcg_ratio),
            brain_cap: r.brain_cap.unwrap_or(d.brain_cap),
        };
        for class in parlimit_core::comm::RooflineClass::ALL {
            parlimit_core::comm::roofline_for_class(class, &cal).map_err(|e| match e {
                parlimit_core::comm::CommError::Invalid { field, value } => {
                    field_err("roofline", field, format!("invalid value {value}"))
                }
            })?;
        }
        Ok(cal)
    }

    /// Timeline configuration, plus the unit count when derived from the model.
    pub fn timeline(&self, m: &MachineSpec, w: &WorkloadSpec) -> Result<(TimelineConfig, bool), ConfigError> {
        let s = self.timeline.as_ref().ok_or(ConfigError::MissingSection("timeline"))?;
        let mut cfg = if let Some(n) = s.from_model {
            for (f, set) in [
                ("workers", s.workers.is_some()),
                ("t_init_sw", s.t_init_sw.is_some()),
                ("t_init_os", s.t_init_os.is_some()),
                ("t_addr", s.t_addr.is_some()),
                ("t_collect", s.t_collect.is_some()),
                ("pd_out", s.pd_out.is_some()),
                ("pd_back", s.pd_back.is_some()),
                ("t_compute", s.t_compute.is_some()),
            ] {
                if set {
                    return Err(field_err("timeline", f, "conflicts with from_model"));
                }
            }
            if n < 2 {
                return Err(field_err("timeline", "from_model", "needs at least 2 units"));
            }
            parlimit_core::timeline::timeline_config_for(m, w, n)
                .map_err(|e| field_err("timeline", "from_model", e.to_string()))?
        } else {
            let lens = [&s.pd_out, &s.pd_back, &s.t_compute]
                .into_iter()
                .flatten()
                .filter_map(PerWorker::len);
            let n = match s.workers {
                Some(n) => n,
                None => lens.max().ok_or_else(|| {
                    field_err("timeline", "workers", "required unless a per-worker list is given")
                })?,
            };
            let t_compute = s
                .t_compute
                .as_ref()
                .ok_or_else(|| field_err("timeline", "t_compute", "required"))?;
            TimelineConfig {
                t_init_sw: s.t_init_sw.unwrap_or(0.0),
                t_init_os: s.t_init_os.unwrap_or(0.0),
                t_addr: s.t_addr.unwrap_or(0.0),
                pd_out: s.pd_out.as_ref().map_or(vec![0.0; n], |p| p.expand(n)),
                pd_back: s.pd_back.as_ref().map_or(vec![0.0; n], |p| p.expand(n)),
                t_compute: t_compute.expand(n),
                t_collect: s.t_collect.unwrap_or(0.0),
                dispatch_mode: DispatchMode::Pipelined,
                clock_hz: None,
            }
        };
        cfg.dispatch_mode = match s.dispatch {
            DispatchName::Pipelined => DispatchMode::Pipelined,
            DispatchName::Blocking => DispatchMode::Blocking,
        };
        cfg.clock_hz = s.clock_hz;
        if cfg.t_compute.len() != cfg.pd_out.len() || cfg.t_compute.len() != cfg.pd_back.len() {
            let (field, got) = if cfg.pd_out.len() != cfg.t_compute.len() {
                ("pd_out", cfg.pd_out.len())
            } else {
                ("pd_back", cfg.pd_back.len())
            };
            return Err(field_err(
                "timeline",
                field,
                format!("has {got} entries, t_compute has {}", cfg.t_compute.len()),
            ));
        }
        cfg.validate().map_err(|e| match e {
            parlimit_core::timeline::TimelineError::InvalidValue { field, value } => {
                field_err("timeline", field, format!("invalid value {value}"))
            }
            parlimit_core::timeline::TimelineError::LengthMismatch { field, .. } => {
                field_err("timeline", field, e.to_string())
            }
            parlimit_core::timeline::TimelineError::NoWorkers => field_err("timeline", "workers", e.to_string()),
            other => field_err("timeline", "?", other.to_string()),
        })?;
        Ok((cfg, s.from_model.is_some()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_fictive_machine() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.machine().unwrap(), MachineSpec::fictive());
        assert_eq!(c.workload(&MachineSpec::fictive()).unwrap(), WorkloadSpec::fictive_hpl());
        assert_eq!(c.sweep_points().unwrap().len(), 181);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("[machine]\nt_adr = 1e-6\n").unwrap_err();
        assert!(err.to_string().contains("t_adr"), "{err}");
    }

    #[test]
    fn invalid_value_is_named() {
        let c = RunConfig::parse("[machine]\nt_addr = -1.0\n").unwrap();
        let err = c.machine().unwrap_err().to_string();
        assert!(err.starts_with("[machine] t_addr"), "{err}");
    }

    #[test]
    fn grid_cycles_follow_the_clock() {
        let c = RunConfig::parse("[workload]\nkind = \"grid\"\ngrid_cycles = 5000\n").unwrap();
        let m = c.machine().unwrap();
        assert_eq!(c.workload(&m).unwrap(), WorkloadSpec::fictive_grid(&m, 5000.0));
    }

    #[test]
    fn misplaced_workload_key() {
        let c = RunConfig::parse("[workload]\niterations = 3\n").unwrap();
        let err = c.workload(&MachineSpec::fictive()).unwrap_err().to_string();
        assert_eq!(err, "[workload] iterations: not used by kind = \"hpl\"");
    }

    #[test]
    fn modifiers_in_order() {
        let text = "[[modifier]]\nkind = \"cooperative\"\nmsg_scale = 0.5\n\n[[modifier]]\nkind = \"accelerator\"\n";
        let c = RunConfig::parse(text).unwrap();
        let m = MachineSpec::fictive();
        let mods = c.modifiers(&m).unwrap();
        assert!(matches!(mods[0], Modifier::Cooperative(_)));
        assert_eq!(mods[1], Modifier::Accelerator(Accelerator::calibrated_for(&m)));
        let bad = RunConfig::parse("[[modifier]]\nkind = \"precision\"\nmsg_scale = 0.5\n").unwrap_err();
        assert!(bad.to_string().contains("msg_scale"), "{bad}");
        let c = RunConfig::parse("[[modifier]]\nkind = \"cooperative\"\nmsg_scale = 2.0\n").unwrap();
        assert!(c.modifiers(&m).unwrap_err().to_string().contains("msg_scale"));
    }

    #[test]
    fn timeline_arrays() {
        let text = "[timeline]\nt_addr = 0.5\npd_out = [0.1, 0.2]\nt_compute = 1.0\n";
        let c = RunConfig::parse(text).unwrap();
        let m = MachineSpec::fictive();
        let (t, derived) = c.timeline(&m, &WorkloadSpec::fictive_hpl()).unwrap();
        assert!(!derived);
        assert_eq!(t.t_compute, vec![1.0, 1.0]);
        assert_eq!(t.pd_back, vec![0.0, 0.0]);
        let bad = RunConfig::parse("[timeline]\nworkers = 3\npd_out = [0.1, 0.2]\nt_compute = 1.0\n").unwrap();
        let err = bad.timeline(&m, &WorkloadSpec::fictive_hpl()).unwrap_err().to_string();
        assert!(err.starts_with("[timeline] pd_out"), "{err}");
    }
}
