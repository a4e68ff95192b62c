use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use parlimit_core::amdahl::{self, AmdahlPoint};
use parlimit_core::comm::{self, AnnTopology, BrainParams, BusKind, BusModel, RooflineClass};
use parlimit_core::dataio::{self, ParseOptions, Unit};
use parlimit_core::ledger::{self, Contribution, ProblemSize, SweepPoint, WorkloadKind, WorkloadSpec};
use parlimit_core::modifiers::{self, Modifier};
use parlimit_core::timeline;

use crate::config::RunConfig;
use crate::render::{exact_float as fx, render_all, Cell, OutputFormat, Table};
use crate::RunError;

#[derive(Debug, Parser)]
#[command(name = "parlimit", version, about = "Performance limits of parallelized sequential computing")]
pub struct Cli {
    /// Report format.
    #[arg(long, value_enum, global = true, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Speedup, efficiency and gain roofline for one (alpha, N) pair.
    Model(ModelArgs),
    /// Strong- or fixed-time-scaling sweep of the serial-fraction ledger.
    Sweep(ConfigArg),
    /// Discrete-event timeline of one dispatch/compute/collect run.
    Simulate(SimulateArgs),
    /// Message counts and serialized communication time of a workload class.
    Comm(CommArgs),
    /// Derived efficiency metrics from a supercomputer list CSV.
    Ingest(IngestArgs),
    /// Gain rooflines of the HPL, HPCG and brain workload classes.
    Roofline(RooflineArgs),
    /// Apply the [[modifier]] stanzas of a config, then sweep.
    Modify(ConfigArg),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Parallel fraction in [0, 1].
    #[arg(long)]
    pub alpha: f64,
    /// Number of processing units (>= 1).
    #[arg(long)]
    pub n: f64,
    /// Single-unit performance in flop/s; adds payload and nominal figures.
    #[arg(long)]
    pub p_single: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Run configuration with a [timeline] section.
    #[arg(long)]
    pub config: PathBuf,
    /// Emit the event trace.
    #[arg(long)]
    pub trace: bool,
    /// Emit idle time per worker.
    #[arg(long)]
    pub per_worker: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Hpl,
    Hpcg,
    Ann,
    Brain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BusArg {
    Shared,
    PerLayer,
}

#[derive(Debug, Args)]
pub struct CommArgs {
    #[arg(long, value_enum)]
    pub class: ClassArg,
    /// Worker count (hpl, hpcg) or hidden-layer width (ann).
    #[arg(long)]
    pub m: Option<u64>,
    /// HPCG iterations.
    #[arg(long, default_value_t = 1)]
    pub iterations: u64,
    /// ANN input nodes.
    #[arg(long)]
    pub n_in: Option<u64>,
    /// ANN hidden layers.
    #[arg(long)]
    pub h: Option<u64>,
    /// ANN output nodes.
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long, value_enum, default_value_t = BusArg::Shared)]
    pub bus: BusArg,
    /// Seconds per message on the bus.
    #[arg(long, default_value_t = 1e-6)]
    pub t_msg: f64,
    /// Arbitration seconds per message.
    #[arg(long, default_value_t = 0.0)]
    pub t_arb: f64,
    /// Brain: neuron count.
    #[arg(long)]
    pub neurons: Option<u64>,
    /// Brain: fellow neurons per neuron.
    #[arg(long)]
    pub fanout: Option<f64>,
    /// Brain: computation seconds per neuron step.
    #[arg(long)]
    pub t_comp: Option<f64>,
    /// Brain: seconds per neuron message.
    #[arg(long)]
    pub t_comm: Option<f64>,
    /// Brain: grid period in seconds.
    #[arg(long)]
    pub grid_period: Option<f64>,
    /// Brain: also report a hierarchic design reducing traffic by this factor.
    #[arg(long)]
    pub hierarchic: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    Flops,
    Gflops,
    Tflops,
    Pflops,
    Eflops,
}

impl From<UnitArg> for Unit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Flops => Unit::Flops,
            UnitArg::Gflops => Unit::Gflops,
            UnitArg::Tflops => Unit::Tflops,
            UnitArg::Pflops => Unit::Pflops,
            UnitArg::Eflops => Unit::Eflops,
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub csv: PathBuf,
    /// Unit of performance columns whose header names none.
    #[arg(long, value_enum, default_value_t = UnitArg::Tflops)]
    pub unit: UnitArg,
    /// Fail when any row is rejected.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct RooflineArgs {
    /// Optional config whose [roofline] section overrides the calibration.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn execute(cli: &Cli, err: &mut dyn Write) -> Result<String, RunError> {
    let tables = match &cli.command {
        Command::Model(a) => model(a)?,
        Command::Sweep(a) => sweep(&RunConfig::load(&a.config)?)?,
        Command::Simulate(a) => simulate(a)?,
        Command::Comm(a) => comm_report(a)?,
        Command::Ingest(a) => ingest(a, err)?,
        Command::Roofline(a) => roofline(a)?,
        Command::Modify(a) => modify(&RunConfig::load(&a.config)?)?,
    };
    Ok(render_all(&tables, cli.format))
}

fn usage(flag: &str, e: impl std::fmt::Display) -> RunError {
    RunError::Usage(format!("--{flag}: {e}"))
}

fn data(e: impl std::fmt::Display) -> RunError {
    RunError::Data(e.to_string())
}

fn model(a: &ModelArgs) -> Result<Vec<Table>, RunError> {
    let par = amdahl::Parallelism::new(a.alpha).map_err(|e| usage("alpha", e))?;
    let p = AmdahlPoint::with_parallelism(par, a.n).map_err(|e| usage("n", e))?;
    let mut rows = vec![
        ("alpha", Cell::from(par.alpha())),
        ("one_minus_alpha", par.serial().into()),
        ("n", a.n.into()),
        ("speedup", amdahl::speedup(p).into()),
        ("efficiency", amdahl::efficiency(p).into()),
        ("gain_roofline", amdahl::perf_gain_limit(par).ok().into()),
    ];
    if let Some(ps) = a.p_single {
        let payload = amdahl::perf_total(p, ps).map_err(|e| usage("p-single", e))?;
        rows.push(("nominal_flops", amdahl::perf_nominal(a.n, ps).value.into()));
        rows.push(("payload_flops", payload.value.into()));
    }
    Ok(vec![Table::key_values(rows).titled("model")])
}

fn workload_label(w: &WorkloadSpec) -> String {
    let kind = match w.kind {
        WorkloadKind::HplLike => "hpl".to_string(),
        WorkloadKind::HpcgLike { iterations, .. } => format!("hpcg, {iterations} iterations"),
        WorkloadKind::GridSynced {
            grid_period, periods, ..
        } => format!("grid, period {} s x {periods}", fx(grid_period)),
    };
    match w.size {
        ProblemSize::Fixed { total_flops } => format!("{kind}, fixed total {} flop", fx(total_flops)),
        ProblemSize::FixedTime { payload_seconds } => format!("{kind}, fixed time {} s per unit", fx(payload_seconds)),
    }
}

fn sweep_table(title: String, points: &[SweepPoint], base: Option<&[SweepPoint]>) -> Table {
    let mut columns: Vec<String> = vec!["n".into(), "nominal".into(), "r_max".into()];
    if base.is_some() {
        columns.extend(["base_r_max".into(), "gain_ratio".into(), "base_efficiency".into()]);
    }
    columns.extend(["efficiency".into(), "one_minus_alpha".into()]);
    columns.extend(Contribution::ALL.iter().map(|c| c.name().to_string()));
    columns.push("beyond_model".into());
    let mut t = Table::new(columns).titled(title);
    for (i, p) in points.iter().enumerate() {
        let l = &p.ledger;
        let mut row: Vec<Cell> = vec![l.n.into(), p.nominal.into(), l.r_max.into()];
        if let Some(b) = base {
            let bl = &b[i].ledger;
            row.extend([bl.r_max.into(), (l.r_max / bl.r_max).into(), bl.efficiency.into()]);
        }
        row.extend([l.efficiency.into(), l.one_minus_alpha_total.into()]);
        row.extend(l.entries().map(|(_, e)| Cell::from(e.one_minus_alpha_share)));
        row.push(l.beyond_model.into());
        t.push(row);
    }
    let peak = ledger::peak_of(points);
    t.note(format!(
        "peak: n = {}, r_max = {} flop/s, {}",
        peak.n_at_peak,
        fx(peak.r_max_peak),
        if peak.interior { "interior" } else { "at sweep boundary" }
    ));
    t
}

fn sweep(cfg: &RunConfig) -> Result<Vec<Table>, RunError> {
    let m = cfg.machine()?;
    let w = cfg.workload(&m)?;
    let n = cfg.sweep_points()?;
    let points = ledger::sweep(&m, &w, &n).map_err(data)?;
    Ok(vec![sweep_table(format!("sweep: {}", workload_label(&w)), &points, None)])
}

fn modify(cfg: &RunConfig) -> Result<Vec<Table>, RunError> {
    let m = cfg.machine()?;
    let w = cfg.workload(&m)?;
    let n = cfg.sweep_points()?;
    let mods = cfg.modifiers(&m)?;
    let (mm, mw) = modifiers::apply_all(&m, &w, &mods).map_err(data)?;
    let base = ledger::sweep(&m, &w, &n).map_err(data)?;
    let modified = ledger::sweep(&mm, &mw, &n).map_err(data)?;
    let mut t = sweep_table(format!("modified sweep: {}", workload_label(&mw)), &modified, Some(&base));
    let base_peak = ledger::peak_of(&base);
    t.note(format!(
        "baseline peak: n = {}, r_max = {} flop/s, {}",
        base_peak.n_at_peak,
        fx(base_peak.r_max_peak),
        if base_peak.interior { "interior" } else { "at sweep boundary" }
    ));
    let mut current = m;
    for (i, modifier) in mods.iter().enumerate() {
        let line = match modifier {
            Modifier::Accelerator(a) => format!(
                "modifier {}: accelerator, compute_speedup = {}, t_copy = {} s",
                i + 1,
                fx(a.compute_speedup),
                fx(a.t_copy)
            ),
            Modifier::Precision(p) => {
                let out = modifiers::apply_precision(&current, &w, p, base_peak.n_at_peak).map_err(data)?;
                format!(
                    "modifier {}: precision, compute_scale = {}, predicted total speedup at n = {}: {}",
                    i + 1,
                    fx(p.compute_scale),
                    base_peak.n_at_peak,
                    fx(out.predicted_total_speedup)
                )
            }
            Modifier::Cooperative(c) => format!("modifier {}: cooperative, msg_scale = {}", i + 1, fx(c.msg_scale)),
        };
        t.note(line);
        current = modifiers::apply_all(&current, &w, std::slice::from_ref(modifier))
            .map_err(data)?
            .0;
    }
    Ok(vec![t])
}

fn simulate(a: &SimulateArgs) -> Result<Vec<Table>, RunError> {
    let cfg = RunConfig::load(&a.config)?;
    let m = cfg.machine()?;
    let w = cfg.workload(&m)?;
    let (tc, from_model) = cfg.timeline(&m, &w)?;
    let want_trace = a.trace || cfg.timeline.as_ref().is_some_and(|t| t.trace);
    let r = if want_trace {
        timeline::simulate_traced(&tc)
    } else {
        timeline::simulate(&tc)
    }
    .map_err(data)?;
    let idle = &r.per_worker_idle;
    let mut tables = vec![Table::key_values([
        ("workers", Cell::from(r.n_workers)),
        ("total_time", r.total_time.into()),
        ("payload_time_sum", r.payload_time_sum.into()),
        ("work_alone", r.work_alone.into()),
        ("speedup", r.speedup.into()),
        ("utilization", r.utilization.into()),
        ("empirical_alpha", r.empirical_alpha.into()),
        ("idle_min", idle.iter().copied().reduce(f64::min).into()),
        ("idle_max", idle.iter().copied().reduce(f64::max).into()),
    ])
    .titled("timeline")];
    if from_model {
        let x = timeline::compare_to_analytic(&tc, &m, &w).map_err(data)?;
        let mut t = Table::key_values([
            ("n", Cell::from(x.n)),
            ("simulated_efficiency", x.simulated_efficiency.into()),
            ("ledger_efficiency", x.ledger_efficiency.into()),
            ("relative_difference", x.relative_difference.into()),
            ("payload_dominated", x.payload_dominated.into()),
            ("within_tolerance", x.within_tolerance().into()),
        ])
        .titled("cross-check against the ledger");
        if x.regime_mismatch() {
            t.note("serial time is not small against payload time; agreement is not expected");
        }
        tables.push(t);
    }
    if a.per_worker {
        let mut t = Table::new(["worker", "idle"]).titled("idle time per worker");
        for (i, v) in idle.iter().enumerate() {
            t.push(vec![i.into(), (*v).into()]);
        }
        tables.push(t);
    }
    if want_trace {
        let mut t = Table::new(["time", "actor", "event"]).titled("trace");
        for e in &r.trace {
            t.push(vec![e.time().into(), e.actor.to_string().into(), e.kind.name().into()]);
        }
        tables.push(t);
    }
    Ok(tables)
}

fn need<T: Copy>(v: Option<T>, flag: &str, class: &str) -> Result<T, RunError> {
    v.ok_or_else(|| RunError::Usage(format!("--{flag} is required for --class {class}")))
}

fn comm_report(a: &CommArgs) -> Result<Vec<Table>, RunError> {
    let bus_kind = match a.bus {
        BusArg::Shared => BusKind::Shared,
        BusArg::PerLayer => BusKind::PerLayer,
    };
    let bus = || {
        BusModel::new(bus_kind, a.t_msg, a.t_arb).map_err(|e| match e {
            comm::CommError::Invalid { field, .. } => usage(&field.replace('_', "-"), e),
        })
    };
    let flag_err = |e: comm::CommError| match e {
        comm::CommError::Invalid { field, .. } => usage(&field.replace('_', "-"), e),
    };
    let profile_rows = |p: &comm::CommProfile| {
        vec![
            ("class", Cell::from(p.workload_class.to_string())),
            ("message_count", p.message_count.into()),
            ("serialized_time", p.serialized_time.into()),
        ]
    };
    let table = match a.class {
        ClassArg::Hpl => {
            let m = need(a.m, "m", "hpl")?;
            let mut rows = profile_rows(&comm::profile_hpl(m, &bus()?));
            rows.insert(1, ("workers", m.into()));
            Table::key_values(rows)
        }
        ClassArg::Hpcg => {
            let m = need(a.m, "m", "hpcg")?;
            if a.iterations < 1 {
                return Err(usage("iterations", "must be at least 1"));
            }
            let mut rows = profile_rows(&comm::profile_hpcg(m, a.iterations, &bus()?));
            rows.insert(1, ("workers", m.into()));
            rows.insert(2, ("iterations", a.iterations.into()));
            Table::key_values(rows)
        }
        ClassArg::Ann => {
            let t = AnnTopology::new(
                need(a.n_in, "n-in", "ann")?,
                need(a.m, "m", "ann")?,
                need(a.h, "h", "ann")?,
                need(a.k, "k", "ann")?,
            )
            .map_err(flag_err)?;
            let msgs = comm::messages_ann(&t);
            let mut rows = profile_rows(&comm::profile_ann(&t, &bus()?));
            rows.extend([
                ("input_messages", Cell::from(msgs.input)),
                ("hidden_messages", msgs.hidden.into()),
                ("output_messages", msgs.output.into()),
                ("compute_ops", comm::ann_compute_ops(&t).into()),
                ("comm_compute_ratio", comm::ann_comm_compute_ratio(&t).into()),
            ]);
            Table::key_values(rows)
        }
        ClassArg::Brain => {
            let d = BrainParams::default();
            let params = BrainParams {
                neurons: a.neurons.unwrap_or(d.neurons),
                fanout: a.fanout.unwrap_or(d.fanout),
                grid_period: a.grid_period.unwrap_or(d.grid_period),
                t_comp: a.t_comp.unwrap_or(d.t_comp),
                t_comm: a.t_comm.unwrap_or(d.t_comm),
            };
            let b = comm::brain_profile(params).map_err(flag_err)?;
            let cal = comm::RooflineCalibration::default();
            let mut rows = profile_rows(&b.profile);
            rows.extend([
                ("neurons", Cell::from(params.neurons)),
                ("fanout", params.fanout.into()),
                ("efficiency_ratio", b.efficiency_ratio.into()),
                ("implied_gain", b.implied_gain.into()),
                ("real_time_factor", b.real_time_factor.into()),
                ("within_brain_cap", b.within_cap(&cal).into()),
            ]);
            if let Some(f) = a.hierarchic {
                let hb = comm::hierarchic_reduction(&b, f).map_err(|e| usage("hierarchic", e))?;
                rows.extend([
                    ("hierarchic_efficiency_ratio", Cell::from(hb.efficiency_ratio)),
                    ("hierarchic_implied_gain", hb.implied_gain.into()),
                    ("hierarchic_improvement", (hb.implied_gain / b.implied_gain).into()),
                ]);
            }
            Table::key_values(rows)
        }
    };
    Ok(vec![table.titled("communication profile")])
}

fn ingest(a: &IngestArgs, err: &mut dyn Write) -> Result<Vec<Table>, RunError> {
    let file = std::fs::File::open(&a.csv).map_err(|e| data(format!("cannot read {}: {e}", a.csv.display())))?;
    let opts = ParseOptions {
        default_unit: a.unit.into(),
        ..ParseOptions::default()
    };
    let parsed = dataio::parse_csv(file, &opts).map_err(|e| data(format!("{}: {e}", a.csv.display())))?;
    for r in &parsed.rejected {
        let _ = writeln!(err, "warning: {}: rejected {r}", a.csv.display());
    }
    if a.strict && !parsed.rejected.is_empty() {
        return Err(data(format!("{} row(s) rejected", parsed.rejected.len())));
    }
    let mut metrics = Table::new([
        "rank",
        "name",
        "cores",
        "e_hpl",
        "e_hpcg",
        "alpha_hpl",
        "one_minus_alpha_hpl",
        "one_minus_alpha_hpcg",
        "gain_hpl",
        "hpl_hpcg_ratio",
        "accelerated",
    ])
    .titled("derived metrics");
    for r in &parsed.records {
        let d = dataio::derive(r);
        metrics.push(vec![
            u64::from(r.rank).into(),
            r.name.as_str().into(),
            r.cores.into(),
            d.e_hpl.into(),
            d.e_hpcg.into(),
            d.alpha_hpl.into(),
            d.one_minus_alpha_hpl.into(),
            d.one_minus_alpha_hpcg.into(),
            d.gain_hpl.into(),
            d.hpl_hpcg_ratio.into(),
            r.accelerated.into(),
        ]);
        if let Some(note) = d.alpha_note {
            metrics.note(format!("rank {}: alpha omitted, {note}", r.rank));
        }
    }
    let mut tables = vec![metrics];
    if !parsed.records.is_empty() {
        let rows = dataio::scatter_data(&parsed.records).map_err(data)?;
        let mut scatter = Table::new(["cores", "e_hpl", "e_hpcg", "one_minus_alpha"]).titled("scatter");
        for r in rows {
            scatter.push(vec![r.cores.into(), r.e_hpl.into(), r.e_hpcg.into(), r.one_minus_alpha.into()]);
        }
        tables.push(scatter);
    }
    Ok(tables)
}

fn roofline(a: &RooflineArgs) -> Result<Vec<Table>, RunError> {
    let cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cal = cfg.roofline()?;
    let mut t = Table::new(["class", "one_minus_alpha", "gain_roofline"]).titled("class rooflines");
    let mut gains = Vec::new();
    for class in RooflineClass::ALL {
        let gain = comm::roofline_for_class(class, &cal).map_err(data)?;
        gains.push(gain);
        t.push(vec![class.name().into(), (1.0 / gain).into(), gain.into()]);
    }
    t.note(format!("hpl/hpcg gain ratio: {}", fx(gains[0] / gains[1])));
    Ok(vec![t])
}
