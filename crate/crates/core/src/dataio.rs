//! Supercomputer-list CSV ingestion and the efficiency metrics derived from it.
//!
//! The dialect is comma separated UTF-8 with a mandatory header row and
//! optional quoting. Column names are matched case-insensitively through an
//! alias table, and a bracketed unit suffix such as `Rmax [PFlop/s]` sets the
//! unit of that column. Performance columns default to Tflop/s and are stored
//! in flop/s.
//!
//! | column        | accepted headers                                  | required |
//! |---------------|---------------------------------------------------|----------|
//! | `rank`        | rank                                              | yes      |
//! | `name`        | name, system, computer                            | yes      |
//! | `cores`       | cores, total cores, total_cores, #cores           | yes      |
//! | `rmax`        | rmax, r_max                                       | yes      |
//! | `rpeak`       | rpeak, r_peak                                     | yes      |
//! | `hpcg`        | hpcg                                              | no       |
//! | `year`        | year                                              | no       |
//! | `accelerated` | accelerated, accelerator, accelerator/co-processor | no      |

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

use thiserror::Error;

use crate::amdahl;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing mandatory column '{0}'")]
    MissingColumn(&'static str),
    #[error("no header row")]
    NoHeader,
    #[error("unknown performance unit '{0}'")]
    UnknownUnit(String),
    #[error("no records to plot")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Rank,
    Name,
    Cores,
    Rmax,
    Rpeak,
    Hpcg,
    Year,
    Accelerated,
}

impl Column {
    const ALL: [Column; 8] = [
        Column::Rank,
        Column::Name,
        Column::Cores,
        Column::Rmax,
        Column::Rpeak,
        Column::Hpcg,
        Column::Year,
        Column::Accelerated,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Column::Rank => "rank",
            Column::Name => "name",
            Column::Cores => "cores",
            Column::Rmax => "rmax",
            Column::Rpeak => "rpeak",
            Column::Hpcg => "hpcg",
            Column::Year => "year",
            Column::Accelerated => "accelerated",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            Column::Rank => &["rank"],
            Column::Name => &["name", "system", "computer"],
            Column::Cores => &["cores", "total cores", "total_cores", "#cores"],
            Column::Rmax => &["rmax", "r_max"],
            Column::Rpeak => &["rpeak", "r_peak"],
            Column::Hpcg => &["hpcg"],
            Column::Year => &["year"],
            Column::Accelerated => &["accelerated", "accelerator", "accelerator/co-processor"],
        }
    }

    const fn required(self) -> bool {
        matches!(
            self,
            Column::Rank | Column::Name | Column::Cores | Column::Rmax | Column::Rpeak
        )
    }

    fn from_header(base: &str) -> Option<Column> {
        Column::ALL.into_iter().find(|c| c.aliases().contains(&base))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Unit {
    Flops,
    Gflops,
    #[default]
    Tflops,
    Pflops,
    Eflops,
}

impl Unit {
    pub const fn factor(self) -> f64 {
        match self {
            Unit::Flops => 1.0,
            Unit::Gflops => 1e9,
            Unit::Tflops => 1e12,
            Unit::Pflops => 1e15,
            Unit::Eflops => 1e18,
        }
    }

    pub fn parse(s: &str) -> Result<Unit, DataError> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.trim_end_matches("/s").trim_end_matches("ops").trim_end_matches("op");
        match t {
            "fl" | "" => Ok(Unit::Flops),
            "gfl" | "g" => Ok(Unit::Gflops),
            "tfl" | "t" => Ok(Unit::Tflops),
            "pfl" | "p" => Ok(Unit::Pflops),
            "efl" | "e" => Ok(Unit::Eflops),
            _ => Err(DataError::UnknownUnit(s.to_string())),
        }
    }

    pub const fn label(self) -> &'static str {
        match self {
            Unit::Flops => "Flop/s",
            Unit::Gflops => "GFlop/s",
            Unit::Tflops => "TFlop/s",
            Unit::Pflops => "PFlop/s",
            Unit::Eflops => "EFlop/s",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Unit of performance columns whose header carries no unit.
    pub default_unit: Unit,
    /// Per-column overrides; these win over header units.
    pub column_units: HashMap<Column, Unit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineRecord {
    pub rank: u32,
    pub name: String,
    pub cores: u64,
    /// flop/s
    pub rmax: f64,
    /// flop/s
    pub rpeak: f64,
    /// flop/s
    pub hpcg: Option<f64>,
    pub year: Option<i32>,
    pub accelerated: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowRejection {
    /// 1-based line number in the source.
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for RowRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedTable {
    pub records: Vec<MachineRecord>,
    pub rejected: Vec<RowRejection>,
}

fn split_header(raw: &str) -> (String, Option<String>) {
    let lower = raw.trim().to_lowercase();
    for (open, close) in [('[', ']'), ('(', ')')] {
        if let (Some(a), Some(b)) = (lower.find(open), lower.rfind(close)) {
            if a < b {
                let base = lower[..a].trim().to_string();
                let unit = lower[a + 1..b].trim().to_string();
                return (base, Some(unit));
            }
        }
    }
    (lower, None)
}

fn clean_number(s: &str) -> String {
    s.trim().replace([',', '_'], "")
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" => None,
        "no" | "n" | "false" | "0" | "none" => Some(false),
        // anything else names an accelerator
        _ => Some(true),
    }
}

struct Layout {
    index: HashMap<Column, usize>,
    unit: HashMap<Column, Unit>,
}

impl Layout {
    fn from_headers(headers: &csv::StringRecord, opts: &ParseOptions) -> Result<Self, DataError> {
        let mut index = HashMap::new();
        let mut unit = HashMap::new();
        for (i, raw) in headers.iter().enumerate() {
            let (base, header_unit) = split_header(raw);
            let Some(col) = Column::from_header(&base) else {
                continue;
            };
            if index.contains_key(&col) {
                continue;
            }
            index.insert(col, i);
            if let Some(u) = header_unit {
                unit.insert(col, Unit::parse(&u)?);
            }
        }
        for col in Column::ALL {
            if col.required() && !index.contains_key(&col) {
                return Err(DataError::MissingColumn(col.name()));
            }
        }
        for (col, u) in &opts.column_units {
            unit.insert(*col, *u);
        }
        for col in [Column::Rmax, Column::Rpeak, Column::Hpcg] {
            unit.entry(col).or_insert(opts.default_unit);
        }
        Ok(Self { index, unit })
    }

    fn field<'r>(&self, row: &'r csv::StringRecord, col: Column) -> Option<&'r str> {
        self.index
            .get(&col)
            .and_then(|&i| row.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }

    fn required<'r>(&self, row: &'r csv::StringRecord, col: Column) -> Result<&'r str, String> {
        self.field(row, col)
            .ok_or_else(|| format!("missing value for {}", col.name()))
    }

    fn perf(&self, row: &csv::StringRecord, col: Column) -> Result<Option<f64>, String> {
        let Some(s) = self.field(row, col) else {
            return Ok(None);
        };
        let v: f64 = clean_number(s)
            .parse()
            .map_err(|_| format!("{} is not a number: '{s}'", col.name()))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(format!("{} must be positive, got {s}", col.name()));
        }
        Ok(Some(v * self.unit[&col].factor()))
    }

    fn record(&self, row: &csv::StringRecord) -> Result<MachineRecord, String> {
        let rank_s = self.required(row, Column::Rank)?;
        let rank: u32 = clean_number(rank_s)
            .parse()
            .map_err(|_| format!("rank is not an integer: '{rank_s}'"))?;
        if rank < 1 {
            return Err("rank must be >= 1".into());
        }
        let name = self.required(row, Column::Name)?.to_string();
        let cores_s = self.required(row, Column::Cores)?;
        let cores: i64 = clean_number(cores_s)
            .parse()
            .map_err(|_| format!("cores is not an integer: '{cores_s}'"))?;
        if cores < 1 {
            return Err(format!("cores must be >= 1, got {cores}"));
        }
        let rmax = self.perf(row, Column::Rmax)?.ok_or("missing value for rmax")?;
        let rpeak = self.perf(row, Column::Rpeak)?.ok_or("missing value for rpeak")?;
        if rmax > rpeak {
            return Err("inconsistent benchmark figures (rmax > rpeak)".into());
        }
        let hpcg = self.perf(row, Column::Hpcg)?;
        if hpcg.is_some_and(|h| h > rmax) {
            return Err("inconsistent benchmark figures (hpcg > rmax)".into());
        }
        let year = match self.field(row, Column::Year) {
            Some(s) => Some(s.parse().map_err(|_| format!("year is not an integer: '{s}'"))?),
            None => None,
        };
        Ok(MachineRecord {
            rank,
            name,
            cores: cores as u64,
            rmax,
            rpeak,
            hpcg,
            year,
            accelerated: self.field(row, Column::Accelerated).and_then(parse_bool),
        })
    }
}

/// Reads every row; rows that break a record invariant are rejected with
/// their line number while the remaining rows are kept.
pub fn parse_csv<R: Read>(source: R, opts: &ParseOptions) -> Result<ParsedTable, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(DataError::NoHeader);
    }
    let layout = Layout::from_headers(&headers, opts)?;
    let mut table = ParsedTable::default();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        match layout.record(&row) {
            Ok(r) => table.records.push(r),
            Err(reason) => table.rejected.push(RowRejection { line, reason }),
        }
    }
    Ok(table)
}

/// Writes records in the same dialect, performance in `unit`.
pub fn write_csv<W: Write>(records: &[MachineRecord], sink: W, unit: Unit) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(sink);
    let label = unit.label();
    w.write_record([
        "rank".to_string(),
        "name".to_string(),
        "cores".to_string(),
        format!("rmax [{label}]"),
        format!("rpeak [{label}]"),
        format!("hpcg [{label}]"),
        "year".to_string(),
        "accelerated".to_string(),
    ])?;
    let f = unit.factor();
    for r in records {
        w.write_record([
            r.rank.to_string(),
            r.name.clone(),
            r.cores.to_string(),
            (r.rmax / f).to_string(),
            (r.rpeak / f).to_string(),
            r.hpcg.map(|h| (h / f).to_string()).unwrap_or_default(),
            r.year.map(|y| y.to_string()).unwrap_or_default(),
            r.accelerated.map(|a| if a { "yes" } else { "no" }.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedMetrics {
    pub e_hpl: f64,
    pub e_hpcg: Option<f64>,
    pub alpha_hpl: Option<f64>,
    pub alpha_hpcg: Option<f64>,
    /// Computed as `(1/E - 1) / (N - 1)`, not by subtraction.
    pub one_minus_alpha_hpl: Option<f64>,
    pub one_minus_alpha_hpcg: Option<f64>,
    /// `e_hpl * cores`
    pub gain_hpl: f64,
    pub hpl_hpcg_ratio: Option<f64>,
    /// Why alpha is missing, when it is.
    pub alpha_note: Option<String>,
}

pub fn derive(r: &MachineRecord) -> DerivedMetrics {
    let e_hpl = r.rmax / r.rpeak;
    let e_hpcg = r.hpcg.map(|h| h / r.rpeak);
    let hpl = amdahl::point_from_efficiency(e_hpl, r.cores);
    let hpcg = e_hpcg.map(|e| amdahl::point_from_efficiency(e, r.cores));
    DerivedMetrics {
        e_hpl,
        e_hpcg,
        alpha_hpl: hpl.as_ref().ok().map(|p| p.alpha()),
        alpha_hpcg: hpcg.as_ref().and_then(|p| p.as_ref().ok()).map(|p| p.alpha()),
        one_minus_alpha_hpl: hpl.as_ref().ok().map(|p| p.serial()),
        one_minus_alpha_hpcg: hpcg.as_ref().and_then(|p| p.as_ref().ok()).map(|p| p.serial()),
        gain_hpl: e_hpl * r.cores as f64,
        hpl_hpcg_ratio: e_hpcg.map(|e| e_hpl / e),
        alpha_note: hpl.err().map(|e| e.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub cores: u64,
    pub e_hpl: f64,
    pub e_hpcg: Option<f64>,
    pub one_minus_alpha: Option<f64>,
}

/// One row per record, ascending by core count (ties keep rank order).
pub fn scatter_data(records: &[MachineRecord]) -> Result<Vec<ScatterRow>, DataError> {
    if records.is_empty() {
        return Err(DataError::Empty);
    }
    let mut sorted: Vec<&MachineRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.cores, r.rank));
    Ok(sorted
        .into_iter()
        .map(|r| {
            let d = derive(r);
            ScatterRow {
                cores: r.cores,
                e_hpl: d.e_hpl,
                e_hpcg: d.e_hpcg,
                one_minus_alpha: d.one_minus_alpha_hpl,
            }
        })
        .collect())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Tab-separated scatter rows under a `#` header; missing values stay empty.
pub fn format_scatter(rows: &[ScatterRow]) -> String {
    let mut out = String::from("# cores\te_hpl\te_hpcg\tone_minus_alpha\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.cores,
            r.e_hpl,
            opt(r.e_hpcg),
            opt(r.one_minus_alpha)
        ));
    }
    out
}
