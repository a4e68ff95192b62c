//! Reports that render either as an aligned text table or as tab-separated
//! plot data, always from the same cell values.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Table,
    Plotdata,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Eight significant digits, switching to exponent form outside [1e-3, 1e9).
fn human_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let mag = v.abs();
    if (1e-3..1e9).contains(&mag) {
        let decimals = (7 - mag.log10().floor() as i32).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.7e}");
        let (mant, exp) = s.split_once('e').unwrap_or((&s, "0"));
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{exp}")
    }
}

/// Shortest representation that parses back to the same value.
pub fn exact_float(v: f64) -> String {
    let mag = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&mag) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

impl Cell {
    fn human(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => human_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => if *b { "yes" } else { "no" }.into(),
            Cell::Empty => "-".into(),
        }
    }

    fn exact(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => exact_float(*v),
            Cell::Text(s) => s.replace(['\t', '\n'], " "),
            Cell::Bool(b) => u8::from(*b).to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn right_aligned(&self) -> bool {
        matches!(self, Cell::Int(_) | Cell::Float(_))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub title: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn titled(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Two-column `key value` table.
    pub fn key_values(rows: impl IntoIterator<Item = (&'static str, Cell)>) -> Self {
        let mut t = Table::new(["quantity", "value"]);
        for (k, v) in rows {
            t.push(vec![Cell::from(k), v]);
        }
        t
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Table => self.render_table(),
            OutputFormat::Plotdata => self.render_plotdata(),
        }
    }

    fn render_table(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::human).collect()).collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        if let Some(t) = &self.title {
            let _ = writeln!(out, "{t}");
        }
        let header: Vec<String> = self
            .columns
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", header.join("  ").trim_end());
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        let _ = writeln!(out, "{}", rule.join("  "));
        for (row, raw) in cells.iter().zip(&self.rows) {
            let line: Vec<String> = row
                .iter()
                .zip(raw)
                .zip(&widths)
                .map(|((s, cell), w)| {
                    if cell.right_aligned() {
                        format!("{s:>w$}")
                    } else {
                        format!("{s:<w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        for n in &self.notes {
            let _ = writeln!(out, "{n}");
        }
        out
    }

    fn render_plotdata(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.title {
            let _ = writeln!(out, "# {t}");
        }
        let _ = writeln!(out, "# {}", self.columns.join("\t"));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::exact).collect();
            let _ = writeln!(out, "{}", line.join("\t"));
        }
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        out
    }
}

/// Renders several tables separated by blank lines.
pub fn render_all(tables: &[Table], format: OutputFormat) -> String {
    tables
        .iter()
        .map(|t| t.render(format))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(["n", "speedup", "note"]).titled("demo");
        t.push(vec![1024u64.into(), 506.178_942_101_f64.into(), "x".into()]);
        t.push(vec![7u64.into(), Cell::Empty, Cell::from(Some(1e-8))]);
        t.note("peak at n=7");
        t
    }

    #[test]
    fn human_floats() {
        assert_eq!(human_float(506.178_942_101), "506.17894");
        assert_eq!(human_float(1.0), "1");
        assert_eq!(human_float(3.273e-8), "3.273e-8");
        assert_eq!(human_float(1e21), "1e21");
        assert_eq!(human_float(0.5), "0.5");
        assert_eq!(human_float(f64::INFINITY), "inf");
        assert_eq!(exact_float(1e21), "1e21");
        assert_eq!(exact_float(3.2730003133364345e-8), "3.2730003133364345e-8");
        assert_eq!(exact_float(0.5), "0.5");
    }

    #[test]
    fn table_and_plotdata_share_values() {
        let t = sample();
        let table = t.render(OutputFormat::Table);
        assert!(table.starts_with("demo\nn     speedup    note\n"));
        assert!(table.contains("506.17894"));
        let plot = t.render(OutputFormat::Plotdata);
        let lines: Vec<&str> = plot.lines().collect();
        assert_eq!(lines[0], "# demo");
        assert_eq!(lines[1], "# n\tspeedup\tnote");
        assert_eq!(lines[2], "1024\t506.178942101\tx");
        assert_eq!(lines[3], "7\t\t1e-8");
        assert_eq!(lines[4], "# peak at n=7");
    }
}
