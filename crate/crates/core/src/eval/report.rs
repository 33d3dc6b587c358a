use std::fmt::Write as _;

/// A report table rendered two ways: aligned plain text for reading and one
/// `key=value` record per row for scripts.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| self.rows.iter().map(|r| r[c].len()).chain([self.columns[c].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:>w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        let _ = writeln!(out, "# {}", self.name);
        line(&mut out, &self.columns);
        for r in &self.rows {
            line(&mut out, r);
        }
        out
    }

    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let fields: Vec<String> = self.columns.iter().zip(r).map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(out, "table={} {}", self.name, fields.join(" "));
        }
        out
    }
}

/// Fixed-precision number for report cells.
pub fn cell(x: f64, digits: usize) -> String {
    format!("{x:.digits$}")
}
