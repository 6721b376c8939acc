//! Comma-separated output with fixed number formatting.
//!
//! Reals are written in scientific notation with nine significant digits
//! (`{:.8e}`), integers in decimal and flags as `true`/`false`. Reading a
//! table back yields exactly the values that were written.

use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Count(usize),
    Flag(bool),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Real(v) => write!(out, "{v:.8e}"),
            Cell::Count(n) => write!(out, "{n}"),
            Cell::Flag(b) => write!(out, "{b}"),
        }
        .expect("writing to a String cannot fail");
    }
}

/// Rounds to the nine significant digits a table keeps.
pub fn quantize(v: f64) -> f64 {
    format!("{v:.8e}").parse().expect("formatted float parses")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }

    /// Parses a table written by [`Table::to_csv`]. Each cell is typed by
    /// its text: `true`/`false`, a plain integer, or a real.
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or("empty table")?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(parse_cell)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| format!("row {}: {e}", i + 1))?;
            if row.len() != header.len() {
                return Err(format!("row {} has {} cells, header has {}", i + 1, row.len(), header.len()));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn parse_cell(s: &str) -> Result<Cell, String> {
    match s {
        "true" => Ok(Cell::Flag(true)),
        "false" => Ok(Cell::Flag(false)),
        _ if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) => {
            s.parse().map(Cell::Count).map_err(|e| format!("`{s}`: {e}"))
        }
        _ => s.parse().map(Cell::Real).map_err(|e| format!("`{s}`: {e}")),
    }
}
