//! CSV reports. Floats are written with 17 significant digits so they
//! round-trip exactly.

use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};

pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

macro_rules! cell_from {
    ($($t:ty => $v:ident),*) => {
        $(impl From<$t> for Cell {
            fn from(x: $t) -> Self {
                Cell::$v(x.into())
            }
        })*
    };
}

cell_from!(i64 => Int, u64 => Int, f64 => Float, String => Text, &str => Text, bool => Flag);

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i128)
    }
}

/// Space-separated tuple, or empty.
pub fn tuple(k: &Option<Vec<i64>>) -> Cell {
    Cell::Text(
        k.as_ref()
            .map(|v| v.iter().map(i64::to_string).collect::<Vec<_>>().join(" "))
            .unwrap_or_default(),
    )
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row.iter().map(Cell::render).collect());
    }

    /// Writes the header even when there are no rows.
    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        let path = dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, f64::MIN_POSITIVE] {
            let s = Cell::Float(x).render();
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn header_is_written_for_empty_tables() {
        let dir = std::env::temp_dir().join(format!("nls4-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Table::new(&["a", "b"]).write(&dir, "t.csv").unwrap();
        assert_eq!(std::fs::read_to_string(dir.join("t.csv")).unwrap(), "a,b\n");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
