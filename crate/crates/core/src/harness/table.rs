use std::fmt::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use super::ExperimentConfig;

/// Provenance of a column's values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    /// Integers computed in exact arithmetic.
    ExactInteger,
    /// Dyadic rationals computed exactly and printed as their `f64` value.
    ExactDyadic,
    /// Floating-point results.
    Float,
    Boolean,
    Label,
}

impl ColumnKind {
    fn name(self) -> &'static str {
        match self {
            ColumnKind::ExactInteger => "exact-integer",
            ColumnKind::ExactDyadic => "exact-dyadic",
            ColumnKind::Float => "float",
            ColumnKind::Boolean => "boolean",
            ColumnKind::Label => "label",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i128),
    Num(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => match i64::try_from(*v) {
                Ok(i) => Value::from(i),
                Err(_) => Value::from(v.to_string()),
            },
            Cell::Num(v) if v.is_finite() => Value::from(*v),
            Cell::Num(v) => Value::from(v.to_string()),
            Cell::Bool(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
        }
    }
}

macro_rules! cell_from {
    ($($t:ty => $v:ident),*) => {$(
        impl From<$t> for Cell {
            fn from(x: $t) -> Self {
                Cell::$v(x.into())
            }
        }
    )*};
}

cell_from!(i64 => Int, u32 => Int, u64 => Int, i128 => Int, f64 => Num, bool => Bool, String => Text, &str => Text);

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<u128> for Cell {
    fn from(x: u128) -> Self {
        i128::try_from(x).map(Cell::Int).unwrap_or_else(|_| Cell::Text(x.to_string()))
    }
}

/// Rows with typed, provenance-tagged columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    columns: Vec<(String, ColumnKind)>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[(&str, ColumnKind)]) -> Self {
        Table {
            columns: columns.iter().map(|(n, k)| (n.to_string(), *k)).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    for ((name, _), c) in self.columns.iter().zip(r) {
                        m.insert(name.clone(), c.json());
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }

    fn provenance(&self) -> Value {
        let mut m = Map::new();
        for (name, kind) in &self.columns {
            m.insert(name.clone(), Value::from(kind.name()));
        }
        Value::Object(m)
    }

    /// `#` header lines with experiment, digest, seed and column kinds, then
    /// a CSV header row and the data.
    pub fn to_csv(&self, cfg: &ExperimentConfig, notes: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# experiment: {}", cfg.experiment);
        let _ = writeln!(out, "# config-digest: sha256:{}", cfg.digest());
        let _ = writeln!(out, "# seed: {}", cfg.seed);
        let kinds: Vec<String> = self.columns.iter().map(|(n, k)| format!("{n}={}", k.name())).collect();
        let _ = writeln!(out, "# columns: {}", kinds.join(" "));
        for note in notes {
            let _ = writeln!(out, "# {note}");
        }
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        let _ = writeln!(out, "{}", names.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// `{"experiment", "config_digest", "seed", "config", "columns", "rows", "result"}`;
/// `columns`/`rows` only with a table, `result` only with extra data.
pub fn json_envelope(cfg: &ExperimentConfig, table: Option<&Table>, result: Option<Value>) -> String {
    let mut m = Map::new();
    m.insert("experiment".into(), Value::from(cfg.experiment.name()));
    m.insert("config_digest".into(), Value::from(format!("sha256:{}", cfg.digest())));
    m.insert("seed".into(), Value::from(cfg.seed));
    m.insert("config".into(), cfg.canonical());
    if let Some(t) = table {
        m.insert("columns".into(), t.provenance());
        m.insert("rows".into(), t.rows_json());
    }
    if let Some(r) = result {
        m.insert("result".into(), r);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("json renders");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentKind;

    #[test]
    fn csv_header_documents_columns() {
        let cfg = ExperimentConfig::new(ExperimentKind::Glukhov);
        let mut t = Table::new(&[("n", ColumnKind::ExactInteger), ("v", ColumnKind::Float), ("s", ColumnKind::Label)]);
        t.push(vec![3u32.into(), 0.5.into(), "a,b".into()]);
        let csv = t.to_csv(&cfg, &[]);
        assert!(csv.contains("# columns: n=exact-integer v=float s=label\n"));
        assert!(csv.contains(&format!("sha256:{}", cfg.digest())));
        assert!(csv.ends_with("n,v,s\n3,0.5,\"a,b\"\n"));
    }

    #[test]
    fn huge_integers_survive_json() {
        assert_eq!(Cell::from(u128::MAX).json(), Value::from(u128::MAX.to_string()));
        assert_eq!(Cell::from(f64::INFINITY).json(), Value::from("inf"));
    }
}
