//! Tabular output in CSV and JSON.
//!
//! Both formats carry the same rows. CSV starts with `#` metadata lines
//! (version, command, parameters, config, seed); JSON puts the same data
//! under `meta`. Numbers use fixed formatting so a given config and seed
//! always yields byte-identical files.

use serde_json::{json, Map, Value};

use crate::config::ScenarioConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    /// Six decimals: levels, angles, losses.
    Fixed(f64),
    /// Fifteen decimals: period fractions and state phases that must
    /// survive a round trip through the schedule export.
    Precise(f64),
    /// Scientific notation with fifteen digits: times in seconds.
    Sci(f64),
}

impl Cell {
    pub fn render(&self) -> String {
        let s = match *self {
            Cell::Int(i) => return i.to_string(),
            Cell::Fixed(x) => format!("{x:.6}"),
            Cell::Precise(x) => format!("{x:.15}"),
            Cell::Sci(x) => format!("{x:.15e}"),
        };
        // "-0.000000" and friends carry no information beyond "0.000000"
        if s.starts_with('-') && s[1..].chars().all(|c| matches!(c, '0' | '.' | 'e')) {
            s[1..].to_string()
        } else {
            s
        }
    }

    fn to_json(self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            _ => self
                .render()
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    fn write_csv(&self, out: &mut String) {
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "columns": self.columns,
            "rows": self
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(|c| c.to_json()).collect()))
                .collect::<Vec<_>>(),
        })
    }
}

/// Everything one command emits.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub params: Map<String, Value>,
    pub config: ScenarioConfig,
    pub table: Table,
    /// Extra named tables appended after the main one.
    pub sections: Vec<(&'static str, Table)>,
}

impl Report {
    fn meta(&self) -> Value {
        json!({
            "version": VERSION,
            "command": self.command,
            "params": self.params,
            "config": self.config,
            "seed": self.config.seed,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# tma {VERSION}\n"));
        out.push_str(&format!("# command: {}\n", self.command));
        out.push_str(&format!(
            "# params: {}\n",
            Value::Object(self.params.clone())
        ));
        out.push_str(&format!(
            "# config: {}\n",
            serde_json::to_string(&self.config).expect("config serializes")
        ));
        out.push_str(&format!("# seed: {}\n", self.config.seed));
        self.table.write_csv(&mut out);
        for (name, table) in &self.sections {
            out.push_str(&format!("# section: {name}\n"));
            table.write_csv(&mut out);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let main = self.table.to_json();
        let mut doc = Map::new();
        doc.insert("meta".into(), self.meta());
        doc.insert("columns".into(), main["columns"].clone());
        doc.insert("rows".into(), main["rows"].clone());
        for (name, table) in &self.sections {
            doc.insert((*name).into(), table.to_json());
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
        s.push('\n');
        s
    }
}
