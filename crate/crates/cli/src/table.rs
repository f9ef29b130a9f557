//! Row-oriented output rendered to CSV or JSON in memory.

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// Undefined quantity (eta_W before any work, closed forms outside their range).
    Missing,
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Twelve significant digits, scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.11e}")
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| (*c).to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        // writing into a Vec cannot fail
        w.write_record(&self.columns).expect("csv header");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(v) => format_float(*v),
                Cell::Missing => String::new(),
                Cell::Text(s) => s.clone(),
            }))
            .expect("csv row");
        }
        w.into_inner().expect("csv flush")
    }

    /// Array of objects keyed by column name. Numbers keep the CSV text so
    /// both formats carry the same digits; NaN and missing become null.
    pub fn to_json(&self) -> Vec<u8> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (name, c) in self.columns.iter().zip(row) {
                    let v = match c {
                        Cell::Num(v) => format_float(*v)
                            .parse::<f64>()
                            .ok()
                            .and_then(Number::from_f64)
                            .map_or(Value::Null, Value::Number),
                        Cell::Missing => Value::Null,
                        Cell::Text(s) => Value::String(s.clone()),
                    };
                    obj.insert(name.clone(), v);
                }
                Value::Object(obj)
            })
            .collect();
        let mut out = serde_json::to_vec_pretty(&Value::Array(rows)).expect("json");
        out.push(b'\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_has_twelve_significant_digits() {
        assert_eq!(format_float(150.0), "1.50000000000e2");
        assert_eq!(format_float(-0.000123456789012345), "-1.23456789012e-4");
    }

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new(&["t", "eta_W", "label"]);
        t.push(vec![0.0.into(), None.into(), "ud".into()]);
        t.push(vec![0.5.into(), Some(0.25).into(), "od".into()]);
        let csv = String::from_utf8(t.to_csv()).unwrap();
        assert_eq!(
            csv,
            "t,eta_W,label\n0.00000000000e0,,ud\n5.00000000000e-1,2.50000000000e-1,od\n"
        );
        let json: Value = serde_json::from_slice(&t.to_json()).unwrap();
        assert_eq!(json[0]["eta_W"], Value::Null);
        assert_eq!(json[1]["eta_W"], 0.25);
        assert_eq!(json[1]["label"], "od");
    }
}
