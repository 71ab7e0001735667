//! Deterministic CSV/JSON artifacts.
//!
//! Numbers are written with 12 significant digits and rows in node order,
//! so identical inputs give byte-identical files.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::PathPolyline;
use crate::mesh::{MeshGraph, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Formats `v` with 12 significant digits, trailing zeros trimmed.
pub fn fmt12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let digits = (11 - exp).max(0) as usize;
        trim(format!("{v:.digits$}"))
    } else {
        format!("{}e{exp}", trim(mant.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" { "0".into() } else { t.to_string() }
    } else {
        s
    }
}

/// A table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(v) => fmt12(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(i) => (*i).into(),
            // round through the 12-digit text so CSV and JSON agree
            Cell::Num(v) if v.is_finite() => fmt12(*v).parse::<f64>().map(Into::into).unwrap_or(serde_json::Value::Null),
            Cell::Num(_) => serde_json::Value::Null,
            Cell::Text(s) => s.clone().into(),
        }
    }
}

/// Column-named rows, written as CSV or as a JSON array of objects.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<String, serde_json::Value> =
                    self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("json");
        s.push('\n');
        s
    }

    pub fn write(&self, format: Format, path: &Path) -> Result<()> {
        let text = match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        };
        write_text(path, &text)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Schema(e.to_string()))?;
    s.push('\n');
    write_text(path, &s)
}

fn coord_columns(dim: usize) -> &'static [&'static str] {
    &["x", "y", "z"][..dim.max(2)]
}

fn node_table(mesh: &MeshGraph, last: &str) -> Table {
    let mut cols = vec!["node"];
    cols.extend_from_slice(coord_columns(mesh.dim()));
    cols.push(last);
    Table::new(&cols)
}

fn node_row(mesh: &MeshGraph, i: usize, last: Cell) -> Vec<Cell> {
    let mut row = vec![Cell::Int(i as i64)];
    let p = mesh.point(i);
    for k in 0..mesh.dim().max(2) {
        row.push(Cell::Num(p.get(k).copied().unwrap_or(0.0)));
    }
    row.push(last);
    row
}

/// `node,x,y,value`.
pub fn field_table(mesh: &MeshGraph, u: &ScalarField) -> Result<Table> {
    u.check_mesh(mesh)?;
    let mut t = node_table(mesh, "value");
    for i in 0..mesh.node_count() {
        t.push(node_row(mesh, i, Cell::Num(u.get(i))));
    }
    Ok(t)
}

/// `node,x,y,mask` with 0/1 entries.
pub fn mask_table(mesh: &MeshGraph, mask: &[bool]) -> Result<Table> {
    if mask.len() != mesh.node_count() {
        return Err(Error::Argument("mask length does not match the mesh".into()));
    }
    let mut t = node_table(mesh, "mask");
    for (i, &m) in mask.iter().enumerate() {
        t.push(node_row(mesh, i, Cell::Int(m as i64)));
    }
    Ok(t)
}

/// `node,x,y,role`.
pub fn nodes_table(mesh: &MeshGraph) -> Table {
    let mut t = node_table(mesh, "role");
    for i in 0..mesh.node_count() {
        t.push(node_row(mesh, i, Cell::Text(mesh.role(i).as_str().into())));
    }
    t
}

/// `u,v,w` for every directed edge.
pub fn edges_table(mesh: &MeshGraph) -> Table {
    let mut t = Table::new(&["u", "v", "w"]);
    for (a, b, w) in mesh.edges() {
        t.push(vec![Cell::Int(a as i64), Cell::Int(b as i64), Cell::Num(w)]);
    }
    t
}

/// `s_euclid,s_finsler,x,y` along a polyline.
pub fn path_table(path: &PathPolyline) -> Table {
    let dim = path.points.first().map_or(2, |p| p.len());
    let mut cols = vec!["s_euclid", "s_finsler"];
    cols.extend_from_slice(coord_columns(dim));
    let mut t = Table::new(&cols);
    for (k, p) in path.points.iter().enumerate() {
        let mut row = vec![Cell::Num(path.s_euclid[k]), Cell::Num(path.s_finsler[k])];
        for j in 0..dim.max(2) {
            row.push(Cell::Num(p.get(j).copied().unwrap_or(0.0)));
        }
        t.push(row);
    }
    t
}

/// Reads a `node,...,value` CSV onto `mesh`; every node must appear once.
pub fn read_field_csv(mesh: &MeshGraph, path: &Path) -> Result<ScalarField> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(io)?;
    let mut r = csv::Reader::from_reader(file);
    let schema = |e: csv::Error| Error::Schema(format!("{}: {e}", path.display()));
    let headers = r.headers().map_err(schema)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("{}: missing column `{name}`", path.display())))
    };
    let (ni, vi) = (col("node")?, col("value")?);
    let mut values = vec![f64::NAN; mesh.node_count()];
    let mut seen = vec![false; mesh.node_count()];
    for rec in r.records() {
        let rec = rec.map_err(schema)?;
        let parse_err = |what: &str| Error::Schema(format!("{}: bad {what} in row {:?}", path.display(), rec));
        let node: usize = rec[ni].trim().parse().map_err(|_| parse_err("node"))?;
        let v: f64 = rec[vi].trim().parse().map_err(|_| parse_err("value"))?;
        if node >= values.len() || seen[node] {
            return Err(parse_err("node index"));
        }
        seen[node] = true;
        values[node] = v;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Schema(format!("{}: node {missing} has no value", path.display())));
    }
    ScalarField::new(mesh, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{ConvexField, Shape};
    use crate::domain::{build_domain, DomainSpec};
    use crate::mesh::{discretize, Stencil};
    use std::sync::Arc;

    fn tiny() -> MeshGraph {
        let d = Arc::new(build_domain(&DomainSpec::rectangle([0.0, 0.0], [1.0, 1.0])).unwrap());
        let f = Arc::new(ConvexField::constant(Shape::ball(1.0), 2).unwrap());
        discretize(d, f, 0.5, Stencil::Eight).unwrap()
    }

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt12(-0.000123456789012345), "-0.000123456789012");
        assert_eq!(fmt12(1.5e-9), "1.5e-9");
        assert_eq!(fmt12(2.0f64.sqrt() * 1e15), "1.41421356237e15");
        assert_eq!(fmt12(-1e-300 * 1e-300), "0");
    }

    #[test]
    fn field_csv_is_stable() {
        let g = tiny();
        let u = ScalarField::from_fn(&g, |p| p[0] + 2.0 * p[1]);
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        field_table(&g, &u).unwrap().write(Format::Csv, &a).unwrap();
        field_table(&g, &u).unwrap().write(Format::Csv, &b).unwrap();
        let text = fs::read_to_string(&a).unwrap();
        assert_eq!(text, fs::read_to_string(&b).unwrap());
        assert!(text.starts_with("node,x,y,value\n"));
        assert_eq!(text.lines().count(), g.node_count() + 1);
        let back = read_field_csv(&g, &a).unwrap();
        assert_eq!(back.values(), u.values());
    }

    #[test]
    fn four_rows() {
        let mut t = Table::new(&["node", "x", "y", "value"]);
        for i in 0..4 {
            t.push(vec![Cell::Int(i), Cell::Num((i % 2) as f64), Cell::Num((i / 2) as f64), Cell::Num(0.5)]);
        }
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(csv.lines().nth(4), Some("3,1,1,0.5"));
        let json: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(json.as_array().unwrap().len(), 4);
        assert_eq!(json[3]["value"], 0.5);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let g = tiny();
        let e = read_field_csv(&g, Path::new("/nonexistent/u.csv")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/u.csv"));
    }
}
