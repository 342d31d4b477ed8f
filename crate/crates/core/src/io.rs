//! Snapshots, report tables and run manifests.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RigidityError};
use crate::immersion::{DiffScheme, GridDomain, ImmersionField, MetricField, TargetSpace, TargetSpec};

/// Column order of every CSV table.
pub const CSV_COLUMNS: [&str; 11] = [
    "scenario",
    "p",
    "t",
    "epsilon",
    "lhs",
    "osc_term",
    "stretch",
    "bend_scale",
    "constant",
    "residual",
    "covered_fraction",
];

/// Bumped whenever [`CSV_COLUMNS`] changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Serde adapter storing a matrix as a list of rows.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
    }
}

/// On-disk form of an immersion together with its metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub grid: GridDomain,
    pub target: TargetSpec,
    /// Node values in grid order.
    pub values: Vec<Vec<f64>>,
    /// Node grams in grid order, each as a list of rows.
    pub gram: Vec<Vec<Vec<f64>>>,
}

impl FieldSnapshot {
    pub fn capture(u: &ImmersionField, g: &MetricField) -> Result<Self> {
        if u.grid() != g.grid() {
            return Err(RigidityError::InvalidGrid("immersion and metric grids differ".into()));
        }
        Ok(Self {
            grid: *u.grid(),
            target: u.target().to_spec(),
            values: u.values().column_iter().map(|c| c.iter().copied().collect()).collect(),
            gram: g
                .nodes()
                .iter()
                .map(|m| m.gram().row_iter().map(|r| r.iter().copied().collect()).collect())
                .collect(),
        })
    }

    /// Rebuilds the fields; the metric's `λ` and Lipschitz constant are the
    /// tightest values consistent with the stored grams.
    pub fn restore(&self, scheme: DiffScheme) -> Result<(ImmersionField, MetricField)> {
        self.grid.validate()?;
        let target = TargetSpace::from_spec(&self.target, self.grid.d)?;
        let dim = target.ambient_dim();
        if self.values.iter().any(|v| v.len() != dim) {
            return Err(RigidityError::Serialization(format!("node values must have {dim} entries")));
        }
        let values = DMatrix::from_fn(dim, self.values.len(), |i, j| self.values[j][i]);
        let u = ImmersionField::new(self.grid, target, values, scheme)?;
        let d = self.grid.d;
        let grams = self
            .gram
            .iter()
            .map(|rows| {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(RigidityError::Serialization(format!("grams must be {d}x{d}")));
                }
                Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        let loose = MetricField::new(self.grid, grams.clone(), f64::MAX, f64::INFINITY)?;
        let lambda = loose.nodes().iter().map(|m| m.sandwich_constant()).fold(1.0, f64::max);
        let g = MetricField::new(self.grid, grams, lambda, loose.measured_lipschitz())?;
        Ok((u, g))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| RigidityError::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| RigidityError::Serialization(e.to_string()))
    }
}

/// One CSV row; unused columns stay empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CsvRow {
    pub scenario: String,
    pub p: f64,
    pub t: Option<usize>,
    pub epsilon: Option<f64>,
    pub lhs: Option<f64>,
    pub osc_term: Option<f64>,
    pub stretch: Option<f64>,
    pub bend_scale: Option<f64>,
    pub constant: Option<f64>,
    pub residual: Option<f64>,
    pub covered_fraction: Option<f64>,
}

pub fn csv_string(rows: &[CsvRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS).map_err(|e| RigidityError::Serialization(e.to_string()))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| RigidityError::Serialization(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| RigidityError::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| RigidityError::Serialization(e.to_string()))
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<CsvRow>, _>>()
        .map_err(|e| RigidityError::Serialization(e.to_string()))
}

/// Whitespace-separated columns with a commented header line.
pub fn gnuplot_string(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = format!("# {}\n", columns.join(" "));
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Provenance record embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub spec: serde_json::Value,
    pub csv_columns: Vec<String>,
    pub csv_schema_version: u32,
    /// Unix seconds; left empty unless requested so reruns stay byte-identical.
    pub started_at: Option<u64>,
    pub finished_at: Option<u64>,
    pub outputs: Vec<String>,
    pub checks: Vec<CheckResult>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, spec: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            spec,
            csv_columns: CSV_COLUMNS.iter().map(|s| s.to_string()).collect(),
            csv_schema_version: CSV_SCHEMA_VERSION,
            started_at: None,
            finished_at: None,
            outputs: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn push_check(&mut self, check: CheckResult) {
        self.checks.push(check);
    }
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| RigidityError::Serialization(e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| RigidityError::Serialization(e.to_string()))?;
    }
    fs::write(path, text).map_err(|e| RigidityError::Serialization(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| RigidityError::Serialization(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{scenario_generate, Family, MetricSpec, ScenarioSpec};

    #[test]
    fn snapshot_round_trip() {
        let grid = GridDomain::new(2, 1.0, 4).unwrap();
        let spec = ScenarioSpec::new(Family::GraphSurface { epsilon: 0.1 }, grid)
            .with_metric(MetricSpec::RandomSmooth { lambda: 2.0, lipschitz: 1.0 })
            .with_seed(3);
        let sc = scenario_generate(&spec).unwrap();
        let u = sc.field.immersion().unwrap();
        let snap = FieldSnapshot::capture(u, &sc.metric).unwrap();
        let text = snap.to_json().unwrap();
        let back = FieldSnapshot::from_json(&text).unwrap();
        assert_eq!(back, snap);
        let (u2, g2) = back.restore(DiffScheme::Forward).unwrap();
        assert_eq!(u2.values(), u.values());
        for (a, b) in g2.nodes().iter().zip(sc.metric.nodes()) {
            assert_eq!(a.gram(), b.gram());
        }
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["target"]["D"], 3);
        assert_eq!(value["grid"]["n"], 4);
    }

    #[test]
    fn csv_header_is_fixed() {
        let text = csv_string(&[CsvRow { scenario: "s".into(), p: 2.0, t: Some(4), ..Default::default() }]).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(parse_csv(&text).unwrap()[0].t, Some(4));
        assert_eq!(csv_string(&[]).unwrap().trim_end(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn matrix_rows_round_trip() {
        #[derive(Serialize, Deserialize)]
        struct W {
            #[serde(with = "matrix_rows")]
            m: DMatrix<f64>,
        }
        let w = W { m: DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]) };
        let text = serde_json::to_string(&w).unwrap();
        assert_eq!(text, r#"{"m":[[1.0,2.0,3.0],[4.0,5.0,6.0]]}"#);
        assert_eq!(serde_json::from_str::<W>(&text).unwrap().m, w.m);
    }
}
