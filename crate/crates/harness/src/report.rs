//! `report.json`, CSV tables and snapshot files.
//!
//! Every float is written with 17 significant digits so that parsing the
//! report reproduces the in-memory value exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use homog_core::simulate::{BoxGrid, Snapshot};
use serde_json::{json, Map, Value};

use crate::pipeline::{CellStage, ConvergenceTable, OracleComparison, ResidualRow};
use crate::{HarnessError, RunConfig};

/// A float as a JSON number with 17 significant digits; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(format!("{x:.16e}").parse().expect("formatted float is a JSON number"))
    } else {
        Value::String(format!("{x}"))
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Report sections in a fixed order.
#[derive(Debug, Clone, Default)]
pub struct Report {
    fields: Map<String, Value>,
}

impl Report {
    pub fn new(cfg: &RunConfig) -> Self {
        let mut fields = Map::new();
        fields.insert("config_digest".into(), Value::String(cfg.digest()));
        fields.insert("name".into(), Value::String(cfg.name.clone()));
        fields.insert("alpha".into(), num(cfg.alpha));
        Self { fields }
    }

    pub fn insert(&mut self, key: &str, value: Value) {
        self.fields.insert(key.into(), value);
    }

    pub fn cell(&mut self, stage: &CellStage) {
        let sch = &stage.set.schedule;
        self.insert(
            "schedule",
            json!({"k": sch.k, "gammas": nums(&sch.gammas), "exceptional": sch.exceptional}),
        );
        self.insert(
            "kernel",
            json!({
                "mass": num(stage.kernel.mass),
                "first_moment": nums(&stage.kernel.first_moment),
                "second_moment": nums(&stage.kernel.second_moment),
                "support_radius": num(stage.kernel.support_radius),
            }),
        );
        let b: Vec<Value> = stage.drift.means.iter().map(|b| nums(b)).collect();
        self.insert("drift", json!({"b": b, "b0_periodic_amplitude": nums(&stage.drift.periodic_amplitude())}));
        let e = &stage.effective;
        self.insert(
            "effective",
            json!({
                "theta": nums(&e.theta),
                "theta_sym": nums(&e.theta_sym),
                "theta_sym_eigenvalues": nums(&e.theta_sym_eigenvalues),
                "lambda_min": num(e.lambda_min),
                "lambda_max": num(e.lambda_max),
            }),
        );
        self.insert(
            "solvability",
            json!({"max_defect": num(stage.set.max_defect()), "max_residual": num(stage.set.max_residual()), "solves": stage.set.records.len()}),
        );
    }

    pub fn convergence(&mut self, table: &ConvergenceTable) {
        let rows: Vec<Value> = table
            .rows
            .iter()
            .map(|r| {
                json!({
                    "epsilon": num(r.eps),
                    "e_full": num(r.e_full),
                    "e_partial": num(r.e_partial),
                    "steps": r.steps,
                    "dt": num(r.dt),
                    "max_sup_increase": num(r.max_sup_increase),
                    "min_value": num(r.min_value),
                })
            })
            .collect();
        self.insert("convergence", Value::Array(rows));
    }

    pub fn residual(&mut self, rows: &[ResidualRow]) {
        let rows: Vec<Value> = rows
            .iter()
            .map(|r| json!({"epsilon": num(r.eps), "max": num(r.report.max), "samples": r.report.samples.iter().map(|(t, v)| nums(&[*t, *v])).collect::<Vec<_>>()}))
            .collect();
        self.insert("ansatz_residual", Value::Array(rows));
    }

    pub fn oracle(&mut self, cmp: &OracleComparison) {
        self.insert(
            "oracle_deviation",
            json!({
                "p": num(cmp.p), "chi1": num(cmp.chi1), "f1": num(cmp.f1),
                "theta": num(cmp.theta), "big_theta": num(cmp.big_theta), "b0": num(cmp.b0),
            }),
        );
    }

    pub fn to_value(&self, timestamp: Option<u64>) -> Value {
        let mut out = self.fields.clone();
        out.insert("timestamp".into(), timestamp.map_or(Value::Null, |t| Value::from(t)));
        Value::Object(out)
    }

    /// Writes `report.json` with the current Unix time in `timestamp`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir)?;
        let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).ok();
        let text = serde_json::to_string_pretty(&self.to_value(now))?;
        fs::write(dir.join("report.json"), text + "\n")?;
        Ok(())
    }
}

/// `forcing.csv`, `drift.csv` and `theta.csv`.
pub fn write_cell_tables(dir: &Path, stage: &CellStage) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let set = &stage.set;
    let d = set.dim();
    let levels = set.schedule.levels();

    let mut forcing = String::from("s");
    for j in 1..=levels {
        for c in 0..d {
            write!(forcing, ",F{j}_{c}").unwrap();
        }
    }
    forcing.push('\n');
    for smp in &set.per_sample {
        forcing.push_str(&fmt(smp.s));
        for f in &smp.forcing {
            for v in f {
                write!(forcing, ",{}", fmt(*v)).unwrap();
            }
        }
        forcing.push('\n');
    }
    fs::write(dir.join("forcing.csv"), forcing)?;

    let mut drift = String::from("s");
    for c in 0..d {
        write!(drift, ",beta0_{c},B0_{c}").unwrap();
    }
    drift.push('\n');
    for (m, smp) in set.per_sample.iter().enumerate() {
        drift.push_str(&fmt(smp.s));
        for c in 0..d {
            let beta = stage.drift.oscillations[0][c][m];
            let big_b = stage.drift.antiderivatives[0][c].eval(smp.s);
            write!(drift, ",{},{}", fmt(beta), fmt(big_b)).unwrap();
        }
        drift.push('\n');
    }
    fs::write(dir.join("drift.csv"), drift)?;

    let mut theta = String::from("s");
    for a in 0..d {
        for b in 0..d {
            write!(theta, ",theta_{a}{b}").unwrap();
        }
    }
    theta.push('\n');
    for smp in &set.per_sample {
        theta.push_str(&fmt(smp.s));
        for v in &smp.theta {
            write!(theta, ",{}", fmt(*v)).unwrap();
        }
        theta.push('\n');
    }
    fs::write(dir.join("theta.csv"), theta)?;
    Ok(())
}

/// One CSV per field and s-sample under `correctors/`: `p`, each `chi_j` and `kappa`.
pub fn write_corrector_fields(dir: &Path, stage: &CellStage) -> Result<(), HarnessError> {
    let dir = dir.join("correctors");
    fs::create_dir_all(&dir)?;
    let grid = stage.set.grid;
    for (m, smp) in stage.set.per_sample.iter().enumerate() {
        let mut fields = vec![("p".to_string(), &smp.p)];
        fields.extend(smp.chis.iter().enumerate().map(|(j, chi)| (format!("chi{}", j + 1), chi)));
        fields.push(("kappa".to_string(), &smp.kappa));
        for (name, field) in fields {
            let mut csv = String::from(if grid.dim == 1 { "xi" } else { "xi0,xi1" });
            for c in 0..field.components() {
                write!(csv, ",{name}_{c}").unwrap();
            }
            csv.push('\n');
            for i in 0..grid.len() {
                let x = grid.point(i);
                csv.push_str(&fmt(x[0]));
                if grid.dim == 2 {
                    write!(csv, ",{}", fmt(x[1])).unwrap();
                }
                for c in 0..field.components() {
                    write!(csv, ",{}", fmt(field.component(c)[i])).unwrap();
                }
                csv.push('\n');
            }
            fs::write(dir.join(format!("{name}_s{m:03}.csv")), csv)?;
        }
    }
    Ok(())
}

/// `convergence.csv`, rows by decreasing ε.
pub fn convergence_csv(table: &ConvergenceTable) -> String {
    let mut out = String::from("epsilon,e_full,e_partial,runtime_s\n");
    for r in &table.rows {
        writeln!(out, "{},{},{},{:.3}", fmt(r.eps), fmt(r.e_full), fmt(r.e_partial), r.runtime_s).unwrap();
    }
    out
}

pub fn write_convergence(dir: &Path, table: &ConvergenceTable) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("convergence.csv"), convergence_csv(table))?;
    Ok(())
}

/// `<stem>.csv` with `(x, value)` rows, `<stem>.f64` little-endian values and `<stem>.json` metadata.
pub fn write_snapshot(dir: &Path, stem: &str, grid: BoxGrid, snap: &Snapshot) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut csv = String::from("x,value\n");
    for (x, v) in grid.nodes().iter().zip(&snap.values) {
        writeln!(csv, "{},{}", fmt(*x), fmt(*v)).unwrap();
    }
    fs::write(dir.join(format!("{stem}.csv")), csv)?;
    let bytes: Vec<u8> = snap.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(dir.join(format!("{stem}.f64")), bytes)?;
    let meta = json!({
        "t": num(snap.t),
        "points": grid.len(),
        "length": grid.length,
        "epsilon": num(grid.epsilon()),
        "n_cell": grid.n_cell,
        "spacing": num(grid.spacing()),
        "x0": num(grid.node(0)),
        "dtype": "f64-le",
    });
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`].
pub fn read_snapshot_binary(dir: &Path, stem: &str) -> Result<Vec<f64>, HarnessError> {
    let bytes = fs::read(dir.join(format!("{stem}.f64")))?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}
