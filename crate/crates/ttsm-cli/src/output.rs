//! Output writers. Every file starts with its schema version and the config
//! hash: CSV as `#`-prefixed comment lines before the header row, JSON as
//! top-level fields.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use ttsm::reference::{Spectrum, TimeSeries};
use ttsm::studies::ConvergenceTable;
use ttsm::TorusField;

use crate::config::SCHEMA_VERSION;

pub struct OutputWriter {
    dir: PathBuf,
    config_hash: String,
    config_json: Value,
}

impl OutputWriter {
    pub fn new(dir: &str, config_hash: String, config_json: Value) -> Result<Self, String> {
        let dir = PathBuf::from(dir);
        fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        Ok(Self {
            dir,
            config_hash,
            config_json,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn csv_header(&self, schema: &str) -> String {
        format!(
            "# schema: {SCHEMA_VERSION}.{schema}\n# config_hash: {}\n",
            self.config_hash
        )
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), String> {
        let path = self.path(name);
        let mut file =
            fs::File::create(&path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        file.write_all(contents.as_bytes())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))
    }

    /// JSON with schema, config hash and the full resolved config embedded.
    pub fn write_json<T: Serialize>(&self, name: &str, schema: &str, payload: &T) -> Result<(), String> {
        let mut value = serde_json::to_value(payload).map_err(|e| e.to_string())?;
        let obj = value
            .as_object_mut()
            .ok_or("json payload must be an object")?;
        obj.insert("schema".into(), json!(format!("{SCHEMA_VERSION}.{schema}")));
        obj.insert("config_hash".into(), json!(self.config_hash));
        obj.insert("config".into(), self.config_json.clone());
        let text = serde_json::to_string_pretty(&value).map_err(|e| e.to_string())?;
        self.write(name, &(text + "\n"))
    }

    /// Field CSV: node indices per axis, node angles, state components.
    pub fn write_field(&self, name: &str, field: &TorusField) -> Result<(), String> {
        let grid = field.grid();
        let k = grid.num_axes();
        let n = field.state_dim();
        let mut out = self.csv_header("field");
        let mut header: Vec<String> = (1..=k).map(|a| format!("l{a}")).collect();
        header.extend((1..=k).map(|a| format!("theta{a}")));
        header.extend((0..n).map(|c| format!("q{c}")));
        out.push_str(&header.join(","));
        out.push('\n');
        let mut multi = vec![0usize; k];
        let mut angles = vec![0.0; k];
        for flat in 0..grid.total_nodes() {
            grid.multi_node(flat, &mut multi);
            grid.angles_of(&multi, &mut angles);
            let mut row: Vec<String> = multi.iter().map(|l| l.to_string()).collect();
            row.extend(angles.iter().map(|t| t.to_string()));
            row.extend(field.node_state(flat).iter().map(|v| v.to_string()));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write(name, &out)
    }

    /// Time-series CSV: `t, q_0..q_{n-1}`.
    pub fn write_series(&self, name: &str, series: &TimeSeries) -> Result<(), String> {
        let n = series.state_dim();
        let mut out = self.csv_header("series");
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|c| format!("q{c}")));
        out.push_str(&header.join(","));
        out.push('\n');
        for (i, &t) in series.times().iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend((0..n).map(|c| series.states()[[i, c]].to_string()));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write(name, &out)
    }

    /// Spectrum CSV: `freq, amplitude`.
    pub fn write_spectrum(&self, name: &str, spectrum: &Spectrum) -> Result<(), String> {
        let mut out = self.csv_header("spectrum");
        out.push_str("freq,amplitude\n");
        for (f, a) in spectrum.frequencies.iter().zip(&spectrum.amplitudes) {
            out.push_str(&format!("{f},{a}\n"));
        }
        self.write(name, &out)
    }

    /// Convergence CSV: `grid, error`.
    pub fn write_convergence(&self, name: &str, table: &ConvergenceTable) -> Result<(), String> {
        let mut out = self.csv_header("convergence");
        out.push_str("grid,error\n");
        for (g, e) in table.grid_sizes.iter().zip(&table.errors) {
            out.push_str(&format!("{g},{e}\n"));
        }
        self.write(name, &out)
    }
}
