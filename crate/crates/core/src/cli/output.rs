//! Run artifacts: CSV tables printed with 17 significant digits, JSON
//! sidecars and the run report.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::CliError;
use crate::model::ModelCoeffs;
use crate::spectral::Grid;

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Cell of a CSV row.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    F(f64),
    Opt(Option<f64>),
    U(usize),
    B(bool),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::F(x) => fmt_f64(x),
            Cell::Opt(x) => fmt_opt(x),
            Cell::U(n) => n.to_string(),
            Cell::B(b) => u8::from(b).to_string(),
        }
    }
}

/// Output directory that records every file it writes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative paths written so far, in order.
    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn target(&mut self, name: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(path)
    }

    pub fn write_csv<R>(&mut self, name: &str, header: &[&str], rows: R) -> Result<(), CliError>
    where
        R: IntoIterator<Item = Vec<Cell>>,
    {
        let path = self.target(name)?;
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row.into_iter().map(Cell::render)).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.target(name)?;
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Writes `<stem>.csv` (x, zeta, v_beta, u) and the `<stem>.json` sidecar.
    pub fn write_profile(&mut self, stem: &str, profile: &Profile) -> Result<(), CliError> {
        let grid = Grid::new(profile.meta.half_length, profile.meta.n_modes).map_err(|e| CliError::Io(e.to_string()))?;
        let rows = (0..grid.n()).map(|j| {
            vec![Cell::F(grid.node(j)), Cell::F(profile.zeta[j]), Cell::F(profile.v_beta[j]), Cell::F(profile.u[j])]
        });
        self.write_csv(&format!("{stem}.csv"), &["x", "zeta", "v_beta", "u"], rows)?;
        self.write_json(&format!("{stem}.json"), &profile.meta)
    }
}

/// Sidecar of a profile file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileMeta {
    /// `solitary`, `exact` or `state`.
    pub source: String,
    pub half_length: f64,
    pub n_modes: usize,
    pub gamma: f64,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub beta: f64,
    pub c_s: Option<f64>,
    pub t: f64,
    pub residual: Option<f64>,
    pub wave_type: Option<String>,
    pub units: String,
}

impl ProfileMeta {
    pub fn new(source: &str, grid: &Grid, k: &ModelCoeffs, c_s: Option<f64>, t: f64) -> Self {
        Self {
            source: source.into(),
            half_length: grid.half_length(),
            n_modes: grid.n(),
            gamma: k.gamma,
            delta: k.delta,
            a: k.a,
            b: k.b,
            c: k.c,
            d: k.d,
            beta: k.beta,
            c_s,
            t,
            residual: None,
            wave_type: None,
            units: "nondimensional".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub meta: ProfileMeta,
    pub zeta: Vec<f64>,
    pub v_beta: Vec<f64>,
    pub u: Vec<f64>,
}

/// Loads a profile CSV and its sidecar (same stem, `.json`).
pub fn read_profile(csv_path: &Path) -> Result<Profile, CliError> {
    let side = csv_path.with_extension("json");
    let text = fs::read_to_string(&side)
        .map_err(|e| CliError::Config(format!("profile sidecar {}: {e}", side.display())))?;
    let meta: ProfileMeta =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("profile sidecar {}: {e}", side.display())))?;
    let bad = |m: String| CliError::Config(format!("profile {}: {m}", csv_path.display()));
    let mut r = csv::Reader::from_path(csv_path).map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
    if header != ["x", "zeta", "v_beta", "u"] {
        return Err(bad(format!("unexpected columns {header:?}")));
    }
    let grid = Grid::new(meta.half_length, meta.n_modes).map_err(|e| bad(e.to_string()))?;
    let (mut zeta, mut v_beta, mut u) = (Vec::new(), Vec::new(), Vec::new());
    for (j, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("row {}: {e}", j + 1)))?;
        if j >= grid.n() {
            return Err(bad(format!("more rows than n_modes = {}", grid.n())));
        }
        if (vals[0] - grid.node(j)).abs() > 1e-9 * grid.half_length() {
            return Err(bad(format!("row {} has x = {} but the grid node is {}", j + 1, vals[0], grid.node(j))));
        }
        zeta.push(vals[1]);
        v_beta.push(vals[2]);
        u.push(vals[3]);
    }
    if zeta.len() != grid.n() {
        return Err(bad(format!("{} rows for n_modes = {}", zeta.len(), grid.n())));
    }
    Ok(Profile { meta, zeta, v_beta, u })
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    /// Resolved configuration; `config.json` holds the same document.
    pub config: ExperimentConfig,
    pub coeffs: ModelCoeffs,
    pub c_sound: f64,
    pub classification: serde_json::Value,
    pub summary: serde_json::Value,
    pub warnings: Vec<String>,
    pub conventions: Vec<String>,
    pub files: Vec<String>,
    pub steps: Option<usize>,
    pub wall_seconds: f64,
    pub error: Option<String>,
    pub exit_code: i32,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [std::f64::consts::PI, -1e-300, 0.1 + 0.2, 12345.678901234567] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn profile_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(10.0, 16).unwrap();
        let k = crate::model::coeffs_from_quadruple(-1.0 / 3.0, 0.5, -0.25, 0.5, 0.5, 0.9, false).unwrap();
        let zeta: Vec<f64> = grid.nodes().iter().map(|x| (0.3 * x).sin() / 3.0).collect();
        let p = Profile {
            meta: ProfileMeta::new("solitary", &grid, &k, Some(1.1), 0.0),
            v_beta: zeta.iter().map(|z| z * 0.7).collect(),
            u: zeta.iter().map(|z| z * 1.3).collect(),
            zeta,
        };
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_profile("profile", &p).unwrap();
        assert_eq!(out.files(), ["profile.csv", "profile.json"]);
        let back = read_profile(&dir.path().join("profile.csv")).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn mismatched_grid_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(10.0, 8).unwrap();
        let k = crate::model::coeffs_from_quadruple(-1.0 / 3.0, 0.5, -0.25, 0.5, 0.5, 0.9, false).unwrap();
        let mut meta = ProfileMeta::new("state", &grid, &k, None, 0.0);
        let p = Profile { meta: meta.clone(), zeta: vec![0.0; 8], v_beta: vec![0.0; 8], u: vec![0.0; 8] };
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_profile("p", &p).unwrap();
        meta.n_modes = 16;
        out.write_json("p.json", &meta).unwrap();
        assert!(matches!(read_profile(&dir.path().join("p.csv")), Err(CliError::Config(_))));
    }
}
