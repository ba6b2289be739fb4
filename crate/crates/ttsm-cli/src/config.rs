//! Resolved run configuration: defaults, file values and flag overrides
//! merged, validated, and hashed so every output file can embed the hash.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ttsm::problems::{DuffingParams, KleinGordonParams, LinearOscillatorParams};
use ttsm::solver::LinearSolver;
use ttsm::{expr, NewtonConfig, TtsmError};

pub const SCHEMA_VERSION: &str = "ttsm.v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Linear,
    Duffing,
    Kg,
    ThreeTone,
}

impl ProblemKind {
    pub fn parse(name: &str) -> Result<Self, String> {
        match name.to_ascii_lowercase().as_str() {
            "linear" => Ok(Self::Linear),
            "duffing" => Ok(Self::Duffing),
            "kg" | "klein-gordon" | "klein_gordon" => Ok(Self::Kg),
            "three_tone" | "three-tone" => Ok(Self::ThreeTone),
            other => Err(format!(
                "unknown problem '{other}' (expected linear, duffing, kg or three_tone)"
            )),
        }
    }

    pub fn default_omegas(&self) -> Vec<String> {
        match self {
            Self::ThreeTone => vec!["1".into(), "sqrt(2)".into(), "sqrt(3)".into()],
            _ => vec!["1".into(), "sqrt(2)".into()],
        }
    }

    pub fn default_grid(&self) -> Vec<usize> {
        match self {
            Self::Kg => vec![5, 5],
            Self::ThreeTone => vec![3, 3, 3],
            _ => vec![3, 3],
        }
    }

    /// Default reconstruction span and sample count for `solve`/`spectrum`.
    pub fn default_span(&self) -> (f64, usize) {
        match self {
            Self::Duffing => (220.0, 15_000),
            Self::Kg => (200.0, 8_000),
            _ => (50.0, 5_000),
        }
    }

    /// Default comparison protocol: t span, RK4 steps, transient cut.
    pub fn default_compare(&self) -> ((f64, f64), usize, f64) {
        match self {
            Self::Duffing => ((0.0, 220.0), 15_000, 55.0),
            Self::Kg => ((0.0, 200.0), 200_000, 100.0),
            _ => ((0.0, 50.0), 10_000, 0.0),
        }
    }
}

/// The full resolved configuration of one command invocation. Everything
/// that affects output content is here and feeds the config hash; the output
/// directory does not.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub problem: String,
    pub omegas: Vec<String>,
    pub grid: Vec<usize>,
    pub params: BTreeMap<String, String>,
    pub tol: f64,
    pub max_newton_iters: usize,
    pub linear_solver: String,
    pub gmres_restart: usize,
    pub gmres_rel_tol: f64,
    pub gmres_max_outer: usize,
    pub no_homotopy: bool,
    pub tmax: Option<f64>,
    pub samples: Option<usize>,
    pub window: Option<(f64, f64)>,
    pub cut: Option<f64>,
    pub steps: Option<usize>,
    pub component: Option<usize>,
    pub grids: Vec<usize>,
    pub reference_grid: usize,
    pub jobs: usize,
    pub omega0: Option<String>,
    pub omegaf: Option<String>,
    pub max_denominator: u64,
    pub points: Option<usize>,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            problem: "linear".into(),
            omegas: Vec::new(),
            grid: Vec::new(),
            params: BTreeMap::new(),
            tol: 1e-10,
            max_newton_iters: 50,
            linear_solver: "auto".into(),
            gmres_restart: 50,
            gmres_rel_tol: 1e-10,
            gmres_max_outer: 40,
            no_homotopy: false,
            tmax: None,
            samples: None,
            window: None,
            cut: None,
            steps: None,
            component: None,
            grids: vec![3, 5, 7, 9, 11, 13, 15, 17, 19],
            reference_grid: 31,
            jobs: 1,
            omega0: None,
            omegaf: None,
            max_denominator: 200,
            points: None,
            seed: 0,
            out_dir: "ttsm-out".into(),
        }
    }
}

/// Optional values read from a TOML config file; unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub omegas: Option<Vec<String>>,
    pub grid: Option<Vec<usize>>,
    pub params: Option<BTreeMap<String, String>>,
    pub tol: Option<f64>,
    pub max_newton_iters: Option<usize>,
    pub linear_solver: Option<String>,
    pub gmres_restart: Option<usize>,
    pub gmres_rel_tol: Option<f64>,
    pub gmres_max_outer: Option<usize>,
    pub no_homotopy: Option<bool>,
    pub tmax: Option<f64>,
    pub samples: Option<usize>,
    pub window: Option<(f64, f64)>,
    pub cut: Option<f64>,
    pub steps: Option<usize>,
    pub component: Option<usize>,
    pub grids: Option<Vec<usize>>,
    pub reference_grid: Option<usize>,
    pub jobs: Option<usize>,
    pub omega0: Option<String>,
    pub omegaf: Option<String>,
    pub max_denominator: Option<u64>,
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn apply_to(self, config: &mut RunConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { config.$field = v; })*
            };
        }
        take!(
            problem, omegas, grid, params, tol, max_newton_iters, linear_solver, gmres_restart,
            gmres_rel_tol, gmres_max_outer, no_homotopy, grids, reference_grid, jobs,
            max_denominator, seed, out_dir
        );
        macro_rules! take_opt {
            ($($field:ident),*) => {
                $(if self.$field.is_some() { config.$field = self.$field; })*
            };
        }
        take_opt!(tmax, samples, window, cut, steps, component, omega0, omegaf, points);
    }
}

impl RunConfig {
    pub fn problem_kind(&self) -> Result<ProblemKind, String> {
        ProblemKind::parse(&self.problem)
    }

    /// Fills per-problem defaults for fields the user left empty.
    pub fn resolve_defaults(&mut self) -> Result<(), String> {
        let kind = self.problem_kind()?;
        if self.omegas.is_empty() {
            self.omegas = kind.default_omegas();
        }
        if self.grid.is_empty() {
            self.grid = kind.default_grid();
        }
        Ok(())
    }

    pub fn evaluated_omegas(&self) -> Result<Vec<f64>, String> {
        self.omegas
            .iter()
            .map(|s| expr::eval(s).map_err(|e| format!("--omega '{s}': {e}")))
            .collect()
    }

    /// Problem parameters with expression values evaluated.
    pub fn evaluated_params(&self) -> Result<BTreeMap<String, f64>, String> {
        self.params
            .iter()
            .map(|(k, v)| {
                expr::eval(v)
                    .map(|x| (k.clone(), x))
                    .map_err(|e| format!("--param {k}='{v}': {e}"))
            })
            .collect()
    }

    pub fn newton_config(&self) -> Result<NewtonConfig, String> {
        let linear_solver = match self.linear_solver.as_str() {
            "auto" => LinearSolver::Auto,
            "dense" | "dense_direct" => LinearSolver::DenseDirect,
            "gmres" => LinearSolver::Gmres,
            other => return Err(format!("unknown linear solver '{other}'")),
        };
        if !(self.tol > 0.0) {
            return Err("tol must be positive".into());
        }
        Ok(NewtonConfig {
            residual_tol: self.tol,
            max_newton_iters: self.max_newton_iters,
            linear_solver,
            gmres_restart: self.gmres_restart,
            gmres_rel_tol: self.gmres_rel_tol,
            gmres_max_outer: self.gmres_max_outer,
            ..NewtonConfig::default()
        })
    }

    /// SHA-256 of the canonical JSON serialization (output directory
    /// excluded): the identity embedded in every emitted file.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn linear_params(&self) -> Result<LinearOscillatorParams, String> {
        let omegas = self.evaluated_omegas()?;
        if omegas.len() != 2 {
            return Err("linear oscillator needs exactly two --omega values".into());
        }
        Ok(LinearOscillatorParams::new(omegas[0], omegas[1]))
    }

    pub fn duffing_params(&self) -> Result<DuffingParams, String> {
        let omegas = self.evaluated_omegas()?;
        if omegas.len() != 2 {
            return Err("duffing needs exactly two --omega values".into());
        }
        let mut params = DuffingParams {
            omega1: omegas[0],
            omega2: omegas[1],
            ..DuffingParams::default()
        };
        let overrides = self.evaluated_params()?;
        for (key, value) in &overrides {
            match key.as_str() {
                "delta" => params.delta = *value,
                "beta" => params.beta = *value,
                "alpha" => params.alpha = *value,
                "f1" => params.f1 = *value,
                "f2" => params.f2 = *value,
                other => return Err(format!("unknown duffing parameter '{other}'")),
            }
        }
        Ok(params)
    }

    pub fn kg_params(&self) -> Result<KleinGordonParams, String> {
        let omegas = self.evaluated_omegas()?;
        if omegas.len() != 2 {
            return Err("kg needs exactly two --omega values".into());
        }
        let mut params = KleinGordonParams {
            omega1: omegas[0],
            omega2: omegas[1],
            ..KleinGordonParams::default()
        };
        for (key, value) in &self.evaluated_params()? {
            match key.as_str() {
                "gamma" => params.gamma = *value,
                "epsilon" => params.epsilon = *value,
                "g" => params.g = *value,
                "length" => params.length = *value,
                "nx" => params.nx = *value as usize,
                "spatial_order" => params.spatial_order = *value as usize,
                other => return Err(format!("unknown kg parameter '{other}'")),
            }
        }
        Ok(params)
    }

    pub fn three_tone_omegas(&self) -> Result<[f64; 3], String> {
        let omegas = self.evaluated_omegas()?;
        if omegas.len() != 3 {
            return Err("three_tone needs exactly three --omega values".into());
        }
        Ok([omegas[0], omegas[1], omegas[2]])
    }
}

/// Exit-code mapping: configuration problems exit 1, non-convergence exits 2.
pub fn error_exit_code(err: &TtsmError) -> i32 {
    match err {
        TtsmError::HomotopyStageFailed { .. } | TtsmError::SweepGridFailed { .. } => 2,
        _ => 1,
    }
}
