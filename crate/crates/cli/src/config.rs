//! JSON run configuration. Every block rejects unknown keys.

use std::collections::BTreeMap;
use std::path::Path;

use fdeorbit::{builtin, ProblemDef, SolverConfig};
use serde::Deserialize;

use crate::Failure;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    /// Seed for every randomized diagnostic; required by `diagnose` and `verify`.
    pub seed: Option<u64>,
    pub equilibria: Option<EquilibriaBlock>,
    pub diagnose: Option<DiagnoseBlock>,
    pub hopf: Option<HopfBlock>,
    #[serde(rename = "continue")]
    pub continuation: Option<ContinueBlock>,
    pub verify: Option<VerifyBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub name: String,
    /// Overrides of the built-in defaults, by parameter name.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub n_harmonics: usize,
    /// Defaults to `2 * n_harmonics`.
    pub m_colloc: Option<usize>,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub fd_step: f64,
    pub check_tol: f64,
    pub anderson_depth: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            n_harmonics: d.n_harmonics,
            m_colloc: None,
            fp_tol: d.fp_tol,
            fp_max_iter: d.fp_max_iter,
            newton_tol: d.newton_tol,
            newton_max_iter: d.newton_max_iter,
            fd_step: d.fd_step,
            check_tol: d.check_tol,
            anderson_depth: d.anderson_depth,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriaBlock {
    pub guess: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseBlock {
    /// Radius of the ball around the equilibrium.
    pub delta: f64,
    pub omega: f64,
    pub pairs: usize,
    pub trials: usize,
}

impl Default for DiagnoseBlock {
    fn default() -> Self {
        Self {
            delta: 0.1,
            omega: 1.0,
            pairs: 100,
            trials: 8,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopfBlock {
    pub param: String,
    pub range: [f64; 2],
    #[serde(default = "default_mu_points")]
    pub points: usize,
    #[serde(default = "default_omega_range")]
    pub omega_range: [f64; 2],
    #[serde(default = "default_omega_points")]
    pub omega_points: usize,
}

fn default_mu_points() -> usize {
    13
}

fn default_omega_range() -> [f64; 2] {
    [0.2, 3.0]
}

fn default_omega_points() -> usize {
    57
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinueBlock {
    /// Seed amplitude; its sign picks the side of the branch.
    pub beta: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    /// Which Hopf point of the scan to follow.
    #[serde(default)]
    pub hopf_index: usize,
    #[serde(default = "default_cutoff")]
    pub omega_cutoff: f64,
    #[serde(default = "default_switch")]
    pub switch_factor: f64,
}

fn default_steps() -> usize {
    10
}

fn default_step_size() -> f64 {
    0.01
}

fn default_cutoff() -> f64 {
    0.1
}

fn default_switch() -> f64 {
    10.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    pub beta: f64,
    #[serde(default)]
    pub hopf_index: usize,
    /// Simulation horizon in periods of the orbit.
    #[serde(default = "default_periods")]
    pub periods: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_cutoff")]
    pub omega_cutoff: f64,
}

fn default_periods() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    0.01
}

/// A validated configuration with the problem resolved.
pub struct Resolved {
    pub raw: RunConfig,
    pub problem: ProblemDef,
    pub params: Vec<f64>,
    pub solver: SolverConfig,
}

impl Resolved {
    pub fn param_index(&self, name: &str) -> Result<usize, Failure> {
        self.problem.param_index(name).ok_or_else(|| {
            Failure::Config(format!(
                "problem {} has no parameter {name:?} (known: {:?})",
                self.problem.name, self.problem.param_names
            ))
        })
    }

    pub fn seed(&self, command: &str) -> Result<u64, Failure> {
        self.raw
            .seed
            .ok_or_else(|| Failure::Config(format!("`{command}` draws random samples and needs an explicit `seed`")))
    }
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Config(format!("{name} must be positive, got {v}")))
    }
}

fn range(name: &str, r: [f64; 2]) -> Result<(), Failure> {
    if r[0] < r[1] && r.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Failure::Config(format!("{name} must be an increasing pair, got {r:?}")))
    }
}

pub fn parse(text: &str) -> Result<RunConfig, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Config(format!("invalid config: {e}")))
}

pub fn load(path: &Path) -> Result<Resolved, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    resolve(parse(&text)?)
}

pub fn resolve(raw: RunConfig) -> Result<Resolved, Failure> {
    if raw.schema != SCHEMA {
        return Err(Failure::Config(format!("unsupported schema {} (expected {SCHEMA})", raw.schema)));
    }
    let problem = builtin(&raw.problem.name).map_err(|e| Failure::Config(e.to_string()))?;
    let mut params = problem.default_params.clone();
    for (name, value) in &raw.problem.params {
        let i = problem.param_index(name).ok_or_else(|| {
            Failure::Config(format!("problem {} has no parameter {name:?}", problem.name))
        })?;
        params[i] = *value;
    }
    let s = &raw.solver;
    let solver = SolverConfig {
        n_harmonics: s.n_harmonics,
        m_colloc: s.m_colloc.unwrap_or(2 * s.n_harmonics),
        fp_tol: s.fp_tol,
        fp_max_iter: s.fp_max_iter,
        newton_tol: s.newton_tol,
        newton_max_iter: s.newton_max_iter,
        fd_step: s.fd_step,
        check_tol: s.check_tol,
        anderson_depth: s.anderson_depth,
        ..SolverConfig::default()
    };
    solver.validate().map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(d) = &raw.diagnose {
        positive("diagnose.delta", d.delta)?;
        positive("diagnose.omega", d.omega)?;
    }
    if let Some(h) = &raw.hopf {
        range("hopf.range", h.range)?;
        range("hopf.omega_range", h.omega_range)?;
        if h.points < 2 || h.omega_points < 2 {
            return Err(Failure::Config("hopf grids need at least 2 points".into()));
        }
    }
    if let Some(c) = &raw.continuation {
        positive("continue.step_size", c.step_size)?;
        positive("continue.omega_cutoff", c.omega_cutoff)?;
    }
    if let Some(v) = &raw.verify {
        positive("verify.periods", v.periods)?;
        positive("verify.dt", v.dt)?;
        positive("verify.omega_cutoff", v.omega_cutoff)?;
    }
    let resolved = Resolved {
        raw,
        problem,
        params,
        solver,
    };
    if let Some(h) = &resolved.raw.hopf {
        resolved.param_index(&h.param)?;
    }
    Ok(resolved)
}
