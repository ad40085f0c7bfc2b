//! Periodic-orbit branches emanating from a Hopf point.
//!
//! Near onset the branch is parametrized by the amplitude `β` of the first
//! harmonic along `v1`, with the phase `α` pinned to zero. Once the orbit has
//! grown well past the seed amplitude the corrector switches to
//! pseudo-arclength on `(p, ω, μ)`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::charmatrix::HopfData;
use crate::error::{Error, Result};
use crate::fourier::{shift, CoeffVec, PeriodicFn};
use crate::functional::ExtendedProblem;
use crate::linalg::norm2;
use crate::reduction::{newton_solve, off_grid_residual, FreeVars, LinearConstraint, SolverConfig, Unknowns};

/// Off-grid residual sampling of every [`BranchPoint`].
pub const RESIDUAL_SAMPLES: usize = 1000;
pub const RESIDUAL_SEED: u64 = 0x0b17;

/// A converged periodic orbit on a branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub p_y: CoeffVec,
    pub omega: f64,
    pub mu: Vec<f64>,
    pub beta: f64,
    pub alpha_residual: f64,
    /// Off-grid sup-norm of `ẋ - F(x)`.
    pub odes_residual: f64,
    pub newton_iters: usize,
    /// `X(p_y)` on the collocation modes.
    pub profile: PeriodicFn,
}

impl BranchPoint {
    pub fn unknowns(&self) -> Unknowns {
        Unknowns {
            p: self.p_y.clone(),
            omega: self.omega,
            params: self.mu.clone(),
        }
    }

    /// Period of the orbit in the original time scale.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// Step size fell below its lower bound; carries the last failure.
    MinStep { step: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub hopf: HopfData,
    /// Step size used for every accepted point after the first.
    pub step_history: Vec<f64>,
    pub termination: Termination,
}

fn split(v: &DVector<Complex64>) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|z| z.re).collect(), v.iter().map(|z| z.im).collect())
}

/// `(α, β)`: first-harmonic coordinates of `x` along `Re[v1 e^{it}]` and `-Im[v1 e^{it}]`.
pub fn phase_project(x: &PeriodicFn, v1: &DVector<Complex64>) -> (f64, f64) {
    let (vr, vi) = split(v1);
    let mut alpha = 0.0;
    let mut beta = 0.0;
    for i in 0..x.dim() {
        let (c, s) = (x.coeff(i, 1), x.coeff(i, -1));
        alpha += vr[i] * c - vi[i] * s;
        beta -= vi[i] * c + vr[i] * s;
    }
    (alpha, beta)
}

fn phase_rows(hopf: &HopfData, harmonics: usize, nu: usize, beta: Option<f64>) -> Vec<LinearConstraint> {
    let n = hopf.v1.len();
    let (vr, vi) = split(&hopf.v1);
    let template = CoeffVec::zeros(n, harmonics);
    let len = template.len() + 1 + nu;
    let mut a = vec![0.0; len];
    let mut b = vec![0.0; len];
    for i in 0..n {
        let (c, s) = (template.index(i, 1), template.index(i, -1));
        a[c] = vr[i];
        a[s] = -vi[i];
        b[c] = -vi[i];
        b[s] = -vr[i];
    }
    let mut rows = vec![LinearConstraint { coeffs: a, rhs: 0.0 }];
    if let Some(beta) = beta {
        rows.push(LinearConstraint { coeffs: b, rhs: beta });
    }
    rows
}

/// Linear-theory seed `x(t) = x_eq - β·Im[v1 e^{it}]` at `(ω₀, μ₀)`.
pub fn hopf_seed(h: &HopfData, beta: f64, harmonics: usize) -> Unknowns {
    let n = h.v1.len();
    let mut p = CoeffVec::zeros(n, harmonics);
    for i in 0..n {
        p.set(i, 0, 2.0 * h.equilibrium.get(i).copied().unwrap_or(0.0));
        if harmonics >= 1 {
            p.set(i, -1, -beta * h.v1[i].re);
            p.set(i, 1, -beta * h.v1[i].im);
        }
    }
    Unknowns {
        p,
        omega: h.omega0,
        params: h.mu0.clone(),
    }
}

/// `R_N Δ_t E_N p`.
pub fn shift_coeffs(p: &CoeffVec, t: f64) -> CoeffVec {
    shift(&p.embed(), t).restrict(p.harmonics())
}

fn solver_for(ext: &ExtendedProblem, cfg: &SolverConfig) -> SolverConfig {
    SolverConfig {
        omega_cutoff: Some(ext.omega_cutoff),
        ..cfg.clone()
    }
}

fn finish(
    ext: &ExtendedProblem,
    hopf: &HopfData,
    seed: Unknowns,
    constraints: &[LinearConstraint],
    free: &FreeVars,
    cfg: &SolverConfig,
) -> Result<BranchPoint> {
    let cfg = solver_for(ext, cfg);
    let out = newton_solve(&ext.base, seed, free, constraints, &cfg)?;
    let u = out.unknowns;
    let (alpha, beta) = phase_project(&u.p.embed(), &hopf.v1);
    let odes_residual = off_grid_residual(
        &ext.base,
        &out.x,
        &u.params,
        cfg.effective_omega(u.omega),
        RESIDUAL_SAMPLES,
        RESIDUAL_SEED,
    )?;
    Ok(BranchPoint {
        p_y: u.p,
        omega: u.omega,
        mu: u.params,
        beta,
        alpha_residual: alpha,
        odes_residual,
        newton_iters: out.iterations,
        profile: out.x,
    })
}

fn free_vars(free_param: Option<usize>) -> FreeVars {
    FreeVars {
        omega: true,
        params: free_param.into_iter().collect(),
    }
}

/// Newton correction of `seed` onto the orbit with `α = 0`, `β = beta_target`.
pub fn correct(
    ext: &ExtendedProblem,
    seed: Unknowns,
    beta_target: f64,
    hopf: &HopfData,
    cfg: &SolverConfig,
) -> Result<BranchPoint> {
    correct_with(ext, seed, beta_target, hopf, Some(hopf.param), cfg)
}

fn correct_with(
    ext: &ExtendedProblem,
    seed: Unknowns,
    beta_target: f64,
    hopf: &HopfData,
    free_param: Option<usize>,
    cfg: &SolverConfig,
) -> Result<BranchPoint> {
    let rows = phase_rows(hopf, seed.p.harmonics(), seed.params.len(), Some(beta_target));
    finish(ext, hopf, seed, &rows, &free_vars(free_param), cfg)
}

/// Step-size and mode settings of [`continue_branch`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSettings {
    pub steps: usize,
    pub step_size: f64,
    /// Parameter left free; defaults to the one the Hopf point was found in.
    pub free_param: Option<usize>,
    /// Switch to pseudo-arclength once the non-mean coefficients exceed
    /// this multiple of the starting amplitude.
    pub switch_factor: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            steps: 10,
            step_size: 0.01,
            free_param: None,
            switch_factor: 10.0,
        }
    }
}

fn oscillation_norm(p: &CoeffVec) -> f64 {
    let mut q = p.clone();
    for i in 0..p.dim() {
        q.set(i, 0, 0.0);
    }
    q.norm()
}

/// Continues the branch through `start` for `settings.steps` accepted points.
pub fn continue_branch(
    ext: &ExtendedProblem,
    hopf: &HopfData,
    start: &BranchPoint,
    settings: &ContinuationSettings,
    cfg: &SolverConfig,
) -> Result<Branch> {
    let h0 = settings.step_size;
    if !(h0 > 0.0) {
        return Err(Error::Invalid("continuation step must be positive".into()));
    }
    let free = free_vars(Some(settings.free_param.unwrap_or(hopf.param)));
    continue_with(ext, hopf, start, settings, &free, cfg)
}

/// As [`continue_branch`] with every parameter frozen; the augmented system is
/// then over-determined and rejected.
pub fn continue_frozen(
    ext: &ExtendedProblem,
    hopf: &HopfData,
    start: &BranchPoint,
    settings: &ContinuationSettings,
    cfg: &SolverConfig,
) -> Result<Branch> {
    continue_with(ext, hopf, start, settings, &free_vars(None), cfg)
}

fn continue_with(
    ext: &ExtendedProblem,
    hopf: &HopfData,
    start: &BranchPoint,
    settings: &ContinuationSettings,
    free: &FreeVars,
    cfg: &SolverConfig,
) -> Result<Branch> {
    let harmonics = start.p_y.harmonics();
    let nu = start.mu.len();
    let equations = start.p_y.len() + 2;
    let unknowns = start.p_y.len() + usize::from(free.omega) + free.params.len();
    if equations != unknowns {
        return Err(Error::NotSquare { equations, unknowns });
    }
    let h0 = settings.step_size;
    let (h_min, h_max) = (h0 / 64.0, 4.0 * h0);
    let direction = if start.beta < 0.0 { -1.0 } else { 1.0 };
    let switch_at = settings.switch_factor * start.beta.abs().max(f64::EPSILON);

    let mut points = vec![start.clone()];
    let mut step_history = Vec::new();
    let mut h = h0;
    let mut streak = 0;
    let mut termination = Termination::Completed;
    while points.len() <= settings.steps {
        let cur = points.last().expect("non-empty");
        let prev = points.len().checked_sub(2).map(|i| &points[i]);
        let arclength = oscillation_norm(&cur.p_y) > switch_at && prev.is_some();
        let attempt = if arclength {
            let prev = prev.expect("checked");
            let a = cur.unknowns().flatten();
            let b = prev.unknowns().flatten();
            let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let len = norm2(&diff);
            let tangent: Vec<f64> = diff.iter().map(|d| d / len).collect();
            let pred: Vec<f64> = a.iter().zip(&tangent).map(|(x, t)| x + h * t).collect();
            let rhs = tangent.iter().zip(&pred).map(|(t, p)| t * p).sum();
            let mut rows = phase_rows(hopf, harmonics, nu, None);
            rows.push(LinearConstraint { coeffs: tangent, rhs });
            let seed = Unknowns::from_flat(&cur.unknowns(), &pred)?;
            finish(ext, hopf, seed, &rows, free, cfg)
        } else {
            let beta = cur.beta + direction * h;
            let seed = match prev {
                Some(prev) if (cur.beta - prev.beta).abs() > 0.0 => {
                    let s = (beta - cur.beta) / (cur.beta - prev.beta);
                    let a = cur.unknowns().flatten();
                    let b = prev.unknowns().flatten();
                    let pred: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * (x - y)).collect();
                    Unknowns::from_flat(&cur.unknowns(), &pred)?
                }
                _ => {
                    let mut u = cur.unknowns();
                    let scale = if cur.beta != 0.0 { beta / cur.beta } else { 0.0 };
                    if scale != 0.0 {
                        for i in 0..u.p.dim() {
                            for k in 1..=harmonics as isize {
                                u.p.set(i, k, scale * u.p.get(i, k));
                                u.p.set(i, -k, scale * u.p.get(i, -k));
                            }
                        }
                    } else {
                        u = hopf_seed(hopf, beta, harmonics);
                        for i in 0..u.p.dim() {
                            u.p.set(i, 0, cur.p_y.get(i, 0));
                        }
                    }
                    u
                }
            };
            let rows = phase_rows(hopf, harmonics, nu, Some(beta));
            finish(ext, hopf, seed, &rows, free, cfg)
        };
        match attempt {
            Ok(pt) => {
                step_history.push(h);
                points.push(pt);
                streak += 1;
                if streak >= 3 {
                    h = (2.0 * h).min(h_max);
                    streak = 0;
                }
            }
            Err(e @ Error::NotSquare { .. }) => return Err(e),
            Err(e) => {
                streak = 0;
                h *= 0.5;
                if h < h_min {
                    termination = Termination::MinStep {
                        step: h,
                        reason: e.to_string(),
                    };
                    break;
                }
            }
        }
    }
    Ok(Branch {
        points,
        hopf: hopf.clone(),
        step_history,
        termination,
    })
}
