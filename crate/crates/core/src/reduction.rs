//! Reduction of the periodic boundary-value problem to `g(p) = 0`.
//!
//! For coefficients `p` of the low modes, `X(p)` is the fixed point of
//! `M_N(x, p) = E_N p + Q_N L F(x)`; the algebraic residual is
//! `g(p) = R_N [P_0 F(X(p)) + Q_0 (E_N p - P_N L F(X(p)))]`.

mod diagnose;
mod newton;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{antiderivative, differentiate, project, CoeffVec, PeriodicFn, Projection};
use crate::functional::{apply_F, apply_dF, PeriodicSegment, ProblemDef};

pub use diagnose::{diagnose, DiagnoseOptions, DiagnoseReport};
pub use newton::{newton_solve, FreeVars, LinearConstraint, NewtonOutcome, Unknowns};

/// Numerical settings of the reduced system.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Harmonic count `N` of the algebraic unknown.
    pub n_harmonics: usize,
    /// Collocation harmonic count `M ≥ N`.
    pub m_colloc: usize,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub fd_step: f64,
    /// Threshold for the residuals reported by [`check_split`].
    pub check_tol: f64,
    /// History depth of Anderson mixing; 0 selects plain Picard iteration.
    pub anderson_depth: usize,
    /// Evaluate Jacobian columns on the rayon pool.
    pub parallel: bool,
    /// Frequencies below this value are mapped through a smooth positive cut.
    pub omega_cutoff: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_harmonics: 8,
            m_colloc: 16,
            fp_tol: 1e-12,
            fp_max_iter: 200,
            newton_tol: 1e-10,
            newton_max_iter: 30,
            fd_step: 1e-6,
            check_tol: 1e-7,
            anderson_depth: 0,
            parallel: true,
            omega_cutoff: None,
        }
    }
}

impl SolverConfig {
    /// Config with `N` harmonics and `M = 2N` collocation modes.
    pub fn with_harmonics(n: usize) -> Self {
        Self {
            n_harmonics: n,
            m_colloc: 2 * n,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_harmonics == 0 || self.m_colloc < self.n_harmonics {
            return Err(Error::Invalid(format!(
                "need 1 ≤ N ≤ M, got N = {}, M = {}",
                self.n_harmonics, self.m_colloc
            )));
        }
        let tols = [self.fp_tol, self.newton_tol, self.fd_step, self.check_tol];
        if tols.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Invalid("tolerances and steps must be positive".into()));
        }
        Ok(())
    }

    /// Frequency actually used in the rescaled equation.
    pub fn effective_omega(&self, omega: f64) -> f64 {
        match self.omega_cutoff {
            Some(c) if omega < c => c * (omega / c - 1.0).exp(),
            _ => omega,
        }
    }
}

/// Convergence record of a fixed-point solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub iterations: usize,
    /// Geometric mean of successive update ratios above the rounding floor.
    pub contraction_estimate: f64,
    pub converged: bool,
    pub final_update: f64,
    pub updates: Vec<f64>,
}

fn contraction_estimate(updates: &[f64], floor: f64) -> f64 {
    let ratios: Vec<f64> = updates
        .windows(2)
        .filter(|w| w[0] > floor && w[1] > floor)
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.is_empty() {
        return 0.0;
    }
    (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
}

fn check_dims(prob: &ProblemDef, p: &CoeffVec, params: &[f64], cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if p.dim() != prob.n || p.harmonics() != cfg.n_harmonics {
        return Err(Error::Dimension(format!(
            "coefficients have dim {} and N = {}, expected dim {} and N = {}",
            p.dim(),
            p.harmonics(),
            prob.n,
            cfg.n_harmonics
        )));
    }
    if params.len() != prob.nu {
        return Err(Error::Dimension(format!(
            "expected {} parameters, got {}",
            prob.nu,
            params.len()
        )));
    }
    Ok(())
}

fn field(prob: &ProblemDef, x: &PeriodicFn, params: &[f64], omega: f64, cfg: &SolverConfig) -> Result<PeriodicFn> {
    apply_F(prob, &x.resized(cfg.m_colloc), params, cfg.effective_omega(omega))
}

/// `M_N(x, p) = E_N p + Q_N L F(x)`, with `F` collocated on `M` modes.
#[allow(non_snake_case)]
pub fn map_MN(
    prob: &ProblemDef,
    x: &PeriodicFn,
    p: &CoeffVec,
    params: &[f64],
    omega: f64,
    cfg: &SolverConfig,
) -> Result<PeriodicFn> {
    check_dims(prob, p, params, cfg)?;
    let f = field(prob, x, params, omega, cfg)?;
    Ok(&p.embed().resized(cfg.m_colloc) + &project(&antiderivative(&f), cfg.n_harmonics, Projection::Q))
}

struct Anderson {
    depth: usize,
    xs: Vec<Vec<f64>>,
    fs: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Self {
            depth,
            xs: Vec::new(),
            fs: Vec::new(),
        }
    }

    // Mixes the newest map value using the stored differences.
    fn next(&mut self, x: &[f64], gx: &[f64]) -> Vec<f64> {
        let f: Vec<f64> = gx.iter().zip(x).map(|(a, b)| a - b).collect();
        self.xs.push(gx.to_vec());
        self.fs.push(f.clone());
        if self.xs.len() > self.depth + 1 {
            self.xs.remove(0);
            self.fs.remove(0);
        }
        let m = self.xs.len() - 1;
        if m == 0 {
            return gx.to_vec();
        }
        let len = f.len();
        let df = nalgebra::DMatrix::from_fn(len, m, |i, j| self.fs[j + 1][i] - self.fs[j][i]);
        let rhs = nalgebra::DVector::from_column_slice(&f);
        let gamma = match df.svd(true, true).solve(&rhs, 1e-12) {
            Ok(g) => g,
            Err(_) => return gx.to_vec(),
        };
        let mut out = gx.to_vec();
        for j in 0..m {
            for (i, o) in out.iter_mut().enumerate() {
                *o -= gamma[j] * (self.xs[j + 1][i] - self.xs[j][i]);
            }
        }
        out
    }
}

/// `X(p)`: the fixed point of `M_N(·, p)`, warm-started at `x_init`.
#[allow(non_snake_case)]
pub fn solve_X(
    prob: &ProblemDef,
    p: &CoeffVec,
    x_init: &PeriodicFn,
    params: &[f64],
    omega: f64,
    cfg: &SolverConfig,
) -> Result<(PeriodicFn, FixedPointReport)> {
    check_dims(prob, p, params, cfg)?;
    let m = cfg.m_colloc;
    let mut x = x_init.resized(m);
    // Low modes are fixed by p from the first step on.
    let low = p.embed().resized(m);
    let mut updates = Vec::new();
    let mut mixer = (cfg.anderson_depth > 0).then(|| Anderson::new(cfg.anderson_depth));
    for it in 1..=cfg.fp_max_iter {
        let mapped = map_MN(prob, &x, p, params, omega, cfg)?;
        let upd = (&mapped - &x).sup_norm();
        updates.push(upd);
        let floor = 1e-13 * mapped.sup_norm().max(1.0);
        if upd <= cfg.fp_tol {
            return Ok((
                mapped,
                FixedPointReport {
                    iterations: it,
                    contraction_estimate: contraction_estimate(&updates, floor),
                    converged: true,
                    final_update: upd,
                    updates,
                },
            ));
        }
        x = match mixer.as_mut() {
            Some(a) if it > 1 => {
                let mixed = a.next(x.coeffs(), mapped.coeffs());
                let mut y = PeriodicFn::new(prob.n, m, mixed)?;
                let q = project(&y, cfg.n_harmonics, Projection::Q);
                y = &low + &q;
                y
            }
            Some(a) => {
                a.next(x.coeffs(), mapped.coeffs());
                mapped
            }
            None => mapped,
        };
    }
    let last = updates.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::Contraction {
        iterations: cfg.fp_max_iter,
        last_update: last,
        contraction: contraction_estimate(&updates, 1e-13),
    })
}

/// Everything computed along the way to `g(p)`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub x: PeriodicFn,
    pub f: PeriodicFn,
    pub g: CoeffVec,
    pub report: FixedPointReport,
}

fn lowmodes_residual(p: &CoeffVec, f: &PeriodicFn, n_harm: usize) -> CoeffVec {
    let lf = antiderivative(f);
    let mut g = p.clone();
    for i in 0..p.dim() {
        g.set(i, 0, f.coeff(i, 0));
        for k in 1..=n_harm as isize {
            g.set(i, k, p.get(i, k) - lf.coeff(i, k));
            g.set(i, -k, p.get(i, -k) - lf.coeff(i, -k));
        }
    }
    g
}

/// Solves `X(p)` from `x_init` (or `E_N p`) and evaluates `g(p)`.
pub fn evaluate(
    prob: &ProblemDef,
    p: &CoeffVec,
    x_init: Option<&PeriodicFn>,
    params: &[f64],
    omega: f64,
    cfg: &SolverConfig,
) -> Result<Evaluation> {
    let start = x_init.cloned().unwrap_or_else(|| p.embed());
    let (x, report) = solve_X(prob, p, &start, params, omega, cfg)?;
    let f = field(prob, &x, params, omega, cfg)?;
    let g = lowmodes_residual(p, &f, cfg.n_harmonics);
    Ok(Evaluation { x, f, g, report })
}

/// `g(p)`.
pub fn residual_g(prob: &ProblemDef, p: &CoeffVec, params: &[f64], omega: f64, cfg: &SolverConfig) -> Result<CoeffVec> {
    Ok(evaluate(prob, p, None, params, omega, cfg)?.g)
}

/// Solves `z = E_N q + Q_N L ∂F(x, z)` by iteration, `x = X(p)`.
#[allow(non_snake_case)]
pub fn solve_dX(
    prob: &ProblemDef,
    q: &CoeffVec,
    x: &PeriodicFn,
    params: &[f64],
    omega: f64,
    cfg: &SolverConfig,
) -> Result<PeriodicFn> {
    check_dims(prob, q, params, cfg)?;
    let m = cfg.m_colloc;
    let x = x.resized(m);
    let w = cfg.effective_omega(omega);
    let base = q.embed().resized(m);
    let mut z = base.clone();
    let mut updates = Vec::new();
    for _ in 0..cfg.fp_max_iter {
        let dz = apply_dF(prob, &x, &z, params, w)?;
        let next = &base + &project(&antiderivative(&dz), cfg.n_harmonics, Projection::Q);
        let upd = (&next - &z).sup_norm();
        updates.push(upd);
        z = next;
        if upd <= cfg.fp_tol * z.sup_norm().max(1.0) {
            return Ok(z);
        }
    }
    Err(Error::Contraction {
        iterations: cfg.fp_max_iter,
        last_update: updates.last().copied().unwrap_or(f64::INFINITY),
        contraction: contraction_estimate(&updates, 1e-13),
    })
}

/// Column `∂g/∂p · q` given `x = X(p)`.
fn jacobian_column(
    prob: &ProblemDef,
    q: &CoeffVec,
    x: &PeriodicFn,
    params: &[f64],
    omega: f64,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let z = solve_dX(prob, q, x, params, omega, cfg)?;
    let dz = apply_dF(prob, &x.resized(cfg.m_colloc), &z, params, cfg.effective_omega(omega))?;
    Ok(lowmodes_residual(q, &dz, cfg.n_harmonics).as_slice().to_vec())
}

/// Dense Jacobian of `g` with columns `[p…, ω, μ_0…μ_{ν-1}]`.
///
/// `p` columns come from the variational equation; `ω` and `μ` columns are
/// one-sided differences with step `fd_step·max(1, |v|)`.
pub fn jacobian_g(
    prob: &ProblemDef,
    p: &CoeffVec,
    params: &[f64],
    omega: f64,
    cfg: &SolverConfig,
) -> Result<nalgebra::DMatrix<f64>> {
    let ev = evaluate(prob, p, None, params, omega, cfg)?;
    jacobian_at(prob, p, &ev, params, omega, cfg)
}

pub(crate) fn jacobian_at(
    prob: &ProblemDef,
    p: &CoeffVec,
    ev: &Evaluation,
    params: &[f64],
    omega: f64,
    cfg: &SolverConfig,
) -> Result<nalgebra::DMatrix<f64>> {
    let m = p.len();
    let cols = m + 1 + prob.nu;
    let column = |j: usize| -> Result<Vec<f64>> {
        if j < m {
            let q = CoeffVec::unit(p.dim(), p.harmonics(), j);
            jacobian_column(prob, &q, &ev.x, params, omega, cfg)
        } else {
            let (om, pr, h) = if j == m {
                let h = cfg.fd_step * omega.abs().max(1.0);
                (omega + h, params.to_vec(), h)
            } else {
                let mut pr = params.to_vec();
                let h = cfg.fd_step * pr[j - m - 1].abs().max(1.0);
                pr[j - m - 1] += h;
                (omega, pr, h)
            };
            let g1 = evaluate(prob, p, Some(&ev.x), &pr, om, cfg)?.g;
            Ok(g1
                .as_slice()
                .iter()
                .zip(ev.g.as_slice())
                .map(|(a, b)| (a - b) / h)
                .collect())
        }
    };
    let columns: Vec<Vec<f64>> = if cfg.parallel {
        (0..cols).into_par_iter().map(column).collect::<Result<_>>()?
    } else {
        (0..cols).map(column).collect::<Result<_>>()?
    };
    Ok(nalgebra::DMatrix::from_fn(m, cols, |i, j| columns[j][i]))
}

/// Pointwise `F(x)(t) = (1/ω) f(s ↦ x(t + ωs), μ)` without collocation.
pub fn field_at(prob: &ProblemDef, x: &PeriodicFn, params: &[f64], omega: f64, t: f64) -> Result<Vec<f64>> {
    let seg = PeriodicSegment {
        x,
        t,
        omega,
        horizon: prob.tau,
        scale: 1.0,
    };
    let mut v = prob.eval(&seg, params)?;
    v.iter_mut().for_each(|c| *c /= omega);
    Ok(v)
}

/// Sup over `count` seeded uniform random times of `|ẋ(t) - F(x)(t)|`.
pub fn off_grid_residual(
    prob: &ProblemDef,
    x: &PeriodicFn,
    params: &[f64],
    omega: f64,
    count: usize,
    seed: u64,
) -> Result<f64> {
    let dx = differentiate(x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let t = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let f = field_at(prob, x, params, omega, t)?;
        let d = dx.eval(t);
        for (a, b) in d.iter().zip(&f) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Residuals of the two equivalent formulations at a candidate `(x, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport {
    /// `sup |ẋ - F(x)|` at random off-grid times.
    pub ode: f64,
    /// `max |p - R_N x|`.
    pub projection: f64,
    /// `sup |x - E_N p - Q_N L F(x)|`.
    pub fixed_point: f64,
    /// `max |R_N [P_0 F(x) + Q_0 (E_N p - P_N L F(x))]|`.
    pub low_modes: f64,
    pub bvp_holds: bool,
    pub split_holds: bool,
    /// Each formulation holding implies the other within ten times the tolerance.
    pub consistent: bool,
}

impl SplitReport {
    pub fn is_solution(&self) -> bool {
        self.bvp_holds && self.split_holds
    }
}

/// Compares the boundary-value form `ẋ = F(x)` with the split fixed-point form.
pub fn check_split(
    prob: &ProblemDef,
    x: &PeriodicFn,
    p: &CoeffVec,
    params: &[f64],
    omega: f64,
    cfg: &SolverConfig,
) -> Result<SplitReport> {
    check_dims(prob, p, params, cfg)?;
    let tol = cfg.check_tol;
    let w = cfg.effective_omega(omega);
    let xm = x.resized(cfg.m_colloc.max(x.modes()));
    let ode = off_grid_residual(prob, &xm, params, w, 1000, 0x5eed)?;
    let projection = (&xm.restrict(cfg.n_harmonics).embed() - &p.embed()).coeffs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let f = apply_F(prob, &xm, params, w)?;
    let rebuilt = &p.embed().resized(xm.modes()) + &project(&antiderivative(&f), cfg.n_harmonics, Projection::Q);
    let fixed_point = (&xm - &rebuilt).sup_norm();
    let low_modes = lowmodes_residual(p, &f, cfg.n_harmonics).max_abs();
    let bvp_holds = ode <= tol && projection <= tol;
    let split_holds = fixed_point <= tol && low_modes <= tol;
    let loose = 10.0 * tol;
    let consistent = (!bvp_holds || (fixed_point <= loose && low_modes <= loose))
        && (!split_holds || (ode <= loose && projection <= loose));
    Ok(SplitReport {
        ode,
        projection,
        fixed_point,
        low_modes,
        bvp_holds,
        split_holds,
        consistent,
    })
}
