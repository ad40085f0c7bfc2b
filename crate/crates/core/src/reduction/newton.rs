use nalgebra::{DMatrix, DVector};

use super::{evaluate, jacobian_at, Evaluation, FixedPointReport, SolverConfig};
use crate::error::{Error, Result};
use crate::fourier::{CoeffVec, PeriodicFn};
use crate::functional::ProblemDef;
use crate::linalg::{condition_estimate, norm2};

const MAX_HALVINGS: usize = 20;

/// A point `(p, ω, μ)` of the reduced system.
#[derive(Debug, Clone, PartialEq)]
pub struct Unknowns {
    pub p: CoeffVec,
    pub omega: f64,
    pub params: Vec<f64>,
}

impl Unknowns {
    /// Layout `[p…, ω, μ…]` shared by Jacobians and constraints.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.p.as_slice().to_vec();
        v.push(self.omega);
        v.extend_from_slice(&self.params);
        v
    }

    pub fn from_flat(template: &Self, v: &[f64]) -> Result<Self> {
        let m = template.p.len();
        if v.len() != m + 1 + template.params.len() {
            return Err(Error::Dimension("flat unknown vector has wrong length".into()));
        }
        Ok(Self {
            p: CoeffVec::new(template.p.dim(), template.p.harmonics(), v[..m].to_vec())?,
            omega: v[m],
            params: v[m + 1..].to_vec(),
        })
    }
}

/// Which of `ω` and the parameters Newton may move; `p` is always free.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FreeVars {
    pub omega: bool,
    pub params: Vec<usize>,
}

/// `coeffs · [p, ω, μ] = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn residual(&self, flat: &[f64]) -> f64 {
        self.coeffs.iter().zip(flat).map(|(a, b)| a * b).sum::<f64>() - self.rhs
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub unknowns: Unknowns,
    pub x: PeriodicFn,
    pub g: CoeffVec,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
    pub report: FixedPointReport,
}

fn augmented(ev: &Evaluation, u: &Unknowns, constraints: &[LinearConstraint]) -> Vec<f64> {
    let flat = u.flatten();
    let mut r = ev.g.as_slice().to_vec();
    r.extend(constraints.iter().map(|c| c.residual(&flat)));
    r
}

/// Damped Newton iteration on `g = 0` plus linear side conditions.
pub fn newton_solve(
    prob: &ProblemDef,
    start: Unknowns,
    free: &FreeVars,
    constraints: &[LinearConstraint],
    cfg: &SolverConfig,
) -> Result<NewtonOutcome> {
    let m = start.p.len();
    let full = m + 1 + start.params.len();
    let mut cols: Vec<usize> = (0..m).collect();
    if free.omega {
        cols.push(m);
    }
    for &i in &free.params {
        if i >= start.params.len() {
            return Err(Error::Invalid(format!("free parameter index {i} out of range")));
        }
        cols.push(m + 1 + i);
    }
    let equations = m + constraints.len();
    if equations != cols.len() {
        return Err(Error::NotSquare {
            equations,
            unknowns: cols.len(),
        });
    }
    if constraints.iter().any(|c| c.coeffs.len() != full) {
        return Err(Error::Dimension("constraint length differs from the unknown layout".into()));
    }

    let mut u = start;
    let mut ev = evaluate(prob, &u.p, None, &u.params, u.omega, cfg)?;
    let mut res = augmented(&ev, &u, constraints);
    let mut norm = norm2(&res);
    let mut history = vec![norm];
    let mut iterations = 0;
    while norm > cfg.newton_tol {
        if iterations == cfg.newton_max_iter {
            return Err(Error::NewtonMaxIter {
                iterations,
                residual: norm,
            });
        }
        iterations += 1;
        let jg = jacobian_at(prob, &u.p, &ev, &u.params, u.omega, cfg)?;
        let n = cols.len();
        let jac = DMatrix::from_fn(n, n, |r, c| {
            if r < m {
                jg[(r, cols[c])]
            } else {
                constraints[r - m].coeffs[cols[c]]
            }
        });
        let rhs = DVector::from_iterator(n, res.iter().map(|v| -v));
        let step = jac
            .clone()
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::Singular {
                condition: condition_estimate(&jac),
            })?;

        let base = u.flatten();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = base.clone();
            for (k, &c) in cols.iter().enumerate() {
                trial[c] += lambda * step[k];
            }
            let cand = Unknowns::from_flat(&u, &trial)?;
            if let Ok(e) = evaluate(prob, &cand.p, Some(&ev.x), &cand.params, cand.omega, cfg) {
                let r = augmented(&e, &cand, constraints);
                let rn = norm2(&r);
                if rn < norm {
                    accepted = Some((cand, e, r, rn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let (cand, e, r, rn) = accepted.ok_or(Error::Damping { residual: norm })?;
        u = cand;
        ev = e;
        res = r;
        norm = rn;
        history.push(norm);
    }
    Ok(NewtonOutcome {
        unknowns: u,
        x: ev.x,
        g: ev.g,
        iterations,
        residual: norm,
        history,
        report: ev.report,
    })
}
