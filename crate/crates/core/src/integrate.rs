//! Classical RK4 method of steps with cubic Hermite dense output, used as an
//! independent check on computed periodic orbits.

use std::sync::Arc;

use crate::continuation::BranchPoint;
use crate::error::{Error, Result};
use crate::functional::{ProblemDef, Segment};

pub type InitialFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// A computed solution on `[-τ, T]`.
#[derive(Clone)]
pub struct Trajectory {
    /// Start of the run; always 0.
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub tau: f64,
    initial: InitialFn,
    states: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

impl std::fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trajectory")
            .field("t1", &self.t1)
            .field("dt", &self.dt)
            .field("tau", &self.tau)
            .field("nodes", &self.states.len())
            .finish()
    }
}

fn hermite(y0: &[f64], f0: &[f64], y1: &[f64], f1: &[f64], h: f64, theta: f64) -> Vec<f64> {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

// Shared lookup for finished and in-progress trajectories.
fn lookup(
    initial: &InitialFn,
    states: &[Vec<f64>],
    derivs: &[Vec<f64>],
    dt: f64,
    t: f64,
) -> Vec<f64> {
    if t <= 0.0 {
        return initial(t);
    }
    let last = states.len() - 1;
    let t_last = last as f64 * dt;
    if t >= t_last {
        // Beyond the last node: extend the last piece, or a Taylor step at the start.
        if last == 0 {
            return states[0].iter().zip(&derivs[0]).map(|(y, f)| y + t * f).collect();
        }
        let theta = (t - (last - 1) as f64 * dt) / dt;
        return hermite(&states[last - 1], &derivs[last - 1], &states[last], &derivs[last], dt, theta);
    }
    let k = ((t / dt).floor() as usize).min(last - 1);
    let theta = (t - k as f64 * dt) / dt;
    hermite(&states[k], &derivs[k], &states[k + 1], &derivs[k + 1], dt, theta)
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn node(&self, k: usize) -> (f64, &[f64]) {
        (k as f64 * self.dt, &self.states[k])
    }

    /// State at any `t ∈ [-τ, T]`.
    pub fn query(&self, t: f64) -> Result<Vec<f64>> {
        let slack = 1e-12 * (1.0 + self.t1);
        if t < self.t0 - self.tau - slack || t > self.t1 + slack || t.is_nan() {
            return Err(Error::Invalid(format!(
                "time {t} outside the simulated span [-{}, {}]",
                self.tau, self.t1
            )));
        }
        Ok(lookup(&self.initial, &self.states, &self.derivs, self.dt, t.min(self.t1)))
    }
}

/// History seen from a stage at time `t` with state `now`.
struct HistorySegment<'a> {
    initial: &'a InitialFn,
    states: &'a [Vec<f64>],
    derivs: &'a [Vec<f64>],
    dt: f64,
    t: f64,
    now: &'a [f64],
    tau: f64,
}

impl Segment for HistorySegment<'_> {
    fn dim(&self) -> usize {
        self.now.len()
    }

    fn at(&self, s: f64) -> Result<Vec<f64>> {
        let slack = 1e-12 * (1.0 + self.tau);
        if s > slack || s < -self.tau - slack || s.is_nan() {
            return Err(Error::DelayViolation {
                t: self.t,
                message: format!("lookback {} outside [0, {}]", -s, self.tau),
            });
        }
        if s == 0.0 {
            return Ok(self.now.to_vec());
        }
        Ok(lookup(self.initial, self.states, self.derivs, self.dt, self.t + s))
    }

    fn horizon(&self) -> Option<f64> {
        Some(self.tau)
    }
}

/// Integrates `ẋ = f(x_t, μ)` on `[0, T]` from `initial` on `[-τ, 0]`.
/// The step is shrunk so that it divides `T`.
pub fn simulate(prob: &ProblemDef, initial: InitialFn, params: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::StepUnderflow { dt, horizon: t_end });
    }
    let steps = (t_end / dt).ceil() as usize;
    let h = t_end / steps as f64;
    if !(h > f64::EPSILON * t_end) {
        return Err(Error::StepUnderflow { dt, horizon: t_end });
    }
    let y0 = initial(0.0);
    if y0.len() != prob.n {
        return Err(Error::Dimension("initial segment has the wrong dimension".into()));
    }
    let mut states = vec![y0];
    let mut derivs: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    let eval = |states: &[Vec<f64>], derivs: &[Vec<f64>], t: f64, now: &[f64]| -> Result<Vec<f64>> {
        let seg = HistorySegment {
            initial: &initial,
            states,
            derivs,
            dt: h,
            t,
            now,
            tau: prob.tau,
        };
        prob.eval(&seg, params).map_err(|e| match e {
            Error::DelayViolation { .. } => e,
            other => Error::DelayViolation {
                t,
                message: other.to_string(),
            },
        })
    };
    // f at t = 0 only needs the initial segment.
    let f0 = eval(&states, &[vec![0.0; prob.n]], 0.0, &states[0])?;
    derivs.push(f0);
    for k in 0..steps {
        let t = k as f64 * h;
        let y = states[k].clone();
        let k1 = derivs[k].clone();
        let add = |a: &[f64], b: &[f64], c: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + c * y).collect() };
        let y2 = add(&y, &k1, 0.5 * h);
        let k2 = eval(&states, &derivs, t + 0.5 * h, &y2)?;
        let y3 = add(&y, &k2, 0.5 * h);
        let k3 = eval(&states, &derivs, t + 0.5 * h, &y3)?;
        let y4 = add(&y, &k3, h);
        let k4 = eval(&states, &derivs, t + h, &y4)?;
        let next: Vec<f64> = (0..y.len())
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepUnderflow { dt: h, horizon: t_end });
        }
        states.push(next);
        let fnext = eval(&states, &derivs, t + h, states.last().expect("pushed"))?;
        derivs.push(fnext);
    }
    Ok(Trajectory {
        t0: 0.0,
        t1: t_end,
        dt: h,
        tau: prob.tau,
        initial,
        states,
        derivs,
    })
}

/// Initial segment `s ↦ x(ωs)` of a computed orbit in original time.
pub fn orbit_segment(orbit: &BranchPoint) -> InitialFn {
    let x = orbit.profile.clone();
    let w = orbit.omega;
    Arc::new(move |s| x.eval(w * s))
}

/// Deviation of a trajectory from the periodic orbit it was started on.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub max_deviation: f64,
    /// Largest deviation over the first third of the horizon.
    pub early_deviation: f64,
    /// Largest deviation over the last third of the horizon.
    pub late_deviation: f64,
    /// Late deviation exceeds ten times the early one (and rounding level).
    pub diverging: bool,
}

/// Compares `traj` with `t ↦ x(ωt)` on `[0, horizon]` at the integrator nodes.
pub fn cross_check(traj: &Trajectory, orbit: &BranchPoint, horizon: f64) -> Result<CrossCheck> {
    let horizon = horizon.min(traj.t1);
    let mut max_dev = 0.0f64;
    let mut early = 0.0f64;
    let mut late = 0.0f64;
    for k in 0..traj.len() {
        let (t, y) = traj.node(k);
        if t > horizon + 1e-12 {
            break;
        }
        let x = orbit.profile.eval(orbit.omega * t);
        let d = y.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        max_dev = max_dev.max(d);
        if t <= horizon / 3.0 {
            early = early.max(d);
        }
        if t >= 2.0 * horizon / 3.0 {
            late = late.max(d);
        }
    }
    Ok(CrossCheck {
        max_deviation: max_dev,
        early_deviation: early,
        late_deviation: late,
        diverging: late > 10.0 * early.max(1e-9),
    })
}
