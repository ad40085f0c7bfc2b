//! Right-hand-side functionals `f(x_t, μ)` and the superposition operator
//! `F(x)(t) = (1/ω) f(s ↦ x(t + ωs), μ)` acting on periodic functions.

mod builtin;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fourier::{analyze, differentiate, grid, PeriodicFn};

pub use builtin::{builtin, BUILTIN_NAMES};

/// Relative slack when checking that an offset lies in `[-τ, 0]`.
const OFFSET_SLACK: f64 = 1e-12;

/// A history segment: the state at time offsets `s ∈ [-τ, 0]`.
pub trait Segment: Sync {
    fn dim(&self) -> usize;

    fn at(&self, s: f64) -> Result<Vec<f64>>;

    /// Length of the admissible past, `None` when the segment is defined for all offsets.
    fn horizon(&self) -> Option<f64>;

    fn component(&self, i: usize, s: f64) -> Result<f64> {
        Ok(self.at(s)?[i])
    }
}

fn check_offset(s: f64, horizon: f64) -> Result<()> {
    let slack = OFFSET_SLACK * (1.0 + horizon);
    if s > slack || s < -horizon - slack || s.is_nan() {
        Err(Error::Domain { offset: s, horizon })
    } else {
        Ok(())
    }
}

/// Constant history, e.g. an equilibrium.
#[derive(Debug, Clone)]
pub struct ConstantSegment {
    pub value: Vec<f64>,
}

impl Segment for ConstantSegment {
    fn dim(&self) -> usize {
        self.value.len()
    }

    fn at(&self, _s: f64) -> Result<Vec<f64>> {
        Ok(self.value.clone())
    }

    fn horizon(&self) -> Option<f64> {
        None
    }
}

/// `s ↦ scale · x(t + ωs)` on `[-horizon, 0]`.
#[derive(Debug, Clone)]
pub struct PeriodicSegment<'a> {
    pub x: &'a PeriodicFn,
    pub t: f64,
    pub omega: f64,
    pub horizon: f64,
    pub scale: f64,
}

impl Segment for PeriodicSegment<'_> {
    fn dim(&self) -> usize {
        self.x.dim()
    }

    fn at(&self, s: f64) -> Result<Vec<f64>> {
        check_offset(s, self.horizon)?;
        let mut v = self.x.eval(self.t + self.omega * s);
        if self.scale != 1.0 {
            v.iter_mut().for_each(|c| *c *= self.scale);
        }
        Ok(v)
    }

    fn horizon(&self) -> Option<f64> {
        Some(self.horizon)
    }
}

/// Segment backed by a closure.
pub struct FnSegment<'a> {
    pub dim: usize,
    pub horizon: f64,
    pub f: Box<dyn Fn(f64) -> Vec<f64> + Sync + 'a>,
}

impl<'a> FnSegment<'a> {
    pub fn new(dim: usize, horizon: f64, f: impl Fn(f64) -> Vec<f64> + Sync + 'a) -> Self {
        Self {
            dim,
            horizon,
            f: Box::new(f),
        }
    }
}

impl Segment for FnSegment<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, s: f64) -> Result<Vec<f64>> {
        check_offset(s, self.horizon)?;
        Ok((self.f)(s))
    }

    fn horizon(&self) -> Option<f64> {
        Some(self.horizon)
    }
}

/// `(segment, params) -> f`.
pub type RhsFn = Arc<dyn Fn(&dyn Segment, &[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// `(base, base derivative, deviation, params) -> ∂f(base)[deviation]`.
pub type DRhsFn =
    Arc<dyn Fn(&dyn Segment, &dyn Segment, &dyn Segment, &[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// A functional differential equation `ẋ(t) = f(x_t, μ)`.
#[derive(Clone)]
pub struct ProblemDef {
    pub name: String,
    pub n: usize,
    pub nu: usize,
    pub tau: f64,
    pub param_names: Vec<String>,
    pub default_params: Vec<f64>,
    pub rhs: RhsFn,
    pub drhs: Option<DRhsFn>,
    /// Use central differences of `rhs` when `drhs` is missing.
    pub fd_fallback: bool,
}

impl fmt::Debug for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDef")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("nu", &self.nu)
            .field("tau", &self.tau)
            .field("param_names", &self.param_names)
            .field("default_params", &self.default_params)
            .field("has_drhs", &self.drhs.is_some())
            .field("fd_fallback", &self.fd_fallback)
            .finish()
    }
}

impl ProblemDef {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        nu: usize,
        tau: f64,
        rhs: impl Fn(&dyn Segment, &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            n,
            nu,
            tau,
            param_names: (0..nu).map(|i| format!("mu{i}")).collect(),
            default_params: vec![0.0; nu],
            rhs: Arc::new(rhs),
            drhs: None,
            fd_fallback: true,
        }
    }

    pub fn with_derivative(
        mut self,
        drhs: impl Fn(&dyn Segment, &dyn Segment, &dyn Segment, &[f64]) -> Result<Vec<f64>>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        self.drhs = Some(Arc::new(drhs));
        self
    }

    pub fn with_params(mut self, names: &[&str], defaults: &[f64]) -> Self {
        self.param_names = names.iter().map(|s| s.to_string()).collect();
        self.default_params = defaults.to_vec();
        self
    }

    pub fn with_fd_fallback(mut self, on: bool) -> Self {
        self.fd_fallback = on;
        self
    }

    /// `ẋ = 0`: every constant is an equilibrium and every `p` a fixed point.
    pub fn zero(n: usize, nu: usize) -> Self {
        Self::new("zero", n, nu, 1.0, move |_, _| Ok(vec![0.0; n]))
            .with_derivative(move |_, _, _, _| Ok(vec![0.0; n]))
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|p| p == name)
    }

    pub fn eval(&self, seg: &dyn Segment, params: &[f64]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        let v = (self.rhs)(seg, params)?;
        if v.len() != self.n {
            return Err(Error::Dimension(format!(
                "right-hand side of `{}` returned {} components, expected {}",
                self.name,
                v.len(),
                self.n
            )));
        }
        Ok(v)
    }

    /// `∂f(base)[dev]`, analytic when available, else central differences.
    pub fn eval_derivative(
        &self,
        base: &dyn Segment,
        base_deriv: &dyn Segment,
        dev: &dyn Segment,
        params: &[f64],
    ) -> Result<Vec<f64>> {
        self.check_params(params)?;
        if let Some(d) = &self.drhs {
            return d(base, base_deriv, dev, params);
        }
        if !self.fd_fallback {
            return Err(Error::NoDerivative(self.name.clone()));
        }
        let h = 1e-6;
        let plus = ShiftedSegment {
            base,
            dev,
            h,
        };
        let minus = ShiftedSegment {
            base,
            dev,
            h: -h,
        };
        let a = self.eval(&plus, params)?;
        let b = self.eval(&minus, params)?;
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.nu {
            return Err(Error::Dimension(format!(
                "problem `{}` takes {} parameters, got {}",
                self.name,
                self.nu,
                params.len()
            )));
        }
        Ok(())
    }
}

struct ShiftedSegment<'a> {
    base: &'a dyn Segment,
    dev: &'a dyn Segment,
    h: f64,
}

impl Segment for ShiftedSegment<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn at(&self, s: f64) -> Result<Vec<f64>> {
        let a = self.base.at(s)?;
        let b = self.dev.at(s)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x + self.h * y).collect())
    }

    fn horizon(&self) -> Option<f64> {
        self.base.horizon()
    }
}

fn wrap_at(t: f64, e: Error) -> Error {
    match e {
        Error::DomainAt { .. } => e,
        other => Error::DomainAt {
            t,
            message: other.to_string(),
        },
    }
}

fn collect_grid(prob: &ProblemDef, modes: usize, mut value: impl FnMut(f64) -> Result<Vec<f64>>) -> Result<PeriodicFn> {
    let pts = grid(modes);
    let width = pts.len();
    let mut samples = vec![0.0; prob.n * width];
    for (j, &t) in pts.iter().enumerate() {
        let v = value(t).map_err(|e| wrap_at(t, e))?;
        if v.len() != prob.n {
            return Err(Error::Dimension(format!(
                "`{}` returned {} components, expected {}",
                prob.name,
                v.len(),
                prob.n
            )));
        }
        for i in 0..prob.n {
            samples[i * width + j] = v[i];
        }
    }
    analyze(prob.n, &samples)
}

fn check_state(prob: &ProblemDef, x: &PeriodicFn, omega: f64) -> Result<()> {
    if x.dim() != prob.n {
        return Err(Error::Dimension(format!(
            "state has {} components, `{}` has {}",
            x.dim(),
            prob.name,
            prob.n
        )));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Invalid(format!("frequency must be positive, got {omega}")));
    }
    Ok(())
}

/// `F(x)` interpolated on the collocation grid of `x.modes()`.
#[allow(non_snake_case)]
pub fn apply_F(prob: &ProblemDef, x: &PeriodicFn, params: &[f64], omega: f64) -> Result<PeriodicFn> {
    check_state(prob, x, omega)?;
    collect_grid(prob, x.modes(), |t| {
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
    })
}

/// `∂F(x)[y]` on the collocation grid of `x.modes()`.
#[allow(non_snake_case)]
pub fn apply_dF(
    prob: &ProblemDef,
    x: &PeriodicFn,
    y: &PeriodicFn,
    params: &[f64],
    omega: f64,
) -> Result<PeriodicFn> {
    check_state(prob, x, omega)?;
    if y.dim() != prob.n {
        return Err(Error::Dimension("deviation dimension mismatch".into()));
    }
    if prob.drhs.is_none() {
        if !prob.fd_fallback {
            return Err(Error::NoDerivative(prob.name.clone()));
        }
        return directional_derivative(prob, x, y, params, omega);
    }
    let dx = differentiate(x);
    let modes = x.modes();
    let y = y.resized(modes);
    collect_grid(prob, modes, |t| {
        let base = PeriodicSegment {
            x,
            t,
            omega,
            horizon: prob.tau,
            scale: 1.0,
        };
        let deriv = PeriodicSegment {
            x: &dx,
            t,
            omega,
            horizon: prob.tau,
            scale: omega,
        };
        let dev = PeriodicSegment {
            x: &y,
            t,
            omega,
            horizon: prob.tau,
            scale: 1.0,
        };
        let mut v = prob.eval_derivative(&base, &deriv, &dev, params)?;
        v.iter_mut().for_each(|c| *c /= omega);
        Ok(v)
    })
}

/// Central difference `(F(x + hy) - F(x - hy)) / 2h` with `h·‖y‖ = 1e-6·max(1, ‖x‖)`.
pub fn directional_derivative(
    prob: &ProblemDef,
    x: &PeriodicFn,
    y: &PeriodicFn,
    params: &[f64],
    omega: f64,
) -> Result<PeriodicFn> {
    let ynorm = y.sup_norm();
    if ynorm == 0.0 {
        return Ok(PeriodicFn::zeros(prob.n, x.modes()));
    }
    let h = 1e-6 * x.sup_norm().max(1.0) / ynorm;
    let y = y.resized(x.modes());
    let plus = apply_F(prob, &(x + &(&y * h)), params, omega)?;
    let minus = apply_F(prob, &(x - &(&y * h)), params, omega)?;
    Ok(&(&plus - &minus) * (0.5 / h))
}

/// A problem with frequency and parameters appended as frozen state components.
#[derive(Debug, Clone)]
pub struct ExtendedProblem {
    pub base: ProblemDef,
    pub omega_cutoff: f64,
}

/// Wraps `prob` for solves with free frequency and parameters.
pub fn extend_autonomous(prob: ProblemDef, omega_cutoff: f64) -> Result<ExtendedProblem> {
    if !(omega_cutoff > 0.0) {
        return Err(Error::Invalid(format!(
            "frequency cut-off must be positive, got {omega_cutoff}"
        )));
    }
    Ok(ExtendedProblem {
        base: prob,
        omega_cutoff,
    })
}

impl ExtendedProblem {
    /// Identity above the cut-off, `ω_c·exp(ω/ω_c - 1)` below.
    pub fn cut(&self, omega: f64) -> f64 {
        let c = self.omega_cutoff;
        if omega >= c {
            omega
        } else {
            c * (omega / c - 1.0).exp()
        }
    }

    pub fn dim(&self) -> usize {
        self.base.n + 1 + self.base.nu
    }

    /// Right-hand side on a segment of the extended state `(x, ω, μ)` in rescaled time.
    pub fn rhs_ext(&self, seg: &dyn Segment) -> Result<Vec<f64>> {
        let n = self.base.n;
        if seg.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "extended state has {} components, got {}",
                self.dim(),
                seg.dim()
            )));
        }
        let now = seg.at(0.0)?;
        let w = self.cut(now[n]);
        let params = now[n + 1..].to_vec();
        let horizon = self.base.tau;
        let inner = FnSegment::new(n, horizon, |s| {
            seg.at(w * s)
                .map(|v| v[..n].to_vec())
                .unwrap_or_else(|_| vec![f64::NAN; n])
        });
        let mut out = self.base.eval(&inner, &params)?;
        if out.iter().any(|v| v.is_nan()) {
            return Err(Error::Invalid("extended segment does not cover the delay horizon".into()));
        }
        out.iter_mut().for_each(|v| *v /= w);
        out.extend(std::iter::repeat(0.0).take(1 + self.base.nu));
        Ok(out)
    }

    #[allow(non_snake_case)]
    pub fn apply_F(&self, x: &PeriodicFn, params: &[f64], omega: f64) -> Result<PeriodicFn> {
        apply_F(&self.base, x, params, self.cut(omega))
    }

    #[allow(non_snake_case)]
    pub fn apply_dF(&self, x: &PeriodicFn, y: &PeriodicFn, params: &[f64], omega: f64) -> Result<PeriodicFn> {
        apply_dF(&self.base, x, y, params, self.cut(omega))
    }
}

/// Steady states: Newton on `f(c, μ) = 0` over constant histories.
pub fn solve_equilibrium(
    prob: &ProblemDef,
    params: &[f64],
    guess: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = prob.n;
    let mut c = guess.map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let zero = ConstantSegment {
        value: vec![0.0; n],
    };
    for it in 0..=max_iter {
        let base = ConstantSegment { value: c.clone() };
        let r = prob.eval(&base, params)?;
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn <= tol {
            return Ok(c);
        }
        if it == max_iter {
            return Err(Error::NewtonMaxIter {
                iterations: max_iter,
                residual: rn,
            });
        }
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = prob.eval_derivative(&base, &zero, &ConstantSegment { value: e }, params)?;
            for i in 0..n {
                jac[(i, j)] = col[i];
            }
        }
        let rhs = nalgebra::DVector::from_vec(r);
        let step = jac.clone().lu().solve(&rhs).ok_or_else(|| Error::Singular {
            condition: crate::linalg::condition_estimate(&jac),
        })?;
        for i in 0..n {
            c[i] -= step[i];
        }
    }
    unreachable!("loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sdd() -> ProblemDef {
        builtin("sdd_example").unwrap()
    }

    fn smooth_random(rng: &mut ChaCha8Rng, modes: usize, mean: f64, amp: f64) -> PeriodicFn {
        let mut x = PeriodicFn::zeros(1, modes);
        x.set_coeff(0, 0, 2.0 * mean);
        for k in 1..=modes as isize {
            let s = amp / (k * k) as f64;
            x.set_coeff(0, k, rng.gen_range(-s..s));
            x.set_coeff(0, -k, rng.gen_range(-s..s));
        }
        x
    }

    #[test]
    fn constant_state_gives_constant_field() {
        let x = PeriodicFn::constant(&[1.2], 8);
        let f = apply_F(&sdd(), &x, &[2.0], 1.0).unwrap();
        let want = PeriodicFn::constant(&[0.8], 8);
        assert!((&f - &want).coeff_norm() < 1e-14);
    }

    #[test]
    fn closed_form_substitution_at_zero() {
        let mu = PI / 2.0;
        let x = PeriodicFn::from_fn(1, 8, |t| vec![mu + 0.1 * t.sin()]).unwrap();
        let f = apply_F(&sdd(), &x, &[mu], 1.0).unwrap();
        // x(0) = π/2, x(-π/2) = π/2 - 0.1. t = 0 is a grid point.
        assert!((f.eval(0.0)[0] - 0.1).abs() < 1e-13);
    }

    #[test]
    fn sampling_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = smooth_random(&mut rng, 8, 1.5, 0.2);
        let a = apply_F(&sdd(), &x, &[1.5], 1.1).unwrap();
        let b = apply_F(&sdd(), &x, &[1.5], 1.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sdd_derivative_hand_value() {
        let mu = PI / 2.0;
        let x = PeriodicFn::constant(&[mu], 8);
        let y = PeriodicFn::from_fn(1, 8, |t| vec![t.sin()]).unwrap();
        let d = apply_dF(&sdd(), &x, &y, &[mu], 1.0).unwrap();
        assert!((d.eval(0.0)[0] - 1.0).abs() < 1e-13);
        let z = apply_dF(&sdd(), &x, &PeriodicFn::zeros(1, 8), &[mu], 1.0).unwrap();
        assert_eq!(z.coeff_norm(), 0.0);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for name in BUILTIN_NAMES {
            let prob = builtin(name).unwrap();
            let params = prob.default_params.clone();
            for _ in 0..3 {
                let x = match *name {
                    "cutting_baumgarte" => {
                        let mut x = PeriodicFn::zeros(3, 8);
                        for i in 0..2 {
                            let r = smooth_random(&mut rng, 8, 0.0, 0.05);
                            for k in -8..=8 {
                                x.set_coeff(i, k, r.coeff(0, k));
                            }
                        }
                        x.set_coeff(2, 0, 2.0 * params[1]);
                        x
                    }
                    _ => smooth_random(&mut rng, 8, 1.5, 0.2),
                };
                let y = smooth_random(&mut rng, 8, 0.0, 1.0).resized(8);
                let y = if prob.n == 1 {
                    y
                } else {
                    let mut yy = PeriodicFn::zeros(prob.n, 8);
                    for i in 0..prob.n {
                        let r = smooth_random(&mut rng, 8, 0.1, 1.0);
                        for k in -8..=8 {
                            yy.set_coeff(i, k, r.coeff(0, k));
                        }
                    }
                    yy
                };
                let omega = 1.0 + 0.1 * rng.gen::<f64>();
                let d = apply_dF(&prob, &x, &y, &params, omega).unwrap();
                let h = 1e-6;
                let fp = apply_F(&prob, &(&x + &(&y * h)), &params, omega).unwrap();
                let fm = apply_F(&prob, &(&x - &(&y * h)), &params, omega).unwrap();
                let fd = &(&fp - &fm) * (0.5 / h);
                let err = (&d - &fd).sup_norm();
                assert!(err < 1e-6, "{name}: {err}");
            }
        }
    }

    #[test]
    fn fallback_derivative_is_used_without_drhs() {
        let mut prob = sdd();
        prob.drhs = None;
        let x = PeriodicFn::constant(&[PI / 2.0], 8);
        let y = PeriodicFn::from_fn(1, 8, |t| vec![t.sin()]).unwrap();
        let d = apply_dF(&prob, &x, &y, &[PI / 2.0], 1.0).unwrap();
        assert!((d.eval(0.0)[0] - 1.0).abs() < 1e-6);
        prob.fd_fallback = false;
        assert_eq!(
            apply_dF(&prob, &x, &y, &[PI / 2.0], 1.0),
            Err(Error::NoDerivative("sdd_example".into()))
        );
    }

    #[test]
    fn shift_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prob = sdd();
        for _ in 0..5 {
            // Band-limited state on an oversampled grid, as inside the solver.
            let x = smooth_random(&mut rng, 4, 1.5, 0.1).resized(16);
            let t = rng.gen_range(-3.0..3.0);
            let a = apply_F(&prob, &crate::fourier::shift(&x, t), &[1.6], 1.0).unwrap();
            let b = crate::fourier::shift(&apply_F(&prob, &x, &[1.6], 1.0).unwrap(), t);
            let err = (&a - &b).sup_norm();
            assert!(err < 1e-8, "{err}");
        }
        // Shifts by grid multiples commute exactly.
        let x = smooth_random(&mut rng, 8, 1.5, 0.2);
        let t = 2.0 * PI * 3.0 / 17.0;
        let a = apply_F(&prob, &crate::fourier::shift(&x, t), &[1.6], 1.0).unwrap();
        let b = crate::fourier::shift(&apply_F(&prob, &x, &[1.6], 1.0).unwrap(), t);
        assert!((&a - &b).sup_norm() < 1e-10);
    }

    #[test]
    fn domain_violation_names_the_time() {
        let x = PeriodicFn::from_fn(1, 4, |t| vec![0.5 + t.cos()]).unwrap();
        match apply_F(&sdd(), &x, &[1.0], 1.0) {
            Err(Error::DomainAt { t, .. }) => assert!(t.abs() > 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extension_freezes_frequency_and_parameters() {
        let ext = extend_autonomous(sdd(), 0.5).unwrap();
        let seg = FnSegment::new(3, 50.0, |s| vec![1.0 + 0.1 * s.sin(), 1.3, 1.7]);
        let v = ext.rhs_ext(&seg).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(&v[1..], &[0.0, 0.0]);
        assert_eq!(ext.cut(1.0), 1.0);
        assert!(ext.cut(-1.0) > 0.0);
        assert!((ext.cut(0.5 - 1e-9) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn equilibrium_of_sdd_is_mu() {
        for mu in [-1.0, 0.5, 1.0, 3.0] {
            let c = solve_equilibrium(&sdd(), &[mu], None, 1e-14, 5).unwrap();
            assert_eq!(c, vec![mu]);
        }
    }
}
