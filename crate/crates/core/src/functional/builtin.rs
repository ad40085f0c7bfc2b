use super::{ProblemDef, Segment};
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: &[&str] = &["sdd_example", "cutting_baumgarte", "const_delay_linear"];

/// Looks up a built-in problem by name.
pub fn builtin(name: &str) -> Result<ProblemDef> {
    match name {
        "sdd_example" => Ok(sdd_example()),
        "cutting_baumgarte" => Ok(cutting_baumgarte()),
        "const_delay_linear" => Ok(const_delay_linear()),
        _ => Err(Error::UnknownProblem {
            name: name.to_string(),
            available: BUILTIN_NAMES.join(", "),
        }),
    }
}

// Lookback x(0) must stay inside (0, τ) on bounded segments.
fn sdd_lag(u: &dyn Segment) -> Result<f64> {
    let lag = u.component(0, 0.0)?;
    if let Some(h) = u.horizon() {
        if !(lag > 0.0 && lag < h) {
            return Err(Error::Domain {
                offset: -lag,
                horizon: h,
            });
        }
    }
    Ok(lag)
}

/// `ẋ(t) = μ - x(t - x(t))`.
fn sdd_example() -> ProblemDef {
    ProblemDef::new("sdd_example", 1, 1, 5.0, |u, p| {
        let lag = sdd_lag(u)?;
        Ok(vec![p[0] - u.component(0, -lag)?])
    })
    .with_params(&["mu"], &[std::f64::consts::FRAC_PI_2])
    .with_derivative(|u, du, v, _p| {
        let lag = sdd_lag(u)?;
        Ok(vec![du.component(0, -lag)? * v.component(0, 0.0)? - v.component(0, -lag)?])
    })
}

/// `ẋ(t) = -x(t - μ)`.
fn const_delay_linear() -> ProblemDef {
    ProblemDef::new("const_delay_linear", 1, 1, 5.0, |u, p| {
        Ok(vec![-u.component(0, -p[0])?])
    })
    .with_params(&["mu"], &[std::f64::consts::FRAC_PI_2])
    .with_derivative(|_u, _du, v, p| Ok(vec![-v.component(0, -p[0])?]))
}

struct Cutting {
    x: f64,
    v: f64,
    tau: f64,
    xd: f64,
    vd: f64,
}

fn cutting_state(u: &dyn Segment) -> Result<Cutting> {
    let now = u.at(0.0)?;
    let tau = now[2];
    if let Some(h) = u.horizon() {
        if !(tau > 0.0 && tau < h) {
            return Err(Error::Domain {
                offset: -tau,
                horizon: h,
            });
        }
    }
    let past = u.at(-tau)?;
    Ok(Cutting {
        x: now[0],
        v: now[1],
        tau,
        xd: past[0],
        vd: past[1],
    })
}

fn cutting_denominator(b: f64, vd: f64) -> Result<f64> {
    let den = 1.0 + b * vd;
    if den.abs() < 1e-12 {
        return Err(Error::Invalid(
            "implicit delay equation is singular (1 + b·v(t-τ) = 0)".into(),
        ));
    }
    Ok(den)
}

/// Regenerative cutting with delay defined by `τ = a - b·x(t) + b·x(t-τ)`,
/// replaced by its Baumgarte-stabilised differential form.
///
/// State `(x, v, τ)`, parameters `[k, a, b, zeta]`:
/// `ẋ = v`, `v̇ = -2ζv - x - k(x - x(t-τ))`,
/// `τ̇ = (-b·v + b·v(t-τ) - d) / (1 + b·v(t-τ))` with defect
/// `d = τ - a + b·x - b·x(t-τ)`, so that `ḋ = -d`.
fn cutting_baumgarte() -> ProblemDef {
    ProblemDef::new("cutting_baumgarte", 3, 4, 4.0, |u, p| {
        let (k, a, b, zeta) = (p[0], p[1], p[2], p[3]);
        let s = cutting_state(u)?;
        let den = cutting_denominator(b, s.vd)?;
        let d = s.tau - a + b * s.x - b * s.xd;
        Ok(vec![
            s.v,
            -2.0 * zeta * s.v - s.x - k * (s.x - s.xd),
            (-b * s.v + b * s.vd - d) / den,
        ])
    })
    .with_params(&["k", "a", "b", "zeta"], &[0.5, 1.0, 0.1, 0.1])
    .with_derivative(|u, du, w, p| {
        let (k, a, b, zeta) = (p[0], p[1], p[2], p[3]);
        let s = cutting_state(u)?;
        let den = cutting_denominator(b, s.vd)?;
        let w0 = w.at(0.0)?;
        let wd = w.at(-s.tau)?;
        let dud = du.at(-s.tau)?;
        // Moving the lookback point contributes -u'(-τ)·δτ.
        let dxd = wd[0] - dud[0] * w0[2];
        let dvd = wd[1] - dud[1] * w0[2];
        let d = s.tau - a + b * s.x - b * s.xd;
        let num = -b * s.v + b * s.vd - d;
        let dd = w0[2] + b * w0[0] - b * dxd;
        let dnum = -b * w0[1] + b * dvd - dd;
        let dden = b * dvd;
        Ok(vec![
            w0[1],
            -2.0 * zeta * w0[1] - (1.0 + k) * w0[0] + k * dxd,
            (dnum * den - num * dden) / (den * den),
        ])
    })
}
