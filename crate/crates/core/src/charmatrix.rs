//! Characteristic matrix `K(λ, μ) v = λv - a(μ)[v e^{λ·}]` of the
//! linearization at an equilibrium, its imaginary roots and the quantities
//! that decide whether a Hopf branch emanates from them.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::{solve_equilibrium, ConstantSegment, FnSegment, ProblemDef};

type ActionFn = dyn Fn(&[f64], &[Complex64], Complex64) -> Result<Vec<Complex64>> + Send + Sync;

/// The linear functional `a(μ)` applied to exponential segments `v e^{λs}`.
#[derive(Clone)]
pub struct LinActionA {
    pub n: usize,
    pub nu: usize,
    action: Arc<ActionFn>,
    equilibrium: Option<Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>>,
}

impl std::fmt::Debug for LinActionA {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinActionA").field("n", &self.n).field("nu", &self.nu).finish()
    }
}

impl LinActionA {
    /// `action(μ, v, λ) = a(μ)[v e^{λ·}]`.
    pub fn from_fn(
        n: usize,
        nu: usize,
        action: impl Fn(&[f64], &[Complex64], Complex64) -> Result<Vec<Complex64>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            nu,
            action: Arc::new(action),
            equilibrium: None,
        }
    }

    /// Linearization of `prob` at its equilibrium, found by Newton from the origin.
    pub fn from_problem(prob: &ProblemDef) -> Self {
        let eq_prob = prob.clone();
        let equilibrium = Arc::new(move |mu: &[f64]| solve_equilibrium(&eq_prob, mu, None, 1e-13, 50));
        let eq = equilibrium.clone();
        let (n, nu) = (prob.n, prob.nu);
        let prob = prob.clone();
        let action = move |mu: &[f64], v: &[Complex64], lambda: Complex64| {
            let c = eq(mu)?;
            let n = prob.n;
            let base = ConstantSegment { value: c };
            let zero = ConstantSegment {
                value: vec![0.0; n],
            };
            let part = |re: bool| {
                let v = v.to_vec();
                FnSegment::new(n, prob.tau, move |s| {
                    let e = (lambda * s).exp();
                    v.iter()
                        .map(|vi| {
                            let z = vi * e;
                            if re {
                                z.re
                            } else {
                                z.im
                            }
                        })
                        .collect()
                })
            };
            let dr = prob.eval_derivative(&base, &zero, &part(true), mu)?;
            let di = prob.eval_derivative(&base, &zero, &part(false), mu)?;
            Ok(dr.iter().zip(&di).map(|(r, i)| Complex64::new(*r, *i)).collect())
        };
        Self {
            n,
            nu,
            action: Arc::new(action),
            equilibrium: Some(equilibrium),
        }
    }

    pub fn apply(&self, mu: &[f64], v: &[Complex64], lambda: Complex64) -> Result<Vec<Complex64>> {
        if mu.len() != self.nu || v.len() != self.n {
            return Err(Error::Dimension("linear action called with wrong sizes".into()));
        }
        (self.action)(mu, v, lambda)
    }

    /// Equilibrium the linearization is taken at, zero for closure-built actions.
    pub fn equilibrium(&self, mu: &[f64]) -> Result<Vec<f64>> {
        match &self.equilibrium {
            Some(e) => e(mu),
            None => Ok(vec![0.0; self.n]),
        }
    }
}

/// `K(λ, μ)` assembled column by column.
pub fn k_matrix(a: &LinActionA, lambda: Complex64, mu: &[f64]) -> Result<DMatrix<Complex64>> {
    let n = a.n;
    let mut k = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        let col = a.apply(mu, &e, lambda)?;
        for i in 0..n {
            k[(i, j)] = -col[i];
        }
        k[(j, j)] += lambda;
    }
    Ok(k)
}

pub fn det(k: &DMatrix<Complex64>) -> Complex64 {
    if k.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    k.clone().lu().determinant()
}

/// `K` with its `λ`- and `μ`-derivatives at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CharEval {
    pub lambda: Complex64,
    pub mu: Vec<f64>,
    pub k: DMatrix<Complex64>,
    pub dk_dlambda: DMatrix<Complex64>,
    pub dk_dmu: Vec<DMatrix<Complex64>>,
}

const LAMBDA_STEP: f64 = 1e-5;
const DET_STEP: f64 = 1e-7;

#[allow(non_snake_case)]
pub fn eval_K(a: &LinActionA, lambda: Complex64, mu: &[f64]) -> Result<CharEval> {
    let k = k_matrix(a, lambda, mu)?;
    let h = Complex64::new(LAMBDA_STEP, 0.0);
    let dk_dlambda = (k_matrix(a, lambda + h, mu)? - k_matrix(a, lambda - h, mu)?) / (2.0 * h);
    let mut dk_dmu = Vec::with_capacity(mu.len());
    for p in 0..mu.len() {
        let step = LAMBDA_STEP * mu[p].abs().max(1.0);
        let mut up = mu.to_vec();
        let mut dn = mu.to_vec();
        up[p] += step;
        dn[p] -= step;
        let d = (k_matrix(a, lambda, &up)? - k_matrix(a, lambda, &dn)?) / Complex64::new(2.0 * step, 0.0);
        dk_dmu.push(d);
    }
    Ok(CharEval {
        lambda,
        mu: mu.to_vec(),
        k,
        dk_dlambda,
        dk_dmu,
    })
}

fn det_at(a: &LinActionA, lambda: Complex64, mu: &[f64]) -> Result<Complex64> {
    Ok(det(&k_matrix(a, lambda, mu)?))
}

/// Newton iteration on `λ ↦ det K(λ, μ)` from `lambda0`.
pub fn find_root(a: &LinActionA, lambda0: Complex64, mu: &[f64]) -> Result<Complex64> {
    let h = Complex64::new(DET_STEP, 0.0);
    let mut lambda = lambda0;
    let mut d = det_at(a, lambda, mu)?;
    for _ in 0..50 {
        let dd = (det_at(a, lambda + h, mu)? - det_at(a, lambda - h, mu)?) / (2.0 * h);
        if dd.norm() == 0.0 || !dd.is_finite() {
            break;
        }
        let step = d / dd;
        lambda -= step;
        d = det_at(a, lambda, mu)?;
        if step.norm() <= 1e-15 * (1.0 + lambda.norm()) || d.norm() == 0.0 {
            break;
        }
    }
    let scale = det_at(a, lambda + 1.0, mu)?.norm().max(f64::MIN_POSITIVE);
    if d.norm() <= 1e-10 * scale && lambda.is_finite() {
        Ok(lambda)
    } else {
        Err(Error::RootNotConverged {
            start: format!("{lambda0}"),
            residual: d.norm(),
        })
    }
}

/// Right and left null directions of a numerically singular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NullVectors {
    /// Unit right null vector, largest component real and positive.
    pub v1: DVector<Complex64>,
    /// Unit left null vector (`w^H K ≈ 0`), same phase convention.
    pub w1_raw: DVector<Complex64>,
    /// Singular values in ascending order.
    pub singular_values: Vec<f64>,
}

fn fix_phase(v: DVector<Complex64>) -> DVector<Complex64> {
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bm), (i, z)| if z.norm() > bm { (i, z.norm()) } else { (bi, bm) });
    let z = v[imax];
    let nrm = v.norm();
    if z.norm() == 0.0 || nrm == 0.0 {
        return v;
    }
    let rot = z.conj() / z.norm();
    v.map(|c| c * rot / nrm)
}

pub fn null_vectors(k: &DMatrix<Complex64>) -> Result<NullVectors> {
    null_vectors_scaled(k, 0.0)
}

/// As [`null_vectors`], judging singularity against `max(σ_max, scale)`;
/// needed for `1×1` matrices, whose only singular value is also the largest.
pub fn null_vectors_scaled(k: &DMatrix<Complex64>, scale: f64) -> Result<NullVectors> {
    let n = k.nrows();
    if n == 0 || k.ncols() != n {
        return Err(Error::Dimension("null vectors need a non-empty square matrix".into()));
    }
    let svd = k.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^H");
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let (imin, smin) = sv
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bs), (i, s)| if s < bs { (i, s) } else { (bi, bs) });
    let smax = sv.iter().cloned().fold(0.0f64, f64::max).max(scale);
    if smin > 1e-6 * smax {
        return Err(Error::NoNullVector { ratio: smin / smax });
    }
    let v = DVector::from_iterator(n, vt.row(imin).iter().map(|z| z.conj()));
    let w = DVector::from_iterator(n, u.column(imin).iter().cloned());
    let mut sorted = sv.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(NullVectors {
        v1: fix_phase(v),
        w1_raw: fix_phase(w),
        singular_values: sorted,
    })
}

/// `w^H M v`.
pub fn bilinear(w: &DVector<Complex64>, m: &DMatrix<Complex64>, v: &DVector<Complex64>) -> Complex64 {
    w.dotc(&(m * v))
}

/// A verified imaginary root with the data needed to seed its branch.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfData {
    pub omega0: f64,
    pub mu0: Vec<f64>,
    /// Index of the parameter that was scanned.
    pub param: usize,
    pub v1: DVector<Complex64>,
    /// Normalized so that `w1^H ∂K/∂λ v1 = 1`.
    pub w1: DVector<Complex64>,
    /// `w1^H ∂K/∂μ v1` for the scanned parameter.
    pub c_mu: Complex64,
    /// `(k, |det K(ikω₀, μ₀)|)` for `k = 0, 2, …, 2N`.
    pub resonance_dets: Vec<(usize, f64)>,
    pub nonresonance_ok: bool,
    pub transversal_ok: bool,
    /// The two smallest singular values of `K(iω₀, μ₀)`.
    pub smallest_singular_values: [f64; 2],
    pub null_residual: f64,
    pub normalization_residual: f64,
    pub equilibrium: Vec<f64>,
}

/// Builds [`HopfData`] at an imaginary root `iω₀` for parameters `mu0`.
pub fn hopf_data(a: &LinActionA, omega0: f64, mu0: &[f64], param: usize, n_harmonics: usize) -> Result<HopfData> {
    let lambda = Complex64::new(0.0, omega0);
    let ev = eval_K(a, lambda, mu0)?;
    let scale = k_matrix(a, lambda + 1.0, mu0)?.norm();
    let nv = null_vectors_scaled(&ev.k, scale)?;
    let v1 = nv.v1;
    let denom = bilinear(&nv.w1_raw, &ev.dk_dlambda, &v1);
    if denom.norm() == 0.0 {
        return Err(Error::Invalid("left and right null vectors are orthogonal under ∂K/∂λ".into()));
    }
    // w1 = w_raw / conj(d) gives w1^H ∂K/∂λ v1 = d / d = 1.
    let w1 = nv.w1_raw.map(|z| z / denom.conj());
    let c_mu = bilinear(&w1, &ev.dk_dmu[param], &v1);
    let mut resonance_dets = Vec::new();
    let mut nonresonance_ok = true;
    for k in std::iter::once(0).chain(2..=2 * n_harmonics) {
        let lk = Complex64::new(0.0, k as f64 * omega0);
        let d = det(&k_matrix(a, lk, mu0)?).norm();
        let scale = (1.0 + lk.norm()).powi(a.n as i32);
        if d <= 1e-8 * scale {
            nonresonance_ok = false;
        }
        resonance_dets.push((k, d));
    }
    let null_residual = (&ev.k * &v1).norm();
    let normalization_residual = (bilinear(&w1, &ev.dk_dlambda, &v1) - 1.0).norm();
    let s = &nv.singular_values;
    Ok(HopfData {
        omega0,
        mu0: mu0.to_vec(),
        param,
        v1,
        w1,
        c_mu,
        resonance_dets,
        nonresonance_ok,
        transversal_ok: c_mu.re.abs() > 1e-8,
        smallest_singular_values: [s[0], *s.get(1).unwrap_or(&f64::INFINITY)],
        null_residual,
        normalization_residual,
        equilibrium: a.equilibrium(mu0)?,
    })
}

/// Grid and ranges of a Hopf scan.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfScan {
    /// Parameter vector; the scanned entry is overwritten.
    pub mu: Vec<f64>,
    pub param: usize,
    pub mu_range: (f64, f64),
    pub mu_points: usize,
    pub omega_range: (f64, f64),
    pub omega_points: usize,
    pub n_harmonics: usize,
}

fn with_param(mu: &[f64], p: usize, v: f64) -> Vec<f64> {
    let mut m = mu.to_vec();
    m[p] = v;
    m
}

// Roots near the imaginary axis from local minima of |det K(iω)|.
fn roots_near_axis(a: &LinActionA, mu: &[f64], scan: &HopfScan) -> Vec<Complex64> {
    let (w0, w1) = scan.omega_range;
    let count = scan.omega_points.max(3);
    let ws: Vec<f64> = (0..count)
        .map(|j| w0 + (w1 - w0) * j as f64 / (count - 1) as f64)
        .collect();
    let vals: Vec<f64> = ws
        .iter()
        .map(|&w| det_at(a, Complex64::new(0.0, w), mu).map(|d| d.norm()).unwrap_or(f64::INFINITY))
        .collect();
    let mut roots: Vec<Complex64> = Vec::new();
    for j in 0..count {
        let left = if j == 0 { f64::INFINITY } else { vals[j - 1] };
        let right = if j + 1 == count { f64::INFINITY } else { vals[j + 1] };
        if vals[j] <= left && vals[j] <= right && vals[j].is_finite() {
            if let Ok(r) = find_root(a, Complex64::new(0.0, ws[j]), mu) {
                if r.im > 0.0 && !roots.iter().any(|q| (q - r).norm() < 1e-6) {
                    roots.push(r);
                }
            }
        }
    }
    roots
}

// Illinois false position on μ ↦ Re λ(μ) over a sign change.
fn refine_crossing(
    a: &LinActionA,
    scan: &HopfScan,
    (mut ma, mut la): (f64, Complex64),
    (mut mb, mut lb): (f64, Complex64),
) -> Option<(f64, Complex64)> {
    let (mut fa, mut fb) = (la.re, lb.re);
    let mut side = 0;
    for _ in 0..100 {
        let mc = (ma * fb - mb * fa) / (fb - fa);
        let t = (mc - ma) / (mb - ma);
        let guess = la + (lb - la) * t;
        let lc = find_root(a, guess, &with_param(&scan.mu, scan.param, mc)).ok()?;
        let fc = lc.re;
        if fc == 0.0 || (mb - ma).abs() < 1e-14 * (1.0 + mc.abs()) || fc.abs() < 1e-15 {
            return Some((mc, lc));
        }
        if (fc > 0.0) == (fb > 0.0) {
            mb = mc;
            lb = lc;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            ma = mc;
            la = lc;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    let (m, l) = if fa.abs() < fb.abs() { (ma, la) } else { (mb, lb) };
    Some((m, l))
}

/// Imaginary-axis crossings of characteristic roots over a parameter interval.
pub fn hopf_scan(a: &LinActionA, scan: &HopfScan) -> Result<Vec<HopfData>> {
    if scan.param >= a.nu || scan.mu.len() != a.nu {
        return Err(Error::Invalid("scan parameter index out of range".into()));
    }
    if !(scan.omega_range.0 > 0.0 && scan.omega_range.1 > scan.omega_range.0) {
        return Err(Error::Invalid("frequency range must be positive and increasing".into()));
    }
    let count = scan.mu_points.max(2);
    let (m0, m1) = scan.mu_range;
    let mus: Vec<f64> = (0..count)
        .map(|j| m0 + (m1 - m0) * j as f64 / (count - 1) as f64)
        .collect();
    let roots: Vec<Vec<Complex64>> = mus
        .par_iter()
        .map(|&m| roots_near_axis(a, &with_param(&scan.mu, scan.param, m), scan))
        .collect();

    let mut found: Vec<HopfData> = Vec::new();
    for j in 0..count - 1 {
        let next_mu = with_param(&scan.mu, scan.param, mus[j + 1]);
        for &r in &roots[j] {
            let Ok(r2) = find_root(a, r, &next_mu) else { continue };
            if (r.re > 0.0) == (r2.re > 0.0) && r.re != 0.0 {
                continue;
            }
            let Some((mc, lc)) = refine_crossing(a, scan, (mus[j], r), (mus[j + 1], r2)) else {
                continue;
            };
            let mu0 = with_param(&scan.mu, scan.param, mc);
            let dup = found
                .iter()
                .any(|h| (h.mu0[scan.param] - mc).abs() < 1e-6 && (h.omega0 - lc.im).abs() < 1e-6);
            if dup {
                continue;
            }
            if let Ok(h) = hopf_data(a, lc.im, &mu0, scan.param, scan.n_harmonics) {
                found.push(h);
            }
        }
    }
    found.sort_by(|x, y| x.mu0[scan.param].total_cmp(&y.mu0[scan.param]));
    Ok(found)
}
