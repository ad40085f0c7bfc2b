//! Empirical sup-norm of the operator `Q_N L`.
//!
//! The estimator starts from random trigonometric polynomials and improves
//! each start with a sign-ascent step: for the time `t*` where `|Q_N L x|`
//! peaks, the functional `x ↦ (Q_N L x)(t*)` is integration against a kernel
//! `κ`, and the Fejér-smoothed `sign(κ)` is a near-optimal unit input.

use rand::Rng;

use super::{qn_antiderivative, refined_count, PeriodicFn};

const ASCENT_ROUNDS: usize = 1;

/// Degree of the test polynomials used for cut-off `harmonics`.
pub fn probe_degree(harmonics: usize) -> usize {
    (16 * harmonics).max(1024)
}

/// Lower estimate of `‖Q_N L‖` on sup-normed continuous functions.
pub fn qnl_norm_estimate<R: Rng + ?Sized>(harmonics: usize, trials: usize, rng: &mut R) -> f64 {
    let degree = probe_degree(harmonics);
    let count = refined_count(degree);
    let mut best = 0.0f64;
    for _ in 0..trials.max(1) {
        let coeffs = (0..2 * degree + 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut x = PeriodicFn::new(1, degree, coeffs).expect("consistent sizes");
        for round in 0..=ASCENT_ROUNDS {
            let (ratio, t_star, sign) = peak_ratio(&x, harmonics, count);
            best = best.max(ratio);
            if round == ASCENT_ROUNDS {
                break;
            }
            x = sign_ascent(harmonics, degree, count, t_star, sign);
        }
    }
    best
}

fn peak_ratio(x: &PeriodicFn, harmonics: usize, count: usize) -> (f64, f64, f64) {
    let xs = x.sample(count);
    let ys = qn_antiderivative(x, harmonics).sample(count);
    let x_sup = xs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (j, y) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(j, y)| (j, *y))
        .unwrap_or((0, 0.0));
    let t = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / count as f64;
    let ratio = if x_sup > 0.0 { y.abs() / x_sup } else { 0.0 };
    (ratio, t, y.signum())
}

fn sign_ascent(harmonics: usize, degree: usize, count: usize, t_star: f64, sign: f64) -> PeriodicFn {
    let mut kernel = PeriodicFn::zeros(1, degree);
    for k in harmonics + 1..=degree {
        let kf = k as f64;
        let (s, c) = (kf * t_star).sin_cos();
        kernel.set_coeff(0, k as isize, s / kf);
        kernel.set_coeff(0, -(k as isize), -c / kf);
    }
    let signs: Vec<f64> = kernel
        .sample(count)
        .into_iter()
        .map(|v| if v * sign >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    let mut x = super::analyze_grid(1, &signs, degree, -std::f64::consts::PI)
        .expect("refined grid resolves the probe degree");
    for k in 1..=degree {
        let w = 1.0 - k as f64 / (degree + 1) as f64;
        let ki = k as isize;
        x.set_coeff(0, ki, w * x.coeff(0, ki));
        x.set_coeff(0, -ki, w * x.coeff(0, -ki));
    }
    x
}

/// Least-squares fit of `estimate ≈ C·log N / N` through the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub c_fit: f64,
    /// Largest relative excess `estimate / (C·log N / N) - 1` over the data.
    pub max_violation: f64,
    pub ratios: Vec<f64>,
}

pub fn fit_log_ratio(points: &[(usize, f64)]) -> DecayFit {
    let g: Vec<f64> = points
        .iter()
        .map(|&(n, _)| (n as f64).ln() / n as f64)
        .collect();
    let num: f64 = points.iter().zip(&g).map(|(&(_, e), gi)| e * gi).sum();
    let den: f64 = g.iter().map(|gi| gi * gi).sum();
    let c_fit = if den > 0.0 { num / den } else { 0.0 };
    let ratios: Vec<f64> = points.iter().zip(&g).map(|(&(_, e), gi)| e / gi).collect();
    let max_violation = ratios
        .iter()
        .map(|r| r / c_fit - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    DecayFit {
        c_fit,
        max_violation,
        ratios,
    }
}
