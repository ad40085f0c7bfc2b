use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{field, SolverConfig};
use crate::error::Result;
use crate::fourier::{qnl_norm_estimate, PeriodicFn};
use crate::functional::ProblemDef;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseOptions {
    /// Number of random pairs in the ball.
    pub pairs: usize,
    /// Random starts per `‖Q_N L‖` estimate.
    pub trials: usize,
    pub seed: u64,
    /// Harmonic counts tabulated for `‖Q_N L‖`.
    pub candidates: Vec<usize>,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            pairs: 100,
            trials: 8,
            seed: 1,
            candidates: vec![1, 2, 3, 4, 5, 6, 8, 10, 12, 16, 24, 32, 48, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseReport {
    /// Largest observed `‖F(x) - F(y)‖ / ‖x - y‖`.
    pub k_estimate: f64,
    /// Largest observed `‖F(x)‖_{0,1}`.
    pub r_estimate: f64,
    pub qnl_table: Vec<(usize, f64)>,
    /// Smallest tabulated `N` with `‖Q_N L‖ ≤ 1/(2K)`.
    pub recommended_n: usize,
    /// False when no tabulated `N` meets the bound; the largest is returned.
    pub satisfied: bool,
    pub pairs_used: usize,
    pub seed: u64,
}

fn random_perturbation(rng: &mut ChaCha8Rng, dim: usize, modes: usize, radius: f64) -> PeriodicFn {
    let mut r = PeriodicFn::zeros(dim, modes);
    for i in 0..dim {
        r.set_coeff(i, 0, rng.gen_range(-1.0..1.0));
        for k in 1..=modes as isize {
            let s = 1.0 / (k * k) as f64;
            r.set_coeff(i, k, rng.gen_range(-s..s));
            r.set_coeff(i, -k, rng.gen_range(-s..s));
        }
    }
    let scale = radius * rng.gen::<f64>() / r.norm_01().max(f64::MIN_POSITIVE);
    &r * scale
}

/// Empirical Lipschitz and bound constants of `F` on the `C^{0,1}` ball of
/// radius `delta` around `x0`, and the harmonic count they call for.
pub fn diagnose(
    prob: &ProblemDef,
    x0: &PeriodicFn,
    delta: f64,
    params: &[f64],
    omega: f64,
    cfg: &SolverConfig,
    opts: &DiagnoseOptions,
) -> Result<DiagnoseReport> {
    let modes = cfg.m_colloc.max(x0.modes());
    let x0 = x0.resized(modes);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut k_est = 0.0f64;
    let mut r_est = 0.0f64;
    let mut used = 0;
    for _ in 0..opts.pairs {
        let x = &x0 + &random_perturbation(&mut rng, prob.n, cfg.n_harmonics, delta);
        let y = &x0 + &random_perturbation(&mut rng, prob.n, cfg.n_harmonics, delta);
        let (fx, fy) = match (
            field(prob, &x, params, omega, cfg),
            field(prob, &y, params, omega, cfg),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        used += 1;
        let dx = (&x - &y).sup_norm();
        if dx > 0.0 {
            k_est = k_est.max((&fx - &fy).sup_norm() / dx);
        }
        r_est = r_est.max(fx.norm_01()).max(fy.norm_01());
    }
    let seed = opts.seed;
    let qnl_table: Vec<(usize, f64)> = opts
        .candidates
        .par_iter()
        .map(|&n| {
            let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_add(n as u64));
            (n, qnl_norm_estimate(n, opts.trials, &mut r))
        })
        .collect();
    let target = if k_est > 0.0 { 0.5 / k_est } else { f64::INFINITY };
    let hit = qnl_table.iter().find(|(_, e)| *e <= target);
    let (recommended_n, satisfied) = match hit {
        Some(&(n, _)) if k_est > 0.0 => (n, true),
        _ if k_est == 0.0 => (1, true),
        _ => (qnl_table.iter().map(|p| p.0).max().unwrap_or(1), false),
    };
    Ok(DiagnoseReport {
        k_estimate: k_est,
        r_estimate: r_est,
        qnl_table,
        recommended_n,
        satisfied,
        pairs_used: used,
        seed,
    })
}
