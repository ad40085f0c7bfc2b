#![allow(dead_code)]

use std::f64::consts::PI;

use fdeorbit::charmatrix::{hopf_data, HopfData, LinActionA};
use fdeorbit::continuation::{correct, hopf_seed, BranchPoint};
use fdeorbit::{builtin, extend_autonomous, ExtendedProblem, SolverConfig};

pub fn sdd_hopf() -> HopfData {
    let a = LinActionA::from_problem(&builtin("sdd_example").unwrap());
    hopf_data(&a, 1.0, &[PI / 2.0], 0, 8).unwrap()
}

pub fn sdd_ext() -> ExtendedProblem {
    extend_autonomous(builtin("sdd_example").unwrap(), 0.1).unwrap()
}

pub fn sdd_orbit(ext: &ExtendedProblem, hopf: &HopfData, beta: f64, cfg: &SolverConfig) -> BranchPoint {
    correct(ext, hopf_seed(hopf, beta, cfg.n_harmonics), beta, hopf, cfg).unwrap()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}
