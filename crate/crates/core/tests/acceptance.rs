//! The ten acceptance criteria, one line each. Runs without the libtest
//! harness so the summary is always printed.

mod common;

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{loglog_slope, sdd_ext, sdd_hopf, sdd_orbit};
use fdeorbit::charmatrix::{det, find_root, hopf_scan, k_matrix, HopfScan, LinActionA};
use fdeorbit::continuation::{continue_branch, shift_coeffs, BranchPoint, ContinuationSettings};
use fdeorbit::fourier::{fit_log_ratio, qnl_norm_estimate};
use fdeorbit::functional::solve_equilibrium;
use fdeorbit::integrate::{cross_check, orbit_segment, simulate};
use fdeorbit::reduction::{check_split, diagnose, evaluate, residual_g, solve_X, solve_dX, DiagnoseOptions};
use fdeorbit::{builtin, CoeffVec, SolverConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn smooth_noise(rng: &mut ChaCha8Rng, harmonics: usize, scale: f64) -> CoeffVec {
    let mut q = CoeffVec::zeros(1, harmonics);
    for k in -(harmonics as isize)..=harmonics as isize {
        q.set(0, k, scale * 0.5f64.powi(k.unsigned_abs() as i32) * rng.gen_range(-1.0..1.0));
    }
    q
}

fn equilibria() -> Outcome {
    let prob = builtin("sdd_example").unwrap();
    let mut worst = 0.0f64;
    for mu in [-1.0, 0.5, 1.0, 3.0] {
        let x = solve_equilibrium(&prob, &[mu], None, 1e-14, 20).map_err(|e| e.to_string())?;
        worst = worst.max((x[0] - mu).abs());
    }
    ensure(worst <= 1e-14, format!("max |p - mu| = {worst:.1e}"))
}

fn hopf_location() -> Outcome {
    let a = LinActionA::from_problem(&builtin("sdd_example").unwrap());
    let scan = HopfScan {
        mu: vec![1.0],
        param: 0,
        mu_range: (1.0, 2.2),
        mu_points: 13,
        omega_range: (0.2, 3.0),
        omega_points: 57,
        n_harmonics: 8,
    };
    let found = hopf_scan(&a, &scan).map_err(|e| e.to_string())?;
    let h = found.first().ok_or("no Hopf point found")?;
    let dmu = (h.mu0[0] - PI / 2.0).abs();
    let dw = (h.omega0 - 1.0).abs();
    let d2 = det(&k_matrix(&a, Complex64::new(0.0, 2.0), &[PI / 2.0]).map_err(|e| e.to_string())?).norm();
    // Speed of the root along μ by differencing tracked roots.
    let eps = 1e-4;
    let up = find_root(&a, Complex64::new(0.0, 1.0), &[PI / 2.0 + eps]).map_err(|e| e.to_string())?;
    let down = find_root(&a, Complex64::new(0.0, 1.0), &[PI / 2.0 - eps]).map_err(|e| e.to_string())?;
    let speed = (up.re - down.re) / (2.0 * eps);
    let closed = -1.0 / (1.0 + PI * PI / 4.0);
    let ok = found.len() == 1
        && dmu < 1e-8
        && dw < 1e-8
        && h.nonresonance_ok
        && (d2 - 5f64.sqrt()).abs() < 1e-8
        && h.transversal_ok
        && (h.c_mu.re - closed).abs() < 1e-6
        && (h.c_mu.re + speed).abs() < 1e-6;
    ensure(
        ok,
        format!(
            "|dmu|={dmu:.1e} |domega|={dw:.1e} |det K(2i)|={d2:.10} Re c_mu={:.8} (closed {closed:.8}, path {:.8})",
            h.c_mu.re, -speed
        ),
    )
}

fn contraction() -> Outcome {
    let prob = builtin("sdd_example").unwrap();
    let (h, ext) = (sdd_hopf(), sdd_ext());
    let probe = sdd_orbit(&ext, &h, 0.04, &SolverConfig::with_harmonics(4));
    let d = diagnose(&prob, &probe.profile, 0.1, &probe.mu, probe.omega, &SolverConfig::with_harmonics(4), &DiagnoseOptions::default())
        .map_err(|e| e.to_string())?;
    let cfg = SolverConfig::with_harmonics(d.recommended_n);
    let mut worst = 0.0f64;
    for beta in [0.02, 0.04, 0.08] {
        let orb = sdd_orbit(&ext, &h, beta, &cfg);
        let (_, rep) = solve_X(&prob, &orb.p_y, &orb.p_y.embed(), &orb.mu, orb.omega, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(rep.contraction_estimate);
    }
    ensure(
        d.satisfied && worst <= 0.55,
        format!("N={} (K={:.3}), worst observed factor {worst:.3}", d.recommended_n, d.k_estimate),
    )
}

fn branch_points(beta: f64, cfg: &SolverConfig) -> Result<Vec<BranchPoint>, String> {
    let (h, ext) = (sdd_hopf(), sdd_ext());
    let start = sdd_orbit(&ext, &h, beta, cfg);
    let settings = ContinuationSettings {
        steps: 10,
        ..Default::default()
    };
    Ok(continue_branch(&ext, &h, &start, &settings, cfg).map_err(|e| e.to_string())?.points)
}

fn exactness() -> Outcome {
    let cfg = SolverConfig::with_harmonics(8);
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    let mut count = 0;
    let (h, ext) = (sdd_hopf(), sdd_ext());
    for beta in [-0.1, -0.03, 0.01, 0.05, 0.2] {
        let t = Instant::now();
        let pt = sdd_orbit(&ext, &h, beta, &cfg);
        slowest = slowest.max(t.elapsed());
        worst = worst.max(pt.odes_residual);
        count += 1;
    }
    for pt in branch_points(0.05, &cfg)? {
        worst = worst.max(pt.odes_residual);
        count += 1;
    }
    ensure(
        worst < 1e-7 && slowest.as_secs_f64() < 10.0,
        format!("{count} orbits, max off-grid residual {worst:.1e}, slowest solve {slowest:.2?}"),
    )
}

// (1/π)∫|(π - s)/2 - Σ_{k≤N} sin(ks)/k| ds over one period.
fn exact_qnl_norm(n: usize) -> f64 {
    let m = 200_000;
    let h = 2.0 * PI / m as f64;
    let mut acc = 0.0;
    for j in 0..m {
        let s = (j as f64 + 0.5) * h;
        let partial: f64 = (1..=n).map(|k| (k as f64 * s).sin() / k as f64).sum();
        acc += ((PI - s) / 2.0 - partial).abs();
    }
    acc * h / PI
}

fn decay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ns = [4usize, 8, 16, 32, 64];
    let pts: Vec<(usize, f64)> = ns.iter().map(|&n| (n, qnl_norm_estimate(n, 8, &mut rng))).collect();
    let fit = fit_log_ratio(&pts);
    let below_exact = pts.iter().all(|&(n, e)| e <= exact_qnl_norm(n) * (1.0 + 1e-3));
    ensure(
        fit.max_violation <= 0.2 && below_exact,
        format!("C_fit={:.4}, max violation {:.1}%", fit.c_fit, 100.0 * fit.max_violation),
    )
}

fn derivative() -> Outcome {
    let prob = builtin("sdd_example").unwrap();
    let (h, ext) = (sdd_hopf(), sdd_ext());
    let cfg = SolverConfig::with_harmonics(6);
    let orb = sdd_orbit(&ext, &h, 0.06, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    let eps = 1e-5;
    for _ in 0..10 {
        let q = smooth_noise(&mut rng, 6, 1.0);
        let z = solve_dX(&prob, &q, &orb.profile, &orb.mu, orb.omega, &cfg).map_err(|e| e.to_string())?;
        let xp = solve_X(&prob, &orb.p_y.axpy(eps, &q), &orb.profile, &orb.mu, orb.omega, &cfg).map_err(|e| e.to_string())?.0;
        let xm = solve_X(&prob, &orb.p_y.axpy(-eps, &q), &orb.profile, &orb.mu, orb.omega, &cfg).map_err(|e| e.to_string())?.0;
        let fd = &(&xp - &xm) * (0.5 / eps);
        worst = worst.max((&fd - &z.resized(fd.modes())).sup_norm() / z.sup_norm());
    }
    ensure(worst < 1e-5, format!("max relative sup error {worst:.1e} over 10 directions"))
}

fn equivariance() -> Outcome {
    let prob = builtin("sdd_example").unwrap();
    let (h, ext) = (sdd_hopf(), sdd_ext());
    let cfg = SolverConfig::with_harmonics(8);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let beta = rng.gen_range(-0.1..0.1);
        let orb = sdd_orbit(&ext, &h, beta, &cfg);
        let p = orb.p_y.axpy(1.0, &smooth_noise(&mut rng, 8, 1e-3));
        let t = rng.gen_range(-PI..PI);
        let lhs = residual_g(&prob, &shift_coeffs(&p, t), &orb.mu, orb.omega, &cfg).map_err(|e| e.to_string())?;
        let rhs = shift_coeffs(&residual_g(&prob, &p, &orb.mu, orb.omega, &cfg).map_err(|e| e.to_string())?, t);
        worst = worst.max(lhs.axpy(-1.0, &rhs).norm() / p.norm());
    }
    ensure(worst <= 1e-10, format!("max ||g(shift p) - shift g(p)|| / ||p|| = {worst:.1e}"))
}

fn branch_structure() -> Outcome {
    let cfg = SolverConfig::with_harmonics(6);
    let up = branch_points(0.03, &cfg)?;
    let down = branch_points(-0.03, &cfg)?;
    let mut gap = 0.0f64;
    for (a, b) in up.iter().zip(&down) {
        gap = gap.max((a.omega - b.omega).abs()).max((a.mu[0] - b.mu[0]).abs());
    }
    let (h, ext) = (sdd_hopf(), sdd_ext());
    let betas = [0.02, 0.04, 0.08];
    let dmu: Vec<f64> = betas.iter().map(|&b| (sdd_orbit(&ext, &h, b, &cfg).mu[0] - PI / 2.0).abs()).collect();
    let slope = loglog_slope(&betas, &dmu);
    ensure(
        up.len() == down.len() && gap < 1e-7 && (slope - 2.0).abs() <= 0.3,
        format!("{} points per side, max (omega, mu) gap {gap:.1e}, log-log slope {slope:.4}", up.len()),
    )
}

fn cross_checks() -> Outcome {
    let (h, ext) = (sdd_hopf(), sdd_ext());
    let orb = sdd_orbit(&ext, &h, 0.1, &SolverConfig::with_harmonics(8));
    let prob = builtin("sdd_example").unwrap();
    let traj = simulate(&prob, orbit_segment(&orb), &orb.mu, orb.period(), 1e-2).map_err(|e| e.to_string())?;
    let dev = cross_check(&traj, &orb, orb.period()).map_err(|e| e.to_string())?.max_deviation;

    let cut = builtin("cutting_baumgarte").unwrap();
    let params = cut.default_params.clone();
    let (a, b, d0) = (params[1], params[2], 0.05);
    let x = |s: f64| 0.1 * s.cos();
    let mut tau0 = a;
    for _ in 0..100 {
        tau0 = a - b * x(0.0) + b * x(-tau0) + d0;
    }
    let init = Arc::new(move |s: f64| vec![0.1 * s.cos(), -0.1 * s.sin(), tau0]);
    let traj = simulate(&cut, init, &params, 5.0, 1e-3).map_err(|e| e.to_string())?;
    let y = traj.query(5.0).map_err(|e| e.to_string())?;
    let xd = traj.query(5.0 - y[2]).map_err(|e| e.to_string())?[0];
    let d5 = y[2] - a + b * y[0] - b * xd;
    let rel = (d5 / (d0 * (-5.0f64).exp()) - 1.0).abs();
    ensure(
        dev < 1e-4 && rel < 1e-3,
        format!("orbit deviation over one period {dev:.1e}, defect relative error at t=5 {rel:.1e}"),
    )
}

fn splitting() -> Outcome {
    let prob = builtin("sdd_example").unwrap();
    let (h, ext) = (sdd_hopf(), sdd_ext());
    let cfg = SolverConfig::with_harmonics(6);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let beta = -0.15 + 0.3 * i as f64 / 49.0;
        let orb = sdd_orbit(&ext, &h, beta, &cfg);
        let r = check_split(&prob, &orb.profile, &orb.p_y, &orb.mu, orb.omega, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(r.ode).max(r.projection).max(r.fixed_point).max(r.low_modes);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut flagged = 0;
    for i in 0..50 {
        let mut p = smooth_noise(&mut rng, 6, 0.2);
        p.set(0, 0, rng.gen_range(2.0..4.0));
        let mu = [rng.gen_range(0.5..2.5)];
        // Alternate between fixed points X(p) and arbitrary trigonometric states.
        let x = if i % 2 == 0 {
            evaluate(&prob, &p, None, &mu, 1.0, &cfg).map_err(|e| e.to_string())?.x
        } else {
            let mut x = p.embed().resized(cfg.m_colloc);
            for c in x.coeffs_mut() {
                *c += 0.01 * rng.gen_range(-1.0..1.0);
            }
            x
        };
        let r = check_split(&prob, &x, &p, &mu, 1.0, &cfg).map_err(|e| e.to_string())?;
        if !r.bvp_holds && !r.split_holds && r.consistent {
            flagged += 1;
        }
    }
    ensure(
        worst < 1e-7 && flagged == 50,
        format!("50 solutions max residual {worst:.1e}; {flagged}/50 non-solutions flagged"),
    )
}

fn main() {
    let criteria: [(&str, f64, fn() -> Outcome); 10] = [
        ("equilibrium algebra", 1.0, equilibria),
        ("Hopf location", 5.0, hopf_location),
        ("contraction certificate", 5.0, contraction),
        ("exactness of reduction", 60.0, exactness),
        ("Q_N L decay", 10.0, decay),
        ("derivative correctness", 30.0, derivative),
        ("equivariance", 10.0, equivariance),
        ("Hopf branch structure", 60.0, branch_structure),
        ("oracle cross-check", 30.0, cross_checks),
        ("splitting equivalence", 30.0, splitting),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok(d) => (secs < *budget, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<24} {}  {detail}  [{secs:.2}s, budget {budget}s]",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
