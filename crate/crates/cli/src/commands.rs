use std::path::Path;

use fdeorbit::charmatrix::{hopf_scan, HopfData, HopfScan, LinActionA};
use fdeorbit::continuation::{
    continue_branch, correct, hopf_seed, Branch, BranchPoint, ContinuationSettings, Termination, RESIDUAL_SAMPLES,
    RESIDUAL_SEED,
};
use fdeorbit::functional::solve_equilibrium;
use fdeorbit::integrate::{cross_check, orbit_segment, simulate};
use fdeorbit::reduction::{check_split, diagnose, off_grid_residual, DiagnoseOptions};
use fdeorbit::{extend_autonomous, PeriodicFn};
use log::{debug, info};

use crate::config::{EquilibriaBlock, Resolved};
use crate::output::{num, state_header, write_orbit, Table};
use crate::Failure;

const EQUILIBRIUM_TOL: f64 = 1e-13;

fn solver(stage: &'static str) -> impl Fn(fdeorbit::Error) -> Failure {
    move |e| Failure::Solver { stage, message: e.to_string() }
}

fn block<'a, T>(b: &'a Option<T>, name: &str) -> Result<&'a T, Failure> {
    b.as_ref()
        .ok_or_else(|| Failure::Config(format!("command needs a `{name}` block")))
}

pub fn equilibria(cfg: &Resolved, out: &Path) -> Result<(), Failure> {
    let default = EquilibriaBlock::default();
    let b = cfg.raw.equilibria.as_ref().unwrap_or(&default);
    if let Some(g) = &b.guess {
        if g.len() != cfg.problem.n {
            return Err(Failure::Config(format!("equilibria.guess needs {} entries", cfg.problem.n)));
        }
    }
    let x = solve_equilibrium(&cfg.problem, &cfg.params, b.guess.as_deref(), EQUILIBRIUM_TOL, 50)
        .map_err(solver("equilibrium"))?;
    let mut t = Table::create(out, "equilibria.csv", &[], &state_header("index", x.len()))?;
    t.row(&std::iter::once("0".to_string()).chain(x.iter().copied().map(num)).collect::<Vec<_>>())?;
    t.finish()?;
    let shown: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    println!("equilibrium p = [{}]", shown.join(", "));
    Ok(())
}

pub fn diagnose_cmd(cfg: &Resolved, out: &Path) -> Result<(), Failure> {
    let seed = cfg.seed("diagnose")?;
    let default = Default::default();
    let b = cfg.raw.diagnose.as_ref().unwrap_or(&default);
    let eq = solve_equilibrium(&cfg.problem, &cfg.params, None, EQUILIBRIUM_TOL, 50).map_err(solver("equilibrium"))?;
    let x0 = PeriodicFn::constant(&eq, cfg.solver.m_colloc);
    let opts = DiagnoseOptions {
        pairs: b.pairs,
        trials: b.trials,
        seed,
        ..Default::default()
    };
    let rep = diagnose(&cfg.problem, &x0, b.delta, &cfg.params, b.omega, &cfg.solver, &opts).map_err(solver("diagnose"))?;
    let comments = [
        ("seed", seed.to_string()),
        ("k_estimate", num(rep.k_estimate)),
        ("r_estimate", num(rep.r_estimate)),
        ("recommended_n", rep.recommended_n.to_string()),
        ("satisfied", rep.satisfied.to_string()),
    ];
    let mut t = Table::create(out, "diagnose.csv", &comments, &["n".into(), "qnl_estimate".into()])?;
    for (n, e) in &rep.qnl_table {
        t.row(&[n.to_string(), num(*e)])?;
    }
    t.finish()?;
    println!(
        "K = {:.6}, R = {:.6}, recommended N = {}{}",
        rep.k_estimate,
        rep.r_estimate,
        rep.recommended_n,
        if rep.satisfied { "" } else { " (bound not met by any candidate)" }
    );
    Ok(())
}

fn scan(cfg: &Resolved) -> Result<Vec<HopfData>, Failure> {
    let h = block(&cfg.raw.hopf, "hopf")?;
    let a = LinActionA::from_problem(&cfg.problem);
    let grid = HopfScan {
        mu: cfg.params.clone(),
        param: cfg.param_index(&h.param)?,
        mu_range: (h.range[0], h.range[1]),
        mu_points: h.points,
        omega_range: (h.omega_range[0], h.omega_range[1]),
        omega_points: h.omega_points,
        n_harmonics: cfg.solver.n_harmonics,
    };
    let found = hopf_scan(&a, &grid).map_err(solver("hopf scan"))?;
    info!("hopf scan found {} point(s)", found.len());
    Ok(found)
}

fn pick(found: Vec<HopfData>, index: usize) -> Result<HopfData, Failure> {
    let count = found.len();
    found.into_iter().nth(index).ok_or_else(|| Failure::Solver {
        stage: "hopf scan",
        message: format!("requested Hopf point {index} but the scan found {count}"),
    })
}

pub fn hopf(cfg: &Resolved, out: &Path) -> Result<(), Failure> {
    let found = scan(cfg)?;
    let header: Vec<String> = ["mu0", "omega0", "transversal", "nonresonant", "re_c_mu", "im_c_mu"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut t = Table::create(out, "hopf.csv", &[], &header)?;
    for h in &found {
        t.row(&[
            num(h.mu0[h.param]),
            num(h.omega0),
            h.transversal_ok.to_string(),
            h.nonresonance_ok.to_string(),
            num(h.c_mu.re),
            num(h.c_mu.im),
        ])?;
        println!(
            "mu0 = {:.10}, omega0 = {:.10}, transversal = {}, nonresonant = {}",
            h.mu0[h.param], h.omega0, h.transversal_ok, h.nonresonance_ok
        );
    }
    t.finish()?;
    if found.is_empty() {
        println!("no Hopf point in range");
    }
    Ok(())
}

fn seed_orbit(cfg: &Resolved, h: &HopfData, beta: f64, cutoff: f64) -> Result<(fdeorbit::ExtendedProblem, BranchPoint), Failure> {
    let ext = extend_autonomous(cfg.problem.clone(), cutoff).map_err(|e| Failure::Config(e.to_string()))?;
    let n = cfg.solver.n_harmonics;
    let pt = correct(&ext, hopf_seed(h, beta, n), beta, h, &cfg.solver).map_err(solver("correct"))?;
    debug!("seed orbit: omega {} mu {:?} after {} Newton steps", pt.omega, pt.mu, pt.newton_iters);
    Ok((ext, pt))
}

pub fn continue_cmd(cfg: &Resolved, out: &Path) -> Result<(), Failure> {
    let c = block(&cfg.raw.continuation, "continue")?;
    let h = pick(scan(cfg)?, c.hopf_index)?;
    let (ext, start) = seed_orbit(cfg, &h, c.beta, c.omega_cutoff)?;
    let branch = if c.steps == 0 {
        Branch {
            points: vec![start],
            hopf: h.clone(),
            step_history: Vec::new(),
            termination: Termination::Completed,
        }
    } else {
        let settings = ContinuationSettings {
            steps: c.steps,
            step_size: c.step_size,
            free_param: None,
            switch_factor: c.switch_factor,
        };
        continue_branch(&ext, &h, &start, &settings, &cfg.solver).map_err(solver("continue"))?
    };
    let comments = [
        ("residual_seed", RESIDUAL_SEED.to_string()),
        ("residual_samples", RESIDUAL_SAMPLES.to_string()),
    ];
    let header: Vec<String> = ["index", "beta", "omega", "mu", "odes_residual", "newton_iters"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut t = Table::create(out, "branch.csv", &comments, &header)?;
    for (i, p) in branch.points.iter().enumerate() {
        t.row(&[
            i.to_string(),
            num(p.beta),
            num(p.omega),
            num(p.mu[h.param]),
            num(p.odes_residual),
            p.newton_iters.to_string(),
        ])?;
        let tags = [("omega", num(p.omega)), ("mu", num(p.mu[h.param]))];
        write_orbit(out, &format!("orbit_{i:03}"), &p.profile, &tags)?;
    }
    t.finish()?;
    println!("{} branch point(s) written to {}", branch.points.len(), out.display());
    if let Termination::MinStep { step, reason } = &branch.termination {
        println!("branch truncated at step {step:e}: {reason}");
    }
    Ok(())
}

pub fn verify(cfg: &Resolved, out: &Path) -> Result<(), Failure> {
    let seed = cfg.seed("verify")?;
    let v = block(&cfg.raw.verify, "verify")?;
    let h = pick(scan(cfg)?, v.hopf_index)?;
    let (_, orb) = seed_orbit(cfg, &h, v.beta, v.omega_cutoff)?;
    let split = check_split(&cfg.problem, &orb.profile, &orb.p_y, &orb.mu, orb.omega, &cfg.solver)
        .map_err(solver("verify"))?;
    let residual = off_grid_residual(&cfg.problem, &orb.profile, &orb.mu, orb.omega, RESIDUAL_SAMPLES, seed)
        .map_err(solver("verify"))?;
    let horizon = v.periods * orb.period();
    let traj = simulate(&cfg.problem, orbit_segment(&orb), &orb.mu, horizon, v.dt).map_err(solver("simulate"))?;
    let cc = cross_check(&traj, &orb, horizon).map_err(solver("simulate"))?;
    let rows = [
        ("omega", num(orb.omega)),
        ("mu", num(orb.mu[h.param])),
        ("ode_residual", num(split.ode)),
        ("projection_residual", num(split.projection)),
        ("fixed_point_residual", num(split.fixed_point)),
        ("low_modes_residual", num(split.low_modes)),
        ("seeded_ode_residual", num(residual)),
        ("split_consistent", split.consistent.to_string()),
        ("simulation_max_deviation", num(cc.max_deviation)),
        ("simulation_diverging", cc.diverging.to_string()),
    ];
    let mut t = Table::create(out, "verify.csv", &[("seed", seed.to_string())], &["quantity".into(), "value".into()])?;
    for (k, val) in &rows {
        t.row(&[k.to_string(), val.clone()])?;
        println!("{k} = {val}");
    }
    t.finish()?;
    write_orbit(out, "verify_orbit", &orb.profile, &[("omega", num(orb.omega))])?;
    if !split.is_solution() {
        return Err(Failure::Solver {
            stage: "verify",
            message: "computed orbit fails the residual checks".into(),
        });
    }
    Ok(())
}
