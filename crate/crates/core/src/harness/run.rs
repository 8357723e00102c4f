use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::{CaseSpec, ExperimentConfig, Theorem};
use super::report::{Diagnostics, EqualityGate, InequalityReport, RigidityResiduals, RowStatus, Violation};
use crate::error::{Error, Result};
use crate::models::unit_ball_volume;
use crate::numeric::stream_rng;
use crate::potential::{
    density_gradient_rep, laplacian_bound_check, normalization_integrals, normalize_density, solve, PotentialSolution,
};
use crate::submanifold::{
    minimal_isoperimetry, ms_sides, normal_transport, normalize_patch_density, shell_capture, surface_potential,
    CaptureStatus as ShellStatus, ImmersedPatch, QuadSpec, SurfacePotential,
};
use crate::tolerance;
use crate::transport::{
    capture_inequality, coverage_experiment, phi_map_with_tol, CaptureStatus, SampleStatus,
    TransportConfig,
};

/// Which rows a batch produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    /// Domain inequalities (Sobolev and isoperimetric).
    Sobolev,
    /// Patch inequalities (Michael–Simon and minimal isoperimetric).
    MichaelSimon,
    /// Capture and coverage experiments for every case.
    Transport,
}

impl RunKind {
    fn selects(&self, theorem: Theorem) -> bool {
        match self {
            RunKind::Sobolev => !theorem.on_patch(),
            RunKind::MichaelSimon => theorem.on_patch(),
            RunKind::Transport => theorem != Theorem::MinimalIsoperimetric,
        }
    }
}

/// Stable per-case stream offset, independent of case order.
pub fn case_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}

fn error_status(e: &Error) -> RowStatus {
    match e {
        Error::Quadrature { .. }
        | Error::ProbesSkipped { .. }
        | Error::Shooting(_)
        | Error::Solver(_)
        | Error::Integration { .. }
        | Error::ConjugatePoint { .. }
        | Error::Unsupported(_) => RowStatus::Inconclusive,
        _ => RowStatus::Fail,
    }
}

fn error_row(cfg: &ExperimentConfig, id: String, theorem: Theorem, e: &Error) -> InequalityReport {
    let mut diagnostics = Diagnostics::empty();
    diagnostics.extra.clear();
    InequalityReport {
        case_id: id,
        theorem,
        n: 0,
        m: 0,
        theta: f64::NAN,
        lhs: f64::NAN,
        rhs: f64::NAN,
        ratio: f64::NAN,
        status: error_status(e),
        h: cfg.solver.h,
        ode_tol: cfg.solver.ode_tol,
        mc_stderr: 0.0,
        seed: cfg.seed,
        ratio_tolerance: 0.0,
        diagnostics,
        violations: vec![Violation {
            name: "error".into(),
            margin: f64::NAN,
            detail: e.to_string(),
        }],
        tolerances: tolerance::policy(cfg.solver.h),
    }
}

fn quad_spec(cfg: &ExperimentConfig) -> QuadSpec {
    QuadSpec {
        panels: cfg.solver.quad_panels,
        ..QuadSpec::default()
    }
}

fn gate(ratio: f64) -> EqualityGate {
    if (ratio - 1.0).abs() <= tolerance::NEAR_EQUALITY {
        EqualityGate::NearEquality
    } else {
        EqualityGate::NotNearEquality
    }
}

fn pick<T: Clone>(items: &[T], k: usize) -> Vec<T> {
    if items.len() <= k {
        return items.to_vec();
    }
    (0..k).map(|i| items[i * items.len() / k].clone()).collect()
}

fn fnorm(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Rigidity residuals of a domain solution. Returns `None` past the gate.
pub fn equality_diagnostics(sol: &PotentialSolution, ratio: f64) -> Result<(EqualityGate, Option<RigidityResiduals>)> {
    let g = gate(ratio);
    if g == EqualityGate::NotNearEquality {
        return Ok((g, None));
    }
    let n = sol.dim();
    let mut hess: f64 = 0.0;
    let mut grad_f: f64 = 0.0;
    let mut points = 0;
    for x in sol.diagnostic_points() {
        if !sol.in_u(&x)? {
            continue;
        }
        points += 1;
        let c = sol.density_value(&x)?.powf(1.0 / (n as f64 - 1.0));
        let dev = sol.hessian(&x)? - nalgebra::DMatrix::<f64>::identity(n, n) * c;
        hess = hess.max(fnorm(&dev));
        let df = density_gradient_rep(sol, &x)?;
        grad_f = grad_f.max(df.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    Ok((
        g,
        Some(RigidityResiduals {
            hessian: hess,
            density_gradient: grad_f,
            second_form: 0.0,
            limit: 10.0 * sol.hessian_tolerance(),
            points,
        }),
    ))
}

/// Rigidity residuals of a patch solution. Returns `None` past the gate.
pub fn patch_equality_diagnostics(
    sol: &SurfacePotential,
    ratio: f64,
) -> Result<(EqualityGate, Option<RigidityResiduals>)> {
    let g = gate(ratio);
    if g == EqualityGate::NotNearEquality {
        return Ok((g, None));
    }
    let r = sol.equality_residuals()?;
    Ok((
        g,
        Some(RigidityResiduals {
            hessian: r.hessian,
            density_gradient: r.density_gradient,
            second_form: r.second_form,
            limit: 10.0 * surface_tolerance(sol),
            points: sol.diagnostic_points().len(),
        }),
    ))
}

fn surface_tolerance(sol: &SurfacePotential) -> f64 {
    if sol.dim() == 1 {
        tolerance::MONOTONICITY
    } else {
        tolerance::mesh(sol.h)
    }
}

fn check_rigidity(rig: &Option<RigidityResiduals>, out: &mut Vec<Violation>) {
    if let Some(r) = rig {
        let worst = r.hessian.max(r.density_gradient).max(r.second_form);
        if !(worst <= r.limit) {
            out.push(Violation {
                name: "rigidity".into(),
                margin: r.limit - worst,
                detail: format!(
                    "hessian {:e}, density gradient {:e}, second form {:e}, limit {:e}",
                    r.hessian, r.density_gradient, r.second_form, r.limit
                ),
            });
        }
    }
}

#[derive(Default)]
struct JacobianTally {
    samples: usize,
    conjugate: usize,
    excess: f64,
    monotonicity: f64,
    riccati: f64,
}

impl JacobianTally {
    fn new() -> Self {
        Self {
            excess: f64::NEG_INFINITY,
            monotonicity: f64::NEG_INFINITY,
            riccati: f64::INFINITY,
            ..Default::default()
        }
    }

    fn add(&mut self, det: f64, bound: f64, mono: f64, riccati: f64) {
        self.samples += 1;
        self.excess = self.excess.max((det - bound) / bound);
        self.monotonicity = self.monotonicity.max(mono);
        self.riccati = self.riccati.min(riccati);
    }

    fn record(&self, tol: f64, diag: &mut Diagnostics, out: &mut Vec<Violation>) {
        diag.jacobian_samples = self.samples;
        diag.conjugate_samples = self.conjugate;
        if self.samples == 0 {
            return;
        }
        diag.max_jacobian_excess = Some(self.excess);
        diag.max_monotonicity_increase = Some(self.monotonicity);
        diag.min_riccati_margin = Some(self.riccati);
        if !(self.excess <= tol) {
            out.push(Violation {
                name: "jacobian_bound".into(),
                margin: tol - self.excess,
                detail: format!("relative excess {:e}", self.excess),
            });
        }
        if !(self.monotonicity <= tol) {
            out.push(Violation {
                name: "monotonicity".into(),
                margin: tol - self.monotonicity,
                detail: format!("relative increase {:e}", self.monotonicity),
            });
        }
        if !(self.riccati >= -tol) {
            out.push(Violation {
                name: "riccati".into(),
                margin: self.riccati + tol,
                detail: format!("trace margin {:e}", self.riccati),
            });
        }
    }
}

fn domain_case(cfg: &ExperimentConfig, case: &CaseSpec) -> Result<InequalityReport> {
    let model = case.manifold.as_ref().expect("validated").build()?;
    let domain = case
        .domain
        .as_ref()
        .expect("validated")
        .build(cfg.solver.h, cfg.base_dir.as_deref())?;
    let f = case.domain_density();
    let ints = normalization_integrals(&f, &domain, &model)?;
    let n = model.dim;
    let nf = n as f64;
    let theta = model.theta;
    let lhs = ints.a;
    let rhs = nf * (unit_ball_volume(n) * theta).powf(1.0 / nf) * ints.b.powf((nf - 1.0) / nf);
    let ratio = ints.sobolev_ratio(theta);

    let fnormed = normalize_density(&f, &domain, &model)?;
    let sol = solve(&fnormed, &domain, &model)?;
    let h = sol.mesh_width();
    let mesh = h > 0.0;
    let (ratio_tol, check_tol) = if mesh {
        (tolerance::mesh_ratio(h), tolerance::mesh(h))
    } else {
        (tolerance::ANALYTIC, tolerance::MONOTONICITY)
    };

    let mut violations = Vec::new();
    let mut diag = Diagnostics::empty();
    diag.residual_interior = Some(sol.residual_interior);
    diag.residual_neumann = Some(sol.residual_neumann);
    if !(sol.residual_neumann <= check_tol.max(tolerance::ANALYTIC)) {
        violations.push(Violation {
            name: "neumann_residual".into(),
            margin: check_tol - sol.residual_neumann,
            detail: String::new(),
        });
    }
    let lap = laplacian_bound_check(&sol)?;
    diag.laplacian_margin = Some(lap.margin);
    if !(lap.margin >= -sol.hessian_tolerance()) {
        violations.push(Violation {
            name: "laplacian_bound".into(),
            margin: lap.margin + sol.hessian_tolerance(),
            detail: format!("{} of {} points in U", lap.points_in_u, lap.points_total),
        });
    }

    let mut inside = Vec::new();
    for x in sol.diagnostic_points() {
        if sol.in_u(&x)? {
            inside.push(x);
        }
    }
    let jobs: Vec<(Vec<f64>, f64)> = pick(&inside, cfg.transport.jacobian_points)
        .into_iter()
        .flat_map(|x| cfg.transport.r.iter().map(move |r| (x.clone(), *r)))
        .collect();
    let results: Vec<Result<_>> = jobs
        .par_iter()
        .map(|(x, r)| phi_map_with_tol(&sol, x, *r, cfg.solver.ode_tol))
        .collect();
    let mut tally = JacobianTally::new();
    for res in results {
        match res {
            Ok(img) => tally.add(img.jacobian, img.jacobian_bound, img.monotonicity_increase, img.riccati_margin),
            Err(Error::ConjugatePoint { .. }) => tally.conjugate += 1,
            Err(Error::NotInU { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let jac_tol = if mesh { check_tol } else { tolerance::JACOBIAN_BOUND };
    tally.record(jac_tol.max(check_tol), &mut diag, &mut violations);

    let (g, rig) = equality_diagnostics(&sol, ratio)?;
    diag.gate = g;
    check_rigidity(&rig, &mut violations);
    diag.rigidity = rig;

    let mut tolerances = tolerance::policy(h);
    tolerances.push(tolerance::ToleranceEntry {
        name: "ode_config",
        value: cfg.solver.ode_tol,
    });
    Ok(InequalityReport {
        case_id: case.id.clone(),
        theorem: case.theorem,
        n,
        m: 0,
        theta,
        lhs,
        rhs,
        ratio,
        status: RowStatus::Pass,
        h,
        ode_tol: cfg.solver.ode_tol,
        mc_stderr: 0.0,
        seed: cfg.seed,
        ratio_tolerance: ratio_tol,
        diagnostics: diag,
        violations,
        tolerances,
    }
    .finish())
}

fn admissible_normal(rng: &mut impl Rng, m: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let len = v.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-300);
    let s = radius * rng.random::<f64>().powf(1.0 / m as f64) / len;
    v.iter_mut().for_each(|c| *c *= s);
    v
}

fn build_patch(cfg: &ExperimentConfig, case: &CaseSpec) -> Result<ImmersedPatch> {
    case.sigma.as_ref().expect("validated").build(cfg.base_dir.as_deref())
}

fn patch_solution(cfg: &ExperimentConfig, case: &CaseSpec, patch: &ImmersedPatch) -> Result<SurfacePotential> {
    let f = normalize_patch_density(patch, &case.patch_density(), quad_spec(cfg))?;
    surface_potential(patch, &f, cfg.solver.h)
}

fn michael_simon_case(cfg: &ExperimentConfig, case: &CaseSpec) -> Result<InequalityReport> {
    let patch = build_patch(cfg, case)?;
    let sides = ms_sides(&patch, &case.patch_density(), 1.0, quad_spec(cfg))?;
    let sol = patch_solution(cfg, case, &patch)?;
    let n = sides.n;
    let check_tol = surface_tolerance(&sol);

    let mut violations = Vec::new();
    let mut diag = Diagnostics::empty();
    diag.max_mean_curvature = Some(sides.max_mean_curvature);
    diag.residual_interior = Some(sol.residual_interior);
    diag.residual_neumann = Some(sol.residual_neumann);
    if n == 1 && !(sol.residual_neumann <= tolerance::ANALYTIC) {
        violations.push(Violation {
            name: "neumann_residual".into(),
            margin: tolerance::ANALYTIC - sol.residual_neumann,
            detail: String::new(),
        });
    }
    let lap = sol.laplacian_margin()?;
    diag.laplacian_margin = Some(lap.margin);
    if !(lap.margin >= -check_tol) {
        violations.push(Violation {
            name: "laplacian_bound".into(),
            margin: lap.margin + check_tol,
            detail: format!("{} of {} points in U", lap.points_in_u, lap.points_total),
        });
    }

    let mut rng = stream_rng(case_seed(cfg.seed, &case.id), 0);
    let mut jobs = Vec::new();
    for p in pick(&sol.diagnostic_points(), cfg.transport.jacobian_points) {
        let jet = sol.jet(&p)?;
        let room = 1.0 - jet.gradient_norm_sq();
        if room <= 0.0 {
            continue;
        }
        let y = admissible_normal(&mut rng, sides.m, 0.95 * room.sqrt());
        for r in &cfg.transport.r {
            jobs.push((p.clone(), y.clone(), *r));
        }
    }
    let results: Vec<Result<_>> = jobs.par_iter().map(|(p, y, r)| normal_transport(&sol, p, y, *r)).collect();
    let mut tally = JacobianTally::new();
    for res in results {
        match res {
            Ok(s) => tally.add(s.det, s.bound, s.monotonicity.max_relative_increase, s.riccati.margin),
            Err(Error::ConjugatePoint { .. }) => tally.conjugate += 1,
            Err(Error::NotInU { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    tally.record(check_tol.max(tolerance::JACOBIAN_BOUND), &mut diag, &mut violations);

    let (g, rig) = patch_equality_diagnostics(&sol, sides.ratio)?;
    diag.gate = g;
    check_rigidity(&rig, &mut violations);
    diag.rigidity = rig;
    diag.extra.push(("quadrature_error".into(), sides.quadrature_error));

    Ok(InequalityReport {
        case_id: case.id.clone(),
        theorem: case.theorem,
        n,
        m: sides.m,
        theta: sides.theta,
        lhs: sides.lhs,
        rhs: sides.rhs,
        ratio: sides.ratio,
        status: RowStatus::Pass,
        h: sol.h,
        ode_tol: cfg.solver.ode_tol,
        mc_stderr: 0.0,
        seed: cfg.seed,
        ratio_tolerance: tolerance::ANALYTIC,
        diagnostics: diag,
        violations,
        tolerances: tolerance::policy(if n == 1 { 0.0 } else { sol.h }),
    }
    .finish())
}

fn minimal_case(cfg: &ExperimentConfig, case: &CaseSpec) -> Result<InequalityReport> {
    let patch = build_patch(cfg, case)?;
    let rep = minimal_isoperimetry(&patch, 1.0, quad_spec(cfg))?;
    let mut violations = Vec::new();
    let mut diag = Diagnostics::empty();
    diag.max_mean_curvature = Some(rep.max_mean_curvature);
    if !rep.minimal {
        violations.push(Violation {
            name: "minimal".into(),
            margin: 1e-8 - rep.max_mean_curvature,
            detail: format!("max |H| = {:e}", rep.max_mean_curvature),
        });
    }
    let ratio = rep.boundary_measure / rep.bound;
    diag.gate = gate(ratio);
    diag.extra.push(("area".into(), rep.area));
    diag.extra.push(("slack".into(), rep.slack));
    Ok(InequalityReport {
        case_id: case.id.clone(),
        theorem: case.theorem,
        n: rep.n,
        m: rep.m,
        theta: rep.theta,
        lhs: rep.boundary_measure,
        rhs: rep.bound,
        ratio,
        status: RowStatus::Pass,
        h: 0.0,
        ode_tol: cfg.solver.ode_tol,
        mc_stderr: 0.0,
        seed: cfg.seed,
        ratio_tolerance: tolerance::ANALYTIC / rep.bound,
        diagnostics: diag,
        violations,
        tolerances: tolerance::policy(0.0),
    }
    .finish())
}

/// Runs the inequality check of one case. Module errors become rows.
pub fn run_case(cfg: &ExperimentConfig, case: &CaseSpec) -> InequalityReport {
    let res = match case.theorem {
        Theorem::SobolevDomain | Theorem::Isoperimetric => domain_case(cfg, case),
        Theorem::MichaelSimon => michael_simon_case(cfg, case),
        Theorem::MinimalIsoperimetric => minimal_case(cfg, case),
    };
    res.unwrap_or_else(|e| error_row(cfg, case.id.clone(), case.theorem, &e))
}

fn transport_row(
    cfg: &ExperimentConfig,
    case: &CaseSpec,
    id: String,
    n: usize,
    m: usize,
    theta: f64,
    h: f64,
) -> InequalityReport {
    InequalityReport {
        case_id: id,
        theorem: case.theorem,
        n,
        m,
        theta,
        lhs: f64::NAN,
        rhs: f64::NAN,
        ratio: f64::NAN,
        status: RowStatus::Pass,
        h,
        ode_tol: cfg.solver.ode_tol,
        mc_stderr: 0.0,
        seed: cfg.seed,
        ratio_tolerance: 0.0,
        diagnostics: Diagnostics::empty(),
        violations: Vec::new(),
        tolerances: tolerance::policy(h),
    }
}

fn domain_transport(cfg: &ExperimentConfig, case: &CaseSpec) -> Result<Vec<InequalityReport>> {
    let model = case.manifold.as_ref().expect("validated").build()?;
    let domain = case
        .domain
        .as_ref()
        .expect("validated")
        .build(cfg.solver.h, cfg.base_dir.as_deref())?;
    let f = normalize_density(&case.domain_density(), &domain, &model)?;
    let sol = solve(&f, &domain, &model)?;
    let h = sol.mesh_width();
    let seed = case_seed(cfg.seed, &case.id);
    let t = &cfg.transport;
    let mut rows = Vec::new();
    for &r in &t.r {
        for &sigma in &t.sigma {
            let id = format!("{}/capture/r={r}/sigma={sigma}", case.id);
            let mut row = transport_row(cfg, case, id.clone(), model.dim, 0, model.theta, h);
            match capture_inequality(&sol, &TransportConfig::new(r, t.mc_budget, seed), sigma) {
                Ok(c) => {
                    row.lhs = c.rhs;
                    row.rhs = c.lhs;
                    row.ratio = c.rhs / c.lhs;
                    row.mc_stderr = c.lhs_stderr;
                    row.ratio_tolerance = tolerance::MC_SIGMAS * c.lhs_stderr / c.lhs;
                    row.diagnostics.extra = vec![
                        ("volume_quadrature".into(), c.lhs_exact),
                        ("lhs_over_rn".into(), c.lhs_over_rn),
                        ("asymptote".into(), c.asymptote),
                        ("far_radius".into(), c.far_radius),
                    ];
                    let margin = c.rhs - c.lhs;
                    match c.status {
                        CaptureStatus::Holds => {}
                        CaptureStatus::Inconclusive | CaptureStatus::Vacuous => {
                            row.status = RowStatus::Inconclusive;
                            row.violations.push(Violation {
                                name: if c.status == CaptureStatus::Vacuous { "vacuous" } else { "capture" }.into(),
                                margin,
                                detail: format!("stderr {:e}", c.lhs_stderr),
                            });
                        }
                        CaptureStatus::Violated => {
                            row.status = RowStatus::Fail;
                            row.violations.push(Violation {
                                name: "capture".into(),
                                margin,
                                detail: format!("stderr {:e}", c.lhs_stderr),
                            });
                        }
                    }
                    if c.status == CaptureStatus::Vacuous {
                        row.ratio = f64::NAN;
                    }
                    rows.push(if row.status == RowStatus::Pass { row.finish() } else { row });
                }
                Err(e) => rows.push(error_row(cfg, id, case.theorem, &e)),
            }
        }
        let id = format!("{}/coverage/r={r}", case.id);
        let mut row = transport_row(cfg, case, id.clone(), model.dim, 0, model.theta, h);
        let tcfg = TransportConfig::new(r, t.targets, seed);
        let cov_tol = if h > 0.0 {
            t.coverage_tolerance.max(r * tolerance::mesh(h))
        } else {
            t.coverage_tolerance
        };
        match coverage_experiment(&sol, &tcfg, t.starts, cov_tol) {
            Ok(c) => {
                row.lhs = c.verified_fraction;
                row.rhs = t.coverage_fraction;
                row.ratio = c.verified_fraction / t.coverage_fraction;
                let rel_excess = c
                    .samples
                    .iter()
                    .filter(|s| s.status == SampleStatus::Verified)
                    .map(|s| (s.jacobian - s.jacobian_bound) / s.jacobian_bound)
                    .fold(f64::NEG_INFINITY, f64::max);
                let d = &mut row.diagnostics;
                d.jacobian_samples = c.verified;
                d.max_jacobian_excess = Some(rel_excess);
                d.max_monotonicity_increase = Some(c.max_monotonicity_increase);
                d.min_riccati_margin = Some(c.min_riccati_margin);
                d.extra = vec![
                    ("targets".into(), c.targets as f64),
                    ("image_tolerance".into(), cov_tol),
                    ("max_image_error".into(), c.max_image_error),
                    ("boundary_minimizers".into(), c.boundary_minimizers as f64),
                    ("not_in_u".into(), c.not_in_u as f64),
                    ("failures".into(), c.failures as f64),
                ];
                if c.vacuous {
                    row.status = RowStatus::Inconclusive;
                    row.ratio = f64::NAN;
                    row.violations.push(Violation {
                        name: "vacuous".into(),
                        margin: 0.0,
                        detail: "far set is empty".into(),
                    });
                    rows.push(row);
                    continue;
                }
                let tol = if h > 0.0 { tolerance::mesh(h) } else { tolerance::MONOTONICITY };
                let jac_tol = if h > 0.0 { tolerance::mesh(h) } else { tolerance::JACOBIAN_BOUND };
                if c.verified > 0 {
                    if !(rel_excess <= jac_tol) {
                        row.violations.push(Violation {
                            name: "jacobian_bound".into(),
                            margin: jac_tol - rel_excess,
                            detail: String::new(),
                        });
                    }
                    if !(c.max_monotonicity_increase <= tol) {
                        row.violations.push(Violation {
                            name: "monotonicity".into(),
                            margin: tol - c.max_monotonicity_increase,
                            detail: String::new(),
                        });
                    }
                    if !(c.min_riccati_margin >= -tol) {
                        row.violations.push(Violation {
                            name: "riccati".into(),
                            margin: c.min_riccati_margin + tol,
                            detail: String::new(),
                        });
                    }
                }
                rows.push(row.finish());
            }
            Err(e) => rows.push(error_row(cfg, id, case.theorem, &e)),
        }
    }
    Ok(rows)
}

fn patch_transport(cfg: &ExperimentConfig, case: &CaseSpec) -> Result<Vec<InequalityReport>> {
    let patch = build_patch(cfg, case)?;
    let sol = patch_solution(cfg, case, &patch)?;
    let (n, m) = (patch.param_dim(), patch.codim());
    let seed = case_seed(cfg.seed, &case.id);
    let t = &cfg.transport;
    let mut rows = Vec::new();
    for (i, &r) in t.r.iter().enumerate() {
        for (j, &sigma) in t.sigma.iter().enumerate() {
            let id = format!("{}/shell/r={r}/sigma={sigma}", case.id);
            let stream_seed = seed.wrapping_add(((i as u64) << 16) | j as u64);
            match shell_capture(&sol, r, sigma, t.mc_budget, stream_seed) {
                Ok(c) => {
                    let mut row = transport_row(cfg, case, id, n, m, 1.0, sol.h);
                    row.lhs = c.rhs;
                    row.rhs = c.lhs;
                    row.ratio = c.rhs / c.lhs;
                    row.mc_stderr = c.stderr;
                    row.ratio_tolerance = tolerance::MC_SIGMAS * c.stderr / c.lhs;
                    row.diagnostics.extra = vec![("rhs_sharp".into(), c.rhs_sharp), ("slack".into(), c.slack)];
                    if let Some(ex) = c.lhs_exact {
                        row.diagnostics.extra.push(("volume_exact".into(), ex));
                    }
                    let margin = c.rhs - c.lhs;
                    match c.status {
                        ShellStatus::Holds => rows.push(row.finish()),
                        ShellStatus::Inconclusive => {
                            row.status = RowStatus::Inconclusive;
                            row.violations.push(Violation {
                                name: "shell_capture".into(),
                                margin,
                                detail: format!("stderr {:e}", c.stderr),
                            });
                            rows.push(row);
                        }
                        ShellStatus::Violated => {
                            row.status = RowStatus::Fail;
                            row.violations.push(Violation {
                                name: "shell_capture".into(),
                                margin,
                                detail: format!("stderr {:e}", c.stderr),
                            });
                            rows.push(row);
                        }
                    }
                }
                Err(e) => rows.push(error_row(cfg, id, case.theorem, &e)),
            }
        }
    }
    Ok(rows)
}

/// Capture, coverage and shell rows for one case.
pub fn run_transport(cfg: &ExperimentConfig, case: &CaseSpec) -> Vec<InequalityReport> {
    let res = if case.theorem.on_patch() {
        patch_transport(cfg, case)
    } else {
        domain_transport(cfg, case)
    };
    res.unwrap_or_else(|e| vec![error_row(cfg, case.id.clone(), case.theorem, &e)])
}

/// Runs every selected case in parallel and returns rows in config order.
pub fn run_batch(cfg: &ExperimentConfig, kind: RunKind) -> Vec<InequalityReport> {
    let cases: Vec<&CaseSpec> = cfg.cases.iter().filter(|c| kind.selects(c.theorem)).collect();
    let per_case: Vec<Vec<InequalityReport>> = cases
        .par_iter()
        .map(|c| match kind {
            RunKind::Transport => run_transport(cfg, c),
            _ => vec![run_case(cfg, c)],
        })
        .collect();
    per_case.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(cases: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!("seed = 3\n[transport]\nr = [2.0]\n{cases}"), "test").unwrap()
    }

    #[test]
    fn euclidean_disk_is_an_equality() {
        let c = cfg(r#"
[[case]]
id = "disk"
theorem = "sobolev_domain"
manifold = { preset = "euclidean" }
domain = { kind = "ball", radius = 1.0 }
"#);
        let row = run_case(&c, &c.cases[0]);
        assert_eq!(row.status, RowStatus::Pass, "{:?}", row.violations);
        assert!((row.ratio - 1.0).abs() < 1e-6);
        assert_eq!(row.diagnostics.gate, EqualityGate::NearEquality);
        let rig = row.diagnostics.rigidity.unwrap();
        assert!(rig.hessian < 1e-6 && rig.density_gradient < 1e-6);
        let jac = row.diagnostics.max_jacobian_excess.unwrap();
        assert!(jac.abs() < 1e-8, "{jac}");
    }

    #[test]
    fn errors_become_rows() {
        let c = cfg(r#"
[[case]]
id = "bad"
theorem = "sobolev_domain"
manifold = { preset = "cone_smoothed", alpha = 1.5 }
domain = { kind = "ball", radius = 1.0 }
"#);
        let row = run_case(&c, &c.cases[0]);
        assert_ne!(row.status, RowStatus::Pass);
        assert_eq!(row.violations[0].name, "error");
    }

    #[test]
    fn case_seed_ignores_order() {
        assert_eq!(case_seed(5, "a"), case_seed(5, "a"));
        assert_ne!(case_seed(5, "a"), case_seed(5, "b"));
    }
}
