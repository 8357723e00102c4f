use std::sync::Arc;

use super::config::{CaseSpec, DomainSpec, ExperimentConfig};
use super::report::{ConvergenceLevel, ConvergenceStatus, ConvergenceTable};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::potential::{normalization_integrals, normalize_density, solve, GeoDomain, SolutionRepr};

pub const REQUIRED_ORDER: f64 = 1.8;

fn order(prev: (f64, f64), cur: (f64, f64)) -> f64 {
    (prev.1 / cur.1).ln() / (prev.0 / cur.0).ln()
}

/// Mesh-versus-radial refinement study of a disk case, halving `h` from the
/// configured width `levels - 1` times.
pub fn convergence_study(cfg: &ExperimentConfig, case: &CaseSpec, levels: usize) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(Error::Config(format!("a convergence study needs at least 3 levels, got {levels}")));
    }
    if case.theorem.on_patch() {
        return Err(Error::Unsupported(format!("case {}: convergence studies run on disk domains", case.id)));
    }
    let model = case.manifold.as_ref().expect("validated").build()?;
    let spec = case.domain.as_ref().expect("validated");
    let f = case.domain_density();
    let radius = spec
        .disk_radius()
        .ok_or_else(|| Error::Unsupported(format!("case {}: convergence studies need a disk domain", case.id)))?;
    let ball = GeoDomain::Ball { radius };
    let exact_f = normalize_density(&f, &ball, &model)?;
    let exact = solve(&exact_f, &ball, &model)?;
    let SolutionRepr::Radial(rad) = &exact.repr else {
        return Err(Error::Unsupported("density is not radial".into()));
    };
    let exact_ratio = normalization_integrals(&f, &ball, &model)?.sobolev_ratio(model.theta);

    if matches!(spec, DomainSpec::Ball { .. }) {
        return Ok(ConvergenceTable {
            case_id: case.id.clone(),
            levels: vec![ConvergenceLevel {
                h: 0.0,
                u_error: 0.0,
                gradient_error: 0.0,
                ratio_error: 0.0,
                order_u: None,
                order_gradient: None,
                order_ratio: None,
            }],
            min_order_u: None,
            required_order: REQUIRED_ORDER,
            status: ConvergenceStatus::Exact,
            detail: format!(
                "closed-form radial solve; interior residual {:e}, Neumann residual {:e}",
                exact.residual_interior, exact.residual_neumann
            ),
        });
    }

    let mut rows: Vec<ConvergenceLevel> = Vec::new();
    let mut h = cfg.solver.h;
    for _ in 0..levels {
        let dom = GeoDomain::Meshed(Arc::new(TriMesh::polar_disk(radius, h)?));
        let ratio = normalization_integrals(&f, &dom, &model)?.sobolev_ratio(model.theta);
        let fm = normalize_density(&f, &dom, &model)?;
        let sol = solve(&fm, &dom, &model)?;
        let SolutionRepr::Mesh(ms) = &sol.repr else {
            return Err(Error::Solver("expected a mesh solution".into()));
        };
        let u_error = ms.l2_error(|x| rad.u(x[0].hypot(x[1])));
        let boundary = ms.mesh.boundary_vertices();
        let mut gradient_error: f64 = 0.0;
        for (i, v) in ms.mesh.vertices.iter().enumerate() {
            if boundary[i] {
                continue;
            }
            let r = v[0].hypot(v[1]);
            let g = sol.gradient(&[v[0], v[1]])?;
            let du = rad.du(r);
            let e = if r > 0.0 {
                let radial = (g[0] * v[0] + g[1] * v[1]) / r;
                let tangential = (g[1] * v[0] - g[0] * v[1]) / r;
                (radial - du).hypot(tangential)
            } else {
                g[0].hypot(g[1])
            };
            gradient_error = gradient_error.max(e);
        }
        let ratio_error = (ratio - exact_ratio).abs();
        let (order_u, order_gradient, order_ratio) = match rows.last() {
            Some(p) => (
                Some(order((p.h, p.u_error), (ms.mesh.h, u_error))),
                Some(order((p.h, p.gradient_error), (ms.mesh.h, gradient_error))),
                Some(order((p.h, p.ratio_error), (ms.mesh.h, ratio_error))),
            ),
            None => (None, None, None),
        };
        rows.push(ConvergenceLevel {
            h: ms.mesh.h,
            u_error,
            gradient_error,
            ratio_error,
            order_u,
            order_gradient,
            order_ratio,
        });
        h *= 0.5;
    }

    let monotone = rows.windows(2).all(|w| w[1].u_error < w[0].u_error);
    let min_order_u = rows.iter().filter_map(|l| l.order_u).fold(f64::INFINITY, f64::min);
    let (status, detail) = if !monotone {
        (ConvergenceStatus::Inconclusive, "u errors do not decrease monotonically".to_string())
    } else if min_order_u >= REQUIRED_ORDER {
        (ConvergenceStatus::Pass, format!("min order(u) {min_order_u:.4}"))
    } else {
        (
            ConvergenceStatus::Fail,
            format!("min order(u) {min_order_u:.4} below {REQUIRED_ORDER}"),
        )
    };
    Ok(ConvergenceTable {
        case_id: case.id.clone(),
        levels: rows,
        min_order_u: Some(min_order_u),
        required_order: REQUIRED_ORDER,
        status,
        detail,
    })
}

/// Studies every domain case; unsupported cases become inconclusive tables.
pub fn convergence_batch(cfg: &ExperimentConfig, levels: usize) -> Vec<ConvergenceTable> {
    use rayon::prelude::*;
    let cases: Vec<&CaseSpec> = cfg.cases.iter().filter(|c| !c.theorem.on_patch()).collect();
    cases
        .par_iter()
        .map(|c| {
            convergence_study(cfg, c, levels).unwrap_or_else(|e| ConvergenceTable {
                case_id: c.id.clone(),
                levels: Vec::new(),
                min_order_u: None,
                required_order: REQUIRED_ORDER,
                status: match e {
                    Error::Config(_) => ConvergenceStatus::Fail,
                    _ => ConvergenceStatus::Inconclusive,
                },
                detail: e.to_string(),
            })
        })
        .collect()
}
