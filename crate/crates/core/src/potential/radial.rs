use crate::error::{Error, Result};
use crate::models::WarpedModel;
use crate::numeric::ode::{integrate as ode_integrate, DenseSolution, OdeOptions};
use crate::numeric::quadrature::integrate;

use super::{normalization_integrals, DensityField, GeoDomain, PotentialSolution, SolutionRepr, TIGHT_QUAD};

/// Rotationally symmetric potential `u(r)` on a ball or annulus.
///
/// The flux form `(f φ^{n-1} u')' = (n f^{n/(n-1)} - |f'|) φ^{n-1}` is
/// integrated for `(u', u)` from the inner end; on balls the regular
/// singular point at the pole is bridged by the series `u' ≈ c r`.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    model: WarpedModel,
    density: DensityField,
    r0: f64,
    r1: f64,
    start: f64,
    taylor: f64,
    ode: DenseSolution,
}

impl RadialSolution {
    fn source(&self, r: f64) -> (f64, f64, f64) {
        source(&self.model, &self.density, r)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.r0, self.r1)
    }

    pub fn du(&self, r: f64) -> f64 {
        if r < self.start {
            return self.taylor * r;
        }
        self.ode.eval(r.min(self.r1))[0]
    }

    pub fn u(&self, r: f64) -> f64 {
        if r < self.start {
            return 0.5 * self.taylor * r * r;
        }
        self.ode.eval(r.min(self.r1))[1]
    }

    pub fn ddu(&self, r: f64) -> f64 {
        if r < self.start {
            return self.taylor;
        }
        let du = self.du(r);
        second_derivative(&self.model, r, du, self.source(r))
    }
}

/// `(n f^{n/(n-1)} - |f'|, f, f')` at `r`.
fn source(model: &WarpedModel, density: &DensityField, r: f64) -> (f64, f64, f64) {
    let (f, df) = density.radial_eval(r).unwrap();
    let n = model.dim as f64;
    (n * f.powf(n / (n - 1.0)) - df.abs(), f, df)
}

fn second_derivative(model: &WarpedModel, r: f64, du: f64, (g, f, df): (f64, f64, f64)) -> f64 {
    let n = model.dim as f64;
    let log_phi = if model.is_euclidean() {
        1.0 / r
    } else {
        let (phi, dphi, _) = model.profile.eval(r);
        dphi / phi
    };
    g / f - du * (df / f + (n - 1.0) * log_phi)
}

pub fn solve_radial(f: &DensityField, domain: &GeoDomain, model: &WarpedModel) -> Result<PotentialSolution> {
    let (r0, r1) = match domain {
        GeoDomain::Ball { radius } => (0.0, *radius),
        GeoDomain::Annulus { inner, outer } => (*inner, *outer),
        GeoDomain::Meshed(_) => return Err(Error::InvalidArgument("solve_radial needs a ball or an annulus".into())),
    };
    let ints = normalization_integrals(f, domain, model)?;
    if ints.relative_residual() > crate::tolerance::COMPATIBILITY {
        return Err(Error::Unnormalized {
            residual: ints.relative_residual(),
            limit: crate::tolerance::COMPATIBILITY,
        });
    }
    let n = model.dim as f64;
    let (start, taylor, y0) = if r0 == 0.0 {
        let (f0, df0) = f.radial_eval(0.0).unwrap();
        let c = (n * f0.powf(n / (n - 1.0)) - df0.abs()) / (n * f0);
        let s = 1e-6 * r1;
        (s, c, [c * s, 0.5 * c * s * s])
    } else {
        (r0, 0.0, [-1.0, 0.0])
    };
    let ode = ode_integrate(
        |r, y: &[f64], dy: &mut [f64]| {
            dy[0] = second_derivative(model, r, y[0], source(model, f, r));
            dy[1] = y[0];
        },
        start,
        &y0,
        r1,
        OdeOptions {
            rtol: 1e-13,
            atol: 1e-14,
            ..OdeOptions::default()
        },
    )?;
    let sol = RadialSolution {
        model: model.clone(),
        density: f.clone(),
        r0,
        r1,
        start,
        taylor,
        ode,
    };

    // independent flux-quadrature check of u' on a grid
    let nn = model.dim as i32;
    let mut residual: f64 = 0.0;
    for i in 1..=64 {
        let r = r0 + (r1 - r0) * i as f64 / 64.0;
        let flux = integrate(|s| sol.source(s).0 * model.phi(s).powi(nn - 1), r0, r, TIGHT_QUAD)?.value;
        let inner = if r0 > 0.0 {
            f.radial_eval(r0).unwrap().0 * model.phi(r0).powi(nn - 1)
        } else {
            0.0
        };
        let want = (flux - inner) / (f.radial_eval(r).unwrap().0 * model.phi(r).powi(nn - 1));
        residual = residual.max((sol.du(r) - want).abs());
    }
    let mut neumann = (sol.du(r1) - 1.0).abs();
    if r0 > 0.0 {
        neumann = neumann.max((sol.du(r0) + 1.0).abs());
    }
    Ok(PotentialSolution {
        model: model.clone(),
        domain: domain.clone(),
        density: f.clone(),
        repr: SolutionRepr::Radial(sol),
        residual_interior: residual,
        residual_neumann: neumann,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CurvatureClass, WarpedProfile};
    use crate::potential::normalize_density;

    #[test]
    fn euclidean_unit_ball_is_quadratic() {
        for n in 2..=4 {
            let m = WarpedModel::euclidean(n);
            let d = GeoDomain::Ball { radius: 1.0 };
            let sol = solve_radial(&DensityField::constant(1.0), &d, &m).unwrap();
            let SolutionRepr::Radial(s) = &sol.repr else { panic!() };
            for r in [0.0, 1e-9, 0.1, 0.5, 0.9, 1.0] {
                assert!((s.du(r) - r).abs() < 1e-10, "n={n} r={r} {}", s.du(r));
                assert!((s.u(r) - 0.5 * r * r).abs() < 1e-10);
                assert!((s.ddu(r) - 1.0).abs() < 1e-9);
            }
            assert!(sol.residual_neumann < 1e-10);
        }
    }

    #[test]
    fn cone_boundary_flux_is_one() {
        let m = WarpedModel::new(2, WarpedProfile::ConeSmoothed { alpha: 0.5 }, CurvatureClass::SectionalNonneg).unwrap();
        let d = GeoDomain::Ball { radius: 1.0 };
        for coeffs in [vec![1.0], vec![2.0, 0.0, -1.0]] {
            let f = normalize_density(&DensityField::radial(coeffs), &d, &m).unwrap();
            let sol = solve_radial(&f, &d, &m).unwrap();
            assert!(sol.residual_neumann < 1e-9, "{}", sol.residual_neumann);
            assert!(sol.residual_interior < 1e-9, "{}", sol.residual_interior);
        }
    }

    #[test]
    fn annulus_fluxes() {
        let m = WarpedModel::euclidean(2);
        let d = GeoDomain::Annulus { inner: 0.5, outer: 1.5 };
        let f = normalize_density(&DensityField::constant(1.0), &d, &m).unwrap();
        let sol = solve_radial(&f, &d, &m).unwrap();
        assert!(sol.residual_neumann < 1e-9, "{}", sol.residual_neumann);
    }

    #[test]
    fn unnormalized_is_rejected() {
        let m = WarpedModel::euclidean(2);
        let err = solve_radial(&DensityField::constant(3.0), &GeoDomain::Ball { radius: 1.0 }, &m).unwrap_err();
        assert!(matches!(err, Error::Unnormalized { .. }));
    }
}
