//! The constant-coefficient problem on the well box itself: the target of the
//! large-lambda concentration and the reference spectrum for the
//! asymptotically linear hypothesis.

use nalgebra::DVector;

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::geometry::BoxDomain;
use crate::model::NonlinearitySpec;
use crate::solver::{
    find_linking_geometry, linking_solve, mountain_pass_solve, CriticalPoint, SolverOptions,
};
use crate::spectrum::solve_pencil_crossing;

#[derive(Debug, Clone)]
pub struct LimitSolution {
    /// Coefficients in the sine basis of the well box.
    pub coeffs: DVector<f64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub norm_a: f64,
    pub iterations: usize,
}

impl From<CriticalPoint> for LimitSolution {
    fn from(p: CriticalPoint) -> Self {
        Self {
            coeffs: p.coeffs,
            energy: p.energy,
            grad_norm: p.grad_norm,
            norm_a: p.norm_a,
            iterations: p.iterations,
        }
    }
}

/// Energy model of the limit problem (quadratic part diagonal in the well
/// basis, so the assembled pencil is exact).
pub fn limit_model(
    omega: &BoxDomain,
    a0: f64,
    b0: f64,
    nonlinearity: NonlinearitySpec,
    modes_per_dim: usize,
    quadrature_panels: usize,
) -> Result<EnergyModel> {
    EnergyModel::on_omega(omega, a0, b0, nonlinearity, modes_per_dim, quadrature_panels)
}

/// Nontrivial critical point of the limit functional.
pub fn solve_limit(
    omega: &BoxDomain,
    a0: f64,
    b0: f64,
    nonlinearity: NonlinearitySpec,
    modes_per_dim: usize,
    quadrature_panels: usize,
    opts: &SolverOptions,
) -> Result<LimitSolution> {
    // a vanishing nonlinearity leaves only the trivial solution
    let probe_zero = [0.5, 1.0, 3.0, 10.0]
        .iter()
        .all(|&t| nonlinearity.eval(t) == (0.0, 0.0));
    if probe_zero {
        return Err(Error::DegenerateToZero(
            "the nonlinearity vanishes identically; the homogeneous problem has only the trivial solution".into(),
        ));
    }
    let model = limit_model(omega, a0, b0, nonlinearity, modes_per_dim, quadrature_panels)?;
    let point = if a0.min(b0) >= 0.0 {
        let geometry = find_linking_geometry(&model, None, opts)?;
        mountain_pass_solve(&model, &geometry, opts)?
    } else {
        let decomp = solve_pencil_crossing(&model.forms, 2)?;
        let geometry = find_linking_geometry(&model, Some(&decomp), opts)?;
        linking_solve(&model, &decomp, &geometry, opts)?
    };
    Ok(point.into())
}

/// A small set of limit solutions: the solver's branch and its mirror (the
/// model nonlinearities are odd), deduplicated.
pub fn solve_limit_set(
    omega: &BoxDomain,
    a0: f64,
    b0: f64,
    nonlinearity: NonlinearitySpec,
    modes_per_dim: usize,
    quadrature_panels: usize,
    opts: &SolverOptions,
) -> Result<Vec<LimitSolution>> {
    let base = solve_limit(
        omega,
        a0,
        b0,
        nonlinearity,
        modes_per_dim,
        quadrature_panels,
        opts,
    )?;
    let mirrored = LimitSolution {
        coeffs: -&base.coeffs,
        ..base.clone()
    };
    Ok(vec![base, mirrored])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{limit_spectrum, SpectralSetup};
    use crate::forms::assemble_on_omega;
    use crate::model::NonlinearityKind;
    use approx::assert_relative_eq;

    fn unit_interval() -> BoxDomain {
        BoxDomain::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn definite_limit_problem_solves() {
        let opts = SolverOptions::default().with_tol(1e-8);
        let sol = solve_limit(
            &unit_interval(),
            1.0,
            1.0,
            NonlinearitySpec::power(4.0),
            16,
            48,
            &opts,
        )
        .unwrap();
        assert!(sol.energy > 0.0);
        assert!(sol.grad_norm <= 1e-8 * sol.norm_a.max(1.0));
    }

    #[test]
    fn strongly_indefinite_limit_problem_solves() {
        // a0 = -15 < -mu_1: the regime with no definite inner product
        let opts = SolverOptions::default().with_tol(1e-7);
        let sol = solve_limit(
            &unit_interval(),
            -15.0,
            0.0,
            NonlinearitySpec::power(4.0),
            16,
            48,
            &opts,
        )
        .unwrap();
        assert!(sol.energy > 0.0);
        let model = limit_model(
            &unit_interval(),
            -15.0,
            0.0,
            NonlinearitySpec::power(4.0),
            16,
            48,
        )
        .unwrap();
        // independent residual check of the stationarity system
        let r = model.residual_dual(&sol.coeffs).unwrap();
        assert!(r.norm() <= 1e-5 * model.forms.a.amax().sqrt());
    }

    #[test]
    fn vanishing_nonlinearity_degenerates() {
        let mut zero = NonlinearitySpec::saturating(1.0);
        zero.l_infty = 0.0;
        assert_eq!(zero.kind, NonlinearityKind::Saturating);
        let opts = SolverOptions::default();
        match solve_limit(&unit_interval(), 1.0, 1.0, zero, 8, 16, &opts) {
            Err(Error::DegenerateToZero(_)) => {}
            other => panic!("expected DegenerateToZero, got {other:?}"),
        }
    }

    #[test]
    fn quadratic_part_spectrum_matches_closed_form() {
        // generalized eigenvalues of the diagonal pencil reproduce the limit
        // spectrum identically
        let basis = crate::basis::build_basis(&unit_interval(), 12).unwrap();
        let forms = assemble_on_omega(&basis, -15.0, 0.0);
        let setup = SpectralSetup::new(&unit_interval(), 12);
        let sigma = limit_spectrum(-15.0, 0.0, &setup, 12);
        // sigma_k = mu_k^2 + a0 mu_k + b0 equals the diagonal of A - Gm
        let d = forms.d_matrix();
        let mut diag: Vec<f64> = (0..12).map(|k| d[(k, k)]).collect();
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in diag.iter().zip(&sigma) {
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn power_scaling_maps_solutions() {
        // scaling t -> tau^(1/(p-2)) t intertwines the problems with f and
        // f/tau: the mapped solution satisfies the scaled stationarity system
        // to machine precision
        let opts = SolverOptions::default().with_tol(1e-10);
        let p = 4.0;
        let sol = solve_limit(
            &unit_interval(),
            1.0,
            1.0,
            NonlinearitySpec::power(p),
            12,
            48,
            &opts,
        )
        .unwrap();
        let tau = 2.0f64;
        let sigma = tau.powf(1.0 / (p - 2.0));
        let scaled_coeffs = &sol.coeffs * sigma;
        // the problem with nonlinearity f/tau, realized through l0 = 0 power
        // family scaled externally: residual_tau(sigma u) = sigma * residual(u)
        let model = limit_model(&unit_interval(), 1.0, 1.0, NonlinearitySpec::power(p), 12, 48)
            .unwrap();
        let r_base = model.residual_dual(&sol.coeffs).unwrap();
        // D(sigma u) - (1/tau) N(sigma u) with N homogeneous of degree p-1
        let d_term = model.forms.d_matrix() * &scaled_coeffs;
        let n_term = (model.residual_dual(&scaled_coeffs).unwrap() - &d_term) * (-1.0);
        let r_scaled = &d_term - &n_term / tau;
        for k in 0..12 {
            let expected = sigma * r_base[k];
            assert!((r_scaled[k] - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
        }
    }
}
