//! Concentration sweep: solve the problem along an increasing lambda grid and
//! measure how the solutions localize in the well and approach a limit
//! solution.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::build_basis;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::limit::{solve_limit_set, LimitSolution};
use crate::model::ProblemParams;
use crate::solver::{
    find_linking_geometry, linking_solve, mountain_pass_solve, refine_critical_point,
    CriticalPoint, SolverOptions,
};
use crate::spectrum::solve_pencil_crossing;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub energy: f64,
    pub norm_lambda: f64,
    pub outside_mass: f64,
    pub well_penalty: f64,
    pub l2_distance: f64,
    pub h2_distance: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.status == "ok")
    }
}

/// Distances between a truncation-box field and a well-box field extended by
/// zero, in L^2 and in the Laplacian-weighted surrogate of the H^2 seminorm.
fn distances(
    coeffs: &DVector<f64>,
    nu_d: &[f64],
    limit: &LimitSolution,
    nu_omega: &[f64],
    cross: &DMatrix<f64>,
) -> (f64, f64) {
    let c = coeffs;
    let d = &limit.coeffs;
    let cc = c.norm_squared();
    let dd = d.norm_squared();
    let mut cd = 0.0;
    let mut cd_weighted = 0.0;
    for k in 0..c.len() {
        for l in 0..d.len() {
            let x = cross[(k, l)];
            cd += c[k] * d[l] * x;
            cd_weighted += c[k] * nu_d[k] * d[l] * nu_omega[l] * x;
        }
    }
    let l2 = (cc + dd - 2.0 * cd).max(0.0).sqrt();
    let cc_w: f64 = (0..c.len()).map(|k| (c[k] * nu_d[k]).powi(2)).sum();
    let dd_w: f64 = (0..d.len()).map(|l| (d[l] * nu_omega[l]).powi(2)).sum();
    let h2 = (cc_w + dd_w - 2.0 * cd_weighted).max(0.0).sqrt();
    (l2, h2)
}

fn solve_at_lambda(
    params: &ProblemParams,
    lambda: f64,
    warm: Option<(&DVector<f64>, f64, f64)>,
    opts: &SolverOptions,
) -> Result<CriticalPoint> {
    let mut p = params.clone();
    p.lambda = lambda;
    if lambda.is_nan() || lambda <= p.lambda_floor() {
        return Err(Error::InvalidLambda(format!(
            "lambda = {lambda} at or below the floor {}",
            p.lambda_floor()
        )));
    }
    let model = EnergyModel::from_params(&p)?;
    if let Some((u0, prev_energy, prev_norm)) = warm {
        if let Ok(point) = refine_critical_point(&model, u0, opts) {
            // continuation must stay on a nontrivial branch comparable to the
            // previous solution; otherwise fall back to a full solve
            if point.energy > 1e-3 * prev_energy && point.norm_a > 1e-3 * prev_norm {
                return Ok(point);
            }
        }
    }
    if p.a0.min(p.b0) >= 0.0 {
        let geometry = find_linking_geometry(&model, None, opts)?;
        mountain_pass_solve(&model, &geometry, opts)
    } else {
        let decomp = solve_pencil_crossing(&model.forms, 2)?;
        let geometry = find_linking_geometry(&model, Some(&decomp), opts)?;
        linking_solve(&model, &decomp, &geometry, opts)
    }
}

/// Solve along the grid and assemble all concentration diagnostics. Warm
/// starts track a solution branch sequentially; the cold variant solves the
/// grid points independently (in parallel).
pub fn sweep(
    params: &ProblemParams,
    lambda_grid: &[f64],
    warm_start: bool,
    opts: &SolverOptions,
) -> Result<SweepReport> {
    if lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("lambda grid must be increasing".into()));
    }
    let basis = build_basis(&params.well.truncation_box, params.modes_per_dim)?;
    let omega_basis = build_basis(&params.well.well_box, params.modes_per_dim)?;
    let cross = basis.cross_overlap(&omega_basis, &params.well.well_box)?;
    let limits = solve_limit_set(
        &params.well.well_box,
        params.a0,
        params.b0,
        params.nonlinearity.clone(),
        params.modes_per_dim,
        params.quadrature_panels,
        opts,
    )?;

    let row_for = |lambda: f64, outcome: Result<CriticalPoint>| -> SweepRow {
        match outcome {
            Ok(point) => {
                let mut p = params.clone();
                p.lambda = lambda;
                // forms only, for the exact region integrals
                let forms = crate::forms::assemble_forms(&basis, &p).expect("forms at solved lambda");
                let outside = forms.outside_mass(&point.coeffs);
                let penalty = forms.well_penalty(&point.coeffs, params.well.outside_value);
                let (l2, h2) = limits
                    .iter()
                    .map(|lim| distances(&point.coeffs, &basis.nu, lim, &omega_basis.nu, &cross))
                    .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                    .unwrap();
                SweepRow {
                    lambda,
                    energy: point.energy,
                    norm_lambda: point.norm_a,
                    outside_mass: outside,
                    well_penalty: penalty,
                    l2_distance: l2,
                    h2_distance: h2,
                    status: "ok".into(),
                }
            }
            Err(e) => SweepRow {
                lambda,
                energy: f64::NAN,
                norm_lambda: f64::NAN,
                outside_mass: f64::NAN,
                well_penalty: f64::NAN,
                l2_distance: f64::NAN,
                h2_distance: f64::NAN,
                status: format!("error: {e}"),
            },
        }
    };

    let rows: Vec<SweepRow> = if warm_start {
        let mut rows = Vec::with_capacity(lambda_grid.len());
        let mut previous: Option<(DVector<f64>, f64, f64)> = None;
        for &lambda in lambda_grid {
            let warm = previous.as_ref().map(|(u, e, n)| (u, *e, *n));
            let outcome = solve_at_lambda(params, lambda, warm, opts);
            if let Ok(p) = &outcome {
                previous = Some((p.coeffs.clone(), p.energy, p.norm_a));
            }
            rows.push(row_for(lambda, outcome));
        }
        rows
    } else {
        lambda_grid
            .par_iter()
            .map(|&lambda| row_for(lambda, solve_at_lambda(params, lambda, None, opts)))
            .collect()
    };

    Ok(SweepReport { rows })
}
