//! Generalized eigenvalues of the singular pencil A v = beta Gm v.
//!
//! A is positive definite and Gm positive semidefinite, so the problem is
//! reduced through a Cholesky factorization A = L L' to the ordinary symmetric
//! problem for C = L^-1 Gm L^-T: eigenvalues theta of C map to beta = 1/theta,
//! the null directions of Gm land at theta = 0 and are discarded.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::basis::{build_basis, SpectralBasis};
use crate::constants::SpectralSetup;
use crate::error::{Error, Result};
use crate::forms::{assemble_forms, QuadraticForms};
use crate::model::ProblemParams;

/// Relative theta cutoff separating finite pencil eigenvalues from the
/// numerical null space of Gm.
const THETA_REL_CUTOFF: f64 = 1e-12;

/// Relative gap under which adjacent eigenvalues are clustered.
const CLUSTER_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Generalized eigenvalue beta_k(lambda).
    pub beta: f64,
    /// Eigenvector normalized by Gm(e, e) = 1.
    pub coeffs: DVector<f64>,
    /// Relative residual |A e - beta Gm e| / |A e|.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub pairs: Vec<EigenPair>,
    /// Indices (into `pairs`) with beta < 1.
    pub negative_subspace: Vec<usize>,
    /// Gaps beta_{k+1} - beta_k.
    pub gaps: Vec<f64>,
    /// Number of finite generalized eigenvalues in the discrete space.
    pub finite_count: usize,
    /// Full A-orthonormal eigenbasis of the reduced problem (all columns).
    pub(crate) a_orthonormal: DMatrix<f64>,
    /// All reduced eigenvalues theta, descending, matching the columns above.
    pub(crate) thetas: Vec<f64>,
}

impl SpectralDecomposition {
    /// A-orthonormal basis of the beta < 1 subspace.
    pub fn negative_basis(&self) -> DMatrix<f64> {
        let n = self.a_orthonormal.nrows();
        let cols = self.negative_subspace.len();
        let mut b = DMatrix::zeros(n, cols);
        for (j, &idx) in self.negative_subspace.iter().enumerate() {
            b.set_column(j, &self.a_orthonormal.column(idx));
        }
        b
    }

    /// Index of the first pair with beta > 1, if any.
    pub fn first_above_one(&self) -> Option<usize> {
        self.pairs.iter().position(|p| p.beta > 1.0)
    }
}

/// Smallest `count` finite generalized eigenvalues of A v = beta Gm v.
pub fn solve_pencil(forms: &QuadraticForms, count: usize) -> Result<SpectralDecomposition> {
    if count == 0 {
        return Err(Error::InvalidConfig("count must be at least 1".into()));
    }
    if forms.gm_is_zero() {
        return Err(Error::UndefinedForm(
            "the negative form vanishes identically (min(a0, b0) >= 0 and no negative potential)"
                .into(),
        ));
    }
    let n = forms.len();
    let chol = forms
        .a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::FactorizationFailure(
            "positive-part matrix is not positive definite (lambda too small?)".into(),
        ))?;
    let l = chol.l();
    let li_gm = l
        .solve_lower_triangular(&forms.gm)
        .ok_or_else(|| Error::FactorizationFailure("triangular solve failed".into()))?;
    let c_raw = l
        .solve_lower_triangular(&li_gm.transpose())
        .ok_or_else(|| Error::FactorizationFailure("triangular solve failed".into()))?;
    let c = (&c_raw + c_raw.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let thetas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    // back-transform all columns: e_j = L^-T y_j is A-orthonormal
    let mut a_orthonormal = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(i).into_owned();
        let e = l
            .tr_solve_lower_triangular(&y)
            .ok_or_else(|| Error::FactorizationFailure("triangular solve failed".into()))?;
        a_orthonormal.set_column(col, &e);
    }

    let theta_max = thetas.first().cloned().unwrap_or(0.0);
    if theta_max <= 0.0 {
        return Err(Error::InsufficientRange(
            "no finite generalized eigenvalues in the discrete space".into(),
        ));
    }
    let cutoff = theta_max * THETA_REL_CUTOFF;
    let finite_count = thetas.iter().take_while(|&&t| t > cutoff).count();
    if count > finite_count {
        return Err(Error::InsufficientRange(format!(
            "requested {count} eigenvalues but only {finite_count} finite ones exist"
        )));
    }

    let mut pairs = Vec::with_capacity(count);
    for (k, &theta) in thetas.iter().take(count).enumerate() {
        let beta = 1.0 / theta;
        let coeffs = a_orthonormal.column(k) / theta.sqrt();
        let ae = &forms.a * &coeffs;
        let residual = (&ae - &forms.gm * &coeffs * beta).norm() / ae.norm();
        pairs.push(EigenPair {
            beta,
            coeffs,
            residual,
        });
    }
    let negative_subspace: Vec<usize> = pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.beta < 1.0)
        .map(|(i, _)| i)
        .collect();
    let gaps = pairs.windows(2).map(|w| w[1].beta - w[0].beta).collect();
    Ok(SpectralDecomposition {
        pairs,
        negative_subspace,
        gaps,
        finite_count,
        a_orthonormal,
        thetas,
    })
}

/// Solve with enough eigenvalues to see the crossing beta > 1, plus `extra`
/// more pairs beyond it.
pub fn solve_pencil_crossing(forms: &QuadraticForms, extra: usize) -> Result<SpectralDecomposition> {
    let probe = solve_pencil(forms, 1)?;
    // theta descending, beta = 1/theta: the crossing beta > 1 is theta < 1
    let crossing = probe.thetas[..probe.finite_count]
        .iter()
        .position(|&t| t < 1.0);
    let count = match crossing {
        Some(idx) => (idx + 1 + extra).min(probe.finite_count),
        None => probe.finite_count,
    };
    solve_pencil(forms, count.max(1))
}

// ---------------------------------------------------------------------------
// Convergence sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub lambda: f64,
    pub k: usize,
    pub beta: f64,
    pub beta0: f64,
    pub rel_err: f64,
    pub outside_mass: f64,
    /// L^2(well) angle between the eigenvector and the matching analytic
    /// eigenspace of the well, in radians.
    pub angle: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

/// Pencil spectra along an increasing lambda grid, with limit diagnostics.
pub fn eigen_convergence_sweep(
    params: &ProblemParams,
    lambda_grid: &[f64],
    count: usize,
) -> Result<ConvergenceTable> {
    if lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("lambda grid must be increasing".into()));
    }
    let floor = params.lambda_floor();
    if lambda_grid.iter().any(|&l| l <= floor) {
        return Err(Error::InvalidLambda(format!(
            "every grid point must exceed {floor}"
        )));
    }
    let basis = build_basis(&params.well.truncation_box, params.modes_per_dim)?;
    let omega_basis = build_basis(&params.well.well_box, params.modes_per_dim)?;
    let cross = basis.cross_overlap(&omega_basis, &params.well.well_box)?;
    let setup = SpectralSetup::new(&params.well.well_box, count.max(4));

    let mut rows = Vec::new();
    for &lambda in lambda_grid {
        let mut p = params.clone();
        p.lambda = lambda;
        let forms = assemble_forms(&basis, &p)?;
        let decomp = solve_pencil(&forms, count)?;
        for (i, pair) in decomp.pairs.iter().enumerate() {
            let level = setup.level_of[i] + 1;
            let beta0 = crate::constants::beta0(level, params.a0, params.b0, &setup)?;
            let outside = forms.outside_mass(&pair.coeffs);
            let angle = eigenspace_angle(&pair.coeffs, &cross, &forms, &omega_basis, &setup, level);
            rows.push(ConvergenceRow {
                lambda,
                k: i + 1,
                beta: pair.beta,
                beta0,
                rel_err: (pair.beta - beta0).abs() / beta0.abs().max(f64::MIN_POSITIVE),
                outside_mass: outside,
                angle,
                residual: pair.residual,
            });
        }
    }
    Ok(ConvergenceTable { rows })
}

/// Angle in L^2(well) between a truncation-box field and the analytic
/// eigenspace at a distinct level of the well spectrum.
fn eigenspace_angle(
    coeffs: &DVector<f64>,
    cross: &DMatrix<f64>,
    forms: &QuadraticForms,
    omega_basis: &SpectralBasis,
    setup: &SpectralSetup,
    level: usize,
) -> f64 {
    // flat omega-basis index of each eigenfunction in the level
    let m = omega_basis.modes_per_dim;
    let mode_index = |multi: &[usize]| -> Option<usize> {
        if multi.iter().any(|&k| k > m) {
            return None;
        }
        Some(multi.iter().fold(0usize, |acc, &k| acc * m + (k - 1)))
    };
    let projections: Vec<f64> = setup
        .level_modes(level)
        .iter()
        .filter_map(|multi| mode_index(multi))
        .map(|flat| {
            // q_l = integral over the well of the field times the l-th
            // orthonormal well mode
            (0..coeffs.len()).map(|k| coeffs[k] * cross[(k, flat)]).sum::<f64>()
        })
        .collect();
    let inside_norm = {
        let inside = (coeffs.transpose() * &forms.overlap_well * coeffs)[(0, 0)];
        inside.max(0.0).sqrt()
    };
    if inside_norm == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let proj_norm = projections.iter().map(|q| q * q).sum::<f64>().sqrt();
    (proj_norm / inside_norm).clamp(0.0, 1.0).acos()
}

// ---------------------------------------------------------------------------
// Multiplicity clustering
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ClusterInfo {
    /// 1-based cluster index (numerical level).
    pub level: usize,
    pub dim: usize,
    pub beta_mean: f64,
    /// Dimension of the analytic eigenspace at the same level, when computed.
    pub analytic_dim: Option<usize>,
    pub within_analytic_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityReport {
    pub clusters: Vec<ClusterInfo>,
    pub all_within_bounds: bool,
    pub first_cluster_simple: bool,
}

/// Cluster near-equal eigenvalues into numerical multiplicities and compare
/// against the analytic level dimensions.
pub fn simplicity_check(
    decomposition: &SpectralDecomposition,
    setup: &SpectralSetup,
) -> MultiplicityReport {
    let mut clusters: Vec<ClusterInfo> = Vec::new();
    let mut start = 0;
    while start < decomposition.pairs.len() {
        let mut end = start + 1;
        while end < decomposition.pairs.len() {
            let prev = decomposition.pairs[end - 1].beta;
            let cur = decomposition.pairs[end].beta;
            if (cur - prev).abs() <= CLUSTER_REL_TOL * cur.abs().max(prev.abs()) {
                end += 1;
            } else {
                break;
            }
        }
        let level = clusters.len() + 1;
        let dim = end - start;
        let beta_mean = decomposition.pairs[start..end]
            .iter()
            .map(|p| p.beta)
            .sum::<f64>()
            / dim as f64;
        let analytic_dim = setup.multiplicities.get(level - 1).cloned();
        let within = analytic_dim.map(|a| dim <= a).unwrap_or(true);
        clusters.push(ClusterInfo {
            level,
            dim,
            beta_mean,
            analytic_dim,
            within_analytic_bound: within,
        });
        start = end;
    }
    MultiplicityReport {
        all_within_bounds: clusters.iter().all(|c| c.within_analytic_bound),
        first_cluster_simple: clusters.first().map(|c| c.dim == 1).unwrap_or(false),
        clusters,
    }
}

// ---------------------------------------------------------------------------
// Form bounds on the split subspaces
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FormBoundReport {
    /// beta just below the crossing (None when the negative subspace is empty).
    pub beta_below: Option<f64>,
    /// beta just above the crossing.
    pub beta_above: f64,
    /// min over negative-side samples of (1 - 1/beta_below) - ratio.
    pub negative_margin: f64,
    /// min over complement samples of ratio - (1 - 1/beta_above).
    pub complement_margin: f64,
    /// max over returned pairs of |D(e,e) - (beta - 1)| under G-normalization.
    pub eigen_identity_error: f64,
    pub samples_per_side: usize,
}

/// Sample the two Rayleigh-quotient bounds of the form split: the ratio
/// D(u,u)/|u|_A^2 is at most 1 - 1/beta_{k0-1} on the negative subspace and at
/// least 1 - 1/beta_{k0} on its A-orthogonal complement.
pub fn form_bounds_check(
    forms: &QuadraticForms,
    decomposition: &SpectralDecomposition,
    k0_discrete: usize,
    samples: usize,
    seed: u64,
) -> Result<FormBoundReport> {
    use rand::Rng;
    use rand::SeedableRng;
    let n_pairs = decomposition.pairs.len();
    if k0_discrete < 1 || k0_discrete > n_pairs {
        return Err(Error::PrerequisiteFailed(format!(
            "k0 = {k0_discrete} outside the computed range 1..={n_pairs}"
        )));
    }
    let beta_above = decomposition.pairs[k0_discrete - 1].beta;
    let beta_below = (k0_discrete >= 2).then(|| decomposition.pairs[k0_discrete - 2].beta);
    if beta_above <= 1.0 {
        return Err(Error::PrerequisiteFailed(format!(
            "beta_k0 = {beta_above} does not exceed 1"
        )));
    }
    if let Some(b) = beta_below {
        if b >= 1.0 {
            return Err(Error::PrerequisiteFailed(format!(
                "beta_(k0-1) = {b} is not below 1"
            )));
        }
    }

    let n = forms.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ratio = |u: &DVector<f64>| -> f64 {
        let a = forms.inner_a(u, u);
        (a - forms.form_g(u, u)) / a
    };

    let mut negative_margin = f64::INFINITY;
    if let Some(beta_b) = beta_below {
        let bound = 1.0 - 1.0 / beta_b;
        let neg_cols = k0_discrete - 1;
        for _ in 0..samples {
            let mut u = DVector::zeros(n);
            for j in 0..neg_cols {
                let z = rng.random::<f64>() * 2.0 - 1.0;
                u += decomposition.a_orthonormal.column(j) * z;
            }
            negative_margin = negative_margin.min(bound - ratio(&u));
        }
    }

    let bound_above = 1.0 - 1.0 / beta_above;
    let mut complement_margin = f64::INFINITY;
    let comp_cols = n - (k0_discrete - 1);
    for _ in 0..samples {
        let mut u = DVector::zeros(n);
        for j in 0..comp_cols {
            let z = rng.random::<f64>() * 2.0 - 1.0;
            u += decomposition.a_orthonormal.column(k0_discrete - 1 + j) * z;
        }
        complement_margin = complement_margin.min(ratio(&u) - bound_above);
    }

    let mut eigen_identity_error = 0.0f64;
    for pair in &decomposition.pairs {
        let d = forms.form_d(&pair.coeffs);
        eigen_identity_error =
            eigen_identity_error.max((d - (pair.beta - 1.0)).abs() / pair.beta.abs().max(1.0));
    }

    Ok(FormBoundReport {
        beta_below,
        beta_above,
        negative_margin: if negative_margin.is_finite() {
            negative_margin
        } else {
            0.0
        },
        complement_margin,
        eigen_identity_error,
        samples_per_side: samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::geometry::BoxDomain;
    use crate::forms::assemble_on_omega;
    use crate::model::{NonlinearitySpec, WellPotential};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn well_params(a0: f64, b0: f64, lambda: f64, m: usize) -> ProblemParams {
        ProblemParams {
            dim: 1,
            a0,
            b0,
            lambda,
            well: WellPotential::new(
                BoxDomain::interval(0.0, 1.0).unwrap(),
                BoxDomain::interval(-1.0, 2.0).unwrap(),
                1.0,
                1.0,
            )
            .unwrap(),
            nonlinearity: NonlinearitySpec::power(4.0),
            modes_per_dim: m,
            quadrature_panels: 32,
        }
    }

    #[test]
    fn diagonal_pencil_reproduces_closed_form() {
        // whole domain is the well: beta_k = nu_k / 15 exactly
        let basis = build_basis(&BoxDomain::interval(0.0, 1.0).unwrap(), 24).unwrap();
        let forms = assemble_on_omega(&basis, -15.0, 0.0);
        let decomp = solve_pencil(&forms, 5).unwrap();
        for (k, pair) in decomp.pairs.iter().enumerate() {
            let expected = basis.nu[k] / 15.0;
            assert_relative_eq!(pair.beta, expected, max_relative = 1e-12);
            assert!(pair.residual < 1e-12);
            // G-normalization
            assert_relative_eq!(forms.form_g(&pair.coeffs, &pair.coeffs), 1.0, epsilon = 1e-10);
            assert_relative_eq!(
                forms.inner_a(&pair.coeffs, &pair.coeffs),
                pair.beta,
                max_relative = 1e-8
            );
        }
        assert_eq!(decomp.negative_subspace, vec![0]); // pi^2/15 < 1 only
    }

    #[test]
    fn undefined_form_when_gm_vanishes() {
        let basis = build_basis(&BoxDomain::interval(0.0, 1.0).unwrap(), 8).unwrap();
        let forms = assemble_on_omega(&basis, 1.0, 1.0);
        assert!(matches!(
            solve_pencil(&forms, 1),
            Err(Error::UndefinedForm(_))
        ));
    }

    #[test]
    fn pairs_are_a_orthogonal() {
        let params = well_params(-15.0, 0.0, 1e4, 16);
        let basis = build_basis(&params.well.truncation_box, 16).unwrap();
        let forms = crate::forms::assemble_forms(&basis, &params).unwrap();
        let decomp = solve_pencil(&forms, 6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let ip = forms.inner_a(&decomp.pairs[i].coeffs, &decomp.pairs[j].coeffs);
                if i == j {
                    assert!(ip > 0.0);
                } else {
                    let scale = (decomp.pairs[i].beta * decomp.pairs[j].beta).sqrt();
                    assert!(ip.abs() <= 1e-8 * scale, "({i},{j}): {ip}");
                }
            }
            assert!(decomp.pairs[i].residual <= 1e-8);
        }
        // betas nondecreasing
        for w in decomp.pairs.windows(2) {
            assert!(w[1].beta >= w[0].beta);
        }
    }

    #[test]
    fn min_max_consistency_against_projected_descent() {
        // independent oracle: minimize u'Au on {u'Gm u = 1} by projected
        // gradient descent from 20 random starts
        let params = well_params(-15.0, 0.0, 100.0, 12);
        let basis = build_basis(&params.well.truncation_box, 12).unwrap();
        let forms = crate::forms::assemble_forms(&basis, &params).unwrap();
        let decomp = solve_pencil(&forms, 1).unwrap();
        let beta1 = decomp.pairs[0].beta;

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut best = f64::INFINITY;
        for _ in 0..20 {
            let mut u = DVector::from_fn(12, |_, _| rng.random::<f64>() - 0.5);
            let gnorm = forms.form_g(&u, &u).sqrt();
            u /= gnorm;
            let mut value = forms.inner_a(&u, &u);
            let mut step = 1.0 / value.max(1.0);
            for _ in 0..20000 {
                // gradient of the Rayleigh quotient on the constraint manifold
                let grad = &forms.a * &u - &forms.gm * &u * value;
                let mut trial = &u - &grad * step;
                let g = forms.form_g(&trial, &trial);
                if g <= 0.0 {
                    step *= 0.5;
                    continue;
                }
                trial /= g.sqrt();
                let tv = forms.inner_a(&trial, &trial);
                if tv < value - 1e-15 * value.abs() {
                    u = trial;
                    value = tv;
                    step *= 1.5;
                } else {
                    step *= 0.5;
                    if step < 1e-18 {
                        break;
                    }
                }
            }
            best = best.min(value);
        }
        assert_relative_eq!(best, beta1, max_relative = 1e-6);
    }

    #[test]
    fn lambda_monotonicity_of_betas() {
        let mut prev: Option<Vec<f64>> = None;
        for lambda in [100.0, 200.0, 400.0, 800.0] {
            let params = well_params(-15.0, -1.0, lambda, 14);
            let basis = build_basis(&params.well.truncation_box, 14).unwrap();
            let forms = crate::forms::assemble_forms(&basis, &params).unwrap();
            let betas: Vec<f64> = solve_pencil(&forms, 4)
                .unwrap()
                .pairs
                .iter()
                .map(|p| p.beta)
                .collect();
            if let Some(p) = prev {
                for (hi, lo) in betas.iter().zip(&p) {
                    assert!(hi >= &(lo - 1e-10), "beta decreased: {hi} < {lo}");
                }
            }
            prev = Some(betas);
        }
    }

    #[test]
    fn discrete_upper_bound_from_injected_ground_mode() {
        // beta_1(lambda) <= Rayleigh quotient of the discretely injected first
        // well mode (a valid discrete trial function)
        let params = well_params(-15.0, 0.0, 1e4, 24);
        let basis = build_basis(&params.well.truncation_box, 24).unwrap();
        let omega_basis = build_basis(&params.well.well_box, 24).unwrap();
        let forms = crate::forms::assemble_forms(&basis, &params).unwrap();
        let cross = basis.cross_overlap(&omega_basis, &params.well.well_box).unwrap();
        let phi1 = cross.column(0).into_owned(); // projection of the first well mode
        let quotient = forms.inner_a(&phi1, &phi1) / forms.form_g(&phi1, &phi1);
        let beta1 = solve_pencil(&forms, 1).unwrap().pairs[0].beta;
        assert!(beta1 <= quotient * (1.0 + 1e-12), "{beta1} vs {quotient}");
    }

    #[test]
    fn convergence_sweep_shapes_and_monotonicity() {
        let params = well_params(-15.0, 0.0, 1.0, 16);
        let table = eigen_convergence_sweep(&params, &[1e2, 1e3, 1e4], 3).unwrap();
        assert_eq!(table.rows.len(), 9);
        // beta monotone in lambda for each k, outside mass decreasing for k = 1
        for k in 1..=3 {
            let series: Vec<&ConvergenceRow> =
                table.rows.iter().filter(|r| r.k == k).collect();
            for w in series.windows(2) {
                assert!(w[1].beta >= w[0].beta - 1e-10);
            }
        }
        let ground: Vec<&ConvergenceRow> = table.rows.iter().filter(|r| r.k == 1).collect();
        for w in ground.windows(2) {
            assert!(w[1].outside_mass < w[0].outside_mass);
        }
        // angle to the analytic ground eigenspace shrinks
        assert!(ground.last().unwrap().angle < ground[0].angle);
    }

    #[test]
    fn convergence_sweep_constant_without_exterior() {
        // well covering the whole box: forms are lambda-independent
        let basis = build_basis(&BoxDomain::interval(0.0, 1.0).unwrap(), 10).unwrap();
        let forms = assemble_on_omega(&basis, -15.0, 0.0);
        let d1 = solve_pencil(&forms, 3).unwrap();
        let d2 = solve_pencil(&forms, 3).unwrap();
        for (a, b) in d1.pairs.iter().zip(&d2.pairs) {
            assert_eq!(a.beta, b.beta);
        }
    }

    #[test]
    fn simplicity_one_dimensional_levels() {
        let params = well_params(-15.0, 0.0, 1e4, 16);
        let basis = build_basis(&params.well.truncation_box, 16).unwrap();
        let forms = crate::forms::assemble_forms(&basis, &params).unwrap();
        let decomp = solve_pencil(&forms, 5).unwrap();
        let setup = SpectralSetup::new(&params.well.well_box, 8);
        let report = simplicity_check(&decomp, &setup);
        assert!(report.first_cluster_simple);
        assert!(report.all_within_bounds);
        assert!(report.clusters.iter().all(|c| c.dim == 1));
    }

    #[test]
    fn simplicity_square_double_level() {
        // exact double eigenvalue on the square when the well is the domain
        let omega = BoxDomain::cube(0.0, 1.0, 2).unwrap();
        let basis = build_basis(&omega, 6).unwrap();
        let forms = assemble_on_omega(&basis, -60.0, 0.0);
        let decomp = solve_pencil(&forms, 4).unwrap();
        let setup = SpectralSetup::new(&omega, 8);
        let report = simplicity_check(&decomp, &setup);
        assert_eq!(report.clusters[0].dim, 1);
        assert_eq!(report.clusters[1].dim, 2);
        assert_eq!(report.clusters[1].analytic_dim, Some(2));
        assert!(report.all_within_bounds);

        let single = solve_pencil(&forms, 1).unwrap();
        let single_report = simplicity_check(&single, &setup);
        assert_eq!(single_report.clusters.len(), 1);
        assert_eq!(single_report.clusters[0].dim, 1);
    }

    #[test]
    fn form_bounds_hold_with_nonempty_negative_side() {
        // lambda = 100 keeps the first discrete beta below one here
        let params = well_params(-15.0, 0.0, 100.0, 16);
        let basis = build_basis(&params.well.truncation_box, 16).unwrap();
        let forms = crate::forms::assemble_forms(&basis, &params).unwrap();
        let decomp = solve_pencil(&forms, 4).unwrap();
        assert_eq!(decomp.negative_subspace.len(), 1);
        let report = form_bounds_check(&forms, &decomp, 2, 500, 99).unwrap();
        assert!(report.beta_below.unwrap() < 1.0);
        assert!(report.beta_above > 1.0);
        assert!(report.negative_margin >= -1e-8, "{}", report.negative_margin);
        assert!(report.complement_margin >= -1e-8, "{}", report.complement_margin);
        assert!(report.eigen_identity_error <= 1e-8);
    }

    #[test]
    fn form_bounds_eigenvector_identities_exact() {
        let params = well_params(-15.0, 0.0, 100.0, 12);
        let basis = build_basis(&params.well.truncation_box, 12).unwrap();
        let forms = crate::forms::assemble_forms(&basis, &params).unwrap();
        let decomp = solve_pencil(&forms, 3).unwrap();
        for pair in &decomp.pairs {
            // D(e,e)/|e|^2 = 1 - 1/beta under the eigen-relation
            let d = forms.form_d(&pair.coeffs);
            let a = forms.inner_a(&pair.coeffs, &pair.coeffs);
            assert_relative_eq!(d / a, 1.0 - 1.0 / pair.beta, epsilon = 1e-10);
        }
    }

    #[test]
    fn form_bounds_prerequisite_failures() {
        let params = well_params(-15.0, 0.0, 100.0, 12);
        let basis = build_basis(&params.well.truncation_box, 12).unwrap();
        let forms = crate::forms::assemble_forms(&basis, &params).unwrap();
        let decomp = solve_pencil(&forms, 3).unwrap();
        // k0 = 1 claims beta_1 > 1, false at this lambda
        assert!(matches!(
            form_bounds_check(&forms, &decomp, 1, 10, 1),
            Err(Error::PrerequisiteFailed(_))
        ));
        // k0 = 3 claims beta_2 < 1, also false
        assert!(matches!(
            form_bounds_check(&forms, &decomp, 3, 10, 1),
            Err(Error::PrerequisiteFailed(_))
        ));
    }

    #[test]
    fn insufficient_range_for_rank_deficient_negative_part() {
        // a0 >= 0 and b0 < 0: the negative part lives on the well only and the
        // finite spectrum is numerically rank-limited
        let params = well_params(0.0, -2.0, 100.0, 12);
        let basis = build_basis(&params.well.truncation_box, 12).unwrap();
        let forms = crate::forms::assemble_forms(&basis, &params).unwrap();
        let decomp = solve_pencil(&forms, 1).unwrap();
        assert!(decomp.finite_count < 12);
        assert!(decomp.pairs[0].beta > 0.0);
        assert!(matches!(
            solve_pencil(&forms, 12),
            Err(Error::InsufficientRange(_))
        ));
    }

    #[test]
    fn square_pencil_limit_spectrum_consistency() {
        // on the well itself the pencil reproduces the analytic ratios to 1e-10
        let omega = BoxDomain::cube(0.0, 1.0, 2).unwrap();
        let basis = build_basis(&omega, 8).unwrap();
        let forms = assemble_on_omega(&basis, -60.0, 0.0);
        let decomp = solve_pencil(&forms, 6).unwrap();
        let setup = SpectralSetup::new(&omega, 12);
        for (i, pair) in decomp.pairs.iter().enumerate() {
            let level = setup.level_of[i] + 1;
            let b0 = crate::constants::beta0(level, -60.0, 0.0, &setup).unwrap();
            assert_relative_eq!(pair.beta, b0, max_relative = 1e-10);
        }
    }
}
