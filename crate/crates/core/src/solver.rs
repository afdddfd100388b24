//! Minimax descent for nontrivial critical points: mountain-pass geometry in
//! the definite case, linking geometry over the negative subspace otherwise.
//!
//! The search certifies the geometry by sampling, runs a path-deformation
//! descent (locate the path maximizer, take a backtracking descent step on
//! that node, re-maximize) and polishes with damped Newton steps once the
//! gradient is small.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::spectrum::SpectralDecomposition;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Convergence tolerance, relative to max(1, |u|_A).
    pub tol: f64,
    pub max_iter: usize,
    pub path_nodes: usize,
    pub armijo_c: f64,
    pub seed: u64,
    /// Random directions used to estimate the sphere infimum.
    pub sphere_samples: usize,
    /// Random points used to certify the sign condition on the linking
    /// boundary.
    pub boundary_samples: usize,
    /// Cap on the linking box radius during the doubling search.
    pub radius_cap: f64,
    /// Gradient level (relative) below which Newton polishing is attempted.
    pub newton_gate: f64,
}

/// Fraction of the sampled sphere infimum (and radius) below which a point is
/// treated as collapsed to the trivial solution. The sampled infimum is an
/// upper estimate of the true one, so the floor is deliberately loose.
const COLLAPSE_FRACTION: f64 = 0.02;

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50_000,
            path_nodes: 41,
            armijo_c: 1e-4,
            seed: 7,
            sphere_samples: 200,
            boundary_samples: 1000,
            radius_cap: 1e8,
            newton_gate: 1e-3,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CeramiSample {
    pub norm: f64,
    pub scaled_grad: f64,
}

#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub coeffs: DVector<f64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub norm_a: f64,
    pub iterations: usize,
    pub cerami_trace: Vec<CeramiSample>,
}

impl CriticalPoint {
    /// Gradient norm relative to max(1, |u|_A).
    pub fn relative_residual(&self) -> f64 {
        self.grad_norm / self.norm_a.max(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct LinkingGeometry {
    pub rho: f64,
    pub kappa: f64,
    pub radius: f64,
    /// Endpoint of the descent path (radius times the outgoing direction).
    pub endpoint: DVector<f64>,
    pub negative_dim: usize,
    /// Largest sampled energy on the linking boundary (must be <= 0).
    pub boundary_max_energy: f64,
}

impl LinkingGeometry {
    /// Same geometry with the endpoint reflected through the origin; valid
    /// for odd nonlinearities.
    pub fn mirrored(&self) -> Self {
        let mut g = self.clone();
        g.endpoint = -&g.endpoint;
        g
    }
}

fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// A-orthogonal projection off the columns of `basis` (columns A-orthonormal).
fn project_off(u: &DVector<f64>, basis: &DMatrix<f64>, a: &DMatrix<f64>) -> DVector<f64> {
    let mut out = u.clone();
    if basis.ncols() > 0 {
        let au = a * u;
        for j in 0..basis.ncols() {
            let c = (basis.column(j).transpose() * &au)[(0, 0)];
            out -= basis.column(j) * c;
        }
    }
    out
}

/// Locate the mountain-pass / linking geometry by sampling.
///
/// With a spectral decomposition the negative subspace is spanned by the
/// pairs with beta < 1 and the outgoing direction is the first pair above
/// one; in the definite case the outgoing direction minimizes the
/// quadratic-to-mass ratio.
pub fn find_linking_geometry(
    model: &EnergyModel,
    decomposition: Option<&SpectralDecomposition>,
    opts: &SolverOptions,
) -> Result<LinkingGeometry> {
    let n = model.dim();
    let neg = match decomposition {
        Some(d) => d.negative_basis(),
        None => DMatrix::zeros(n, 0),
    };
    let direction = outgoing_direction(model, decomposition)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9);

    // sphere infimum: the outgoing direction (the soft descent direction)
    // plus random complement directions, scanned over a radius grid
    let mut dirs = vec![direction.clone()];
    while dirs.len() < opts.sphere_samples.max(2) {
        let z = gaussian(n, &mut rng);
        let v = project_off(&z, &neg, &model.forms.a);
        let na = model.norm_a(&v);
        if na > 1e-10 {
            dirs.push(v / na);
        }
    }
    let mut best_rho = 0.0;
    let mut best_kappa = f64::NEG_INFINITY;
    let sampled_inf = |rho: f64, floor: f64| -> Result<f64> {
        let mut inf = f64::INFINITY;
        for d in &dirs {
            inf = inf.min(model.energy(&(d * rho))?);
            if inf <= floor {
                break;
            }
        }
        Ok(inf)
    };
    let mut radii: Vec<f64> = (0..48)
        .map(|i| 1e-3 * (1e5f64).powf(i as f64 / 47.0))
        .collect();
    let mut scanned = 0;
    while scanned < radii.len() {
        for &rho in &radii[scanned..] {
            let inf = sampled_inf(rho, best_kappa)?;
            if inf > best_kappa {
                best_kappa = inf;
                best_rho = rho;
            }
        }
        scanned = radii.len();
        // keep extending while the maximizer sits at the top of the grid
        let top = *radii.last().unwrap();
        if best_rho == top && top < 1e9 {
            radii.push(top * 2.0);
        }
    }
    if best_kappa.is_nan() || best_kappa <= 0.0 {
        return Err(Error::GeometryNotFound(format!(
            "sampled sphere infimum never positive (best {best_kappa:.3e} at rho {best_rho:.3e})"
        )));
    }

    // radius doubling until the boundary energies are nonpositive
    let mut radius = (4.0 * best_rho).max(1.0);
    let boundary_max = loop {
        let sup = boundary_energy_sup(model, &neg, &direction, radius, opts, &mut rng)?;
        if sup <= 0.0 {
            break sup;
        }
        radius *= 2.0;
        if radius > opts.radius_cap {
            return Err(Error::GeometryNotFound(format!(
                "boundary energies stayed positive up to the radius cap {:.1e} (last sup {sup:.3e})",
                opts.radius_cap
            )));
        }
    };

    Ok(LinkingGeometry {
        rho: best_rho,
        kappa: best_kappa,
        radius,
        endpoint: direction * radius,
        negative_dim: neg.ncols(),
        boundary_max_energy: boundary_max,
    })
}

fn outgoing_direction(
    model: &EnergyModel,
    decomposition: Option<&SpectralDecomposition>,
) -> Result<DVector<f64>> {
    if let Some(d) = decomposition {
        if let Some(i) = d.first_above_one() {
            let e = d.pairs[i].coeffs.clone();
            let na = model.norm_a(&e);
            return Ok(e / na);
        }
    }
    // definite case: direction with the smallest quadratic-to-mass ratio
    let eig = nalgebra::SymmetricEigen::new(model.forms.a.clone());
    let mut min_idx = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[min_idx] {
            min_idx = i;
        }
    }
    let v = eig.eigenvectors.column(min_idx).into_owned();
    let na = model.norm_a(&v);
    Ok(v / na)
}

fn boundary_energy_sup(
    model: &EnergyModel,
    neg: &DMatrix<f64>,
    direction: &DVector<f64>,
    radius: f64,
    opts: &SolverOptions,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let r = neg.ncols();
    if r == 0 {
        // boundary degenerates to the endpoints of the segment
        return model.energy(&(direction * radius));
    }
    let mut sup = f64::NEG_INFINITY;
    for i in 0..opts.boundary_samples {
        let mut z = vec![0.0; r + 1];
        for zj in z.iter_mut() {
            *zj = rng.sample::<f64, _>(StandardNormal);
        }
        z[r] = z[r].abs(); // outgoing coordinate stays nonnegative
        let on_cap = i % 2 == 0;
        let mut u = DVector::zeros(model.dim());
        if on_cap {
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (j, zj) in z.iter().take(r).enumerate() {
                u += neg.column(j) * (radius * zj / norm);
            }
            u += direction * (radius * z[r] / norm);
        } else {
            // face t = 0: scaled points of the negative-subspace ball
            let norm = z[..r].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let s: f64 = rng.random::<f64>();
            for (j, zj) in z.iter().take(r).enumerate() {
                u += neg.column(j) * (radius * s * zj / norm);
            }
        }
        sup = sup.max(model.energy(&u)?);
    }
    Ok(sup)
}

// ---------------------------------------------------------------------------
// Path minimax descent
// ---------------------------------------------------------------------------

struct PathNode {
    w: DVector<f64>,
    /// Inner maximizer coordinates over the negative basis.
    v: DVector<f64>,
    value: f64,
}

struct InnerResult {
    v: DVector<f64>,
    value: f64,
}

/// Maximize the energy over w + span(negative basis), warm-started at v0.
fn inner_maximize(
    model: &EnergyModel,
    neg: &DMatrix<f64>,
    w: &DVector<f64>,
    v0: &DVector<f64>,
    tol: f64,
    cap: f64,
) -> Result<InnerResult> {
    let r = neg.ncols();
    if r == 0 {
        return Ok(InnerResult {
            v: DVector::zeros(0),
            value: model.energy(w)?,
        });
    }
    let mut v = v0.clone();
    let mut u = w + neg * &v;
    let mut value = model.energy(&u)?;
    for _ in 0..200 {
        if v.norm() > cap {
            return Err(Error::InnerMaxDiverged(format!(
                "negative-subspace coordinates reached |v| = {:.3e}",
                v.norm()
            )));
        }
        let rd = model.residual_dual(&u)?;
        let grad_v = neg.transpose() * &rd;
        if grad_v.norm() <= tol {
            break;
        }
        // Newton direction on the (concave) restriction when available
        let mut dir = grad_v.clone();
        if let Some(h) = model.hessian(&u)? {
            let hv = neg.transpose() * &h * neg;
            if let Some(delta) = hv.lu().solve(&(-&grad_v)) {
                if (delta.transpose() * &grad_v)[(0, 0)] > 0.0 {
                    dir = delta;
                }
            }
        }
        let slope = (dir.transpose() * &grad_v)[(0, 0)];
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let v_trial = &v + &dir * step;
            let u_trial = w + neg * &v_trial;
            let val_trial = model.energy(&u_trial)?;
            if val_trial >= value + 1e-4 * step * slope {
                v = v_trial;
                u = u_trial;
                value = val_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(InnerResult { v, value })
}

/// Damped Newton refinement of the full stationarity system. Returns the
/// refined point when the gradient target is reached.
fn newton_refine(
    model: &EnergyModel,
    start: &DVector<f64>,
    target: impl Fn(&DVector<f64>) -> f64,
    max_steps: usize,
    trace: &mut Vec<CeramiSample>,
) -> Result<Option<DVector<f64>>> {
    let mut u = start.clone();
    let mut gn = model.grad_norm(&u)?;
    for _ in 0..max_steps {
        if gn <= target(&u) {
            return Ok(Some(u));
        }
        let hess = match model.hessian(&u)? {
            Some(h) => h,
            None => return Ok(None),
        };
        let r = model.residual_dual(&u)?;
        let delta = match hess.lu().solve(&(-&r)) {
            Some(d) => d,
            None => return Ok(None),
        };
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let trial = &u + &delta * step;
            let tgn = model.grad_norm(&trial)?;
            if tgn < gn {
                u = trial;
                gn = tgn;
                improved = true;
                let na = model.norm_a(&u);
                trace.push(CeramiSample {
                    norm: na,
                    scaled_grad: (1.0 + na) * gn,
                });
                break;
            }
            step *= 0.5;
        }
        if !improved {
            return Ok(None);
        }
    }
    if gn <= target(&u) {
        Ok(Some(u))
    } else {
        Ok(None)
    }
}

/// Resample the polyline through the node outer positions at uniform
/// arclength (in the A-norm), interpolating the inner coordinates as warm
/// starts, and recompute the node values.
fn reparametrize(
    model: &EnergyModel,
    neg: &DMatrix<f64>,
    nodes: &mut Vec<PathNode>,
    inner_tol: f64,
    inner_cap: f64,
) -> Result<()> {
    let n = nodes.len();
    let mut cumulative = vec![0.0; n];
    for i in 1..n {
        let seg = model.norm_a(&(&nodes[i].w - &nodes[i - 1].w));
        cumulative[i] = cumulative[i - 1] + seg;
    }
    let total = cumulative[n - 1];
    if total <= 0.0 {
        return Ok(());
    }
    let mut new_nodes = Vec::with_capacity(n);
    new_nodes.push(PathNode {
        w: nodes[0].w.clone(),
        v: nodes[0].v.clone(),
        value: nodes[0].value,
    });
    let mut seg_idx = 1;
    for i in 1..n - 1 {
        let s = total * i as f64 / (n - 1) as f64;
        while seg_idx < n - 1 && cumulative[seg_idx] < s {
            seg_idx += 1;
        }
        let (lo, hi) = (seg_idx - 1, seg_idx);
        let span = (cumulative[hi] - cumulative[lo]).max(f64::MIN_POSITIVE);
        let t = ((s - cumulative[lo]) / span).clamp(0.0, 1.0);
        let w = &nodes[lo].w * (1.0 - t) + &nodes[hi].w * t;
        let v_warm = &nodes[lo].v * (1.0 - t) + &nodes[hi].v * t;
        let res = inner_maximize(model, neg, &w, &v_warm, inner_tol, inner_cap)?;
        new_nodes.push(PathNode {
            w,
            v: res.v,
            value: res.value,
        });
    }
    new_nodes.push(PathNode {
        w: nodes[n - 1].w.clone(),
        v: nodes[n - 1].v.clone(),
        value: nodes[n - 1].value,
    });
    *nodes = new_nodes;
    Ok(())
}

fn path_minimax(
    model: &EnergyModel,
    neg: &DMatrix<f64>,
    geometry: &LinkingGeometry,
    opts: &SolverOptions,
) -> Result<CriticalPoint> {
    let n_nodes = opts.path_nodes.max(3);
    let inner_cap = 1e6 * (1.0 + geometry.radius);
    let inner_tol = |u_norm: f64| (0.05 * opts.tol * (1.0 + u_norm)).max(1e-13);
    let target = |model: &EnergyModel, u: &DVector<f64>| opts.tol * model.norm_a(u).max(1.0);

    // straight path from the origin to the endpoint in the outer space
    let mut nodes = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let t = i as f64 / (n_nodes - 1) as f64;
        let w = &geometry.endpoint * t;
        let res = inner_maximize(model, neg, &w, &DVector::zeros(neg.ncols()), 1e-11, inner_cap)?;
        nodes.push(PathNode {
            w,
            v: res.v,
            value: res.value,
        });
    }
    let base_spacing = geometry.radius / (n_nodes - 1) as f64;

    let mut trace: Vec<CeramiSample> = Vec::new();
    let mut step_hint = 1.0f64;
    let mut steps_since_reparam = 0usize;
    for iter in 0..opts.max_iter {
        // locate the maximizer (lowest index wins ties)
        let mut i_star = 1;
        let mut best = f64::NEG_INFINITY;
        for (i, node) in nodes.iter().enumerate() {
            if node.value > best {
                best = node.value;
                i_star = i;
            }
        }
        if i_star == 0 || i_star == n_nodes - 1 {
            return Err(Error::DegenerateToZero(
                "path maximum sits at a fixed endpoint".into(),
            ));
        }

        let u_star = &nodes[i_star].w + neg * &nodes[i_star].v;
        let state = model.energy_state(&u_star)?;
        let na = model.norm_a(&u_star);
        trace.push(CeramiSample {
            norm: na,
            scaled_grad: (1.0 + na) * state.grad_norm,
        });

        if state.grad_norm <= target(model, &u_star) {
            if opts.tol.is_infinite() {
                // degenerate contract: report the initial maximizer untouched
                return Ok(CriticalPoint {
                    coeffs: u_star,
                    energy: state.energy,
                    grad_norm: state.grad_norm,
                    norm_a: na,
                    iterations: 0,
                    cerami_trace: trace,
                });
            }
            return finish(model, u_star, state.energy, state.grad_norm, na, iter, trace, geometry);
        }

        if best < COLLAPSE_FRACTION * geometry.kappa {
            return Err(Error::DegenerateToZero(format!(
                "path maximum fell to {best:.3e}, below {COLLAPSE_FRACTION} of kappa = {:.3e}",
                geometry.kappa
            )));
        }

        // Newton polish once the gradient is small, and periodically as a
        // probe; results in the trivial basin are discarded
        if state.grad_norm <= opts.newton_gate * (1.0 + na) || iter % 50 == 49 {
            if let Some(u) = newton_refine(
                model,
                &u_star,
                |u| target(model, u),
                40,
                &mut trace,
            )? {
                let e = model.energy(&u)?;
                let na_u = model.norm_a(&u);
                if e >= COLLAPSE_FRACTION * geometry.kappa && na_u >= COLLAPSE_FRACTION * geometry.rho
                {
                    let gn = model.grad_norm(&u)?;
                    return finish(model, u, e, gn, na_u, iter + 1, trace, geometry);
                }
            }
        }

        // projected descent step on the maximizing node
        let g_w = project_off(&state.grad, neg, &model.forms.a);
        let slope = (g_w.transpose() * &model.forms.a * &g_w)[(0, 0)];
        if slope <= 0.0 {
            return Err(Error::NoConvergence(
                "projected gradient vanished away from a critical point".into(),
            ));
        }
        // a node moves at most about one spacing per iteration so the
        // discrete path deforms rather than tears
        let step_cap = base_spacing / slope.sqrt();
        let mut step = step_hint.min(step_cap);
        let mut accepted = false;
        for _ in 0..60 {
            let w_trial = &nodes[i_star].w - &g_w * step;
            let res = inner_maximize(
                model,
                neg,
                &w_trial,
                &nodes[i_star].v,
                inner_tol(na),
                inner_cap,
            )?;
            if res.value <= nodes[i_star].value - opts.armijo_c * step * slope {
                nodes[i_star] = PathNode {
                    w: w_trial,
                    v: res.v,
                    value: res.value,
                };
                accepted = true;
                step_hint = (step * 2.0).min(1e3);
                break;
            }
            step *= 0.5;
        }
        if accepted {
            // keep the discrete path connected: resample when the moved node
            // drifts from its neighbors or periodically
            steps_since_reparam += 1;
            let drift = model
                .norm_a(&(&nodes[i_star].w - &nodes[i_star - 1].w))
                .max(model.norm_a(&(&nodes[i_star].w - &nodes[i_star + 1].w)));
            if drift > 2.5 * base_spacing || steps_since_reparam >= 25 {
                reparametrize(model, neg, &mut nodes, inner_tol(na), inner_cap)?;
                steps_since_reparam = 0;
            }
        }
        if !accepted {
            // descent stalled: last-resort Newton from the maximizer
            if let Some(u) = newton_refine(
                model,
                &u_star,
                |u| target(model, u),
                60,
                &mut trace,
            )? {
                let e = model.energy(&u)?;
                let gn = model.grad_norm(&u)?;
                let na = model.norm_a(&u);
                return finish(model, u, e, gn, na, iter + 1, trace, geometry);
            }
            return Err(Error::NoConvergence(format!(
                "line search stalled at iteration {iter} with gradient {:.3e}",
                state.grad_norm
            )));
        }
    }
    Err(Error::NoConvergence(format!(
        "iteration cap {} reached",
        opts.max_iter
    )))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    model: &EnergyModel,
    coeffs: DVector<f64>,
    energy: f64,
    grad_norm: f64,
    norm_a: f64,
    iterations: usize,
    trace: Vec<CeramiSample>,
    geometry: &LinkingGeometry,
) -> Result<CriticalPoint> {
    let _ = model;
    if energy < COLLAPSE_FRACTION * geometry.kappa || norm_a < COLLAPSE_FRACTION * geometry.rho {
        return Err(Error::DegenerateToZero(format!(
            "converged point is trivial: energy {energy:.3e}, norm {norm_a:.3e}"
        )));
    }
    Ok(CriticalPoint {
        coeffs,
        energy,
        grad_norm,
        norm_a,
        iterations,
        cerami_trace: trace,
    })
}

/// Mountain-pass descent in the definite regime (empty negative subspace).
pub fn mountain_pass_solve(
    model: &EnergyModel,
    geometry: &LinkingGeometry,
    opts: &SolverOptions,
) -> Result<CriticalPoint> {
    let neg = DMatrix::zeros(model.dim(), 0);
    path_minimax(model, &neg, geometry, opts)
}

/// Linking descent over the negative subspace of the decomposition; with an
/// empty negative subspace this coincides with the mountain-pass solver.
pub fn linking_solve(
    model: &EnergyModel,
    decomposition: &SpectralDecomposition,
    geometry: &LinkingGeometry,
    opts: &SolverOptions,
) -> Result<CriticalPoint> {
    let neg = decomposition.negative_basis();
    path_minimax(model, &neg, geometry, opts)
}

/// Newton continuation from a previous solution (used by warm-started sweeps).
pub fn refine_critical_point(
    model: &EnergyModel,
    start: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<CriticalPoint> {
    let mut trace = Vec::new();
    let target = |u: &DVector<f64>| opts.tol * model.norm_a(u).max(1.0);
    match newton_refine(model, start, target, 80, &mut trace)? {
        Some(u) => {
            let energy = model.energy(&u)?;
            let grad_norm = model.grad_norm(&u)?;
            let norm_a = model.norm_a(&u);
            Ok(CriticalPoint {
                coeffs: u,
                energy,
                grad_norm,
                norm_a,
                iterations: trace.len(),
                cerami_trace: trace,
            })
        }
        None => Err(Error::NoConvergence(
            "Newton continuation did not reach the tolerance".into(),
        )),
    }
}
