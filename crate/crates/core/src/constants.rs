//! Explicit constants and closed-form spectral quantities: Dirichlet-Laplacian
//! eigenvalues of the well box, the limit eigenvalue ratios beta_j^0, the
//! crossing index k0*, embedding constants, and the threshold family Lambda_k.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::BoxDomain;
use crate::model::ProblemParams;
use crate::numerics::gamma;

/// Relative tolerance for grouping analytically equal eigenvalues.
const DISTINCT_REL_TOL: f64 = 1e-12;

/// Analytic Dirichlet-Laplacian spectrum of a box, with multiplicity
/// bookkeeping over distinct values.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralSetup {
    pub omega: BoxDomain,
    /// Eigenvalues with multiplicity, sorted ascending.
    pub mu: Vec<f64>,
    /// Multi-index of each eigenvalue (entries >= 1).
    pub mu_modes: Vec<Vec<usize>>,
    /// Distinct eigenvalues, strictly increasing.
    pub mu_bar: Vec<f64>,
    /// Multiplicity of each distinct eigenvalue.
    pub multiplicities: Vec<usize>,
    /// Distinct-level index (0-based) of each eigenvalue in `mu`.
    pub level_of: Vec<usize>,
}

impl SpectralSetup {
    /// First `count` eigenvalues mu = pi^2 sum (k_i/L_i)^2 over multi-indices
    /// k_i >= 1, sorted with multiplicity.
    pub fn new(omega: &BoxDomain, count: usize) -> Self {
        assert!(count >= 1);
        let dim = omega.dim();
        let lengths = omega.lengths();
        // Indices beyond `count` in any direction cannot reach the first
        // `count` values, so a count^dim candidate grid is always enough.
        let mut candidates: Vec<(f64, Vec<usize>)> = Vec::new();
        let mut idx = vec![1usize; dim];
        loop {
            let mu = std::f64::consts::PI.powi(2)
                * idx
                    .iter()
                    .zip(&lengths)
                    .map(|(k, l)| (*k as f64 / l).powi(2))
                    .sum::<f64>();
            candidates.push((mu, idx.clone()));
            // odometer over {1..count}^dim
            let mut d = 0;
            loop {
                if d == dim {
                    break;
                }
                idx[d] += 1;
                if idx[d] <= count {
                    break;
                }
                idx[d] = 1;
                d += 1;
            }
            if d == dim {
                break;
            }
        }
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        candidates.truncate(count);

        let mu: Vec<f64> = candidates.iter().map(|c| c.0).collect();
        let mu_modes: Vec<Vec<usize>> = candidates.into_iter().map(|c| c.1).collect();
        let mut mu_bar: Vec<f64> = Vec::new();
        let mut multiplicities: Vec<usize> = Vec::new();
        let mut level_of = Vec::with_capacity(mu.len());
        for &value in &mu {
            match mu_bar.last() {
                Some(&prev) if (value - prev).abs() <= DISTINCT_REL_TOL * value.abs() => {
                    *multiplicities.last_mut().unwrap() += 1;
                }
                _ => {
                    mu_bar.push(value);
                    multiplicities.push(1);
                }
            }
            level_of.push(mu_bar.len() - 1);
        }
        Self {
            omega: omega.clone(),
            mu,
            mu_modes,
            mu_bar,
            multiplicities,
            level_of,
        }
    }

    pub fn distinct_count(&self) -> usize {
        self.mu_bar.len()
    }

    /// Multi-indices of the eigenfunctions spanning the j-th distinct level
    /// (1-based j).
    pub fn level_modes(&self, j: usize) -> Vec<&[usize]> {
        self.mu
            .iter()
            .enumerate()
            .filter(|(i, _)| self.level_of[*i] == j - 1)
            .map(|(i, _)| self.mu_modes[i].as_slice())
            .collect()
    }
}

/// Quadratic coefficient at an eigenvalue mu: mu^2 + max(a0,0) mu + max(b0,0).
fn positive_part_value(mu: f64, a0: f64, b0: f64) -> f64 {
    mu * mu + a0.max(0.0) * mu + b0.max(0.0)
}

/// Negative-part coefficient at mu: max(-a0,0) mu + max(-b0,0).
fn negative_part_value(mu: f64, a0: f64, b0: f64) -> f64 {
    (-a0).max(0.0) * mu + (-b0).max(0.0)
}

/// Limit eigenvalue ratio beta_j^0 at the j-th distinct level (1-based).
pub fn beta0(j: usize, a0: f64, b0: f64, setup: &SpectralSetup) -> Result<f64> {
    if a0.min(b0) >= 0.0 {
        return Err(Error::UndefinedForm(
            "beta_j^0 requires min(a0, b0) < 0".into(),
        ));
    }
    let mu = *setup
        .mu_bar
        .get(j - 1)
        .ok_or_else(|| Error::NotFound(format!("level {j} beyond computed spectrum")))?;
    Ok(positive_part_value(mu, a0, b0) / negative_part_value(mu, a0, b0))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct K0Star {
    /// Smallest distinct-level index (1-based) with beta_j^0 > 1.
    pub k0: usize,
    /// True when k0 = 1 or beta_{k0-1}^0 < 1 (the linking hypothesis).
    pub linking_admissible: bool,
}

/// First level whose limit ratio exceeds one.
pub fn k0_star(a0: f64, b0: f64, setup: &SpectralSetup) -> Result<K0Star> {
    if a0.min(b0) >= 0.0 {
        return Err(Error::UndefinedForm(
            "k0* requires min(a0, b0) < 0".into(),
        ));
    }
    for j in 1..=setup.distinct_count() {
        if beta0(j, a0, b0, setup)? > 1.0 {
            let linking_admissible = j == 1 || beta0(j - 1, a0, b0, setup)? < 1.0;
            return Ok(K0Star {
                k0: j,
                linking_admissible,
            });
        }
    }
    Err(Error::NotFound(format!(
        "no beta_j^0 > 1 within the first {} levels; enlarge the spectrum",
        setup.distinct_count()
    )))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmbeddingConstants {
    /// Sharp Sobolev constant of the gradient embedding (N >= 3).
    pub s: f64,
    /// Constant in |grad u| <= B0 |lap u|^(1/2) |u|^(1/2); equals 1.
    pub b0_gn: f64,
    /// A_infty = |well|^((2*-2)/2*) / S.
    pub a_infty: f64,
    /// Lambda-dependent L^2 embedding constant.
    pub c_lambda: f64,
    /// Limit of c_lambda as lambda -> infinity.
    pub d0: f64,
}

/// Sharp Sobolev constant S(N) = pi N (N-2) (Gamma(N/2)/Gamma(N))^(2/N).
pub fn sobolev_constant(dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(Error::DimensionTooLow(format!(
            "the Sobolev constant needs N >= 3, got {dim}"
        )));
    }
    let n = dim as f64;
    Ok(std::f64::consts::PI * n * (n - 2.0) * (gamma(n / 2.0) / gamma(n)).powf(2.0 / n))
}

/// All embedding constants for a problem instance (N >= 3).
pub fn embedding_constants(params: &ProblemParams) -> Result<EmbeddingConstants> {
    let s = sobolev_constant(params.dim)?;
    if params.lambda.is_nan() || params.lambda <= params.lambda_floor() {
        return Err(Error::InvalidLambda(format!(
            "lambda = {} at or below the floor {}",
            params.lambda,
            params.lambda_floor()
        )));
    }
    let b0_gn = 1.0f64;
    let crit = params.critical_exponent().unwrap();
    let a_infty = params.well.sublevel_measure().powf((crit - 2.0) / crit) / s;
    let depth = params.lambda * params.well.b_infty + params.b0;
    let (c_lambda, d0) = if params.a0 > 0.0 {
        (a_infty / params.a0 + 1.0 / depth, a_infty / params.a0)
    } else {
        let base = 4.0 * a_infty * a_infty * b0_gn.powi(4);
        (base + 2.0 / depth, base)
    };
    Ok(EmbeddingConstants {
        s,
        b0_gn,
        a_infty,
        c_lambda,
        d0,
    })
}

/// Attainment threshold Lambda_k = ((max(-a0,0) beta_k^0)^2 B0^4 - b0)/b_infty.
pub fn lambda_threshold(
    k: usize,
    a0: f64,
    b0: f64,
    b_infty: f64,
    b0_gn: f64,
    setup: &SpectralSetup,
) -> Result<f64> {
    let beta = beta0(k, a0, b0, setup)?;
    Ok((((-a0).max(0.0) * beta).powi(2) * b0_gn.powi(4) - b0) / b_infty)
}

/// Optimal constant d_* with |u|_{Omega,0} <= d_* |u|_{L^2} on the span of the
/// first k0* levels: eigenfunctions are orthogonal in both norms, so the
/// quotient is maximized at a single eigenfunction.
pub fn d_star(a0: f64, b0: f64, setup: &SpectralSetup) -> Result<f64> {
    let k0 = k0_star(a0, b0, setup)?.k0;
    let best = setup.mu_bar[..k0]
        .iter()
        .map(|&mu| positive_part_value(mu, a0, b0))
        .fold(0.0f64, f64::max);
    Ok(best.sqrt())
}

/// Spectrum of the constant-coefficient limit operator on the well:
/// {mu_k^2 + a0 mu_k + b0}, sorted, first `count` entries with multiplicity.
pub fn limit_spectrum(a0: f64, b0: f64, setup: &SpectralSetup, count: usize) -> Vec<f64> {
    let mut values: Vec<f64> = setup
        .mu
        .iter()
        .take(count)
        .map(|&mu| mu * mu + a0 * mu + b0)
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSet {
    pub lambda_k: Vec<f64>,
    pub d_star: f64,
    pub linking_admissible: bool,
}

/// Bundle of the threshold quantities for reporting.
pub fn thresholds(
    a0: f64,
    b0: f64,
    b_infty: f64,
    b0_gn: f64,
    setup: &SpectralSetup,
) -> Result<ThresholdSet> {
    let info = k0_star(a0, b0, setup)?;
    let lambda_k = (1..=setup.distinct_count())
        .map(|k| lambda_threshold(k, a0, b0, b_infty, b0_gn, setup))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdSet {
        lambda_k,
        d_star: d_star(a0, b0, setup)?,
        linking_admissible: info.linking_admissible,
    })
}
