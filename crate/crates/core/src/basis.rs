//! Tensor sine basis on a box and its quadrature machinery.
//!
//! Every basis function vanishes together with its Laplacian on the box
//! boundary, so the bilaplacian, stiffness and mass matrices are diagonal in
//! this basis. Overlap matrices over sub-boxes are assembled from closed-form
//! one-dimensional sine product integrals.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::BoxDomain;
use crate::model::WellPotential;
use crate::numerics::{gauss_legendre, sine_product_integral};

/// Hard cap on the total mode count; dense pencil solves stay desk-scale.
pub const DEFAULT_MODE_CAP: usize = 4096;

/// Gauss-Legendre order per quadrature panel.
const GL_ORDER: usize = 8;

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub domain: BoxDomain,
    pub modes_per_dim: usize,
    /// Multi-indices (entries >= 1), lexicographic with the first axis slowest.
    pub modes: Vec<Vec<usize>>,
    /// Laplacian eigenvalue of each mode: pi^2 sum (k_i / L_i)^2.
    pub nu: Vec<f64>,
}

/// L^2-orthonormal sine basis, `modes_per_dim`^N modes.
pub fn build_basis(domain: &BoxDomain, modes_per_dim: usize) -> Result<SpectralBasis> {
    build_basis_capped(domain, modes_per_dim, DEFAULT_MODE_CAP)
}

pub fn build_basis_capped(
    domain: &BoxDomain,
    modes_per_dim: usize,
    cap: usize,
) -> Result<SpectralBasis> {
    if modes_per_dim < 2 {
        return Err(Error::InvalidConfig(format!(
            "modes_per_dim must be at least 2, got {modes_per_dim}"
        )));
    }
    let dim = domain.dim();
    let total = modes_per_dim.checked_pow(dim as u32).unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::ResourceLimit(format!(
            "{modes_per_dim}^{dim} = {total} modes exceeds the cap {cap}"
        )));
    }
    let lengths = domain.lengths();
    let mut modes = Vec::with_capacity(total);
    let mut idx = vec![1usize; dim];
    loop {
        modes.push(idx.clone());
        let mut d = dim;
        loop {
            if d == 0 {
                break;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] <= modes_per_dim {
                break;
            }
            idx[d] = 1;
            if d == 0 {
                d = usize::MAX;
                break;
            }
        }
        if d == usize::MAX {
            break;
        }
    }
    debug_assert_eq!(modes.len(), total);
    let nu = modes
        .iter()
        .map(|k| {
            std::f64::consts::PI.powi(2)
                * k.iter()
                    .zip(&lengths)
                    .map(|(ki, l)| (*ki as f64 / l).powi(2))
                    .sum::<f64>()
        })
        .collect();
    Ok(SpectralBasis {
        domain: domain.clone(),
        modes_per_dim,
        modes,
        nu,
    })
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Mode indices ordered by increasing Laplacian eigenvalue (reporting order).
    pub fn order_by_eigenvalue(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.nu[a]
                .partial_cmp(&self.nu[b])
                .unwrap()
                .then(self.modes[a].cmp(&self.modes[b]))
        });
        order
    }

    /// Value of the i-th basis function at a point.
    pub fn eval_mode(&self, i: usize, x: &[f64]) -> f64 {
        let lengths = self.domain.lengths();
        self.modes[i]
            .iter()
            .enumerate()
            .map(|(d, &k)| {
                let l = lengths[d];
                (2.0 / l).sqrt() * (k as f64 * std::f64::consts::PI * (x[d] - self.domain.min[d]) / l).sin()
            })
            .product()
    }

    /// Pointwise synthesis sum_k c_k phi_k(x) at each point.
    pub fn evaluate_field(&self, coeffs: &DVector<f64>, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        if coeffs.len() != self.len() {
            return Err(Error::InvalidConfig(format!(
                "coefficient length {} does not match mode count {}",
                coeffs.len(),
                self.len()
            )));
        }
        points
            .iter()
            .map(|x| {
                if !self.domain.contains(x) {
                    return Err(Error::OutOfDomain(format!("{x:?}")));
                }
                Ok((0..self.len()).map(|i| coeffs[i] * self.eval_mode(i, x)).sum())
            })
            .collect()
    }

    /// One-dimensional overlap matrices per axis over [p_d, q_d]; the tensor
    /// overlap entry is the product across axes.
    fn axis_overlaps(&self, region: &BoxDomain) -> Vec<DMatrix<f64>> {
        let lengths = self.domain.lengths();
        (0..self.dim())
            .map(|d| {
                let l = lengths[d];
                let lo = self.domain.min[d];
                let norm = 2.0 / l;
                let m = self.modes_per_dim;
                DMatrix::from_fn(m, m, |j, k| {
                    let a = (j + 1) as f64 * std::f64::consts::PI / l;
                    let b = (k + 1) as f64 * std::f64::consts::PI / l;
                    norm * sine_product_integral(a, lo, b, lo, region.min[d], region.max[d])
                })
            })
            .collect()
    }

    /// Gram matrix of the basis restricted to a sub-box of the domain.
    pub fn overlap_on(&self, region: &BoxDomain) -> Result<DMatrix<f64>> {
        if region.dim() != self.dim() {
            return Err(Error::InvalidGeometry("region dimension mismatch".into()));
        }
        let axis = self.axis_overlaps(region);
        let n = self.len();
        let mut s = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in j..n {
                let mut v = 1.0;
                for d in 0..self.dim() {
                    v *= axis[d][(self.modes[j][d] - 1, self.modes[k][d] - 1)];
                }
                s[(j, k)] = v;
                s[(k, j)] = v;
            }
        }
        Ok(s)
    }

    /// Cross Gram matrix against another sine basis, integrated over `region`
    /// (rows: this basis, columns: other).
    pub fn cross_overlap(
        &self,
        other: &SpectralBasis,
        region: &BoxDomain,
    ) -> Result<DMatrix<f64>> {
        if region.dim() != self.dim() || other.dim() != self.dim() {
            return Err(Error::InvalidGeometry("dimension mismatch".into()));
        }
        let la = self.domain.lengths();
        let lb = other.domain.lengths();
        let axis: Vec<DMatrix<f64>> = (0..self.dim())
            .map(|d| {
                let norm = (2.0 / la[d]).sqrt() * (2.0 / lb[d]).sqrt();
                DMatrix::from_fn(self.modes_per_dim, other.modes_per_dim, |j, k| {
                    let a = (j + 1) as f64 * std::f64::consts::PI / la[d];
                    let b = (k + 1) as f64 * std::f64::consts::PI / lb[d];
                    norm * sine_product_integral(
                        a,
                        self.domain.min[d],
                        b,
                        other.domain.min[d],
                        region.min[d],
                        region.max[d],
                    )
                })
            })
            .collect();
        let mut s = DMatrix::zeros(self.len(), other.len());
        for j in 0..self.len() {
            for k in 0..other.len() {
                let mut v = 1.0;
                for d in 0..self.dim() {
                    v *= axis[d][(self.modes[j][d] - 1, other.modes[k][d] - 1)];
                }
                s[(j, k)] = v;
            }
        }
        Ok(s)
    }
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AxisQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Panelized Gauss-Legendre grid per axis, with panel edges aligned to the
/// well box so that region indicators are exact on the grid.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub axes: Vec<AxisQuadrature>,
}

pub fn build_quadrature(
    domain: &BoxDomain,
    well_box: Option<&BoxDomain>,
    panels_per_axis: usize,
) -> QuadratureGrid {
    let (gl_nodes, gl_weights) = gauss_legendre(GL_ORDER);
    let axes = (0..domain.dim())
        .map(|d| {
            let (lo, hi) = (domain.min[d], domain.max[d]);
            let mut cuts = vec![lo, hi];
            if let Some(w) = well_box {
                for c in [w.min[d], w.max[d]] {
                    if c > lo && c < hi {
                        cuts.push(c);
                    }
                }
            }
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let total = hi - lo;
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for seg in cuts.windows(2) {
                let (a, b) = (seg[0], seg[1]);
                let n_panels = ((panels_per_axis as f64 * (b - a) / total).ceil() as usize).max(2);
                let h = (b - a) / n_panels as f64;
                for p in 0..n_panels {
                    let (pa, pb) = (a + p as f64 * h, a + (p + 1) as f64 * h);
                    let mid = 0.5 * (pa + pb);
                    let half = 0.5 * (pb - pa);
                    for (x, w) in gl_nodes.iter().zip(&gl_weights) {
                        nodes.push(mid + half * x);
                        weights.push(half * w);
                    }
                }
            }
            AxisQuadrature { nodes, weights }
        })
        .collect();
    QuadratureGrid { axes }
}

impl QuadratureGrid {
    pub fn node_counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.nodes.len()).collect()
    }

    pub fn total_nodes(&self) -> usize {
        self.node_counts().iter().product()
    }
}

/// Precomputed transforms between basis coefficients and values on the tensor
/// quadrature grid, plus the tensorized weights and potential samples.
#[derive(Debug, Clone)]
pub struct FieldEvaluator {
    dim: usize,
    modes_per_dim: usize,
    node_counts: Vec<usize>,
    /// Per-axis synthesis matrices (nodes_d x modes_per_dim).
    axis_matrices: Vec<DMatrix<f64>>,
    /// Tensor quadrature weights, row-major over axes.
    pub weights: Vec<f64>,
    /// Potential samples b(x_q) on the tensor grid (zero when no well given).
    pub potential: Vec<f64>,
}

impl FieldEvaluator {
    pub fn new(basis: &SpectralBasis, grid: &QuadratureGrid, well: Option<&WellPotential>) -> Self {
        let dim = basis.dim();
        let lengths = basis.domain.lengths();
        let axis_matrices: Vec<DMatrix<f64>> = (0..dim)
            .map(|d| {
                let l = lengths[d];
                let lo = basis.domain.min[d];
                DMatrix::from_fn(grid.axes[d].nodes.len(), basis.modes_per_dim, |q, k| {
                    (2.0 / l).sqrt()
                        * ((k + 1) as f64 * std::f64::consts::PI * (grid.axes[d].nodes[q] - lo) / l)
                            .sin()
                })
            })
            .collect();
        let node_counts = grid.node_counts();
        let total: usize = node_counts.iter().product();
        let mut weights = vec![0.0; total];
        let mut potential = vec![0.0; total];
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        for (flat, w_out) in weights.iter_mut().enumerate() {
            let mut w = 1.0;
            for d in 0..dim {
                w *= grid.axes[d].weights[idx[d]];
                x[d] = grid.axes[d].nodes[idx[d]];
            }
            *w_out = w;
            if let Some(wp) = well {
                // quadrature nodes are interior, so eval cannot fail
                potential[flat] = wp.eval(&x).unwrap_or(wp.outside_value);
            }
            let mut d = dim;
            while d > 0 {
                d -= 1;
                idx[d] += 1;
                if idx[d] < node_counts[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self {
            dim,
            modes_per_dim: basis.modes_per_dim,
            node_counts,
            axis_matrices,
            weights,
            potential,
        }
    }

    pub fn total_nodes(&self) -> usize {
        self.weights.len()
    }

    /// Values of the field on the tensor grid.
    pub fn synthesize(&self, coeffs: &DVector<f64>) -> Vec<f64> {
        let mut data: Vec<f64> = coeffs.iter().cloned().collect();
        let mut shape: Vec<usize> = vec![self.modes_per_dim; self.dim];
        for d in 0..self.dim {
            data = apply_axis(&data, &shape, d, &self.axis_matrices[d], false);
            shape[d] = self.node_counts[d];
        }
        data
    }

    /// Adjoint transform: dual coefficients sum_q v_q phi_k(x_q).
    pub fn adjoint(&self, values: &[f64]) -> DVector<f64> {
        let mut data = values.to_vec();
        let mut shape = self.node_counts.clone();
        for d in 0..self.dim {
            data = apply_axis(&data, &shape, d, &self.axis_matrices[d], true);
            shape[d] = self.modes_per_dim;
        }
        DVector::from_vec(data)
    }

    /// Dense node-by-mode synthesis matrix; only for desk-scale problems.
    pub fn dense_synthesis(&self) -> Option<DMatrix<f64>> {
        let modes: usize = (0..self.dim).map(|_| self.modes_per_dim).product();
        if self.total_nodes().saturating_mul(modes) > 8_000_000 {
            return None;
        }
        let mut phi = DMatrix::zeros(self.total_nodes(), modes);
        let mut unit = DVector::zeros(modes);
        for k in 0..modes {
            unit[k] = 1.0;
            let col = self.synthesize(&unit);
            for (q, v) in col.iter().enumerate() {
                phi[(q, k)] = *v;
            }
            unit[k] = 0.0;
        }
        Some(phi)
    }

    /// Weighted integral of g(u(x)) over the grid.
    pub fn integrate<F: Fn(f64) -> f64>(&self, values: &[f64], g: F) -> f64 {
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * g(*v))
            .sum()
    }
}

/// Contract one axis of a row-major tensor with a matrix (or its transpose).
fn apply_axis(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    mat: &DMatrix<f64>,
    transpose: bool,
) -> Vec<f64> {
    let in_len = shape[axis];
    let (out_len, stride_check) = if transpose {
        (mat.ncols(), mat.nrows())
    } else {
        (mat.nrows(), mat.ncols())
    };
    debug_assert_eq!(stride_check, in_len);
    let lead: usize = shape[..axis].iter().product();
    let trail: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; lead * out_len * trail];
    for l in 0..lead {
        for i in 0..in_len {
            let src = &data[(l * in_len + i) * trail..(l * in_len + i + 1) * trail];
            for o in 0..out_len {
                let m = if transpose { mat[(i, o)] } else { mat[(o, i)] };
                if m == 0.0 {
                    continue;
                }
                let dst = &mut out[(l * out_len + o) * trail..(l * out_len + o + 1) * trail];
                for (dv, sv) in dst.iter_mut().zip(src) {
                    *dv += m * sv;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::adaptive_simpson;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn basis_eigenvalues_interval() {
        let b = build_basis(&BoxDomain::interval(0.0, 1.0).unwrap(), 3).unwrap();
        let expected = [PI * PI, 4.0 * PI * PI, 9.0 * PI * PI];
        for (nu, e) in b.nu.iter().zip(expected) {
            assert_relative_eq!(*nu, e, max_relative = 1e-14);
        }

        let b = build_basis(&BoxDomain::interval(-1.0, 2.0).unwrap(), 2).unwrap();
        assert_relative_eq!(b.nu[0], PI * PI / 9.0, max_relative = 1e-14);
        assert_relative_eq!(b.nu[1], 4.0 * PI * PI / 9.0, max_relative = 1e-14);
    }

    #[test]
    fn basis_eigenvalues_square() {
        let b = build_basis(&BoxDomain::cube(0.0, 1.0, 2).unwrap(), 2).unwrap();
        assert_eq!(b.len(), 4);
        let mut nu = b.nu.clone();
        nu.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [2.0, 5.0, 5.0, 8.0].map(|c| c * PI * PI);
        for (v, e) in nu.iter().zip(expected) {
            assert_relative_eq!(*v, e, max_relative = 1e-14);
        }
    }

    #[test]
    fn reporting_order_sorts_by_eigenvalue() {
        let b = build_basis(&BoxDomain::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(), 3).unwrap();
        let order = b.order_by_eigenvalue();
        for w in order.windows(2) {
            assert!(b.nu[w[0]] <= b.nu[w[1]]);
        }
        // the smallest eigenvalue belongs to the (1,1) mode
        assert_eq!(b.modes[order[0]], vec![1, 1]);
    }

    #[test]
    fn mode_cap_enforced() {
        let d = BoxDomain::cube(0.0, 1.0, 3).unwrap();
        assert!(matches!(
            build_basis(&d, 17),
            Err(Error::ResourceLimit(_))
        ));
        assert!(build_basis(&d, 16).is_ok());
    }

    #[test]
    fn evaluate_field_examples() {
        let b = build_basis(&BoxDomain::interval(0.0, 1.0).unwrap(), 4).unwrap();
        let mut c = DVector::zeros(4);
        c[0] = 1.0;
        let v = b.evaluate_field(&c, &[vec![0.5]]).unwrap();
        assert_relative_eq!(v[0], 2.0f64.sqrt(), max_relative = 1e-14);

        let zero = DVector::zeros(4);
        let v = b.evaluate_field(&zero, &[vec![0.1], vec![0.9]]).unwrap();
        assert!(v.iter().all(|x| *x == 0.0));

        assert!(matches!(
            b.evaluate_field(&c, &[vec![1.5]]),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn evaluate_field_matches_direct_sum() {
        let b = build_basis(&BoxDomain::cube(-1.0, 2.0, 2).unwrap(), 5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let c = DVector::from_fn(b.len(), |_, _| rng.random::<f64>() - 0.5);
        for _ in 0..10 {
            let x = vec![
                -1.0 + 3.0 * rng.random::<f64>(),
                -1.0 + 3.0 * rng.random::<f64>(),
            ];
            let direct: f64 = (0..b.len()).map(|i| c[i] * b.eval_mode(i, &x)).sum();
            let via = b.evaluate_field(&c, std::slice::from_ref(&x)).unwrap()[0];
            assert!((direct - via).abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_is_identity_on_whole_domain() {
        let b = build_basis(&BoxDomain::interval(-1.0, 2.0).unwrap(), 8).unwrap();
        let s = b.overlap_on(&b.domain).unwrap();
        for j in 0..8 {
            for k in 0..8 {
                let expected = if j == k { 1.0 } else { 0.0 };
                assert!((s[(j, k)] - expected).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn overlap_matches_adaptive_quadrature() {
        let b = build_basis(&BoxDomain::interval(-1.0, 2.0).unwrap(), 6).unwrap();
        let omega = BoxDomain::interval(0.0, 1.0).unwrap();
        let s = b.overlap_on(&omega).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                let f = |x: f64| {
                    b.eval_mode(j, &[x]) * b.eval_mode(k, &[x])
                };
                let num = adaptive_simpson(&f, 0.0, 1.0, 1e-13);
                assert!(
                    (s[(j, k)] - num).abs() <= 1e-10 * (1.0 + num.abs()),
                    "({j},{k}): {} vs {num}",
                    s[(j, k)]
                );
            }
        }
    }

    #[test]
    fn cross_overlap_matches_quadrature() {
        let big = build_basis(&BoxDomain::interval(-1.0, 2.0).unwrap(), 5).unwrap();
        let small = build_basis(&BoxDomain::interval(0.0, 1.0).unwrap(), 4).unwrap();
        let omega = small.domain.clone();
        let x = big.cross_overlap(&small, &omega).unwrap();
        for j in 0..5 {
            for k in 0..4 {
                let f = |t: f64| big.eval_mode(j, &[t]) * small.eval_mode(k, &[t]);
                let num = adaptive_simpson(&f, 0.0, 1.0, 1e-13);
                assert!((x[(j, k)] - num).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn quadrature_integrates_basis_products_exactly_enough() {
        let domain = BoxDomain::interval(-1.0, 2.0).unwrap();
        let omega = BoxDomain::interval(0.0, 1.0).unwrap();
        let b = build_basis(&domain, 8).unwrap();
        let grid = build_quadrature(&domain, Some(&omega), 24);
        let ev = FieldEvaluator::new(&b, &grid, None);
        // mass of each basis function over D is 1
        for k in 0..b.len() {
            let mut c = DVector::zeros(b.len());
            c[k] = 1.0;
            let vals = ev.synthesize(&c);
            let mass = ev.integrate(&vals, |v| v * v);
            assert!((mass - 1.0).abs() < 1e-12, "mode {k}: {mass}");
        }
    }

    #[test]
    fn tensor_synthesis_matches_pointwise_eval_2d() {
        let domain = BoxDomain::cube(0.0, 1.5, 2).unwrap();
        let b = build_basis(&domain, 4).unwrap();
        let grid = build_quadrature(&domain, None, 4);
        let ev = FieldEvaluator::new(&b, &grid, None);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let c = DVector::from_fn(b.len(), |_, _| rng.random::<f64>() - 0.5);
        let vals = ev.synthesize(&c);
        // check a handful of tensor nodes against direct evaluation
        let counts = grid.node_counts();
        for (i0, i1) in [(0, 0), (3, 7), (10, 2)] {
            let x = vec![grid.axes[0].nodes[i0], grid.axes[1].nodes[i1]];
            let direct = b.evaluate_field(&c, &[x]).unwrap()[0];
            let flat = i0 * counts[1] + i1;
            assert!((vals[flat] - direct).abs() < 1e-12);
        }
        // adjoint consistency: <synth(c), v>_w = <c, adjoint(w .* v)>
        let v: Vec<f64> = (0..ev.total_nodes()).map(|_| rng.random::<f64>()).collect();
        let weighted: Vec<f64> = v.iter().zip(&ev.weights).map(|(a, w)| a * w).collect();
        let lhs: f64 = vals.iter().zip(&weighted).map(|(a, b)| a * b).sum();
        let rhs = (ev.adjoint(&weighted).transpose() * &c)[(0, 0)];
        assert!((lhs - rhs).abs() < 1e-11);
    }

    #[test]
    fn gagliardo_nirenberg_with_unit_constant() {
        // (u' , u')^2 <= |u''|^2 |u|^2 in the diagonal basis, i.e.
        // (sum c^2 nu)^2 <= (sum c^2 nu^2)(sum c^2)
        let b = build_basis(&BoxDomain::interval(0.0, 2.0).unwrap(), 12).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let c: Vec<f64> = (0..b.len()).map(|_| rng.random::<f64>() - 0.5).collect();
            let g: f64 = c.iter().zip(&b.nu).map(|(ci, nu)| ci * ci * nu).sum();
            let k: f64 = c.iter().zip(&b.nu).map(|(ci, nu)| ci * ci * nu * nu).sum();
            let m: f64 = c.iter().map(|ci| ci * ci).sum();
            assert!(g * g <= k * m * (1.0 + 1e-12));
        }
    }
}
