//! Assembly of the sign-split quadratic forms.
//!
//! `A` carries the positive part (bilaplacian, positive gradient part and
//! positive potential part) and `Gm` the negative part; the problem form is
//! their difference. For the sharp box well both potential parts are exact
//! linear combinations of the well overlap matrix.

use nalgebra::{DMatrix, DVector};

use crate::basis::{build_quadrature, FieldEvaluator, SpectralBasis};
use crate::error::{Error, Result};
use crate::model::ProblemParams;

#[derive(Debug, Clone)]
pub struct QuadraticForms {
    pub basis: SpectralBasis,
    pub lambda: f64,
    pub a0: f64,
    pub b0: f64,
    /// Positive-part matrix: K + max(a0,0) G + P_plus.
    pub a: DMatrix<f64>,
    /// Negative-part matrix: max(-a0,0) G + P_minus.
    pub gm: DMatrix<f64>,
    /// Gram matrix of the basis over the well box (identity when the well is
    /// the whole domain).
    pub overlap_well: DMatrix<f64>,
    /// Potential value outside the well, lambda * b_out + b0 (b0 when there is
    /// no exterior region).
    pub value_outside: f64,
    /// Potential value on the well, b0.
    pub value_inside: f64,
}

/// Assemble the forms for a full problem instance on the truncation box.
pub fn assemble_forms(basis: &SpectralBasis, params: &ProblemParams) -> Result<QuadraticForms> {
    if params.lambda.is_nan() || params.lambda <= params.lambda_floor() {
        return Err(Error::InvalidLambda(format!(
            "lambda = {} must exceed {}",
            params.lambda,
            params.lambda_floor()
        )));
    }
    if basis.domain != params.well.truncation_box {
        return Err(Error::InvalidGeometry(
            "basis domain differs from the truncation box".into(),
        ));
    }
    let n = basis.len();
    let value_inside = params.b0;
    let value_outside = params.lambda * params.well.outside_value + params.b0;

    let (p_plus, p_minus, overlap_well) = if params.well.ramp_width == 0.0 {
        let s_well = basis.overlap_on(&params.well.well_box)?;
        let mut s_out = DMatrix::identity(n, n);
        s_out -= &s_well;
        let p_plus = &s_well * value_inside.max(0.0) + &s_out * value_outside.max(0.0);
        let p_minus = &s_well * (-value_inside).max(0.0) + &s_out * (-value_outside).max(0.0);
        (p_plus, p_minus, s_well)
    } else {
        // mollified well: panel quadrature of the ramped potential
        let grid = build_quadrature(&basis.domain, Some(&params.well.well_box), params.quadrature_panels);
        let ev = FieldEvaluator::new(basis, &grid, Some(&params.well));
        let phi = ev.dense_synthesis().ok_or_else(|| {
            Error::ResourceLimit("mollified assembly needs a dense synthesis matrix".into())
        })?;
        let mut wp = DVector::zeros(ev.total_nodes());
        let mut wm = DVector::zeros(ev.total_nodes());
        for q in 0..ev.total_nodes() {
            let v = params.lambda * ev.potential[q] + params.b0;
            wp[q] = ev.weights[q] * v.max(0.0);
            wm[q] = ev.weights[q] * (-v).max(0.0);
        }
        let scale_cols = |w: &DVector<f64>| {
            let mut scaled = phi.clone();
            for q in 0..scaled.nrows() {
                for k in 0..scaled.ncols() {
                    scaled[(q, k)] *= w[q];
                }
            }
            phi.transpose() * scaled
        };
        let p_plus = scale_cols(&wp);
        let p_minus = scale_cols(&wm);
        let s_well = basis.overlap_on(&params.well.well_box)?;
        (p_plus, p_minus, s_well)
    };

    let mut a = p_plus;
    let mut gm = p_minus;
    for k in 0..n {
        a[(k, k)] += basis.nu[k] * basis.nu[k] + params.a0.max(0.0) * basis.nu[k];
        gm[(k, k)] += (-params.a0).max(0.0) * basis.nu[k];
    }
    Ok(QuadraticForms {
        basis: basis.clone(),
        lambda: params.lambda,
        a0: params.a0,
        b0: params.b0,
        a,
        gm,
        overlap_well,
        value_outside,
        value_inside,
    })
}

/// Forms for the constant-potential problem posed directly on the well box
/// (the limit problem): the potential is b0 everywhere, so every matrix is
/// diagonal in the sine basis of the well.
pub fn assemble_on_omega(basis: &SpectralBasis, a0: f64, b0: f64) -> QuadraticForms {
    let n = basis.len();
    let mut a = DMatrix::zeros(n, n);
    let mut gm = DMatrix::zeros(n, n);
    for k in 0..n {
        let nu = basis.nu[k];
        a[(k, k)] = nu * nu + a0.max(0.0) * nu + b0.max(0.0);
        gm[(k, k)] = (-a0).max(0.0) * nu + (-b0).max(0.0);
    }
    QuadraticForms {
        basis: basis.clone(),
        lambda: 0.0,
        a0,
        b0,
        a,
        gm,
        overlap_well: DMatrix::identity(n, n),
        value_outside: b0,
        value_inside: b0,
    }
}

impl QuadraticForms {
    pub fn len(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.a.nrows() == 0
    }

    /// Bilaplacian matrix, diag(nu^2).
    pub fn k_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.len(),
            self.basis.nu.iter().map(|nu| nu * nu),
        ))
    }

    /// Stiffness matrix, diag(nu).
    pub fn g_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.len(),
            self.basis.nu.iter().cloned(),
        ))
    }

    /// Mass matrix (identity in the orthonormal basis).
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        DMatrix::identity(self.len(), self.len())
    }

    /// Positive potential part, reconstructed from the region split.
    pub fn p_plus(&self) -> DMatrix<f64> {
        let s_out = self.mass_matrix() - &self.overlap_well;
        &self.overlap_well * self.value_inside.max(0.0) + s_out * self.value_outside.max(0.0)
    }

    /// Negative potential part.
    pub fn p_minus(&self) -> DMatrix<f64> {
        let s_out = self.mass_matrix() - &self.overlap_well;
        &self.overlap_well * (-self.value_inside).max(0.0)
            + s_out * (-self.value_outside).max(0.0)
    }

    /// The problem form A - Gm.
    pub fn d_matrix(&self) -> DMatrix<f64> {
        &self.a - &self.gm
    }

    pub fn gm_is_zero(&self) -> bool {
        self.gm.amax() == 0.0
    }

    pub fn inner_a(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * &self.a * v)[(0, 0)]
    }

    pub fn norm_a(&self, u: &DVector<f64>) -> f64 {
        self.inner_a(u, u).max(0.0).sqrt()
    }

    pub fn form_g(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * &self.gm * v)[(0, 0)]
    }

    pub fn form_d(&self, u: &DVector<f64>) -> f64 {
        self.inner_a(u, u) - self.form_g(u, u)
    }

    /// Fraction of L^2 mass outside the well.
    pub fn outside_mass(&self, u: &DVector<f64>) -> f64 {
        let total = u.norm_squared();
        if total == 0.0 {
            return 0.0;
        }
        let inside = (u.transpose() * &self.overlap_well * u)[(0, 0)];
        (1.0 - inside / total).clamp(0.0, 1.0)
    }

    /// lambda * integral of b u^2 (exact for the sharp well).
    pub fn well_penalty(&self, u: &DVector<f64>, outside_value: f64) -> f64 {
        let outside = u.norm_squared() - (u.transpose() * &self.overlap_well * u)[(0, 0)];
        self.lambda * outside_value * outside.max(0.0)
    }
}
