//! The energy functional: quadratic part from the assembled forms, nonlinear
//! part by panel quadrature, gradients as Riesz representatives in the
//! positive-part inner product.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::basis::{build_basis, build_quadrature, FieldEvaluator};
use crate::error::{Error, Result};
use crate::forms::{assemble_forms, assemble_on_omega, QuadraticForms};
use crate::model::{NonlinearitySpec, ProblemParams};

#[derive(Debug, Clone)]
pub struct EnergyState {
    pub coeffs: DVector<f64>,
    pub energy: f64,
    /// Riesz gradient with respect to the positive-part inner product.
    pub grad: DVector<f64>,
    /// Gradient norm in the same inner product (the dual norm of the
    /// derivative functional).
    pub grad_norm: f64,
}

/// Energy functional bound to assembled forms and a nonlinearity.
pub struct EnergyModel {
    pub forms: QuadraticForms,
    pub nonlinearity: NonlinearitySpec,
    evaluator: FieldEvaluator,
    d_matrix: DMatrix<f64>,
    chol_a: Cholesky<f64, Dyn>,
    dense_phi: Option<DMatrix<f64>>,
}

impl EnergyModel {
    pub fn new(
        forms: QuadraticForms,
        nonlinearity: NonlinearitySpec,
        quadrature_panels: usize,
        well_box: Option<&crate::geometry::BoxDomain>,
    ) -> Result<Self> {
        let grid = build_quadrature(&forms.basis.domain, well_box, quadrature_panels);
        let evaluator = FieldEvaluator::new(&forms.basis, &grid, None);
        let d_matrix = forms.d_matrix();
        let chol_a = forms
            .a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::FactorizationFailure(
                "positive-part matrix is not positive definite".into(),
            ))?;
        let dense_phi = evaluator.dense_synthesis();
        Ok(Self {
            forms,
            nonlinearity,
            evaluator,
            d_matrix,
            chol_a,
            dense_phi,
        })
    }

    /// Full problem on the truncation box.
    pub fn from_params(params: &ProblemParams) -> Result<Self> {
        let basis = build_basis(&params.well.truncation_box, params.modes_per_dim)?;
        let forms = assemble_forms(&basis, params)?;
        Self::new(
            forms,
            params.nonlinearity.clone(),
            params.quadrature_panels,
            Some(&params.well.well_box),
        )
    }

    /// Constant-potential problem posed on the well box itself.
    pub fn on_omega(
        omega: &crate::geometry::BoxDomain,
        a0: f64,
        b0: f64,
        nonlinearity: NonlinearitySpec,
        modes_per_dim: usize,
        quadrature_panels: usize,
    ) -> Result<Self> {
        let basis = build_basis(omega, modes_per_dim)?;
        let forms = assemble_on_omega(&basis, a0, b0);
        Self::new(forms, nonlinearity, quadrature_panels, None)
    }

    pub fn dim(&self) -> usize {
        self.forms.len()
    }

    fn synthesize_checked(&self, u: &DVector<f64>) -> Result<Vec<f64>> {
        let values = self.evaluator.synthesize(u);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::QuadratureOverflow(
                "field synthesis produced non-finite values".into(),
            ));
        }
        Ok(values)
    }

    /// E(u) = 1/2 D(u,u) - integral of F(u).
    pub fn energy(&self, u: &DVector<f64>) -> Result<f64> {
        let values = self.synthesize_checked(u)?;
        let quad = 0.5 * (u.transpose() * &self.d_matrix * u)[(0, 0)];
        let nl = self
            .evaluator
            .integrate(&values, |v| self.nonlinearity.eval(v).1);
        if !nl.is_finite() {
            return Err(Error::QuadratureOverflow("nonlinear term overflowed".into()));
        }
        Ok(quad - nl)
    }

    /// Dual residual of the weak form: r = D u - N(u), with
    /// N(u)_k = integral of f(u) phi_k.
    pub fn residual_dual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let values = self.synthesize_checked(u)?;
        let weighted: Vec<f64> = values
            .iter()
            .zip(&self.evaluator.weights)
            .map(|(v, w)| w * self.nonlinearity.eval(*v).0)
            .collect();
        if weighted.iter().any(|v| !v.is_finite()) {
            return Err(Error::QuadratureOverflow("nonlinear term overflowed".into()));
        }
        Ok(&self.d_matrix * u - self.evaluator.adjoint(&weighted))
    }

    /// Energy, Riesz gradient and gradient norm in one pass.
    pub fn energy_state(&self, u: &DVector<f64>) -> Result<EnergyState> {
        let energy = self.energy(u)?;
        let r = self.residual_dual(u)?;
        let grad = self.chol_a.solve(&r);
        let grad_norm = (grad.transpose() * &r)[(0, 0)].max(0.0).sqrt();
        Ok(EnergyState {
            coeffs: u.clone(),
            energy,
            grad,
            grad_norm,
        })
    }

    /// Gradient norm only (dual norm of the derivative).
    pub fn grad_norm(&self, u: &DVector<f64>) -> Result<f64> {
        let r = self.residual_dual(u)?;
        let g = self.chol_a.solve(&r);
        Ok((g.transpose() * &r)[(0, 0)].max(0.0).sqrt())
    }

    /// Hessian of the energy (dense); None when the synthesis matrix would be
    /// too large to materialize.
    pub fn hessian(&self, u: &DVector<f64>) -> Result<Option<DMatrix<f64>>> {
        let phi = match &self.dense_phi {
            Some(p) => p,
            None => return Ok(None),
        };
        let values = self.synthesize_checked(u)?;
        let mut scaled = phi.clone();
        for q in 0..scaled.nrows() {
            let s = self.evaluator.weights[q] * self.nonlinearity.derivative(values[q]);
            for k in 0..scaled.ncols() {
                scaled[(q, k)] *= s;
            }
        }
        Ok(Some(&self.d_matrix - phi.transpose() * scaled))
    }

    /// Directional derivative evaluated through the inner product with the
    /// Riesz gradient.
    pub fn pairing(&self, state: &EnergyState, h: &DVector<f64>) -> f64 {
        (state.grad.transpose() * &self.forms.a * h)[(0, 0)]
    }

    /// Diagnostic integrals: (int F(u), int f(u) u, int |u|^p).
    pub fn nonlinear_integrals(&self, u: &DVector<f64>) -> Result<(f64, f64, f64)> {
        let values = self.synthesize_checked(u)?;
        let p = self.nonlinearity.p;
        let mut f_int = 0.0;
        let mut fu_int = 0.0;
        let mut pnorm = 0.0;
        for (v, w) in values.iter().zip(&self.evaluator.weights) {
            let (f, big_f) = self.nonlinearity.eval(*v);
            f_int += w * big_f;
            fu_int += w * f * v;
            pnorm += w * v.abs().powf(p);
        }
        Ok((f_int, fu_int, pnorm))
    }

    pub fn norm_a(&self, u: &DVector<f64>) -> f64 {
        self.forms.norm_a(u)
    }
}

/// Energy and gradient for a single vector (the one-shot operation).
pub fn energy_and_gradient(model: &EnergyModel, u: &DVector<f64>) -> Result<EnergyState> {
    model.energy_state(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDomain;
    use crate::model::WellPotential;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    const PI: f64 = std::f64::consts::PI;

    fn quartic_on_unit_interval(m: usize) -> EnergyModel {
        EnergyModel::on_omega(
            &BoxDomain::interval(0.0, 1.0).unwrap(),
            0.0,
            0.0,
            NonlinearitySpec::power(4.0),
            m,
            32,
        )
        .unwrap()
    }

    #[test]
    fn zero_field_has_zero_energy_and_gradient() {
        let model = quartic_on_unit_interval(8);
        let u = DVector::zeros(8);
        let st = energy_and_gradient(&model, &u).unwrap();
        assert_eq!(st.energy, 0.0);
        assert_eq!(st.grad_norm, 0.0);
    }

    #[test]
    fn single_mode_quartic_energy_closed_form() {
        // E(t e1) = 1/2 pi^4 t^2 - (3/8) t^4 on the unit interval: the quartic
        // integral of sqrt(2) sin(pi x) is 4 * 3/8 = 3/2
        let model = quartic_on_unit_interval(8);
        for t in [0.3, 1.0, 2.7] {
            let mut u = DVector::zeros(8);
            u[0] = t;
            let e = model.energy(&u).unwrap();
            let exact = 0.5 * PI.powi(4) * t * t - 3.0 / 8.0 * t.powi(4);
            assert_relative_eq!(e, exact, epsilon = 1e-11 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn gradient_matches_finite_differences_second_order() {
        let params = ProblemParams {
            dim: 1,
            a0: -15.0,
            b0: 0.0,
            lambda: 100.0,
            well: WellPotential::new(
                BoxDomain::interval(0.0, 1.0).unwrap(),
                BoxDomain::interval(-1.0, 2.0).unwrap(),
                1.0,
                1.0,
            )
            .unwrap(),
            nonlinearity: NonlinearitySpec::power(4.0),
            modes_per_dim: 10,
            quadrature_panels: 32,
        };
        let model = EnergyModel::from_params(&params).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let u = DVector::from_fn(10, |_, _| rng.random::<f64>() - 0.5);
            let h = DVector::from_fn(10, |_, _| rng.random::<f64>() - 0.5);
            let st = model.energy_state(&u).unwrap();
            let pairing = model.pairing(&st, &h);
            let mut errors = Vec::new();
            for eps in [1e-2, 5e-3, 2.5e-3] {
                let ep = model.energy(&(&u + &h * eps)).unwrap();
                let em = model.energy(&(&u - &h * eps)).unwrap();
                errors.push(((ep - em) / (2.0 * eps) - pairing).abs());
            }
            // second order: each halving divides the error by about 4
            for w in errors.windows(2) {
                if w[0] > 1e-12 {
                    let ratio = w[1] / w[0];
                    assert!(ratio < 0.35, "ratio {ratio}");
                }
            }
        }
    }

    #[test]
    fn energy_is_even_for_odd_nonlinearity() {
        let model = quartic_on_unit_interval(10);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let u = DVector::from_fn(10, |_, _| rng.random::<f64>() - 0.5);
            let e1 = model.energy(&u).unwrap();
            let e2 = model.energy(&(-&u)).unwrap();
            assert_eq!(e1, e2);
        }
    }

    #[test]
    fn overflow_is_reported() {
        let model = quartic_on_unit_interval(6);
        let mut u = DVector::zeros(6);
        u[0] = 1e200;
        assert!(matches!(
            model.energy(&u),
            Err(Error::QuadratureOverflow(_))
        ));
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let model = quartic_on_unit_interval(8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let u = DVector::from_fn(8, |_, _| rng.random::<f64>() - 0.5);
        let h = DVector::from_fn(8, |_, _| rng.random::<f64>() - 0.5);
        let hess = model.hessian(&u).unwrap().unwrap();
        let eps = 1e-5;
        let rp = model.residual_dual(&(&u + &h * eps)).unwrap();
        let rm = model.residual_dual(&(&u - &h * eps)).unwrap();
        let fd = (rp - rm) / (2.0 * eps);
        let hv = &hess * &h;
        assert!((&fd - &hv).norm() <= 1e-6 * hv.norm().max(1.0));
    }
}
