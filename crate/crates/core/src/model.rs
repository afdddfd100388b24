//! Problem instances: the well potential, the nonlinearity family, and the
//! scalar parameters of the fourth-order equation, with structural validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoxDomain;

/// Box well: zero on the closed well box, `outside_value` on the rest of the
/// truncation box. An optional linear ramp of width `ramp_width` replaces the
/// jump for robustness experiments (default 0, the sharp indicator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellPotential {
    pub well_box: BoxDomain,
    pub truncation_box: BoxDomain,
    pub outside_value: f64,
    pub b_infty: f64,
    #[serde(default)]
    pub ramp_width: f64,
}

impl WellPotential {
    pub fn new(well_box: BoxDomain, truncation_box: BoxDomain, outside_value: f64, b_infty: f64) -> Result<Self> {
        let w = Self {
            well_box,
            truncation_box,
            outside_value,
            b_infty,
            ramp_width: 0.0,
        };
        w.check()?;
        Ok(w)
    }

    pub fn with_ramp_width(mut self, width: f64) -> Self {
        self.ramp_width = width.max(0.0);
        self
    }

    fn check(&self) -> Result<()> {
        if !self.truncation_box.strictly_contains(&self.well_box) {
            return Err(Error::InvalidGeometry(
                "well box must lie strictly inside the truncation box".into(),
            ));
        }
        if self.outside_value.is_nan() || self.outside_value <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "outside_value must be positive, got {}",
                self.outside_value
            )));
        }
        if self.b_infty.is_nan() || self.b_infty <= 0.0 || self.b_infty > self.outside_value {
            return Err(Error::InvalidGeometry(format!(
                "b_infty must satisfy 0 < b_infty <= outside_value, got {}",
                self.b_infty
            )));
        }
        Ok(())
    }

    /// Potential value at a point of the truncation box.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if !self.truncation_box.contains(x) {
            return Err(Error::OutOfDomain(format!("{x:?}")));
        }
        let d = self.well_box.distance_inf(x);
        if d == 0.0 {
            // closed well: the boundary belongs to the zero set
            Ok(0.0)
        } else if self.ramp_width > 0.0 && d < self.ramp_width {
            Ok(self.outside_value * d / self.ramp_width)
        } else {
            Ok(self.outside_value)
        }
    }

    /// Sub-level set {b < b_infty} coincides with the open well for the sharp
    /// indicator, so its measure is the well volume.
    pub fn sublevel_measure(&self) -> f64 {
        self.well_box.volume()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearityKind {
    /// f(t) = |t|^{p-2} t with 2 < p.
    Power,
    /// f(t) = l_inf t^3 / (1 + t^2), asymptotically linear (p = 2).
    Saturating,
}

/// Nonlinearity family with closed-form primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub kind: NonlinearityKind,
    pub p: f64,
    pub l_infty: f64,
    /// Optional linear term l0 * t * exp(-t^2); zero slope at infinity, slope
    /// l0 at the origin. Default 0.
    #[serde(default)]
    pub l0: f64,
}

impl NonlinearitySpec {
    pub fn power(p: f64) -> Self {
        Self {
            kind: NonlinearityKind::Power,
            p,
            l_infty: 1.0,
            l0: 0.0,
        }
    }

    pub fn saturating(l_infty: f64) -> Self {
        Self {
            kind: NonlinearityKind::Saturating,
            p: 2.0,
            l_infty,
            l0: 0.0,
        }
    }

    pub fn with_l0(mut self, l0: f64) -> Self {
        self.l0 = l0;
        self
    }

    /// Slope of f(t)/t at the origin.
    pub fn l0(&self) -> f64 {
        self.l0
    }

    /// The constant l_* in f(t)t - 2F(t) >= l_* |t|^p (power family only).
    pub fn l_star(&self) -> Option<f64> {
        match self.kind {
            NonlinearityKind::Power => Some(1.0 - 2.0 / self.p),
            NonlinearityKind::Saturating => None,
        }
    }

    /// Returns (f(t), F(t)) with F the primitive of f vanishing at 0.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let (mut f, mut big_f) = match self.kind {
            NonlinearityKind::Power => {
                let a = t.abs();
                (a.powf(self.p - 2.0) * t, a.powf(self.p) / self.p)
            }
            NonlinearityKind::Saturating => {
                let t2 = t * t;
                (
                    self.l_infty * t2 * t / (1.0 + t2),
                    0.5 * self.l_infty * (t2 - (1.0 + t2).ln()),
                )
            }
        };
        if self.l0 != 0.0 {
            let e = (-t * t).exp();
            f += self.l0 * t * e;
            big_f += 0.5 * self.l0 * (1.0 - e);
        }
        (f, big_f)
    }

    /// Derivative f'(t), used by the Newton refinement.
    pub fn derivative(&self, t: f64) -> f64 {
        let mut d = match self.kind {
            NonlinearityKind::Power => (self.p - 1.0) * t.abs().powf(self.p - 2.0),
            NonlinearityKind::Saturating => {
                let t2 = t * t;
                let den = 1.0 + t2;
                self.l_infty * t2 * (3.0 + t2) / (den * den)
            }
        };
        if self.l0 != 0.0 {
            d += self.l0 * (1.0 - 2.0 * t * t) * (-t * t).exp();
        }
        d
    }
}

/// Full problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dim: usize,
    pub a0: f64,
    pub b0: f64,
    pub lambda: f64,
    pub well: WellPotential,
    pub nonlinearity: NonlinearitySpec,
    pub modes_per_dim: usize,
    pub quadrature_panels: usize,
}

impl ProblemParams {
    /// Lower bound on admissible lambda: max{0, -b0/b_infty}.
    pub fn lambda_floor(&self) -> f64 {
        (-self.b0 / self.well.b_infty).max(0.0)
    }

    /// Critical Sobolev exponent 2N/(N-2), for N >= 3.
    pub fn critical_exponent(&self) -> Option<f64> {
        (self.dim >= 3).then(|| 2.0 * self.dim as f64 / (self.dim as f64 - 2.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionStatus {
    Pass,
    Relaxed,
    Formal,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub status: ConditionStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub conditions: Vec<ConditionReport>,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.conditions
            .iter()
            .all(|c| c.status != ConditionStatus::Fail)
    }
}

/// Structural check of every standing assumption. Hard failures (geometry,
/// exponent range, lambda floor) come back as errors; soft deviations are
/// reported with `Relaxed` or `Formal` status.
pub fn validate(params: &ProblemParams) -> Result<ValidationReport> {
    let mut conditions = Vec::new();

    if params.dim == 0 || params.well.well_box.dim() != params.dim || params.well.truncation_box.dim() != params.dim {
        return Err(Error::InvalidGeometry(format!(
            "dimension mismatch: N = {}, well boxes have dims {} and {}",
            params.dim,
            params.well.well_box.dim(),
            params.well.truncation_box.dim()
        )));
    }
    params.well.check()?;

    conditions.push(ConditionReport {
        name: "B1: continuity and nonnegativity".into(),
        status: if params.well.ramp_width > 0.0 {
            ConditionStatus::Pass
        } else {
            ConditionStatus::Relaxed
        },
        detail: if params.well.ramp_width > 0.0 {
            format!("continuous ramp of width {}", params.well.ramp_width)
        } else {
            "relaxed: piecewise constant indicator well".into()
        },
    });
    conditions.push(ConditionReport {
        name: "B2: finite sub-level set".into(),
        status: ConditionStatus::Pass,
        detail: format!(
            "measure of the sub-level set {{b < b_infty}} = |well| = {}",
            params.well.sublevel_measure()
        ),
    });
    conditions.push(ConditionReport {
        name: "B3: well bottom is the zero set".into(),
        status: ConditionStatus::Relaxed,
        detail: "box well has corners rather than a smooth boundary".into(),
    });

    if params.lambda.is_nan() || params.lambda <= params.lambda_floor() {
        return Err(Error::InvalidLambda(format!(
            "lambda = {} must exceed max(0, -b0/b_infty) = {}",
            params.lambda,
            params.lambda_floor()
        )));
    }
    conditions.push(ConditionReport {
        name: "lambda floor".into(),
        status: ConditionStatus::Pass,
        detail: format!("lambda = {} > {}", params.lambda, params.lambda_floor()),
    });

    let nl = &params.nonlinearity;
    match nl.kind {
        NonlinearityKind::Power => {
            if nl.p.is_nan() || nl.p <= 2.0 {
                return Err(Error::InvalidExponent(format!(
                    "power family needs p > 2, got {}",
                    nl.p
                )));
            }
            if let Some(crit) = params.critical_exponent() {
                if nl.p >= crit {
                    return Err(Error::InvalidExponent(format!(
                        "p = {} is not below the critical exponent {} for N = {}",
                        nl.p, crit, params.dim
                    )));
                }
                conditions.push(ConditionReport {
                    name: "F2: subcritical growth".into(),
                    status: ConditionStatus::Pass,
                    detail: format!("2 < p = {} < {}", nl.p, crit),
                });
            } else {
                conditions.push(ConditionReport {
                    name: "F2: subcritical growth".into(),
                    status: ConditionStatus::Formal,
                    detail: format!("N = {} <= 2: no critical exponent, formal regime", params.dim),
                });
            }
            conditions.push(ConditionReport {
                name: "F4: superquadratic identity".into(),
                status: ConditionStatus::Pass,
                detail: format!("f(t)t - 2F(t) = (1 - 2/p)|t|^p, l_* = {}", nl.l_star().unwrap()),
            });
        }
        NonlinearityKind::Saturating => {
            if nl.l_infty.is_nan() || nl.l_infty <= 0.0 {
                return Err(Error::InvalidExponent(format!(
                    "saturating family needs l_infty > 0, got {}",
                    nl.l_infty
                )));
            }
            conditions.push(ConditionReport {
                name: "F2: asymptotically linear".into(),
                status: ConditionStatus::Pass,
                detail: format!("p = 2, f(t)/t -> l_infty = {}", nl.l_infty),
            });
            conditions.push(ConditionReport {
                name: "F4: superquadratic identity".into(),
                status: ConditionStatus::Relaxed,
                detail: "not claimed for the saturating family".into(),
            });
        }
    }
    conditions.push(ConditionReport {
        name: "F1: slope at the origin".into(),
        status: ConditionStatus::Pass,
        detail: format!("l0 = {}", nl.l0()),
    });
    conditions.push(ConditionReport {
        name: "F3: monotone f(t)/|t|".into(),
        status: ConditionStatus::Pass,
        detail: "holds for both model families".into(),
    });

    if params.modes_per_dim < 2 {
        return Err(Error::InvalidConfig(format!(
            "modes_per_dim must be at least 2, got {}",
            params.modes_per_dim
        )));
    }
    if params.quadrature_panels < 1 {
        return Err(Error::InvalidConfig(
            "quadrature_panels must be at least 1".into(),
        ));
    }

    Ok(ValidationReport { conditions })
}

/// Potential evaluation with domain check (see `WellPotential::eval`).
pub fn eval_potential(well: &WellPotential, x: &[f64]) -> Result<f64> {
    well.eval(x)
}

/// Pointwise nonlinearity and primitive.
pub fn eval_f(spec: &NonlinearitySpec, t: f64) -> (f64, f64) {
    spec.eval(t)
}

// ---------------------------------------------------------------------------
// JSON config file
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WellConfig {
    omega_min: Vec<f64>,
    omega_max: Vec<f64>,
    domain_min: Vec<f64>,
    domain_max: Vec<f64>,
    outside_value: f64,
    b_infty: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NonlinearityConfig {
    kind: String,
    #[serde(default)]
    p: Option<f64>,
    #[serde(default)]
    l_infty: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(rename = "N")]
    n: usize,
    a0: f64,
    b0: f64,
    lambda: f64,
    well: WellConfig,
    nonlinearity: NonlinearityConfig,
    modes_per_dim: usize,
    quadrature_panels: usize,
}

/// Parse a problem instance from the JSON config format.
pub fn params_from_json(text: &str) -> Result<ProblemParams> {
    let cfg: ConfigFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let well_box = BoxDomain::new(cfg.well.omega_min, cfg.well.omega_max)?;
    let truncation_box = BoxDomain::new(cfg.well.domain_min, cfg.well.domain_max)?;
    if well_box.dim() != cfg.n || truncation_box.dim() != cfg.n {
        return Err(Error::InvalidConfig(format!(
            "box bounds must have N = {} entries",
            cfg.n
        )));
    }
    let well = WellPotential::new(well_box, truncation_box, cfg.well.outside_value, cfg.well.b_infty)?;
    let nonlinearity = match cfg.nonlinearity.kind.as_str() {
        "power" => {
            let p = cfg.nonlinearity.p.ok_or_else(|| {
                Error::InvalidConfig("power nonlinearity requires \"p\"".into())
            })?;
            NonlinearitySpec::power(p)
        }
        "saturating" => {
            let l = cfg.nonlinearity.l_infty.ok_or_else(|| {
                Error::InvalidConfig("saturating nonlinearity requires \"l_infty\"".into())
            })?;
            NonlinearitySpec::saturating(l)
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown nonlinearity kind {other:?}"
            )))
        }
    };
    let params = ProblemParams {
        dim: cfg.n,
        a0: cfg.a0,
        b0: cfg.b0,
        lambda: cfg.lambda,
        well,
        nonlinearity,
        modes_per_dim: cfg.modes_per_dim,
        quadrature_panels: cfg.quadrature_panels,
    };
    validate(&params)?;
    Ok(params)
}
