//! Deterministic CSV and JSON formatting for the command-line artifacts.

use serde::Serialize;

use crate::constants::{self, SpectralSetup};
use crate::error::Result;
use crate::forms::QuadraticForms;
use crate::model::ProblemParams;
use crate::spectrum::ConvergenceTable;
use crate::sweep::SweepReport;

/// Shortest round-trip representation; identical runs give identical bytes.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

pub fn csv_table(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// name, value, formula_branch rows for the constants command.
pub fn constants_table(params: &ProblemParams, count: usize) -> Result<Vec<Vec<String>>> {
    let setup = SpectralSetup::new(&params.well.well_box, count);
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut push = |name: String, value: f64, branch: &str| {
        rows.push(vec![name, format_float(value), branch.to_string()]);
    };
    for (i, mu) in setup.mu.iter().enumerate() {
        push(format!("mu_{}", i + 1), *mu, "dirichlet box spectrum");
    }
    for (j, mu) in setup.mu_bar.iter().enumerate() {
        push(format!("mu_bar_{}", j + 1), *mu, "distinct values");
        push(
            format!("dim_level_{}", j + 1),
            setup.multiplicities[j] as f64,
            "distinct values",
        );
    }
    let indefinite = params.a0.min(params.b0) < 0.0;
    if indefinite {
        for j in 1..=setup.distinct_count() {
            push(
                format!("beta0_{j}"),
                constants::beta0(j, params.a0, params.b0, &setup)?,
                "min(a0,b0)<0",
            );
        }
        let k0 = constants::k0_star(params.a0, params.b0, &setup)?;
        push("k0_star".into(), k0.k0 as f64, "min(a0,b0)<0");
        push(
            "linking_admissible".into(),
            if k0.linking_admissible { 1.0 } else { 0.0 },
            "min(a0,b0)<0",
        );
        for j in 1..=setup.distinct_count() {
            push(
                format!("Lambda_{j}"),
                constants::lambda_threshold(j, params.a0, params.b0, params.well.b_infty, 1.0, &setup)?,
                "min(a0,b0)<0",
            );
        }
        push(
            "d_star".into(),
            constants::d_star(params.a0, params.b0, &setup)?,
            "min(a0,b0)<0",
        );
    }
    for (i, sigma) in constants::limit_spectrum(params.a0, params.b0, &setup, count)
        .iter()
        .enumerate()
    {
        push(
            format!("limit_spectrum_{}", i + 1),
            *sigma,
            "well-bottom operator",
        );
    }
    if params.dim >= 3 {
        let emb = constants::embedding_constants(params)?;
        let branch = if params.a0 > 0.0 { "a0>0" } else { "a0<=0" };
        push("S".into(), emb.s, "N>=3 sharp constant");
        push("B0".into(), emb.b0_gn, "integration by parts");
        push("A_infty".into(), emb.a_infty, "N>=3");
        push("C_lambda".into(), emb.c_lambda, branch);
        push("d0".into(), emb.d0, branch);
    }
    Ok(rows)
}

pub fn spectrum_csv(table: &ConvergenceTable) -> String {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                format_float(r.lambda),
                r.k.to_string(),
                format_float(r.beta),
                format_float(r.beta0),
                format_float(r.rel_err),
                format_float(r.outside_mass),
                format_float(r.residual),
            ]
        })
        .collect();
    csv_table(
        "lambda,k,beta_k,beta_k_0,rel_err,outside_mass,residual",
        &rows,
    )
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                format_float(r.lambda),
                format_float(r.energy),
                format_float(r.norm_lambda),
                format_float(r.outside_mass),
                format_float(r.well_penalty),
                format_float(r.l2_distance),
                format_float(r.h2_distance),
                r.status.clone(),
            ]
        })
        .collect();
    csv_table(
        "lambda,energy,norm_lambda,outside_mass,well_penalty,l2_distance,h2_distance,status",
        &rows,
    )
}

pub fn solution_csv(coeffs: &nalgebra::DVector<f64>) -> String {
    let rows: Vec<Vec<String>> = (0..coeffs.len())
        .map(|k| vec![(k + 1).to_string(), format_float(coeffs[k])])
        .collect();
    csv_table("mode,coefficient", &rows)
}

/// Sparse (row, col, value) dump of the assembled matrices.
pub fn forms_csv(forms: &QuadraticForms, which: &str) -> String {
    let m = match which {
        "A" => forms.a.clone(),
        "Gm" => forms.gm.clone(),
        "P_plus" => forms.p_plus(),
        "P_minus" => forms.p_minus(),
        "K" => forms.k_matrix(),
        "G" => forms.g_matrix(),
        _ => forms.d_matrix(),
    };
    let mut rows = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != 0.0 {
                rows.push(vec![
                    i.to_string(),
                    j.to_string(),
                    format_float(m[(i, j)]),
                ]);
            }
        }
    }
    csv_table("row,col,value", &rows)
}

#[derive(Debug, Serialize)]
pub struct GeometryReport {
    pub rho: f64,
    pub kappa: f64,
    pub radius: f64,
    pub negative_dim: usize,
    pub boundary_max_energy: f64,
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub energy: f64,
    pub grad_norm: f64,
    pub relative_residual: f64,
    pub norm: f64,
    pub iterations: usize,
    pub trace_len: usize,
    pub trace_max_norm: f64,
    pub trace_final_scaled_grad: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryReport>,
}

impl SolveReport {
    pub fn from_point(
        point: &crate::solver::CriticalPoint,
        geometry: Option<&crate::solver::LinkingGeometry>,
    ) -> Self {
        Self {
            energy: point.energy,
            grad_norm: point.grad_norm,
            relative_residual: point.relative_residual(),
            norm: point.norm_a,
            iterations: point.iterations,
            trace_len: point.cerami_trace.len(),
            trace_max_norm: point
                .cerami_trace
                .iter()
                .map(|s| s.norm)
                .fold(0.0, f64::max),
            trace_final_scaled_grad: point
                .cerami_trace
                .last()
                .map(|s| s.scaled_grad)
                .unwrap_or(0.0),
            geometry: geometry.map(|g| GeometryReport {
                rho: g.rho,
                kappa: g.kappa,
                radius: g.radius,
                negative_dim: g.negative_dim,
                boundary_max_energy: g.boundary_max_energy,
            }),
        }
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable report")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDomain;
    use crate::model::{NonlinearitySpec, WellPotential};

    #[test]
    fn constants_table_has_expected_entries() {
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
            modes_per_dim: 8,
            quadrature_panels: 16,
        };
        let rows = constants_table(&params, 4).unwrap();
        let find = |name: &str| -> f64 {
            rows.iter()
                .find(|r| r[0] == name)
                .unwrap_or_else(|| panic!("missing row {name}"))[1]
                .parse()
                .unwrap()
        };
        assert!((find("beta0_1") - 0.658).abs() < 1e-3);
        assert_eq!(find("k0_star"), 2.0);
        assert_eq!(find("linking_admissible"), 1.0);
        assert!(find("d_star") > 39.0);
    }

    #[test]
    fn csv_is_deterministic() {
        let rows = vec![vec!["1".to_string(), format_float(0.1 + 0.2)]];
        let a = csv_table("x,y", &rows);
        let b = csv_table("x,y", &rows);
        assert_eq!(a, b);
        assert!(a.contains("0.30000000000000004"));
    }
}
