use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ManufacturedCase;
use crate::assembly::{hessian_error, stab_seminorm};
use crate::basis::SmoothFunction;
use crate::error::{Error, Result};
use crate::localops::{Discretization, HybridField};

/// Error quantities of one discrete solution against the exact one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMeasures {
    pub h_max: f64,
    /// `‖D²_pw(u − u_M)‖`.
    pub energy: f64,
    /// `|u_h|_s` (for DG without the penalty factor).
    pub stab: f64,
    /// `min_{φ ∈ P_k(M)} ‖D²_pw(u − φ)‖`, attained by `G_h u`.
    pub best: f64,
    /// `‖h_M² (f − Π_M^k f)‖`.
    pub osc: f64,
    pub l2: f64,
    /// `‖∇_pw(u − u_M)‖`.
    pub h1: f64,
    /// `(energy + stab) / (best + osc)`.
    pub quasi_optimality: f64,
    /// `stab / (best + osc)`.
    pub stab_efficiency: f64,
}

pub fn compute_errors(
    disc: &Discretization<'_, f64>,
    u_h: &HybridField<f64>,
    case: &ManufacturedCase,
) -> Result<ErrorMeasures> {
    u_h.check(disc)?;
    let mesh = disc.mesh();
    let energy = hessian_error(disc, case, &u_h.cells);
    let best_cells = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| disc.galerkin_projection(c, case))
        .collect::<Result<Vec<_>>>()?;
    let best = hessian_error(disc, case, &best_cells);
    let stab = stab_seminorm(disc, u_h)?;
    let (osc2, l22, h12) = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let data = disc.cell_data(c);
            let b = &data.basis;
            let fk = b.project(&data.fine_rule, disc.n_cell(), |x| case.load(x));
            let u = &u_h.cells[c];
            let h = mesh.cell(c).diameter;
            let (mut o, mut l, mut g) = (0.0, 0.0, 0.0);
            for (&x, &w) in data.fine_rule.points.iter().zip(&data.fine_rule.weights) {
                let df = case.load(x) - b.eval_combination(&fk, x, 0, 0);
                o += w * df * df;
                let dv = case.value(x) - b.eval_combination(u, x, 0, 0);
                l += w * dv * dv;
                let gr = case.gradient(x);
                let (gx, gy) = (
                    gr[0] - b.eval_combination(u, x, 1, 0),
                    gr[1] - b.eval_combination(u, x, 0, 1),
                );
                g += w * (gx * gx + gy * gy);
            }
            (h.powi(4) * o, l, g)
        })
        .reduce(|| (0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let osc = osc2.sqrt();
    let denom = best + osc;
    Ok(ErrorMeasures {
        h_max: mesh.h_max(),
        energy,
        stab,
        best,
        osc,
        l2: l22.sqrt(),
        h1: h12.sqrt(),
        quasi_optimality: (energy + stab) / denom,
        stab_efficiency: stab / denom,
    })
}

/// `log(e_c / e_f) / log(h_c / h_f)` for consecutive pairs.
pub fn compute_eoc(errors: &[f64], meshsizes: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != meshsizes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} errors but {} mesh sizes",
            errors.len(),
            meshsizes.len()
        )));
    }
    if errors.len() < 2 {
        return Err(Error::InvalidArgument(
            "at least two levels are needed for a rate".into(),
        ));
    }
    if let Some(v) = errors
        .iter()
        .chain(meshsizes)
        .find(|v| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidArgument(format!(
            "rates need positive finite inputs, got {v}"
        )));
    }
    errors
        .windows(2)
        .zip(meshsizes.windows(2))
        .map(|(e, h)| {
            if h[0] == h[1] {
                Err(Error::InvalidArgument(
                    "consecutive mesh sizes are equal".into(),
                ))
            } else {
                Ok((e[0] / e[1]).ln() / (h[0] / h[1]).ln())
            }
        })
        .collect()
}
