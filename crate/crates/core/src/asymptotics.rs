//! The `a → 0` limit: solve the Coulomb-kernel problem once, then continue in
//! `a` from the largest value down and measure the distance to the limit.

use std::sync::Arc;

use serde::Serialize;

use crate::energy::{Problem, SbpParams};
use crate::error::{invalid, Result};
use crate::radial::{NormKind, RadialField, RadialGrid};
use crate::solver::{solve_ground_state, SolveOptions, SolveResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub a: f64,
    #[serde(rename = "J")]
    pub j: f64,
    /// `‖u^a − u^0‖_{H1(ω)}`
    pub u_diff_h1: f64,
    /// `‖∇(φ^a − φ^0)‖₂`
    pub phi_grad_diff: f64,
    /// `a‖Δφ^a‖₂`
    pub a_lap_phi: f64,
    pub converged: bool,
    /// Set when `u_diff_h1` or `a_lap_phi` did not decrease from the previous row.
    pub non_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub reference_j: f64,
    pub reference_h1: f64,
    pub reference_converged: bool,
    pub rows: Vec<SweepRow>,
    /// `u^0` followed by `u^a` for each row.
    #[serde(skip)]
    pub fields: Vec<RadialField>,
}

impl SweepReport {
    /// Every solve converged and every column decreased.
    pub fn clean(&self) -> bool {
        self.reference_converged && self.rows.iter().all(|r| r.converged && !r.non_monotone)
    }
}

/// `{1, 1/2, …, 1/16}`
pub fn dyadic_a_list() -> Vec<f64> {
    (0..5).map(|k| 0.5f64.powi(k)).collect()
}

pub fn sweep_a(base: &SbpParams, a_list: &[f64], grid: &Arc<RadialGrid>, opts: &SolveOptions) -> Result<SweepReport> {
    if a_list.is_empty() {
        return invalid("a_list is empty");
    }
    if a_list.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return invalid("a_list entries must be > 0");
    }
    if a_list.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("a_list must be strictly decreasing");
    }
    let omega = base.omega;
    let reference = Problem::new(base.with_a(0.0)?, grid)?;
    let limit = solve_ground_state(&reference, opts, None)?;
    let reference_h1 = grid.norm(&limit.u, NormKind::H1(omega))?;

    let mut rows: Vec<SweepRow> = Vec::with_capacity(a_list.len());
    let mut fields = vec![limit.u.clone()];
    let mut warm: Option<SolveResult> = None;
    for &a in a_list {
        let problem = Problem::new(base.with_a(a)?, grid)?;
        let res = solve_ground_state(&problem, opts, warm.as_ref().map(|w| &w.u))?;
        let du = res.u.add_scaled(-1.0, &limit.u)?;
        let dphi = res.phi.add_scaled(-1.0, &limit.phi)?;
        let lap = grid.radial_laplacian(&res.phi)?;
        let mut row = SweepRow {
            a,
            j: res.report.j,
            u_diff_h1: grid.norm(&du, NormKind::H1(omega))?,
            phi_grad_diff: grid.norm(&dphi, NormKind::Dgrad)?,
            a_lap_phi: a * grid.norm(&lap, NormKind::L2)?,
            converged: res.converged,
            non_monotone: false,
        };
        if let Some(prev) = rows.last() {
            row.non_monotone = row.u_diff_h1 >= prev.u_diff_h1 || row.a_lap_phi >= prev.a_lap_phi;
        }
        rows.push(row);
        fields.push(res.u.clone());
        warm = Some(res);
    }
    Ok(SweepReport {
        reference_j: limit.report.j,
        reference_h1,
        reference_converged: limit.converged,
        rows,
        fields,
    })
}

/// `‖f − g‖` in the given norm; a convenience for comparing solves on one grid.
pub fn distance(f: &RadialField, g: &RadialField, kind: NormKind) -> Result<f64> {
    f.grid().norm(&f.add_scaled(-1.0, g)?, kind)
}
