//! Checks of the qualitative properties of computed fields: positivity,
//! monotonicity, exponential decay, the radial `L²` bound, kernel domination,
//! the fibering inequalities, the Pohozaev residual and the critical level.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::{Components, EnergyReport, Problem, SbpParams};
use crate::error::{invalid, Error, Result};
use crate::kernel::{KernelMatrix, KernelSpec};
use crate::radial::{RadialField, RadialGrid};

/// Allowed excess of the fitted slope over `−√ω/2`.
pub const DECAY_TOLERANCE: f64 = 0.05;
pub const TAIL_FRACTION: f64 = 0.25;
/// Values at or below this are treated as underflowed and excluded from fits.
pub const UNDERFLOW: f64 = 1e-250;
/// Relative slack for the fibering inequalities.
pub const LEMMA_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `ln u` about the fitted line.
    pub residual_rms: f64,
    pub first: usize,
    pub last: usize,
}

/// Least-squares fit of `ln u` against `r` on the outer `tail_fraction` of the grid.
///
/// If fewer than three nodes in that window lie above [`UNDERFLOW`], the
/// window is moved inward to end at the last such node.
pub fn decay_fit(u: &RadialField, tail_fraction: f64) -> Result<SlopeFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return invalid(format!("tail_fraction must lie in (0, 1], got {tail_fraction}"));
    }
    let r = u.grid().nodes();
    let v = u.values();
    let usable = |i: usize| v[i] > UNDERFLOW;
    let window = |r_end: f64| -> Vec<usize> {
        let r_start = (1.0 - tail_fraction) * r_end;
        (0..r.len()).filter(|&i| r[i] >= r_start && r[i] <= r_end && usable(i)).collect()
    };
    let mut idx = window(r[r.len() - 1]);
    if idx.len() < 3 {
        let Some(end) = (0..r.len()).take_while(|&i| usable(i)).last() else {
            return Err(Error::TrivialField("no positive values to fit"));
        };
        idx = window(r[end]);
        idx.retain(|&i| i <= end);
        if idx.len() < 3 {
            return Err(Error::TrivialField("decay window has fewer than three usable nodes"));
        }
    }
    let m = idx.len() as f64;
    let mean_r = idx.iter().map(|&i| r[i]).sum::<f64>() / m;
    let mean_y = idx.iter().map(|&i| v[i].ln()).sum::<f64>() / m;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &i in &idx {
        let dx = r[i] - mean_r;
        sxx += dx * dx;
        sxy += dx * (v[i].ln() - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_r;
    let ss: f64 = idx
        .iter()
        .map(|&i| (v[i].ln() - intercept - slope * r[i]).powi(2))
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual_rms: (ss / m).sqrt(),
        first: idx[0],
        last: idx[idx.len() - 1],
    })
}

pub fn decay_slope(u: &RadialField) -> Result<f64> {
    decay_fit(u, TAIL_FRACTION).map(|f| f.slope)
}

pub fn decay_bound_ok(slope: f64, omega: f64) -> bool {
    slope <= -0.5 * omega.sqrt() + DECAY_TOLERANCE
}

fn monotone_tol(v: &[f64]) -> f64 {
    1e-12 * v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `u > 0` at every node except the Dirichlet node.
pub fn is_positive(u: &RadialField) -> bool {
    let v = u.values();
    v[..v.len() - 1].iter().all(|&x| x > 0.0)
}

/// Nonincreasing up to `1e−12·max|u|` per step.
pub fn is_nonincreasing(u: &RadialField) -> bool {
    let v = u.values();
    let tol = monotone_tol(v);
    v.windows(2).all(|w| w[1] <= w[0] + tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialBound {
    /// False when `u` is not nonnegative and nonincreasing.
    pub applicable: bool,
    pub holds: bool,
    /// `min_i (bound_i − u_i)/bound_i` over nodes with `r_i > 0`.
    pub worst_margin: f64,
}

/// `u(r) ≤ r^{−3/2} (3/4π)^{1/2} ‖u‖₂` for nonnegative nonincreasing `u`.
pub fn radial_bound_check(u: &RadialField) -> RadialBound {
    let v = u.values();
    if v.iter().any(|&x| x < 0.0) || !is_nonincreasing(u) {
        return RadialBound { applicable: false, holds: false, worst_margin: f64::NAN };
    }
    let grid = u.grid();
    let l2 = grid.dot(v, v).sqrt();
    let c = (3.0 / (4.0 * std::f64::consts::PI)).sqrt() * l2;
    let mut worst = f64::INFINITY;
    for (&r, &x) in grid.nodes().iter().zip(v) {
        if r > 0.0 {
            let bound = c * r.powf(-1.5);
            worst = worst.min((bound - x) / bound);
        }
    }
    RadialBound { applicable: true, holds: worst >= 0.0, worst_margin: worst }
}

/// `f(τ) = 4τ^p − pτ⁴ + p − 4`, nonnegative for `p ∈ [4, 6]`.
pub fn lemma41_f(tau: f64, p: f64) -> f64 {
    4.0 * tau.powf(p) - p * tau.powi(4) + p - 4.0
}

/// Relative slack of `f(τ) ≥ 0`.
pub fn lemma41_slack(tau: f64, p: f64) -> f64 {
    let scale = 4.0 * tau.powf(p) + p * tau.powi(4) + p - 4.0;
    lemma41_f(tau, p) / scale.max(f64::MIN_POSITIVE)
}

/// Relative slack of
/// `J(u) ≥ J(τu) + ((1−τ⁴)/4)⟨J′(u),u⟩ + ((1−τ²)²/4)(‖∇u‖² + ω‖u‖²)`,
/// both sides rebuilt from the homogeneous components of `u`.
pub fn lemma42_slack(params: &SbpParams, c: &Components, tau: f64) -> f64 {
    let scaled = Components {
        grad_sq: tau * tau * c.grad_sq,
        mass_sq: tau * tau * c.mass_sq,
        coupling: tau.powi(4) * c.coupling,
        lp: tau.powf(params.p) * c.lp,
    };
    let base = EnergyReport::from_components(params, c, 0.0);
    let moved = EnergyReport::from_components(params, &scaled, 0.0);
    let q = c.q(params.omega);
    let a1 = (1.0 - tau.powi(4)) / 4.0 * base.nehari;
    let a2 = (1.0 - tau * tau).powi(2) / 4.0 * q;
    let slack = base.j - moved.j - a1 - a2;
    let scale = base.term_scale() + moved.term_scale() + a1.abs() + a2.abs()
        + (1.0 - tau.powi(4)).abs() / 4.0 * (q + params.mu * c.coupling + c.lp);
    slack / scale.max(f64::MIN_POSITIVE)
}

/// Log-uniform samples in `[1e−2, 1e2]`.
pub fn sample_taus(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..=2.0))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub trivial: bool,
    pub decay_slope: Option<f64>,
    pub decay_bound_ok: Option<bool>,
    pub positivity_ok: bool,
    pub monotone_ok: bool,
    pub radial_bound_ok: Option<bool>,
    pub radial_bound_margin: Option<f64>,
    pub kernel_domination_ok: bool,
    pub phi_nonneg_ok: bool,
    pub lemma41_ok: Option<bool>,
    pub lemma41_min_slack: Option<f64>,
    pub lemma42_ok: Option<bool>,
    pub lemma42_min_slack: Option<f64>,
    pub pohozaev_rel: Option<f64>,
    pub nehari_rel: Option<f64>,
    pub i_val_rel: Option<f64>,
    pub critical_level_ok: Option<bool>,
}

impl DiagnosticsReport {
    /// `(key, value)` pairs in a fixed order; absent values are `"na"`.
    pub fn flat(&self) -> Vec<(&'static str, String)> {
        fn b(x: Option<bool>) -> String {
            x.map_or("na".into(), |v| v.to_string())
        }
        fn f(x: Option<f64>) -> String {
            x.map_or("na".into(), |v| format!("{v:.16e}"))
        }
        vec![
            ("trivial", self.trivial.to_string()),
            ("decay_slope", f(self.decay_slope)),
            ("decay_bound_ok", b(self.decay_bound_ok)),
            ("positivity_ok", self.positivity_ok.to_string()),
            ("monotone_ok", self.monotone_ok.to_string()),
            ("radial_bound_ok", b(self.radial_bound_ok)),
            ("radial_bound_margin", f(self.radial_bound_margin)),
            ("kernel_domination_ok", self.kernel_domination_ok.to_string()),
            ("phi_nonneg_ok", self.phi_nonneg_ok.to_string()),
            ("lemma41_ok", b(self.lemma41_ok)),
            ("lemma41_min_slack", f(self.lemma41_min_slack)),
            ("lemma42_ok", b(self.lemma42_ok)),
            ("lemma42_min_slack", f(self.lemma42_min_slack)),
            ("pohozaev_rel", f(self.pohozaev_rel)),
            ("nehari_rel", f(self.nehari_rel)),
            ("i_val_rel", f(self.i_val_rel)),
            ("critical_level_ok", b(self.critical_level_ok)),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domination {
    /// `φ^a ≤ φ^0` at every node.
    pub pointwise_ok: bool,
    /// `∫φ^a u² ≤ ∫φ^0 u²`.
    pub coupling_ok: bool,
    pub phi_nonneg: bool,
}

impl Domination {
    pub fn ok(&self) -> bool {
        self.pointwise_ok && self.coupling_ok
    }
}

/// Compares the screened potential of `u` with the Coulomb potential of the same density.
pub fn kernel_domination(problem: &Problem, coulomb: &KernelMatrix, u: &RadialField) -> Result<Domination> {
    if coulomb.spec() != KernelSpec::coulomb() || coulomb.grid().nodes() != problem.grid().nodes() {
        return invalid("coulomb kernel must be built on the problem grid with a = 0");
    }
    let v = u.values();
    let rho: Vec<f64> = v.iter().map(|x| x * x).collect();
    let phi_a = problem.potential(u)?;
    let phi_0 = coulomb.potential(&rho);
    let grid = problem.grid();
    let tol = 1e-14;
    let pointwise_ok = phi_a
        .values()
        .iter()
        .zip(&phi_0)
        .all(|(a, c)| *a <= c * (1.0 + tol));
    let da = grid.dot(phi_a.values(), &rho);
    let d0 = grid.dot(&phi_0, &rho);
    Ok(Domination {
        pointwise_ok,
        coupling_ok: da <= d0 * (1.0 + tol),
        phi_nonneg: phi_a.values().iter().all(|&x| x >= 0.0) && phi_0.iter().all(|&x| x >= 0.0),
    })
}

/// Evaluates every check in [`DiagnosticsReport`]; `sobolev` enables the critical-level flag for `p = 6`.
pub fn invariant_suite(
    problem: &Problem,
    u: &RadialField,
    n_samples: usize,
    seed: u64,
    sobolev: Option<&SobolevReport>,
) -> Result<DiagnosticsReport> {
    let params = problem.params();
    let grid = problem.grid();
    grid.integrate(u)?;
    let trivial = u.is_zero();
    let coulomb = if params.a == 0.0 {
        Arc::clone(problem.kernel())
    } else {
        Arc::new(KernelMatrix::new(grid, KernelSpec::coulomb()))
    };
    let dom = kernel_domination(problem, &coulomb, u)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taus = sample_taus(n_samples, &mut rng);
    let applicable = params.ground_state_guaranteed() && !trivial;

    let (lemma41_ok, lemma41_min_slack) = if params.ground_state_guaranteed() && !taus.is_empty() {
        let m = taus.iter().map(|&t| lemma41_slack(t, params.p)).fold(f64::INFINITY, f64::min);
        (Some(m >= -LEMMA_SLACK), Some(m))
    } else {
        (None, None)
    };
    let (lemma42_ok, lemma42_min_slack, pohozaev_rel, nehari_rel, i_val_rel, report) = if trivial {
        (None, None, None, None, None, None)
    } else {
        let comps = problem.components(u)?;
        let report = problem.energy_report(u)?;
        let scale = report.term_scale();
        let (ok, slack) = if applicable && !taus.is_empty() {
            let m = taus
                .iter()
                .map(|&t| lemma42_slack(params, &comps, t))
                .fold(f64::INFINITY, f64::min);
            (Some(m >= -LEMMA_SLACK), Some(m))
        } else {
            (None, None)
        };
        (
            ok,
            slack,
            Some(report.pohozaev.abs() / scale),
            Some(report.nehari.abs() / scale),
            Some(report.i_val.abs() / scale),
            Some(report),
        )
    };
    let slope = if trivial { None } else { decay_slope(u).ok() };
    let rb = radial_bound_check(u);
    let critical_level_ok = match (sobolev, report) {
        (Some(s), Some(r)) => critical_level_check(params, r.j, s),
        _ => None,
    };
    Ok(DiagnosticsReport {
        trivial,
        decay_slope: slope,
        decay_bound_ok: slope.map(|s| decay_bound_ok(s, params.omega)),
        positivity_ok: !trivial && is_positive(u),
        monotone_ok: is_nonincreasing(u),
        radial_bound_ok: (rb.applicable && !trivial).then_some(rb.holds),
        radial_bound_margin: (rb.applicable && !trivial).then_some(rb.worst_margin),
        kernel_domination_ok: dom.ok(),
        phi_nonneg_ok: dom.phi_nonneg,
        lemma41_ok,
        lemma41_min_slack,
        lemma42_ok,
        lemma42_min_slack,
        pohozaev_rel,
        nehari_rel,
        i_val_rel,
        critical_level_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevReport {
    pub r_max: f64,
    pub n: usize,
    /// `‖∇U‖²`, taken as `K^{3/2}`.
    pub grad_sq: f64,
    pub l6_pow6: f64,
    /// `|grad_sq − l6_pow6| / grad_sq`
    pub mismatch: f64,
    /// `grad_sq / (l6_pow6)^{1/3}`
    pub rayleigh: f64,
    /// `grad_sq^{2/3}`
    pub k_from_grad: f64,
    /// Set when the mismatch exceeds 1%.
    pub truncation_warning: bool,
}

/// The extremal `U(r) = 3^{1/4} (1 + r²)^{−1/2}`.
pub fn sobolev_extremal(r: f64) -> f64 {
    3f64.powf(0.25) / (1.0 + r * r).sqrt()
}

/// `‖∇U‖²` and `‖U‖₆⁶` of the Sobolev extremal on a truncated grid.
pub fn sobolev_constant_report(grid: &Arc<RadialGrid>) -> Result<SobolevReport> {
    let u = RadialField::from_fn(grid, sobolev_extremal)?;
    let v = u.values();
    let grad_sq = grid.dirichlet(v, v);
    let l6_pow6: f64 = grid.weights().iter().zip(v).map(|(w, x)| w * x.powi(6)).sum();
    let mismatch = (grad_sq - l6_pow6).abs() / grad_sq;
    Ok(SobolevReport {
        r_max: grid.r_max(),
        n: grid.n(),
        grad_sq,
        l6_pow6,
        mismatch,
        rayleigh: grad_sq / l6_pow6.cbrt(),
        k_from_grad: grad_sq.powf(2.0 / 3.0),
        truncation_warning: mismatch > 1e-2,
    })
}

/// `0 < J < ‖∇U‖²/3`; `None` unless `p = 6`.
pub fn critical_level_check(params: &SbpParams, c_estimate: f64, sobolev: &SobolevReport) -> Option<bool> {
    params
        .is_critical()
        .then(|| c_estimate > 0.0 && c_estimate < sobolev.grad_sq / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::make_grid;

    #[test]
    fn slope_of_exponential() {
        let grid = make_grid(2000, 40.0, 1.0).unwrap();
        let u = RadialField::from_fn(&grid, |r| 3.0 * (-r).exp()).unwrap();
        let fit = decay_fit(&u, TAIL_FRACTION).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-8);
        assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn gaussian_tail_is_poorly_fitted() {
        let grid = make_grid(2000, 10.0, 1.0).unwrap();
        let u = RadialField::from_fn(&grid, |r| (-r * r).exp()).unwrap();
        let fit = decay_fit(&u, TAIL_FRACTION).unwrap();
        let r_mid = 0.5 * (grid.nodes()[fit.first] + grid.nodes()[fit.last]);
        assert!((fit.slope + 2.0 * r_mid).abs() < 1e-6 * r_mid);
        assert!(fit.residual_rms > 0.3);
    }

    #[test]
    fn window_shrinks_before_underflow() {
        let grid = make_grid(4000, 400.0, 1.0).unwrap();
        let u = RadialField::from_fn(&grid, |r| (-2.0 * r).exp()).unwrap();
        let fit = decay_fit(&u, TAIL_FRACTION).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-8);
        assert!(grid.nodes()[fit.last] < 300.0);
        let z = RadialField::zeros(&grid);
        assert!(decay_fit(&z, TAIL_FRACTION).is_err());
    }

    #[test]
    fn radial_bound() {
        let grid = make_grid(1000, 30.0, 2.0).unwrap();
        let u = RadialField::from_fn(&grid, |r| (-r).exp()).unwrap();
        let rb = radial_bound_check(&u);
        assert!(rb.applicable && rb.holds && rb.worst_margin > 0.0);
        let l2 = grid.norm(&u, crate::radial::NormKind::L2).unwrap();
        let bound_at_1 = (3.0 / (4.0 * std::f64::consts::PI)).sqrt() * l2;
        assert!(bound_at_1 > (-1.0f64).exp());
        let bump = RadialField::from_fn(&grid, |r| 0.5 * (1.0 - ((r - 3.0) * 4.0).tanh())).unwrap();
        assert!(radial_bound_check(&bump).holds);
        let wiggle = RadialField::from_fn(&grid, |r| (-r).exp() * (2.0 + (3.0 * r).sin())).unwrap();
        assert!(!radial_bound_check(&wiggle).applicable);
    }

    #[test]
    fn lemma41_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in [4.0, 4.5, 5.0, 6.0] {
            assert_eq!(lemma41_f(1.0, p), 0.0);
            for t in sample_taus(1000, &mut rng) {
                assert!(lemma41_slack(t, p) >= -LEMMA_SLACK, "p={p} tau={t}");
            }
        }
        assert!(lemma41_f(0.5, 3.0) < 0.0);
    }

    #[test]
    fn suite_on_zero_field() {
        let grid = make_grid(200, 20.0, 2.0).unwrap();
        let pb = Problem::new(SbpParams::new(1.0, 1.0, 1.0, 4.0).unwrap(), &grid).unwrap();
        let rep = invariant_suite(&pb, &RadialField::zeros(&grid), 50, 0, None).unwrap();
        assert!(rep.trivial);
        assert!(rep.kernel_domination_ok && rep.phi_nonneg_ok);
        assert_eq!(rep.lemma42_ok, None);
        assert_eq!(rep.pohozaev_rel, None);
        assert_eq!(rep.critical_level_ok, None);
    }

    #[test]
    fn suite_on_gaussian() {
        let grid = make_grid(300, 20.0, 2.0).unwrap();
        let pb = Problem::new(SbpParams::new(1.0, 1.0, 0.7, 5.0).unwrap(), &grid).unwrap();
        let u = RadialField::dirichlet_from_fn(&grid, |r| 2.0 * (-r * r / 3.0).exp()).unwrap();
        let rep = invariant_suite(&pb, &u, 1000, 3, None).unwrap();
        assert_eq!(rep.lemma41_ok, Some(true));
        assert_eq!(rep.lemma42_ok, Some(true));
        assert!(rep.kernel_domination_ok && rep.phi_nonneg_ok);
        assert!(rep.positivity_ok && rep.monotone_ok);
        assert_eq!(rep, invariant_suite(&pb, &u, 1000, 3, None).unwrap());
        let pb3 = Problem::new(SbpParams::new(1.0, 1.0, 0.7, 3.0).unwrap(), &grid).unwrap();
        let rep3 = invariant_suite(&pb3, &u, 10, 3, None).unwrap();
        assert_eq!(rep3.lemma41_ok, None);
        assert_eq!(rep3.lemma42_ok, None);
    }

    #[test]
    fn sobolev_identity_improves_with_radius() {
        let small = sobolev_constant_report(&make_grid(2048, 50.0, 2.0).unwrap()).unwrap();
        let large = sobolev_constant_report(&make_grid(4096, 100.0, 2.0).unwrap()).unwrap();
        assert!(large.mismatch < 0.6 * small.mismatch);
        assert!((small.grad_sq - large.grad_sq).abs() < 0.02 * large.grad_sq);
    }

    #[test]
    fn critical_gate() {
        let s = SobolevReport {
            r_max: 1.0,
            n: 16,
            grad_sq: 30.0,
            l6_pow6: 30.0,
            mismatch: 0.0,
            rayleigh: 0.0,
            k_from_grad: 0.0,
            truncation_warning: false,
        };
        let p6 = SbpParams::new(1.0, 1.0, 1.0, 6.0).unwrap();
        assert_eq!(critical_level_check(&p6, 5.0, &s), Some(true));
        assert_eq!(critical_level_check(&p6, 11.0, &s), Some(false));
        assert_eq!(critical_level_check(&p6, -1.0, &s), Some(false));
        let p4 = SbpParams::new(1.0, 1.0, 1.0, 4.0).unwrap();
        assert_eq!(critical_level_check(&p4, 5.0, &s), None);
    }
}
