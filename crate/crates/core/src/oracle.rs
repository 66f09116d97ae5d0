//! Brute-force reference computations, written independently of the reduced
//! kernel formulas: angular quadrature of the 3D kernel, a 2D quadrature of
//! the potential, Monte-Carlo estimates of the screened self-interaction, and
//! central finite differences of the energy.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Serialize;

use crate::energy::Problem;
use crate::error::{invalid, Result};
use crate::radial::RadialField;

pub const DEFAULT_N_THETA: usize = 20001;
const PANEL_ORDER: usize = 16;

/// Gauss-Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p0 = 1.0;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre over consecutive breakpoints.
fn composite(f: impl Fn(f64) -> f64, breaks: &[f64], rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (x, w) = rule;
    let mut total = 0.0;
    for seg in breaks.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        if hi <= lo {
            continue;
        }
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * f(mid + half * xi);
        }
        total += half * s;
    }
    total
}

/// Uniform panels on `[lo, hi]` plus geometric refinement towards both ends.
fn graded_breaks(lo: f64, hi: f64, panels: usize, levels: usize) -> Vec<f64> {
    let h = (hi - lo) / panels as f64;
    let mut b: Vec<f64> = (0..levels).rev().map(|k| lo + h * 0.5f64.powi(k as i32 + 1)).collect();
    b.insert(0, lo);
    b.extend((1..panels).map(|k| lo + h * k as f64));
    b.extend((0..levels).map(|k| hi - h * 0.5f64.powi(k as i32 + 1)));
    b.push(hi);
    b
}

/// The screened kernel `(1 − e^{−d/a})/d`, or `1/d` when `a = 0`.
fn screened(d: f64, a: f64) -> f64 {
    if a == 0.0 {
        1.0 / d
    } else if d == 0.0 {
        1.0 / a
    } else {
        -(-d / a).exp_m1() / d
    }
}

fn check_pair(r: f64, s: f64, a: f64, n_theta: usize) -> Result<()> {
    if !(r >= 0.0 && s >= 0.0 && r.is_finite() && s.is_finite()) {
        return invalid(format!("radii must be finite and >= 0, got ({r}, {s})"));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return invalid(format!("a must be >= 0, got {a}"));
    }
    if a == 0.0 && r == 0.0 && s == 0.0 {
        return invalid("r = s = 0 is singular for the Coulomb kernel");
    }
    if n_theta < PANEL_ORDER {
        return invalid(format!("n_theta must be >= {PANEL_ORDER}"));
    }
    Ok(())
}

/// `½ ∫₀^π f(d(θ)) sin θ dθ` with `d(θ)² = (r−s)² + 4rs sin²(θ/2)`.
fn angular_average(r: f64, s: f64, n_theta: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(PANEL_ORDER);
    let panels = (n_theta / PANEL_ORDER).max(1);
    // the integrand is singular at θ = 0 only for r = s with a Coulomb-like kernel
    let breaks = graded_breaks(0.0, PI, panels, 40);
    let diff = r - s;
    let g = |t: f64| {
        let half = (0.5 * t).sin();
        let d = (diff * diff + 4.0 * r * s * half * half).sqrt();
        f(d) * t.sin()
    };
    0.5 * composite(g, &breaks, &rule)
}

/// Angular average of the screened kernel over the sphere of radius `s` seen from radius `r`.
pub fn angular_oracle_g(r: f64, s: f64, a: f64, n_theta: usize) -> Result<f64> {
    check_pair(r, s, a, n_theta)?;
    if r == 0.0 || s == 0.0 {
        return Ok(screened(r.max(s), a));
    }
    Ok(angular_average(r, s, n_theta, |d| screened(d, a)))
}

/// Angular average of `e^{−d/a}`.
pub fn angular_oracle_h(r: f64, s: f64, a: f64, n_theta: usize) -> Result<f64> {
    check_pair(r, s, a, n_theta)?;
    if a == 0.0 {
        return invalid("the exponential kernel needs a > 0");
    }
    if r == 0.0 || s == 0.0 {
        return Ok((-r.max(s) / a).exp());
    }
    Ok(angular_average(r, s, n_theta, |d| (-d / a).exp()))
}

/// `φ(r) = 2π ∫₀^{s_max} s² ρ(s) ∫₀^π 𝒦(d) sin θ dθ ds` by nested quadrature.
pub fn potential_oracle(
    r: f64,
    rho: impl Fn(f64) -> f64,
    s_max: f64,
    a: f64,
    n_theta: usize,
    n_s_panels: usize,
) -> Result<f64> {
    if s_max.is_nan() || s_max <= 0.0 || n_s_panels == 0 {
        return invalid("need s_max > 0 and at least one radial panel");
    }
    check_pair(r, 1.0, a, n_theta)?;
    let rule = gauss_legendre(PANEL_ORDER);
    let mut breaks: Vec<f64> = (0..=n_s_panels).map(|k| s_max * k as f64 / n_s_panels as f64).collect();
    if r > 0.0 && r < s_max {
        breaks.push(r);
        // the inner average has a kink at s = r
        for k in 1..=30 {
            let h = r * 0.5f64.powi(k);
            breaks.push(r - h);
            if r + h < s_max {
                breaks.push(r + h);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
    }
    let inner = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        let avg = if r == 0.0 {
            screened(s, a)
        } else {
            angular_average(r, s, n_theta, |d| screened(d, a))
        };
        4.0 * PI * s * s * rho(s) * avg
    };
    Ok(composite(inner, &breaks, &rule))
}

/// Radial density `ρ(x) = Σ_k A_k e^{−|x|²/σ_k²}` with `A_k, σ_k > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianMixture {
    pub components: Vec<(f64, f64)>,
}

impl GaussianMixture {
    pub fn new(components: Vec<(f64, f64)>) -> Result<Self> {
        if components.iter().any(|&(amp, sigma)| !(amp >= 0.0 && sigma > 0.0 && amp.is_finite() && sigma.is_finite())) {
            return invalid("mixture needs amplitudes >= 0 and widths > 0");
        }
        Ok(GaussianMixture { components })
    }

    pub fn density(&self, r: f64) -> f64 {
        self.components.iter().map(|&(amp, sigma)| amp * (-(r / sigma).powi(2)).exp()).sum()
    }

    /// `∫ρ dx`
    pub fn mass(&self) -> f64 {
        self.components
            .iter()
            .map(|&(amp, sigma)| amp * PI.powf(1.5) * sigma.powi(3))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n_samples: usize,
}

/// Monte-Carlo estimate of `∬ e^{−|x−y|/a} ρ(x) ρ(y) dx dy`.
///
/// `x` is drawn from `ρ/∫ρ` and `y = x + a z` with `z` drawn from `e^{−|z|}/(8π)`,
/// so each sample contributes `8π a³ (∫ρ) ρ(y)`.
pub fn mc_double_integral(rho: &GaussianMixture, a: f64, n_samples: usize, seed: u64) -> Result<McEstimate> {
    if !(a > 0.0 && a.is_finite()) {
        return invalid(format!("a must be > 0, got {a}"));
    }
    if n_samples < 2 {
        return invalid("need at least two samples");
    }
    let mass = rho.mass();
    if mass == 0.0 {
        return Ok(McEstimate { value: 0.0, std_err: 0.0, n_samples });
    }
    let weights: Vec<f64> = rho
        .components
        .iter()
        .map(|&(amp, sigma)| amp * sigma.powi(3) * PI.powf(1.5) / mass)
        .collect();
    let radial = Gamma::new(3.0, 1.0).expect("valid shape");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        let mut pick: f64 = rng.random();
        let mut k = 0;
        while k + 1 < weights.len() && pick >= weights[k] {
            pick -= weights[k];
            k += 1;
        }
        let sd = rho.components[k].1 / 2f64.sqrt();
        let x: [f64; 3] = std::array::from_fn(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        });
        let dir: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let len = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        let t: f64 = radial.sample(&mut rng);
        let step = a * t / len;
        let y2: f64 = (0..3).map(|i| (x[i] + step * dir[i]).powi(2)).sum();
        let v = rho.density(y2.sqrt());
        sum += v;
        sum_sq += v * v;
    }
    let nf = n_samples as f64;
    let mean = sum / nf;
    let var = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    let c = 8.0 * PI * a.powi(3) * mass;
    Ok(McEstimate {
        value: c * mean,
        std_err: c * (var / nf).sqrt(),
        n_samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdCheck {
    /// `(ε, relative error)` per step.
    pub errors: Vec<(f64, f64)>,
    pub max_rel_err: f64,
    pub exact: f64,
    /// Set when `v` is below the norm threshold and nothing was compared.
    pub skipped: bool,
}

/// Central differences of `J` along `v` against `⟨J′(u), v⟩`.
///
/// Errors are relative to the sum of the magnitudes of the directional
/// derivative's four terms.
pub fn fd_gradient_check(problem: &Problem, u: &RadialField, v: &RadialField, eps_list: &[f64]) -> Result<FdCheck> {
    let grid = problem.grid();
    let vv = v.values();
    let v_norm = grid.dot(vv, vv).sqrt();
    let u_norm = grid.dot(u.values(), u.values()).sqrt();
    if v_norm <= 1e-12 * u_norm.max(1.0) {
        return Ok(FdCheck { errors: vec![], max_rel_err: 0.0, exact: 0.0, skipped: true });
    }
    let exact = problem.derivative_pairing(u, v)?;
    let scale = directional_scale(problem, u, v)?;
    let mut errors = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if eps.is_nan() || eps <= 0.0 {
            return invalid(format!("eps must be > 0, got {eps}"));
        }
        let jp = problem.energy(&u.add_scaled(eps, v)?)?;
        let jm = problem.energy(&u.add_scaled(-eps, v)?)?;
        let fd = (jp - jm) / (2.0 * eps);
        errors.push((eps, (fd - exact).abs() / scale));
    }
    let max_rel_err = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(FdCheck { errors, max_rel_err, exact, skipped: false })
}

fn directional_scale(problem: &Problem, u: &RadialField, v: &RadialField) -> Result<f64> {
    let grid = problem.grid();
    let params = problem.params();
    let (uu, vv) = (u.values(), v.values());
    let phi = problem.potential(u)?;
    let mut mass = 0.0;
    let mut coupling = 0.0;
    let mut power = 0.0;
    for i in 0..grid.n() {
        let w = grid.weights()[i];
        mass += w * (uu[i] * vv[i]).abs();
        coupling += w * (phi.values()[i] * uu[i] * vv[i]).abs();
        power += w * (uu[i].abs().powf(params.p - 1.0) * vv[i]).abs();
    }
    let grad = (grid.dirichlet(uu, uu) * grid.dirichlet(vv, vv)).sqrt();
    Ok((grad + params.omega * mass + params.mu * coupling + power).max(f64::MIN_POSITIVE))
}
