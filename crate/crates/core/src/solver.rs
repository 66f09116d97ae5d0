//! Ground states by projected Sobolev-gradient descent on the Nehari manifold.
//!
//! Each step moves against the `H1(ω)` Riesz representative of `J′`, clamps to
//! the nonnegative cone, and rescales onto `𝒩 = {u ≠ 0 : ⟨J′(u), u⟩ = 0}` by the
//! fibering maximizer `τ*`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics::decay_slope;
use crate::energy::{Components, EnergyReport, Problem};
use crate::error::{invalid, Error, Result};
use crate::radial::{RadialField, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub step0: f64,
    pub backtrack: f64,
    pub seed: u64,
    /// Clamp iterates to the nonnegative cone after each step.
    pub clamp_nonnegative: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 20_000,
            step0: 1.0,
            backtrack: 0.5,
            seed: 0,
            clamp_nonnegative: true,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return invalid(format!("tol must be > 0, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return invalid("max_iter must be >= 1");
        }
        if !(self.step0.is_finite() && self.step0 > 0.0) {
            return invalid(format!("step0 must be > 0, got {}", self.step0));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return invalid(format!("backtrack must lie in (0, 1), got {}", self.backtrack));
        }
        Ok(())
    }
}

/// The fibering map `g(τ) = J(τu) = (τ²/2)Q − (τ⁴/4)B − (τ^p/p)C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fibering {
    pub q: f64,
    pub b: f64,
    pub c: f64,
    pub p: f64,
}

impl Fibering {
    pub fn from_components(problem: &Problem, comps: &Components) -> Self {
        let params = problem.params();
        Fibering {
            q: comps.q(params.omega),
            b: params.mu * comps.coupling,
            c: comps.lp,
            p: params.p,
        }
    }

    pub fn value(&self, tau: f64) -> f64 {
        0.5 * tau * tau * self.q - 0.25 * tau.powi(4) * self.b - tau.powf(self.p) / self.p * self.c
    }

    /// `g′(τ) = τ h(τ)`.
    pub fn derivative(&self, tau: f64) -> f64 {
        tau * self.h(tau)
    }

    /// `h(τ) = Q − Bτ² − Cτ^{p−2}`, strictly decreasing on `(0, ∞)`.
    pub fn h(&self, tau: f64) -> f64 {
        self.q - self.b * tau * tau - self.c * tau.powf(self.p - 2.0)
    }

    fn dh(&self, tau: f64) -> f64 {
        -2.0 * self.b * tau - (self.p - 2.0) * self.c * tau.powf(self.p - 3.0)
    }

    /// Unique positive zero of `h`.
    pub fn tau_star(&self) -> Result<f64> {
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::TrivialField("fibering map of the zero field has no maximizer"));
        }
        if self.c.max(self.b).is_nan() || self.c.max(self.b) <= 0.0 {
            return Err(Error::TrivialField("fibering map is unbounded"));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut guard = 0;
        while self.h(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 2100 {
                return Err(Error::Internal("tau bracket overflow".into()));
            }
        }
        if lo == 0.0 {
            let mut t = hi;
            while self.h(t) <= 0.0 {
                hi = t;
                t *= 0.5;
                guard += 1;
                if guard > 2100 {
                    return Err(Error::Internal("tau bracket underflow".into()));
                }
            }
            lo = t;
        }
        let mut tau = 0.5 * (lo + hi);
        for _ in 0..200 {
            let hv = self.h(tau);
            if hv == 0.0 {
                return Ok(tau);
            }
            if hv > 0.0 {
                lo = tau;
            } else {
                hi = tau;
            }
            if hi - lo <= 2.0 * f64::EPSILON * hi {
                break;
            }
            let newton = tau - hv / self.dh(tau);
            tau = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (tau - lo).min(hi - tau) <= f64::EPSILON * tau {
                // Newton has landed on a bracket end; finish with one bisection
                tau = 0.5 * (lo + hi);
            }
        }
        Ok(tau)
    }
}

pub fn fibering_g(problem: &Problem, u: &RadialField, tau: f64) -> Result<f64> {
    let comps = problem.components(u)?;
    Ok(Fibering::from_components(problem, &comps).value(tau))
}

pub fn tau_star(problem: &Problem, u: &RadialField) -> Result<f64> {
    let comps = problem.components(u)?;
    Fibering::from_components(problem, &comps).tau_star()
}

pub fn project_nehari(problem: &Problem, u: &RadialField) -> Result<RadialField> {
    Ok(u.scaled(tau_star(problem, u)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub u: RadialField,
    #[serde(skip)]
    pub phi: RadialField,
    pub report: EnergyReport,
    pub converged: bool,
    pub iterations: usize,
    pub c_estimate: f64,
    pub decay_slope: Option<f64>,
    /// `‖∇_S J(u)‖_{H1} / ‖u‖_{H1}` at the returned iterate.
    pub grad_rel: f64,
    pub ground_state_guarantee: bool,
    pub critical: bool,
    pub energy_history: Vec<f64>,
    pub grad_history: Vec<f64>,
    pub tau_history: Vec<f64>,
}

/// An iterate on the Nehari manifold with everything the descent needs.
struct State {
    u: Vec<f64>,
    phi: Vec<f64>,
    comps: Components,
    j: f64,
    grad: Vec<f64>,
    grad_norm: f64,
    u_norm: f64,
}

impl State {
    fn rel(&self) -> f64 {
        self.grad_norm / self.u_norm
    }
}

/// Scale `t` onto the manifold; `phi` is the potential of `t` and scales by `τ²`.
fn project(problem: &Problem, mut t: Vec<f64>, mut phi: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let comps = problem.components_with(&t, &phi);
    let tau = Fibering::from_components(problem, &comps).tau_star()?;
    t.iter_mut().for_each(|v| *v *= tau);
    phi.iter_mut().for_each(|v| *v *= tau * tau);
    Ok((t, phi, tau))
}

fn h1(grid: &RadialGrid, omega: f64, f: &[f64]) -> f64 {
    (grid.dirichlet(f, f) + omega * grid.dot(f, f)).max(0.0).sqrt()
}

fn finish_state(problem: &Problem, u: Vec<f64>, phi: Vec<f64>) -> Result<State> {
    let grid = problem.grid();
    let omega = problem.params().omega;
    let comps = problem.components_with(&u, &phi);
    let j = EnergyReport::from_components(problem.params(), &comps, 0.0).j;
    let residual = problem.residual_with(&u, &phi);
    let grad = grid.sobolev_solve_slice(omega, &residual)?;
    let grad_norm = h1(grid, omega, &grad);
    let u_norm = h1(grid, omega, &u);
    Ok(State { u, phi, comps, j, grad, grad_norm, u_norm })
}

fn default_init(grid: &Arc<RadialGrid>) -> RadialField {
    RadialField::dirichlet_from_fn(grid, |r| (-r * r).exp()).expect("finite")
}

/// Minimize `J` over the Nehari manifold starting from `init` (default `e^{−r²}`).
pub fn solve_ground_state(problem: &Problem, opts: &SolveOptions, init: Option<&RadialField>) -> Result<SolveResult> {
    opts.validate()?;
    let grid = problem.grid();
    let n = grid.n();
    let init = match init {
        Some(f) => {
            grid.integrate(f)?;
            f.clone()
        }
        None => default_init(grid),
    };
    let clamp = |v: f64| if opts.clamp_nonnegative { v.max(0.0) } else { v };
    let mut start: Vec<f64> = init.values().iter().map(|&v| clamp(v)).collect();
    start[n - 1] = 0.0;
    if start.iter().all(|&v| v == 0.0) {
        return Err(Error::TrivialField("initial guess vanishes after clamping"));
    }
    let phi0 = problem.potential_of(&start);
    let (u0, phi0, tau0) = project(problem, start, phi0)?;
    let mut state = finish_state(problem, u0, phi0)?;

    let mut energy_history = vec![state.j];
    let mut grad_history = vec![state.rel()];
    let mut tau_history = vec![tau0];
    let omega = problem.params().omega;
    let is_converged = |s: &State| {
        let nehari = s.comps.q(omega) - problem.params().mu * s.comps.coupling - s.comps.lp;
        s.rel() <= opts.tol && nehari.abs() <= opts.tol * s.comps.q(omega)
    };

    let mut iterations = 0;
    let mut converged = is_converged(&state);
    while !converged && iterations < opts.max_iter {
        let mut eta = opts.step0;
        let mut next = None;
        while eta >= 1e-12 * opts.step0 {
            let mut trial: Vec<f64> = state
                .u
                .iter()
                .zip(&state.grad)
                .map(|(u, g)| clamp(u - eta * g))
                .collect();
            trial[n - 1] = 0.0;
            if trial.iter().all(|&v| v == 0.0) {
                eta *= opts.backtrack;
                continue;
            }
            let phi = problem.potential_of(&trial);
            let (t, phi, tau) = project(problem, trial, phi)?;
            let comps = problem.components_with(&t, &phi);
            let j = EnergyReport::from_components(problem.params(), &comps, 0.0).j;
            if j < state.j {
                next = Some((finish_state(problem, t, phi)?, tau));
                break;
            }
            // At rounding level J no longer orders iterates; fall back to the gradient norm
            let scale = comps.q(omega) + problem.params().mu * comps.coupling + comps.lp;
            if j - state.j <= 1e-14 * scale {
                let cand = finish_state(problem, t, phi)?;
                if cand.grad_norm < state.grad_norm {
                    next = Some((cand, tau));
                    break;
                }
            }
            eta *= opts.backtrack;
        }
        let Some((s, tau)) = next else { break };
        iterations += 1;
        state = s;
        energy_history.push(state.j);
        grad_history.push(state.rel());
        tau_history.push(tau);
        converged = is_converged(&state);
    }

    let report = problem.report_with(&state.u, &state.phi);
    let u = RadialField::from_parts(grid, state.u.clone());
    let phi = RadialField::from_parts(grid, state.phi.clone());
    let slope = decay_slope(&u).ok();
    Ok(SolveResult {
        c_estimate: report.j,
        report,
        converged,
        iterations,
        decay_slope: slope,
        grad_rel: state.rel(),
        ground_state_guarantee: problem.params().ground_state_guaranteed(),
        critical: problem.params().is_critical(),
        energy_history,
        grad_history,
        tau_history,
        u,
        phi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaxEstimate {
    /// `min_v max_τ J(τv)` over the sampled directions.
    pub value: f64,
    pub best_index: usize,
    pub values: Vec<f64>,
}

/// `max_τ J(τv)` for each direction, minimized over the set.
pub fn minimax_over(problem: &Problem, dirs: &[RadialField]) -> Result<MinimaxEstimate> {
    if dirs.is_empty() {
        return invalid("need at least one direction");
    }
    let values = dirs
        .iter()
        .map(|v| {
            let comps = problem.components(v)?;
            let f = Fibering::from_components(problem, &comps);
            Ok(f.value(f.tau_star()?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (best_index, value) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    Ok(MinimaxEstimate { value, best_index, values })
}

/// Random nonnegative direction: one to three Gaussian bumps, centered or shell-shaped.
pub fn random_direction(grid: &Arc<RadialGrid>, omega: f64, rng: &mut impl Rng) -> RadialField {
    let k = rng.random_range(1..=3);
    let len = 1.0 / omega.sqrt();
    let bumps: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| {
            let amp = rng.random_range(0.2..1.0);
            let width = len * 10f64.powf(rng.random_range(-0.5..0.6));
            let center = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..2.0) * width };
            (amp, width, center)
        })
        .collect();
    RadialField::dirichlet_from_fn(grid, |r| {
        bumps
            .iter()
            .map(|&(a, w, c)| a * (-((r - c) / w).powi(2)).exp())
            .sum()
    })
    .expect("finite")
}

/// Mountain-pass level estimated from `n_dirs` seeded random directions.
pub fn minimax_estimate(problem: &Problem, n_dirs: usize, seed: u64) -> Result<MinimaxEstimate> {
    if n_dirs == 0 {
        return invalid("n_dirs must be >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = problem.params().omega;
    let dirs: Vec<RadialField> = (0..n_dirs)
        .map(|_| random_direction(problem.grid(), omega, &mut rng))
        .collect();
    minimax_over(problem, &dirs)
}
