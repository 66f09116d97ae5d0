//! Oracle gates run by the `validate` subcommand.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbp_core::oracle::{
    angular_oracle_g, angular_oracle_h, fd_gradient_check, mc_double_integral, potential_oracle, GaussianMixture,
    DEFAULT_N_THETA,
};
use sbp_core::{
    double_integral_e, make_grid, reduced_kernel_g, reduced_kernel_h, solve_phi, KernelSpec, Problem, RadialField,
    RadialGrid, Result, SbpParams,
};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Gate {
    fn at_most(name: &str, worst: f64, tolerance: f64) -> Self {
        Gate {
            name: name.to_string(),
            worst,
            tolerance,
            pass: worst <= tolerance,
        }
    }
}

/// Reduced kernels against angular quadrature at 50 points, 5 of them near the diagonal.
pub fn kernel_gate(seed: u64) -> Result<Vec<Gate>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for k in 0..50 {
        let r = rng.random_range(0.0..10.0f64).max(1e-6);
        let s = if k < 5 {
            r * (1.0 + rng.random_range(-1e-3..1e-3))
        } else {
            rng.random_range(0.0..10.0f64).max(1e-6)
        };
        let a = rng.random_range(0.05..5.0);
        let spec = KernelSpec::new(a)?;
        let g = reduced_kernel_g(r, s, spec)?;
        let go = angular_oracle_g(r, s, a, DEFAULT_N_THETA)?;
        let h = reduced_kernel_h(r, s, spec)?;
        let ho = angular_oracle_h(r, s, a, DEFAULT_N_THETA)?;
        worst_g = worst_g.max(((g - go) / go).abs());
        worst_h = worst_h.max(((h - ho) / ho).abs());
    }
    Ok(vec![
        Gate::at_most("kernel_G", worst_g, 1e-7),
        Gate::at_most("kernel_H", worst_h, 1e-7),
    ])
}

/// Grid potential of `e^{−r²}` against nested quadrature at 10 radii.
pub fn potential_gate(a: f64) -> Result<Gate> {
    let (n, r_max) = (8192, 8.0);
    let grid = make_grid(n, r_max, 1.0)?;
    let rho = RadialField::from_fn(&grid, |r| (-r * r).exp())?;
    let phi = solve_phi(&grid, &rho, KernelSpec::new(a)?)?;
    let mut worst = 0.0f64;
    for k in 1..=10 {
        let i = k * (n - 1) / 11;
        let r = grid.nodes()[i];
        let o = potential_oracle(r, |s| (-s * s).exp(), r_max, a, 2001, 64)?;
        worst = worst.max(((phi.values()[i] - o) / o).abs());
    }
    Ok(Gate::at_most(&format!("potential_a={a}"), worst, 1e-6))
}

/// Screened self-interaction of `e^{−r²}` against Monte Carlo; `worst` is in standard errors.
pub fn monte_carlo_gate(a: f64, n_samples: usize, seed: u64) -> Result<Gate> {
    let grid = make_grid(4096, 10.0, 1.0)?;
    let rho = RadialField::from_fn(&grid, |r| (-r * r).exp())?;
    let e = double_integral_e(&grid, &rho, KernelSpec::new(a)?)?;
    let mc = mc_double_integral(&GaussianMixture::new(vec![(1.0, 1.0)])?, a, n_samples, seed)?;
    Ok(Gate::at_most(&format!("monte_carlo_a={a}"), (e - mc.value).abs() / mc.std_err, 3.0))
}

pub fn random_bumps(grid: &Arc<RadialGrid>, rng: &mut impl Rng, signed: bool) -> Result<RadialField> {
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            let sign = if signed && rng.random_bool(0.5) { -1.0 } else { 1.0 };
            (sign * rng.random_range(0.3..2.0), rng.random_range(0.5..3.0), rng.random_range(0.0..3.0))
        })
        .collect();
    RadialField::dirichlet_from_fn(grid, |r| {
        bumps.iter().map(|&(amp, w, c)| amp * (-((r - c) / w).powi(2)).exp()).sum()
    })
}

/// Central differences of `J` on 10 random pairs; also checks the `O(ε²)` regime.
pub fn gradient_gate(seed: u64) -> Result<Vec<Gate>> {
    let grid = make_grid(512, 20.0, 2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_order = f64::INFINITY;
    for k in 0..10 {
        let p = [4.0, 5.0, 6.0][k % 3];
        let params = SbpParams::new(rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(0.1..2.0), p)?;
        let problem = Problem::new(params, &grid)?;
        let u = random_bumps(&grid, &mut rng, false)?;
        let v = random_bumps(&grid, &mut rng, true)?;
        let check = fd_gradient_check(&problem, &u, &v, &[1e-3, 1e-4, 1e-5])?;
        worst = worst.max(check.errors[2].1);
        // the step from 1e-3 to 1e-4 should cut the error by about 100
        worst_order = worst_order.min(check.errors[0].1 / check.errors[1].1);
    }
    Ok(vec![
        Gate::at_most("fd_gradient", worst, 1e-6),
        Gate {
            name: "fd_order".into(),
            worst: worst_order,
            tolerance: 50.0,
            pass: worst_order >= 50.0,
        },
    ])
}

pub fn all_gates(seed: u64) -> Result<Vec<Gate>> {
    let mut gates = kernel_gate(seed)?;
    for a in [0.0, 0.5, 2.0] {
        gates.push(potential_gate(a)?);
    }
    gates.push(monte_carlo_gate(1.0, 10_000_000, seed)?);
    gates.push(monte_carlo_gate(1e-3, 10_000_000, seed.wrapping_add(1))?);
    gates.extend(gradient_gate(seed)?);
    Ok(gates)
}
