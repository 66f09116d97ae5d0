//! The action functional
//!
//! ```text
//! J(u) = ½‖∇u‖² + (ω/2)‖u‖² − (μ/4)∫φ_u u² − (1/p)‖u‖_p^p,
//! ```
//!
//! its derivative, the Nehari functional `⟨J′(u), u⟩`, and the Pohozaev
//! functional
//!
//! ```text
//! P(u) = ½‖∇u‖² + (3ω/2)‖u‖² − (5μ/4)∫φ_u u² − (3/p)‖u‖_p^p − (μ/4a) ∬ e^{−|x−y|/a} u²(x) u²(y).
//! ```
//!
//! Every quantity is assembled from the grid's Dirichlet form, shell volumes
//! and a symmetric kernel matrix, so [`Problem::l2_gradient`] is the exact
//! gradient of the discrete `J` in the weighted inner product.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::kernel::{exp_interaction, KernelMatrix, KernelSpec};
use crate::radial::{NormKind, RadialField, RadialGrid};

/// Model parameters `(ω, μ, a, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SbpParams {
    pub omega: f64,
    pub mu: f64,
    pub a: f64,
    pub p: f64,
}

impl SbpParams {
    pub fn new(omega: f64, mu: f64, a: f64, p: f64) -> Result<Self> {
        let params = SbpParams { omega, mu, a, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return invalid(format!("omega must be > 0, got {}", self.omega));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return invalid(format!("mu must be > 0, got {}", self.mu));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return invalid(format!("a must be >= 0, got {}", self.a));
        }
        if !(self.p > 2.0 && self.p <= 6.0) {
            return invalid(format!("p must lie in (2, 6], got {}", self.p));
        }
        Ok(())
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        SbpParams::new(self.omega, self.mu, a, self.p)
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::new(self.a).expect("validated")
    }

    /// Ground-state characterization by Nehari minimization is only known for `p ∈ [4, 6]`.
    pub fn ground_state_guaranteed(&self) -> bool {
        (4.0..=6.0).contains(&self.p)
    }

    pub fn is_critical(&self) -> bool {
        self.p == 6.0
    }
}

/// The four homogeneous building blocks of `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Components {
    /// `‖∇u‖²`
    pub grad_sq: f64,
    /// `‖u‖²`
    pub mass_sq: f64,
    /// `∫ φ_u u²`
    pub coupling: f64,
    /// `‖u‖_p^p`
    pub lp: f64,
}

impl Components {
    /// `‖∇u‖² + ω‖u‖²`
    pub fn q(&self, omega: f64) -> f64 {
        self.grad_sq + omega * self.mass_sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub mass: f64,
    pub nonlocal: f64,
    pub power: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub nehari: f64,
    pub pohozaev: f64,
    pub i_val: f64,
}

impl EnergyReport {
    /// `exp_term` is `∬ e^{−|x−y|/a} u²u²`; ignored when `a = 0`.
    pub fn from_components(params: &SbpParams, c: &Components, exp_term: f64) -> Self {
        let SbpParams { omega, mu, a, p } = *params;
        let kinetic = 0.5 * c.grad_sq;
        let mass = 0.5 * omega * c.mass_sq;
        let nonlocal = 0.25 * mu * c.coupling;
        let power = c.lp / p;
        let j = kinetic + mass - nonlocal - power;
        let nehari = c.grad_sq + omega * c.mass_sq - mu * c.coupling - c.lp;
        let mut pohozaev =
            0.5 * c.grad_sq + 1.5 * omega * c.mass_sq - 1.25 * mu * c.coupling - 3.0 / p * c.lp;
        if a > 0.0 {
            pohozaev -= mu / (4.0 * a) * exp_term;
        }
        EnergyReport {
            kinetic,
            mass,
            nonlocal,
            power,
            j,
            nehari,
            pohozaev,
            i_val: nehari - pohozaev,
        }
    }

    /// `|kinetic| + |mass| + |nonlocal| + |power|`
    pub fn term_scale(&self) -> f64 {
        self.kinetic.abs() + self.mass.abs() + self.nonlocal.abs() + self.power.abs()
    }
}

/// Parameters, grid and the cached kernel matrix of one problem instance.
#[derive(Debug, Clone)]
pub struct Problem {
    params: SbpParams,
    grid: Arc<RadialGrid>,
    kernel: Arc<KernelMatrix>,
}

impl Problem {
    pub fn new(params: SbpParams, grid: &Arc<RadialGrid>) -> Result<Self> {
        params.validate()?;
        let kernel = Arc::new(KernelMatrix::new(grid, params.kernel()));
        Ok(Problem {
            params,
            grid: Arc::clone(grid),
            kernel,
        })
    }

    /// Reuses an already assembled kernel matrix.
    pub fn with_kernel(params: SbpParams, kernel: Arc<KernelMatrix>) -> Result<Self> {
        params.validate()?;
        if kernel.spec() != params.kernel() {
            return invalid("kernel matrix was built for a different screening length");
        }
        Ok(Problem {
            params,
            grid: Arc::clone(kernel.grid()),
            kernel,
        })
    }

    pub fn params(&self) -> &SbpParams {
        &self.params
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn kernel(&self) -> &Arc<KernelMatrix> {
        &self.kernel
    }

    fn check(&self, u: &RadialField) -> Result<()> {
        self.grid.integrate(u).map(|_| ())
    }

    /// `φ_u = 𝒦 ∗ u²`.
    pub fn potential(&self, u: &RadialField) -> Result<RadialField> {
        self.check(u)?;
        Ok(RadialField::from_parts(&self.grid, self.potential_of(u.values())))
    }

    pub(crate) fn potential_of(&self, u: &[f64]) -> Vec<f64> {
        let rho: Vec<f64> = u.iter().map(|v| v * v).collect();
        self.kernel.potential(&rho)
    }

    pub(crate) fn components_with(&self, u: &[f64], phi: &[f64]) -> Components {
        let g = &self.grid;
        let p = self.params.p;
        let mut mass_sq = 0.0;
        let mut coupling = 0.0;
        let mut lp = 0.0;
        for ((w, v), f) in g.weights().iter().zip(u).zip(phi) {
            let v2 = v * v;
            mass_sq += w * v2;
            coupling += w * f * v2;
            lp += w * v.abs().powf(p);
        }
        Components {
            grad_sq: g.dirichlet(u, u),
            mass_sq,
            coupling,
            lp,
        }
    }

    pub fn components(&self, u: &RadialField) -> Result<Components> {
        self.check(u)?;
        let phi = self.potential_of(u.values());
        Ok(self.components_with(u.values(), &phi))
    }

    /// `J(u)` alone, without the Pohozaev double integral.
    pub fn energy(&self, u: &RadialField) -> Result<f64> {
        let c = self.components(u)?;
        Ok(EnergyReport::from_components(&self.params, &c, 0.0).j)
    }

    pub fn energy_report(&self, u: &RadialField) -> Result<EnergyReport> {
        self.check(u)?;
        let phi = self.potential_of(u.values());
        Ok(self.report_with(u.values(), &phi))
    }

    pub(crate) fn report_with(&self, u: &[f64], phi: &[f64]) -> EnergyReport {
        let c = self.components_with(u, phi);
        let exp_term = if self.params.a > 0.0 {
            let rho: Vec<f64> = u.iter().map(|v| v * v).collect();
            exp_interaction(&self.grid, &rho, self.params.a)
        } else {
            0.0
        };
        EnergyReport::from_components(&self.params, &c, exp_term)
    }

    /// Strong-form residual `−Δu + ωu − μφ_u u − |u|^{p−2}u`, zero at the Dirichlet node.
    pub fn l2_gradient(&self, u: &RadialField) -> Result<RadialField> {
        self.check(u)?;
        let phi = self.potential_of(u.values());
        Ok(RadialField::from_parts(&self.grid, self.residual_with(u.values(), &phi)))
    }

    pub(crate) fn residual_with(&self, u: &[f64], phi: &[f64]) -> Vec<f64> {
        let SbpParams { omega, mu, p, .. } = self.params;
        let n = self.grid.n();
        let mut lap = vec![0.0; n];
        self.grid.laplacian_into(u, &mut lap);
        let mut out: Vec<f64> = (0..n)
            .map(|i| {
                let v = u[i];
                -lap[i] + omega * v - mu * phi[i] * v - v.abs().powf(p - 2.0) * v
            })
            .collect();
        out[n - 1] = 0.0;
        out
    }

    /// Riesz representative of `J′(u)` in the `H1(ω)` inner product.
    pub fn sobolev_gradient(&self, u: &RadialField) -> Result<RadialField> {
        let r = self.l2_gradient(u)?;
        self.grid.sobolev_solve(self.params.omega, &r)
    }

    /// `⟨J′(u), v⟩` evaluated term by term from its weak form.
    pub fn derivative_pairing(&self, u: &RadialField, v: &RadialField) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        let SbpParams { omega, mu, p, .. } = self.params;
        let (uu, vv) = (u.values(), v.values());
        let phi = self.potential_of(uu);
        let g = &self.grid;
        let grad = g.dirichlet(uu, vv);
        let mut mass = 0.0;
        let mut coupling = 0.0;
        let mut power = 0.0;
        for i in 0..g.n() {
            let w = g.weights()[i];
            mass += w * uu[i] * vv[i];
            coupling += w * phi[i] * uu[i] * vv[i];
            power += w * uu[i].abs().powf(p - 2.0) * uu[i] * vv[i];
        }
        Ok(grad + omega * mass - mu * coupling - power)
    }

    pub fn h1_norm(&self, u: &RadialField) -> Result<f64> {
        self.grid.norm(u, NormKind::H1(self.params.omega))
    }
}

pub fn energy_report(params: &SbpParams, grid: &Arc<RadialGrid>, u: &RadialField) -> Result<EnergyReport> {
    Problem::new(*params, grid)?.energy_report(u)
}

pub fn l2_gradient(params: &SbpParams, grid: &Arc<RadialGrid>, u: &RadialField) -> Result<RadialField> {
    Problem::new(*params, grid)?.l2_gradient(u)
}

pub fn sobolev_gradient(params: &SbpParams, grid: &Arc<RadialGrid>, u: &RadialField) -> Result<RadialField> {
    Problem::new(*params, grid)?.sobolev_gradient(u)
}
