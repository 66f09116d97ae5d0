pub mod asymptotics;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod kernel;
pub mod oracle;
pub mod radial;
pub mod solver;

pub use asymptotics::{sweep_a, SweepReport, SweepRow};
pub use diagnostics::{
    critical_level_check, decay_slope, invariant_suite, radial_bound_check, sobolev_constant_report,
    DiagnosticsReport, SobolevReport,
};
pub use energy::{energy_report, l2_gradient, sobolev_gradient, Components, EnergyReport, Problem, SbpParams};
pub use error::{Error, Result};
pub use oracle::{angular_oracle_g, angular_oracle_h, fd_gradient_check, mc_double_integral, potential_oracle, GaussianMixture, McEstimate};
pub use kernel::{
    double_integral_e, kernel_k, reduced_kernel_g, reduced_kernel_h, solve_phi, KernelMatrix, KernelSpec,
};
pub use radial::{make_grid, GridSpec, NormKind, RadialField, RadialGrid};
pub use solver::{
    fibering_g, minimax_estimate, project_nehari, solve_ground_state, tau_star, MinimaxEstimate, SolveOptions,
    SolveResult,
};
