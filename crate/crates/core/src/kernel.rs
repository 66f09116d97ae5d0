//! The Bopp-Podolsky kernel `𝒦(x) = (1 − e^{−|x|/a}) / |x|` and its radial reductions.
//!
//! For radial densities the convolution `φ = 𝒦 ∗ ρ` reduces to a one-dimensional
//! integral against the spherical average of `𝒦(|x − y|)` over the directions
//! of `y`:
//!
//! ```text
//! G_a(r, s) = 1/max(r, s) − a/(2rs) · (e^{−|r−s|/a} − e^{−(r+s)/a}),
//! φ(r)      = ∫ G_a(r, s) ρ(s) 4π s² ds.
//! ```
//!
//! The exponential interaction `e^{−|x−y|/a}` averages to
//!
//! ```text
//! H_a(r, s) = [a e^{−|r−s|/a}(|r−s| + a) − a e^{−(r+s)/a}(r + s + a)] / (2rs).
//! ```
//!
//! Both closed forms lose digits when `r, s ≪ a`, and overflow if written with
//! `sinh`. With `r ≥ s` and `x = s/a` they are rewritten as
//!
//! ```text
//! G = (1/r) [−expm1(−r/a) − e^{−r/a}(sinh(x)/x − 1)]
//! H = e^{−r/a} [sinh(x)/x − (s/r)(x cosh x − sinh x)/x²]
//! ```
//!
//! and the bracketed `sinh` terms are summed as power series for `x < 1/2`.
//! `a = 0` is the Coulomb kernel `1/|x|`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::radial::{RadialField, RadialGrid};

/// Screening length of the kernel; `a = 0` is the Coulomb limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    a: f64,
}

impl KernelSpec {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return invalid(format!("screening length a must be finite and >= 0, got {a}"));
        }
        Ok(KernelSpec { a })
    }

    pub fn coulomb() -> Self {
        KernelSpec { a: 0.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn is_coulomb(&self) -> bool {
        self.a == 0.0
    }
}

/// `𝒦(r)`; at `r = 0` returns the limit `1/a` when `a > 0`.
pub fn kernel_k(r: f64, spec: KernelSpec) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return invalid(format!("radius must be finite and >= 0, got {r}"));
    }
    let a = spec.a;
    if a == 0.0 {
        if r == 0.0 {
            return Err(Error::Singular("Coulomb kernel at r = 0".into()));
        }
        return Ok(1.0 / r);
    }
    if r == 0.0 {
        return Ok(1.0 / a);
    }
    Ok(-(-r / a).exp_m1() / r)
}

fn check_pair(r: f64, s: f64) -> Result<()> {
    if !(r >= 0.0 && s >= 0.0 && r.is_finite() && s.is_finite()) {
        return invalid(format!("radii must be finite and >= 0, got ({r}, {s})"));
    }
    Ok(())
}

/// Spherical average of `𝒦(|x − y|)` for `|x| = r`, `|y| = s`.
pub fn reduced_kernel_g(r: f64, s: f64, spec: KernelSpec) -> Result<f64> {
    check_pair(r, s)?;
    if spec.a == 0.0 && r == 0.0 && s == 0.0 {
        return Err(Error::Singular("Coulomb kernel at r = s = 0".into()));
    }
    Ok(g_unchecked(r, s, spec.a))
}

/// Spherical average of `e^{−|x − y|/a}`; requires `a > 0`.
pub fn reduced_kernel_h(r: f64, s: f64, spec: KernelSpec) -> Result<f64> {
    check_pair(r, s)?;
    if spec.a == 0.0 {
        return invalid("the exponential interaction needs a > 0");
    }
    Ok(h_unchecked(r, s, spec.a))
}

const SERIES_CUTOFF: f64 = 0.5;

/// `sinh(x)/x − 1 = Σ_{k≥1} x^{2k}/(2k+1)!`
fn sinhc_m1(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x2 / 6.0;
    let mut sum = 0.0;
    let mut k = 1.0;
    while term > 1e-18 * sum {
        sum += term;
        k += 1.0;
        term *= x2 / ((2.0 * k) * (2.0 * k + 1.0));
    }
    sum
}

/// `(x cosh x − sinh x)/x² = Σ_{k≥1} 2k x^{2k−1}/(2k+1)!`
fn cosh_sinh_ratio(x: f64) -> f64 {
    let x2 = x * x;
    // c_k = x^{2k-1}/(2k+1)!, term = 2k c_k
    let mut c = x / 6.0;
    let mut sum = 0.0;
    let mut k = 1.0;
    loop {
        let term = 2.0 * k * c;
        sum += term;
        if term <= 1e-18 * sum || term == 0.0 {
            break;
        }
        k += 1.0;
        c *= x2 / ((2.0 * k) * (2.0 * k + 1.0));
    }
    sum
}

pub(crate) fn g_unchecked(r: f64, s: f64, a: f64) -> f64 {
    let (r, s) = if r >= s { (r, s) } else { (s, r) };
    if a == 0.0 {
        return 1.0 / r;
    }
    if r == 0.0 {
        return 1.0 / a;
    }
    let x = s / a;
    if x < SERIES_CUTOFF {
        let t = -r / a;
        (-t.exp_m1() - t.exp() * sinhc_m1(x)) / r
    } else {
        1.0 / r - a / (2.0 * r * s) * ((-(r - s) / a).exp() - (-(r + s) / a).exp())
    }
}

pub(crate) fn h_unchecked(r: f64, s: f64, a: f64) -> f64 {
    let (r, s) = if r >= s { (r, s) } else { (s, r) };
    if r == 0.0 {
        return 1.0;
    }
    let x = s / a;
    if x < SERIES_CUTOFF {
        if s == 0.0 {
            return (-r / a).exp();
        }
        (-r / a).exp() * (1.0 + sinhc_m1(x) - s / r * cosh_sinh_ratio(x))
    } else {
        let f = |t: f64| a * (-t / a).exp() * (t + a);
        (f(r - s) - f(r + s)) / (2.0 * r * s)
    }
}

/// Above this node count the kernel matrix is evaluated on the fly instead of stored.
pub const DENSE_LIMIT: usize = 4096;

/// `G_a(r_i, r_j)` on a grid, stored densely when small enough.
///
/// Row `i` gives `φ_i = Σ_j G_ij w_j ρ_j`. For the Coulomb kernel the singular
/// self-interaction of the origin cell is replaced by its cell average
/// `3/(2 ρ_{1/2})`, the potential at the centre of a uniformly charged ball.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    grid: Arc<RadialGrid>,
    spec: KernelSpec,
    dense: Option<Vec<f64>>,
}

impl KernelMatrix {
    pub fn new(grid: &Arc<RadialGrid>, spec: KernelSpec) -> Self {
        let n = grid.n();
        let dense = (n <= DENSE_LIMIT).then(|| {
            let mut m = vec![0.0; n * n];
            m.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = matrix_entry(grid, spec.a, i, j);
                }
            });
            m
        });
        KernelMatrix {
            grid: Arc::clone(grid),
            spec,
            dense,
        }
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.dense {
            Some(m) => m[i * self.grid.n() + j],
            None => matrix_entry(&self.grid, self.spec.a, i, j),
        }
    }

    /// Potential of the density `rho` (samples, not checked for sign).
    pub(crate) fn potential(&self, rho: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        let q: Vec<f64> = self.grid.weights().iter().zip(rho).map(|(w, p)| w * p).collect();
        match &self.dense {
            Some(m) => m
                .par_chunks(n)
                .map(|row| row.iter().zip(&q).map(|(g, v)| g * v).sum())
                .collect(),
            None => (0..n)
                .into_par_iter()
                .map(|i| {
                    q.iter()
                        .enumerate()
                        .map(|(j, v)| matrix_entry(&self.grid, self.spec.a, i, j) * v)
                        .sum()
                })
                .collect(),
        }
    }
}

fn matrix_entry(grid: &RadialGrid, a: f64, i: usize, j: usize) -> f64 {
    if a == 0.0 && i == 0 && j == 0 {
        return 1.5 / grid.face(0);
    }
    let r = grid.nodes();
    g_unchecked(r[i], r[j], a)
}

fn check_density(rho: &RadialField) -> Result<()> {
    if let Some(i) = rho.values().iter().position(|&v| v < 0.0) {
        return invalid(format!("density must be nonnegative (node {i} is {})", rho.values()[i]));
    }
    Ok(())
}

/// `φ = 𝒦 ∗ ρ` for a nonnegative radial density.
pub fn solve_phi(grid: &Arc<RadialGrid>, rho: &RadialField, spec: KernelSpec) -> Result<RadialField> {
    grid.integrate(rho)?;
    check_density(rho)?;
    let km = KernelMatrix {
        grid: Arc::clone(grid),
        spec,
        dense: None,
    };
    RadialField::new(grid, km.potential(rho.values()))
}

/// `∬ e^{−|x−y|/a} ρ(x) ρ(y) dx dy` for a nonnegative radial density, `a > 0`.
///
/// The inner integral treats `ρ` as constant on each dual cell and integrates
/// `H_a(r_i, s) 4π s²` over the cell with two-point Gauss-Legendre panels. Panels
/// are refined to width `a/2` near the diagonal, so the peak of `H_a` is
/// resolved even when `a` is far below the grid spacing.
pub fn double_integral_e(grid: &Arc<RadialGrid>, rho: &RadialField, spec: KernelSpec) -> Result<f64> {
    grid.integrate(rho)?;
    check_density(rho)?;
    if spec.a == 0.0 {
        return invalid("the exponential interaction needs a > 0");
    }
    Ok(exp_interaction(grid, rho.values(), spec.a))
}

pub(crate) fn exp_interaction(grid: &RadialGrid, rho: &[f64], a: f64) -> f64 {
    let n = grid.n();
    let r = grid.nodes();
    let w = grid.weights();
    let cells: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let lo = if j == 0 { 0.0 } else { grid.face(j - 1) };
            let hi = if j == n - 1 { r[n - 1] } else { grid.face(j) };
            (lo, hi)
        })
        .collect();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            if rho[i] == 0.0 {
                return 0.0;
            }
            let ri = r[i];
            let mut psi = 0.0;
            for (j, &(lo, hi)) in cells.iter().enumerate() {
                if rho[j] == 0.0 {
                    continue;
                }
                psi += rho[j] * cell_integral_h(ri, lo, hi, a);
            }
            w[i] * rho[i] * psi
        })
        .collect();
    rows.iter().sum()
}

const GL2: f64 = 0.577_350_269_189_625_8; // 1/√3

fn cell_integral_h(ri: f64, lo: f64, hi: f64, a: f64) -> f64 {
    let four_pi = 4.0 * std::f64::consts::PI;
    let panel = |x0: f64, x1: f64, pieces: usize| {
        let h = (x1 - x0) / pieces as f64;
        let mut acc = 0.0;
        for k in 0..pieces {
            let mid = x0 + (k as f64 + 0.5) * h;
            for sgn in [-1.0, 1.0] {
                let s = mid + sgn * 0.5 * h * GL2;
                acc += h_unchecked(ri, s, a) * s * s;
            }
        }
        0.5 * h * acc * four_pi
    };
    let pieces = |x0: f64, x1: f64| {
        let width = x1 - x0;
        let dist = if ri < x0 {
            x0 - ri
        } else if ri > x1 {
            ri - x1
        } else {
            0.0
        };
        if width > 0.5 * a && dist < 30.0 * a {
            (width / (0.5 * a)).ceil().min(1e6) as usize
        } else {
            1
        }
    };
    if ri > lo && ri < hi {
        panel(lo, ri, pieces(lo, ri)) + panel(ri, hi, pieces(ri, hi))
    } else {
        panel(lo, hi, pieces(lo, hi))
    }
}
