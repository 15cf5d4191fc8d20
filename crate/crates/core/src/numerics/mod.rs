//! Quadrature, Monte Carlo, ODE integration and finite-difference engines.

pub mod finite_diff;
pub mod integrate;
pub mod montecarlo;
pub mod ode;
pub mod quadrature;

pub use finite_diff::{fd_directional, fd_divergence, fd_gradient, fd_hessian, fd_jacobian, FdConfig};
pub use integrate::{coarea_sliced_integral, integrate_region, radial_integral, TestFunction};
pub use montecarlo::{integrate_box, sample_mean, ChartBox, MCEstimate, McConfig, Proposal};
pub use ode::{integrate, OdeMethod, Trajectory};
pub use quadrature::{gauss_legendre_reference, ProductRule, QuadratureKind, QuadratureRule};

use std::f64::consts::PI;

/// `Γ(k/2)` for a positive integer `k`.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k > 0);
    let mut g = if k % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut a = if k % 2 == 0 { 1.0 } else { 0.5 };
    while a < k as f64 / 2.0 - 1e-9 {
        g *= a;
        a += 1.0;
    }
    g
}

/// Area of the unit sphere `Sᵏ ⊂ ℝᵏ⁺¹`; `S⁰` counts two points.
pub fn unit_sphere_area(k: usize) -> f64 {
    2.0 * PI.powf((k + 1) as f64 / 2.0) / gamma_half(k + 1)
}
