//! Bump test functions and the two ways of integrating them: Monte Carlo over
//! a chart box, and deterministic slicing along the level sets of a Busemann
//! function (coarea formula with `‖∇b‖ = 1`).

use crate::busemann::BusemannField;
use crate::error::{Error, Result};
use crate::manifold::{Ideal, Isometry, ModelSpace, Point};
use crate::numerics::montecarlo::{integrate_box, ChartBox, MCEstimate, McConfig};
use crate::numerics::quadrature::QuadratureRule;
use crate::numerics::unit_sphere_area;

/// `(1 − (d/R)²)³` on `[0, R]`, zero beyond.
#[inline]
pub fn bump_profile(d: f64, radius: f64) -> f64 {
    let u = d / radius;
    if u >= 1.0 {
        0.0
    } else {
        let w = 1.0 - u * u;
        w * w * w
    }
}

/// `x ↦ (1 − (d(x, center)/radius)²)³₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub center: Point,
    pub radius: f64,
}

impl TestFunction {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain {
                what: "bump radius",
                value: radius,
            });
        }
        Ok(Self { center, radius })
    }

    pub fn model(&self) -> ModelSpace {
        self.center.model()
    }

    pub fn eval(&self, x: &Point) -> Result<f64> {
        self.model().check_point(x)?;
        Ok(self.eval_raw(x.as_slice()))
    }

    #[inline]
    pub fn eval_raw(&self, x: &[f64]) -> f64 {
        bump_profile(self.model().dist_raw(x, self.center.as_slice()), self.radius)
    }

    /// Chart bounding box of the closed support ball. A half-space geodesic
    /// ball about `(c̄, z)` is the Euclidean ball about `(c̄, z cosh R)` of
    /// radius `z sinh R`.
    pub fn support_box(&self) -> ChartBox {
        let c = self.center.as_slice();
        let n = c.len();
        let r = self.radius;
        let (mut lo, mut hi) = (c.to_vec(), c.to_vec());
        if self.model().is_hyperbolic() {
            let z = c[n - 1];
            for i in 0..n - 1 {
                lo[i] -= z * r.sinh();
                hi[i] += z * r.sinh();
            }
            lo[n - 1] = z * (-r).exp();
            hi[n - 1] = z * r.exp();
        } else {
            for i in 0..n {
                lo[i] -= r;
                hi[i] += r;
            }
        }
        ChartBox { lo, hi }
    }

    /// Integral of the bump over its support, written in geodesic polar coordinates.
    pub fn exact_euclidean_integral(&self) -> Option<f64> {
        if self.model().is_hyperbolic() {
            return None;
        }
        let n = self.model().dim();
        // ω_{n−1} Rⁿ ∫₀¹ (1 − u²)³ u^{n−1} du, the inner integral being ½ B(n/2, 4).
        let k = n as f64 / 2.0;
        let beta = 3.0 / (k * (k + 1.0) * (k + 2.0) * (k + 3.0));
        Some(unit_sphere_area(n - 1) * self.radius.powi(n as i32) * beta)
    }
}

/// Monte Carlo estimate of `∫ f dμ` over `region`, which must contain the support of `f`.
pub fn integrate_region(f: &TestFunction, region: &ChartBox, cfg: &McConfig) -> Result<MCEstimate> {
    if !region.contains_box(&f.support_box()) {
        return Err(Error::SupportEscapesRegion);
    }
    integrate_box(f.model(), region, |x| f.eval_raw(x), cfg)
}

/// `ω_{n−1} ∫₀^R profile(ρ) J(ρ) dρ` with `J = sinh^{n−1}` (half-space) or `ρ^{n−1}`.
pub fn radial_integral(f: &TestFunction, nodes: usize) -> f64 {
    let m = f.model();
    let n = m.dim();
    let rule = QuadratureRule::gauss_legendre(nodes, 0.0, f.radius);
    let hyp = m.is_hyperbolic();
    unit_sphere_area(n - 1)
        * rule.integrate(|rho| {
            let j = if hyp { rho.sinh() } else { rho };
            bump_profile(rho, f.radius) * j.powi(n as i32 - 1)
        })
}

/// `∫_ℝ ∫_{b = τ} f dμ_τ dτ`, the inner integrals over horospheres evaluated by
/// polar quadrature about the foot of the bump centre.
pub fn coarea_sliced_integral(f: &TestFunction, b: &BusemannField, outer: usize, inner: usize) -> Result<f64> {
    let m = f.model();
    if b.model() != m {
        return Err(Error::ModelMismatch(m.to_string(), b.model().to_string()));
    }
    let n = m.dim();
    let r_max = f.radius;
    let center_level = b.value(&f.center)?;
    let levels = QuadratureRule::gauss_legendre(outer, center_level - r_max, center_level + r_max);
    let omega = unit_sphere_area(n - 2);
    let radial = |rho_max: f64, profile: &dyn Fn(f64) -> f64| -> f64 {
        if rho_max <= 0.0 {
            return 0.0;
        }
        omega
            * QuadratureRule::gauss_legendre(inner, 0.0, rho_max)
                .integrate(|r| profile(r) * r.powi(n as i32 - 2))
    };

    if !m.is_hyperbolic() {
        let total = levels.integrate(|tau| {
            let delta = (tau - center_level).abs();
            let rho_max = (r_max * r_max - delta * delta).max(0.0).sqrt();
            radial(rho_max, &|r: f64| bump_profile((delta * delta + r * r).sqrt(), r_max))
        });
        return Ok(total);
    }

    // Move the field's boundary point to ∞; slices become horizontal planes.
    let iso = match b.xi() {
        Ideal::Infinity => Isometry::identity(m),
        Ideal::Finite(xi) => {
            let shift: Vec<f64> = xi.iter().map(|a| -a).collect();
            Isometry::translation(m, &shift).then(Isometry::inversion(m))
        }
        Ideal::Direction(_) => return Err(Error::InvalidIdeal("direction in the half-space".into())),
    };
    let bn = b.transported(&iso)?;
    let kappa = bn.value_raw(m.reference_point().as_slice());
    let c = iso.apply(&f.center)?;
    let zc = c.height();
    let total = levels.integrate(|tau| {
        let zeta = (kappa - tau).exp();
        let (sh, ch) = (r_max.sinh(), r_max.cosh());
        let rho2 = (zc * sh).powi(2) - (zeta - zc * ch).powi(2);
        let dz2 = (zeta - zc).powi(2);
        let scale = 2.0 * (zeta * zc).sqrt();
        let slice = radial(rho2.max(0.0).sqrt(), &|r: f64| {
            let d = 2.0 * ((r * r + dz2).sqrt() / scale).asinh();
            bump_profile(d, r_max)
        });
        slice / zeta.powi(n as i32 - 1)
    });
    Ok(total)
}
