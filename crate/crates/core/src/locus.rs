//! Intersections `S(s, t)` of two horospheres, their induced volumes, the
//! weighted integrals `V` and `W`, and the volume of a horoball strip.
//!
//! Everything is computed after sending the pair of boundary points to
//! `(0, ∞)`. There `b₁ + b₂ − c₀ = ln(|x|²/z²)` and `b₁ − b₂ = ln |x|² + K`, so
//! `S(s, t)` is the horizontal `(n−2)`-sphere of height `a = ρe^{−s/2}` and
//! Euclidean radius `ρ√(1 − e^{−s})`, where `ρ² = e^{t−K}`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::busemann::{beta_raw, mean_curvature_h, BusemannField};
use crate::error::{Error, Result};
use crate::manifold::{Ideal, Isometry, ModelSpace};
use crate::numerics::montecarlo::{integrate_box, ChartBox, MCEstimate, McConfig};
use crate::numerics::quadrature::{ProductRule, QuadratureRule};

/// Upper bound on the number of nodes of a product rule on the sphere.
pub const MAX_SPHERE_NODES: usize = 1 << 20;

/// A pair of Busemann fields together with its normalizing isometry.
#[derive(Debug, Clone, PartialEq)]
pub struct PairConfig {
    pub f1: BusemannField,
    pub f2: BusemannField,
    /// Value of `b₁ + b₂` on the geodesic joining the two boundary points.
    pub c0: f64,
    pub normalizer: Isometry,
    /// `b₁ ∘ Φ⁻¹` and `b₂ ∘ Φ⁻¹`, toward the origin and `∞`.
    pub n1: BusemannField,
    pub n2: BusemannField,
    /// `b₁ − b₂` at the normalized point `(0, …, 0, 1)`.
    pub k: f64,
}

impl PairConfig {
    pub fn new(f1: BusemannField, f2: BusemannField) -> Result<Self> {
        let model = f1.model();
        if f2.model() != model {
            return Err(Error::ModelMismatch(model.to_string(), f2.model().to_string()));
        }
        if !model.is_hyperbolic() {
            return Err(Error::NotVisibility(format!(
                "horoballs of {model} are half-spaces and their intersections are unbounded"
            )));
        }
        let normalizer = model.normalize_pair(f1.xi(), f2.xi())?;
        let n1 = f1.transported(&normalizer)?;
        let n2 = f2.transported(&normalizer)?;
        let axis = model.reference_point();
        let c0 = n1.value_raw(axis.as_slice()) + n2.value_raw(axis.as_slice());
        let k = n1.value_raw(axis.as_slice()) - n2.value_raw(axis.as_slice());
        Ok(Self {
            f1,
            f2,
            c0,
            normalizer,
            n1,
            n2,
            k,
        })
    }

    /// Pair with the default basepoint for both boundary points.
    pub fn from_ideals(model: ModelSpace, xi1: Ideal, xi2: Ideal) -> Result<Self> {
        Self::new(BusemannField::toward(model, xi1)?, BusemannField::toward(model, xi2)?)
    }

    pub fn model(&self) -> ModelSpace {
        self.f1.model()
    }

    /// `h = n − 1`.
    pub fn h(&self) -> f64 {
        mean_curvature_h(self.model())
    }

    /// `b₁ + b₂` at normalized axis points of the given heights.
    pub fn c0_along_axis(&self, heights: &[f64]) -> Vec<f64> {
        let n = self.model().dim();
        heights
            .iter()
            .map(|&z| {
                let mut x = vec![0.0; n];
                x[n - 1] = z;
                self.n1.value_raw(&x) + self.n2.value_raw(&x)
            })
            .collect()
    }

    /// `(s, t)` coordinates of a point in the original chart.
    pub fn st(&self, x: &[f64]) -> (f64, f64) {
        let (b1, b2) = (self.f1.value_raw(x), self.f2.value_raw(x));
        (b1 + b2 - self.c0, b1 - b2)
    }

    pub fn locus(&self, s: f64, t: f64) -> Result<IntersectionLocus> {
        self.locus_with(s, t, &LocusQuadrature::default())
    }

    pub fn locus_with(&self, s: f64, t: f64, quad: &LocusQuadrature) -> Result<IntersectionLocus> {
        IntersectionLocus::new(self.clone(), s, t, quad)
    }
}

/// Node counts for integrals over `S(s, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocusQuadrature {
    /// Trapezoid nodes in the azimuthal angle.
    pub circle_nodes: usize,
    /// Gauss–Legendre nodes per polar angle, for `n ≥ 4`.
    pub axis_nodes: usize,
}

impl Default for LocusQuadrature {
    fn default() -> Self {
        Self {
            circle_nodes: 512,
            axis_nodes: 64,
        }
    }
}

impl LocusQuadrature {
    /// Product rule over the `k = n − 2` hyperspherical angles. Per-axis counts are
    /// reduced so that the grid stays below [`MAX_SPHERE_NODES`].
    pub fn sphere_rule(&self, k: usize) -> ProductRule {
        if k == 0 {
            return ProductRule::new(Vec::new());
        }
        let mut circle = self.circle_nodes.max(1);
        let mut axis = self.axis_nodes.max(1);
        if k >= 2 {
            while circle * axis.pow(k as u32 - 1) > MAX_SPHERE_NODES {
                if circle > 2 * axis {
                    circle /= 2;
                } else {
                    axis = (axis * 3 / 4).max(2);
                    circle = circle.max(axis);
                }
            }
        }
        let mut axes: Vec<QuadratureRule> = (0..k - 1).map(|_| QuadratureRule::gauss_legendre(axis, 0.0, PI)).collect();
        axes.push(QuadratureRule::periodic_trapezoid(circle, 0.0, 2.0 * PI));
        ProductRule::new(axes)
    }
}

/// Point of `S^k ⊂ ℝ^{k+1}` in hyperspherical angles, with its angle derivatives.
fn sphere_point(angles: &[f64]) -> (DVector<f64>, Vec<DVector<f64>>) {
    let k = angles.len();
    let (sin, cos): (Vec<f64>, Vec<f64>) = angles.iter().map(|a| a.sin_cos()).unzip();
    let coord = |j: usize, diff: Option<usize>| -> f64 {
        // ω_j = sin φ₀ ⋯ sin φ_{j−1} · cos φ_j (the last coordinate has no cosine)
        let mut v = 1.0;
        for l in 0..j.min(k) {
            v *= if diff == Some(l) { cos[l] } else { sin[l] };
        }
        if j < k {
            v *= if diff == Some(j) { -sin[j] } else { cos[j] };
        }
        if let Some(i) = diff {
            if i > j {
                return 0.0;
            }
        }
        v
    };
    let omega = DVector::from_fn(k + 1, |j, _| coord(j, None));
    let d = (0..k).map(|i| DVector::from_fn(k + 1, |j, _| coord(j, Some(i)))).collect();
    (omega, d)
}

/// Integrals over a locus: its volume, `V`, `W`, and the range of `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusIntegrals {
    pub vol: f64,
    pub v: f64,
    pub w: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

/// `S(s, t) = {b₁ = (s + c₀ + t)/2} ∩ {b₂ = (s + c₀ − t)/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionLocus {
    pub config: PairConfig,
    pub s: f64,
    pub t: f64,
    /// Height of the normalized sphere.
    pub height: f64,
    /// Euclidean radius of the normalized sphere.
    pub radius: f64,
    pub quadrature: LocusQuadrature,
    integrals: LocusIntegrals,
}

impl IntersectionLocus {
    pub fn new(config: PairConfig, s: f64, t: f64, quadrature: &LocusQuadrature) -> Result<Self> {
        if !s.is_finite() || !t.is_finite() {
            return Err(Error::Domain { what: "locus coordinates", value: if s.is_finite() { t } else { s } });
        }
        if s < 0.0 {
            return Err(Error::EmptyLocus(s));
        }
        let rho = (0.5 * (t - config.k)).exp();
        let height = rho * (-0.5 * s).exp();
        let radius = rho * (-(-s).exp_m1()).sqrt();
        let mut locus = Self {
            config,
            s,
            t,
            height,
            radius,
            quadrature: *quadrature,
            integrals: LocusIntegrals {
                vol: 0.0,
                v: f64::NAN,
                w: f64::NAN,
                beta_min: -1.0,
                beta_max: -1.0,
            },
        };
        if s > 0.0 {
            locus.integrals = locus.integrate(false)?;
        }
        Ok(locus)
    }

    pub fn model(&self) -> ModelSpace {
        self.config.model()
    }

    pub fn is_degenerate(&self) -> bool {
        self.s == 0.0
    }

    /// Target levels `(b₁, b₂)`.
    pub fn levels(&self) -> (f64, f64) {
        let c0 = self.config.c0;
        (0.5 * (self.s + c0 + self.t), 0.5 * (self.s + c0 - self.t))
    }

    pub fn volume(&self) -> f64 {
        self.integrals.vol
    }

    pub fn integral_v(&self) -> Result<f64> {
        if self.is_degenerate() {
            return Err(Error::DegenerateLocus);
        }
        Ok(self.integrals.v)
    }

    pub fn integral_w(&self) -> Result<f64> {
        if self.is_degenerate() {
            return Err(Error::DegenerateLocus);
        }
        Ok(self.integrals.w)
    }

    pub fn integrals(&self) -> Result<LocusIntegrals> {
        if self.is_degenerate() {
            return Err(Error::DegenerateLocus);
        }
        Ok(self.integrals)
    }

    pub fn beta_max(&self) -> f64 {
        self.integrals.beta_max
    }

    pub fn beta_min(&self) -> f64 {
        self.integrals.beta_min
    }

    /// `1 − 2e^{−hs}`.
    pub fn beta_bound(&self) -> f64 {
        1.0 - 2.0 * (-self.config.h() * self.s).exp()
    }

    /// Number of parametrization nodes (2 points when `n = 2`).
    pub fn node_count(&self) -> usize {
        if self.is_degenerate() {
            return 1;
        }
        self.sphere_rule().len().max(1) * if self.model().dim() == 2 { 2 } else { 1 }
    }

    fn sphere_rule(&self) -> ProductRule {
        self.quadrature.sphere_rule(self.model().dim() - 2)
    }

    /// Normalized chart point for the given angles, with chart tangent vectors.
    fn normalized_node(&self, angles: &[f64], sign: f64) -> (DVector<f64>, Vec<DVector<f64>>) {
        let n = self.model().dim();
        let mut x = DVector::zeros(n);
        x[n - 1] = self.height;
        if n == 2 {
            x[0] = sign * self.radius;
            return (x, Vec::new());
        }
        let (omega, d) = sphere_point(angles);
        for i in 0..n - 1 {
            x[i] = self.radius * omega[i];
        }
        let tangents = d
            .into_iter()
            .map(|di| {
                let mut v = DVector::zeros(n);
                for i in 0..n - 1 {
                    v[i] = self.radius * di[i];
                }
                v
            })
            .collect();
        (x, tangents)
    }

    /// Calls `visit(point, tangents, weight)` over the quadrature nodes, in
    /// normalized or original coordinates.
    fn for_each_node<F: FnMut(&DVector<f64>, &[DVector<f64>], f64)>(&self, original: bool, mut visit: F) {
        let inv = self.config.normalizer.inverse();
        let mut emit = |y: DVector<f64>, tau: Vec<DVector<f64>>, w: f64| {
            if original {
                let jac = inv.jacobian_raw(y.as_slice());
                let x = inv.apply_raw(y.as_slice());
                let pushed: Vec<DVector<f64>> = tau.iter().map(|v| &jac * v).collect();
                visit(&x, &pushed, w);
            } else {
                visit(&y, &tau, w);
            }
        };
        if self.is_degenerate() {
            let n = self.model().dim();
            let mut y = DVector::zeros(n);
            y[n - 1] = self.height;
            emit(y, Vec::new(), 1.0);
            return;
        }
        if self.model().dim() == 2 {
            for sign in [1.0, -1.0] {
                let (y, tau) = self.normalized_node(&[], sign);
                emit(y, tau, 1.0);
            }
            return;
        }
        self.sphere_rule().for_each(|angles, w| {
            let (y, tau) = self.normalized_node(angles, 1.0);
            emit(y, tau, w);
        });
    }

    fn integrate(&self, original: bool) -> Result<LocusIntegrals> {
        let m = self.model();
        let (f1, f2) = if original {
            (&self.config.f1, &self.config.f2)
        } else {
            (&self.config.n1, &self.config.n2)
        };
        let mut out = LocusIntegrals {
            vol: 0.0,
            v: 0.0,
            w: 0.0,
            beta_min: f64::INFINITY,
            beta_max: f64::NEG_INFINITY,
        };
        let mut singular = None;
        self.for_each_node(original, |x, tau, w| {
            let k = tau.len();
            let density = if k == 0 {
                1.0
            } else {
                let lambda = m.conformal_factor(x.as_slice());
                let gram = DMatrix::from_fn(k, k, |i, j| lambda * tau[i].dot(&tau[j]));
                gram.determinant().max(0.0).sqrt()
            };
            let b = beta_raw(f1, f2, x.as_slice());
            let (p, q) = (1.0 - b, 1.0 + b);
            if !(p > 0.0 && q > 0.0) {
                singular = Some(b);
                return;
            }
            let dm = w * density;
            out.vol += dm;
            out.v += dm * (p / q).sqrt();
            out.w += dm * (q / p).sqrt();
            out.beta_min = out.beta_min.min(b);
            out.beta_max = out.beta_max.max(b);
        });
        if let Some(b) = singular {
            return Err(Error::Quadrature(format!("weight singular on the locus (beta = {b})")));
        }
        Ok(out)
    }

    /// The same integrals evaluated on the original configuration, through the
    /// inverse normalizer and its differential.
    pub fn general_path_integrals(&self) -> Result<LocusIntegrals> {
        if self.is_degenerate() {
            return Err(Error::DegenerateLocus);
        }
        self.integrate(true)
    }

    /// Locus nodes in the original chart.
    pub fn points(&self) -> Vec<DVector<f64>> {
        let mut pts = Vec::with_capacity(self.node_count());
        self.for_each_node(true, |x, _, _| pts.push(x.clone()));
        pts
    }

    /// `max |bᵢ(x) − levelᵢ|` over the nodes, with the original fields.
    pub fn membership_residual(&self) -> f64 {
        let (l1, l2) = self.levels();
        let mut worst: f64 = 0.0;
        self.for_each_node(true, |x, _, _| {
            let r1 = (self.config.f1.value_raw(x.as_slice()) - l1).abs();
            let r2 = (self.config.f2.value_raw(x.as_slice()) - l2).abs();
            worst = worst.max(r1).max(r2);
        });
        worst
    }

    /// `min ‖∇b₁ + ∇b₂‖` over the nodes.
    pub fn min_gradient_sum(&self) -> f64 {
        let m = self.model();
        let mut least = f64::INFINITY;
        self.for_each_node(true, |x, _, _| {
            let g = self.config.f1.grad_raw(x.as_slice()) + self.config.f2.grad_raw(x.as_slice());
            least = least.min(m.norm_raw(x.as_slice(), &g));
        });
        least
    }
}

/// `(∂W/∂s by central difference, (h/2)(W + V))`.
pub fn dw_ds_check(cfg: &PairConfig, s: f64, t: f64, step: f64) -> Result<(f64, f64)> {
    if !(s > step) {
        return Err(Error::Domain { what: "s for the dW/ds check (must exceed the step)", value: s });
    }
    let hi = cfg.locus(s + step, t)?.integral_w()?;
    let lo = cfg.locus(s - step, t)?.integral_w()?;
    let here = cfg.locus(s, t)?;
    let lhs = (hi - lo) / (2.0 * step);
    let rhs = 0.5 * cfg.h() * (here.integral_w()? + here.integral_v()?);
    Ok((lhs, rhs))
}

/// `(vol S(s,t), ½(V + W))`.
pub fn volume_bound(cfg: &PairConfig, s: f64, t: f64) -> Result<(f64, f64)> {
    let l = cfg.locus(s, t)?;
    Ok((l.volume(), 0.5 * (l.integral_v()? + l.integral_w()?)))
}

/// One cell of an `(s, t)` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub t: f64,
    pub vol: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub bound: f64,
    pub beta_max: f64,
}

/// Rows in `s`-major order; cells are evaluated in parallel.
pub fn sweep(cfg: &PairConfig, s_grid: &[f64], t_grid: &[f64], quad: &LocusQuadrature) -> Result<Vec<SweepRow>> {
    let cells: Vec<(f64, f64)> = s_grid.iter().flat_map(|&s| t_grid.iter().map(move |&t| (s, t))).collect();
    cells
        .par_iter()
        .map(|&(s, t)| {
            let l = cfg.locus_with(s, t, quad)?;
            let (v, w) = (l.integral_v()?, l.integral_w()?);
            Ok(SweepRow {
                s,
                t,
                vol: l.volume(),
                v,
                w,
                bound: 0.5 * (v + w),
                beta_max: l.beta_max(),
            })
        })
        .collect()
}

/// `{c₁ ≤ b₁ ≤ c₁ + r} ∩ {c₂ ≤ b₂ ≤ c₂ + r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub c1: f64,
    pub c2: f64,
    pub r: f64,
}

impl Strip {
    pub fn new(cfg: &PairConfig, c1: f64, c2: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Domain { what: "strip width", value: r });
        }
        if !(c1 + c2 > cfg.c0) {
            return Err(Error::Domain {
                what: "strip offset c1 + c2 - c0 (must be positive)",
                value: c1 + c2 - cfg.c0,
            });
        }
        Ok(Self { c1, c2, r })
    }

    /// Range `[t_lo, t_hi]` of `b₁ − b₂` at `b₁ + b₂ = σ`.
    fn t_range(&self, sigma: f64) -> (f64, f64) {
        let lo = (2.0 * self.c1 - sigma).max(sigma - 2.0 * self.c2 - 2.0 * self.r);
        let hi = (2.0 * self.c1 + 2.0 * self.r - sigma).min(sigma - 2.0 * self.c2);
        (lo, hi)
    }
}

/// Strip volume from the coarea formula for `(b₁, b₂)`:
/// `½ ∫∫ ∫_{S(s,t)} (1 − β²)^{−1/2} dμ′ dt ds`, the inner integrand being `½(V + W)`.
/// The `s`-range is split at the kink of the `t`-extent and dyadically toward `s = 0`.
pub fn strip_volume_quadrature(cfg: &PairConfig, strip: &Strip, s_nodes: usize, t_nodes: usize, quad: &LocusQuadrature) -> Result<f64> {
    let a = strip.c1 + strip.c2 - cfg.c0;
    let r = strip.r;
    let mut breaks = vec![a];
    let mut k = 1;
    while k <= 40 && r * 0.5f64.powi(k) > a {
        k += 1;
    }
    for j in (1..k).rev() {
        breaks.push(a + r * 0.5f64.powi(j));
    }
    breaks.push(a + r);
    breaks.push(a + 2.0 * r);
    let mut pieces = Vec::new();
    for win in breaks.windows(2) {
        pieces.extend(
            QuadratureRule::gauss_legendre(s_nodes, win[0], win[1])
                .nodes
                .into_iter()
                .zip(QuadratureRule::gauss_legendre(s_nodes, win[0], win[1]).weights),
        );
    }
    let inner: Result<Vec<f64>> = pieces
        .par_iter()
        .map(|&(s, ws)| {
            let (tlo, thi) = strip.t_range(s + cfg.c0);
            if thi <= tlo {
                return Ok(0.0);
            }
            let rule = QuadratureRule::gauss_legendre(t_nodes, tlo, thi);
            let mut acc = 0.0;
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                let (vol_bound_v, vol_bound_w) = {
                    let l = cfg.locus_with(s, *t, quad)?;
                    (l.integral_v()?, l.integral_w()?)
                };
                acc += wt * 0.5 * (vol_bound_v + vol_bound_w);
            }
            Ok(ws * acc)
        })
        .collect();
    Ok(0.5 * inner?.iter().sum::<f64>())
}

/// Direct Monte Carlo estimate of the strip volume in normalized coordinates.
pub fn strip_volume_mc(cfg: &PairConfig, strip: &Strip, mc: &McConfig) -> Result<MCEstimate> {
    let m = cfg.model();
    let n = m.dim();
    let (n1, n2) = (&cfg.n1, &cfg.n2);
    let mut probe = vec![0.0; n];
    probe[n - 1] = 1.0;
    // b₂ = −ln z − κ₂ and b₁ = ln(|x|²/z) − κ₁ in normalized coordinates.
    let kappa2 = -n2.value_raw(&probe);
    let kappa1 = -n1.value_raw(&probe);
    let z_lo = (-(strip.c2 + strip.r) - kappa2).exp();
    let z_hi = (-strip.c2 - kappa2).exp();
    let reach = (z_hi * (strip.c1 + strip.r + kappa1).exp()).sqrt();
    let mut lo = vec![-reach; n];
    let mut hi = vec![reach; n];
    lo[n - 1] = z_lo;
    hi[n - 1] = z_hi;
    let region = ChartBox::new(lo, hi)?;
    let (c1, c2, r) = (strip.c1, strip.c2, strip.r);
    integrate_box(
        m,
        &region,
        |x| {
            let (b1, b2) = (n1.value_raw(x), n2.value_raw(x));
            if b1 >= c1 && b1 <= c1 + r && b2 >= c2 && b2 <= c2 + r {
                1.0
            } else {
                0.0
            }
        },
        mc,
    )
}

/// Closed-form strip volume in `H³`: `π e^{a} (e^{r} − 1)²` with `a = c₁ + c₂ − c₀`.
pub fn strip_volume_h3(cfg: &PairConfig, strip: &Strip) -> Option<f64> {
    if cfg.model().dim() != 3 {
        return None;
    }
    let a = strip.c1 + strip.c2 - cfg.c0;
    Some(PI * a.exp() * strip.r.exp_m1().powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::LN_2;

    fn h(n: usize) -> ModelSpace {
        ModelSpace::hyperbolic(n).unwrap()
    }

    fn normalized(n: usize) -> PairConfig {
        PairConfig::from_ideals(h(n), Ideal::Finite(vec![0.0; n - 1]), Ideal::Infinity).unwrap()
    }

    #[test]
    fn c0_examples() {
        let cfg = normalized(3);
        assert_abs_diff_eq!(cfg.c0, 0.0, epsilon = 1e-15);
        for c in cfg.c0_along_axis(&[0.1, 1.0, 7.0]) {
            assert_abs_diff_eq!(c, cfg.c0, epsilon = 1e-10);
        }
        let sym = PairConfig::from_ideals(h(3), Ideal::Finite(vec![1.0, 0.0]), Ideal::Finite(vec![-1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(sym.c0, 0.0, epsilon = 1e-12);
        assert!(matches!(
            PairConfig::from_ideals(
                ModelSpace::euclidean(3).unwrap(),
                Ideal::Direction(vec![1.0, 0.0, 0.0]),
                Ideal::Direction(vec![-1.0, 0.0, 0.0])
            ),
            Err(Error::NotVisibility(_))
        ));
    }

    #[test]
    fn unit_circle_at_height_one() {
        let cfg = normalized(3);
        // a = ρ e^{−s/2} = 1 with s = ln 2 requires ρ² = 2.
        let t = 2f64.ln() + cfg.k;
        let l = cfg.locus(LN_2, t).unwrap();
        assert_abs_diff_eq!(l.height, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l.radius, 1.0, epsilon = 1e-14);
        assert!(l.membership_residual() < 1e-12);
        assert_relative_eq!(l.volume(), 2.0 * PI, max_relative = 1e-12);
    }

    #[test]
    fn closed_forms_in_h3() {
        let cfg = normalized(3);
        for s in [0.5, LN_2, 2.0] {
            for t in [-3.0, 0.0, 3.0] {
                let l = cfg.locus(s, t).unwrap();
                assert_relative_eq!(l.volume(), 2.0 * PI * s.exp_m1().sqrt(), max_relative = 1e-12);
                assert_relative_eq!(l.integral_v().unwrap(), 2.0 * PI, max_relative = 1e-12);
                assert_relative_eq!(l.integral_w().unwrap(), 2.0 * PI * s.exp_m1(), max_relative = 1e-12);
                assert_abs_diff_eq!(l.beta_max(), 1.0 - 2.0 * (-s).exp(), epsilon = 1e-12);
                assert!(l.beta_max() <= l.beta_bound() + 1e-9);
            }
        }
    }

    #[test]
    fn sphere_volumes_in_higher_dimensions() {
        for n in [4usize, 5] {
            let cfg = normalized(n);
            let l = cfg.locus(1.0, 0.3).unwrap();
            let exact = crate::numerics::unit_sphere_area(n - 2) * 1f64.exp_m1().powf((n as f64 - 2.0) / 2.0);
            assert_relative_eq!(l.volume(), exact, max_relative = 1e-10);
            assert!(l.membership_residual() < 1e-10);
        }
    }

    #[test]
    fn two_points_in_the_plane() {
        let cfg = normalized(2);
        for t in [-1.0, 0.0, 2.0] {
            let l = cfg.locus(1.0, t).unwrap();
            assert_eq!(l.node_count(), 2);
            assert_eq!(l.volume(), 2.0);
            assert_relative_eq!(l.integral_v().unwrap(), 2.0 / 1f64.exp_m1().sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn degenerate_and_empty_loci() {
        let cfg = normalized(3);
        let l = cfg.locus(0.0, 0.5).unwrap();
        assert_eq!(l.volume(), 0.0);
        assert_eq!(l.integral_v(), Err(Error::DegenerateLocus));
        assert!(l.membership_residual() < 1e-12);
        assert!(l.min_gradient_sum() < 1e-12);
        assert_eq!(cfg.locus(-0.1, 0.0).unwrap_err(), Error::EmptyLocus(-0.1));
        assert!(cfg.locus(1e-8, 0.0).unwrap().volume() < 1e-3);
    }

    #[test]
    fn example_circle() {
        let cfg = PairConfig::from_ideals(h(3), Ideal::Finite(vec![1.0, 0.0]), Ideal::Finite(vec![-1.0, 0.0])).unwrap();
        let c = (1.25f64).ln();
        let l = cfg.locus(2.0 * c - cfg.c0, 0.0).unwrap();
        for p in l.points() {
            assert!(p[0].abs() < 1e-12);
            assert_abs_diff_eq!(p[1] * p[1] + (p[2] - 1.25).powi(2), 9.0 / 16.0, epsilon = 1e-12);
        }
        assert_relative_eq!(l.volume(), 1.5 * PI, max_relative = 1e-12);
        let general = l.general_path_integrals().unwrap();
        assert_relative_eq!(general.vol, 1.5 * PI, max_relative = 1e-12);
        assert_relative_eq!(general.v, l.integral_v().unwrap(), max_relative = 1e-10);
        let (vol, bound) = volume_bound(&cfg, l.s, 0.0).unwrap();
        assert!(vol < bound);
        assert_relative_eq!(bound, 25.0 * PI / 16.0, max_relative = 1e-12);
    }

    #[test]
    fn dw_ds_examples() {
        let cfg = normalized(3);
        let (lhs, rhs) = dw_ds_check(&cfg, LN_2, 0.0, 1e-3).unwrap();
        assert_relative_eq!(lhs, 4.0 * PI, max_relative = 1e-6);
        assert_relative_eq!(rhs, 4.0 * PI, max_relative = 1e-10);
    }

    #[test]
    fn sweep_rows_are_ordered() {
        let cfg = normalized(3);
        let rows = sweep(&cfg, &[0.5, 1.0, 1.5], &[-1.0, 0.0, 1.0, 2.0, 3.0], &LocusQuadrature::default()).unwrap();
        assert_eq!(rows.len(), 15);
        assert_eq!((rows[5].s, rows[5].t), (1.0, -1.0));
    }

    #[test]
    fn strip_volume_estimators_agree() {
        let cfg = normalized(3);
        let c = 0.5 * LN_2;
        let strip = Strip::new(&cfg, c, c, 0.5).unwrap();
        let quad = LocusQuadrature { circle_nodes: 64, axis_nodes: 16 };
        let value = strip_volume_quadrature(&cfg, &strip, 16, 8, &quad).unwrap();
        assert_relative_eq!(value, strip_volume_h3(&cfg, &strip).unwrap(), max_relative = 1e-10);
        let shifted = Strip::new(&cfg, c + 1.0, c - 1.0, 0.5).unwrap();
        let moved = strip_volume_quadrature(&cfg, &shifted, 16, 8, &quad).unwrap();
        assert_relative_eq!(moved, value, max_relative = 1e-10);
        let mc = strip_volume_mc(&cfg, &strip, &McConfig::default()).unwrap();
        assert!(mc.agrees_with_value(value, 3.0), "{mc:?} vs {value}");
        assert!(Strip::new(&cfg, -1.0, 0.5, 0.1).is_err());
    }
}
