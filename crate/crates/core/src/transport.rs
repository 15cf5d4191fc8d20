//! Flows built from Busemann functions: the normal flow of a horosphere
//! foliation, the unit-Jacobian map `F`, and the difference and sum flows of a
//! pair of Busemann functions.
//!
//! Conventions. `F` is built from the Busemann field `b` with `∇b(p) = v`,
//! where `v` is the unit velocity at `p` of the geodesic toward `q`; its
//! boundary point is the endpoint of `−v` and its basepoint is `p`. The normal
//! flow `φ_t(x) = exp_x(t∇b(x))` then carries `p` to `q` at `t = d(p, q)`.
//!
//! For a pair `b₁, b₂` with `β = g(∇b₁, ∇b₂)`:
//!
//! * `X = (∇b₁ − ∇b₂)/‖∇b₁ − ∇b₂‖²` moves `b₁` up and `b₂` down at rate ½,
//! * `Y = (∇b₁ + ∇b₂)/‖∇b₁ + ∇b₂‖²` moves both up at rate ½ and is singular where `β = −1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::busemann::{beta_raw, mean_curvature_h, BusemannField};
use crate::error::{Error, Result};
use crate::manifold::{ModelSpace, Point};
use crate::numerics::finite_diff::{fd_directional, fd_divergence, fd_jacobian, FdConfig};
use crate::numerics::ode::{integrate, OdeMethod, Trajectory};

/// Below this value of `1 + β` the sum flow is treated as singular.
pub const SINGULAR_GAP: f64 = 1e-12;

/// `φ_t(x) = exp_x(t ∇b(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFlow {
    pub field: BusemannField,
}

impl NormalFlow {
    pub fn new(field: BusemannField) -> Self {
        Self { field }
    }

    pub fn model(&self) -> ModelSpace {
        self.field.model()
    }

    pub(crate) fn flow_raw(&self, t: f64, x: &[f64]) -> Result<DVector<f64>> {
        if t == 0.0 {
            return Ok(DVector::from_column_slice(x));
        }
        let g = self.field.grad_raw(x);
        self.model().geodesic_raw(x, &g, t)
    }

    pub fn flow(&self, t: f64, x: &Point) -> Result<Point> {
        self.model().check_point(x)?;
        let y = self.flow_raw(t, x.as_slice())?;
        self.model().point_from_vec(y)
    }

    /// A `g`-orthonormal frame of the horosphere through `x` (the complement of `∇b`).
    pub fn horosphere_frame(&self, x: &[f64]) -> Vec<DVector<f64>> {
        orthonormal_complement(self.model(), x, &self.field.grad_raw(x))
    }

    /// Determinant of `dφ_t` restricted to the horosphere through `x`,
    /// from centred differences along an orthonormal frame.
    pub fn horosphere_jacobian(&self, t: f64, x: &Point, cfg: &FdConfig) -> Result<f64> {
        self.model().check_point(x)?;
        let m = self.model();
        let xv = x.coords();
        let image = self.flow_raw(t, x.as_slice())?;
        let frame = self.horosphere_frame(x.as_slice());
        let mut pushed = Vec::with_capacity(frame.len());
        for w in &frame {
            let col: Result<Vec<f64>> = (0..m.dim())
                .map(|i| {
                    fd_directional(
                        |y| Ok(self.flow_raw(t, y.as_slice())?[i]),
                        xv,
                        w,
                        &cfg.in_half_space(m.is_hyperbolic()),
                    )
                })
                .collect();
            pushed.push(DVector::from_vec(col?));
        }
        Ok(gram_volume(m, image.as_slice(), &pushed))
    }
}

/// `g`-orthonormal basis of the orthogonal complement of `normal` at `x`.
pub(crate) fn orthonormal_complement(model: ModelSpace, x: &[f64], normal: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = model.dim();
    let nu = normal / model.norm_raw(x, normal);
    let mut basis: Vec<DVector<f64>> = vec![nu];
    for i in 0..n {
        let mut w = DVector::zeros(n);
        w[i] = 1.0;
        for b in &basis {
            let c = model.inner_raw(x, &w, b);
            w -= b * c;
        }
        let len = model.norm_raw(x, &w);
        if len > 1e-8 * model.norm_raw(x, &unit(n, i)) {
            basis.push(w / len);
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

/// `√det(g(vᵢ, vⱼ))` at `x`.
pub(crate) fn gram_volume(model: ModelSpace, x: &[f64], vectors: &[DVector<f64>]) -> f64 {
    let k = vectors.len();
    if k == 0 {
        return 1.0;
    }
    let gram = DMatrix::from_fn(k, k, |i, j| model.inner_raw(x, &vectors[i], &vectors[j]));
    gram.determinant().max(0.0).sqrt()
}

/// Riemannian Jacobian determinant of a chart map at `x`.
pub(crate) fn riemannian_jacobian<F>(model: ModelSpace, map: F, x: &DVector<f64>, cfg: &FdConfig) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let image = map(x)?;
    let jac = fd_jacobian(&map, x, &cfg.in_half_space(model.is_hyperbolic()))?;
    Ok(jac.determinant() * model.density_raw(image.as_slice()) / model.density_raw(x.as_slice()))
}

/// `α(t) = (1/h) ln(e^{ht} + e^{ht₀} − 1)` for `h > 0` and `α(t) = t + t₀` for `h = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaMap {
    pub h: f64,
    pub t0: f64,
}

impl AlphaMap {
    pub fn new(h: f64, t0: f64) -> Result<Self> {
        if !(h >= 0.0) {
            return Err(Error::Domain { what: "mean curvature h", value: h });
        }
        if !(t0 > 0.0) {
            return Err(Error::Domain { what: "alpha offset t0", value: t0 });
        }
        Ok(Self { h, t0 })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (h, t0) = (self.h, self.t0);
        if h == 0.0 {
            return t + t0;
        }
        let c = (h * t0).exp_m1();
        if h * t > 0.0 {
            t + (c * (-h * t).exp()).ln_1p() / h
        } else {
            ((h * t).exp() + c).ln() / h
        }
    }

    /// `α′(t) = e^{ht}/(e^{ht} + e^{ht₀} − 1)`.
    pub fn derivative(&self, t: f64) -> f64 {
        if self.h == 0.0 {
            return 1.0;
        }
        1.0 / (1.0 + (self.h * self.t0).exp_m1() * (-self.h * t).exp())
    }

    /// `α′(t) e^{hα(t) − ht} − 1`, identically zero for the closed form.
    pub fn residual(&self, t: f64) -> f64 {
        self.derivative(t) * (self.h * (self.eval(t) - t)).exp() - 1.0
    }

    /// Infimum `m = (1/h) ln(e^{ht₀} − 1)` of the range of `α`; `−∞` for `h = 0`.
    pub fn infimum(&self) -> f64 {
        if self.h == 0.0 {
            f64::NEG_INFINITY
        } else {
            (self.h * self.t0).exp_m1().ln() / self.h
        }
    }

    pub fn inverse(&self, u: f64) -> Result<f64> {
        let h = self.h;
        if h == 0.0 {
            return Ok(u - self.t0);
        }
        let c = (h * self.t0).exp_m1();
        if !(u > self.infimum()) {
            return Err(Error::Domain {
                what: "inverse of alpha (argument must exceed the range infimum)",
                value: u,
            });
        }
        let r = -c * (-h * u).exp();
        if r > -1.0 {
            Ok(u + r.ln_1p() / h)
        } else {
            Err(Error::Domain {
                what: "inverse of alpha (argument must exceed the range infimum)",
                value: u,
            })
        }
    }
}

/// The map `F(φ(t, x)) = φ(α(t), x)` for `x` on the horosphere through `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapF {
    pub p: Point,
    pub q: Point,
    pub flow: NormalFlow,
    pub alpha: AlphaMap,
}

impl MapF {
    pub fn new(model: ModelSpace, p: &Point, q: &Point) -> Result<Self> {
        model.check_point(p)?;
        model.check_point(q)?;
        let t0 = model.distance(p, q)?;
        if t0 == 0.0 {
            return Err(Error::CoincidentPoints);
        }
        let v = model.log(p, q)?.normalized()?;
        let xi = model.geodesic_endpoint(&v.scaled(-1.0))?;
        let field = BusemannField::new(model, xi, p.clone())?;
        Ok(Self {
            p: p.clone(),
            q: q.clone(),
            flow: NormalFlow::new(field),
            alpha: AlphaMap::new(mean_curvature_h(model), t0)?,
        })
    }

    pub fn model(&self) -> ModelSpace {
        self.flow.model()
    }

    pub fn field(&self) -> &BusemannField {
        &self.flow.field
    }

    /// Lower bound `m` of `b` on the image `{b > m}`.
    pub fn image_infimum(&self) -> f64 {
        self.alpha.infimum()
    }

    pub fn in_image(&self, y: &Point) -> Result<bool> {
        Ok(self.field().value(y)? > self.image_infimum())
    }

    pub(crate) fn apply_raw(&self, x: &[f64]) -> Result<DVector<f64>> {
        let t = self.field().value_raw(x);
        self.flow.flow_raw(self.alpha.eval(t) - t, x)
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        self.model().check_point(x)?;
        let y = self.apply_raw(x.as_slice())?;
        self.model().point_from_vec(y)
    }

    /// `F⁻¹` on the image; points with `b ≤ m` have no preimage.
    pub(crate) fn inverse_raw(&self, y: &[f64]) -> Result<DVector<f64>> {
        let u = self.field().value_raw(y);
        let t = self.alpha.inverse(u)?;
        self.flow.flow_raw(t - u, y)
    }

    pub fn inverse(&self, y: &Point) -> Result<Point> {
        self.model().check_point(y)?;
        let x = self.inverse_raw(y.as_slice())?;
        self.model().point_from_vec(x)
    }

    /// Riemannian Jacobian determinant of `F` by finite differences.
    pub fn jacobian_det(&self, x: &Point, cfg: &FdConfig) -> Result<f64> {
        self.model().check_point(x)?;
        riemannian_jacobian(self.model(), |y| self.apply_raw(y.as_slice()), x.coords(), cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    /// `X`, tracking `b₁ + t/2`, `b₂ − t/2`.
    Difference,
    /// `Y`, tracking `b₁ + s/2`, `b₂ + s/2`.
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFlow {
    pub f1: BusemannField,
    pub f2: BusemannField,
    pub kind: FlowKind,
}

impl PairFlow {
    pub fn new(f1: BusemannField, f2: BusemannField, kind: FlowKind) -> Result<Self> {
        if f1.model() != f2.model() {
            return Err(Error::ModelMismatch(f1.model().to_string(), f2.model().to_string()));
        }
        if f1.xi() == f2.xi() {
            return Err(Error::CoincidentBoundaryPoints);
        }
        Ok(Self { f1, f2, kind })
    }

    pub fn model(&self) -> ModelSpace {
        self.f1.model()
    }

    pub fn beta_raw(&self, x: &[f64]) -> f64 {
        beta_raw(&self.f1, &self.f2, x)
    }

    /// Expected rates `(d b₁/dt, d b₂/dt)` along the flow.
    pub fn tracking_rates(&self) -> (f64, f64) {
        match self.kind {
            FlowKind::Difference => (0.5, -0.5),
            FlowKind::Sum => (0.5, 0.5),
        }
    }

    /// `∇b₁ − ∇b₂` without normalization.
    pub(crate) fn raw_difference(&self, x: &[f64]) -> DVector<f64> {
        self.f1.grad_raw(x) - self.f2.grad_raw(x)
    }

    pub(crate) fn field_raw(&self, x: &[f64]) -> Result<DVector<f64>> {
        let m = self.model();
        if m.is_hyperbolic() && !(x[m.dim() - 1] > 0.0) {
            return Err(Error::OutsideChart(x[m.dim() - 1]));
        }
        let (g1, g2) = (self.f1.grad_raw(x), self.f2.grad_raw(x));
        let v = match self.kind {
            FlowKind::Difference => g1 - g2,
            FlowKind::Sum => g1 + g2,
        };
        let len2 = m.inner_raw(x, &v, &v);
        // ‖∇b₁ ± ∇b₂‖² = 2(1 ± β)
        if 0.5 * len2 <= SINGULAR_GAP {
            return Err(Error::SingularFlow(0.5 * len2));
        }
        Ok(v / len2)
    }

    pub fn field_at(&self, x: &Point) -> Result<DVector<f64>> {
        self.model().check_point(x)?;
        self.field_raw(x.as_slice())
    }

    pub fn trajectory(&self, x: &Point, duration: f64, method: &OdeMethod) -> Result<Trajectory> {
        self.model().check_point(x)?;
        if self.kind == FlowKind::Sum {
            let gap = 1.0 + self.beta_raw(x.as_slice());
            if gap <= SINGULAR_GAP {
                return Err(Error::SingularFlow(gap));
            }
        }
        integrate(|y| self.field_raw(y.as_slice()), x.coords(), duration, method)
    }

    /// End point of the flow after `duration`.
    pub fn step(&self, x: &Point, duration: f64, method: &OdeMethod) -> Result<Point> {
        let tr = self.trajectory(x, duration, method)?;
        self.model().point_from_vec(tr.final_state().clone())
    }

    pub(crate) fn flow_map_raw(&self, x: &DVector<f64>, duration: f64, method: &OdeMethod) -> Result<DVector<f64>> {
        let tr = integrate(|y| self.field_raw(y.as_slice()), x, duration, method)?;
        Ok(tr.final_state().clone())
    }

    /// Divergence of the flow field by the chart formula `(1/√g) ∂ᵢ(√g Vⁱ)`.
    pub fn divergence_fd(&self, x: &Point, cfg: &FdConfig) -> Result<f64> {
        let m = self.model();
        m.check_point(x)?;
        fd_divergence(
            |y| self.field_raw(y.as_slice()),
            |y| m.density_raw(y.as_slice()),
            x.coords(),
            &cfg.in_half_space(m.is_hyperbolic()),
        )
    }

    /// Divergence of the unnormalized field `∇b₁ − ∇b₂`.
    pub fn raw_difference_divergence_fd(&self, x: &Point, cfg: &FdConfig) -> Result<f64> {
        let m = self.model();
        m.check_point(x)?;
        fd_divergence(
            |y| Ok(self.raw_difference(y.as_slice())),
            |y| m.density_raw(y.as_slice()),
            x.coords(),
            &cfg.in_half_space(m.is_hyperbolic()),
        )
    }

    /// `X[ln 1/(1−β)]` for the difference flow and `Y[ln 1/(1+β)] + h/(1+β)` for the sum flow,
    /// with the directional derivative taken by finite differences.
    pub fn divergence_identity(&self, x: &Point, cfg: &FdConfig) -> Result<f64> {
        let m = self.model();
        m.check_point(x)?;
        let v = self.field_raw(x.as_slice())?;
        let sign = match self.kind {
            FlowKind::Difference => -1.0,
            FlowKind::Sum => 1.0,
        };
        let log_weight = |y: &DVector<f64>| Ok(-(1.0 + sign * self.beta_raw(y.as_slice())).ln());
        let derivative = fd_directional(log_weight, x.coords(), &v, &cfg.in_half_space(m.is_hyperbolic()))?;
        Ok(match self.kind {
            FlowKind::Difference => derivative,
            FlowKind::Sum => derivative + mean_curvature_h(m) / (1.0 + self.beta_raw(x.as_slice())),
        })
    }

    /// Riemannian Jacobian determinant of the time-`duration` flow map by finite differences.
    pub fn flow_density_fd(&self, x: &Point, duration: f64, method: &OdeMethod, cfg: &FdConfig) -> Result<f64> {
        self.model().check_point(x)?;
        if duration == 0.0 {
            return Ok(1.0);
        }
        riemannian_jacobian(self.model(), |y| self.flow_map_raw(y, duration, method), x.coords(), cfg)
    }

    /// `(1−β)/(1−β∘φ_t)` for `X`; `exp(∫₀ˢ h/(1+β∘ψ_k) dk)·(1+β)/(1+β∘ψ_s)` for `Y`, the
    /// integral accumulated along the trajectory as an extra ODE component.
    pub fn flow_density_closed(&self, x: &Point, duration: f64, method: &OdeMethod) -> Result<f64> {
        let m = self.model();
        m.check_point(x)?;
        let n = m.dim();
        let h = mean_curvature_h(m);
        let b0 = self.beta_raw(x.as_slice());
        let mut state = DVector::zeros(n + 1);
        state.rows_mut(0, n).copy_from(x.coords());
        let tr = integrate(
            |s| {
                let y = s.rows(0, n).into_owned();
                let v = self.field_raw(y.as_slice())?;
                let mut out = DVector::zeros(n + 1);
                out.rows_mut(0, n).copy_from(&v);
                out[n] = h / (1.0 + self.beta_raw(y.as_slice()));
                Ok(out)
            },
            &state,
            duration,
            method,
        )?;
        let end = tr.final_state();
        let b1 = self.beta_raw(&end.as_slice()[..n]);
        Ok(match self.kind {
            FlowKind::Difference => (1.0 - b0) / (1.0 - b1),
            FlowKind::Sum => end[n].exp() * (1.0 + b0) / (1.0 + b1),
        })
    }

    /// `max_i |dΦ(∇bᵢ(x)) − ∇bᵢ(Φ(x))|` relative to `|∇bᵢ(Φ(x))|`, over both fields.
    pub fn gradient_pushforward_residual(&self, x: &Point, duration: f64, method: &OdeMethod, cfg: &FdConfig) -> Result<f64> {
        let m = self.model();
        m.check_point(x)?;
        let image = self.flow_map_raw(x.coords(), duration, method)?;
        let jac = fd_jacobian(|y| self.flow_map_raw(y, duration, method), x.coords(), &cfg.in_half_space(m.is_hyperbolic()))?;
        let mut worst: f64 = 0.0;
        for f in [&self.f1, &self.f2] {
            let pushed = &jac * f.grad_raw(x.as_slice());
            let target = f.grad_raw(image.as_slice());
            worst = worst.max((pushed - &target).amax() / target.amax());
        }
        Ok(worst)
    }

    /// `max_i |dbᵢ(dΦ w) − dbᵢ(w)|` over the chart basis `w`: the flow preserves the
    /// differentials of both Busemann functions.
    pub fn differential_pullback_residual(&self, x: &Point, duration: f64, method: &OdeMethod, cfg: &FdConfig) -> Result<f64> {
        let m = self.model();
        m.check_point(x)?;
        let image = self.flow_map_raw(x.coords(), duration, method)?;
        let jac = fd_jacobian(|y| self.flow_map_raw(y, duration, method), x.coords(), &cfg.in_half_space(m.is_hyperbolic()))?;
        let mut worst: f64 = 0.0;
        for f in [&self.f1, &self.f2] {
            let at_image = f.differential_raw(image.as_slice());
            let at_source = f.differential_raw(x.as_slice());
            let pulled = jac.transpose() * at_image;
            worst = worst.max((pulled - &at_source).amax() / at_source.amax());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Ideal;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    fn h(n: usize) -> ModelSpace {
        ModelSpace::hyperbolic(n).unwrap()
    }

    #[test]
    fn normal_flow_examples() {
        let m = h(3);
        let f = NormalFlow::new(BusemannField::toward(m, Ideal::Infinity).unwrap());
        let x = m.reference_point();
        let y = f.flow(1.0, &x).unwrap();
        assert_abs_diff_eq!(y.height(), (-1f64).exp(), epsilon = 1e-15);
        assert_eq!(f.flow(0.0, &x).unwrap(), x);

        let side = NormalFlow::new(BusemannField::toward(m, Ideal::Finite(vec![0.5, -1.0])).unwrap());
        let x = m.point(&[0.3, 0.2, 0.8]).unwrap();
        let b0 = side.field.value(&x).unwrap();
        for t in [-1.5, 0.7, 3.0] {
            let y = side.flow(t, &x).unwrap();
            assert_abs_diff_eq!(side.field.value(&y).unwrap(), b0 + t, epsilon = 1e-10);
            let g = side.field.gradient(&x).unwrap();
            let z = m.geodesic(&x, &g, t).unwrap();
            assert!((y.coords() - z.coords()).amax() < 1e-14);
        }

        let e = ModelSpace::euclidean(3).unwrap();
        let f = NormalFlow::new(BusemannField::toward(e, Ideal::Direction(vec![1.0, 0.0, 0.0])).unwrap());
        let y = f.flow(2.0, &e.reference_point()).unwrap();
        assert_eq!(y.as_slice(), &[-2.0, 0.0, 0.0]);
    }

    #[test]
    fn horosphere_jacobian_is_exponential_in_h() {
        let cfg = FdConfig::first_order();
        for (m, hval) in [(h(2), 1.0), (h(3), 2.0), (ModelSpace::euclidean(3).unwrap(), 0.0)] {
            let xi = if m.is_hyperbolic() {
                Ideal::Finite(vec![0.4; m.dim() - 1])
            } else {
                Ideal::Direction(vec![0.0, 0.6, 0.8])
            };
            let f = NormalFlow::new(BusemannField::toward(m, xi).unwrap());
            let mut c = vec![0.1; m.dim()];
            c[m.dim() - 1] = 1.2;
            let x = m.point(&c).unwrap();
            for t in [0.0, 0.5, 1.0, 2.0] {
                let j = f.horosphere_jacobian(t, &x, &cfg).unwrap();
                assert!((j / (hval * t).exp() - 1.0).abs() < 1e-6, "{m} t={t}: {j}");
            }
        }
    }

    #[test]
    fn alpha_examples() {
        let a = AlphaMap::new(2.0, 1.0).unwrap();
        assert_abs_diff_eq!(a.eval(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.eval(1.0), 0.5 * (2.0 * E * E - 1.0).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(a.infimum(), 0.5 * (E * E - 1.0).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(a.infimum(), 0.927293, epsilon = 1e-6);
        assert_abs_diff_eq!(a.eval(-40.0), a.infimum(), epsilon = 1e-15);
        let flat = AlphaMap::new(0.0, 3.0).unwrap();
        assert_eq!(flat.eval(5.0), 8.0);
        assert_eq!(flat.inverse(8.0).unwrap(), 5.0);
    }

    #[test]
    fn alpha_solves_its_ode() {
        let a = AlphaMap::new(2.0, 1.0).unwrap();
        let x0 = DVector::from_vec(vec![1.0, 0.0]);
        let tr = integrate(
            |s| Ok(DVector::from_vec(vec![(-a.h * (s[0] - s[1])).exp(), 1.0])),
            &x0,
            1.0,
            &OdeMethod::adaptive(),
        )
        .unwrap();
        assert_abs_diff_eq!(tr.final_state()[0], a.eval(1.0), epsilon = 1e-10);
        for t in [-5.0, -1.0, 0.0, 0.3, 4.0, 30.0] {
            assert!(a.residual(t).abs() < 1e-10);
            if t < 10.0 {
                assert!(a.derivative(t) < 1.0);
            }
            assert_abs_diff_eq!(a.inverse(a.eval(t)).unwrap(), t, epsilon = 1e-9);
        }
        assert!(a.inverse(a.infimum()).is_err());
    }

    #[test]
    fn map_f_half_plane_closed_form() {
        let m = h(2);
        let p = m.point(&[0.0, 1.0]).unwrap();
        let q = m.point(&[0.0, (-1f64).exp()]).unwrap();
        let f = MapF::new(m, &p, &q).unwrap();
        assert_eq!(f.field().xi(), &Ideal::Infinity);
        let fp = f.apply(&p).unwrap();
        assert!((fp.coords() - q.coords()).amax() < 1e-15);
        let c = E - 1.0;
        for (x, y) in [(0.3, 0.5), (-2.0, 3.0), (1.0, 0.01)] {
            let img = f.apply(&m.point(&[x, y]).unwrap()).unwrap();
            assert_abs_diff_eq!(img.as_slice()[0], x, epsilon = 1e-15);
            assert_abs_diff_eq!(img.as_slice()[1], y / (1.0 + c * y), epsilon = 1e-14);
        }
    }

    #[test]
    fn map_f_is_translation_in_euclidean_space() {
        let m = ModelSpace::euclidean(3).unwrap();
        let p = m.point(&[1.0, 0.0, 2.0]).unwrap();
        let q = m.point(&[0.0, 3.0, -1.0]).unwrap();
        let f = MapF::new(m, &p, &q).unwrap();
        let x = m.point(&[5.0, 5.0, 5.0]).unwrap();
        let y = f.apply(&x).unwrap();
        let expected = x.coords() + (q.coords() - p.coords());
        assert!((y.coords() - expected).amax() < 1e-13);
        assert!(MapF::new(m, &p, &p).is_err());
    }

    #[test]
    fn map_f_unit_jacobian_and_inverse() {
        let m = h(3);
        let p = m.point(&[0.2, -0.1, 1.0]).unwrap();
        let q = m.point(&[0.9, 0.4, 0.6]).unwrap();
        let f = MapF::new(m, &p, &q).unwrap();
        assert!((f.apply(&p).unwrap().coords() - q.coords()).amax() < 1e-10);
        let x = m.point(&[0.5, 0.5, 0.7]).unwrap();
        let det = f.jacobian_det(&x, &FdConfig::first_order()).unwrap();
        assert!((det - 1.0).abs() < 1e-7, "{det}");
        let y = f.apply(&x).unwrap();
        assert!(f.in_image(&y).unwrap());
        let back = f.inverse(&y).unwrap();
        assert!((back.coords() - x.coords()).amax() < 1e-10);
    }

    fn normalized_pair(n: usize) -> (BusemannField, BusemannField) {
        let m = h(n);
        (
            BusemannField::toward(m, Ideal::Finite(vec![0.0; n - 1])).unwrap(),
            BusemannField::toward(m, Ideal::Infinity).unwrap(),
        )
    }

    #[test]
    fn pair_flows_track_busemann_levels() {
        let (f1, f2) = normalized_pair(3);
        let m = f1.model();
        let x = m.point(&[0.6, -0.2, 0.9]).unwrap();
        for kind in [FlowKind::Difference, FlowKind::Sum] {
            let pf = PairFlow::new(f1.clone(), f2.clone(), kind).unwrap();
            let (r1, r2) = pf.tracking_rates();
            let y = pf.step(&x, 2.0, &OdeMethod::default()).unwrap();
            assert_abs_diff_eq!(f1.value(&y).unwrap() - f1.value(&x).unwrap(), 2.0 * r1, epsilon = 1e-8);
            assert_abs_diff_eq!(f2.value(&y).unwrap() - f2.value(&x).unwrap(), 2.0 * r2, epsilon = 1e-8);
            assert_eq!(pf.step(&x, 0.0, &OdeMethod::default()).unwrap(), x);
        }
    }

    #[test]
    fn sum_flow_is_singular_on_the_axis() {
        let (f1, f2) = normalized_pair(3);
        let m = f1.model();
        let pf = PairFlow::new(f1, f2, FlowKind::Sum).unwrap();
        let on_axis = m.point(&[0.0, 0.0, 1.3]).unwrap();
        assert!(matches!(pf.step(&on_axis, 1.0, &OdeMethod::default()), Err(Error::SingularFlow(_))));
    }

    #[test]
    fn divergence_identities() {
        let (f1, f2) = normalized_pair(3);
        let m = f1.model();
        let cfg = FdConfig::first_order();
        let x = m.point(&[0.5, 0.3, 0.8]).unwrap();
        let pf = PairFlow::new(f1.clone(), f2.clone(), FlowKind::Difference).unwrap();
        assert!(pf.raw_difference_divergence_fd(&x, &cfg).unwrap().abs() < 1e-6);
        assert!(pf.divergence_fd(&x, &cfg).unwrap().abs() < 1e-6);
        assert!(pf.divergence_identity(&x, &cfg).unwrap().abs() < 1e-6);
        let pf = PairFlow::new(f1, f2, FlowKind::Sum).unwrap();
        let lhs = pf.divergence_fd(&x, &cfg).unwrap();
        let rhs = pf.divergence_identity(&x, &cfg).unwrap();
        assert!((lhs - rhs).abs() < 1e-5, "{lhs} vs {rhs}");
    }

    #[test]
    fn flow_densities_match_closed_forms() {
        let (f1, f2) = normalized_pair(3);
        let m = f1.model();
        let cfg = FdConfig::first_order();
        let method = OdeMethod::default();
        let x = m.point(&[0.7, 0.1, 0.6]).unwrap();
        let s0 = f1.value(&x).unwrap() + f2.value(&x).unwrap();
        let pf = PairFlow::new(f1.clone(), f2.clone(), FlowKind::Difference).unwrap();
        assert!((pf.flow_density_fd(&x, 1.0, &method, &cfg).unwrap() - 1.0).abs() < 1e-6);
        assert!((pf.flow_density_closed(&x, 1.0, &method).unwrap() - 1.0).abs() < 1e-12);

        let pf = PairFlow::new(f1, f2, FlowKind::Sum).unwrap();
        let s = 1.0;
        let hval = 2.0;
        let exact = (((s0 + s).exp() - 1.0) / (s0.exp() - 1.0)).powf(hval / 2.0) * (1.0 - (-s0).exp())
            / (1.0 - (-(s0 + s)).exp());
        let closed = pf.flow_density_closed(&x, s, &method).unwrap();
        let fd = pf.flow_density_fd(&x, s, &method, &cfg).unwrap();
        assert!((closed / exact - 1.0).abs() < 1e-6, "{closed} vs {exact}");
        assert!((fd / exact - 1.0).abs() < 1e-5, "{fd} vs {exact}");
        assert_eq!(pf.flow_density_fd(&x, 0.0, &method, &cfg).unwrap(), 1.0);
    }

    #[test]
    fn difference_flow_preserves_gradients() {
        let (f1, f2) = normalized_pair(3);
        let m = f1.model();
        let x = m.point(&[0.4, -0.5, 1.1]).unwrap();
        let cfg = FdConfig::first_order();
        let pf = PairFlow::new(f1.clone(), f2.clone(), FlowKind::Difference).unwrap();
        assert!(pf.gradient_pushforward_residual(&x, 1.0, &OdeMethod::default(), &cfg).unwrap() < 1e-6);
        let pf = PairFlow::new(f1, f2, FlowKind::Sum).unwrap();
        assert!(pf.differential_pullback_residual(&x, 1.0, &OdeMethod::default(), &cfg).unwrap() < 1e-6);
    }
}
