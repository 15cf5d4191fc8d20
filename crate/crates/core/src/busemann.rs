//! Busemann functions of the model spaces, their gradients and Hessians.
//!
//! Closed forms in the half-space chart, with `x = (x̄, z)` and basepoint `o`:
//!
//! * toward `∞`: `b(x) = ln(z_o / z)`
//! * toward a finite `ξ`: `b(x) = ln((|x̄ − ξ|² + z²)/z) − ln((|ō − ξ|² + z_o²)/z_o)`
//!
//! and in Euclidean space toward the unit direction `u`: `b(x) = −⟨x − o, u⟩`.
//!
//! Sign convention: the Hessian operator `U(w) = ∇_w ∇b` is positive
//! semi-definite and the mean curvature of horospheres is `h = tr U = Δb ≥ 0`,
//! so `h = n − 1` in `Hⁿ` and `h = 0` in `Eⁿ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Ideal, Isometry, ModelKind, ModelSpace, Point, TangentVec};
use crate::numerics::finite_diff::{fd_divergence, fd_gradient, fd_hessian, FdConfig};

/// The Busemann function of a point at infinity, normalized to vanish at `basepoint`.
#[derive(Debug, Clone, PartialEq)]
pub struct BusemannField {
    model: ModelSpace,
    xi: Ideal,
    basepoint: Point,
    offset: f64,
}

impl BusemannField {
    pub fn new(model: ModelSpace, xi: Ideal, basepoint: Point) -> Result<Self> {
        model.check_ideal(&xi)?;
        model.check_point(&basepoint)?;
        let mut f = Self {
            model,
            xi,
            basepoint,
            offset: 0.0,
        };
        f.offset = f.unnormalized(f.basepoint.as_slice());
        Ok(f)
    }

    /// Field toward `xi` with the default basepoint.
    pub fn toward(model: ModelSpace, xi: Ideal) -> Result<Self> {
        let base = model.reference_point();
        Self::new(model, xi, base)
    }

    /// The Busemann function of the geodesic ray with initial velocity `v`.
    pub fn of_ray(v: &TangentVec) -> Result<Self> {
        let model = v.base().model();
        let xi = model.geodesic_endpoint(v)?;
        Self::new(model, xi, v.base().clone())
    }

    pub fn model(&self) -> ModelSpace {
        self.model
    }

    pub fn xi(&self) -> &Ideal {
        &self.xi
    }

    pub fn basepoint(&self) -> &Point {
        &self.basepoint
    }

    fn unnormalized(&self, x: &[f64]) -> f64 {
        let n = self.model.dim();
        match &self.xi {
            Ideal::Infinity => -x[n - 1].ln(),
            Ideal::Finite(xi) => {
                let z = x[n - 1];
                let r2: f64 = xi.iter().zip(x).map(|(a, b)| (b - a) * (b - a)).sum::<f64>() + z * z;
                (r2 / z).ln()
            }
            Ideal::Direction(u) => -u.iter().zip(x).map(|(a, b)| a * b).sum::<f64>(),
        }
    }

    pub fn value(&self, x: &Point) -> Result<f64> {
        self.model.check_point(x)?;
        Ok(self.value_raw(x.as_slice()))
    }

    #[inline]
    pub(crate) fn value_raw(&self, x: &[f64]) -> f64 {
        self.unnormalized(x) - self.offset
    }

    /// Chart differential `∂b`.
    pub(crate) fn differential_raw(&self, x: &[f64]) -> DVector<f64> {
        let n = self.model.dim();
        match &self.xi {
            Ideal::Infinity => {
                let mut d = DVector::zeros(n);
                d[n - 1] = -1.0 / x[n - 1];
                d
            }
            Ideal::Finite(xi) => {
                let z = x[n - 1];
                let r2: f64 = xi.iter().zip(x).map(|(a, b)| (b - a) * (b - a)).sum::<f64>() + z * z;
                let mut d = DVector::zeros(n);
                for i in 0..n - 1 {
                    d[i] = 2.0 * (x[i] - xi[i]) / r2;
                }
                d[n - 1] = 2.0 * z / r2 - 1.0 / z;
                d
            }
            Ideal::Direction(u) => -DVector::from_column_slice(u),
        }
    }

    /// Chart components of the Riemannian gradient `∇b = ∂b / λ`.
    #[inline]
    pub(crate) fn grad_raw(&self, x: &[f64]) -> DVector<f64> {
        self.differential_raw(x) / self.model.conformal_factor(x)
    }

    pub fn gradient(&self, x: &Point) -> Result<TangentVec> {
        self.model.check_point(x)?;
        Ok(TangentVec::from_parts(x.clone(), self.grad_raw(x.as_slice())))
    }

    /// Unit velocity at the basepoint of the ray toward `xi`, along which `b` decreases at unit rate.
    pub fn ray_direction(&self) -> TangentVec {
        let o = self.basepoint.as_slice();
        TangentVec::from_parts(self.basepoint.clone(), -self.grad_raw(o))
    }

    /// The pre-limit quantity `d(x, γ(T)) − T` along the ray from the basepoint.
    pub fn value_truncated(&self, x: &Point, horizon: f64) -> Result<f64> {
        self.model.check_point(x)?;
        if !(horizon > 0.0) {
            return Err(Error::Domain {
                what: "truncation horizon",
                value: horizon,
            });
        }
        let dir = self.ray_direction();
        let far = self
            .model
            .geodesic_raw(self.basepoint.as_slice(), dir.components(), horizon)?;
        Ok(self.model.dist_raw(x.as_slice(), far.as_slice()) - horizon)
    }

    /// Closed-form Hessian operator `w ↦ ∇_w ∇b`.
    pub fn hessian(&self, x: &Point) -> Result<HessianOperator> {
        self.model.check_point(x)?;
        let n = self.model.dim();
        let matrix = match self.model.kind() {
            ModelKind::Euclidean => DMatrix::zeros(n, n),
            ModelKind::Hyperbolic => {
                let z = x.height();
                let d = self.differential_raw(x.as_slice());
                DMatrix::identity(n, n) - (&d * d.transpose()) * (z * z)
            }
        };
        Ok(HessianOperator {
            at: x.clone(),
            field: self.clone(),
            matrix,
        })
    }

    /// Hessian operator from second finite differences of `b` corrected by the
    /// Christoffel symbols of the conformal metric.
    pub fn hessian_fd(&self, x: &Point, cfg: &FdConfig) -> Result<HessianOperator> {
        self.model.check_point(x)?;
        let cfg = cfg.in_half_space(self.model.is_hyperbolic());
        let f = |y: &DVector<f64>| Ok(self.value_raw(y.as_slice()));
        let xv = x.coords().clone();
        let second = fd_hessian(f, &xv, &cfg)?;
        let db = fd_gradient(f, &xv, &FdConfig::first_order().in_half_space(cfg.half_space))?;
        let n = self.model.dim();
        let lambda = self.model.conformal_factor(x.as_slice());
        let mut dphi = DVector::zeros(n);
        if self.model.is_hyperbolic() {
            dphi[n - 1] = -1.0 / x.height();
        }
        let cross = dphi.dot(&db);
        let mut cov = second;
        for i in 0..n {
            for j in 0..n {
                let gamma = db[i] * dphi[j] + db[j] * dphi[i] - if i == j { cross } else { 0.0 };
                cov[(i, j)] -= gamma;
            }
        }
        Ok(HessianOperator {
            at: x.clone(),
            field: self.clone(),
            matrix: cov / lambda,
        })
    }

    /// Laplacian `Δb = div ∇b` by finite differences of the closed-form gradient.
    pub fn laplacian_fd(&self, x: &Point, cfg: &FdConfig) -> Result<f64> {
        self.model.check_point(x)?;
        let cfg = cfg.in_half_space(self.model.is_hyperbolic());
        fd_divergence(
            |y| Ok(self.grad_raw(y.as_slice())),
            |y| self.model.density_raw(y.as_slice()),
            x.coords(),
            &cfg,
        )
    }

    /// The field `b ∘ Φ⁻¹`: toward `Φ(ξ)` with basepoint `Φ(o)`.
    pub fn transported(&self, iso: &Isometry) -> Result<BusemannField> {
        if iso.model() != self.model {
            return Err(Error::ModelMismatch(self.model.to_string(), iso.model().to_string()));
        }
        BusemannField::new(self.model, iso.apply_ideal(&self.xi), iso.apply(&self.basepoint)?)
    }

    /// Same boundary point, new basepoint.
    pub fn rebased(&self, basepoint: Point) -> Result<BusemannField> {
        BusemannField::new(self.model, self.xi.clone(), basepoint)
    }
}

/// The operator `U(w) = ∇_w ∇b` at a point, as a chart matrix of mixed components.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianOperator {
    pub at: Point,
    pub field: BusemannField,
    pub matrix: DMatrix<f64>,
}

impl HessianOperator {
    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Eigenvalues in ascending order. The metric is conformal, so the
    /// matrix of `U` is symmetric whenever `U` is self-adjoint.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    pub fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.matrix * w
    }

    /// `g(U w₁, w₂)`.
    pub fn bilinear(&self, w1: &DVector<f64>, w2: &DVector<f64>) -> f64 {
        self.field.model().inner_raw(self.at.as_slice(), &self.apply(w1), w2)
    }

    /// `|U(∇b)|` in chart components.
    pub fn gradient_residual(&self) -> f64 {
        self.apply(&self.field.grad_raw(self.at.as_slice())).amax()
    }

    pub fn max_abs_difference(&self, other: &HessianOperator) -> f64 {
        (&self.matrix - &other.matrix).amax()
    }
}

/// Mean curvature of horospheres: `n − 1` in `Hⁿ`, `0` in `Eⁿ`.
pub fn mean_curvature_h(model: ModelSpace) -> f64 {
    match model.kind() {
        ModelKind::Euclidean => 0.0,
        ModelKind::Hyperbolic => (model.dim() - 1) as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceSource {
    ClosedForm,
    FiniteDifferenceHessian,
    /// Divergence of the gradient field.
    Laplacian,
}

/// Mean and sample standard deviation of `tr U` over `points`.
pub fn estimate_h(f: &BusemannField, points: &[Point], source: TraceSource) -> Result<(f64, f64)> {
    if points.is_empty() {
        return Err(Error::Config("estimate_h needs at least one sample point".into()));
    }
    let mut values = Vec::with_capacity(points.len());
    for p in points {
        let v = match source {
            TraceSource::ClosedForm => f.hessian(p)?.trace(),
            TraceSource::FiniteDifferenceHessian => f.hessian_fd(p, &FdConfig::second_order())?.trace(),
            TraceSource::Laplacian => f.laplacian_fd(p, &FdConfig::first_order())?,
        };
        values.push(v);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok((mean, var.sqrt()))
}

/// `β = g(∇b₁, ∇b₂)` clamped to `[−1, 1]`.
pub fn beta(f1: &BusemannField, f2: &BusemannField, x: &Point) -> Result<f64> {
    if f1.model() != f2.model() {
        return Err(Error::ModelMismatch(f1.model().to_string(), f2.model().to_string()));
    }
    f1.model.check_point(x)?;
    Ok(beta_raw(f1, f2, x.as_slice()))
}

#[inline]
pub(crate) fn beta_raw(f1: &BusemannField, f2: &BusemannField, x: &[f64]) -> f64 {
    let lambda = f1.model.conformal_factor(x);
    (f1.differential_raw(x).dot(&f2.differential_raw(x)) / lambda).clamp(-1.0, 1.0)
}

/// Outcome of probing `{b₁ ≤ c₁} ∩ {b₂ ≤ c₂}` along geodesic rays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SublevelProbe {
    pub rays: usize,
    /// Rays still inside the set at the probe radius.
    pub escaping: usize,
    /// Largest sampled distance from the centre at which a ray point lies in the set.
    pub max_inside: f64,
    pub probe_radius: f64,
}

impl SublevelProbe {
    pub fn bounded(&self) -> bool {
        self.escaping == 0
    }
}

/// Marches geodesic rays from `center` out to `probe_radius`: the `2n` chart axis
/// directions followed by `rays` pseudo-random ones.
pub fn probe_sublevel(
    f1: &BusemannField,
    f2: &BusemannField,
    c1: f64,
    c2: f64,
    center: &Point,
    probe_radius: f64,
    rays: usize,
    seed: u64,
) -> Result<SublevelProbe> {
    let model = f1.model();
    model.check_point(center)?;
    let n = model.dim();
    let x = center.as_slice();
    let marks = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut escaping = 0;
    let mut max_inside: f64 = 0.0;
    let total = rays + 2 * n;
    for ray in 0..total {
        let mut u = if ray < 2 * n {
            let mut e = DVector::zeros(n);
            e[ray / 2] = if ray % 2 == 0 { 1.0 } else { -1.0 };
            e
        } else {
            DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0)
        };
        if u.norm() == 0.0 {
            u[0] = 1.0;
        }
        let v = &u / model.norm_raw(x, &u);
        let mut inside_at_end = false;
        for k in 1..=marks {
            let r = probe_radius * k as f64 / marks as f64;
            let y = match model.geodesic_raw(x, &v, r) {
                Ok(y) => y,
                Err(_) => break,
            };
            let inside = f1.value_raw(y.as_slice()) <= c1 && f2.value_raw(y.as_slice()) <= c2;
            if inside {
                max_inside = max_inside.max(r);
            }
            inside_at_end = inside && k == marks;
        }
        if inside_at_end {
            escaping += 1;
        }
    }
    Ok(SublevelProbe {
        rays: total,
        escaping,
        max_inside,
        probe_radius,
    })
}
