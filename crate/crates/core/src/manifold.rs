//! Hadamard model spaces: Euclidean space and the hyperbolic upper half-space.
//!
//! Both models are conformally flat in their standard chart, `g = λ(x) δ`, with
//! `λ = 1` for Euclidean space and `λ = 1/z²` for the half-space (`z` is the last
//! coordinate). Every operation here is closed form: geodesics, exponential and
//! logarithm maps, distances and boundary endpoints are evaluated without ODEs.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible height in the half-space chart.
pub const MIN_HEIGHT: f64 = 1e-300;

/// Tolerance used when validating unit tangent vectors.
pub const UNIT_TOLERANCE: f64 = 1e-12;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Euclidean,
    Hyperbolic,
}

/// A model Hadamard manifold of dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpace {
    kind: ModelKind,
    dim: usize,
}

impl fmt::Display for ModelSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::Euclidean => write!(f, "e{}", self.dim),
            ModelKind::Hyperbolic => write!(f, "h{}", self.dim),
        }
    }
}

impl FromStr for ModelSpace {
    type Err = Error;

    /// Accepts `h3`, `e3`, `hN`, `eN` and the spaced form `e 3`.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let lower = s.to_ascii_lowercase();
        let (kind, rest) = if let Some(rest) = lower.strip_prefix('h') {
            (ModelKind::Hyperbolic, rest)
        } else if let Some(rest) = lower.strip_prefix('e') {
            (ModelKind::Euclidean, rest)
        } else {
            return Err(Error::Config(format!("unknown model `{s}`")));
        };
        let dim: usize = rest
            .parse()
            .map_err(|_| Error::Config(format!("bad model dimension in `{s}`")))?;
        ModelSpace::new(kind, dim)
    }
}

impl ModelSpace {
    pub fn new(kind: ModelKind, dim: usize) -> Result<Self> {
        if !(MIN_DIM..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(Self { kind, dim })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(ModelKind::Euclidean, dim)
    }

    pub fn hyperbolic(dim: usize) -> Result<Self> {
        Self::new(ModelKind::Hyperbolic, dim)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.kind == ModelKind::Hyperbolic
    }

    /// Constant sectional curvature of the model.
    pub fn curvature(&self) -> f64 {
        match self.kind {
            ModelKind::Euclidean => 0.0,
            ModelKind::Hyperbolic => -1.0,
        }
    }

    /// Builds a validated point from chart coordinates.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain {
                what: "point coordinates",
                value: f64::NAN,
            });
        }
        if self.is_hyperbolic() {
            let z = coords[self.dim - 1];
            if z.is_nan() || z < MIN_HEIGHT {
                return Err(Error::OutsideChart(z));
            }
        }
        Ok(Point {
            model: *self,
            coords: DVector::from_column_slice(coords),
        })
    }

    pub(crate) fn point_from_vec(&self, coords: DVector<f64>) -> Result<Point> {
        self.point(coords.as_slice())
    }

    /// The chart point `(0, …, 0, 1)` for the half-space and the origin for
    /// Euclidean space; the default Busemann basepoint.
    pub fn reference_point(&self) -> Point {
        let mut c = DVector::zeros(self.dim);
        if self.is_hyperbolic() {
            c[self.dim - 1] = 1.0;
        }
        Point {
            model: *self,
            coords: c,
        }
    }

    pub fn tangent(&self, base: &Point, components: &[f64]) -> Result<TangentVec> {
        self.check_point(base)?;
        if components.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: components.len(),
            });
        }
        Ok(TangentVec {
            base: base.clone(),
            components: DVector::from_column_slice(components),
        })
    }

    pub(crate) fn check_point(&self, p: &Point) -> Result<()> {
        if p.model != *self {
            return Err(Error::ModelMismatch(self.to_string(), p.model.to_string()));
        }
        Ok(())
    }

    /// Conformal factor `λ` with `g = λ δ` at chart coordinates `x`.
    #[inline]
    pub fn conformal_factor(&self, x: &[f64]) -> f64 {
        match self.kind {
            ModelKind::Euclidean => 1.0,
            ModelKind::Hyperbolic => {
                let z = x[self.dim - 1];
                1.0 / (z * z)
            }
        }
    }

    /// Riemannian inner product of two tangent vectors sharing a base point.
    pub fn metric_inner(&self, u: &TangentVec, v: &TangentVec) -> Result<f64> {
        self.check_point(&u.base)?;
        self.check_point(&v.base)?;
        if u.base != v.base {
            return Err(Error::BaseMismatch);
        }
        Ok(self.inner_raw(u.base.coords.as_slice(), &u.components, &v.components))
    }

    #[inline]
    pub(crate) fn inner_raw(&self, x: &[f64], u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.conformal_factor(x) * u.dot(v)
    }

    #[inline]
    pub(crate) fn norm_raw(&self, x: &[f64], u: &DVector<f64>) -> f64 {
        self.inner_raw(x, u, u).sqrt()
    }

    pub fn norm(&self, v: &TangentVec) -> f64 {
        self.norm_raw(v.base.coords.as_slice(), &v.components)
    }

    /// Riemannian volume density `√det g` in chart coordinates.
    pub fn volume_density(&self, p: &Point) -> f64 {
        self.density_raw(p.coords.as_slice())
    }

    #[inline]
    pub(crate) fn density_raw(&self, x: &[f64]) -> f64 {
        match self.kind {
            ModelKind::Euclidean => 1.0,
            ModelKind::Hyperbolic => x[self.dim - 1].powi(-(self.dim as i32)),
        }
    }

    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(self.dist_raw(p.coords.as_slice(), q.coords.as_slice()))
    }

    #[inline]
    pub(crate) fn dist_raw(&self, a: &[f64], b: &[f64]) -> f64 {
        let chord = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        match self.kind {
            ModelKind::Euclidean => chord,
            ModelKind::Hyperbolic => {
                let n = self.dim;
                2.0 * (chord / (2.0 * (a[n - 1] * b[n - 1]).sqrt())).asinh()
            }
        }
    }

    /// Point at arclength `t` along the geodesic through `p` with unit initial
    /// velocity `v`.
    pub fn geodesic(&self, p: &Point, v: &TangentVec, t: f64) -> Result<Point> {
        self.check_point(p)?;
        self.check_point(&v.base)?;
        if v.base != *p {
            return Err(Error::BaseMismatch);
        }
        let norm = self.norm(v);
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NonUnitTangent(norm));
        }
        let out = self.geodesic_raw(p.coords.as_slice(), &v.components, t)?;
        self.point_from_vec(out)
    }

    /// Closed-form geodesic on raw coordinates; `v` must have unit Riemannian norm.
    pub(crate) fn geodesic_raw(&self, x: &[f64], v: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        let n = self.dim;
        match self.kind {
            ModelKind::Euclidean => Ok(DVector::from_column_slice(x) + v * t),
            ModelKind::Hyperbolic => {
                let z = x[n - 1];
                let u = v / z;
                let uz = u[n - 1];
                // Ratio sinh(t)/D and 1/D with D = cosh t - u_z sinh t, evaluated
                // without overflow for large |t|.
                let (ratio, inv_d) = if t >= 0.0 {
                    let e = (-2.0 * t).exp();
                    let den = (1.0 - uz) + (1.0 + uz) * e;
                    ((1.0 - e) / den, 2.0 * (-t).exp() / den)
                } else {
                    let e = (2.0 * t).exp();
                    let den = (1.0 + uz) + (1.0 - uz) * e;
                    (-(1.0 - e) / den, 2.0 * t.exp() / den)
                };
                let mut out = DVector::zeros(n);
                for i in 0..n - 1 {
                    out[i] = x[i] + z * u[i] * ratio;
                }
                let zt = z * inv_d;
                if !zt.is_finite() || zt < MIN_HEIGHT {
                    return Err(Error::OutsideChart(zt));
                }
                out[n - 1] = zt;
                Ok(out)
            }
        }
    }

    /// Exponential map `exp_p(w)`.
    pub fn exp(&self, w: &TangentVec) -> Result<Point> {
        self.check_point(&w.base)?;
        let out = self.exp_raw(w.base.coords.as_slice(), &w.components)?;
        self.point_from_vec(out)
    }

    pub(crate) fn exp_raw(&self, x: &[f64], w: &DVector<f64>) -> Result<DVector<f64>> {
        let len = self.norm_raw(x, w);
        if len == 0.0 {
            return Ok(DVector::from_column_slice(x));
        }
        self.geodesic_raw(x, &(w / len), len)
    }

    /// Logarithm map: the tangent vector at `p` whose exponential is `q`.
    pub fn log(&self, p: &Point, q: &Point) -> Result<TangentVec> {
        self.check_point(p)?;
        self.check_point(q)?;
        let comps = self.log_raw(p.coords.as_slice(), q.coords.as_slice());
        Ok(TangentVec {
            base: p.clone(),
            components: comps,
        })
    }

    pub(crate) fn log_raw(&self, x: &[f64], y: &[f64]) -> DVector<f64> {
        let n = self.dim;
        match self.kind {
            ModelKind::Euclidean => DVector::from_column_slice(y) - DVector::from_column_slice(x),
            ModelKind::Hyperbolic => {
                let d = self.dist_raw(x, y);
                if d == 0.0 {
                    return DVector::zeros(n);
                }
                let z = x[n - 1];
                let qz = y[n - 1];
                let chord2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                let sh = d.sinh();
                let mut u = DVector::zeros(n);
                for i in 0..n - 1 {
                    u[i] = (y[i] - x[i]) / (qz * sh);
                }
                u[n - 1] = (2.0 * z * (qz - z) + chord2) / (2.0 * z * qz * sh);
                let un = u.norm();
                u /= un;
                u * (d * z)
            }
        }
    }

    /// Boundary point reached by the geodesic ray with initial velocity `v`.
    pub fn geodesic_endpoint(&self, v: &TangentVec) -> Result<Ideal> {
        self.check_point(&v.base)?;
        self.endpoint_raw(v.base.coords.as_slice(), &v.components)
    }

    pub(crate) fn endpoint_raw(&self, x: &[f64], v: &DVector<f64>) -> Result<Ideal> {
        let n = self.dim;
        let vn = v.norm();
        if vn == 0.0 {
            return Err(Error::NonUnitTangent(0.0));
        }
        let u = v / vn;
        match self.kind {
            ModelKind::Euclidean => Ok(Ideal::Direction(u.as_slice().to_vec())),
            ModelKind::Hyperbolic => {
                let uz = u[n - 1];
                let horizontal: f64 = (0..n - 1).map(|i| u[i] * u[i]).sum();
                if horizontal == 0.0 && uz > 0.0 {
                    return Ok(Ideal::Infinity);
                }
                let z = x[n - 1];
                let scale = z / (1.0 - uz);
                Ok(Ideal::Finite((0..n - 1).map(|i| x[i] + scale * u[i]).collect()))
            }
        }
    }

    /// Validates that an ideal point belongs to this model's boundary.
    pub fn check_ideal(&self, xi: &Ideal) -> Result<()> {
        let n = self.dim;
        match (self.kind, xi) {
            (ModelKind::Hyperbolic, Ideal::Infinity) => Ok(()),
            (ModelKind::Hyperbolic, Ideal::Finite(v)) if v.len() == n - 1 => Ok(()),
            (ModelKind::Euclidean, Ideal::Direction(v)) if v.len() == n => {
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-12 {
                    Err(Error::InvalidIdeal(format!("direction has norm {norm}")))
                } else {
                    Ok(())
                }
            }
            _ => Err(Error::InvalidIdeal(format!("{xi:?} for model {self}"))),
        }
    }

    /// Isometry sending `xi1` to the boundary origin and `xi2` to infinity.
    pub fn normalize_pair(&self, xi1: &Ideal, xi2: &Ideal) -> Result<Isometry> {
        if !self.is_hyperbolic() {
            return Err(Error::NotVisibility(format!(
                "{self} has no normalizing configuration for a pair of boundary points"
            )));
        }
        self.check_ideal(xi1)?;
        self.check_ideal(xi2)?;
        if xi1 == xi2 {
            return Err(Error::CoincidentBoundaryPoints);
        }
        let iso = match (xi1, xi2) {
            (Ideal::Finite(a), Ideal::Infinity) => Isometry::translation(*self, &neg(a)),
            (Ideal::Infinity, Ideal::Finite(b)) => {
                Isometry::translation(*self, &neg(b)).then(Isometry::inversion(*self))
            }
            (Ideal::Finite(a), Ideal::Finite(b)) => {
                let first = Isometry::translation(*self, &neg(b)).then(Isometry::inversion(*self));
                let img = match first.apply_ideal(&Ideal::Finite(a.clone())) {
                    Ideal::Finite(v) => v,
                    _ => return Err(Error::CoincidentBoundaryPoints),
                };
                first.then(Isometry::translation(*self, &neg(&img)))
            }
            _ => return Err(Error::CoincidentBoundaryPoints),
        };
        Ok(iso)
    }
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

/// A point of a model space in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    model: ModelSpace,
    coords: DVector<f64>,
}

impl Point {
    pub fn model(&self) -> ModelSpace {
        self.model
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    /// Last chart coordinate.
    pub fn height(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }
}

/// A tangent vector given by chart components at a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec {
    base: Point,
    components: DVector<f64>,
}

impl TangentVec {
    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn components(&self) -> &DVector<f64> {
        &self.components
    }

    pub(crate) fn from_parts(base: Point, components: DVector<f64>) -> Self {
        Self { base, components }
    }

    /// Same direction rescaled to unit Riemannian length.
    pub fn normalized(&self) -> Result<TangentVec> {
        let norm = self.base.model.norm(self);
        if norm == 0.0 {
            return Err(Error::NonUnitTangent(0.0));
        }
        Ok(TangentVec {
            base: self.base.clone(),
            components: &self.components / norm,
        })
    }

    pub fn scaled(&self, k: f64) -> TangentVec {
        TangentVec {
            base: self.base.clone(),
            components: &self.components * k,
        }
    }
}

/// A point at infinity.
///
/// In the half-space chart these are finite points of the boundary hyperplane
/// or the symbol `∞`; in Euclidean space they are unit directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ideal {
    Finite(Vec<f64>),
    Infinity,
    Direction(Vec<f64>),
}

/// Elementary Möbius transformation of the closed half-space.
#[derive(Debug, Clone, PartialEq)]
pub enum MobiusStep {
    /// Translation of the first `n - 1` coordinates.
    Translate(Vec<f64>),
    /// `x ↦ λ x` with `λ > 0`.
    Dilate(f64),
    /// Inversion through the unit sphere centred at the boundary origin.
    Invert,
}

impl MobiusStep {
    fn apply(&self, x: &mut DVector<f64>) {
        match self {
            MobiusStep::Translate(a) => {
                for (xi, ai) in x.iter_mut().zip(a) {
                    *xi += ai;
                }
            }
            MobiusStep::Dilate(l) => *x *= *l,
            MobiusStep::Invert => {
                let r2 = x.norm_squared();
                *x /= r2;
            }
        }
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = x.len();
        match self {
            MobiusStep::Translate(_) => DMatrix::identity(n, n),
            MobiusStep::Dilate(l) => DMatrix::identity(n, n) * *l,
            MobiusStep::Invert => {
                let r2 = x.norm_squared();
                (DMatrix::identity(n, n) - (x * x.transpose()) * (2.0 / r2)) / r2
            }
        }
    }

    fn apply_ideal(&self, xi: &Ideal, boundary_dim: usize) -> Ideal {
        match (self, xi) {
            (MobiusStep::Translate(a), Ideal::Finite(v)) => {
                Ideal::Finite(v.iter().zip(a).map(|(x, y)| x + y).collect())
            }
            (MobiusStep::Dilate(l), Ideal::Finite(v)) => Ideal::Finite(v.iter().map(|x| x * l).collect()),
            (MobiusStep::Invert, Ideal::Finite(v)) => {
                let r2: f64 = v.iter().map(|x| x * x).sum();
                if r2 == 0.0 {
                    Ideal::Infinity
                } else {
                    Ideal::Finite(v.iter().map(|x| x / r2).collect())
                }
            }
            (MobiusStep::Invert, Ideal::Infinity) => Ideal::Finite(vec![0.0; boundary_dim]),
            (_, other) => other.clone(),
        }
    }

    fn inverse(&self) -> MobiusStep {
        match self {
            MobiusStep::Translate(a) => MobiusStep::Translate(neg(a)),
            MobiusStep::Dilate(l) => MobiusStep::Dilate(1.0 / l),
            MobiusStep::Invert => MobiusStep::Invert,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum IsometryRepr {
    /// Composition of Möbius steps, applied first to last.
    Mobius(Vec<MobiusStep>),
    /// `x ↦ Q x + b`.
    Rigid {
        rotation: DMatrix<f64>,
        translation: DVector<f64>,
    },
}

/// An isometry of a model space.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    model: ModelSpace,
    repr: IsometryRepr,
}

impl Isometry {
    pub fn identity(model: ModelSpace) -> Self {
        let repr = if model.is_hyperbolic() {
            IsometryRepr::Mobius(Vec::new())
        } else {
            IsometryRepr::Rigid {
                rotation: DMatrix::identity(model.dim, model.dim),
                translation: DVector::zeros(model.dim),
            }
        };
        Self { model, repr }
    }

    /// Horizontal translation (half-space) or ordinary translation (Euclidean).
    /// Zero translations collapse to the identity.
    pub fn translation(model: ModelSpace, offset: &[f64]) -> Self {
        if model.is_hyperbolic() {
            let steps = if offset.iter().all(|a| *a == 0.0) {
                Vec::new()
            } else {
                vec![MobiusStep::Translate(offset.to_vec())]
            };
            Self {
                model,
                repr: IsometryRepr::Mobius(steps),
            }
        } else {
            Self {
                model,
                repr: IsometryRepr::Rigid {
                    rotation: DMatrix::identity(model.dim, model.dim),
                    translation: DVector::from_column_slice(offset),
                },
            }
        }
    }

    /// Half-space dilation `x ↦ λ x`.
    pub fn dilation(model: ModelSpace, factor: f64) -> Self {
        debug_assert!(model.is_hyperbolic() && factor > 0.0);
        Self {
            model,
            repr: IsometryRepr::Mobius(vec![MobiusStep::Dilate(factor)]),
        }
    }

    /// Half-space inversion through the unit sphere.
    pub fn inversion(model: ModelSpace) -> Self {
        debug_assert!(model.is_hyperbolic());
        Self {
            model,
            repr: IsometryRepr::Mobius(vec![MobiusStep::Invert]),
        }
    }

    /// Euclidean rigid motion `x ↦ Q x + b`; `Q` must be orthogonal.
    pub fn rigid(model: ModelSpace, rotation: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        if model.is_hyperbolic() {
            return Err(Error::Config("rigid motions are Euclidean isometries".into()));
        }
        let n = model.dim;
        if rotation.nrows() != n || rotation.ncols() != n || translation.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rotation.nrows(),
            });
        }
        let defect = (&rotation.transpose() * &rotation - DMatrix::identity(n, n)).amax();
        if defect > 1e-10 {
            return Err(Error::Config(format!("rotation is not orthogonal (defect {defect:e})")));
        }
        Ok(Self {
            model,
            repr: IsometryRepr::Rigid { rotation, translation },
        })
    }

    pub fn model(&self) -> ModelSpace {
        self.model
    }

    pub fn is_identity(&self) -> bool {
        match &self.repr {
            IsometryRepr::Mobius(steps) => steps.is_empty(),
            IsometryRepr::Rigid { rotation, translation } => {
                *rotation == DMatrix::identity(self.model.dim, self.model.dim)
                    && translation.iter().all(|a| *a == 0.0)
            }
        }
    }

    /// The Möbius steps of a half-space isometry, in application order.
    pub fn steps(&self) -> &[MobiusStep] {
        match &self.repr {
            IsometryRepr::Mobius(steps) => steps,
            IsometryRepr::Rigid { .. } => &[],
        }
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(self, other: Isometry) -> Isometry {
        let model = self.model;
        let repr = match (self.repr, other.repr) {
            (IsometryRepr::Mobius(mut a), IsometryRepr::Mobius(b)) => {
                a.extend(b);
                IsometryRepr::Mobius(a)
            }
            (
                IsometryRepr::Rigid {
                    rotation: q1,
                    translation: b1,
                },
                IsometryRepr::Rigid {
                    rotation: q2,
                    translation: b2,
                },
            ) => IsometryRepr::Rigid {
                translation: &q2 * b1 + b2,
                rotation: q2 * q1,
            },
            _ => unreachable!("isometries of different models cannot be composed"),
        };
        Isometry { model, repr }
    }

    pub fn inverse(&self) -> Isometry {
        let repr = match &self.repr {
            IsometryRepr::Mobius(steps) => IsometryRepr::Mobius(steps.iter().rev().map(MobiusStep::inverse).collect()),
            IsometryRepr::Rigid { rotation, translation } => {
                let qt = rotation.transpose();
                IsometryRepr::Rigid {
                    translation: -(&qt * translation),
                    rotation: qt,
                }
            }
        };
        Isometry { model: self.model, repr }
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        self.model.check_point(p)?;
        self.model.point_from_vec(self.apply_raw(p.as_slice()))
    }

    pub(crate) fn apply_raw(&self, x: &[f64]) -> DVector<f64> {
        match &self.repr {
            IsometryRepr::Mobius(steps) => {
                let mut y = DVector::from_column_slice(x);
                for s in steps {
                    s.apply(&mut y);
                }
                y
            }
            IsometryRepr::Rigid { rotation, translation } => rotation * DVector::from_column_slice(x) + translation,
        }
    }

    /// Chart Jacobian of the isometry at `x`.
    pub(crate) fn jacobian_raw(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.repr {
            IsometryRepr::Mobius(steps) => {
                let n = x.len();
                let mut y = DVector::from_column_slice(x);
                let mut jac = DMatrix::identity(n, n);
                for s in steps {
                    jac = s.jacobian(&y) * jac;
                    s.apply(&mut y);
                }
                jac
            }
            IsometryRepr::Rigid { rotation, .. } => rotation.clone(),
        }
    }

    /// Differential of the isometry applied to a tangent vector.
    pub fn push(&self, v: &TangentVec) -> Result<TangentVec> {
        let base = self.apply(v.base())?;
        let comps = self.jacobian_raw(v.base().as_slice()) * v.components();
        Ok(TangentVec::from_parts(base, comps))
    }

    pub fn apply_ideal(&self, xi: &Ideal) -> Ideal {
        match &self.repr {
            IsometryRepr::Mobius(steps) => {
                let mut cur = xi.clone();
                for s in steps {
                    cur = s.apply_ideal(&cur, self.model.dim - 1);
                }
                cur
            }
            IsometryRepr::Rigid { rotation, .. } => match xi {
                Ideal::Direction(u) => {
                    let v = rotation * DVector::from_column_slice(u);
                    Ideal::Direction(v.as_slice().to_vec())
                }
                other => other.clone(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h3() -> ModelSpace {
        ModelSpace::hyperbolic(3).unwrap()
    }

    fn e3() -> ModelSpace {
        ModelSpace::euclidean(3).unwrap()
    }

    #[test]
    fn metric_inner_examples() {
        let m = h3();
        let p = m.point(&[0.0, 0.0, 1.0]).unwrap();
        let u = m.tangent(&p, &[1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(m.metric_inner(&u, &u).unwrap(), 1.0);

        let p2 = m.point(&[0.0, 0.0, 2.0]).unwrap();
        let u2 = m.tangent(&p2, &[1.0, 0.0, 0.0]).unwrap();
        let direct = m.metric_inner(&u2, &u2).unwrap();
        assert_abs_diff_eq!(direct, 0.25, epsilon = 1e-15);
        // polarization: <u,u> = (|2u|² - 0)/4
        let two = u2.scaled(2.0);
        let polar = (m.metric_inner(&two, &two).unwrap()) / 4.0;
        assert_abs_diff_eq!(polar, direct, epsilon = 1e-15);

        let e = e3();
        let q = e.point(&[5.0, -1.0, 2.0]).unwrap();
        let a = e.tangent(&q, &[1.0, 2.0, 0.0]).unwrap();
        let b = e.tangent(&q, &[3.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(e.metric_inner(&a, &b).unwrap(), 3.0);
    }

    #[test]
    fn metric_inner_rejects_mismatched_bases() {
        let m = h3();
        let p = m.point(&[0.0, 0.0, 1.0]).unwrap();
        let q = m.point(&[0.0, 0.0, 2.0]).unwrap();
        let u = m.tangent(&p, &[1.0, 0.0, 0.0]).unwrap();
        let v = m.tangent(&q, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.metric_inner(&u, &v), Err(Error::BaseMismatch));
        let e = e3();
        let w = e.tangent(&e.point(&[0.0, 0.0, 1.0]).unwrap(), &[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(m.metric_inner(&u, &w), Err(Error::ModelMismatch(..))));
    }

    #[test]
    fn distance_examples() {
        let m = h3();
        let o = m.point(&[0.0, 0.0, 1.0]).unwrap();
        let e = m.point(&[0.0, 0.0, std::f64::consts::E]).unwrap();
        assert_abs_diff_eq!(m.distance(&o, &e).unwrap(), 1.0, epsilon = 1e-15);
        let two = m.point(&[0.0, 0.0, 2.0]).unwrap();
        let d = m.distance(&o, &two).unwrap();
        assert_abs_diff_eq!(d, 2.0 * (1.0 / (2.0 * 2f64.sqrt())).asinh(), epsilon = 1e-15);
        assert_abs_diff_eq!(d, 2f64.ln(), epsilon = 1e-15);

        let e = e3();
        let a = e.point(&[0.0, 0.0, 0.0]).unwrap();
        let b = e.point(&[3.0, 4.0, 0.0]).unwrap();
        assert_abs_diff_eq!(e.distance(&a, &b).unwrap(), 5.0);
    }

    #[test]
    fn geodesic_examples() {
        let m = h3();
        let p = m.point(&[0.0, 0.0, 1.0]).unwrap();
        let up = m.tangent(&p, &[0.0, 0.0, 1.0]).unwrap();
        let q = m.geodesic(&p, &up, 1.0).unwrap();
        assert_abs_diff_eq!(q.height(), std::f64::consts::E, epsilon = 1e-14);

        let side = m.tangent(&p, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.geodesic_endpoint(&side).unwrap(), Ideal::Finite(vec![1.0, 0.0]));
        let far = m.geodesic(&p, &side, 30.0).unwrap();
        assert_abs_diff_eq!(far.as_slice()[0], 1.0, epsilon = 1e-12);
        assert!(far.height() < 1e-12);

        let e = e3();
        let o = e.point(&[0.0; 3]).unwrap();
        let v = e.tangent(&o, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(e.geodesic(&o, &v, 7.0).unwrap().as_slice(), &[0.0, 7.0, 0.0]);
    }

    #[test]
    fn geodesic_rejects_non_unit_velocity() {
        let m = h3();
        let p = m.point(&[0.0, 0.0, 2.0]).unwrap();
        let v = m.tangent(&p, &[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(m.geodesic(&p, &v, 1.0), Err(Error::NonUnitTangent(_))));
    }

    #[test]
    fn geodesic_matches_integrated_geodesic_equation() {
        // Oracle: RK4 on the geodesic equation of the conformal metric 1/z².
        // x'' = (2/z) x' z',  z'' = (x'² - z'²)/z  (in the vertical plane).
        let m = ModelSpace::hyperbolic(2).unwrap();
        let p = m.point(&[0.3, 0.7]).unwrap();
        let (a, b) = (0.6f64, -0.8f64);
        let v = m.tangent(&p, &[0.7 * a, 0.7 * b]).unwrap();
        let t_end = 2.5;
        let closed = m.geodesic(&p, &v, t_end).unwrap();

        let rhs = |s: [f64; 4]| -> [f64; 4] {
            let [_x, z, dx, dz] = s;
            [dx, dz, 2.0 * dx * dz / z, (dz * dz - dx * dx) / z]
        };
        let mut s = [0.3, 0.7, 0.7 * a, 0.7 * b];
        let steps = 20_000;
        let h = t_end / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(s);
            let k2 = rhs(std::array::from_fn(|i| s[i] + 0.5 * h * k1[i]));
            let k3 = rhs(std::array::from_fn(|i| s[i] + 0.5 * h * k2[i]));
            let k4 = rhs(std::array::from_fn(|i| s[i] + h * k3[i]));
            for i in 0..4 {
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        assert_abs_diff_eq!(closed.as_slice()[0], s[0], epsilon = 1e-10);
        assert_abs_diff_eq!(closed.as_slice()[1], s[1], epsilon = 1e-10);
    }

    #[test]
    fn exp_log_roundtrip_small_and_large() {
        let m = h3();
        let p = m.point(&[0.2, -0.4, 0.9]).unwrap();
        for comps in [[1e-4, 0.0, 2e-4], [0.3, 0.1, -0.5], [2.0, -1.0, 3.5]] {
            let w = m.tangent(&p, &comps).unwrap();
            let q = m.exp(&w).unwrap();
            let back = m.log(&p, &q).unwrap();
            for i in 0..3 {
                assert_abs_diff_eq!(back.components()[i], comps[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn zero_height_is_rejected() {
        let m = h3();
        assert!(matches!(m.point(&[0.0, 0.0, 0.0]), Err(Error::OutsideChart(_))));
        assert!(matches!(m.point(&[0.0, 0.0, 1e-301]), Err(Error::OutsideChart(_))));
        let p = m.point(&[0.0, 0.0, 1.0]).unwrap();
        let down = m.tangent(&p, &[0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(m.geodesic(&p, &down, 800.0), Err(Error::OutsideChart(_))));
    }

    #[test]
    fn normalize_pair_examples() {
        let m = h3();
        let iso = m
            .normalize_pair(&Ideal::Finite(vec![1.0, 0.0]), &Ideal::Infinity)
            .unwrap();
        assert_eq!(iso.steps(), &[MobiusStep::Translate(vec![-1.0, -0.0])]);

        let id = m
            .normalize_pair(&Ideal::Finite(vec![0.0, 0.0]), &Ideal::Infinity)
            .unwrap();
        assert!(id.is_identity());

        let a = Ideal::Finite(vec![1.0, 0.0]);
        let b = Ideal::Finite(vec![-1.0, 0.0]);
        let iso = m.normalize_pair(&a, &b).unwrap();
        assert_eq!(iso.apply_ideal(&a), Ideal::Finite(vec![0.0, 0.0]));
        assert_eq!(iso.apply_ideal(&b), Ideal::Infinity);
        // The geodesic joining a and b (unit half-circle in the xz-plane) becomes the z-axis.
        for theta in [0.3f64, 1.0, 1.4, 2.5] {
            let p = m.point(&[theta.cos(), 0.0, theta.sin()]).unwrap();
            let img = iso.apply(&p).unwrap();
            assert_abs_diff_eq!(img.as_slice()[0], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(img.as_slice()[1], 0.0, epsilon = 1e-12);
        }
        let p = m.point(&[0.4, 0.0, (1.0f64 - 0.16).sqrt()]).unwrap();
        let v = m.log(&p, &m.point(&[-0.2, 0.0, (1.0f64 - 0.04).sqrt()]).unwrap()).unwrap();
        match m.geodesic_endpoint(&v).unwrap() {
            Ideal::Finite(e) => {
                assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(e[1], 0.0, epsilon = 1e-12);
            }
            other => panic!("{other:?}"),
        }

        assert_eq!(m.normalize_pair(&a, &a), Err(Error::CoincidentBoundaryPoints));
    }

    #[test]
    fn isometry_inverse_roundtrip() {
        let m = h3();
        let iso = m
            .normalize_pair(&Ideal::Finite(vec![0.3, -1.2]), &Ideal::Finite(vec![2.0, 0.5]))
            .unwrap()
            .then(Isometry::dilation(m, 1.7));
        let inv = iso.inverse();
        let p = m.point(&[0.1, 0.2, 0.3]).unwrap();
        let back = inv.apply(&iso.apply(&p).unwrap()).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(back.as_slice()[i], p.as_slice()[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn isometry_pushes_unit_vectors_to_unit_vectors() {
        let m = h3();
        let iso = Isometry::translation(m, &[0.5, 0.1])
            .then(Isometry::inversion(m))
            .then(Isometry::dilation(m, 0.3));
        let p = m.point(&[0.2, 0.7, 0.4]).unwrap();
        let v = m.tangent(&p, &[0.4, 0.0, 0.0]).unwrap();
        let pushed = iso.push(&v).unwrap();
        assert_abs_diff_eq!(m.norm(&pushed), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn volume_density_examples() {
        let m = h3();
        assert_abs_diff_eq!(m.volume_density(&m.point(&[0.0, 0.0, 2.0]).unwrap()), 0.125);
        assert_abs_diff_eq!(m.volume_density(&m.point(&[0.0, 0.0, 1.0]).unwrap()), 1.0);
        let e = e3();
        assert_abs_diff_eq!(e.volume_density(&e.point(&[9.0, -3.0, 1.0]).unwrap()), 1.0);
    }

    #[test]
    fn parse_model_names() {
        assert_eq!("h3".parse::<ModelSpace>().unwrap(), h3());
        assert_eq!("e 3".parse::<ModelSpace>().unwrap(), e3());
        assert_eq!("H5".parse::<ModelSpace>().unwrap().dim(), 5);
        assert!("h9".parse::<ModelSpace>().is_err());
        assert!("x3".parse::<ModelSpace>().is_err());
    }
}
