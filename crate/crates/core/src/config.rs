//! Run configuration: JSON file values, overridden by command-line flags.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::locus::LocusQuadrature;
use crate::manifold::{Ideal, ModelSpace, Point};
use crate::numerics::ode::OdeMethod;

/// Numerical acceptance thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub hessian: f64,
    pub trace: f64,
    pub eigenvalue: f64,
    pub laplacian: f64,
    pub horosphere_jacobian: f64,
    pub map_jacobian: f64,
    pub alpha_residual: f64,
    pub tracking: f64,
    pub divergence: f64,
    pub raw_divergence: f64,
    pub flow_density: f64,
    pub pushforward: f64,
    pub membership: f64,
    pub invariance: f64,
    pub dw_ds: f64,
    pub bound: f64,
    /// Number of combined standard errors tolerated between Monte Carlo estimates.
    pub sigmas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hessian: 1e-6,
            trace: 1e-8,
            eigenvalue: 1e-9,
            laplacian: 1e-6,
            horosphere_jacobian: 1e-6,
            map_jacobian: 1e-7,
            alpha_residual: 1e-10,
            tracking: 1e-8,
            divergence: 1e-5,
            raw_divergence: 1e-6,
            flow_density: 1e-5,
            pushforward: 1e-6,
            membership: 1e-10,
            invariance: 1e-8,
            dw_ds: 1e-4,
            bound: 1e-9,
            sigmas: 3.0,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let all = [
            ("hessian", self.hessian),
            ("trace", self.trace),
            ("eigenvalue", self.eigenvalue),
            ("laplacian", self.laplacian),
            ("horosphere_jacobian", self.horosphere_jacobian),
            ("map_jacobian", self.map_jacobian),
            ("alpha_residual", self.alpha_residual),
            ("tracking", self.tracking),
            ("divergence", self.divergence),
            ("raw_divergence", self.raw_divergence),
            ("flow_density", self.flow_density),
            ("pushforward", self.pushforward),
            ("membership", self.membership),
            ("invariance", self.invariance),
            ("dw_ds", self.dw_ds),
            ("bound", self.bound),
            ("sigmas", self.sigmas),
        ];
        for (name, v) in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("tolerance `{name}` must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `h2`, `h3`, `hN`, `eN`.
    pub model: String,
    /// Boundary points of the pair; defaults to the origin and `∞` (or `±e₁` in `Eⁿ`).
    pub pair: Option<(Ideal, Ideal)>,
    /// Basepoint of both Busemann fields; defaults to `(0, …, 0, 1)` (the origin in `Eⁿ`).
    pub basepoint: Option<Vec<f64>>,
    /// Endpoints of the map `F`.
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub s_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    /// Random trajectories per flow check.
    pub points: usize,
    /// Random points per pointwise derivative check.
    pub dense_points: usize,
    /// Bump functions per integral check.
    pub bumps: usize,
    pub flow_duration: f64,
    pub ode: OdeMethod,
    pub quadrature: LocusQuadrature,
    pub tolerances: Tolerances,
    /// Also run the out-of-image integral check for `F`.
    pub probe_outside_image: bool,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: "h3".into(),
            pair: None,
            basepoint: None,
            p: None,
            q: None,
            s_grid: vec![0.5, LN_2, 2.0],
            t_grid: vec![-3.0, -1.0, 0.0, 1.0, 3.0],
            samples: 200_000,
            seed: 0x5EED,
            points: 20,
            dense_points: 100,
            bumps: 5,
            flow_duration: 2.0,
            ode: OdeMethod::default(),
            quadrature: LocusQuadrature::default(),
            tolerances: Tolerances::default(),
            probe_outside_image: false,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn model_space(&self) -> Result<ModelSpace> {
        self.model.parse()
    }

    pub fn pair(&self) -> Result<(Ideal, Ideal)> {
        let m = self.model_space()?;
        if let Some(p) = &self.pair {
            return Ok(p.clone());
        }
        let n = m.dim();
        Ok(if m.is_hyperbolic() {
            (Ideal::Finite(vec![0.0; n - 1]), Ideal::Infinity)
        } else {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            (Ideal::Direction(e.clone()), Ideal::Direction(e.iter().map(|v| -v).collect()))
        })
    }

    pub fn basepoint(&self) -> Result<Point> {
        let m = self.model_space()?;
        match &self.basepoint {
            Some(c) => m.point(c),
            None => Ok(m.reference_point()),
        }
    }

    /// `(p, q)` for the map `F`.
    pub fn map_endpoints(&self) -> Result<(Point, Point)> {
        let m = self.model_space()?;
        let n = m.dim();
        let p = match &self.p {
            Some(c) => m.point(c)?,
            None => m.reference_point(),
        };
        let q = match &self.q {
            Some(c) => m.point(c)?,
            None => {
                let mut c: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.4 } else { -0.2 }).collect();
                c[n - 1] = 0.7;
                m.point(&c)?
            }
        };
        Ok((p, q))
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.model_space()?;
        if self.s_grid.is_empty() || self.t_grid.is_empty() {
            return Err(Error::Config("s and t grids must be nonempty".into()));
        }
        if self.s_grid.iter().chain(&self.t_grid).any(|v| !v.is_finite()) {
            return Err(Error::Config("grid values must be finite".into()));
        }
        if self.samples < 2 {
            return Err(Error::Config("need at least two Monte Carlo samples".into()));
        }
        if self.points == 0 || self.dense_points == 0 || self.bumps == 0 {
            return Err(Error::Config("point and bump counts must be positive".into()));
        }
        if !(self.flow_duration > 0.0) {
            return Err(Error::Config("flow duration must be positive".into()));
        }
        if self.quadrature.circle_nodes == 0 || self.quadrature.axis_nodes == 0 {
            return Err(Error::Config("quadrature node counts must be positive".into()));
        }
        self.tolerances.validate()?;
        let (a, b) = self.pair()?;
        m.check_ideal(&a)?;
        m.check_ideal(&b)?;
        if a == b {
            return Err(Error::Config("the two boundary points coincide".into()));
        }
        self.basepoint()?;
        let (p, q) = self.map_endpoints()?;
        if p == q {
            return Err(Error::Config("p and q coincide".into()));
        }
        Ok(())
    }
}

/// Parses `a:b:k` into `k` evenly spaced values from `a` to `b`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("grid `{spec}` is not of the form a:b:k"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if k == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if k == 1 {
        return Ok(vec![a]);
    }
    Ok((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect())
}
