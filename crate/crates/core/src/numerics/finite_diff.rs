//! Central finite differences with optional Richardson extrapolation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const FIRST_ORDER_STEP: f64 = 1e-5;
pub const SECOND_ORDER_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    /// Combine steps `h` and `h/2` to cancel the `O(h²)` error term.
    pub richardson: bool,
    /// Reject stencils whose last coordinate is not positive.
    pub half_space: bool,
}

impl FdConfig {
    pub fn first_order() -> Self {
        Self {
            step: FIRST_ORDER_STEP,
            richardson: true,
            half_space: false,
        }
    }

    pub fn second_order() -> Self {
        Self {
            step: SECOND_ORDER_STEP,
            richardson: true,
            half_space: false,
        }
    }

    pub fn with_step(self, step: f64) -> Self {
        Self { step, ..self }
    }

    pub fn in_half_space(self, half_space: bool) -> Self {
        Self { half_space, ..self }
    }

    pub fn plain(self) -> Self {
        Self {
            richardson: false,
            ..self
        }
    }

    fn check(&self, x: &DVector<f64>, reach: f64) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::Domain {
                what: "finite-difference step",
                value: self.step,
            });
        }
        if self.half_space && x[x.len() - 1] - reach <= 0.0 {
            return Err(Error::StencilOutsideChart);
        }
        Ok(())
    }
}

fn extrapolate<T, F>(cfg: &FdConfig, mut at_step: F) -> Result<T>
where
    F: FnMut(f64) -> Result<T>,
    T: std::ops::Mul<f64, Output = T> + std::ops::Sub<Output = T>,
{
    let coarse = at_step(cfg.step)?;
    if !cfg.richardson {
        return Ok(coarse);
    }
    let fine = at_step(0.5 * cfg.step)?;
    Ok(fine * (4.0 / 3.0) - coarse * (1.0 / 3.0))
}

/// Directional derivative `d/dε f(x + ε dir)` at `ε = 0`.
pub fn fd_directional<F>(f: F, x: &DVector<f64>, dir: &DVector<f64>, cfg: &FdConfig) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    cfg.check(x, cfg.step * dir[dir.len() - 1].abs())?;
    extrapolate(cfg, |h| Ok((f(&(x + dir * h))? - f(&(x - dir * h))?) / (2.0 * h)))
}

pub fn fd_gradient<F>(f: F, x: &DVector<f64>, cfg: &FdConfig) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    cfg.check(x, cfg.step)?;
    extrapolate(cfg, |h| {
        let mut g = DVector::zeros(x.len());
        let mut y = x.clone();
        for i in 0..x.len() {
            y[i] = x[i] + h;
            let fp = f(&y)?;
            y[i] = x[i] - h;
            let fm = f(&y)?;
            y[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        Ok(g)
    })
}

/// Jacobian with entries `∂f_i/∂x_j`.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>, cfg: &FdConfig) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    cfg.check(x, cfg.step)?;
    extrapolate(cfg, |h| {
        let mut cols = Vec::with_capacity(x.len());
        let mut y = x.clone();
        for j in 0..x.len() {
            y[j] = x[j] + h;
            let fp = f(&y)?;
            y[j] = x[j] - h;
            let fm = f(&y)?;
            y[j] = x[j];
            cols.push((fp - fm) / (2.0 * h));
        }
        Ok(DMatrix::from_columns(&cols))
    })
}

pub fn fd_hessian<F>(f: F, x: &DVector<f64>, cfg: &FdConfig) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    cfg.check(x, cfg.step)?;
    let n = x.len();
    extrapolate(cfg, |h| {
        let f0 = f(x)?;
        let mut hess = DMatrix::zeros(n, n);
        let mut y = x.clone();
        for i in 0..n {
            y[i] = x[i] + h;
            let fp = f(&y)?;
            y[i] = x[i] - h;
            let fm = f(&y)?;
            y[i] = x[i];
            hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in 0..i {
                let mut corner = |si: f64, sj: f64| {
                    y[i] = x[i] + si * h;
                    y[j] = x[j] + sj * h;
                    let v = f(&y);
                    y[i] = x[i];
                    y[j] = x[j];
                    v
                };
                let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?) / (4.0 * h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        Ok(hess)
    })
}

/// Divergence `(1/ρ) ∂_i(ρ Vⁱ)` of a chart vector field for the volume density `ρ`.
pub fn fd_divergence<V, D>(field: V, density: D, x: &DVector<f64>, cfg: &FdConfig) -> Result<f64>
where
    V: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    D: Fn(&DVector<f64>) -> f64,
{
    cfg.check(x, cfg.step)?;
    let rho0 = density(x);
    extrapolate(cfg, |h| {
        let mut acc = 0.0;
        let mut y = x.clone();
        for i in 0..x.len() {
            y[i] = x[i] + h;
            let fp = field(&y)?[i] * density(&y);
            y[i] = x[i] - h;
            let fm = field(&y)?[i] * density(&y);
            y[i] = x[i];
            acc += (fp - fm) / (2.0 * h);
        }
        Ok(acc / rho0)
    })
}
