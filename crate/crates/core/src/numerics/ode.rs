//! Explicit Runge–Kutta integrators for autonomous vector fields in chart coordinates.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum OdeMethod {
    /// Classical fourth-order Runge–Kutta with a fixed step.
    Rk4 { step: f64 },
    /// RK4 repeated with halved steps until two successive end states agree to `tol`.
    Rk4Halving { step: f64, tol: f64, max_halvings: u32 },
    /// Dormand–Prince 5(4) with embedded error control.
    DormandPrince { rtol: f64, atol: f64, initial_step: f64, min_step: f64 },
}

impl Default for OdeMethod {
    fn default() -> Self {
        OdeMethod::Rk4 { step: DEFAULT_STEP }
    }
}

impl OdeMethod {
    pub fn adaptive() -> Self {
        OdeMethod::DormandPrince {
            rtol: 1e-12,
            atol: 1e-13,
            initial_step: 1e-2,
            min_step: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Integrates `x' = field(x)` from `x0` for `duration` (which may be negative).
pub fn integrate<F>(field: F, x0: &DVector<f64>, duration: f64, method: &OdeMethod) -> Result<Trajectory>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !duration.is_finite() {
        return Err(Error::Domain {
            what: "integration duration",
            value: duration,
        });
    }
    match *method {
        OdeMethod::Rk4 { step } => rk4(&field, x0, duration, step),
        OdeMethod::Rk4Halving { step, tol, max_halvings } => {
            let mut h = step;
            let mut coarse = rk4(&field, x0, duration, h)?;
            for _ in 0..max_halvings {
                h *= 0.5;
                let fine = rk4(&field, x0, duration, h)?;
                let gap = (fine.final_state() - coarse.final_state()).amax();
                if gap <= tol {
                    return Ok(fine);
                }
                coarse = fine;
            }
            Err(Error::StepUnderflow { time: duration, step: h })
        }
        OdeMethod::DormandPrince {
            rtol,
            atol,
            initial_step,
            min_step,
        } => dormand_prince(&field, x0, duration, rtol, atol, initial_step, min_step),
    }
}

fn rk4<F>(field: &F, x0: &DVector<f64>, duration: f64, step: f64) -> Result<Trajectory>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(step > 0.0) {
        return Err(Error::Domain { what: "RK4 step", value: step });
    }
    let steps = ((duration.abs() / step).ceil() as usize).max(usize::from(duration != 0.0));
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    if steps == 0 {
        return Ok(Trajectory { times, states });
    }
    let h = duration / steps as f64;
    let mut x = x0.clone();
    for i in 0..steps {
        let k1 = field(&x)?;
        let k2 = field(&(&x + &k1 * (0.5 * h)))?;
        let k3 = field(&(&x + &k2 * (0.5 * h)))?;
        let k4 = field(&(&x + &k3 * h))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        times.push(h * (i + 1) as f64);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states })
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One trial step; `None` when a stage leaves the field's domain.
fn dp_trial<F>(field: &F, x: &DVector<f64>, h: f64) -> Result<Option<(DVector<f64>, DVector<f64>)>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
    for i in 0..7 {
        let mut y = x.clone();
        for (j, kj) in k.iter().enumerate() {
            if A[i][j] != 0.0 {
                y.axpy(h * A[i][j], kj, 1.0);
            }
        }
        match field(&y) {
            Ok(v) => k.push(v),
            Err(Error::SingularFlow(_)) | Err(Error::OutsideChart(_)) if i > 0 => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    let mut hi = x.clone();
    let mut lo = x.clone();
    for j in 0..7 {
        hi.axpy(h * B5[j], &k[j], 1.0);
        lo.axpy(h * B4[j], &k[j], 1.0);
    }
    Ok(Some((hi, lo)))
}

fn dormand_prince<F>(
    field: &F,
    x0: &DVector<f64>,
    duration: f64,
    rtol: f64,
    atol: f64,
    initial_step: f64,
    min_step: f64,
) -> Result<Trajectory>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    if duration == 0.0 {
        return Ok(Trajectory { times, states });
    }
    let dir = duration.signum();
    let total = duration.abs();
    let mut t = 0.0f64;
    let mut h = initial_step.min(total);
    let mut x = x0.clone();
    while t < total {
        if t + h > total {
            h = total - t;
        }
        if h < min_step && t + h < total {
            return Err(Error::StepUnderflow { time: dir * t, step: h });
        }
        match dp_trial(field, &x, dir * h)? {
            None => h *= 0.25,
            Some((hi, lo)) => {
                let n = x.len() as f64;
                let mut acc = 0.0;
                for i in 0..x.len() {
                    let sc = atol + rtol * x[i].abs().max(hi[i].abs());
                    acc += ((hi[i] - lo[i]) / sc).powi(2);
                }
                let err = (acc / n).sqrt();
                let err = if err.is_nan() { f64::INFINITY } else { err };
                if err <= 1.0 {
                    t += h;
                    x = hi;
                    times.push(dir * t);
                    states.push(x.clone());
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= factor;
            }
        }
    }
    Ok(Trajectory { times, states })
}
