//! Reproducible Monte Carlo integration over chart boxes.
//!
//! Samples are grouped in fixed-size chunks; chunk `k` draws from the ChaCha
//! stream `k` of the seed, so the estimate depends only on `(seed, samples)`
//! and never on the number of worker threads. Chunk statistics are merged by a
//! fixed pairwise tree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::ModelSpace;

pub const CHUNK: u64 = 4096;

/// A Monte Carlo estimate of an integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    /// Number of combined standard errors separating two independent estimates.
    pub fn z_score(&self, other: &MCEstimate) -> f64 {
        let combined = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        if combined == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - other.mean).abs() / combined
        }
    }

    pub fn agrees_with(&self, other: &MCEstimate, sigmas: f64) -> bool {
        self.z_score(other) <= sigmas
    }

    /// Agreement with a deterministic value.
    pub fn agrees_with_value(&self, value: f64, sigmas: f64) -> bool {
        (self.mean - value).abs() <= sigmas * self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub proposal: Proposal,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 200_000,
            seed: 0x5EED,
            proposal: Proposal::ChartUniform,
        }
    }
}

/// Sampling distribution inside the chart box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Proposal {
    /// Uniform in chart coordinates; samples are weighted by the volume density.
    #[default]
    ChartUniform,
    /// Uniform in the horizontal coordinates and in `ln z`, which tracks the
    /// `z^{-n}` density of the half-space.
    LogUniformHeight,
}

/// Axis-aligned box in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChartBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::Config(format!("degenerate chart box {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains_box(&self, other: &ChartBox) -> bool {
        self.lo.iter().zip(&other.lo).all(|(a, b)| a <= b) && self.hi.iter().zip(&other.hi).all(|(a, b)| a >= b)
    }

    /// Enlarges every side by `fraction` of its length on both ends.
    pub fn padded(&self, fraction: f64) -> ChartBox {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        for i in 0..lo.len() {
            let pad = fraction * (hi[i] - lo[i]);
            lo[i] -= pad;
            hi[i] += pad;
        }
        ChartBox { lo, hi }
    }

    /// Smallest box containing all `points`.
    pub fn bounding(points: &[Vec<f64>]) -> Result<ChartBox> {
        let first = points.first().ok_or_else(|| Error::Config("no points to bound".into()))?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for p in points {
            for i in 0..lo.len() {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        for i in 0..lo.len() {
            if hi[i] <= lo[i] {
                hi[i] = lo[i] + 1e-12;
            }
        }
        Ok(ChartBox { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.count == 0.0 {
            return b;
        }
        if b.count == 0.0 {
            return a;
        }
        let count = a.count + b.count;
        let d = b.mean - a.mean;
        Moments {
            count,
            mean: a.mean + d * b.count / count,
            m2: a.m2 + b.m2 + d * d * a.count * b.count / count,
        }
    }
}

fn merge_tree(parts: &[Moments]) -> Moments {
    match parts.len() {
        0 => Moments::default(),
        1 => parts[0],
        n => {
            let (l, r) = parts.split_at(n / 2);
            Moments::merge(merge_tree(l), merge_tree(r))
        }
    }
}

/// Mean and standard error of `draw(rng)` over `samples` draws.
pub fn sample_mean<F>(samples: u64, seed: u64, draw: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let n = CHUNK.min(samples - k * CHUNK);
            let mut m = Moments::default();
            for _ in 0..n {
                m.push(draw(&mut rng));
            }
            m
        })
        .collect();
    let total = merge_tree(&parts);
    if total.count < 2.0 {
        return (total.mean, f64::INFINITY);
    }
    let var = total.m2 / (total.count - 1.0);
    (total.mean, (var / total.count).sqrt())
}

/// Monte Carlo estimate of `∫_box f dμ` for the model's Riemannian measure.
pub fn integrate_box<F>(model: ModelSpace, region: &ChartBox, f: F, cfg: &McConfig) -> Result<MCEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = model.dim();
    if region.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: region.dim(),
        });
    }
    if model.is_hyperbolic() && region.lo[n - 1] <= 0.0 {
        return Err(Error::OutsideChart(region.lo[n - 1]));
    }
    if cfg.samples < 2 {
        return Err(Error::Config("need at least two samples".into()));
    }
    let proposal = if model.is_hyperbolic() {
        cfg.proposal
    } else {
        Proposal::ChartUniform
    };
    let (lo, hi) = (&region.lo, &region.hi);
    let (log_lo, log_hi) = (lo[n - 1].ln(), hi[n - 1].ln());
    let scale = match proposal {
        Proposal::ChartUniform => region.volume(),
        Proposal::LogUniformHeight => region.volume() / (hi[n - 1] - lo[n - 1]) * (log_hi - log_lo),
    };
    let (mean, se) = sample_mean(cfg.samples, cfg.seed, |rng| {
        let mut x = [0.0f64; crate::manifold::MAX_DIM];
        for i in 0..n {
            let u: f64 = rng.random();
            x[i] = lo[i] + u * (hi[i] - lo[i]);
        }
        let jac = match proposal {
            Proposal::ChartUniform => 1.0,
            Proposal::LogUniformHeight => {
                let u: f64 = rng.random();
                let z = (log_lo + u * (log_hi - log_lo)).exp();
                x[n - 1] = z;
                z
            }
        };
        let x = &x[..n];
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v * model.density_raw(x) * jac
        }
    });
    Ok(MCEstimate {
        mean: mean * scale,
        std_error: se * scale,
        samples: cfg.samples,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_zero_integrates_to_zero() {
        let m = ModelSpace::hyperbolic(3).unwrap();
        let b = ChartBox::new(vec![-1.0, -1.0, 0.5], vec![1.0, 1.0, 2.0]).unwrap();
        let est = integrate_box(m, &b, |_| 0.0, &McConfig::default()).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn hyperbolic_box_volume() {
        // ∫ z^{-3} over [-1,1]² × [0.5, 2] = 4 · (1/2)(0.5^{-2} − 2^{-2}) = 7.5
        let m = ModelSpace::hyperbolic(3).unwrap();
        let b = ChartBox::new(vec![-1.0, -1.0, 0.5], vec![1.0, 1.0, 2.0]).unwrap();
        for proposal in [Proposal::ChartUniform, Proposal::LogUniformHeight] {
            let est = integrate_box(
                m,
                &b,
                |_| 1.0,
                &McConfig {
                    samples: 100_000,
                    seed: 3,
                    proposal,
                },
            )
            .unwrap();
            assert!(est.agrees_with_value(7.5, 4.0), "{proposal:?}: {est:?}");
        }
    }

    #[test]
    fn doubling_samples_shrinks_error_by_sqrt_two() {
        let m = ModelSpace::euclidean(2).unwrap();
        let b = ChartBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let f = |x: &[f64]| x[0] * x[1];
        let a = integrate_box(m, &b, f, &McConfig { samples: 200_000, seed: 1, proposal: Proposal::ChartUniform }).unwrap();
        let c = integrate_box(m, &b, f, &McConfig { samples: 400_000, seed: 1, proposal: Proposal::ChartUniform }).unwrap();
        let ratio = a.std_error / c.std_error;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
        assert!(a.agrees_with_value(0.25, 4.0));
    }

    #[test]
    fn estimate_is_independent_of_thread_count() {
        let m = ModelSpace::euclidean(2).unwrap();
        let b = ChartBox::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let f = |x: &[f64]| (x[0] * 3.0).sin() + x[1];
        let cfg = McConfig {
            samples: 50_001,
            seed: 99,
            proposal: Proposal::ChartUniform,
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| integrate_box(m, &b, f, &cfg).unwrap());
        let c = four.install(|| integrate_box(m, &b, f, &cfg).unwrap());
        assert_eq!(a.mean.to_bits(), c.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), c.std_error.to_bits());
    }

    #[test]
    fn agreement_metric() {
        let a = MCEstimate { mean: 1.0, std_error: 0.03, samples: 10, seed: 0 };
        let b = MCEstimate { mean: 1.1, std_error: 0.04, samples: 10, seed: 1 };
        assert_abs_diff_eq!(a.z_score(&b), 2.0, epsilon = 1e-12);
        assert!(a.agrees_with(&b, 3.0));
        assert!(!a.agrees_with(&b, 1.5));
    }
}
