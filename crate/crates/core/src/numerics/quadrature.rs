//! One-dimensional quadrature rules and their tensor products.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    /// Equal weights on a uniform grid; spectrally accurate for smooth periodic integrands.
    PeriodicTrapezoid,
    GaussLegendre,
}

/// Nodes and positive weights on an interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub kind: QuadratureKind,
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn periodic_trapezoid(n: usize, lo: f64, hi: f64) -> Self {
        assert!(n > 0);
        let h = (hi - lo) / n as f64;
        Self {
            kind: QuadratureKind::PeriodicTrapezoid,
            lo,
            hi,
            nodes: (0..n).map(|i| lo + h * i as f64).collect(),
            weights: vec![h; n],
        }
    }

    pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Self {
        let (x, w) = gauss_legendre_reference(n);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        Self {
            kind: QuadratureKind::GaussLegendre,
            lo,
            hi,
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|v| v * half).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Measure of the domain (sum of the weights).
    pub fn measure(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor product of one-dimensional rules.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductRule {
    pub axes: Vec<QuadratureRule>,
}

impl ProductRule {
    pub fn new(axes: Vec<QuadratureRule>) -> Self {
        Self { axes }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(QuadratureRule::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `visit(point, weight)` for every node of the product grid.
    pub fn for_each<F: FnMut(&[f64], f64)>(&self, mut visit: F) {
        let d = self.axes.len();
        if d == 0 {
            visit(&[], 1.0);
            return;
        }
        let mut idx = vec![0usize; d];
        let mut point = vec![0.0; d];
        loop {
            let mut w = 1.0;
            for (k, axis) in self.axes.iter().enumerate() {
                point[k] = axis.nodes[idx[k]];
                w *= axis.weights[idx[k]];
            }
            visit(&point, w);
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < self.axes[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d {
                    return;
                }
            }
        }
    }
}
