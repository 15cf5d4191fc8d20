//! Verification suites: each returns its checks in a fixed order.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::busemann::{beta_raw, estimate_h, mean_curvature_h, probe_sublevel, BusemannField, TraceSource};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::locus::{dw_ds_check, strip_volume_h3, strip_volume_mc, strip_volume_quadrature, sweep, PairConfig, Strip, SweepRow};
use crate::manifold::{Ideal, ModelSpace, Point};
use crate::numerics::finite_diff::{fd_gradient, FdConfig};
use crate::numerics::integrate::{coarea_sliced_integral, integrate_region, radial_integral, TestFunction};
use crate::numerics::montecarlo::{integrate_box, ChartBox, McConfig};
use crate::numerics::ode::{integrate, OdeMethod};
use crate::numerics::quadrature::QuadratureRule;
use crate::numerics::unit_sphere_area;
use crate::report::{timed, CheckReport, ExpectedSource, Tolerance};
use crate::transport::{FlowKind, MapF, PairFlow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Busemann,
    MapF,
    Flows,
    Intersections,
    Coarea,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["busemann", "map-f", "flows", "intersections", "coarea", "all"];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Busemann => "busemann",
            Suite::MapF => "map-f",
            Suite::Flows => "flows",
            Suite::Intersections => "intersections",
            Suite::Coarea => "coarea",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "busemann" => Suite::Busemann,
            "map-f" => Suite::MapF,
            "flows" => Suite::Flows,
            "intersections" => Suite::Intersections,
            "coarea" => Suite::Coarea,
            "all" => Suite::All,
            other => return Err(Error::Config(format!("unknown suite `{other}`; expected one of {:?}", Suite::NAMES))),
        })
    }
}

/// Runs a suite. Configuration problems are returned as errors; numerical
/// problems become failing reports.
pub fn run_suite(suite: Suite, cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    cfg.validate()?;
    Ok(match suite {
        Suite::Busemann => busemann_suite(cfg)?,
        Suite::MapF => map_f_suite(cfg)?,
        Suite::Flows => flows_suite(cfg)?,
        Suite::Intersections => intersections_suite(cfg)?,
        Suite::Coarea => coarea_suite(cfg)?,
        Suite::All => {
            let mut all = busemann_suite(cfg)?;
            all.extend(map_f_suite(cfg)?);
            all.extend(flows_suite(cfg)?);
            all.extend(intersections_suite(cfg)?);
            all.extend(coarea_suite(cfg)?);
            all
        }
    })
}

/// Evaluates one check, turning an error into a failing report.
fn run<F>(name: &str, reference: &str, f: F) -> CheckReport
where
    F: FnOnce(&str, &str) -> Result<CheckReport>,
{
    timed(|| f(name, reference).unwrap_or_else(|e| CheckReport::errored(name, reference, e)))
}

/// Pseudo-random chart points: `x̄ ∈ [−1, 1]ⁿ⁻¹`, `ln z` uniform on `[ln 0.3, ln 2]`
/// in the half-space; the cube `[−2, 2]ⁿ` in Euclidean space.
pub fn sample_points(model: ModelSpace, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.dim();
    (0..count)
        .map(|_| {
            let mut c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            if model.is_hyperbolic() {
                c[n - 1] = rng.random_range(0.3f64.ln()..2f64.ln()).exp();
            } else {
                c.iter_mut().for_each(|v| *v *= 2.0);
            }
            model.point(&c).expect("sampled point lies in the chart")
        })
        .collect()
}

fn fields(cfg: &RunConfig) -> Result<(BusemannField, BusemannField)> {
    let m = cfg.model_space()?;
    let (a, b) = cfg.pair()?;
    let base = cfg.basepoint()?;
    Ok((BusemannField::new(m, a, base.clone())?, BusemannField::new(m, b, base)?))
}

fn max_over<T, F: FnMut(&T) -> Result<f64>>(items: &[T], mut f: F) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for it in items {
        let v = f(it)?;
        if v.is_nan() {
            return Ok(f64::NAN);
        }
        worst = worst.max(v);
    }
    Ok(worst)
}

fn busemann_suite(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let m = cfg.model_space()?;
    let (f1, f2) = fields(cfg)?;
    let h = mean_curvature_h(m);
    let tol = cfg.tolerances;
    let pts = sample_points(m, cfg.dense_points, cfg.seed);
    let few = &pts[..cfg.points.min(pts.len())];
    let mut out = Vec::new();

    out.push(run("busemann.gradient-unit", "‖∇b‖ = 1", |name, reference| {
        let worst = max_over(&pts, |p| {
            let a = m.norm(&f1.gradient(p)?);
            let b = m.norm(&f2.gradient(p)?);
            Ok((a - 1.0).abs().max((b - 1.0).abs()))
        })?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Definition, Tolerance::Abs(1e-12)))
    }));

    out.push(run("busemann.gradient-fd", "closed-form ∂b equals finite differences of b", |name, reference| {
        let fd = FdConfig::first_order().in_half_space(m.is_hyperbolic());
        let worst = max_over(&pts, |p| {
            let g = fd_gradient(|y| Ok(f1.value_raw(y.as_slice())), p.coords(), &fd)?;
            Ok((g - f1.differential_raw(p.as_slice())).amax())
        })?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::IndependentOracle, Tolerance::Abs(1e-8)))
    }));

    out.push(run(
        "busemann.truncation-monotone",
        "d(x, γ(T)) − T is non-increasing in T",
        |name, reference| {
            let horizons: Vec<f64> = (0..6).map(|k| 2f64.powi(k)).collect();
            let worst = max_over(few, |p| {
                let mut rise: f64 = f64::NEG_INFINITY;
                let mut prev = f1.value_truncated(p, horizons[0])?;
                for &t in &horizons[1..] {
                    let v = f1.value_truncated(p, t)?;
                    rise = rise.max(v - prev);
                    prev = v;
                }
                Ok(rise)
            })?;
            Ok(CheckReport::at_most(name, reference, worst, 0.0, Tolerance::Abs(1e-12)))
        },
    ));

    out.push(run("busemann.truncation-limit", "d(x, γ(T)) − T → b(x)", |name, reference| {
        let (horizon, allow) = if m.is_hyperbolic() { (40.0, 1e-8) } else { (1e7, 1e-6) };
        let worst = max_over(few, |p| Ok((f1.value_truncated(p, horizon)? - f1.value(p)?).abs()))?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::ClosedForm, Tolerance::Abs(allow)).with("horizon", horizon))
    }));

    out.push(run("busemann.hessian-fd", "closed-form ∇²b equals the finite-difference covariant Hessian", |name, reference| {
        let worst = max_over(few, |p| Ok(f1.hessian(p)?.max_abs_difference(&f1.hessian_fd(p, &FdConfig::second_order())?)))?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::IndependentOracle, Tolerance::Abs(tol.hessian)))
    }));

    out.push(run("busemann.trace", "tr U = h", |name, reference| {
        let worst = max_over(&pts, |p| Ok((f1.hessian(p)?.trace() - h).abs().max((f2.hessian(p)?.trace() - h).abs())))?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::ClosedForm, Tolerance::Abs(tol.trace)).with("h", h))
    }));

    out.push(run("busemann.hessian-kernel", "U(∇b) = 0", |name, reference| {
        let worst = max_over(&pts, |p| Ok(f1.hessian(p)?.gradient_residual()))?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Definition, Tolerance::Abs(1e-10)))
    }));

    let eig = |p: &Point| -> Result<(f64, f64)> {
        let e = f1.hessian(p)?.eigenvalues();
        Ok((e[0], e[e.len() - 1]))
    };
    out.push(run("busemann.eigenvalues-lower", "U is positive semidefinite", |name, reference| {
        let mut least = f64::INFINITY;
        for p in &pts {
            least = least.min(eig(p)?.0);
        }
        Ok(CheckReport::at_least(name, reference, least, 0.0, Tolerance::Abs(tol.eigenvalue)))
    }));
    out.push(run("busemann.eigenvalues-upper", "g(∇_w ∇b, w) ≤ h for unit w", |name, reference| {
        let mut most = f64::NEG_INFINITY;
        for p in &pts {
            most = most.max(eig(p)?.1);
        }
        Ok(CheckReport::at_most(name, reference, most, h, Tolerance::Abs(tol.eigenvalue)))
    }));

    out.push(run("busemann.laplacian-mean", "Δb = h, with Δb = div ∇b", |name, reference| {
        let (mean, sd) = estimate_h(&f1, &pts, TraceSource::Laplacian)?;
        Ok(CheckReport::equal(name, reference, mean, h, ExpectedSource::ClosedForm, Tolerance::Abs(tol.laplacian)).with("stddev", sd))
    }));
    out.push(run("busemann.laplacian-constant", "Δb is constant (asymptotic harmonicity)", |name, reference| {
        let (mean, sd) = estimate_h(&f1, &pts, TraceSource::Laplacian)?;
        Ok(CheckReport::at_most(name, reference, sd, 0.0, Tolerance::Abs(tol.laplacian)).with("mean", mean))
    }));

    if m.is_hyperbolic() {
        let pair = PairConfig::new(f1.clone(), f2.clone())?;
        out.push(run("busemann.gradients-cancel-on-axis", "∇b₁ + ∇b₂ = 0 on the geodesic joining the boundary points", |name, reference| {
            let inv = pair.normalizer.inverse();
            let n = m.dim();
            let mut worst: f64 = 0.0;
            for z in [0.05, 0.3, 1.0, 4.0, 20.0] {
                let mut y = vec![0.0; n];
                y[n - 1] = z;
                let x = inv.apply_raw(&y);
                let g = f1.grad_raw(x.as_slice()) + f2.grad_raw(x.as_slice());
                worst = worst.max(m.norm_raw(x.as_slice(), &g));
            }
            Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::ClosedForm, Tolerance::Abs(1e-10)))
        }));
        out.push(run("busemann.visibility-bounded", "every intersection of horoballs is bounded", |name, reference| {
            let n = m.dim();
            let mut y = vec![0.0; n];
            y[n - 1] = 1.0;
            let center = m.point(pair.normalizer.inverse().apply_raw(&y).as_slice())?;
            let c = 0.5 * pair.c0 + 1.0;
            let probe = probe_sublevel(&f1, &f2, c, c, &center, 30.0, 200, cfg.seed)?;
            Ok(CheckReport::equal(name, reference, probe.escaping as f64, 0.0, ExpectedSource::ClosedForm, Tolerance::Abs(0.0))
                .with("rays", probe.rays as f64)
                .with("max_inside", probe.max_inside))
        }));
    } else {
        out.push(run("busemann.visibility-unbounded", "horoball intersections in Euclidean space are unbounded", |name, reference| {
            let probe = probe_sublevel(&f1, &f2, 1.0, 1.0, &m.reference_point(), 1e3, 200, cfg.seed)?;
            Ok(CheckReport::at_least(name, reference, probe.escaping as f64, 1.0, Tolerance::Abs(0.0)).with("rays", probe.rays as f64))
        }));
    }
    Ok(out)
}

/// Points on geodesic spheres of radius `r` about `c`: `count` directions
/// (evenly spaced for `n = 2`, pseudo-random otherwise, plus the axes).
fn sphere_samples(model: ModelSpace, c: &Point, r: f64, count: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    let n = model.dim();
    let mut dirs: Vec<DVector<f64>> = Vec::with_capacity(count + 2 * n);
    if n == 2 {
        for i in 0..count {
            let a = 2.0 * PI * i as f64 / count as f64;
            dirs.push(DVector::from_vec(vec![a.cos(), a.sin()]));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut e = DVector::zeros(n);
                e[i] = sign;
                dirs.push(e);
            }
        }
        while dirs.len() < count + 2 * n {
            let u = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let len = u.norm();
            if len > 1e-3 && len <= 1.0 {
                dirs.push(u / len);
            }
        }
    }
    dirs.iter()
        .map(|u| {
            let v = u / model.norm_raw(c.as_slice(), u);
            model.geodesic_raw(c.as_slice(), &v, r)
        })
        .collect()
}

/// Bumps whose support lies in `{b > m}`, centred near `q`.
fn bumps_in_image(f: &MapF, count: usize, seed: u64) -> Result<Vec<TestFunction>> {
    let m = f.model();
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = if m.is_hyperbolic() { f.image_infimum() } else { f.field().value(&f.q)? - 1.0 };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let radius = rng.random_range(0.25..0.5);
        let mut c: Vec<f64> = f.q.as_slice().to_vec();
        for v in c.iter_mut().take(n - 1) {
            *v += rng.random_range(-0.3..0.3);
        }
        let y = m.point(&c)?;
        let target = floor + radius + rng.random_range(0.3..1.0);
        let center = f.flow.flow(target - f.field().value(&y)?, &y)?;
        out.push(TestFunction::new(center, radius)?);
    }
    Ok(out)
}

/// `∫ f∘F dμ` over the padded bounding box of `F⁻¹(∂ supp f)`.
fn integrate_pullback(f: &MapF, bump: &TestFunction, mc: &McConfig) -> Result<(crate::numerics::MCEstimate, ChartBox)> {
    let m = f.model();
    let boundary = sphere_samples(m, &bump.center, bump.radius, 2000, mc.seed ^ 0xB0)?;
    let pre: Result<Vec<Vec<f64>>> = boundary
        .iter()
        .map(|y| Ok(f.inverse_raw(y.as_slice())?.as_slice().to_vec()))
        .collect();
    let mut region = ChartBox::bounding(&pre?)?.padded(0.1);
    if m.is_hyperbolic() {
        let n = m.dim();
        region.lo[n - 1] = region.lo[n - 1].max(1e-3 * region.hi[n - 1]);
    }
    let est = integrate_box(
        m,
        &region,
        |x| match f.apply_raw(x) {
            Ok(y) => bump.eval_raw(y.as_slice()),
            Err(_) => 0.0,
        },
        mc,
    )?;
    Ok((est, region))
}

/// The configuration in `H²` where `∫ f∘F` loses all mass: `p = (0, 1)`,
/// `q = (0, e⁻¹)`, bump of radius 0.3 about `p` inside `{b ≤ m}`.
pub fn outside_image_check(mc: &McConfig) -> CheckReport {
    run(
        "map-f.outside-image",
        "∫ f dμ = ∫ f∘F dμ for every compactly supported f (F onto M)",
        |name, reference| {
            let m = ModelSpace::hyperbolic(2)?;
            let p = m.point(&[0.0, 1.0])?;
            let q = m.point(&[0.0, (-1f64).exp()])?;
            let f = MapF::new(m, &p, &q)?;
            let bump = TestFunction::new(p.clone(), 0.3)?;
            let mass = radial_integral(&bump, 64);
            let region = bump.support_box().padded(1.0);
            let pulled = integrate_box(
                m,
                &region,
                |x| match f.apply_raw(x) {
                    Ok(y) => bump.eval_raw(y.as_slice()),
                    Err(_) => 0.0,
                },
                mc,
            )?;
            let top = f.field().value(&p)? + bump.radius;
            Ok(CheckReport::at_most(name, reference, pulled.mean / mass, 0.01, Tolerance::Abs(0.0))
                .as_discrepancy()
                .with("integral_f", mass)
                .with("integral_f_of_F", pulled.mean)
                .with("std_error", pulled.std_error)
                .with("image_infimum", f.image_infimum())
                .with("support_max_level", top)
                .with_note("the image of F is {b > m}; this bump is supported in {b ≤ m}, so f∘F vanishes identically"))
        },
    )
}

fn map_f_suite(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let m = cfg.model_space()?;
    let (p, q) = cfg.map_endpoints()?;
    let f = MapF::new(m, &p, &q)?;
    let alpha = f.alpha;
    let h = alpha.h;
    let tol = cfg.tolerances;
    let mut out = Vec::new();
    let t_grid: Vec<f64> = (0..=40).map(|i| -5.0 + 0.25 * i as f64).collect();

    out.push(run("map-f.alpha-ode", "α′(t) e^{hα(t) − ht} = 1", |name, reference| {
        let worst = max_over(&t_grid, |&t| Ok(alpha.residual(t).abs()))?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Identity, Tolerance::Abs(tol.alpha_residual))
            .with("h", h)
            .with("t0", alpha.t0))
    }));

    out.push(run("map-f.alpha-integrated", "α solves α′ = e^{−h(α − t)}, α(0) = t₀", |name, reference| {
        let tr = integrate(
            |s| Ok(DVector::from_vec(vec![(-h * (s[0] - s[1])).exp(), 1.0])),
            &DVector::from_vec(vec![alpha.t0, 0.0]),
            1.0,
            &OdeMethod::adaptive(),
        )?;
        Ok(CheckReport::equal(name, reference, alpha.eval(1.0), tr.final_state()[0], ExpectedSource::IndependentOracle, Tolerance::Abs(1e-9)))
    }));

    if h > 0.0 {
        out.push(run("map-f.alpha-contracting", "α′(t) < 1 and α(t) − t strictly decreasing", |name, reference| {
            let most = max_over(&t_grid, |&t| Ok(alpha.derivative(t)))?;
            let mut rise = f64::NEG_INFINITY;
            for w in t_grid.windows(2) {
                rise = rise.max((alpha.eval(w[1]) - w[1]) - (alpha.eval(w[0]) - w[0]));
            }
            let ok = most < 1.0 && rise < 0.0;
            Ok(CheckReport::equal(name, reference, if ok { 1.0 } else { 0.0 }, 1.0, ExpectedSource::Definition, Tolerance::Abs(0.0))
                .with("max_derivative", most)
                .with("max_increment_alpha_minus_t", rise))
        }));
        out.push(run("map-f.image-infimum", "inf α = (1/h) ln(e^{ht₀} − 1)", |name, reference| {
            Ok(CheckReport::equal(name, reference, alpha.infimum(), alpha.eval(-40.0), ExpectedSource::IndependentOracle, Tolerance::Abs(1e-12)))
        }));
    }

    out.push(run("map-f.endpoint", "F(p) = q", |name, reference| {
        let err = (f.apply(&p)?.coords() - q.coords()).amax();
        Ok(CheckReport::equal(name, reference, err, 0.0, ExpectedSource::Definition, Tolerance::Abs(1e-10))
            .with("t0", alpha.t0)
            .with("image_infimum", if h > 0.0 { alpha.infimum() } else { -f64::MAX }))
    }));

    let pts = sample_points(m, cfg.dense_points, cfg.seed ^ 0xF);
    out.push(run("map-f.jacobian", "det dF = 1", |name, reference| {
        let fd = FdConfig::first_order();
        let worst = max_over(&pts, |x| Ok((f.jacobian_det(x, &fd)? - 1.0).abs()))?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Identity, Tolerance::Abs(tol.map_jacobian)).with("points", pts.len() as f64))
    }));

    out.push(run("map-f.inverse", "F⁻¹ ∘ F = id", |name, reference| {
        let worst = max_over(&pts, |x| Ok((f.inverse(&f.apply(x)?)?.coords() - x.coords()).amax()))?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Definition, Tolerance::Abs(1e-9)))
    }));

    out.push(run("map-f.normal-flow-levels", "b(φ_t x) = b(x) + t", |name, reference| {
        let worst = max_over(&pts, |x| {
            let mut w: f64 = 0.0;
            for t in [-1.0, 0.5, 2.0] {
                w = w.max((f.field().value(&f.flow.flow(t, x)?)? - f.field().value(x)? - t).abs());
            }
            Ok(w)
        })?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Definition, Tolerance::Abs(1e-10)))
    }));

    let few = &pts[..cfg.points.min(pts.len())];
    for t in [0.5, 1.0, 2.0] {
        out.push(run(&format!("map-f.horosphere-jacobian[t={t}]"), "(φ_t)*(dμ_t) = e^{ht} dμ₀", |name, reference| {
            let fd = FdConfig::first_order();
            let worst = max_over(few, |x| Ok((f.flow.horosphere_jacobian(t, x, &fd)? / (h * t).exp() - 1.0).abs()))?;
            Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::ClosedForm, Tolerance::Abs(tol.horosphere_jacobian)).with("h", h))
        }));
    }

    let bumps = bumps_in_image(&f, cfg.bumps, cfg.seed ^ 0xB)?;
    for (i, bump) in bumps.iter().enumerate() {
        out.push(run(&format!("map-f.integral[{i}]"), "∫ f dμ = ∫ f∘F dμ for f supported in the image of F", |name, reference| {
            let mc = McConfig { samples: cfg.samples, seed: cfg.seed.wrapping_add(2 * i as u64), ..McConfig::default() };
            let direct = integrate_region(bump, &bump.support_box().padded(0.05), &mc)?;
            let mc2 = McConfig { seed: cfg.seed.wrapping_add(2 * i as u64 + 1), ..mc };
            let (pulled, _) = integrate_pullback(&f, bump, &mc2)?;
            let z = direct.z_score(&pulled);
            Ok(CheckReport::at_most(name, reference, z, tol.sigmas, Tolerance::Abs(0.0))
                .with("integral_f", direct.mean)
                .with("integral_f_of_F", pulled.mean)
                .with("std_error_f", direct.std_error)
                .with("std_error_f_of_F", pulled.std_error)
                .with("radius", bump.radius))
        }));
    }

    if cfg.probe_outside_image {
        out.push(outside_image_check(&McConfig { samples: cfg.samples, seed: cfg.seed, ..McConfig::default() }));
    }
    Ok(out)
}

/// Points away from the set where `∇b₁ + ∇b₂` vanishes.
fn points_off_d(f1: &BusemannField, f2: &BusemannField, count: usize, seed: u64) -> Vec<Point> {
    let m = f1.model();
    sample_points(m, 4 * count + 16, seed)
        .into_iter()
        .filter(|p| 1.0 + beta_raw(f1, f2, p.as_slice()) > 1e-3)
        .take(count)
        .collect()
}

fn flows_suite(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let m = cfg.model_space()?;
    let (f1, f2) = fields(cfg)?;
    let tol = cfg.tolerances;
    let duration = cfg.flow_duration;
    let method = cfg.ode;
    let fd = FdConfig::first_order();
    let x_flow = PairFlow::new(f1.clone(), f2.clone(), FlowKind::Difference)?;
    let y_flow = PairFlow::new(f1.clone(), f2.clone(), FlowKind::Sum)?;
    let sum_defined = sample_points(m, 8, cfg.seed).iter().any(|p| 1.0 + beta_raw(&f1, &f2, p.as_slice()) > 1e-3);
    let starts = if sum_defined {
        points_off_d(&f1, &f2, cfg.points, cfg.seed ^ 0x51)
    } else {
        sample_points(m, cfg.points, cfg.seed ^ 0x51)
    };
    let dense = if sum_defined {
        points_off_d(&f1, &f2, cfg.dense_points, cfg.seed ^ 0x52)
    } else {
        sample_points(m, cfg.dense_points, cfg.seed ^ 0x52)
    };
    let mut out = Vec::new();

    let mut flows = vec![(&x_flow, "X", "b₁(φ_t x) = b₁(x) + t/2, b₂(φ_t x) = b₂(x) − t/2")];
    if sum_defined {
        flows.push((&y_flow, "Y", "b₁(ψ_s x) = b₁(x) + s/2, b₂(ψ_s x) = b₂(x) + s/2"));
    }
    for (pf, label, reference) in &flows {
        let (r1, r2) = pf.tracking_rates();
        for (which, field, rate) in [(1, &f1, r1), (2, &f2, r2)] {
            out.push(run(&format!("flows.tracking-{label}-b{which}"), reference, |name, reference| {
                let worst = max_over(&starts, |x| {
                    let y = pf.step(x, duration, &method)?;
                    Ok((field.value(&y)? - field.value(x)? - rate * duration).abs())
                })?;
                Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Identity, Tolerance::Abs(tol.tracking))
                    .with("trajectories", starts.len() as f64)
                    .with("duration", duration))
            }));
        }
    }
    if !sum_defined {
        out.push(run("flows.sum-singular", "Y is undefined where ∇b₁ + ∇b₂ = 0", |name, reference| {
            let raised = matches!(y_flow.step(&starts[0], 1.0, &method), Err(Error::SingularFlow(_)));
            Ok(CheckReport::equal(name, reference, if raised { 1.0 } else { 0.0 }, 1.0, ExpectedSource::Definition, Tolerance::Abs(0.0))
                .with_note("the two gradients cancel everywhere for antipodal directions"))
        }));
    }

    out.push(run("flows.divergence-raw", "div(∇b₁ − ∇b₂) = 0", |name, reference| {
        let worst = max_over(&dense, |x| Ok(x_flow.raw_difference_divergence_fd(x, &fd)?.abs()))?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Identity, Tolerance::Abs(tol.raw_divergence)))
    }));
    for (pf, label, reference) in &flows {
        let stmt = if *label == "X" { "div X = X[ln 1/(1 − β)]" } else { "div Y = Y[ln 1/(1 + β)] + h/(1 + β)" };
        let _ = reference;
        out.push(run(&format!("flows.divergence-{label}"), stmt, |name, reference| {
            let worst = max_over(&dense, |x| Ok((pf.divergence_fd(x, &fd)? - pf.divergence_identity(x, &fd)?).abs()))?;
            Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Identity, Tolerance::Abs(tol.divergence)))
        }));
    }

    let probes = &starts[..starts.len().min(5)];
    out.push(run("flows.density-X", "(φ_t)*(dμ) = (1 − β)/(1 − β∘φ_t) dμ", |name, reference| {
        let worst = max_over(probes, |x| {
            let num = x_flow.flow_density_fd(x, 1.0, &method, &fd)?;
            let closed = x_flow.flow_density_closed(x, 1.0, &method)?;
            Ok((num / closed - 1.0).abs())
        })?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Identity, Tolerance::Abs(tol.flow_density)))
    }));
    if sum_defined {
        out.push(run("flows.density-Y", "(ψ_s)*(dμ) = exp(∫₀ˢ h/(1 + β∘ψ_k) dk)·(1 + β)/(1 + β∘ψ_s) dμ", |name, reference| {
            let worst = max_over(probes, |x| {
                let num = y_flow.flow_density_fd(x, 1.0, &method, &fd)?;
                let closed = y_flow.flow_density_closed(x, 1.0, &method)?;
                Ok((num / closed - 1.0).abs())
            })?;
            Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Identity, Tolerance::Abs(tol.flow_density)))
        }));
    }

    out.push(run("flows.pushforward-X", "(φ_t)_* ∇bᵢ = ∇bᵢ ∘ φ_t", |name, reference| {
        let worst = max_over(probes, |x| x_flow.gradient_pushforward_residual(x, 1.0, &method, &fd))?;
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Identity, Tolerance::Abs(tol.pushforward)))
    }));

    if m.is_hyperbolic() {
        let pair = PairConfig::new(f1.clone(), f2.clone())?;
        let c0 = pair.c0;

        out.push(run("flows.pushforward-Y", "(ψ_s)_* ∇bᵢ = ∇bᵢ ∘ ψ_s", |name, reference| {
            let worst = max_over(probes, |x| y_flow.gradient_pushforward_residual(x, 1.0, &method, &fd))?;
            Ok(CheckReport::at_least(name, reference, worst, 1e-3, Tolerance::Abs(0.0))
                .as_discrepancy()
                .with_note("the vector identity fails off the Euclidean case because β changes along ψ_s; the differential identity dbᵢ ∘ dψ_s = dbᵢ holds (flows.pullback-Y)"))
        }));
        out.push(run("flows.pullback-Y", "dbᵢ(dψ_s w) = dbᵢ(w)", |name, reference| {
            let worst = max_over(probes, |x| y_flow.differential_pullback_residual(x, 1.0, &method, &fd))?;
            Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Identity, Tolerance::Abs(tol.pushforward)))
        }));

        out.push(run("flows.beta-monotone-Y", "β is non-decreasing along Y", |name, reference| {
            let mut worst = f64::NEG_INFINITY;
            for x in &starts {
                let tr = y_flow.trajectory(x, duration, &method)?;
                let betas: Vec<f64> = tr.states.iter().map(|s| beta_raw(&f1, &f2, s.as_slice())).collect();
                for w in betas.windows(2) {
                    worst = worst.max(w[0] - w[1]);
                }
            }
            Ok(CheckReport::at_most(name, reference, worst, 0.0, Tolerance::Abs(1e-12)))
        }));

        out.push(run("flows.sum-lower-bound", "b₁ + b₂ ≥ c₀", |name, reference| {
            let big = sample_points(m, 20_000, cfg.seed ^ 0x43);
            let mut least = f64::INFINITY;
            for x in &big {
                least = least.min(f1.value_raw(x.as_slice()) + f2.value_raw(x.as_slice()));
            }
            Ok(CheckReport::at_least(name, reference, least, c0, Tolerance::Abs(1e-9)).with("samples", big.len() as f64))
        }));

        for eps in [1e-2, 1e-4, 1e-6] {
            out.push(run(&format!("flows.near-axis-Y[eps={eps:e}]"), "b₁ + b₂ increases at unit rate along Y from c₀ + ε", |name, reference| {
                let l = pair.locus(eps, 0.0)?;
                let start = m.point(l.points()[0].as_slice())?;
                let tr = y_flow.trajectory(&start, 1.0, &OdeMethod::adaptive())?;
                let end = tr.final_state();
                let s_end = f1.value_raw(end.as_slice()) + f2.value_raw(end.as_slice()) - c0;
                Ok(CheckReport::equal(name, reference, s_end, eps + 1.0, ExpectedSource::Identity, Tolerance::Abs(tol.tracking))
                    .with("epsilon", eps)
                    .with("steps", tr.len() as f64))
            }));
        }
    }
    Ok(out)
}

/// Closed forms in `Hⁿ`: `vol = ω_{n−2}(e^s − 1)^{(n−2)/2}`, `V = vol/√(e^s − 1)`, `W = vol·√(e^s − 1)`.
pub fn closed_form_integrals(n: usize, s: f64) -> (f64, f64, f64) {
    let e = s.exp_m1();
    let vol = unit_sphere_area(n - 2) * e.powf((n as f64 - 2.0) / 2.0);
    (vol, vol / e.sqrt(), vol * e.sqrt())
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max - min) / mean.abs()
}

fn intersections_suite(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let m = cfg.model_space()?;
    let (f1, f2) = fields(cfg)?;
    if !m.is_hyperbolic() {
        return Ok(vec![run("intersections.visibility-rejected", "intersection loci need the visibility condition", |name, reference| {
            let rejected = matches!(PairConfig::new(f1.clone(), f2.clone()), Err(Error::NotVisibility(_)));
            Ok(CheckReport::equal(name, reference, if rejected { 1.0 } else { 0.0 }, 1.0, ExpectedSource::Definition, Tolerance::Abs(0.0)))
        })]);
    }
    let pair = PairConfig::new(f1, f2)?;
    let n = m.dim();
    let h = pair.h();
    let tol = cfg.tolerances;
    let quad = cfg.quadrature;
    let mut s_grid: Vec<f64> = cfg.s_grid.clone();
    s_grid.sort_by(f64::total_cmp);
    let mut out = Vec::new();

    out.push(run("intersections.c0-constant", "b₁ + b₂ is constant on the geodesic joining the boundary points", |name, reference| {
        let vals = pair.c0_along_axis(&[0.1, 1.0, 10.0]);
        let worst = vals.iter().map(|v| (v - pair.c0).abs()).fold(0.0, f64::max);
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Definition, Tolerance::Abs(1e-10)).with("c0", pair.c0))
    }));

    let rows = sweep(&pair, &s_grid, &cfg.t_grid, &quad);
    let rows: Vec<SweepRow> = match rows {
        Ok(r) => r,
        Err(e) => {
            out.push(CheckReport::errored("intersections.sweep", "loci S(s, t) over the configured grid", e));
            return Ok(out);
        }
    };

    out.push(run("intersections.membership", "S(s, t) ⊂ b₁⁻¹((s + c₀ + t)/2) ∩ b₂⁻¹((s + c₀ − t)/2)", |name, reference| {
        let mut worst: f64 = 0.0;
        for r in &rows {
            worst = worst.max(pair.locus_with(r.s, r.t, &quad)?.membership_residual());
        }
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::Definition, Tolerance::Abs(tol.membership)))
    }));

    out.push(run("intersections.gradients-independent", "∇b₁ + ∇b₂ ≠ 0 on S(s, t) for s > 0", |name, reference| {
        let mut least = f64::INFINITY;
        for r in &rows {
            least = least.min(pair.locus_with(r.s, r.t, &quad)?.min_gradient_sum());
        }
        Ok(CheckReport::at_least(name, reference, least, 1e-8, Tolerance::Abs(0.0)))
    }));

    out.push(run("intersections.isometry-invariance", "vol, V, W agree in normalized and original coordinates", |name, reference| {
        let mut worst: f64 = 0.0;
        for r in &rows {
            let g = pair.locus_with(r.s, r.t, &quad)?.general_path_integrals()?;
            worst = worst.max(((g.vol - r.vol) / r.vol).abs()).max(((g.v - r.v) / r.v).abs()).max(((g.w - r.w) / r.w).abs());
        }
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::IndependentOracle, Tolerance::Abs(tol.invariance)))
    }));

    for &s in &s_grid {
        let cells: Vec<&SweepRow> = rows.iter().filter(|r| r.s == s).collect();
        let vs: Vec<f64> = cells.iter().map(|r| r.v).collect();
        let ws: Vec<f64> = cells.iter().map(|r| r.w).collect();
        let (vol_c, v_c, w_c) = closed_form_integrals(n, s);
        out.push(run(&format!("intersections.V-t-spread[s={s}]"), "V(s, t) is independent of t", |name, reference| {
            Ok(CheckReport::equal(name, reference, spread(&vs), 0.0, ExpectedSource::Identity, Tolerance::Abs(tol.invariance)))
        }));
        out.push(run(&format!("intersections.W-t-spread[s={s}]"), "W(s, t) is independent of t", |name, reference| {
            Ok(CheckReport::equal(name, reference, spread(&ws), 0.0, ExpectedSource::Identity, Tolerance::Abs(tol.invariance)))
        }));
        out.push(run(&format!("intersections.V[s={s}]"), "V = ω_{n−2}(e^s − 1)^{(n−3)/2}", |name, reference| {
            let worst = vs.iter().map(|v| (v - v_c).abs()).fold(0.0, f64::max);
            Ok(CheckReport::equal(name, reference, vs[0], v_c, ExpectedSource::ClosedForm, Tolerance::Rel(tol.invariance)).with("max_abs_error", worst))
        }));
        out.push(run(&format!("intersections.W[s={s}]"), "W = ω_{n−2}(e^s − 1)^{(n−1)/2}", |name, reference| {
            let worst = ws.iter().map(|w| (w - w_c).abs()).fold(0.0, f64::max);
            Ok(CheckReport::equal(name, reference, ws[0], w_c, ExpectedSource::ClosedForm, Tolerance::Rel(tol.invariance)).with("max_abs_error", worst))
        }));
        out.push(run(&format!("intersections.vol[s={s}]"), "vol S(s, t) = ω_{n−2}(e^s − 1)^{(n−2)/2}", |name, reference| {
            Ok(CheckReport::equal(name, reference, cells[0].vol, vol_c, ExpectedSource::ClosedForm, Tolerance::Rel(tol.invariance)))
        }));
        if s > 1e-3 {
            out.push(run(&format!("intersections.dW-ds[s={s}]"), "∂W/∂s = (h/2)(W + V)", |name, reference| {
                let (lhs, rhs) = dw_ds_check(&pair, s, cfg.t_grid[0], 1e-3)?;
                Ok(CheckReport::equal(name, reference, lhs, rhs, ExpectedSource::Identity, Tolerance::Rel(tol.dw_ds)))
            }));
        }
    }

    out.push(run("intersections.volume-bound", "vol S ≤ ½(V + W)", |name, reference| {
        let worst = rows.iter().map(|r| r.vol - r.bound).fold(f64::NEG_INFINITY, f64::max);
        Ok(CheckReport::at_most(name, reference, worst, 0.0, Tolerance::Abs(tol.bound)).with("cells", rows.len() as f64))
    }));
    out.push(run("intersections.volume-bound-equality", "vol S = ½(V + W) when e^s = 2", |name, reference| {
        let l = pair.locus_with(LN_2, cfg.t_grid[0], &quad)?;
        let bound = 0.5 * (l.integral_v()? + l.integral_w()?);
        Ok(CheckReport::equal(name, reference, l.volume(), bound, ExpectedSource::Identity, Tolerance::Abs(1e-8)))
    }));
    out.push(run("intersections.beta-bound", "β ≤ 1 − 2e^{−hs} on S(s, t)", |name, reference| {
        let worst = rows.iter().map(|r| r.beta_max - (1.0 - 2.0 * (-h * r.s).exp())).fold(f64::NEG_INFINITY, f64::max);
        Ok(CheckReport::at_most(name, reference, worst, 0.0, Tolerance::Abs(tol.bound)))
    }));
    let (mono_name, mono_ref, floor) = if n >= 3 {
        ("intersections.volume-increasing", "vol S(s, t) is strictly increasing in s", f64::MIN_POSITIVE)
    } else {
        ("intersections.volume-nondecreasing", "vol S(s, t) is non-decreasing in s (two points in H²)", 0.0)
    };
    out.push(run(mono_name, mono_ref, |name, reference| {
        let t = cfg.t_grid[0];
        let vols: Vec<f64> = s_grid.iter().map(|&s| rows.iter().find(|r| r.s == s && r.t == t).map(|r| r.vol).unwrap_or(f64::NAN)).collect();
        let least = vols.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let least = if vols.len() < 2 { f64::INFINITY } else { least };
        Ok(CheckReport::at_least(name, reference, least, floor, Tolerance::Abs(0.0)))
    }));
    out.push(run("intersections.V-s-dependence", "informational: V(s, ·) across s against its closed form", |name, reference| {
        let vs: Vec<f64> = s_grid.iter().map(|&s| rows.iter().find(|r| r.s == s).map(|r| r.v).unwrap_or(f64::NAN)).collect();
        let closed: Vec<f64> = s_grid.iter().map(|&s| closed_form_integrals(n, s).1).collect();
        let mut r = CheckReport::equal(name, reference, spread(&vs), spread(&closed), ExpectedSource::ClosedForm, Tolerance::Abs(tol.invariance));
        for (s, v) in s_grid.iter().zip(&vs) {
            r = r.with(&format!("V(s={s})"), *v);
        }
        Ok(r.with_note(if n == 3 { "V is constant in s as well as in t" } else { "V varies with s; only t-independence is asserted" }))
    }));
    Ok(out)
}

fn coarea_suite(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let m = cfg.model_space()?;
    let (f1, f2) = fields(cfg)?;
    let tol = cfg.tolerances;
    let mc = McConfig { samples: cfg.samples, seed: cfg.seed, ..McConfig::default() };
    let bump = TestFunction::new(m.reference_point(), 0.5)?;
    let mut out = Vec::new();

    out.push(run("coarea.zero-function", "∫ 0 dμ = 0", |name, reference| {
        let est = integrate_box(m, &bump.support_box(), |_| 0.0, &mc)?;
        Ok(CheckReport::equal(name, reference, est.mean, 0.0, ExpectedSource::Definition, Tolerance::Abs(0.0)).with("std_error", est.std_error))
    }));

    out.push(run("coarea.slicing-vs-polar", "∫ f dμ = ∫ ∫_{b = τ} f dμ_τ dτ (‖∇b‖ = 1)", |name, reference| {
        let sliced = coarea_sliced_integral(&bump, &f1, 200, 200)?;
        let polar = radial_integral(&bump, 64);
        Ok(CheckReport::equal(name, reference, sliced, polar, ExpectedSource::IndependentOracle, Tolerance::Rel(1e-7)))
    }));

    out.push(run("coarea.monte-carlo-vs-slicing", "Monte Carlo ∫ f dμ agrees with the coarea slicing", |name, reference| {
        let est = integrate_region(&bump, &bump.support_box(), &mc)?;
        let sliced = coarea_sliced_integral(&bump, &f2, 200, 200)?;
        let z = (est.mean - sliced).abs() / est.std_error;
        Ok(CheckReport::at_most(name, reference, z, tol.sigmas, Tolerance::Abs(0.0))
            .with("monte_carlo", est.mean)
            .with("std_error", est.std_error)
            .with("sliced", sliced))
    }));

    if let Some(exact) = bump.exact_euclidean_integral() {
        out.push(run("coarea.euclidean-exact", "∫ (1 − |x|²/R²)³₊ dx = ω_{n−1} Rⁿ ½B(n/2, 4)", |name, reference| {
            let sliced = coarea_sliced_integral(&bump, &f1, 200, 200)?;
            Ok(CheckReport::equal(name, reference, sliced, exact, ExpectedSource::ClosedForm, Tolerance::Rel(1e-7)))
        }));
    }

    if m.is_hyperbolic() {
        let pair = PairConfig::new(f1, f2)?;
        let quad = cfg.quadrature;
        let c = 0.5 * (pair.c0 + LN_2);
        let strip = Strip::new(&pair, c, c, 0.5)?;
        let value = strip_volume_quadrature(&pair, &strip, 16, 8, &quad);
        out.push(run("coarea.strip-monte-carlo", "strip volume by Monte Carlo equals the iterated coarea formula", |name, reference| {
            let q = value.clone()?;
            let est = strip_volume_mc(&pair, &strip, &mc)?;
            let z = (est.mean - q).abs() / est.std_error;
            Ok(CheckReport::at_most(name, reference, z, tol.sigmas, Tolerance::Abs(0.0))
                .with("quadrature", q)
                .with("monte_carlo", est.mean)
                .with("std_error", est.std_error))
        }));
        for shift in [-1.0, 1.0] {
            out.push(run(&format!("coarea.strip-shift[{shift}]"), "strip volume is independent of c₁ − c₂", |name, reference| {
                let q = value.clone()?;
                let moved = Strip::new(&pair, c + shift, c - shift, 0.5)?;
                let v = strip_volume_quadrature(&pair, &moved, 16, 8, &quad)?;
                Ok(CheckReport::equal(name, reference, v, q, ExpectedSource::Identity, Tolerance::Rel(tol.invariance)))
            }));
        }
        if let Some(exact) = strip_volume_h3(&pair, &strip) {
            out.push(run("coarea.strip-closed-form", "strip volume in H³ is π e^{a}(e^{r} − 1)²", |name, reference| {
                Ok(CheckReport::equal(name, reference, value.clone()?, exact, ExpectedSource::ClosedForm, Tolerance::Rel(1e-8)))
            }));
        }
    }
    Ok(out)
}

/// The half-space example: horospheres at `ξ = (±1, 0)` through `(0, 0, 2)`.
pub fn example_poincare() -> Result<Vec<CheckReport>> {
    let m = ModelSpace::hyperbolic(3)?;
    let pair = PairConfig::from_ideals(m, Ideal::Finite(vec![1.0, 0.0]), Ideal::Finite(vec![-1.0, 0.0]))?;
    let top = m.point(&[0.0, 0.0, 2.0])?;
    let c = 1.25f64.ln();
    let mut out = Vec::new();

    out.push(run("example.horospheres-through-top", "both horospheres pass through (0, 0, 2) at level ln(5/4)", |name, reference| {
        let err = (pair.f1.value(&top)? - c).abs().max((pair.f2.value(&top)? - c).abs());
        Ok(CheckReport::equal(name, reference, err, 0.0, ExpectedSource::ClosedForm, Tolerance::Abs(1e-14)))
    }));

    let l = pair.locus(2.0 * c - pair.c0, 0.0)?;
    out.push(run("example.circle", "the intersection is {x = 0, y² + (z − 5/4)² = 9/16}", |name, reference| {
        let mut worst: f64 = 0.0;
        for p in l.points() {
            worst = worst.max(p[0].abs()).max((p[1] * p[1] + (p[2] - 1.25).powi(2) - 9.0 / 16.0).abs());
        }
        Ok(CheckReport::equal(name, reference, worst, 0.0, ExpectedSource::ClosedForm, Tolerance::Abs(1e-10)).with("nodes", l.node_count() as f64))
    }));

    out.push(run("example.length", "length of the circle is ∫₀^{2π} 3/(3 sin θ + 5) dθ = 3π/2", |name, reference| {
        Ok(CheckReport::equal(name, reference, l.volume(), 1.5 * PI, ExpectedSource::ClosedForm, Tolerance::Abs(1e-9)))
    }));

    out.push(run("example.length-integral", "∫₀^{2π} 3/(3 sin θ + 5) dθ by the trapezoid rule", |name, reference| {
        let v = QuadratureRule::periodic_trapezoid(512, 0.0, 2.0 * PI).integrate(|t| 3.0 / (3.0 * t.sin() + 5.0));
        Ok(CheckReport::equal(name, reference, l.volume(), v, ExpectedSource::IndependentOracle, Tolerance::Abs(1e-12)))
    }));

    out.push(run("example.stated-bound", "length < 3π", |name, reference| {
        Ok(CheckReport::at_most(name, reference, l.volume(), 3.0 * PI, Tolerance::Abs(0.0)))
    }));

    out.push(run("example.volume-bound", "length ≤ ½(V + W) = 25π/16", |name, reference| {
        let bound = 0.5 * (l.integral_v()? + l.integral_w()?);
        Ok(CheckReport::at_most(name, reference, l.volume(), bound, Tolerance::Abs(1e-9)).with("bound_closed_form", 25.0 * PI / 16.0).with("bound", bound))
    }));
    Ok(out)
}

/// Formats like C's `%.17g`.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= 17 {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (16 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

pub const SWEEP_HEADER: &str = "s,t,vol,V,W,bound,beta_max";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let cols = [r.s, r.t, r.vol, r.v, r.w, r.bound, r.beta_max].map(format_g17);
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// Sweep over the configured pair.
pub fn run_sweep(cfg: &RunConfig, s_grid: &[f64], t_grid: &[f64]) -> Result<Vec<SweepRow>> {
    let m = cfg.model_space()?;
    if !m.is_hyperbolic() {
        return Err(Error::NotVisibility(format!("no bounded horosphere intersections in {m}")));
    }
    let (f1, f2) = fields(cfg)?;
    sweep(&PairConfig::new(f1, f2)?, s_grid, t_grid, &cfg.quadrature)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_formatting() {
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(2.0), "2");
        assert_eq!(format_g17(2.0 * PI), "6.2831853071795862");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_g17(-3.0), "-3");
        assert_eq!(format_g17(1e20), "1e+20");
    }

    #[test]
    fn closed_forms() {
        let (vol, v, w) = closed_form_integrals(3, LN_2);
        assert!((vol - 2.0 * PI).abs() < 1e-14 && (v - 2.0 * PI).abs() < 1e-14 && (w - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn example_passes() {
        let reports = example_poincare().unwrap();
        assert!(reports.iter().all(|r| r.passed()), "{reports:#?}");
    }

    #[test]
    fn suite_names_roundtrip() {
        for n in Suite::NAMES {
            assert_eq!(n.parse::<Suite>().unwrap().to_string(), n);
        }
        assert!("nope".parse::<Suite>().is_err());
    }
}
