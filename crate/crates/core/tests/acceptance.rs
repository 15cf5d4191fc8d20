//! Acceptance criteria. Runs without the libtest harness and prints one line per criterion.

use std::f64::consts::{LN_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use horoflow::config::{parse_grid, RunConfig};
use horoflow::locus::{dw_ds_check, sweep, LocusQuadrature, Strip};
use horoflow::numerics::finite_diff::FdConfig;
use horoflow::numerics::montecarlo::McConfig;
use horoflow::report::Status;
use horoflow::suites::{example_poincare, outside_image_check, run_suite, sample_points, Suite};
use horoflow::{BusemannField, CheckReport, Ideal, ModelSpace, NormalFlow, PairConfig, Result};

type Outcome = Result<(bool, String)>;

fn model(name: &str) -> ModelSpace {
    name.parse().expect("model name")
}

fn config(model: &str) -> RunConfig {
    RunConfig { model: model.into(), ..RunConfig::default() }
}

/// Pairs in general position as well as the normalized one.
fn h3_pairs() -> Result<Vec<PairConfig>> {
    let m = model("h3");
    let normalized = PairConfig::from_ideals(m, Ideal::Finite(vec![0.0, 0.0]), Ideal::Infinity)?;
    let base = m.point(&[0.1, 0.2, 0.8])?;
    let f1 = BusemannField::new(m, Ideal::Finite(vec![0.3, -0.2]), base.clone())?;
    let f2 = BusemannField::new(m, Ideal::Finite(vec![-1.0, 0.5]), base)?;
    Ok(vec![normalized, PairConfig::new(f1, f2)?])
}

fn select<'a>(reports: &'a [CheckReport], prefixes: &[&str]) -> Vec<&'a CheckReport> {
    reports.iter().filter(|r| prefixes.iter().any(|p| r.name.starts_with(p))).collect()
}

fn all_pass(reports: &[&CheckReport]) -> (bool, String) {
    let failed: Vec<&str> = reports.iter().filter(|r| r.status != Status::Pass).map(|r| r.name.as_str()).collect();
    let ok = !reports.is_empty() && failed.is_empty();
    (ok, if ok { format!("{} checks", reports.len()) } else { format!("not passing: {failed:?}") })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let reports = example_poincare()?;
    let get = |n: &str| reports.iter().find(|r| r.name == n).expect("example check");
    let circle = get("example.circle");
    let length = get("example.length");
    let bound = get("example.stated-bound");
    let ok = circle.computed <= 1e-10 && (length.computed - 1.5 * PI).abs() <= 1e-9 && length.computed < 3.0 * PI && bound.status == Status::Pass;
    Ok((ok, format!("residual {:.2e}, length {:.15} (3π/2 = {:.15})", circle.computed, length.computed, 1.5 * PI)))
}

fn criterion_2() -> Outcome {
    let fd = FdConfig::first_order();
    let mut worst: f64 = 0.0;
    for name in ["h2", "h3", "e3"] {
        let m = model(name);
        let h = horoflow::mean_curvature_h(m);
        let flow = NormalFlow::new(BusemannField::toward(m, config(name).pair()?.0)?);
        for x in sample_points(m, 20, 0xA2) {
            for t in [0.5, 1.0, 2.0] {
                worst = worst.max((flow.horosphere_jacobian(t, &x, &fd)? / (h * t).exp() - 1.0).abs());
            }
        }
    }
    Ok((worst <= 1e-6, format!("max |J/e^(ht) − 1| = {worst:.2e} over H², H³, E³")))
}

fn criterion_3() -> Outcome {
    let mut seen = Vec::new();
    for name in ["h2", "h3", "e3"] {
        let reports = run_suite(Suite::MapF, &config(name))?;
        seen.extend(select(&reports, &["map-f.jacobian", "map-f.integral["]).into_iter().cloned());
    }
    let points_ok = seen.iter().filter(|r| r.name == "map-f.jacobian").all(|r| r.quantities["points"] >= 100.0);
    let bumps = seen.iter().filter(|r| r.name.starts_with("map-f.integral[")).count();
    let (mut ok, detail) = all_pass(&seen.iter().collect::<Vec<_>>());
    let outside = outside_image_check(&McConfig::default());
    ok &= points_ok && bumps == 15 && outside.status == Status::PaperDiscrepancy && outside.computed <= 0.01;
    Ok((ok, format!("{detail}; out-of-image ratio {:.3} reported as {:?}", outside.computed, outside.status)))
}

fn criterion_4() -> Outcome {
    let quad = LocusQuadrature::default();
    let s_grid = [0.5, LN_2, 2.0];
    let t_grid = [-3.0, -1.0, 0.0, 1.0, 3.0];
    let mut worst_spread: f64 = 0.0;
    let mut worst_value: f64 = 0.0;
    for pair in h3_pairs()? {
        for &s in &s_grid {
            let mut vs = Vec::new();
            let mut ws = Vec::new();
            for &t in &t_grid {
                let i = pair.locus_with(s, t, &quad)?.general_path_integrals()?;
                vs.push(i.v);
                ws.push(i.w);
            }
            for vals in [&vs, &ws] {
                let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
                let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
                worst_spread = worst_spread.max((hi - lo) / lo);
            }
            for (v, w) in vs.iter().zip(&ws) {
                worst_value = worst_value.max(rel(*v, 2.0 * PI)).max(rel(*w, 2.0 * PI * s.exp_m1()));
            }
        }
    }
    Ok((worst_spread <= 1e-8 && worst_value <= 1e-8, format!("max spread {worst_spread:.2e}, max deviation from V = 2π, W = 2π(e^s − 1) {worst_value:.2e}")))
}

fn criterion_5() -> Outcome {
    let mut worst: f64 = 0.0;
    for pair in h3_pairs()? {
        for s in [0.5, 1.0, 2.0] {
            let (lhs, rhs) = dw_ds_check(&pair, s, 0.0, 1e-3)?;
            worst = worst.max(rel(lhs, rhs));
        }
    }
    Ok((worst <= 1e-4, format!("max relative mismatch {worst:.2e}")))
}

fn criterion_6() -> Outcome {
    let s_grid = parse_grid("0.1:3:10")?;
    let t_grid = parse_grid("-3:3:10")?;
    let mut worst = f64::NEG_INFINITY;
    let mut cells = 0;
    let mut gap: f64 = 0.0;
    for pair in h3_pairs()? {
        let rows = sweep(&pair, &s_grid, &t_grid, &LocusQuadrature::default())?;
        cells += rows.len();
        worst = worst.max(rows.iter().map(|r| r.vol - r.bound).fold(f64::NEG_INFINITY, f64::max));
        let eq = sweep(&pair, &[LN_2], &t_grid, &LocusQuadrature::default())?;
        gap = gap.max(eq.iter().map(|r| (r.vol - r.bound).abs()).fold(0.0, f64::max));
    }
    Ok((worst <= 1e-9 && gap <= 1e-8 && cells == 200, format!("{cells} cells, max vol − ½(V + W) = {worst:.2e}, equality gap at ln 2 = {gap:.2e}")))
}

fn criterion_7() -> Outcome {
    let s_grid = parse_grid("0.1:3:10")?;
    let t_grid = [-3.0, -1.0, 0.0, 1.0, 3.0];
    let mut worst = f64::NEG_INFINITY;
    let mut increasing = true;
    for pair in h3_pairs()? {
        let h = pair.h();
        let rows = sweep(&pair, &s_grid, &t_grid, &LocusQuadrature::default())?;
        worst = worst.max(rows.iter().map(|r| r.beta_max - (1.0 - 2.0 * (-h * r.s).exp())).fold(f64::NEG_INFINITY, f64::max));
        for &t in &t_grid {
            let vols: Vec<f64> = rows.iter().filter(|r| r.t == t).map(|r| r.vol).collect();
            increasing &= vols.windows(2).all(|w| w[1] > w[0]);
        }
    }
    Ok((worst <= 1e-9 && increasing, format!("max β − (1 − 2e^(−hs)) = {worst:.3}, vol strictly increasing in s: {increasing}")))
}

fn criterion_8() -> Outcome {
    let mut seen = Vec::new();
    for name in ["h3", "h2", "e3"] {
        let cfg = RunConfig { points: 20, flow_duration: 2.0, ..config(name) };
        let reports = run_suite(Suite::Flows, &cfg)?;
        seen.extend(select(&reports, &["flows.tracking-"]).into_iter().cloned());
    }
    let identities = seen.len();
    let (ok, detail) = all_pass(&seen.iter().collect::<Vec<_>>());
    let worst = seen.iter().map(|r| r.computed).fold(0.0, f64::max);
    Ok((ok && identities == 10, format!("{detail}, max deviation {worst:.2e}")))
}

fn criterion_9() -> Outcome {
    let mut seen = Vec::new();
    for name in ["h3", "h2", "e3"] {
        let cfg = RunConfig { dense_points: 50, ..config(name) };
        let reports = run_suite(Suite::Flows, &cfg)?;
        seen.extend(select(&reports, &["flows.divergence-"]).into_iter().cloned());
    }
    let (ok, detail) = all_pass(&seen.iter().collect::<Vec<_>>());
    let worst = seen.iter().map(|r| r.computed).fold(0.0, f64::max);
    Ok((ok, format!("{detail}, max residual {worst:.2e}")))
}

fn criterion_10() -> Outcome {
    let mut seen = Vec::new();
    for name in ["h2", "h3", "h5", "e3"] {
        let reports = run_suite(Suite::Busemann, &config(name))?;
        seen.extend(select(&reports, &["busemann.laplacian-", "busemann.eigenvalues-"]).into_iter().cloned());
    }
    let (ok, detail) = all_pass(&seen.iter().collect::<Vec<_>>());
    let sd = seen.iter().filter(|r| r.name == "busemann.laplacian-constant").map(|r| r.computed).fold(0.0, f64::max);
    Ok((ok, format!("{detail} over H², H³, H⁵, E³, max stddev of Δb {sd:.2e}")))
}

fn criterion_11() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for pair in h3_pairs()? {
        let quad = LocusQuadrature::default();
        let c = 0.5 * (pair.c0 + LN_2);
        let strip = Strip::new(&pair, c, c, 0.5)?;
        let q = horoflow::locus::strip_volume_quadrature(&pair, &strip, 16, 8, &quad)?;
        let mc = horoflow::locus::strip_volume_mc(&pair, &strip, &McConfig::default())?;
        let z = (mc.mean - q).abs() / mc.std_error;
        let mut shift: f64 = 0.0;
        for d in [-1.5, -0.5, 0.5, 1.5] {
            let moved = Strip::new(&pair, c + d, c - d, 0.5)?;
            shift = shift.max(rel(horoflow::locus::strip_volume_quadrature(&pair, &moved, 16, 8, &quad)?, q));
        }
        ok &= z <= 3.0 && shift <= 1e-8;
        details.push(format!("z = {z:.2}, t-shift spread {shift:.1e}"));
    }
    let h2 = run_suite(Suite::Coarea, &config("h2"))?;
    let h2_checks = select(&h2, &["coarea.strip-"]);
    let (h2_ok, _) = all_pass(&h2_checks);
    Ok((ok && h2_ok, format!("{}; H² strip checks pass: {h2_ok}", details.join("; "))))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("example reproduction", criterion_1),
        ("horosphere Jacobian e^(ht)", criterion_2),
        ("volume-preserving map F", criterion_3),
        ("V and W independent of t", criterion_4),
        ("∂W/∂s = (h/2)(W + V)", criterion_5),
        ("vol ≤ ½(V + W)", criterion_6),
        ("β bound and volume monotonicity", criterion_7),
        ("flow tracking", criterion_8),
        ("divergence identities", criterion_9),
        ("asymptotic harmonicity and Hessian bounds", criterion_10),
        ("strip volume", criterion_11),
    ];
    let mut failures = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        failures += usize::from(!ok);
        println!(
            "criterion {:>2} {} {title}: {detail} ({:.1}s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
