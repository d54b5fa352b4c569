//! Acceptance run: one PASS/FAIL line per criterion, with runtimes.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

use dispersion_lab::decay::{self, ScanConfig, XMode};
use dispersion_lab::oscillatory::{Evaluator, Target};
use dispersion_lab::partition::{self, angular_net, classify, covering_distance, cutoffs, Region, RegionContext, NET_SPACING};
use dispersion_lab::spectral::{analyze_detailed, exponent_table, rho_b, sigma, Analysis, SpectralConfig};
use dispersion_lab::{sphere, PolynomialSymbol};

struct Outcome {
    pass: bool,
    detail: String,
}

fn sym(name: &str, n: usize, terms: &[(&[u32], f64)]) -> PolynomialSymbol {
    PolynomialSymbol::new(name, n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
}

fn quartic() -> PolynomialSymbol {
    sym("quartic", 1, &[(&[4], 1.0)])
}

fn radial_quartic() -> PolynomialSymbol {
    sym("radial_quartic", 2, &[(&[4, 0], 1.0), (&[2, 2], 2.0), (&[0, 4], 1.0)])
}

fn analysis(p: &PolynomialSymbol) -> Analysis {
    analyze_detailed(p, &SpectralConfig::for_dim(p.dim())).unwrap()
}

/// Composite Simpson rule on [a, b] with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn criterion_1() -> Outcome {
    let e = Evaluator::new(&sym("free", 1, &[(&[2], 1.0)])).unwrap();
    let mut worst: f64 = 0.0;
    for t in [0.1, 0.3, 1.0, 3.0, 10.0] {
        for x in [0.0, 1.0, 5.0] {
            let r = e.fundamental_solution(t, &[x], None, 1e-7).unwrap();
            let want = (PI / t).sqrt();
            worst = worst.max((r.value.norm() - want).abs() / want);
        }
    }
    Outcome {
        pass: worst < 1e-4,
        detail: format!("max relative error {worst:.2e} (< 1e-4)"),
    }
}

fn criterion_2() -> Outcome {
    // ∫₀^∞ e^{iu⁴} du = e^{iπ/8}∫₀^∞ e^{−s⁴} ds, the last integral by Simpson
    let real_line = simpson(|s| (-s.powi(4)).exp(), 0.0, 7.0, 20_000);
    let oracle_quad = 2.0 * real_line;
    let closed = gamma(0.25) / 4.0;
    let cos_part = closed * (PI / 8.0).cos();
    let sin_part = closed * (PI / 8.0).sin();
    let oracle_gamma = 2.0 * cos_part.hypot(sin_part);
    let e = Evaluator::new(&quartic()).unwrap();
    let r = e.fundamental_solution(1.0, &[0.0], None, 1e-7).unwrap();
    let rel = (r.value.norm() - oracle_gamma).abs() / oracle_gamma;
    let oracles_agree = (oracle_quad - oracle_gamma).abs() < 1e-9;
    let mut products = Vec::new();
    for k in 0..=8 {
        let t = 10f64.powf(-2.0 + 0.5 * k as f64);
        let v = e.fundamental_solution(t, &[0.0], None, 1e-7).unwrap();
        products.push(v.value.norm() * t.powf(0.25));
    }
    let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = products.iter().copied().fold(0.0, f64::max);
    let spread = hi / lo - 1.0;
    Outcome {
        pass: rel < 1e-3 && oracles_agree && spread < 0.01,
        detail: format!(
            "|I(1,0)| = {:.6} vs 2Γ(5/4) = {oracle_gamma:.6} (rel {rel:.1e}); |I|·t^(1/4) spread {spread:.1e} over [1e-2, 1e2]",
            r.value.norm()
        ),
    }
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut rows = 0;
    for n in 1..=3usize {
        for m in 2..=10u32 {
            ok &= sigma(n, m, 1.0).unwrap() == n as f64 / m as f64;
            ok &= sigma(n, m, 0.5).unwrap() == n as f64 / 2.0;
            for k in 0..=10 {
                let b = 0.5 + 0.05 * k as f64;
                let r = rho_b(n, m, b).unwrap();
                let half = -(n as f64) / 2.0;
                ok &= r >= half;
                ok &= (r == half) == (m == 2);
                ok &= exponent_table(n, m, b).unwrap().rho_dominates_new;
                rows += 1;
            }
        }
    }
    Outcome {
        pass: ok,
        detail: format!("σ identities and ρ_b ≥ −n/2 on {rows} grid rows, equality exactly at m = 2"),
    }
}

fn quartic_scan(target: Target) -> (decay::DecayScan, f64) {
    let p = quartic();
    let a = analysis(&p);
    let l = a.report.as_ref().unwrap().l;
    let e = Evaluator::new(&p).unwrap();
    let scan = decay::run_scan(&e, p.name(), a.exponents.as_ref().unwrap(), l, &ScanConfig::new(target)).unwrap();
    (scan, l)
}

fn criterion_4() -> Outcome {
    let (scan, _) = quartic_scan(Target::I);
    let v = decay::verify_theorem2(&scan).unwrap();
    let slope = scan.fitted.slope_small_t.unwrap_or(f64::NAN);
    Outcome {
        pass: (slope + 0.25).abs() <= 0.03 && v.pass && scan.unreliable.is_empty(),
        detail: format!(
            "small-t slope {slope:.4} (−0.25 ± 0.03), large-t growth ratio {:.3}, verdict {}",
            v.large_t.growth_ratio.unwrap_or(f64::NAN),
            if v.pass { "PASS" } else { "FAIL" }
        ),
    }
}

fn criterion_5() -> Outcome {
    let (scan, l) = quartic_scan(Target::I1);
    let v = decay::verify_theorem1(&scan).unwrap();
    let edge = v.large_t.edge_slope.unwrap_or(f64::NAN);
    let trend = v.large_t.trend_slope.unwrap_or(f64::NAN);
    Outcome {
        pass: v.large_t.pass && edge >= -0.6 && scan.unreliable.is_empty(),
        detail: format!(
            "L = {l}, large-t edge slope {edge:.4} (≥ −0.6), trend of amplitude·t^(1/2) {trend:.4}, C_large = {:.4}",
            v.large_t.constant.unwrap_or(f64::NAN)
        ),
    }
}

/// 2π∫₀^∞ ρ e^{itρ⁴} dρ with ρ = e^{iπ/8}s: 2π e^{iπ/4}∫₀^∞ s e^{−ts⁴} ds.
fn radial_oracle(t: f64) -> Complex64 {
    let reach = 8.0 * t.powf(-0.25);
    let v = simpson(|s| s * (-t * s.powi(4)).exp(), 0.0, reach, 40_000);
    Complex64::from_polar(2.0 * PI * v, PI / 4.0)
}

fn criterion_6() -> Outcome {
    let p = radial_quartic();
    let a = analysis(&p);
    let b_hat = a.report.as_ref().unwrap().b_hat;
    let l = a.report.as_ref().unwrap().l;
    let e = Evaluator::new(&p).unwrap();
    let mut cfg = ScanConfig::new(Target::I);
    cfg.mode = XMode::Origin;
    cfg.large_t = vec![];
    let scan = decay::run_scan(&e, p.name(), a.exponents.as_ref().unwrap(), l, &cfg).unwrap();
    let slope = scan.fitted.slope_small_t.unwrap_or(f64::NAN);
    let mut worst: f64 = 0.0;
    for r in &scan.records {
        let want = radial_oracle(r.t).norm();
        worst = worst.max((r.amplitude - want).abs() / want);
    }
    Outcome {
        pass: (b_hat - 1.0).abs() <= 0.05 && (slope + 0.5).abs() <= 0.05 && worst < 1e-4,
        detail: format!("b̂ = {b_hat:.4}, small-t slope {slope:.4} (−0.5 ± 0.05), max deviation from radial oracle {worst:.1e}"),
    }
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut uniform = move |lo: f64, hi: f64| rng.random_range(lo..hi);

    // partition of unity and support consistency
    let p2 = radial_quartic();
    let mut pou: f64 = 0.0;
    let mut support_ok = true;
    for &(t, x) in &[(0.01, [-0.3, 0.2]), (1.0, [2.0, -1.0]), (0.5, [0.0, 0.0])] {
        let ctx = RegionContext::new(t, &x, 1.0, 4).unwrap();
        for _ in 0..10_000 {
            let xi = [uniform(-6.0, 6.0), uniform(-6.0, 6.0)];
            let c = cutoffs(&ctx, &p2, &xi).unwrap();
            pou = pou.max((c.phi1 + c.phi2 + c.phi3 - 1.0).abs());
            let regions = classify(&ctx, &p2, &xi).unwrap();
            let omega = sphere::norm(&xi) >= 1.0;
            if omega {
                support_ok &= c.phi1 == 0.0 || regions.contains(&Region::Omega1);
                support_ok &= c.phi2 == 0.0 || regions.contains(&Region::Omega2);
                support_ok &= c.phi3 == 0.0 || regions.contains(&Region::Omega3);
            }
        }
    }
    if pou > 1e-15 {
        failures.push(format!("partition of unity off by {pou:e}"));
    }
    if !support_ok {
        failures.push("cutoff outside its region".into());
    }

    // angular nets
    for n in [2usize, 3] {
        let net = angular_net(n).unwrap();
        let mut min_sep = f64::INFINITY;
        for i in 0..net.len() {
            for j in 0..i {
                min_sep = min_sep.min(sphere::dist(&net[i], &net[j]));
            }
        }
        let cover = covering_distance(&net, &sphere::net(n, 20_000));
        if min_sep < NET_SPACING || cover > NET_SPACING {
            failures.push(format!("net n={n}: separation {min_sep:.4}, covering {cover:.4}"));
        }
    }

    // derivatives against finite differences
    let p = sym("mixed", 2, &[(&[4, 0], 1.0), (&[3, 1], 0.4), (&[0, 4], 2.0), (&[2, 1], -1.0), (&[0, 2], 0.5), (&[1, 0], 0.3)]);
    let mut fd_err: f64 = 0.0;
    for _ in 0..200 {
        let xi = [uniform(-2.0, 2.0), uniform(-2.0, 2.0)];
        let g = p.gradient(&xi).unwrap();
        let h = p.hessian(&xi).unwrap();
        for j in 0..2 {
            let step = 1e-5;
            let mut a = xi;
            let mut b = xi;
            a[j] += step;
            b[j] -= step;
            let fd = (p.eval(&a).unwrap() - p.eval(&b).unwrap()) / (2.0 * step);
            fd_err = fd_err.max((fd - g[j]).abs() / (1.0 + g[j].abs()));
            let (ga, gb) = (p.gradient(&a).unwrap(), p.gradient(&b).unwrap());
            for i in 0..2 {
                let fd = (ga[i] - gb[i]) / (2.0 * step);
                fd_err = fd_err.max((fd - h.get(i, j)).abs() / (1.0 + h.get(i, j).abs()));
            }
        }
    }
    if fd_err > 1e-6 {
        failures.push(format!("finite-difference mismatch {fd_err:e}"));
    }

    // symmetries and cross-method agreement
    let p1 = sym("poly", 1, &[(&[4], 1.0), (&[3], -0.5), (&[2], -1.0), (&[1], 0.3)]);
    let even = sym("even", 1, &[(&[4], 1.0), (&[2], -1.0)]);
    let (e1, ee) = (Evaluator::new(&p1).unwrap(), Evaluator::new(&even).unwrap());
    for &(t, x) in &[(0.7, 1.3), (2.0, -3.0), (0.2, 0.5)] {
        let a = e1.partition_guided(t, &[x], 1.5, 1e-8).unwrap();
        let b = e1.partition_guided(-t, &[-x], 1.5, 1e-8).unwrap();
        if (a.value - b.value.conj()).norm() > 2.0 * (a.abs_error_estimate + b.abs_error_estimate) {
            failures.push(format!("conjugation at ({t}, {x})"));
        }
        let m = e1.fundamental_solution(t, &[x], None, 1e-6).unwrap();
        let mc = e1.fundamental_solution(-t, &[-x], None, 1e-6).unwrap();
        if (m.value - mc.value.conj()).norm() > 2.0 * (m.abs_error_estimate + mc.abs_error_estimate) {
            failures.push(format!("mollified conjugation at ({t}, {x})"));
        }
        if (m.value - a.value).norm() > m.abs_error_estimate + a.abs_error_estimate {
            failures.push(format!("methods disagree at ({t}, {x}): {} vs {}", m.value, a.value));
        }
        let u = ee.partition_guided(t, &[x], 1.5, 1e-8).unwrap();
        let v = ee.partition_guided(t, &[-x], 1.5, 1e-8).unwrap();
        if (u.value - v.value).norm() > 2.0 * (u.abs_error_estimate + v.abs_error_estimate) {
            failures.push(format!("parity at ({t}, {x})"));
        }
    }
    let free2 = Evaluator::new(&sym("free2", 2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)])).unwrap();
    for &(t, x) in &[(1.0, [0.5, -1.0]), (3.0, [2.0, 0.0])] {
        let a = free2.fundamental_solution(t, &x, None, 1e-7).unwrap();
        let b = free2.partition_guided(t, &x, 1.0, 1e-7).unwrap();
        let want = PI / t;
        if (a.value.norm() / want - 1.0).abs() > 1e-5 || (b.value.norm() / want - 1.0).abs() > 1e-5 {
            failures.push(format!("2-D free symbol at t = {t}"));
        }
        if (a.value - b.value).norm() > a.abs_error_estimate + b.abs_error_estimate {
            failures.push(format!("2-D cross-method at t = {t}"));
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("partition of unity {pou:.1e}, FD {fd_err:.1e}, nets, symmetries, cross-method")
        } else {
            failures.join("; ")
        },
    }
}

fn criterion_8() -> Outcome {
    let p = radial_quartic();
    let a = analysis(&p);
    let r = a.report.as_ref().unwrap();
    let rep = partition::check_gradient_separation(&p, r.b_hat.min(1.0), r.l, 1e-3, &[-4.0, 0.0], 10_000, 7).unwrap();
    let c = rep.c_emp.unwrap_or(f64::NAN);
    Outcome {
        pass: rep.precondition_ok && rep.pairs == 10_000 && c > 0.0,
        detail: format!("C₁r = {:.4} > L = {}, C_emp = {c:.4} over {} pairs", rep.c1_r, rep.l, rep.pairs),
    }
}

fn pipeline(dir: &Path) -> bool {
    let bin = env!("CARGO_BIN_EXE_dispersion-lab");
    let symbols = Path::new(env!("CARGO_MANIFEST_DIR")).join("symbols");
    let runs: [(&str, &[&str]); 8] = [
        ("free", &["analyze"]),
        ("free", &["eval", "--t", "1.5", "--x", "0.5"]),
        ("radial_quartic", &["regions", "--t", "0.001", "--x=-4,0", "--points", "11", "--pairs", "2000"]),
        ("free", &["scan", "--target", "I"]),
        ("free", &["scan", "--target", "I1"]),
        ("free", &["verify", "--target", "I"]),
        ("free", &["verify", "--target", "I1"]),
        ("free", &["report", "--target", "I1"]),
    ];
    runs.iter().all(|(s, args)| {
        Command::new(bin)
            .arg("--symbol")
            .arg(symbols.join(format!("{s}.sym")))
            .arg("--out")
            .arg(dir)
            .args(["--seed", "11"])
            .args(*args)
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
    })
}

fn criterion_9() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    if !(pipeline(a.path()) && pipeline(b.path())) {
        return Outcome {
            pass: false,
            detail: "pipeline command failed".into(),
        };
    }
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "journal.jsonl")
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(a.path().join(n)).ok() != std::fs::read(b.path().join(n)).ok())
        .collect();
    Outcome {
        pass: differing.is_empty() && names.len() >= 10,
        detail: format!("{} documents compared, {} differ", names.len(), differing.len()),
    }
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("1 free Schrödinger exactness", Duration::from_secs(10), criterion_1),
        ("2 quartic oracle and scaling", Duration::from_secs(60), criterion_2),
        ("3 exponent formulas", Duration::from_secs(1), criterion_3),
        ("4 theorem 2 for ξ⁴", Duration::from_secs(600), criterion_4),
        ("5 theorem 1 large t for ξ⁴", Duration::from_secs(600), criterion_5),
        ("6 radial quartic in 2-D", Duration::from_secs(1200), criterion_6),
        ("7 structural invariants", Duration::from_secs(300), criterion_7),
        ("8 gradient separation", Duration::from_secs(60), criterion_8),
        ("9 determinism", Duration::from_secs(600), criterion_9),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let pass = outcome.pass && elapsed <= limit;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {} [{:.1} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
