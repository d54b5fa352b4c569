//! Decay scans: sup over x of |I(t, x)| or |I₁(t, x)| on a log-spaced t grid,
//! two-regime slope fits, and the verdicts of the two decay theorems.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::oscillatory::{Evaluator, Method, Target};
use crate::quadrature::{count_edges, GK_POINTS};
use crate::spectral::{linear_fit, ExponentRecord};
use crate::sphere;

/// Allowed shortfall of an edge slope below the theoretical exponent.
pub const SLOPE_SLACK: f64 = 0.1;
/// Largest admissible growth factor of large-t amplitudes over the [1, 10]
/// maximum.
pub const GROWTH_FACTOR: f64 = 1.2;
/// Share of failed probes above which a t point is unreliable.
pub const FAILURE_SHARE: f64 = 0.2;

const GOLDEN_STEPS: usize = 24;

/// How x is chosen at each t.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XMode {
    /// x = 0 only.
    Origin,
    /// Seeded search for the maximum over x.
    SupOverX,
}

/// 12 points 10^{−3 + k/4}, k = 0..11.
pub fn default_small_t() -> Vec<f64> {
    (0..12).map(|k| 10f64.powf(-3.0 + 3.0 * k as f64 / 12.0)).collect()
}

/// 8 points 10^{2k/7}, k = 0..7.
pub fn default_large_t() -> Vec<f64> {
    (0..8).map(|k| 10f64.powf(2.0 * k as f64 / 7.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub target: Target,
    pub method: Method,
    pub mode: XMode,
    pub small_t: Vec<f64>,
    pub large_t: Vec<f64>,
    pub tol: f64,
    pub budget: u64,
}

impl ScanConfig {
    pub fn new(target: Target) -> Self {
        ScanConfig {
            target,
            method: Method::PartitionGuided,
            mode: XMode::SupOverX,
            small_t: default_small_t(),
            large_t: default_large_t(),
            tol: 1e-6,
            budget: crate::oscillatory::DEFAULT_BUDGET,
        }
    }

    fn grid(&self) -> Result<Vec<f64>> {
        let grid: Vec<f64> = self.small_t.iter().chain(&self.large_t).copied().collect();
        if grid.is_empty() {
            return invalid("empty t grid");
        }
        if grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return invalid("t grid must be positive and finite");
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("t grid must be strictly increasing");
        }
        if self.small_t.iter().any(|&t| t >= 1.0) || self.large_t.iter().any(|&t| t < 1.0) {
            return invalid("small-t points must lie in (0, 1) and large-t points in [1, ∞)");
        }
        Ok(grid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    pub x_star: Vec<f64>,
    pub amplitude: f64,
    /// Error estimate of the evaluation at x_star.
    pub eval_error: f64,
    pub probes: usize,
    pub failed_probes: usize,
    /// Seeds dropped because their predicted cost exceeds the budget.
    pub skipped_seeds: usize,
}

impl SupResult {
    pub fn reliable(&self) -> bool {
        (self.failed_probes as f64) <= FAILURE_SHARE * self.probes as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub t: f64,
    pub x_star: Vec<f64>,
    pub amplitude: f64,
    /// Written as null when no probe converged.
    #[serde(deserialize_with = "real_or_null")]
    pub eval_error: f64,
    pub probes: usize,
    pub failed_probes: usize,
    pub skipped_seeds: usize,
    pub reliable: bool,
}

fn real_or_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    pub slope_small_t: Option<f64>,
    pub intercept_small_t: Option<f64>,
    pub slope_large_t: Option<f64>,
    pub intercept_large_t: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// max amplitude·t^σ over the small-t regime.
    pub c_small: Option<f64>,
    /// max amplitude·t^{n/2} (target I₁) or max amplitude (target I) over
    /// the large-t regime.
    pub c_large: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayScan {
    pub symbol: String,
    pub n: usize,
    pub m: u32,
    pub b: f64,
    pub sigma: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub target: Target,
    pub method: Method,
    pub mode: XMode,
    pub records: Vec<ScanRecord>,
    pub fitted: Fits,
    pub bound_constants: BoundConstants,
    /// t values whose record is flagged unreliable.
    pub unreliable: Vec<f64>,
}

/// Seeds x = −t∇P(ξ_g) for ξ_g on a radial-angular grid with |ξ_g| ≤ 10L,
/// preceded by x = 0.
pub fn seed_points(eval: &Evaluator, t: f64, l: f64) -> Vec<Vec<f64>> {
    let p = eval.symbol();
    let n = p.dim();
    let mut seeds = vec![vec![0.0; n]];
    let (radii, dirs) = match n {
        1 => (16, vec![vec![1.0], vec![-1.0]]),
        _ => (8, sphere::net(n, 16)),
    };
    for k in 1..=radii {
        let r = 10.0 * l * k as f64 / radii as f64;
        for d in &dirs {
            let xi: Vec<f64> = d.iter().map(|w| w * r).collect();
            let g = p.gradient(&xi).expect("seed has the symbol's dimension");
            seeds.push(g.iter().map(|v| -t * v).collect());
        }
    }
    seeds
}

/// Rough integrand-evaluation count of one partition-guided evaluation.
fn predicted_cost(eval: &Evaluator, t: f64, x: &[f64], l: f64) -> f64 {
    let b = eval.bounds();
    let x_norm = sphere::norm(x);
    let reach = 2.0 * b.stationary_radius(t, x_norm).max(t.abs().powf(-1.0 / b.degree() as f64)).max(l);
    let rate = |rho: f64| t.abs() * b.gradient_upper(rho) + x_norm;
    let panels = count_edges(0.0, reach, rate, 2.0, f64::INFINITY) as f64;
    let angular = if eval.symbol().dim() == 2 {
        (reach * rate(reach)).max(32.0)
    } else {
        2.0
    };
    panels * GK_POINTS as f64 * angular
}

struct Probe {
    amplitude: f64,
    error: f64,
    ok: bool,
}

fn probe(eval: &Evaluator, method: Method, target: Target, t: f64, x: &[f64], l: f64, tol: f64) -> Probe {
    match eval.evaluate(method, target, t, x, l, tol) {
        Ok(r) if r.value.norm().is_finite() => Probe {
            amplitude: r.value.norm(),
            error: r.abs_error_estimate,
            ok: r.converged,
        },
        _ => Probe {
            amplitude: 0.0,
            error: f64::INFINITY,
            ok: false,
        },
    }
}

/// Golden-section search for a local maximum of `f` on [a, b].
fn golden_max(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_STEPS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximises |target(t, x)| over x: seeds at the images of candidate
/// stationary points plus x = 0, then coordinate-wise golden-section
/// refinement around the best seed.
pub fn sup_over_x(
    eval: &Evaluator,
    method: Method,
    target: Target,
    t: f64,
    l: f64,
    tol: f64,
) -> Result<SupResult> {
    if !(t.is_finite() && t != 0.0) {
        return invalid("t must be finite and non-zero");
    }
    let n = eval.symbol().dim();
    let budget = eval.budget() as f64;
    let all = seed_points(eval, t, l);
    let total = all.len();
    // x = 0 is always probed
    let seeds: Vec<Vec<f64>> = all
        .into_iter()
        .enumerate()
        .filter(|(k, x)| *k == 0 || predicted_cost(eval, t, x, l) <= budget)
        .map(|(_, x)| x)
        .collect();
    let skipped = total - seeds.len();
    let results: Vec<Probe> = seeds.par_iter().map(|x| probe(eval, method, target, t, x, l, tol)).collect();
    let mut probes = results.len();
    let mut failed = results.iter().filter(|r| !r.ok).count();
    let best = (0..seeds.len())
        .max_by(|&i, &j| results[i].amplitude.total_cmp(&results[j].amplitude).then(j.cmp(&i)))
        .expect("x = 0 is always a seed");
    let mut x_star = seeds[best].clone();
    let mut amp = results[best].amplitude;
    let mut err = results[best].error;

    for axis in 0..n {
        // bracket: half the distance to the nearest other seed along this axis
        let h = seeds
            .iter()
            .map(|s| (s[axis] - x_star[axis]).abs())
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let h = if h.is_finite() { h } else { 1.0 };
        let h = if n == 1 { h } else { 0.5 * h };
        let mut evals = Vec::new();
        let base = x_star.clone();
        let (pos, val) = golden_max(
            |c| {
                let mut x = base.clone();
                x[axis] = c;
                let r = probe(eval, method, target, t, &x, l, tol);
                let a = r.amplitude;
                evals.push((c, r));
                a
            },
            base[axis] - h,
            base[axis] + h,
        );
        probes += evals.len();
        failed += evals.iter().filter(|(_, r)| !r.ok).count();
        if val > amp {
            let r = evals.iter().find(|(c, _)| *c == pos).map(|(_, r)| r.error).unwrap_or(f64::INFINITY);
            x_star[axis] = pos;
            amp = val;
            err = r;
        }
    }
    Ok(SupResult {
        x_star,
        amplitude: amp,
        eval_error: err,
        probes,
        failed_probes: failed,
        skipped_seeds: skipped,
    })
}

fn fit(points: &[(f64, f64)]) -> (Option<f64>, Option<f64>) {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|&(t, a)| t > 0.0 && a > 0.0 && a.is_finite()).collect();
    if pts.len() < 2 {
        return (None, None);
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (s, c) = linear_fit(&xs, &ys);
    (Some(s), Some(c))
}

fn max_of(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

impl DecayScan {
    fn split(&self) -> (Vec<&ScanRecord>, Vec<&ScanRecord>) {
        self.records.iter().partition(|r| r.t < 1.0)
    }

    /// Refits slopes and bound constants from the records.
    pub fn refit(&mut self) {
        let (small, large) = self.split();
        let (ss, cs) = fit(&small.iter().map(|r| (r.t, r.amplitude)).collect::<Vec<_>>());
        let (sl, cl) = fit(&large.iter().map(|r| (r.t, r.amplitude)).collect::<Vec<_>>());
        let half = self.n as f64 / 2.0;
        let c_small = max_of(small.iter().map(|r| r.amplitude * r.t.powf(self.sigma)));
        let c_large = match self.target {
            Target::I1 => max_of(large.iter().map(|r| r.amplitude * r.t.powf(half))),
            Target::I => max_of(large.iter().map(|r| r.amplitude)),
        };
        self.fitted = Fits {
            slope_small_t: ss,
            intercept_small_t: cs,
            slope_large_t: sl,
            intercept_large_t: cl,
        };
        self.bound_constants = BoundConstants { c_small, c_large };
        self.unreliable = self.records.iter().filter(|r| !r.reliable).map(|r| r.t).collect();
    }

    /// Multiplies every amplitude by f(t) and refits.
    pub fn map_amplitudes(&self, f: impl Fn(f64) -> f64) -> DecayScan {
        let mut out = self.clone();
        for r in &mut out.records {
            r.amplitude *= f(r.t);
        }
        out.refit();
        out
    }
}

/// Fills a [`DecayScan`] over both regimes.
pub fn run_scan(
    eval: &Evaluator,
    name: &str,
    exps: &ExponentRecord,
    l: f64,
    cfg: &ScanConfig,
) -> Result<DecayScan> {
    let grid = cfg.grid()?;
    if !(l > 0.0 && l.is_finite()) {
        return invalid("L must be positive and finite");
    }
    if !(cfg.tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let eval = eval.clone().with_budget(cfg.budget);
    let n = eval.symbol().dim();
    let records = grid
        .par_iter()
        .map(|&t| -> Result<ScanRecord> {
            let sup = match cfg.mode {
                XMode::SupOverX => sup_over_x(&eval, cfg.method, cfg.target, t, l, cfg.tol)?,
                XMode::Origin => {
                    let x = vec![0.0; n];
                    let r = probe(&eval, cfg.method, cfg.target, t, &x, l, cfg.tol);
                    SupResult {
                        x_star: x,
                        amplitude: r.amplitude,
                        eval_error: r.error,
                        probes: 1,
                        failed_probes: usize::from(!r.ok),
                        skipped_seeds: 0,
                    }
                }
            };
            Ok(ScanRecord {
                t,
                reliable: sup.reliable(),
                x_star: sup.x_star,
                amplitude: sup.amplitude,
                eval_error: sup.eval_error,
                probes: sup.probes,
                failed_probes: sup.failed_probes,
                skipped_seeds: sup.skipped_seeds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut scan = DecayScan {
        symbol: name.to_string(),
        n,
        m: exps.m,
        b: exps.b,
        sigma: exps.sigma,
        l,
        target: cfg.target,
        method: cfg.method,
        mode: cfg.mode,
        records,
        fitted: Fits {
            slope_small_t: None,
            intercept_small_t: None,
            slope_large_t: None,
            intercept_large_t: None,
        },
        bound_constants: BoundConstants {
            c_small: None,
            c_large: None,
        },
        unreliable: Vec::new(),
    };
    scan.refit();
    Ok(scan)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCheck {
    /// Log-log slope of the amplitude over the three edge points.
    pub edge_slope: Option<f64>,
    /// Exponent e of the bound C·t^{−e}.
    pub exponent: f64,
    pub slack: f64,
    pub constant: Option<f64>,
    /// Log-log slope of amplitude·t^{e} over the three edge points
    /// (large-t edge only).
    pub trend_slope: Option<f64>,
    /// max over the large regime / max over [1, 10] (theorem 2 only).
    pub growth_ratio: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub theorem: u8,
    pub symbol: String,
    pub target: Target,
    pub small_t: EdgeCheck,
    pub large_t: EdgeCheck,
    pub unreliable: Vec<f64>,
    pub pass: bool,
}

fn edge_slope(records: &[&ScanRecord], scale: f64) -> Option<f64> {
    if records.len() < 3 {
        return None;
    }
    fit(&records.iter().map(|r| (r.t, r.amplitude * r.t.powf(scale))).collect::<Vec<_>>()).0
}

fn small_edge(scan: &DecayScan) -> EdgeCheck {
    let (small, _) = scan.split();
    let edge: Vec<&ScanRecord> = small.iter().take(3).copied().collect();
    let slope = edge_slope(&edge, 0.0);
    EdgeCheck {
        edge_slope: slope,
        exponent: scan.sigma,
        slack: SLOPE_SLACK,
        constant: scan.bound_constants.c_small,
        trend_slope: None,
        growth_ratio: None,
        pass: slope.is_some_and(|s| s >= -scan.sigma - SLOPE_SLACK),
    }
}

/// Theorem 1 on an I₁ scan: no steeper growth than t^{−σ} at the small-t
/// edge; at the large-t edge a slope of at least −n/2 − slack and no upward
/// trend of amplitude·t^{n/2}.
pub fn verify_theorem1(scan: &DecayScan) -> Result<Verdict> {
    if scan.target != Target::I1 {
        return invalid("theorem 1 is verified on an I1 scan");
    }
    let half = scan.n as f64 / 2.0;
    let small = small_edge(scan);
    let (_, large) = scan.split();
    let edge: Vec<&ScanRecord> = large.iter().rev().take(3).rev().copied().collect();
    let slope = edge_slope(&edge, 0.0);
    let trend = edge_slope(&edge, half);
    let large = EdgeCheck {
        edge_slope: slope,
        exponent: half,
        slack: SLOPE_SLACK,
        constant: scan.bound_constants.c_large,
        trend_slope: trend,
        growth_ratio: None,
        pass: slope.is_some_and(|s| s >= -half - SLOPE_SLACK) && trend.is_some_and(|s| s <= SLOPE_SLACK),
    };
    Ok(Verdict {
        theorem: 1,
        symbol: scan.symbol.clone(),
        target: scan.target,
        pass: small.pass && large.pass,
        small_t: small,
        large_t: large,
        unreliable: scan.unreliable.clone(),
    })
}

/// Theorem 2 on an I scan: the small-t edge as in theorem 1 and bounded
/// large-t amplitudes.
pub fn verify_theorem2(scan: &DecayScan) -> Result<Verdict> {
    if scan.target != Target::I {
        return invalid("theorem 2 is verified on an I scan");
    }
    let small = small_edge(scan);
    let (_, large) = scan.split();
    let all = max_of(large.iter().map(|r| r.amplitude));
    let early = max_of(large.iter().filter(|r| r.t <= 10.0).map(|r| r.amplitude));
    let ratio = match (all, early) {
        (Some(a), Some(e)) if e > 0.0 => Some(a / e),
        _ => None,
    };
    let large = EdgeCheck {
        edge_slope: edge_slope(&large.iter().rev().take(3).rev().copied().collect::<Vec<_>>(), 0.0),
        exponent: 0.0,
        slack: SLOPE_SLACK,
        constant: scan.bound_constants.c_large,
        trend_slope: None,
        growth_ratio: ratio,
        pass: ratio.is_some_and(|r| r <= GROWTH_FACTOR),
    };
    Ok(Verdict {
        theorem: 2,
        symbol: scan.symbol.clone(),
        target: scan.target,
        pass: small.pass && large.pass,
        small_t: small,
        large_t: large,
        unreliable: scan.unreliable.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub regime: String,
    /// Exponent of t in the bound proved here.
    pub new: f64,
    /// Exponent in Yao's bound: −σ_b for small t, ρ_b for large t.
    pub yao: f64,
    /// −n/m, the b = 1 reference exponent.
    pub cui: f64,
    pub measured: Option<f64>,
    /// For the assertion row: whether ρ_b ≥ −n/2 holds, and whether with
    /// equality.
    pub holds: Option<bool>,
    pub equality: Option<bool>,
}

/// Small-t and large-t exponent rows plus the assertion row ρ_b ≥ −n/2.
pub fn comparison_table(exps: &ExponentRecord, scan: Option<&DecayScan>) -> Vec<ComparisonRow> {
    let n = exps.n as f64;
    let cui = -n / exps.m as f64;
    let half = -n / 2.0;
    vec![
        ComparisonRow {
            regime: "small_t".into(),
            new: -exps.sigma,
            yao: -exps.sigma,
            cui,
            measured: scan.and_then(|s| s.fitted.slope_small_t),
            holds: None,
            equality: None,
        },
        ComparisonRow {
            regime: "large_t".into(),
            new: half,
            yao: exps.rho_b,
            cui,
            measured: scan.and_then(|s| s.fitted.slope_large_t),
            holds: None,
            equality: None,
        },
        ComparisonRow {
            regime: "rho_b>=-n/2".into(),
            new: half,
            yao: exps.rho_b,
            cui,
            measured: None,
            holds: Some(exps.rho_b >= half - 1e-12),
            equality: Some((exps.rho_b - half).abs() <= 1e-12),
        },
    ]
}

/// |I(t, 0)| for the radial symbol |ξ|⁴ in two dimensions:
/// 2π∫ρ e^{itρ⁴}dρ = (π/2)√(π/t).
pub fn radial_quartic_2d_origin(t: f64) -> f64 {
    0.5 * PI * (PI / t.abs()).sqrt()
}
