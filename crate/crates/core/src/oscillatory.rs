//! Evaluation of the fundamental solution
//! I(t, x) = ∫ e^{i(tP(ξ) + ⟨x, ξ⟩)} dξ.
//!
//! The integral is not absolutely convergent. Two independent evaluators
//! are provided:
//!
//! * the mollified method integrates e^{iΦ}·e^{−ε|ξ|²} for a decreasing
//!   sequence of ε and extrapolates to ε = 0 with a Richardson tableau;
//! * the partition-guided method splits the integrand with the cutoffs
//!   φ(|ξ|/L), φ₁, φ₂, φ₃ and truncates the non-stationary φ₃ piece with a
//!   smooth radial window that is widened until the result settles.
//!
//! Both work in polar coordinates: an adaptive Gauss–Kronrod rule in the
//! radius over panels sized to the local oscillation, and (for n = 2) a
//! doubling trapezoid rule over the circle at each radial node. In three
//! dimensions only x = 0 with a radial symbol is supported, by reduction to
//! a one-dimensional radial integral.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::bounds::GrowthBounds;
use crate::error::{invalid, LabError, Result};
use crate::partition::{bump, RegionContext};
use crate::quadrature::{integrate, oscillation_edges, periodic_trapezoid, Budget, QuadResult};
use crate::sphere;
use crate::symbol::{EllipticityCertificate, PolynomialSymbol, MAX_DIM};

/// Default limit on integrand evaluations per call.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Local wavelengths spanned by one initial Gauss–Kronrod panel (≈ 10 nodes
/// per wavelength).
const WAVELENGTHS_PER_PANEL: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mollified,
    PartitionGuided,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mollified => "mollified",
            Method::PartitionGuided => "partition_guided",
        }
    }
}

/// Which part of the integral to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// The full integral I.
    I,
    /// The high-frequency part I₁, with amplitude 1 − φ(|ξ|/L).
    I1,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::I => "I",
            Target::I1 => "I1",
        }
    }
}

/// A geometric ε sequence ε_k = ε₀·ratio^k, k < depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSchedule {
    pub eps0: f64,
    pub ratio: f64,
    pub depth: usize,
    /// Number of tableau columns used (1 = no extrapolation).
    pub richardson_order: usize,
}

impl MollifierSchedule {
    pub fn new(eps0: f64, ratio: f64, depth: usize, richardson_order: usize) -> Result<Self> {
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return invalid("ε₀ must be positive");
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return invalid("ε ratio must lie in (0, 1)");
        }
        if depth < 3 {
            return invalid("mollifier depth must be at least 3");
        }
        if richardson_order == 0 {
            return invalid("Richardson order must be at least 1");
        }
        Ok(MollifierSchedule {
            eps0,
            ratio,
            depth,
            richardson_order,
        })
    }

    pub fn epsilons(&self) -> Vec<f64> {
        (0..self.depth).map(|k| self.eps0 * self.ratio.powi(k as i32)).collect()
    }
}

/// Per-piece accounting for the partition-guided evaluator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceReport {
    pub name: String,
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
    pub evaluations: u64,
    /// Radial interval actually integrated.
    pub radial_range: (f64, f64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub evaluations: u64,
    /// ε values actually used (mollified).
    pub epsilons: Vec<f64>,
    /// Raw mollified integrals, one per ε.
    pub level_values: Vec<Complex64>,
    /// |T_k,k − T_{k−1,k−1}| along the tableau diagonal.
    pub increments: Vec<f64>,
    /// Largest quadrature error over the levels, or the summed error over
    /// the pieces.
    pub quadrature_error: f64,
    /// Pieces evaluated (partition-guided, and the I₂ part of a split).
    pub pieces: Vec<PieceReport>,
    /// Outer edge of the last truncation window.
    pub truncation_radius: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: Complex64,
    pub abs_error_estimate: f64,
    pub method: Method,
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

impl EvalResult {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// The I₁ + I₂ split at one (t, x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub i1: EvalResult,
    pub i2: EvalResult,
}

/// Amplitude multiplying e^{iΦ} at a point with |ξ| = ρ and gradient ∇P(ξ).
trait Amplitude: Fn(f64, &[f64; MAX_DIM]) -> f64 {}
impl<F: Fn(f64, &[f64; MAX_DIM]) -> f64> Amplitude for F {}

/// Evaluator bound to one symbol.
#[derive(Clone, Debug)]
pub struct Evaluator {
    p: PolynomialSymbol,
    bounds: GrowthBounds,
    certificate: EllipticityCertificate,
    radial: bool,
    budget: u64,
}

/// True when P(ξ) depends on |ξ| only (checked on samples).
pub fn is_radial(p: &PolynomialSymbol) -> bool {
    let n = p.dim();
    if n == 1 {
        return p.is_even();
    }
    let dirs = sphere::net(n, 64);
    [0.3, 1.0, 1.7, 4.0].iter().all(|&rho| {
        let mut e = vec![0.0; n];
        e[0] = rho;
        let reference = p.value(&e);
        dirs.iter().all(|d| {
            let xi: Vec<f64> = d.iter().map(|w| w * rho).collect();
            (p.value(&xi) - reference).abs() <= 1e-12 * reference.abs().max(1.0)
        })
    })
}

/// Radius beyond which the n-dimensional Gaussian e^{−ε|ξ|²} has mass
/// below `mass`.
pub fn gaussian_tail_radius(n: usize, eps: f64, mass: f64) -> f64 {
    let total = (PI / eps).powf(n as f64 / 2.0);
    let a = n as f64 / 2.0;
    if total <= mass {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while total * gamma_ur(a, hi) > mass {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total * gamma_ur(a, mid) > mass {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    (hi / eps).sqrt()
}

/// Gaussian mass outside the ball of radius `r`.
fn gaussian_tail(n: usize, eps: f64, r: f64) -> f64 {
    (PI / eps).powf(n as f64 / 2.0) * gamma_ur(n as f64 / 2.0, eps * r * r)
}

struct Integrand<'a> {
    p: &'a PolynomialSymbol,
    t: f64,
    x: [f64; MAX_DIM],
    n: usize,
}

impl Integrand<'_> {
    /// ρ^{n−1}∫_{S^{n−1}} e^{iΦ(ρω)} a(ρω) dω. Charges all but one of its
    /// evaluations to `budget`.
    fn radial<A: Amplitude>(&self, rho: f64, amp: &A, ang_tol: f64, budget: &Budget) -> Complex64 {
        let mut grad = [0.0; MAX_DIM];
        match self.n {
            1 => {
                let mut sum = Complex64::new(0.0, 0.0);
                for s in [1.0, -1.0] {
                    let xi = [s * rho];
                    let v = self.p.value_and_gradient(&xi, &mut grad);
                    let a = amp(rho, &grad);
                    if a != 0.0 {
                        sum += Complex64::from_polar(a, self.t * v + self.x[0] * xi[0]);
                    }
                }
                budget.charge(1);
                sum
            }
            2 => {
                // angular bandwidth from ∂_θΦ = ρ ω⊥·(t∇P + x) on a coarse ring
                let mut bandwidth: f64 = 0.0;
                const PROBES: usize = 16;
                for k in 0..PROBES {
                    let th = 2.0 * PI * k as f64 / PROBES as f64;
                    let (s, c) = th.sin_cos();
                    let xi = [rho * c, rho * s];
                    self.p.value_and_gradient(&xi, &mut grad);
                    let d = -s * (self.t * grad[0] + self.x[0]) + c * (self.t * grad[1] + self.x[1]);
                    bandwidth = bandwidth.max((rho * d).abs());
                }
                let start = ((1.25 * bandwidth + 16.0).ceil() as usize).next_power_of_two();
                let mut calls = 0u64;
                let mut f = |th: f64| {
                    calls += 1;
                    let (s, c) = th.sin_cos();
                    let xi = [rho * c, rho * s];
                    let mut g = [0.0; MAX_DIM];
                    let v = self.p.value_and_gradient(&xi, &mut g);
                    let a = amp(rho, &g);
                    if a == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::from_polar(a, self.t * v + self.x[0] * xi[0] + self.x[1] * xi[1])
                    }
                };
                let cap = (budget.remaining() as usize).clamp(start, 1 << 22);
                let r = periodic_trapezoid(&mut f, start, ang_tol, cap);
                budget.charge((calls + PROBES as u64).saturating_sub(1));
                r.value * rho
            }
            _ => {
                let xi = [rho, 0.0, 0.0];
                let v = self.p.value_and_gradient(&xi, &mut grad);
                let a = amp(rho, &grad);
                if a == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar(4.0 * PI * rho * rho * a, self.t * v)
                }
            }
        }
    }
}

struct PieceOutcome {
    result: QuadResult,
    evaluations: u64,
}

fn to_piece(name: &str, out: &PieceOutcome, range: (f64, f64)) -> PieceReport {
    PieceReport {
        name: name.to_string(),
        value: out.result.value,
        error: out.result.error,
        converged: out.result.converged,
        evaluations: out.evaluations,
        radial_range: range,
    }
}

impl Evaluator {
    /// Builds an evaluator; rejects degree < 2, the zero polynomial and
    /// non-elliptic symbols.
    pub fn new(p: &PolynomialSymbol) -> Result<Self> {
        let (bounds, certificate) = GrowthBounds::for_symbol(p)?;
        Ok(Evaluator {
            p: p.clone(),
            bounds,
            certificate,
            radial: is_radial(p),
            budget: DEFAULT_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget.max(1000);
        self
    }

    pub fn symbol(&self) -> &PolynomialSymbol {
        &self.p
    }

    pub fn bounds(&self) -> &GrowthBounds {
        &self.bounds
    }

    pub fn certificate(&self) -> &EllipticityCertificate {
        &self.certificate
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    fn integrand(&self, t: f64, x: &[f64]) -> Result<Integrand<'_>> {
        if !(t.is_finite() && t != 0.0) {
            return invalid("t must be finite and non-zero");
        }
        let n = self.p.dim();
        if x.len() != n || x.iter().any(|v| !v.is_finite()) {
            return invalid(format!("x must be a finite vector of length n = {n}"));
        }
        if n == 3 && (x.iter().any(|&v| v != 0.0) || !self.radial) {
            return invalid("in three dimensions only x = 0 with a radial symbol is supported");
        }
        let mut xa = [0.0; MAX_DIM];
        xa[..n].copy_from_slice(x);
        Ok(Integrand {
            p: &self.p,
            t,
            x: xa,
            n,
        })
    }

    /// Upper bound on the radial phase derivative |t||∇P| + |x| at radius ρ.
    fn rate(&self, t: f64, x_norm: f64) -> impl Fn(f64) -> f64 + '_ {
        move |rho| t.abs() * self.bounds.gradient_upper(rho) + x_norm
    }

    /// Adaptive radial integral over [lo, hi] of the angular integral.
    #[allow(clippy::too_many_arguments)]
    fn radial_integral<A: Amplitude>(
        &self,
        f: &Integrand<'_>,
        lo: f64,
        hi: f64,
        amp: &A,
        tol: f64,
        max_width: f64,
        budget: &Budget,
    ) -> PieceOutcome {
        let start = budget.used();
        if !(hi > lo) {
            return PieceOutcome {
                result: QuadResult::ZERO,
                evaluations: 0,
            };
        }
        let x_norm = sphere::norm(&f.x);
        let edges = oscillation_edges(lo, hi, self.rate(f.t, x_norm), WAVELENGTHS_PER_PANEL, max_width);
        let ang_tol = (0.1 * tol / hi.max(1.0).powi(2)).max(1e-13);
        // integrate charges one evaluation per node; the closure adds the rest
        let mut g = |rho: f64| f.radial(rho, amp, ang_tol, budget);
        let result = integrate(&mut g, &edges, tol, budget);
        PieceOutcome {
            result,
            evaluations: budget.used() - start,
        }
    }

    /// ∫ e^{iΦ} e^{−ε|ξ|²} a(ξ) dξ over the ball where the Gaussian tail is
    /// below tol/10; returns the value and quadrature error plus the tail.
    fn mollified_level<A: Amplitude>(
        &self,
        f: &Integrand<'_>,
        eps: f64,
        tol: f64,
        amp: &A,
        budget: &Budget,
    ) -> (QuadResult, f64) {
        let n = self.p.dim();
        let radius = gaussian_tail_radius(n, eps, tol / 10.0);
        let tail = gaussian_tail(n, eps, radius);
        let weighted = |rho: f64, g: &[f64; MAX_DIM]| {
            let a = amp(rho, g);
            if a == 0.0 {
                0.0
            } else {
                a * (-eps * rho * rho).exp()
            }
        };
        let out = self.radial_integral(f, 0.0, radius, &weighted, tol, 0.5 / eps.sqrt(), budget);
        (out.result, tail)
    }

    /// One regularised integral ∫ e^{iΦ} e^{−ε|ξ|²} dξ.
    pub fn mollified_integral(&self, t: f64, x: &[f64], eps: f64, tol: f64) -> Result<EvalResult> {
        if !(eps > 0.0) {
            return invalid("ε must be positive");
        }
        if !(tol > 0.0) {
            return invalid("tolerance must be positive");
        }
        let f = self.integrand(t, x)?;
        let budget = Budget::new(self.budget);
        let (q, tail) = self.mollified_level(&f, eps, tol, &|_, _: &[f64; MAX_DIM]| 1.0, &budget);
        if !q.converged {
            return Err(LabError::NonConvergence(format!(
                "mollified integral at ε = {eps:e}: error {:e} after {} evaluations",
                q.error,
                budget.used()
            )));
        }
        Ok(EvalResult {
            value: q.value,
            abs_error_estimate: q.error + tail,
            method: Method::Mollified,
            converged: q.converged,
            diagnostics: Diagnostics {
                evaluations: budget.used(),
                epsilons: vec![eps],
                level_values: vec![q.value],
                quadrature_error: q.error,
                ..Default::default()
            },
        })
    }

    /// ε₀ = 1/ξ_c², ratio 1/√2, where ξ_c is the larger of the scale where tP varies by
    /// O(1) and the outer radius of possible stationary points.
    pub fn auto_schedule(&self, t: f64, x: &[f64]) -> MollifierSchedule {
        let rho_t = self.bounds.phase_scale(t);
        let rho_x = self.bounds.gradient_lower_root(sphere::norm(x) / t.abs());
        let xi_c = rho_t.max(rho_x);
        MollifierSchedule {
            eps0: 1.0 / (xi_c * xi_c),
            ratio: std::f64::consts::FRAC_1_SQRT_2,
            depth: 20,
            richardson_order: 20,
        }
    }

    fn extrapolate<A: Amplitude>(
        &self,
        t: f64,
        x: &[f64],
        schedule: &MollifierSchedule,
        tol: f64,
        amp: &A,
    ) -> Result<EvalResult> {
        if !(tol > 0.0) {
            return invalid("tolerance must be positive");
        }
        let f = self.integrand(t, x)?;
        let budget = Budget::new(self.budget);
        let level_tol = tol / 1000.0;
        let mut diag = Diagnostics::default();
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        let mut errs: Vec<Vec<f64>> = Vec::new();
        let mut converged = false;
        let mut note = None;
        let mut best: Option<(Complex64, f64)> = None;
        for (k, eps) in schedule.epsilons().into_iter().enumerate() {
            let (q, tail) = self.mollified_level(&f, eps, level_tol, amp, &budget);
            if !q.converged {
                note = Some(format!("quadrature budget exhausted at level {k} (ε = {eps:e})"));
                break;
            }
            diag.epsilons.push(eps);
            diag.level_values.push(q.value);
            diag.quadrature_error = diag.quadrature_error.max(q.error + tail);
            let cols = (k + 1).min(schedule.richardson_order);
            let mut row = vec![q.value];
            let mut erow = vec![q.error + tail];
            for j in 1..cols {
                let factor = 1.0 / (schedule.ratio.powi(-(j as i32)) - 1.0);
                let prev = &rows[k - 1];
                let eprev = &errs[k - 1];
                row.push(row[j - 1] + (row[j - 1] - prev[j - 1]) * factor);
                erow.push(erow[j - 1] + (erow[j - 1] + eprev[j - 1]) * factor);
            }
            let value = *row.last().unwrap();
            let prop = *erow.last().unwrap();
            rows.push(row);
            errs.push(erow);
            if k == 0 {
                best = Some((value, f64::INFINITY));
                continue;
            }
            let prev_value = *rows[k - 1].last().unwrap();
            let inc = (value - prev_value).norm();
            diag.increments.push(inc);
            let err = inc + prop;
            best = Some((value, err));
            if k >= 2 && err <= tol {
                converged = true;
                break;
            }
            let m = diag.increments.len();
            if m >= 3 && diag.increments[m - 1] > diag.increments[m - 2] && diag.increments[m - 2] > diag.increments[m - 3] {
                note = Some("extrapolation increments grew over three consecutive levels".into());
                break;
            }
        }
        diag.evaluations = budget.used();
        if note.is_none() && !converged {
            note = Some("schedule exhausted before the tolerance was met".into());
        }
        diag.note = note;
        let (value, err) = best.unwrap_or((Complex64::new(f64::NAN, f64::NAN), f64::INFINITY));
        Ok(EvalResult {
            value,
            abs_error_estimate: err,
            method: Method::Mollified,
            converged,
            diagnostics: diag,
        })
    }

    /// I(t, x) by Richardson extrapolation of the mollified integrals.
    pub fn fundamental_solution(
        &self,
        t: f64,
        x: &[f64],
        schedule: Option<&MollifierSchedule>,
        tol: f64,
    ) -> Result<EvalResult> {
        let auto;
        let schedule = match schedule {
            Some(s) => s,
            None => {
                auto = self.auto_schedule(t, x);
                &auto
            }
        };
        self.extrapolate(t, x, schedule, tol, &|_, _: &[f64; MAX_DIM]| 1.0)
    }

    /// I₂ = ∫ e^{iΦ} φ(|ξ|/L) dξ, a compactly supported integral.
    pub fn low_frequency_part(&self, t: f64, x: &[f64], l: f64, tol: f64) -> Result<EvalResult> {
        if !(l > 0.0 && l.is_finite()) {
            return invalid("L must be positive");
        }
        if !(tol > 0.0) {
            return invalid("tolerance must be positive");
        }
        let f = self.integrand(t, x)?;
        let budget = Budget::new(self.budget);
        let amp = |rho: f64, _: &[f64; MAX_DIM]| bump(rho / l);
        let out = self.radial_integral(&f, 0.0, l, &amp, tol, l / 4.0, &budget);
        let piece = to_piece("I2", &out, (0.0, l));
        Ok(EvalResult {
            value: out.result.value,
            abs_error_estimate: out.result.error,
            method: Method::PartitionGuided,
            converged: out.result.converged,
            diagnostics: Diagnostics {
                evaluations: out.evaluations,
                quadrature_error: out.result.error,
                pieces: vec![piece],
                ..Default::default()
            },
        })
    }

    /// I = I₁ + I₂ with I₂ from [`Self::low_frequency_part`] and I₁ from the
    /// mollified evaluator with amplitude 1 − φ(|ξ|/L).
    pub fn split_i1_i2(&self, t: f64, x: &[f64], l: f64, tol: f64) -> Result<Split> {
        let i2 = self.low_frequency_part(t, x, l, tol)?;
        let schedule = self.auto_schedule(t, x);
        let amp = |rho: f64, _: &[f64; MAX_DIM]| 1.0 - bump(rho / l);
        let i1 = self.extrapolate(t, x, &schedule, tol, &amp)?;
        Ok(Split { i1, i2 })
    }

    /// I (or I₁) as the sum of the pieces cut out by φ(|ξ|/L), φ₁, φ₂, φ₃.
    pub fn partition_guided(&self, t: f64, x: &[f64], l: f64, tol: f64) -> Result<EvalResult> {
        self.partition_eval(t, x, l, tol, Target::I)
    }

    /// Target-selecting form of [`Self::partition_guided`].
    pub fn partition_eval(&self, t: f64, x: &[f64], l: f64, tol: f64, target: Target) -> Result<EvalResult> {
        if self.p.dim() > 2 {
            return invalid("the partition-guided evaluator supports n ≤ 2");
        }
        if !(tol > 0.0) {
            return invalid("tolerance must be positive");
        }
        let f = self.integrand(t, x)?;
        let ctx = RegionContext::new(t, x, l, self.p.degree())?;
        let budget = Budget::new(self.budget);
        let x_norm = sphere::norm(x);
        let lfr = ctx.low_freq_radius;
        let piece_tol = match target {
            Target::I => tol / 4.0,
            Target::I1 => tol / 3.0,
        };
        let mut pieces = Vec::new();
        let mut total = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        let mut converged = true;
        let mut record = |name: &str, out: &PieceOutcome, range: (f64, f64)| {
            pieces.push(to_piece(name, out, range));
        };

        if target == Target::I {
            let amp = |rho: f64, _: &[f64; MAX_DIM]| bump(rho / l);
            let out = self.radial_integral(&f, 0.0, l, &amp, piece_tol, l / 4.0, &budget);
            total += out.result.value;
            err += out.result.error;
            converged &= out.result.converged;
            record("I2", &out, (0.0, l));
        }

        let outer = |rho: f64| 1.0 - bump(rho / l);
        // φ₁ piece: (1 − φ_L)·φ₁ lives on [L/2, |t|^{−1/m}]
        {
            let (lo, hi) = (0.5 * l, lfr);
            let amp = |rho: f64, g: &[f64; MAX_DIM]| outer(rho) * ctx.cutoffs_at(rho, g).phi1;
            let out = self.radial_integral(&f, lo, hi, &amp, piece_tol, (hi - lo).max(0.0) / 4.0 + f64::MIN_POSITIVE, &budget);
            total += out.result.value;
            err += out.result.error;
            converged &= out.result.converged;
            record("phi1", &out, (lo, hi.max(lo)));
        }
        // φ₂ piece: inside the radius where |∇P| can reach 2|x/t|
        let stationary_radius = self.bounds.stationary_radius(t, x_norm);
        let lo23 = (0.5 * l).max(0.5 * lfr);
        if x_norm / t.abs() >= crate::partition::X_OVER_T_FLOOR {
            let hi = stationary_radius;
            let amp = |rho: f64, g: &[f64; MAX_DIM]| outer(rho) * ctx.cutoffs_at(rho, g).phi2;
            let out = self.radial_integral(&f, lo23, hi, &amp, piece_tol, ((hi - lo23) / 4.0).max(f64::MIN_POSITIVE), &budget);
            total += out.result.value;
            err += out.result.error;
            converged &= out.result.converged;
            record("phi2", &out, (lo23, hi.max(lo23)));
        }
        // φ₃ piece with a smooth radial window, widened until it settles
        let start = budget.used();
        let r0 = stationary_radius.max(lfr).max(l);
        let phase_rate = |r: f64| t.abs() * self.bounds.gradient_lower(r) - x_norm;
        let width = |r: f64, k: f64| {
            let rate = phase_rate(r);
            if rate > 0.0 {
                (2.0 * PI * k / rate).min(r)
            } else {
                r
            }
        };
        let window = |rho: f64, r: f64, d: f64| bump(0.5 + (rho - r).max(0.0) / (2.0 * d));
        let phi3 = |rho: f64, g: &[f64; MAX_DIM]| outer(rho) * ctx.cutoffs_at(rho, g).phi3;
        let step_tol = piece_tol / 16.0;
        let (mut r, mut k) = (r0, 8.0);
        let mut d = width(r, k);
        let amp0 = |rho: f64, g: &[f64; MAX_DIM]| phi3(rho, g) * window(rho, r0, d);
        let base = self.radial_integral(&f, lo23, r + d, &amp0, step_tol, ((r + d - lo23) / 8.0).max(f64::MIN_POSITIVE), &budget);
        let mut value3 = base.result.value;
        let mut quad3 = base.result.error;
        let mut ok3 = base.result.converged;
        let mut small_in_row = 0;
        let mut last_inc = f64::INFINITY;
        let growth = 2f64.powf(1.0 / self.p.degree() as f64);
        for _ in 0..60 {
            let (nr, nk) = if width(r, 2.0 * k) < r { (r, 2.0 * k) } else { (r * growth, k) };
            let nd = width(nr, nk);
            let (pr, pd) = (r, d);
            let amp = |rho: f64, g: &[f64; MAX_DIM]| phi3(rho, g) * (window(rho, nr, nd) - window(rho, pr, pd));
            let end = (nr + nd).max(pr + pd);
            let out = self.radial_integral(&f, pr, end, &amp, step_tol, ((end - pr) / 8.0).max(f64::MIN_POSITIVE), &budget);
            value3 += out.result.value;
            quad3 += out.result.error;
            ok3 &= out.result.converged;
            r = nr;
            k = nk;
            d = nd;
            last_inc = out.result.value.norm();
            if !out.result.converged {
                break;
            }
            if last_inc < piece_tol / 4.0 {
                small_in_row += 1;
                if small_in_row >= 2 {
                    break;
                }
            } else {
                small_in_row = 0;
            }
        }
        ok3 &= small_in_row >= 2;
        let err3 = quad3 + last_inc;
        total += value3;
        err += err3;
        converged &= ok3;
        let out3 = PieceOutcome {
            result: QuadResult {
                value: value3,
                error: err3,
                converged: ok3,
                panels: 0,
            },
            evaluations: budget.used() - start,
        };
        record("phi3", &out3, (lo23, r + d));

        converged &= err <= tol;
        Ok(EvalResult {
            value: total,
            abs_error_estimate: err,
            method: Method::PartitionGuided,
            converged,
            diagnostics: Diagnostics {
                evaluations: budget.used(),
                quadrature_error: err,
                pieces,
                truncation_radius: Some(r + d),
                note: (!ok3).then(|| "truncation window did not settle".to_string()),
                ..Default::default()
            },
        })
    }

    /// Dispatch on method and target. For the mollified method I₁ is taken
    /// from [`Self::split_i1_i2`].
    pub fn evaluate(&self, method: Method, target: Target, t: f64, x: &[f64], l: f64, tol: f64) -> Result<EvalResult> {
        match (method, target) {
            (Method::Mollified, Target::I) => self.fundamental_solution(t, x, None, tol),
            (Method::Mollified, Target::I1) => Ok(self.split_i1_i2(t, x, l, tol)?.i1),
            (Method::PartitionGuided, target) => self.partition_eval(t, x, l, tol, target),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    fn sym(n: usize, terms: &[(&[u32], f64)]) -> PolynomialSymbol {
        PolynomialSymbol::new("t", n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    fn free() -> Evaluator {
        Evaluator::new(&sym(1, &[(&[2], 1.0)])).unwrap()
    }

    fn quartic() -> Evaluator {
        Evaluator::new(&sym(1, &[(&[4], 1.0)])).unwrap()
    }

    #[test]
    fn gaussian_tail_radius_matches_erfc() {
        let r = gaussian_tail_radius(1, 0.01, 1e-8);
        let tail = (PI / 0.01).sqrt() * statrs::function::erf::erfc(0.1 * r);
        assert!((tail / 1e-8 - 1.0).abs() < 1e-8);
        let r2 = gaussian_tail_radius(2, 0.5, 1e-6);
        assert!(((PI / 0.5) * (-0.5 * r2 * r2).exp() / 1e-6 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn mollified_free_matches_gaussian_fresnel() {
        // ∫ e^{(i − ε)ξ² + ixξ} dξ = √(π/(ε − i)) e^{−x²/(4(ε − i))}
        let e = free();
        for &x in &[0.0, 3.0] {
            let r = e.mollified_integral(1.0, &[x], 0.01, 1e-9).unwrap();
            let z = Complex64::new(0.01, -1.0);
            let exact = (PI / z).sqrt() * (-(x * x) / (4.0 * z)).exp();
            assert!((r.value - exact).norm() < 1e-7, "{x}: {} vs {exact}", r.value);
        }
        let a = e.mollified_integral(1.0, &[0.0], 0.01, 1e-9).unwrap().value.norm();
        assert!((a - 1.7724).abs() < 1e-4);
    }

    #[test]
    fn mollified_difference_is_first_order() {
        let e = quartic();
        let v = |eps: f64| e.mollified_integral(1.0, &[0.5], eps, 1e-10).unwrap().value;
        let d1 = (v(0.2) - v(0.1)).norm();
        let d2 = (v(0.1) - v(0.05)).norm();
        assert!((d1 / d2 - 2.0).abs() < 0.2, "{}", d1 / d2);
    }

    #[test]
    fn free_fundamental_solution() {
        let e = free();
        for &(t, x) in &[(1.0, 0.0), (1.0, 2.5), (4.0, 0.0), (0.1, 5.0), (-3.0, 1.0)] {
            let r = e.fundamental_solution(t, &[x], None, 1e-8).unwrap();
            assert!(r.converged, "{t} {x}: {:?}", r.diagnostics);
            let want = (PI / f64::abs(t)).sqrt();
            assert!((r.value.norm() / want - 1.0).abs() < 1e-6, "{t} {x}");
            assert!(r.abs_error_estimate <= 1e-8);
        }
    }

    #[test]
    fn quartic_fundamental_solution() {
        let r = quartic().fundamental_solution(1.0, &[0.0], None, 1e-7).unwrap();
        let exact = Complex64::from_polar(2.0 * gamma(1.25), PI / 8.0);
        assert!(r.converged);
        assert!((r.value - exact).norm() < 1e-6, "{} vs {exact}", r.value);
    }

    #[test]
    fn partition_guided_free_and_quartic() {
        let r = free().partition_guided(1.0, &[-2.0], 1.0, 1e-8).unwrap();
        assert!(r.converged, "{:?}", r.diagnostics);
        assert!((r.value.norm() - PI.sqrt()).abs() < 1e-7);
        let r = quartic().partition_guided(0.01, &[0.0], 1.0, 1e-6).unwrap();
        let want = 2.0 * gamma(1.25) * 0.01f64.powf(-0.25);
        assert!((r.value.norm() / want - 1.0).abs() < 1e-6, "{}", r.value.norm());
    }

    #[test]
    fn methods_agree() {
        let e = Evaluator::new(&sym(1, &[(&[4], 1.0), (&[2], -1.0), (&[1], 0.3)])).unwrap();
        // contour-rotated values
        let oracle = [
            (1.0, 0.0, Complex64::new(2.2306145578780328, 0.15110897382616106)),
            (0.5, -2.0, Complex64::new(0.8551906658160028, -0.5451034175206925)),
            (2.0, 3.0, Complex64::new(-0.3954468181728808, 0.07046467335907267)),
        ];
        for &(t, x, want) in &oracle {
            let a = e.fundamental_solution(t, &[x], None, 1e-6).unwrap();
            let b = e.partition_guided(t, &[x], 1.5, 1e-8).unwrap();
            assert!(a.converged && b.converged, "{t} {x}");
            assert!((a.value - b.value).norm() <= a.abs_error_estimate + b.abs_error_estimate, "{t} {x}: {} {}", a.value, b.value);
            assert!((a.value - want).norm() <= a.abs_error_estimate);
            assert!((b.value - want).norm() <= 1e-8);
        }
    }

    #[test]
    fn split_adds_up() {
        let e = quartic();
        let whole = e.fundamental_solution(100.0, &[0.0], None, 1e-8).unwrap();
        let s = e.split_i1_i2(100.0, &[0.0], 1.0, 1e-8).unwrap();
        let sum = s.i1.value + s.i2.value;
        assert!((sum - whole.value).norm() < s.i1.abs_error_estimate + s.i2.abs_error_estimate + whole.abs_error_estimate);
        assert!(s.i1.value.norm() < 0.2);
        let f = free().split_i1_i2(2.0, &[0.3], 1.0, 1e-8).unwrap();
        assert!(f.i2.value.norm() <= 2.0);
    }

    #[test]
    fn conjugation_is_exact() {
        let e = Evaluator::new(&sym(1, &[(&[4], 1.0), (&[3], 0.4)])).unwrap();
        let a = e.partition_guided(0.7, &[1.3], 1.0, 1e-7).unwrap();
        let b = e.partition_guided(-0.7, &[-1.3], 1.0, 1e-7).unwrap();
        assert!((a.value - b.value.conj()).norm() <= 1e-14 * a.value.norm().max(1.0));
    }

    #[test]
    fn two_dimensional_free_symbol() {
        let e = Evaluator::new(&sym(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)])).unwrap();
        for x in [[0.0, 0.0], [1.0, -0.5]] {
            let r = e.fundamental_solution(2.0, &x, None, 1e-7).unwrap();
            assert!(r.converged, "{:?}", r.diagnostics);
            assert!((r.value.norm() / (PI / 2.0) - 1.0).abs() < 1e-5);
            let q = e.partition_guided(2.0, &x, 1.0, 1e-7).unwrap();
            assert!((q.value.norm() / (PI / 2.0) - 1.0).abs() < 1e-5, "{:?}", q);
        }
    }

    #[test]
    fn radial_quartic_in_three_dimensions() {
        // ∫_{ℝ³} e^{i|ξ|⁴} dξ = 4π ∫ ρ² e^{iρ⁴} dρ = π Γ(3/4) e^{3iπ/8}
        let p = sym(3, &[(&[4, 0, 0], 1.0), (&[0, 4, 0], 1.0), (&[0, 0, 4], 1.0), (&[2, 2, 0], 2.0), (&[2, 0, 2], 2.0), (&[0, 2, 2], 2.0)]);
        let e = Evaluator::new(&p).unwrap();
        let r = e.fundamental_solution(1.0, &[0.0, 0.0, 0.0], None, 1e-6).unwrap();
        let exact = Complex64::from_polar(PI * gamma(0.75), 3.0 * PI / 8.0);
        assert!((r.value - exact).norm() < 1e-6, "{} {exact}", r.value);
        assert!(e.fundamental_solution(1.0, &[1.0, 0.0, 0.0], None, 1e-7).is_err());
        assert!(e.partition_guided(1.0, &[0.0, 0.0, 0.0], 1.0, 1e-7).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let e = quartic();
        assert!(e.fundamental_solution(0.0, &[0.0], None, 1e-6).is_err());
        assert!(e.fundamental_solution(1.0, &[0.0, 1.0], None, 1e-6).is_err());
        assert!(Evaluator::new(&sym(2, &[(&[4, 0], 1.0), (&[0, 4], -1.0)])).is_err());
        assert!(MollifierSchedule::new(1.0, 1.5, 5, 5).is_err());
        assert!(MollifierSchedule::new(1.0, 0.5, 2, 5).is_err());
    }
}
