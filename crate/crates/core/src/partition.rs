//! Geometric toolkit for the frequency-space decomposition of I₁: the smooth
//! bump, region classifiers for Ω₁/Ω₂/Ω₃, the cutoffs φ₁/φ₂/φ₃, the angular
//! net with its sector partition χ_v, stationary points of the phase, and an
//! empirical check of the gradient separation inequality on a sector.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::GrowthBounds;
use crate::error::{invalid, LabError, Result};
use crate::sphere;
use crate::symbol::{PolynomialSymbol, MAX_DIM};

#[inline]
fn transition(z: f64) -> f64 {
    if z > 0.0 {
        (-1.0 / z).exp()
    } else {
        0.0
    }
}

/// C^∞ plateau profile: 1 on [−1/2, 1/2], 0 outside (−1, 1), symmetric,
/// strictly between 0 and 1 on the transition band.
pub fn bump(s: f64) -> f64 {
    let a = s.abs();
    if a <= 0.5 {
        return 1.0;
    }
    if a >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * a - 1.0;
    let rise = transition(1.0 - u);
    rise / (rise + transition(u))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "omega1")]
    Omega1,
    #[serde(rename = "omega2")]
    Omega2,
    #[serde(rename = "omega3")]
    Omega3,
    #[serde(rename = "complement")]
    Complement,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::Omega1 => "O1",
            Region::Omega2 => "O2",
            Region::Omega3 => "O3",
            Region::Complement => "Oc",
        }
    }
}

/// Scales attached to one (t, x).
#[derive(Clone, Debug, PartialEq)]
pub struct RegionContext {
    pub t: f64,
    pub x: Vec<f64>,
    pub l: f64,
    pub m: u32,
    /// r = |x/t|^{1/(m−1)}.
    pub r: f64,
    /// |t|^{−1/m}.
    pub low_freq_radius: f64,
    y: [f64; MAX_DIM],
    y_norm: f64,
    t_root: f64,
}

/// Below this |x/t| the stationary cutoff φ₂ is defined as 0.
pub const X_OVER_T_FLOOR: f64 = 1e-12;

impl RegionContext {
    pub fn new(t: f64, x: &[f64], l: f64, m: u32) -> Result<Self> {
        if !(t.is_finite() && t != 0.0) {
            return invalid("t must be finite and non-zero");
        }
        if x.is_empty() || x.len() > MAX_DIM || x.iter().any(|v| !v.is_finite()) {
            return invalid("x must be a finite vector of length 1..=3");
        }
        if !(l > 0.0 && l.is_finite()) {
            return invalid("L must be positive");
        }
        if m < 2 {
            return invalid("m must be at least 2");
        }
        let mut y = [0.0; MAX_DIM];
        for (j, v) in x.iter().enumerate() {
            y[j] = v / t;
        }
        let y_norm = sphere::norm(&y);
        let t_root = t.abs().powf(1.0 / m as f64);
        Ok(RegionContext {
            t,
            x: x.to_vec(),
            l,
            m,
            r: y_norm.powf(1.0 / (m as f64 - 1.0)),
            low_freq_radius: 1.0 / t_root,
            y,
            y_norm,
            t_root,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x_over_t_norm(&self) -> f64 {
        self.y_norm
    }

    /// |∇P(ξ) + x/t|.
    #[inline]
    pub(crate) fn shifted_gradient_norm(&self, grad: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..self.dim() {
            let v = grad[j] + self.y[j];
            s += v * v;
        }
        s.sqrt()
    }

    /// Cutoffs from a precomputed |ξ| and ∇P(ξ).
    #[inline]
    pub(crate) fn cutoffs_at(&self, rho: f64, grad: &[f64]) -> Cutoffs {
        let phi1 = bump(rho * self.t_root);
        let rest = 1.0 - phi1;
        let phi2 = if self.y_norm < X_OVER_T_FLOOR || rest == 0.0 {
            0.0
        } else {
            rest * bump(self.shifted_gradient_norm(grad) / self.y_norm)
        };
        Cutoffs {
            phi1,
            phi2,
            phi3: rest - phi2,
        }
    }

    fn check(&self, p: &PolynomialSymbol, xi: &[f64]) -> Result<()> {
        if p.dim() != self.dim() || xi.len() != self.dim() {
            return invalid(format!(
                "dimension mismatch: symbol n = {}, x has {}, ξ has {}",
                p.dim(),
                self.dim(),
                xi.len()
            ));
        }
        Ok(())
    }
}

/// All regions containing ξ. Ω₂ and Ω₃ overlap on the band
/// |x/t|/2 < |∇P + x/t| < |x/t|.
pub fn classify(ctx: &RegionContext, p: &PolynomialSymbol, xi: &[f64]) -> Result<Vec<Region>> {
    ctx.check(p, xi)?;
    let rho = sphere::norm(xi);
    if rho < ctx.l {
        return Ok(vec![Region::Complement]);
    }
    let mut out = Vec::with_capacity(2);
    if rho < ctx.low_freq_radius {
        out.push(Region::Omega1);
    }
    if rho > 0.5 * ctx.low_freq_radius {
        let d = ctx.shifted_gradient_norm(&p.gradient(xi)?);
        if d < ctx.y_norm {
            out.push(Region::Omega2);
        }
        if d > 0.5 * ctx.y_norm {
            out.push(Region::Omega3);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

/// φ₁ = φ(|ξ||t|^{1/m}), φ₂ = (1 − φ₁)φ(|∇P + x/t|/|x/t|), φ₃ = 1 − φ₁ − φ₂.
pub fn cutoffs(ctx: &RegionContext, p: &PolynomialSymbol, xi: &[f64]) -> Result<Cutoffs> {
    ctx.check(p, xi)?;
    Ok(ctx.cutoffs_at(sphere::norm(xi), &p.gradient(xi)?))
}

/// Minimum chordal separation of the angular net.
pub const NET_SPACING: f64 = 0.25;

fn uniform_sphere(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    match n {
        1 => vec![if rng.random::<bool>() { 1.0 } else { -1.0 }],
        2 => vec![th.cos(), th.sin()],
        _ => {
            let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let s = (1.0 - z * z).max(0.0).sqrt();
            vec![s * th.cos(), s * th.sin(), z]
        }
    }
}

/// Largest chordal distance from any of `samples` to its nearest net point.
pub fn covering_distance(net: &[Vec<f64>], samples: &[Vec<f64>]) -> f64 {
    samples
        .iter()
        .map(|s| net.iter().map(|v| sphere::dist(s, v)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn greedy_add(net: &mut Vec<Vec<f64>>, candidates: &[Vec<f64>]) {
    for c in candidates {
        if net.iter().all(|v| sphere::dist(c, v) >= NET_SPACING) {
            net.push(c.clone());
        }
    }
}

/// Greedy maximal 1/4-packing of S^{n−1}, verified to cover the sphere
/// within chordal distance 1/4 on 10⁴ random directions.
pub fn angular_net(n: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 || n > MAX_DIM {
        return invalid(format!("angular net needs n in 1..=3, got {n}"));
    }
    if n == 1 {
        return Ok(sphere::net(1, 0));
    }
    // on the circle the equally spaced set with chord just above 1/4 is already maximal
    let candidates = if n == 2 {
        sphere::circle((std::f64::consts::PI / (NET_SPACING / 2.0).asin()).floor() as usize)
    } else {
        sphere::fibonacci(100_000)
    };
    let mut net = Vec::new();
    greedy_add(&mut net, &candidates);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    // uncovered probes are ≥ 1/4 from every point, so adding them keeps the packing
    for _ in 0..20 {
        let before = net.len();
        let probes: Vec<Vec<f64>> = (0..10_000).map(|_| uniform_sphere(&mut rng, n)).collect();
        greedy_add(&mut net, &probes);
        if net.len() == before {
            break;
        }
    }
    let check: Vec<Vec<f64>> = (0..10_000).map(|_| uniform_sphere(&mut rng, n)).collect();
    let cover = covering_distance(&net, &check);
    if cover >= NET_SPACING {
        return Err(LabError::Internal(format!(
            "angular net does not cover the sphere: covering distance {cover}"
        )));
    }
    Ok(net)
}

/// Sector weights χ_v = ζ_v / Σζ_l with ζ_v = φ(4|ξ/|ξ| − ξ_v|).
pub fn chi_partition(net: &[Vec<f64>], xi: &[f64]) -> Result<Vec<f64>> {
    let rho = sphere::norm(xi);
    if !(rho > 0.0) {
        return invalid("χ_v is undefined at ξ = 0");
    }
    if net.iter().any(|v| v.len() != xi.len()) {
        return invalid("net and ξ have different dimensions");
    }
    let omega: Vec<f64> = xi.iter().map(|v| v / rho).collect();
    let zeta: Vec<f64> = net.iter().map(|v| bump(4.0 * sphere::dist(&omega, v))).collect();
    let total: f64 = zeta.iter().sum();
    if !(total > 0.0) {
        return Err(LabError::Internal("no sector weight is positive: net does not cover ξ/|ξ|".into()));
    }
    Ok(zeta.into_iter().map(|z| z / total).collect())
}

/// Start points for the multistart Newton solve: a 9ⁿ (7³ in 3-D) grid of
/// [−R, R]ⁿ restricted to the ball of radius R.
fn start_grid(n: usize, radius: f64) -> Vec<Vec<f64>> {
    let k: usize = if n == 3 { 7 } else { 9 };
    let coord = |i: usize| radius * (2.0 * i as f64 / (k - 1) as f64 - 1.0);
    let mut out = Vec::new();
    let total = k.pow(n as u32);
    for idx in 0..total {
        let mut rest = idx;
        let mut p = Vec::with_capacity(n);
        for _ in 0..n {
            p.push(coord(rest % k));
            rest /= k;
        }
        if sphere::norm(&p) <= radius * (1.0 + 1e-12) {
            out.push(p);
        }
    }
    out
}

fn newton(p: &PolynomialSymbol, y: &[f64], start: &[f64], threshold: f64) -> Option<Vec<f64>> {
    let n = start.len();
    let residual = |xi: &[f64]| -> (Vec<f64>, f64) {
        let mut g = [0.0; MAX_DIM];
        p.value_and_gradient(xi, &mut g);
        let f: Vec<f64> = (0..n).map(|j| g[j] + y[j]).collect();
        let norm = sphere::norm(&f);
        (f, norm)
    };
    let mut xi = start.to_vec();
    let (mut f, mut res) = residual(&xi);
    for _ in 0..200 {
        if res < threshold {
            return Some(xi);
        }
        let h = p.hessian_unchecked(&xi);
        let a = DMatrix::from_fn(n, n, |i, j| h.get(i, j));
        let rhs = DVector::from_iterator(n, f.iter().map(|v| -v));
        let step = a.lu().solve(&rhs)?;
        if step.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = (0..n).map(|j| xi[j] + lambda * step[j]).collect();
            let (tf, tres) = residual(&trial);
            if tres < (1.0 - 1e-4 * lambda) * res {
                xi = trial;
                f = tf;
                res = tres;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return None;
            }
        }
    }
    (res < threshold).then_some(xi)
}

/// Solutions of ∇P(ξ) = −x/t found by damped Newton iteration from a grid of
/// starts in the ball of `search_radius` (default: twice the radius beyond
/// which |∇P| exceeds 2|x/t|). Returned sorted and de-duplicated.
pub fn stationary_points(
    p: &PolynomialSymbol,
    t: f64,
    x: &[f64],
    search_radius: Option<f64>,
) -> Result<Vec<Vec<f64>>> {
    if !(t.is_finite() && t != 0.0) {
        return invalid("t must be finite and non-zero");
    }
    if x.len() != p.dim() {
        return invalid(format!("x has length {} but n = {}", x.len(), p.dim()));
    }
    let y: Vec<f64> = x.iter().map(|v| v / t).collect();
    let y_norm = sphere::norm(&y);
    let radius = match search_radius {
        Some(r) if r > 0.0 && r.is_finite() => r,
        Some(_) => return invalid("search radius must be positive"),
        None => {
            let (b, _) = GrowthBounds::for_symbol(p)?;
            2.0 * b.stationary_radius(1.0, y_norm).max(1e-6)
        }
    };
    let threshold = 1e-10 * y_norm.max(1.0);
    let mut found: Vec<Vec<f64>> = start_grid(p.dim(), radius)
        .iter()
        .filter_map(|s| newton(p, &y, s, threshold))
        .collect();
    found.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for q in found {
        let tol = 1e-7 * sphere::norm(&q).max(1.0);
        if unique.iter().all(|u| sphere::dist(u, &q) > tol) {
            unique.push(q);
        }
    }
    Ok(unique)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AnnulusConstants {
    pub r: f64,
    /// Smallest sampled |ξ| in Ω₂, less one grid step.
    pub inner_radius: f64,
    /// Largest sampled |ξ| in Ω₂, plus one grid step.
    pub outer_radius: f64,
    /// inner_radius / (2r)
    pub c1: f64,
    /// outer_radius / r
    pub c2: f64,
}

/// Numerical constants of the containment Ω₂ ⊂ {2C₁r < |ξ| < C₂r}, from a
/// ray scan of the Ω₂ indicator. `None` when Ω₂ is empty on the scan.
pub fn annulus_constants(p: &PolynomialSymbol, ctx: &RegionContext) -> Result<Option<AnnulusConstants>> {
    if ctx.x_over_t_norm() < X_OVER_T_FLOOR {
        return Ok(None);
    }
    let (bounds, _) = GrowthBounds::for_symbol(p)?;
    let lo = ctx.l.max(0.5 * ctx.low_freq_radius);
    let hi = bounds.stationary_radius(ctx.t, sphere::norm(&ctx.x));
    if !(hi > lo) {
        return Ok(None);
    }
    let dirs = match p.dim() {
        1 => sphere::net(1, 0),
        2 => sphere::circle(256),
        _ => sphere::fibonacci(1024),
    };
    let steps = 400;
    let h = (hi - lo) / steps as f64;
    let mut inner = f64::INFINITY;
    let mut outer: f64 = 0.0;
    for d in &dirs {
        for i in 0..=steps {
            let rho = lo + h * i as f64;
            let xi: Vec<f64> = d.iter().map(|w| w * rho).collect();
            if classify(ctx, p, &xi)?.contains(&Region::Omega2) {
                inner = inner.min(rho);
                outer = outer.max(rho);
            }
        }
    }
    if !inner.is_finite() {
        return Ok(None);
    }
    let inner = (inner - h).max(lo);
    let outer = outer + h;
    Ok(Some(AnnulusConstants {
        r: ctx.r,
        inner_radius: inner,
        outer_radius: outer,
        c1: inner / (2.0 * ctx.r),
        c2: outer / ctx.r,
    }))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SeparationReport {
    pub sector_direction: Vec<f64>,
    pub r: f64,
    pub c1_r: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// C₁r > L, the setting in which the inequality is used.
    pub precondition_ok: bool,
    pub pairs: usize,
    /// min |∇P(ξ) − ∇P(ξ′)| / (r^{b(m−2)}|ξ − ξ′|) over the sampled pairs.
    pub c_emp: Option<f64>,
    pub vacuous: bool,
}

/// Samples `pair_count` pairs in one sector Ω₂^v (the part of Ω₂ where χ_v
/// is positive) and records the smallest gradient separation ratio.
///
/// The sector is the one whose direction is nearest to the outermost
/// stationary point, or to −x/t when there is none.
#[allow(clippy::too_many_arguments)]
pub fn check_gradient_separation(
    p: &PolynomialSymbol,
    b: f64,
    l: f64,
    t: f64,
    x: &[f64],
    pair_count: usize,
    seed: u64,
) -> Result<SeparationReport> {
    let ctx = RegionContext::new(t, x, l, p.degree())?;
    let net = angular_net(p.dim())?;
    let stationary = stationary_points(p, t, x, None)?;
    let target: Vec<f64> = match stationary
        .iter()
        .max_by(|a, b| sphere::norm(a).total_cmp(&sphere::norm(b)))
    {
        Some(s) if sphere::norm(s) > 0.0 => s.clone(),
        _ => x.iter().map(|v| -v / t).collect(),
    };
    let tn = sphere::norm(&target);
    let vacuous = |dir: Vec<f64>, c1_r: f64| SeparationReport {
        sector_direction: dir,
        r: ctx.r,
        c1_r,
        l,
        precondition_ok: c1_r > l,
        pairs: 0,
        c_emp: None,
        vacuous: true,
    };
    if !(tn > 0.0) {
        return Ok(vacuous(net[0].clone(), 0.0));
    }
    let omega: Vec<f64> = target.iter().map(|v| v / tn).collect();
    let v = net
        .iter()
        .min_by(|a, b| sphere::dist(a, &omega).total_cmp(&sphere::dist(b, &omega)))
        .unwrap()
        .clone();
    let Some(ann) = annulus_constants(p, &ctx)? else {
        return Ok(vacuous(v, 0.0));
    };
    let c1_r = ann.c1 * ann.r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.dim();
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(2 * pair_count);
    let max_attempts = 2000 * pair_count.max(1);
    let mut attempts = 0;
    while points.len() < 2 * pair_count && attempts < max_attempts {
        attempts += 1;
        let rho = ann.inner_radius + (ann.outer_radius - ann.inner_radius) * rng.random::<f64>();
        let dir = match n {
            1 => v.clone(),
            2 => {
                // angles within the chord-1/4 cap around ξ_v
                let half = 2.0 * (NET_SPACING / 2.0).asin();
                let base = v[1].atan2(v[0]);
                let th = base + half * (2.0 * rng.random::<f64>() - 1.0);
                vec![th.cos(), th.sin()]
            }
            _ => uniform_sphere(&mut rng, 3),
        };
        if sphere::dist(&dir, &v) >= NET_SPACING {
            continue;
        }
        let xi: Vec<f64> = dir.iter().map(|w| w * rho).collect();
        if classify(&ctx, p, &xi)?.contains(&Region::Omega2) {
            points.push(xi);
        }
    }
    if points.len() < 2 {
        return Ok(vacuous(v, c1_r));
    }
    let scale = ctx.r.powf(b * (p.degree() as f64 - 2.0));
    let mut c_emp = f64::INFINITY;
    let mut pairs = 0;
    for pair in points.chunks_exact(2) {
        let d = sphere::dist(&pair[0], &pair[1]);
        if d < 1e-12 {
            continue;
        }
        let g0 = p.gradient(&pair[0])?;
        let g1 = p.gradient(&pair[1])?;
        c_emp = c_emp.min(sphere::dist(&g0, &g1) / (scale * d));
        pairs += 1;
    }
    Ok(SeparationReport {
        sector_direction: v,
        r: ctx.r,
        c1_r,
        l,
        precondition_ok: c1_r > l,
        pairs,
        c_emp: (pairs > 0).then_some(c_emp),
        vacuous: pairs == 0,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionRow {
    pub xi: Vec<f64>,
    pub regions: Vec<Region>,
    pub cutoffs: Cutoffs,
}

/// Regions and cutoffs on a uniform grid of [−half_width, half_width]ⁿ.
pub fn region_grid(
    p: &PolynomialSymbol,
    ctx: &RegionContext,
    half_width: f64,
    points_per_axis: usize,
) -> Result<Vec<RegionRow>> {
    if !(half_width > 0.0) || points_per_axis < 2 {
        return invalid("grid needs a positive half-width and at least 2 points per axis");
    }
    let n = p.dim();
    let k = points_per_axis;
    let coord = |i: usize| half_width * (2.0 * i as f64 / (k - 1) as f64 - 1.0);
    let mut rows = Vec::with_capacity(k.pow(n as u32));
    for idx in 0..k.pow(n as u32) {
        let mut rest = idx;
        let mut xi = vec![0.0; n];
        // last coordinate varies fastest
        for j in (0..n).rev() {
            xi[j] = coord(rest % k);
            rest /= k;
        }
        rows.push(RegionRow {
            regions: classify(ctx, p, &xi)?,
            cutoffs: cutoffs(ctx, p, &xi)?,
            xi,
        });
    }
    Ok(rows)
}
