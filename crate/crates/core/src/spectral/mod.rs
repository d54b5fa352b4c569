//! Classification of a symbol against the degeneracy condition (H_b):
//! Hessian eigenvalue growth along rays, sign coherence, the threshold
//! radius L with its two lower-bound constants, and the closed-form decay
//! exponents σ and ρ_b.

pub mod eigen;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::sphere;
use crate::symbol::{certify_elliptic, default_sphere_samples, EllipticityCertificate, PolynomialSymbol};

pub use eigen::{closed_form_2x2, symmetric_eigenvalues};

/// Eigenvalues with |λ| at or below this are treated as numerically zero by
/// the sign check.
pub const EIGEN_ZERO: f64 = 1e-9;

/// Ascending eigenvalues of the Hessian of P at ξ.
pub fn hessian_eigenvalues(p: &PolynomialSymbol, xi: &[f64]) -> Result<Vec<f64>> {
    symmetric_eigenvalues(&p.hessian(xi)?)
}

/// Geometric grid `start, start·factor, …` up to and including `stop`.
pub fn geometric_grid(start: f64, stop: f64, factor: f64) -> Vec<f64> {
    assert!(start > 0.0 && stop >= start && factor > 1.0);
    let steps = ((stop / start).ln() / factor.ln() + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=steps).map(|k| start * factor.powi(k as i32)).collect();
    if *g.last().unwrap() < stop * (1.0 - 1e-12) {
        g.push(stop);
    }
    g
}

/// Directions used for ray scans: 64 on the circle, 256 Fibonacci points
/// plus the coordinate axes on S².
pub fn scan_directions(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => sphere::net(1, 0),
        2 => sphere::circle(64),
        _ => {
            let mut d = sphere::fibonacci(256);
            for j in 0..3 {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; 3];
                    e[j] = s;
                    d.push(e);
                }
            }
            d
        }
    }
}

fn scaled(dir: &[f64], r: f64) -> Vec<f64> {
    dir.iter().map(|w| w * r).collect()
}

fn min_abs(ev: &[f64]) -> f64 {
    ev.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min)
}

fn max_abs(ev: &[f64]) -> f64 {
    ev.iter().map(|l| l.abs()).fold(0.0, f64::max)
}

/// Least-squares slope and intercept of `ys` against `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RaySlope {
    pub direction: Vec<f64>,
    /// Fitted exponent of min_k |λ_k(Rω)| in R; `None` when the smallest
    /// eigenvalue vanishes along the ray.
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BEstimate {
    pub b_hat: f64,
    pub ray_slopes: Vec<RaySlope>,
    pub flag: Option<String>,
    pub degeneracy_witness: Option<Vec<f64>>,
}

/// Empirical degeneracy order b from the growth of the smallest Hessian
/// eigenvalue along rays.
///
/// Each ray's slope is fitted over the top decade of `radii`; b̂ is the
/// minimum slope divided by m − 2, clamped to [0, 1].
pub fn estimate_b(p: &PolynomialSymbol, directions: &[Vec<f64>], radii: &[f64]) -> Result<BEstimate> {
    let m = p.degree();
    if m < 2 {
        return invalid("estimate_b needs a symbol of degree at least 2");
    }
    if m == 2 {
        return Ok(BEstimate {
            b_hat: 1.0,
            ray_slopes: Vec::new(),
            flag: Some("m=2: b irrelevant".into()),
            degeneracy_witness: None,
        });
    }
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let top: Vec<f64> = radii.iter().copied().filter(|&r| r >= r_max / 10.0 * (1.0 - 1e-12)).collect();
    if top.len() < 8 || r_max / radii.iter().copied().fold(f64::INFINITY, f64::min) < 99.0 {
        return invalid("radii must span two decades with at least 8 points in the top decade");
    }
    let mut ray_slopes = Vec::with_capacity(directions.len());
    let mut worst: Option<(f64, usize)> = None;
    let mut degenerate: Option<usize> = None;
    for (k, dir) in directions.iter().enumerate() {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &r in &top {
            let ev = hessian_eigenvalues(p, &scaled(dir, r))?;
            let lo = min_abs(&ev);
            if lo > 1e-12 * max_abs(&ev) && lo > 0.0 {
                xs.push(r.ln());
                ys.push(lo.ln());
            }
        }
        let slope = if xs.len() >= 2 { Some(linear_fit(&xs, &ys).0) } else { None };
        match slope {
            Some(s) => {
                if worst.map_or(true, |(w, _)| s < w) {
                    worst = Some((s, k));
                }
            }
            None => {
                if degenerate.is_none() {
                    degenerate = Some(k);
                }
            }
        }
        ray_slopes.push(RaySlope {
            direction: dir.clone(),
            slope,
        });
    }
    if let Some(k) = degenerate {
        return Ok(BEstimate {
            b_hat: 0.0,
            ray_slopes,
            flag: Some("smallest Hessian eigenvalue vanishes along a ray".into()),
            degeneracy_witness: Some(directions[k].clone()),
        });
    }
    let (s, _) = worst.ok_or_else(|| LabError::Numerical("no usable ray".into()))?;
    Ok(BEstimate {
        b_hat: (s / (m as f64 - 2.0)).clamp(0.0, 1.0),
        ray_slopes,
        flag: None,
        degeneracy_witness: None,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SignWitness {
    pub point: Vec<f64>,
    /// Two eigenvalues of strictly opposite sign, both above the zero
    /// threshold in magnitude.
    pub eigenvalues: (f64, f64),
    /// Set when the second eigenvalue was observed at a different point
    /// (sign flips between samples rather than within one Hessian).
    pub other_point: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SignCheck {
    pub same_sign: bool,
    /// +1 or −1 for the common sign, 0 when undetermined or violated.
    pub sign: i8,
    pub witness: Option<SignWitness>,
    pub samples: usize,
    pub skipped_zero_eigenvalues: usize,
}

/// Sample points with |ξ| in [L, 10L] on a radial × angular grid.
fn shell_samples(n: usize, l: f64, samples: usize) -> Vec<Vec<f64>> {
    let (n_r, dirs) = match n {
        1 => ((samples / 2).max(2), sphere::net(1, 0)),
        2 => (16, sphere::circle((samples / 16).max(8))),
        _ => (16, sphere::fibonacci((samples / 16).max(16))),
    };
    let radii: Vec<f64> = (0..n_r)
        .map(|i| l * 10f64.powf(i as f64 / (n_r - 1) as f64))
        .collect();
    let mut pts = Vec::with_capacity(radii.len() * dirs.len());
    for &r in &radii {
        for d in &dirs {
            pts.push(scaled(d, r));
        }
    }
    pts
}

/// Condition ②: all Hessian eigenvalues share one sign on |ξ| ∈ [L, 10L].
pub fn same_sign_check(p: &PolynomialSymbol, l: f64, samples: usize) -> Result<SignCheck> {
    if !(l > 0.0) {
        return invalid("L must be positive");
    }
    let pts = shell_samples(p.dim(), l, samples);
    let mut reference: Option<(f64, Vec<f64>)> = None;
    let mut skipped = 0;
    for xi in &pts {
        let ev = hessian_eigenvalues(p, xi)?;
        let nonzero: Vec<f64> = ev
            .iter()
            .copied()
            .filter(|v| {
                let keep = v.abs() > EIGEN_ZERO;
                if !keep {
                    skipped += 1;
                }
                keep
            })
            .collect();
        let Some(&first) = nonzero.first() else { continue };
        if let Some(&opposite) = nonzero.iter().find(|v| v.signum() != first.signum()) {
            return Ok(SignCheck {
                same_sign: false,
                sign: 0,
                witness: Some(SignWitness {
                    point: xi.clone(),
                    eigenvalues: (first, opposite),
                    other_point: None,
                }),
                samples: pts.len(),
                skipped_zero_eigenvalues: skipped,
            });
        }
        match &reference {
            None => reference = Some((first, xi.clone())),
            Some((r, rp)) if r.signum() != first.signum() => {
                return Ok(SignCheck {
                    same_sign: false,
                    sign: 0,
                    witness: Some(SignWitness {
                        point: xi.clone(),
                        eigenvalues: (first, *r),
                        other_point: Some(rp.clone()),
                    }),
                    samples: pts.len(),
                    skipped_zero_eigenvalues: skipped,
                });
            }
            _ => {}
        }
    }
    Ok(SignCheck {
        same_sign: true,
        sign: reference.map_or(0, |(r, _)| r.signum() as i8),
        witness: None,
        samples: pts.len(),
        skipped_zero_eigenvalues: skipped,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LowerBounds {
    #[serde(rename = "L")]
    pub l: f64,
    pub c_lambda: f64,
    pub c_grad: f64,
}

/// Threshold radius L and the constants in
/// min_k |λ_k(ξ)| ≥ c_λ |ξ|^{(m−2)b} and |∇P(ξ)| ≥ c_∇ |ξ|^{m−1} for |ξ| ≥ L.
///
/// The asymptotic constants are the infima of the two ratios over the outer
/// decade of `radii`. Both must be positive and must not keep decaying at the
/// outer edge. L is the smallest grid radius beyond which both ratios stay
/// above half their asymptotic value; the reported constants are the infima
/// over [L, R_max], so every sampled point satisfies both bounds.
pub fn find_l(
    p: &PolynomialSymbol,
    b: f64,
    radii: &[f64],
    directions: &[Vec<f64>],
) -> Result<LowerBounds> {
    if !(0.0..=1.0).contains(&b) {
        return invalid(format!("b = {b} outside [0, 1]"));
    }
    let m = p.degree() as f64;
    if m < 2.0 {
        return invalid("find_l needs a symbol of degree at least 2");
    }
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let lam_exp = (m - 2.0) * b;
    // ratios[i][k]: radius i, direction k
    let mut lam = vec![vec![0.0; directions.len()]; radii.len()];
    let mut grad = vec![vec![0.0; directions.len()]; radii.len()];
    for (i, &r) in radii.iter().enumerate() {
        for (k, d) in directions.iter().enumerate() {
            let xi = scaled(d, r);
            let ev = hessian_eigenvalues(p, &xi)?;
            let lo = min_abs(&ev);
            lam[i][k] = if lo > EIGEN_ZERO { lo / r.powf(lam_exp) } else { 0.0 };
            grad[i][k] = sphere::norm(&p.gradient(&xi)?) / r.powf(m - 1.0);
        }
    }
    let outer: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] >= r_max / 10.0 * (1.0 - 1e-12)).collect();
    let inf_over = |table: &Vec<Vec<f64>>, rows: &[usize]| -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for &i in rows {
            for (k, &v) in table[i].iter().enumerate() {
                if v < best.0 {
                    best = (v, k);
                }
            }
        }
        best
    };
    for (label, table) in [("Hessian eigenvalue", &lam), ("gradient", &grad)] {
        let (c_inf, k) = inf_over(table, &outer);
        if !(c_inf > 0.0) {
            return Err(LabError::Classification(format!(
                "{label} lower bound fails: ratio vanishes along direction {:?}",
                directions[k]
            )));
        }
        // a bound that keeps decaying across the outer decade has the wrong exponent
        let xs: Vec<f64> = outer.iter().map(|&i| radii[i].ln()).collect();
        let ys: Vec<f64> = outer
            .iter()
            .map(|&i| table[i].iter().copied().fold(f64::INFINITY, f64::min).ln())
            .collect();
        if xs.len() >= 2 {
            let (slope, _) = linear_fit(&xs, &ys);
            if slope < -0.1 {
                let (_, k) = inf_over(table, &outer[outer.len() - 1..]);
                return Err(LabError::Classification(format!(
                    "{label} lower bound decays like R^{slope:.3} at the outer radii along direction {:?}",
                    directions[k]
                )));
            }
        }
    }
    let (lam_inf, _) = inf_over(&lam, &outer);
    let (grad_inf, _) = inf_over(&grad, &outer);
    // walk inwards while every sample beyond the candidate keeps both ratios healthy
    let healthy = |i: usize| {
        lam[i].iter().all(|&v| v >= 0.5 * lam_inf) && grad[i].iter().all(|&v| v >= 0.5 * grad_inf)
    };
    let mut start = radii.len();
    while start > 0 && healthy(start - 1) {
        start -= 1;
    }
    if start == radii.len() {
        return Err(LabError::Classification("no threshold radius found on the grid".into()));
    }
    let rows: Vec<usize> = (start..radii.len()).collect();
    Ok(LowerBounds {
        l: radii[start],
        c_lambda: inf_over(&lam, &rows).0,
        c_grad: inf_over(&grad, &rows).0,
    })
}

/// Small-time decay exponent σ = n / ((2b − 1)(m − 2) + 2).
pub fn sigma(n: usize, m: u32, b: f64) -> Result<f64> {
    let den = (2.0 * b - 1.0) * (m as f64 - 2.0) + 2.0;
    if !(den > 0.0) || m < 2 || n == 0 {
        return Err(LabError::Numerical(format!(
            "σ undefined for n = {n}, m = {m}, b = {b} (denominator {den})"
        )));
    }
    Ok(n as f64 / den)
}

/// The earlier large-time exponent ρ_b = n((m − 3) − b(m − 2)) / ((m − 2)(2b − 1) + 2).
pub fn rho_b(n: usize, m: u32, b: f64) -> Result<f64> {
    let mf = m as f64;
    let den = (mf - 2.0) * (2.0 * b - 1.0) + 2.0;
    if !(den > 0.0) || m < 2 || n == 0 {
        return Err(LabError::Numerical(format!(
            "ρ_b undefined for n = {n}, m = {m}, b = {b} (denominator {den})"
        )));
    }
    Ok(n as f64 * ((mf - 3.0) - b * (mf - 2.0)) / den)
}

/// b lies in the range where the small-time estimate is established.
pub fn b_in_theorem_range(b: f64) -> bool {
    (0.5..=1.0).contains(&b)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExponentRecord {
    pub n: usize,
    pub m: u32,
    pub b: f64,
    pub b_in_range: bool,
    pub sigma: f64,
    pub rho_b: f64,
    /// n/m, the small-time exponent of the non-degenerate case.
    pub cui_small_t: f64,
    /// −n/2, the improved large-time exponent.
    pub new_large_t: f64,
    /// ρ_b ≥ −n/2.
    pub rho_dominates_new: bool,
}

pub fn exponent_table(n: usize, m: u32, b: f64) -> Result<ExponentRecord> {
    let s = sigma(n, m, b)?;
    let r = rho_b(n, m, b)?;
    let new_large_t = -(n as f64) / 2.0;
    Ok(ExponentRecord {
        n,
        m,
        b,
        b_in_range: b_in_theorem_range(b),
        sigma: s,
        rho_b: r,
        cui_small_t: n as f64 / m as f64,
        new_large_t,
        rho_dominates_new: r >= new_large_t - 1e-15,
    })
}

/// Grids and sample counts for [`analyze`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectralConfig {
    pub sphere_samples: usize,
    pub ellipticity_tol: f64,
    pub b_radii: (f64, f64, f64),
    pub l_radii: (f64, f64, f64),
    pub sign_samples: usize,
}

impl SpectralConfig {
    pub fn for_dim(n: usize) -> Self {
        SpectralConfig {
            sphere_samples: default_sphere_samples(n),
            ellipticity_tol: 1e-9,
            b_radii: (10.0, 1000.0, 1.2),
            l_radii: (1.0, 1000.0, 1.2),
            sign_samples: match n {
                1 => 200,
                2 => 2048,
                _ => 4096,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectralReport {
    pub b_hat: f64,
    pub b_flag: Option<String>,
    pub degeneracy_witness: Option<Vec<f64>>,
    pub same_sign: bool,
    pub sign: i8,
    pub sign_witness: Option<SignWitness>,
    pub skipped_zero_eigenvalues: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub c_lambda: f64,
    pub c_grad: f64,
    pub ray_slopes: Vec<RaySlope>,
}

/// Outcome of the full classification pipeline.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Analysis {
    pub certificate: EllipticityCertificate,
    pub report: Option<SpectralReport>,
    pub exponents: Option<ExponentRecord>,
    /// Empty when the symbol satisfies every check.
    pub failure: Option<String>,
}

impl Analysis {
    pub fn classified(&self) -> bool {
        self.failure.is_none() && self.report.as_ref().is_some_and(|r| r.same_sign)
    }
}

/// certify_elliptic → estimate_b → find_l → same_sign_check → exponent_table.
///
/// Non-elliptic symbols return `Err(InvalidInput)` together with nothing
/// else; use [`analyze_detailed`] to keep the certificate.
pub fn analyze_detailed(p: &PolynomialSymbol, cfg: &SpectralConfig) -> Result<Analysis> {
    if p.is_zero() {
        return invalid("the zero polynomial is not a symbol");
    }
    if p.degree() < 2 {
        return invalid("symbols of degree below 2 are not dispersive");
    }
    let certificate = certify_elliptic(p, cfg.sphere_samples.max(100 * p.dim()), cfg.ellipticity_tol)?;
    if !certificate.is_elliptic {
        return Ok(Analysis {
            certificate,
            report: None,
            exponents: None,
            failure: Some("principal part vanishes on the unit sphere (not elliptic)".into()),
        });
    }
    let dirs = scan_directions(p.dim());
    let (b0, b1, bf) = cfg.b_radii;
    let be = estimate_b(p, &dirs, &geometric_grid(b0, b1, bf))?;
    let (l0, l1, lf) = cfg.l_radii;
    let bounds = match find_l(p, be.b_hat, &geometric_grid(l0, l1, lf), &dirs) {
        Ok(b) => b,
        Err(LabError::Classification(msg)) => {
            // still report the sign structure on the default shell
            let sign = same_sign_check(p, l0, cfg.sign_samples)?;
            return Ok(Analysis {
                certificate,
                report: Some(SpectralReport {
                    b_hat: be.b_hat,
                    b_flag: be.flag,
                    degeneracy_witness: be.degeneracy_witness,
                    same_sign: sign.same_sign,
                    sign: sign.sign,
                    sign_witness: sign.witness,
                    skipped_zero_eigenvalues: sign.skipped_zero_eigenvalues,
                    l: f64::NAN,
                    c_lambda: 0.0,
                    c_grad: 0.0,
                    ray_slopes: be.ray_slopes,
                }),
                exponents: None,
                failure: Some(msg),
            });
        }
        Err(e) => return Err(e),
    };
    let sign = same_sign_check(p, bounds.l, cfg.sign_samples)?;
    let exponents = exponent_table(p.dim(), p.degree(), be.b_hat).ok();
    let failure = if !sign.same_sign {
        Some("Hessian eigenvalues change sign beyond L".into())
    } else if exponents.is_none() {
        Some(format!("decay exponents undefined at b = {}", be.b_hat))
    } else {
        None
    };
    Ok(Analysis {
        certificate,
        report: Some(SpectralReport {
            b_hat: be.b_hat,
            b_flag: be.flag,
            degeneracy_witness: be.degeneracy_witness,
            same_sign: sign.same_sign,
            sign: sign.sign,
            sign_witness: sign.witness,
            skipped_zero_eigenvalues: sign.skipped_zero_eigenvalues,
            l: bounds.l,
            c_lambda: bounds.c_lambda,
            c_grad: bounds.c_grad,
            ray_slopes: be.ray_slopes,
        }),
        exponents,
        failure,
    })
}

/// Like [`analyze_detailed`] but turns every failure into an error.
pub fn analyze(p: &PolynomialSymbol, cfg: &SpectralConfig) -> Result<(SpectralReport, ExponentRecord)> {
    let a = analyze_detailed(p, cfg)?;
    if !a.certificate.is_elliptic {
        return invalid(a.failure.unwrap_or_default());
    }
    match (a.report, a.exponents, a.failure) {
        (Some(r), Some(e), None) => Ok((r, e)),
        (_, _, f) => Err(LabError::Classification(f.unwrap_or_else(|| "classification failed".into()))),
    }
}
