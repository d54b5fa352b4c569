//! Sparse real polynomial symbols P(ξ) on ℝⁿ.
//!
//! A symbol stores its terms as a map from exponent tuples to coefficients.
//! Derivative polynomials (gradient and Hessian) are differentiated at the
//! coefficient level once, at construction, so that evaluation of ∇P and the
//! Hessian is exact up to floating-point rounding.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::sphere;

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;
/// Largest supported total degree.
pub const MAX_DEGREE: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Monomial {
    exps: [u32; MAX_DIM],
    coef: f64,
}

/// Per-point table of powers ξ_j^k, shared by all monomials at one point.
struct Powers {
    table: [[f64; MAX_DEGREE as usize + 1]; MAX_DIM],
}

impl Powers {
    #[inline]
    fn new(xi: &[f64], max_exp: &[u32; MAX_DIM]) -> Self {
        let mut table = [[1.0; MAX_DEGREE as usize + 1]; MAX_DIM];
        for (j, &x) in xi.iter().enumerate() {
            for k in 1..=max_exp[j] as usize {
                table[j][k] = table[j][k - 1] * x;
            }
        }
        Powers { table }
    }

    #[inline]
    fn eval(&self, terms: &[Monomial]) -> f64 {
        let mut acc = 0.0;
        for t in terms {
            acc += t.coef
                * self.table[0][t.exps[0] as usize]
                * self.table[1][t.exps[1] as usize]
                * self.table[2][t.exps[2] as usize];
        }
        acc
    }
}

/// Small dense symmetric matrix (n ≤ 3), used for Hessians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMatrix {
    pub n: usize,
    pub data: [[f64; MAX_DIM]; MAX_DIM],
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i][j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.data[i][..self.n].to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.data[i][j].is_finite()))
    }
}

/// The symbol P of the evolution equation ∂ₜu = iP(D)u.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSymbol {
    name: String,
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
    degree: u32,
    max_exp: [u32; MAX_DIM],
    mono: Vec<Monomial>,
    grad: Vec<Vec<Monomial>>,
    // upper triangle, row-major: (0,0), (0,1), ..., (1,1), ...
    hess: Vec<Vec<Monomial>>,
}

impl PolynomialSymbol {
    /// Builds a symbol from `(exponents, coefficient)` pairs.
    ///
    /// Zero coefficients are dropped. Duplicate exponent tuples, non-finite
    /// coefficients, wrong tuple lengths and unsupported sizes are rejected.
    pub fn new<I>(name: impl Into<String>, n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        if n == 0 || n > MAX_DIM {
            return invalid(format!("dimension n = {n} outside supported range 1..={MAX_DIM}"));
        }
        let mut map = BTreeMap::new();
        for (exp, coef) in terms {
            if exp.len() != n {
                return invalid(format!(
                    "exponent tuple {exp:?} has length {} but n = {n}",
                    exp.len()
                ));
            }
            if !coef.is_finite() {
                return invalid(format!("coefficient of {exp:?} is not finite"));
            }
            if map.contains_key(&exp) {
                return invalid(format!("duplicate exponent tuple {exp:?}"));
            }
            let deg: u32 = exp.iter().sum();
            if deg > MAX_DEGREE {
                return invalid(format!(
                    "term {exp:?} has degree {deg} > supported maximum {MAX_DEGREE}"
                ));
            }
            if coef != 0.0 {
                map.insert(exp, coef);
            } else {
                // still reserve the key so that duplicates are caught
                map.insert(exp, 0.0);
            }
        }
        map.retain(|_, c| *c != 0.0);
        Ok(Self::from_map(name.into(), n, map))
    }

    fn from_map(name: String, n: usize, terms: BTreeMap<Vec<u32>, f64>) -> Self {
        let degree = terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0);
        let mut max_exp = [0u32; MAX_DIM];
        let to_mono = |exp: &[u32], coef: f64| {
            let mut exps = [0u32; MAX_DIM];
            exps[..exp.len()].copy_from_slice(exp);
            Monomial { exps, coef }
        };
        let mono: Vec<Monomial> = terms.iter().map(|(e, &c)| to_mono(e, c)).collect();
        for t in &mono {
            for j in 0..MAX_DIM {
                max_exp[j] = max_exp[j].max(t.exps[j]);
            }
        }
        let diff = |src: &[Monomial], j: usize| -> Vec<Monomial> {
            src.iter()
                .filter(|t| t.exps[j] > 0)
                .map(|t| {
                    let mut d = *t;
                    d.coef *= t.exps[j] as f64;
                    d.exps[j] -= 1;
                    d
                })
                .collect()
        };
        let grad: Vec<Vec<Monomial>> = (0..n).map(|j| diff(&mono, j)).collect();
        let mut hess = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                hess.push(diff(&grad[i], j));
            }
        }
        PolynomialSymbol {
            name,
            n,
            terms,
            degree,
            max_exp,
            mono,
            grad,
            hess,
        }
    }

    /// The zero polynomial in dimension `n` (degree 0 by convention).
    pub fn zero(n: usize) -> Result<Self> {
        Self::new("zero", n, std::iter::empty())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Total degree m (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn coefficient(&self, exp: &[u32]) -> f64 {
        self.terms.get(exp).copied().unwrap_or(0.0)
    }

    fn check_dim(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.n {
            return invalid(format!(
                "point has dimension {} but symbol has n = {}",
                xi.len(),
                self.n
            ));
        }
        Ok(())
    }

    /// P(ξ).
    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        self.check_dim(xi)?;
        Ok(self.value(xi))
    }

    /// ∇P(ξ), differentiated exactly at the coefficient level.
    pub fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(xi)?;
        let mut g = [0.0; MAX_DIM];
        self.value_and_gradient(xi, &mut g);
        Ok(g[..self.n].to_vec())
    }

    /// Hessian of P at ξ; exactly symmetric.
    pub fn hessian(&self, xi: &[f64]) -> Result<SymMatrix> {
        self.check_dim(xi)?;
        Ok(self.hessian_unchecked(xi))
    }

    // Unchecked fast paths used by the integrators. `xi.len()` must be n.

    #[inline]
    pub(crate) fn value(&self, xi: &[f64]) -> f64 {
        Powers::new(xi, &self.max_exp).eval(&self.mono)
    }

    #[inline]
    pub(crate) fn value_and_gradient(&self, xi: &[f64], grad: &mut [f64; MAX_DIM]) -> f64 {
        let pw = Powers::new(xi, &self.max_exp);
        for (j, g) in self.grad.iter().enumerate() {
            grad[j] = pw.eval(g);
        }
        pw.eval(&self.mono)
    }

    pub(crate) fn hessian_unchecked(&self, xi: &[f64]) -> SymMatrix {
        let pw = Powers::new(xi, &self.max_exp);
        let mut h = SymMatrix::zeros(self.n);
        let mut k = 0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = pw.eval(&self.hess[k]);
                h.data[i][j] = v;
                h.data[j][i] = v;
                k += 1;
            }
        }
        h
    }

    /// The degree-k homogeneous part of P; possibly the zero polynomial.
    pub fn homogeneous_part(&self, k: u32) -> PolynomialSymbol {
        let terms: BTreeMap<Vec<u32>, f64> = self
            .terms
            .iter()
            .filter(|(e, _)| e.iter().sum::<u32>() == k)
            .map(|(e, &c)| (e.clone(), c))
            .collect();
        Self::from_map(format!("{}[{k}]", self.name), self.n, terms)
    }

    /// The principal part P_m.
    pub fn principal_part(&self) -> PolynomialSymbol {
        self.homogeneous_part(self.degree)
    }

    /// True when every term has total degree m.
    pub fn is_homogeneous(&self) -> bool {
        self.terms.keys().all(|e| e.iter().sum::<u32>() == self.degree)
    }

    /// True when P(ξ) = P(-ξ), i.e. every term has even total degree.
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|e| e.iter().sum::<u32>() % 2 == 0)
    }

    /// Sum of |c_α| over the terms of each total degree k = 0..=m.
    ///
    /// On the unit sphere every monomial is bounded by 1, so these norms bound
    /// |P_k(ω)| and drive the radial growth bounds used by the integrators.
    pub fn degree_norms(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.degree as usize + 1];
        for (e, c) in &self.terms {
            s[e.iter().sum::<u32>() as usize] += c.abs();
        }
        s
    }

    /// Multiplies every coefficient by `factor` (which must be finite and
    /// non-zero).
    pub fn scaled(&self, factor: f64) -> Result<PolynomialSymbol> {
        if !factor.is_finite() || factor == 0.0 {
            return invalid("scale factor must be finite and non-zero");
        }
        PolynomialSymbol::new(
            self.name.clone(),
            self.n,
            self.terms.iter().map(|(e, &c)| (e.clone(), c * factor)),
        )
    }

    /// Parses a symbol document (see [`SymbolDocument`]).
    pub fn parse(text: &str) -> Result<PolynomialSymbol> {
        let doc: SymbolDocument =
            serde_yaml::from_str(text).map_err(|e| LabError::Parse(e.to_string()))?;
        doc.into_symbol()
    }

    pub fn to_document(&self) -> SymbolDocument {
        SymbolDocument {
            n: self.n,
            name: self.name.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, &c)| TermDocument {
                    exp: e.clone(),
                    coef: c,
                })
                .collect(),
        }
    }
}

impl fmt::Display for PolynomialSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // highest degree first
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by_key(|(e, _)| std::cmp::Reverse(e.iter().sum::<u32>()));
        for (e, c) in terms {
            if !first {
                write!(f, " {} ", if *c < 0.0 { '-' } else { '+' })?;
            } else if *c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            write!(f, "{}", c.abs())?;
            for (j, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "·ξ{}", j + 1)?,
                    _ => write!(f, "·ξ{}^{}", j + 1, p)?,
                }
            }
        }
        Ok(())
    }
}

/// On-disk symbol format: `{n: 1, name: "quartic", terms: [{exp: [4], coef: 1.0}]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SymbolDocument {
    pub n: usize,
    pub name: String,
    pub terms: Vec<TermDocument>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermDocument {
    pub exp: Vec<u32>,
    pub coef: f64,
}

impl SymbolDocument {
    pub fn into_symbol(self) -> Result<PolynomialSymbol> {
        let n = self.n;
        let mut seen: BTreeMap<&[u32], usize> = BTreeMap::new();
        for (i, t) in self.terms.iter().enumerate() {
            if t.exp.len() != n {
                return Err(LabError::Parse(format!(
                    "term #{i}: exponent {:?} has length {} but n = {n}",
                    t.exp,
                    t.exp.len()
                )));
            }
            if let Some(j) = seen.insert(&t.exp, i) {
                return Err(LabError::Parse(format!(
                    "term #{i}: duplicate exponent tuple {:?} (first seen in term #{j})",
                    t.exp
                )));
            }
        }
        PolynomialSymbol::new(self.name, n, self.terms.into_iter().map(|t| (t.exp, t.coef)))
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("symbol documents always serialize")
    }
}

/// Result of sampling |P_m| on the unit sphere.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EllipticityCertificate {
    pub is_elliptic: bool,
    /// Sampled minimum of |P_m(ω)|.
    pub min_principal_on_sphere: f64,
    /// Sampled maximum of |P_m(ω)|.
    pub max_principal_on_sphere: f64,
    /// Grid covering radius times a bound on |∇P_m| over the unit ball.
    pub lipschitz_margin: f64,
    /// Effective threshold: caller tolerance plus the Lipschitz margin.
    pub declared_tolerance: f64,
    pub sample_count: usize,
    pub witness_direction: Vec<f64>,
}

impl EllipticityCertificate {
    /// A lower bound for min |P_m| on the sphere, usable by growth estimates.
    pub fn principal_lower_bound(&self) -> f64 {
        let certified = self.min_principal_on_sphere - self.lipschitz_margin;
        if certified > 0.0 {
            certified
        } else {
            0.5 * self.min_principal_on_sphere
        }
    }
}

/// Certifies that the principal part of `p` has no zero on the unit sphere.
pub fn certify_elliptic(
    p: &PolynomialSymbol,
    sphere_samples: usize,
    tol: f64,
) -> Result<EllipticityCertificate> {
    let n = p.dim();
    if sphere_samples < 100 * n {
        return invalid(format!(
            "sphere_samples = {sphere_samples} must be at least 100·n = {}",
            100 * n
        ));
    }
    if !(tol > 0.0) {
        return invalid("ellipticity tolerance must be positive");
    }
    let pm = p.principal_part();
    let directions = sphere::net(n, sphere_samples);
    if p.is_zero() || p.degree() == 0 {
        return Ok(EllipticityCertificate {
            is_elliptic: false,
            min_principal_on_sphere: 0.0,
            max_principal_on_sphere: 0.0,
            lipschitz_margin: 0.0,
            declared_tolerance: tol,
            sample_count: directions.len(),
            witness_direction: directions[0].clone(),
        });
    }
    let mut min = f64::INFINITY;
    let mut max: f64 = 0.0;
    let mut witness = directions[0].clone();
    for w in &directions {
        let v = pm.value(w).abs();
        if v < min {
            min = v;
            witness = w.clone();
        }
        max = max.max(v);
    }
    let lip: f64 = pm
        .terms()
        .map(|(e, c)| c.abs() * e.iter().sum::<u32>() as f64)
        .sum();
    let margin = sphere::covering_radius(n, directions.len()) * lip;
    let declared = tol + margin;
    Ok(EllipticityCertificate {
        is_elliptic: min > declared,
        min_principal_on_sphere: min,
        max_principal_on_sphere: max,
        lipschitz_margin: margin,
        declared_tolerance: declared,
        sample_count: directions.len(),
        witness_direction: witness,
    })
}

/// Default number of sphere samples for a dimension.
pub fn default_sphere_samples(n: usize) -> usize {
    match n {
        1 => 100,
        2 => 4096,
        _ => 16384,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(n: usize, terms: &[(&[u32], f64)]) -> PolynomialSymbol {
        PolynomialSymbol::new("t", n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(sym(1, &[(&[4], 1.0)]).eval(&[2.0]).unwrap(), 16.0);
        assert_eq!(sym(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)]).eval(&[0.0, 0.0]).unwrap(), 0.0);
        let p = sym(2, &[(&[4, 0], 1.0), (&[0, 4], 1.0), (&[2, 2], 1.0)]);
        assert_eq!(p.eval(&[1.0, 1.0]).unwrap(), 3.0);
    }

    #[test]
    fn gradient_and_hessian_examples() {
        let q = sym(1, &[(&[4], 1.0)]);
        assert_eq!(q.gradient(&[2.0]).unwrap(), vec![32.0]);
        assert_eq!(q.hessian(&[1.0]).unwrap().rows(), vec![vec![12.0]]);
        let f = sym(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)]);
        assert_eq!(f.gradient(&[3.0, -1.0]).unwrap(), vec![6.0, -2.0]);
        let h = sym(2, &[(&[4, 0], 1.0), (&[0, 4], 1.0)]).hessian(&[1.0, 2.0]).unwrap();
        assert_eq!(h.rows(), vec![vec![12.0, 0.0], vec![0.0, 48.0]]);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let q = sym(1, &[(&[4], 1.0)]);
        assert!(matches!(q.eval(&[1.0, 2.0]), Err(LabError::InvalidInput(_))));
        assert!(matches!(q.gradient(&[]), Err(LabError::InvalidInput(_))));
        assert!(matches!(q.hessian(&[1.0, 1.0]), Err(LabError::InvalidInput(_))));
    }

    #[test]
    fn construction_rejects_bad_terms() {
        let dup = PolynomialSymbol::new("d", 1, vec![(vec![2], 1.0), (vec![2], 3.0)]);
        assert!(dup.is_err());
        let dup_zero = PolynomialSymbol::new("d", 1, vec![(vec![2], 0.0), (vec![2], 3.0)]);
        assert!(dup_zero.is_err());
        assert!(PolynomialSymbol::new("nan", 1, vec![(vec![2], f64::NAN)]).is_err());
        assert!(PolynomialSymbol::new("len", 2, vec![(vec![2], 1.0)]).is_err());
        assert!(PolynomialSymbol::new("big", 4, vec![(vec![2, 0, 0, 0], 1.0)]).is_err());
        assert!(PolynomialSymbol::new("deg", 1, vec![(vec![11], 1.0)]).is_err());
        let z = PolynomialSymbol::new("z", 1, vec![(vec![3], 0.0)]).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);
    }

    #[test]
    fn homogeneous_parts() {
        let p = sym(1, &[(&[4], 1.0), (&[2], 1.0)]);
        assert_eq!(p.homogeneous_part(4).terms().count(), 1);
        assert_eq!(p.homogeneous_part(4).coefficient(&[4]), 1.0);
        let z = p.homogeneous_part(3);
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);
        assert_eq!(z.eval(&[7.0]).unwrap(), 0.0);
        let q = sym(2, &[(&[4, 0], 1.0), (&[0, 4], 1.0), (&[2, 0], 1.0)]);
        let q4 = q.homogeneous_part(4);
        assert_eq!(q4.terms().count(), 2);
        assert_eq!(q4.coefficient(&[2, 0]), 0.0);
    }

    #[test]
    fn ellipticity_examples() {
        let c = certify_elliptic(&sym(1, &[(&[4], 1.0)]), 100, 1e-9).unwrap();
        assert!(c.is_elliptic);
        assert_eq!(c.min_principal_on_sphere, 1.0);

        let c = certify_elliptic(&sym(2, &[(&[4, 0], 1.0), (&[0, 4], -1.0)]), 4096, 1e-9).unwrap();
        assert!(!c.is_elliptic);
        assert!(c.min_principal_on_sphere < 1e-3);

        // brute-force minimum of ω1⁴ + ω2⁴ on the circle
        let brute = (0..100_000)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 100_000.0;
                th.cos().powi(4) + th.sin().powi(4)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((brute - 0.5).abs() < 1e-9);
        let c = certify_elliptic(&sym(2, &[(&[4, 0], 1.0), (&[0, 4], 1.0)]), 4096, 1e-9).unwrap();
        assert!(c.is_elliptic);
        assert!((c.min_principal_on_sphere - brute).abs() < 1e-6);
        let w = &c.witness_direction;
        assert!((w[0].abs() - w[1].abs()).abs() < 1e-2);
        assert!((crate::sphere::norm(w) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_principal_part_is_not_elliptic() {
        let z = PolynomialSymbol::zero(2).unwrap();
        let c = certify_elliptic(&z, 400, 1e-9).unwrap();
        assert!(!c.is_elliptic);
        assert_eq!(c.min_principal_on_sphere, 0.0);
    }

    #[test]
    fn certify_rejects_bad_arguments() {
        let q = sym(2, &[(&[4, 0], 1.0), (&[0, 4], 1.0)]);
        assert!(certify_elliptic(&q, 150, 1e-9).is_err());
        assert!(certify_elliptic(&q, 400, 0.0).is_err());
    }

    #[test]
    fn parse_document() {
        let p = PolynomialSymbol::parse("{n: 1, name: \"quartic\", terms: [{exp: [4], coef: 1.0}]}")
            .unwrap();
        assert_eq!(p.name(), "quartic");
        assert_eq!(p.degree(), 4);
        let back = PolynomialSymbol::parse(&p.to_document().to_yaml()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn parse_rejects_duplicates_and_reports_lines() {
        let dup = "n: 1\nname: d\nterms:\n  - {exp: [2], coef: 1.0}\n  - {exp: [2], coef: 2.0}\n";
        match PolynomialSymbol::parse(dup) {
            Err(LabError::Parse(msg)) => assert!(msg.contains("duplicate"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
        let broken = "n: 1\nname: q\nterms:\n  - {exp: [4], coef: oops}\n";
        match PolynomialSymbol::parse(broken) {
            Err(LabError::Parse(msg)) => assert!(msg.contains("line 4"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn display_is_readable() {
        let p = sym(2, &[(&[4, 0], 1.0), (&[0, 2], -2.0)]);
        assert_eq!(p.to_string(), "1·ξ1^4 - 2·ξ2^2");
    }
}
