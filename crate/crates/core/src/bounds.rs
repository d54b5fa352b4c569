//! Radial growth bounds for P and ∇P on spheres |ξ| = ρ, used to size
//! quadrature panels and to locate the region where stationary points can
//! occur.

use crate::error::{invalid, Result};
use crate::symbol::{certify_elliptic, default_sphere_samples, EllipticityCertificate, PolynomialSymbol};

#[derive(Clone, Debug)]
pub struct GrowthBounds {
    m: u32,
    /// S_k: sum of |c_α| over |α| = k.
    norms: Vec<f64>,
    /// Lower bound for |P_m| on the unit sphere.
    principal_lower: f64,
}

impl GrowthBounds {
    pub fn new(p: &PolynomialSymbol, cert: &EllipticityCertificate) -> Result<Self> {
        if !cert.is_elliptic {
            return invalid("growth bounds need an elliptic symbol");
        }
        Ok(GrowthBounds {
            m: p.degree(),
            norms: p.degree_norms(),
            principal_lower: cert.principal_lower_bound(),
        })
    }

    /// Certifies ellipticity with default sampling and builds the bounds.
    pub fn for_symbol(p: &PolynomialSymbol) -> Result<(Self, EllipticityCertificate)> {
        if p.is_zero() {
            return invalid("the zero polynomial is not a symbol");
        }
        if p.degree() < 2 {
            return invalid("symbols of degree below 2 are not dispersive");
        }
        let cert = certify_elliptic(p, default_sphere_samples(p.dim()), 1e-9)?;
        if !cert.is_elliptic {
            return invalid(format!(
                "symbol '{}' is not elliptic (min |P_m| on the sphere = {:e})",
                p.name(),
                cert.min_principal_on_sphere
            ));
        }
        Ok((Self::new(p, &cert)?, cert))
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    /// Upper bound for |∇P| on |ξ| = ρ: Σ_k k S_k ρ^{k−1}.
    pub fn gradient_upper(&self, rho: f64) -> f64 {
        let mut acc = 0.0;
        for (k, s) in self.norms.iter().enumerate().skip(1).rev() {
            acc = acc * rho + k as f64 * s;
        }
        acc
    }

    /// Lower bound for |∇P| on |ξ| = ρ:
    /// m·min|P_m|·ρ^{m−1} − Σ_{k<m} k S_k ρ^{k−1}.
    pub fn gradient_lower(&self, rho: f64) -> f64 {
        let m = self.m as usize;
        let mut lower = 0.0;
        for k in (1..m).rev() {
            lower = lower * rho + k as f64 * self.norms[k];
        }
        m as f64 * self.principal_lower * rho.powi(m as i32 - 1) - lower
    }

    /// Upper bound for |P(ξ) − P(0)| on |ξ| = ρ.
    pub fn value_upper(&self, rho: f64) -> f64 {
        let mut acc = 0.0;
        for s in self.norms.iter().skip(1).rev() {
            acc = acc * rho + s;
        }
        acc * rho
    }

    /// Smallest ρ ≥ 0 with gradient_lower(ρ) ≥ c. The map ρ ↦ (g(ρ) − c)/ρ^{m−1}
    /// is increasing, so the crossing is unique.
    pub fn gradient_lower_root(&self, c: f64) -> f64 {
        if self.gradient_lower(0.0) >= c {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.gradient_lower(hi) < c {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.gradient_lower(mid) >= c {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    }

    /// Radius beyond which no ξ can satisfy |∇P(ξ) + x/t| < |x/t|, i.e.
    /// the root of |t|·g(ρ) = 2|x|. Every stationary point lies inside it.
    pub fn stationary_radius(&self, t: f64, x_norm: f64) -> f64 {
        self.gradient_lower_root(2.0 * x_norm / t.abs())
    }

    /// The ρ at which |t|·Σ_{k≥1} S_k ρ^k = 1: the scale where the phase tP
    /// first varies by O(1).
    pub fn phase_scale(&self, t: f64) -> f64 {
        let target = 1.0 / t.abs();
        let mut hi = 1.0;
        while self.value_upper(hi) < target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.value_upper(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(n: usize, terms: &[(&[u32], f64)]) -> PolynomialSymbol {
        PolynomialSymbol::new("t", n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn bounds_bracket_the_gradient() {
        let p = sym(2, &[(&[4, 0], 1.0), (&[2, 2], 2.0), (&[0, 4], 1.5), (&[2, 0], -3.0), (&[0, 1], 0.7)]);
        let (b, _) = GrowthBounds::for_symbol(&p).unwrap();
        for &rho in &[0.1, 0.5, 1.0, 2.0, 7.0, 30.0] {
            for k in 0..360 {
                let th = k as f64 * std::f64::consts::PI / 180.0;
                let xi = [rho * th.cos(), rho * th.sin()];
                let g = crate::sphere::norm(&p.gradient(&xi).unwrap());
                assert!(g <= b.gradient_upper(rho) * (1.0 + 1e-12));
                assert!(g >= b.gradient_lower(rho) - 1e-9 * g.max(1.0), "{rho} {g} {}", b.gradient_lower(rho));
                assert!((p.eval(&xi).unwrap() - p.eval(&[0.0, 0.0]).unwrap()).abs() <= b.value_upper(rho) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn quartic_roots() {
        let (b, _) = GrowthBounds::for_symbol(&sym(1, &[(&[4], 1.0)])).unwrap();
        assert!((b.gradient_upper(2.0) - 32.0).abs() < 1e-12);
        assert!((b.gradient_lower(2.0) - 32.0).abs() < 1e-12);
        // 4ρ³ = 2·4 → ρ = 2^{1/3}
        assert!((b.stationary_radius(1.0, 4.0) - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((b.phase_scale(16.0) - 0.5).abs() < 1e-12);
        assert_eq!(b.stationary_radius(1.0, 0.0), 0.0);
    }

    #[test]
    fn rejects_non_elliptic() {
        assert!(GrowthBounds::for_symbol(&sym(2, &[(&[4, 0], 1.0), (&[0, 4], -1.0)])).is_err());
        assert!(GrowthBounds::for_symbol(&sym(1, &[(&[1], 1.0)])).is_err());
    }
}
