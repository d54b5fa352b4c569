//! Quasi-uniform point sets on the unit sphere S^{n-1} for n = 1, 2, 3.

use std::f64::consts::PI;

/// Golden angle used by the Fibonacci lattice.
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// `count` equally spaced directions on the unit circle, starting at (1, 0).
pub fn circle(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / count as f64;
            vec![theta.cos(), theta.sin()]
        })
        .collect()
}

/// Fibonacci lattice with `count` points on S^2.
pub fn fibonacci(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = GOLDEN_ANGLE * k as f64;
            vec![rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

/// A quasi-uniform net of S^{n-1}. For n = 1 the sphere is {+1, -1} and
/// `count` is ignored.
pub fn net(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => circle(count),
        _ => fibonacci(count),
    }
}

/// Upper estimate of the geodesic covering radius of [`net`].
pub fn covering_radius(n: usize, count: usize) -> f64 {
    match n {
        1 => 0.0,
        2 => PI / count as f64,
        // The Fibonacci lattice covers within ~0.6·sqrt(4π/N); 2·sqrt(π/N)
        // leaves a comfortable factor on top of that.
        _ => 2.0 * (PI / count as f64).sqrt(),
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nets_are_unit() {
        for n in 1..=3 {
            for v in net(n, 500) {
                assert!((norm(&v) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fibonacci_covering_estimate_holds() {
        let pts = fibonacci(400);
        let probe = fibonacci(5000);
        let bound = covering_radius(3, 400);
        for p in &probe {
            let best = pts.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min);
            // chord <= arc
            assert!(best <= bound, "{best} > {bound}");
        }
    }
}
