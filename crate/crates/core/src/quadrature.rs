//! Adaptive quadrature for complex-valued integrands: Gauss–Kronrod 21-point
//! panels with global bisection, wavelength-sized initial panels, and the
//! doubling trapezoid rule for periodic angular integrals.

use std::cell::Cell;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

/// Kronrod abscissae on [0, 1]; the odd entries are the embedded Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

/// 10-point Gauss weights for XGK[1], XGK[3], …, XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

pub const GK_POINTS: u64 = 21;

/// Shared evaluation counter with a hard limit.
#[derive(Debug)]
pub struct Budget {
    used: Cell<u64>,
    limit: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { used: Cell::new(0), limit }
    }

    pub fn used(&self) -> u64 {
        self.used.get()
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.used.get())
    }

    pub fn charge(&self, evals: u64) {
        self.used.set(self.used.get() + evals);
    }

    pub fn can_afford(&self, evals: u64) -> bool {
        self.used.get() + evals <= self.limit
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
    pub panels: usize,
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
        converged: true,
        panels: 0,
    };
}

/// One 21-point Gauss–Kronrod panel with the QUADPACK error heuristic.
pub fn gk21<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv = [Complex64::new(0.0, 0.0); 21];
    fv[10] = f(centre);
    for j in 0..10 {
        let dx = half * XGK[j];
        fv[j] = f(centre - dx);
        fv[20 - j] = f(centre + dx);
    }
    let mut kron = fv[10] * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut abs_sum = fv[10].norm() * WGK[10];
    for j in 0..10 {
        let pair = fv[j] + fv[20 - j];
        kron += pair * WGK[j];
        abs_sum += (fv[j].norm() + fv[20 - j].norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut asc = WGK[10] * (fv[10] - mean).norm();
    for j in 0..10 {
        asc += WGK[j] * ((fv[j] - mean).norm() + (fv[20 - j] - mean).norm());
    }
    let value = kron * half;
    let abs_val = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut err = ((kron - gauss) * half).norm();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    err = err.max(50.0 * f64::EPSILON * abs_val);
    (value, err)
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Key(u64, usize);

fn key(err: f64, idx: usize) -> Key {
    let e = if err.is_nan() { f64::INFINITY } else { err.max(0.0) };
    Key(e.to_bits(), idx)
}

/// Globally adaptive integration over the panels delimited by `edges`.
///
/// The panel with the largest error estimate is bisected until the summed
/// error drops below `tol` or the budget runs out. The result is summed in
/// panel order so that it does not depend on the refinement history.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    edges: &[f64],
    tol: f64,
    budget: &Budget,
) -> QuadResult {
    if edges.len() < 2 {
        return QuadResult::ZERO;
    }
    let initial = (edges.len() as u64 - 1) * GK_POINTS;
    if !budget.can_afford(initial) {
        return QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: f64::INFINITY,
            converged: false,
            panels: 0,
        };
    }
    let mut panels: Vec<Panel> = Vec::with_capacity(edges.len() - 1);
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (v, e) = gk21(f, w[0], w[1]);
        budget.charge(GK_POINTS);
        total_err += e;
        heap.push(key(e, panels.len()));
        panels.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    let width = (edges[edges.len() - 1] - edges[0]).abs();
    let mut converged = true;
    while total_err > tol {
        let Some(Key(_, idx)) = heap.pop() else {
            converged = false;
            break;
        };
        let p = panels[idx];
        let mid = 0.5 * (p.a + p.b);
        if (p.b - p.a).abs() <= 1e-13 * width || mid == p.a || mid == p.b {
            // cannot refine further; keep the panel but stop pushing it
            continue;
        }
        if !budget.can_afford(2 * GK_POINTS) {
            converged = false;
            break;
        }
        let (v1, e1) = gk21(f, p.a, mid);
        let (v2, e2) = gk21(f, mid, p.b);
        budget.charge(2 * GK_POINTS);
        total_err += e1 + e2 - p.error;
        panels[idx] = Panel { a: p.a, b: mid, value: v1, error: e1 };
        heap.push(key(e1, idx));
        heap.push(key(e2, panels.len()));
        panels.push(Panel { a: mid, b: p.b, value: v2, error: e2 });
    }
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for p in &panels {
        value += p.value;
        error += p.error;
    }
    QuadResult {
        value,
        error,
        converged: converged && error <= tol,
        panels: panels.len(),
    }
}

/// Panel edges on [a, b] such that each panel spans at most `wavelengths`
/// local oscillation periods, where `rate` is a non-decreasing upper bound
/// on the phase derivative. `max_width` caps panels where the phase is slow.
pub fn oscillation_edges(a: f64, b: f64, rate: impl Fn(f64) -> f64, wavelengths: f64, max_width: f64) -> Vec<f64> {
    let mut edges = vec![a];
    if !(b > a) {
        return edges;
    }
    let span = wavelengths * 2.0 * PI;
    let min_width = (b - a) * 1e-9;
    let mut left = a;
    while left < b {
        let mut h = max_width.min(b - left);
        while h > min_width && h * rate((left + h).min(b)) > span {
            h *= 0.7;
        }
        let h = h.max(min_width);
        let right = if b - (left + h) < 0.25 * h { b } else { left + h };
        edges.push(right);
        left = right;
    }
    edges
}

/// Number of panels [`oscillation_edges`] would produce, without allocating.
pub fn count_edges(a: f64, b: f64, rate: impl Fn(f64) -> f64, wavelengths: f64, max_width: f64) -> u64 {
    if !(b > a) {
        return 0;
    }
    let span = wavelengths * 2.0 * PI;
    let min_width = (b - a) * 1e-9;
    let mut left = a;
    let mut count = 0;
    while left < b {
        let mut h = max_width.min(b - left);
        while h > min_width && h * rate((left + h).min(b)) > span {
            h *= 0.7;
        }
        let h = h.max(min_width);
        left = if b - (left + h) < 0.25 * h { b } else { left + h };
        count += 1;
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicResult {
    pub value: Complex64,
    pub error: f64,
    pub points: usize,
    pub converged: bool,
}

/// Trapezoid rule for a 2π-periodic integrand over [0, 2π), starting from
/// `start` points and doubling until successive estimates differ by less
/// than `tol` (or `max_points` is reached).
pub fn periodic_trapezoid<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    start: usize,
    tol: f64,
    max_points: usize,
) -> PeriodicResult {
    let mut n = start.max(4);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        sum += f(2.0 * PI * k as f64 / n as f64);
    }
    let mut estimate = sum * (2.0 * PI / n as f64);
    loop {
        let mut odd = Complex64::new(0.0, 0.0);
        for k in 0..n {
            odd += f(PI * (2 * k + 1) as f64 / n as f64);
        }
        sum += odd;
        n *= 2;
        let next = sum * (2.0 * PI / n as f64);
        let diff = (next - estimate).norm();
        estimate = next;
        if diff <= tol {
            return PeriodicResult { value: estimate, error: diff, points: n, converged: true };
        }
        if n >= max_points {
            return PeriodicResult { value: estimate, error: diff, points: n, converged: false };
        }
    }
}
