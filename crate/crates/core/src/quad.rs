//! Quadrature rules: Gauss–Legendre panels and globally adaptive
//! Gauss–Kronrod (7/15) integration of complex scalar integrands.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// A Gauss–Legendre rule mapped onto consecutive panels of an interval.
#[derive(Debug, Clone)]
pub struct PanelRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PanelRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        PanelRule { nodes, weights }
    }

    /// Nodes and weights for `[a, b]` split into `panels` equal panels.
    pub fn points(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + half * x, half * w));
            }
        }
        out
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).norm())
}

/// The G7/K15 nodes on `[a, b]` as `(x, kronrod weight, gauss weight)`,
/// the Gauss weight being zero at Kronrod-only nodes.
pub(crate) fn gk15_points(a: f64, b: f64) -> Vec<(f64, f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = Vec::with_capacity(15);
    out.push((c, WGK[7] * h, WG[3] * h));
    for j in 0..7 {
        let dx = h * XGK[j];
        let wg = if j % 2 == 1 { WG[j / 2] * h } else { 0.0 };
        out.push((c - dx, WGK[j] * h, wg));
        out.push((c + dx, WGK[j] * h, wg));
    }
    out
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
}

/// Globally adaptive G7/K15 integration over `[a, b]` with mandatory
/// breakpoints. Bisects the worst segment until the summed error estimate
/// drops below `max(abs_tol, rel_tol * |I|)` or `max_segments` is reached.
pub fn adaptive<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Quadrature {
    let mut cuts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(b);

    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = gk15(&mut f, w[0], w[1]);
        total += value;
        err += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let mut converged = false;
    while heap.len() < max_segments {
        if err <= abs_tol.max(rel_tol * total.norm()) {
            converged = true;
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    if !converged {
        // Recompute from the segments to shed accumulated rounding.
        total = heap.iter().map(|s| s.value).sum();
        err = heap.iter().map(|s| s.error).sum();
        converged = err <= abs_tol.max(rel_tol * total.norm());
    }
    Quadrature {
        value: total,
        error: err,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk15_points_match_the_rule() {
        let pts = gk15_points(-1.0, 3.0);
        assert_eq!(pts.len(), 15);
        assert_eq!(pts.iter().filter(|p| p.2 != 0.0).count(), 7);
        let sum_k: f64 = pts.iter().map(|p| p.1).sum();
        let sum_g: f64 = pts.iter().map(|p| p.2).sum();
        assert!((sum_k - 4.0).abs() < 1e-14 && (sum_g - 4.0).abs() < 1e-14);
        // Kronrod exact to degree 22, Gauss to degree 13
        let f = |x: f64| x.powi(13) - 2.0 * x.powi(6);
        let exact = (3f64.powi(14) - 1.0) / 14.0 - 2.0 * (3f64.powi(7) + 1.0) / 7.0;
        let k: f64 = pts.iter().map(|p| p.1 * f(p.0)).sum();
        let g: f64 = pts.iter().map(|p| p.2 * f(p.0)).sum();
        assert!((k - exact).abs() < 1e-9 * exact.abs());
        assert!((g - exact).abs() < 1e-9 * exact.abs());
        let (q, _) = gk15(&mut |x: f64| Complex64::new(x.cos(), 0.0), -1.0, 3.0);
        let direct: f64 = pts.iter().map(|p| p.1 * p.0.cos()).sum();
        assert!((q.re - direct).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 8, 16] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg} {got} {exact}");
            }
        }
    }

    #[test]
    fn kronrod_constants_are_exact_to_degree_22() {
        for deg in 0..=22 {
            let (v, _) = gk15(&mut |x: f64| Complex64::new(x.powi(deg), 0.0), -1.0, 1.0);
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert!((v.re - exact).abs() < 1e-14, "deg {deg}");
        }
        // Embedded Gauss rule is exact to degree 13.
        let mut g = Complex64::new(0.0, 0.0);
        let f = |x: f64| x.powi(12);
        g += WG[3] * f(0.0);
        for j in (1..7).step_by(2) {
            g += WG[j / 2] * (f(XGK[j]) + f(-XGK[j]));
        }
        assert!((g.re - 2.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        // ∫_{-1}^{1} eps/(x²+eps²) dx = 2 atan(1/eps)
        let eps = 1e-4;
        let q = adaptive(
            |x| Complex64::new(eps / (x * x + eps * eps), 0.0),
            -1.0,
            1.0,
            &[0.0],
            1e-12,
            1e-12,
            2000,
        );
        assert!(q.converged);
        assert!((q.value.re - 2.0 * (1.0 / eps).atan()).abs() < 1e-9);
    }

    #[test]
    fn panel_rule_covers_interval() {
        let rule = PanelRule::new(8);
        let pts = rule.points(0.0, 3.0, 7);
        let s: f64 = pts.iter().map(|(x, w)| w * x.exp()).sum();
        assert!((s - (3f64.exp() - 1.0)).abs() < 1e-12);
    }
}
