//! Adaptive Gauss-Kronrod quadrature plus the two endpoint transforms used
//! throughout the crate: algebraic singularities at a finite endpoint and
//! power-law decay towards infinity.
//!
//! Both transforms map the integrand onto `(0, 1]` with a substitution
//! `v^m` chosen so that a pure power-law integrand becomes constant in `v`.
//! The exponent is usually estimated numerically by the caller.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
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

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Globally adaptive bisection driven by the Kronrod-Gauss error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_err: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let (value, err) = kronrod15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    let mut total = value;
    let mut total_err = err;
    let mut evaluations = 15;
    let mut intervals = 1;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol || !total.is_finite() {
            break;
        }
        if intervals >= opts.max_intervals {
            return QuadResult {
                value: total,
                abs_err: total_err,
                evaluations,
                converged: false,
            };
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            heap.push(worst);
            return QuadResult {
                value: total,
                abs_err: total_err,
                evaluations,
                converged: false,
            };
        }
        let (v1, e1) = kronrod15(&f, worst.a, mid);
        let (v2, e2) = kronrod15(&f, mid, worst.b);
        evaluations += 30;
        intervals += 1;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
        // resum occasionally to limit drift from the incremental updates
        if intervals % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
    QuadResult {
        value: total,
        abs_err: total_err,
        evaluations,
        converged: total.is_finite(),
    }
}

/// `∫_a^b g(s) ds` where `g(s) ~ C (s - a)^{-e}` as `s -> a+`, `e < 1`.
///
/// Uses `s = a + (b - a) v^m` with `m = 1 / (1 - e)`, which makes an exact
/// power law constant in `v`.
pub fn integrate_left_singular<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    b: f64,
    exponent: f64,
    opts: QuadOptions,
) -> QuadResult {
    let e = exponent.clamp(-4.0, 0.98);
    let m = 1.0 / (1.0 - e);
    let width = b - a;
    integrate(
        |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            let vm1 = v.powf(m - 1.0);
            let s = a + width * vm1 * v;
            let val = g(s) * width * m * vm1;
            if val.is_finite() {
                val
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        opts,
    )
}

/// `∫_r^∞ g(s) ds` where `g(s) ~ C s^{-decay}` as `s -> ∞`, `decay > 1`.
///
/// Substitutes `s = r v^{-1/(decay-1)}`; the image of an exact power law is
/// constant on `(0, 1]`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    g: F,
    r: f64,
    decay: f64,
    opts: QuadOptions,
) -> QuadResult {
    debug_assert!(r > 0.0);
    let k = 1.0 / (decay - 1.0);
    integrate(
        |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            let s = r * v.powf(-k);
            if !s.is_finite() {
                return 0.0;
            }
            let val = g(s) * s * k / v;
            if val.is_finite() {
                val
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        opts,
    )
}

/// Local power-law exponent `d ln g / d ln s` estimated from two samples.
pub fn log_slope<F: Fn(f64) -> f64>(g: F, s: f64, factor: f64) -> f64 {
    let g1 = g(s);
    let g2 = g(s * factor);
    (g2 / g1).ln() / factor.ln()
}
