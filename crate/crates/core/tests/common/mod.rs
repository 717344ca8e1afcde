//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use finsler_core::nonlinearity::Nonlinearity;
use finsler_core::ode1d::LargeSolution1D;

/// `Ψ(t)` for `f = t^q`, written out from `F = t^{q+1}/(q+1)`.
pub fn psi_power(p: f64, q: f64, t: f64) -> f64 {
    ((p - 1.0) * (q + 1.0) / p).powf(1.0 / p) * p / (q + 1.0 - p) * t.powf(-(q + 1.0 - p) / p)
}

/// `f = √t` on `[0, 1]` and `t³` beyond: Osgood fails near zero while the
/// Keller–Osserman integral converges.
pub fn slow_start_table() -> Nonlinearity {
    let mut pts = vec![(0.0, 0.0)];
    for i in 1..=600 {
        let t = 10f64.powf(-6.0 + 10.0 * i as f64 / 600.0);
        pts.push((t, if t <= 1.0 { t.sqrt() } else { t.powi(3) }));
    }
    Nonlinearity::tabulated(&pts, 2.0).unwrap()
}

/// Worst relative residual of `γ^p (p-1)|u'|^{p-2} u'' = f(u)` at `count`
/// cell midpoints, with derivatives from five-point stencils.
pub fn ode_residual(sol: &LargeSolution1D, count: usize) -> f64 {
    let (a, b) = (sol.a(), sol.b());
    let nl = sol.problem().nonlinearity();
    let p = nl.p();
    let gp = sol.gamma().powf(p);
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let x = a + (b - a) * (i as f64 + 0.5) / count as f64;
        let h = sol.distance(x).min((x - sol.c_m).abs()) / 20.0;
        let u = |k: f64| sol.eval(x + k * h).unwrap();
        let (m2, m1, c, p1, p2) = (u(-2.0), u(-1.0), u(0.0), u(1.0), u(2.0));
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
        let lhs = gp * (p - 1.0) * d1.abs().powf(p - 2.0) * d2;
        let rhs = nl.f(c);
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    worst
}
