//! One-dimensional large solutions of `γ^p (|u'|^{p-2} u')' = f(u)` on `(a, b)`.
//!
//! The solution is represented implicitly: with `c = ((p-1)/p)^{1/p}`,
//! `γ c ∫_{v0}^{u(x)} (F(s) - F(v0))^{-1/p} ds = |x - c_m|`. Profiles are
//! evaluated on demand by bisection on that monotone map.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{ko_constant, KOProfile, Nonlinearity};
use crate::quad::{integrate_left_singular, integrate_to_infinity, QuadOptions};

const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct Interval1DProblem {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    nl: Nonlinearity,
    profile: Option<KOProfile>,
}

impl Interval1DProblem {
    pub fn new(a: f64, b: f64, gamma: f64, nl: Nonlinearity) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "interval ({a}, {b}) is empty"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        let profile = match nl.profile() {
            Ok(p) => Some(p),
            Err(Error::DivergentIntegral) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            a,
            b,
            gamma,
            nl,
            profile,
        })
    }

    pub fn p(&self) -> f64 {
        self.nl.p()
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn profile(&self) -> Result<&KOProfile> {
        self.profile.as_ref().ok_or(Error::DivergentIntegral)
    }

    fn prefactor(&self) -> f64 {
        self.gamma * ko_constant(self.p())
    }

    fn tail_decay(&self) -> f64 {
        (self.nl.exponent_at_infinity() + 1.0) / self.p()
    }

    // exponent of the integrand singularity at s = 0 for base value v0
    fn head_exponent(&self, v0: f64) -> f64 {
        if v0 > 0.0 {
            1.0 / self.p()
        } else {
            (self.nl.exponent_at_zero() + 1.0) / self.p()
        }
    }

    fn integrand(&self, v0: f64) -> impl Fn(f64) -> f64 + '_ {
        let p = self.p();
        move |s: f64| self.nl.increment(v0, s).powf(-1.0 / p)
    }

    /// `γ c ∫_0^σ (F(v0+s) - F(v0))^{-1/p} ds`: distance from the minimum point.
    fn head(&self, v0: f64, sigma: f64) -> f64 {
        let r = integrate_left_singular(
            self.integrand(v0),
            0.0,
            sigma,
            self.head_exponent(v0),
            QuadOptions::rel(QUAD_TOL),
        );
        self.prefactor() * r.value
    }

    /// `γ c ∫_σ^∞ (F(v0+s) - F(v0))^{-1/p} ds`: distance to the blow-up end.
    fn tail(&self, v0: f64, sigma: f64) -> f64 {
        let r = integrate_to_infinity(
            self.integrand(v0),
            sigma,
            self.tail_decay(),
            QuadOptions::rel(QUAD_TOL),
        );
        self.prefactor() * r.value
    }
}

/// `ℓ(t) = γ c ∫_0^∞ (F(s+t) - F(t))^{-1/p} ds`, the half-width of the
/// interval on which the solution with minimum value `t` exists.
pub fn ell_of_t(prob: &Interval1DProblem, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonpositiveInput(t));
    }
    prob.profile()?;
    Ok(prob.head(t, t) + prob.tail(t, t))
}

/// Minimum value `v0` with `ℓ(v0) = delta`.
pub fn solve_v0(prob: &Interval1DProblem, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::NonpositiveInput(delta));
    }
    let profile = prob.profile()?;
    if let Some(l) = profile.l(prob.gamma) {
        if delta > l {
            return Err(Error::NoRoot { delta, limit: l });
        }
    }
    let ell = |t: f64| ell_of_t(prob, t);
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    // ℓ is decreasing: need ℓ(lo) >= delta >= ℓ(hi)
    let mut steps = 0;
    while ell(lo)? < delta {
        lo *= 0.5;
        steps += 1;
        if steps > 60 {
            return Err(Error::BracketFail(format!(
                "l(t) < {delta} for all t >= 2^-60"
            )));
        }
    }
    steps = 0;
    while ell(hi)? > delta {
        hi *= 2.0;
        steps += 1;
        if steps > 60 {
            return Err(Error::BracketFail(format!(
                "l(t) > {delta} for all t <= 2^60"
            )));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let v = ell(mid)?;
        if (v - delta).abs() <= 1e-12 * delta || hi / lo - 1.0 < 1e-15 {
            return Ok(mid);
        }
        if v > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Implicitly represented large solution on `(a, b)`.
#[derive(Debug)]
pub struct LargeSolution1D {
    prob: Interval1DProblem,
    pub c_m: f64,
    pub v0: f64,
    /// Central interval where `u ≡ 0` (only under the Osgood failure).
    pub flat_zone: Option<(f64, f64)>,
    cache: RwLock<HashMap<u64, f64>>,
}

impl Clone for LargeSolution1D {
    fn clone(&self) -> Self {
        let cache = self.cache.read().map(|c| c.clone()).unwrap_or_default();
        Self {
            prob: self.prob.clone(),
            c_m: self.c_m,
            v0: self.v0,
            flat_zone: self.flat_zone,
            cache: RwLock::new(cache),
        }
    }
}

impl LargeSolution1D {
    /// Profile with prescribed minimum point and value (no consistency check
    /// against the interval length).
    pub fn from_parts(prob: Interval1DProblem, c_m: f64, v0: f64) -> Self {
        Self {
            prob,
            c_m,
            v0,
            flat_zone: None,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn problem(&self) -> &Interval1DProblem {
        &self.prob
    }

    pub fn a(&self) -> f64 {
        self.prob.a
    }

    pub fn b(&self) -> f64 {
        self.prob.b
    }

    pub fn gamma(&self) -> f64 {
        self.prob.gamma
    }

    /// Distance to the nearer endpoint.
    pub fn distance(&self, x: f64) -> f64 {
        (x - self.prob.a).min(self.prob.b - x)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > self.prob.a && x < self.prob.b) {
            return Err(Error::OutsideDomain);
        }
        let key = x.to_bits();
        if let Some(v) = self.cache.read().ok().and_then(|c| c.get(&key).copied()) {
            return Ok(v);
        }
        let u = self.compute(x)?;
        if let Ok(mut c) = self.cache.write() {
            c.entry(key).or_insert(u);
        }
        Ok(u)
    }

    fn compute(&self, x: f64) -> Result<f64> {
        let prob = &self.prob;
        let d = self.distance(x);
        if let Some((lo, hi)) = self.flat_zone {
            if x >= lo && x <= hi {
                return Ok(0.0);
            }
            // collar: γ Ψ(u) = d
            return prob.profile()?.phi(d / prob.gamma);
        }
        let r = (x - self.c_m).abs();
        if r == 0.0 {
            return Ok(self.v0);
        }
        let sigma = if r <= d {
            bisect_log(|s| prob.head(self.v0, s) - r, true)?
        } else {
            bisect_log(|s| prob.tail(self.v0, s) - d, false)?
        };
        Ok(self.v0 + sigma)
    }

    /// `γ Ψ(u(x)) / δ(x)` at distance `m` from each endpoint.
    pub fn asym_check(&self, margins: &[f64]) -> Result<Vec<AsymRow>> {
        let profile = self.prob.profile()?;
        let g = self.prob.gamma;
        margins
            .iter()
            .map(|&m| {
                let left = self.eval(self.prob.a + m)?;
                let right = self.eval(self.prob.b - m)?;
                Ok(AsymRow {
                    delta: m,
                    ratio_left: g * profile.psi(left)? / m,
                    ratio_right: g * profile.psi(right)? / m,
                })
            })
            .collect()
    }
}

/// Root of a monotone function of `σ > 0` by bisection in `ln σ`.
fn bisect_log<G: Fn(f64) -> f64>(g: G, increasing: bool) -> Result<f64> {
    let sign = if increasing { 1.0 } else { -1.0 };
    let h = |s: f64| sign * g(s);
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    let mut steps = 0;
    while h(lo) > 0.0 {
        lo *= 0.25;
        steps += 1;
        if steps > 600 {
            return Err(Error::BracketFail(
                "profile inversion: lower bracket".into(),
            ));
        }
    }
    steps = 0;
    while h(hi) < 0.0 {
        hi *= 4.0;
        steps += 1;
        if steps > 600 {
            return Err(Error::BracketFail(
                "profile inversion: upper bracket".into(),
            ));
        }
    }
    while hi / lo - 1.0 > 1e-15 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// The convex large solution on `(a, b)`: symmetric about the midpoint, or
/// with a central flat zone when the interval exceeds `2L` under (A2).
pub fn solve_interval(prob: &Interval1DProblem) -> Result<LargeSolution1D> {
    let profile = prob.profile()?;
    let delta = prob.half_width();
    let c_m = 0.5 * (prob.a + prob.b);
    if let Some(l) = profile.l(prob.gamma) {
        if delta >= l {
            let mut sol = LargeSolution1D::from_parts(prob.clone(), c_m, 0.0);
            sol.flat_zone = Some((prob.a + l, prob.b - l));
            return Ok(sol);
        }
    }
    let v0 = solve_v0(prob, delta)?;
    Ok(LargeSolution1D::from_parts(prob.clone(), c_m, v0))
}

/// Convenience wrapper around [`LargeSolution1D::from_parts`] and `eval`.
pub fn eval_solution(prob: &Interval1DProblem, c_m: f64, v0: f64, x: f64) -> Result<f64> {
    LargeSolution1D::from_parts(prob.clone(), c_m, v0).eval(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymRow {
    pub delta: f64,
    pub ratio_left: f64,
    pub ratio_right: f64,
}

pub fn asym_check_1d(sol: &LargeSolution1D, margins: &[f64]) -> Result<Vec<AsymRow>> {
    sol.asym_check(margins)
}
