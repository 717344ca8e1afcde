//! Solutions depending only on `t = H₀(x - x₀)`, which reduce to
//! `(t^{n-1} |w'|^{p-2} w')' = t^{n-1} f(w)`.
//!
//! The reduced equation is discretized by finite volumes on a graded grid and
//! solved as the minimizer of the discrete energy
//! `Σ t_{e}^{n-1} h_e P_ε(slope_e) + Σ V_i F(w_i)` by damped Newton.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::nonlinearity::{Nonlinearity, Osgood};
use crate::norms::{DualEvaluator, MinkowskiNorm};
use crate::ode1d::{solve_interval, Interval1DProblem, LargeSolution1D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialOptions {
    /// Number of grid cells.
    pub cells: usize,
    /// Algebraic clustering exponent towards the blow-up end.
    pub grading: f64,
    pub max_newton: usize,
    /// Target for the relative discrete residual.
    pub tolerance: f64,
    /// Interior sup-norm change that ends the doubling in `k`.
    pub stop_change: f64,
    pub max_doublings: usize,
    /// Degeneracy regularization relative to the slope scale.
    pub eps_rel: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self {
            cells: 4000,
            grading: 3.0,
            max_newton: 400,
            tolerance: 1e-8,
            stop_change: 1e-6,
            max_doublings: 120,
            eps_rel: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlowupEnd {
    Left,
    Right,
    Both,
}

/// Grid function `w(t_i)` with metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub blowup_end: BlowupEnd,
    /// Boundary value when the profile approximates a large solution by a
    /// finite `k`.
    pub k_ceiling: Option<f64>,
    pub dim: usize,
    pub p: f64,
    /// Largest componentwise relative residual of the discrete equations.
    pub residual: f64,
    pub converged: bool,
    /// Newton iterations used by the last solve.
    pub iterations: usize,
}

impl RadialProfile {
    /// Piecewise-linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let g = &self.grid;
        if !(t >= g[0] && t <= g[g.len() - 1]) {
            return None;
        }
        let i = g.partition_point(|&v| v <= t).clamp(1, g.len() - 1);
        let (t0, t1) = (g[i - 1], g[i]);
        let s = (t - t0) / (t1 - t0);
        Some(self.values[i - 1] * (1.0 - s) + self.values[i] * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bc {
    Dirichlet(f64),
    ZeroFlux,
}

/// Finite-volume discretization of the radial operator.
struct RadialSystem<'a> {
    t: &'a [f64],
    p: f64,
    nl: &'a Nonlinearity,
    left: Bc,
    right: Bc,
    /// `t_e^{n-1}` at edge midpoints
    area: Vec<f64>,
    /// control volumes `∫ t^{n-1}` over dual cells
    volume: Vec<f64>,
}

impl<'a> RadialSystem<'a> {
    fn new(t: &'a [f64], dim: usize, p: f64, nl: &'a Nonlinearity, left: Bc, right: Bc) -> Self {
        let m = t.len();
        let n = dim as f64;
        let area: Vec<f64> = t
            .windows(2)
            .map(|w| (0.5 * (w[0] + w[1])).powf(n - 1.0))
            .collect();
        let mid = |i: usize| 0.5 * (t[i] + t[i + 1]);
        let volume = (0..m)
            .map(|i| {
                let lo = if i == 0 { t[0] } else { mid(i - 1) };
                let hi = if i + 1 == m { t[m - 1] } else { mid(i) };
                (hi.powf(n) - lo.powf(n)) / n
            })
            .collect();
        Self {
            t,
            p,
            nl,
            left,
            right,
            area,
            volume,
        }
    }

    fn free(&self, i: usize) -> bool {
        let last = self.t.len() - 1;
        !((i == 0 && matches!(self.left, Bc::Dirichlet(_)))
            || (i == last && matches!(self.right, Bc::Dirichlet(_))))
    }

    fn apply_bc(&self, w: &mut [f64]) {
        if let Bc::Dirichlet(v) = self.left {
            w[0] = v;
        }
        if let Bc::Dirichlet(v) = self.right {
            let last = w.len() - 1;
            w[last] = v;
        }
    }

    fn slope(&self, w: &[f64], e: usize) -> f64 {
        (w[e + 1] - w[e]) / (self.t[e + 1] - self.t[e])
    }

    fn energy(&self, w: &[f64], eps: f64) -> f64 {
        let p = self.p;
        let mut e = 0.0;
        for k in 0..self.area.len() {
            let s = self.slope(w, k);
            let h = self.t[k + 1] - self.t[k];
            e += self.area[k] * h * (s * s + eps * eps).powf(0.5 * p) / p;
        }
        for i in 0..w.len() {
            if self.free(i) {
                e += self.volume[i] * self.nl.big_f(w[i]);
            }
        }
        e
    }

    /// Gradient of the energy, its per-node scale, and the tridiagonal Hessian.
    fn derivatives(&self, w: &[f64], eps: f64) -> Derivatives {
        let m = w.len();
        let p = self.p;
        let mut d = Derivatives {
            grad: vec![0.0; m],
            scale: vec![0.0; m],
            lower: vec![0.0; m],
            diag: vec![0.0; m],
            upper: vec![0.0; m],
        };
        for k in 0..m - 1 {
            let h = self.t[k + 1] - self.t[k];
            let s = self.slope(w, k);
            let r2 = s * s + eps * eps;
            let flux = self.area[k] * r2.powf(0.5 * (p - 2.0)) * s;
            let stiff = if r2 > 0.0 {
                self.area[k] * r2.powf(0.5 * (p - 2.0)) * (1.0 + (p - 2.0) * s * s / r2) / h
            } else if p == 2.0 {
                self.area[k] / h
            } else {
                0.0
            };
            d.grad[k] -= flux;
            d.grad[k + 1] += flux;
            // componentwise backward-error scale: the flux with |w| in place of the difference
            let mag = self.area[k] * r2.powf(0.5 * (p - 2.0)) * (w[k].abs() + w[k + 1].abs()) / h;
            d.scale[k] += mag;
            d.scale[k + 1] += mag;
            d.diag[k] += stiff;
            d.diag[k + 1] += stiff;
            d.upper[k] -= stiff;
            d.lower[k + 1] -= stiff;
        }
        for i in 0..m {
            let fw = self.nl.f(w[i]);
            d.grad[i] += self.volume[i] * fw;
            d.scale[i] += self.volume[i] * fw;
            let fp = self.nl.f_prime(w[i].max(0.0));
            let fp = if fp.is_finite() { fp } else { 0.0 };
            d.diag[i] += self.volume[i] * fp;
        }
        d
    }

    fn residual(&self, w: &[f64], eps: f64) -> f64 {
        let d = self.derivatives(w, eps);
        (0..w.len())
            .filter(|&i| self.free(i))
            .map(|i| {
                if d.scale[i] > 0.0 {
                    d.grad[i].abs() / d.scale[i]
                } else {
                    d.grad[i].abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// Damped Newton from `w`; returns (iterations, relative residual).
    fn solve(&self, w: &mut [f64], eps: f64, opts: &RadialOptions) -> (usize, f64) {
        self.apply_bc(w);
        let free: Vec<usize> = (0..w.len()).filter(|&i| self.free(i)).collect();
        let mut energy = self.energy(w, eps);
        for it in 0..opts.max_newton {
            let d = self.derivatives(w, eps);
            let rel = free
                .iter()
                .map(|&i| {
                    if d.scale[i] > 0.0 {
                        d.grad[i].abs() / d.scale[i]
                    } else {
                        d.grad[i].abs()
                    }
                })
                .fold(0.0, f64::max);
            if rel <= 1e-3 * opts.tolerance {
                return (it, rel);
            }
            let lo: Vec<f64> = free
                .iter()
                .enumerate()
                .map(|(k, &i)| if k == 0 { 0.0 } else { d.lower[i] })
                .collect();
            let di: Vec<f64> = free.iter().map(|&i| d.diag[i]).collect();
            let up: Vec<f64> = free.iter().map(|&i| d.upper[i]).collect();
            let rhs: Vec<f64> = free.iter().map(|&i| -d.grad[i]).collect();
            let step = match solve_tridiagonal(&lo, &di, &up, &rhs) {
                Some(s) => s,
                None => return (it, rel),
            };
            let slope: f64 = free.iter().zip(&step).map(|(&i, s)| d.grad[i] * s).sum();
            let mut alpha = 1.0;
            let mut trial = w.to_vec();
            let mut accepted = false;
            for _ in 0..60 {
                for (k, &i) in free.iter().enumerate() {
                    trial[i] = w[i] + alpha * step[k];
                }
                let e = self.energy(&trial, eps);
                if e <= energy + 1e-4 * alpha * slope + 1e-14 * energy.abs() {
                    energy = e;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // near the solution the energy decrease drowns in rounding;
                // fall back to the residual as merit function
                alpha = 1.0;
                for (k, &i) in free.iter().enumerate() {
                    trial[i] = w[i] + step[k];
                }
                if self.residual(&trial, eps) >= rel {
                    return (it, rel);
                }
                energy = self.energy(&trial, eps);
            }
            w.copy_from_slice(&trial);
            let size = step
                .iter()
                .zip(&free)
                .map(|(s, &i)| (alpha * s).abs() / (1.0 + w[i].abs()))
                .fold(0.0, f64::max);
            if size < 1e-15 {
                let rel = self.residual(w, eps);
                return (it + 1, rel);
            }
        }
        (opts.max_newton, self.residual(w, eps))
    }
}

struct Derivatives {
    grad: Vec<f64>,
    scale: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

/// Grid on `[lo, hi]` clustered algebraically at `lo` (`towards_lo`) or `hi`.
pub fn graded_grid(lo: f64, hi: f64, cells: usize, grading: f64, towards_lo: bool) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=cells)
        .map(|i| {
            let s = i as f64 / cells as f64;
            if towards_lo {
                lo + (hi - lo) * s.powf(grading)
            } else {
                hi - (hi - lo) * (1.0 - s).powf(grading)
            }
        })
        .collect();
    g[0] = lo;
    g[cells] = hi;
    g
}

/// H₀-annulus `{R1 < H₀(x - c) < R2}` with blow-up on the inner sphere.
#[derive(Debug, Clone)]
pub struct AnnulusProblem {
    pub center: Vec<f64>,
    pub r1: f64,
    pub r2: f64,
    pub dual: DualEvaluator,
    pub p: f64,
    pub nl: Nonlinearity,
}

impl AnnulusProblem {
    pub fn new(
        center: Vec<f64>,
        r1: f64,
        r2: f64,
        norm: MinkowskiNorm,
        nl: Nonlinearity,
    ) -> Result<Self> {
        if !(r1 > 0.0 && r1 < r2 && r2.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "annulus radii must satisfy 0 < R1 < R2, got {r1}, {r2}"
            )));
        }
        if center.len() != norm.dim() || norm.dim() < 2 {
            return Err(Error::InvalidProblem(
                "annulus needs dimension >= 2 matching the norm".into(),
            ));
        }
        Ok(Self {
            center,
            r1,
            r2,
            p: nl.p(),
            dual: DualEvaluator::new(norm),
            nl,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `w(H₀(x - c))` for a profile on this annulus.
    pub fn evaluate(&self, profile: &RadialProfile, x: &[f64]) -> Option<f64> {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        profile.interpolate(self.dual.eval(&d))
    }
}

/// Radial problem on the Wulff ball `{H₀(x - c) < R}`.
#[derive(Debug, Clone)]
pub struct WulffBallProblem {
    pub center: Vec<f64>,
    pub r: f64,
    pub dual: DualEvaluator,
    pub nl: Nonlinearity,
}

impl WulffBallProblem {
    pub fn new(center: Vec<f64>, r: f64, norm: MinkowskiNorm, nl: Nonlinearity) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "ball radius must be positive, got {r}"
            )));
        }
        if center.len() != norm.dim() {
            return Err(Error::InvalidProblem(
                "center dimension does not match the norm".into(),
            ));
        }
        Ok(Self {
            center,
            r,
            dual: DualEvaluator::new(norm),
            nl,
        })
    }

    pub fn p(&self) -> f64 {
        self.nl.p()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn radius_of(&self, x: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.dual.eval(&d)
    }
}

/// The one-dimensional large solution `ω` on `(0, 2R)` with `γ = 1`.
pub fn solve_omega(r: f64, nl: &Nonlinearity) -> Result<LargeSolution1D> {
    solve_interval(&Interval1DProblem::new(0.0, 2.0 * r, 1.0, nl.clone())?)
}

/// Barrier `v(x) = ω(R - H₀(x - c))` on a Wulff ball.
#[derive(Debug, Clone)]
pub struct WulffBarrier {
    problem: WulffBallProblem,
    omega: LargeSolution1D,
}

impl WulffBarrier {
    pub fn new(problem: WulffBallProblem) -> Result<Self> {
        let omega = solve_omega(problem.r, &problem.nl)?;
        Ok(Self { problem, omega })
    }

    pub fn omega(&self) -> &LargeSolution1D {
        &self.omega
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let rho = self.problem.radius_of(x);
        if !(rho < self.problem.r) {
            return Err(Error::OutsideBall);
        }
        self.omega.eval(self.problem.r - rho)
    }

    /// `ω(R/2)`: bound on the half-radius ball.
    pub fn half_radius_bound(&self) -> Result<f64> {
        self.omega.eval(0.5 * self.problem.r)
    }
}

pub fn wulff_barrier(prob: &WulffBallProblem, x: &[f64]) -> Result<f64> {
    WulffBarrier::new(prob.clone())?.eval(x)
}

/// Regularization from the interior slope scale `min(k, Φ(L/2)) / L`, so that
/// it stays small next to interior gradients however large `k` gets.
fn eps_for(k: f64, length: f64, nl: &Nonlinearity, opts: &RadialOptions) -> f64 {
    let interior = nl
        .profile()
        .and_then(|pr| pr.phi(0.5 * length))
        .map_or(k, |v| v.min(k));
    opts.eps_rel * (interior / length).max(f64::MIN_POSITIVE)
}

/// Two-point problem `w(R1) = k`, `w(R2) = 0`.
pub fn solve_annulus_k(
    prob: &AnnulusProblem,
    k: f64,
    opts: &RadialOptions,
) -> Result<RadialProfile> {
    let grid = graded_grid(prob.r1, prob.r2, opts.cells, opts.grading, true);
    let w: Vec<f64> = grid
        .iter()
        .map(|t| k * (prob.r2 - t) / (prob.r2 - prob.r1))
        .collect();
    annulus_from(prob, grid, w, k, opts)
}

fn annulus_from(
    prob: &AnnulusProblem,
    grid: Vec<f64>,
    mut w: Vec<f64>,
    k: f64,
    opts: &RadialOptions,
) -> Result<RadialProfile> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::InvalidProblem(format!(
            "boundary value must be nonnegative, got {k}"
        )));
    }
    let sys = RadialSystem::new(
        &grid,
        prob.dim(),
        prob.p,
        &prob.nl,
        Bc::Dirichlet(k),
        Bc::Dirichlet(0.0),
    );
    let eps = eps_for(k, prob.r2 - prob.r1, &prob.nl, opts);
    let (iterations, residual) = sys.solve(&mut w, eps, opts);
    let converged = residual <= opts.tolerance;
    if !converged {
        return Err(Error::NoConvergence {
            what: "radial Newton",
            iterations,
            residual,
        });
    }
    Ok(RadialProfile {
        grid,
        values: w,
        blowup_end: BlowupEnd::Left,
        k_ceiling: Some(k),
        dim: prob.dim(),
        p: prob.p,
        residual,
        converged,
        iterations,
    })
}

/// Sequence of profiles for `k = 2^j` and the stabilized limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialLimit {
    pub profiles: Vec<RadialProfile>,
    pub last_change: f64,
    /// The doubling stopped at the resolution cap rather than on `stop_change`.
    pub capped: bool,
}

impl RadialLimit {
    pub fn limit(&self) -> &RadialProfile {
        self.profiles.last().expect("at least one profile")
    }
}

/// Largest boundary value the grid resolves: `Φ(10 h_min)`.
fn resolution_cap(grid: &[f64], nl: &Nonlinearity) -> Result<f64> {
    let h_min = grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    nl.profile()?.phi(10.0 * h_min)
}

fn doubling<S: FnMut(f64, Option<&RadialProfile>) -> Result<RadialProfile>>(
    mut solve: S,
    interior: impl Fn(f64) -> bool,
    cap: f64,
    opts: &RadialOptions,
) -> Result<RadialLimit> {
    let mut profiles: Vec<RadialProfile> = Vec::new();
    let mut last_change = f64::INFINITY;
    for j in 0..=opts.max_doublings {
        let k = 2f64.powi(j as i32).min(cap);
        let capped = k == cap;
        let prof = solve(k, profiles.last())?;
        if let Some(prev) = profiles.last() {
            last_change = prev
                .grid
                .iter()
                .zip(prev.values.iter().zip(&prof.values))
                .filter(|(t, _)| interior(**t))
                .map(|(_, (a, b))| (a - b).abs())
                .fold(0.0, f64::max);
        }
        profiles.push(prof);
        if last_change < opts.stop_change || capped {
            return Ok(RadialLimit {
                profiles,
                last_change,
                capped: capped && last_change >= opts.stop_change,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "k-doubling",
        iterations: opts.max_doublings,
        residual: last_change,
    })
}

/// Large solution on the annulus as the limit of `solve_annulus_k`.
pub fn solve_annulus_large(prob: &AnnulusProblem, opts: &RadialOptions) -> Result<RadialLimit> {
    let grid = graded_grid(prob.r1, prob.r2, opts.cells, opts.grading, true);
    let cap = resolution_cap(&grid, &prob.nl)?;
    let cut = prob.r1 + (prob.r2 - prob.r1) / 20.0;
    doubling(
        |k, prev| {
            let w = match prev {
                Some(p) => p.values.clone(),
                None => grid
                    .iter()
                    .map(|t| k * (prob.r2 - t) / (prob.r2 - prob.r1))
                    .collect(),
            };
            annulus_from(prob, grid.clone(), w, k, opts)
        },
        |t| t >= cut,
        cap,
        opts,
    )
}

/// Ball `{H₀ < R}` in dimension `n`: `w'(0) = 0`, `w(R) = k`.
pub fn solve_ball_k(
    r: f64,
    dim: usize,
    nl: &Nonlinearity,
    k: f64,
    opts: &RadialOptions,
) -> Result<RadialProfile> {
    let grid = graded_grid(0.0, r, opts.cells, opts.grading, false);
    let w = vec![0.0; grid.len()];
    ball_from(r, dim, nl, grid, w, k, opts)
}

fn ball_from(
    r: f64,
    dim: usize,
    nl: &Nonlinearity,
    grid: Vec<f64>,
    mut w: Vec<f64>,
    k: f64,
    opts: &RadialOptions,
) -> Result<RadialProfile> {
    if !(r > 0.0) || dim == 0 {
        return Err(Error::InvalidProblem(
            "ball radius and dimension must be positive".into(),
        ));
    }
    let sys = RadialSystem::new(&grid, dim, nl.p(), nl, Bc::ZeroFlux, Bc::Dirichlet(k));
    let eps = eps_for(k, r, nl, opts);
    let (iterations, residual) = sys.solve(&mut w, eps, opts);
    let converged = residual <= opts.tolerance;
    if !converged {
        return Err(Error::NoConvergence {
            what: "radial Newton",
            iterations,
            residual,
        });
    }
    Ok(RadialProfile {
        grid,
        values: w,
        blowup_end: BlowupEnd::Right,
        k_ceiling: Some(k),
        dim,
        p: nl.p(),
        residual,
        converged,
        iterations,
    })
}

/// Large solution on a ball as the limit of `solve_ball_k`.
pub fn solve_ball_large(
    r: f64,
    dim: usize,
    nl: &Nonlinearity,
    opts: &RadialOptions,
) -> Result<RadialLimit> {
    let grid = graded_grid(0.0, r, opts.cells, opts.grading, false);
    let cap = resolution_cap(&grid, nl)?;
    let cut = r - r / 20.0;
    doubling(
        |k, prev| {
            let w = prev
                .map(|p| p.values.clone())
                .unwrap_or_else(|| vec![0.0; grid.len()]);
            ball_from(r, dim, nl, grid.clone(), w, k, opts)
        },
        |t| t <= cut,
        cap,
        opts,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusAsymRow {
    pub distance: f64,
    pub ratio: f64,
}

/// `Ψ(w(t)) / (t - R1)` at every grid node with `0 < t - R1 ≤ max_distance`.
pub fn annulus_asym_check(
    profile: &RadialProfile,
    nl: &Nonlinearity,
    max_distance: f64,
) -> Result<Vec<AnnulusAsymRow>> {
    if profile.blowup_end != BlowupEnd::Left {
        return Err(Error::InvalidProblem(
            "profile does not blow up at the inner radius".into(),
        ));
    }
    let ko = nl.profile()?;
    if ko.osgood() != Osgood::A1Diverges {
        return Err(Error::InvalidProblem(
            "annulus asymptotics are only checked under the Osgood condition".into(),
        ));
    }
    let r1 = profile.grid[0];
    profile
        .grid
        .iter()
        .zip(&profile.values)
        .skip(1)
        .filter(|(t, _)| **t - r1 <= max_distance)
        .map(|(t, w)| {
            Ok(AnnulusAsymRow {
                distance: t - r1,
                ratio: ko.psi(*w)? / (t - r1),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayIdentityReport {
    /// `Q = t^{p(n-1)/(p-1)} |w'|^p` is nonincreasing in `t` on the grid.
    pub monotone: bool,
    /// Largest relative mismatch between `ΔQ` and the integrated right side.
    pub max_mismatch: f64,
}

/// Discrete check of `Q' = (p/(p-1)) t^{p(n-1)/(p-1)} w' f(w)` for
/// `Q = t^{p(n-1)/(p-1)} |w'|^p`, on cells at least `skip` nodes from either end.
pub fn decay_identity_check(
    profile: &RadialProfile,
    nl: &Nonlinearity,
    skip: usize,
) -> DecayIdentityReport {
    let t = &profile.grid;
    let w = &profile.values;
    let p = profile.p;
    let expo = p * (profile.dim as f64 - 1.0) / (p - 1.0);
    let m = t.len();
    // Q at edge midpoints from one-sided slopes
    let q: Vec<f64> = (0..m - 1)
        .map(|e| {
            let tm = 0.5 * (t[e] + t[e + 1]);
            let s = (w[e + 1] - w[e]) / (t[e + 1] - t[e]);
            tm.powf(expo) * s.abs().powf(p)
        })
        .collect();
    let mut monotone = true;
    let mut max_mismatch: f64 = 0.0;
    for i in skip.max(1)..(m - 1).saturating_sub(skip) {
        let dq = q[i] - q[i - 1];
        if dq > 1e-12 * q[i - 1].abs() {
            monotone = false;
        }
        let tm0 = 0.5 * (t[i - 1] + t[i]);
        let tm1 = 0.5 * (t[i] + t[i + 1]);
        let slope = (w[i + 1] - w[i - 1]) / (t[i + 1] - t[i - 1]);
        let rhs = p / (p - 1.0) * t[i].powf(expo) * slope * nl.f(w[i]) * (tm1 - tm0);
        if rhs.abs() > 0.0 {
            max_mismatch = max_mismatch.max((dq - rhs).abs() / rhs.abs());
        }
    }
    DecayIdentityReport {
        monotone,
        max_mismatch,
    }
}
