//! Minkowski norms `H`, their duals `H₀`, and sampled verification of the
//! structural identities linking the two.
//!
//! Every family evaluates `H`, `∇H` and the Hessian of `H²/2` in closed form
//! except the Hessian of [`NormFamily::BlockPq`], which is a central finite
//! difference of the closed-form gradient. Derivatives are 0-homogeneous, so
//! inputs are normalized to the Euclidean unit sphere before differentiating.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs with Euclidean length at or below this are treated as the origin.
pub const ZERO_THRESHOLD: f64 = 1e-290;

#[derive(Debug, Clone, PartialEq)]
pub enum NormFamily {
    /// `H(x) = |x|`.
    Euclidean,
    /// One-dimensional `H(x) = γ|x|`.
    Scaled1d { gamma: f64 },
    /// `H(x) = |Ax|` for invertible `A`.
    LinearMap { a: Vec<Vec<f64>> },
    /// `H(x) = sqrt(λ sqrt(Σ x_i⁴) + μ Σ x_i²)`.
    LambdaMu { lambda: f64, mu: f64 },
    /// Block norm `(Σ_i λ_i ‖x_{B_i}‖_{p_i}^q)^{1/q}`. With unit blocks and
    /// `p_i = q` this is the plain `ℓ_q` norm, which is only positive
    /// semi-definite in the Hessian sense for `q ≠ 2`.
    BlockPq {
        q: f64,
        sizes: Vec<usize>,
        exponents: Vec<f64>,
        weights: Vec<f64>,
    },
    /// `H(x) = |x| + ⟨T, x⟩`, valid for `|T| ≤ 1`. Only positively homogeneous.
    Randers { t: Vec<f64> },
}

impl NormFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NormFamily::Euclidean => "euclidean",
            NormFamily::Scaled1d { .. } => "scaled_1d",
            NormFamily::LinearMap { .. } => "linear_map",
            NormFamily::LambdaMu { .. } => "lambda_mu",
            NormFamily::BlockPq { .. } => "block_pq",
            NormFamily::Randers { .. } => "randers",
        }
    }
}

#[derive(Debug, Clone)]
enum Precomputed {
    None,
    Linear {
        a: DMatrix<f64>,
        ata: DMatrix<f64>,
        /// `A^{-T}`
        inv_t: DMatrix<f64>,
    },
    Blocks {
        ranges: Vec<(usize, usize)>,
    },
}

/// An immutable Minkowski norm on `ℝⁿ`.
#[derive(Debug, Clone)]
pub struct MinkowskiNorm {
    family: NormFamily,
    dim: usize,
    pre: Precomputed,
}

impl MinkowskiNorm {
    pub fn new(family: NormFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidNorm("dimension must be positive".into()));
        }
        let bad = |msg: String| Err(Error::InvalidNorm(msg));
        let pre = match &family {
            NormFamily::Euclidean => Precomputed::None,
            NormFamily::Scaled1d { gamma } => {
                if dim != 1 {
                    return bad(format!("scaled_1d requires dim 1, got {dim}"));
                }
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return bad(format!("gamma must be positive, got {gamma}"));
                }
                Precomputed::None
            }
            NormFamily::LinearMap { a } => {
                if a.len() != dim || a.iter().any(|row| row.len() != dim) {
                    return bad(format!("matrix must be {dim}x{dim}"));
                }
                let m = DMatrix::from_fn(dim, dim, |i, j| a[i][j]);
                let inv = match m.clone().try_inverse() {
                    Some(inv) if inv.iter().all(|v| v.is_finite()) => inv,
                    _ => return bad("matrix is singular".into()),
                };
                let ata = m.transpose() * &m;
                Precomputed::Linear {
                    a: m,
                    ata,
                    inv_t: inv.transpose(),
                }
            }
            NormFamily::LambdaMu { lambda, mu } => {
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return bad(format!("lambda must be nonnegative, got {lambda}"));
                }
                if !(*mu > 0.0 && mu.is_finite()) {
                    return bad(format!("mu must be positive, got {mu}"));
                }
                Precomputed::None
            }
            NormFamily::BlockPq {
                q,
                sizes,
                exponents,
                weights,
            } => {
                if !(*q >= 1.0 && q.is_finite()) {
                    return bad(format!("q must be at least 1, got {q}"));
                }
                if sizes.is_empty()
                    || sizes.len() != exponents.len()
                    || sizes.len() != weights.len()
                {
                    return bad(
                        "sizes, exponents and weights must be nonempty and equally long".into(),
                    );
                }
                if sizes.contains(&0) || sizes.iter().sum::<usize>() != dim {
                    return bad(format!("block sizes must be positive and sum to {dim}"));
                }
                if exponents.iter().any(|p| !(*p >= 1.0 && p.is_finite())) {
                    return bad("block exponents must be at least 1".into());
                }
                if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                    return bad("block weights must be positive".into());
                }
                let mut ranges = Vec::with_capacity(sizes.len());
                let mut start = 0;
                for &m in sizes {
                    ranges.push((start, start + m));
                    start += m;
                }
                Precomputed::Blocks { ranges }
            }
            NormFamily::Randers { t } => {
                if t.len() != dim {
                    return bad(format!("randers vector must have length {dim}"));
                }
                let len = t.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(len <= 1.0) {
                    return bad(format!(
                        "randers drift has length {len}; a Minkowski norm needs |T| <= 1"
                    ));
                }
                Precomputed::None
            }
        };
        Ok(Self { family, dim, pre })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(NormFamily::Euclidean, dim).expect("euclidean is always valid")
    }

    pub fn family(&self) -> &NormFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `H(-x) = H(x)` holds for every family but a Randers norm with `T ≠ 0`.
    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            NormFamily::Randers { t } => t.iter().all(|v| *v == 0.0),
            _ => true,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match (&self.family, &self.pre) {
            (NormFamily::Euclidean, _) => norm2(x),
            (NormFamily::Scaled1d { gamma }, _) => gamma * x[0].abs(),
            (NormFamily::LinearMap { .. }, Precomputed::Linear { a, .. }) => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    let mut yi = 0.0;
                    for j in 0..self.dim {
                        yi += a[(i, j)] * x[j];
                    }
                    s += yi * yi;
                }
                s.sqrt()
            }
            (NormFamily::LambdaMu { lambda, mu }, _) => {
                let scale = max_abs(x);
                if scale == 0.0 {
                    return 0.0;
                }
                let (mut s2, mut s4) = (0.0, 0.0);
                for v in x {
                    let y = v / scale;
                    let y2 = y * y;
                    s2 += y2;
                    s4 += y2 * y2;
                }
                scale * (lambda * s4.sqrt() + mu * s2).sqrt()
            }
            (
                NormFamily::BlockPq {
                    q,
                    exponents,
                    weights,
                    ..
                },
                Precomputed::Blocks { ranges },
            ) => {
                let scale = max_abs(x);
                if scale == 0.0 {
                    return 0.0;
                }
                let mut total = 0.0;
                for (b, &(lo, hi)) in ranges.iter().enumerate() {
                    let nb = block_norm(&x[lo..hi], exponents[b], scale);
                    total += weights[b] * nb.powf(*q);
                }
                scale * total.powf(1.0 / q)
            }
            (NormFamily::Randers { t }, _) => norm2(x) + dot(t, x),
            _ => unreachable!("precomputed data matches family"),
        }
    }

    /// `∇H(x)`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.dim];
        self.grad_into(x, &mut g)?;
        Ok(g)
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let len = norm2(x);
        if !(len > ZERO_THRESHOLD) {
            return Err(Error::ZeroVector);
        }
        let u: Vec<f64> = x.iter().map(|v| v / len).collect();
        self.unit_grad(&u, out);
        Ok(())
    }

    /// Hessian of `H²/2`, row-major `n × n`.
    pub fn hess_half_sq(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let mut buf = vec![0.0; self.dim * self.dim];
        self.hess_half_sq_into(x, &mut buf)?;
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &buf))
    }

    pub fn hess_half_sq_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let len = norm2(x);
        if !(len > ZERO_THRESHOLD) {
            return Err(Error::ZeroVector);
        }
        let u: Vec<f64> = x.iter().map(|v| v / len).collect();
        self.unit_hess(&u, out);
        Ok(())
    }

    /// `∇(H²/2)(x) = H(x) ∇H(x)`; zero at the origin.
    pub fn grad_half_sq_into(&self, x: &[f64], out: &mut [f64]) {
        let len = norm2(x);
        if !(len > ZERO_THRESHOLD) {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let u: Vec<f64> = x.iter().map(|v| v / len).collect();
        self.unit_grad(&u, out);
        let h = self.eval(x);
        out.iter_mut().for_each(|v| *v *= h);
    }

    // gradient of H at a Euclidean unit vector
    fn unit_grad(&self, u: &[f64], out: &mut [f64]) {
        let n = self.dim;
        match (&self.family, &self.pre) {
            (NormFamily::Euclidean, _) => out.copy_from_slice(u),
            (NormFamily::Scaled1d { gamma }, _) => out[0] = gamma * u[0].signum(),
            (NormFamily::LinearMap { .. }, Precomputed::Linear { ata, .. }) => {
                let h = self.eval(u);
                for i in 0..n {
                    let mut s = 0.0;
                    for j in 0..n {
                        s += ata[(i, j)] * u[j];
                    }
                    out[i] = s / h;
                }
            }
            (NormFamily::LambdaMu { lambda, mu }, _) => {
                let s4: f64 = u.iter().map(|v| v.powi(4)).sum();
                let r4 = s4.sqrt();
                let h = self.eval(u);
                for i in 0..n {
                    out[i] = (lambda * u[i].powi(3) / r4 + mu * u[i]) / h;
                }
            }
            (
                NormFamily::BlockPq {
                    q,
                    exponents,
                    weights,
                    ..
                },
                Precomputed::Blocks { ranges },
            ) => {
                let h = self.eval(u);
                let hq1 = h.powf(1.0 - q);
                for (b, &(lo, hi)) in ranges.iter().enumerate() {
                    let p = exponents[b];
                    let nb = block_norm(&u[lo..hi], p, 1.0);
                    for j in lo..hi {
                        out[j] = if nb > 0.0 && u[j] != 0.0 {
                            hq1 * weights[b]
                                * nb.powf(q - p)
                                * u[j].abs().powf(p - 1.0)
                                * u[j].signum()
                        } else {
                            0.0
                        };
                    }
                }
            }
            (NormFamily::Randers { t }, _) => {
                for i in 0..n {
                    out[i] = u[i] + t[i];
                }
            }
            _ => unreachable!("precomputed data matches family"),
        }
    }

    // Hessian of H²/2 at a Euclidean unit vector
    fn unit_hess(&self, u: &[f64], out: &mut [f64]) {
        let n = self.dim;
        match (&self.family, &self.pre) {
            (NormFamily::Euclidean, _) => {
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = if i == j { 1.0 } else { 0.0 };
                    }
                }
            }
            (NormFamily::Scaled1d { gamma }, _) => out[0] = gamma * gamma,
            (NormFamily::LinearMap { .. }, Precomputed::Linear { ata, .. }) => {
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = ata[(i, j)];
                    }
                }
            }
            (NormFamily::LambdaMu { lambda, mu }, _) => {
                let s4: f64 = u.iter().map(|v| v.powi(4)).sum();
                let r4 = s4.sqrt();
                for i in 0..n {
                    for j in 0..n {
                        let mut v = -2.0 * lambda * u[i].powi(3) * u[j].powi(3) / (s4 * r4);
                        if i == j {
                            v += 3.0 * lambda * u[i] * u[i] / r4 + mu;
                        }
                        out[i * n + j] = v;
                    }
                }
            }
            (NormFamily::BlockPq { .. }, _) => {
                // central differences of the closed-form ∇(H²/2) at |u| = 1
                let step = f64::EPSILON.cbrt() * 2.0;
                let mut plus = vec![0.0; n];
                let mut minus = vec![0.0; n];
                let mut shifted = u.to_vec();
                for j in 0..n {
                    shifted[j] = u[j] + step;
                    self.grad_half_sq_into(&shifted, &mut plus);
                    shifted[j] = u[j] - step;
                    self.grad_half_sq_into(&shifted, &mut minus);
                    shifted[j] = u[j];
                    for i in 0..n {
                        out[i * n + j] = (plus[i] - minus[i]) / (2.0 * step);
                    }
                }
                for i in 0..n {
                    for j in 0..i {
                        let avg = 0.5 * (out[i * n + j] + out[j * n + i]);
                        out[i * n + j] = avg;
                        out[j * n + i] = avg;
                    }
                }
            }
            (NormFamily::Randers { t }, _) => {
                let h = 1.0 + dot(t, u);
                for i in 0..n {
                    let gi = u[i] + t[i];
                    for j in 0..n {
                        let gj = u[j] + t[j];
                        let proj = if i == j { 1.0 } else { 0.0 } - u[i] * u[j];
                        out[i * n + j] = gi * gj + h * proj;
                    }
                }
            }
            _ => unreachable!("precomputed data matches family"),
        }
    }

    /// Closed-form dual norm and its maximizer direction, when the family has one.
    fn closed_dual(&self, xi: &[f64]) -> Option<(f64, Vec<f64>)> {
        match (&self.family, &self.pre) {
            (NormFamily::Euclidean, _) => {
                let v = norm2(xi);
                let dir = if v > 0.0 {
                    xi.iter().map(|c| c / v).collect()
                } else {
                    vec![0.0; self.dim]
                };
                Some((v, dir))
            }
            (NormFamily::Scaled1d { gamma }, _) => {
                let v = xi[0].abs() / gamma;
                Some((v, vec![xi[0].signum() / gamma]))
            }
            (NormFamily::LinearMap { .. }, Precomputed::Linear { inv_t, .. }) => {
                let w = inv_t * DVector::from_column_slice(xi);
                let v = w.norm();
                if v == 0.0 {
                    return Some((0.0, vec![0.0; self.dim]));
                }
                // ∇H₀(ξ) = A^{-1} A^{-T} ξ / |A^{-T} ξ|
                let g = inv_t.transpose() * w / v;
                Some((v, g.iter().copied().collect()))
            }
            _ => None,
        }
    }

    /// Lower/upper bounds of `H` on the Euclidean unit sphere.
    pub fn theta_bounds(&self) -> ThetaBounds {
        let n = self.dim;
        let dirs = sphere_directions(n, if n == 2 { 4096 } else { 2000 * n }, 0x7e7a);
        let vals: Vec<f64> = dirs.iter().map(|d| self.eval(d)).collect();
        let (imin, imax) = argminmax(&vals);
        let h = |d: &[f64]| self.eval(d);
        let (_, lo) = sphere_refine(&h, &dirs[imin], false, 1e-13);
        let (_, hi) = sphere_refine(&h, &dirs[imax], true, 1e-13);
        ThetaBounds {
            theta1: lo.min(vals[imin]),
            theta2: hi.max(vals[imax]),
        }
    }

    pub fn spec(&self) -> NormSpec {
        let params = match &self.family {
            NormFamily::Euclidean => serde_json::json!({}),
            NormFamily::Scaled1d { gamma } => serde_json::json!({ "gamma": gamma }),
            NormFamily::LinearMap { a } => serde_json::json!({ "a": a }),
            NormFamily::LambdaMu { lambda, mu } => {
                serde_json::json!({ "lambda": lambda, "mu": mu })
            }
            NormFamily::BlockPq {
                q,
                sizes,
                exponents,
                weights,
            } => {
                serde_json::json!({ "q": q, "sizes": sizes, "exponents": exponents, "weights": weights })
            }
            NormFamily::Randers { t } => serde_json::json!({ "t": t }),
        };
        NormSpec {
            family: self.family.name().to_string(),
            params,
            dim: self.dim,
        }
    }
}

/// `θ₁ = min_{|x|=1} H(x)`, `θ₂ = max_{|x|=1} H(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaBounds {
    pub theta1: f64,
    pub theta2: f64,
}

/// Configuration for the numeric dual-norm maximization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSolverConfig {
    /// Seed directions per dimension.
    pub seeds_per_dim: usize,
    /// Relative tolerance on the stationarity equation `∇(H²/2)(x) = ξ`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Use the numeric solver even when a closed form is available.
    pub force_numeric: bool,
}

impl Default for DualSolverConfig {
    fn default() -> Self {
        Self {
            seeds_per_dim: 64,
            tolerance: 1e-14,
            max_iterations: 80,
            force_numeric: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualValue {
    pub value: f64,
    /// Maximizer of `⟨ξ,x⟩/H(x)` normalized to `H(x) = 1`; equals `∇H₀(ξ)`.
    pub maximizer: Vec<f64>,
    /// The ascent did not improve on the seed grid; `value` is the grid value.
    pub stalled: bool,
}

/// Evaluates `H₀(ξ) = sup_{x≠0} ⟨ξ,x⟩/H(x)` and its gradient.
#[derive(Debug, Clone)]
pub struct DualEvaluator {
    base: MinkowskiNorm,
    config: DualSolverConfig,
    seeds: Vec<Vec<f64>>,
    seed_norms: Vec<f64>,
}

impl DualEvaluator {
    pub fn new(base: MinkowskiNorm) -> Self {
        Self::with_config(base, DualSolverConfig::default())
    }

    pub fn with_config(base: MinkowskiNorm, config: DualSolverConfig) -> Self {
        let n = base.dim();
        let count = (config.seeds_per_dim * n).max(2);
        let seeds = sphere_directions(n, count, 0x5eed);
        let seed_norms = seeds.iter().map(|d| base.eval(d)).collect();
        Self {
            base,
            config,
            seeds,
            seed_norms,
        }
    }

    pub fn base(&self) -> &MinkowskiNorm {
        &self.base
    }

    pub fn config(&self) -> &DualSolverConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn has_closed_form(&self) -> bool {
        !self.config.force_numeric && self.base.closed_dual(&vec![0.0; self.dim()]).is_some()
    }

    /// `H₀(ξ)`.
    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.solve(xi).value
    }

    /// `∇H₀(x)`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !(norm2(x) > ZERO_THRESHOLD) {
            return Err(Error::ZeroVector);
        }
        Ok(self.solve(x).maximizer)
    }

    /// Full maximization result. `ξ = 0` returns value 0.
    pub fn solve(&self, xi: &[f64]) -> DualValue {
        let n = self.dim();
        let len = norm2(xi);
        if !(len > ZERO_THRESHOLD) {
            return DualValue {
                value: 0.0,
                maximizer: vec![0.0; n],
                stalled: false,
            };
        }
        if !self.config.force_numeric {
            if let Some((value, maximizer)) = self.base.closed_dual(xi) {
                return DualValue {
                    value,
                    maximizer,
                    stalled: false,
                };
            }
        }
        // work with the unit vector; H₀ is 1-homogeneous and ∇H₀ 0-homogeneous
        let unit: Vec<f64> = xi.iter().map(|v| v / len).collect();
        let mut best = 0;
        let mut best_ratio = f64::NEG_INFINITY;
        for (k, d) in self.seeds.iter().enumerate() {
            let r = dot(&unit, d) / self.seed_norms[k];
            if r > best_ratio {
                best_ratio = r;
                best = k;
            }
        }
        let d = &self.seeds[best];
        let hd = self.seed_norms[best];
        let mut out = match self.legendre_newton(&unit, d, hd, best_ratio) {
            Some((value, maximizer)) if value >= best_ratio * (1.0 - 1e-14) => DualValue {
                value,
                maximizer,
                stalled: false,
            },
            _ => {
                let ratio = |x: &[f64]| dot(&unit, x) / self.base.eval(x);
                let (dir, val) = sphere_refine(&ratio, d, true, 1e-13);
                if val > best_ratio {
                    let h = self.base.eval(&dir);
                    DualValue {
                        value: val,
                        maximizer: dir.iter().map(|c| c / h).collect(),
                        stalled: false,
                    }
                } else {
                    DualValue {
                        value: best_ratio,
                        maximizer: d.iter().map(|c| c / hd).collect(),
                        stalled: true,
                    }
                }
            }
        };
        out.value *= len;
        out
    }

    // Minimizes H²(x)/2 - ⟨ξ,x⟩; the minimizer satisfies H(x) = H₀(ξ) and
    // x / H(x) = ∇H₀(ξ).
    fn legendre_newton(
        &self,
        xi: &[f64],
        seed: &[f64],
        seed_h: f64,
        seed_ratio: f64,
    ) -> Option<(f64, Vec<f64>)> {
        if !(seed_ratio > 0.0) {
            return None;
        }
        let n = self.dim();
        let base = &self.base;
        let objective = |x: &[f64]| {
            let h = base.eval(x);
            0.5 * h * h - dot(xi, x)
        };
        let mut x: Vec<f64> = seed.iter().map(|c| c * seed_ratio / seed_h).collect();
        let mut g = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        let mut phi = objective(&x);
        for _ in 0..self.config.max_iterations {
            base.grad_half_sq_into(&x, &mut g);
            let resid: Vec<f64> = g.iter().zip(xi).map(|(a, b)| a - b).collect();
            let rnorm = norm2(&resid);
            if rnorm <= self.config.tolerance {
                break;
            }
            if base.hess_half_sq_into(&x, &mut hess).is_err() {
                return None;
            }
            let mut m = DMatrix::from_row_slice(n, n, &hess);
            let shift = 1e-12 * (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
            for i in 0..n {
                m[(i, i)] += shift;
            }
            let rhs = DVector::from_iterator(n, resid.iter().map(|v| -v));
            let step = m.lu().solve(&rhs)?;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
                let phi_t = objective(&trial);
                if phi_t <= phi + 1e-15 * phi.abs().max(1.0) {
                    x = trial;
                    phi = phi_t;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            if t * step.norm() <= 1e-17 * norm2(&x) {
                break;
            }
        }
        let h = base.eval(&x);
        if !(h > 0.0) {
            return None;
        }
        let value = dot(xi, &x) / h;
        Some((value, x.iter().map(|c| c / h).collect()))
    }

    /// `H₀₀(x) = sup_ξ ⟨x,ξ⟩/H₀(ξ)`, which should reproduce `H(x)`.
    pub fn bidual(&self, x: &[f64]) -> f64 {
        let len = norm2(x);
        if !(len > ZERO_THRESHOLD) {
            return 0.0;
        }
        let unit: Vec<f64> = x.iter().map(|v| v / len).collect();
        let ratio = |xi: &[f64]| dot(&unit, xi) / self.eval(xi);
        // the maximizer is the direction of ∇H(x); start from a coarse sweep
        let n = self.dim();
        let dirs = sphere_directions(n, 32 * n, 0xb1d);
        let mut best = dirs[0].clone();
        let mut best_val = f64::NEG_INFINITY;
        for d in dirs.iter() {
            let v = ratio(d);
            if v > best_val {
                best_val = v;
                best = d.clone();
            }
        }
        let (_, val) = sphere_refine(&ratio, &best, true, 1e-12);
        val.max(best_val) * len
    }
}

/// One named check of a [`ValidityReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub name: String,
    pub passed: bool,
    /// Worst observed residual; for `positivity` and `strong_convexity` the
    /// smallest observed value instead.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub family: String,
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub theta: ThetaBounds,
    pub checks: Vec<AxiomCheck>,
    pub all_passed: bool,
}

impl ValidityReport {
    pub fn check(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub mod tolerances {
    pub const HOMOGENEITY: f64 = 1e-10;
    pub const EULER: f64 = 1e-9;
    pub const TRIANGLE: f64 = 1e-12;
    pub const HOLDER: f64 = 1e-9;
    pub const GRADIENT_BOUND: f64 = 1e-9;
    pub const STRONG_CONVEXITY: f64 = 1e-8;
    pub const DUAL: f64 = 1e-6;
    pub const MONOTONICITY: f64 = 1e-12;
    pub const EQUIVALENCE: f64 = 1e-12;
}

/// Sampled check of the norm axioms and the `H`/`H₀` identities.
pub fn verify_minkowski(norm: &MinkowskiNorm, samples: usize, seed: u64) -> Result<ValidityReport> {
    verify_with_dual(&DualEvaluator::new(norm.clone()), samples, seed)
}

pub fn verify_with_dual(dual: &DualEvaluator, samples: usize, seed: u64) -> Result<ValidityReport> {
    if samples == 0 {
        return Err(Error::InvalidProblem(
            "at least one sample is required".into(),
        ));
    }
    let norm = dual.base();
    let n = norm.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|_| StandardNormal.sample(rng))
            .collect::<Vec<f64>>()
    };
    let theta = norm.theta_bounds();
    let grad_cap = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            norm.eval(&e).powi(2)
        })
        .sum::<f64>()
        .sqrt();

    let mut positivity = f64::INFINITY;
    let mut homogeneity: f64 = 0.0;
    let mut triangle: f64 = 0.0;
    let mut holder: f64 = 0.0;
    let mut euler: f64 = 0.0;
    let mut grad_bound: f64 = 0.0;
    let mut dual_of_grad: f64 = 0.0;
    let mut norm_of_dual_grad: f64 = 0.0;
    let mut reconstruction: f64 = 0.0;
    let mut monotonicity = f64::INFINITY;
    let mut equivalence: f64 = 0.0;
    let symmetric = norm.is_symmetric();

    for _ in 0..samples {
        let x = gauss(&mut rng);
        let y = gauss(&mut rng);
        let xi = gauss(&mut rng);
        let t: f64 = {
            let s: f64 = StandardNormal.sample(&mut rng);
            if symmetric {
                3.0 * s
            } else {
                (3.0 * s).abs()
            }
        };
        let xl = norm2(&x);
        let hx = norm.eval(&x);
        let hy = norm.eval(&y);
        positivity = positivity.min(hx / xl);

        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
        let hom = (norm.eval(&tx) - t.abs() * hx).abs() / (1.0 + t.abs() * hx);
        homogeneity = homogeneity.max(hom);

        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        triangle = triangle.max((norm.eval(&sum) - hx - hy) / (hx + hy));

        let h0xi = dual.eval(&xi);
        holder = holder.max((dot(&xi, &x) - h0xi * hx) / (norm2(&xi) * xl));

        let gx = norm.grad(&x)?;
        euler = euler.max((dot(&gx, &x) - hx).abs());
        grad_bound = grad_bound.max(norm2(&gx) - grad_cap);

        dual_of_grad = dual_of_grad.max((dual.eval(&gx) - 1.0).abs());
        let d0 = dual.solve(&x);
        norm_of_dual_grad = norm_of_dual_grad.max((norm.eval(&d0.maximizer) - 1.0).abs());
        let back = norm.grad(&d0.maximizer)?;
        let err = back
            .iter()
            .zip(&x)
            .map(|(b, xv)| (d0.value * b - xv).powi(2))
            .sum::<f64>()
            .sqrt();
        reconstruction = reconstruction.max(err / xl);

        let gy = norm.grad(&y)?;
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        for p in [2.0, 3.0, 4.0] {
            let fx: Vec<f64> = gx.iter().map(|v| hx.powf(p - 1.0) * v).collect();
            let fy: Vec<f64> = gy.iter().map(|v| hy.powf(p - 1.0) * v).collect();
            let pair: f64 = fx
                .iter()
                .zip(&fy)
                .zip(&diff)
                .map(|((a, b), d)| (a - b) * d)
                .sum();
            let scale = hx.powf(p) + hy.powf(p);
            monotonicity = monotonicity.min(pair / scale);
        }

        let lo = theta.theta1 * xl - hx;
        let hi = hx - theta.theta2 * xl;
        equivalence = equivalence.max(lo.max(hi) / hx);
    }

    // strong convexity on deterministic sphere samples (axes included)
    let mut min_eig = f64::INFINITY;
    let mut hess = vec![0.0; n * n];
    for d in sphere_directions(n, 256 * n, 0xc0 + n as u64) {
        norm.hess_half_sq_into(&d, &mut hess)?;
        let m = DMatrix::from_row_slice(n, n, &hess);
        let eig = SymmetricEigen::new(m).eigenvalues.min();
        min_eig = min_eig.min(eig);
    }

    use tolerances as tol;
    let check = |name: &str, worst: f64, tolerance: f64, passed: bool| AxiomCheck {
        name: name.to_string(),
        passed,
        worst,
        tolerance,
    };
    let checks = vec![
        check("positivity", positivity, 0.0, positivity > 0.0),
        check(
            "homogeneity",
            homogeneity,
            tol::HOMOGENEITY,
            homogeneity <= tol::HOMOGENEITY,
        ),
        check(
            "strong_convexity",
            min_eig,
            tol::STRONG_CONVEXITY,
            min_eig > tol::STRONG_CONVEXITY,
        ),
        check(
            "triangle",
            triangle,
            tol::TRIANGLE,
            triangle <= tol::TRIANGLE,
        ),
        check("holder", holder, tol::HOLDER, holder <= tol::HOLDER),
        check("euler", euler, tol::EULER, euler <= tol::EULER),
        check(
            "gradient_bound",
            grad_bound,
            tol::GRADIENT_BOUND,
            grad_bound <= tol::GRADIENT_BOUND,
        ),
        check(
            "dual_of_gradient",
            dual_of_grad,
            tol::DUAL,
            dual_of_grad <= tol::DUAL,
        ),
        check(
            "norm_of_dual_gradient",
            norm_of_dual_grad,
            tol::DUAL,
            norm_of_dual_grad <= tol::DUAL,
        ),
        check(
            "dual_reconstruction",
            reconstruction,
            tol::DUAL,
            reconstruction <= tol::DUAL,
        ),
        check(
            "monotonicity",
            monotonicity,
            tol::MONOTONICITY,
            monotonicity >= -tol::MONOTONICITY,
        ),
        check(
            "norm_equivalence",
            equivalence,
            tol::EQUIVALENCE,
            equivalence <= tol::EQUIVALENCE,
        ),
    ];
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(ValidityReport {
        family: norm.family().name().to_string(),
        dim: n,
        samples,
        seed,
        theta,
        checks,
        all_passed,
    })
}

/// JSON description: `{"family": "...", "params": {...}, "dim": n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub family: String,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
    pub dim: usize,
}

fn empty_object() -> serde_json::Value {
    serde_json::json!({})
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaParams {
    gamma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixParams {
    a: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LambdaMuParams {
    lambda: f64,
    mu: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockParams {
    q: f64,
    sizes: Vec<usize>,
    exponents: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RandersParams {
    t: Vec<f64>,
}

impl NormSpec {
    pub fn build(&self) -> Result<MinkowskiNorm> {
        fn params<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T> {
            serde_json::from_value(v.clone())
                .map_err(|e| Error::Config(format!("norm params: {e}")))
        }
        let family = match self.family.as_str() {
            "euclidean" => {
                let _: NoParams = params(&self.params)?;
                NormFamily::Euclidean
            }
            "scaled_1d" => NormFamily::Scaled1d {
                gamma: params::<GammaParams>(&self.params)?.gamma,
            },
            "linear_map" => NormFamily::LinearMap {
                a: params::<MatrixParams>(&self.params)?.a,
            },
            "lambda_mu" => {
                let p: LambdaMuParams = params(&self.params)?;
                NormFamily::LambdaMu {
                    lambda: p.lambda,
                    mu: p.mu,
                }
            }
            "block_pq" => {
                let p: BlockParams = params(&self.params)?;
                NormFamily::BlockPq {
                    q: p.q,
                    sizes: p.sizes,
                    exponents: p.exponents,
                    weights: p.weights,
                }
            }
            "randers" => NormFamily::Randers {
                t: params::<RandersParams>(&self.params)?.t,
            },
            other => return Err(Error::Config(format!("unknown norm family '{other}'"))),
        };
        MinkowskiNorm::new(family, self.dim)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    let scale = max_abs(a);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * a.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn block_norm(x: &[f64], p: f64, scale: f64) -> f64 {
    if x.len() == 1 {
        return (x[0] / scale).abs();
    }
    x.iter()
        .map(|v| (v / scale).abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

fn argminmax(v: &[f64]) -> (usize, usize) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[imin] {
            imin = i;
        }
        if *x > v[imax] {
            imax = i;
        }
    }
    (imin, imax)
}

/// Deterministic directions on the unit sphere. Dimension 2 uses equally
/// spaced angles; higher dimensions add the coordinate axes to seeded
/// Gaussian directions.
pub fn sphere_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(count + 2 * n);
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; n];
                    e[i] = s;
                    out.push(e);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            while out.len() < count + 2 * n {
                let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let l = norm2(&v);
                if l > 1e-12 {
                    out.push(v.iter().map(|c| c / l).collect());
                }
            }
            out
        }
    }
}

/// Local ascent (or descent) of a function on the Euclidean unit sphere by
/// golden-section searches along great circles in the tangent gradient
/// direction. The gradient is a central difference.
pub(crate) fn sphere_refine<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    maximize: bool,
    tol: f64,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let sign = if maximize { 1.0 } else { -1.0 };
    // evaluate on the radial projection so that rounding never leaves the sphere
    let obj = |x: &[f64]| {
        let l = norm2(x);
        let y: Vec<f64> = x.iter().map(|v| v / l).collect();
        sign * f(&y)
    };
    let mut x = start.to_vec();
    let l = norm2(&x);
    x.iter_mut().for_each(|v| *v /= l);
    let mut fx = obj(&x);
    if n == 1 {
        return (x, sign * fx);
    }
    let mut step = 0.1;
    for _ in 0..200 {
        // tangent gradient by central differences
        let hfd = 1e-6;
        let mut g = vec![0.0; n];
        let mut tmp = x.clone();
        for i in 0..n {
            tmp[i] = x[i] + hfd;
            let fp = obj(&tmp);
            tmp[i] = x[i] - hfd;
            let fm = obj(&tmp);
            tmp[i] = x[i];
            g[i] = (fp - fm) / (2.0 * hfd);
        }
        for _ in 0..2 {
            let radial = dot(&g, &x);
            g.iter_mut().zip(&x).for_each(|(gi, xi)| *gi -= radial * xi);
        }
        let gl = norm2(&g);
        if gl < 1e-15 {
            break;
        }
        let u: Vec<f64> = g.iter().map(|v| v / gl).collect();
        let along = |t: f64| -> Vec<f64> {
            x.iter()
                .zip(&u)
                .map(|(a, b)| a * t.cos() + b * t.sin())
                .collect()
        };
        // bracket: expand until the value drops
        let (mut a, mut b) = (0.0, step);
        let mut fb = obj(&along(b));
        while fb > fx && b < 1.5 {
            a = b;
            b *= 2.0;
            fb = obj(&along(b));
        }
        let lo = if a > 0.0 { a * 0.5 } else { 0.0 };
        let (t, ft) = golden_max(|t| obj(&along(t)), lo, b, tol * 0.1);
        if ft <= fx {
            step *= 0.25;
            if step < tol {
                break;
            }
            continue;
        }
        let improvement = ft - fx;
        x = along(t);
        let l = norm2(&x);
        x.iter_mut().for_each(|v| *v /= l);
        fx = ft;
        step = (2.0 * t).max(tol);
        if t < tol && improvement < 1e-16 * fx.abs().max(1.0) {
            break;
        }
    }
    (x, sign * fx)
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(a: [[f64; 2]; 2]) -> MinkowskiNorm {
        MinkowskiNorm::new(
            NormFamily::LinearMap {
                a: a.iter().map(|r| r.to_vec()).collect(),
            },
            2,
        )
        .unwrap()
    }

    fn lq(q: f64) -> MinkowskiNorm {
        MinkowskiNorm::new(
            NormFamily::BlockPq {
                q,
                sizes: vec![1, 1],
                exponents: vec![q, q],
                weights: vec![1.0, 1.0],
            },
            2,
        )
        .unwrap()
    }

    fn fd_grad(norm: &MinkowskiNorm, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (norm.eval(&p) - norm.eval(&m)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(MinkowskiNorm::euclidean(2).eval(&[3.0, 4.0]), 5.0);
        assert_eq!(linear([[2.0, 0.0], [0.0, 1.0]]).eval(&[1.0, 0.0]), 2.0);
        let lm = MinkowskiNorm::new(
            NormFamily::LambdaMu {
                lambda: 0.0,
                mu: 1.0,
            },
            2,
        )
        .unwrap();
        assert!((lm.eval(&[1.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn grad_examples() {
        let e = MinkowskiNorm::euclidean(2);
        assert_eq!(e.grad(&[0.0, 2.0]).unwrap(), vec![0.0, 1.0]);
        let s = MinkowskiNorm::new(NormFamily::Scaled1d { gamma: 3.0 }, 1).unwrap();
        assert_eq!(s.grad(&[-5.0]).unwrap(), vec![-3.0]);
        let r = MinkowskiNorm::new(NormFamily::Randers { t: vec![0.5, 0.0] }, 2).unwrap();
        let g = r.grad(&[1.0, 0.0]).unwrap();
        let fd = fd_grad(&r, &[1.0, 0.0]);
        assert!((g[0] - 1.5).abs() < 1e-14 && g[1].abs() < 1e-14);
        assert!((fd[0] - 1.5).abs() < 1e-8 && fd[1].abs() < 1e-8);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let e = MinkowskiNorm::euclidean(2);
        assert_eq!(e.grad(&[0.0, 0.0]), Err(Error::ZeroVector));
        assert!(matches!(
            e.hess_half_sq(&[0.0, 0.0]),
            Err(Error::ZeroVector)
        ));
        let d = DualEvaluator::new(e);
        assert_eq!(d.grad(&[0.0, 0.0]), Err(Error::ZeroVector));
    }

    #[test]
    fn hessian_examples() {
        let e = MinkowskiNorm::euclidean(3);
        assert_eq!(
            e.hess_half_sq(&[0.3, -1.0, 2.0]).unwrap(),
            DMatrix::identity(3, 3)
        );
        let a = [[2.0, 1.0], [0.5, 1.5]];
        let m = linear(a);
        let am = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 1.5]);
        let expect = am.transpose() * &am;
        let got = m.hess_half_sq(&[0.7, -0.2]).unwrap();
        assert!((got - expect).norm() < 1e-13);
    }

    #[test]
    fn lq_hessian_degenerates_on_axes() {
        // ℓ₄: Hessian of H²/2 at (1,1) is definite, but the second
        // coordinate direction is flat on the axis (1,0)
        let n = lq(4.0);
        let h = n.hess_half_sq(&[1.0, 0.0]).unwrap();
        let eig = SymmetricEigen::new(h).eigenvalues;
        assert!(eig.min().abs() < 1e-8, "{eig}");
        let h11 = n.hess_half_sq(&[1.0, 1.0]).unwrap();
        assert!(SymmetricEigen::new(h11).eigenvalues.min() > 0.5);
    }

    #[test]
    fn closed_form_hessians_match_finite_differences() {
        let norms = vec![
            MinkowskiNorm::new(
                NormFamily::LambdaMu {
                    lambda: 1.3,
                    mu: 0.7,
                },
                3,
            )
            .unwrap(),
            MinkowskiNorm::new(NormFamily::Randers { t: vec![0.3, -0.4] }, 2).unwrap(),
            MinkowskiNorm::new(
                NormFamily::BlockPq {
                    q: 2.0,
                    sizes: vec![2, 1],
                    exponents: vec![2.0, 2.0],
                    weights: vec![1.0, 3.0],
                },
                3,
            )
            .unwrap(),
        ];
        for norm in norms {
            let n = norm.dim();
            let x: Vec<f64> = (0..n)
                .map(|i| 0.4 + 0.3 * i as f64 * if i % 2 == 0 { 1.0 } else { -1.0 })
                .collect();
            let hess = norm.hess_half_sq(&x).unwrap();
            let h = 1e-5;
            for j in 0..n {
                let mut p = x.clone();
                let mut m = x.clone();
                p[j] += h;
                m[j] -= h;
                let mut gp = vec![0.0; n];
                let mut gm = vec![0.0; n];
                norm.grad_half_sq_into(&p, &mut gp);
                norm.grad_half_sq_into(&m, &mut gm);
                for i in 0..n {
                    let fd = (gp[i] - gm[i]) / (2.0 * h);
                    assert!(
                        (fd - hess[(i, j)]).abs() <= 1e-5 * (1.0 + fd.abs()),
                        "{}: ({i},{j}) fd {fd} vs {}",
                        norm.family().name(),
                        hess[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn dual_examples() {
        let s =
            DualEvaluator::new(MinkowskiNorm::new(NormFamily::Scaled1d { gamma: 4.0 }, 1).unwrap());
        assert!((s.eval(&[-3.0]) - 0.75).abs() < 1e-15);
        let e = DualEvaluator::new(MinkowskiNorm::euclidean(2));
        assert!((e.eval(&[3.0, 4.0]) - 5.0).abs() < 1e-15);
        let a = DualEvaluator::new(linear([[2.0, 0.0], [0.0, 1.0]]));
        assert!((a.eval(&[1.0, 0.0]) - 0.5).abs() < 1e-15);
        let g =
            DualEvaluator::new(MinkowskiNorm::new(NormFamily::Scaled1d { gamma: 2.0 }, 1).unwrap());
        assert_eq!(g.grad(&[7.0]).unwrap(), vec![0.5]);
        assert_eq!(e.grad(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn linear_map_dual_matches_sphere_sweep() {
        // brute force: max over 10⁶ angles of ⟨ξ,x⟩/H(x)
        let norm = linear([[2.0, 0.0], [0.0, 1.0]]);
        let xi = [1.0, 0.0];
        let count = 1_000_000;
        let mut best: f64 = 0.0;
        for k in 0..count {
            let t = std::f64::consts::TAU * k as f64 / count as f64;
            let x = [t.cos(), t.sin()];
            best = best.max(dot(&xi, &x) / norm.eval(&x));
        }
        assert!((best - 0.5).abs() < 1e-12);
        let numeric = DualEvaluator::with_config(
            norm,
            DualSolverConfig {
                force_numeric: true,
                ..Default::default()
            },
        );
        assert!((numeric.eval(&xi) - best).abs() < 1e-12);
    }

    #[test]
    fn numeric_dual_agrees_with_closed_form() {
        let norm = linear([[2.0, 0.5], [-0.3, 1.0]]);
        let closed = DualEvaluator::new(norm.clone());
        let numeric = DualEvaluator::with_config(
            norm,
            DualSolverConfig {
                force_numeric: true,
                ..Default::default()
            },
        );
        for k in 0..50 {
            let t = 0.37 * k as f64;
            let xi = [t.cos() * (1.0 + 0.1 * k as f64), t.sin()];
            let a = closed.solve(&xi);
            let b = numeric.solve(&xi);
            assert!(
                (a.value - b.value).abs() < 1e-12 * a.value,
                "{} {}",
                a.value,
                b.value
            );
            assert!(!b.stalled);
            for i in 0..2 {
                assert!((a.maximizer[i] - b.maximizer[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dual_of_dual_recovers_base() {
        for norm in [
            MinkowskiNorm::new(
                NormFamily::LambdaMu {
                    lambda: 1.0,
                    mu: 1.0,
                },
                2,
            )
            .unwrap(),
            MinkowskiNorm::new(NormFamily::Randers { t: vec![0.4, 0.2] }, 2).unwrap(),
        ] {
            let dual = DualEvaluator::new(norm.clone());
            for x in [[1.0, 0.0], [0.3, -0.8], [-1.0, 2.0]] {
                let b = dual.bidual(&x);
                assert!(
                    (b - norm.eval(&x)).abs() < 1e-7 * norm.eval(&x),
                    "{b} vs {}",
                    norm.eval(&x)
                );
            }
        }
    }

    #[test]
    fn dual_gradient_has_unit_norm() {
        let norm = linear([[2.0, 0.0], [0.0, 1.0]]);
        let dual = DualEvaluator::new(norm.clone());
        let g = dual.grad(&[1.0, 1.0]).unwrap();
        assert!((norm.eval(&g) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn theta_bounds_examples() {
        let t = MinkowskiNorm::euclidean(2).theta_bounds();
        assert!(
            (t.theta1 - 1.0).abs() < 1e-12 && (t.theta2 - 1.0).abs() < 1e-12,
            "{t:?}"
        );
        let t = linear([[2.0, 0.0], [0.0, 1.0]]).theta_bounds();
        assert!((t.theta1 - 1.0).abs() < 1e-10 && (t.theta2 - 2.0).abs() < 1e-10);

        // brute-force sweep oracle for H_{1,1}
        let lm = MinkowskiNorm::new(
            NormFamily::LambdaMu {
                lambda: 1.0,
                mu: 1.0,
            },
            2,
        )
        .unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for k in 0..100_000 {
            let a = std::f64::consts::TAU * k as f64 / 100_000.0;
            let (c, s) = (a.cos(), a.sin());
            let v = ((c.powi(4) + s.powi(4)).sqrt() + 1.0).sqrt();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let t = lm.theta_bounds();
        assert!((t.theta1 - lo).abs() < 1e-9, "{} {lo}", t.theta1);
        assert!((t.theta2 - hi).abs() < 1e-9, "{} {hi}", t.theta2);
    }

    #[test]
    fn randers_construction() {
        let long = MinkowskiNorm::new(NormFamily::Randers { t: vec![1.2, 0.0] }, 2);
        assert!(matches!(long, Err(Error::InvalidNorm(_))));
        assert!(MinkowskiNorm::new(NormFamily::Randers { t: vec![0.6, 0.8] }, 2).is_ok());
    }

    #[test]
    fn euclidean_report_passes() {
        let r = verify_minkowski(&MinkowskiNorm::euclidean(2), 1000, 7).unwrap();
        assert!(r.all_passed, "{r:#?}");
        for c in &r.checks {
            if !matches!(
                c.name.as_str(),
                "positivity" | "strong_convexity" | "monotonicity"
            ) {
                assert!(c.worst < 1e-9, "{}: {}", c.name, c.worst);
            }
        }
    }

    #[test]
    fn lq_report_fails_strong_convexity() {
        let r = verify_minkowski(&lq(4.0), 200, 1).unwrap();
        assert!(!r.all_passed);
        assert!(!r.check("strong_convexity").unwrap().passed);
        assert!(r.check("triangle").unwrap().passed);
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"family":"linear_map","params":{"a":[[2,0],[0,1]]},"dim":2}"#;
        let spec: NormSpec = serde_json::from_str(json).unwrap();
        let norm = spec.build().unwrap();
        assert_eq!(norm.eval(&[1.0, 0.0]), 2.0);
        assert_eq!(norm.spec().build().unwrap().eval(&[0.0, 3.0]), 3.0);
        let bad = r#"{"family":"euclidean","params":{},"dim":2,"extra":1}"#;
        assert!(serde_json::from_str::<NormSpec>(bad).is_err());
        let bad_params = NormSpec {
            family: "lambda_mu".into(),
            params: serde_json::json!({"lambda":1,"mu":1,"nu":2}),
            dim: 2,
        };
        assert!(matches!(bad_params.build(), Err(Error::Config(_))));
    }
}
