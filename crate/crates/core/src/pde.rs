//! Planar Dirichlet problems `-Δ_H^p u + f(u) = s` solved as minimizers of
//! the discrete energy `J(u) = ∫ H^p(∇u)/p + F(u) - s u`, and large
//! solutions obtained as the increasing limit of Dirichlet solutions with
//! boundary data `k → ∞`.
//!
//! The mesh is the Cartesian grid clipped to the domain. Each cell carries
//! both diagonal triangulations with weight 1/2, which keeps the scheme
//! symmetric under reflections of the grid. Grid nodes closer than `h/4` to
//! the boundary, and outside nodes of cells that touch the interior, are
//! projected onto the boundary and carry the Dirichlet data.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AnisotropicDistanceField, Domain2D};
use crate::linalg::{pcg, CsrMatrix};
use crate::nonlinearity::Nonlinearity;
use crate::norms::MinkowskiNorm;
use crate::radial::{solve_ball_large, RadialOptions};

/// Snapping distance in units of `h`.
const SNAP: f64 = 0.25;

pub type PointFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Dirichlet data on the boundary.
#[derive(Clone)]
pub enum BoundaryData {
    Constant(f64),
    Function(PointFn),
}

impl BoundaryData {
    pub fn at(&self, x: [f64; 2]) -> f64 {
        match self {
            BoundaryData::Constant(k) => *k,
            BoundaryData::Function(g) => g(x),
        }
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Constant(k) => write!(f, "Constant({k})"),
            BoundaryData::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Clone)]
pub struct DirichletProblem {
    pub domain: Domain2D,
    pub norm: MinkowskiNorm,
    pub nl: Nonlinearity,
    pub g: BoundaryData,
    /// Right-hand side `s`, zero when absent.
    pub source: Option<PointFn>,
}

impl fmt::Debug for DirichletProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirichletProblem")
            .field("norm", &self.norm)
            .field("nl", &self.nl)
            .field("g", &self.g)
            .field("source", &self.source.as_ref().map(|_| ".."))
            .finish()
    }
}

fn check_operator(norm: &MinkowskiNorm, nl: &Nonlinearity) -> Result<()> {
    if norm.dim() != 2 {
        return Err(Error::InvalidProblem(
            "the planar solver needs a two-dimensional norm".into(),
        ));
    }
    if !(nl.p() >= 2.0) {
        return Err(Error::InvalidProblem(format!(
            "the planar solver needs p >= 2, got {}",
            nl.p()
        )));
    }
    Ok(())
}

impl DirichletProblem {
    pub fn new(
        domain: Domain2D,
        norm: MinkowskiNorm,
        nl: Nonlinearity,
        g: BoundaryData,
    ) -> Result<Self> {
        check_operator(&norm, &nl)?;
        if let BoundaryData::Constant(k) = g {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::InvalidProblem(format!(
                    "boundary data must be nonnegative, got {k}"
                )));
            }
        }
        Ok(Self {
            domain,
            norm,
            nl,
            g,
            source: None,
        })
    }

    pub fn with_source(mut self, s: PointFn) -> Self {
        self.source = Some(s);
        self
    }

    pub fn p(&self) -> f64 {
        self.nl.p()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Triangle {
    v: [usize; 3],
    grads: [[f64; 2]; 3],
    /// weight times area
    wa: f64,
    /// edge midpoints opposite to each vertex
    mids: [[f64; 2]; 3],
}

/// Grid clipped to a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMesh {
    pub h: f64,
    /// Node positions; boundary nodes sit on the curve.
    pub nodes: Vec<[f64; 2]>,
    /// Grid indices of the node before projection.
    pub grid_index: Vec<(i64, i64)>,
    pub on_boundary: Vec<bool>,
    /// Lumped mass.
    pub mass: Vec<f64>,
    triangles: Vec<Triangle>,
    free: Vec<Option<usize>>,
    free_nodes: Vec<usize>,
}

impl GridMesh {
    pub fn new(domain: &Domain2D, h: f64) -> Result<Self> {
        let diam = domain.diameter();
        if !(h > 0.0) || diam / h < 16.0 {
            return Err(Error::InvalidProblem(format!(
                "grid spacing {h} does not resolve a domain of diameter {diam}"
            )));
        }
        let (lo, hi) = domain.bounding_box();
        let nx = ((hi[0] - lo[0]) / h).ceil() as i64 + 1;
        let ny = ((hi[1] - lo[1]) / h).ceil() as i64 + 1;
        let w = (nx + 2) as usize;
        let hgt = (ny + 2) as usize;
        let at = |i: i64, j: i64| [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
        let idx = |i: i64, j: i64| (j + 1) as usize * w + (i + 1) as usize;
        // 0 inactive, 1 interior, 2 boundary
        let mut kind = vec![0u8; w * hgt];
        for j in -1..=ny {
            for i in -1..=nx {
                let x = at(i, j);
                if domain.contains(x) && domain.nearest_euclidean(x).0 > SNAP * h {
                    kind[idx(i, j)] = 1;
                }
            }
        }
        let corners = |i: i64, j: i64| [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
        let mut cells = Vec::new();
        for j in -1..ny {
            for i in -1..nx {
                let c = corners(i, j);
                if c.iter().any(|&(a, b)| kind[idx(a, b)] == 1) {
                    for &(a, b) in &c {
                        if kind[idx(a, b)] == 0 {
                            kind[idx(a, b)] = 2;
                        }
                    }
                    cells.push((i, j));
                }
            }
        }
        let mut id = vec![usize::MAX; w * hgt];
        let mut nodes = Vec::new();
        let mut grid_index = Vec::new();
        let mut on_boundary = Vec::new();
        for j in -1..=ny {
            for i in -1..=nx {
                let k = kind[idx(i, j)];
                if k == 0 {
                    continue;
                }
                id[idx(i, j)] = nodes.len();
                let x = at(i, j);
                nodes.push(if k == 1 {
                    x
                } else {
                    domain.nearest_euclidean(x).1
                });
                grid_index.push((i, j));
                on_boundary.push(k == 2);
            }
        }
        let mut triangles = Vec::with_capacity(4 * cells.len());
        let mut mass = vec![0.0; nodes.len()];
        for (i, j) in cells {
            let c = corners(i, j).map(|(a, b)| id[idx(a, b)]);
            for tri in [
                [c[0], c[1], c[2]],
                [c[0], c[2], c[3]],
                [c[0], c[1], c[3]],
                [c[1], c[2], c[3]],
            ] {
                let [pa, pb, pc] = tri.map(|v| nodes[v]);
                let area2 = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
                if area2 <= 1e-10 * h * h {
                    continue;
                }
                let grads = [
                    [(pb[1] - pc[1]) / area2, (pc[0] - pb[0]) / area2],
                    [(pc[1] - pa[1]) / area2, (pa[0] - pc[0]) / area2],
                    [(pa[1] - pb[1]) / area2, (pb[0] - pa[0]) / area2],
                ];
                let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                let wa = 0.25 * area2;
                for &v in &tri {
                    mass[v] += wa / 3.0;
                }
                triangles.push(Triangle {
                    v: tri,
                    grads,
                    wa,
                    mids: [mid(pb, pc), mid(pa, pc), mid(pa, pb)],
                });
            }
        }
        let mut free = vec![None; nodes.len()];
        let mut free_nodes = Vec::new();
        for (v, b) in on_boundary.iter().enumerate() {
            if !b {
                free[v] = Some(free_nodes.len());
                free_nodes.push(v);
            }
        }
        Ok(Self {
            h,
            nodes,
            grid_index,
            on_boundary,
            mass,
            triangles,
            free,
            free_nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn free_count(&self) -> usize {
        self.free_nodes.len()
    }

    /// Area covered by the triangles.
    pub fn area(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// Minimizer of the discrete energy on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub mesh: Arc<GridMesh>,
    /// One value per mesh node, boundary nodes included.
    pub values: Vec<f64>,
    pub energy: f64,
    /// Max over free nodes of `|∂J/∂u_i| / m_i`.
    pub residual: f64,
    pub converged: bool,
    pub newton_iterations: usize,
}

impl DiscreteField {
    pub fn h(&self) -> f64 {
        self.mesh.h
    }

    /// `x,y,u` rows in node order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,u\n");
        for (x, u) in self.mesh.nodes.iter().zip(&self.values) {
            s.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", x[0], x[1], u));
        }
        s
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Initial guess for the free nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Zero,
    Values(Vec<f64>),
    /// Uniform in `[0, scale]`.
    Random {
        seed: u64,
        scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Regularization stages relative to the gradient scale; the last should be 0.
    pub eps_schedule: Vec<f64>,
    pub tolerance: f64,
    pub max_newton: usize,
    pub initial: Initial,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps_schedule: vec![1e-2, 1e-4, 1e-6, 0.0],
            tolerance: 1e-6,
            max_newton: 200,
            initial: Initial::Zero,
        }
    }
}

struct Operator<'a> {
    mesh: &'a GridMesh,
    norm: &'a MinkowskiNorm,
    nl: &'a Nonlinearity,
    p: f64,
    /// consistent load per node
    load: Vec<f64>,
    quadratic_hessian: Vec<f64>,
}

impl<'a> Operator<'a> {
    fn new(
        mesh: &'a GridMesh,
        norm: &'a MinkowskiNorm,
        nl: &'a Nonlinearity,
        source: Option<&PointFn>,
    ) -> Self {
        let mut load = vec![0.0; mesh.len()];
        if let Some(s) = source {
            for t in &mesh.triangles {
                let sm = t.mids.map(|m| s(m));
                for a in 0..3 {
                    // midpoint rule: φ_a is 1/2 on the two edges through a
                    let others: f64 = (0..3).filter(|&b| b != a).map(|b| sm[b]).sum();
                    load[t.v[a]] += t.wa / 6.0 * others;
                }
            }
        }
        let mut quadratic_hessian = vec![0.0; 4];
        norm.hess_half_sq_into(&[1.0, 0.0], &mut quadratic_hessian)
            .expect("nonzero direction");
        Self {
            mesh,
            norm,
            nl,
            p: nl.p(),
            load,
            quadratic_hessian,
        }
    }

    fn slope(t: &Triangle, u: &[f64]) -> [f64; 2] {
        let mut xi = [0.0; 2];
        for a in 0..3 {
            xi[0] += u[t.v[a]] * t.grads[a][0];
            xi[1] += u[t.v[a]] * t.grads[a][1];
        }
        xi
    }

    /// Energy with regularization `eps`; `full` also counts boundary nodes.
    fn energy(&self, u: &[f64], eps: f64, full: bool) -> f64 {
        let mut e = 0.0;
        for t in &self.mesh.triangles {
            let h = self.norm.eval(&Self::slope(t, u));
            e += t.wa / self.p * (h * h + eps * eps).powf(self.p / 2.0);
        }
        for v in 0..self.mesh.len() {
            if full || !self.mesh.on_boundary[v] {
                e += self.mesh.mass[v] * self.nl.big_f(u[v]) - self.load[v] * u[v];
            }
        }
        e
    }

    /// Gradient over free nodes and the matching absolute flux scale.
    fn gradient(&self, u: &[f64], eps: f64, grad: &mut [f64], scale: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        scale.iter_mut().for_each(|g| *g = 0.0);
        let mut gs = [0.0; 2];
        for t in &self.mesh.triangles {
            let xi = Self::slope(t, u);
            let h = self.norm.eval(&xi);
            let factor = (h * h + eps * eps).powf((self.p - 2.0) / 2.0);
            self.norm.grad_half_sq_into(&xi, &mut gs);
            for a in 0..3 {
                if let Some(i) = self.mesh.free[t.v[a]] {
                    let c = t.wa * factor * (gs[0] * t.grads[a][0] + gs[1] * t.grads[a][1]);
                    grad[i] += c;
                    scale[i] += c.abs();
                }
            }
        }
        for (i, &v) in self.mesh.free_nodes.iter().enumerate() {
            let m = self.mesh.mass[v];
            let fu = self.nl.f(u[v]);
            grad[i] += m * fu - self.load[v];
            scale[i] += m * fu + self.load[v].abs();
        }
    }

    fn pattern(&self) -> (CsrMatrix, Vec<[usize; 9]>, Vec<usize>) {
        let n = self.mesh.free_count();
        let mut trip = Vec::with_capacity(9 * self.mesh.triangles.len());
        for i in 0..n {
            trip.push((i, i, 0.0));
        }
        for t in &self.mesh.triangles {
            for a in 0..3 {
                for b in 0..3 {
                    if let (Some(i), Some(j)) = (self.mesh.free[t.v[a]], self.mesh.free[t.v[b]]) {
                        trip.push((i, j, 0.0));
                    }
                }
            }
        }
        let m = CsrMatrix::from_triplets(n, trip);
        let slots = self
            .mesh
            .triangles
            .iter()
            .map(|t| {
                let mut s = [usize::MAX; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        if let (Some(i), Some(j)) = (self.mesh.free[t.v[a]], self.mesh.free[t.v[b]])
                        {
                            s[3 * a + b] = m.slot(i, j).expect("entry in pattern");
                        }
                    }
                }
                s
            })
            .collect();
        let diag = (0..n)
            .map(|i| m.slot(i, i).expect("diagonal in pattern"))
            .collect();
        (m, slots, diag)
    }

    fn hessian(
        &self,
        u: &[f64],
        eps: f64,
        guard: f64,
        hess: &mut CsrMatrix,
        slots: &[[usize; 9]],
        diag: &[usize],
    ) {
        let vals = hess.values_mut();
        vals.iter_mut().for_each(|v| *v = 0.0);
        let mut hs = [0.0; 4];
        let mut gs = [0.0; 2];
        let e = eps.max(guard);
        for (t, slot) in self.mesh.triangles.iter().zip(slots) {
            let xi = Self::slope(t, u);
            let h = self.norm.eval(&xi);
            if self.norm.hess_half_sq_into(&xi, &mut hs).is_err() {
                hs.copy_from_slice(&self.quadratic_hessian);
            }
            self.norm.grad_half_sq_into(&xi, &mut gs);
            let r2 = h * h + e * e;
            let f1 = r2.powf((self.p - 2.0) / 2.0);
            let f2 = if self.p == 2.0 {
                0.0
            } else {
                (self.p - 2.0) * r2.powf((self.p - 4.0) / 2.0)
            };
            let m = [
                f1 * hs[0] + f2 * gs[0] * gs[0],
                f1 * hs[1] + f2 * gs[0] * gs[1],
                f1 * hs[2] + f2 * gs[1] * gs[0],
                f1 * hs[3] + f2 * gs[1] * gs[1],
            ];
            for a in 0..3 {
                let ga = t.grads[a];
                let ma = [m[0] * ga[0] + m[2] * ga[1], m[1] * ga[0] + m[3] * ga[1]];
                for b in 0..3 {
                    let s = slot[3 * a + b];
                    if s != usize::MAX {
                        vals[s] += t.wa * (ma[0] * t.grads[b][0] + ma[1] * t.grads[b][1]);
                    }
                }
            }
        }
        for (i, &v) in self.mesh.free_nodes.iter().enumerate() {
            let fp = self.nl.f_prime(u[v].max(0.0)).min(1e30);
            vals[diag[i]] += self.mesh.mass[v] * fp;
        }
    }
}

struct Outcome {
    iterations: usize,
    residual: f64,
    converged: bool,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton with ε-continuation on the free nodes of `u`.
fn minimize(op: &Operator, u: &mut [f64], opts: &SolveOptions, diam: f64) -> Result<Outcome> {
    let mesh = op.mesh;
    let n = mesh.free_count();
    let (mut hess, slots, diag) = op.pattern();
    let mut grad = vec![0.0; n];
    let mut scale = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut trial = u.to_vec();
    let gscale = max_abs(u).max(1.0) / diam;
    let schedule: Vec<f64> = if op.p == 2.0 {
        vec![0.0]
    } else {
        opts.eps_schedule.clone()
    };
    let mut total = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for (stage, rel_eps) in schedule.iter().enumerate() {
        let last = stage + 1 == schedule.len();
        let eps = rel_eps * gscale;
        let guard = 1e-12 * gscale;
        converged = false;
        for _ in 0..opts.max_newton {
            op.gradient(u, eps, &mut grad, &mut scale);
            residual = mesh
                .free_nodes
                .iter()
                .zip(&grad)
                .map(|(&v, g)| (g / mesh.mass[v]).abs())
                .fold(0.0, f64::max);
            let umax = mesh.free_nodes.iter().map(|&v| u[v]).fold(0.0, f64::max);
            let target = if last {
                opts.tolerance
            } else {
                opts.tolerance.max(1e-3)
            };
            let backward = grad
                .iter()
                .zip(&scale)
                .map(|(g, s)| if *s > 0.0 { g.abs() / s } else { 0.0 })
                .fold(0.0, f64::max);
            if residual <= target * (1.0 + op.nl.f(umax)) && backward <= target * 1e-2 {
                converged = true;
                break;
            }
            total += 1;
            op.hessian(u, eps, guard, &mut hess, &slots, &diag);
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            dir.iter_mut().for_each(|d| *d = 0.0);
            pcg(&hess, &rhs, &mut dir, 1e-10, 20 * n + 100);
            let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            if !(slope < 0.0) {
                return Err(Error::NonconvexDetected { increase: slope });
            }
            let e0 = op.energy(u, eps, false);
            // below this the energy difference is round-off; use the slope instead
            let derivative_mode = -slope < 1e-10 * e0.abs().max(1.0);
            let mut t = 1.0;
            let mut accepted = false;
            let mut g2 = vec![0.0; n];
            let mut s2 = vec![0.0; n];
            for _ in 0..60 {
                for (i, &v) in mesh.free_nodes.iter().enumerate() {
                    trial[v] = u[v] + t * dir[i];
                }
                let ok = if derivative_mode {
                    op.gradient(&trial, eps, &mut g2, &mut s2);
                    let slope_t: f64 = g2.iter().zip(&dir).map(|(g, d)| g * d).sum();
                    0.5 * (slope + slope_t) <= 1e-4 * slope
                } else {
                    op.energy(&trial, eps, false) <= e0 + 1e-4 * t * slope
                };
                if ok {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            u.copy_from_slice(&trial);
        }
    }
    Ok(Outcome {
        iterations: total,
        residual,
        converged,
    })
}

fn initial_values(
    mesh: &GridMesh,
    init: &Initial,
    boundary: impl Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    let mut u = vec![0.0; mesh.len()];
    match init {
        Initial::Zero => {}
        Initial::Values(v) => {
            if v.len() != mesh.len() {
                return Err(Error::InvalidProblem(format!(
                    "initial guess has {} values for {} nodes",
                    v.len(),
                    mesh.len()
                )));
            }
            u.copy_from_slice(v);
        }
        Initial::Random { seed, scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            u.iter_mut().for_each(|x| *x = rng.random::<f64>() * scale);
        }
    }
    for v in 0..mesh.len() {
        if mesh.on_boundary[v] {
            let g = boundary(v);
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::InvalidProblem(format!(
                    "boundary data must be nonnegative, got {g}"
                )));
            }
            u[v] = g;
        }
    }
    Ok(u)
}

/// Discrete energy of a field: `Σ_T |T| H^p(∇u)/p + Σ_i m_i F(u_i) - load·u`,
/// boundary nodes included.
#[allow(non_snake_case)]
pub fn energy_J(prob: &DirichletProblem, field: &DiscreteField) -> f64 {
    let op = Operator::new(&field.mesh, &prob.norm, &prob.nl, prob.source.as_ref());
    op.energy(&field.values, 0.0, true)
}

/// Minimizer on a given mesh; the result is flagged when Newton stalls.
pub fn solve_dirichlet_on(
    prob: &DirichletProblem,
    mesh: Arc<GridMesh>,
    opts: &SolveOptions,
) -> Result<DiscreteField> {
    check_operator(&prob.norm, &prob.nl)?;
    let mut u = initial_values(&mesh, &opts.initial, |v| prob.g.at(mesh.nodes[v]))?;
    let op = Operator::new(&mesh, &prob.norm, &prob.nl, prob.source.as_ref());
    let out = minimize(&op, &mut u, opts, prob.domain.diameter())?;
    let energy = op.energy(&u, 0.0, true);
    drop(op);
    Ok(DiscreteField {
        mesh,
        values: u,
        energy,
        residual: out.residual,
        converged: out.converged,
        newton_iterations: out.iterations,
    })
}

pub fn solve_dirichlet_with(
    prob: &DirichletProblem,
    h: f64,
    opts: &SolveOptions,
) -> Result<DiscreteField> {
    let mesh = Arc::new(GridMesh::new(&prob.domain, h)?);
    solve_dirichlet_on(prob, mesh, opts)
}

/// Minimizer of the discrete energy at grid spacing `h`.
pub fn solve_dirichlet(prob: &DirichletProblem, h: f64) -> Result<DiscreteField> {
    let field = solve_dirichlet_with(prob, h, &SolveOptions::default())?;
    if !field.converged {
        return Err(Error::NoConvergence {
            what: "Dirichlet Newton",
            iterations: field.newton_iterations,
            residual: field.residual,
        });
    }
    Ok(field)
}

/// Large-solution problem: operator and domain, no boundary data.
#[derive(Debug, Clone)]
pub struct LargeProblem {
    pub field: AnisotropicDistanceField,
    pub nl: Nonlinearity,
}

impl LargeProblem {
    pub fn new(field: AnisotropicDistanceField, nl: Nonlinearity) -> Result<Self> {
        check_operator(field.norm(), &nl)?;
        nl.profile()?;
        Ok(Self { field, nl })
    }

    pub fn domain(&self) -> &Domain2D {
        self.field.domain()
    }

    pub fn norm(&self) -> &MinkowskiNorm {
        self.field.norm()
    }

    fn dirichlet(&self, k: f64) -> Result<DirichletProblem> {
        DirichletProblem::new(
            self.domain().clone(),
            self.norm().clone(),
            self.nl.clone(),
            BoundaryData::Constant(k),
        )
    }

    /// Largest boundary value the grid resolves: `Φ(h θ₁'/2)`.
    pub fn k_cap(&self, h: f64) -> Result<f64> {
        let (theta1, _) = self.field.dual_theta();
        self.nl.profile()?.phi(0.5 * h * theta1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSchedule {
    pub k0: f64,
    pub factor: f64,
    /// Overrides the resolution cap when set.
    pub k_max: Option<f64>,
    pub max_steps: usize,
    /// Interior sup-change that ends the schedule.
    pub interior_tol: f64,
}

impl Default for KSchedule {
    fn default() -> Self {
        Self {
            k0: 1.0,
            factor: 2.0,
            k_max: None,
            max_steps: 60,
            interior_tol: 1e-5,
        }
    }
}

/// Upper bound from the largest inscribed Wulff ball at each interior node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorBound {
    /// Center value of the unit-ball large solution.
    pub unit_center: f64,
    /// `max u(x) / bound(x)` over interior nodes.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeSolution2D {
    pub fields_by_k: Vec<(f64, DiscreteField)>,
    /// `δ_{H₀}` per mesh node.
    pub deltas: Vec<f64>,
    /// Nodes with `δ_{H₀} > diam / 10`.
    pub interior: Vec<bool>,
    pub interior_converged: bool,
    /// Stopped at `k_max` before the interior change met the tolerance.
    pub capped: bool,
    pub last_change: f64,
    /// Largest decrease `u_k - u_{k'}` over `k < k'` at shared nodes.
    pub monotonicity_violation: f64,
    pub bound: Option<InteriorBound>,
}

impl LargeSolution2D {
    pub fn limit(&self) -> &DiscreteField {
        &self.fields_by_k.last().expect("at least one field").1
    }

    pub fn mesh(&self) -> &GridMesh {
        &self.limit().mesh
    }
}

fn node_deltas(field: &AnisotropicDistanceField, mesh: &GridMesh) -> Vec<f64> {
    mesh.nodes
        .iter()
        .zip(&mesh.on_boundary)
        .map(|(x, b)| {
            if *b {
                0.0
            } else {
                field.delta_unchecked(*x).delta
            }
        })
        .collect()
}

fn interior_change(a: &[f64], b: &[f64], mask: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|((x, y), _)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Center value of the large solution on the unit Wulff ball, used for the
/// scaling bound `u(x) ≤ δ(x)^{-p/(q+1-p)} U₁(0)` of power nonlinearities.
fn unit_ball_center(nl: &Nonlinearity) -> Option<f64> {
    nl.power_exponent()?;
    let lim = solve_ball_large(1.0, 2, nl, &RadialOptions::default()).ok()?;
    Some(lim.limit().values[0])
}

fn interior_bound(
    prob: &LargeProblem,
    field: &DiscreteField,
    deltas: &[f64],
    interior: &[bool],
) -> Option<InteriorBound> {
    if !prob.norm().is_symmetric() {
        return None;
    }
    let q = prob.nl.power_exponent()?;
    let p = prob.nl.p();
    let unit_center = unit_ball_center(&prob.nl)?;
    let worst_ratio = field
        .values
        .iter()
        .zip(deltas)
        .zip(interior)
        .filter(|(_, m)| **m)
        .map(|((u, d), _)| u / (unit_center * d.powf(-p / (q + 1.0 - p))))
        .fold(0.0, f64::max);
    Some(InteriorBound {
        unit_center,
        worst_ratio,
    })
}

/// Increasing sequence of Dirichlet solutions with `g = k` along a geometric
/// schedule, stopped when the interior stabilizes or `k` reaches the cap.
pub fn monotone_large_solution(
    prob: &LargeProblem,
    h: f64,
    schedule: &KSchedule,
    opts: &SolveOptions,
) -> Result<LargeSolution2D> {
    let mesh = Arc::new(GridMesh::new(prob.domain(), h)?);
    let deltas = node_deltas(&prob.field, &mesh);
    let cut = prob.domain().diameter() / 10.0;
    let interior: Vec<bool> = deltas
        .iter()
        .zip(&mesh.on_boundary)
        .map(|(d, b)| !b && *d > cut)
        .collect();
    let cap = match schedule.k_max {
        Some(k) => k,
        None => prob.k_cap(h)?,
    };
    if !(schedule.k0 > 0.0) || !(schedule.factor > 1.0) || !(cap > 0.0) {
        return Err(Error::InvalidProblem(
            "k schedule must start positive and grow".into(),
        ));
    }
    let mut fields: Vec<(f64, DiscreteField)> = Vec::new();
    let mut last_change = f64::INFINITY;
    let mut violation: f64 = 0.0;
    let mut k = schedule.k0.min(cap);
    for _ in 0..schedule.max_steps {
        let dp = prob.dirichlet(k)?;
        let mut o = opts.clone();
        if let Some((_, prev)) = fields.last() {
            o.initial = Initial::Values(prev.values.clone());
        }
        let field = solve_dirichlet_on(&dp, mesh.clone(), &o)?;
        if !field.converged {
            return Err(Error::NoConvergence {
                what: "Dirichlet Newton",
                iterations: field.newton_iterations,
                residual: field.residual,
            });
        }
        if let Some((_, prev)) = fields.last() {
            last_change = interior_change(&prev.values, &field.values, &interior);
            for (a, b) in prev.values.iter().zip(&field.values) {
                violation = violation.max(a - b);
            }
        }
        fields.push((k, field));
        let at_cap = k >= cap;
        if last_change < schedule.interior_tol || at_cap {
            let bound = interior_bound(prob, &fields.last().expect("pushed").1, &deltas, &interior);
            return Ok(LargeSolution2D {
                fields_by_k: fields,
                deltas,
                interior,
                interior_converged: last_change < schedule.interior_tol,
                capped: at_cap && last_change >= schedule.interior_tol,
                last_change,
                monotonicity_violation: violation,
                bound,
            });
        }
        k = (k * schedule.factor).min(cap);
    }
    Err(Error::NotStabilized { last_change })
}

/// Which distance the asymptotic ratio is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    Anisotropic,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymBand {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn band_stats(lo: f64, hi: f64, vals: Vec<f64>) -> AsymBand {
    AsymBand {
        lo,
        hi,
        count: vals.len(),
        min: vals.iter().copied().fold(f64::INFINITY, f64::min),
        max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        median: median(vals),
    }
}

/// `Ψ(u(x)) / δ(x)` over free nodes whose distance lies in each band.
/// Bands use the anisotropic distance; `kind` selects the denominator.
pub fn boundary_asym_check(
    sol: &LargeSolution2D,
    field: &AnisotropicDistanceField,
    nl: &Nonlinearity,
    bands: &[(f64, f64)],
    kind: DistanceKind,
) -> Result<Vec<AsymBand>> {
    let profile = nl.profile()?;
    let lim = sol.limit();
    let mesh = &lim.mesh;
    let mut out = Vec::with_capacity(bands.len());
    for &(lo, hi) in bands {
        let mut vals = Vec::new();
        for v in 0..mesh.len() {
            let d = sol.deltas[v];
            if mesh.on_boundary[v] || !(d >= lo && d <= hi) || !(lim.values[v] > 0.0) {
                continue;
            }
            let denom = match kind {
                DistanceKind::Anisotropic => d,
                DistanceKind::Euclidean => field.domain().nearest_euclidean(mesh.nodes[v]).0,
            };
            vals.push(profile.psi(lim.values[v])? / denom);
        }
        out.push(band_stats(lo, hi, vals));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub h: f64,
    pub k_cap: f64,
    /// Margins of the shrunken domains, largest first.
    pub margins: Vec<f64>,
    /// Interior sup of `|u_i - u_ii|`.
    pub interior_sup_diff: f64,
    /// The same relative to the interior sup of the first scheme.
    pub interior_rel_diff: f64,
    /// Bands of `|u / Φ(δ_{H₀}) - 1|` for the first scheme.
    pub rate_bands: Vec<AsymBand>,
    /// Sup of `|u / Φ(δ_{H₀}) - 1|` over the tube `δ_{H₀} < diam / 10`.
    pub tube_sup_deviation: f64,
}

/// Builds the large solution twice and compares: (i) the monotone
/// `k`-schedule, (ii) Dirichlet data `Φ(m)` on the shrunken domains
/// `{δ_{H₀} > m}` with `m` halving down to the resolution floor.
pub fn uniqueness_check(
    prob: &LargeProblem,
    h: f64,
    opts: &SolveOptions,
) -> Result<UniquenessReport> {
    let first = monotone_large_solution(prob, h, &KSchedule::default(), opts)?;
    let profile = prob.nl.profile()?;
    let mesh = first.limit().mesh.clone();
    let deltas = &first.deltas;
    let diam = prob.domain().diameter();
    let (theta1, _) = prob.field.dual_theta();
    let floor = 0.5 * h * theta1;
    let mut margins = Vec::new();
    let mut m = diam / 10.0;
    while m > floor {
        margins.push(m);
        m *= 0.5;
    }
    margins.push(floor);
    let op_prob = prob.dirichlet(0.0)?;
    let op = Operator::new(&mesh, &op_prob.norm, &op_prob.nl, None);
    let mut u = vec![0.0; mesh.len()];
    for &m in &margins {
        let data = profile.phi(m)?;
        // freeze the strip δ ≤ m at Φ(m) on a mesh copy
        let mut shrunk = (*mesh).clone();
        for v in 0..shrunk.len() {
            if !shrunk.on_boundary[v] && deltas[v] <= m {
                shrunk.on_boundary[v] = true;
            }
        }
        let mut free_nodes = Vec::new();
        let mut free = vec![None; shrunk.len()];
        for v in 0..shrunk.len() {
            if !shrunk.on_boundary[v] {
                free[v] = Some(free_nodes.len());
                free_nodes.push(v);
            }
        }
        shrunk.free = free;
        shrunk.free_nodes = free_nodes;
        for v in 0..shrunk.len() {
            if shrunk.on_boundary[v] {
                u[v] = data;
            }
        }
        let sop = Operator {
            mesh: &shrunk,
            norm: op.norm,
            nl: op.nl,
            p: op.p,
            load: op.load.clone(),
            quadratic_hessian: op.quadratic_hessian.clone(),
        };
        let out = minimize(&sop, &mut u, opts, diam)?;
        if !out.converged {
            return Err(Error::NoConvergence {
                what: "Dirichlet Newton",
                iterations: out.iterations,
                residual: out.residual,
            });
        }
    }
    let lim = &first.limit().values;
    let interior_sup_diff = interior_change(lim, &u, &first.interior);
    let scale = lim
        .iter()
        .zip(&first.interior)
        .filter(|(_, m)| **m)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max);
    let tube = diam / 10.0;
    let mut rate_bands = Vec::new();
    let mut lo = tube;
    while lo > 2.0 * floor {
        let l = lo / 2.0;
        let vals: Vec<f64> = (0..mesh.len())
            .filter(|&v| !mesh.on_boundary[v] && deltas[v] > l && deltas[v] <= lo)
            .map(|v| (lim[v] / profile.phi(deltas[v]).unwrap_or(f64::NAN) - 1.0).abs())
            .collect();
        rate_bands.push(band_stats(l, lo, vals));
        lo = l;
    }
    let tube_sup_deviation = (0..mesh.len())
        .filter(|&v| !mesh.on_boundary[v] && deltas[v] < tube)
        .map(|v| (lim[v] / profile.phi(deltas[v]).unwrap_or(f64::NAN) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(UniquenessReport {
        h,
        k_cap: prob.k_cap(h)?,
        margins,
        interior_sup_diff,
        interior_rel_diff: interior_sup_diff / scale.max(f64::MIN_POSITIVE),
        rate_bands,
        tube_sup_deviation,
    })
}
