//! Planar domains bounded by sampled closed curves, the anisotropic distance
//! `δ_{H₀}(x) = min_{z ∈ ∂Ω} H₀(x - z)`, and Wulff balls touching the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{golden_max, DualEvaluator, MinkowskiNorm, NormSpec};

pub const DEFAULT_SAMPLES: usize = 4096;

/// Closed counterclockwise curve parameterized over `[0, 1)`.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Boundary {
    Circle {
        center: [f64; 2],
        r: f64,
    },
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
    },
    /// Axis-aligned rectangle. Not C²; used for Dirichlet tests only.
    Rectangle {
        min: [f64; 2],
        max: [f64; 2],
    },
    /// `{x : H₀(x - c) = r}`.
    Wulff {
        center: [f64; 2],
        r: f64,
        dual: DualEvaluator,
    },
    /// Periodic cubic spline through the given vertices.
    Spline(PeriodicSpline),
}

impl Boundary {
    pub fn point(&self, s: f64) -> [f64; 2] {
        let s = s.rem_euclid(1.0);
        let th = std::f64::consts::TAU * s;
        match self {
            Boundary::Circle { center, r } => [center[0] + r * th.cos(), center[1] + r * th.sin()],
            Boundary::Ellipse { center, a, b } => {
                [center[0] + a * th.cos(), center[1] + b * th.sin()]
            }
            Boundary::Rectangle { min, max } => {
                let (w, h) = (max[0] - min[0], max[1] - min[1]);
                let mut d = s * 2.0 * (w + h);
                if d < w {
                    return [min[0] + d, min[1]];
                }
                d -= w;
                if d < h {
                    return [max[0], min[1] + d];
                }
                d -= h;
                if d < w {
                    return [max[0] - d, max[1]];
                }
                d -= w;
                [min[0], max[1] - d]
            }
            Boundary::Wulff { center, r, dual } => {
                let d = [th.cos(), th.sin()];
                let scale = r / dual.eval(&d);
                [center[0] + scale * d[0], center[1] + scale * d[1]]
            }
            Boundary::Spline(sp) => sp.point(s),
        }
    }

    /// First and second derivatives with respect to the parameter.
    pub fn derivatives(&self, s: f64) -> ([f64; 2], [f64; 2]) {
        let tau = std::f64::consts::TAU;
        let th = tau * s;
        match self {
            Boundary::Circle { r, .. } => (
                [-r * tau * th.sin(), r * tau * th.cos()],
                [-r * tau * tau * th.cos(), -r * tau * tau * th.sin()],
            ),
            Boundary::Ellipse { a, b, .. } => (
                [-a * tau * th.sin(), b * tau * th.cos()],
                [-a * tau * tau * th.cos(), -b * tau * tau * th.sin()],
            ),
            Boundary::Spline(sp) => sp.derivatives(s),
            _ => {
                let h = 1e-5;
                let p0 = self.point(s - h);
                let p1 = self.point(s);
                let p2 = self.point(s + h);
                (
                    [(p2[0] - p0[0]) / (2.0 * h), (p2[1] - p0[1]) / (2.0 * h)],
                    [
                        (p2[0] - 2.0 * p1[0] + p0[0]) / (h * h),
                        (p2[1] - 2.0 * p1[1] + p0[1]) / (h * h),
                    ],
                )
            }
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, Boundary::Rectangle { .. })
    }
}

/// Periodic interpolating cubic spline with chord-length parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSpline {
    knots: Vec<f64>,
    pts: Vec<[f64; 2]>,
    /// second derivatives at the knots
    m2: Vec<[f64; 2]>,
}

impl PeriodicSpline {
    pub fn new(vertices: &[[f64; 2]]) -> Result<Self> {
        let mut pts: Vec<[f64; 2]> = vertices.to_vec();
        if pts.len() >= 2 && pts[0] == pts[pts.len() - 1] {
            pts.pop();
        }
        let n = pts.len();
        if n < 3 {
            return Err(Error::InvalidDomain(
                "at least three vertices are required".into(),
            ));
        }
        let area: f64 = (0..n)
            .map(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % n]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum();
        if area < 0.0 {
            pts.reverse();
        }
        let chords: Vec<f64> = (0..n)
            .map(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % n]);
                ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
            })
            .collect();
        if chords.contains(&0.0) {
            return Err(Error::InvalidDomain("repeated vertex".into()));
        }
        let total: f64 = chords.iter().sum();
        let mut knots = vec![0.0; n + 1];
        for i in 0..n {
            knots[i + 1] = knots[i] + chords[i] / total;
        }
        knots[n] = 1.0;
        // cyclic system for second derivatives
        let h = |i: usize| knots[i + 1] - knots[i];
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut rhs = nalgebra::DMatrix::<f64>::zeros(n, 2);
        for i in 0..n {
            let hp = h((i + n - 1) % n);
            let hn = h(i);
            a[(i, (i + n - 1) % n)] += hp / 6.0;
            a[(i, i)] += (hp + hn) / 3.0;
            a[(i, (i + 1) % n)] += hn / 6.0;
            for c in 0..2 {
                let prev = pts[(i + n - 1) % n][c];
                let next = pts[(i + 1) % n][c];
                rhs[(i, c)] = (next - pts[i][c]) / hn - (pts[i][c] - prev) / hp;
            }
        }
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidDomain("spline system is singular".into()))?;
        let m2 = (0..n).map(|i| [sol[(i, 0)], sol[(i, 1)]]).collect();
        Ok(Self { knots, pts, m2 })
    }

    fn locate(&self, s: f64) -> (usize, f64, f64) {
        let n = self.pts.len();
        let s = s.rem_euclid(1.0);
        let i = self.knots.partition_point(|&k| k <= s).clamp(1, n) - 1;
        let h = self.knots[i + 1] - self.knots[i];
        (i, (s - self.knots[i]) / h, h)
    }

    fn point(&self, s: f64) -> [f64; 2] {
        let n = self.pts.len();
        let (i, u, h) = self.locate(s);
        let j = (i + 1) % n;
        let mut out = [0.0; 2];
        for c in 0..2 {
            let (y0, y1) = (self.pts[i][c], self.pts[j][c]);
            let (m0, m1) = (self.m2[i][c], self.m2[j][c]);
            let a = 1.0 - u;
            out[c] = a * y0 + u * y1 + h * h / 6.0 * ((a * a * a - a) * m0 + (u * u * u - u) * m1);
        }
        out
    }

    fn derivatives(&self, s: f64) -> ([f64; 2], [f64; 2]) {
        let n = self.pts.len();
        let (i, u, h) = self.locate(s);
        let j = (i + 1) % n;
        let mut d1 = [0.0; 2];
        let mut d2 = [0.0; 2];
        for c in 0..2 {
            let (y0, y1) = (self.pts[i][c], self.pts[j][c]);
            let (m0, m1) = (self.m2[i][c], self.m2[j][c]);
            let a = 1.0 - u;
            d1[c] =
                (y1 - y0) / h + h / 6.0 * (-(3.0 * a * a - 1.0) * m0 + (3.0 * u * u - 1.0) * m1);
            d2[c] = a * m0 + u * m1;
        }
        (d1, d2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub z: [f64; 2],
    /// Unit tangent (counterclockwise).
    pub tangent: [f64; 2],
    pub curvature: f64,
    pub param: f64,
    /// Cumulative arclength from parameter 0.
    pub arclength: f64,
}

impl BoundarySample {
    /// Inward unit normal.
    pub fn inward_normal(&self) -> [f64; 2] {
        [-self.tangent[1], self.tangent[0]]
    }
}

/// Domain enclosed by a sampled counterclockwise curve.
#[derive(Debug, Clone)]
pub struct Domain2D {
    boundary: Boundary,
    samples: Vec<BoundarySample>,
    perimeter: f64,
    bbox: ([f64; 2], [f64; 2]),
    points: Vec<[f64; 2]>,
    buckets: Buckets,
    diameter: f64,
}

#[derive(Debug, Clone)]
struct Buckets {
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    items: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(points: &[[f64; 2]], bbox: ([f64; 2], [f64; 2]), cell: f64) -> Self {
        let origin = bbox.0;
        let nx = (((bbox.1[0] - bbox.0[0]) / cell).ceil() as usize).max(1);
        let ny = (((bbox.1[1] - bbox.0[1]) / cell).ceil() as usize).max(1);
        let mut items = vec![Vec::new(); nx * ny];
        let mut b = Self {
            origin,
            cell,
            nx,
            ny,
            items: Vec::new(),
        };
        for (k, p) in points.iter().enumerate() {
            let (i, j) = b.cell_of(*p);
            items[j * nx + i].push(k);
        }
        b.items = items;
        b
    }

    fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        let i = ((p[0] - self.origin[0]) / self.cell)
            .floor()
            .clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p[1] - self.origin[1]) / self.cell)
            .floor()
            .clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// Indices in cells intersecting the square of half-width `radius` around `p`.
    fn within(&self, p: [f64; 2], radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let (i0, j0) = self.cell_of([p[0] - radius, p[1] - radius]);
        let (i1, j1) = self.cell_of([p[0] + radius, p[1] + radius]);
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend_from_slice(&self.items[j * self.nx + i]);
            }
        }
    }

    /// Nearest point index by expanding rings.
    fn nearest(&self, p: [f64; 2], points: &[[f64; 2]]) -> usize {
        let (ci, cj) = self.cell_of(p);
        let mut best = (f64::INFINITY, 0usize);
        let max_ring = self.nx.max(self.ny);
        // distance from p to the clamped cell, accounts for points outside the box
        let outside = {
            let cx =
                (p[0] - self.origin[0]).clamp(0.0, self.nx as f64 * self.cell) + self.origin[0];
            let cy =
                (p[1] - self.origin[1]).clamp(0.0, self.ny as f64 * self.cell) + self.origin[1];
            ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
        };
        for ring in 0..=max_ring {
            let ring_cells = ring_cells(ci as isize, cj as isize, ring as isize);
            for (i, j) in ring_cells {
                if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
                    continue;
                }
                for &k in &self.items[j as usize * self.nx + i as usize] {
                    let q = points[k];
                    let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                    if d < best.0 {
                        best = (d, k);
                    }
                }
            }
            if best.0.is_finite() && best.0.sqrt() <= outside + ring as f64 * self.cell {
                break;
            }
        }
        best.1
    }
}

/// Cells on the boundary of the square of half-width `r` around `(ci, cj)`.
fn ring_cells(ci: isize, cj: isize, r: isize) -> Vec<(isize, isize)> {
    if r == 0 {
        return vec![(ci, cj)];
    }
    let mut out = Vec::with_capacity(8 * r as usize);
    for d in -r..=r {
        out.push((ci + d, cj - r));
        out.push((ci + d, cj + r));
    }
    for d in -r + 1..r {
        out.push((ci - r, cj + d));
        out.push((ci + r, cj + d));
    }
    out
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn len(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

impl Domain2D {
    pub fn new(boundary: Boundary, samples: usize) -> Result<Self> {
        if samples < 16 {
            return Err(Error::InvalidDomain(
                "at least 16 boundary samples are required".into(),
            ));
        }
        let mut out = Vec::with_capacity(samples);
        let mut arclength = 0.0;
        let mut prev: Option<[f64; 2]> = None;
        for i in 0..samples {
            let s = i as f64 / samples as f64;
            let z = boundary.point(s);
            if let Some(q) = prev {
                arclength += len(sub(z, q));
            }
            prev = Some(z);
            let (d1, d2) = boundary.derivatives(s);
            let speed = len(d1);
            if !(speed > 0.0) || !speed.is_finite() {
                return Err(Error::InvalidDomain("curve has a singular point".into()));
            }
            let curvature = (d1[0] * d2[1] - d1[1] * d2[0]) / speed.powi(3);
            out.push(BoundarySample {
                z,
                tangent: [d1[0] / speed, d1[1] / speed],
                curvature,
                param: s,
                arclength,
            });
        }
        let perimeter = arclength + len(sub(out[0].z, out[samples - 1].z));
        let closure = len(sub(boundary.point(1.0), boundary.point(0.0)));
        if closure > 1e-12 * perimeter.max(1.0) {
            return Err(Error::InvalidDomain("curve is not closed".into()));
        }
        if boundary.is_smooth() && out.iter().any(|s| !s.curvature.is_finite()) {
            return Err(Error::InvalidDomain("curvature is not finite".into()));
        }
        let signed: f64 = (0..samples)
            .map(|i| {
                let (a, b) = (out[i].z, out[(i + 1) % samples].z);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum();
        if !(signed > 0.0) {
            return Err(Error::InvalidDomain(
                "curve must be counterclockwise".into(),
            ));
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for s in &out {
            for c in 0..2 {
                lo[c] = lo[c].min(s.z[c]);
                hi[c] = hi[c].max(s.z[c]);
            }
        }
        let pts: Vec<[f64; 2]> = out.iter().map(|s| s.z).collect();
        let diam = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
        let cell = (4.0 * perimeter / samples as f64)
            .max(diam / 64.0)
            .max(1e-12);
        let buckets = Buckets::new(&pts, (lo, hi), cell);
        let mut dom = Self {
            boundary,
            samples: out,
            perimeter,
            bbox: (lo, hi),
            points: pts,
            buckets,
            diameter: 0.0,
        };
        dom.check_simple()?;
        let stride = (samples / 1024).max(1);
        let mut diam: f64 = 0.0;
        for a in dom.points.iter().step_by(stride) {
            for b in dom.points.iter().step_by(stride) {
                diam = diam.max(len(sub(*a, *b)));
            }
        }
        dom.diameter = diam;
        Ok(dom)
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.samples.len();
        let mut cand = Vec::new();
        for i in 0..n {
            let (a, b) = (self.samples[i].z, self.samples[(i + 1) % n].z);
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let reach = len(sub(b, a)) + self.buckets.cell;
            self.buckets.within(mid, reach, &mut cand);
            for &j in &cand {
                let jn = (j + 1) % n;
                if j == i || jn == i || j == (i + 1) % n {
                    continue;
                }
                if segments_cross(a, b, self.samples[j].z, self.samples[jn].z) {
                    return Err(Error::InvalidDomain("boundary intersects itself".into()));
                }
            }
        }
        Ok(())
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn samples(&self) -> &[BoundarySample] {
        &self.samples
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        self.bbox
    }

    /// Largest distance between two boundary samples.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn max_curvature(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.curvature.abs())
            .fold(0.0, f64::max)
    }

    /// Enclosed area of the sample polygon.
    pub fn area(&self) -> f64 {
        let n = self.samples.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.samples[i].z, self.samples[(i + 1) % n].z);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
    }

    /// Crossing-number test against the sample polygon.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let (lo, hi) = self.bbox;
        if x[0] < lo[0] || x[0] > hi[0] || x[1] < lo[1] || x[1] > hi[1] {
            return false;
        }
        let n = self.samples.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.samples[i].z;
            let b = self.samples[(i + 1) % n].z;
            if (a[1] > x[1]) != (b[1] > x[1]) {
                let xc = a[0] + (x[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if x[0] < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean nearest boundary point, refined along the curve parameter.
    pub fn nearest_euclidean(&self, x: [f64; 2]) -> (f64, [f64; 2], f64) {
        let k = self.buckets.nearest(x, &self.points);
        let zk = self.points[k];
        let g = |s: f64| -len(sub(x, self.boundary.point(s)));
        let step = 1.0 / self.samples.len() as f64;
        let s0 = self.samples[k].param;
        let (s, v) = golden_max(g, s0 - step, s0 + step, 1e-13);
        if -v <= len(sub(x, zk)) {
            (-v, self.boundary.point(s), s.rem_euclid(1.0))
        } else {
            (len(sub(x, zk)), zk, s0)
        }
    }

    /// Circular arclength between two sample indices.
    fn arc_between(&self, i: usize, j: usize) -> f64 {
        let d = (self.samples[i].arclength - self.samples[j].arclength).abs();
        d.min(self.perimeter - d)
    }
}

/// Result of a distance query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceQuery {
    pub delta: f64,
    pub nearest: [f64; 2],
    pub param: f64,
}

/// `δ_{H₀}` to the boundary of a domain.
#[derive(Debug, Clone)]
pub struct AnisotropicDistanceField {
    domain: Domain2D,
    dual: DualEvaluator,
    /// bounds of H₀ on the Euclidean unit circle
    theta1: f64,
    theta2: f64,
}

impl AnisotropicDistanceField {
    pub fn new(domain: Domain2D, norm: MinkowskiNorm) -> Result<Self> {
        if norm.dim() != 2 {
            return Err(Error::InvalidDomain(
                "distance fields need a planar norm".into(),
            ));
        }
        // θ of H₀ is the reciprocal of θ of H
        let th = norm.theta_bounds();
        Ok(Self {
            domain,
            dual: DualEvaluator::new(norm),
            theta1: 1.0 / th.theta2,
            theta2: 1.0 / th.theta1,
        })
    }

    pub fn domain(&self) -> &Domain2D {
        &self.domain
    }

    pub fn dual(&self) -> &DualEvaluator {
        &self.dual
    }

    pub fn norm(&self) -> &MinkowskiNorm {
        self.dual.base()
    }

    /// `(min, max)` of `H₀` on the Euclidean unit circle.
    pub fn dual_theta(&self) -> (f64, f64) {
        (self.theta1, self.theta2)
    }

    fn h0(&self, x: [f64; 2], z: [f64; 2]) -> f64 {
        self.dual.eval(&[x[0] - z[0], x[1] - z[1]])
    }

    /// `δ_{H₀}(x)` for `x` inside the domain.
    pub fn delta(&self, x: [f64; 2]) -> Result<DistanceQuery> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain);
        }
        Ok(self.delta_unchecked(x))
    }

    /// Distance query without the containment test; also valid outside.
    pub fn delta_unchecked(&self, x: [f64; 2]) -> DistanceQuery {
        let k = self.domain.buckets.nearest(x, &self.domain.points);
        let de = len(sub(x, self.domain.points[k]));
        // any minimizer lies within this Euclidean radius
        let reach = de * self.theta2 / self.theta1 * (1.0 + 1e-9) + 1e-15;
        let mut cand = Vec::new();
        self.domain.buckets.within(x, reach, &mut cand);
        let mut best = (self.h0(x, self.domain.points[k]), k);
        for &j in &cand {
            let v = self.h0(x, self.domain.points[j]);
            if v < best.0 {
                best = (v, j);
            }
        }
        let step = 1.0 / self.domain.points.len() as f64;
        let s0 = self.domain.samples[best.1].param;
        let g = |s: f64| -self.h0(x, self.domain.boundary.point(s));
        let (s, v) = golden_max(g, s0 - step, s0 + step, 1e-13);
        if -v < best.0 {
            DistanceQuery {
                delta: -v,
                nearest: self.domain.boundary.point(s),
                param: s.rem_euclid(1.0),
            }
        } else {
            DistanceQuery {
                delta: best.0,
                nearest: self.domain.points[best.1],
                param: s0,
            }
        }
    }

    /// Centers of the interior and exterior Wulff balls of radius `r` touching
    /// the boundary at the sample nearest to parameter `param`.
    pub fn interior_exterior_balls(&self, param: f64, r: f64) -> Result<([f64; 2], [f64; 2])> {
        let s = param.rem_euclid(1.0);
        let (d1, _) = self.domain.boundary.derivatives(s);
        let sp = len(d1);
        let nu = [-d1[1] / sp, d1[0] / sp];
        let z = self.domain.boundary.point(s);
        let norm = self.dual.base();
        // a Wulff ball W_r(c) has outward normal n at c + r ∇H(n)
        let g_out = norm.grad(&[-nu[0], -nu[1]])?;
        let g_in = norm.grad(&nu)?;
        let x_int = [z[0] - r * g_out[0], z[1] - r * g_out[1]];
        let x_ext = [z[0] - r * g_in[0], z[1] - r * g_in[1]];
        self.check_touching(x_int, r, s, true)?;
        self.check_touching(x_ext, r, s, false)?;
        Ok((x_int, x_ext))
    }

    fn check_touching(&self, center: [f64; 2], r: f64, param: f64, interior: bool) -> Result<()> {
        let violation = |reason: String| Err(Error::BallViolation { radius: r, reason });
        if self.domain.contains(center) != interior {
            return violation(format!(
                "{} center lies on the wrong side of the boundary",
                if interior { "interior" } else { "exterior" }
            ));
        }
        let n = self.domain.points.len();
        let base = ((param * n as f64).round() as usize) % n;
        for (j, z) in self.domain.points.iter().enumerate() {
            let v = self.dual.eval(&[z[0] - center[0], z[1] - center[1]]);
            if v < r - 1e-6 {
                return violation(format!("boundary point {j} lies inside the ball"));
            }
            if v <= r + 1e-9
                && self.domain.arc_between(j, base) > 1e-3 + self.domain.perimeter / n as f64
            {
                return violation(format!("ball also touches the boundary at sample {j}"));
            }
        }
        Ok(())
    }

    /// Largest radius (from a curvature estimate, halved until verified) for
    /// which interior and exterior balls touch only at their base point.
    pub fn uniform_ball_radius(&self) -> Result<f64> {
        let kmax = self.domain.max_curvature().max(1e-12);
        let mut r = 0.5 * self.theta1 * self.theta1 / (self.theta2 * kmax);
        let n = self.domain.points.len();
        let stride = (n / 64).max(1);
        for _ in 0..40 {
            let ok = (0..n).step_by(stride).all(|i| {
                self.interior_exterior_balls(self.domain.samples[i].param, r)
                    .is_ok()
            });
            if ok {
                return Ok(r);
            }
            r *= 0.5;
        }
        Err(Error::InvalidDomain("no uniform ball radius found".into()))
    }

    /// Width of the tube on which `δ_{H₀}` is treated as smooth: half the
    /// validated uniform ball radius.
    pub fn tube_width(&self) -> Result<f64> {
        Ok(0.5 * self.uniform_ball_radius()?)
    }

    /// Grid points (spacing `h`, aligned to the bounding box corner) inside
    /// the domain with `δ_{H₀} < delta`.
    pub fn tube(&self, delta: f64, h: f64) -> Vec<([f64; 2], f64)> {
        let mut out = Vec::new();
        for x in self.grid_points(h) {
            let (de, _, _) = self.domain.nearest_euclidean(x);
            if self.theta1 * de >= delta {
                continue;
            }
            let q = self.delta_unchecked(x);
            if q.delta < delta {
                out.push((x, q.delta));
            }
        }
        out
    }

    fn grid_points(&self, h: f64) -> Vec<[f64; 2]> {
        let (lo, hi) = self.domain.bbox;
        let nx = ((hi[0] - lo[0]) / h).floor() as usize;
        let ny = ((hi[1] - lo[1]) / h).floor() as usize;
        let mut pts = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                let x = [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
                if self.domain.contains(x) {
                    pts.push(x);
                }
            }
        }
        pts
    }

    /// CSV raster `x,y,delta` over interior grid points.
    pub fn raster_csv(&self, h: f64) -> String {
        let mut s = String::from("x,y,delta\n");
        for x in self.grid_points(h) {
            let q = self.delta_unchecked(x);
            s.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", x[0], x[1], q.delta));
        }
        s
    }
}

/// JSON description of a domain: a named shape or a bare vertex list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainSpec {
    Vertices(Vec<[f64; 2]>),
    Shape(ShapeSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShapeSpec {
    Disk {
        r: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Rectangle {
        min: [f64; 2],
        max: [f64; 2],
    },
    /// Wulff shape `{H₀(x - c) < r}` of the given norm.
    Wulff {
        norm: NormSpec,
        #[serde(default = "one")]
        r: f64,
        #[serde(default)]
        center: [f64; 2],
    },
}

fn one() -> f64 {
    1.0
}

impl DomainSpec {
    pub fn build(&self, samples: usize) -> Result<Domain2D> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidDomain(format!("{what} must be positive")))
            }
        };
        let boundary = match self {
            DomainSpec::Vertices(v) => Boundary::Spline(PeriodicSpline::new(v)?),
            DomainSpec::Shape(ShapeSpec::Disk { r, center }) => {
                positive(*r, "radius")?;
                Boundary::Circle {
                    center: *center,
                    r: *r,
                }
            }
            DomainSpec::Shape(ShapeSpec::Ellipse { a, b, center }) => {
                positive(*a, "semi-axis a")?;
                positive(*b, "semi-axis b")?;
                Boundary::Ellipse {
                    center: *center,
                    a: *a,
                    b: *b,
                }
            }
            DomainSpec::Shape(ShapeSpec::Rectangle { min, max }) => {
                positive(max[0] - min[0], "width")?;
                positive(max[1] - min[1], "height")?;
                Boundary::Rectangle {
                    min: *min,
                    max: *max,
                }
            }
            DomainSpec::Shape(ShapeSpec::Wulff { norm, r, center }) => {
                positive(*r, "radius")?;
                let norm = norm.build()?;
                if norm.dim() != 2 {
                    return Err(Error::InvalidDomain(
                        "Wulff shapes need a planar norm".into(),
                    ));
                }
                Boundary::Wulff {
                    center: *center,
                    r: *r,
                    dual: DualEvaluator::new(norm),
                }
            }
        };
        Domain2D::new(boundary, samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormFamily;

    fn disk() -> Domain2D {
        Domain2D::new(
            Boundary::Circle {
                center: [0.0, 0.0],
                r: 1.0,
            },
            DEFAULT_SAMPLES,
        )
        .unwrap()
    }

    fn h_a() -> MinkowskiNorm {
        MinkowskiNorm::new(
            NormFamily::LinearMap {
                a: vec![vec![2.0, 0.0], vec![0.0, 1.0]],
            },
            2,
        )
        .unwrap()
    }

    #[test]
    fn disk_distance() {
        let f = AnisotropicDistanceField::new(disk(), MinkowskiNorm::euclidean(2)).unwrap();
        let q = f.delta([0.5, 0.0]).unwrap();
        assert!((q.delta - 0.5).abs() < 1e-12);
        assert!((q.nearest[0] - 1.0).abs() < 1e-9 && q.nearest[1].abs() < 1e-6);
        assert_eq!(f.delta([1.5, 0.0]), Err(Error::OutsideDomain));
    }

    #[test]
    fn wulff_domain_center_distance() {
        let norm = MinkowskiNorm::new(
            NormFamily::LambdaMu {
                lambda: 1.0,
                mu: 1.0,
            },
            2,
        )
        .unwrap();
        let b = Boundary::Wulff {
            center: [0.2, -0.1],
            r: 0.7,
            dual: DualEvaluator::new(norm.clone()),
        };
        let f = AnisotropicDistanceField::new(Domain2D::new(b, DEFAULT_SAMPLES).unwrap(), norm)
            .unwrap();
        let q = f.delta([0.2, -0.1]).unwrap();
        assert!((q.delta - 0.7).abs() < 1e-9, "{}", q.delta);
    }

    #[test]
    fn anisotropic_distance_matches_brute_force() {
        let f = AnisotropicDistanceField::new(disk(), h_a()).unwrap();
        let dual = DualEvaluator::new(h_a());
        let x = [0.5, 0.0];
        let n = 1_000_000;
        let mut best = f64::INFINITY;
        for k in 0..n {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            best = best.min(dual.eval(&[x[0] - t.cos(), x[1] - t.sin()]));
        }
        let q = f.delta(x).unwrap();
        assert!((q.delta - best).abs() < 1e-6, "{} vs {best}", q.delta);
    }

    #[test]
    fn disk_balls() {
        let f = AnisotropicDistanceField::new(disk(), MinkowskiNorm::euclidean(2)).unwrap();
        let (xi, xe) = f.interior_exterior_balls(0.0, 0.3).unwrap();
        assert!((xi[0] - 0.7).abs() < 1e-12 && xi[1].abs() < 1e-12);
        assert!((xe[0] - 1.3).abs() < 1e-12 && xe[1].abs() < 1e-12);
        assert!(matches!(
            f.interior_exterior_balls(0.0, 1.5),
            Err(Error::BallViolation { .. })
        ));
    }

    #[test]
    fn anisotropic_ellipse_ball_passes_touching_check() {
        let dom = Domain2D::new(
            Boundary::Ellipse {
                center: [0.0, 0.0],
                a: 1.0,
                b: 0.8,
            },
            DEFAULT_SAMPLES,
        )
        .unwrap();
        let f = AnisotropicDistanceField::new(dom, h_a()).unwrap();
        let r = f.uniform_ball_radius().unwrap();
        assert!(r > 0.05, "{r}");
        for s in [0.0, 0.1, 0.25, 0.6] {
            assert!(f.interior_exterior_balls(s, r).is_ok());
        }
    }

    #[test]
    fn tube_area() {
        let f = AnisotropicDistanceField::new(disk(), MinkowskiNorm::euclidean(2)).unwrap();
        let h = 1.0 / 256.0;
        let pts = f.tube(0.1, h);
        let area = pts.len() as f64 * h * h;
        let exact = std::f64::consts::PI * (1.0 - 0.81);
        assert!((area - exact).abs() < 0.05 * exact, "{area} vs {exact}");
        assert!(pts.iter().all(|(_, d)| *d < 0.1));
        assert!(f.tube(1e-9, 0.13).is_empty());
    }

    #[test]
    fn spline_through_circle_vertices() {
        let v: Vec<[f64; 2]> = (0..64)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 64.0;
                [t.cos(), t.sin()]
            })
            .rev()
            .collect();
        let dom = DomainSpec::Vertices(v).build(1024).unwrap();
        assert!((dom.area() - std::f64::consts::PI).abs() < 1e-4);
        let k = dom.samples()[100].curvature;
        assert!((k - 1.0).abs() < 1e-3, "{k}");
    }

    #[test]
    fn self_intersection_is_rejected() {
        let bow = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(DomainSpec::Vertices(bow).build(256).is_err());
    }

    #[test]
    fn shape_specs_parse() {
        let d: DomainSpec = serde_json::from_str(r#"{"shape":"disk","r":1}"#).unwrap();
        assert!((d.build(512).unwrap().area() - std::f64::consts::PI).abs() < 1e-4);
        let w: DomainSpec = serde_json::from_str(
            r#"{"shape":"wulff","norm":{"family":"euclidean","dim":2},"r":2}"#,
        )
        .unwrap();
        assert!((w.build(512).unwrap().area() - 4.0 * std::f64::consts::PI).abs() < 1e-3);
        assert!(serde_json::from_str::<DomainSpec>(r#"{"shape":"disk","r":1,"x":0}"#).is_err());
    }
}
