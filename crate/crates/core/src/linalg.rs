//! Small sparse linear-algebra kit: tridiagonal solves, CSR matrices, and
//! conjugate gradients with an incomplete-Cholesky preconditioner.

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored. Returns `None` on a zero pivot.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 || !piv.is_finite() {
        return None;
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        c[i] = if i + 1 < n { upper[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Square sparse matrix in compressed-row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().expect("nonempty") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                c.binary_search(&i).map(|k| v[k]).unwrap_or(0.0)
            })
            .collect()
    }

    /// Storage index of entry `(r, c)` if it is structurally present.
    pub fn slot(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_ptr[r];
        self.cols[start..self.row_ptr[r + 1]]
            .binary_search(&c)
            .ok()
            .map(|k| start + k)
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let (c, v) = self.row(i);
            y[i] = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
        }
    }
}

/// Incomplete Cholesky factor with the sparsity of the lower triangle.
#[derive(Debug, Clone)]
pub struct IncompleteCholesky {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl IncompleteCholesky {
    /// Factorizes `A + shift * diag(A)`; `None` on a nonpositive pivot.
    pub fn new(a: &CsrMatrix, shift: f64) -> Option<Self> {
        let n = a.dim();
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            let (c, v) = a.row(i);
            for (k, &j) in c.iter().enumerate() {
                if j < i {
                    cols.push(j);
                    vals.push(v[k]);
                } else if j == i {
                    cols.push(j);
                    vals.push(v[k] * (1.0 + shift));
                }
            }
            row_ptr[i + 1] = cols.len();
        }
        let mut l = Self {
            n,
            row_ptr,
            cols,
            vals,
        };
        for i in 0..n {
            let (start, end) = (l.row_ptr[i], l.row_ptr[i + 1]);
            if end == start || l.cols[end - 1] != i {
                return None;
            }
            for idx in start..end {
                let k = l.cols[idx];
                // sparse dot of rows i and k over columns < k
                let (ks, ke) = (l.row_ptr[k], l.row_ptr[k + 1]);
                let (mut p, mut q) = (start, ks);
                let mut dot = 0.0;
                while p < idx && q < ke {
                    let (cp, cq) = (l.cols[p], l.cols[q]);
                    if cq >= k {
                        break;
                    }
                    match cp.cmp(&cq) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            dot += l.vals[p] * l.vals[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                if k < i {
                    let lkk = l.vals[ke - 1];
                    l.vals[idx] = (l.vals[idx] - dot) / lkk;
                } else {
                    let d = l.vals[idx] - dot;
                    if !(d > 0.0) || !d.is_finite() {
                        return None;
                    }
                    l.vals[idx] = d.sqrt();
                }
            }
        }
        Some(l)
    }

    /// Applies `(L Lᵀ)^{-1}`.
    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = r[i];
            for idx in s..e - 1 {
                acc -= self.vals[idx] * z[self.cols[idx]];
            }
            z[i] = acc / self.vals[e - 1];
        }
        for i in (0..n).rev() {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            z[i] /= self.vals[e - 1];
            let zi = z[i];
            for idx in s..e - 1 {
                z[self.cols[idx]] -= self.vals[idx] * zi;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for a symmetric positive definite `a`.
/// `x` holds the initial guess on entry.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> CgOutcome {
    let n = a.dim();
    let mut shift = 0.0;
    let pre = loop {
        if let Some(f) = IncompleteCholesky::new(a, shift) {
            break Some(f);
        }
        shift = if shift == 0.0 { 1e-3 } else { shift * 4.0 };
        if shift > 10.0 {
            break None;
        }
    };
    let diag = a.diagonal();
    let apply = |r: &[f64], z: &mut [f64]| match &pre {
        Some(f) => f.solve(r, z),
        None => z
            .iter_mut()
            .zip(r)
            .zip(&diag)
            .for_each(|((zi, ri), d)| *zi = ri / d),
    };
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z = vec![0.0; n];
    apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
    for it in 0..max_iter {
        if rel <= rel_tol {
            return CgOutcome {
                iterations: it,
                relative_residual: rel,
                converged: true,
            };
        }
        a.mul_vec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
        apply(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome {
        iterations: max_iter,
        relative_residual: rel,
        converged: rel <= rel_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_laplacian() {
        let n = 50;
        let lower = vec![-1.0; n];
        let diag = vec![2.0; n];
        let upper = vec![-1.0; n];
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = 2.0 * x[i]
                - if i > 0 { x[i - 1] } else { 0.0 }
                - if i + 1 < n { x[i + 1] } else { 0.0 };
        }
        let got = solve_tridiagonal(&lower, &diag, &upper, &b).unwrap();
        for i in 0..n {
            assert!((got[i] - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn pcg_solves_2d_poisson() {
        let m = 30;
        let idx = |i: usize, j: usize| i * m + j;
        let mut trip = Vec::new();
        for i in 0..m {
            for j in 0..m {
                trip.push((idx(i, j), idx(i, j), 4.0));
                if i > 0 {
                    trip.push((idx(i, j), idx(i - 1, j), -1.0));
                }
                if i + 1 < m {
                    trip.push((idx(i, j), idx(i + 1, j), -1.0));
                }
                if j > 0 {
                    trip.push((idx(i, j), idx(i, j - 1), -1.0));
                }
                if j + 1 < m {
                    trip.push((idx(i, j), idx(i, j + 1), -1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(m * m, trip);
        let xs: Vec<f64> = (0..m * m).map(|k| ((k * 7 % 13) as f64) - 6.0).collect();
        let mut b = vec![0.0; m * m];
        a.mul_vec(&xs, &mut b);
        let mut x = vec![0.0; m * m];
        let out = pcg(&a, &b, &mut x, 1e-12, 500);
        assert!(out.converged, "{out:?}");
        assert!(out.iterations < 60, "{out:?}");
        for k in 0..m * m {
            assert!((x[k] - xs[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)]);
        assert_eq!(a.diagonal(), vec![4.0, 2.0]);
        assert_eq!(a.nnz(), 2);
    }
}
