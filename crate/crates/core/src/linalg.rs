//! Small linear-algebra kernels: banded LU, sparse PCG, dense LU.

use crate::error::{Error, Result};

/// Banded matrix with an LU factorization (no pivoting) that can be
/// recomputed from a given row onward. Meant for diagonally dominant
/// M-matrices, where every pivot stays positive.
///
/// Row `i` stores columns `i - bw ..= i + bw` at slots `0 ..= 2 bw`, so the
/// diagonal sits in slot `bw`. Factored rows keep L (unit diagonal implied)
/// left of the diagonal and U from the diagonal on.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    bw: usize,
    a: Vec<f64>,
    f: Vec<f64>,
    factored: usize,
    active: usize,
}

impl BandedLu {
    pub fn new(n: usize, bw: usize) -> Self {
        BandedLu {
            n,
            bw,
            a: vec![0.0; n * (2 * bw + 1)],
            f: vec![0.0; n * (2 * bw + 1)],
            factored: 0,
            active: n,
        }
    }

    /// Restricts factorization and solves to the leading `n` rows.
    pub fn set_active(&mut self, n: usize) {
        assert!(n <= self.n);
        self.factored = self.factored.min(n);
        self.active = n;
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, k: usize) -> usize {
        i * (2 * self.bw + 1) + k + self.bw - i
    }

    /// Overwrites row `i`, invalidating the factorization from `i` if
    /// anything changed. Entries that would fall outside `0..active` must be zero.
    pub fn set_row(&mut self, i: usize, row: &[f64]) {
        let w = 2 * self.bw + 1;
        let dst = &mut self.a[i * w..(i + 1) * w];
        if dst != row {
            dst.copy_from_slice(row);
            self.factored = self.factored.min(i);
        }
    }

    /// Adds `v` to entry (i, k); requires `|i - k| <= bw`.
    pub fn add(&mut self, i: usize, k: usize, v: f64) {
        debug_assert!(i.abs_diff(k) <= self.bw);
        let p = self.idx(i, k);
        self.a[p] += v;
        self.factored = self.factored.min(i);
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        if i.abs_diff(k) > self.bw {
            0.0
        } else {
            self.a[self.idx(i, k)]
        }
    }

    /// Marks rows from `row` onward as needing refactorization.
    pub fn invalidate_from(&mut self, row: usize) {
        self.factored = self.factored.min(row);
    }

    /// Factors rows `factored..active`. Rows above are reused.
    pub fn factor(&mut self) -> Result<()> {
        let bw = self.bw;
        let w = 2 * bw + 1;
        let n = self.active;
        for i in self.factored..n {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw).min(n - 1);
            let ri = i * w + bw - i;
            for k in lo..=hi {
                let mut s = self.a[ri + k];
                // U[m, k] is stored for k - m <= bw.
                for m in lo.max(k.saturating_sub(bw))..k.min(i) {
                    s -= self.f[ri + m] * self.f[m * w + bw - m + k];
                }
                if k < i {
                    s /= self.f[k * w + bw];
                }
                self.f[ri + k] = s;
            }
            let d = self.f[i * w + bw];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SolverStagnation { residual: d });
            }
        }
        self.factored = n;
        Ok(())
    }

    /// Solves A x = b using the current factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(self.factored, self.active, "matrix not factored");
        let bw = self.bw;
        let w = 2 * bw + 1;
        let n = self.active;
        let mut x = b[..n].to_vec();
        for i in 0..n {
            let ri = i * w + bw - i;
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.f[ri + k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let ri = i * w + bw - i;
            let mut s = x[i];
            for k in i + 1..=(i + bw).min(n - 1) {
                s -= self.f[ri + k] * x[k];
            }
            x[i] = s / self.f[ri + i];
        }
        x
    }

    /// y = A x.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let bw = self.bw;
        let w = 2 * bw + 1;
        let n = self.active;
        (0..n)
            .map(|i| {
                let ri = i * w + bw - i;
                (i.saturating_sub(bw)..=(i + bw).min(n - 1)).map(|k| self.a[ri + k] * x[k]).sum()
            })
            .collect()
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.a[i * (2 * self.bw + 1) + self.bw]
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, Default)]
pub struct Csr {
    pub n: usize,
    pub ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Builds from per-row (column, value) lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in r {
                if last == Some(c) {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(c);
                    val.push(v);
                    last = Some(c);
                }
            }
            ptr.push(col.len());
        }
        Csr { n, ptr, col, val }
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for p in self.ptr[i]..self.ptr[i + 1] {
                s += self.val[p] * x[self.col[p]];
            }
            y[i] = s;
        }
    }
}

/// Incomplete Cholesky IC(0) of a symmetric CSR matrix, lower triangle kept.
struct Ic0 {
    n: usize,
    ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
    diag_pos: Vec<usize>,
}

impl Ic0 {
    fn new(a: &Csr) -> Self {
        let n = a.n;
        let mut ptr = vec![0];
        let mut col = Vec::new();
        let mut val = Vec::new();
        let mut diag_pos = vec![0; n];
        for i in 0..n {
            for p in a.ptr[i]..a.ptr[i + 1] {
                if a.col[p] <= i {
                    if a.col[p] == i {
                        diag_pos[i] = col.len();
                    }
                    col.push(a.col[p]);
                    val.push(a.val[p]);
                }
            }
            ptr.push(col.len());
        }
        // Row-oriented IC(0) on the lower pattern.
        for i in 0..n {
            for p in ptr[i]..ptr[i + 1] {
                let j = col[p];
                let mut s = val[p];
                // s -= Σ_{k<j} L[i,k] L[j,k] over the shared pattern.
                let (mut q, mut r) = (ptr[i], ptr[j]);
                while q < ptr[i + 1] && r < ptr[j + 1] {
                    let (ci, cj) = (col[q], col[r]);
                    if ci >= j || cj >= j {
                        break;
                    }
                    if ci == cj {
                        s -= val[q] * val[r];
                        q += 1;
                        r += 1;
                    } else if ci < cj {
                        q += 1;
                    } else {
                        r += 1;
                    }
                }
                if j == i {
                    val[p] = if s > 0.0 { s.sqrt() } else { 1e-12_f64.max(val[p].abs()).sqrt() };
                } else {
                    val[p] = s / val[diag_pos[j]];
                }
            }
        }
        Ic0 { n, ptr, col, val, diag_pos }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = r[i];
            for p in self.ptr[i]..self.diag_pos[i] {
                s -= self.val[p] * z[self.col[p]];
            }
            z[i] = s / self.val[self.diag_pos[i]];
        }
        for i in (0..n).rev() {
            z[i] /= self.val[self.diag_pos[i]];
            let zi = z[i];
            for p in self.ptr[i]..self.diag_pos[i] {
                z[self.col[p]] -= self.val[p] * zi;
            }
        }
    }
}

/// Preconditioned conjugate gradients with IC(0). `x` holds the warm start.
///
/// Stops when ‖b − Ax‖∞ ≤ `tol`. Returns the iteration count.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize> {
    let n = a.n;
    let pre = Ic0::new(a);
    let mut r = vec![0.0; n];
    a.mul_into(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let norm_inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if norm_inf(&r) <= tol {
        return Ok(0);
    }
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut q = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_into(&p, &mut q);
        let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        if !(pq > 0.0) {
            return Err(Error::SolverStagnation { residual: norm_inf(&r) });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if norm_inf(&r) <= tol {
            return Ok(it);
        }
        pre.apply(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverStagnation { residual: norm_inf(&r) })
}

/// Dense LU with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    /// Factors the row-major n×n matrix `a`.
    pub fn new(n: usize, mut a: Vec<f64>) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut piv: Vec<usize> = (0..n).collect();
        for c in 0..n {
            let mut p = c;
            for r in c + 1..n {
                if a[r * n + c].abs() > a[p * n + c].abs() {
                    p = r;
                }
            }
            if a[p * n + c] == 0.0 {
                return Err(Error::SolverStagnation { residual: 0.0 });
            }
            if p != c {
                for k in 0..n {
                    a.swap(p * n + k, c * n + k);
                }
                piv.swap(p, c);
            }
            let d = a[c * n + c];
            for r in c + 1..n {
                let f = a[r * n + c] / d;
                a[r * n + c] = f;
                if f != 0.0 {
                    for k in c + 1..n {
                        a[r * n + k] -= f * a[c * n + k];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu: a, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> BandedLu {
        let mut m = BandedLu::new(n, 1);
        for i in 0..n {
            m.add(i, i, 2.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
                m.add(i - 1, i, -1.0);
            }
        }
        m
    }

    #[test]
    fn banded_solves_tridiagonal() {
        let n = 50;
        let mut m = laplace_1d(n);
        m.factor().unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let x = m.solve(&b);
        let ax = m.mul(&x);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn banded_solves_nonsymmetric() {
        let n = 40;
        let mut m = BandedLu::new(n, 3);
        for i in 0..n {
            m.add(i, i, 4.0);
            if i >= 3 {
                m.add(i, i - 3, -1.5);
            }
            if i + 1 < n {
                m.add(i, i + 1, -0.7);
            }
            if i >= 1 {
                m.add(i, i - 1, -0.2);
            }
        }
        m.factor().unwrap();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let x = m.solve(&b);
        for i in 0..n {
            let s: f64 = (0..n).map(|k| m.get(i, k) * x[k]).sum();
            assert!((s - b[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn partial_refactor_matches_full() {
        let n = 40;
        let mut m = BandedLu::new(n, 3);
        for i in 0..n {
            m.add(i, i, 4.0);
            if i >= 3 {
                m.add(i, i - 3, -1.0);
            }
            if i + 2 < n {
                m.add(i, i + 2, -1.0);
            }
        }
        m.factor().unwrap();
        m.add(30, 30, 2.5);
        m.add(31, 28, -0.5);
        m.factor().unwrap();
        let mut fresh = m.clone();
        fresh.invalidate_from(0);
        fresh.factor().unwrap();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let (x, y) = (m.solve(&b), fresh.solve(&b));
        for i in 0..n {
            assert_eq!(x[i], y[i]);
        }
    }

    #[test]
    fn pcg_matches_direct() {
        let n = 30;
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            rows[i].push((i, 2.5));
            if i > 0 {
                rows[i].push((i - 1, -1.0));
            }
            if i + 1 < n {
                rows[i].push((i + 1, -1.0));
            }
        }
        let a = Csr::from_rows(rows);
        let b: Vec<f64> = (0..n).map(|i| (i % 7) as f64).collect();
        let mut x = vec![0.0; n];
        pcg(&a, &b, &mut x, 1e-12, 200).unwrap();
        let mut y = vec![0.0; n];
        a.mul_into(&x, &mut y);
        for i in 0..n {
            assert!((y[i] - b[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn dense_lu() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let lu = DenseLu::new(3, a.clone()).unwrap();
        let x = lu.solve(&[3.0, 2.0, 4.0]);
        for r in 0..3 {
            let s: f64 = (0..3).map(|c| a[r * 3 + c] * x[c]).sum();
            assert!((s - [3.0, 2.0, 4.0][r]).abs() < 1e-12);
        }
    }
}
