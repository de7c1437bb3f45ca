//! Exact linear algebra over Lambda = Z/p^r: Smith normal form, kernels,
//! cokernels, quotients and invariants of finite modules.

use serde::{Deserialize, Serialize};

use crate::error::{BtError, Result};

/// The coefficient ring Z/p^r.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lambda {
    pub p: u64,
    pub r: u32,
}

impl Lambda {
    pub fn new(p: u64, r: u32) -> Result<Lambda> {
        if r == 0 || !crate::localfield::is_prime(p as u32) {
            return Err(BtError::InvalidSpec(format!("bad coefficient ring Z/{p}^{r}")));
        }
        if (p as u128).pow(r) >= 1 << 31 {
            return Err(BtError::InvalidSpec("p^r too large".into()));
        }
        Ok(Lambda { p, r })
    }
    pub fn modulus(&self) -> u64 {
        self.p.pow(self.r)
    }
    pub fn red(&self, x: i64) -> u64 {
        x.rem_euclid(self.modulus() as i64) as u64
    }
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.modulus()
    }
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.modulus() - b) % self.modulus()
    }
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.modulus()
    }
    pub fn neg(&self, a: u64) -> u64 {
        (self.modulus() - a) % self.modulus()
    }
    /// p-adic valuation, r for zero.
    pub fn val(&self, a: u64) -> u32 {
        if a == 0 {
            return self.r;
        }
        let mut a = a;
        let mut v = 0;
        while a % self.p == 0 {
            a /= self.p;
            v += 1;
        }
        v
    }
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a % self.p == 0 {
            return None;
        }
        let m = self.modulus() as i128;
        let (mut r0, mut r1) = (m, a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let qt = r0 / r1;
            (r0, r1) = (r1, r0 - qt * r1);
            (t0, t1) = (t1, t0 - qt * t1);
        }
        Some(t0.rem_euclid(m) as u64)
    }
    pub fn ppow(&self, k: u32) -> u64 {
        if k >= self.r {
            0
        } else {
            self.p.pow(k)
        }
    }
}

/// Dense row-major matrix over Lambda.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<u64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, a: vec![0; rows * cols] }
    }
    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.a[i * n + i] = 1;
        }
        m
    }
    pub fn from_rows(rows: &[Vec<u64>]) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Mat { rows: r, cols: c, a: rows.iter().flatten().copied().collect() }
    }
    pub fn column(v: &[u64]) -> Mat {
        Mat { rows: v.len(), cols: 1, a: v.to_vec() }
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.a[i * self.cols + j]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: u64) {
        self.a[i * self.cols + j] = x;
    }
    pub fn col(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
    pub fn row(&self, i: usize) -> Vec<u64> {
        self.a[i * self.cols..(i + 1) * self.cols].to_vec()
    }
    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|&x| x == 0)
    }
    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }
    pub fn mul(&self, l: &Lambda, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.rows, "matrix shape mismatch");
        let m = l.modulus();
        let mut out = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            let orow = &mut out.a[i * o.cols..(i + 1) * o.cols];
            for k in 0..self.cols {
                let x = self.a[i * self.cols + k];
                if x == 0 {
                    continue;
                }
                let brow = &o.a[k * o.cols..(k + 1) * o.cols];
                for (dst, &y) in orow.iter_mut().zip(brow) {
                    *dst = (*dst + x * y) % m;
                }
            }
        }
        out
    }
    pub fn mul_vec(&self, l: &Lambda, v: &[u64]) -> Vec<u64> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(0, |acc, j| l.add(acc, l.mul(self.get(i, j), v[j])))
            })
            .collect()
    }
    pub fn add(&self, l: &Lambda, o: &Mat) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().zip(&o.a).map(|(&x, &y)| l.add(x, y)).collect(),
        }
    }
    pub fn sub(&self, l: &Lambda, o: &Mat) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().zip(&o.a).map(|(&x, &y)| l.sub(x, y)).collect(),
        }
    }
    pub fn scale(&self, l: &Lambda, c: u64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, a: self.a.iter().map(|&x| l.mul(x, c)).collect() }
    }
    pub fn hcat(&self, o: &Mat) -> Mat {
        assert_eq!(self.rows, o.rows);
        let mut out = Mat::zeros(self.rows, self.cols + o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
            for j in 0..o.cols {
                out.set(i, self.cols + j, o.get(i, j));
            }
        }
        out
    }
    pub fn vcat(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.cols);
        let mut a = self.a.clone();
        a.extend_from_slice(&o.a);
        Mat { rows: self.rows + o.rows, cols: self.cols, a }
    }
    pub fn select_rows(&self, idx: &[usize]) -> Mat {
        Mat::from_rows(&idx.iter().map(|&i| self.row(i)).collect::<Vec<_>>())
            .with_cols(self.cols)
    }
    pub fn select_cols(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (jj, &j) in idx.iter().enumerate() {
                out.set(i, jj, self.get(i, j));
            }
        }
        out
    }
    fn with_cols(mut self, c: usize) -> Mat {
        if self.rows == 0 {
            self.cols = c;
        }
        self
    }
    /// Block placement helper: copy `o` into self at (r0, c0).
    pub fn put(&mut self, r0: usize, c0: usize, o: &Mat) {
        for i in 0..o.rows {
            for j in 0..o.cols {
                self.set(r0 + i, c0 + j, o.get(i, j));
            }
        }
    }
}

/// Smith form U M V = D with D diagonal, diag entries p^vals[i] for
/// i < rank and zero afterwards.
#[derive(Clone, Debug)]
pub struct Snf {
    pub u: Mat,
    pub uinv: Mat,
    pub v: Mat,
    pub vals: Vec<u32>,
    pub rank: usize,
    pub rows: usize,
    pub cols: usize,
}

pub fn snf(l: &Lambda, m: &Mat) -> Snf {
    let (nr, nc) = (m.rows, m.cols);
    let md = l.modulus();
    let mut a = m.clone();
    let mut u = Mat::identity(nr);
    let mut uinv = Mat::identity(nr);
    let mut v = Mat::identity(nc);
    let mut vals = Vec::new();
    let mut k = 0;
    while k < nr.min(nc) {
        // pivot of minimal valuation
        let mut best: Option<(u32, usize, usize)> = None;
        'search: for i in k..nr {
            for j in k..nc {
                let x = a.get(i, j);
                if x != 0 {
                    let vv = l.val(x);
                    if best.is_none_or(|b| vv < b.0) {
                        best = Some((vv, i, j));
                        if vv == 0 {
                            break 'search;
                        }
                    }
                }
            }
        }
        let Some((pv, pi, pj)) = best else { break };
        if pi != k {
            for j in 0..nc {
                a.a.swap(pi * nc + j, k * nc + j);
            }
            for j in 0..nr {
                u.a.swap(pi * nr + j, k * nr + j);
            }
            for i in 0..nr {
                uinv.a.swap(i * nr + pi, i * nr + k);
            }
        }
        if pj != k {
            for i in 0..nr {
                a.a.swap(i * nc + pj, i * nc + k);
            }
            for i in 0..nc {
                v.a.swap(i * nc + pj, i * nc + k);
            }
        }
        // normalize the pivot to p^pv
        let piv = a.get(k, k);
        let unit = (piv / l.p.pow(pv)) % md;
        let uinvs = l.inv(unit).expect("unit part");
        if unit != 1 {
            for j in 0..nc {
                a.a[k * nc + j] = l.mul(a.a[k * nc + j], uinvs);
            }
            for j in 0..nr {
                u.a[k * nr + j] = l.mul(u.a[k * nr + j], uinvs);
            }
            for i in 0..nr {
                uinv.a[i * nr + k] = l.mul(uinv.a[i * nr + k], unit);
            }
        }
        let pp = l.p.pow(pv);
        // clear column k below
        for i in k + 1..nr {
            let x = a.get(i, k);
            if x == 0 {
                continue;
            }
            let f = x / pp;
            for j in k..nc {
                let y = l.mul(f, a.get(k, j));
                a.a[i * nc + j] = l.sub(a.a[i * nc + j], y);
            }
            for j in 0..nr {
                let y = l.mul(f, u.get(k, j));
                u.a[i * nr + j] = l.sub(u.a[i * nr + j], y);
            }
            for r in 0..nr {
                let y = l.mul(f, uinv.get(r, i));
                uinv.a[r * nr + k] = l.add(uinv.a[r * nr + k], y);
            }
        }
        // clear row k to the right
        for j in k + 1..nc {
            let x = a.get(k, j);
            if x == 0 {
                continue;
            }
            let f = x / pp;
            a.a[k * nc + j] = 0;
            for i in 0..nc {
                let y = l.mul(f, v.get(i, k));
                v.a[i * nc + j] = l.sub(v.a[i * nc + j], y);
            }
        }
        vals.push(pv);
        k += 1;
    }
    let rank = vals.len();
    Snf { u, uinv, v, vals, rank, rows: nr, cols: nc }
}

impl Snf {
    /// Length (log_p of the order) of the cokernel.
    pub fn coker_len(&self, l: &Lambda) -> u32 {
        self.vals.iter().sum::<u32>() + (self.rows - self.rank) as u32 * l.r
    }
    /// Length of the image.
    pub fn image_len(&self, l: &Lambda) -> u32 {
        self.vals.iter().map(|&v| l.r - v).sum()
    }
    /// Generators of the right kernel {x : M x = 0}, as columns.
    pub fn kernel(&self, l: &Lambda) -> Mat {
        let mut cols = Vec::new();
        for i in 0..self.cols {
            let scale = if i < self.rank { l.ppow(l.r - self.vals[i]) } else { 1 };
            if scale == 0 {
                continue;
            }
            cols.push(self.v.col(i).iter().map(|&x| l.mul(x, scale)).collect::<Vec<_>>());
        }
        cols_to_mat(self.cols, &cols)
    }
    /// A solution of M x = b if one exists.
    pub fn solve(&self, l: &Lambda, b: &[u64]) -> Option<Vec<u64>> {
        let ub = self.u.mul_vec(l, b);
        let mut y = vec![0u64; self.cols];
        for (i, &x) in ub.iter().enumerate() {
            if i < self.rank {
                let pp = l.p.pow(self.vals[i]);
                if x % pp != 0 {
                    return None;
                }
                y[i] = x / pp;
            } else if x != 0 {
                return None;
            }
        }
        Some(self.v.mul_vec(l, &y))
    }
}

pub fn cols_to_mat(rows: usize, cols: &[Vec<u64>]) -> Mat {
    let mut m = Mat::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (i, &x) in c.iter().enumerate() {
            m.set(i, j, x);
        }
    }
    m
}

/// Length of the submodule of Lambda^n spanned by the columns.
pub fn span_len(l: &Lambda, m: &Mat) -> u32 {
    if m.cols == 0 || m.rows == 0 {
        return 0;
    }
    snf(l, m).image_len(l)
}

/// A generating set of at most `rows` columns for the span of the columns.
pub fn reduce_span(l: &Lambda, m: &Mat) -> Mat {
    if m.cols == 0 {
        return m.clone();
    }
    let s = snf(l, m);
    let cols: Vec<Vec<u64>> = (0..s.rank)
        .filter(|&i| s.vals[i] < l.r)
        .map(|i| s.uinv.col(i).iter().map(|&x| l.mul(x, l.p.pow(s.vals[i]))).collect())
        .collect();
    cols_to_mat(m.rows, &cols)
}

/// True iff the linear map given by the matrix is injective.
pub fn is_injective(l: &Lambda, m: &Mat) -> bool {
    if m.cols == 0 {
        return true;
    }
    let s = snf(l, m);
    s.rank == m.cols && s.vals.iter().all(|&v| v == 0)
}

/// Whether the vector lies in the column span.
pub fn in_span(l: &Lambda, m: &Mat, v: &[u64]) -> bool {
    if m.cols == 0 {
        return v.iter().all(|&x| x == 0);
    }
    snf(l, m).solve(l, v).is_some()
}

/// The quotient Lambda^n / span(B), presented in Smith coordinates: the class
/// of x is (U x)[keep], coordinate j taken modulo p^w[j].
#[derive(Clone, Debug)]
pub struct Quotient {
    pub n: usize,
    pub u: Mat,
    pub uinv: Mat,
    pub keep: Vec<usize>,
    pub w: Vec<u32>,
}

impl Quotient {
    pub fn new(l: &Lambda, n: usize, b: &Mat) -> Quotient {
        if b.cols == 0 {
            return Quotient {
                n,
                u: Mat::identity(n),
                uinv: Mat::identity(n),
                keep: (0..n).collect(),
                w: vec![l.r; n],
            };
        }
        let s = snf(l, b);
        let mut keep = Vec::new();
        let mut w = Vec::new();
        for i in 0..n {
            let wi = if i < s.rank { s.vals[i] } else { l.r };
            if wi > 0 {
                keep.push(i);
                w.push(wi);
            }
        }
        Quotient { n, u: s.u, uinv: s.uinv, keep, w }
    }
    /// Length of the quotient.
    pub fn len(&self) -> u32 {
        self.w.iter().sum()
    }
    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }
    pub fn dim(&self) -> usize {
        self.keep.len()
    }
    pub fn project(&self, l: &Lambda, x: &[u64]) -> Vec<u64> {
        let ux = self.u.mul_vec(l, x);
        self.keep.iter().zip(&self.w).map(|(&i, &w)| ux[i] % l.p.pow(w)).collect()
    }
    pub fn lift(&self, l: &Lambda, y: &[u64]) -> Vec<u64> {
        let mut full = vec![0u64; self.n];
        for (&i, &yi) in self.keep.iter().zip(y) {
            full[i] = yi;
        }
        self.uinv.mul_vec(l, &full)
    }
    pub fn is_zero_class(&self, l: &Lambda, x: &[u64]) -> bool {
        self.project(l, x).iter().all(|&v| v == 0)
    }
    /// Matrix of an endomorphism of Lambda^n preserving span(B), induced on
    /// the quotient coordinates.
    pub fn induced(&self, l: &Lambda, a: &Mat) -> Mat {
        let keep_all = self.uinv.select_cols(&self.keep);
        let img = self.u.mul(l, &a.mul(l, &keep_all));
        let mut out = img.select_rows(&self.keep);
        for (i, &w) in self.w.iter().enumerate() {
            let md = l.p.pow(w);
            for j in 0..out.cols {
                let x = out.get(i, j) % md;
                out.set(i, j, x);
            }
        }
        out
    }
    /// Length of the submodule generated by the given classes (columns in
    /// quotient coordinates).
    pub fn sub_len(&self, l: &Lambda, s: &Mat) -> u32 {
        let mut scaled = s.clone();
        for (i, &w) in self.w.iter().enumerate() {
            let f = l.ppow(l.r - w);
            for j in 0..scaled.cols {
                let x = l.mul(scaled.get(i, j), f);
                scaled.set(i, j, x);
            }
        }
        span_len(l, &scaled)
    }
    /// Relation matrix diag(p^w).
    pub fn relations(&self, l: &Lambda) -> Mat {
        let d = self.dim();
        let mut m = Mat::zeros(d, d);
        for (i, &w) in self.w.iter().enumerate() {
            m.set(i, i, l.ppow(w));
        }
        m
    }
}

/// Generators (columns, quotient coordinates) of the submodule of classes
/// fixed by every induced action in `acts`.
pub fn quotient_invariants(l: &Lambda, q: &Quotient, acts: &[Mat]) -> Mat {
    let d = q.dim();
    let rel = q.relations(l);
    let mut s = Mat::identity(d);
    for a in acts {
        if s.cols == 0 {
            break;
        }
        let diff = a.sub(l, &Mat::identity(d)).mul(l, &s);
        if diff.a.iter().enumerate().all(|(idx, &x)| x % l.p.pow(q.w[idx / diff.cols]) == 0) {
            continue;
        }
        let big = diff.hcat(&rel);
        let ker = snf(l, &big).kernel(l);
        let z = ker.select_rows(&(0..s.cols).collect::<Vec<_>>());
        let ns = s.mul(l, &z);
        s = reduce_span(l, &ns);
    }
    s
}

/// Generators of the invariants {x : A x = x for all A} of Lambda^n.
pub fn invariants(l: &Lambda, n: usize, acts: &[Mat]) -> Mat {
    let q = Quotient::new(l, n, &Mat::zeros(n, 0));
    quotient_invariants(l, &q, acts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snf_reconstructs() {
        let l = Lambda::new(2, 3).unwrap();
        let m = Mat::from_rows(&[vec![2, 4, 6], vec![4, 0, 2], vec![1, 3, 5]]);
        let s = snf(&l, &m);
        let d = s.u.mul(&l, &m).mul(&l, &s.v);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j && i < s.rank { l.p.pow(s.vals[i]) } else { 0 };
                assert_eq!(d.get(i, j), expect);
            }
        }
        assert_eq!(s.u.mul(&l, &s.uinv), Mat::identity(3));
    }

    #[test]
    fn regular_rep_invariants() {
        let l = Lambda::new(3, 1).unwrap();
        let cyc = Mat::from_rows(&[vec![0, 0, 1], vec![1, 0, 0], vec![0, 1, 0]]);
        let inv = invariants(&l, 3, &[cyc]);
        assert_eq!(span_len(&l, &inv), 1);
    }
}
