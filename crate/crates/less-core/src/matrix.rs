//! Dense row-major linear algebra sized for tall-and-skinny data
//! (d up to ~512, n up to ~10^6).
//!
//! Factorizations are written from scratch: Cholesky for SPD solves and
//! inverses, Householder thin QR for orthonormal bases, cyclic Jacobi for
//! symmetric eigenvalues, and power iteration for spectral norms of general
//! square matrices. Matrices are immutable after construction in all public
//! pipelines and safe to share across worker threads.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Relative pivot floor for Cholesky: pivot must exceed `1e-14 * trace/d`.
const CHOL_PIVOT_REL: f64 = 1e-14;
/// Relative floor for QR diagonal entries before declaring rank deficiency.
const QR_RANK_REL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols);
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    /// self^T * other, accumulated row by row of the inputs.
    pub fn transpose_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        let mut out = Matrix::zeros(self.cols, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let b_row = other.row(i);
            for (j, &aij) in a_row.iter().enumerate() {
                if aij == 0.0 {
                    continue;
                }
                let out_row = out.row_mut(j);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += aij * b;
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= s;
        }
        m
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        m
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        m
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// Force exact symmetry by averaging with the transpose.
    pub fn symmetrized(&self) -> Matrix {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// The n x d data matrix A with n >= d. Full column rank is checked lazily
/// at factorization time, not at construction.
#[derive(Clone, Debug)]
pub struct TallMatrix {
    inner: Matrix,
}

impl TallMatrix {
    pub fn new(inner: Matrix) -> Result<Self> {
        if inner.cols() > inner.rows() {
            return Err(Error::ShapeInvalid(format!(
                "need d <= n, got n={} d={}",
                inner.rows(),
                inner.cols()
            )));
        }
        if !inner.is_finite() {
            return Err(Error::ShapeInvalid("non-finite entries".into()));
        }
        Ok(TallMatrix { inner })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.inner.rows()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.inner.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.inner.row(i)
    }

    pub fn inner(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_inner(self) -> Matrix {
        self.inner
    }

    /// Plain-text format: first line `n d`, then n rows of d reals with
    /// 17 significant digits.
    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{} {}", self.n(), self.d())?;
        let mut line = String::new();
        for i in 0..self.n() {
            line.clear();
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                write!(line, "{v:.16e}").expect("write to string");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .ok_or_else(|| Error::Parse("missing n".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad n: {e}")))?;
        let d: usize = it
            .next()
            .ok_or_else(|| Error::Parse("missing d".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad d: {e}")))?;
        let mut data = Vec::with_capacity(n * d);
        let mut line = String::new();
        for i in 0..n {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Parse(format!("expected {n} rows, got {i}")));
            }
            for tok in line.split_whitespace() {
                data.push(
                    tok.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {i}: {e}")))?,
                );
            }
            if data.len() != (i + 1) * d {
                return Err(Error::Parse(format!("row {i}: expected {d} entries")));
            }
        }
        TallMatrix::new(Matrix::from_vec(n, d, data))
    }
}

/// A d x d symmetric matrix; positive definiteness is established by a
/// successful Cholesky factorization.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    inner: Matrix,
}

impl SpdMatrix {
    /// Requires symmetry to within 1e-12 per entry.
    pub fn new(inner: Matrix) -> Result<Self> {
        if inner.rows() != inner.cols() {
            return Err(Error::ShapeInvalid(format!(
                "not square: {}x{}",
                inner.rows(),
                inner.cols()
            )));
        }
        for i in 0..inner.rows() {
            for j in (i + 1)..inner.cols() {
                if (inner[(i, j)] - inner[(j, i)]).abs() > 1e-12 {
                    return Err(Error::ShapeInvalid(format!(
                        "asymmetric at ({i},{j}): {} vs {}",
                        inner[(i, j)],
                        inner[(j, i)]
                    )));
                }
            }
        }
        Ok(SpdMatrix {
            inner: inner.symmetrized(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn inner(&self) -> &Matrix {
        &self.inner
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::new(&self.inner)
    }
}

/// Lower-triangular Cholesky factor L with M = L L^T.
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Pivot floor is `1e-14 * trace/d`; a smaller pivot reports
    /// `NotPositiveDefinite` rather than producing garbage.
    pub fn new(m: &Matrix) -> Result<Self> {
        let d = m.rows();
        assert_eq!(d, m.cols());
        let floor = CHOL_PIVOT_REL * (m.trace() / d as f64).abs();
        let mut l = Matrix::zeros(d, d);
        for j in 0..d {
            let mut diag = m[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if diag <= floor || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    col: j,
                    pivot: diag,
                    floor,
                });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..d {
                let mut v = m[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// Solve L y = b in place.
    pub fn solve_lower(&self, b: &mut [f64]) {
        let d = self.l.rows();
        for i in 0..d {
            let mut v = b[i];
            for k in 0..i {
                v -= self.l[(i, k)] * b[k];
            }
            b[i] = v / self.l[(i, i)];
        }
    }

    /// Solve L^T y = b in place.
    pub fn solve_upper(&self, b: &mut [f64]) {
        let d = self.l.rows();
        for i in (0..d).rev() {
            let mut v = b[i];
            for k in (i + 1)..d {
                v -= self.l[(k, i)] * b[k];
            }
            b[i] = v / self.l[(i, i)];
        }
    }

    /// Solve (L L^T) x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower(&mut x);
        self.solve_upper(&mut x);
        x
    }

    /// Inverse of the factored matrix, symmetrized on output.
    pub fn inverse(&self) -> Matrix {
        let d = self.l.rows();
        let mut inv = Matrix::zeros(d, d);
        let mut col = vec![0.0; d];
        for j in 0..d {
            col.fill(0.0);
            col[j] = 1.0;
            self.solve_lower(&mut col);
            self.solve_upper(&mut col);
            for i in 0..d {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrized()
    }

    /// L^T Q L: orthogonally similar to M^{1/2} Q M^{1/2}, so it shares its
    /// eigenvalues; this is the whitening used for all bias metrology.
    pub fn congruence(&self, q: &Matrix) -> Matrix {
        let d = self.l.rows();
        assert_eq!((q.rows(), q.cols()), (d, d));
        // tmp = Q L
        let mut tmp = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut v = 0.0;
                for k in j..d {
                    v += q[(i, k)] * self.l[(k, j)];
                }
                tmp[(i, j)] = v;
            }
        }
        // out = L^T tmp
        let mut out = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut v = 0.0;
                for k in i..d {
                    v += self.l[(k, i)] * tmp[(k, j)];
                }
                out[(i, j)] = v;
            }
        }
        out.symmetrized()
    }

    /// L^{-1} M L^{-T}: whitening of M against the factored matrix.
    pub fn whiten(&self, m: &Matrix) -> Matrix {
        let d = self.l.rows();
        assert_eq!((m.rows(), m.cols()), (d, d));
        // Solve L X = M column-wise, then X L^{-T} via rows.
        let mut x = m.clone();
        // forward solve on each column: L X = M
        for j in 0..d {
            for i in 0..d {
                let mut v = x[(i, j)];
                for k in 0..i {
                    v -= self.l[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = v / self.l[(i, i)];
            }
        }
        // now solve Y L^T = X i.e. L Y^T = X^T: forward solve on rows
        for i in 0..d {
            for j in 0..d {
                let mut v = x[(i, j)];
                for k in 0..j {
                    v -= x[(i, k)] * self.l[(j, k)];
                }
                x[(i, j)] = v / self.l[(j, j)];
            }
        }
        x.symmetrized()
    }
}

/// n x d matrix U with U^T U = I (tolerance 1e-10 max-entry).
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    inner: Matrix,
}

impl OrthonormalBasis {
    pub fn new(inner: Matrix) -> Result<Self> {
        let gram = inner.transpose_matmul(&inner);
        let resid = gram.max_abs_diff(&Matrix::identity(inner.cols()));
        if resid > 1e-10 {
            return Err(Error::ShapeInvalid(format!(
                "columns not orthonormal: max |U'U - I| = {resid:.3e}"
            )));
        }
        Ok(OrthonormalBasis { inner })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.inner.rows()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.inner.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.inner.row(i)
    }

    pub fn inner(&self) -> &Matrix {
        &self.inner
    }

    pub fn as_tall(&self) -> TallMatrix {
        TallMatrix::new(self.inner.clone()).expect("orthonormal basis is tall")
    }
}

/// A^T A, symmetrized after accumulation.
pub fn gram(a: &TallMatrix) -> SpdMatrix {
    SpdMatrix::new(gram_raw(a.inner())).expect("gram is symmetric by construction")
}

/// A^T A of a plain matrix (used on sketched outputs).
pub fn gram_raw(a: &Matrix) -> Matrix {
    let n = a.rows();
    let d = a.cols();
    let mut g = Matrix::zeros(d, d);
    for i in 0..n {
        let r = a.row(i);
        for (j, &rj) in r.iter().enumerate() {
            if rj == 0.0 {
                continue;
            }
            let row = g.row_mut(j);
            for k in j..d {
                row[k] += rj * r[k];
            }
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            g[(k, j)] = g[(j, k)];
        }
    }
    g
}

/// M^{-1} via Cholesky. `NotPositiveDefinite` signals a singular input; for
/// sketched Gram matrices callers treat that as "estimate undefined".
pub fn spd_inverse(m: &SpdMatrix) -> Result<SpdMatrix> {
    let chol = m.cholesky()?;
    SpdMatrix::new(chol.inverse())
}

/// Thin Householder QR: A = Q R with Q n x d, R d x d upper triangular and
/// non-negative diagonal (column signs fixed).
pub fn thin_qr(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let n = a.rows();
    let d = a.cols();
    assert!(n >= d);
    let mut r = a.clone();
    // Householder vectors stored per column.
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut norm = 0.0;
        for i in j..n {
            norm += r[(i, j)] * r[(i, j)];
        }
        let norm = norm.sqrt();
        let alpha = if r[(j, j)] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - j];
        for i in j..n {
            v[i - j] = r[(i, j)];
        }
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for k in j..d {
                let mut proj = 0.0;
                for i in j..n {
                    proj += v[i - j] * r[(i, k)];
                }
                let scale = 2.0 * proj / vnorm2;
                for i in j..n {
                    r[(i, k)] -= scale * v[i - j];
                }
            }
        }
        vs.push(v);
    }
    // Rank check on the R diagonal.
    let max_diag = (0..d).fold(0.0_f64, |m, j| m.max(r[(j, j)].abs()));
    for j in 0..d {
        let pivot = r[(j, j)].abs();
        if pivot <= QR_RANK_REL * max_diag || max_diag == 0.0 {
            return Err(Error::RankDeficient {
                col: j,
                pivot,
                floor: QR_RANK_REL * max_diag,
            });
        }
    }
    // Accumulate Q = H_0 ... H_{d-1} applied to the first d columns of I.
    let mut q = Matrix::zeros(n, d);
    for j in 0..d {
        q[(j, j)] = 1.0;
    }
    for j in (0..d).rev() {
        let v = &vs[j];
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for k in 0..d {
            let mut proj = 0.0;
            for i in j..n {
                proj += v[i - j] * q[(i, k)];
            }
            let scale = 2.0 * proj / vnorm2;
            for i in j..n {
                q[(i, k)] -= scale * v[i - j];
            }
        }
    }
    // Fix signs so R has a non-negative diagonal.
    let mut r_out = Matrix::zeros(d, d);
    for j in 0..d {
        let s = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        for k in j..d {
            r_out[(j, k)] = s * r[(j, k)];
        }
        if s < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok((q, r_out))
}

/// Orthonormal basis of col(A) via thin QR. Differs from A (A^T A)^{-1/2}
/// by a d x d rotation, which every downstream use is invariant to.
pub fn orthonormal_basis(a: &TallMatrix) -> Result<OrthonormalBasis> {
    let (q, _r) = thin_qr(a.inner())?;
    OrthonormalBasis::new(q)
}

/// Largest singular value by power iteration on M^T M, relative accuracy
/// 1e-6 (iterate until the Rayleigh quotient moves by < 1e-9, cap 1e4).
pub fn spectral_norm(m: &Matrix) -> f64 {
    let n = m.cols();
    if m.max_abs() == 0.0 {
        return 0.0;
    }
    let mut stream = RngStream::new(0x5bec_7ca1, 0);
    let mut v: Vec<f64> = (0..n).map(|_| stream.gaussian()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    let mut prev = 0.0;
    for _ in 0..10_000 {
        let w = m.mul_vec(&v);
        // u = M^T w
        let mut u = vec![0.0; n];
        for i in 0..m.rows() {
            axpy(&mut u, w[i], m.row(i));
        }
        let sigma2 = dot(&u, &v);
        let unorm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if unorm == 0.0 {
            return 0.0;
        }
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = ui / unorm;
        }
        let sigma = sigma2.max(0.0).sqrt();
        if (sigma - prev).abs() <= 1e-9 * sigma.max(1e-300) {
            return sigma;
        }
        prev = sigma;
    }
    prev
}

/// All eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    assert_eq!(n, m.cols());
    let mut a = m.symmetrized();
    let scale = a.max_abs();
    if scale == 0.0 {
        return vec![0.0; n];
    }
    for _sweep in 0..60 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// max |eigenvalue| of a symmetric matrix.
pub fn sym_spectral_norm(m: &Matrix) -> f64 {
    let ev = sym_eigenvalues(m);
    ev.iter().fold(0.0, |mx, v| mx.max(v.abs()))
}

/// In-place fast Walsh-Hadamard transform, normalized by 1/sqrt(len) so the
/// transform is orthonormal and self-inverse.
pub fn walsh_hadamard(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::LengthNotPowerOfTwo { len: n });
    }
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let x = v[j];
                let y = v[j + h];
                v[j] = x + y;
                v[j + h] = x - y;
            }
            i += 2 * h;
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for x in v {
        *x *= scale;
    }
    Ok(())
}

pub fn next_power_of_two(n: usize) -> usize {
    n.next_power_of_two()
}

/// H diag(eps) A_padded with i.i.d. uniform signs eps drawn from `seed`:
/// rows are zero-padded to the next power of two, so the Gram matrix is
/// preserved exactly (H diag(eps) is orthonormal).
pub fn randomized_hadamard_preprocess(a: &TallMatrix, seed: u64) -> TallMatrix {
    let mut stream = RngStream::new(seed, 0);
    randomized_hadamard_with_stream(a, &mut stream)
}

pub(crate) fn randomized_hadamard_with_stream(a: &TallMatrix, stream: &mut RngStream) -> TallMatrix {
    let n = a.n();
    let d = a.d();
    let n_pad = next_power_of_two(n);
    let signs: Vec<f64> = (0..n).map(|_| stream.sign()).collect();
    let mut out = Matrix::zeros(n_pad, d);
    let mut col = vec![0.0; n_pad];
    for j in 0..d {
        for i in 0..n_pad {
            col[i] = if i < n { signs[i] * a.inner()[(i, j)] } else { 0.0 };
        }
        walsh_hadamard(&mut col).expect("padded length is a power of two");
        for i in 0..n_pad {
            out[(i, j)] = col[i];
        }
    }
    TallMatrix::new(out).expect("padded matrix is tall")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    pub(crate) fn random_tall(n: usize, d: usize, seed: u64) -> TallMatrix {
        let mut s = RngStream::new(seed, 0);
        let mut m = Matrix::zeros(n, d);
        for i in 0..n {
            for j in 0..d {
                m[(i, j)] = s.gaussian();
            }
        }
        TallMatrix::new(m).unwrap()
    }

    #[test]
    fn gram_small_example() {
        let a = TallMatrix::new(Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]])).unwrap();
        let g = gram(&a);
        assert_eq!(g.inner()[(0, 0)], 10.0);
        assert_eq!(g.inner()[(0, 1)], 14.0);
        assert_eq!(g.inner()[(1, 0)], 14.0);
        assert_eq!(g.inner()[(1, 1)], 20.0);
    }

    #[test]
    fn gram_identity_padded() {
        let mut m = Matrix::zeros(5, 3);
        for i in 0..3 {
            m[(i, i)] = 1.0;
        }
        let a = TallMatrix::new(m).unwrap();
        let g = gram(&a);
        assert_eq!(g.inner().max_abs_diff(&Matrix::identity(3)), 0.0);
    }

    #[test]
    fn spd_inverse_examples() {
        let i3 = SpdMatrix::new(Matrix::identity(3)).unwrap();
        let inv = spd_inverse(&i3).unwrap();
        assert!(inv.inner().max_abs_diff(&Matrix::identity(3)) < 1e-14);

        let diag = SpdMatrix::new(Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 4.0]])).unwrap();
        let inv = spd_inverse(&diag).unwrap();
        assert!((inv.inner()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((inv.inner()[(1, 1)] - 0.25).abs() < 1e-15);

        let m = SpdMatrix::new(Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        let inv = spd_inverse(&m).unwrap();
        let expect = Matrix::from_rows(&[&[2.0 / 3.0, -1.0 / 3.0], &[-1.0 / 3.0, 2.0 / 3.0]]);
        assert!(inv.inner().max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn spd_inverse_rejects_singular() {
        let m = SpdMatrix::new(Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!(matches!(
            spd_inverse(&m),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let a = random_tall(40, 6, 17);
        let g = gram(&a);
        let inv = spd_inverse(&g).unwrap();
        let inv2 = spd_inverse(&inv).unwrap();
        let rel = inv2.inner().max_abs_diff(g.inner()) / g.inner().max_abs();
        assert!(rel < 1e-6, "roundtrip rel error {rel}");
        // contract: ||M M^{-1} - I||_max <= 1e-8 for moderate conditioning
        let prod = g.inner().matmul(inv.inner());
        assert!(prod.max_abs_diff(&Matrix::identity(6)) < 1e-8);
    }

    #[test]
    fn basis_of_orthonormal_input_is_sign_flip() {
        let mut m = Matrix::zeros(3, 2);
        m[(0, 0)] = 1.0;
        m[(1, 1)] = 1.0;
        let a = TallMatrix::new(m.clone()).unwrap();
        let u = orthonormal_basis(&a).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!((u.inner()[(i, j)].abs() - m[(i, j)].abs()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn basis_diag_example() {
        let a = TallMatrix::new(Matrix::from_rows(&[
            &[2.0, 0.0],
            &[0.0, 3.0],
            &[0.0, 0.0],
        ]))
        .unwrap();
        let u = orthonormal_basis(&a).unwrap();
        assert!((u.inner()[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((u.inner()[(1, 1)].abs() - 1.0).abs() < 1e-12);
        assert!(u.inner()[(2, 0)].abs() < 1e-12);
    }

    #[test]
    fn basis_projection_identity() {
        // U U^T A = A within 1e-8, which covers U U^T a_i = a_i per row.
        let a = random_tall(30, 5, 3);
        let u = orthonormal_basis(&a).unwrap();
        let ut_a = u.inner().transpose_matmul(a.inner());
        let proj = u.inner().matmul(&ut_a);
        assert!(proj.max_abs_diff(a.inner()) < 1e-8);
    }

    #[test]
    fn qr_rejects_rank_deficient() {
        let mut m = Matrix::zeros(4, 2);
        for i in 0..4 {
            m[(i, 0)] = 1.0;
            m[(i, 1)] = 2.0;
        }
        let a = TallMatrix::new(m).unwrap();
        assert!(matches!(
            orthonormal_basis(&a),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn spectral_norm_examples() {
        let m = Matrix::from_rows(&[&[3.0, 0.0], &[0.0, -5.0]]);
        assert!((spectral_norm(&m) - 5.0).abs() < 5e-6);
        assert_eq!(spectral_norm(&Matrix::zeros(3, 3)), 0.0);
        // rank-one v v^T with ||v|| = 2 has norm 4
        let v = [1.2, -0.8, 1.2, 0.8];
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>();
        let scale = 2.0 / norm.sqrt();
        let v: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let mut m = Matrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = v[i] * v[j];
            }
        }
        assert!((spectral_norm(&m) - 4.0).abs() < 4e-5);
    }

    #[test]
    fn sym_eigenvalues_match_diag() {
        let m = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let ev = sym_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!((ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn walsh_hadamard_examples() {
        let mut v = vec![1.0, 1.0];
        walsh_hadamard(&mut v).unwrap();
        assert!((v[0] - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!(v[1].abs() < 1e-15);

        let mut e = vec![1.0, 0.0, 0.0, 0.0];
        walsh_hadamard(&mut e).unwrap();
        for x in &e {
            assert!((x - 0.5).abs() < 1e-15);
        }

        let mut bad = vec![1.0, 2.0, 3.0];
        assert!(matches!(
            walsh_hadamard(&mut bad),
            Err(Error::LengthNotPowerOfTwo { len: 3 })
        ));
    }

    #[test]
    fn walsh_hadamard_involution_and_isometry() {
        let mut s = RngStream::new(21, 0);
        let v: Vec<f64> = (0..64).map(|_| s.gaussian()).collect();
        let norm0: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut w = v.clone();
        walsh_hadamard(&mut w).unwrap();
        let norm1: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm1 - norm0).abs() < 1e-12 * norm0);
        walsh_hadamard(&mut w).unwrap();
        for (a, b) in w.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rht_preserves_gram() {
        let a = random_tall(7, 3, 5);
        let b = randomized_hadamard_preprocess(&a, 99);
        assert_eq!(b.n(), 8);
        let ga = gram(&a);
        let gb = gram(&b);
        assert!(ga.inner().max_abs_diff(gb.inner()) < 1e-8);
        // applying twice is not the identity, but gram still holds
        let c = randomized_hadamard_preprocess(&b, 99);
        assert!(c.inner().max_abs_diff(b.inner()) > 1e-3);
        assert!(gram(&c).inner().max_abs_diff(ga.inner()) < 1e-8);
    }

    #[test]
    fn matrix_text_roundtrip() {
        let a = random_tall(9, 4, 31);
        let mut buf = Vec::new();
        a.write_text(&mut buf).unwrap();
        let b = TallMatrix::read_text(&mut &buf[..]).unwrap();
        assert_eq!(a.inner().max_abs_diff(b.inner()), 0.0);
    }

    #[test]
    fn whiten_and_congruence_agree_with_direct() {
        let a = random_tall(20, 4, 8);
        let h = gram(&a);
        let chol = h.cholesky().unwrap();
        let q = spd_inverse(&h).unwrap();
        // congruence(Q) should be orthogonally similar to the identity here
        let w = chol.congruence(q.inner());
        assert!(w.max_abs_diff(&Matrix::identity(4)) < 1e-8);
        // whiten(H) = I
        let wh = chol.whiten(h.inner());
        assert!(wh.max_abs_diff(&Matrix::identity(4)) < 1e-10);
    }
}
