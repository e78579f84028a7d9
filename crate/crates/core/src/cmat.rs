//! Dense complex matrices and the real Frobenius geometry.
//!
//! `C^{r x c}` is treated as a real inner-product space of dimension `2rc`
//! under `Re[X, Y]_F = Re tr(X^H Y)`. Everything downstream (gradients,
//! projections, descent certificates) is phrased in that geometry, so the
//! helpers here are the only place entry-level arithmetic happens.

use std::fmt;
use std::ops::Index;

use num_complex::Complex64;

use crate::error::{dim_err, CmopError, Result};

pub type C64 = Complex64;

/// Row-major dense complex matrix.
///
/// Entries are stored as interleaved `(re, im)` pairs, so each row is a
/// contiguous slice. Constructors that accept external data reject NaN and
/// infinities; arithmetic on finite inputs can still overflow, which callers
/// detect with [`ComplexMatrix::all_finite`].
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CmopError::Dimension {
                op: "ComplexMatrix::new",
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(CmopError::NonFinite { what: "matrix entries" });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from separate row-major real and imaginary parts.
    pub fn from_parts(rows: usize, cols: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(CmopError::Dimension {
                op: "ComplexMatrix::from_parts",
                expected: format!("{} imaginary parts", re.len()),
                found: format!("{}", im.len()),
            });
        }
        let data = re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)).collect();
        Self::new(rows, cols, data)
    }

    pub fn from_real(rows: usize, cols: usize, re: &[f64]) -> Result<Self> {
        Self::new(rows, cols, re.iter().map(|&r| C64::new(r, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = C64::new(v, 0.0);
        }
        m
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [C64] {
        let cols = self.cols;
        &mut self.data[r * cols..(r + 1) * cols]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    pub fn imag_parts(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.im).collect()
    }

    /// Conjugate transpose `X^H`.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c].conj();
            }
        }
        out
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(CmopError::Dimension {
                op: "matmul",
                expected: format!("rhs with {} rows", self.cols),
                found: format!("{} rows", rhs.rows),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (p, &lhs) in self.row(i).iter().enumerate() {
                for (o, &r) in out_row.iter_mut().zip(rhs.row(p)) {
                    *o += lhs * r;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    /// `self - alpha * rhs` for real `alpha`.
    pub fn sub_scaled(&self, alpha: f64, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "sub_scaled", |a, b| a - b * alpha)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|z| z * s).collect())
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|z| z * s).collect())
    }

    /// Largest entry-wise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        self.check_same_shape(rhs, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Whether `self` equals its conjugate transpose within `tol` per entry.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let n = self.rows;
        (0..n).all(|i| (0..n).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol))
    }

    fn zip_with(&self, rhs: &Self, op: &'static str, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        self.check_same_shape(rhs, op)?;
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_raw(self.rows, self.cols, data))
    }

    fn check_same_shape(&self, rhs: &Self, op: &'static str) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(dim_err(op, self.shape(), rhs.shape()));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(r) {
                write!(f, "{:+.6e}{:+.6e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Finite real vector, used for `diag(W W^H)` and multiplier vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(CmopError::NonFinite { what: "vector entries" });
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for RealVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `Re[x, y]_F = Re tr(x^H y) = sum Re(x) Re(y) + Im(x) Im(y)`.
pub fn re_frob_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<f64> {
    x.check_same_shape(y, "re_frob_inner")?;
    Ok(re_inner_slices(&x.data, &y.data))
}

#[inline]
pub(crate) fn re_inner_slices(x: &[C64], y: &[C64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
}

pub fn frob_norm(x: &ComplexMatrix) -> f64 {
    sq_norm_slice(&x.data).sqrt()
}

#[inline]
pub(crate) fn sq_norm_slice(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Squared Euclidean norm of every row, i.e. `diag(W W^H)`.
pub fn row_sq_norms(w: &ComplexMatrix) -> RealVector {
    RealVector((0..w.rows).map(|r| sq_norm_slice(w.row(r))).collect())
}

/// `x^H y` without materialising the adjoint.
pub fn adjoint_product(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x.rows != y.rows {
        return Err(CmopError::Dimension {
            op: "adjoint_product",
            expected: format!("{} rows", x.rows),
            found: format!("{} rows", y.rows),
        });
    }
    let mut out = ComplexMatrix::zeros(x.cols, y.cols);
    for m in 0..x.rows {
        let y_row = y.row(m);
        for (i, xv) in x.row(m).iter().enumerate() {
            let xc = xv.conj();
            let out_row = &mut out.data[i * y.cols..(i + 1) * y.cols];
            for (o, &yv) in out_row.iter_mut().zip(y_row) {
                *o += xc * yv;
            }
        }
    }
    Ok(out)
}

/// Solves `a x = b` for square `a` by LU with partial pivoting.
///
/// Fails with [`CmopError::Singular`] when a pivot modulus drops below
/// `pivot_rel * ||a||_F`.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix, pivot_rel: f64) -> Result<ComplexMatrix> {
    let n = a.rows;
    if a.cols != n {
        return Err(dim_err("solve", (n, n), a.shape()));
    }
    if b.rows != n {
        return Err(CmopError::Dimension {
            op: "solve",
            expected: format!("rhs with {n} rows"),
            found: format!("{} rows", b.rows),
        });
    }
    let threshold = pivot_rel * frob_norm(a);
    let mut lu = a.data.clone();
    let mut x = b.clone();
    let k = b.cols;
    for col in 0..n {
        let (piv, piv_mod) = (col..n)
            .map(|r| (r, lu[r * n + col].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(piv_mod > threshold) {
            return Err(CmopError::Singular {
                detail: format!("pivot {piv_mod:e} at column {col} below {threshold:e}"),
            });
        }
        if piv != col {
            for c in 0..n {
                lu.swap(col * n + c, piv * n + c);
            }
            for c in 0..k {
                x.data.swap(col * k + c, piv * k + c);
            }
        }
        let inv = lu[col * n + col].inv();
        for r in col + 1..n {
            let factor = lu[r * n + col] * inv;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for c in col..n {
                let v = lu[col * n + c];
                lu[r * n + c] -= factor * v;
            }
            for c in 0..k {
                let v = x.data[col * k + c];
                x.data[r * k + c] -= factor * v;
            }
        }
    }
    for col in (0..n).rev() {
        let inv = lu[col * n + col].inv();
        for c in 0..k {
            let mut acc = x.data[col * k + c];
            for j in col + 1..n {
                acc -= lu[col * n + j] * x.data[j * k + c];
            }
            x.data[col * k + c] = acc * inv;
        }
    }
    Ok(x)
}
