//! Small dense helpers on top of faer shared by every stage.

use faer::{c64, Col, Mat, MatRef};

pub type CMat = Mat<c64>;
pub type CCol = Col<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

pub fn real(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn frobenius(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint().to_owned()
}

pub fn conjugate(m: &CMat) -> CMat {
    m.conjugate().to_owned()
}

pub fn transpose(m: &CMat) -> CMat {
    m.transpose().to_owned()
}

pub fn conj_col(v: &CCol) -> CCol {
    Col::from_fn(v.nrows(), |i| v[i].conj())
}

pub fn col_norm(v: &CCol) -> f64 {
    v.norm_l2()
}

pub fn scale_col(v: &CCol, a: c64) -> CCol {
    Col::from_fn(v.nrows(), |i| v[i] * a)
}

pub fn sub_col(a: &CCol, b: &CCol) -> CCol {
    Col::from_fn(a.nrows(), |i| a[i] - b[i])
}

/// `a† b`.
pub fn inner(a: &CCol, b: &CCol) -> c64 {
    (0..a.nrows()).fold(ZERO, |acc, i| acc + a[i].conj() * b[i])
}

/// `aᵀ b`, no conjugation.
pub fn bilinear(a: &CCol, b: &CCol) -> c64 {
    (0..a.nrows()).fold(ZERO, |acc, i| acc + a[i] * b[i])
}

pub fn mat_vec(m: &CMat, v: &CCol) -> CCol {
    m * v
}

pub fn column(m: &CMat, j: usize) -> CCol {
    m.col(j).to_owned()
}

pub fn from_columns(rows: usize, cols: &[CCol]) -> CMat {
    Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Frobenius distance to the identity.
pub fn identity_residual(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..n {
            let target = if i == j { ONE } else { ZERO };
            acc += (m[(i, j)] - target).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn max_abs_imag(m: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].im.abs());
        }
    }
    worst
}

/// Frobenius norm of `a - b`.
pub fn distance(a: &CMat, b: &CMat) -> f64 {
    frobenius((a - b).as_ref())
}

pub fn total_order(a: &c64, b: &c64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}
