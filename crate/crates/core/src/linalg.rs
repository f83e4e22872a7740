//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Full Householder QR: `a = q · r` with `q` unitary `m × m` and `r` upper trapezoidal `m × n`.
#[derive(Clone, Debug)]
pub struct FullQr {
    pub q: CMat,
    pub r: CMat,
}

impl FullQr {
    pub fn new(a: &CMat) -> Self {
        let (m, n) = a.shape();
        let mut r = a.clone();
        let mut q = CMat::identity(m, m);
        for j in 0..n.min(m) {
            let x = r.view((j, j), (m - j, 1)).clone_owned();
            let alpha = x[0];
            let xnorm = x.norm();
            if xnorm == 0.0 {
                continue;
            }
            // the sign choice avoids cancellation in v[0]
            let phase = if alpha.norm() == 0.0 { ONE } else { alpha / alpha.norm() };
            let mut v = x;
            v[0] += phase * xnorm;
            let vnorm = v.norm();
            if vnorm == 0.0 {
                continue;
            }
            v /= Complex64::new(vnorm, 0.0);
            // r[j.., j..] -= 2 v (v^H r)
            {
                let mut sub = r.view_mut((j, j), (m - j, n - j));
                let w = v.adjoint() * &sub;
                sub -= &v * w * Complex64::new(2.0, 0.0);
            }
            // q[.., j..] -= 2 (q v) v^H
            {
                let mut sub = q.view_mut((0, j), (m, m - j));
                let w = &sub * &v;
                sub -= w * v.adjoint() * Complex64::new(2.0, 0.0);
            }
        }
        for j in 0..n {
            for i in (j + 1)..m {
                r[(i, j)] = ZERO;
            }
        }
        FullQr { q, r }
    }

    /// First `k` columns of `q`.
    pub fn q1(&self, k: usize) -> CMat {
        self.q.columns(0, k).into_owned()
    }

    /// Remaining columns of `q` after the first `k`.
    pub fn q2(&self, k: usize) -> CMat {
        let m = self.q.ncols();
        self.q.columns(k, m - k).into_owned()
    }

    /// Leading `k × k` triangle of `r`.
    pub fn r_square(&self, k: usize) -> CMat {
        self.r.view((0, 0), (k, k)).into_owned()
    }
}

/// Solve `r x = b` for upper triangular `r` column by column (back substitution).
pub fn solve_upper(r: &CMat, b: &CMat) -> CMat {
    let n = r.nrows();
    let mut x = b.clone();
    for col in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut acc = x[(i, col)];
            for k in (i + 1)..n {
                acc -= r[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = acc / r[(i, i)];
        }
    }
    x
}

/// `min |r_ii| / max |r_ii|` for a square upper triangle; `1` when empty.
pub fn triangular_rcond(r: &CMat) -> f64 {
    let n = r.nrows().min(r.ncols());
    if n == 0 {
        return 1.0;
    }
    let diag: Vec<f64> = (0..n).map(|i| r[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let svd = a.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// 2-norm condition number; infinite for singular or empty-rank input.
pub fn condition_number(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 && hi.is_finite() => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// `‖a^H a − I‖_max`.
pub fn orthonormality_defect(a: &CMat) -> f64 {
    if a.ncols() == 0 {
        return 0.0;
    }
    let g = a.adjoint() * a - CMat::identity(a.ncols(), a.ncols());
    g.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Largest residual of projecting the columns of `a` onto the span of orthonormal `basis`,
/// relative to the column norms.
pub fn projection_residual(a: &CMat, basis: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for col in a.column_iter() {
        let nrm = col.norm();
        if nrm == 0.0 {
            continue;
        }
        let proj = basis * (basis.adjoint() * col);
        worst = worst.max((col - proj).norm() / nrm);
    }
    worst
}

/// Orthonormal basis of the column span of `a` (rank decided from its QR).
pub fn orthonormal_span(a: &CMat) -> CMat {
    if a.ncols() == 0 {
        return CMat::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * smax)
        .collect();
    CMat::from_fn(a.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

pub fn frobenius(a: &CMat) -> f64 {
    a.norm()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
