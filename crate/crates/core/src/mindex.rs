//! Graded multi-index bookkeeping.
//!
//! Every coefficient vector in the crate is laid out in one canonical order:
//! graded by total degree, lexicographically descending inside a degree. For
//! `s = 2` and degree 2 that is `(2,0), (1,1), (0,2)`. Because the order is
//! graded, the monomials of degree `<= k` always occupy a prefix, so embedding
//! `Π_k ⊂ Π_n` is zero padding.

use std::fmt;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PronyError, Result};

/// Relative magnitude below which a coefficient counts as zero.
pub const COEFF_TOL: f64 = 1e-12;

fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

fn to_usize(v: Option<u64>, what: &'static str) -> Result<usize> {
    v.and_then(|v| usize::try_from(v).ok())
        .ok_or(PronyError::Overflow(what))
}

/// `d_n = C(n+s, s)`, the dimension of polynomials of total degree at most `n`.
pub fn dim_total(s: usize, n: usize) -> Result<usize> {
    if s == 0 {
        return Err(PronyError::InvalidArgument("s must be at least 1".into()));
    }
    let top = (n as u64).checked_add(s as u64);
    to_usize(top.and_then(|t| binomial(t, s as u64)), "dim_total")
}

/// `d_k^0 = C(k+s-1, s-1)`, the dimension of forms of degree `k`.
pub fn dim_homog(s: usize, k: usize) -> Result<usize> {
    if s == 0 {
        return Err(PronyError::InvalidArgument("s must be at least 1".into()));
    }
    let top = (k as u64).checked_add(s as u64 - 1);
    to_usize(top.and_then(|t| binomial(t, s as u64 - 1)), "dim_homog")
}

// Internal shorthand for dimensions that were already validated.
pub(crate) fn dt(s: usize, n: usize) -> usize {
    dim_total(s, n).expect("dimension overflow")
}

pub(crate) fn dh(s: usize, k: usize) -> usize {
    dim_homog(s, k).expect("dimension overflow")
}

/// An exponent vector `α ∈ ℕ₀^s`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return Err(PronyError::InvalidArgument(
                "multi-index needs at least one entry".into(),
            ));
        }
        Ok(MultiIndex(entries))
    }

    pub fn zero(s: usize) -> Self {
        MultiIndex(vec![0; s])
    }

    /// The unit index `ε_var` (`var` is zero based).
    pub fn unit(s: usize, var: usize) -> Self {
        let mut e = vec![0; s];
        e[var] = 1;
        MultiIndex(e)
    }

    pub fn s(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn shifted(&self, var: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[var] += 1;
        MultiIndex(e)
    }

    /// `z^α` evaluated at a complex point.
    pub fn monomial(&self, z: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(z)
            .fold(Complex64::new(1.0, 0.0), |acc, (&a, &zi)| acc * zi.powu(a))
    }

    /// Position inside the block of its own degree.
    pub fn rank_in_degree(&self) -> usize {
        let s = self.0.len();
        let mut remaining = self.degree() as u64;
        let mut rank = 0u64;
        for (i, &a) in self.0.iter().enumerate().take(s.saturating_sub(1)) {
            let parts = (s - i) as u64;
            let a = a as u64;
            // compositions of `remaining` with a larger entry at slot i
            rank += binomial(remaining - a + parts - 2, parts - 1).expect("rank overflow");
            remaining -= a;
        }
        rank as usize
    }

    /// Position in the canonical graded order (independent of any maximal degree).
    pub fn position(&self) -> usize {
        let k = self.degree();
        let offset = if k == 0 { 0 } else { dt(self.s(), k - 1) };
        offset + self.rank_in_degree()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// All `|α| = k` in canonical (lexicographically descending) order.
pub fn homogeneous_indices(s: usize, k: usize) -> Vec<MultiIndex> {
    fn fill(slot: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if slot + 1 == cur.len() {
            cur[slot] = remaining;
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for a in (0..=remaining).rev() {
            cur[slot] = a;
            fill(slot + 1, remaining - a, cur, out);
        }
    }
    let mut out = Vec::with_capacity(dh(s, k));
    let mut cur = vec![0; s];
    fill(0, k as u32, &mut cur, &mut out);
    out
}

/// The canonical enumeration of `{α : |α| <= n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedIndexSet {
    s: usize,
    n: usize,
    indices: Vec<MultiIndex>,
}

impl GradedIndexSet {
    pub fn new(s: usize, n: usize) -> Result<Self> {
        let total = dim_total(s, n)?;
        let mut indices = Vec::with_capacity(total);
        for k in 0..=n {
            indices.extend(homogeneous_indices(s, k));
        }
        Ok(GradedIndexSet { s, n, indices })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn max_degree(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, pos: usize) -> &MultiIndex {
        &self.indices[pos]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        if alpha.s() != self.s || alpha.degree() > self.n {
            return None;
        }
        Some(alpha.position())
    }

    /// Positions occupied by the degree-`k` monomials.
    pub fn block(&self, k: usize) -> Range<usize> {
        block_range(self.s, k)
    }
}

/// Positions of the degree-`k` block in the canonical order.
pub fn block_range(s: usize, k: usize) -> Range<usize> {
    let start = if k == 0 { 0 } else { dt(s, k - 1) };
    start..dt(s, k)
}

/// Coefficient vector of a polynomial in `Π_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffVec {
    s: usize,
    n: usize,
    values: DVector<Complex64>,
}

impl CoeffVec {
    pub fn zeros(s: usize, n: usize) -> Result<Self> {
        Ok(CoeffVec {
            s,
            n,
            values: DVector::zeros(dim_total(s, n)?),
        })
    }

    pub fn from_values(s: usize, n: usize, values: DVector<Complex64>) -> Result<Self> {
        let expected = dim_total(s, n)?;
        if values.len() != expected {
            return Err(PronyError::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(CoeffVec { s, n, values })
    }

    /// Build from `(exponent, coefficient)` pairs; `n` is the smallest degree that fits.
    pub fn from_terms(s: usize, terms: &[(MultiIndex, Complex64)]) -> Result<Self> {
        let n = terms.iter().map(|(a, _)| a.degree()).max().unwrap_or(0);
        let mut p = CoeffVec::zeros(s, n)?;
        for (a, c) in terms {
            if a.s() != s {
                return Err(PronyError::DimensionMismatch {
                    expected: s,
                    got: a.s(),
                });
            }
            p.values[a.position()] += *c;
        }
        Ok(p)
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Degree of the ambient space `Π_n`, not the polynomial degree.
    pub fn capacity_degree(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &DVector<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> DVector<Complex64> {
        self.values
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Complex64 {
        if alpha.degree() > self.n {
            return Complex64::new(0.0, 0.0);
        }
        self.values[alpha.position()]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.degree_with(COEFF_TOL).is_none()
    }

    /// Degree under the default relative tolerance; `0` for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.degree_with(COEFF_TOL).unwrap_or(0)
    }

    /// `None` means every coefficient is below `tol * max|p_α|` (or exactly zero).
    pub fn degree_with(&self, tol: f64) -> Option<usize> {
        self.degree_against(tol * self.max_abs())
    }

    pub(crate) fn degree_against(&self, cutoff: f64) -> Option<usize> {
        let last = self
            .values
            .iter()
            .rposition(|c| c.norm() > cutoff && *c != Complex64::new(0.0, 0.0))?;
        Some(self.degree_of_position(last))
    }

    fn degree_of_position(&self, pos: usize) -> usize {
        (0..=self.n)
            .find(|&k| block_range(self.s, k).contains(&pos))
            .expect("position within capacity")
    }

    pub fn homogeneous_part(&self, k: usize) -> HomogCoeffVec {
        let values = if k <= self.n {
            self.values.rows_range(block_range(self.s, k)).into_owned()
        } else {
            DVector::zeros(dh(self.s, k))
        };
        HomogCoeffVec {
            s: self.s,
            k,
            values,
        }
    }

    /// `Λ(p)`: the homogeneous component of top degree.
    pub fn leading_form(&self) -> Result<HomogCoeffVec> {
        let k = self
            .degree_with(COEFF_TOL)
            .ok_or(PronyError::ZeroPolynomial)?;
        Ok(self.homogeneous_part(k))
    }

    /// Re-express in `Π_m`; fails when the polynomial has terms above `m`.
    pub fn embed(&self, m: usize) -> Result<CoeffVec> {
        if m >= self.n {
            let mut values = DVector::zeros(dim_total(self.s, m)?);
            values.rows_mut(0, self.values.len()).copy_from(&self.values);
            return Ok(CoeffVec { s: self.s, n: m, values });
        }
        let keep = dt(self.s, m);
        if self.values.rows_range(keep..).iter().any(|c| c.norm() != 0.0) {
            return Err(PronyError::ContextTooShallow {
                degree: self.degree(),
                max: m,
            });
        }
        Ok(CoeffVec {
            s: self.s,
            n: m,
            values: self.values.rows(0, keep).into_owned(),
        })
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.s {
            return Err(PronyError::DimensionMismatch {
                expected: self.s,
                got: z.len(),
            });
        }
        let set = GradedIndexSet::new(self.s, self.n)?;
        Ok(set
            .iter()
            .zip(self.values.iter())
            .filter(|(_, c)| c.norm() != 0.0)
            .map(|(a, c)| c * a.monomial(z))
            .sum())
    }

    /// `z_var · p`, living in `Π_{n+1}`.
    pub fn mul_var(&self, var: usize) -> Result<CoeffVec> {
        if var >= self.s {
            return Err(PronyError::InvalidArgument(format!(
                "variable {var} out of range for s = {}",
                self.s
            )));
        }
        let mut out = CoeffVec::zeros(self.s, self.n + 1)?;
        for k in 0..=self.n {
            let targets = shift_targets(self.s, k, var)?;
            let src = block_range(self.s, k);
            let dst = block_range(self.s, k + 1).start;
            for (col, &row) in targets.iter().enumerate() {
                out.values[dst + row] = self.values[src.start + col];
            }
        }
        Ok(out)
    }

    pub fn scale(&self, a: Complex64) -> CoeffVec {
        CoeffVec {
            s: self.s,
            n: self.n,
            values: self.values.map(|c| c * a),
        }
    }

    /// Sum, embedding both into the larger space.
    pub fn add(&self, other: &CoeffVec) -> Result<CoeffVec> {
        let n = self.n.max(other.n);
        let mut out = self.embed(n)?;
        let b = other.embed(n)?;
        out.values += b.values;
        Ok(out)
    }
}

/// Coefficients of a form of degree `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogCoeffVec {
    s: usize,
    k: usize,
    values: DVector<Complex64>,
}

impl HomogCoeffVec {
    pub fn new(s: usize, k: usize, values: DVector<Complex64>) -> Result<Self> {
        let expected = dim_homog(s, k)?;
        if values.len() != expected {
            return Err(PronyError::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(HomogCoeffVec { s, k, values })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &DVector<Complex64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<Complex64> {
        self.values
    }
}

/// Vectors the apolar pairing is defined on.
pub trait Apolar {
    fn ambient(&self) -> usize;
    /// Pairs of aligned coefficients; monomials present in only one side drop out.
    fn aligned<'a>(&'a self, other: &'a Self) -> Vec<(Complex64, Complex64)>;
}

impl Apolar for CoeffVec {
    fn ambient(&self) -> usize {
        self.s
    }
    fn aligned<'a>(&'a self, other: &'a Self) -> Vec<(Complex64, Complex64)> {
        // prefix embedding: common positions name the same monomials
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (*a, *b))
            .collect()
    }
}

impl Apolar for HomogCoeffVec {
    fn ambient(&self) -> usize {
        self.s
    }
    fn aligned<'a>(&'a self, other: &'a Self) -> Vec<(Complex64, Complex64)> {
        if self.k != other.k {
            return Vec::new();
        }
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (*a, *b))
            .collect()
    }
}

/// `Σ_α p_α conj(q_α)`.
pub fn apolar_inner<A: Apolar>(p: &A, q: &A) -> Result<Complex64> {
    if p.ambient() != q.ambient() {
        return Err(PronyError::DimensionMismatch {
            expected: p.ambient(),
            got: q.ambient(),
        });
    }
    Ok(p.aligned(q).into_iter().map(|(a, b)| a * b.conj()).sum())
}

/// Row of `α + ε_var` inside the degree-`k+1` block, for each `|α| = k` in order.
pub fn shift_targets(s: usize, k: usize, var: usize) -> Result<Vec<usize>> {
    if var >= s {
        return Err(PronyError::InvalidArgument(format!(
            "variable {var} out of range for s = {s}"
        )));
    }
    Ok(homogeneous_indices(s, k)
        .iter()
        .map(|a| a.shifted(var).rank_in_degree())
        .collect())
}

/// `L_{k,var}`: the `d_{k+1}^0 × d_k^0` matrix multiplying a degree-`k` form by `z_var`.
///
/// `var` is zero based.
pub fn shift_matrix(s: usize, k: usize, var: usize) -> Result<DMatrix<Complex64>> {
    let targets = shift_targets(s, k, var)?;
    let mut m = DMatrix::zeros(dim_homog(s, k + 1)?, targets.len());
    for (col, row) in targets.into_iter().enumerate() {
        m[(row, col)] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec()).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(dim_total(2, 3).unwrap(), 10);
        assert_eq!(dim_total(1, 7).unwrap(), 8);
        assert_eq!(dim_total(2, 1).unwrap(), 3);
        assert_eq!(dim_homog(2, 3).unwrap(), 4);
        assert_eq!(dim_homog(3, 0).unwrap(), 1);
        assert_eq!(dim_homog(3, 2).unwrap(), 6);
    }

    #[test]
    fn dimension_overflow_is_an_error() {
        assert!(matches!(
            dim_total(64, usize::MAX / 2),
            Err(PronyError::Overflow(_))
        ));
        assert!(dim_homog(0, 3).is_err());
    }

    #[test]
    fn homogeneous_sum_matches_total() {
        for s in 1..=4 {
            for n in 0..=8 {
                let sum: usize = (0..=n).map(|k| dim_homog(s, k).unwrap()).sum();
                assert_eq!(sum, dim_total(s, n).unwrap());
            }
        }
    }

    #[test]
    fn canonical_order_is_lex_descending() {
        let got = homogeneous_indices(2, 2);
        assert_eq!(got, vec![mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]);
        let set = GradedIndexSet::new(2, 1).unwrap();
        let all: Vec<_> = set.iter().cloned().collect();
        assert_eq!(all, vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]);
    }

    #[test]
    fn ranking_agrees_with_enumeration() {
        for s in 1..=4 {
            let set = GradedIndexSet::new(s, 6).unwrap();
            for (pos, a) in set.iter().enumerate() {
                assert_eq!(set.position(a), Some(pos), "{a}");
            }
        }
    }

    #[test]
    fn prefix_property() {
        for s in 1..=3 {
            for n in 0..6 {
                let small = GradedIndexSet::new(s, n).unwrap();
                let big = GradedIndexSet::new(s, n + 1).unwrap();
                assert!(small.iter().zip(big.iter()).all(|(a, b)| a == b));
            }
        }
    }

    #[test]
    fn leading_form_single_top_term() {
        let p = CoeffVec::from_terms(
            2,
            &[(mi(&[0, 0]), c(1.0)), (mi(&[1, 0]), c(1.0)), (mi(&[1, 1]), c(1.0))],
        )
        .unwrap();
        let lf = p.leading_form().unwrap();
        assert_eq!(lf.degree(), 2);
        // order (2,0), (1,1), (0,2)
        assert_eq!(lf.values().as_slice(), &[c(0.0), c(1.0), c(0.0)]);
    }

    #[test]
    fn leading_form_of_homogeneous() {
        let p = CoeffVec::from_terms(2, &[(mi(&[1, 0]), c(1.0)), (mi(&[0, 1]), c(-1.0))]).unwrap();
        let lf = p.leading_form().unwrap();
        assert_eq!(lf.degree(), 1);
        assert_eq!(lf.values().as_slice(), &[c(1.0), c(-1.0)]);
    }

    #[test]
    fn leading_form_skips_dust() {
        // oracle: explicit truncation of entries below tolerance, exact integers otherwise
        let p = CoeffVec::from_terms(
            2,
            &[
                (mi(&[0, 0]), c(2.0)),
                (mi(&[0, 1]), c(3.0)),
                (mi(&[2, 0]), c(1e-18)),
                (mi(&[0, 2]), c(-1e-18)),
            ],
        )
        .unwrap();
        assert_eq!(p.degree(), 1);
        let lf = p.leading_form().unwrap();
        assert_eq!(lf.values().as_slice(), &[c(0.0), c(3.0)]);
    }

    #[test]
    fn zero_polynomial() {
        let p = CoeffVec::zeros(3, 2).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.degree(), 0);
        assert!(matches!(p.leading_form(), Err(PronyError::ZeroPolynomial)));
    }

    #[test]
    fn apolar_pairing() {
        let p = CoeffVec::from_terms(2, &[(mi(&[0, 0]), c(1.0)), (mi(&[1, 0]), c(2.0))]).unwrap();
        let q = CoeffVec::from_terms(2, &[(mi(&[0, 0]), c(3.0)), (mi(&[1, 0]), c(1.0))]).unwrap();
        assert_eq!(apolar_inner(&p, &q).unwrap(), c(5.0));
        assert!(apolar_inner(&p, &p).unwrap().re > 0.0);
        let a = CoeffVec::from_terms(2, &[(mi(&[1, 1]), c(1.0))]).unwrap();
        let b = CoeffVec::from_terms(2, &[(mi(&[2, 0]), c(1.0))]).unwrap();
        assert_eq!(apolar_inner(&a, &b).unwrap(), c(0.0));
        let other = CoeffVec::zeros(3, 1).unwrap();
        assert!(apolar_inner(&p, &other).is_err());
    }

    #[test]
    fn apolar_conjugates_second_argument() {
        let i = Complex64::new(0.0, 1.0);
        let p = CoeffVec::from_terms(1, &[(mi(&[1]), i)]).unwrap();
        assert_eq!(apolar_inner(&p, &p).unwrap(), c(1.0));
    }

    #[test]
    fn shift_matrix_small_cases() {
        let l = shift_matrix(1, 3, 0).unwrap();
        assert_eq!(l.shape(), (1, 1));
        assert_eq!(l[(0, 0)], c(1.0));
        let l = shift_matrix(2, 0, 1).unwrap();
        // degree-1 block is (1,0), (0,1)
        assert_eq!(l.column(0).as_slice(), &[c(0.0), c(1.0)]);
        assert!(shift_matrix(2, 1, 2).is_err());
    }

    #[test]
    fn shift_columns_are_units_and_counts_match() {
        for s in 1..=3 {
            for k in 0..=4 {
                let mut hits = vec![0usize; dim_homog(s, k + 1).unwrap()];
                for var in 0..s {
                    let l = shift_matrix(s, k, var).unwrap();
                    for col in l.column_iter() {
                        let ones = col.iter().filter(|v| **v == c(1.0)).count();
                        let zeros = col.iter().filter(|v| **v == c(0.0)).count();
                        assert_eq!((ones, zeros), (1, col.len() - 1));
                    }
                    for (r, row) in l.row_iter().enumerate() {
                        hits[r] += row.iter().filter(|v| **v == c(1.0)).count();
                    }
                }
                for (beta, h) in homogeneous_indices(s, k + 1).iter().zip(hits) {
                    let nonzero = beta.entries().iter().filter(|&&b| b > 0).count();
                    assert_eq!(h, nonzero);
                }
            }
        }
    }

    #[test]
    fn mul_var_raises_exponent() {
        let p = CoeffVec::from_terms(2, &[(mi(&[0, 0]), c(2.0)), (mi(&[1, 1]), c(5.0))]).unwrap();
        let q = p.mul_var(0).unwrap();
        assert_eq!(q.coeff(&mi(&[1, 0])), c(2.0));
        assert_eq!(q.coeff(&mi(&[2, 1])), c(5.0));
        assert_eq!(q.coeff(&mi(&[0, 0])), c(0.0));
    }

    #[test]
    fn embed_round_trip() {
        let p = CoeffVec::from_terms(3, &[(mi(&[1, 0, 1]), c(1.0))]).unwrap();
        let big = p.embed(5).unwrap();
        assert_eq!(big.embed(2).unwrap(), p);
        assert!(big.embed(1).is_err());
    }
}
