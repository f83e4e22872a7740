//! Fewnomial recovery from black-box evaluations at `e^{Xγ}`.
//!
//! With `ω(α) = X^T α` the samples `p(e^{Xγ}) = Σ_α p_α e^{(X^T α)·γ}` form an
//! exponential sum, so the exponents follow from the recovered frequencies by
//! `α = X^{-T} ω` and rounding.

use std::f64::consts::TAU;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{prony_solve, solve_coefficients, Diagnostics, SolveOptions};
use crate::error::{PronyError, Result, Stage};
use crate::linalg::CMat;
use crate::mindex::MultiIndex;
use crate::sampler::SampleGrid;

/// Largest accepted distance between `X^{-T} ω` and its rounding.
pub const MAX_DISPLACEMENT: f64 = 0.25;

/// A polynomial stored as a list of terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fewnomial {
    pub s: usize,
    pub terms: Vec<(MultiIndex, Complex64)>,
}

impl Fewnomial {
    pub fn new(s: usize, terms: Vec<(MultiIndex, Complex64)>) -> Result<Self> {
        if s == 0 {
            return Err(PronyError::InvalidArgument("s must be at least 1".into()));
        }
        for (i, (a, _)) in terms.iter().enumerate() {
            if a.s() != s {
                return Err(PronyError::DimensionMismatch {
                    expected: s,
                    got: a.s(),
                });
            }
            if terms[..i].iter().any(|(b, _)| b == a) {
                return Err(PronyError::InvalidArgument(format!("repeated exponent {a}")));
            }
        }
        Ok(Fewnomial { s, terms })
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|(a, c)| c * a.monomial(z)).sum()
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(|(a, _)| a.degree()).max().unwrap_or(0)
    }

    /// Largest single-variable exponent.
    pub fn max_exponent(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|(a, _)| a.entries().iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Parse terms like `3*z1^2*z2 - 0.5*z3 + 2`; variables are `z1…zs` (or `x1…`).
    pub fn parse(s: usize, text: &str) -> Result<Self> {
        let bad = |msg: String| PronyError::InvalidArgument(format!("polynomial: {msg}"));
        let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() {
            return Err(bad("empty".into()));
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        let bytes = cleaned.as_bytes();
        for i in 1..bytes.len() {
            let prev = bytes[i - 1];
            if (bytes[i] == b'+' || bytes[i] == b'-') && prev != b'e' && prev != b'E' && prev != b'*' {
                pieces.push(&cleaned[start..i]);
                start = i;
            }
        }
        pieces.push(&cleaned[start..]);

        let mut terms: Vec<(MultiIndex, Complex64)> = Vec::new();
        for piece in pieces {
            let (sign, body) = match piece.as_bytes().first() {
                Some(b'-') => (-1.0, &piece[1..]),
                Some(b'+') => (1.0, &piece[1..]),
                _ => (1.0, piece),
            };
            if body.is_empty() {
                return Err(bad(format!("dangling sign in '{piece}'")));
            }
            let mut coeff = sign;
            let mut exps = vec![0u32; s];
            for factor in body.split('*') {
                let head = factor.chars().next().ok_or_else(|| bad(format!("empty factor in '{piece}'")))?;
                if head == 'z' || head == 'x' {
                    let (var, pow) = match factor[1..].split_once('^') {
                        Some((v, p)) => (v, p.parse::<u32>().map_err(|_| bad(format!("bad power in '{factor}'")))?),
                        None => (&factor[1..], 1),
                    };
                    let var: usize = var.parse().map_err(|_| bad(format!("bad variable in '{factor}'")))?;
                    if var == 0 || var > s {
                        return Err(bad(format!("variable {factor} outside z1..z{s}")));
                    }
                    exps[var - 1] += pow;
                } else {
                    coeff *= f64::from_str(factor).map_err(|_| bad(format!("bad coefficient '{factor}'")))?;
                }
            }
            let alpha = MultiIndex::new(exps)?;
            match terms.iter_mut().find(|(a, _)| *a == alpha) {
                Some((_, c)) => *c += coeff,
                None => terms.push((alpha, Complex64::new(coeff, 0.0))),
            }
        }
        terms.retain(|(_, c)| c.norm() != 0.0);
        if terms.is_empty() {
            return Err(bad("all coefficients cancel".into()));
        }
        Fewnomial::new(s, terms)
    }
}

/// A recovered fewnomial together with the sampling matrix that produced it.
#[derive(Clone, Debug)]
pub struct SparsePolyModel {
    pub s: usize,
    pub exponents: Vec<MultiIndex>,
    pub coeffs: Vec<Complex64>,
    pub x: CMat,
    /// Largest distance of `X^{-T} ω` to the chosen integer point.
    pub displacement: f64,
    pub residual: f64,
    pub diagnostics: Diagnostics,
}

impl SparsePolyModel {
    pub fn to_fewnomial(&self) -> Fewnomial {
        Fewnomial {
            s: self.s,
            terms: self.exponents.iter().cloned().zip(self.coeffs.iter().copied()).collect(),
        }
    }
}

/// `X = i·2π/(q(d+1))·I`: keeps every exponent up to `d` inside one period of each coordinate.
pub fn default_sampling_matrix(s: usize, max_exponent: u32, q: u32) -> CMat {
    let scale = TAU / (q.max(1) as f64 * (max_exponent as f64 + 1.0));
    CMat::identity(s, s) * Complex64::new(0.0, scale)
}

fn check_x(s: usize, x: &CMat) -> Result<CMat> {
    if x.shape() != (s, s) {
        return Err(PronyError::InvalidArgument(format!(
            "sampling matrix must be {s}x{s}, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(PronyError::InvalidArgument("sampling matrix has non-finite entries".into()));
    }
    let sv = crate::linalg::singular_values(x);
    let (hi, lo) = (sv[0], sv[s - 1]);
    if !(lo > hi * 1e-12) {
        return Err(PronyError::InvalidArgument("sampling matrix is singular".into()));
    }
    // X^{-T}
    x.transpose()
        .try_inverse()
        .ok_or_else(|| PronyError::InvalidArgument("sampling matrix is singular".into()))
}

/// Sample `blackbox` at `e^{Xγ}` for `|γ| <= 2n` and recover its terms.
pub fn sparse_poly_solve<F>(blackbox: F, s: usize, x: &CMat, n: usize, opts: &SolveOptions) -> Result<SparsePolyModel>
where
    F: Fn(&[Complex64]) -> Complex64,
{
    check_x(s, x).map_err(|e| e.at(Stage::Input))?;
    let grid = SampleGrid::from_fn(s, 2 * n, |g| {
        let gamma = DVector::from_iterator(s, g.entries().iter().map(|&e| Complex64::new(e as f64, 0.0)));
        let z: Vec<Complex64> = (x * gamma).iter().map(|v| v.exp()).collect();
        blackbox(&z)
    })
    .map_err(|e| e.at(Stage::Input))?;
    sparse_from_grid(&grid, x, n, opts)
}

/// Recovery from precomputed samples `p(e^{Xγ})`.
pub fn sparse_from_grid(grid: &SampleGrid, x: &CMat, n: usize, opts: &SolveOptions) -> Result<SparsePolyModel> {
    let s = grid.s();
    let xinv_t = check_x(s, x).map_err(|e| e.at(Stage::Input))?;
    let sol = prony_solve(grid, n, opts)?;
    let shifts = shift_vectors(s);
    let mut exponents = Vec::with_capacity(sol.model.len());
    let mut displacement: f64 = 0.0;
    for w in sol.model.freqs() {
        let (alpha, d) = round_exponent(&xinv_t, w, &shifts).map_err(|e| e.at(Stage::Sparse))?;
        displacement = displacement.max(d);
        exponents.push(alpha);
    }
    if !(displacement <= MAX_DISPLACEMENT) {
        return Err(PronyError::RoundingUnreliable(displacement).at(Stage::Sparse));
    }
    for (i, a) in exponents.iter().enumerate() {
        if exponents[..i].contains(a) {
            return Err(PronyError::DuplicateFrequencies.at(Stage::Sparse));
        }
    }
    // coefficients against the exact points e^{X^T α}
    let points: Vec<Vec<Complex64>> = exponents
        .iter()
        .map(|a| {
            let av = DVector::from_iterator(s, a.entries().iter().map(|&e| Complex64::new(e as f64, 0.0)));
            (x.transpose() * av).iter().map(|v| v.exp()).collect()
        })
        .collect();
    let (coeffs, residual) =
        solve_coefficients(&points, grid, 2 * n).map_err(|e| e.at(Stage::Vandermonde))?;
    Ok(SparsePolyModel {
        s,
        exponents,
        coeffs,
        x: x.clone(),
        displacement,
        residual,
        diagnostics: sol.diagnostics,
    })
}

/// `{-1, 0, 1}^s`.
fn shift_vectors(s: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for _ in 0..s {
        out = out
            .into_iter()
            .flat_map(|v: Vec<f64>| {
                [0.0, -1.0, 1.0].into_iter().map(move |d| {
                    let mut w = v.clone();
                    w.push(d);
                    w
                })
            })
            .collect();
    }
    out
}

/// Integer point nearest to `X^{-T}(ω + 2πi m)` over the period shifts `m`.
///
/// Shifts alias exponents by whole periods, so among the readings that round reliably
/// the one of least total degree is taken.
fn round_exponent(xinv_t: &CMat, w: &[Complex64], shifts: &[Vec<f64>]) -> Result<(MultiIndex, f64)> {
    let s = w.len();
    let mut reliable: Option<(Vec<u32>, f64)> = None;
    let mut closest = f64::INFINITY;
    for m in shifts {
        let shifted = DVector::from_iterator(s, w.iter().zip(m).map(|(c, &k)| c + Complex64::new(0.0, TAU * k)));
        let a = xinv_t * shifted;
        let rounded: Vec<f64> = a.iter().map(|v| v.re.round()).collect();
        if rounded.iter().any(|&r| r < 0.0 || r > u32::MAX as f64) {
            continue;
        }
        let d = a
            .iter()
            .zip(&rounded)
            .map(|(v, &r)| (v - Complex64::new(r, 0.0)).norm())
            .fold(0.0, f64::max);
        closest = closest.min(d);
        if d > MAX_DISPLACEMENT {
            continue;
        }
        let exps: Vec<u32> = rounded.iter().map(|&r| r as u32).collect();
        let total = |e: &[u32]| e.iter().map(|&v| v as u64).sum::<u64>();
        let better = match &reliable {
            None => true,
            Some((e, bd)) => (total(&exps), d) < (total(e), *bd),
        };
        if better {
            reliable = Some((exps, d));
        }
    }
    match reliable {
        Some((e, d)) => Ok((MultiIndex::new(e)?, d)),
        None => Err(PronyError::RoundingUnreliable(closest)),
    }
}
