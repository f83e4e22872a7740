//! Orthogonal reduction modulo the graded H-basis: the normal form `ν(p)`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{PronyError, Result};
use crate::hbasis::{Construction, HBlock};
use crate::linalg::{solve_upper, CMat, CVec};
use crate::mindex::{block_range, dt, CoeffVec, HomogCoeffVec, COEFF_TOL};

/// Factors needed to reduce polynomials of degree up to `deg N + 1`.
#[derive(Clone, Debug)]
pub struct ReductionContext {
    s: usize,
    deg_n: usize,
    hblocks: Vec<HBlock>,
    normal: Vec<CMat>,
}

impl ReductionContext {
    pub fn new(construction: &Construction) -> Result<Self> {
        let deg_n = construction.deg_n();
        let hblocks = &construction.hbasis.blocks;
        if hblocks.len() < deg_n + 2 {
            return Err(PronyError::ContextTooShallow {
                degree: deg_n + 1,
                max: hblocks.len().saturating_sub(1),
            });
        }
        if let Some(bad) = hblocks
            .iter()
            .find(|b| b.width() > 0 && b.r.diagonal().iter().any(|d| d.norm() == 0.0))
        {
            return Err(PronyError::LeadingRankDeficient { degree: bad.degree });
        }
        Ok(ReductionContext {
            s: construction.hbasis.s,
            deg_n,
            hblocks: hblocks[..deg_n + 2].to_vec(),
            normal: construction.nbasis.blocks[..deg_n + 1].to_vec(),
        })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn deg_n(&self) -> usize {
        self.deg_n
    }

    /// Highest degree the context can reduce.
    pub fn top_degree(&self) -> usize {
        self.deg_n + 1
    }

    pub fn hblock(&self, k: usize) -> &HBlock {
        &self.hblocks[k]
    }

    pub fn normal_block(&self, k: usize) -> &CMat {
        &self.normal[k]
    }

    /// `dim N`.
    pub fn dim(&self) -> usize {
        self.normal.iter().map(|b| b.ncols()).sum()
    }

    pub fn normal_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.normal
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.ncols();
                o
            })
            .collect()
    }

    /// Project a degree-`k` form onto `span Λ(P_k)`: returns the coefficients `c` with
    /// `R_k c = Q_{k,1}^H λ` and the orthogonal residual `λ - Λ(P_k) c`.
    pub fn project_coeffs(&self, k: usize, lam: &HomogCoeffVec) -> Result<(CVec, HomogCoeffVec)> {
        if k > self.top_degree() || lam.degree() != k || lam.s() != self.s {
            return Err(PronyError::ContextTooShallow {
                degree: k,
                max: self.top_degree(),
            });
        }
        let mat = CMat::from_column_slice(lam.values().len(), 1, lam.values().as_slice());
        let (c, resid) = self.project_block(k, &mat);
        let resid = HomogCoeffVec::new(self.s, k, resid.column(0).into_owned())?;
        Ok((c.column(0).into_owned(), resid))
    }

    /// Column-wise projection used by both [`reduce`] and the multiplication tables.
    pub(crate) fn project_block(&self, k: usize, lam: &CMat) -> (CMat, CMat) {
        let hb = &self.hblocks[k];
        if hb.width() == 0 {
            return (CMat::zeros(0, lam.ncols()), lam.clone());
        }
        let c = solve_upper(&hb.r, &(hb.q1.adjoint() * lam));
        let resid = lam - &hb.lead * &c;
        (c, resid)
    }

    /// Coordinates of a reduced polynomial in the concatenated `N_0, …, N_m` basis.
    pub fn normal_coords(&self, r: &CoeffVec) -> Result<CVec> {
        let r = r.embed(self.top_degree()).map_err(|_| PronyError::ContextTooShallow {
            degree: r.degree(),
            max: self.top_degree(),
        })?;
        let mut out = CVec::zeros(self.dim());
        for (k, (nk, off)) in self.normal.iter().zip(self.normal_offsets()).enumerate() {
            if nk.ncols() == 0 {
                continue;
            }
            let part = r.values().rows_range(block_range(self.s, k));
            out.rows_mut(off, nk.ncols()).copy_from(&(nk.adjoint() * part));
        }
        Ok(out)
    }

    /// The polynomial `Σ_k N_k c_k` for concatenated coordinates `c`.
    pub fn from_normal_coords(&self, coords: &CVec) -> Result<CoeffVec> {
        if coords.len() != self.dim() {
            return Err(PronyError::DimensionMismatch {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        let mut values = DVector::zeros(dt(self.s, self.deg_n));
        for (k, (nk, off)) in self.normal.iter().zip(self.normal_offsets()).enumerate() {
            if nk.ncols() == 0 {
                continue;
            }
            let part = nk * coords.rows(off, nk.ncols());
            values.rows_range_mut(block_range(self.s, k)).copy_from(&part);
        }
        CoeffVec::from_values(self.s, self.deg_n, values)
    }
}

/// `ν(p)`: reduce `p` modulo the H-basis, one leading form at a time.
///
/// The result lives in `Π_{deg N + 1}` and has every homogeneous component
/// orthogonal to the leading forms of the ideal at that degree.
pub fn reduce(ctx: &ReductionContext, p: &CoeffVec) -> Result<CoeffVec> {
    if p.s() != ctx.s {
        return Err(PronyError::DimensionMismatch {
            expected: ctx.s,
            got: p.s(),
        });
    }
    let top = ctx.top_degree();
    let degree = p.degree();
    if degree > top {
        return Err(PronyError::ContextTooShallow { degree, max: top });
    }
    let mut work = if p.capacity_degree() > top {
        // only dust above `top`; drop it
        let kept = p.values().rows(0, dt(ctx.s, top)).into_owned();
        CoeffVec::from_values(ctx.s, top, kept)?
    } else {
        p.embed(top)?
    };
    let cutoff = COEFF_TOL * work.max_abs();
    let mut remainder = CoeffVec::zeros(ctx.s, top)?;
    while let Some(k) = work.degree_against(cutoff) {
        let range = block_range(ctx.s, k);
        let lam = work.values().rows_range(range.clone()).into_owned();
        let lam = CMat::from_column_slice(lam.len(), 1, lam.as_slice());
        let (c, resid) = ctx.project_block(k, &lam);
        let hb = ctx.hblock(k);
        if hb.width() > 0 {
            let correction = &hb.p * &c;
            let mut head = work.values_mut().rows_mut(0, range.end);
            head -= correction.column(0);
        }
        let values = work.values_mut();
        values
            .rows_range_mut(range.clone())
            .fill(Complex64::new(0.0, 0.0));
        remainder
            .values_mut()
            .rows_range_mut(range)
            .copy_from(&resid.column(0));
    }
    Ok(remainder)
}
