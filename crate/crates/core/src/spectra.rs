//! Multiplication tables on the normal-form basis and their joint spectrum.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PronyError, Result};
use crate::exec::Execution;
use crate::linalg::{condition_number, CMat};
use crate::mindex::{block_range, dt, shift_targets};
use crate::reduction::ReductionContext;

/// Eigenvector matrices worse than this are treated as defective.
pub const MAX_EIGVEC_CONDITION: f64 = 1e12;
const EIGEN_ATTEMPTS: u64 = 5;

/// Matrices of `r ↦ ν(z_j r)` on `N`, one per variable.
#[derive(Clone, Debug)]
pub struct MultTables {
    pub s: usize,
    pub dim: usize,
    pub tables: Vec<CMat>,
    /// Column offsets of the degree blocks `N_0, …, N_m`.
    pub offsets: Vec<usize>,
    pub widths: Vec<usize>,
}

impl MultTables {
    /// Largest `‖M_i M_j - M_j M_i‖_F / (‖M_i‖_F ‖M_j‖_F)` over all pairs.
    pub fn commutator_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.s {
            for j in (i + 1)..self.s {
                let (a, b) = (&self.tables[i], &self.tables[j]);
                let scale = a.norm() * b.norm();
                if scale == 0.0 {
                    continue;
                }
                worst = worst.max((a * b - b * a).norm() / scale);
            }
        }
        worst
    }

    /// Largest entry found below the first block subdiagonal.
    pub fn block_structure_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in &self.tables {
            for (row_deg, (&ro, &rw)) in self.offsets.iter().zip(&self.widths).enumerate() {
                for (col_deg, (&co, &cw)) in self.offsets.iter().zip(&self.widths).enumerate() {
                    if row_deg > col_deg + 1 {
                        let blk = m.view((ro, co), (rw, cw));
                        worst = worst.max(blk.iter().map(|c| c.norm()).fold(0.0, f64::max));
                    }
                }
            }
        }
        worst
    }
}

/// Build `M_1, …, M_s` by the block recurrence: shift each `N_k` up one degree, project
/// once at degree `k+1`, then walk the remainder down through degrees `k, …, 0`.
pub fn mult_tables(ctx: &ReductionContext, exec: Execution) -> Result<MultTables> {
    let s = ctx.s();
    let deg_n = ctx.deg_n();
    let offsets = ctx.normal_offsets();
    let widths: Vec<usize> = (0..=deg_n).map(|k| ctx.normal_block(k).ncols()).collect();
    let dim = ctx.dim();
    let vars: Vec<usize> = (0..s).collect();
    let tables = exec.map(&vars, |&var| table_for(ctx, var, &offsets, &widths, dim));
    let tables = tables.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(MultTables {
        s,
        dim,
        tables,
        offsets,
        widths,
    })
}

fn table_for(
    ctx: &ReductionContext,
    var: usize,
    offsets: &[usize],
    widths: &[usize],
    dim: usize,
) -> Result<CMat> {
    let s = ctx.s();
    let deg_n = ctx.deg_n();
    let mut m = CMat::zeros(dim, dim);
    for k in 0..=deg_n {
        let nk = ctx.normal_block(k);
        let width = nk.ncols();
        if width == 0 {
            continue;
        }
        // L_{k,var} N_k
        let targets = shift_targets(s, k, var)?;
        let mut shifted = CMat::zeros(block_range(s, k + 1).len(), width);
        for (src, &dst) in targets.iter().enumerate() {
            shifted.row_mut(dst).copy_from(&nk.row(src));
        }
        let (c, resid) = ctx.project_block(k + 1, &shifted);
        if k < deg_n && widths[k + 1] > 0 {
            let blk = ctx.normal_block(k + 1).adjoint() * resid;
            m.view_mut((offsets[k + 1], offsets[k]), (widths[k + 1], width))
                .copy_from(&blk);
        }
        // remainder below degree k+1: -(lower part of P_{k+1}) c
        let hb = ctx.hblock(k + 1);
        let mut tail = if hb.width() > 0 {
            -(hb.p.rows(0, dt(s, k)) * &c)
        } else {
            CMat::zeros(dt(s, k), width)
        };
        for l in (0..=k).rev() {
            let range = block_range(s, l);
            let lam = tail.rows_range(range.clone()).into_owned();
            let (c, resid) = ctx.project_block(l, &lam);
            if widths[l] > 0 {
                let blk = ctx.normal_block(l).adjoint() * resid;
                m.view_mut((offsets[l], offsets[k]), (widths[l], width))
                    .copy_from(&blk);
            }
            if l == 0 {
                break;
            }
            let below = range.start;
            let hb = ctx.hblock(l);
            let mut next = tail.rows(0, below).into_owned();
            if hb.width() > 0 {
                next -= hb.p.rows(0, below) * &c;
            }
            tail = next;
        }
    }
    Ok(m)
}

/// Recovered points `z_ω`, coordinates matched across variables.
#[derive(Clone, Debug)]
pub struct PointSet {
    pub points: Vec<Vec<Complex64>>,
    /// Condition number of the shared eigenvector matrix.
    pub eigvec_condition: f64,
    /// Eigenvectors (columns) in the normal-form basis.
    pub eigvecs: CMat,
}

pub fn joint_eigen(tables: &MultTables, seed: u64) -> Result<PointSet> {
    let dim = tables.dim;
    if dim == 0 {
        return Err(PronyError::EigenNoConvergence);
    }
    if dim == 1 {
        return Ok(PointSet {
            points: vec![tables.tables.iter().map(|m| m[(0, 0)]).collect()],
            eigvec_condition: 1.0,
            eigvecs: CMat::identity(1, 1),
        });
    }
    let mut worst = f64::INFINITY;
    for attempt in 0..EIGEN_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9)));
        let mut t: Vec<f64> = (0..tables.s).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = t.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        t.iter_mut().for_each(|v| *v /= norm);
        let mut combo = CMat::zeros(dim, dim);
        for (m, &w) in tables.tables.iter().zip(&t) {
            combo += m * Complex64::new(w, 0.0);
        }
        if combo.iter().any(|v| !v.is_finite()) {
            return Err(PronyError::EigenNoConvergence);
        }
        let w = match eigenvectors(&combo) {
            Some(w) => w,
            None => continue,
        };
        let cond = condition_number(&w);
        if !(cond <= MAX_EIGVEC_CONDITION) {
            worst = worst.min(cond);
            continue;
        }
        let lu = w.clone().lu();
        let mut points = vec![vec![Complex64::new(0.0, 0.0); tables.s]; dim];
        for (j, m) in tables.tables.iter().enumerate() {
            let mw = m * &w;
            let d = lu.solve(&mw).ok_or(PronyError::DefectiveSpectrum(cond))?;
            for (i, p) in points.iter_mut().enumerate() {
                p[j] = d[(i, i)];
            }
        }
        return Ok(PointSet {
            points,
            eigvec_condition: cond,
            eigvecs: w,
        });
    }
    if worst.is_finite() {
        Err(PronyError::DefectiveSpectrum(worst))
    } else {
        Err(PronyError::EigenNoConvergence)
    }
}

/// Eigenvectors of a general complex matrix from its Schur form, unit columns.
fn eigenvectors(a: &CMat) -> Option<CMat> {
    let n = a.nrows();
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 100_000)?;
    let (q, t) = schur.unpack();
    let scale = t.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = scale * f64::EPSILON;
    let mut y = CMat::zeros(n, n);
    for i in 0..n {
        let lambda = t[(i, i)];
        y[(i, i)] = Complex64::new(1.0, 0.0);
        for r in (0..i).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in (r + 1)..=i {
                acc += t[(r, c)] * y[(c, i)];
            }
            let mut den = t[(r, r)] - lambda;
            if den.norm() < small {
                den = Complex64::new(small, 0.0);
            }
            y[(r, i)] = -acc / den;
        }
    }
    let mut w = q * y;
    for mut col in w.column_iter_mut() {
        let nrm = col.norm();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return None;
        }
        col /= Complex64::new(nrm, 0.0);
    }
    Some(w)
}

/// `ω_j = ln|z_j| + i arg z_j` with the argument in `[0, 2π)`.
pub fn points_to_freqs(points: &PointSet) -> Result<Vec<Vec<Complex64>>> {
    points
        .points
        .iter()
        .map(|z| point_to_freq(z))
        .collect()
}

pub fn point_to_freq(z: &[Complex64]) -> Result<Vec<Complex64>> {
    z.iter()
        .map(|&c| {
            if c.norm() == 0.0 || !c.is_finite() {
                return Err(PronyError::ZeroCoordinate);
            }
            let mut arg = c.arg();
            if arg < 0.0 {
                arg += TAU;
            }
            if arg >= TAU {
                arg -= TAU;
            }
            Ok(Complex64::new(c.norm().ln(), arg))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_tables() {
        let d1 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 1.0)]));
        let d2 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-1.0, 0.0), c(0.5, 0.0), c(0.0, 2.0)]));
        let tables = MultTables {
            s: 2,
            dim: 3,
            tables: vec![d1.clone(), d2.clone()],
            offsets: vec![0],
            widths: vec![3],
        };
        let pts = joint_eigen(&tables, 1).unwrap();
        let mut got: Vec<(f64, f64)> = pts.points.iter().map(|p| (p[0].re, p[1].re)).collect();
        got.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let want = [(1.0, -1.0), (2.0, 0.5), (3.0, 0.0)];
        for (g, w) in got.iter().zip(want) {
            assert!((g.0 - w.0).abs() < 1e-12 && (g.1 - w.1).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_tables() {
        let tables = MultTables {
            s: 2,
            dim: 1,
            tables: vec![CMat::from_element(1, 1, c(2.0, 0.0)), CMat::from_element(1, 1, c(0.0, 1.0))],
            offsets: vec![0],
            widths: vec![1],
        };
        let pts = joint_eigen(&tables, 0).unwrap();
        assert_eq!(pts.points, vec![vec![c(2.0, 0.0), c(0.0, 1.0)]]);
    }

    #[test]
    fn defective_matrix_is_reported() {
        let jordan = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let tables = MultTables {
            s: 1,
            dim: 2,
            tables: vec![jordan],
            offsets: vec![0],
            widths: vec![2],
        };
        assert!(joint_eigen(&tables, 0).is_err());
    }

    #[test]
    fn log_map() {
        let pts = PointSet {
            points: vec![vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 1.0), c(-1.0, -1e-300)]],
            eigvec_condition: 1.0,
            eigvecs: CMat::identity(2, 2),
        };
        let w = points_to_freqs(&pts).unwrap();
        assert_eq!(w[0], vec![c(0.0, 0.0), c(0.0, 0.0)]);
        assert!((w[1][0] - c(0.0, std::f64::consts::FRAC_PI_2)).norm() < 1e-15);
        assert!((0.0..TAU).contains(&w[1][1].im));
        assert!(point_to_freq(&[c(0.0, 0.0)]).is_err());
    }
}
