//! Block Hankel matrices `F_{n,k} = [f(α+β)]_{|α|<=n, |β|<=k}`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{PronyError, Result};
use crate::linalg::CMat;
use crate::mindex::{block_range, dim_total, homogeneous_indices, CoeffVec, GradedIndexSet};
use crate::sampler::SampleGrid;

/// `F_{n,k}` with rows indexed by `|α| <= n` and columns by `|β| <= k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelBlock {
    s: usize,
    n: usize,
    k: usize,
    matrix: CMat,
}

impl HankelBlock {
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }
}

fn fill_columns(
    matrix: &mut CMat,
    grid: &SampleGrid,
    rows: &GradedIndexSet,
    degree: usize,
) -> Result<()> {
    let cols = block_range(grid.s(), degree);
    for (offset, beta) in homogeneous_indices(grid.s(), degree).iter().enumerate() {
        let col = cols.start + offset;
        for (r, alpha) in rows.iter().enumerate() {
            matrix[(r, col)] = grid.get_position(alpha.add(beta).position())?;
        }
    }
    Ok(())
}

pub fn build(grid: &SampleGrid, n: usize, k: usize) -> Result<HankelBlock> {
    let s = grid.s();
    let rows = GradedIndexSet::new(s, n)?;
    let mut matrix = CMat::zeros(rows.len(), dim_total(s, k)?);
    for degree in 0..=k {
        fill_columns(&mut matrix, grid, &rows, degree)?;
    }
    Ok(HankelBlock { s, n, k, matrix })
}

/// `F_{n,k+1}` from `F_{n,k}`: the existing columns are kept and one degree block appended.
pub fn extend(block: HankelBlock, grid: &SampleGrid) -> Result<HankelBlock> {
    let HankelBlock { s, n, k, matrix } = block;
    if grid.s() != s {
        return Err(PronyError::DimensionMismatch {
            expected: s,
            got: grid.s(),
        });
    }
    let rows = GradedIndexSet::new(s, n)?;
    let new_cols = dim_total(s, k + 1)?;
    let mut matrix = matrix.resize_horizontally(new_cols, Complex64::new(0.0, 0.0));
    fill_columns(&mut matrix, grid, &rows, k + 1)?;
    Ok(HankelBlock { s, n, k: k + 1, matrix })
}

/// `F_{n,k} p` for `deg p <= k`.
pub fn apply_to_poly(block: &HankelBlock, p: &CoeffVec) -> Result<DVector<Complex64>> {
    if p.s() != block.s {
        return Err(PronyError::DimensionMismatch {
            expected: block.s,
            got: p.s(),
        });
    }
    let embedded = p.embed(block.k).map_err(|_| PronyError::ContextTooShallow {
        degree: p.degree(),
        max: block.k,
    })?;
    Ok(&block.matrix * embedded.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{flat_extension_fixture, random_instance, sample_lattice, InstanceKind};

    #[test]
    fn fixture_gives_all_ones() {
        let m = flat_extension_fixture();
        let g = sample_lattice(&m, 1, 1, None).unwrap();
        let f = build(&g, 1, 1).unwrap();
        assert_eq!(f.matrix().shape(), (3, 3));
        for v in f.matrix().iter() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn k_zero_is_sample_column() {
        let m = random_instance(2, 3, InstanceKind::Imaginary, 3).unwrap();
        let g = sample_lattice(&m, 2, 0, None).unwrap();
        let f = build(&g, 2, 0).unwrap();
        assert_eq!(f.matrix().ncols(), 1);
        for (r, alpha) in GradedIndexSet::new(2, 2).unwrap().iter().enumerate() {
            assert_eq!(f.matrix()[(r, 0)], g.get(alpha).unwrap());
        }
    }

    #[test]
    fn extend_keeps_prefix_and_matches_build() {
        let m = random_instance(2, 4, InstanceKind::Real, 8).unwrap();
        let g = sample_lattice(&m, 3, 3, None).unwrap();
        let f0 = build(&g, 3, 0).unwrap();
        let f1 = extend(f0.clone(), &g).unwrap();
        assert_eq!(f1.matrix().column(0), f0.matrix().column(0));
        let f2 = extend(f1, &g).unwrap();
        assert_eq!(f2, build(&g, 3, 2).unwrap());
    }

    #[test]
    fn coverage_error_names_point() {
        let m = random_instance(2, 2, InstanceKind::Real, 1).unwrap();
        let g = sample_lattice(&m, 2, 0, None).unwrap();
        match build(&g, 2, 1) {
            Err(PronyError::MissingSample(a)) => assert_eq!(a.degree(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn square_block_is_complex_symmetric() {
        let m = random_instance(2, 3, InstanceKind::Line, 2).unwrap();
        let g = sample_lattice(&m, 2, 2, None).unwrap();
        let f = build(&g, 2, 2).unwrap();
        assert_eq!(f.matrix(), &f.matrix().transpose());
    }

    #[test]
    fn degree_overflow_rejected() {
        let m = random_instance(2, 2, InstanceKind::Real, 1).unwrap();
        let g = sample_lattice(&m, 2, 1, None).unwrap();
        let f = build(&g, 2, 1).unwrap();
        let p = CoeffVec::from_terms(
            2,
            &[(crate::mindex::MultiIndex::new(vec![2, 0]).unwrap(), Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        assert!(apply_to_poly(&f, &p).is_err());
    }
}
