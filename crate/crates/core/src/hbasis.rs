//! Graded H-basis and normal-form basis from Hankel kernels.
//!
//! For `k = 0, 1, …` the kernel of `F_{n,k}` is computed by SVD thresholding and
//! split into the part inherited from degree `k-1` and a new block `P_k` whose
//! columns are orthogonal to everything inherited. The leading forms `Λ(P_k)`
//! are QR-factored; the orthogonal complement of their span is the homogeneous
//! normal-form block `N_k`. The loop stops at the first rank stall.

use serde::{Deserialize, Serialize};

use crate::error::{PronyError, Result};
use crate::hankel::{self, HankelBlock};
use crate::linalg::{projection_residual, triangular_rcond, CMat, FullQr};
use crate::mindex::{block_range, dh, dt};
use crate::sampler::SampleGrid;

/// Smallest admissible `min|R_ii| / max|R_ii|` for leading-form factors.
pub const LEADING_RCOND: f64 = 1e-13;

/// Singular-value cutoff, always applied relative to the largest singular value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum Threshold {
    /// `τ = d_n d_k · machine epsilon`.
    #[default]
    MachineEpsilon,
    /// `τ = d_n d_k · ε` for a known noise level `ε`.
    NoiseLevel(f64),
    /// A fixed `τ`.
    Fixed(f64),
}

impl Threshold {
    pub fn tau(&self, d_n: usize, d_k: usize) -> f64 {
        let dims = (d_n * d_k) as f64;
        match *self {
            Threshold::MachineEpsilon => dims * f64::EPSILON,
            Threshold::NoiseLevel(eps) => dims * eps,
            Threshold::Fixed(tau) => tau,
        }
    }
}

/// Orthonormal numerical kernel of a Hankel block.
#[derive(Clone, Debug)]
pub struct KernelBasis {
    pub basis: CMat,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub tau: f64,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn rank(&self) -> usize {
        self.basis.nrows() - self.dim()
    }

    fn cutoff(&self) -> f64 {
        self.tau * self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min_kept(&self) -> Option<f64> {
        let cut = self.cutoff();
        self.singular_values.iter().copied().rfind(|&s| s > cut)
    }

    pub fn sigma_max_cut(&self) -> Option<f64> {
        let cut = self.cutoff();
        self.singular_values.iter().copied().find(|&s| s <= cut)
    }
}

/// Right singular vectors with `σ_i <= τ σ_1`.
pub fn kernel_basis(block: &HankelBlock, tau: f64) -> Result<KernelBasis> {
    if !(tau > 0.0) {
        return Err(PronyError::InvalidArgument(format!(
            "threshold must be positive, got {tau}"
        )));
    }
    let f = block.matrix();
    let (rows, cols) = f.shape();
    if rows < cols {
        return Err(PronyError::InvalidArgument(format!(
            "Hankel block {rows}x{cols} has fewer rows than columns (need k <= n)"
        )));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(PronyError::ZeroMeasurement);
    }
    let svd = f.clone().svd(false, true);
    let v_t = svd.v_t.expect("v requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma1 = singular_values.first().copied().unwrap_or(0.0);
    if !(sigma1 > 0.0) {
        return Err(PronyError::ZeroMeasurement);
    }
    let cut = tau * sigma1;
    let kernel: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| svd.singular_values[i] <= cut)
        .collect();
    if kernel.len() == cols {
        return Err(PronyError::ZeroMeasurement);
    }
    // rows of V^H are conjugated kernel vectors
    let basis = CMat::from_fn(cols, kernel.len(), |r, c| v_t[(kernel[c], r)].conj());
    Ok(KernelBasis {
        basis,
        singular_values,
        tau,
    })
}

/// The new kernel block `P_{k+1}`: columns of `kernel` orthogonal to the inherited `prev`.
///
/// `prev` is the `d_k × v_k` matrix `K_k`, `kernel` the orthonormal `d_{k+1} × v_{k+1}`
/// kernel of `F_{n,k+1}`, `degree` is `k+1`.
pub fn graded_step(degree: usize, prev: &CMat, kernel: &CMat, nest_tol: f64) -> Result<CMat> {
    let (rows, v_next) = kernel.shape();
    let v_prev = prev.ncols();
    if prev.nrows() > rows {
        return Err(PronyError::DimensionMismatch {
            expected: rows,
            got: prev.nrows(),
        });
    }
    if v_prev == 0 {
        return Ok(kernel.clone());
    }
    if v_next < v_prev {
        return Err(PronyError::KernelNotNested {
            degree,
            residual: f64::INFINITY,
        });
    }
    let mut padded = CMat::zeros(rows, v_prev);
    padded.rows_mut(0, prev.nrows()).copy_from(prev);
    let residual = projection_residual(&padded, kernel);
    if !(residual <= nest_tol) {
        return Err(PronyError::KernelNotNested { degree, residual });
    }
    // orthonormal kernel columns: the pseudoinverse is the adjoint
    let x = kernel.adjoint() * &padded;
    let qr = FullQr::new(&x);
    Ok(kernel * qr.q2(v_prev))
}

/// Factors attached to one degree of the H-basis.
#[derive(Clone, Debug)]
pub struct HBlock {
    pub degree: usize,
    /// `d_j × w_j` coefficient columns.
    pub p: CMat,
    /// `Λ(P_j)`, `d_j^0 × w_j`.
    pub lead: CMat,
    pub q1: CMat,
    /// Upper triangular `w_j × w_j`.
    pub r: CMat,
}

impl HBlock {
    pub fn width(&self) -> usize {
        self.p.ncols()
    }
}

/// `N_j` together with the QR factors of `Λ(P_j)`.
pub fn normal_block(s: usize, degree: usize, p: &CMat) -> Result<(HBlock, CMat)> {
    let rows = dt(s, degree);
    if p.nrows() != rows {
        return Err(PronyError::DimensionMismatch {
            expected: rows,
            got: p.nrows(),
        });
    }
    let width = p.ncols();
    let range = block_range(s, degree);
    let lead = p.rows_range(range).into_owned();
    let homog = dh(s, degree);
    if width > homog {
        return Err(PronyError::LeadingRankDeficient { degree });
    }
    let qr = FullQr::new(&lead);
    let r = qr.r_square(width);
    if width > 0 && !(triangular_rcond(&r) > LEADING_RCOND) {
        return Err(PronyError::LeadingRankDeficient { degree });
    }
    let normal = qr.q2(width);
    let block = HBlock {
        degree,
        p: p.clone(),
        lead,
        q1: qr.q1(width),
        r,
    };
    Ok((block, normal))
}

/// Blocks `P_0, P_1, …` (empty blocks included so the vector is indexed by degree).
#[derive(Clone, Debug)]
pub struct GradedHBasis {
    pub s: usize,
    pub blocks: Vec<HBlock>,
}

impl GradedHBasis {
    /// Cumulative kernel dimensions `v_j`.
    pub fn cumulative_dims(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                *acc += b.width();
                Some(*acc)
            })
            .collect()
    }

    pub fn max_degree(&self) -> usize {
        self.blocks.len() - 1
    }
}

/// Homogeneous orthonormal blocks `N_0, …, N_m` spanning the inverse system.
#[derive(Clone, Debug)]
pub struct NormalFormBasis {
    pub s: usize,
    pub blocks: Vec<CMat>,
}

impl NormalFormBasis {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.ncols()).sum()
    }

    /// Column offset of each block in the concatenated basis.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.ncols();
                o
            })
            .collect()
    }
}

/// Affine Hilbert function `h_k = d_k - v_k` up to the stall.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertProfile {
    pub values: Vec<usize>,
    pub deg_n: usize,
}

impl HilbertProfile {
    /// Strictly increasing up to `deg_n`, constant afterwards.
    pub fn has_no_gaps(&self) -> bool {
        let h = &self.values;
        h.windows(2).enumerate().all(|(k, w)| {
            if k < self.deg_n {
                w[0] < w[1]
            } else {
                w[0] == w[1]
            }
        })
    }

    pub fn dimension(&self) -> usize {
        *self.values.last().expect("profile is never empty")
    }
}

/// Per-degree diagnostic record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeRecord {
    pub k: usize,
    pub d_k: usize,
    pub v_k: usize,
    pub h_k: usize,
    pub tau: f64,
    pub sigma_min_kept: Option<f64>,
    pub sigma_max_cut: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConstructionOptions {
    pub threshold: Threshold,
    /// Allowed relative residual of the inherited kernel inside the next kernel.
    /// `None` picks `max(1e-6, 100 τ)`.
    pub nest_tol: Option<f64>,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        ConstructionOptions {
            threshold: Threshold::MachineEpsilon,
            nest_tol: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Construction {
    pub n: usize,
    pub hbasis: GradedHBasis,
    pub nbasis: NormalFormBasis,
    pub profile: HilbertProfile,
    pub records: Vec<DegreeRecord>,
    /// Hankel blocks in construction order, kept only when requested.
    pub matrices: Vec<HankelBlock>,
}

impl Construction {
    pub fn deg_n(&self) -> usize {
        self.profile.deg_n
    }
}

pub fn run_graded_construction(
    grid: &SampleGrid,
    n: usize,
    opts: &ConstructionOptions,
) -> Result<Construction> {
    run_construction_inner(grid, n, opts, false)
}

pub(crate) fn run_construction_inner(
    grid: &SampleGrid,
    n: usize,
    opts: &ConstructionOptions,
    keep_matrices: bool,
) -> Result<Construction> {
    let s = grid.s();
    let d_n = dt(s, n);
    let mut matrices = Vec::new();
    let mut block = hankel::build(grid, n, 0)?;

    let kern0 = kernel_basis(&block, opts.threshold.tau(d_n, 1))?;
    let mut records = vec![record(0, 1, &kern0)];
    let mut heights = vec![1 - kern0.dim()];
    let (b0, n0) = normal_block(s, 0, &CMat::zeros(1, 0))?;
    let mut hblocks = vec![b0];
    let mut nblocks = vec![n0];
    let mut inherited = CMat::zeros(1, 0);
    if keep_matrices {
        matrices.push(block.clone());
    }

    for k in 1..=n {
        block = hankel::extend(block, grid)?;
        let d_k = dt(s, k);
        let tau = opts.threshold.tau(d_n, d_k);
        let kern = kernel_basis(&block, tau)?;
        records.push(record(k, d_k, &kern));
        if keep_matrices {
            matrices.push(block.clone());
        }
        let nest_tol = opts.nest_tol.unwrap_or_else(|| (100.0 * tau).max(1e-6));
        let p = graded_step(k, &inherited, &kern.basis, nest_tol)?;
        let mut next = CMat::zeros(d_k, inherited.ncols() + p.ncols());
        next.view_mut((0, 0), inherited.shape()).copy_from(&inherited);
        next.columns_mut(inherited.ncols(), p.ncols()).copy_from(&p);
        inherited = next;

        let (hb, nb) = normal_block(s, k, &p)?;
        hblocks.push(hb);
        nblocks.push(nb);
        let h_k = d_k - kern.dim();
        let stalled = h_k == *heights.last().expect("nonempty");
        heights.push(h_k);
        if stalled {
            let deg_n = k - 1;
            // the stall degree carries no normal forms
            nblocks.truncate(k);
            return Ok(Construction {
                n,
                hbasis: GradedHBasis { s, blocks: hblocks },
                nbasis: NormalFormBasis { s, blocks: nblocks },
                profile: HilbertProfile {
                    values: heights,
                    deg_n,
                },
                records,
                matrices,
            });
        }
    }
    Err(PronyError::NTooSmall { n })
}

fn record(k: usize, d_k: usize, kern: &KernelBasis) -> DegreeRecord {
    DegreeRecord {
        k,
        d_k,
        v_k: kern.dim(),
        h_k: d_k - kern.dim(),
        tau: kern.tau,
        sigma_min_kept: kern.sigma_min_kept(),
        sigma_max_cut: kern.sigma_max_cut(),
    }
}
