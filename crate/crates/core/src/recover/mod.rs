//! Coefficient recovery and the end-to-end reconstruction pipeline.

pub mod sparse;

use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PronyError, Result, Stage};
use crate::exec::Execution;
use crate::hbasis::{self, ConstructionOptions, DegreeRecord, HilbertProfile, Threshold};
use crate::linalg::CMat;
use crate::mindex::{dim_total, MultiIndex};
use crate::reduction::ReductionContext;
use crate::sampler::{ExpSumModel, SampleGrid};
use crate::spectra::{self, MultTables};

/// Least-squares fit of `Σ_ω f_ω z_ω^α = f(α)` over every grid sample with `|α| <= max_degree`.
///
/// Returns the coefficients and the relative residual `‖V^T f - b‖ / ‖b‖`.
pub fn solve_coefficients(
    points: &[Vec<Complex64>],
    grid: &SampleGrid,
    max_degree: usize,
) -> Result<(Vec<Complex64>, f64)> {
    let s = grid.s();
    if points.is_empty() {
        return Err(PronyError::VandermondeRankDeficient { rank: 0, points: 0 });
    }
    if let Some(p) = points.iter().find(|p| p.len() != s) {
        return Err(PronyError::DimensionMismatch {
            expected: s,
            got: p.len(),
        });
    }
    grid.covers(max_degree)?;
    let rows = dim_total(s, max_degree)?;
    let index = grid.index();
    let mut a = CMat::zeros(rows, points.len());
    let mut b = DVector::zeros(rows);
    for r in 0..rows {
        let alpha = index.get(r);
        b[r] = grid.get(alpha)?;
        for (c, z) in points.iter().enumerate() {
            a[(r, c)] = alpha.monomial(z);
        }
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(PronyError::VandermondeRankDeficient {
            rank: 0,
            points: points.len(),
        });
    }
    // column equilibration; the scaling is undone on the solution
    let scales: Vec<f64> = a.column_iter().map(|c| c.norm().max(f64::MIN_POSITIVE)).collect();
    for (mut col, &sc) in a.column_iter_mut().zip(&scales) {
        col /= Complex64::new(sc, 0.0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = smax * f64::EPSILON * rows.max(points.len()) as f64;
    let rank = svd.singular_values.iter().filter(|&&v| v > cutoff).count();
    if rank < points.len() || rows < points.len() {
        return Err(PronyError::VandermondeRankDeficient {
            rank,
            points: points.len(),
        });
    }
    let y = svd
        .solve(&b, cutoff)
        .map_err(|_| PronyError::VandermondeRankDeficient {
            rank,
            points: points.len(),
        })?;
    let residual = {
        let bn = b.norm();
        let r = (&a * &y - &b).norm();
        if bn > 0.0 {
            r / bn
        } else {
            r
        }
    };
    let coeffs = y.iter().zip(&scales).map(|(v, sc)| v / sc).collect();
    Ok((coeffs, residual))
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub threshold: Threshold,
    pub nest_tol: Option<f64>,
    /// Seed of the random direction used for the joint eigenproblem.
    pub seed: u64,
    /// Turn commutator and verification warnings into errors.
    pub strict: bool,
    /// Relative commutator tolerance.
    pub comm_tol: f64,
    /// Known noise level of the samples, used to scale verification tolerances.
    pub noise_level: f64,
    /// Keep the Hankel blocks and tables for inspection.
    pub keep_matrices: bool,
    pub exec: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            threshold: Threshold::MachineEpsilon,
            nest_tol: None,
            seed: 0,
            strict: false,
            comm_tol: 1e-8,
            noise_level: 0.0,
            keep_matrices: false,
            exec: Execution::Parallel,
        }
    }
}

impl SolveOptions {
    /// Options for samples perturbed at level `epsilon`: noise-scaled threshold and tolerances.
    pub fn noisy(epsilon: f64) -> Self {
        SolveOptions {
            threshold: Threshold::NoiseLevel(epsilon),
            noise_level: epsilon,
            ..SolveOptions::default()
        }
    }
}

/// Wall-clock seconds per phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub construction: f64,
    pub tables: f64,
    pub eigen: f64,
    pub vandermonde: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: usize,
    pub deg_n: usize,
    pub hilbert: HilbertProfile,
    pub degrees: Vec<DegreeRecord>,
    /// Relative least-squares residual of the Vandermonde fit.
    pub residual: f64,
    /// `max |f_rec(γ) - f(γ)| / max |f(γ)|` over `|γ| <= 2n`.
    pub fit_residual: f64,
    /// The same quantity over grid samples beyond `2n`, when there are any.
    pub held_out_residual: Option<f64>,
    /// Set when the held-out samples contradict the model, i.e. the rank stalled before `deg N`.
    pub stall_early: bool,
    pub commutator: f64,
    pub eigvec_condition: f64,
    pub warnings: Vec<String>,
    pub timings: Timings,
}

#[derive(Clone, Debug)]
pub struct PronySolution {
    pub model: ExpSumModel,
    pub diagnostics: Diagnostics,
    /// Hankel blocks `F_{n,0}, …` and the tables, only with `keep_matrices`.
    pub matrices: Vec<CMat>,
    pub tables: Option<MultTables>,
}

/// `n = #Ω` always exceeds `deg N`.
pub fn safe_n(terms: usize) -> usize {
    terms.max(1)
}

/// `deg N + 1` for points in general position: the first degree whose monomial count reaches `terms`, plus one.
pub fn generic_n(s: usize, terms: usize) -> usize {
    (0..)
        .find(|&k| dim_total(s, k).map(|d| d >= terms).unwrap_or(true))
        .map(|k| k + 1)
        .expect("unbounded search")
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Full reconstruction from samples covering `|γ| <= 2n`.
pub fn prony_solve(grid: &SampleGrid, n: usize, opts: &SolveOptions) -> Result<PronySolution> {
    if n == 0 {
        return Err(PronyError::InvalidArgument("n must be at least 1".into()).at(Stage::Input));
    }
    grid.covers(2 * n).map_err(|e| e.at(Stage::Input))?;
    let s = grid.s();
    let mut warnings = Vec::new();
    let mut timings = Timings::default();

    let t = Instant::now();
    let copts = ConstructionOptions {
        threshold: opts.threshold,
        nest_tol: opts.nest_tol,
    };
    let construction = hbasis::run_construction_inner(grid, n, &copts, opts.keep_matrices)
        .map_err(|e| e.at(Stage::Construction))?;
    timings.construction = secs(t);
    let deg_n = construction.deg_n();

    let t = Instant::now();
    let ctx = ReductionContext::new(&construction).map_err(|e| e.at(Stage::Reduction))?;
    let tables = spectra::mult_tables(&ctx, opts.exec).map_err(|e| e.at(Stage::Tables))?;
    timings.tables = secs(t);
    let commutator = tables.commutator_defect();
    if !(commutator <= opts.comm_tol) {
        if opts.strict {
            return Err(PronyError::NonCommuting(commutator).at(Stage::Tables));
        }
        warnings.push(format!("multiplication tables commute only to {commutator:.3e}"));
    }

    let t = Instant::now();
    let points = spectra::joint_eigen(&tables, opts.seed).map_err(|e| e.at(Stage::Eigen))?;
    let freqs = spectra::points_to_freqs(&points).map_err(|e| e.at(Stage::Eigen))?;
    timings.eigen = secs(t);

    let t = Instant::now();
    let (coeffs, residual) =
        solve_coefficients(&points.points, grid, 2 * n).map_err(|e| e.at(Stage::Vandermonde))?;
    timings.vandermonde = secs(t);

    let model = ExpSumModel::new(s, freqs, coeffs).map_err(|e| e.at(Stage::Vandermonde))?;
    let (fit_residual, held_out_residual) = fit_residuals(&model, &points.points, grid, 2 * n);
    let verify_tol = (1e3 * opts.noise_level).max(1e-6);
    let stall_early = held_out_residual.is_some_and(|r| !(r <= verify_tol));
    if stall_early {
        let msg = format!(
            "rank stalled at k = {} but samples beyond |γ| = {} disagree (relative {:.3e}); increase n",
            deg_n + 1,
            2 * n,
            held_out_residual.unwrap_or(f64::NAN)
        );
        if opts.strict {
            return Err(PronyError::NTooSmall { n }.at(Stage::Construction));
        }
        warnings.push(msg);
    } else if held_out_residual.is_none() && deg_n + 1 == n {
        warnings.push(format!(
            "rank stalled at the last checked degree k = {n}; no held-out samples to confirm deg N"
        ));
    }
    if !(fit_residual <= verify_tol) {
        warnings.push(format!("fit residual {fit_residual:.3e} on the sampled lattice"));
    }

    let matrices = construction
        .matrices
        .into_iter()
        .map(|b| b.into_matrix())
        .collect();
    Ok(PronySolution {
        model,
        diagnostics: Diagnostics {
            n,
            deg_n,
            hilbert: construction.profile,
            degrees: construction.records,
            residual,
            fit_residual,
            held_out_residual,
            stall_early,
            commutator,
            eigvec_condition: points.eigvec_condition,
            warnings,
            timings,
        },
        matrices,
        tables: opts.keep_matrices.then_some(tables),
    })
}

/// Relative max-residuals of the model on the fitted range and on the remaining grid samples.
fn fit_residuals(
    model: &ExpSumModel,
    points: &[Vec<Complex64>],
    grid: &SampleGrid,
    fitted: usize,
) -> (f64, Option<f64>) {
    let eval = |a: &MultiIndex| -> Complex64 {
        points
            .iter()
            .zip(model.coeffs())
            .map(|(z, f)| f * a.monomial(z))
            .sum()
    };
    let (mut fit, mut fit_scale) = (0.0f64, 0.0f64);
    let (mut held, mut held_scale, mut any_held) = (0.0f64, 0.0f64, false);
    for (a, v) in grid.iter() {
        let d = (eval(a) - v).norm();
        if a.degree() <= fitted {
            fit = fit.max(d);
            fit_scale = fit_scale.max(v.norm());
        } else {
            any_held = true;
            held = held.max(d);
            held_scale = held_scale.max(v.norm());
        }
    }
    let rel = |r: f64, sc: f64| if sc > 0.0 { r / sc } else { r };
    (
        rel(fit, fit_scale),
        any_held.then(|| rel(held, held_scale.max(fit_scale))),
    )
}
