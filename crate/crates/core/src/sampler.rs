//! Exponential-sum models, lattice sampling and randomized instances.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PronyError, Result};
use crate::mindex::{dim_total, GradedIndexSet, MultiIndex};

/// Minimum pairwise distance between normalized frequencies.
pub const MIN_SEPARATION: f64 = 1e-8;

const MAX_RETRIES: usize = 100;

/// Map the imaginary part into `[0, 2π)`.
pub fn normalize_component(w: Complex64) -> Complex64 {
    let mut im = w.im.rem_euclid(TAU);
    if im >= TAU {
        im -= TAU;
    }
    Complex64::new(w.re, im)
}

pub fn normalize_freq(w: &[Complex64]) -> Vec<Complex64> {
    w.iter().map(|&c| normalize_component(c)).collect()
}

/// Distance between two frequencies with imaginary parts compared on the circle.
pub fn freq_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let dre = x.re - y.re;
            let dim = (x.im - y.im).rem_euclid(TAU);
            let dim = dim.min(TAU - dim);
            dre * dre + dim * dim
        })
        .sum::<f64>()
        .sqrt()
}

/// `f(x) = Σ f_ω e^{ω·x}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpSumModel {
    s: usize,
    freqs: Vec<Vec<Complex64>>,
    coeffs: Vec<Complex64>,
}

impl ExpSumModel {
    pub fn new(s: usize, freqs: Vec<Vec<Complex64>>, coeffs: Vec<Complex64>) -> Result<Self> {
        if s == 0 {
            return Err(PronyError::InvalidArgument("s must be at least 1".into()));
        }
        if freqs.len() != coeffs.len() {
            return Err(PronyError::DimensionMismatch {
                expected: freqs.len(),
                got: coeffs.len(),
            });
        }
        if let Some(bad) = freqs.iter().find(|w| w.len() != s) {
            return Err(PronyError::DimensionMismatch {
                expected: s,
                got: bad.len(),
            });
        }
        if coeffs.iter().any(|c| c.norm() == 0.0 || !c.is_finite()) {
            return Err(PronyError::InvalidArgument(
                "coefficients must be finite and nonzero".into(),
            ));
        }
        let freqs: Vec<Vec<Complex64>> = freqs.iter().map(|w| normalize_freq(w)).collect();
        if !well_separated(&freqs) {
            return Err(PronyError::DuplicateFrequencies);
        }
        Ok(ExpSumModel { s, freqs, coeffs })
    }

    /// Like [`ExpSumModel::new`] but skips the separation check; recovered models may
    /// legitimately contain clustered frequencies.
    pub fn new_unchecked(s: usize, freqs: Vec<Vec<Complex64>>, coeffs: Vec<Complex64>) -> Self {
        let freqs = freqs.iter().map(|w| normalize_freq(w)).collect();
        ExpSumModel { s, freqs, coeffs }
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn freqs(&self) -> &[Vec<Complex64>] {
        &self.freqs
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `z_ω = e^ω` for every term.
    pub fn points(&self) -> Vec<Vec<Complex64>> {
        self.freqs
            .iter()
            .map(|w| w.iter().map(|c| c.exp()).collect())
            .collect()
    }

    pub fn evaluate(&self, x: &[Complex64]) -> Result<Complex64> {
        if x.len() != self.s {
            return Err(PronyError::DimensionMismatch {
                expected: self.s,
                got: x.len(),
            });
        }
        Ok(self
            .freqs
            .iter()
            .zip(&self.coeffs)
            .map(|(w, f)| {
                let e: Complex64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
                f * e.exp()
            })
            .sum())
    }

    /// Evaluation at a lattice point, using `z_ω^α` so large `α` stay accurate.
    pub fn evaluate_lattice(&self, alpha: &MultiIndex) -> Complex64 {
        self.points()
            .iter()
            .zip(&self.coeffs)
            .map(|(z, f)| f * alpha.monomial(z))
            .sum()
    }
}

fn well_separated(freqs: &[Vec<Complex64>]) -> bool {
    for (i, a) in freqs.iter().enumerate() {
        for b in &freqs[i + 1..] {
            if freq_distance(a, b) < MIN_SEPARATION {
                return false;
            }
        }
    }
    true
}

/// Independent uniform absolute perturbation of real and imaginary parts in `[-ε, ε]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub epsilon: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(PronyError::InvalidArgument(format!(
                "noise level must be finite and nonnegative, got {epsilon}"
            )));
        }
        Ok(NoiseSpec { epsilon, seed })
    }
}

/// Samples on `{γ ∈ ℕ₀^s : |γ| <= D}` stored densely in canonical order.
///
/// Grids read from files may have holes; accessing one yields
/// [`PronyError::MissingSample`] naming the lattice point.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    index: GradedIndexSet,
    values: Vec<Option<Complex64>>,
}

impl SampleGrid {
    pub fn from_fn(s: usize, degree: usize, mut f: impl FnMut(&MultiIndex) -> Complex64) -> Result<Self> {
        let index = GradedIndexSet::new(s, degree)?;
        let values = index.iter().map(|a| Some(f(a))).collect();
        Ok(SampleGrid { index, values })
    }

    /// Build from scattered lattice samples; the grid degree is the largest `|γ|` seen.
    pub fn from_points(s: usize, points: Vec<(MultiIndex, Complex64)>) -> Result<Self> {
        let degree = points.iter().map(|(a, _)| a.degree()).max().unwrap_or(0);
        let index = GradedIndexSet::new(s, degree)?;
        let mut values = vec![None; index.len()];
        for (a, v) in points {
            if a.s() != s {
                return Err(PronyError::DimensionMismatch {
                    expected: s,
                    got: a.s(),
                });
            }
            values[a.position()] = Some(v);
        }
        Ok(SampleGrid { index, values })
    }

    pub fn s(&self) -> usize {
        self.index.s()
    }

    pub fn max_degree(&self) -> usize {
        self.index.max_degree()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self) -> &GradedIndexSet {
        &self.index
    }

    pub fn get(&self, alpha: &MultiIndex) -> Result<Complex64> {
        self.index
            .position(alpha)
            .and_then(|p| self.values[p])
            .ok_or_else(|| PronyError::MissingSample(alpha.clone()))
    }

    pub(crate) fn get_position(&self, pos: usize) -> Result<Complex64> {
        self.values
            .get(pos)
            .copied()
            .flatten()
            .ok_or_else(|| PronyError::MissingSample(self.lattice_point(pos)))
    }

    fn lattice_point(&self, pos: usize) -> MultiIndex {
        if pos < self.index.len() {
            return self.index.get(pos).clone();
        }
        // beyond the stored degree: enumerate far enough to name the point
        let mut degree = self.max_degree() + 1;
        loop {
            let bigger = GradedIndexSet::new(self.s(), degree).expect("index set");
            if pos < bigger.len() {
                return bigger.get(pos).clone();
            }
            degree += 1;
        }
    }

    /// Check every `|γ| <= degree` is present; names the first missing point.
    pub fn covers(&self, degree: usize) -> Result<()> {
        let needed = dim_total(self.s(), degree)?;
        (0..needed).try_for_each(|p| self.get_position(p).map(|_| ()))
    }

    /// Present samples as `(γ, f(γ))`.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, Complex64)> {
        self.index
            .iter()
            .zip(&self.values)
            .filter_map(|(a, v)| v.map(|v| (a, v)))
    }

    /// Samples with `|γ| <= degree`, all required to be present.
    pub fn prefix(&self, degree: usize) -> Result<Vec<Complex64>> {
        let needed = dim_total(self.s(), degree)?;
        (0..needed).map(|p| self.get_position(p)).collect()
    }
}

/// Samples of `model` on `|γ| <= n + k`, optionally perturbed.
pub fn sample_lattice(
    model: &ExpSumModel,
    n: usize,
    k: usize,
    noise: Option<&NoiseSpec>,
) -> Result<SampleGrid> {
    if k > n {
        return Err(PronyError::InvalidArgument(format!(
            "need n >= k, got n = {n}, k = {k}"
        )));
    }
    let points = model.points();
    let mut grid = SampleGrid::from_fn(model.s(), n + k, |a| {
        points
            .iter()
            .zip(model.coeffs())
            .map(|(z, f)| f * a.monomial(z))
            .sum()
    })?;
    if let Some(noise) = noise.filter(|n| n.epsilon > 0.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let eps = noise.epsilon;
        for v in grid.values.iter_mut().flatten() {
            *v += Complex64::new(rng.random_range(-eps..=eps), rng.random_range(-eps..=eps));
        }
    }
    Ok(grid)
}

/// Families of random test instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// `ω ∈ [0,1]^s`, coefficients in `(0,1]`.
    Real,
    /// `ω ∈ i[0,2π)^s`, coefficients in `[-1,1]`.
    Imaginary,
    /// `ω = ω̃ + iλ(1,…,1)` with a shared real `ω̃`; all points collinear with the origin.
    Line,
    /// Imaginary frequencies with coefficients in `±[1,2]`.
    CoeffRange,
}

impl std::str::FromStr for InstanceKind {
    type Err = PronyError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(InstanceKind::Real),
            "imaginary" | "imag" => Ok(InstanceKind::Imaginary),
            "line" => Ok(InstanceKind::Line),
            "coeff_range" | "coeff-range" => Ok(InstanceKind::CoeffRange),
            other => Err(PronyError::InvalidArgument(format!(
                "unknown instance kind '{other}'"
            ))),
        }
    }
}

fn nonzero_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    loop {
        let v = rng.random_range(lo..=hi);
        if v.abs() > 1e-12 {
            return v;
        }
    }
}

pub fn random_instance(s: usize, m: usize, kind: InstanceKind, seed: u64) -> Result<ExpSumModel> {
    if m == 0 {
        return Err(PronyError::InvalidArgument("need at least one term".into()));
    }
    if s == 0 {
        return Err(PronyError::InvalidArgument("s must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RETRIES {
        let base: Vec<f64> = (0..s).map(|_| rng.random_range(0.0..=1.0)).collect();
        let freqs: Vec<Vec<Complex64>> = (0..m)
            .map(|_| match kind {
                InstanceKind::Real => (0..s)
                    .map(|_| Complex64::new(rng.random_range(0.0..=1.0), 0.0))
                    .collect(),
                InstanceKind::Imaginary | InstanceKind::CoeffRange => (0..s)
                    .map(|_| Complex64::new(0.0, rng.random_range(0.0..TAU)))
                    .collect(),
                InstanceKind::Line => {
                    let lambda = rng.random_range(0.0..TAU);
                    base.iter().map(|&b| Complex64::new(b, lambda)).collect()
                }
            })
            .collect();
        let coeffs: Vec<Complex64> = (0..m)
            .map(|_| {
                let v = match kind {
                    InstanceKind::Real => nonzero_in(&mut rng, 0.0, 1.0),
                    InstanceKind::Imaginary | InstanceKind::Line => nonzero_in(&mut rng, -1.0, 1.0),
                    InstanceKind::CoeffRange => {
                        let mag = rng.random_range(1.0..=2.0);
                        if rng.random_bool(0.5) {
                            mag
                        } else {
                            -mag
                        }
                    }
                };
                Complex64::new(v, 0.0)
            })
            .collect();
        match ExpSumModel::new(s, freqs, coeffs) {
            Ok(model) => return Ok(model),
            Err(PronyError::DuplicateFrequencies) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(PronyError::DuplicateFrequencies)
}

/// Six frequencies `ω = (α + (1,1))/2, |α| <= 2` in two variables whose samples equal
/// `1` on `|γ| <= 2`, so `F_0` and `F_1` both have rank one although the inverse
/// system has degree two. The shift keeps `z = (1,1)` out of the point set; with it
/// the constant `1` would be the unique fit.
pub fn flat_extension_fixture() -> ExpSumModel {
    let index = GradedIndexSet::new(2, 2).expect("index set");
    let freqs: Vec<Vec<Complex64>> = index
        .iter()
        .map(|a| {
            a.entries()
                .iter()
                .map(|&e| Complex64::new((e as f64 + 1.0) / 2.0, 0.0))
                .collect()
        })
        .collect();
    let points: Vec<Vec<Complex64>> = freqs
        .iter()
        .map(|w| w.iter().map(|c| c.exp()).collect())
        .collect();
    // V^T f = 1 with V = [z_ω^α]_{ω, α}
    let vt = DMatrix::from_fn(index.len(), points.len(), |r, c| index.get(r).monomial(&points[c]));
    let ones = nalgebra::DVector::from_element(index.len(), Complex64::new(1.0, 0.0));
    let coeffs = vt.lu().solve(&ones).expect("fixture Vandermonde is unisolvent");
    ExpSumModel::new(2, freqs, coeffs.iter().cloned().collect()).expect("fixture model")
}
