//! Randomized accuracy trials: generate, sample, solve, match against the truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assign::min_cost_assignment;
use crate::error::{ErrorClass, PronyError, Result};
use crate::exec::Execution;
use crate::hbasis::Threshold;
use crate::mindex::dim_total;
use crate::recover::{prony_solve, SolveOptions, Timings};
use crate::sampler::{freq_distance, random_instance, sample_lattice, ExpSumModel, InstanceKind, NoiseSpec};

/// Largest `dim Π_n` accepted without `large`.
pub const DESK_LIMIT: usize = 300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchKind {
    Real,
    Imaginary,
    Line,
    /// Imaginary frequencies, coefficients in `±[1,2]`, uniform noise and a noise-scaled threshold.
    Perturbed,
}

impl std::str::FromStr for BenchKind {
    type Err = PronyError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(BenchKind::Real),
            "imaginary" | "imag" => Ok(BenchKind::Imaginary),
            "line" => Ok(BenchKind::Line),
            "perturbed" => Ok(BenchKind::Perturbed),
            other => Err(PronyError::InvalidArgument(format!("unknown bench kind '{other}'"))),
        }
    }
}

impl BenchKind {
    pub fn instance_kind(self) -> InstanceKind {
        match self {
            BenchKind::Real => InstanceKind::Real,
            BenchKind::Imaginary => InstanceKind::Imaginary,
            BenchKind::Line => InstanceKind::Line,
            BenchKind::Perturbed => InstanceKind::CoeffRange,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub s: usize,
    pub m: usize,
    pub n: usize,
    pub kind: BenchKind,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    /// Overrides the kind's default threshold.
    pub threshold: Option<Threshold>,
    pub strict: bool,
    /// Allow problem sizes beyond [`DESK_LIMIT`].
    pub large: bool,
}

impl BenchConfig {
    pub fn new(s: usize, m: usize, n: usize, kind: BenchKind) -> Self {
        BenchConfig {
            s,
            m,
            n,
            kind,
            epsilon: 0.0,
            trials: 20,
            seed: 0,
            threshold: None,
            strict: false,
            large: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PronyError::InvalidArgument(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be finite and nonnegative, got {}", self.epsilon));
        }
        if self.s == 0 || self.m == 0 || self.n == 0 {
            return bad("s, m and n must be positive".into());
        }
        if self.kind == BenchKind::Perturbed && self.epsilon == 0.0 {
            return bad("perturbed runs need epsilon > 0".into());
        }
        let d_n = dim_total(self.s, self.n)?;
        if d_n > DESK_LIMIT && !self.large {
            return bad(format!(
                "dim Π_n = {d_n} exceeds the desk-scale limit {DESK_LIMIT}; pass --large to run it"
            ));
        }
        Ok(())
    }

    pub fn solve_options(&self) -> SolveOptions {
        let mut opts = if self.epsilon > 0.0 {
            SolveOptions::noisy(self.epsilon)
        } else {
            SolveOptions::default()
        };
        if let Some(t) = self.threshold {
            opts.threshold = t;
        }
        opts.strict = self.strict;
        // trials already run concurrently
        opts.exec = Execution::Sequential;
        opts
    }

    /// Seed of trial `i`, independent of every other trial.
    pub fn trial_seed(&self, i: usize) -> u64 {
        splitmix64(self.seed ^ splitmix64(i as u64 ^ 0xa076_1d64_78bd_642f))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Why a trial did not count as a success.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    /// The number of recovered frequencies differs from the truth.
    TermCountMismatch,
    NonFinite,
    NTooSmall,
    Rank,
    Eigen,
    Vandermonde,
    Coverage,
    Rounding,
    Config,
}

impl From<ErrorClass> for FailReason {
    fn from(c: ErrorClass) -> Self {
        match c {
            ErrorClass::Config => FailReason::Config,
            ErrorClass::Coverage => FailReason::Coverage,
            ErrorClass::NTooSmall => FailReason::NTooSmall,
            ErrorClass::Rank => FailReason::Rank,
            ErrorClass::Eigen => FailReason::Eigen,
            ErrorClass::Vandermonde => FailReason::Vandermonde,
            ErrorClass::Rounding => FailReason::Rounding,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialOutcome {
    Success { freq_error: f64, coeff_error: f64 },
    Fail { reason: FailReason, detail: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    pub seed: u64,
    pub terms_found: Option<usize>,
    pub outcome: TrialOutcome,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub avg: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchTiming {
    pub wall: f64,
    /// Summed over trials.
    pub phases: Timings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub trials: Vec<TrialResult>,
    pub successes: usize,
    pub fails: usize,
    pub fail_counts: BTreeMap<FailReason, usize>,
    pub freq_error: Option<ErrorStats>,
    pub coeff_error: Option<ErrorStats>,
    /// The only nondeterministic part of the report.
    pub timing: BenchTiming,
}

/// Frobenius errors of frequencies and coefficients after an optimal assignment of terms.
///
/// Frequency differences compare imaginary parts on the circle.
pub fn model_errors(truth: &ExpSumModel, found: &ExpSumModel) -> Option<(f64, f64)> {
    if truth.len() != found.len() {
        return None;
    }
    let cost: Vec<Vec<f64>> = truth
        .freqs()
        .iter()
        .map(|a| found.freqs().iter().map(|b| freq_distance(a, b).powi(2)).collect())
        .collect();
    let perm = min_cost_assignment(&cost);
    let freq = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>().sqrt();
    let coeff = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| (truth.coeffs()[i] - found.coeffs()[j]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Some((freq, coeff))
}

struct TrialRun {
    result: TrialResult,
    timings: Timings,
}

fn run_trial(cfg: &BenchConfig, opts: &SolveOptions, index: usize) -> TrialRun {
    let seed = cfg.trial_seed(index);
    let fail = |reason: FailReason, detail: String, found: Option<usize>| TrialRun {
        result: TrialResult {
            index,
            seed,
            terms_found: found,
            outcome: TrialOutcome::Fail { reason, detail },
        },
        timings: Timings::default(),
    };
    let truth = match random_instance(cfg.s, cfg.m, cfg.kind.instance_kind(), seed) {
        Ok(t) => t,
        Err(e) => return fail(e.class().into(), e.to_string(), None),
    };
    let noise = (cfg.epsilon > 0.0).then(|| NoiseSpec {
        epsilon: cfg.epsilon,
        seed: seed.wrapping_add(1),
    });
    let grid = match sample_lattice(&truth, cfg.n, cfg.n, noise.as_ref()) {
        Ok(g) => g,
        Err(e) => return fail(e.class().into(), e.to_string(), None),
    };
    let mut opts = opts.clone();
    opts.seed = seed.wrapping_add(2);
    let sol = match prony_solve(&grid, cfg.n, &opts) {
        Ok(s) => s,
        Err(e) => return fail(e.class().into(), e.to_string(), None),
    };
    let found = sol.model.len();
    let timings = sol.diagnostics.timings.clone();
    let outcome = match model_errors(&truth, &sol.model) {
        None => TrialOutcome::Fail {
            reason: FailReason::TermCountMismatch,
            detail: format!("recovered {found} of {} terms", cfg.m),
        },
        Some((f, c)) if !(f.is_finite() && c.is_finite()) => TrialOutcome::Fail {
            reason: FailReason::NonFinite,
            detail: "non-finite error".into(),
        },
        Some((freq_error, coeff_error)) => TrialOutcome::Success {
            freq_error,
            coeff_error,
        },
    };
    TrialRun {
        result: TrialResult {
            index,
            seed,
            terms_found: Some(found),
            outcome,
        },
        timings,
    }
}

pub fn run_bench(cfg: &BenchConfig, exec: Execution) -> Result<BenchReport> {
    cfg.validate()?;
    let start = Instant::now();
    let opts = cfg.solve_options();
    let indices: Vec<usize> = (0..cfg.trials).collect();
    let runs = exec.map(&indices, |&i| run_trial(cfg, &opts, i));

    let mut phases = Timings::default();
    let mut fail_counts = BTreeMap::new();
    let (mut freqs, mut coeffs) = (Vec::new(), Vec::new());
    let mut trials = Vec::with_capacity(runs.len());
    for run in runs {
        phases.construction += run.timings.construction;
        phases.tables += run.timings.tables;
        phases.eigen += run.timings.eigen;
        phases.vandermonde += run.timings.vandermonde;
        match &run.result.outcome {
            TrialOutcome::Success {
                freq_error,
                coeff_error,
            } => {
                freqs.push(*freq_error);
                coeffs.push(*coeff_error);
            }
            TrialOutcome::Fail { reason, .. } => *fail_counts.entry(*reason).or_insert(0) += 1,
        }
        trials.push(run.result);
    }
    let stats = |v: &[f64]| {
        (!v.is_empty()).then(|| ErrorStats {
            avg: v.iter().sum::<f64>() / v.len() as f64,
            max: v.iter().cloned().fold(0.0, f64::max),
        })
    };
    Ok(BenchReport {
        config: cfg.clone(),
        successes: freqs.len(),
        fails: trials.len() - freqs.len(),
        fail_counts,
        freq_error: stats(&freqs),
        coeff_error: stats(&coeffs),
        trials,
        timing: BenchTiming {
            wall: start.elapsed().as_secs_f64(),
            phases,
        },
    })
}

impl BenchReport {
    /// One-row table: parameters, average and maximal errors, fails.
    pub fn table(&self) -> String {
        let c = &self.config;
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4e}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:>3} {:>4} {:>3} {:>8} | {:>11} {:>11} | {:>11} {:>11} | {:>5}",
            "kind", "s", "m", "n", "eps", "avg coeff", "avg freq", "max coeff", "max freq", "fails"
        );
        let kind = format!("{:?}", c.kind).to_lowercase();
        let _ = writeln!(
            out,
            "{:<8} {:>3} {:>4} {:>3} {:>8.1e} | {:>11} {:>11} | {:>11} {:>11} | {:>5}",
            kind,
            c.s,
            c.m,
            c.n,
            c.epsilon,
            fmt(self.coeff_error.as_ref().map(|e| e.avg)),
            fmt(self.freq_error.as_ref().map(|e| e.avg)),
            fmt(self.coeff_error.as_ref().map(|e| e.max)),
            fmt(self.freq_error.as_ref().map(|e| e.max)),
            self.fails
        );
        if !self.fail_counts.is_empty() {
            let reasons: Vec<String> = self
                .fail_counts
                .iter()
                .map(|(r, n)| format!("{}={n}", serde_json::to_string(r).unwrap_or_default().trim_matches('"')))
                .collect();
            let _ = writeln!(out, "fail reasons: {}", reasons.join(", "));
        }
        let _ = writeln!(out, "wall clock: {:.3} s", self.timing.wall);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let cfg = BenchConfig::new(2, 3, 3, BenchKind::Imaginary);
        let seeds: Vec<u64> = (0..100).map(|i| cfg.trial_seed(i)).collect();
        let mut uniq = seeds.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 100);
        assert_eq!(seeds[5], cfg.trial_seed(5));
    }

    #[test]
    fn errors_ignore_term_order() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let a = ExpSumModel::new(1, vec![vec![c(0.0, 1.0)], vec![c(0.0, 2.0)]], vec![c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let b = ExpSumModel::new(1, vec![vec![c(0.0, 2.0)], vec![c(0.0, 1.0 + 1e-3)]], vec![c(2.0, 0.0), c(1.0, 0.0)]).unwrap();
        let (f, k) = model_errors(&a, &b).unwrap();
        assert!((f - 1e-3).abs() < 1e-12);
        assert!(k < 1e-15);
        let short = ExpSumModel::new(1, vec![vec![c(0.0, 1.0)]], vec![c(1.0, 0.0)]).unwrap();
        assert!(model_errors(&a, &short).is_none());
    }

    #[test]
    fn config_validation() {
        let mut cfg = BenchConfig::new(2, 3, 3, BenchKind::Perturbed);
        assert!(cfg.validate().is_err());
        cfg.epsilon = 1e-7;
        assert!(cfg.validate().is_ok());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let big = BenchConfig::new(5, 150, 8, BenchKind::Imaginary);
        assert!(big.validate().is_err());
        assert!(BenchConfig { large: true, ..big }.validate().is_ok());
    }

    #[test]
    fn small_bench_is_deterministic() {
        let mut cfg = BenchConfig::new(2, 4, 3, BenchKind::Imaginary);
        cfg.trials = 4;
        cfg.seed = 9;
        let a = run_bench(&cfg, Execution::Parallel).unwrap();
        let b = run_bench(&cfg, Execution::Sequential).unwrap();
        assert_eq!(a.trials, b.trials);
        assert_eq!(a.successes + a.fails, 4);
        assert!(a.table().contains("imaginary"));
    }
}
