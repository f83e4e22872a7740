//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::TAU;
use std::time::Instant;

use mprony::assign::min_cost_assignment;
use mprony::bench::{run_bench, BenchConfig, BenchKind, BenchReport};
use mprony::hbasis::{run_graded_construction, ConstructionOptions, Threshold};
use mprony::linalg::CVec;
use mprony::mindex::{dim_total, CoeffVec, GradedIndexSet, MultiIndex};
use mprony::recover::sparse::{default_sampling_matrix, sparse_poly_solve, Fewnomial};
use mprony::recover::{generic_n, prony_solve, SolveOptions};
use mprony::reduction::{reduce, ReductionContext};
use mprony::sampler::{flat_extension_fixture, random_instance, sample_lattice, InstanceKind};
use mprony::spectra::{joint_eigen, mult_tables, PointSet};
use mprony::Execution;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn bench(kind: BenchKind, m: usize, n: usize, trials: usize, eps: f64, seed: u64) -> Result<BenchReport, String> {
    let mut cfg = BenchConfig::new(2, m, n, kind);
    cfg.trials = trials;
    cfg.epsilon = eps;
    cfg.seed = seed;
    run_bench(&cfg, Execution::Parallel).map_err(|e| e.to_string())
}

fn stats(r: &BenchReport) -> (f64, f64, f64, f64) {
    let f = r.freq_error.clone().unwrap_or_default();
    let c = r.coeff_error.clone().unwrap_or_default();
    (c.avg, f.avg, c.max, f.max)
}

fn imaginary_accuracy() -> Outcome {
    let r = bench(BenchKind::Imaginary, 10, 5, 20, 0.0, 1)?;
    let (ca, fa, cm, fm) = stats(&r);
    check(
        r.fails == 0 && ca < 1e-10 && fa < 1e-9 && cm < 1e-7 && fm < 1e-7 && r.timing.wall < 30.0,
        format!(
            "fails {} avg coeff {ca:.2e} avg freq {fa:.2e} max coeff {cm:.2e} max freq {fm:.2e} in {:.1}s",
            r.fails, r.timing.wall
        ),
    )
}

fn real_accuracy() -> Outcome {
    let r = bench(BenchKind::Real, 5, 3, 20, 0.0, 2)?;
    let (ca, fa, _, _) = stats(&r);
    check(
        r.successes > 0 && ca < 1e-8 && fa < 1e-6 && r.timing.wall < 20.0,
        format!("fails {} avg coeff {ca:.2e} avg freq {fa:.2e} in {:.1}s", r.fails, r.timing.wall),
    )
}

fn real_breakdown() -> Outcome {
    let r = bench(BenchKind::Real, 20, 9, 10, 0.0, 3)?;
    let json = serde_json::to_string(&r).map_err(|e| e.to_string())?;
    let back: serde_json::Value = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    let counted: usize = r.fail_counts.values().sum();
    let (_, fa, _, fm) = stats(&r);
    check(
        r.fails + r.successes == 10 && counted == r.fails && back["trials"].as_array().map(|a| a.len()) == Some(10),
        format!("report well-formed: {} fails, {} successes, avg/max freq {fa:.2e}/{fm:.2e}", r.fails, r.successes),
    )
}

fn rank_stall() -> Outcome {
    let model = flat_extension_fixture();
    // samples to |γ| = 6 so that the n = 1 answer can be checked against held-out data
    let grid = sample_lattice(&model, 3, 3, None).map_err(|e| e.to_string())?;
    let short = prony_solve(&grid, 1, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let flat = short.model.len() == 1
        && short.model.freqs()[0].iter().all(|w| w.norm() < 1e-8)
        && (short.model.coeffs()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-8
        && short.diagnostics.deg_n == 0
        && short.diagnostics.stall_early;
    let full = prony_solve(&grid, 3, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let truth: Vec<Vec<Complex64>> = GradedIndexSet::new(2, 2)
        .unwrap()
        .iter()
        .map(|a| a.entries().iter().map(|&e| Complex64::new((e as f64 + 1.0) / 2.0, 0.0).exp()).collect())
        .collect();
    let found = full.model.points();
    let worst = if found.len() == 6 { matched_max_error(&truth, &found) } else { f64::INFINITY };
    check(
        flat && worst < 1e-8 && !full.diagnostics.stall_early,
        format!(
            "n=1: {} term(s), stall flag {}; n=3: {} points, max coordinate error {worst:.2e}",
            short.model.len(),
            short.diagnostics.stall_early,
            found.len()
        ),
    )
}

fn noise_robustness() -> Outcome {
    let mut cfg = BenchConfig::new(2, 5, generic_n(2, 5), BenchKind::Perturbed);
    cfg.trials = 20;
    cfg.epsilon = 1e-7;
    cfg.seed = 5;
    cfg.threshold = Some(Threshold::NoiseLevel(1e-7));
    let r = run_bench(&cfg, Execution::Parallel).map_err(|e| e.to_string())?;
    let (_, fa, _, fm) = stats(&r);
    check(
        r.fails == 0 && fa < 1e-5,
        format!("fails {} avg freq {fa:.2e} max freq {fm:.2e}", r.fails),
    )
}

fn hilbert_no_gaps() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..200 {
        let s = rng.random_range(1..=3);
        let m = rng.random_range(1..=10);
        let n = generic_n(s, m) + 1;
        let model = random_instance(s, m, InstanceKind::Imaginary, 1000 + i).map_err(|e| e.to_string())?;
        let grid = sample_lattice(&model, n, n, None).map_err(|e| e.to_string())?;
        let c = run_graded_construction(&grid, n, &ConstructionOptions::default())
            .map_err(|e| format!("instance {i} (s={s}, m={m}): {e}"))?;
        if !c.profile.has_no_gaps() || c.profile.dimension() != m {
            return Err(format!("instance {i} (s={s}, m={m}): profile {:?}", c.profile.values));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 60.0, format!("200 profiles gap-free with h = m in {secs:.1}s"))
}

/// Largest coordinate distance after a min-cost assignment of `found` to `truth`.
fn matched_max_error(truth: &[Vec<Complex64>], found: &[Vec<Complex64>]) -> f64 {
    let dist = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let cost: Vec<Vec<f64>> = truth.iter().map(|t| found.iter().map(|f| dist(t, f)).collect()).collect();
    let perm = min_cost_assignment(&cost);
    perm.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max)
}

struct TableStats {
    column_error: f64,
    commutator: f64,
    eigen_error: f64,
}

fn table_instances() -> Result<TableStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = TableStats {
        column_error: 0.0,
        commutator: 0.0,
        eigen_error: 0.0,
    };
    for i in 0..50 {
        let s = rng.random_range(1..=3);
        let m = rng.random_range(2..=8);
        let n = generic_n(s, m) + 1;
        let model = random_instance(s, m, InstanceKind::Imaginary, 2000 + i).map_err(|e| e.to_string())?;
        let grid = sample_lattice(&model, n, n, None).map_err(|e| e.to_string())?;
        let cons = run_graded_construction(&grid, n, &ConstructionOptions::default()).map_err(|e| e.to_string())?;
        let ctx = ReductionContext::new(&cons).map_err(|e| e.to_string())?;
        let tables = mult_tables(&ctx, Execution::Sequential).map_err(|e| e.to_string())?;
        let dim = ctx.dim();
        for (j, mj) in tables.tables.iter().enumerate() {
            for col in 0..dim {
                let e = CVec::from_fn(dim, |r, _| Complex64::new((r == col) as u8 as f64, 0.0));
                let r = ctx.from_normal_coords(&e).map_err(|e| e.to_string())?;
                let want = ctx
                    .normal_coords(&reduce(&ctx, &r.mul_var(j).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?;
                let err = (mj.column(col) - &want).norm() / want.norm().max(f64::MIN_POSITIVE);
                out.column_error = out.column_error.max(err);
            }
        }
        out.commutator = out.commutator.max(tables.commutator_defect());
        let pts: PointSet = joint_eigen(&tables, i).map_err(|e| e.to_string())?;
        if pts.points.len() != m {
            return Err(format!("instance {i}: {} eigenvalues for {m} terms", pts.points.len()));
        }
        out.eigen_error = out.eigen_error.max(matched_max_error(&model.points(), &pts.points));
    }
    Ok(out)
}

fn table_oracle(st: &TableStats) -> Outcome {
    check(
        st.column_error < 1e-9 && st.commutator <= 1e-8,
        format!("max column error {:.2e}, max relative commutator {:.2e}", st.column_error, st.commutator),
    )
}

fn eigen_points(st: &TableStats) -> Outcome {
    check(st.eigen_error < 1e-7, format!("max matched coordinate error {:.2e}", st.eigen_error))
}

fn random_poly(rng: &mut ChaCha8Rng, s: usize, degree: usize) -> CoeffVec {
    let len = dim_total(s, degree).unwrap();
    let values: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    CoeffVec::from_values(s, degree, values.into()).unwrap()
}

fn reduction_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut idem, mut lin, mut interp): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut degree_ok = true;
    for i in 0..100 {
        let s = rng.random_range(1..=3);
        let m = rng.random_range(1..=8);
        let n = generic_n(s, m) + 1;
        let model = random_instance(s, m, InstanceKind::Imaginary, 3000 + i).map_err(|e| e.to_string())?;
        let grid = sample_lattice(&model, n, n, None).map_err(|e| e.to_string())?;
        let cons = run_graded_construction(&grid, n, &ConstructionOptions::default()).map_err(|e| e.to_string())?;
        let ctx = ReductionContext::new(&cons).map_err(|e| e.to_string())?;
        let top = ctx.top_degree();
        let p = random_poly(&mut rng, s, top);
        let q = random_poly(&mut rng, s, top);
        let a = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let rp = reduce(&ctx, &p).map_err(|e| e.to_string())?;
        let rq = reduce(&ctx, &q).map_err(|e| e.to_string())?;
        let rrp = reduce(&ctx, &rp).map_err(|e| e.to_string())?;
        idem = idem.max((rrp.values() - rp.values()).norm() / rp.values().norm().max(1.0));
        let combo = p.scale(a).add(&q).map_err(|e| e.to_string())?;
        let rc = reduce(&ctx, &combo).map_err(|e| e.to_string())?;
        let lin_want = rp.scale(a).add(&rq).map_err(|e| e.to_string())?;
        lin = lin.max((rc.values() - lin_want.values()).norm() / lin_want.values().norm().max(1.0));
        degree_ok &= rp.degree_with(1e-10 * p.max_abs()).is_none_or(|d| d <= ctx.deg_n());
        for z in model.points() {
            let want = p.eval(&z).map_err(|e| e.to_string())?;
            let got = rp.eval(&z).map_err(|e| e.to_string())?;
            interp = interp.max((got - want).norm() / want.norm().max(1.0));
        }
    }
    check(
        idem < 1e-10 && lin < 1e-10 && degree_ok && interp < 1e-8,
        format!("idempotence {idem:.2e}, linearity {lin:.2e}, degree bound {degree_ok}, interpolation {interp:.2e}"),
    )
}

fn sparse_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_disp, mut worst_coeff): (f64, f64) = (0.0, 0.0);
    for i in 0..30 {
        let s = rng.random_range(1..=3);
        let terms = rng.random_range(1..=6);
        let mut exps: Vec<MultiIndex> = Vec::new();
        while exps.len() < terms {
            let a = MultiIndex::new((0..s).map(|_| rng.random_range(0..=10)).collect()).unwrap();
            if !exps.contains(&a) {
                exps.push(a);
            }
        }
        let poly = Fewnomial::new(
            s,
            exps.iter()
                .map(|a| {
                    let mag = rng.random_range(0.5..2.0);
                    let arg = rng.random_range(0.0..TAU);
                    (a.clone(), Complex64::from_polar(mag, arg))
                })
                .collect(),
        )
        .map_err(|e| e.to_string())?;
        let x = default_sampling_matrix(s, 10, 1);
        let rec = sparse_poly_solve(|z| poly.eval(z), s, &x, terms, &SolveOptions::default())
            .map_err(|e| format!("polynomial {i}: {e}"))?;
        let mut got = rec.to_fewnomial().terms;
        let mut want = poly.terms.clone();
        got.sort_by(|a, b| a.0.entries().cmp(b.0.entries()));
        want.sort_by(|a, b| a.0.entries().cmp(b.0.entries()));
        if got.len() != want.len() || got.iter().zip(&want).any(|(g, w)| g.0 != w.0) {
            return Err(format!("polynomial {i}: exponents differ: got {:?} want {:?} (deg N {}, profile {:?})", got.iter().map(|t| t.0.to_string()).collect::<Vec<_>>(), want.iter().map(|t| t.0.to_string()).collect::<Vec<_>>(), rec.diagnostics.deg_n, rec.diagnostics.hilbert.values));
        }
        worst_disp = worst_disp.max(rec.displacement);
        for (g, w) in got.iter().zip(&want) {
            worst_coeff = worst_coeff.max((g.1 - w.1).norm());
        }
    }
    check(
        worst_disp < 0.25 && worst_coeff < 1e-7,
        format!("30 exponent sets exact, max displacement {worst_disp:.2e}, max coefficient error {worst_coeff:.2e}"),
    )
}

fn main() {
    let tables = table_instances();
    let table_crit = |f: fn(&TableStats) -> Outcome| match &tables {
        Ok(st) => f(st),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "imaginary-frequency accuracy", imaginary_accuracy()),
        (2, "real-frequency accuracy", real_accuracy()),
        (3, "real-frequency breakdown handled", real_breakdown()),
        (4, "rank-stall fixture", rank_stall()),
        (5, "noise robustness", noise_robustness()),
        (6, "hilbert profile without gaps", hilbert_no_gaps()),
        (7, "multiplication-table oracle", table_crit(table_oracle)),
        (8, "eigenvalues are the points", table_crit(eigen_points)),
        (9, "reduction properties", reduction_properties()),
        (10, "sparse polynomial round trip", sparse_round_trip()),
    ];
    let mut failed = 0;
    for (id, name, outcome) in results {
        match outcome {
            Ok(msg) => println!("PASS {id:>2} {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
