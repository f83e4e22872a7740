use mprony::linalg::CMat;
use mprony::mindex::MultiIndex;
use mprony::recover::sparse::{default_sampling_matrix, sparse_poly_solve, Fewnomial};
use mprony::recover::SolveOptions;
use mprony::{ErrorClass, PronyError};
use num_complex::Complex64;

fn diag(s: usize, v: Complex64) -> CMat {
    CMat::identity(s, s) * v
}

fn sorted(p: &Fewnomial) -> Vec<(Vec<u32>, Complex64)> {
    let mut t: Vec<_> = p.terms.iter().map(|(a, c)| (a.entries().to_vec(), *c)).collect();
    t.sort_by(|a, b| a.0.cmp(&b.0));
    t
}

#[test]
fn two_term_fewnomial_with_imaginary_x() {
    let p = Fewnomial::parse(2, "3*z1^2*z2 + z2^5").unwrap();
    let x = diag(2, Complex64::new(0.0, 0.1));
    let r = sparse_poly_solve(|z| p.eval(z), 2, &x, 2, &SolveOptions::default()).unwrap();
    let got = sorted(&r.to_fewnomial());
    assert_eq!(got.iter().map(|t| t.0.clone()).collect::<Vec<_>>(), vec![vec![0, 5], vec![2, 1]]);
    assert!((got[0].1 - Complex64::new(1.0, 0.0)).norm() < 1e-8);
    assert!((got[1].1 - Complex64::new(3.0, 0.0)).norm() < 1e-8);
}

#[test]
fn real_and_imaginary_x_recover_the_same_exponents() {
    let p = Fewnomial::parse(2, "3*z1^2*z2 + z2^5").unwrap();
    let imag = sparse_poly_solve(|z| p.eval(z), 2, &diag(2, Complex64::new(0.0, 0.1)), 2, &SolveOptions::default()).unwrap();
    let real = sparse_poly_solve(|z| p.eval(z), 2, &diag(2, Complex64::new(0.1, 0.0)), 2, &SolveOptions::default()).unwrap();
    let a: Vec<_> = sorted(&imag.to_fewnomial()).into_iter().map(|t| t.0).collect();
    let b: Vec<_> = sorted(&real.to_fewnomial()).into_iter().map(|t| t.0).collect();
    assert_eq!(a, b);
    assert!(real.displacement < 0.25 && imag.displacement < 0.25);
}

#[test]
fn growing_real_x_rounds_worse() {
    // e^{10γ_2} dwarfs the other term well before |γ| = 4
    let p = Fewnomial::parse(2, "3*z1^2*z2 + z2^5").unwrap();
    let real = sparse_poly_solve(|z| p.eval(z), 2, &diag(2, Complex64::new(2.0, 0.0)), 2, &SolveOptions::default()).unwrap();
    let imag = sparse_poly_solve(|z| p.eval(z), 2, &diag(2, Complex64::new(0.0, 0.5)), 2, &SolveOptions::default()).unwrap();
    assert!(imag.displacement < 1e-8);
    assert!(real.displacement > 100.0 * imag.displacement);
}

#[test]
fn identity_scale_and_default_agree() {
    let p = Fewnomial::parse(3, "z1^4*z3 - 2*z2^3 + 0.5*z1*z2*z3").unwrap();
    let default = sparse_poly_solve(|z| p.eval(z), 3, &default_sampling_matrix(3, p.max_exponent(), 1), 3, &SolveOptions::default()).unwrap();
    let ident = sparse_poly_solve(|z| p.eval(z), 3, &diag(3, Complex64::new(0.0, 0.5)), 3, &SolveOptions::default()).unwrap();
    let a: Vec<_> = sorted(&default.to_fewnomial()).into_iter().map(|t| t.0).collect();
    let b: Vec<_> = sorted(&ident.to_fewnomial()).into_iter().map(|t| t.0).collect();
    assert_eq!(a, b);
    assert_eq!(a, vec![vec![0, 3, 0], vec![1, 1, 1], vec![4, 0, 1]]);
}

#[test]
fn aliased_exponents_are_flagged() {
    // period 2π/0.7 ≈ 9 exponents: z1^20 cannot be told apart reliably from its neighbours
    let p = Fewnomial::new(1, vec![(MultiIndex::new(vec![20]).unwrap(), Complex64::new(1.0, 0.0))]).unwrap();
    let x = diag(1, Complex64::new(0.37, 0.7));
    match sparse_poly_solve(|z| p.eval(z), 1, &x, 1, &SolveOptions::default()) {
        Ok(r) => assert_eq!(r.exponents[0].entries(), &[20]),
        Err(e) => assert_eq!(e.class(), ErrorClass::Rounding),
    }
}

#[test]
fn rounding_error_has_its_own_class() {
    assert_eq!(PronyError::RoundingUnreliable(0.4).class(), ErrorClass::Rounding);
}
