use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use qdyn::moments::{self, moment_table, phi_identity_check, IdentityVerdict};

fn q(p: i64, r: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(r))
}

/// `(2k-1)!! / (2k)!!` by direct products.
fn double_factorial_ratio(k: usize) -> BigRational {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 1..=k {
        num *= BigInt::from(2 * j - 1);
        den *= BigInt::from(2 * j);
    }
    BigRational::new(num, den)
}

/// Gauss-Chebyshev rule for the arcsine law on [-1, 1].
fn arcsine_quadrature<F: Fn(f64) -> Complex<f64>>(f: F, nodes: usize) -> Complex<f64> {
    let n = nodes as f64;
    (1..=nodes)
        .map(|j| f(((2 * j - 1) as f64 * std::f64::consts::PI / (2.0 * n)).cos()))
        .sum::<Complex<f64>>()
        / n
}

fn binomial(n: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

#[test]
fn chebyshev_moments_to_fifty() {
    let table = moment_table(50);
    let two = q(2, 1);
    for k in 0..=50 {
        assert_eq!(table.moment_exact(&two, k).unwrap(), double_factorial_ratio(k), "k = {k}");
    }
}

#[test]
fn phi_polynomials_are_integral_to_fifty() {
    let phis = moments::phi_table(50).unwrap();
    assert_eq!(phis.len(), 51);
    let expected: [&[i64]; 6] = [&[1], &[-1], &[1, 1], &[-1, -3], &[1, 6, 1, 1], &[-1, -10, -5, -5]];
    for (k, e) in expected.iter().enumerate() {
        let e: Vec<BigInt> = e.iter().map(|&c| BigInt::from(c)).collect();
        assert_eq!(phis[k].coeffs(), &e[..], "phi_{k}");
    }
}

#[test]
fn phi_identity_to_forty() {
    let phis = moments::phi_table(40).unwrap();
    assert_eq!(phi_identity_check(&phis, 40).unwrap(), IdentityVerdict::Pass);
}

#[test]
fn lambda_coefficients_are_nonnegative() {
    let table = moment_table(50);
    assert!(table.negative_coefficients().is_empty());
    for p in table.polys() {
        assert!(p.coeffs().iter().all(|c| !c.is_negative()));
    }
}

#[test]
fn stieltjes_matches_closed_form_at_two() {
    let table = moment_table(200);
    for z in [1.5f64, 2.0, 3.0, 10.0] {
        for s in [1.0, -1.0] {
            let z = s * z;
            let closed = -z.signum() / (z * z - 1.0).sqrt();
            let quad = arcsine_quadrature(|x| Complex::new(1.0 / (x - z), 0.0), 4000);
            let v = moments::stieltjes(&table, 2.0, Complex::new(z, 0.0), 1e-15, 1000).unwrap();
            assert!(v.converged);
            assert!((v.value.re - closed).abs() < 1e-10, "z = {z}: {} vs {closed}", v.value.re);
            assert!((quad.re - closed).abs() < 1e-10);
            assert!(v.value.im.abs() < 1e-15);
        }
    }
}

#[test]
fn stieltjes_off_axis_matches_quadrature() {
    let table = moment_table(200);
    for z in [Complex::new(0.5, 1.2), Complex::new(-1.1, 0.3), Complex::new(0.0, -2.0)] {
        let quad = arcsine_quadrature(|x| (Complex::new(x, 0.0) - z).inv(), 20_000);
        let v = moments::stieltjes(&table, 2.0, z, 1e-15, 1000).unwrap();
        assert!((v.value - quad).norm() < 1e-9, "{z}: {} vs {quad}", v.value);
    }
}

#[test]
fn stieltjes_rejects_points_inside_the_escape_disk() {
    let table = moment_table(20);
    assert!(moments::stieltjes(&table, 2.0, Complex::new(0.9, 0.0), 1e-12, 100).is_err());
    let r = moments::escape_radius(1.0f64);
    assert!((r - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
}

#[test]
fn fourier_series_agree() {
    let table = moment_table(30);
    for alpha in [1.0f64, 1.5, 2.0] {
        for z in [0.5, 1.0, 2.0] {
            let p = moments::fourier(&table, alpha, z, 30, 1e-12).unwrap();
            let bound = p.moment_series.tail_bound + p.shifted_series.tail_bound;
            assert!(p.discrepancy <= bound.max(1e-8), "alpha {alpha}, z {z}: {} > {bound}", p.discrepancy);
            assert!(p.discrepancy < 1e-8);
        }
    }
}

#[test]
fn fourier_matches_quadrature_at_two() {
    let table = moment_table(30);
    for z in [0.5, 1.0, 2.0] {
        let oracle = arcsine_quadrature(|x| Complex::new((z * x).cos(), -(z * x).sin()), 200);
        let p = moments::fourier(&table, 2.0, z, 30, 1e-12).unwrap();
        assert!((p.moment_series.value - oracle).norm() < 1e-6);
        assert!((p.shifted_series.value - oracle).norm() < 1e-6);
    }
    let p = moments::fourier(&table, 2.0, 1.0, 30, 1e-12).unwrap();
    // J_0(1)
    assert!((p.moment_series.value.re - 0.765_197_686_557_966_6).abs() < 1e-12);
}

#[test]
fn moment_csv_layout() {
    let table = moment_table(3);
    let mut out = Vec::new();
    table.write_csv(&q(2, 1), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text, "k,coefficients,lambda\n0,1,1\n1,0;1,1/2\n2,0;0;1;1,3/8\n3,0;0;0;1;3,5/16\n");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The defining recursion, evaluated at a rational point.
    #[test]
    fn values_satisfy_the_recursion(p in 1i64..400, r in 1i64..200, n in 0usize..14) {
        let alpha = q(p, r);
        let table = moment_table(n);
        let mut lhs = BigRational::zero();
        let mut a_pow = BigRational::one();
        for k in 0..=n {
            let term = BigRational::from_integer(binomial(n, k)) * &a_pow * table.moment_exact(&alpha, k).unwrap();
            if k % 2 == 0 { lhs += term } else { lhs -= term }
            a_pow *= &alpha;
        }
        let rhs = if n % 2 == 0 { table.moment_exact(&alpha, n / 2).unwrap() } else { BigRational::zero() };
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn float_moments_track_exact(p in 1i64..200, k in 0usize..12) {
        let alpha = q(p, 100);
        let table = moment_table(12);
        let exact = qdyn::scalar::rational_to_real::<f64>(&table.moment_exact(&alpha, k).unwrap());
        let float = table.moment(p as f64 / 100.0, k).unwrap();
        prop_assert!((exact - float).abs() <= 1e-12 * exact.abs().max(1.0));
    }
}
