//! Monte-Carlo sampling of the balanced measure by random inverse iteration,
//! empirical diagnostics on the resulting clouds, and the certificate that
//! the Julia set of `T_a` is not contained in the real line.

use std::io::Write;

use num_complex::Complex;
use num_traits::Num;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{quad, Error, Real, Result};

/// Generator used for every cloud; recorded in the cloud metadata.
pub const GENERATOR: &str = "ChaCha8Rng";

pub const DEFAULT_BURN_IN: usize = 100;

/// Chain of points produced by inverse iteration. Each point is a preimage of
/// its predecessor under `T_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud<T> {
    pub points: Vec<Complex<T>>,
    pub alpha: T,
    pub seed: u64,
    pub burn_in: usize,
    pub generator: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloudMetadata {
    pub alpha: f64,
    pub seed: u64,
    pub burn_in: usize,
    pub count: usize,
    pub generator: String,
}

impl<T: Real> SampleCloud<T> {
    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn metadata(&self) -> CloudMetadata {
        CloudMetadata {
            alpha: self.alpha.to_f64_lossy(),
            seed: self.seed,
            burn_in: self.burn_in,
            count: self.points.len(),
            generator: self.generator.to_string(),
        }
    }

    /// CSV with columns `re,im`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Internal(format!("write failed: {e}"));
        writeln!(out, "re,im").map_err(io)?;
        for z in &self.points {
            writeln!(out, "{:.16e},{:.16e}", z.re.to_f64_lossy(), z.im.to_f64_lossy()).map_err(io)?;
        }
        Ok(())
    }

    /// Largest `|T_a(z_{n+1}) - z_n|` over consecutive pairs.
    pub fn chain_defect(&self) -> T {
        self.points
            .windows(2)
            .map(|w| (forward(self.alpha, w[1]) - w[0]).norm())
            .fold(T::zero(), T::max)
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.points.is_empty() {
            Err(Error::arg("sample cloud is empty"))
        } else {
            Ok(())
        }
    }
}

fn forward<T: Real>(alpha: T, z: Complex<T>) -> Complex<T> {
    Complex::new(T::one(), T::zero()) - z * z * alpha
}

/// `V_(+/-)(z) = +/- sqrt((1 - z) / a)` with the principal square root.
pub fn inverse_branch<T: Real>(alpha: T, z: Complex<T>, positive: bool) -> Complex<T> {
    let w = ((Complex::new(T::one(), T::zero()) - z) / alpha).sqrt();
    if positive {
        w
    } else {
        -w
    }
}

/// Inverse iteration from the fixed point with a fair seeded coin choosing
/// the branch. The first `burn_in` points are discarded.
pub fn sample<T: Real>(alpha: T, count: usize, burn_in: usize, seed: u64) -> Result<SampleCloud<T>> {
    if count < 1 {
        return Err(Error::arg("count must be at least 1"));
    }
    if !(alpha > T::zero() && alpha <= T::of(2.0)) {
        return Err(Error::arg(format!("sampling requires 0 < alpha <= 2, got {alpha}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Complex::new(quad::fixed_point(alpha)?, T::zero());
    for _ in 0..burn_in {
        z = inverse_branch(alpha, z, rng.gen());
    }
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        z = inverse_branch(alpha, z, rng.gen());
        points.push(z);
    }
    Ok(SampleCloud { points, alpha, seed, burn_in, generator: GENERATOR })
}

/// Sample averages of `z^m` for `m = 0..=2 k_max + 1`.
pub fn empirical_moments<T: Real>(cloud: &SampleCloud<T>, k_max: usize) -> Result<Vec<Complex<T>>> {
    cloud.require_nonempty()?;
    let top = 2 * k_max + 1;
    let mut sums = vec![Complex::new(T::zero(), T::zero()); top + 1];
    for &z in &cloud.points {
        let mut p = Complex::new(T::one(), T::zero());
        for s in sums.iter_mut() {
            *s = *s + p;
            p = p * z;
        }
    }
    let n = T::of_usize(cloud.count());
    Ok(sums.into_iter().map(|s| s / n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Check<T> {
    Pass { value: T },
    Fail { value: T },
}

impl<T: Copy> Check<T> {
    fn judge(value: T, ok: bool) -> Self {
        if ok {
            Check::Pass { value }
        } else {
            Check::Fail { value }
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self, Check::Pass { .. })
    }

    pub fn value(&self) -> T {
        match self {
            Check::Pass { value } | Check::Fail { value } => *value,
        }
    }
}

/// `|mean of z phi(T_a z)| <= tol`; the balanced measure annihilates every
/// such function.
pub fn balance_check<T, F>(cloud: &SampleCloud<T>, phi: F, tol: T) -> Result<Check<T>>
where
    T: Real,
    F: Fn(Complex<T>) -> Complex<T>,
{
    cloud.require_nonempty()?;
    let sum = cloud
        .points
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &z| acc + z * phi(forward(cloud.alpha, z)));
    let value = (sum / T::of_usize(cloud.count())).norm();
    Ok(Check::judge(value, value <= tol))
}

/// Two-sample Kolmogorov distance between the empirical distributions of `a` and `b`.
pub fn ks_two_sample<T: Real>(a: &[T], b: &[T]) -> T {
    if a.is_empty() || b.is_empty() {
        return T::one();
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    let (na, nb) = (T::of_usize(a.len()), T::of_usize(b.len()));
    let (mut i, mut j) = (0, 0);
    let mut best = T::zero();
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((T::of_usize(i) / na - T::of_usize(j) / nb).abs());
    }
    best
}

/// One-sample Kolmogorov distance between `samples` and the continuous CDF `cdf`.
pub fn ks_distance<T: Real, F: Fn(T) -> T>(samples: &[T], cdf: F) -> T {
    let mut xs = samples.to_vec();
    xs.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    let n = T::of_usize(xs.len());
    xs.iter().enumerate().fold(T::zero(), |best, (i, &x)| {
        let f = cdf(x);
        let lo = (f - T::of_usize(i) / n).abs();
        let hi = (T::of_usize(i + 1) / n - f).abs();
        best.max(lo).max(hi)
    })
}

/// Arcsine distribution function `1/2 + arcsin(t)/pi` on `[-1, 1]`.
pub fn arcsine_cdf<T: Real>(t: T) -> T {
    let t = t.max(-T::one()).min(T::one());
    T::of(0.5) + t.asin() / T::PI()
}

/// Kolmogorov distance between the real parts of `z` and of `-z`, and
/// likewise for imaginary parts; the larger of the two is compared to `tol`.
pub fn symmetry_check<T: Real>(cloud: &SampleCloud<T>, tol: T) -> Result<Check<T>> {
    cloud.require_nonempty()?;
    let re: Vec<T> = cloud.points.iter().map(|z| z.re).collect();
    let im: Vec<T> = cloud.points.iter().map(|z| z.im).collect();
    let neg = |v: &[T]| v.iter().map(|x| -*x).collect::<Vec<T>>();
    let d = ks_two_sample(&re, &neg(&re)).max(ks_two_sample(&im, &neg(&im)));
    Ok(Check::judge(d, d <= tol))
}

/// Largest modulus in the cloud.
pub fn support_bound<T: Real>(cloud: &SampleCloud<T>) -> Result<T> {
    cloud.require_nonempty()?;
    Ok(cloud.points.iter().map(|z| z.norm()).fold(T::zero(), T::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RealnessVerdict {
    /// A real Julia set would force `b_m > 0`, contradicted at the failure index.
    Refuted,
    /// The chain stopped decreasing; it never produces a contradiction.
    FixedChain,
    InconclusiveAtCap,
}

/// The chain `b_0 = a - 1`, `b_{n+1} = a b_n^2 - 1`. If `J(T_a)` were real it
/// would lie in `[-b_n, b_n]` with every `b_n > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealnessCertificate<S> {
    pub alpha: S,
    pub chain: Vec<S>,
    pub failure_index: Option<usize>,
    pub verdict: RealnessVerdict,
    pub notes: Vec<String>,
}

/// Iterates the `b` chain until it becomes nonpositive (refuted), stops
/// decreasing (fixed chain), or `cap` steps pass. Works for any ordered
/// field, in particular `f64` and exact rationals.
pub fn realness_certificate<S>(alpha: S, cap: usize) -> Result<RealnessCertificate<S>>
where
    S: Num + PartialOrd + Clone,
{
    if cap < 1 {
        return Err(Error::arg("cap must be at least 1"));
    }
    let one = S::one();
    let two = one.clone() + one.clone();
    if !(alpha > S::zero() && alpha <= two) {
        return Err(Error::arg("realness certificate requires 0 < alpha <= 2"));
    }
    let mut notes = vec![
        "b_1 > 0 is equivalent to a(a-1)^2 > 1, whose root is 1.75488 (often quoted as 7/4)".to_string(),
        "b_2 > 0 holds only above 1.94080 (often quoted as 15/8)".to_string(),
    ];
    let mut chain = vec![alpha.clone() - one.clone()];
    let verdict;
    let mut failure_index = None;
    loop {
        let n = chain.len() - 1;
        let b = chain[n].clone();
        if b <= S::zero() {
            failure_index = Some(n);
            verdict = RealnessVerdict::Refuted;
            if n == 0 {
                notes.push("a <= 1: a real Julia set would already need a > 1".to_string());
            }
            break;
        }
        if n >= cap {
            verdict = RealnessVerdict::InconclusiveAtCap;
            break;
        }
        let next = alpha.clone() * b.clone() * b.clone() - one.clone();
        let stalled = next >= b;
        chain.push(next);
        if stalled {
            verdict = RealnessVerdict::FixedChain;
            break;
        }
    }
    Ok(RealnessCertificate { alpha, chain, failure_index, verdict, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn single_point_cloud_is_first_branch() {
        let cloud = sample(0.8f64, 1, 0, 42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s: bool = rng.gen();
        let x = quad::fixed_point(0.8f64).unwrap();
        assert_eq!(cloud.points, vec![inverse_branch(0.8, Complex::new(x, 0.0), s)]);
        assert_eq!(cloud.generator, GENERATOR);
    }

    #[test]
    fn clouds_are_deterministic_and_consistent() {
        let a = sample(1.3f64, 2000, 100, 7).unwrap();
        let b = sample(1.3f64, 2000, 100, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.chain_defect() < 1e-9);
        assert_ne!(a.points, sample(1.3f64, 2000, 100, 8).unwrap().points);
    }

    #[test]
    fn argument_errors() {
        assert!(sample(1.0f64, 0, 10, 1).is_err());
        assert!(sample(2.5f64, 10, 10, 1).is_err());
        let empty = SampleCloud::<f64> { points: vec![], alpha: 1.0, seed: 0, burn_in: 0, generator: GENERATOR };
        assert!(empirical_moments(&empty, 2).is_err());
        assert!(support_bound(&empty).is_err());
    }

    #[test]
    fn zeroth_moment_is_one() {
        let cloud = sample(1.7f64, 1000, 50, 3).unwrap();
        assert_eq!(empirical_moments(&cloud, 0).unwrap()[0], Complex::new(1.0, 0.0));
    }

    #[test]
    fn fixed_point_cloud_is_unbalanced() {
        let x = quad::fixed_point(1.0f64).unwrap();
        let cloud = SampleCloud { points: vec![Complex::new(x, 0.0)], alpha: 1.0, seed: 0, burn_in: 0, generator: GENERATOR };
        let c = balance_check(&cloud, |_| Complex::new(1.0, 0.0), 0.1).unwrap();
        assert!(!c.passed());
        assert!((c.value() - x).abs() < 1e-15);
        assert_eq!(support_bound(&cloud).unwrap(), x);
    }

    #[test]
    fn shifted_cloud_is_asymmetric() {
        let mut cloud = sample(2.0f64, 5000, 100, 11).unwrap();
        assert!(symmetry_check(&cloud, 0.05).unwrap().passed());
        for z in cloud.points.iter_mut() {
            *z += Complex::new(1.0, 0.0);
        }
        assert!(!symmetry_check(&cloud, 0.05).unwrap().passed());
    }

    #[test]
    fn ks_helpers() {
        assert_eq!(ks_two_sample(&[1.0f64, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[0.0f64], &[1.0]), 1.0);
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_distance(&xs, |t| t) <= 0.0005 + 1e-12);
        assert_eq!(arcsine_cdf(0.0f64), 0.5);
        assert_eq!(arcsine_cdf(1.0f64), 1.0);
    }

    #[test]
    fn certificate_examples() {
        let c = realness_certificate(1.9f64, 100).unwrap();
        assert_eq!(c.verdict, RealnessVerdict::Refuted);
        assert_eq!(c.failure_index, Some(2));
        assert!((c.chain[1] - 0.539).abs() < 1e-12);
        assert!((c.chain[2] + 0.4480101).abs() < 1e-7);

        let c = realness_certificate(2.0f64, 100).unwrap();
        assert_eq!(c.verdict, RealnessVerdict::FixedChain);
        assert_eq!(c.chain, vec![1.0, 1.0]);

        let c = realness_certificate(0.5f64, 100).unwrap();
        assert_eq!((c.verdict, c.failure_index), (RealnessVerdict::Refuted, Some(0)));

        let c = realness_certificate(1.999f64, 3).unwrap();
        assert_eq!(c.verdict, RealnessVerdict::InconclusiveAtCap);
        assert!(realness_certificate(2.1f64, 10).is_err());
        assert!(realness_certificate(0.0f64, 10).is_err());
    }

    #[test]
    fn exact_certificate_matches_float() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let exact = realness_certificate(q(19, 10), 100).unwrap();
        assert_eq!(exact.failure_index, Some(2));
        assert_eq!(exact.chain[1], q(539, 1000));
        let exact = realness_certificate(q(2, 1), 100).unwrap();
        assert_eq!(exact.verdict, RealnessVerdict::FixedChain);
    }
}
