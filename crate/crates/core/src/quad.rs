//! Closed forms and regime classification for `T_a(x) = 1 - a x^2` on
//! `[-1, 1]`: the fixed point, the two-cycle, their multipliers, the
//! critical orbit and the derivative-growth statistic along the orbit of 1.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::orbit::{detect_cycle, OrbitRecord, QuadraticMap};
use crate::{Error, Real, Result};

/// `T_a(x) = 1 - a x^2`.
pub fn map<T: Real>(alpha: T, x: T) -> T {
    T::one() - alpha * x * x
}

fn require_positive<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() {
        Ok(())
    } else {
        Err(Error::arg(format!("alpha must be positive, got {alpha}")))
    }
}

/// The positive fixed point `(sqrt(1 + 4a) - 1) / (2a)`.
pub fn fixed_point<T: Real>(alpha: T) -> Result<T> {
    require_positive(alpha)?;
    let two = T::of(2.0);
    // (sqrt(1+4a) - 1)/(2a) == 2 / (sqrt(1+4a) + 1), the latter without cancellation
    Ok(two / ((T::one() + T::of(4.0) * alpha).sqrt() + T::one()))
}

/// `|T_a'(x_*)| = sqrt(1 + 4a) - 1`.
pub fn fixed_multiplier<T: Real>(alpha: T) -> Result<T> {
    require_positive(alpha)?;
    Ok((T::one() + T::of(4.0) * alpha).sqrt() - T::one())
}

/// The two-cycle `(x1, x2) = ((1 + sqrt(4a-3))/(2a), (1 - sqrt(4a-3))/(2a))`,
/// the roots of `a^2 x^2 - a x + 1 - a` (fixed points of `T_a^2` other than
/// the fixed points of `T_a`). `x1 > x_* > x2` and `T_a` swaps them.
pub fn two_cycle<T: Real>(alpha: T) -> Result<(T, T)> {
    if !(alpha > T::of(0.75)) {
        return Err(Error::NoRealCycle { alpha: alpha.to_f64_lossy() });
    }
    let s = (T::of(4.0) * alpha - T::of(3.0)).sqrt();
    let two_a = T::of(2.0) * alpha;
    Ok(((T::one() + s) / two_a, (T::one() - s) / two_a))
}

/// Multiplier of the two-cycle, `4 |1 - a|`.
pub fn cycle_multiplier<T: Real>(alpha: T) -> Result<T> {
    if !(alpha > T::of(0.75)) {
        return Err(Error::NoRealCycle { alpha: alpha.to_f64_lossy() });
    }
    Ok(T::of(4.0) * (T::one() - alpha).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    FixedPointAttracting,
    TwoCycleAttracting,
    #[serde(rename = "beyond-5/4")]
    Beyond5Over4,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::FixedPointAttracting => "fixed-point-attracting",
            Regime::TwoCycleAttracting => "two-cycle-attracting",
            Regime::Beyond5Over4 => "beyond-5/4",
        }
    }

    fn of_ordering(vs_three_quarters: Ordering, vs_five_quarters: Ordering) -> Self {
        if vs_three_quarters != Ordering::Greater {
            Regime::FixedPointAttracting
        } else if vs_five_quarters == Ordering::Less {
            Regime::TwoCycleAttracting
        } else {
            Regime::Beyond5Over4
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport<T> {
    pub alpha: T,
    pub regime: Regime,
    pub x_star: T,
    pub two_cycle: Option<(T, T)>,
    pub fixed_multiplier: T,
    pub cycle_multiplier: Option<T>,
}

/// Fixed point attracting for `a <= 3/4`, two-cycle attracting for
/// `3/4 < a < 5/4`, no claim beyond.
pub fn classify<T: Real>(alpha: T) -> Result<RegimeReport<T>> {
    if !(alpha > T::zero() && alpha < T::of(2.0)) {
        return Err(Error::arg(format!("classification requires 0 < alpha < 2, got {alpha}")));
    }
    let cmp = |b: f64| alpha.partial_cmp(&T::of(b)).expect("alpha is finite");
    let regime = Regime::of_ordering(cmp(0.75), cmp(1.25));
    let two_cycle = two_cycle(alpha).ok();
    Ok(RegimeReport {
        alpha,
        regime,
        x_star: fixed_point(alpha)?,
        two_cycle,
        fixed_multiplier: fixed_multiplier(alpha)?,
        cycle_multiplier: cycle_multiplier(alpha).ok(),
    })
}

/// Exact counterparts for rational `alpha`. Square roots are taken only when
/// the radicand is the square of a rational; boundary comparisons are done by
/// squaring, never in floating point.
pub mod exact {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn exact_isqrt(n: &BigInt) -> Option<BigInt> {
        if n.is_negative() {
            return None;
        }
        let r = n.sqrt();
        (&r * &r == *n).then_some(r)
    }

    /// Square root of a nonnegative rational if it is itself rational.
    pub fn rational_sqrt(x: &BigRational) -> Option<BigRational> {
        let p = exact_isqrt(x.numer())?;
        let d = exact_isqrt(x.denom())?;
        Some(BigRational::new(p, d))
    }

    fn require_positive(alpha: &BigRational) -> Result<()> {
        if alpha.is_positive() {
            Ok(())
        } else {
            Err(Error::arg(format!("alpha must be positive, got {alpha}")))
        }
    }

    /// Orders `sqrt(1 + 4a) - 1` against `1`; equivalent to comparing `1 + 4a` with `4`.
    pub fn fixed_multiplier_vs_one(alpha: &BigRational) -> Result<Ordering> {
        require_positive(alpha)?;
        let radicand = BigRational::one() + q(4, 1) * alpha;
        Ok(radicand.cmp(&q(4, 1)))
    }

    /// `sqrt(1 + 4a) - 1` when the square root is rational.
    pub fn fixed_multiplier(alpha: &BigRational) -> Result<Option<BigRational>> {
        require_positive(alpha)?;
        let radicand = BigRational::one() + q(4, 1) * alpha;
        Ok(rational_sqrt(&radicand).map(|s| s - BigRational::one()))
    }

    /// `(sqrt(1 + 4a) - 1) / (2a)` when the square root is rational.
    pub fn fixed_point(alpha: &BigRational) -> Result<Option<BigRational>> {
        Ok(fixed_multiplier(alpha)?.map(|m| m / (q(2, 1) * alpha)))
    }

    /// `4 |1 - a|`, always rational.
    pub fn cycle_multiplier(alpha: &BigRational) -> Result<BigRational> {
        if alpha <= &q(3, 4) {
            return Err(Error::NoRealCycle { alpha: crate::scalar::rational_to_real(alpha) });
        }
        Ok(q(4, 1) * (BigRational::one() - alpha).abs())
    }

    pub fn two_cycle(alpha: &BigRational) -> Result<Option<(BigRational, BigRational)>> {
        if alpha <= &q(3, 4) {
            return Err(Error::NoRealCycle { alpha: crate::scalar::rational_to_real(alpha) });
        }
        let radicand = q(4, 1) * alpha - q(3, 1);
        let two_a = q(2, 1) * alpha;
        Ok(rational_sqrt(&radicand).map(|s| {
            ((BigRational::one() + &s) / &two_a, (BigRational::one() - s) / &two_a)
        }))
    }

    pub fn classify(alpha: &BigRational) -> Result<Regime> {
        if !(alpha.is_positive() && alpha < &q(2, 1)) {
            return Err(Error::arg(format!("classification requires 0 < alpha < 2, got {alpha}")));
        }
        Ok(Regime::of_ordering(alpha.cmp(&q(3, 4)), alpha.cmp(&q(5, 4))))
    }

    /// `1 - a x^2` in exact arithmetic.
    pub fn map(alpha: &BigRational, x: &BigRational) -> BigRational {
        BigRational::one() - alpha * x * x
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn boundary_multipliers_are_exactly_one() {
            assert_eq!(fixed_multiplier(&q(3, 4)).unwrap(), Some(BigRational::one()));
            assert_eq!(fixed_multiplier_vs_one(&q(3, 4)).unwrap(), Ordering::Equal);
            assert_eq!(fixed_multiplier_vs_one(&q(1, 2)).unwrap(), Ordering::Less);
            assert_eq!(cycle_multiplier(&q(5, 4)).unwrap(), BigRational::one());
            assert_eq!(fixed_point(&q(3, 4)).unwrap(), Some(q(2, 3)));
            assert_eq!(fixed_point(&q(2, 1)).unwrap(), Some(q(1, 2)));
            assert_eq!(fixed_point(&q(1, 2)).unwrap(), None);
        }

        #[test]
        fn exact_two_cycle_at_one_and_three() {
            let (x1, x2) = two_cycle(&q(1, 1)).unwrap().unwrap();
            assert_eq!((x1.clone(), x2.clone()), (q(1, 1), q(0, 1)));
            assert_eq!(map(&q(1, 1), &x1), x2);
            // 4a - 3 = 9 at a = 3
            let (x1, x2) = two_cycle(&q(3, 1)).unwrap().unwrap();
            assert_eq!(map(&q(3, 1), &x1), x2);
            assert_eq!(map(&q(3, 1), &x2), x1);
            assert!(two_cycle(&q(3, 4)).is_err());
        }

        #[test]
        fn exact_regimes() {
            assert_eq!(classify(&q(3, 4)).unwrap(), Regime::FixedPointAttracting);
            assert_eq!(classify(&q(5, 4)).unwrap(), Regime::Beyond5Over4);
            assert_eq!(classify(&q(1, 1)).unwrap(), Regime::TwoCycleAttracting);
            assert!(classify(&q(2, 1)).is_err());
        }
    }
}

/// `xi_0 .. xi_n` with `xi_0 = 0` and `xi_{k+1} = 1 - a xi_k^2`.
pub fn critical_orbit<T: Real>(alpha: T, n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n + 1);
    let mut x = T::zero();
    out.push(x);
    for _ in 0..n {
        x = map(alpha, x);
        out.push(x);
    }
    out
}

/// Logarithmic derivative of `T_a^m` at 1 for `m = 1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcStatistic<T> {
    pub alpha: T,
    pub n: usize,
    /// `log_derivative[m-1] = sum_{j<m} ln |2 a x_j|`, `x_j = T_a^j(1)`.
    /// Negative infinity from the first exact zero on.
    pub log_derivative: Vec<T>,
    /// `threshold[m-1] = m^(2/3)`.
    pub threshold: Vec<T>,
    pub flags: Vec<bool>,
    /// Index `j` of the first orbit point with `x_j = 0`, if any.
    pub degenerate_at: Option<usize>,
}

impl<T: Real> BcStatistic<T> {
    pub fn all_pass(&self) -> bool {
        self.flags.iter().all(|&f| f)
    }

    /// Largest `m` whose flag is false.
    pub fn last_failure(&self) -> Option<usize> {
        self.flags.iter().rposition(|f| !f).map(|i| i + 1)
    }
}

/// Accumulates `ln |d/dx T_a^m (1)|` along the orbit of 1 by the chain rule,
/// flagging each `m` where it reaches `m^(2/3)`.
pub fn bc_statistic<T: Real>(alpha: T, n: usize) -> Result<BcStatistic<T>> {
    if n < 1 {
        return Err(Error::arg("bc statistic needs n >= 1"));
    }
    require_positive(alpha)?;
    let two_a = T::of(2.0) * alpha;
    let exponent = T::of(2.0) / T::of(3.0);
    let mut x = T::one();
    let mut acc = T::zero();
    let mut degenerate_at = None;
    let mut log_derivative = Vec::with_capacity(n);
    let mut threshold = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for m in 1..=n {
        let j = m - 1;
        if degenerate_at.is_none() && x == T::zero() {
            degenerate_at = Some(j);
        }
        if degenerate_at.is_none() {
            acc = acc + (two_a * x).abs().ln();
        } else {
            acc = T::neg_infinity();
        }
        let th = T::of_usize(m).powf(exponent);
        log_derivative.push(acc);
        threshold.push(th);
        flags.push(degenerate_at.is_none() && acc >= th);
        x = map(alpha, x);
    }
    Ok(BcStatistic { alpha, n, log_derivative, threshold, flags, degenerate_at })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum DeltaInfVerdict<T> {
    /// The critical orbit settles on an attracting cycle.
    AttractingCycleFound { period: usize, multiplier: T },
    /// The critical orbit lands on a cycle that is not attracting.
    DegenerateEventuallyPeriodic { period: usize, multiplier: T },
    /// No cycle detected up to the horizon (heuristic; not a membership proof).
    NoCycleDetected,
}

impl<T> DeltaInfVerdict<T> {
    pub fn period(&self) -> Option<usize> {
        match self {
            Self::AttractingCycleFound { period, .. } | Self::DegenerateEventuallyPeriodic { period, .. } => {
                Some(*period)
            }
            Self::NoCycleDetected => None,
        }
    }
}

/// Tail length handed to the cycle detector.
const PROBE_TAIL: usize = 1024;

/// Heuristic search for an attracting cycle: follows the critical orbit for
/// `horizon` steps and looks for a cycle in its tail. Any attracting cycle
/// attracts the critical point, so the absence of one up to the horizon is
/// weak evidence of no attracting orbit.
pub fn delta_inf_probe<T: Real>(alpha: T, horizon: usize, tol: T) -> Result<DeltaInfVerdict<T>> {
    if horizon < 1000 {
        return Err(Error::arg("horizon must be at least 1000"));
    }
    let orbit = critical_orbit(alpha, horizon);
    let start = orbit.len().saturating_sub(PROBE_TAIL);
    let record = OrbitRecord::from_states(orbit[start..].to_vec());
    let sys = QuadraticMap::new(alpha);
    let Some(cycle) = detect_cycle(&sys, &record, tol)? else {
        return Ok(DeltaInfVerdict::NoCycleDetected);
    };
    let two_a = T::of(2.0) * alpha;
    let multiplier = cycle.points.iter().fold(T::one(), |acc, &x| acc * (two_a * x).abs());
    Ok(if multiplier < T::one() {
        DeltaInfVerdict::AttractingCycleFound { period: cycle.period, multiplier }
    } else {
        DeltaInfVerdict::DegenerateEventuallyPeriodic { period: cycle.period, multiplier }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_values() {
        assert!((fixed_point(0.5f64).unwrap() - 0.7320508075688772).abs() < 1e-15);
        assert_eq!(fixed_point(2.0f64).unwrap(), 0.5);
        assert!((fixed_point(0.75f64).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(fixed_point(0.0f64).is_err());
        assert!(fixed_point(-1.0f64).is_err());
    }

    #[test]
    fn multipliers() {
        assert_eq!(fixed_multiplier(0.75f64).unwrap(), 1.0);
        assert_eq!(fixed_multiplier(2.0f64).unwrap(), 2.0);
        assert!(fixed_multiplier(1e-12f64).unwrap() < 1e-11);
        assert_eq!(cycle_multiplier(1.0f64).unwrap(), 0.0);
        assert_eq!(cycle_multiplier(1.25f64).unwrap(), 1.0);
        assert!((cycle_multiplier(0.8f64).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(cycle_multiplier(0.75f64), Err(Error::NoRealCycle { .. })));
    }

    #[test]
    fn two_cycle_values() {
        assert_eq!(two_cycle(1.0f64).unwrap(), (1.0, 0.0));
        let (x1, x2) = two_cycle(2.0f64).unwrap();
        assert!((x1 - (1.0 + 5f64.sqrt()) / 4.0).abs() < 1e-15);
        assert!((x2 - (1.0 - 5f64.sqrt()) / 4.0).abs() < 1e-15);
        assert!((map(2.0, x1) - x2).abs() < 1e-13 && (map(2.0, x2) - x1).abs() < 1e-13);
        assert!(two_cycle(0.75f64).is_err());
    }

    #[test]
    fn two_cycle_near_boundary_merges_with_fixed_point() {
        let a = 0.75f64 + 1e-14;
        let (x1, x2) = two_cycle(a).unwrap();
        assert!((x1 - 2.0 / 3.0).abs() < 1e-6);
        assert!((x2 - 2.0 / 3.0).abs() < 1e-6);
        let x_star = fixed_point(1.1f64).unwrap();
        let (x1, x2) = two_cycle(1.1f64).unwrap();
        assert!(x1 > x_star && x_star > x2);
    }

    #[test]
    fn classify_regimes() {
        let r = classify(0.5f64).unwrap();
        assert_eq!(r.regime, Regime::FixedPointAttracting);
        assert!((r.x_star - 0.7320508).abs() < 1e-7);
        assert_eq!(r.two_cycle, None);
        let r = classify(1.0f64).unwrap();
        assert_eq!(r.regime, Regime::TwoCycleAttracting);
        assert_eq!(r.two_cycle, Some((1.0, 0.0)));
        assert_eq!(classify(1.9f64).unwrap().regime, Regime::Beyond5Over4);
        assert_eq!(classify(0.75f64).unwrap().regime, Regime::FixedPointAttracting);
        assert_eq!(classify(1.25f64).unwrap().regime, Regime::Beyond5Over4);
        assert!(classify(2.0f64).is_err());
        assert!(classify(0.0f64).is_err());
    }

    #[test]
    fn critical_orbits() {
        assert_eq!(critical_orbit(2.0f64, 4), vec![0.0, 1.0, -1.0, -1.0, -1.0]);
        assert_eq!(critical_orbit(1.0f64, 4), vec![0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(critical_orbit(0.37f64, 1), vec![0.0, 1.0]);
    }

    #[test]
    fn bc_at_two_grows_like_ln4() {
        let s = bc_statistic(2.0f64, 5).unwrap();
        for (m, v) in s.log_derivative.iter().enumerate() {
            assert!((v - (m + 1) as f64 * 4f64.ln()).abs() < 1e-12);
        }
        assert!(s.all_pass());
        assert_eq!(s.degenerate_at, None);
    }

    #[test]
    fn bc_at_one_is_degenerate() {
        let s = bc_statistic(1.0f64, 3).unwrap();
        assert_eq!(s.degenerate_at, Some(1));
        assert!(s.flags.iter().all(|f| !f));
        assert_eq!(s.log_derivative[1], f64::NEG_INFINITY);
    }

    #[test]
    fn bc_at_half_eventually_fails() {
        let s = bc_statistic(0.5f64, 50).unwrap();
        assert!(!s.flags[49]);
        assert_eq!(s.last_failure(), Some(50));
        // the increments converge to ln(sqrt 3 - 1) < 0
        let inc = s.log_derivative[49] - s.log_derivative[48];
        assert!((inc - (3f64.sqrt() - 1.0).ln()).abs() < 1e-6);
    }

    #[test]
    fn probe_verdicts() {
        assert_eq!(delta_inf_probe(1.0f64, 2000, 1e-9).unwrap().period(), Some(2));
        assert!(matches!(
            delta_inf_probe(1.0f64, 2000, 1e-9).unwrap(),
            DeltaInfVerdict::AttractingCycleFound { period: 2, .. }
        ));
        assert!(matches!(
            delta_inf_probe(0.5f64, 2000, 1e-9).unwrap(),
            DeltaInfVerdict::AttractingCycleFound { period: 1, .. }
        ));
        assert!(matches!(
            delta_inf_probe(2.0f64, 2000, 1e-9).unwrap(),
            DeltaInfVerdict::DegenerateEventuallyPeriodic { period: 1, .. }
        ));
        assert!(delta_inf_probe(1.0f64, 999, 1e-9).is_err());
    }
}
