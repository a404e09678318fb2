//! Exact even moments `lambda_a(k) = \int z^{2k} d mu_a` of the balanced
//! measure of `T_a(z) = 1 - a z^2`, the companion polynomials `phi_k`, and
//! the Stieltjes and Fourier transforms assembled from them.
//!
//! Invariance of the measure under `T_a` gives, for every `n >= 1`,
//!
//! ```text
//! sum_{k=0}^{n} (-1)^k C(n,k) a^k lambda(k) = lambda(n/2)  (n even)
//!                                           = 0            (n odd)
//! ```
//!
//! which determines `lambda(n)` from the lower moments. Writing everything
//! in `b = 1/a`, `a^k lambda(k)` is a polynomial (every term of
//! `lambda(k)` has degree at least `k`), so the whole table lives in `Z[b]`.

use std::io::Write;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::poly::{Poly, Var};
use crate::{Error, Real, Result};

/// `lambda_a(0..=k_max)` as integer polynomials in `b = 1/a`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    polys: Vec<Poly<BigInt>>,
}

/// Row `n` of Pascal's triangle.
fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for k in 1..=n {
        c = c * BigInt::from(n + 1 - k) / BigInt::from(k);
        row.push(c.clone());
    }
    row
}

/// Runs the moment recursion up to `k_max`.
pub fn moment_table(k_max: usize) -> MomentTable {
    let mut polys: Vec<Poly<BigInt>> = Vec::with_capacity(k_max + 1);
    polys.push(Poly::constant(BigInt::one(), Var::Beta));
    for n in 1..=k_max {
        let mut acc = if n % 2 == 0 { polys[n / 2].clone() } else { Poly::zero(Var::Beta) };
        for (k, c) in binomial_row(n).into_iter().enumerate().take(n) {
            // a^k lambda(k) = lambda(k) / b^k
            let scaled = polys[k]
                .shift_down(k)
                .expect("lambda(k) has no terms of degree below k");
            let term = scaled.scale(&c);
            acc = if k % 2 == 0 { &acc - &term } else { &acc + &term };
        }
        let mut lambda = acc.shift_up(n);
        if n % 2 == 1 {
            lambda = -&lambda;
        }
        polys.push(lambda);
    }
    MomentTable { polys }
}

impl MomentTable {
    pub fn k_max(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn polys(&self) -> &[Poly<BigInt>] {
        &self.polys
    }

    pub fn get(&self, k: usize) -> Option<&Poly<BigInt>> {
        self.polys.get(k)
    }

    fn require(&self, k: usize) -> Result<&Poly<BigInt>> {
        self.polys
            .get(k)
            .ok_or_else(|| Error::arg(format!("moment index {k} exceeds table size {}", self.k_max())))
    }

    /// `lambda_a(k)` for rational `a`, exactly.
    pub fn moment_exact(&self, alpha: &BigRational, k: usize) -> Result<BigRational> {
        if alpha.is_zero() {
            return Err(Error::arg("alpha must be nonzero"));
        }
        Ok(self.require(k)?.eval_rational(&alpha.recip()))
    }

    /// `lambda_a(k)` in floating point.
    pub fn moment<T: Real>(&self, alpha: T, k: usize) -> Result<T> {
        if alpha == T::zero() {
            return Err(Error::arg("alpha must be nonzero"));
        }
        Ok(self.require(k)?.eval_real(alpha.recip()))
    }

    /// `(k, exponent)` for every negative coefficient. Empty in every table
    /// computed so far; nonnegativity is an observation, not a theorem.
    pub fn negative_coefficients(&self) -> Vec<(usize, usize)> {
        self.polys
            .iter()
            .enumerate()
            .flat_map(|(k, p)| {
                p.coeffs()
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.is_negative())
                    .map(move |(e, _)| (k, e))
            })
            .collect()
    }

    /// `phi_k(a) = (-1)^k a^{-k} lambda_{1/a}(k)` for `k = 0..=k_max`.
    pub fn phi_table(&self) -> Result<Vec<Poly<BigInt>>> {
        self.polys
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let shifted = p.shift_down(k).ok_or_else(|| {
                    Error::Internal(format!("lambda({k}) has a term of degree below {k}"))
                })?;
                let phi = if k % 2 == 1 { -&shifted } else { shifted };
                Ok(phi.with_var(Var::Alpha))
            })
            .collect()
    }

    /// CSV with columns `k`, `coefficients` (`;`-separated integers, constant
    /// term first, in powers of `b = 1/a`) and `lambda` (exact value at `alpha`
    /// as `p/q`).
    pub fn write_csv<W: Write>(&self, alpha: &BigRational, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Internal(format!("write failed: {e}"));
        writeln!(out, "k,coefficients,lambda").map_err(io)?;
        for (k, p) in self.polys.iter().enumerate() {
            let coeffs: Vec<String> = p.coeffs().iter().map(|c| c.to_string()).collect();
            let value = self.moment_exact(alpha, k)?;
            writeln!(out, "{k},{},{value}", coeffs.join(";")).map_err(io)?;
        }
        Ok(())
    }
}

/// Shorthand for `moment_table(k_max).phi_table()`.
pub fn phi_table(k_max: usize) -> Result<Vec<Poly<BigInt>>> {
    moment_table(k_max).phi_table()
}

#[derive(Debug, Clone, PartialEq)]
pub enum IdentityVerdict {
    Pass,
    /// The identity at `n` leaves a nonzero residual (left side minus right side).
    Fail { n: usize, residual: Poly<BigInt> },
}

/// Verifies, exactly in `Z[a]`, that `sum_k C(n,k) phi_k` equals `0` for odd
/// `n` and `(-1)^{n/2} phi_{n/2} a^{n/2}` for even `n`, for all `n <= n_max`.
pub fn phi_identity_check(phis: &[Poly<BigInt>], n_max: usize) -> Result<IdentityVerdict> {
    if phis.len() <= n_max {
        return Err(Error::arg(format!(
            "phi table has {} entries, identity check up to {n_max} needs {}",
            phis.len(),
            n_max + 1
        )));
    }
    for n in 0..=n_max {
        let mut lhs = Poly::zero(Var::Alpha);
        for (k, c) in binomial_row(n).into_iter().enumerate() {
            lhs = &lhs + &phis[k].scale(&c);
        }
        let rhs = if n % 2 == 0 {
            let h = n / 2;
            let p = phis[h].shift_up(h);
            if h % 2 == 1 {
                -&p
            } else {
                p
            }
        } else {
            Poly::zero(Var::Alpha)
        };
        // n = 0 reads phi_0 = phi_0
        let residual = if n == 0 { Poly::zero(Var::Alpha) } else { &lhs - &rhs };
        if !residual.is_zero() {
            return Ok(IdentityVerdict::Fail { n, residual });
        }
    }
    Ok(IdentityVerdict::Pass)
}

/// A truncated series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue<V, T> {
    pub value: V,
    pub terms: usize,
    /// Magnitude of the last term added; the convergence proxy.
    pub last_term: T,
    pub converged: bool,
    /// Bound on the omitted tail from `|supp mu_a| <= escape_radius(a)`.
    pub tail_bound: T,
}

/// Radius beyond which orbits of `T_a` escape: the positive root of
/// `a r^2 - r - 1`. The Julia set, and hence the support of the balanced
/// measure, lies in the closed disk of this radius.
pub fn escape_radius<T: Real>(alpha: T) -> T {
    (T::one() + (T::one() + T::of(4.0) * alpha).sqrt()) / (T::of(2.0) * alpha)
}

/// `Delta_a(z) = \int d mu_a(x) / (x - z) = -(1/z) sum_k lambda_a(k) z^{-2k}`,
/// summed until a term drops below `tol` or `term_cap` terms (or the table)
/// are exhausted. Requires `|z|` beyond the escape radius.
pub fn stieltjes<T: Real>(
    table: &MomentTable,
    alpha: T,
    z: Complex<T>,
    tol: T,
    term_cap: usize,
) -> Result<SeriesValue<Complex<T>, T>> {
    if !(alpha > T::zero()) {
        return Err(Error::arg("alpha must be positive"));
    }
    if z.norm() == T::zero() {
        return Err(Error::arg("z must be nonzero"));
    }
    if !(tol > T::zero()) {
        return Err(Error::arg("tolerance must be positive"));
    }
    let radius = escape_radius(alpha);
    if !(z.norm() > radius) {
        return Err(Error::arg(format!(
            "series needs |z| > {radius} (support radius bound for alpha = {alpha}), got |z| = {}",
            z.norm()
        )));
    }
    let inv_z = z.inv();
    let w = inv_z * inv_z;
    let n_terms = term_cap.min(table.k_max() + 1);
    let mut sum = Complex::new(T::zero(), T::zero());
    let mut power = Complex::new(T::one(), T::zero());
    let mut last_term = T::infinity();
    let mut terms = 0;
    let mut converged = false;
    for k in 0..n_terms {
        let term = power * table.moment(alpha, k)?;
        sum = sum + term;
        terms = k + 1;
        last_term = (term * inv_z).norm();
        if last_term < tol {
            converged = true;
            break;
        }
        power = power * w;
    }
    let q = (radius / z.norm()).powi(2);
    let tail_bound = inv_z.norm() * q.powi(terms as i32) / (T::one() - q);
    Ok(SeriesValue { value: -(sum * inv_z), terms, last_term, converged, tail_bound })
}

/// `sum_{m > m0} y^m / m!`, bounded by a geometric majorant of the first omitted term.
fn exp_tail_bound<T: Real>(y: T, m0: usize) -> T {
    let mut first = T::one();
    for j in 1..=m0 + 1 {
        first = first * y / T::of_usize(j);
    }
    let ratio = y / T::of_usize(m0 + 2);
    if ratio < T::one() {
        first / (T::one() - ratio)
    } else {
        T::infinity()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierPair<T> {
    /// `sum_n (-1)^n lambda(n) z^{2n} / (2n)!`
    pub moment_series: SeriesValue<Complex<T>, T>,
    /// `e^{-iz} sum_n (i a)^n lambda(n) z^n / n!`
    pub shifted_series: SeriesValue<Complex<T>, T>,
    pub discrepancy: T,
}

/// Fourier transform `\int e^{-itz} d mu_a(t)` by two independent series:
/// the even-moment expansion and the expansion of `\int e^{-iz T_a(t)} d mu_a`.
/// Both are truncated after `n = n_max`.
pub fn fourier<T: Real>(table: &MomentTable, alpha: T, z: T, n_max: usize, tol: T) -> Result<FourierPair<T>> {
    if !(alpha > T::zero()) {
        return Err(Error::arg("alpha must be positive"));
    }
    if n_max > table.k_max() {
        return Err(Error::arg(format!("n_max {n_max} exceeds table size {}", table.k_max())));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let radius = escape_radius(alpha);

    let mut a_sum = zero;
    let mut coef = T::one(); // (-1)^n z^{2n} / (2n)!
    let mut a_last = T::zero();
    let mut b_sum = zero;
    let mut b_coef = Complex::new(T::one(), T::zero()); // (i a z)^n / n!
    let mut b_last = T::zero();
    let iaz = Complex::new(T::zero(), alpha * z);
    for n in 0..=n_max {
        let lambda = table.moment(alpha, n)?;
        if n > 0 {
            let two_n = T::of_usize(2 * n);
            coef = -coef * z * z / ((two_n - T::one()) * two_n);
            b_coef = b_coef * iaz / T::of_usize(n);
        }
        let ta = coef * lambda;
        a_sum = a_sum + ta;
        a_last = ta.abs();
        let tb = b_coef * lambda;
        b_sum = b_sum + tb;
        b_last = tb.norm();
    }
    let phase = Complex::new(z.cos(), -z.sin());
    let b_value = phase * b_sum;
    let moment_series = SeriesValue {
        value: a_sum,
        terms: n_max + 1,
        last_term: a_last,
        converged: a_last < tol,
        tail_bound: exp_tail_bound(radius * z.abs(), 2 * n_max),
    };
    let shifted_series = SeriesValue {
        value: b_value,
        terms: n_max + 1,
        last_term: b_last,
        converged: b_last < tol,
        tail_bound: exp_tail_bound(alpha * z.abs() * radius * radius, n_max),
    };
    Ok(FourierPair { moment_series, shifted_series, discrepancy: (a_sum - b_value).norm() })
}
