//! Dense univariate polynomials over an exact coefficient ring.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::Real;

/// Name of the indeterminate. Moment polynomials are written in `beta = 1/alpha`,
/// the derived polynomials in `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    Beta,
    Alpha,
}

impl Var {
    pub fn symbol(self) -> &'static str {
        match self {
            Var::Beta => "b",
            Var::Alpha => "a",
        }
    }
}

/// `coeffs[i]` is the coefficient of `x^i`. Trailing zeros are always trimmed,
/// so the zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Poly<C> {
    coeffs: Vec<C>,
    var: Var,
}

impl<C: Clone + Zero> Poly<C> {
    pub fn new(mut coeffs: Vec<C>, var: Var) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs, var }
    }

    pub fn zero(var: Var) -> Self {
        Self { coeffs: Vec::new(), var }
    }

    pub fn constant(c: C, var: Var) -> Self {
        Self::new(vec![c], var)
    }

    /// `c x^k`
    pub fn monomial(c: C, k: usize, var: Var) -> Self {
        let mut coeffs = vec![C::zero(); k + 1];
        coeffs[k] = c;
        Self::new(coeffs, var)
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn with_var(mut self, var: Var) -> Self {
        self.var = var;
        self
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> C {
        self.coeffs.get(i).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Exponent of the lowest nonzero term.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Multiplies by `x^k`.
    pub fn shift_up(&self, k: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![C::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs, var: self.var }
    }

    /// Divides by `x^k`, or `None` if some term has exponent below `k`.
    pub fn shift_down(&self, k: usize) -> Option<Self> {
        if self.coeffs.iter().take(k).any(|c| !c.is_zero()) {
            return None;
        }
        Some(Self { coeffs: self.coeffs.iter().skip(k).cloned().collect(), var: self.var })
    }

    pub fn scale(&self, c: &C) -> Self
    where
        C: Mul<Output = C>,
    {
        Self::new(self.coeffs.iter().map(|x| x.clone() * c.clone()).collect(), self.var)
    }

    pub fn map_coeffs<D: Clone + Zero>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        Poly::new(self.coeffs.iter().map(f).collect(), self.var)
    }
}

impl<C> Poly<C>
where
    C: Clone + Zero + Mul<Output = C>,
{
    /// Horner evaluation in the coefficient ring.
    pub fn eval(&self, x: &C) -> C {
        self.coeffs.iter().rev().fold(C::zero(), |acc, c| acc * x.clone() + c.clone())
    }
}

impl Poly<BigInt> {
    pub fn to_rational(&self) -> Poly<BigRational> {
        self.map_coeffs(|c| BigRational::from_integer(c.clone()))
    }

    /// Exact value at a rational point.
    pub fn eval_rational(&self, x: &BigRational) -> BigRational {
        self.to_rational().eval(x)
    }

    /// Floating point Horner evaluation; coefficients are rounded to `f64` first.
    pub fn eval_real<T: Real>(&self, x: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x + T::of(c.to_f64().unwrap_or(f64::INFINITY)))
    }
}

impl Poly<BigRational> {
    pub fn eval_real<T: Real>(&self, x: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x + crate::scalar::rational_to_real::<T>(c))
    }

    /// The integer polynomial with the same coefficients, if all are integers.
    pub fn to_integer(&self) -> Option<Poly<BigInt>> {
        if self.coeffs.iter().all(|c| c.is_integer()) {
            Some(self.map_coeffs(|c| c.to_integer()))
        } else {
            None
        }
    }
}

fn zip_with<C: Clone + Zero>(a: &Poly<C>, b: &Poly<C>, f: impl Fn(&C, &C) -> C) -> Poly<C> {
    debug_assert_eq!(a.var, b.var, "mixing polynomials in different indeterminates");
    let n = a.coeffs.len().max(b.coeffs.len());
    let zero = C::zero();
    let coeffs = (0..n)
        .map(|i| f(a.coeffs.get(i).unwrap_or(&zero), b.coeffs.get(i).unwrap_or(&zero)))
        .collect();
    Poly::new(coeffs, a.var)
}

impl<'a, C> Add<&'a Poly<C>> for &'a Poly<C>
where
    C: Clone + Zero,
{
    type Output = Poly<C>;
    fn add(self, rhs: &'a Poly<C>) -> Poly<C> {
        zip_with(self, rhs, |x, y| x.clone() + y.clone())
    }
}

impl<'a, C> Sub<&'a Poly<C>> for &'a Poly<C>
where
    C: Clone + Zero + Sub<Output = C>,
{
    type Output = Poly<C>;
    fn sub(self, rhs: &'a Poly<C>) -> Poly<C> {
        zip_with(self, rhs, |x, y| x.clone() - y.clone())
    }
}

impl<'a, C> Mul<&'a Poly<C>> for &'a Poly<C>
where
    C: Clone + Zero + Mul<Output = C>,
{
    type Output = Poly<C>;
    fn mul(self, rhs: &'a Poly<C>) -> Poly<C> {
        debug_assert_eq!(self.var, rhs.var, "mixing polynomials in different indeterminates");
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero(self.var);
        }
        let mut coeffs = vec![C::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(coeffs, self.var)
    }
}

impl<C> Neg for &Poly<C>
where
    C: Clone + Zero + Neg<Output = C>,
{
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        Poly::new(self.coeffs.iter().map(|c| -c.clone()).collect(), self.var)
    }
}

impl<C: Clone + Zero + fmt::Display + PartialOrd> fmt::Display for Poly<C> {
    /// Highest degree first, e.g. `b^3 + 3b^4` is printed as `3*b^4 + b^3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let x = self.var.symbol();
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let negative = *c < C::zero();
            let text = c.to_string();
            let magnitude = text.trim_start_matches('-');
            if first {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { "-" } else { "+" })?;
            }
            first = false;
            match i {
                0 => write!(f, "{magnitude}")?,
                _ => {
                    if magnitude != "1" {
                        write!(f, "{magnitude}*")?;
                    }
                    if i == 1 {
                        write!(f, "{x}")?;
                    } else {
                        write!(f, "{x}^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ip(c: &[i64]) -> Poly<BigInt> {
        Poly::new(c.iter().map(|&x| BigInt::from(x)).collect(), Var::Alpha)
    }

    #[test]
    fn trims_and_degree() {
        let p = ip(&[1, 2, 0, 0]);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(ip(&[0, 0]).degree(), None);
        assert!(ip(&[]).is_zero());
        assert_eq!(ip(&[0, 0, 3]).valuation(), Some(2));
    }

    #[test]
    fn arithmetic() {
        let a = ip(&[1, 1]);
        let b = ip(&[-1, 1]);
        assert_eq!(&a * &b, ip(&[-1, 0, 1]));
        assert_eq!(&a + &b, ip(&[0, 2]));
        assert_eq!(&a - &a, ip(&[]));
        assert_eq!(-&a, ip(&[-1, -1]));
        assert_eq!(a.shift_up(2), ip(&[0, 0, 1, 1]));
        assert_eq!(ip(&[0, 0, 1, 1]).shift_down(2), Some(a.clone()));
        assert_eq!(a.shift_down(1), None);
    }

    #[test]
    fn evaluation() {
        let p = ip(&[1, 6, 1, 1]);
        assert_eq!(p.eval(&BigInt::from(2)), BigInt::from(1 + 12 + 4 + 8));
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(p.eval_rational(&half), BigRational::new(35.into(), 8.into()));
        assert_eq!(p.eval_real(0.5f64), 4.375);
    }

    #[test]
    fn display() {
        assert_eq!(ip(&[1, 6, 1, 1]).to_string(), "a^3 + a^2 + 6*a + 1");
        assert_eq!(ip(&[-1, -3]).to_string(), "-3*a - 1");
        assert_eq!(ip(&[]).to_string(), "0");
    }

    proptest! {
        #[test]
        fn product_evaluates_to_product_of_values(
            a in proptest::collection::vec(-50i64..50, 0..6),
            b in proptest::collection::vec(-50i64..50, 0..6),
            x in -5i64..5,
        ) {
            let (pa, pb) = (ip(&a), ip(&b));
            let x = BigInt::from(x);
            prop_assert_eq!((&pa * &pb).eval(&x), pa.eval(&x) * pb.eval(&x));
            prop_assert_eq!((&pa + &pb).eval(&x), pa.eval(&x) + pb.eval(&x));
        }
    }
}
