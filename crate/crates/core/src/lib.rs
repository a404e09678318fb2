//! Computational toolkit for omega-limit sets, transfer-operator spectral
//! potentials, permutation unitary groups and the balanced measure of the
//! quadratic family `T_a(z) = 1 - a z^2`.
//!
//! Numerical code is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`); exact computations use arbitrary
//! precision integers and rationals. The aliases at the bottom of this file
//! fix the scalar to `f64` for the common case.

pub mod error;
pub mod moments;
pub mod orbit;
pub mod perm;
pub mod poly;
pub mod quad;
pub mod sampler;
pub mod scalar;
pub mod transfer;

pub use error::{Error, Result};
pub use scalar::{parse_rational, Real};

pub use num_bigint::BigInt;
pub use num_complex::Complex;
pub use num_rational::BigRational;

/// Exact arbitrary precision rational.
pub type Rational = BigRational;

/// Polynomial with arbitrary precision rational coefficients.
pub type RationalPoly = poly::Poly<BigRational>;
/// Polynomial with arbitrary precision integer coefficients.
pub type IntegerPoly = poly::Poly<BigInt>;

pub type Complex64 = Complex<f64>;
pub type RegimeReport64 = quad::RegimeReport<f64>;
pub type BcStatistic64 = quad::BcStatistic<f64>;
pub type SampleCloud64 = sampler::SampleCloud<f64>;
pub type SeriesValue64 = moments::SeriesValue<Complex<f64>, f64>;
pub type L2Vector64 = perm::L2Vector<f64>;
pub type SpectralMeasureAtoms64 = perm::SpectralMeasureAtoms<f64>;
pub type TransferOp64 = transfer::TransferOp<f64>;
pub type PotentialValue64 = transfer::PotentialValue<f64>;
pub type MeasureVector64 = transfer::MeasureVector<f64>;
pub type RealnessCertificate64 = sampler::RealnessCertificate<f64>;
pub type ExactRealnessCertificate = sampler::RealnessCertificate<BigRational>;
