//! The unitary group `{T^t}` generated by a permutation of a finite set,
//! acting by `T f(x) = f(Tx)` on `L^2` with the normalized inner product
//! `<f, g> = (1/|Omega|) sum f(a) conj(g(a))`, and its spectral measures.
//!
//! On a cycle `b, Tb, .., T^{M-1} b` the functions `f_k(T^l b) = e^{2 pi i k l / M}`,
//! `k = 0..M-1`, are eigenvectors of `T` with eigenvalue `e^{2 pi i k / M}`;
//! `T^t` multiplies the `k`-th component by `e^{2 pi i k t / M}`.

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// A bijection of `{0, .., n-1}` with its canonical cycle decomposition:
/// each cycle starts at its smallest element and cycles are sorted by it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    image: Vec<usize>,
    inverse: Vec<usize>,
    cycles: Vec<Vec<usize>>,
    /// `(cycle index, position in cycle)` for each point.
    location: Vec<(usize, usize)>,
}

/// JSON shape accepted for permutations: `{"image": [..]}`, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationInput {
    pub image: Vec<usize>,
}

pub fn decompose(table: &[usize]) -> Result<Permutation> {
    let n = table.len();
    let mut inverse = vec![usize::MAX; n];
    for (x, &y) in table.iter().enumerate() {
        if y >= n {
            return Err(Error::arg(format!("image {y} of point {x} is out of range 0..{n}")));
        }
        if inverse[y] != usize::MAX {
            return Err(Error::arg(format!(
                "not a bijection: points {} and {x} both map to {y}",
                inverse[y]
            )));
        }
        inverse[y] = x;
    }
    let mut location = vec![(0, 0); n];
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            location[x] = (cycles.len(), cycle.len());
            cycle.push(x);
            x = table[x];
        }
        cycles.push(cycle);
    }
    Ok(Permutation { image: table.to_vec(), inverse, cycles, location })
}

impl Permutation {
    pub fn size(&self) -> usize {
        self.image.len()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    /// `T^n x` for any integer `n`.
    pub fn pow_apply(&self, x: usize, n: i64) -> usize {
        let (c, pos) = self.location[x];
        let cycle = &self.cycles[c];
        let m = cycle.len() as i64;
        cycle[(pos as i64 + n).rem_euclid(m) as usize]
    }

    pub fn apply(&self, x: usize) -> usize {
        self.image[x]
    }

    pub fn apply_inverse(&self, x: usize) -> usize {
        self.inverse[x]
    }

    /// Whether `T(B) = B`.
    pub fn is_invariant(&self, subset: &[usize]) -> bool {
        let mut member = vec![false; self.size()];
        subset.iter().for_each(|&b| member[b] = true);
        subset.iter().all(|&b| member[self.image[b]])
    }
}

/// A complex function on the finite set.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Vector<T> {
    pub values: Vec<Complex<T>>,
}

impl<T: Real> L2Vector<T> {
    pub fn new(values: Vec<Complex<T>>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![Complex::new(T::zero(), T::zero()); n] }
    }

    pub fn from_real(values: &[T]) -> Self {
        Self { values: values.iter().map(|&v| Complex::new(v, T::zero())).collect() }
    }

    /// Characteristic function of `subset`.
    pub fn indicator(n: usize, subset: &[usize]) -> Self {
        let mut v = Self::zeros(n);
        for &b in subset {
            v.values[b] = Complex::new(T::one(), T::zero());
        }
        v
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(1/|Omega|) sum f(a) conj(g(a))`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        let s: Complex<T> = self
            .values
            .iter()
            .zip(&other.values)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (f, g)| acc + f * g.conj());
        s / T::of_usize(self.len().max(1))
    }

    /// `sqrt((1/|Omega|) sum |f(a)|^2)`.
    pub fn norm(&self) -> T {
        self.inner(self).re.sqrt()
    }

    /// Unnormalized `sum |f(a)|^2`.
    pub fn sum_sq(&self) -> T {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Largest pointwise difference.
    pub fn max_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }
}

fn expi<T: Real>(x: T) -> Complex<T> {
    Complex::new(x.cos(), x.sin())
}

/// Coefficients `c_k = (1/M) sum_l f(T^l b) e^{-2 pi i k l / M}` of `f` on one cycle.
fn cycle_coefficients<T: Real>(cycle: &[usize], f: &L2Vector<T>) -> Vec<Complex<T>> {
    let m = cycle.len();
    let mt = T::of_usize(m);
    (0..m)
        .map(|k| {
            let s = cycle.iter().enumerate().fold(Complex::new(T::zero(), T::zero()), |acc, (l, &p)| {
                let phase = -T::TAU() * T::of_usize((k * l) % m) / mt;
                acc + f.values[p] * expi(phase)
            });
            s / mt
        })
        .collect()
}

/// `T^t f` for real `t` through the eigen-decomposition on each cycle.
pub fn power_t<T: Real>(perm: &Permutation, f: &L2Vector<T>, t: T) -> L2Vector<T> {
    let mut out = L2Vector::zeros(perm.size());
    for cycle in perm.cycles() {
        let m = cycle.len();
        let mt = T::of_usize(m);
        let coeffs = cycle_coefficients(cycle, f);
        for (l, &p) in cycle.iter().enumerate() {
            let lt = T::of_usize(l);
            out.values[p] = coeffs.iter().enumerate().fold(Complex::new(T::zero(), T::zero()), |acc, (k, c)| {
                let kt = T::of_usize(k);
                acc + c * expi(T::TAU() * kt * (t + lt) / mt)
            });
        }
    }
    out
}

/// `T^n f = f o T^n` by direct composition.
pub fn compose_power<T: Real>(perm: &Permutation, f: &L2Vector<T>, n: i64) -> L2Vector<T> {
    L2Vector { values: (0..perm.size()).map(|x| f.values[perm.pow_apply(x, n)]).collect() }
}

/// Point mass of a spectral measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom<T> {
    /// Position on the circle, in `[0, 2 pi)`.
    pub angle: T,
    /// `angle / 2 pi` as a reduced fraction `(numerator, denominator)`.
    pub turns: (usize, usize),
    /// Lift of the angle to `(-2 pi, 0]` that carries the fractional powers:
    /// `<T^t f, g> = sum weight * e^{-i t frequency}` for every real `t`.
    pub frequency: T,
    pub weight: Complex<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMeasureAtoms<T> {
    pub atoms: Vec<Atom<T>>,
}

impl<T: Real> SpectralMeasureAtoms<T> {
    /// `sum weight * e^{-i t frequency}`.
    pub fn transform(&self, t: T) -> Complex<T> {
        self.atoms
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, a| acc + a.weight * expi(-t * a.frequency))
    }

    pub fn total_weight(&self) -> Complex<T> {
        self.atoms.iter().fold(Complex::new(T::zero(), T::zero()), |acc, a| acc + a.weight)
    }
}

/// Atoms with weight below this magnitude are dropped.
const ATOM_CUTOFF: f64 = 1e-14;

/// Spectral measure `nu_{f,g}` with `<T^t f, g> = \int e^{-i t theta} d nu_{f,g}`.
/// The eigenvalue `e^{2 pi i k / M}` of an `M`-cycle contributes an atom at
/// angle `-2 pi k / M (mod 2 pi)` with weight `(M/|Omega|) c_k(f) conj(c_k(g))`;
/// atoms at the same angle from different cycles are merged.
pub fn spectral_measure<T: Real>(perm: &Permutation, f: &L2Vector<T>, g: &L2Vector<T>) -> SpectralMeasureAtoms<T> {
    let n = T::of_usize(perm.size().max(1));
    let mut merged: std::collections::BTreeMap<(usize, usize), Complex<T>> = Default::default();
    for cycle in perm.cycles() {
        let m = cycle.len();
        let cf = cycle_coefficients(cycle, f);
        let cg = cycle_coefficients(cycle, g);
        for k in 0..m {
            let w = cf[k] * cg[k].conj() * T::of_usize(m) / n;
            let num = (m - k) % m;
            let d = num.gcd(&m);
            let key = (num / d, m / d);
            let e = merged.entry(key).or_insert(Complex::new(T::zero(), T::zero()));
            *e = *e + w;
        }
    }
    let atoms = merged
        .into_iter()
        .filter(|(_, w)| w.norm() > T::of(ATOM_CUTOFF))
        .map(|((p, q), weight)| {
            let frac = T::of_usize(p) / T::of_usize(q);
            let lifted = if p == 0 { T::zero() } else { frac - T::one() };
            Atom { angle: T::TAU() * frac, turns: (p, q), frequency: T::TAU() * lifted, weight }
        })
        .collect();
    SpectralMeasureAtoms { atoms }
}

/// `|T^{-n} B cap B| / |Omega|`, exactly.
pub fn autocorrelation(perm: &Permutation, subset: &[usize], n: i64) -> Result<BigRational> {
    let size = perm.size();
    if size == 0 {
        return Err(Error::arg("empty permutation"));
    }
    let mut member = vec![false; size];
    for &b in subset {
        if b >= size {
            return Err(Error::arg(format!("subset element {b} out of range 0..{size}")));
        }
        member[b] = true;
    }
    let count = (0..size).filter(|&x| member[x] && member[perm.pow_apply(x, n)]).count();
    Ok(BigRational::new(BigInt::from(count), BigInt::from(size)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupLawReport<T> {
    /// `max |T^{t+s} f - T^t T^s f|`
    pub group_error: T,
    /// `max | ||T^t f|| - ||f|| |`
    pub unitarity_error: T,
    /// `max | sum |T^t chi_B|^2 - |B| |`
    pub mass_error: T,
    pub passed: bool,
}

/// Group law, unitarity and mass conservation on `trials` random vectors
/// and random subsets, all within `tol`.
pub fn group_law_check<T: Real>(perm: &Permutation, t: T, s: T, trials: usize, seed: u64, tol: T) -> GroupLawReport<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = perm.size();
    let mut group_error = T::zero();
    let mut unitarity_error = T::zero();
    let mut mass_error = T::zero();
    for _ in 0..trials {
        let f = L2Vector::new(
            (0..n)
                .map(|_| Complex::new(T::of(rng.gen_range(-1.0..1.0)), T::of(rng.gen_range(-1.0..1.0))))
                .collect(),
        );
        let lhs = power_t(perm, &f, t + s);
        let rhs = power_t(perm, &power_t(perm, &f, s), t);
        group_error = group_error.max(lhs.max_diff(&rhs));
        unitarity_error = unitarity_error.max((power_t(perm, &f, t).norm() - f.norm()).abs());
        let subset: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        let chi = L2Vector::<T>::indicator(n, &subset);
        let mass = power_t(perm, &chi, t).sum_sq();
        mass_error = mass_error.max((mass - T::of_usize(subset.len())).abs());
    }
    let passed = group_error <= tol && unitarity_error <= tol && mass_error <= tol;
    GroupLawReport { group_error, unitarity_error, mass_error, passed }
}
