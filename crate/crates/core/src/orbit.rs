//! Orbit iteration, omega-limit estimation, cycle detection and ergodic
//! averages on pluggable dynamical systems.
//!
//! A [`DynSystem`] bundles a state space, the map and the metric. Everything
//! else in this module is a pure function of a system and some states.

use std::fmt::Debug;
use std::marker::PhantomData;

use num_complex::Complex;
use num_traits::{Float, Zero};
use serde::Serialize;

use crate::{Error, Real, Result};

/// Default cap on the period searched by [`theorem1_check`].
pub const DEFAULT_PERIOD_CAP: usize = 64;

/// Magnitude beyond which a real or complex orbit is declared to have escaped.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateSpace<T> {
    Interval { lo: T, hi: T },
    ComplexPlane { radius: T },
    UnitCircle,
    Finite { size: usize },
}

/// A map on a metric state space.
pub trait DynSystem {
    type Scalar: Real;
    type State: Clone + Debug;

    fn id(&self) -> String;
    fn space(&self) -> StateSpace<Self::Scalar>;
    fn apply(&self, x: &Self::State) -> Self::State;
    fn distance(&self, x: &Self::State, y: &Self::State) -> Self::Scalar;
    fn contains(&self, x: &Self::State) -> bool;
}

/// `x -> 1 - alpha x^2` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticMap<T> {
    pub alpha: T,
    pub escape_radius: T,
}

impl<T: Real> QuadraticMap<T> {
    pub fn new(alpha: T) -> Self {
        Self { alpha, escape_radius: T::of(DEFAULT_ESCAPE_RADIUS) }
    }
}

impl<T: Real> DynSystem for QuadraticMap<T> {
    type Scalar = T;
    type State = T;

    fn id(&self) -> String {
        format!("quadratic(alpha={})", self.alpha)
    }
    fn space(&self) -> StateSpace<T> {
        StateSpace::Interval { lo: -self.escape_radius, hi: self.escape_radius }
    }
    fn apply(&self, x: &T) -> T {
        T::one() - self.alpha * *x * *x
    }
    fn distance(&self, x: &T, y: &T) -> T {
        (*x - *y).abs()
    }
    fn contains(&self, x: &T) -> bool {
        x.abs() <= self.escape_radius
    }
}

/// `z -> z^2` on the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaringMap<T> {
    pub escape_radius: T,
}

impl<T: Real> Default for SquaringMap<T> {
    fn default() -> Self {
        Self { escape_radius: T::of(DEFAULT_ESCAPE_RADIUS) }
    }
}

impl<T: Real> DynSystem for SquaringMap<T> {
    type Scalar = T;
    type State = Complex<T>;

    fn id(&self) -> String {
        "squaring".to_string()
    }
    fn space(&self) -> StateSpace<T> {
        StateSpace::ComplexPlane { radius: self.escape_radius }
    }
    fn apply(&self, z: &Complex<T>) -> Complex<T> {
        z * z
    }
    fn distance(&self, z: &Complex<T>, w: &Complex<T>) -> T {
        (z - w).norm()
    }
    fn contains(&self, z: &Complex<T>) -> bool {
        z.norm() <= self.escape_radius
    }
}

/// Rotation of the unit circle by a fixed angle. States are angles in
/// `[0, 2pi)`; the metric is arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<T> {
    pub angle: T,
}

impl<T: Real> Rotation<T> {
    /// Rotation by `2 pi gamma`.
    pub fn by_fraction(gamma: T) -> Self {
        Self { angle: wrap_angle(T::TAU() * gamma) }
    }

    /// Rotation by the golden-mean fraction `(sqrt 5 - 1) / 2` of a turn.
    pub fn golden() -> Self {
        Self::by_fraction((T::of(5.0).sqrt() - T::one()) / T::of(2.0))
    }
}

/// Reduces an angle to `[0, 2pi)`.
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let tau = T::TAU();
    let r = theta % tau;
    let r = if r < T::zero() { r + tau } else { r };
    if r >= tau {
        T::zero()
    } else {
        r
    }
}

impl<T: Real> DynSystem for Rotation<T> {
    type Scalar = T;
    type State = T;

    fn id(&self) -> String {
        format!("rotation(angle={})", self.angle)
    }
    fn space(&self) -> StateSpace<T> {
        StateSpace::UnitCircle
    }
    fn apply(&self, theta: &T) -> T {
        wrap_angle(*theta + self.angle)
    }
    fn distance(&self, x: &T, y: &T) -> T {
        let d = (*x - *y).abs() % T::TAU();
        d.min(T::TAU() - d)
    }
    fn contains(&self, theta: &T) -> bool {
        theta.is_finite()
    }
}

/// Self-map of `{0, .., n-1}` given by an image table, with the discrete metric.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMap<T = f64> {
    table: Vec<usize>,
    _scalar: PhantomData<T>,
}

impl<T: Real> FiniteMap<T> {
    pub fn new(table: Vec<usize>) -> Result<Self> {
        let n = table.len();
        if let Some(i) = table.iter().position(|&y| y >= n) {
            return Err(Error::arg(format!("image of state {i} is out of range 0..{n}")));
        }
        Ok(Self { table, _scalar: PhantomData })
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }
}

impl<T: Real> DynSystem for FiniteMap<T> {
    type Scalar = T;
    type State = usize;

    fn id(&self) -> String {
        format!("finite{:?}", self.table)
    }
    fn space(&self) -> StateSpace<T> {
        StateSpace::Finite { size: self.table.len() }
    }
    fn apply(&self, x: &usize) -> usize {
        self.table[*x]
    }
    fn distance(&self, x: &usize, y: &usize) -> T {
        if x == y {
            T::zero()
        } else {
            T::one()
        }
    }
    fn contains(&self, x: &usize) -> bool {
        *x < self.table.len()
    }
}

/// The states `u, Tu, .., T^N u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitRecord<S> {
    states: Vec<S>,
}

impl<S: Clone> OrbitRecord<S> {
    pub fn from_states(states: Vec<S>) -> Self {
        Self { states }
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn initial(&self) -> Option<&S> {
        self.states.first()
    }

    /// Number of iterations `N` (one less than the number of states).
    pub fn count(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn last(&self) -> Option<&S> {
        self.states.last()
    }

    /// States with index `>= from`.
    pub fn tail(&self, from: usize) -> &[S] {
        &self.states[from.min(self.states.len())..]
    }

    pub fn into_states(self) -> Vec<S> {
        self.states
    }
}

/// Iterates `n` times from `u`, failing at the first state outside the space.
pub fn iterate<D: DynSystem>(sys: &D, u: &D::State, n: usize) -> Result<OrbitRecord<D::State>> {
    if !sys.contains(u) {
        return Err(Error::DomainEscape { index: 0 });
    }
    let mut states = Vec::with_capacity(n + 1);
    states.push(u.clone());
    let mut x = u.clone();
    for index in 1..=n {
        x = sys.apply(&x);
        if !sys.contains(&x) {
            return Err(Error::DomainEscape { index });
        }
        states.push(x.clone());
    }
    Ok(OrbitRecord { states })
}

/// Advances `n` steps without recording.
fn advance<D: DynSystem>(sys: &D, u: &D::State, n: usize) -> Result<D::State> {
    let mut x = u.clone();
    for index in 1..=n {
        x = sys.apply(&x);
        if !sys.contains(&x) {
            return Err(Error::DomainEscape { index });
        }
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport<S, T> {
    pub period: usize,
    /// `[x, Tx, .., T^(period-1) x]`
    pub points: Vec<S>,
    /// `max d(T^period x, x)` over the reported points.
    pub residual: T,
}

/// Finds the smallest period `p` for which the last `p` states of the record
/// repeat the `p` states before them within `tol`, and whose points close up
/// under `p` further applications of the map.
pub fn detect_cycle<D: DynSystem>(
    sys: &D,
    record: &OrbitRecord<D::State>,
    tol: D::Scalar,
) -> Result<Option<CycleReport<D::State, D::Scalar>>> {
    if !(tol > D::Scalar::zero()) {
        return Err(Error::arg("cycle tolerance must be positive"));
    }
    let s = record.states();
    if s.is_empty() {
        return Err(Error::arg("cannot detect a cycle in an empty orbit record"));
    }
    let last = s.len() - 1;
    let max_period = (last + 1) / 2;
    for p in 1..=max_period {
        let repeats = (0..p).all(|j| sys.distance(&s[last - j], &s[last - j - p]) <= tol);
        if !repeats {
            continue;
        }
        let points: Vec<D::State> = s[last + 1 - p..].to_vec();
        let mut residual = D::Scalar::zero();
        for x in &points {
            let mut y = x.clone();
            for _ in 0..p {
                y = sys.apply(&y);
            }
            residual = residual.max(sys.distance(&y, x));
        }
        if residual <= tol {
            return Ok(Some(CycleReport { period: p, points, residual }));
        }
    }
    Ok(None)
}

/// Point-cloud approximation of an omega-limit set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaEstimate<S, T> {
    pub representatives: Vec<S>,
    pub tol: T,
    pub burn_in: usize,
    pub tail: usize,
    pub system_id: String,
}

impl<S, T> OmegaEstimate<S, T> {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }
}

/// Greedy leader clustering of the iterates with index in
/// `[burn_in, burn_in + tail)`. A point joins the first representative within
/// `tol`, otherwise it becomes a new representative.
pub fn omega_estimate<D: DynSystem>(
    sys: &D,
    u: &D::State,
    burn_in: usize,
    tail: usize,
    tol: D::Scalar,
) -> Result<OmegaEstimate<D::State, D::Scalar>> {
    if burn_in < 1 || tail < 1 {
        return Err(Error::arg("burn_in and tail must both be at least 1"));
    }
    if !(tol > D::Scalar::zero()) {
        return Err(Error::arg("clustering tolerance must be positive"));
    }
    if !sys.contains(u) {
        return Err(Error::DomainEscape { index: 0 });
    }
    let mut x = advance(sys, u, burn_in)?;
    let mut representatives: Vec<D::State> = Vec::new();
    for k in 0..tail {
        if k > 0 {
            x = sys.apply(&x);
            if !sys.contains(&x) {
                return Err(Error::DomainEscape { index: burn_in + k });
            }
        }
        if !representatives.iter().any(|r| sys.distance(r, &x) <= tol) {
            representatives.push(x.clone());
        }
    }
    Ok(OmegaEstimate { representatives, tol, burn_in, tail, system_id: sys.id() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Theorem1Verdict<S> {
    /// Some representative is periodic and the estimate is its orbit.
    Pass { period: usize },
    /// A periodic representative exists but this representative is off its orbit.
    Fail { witness: S },
    /// No representative is periodic within the period cap.
    Inconclusive,
}

/// If a representative is periodic, the whole estimate must be that periodic
/// orbit (finite omega-limit sets are single cycles).
pub fn theorem1_check<D: DynSystem>(
    estimate: &OmegaEstimate<D::State, D::Scalar>,
    sys: &D,
    tol: D::Scalar,
) -> Result<Theorem1Verdict<D::State>> {
    theorem1_check_with_cap(estimate, sys, tol, DEFAULT_PERIOD_CAP)
}

pub fn theorem1_check_with_cap<D: DynSystem>(
    estimate: &OmegaEstimate<D::State, D::Scalar>,
    sys: &D,
    tol: D::Scalar,
    period_cap: usize,
) -> Result<Theorem1Verdict<D::State>> {
    let mut found = None;
    for p in &estimate.representatives {
        let mut orbit = vec![p.clone()];
        let mut y = p.clone();
        let mut period = None;
        for m in 1..=period_cap {
            y = sys.apply(&y);
            if !sys.contains(&y) {
                return Err(Error::DomainEscape { index: m });
            }
            if sys.distance(&y, p) <= tol {
                period = Some(m);
                break;
            }
            orbit.push(y.clone());
        }
        let Some(period) = period else { continue };
        let off_orbit = estimate
            .representatives
            .iter()
            .find(|r| !orbit.iter().any(|o| sys.distance(o, r) <= tol));
        if let Some(witness) = off_orbit {
            return Ok(Theorem1Verdict::Fail { witness: witness.clone() });
        }
        found.get_or_insert(period);
    }
    Ok(match found {
        Some(period) => Theorem1Verdict::Pass { period },
        None => Theorem1Verdict::Inconclusive,
    })
}

/// `(f(u) + f(Tu) + .. + f(T^n u)) / (n + 1)`.
pub fn birkhoff_average<D, F>(sys: &D, f: F, u: &D::State, n: usize) -> Result<D::Scalar>
where
    D: DynSystem,
    F: Fn(&D::State) -> D::Scalar,
{
    if !sys.contains(u) {
        return Err(Error::DomainEscape { index: 0 });
    }
    let mut x = u.clone();
    let mut sum = f(&x);
    for index in 1..=n {
        x = sys.apply(&x);
        if !sys.contains(&x) {
            return Err(Error::DomainEscape { index });
        }
        sum = sum + f(&x);
    }
    Ok(sum / D::Scalar::of_usize(n + 1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum MinimalityVerdict<S> {
    Pass,
    /// The orbit of `start` never comes within `eps` of `uncovered`.
    Fail { start: S, uncovered: S },
}

/// Checks that the orbit of every representative (of length `steps`) is
/// `eps`-dense in the representative set.
pub fn minimality_probe<D: DynSystem>(
    estimate: &OmegaEstimate<D::State, D::Scalar>,
    sys: &D,
    eps: D::Scalar,
    steps: usize,
) -> Result<MinimalityVerdict<D::State>> {
    if !(eps > estimate.tol) {
        return Err(Error::arg("eps must exceed the estimate's clustering tolerance"));
    }
    let reps = &estimate.representatives;
    for y in reps {
        let orbit = iterate(sys, y, steps.saturating_sub(1))?.into_states();
        for r in reps {
            if !orbit.iter().any(|o| sys.distance(o, r) <= eps) {
                return Ok(MinimalityVerdict::Fail { start: y.clone(), uncovered: r.clone() });
            }
        }
    }
    Ok(MinimalityVerdict::Pass)
}

/// Number of connected components of the graph on representatives joined
/// when their distance is at most `link_radius`.
pub fn connectivity_probe<D: DynSystem>(
    estimate: &OmegaEstimate<D::State, D::Scalar>,
    sys: &D,
    link_radius: D::Scalar,
) -> Result<usize> {
    if !(link_radius > D::Scalar::zero()) {
        return Err(Error::arg("link radius must be positive"));
    }
    let reps = &estimate.representatives;
    let mut parent: Vec<usize> = (0..reps.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut components = reps.len();
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            if sys.distance(&reps[i], &reps[j]) <= link_radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                    components -= 1;
                }
            }
        }
    }
    Ok(components)
}
