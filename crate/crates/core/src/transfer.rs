//! Transfer operators `A f(x) = sum_{T y = x} e^{c(y)} f(y)` on finite
//! systems, their spectral potential `lambda(a) = ln r(A_a)` with
//! `A_a f = A(e^a f)`, and the invariant measures it produces.

use std::fmt::Debug;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// A self-map of `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteSystem {
    map: Vec<usize>,
}

/// JSON input: `{"map": [images], "c": [reals]}`; `c` defaults to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemInput {
    pub map: Vec<usize>,
    #[serde(default)]
    pub c: Option<Vec<f64>>,
}

impl FiniteSystem {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        if n == 0 {
            return Err(Error::arg("finite system must have at least one state"));
        }
        if let Some(x) = map.iter().position(|&y| y >= n) {
            return Err(Error::arg(format!("image of state {x} is out of range 0..{n}")));
        }
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    /// Cycles of the functional graph, each starting at its smallest state,
    /// sorted by that state.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.map.len();
        // 0 = unvisited, 1 = on current path, 2 = done
        let mut state = vec![0u8; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            let mut path = Vec::new();
            let mut x = start;
            while state[x] == 0 {
                state[x] = 1;
                path.push(x);
                x = self.map[x];
            }
            if state[x] == 1 {
                let pos = path.iter().position(|&p| p == x).expect("x is on the path");
                let mut cycle = path[pos..].to_vec();
                let min_pos = cycle.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i).unwrap_or(0);
                cycle.rotate_left(min_pos);
                cycles.push(cycle);
            }
            for p in path {
                state[p] = 2;
            }
        }
        cycles.sort_by_key(|c| c[0]);
        cycles
    }

    /// `b o T`
    pub fn compose<T: Copy>(&self, b: &[T]) -> Vec<T> {
        self.map.iter().map(|&y| b[y]).collect()
    }

    /// `S_n a = a + a o T + .. + a o T^{n-1}`
    pub fn birkhoff_sum<T: Real>(&self, a: &[T], n: usize) -> Vec<T> {
        (0..self.len())
            .map(|x| {
                let mut y = x;
                let mut s = T::zero();
                for _ in 0..n {
                    s = s + a[y];
                    y = self.map[y];
                }
                s
            })
            .collect()
    }
}

/// `A f(x) = sum_{T y = x} e^{c(y)} f(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOp<T> {
    system: FiniteSystem,
    potential: Vec<T>,
}

pub fn build<T: Real>(system: &FiniteSystem, c: &[T]) -> Result<TransferOp<T>> {
    if c.len() != system.len() {
        return Err(Error::arg(format!(
            "potential has {} entries, system has {} states",
            c.len(),
            system.len()
        )));
    }
    Ok(TransferOp { system: system.clone(), potential: c.to_vec() })
}

fn check_len<T>(op_len: usize, v: &[T], what: &str) -> Result<()> {
    if v.len() == op_len {
        Ok(())
    } else {
        Err(Error::arg(format!("{what} has {} entries, system has {op_len} states", v.len())))
    }
}

impl<T: Real> TransferOp<T> {
    pub fn from_input(input: &SystemInput) -> Result<Self> {
        let system = FiniteSystem::new(input.map.clone())?;
        let c: Vec<T> = match &input.c {
            Some(c) => c.iter().map(|&v| T::of(v)).collect(),
            None => vec![T::zero(); system.len()],
        };
        build(&system, &c)
    }

    pub fn system(&self) -> &FiniteSystem {
        &self.system
    }

    pub fn potential(&self) -> &[T] {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.system.len()
    }

    pub fn is_empty(&self) -> bool {
        self.system.is_empty()
    }

    pub fn apply(&self, f: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.len()];
        for (y, &x) in self.system.map.iter().enumerate() {
            out[x] = out[x] + self.potential[y].exp() * f[y];
        }
        out
    }

    /// Dense form `M[x][y] = e^{c(y)} [T y = x]`.
    pub fn matrix(&self) -> Vec<Vec<T>> {
        let n = self.len();
        let mut m = vec![vec![T::zero(); n]; n];
        for (y, &x) in self.system.map.iter().enumerate() {
            m[x][y] = self.potential[y].exp();
        }
        m
    }

    /// `A_a f = A(e^a f)`, i.e. the operator with potential `c + a`.
    pub fn weight(&self, a: &[T]) -> Result<Self> {
        check_len(self.len(), a, "weight")?;
        let potential = self.potential.iter().zip(a).map(|(&c, &w)| c + w).collect();
        Ok(Self { system: self.system.clone(), potential })
    }

    /// `ln r(A)` from the cycle structure: the nonzero spectrum of `A` comes
    /// from the cycles alone, an `M`-cycle contributing the `M`-th roots of
    /// `prod e^{c}` along it.
    pub fn log_spectral_radius_from_cycles(&self) -> T {
        self.system
            .cycles()
            .iter()
            .map(|cyc| cyc.iter().map(|&y| self.potential[y]).sum::<T>() / T::of_usize(cyc.len()))
            .fold(T::neg_infinity(), T::max)
    }

    /// Common period of the cycle part: lcm of the cycle lengths.
    fn window(&self) -> usize {
        self.system.cycles().iter().fold(1usize, |l, c| l.lcm(&c.len()).min(1 << 20))
    }
}

/// `lambda(a)` estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialValue<T> {
    pub value: T,
    pub iterations: usize,
    /// Difference between the last two windowed estimates.
    pub residual: T,
    pub converged: bool,
}

impl<T: Real> PotentialValue<T> {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConverged { iterations: self.iterations, residual: self.residual.to_f64_lossy() })
        }
    }
}

pub const DEFAULT_POTENTIAL_TOL: f64 = 1e-13;
pub const DEFAULT_POTENTIAL_CAP: usize = 100_000;

/// Power iteration `v <- A_a v` from `v = 1` with sup-norm rescaling, the
/// scale logs accumulated separately. Once per window of `L` steps (`L` the
/// lcm of cycle lengths) the estimate is the largest per-state log growth
/// over the window divided by `L`; iterates on an `M`-cycle are exactly
/// periodic-modulated with period `M`, so this is exact once the tree part
/// (depth below `|X|`) has died out. Converged when two consecutive window
/// estimates agree within `tol` past that transient.
pub fn spectral_potential<T: Real>(op: &TransferOp<T>, a: &[T], tol: T, n_cap: usize) -> Result<PotentialValue<T>> {
    if !(tol > T::zero()) {
        return Err(Error::arg("tolerance must be positive"));
    }
    let weighted = op.weight(a)?;
    let n = op.len();
    let window = weighted.window();
    let warmup = n + 2 * window;
    let mut v = vec![T::one(); n];
    let mut log_scale = T::zero();
    let mut checkpoint = (v.clone(), log_scale);
    let mut previous: Option<T> = None;
    let mut estimate = T::nan();
    let mut residual = T::infinity();
    for step in 1..=n_cap {
        v = weighted.apply(&v);
        let m = v.iter().copied().fold(T::zero(), T::max);
        if !(m > T::zero() && m.is_finite()) {
            return Err(Error::Internal(format!("power iterate degenerated at step {step}")));
        }
        v.iter_mut().for_each(|x| *x = *x / m);
        log_scale = log_scale + m.ln();
        if step % window != 0 {
            continue;
        }
        let (old, old_scale) = &checkpoint;
        let growth = v
            .iter()
            .zip(old)
            .filter(|(x, y)| **x > T::zero() && **y > T::zero())
            .map(|(x, y)| x.ln() - y.ln())
            .fold(T::neg_infinity(), T::max);
        estimate = (growth + log_scale - *old_scale) / T::of_usize(window);
        if let Some(p) = previous {
            residual = (estimate - p).abs();
            if step >= warmup && residual <= tol {
                return Ok(PotentialValue { value: estimate, iterations: step, residual, converged: true });
            }
        }
        previous = Some(estimate);
        checkpoint = (v.clone(), log_scale);
    }
    if estimate.is_nan() {
        estimate = log_scale / T::of_usize(n_cap.max(1));
    }
    Ok(PotentialValue { value: estimate, iterations: n_cap, residual, converged: false })
}

/// `spectral_potential` with default tolerance and cap, failing on non-convergence.
pub fn lambda<T: Real>(op: &TransferOp<T>, a: &[T]) -> Result<T> {
    Ok(spectral_potential(op, a, T::of(DEFAULT_POTENTIAL_TOL), DEFAULT_POTENTIAL_CAP)?
        .require_converged()?
        .value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest amount by which the property was violated (0 if never).
    pub max_violation: f64,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub trials: usize,
    pub tol: f64,
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Tracker {
    name: &'static str,
    tol: f64,
    max_violation: f64,
    witness: Option<String>,
}

impl Tracker {
    fn new(name: &'static str, tol: f64) -> Self {
        Self { name, tol, max_violation: 0.0, witness: None }
    }

    fn record(&mut self, violation: f64, witness: impl FnOnce() -> String) {
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        if v > self.max_violation {
            self.max_violation = v;
            if v > self.tol {
                self.witness = Some(witness());
            }
        }
    }

    fn finish(self) -> PropertyCheck {
        PropertyCheck {
            name: self.name,
            passed: self.max_violation <= self.tol,
            max_violation: self.max_violation,
            witness: self.witness,
        }
    }
}

fn random_vec<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    (0..n).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect()
}

/// The seven standard properties of the spectral potential, on random
/// functions: `lambda(0) = ln r(A)`, monotonicity, shift by constants,
/// invariance under coboundaries `lambda(a + b o T) = lambda(a + b)`,
/// convexity, 1-Lipschitz in the sup norm, and finiteness.
pub fn property_suite<T: Real>(op: &TransferOp<T>, trials: usize, tol: T, seed: u64) -> Result<PropertyReport> {
    if trials < 1 {
        return Err(Error::arg("trials must be at least 1"));
    }
    let n = op.len();
    let tol_f = tol.to_f64_lossy();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = vec![T::zero(); n];
    let lam0 = lambda(op, &zero)?;

    let mut radius = Tracker::new("lambda(0) = ln r(A)", tol_f);
    let log_r = op.log_spectral_radius_from_cycles();
    radius.record((lam0 - log_r).abs().to_f64_lossy(), || format!("lambda(0) = {lam0}, ln r(A) = {log_r}"));

    let mut monotone = Tracker::new("a <= b implies lambda(a) <= lambda(b)", tol_f);
    let mut shift = Tracker::new("lambda(a + t) = lambda(a) + t", tol_f);
    let mut coboundary = Tracker::new("lambda(a + b o T) = lambda(a + b)", tol_f);
    let mut convex = Tracker::new("lambda(ta + (1-t)b) <= t lambda(a) + (1-t) lambda(b)", tol_f);
    let mut lipschitz = Tracker::new("|lambda(a) - lambda(b)| <= |a - b|", tol_f);
    let mut finite = Tracker::new("lambda(a) is real", tol_f);

    for _ in 0..trials {
        let a: Vec<T> = random_vec(&mut rng, n);
        let b: Vec<T> = random_vec(&mut rng, n);
        let la = lambda(op, &a)?;
        let lb = lambda(op, &b)?;
        finite.record(if la.is_finite() && lb.is_finite() { 0.0 } else { f64::INFINITY }, || {
            format!("a = {a:?}")
        });

        let above: Vec<T> = a.iter().map(|&x| x + T::of(rng.gen_range(0.0..1.0))).collect();
        let l_above = lambda(op, &above)?;
        monotone.record((la - l_above).to_f64_lossy(), || format!("a = {a:?}, b = {above:?}"));

        let t0 = T::of(rng.gen_range(-3.0..3.0));
        let shifted: Vec<T> = a.iter().map(|&x| x + t0).collect();
        let l_shift = lambda(op, &shifted)?;
        shift.record((l_shift - la - t0).abs().to_f64_lossy(), || format!("a = {a:?}, t = {t0}"));

        let b_t = op.system().compose(&b);
        let with_tb: Vec<T> = a.iter().zip(&b_t).map(|(&x, &y)| x + y).collect();
        let with_b: Vec<T> = a.iter().zip(&b).map(|(&x, &y)| x + y).collect();
        let (l1, l2) = (lambda(op, &with_tb)?, lambda(op, &with_b)?);
        coboundary.record((l1 - l2).abs().to_f64_lossy(), || format!("a = {a:?}, b = {b:?}"));

        let t = T::of(rng.gen_range(0.0..=1.0));
        let mix: Vec<T> = a.iter().zip(&b).map(|(&x, &y)| t * x + (T::one() - t) * y).collect();
        let l_mix = lambda(op, &mix)?;
        convex.record((l_mix - (t * la + (T::one() - t) * lb)).to_f64_lossy(), || {
            format!("a = {a:?}, b = {b:?}, t = {t}")
        });

        let sup = a.iter().zip(&b).map(|(&x, &y)| (x - y).abs()).fold(T::zero(), T::max);
        lipschitz.record(((la - lb).abs() - sup).to_f64_lossy(), || format!("a = {a:?}, b = {b:?}"));
    }
    let checks = [radius, monotone, shift, coboundary, convex, lipschitz, finite]
        .into_iter()
        .map(Tracker::finish)
        .collect();
    Ok(PropertyReport { trials, tol: tol_f, checks })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck<T> {
    pub max_diff: T,
    pub scale: T,
    pub passed: bool,
}

/// Compares `A_a^n f` with `A^n(e^{S_n a} f)`.
pub fn birkhoff_identity_check<T: Real>(op: &TransferOp<T>, a: &[T], f: &[T], n: usize) -> Result<IdentityCheck<T>> {
    if n > 20 {
        return Err(Error::arg("identity check is limited to n <= 20"));
    }
    check_len(op.len(), f, "f")?;
    let weighted = op.weight(a)?;
    let mut lhs = f.to_vec();
    for _ in 0..n {
        lhs = weighted.apply(&lhs);
    }
    let s = op.system().birkhoff_sum(a, n);
    let mut rhs: Vec<T> = f.iter().zip(&s).map(|(&v, &w)| w.exp() * v).collect();
    for _ in 0..n {
        rhs = op.apply(&rhs);
    }
    let max_diff = lhs.iter().zip(&rhs).map(|(x, y)| (*x - *y).abs()).fold(T::zero(), T::max);
    let scale = lhs.iter().map(|x| x.abs()).fold(T::one(), T::max);
    Ok(IdentityCheck { max_diff, scale, passed: max_diff <= T::of(1e-10) * scale })
}

/// A probability vector on the states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureVector<T> {
    weights: Vec<T>,
}

impl<T: Real> MeasureVector<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= -T::of(1e-9))) {
            return Err(Error::arg("measure weights must be nonnegative"));
        }
        let mass: T = weights.iter().copied().sum();
        if (mass - T::one()).abs() > T::of(1e-9) {
            return Err(Error::arg(format!("measure has mass {mass}, expected 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform_on(n: usize, support: &[usize]) -> Self {
        let mut weights = vec![T::zero(); n];
        let w = T::one() / T::of_usize(support.len());
        support.iter().for_each(|&s| weights[s] = w);
        Self { weights }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        Self::uniform_on(n, &[at])
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `mu(a) = sum mu(x) a(x)`
    pub fn integrate(&self, a: &[T]) -> T {
        self.weights.iter().zip(a).map(|(&m, &v)| m * v).sum()
    }

    /// Push-forward `(T_* mu)(x) = sum_{T y = x} mu(y)`.
    pub fn push_forward(&self, system: &FiniteSystem) -> Vec<T> {
        let mut out = vec![T::zero(); self.weights.len()];
        for (y, &x) in system.map().iter().enumerate() {
            out[x] = out[x] + self.weights[y];
        }
        out
    }

    /// `max_x |mu(x) - (T_* mu)(x)|`
    pub fn invariance_defect(&self, system: &FiniteSystem) -> T {
        self.push_forward(system)
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| (*p - *w).abs())
            .fold(T::zero(), T::max)
    }
}

/// `min_a [lambda(a) - mu(a)]` over the supplied test functions; an upper
/// bound for the infimum over all functions.
pub fn xi_upper<T: Real>(op: &TransferOp<T>, mu: &MeasureVector<T>, test_set: &[Vec<T>]) -> Result<T> {
    if test_set.is_empty() {
        return Err(Error::arg("test set must not be empty"));
    }
    check_len(op.len(), mu.weights(), "measure")?;
    let mut best = T::infinity();
    for a in test_set {
        best = best.min(lambda(op, a)? - mu.integrate(a));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum InvarianceVerdict<T> {
    /// `a` is the indicator of `state`; along `d = t (a - a o T)` the
    /// functional `lambda(d) - mu(d)` equals `lambda(0) - t gap`, unbounded below.
    Witness { state: usize, gap: T, t: T, value: T, predicted: T },
    InvariantWithinTol { max_gap: T },
}

/// Looks for an indicator `a` with `mu(a) != mu(a o T)`; such a direction
/// drives `lambda - mu` to minus infinity, so `mu` cannot be invariant.
pub fn invariance_witness<T: Real>(
    op: &TransferOp<T>,
    mu: &MeasureVector<T>,
    t_max: T,
    tol: T,
) -> Result<InvarianceVerdict<T>> {
    check_len(op.len(), mu.weights(), "measure")?;
    let n = op.len();
    let pushed = mu.push_forward(op.system());
    // mu(1_x o T) = mu(T^{-1} x) = (T_* mu)(x)
    let (state, gap) = (0..n)
        .map(|x| (x, mu.weights()[x] - pushed[x]))
        .fold((0, T::zero()), |best, cur| if cur.1.abs() > best.1.abs() { cur } else { best });
    if gap.abs() <= tol {
        return Ok(InvarianceVerdict::InvariantWithinTol { max_gap: gap.abs() });
    }
    let t = if gap > T::zero() { t_max } else { -t_max };
    let mut indicator = vec![T::zero(); n];
    indicator[state] = T::one();
    let composed = op.system().compose(&indicator);
    let direction: Vec<T> = indicator.iter().zip(&composed).map(|(&a, &b)| t * (a - b)).collect();
    let value = lambda(op, &direction)? - mu.integrate(&direction);
    let predicted = lambda(op, &vec![T::zero(); n])? - t * gap;
    Ok(InvarianceVerdict::Witness { state, gap, t, value, predicted })
}

pub const DEFAULT_SUBGRADIENT_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumMeasure<T> {
    pub measure: MeasureVector<T>,
    /// `max |mu - T_* mu|`
    pub invariance_defect: T,
    pub invariant: bool,
    /// States whose raw finite difference was below `-10 h`; a sign that
    /// `lambda` is not differentiable at `a`.
    pub clipped: Vec<usize>,
}

/// Gradient of `lambda` at `a` by central differences with step `h`,
/// clipped at zero and renormalized, then checked for invariance within `10 h`.
pub fn equilibrium_subgradient<T: Real>(op: &TransferOp<T>, a: &[T], h: T) -> Result<EquilibriumMeasure<T>> {
    if !(h > T::zero()) {
        return Err(Error::arg("step h must be positive"));
    }
    check_len(op.len(), a, "a")?;
    let n = op.len();
    let mut raw = Vec::with_capacity(n);
    for x in 0..n {
        let mut up = a.to_vec();
        let mut down = a.to_vec();
        up[x] = up[x] + h;
        down[x] = down[x] - h;
        raw.push((lambda(op, &up)? - lambda(op, &down)?) / (T::of(2.0) * h));
    }
    let ten_h = T::of(10.0) * h;
    let clipped: Vec<usize> = (0..n).filter(|&x| raw[x] < -ten_h).collect();
    let positive: Vec<T> = raw.iter().map(|&v| v.max(T::zero())).collect();
    let mass: T = positive.iter().copied().sum();
    if !(mass > T::zero()) {
        return Err(Error::Internal("finite-difference gradient vanished".to_string()));
    }
    let measure = MeasureVector { weights: positive.iter().map(|&v| v / mass).collect() };
    let invariance_defect = measure.invariance_defect(op.system());
    Ok(EquilibriumMeasure { measure, invariance_defect, invariant: invariance_defect <= ten_h, clipped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem4Report<T> {
    pub cycle: Vec<usize>,
    pub log_radius: T,
    pub max_error: T,
    pub passed: bool,
}

/// For a system whose functional graph has a single cycle, checks
/// `lambda(a) = lambda(0) + mu(a)` with `mu` uniform on that cycle.
pub fn theorem4_check<T: Real>(op: &TransferOp<T>, trials: usize, tol: T, seed: u64) -> Result<Theorem4Report<T>> {
    let cycles = op.system().cycles();
    if cycles.len() != 1 {
        return Err(Error::Precondition(format!(
            "system is not uniquely ergodic: cycles {:?} and {:?}",
            cycles[0], cycles[1]
        )));
    }
    let cycle = cycles.into_iter().next().expect("one cycle");
    let n = op.len();
    let mu = MeasureVector::uniform_on(n, &cycle);
    let lam0 = lambda(op, &vec![T::zero(); n])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = T::zero();
    for _ in 0..trials {
        let a: Vec<T> = random_vec(&mut rng, n);
        let err = (lambda(op, &a)? - lam0 - mu.integrate(&a)).abs();
        max_error = max_error.max(err);
    }
    Ok(Theorem4Report { cycle, log_radius: lam0, max_error, passed: max_error <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_cycle() -> FiniteSystem {
        FiniteSystem::new(vec![1, 2, 3, 4, 0]).unwrap()
    }

    fn collapse() -> FiniteSystem {
        FiniteSystem::new(vec![0, 2, 0, 2]).unwrap()
    }

    #[test]
    fn cycles_of_functional_graphs() {
        assert_eq!(five_cycle().cycles(), vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(collapse().cycles(), vec![vec![0]]);
        let two = FiniteSystem::new(vec![1, 0, 3, 2, 0]).unwrap();
        assert_eq!(two.cycles(), vec![vec![0, 1], vec![2, 3]]);
        assert!(FiniteSystem::new(vec![]).is_err());
        assert!(FiniteSystem::new(vec![3]).is_err());
    }

    #[test]
    fn matrices() {
        let op = build(&five_cycle(), &[0.0f64; 5]).unwrap();
        let m = op.matrix();
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(m[x][y], if x == (y + 1) % 5 { 1.0 } else { 0.0 });
            }
        }
        let op = build(&collapse(), &[0.0f64; 4]).unwrap();
        let rows: Vec<f64> = op.matrix().iter().map(|r| r.iter().sum()).collect();
        assert_eq!(rows, vec![2.0, 0.0, 2.0, 0.0]);
        let op = build(&collapse(), &[2f64.ln(); 4]).unwrap();
        assert!((op.matrix()[0][2] - 2.0).abs() < 1e-15);
        assert!(build(&collapse(), &[0.0f64; 3]).is_err());
    }

    #[test]
    fn weighting() {
        let op = build(&collapse(), &[0.0f64; 4]).unwrap();
        assert_eq!(op.weight(&[0.0; 4]).unwrap(), op);
        let w = op.weight(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((w.matrix()[0][0] - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(w.matrix()[0][2], 1.0);
    }

    #[test]
    fn potential_on_cycle_is_mean() {
        let op = build(&five_cycle(), &[0.0f64; 5]).unwrap();
        let v = spectral_potential(&op, &[1.0, 0.0, 0.0, 0.0, 0.0], 1e-12, 10_000).unwrap();
        assert!(v.converged);
        assert!((v.value - 0.2).abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn potential_of_collapse_is_zero() {
        let op = build(&collapse(), &[0.0f64; 4]).unwrap();
        let v = spectral_potential(&op, &[0.0; 4], 1e-12, 10_000).unwrap();
        assert!(v.value.abs() < 1e-12);
        let shifted = spectral_potential(&op, &[0.7; 4], 1e-12, 10_000).unwrap();
        assert!((shifted.value - 0.7).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let op = build(&five_cycle(), &[0.0f64; 5]).unwrap();
        let v = spectral_potential(&op, &[0.3, 0.0, 0.0, 0.0, 0.0], 1e-12, 7).unwrap();
        assert!(!v.converged);
        assert!(matches!(v.require_converged(), Err(Error::NonConverged { .. })));
    }

    #[test]
    fn competing_cycles_pick_the_larger_mean() {
        // cycles {0,1} and {2,3,4} feed by trees 5 -> 0 and 6 -> 2
        let sys = FiniteSystem::new(vec![1, 0, 3, 4, 2, 0, 2]).unwrap();
        let c = [0.5f64, 0.1, 0.2, 0.2, 0.2, 3.0, 3.0];
        let op = build(&sys, &c).unwrap();
        let v = lambda(&op, &[0.0; 7]).unwrap();
        assert!((v - 0.3).abs() < 1e-12, "{v}");
        assert!((op.log_spectral_radius_from_cycles() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn birkhoff_identity() {
        let op = build(&collapse(), &[0.1, -0.2, 0.3, 0.0]).unwrap();
        let a = [0.5, -0.1, 0.2, 0.9];
        let f = [1.0, 2.0, -1.0, 0.5];
        assert!(birkhoff_identity_check(&op, &a, &f, 1).unwrap().passed);
        assert!(birkhoff_identity_check(&op, &a, &f, 3).unwrap().passed);
        assert!(birkhoff_identity_check(&op, &a, &f, 21).is_err());
    }

    #[test]
    fn xi_and_witness() {
        let op = build(&five_cycle(), &[0.0f64; 5]).unwrap();
        let uniform = MeasureVector::uniform_on(5, &[0, 1, 2, 3, 4]);
        assert!((xi_upper(&op, &uniform, &[vec![0.0; 5]]).unwrap()).abs() < 1e-12);
        assert!(xi_upper(&op, &uniform, &[]).is_err());
        assert!(matches!(
            invariance_witness(&op, &uniform, 100.0, 1e-9).unwrap(),
            InvarianceVerdict::InvariantWithinTol { .. }
        ));
        let delta = MeasureVector::point_mass(5, 0);
        match invariance_witness(&op, &delta, 100.0, 1e-9).unwrap() {
            InvarianceVerdict::Witness { state, gap, value, predicted, .. } => {
                assert_eq!(state, 0);
                assert_eq!(gap, 1.0);
                assert!((predicted + 100.0).abs() < 1e-9);
                assert!((value - predicted).abs() < 1e-9);
            }
            other => panic!("expected a witness, got {other:?}"),
        }
        let op = build(&collapse(), &[0.0f64; 4]).unwrap();
        assert!(matches!(
            invariance_witness(&op, &MeasureVector::point_mass(4, 0), 100.0, 1e-9).unwrap(),
            InvarianceVerdict::InvariantWithinTol { .. }
        ));
    }

    #[test]
    fn measure_validation() {
        assert!(MeasureVector::new(vec![0.5f64, 0.5]).is_ok());
        assert!(MeasureVector::new(vec![0.5f64, 0.6]).is_err());
        assert!(MeasureVector::new(vec![1.5f64, -0.5]).is_err());
    }

    #[test]
    fn subgradients() {
        let op = build(&five_cycle(), &[0.0f64; 5]).unwrap();
        let eq = equilibrium_subgradient(&op, &[0.0; 5], 1e-4).unwrap();
        for &w in eq.measure.weights() {
            assert!((w - 0.2).abs() < 1e-9);
        }
        assert!(eq.invariant);
        let op = build(&collapse(), &[0.0f64; 4]).unwrap();
        let eq = equilibrium_subgradient(&op, &[0.3, -0.2, 0.1, 0.4], 1e-4).unwrap();
        assert!((eq.measure.weights()[0] - 1.0).abs() < 1e-9);
        assert!(eq.clipped.is_empty());
    }

    #[test]
    fn theorem4_precondition() {
        let sys = FiniteSystem::new(vec![1, 0, 3, 2]).unwrap();
        let op = build(&sys, &[0.0f64; 4]).unwrap();
        let err = theorem4_check(&op, 3, 1e-6, 1).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(err.to_string().contains("[0, 1]") && err.to_string().contains("[2, 3]"));
    }
}
