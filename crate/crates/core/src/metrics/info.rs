use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A probability vector on a finite, strictly increasing support.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDist<T> {
    pub support: Vec<T>,
    pub probs: Vec<T>,
}

/// Exact joint law of a binary correctness label `C` and a finitely
/// supported score `S`.
///
/// `mass[c][k]` is `P(C = c, S = support[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint<T> {
    support: Vec<T>,
    mass: [Vec<T>; 2],
}

fn check_support<T: Scalar>(support: &[T]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::InvalidJoint("empty support".into()));
    }
    if support.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidJoint("non-finite support value".into()));
    }
    if support.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidJoint("support values must be strictly increasing".into()));
    }
    Ok(())
}

impl<T: Scalar> DiscreteJoint<T> {
    /// `negative[k] = P(C = 0, S = s_k)`, `positive[k] = P(C = 1, S = s_k)`.
    pub fn new(support: Vec<T>, negative: Vec<T>, positive: Vec<T>) -> Result<Self> {
        check_support(&support)?;
        if negative.len() != support.len() || positive.len() != support.len() {
            return Err(Error::InvalidJoint(format!(
                "support has {} points but masses have {} and {}",
                support.len(),
                negative.len(),
                positive.len()
            )));
        }
        if negative.iter().chain(&positive).any(|p| !(*p >= T::zero())) {
            return Err(Error::InvalidJoint("masses must be nonnegative".into()));
        }
        let total: T = negative.iter().chain(&positive).copied().sum();
        if (total - T::one()).abs() > T::lit(T::MASS_TOLERANCE) {
            return Err(Error::InvalidJoint(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { support, mass: [negative, positive] })
    }

    /// Builds a joint from unordered `(score, label, mass)` atoms, merging
    /// atoms whose score values are equal.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (T, bool, T)>) -> Result<Self> {
        let mut atoms: Vec<(T, bool, T)> = atoms.into_iter().collect();
        if atoms.iter().any(|a| a.0.is_nan()) {
            return Err(Error::InvalidJoint("NaN score value".into()));
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut support: Vec<T> = Vec::new();
        let mut mass = [Vec::new(), Vec::new()];
        for (s, c, p) in atoms {
            if support.last() != Some(&s) {
                support.push(s);
                mass[0].push(T::zero());
                mass[1].push(T::zero());
            }
            let k = support.len() - 1;
            let row = &mut mass[usize::from(c)];
            row[k] = row[k] + p;
        }
        let [negative, positive] = mass;
        Self::new(support, negative, positive)
    }

    /// `(1 - lambda) * a + lambda * b` on the union of both supports.
    pub fn mixture(a: &Self, b: &Self, lambda: T) -> Result<Self> {
        if !(lambda >= T::zero() && lambda <= T::one()) {
            return Err(Error::OutOfRange { what: "mixture weight", value: lambda.to_f64().unwrap_or(f64::NAN) });
        }
        let scaled = |j: &Self, w: T| {
            j.atoms().map(move |(s, c, p)| (s, c, w * p)).collect::<Vec<_>>()
        };
        let mut atoms = scaled(a, T::one() - lambda);
        atoms.extend(scaled(b, lambda));
        Self::from_atoms(atoms)
    }

    /// Every `(s_k, c, P(C = c, S = s_k))` cell, including zero cells.
    pub fn atoms(&self) -> impl Iterator<Item = (T, bool, T)> + '_ {
        self.support
            .iter()
            .enumerate()
            .flat_map(move |(k, &s)| [(s, false, self.mass[0][k]), (s, true, self.mass[1][k])])
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    /// `P(C = c, S = s_k)` for every k.
    pub fn mass(&self, correct: bool) -> &[T] {
        &self.mass[usize::from(correct)]
    }

    /// Correctness prior `P(C = 1)`.
    pub fn p_c(&self) -> T {
        self.mass[1].iter().copied().sum()
    }

    /// Score marginal `P(S)`.
    pub fn marginal(&self) -> FiniteDist<T> {
        FiniteDist {
            support: self.support.clone(),
            probs: self.mass[0].iter().zip(&self.mass[1]).map(|(a, b)| *a + *b).collect(),
        }
    }

    /// `P(S | C = c)`. Fails when class `c` has zero mass.
    pub fn conditional(&self, correct: bool) -> Result<FiniteDist<T>> {
        let row = &self.mass[usize::from(correct)];
        let total: T = row.iter().copied().sum();
        if !(total > T::zero()) {
            let p_c = self.p_c().to_f64().unwrap_or(f64::NAN);
            return Err(Error::OutOfRange { what: "correctness prior (need 0 < p_c < 1)", value: p_c });
        }
        Ok(FiniteDist { support: self.support.clone(), probs: row.iter().map(|p| *p / total).collect() })
    }

    /// Population `P(S+ > S-) + P(S+ = S-) / 2` with `S+ ~ P(S | C = 1)`,
    /// `S- ~ P(S | C = 0)`.
    pub fn auc(&self) -> Result<T> {
        let pos = self.conditional(true)?;
        let neg = self.conditional(false)?;
        let mut below = T::zero();
        let mut auc = T::zero();
        for (p_plus, p_minus) in pos.probs.iter().zip(&neg.probs) {
            auc = auc + *p_plus * (below + T::half() * *p_minus);
            below = below + *p_minus;
        }
        Ok(auc)
    }
}

/// Total variation distance `½ Σ |p_k − q_k|` between two laws on the same support.
pub fn tv_distance<T: Scalar>(p: &FiniteDist<T>, q: &FiniteDist<T>) -> Result<T> {
    if p.support != q.support || p.probs.len() != q.probs.len() {
        return Err(Error::SupportMismatch);
    }
    let l1: T = p.probs.iter().zip(&q.probs).map(|(a, b)| (*a - *b).abs()).sum();
    Ok(T::half() * l1)
}

/// `KL(p ‖ q)` in nats; infinite when `p` puts mass where `q` has none.
pub fn kl_divergence<T: Scalar>(p: &FiniteDist<T>, q: &FiniteDist<T>) -> Result<T> {
    if p.support != q.support || p.probs.len() != q.probs.len() {
        return Err(Error::SupportMismatch);
    }
    let mut kl = T::zero();
    for (a, b) in p.probs.iter().zip(&q.probs) {
        if *a > T::zero() {
            if *b <= T::zero() {
                return Ok(T::infinity());
            }
            kl = kl + *a * (*a / *b).ln();
        }
    }
    Ok(kl)
}

/// `I(C; S)` in nats, straight from the joint with `0 log 0 = 0`.
pub fn mutual_information<T: Scalar>(j: &DiscreteJoint<T>) -> T {
    let marginal = j.marginal();
    let p_c = j.p_c();
    let class_prob = [T::one() - p_c, p_c];
    let mut mi = T::zero();
    for (c, row) in j.mass.iter().enumerate() {
        for (p, ps) in row.iter().zip(&marginal.probs) {
            if *p > T::zero() {
                mi = mi + *p * (*p / (class_prob[c] * *ps)).ln();
            }
        }
    }
    // Rounding can leave a value like -1e-17 on an independent joint.
    mi.max(T::zero())
}

/// `I(C; S)` through `p_c KL(P+ ‖ M) + (1 − p_c) KL(P- ‖ M)` with `M = P(S)`.
/// Requires both classes to carry mass.
pub fn mutual_information_kl<T: Scalar>(j: &DiscreteJoint<T>) -> Result<T> {
    let m = j.marginal();
    let p_c = j.p_c();
    let pos = j.conditional(true)?;
    let neg = j.conditional(false)?;
    Ok(p_c * kl_divergence(&pos, &m)? + (T::one() - p_c) * kl_divergence(&neg, &m)?)
}

/// Binary entropy `h(λ)` in nats, with `h(0) = h(1) = 0`.
pub fn binary_entropy<T: Scalar>(lambda: T) -> Result<T> {
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::OutOfRange { what: "binary entropy argument", value: lambda.to_f64().unwrap_or(f64::NAN) });
    }
    let term = |x: T| if x > T::zero() { -x * x.ln() } else { T::zero() };
    Ok(term(lambda) + term(T::one() - lambda))
}

/// A numerically checked inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

impl<T: Scalar> BoundCheck<T> {
    fn new(lhs: T, rhs: T) -> Self {
        Self { lhs, rhs, holds: lhs <= rhs + T::lit(1e-12) }
    }

    /// `rhs − lhs`; nonnegative when the bound holds exactly.
    pub fn slack(&self) -> T {
        self.rhs - self.lhs
    }
}

fn require_two_classes<T: Scalar>(j: &DiscreteJoint<T>) -> Result<T> {
    let p_c = j.p_c();
    if !(p_c > T::zero() && p_c < T::one()) {
        return Err(Error::OutOfRange {
            what: "correctness prior (need 0 < p_c < 1)",
            value: p_c.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(p_c)
}

/// `|AUC − ½| <= sqrt(I(C; S) / (2 p_c (1 − p_c)))`.
pub fn prop1_bound<T: Scalar>(j: &DiscreteJoint<T>) -> Result<BoundCheck<T>> {
    let p_c = require_two_classes(j)?;
    let gap = (j.auc()? - T::half()).abs();
    let bound = (mutual_information(j) / (T::two() * p_c * (T::one() - p_c))).sqrt();
    Ok(BoundCheck::new(gap, bound))
}

/// `|AUC − ½| <= δ(P+, P-)`.
pub fn lemma1_check<T: Scalar>(j: &DiscreteJoint<T>) -> Result<BoundCheck<T>> {
    require_two_classes(j)?;
    let gap = (j.auc()? - T::half()).abs();
    let tv = tv_distance(&j.conditional(true)?, &j.conditional(false)?)?;
    Ok(BoundCheck::new(gap, tv))
}

/// `2 p_c (1 − p_c) δ(P+, P-)² <= I(C; S)`.
pub fn pinsker_check<T: Scalar>(j: &DiscreteJoint<T>) -> Result<BoundCheck<T>> {
    let p_c = require_two_classes(j)?;
    let tv = tv_distance(&j.conditional(true)?, &j.conditional(false)?)?;
    Ok(BoundCheck::new(T::two() * p_c * (T::one() - p_c) * tv * tv, mutual_information(j)))
}
