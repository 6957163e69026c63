//! Two-response worlds in which a predictive-entropy proxy carries a chosen
//! amount of information about correctness, with exact joints over
//! `(C, S)` and numerical checks of the resulting bounds.

use std::io::Write;
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{binary_entropy, mutual_information, DiscreteJoint};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

/// Largest number of `(C, S)` support points a world may enumerate.
pub const MAX_SUPPORT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Sum,
    Mean,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Self::Sum),
            "mean" => Ok(Self::Mean),
            other => Err(Error::InvalidConfig(format!("unknown aggregation `{other}` (expected sum or mean)"))),
        }
    }
}

/// One query with a correct and a wrong response that share a per-step
/// entropy profile: zero everywhere except `ln 2` at the first divergent
/// position `tau` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Query<T> {
    pub length: usize,
    pub tau: usize,
    pub profile: Vec<T>,
}

impl<T: Scalar> Query<T> {
    pub fn new(length: usize, tau: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::InvalidConfig("response length must be positive".into()));
        }
        if tau == 0 || tau > length {
            return Err(Error::InvalidConfig(format!("divergence position {tau} outside 1..={length}")));
        }
        let mut profile = vec![T::zero(); length];
        profile[tau - 1] = T::LN_2();
        Ok(Self { length, tau, profile })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TwoResponseWorld<T> {
    pub queries: Vec<Query<T>>,
    /// Extra entropy the wrong response carries under the informative
    /// component.
    pub informative_bonus: T,
    pub seed: u64,
}

impl<T: Scalar> TwoResponseWorld<T> {
    pub fn from_queries(queries: Vec<Query<T>>, informative_bonus: T, seed: u64) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::EmptyInput("a world needs at least one query"));
        }
        if 2 * queries.len() > MAX_SUPPORT {
            return Err(Error::InvalidConfig(format!("{} queries exceed the {MAX_SUPPORT}-point support cap", queries.len())));
        }
        if !(informative_bonus >= T::zero()) || !informative_bonus.is_finite() {
            return Err(Error::OutOfRange { what: "informative bonus", value: informative_bonus.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { queries, informative_bonus, seed })
    }

    pub fn with_bonus(self, bonus: T) -> Result<Self> {
        Self::from_queries(self.queries, bonus, self.seed)
    }
}

/// `n_queries` queries with lengths uniform in `length_range` and the
/// divergence position uniform in `1..=length`. The bonus starts at zero.
pub fn build_base_world<T: Scalar>(n_queries: usize, length_range: RangeInclusive<usize>, seed: u64) -> Result<TwoResponseWorld<T>> {
    if n_queries == 0 {
        return Err(Error::EmptyInput("a world needs at least one query"));
    }
    if *length_range.start() == 0 || length_range.is_empty() {
        return Err(Error::InvalidConfig("response lengths must be a nonempty range of positive integers".into()));
    }
    let mut rng = stream_rng(seed, Stream::World);
    let queries = (0..n_queries)
        .map(|_| {
            let length = rng.random_range(length_range.clone());
            Query::new(length, rng.random_range(1..=length))
        })
        .collect::<Result<Vec<_>>>()?;
    TwoResponseWorld::from_queries(queries, T::zero(), seed)
}

/// Sum or mean of a per-step entropy profile.
pub fn predictive_entropy<T: Scalar>(profile: &[T], mode: Aggregation) -> Result<T> {
    if profile.is_empty() {
        return Err(Error::EmptyInput("entropy profile is empty"));
    }
    if profile.iter().any(|h| !(*h >= T::zero()) || !h.is_finite()) {
        return Err(Error::InvalidConfig("entropy profile entries must be finite and nonnegative".into()));
    }
    let total: T = profile.iter().copied().sum();
    Ok(match mode {
        Aggregation::Sum => total,
        Aggregation::Mean => total / T::from_count(profile.len()),
    })
}

fn enumerate<T: Scalar>(world: &TwoResponseWorld<T>, mode: Aggregation, bonus: T) -> Result<DiscreteJoint<T>> {
    let w = T::one() / T::from_count(2 * world.queries.len());
    let mut atoms = Vec::with_capacity(2 * world.queries.len());
    for q in &world.queries {
        let s0 = predictive_entropy(&q.profile, mode)?;
        atoms.push((s0, true, w));
        atoms.push((s0 + bonus, false, w));
    }
    DiscreteJoint::from_atoms(atoms)
}

/// Joint of `(C, S)` under the base component: queries uniform, both
/// responses equiprobable, identical proxy values.
pub fn base_joint<T: Scalar>(world: &TwoResponseWorld<T>, mode: Aggregation) -> Result<DiscreteJoint<T>> {
    enumerate(world, mode, T::zero())
}

/// Joint under the informative component: the wrong response's proxy is the
/// base value plus the bonus.
pub fn informative_joint<T: Scalar>(world: &TwoResponseWorld<T>, mode: Aggregation) -> Result<DiscreteJoint<T>> {
    enumerate(world, mode, world.informative_bonus)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MixtureSpec<T> {
    pub lambda: T,
    pub world: TwoResponseWorld<T>,
}

impl<T: Scalar> MixtureSpec<T> {
    pub fn new(lambda: T, world: TwoResponseWorld<T>) -> Result<Self> {
        if !(lambda >= T::zero() && lambda <= T::one()) {
            return Err(Error::OutOfRange { what: "mixture weight", value: lambda.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { lambda, world })
    }
}

/// `(1 − λ)·base + λ·informative` on the union support.
pub fn mixture_joint<T: Scalar>(spec: &MixtureSpec<T>, mode: Aggregation) -> Result<DiscreteJoint<T>> {
    DiscreteJoint::mixture(&base_joint(&spec.world, mode)?, &informative_joint(&spec.world, mode)?, spec.lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop2Row<T> {
    pub lambda: T,
    /// `I(C; S)` of the mixture.
    pub mi: T,
    /// `h(λ) + λ ln 2`.
    pub budget: T,
    pub auc_gap: T,
    /// `sqrt(I / (2 p_c (1 − p_c)))`.
    pub auc_bound: T,
    pub holds: bool,
}

/// Information budget and AUC gap of one mixture.
pub fn verify_prop2<T: Scalar>(spec: &MixtureSpec<T>, mode: Aggregation) -> Result<Prop2Row<T>> {
    let joint = mixture_joint(spec, mode)?;
    let p_c = joint.p_c();
    if !(p_c > T::zero() && p_c < T::one()) {
        return Err(Error::OutOfRange { what: "correctness prior (need 0 < p_c < 1)", value: p_c.to_f64().unwrap_or(f64::NAN) });
    }
    let mi = mutual_information(&joint);
    let budget = binary_entropy(spec.lambda)? + spec.lambda * T::LN_2();
    let auc_gap = (joint.auc()? - T::half()).abs();
    let auc_bound = (mi / (T::two() * p_c * (T::one() - p_c))).sqrt();
    let eps = T::lit(1e-12);
    Ok(Prop2Row { lambda: spec.lambda, mi, budget, auc_gap, auc_bound, holds: mi <= budget + eps && auc_gap <= auc_bound + eps })
}

/// One row per λ on a shared world.
pub fn prop2_sweep<T: Scalar>(world: &TwoResponseWorld<T>, lambdas: &[T], mode: Aggregation) -> Result<Vec<Prop2Row<T>>> {
    lambdas.iter().map(|&l| verify_prop2(&MixtureSpec::new(l, world.clone())?, mode)).collect()
}

/// CSV with header `lambda,I,budget,auc_gap,auc_bound,holds`.
pub fn write_sweep_csv<T: Scalar, W: Write>(rows: &[Prop2Row<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(["lambda", "I", "budget", "auc_gap", "auc_bound", "holds"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.lambda.to_string(),
            r.mi.to_string(),
            r.budget.to_string(),
            r.auc_gap.to_string(),
            r.auc_bound.to_string(),
            r.holds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::prop1_bound;
    use std::f64::consts::LN_2;

    #[test]
    fn profile_and_entropy() {
        let q = Query::<f64>::new(3, 2).unwrap();
        assert_eq!(q.profile, vec![0.0, LN_2, 0.0]);
        assert_eq!(predictive_entropy(&q.profile, Aggregation::Sum).unwrap(), LN_2);
        assert_eq!(predictive_entropy(&q.profile, Aggregation::Mean).unwrap(), LN_2 / 3.0);
        assert_eq!(predictive_entropy(&[0.0f64; 4], Aggregation::Sum).unwrap(), 0.0);
        assert!(predictive_entropy::<f64>(&[], Aggregation::Sum).is_err());
        assert!(Query::<f64>::new(3, 4).is_err());
        assert!(Query::<f64>::new(3, 0).is_err());
    }

    #[test]
    fn base_world_is_seeded() {
        let a: TwoResponseWorld<f64> = build_base_world(20, 1..=8, 3).unwrap();
        assert_eq!(a, build_base_world(20, 1..=8, 3).unwrap());
        assert_ne!(a, build_base_world(20, 1..=8, 4).unwrap());
        for q in &a.queries {
            assert!((1..=8).contains(&q.length) && (1..=q.length).contains(&q.tau));
        }
        for mode in [Aggregation::Sum, Aggregation::Mean] {
            let j = base_joint(&a, mode).unwrap();
            assert!(mutual_information(&j).abs() < 1e-12);
            assert!((j.p_c() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_query_informative() {
        let w = TwoResponseWorld::from_queries(vec![Query::new(3, 2).unwrap()], 3f64.ln(), 0).unwrap();
        let j = informative_joint(&w, Aggregation::Sum).unwrap();
        assert_eq!(j.support().len(), 2);
        assert!((mutual_information(&j) - LN_2).abs() < 1e-12);
        let row = verify_prop2(&MixtureSpec::new(1.0, w.clone()).unwrap(), Aggregation::Sum).unwrap();
        assert!((row.mi - LN_2).abs() < 1e-12);
        assert_eq!(row.budget, LN_2);
        assert!(row.holds);
        let zero = w.with_bonus(0.0).unwrap();
        assert!(mutual_information(&informative_joint(&zero, Aggregation::Mean).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mixture_endpoints_and_midpoint() {
        let w = build_base_world::<f64>(10, 2..=6, 1).unwrap().with_bonus(0.7).unwrap();
        let base = base_joint(&w, Aggregation::Mean).unwrap();
        let inf = informative_joint(&w, Aggregation::Mean).unwrap();
        assert!(inf.support().len() <= 20);
        let m0 = mixture_joint(&MixtureSpec::new(0.0, w.clone()).unwrap(), Aggregation::Mean).unwrap();
        assert!(mutual_information(&m0).abs() < 1e-12);
        let m1 = mixture_joint(&MixtureSpec::new(1.0, w.clone()).unwrap(), Aggregation::Mean).unwrap();
        assert_eq!(m1.atoms().filter(|a| a.2 > 0.0).collect::<Vec<_>>(), inf.atoms().filter(|a| a.2 > 0.0).collect::<Vec<_>>());
        let half = mixture_joint(&MixtureSpec::new(0.5, w).unwrap(), Aggregation::Mean).unwrap();
        let total: f64 = half.atoms().map(|a| a.2).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mass_at = |j: &DiscreteJoint<f64>, s: f64, c: bool| j.atoms().filter(|a| a.0 == s && a.1 == c).map(|a| a.2).sum::<f64>();
        for (s, c, p) in half.atoms() {
            assert!((p - 0.5 * (mass_at(&base, s, c) + mass_at(&inf, s, c))).abs() < 1e-15);
        }
    }

    #[test]
    fn gap_vanishes_with_lambda() {
        let w = build_base_world::<f64>(50, 1..=10, 7).unwrap().with_bonus(3f64.ln()).unwrap();
        let lambdas = [0.5, 0.1, 0.01, 0.001, 0.0];
        for mode in [Aggregation::Sum, Aggregation::Mean] {
            let rows = prop2_sweep(&w, &lambdas, mode).unwrap();
            assert!(rows.iter().all(|r| r.holds));
            assert!(rows.windows(2).all(|p| p[1].auc_gap <= p[0].auc_gap));
            assert!(rows[4].auc_gap < 1e-12);
            for l in lambdas.iter().copied().filter(|l| *l > 0.0) {
                let j = mixture_joint(&MixtureSpec::new(l, w.clone()).unwrap(), mode).unwrap();
                assert!(prop1_bound(&j).unwrap().holds);
            }
        }
    }

    #[test]
    fn sweep_csv_header() {
        let w = build_base_world::<f64>(2, 1..=3, 0).unwrap().with_bonus(1.0).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&prop2_sweep(&w, &[0.0], Aggregation::Sum).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "lambda,I,budget,auc_gap,auc_bound,holds\n0,0,0,0,0,true\n");
    }

    #[test]
    fn guards() {
        assert!(build_base_world::<f64>(0, 1..=3, 0).is_err());
        assert!(build_base_world::<f64>(5001, 1..=3, 0).is_err());
        let w = build_base_world::<f64>(2, 1..=3, 0).unwrap();
        assert!(w.clone().with_bonus(-1.0).is_err());
        assert!(MixtureSpec::new(1.5, w).is_err());
    }
}
