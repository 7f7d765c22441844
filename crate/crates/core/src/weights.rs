//! Level weights: the level measure `a`, the reset distribution `b`, and
//! the partial sums `S(i)` / tails `R(i)` of `b`.
//!
//! The sequences are truncated at a cap `K`. The reset weights use
//! `b_k = (a_k - a_{k+1}) / a_1` for `k < K` and close with
//! `b_K = a_K / a_1`, so `sum(b) = 1` and `a_1 b_k + a_{k+1} = a_k`
//! hold exactly at every index (with `a_{K+1} = 0`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar, WEIGHT_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightsKind<S: Scalar> {
    Geometric {
        #[serde(serialize_with = "scalar::serialize")]
        ratio: S,
    },
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CappedWeights<S: Scalar> {
    pub kind: WeightsKind<S>,
    pub cap: usize,
    #[serde(serialize_with = "scalar::serialize_vec")]
    a: Vec<S>,
    #[serde(serialize_with = "scalar::serialize_vec")]
    b: Vec<S>,
    mode: &'static str,
}

/// `a_k` proportional to `ratio^(k-1)`, normalized over `k = 1..=cap`.
pub fn geometric_weights<S: Scalar>(ratio: S, cap: usize) -> Result<CappedWeights<S>> {
    if !(ratio > S::zero() && ratio < S::one()) {
        return Err(Error::InvalidParameter { name: "ratio", reason: format!("{} is outside (0, 1)", ratio.render()) });
    }
    if cap < 2 {
        return Err(Error::InvalidParameter { name: "cap", reason: format!("{cap} < 2") });
    }
    let mut powers = Vec::with_capacity(cap);
    let mut p = S::one();
    for _ in 0..cap {
        powers.push(p.clone());
        p *= &ratio;
    }
    let total = scalar::sum(&powers);
    let a: Vec<S> = powers.iter().map(|x| x.div_ref(&total)).collect();
    let w = CappedWeights::from_validated(a, WeightsKind::Geometric { ratio });
    w.check()?;
    Ok(w)
}

/// Validates a user-supplied level measure. Never renormalizes.
pub fn custom_weights<S: Scalar>(a: Vec<S>, cap: usize) -> Result<CappedWeights<S>> {
    if cap == 0 {
        return Err(Error::InvalidParameter { name: "cap", reason: "cap must be positive".into() });
    }
    if a.len() != cap {
        return Err(Error::LengthMismatch { expected: cap, got: a.len() });
    }
    let w = CappedWeights::from_validated(a, WeightsKind::Custom);
    w.check()?;
    Ok(w)
}

impl<S: Scalar> CappedWeights<S> {
    fn from_validated(a: Vec<S>, kind: WeightsKind<S>) -> Self {
        let cap = a.len();
        let b = reset_weights(&a);
        CappedWeights { kind, cap, a, b, mode: S::MODE }
    }

    fn check(&self) -> Result<()> {
        if let Some(index) = self.a.iter().position(|x| !x.is_strictly_positive()) {
            return Err(Error::NonPositiveWeight { index });
        }
        if let Some(index) =
            self.a.windows(2).position(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::NotDecreasing { index: index + 1 });
        }
        let total = scalar::sum(&self.a);
        if !total.close(&S::one(), WEIGHT_TOLERANCE) {
            return Err(Error::NotNormalized { sum: total.render() });
        }
        Ok(())
    }

    /// Level measure `m({k}) = a_k`, 0-based storage for `k = 1..=cap`.
    pub fn a(&self) -> &[S] {
        &self.a
    }

    /// Reset distribution `b_k`, 0-based storage.
    pub fn b(&self) -> &[S] {
        &self.b
    }

    /// `a_k` for 1-based `k`.
    pub fn level_mass(&self, k: usize) -> &S {
        &self.a[k - 1]
    }

    /// `b_k` for 1-based `k`.
    pub fn reset(&self, k: usize) -> &S {
        &self.b[k - 1]
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i > self.cap {
            Err(Error::IndexOutOfRange { index: i, max: self.cap })
        } else {
            Ok(())
        }
    }

    /// `S(i) = b_1 + ... + b_i`.
    pub fn partial_sum(&self, i: usize) -> Result<S> {
        self.check_index(i)?;
        Ok(scalar::sum(&self.b[..i]))
    }

    /// `R(i) = b_{i+1} + ... + b_K`; zero at `i = K`.
    pub fn tail(&self, i: usize) -> Result<S> {
        self.check_index(i)?;
        Ok(scalar::sum(&self.b[i..]))
    }

    /// `R(i) + R(i+1) + ... + R(K)`.
    pub fn tail_of_tails(&self, i: usize) -> Result<S> {
        self.check_index(i)?;
        let mut acc = S::zero();
        for j in i..=self.cap {
            acc += &self.tail(j)?;
        }
        Ok(acc)
    }

    /// Indices `k` (1-based) where `a_1 b_k + a_{k+1} != a_k`.
    pub fn telescoping_defects(&self, tol: f64) -> Vec<usize> {
        (0..self.cap)
            .filter(|&k| {
                let mut lhs = self.a[0].mul_ref(&self.b[k]);
                if let Some(next) = self.a.get(k + 1) {
                    lhs += next;
                }
                !lhs.close(&self.a[k], tol)
            })
            .map(|k| k + 1)
            .collect()
    }

    pub fn geometric_ratio(&self) -> Option<&S> {
        match &self.kind {
            WeightsKind::Geometric { ratio } => Some(ratio),
            WeightsKind::Custom => None,
        }
    }
}

fn reset_weights<S: Scalar>(a: &[S]) -> Vec<S> {
    let first = a[0].clone();
    (0..a.len())
        .map(|k| match a.get(k + 1) {
            Some(next) => a[k].sub_ref(next).div_ref(&first),
            None => a[k].div_ref(&first),
        })
        .collect()
}
