//! Entropy of the base system and summability of the `R` sequence.

use serde::Serialize;

use crate::error::Result;
use crate::finite_system::FiniteSystem;
use crate::scalar::{self, Scalar};
use crate::shift_system::ShiftSystem;
use crate::weights::CappedWeights;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    /// `H(xi^N) / N` for `N = 1..=horizon`, in nats.
    pub values: Vec<f64>,
    /// `H(p)` for a shift; `None` for a finite system.
    pub reference: Option<f64>,
    /// `log(n) / N` for a finite system.
    pub upper_bounds: Option<Vec<f64>>,
    pub within_bounds: bool,
}

pub fn shift_entropy_report<S: Scalar>(sys: &ShiftSystem<S>, horizon: usize, tol: f64) -> Result<EntropyReport> {
    let values = sys.ks_entropy(horizon)?;
    let reference = scalar::shannon_entropy(sys.p());
    let within_bounds = values.iter().all(|v| (v - reference).abs() <= tol);
    Ok(EntropyReport { values, reference: Some(reference), upper_bounds: None, within_bounds })
}

pub fn finite_entropy_report<S: Scalar>(
    sys: &FiniteSystem<S>,
    partition: &[Vec<usize>],
    horizon: usize,
) -> Result<EntropyReport> {
    let values = sys.ks_entropy(partition, horizon)?;
    let log_n = (sys.len() as f64).ln();
    let bounds: Vec<f64> = (1..=horizon).map(|n| log_n / n as f64).collect();
    let within_bounds = values.iter().zip(&bounds).all(|(v, b)| *v <= b + 1e-12);
    Ok(EntropyReport { values, reference: None, upper_bounds: Some(bounds), within_bounds })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RSummability<S: Scalar> {
    /// `R(1), ..., R(K)`.
    #[serde(serialize_with = "scalar::serialize_vec")]
    pub r: Vec<S>,
    #[serde(serialize_with = "scalar::serialize")]
    pub sum: S,
    pub geometric: Option<GeometricCheck<S>>,
}

/// For geometric weights `R(i) = ratio^i` below the cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricCheck<S: Scalar> {
    #[serde(serialize_with = "scalar::serialize")]
    pub ratio: S,
    #[serde(serialize_with = "scalar::serialize")]
    pub closed_form_sum: S,
    pub matches: bool,
    /// `ratio / (1 - ratio)`: the sum without a cap.
    pub uncapped_sum: f64,
}

pub fn r_summability_report<S: Scalar>(w: &CappedWeights<S>) -> RSummability<S> {
    let r: Vec<S> = (1..=w.cap).map(|i| w.tail(i).expect("index within cap")).collect();
    let sum = scalar::sum(&r);
    let geometric = w.geometric_ratio().map(|ratio| {
        let mut power = S::one();
        let mut closed_form_sum = S::zero();
        let mut matches = true;
        for (i, value) in r.iter().enumerate() {
            power *= ratio;
            let expected = if i + 1 < w.cap { power.clone() } else { S::zero() };
            matches &= value.close(&expected, scalar::WEIGHT_TOLERANCE);
            closed_form_sum += &expected;
        }
        matches &= sum.close(&closed_form_sum, scalar::WEIGHT_TOLERANCE);
        let rf = ratio.to_f64();
        GeometricCheck { ratio: ratio.clone(), closed_form_sum, matches, uncapped_sum: rf / (1.0 - rf) }
    });
    RSummability { r, sum, geometric }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_system::cycle;
    use crate::scalar::Rational;
    use crate::weights::{custom_weights, geometric_weights};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn geometric_half_cap_three() {
        let rep = r_summability_report(&geometric_weights(q(1, 2), 3).unwrap());
        assert_eq!(rep.r, vec![q(1, 2), q(1, 4), q(0, 1)]);
        assert_eq!(rep.sum, q(3, 4));
        let g = rep.geometric.unwrap();
        assert!(g.matches);
        assert_eq!(g.uncapped_sum, 1.0);
    }

    #[test]
    fn custom_weights_sum() {
        let rep = r_summability_report(&custom_weights(vec![q(4, 7), q(2, 7), q(1, 7)], 3).unwrap());
        assert!(rep.geometric.is_none());
        assert_eq!(rep.r.last(), Some(&q(0, 1)));
        assert_eq!(rep.sum, q(3, 4));
    }

    #[test]
    fn entropies() {
        let rep = shift_entropy_report(&ShiftSystem::<Rational>::fair_coin(), 8, 1e-12).unwrap();
        assert!(rep.within_bounds);
        assert!((rep.values[7] - std::f64::consts::LN_2).abs() < 1e-12);
        let sys = ShiftSystem::<Rational>::new(vec![q(1, 4), q(3, 4)]).unwrap();
        let rep = shift_entropy_report(&sys, 6, 1e-12).unwrap();
        let h = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        assert!((rep.reference.unwrap() - h).abs() < 1e-15 && rep.within_bounds);
        let c = cycle::<Rational>(5);
        let rep = finite_entropy_report(&c, &c.singleton_partition(), 10).unwrap();
        assert!(rep.within_bounds);
        assert!((rep.values[9] - 5f64.ln() / 10.0).abs() < 1e-12);
    }
}
