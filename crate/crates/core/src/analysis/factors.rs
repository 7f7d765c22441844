//! Pointwise factors: the tail-equivalence quotient.

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_system::FiniteSystem;
use crate::operator::{ExplodingOperator, LevelFunction};
use crate::scalar::{self, Scalar};
use crate::shift_system::{render_word, CylinderFunction, ShiftSystem, TailWitness};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteFactorReport<S: Scalar> {
    pub trivial_quotient: bool,
    pub classes: Vec<Vec<usize>>,
    #[serde(serialize_with = "scalar::serialize_vec")]
    pub class_measures: Vec<S>,
    /// A union of classes with measure strictly between 0 and 1.
    pub witness: Option<Vec<usize>>,
    /// `Ex (g o pi) = (g o T~) o pi` for every class indicator `g`, where
    /// `pi(x, k) = [x]`.
    pub embedding_verified: bool,
}

pub fn finite_factor_report<S: Scalar>(op: &ExplodingOperator<S, FiniteSystem<S>>) -> Result<FiniteFactorReport<S>> {
    let sys = op.backend();
    let classes = sys.equivalence_classes();
    let class_measures: Vec<S> = classes.iter().map(|c| sys.measure_of(c)).collect();
    let trivial_quotient = class_measures.iter().any(One::is_one);
    let witness = if trivial_quotient { None } else { Some(classes[0].clone()) };

    let mut class_of = vec![0; sys.len()];
    for (c, members) in classes.iter().enumerate() {
        for &x in members {
            class_of[x] = c;
        }
    }
    // The quotient map: images of a class all lie in one class.
    let quotient_map: Vec<usize> = classes.iter().map(|c| class_of[sys.map()[c[0]]]).collect();
    let mut embedding_verified = true;
    for c in 0..classes.len() {
        let lift = |target: usize| -> Vec<S> {
            class_of.iter().map(|&d| if d == target { S::one() } else { S::zero() }).collect()
        };
        let f = LevelFunction::new(vec![lift(c); op.cap()]);
        // g o T~ is the indicator of the preimage classes of c.
        let pulled: Vec<S> =
            class_of.iter().map(|&d| if quotient_map[d] == c { S::one() } else { S::zero() }).collect();
        if op.apply(&f)? != LevelFunction::new(vec![pulled; op.cap()]) {
            embedding_verified = false;
        }
    }
    Ok(FiniteFactorReport { trivial_quotient, classes, class_measures, witness, embedding_verified })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetWitness {
    pub depth: usize,
    /// Table of the 0/1 set as a string of digits, first coordinate most significant.
    pub set: String,
    pub constant: bool,
    pub inside: Option<String>,
    pub outside: Option<String>,
    pub tails_checked: usize,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftFactorReport {
    /// Every `~`-invariant set is null or conull for a Bernoulli shift.
    pub trivial_quotient: bool,
    pub sets: Vec<SetWitness>,
    pub all_verified: bool,
}

const TAILS: usize = 8;

/// For each cylinder set, a tail-equivalent pair it separates, verified on
/// several continuations. Constant sets need no witness and are recorded as such.
pub fn shift_factor_report<S: Scalar>(
    sys: &ShiftSystem<S>,
    sets: &[CylinderFunction<S>],
    seed: u64,
) -> Result<ShiftFactorReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(sets.len());
    for set in sets {
        let table: String = set.table.iter().map(|v| if v.is_one() { '1' } else { '0' }).collect();
        match sys.tail_class_witness(set) {
            Ok(w) => {
                let tails: Vec<Vec<usize>> = (0..TAILS)
                    .map(|_| (0..rng.random_range(0..6)).map(|_| rng.random_range(0..sys.alphabet())).collect())
                    .collect();
                let verified = tails.iter().all(|t| w.verify(set, t));
                let TailWitness { inside, outside } = w;
                out.push(SetWitness {
                    depth: set.depth,
                    set: table,
                    constant: false,
                    inside: Some(render_word(&inside)),
                    outside: Some(render_word(&outside)),
                    tails_checked: TAILS,
                    verified,
                });
            }
            Err(Error::NoWitness) => out.push(SetWitness {
                depth: set.depth,
                set: table,
                constant: true,
                inside: None,
                outside: None,
                tails_checked: 0,
                verified: true,
            }),
            Err(e) => return Err(e),
        }
    }
    let all_verified = out.iter().all(|s| s.verified);
    Ok(ShiftFactorReport { trivial_quotient: true, sets: out, all_verified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_system::{cycle, identity};
    use crate::scalar::Rational;
    use crate::weights::geometric_weights;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn eight_cycle_has_nontrivial_quotient() {
        let op = ExplodingOperator::build(cycle::<Rational>(8), geometric_weights(q(1, 2), 5).unwrap());
        let r = finite_factor_report(&op).unwrap();
        assert!(!r.trivial_quotient && r.embedding_verified);
        assert_eq!(r.classes.len(), 8);
        assert_eq!(r.witness, Some(vec![0]));
    }

    #[test]
    fn one_point_quotient_is_trivial() {
        let op = ExplodingOperator::build(identity::<Rational>(1), geometric_weights(q(1, 2), 2).unwrap());
        let r = finite_factor_report(&op).unwrap();
        assert!(r.trivial_quotient && r.witness.is_none() && r.embedding_verified);
    }

    #[test]
    fn fair_coin_first_symbol() {
        let sys = ShiftSystem::<Rational>::fair_coin();
        let set = CylinderFunction::indicator(2, &[1]).unwrap();
        let r = shift_factor_report(&sys, &[set, CylinderFunction::constant(2, q(1, 1))], 1).unwrap();
        assert!(r.trivial_quotient && r.all_verified);
        assert_eq!(r.sets[0].inside.as_deref(), Some("1"));
        assert_eq!(r.sets[0].outside.as_deref(), Some("0"));
        assert!(r.sets[1].constant);
    }

    #[test]
    fn every_depth_two_set_is_separated() {
        let sys = ShiftSystem::<Rational>::new(vec![q(1, 4), q(3, 4)]).unwrap();
        let sets: Vec<_> = (0u32..16)
            .map(|bits| CylinderFunction::new(2, 2, (0..4).map(|i| q(((bits >> i) & 1) as i64, 1)).collect()).unwrap())
            .collect();
        let r = shift_factor_report(&sys, &sets, 3).unwrap();
        assert!(r.all_verified);
        assert_eq!(r.sets.iter().filter(|s| s.constant).count(), 2);
    }
}
