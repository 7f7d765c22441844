//! Four independent ergodicity tests on a finite-backend operator.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use super::linalg;
use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::finite_system::FiniteSystem;
use crate::operator::{ExplodingOperator, KernelMatrix, LevelFunction};
use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErgodicityReport {
    pub states: usize,
    /// `dim ker(P - I)` on functions.
    pub eig_multiplicity: usize,
    pub scc_irreducible: bool,
    /// `sum_{m=1}^{nK} P^m 1_s > 0` everywhere, for every state `s`.
    pub sum_positivity: bool,
    pub map_ergodic: bool,
    pub map_cycles: usize,
    pub agree: bool,
}

pub fn ergodicity_report<S: Scalar, B: Backend<S>>(op: &ExplodingOperator<S, B>) -> Result<ErgodicityReport> {
    let sys = op.backend().as_finite().ok_or(Error::Unsupported("ergodicity report needs the finite backend"))?;
    let matrix = op.to_matrix()?;
    let states = matrix.state_count();

    let mut shifted = matrix.dense();
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] -= &S::one();
    }
    let eig_multiplicity = linalg::nullity(shifted);
    let scc_irreducible = strongly_connected(&matrix);
    let sum_positivity = sum_positive(&matrix);
    let cycles = sys.cycle_decomposition();

    let verdicts = [eig_multiplicity == 1, scc_irreducible, sum_positivity, cycles.ergodic];
    Ok(ErgodicityReport {
        states,
        eig_multiplicity,
        scc_irreducible,
        sum_positivity,
        map_ergodic: cycles.ergodic,
        map_cycles: cycles.cycles.len(),
        agree: verdicts.iter().all(|&v| v == verdicts[0]),
    })
}

fn strongly_connected<S: Scalar>(matrix: &KernelMatrix<S>) -> bool {
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..matrix.state_count()).map(|_| graph.add_node(())).collect();
    for (i, row) in matrix.rows.iter().enumerate() {
        for e in row.targets.iter().filter(|e| e.prob.is_strictly_positive()) {
            graph.add_edge(nodes[i], nodes[matrix.index_of(e.to)], ());
        }
    }
    tarjan_scc(&graph).len() == 1
}

/// The sum has nonnegative terms, so its positivity is decided by supports;
/// iterating the support avoids underflow from tiny reset weights.
fn sum_positive<S: Scalar>(matrix: &KernelMatrix<S>) -> bool {
    let n = matrix.state_count();
    let support: Vec<Vec<usize>> = matrix
        .rows
        .iter()
        .map(|row| {
            row.targets.iter().filter(|e| e.prob.is_strictly_positive()).map(|e| matrix.index_of(e.to)).collect()
        })
        .collect();
    (0..n).all(|s| {
        let mut current = vec![false; n];
        current[s] = true;
        let mut total = vec![false; n];
        for _ in 0..n {
            // (P g)(y) > 0 iff g > 0 somewhere in the support of row y.
            current = support.iter().map(|targets| targets.iter().any(|&t| current[t])).collect();
            for (acc, c) in total.iter_mut().zip(&current) {
                *acc |= c;
            }
        }
        total.iter().all(|&v| v)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantWitness<S: Scalar> {
    pub set: Vec<usize>,
    #[serde(serialize_with = "scalar::serialize")]
    pub measure: S,
    /// `1_{A x levels}`, one section per level.
    #[serde(serialize_with = "serialize_levels")]
    pub function: LevelFunction<Vec<S>>,
    pub invariant: bool,
    pub nonconstant: bool,
}

fn serialize_levels<S: Scalar, Ser: serde::Serializer>(
    f: &LevelFunction<Vec<S>>,
    ser: Ser,
) -> std::result::Result<Ser::Ok, Ser::Error> {
    let levels: Vec<Vec<serde_json::Value>> =
        f.levels.iter().map(|g| g.iter().map(scalar::to_json).collect()).collect();
    levels.serialize(ser)
}

/// `1_{A x levels}` for a `T`-invariant set `A` of intermediate measure,
/// with `Ex 1_{A x levels} = 1_{A x levels}` checked.
pub fn invariant_indicator_witness<S: Scalar>(
    op: &ExplodingOperator<S, FiniteSystem<S>>,
    set: &[usize],
) -> Result<InvariantWitness<S>> {
    let sys = op.backend();
    let g = sys.indicator(set)?;
    for x in 0..sys.len() {
        if g[x] != g[sys.map()[x]] {
            return Err(Error::NotInvariant { point: x });
        }
    }
    let measure = sys.measure_of(set);
    if measure.is_zero() || measure.is_one() {
        return Err(Error::TrivialSet);
    }
    let f = LevelFunction::new(vec![g; op.cap()]);
    let invariant = op.apply(&f)? == f;
    let mut set: Vec<usize> = set.to_vec();
    set.sort_unstable();
    set.dedup();
    Ok(InvariantWitness { set, measure, function: f, invariant, nonconstant: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_system::{cycle, identity};
    use crate::scalar::Rational;
    use crate::weights::{custom_weights, geometric_weights};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn two_two_cycles() -> ExplodingOperator<Rational, FiniteSystem<Rational>> {
        let sys = FiniteSystem::new(vec![q(1, 4); 4], vec![1, 0, 3, 2]).unwrap();
        ExplodingOperator::build(sys, custom_weights(vec![q(2, 3), q(1, 3)], 2).unwrap())
    }

    #[test]
    fn eight_cycle_is_ergodic() {
        let op = ExplodingOperator::build(cycle::<Rational>(8), geometric_weights(q(1, 2), 5).unwrap());
        let r = ergodicity_report(&op).unwrap();
        assert_eq!(
            (r.eig_multiplicity, r.scc_irreducible, r.sum_positivity, r.map_ergodic, r.agree),
            (1, true, true, true, true)
        );
    }

    #[test]
    fn two_cycles_are_not() {
        let r = ergodicity_report(&two_two_cycles()).unwrap();
        assert_eq!(r.eig_multiplicity, 2);
        assert!(!r.scc_irreducible && !r.sum_positivity && !r.map_ergodic && r.agree);
    }

    #[test]
    fn single_point_and_identity() {
        let op = ExplodingOperator::build(identity::<Rational>(1), geometric_weights(q(1, 3), 3).unwrap());
        assert!(ergodicity_report(&op).unwrap().map_ergodic);
        let op = ExplodingOperator::build(identity::<Rational>(3), geometric_weights(q(1, 3), 3).unwrap());
        let r = ergodicity_report(&op).unwrap();
        assert_eq!(r.eig_multiplicity, 3);
        assert!(r.agree);
        let op = ExplodingOperator::build(identity::<f64>(3), geometric_weights(0.25, 4).unwrap());
        assert_eq!(ergodicity_report(&op).unwrap().eig_multiplicity, 3);
    }

    #[test]
    fn invariant_witness() {
        let op = two_two_cycles();
        let w = invariant_indicator_witness(&op, &[1, 0]).unwrap();
        assert!(w.invariant && w.nonconstant);
        assert_eq!(w.measure, q(1, 2));
        assert_eq!(w.set, vec![0, 1]);
        assert_eq!(invariant_indicator_witness(&op, &[0, 1, 2, 3]).unwrap_err(), Error::TrivialSet);
        assert_eq!(invariant_indicator_witness(&op, &[]).unwrap_err(), Error::TrivialSet);
        assert_eq!(invariant_indicator_witness(&op, &[0, 2]).unwrap_err(), Error::NotInvariant { point: 0 });
    }
}
