//! Verifiers for the structural theorems about exploding operators.

mod comparison;
mod entropy;
mod ergodicity;
mod factors;
mod lemma;
pub mod linalg;
mod simulation;
mod stochastic;

pub use comparison::{compare_definition_example, ComparisonReport, Verdict, WitnessRow, WitnessTable};
pub use entropy::{finite_entropy_report, r_summability_report, shift_entropy_report, EntropyReport, RSummability};
pub use ergodicity::{ergodicity_report, invariant_indicator_witness, ErgodicityReport, InvariantWitness};
pub use factors::{finite_factor_report, shift_factor_report, FiniteFactorReport, SetWitness, ShiftFactorReport};
pub use lemma::{lemma_bound_table, LemmaBoundRow, LemmaTable};
pub use simulation::{stationarity_and_birkhoff, Observable, OccupancyRow, SimulationReport};
pub use stochastic::{check_doubly_stochastic, check_kernel, AxiomCheck, StochasticReport};

use crate::scalar::{Scalar, OPERATOR_TOLERANCE};

/// Zero exactly (rationals) or within the operator tolerance (floats).
pub(crate) fn negligible<S: Scalar>(v: &S) -> bool {
    if S::EXACT {
        v.is_zero()
    } else {
        v.to_f64().abs() <= OPERATOR_TOLERANCE
    }
}
