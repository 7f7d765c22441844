//! Discrepancy between the operator and pure transport on `T^-i A x levels`.
//!
//! For `g_i = 1_A o T^i` and the level function `G_i = (g_i, ..., g_i)`,
//! `Ex^n G_i` is compared with `G_{i+n}` in sup norm and bounded by
//! `R(i) + R(i+1) + ... + R(K)`, the capped tail of the `R` sequence. The
//! sharper per-step bound `R(i) + ... + R(i+n-1)` is recorded alongside.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::operator::{ExplodingOperator, LevelFunction};
use crate::scalar::{self, Scalar};
use crate::shift_system::{CylinderFunction, ShiftSystem};
use crate::weights::CappedWeights;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaBoundRow<S: Scalar> {
    pub i: usize,
    pub n: usize,
    #[serde(serialize_with = "scalar::serialize")]
    pub lhs: S,
    #[serde(serialize_with = "scalar::serialize")]
    pub bound: S,
    #[serde(serialize_with = "scalar::serialize")]
    pub margin: S,
    #[serde(serialize_with = "scalar::serialize")]
    pub stepwise_bound: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaTable<S: Scalar> {
    pub word: String,
    pub cap: usize,
    pub i_max: usize,
    pub n_max: usize,
    /// Rows for `1 <= i <= i_max`, `1 <= n <= n_max`, `i`-major.
    pub rows: Vec<LemmaBoundRow<S>>,
    /// Rows for `i = K, K + 1`, where transport is exact.
    pub beyond_cap: Vec<LemmaBoundRow<S>>,
    pub margins_nonnegative: bool,
    pub stepwise_holds: bool,
    pub lhs_nonincreasing_in_i: bool,
    pub zero_beyond_cap: bool,
}

impl<S: Scalar> LemmaTable<S> {
    pub fn passed(&self) -> bool {
        self.margins_nonnegative && self.lhs_nonincreasing_in_i && self.zero_beyond_cap
    }

    /// CSV with header `i,n,lhs,bound,margin` over the main grid.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "n", "lhs", "bound", "margin"])?;
        for r in &self.rows {
            w.write_record([r.i.to_string(), r.n.to_string(), r.lhs.render(), r.bound.render(), r.margin.render()])?;
        }
        w.flush()
    }
}

/// `R(j)`, zero from the cap on.
fn r<S: Scalar>(w: &CappedWeights<S>, j: usize) -> S {
    if j >= w.cap {
        S::zero()
    } else {
        w.tail(j).expect("index below cap")
    }
}

fn rows_for<S: Scalar>(
    op: &ExplodingOperator<S, ShiftSystem<S>>,
    word: &[usize],
    i: usize,
    n_max: usize,
) -> Result<Vec<LemmaBoundRow<S>>> {
    let sys = op.backend();
    let w = op.weights();
    let mut g = CylinderFunction::indicator(sys.alphabet(), word)?;
    for _ in 0..i {
        g = sys.koopman(&g)?;
    }
    let bound = (i..=w.cap).map(|j| r(w, j)).fold(S::zero(), |acc, v| acc.add_ref(&v));
    let mut current = LevelFunction::new(vec![g.clone(); op.cap()]);
    let mut target = g;
    let mut stepwise = S::zero();
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        current = op.iterate(&current, 1).map_err(|e| match e {
            crate::error::Error::IterationBudgetExceeded { depth, budget, .. } => {
                crate::error::Error::IterationBudgetExceeded { step: n, depth, budget }
            }
            other => other,
        })?;
        target = sys.koopman(&target)?;
        stepwise += &r(w, i + n - 1);
        let lhs = op.sup_distance(&current, &LevelFunction::new(vec![target.clone(); op.cap()]))?;
        let margin = bound.sub_ref(&lhs);
        rows.push(LemmaBoundRow { i, n, lhs, bound: bound.clone(), margin, stepwise_bound: stepwise.clone() });
    }
    Ok(rows)
}

/// Exact table of sup-norm discrepancies; rows are computed in parallel over `i`.
pub fn lemma_bound_table<S: Scalar>(
    op: &ExplodingOperator<S, ShiftSystem<S>>,
    word: &[usize],
    i_max: usize,
    n_max: usize,
) -> Result<LemmaTable<S>> {
    let cap = op.cap();
    let grid: Vec<Vec<LemmaBoundRow<S>>> =
        (1..=i_max).into_par_iter().map(|i| rows_for(op, word, i, n_max)).collect::<Result<_>>()?;
    let beyond: Vec<Vec<LemmaBoundRow<S>>> =
        (cap..=cap + 1).into_par_iter().map(|i| rows_for(op, word, i, n_max)).collect::<Result<_>>()?;

    let rows: Vec<LemmaBoundRow<S>> = grid.iter().flatten().cloned().collect();
    let beyond_cap: Vec<LemmaBoundRow<S>> = beyond.into_iter().flatten().collect();
    let margins_nonnegative = rows.iter().chain(&beyond_cap).all(|r| !r.margin.is_negative());
    let stepwise_holds = rows.iter().chain(&beyond_cap).all(|r| r.lhs <= r.stepwise_bound);
    let lhs_nonincreasing_in_i = grid.windows(2).all(|pair| pair[0].iter().zip(&pair[1]).all(|(a, b)| b.lhs <= a.lhs));
    let zero_beyond_cap = beyond_cap.iter().all(|r| r.lhs.is_zero() && r.bound.is_zero())
        && rows.iter().filter(|r| r.i >= cap).all(|r| r.lhs.is_zero());
    Ok(LemmaTable {
        word: crate::shift_system::render_word(word),
        cap,
        i_max,
        n_max,
        rows,
        beyond_cap,
        margins_nonnegative,
        stepwise_holds,
        lhs_nonincreasing_in_i,
        zero_beyond_cap,
    })
}
