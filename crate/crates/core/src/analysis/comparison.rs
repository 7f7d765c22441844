//! Level-1 formula of the operator versus the block-shift formula of the
//! classical fair-coin construction.
//!
//! The operator uses `sum_k b_k E_k f_k` where `E_k` averages `f o T` over
//! the first `k` coordinates. The block formula
//! `sum_k b_k sum_{|B| = k} p(B) f_k(sigma_B x)` with
//! `sigma_B x = (B, x_{k+2}, ...)` replaces all of `x_1..x_{k+1}`, which is
//! `E_{k+1}` rather than `E_k`. Both are computed and compared, together with
//! the reindexed sum `sum_k b_k E_{k+1} f_k`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::backend::Backend;
use crate::error::Result;
use crate::operator::{ExplodingOperator, LevelFunction};
use crate::scalar::{self, Scalar, OPERATOR_TOLERANCE};
use crate::shift_system::{index_word, render_word, CylinderFunction, ShiftSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Coincide,
    MatchUnderReindexing,
    Differ,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessRow<S: Scalar> {
    pub word: String,
    #[serde(serialize_with = "scalar::serialize")]
    pub definition: S,
    #[serde(serialize_with = "scalar::serialize")]
    pub example: S,
    #[serde(serialize_with = "scalar::serialize")]
    pub reindexed: S,
}

/// The smallest probe on which the two formulas differ: the indicator of
/// `x_1 = symbol` at one level, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessTable<S: Scalar> {
    pub level: usize,
    pub symbol: usize,
    pub rows: Vec<WitnessRow<S>>,
    /// Every row agrees with direct evaluation of both sums.
    pub reevaluated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport<S: Scalar> {
    pub seed: u64,
    pub samples: usize,
    pub coincide: usize,
    pub match_under_reindexing: usize,
    pub verdict: Verdict,
    pub witness: Option<WitnessTable<S>>,
    pub consistent: bool,
}

struct Formulas<S: Scalar> {
    definition: CylinderFunction<S>,
    example: CylinderFunction<S>,
    reindexed: CylinderFunction<S>,
}

fn evaluate<S: Scalar>(
    op: &ExplodingOperator<S, ShiftSystem<S>>,
    f: &LevelFunction<CylinderFunction<S>>,
) -> Result<Formulas<S>> {
    let sys = op.backend();
    let w = op.weights();
    let definition = op.apply(f)?.levels.swap_remove(0);
    let example = sys.example_operator_level1(&f.levels, w)?;
    let shifted = f.levels.iter().enumerate().map(|(i, g)| sys.ek(g, i + 2)).collect::<Result<Vec<_>>>()?;
    let terms: Vec<(S, &CylinderFunction<S>)> = w.b().iter().cloned().zip(&shifted).collect();
    let reindexed = sys.combine(&terms)?;
    Ok(Formulas { definition, example, reindexed })
}

fn agree<S: Scalar>(f: &CylinderFunction<S>, g: &CylinderFunction<S>) -> bool {
    f.agrees_with(g, OPERATOR_TOLERANCE)
}

/// Direct sums at a concrete sequence `x`: the definition replaces
/// `x_1..x_k` by `(*, C)` with `C` of length `k - 1`; the block formula
/// replaces `x_1..x_{k+1}` by a block of length `k`.
fn direct<S: Scalar>(sys: &ShiftSystem<S>, f: &LevelFunction<CylinderFunction<S>>, b: &[S], x: &[usize]) -> (S, S) {
    let a = sys.alphabet();
    let mut definition = S::zero();
    let mut example = S::zero();
    for (k, (g, bk)) in (1..).zip(f.levels.iter().zip(b)) {
        let mut def_k = S::zero();
        for i in 0..a.pow((k - 1) as u32) {
            let c = index_word(a, k - 1, i);
            let y: Vec<usize> = c.iter().chain(&x[k..]).copied().collect();
            def_k += &sys.word_probability(&c).mul_ref(g.eval(&y));
        }
        let mut ex_k = S::zero();
        for i in 0..a.pow(k as u32) {
            let block = index_word(a, k, i);
            let y: Vec<usize> = block.iter().chain(&x[k + 1..]).copied().collect();
            ex_k += &sys.word_probability(&block).mul_ref(g.eval(&y));
        }
        definition += &bk.mul_ref(&def_k);
        example += &bk.mul_ref(&ex_k);
    }
    (definition, example)
}

fn witness_table<S: Scalar>(op: &ExplodingOperator<S, ShiftSystem<S>>) -> Result<Option<WitnessTable<S>>> {
    let sys = op.backend();
    let cap = op.cap();
    for level in 1..=cap {
        for symbol in 0..sys.alphabet() {
            let mut levels = vec![sys.constant(S::zero()); cap];
            levels[level - 1] = CylinderFunction::indicator(sys.alphabet(), &[symbol])?;
            let f = LevelFunction::new(levels);
            let forms = evaluate(op, &f)?;
            if agree(&forms.definition, &forms.example) {
                continue;
            }
            let depth =
                [&forms.definition, &forms.example, &forms.reindexed].iter().map(|g| g.depth).max().unwrap_or(0);
            let pad = cap + 2;
            let mut rows = Vec::new();
            let mut reevaluated = true;
            for i in 0..sys.alphabet().pow(depth as u32) {
                let word = index_word(sys.alphabet(), depth, i);
                let x: Vec<usize> = word.iter().copied().chain(std::iter::repeat_n(0, pad)).collect();
                let row = WitnessRow {
                    word: render_word(&word),
                    definition: forms.definition.eval(&x).clone(),
                    example: forms.example.eval(&x).clone(),
                    reindexed: forms.reindexed.eval(&x).clone(),
                };
                let (d, e) = direct(sys, &f, op.weights().b(), &x);
                reevaluated &= d.close(&row.definition, OPERATOR_TOLERANCE)
                    && e.close(&row.example, OPERATOR_TOLERANCE)
                    && e.close(&row.reindexed, OPERATOR_TOLERANCE);
                rows.push(row);
            }
            return Ok(Some(WitnessTable { level, symbol, rows, reevaluated }));
        }
    }
    Ok(None)
}

pub fn compare_definition_example<S: Scalar>(
    op: &ExplodingOperator<S, ShiftSystem<S>>,
    samples: usize,
    seed: u64,
) -> Result<ComparisonReport<S>> {
    let sys = op.backend();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coincide = 0;
    let mut match_under_reindexing = 0;
    for _ in 0..samples {
        let f = LevelFunction::new((0..op.cap()).map(|_| sys.random_function(&mut rng, false)).collect());
        let forms = evaluate(op, &f)?;
        if agree(&forms.definition, &forms.example) {
            coincide += 1;
        }
        if agree(&forms.reindexed, &forms.example) {
            match_under_reindexing += 1;
        }
    }
    let verdict = if coincide == samples {
        Verdict::Coincide
    } else if match_under_reindexing == samples {
        Verdict::MatchUnderReindexing
    } else {
        Verdict::Differ
    };
    let witness = witness_table(op)?;
    let consistent = match &witness {
        Some(t) => t.reevaluated && verdict != Verdict::Coincide,
        None => coincide == samples,
    };
    Ok(ComparisonReport { seed, samples, coincide, match_under_reindexing, verdict, witness, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::weights::geometric_weights;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn fair_coin_needs_reindexing() {
        let op = ExplodingOperator::build(ShiftSystem::<Rational>::fair_coin(), geometric_weights(q(1, 2), 3).unwrap());
        let r = compare_definition_example(&op, 20, 7).unwrap();
        assert_eq!(r.verdict, Verdict::MatchUnderReindexing);
        assert!(r.consistent);
        let w = r.witness.unwrap();
        assert_eq!((w.level, w.symbol), (1, 0));
        // b = (4/7 ... ) scaled: definition b_1 1{x_2 = 0}, example b_1 / 2.
        let b1 = op.weights().reset(1).clone();
        assert_eq!(w.rows[0].word, "00");
        assert_eq!(w.rows[0].definition, b1);
        assert_eq!(w.rows[0].example, b1 * q(1, 2));
    }

    #[test]
    fn direct_sum_matches_on_random_functions() {
        let sys = ShiftSystem::<Rational>::new(vec![q(1, 4), q(3, 4)]).unwrap();
        let op = ExplodingOperator::build(sys, geometric_weights(q(1, 3), 3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let f = LevelFunction::new((0..3).map(|_| op.backend().random_function(&mut rng, false)).collect());
            let forms = evaluate(&op, &f).unwrap();
            for i in 0..64 {
                let x = index_word(2, 6, i);
                let x: Vec<usize> = x.into_iter().chain([0; 6]).collect();
                let (d, e) = direct(op.backend(), &f, op.weights().b(), &x);
                assert_eq!(&d, forms.definition.eval(&x));
                assert_eq!(&e, forms.example.eval(&x));
                assert_eq!(&e, forms.reindexed.eval(&x));
            }
        }
    }
}
