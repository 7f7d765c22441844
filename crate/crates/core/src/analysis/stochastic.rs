//! Positivity, `Ex 1 = 1` and `int Ex f dnu = int f dnu`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::negligible;
use crate::backend::Backend;
use crate::error::Result;
use crate::operator::{ExplodingOperator, KernelMatrix, LevelFunction};
use crate::scalar::{self, Scalar};

const RANDOM_PROBES: usize = 24;
const PROBE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck<S: Scalar> {
    pub passed: bool,
    #[serde(serialize_with = "scalar::serialize")]
    pub max_error: S,
    pub probes: usize,
    pub witness: Option<String>,
}

impl<S: Scalar> AxiomCheck<S> {
    fn new() -> Self {
        AxiomCheck { passed: true, max_error: S::zero(), probes: 0, witness: None }
    }

    fn record(&mut self, error: S, witness: impl FnOnce() -> String) {
        self.probes += 1;
        if !negligible(&error) && self.passed {
            self.passed = false;
            self.witness = Some(witness());
        }
        if error > self.max_error {
            self.max_error = error;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticReport<S: Scalar> {
    pub mode: &'static str,
    pub positivity: AxiomCheck<S>,
    pub unit: AxiomCheck<S>,
    pub nu_preservation: AxiomCheck<S>,
}

impl<S: Scalar> StochasticReport<S> {
    pub fn passed(&self) -> bool {
        self.positivity.passed && self.unit.passed && self.nu_preservation.passed
    }
}

/// Checks the three axioms on the operator's action. Probes are the
/// backend's probe functions placed at each level (a spanning family on a
/// finite backend) plus seeded random level functions.
pub fn check_doubly_stochastic<S: Scalar, B: Backend<S>>(op: &ExplodingOperator<S, B>) -> Result<StochasticReport<S>> {
    let backend = op.backend();
    let cap = op.cap();
    let zero = backend.constant(S::zero());
    let mut probes: Vec<(String, LevelFunction<B::Func>)> = Vec::new();
    for (j, g) in backend.probe_functions().into_iter().enumerate() {
        for k in 1..=cap {
            let mut levels = vec![zero.clone(); cap];
            levels[k - 1] = g.clone();
            probes.push((format!("basis probe {j} at level {k}"), LevelFunction::new(levels)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    for r in 0..RANDOM_PROBES {
        let nonnegative = r % 2 == 0;
        let levels = (0..cap).map(|_| backend.random_function(&mut rng, nonnegative)).collect();
        probes.push((format!("random probe {r}"), LevelFunction::new(levels)));
    }

    let mut positivity = AxiomCheck::new();
    let mut nu_preservation = AxiomCheck::new();
    for (name, f) in &probes {
        let image = op.apply(f)?;
        let nonnegative = f.levels.iter().all(|g| backend.values(g).iter().all(|v| !v.is_negative()));
        if nonnegative {
            let mut worst = S::zero();
            let mut at = None;
            for (k, g) in image.levels.iter().enumerate() {
                for (i, v) in backend.values(g).iter().enumerate() {
                    if -v.clone() > worst {
                        worst = -v.clone();
                        at = Some((k + 1, i, v.render()));
                    }
                }
            }
            positivity.record(worst, || {
                let (k, i, v) = at.expect("negative entry recorded");
                format!("{name}: level {k}, entry {i} has value {v}")
            });
        }
        let before = op.integral(f);
        let after = op.integral(&image);
        nu_preservation.record(after.sub_ref(&before).abs(), || {
            format!("{name}: integral {} becomes {}", before.render(), after.render())
        });
    }

    let mut unit = AxiomCheck::new();
    let one = op.constant(S::one());
    let image = op.apply(&one)?;
    for (k, g) in image.levels.iter().enumerate() {
        let err = backend.sup_distance(g, &one.levels[k])?;
        unit.record(err, || format!("level {} of Ex 1 differs from 1", k + 1));
    }

    Ok(StochasticReport { mode: S::MODE, positivity, unit, nu_preservation })
}

/// The same axioms read off a kernel table: nonnegative entries, unit row
/// sums, and `nu P = nu` column by column.
pub fn check_kernel<S: Scalar>(matrix: &KernelMatrix<S>, nu: &[S]) -> StochasticReport<S> {
    let mut positivity = AxiomCheck::new();
    for row in &matrix.rows {
        for e in &row.targets {
            let err = if e.prob.is_negative() { e.prob.abs() } else { S::zero() };
            positivity.record(err, || format!("P({}, {}) = {}", row.from, e.to, e.prob.render()));
        }
    }
    let mut unit = AxiomCheck::new();
    for (row, sum) in matrix.rows.iter().zip(matrix.row_sums()) {
        unit.record(sum.sub_ref(&S::one()).abs(), || format!("row {} sums to {}", row.from, sum.render()));
    }
    let mut nu_preservation = AxiomCheck::new();
    let moved = matrix.left_apply(nu);
    for (i, (after, before)) in moved.iter().zip(nu).enumerate() {
        nu_preservation.record(after.sub_ref(before).abs(), || {
            format!("state {}: (nu P) = {}, nu = {}", matrix.state_at(i), after.render(), before.render())
        });
    }
    StochasticReport { mode: S::MODE, positivity, unit, nu_preservation }
}
