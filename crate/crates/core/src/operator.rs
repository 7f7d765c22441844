//! The exploding operator over a backend.
//!
//! On `Y = X x {1..K}` with `nu = mu x m`:
//!
//! ```text
//! (Ex f)(x, 1) = sum_k b_k E_k f_k (x)
//! (Ex f)(x, k) = f_{k-1}(T x)            for k >= 2
//! ```
//!
//! Equivalently the kernel moves `(x, k)` to `(T x, k - 1)` while `k >= 2`,
//! and from `(x, 1)` spreads `x` over its fiber `T^-j T^j x`, maps it by `T`,
//! and resets the counter to `j` with probability `b_j`.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::backend::{draw_index, Backend};
use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};
use crate::weights::CappedWeights;

/// A function on `X x {1..K}` stored as its `K` sections.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFunction<F> {
    pub levels: Vec<F>,
}

impl<F> LevelFunction<F> {
    pub fn new(levels: Vec<F>) -> Self {
        LevelFunction { levels }
    }

    pub fn cap(&self) -> usize {
        self.levels.len()
    }

    /// Section at 1-based level `k`.
    pub fn level(&self, k: usize) -> &F {
        &self.levels[k - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct State {
    pub x: usize,
    pub level: usize,
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.x, self.level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelRow<S: Scalar> {
    pub from: State,
    pub targets: Vec<KernelEntry<S>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelEntry<S: Scalar> {
    pub to: State,
    #[serde(serialize_with = "scalar::serialize")]
    pub prob: S,
}

/// The kernel of a finite-backend operator; states ordered `x`-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelMatrix<S: Scalar> {
    pub points: usize,
    pub cap: usize,
    pub rows: Vec<KernelRow<S>>,
}

impl<S: Scalar> KernelMatrix<S> {
    pub fn state_count(&self) -> usize {
        self.points * self.cap
    }

    pub fn index_of(&self, s: State) -> usize {
        s.x * self.cap + (s.level - 1)
    }

    pub fn state_at(&self, i: usize) -> State {
        State { x: i / self.cap, level: i % self.cap + 1 }
    }

    pub fn dense(&self) -> Vec<Vec<S>> {
        let n = self.state_count();
        let mut m = vec![vec![S::zero(); n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            for e in &row.targets {
                m[i][self.index_of(e.to)] += &e.prob;
            }
        }
        m
    }

    /// `(P v)(s) = sum_t P(s, t) v(t)`.
    pub fn apply_to_vector(&self, v: &[S]) -> Vec<S> {
        self.rows
            .iter()
            .map(|row| {
                let mut acc = S::zero();
                for e in &row.targets {
                    acc += &e.prob.mul_ref(&v[self.index_of(e.to)]);
                }
                acc
            })
            .collect()
    }

    /// `(w P)(t) = sum_s w(s) P(s, t)`.
    pub fn left_apply(&self, w: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.state_count()];
        for (i, row) in self.rows.iter().enumerate() {
            for e in &row.targets {
                out[self.index_of(e.to)] += &w[i].mul_ref(&e.prob);
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<S> {
        self.rows.iter().map(|r| scalar::sum(r.targets.iter().map(|e| &e.prob))).collect()
    }

    /// CSV with header `from_x,from_k,to_x,to_k,prob`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["from_x", "from_k", "to_x", "to_k", "prob"])?;
        for row in &self.rows {
            for e in &row.targets {
                w.write_record([
                    row.from.x.to_string(),
                    row.from.level.to_string(),
                    e.to.x.to_string(),
                    e.to.level.to_string(),
                    e.prob.render(),
                ])?;
            }
        }
        w.flush()
    }
}

#[derive(Debug, Clone)]
pub struct ExplodingOperator<S: Scalar, B: Backend<S>> {
    backend: B,
    weights: CappedWeights<S>,
}

impl<S: Scalar, B: Backend<S>> ExplodingOperator<S, B> {
    /// Both inputs are validated by construction; the finite backend
    /// precomputes its fiber partitions for every level.
    pub fn build(mut backend: B, weights: CappedWeights<S>) -> Self {
        backend.prepare(weights.cap);
        ExplodingOperator { backend, weights }
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn weights(&self) -> &CappedWeights<S> {
        &self.weights
    }

    pub fn cap(&self) -> usize {
        self.weights.cap
    }

    pub fn constant(&self, c: S) -> LevelFunction<B::Func> {
        LevelFunction::new(vec![self.backend.constant(c); self.cap()])
    }

    /// `int f dnu = sum_k a_k int f_k dmu`.
    pub fn integral(&self, f: &LevelFunction<B::Func>) -> S {
        let mut acc = S::zero();
        for (a, g) in self.weights.a().iter().zip(&f.levels) {
            acc += &a.mul_ref(&self.backend.integral(g));
        }
        acc
    }

    fn check_cap(&self, f: &LevelFunction<B::Func>) -> Result<()> {
        if f.cap() != self.cap() {
            return Err(Error::CapMismatch { expected: self.cap(), got: f.cap() });
        }
        Ok(())
    }

    pub fn apply(&self, f: &LevelFunction<B::Func>) -> Result<LevelFunction<B::Func>> {
        self.check_cap(f)?;
        let exploded =
            f.levels.iter().enumerate().map(|(i, g)| self.backend.conditional(g, i + 1)).collect::<Result<Vec<_>>>()?;
        let terms: Vec<(S, &B::Func)> = self.weights.b().iter().cloned().zip(&exploded).collect();
        let mut levels = Vec::with_capacity(self.cap());
        levels.push(self.backend.combine(&terms)?);
        for g in &f.levels[..self.cap() - 1] {
            levels.push(self.backend.compose_map(g)?);
        }
        Ok(LevelFunction::new(levels))
    }

    /// `Ex^n f`; fails with the offending `n` if a backend budget is exceeded.
    pub fn iterate(&self, f: &LevelFunction<B::Func>, n: usize) -> Result<LevelFunction<B::Func>> {
        self.check_cap(f)?;
        let mut current = f.clone();
        for step in 1..=n {
            current = self.apply(&current).map_err(|e| match e {
                Error::DepthBudgetExceeded { depth, budget } => Error::IterationBudgetExceeded { step, depth, budget },
                other => other,
            })?;
        }
        Ok(current)
    }

    /// Max over levels of the sup distance.
    pub fn sup_distance(&self, f: &LevelFunction<B::Func>, g: &LevelFunction<B::Func>) -> Result<S> {
        let mut best = S::zero();
        for (a, b) in f.levels.iter().zip(&g.levels) {
            let d = self.backend.sup_distance(a, b)?;
            if d > best {
                best = d;
            }
        }
        Ok(best)
    }

    pub fn to_json(&self, f: &LevelFunction<B::Func>) -> serde_json::Value {
        serde_json::Value::Array(f.levels.iter().map(|g| self.backend.func_json(g)).collect())
    }

    /// A trajectory of `steps` transitions (so `steps + 1` states). Without
    /// a start state the initial state is drawn from `nu`.
    pub fn sample_path(
        &self,
        start: Option<(B::Point, usize)>,
        steps: usize,
        seed: u64,
    ) -> Result<Vec<(B::Point, usize)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = self.weights.a().iter().map(|v| v.to_f64()).collect();
        let b: Vec<f64> = self.weights.b().iter().map(|v| v.to_f64()).collect();
        let (mut x, mut level) = match start {
            Some((x, level)) => {
                if level < 1 || level > self.cap() || !self.backend.is_valid_point(&x) {
                    return Err(Error::InvalidState { x: 0, level });
                }
                (x, level)
            }
            None => {
                let x = self.backend.random_point(&mut rng);
                (x, draw_index(&a, &mut rng) + 1)
            }
        };
        let mut path = Vec::with_capacity(steps + 1);
        path.push((x.clone(), level));
        for _ in 0..steps {
            if level >= 2 {
                x = self.backend.map_point(&x);
                level -= 1;
            } else {
                let k = draw_index(&b, &mut rng) + 1;
                x = self.backend.explode_point(&x, k, &mut rng);
                level = k;
            }
            path.push((x.clone(), level));
        }
        Ok(path)
    }

    /// The kernel as a table of rows; finite backend only.
    pub fn to_matrix(&self) -> Result<KernelMatrix<S>> {
        let sys = self.backend.as_finite().ok_or(Error::Unsupported("kernel export needs the finite backend"))?;
        let cap = self.cap();
        let fibers = (1..=cap).map(|k| sys.fiber_partition(k)).collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(sys.len() * cap);
        for x in 0..sys.len() {
            let mut first: BTreeMap<State, S> = BTreeMap::new();
            for (k, part) in (1..=cap).zip(&fibers) {
                let class = part.class_of[x];
                let mass = &part.quotient_weights[class];
                for &y in &part.classes[class] {
                    let p = self.weights.reset(k).mul_ref(&sys.mu()[y].div_ref(mass));
                    *first.entry(State { x: sys.map()[y], level: k }).or_insert_with(S::zero) += &p;
                }
            }
            rows.push(KernelRow {
                from: State { x, level: 1 },
                targets: first.into_iter().map(|(to, prob)| KernelEntry { to, prob }).collect(),
            });
            for level in 2..=cap {
                rows.push(KernelRow {
                    from: State { x, level },
                    targets: vec![KernelEntry { to: State { x: sys.map()[x], level: level - 1 }, prob: S::one() }],
                });
            }
        }
        Ok(KernelMatrix { points: sys.len(), cap, rows })
    }

    /// `nu` as a vector over states, `x`-major.
    pub fn stationary_vector(&self) -> Result<Vec<S>> {
        let sys = self.backend.as_finite().ok_or(Error::Unsupported("state vectors need the finite backend"))?;
        Ok(sys.mu().iter().flat_map(|m| self.weights.a().iter().map(move |a| m.mul_ref(a))).collect())
    }
}

/// `v[x * K + k - 1] = f_k(x)`.
pub fn stack<S: Scalar>(f: &LevelFunction<Vec<S>>) -> Vec<S> {
    let cap = f.cap();
    let n = f.levels.first().map_or(0, Vec::len);
    (0..n * cap).map(|i| f.levels[i % cap][i / cap].clone()).collect()
}

pub fn unstack<S: Scalar>(v: &[S], cap: usize) -> LevelFunction<Vec<S>> {
    let n = v.len() / cap;
    LevelFunction::new((0..cap).map(|k| (0..n).map(|x| v[x * cap + k].clone()).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_system::{cycle, identity, FiniteSystem};
    use crate::scalar::Rational;
    use crate::shift_system::{CylinderFunction, ShiftSystem};
    use crate::weights::{custom_weights, geometric_weights};
    use num_traits::{One, Signed};
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn half_half() -> CappedWeights<Rational> {
        custom_weights(vec![q(2, 3), q(1, 3)], 2).unwrap()
    }

    fn four_cycle_op() -> ExplodingOperator<Rational, FiniteSystem<Rational>> {
        ExplodingOperator::build(cycle(4), half_half())
    }

    fn st(x: usize, level: usize) -> State {
        State { x, level }
    }

    #[test]
    fn build_examples() {
        let op = four_cycle_op();
        assert_eq!(op.to_matrix().unwrap().state_count(), 8);
        let op = ExplodingOperator::build(ShiftSystem::<Rational>::fair_coin(), geometric_weights(q(1, 2), 4).unwrap());
        assert_eq!(op.cap(), 4);
        assert_eq!(op.to_matrix().unwrap_err().code(), "unsupported_backend");
        assert!(geometric_weights(q(3, 2), 4).is_err());
    }

    #[test]
    fn apply_preserves_constants() {
        let op = four_cycle_op();
        assert_eq!(op.apply(&op.constant(q(1, 1))).unwrap(), op.constant(q(1, 1)));
        let sh = ExplodingOperator::build(ShiftSystem::<Rational>::fair_coin(), geometric_weights(q(1, 2), 4).unwrap());
        let out = sh.apply(&sh.constant(q(1, 1))).unwrap();
        assert!(out.levels.iter().all(|g| g.table.iter().all(One::is_one)));
    }

    #[test]
    fn apply_on_identity_backend_mixes_levels() {
        let w = geometric_weights(q(1, 3), 3).unwrap();
        let op = ExplodingOperator::build(identity::<Rational>(2), w.clone());
        let f = LevelFunction::new(vec![vec![q(1, 1), q(0, 1)], vec![q(2, 1), q(5, 1)], vec![q(-1, 1), q(3, 1)]]);
        let out = op.apply(&f).unwrap();
        for x in 0..2 {
            let expected: Rational = (1..=3).map(|k| w.reset(k) * &f.level(k)[x]).sum();
            assert_eq!(out.level(1)[x], expected);
        }
        assert_eq!(out.level(2), f.level(1));
        assert_eq!(out.level(3), f.level(2));
    }

    #[test]
    fn apply_on_fair_coin_example() {
        let op = ExplodingOperator::build(ShiftSystem::<Rational>::fair_coin(), half_half());
        let ind = CylinderFunction::indicator(2, &[1]).unwrap();
        let out = op.apply(&LevelFunction::new(vec![ind.clone(), ind])).unwrap();
        // 1/2 * 1{x_2 = 1} + 1/2 * 1/2
        let expected = CylinderFunction::new(2, 2, vec![q(1, 4), q(3, 4), q(1, 4), q(3, 4)]).unwrap();
        assert!(out.level(1).agrees_with(&expected, 0.0));
    }

    #[test]
    fn invertible_case_is_weighted_koopman() {
        let sys = FiniteSystem::new(vec![q(1, 6), q(1, 6), q(1, 6), q(1, 2)], vec![1, 2, 0, 3]).unwrap();
        let w = geometric_weights(q(2, 5), 4).unwrap();
        let op = ExplodingOperator::build(sys.clone(), w.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let f = LevelFunction::new((0..4).map(|_| sys.random_function(&mut rng, false)).collect());
            let out = op.apply(&f).unwrap();
            for x in 0..4 {
                let expected: Rational = (1..=4).map(|k| w.reset(k) * &f.level(k)[sys.map()[x]]).sum();
                assert_eq!(out.level(1)[x], expected);
            }
        }
    }

    #[test]
    fn cap_mismatch_is_rejected() {
        let op = four_cycle_op();
        let f = LevelFunction::new(vec![vec![q(1, 1); 4]]);
        assert_eq!(op.apply(&f).unwrap_err().code(), "cap_mismatch");
        assert_eq!(op.iterate(&f, 0).unwrap_err().code(), "cap_mismatch");
    }

    #[test]
    fn four_cycle_kernel_rows() {
        let m = four_cycle_op().to_matrix().unwrap();
        assert_eq!(
            m.rows[m.index_of(st(0, 1))].targets,
            vec![KernelEntry { to: st(1, 1), prob: q(1, 2) }, KernelEntry { to: st(1, 2), prob: q(1, 2) }]
        );
        assert_eq!(m.rows[m.index_of(st(0, 2))].targets, vec![KernelEntry { to: st(1, 1), prob: q(1, 1) }]);
        assert!(m.row_sums().iter().all(One::is_one));
    }

    #[test]
    fn nu_is_left_fixed() {
        let op = four_cycle_op();
        let m = op.to_matrix().unwrap();
        let nu = op.stationary_vector().unwrap();
        let moved = m.left_apply(&nu);
        // nu((0,1)) * 1/2 = 1/4 * 2/3 * 1/2
        assert_eq!(moved[m.index_of(st(1, 2))], q(1, 12));
        assert_eq!(moved, nu);
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        four_cycle_op().to_matrix().unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("from_x,from_k,to_x,to_k,prob"));
        assert_eq!(lines.next(), Some("0,1,1,1,1/2"));
        assert_eq!(lines.next(), Some("0,1,1,2,1/2"));
        assert_eq!(lines.next(), Some("0,2,1,1,1/1"));
    }

    #[test]
    fn iterate_zero_and_matrix_powers() {
        let sys = FiniteSystem::new(vec![q(1, 5), q(1, 5), q(3, 5)], vec![1, 0, 2]).unwrap();
        let op = ExplodingOperator::build(sys.clone(), geometric_weights(q(1, 2), 3).unwrap());
        let m = op.to_matrix().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = LevelFunction::new((0..3).map(|_| sys.random_function(&mut rng, false)).collect());
        assert_eq!(op.iterate(&f, 0).unwrap(), f);
        let mut v = stack(&f);
        for n in 1..=8 {
            v = m.apply_to_vector(&v);
            assert_eq!(stack(&op.iterate(&f, n).unwrap()), v);
        }
        assert_eq!(unstack(&v, 3), op.iterate(&f, 8).unwrap());
    }

    #[test]
    fn iterate_reports_offending_step() {
        let sh = ShiftSystem::<Rational>::fair_coin().with_depth_budget(6);
        let op = ExplodingOperator::build(sh, geometric_weights(q(1, 2), 3).unwrap());
        let f = LevelFunction::new(vec![CylinderFunction::indicator(2, &[1, 0, 1]).unwrap(); 3]);
        match op.iterate(&f, 10).unwrap_err() {
            Error::IterationBudgetExceeded { step, budget: 6, .. } => assert!((1..=10).contains(&step)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sampler_deterministic_branch_and_seed() {
        let op = four_cycle_op();
        let path = op.sample_path(Some((2, 2)), 1, 0).unwrap();
        assert_eq!(path[1], (3, 1));
        assert_eq!(op.sample_path(None, 500, 42).unwrap(), op.sample_path(None, 500, 42).unwrap());
        assert!(op.sample_path(Some((4, 1)), 3, 0).is_err());
        assert!(op.sample_path(Some((0, 3)), 3, 0).is_err());
    }

    #[test]
    fn sampler_matches_kernel_row() {
        let op = four_cycle_op();
        let draws = 100_000;
        let mut level_two = 0usize;
        for seed in 0..draws as u64 {
            let path = op.sample_path(Some((0, 1)), 1, seed).unwrap();
            assert_eq!(path[1].0, 1);
            if path[1].1 == 2 {
                level_two += 1;
            }
        }
        let freq = level_two as f64 / draws as f64;
        assert!((freq - 0.5).abs() < 0.01, "{freq}");
    }

    #[test]
    fn shift_sampler_keeps_known_tail() {
        let op = ExplodingOperator::build(ShiftSystem::<Rational>::fair_coin(), geometric_weights(q(1, 2), 4).unwrap());
        let path = op.sample_path(Some((vec![1, 0, 1, 1, 0, 1], 3)), 2, 1).unwrap();
        assert_eq!(path[1], (vec![0, 1, 1, 0, 1], 2));
        assert_eq!(path[2], (vec![1, 1, 0, 1], 1));
        let path = op.sample_path(Some((vec![1, 0, 1, 1, 0, 1], 1)), 1, 1).unwrap();
        let (next, k) = &path[1];
        // k - 1 fresh symbols followed by x_{k+1}, x_{k+2}, ...
        assert_eq!(next.len(), (k - 1) + (6 - k));
        assert_eq!(&next[k - 1..], &[1, 0, 1, 1, 0, 1][*k..]);
    }

    fn finite_case() -> impl Strategy<Value = (FiniteSystem<Rational>, CappedWeights<Rational>, u64)> {
        (Just((0..5usize).collect::<Vec<_>>()).prop_shuffle(), 2usize..5, 1i64..8, any::<u64>()).prop_map(
            |(perm, cap, r, seed)| {
                let sys = FiniteSystem::new(vec![q(1, 5); 5], perm).unwrap();
                (sys, geometric_weights(q(r, 8), cap).unwrap(), seed)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn markov_axioms((sys, w, seed) in finite_case()) {
            let op = ExplodingOperator::build(sys.clone(), w);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = LevelFunction::new((0..op.cap()).map(|_| sys.random_function(&mut rng, false)).collect());
            let g = LevelFunction::new((0..op.cap()).map(|_| sys.random_function(&mut rng, true)).collect());
            prop_assert_eq!(op.integral(&op.apply(&f).unwrap()), op.integral(&f));
            prop_assert!(op.apply(&g).unwrap().levels.iter().flatten().all(|v| !v.is_negative()));
            prop_assert_eq!(op.apply(&op.constant(q(1, 1))).unwrap(), op.constant(q(1, 1)));
        }

        #[test]
        fn monotone((sys, w, seed) in finite_case()) {
            let op = ExplodingOperator::build(sys.clone(), w);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = LevelFunction::new((0..op.cap()).map(|_| sys.random_function(&mut rng, false)).collect());
            let bump = LevelFunction::new((0..op.cap()).map(|_| sys.random_function(&mut rng, true)).collect());
            let g = LevelFunction::new(
                f.levels.iter().zip(&bump.levels).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect(),
            );
            let (ef, eg) = (op.apply(&f).unwrap(), op.apply(&g).unwrap());
            prop_assert!(ef.levels.iter().flatten().zip(eg.levels.iter().flatten()).all(|(x, y)| x <= y));
        }

        /// Above the explosion level `Ex^n` only transports: `(Ex^n f)_k = f_{k-n} o T^n`.
        #[test]
        fn level_shift_structure((sys, w, seed) in finite_case(), n in 0usize..4) {
            let op = ExplodingOperator::build(sys.clone(), w);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = LevelFunction::new((0..op.cap()).map(|_| sys.random_function(&mut rng, false)).collect());
            let out = op.iterate(&f, n).unwrap();
            for k in (n + 1)..=op.cap() {
                let expected: Vec<Rational> = (0..sys.len()).map(|x| f.level(k - n)[sys.iterate_point(x, n)].clone()).collect();
                prop_assert_eq!(out.level(k), &expected);
            }
        }

        #[test]
        fn shift_nu_preservation(p1 in 1i64..8, cap in 2usize..5, seed in any::<u64>()) {
            let sys = ShiftSystem::new(vec![q(p1, 8), q(8 - p1, 8)]).unwrap();
            let op = ExplodingOperator::build(sys, geometric_weights(q(1, 2), cap).unwrap());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = LevelFunction::new((0..cap).map(|_| op.backend().random_function(&mut rng, false)).collect());
            prop_assert_eq!(op.integral(&op.apply(&f).unwrap()), op.integral(&f));
        }
    }
}
