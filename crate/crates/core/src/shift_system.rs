//! One-sided Bernoulli shift on `A^N` with product measure `p^N`.
//!
//! Functions of finitely many coordinates are dense tables over words of
//! length `depth`, first coordinate most significant. `T` drops the first
//! coordinate, so the fiber of `x` under `T^k` is every sequence that
//! agrees with `x` from coordinate `k+1` on, and its conditional measure
//! is `p^k` on the first `k` coordinates.

use rand::Rng;
use serde::Serialize;

use crate::backend::{draw_index, random_value, Backend};
use crate::error::{Error, Result};
use crate::scalar::{self, Scalar, WEIGHT_TOLERANCE};
use crate::weights::CappedWeights;

/// Depth budget for binary alphabets unless overridden.
pub const DEFAULT_DEPTH_BUDGET: usize = 22;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderFunction<S: Scalar> {
    pub alphabet: usize,
    pub depth: usize,
    #[serde(serialize_with = "scalar::serialize_vec")]
    pub table: Vec<S>,
}

impl<S: Scalar> CylinderFunction<S> {
    pub fn new(alphabet: usize, depth: usize, table: Vec<S>) -> Result<Self> {
        let expected = checked_pow(alphabet, depth).ok_or(Error::DepthBudgetExceeded { depth, budget: 0 })?;
        if table.len() != expected {
            return Err(Error::LengthMismatch { expected, got: table.len() });
        }
        Ok(CylinderFunction { alphabet, depth, table })
    }

    pub fn constant(alphabet: usize, c: S) -> Self {
        CylinderFunction { alphabet, depth: 0, table: vec![c] }
    }

    /// Indicator of the cylinder `[word]`.
    pub fn indicator(alphabet: usize, word: &[usize]) -> Result<Self> {
        check_word(alphabet, word)?;
        let depth = word.len();
        let mut table = vec![S::zero(); alphabet.pow(depth as u32)];
        table[word_index(alphabet, word)] = S::one();
        Ok(CylinderFunction { alphabet, depth, table })
    }

    /// Value at any sequence starting with `word` (`word.len() >= depth`).
    pub fn eval(&self, word: &[usize]) -> &S {
        &self.table[word_index(self.alphabet, &word[..self.depth])]
    }

    /// Same function, tabulated over more coordinates.
    pub fn extend_to(&self, depth: usize) -> Self {
        if depth <= self.depth {
            return self.clone();
        }
        let rep = self.alphabet.pow((depth - self.depth) as u32);
        let table = self.table.iter().flat_map(|v| std::iter::repeat_n(v, rep).cloned()).collect();
        CylinderFunction { alphabet: self.alphabet, depth, table }
    }

    /// Drops trailing coordinates the function does not depend on.
    pub fn trimmed(mut self) -> Self {
        let s = self.alphabet;
        while self.depth > 0 && self.table.chunks(s).all(|c| c.iter().all(|v| v == &c[0])) {
            self.table = self.table.chunks(s).map(|c| c[0].clone()).collect();
            self.depth -= 1;
        }
        self
    }

    /// Pointwise agreement, independent of tabulation depth.
    pub fn agrees_with(&self, other: &Self, tol: f64) -> bool {
        let d = self.depth.max(other.depth);
        let (a, b) = (self.extend_to(d), other.extend_to(d));
        a.table.iter().zip(&b.table).all(|(x, y)| x.close(y, tol))
    }

    pub fn words(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.table.len()).map(move |i| index_word(self.alphabet, self.depth, i))
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    base.checked_pow(u32::try_from(exp).ok()?)
}

fn check_word(alphabet: usize, word: &[usize]) -> Result<()> {
    match word.iter().find(|&&c| c >= alphabet) {
        Some(&symbol) => Err(Error::SymbolOutOfRange { symbol, alphabet }),
        None => Ok(()),
    }
}

pub fn word_index(alphabet: usize, word: &[usize]) -> usize {
    word.iter().fold(0, |acc, &c| acc * alphabet + c)
}

pub fn index_word(alphabet: usize, depth: usize, mut index: usize) -> Vec<usize> {
    let mut word = vec![0; depth];
    for slot in word.iter_mut().rev() {
        *slot = index % alphabet;
        index /= alphabet;
    }
    word
}

/// Parses a word such as `"10"`; symbols are digits (alphabets up to 10).
pub fn parse_word(alphabet: usize, text: &str) -> Result<Vec<usize>> {
    let word: Vec<usize> = text
        .trim()
        .chars()
        .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| Error::Parse(text.to_string())))
        .collect::<Result<_>>()?;
    check_word(alphabet, &word)?;
    Ok(word)
}

pub fn render_word(word: &[usize]) -> String {
    word.iter().map(|c| c.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSystem<S: Scalar> {
    p: Vec<S>,
    depth_budget: usize,
}

/// Two finite prefixes separated by a cylinder set; `u z ~ v z` for any tail `z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TailWitness {
    pub inside: Vec<usize>,
    pub outside: Vec<usize>,
}

impl<S: Scalar> ShiftSystem<S> {
    pub fn new(p: Vec<S>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidParameter { name: "alphabet", reason: format!("{} < 2", p.len()) });
        }
        if let Some(index) = p.iter().position(|x| !x.is_strictly_positive()) {
            return Err(Error::NonPositiveWeight { index });
        }
        let total = scalar::sum(&p);
        if !total.close(&S::one(), WEIGHT_TOLERANCE) {
            return Err(Error::NotNormalized { sum: total.render() });
        }
        Ok(ShiftSystem { p, depth_budget: DEFAULT_DEPTH_BUDGET })
    }

    pub fn fair_coin() -> Self {
        ShiftSystem::new(vec![S::from_ratio(1, 2), S::from_ratio(1, 2)]).expect("valid")
    }

    pub fn with_depth_budget(mut self, budget: usize) -> Self {
        self.depth_budget = budget;
        self
    }

    pub fn depth_budget(&self) -> usize {
        self.depth_budget
    }

    pub fn alphabet(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[S] {
        &self.p
    }

    fn check_depth(&self, depth: usize) -> Result<()> {
        if depth > self.depth_budget {
            Err(Error::DepthBudgetExceeded { depth, budget: self.depth_budget })
        } else {
            Ok(())
        }
    }

    fn check_alphabet(&self, f: &CylinderFunction<S>) -> Result<()> {
        if f.alphabet != self.alphabet() {
            return Err(Error::AlphabetMismatch { expected: self.alphabet(), got: f.alphabet });
        }
        Ok(())
    }

    pub fn word_probability(&self, word: &[usize]) -> S {
        let mut acc = S::one();
        for &c in word {
            acc *= &self.p[c];
        }
        acc
    }

    /// `p^m(w)` for every word of length `m`, in table order.
    pub fn prefix_weights(&self, m: usize) -> Vec<S> {
        let mut out = vec![S::one()];
        for _ in 0..m {
            out = out.iter().flat_map(|w| self.p.iter().map(move |pi| w.mul_ref(pi))).collect();
        }
        out
    }

    pub fn integral(&self, f: &CylinderFunction<S>) -> S {
        let s = self.alphabet();
        let mut table = f.table.clone();
        while table.len() > 1 {
            table = table
                .chunks(s)
                .map(|c| {
                    let mut acc = S::zero();
                    for (v, pi) in c.iter().zip(&self.p) {
                        acc += &v.mul_ref(pi);
                    }
                    acc
                })
                .collect();
        }
        table.pop().unwrap_or_else(S::zero)
    }

    /// `f o T`, one coordinate deeper.
    pub fn koopman(&self, f: &CylinderFunction<S>) -> Result<CylinderFunction<S>> {
        self.check_alphabet(f)?;
        self.check_depth(f.depth + 1)?;
        let table = (0..self.alphabet()).flat_map(|_| f.table.iter().cloned()).collect();
        Ok(CylinderFunction { alphabet: f.alphabet, depth: f.depth + 1, table })
    }

    /// `E_k f(x) = sum_{C in A^k} p^k(C) f(C_2..C_k, x_{k+1}, ...)`, tabulated at
    /// depth `max(depth(f) + 1, k)` and constant in the first `k` coordinates.
    pub fn ek(&self, f: &CylinderFunction<S>, k: usize) -> Result<CylinderFunction<S>> {
        if k < 1 {
            return Err(Error::InvalidParameter { name: "k", reason: "order must be at least 1".into() });
        }
        self.check_alphabet(f)?;
        let depth = (f.depth + 1).max(k);
        self.check_depth(depth)?;
        // The first letter of the prefix is discarded by T and integrates to 1.
        let h = f.extend_to(depth - 1);
        let suffix_len = self.alphabet().pow((depth - k) as u32);
        let weights = self.prefix_weights(k - 1);
        let mut reduced = vec![S::zero(); suffix_len];
        for (c, w) in weights.iter().enumerate() {
            let block = &h.table[c * suffix_len..(c + 1) * suffix_len];
            for (r, v) in reduced.iter_mut().zip(block) {
                *r += &w.mul_ref(v);
            }
        }
        let prefixes = self.alphabet().pow(k as u32);
        let table = (0..prefixes).flat_map(|_| reduced.iter().cloned()).collect();
        Ok(CylinderFunction { alphabet: f.alphabet, depth, table })
    }

    /// `f o sigma_B`, where `sigma_B x = (B_1, ..., B_k, x_{k+2}, x_{k+3}, ...)`.
    pub fn sigma_b(&self, block: &[usize], f: &CylinderFunction<S>) -> Result<CylinderFunction<S>> {
        self.check_alphabet(f)?;
        check_word(self.alphabet(), block)?;
        let depth = f.depth + 1;
        self.check_depth(depth)?;
        let k = block.len();
        let table = (0..self.alphabet().pow(depth as u32))
            .map(|i| {
                let x = index_word(self.alphabet(), depth, i);
                let image: Vec<usize> =
                    block.iter().copied().chain(x.iter().skip(k + 1).copied()).take(f.depth).collect();
                f.eval(&image).clone()
            })
            .collect();
        Ok(CylinderFunction { alphabet: f.alphabet, depth, table })
    }

    /// Level-1 formula of the classical fair-coin construction, with the
    /// reset weights `b_k` and block weights `p^k(B)`:
    /// `sum_k b_k sum_{B in A^k} p^k(B) f_k(sigma_B x)`.
    pub fn example_operator_level1(
        &self,
        levels: &[CylinderFunction<S>],
        weights: &CappedWeights<S>,
    ) -> Result<CylinderFunction<S>> {
        if levels.len() != weights.cap {
            return Err(Error::CapMismatch { expected: weights.cap, got: levels.len() });
        }
        let mut terms = Vec::new();
        for (k, f) in (1..).zip(levels) {
            let mut inner = CylinderFunction::constant(self.alphabet(), S::zero());
            for (i, w) in self.prefix_weights(k).iter().enumerate() {
                let block = index_word(self.alphabet(), k, i);
                let g = self.sigma_b(&block, f)?;
                inner = self.combine(&[(S::one(), &inner), (w.clone(), &g)])?;
            }
            terms.push((weights.reset(k).clone(), inner));
        }
        let refs: Vec<(S, &CylinderFunction<S>)> = terms.iter().map(|(c, f)| (c.clone(), f)).collect();
        self.combine(&refs)
    }

    /// A pair of prefixes `u`, `v` of the set's depth with `1_B(u) = 1`,
    /// `1_B(v) = 0`; the first such words in table order.
    pub fn tail_class_witness(&self, set: &CylinderFunction<S>) -> Result<TailWitness> {
        self.check_alphabet(set)?;
        if let Some(bad) = set.table.iter().find(|v| !(v.is_zero() || v.is_one())) {
            return Err(Error::InvalidParameter { name: "set", reason: format!("value {} is not 0/1", bad.render()) });
        }
        let inside = set.table.iter().position(|v| v.is_one());
        let outside = set.table.iter().position(|v| v.is_zero());
        match (inside, outside) {
            (Some(i), Some(o)) => Ok(TailWitness {
                inside: index_word(set.alphabet, set.depth, i),
                outside: index_word(set.alphabet, set.depth, o),
            }),
            _ => Err(Error::NoWitness),
        }
    }

    /// `H(xi^n) / n` for the first-coordinate partition, `n = 1..=horizon`.
    pub fn ks_entropy(&self, horizon: usize) -> Result<Vec<f64>> {
        self.check_depth(horizon)?;
        Ok((1..=horizon).map(|n| scalar::shannon_entropy(&self.prefix_weights(n)) / n as f64).collect())
    }
}

impl TailWitness {
    /// Checks the pair on concrete sequences `u z`, `v z`: equal after
    /// dropping `|u|` coordinates, and separated by `set`.
    pub fn verify<S: Scalar>(&self, set: &CylinderFunction<S>, tail: &[usize]) -> bool {
        let x: Vec<usize> = self.inside.iter().chain(tail).copied().collect();
        let y: Vec<usize> = self.outside.iter().chain(tail).copied().collect();
        let n = self.inside.len();
        self.inside.len() == self.outside.len() && x[n..] == y[n..] && set.eval(&x).is_one() && set.eval(&y).is_zero()
    }
}

impl<S: Scalar> Backend<S> for ShiftSystem<S> {
    type Func = CylinderFunction<S>;
    type Point = Vec<usize>;

    fn constant(&self, c: S) -> Self::Func {
        CylinderFunction::constant(self.alphabet(), c)
    }

    fn values<'a>(&self, f: &'a Self::Func) -> &'a [S] {
        &f.table
    }

    fn compose_map(&self, f: &Self::Func) -> Result<Self::Func> {
        self.koopman(f)
    }

    fn conditional(&self, f: &Self::Func, k: usize) -> Result<Self::Func> {
        self.ek(f, k)
    }

    fn integral(&self, f: &Self::Func) -> S {
        ShiftSystem::integral(self, f)
    }

    /// Pads every term to a common depth and trims the result.
    fn combine(&self, terms: &[(S, &Self::Func)]) -> Result<Self::Func> {
        for (_, f) in terms {
            self.check_alphabet(f)?;
        }
        let depth = terms.iter().map(|(_, f)| f.depth).max().unwrap_or(0);
        let mut table = vec![S::zero(); self.alphabet().pow(depth as u32)];
        for (c, f) in terms {
            let rep = self.alphabet().pow((depth - f.depth) as u32);
            for (i, v) in f.table.iter().enumerate() {
                let cv = c.mul_ref(v);
                for slot in &mut table[i * rep..(i + 1) * rep] {
                    *slot += &cv;
                }
            }
        }
        Ok(CylinderFunction { alphabet: self.alphabet(), depth, table }.trimmed())
    }

    fn random_point<R: Rng + ?Sized>(&self, _rng: &mut R) -> Vec<usize> {
        Vec::new()
    }

    fn map_point(&self, x: &Vec<usize>) -> Vec<usize> {
        x.iter().skip(1).copied().collect()
    }

    /// `T y` for `y = (C_1..C_k, x_{k+1}, ...)`: `k - 1` fresh symbols
    /// followed by the known coordinates of `x` beyond `k`.
    fn explode_point<R: Rng + ?Sized>(&self, x: &Vec<usize>, k: usize, rng: &mut R) -> Vec<usize> {
        let w: Vec<f64> = self.p.iter().map(|v| v.to_f64()).collect();
        let mut out: Vec<usize> = (1..k).map(|_| draw_index(&w, rng)).collect();
        out.extend(x.iter().skip(k));
        out
    }

    fn is_valid_point(&self, x: &Vec<usize>) -> bool {
        x.iter().all(|&c| c < self.alphabet())
    }

    fn func_json(&self, f: &Self::Func) -> serde_json::Value {
        serde_json::json!({
            "depth": f.depth,
            "table": f.table.iter().map(scalar::to_json).collect::<Vec<_>>(),
        })
    }

    fn random_function<R: Rng + ?Sized>(&self, rng: &mut R, nonnegative: bool) -> Self::Func {
        let depth = rng.random_range(0..=3usize);
        let table = (0..self.alphabet().pow(depth as u32)).map(|_| random_value(rng, nonnegative)).collect();
        CylinderFunction { alphabet: self.alphabet(), depth, table }
    }

    fn probe_functions(&self) -> Vec<Self::Func> {
        let s = self.alphabet();
        let mut out = vec![self.constant(S::one())];
        for depth in 1..=2 {
            for i in 0..s.pow(depth as u32) {
                out.push(CylinderFunction::indicator(s, &index_word(s, depth, i)).expect("valid word"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::weights::custom_weights;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn fair() -> ShiftSystem<Rational> {
        ShiftSystem::fair_coin()
    }

    fn biased() -> ShiftSystem<Rational> {
        ShiftSystem::new(vec![q(1, 4), q(3, 4)]).unwrap()
    }

    fn ind(word: &[usize]) -> CylinderFunction<Rational> {
        CylinderFunction::indicator(2, word).unwrap()
    }

    /// `x_j == value` as a depth-`j` table.
    fn coordinate_is(j: usize, value: usize) -> CylinderFunction<Rational> {
        let table =
            (0..1usize << j).map(|i| if index_word(2, j, i)[j - 1] == value { q(1, 1) } else { q(0, 1) }).collect();
        CylinderFunction::new(2, j, table).unwrap()
    }

    /// Brute force: enumerate every prefix `C` of the fiber and evaluate
    /// `f(T(C, x_{k+1}, ...))` directly on words.
    fn ek_oracle(sh: &ShiftSystem<Rational>, f: &CylinderFunction<Rational>, k: usize) -> CylinderFunction<Rational> {
        let depth = (f.depth + 1).max(k);
        let table = (0..2usize.pow(depth as u32))
            .map(|i| {
                let x = index_word(2, depth, i);
                let mut acc = q(0, 1);
                for c in 0..2usize.pow(k as u32) {
                    let prefix = index_word(2, k, c);
                    let y: Vec<usize> = prefix.iter().chain(&x[k..]).copied().collect();
                    let ty = &y[1..];
                    let padded: Vec<usize> = ty.iter().copied().chain(std::iter::repeat(0)).take(f.depth).collect();
                    acc += sh.word_probability(&prefix) * f.eval(&padded);
                }
                acc
            })
            .collect();
        CylinderFunction::new(2, depth, table).unwrap()
    }

    #[test]
    fn indexing_is_first_coordinate_major() {
        assert_eq!(word_index(2, &[1, 0]), 2);
        assert_eq!(index_word(2, 3, 6), vec![1, 1, 0]);
        assert_eq!(parse_word(2, "10").unwrap(), vec![1, 0]);
        assert!(parse_word(2, "12").is_err());
    }

    #[test]
    fn rejects_bad_measures() {
        assert_eq!(ShiftSystem::new(vec![q(1, 1)]).unwrap_err().code(), "invalid_parameter");
        assert_eq!(ShiftSystem::new(vec![q(1, 1), q(0, 1)]).unwrap_err().code(), "weights_non_positive");
        assert_eq!(ShiftSystem::new(vec![q(1, 2), q(1, 4)]).unwrap_err().code(), "weights_not_normalized");
    }

    #[test]
    fn integral_examples() {
        assert_eq!(fair().integral(&CylinderFunction::constant(2, q(5, 3))), q(5, 3));
        assert_eq!(fair().integral(&ind(&[1])), q(1, 2));
        assert_eq!(biased().integral(&ind(&[1, 1])), q(9, 16));
    }

    #[test]
    fn koopman_examples() {
        let sh = fair();
        let c = sh.koopman(&CylinderFunction::constant(2, q(2, 1))).unwrap();
        assert_eq!(c.depth, 1);
        assert_eq!(c.table, vec![q(2, 1), q(2, 1)]);
        assert_eq!(sh.koopman(&ind(&[1])).unwrap(), coordinate_is(2, 1));
    }

    #[test]
    fn ek_examples() {
        let sh = fair();
        assert!(sh.ek(&ind(&[1]), 1).unwrap().agrees_with(&coordinate_is(2, 1), 0.0));
        let e2 = sh.ek(&ind(&[1]), 2).unwrap();
        assert!(e2.table.iter().all(|v| *v == q(1, 2)));
        for k in 1..5 {
            let e = biased().ek(&CylinderFunction::constant(2, q(7, 5)), k).unwrap();
            assert!(e.table.iter().all(|v| *v == q(7, 5)));
            assert_eq!(e.depth, k);
        }
        assert_eq!(sh.ek(&ind(&[1]), 0).unwrap_err().code(), "invalid_parameter");
    }

    #[test]
    fn ek_respects_budget() {
        let sh = fair().with_depth_budget(4);
        assert!(sh.ek(&ind(&[1, 1, 1]), 2).is_ok());
        assert_eq!(sh.ek(&ind(&[1, 1, 1, 1]), 2).unwrap_err(), Error::DepthBudgetExceeded { depth: 5, budget: 4 });
    }

    #[test]
    fn sigma_b_examples() {
        let sh = fair();
        let zero = sh.sigma_b(&[0], &ind(&[1])).unwrap();
        assert!(zero.table.iter().all(|v| v.is_zero()));
        let one = sh.sigma_b(&[1], &ind(&[1])).unwrap();
        assert!(one.table.iter().all(|v| v.is_one()));
        // sigma_1 x = (1, x_3, x_4, ...)
        assert!(sh.sigma_b(&[1], &ind(&[1, 0])).unwrap().agrees_with(&coordinate_is(3, 0), 0.0));
        let c = sh.sigma_b(&[1, 0, 1], &CylinderFunction::constant(2, q(3, 1))).unwrap();
        assert!(c.table.iter().all(|v| *v == q(3, 1)));
        assert_eq!(sh.sigma_b(&[2], &ind(&[1])).unwrap_err().code(), "symbol_out_of_range");
    }

    #[test]
    fn example_level1_examples() {
        let sh = fair();
        let w = custom_weights(vec![q(2, 3), q(1, 3)], 2).unwrap();
        let out = sh.example_operator_level1(&[ind(&[1]), ind(&[1])], &w).unwrap();
        assert!(out.table.iter().all(|v| *v == q(1, 2)));
        let c = CylinderFunction::constant(2, q(3, 7));
        let out = sh.example_operator_level1(&[c.clone(), c.clone()], &w).unwrap();
        assert!(out.table.iter().all(|v| *v == q(3, 7)));
        assert_eq!(sh.example_operator_level1(&[c], &w).unwrap_err().code(), "cap_mismatch");
    }

    #[test]
    fn tail_witness_examples() {
        let sh = fair();
        let w = sh.tail_class_witness(&ind(&[1])).unwrap();
        assert_eq!((w.inside.clone(), w.outside.clone()), (vec![1], vec![0]));
        assert!(w.verify(&ind(&[1]), &[0, 1, 1]));
        let w = sh.tail_class_witness(&ind(&[1, 0])).unwrap();
        assert_eq!(w.inside, vec![1, 0]);
        assert_ne!(w.outside, vec![1, 0]);
        let all = CylinderFunction::new(2, 1, vec![q(1, 1), q(1, 1)]).unwrap();
        assert_eq!(sh.tail_class_witness(&all).unwrap_err(), Error::NoWitness);
    }

    #[test]
    fn entropy_of_coordinate_partition() {
        for h in fair().ks_entropy(12).unwrap() {
            assert!((h - 2f64.ln()).abs() < 1e-12);
        }
        let h0 = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        for h in biased().ks_entropy(10).unwrap() {
            assert!((h - h0).abs() < 1e-12);
        }
        assert!(fair().with_depth_budget(5).ks_entropy(6).is_err());
    }

    #[test]
    fn trimming_is_lossless() {
        let f = ind(&[1]).extend_to(4);
        let t = f.clone().trimmed();
        assert_eq!(t.depth, 1);
        assert!(t.agrees_with(&f, 0.0));
    }

    fn table_strategy() -> impl Strategy<Value = CylinderFunction<Rational>> {
        (0usize..=4).prop_flat_map(|d| {
            prop::collection::vec(-8i64..=8, 1usize << d)
                .prop_map(move |v| CylinderFunction::new(2, d, v.into_iter().map(|x| q(x, 8)).collect()).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ek_matches_enumeration(f in table_strategy(), k in 1usize..=5, biased_coin in any::<bool>()) {
            let sh = if biased_coin { biased() } else { fair() };
            let got = sh.ek(&f, k).unwrap();
            prop_assert_eq!(got.depth, (f.depth + 1).max(k));
            prop_assert_eq!(got.table, ek_oracle(&sh, &f, k).table);
        }

        #[test]
        fn ek_preserves_mean_and_ignores_first_k(f in table_strategy(), k in 1usize..=6) {
            let sh = biased();
            let e = sh.ek(&f, k).unwrap();
            prop_assert_eq!(sh.integral(&e), sh.integral(&f));
            let block = 2usize.pow((e.depth - k) as u32);
            for chunk in e.table.chunks(block) {
                prop_assert_eq!(chunk, &e.table[..block]);
            }
        }

        #[test]
        fn ek_of_indicator_in_unit_interval(word in prop::collection::vec(0usize..2, 0..5), k in 1usize..6) {
            let e = biased().ek(&ind(&word), k).unwrap();
            prop_assert!(e.table.iter().all(|v| *v >= q(0, 1) && *v <= q(1, 1)));
        }

        #[test]
        fn koopman_preserves_integral(f in table_strategy()) {
            let sh = biased();
            prop_assert_eq!(sh.integral(&sh.koopman(&f).unwrap()), sh.integral(&f));
        }

        /// Integrating `f o sigma_B` equals integrating `f` against
        /// `delta_B x p^N` (the block followed by a fresh sequence).
        #[test]
        fn sigma_b_pushes_measure(f in table_strategy(), block in prop::collection::vec(0usize..2, 0..4)) {
            let sh = biased();
            let lhs = sh.integral(&sh.sigma_b(&block, &f).unwrap());
            let mut rhs = q(0, 1);
            let free = f.depth.saturating_sub(block.len());
            for i in 0..2usize.pow(free as u32) {
                let rest = index_word(2, free, i);
                let word: Vec<usize> = block.iter().chain(&rest).copied().take(f.depth).collect();
                rhs += sh.word_probability(&rest) * f.eval(&word);
            }
            prop_assert_eq!(lhs, rhs);
        }
    }
}
