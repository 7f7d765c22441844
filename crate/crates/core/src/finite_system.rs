//! Finite probability spaces with a measure-preserving map.
//!
//! On a finite space a self-map preserving a measure of full support is a
//! bijection, so every fiber `T^-k T^k x` is the singleton `{x}` and
//! `E_k f = f o T`. The fiber and disintegration machinery is still
//! computed from the general definitions; [`FiniteSystem::koopman`] is the
//! shortcut the operator uses for the invertible case.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::backend::{draw_index, random_value, Backend};
use crate::error::{Error, Result};
use crate::scalar::{self, Scalar, WEIGHT_TOLERANCE};

/// Point-indexed values.
pub type PointFunction<S> = Vec<S>;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSystem<S: Scalar> {
    mu: Vec<S>,
    map: Vec<usize>,
    fibers: Vec<FiberPartition<S>>,
}

/// Atoms of `xi_k`: points grouped by their image under `T^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberPartition<S: Scalar> {
    pub k: usize,
    pub classes: Vec<Vec<usize>>,
    pub class_of: Vec<usize>,
    #[serde(serialize_with = "scalar::serialize_vec")]
    pub quotient_weights: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleDecomposition {
    pub ergodic: bool,
    pub cycles: Vec<Vec<usize>>,
}

impl<S: Scalar> FiniteSystem<S> {
    /// Validates and builds a system; fails on the first violated invariant.
    pub fn new(mu: Vec<S>, map: Vec<usize>) -> Result<Self> {
        match Self::violations(&mu, &map).into_iter().next() {
            Some(e) => Err(e),
            None => Ok(FiniteSystem { mu, map, fibers: Vec::new() }),
        }
    }

    /// Every violated invariant, with the offending index.
    pub fn violations(mu: &[S], map: &[usize]) -> Vec<Error> {
        let n = mu.len();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Error::InvalidParameter { name: "mu", reason: "empty space".into() });
            return out;
        }
        if map.len() != n {
            out.push(Error::LengthMismatch { expected: n, got: map.len() });
            return out;
        }
        for (point, m) in mu.iter().enumerate() {
            if !m.is_strictly_positive() {
                out.push(Error::NonPositiveMass { point });
            }
        }
        let total = scalar::sum(mu);
        if !total.close(&S::one(), WEIGHT_TOLERANCE) {
            out.push(Error::NotNormalized { sum: total.render() });
        }
        let mut preimage: Vec<Option<usize>> = vec![None; n];
        for (point, &image) in map.iter().enumerate() {
            if image >= n {
                out.push(Error::ImageOutOfRange { point, image });
                continue;
            }
            match preimage[image] {
                Some(first) => out.push(Error::NotInjective { first, second: point, image }),
                None => preimage[image] = Some(point),
            }
        }
        for (point, &image) in map.iter().enumerate() {
            if image < n && !mu[image].close(&mu[point], WEIGHT_TOLERANCE) {
                out.push(Error::MeasureNotPreserved {
                    point,
                    mass: mu[point].render(),
                    image_mass: mu[image].render(),
                });
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn mu(&self) -> &[S] {
        &self.mu
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn iterate_point(&self, mut x: usize, k: usize) -> usize {
        for _ in 0..k {
            x = self.map[x];
        }
        x
    }

    fn group_by_image(&self, k: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
        let mut index: BTreeMap<usize, usize> = BTreeMap::new();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of = vec![0; self.len()];
        for (x, slot) in class_of.iter_mut().enumerate() {
            let image = self.iterate_point(x, k);
            let c = *index.entry(image).or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            classes[c].push(x);
            *slot = c;
        }
        (classes, class_of)
    }

    pub fn fiber_partition(&self, k: usize) -> Result<FiberPartition<S>> {
        if k < 1 {
            return Err(Error::InvalidParameter { name: "k", reason: "order must be at least 1".into() });
        }
        if let Some(cached) = self.fibers.get(k - 1) {
            return Ok(cached.clone());
        }
        Ok(self.compute_fibers(k))
    }

    fn compute_fibers(&self, k: usize) -> FiberPartition<S> {
        let (classes, class_of) = self.group_by_image(k);
        let quotient_weights = classes.iter().map(|c| scalar::sum(c.iter().map(|&x| &self.mu[x]))).collect();
        FiberPartition { k, classes, class_of, quotient_weights }
    }

    fn with_fibers<T>(&self, k: usize, f: impl FnOnce(&FiberPartition<S>) -> T) -> Result<T> {
        match self.fibers.get(k.wrapping_sub(1)) {
            Some(p) => Ok(f(p)),
            None => Ok(f(&self.fiber_partition(k)?)),
        }
    }

    /// The conditional measure on the atom containing `x`.
    pub fn disintegration(&self, part: &FiberPartition<S>, x: usize) -> Result<Vec<S>> {
        if x >= self.len() {
            return Err(Error::IndexOutOfRange { index: x, max: self.len() - 1 });
        }
        let c = part.class_of[x];
        let mass = &part.quotient_weights[c];
        let mut out = vec![S::zero(); self.len()];
        for &y in &part.classes[c] {
            out[y] = self.mu[y].div_ref(mass);
        }
        Ok(out)
    }

    fn check_len(&self, f: &[S]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: f.len() });
        }
        Ok(())
    }

    /// `f o T`.
    pub fn koopman(&self, f: &[S]) -> Result<PointFunction<S>> {
        self.check_len(f)?;
        Ok(self.map.iter().map(|&t| f[t].clone()).collect())
    }

    /// `E_k f(x) = sum_{y in xi_k(x)} mu(y) / mu(xi_k(x)) * f(T y)`.
    pub fn conditional_operator(&self, k: usize, f: &[S]) -> Result<PointFunction<S>> {
        self.check_len(f)?;
        self.with_fibers(k, |part| {
            let class_values: Vec<S> = part
                .classes
                .iter()
                .zip(&part.quotient_weights)
                .map(|(class, mass)| {
                    let mut acc = S::zero();
                    for &y in class {
                        acc += &self.mu[y].mul_ref(&f[self.map[y]]);
                    }
                    acc.div_ref(mass)
                })
                .collect();
            part.class_of.iter().map(|&c| class_values[c].clone()).collect()
        })
    }

    /// Classes of `x ~ x'` iff `T^n x = T^n x'` for some `n`. Trajectories
    /// that merge stay merged, so grouping by `T^len` suffices.
    pub fn equivalence_classes(&self) -> Vec<Vec<usize>> {
        self.group_by_image(self.len()).0
    }

    pub fn cycle_decomposition(&self) -> CycleDecomposition {
        let mut seen = vec![false; self.len()];
        let mut cycles = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x);
                x = self.map[x];
            }
            cycles.push(cycle);
        }
        CycleDecomposition { ergodic: cycles.len() == 1, cycles }
    }

    /// `H(xi v T^-1 xi v ... v T^-(N-1) xi) / N` for `N = 1..=horizon`, in nats.
    pub fn ks_entropy(&self, partition: &[Vec<usize>], horizon: usize) -> Result<Vec<f64>> {
        let label = self.partition_labels(partition)?;
        let mut signature: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        let mut out = Vec::with_capacity(horizon);
        let mut current: Vec<usize> = (0..self.len()).collect();
        for n in 1..=horizon {
            for (sig, cur) in signature.iter_mut().zip(current.iter_mut()) {
                sig.push(label[*cur]);
                *cur = self.map[*cur];
            }
            let mut atoms: BTreeMap<&[usize], S> = BTreeMap::new();
            for (sig, m) in signature.iter().zip(&self.mu) {
                *atoms.entry(sig).or_insert_with(S::zero) += m;
            }
            out.push(scalar::shannon_entropy(atoms.values()) / n as f64);
        }
        Ok(out)
    }

    fn partition_labels(&self, partition: &[Vec<usize>]) -> Result<Vec<usize>> {
        let mut label = vec![usize::MAX; self.len()];
        for (i, atom) in partition.iter().enumerate() {
            if atom.is_empty() {
                return Err(Error::InvalidPartition(format!("atom {i} is empty")));
            }
            for &x in atom {
                if x >= self.len() {
                    return Err(Error::InvalidPartition(format!("point {x} out of range")));
                }
                if label[x] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("point {x} appears twice")));
                }
                label[x] = i;
            }
        }
        if let Some(x) = label.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidPartition(format!("point {x} is not covered")));
        }
        Ok(label)
    }

    pub fn singleton_partition(&self) -> Vec<Vec<usize>> {
        (0..self.len()).map(|x| vec![x]).collect()
    }

    pub fn indicator(&self, set: &[usize]) -> Result<PointFunction<S>> {
        let mut out = vec![S::zero(); self.len()];
        for &x in set {
            if x >= self.len() {
                return Err(Error::IndexOutOfRange { index: x, max: self.len() - 1 });
            }
            out[x] = S::one();
        }
        Ok(out)
    }

    pub fn measure_of(&self, set: &[usize]) -> S {
        scalar::sum(set.iter().map(|&x| &self.mu[x]))
    }
}

impl<S: Scalar> Backend<S> for FiniteSystem<S> {
    type Func = PointFunction<S>;
    type Point = usize;

    fn constant(&self, c: S) -> Self::Func {
        vec![c; self.len()]
    }

    fn values<'a>(&self, f: &'a Self::Func) -> &'a [S] {
        f
    }

    fn compose_map(&self, f: &Self::Func) -> Result<Self::Func> {
        self.koopman(f)
    }

    fn conditional(&self, f: &Self::Func, k: usize) -> Result<Self::Func> {
        self.conditional_operator(k, f)
    }

    fn integral(&self, f: &Self::Func) -> S {
        let mut acc = S::zero();
        for (m, v) in self.mu.iter().zip(f) {
            acc += &m.mul_ref(v);
        }
        acc
    }

    fn combine(&self, terms: &[(S, &Self::Func)]) -> Result<Self::Func> {
        let mut out = vec![S::zero(); self.len()];
        for (c, f) in terms {
            self.check_len(f)?;
            for (o, v) in out.iter_mut().zip(f.iter()) {
                *o += &c.mul_ref(v);
            }
        }
        Ok(out)
    }

    fn prepare(&mut self, cap: usize) {
        self.fibers = (1..=cap).map(|k| self.compute_fibers(k)).collect();
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let w: Vec<f64> = self.mu.iter().map(|m| m.to_f64()).collect();
        draw_index(&w, rng)
    }

    fn map_point(&self, x: &usize) -> usize {
        self.map[*x]
    }

    fn explode_point<R: Rng + ?Sized>(&self, x: &usize, k: usize, rng: &mut R) -> usize {
        let mut pick = |part: &FiberPartition<S>| {
            let class = &part.classes[part.class_of[*x]];
            if class.len() == 1 {
                return class[0];
            }
            let w: Vec<f64> = class.iter().map(|&y| self.mu[y].to_f64()).collect();
            class[draw_index(&w, rng)]
        };
        let y = match self.fibers.get(k - 1) {
            Some(part) => pick(part),
            None => pick(&self.compute_fibers(k)),
        };
        self.map[y]
    }

    fn is_valid_point(&self, x: &usize) -> bool {
        *x < self.len()
    }

    fn func_json(&self, f: &Self::Func) -> serde_json::Value {
        serde_json::Value::Array(f.iter().map(scalar::to_json).collect())
    }

    fn as_finite(&self) -> Option<&FiniteSystem<S>> {
        Some(self)
    }

    fn random_function<R: Rng + ?Sized>(&self, rng: &mut R, nonnegative: bool) -> Self::Func {
        (0..self.len()).map(|_| random_value(rng, nonnegative)).collect()
    }

    fn probe_functions(&self) -> Vec<Self::Func> {
        (0..self.len()).map(|x| self.indicator(&[x]).expect("in range")).collect()
    }
}

/// `n`-cycle `0 -> 1 -> ... -> n-1 -> 0` with uniform measure.
pub fn cycle<S: Scalar>(n: usize) -> FiniteSystem<S> {
    let mu = vec![S::from_ratio(1, n as i64); n];
    let map = (0..n).map(|x| (x + 1) % n).collect();
    FiniteSystem::new(mu, map).expect("uniform cycle is valid")
}

/// Identity map on `n` points with uniform measure.
pub fn identity<S: Scalar>(n: usize) -> FiniteSystem<S> {
    let mu = vec![S::from_ratio(1, n as i64); n];
    FiniteSystem::new(mu, (0..n).collect()).expect("identity is valid")
}
