//! The interface an exploding operator needs from the underlying system.

use std::fmt::Debug;

use rand::Rng;

use crate::error::Result;
use crate::finite_system::FiniteSystem;
use crate::scalar::{self, Scalar};

/// A measure-preserving system `(X, mu, T)` together with a class of
/// functions on `X` closed under the operations the operator uses.
///
/// Functions are stored as value tables in which every entry carries
/// positive measure, so sup norms and positivity are entrywise.
pub trait Backend<S: Scalar>: Send + Sync {
    type Func: Clone + Debug + Send + Sync;
    type Point: Clone + Debug + Send;

    fn constant(&self, c: S) -> Self::Func;

    fn values<'a>(&self, f: &'a Self::Func) -> &'a [S];

    /// `f o T`.
    fn compose_map(&self, f: &Self::Func) -> Result<Self::Func>;

    /// `E_k f(x)`: the mean of `f o T` over the fiber `T^-k T^k x`
    /// under the disintegrated measure.
    fn conditional(&self, f: &Self::Func, k: usize) -> Result<Self::Func>;

    fn integral(&self, f: &Self::Func) -> S;

    /// `sum_i c_i f_i`.
    fn combine(&self, terms: &[(S, &Self::Func)]) -> Result<Self::Func>;

    /// Hook run once when an operator with `cap` levels is built.
    fn prepare(&mut self, _cap: usize) {}

    fn sup_distance(&self, f: &Self::Func, g: &Self::Func) -> Result<S> {
        let diff = self.combine(&[(S::one(), f), (-S::one(), g)])?;
        Ok(scalar::max_abs(self.values(&diff)))
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point;

    fn map_point(&self, x: &Self::Point) -> Self::Point;

    /// Draws `y` from the disintegration on `T^-k T^k x` and returns `T y`.
    fn explode_point<R: Rng + ?Sized>(&self, x: &Self::Point, k: usize, rng: &mut R) -> Self::Point;

    /// A pseudo-random probe function with values in `{0, 1/8, ..., 1}`,
    /// shifted to `[-1, 1]` unless `nonnegative`.
    fn random_function<R: Rng + ?Sized>(&self, rng: &mut R, nonnegative: bool) -> Self::Func;

    fn is_valid_point(&self, _x: &Self::Point) -> bool {
        true
    }

    fn func_json(&self, f: &Self::Func) -> serde_json::Value;

    /// The finite system behind this backend, if it is one.
    fn as_finite(&self) -> Option<&FiniteSystem<S>> {
        None
    }

    /// A finite family spanning (finite backend) or probing (shift backend)
    /// the function space.
    fn probe_functions(&self) -> Vec<Self::Func>;
}

pub(crate) fn random_value<S: Scalar, R: Rng + ?Sized>(rng: &mut R, nonnegative: bool) -> S {
    let v: i64 = rng.random_range(0..=8);
    if nonnegative {
        S::from_ratio(v, 8)
    } else {
        S::from_ratio(2 * v - 8, 8)
    }
}

/// Index drawn from unnormalized nonnegative weights.
pub(crate) fn draw_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}
