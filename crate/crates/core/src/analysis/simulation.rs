//! Empirical occupancy and Birkhoff averages along sampled trajectories.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_system::FiniteSystem;
use crate::operator::{ExplodingOperator, State};
use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum Observable<S: Scalar> {
    Constant(S),
    /// `1_{A x levels}`.
    Set(Vec<usize>),
    /// `1_{X x {k}}`.
    Level(usize),
}

impl<S: Scalar> Observable<S> {
    /// `const:c`, `set:x,y,...` or `level:k`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Observable(text.to_string());
        let (kind, arg) = text.split_once(':').ok_or_else(bad)?;
        match kind {
            "const" => Ok(Observable::Constant(S::parse(arg).map_err(|_| bad())?)),
            "set" => arg
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse().map_err(|_| bad()))
                .collect::<Result<_>>()
                .map(Observable::Set),
            "level" => arg.trim().parse().map(Observable::Level).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }

    fn validate(&self, points: usize, cap: usize) -> Result<()> {
        match self {
            Observable::Set(set) if set.iter().any(|&x| x >= points) => {
                Err(Error::Observable(format!("set point out of range 0..{points}")))
            }
            Observable::Level(k) if *k < 1 || *k > cap => {
                Err(Error::Observable(format!("level {k} outside 1..={cap}")))
            }
            _ => Ok(()),
        }
    }

    fn eval(&self, x: usize, level: usize) -> S {
        let hit = match self {
            Observable::Constant(c) => return c.clone(),
            Observable::Set(set) => set.contains(&x),
            Observable::Level(k) => level == *k,
        };
        if hit {
            S::one()
        } else {
            S::zero()
        }
    }

    fn integral(&self, sys: &FiniteSystem<S>, op: &ExplodingOperator<S, FiniteSystem<S>>) -> S {
        match self {
            Observable::Constant(c) => c.clone(),
            Observable::Set(set) => {
                let mut unique = set.clone();
                unique.sort_unstable();
                unique.dedup();
                sys.measure_of(&unique)
            }
            Observable::Level(k) => op.weights().level_mass(*k).clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyRow {
    pub x: usize,
    pub k: usize,
    pub visits: usize,
    pub empirical: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport<S: Scalar> {
    pub seed: u64,
    pub steps: usize,
    pub start: Option<State>,
    /// `1/2 sum_y |occupancy(y) - nu(y)|` over the `steps + 1` visited states.
    pub tv_distance: f64,
    #[serde(serialize_with = "scalar::serialize")]
    pub birkhoff_average: S,
    #[serde(serialize_with = "scalar::serialize")]
    pub integral: S,
    #[serde(skip)]
    pub occupancy: Vec<OccupancyRow>,
}

impl<S: Scalar> SimulationReport<S> {
    /// CSV with header `x,k,visits,empirical,nu`.
    pub fn write_occupancy_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.occupancy {
            w.serialize(row)?;
        }
        w.flush()
    }
}

pub fn stationarity_and_birkhoff<S: Scalar>(
    op: &ExplodingOperator<S, FiniteSystem<S>>,
    observable: &Observable<S>,
    steps: usize,
    seed: u64,
    start: Option<State>,
) -> Result<SimulationReport<S>> {
    let sys = op.backend();
    let cap = op.cap();
    observable.validate(sys.len(), cap)?;
    let path = op.sample_path(start.map(|s| (s.x, s.level)), steps, seed)?;

    let mut visits = vec![0usize; sys.len() * cap];
    let mut total = S::zero();
    for &(x, level) in &path {
        visits[x * cap + level - 1] += 1;
        total += &observable.eval(x, level);
    }
    let count = path.len();
    let birkhoff_average = total.div_ref(&S::from_usize(count));

    let nu = op.stationary_vector()?;
    let occupancy: Vec<OccupancyRow> = visits
        .iter()
        .zip(&nu)
        .enumerate()
        .map(|(i, (&v, m))| OccupancyRow {
            x: i / cap,
            k: i % cap + 1,
            visits: v,
            empirical: v as f64 / count as f64,
            nu: m.to_f64(),
        })
        .collect();
    let tv_distance = 0.5 * occupancy.iter().map(|r| (r.empirical - r.nu).abs()).sum::<f64>();
    Ok(SimulationReport {
        seed,
        steps,
        start,
        tv_distance,
        birkhoff_average,
        integral: observable.integral(sys, op),
        occupancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_system::cycle;
    use crate::scalar::Rational;
    use crate::weights::{custom_weights, geometric_weights};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn parses_observables() {
        assert_eq!(Observable::<Rational>::parse("const:3/4").unwrap(), Observable::Constant(q(3, 4)));
        assert_eq!(Observable::<Rational>::parse("set:0, 1").unwrap(), Observable::Set(vec![0, 1]));
        assert_eq!(Observable::<Rational>::parse("level:2").unwrap(), Observable::Level(2));
        for bad in ["", "const", "set:a", "level:x", "foo:1"] {
            assert!(Observable::<Rational>::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn constant_average_is_exact() {
        let op = ExplodingOperator::build(cycle::<Rational>(3), geometric_weights(q(1, 2), 3).unwrap());
        let r = stationarity_and_birkhoff(&op, &Observable::Constant(q(5, 7)), 1000, 1, None).unwrap();
        assert_eq!(r.birkhoff_average, q(5, 7));
        assert_eq!(r.occupancy.iter().map(|o| o.visits).sum::<usize>(), 1001);
    }

    #[test]
    fn non_ergodic_average_stays_in_set() {
        let sys = FiniteSystem::new(vec![q(1, 4); 4], vec![1, 0, 3, 2]).unwrap();
        let op = ExplodingOperator::build(sys, custom_weights(vec![q(2, 3), q(1, 3)], 2).unwrap());
        let start = Some(State { x: 0, level: 1 });
        let r = stationarity_and_birkhoff(&op, &Observable::Set(vec![0, 1]), 2000, 4, start).unwrap();
        assert_eq!(r.birkhoff_average, q(1, 1));
        assert_eq!(r.integral, q(1, 2));
    }

    #[test]
    fn rejects_bad_observable() {
        let op = ExplodingOperator::build(cycle::<Rational>(3), geometric_weights(q(1, 2), 3).unwrap());
        assert_eq!(
            stationarity_and_birkhoff(&op, &Observable::Level(4), 10, 1, None).unwrap_err().code(),
            "invalid_observable"
        );
        assert!(stationarity_and_birkhoff(&op, &Observable::Set(vec![3]), 10, 1, None).is_err());
    }
}
