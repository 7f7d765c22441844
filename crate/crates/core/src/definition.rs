//! System-definition documents.
//!
//! ```json
//! {"backend": "finite", "mu": ["1/4", "1/4", "1/4", "1/4"], "map": [1, 2, 3, 0],
//!  "levels": {"kind": "geometric", "ratio": "1/2", "cap": 2}, "seed": 7, "mode": "rational"}
//! {"backend": "shift", "alphabet": 2, "p": [0.25, 0.75],
//!  "levels": {"kind": "custom", "a": ["2/3", "1/3"], "cap": 2}}
//! ```
//!
//! Numbers may be JSON numbers or strings (`"p/q"` or decimal); both are
//! read exactly in rational mode.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::finite_system::FiniteSystem;
use crate::scalar::{self, Scalar};
use crate::shift_system::ShiftSystem;
use crate::weights::{custom_weights, geometric_weights, CappedWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Finite { mu: Vec<String>, map: Vec<usize> },
    Shift { alphabet: usize, p: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LevelsSpec {
    Geometric { ratio: String, cap: usize },
    Custom { a: Vec<String>, cap: usize },
}

impl LevelsSpec {
    pub fn cap(&self) -> usize {
        match self {
            LevelsSpec::Geometric { cap, .. } | LevelsSpec::Custom { cap, .. } => *cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDefinition {
    pub backend: BackendSpec,
    pub levels: LevelsSpec,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDefinition {
    backend: String,
    mu: Option<Vec<Value>>,
    map: Option<Vec<usize>>,
    alphabet: Option<usize>,
    p: Option<Vec<Value>>,
    levels: RawLevels,
    seed: Option<u64>,
    mode: Option<Mode>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawLevels {
    Geometric { ratio: Value, cap: usize },
    Custom { a: Vec<Value>, cap: usize },
}

fn number(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.trim().to_string()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::Definition(format!("expected a number, found {other}"))),
    }
}

fn numbers(values: &[Value]) -> Result<Vec<String>> {
    values.iter().map(number).collect()
}

impl SystemDefinition {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawDefinition = serde_json::from_str(text).map_err(|e| Error::Definition(e.to_string()))?;
        let missing = |field: &str| Error::Definition(format!("missing field `{field}` for backend `{}`", raw.backend));
        let backend = match raw.backend.as_str() {
            "finite" => {
                if raw.alphabet.is_some() || raw.p.is_some() {
                    return Err(Error::Definition("finite backend takes `mu` and `map` only".into()));
                }
                BackendSpec::Finite {
                    mu: numbers(raw.mu.as_deref().ok_or_else(|| missing("mu"))?)?,
                    map: raw.map.clone().ok_or_else(|| missing("map"))?,
                }
            }
            "shift" => {
                if raw.mu.is_some() || raw.map.is_some() {
                    return Err(Error::Definition("shift backend takes `alphabet` and `p` only".into()));
                }
                let p = numbers(raw.p.as_deref().ok_or_else(|| missing("p"))?)?;
                BackendSpec::Shift { alphabet: raw.alphabet.unwrap_or(p.len()), p }
            }
            other => return Err(Error::Definition(format!("unknown backend `{other}`"))),
        };
        let levels = match raw.levels {
            RawLevels::Geometric { ratio, cap } => LevelsSpec::Geometric { ratio: number(&ratio)?, cap },
            RawLevels::Custom { a, cap } => LevelsSpec::Custom { a: numbers(&a)?, cap },
        };
        if levels.cap() < 2 {
            return Err(Error::InvalidParameter { name: "cap", reason: format!("{} < 2", levels.cap()) });
        }
        Ok(SystemDefinition { backend, levels, seed: raw.seed, mode: raw.mode })
    }

    pub fn weights<S: Scalar>(&self) -> Result<CappedWeights<S>> {
        match &self.levels {
            LevelsSpec::Geometric { ratio, cap } => geometric_weights(S::parse(ratio)?, *cap),
            LevelsSpec::Custom { a, cap } => {
                custom_weights(a.iter().map(|v| S::parse(v)).collect::<Result<_>>()?, *cap)
            }
        }
    }

    pub fn finite<S: Scalar>(&self) -> Result<FiniteSystem<S>> {
        match &self.backend {
            BackendSpec::Finite { mu, map } => {
                FiniteSystem::new(mu.iter().map(|v| S::parse(v)).collect::<Result<_>>()?, map.clone())
            }
            BackendSpec::Shift { .. } => Err(Error::Unsupported("expected a finite backend")),
        }
    }

    pub fn shift<S: Scalar>(&self) -> Result<ShiftSystem<S>> {
        match &self.backend {
            BackendSpec::Shift { alphabet, p } => {
                if *alphabet != p.len() {
                    return Err(Error::LengthMismatch { expected: *alphabet, got: p.len() });
                }
                ShiftSystem::new(p.iter().map(|v| S::parse(v)).collect::<Result<_>>()?)
            }
            BackendSpec::Finite { .. } => Err(Error::Unsupported("expected a shift backend")),
        }
    }

    /// Every violation found in the backend and the weights.
    pub fn violations<S: Scalar>(&self) -> Vec<Error> {
        let mut out = Vec::new();
        match &self.backend {
            BackendSpec::Finite { mu, map } => match mu.iter().map(|v| S::parse(v)).collect::<Result<Vec<S>>>() {
                Ok(mu) => out.extend(FiniteSystem::violations(&mu, map)),
                Err(e) => out.push(e),
            },
            BackendSpec::Shift { .. } => {
                if let Err(e) = self.shift::<S>() {
                    out.push(e);
                }
            }
        }
        if let Err(e) = self.weights::<S>() {
            out.push(e);
        }
        out
    }

    /// The document with numbers rendered in the chosen arithmetic and the
    /// derived reset weights added.
    pub fn normalized<S: Scalar>(&self) -> Result<Value> {
        let w = self.weights::<S>()?;
        let mut doc = serde_json::Map::new();
        match &self.backend {
            BackendSpec::Finite { map, .. } => {
                let sys = self.finite::<S>()?;
                doc.insert("backend".into(), "finite".into());
                doc.insert("mu".into(), sys.mu().iter().map(scalar::to_json).collect());
                doc.insert("map".into(), serde_json::json!(map));
            }
            BackendSpec::Shift { alphabet, .. } => {
                let sys = self.shift::<S>()?;
                doc.insert("backend".into(), "shift".into());
                doc.insert("alphabet".into(), serde_json::json!(alphabet));
                doc.insert("p".into(), sys.p().iter().map(scalar::to_json).collect());
            }
        }
        let mut levels = serde_json::Map::new();
        match w.geometric_ratio() {
            Some(r) => {
                levels.insert("kind".into(), "geometric".into());
                levels.insert("ratio".into(), scalar::to_json(r));
            }
            None => {
                levels.insert("kind".into(), "custom".into());
            }
        }
        levels.insert("cap".into(), serde_json::json!(w.cap));
        levels.insert("a".into(), w.a().iter().map(scalar::to_json).collect());
        levels.insert("b".into(), w.b().iter().map(scalar::to_json).collect());
        doc.insert("levels".into(), Value::Object(levels));
        if let Some(seed) = self.seed {
            doc.insert("seed".into(), serde_json::json!(seed));
        }
        doc.insert("mode".into(), S::MODE.into());
        Ok(Value::Object(doc))
    }
}
