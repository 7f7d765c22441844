//! The `explode` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on input errors
//! (with a JSON error document on stderr).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::{self, Observable};
use crate::definition::{BackendSpec, Mode, SystemDefinition};
use crate::error::Error;
use crate::finite_system::FiniteSystem;
use crate::operator::{ExplodingOperator, State};
use crate::scalar::{Rational, Scalar};
use crate::shift_system::{parse_word, CylinderFunction, ShiftSystem, DEFAULT_DEPTH_BUDGET};

pub const DEPTH_BUDGET_VAR: &str = "EXPLODE_DEPTH_BUDGET";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "explode", version, about = "Exploding operators over finite systems and Bernoulli shifts")]
pub struct Cli {
    /// Output file. Table-producing commands write their CSV here and keep
    /// the JSON summary on stdout; other commands write their JSON here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for sampling commands; overrides the definition's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Arithmetic; overrides the definition's mode. Defaults to rational.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a definition and echo it normalized.
    Validate { file: PathBuf },
    /// Export the transition kernel (finite backend).
    Kernel { file: PathBuf },
    /// Markov axioms and, for finite systems, the ergodicity tests.
    Check { file: PathBuf },
    /// Pointwise-factor report.
    Factors {
        file: PathBuf,
        /// Cylinder set `[w]` to separate (shift backend).
        #[arg(long)]
        word: Option<String>,
        /// Without --word, every 0/1 cylinder set up to this depth (shift backend).
        #[arg(long, default_value_t = 2)]
        max_depth: usize,
    },
    /// Sup-norm discrepancy table against pure transport (shift backend).
    Lemma {
        file: PathBuf,
        #[arg(long, default_value = "1")]
        word: String,
        #[arg(long, default_value_t = 6)]
        i_max: usize,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
    },
    /// Entropy of joins of the base system and summability of R.
    Entropy {
        file: PathBuf,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        /// Finite backend partition, atoms separated by `;`, e.g. `0,1;2,3`.
        /// Defaults to singletons.
        #[arg(long)]
        partition: Option<String>,
    },
    /// Sample a trajectory; occupancy against nu and a Birkhoff average (finite backend).
    Simulate {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        /// `const:c`, `set:x,y,...` or `level:k`.
        #[arg(long, default_value = "const:1")]
        observable: String,
        /// Start state `x,k`; drawn from nu when omitted.
        #[arg(long)]
        start: Option<String>,
    },
    /// Compare the level-1 formula with the block-shift formula (shift backend).
    Compare {
        file: PathBuf,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

struct Failure {
    code: i32,
    body: Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: 2, body: json!({"error": {"code": e.code(), "message": e.to_string()}}) }
    }
}

fn input_error(code: &str, message: impl Into<String>) -> Failure {
    Failure { code: 2, body: json!({"error": {"code": code, "message": message.into()}}) }
}

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    input_error("io_error", format!("{}: {e}", path.display()))
}

type CmdResult = Result<(Value, bool), Failure>;

pub fn run(cli: &Cli) -> Outcome {
    match execute(cli) {
        Ok((stdout, code)) => Outcome { stdout, stderr: String::new(), code },
        Err(f) => Outcome { stdout: String::new(), stderr: pretty(&f.body), code: f.code },
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn file_of(cmd: &Command) -> &Path {
    match cmd {
        Command::Validate { file }
        | Command::Kernel { file }
        | Command::Check { file }
        | Command::Factors { file, .. }
        | Command::Lemma { file, .. }
        | Command::Entropy { file, .. }
        | Command::Simulate { file, .. }
        | Command::Compare { file, .. } => file,
    }
}

fn execute(cli: &Cli) -> Result<(String, i32), Failure> {
    let path = file_of(&cli.command);
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let def = SystemDefinition::parse(&text)?;
    let mode = cli.mode.or(def.mode).unwrap_or(Mode::Rational);
    let budget = match std::env::var(DEPTH_BUDGET_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| input_error("invalid_parameter", format!("{DEPTH_BUDGET_VAR}={v} is not a depth")))?,
        Err(_) => DEFAULT_DEPTH_BUDGET,
    };
    let ctx = Context { cli, def: &def, seed: cli.seed.or(def.seed).unwrap_or(0), budget };
    match mode {
        Mode::Rational => ctx.dispatch::<Rational>(),
        Mode::Float => ctx.dispatch::<f64>(),
    }
}

struct Context<'a> {
    cli: &'a Cli,
    def: &'a SystemDefinition,
    seed: u64,
    budget: usize,
}

impl Context<'_> {
    fn dispatch<S: Scalar>(&self) -> Result<(String, i32), Failure> {
        let has_table =
            matches!(self.cli.command, Command::Kernel { .. } | Command::Lemma { .. } | Command::Simulate { .. });
        if self.cli.format == Format::Csv && !has_table {
            return Err(input_error("unsupported_format", "csv output is available for kernel, lemma and simulate"));
        }
        let (report, passed, table) = match &self.cli.command {
            Command::Validate { .. } => self.validate::<S>().map(|(v, ok)| (v, ok, None))?,
            Command::Kernel { .. } => self.kernel::<S>()?,
            Command::Check { .. } => self.check::<S>().map(|(v, ok)| (v, ok, None))?,
            Command::Factors { word, max_depth, .. } => {
                self.factors::<S>(word.as_deref(), *max_depth).map(|(v, ok)| (v, ok, None))?
            }
            Command::Lemma { word, i_max, n_max, .. } => self.lemma::<S>(word, *i_max, *n_max)?,
            Command::Entropy { n_max, partition, .. } => {
                self.entropy::<S>(*n_max, partition.as_deref()).map(|(v, ok)| (v, ok, None))?
            }
            Command::Simulate { steps, observable, start, .. } => {
                self.simulate::<S>(*steps, observable, start.as_deref())?
            }
            Command::Compare { samples, .. } => self.compare::<S>(*samples).map(|(v, ok)| (v, ok, None))?,
        };
        let code = if passed { 0 } else { 1 };
        let report = pretty(&report);
        let stdout = match (&self.cli.out, table) {
            (Some(path), Some(csv)) => {
                fs::write(path, csv).map_err(|e| io_error(path, e))?;
                report
            }
            (Some(path), None) => {
                fs::write(path, report).map_err(|e| io_error(path, e))?;
                String::new()
            }
            (None, Some(csv)) if self.cli.format == Format::Csv => csv,
            _ => report,
        };
        Ok((stdout, code))
    }

    fn finite<S: Scalar>(&self) -> Result<ExplodingOperator<S, FiniteSystem<S>>, Failure> {
        Ok(ExplodingOperator::build(self.def.finite::<S>()?, self.def.weights::<S>()?))
    }

    fn shift<S: Scalar>(&self) -> Result<ExplodingOperator<S, ShiftSystem<S>>, Failure> {
        let sys = self.def.shift::<S>()?.with_depth_budget(self.budget);
        Ok(ExplodingOperator::build(sys, self.def.weights::<S>()?))
    }

    fn is_finite(&self) -> bool {
        matches!(self.def.backend, BackendSpec::Finite { .. })
    }

    fn validate<S: Scalar>(&self) -> CmdResult {
        let errors = self.def.violations::<S>();
        if errors.is_empty() {
            return Ok((self.def.normalized::<S>()?, true));
        }
        let list: Vec<Value> = errors.iter().map(|e| json!({"code": e.code(), "message": e.to_string()})).collect();
        Err(Failure { code: 2, body: json!({ "errors": list }) })
    }

    fn kernel<S: Scalar>(&self) -> Result<(Value, bool, Option<String>), Failure> {
        let op = self.finite::<S>()?;
        let m = op.to_matrix()?;
        let mut csv = Vec::new();
        m.write_csv(&mut csv).expect("in-memory write");
        let report = json!({"mode": S::MODE, "kernel": m});
        Ok((report, true, Some(String::from_utf8(csv).expect("utf-8 csv"))))
    }

    fn check<S: Scalar>(&self) -> CmdResult {
        if self.is_finite() {
            let op = self.finite::<S>()?;
            let functional = analysis::check_doubly_stochastic(&op)?;
            let kernel = analysis::check_kernel(&op.to_matrix()?, &op.stationary_vector()?);
            let ergodicity = analysis::ergodicity_report(&op)?;
            let passed = functional.passed() && kernel.passed() && ergodicity.agree;
            Ok((
                json!({"doubly_stochastic": functional, "kernel": kernel, "ergodicity": ergodicity, "passed": passed}),
                passed,
            ))
        } else {
            let op = self.shift::<S>()?;
            let functional = analysis::check_doubly_stochastic(&op)?;
            let passed = functional.passed();
            Ok((json!({"doubly_stochastic": functional, "ergodicity": Value::Null, "passed": passed}), passed))
        }
    }

    fn factors<S: Scalar>(&self, word: Option<&str>, max_depth: usize) -> CmdResult {
        if self.is_finite() {
            let r = analysis::finite_factor_report(&self.finite::<S>()?)?;
            let passed = r.embedding_verified;
            return Ok((json!(r), passed));
        }
        let sys = self.def.shift::<S>()?.with_depth_budget(self.budget);
        let sets = match word {
            Some(w) => vec![CylinderFunction::indicator(sys.alphabet(), &parse_word(sys.alphabet(), w)?)?],
            None => all_sets(sys.alphabet(), max_depth, self.budget)?,
        };
        let r = analysis::shift_factor_report(&sys, &sets, self.seed)?;
        let passed = r.all_verified;
        Ok((json!(r), passed))
    }

    fn lemma<S: Scalar>(
        &self,
        word: &str,
        i_max: usize,
        n_max: usize,
    ) -> Result<(Value, bool, Option<String>), Failure> {
        let op = self.shift::<S>()?;
        let word = parse_word(op.backend().alphabet(), word)?;
        let t = analysis::lemma_bound_table(&op, &word, i_max, n_max)?;
        let mut csv = Vec::new();
        t.write_csv(&mut csv).expect("in-memory write");
        let passed = t.passed();
        Ok((json!(t), passed, Some(String::from_utf8(csv).expect("utf-8 csv"))))
    }

    fn entropy<S: Scalar>(&self, n_max: usize, partition: Option<&str>) -> CmdResult {
        let weights = self.def.weights::<S>()?;
        let r = analysis::r_summability_report(&weights);
        let report = if self.is_finite() {
            let sys = self.def.finite::<S>()?;
            let partition = match partition {
                Some(p) => parse_partition(p)?,
                None => sys.singleton_partition(),
            };
            analysis::finite_entropy_report(&sys, &partition, n_max)?
        } else {
            if partition.is_some() {
                return Err(input_error("invalid_partition", "the shift uses its coordinate partition"));
            }
            analysis::shift_entropy_report(&self.def.shift::<S>()?.with_depth_budget(self.budget), n_max, 1e-12)?
        };
        let passed = report.within_bounds && r.geometric.as_ref().is_none_or(|g| g.matches);
        Ok((json!({"entropy": report, "r_summability": r, "passed": passed}), passed))
    }

    fn simulate<S: Scalar>(
        &self,
        steps: usize,
        observable: &str,
        start: Option<&str>,
    ) -> Result<(Value, bool, Option<String>), Failure> {
        let op = self.finite::<S>()?;
        let observable = Observable::<S>::parse(observable)?;
        let start = start.map(parse_state).transpose()?;
        let r = analysis::stationarity_and_birkhoff(&op, &observable, steps, self.seed, start)?;
        let mut csv = Vec::new();
        r.write_occupancy_csv(&mut csv).expect("in-memory write");
        Ok((json!(r), true, Some(String::from_utf8(csv).expect("utf-8 csv"))))
    }

    fn compare<S: Scalar>(&self, samples: usize) -> CmdResult {
        let op = self.shift::<S>()?;
        let r = analysis::compare_definition_example(&op, samples, self.seed)?;
        let passed = r.consistent;
        Ok((json!(r), passed))
    }
}

fn all_sets<S: Scalar>(alphabet: usize, max_depth: usize, budget: usize) -> Result<Vec<CylinderFunction<S>>, Failure> {
    if max_depth > 4 || max_depth > budget {
        return Err(input_error("invalid_parameter", "--max-depth above 4 enumerates too many sets"));
    }
    let mut sets = Vec::new();
    for depth in 1..=max_depth {
        let cells = alphabet.pow(depth as u32);
        for bits in 0u64..(1u64 << cells) {
            let table = (0..cells).map(|i| if bits >> i & 1 == 1 { S::one() } else { S::zero() }).collect();
            sets.push(CylinderFunction::new(alphabet, depth, table)?);
        }
    }
    Ok(sets)
}

fn parse_partition(text: &str) -> Result<Vec<Vec<usize>>, Failure> {
    text.split(';')
        .map(|atom| {
            atom.split(',')
                .map(|x| x.trim().parse().map_err(|_| input_error("invalid_partition", format!("bad point `{x}`"))))
                .collect()
        })
        .collect()
}

fn parse_state(text: &str) -> Result<State, Failure> {
    let bad = || input_error("invalid_state", format!("expected `x,k`, got `{text}`"));
    let (x, k) = text.split_once(',').ok_or_else(bad)?;
    Ok(State { x: x.trim().parse().map_err(|_| bad())?, level: k.trim().parse().map_err(|_| bad())? })
}

/// Parses the process arguments and runs; the returned value is the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let outcome = run(&cli);
    print!("{}", outcome.stdout);
    eprint!("{}", outcome.stderr);
    outcome.code
}
