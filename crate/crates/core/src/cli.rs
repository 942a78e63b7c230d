//! Command-line frontend. Every command prints one JSON [`OutputRecord`] on
//! stdout (or a CSV table for `estimate --csv`).
//!
//! Exit codes: 0 success, 1 a consistency check reported a mismatch,
//! 2 usage or domain error, 3 capacity, unsupported order, or infeasible input.

use std::collections::BTreeMap;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::estimator::{EstimateSeries, Estimator};
use crate::exactmath::{PPolynomial, Rational};
use crate::expansions::{self, MAX_D_ORDER, MAX_P_POWER, MAX_SQUARE_P_POWER};
use crate::lattice::LatticeSpec;
use crate::matchgen::{self, Guards};

/// Overrides the frontier-bit guard (hard ceiling 26).
pub const FRONTIER_BITS_ENV: &str = "DIMERLAB_MAX_FRONTIER_BITS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dimerlab",
    version,
    about = "Exact monomer-dimer counts and free-energy expansions"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Matching polynomial of a box such as 8x8 or 2x2x2
    Count(CountArgs),
    /// Evaluate a bound or series
    Eval(EvalArgs),
    /// Run the exact coefficient identity checks
    Check(CheckArgs),
    /// Finite-size estimates and bulk extrapolation
    Estimate(EstimateArgs),
    /// Export the coefficient tables
    Table,
}

#[derive(Debug, Args)]
struct CountArgs {
    spec: String,
    #[arg(long)]
    max_k: Option<usize>,
    /// Also run the exhaustive enumerator and compare
    #[arg(long)]
    oracle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Formula {
    #[value(name = "mean-field")]
    MeanField,
    #[value(name = "eq3", alias = "minc")]
    Minc,
    #[value(name = "eq4", alias = "fklm")]
    Fklm,
    #[value(name = "eq6", alias = "dimer-expansion")]
    DimerExpansion,
    #[value(name = "eq8", alias = "monomer-dimer-expansion")]
    MonomerDimerExpansion,
    #[value(name = "eq9", alias = "p-series")]
    PSeries,
    #[value(name = "eq16", alias = "square-p-series")]
    SquarePSeries,
    #[value(name = "eq15", alias = "square-dimer")]
    SquareDimer,
}

impl Formula {
    fn label(self) -> &'static str {
        match self {
            Formula::MeanField => "mean-field",
            Formula::Minc => "eq3",
            Formula::Fklm => "eq4",
            Formula::DimerExpansion => "eq6",
            Formula::MonomerDimerExpansion => "eq8",
            Formula::PSeries => "eq9",
            Formula::SquarePSeries => "eq16",
            Formula::SquareDimer => "eq15",
        }
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    formula: Formula,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    /// Expansion order in 1/d, or the highest power of p for the p-series
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Rearrange,
    D2,
    P1Reduction,
    All,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    which: Which,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    d: u32,
    #[arg(long, allow_hyphen_values = true)]
    p: String,
    /// Comma-separated, strictly increasing edge lengths
    #[arg(long)]
    sizes: String,
    /// Add bounds and series with containment flags
    #[arg(long)]
    compare: bool,
    /// Flat CSV table instead of JSON
    #[arg(long)]
    csv: bool,
}

/// One command's machine-readable result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub results: BTreeMap<String, Value>,
    pub provenance: Vec<String>,
}

impl OutputRecord {
    fn new(command: &str) -> Self {
        OutputRecord {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            results: BTreeMap::new(),
            provenance: Vec::new(),
        }
    }

    fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    fn result(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.results.insert(key.to_string(), value.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize") + "\n"
    }
}

/// What a run produced: exit code plus the text for each stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String, code: i32) -> Self {
        Outcome {
            code,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(code: i32, message: String) -> Self {
        Outcome {
            code,
            stdout: String::new(),
            stderr: message,
        }
    }
}

/// A command failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Validation(_) | Error::Domain(_) | Error::Range { .. } => EXIT_USAGE,
            Error::Capacity { .. }
            | Error::UnsupportedOrder { .. }
            | Error::InfeasibleDensity { .. }
            | Error::Fit(_) => EXIT_CAPACITY,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Formats `x` as a plain decimal with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    let decimals = (11 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn rational_str(r: &Rational) -> Value {
    Value::String(format!("{}/{}", r.numer(), r.denom()))
}

fn poly_json(poly: &PPolynomial) -> Value {
    let map: serde_json::Map<String, Value> = poly
        .terms()
        .map(|(k, c)| (k.to_string(), rational_str(c)))
        .collect();
    Value::Object(map)
}

/// Parses `p` exactly from its decimal text.
fn parse_density(text: &str) -> Result<(Rational, f64), Failure> {
    let exact = Rational::from_decimal_str(text)
        .ok_or_else(|| Failure::usage(format!("cannot parse density {text:?}")))?;
    let value = exact.to_f64();
    if exact.is_negative() || value > 1.0 {
        return Err(Error::Domain(format!("density p must lie in [0, 1], got {text}")).into());
    }
    Ok((exact, value))
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Failure::usage(format!("cannot parse sizes {text:?}")))
        })
        .collect()
}

fn guards_from_env(var: Option<&str>) -> Result<Guards, Failure> {
    match var {
        None => Ok(Guards::default()),
        Some(text) => {
            let bits: u32 = text.trim().parse().map_err(|_| {
                Failure::usage(format!("{FRONTIER_BITS_ENV}={text:?} is not an integer"))
            })?;
            Ok(Guards::with_frontier_bits(bits)?)
        }
    }
}

/// Runs one invocation. `args` includes the program name; `frontier_bits` is
/// the value of [`FRONTIER_BITS_ENV`], if set.
pub fn run<I, T>(args: I, frontier_bits: Option<&str>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome::fail(EXIT_USAGE, text)
            } else {
                Outcome::ok(text, EXIT_OK)
            };
        }
    };
    let result = guards_from_env(frontier_bits).and_then(|guards| match cli.command {
        Command::Count(a) => cmd_count(&a, &guards).map(|r| (r.to_json(), EXIT_OK)),
        Command::Eval(a) => cmd_eval(&a).map(|r| (r.to_json(), EXIT_OK)),
        Command::Check(a) => {
            cmd_check(&a).map(|(r, ok)| (r.to_json(), if ok { EXIT_OK } else { EXIT_CHECK_FAILED }))
        }
        Command::Estimate(a) => cmd_estimate(&a, &guards).map(|out| (out, EXIT_OK)),
        Command::Table => Ok((cmd_table(), EXIT_OK)),
    });
    match result {
        Ok((stdout, code)) => Outcome::ok(stdout, code),
        Err(f) => Outcome::fail(f.code, format!("error: {}\n", f.message)),
    }
}

fn cmd_count(args: &CountArgs, guards: &Guards) -> Result<OutputRecord, Failure> {
    let spec: LatticeSpec = args
        .spec
        .parse()
        .map_err(|e: Error| Failure::usage(e.to_string()))?;
    let mut rec = OutputRecord::new("count");
    rec.input("spec", spec.to_string())
        .input("oracle", args.oracle);
    if let Some(k) = args.max_k {
        rec.input("max_k", k.to_string());
    }

    let poly = matchgen::matching_polynomial_with(&spec, args.max_k, guards)?;
    let counts: Vec<Value> = poly.counts().iter().map(|c| c.to_string().into()).collect();
    rec.result("counts", counts)
        .result("volume", spec.volume().to_string())
        .result("edge_count", spec.edge_count().to_string())
        .result("truncated", poly.truncated());
    if args.oracle {
        let oracle = matchgen::brute_force_matchings(&spec)?;
        let expected = oracle.truncate(args.max_k.unwrap_or(usize::MAX));
        rec.result("oracle_match", expected == poly);
    }
    Ok(rec)
}

/// Which optional parameters a formula takes.
struct Params {
    d: bool,
    p: bool,
    order: bool,
    tol: bool,
}

fn cmd_eval(args: &EvalArgs) -> Result<OutputRecord, Failure> {
    let f = args.formula;
    let allowed = match f {
        Formula::MeanField | Formula::Fklm => Params {
            d: true,
            p: true,
            order: false,
            tol: false,
        },
        Formula::Minc => Params {
            d: true,
            p: false,
            order: false,
            tol: false,
        },
        Formula::DimerExpansion => Params {
            d: true,
            p: false,
            order: true,
            tol: false,
        },
        Formula::MonomerDimerExpansion | Formula::PSeries | Formula::SquarePSeries => Params {
            d: true,
            p: true,
            order: true,
            tol: false,
        },
        Formula::SquareDimer => Params {
            d: false,
            p: false,
            order: false,
            tol: true,
        },
    };
    let extra = [
        ("--d", args.d.is_some() && !allowed.d),
        ("--p", args.p.is_some() && !allowed.p),
        ("--order", args.order.is_some() && !allowed.order),
        ("--tol", args.tol.is_some() && !allowed.tol),
    ];
    if let Some((flag, _)) = extra.iter().find(|(_, bad)| *bad) {
        return Err(Failure::usage(format!(
            "{flag} does not apply to formula {}",
            f.label()
        )));
    }

    let mut rec = OutputRecord::new("eval");
    rec.input("formula", f.label());
    rec.provenance.push(f.label().to_string());

    let need_d = || {
        args.d
            .ok_or_else(|| Failure::usage(format!("formula {} needs --d", f.label())))
    };
    let need_p = || {
        let text = args
            .p
            .as_deref()
            .ok_or_else(|| Failure::usage(format!("formula {} needs --p", f.label())))?;
        parse_density(text)
    };

    match f {
        Formula::MeanField => {
            let (d, (_, p)) = (need_d()?, need_p()?);
            rec.input("d", d.to_string())
                .input("p", args.p.clone().unwrap_or_default());
            rec.result("value", sig12(expansions::mean_field(d, p)?));
        }
        Formula::Minc => {
            let d = need_d()?;
            rec.input("d", d.to_string());
            let b = expansions::minc_bounds(d)?;
            rec.result("lower", sig12(b.lower))
                .result("upper", sig12(b.upper));
        }
        Formula::Fklm => {
            let (d, (_, p)) = (need_d()?, need_p()?);
            rec.input("d", d.to_string())
                .input("p", args.p.clone().unwrap_or_default());
            let b = expansions::fklm_bounds(d, p)?;
            rec.result("lower", sig12(b.lower))
                .result("upper", sig12(b.upper));
        }
        Formula::DimerExpansion => {
            let d = need_d()?;
            let order = args.order.unwrap_or(MAX_D_ORDER);
            rec.input("d", d.to_string())
                .input("order", order.to_string());
            let correction = expansions::lambda_d_correction(d, order)?;
            let base = expansions::mean_field(d, 1.0)?;
            rec.result("value", sig12(base + correction.to_f64()))
                .result("mean_field", sig12(base))
                .result("correction", rational_str(&correction));
        }
        Formula::MonomerDimerExpansion | Formula::PSeries | Formula::SquarePSeries => {
            let ((exact_p, p), d) = (need_p()?, args.d);
            let (d, order) = match f {
                Formula::MonomerDimerExpansion => (need_d()?, args.order.unwrap_or(MAX_D_ORDER)),
                Formula::PSeries => (need_d()?, args.order.unwrap_or(MAX_P_POWER)),
                _ => {
                    if d.is_some_and(|d| d != 2) {
                        return Err(Failure::usage("formula eq16 is defined only for --d 2"));
                    }
                    (2, args.order.unwrap_or(MAX_SQUARE_P_POWER))
                }
            };
            rec.input("d", d.to_string())
                .input("p", args.p.clone().unwrap_or_default())
                .input("order", order.to_string());
            let correction = match f {
                Formula::MonomerDimerExpansion => {
                    expansions::lambda_dp_correction(d, &exact_p, order)?
                }
                Formula::PSeries => expansions::lambda_dp_pseries_correction(d, &exact_p, order)?,
                _ => expansions::lambda_2p_correction(&exact_p, order)?,
            };
            let base = expansions::mean_field(d, p)?;
            rec.provenance.insert(0, "mean-field".into());
            rec.result("value", sig12(base + correction.to_f64()))
                .result("mean_field", sig12(base))
                .result("correction", rational_str(&correction));
        }
        Formula::SquareDimer => {
            let tol = args.tol.unwrap_or(1e-9);
            rec.input("tol", format!("{tol:e}"));
            let s = expansions::lambda2_partial_sum(tol)?;
            rec.result("value", sig12(s.value))
                .result("last_index", s.last_index.to_string())
                .result("remainder_bound", sig12(s.remainder_bound));
        }
    }
    Ok(rec)
}

fn cmd_check(args: &CheckArgs) -> Result<(OutputRecord, bool), Failure> {
    let mut rec = OutputRecord::new("check");
    let which = match args.which {
        Which::Rearrange => "rearrange",
        Which::D2 => "d2",
        Which::P1Reduction => "p1-reduction",
        Which::All => "all",
    };
    rec.input("which", which);
    let mut all_ok = true;
    let wants = |w: Which| args.which == w || args.which == Which::All;

    if wants(Which::Rearrange) {
        let rows = expansions::rearrangement_check();
        all_ok &= rows.iter().all(|r| r.equal);
        let json: Vec<Value> = rows
            .iter()
            .map(|r| {
                json!({
                    "j": r.j,
                    "expected": poly_json(&r.expected),
                    "collected": poly_json(&r.collected),
                    "equal": r.equal,
                })
            })
            .collect();
        rec.result("rearrange", json);
        rec.provenance
            .extend(["eq8".to_string(), "eq9".to_string()]);
    }
    if wants(Which::D2) {
        let report = expansions::d2_consistency_check();
        all_ok &= report.all_equal();
        let json: Vec<Value> = report
            .rows
            .iter()
            .map(|r| {
                json!({
                    "k": r.k,
                    "general": r.general.as_ref().map(rational_str),
                    "square": rational_str(&r.square),
                    "equal": r.equal,
                    "status": match r.equal {
                        Some(true) => "equal",
                        Some(false) => "differs",
                        None => "d=2 only",
                    },
                })
            })
            .collect();
        rec.result("d2", json)
            .result("d2_exponent_reading", report.exponent_reading.clone());
        rec.provenance
            .extend(["eq9".to_string(), "eq16".to_string()]);
    }
    if wants(Which::P1Reduction) {
        let rows = expansions::p1_reduction_check();
        all_ok &= rows.iter().all(|r| r.equal);
        let json: Vec<Value> = rows
            .iter()
            .map(|r| {
                json!({
                    "j": r.j,
                    "dimer": rational_str(&r.dimer),
                    "monomer_dimer_at_p1": rational_str(&r.monomer_dimer_at_p1),
                    "equal": r.equal,
                })
            })
            .collect();
        rec.result("p1_reduction", json);
        rec.provenance
            .extend(["eq6".to_string(), "eq8".to_string()]);
    }
    rec.provenance.sort();
    rec.provenance.dedup();
    rec.result("all_equal", all_ok);
    Ok((rec, all_ok))
}

fn series_rows(series: &EstimateSeries) -> Vec<Value> {
    series
        .points
        .iter()
        .map(|pt| {
            json!({
                "spec": pt.spec.to_string(),
                "k": pt.k_used.to_string(),
                "count": pt.count.to_string(),
                "raw": sig12(pt.raw),
                "extrapolated": sig12(series.extrapolated),
                "residual": sig12(series.fit_residual),
            })
        })
        .collect()
}

fn cmd_estimate(args: &EstimateArgs, guards: &Guards) -> Result<String, Failure> {
    let (_, p) = parse_density(&args.p)?;
    let sizes = parse_sizes(&args.sizes)?;
    let estimator = Estimator::new(*guards);

    let (series, comparison) = if args.compare {
        let c = estimator.compare(args.d, p, &sizes)?;
        (c.estimate.clone(), Some(c))
    } else {
        (estimator.extrapolate(args.d, p, &sizes)?, None)
    };

    if args.csv {
        let mut out = String::from("spec,k,raw,extrapolated,residual\n");
        for pt in &series.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                pt.spec,
                pt.k_used,
                sig12(pt.raw),
                sig12(series.extrapolated),
                sig12(series.fit_residual)
            ));
        }
        return Ok(out);
    }

    let mut rec = OutputRecord::new("estimate");
    let sizes_text: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
    rec.input("d", args.d.to_string())
        .input("p", args.p.clone())
        .input("sizes", sizes_text.join(","))
        .input("compare", args.compare);
    rec.result("rows", series_rows(&series))
        .result("extrapolated", sig12(series.extrapolated))
        .result("fit_residual", sig12(series.fit_residual))
        .result("surface_term", series.surface_term);

    if let Some(c) = comparison {
        rec.provenance.push("eq4".into());
        rec.result("fklm_lower", sig12(c.fklm.lower))
            .result("fklm_upper", sig12(c.fklm.upper))
            .result("within_fklm", c.within_fklm)
            .result("pseries", sig12(c.pseries))
            .result("delta_pseries", sig12(c.delta_pseries));
        rec.provenance.push("eq9".into());
        if let (Some(b), Some(inside)) = (c.minc, c.within_minc) {
            rec.provenance.push("eq3".into());
            rec.result("minc_lower", sig12(b.lower))
                .result("minc_upper", sig12(b.upper))
                .result("within_minc", inside);
        }
        if let (Some(s), Some(delta)) = (c.square_series, c.delta_square_series) {
            rec.provenance.push("eq16".into());
            rec.result("square_series", sig12(s))
                .result("delta_square_series", sig12(delta));
        }
        rec.provenance.sort();
    }
    Ok(rec.to_json())
}

fn cmd_table() -> String {
    serde_json::to_string_pretty(expansions::coefficient_table()).expect("table serializes") + "\n"
}
