//! Command implementations for the `fellj` binary.
//!
//! Every command returns an [`Outcome`]: the text to emit and an exit code
//! (0 pass, 1 semantic failure, 2 input error).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fell_core::algebra::Section;
use fell_core::bundle::{FellBundle, DEFAULT_TOL};
use fell_core::io::{bundle_to_json, load_bundle, round_sig, section_from_json, section_to_json};
use fell_core::jmap::run_suite;
use fell_core::randgen::{random_bundle, InstanceKind, MAX_ARROWS};
use fell_core::regrep::RegularRep;
use fell_core::rng::SeededRng;
use fell_core::zwindow::{default_grid, z_window_report, ZWindowInstance};
use fell_core::FellError;
use num_complex::Complex64;
use serde_json::{json, Value};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

/// Options shared by every subcommand.
#[derive(Clone, Debug, Args)]
pub struct RunConfig {
    /// Base tolerance for validation and checks.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Seed for all random draws.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (a directory for `randgen`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            seed: 0,
            format: Format::Json,
            out: None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fellj", version, about = "Reduced norms and j-map checks for Fell bundles over finite groupoids")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the groupoid and Fell-bundle axioms of a bundle or groupoid file.
    Validate { path: PathBuf },
    /// Sup norm, per-unit norms and reduced norm of a section.
    Norm { bundle: PathBuf, section: PathBuf },
    /// Convolution product of two sections.
    Convolve { bundle: PathBuf, left: PathBuf, right: PathBuf },
    /// Run the verification suite on a bundle.
    Jcheck {
        bundle: PathBuf,
        /// Number of random sections in addition to the fixtures.
        #[arg(long, default_value_t = 10)]
        random: usize,
    },
    /// Truncated regular representations of Z against the symbol supremum.
    Zwindow {
        /// Coefficients as `k:re[:im]`, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        coeffs: String,
        /// Window sizes N, comma separated and ascending.
        #[arg(long)]
        windows: String,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Seeded random bundles.
    Randgen {
        #[arg(long, value_enum, default_value_t = KindArg::All)]
        kind: KindArg,
        /// Maximum number of arrows.
        #[arg(long, default_value_t = MAX_ARROWS)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Trivial,
    Twist,
    Crossed,
    /// Cycle through all three kinds.
    All,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
}

impl Outcome {
    fn new(code: i32, output: String) -> Self {
        Self { code, output }
    }

    fn input_error(e: impl std::fmt::Display) -> Self {
        Self::new(EXIT_INPUT, format!("error: {e}\n"))
    }
}

/// Exit code for a library error: semantic failures give 1, everything
/// else (unreadable or malformed input) gives 2.
pub fn exit_code(e: &FellError) -> i32 {
    match e {
        FellError::Validation(_) | FellError::NotModuleMap { .. } | FellError::NotInImage { .. } => EXIT_FAIL,
        FellError::Numerical(_) => EXIT_FAIL,
        _ => EXIT_INPUT,
    }
}

fn failure(e: FellError) -> Outcome {
    Outcome::new(exit_code(&e), format!("error: {e}\n"))
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        Value::Null
    }
}

fn fmt_num(x: f64) -> String {
    round_sig(x).to_string()
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialise");
    s.push('\n');
    s
}

fn check_tol(cfg: &RunConfig) -> Result<(), Outcome> {
    if cfg.tol > 0.0 && cfg.tol.is_finite() {
        Ok(())
    } else {
        Err(Outcome::input_error(format!("--tol must be positive, got {}", cfg.tol)))
    }
}

fn read_bundle(path: &Path) -> Result<Arc<FellBundle>, Outcome> {
    load_bundle(path).map(Arc::new).map_err(|e| Outcome::input_error(format!("{}: {e}", path.display())))
}

fn read_section(path: &Path, b: &Arc<FellBundle>) -> Result<Section, Outcome> {
    std::fs::read_to_string(path)
        .map_err(FellError::from)
        .and_then(|text| section_from_json(&text, b))
        .map_err(|e| Outcome::input_error(format!("{}: {e}", path.display())))
}

pub fn cmd_validate(path: &Path, cfg: &RunConfig) -> Outcome {
    if let Err(o) = check_tol(cfg) {
        return o;
    }
    let b = match read_bundle(path) {
        Ok(b) => b,
        Err(o) => return o,
    };
    let groupoid = b.groupoid().validate();
    let bundle = if groupoid.is_empty() {
        match b.validate(cfg.tol.max(DEFAULT_TOL)) {
            Ok(r) => r,
            Err(e) => return failure(e),
        }
    } else {
        Default::default()
    };
    let valid = groupoid.is_empty() && bundle.is_empty();
    let output = match cfg.format {
        Format::Json => pretty(&json!({
            "valid": valid,
            "kind": b.kind().name(),
            "arrows": b.groupoid().arrow_count(),
            "groupoid": groupoid.to_string(),
            "bundle": bundle.to_string(),
        })),
        Format::Csv => format!("valid,kind,arrows\n{valid},{},{}\n", b.kind().name(), b.groupoid().arrow_count()),
        Format::Text => {
            let mut s = format!(
                "{}: {} bundle, {} arrows\n",
                if valid { "valid" } else { "INVALID" },
                b.kind().name(),
                b.groupoid().arrow_count()
            );
            for r in [&groupoid, &bundle] {
                if !r.is_empty() {
                    let _ = writeln!(s, "{r}");
                }
            }
            s
        }
    };
    Outcome::new(if valid { EXIT_PASS } else { EXIT_FAIL }, output)
}

/// Validates and returns the bundle, or the outcome refusing it.
fn validated_bundle(path: &Path, cfg: &RunConfig) -> Result<Arc<FellBundle>, Outcome> {
    check_tol(cfg)?;
    let b = read_bundle(path)?;
    let report = b.groupoid().validate();
    if !report.is_empty() {
        return Err(Outcome::new(EXIT_FAIL, format!("error: invalid groupoid\n{report}\n")));
    }
    match b.validate(cfg.tol.max(DEFAULT_TOL)) {
        Ok(r) if r.is_empty() => Ok(b),
        Ok(r) => Err(Outcome::new(EXIT_FAIL, format!("error: invalid bundle\n{r}\n"))),
        Err(e) => Err(failure(e)),
    }
}

pub fn cmd_norm(bundle: &Path, section: &Path, cfg: &RunConfig) -> Outcome {
    let b = match validated_bundle(bundle, cfg) {
        Ok(b) => b,
        Err(o) => return o,
    };
    let f = match read_section(section, &b) {
        Ok(f) => f,
        Err(o) => return o,
    };
    let norms = RegularRep::new(&b).and_then(|rep| rep.unit_norms(&f));
    let unit_norms = match norms {
        Ok(n) => n,
        Err(e) => return failure(e),
    };
    let reduced = unit_norms.values().cloned().fold(0.0, f64::max);
    let sup = f.sup_norm();
    let output = match cfg.format {
        Format::Json => {
            let units: serde_json::Map<String, Value> =
                unit_norms.iter().map(|(u, &x)| (u.to_string(), num(x))).collect();
            pretty(&json!({ "unit_norms": units, "reduced_norm": num(reduced), "sup_norm": num(sup) }))
        }
        Format::Csv => {
            let mut s = String::from("quantity,value\n");
            for (u, &x) in &unit_norms {
                let _ = writeln!(s, "unit_norm[{u}],{}", fmt_num(x));
            }
            let _ = writeln!(s, "reduced_norm,{}\nsup_norm,{}", fmt_num(reduced), fmt_num(sup));
            s
        }
        Format::Text => {
            let mut s = format!("reduced norm {}\nsup norm {}\n", fmt_num(reduced), fmt_num(sup));
            for (u, &x) in &unit_norms {
                let _ = writeln!(s, "unit {u}: {}", fmt_num(x));
            }
            s
        }
    };
    Outcome::new(EXIT_PASS, output)
}

pub fn cmd_convolve(bundle: &Path, left: &Path, right: &Path, cfg: &RunConfig) -> Outcome {
    let b = match validated_bundle(bundle, cfg) {
        Ok(b) => b,
        Err(o) => return o,
    };
    let (f, g) = match (read_section(left, &b), read_section(right, &b)) {
        (Ok(f), Ok(g)) => (f, g),
        (Err(o), _) | (_, Err(o)) => return o,
    };
    let h = match f.convolve(&g) {
        Ok(h) => h,
        Err(e) => return failure(e),
    };
    let output = match cfg.format {
        Format::Json => pretty(&section_to_json(&h)),
        Format::Csv | Format::Text => {
            let sep = if cfg.format == Format::Csv { "," } else { " " };
            let mut s = if cfg.format == Format::Csv {
                String::from("arrow,row,col,re,im\n")
            } else {
                String::new()
            };
            for (a, m) in h.values().iter().enumerate() {
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        let z = m[(i, j)];
                        let fields = [a.to_string(), i.to_string(), j.to_string(), fmt_num(z.re), fmt_num(z.im)];
                        let _ = writeln!(s, "{}", fields.join(sep));
                    }
                }
            }
            s
        }
    };
    Outcome::new(EXIT_PASS, output)
}

pub fn cmd_jcheck(bundle: &Path, random: usize, cfg: &RunConfig) -> Outcome {
    let b = match validated_bundle(bundle, cfg) {
        Ok(b) => b,
        Err(o) => return o,
    };
    let report = match run_suite(&b, random, cfg.seed, cfg.tol) {
        Ok(r) => r,
        Err(e) => return failure(e),
    };
    let summary = report.to_json();
    let output = match cfg.format {
        Format::Json => pretty(&summary),
        Format::Csv | Format::Text => {
            let csv = cfg.format == Format::Csv;
            let mut s = if csv {
                String::from("check,count,failed,max_residual,max_residual_over_bound\n")
            } else {
                format!("all_pass {}\n", summary["all_pass"])
            };
            if let Some(checks) = summary["checks"].as_object() {
                for (name, c) in checks {
                    let fields = [
                        name.clone(),
                        c["count"].to_string(),
                        c["failed"].to_string(),
                        c["max_residual"].to_string(),
                        c["max_residual_over_bound"].to_string(),
                    ];
                    let _ = writeln!(s, "{}", fields.join(if csv { "," } else { " " }));
                }
            }
            s
        }
    };
    Outcome::new(if report.all_pass() { EXIT_PASS } else { EXIT_FAIL }, output)
}

/// Parses `k:re[:im]` items separated by commas.
pub fn parse_coeffs(text: &str) -> Result<std::collections::BTreeMap<i64, Complex64>, String> {
    let mut out = std::collections::BTreeMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let bad = || format!("coefficient {item:?} is not k:re or k:re:im");
        if !(2..=3).contains(&parts.len()) {
            return Err(bad());
        }
        let k: i64 = parts[0].parse().map_err(|_| bad())?;
        let re: f64 = parts[1].parse().map_err(|_| bad())?;
        let im: f64 = parts.get(2).map_or(Ok(0.0), |s| s.parse()).map_err(|_| bad())?;
        if out.insert(k, Complex64::new(re, im)).is_some() {
            return Err(format!("coefficient {k} given twice"));
        }
    }
    Ok(out)
}

pub fn parse_windows(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("window {s:?} is not a nonnegative integer")))
        .collect()
}

pub fn cmd_zwindow(coeffs: &str, windows: &str, grid: Option<usize>, cfg: &RunConfig) -> Outcome {
    let inst = match (parse_coeffs(coeffs), parse_windows(windows)) {
        (Ok(c), Ok(w)) => match ZWindowInstance::new(c, w) {
            Ok(i) => i,
            Err(e) => return Outcome::input_error(e),
        },
        (Err(e), _) | (_, Err(e)) => return Outcome::input_error(e),
    };
    let grid = grid.unwrap_or_else(|| default_grid(&inst));
    let rows = match z_window_report(&inst, grid) {
        Ok(r) => r,
        Err(e) => return failure(e),
    };
    let pass = rows.iter().all(|r| r.pass());
    let output = match cfg.format {
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "n": r.n,
                        "window_norm": num(r.window_norm),
                        "oracle_lower": num(r.oracle_lower),
                        "oracle_upper": num(r.oracle_upper),
                        "max_coeff": num(r.max_coeff),
                        "l1_norm": num(r.l1_norm),
                        "pass": r.pass(),
                    })
                })
                .collect();
            pretty(&json!({ "all_pass": pass, "grid": grid, "rows": rows }))
        }
        Format::Csv | Format::Text => {
            let sep = if cfg.format == Format::Csv { "," } else { " " };
            let mut s = ["n", "window_norm", "oracle_lower", "oracle_upper", "max_coeff", "l1_norm", "pass"].join(sep);
            s.push('\n');
            for r in &rows {
                let fields = [
                    r.n.to_string(),
                    fmt_num(r.window_norm),
                    fmt_num(r.oracle_lower),
                    fmt_num(r.oracle_upper),
                    fmt_num(r.max_coeff),
                    fmt_num(r.l1_norm),
                    r.pass().to_string(),
                ];
                let _ = writeln!(s, "{}", fields.join(sep));
            }
            s
        }
    };
    Outcome::new(if pass { EXIT_PASS } else { EXIT_FAIL }, output)
}

/// Generated instances as `(file name, bundle JSON)`; deterministic in
/// `seed`. With `KindArg::All` the kinds alternate.
pub fn generate(kind: KindArg, size: usize, count: usize, seed: u64) -> Result<Vec<(String, String)>, FellError> {
    let mut rng = SeededRng::new(seed);
    (0..count)
        .map(|i| {
            let k = match kind {
                KindArg::Trivial => InstanceKind::Trivial,
                KindArg::Twist => InstanceKind::Twist,
                KindArg::Crossed => InstanceKind::Crossed,
                KindArg::All => InstanceKind::ALL[i % 3],
            };
            let inst = random_bundle(k, size, &mut rng)?;
            let mut text = serde_json::to_string(&bundle_to_json(&inst.bundle))?;
            text.push('\n');
            Ok((format!("{i:03}-{}.json", k.name()), text))
        })
        .collect()
}

/// Writes one file per instance into `--out`, or prints them one per line.
pub fn cmd_randgen(kind: KindArg, size: usize, count: usize, cfg: &RunConfig) -> Outcome {
    let files = match generate(kind, size, count, cfg.seed) {
        Ok(f) => f,
        Err(e) => return Outcome::input_error(e),
    };
    match &cfg.out {
        Some(dir) => {
            if let Err(e) = std::fs::create_dir_all(dir) {
                return Outcome::input_error(format!("{}: {e}", dir.display()));
            }
            let mut listing = String::new();
            for (name, text) in &files {
                let path = dir.join(name);
                if let Err(e) = std::fs::write(&path, text) {
                    return Outcome::input_error(format!("{}: {e}", path.display()));
                }
                let _ = writeln!(listing, "{}", path.display());
            }
            Outcome::new(EXIT_PASS, listing)
        }
        None => Outcome::new(EXIT_PASS, files.into_iter().map(|(_, t)| t).collect()),
    }
}

/// Dispatches a parsed command line. Output goes to `--out` when given
/// (except for `randgen`, which treats it as a directory).
pub fn run(cli: &Cli) -> Outcome {
    let cfg = &cli.config;
    let outcome = match &cli.command {
        Command::Validate { path } => cmd_validate(path, cfg),
        Command::Norm { bundle, section } => cmd_norm(bundle, section, cfg),
        Command::Convolve { bundle, left, right } => cmd_convolve(bundle, left, right, cfg),
        Command::Jcheck { bundle, random } => cmd_jcheck(bundle, *random, cfg),
        Command::Zwindow { coeffs, windows, grid } => cmd_zwindow(coeffs, windows, *grid, cfg),
        Command::Randgen { kind, size, count } => return cmd_randgen(*kind, *size, *count, cfg),
    };
    match &cfg.out {
        Some(path) if outcome.code != EXIT_INPUT => match std::fs::write(path, &outcome.output) {
            Ok(()) => Outcome::new(outcome.code, String::new()),
            Err(e) => Outcome::input_error(format!("{}: {e}", path.display())),
        },
        _ => outcome,
    }
}
