//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification finds a failure, 2 on
//! usage or input errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::hopf::{self, HopfVariant};
use crate::poly::{FieldConfig, IdentityMap, MapConfig, PolynomialField, SmoothMap};
use crate::rde::{self, DavieSolveConfig};
use crate::roughpath::{self, BranchedRoughPath, SampleFile, ValidationOptions};
use crate::series::{labelled_basis, ExactSeries, TensorSeries};
use crate::text::{parse_series, parse_tree};
use crate::tree::enumerate_shapes;
use crate::verify::{self, SuiteConfig};

#[derive(Parser, Debug)]
#[command(
    name = "rough-trees",
    version,
    about = "Tree Hopf algebras, branched rough paths and RDE solves"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Variant {
    Gl,
    Ck,
}

impl From<Variant> for HopfVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Gl => HopfVariant::GrossmanLarson,
            Variant::Ck => HopfVariant::ConnesKreimer,
        }
    }
}

#[derive(clap::Args, Debug)]
struct AlgebraOpts {
    /// Label dimension d (default: largest label present)
    #[arg(long)]
    dim: Option<usize>,
    /// Truncation degree applied to the inputs
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args, Debug)]
struct SuiteOpts {
    #[arg(long, default_value_t = 4)]
    degree: usize,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args, Debug)]
struct PathOpts {
    /// Piecewise-linear CSV (`t,x1,…,xd`) or rough-path sample JSON
    #[arg(long)]
    input: PathBuf,
    /// Roughness exponent used when lifting a CSV path
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List tree shapes, or labelled trees when --dim is given
    Enumerate {
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Grossman-Larson product a ⋆ b
    Star {
        a: String,
        b: String,
        #[command(flatten)]
        opts: AlgebraOpts,
    },
    /// Root-identifying product a ∘ b
    Circ {
        a: String,
        b: String,
        #[command(flatten)]
        opts: AlgebraOpts,
    },
    /// Coproduct splitting root branches
    DeltaGl {
        a: String,
        #[command(flatten)]
        opts: AlgebraOpts,
    },
    /// Coproduct over admissible cuts
    DeltaCk {
        a: String,
        #[command(flatten)]
        opts: AlgebraOpts,
    },
    /// Antipode up to --degree
    Antipode {
        a: String,
        #[arg(long, value_enum, default_value = "gl")]
        variant: Variant,
        #[command(flatten)]
        opts: AlgebraOpts,
    },
    /// Duality pairing ⟨a, b⟩
    Pair {
        a: String,
        b: String,
        #[command(flatten)]
        opts: AlgebraOpts,
    },
    /// exp_∘ up to --degree
    Exp {
        a: String,
        #[command(flatten)]
        opts: AlgebraOpts,
    },
    /// log_∘ up to --degree
    Log {
        a: String,
        #[command(flatten)]
        opts: AlgebraOpts,
    },
    /// Randomized Hopf axiom suite
    VerifyHopf {
        #[command(flatten)]
        opts: SuiteOpts,
    },
    /// Randomized duality suite and Gram-matrix check
    VerifyDuality {
        #[command(flatten)]
        opts: SuiteOpts,
    },
    /// Lift a piecewise-linear CSV path and write per-interval samples as JSON
    Lift {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Validate a rough path (Chen, group-likeness, control bound)
    Validate {
        #[command(flatten)]
        path: PathOpts,
        #[arg(long, default_value_t = roughpath::VALIDATION_TOL)]
        tol: f64,
        /// Fail if the fitted bound constant exceeds this value
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Davie solve; writes CSV `t,y1,…,yn`
    Solve {
        #[command(flatten)]
        path: PathOpts,
        /// JSON vector fields `{"n": .., "fields": [[..], ..]}`
        #[arg(long)]
        fields: PathBuf,
        /// Initial state, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y0: Vec<f64>,
        /// Uniform steps (default: the input's time grid)
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Remainder probe over dyadic scales; writes JSON
    Probe {
        #[command(flatten)]
        path: PathOpts,
        #[arg(long)]
        fields: PathBuf,
        /// JSON map `{"n": .., "components": [..]}` (default: identity)
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y0: Vec<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Dyadic levels, comma separated
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        levels: Vec<u32>,
    },
    /// Evaluate Ψ_{V,f,y} on a tree
    Psi {
        tree: String,
        #[arg(long)]
        fields: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
        #[arg(long)]
        json: bool,
    },
}

/// Failure that maps to an exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command, writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn operands(texts: &[&str], opts: &AlgebraOpts) -> Result<Vec<ExactSeries>, Failure> {
    let dim = match opts.dim {
        Some(d) => d,
        None => texts
            .iter()
            .map(|t| parse_series(t, None).map(|s| s.dim()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(usage)?
            .into_iter()
            .max()
            .unwrap_or(1),
    };
    texts
        .iter()
        .map(|t| {
            parse_series(t, Some(dim))
                .map(|s| s.with_truncation(opts.degree))
                .map_err(usage)
        })
        .collect()
}

fn emit_series(out: &mut dyn Write, s: &ExactSeries, json: bool) -> CmdResult {
    if json {
        let terms: Vec<_> = s
            .terms()
            .map(|(t, c)| json!({"tree": t.to_string(), "coefficient": c.to_string()}))
            .collect();
        writeln!(
            out,
            "{}",
            json!({"dim": s.dim(), "series": s.to_string(), "terms": terms})
        )
        .map_err(usage)?;
    } else {
        writeln!(out, "{s}").map_err(usage)?;
    }
    Ok(0)
}

fn emit_tensor(out: &mut dyn Write, s: &TensorSeries<crate::series::Rational>, json: bool) -> CmdResult {
    if json {
        let terms: Vec<_> = s
            .terms()
            .map(|((l, r), c)| json!({"left": l.to_string(), "right": r.to_string(), "coefficient": c.to_string()}))
            .collect();
        writeln!(
            out,
            "{}",
            json!({"dim": s.dim(), "tensor": s.to_string(), "terms": terms})
        )
        .map_err(usage)?;
    } else {
        writeln!(out, "{s}").map_err(usage)?;
    }
    Ok(0)
}

fn require_degree(opts: &AlgebraOpts) -> Result<usize, Failure> {
    opts.degree.ok_or_else(|| usage("this operation needs --degree"))
}

fn load_path(opts: &PathOpts) -> Result<BranchedRoughPath, Failure> {
    let file = File::open(&opts.input).map_err(|e| usage(format!("{}: {e}", opts.input.display())))?;
    if is_csv(&opts.input) {
        let pl = roughpath::read_pl_csv(BufReader::new(file)).map_err(usage)?;
        roughpath::branched_lift_pl(&pl, opts.p).map_err(usage)
    } else {
        SampleFile::read(BufReader::new(file))
            .and_then(SampleFile::into_path)
            .map_err(usage)
    }
}

fn input_grid(opts: &PathOpts) -> Result<Vec<f64>, Failure> {
    let file = File::open(&opts.input).map_err(|e| usage(format!("{}: {e}", opts.input.display())))?;
    if is_csv(&opts.input) {
        Ok(roughpath::read_pl_csv(BufReader::new(file))
            .map_err(usage)?
            .times()
            .to_vec())
    } else {
        Ok(SampleFile::read(BufReader::new(file)).map_err(usage)?.times)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn load_fields(path: &Path) -> Result<PolynomialField, Failure> {
    let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let config: FieldConfig = serde_json::from_reader(BufReader::new(file)).map_err(usage)?;
    config.build().map_err(usage)
}

fn load_map(path: Option<&PathBuf>, n: usize) -> Result<Box<dyn SmoothMap>, Failure> {
    match path {
        None => Ok(Box::new(IdentityMap(n))),
        Some(p) => {
            let file = File::open(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            let config: MapConfig = serde_json::from_reader(BufReader::new(file)).map_err(usage)?;
            Ok(Box::new(config.build().map_err(usage)?))
        }
    }
}

fn solve_config(
    x: &BranchedRoughPath,
    path: &PathOpts,
    y0: Vec<f64>,
    steps: Option<usize>,
) -> Result<DavieSolveConfig, Failure> {
    Ok(match steps {
        Some(n) if n > 0 => DavieSolveConfig::uniform(x, n, y0),
        Some(_) => return Err(usage("--steps must be positive")),
        None => DavieSolveConfig {
            partition: input_grid(path)?,
            y0,
        },
    })
}

fn format_vector(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn dispatch(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Enumerate { degree, dim, json } => {
            let lines: Vec<String> = match dim {
                None => enumerate_shapes(degree)
                    .map_err(usage)?
                    .iter()
                    .map(|t| t.to_string())
                    .collect(),
                Some(d) => labelled_basis(degree, d)
                    .map_err(usage)?
                    .iter()
                    .map(|t| t.to_string())
                    .collect(),
            };
            if json {
                writeln!(out, "{}", json!(lines)).map_err(usage)?;
            } else {
                for l in lines {
                    writeln!(out, "{l}").map_err(usage)?;
                }
            }
            Ok(0)
        }
        Command::Star { a, b, opts } => {
            let s = operands(&[&a, &b], &opts)?;
            emit_series(out, &hopf::star(&s[0], &s[1]).map_err(usage)?, opts.json)
        }
        Command::Circ { a, b, opts } => {
            let s = operands(&[&a, &b], &opts)?;
            emit_series(out, &hopf::circ(&s[0], &s[1]).map_err(usage)?, opts.json)
        }
        Command::DeltaGl { a, opts } => {
            let s = operands(&[&a], &opts)?;
            emit_tensor(out, &hopf::delta_gl(&s[0]), opts.json)
        }
        Command::DeltaCk { a, opts } => {
            let s = operands(&[&a], &opts)?;
            emit_tensor(out, &hopf::delta_ck(&s[0]), opts.json)
        }
        Command::Antipode { a, variant, opts } => {
            require_degree(&opts)?;
            let s = operands(&[&a], &opts)?;
            emit_series(out, &hopf::antipode(&s[0], variant.into()).map_err(usage)?, opts.json)
        }
        Command::Pair { a, b, opts } => {
            let s = operands(&[&a, &b], &opts)?;
            let v = hopf::pairing(&s[0], &s[1]).map_err(usage)?;
            if opts.json {
                writeln!(out, "{}", json!({"pairing": v.to_string()})).map_err(usage)?;
            } else {
                writeln!(out, "{v}").map_err(usage)?;
            }
            Ok(0)
        }
        Command::Exp { a, opts } => {
            require_degree(&opts)?;
            let s = operands(&[&a], &opts)?;
            emit_series(out, &hopf::exp_circ(&s[0]).map_err(usage)?, opts.json)
        }
        Command::Log { a, opts } => {
            require_degree(&opts)?;
            let s = operands(&[&a], &opts)?;
            emit_series(out, &hopf::log_circ(&s[0]).map_err(usage)?, opts.json)
        }
        Command::VerifyHopf { opts } => {
            let report = verify::verify_hopf(&suite_config(&opts)?);
            emit_report(out, &report, opts.json)
        }
        Command::VerifyDuality { opts } => {
            let cfg = suite_config(&opts)?;
            let report = verify::verify_duality(&cfg, opts.degree.min(3), opts.dim.min(2));
            emit_report(out, &report, opts.json)
        }
        Command::Lift { input, p } => {
            let file = File::open(&input).map_err(|e| usage(format!("{}: {e}", input.display())))?;
            let pl = roughpath::read_pl_csv(BufReader::new(file)).map_err(usage)?;
            let x = roughpath::branched_lift_pl(&pl, p).map_err(usage)?;
            let samples = SampleFile::from_path(&x, pl.times()).map_err(usage)?;
            samples.write(&mut *out).map_err(usage)?;
            writeln!(out).map_err(usage)?;
            Ok(0)
        }
        Command::Validate { path, tol, bound, json } => {
            let x = load_path(&path)?;
            let grid = input_grid(&path)?;
            let report = roughpath::validate_rough_path(
                &x,
                &grid,
                ValidationOptions {
                    tol,
                    bound_constant: bound,
                },
            )
            .map_err(usage)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report).map_err(usage)?).map_err(usage)?;
            } else {
                writeln!(out, "{report}").map_err(usage)?;
            }
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::Solve {
            path,
            fields,
            y0,
            steps,
        } => {
            let x = load_path(&path)?;
            let v = load_fields(&fields)?;
            let cfg = solve_config(&x, &path, y0, steps)?;
            let sol = rde::davie_solve(&v, &x, &cfg).map_err(usage)?;
            sol.write_csv(&mut *out).map_err(usage)?;
            Ok(0)
        }
        Command::Probe {
            path,
            fields,
            map,
            y0,
            steps,
            levels,
        } => {
            let x = load_path(&path)?;
            let v = load_fields(&fields)?;
            let f = load_map(map.as_ref(), crate::poly::VectorFieldFamily::state_dim(&v))?;
            let cfg = solve_config(&x, &path, y0, steps)?;
            let sol = rde::davie_solve(&v, &x, &cfg).map_err(usage)?;
            let report = rde::remainder_probe(&sol, &x, &v, f.as_ref(), &levels).map_err(usage)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report).map_err(usage)?).map_err(usage)?;
            Ok(0)
        }
        Command::Psi {
            tree,
            fields,
            map,
            y,
            json,
        } => {
            let v = load_fields(&fields)?;
            let f = load_map(map.as_ref(), crate::poly::VectorFieldFamily::state_dim(&v))?;
            let t = parse_tree(&tree).map_err(usage)?;
            let value = rde::psi(&v, f.as_ref(), &y, &t).map_err(usage)?;
            if json {
                writeln!(out, "{}", json!({"tree": t.to_string(), "value": value})).map_err(usage)?;
            } else {
                writeln!(out, "{}", format_vector(&value)).map_err(usage)?;
            }
            Ok(0)
        }
    }
}

fn suite_config(opts: &SuiteOpts) -> Result<SuiteConfig, Failure> {
    if opts.dim == 0 {
        return Err(usage("--dim must be positive"));
    }
    Ok(SuiteConfig {
        max_degree: opts.degree,
        dim: opts.dim,
        trials: opts.trials,
        seed: opts.seed,
        ..SuiteConfig::default()
    })
}

fn emit_report(out: &mut dyn Write, report: &verify::SuiteReport, json: bool) -> CmdResult {
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(report).map_err(usage)?).map_err(usage)?;
    } else {
        write!(out, "{report}").map_err(usage)?;
    }
    Ok(if report.passed() { 0 } else { 1 })
}
