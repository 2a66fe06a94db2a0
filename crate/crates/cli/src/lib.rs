//! Command dispatch for the `jetcalc` binary.
//!
//! Usage: `jetcalc COMMAND [NAME...] [SYMBOL=VALUE...] [FLAGS] FILE`. The
//! problem file is the last positional argument; `verify-paper` takes none.
//! Check commands print an audit report (JSON with `--json`); computing
//! commands print `name = expression` lines, or a JSON object of results.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use jetcalc_core::audit::{verify_paper, AuditEntry, AuditReport, Status};
use jetcalc_core::expr::{eval_at, Jet};
use jetcalc_core::problem::{Definition, ProblemFile};
use jetcalc_core::symmetry::{
    check_compatibility, check_invariant, check_symmetry, mu_prolong, ordinary_prolong, HorizontalOneForm,
    ProlongedVectorField, VectorField,
};
use jetcalc_core::variational::{
    check_variational_symmetry, euler_lagrange, horizontal_antiderivative, is_null_lagrangian, total_divergence,
    Lagrangian,
};
use jetcalc_core::{Check, Error, Expr, JetContext, Sampler};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_DISCREPANCY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Prolong,
    MuProlong,
    El,
    Div,
    Exactness,
    Antiderivative,
    CheckCompat,
    CheckSymmetry,
    CheckVariational,
    Invariants,
    Eval,
    VerifyPaper,
}

#[derive(Debug, Parser)]
#[command(name = "jetcalc", version, about = "Jet-space symmetry and variational calculus")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Definition names and `symbol=value` bindings, then the problem file.
    pub args: Vec<String>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Sampler seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Prolongation order.
    #[arg(long, global = true)]
    pub order: Option<u32>,
    /// Numeric zero tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Vector field name.
    #[arg(long, global = true)]
    pub field: Option<String>,
    /// One-form name.
    #[arg(long, global = true)]
    pub mu: Option<String>,
    /// Equation name.
    #[arg(long, global = true)]
    pub equation: Option<String>,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

type Outcome = Result<Output, Failure>;

enum Output {
    Report(AuditReport),
    Values(Vec<(String, String)>),
}

#[derive(Serialize)]
struct ValuesJson<'a> {
    tool_version: &'a str,
    command: String,
    results: Vec<NamedValue<'a>>,
}

#[derive(Serialize)]
struct NamedValue<'a> {
    name: &'a str,
    value: &'a str,
}

/// Parses `argv` (including the program name), runs the command and writes
/// to `out` / `err`. Returns the process exit code.
pub fn run<I, S, W, E>(argv: I, out: &mut W, err: &mut E) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
    W: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match execute(&cli) {
        Ok(Output::Report(r)) => {
            let text = if cli.json { r.to_json() + "\n" } else { r.to_text() };
            let _ = write!(out, "{text}");
            if r.has_discrepancy() {
                EXIT_DISCREPANCY
            } else {
                EXIT_PASS
            }
        }
        Ok(Output::Values(values)) => {
            if cli.json {
                let doc = ValuesJson {
                    tool_version: env!("CARGO_PKG_VERSION"),
                    command: command_name(cli.command),
                    results: values
                        .iter()
                        .map(|(n, v)| NamedValue { name: n, value: v })
                        .collect(),
                };
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("results serialize"));
            } else {
                for (n, v) in &values {
                    let _ = writeln!(out, "{n} = {v}");
                }
            }
            EXIT_PASS
        }
        Err(Failure::Core(e @ Error::NotExact(_))) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DISCREPANCY
        }
        Err(f) => {
            let _ = writeln!(err, "error: {f}");
            EXIT_USAGE
        }
    }
}

fn command_name(c: Command) -> String {
    c.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn sampler(cli: &Cli) -> Sampler {
    let mut s = Sampler::default();
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(tol) = cli.tol {
        s.tolerance = tol;
    }
    s
}

/// Positional arguments split into names, bindings and the trailing file.
struct Positionals<'a> {
    names: Vec<&'a str>,
    bindings: Vec<(&'a str, &'a str)>,
    file: PathBuf,
}

fn positionals(cli: &Cli) -> Result<Positionals<'_>, Failure> {
    let (file, rest) = cli
        .args
        .split_last()
        .ok_or_else(|| Failure::Usage(format!("{} needs a problem file", command_name(cli.command))))?;
    let mut names = Vec::new();
    let mut bindings = Vec::new();
    for a in rest {
        match a.split_once('=') {
            Some((k, v)) => bindings.push((k.trim(), v.trim())),
            None => names.push(a.as_str()),
        }
    }
    Ok(Positionals {
        names,
        bindings,
        file: PathBuf::from(file),
    })
}

/// The explicitly named definition, or the only one of its kind.
fn pick<'a>(
    f: &'a ProblemFile,
    explicit: Option<&'a str>,
    kind: fn(&Definition) -> bool,
    what: &str,
) -> Result<&'a str, Failure> {
    if let Some(n) = explicit {
        return Ok(n);
    }
    match f.names_of(kind).as_slice() {
        [one] => Ok(one),
        [] => Err(Failure::Usage(format!("the problem file defines no {what}"))),
        many => Err(Failure::Usage(format!("several {what}s ({}); name one", many.join(", ")))),
    }
}

fn is_field(d: &Definition) -> bool {
    matches!(d, Definition::VectorField(_))
}

fn is_one_form(d: &Definition) -> bool {
    matches!(d, Definition::OneForm(_))
}

fn is_equation(d: &Definition) -> bool {
    matches!(d, Definition::Equation(_))
}

fn is_lagrangian(d: &Definition) -> bool {
    matches!(d, Definition::Lagrangian(_))
}

fn is_expr(d: &Definition) -> bool {
    matches!(d, Definition::Expr(_))
}

fn field<'a>(cli: &'a Cli, f: &'a ProblemFile) -> Result<&'a VectorField, Failure> {
    Ok(f.field(pick(f, cli.field.as_deref(), is_field, "vector field")?)?)
}

fn one_form<'a>(cli: &'a Cli, f: &'a ProblemFile, name: Option<&'a str>) -> Result<&'a HorizontalOneForm, Failure> {
    Ok(f.one_form(pick(f, name.or(cli.mu.as_deref()), is_one_form, "one-form")?)?)
}

/// Any definition usable as a scalar density: an expression, a Lagrangian,
/// or the left-hand side of an equation.
fn density(f: &ProblemFile, name: &str) -> Result<Expr, Failure> {
    match f.get(name) {
        Some(Definition::Expr(e)) => Ok(e.clone()),
        Some(Definition::Lagrangian(l)) => Ok(l.density.clone()),
        Some(Definition::Equation(eq)) => Ok(eq.lhs.clone()),
        Some(_) => Err(Failure::Usage(format!("`{name}` is not a scalar expression"))),
        None => Err(Failure::Usage(format!("no definition named `{name}`"))),
    }
}

fn single_name<'a>(p: &Positionals<'a>, what: &str) -> Result<Option<&'a str>, Failure> {
    match p.names.as_slice() {
        [] => Ok(None),
        [one] => Ok(Some(one)),
        _ => Err(Failure::Usage(format!("expected at most one {what} name"))),
    }
}

/// `Psi^xt` for a single dependent variable, `Psi^v_xt` otherwise.
fn coefficient_label(ctx: &JetContext, jet: &Jet) -> String {
    let name = ctx.jet_name(jet);
    if ctx.q() == 1 {
        match name.split_once('_') {
            Some((_, idx)) => format!("Psi^{idx}"),
            None => format!("Psi^{name}"),
        }
    } else {
        format!("Psi^{name}")
    }
}

fn prolonged_values(ctx: &JetContext, y: &ProlongedVectorField) -> Vec<(String, String)> {
    let mut coefficients: Vec<_> = y.coefficients().collect();
    coefficients.sort_by(|(a, _), (b, _)| {
        (a.dep, a.order())
            .cmp(&(b.dep, b.order()))
            .then_with(|| b.index.counts().cmp(a.index.counts()))
    });
    let mut out: Vec<(String, String)> = coefficients
        .into_iter()
        .map(|(j, e)| (coefficient_label(ctx, j), ctx.display(e)))
        .collect();
    out.extend(y.warnings.iter().map(|w| ("warning".to_string(), w.clone())));
    out
}

fn timed_entry(ctx: &JetContext, case_id: &str, anchor: &str, check: &Check, s: &Sampler, start: Instant) -> AuditEntry {
    let mut e = AuditEntry::from_check(ctx, case_id, anchor, check, s);
    e.elapsed_ms = start.elapsed().as_millis() as u64;
    e
}

fn execute(cli: &Cli) -> Outcome {
    let s = sampler(cli);
    if cli.command == Command::VerifyPaper {
        if !cli.args.is_empty() {
            return Err(Failure::Usage("verify-paper takes no positional arguments".into()));
        }
        return Ok(Output::Report(verify_paper(&s)));
    }
    let p = positionals(cli)?;
    let file = ProblemFile::load(&p.file)?;
    let ctx = &file.ctx;
    if cli.command != Command::Eval && !p.bindings.is_empty() {
        return Err(Failure::Usage(format!("{} takes no bindings", command_name(cli.command))));
    }
    let start = Instant::now();
    Ok(match cli.command {
        Command::Prolong => {
            single_name(&p, "vector field")?;
            let x = match p.names.first() {
                Some(n) => file.field(n)?,
                None => field(cli, &file)?,
            };
            Output::Values(prolonged_values(ctx, &ordinary_prolong(ctx, x, cli.order.unwrap_or(2))?))
        }
        Command::MuProlong => {
            let mu = one_form(cli, &file, single_name(&p, "one-form")?)?;
            let y = mu_prolong(ctx, field(cli, &file)?, mu, cli.order.unwrap_or(2))?;
            Output::Values(prolonged_values(ctx, &y))
        }
        Command::El => {
            let name = pick(&file, single_name(&p, "lagrangian")?, is_lagrangian, "lagrangian")?;
            let l = Lagrangian::new(ctx, density(&file, name)?)?;
            let el = euler_lagrange(ctx, &l)?;
            let values = ctx
                .dependent_names()
                .iter()
                .zip(&el.equations)
                .map(|(u, e)| (format!("E_{u}({name})"), ctx.display(e)))
                .collect();
            Output::Values(values)
        }
        Command::Div => {
            let components = match p.names.as_slice() {
                [n] if matches!(file.get(n), Some(Definition::VectorField(_))) => file.field(n)?.xi.clone(),
                names if names.len() == ctx.p() => names
                    .iter()
                    .map(|n| density(&file, n))
                    .collect::<Result<Vec<_>, _>>()?,
                _ => {
                    return Err(Failure::Usage(format!(
                        "div needs {} component names or one vector field",
                        ctx.p()
                    )))
                }
            };
            Output::Values(vec![("Div".to_string(), ctx.display(&total_divergence(ctx, &components)?))])
        }
        Command::Exactness => {
            let name = single_name(&p, "expression")?
                .ok_or_else(|| Failure::Usage("exactness needs an expression name".into()))?;
            let l = Lagrangian::new(ctx, density(&file, name)?)?;
            let checks = is_null_lagrangian(ctx, &l, &s)?;
            let entries = ctx
                .dependent_names()
                .iter()
                .zip(&checks)
                .map(|(u, c)| timed_entry(ctx, &format!("exactness/{name}/E_{u}"), "", c, &s, start))
                .collect();
            Output::Report(AuditReport::new(&s, entries))
        }
        Command::Antiderivative => {
            let name = single_name(&p, "expression")?
                .ok_or_else(|| Failure::Usage("antiderivative needs an expression name".into()))?;
            let h = horizontal_antiderivative(ctx, &density(&file, name)?)?;
            Output::Values(vec![("H".to_string(), ctx.display(&h))])
        }
        Command::CheckCompat => {
            let mu_name = pick(&file, single_name(&p, "one-form")?.or(cli.mu.as_deref()), is_one_form, "one-form")?;
            let c = check_compatibility(ctx, file.one_form(mu_name)?)?;
            let names = ctx.independent_names();
            let entries = c
                .residuals
                .iter()
                .map(|((i, j), r)| {
                    let check = Check::new(ctx, r.clone(), &s);
                    let id = format!("compat/{mu_name}/{}{}", names[*i], names[*j]);
                    timed_entry(ctx, &id, "", &check, &s, start)
                })
                .collect();
            Output::Report(AuditReport::new(&s, entries))
        }
        Command::CheckSymmetry => {
            if !p.names.is_empty() {
                return Err(Failure::Usage("check-symmetry takes flags only".into()));
            }
            let eq_name = pick(&file, cli.equation.as_deref(), is_equation, "equation")?;
            let eq = file.equation(eq_name)?;
            let mu = match &cli.mu {
                Some(m) => Some(file.one_form(m)?),
                None => None,
            };
            let order = cli.order.unwrap_or_else(|| eq.lhs.jet_order());
            let check = check_symmetry(ctx, field(cli, &file)?, mu, eq, order, &s)?;
            let kind = if mu.is_some() { "mu-symmetry" } else { "symmetry" };
            Output::Report(AuditReport::new(
                &s,
                vec![timed_entry(ctx, &format!("{kind}/{eq_name}"), "", &check, &s, start)],
            ))
        }
        Command::CheckVariational => {
            let name = pick(&file, single_name(&p, "lagrangian")?, is_lagrangian, "lagrangian")?;
            let l = Lagrangian::new(ctx, density(&file, name)?)?;
            let mu = match &cli.mu {
                Some(m) => Some(file.one_form(m)?),
                None => None,
            };
            let r = check_variational_symmetry(ctx, field(cli, &file)?, mu, &l, &s)?;
            let mut entry = timed_entry(ctx, &format!("variational/{name}"), "", &r.check, &s, start);
            if r.off_shell {
                entry.residual_text = format!("off-shell: {}", entry.residual_text);
                if r.is_symmetry().is_none() {
                    entry.status = Status::Unsupported;
                }
            }
            Output::Report(AuditReport::new(&s, vec![entry]))
        }
        Command::Invariants => {
            let x = field(cli, &file)?;
            let mu = match &cli.mu {
                Some(m) => Some(file.one_form(m)?),
                None => None,
            };
            let names: Vec<&str> = if p.names.is_empty() {
                file.names_of(is_expr)
            } else {
                p.names.clone()
            };
            let mut entries = Vec::with_capacity(names.len());
            for n in names {
                let start = Instant::now();
                let e = file.expr(n)?;
                let order = cli.order.unwrap_or_else(|| e.jet_order().max(1));
                let y = match mu {
                    Some(mu) => mu_prolong(ctx, x, mu, order)?,
                    None => ordinary_prolong(ctx, x, order)?,
                };
                let check = check_invariant(ctx, &y, e, &s)?;
                entries.push(timed_entry(ctx, &format!("invariant/{n}"), "", &check, &s, start));
            }
            Output::Report(AuditReport::new(&s, entries))
        }
        Command::Eval => {
            let name = single_name(&p, "expression")?
                .ok_or_else(|| Failure::Usage("eval needs an expression name".into()))?;
            let e = density(&file, name)?;
            let mut v = s.valuation(ctx, &[], 0, 0);
            for (k, val) in &p.bindings {
                let sym = match ctx.expr(k)? {
                    Expr::Sym(sym) => sym,
                    _ => return Err(Failure::Usage(format!("`{k}` is not a coordinate or parameter"))),
                };
                let x: f64 = val
                    .parse()
                    .map_err(|_| Failure::Usage(format!("`{val}` is not a number")))?;
                v.set(sym, x);
            }
            let value = eval_at(ctx, &e, &v)?;
            Output::Values(vec![(name.to_string(), format!("{value}"))])
        }
        Command::VerifyPaper => unreachable!("handled above"),
    })
}
