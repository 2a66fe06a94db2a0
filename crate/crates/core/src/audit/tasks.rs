use super::Outcome;
use crate::error::Result;
use crate::expr::{Check, Expr, Sampler};
use crate::jet::{lie_characteristic, total_derivative};
use crate::problem::ProblemFile;
use crate::symmetry::{
    apply, check_symmetry, mu_prolong, mu_prolong_recursive, ordinary_prolong, ProlongedVectorField, RecursionForm,
};
use crate::variational::{
    check_variational_symmetry, direct_method_check, euler_lagrange, gauge_shift, horizontal_antiderivative,
    is_null_lagrangian, opaque_coefficient_verdicts, Lagrangian,
};

const GENERAL: &str = "sec4_general.jsy";
const CASE1: &str = "sec4_case1.jsy";
const CASE2: &str = "sec4_case2.jsy";
const OLVER: &str = "olver_quadrature.jsy";
const MR: &str = "muriel_romero.jsy";

/// Every problem file names its field `X`, one-form `mu`, equation `Delta`,
/// Lagrangian `L` and opaque part `Fterm`.
#[derive(Debug, Clone)]
pub enum Kind {
    Characteristic { printed: &'static str },
    /// Prolongation coefficient for the jet `jet` against the printed one.
    Coefficient { jet: &'static str, printed: &'static str },
    /// `Y(f)` for the ordinary (`mu = false`) or μ-prolongation of `X`.
    Invariant { mu: bool, expr: &'static str },
    CorrectedRecursion,
    LiteralRecursion { jet: &'static str },
    MuSymmetry,
    Exactness,
    Antiderivative,
    EulerLagrange { sign: i64 },
    DirectMethod,
    OpaqueTerm,
    Gauge { xi: &'static str },
    VariationalMuSymmetry,
}

#[derive(Debug, Clone)]
pub struct Task {
    pub case_id: String,
    pub anchor: String,
    pub file: &'static str,
    pub kind: Kind,
}

fn task(case_id: &str, anchor: &str, file: &'static str, kind: Kind) -> Task {
    Task {
        case_id: case_id.to_string(),
        anchor: anchor.to_string(),
        file,
        kind,
    }
}

const COEFFICIENTS: [(&str, &str, &str); 5] = [
    ("Psi_x", "u_x", "Psix"),
    ("Psi_t", "u_t", "Psit"),
    ("Psi_xx", "u_xx", "Psixx"),
    ("Psi_xt", "u_xt", "Psixt"),
    ("Psi_tt", "u_tt", "Psitt"),
];

const INVARIANTS: [&str; 7] = ["y", "v", "xi1", "xi2", "eta1", "eta2", "eta3"];

pub(crate) fn all() -> Vec<Task> {
    let mut out = vec![
        task("Sec4/Q", "Sec. 4 / Q = u - x^2 u_x - t u_t", GENERAL, Kind::Characteristic { printed: "Q" }),
        task("Sec4/y-invariant", "Sec. 4 / y = t e^(1/x)", GENERAL, Kind::Invariant { mu: false, expr: "y" }),
        task("Sec4/v-invariant", "Sec. 4 / v = u/t", GENERAL, Kind::Invariant { mu: false, expr: "v" }),
        task("Thm3/corrected-recursion", "Thm. 3 / F_{J,i} with D_J Q", GENERAL, Kind::CorrectedRecursion),
        task("Thm3/literal-F_x", "Thm. 3 / F_x = lambda D_x Q as printed", GENERAL, Kind::LiteralRecursion { jet: "u_x" }),
        task("Thm3/literal-F_t", "Thm. 3 / F_t = tau D_t Q as printed", GENERAL, Kind::LiteralRecursion { jet: "u_t" }),
    ];
    for (eq, file) in [("15", GENERAL), ("16", CASE1), ("19", CASE2)] {
        for (id, jet, printed) in COEFFICIENTS {
            let anchor = format!("Eq. {eq} / {}", id.replace('_', "^"));
            out.push(task(&format!("Eq{eq}/{id}"), &anchor, file, Kind::Coefficient { jet, printed }));
        }
    }
    for (eq, file) in [("17", CASE1), ("20", CASE2)] {
        for name in INVARIANTS {
            let id = if eq == "17" && name == "v" {
                "Eq17/v".to_string()
            } else {
                format!("Eq{eq}/{name}-invariance")
            };
            let anchor = if name == "v" {
                let v = if eq == "17" { "u/x" } else { "u/t" };
                format!("Eq. {eq} / v = {v}")
            } else {
                format!("Eq. {eq} / {name}")
            };
            out.push(task(&id, &anchor, file, Kind::Invariant { mu: true, expr: name }));
        }
    }
    out.extend([
        task("Eq21/lambda-symmetry", "Eq. 21 / X = d_u, lambda = (x+x^2)e^u", OLVER, Kind::MuSymmetry),
        task("Eq21/exactness", "Eq. 21 / Delta is a total derivative", OLVER, Kind::Exactness),
        task("Eq22/antiderivative", "Eq. 22 / D_x H = Delta", OLVER, Kind::Antiderivative),
        task("Eq23/EL", "Eq. 23 / E(L) = Delta", OLVER, Kind::EulerLagrange { sign: 1 }),
        task("Eq23/EL-neg", "Eq. 23 / E(L) = -Delta", OLVER, Kind::EulerLagrange { sign: -1 }),
        task("Eq23/direct-method", "Eq. 22-23 / D_x L = Delta", OLVER, Kind::DirectMethod),
        task("Eq23/F-term-null", "Eq. 23 / E(F(...)) = 0 for all F", OLVER, Kind::OpaqueTerm),
        task("Prop1/gauge", "Prop. 1 / E(L + Div xi) = E(L)", OLVER, Kind::Gauge { xi: "gauge" }),
        task(
            "Prop1/lambda-symmetry-EL",
            "Prop. 1 / lambda-symmetry of E(L)",
            OLVER,
            Kind::VariationalMuSymmetry,
        ),
        task("Eq27/EL", "Eq. 27 / E(L) = Delta (Eq. 25)", MR, Kind::EulerLagrange { sign: 1 }),
        task("Eq27/EL-neg", "Eq. 27 / E(L) = -Delta (Eq. 25)", MR, Kind::EulerLagrange { sign: -1 }),
        task("Eq27/direct-method", "Eq. 26-27 / D_x L = Delta", MR, Kind::DirectMethod),
        task("Eq27/F-term-null", "Eq. 27 / E(F(...)) = 0 for all F", MR, Kind::OpaqueTerm),
        task("Prop2/lambda-symmetry", "Prop. 2 / X = u d_u, lambda = x/u^2", MR, Kind::MuSymmetry),
    ]);
    out
}

/// Case ids of all bundled tasks.
pub fn entry_ids() -> Vec<String> {
    all().into_iter().map(|t| t.case_id).collect()
}

const PROLONG_ORDER: u32 = 2;

fn mu_prolonged(f: &ProblemFile) -> Result<ProlongedVectorField> {
    mu_prolong(&f.ctx, f.field("X")?, f.one_form("mu")?, PROLONG_ORDER)
}

fn coefficient(y: &ProlongedVectorField, f: &ProblemFile, jet: &str) -> Result<Expr> {
    Ok(y.coefficient_named(&f.ctx, jet)?.clone())
}

impl Task {
    pub(crate) fn run(&self, f: &ProblemFile, s: &Sampler) -> Result<Outcome> {
        let ctx = &f.ctx;
        let diff = |a: Expr, b: &Expr| Check::new(ctx, Expr::sum(vec![a, -b.clone()]), s);
        Ok(match &self.kind {
            Kind::Characteristic { printed } => {
                let q = lie_characteristic(ctx, f.field("X")?).remove(0);
                Outcome::Check(diff(q, f.expr(printed)?))
            }
            Kind::Coefficient { jet, printed } => {
                let y = mu_prolonged(f)?;
                Outcome::Check(diff(coefficient(&y, f, jet)?, f.expr(printed)?))
            }
            Kind::Invariant { mu, expr } => {
                let e = f.expr(expr)?;
                let order = e.jet_order().max(1);
                let y = if *mu {
                    mu_prolong(ctx, f.field("X")?, f.one_form("mu")?, order)?
                } else {
                    ordinary_prolong(ctx, f.field("X")?, order)?
                };
                Outcome::Check(Check::new(ctx, apply(ctx, &y, e)?, s))
            }
            Kind::CorrectedRecursion => {
                let direct = mu_prolonged(f)?;
                let rec = mu_prolong_recursive(ctx, f.field("X")?, f.one_form("mu")?, PROLONG_ORDER, RecursionForm::Corrected)?;
                let mut worst = Check::new(ctx, Expr::zero(), s);
                for ((_, a), (_, b)) in rec.coefficients().zip(direct.coefficients()) {
                    let c = diff(a.clone(), b);
                    if !c.verdict.is_symbolic_zero() {
                        worst = c;
                        break;
                    }
                }
                Outcome::Check(worst)
            }
            Kind::LiteralRecursion { jet } => {
                let direct = mu_prolonged(f)?;
                let lit = mu_prolong_recursive(ctx, f.field("X")?, f.one_form("mu")?, PROLONG_ORDER, RecursionForm::Literal)?;
                Outcome::Check(diff(coefficient(&lit, f, jet)?, &coefficient(&direct, f, jet)?))
            }
            Kind::MuSymmetry => {
                let eq = f.equation("Delta")?;
                let check = check_symmetry(ctx, f.field("X")?, Some(f.one_form("mu")?), eq, eq.lhs.jet_order(), s)?;
                Outcome::Check(check)
            }
            Kind::Exactness => {
                let l = Lagrangian::new(ctx, f.equation("Delta")?.lhs.clone())?;
                Outcome::Check(is_null_lagrangian(ctx, &l, s)?.remove(0))
            }
            Kind::Antiderivative => {
                let lhs = &f.equation("Delta")?.lhs;
                let h = horizontal_antiderivative(ctx, lhs)?;
                Outcome::Check(diff(total_derivative(ctx, &h, 0)?, lhs))
            }
            Kind::EulerLagrange { sign } => {
                let eq = f.equation("Delta")?;
                let el = euler_lagrange(ctx, f.lagrangian("L")?)?.equations.remove(0);
                Outcome::Check(diff(el, &(&Expr::int(*sign) * &eq.lhs)))
            }
            Kind::DirectMethod => {
                Outcome::Check(direct_method_check(ctx, f.lagrangian("L")?, f.equation("Delta")?, s)?)
            }
            Kind::OpaqueTerm => {
                let l = Lagrangian::new(ctx, f.expr("Fterm")?.clone())?;
                let residual = euler_lagrange(ctx, &l)?.equations.remove(0);
                let verdicts = opaque_coefficient_verdicts(ctx, &residual, s)
                    .into_iter()
                    .map(|(_, v)| v)
                    .collect();
                Outcome::PerOpaque { residual, verdicts }
            }
            Kind::Gauge { xi } => {
                let l = f.lagrangian("L")?;
                let shifted = gauge_shift(ctx, l, &[f.expr(xi)?.clone()])?;
                let a = euler_lagrange(ctx, &shifted)?.equations.remove(0);
                let b = euler_lagrange(ctx, l)?.equations.remove(0);
                Outcome::Check(diff(a, &b))
            }
            Kind::VariationalMuSymmetry => {
                let r = check_variational_symmetry(ctx, f.field("X")?, Some(f.one_form("mu")?), f.lagrangian("L")?, s)?;
                if r.off_shell {
                    Outcome::OffShell(r.check)
                } else {
                    Outcome::Check(r.check)
                }
            }
        })
    }
}
