//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! printed.

use std::process::Command;
use std::time::{Duration, Instant};

use jetcalc_core::audit::{fixture, verify_paper, AuditReport, Status};
use jetcalc_core::gen;
use jetcalc_core::jet::total_derivative;
use jetcalc_core::symmetry::{
    check_compatibility, mu_prolong, mu_prolong_recursive, ordinary_prolong, HorizontalOneForm, ProlongedVectorField,
    RecursionForm,
};
use jetcalc_core::variational::{euler_lagrange, horizontal_antiderivative, is_null_lagrangian, total_divergence, Lagrangian};
use jetcalc_core::{Check, Expr, JetContext, Sampler};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Zero verdicts and discrepancies collected for the numeric cross-check.
#[derive(Default)]
struct Ledger {
    zeros: Vec<(String, JetContext, Expr)>,
    nonzero: Vec<(String, f64)>,
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

fn plane() -> JetContext {
    JetContext::new(&["x", "t"], &["u"], 4).unwrap()
}

/// Records a componentwise difference as a zero verdict, or fails.
fn expect_same(
    ledger: &mut Ledger,
    label: &str,
    ctx: &JetContext,
    a: &ProlongedVectorField,
    b: &ProlongedVectorField,
    s: &Sampler,
) -> Result<(), String> {
    ensure(a.coefficients().count() == b.coefficients().count(), || format!("{label}: coefficient sets differ"))?;
    for ((ja, ea), (jb, eb)) in a.coefficients().zip(b.coefficients()) {
        ensure(ja == jb, || format!("{label}: coefficient sets differ"))?;
        let c = Check::new(ctx, Expr::sum(vec![ea.clone(), -eb.clone()]), s);
        ensure(c.verdict.is_symbolic_zero(), || {
            format!("{label} {}: residual {}", ctx.jet_name(ja), ctx.display(&c.residual))
        })?;
        ledger.zeros.push((format!("{label} {}", ctx.jet_name(ja)), ctx.clone(), c.raw));
    }
    Ok(())
}

fn zero_mu_reduction(ledger: &mut Ledger, s: &Sampler) -> Outcome {
    let start = Instant::now();
    let ctx = plane();
    let mut checked = 0;
    for seed in 0..20 {
        let x = gen::vector_field(&mut ChaCha8Rng::seed_from_u64(seed), &ctx, 2);
        for k in 1..=3 {
            let a = mu_prolong(&ctx, &x, &HorizontalOneForm::zero(&ctx), k).map_err(|e| e.to_string())?;
            let b = ordinary_prolong(&ctx, &x, k).map_err(|e| e.to_string())?;
            expect_same(ledger, &format!("field {seed} k={k}"), &ctx, &a, &b, s)?;
            checked += 1;
        }
    }
    let t = within(start, Duration::from_secs(5))?;
    Ok(format!("{checked} prolongations identical to the ordinary ones, {t:.2?}"))
}

fn recursion_consistency(ledger: &mut Ledger, s: &Sampler, report: &AuditReport) -> Outcome {
    let ctx = plane();
    for seed in 0..20 {
        let x = gen::vector_field(&mut ChaCha8Rng::seed_from_u64(seed), &ctx, 2);
        let mu = gen::one_form(&mut ChaCha8Rng::seed_from_u64(seed + 1000), &ctx, 1);
        for k in 1..=3 {
            let direct = mu_prolong(&ctx, &x, &mu, k).map_err(|e| e.to_string())?;
            let rec = mu_prolong_recursive(&ctx, &x, &mu, k, RecursionForm::Corrected).map_err(|e| e.to_string())?;
            expect_same(ledger, &format!("recursion {seed} k={k}"), &ctx, &direct, &rec, s)?;
        }
    }
    let entry = report.entry("Thm3/literal-F_x").ok_or("missing entry Thm3/literal-F_x")?;
    ensure(entry.status == Status::Discrepancy, || format!("literal recursion status {:?}", entry.status))?;
    let f = fixture("sec4_general.jsy").unwrap();
    let q = f.expr("Q").unwrap();
    let lambda = f.ctx.expr("lambda").unwrap();
    let dq = total_derivative(&f.ctx, q, 0).map_err(|e| e.to_string())?;
    let expected = &lambda * &(&dq - q);
    let got = f.ctx.expr(&entry.residual_text).map_err(|e| e.to_string())?;
    ensure((&got - &expected).is_zero_symbolic(), || {
        format!("literal residual {} is not lambda*(D_x Q - Q)", entry.residual_text)
    })?;
    ensure(!expected.is_zero_symbolic(), || "lambda*(D_x Q - Q) vanished".into())?;
    ledger
        .nonzero
        .push(("Thm3/literal-F_x".into(), entry.numeric_max_abs_residual.unwrap_or(0.0)));
    ensure(report.entry("Thm3/corrected-recursion").map(|e| e.status) == Some(Status::Pass), || {
        "corrected recursion entry does not pass".into()
    })?;
    Ok("corrected recursion matches on 60 random cases; literal form leaves lambda*(D_x Q - Q)".into())
}

fn null_lagrangian_law(ledger: &mut Ledger, s: &Sampler) -> Outcome {
    let start = Instant::now();
    let ctx = JetContext::new(&["x", "t"], &["u"], 6).unwrap();
    for seed in 0..100 {
        let xi = gen::divergence_field(&mut ChaCha8Rng::seed_from_u64(seed), &ctx, 2);
        let div = total_divergence(&ctx, &xi).map_err(|e| e.to_string())?;
        let l = Lagrangian::new(&ctx, div).map_err(|e| e.to_string())?;
        let el = euler_lagrange(&ctx, &l).map_err(|e| e.to_string())?;
        for (k, terms) in el.provenance.iter().enumerate() {
            // The unsummed terms (-1)^|J| D_J dL/du_J cancel only after
            // normalization, so sampling them exercises real cancellation.
            let raw = Expr::sum(terms.iter().map(|(_, t)| t.clone()).collect());
            let c = Check::new(&ctx, raw, s);
            ensure(c.verdict.is_symbolic_zero() && el.equations[k].is_zero_symbolic(), || {
                format!("xi {seed}: E(Div xi) = {}", ctx.display(&c.residual))
            })?;
            ledger.zeros.push((format!("E(Div xi) {seed}/{k}"), ctx.clone(), c.raw));
        }
    }
    let t = within(start, Duration::from_secs(10))?;
    Ok(format!("E(Div xi) = 0 for 100 random xi, {t:.2?}"))
}

const EXACT_PASSES: [&str; 7] = [
    "Eq15/Psi_t",
    "Eq15/Psi_tt",
    "Sec4/Q",
    "Sec4/y-invariant",
    "Sec4/v-invariant",
    "Eq17/xi2-invariance",
    "Eq21/lambda-symmetry",
];

fn exact_passes(report: &AuditReport) -> Outcome {
    for id in EXACT_PASSES {
        let e = report.entry(id).ok_or_else(|| format!("missing entry {id}"))?;
        ensure(e.status == Status::Pass && e.residual_text == "0", || {
            format!("{id}: {} {}", e.status.as_str(), e.residual_text)
        })?;
    }
    Ok(format!("{} entries pass with residual 0", EXACT_PASSES.len()))
}

fn flagged_discrepancies(ledger: &mut Ledger, report: &AuditReport, again: &AuditReport) -> Outcome {
    let expected = [
        ("Eq15/Psi_x", "sec4_general.jsy", "(1 - 2*x)*u_x - (1 - 2*x)"),
        ("Eq17/v", "sec4_case1.jsy", "u/x - u"),
        ("Eq23/EL", "olver_quadrature.jsy", "-(x^2 + x)*exp(u) - (u_xx - (1 + 2*x)*exp(u) - (x + x^2)*u_x*exp(u))"),
        ("Eq23/direct-method", "olver_quadrature.jsy", "x*u_xxx"),
    ];
    for (id, file, text) in expected {
        let f = fixture(file).unwrap();
        let e = report.entry(id).ok_or_else(|| format!("missing entry {id}"))?;
        ensure(e.status == Status::Discrepancy, || format!("{id}: status {}", e.status.as_str()))?;
        let want = f.ctx.expr(text).unwrap().normalize();
        ensure(e.residual_text == f.ctx.display(&want), || {
            format!("{id}: residual {} expected {}", e.residual_text, f.ctx.display(&want))
        })?;
        let other = again.entry(id).unwrap();
        ensure(other.residual_text == e.residual_text && other.status == e.status, || format!("{id}: run-to-run change"))?;
        ledger.nonzero.push((id.to_string(), e.numeric_max_abs_residual.unwrap_or(0.0)));
    }
    Ok("Eq15/Psi_x, Eq17/v, Eq23/EL, Eq23/direct-method flagged with the expected residuals".into())
}

fn exactness(ledger: &mut Ledger, s: &Sampler) -> Outcome {
    let start = Instant::now();
    let f = fixture("olver_quadrature.jsy").unwrap();
    let ctx = &f.ctx;
    let delta = &f.equation("Delta").unwrap().lhs;
    let l = Lagrangian::new(ctx, delta.clone()).map_err(|e| e.to_string())?;
    for c in is_null_lagrangian(ctx, &l, s).map_err(|e| e.to_string())? {
        ensure(c.verdict.is_symbolic_zero(), || format!("E(Delta) = {}", ctx.display(&c.residual)))?;
        ledger.zeros.push(("E(Delta)".into(), ctx.clone(), c.raw));
    }
    let h = horizontal_antiderivative(ctx, delta).map_err(|e| e.to_string())?;
    let raw = &total_derivative(ctx, &h, 0).map_err(|e| e.to_string())? - delta;
    let c = Check::new(ctx, raw, s);
    ensure(c.verdict.is_symbolic_zero(), || format!("D_x H - Delta = {}", ctx.display(&c.residual)))?;
    ledger.zeros.push(("D_x H - Delta".into(), ctx.clone(), c.raw));

    let line = JetContext::new(&["x"], &["u"], 6).unwrap();
    for seed in 0..50 {
        let hh = gen::density(&mut ChaCha8Rng::seed_from_u64(seed), &line, 2);
        let e = total_derivative(&line, &hh, 0).map_err(|e| e.to_string())?;
        let found = horizontal_antiderivative(&line, &e).map_err(|err| format!("density {seed}: {err}"))?;
        let c = Check::new(&line, &total_derivative(&line, &found, 0).map_err(|e| e.to_string())? - &e, s);
        ensure(c.verdict.is_symbolic_zero(), || format!("density {seed}: {}", line.display(&c.residual)))?;
        ledger.zeros.push((format!("round trip {seed}"), line.clone(), c.raw));
    }
    let t = within(start, Duration::from_secs(10))?;
    Ok(format!("Delta exact, H = {}, 50 round trips, {t:.2?}", ctx.display(&h)))
}

fn numeric_agreement(ledger: &Ledger, s: &Sampler) -> Outcome {
    let mut worst: f64 = 0.0;
    for (label, ctx, raw) in &ledger.zeros {
        let m = s.max_abs(ctx, raw).ok_or_else(|| format!("{label}: no sample point evaluated"))?;
        ensure(m < 1e-9, || format!("{label}: max |residual| = {m:e}"))?;
        worst = worst.max(m);
    }
    for (label, m) in &ledger.nonzero {
        ensure(*m > 1e-3, || format!("{label}: max |residual| = {m:e}"))?;
    }
    Ok(format!(
        "{} zero residuals below 1e-9 (worst {worst:.1e}), {} discrepancies above 1e-3",
        ledger.zeros.len(),
        ledger.nonzero.len()
    ))
}

fn compatibility() -> Outcome {
    let ctx = JetContext::new(&["x", "t"], &["u"], 3).unwrap().with_params(&["a", "b"]).unwrap();
    let form = |l: &str, r: &str| HorizontalOneForm::new(&ctx, vec![ctx.expr(l).unwrap(), ctx.expr(r).unwrap()]).unwrap();
    ensure(check_compatibility(&ctx, &form("a", "b")).unwrap().is_compatible(), || "constant form rejected".into())?;
    ensure(check_compatibility(&ctx, &form("3", "-1/2")).unwrap().is_compatible(), || "numeric form rejected".into())?;
    ensure(check_compatibility(&ctx, &form("u_x", "u_t")).unwrap().is_compatible(), || "u_x dx + u_t dt rejected".into())?;
    let bad = check_compatibility(&ctx, &form("u_t", "u_x")).unwrap();
    ensure(!bad.is_compatible(), || "u_t dx + u_x dt accepted".into())?;
    let (_, w) = bad.witness().ok_or("no witness")?;
    let want = ctx.expr("u_tt - u_xx").unwrap();
    ensure((w - &want).is_zero_symbolic(), || format!("witness {}", ctx.display(w)))?;
    Ok(format!("witness {}", ctx.display(w)))
}

fn strip_timing(json: &str) -> String {
    json.lines().filter(|l| !l.contains("\"elapsed_ms\"")).collect::<Vec<_>>().join("\n")
}

fn end_to_end() -> Outcome {
    let run = || {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_jetcalc"))
            .args(["verify-paper", "--json", "--seed", "42"])
            .output()
            .map_err(|e| e.to_string())?;
        Ok::<_, String>((start.elapsed(), out))
    };
    let (t1, a) = run()?;
    let (t2, b) = run()?;
    let slowest = t1.max(t2);
    ensure(slowest < Duration::from_secs(30), || format!("verify-paper took {slowest:.2?}"))?;
    ensure(a.status.code() == Some(1) && b.status.code() == Some(1), || {
        format!("exit codes {:?} {:?}", a.status.code(), b.status.code())
    })?;
    let (ja, jb) = (String::from_utf8_lossy(&a.stdout), String::from_utf8_lossy(&b.stdout));
    ensure(strip_timing(&ja) == strip_timing(&jb), || "runs differ outside timing fields".into())?;
    let doc: serde_json::Value = serde_json::from_str(&ja).map_err(|e| e.to_string())?;
    let n = doc["entries"].as_array().map_or(0, Vec::len);
    ensure(n > 0, || "no entries".into())?;
    Ok(format!("{n} entries, exit 1, identical runs, slowest {slowest:.2?}"))
}

fn main() {
    let s = Sampler::default();
    let report = verify_paper(&s);
    let again = verify_paper(&s);
    let mut ledger = Ledger::default();
    let results: Vec<(&str, Outcome)> = vec![
        ("zero-mu reduction", zero_mu_reduction(&mut ledger, &s)),
        ("recursion consistency", recursion_consistency(&mut ledger, &s, &report)),
        ("null-Lagrangian law", null_lagrangian_law(&mut ledger, &s)),
        ("fixture exact passes", exact_passes(&report)),
        ("fixture flagged discrepancies", flagged_discrepancies(&mut ledger, &report, &again)),
        ("exactness", exactness(&mut ledger, &s)),
        ("symbolic-numeric agreement", numeric_agreement(&ledger, &s)),
        ("compatibility checker", compatibility()),
        ("end-to-end verify-paper", end_to_end()),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
