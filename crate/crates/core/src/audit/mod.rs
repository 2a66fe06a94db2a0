//! Bundled audit of the worked examples: every printed coefficient,
//! invariant and Lagrangian claim re-derived and compared, one report entry
//! per claim.

mod tasks;

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::expr::{Check, Expr, JetContext, Sampler, Verdict};
use crate::par;
use crate::problem::ProblemFile;

pub use tasks::{entry_ids, Task};

/// Bundled fixture files, by file name.
pub const FIXTURES: &[(&str, &str)] = &[
    ("sec4_general.jsy", include_str!("../../fixtures/sec4_general.jsy")),
    ("sec4_case1.jsy", include_str!("../../fixtures/sec4_case1.jsy")),
    ("sec4_case2.jsy", include_str!("../../fixtures/sec4_case2.jsy")),
    ("olver_quadrature.jsy", include_str!("../../fixtures/olver_quadrature.jsy")),
    ("muriel_romero.jsy", include_str!("../../fixtures/muriel_romero.jsy")),
];

/// Source text of a bundled fixture.
pub fn fixture_text(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Parses a bundled fixture.
pub fn fixture(name: &str) -> Option<ProblemFile> {
    fixture_text(name).map(|t| ProblemFile::parse(t).expect("bundled fixtures parse"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Discrepancy,
    ProbablePass,
    Unsupported,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Discrepancy => "discrepancy",
            Status::ProbablePass => "probable-pass",
            Status::Unsupported => "unsupported",
        }
    }

    pub fn from_verdict(v: &Verdict) -> Status {
        match v {
            Verdict::ZeroSymbolic => Status::Pass,
            Verdict::ProbablyZero { .. } => Status::ProbablePass,
            Verdict::NonZero { .. } => Status::Discrepancy,
            Verdict::Undetermined { .. } => Status::Unsupported,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    pub case_id: String,
    pub paper_anchor: String,
    pub status: Status,
    pub residual_text: String,
    pub numeric_max_abs_residual: Option<f64>,
    pub seed: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerInfo {
    pub points: usize,
    pub tolerance: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub tool_version: String,
    pub seed: u64,
    pub sampler: SamplerInfo,
    pub entries: Vec<AuditEntry>,
}

impl AuditEntry {
    /// Entry for a single residual check.
    pub fn from_check(ctx: &JetContext, case_id: &str, anchor: &str, check: &Check, sampler: &Sampler) -> AuditEntry {
        AuditEntry {
            case_id: case_id.to_string(),
            paper_anchor: anchor.to_string(),
            status: Status::from_verdict(&check.verdict),
            residual_text: ctx.display(&check.residual),
            numeric_max_abs_residual: sampler.max_abs(ctx, &check.raw),
            seed: sampler.seed,
            elapsed_ms: 0,
        }
    }
}

impl AuditReport {
    /// Report over `entries`, recording the sampler settings.
    pub fn new(sampler: &Sampler, entries: Vec<AuditEntry>) -> AuditReport {
        AuditReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: sampler.seed,
            sampler: SamplerInfo {
                points: sampler.points,
                tolerance: sampler.tolerance,
                low: sampler.low,
                high: sampler.high,
            },
            entries,
        }
    }

    pub fn has_discrepancy(&self) -> bool {
        self.entries.iter().any(|e| e.status == Status::Discrepancy)
    }

    pub fn entry(&self, case_id: &str) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.case_id == case_id)
    }

    pub fn count(&self, status: Status) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Copy with every timing field zeroed, for comparing runs.
    pub fn without_timing(&self) -> AuditReport {
        let mut r = self.clone();
        for e in &mut r.entries {
            e.elapsed_ms = 0;
        }
        r
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let width = self.entries.iter().map(|e| e.case_id.len()).max().unwrap_or(0);
        for e in &self.entries {
            let _ = writeln!(out, "{:<width$}  {:<13}  {}", e.case_id, e.status.as_str(), e.residual_text);
        }
        let _ = writeln!(
            out,
            "\n{} entries: {} pass, {} probable-pass, {} discrepancy, {} unsupported (seed {})",
            self.entries.len(),
            self.count(Status::Pass),
            self.count(Status::ProbablePass),
            self.count(Status::Discrepancy),
            self.count(Status::Unsupported),
            self.seed
        );
        out
    }
}

/// What a task produced.
pub(crate) enum Outcome {
    Check(Check),
    /// Residual off the solution manifold; only a zero result is conclusive.
    OffShell(Check),
    /// Residual split by opaque-function coefficients.
    PerOpaque { residual: Expr, verdicts: Vec<Verdict> },
}

fn entry_from(ctx: &JetContext, task: &Task, outcome: crate::Result<Outcome>, sampler: &Sampler) -> AuditEntry {
    let (status, residual_text, numeric) = match outcome {
        Err(e) => (Status::Unsupported, format!("error: {e}"), None),
        Ok(Outcome::Check(c)) => (
            Status::from_verdict(&c.verdict),
            ctx.display(&c.residual),
            sampler.max_abs(ctx, &c.raw),
        ),
        Ok(Outcome::OffShell(c)) => {
            let status = match Status::from_verdict(&c.verdict) {
                Status::Discrepancy => Status::Unsupported,
                s => s,
            };
            (status, format!("off-shell: {}", ctx.display(&c.residual)), sampler.max_abs(ctx, &c.raw))
        }
        Ok(Outcome::PerOpaque { residual, verdicts }) => {
            let status = if verdicts.iter().all(Verdict::is_symbolic_zero) {
                Status::Pass
            } else if verdicts.iter().any(Verdict::is_nonzero) {
                Status::Discrepancy
            } else if verdicts.iter().all(Verdict::is_zero) {
                Status::ProbablePass
            } else {
                Status::Unsupported
            };
            (status, ctx.display(&residual), sampler.max_abs(ctx, &residual))
        }
    };
    AuditEntry {
        case_id: task.case_id.clone(),
        paper_anchor: task.anchor.clone(),
        status,
        residual_text,
        numeric_max_abs_residual: numeric,
        seed: sampler.seed,
        elapsed_ms: 0,
    }
}

/// Runs every bundled audit task. Entries are computed with the sampler's
/// execution policy and sorted by case id.
pub fn verify_paper(sampler: &Sampler) -> AuditReport {
    let files: Vec<(&str, ProblemFile)> = FIXTURES
        .iter()
        .map(|(n, t)| (*n, ProblemFile::parse(t).expect("bundled fixtures parse")))
        .collect();
    let tasks = tasks::all();
    let mut entries = par::map(sampler.exec, &tasks, |task| {
        let start = Instant::now();
        let file = &files.iter().find(|(n, _)| *n == task.file).expect("task fixture").1;
        let outcome = task.run(file, sampler);
        let mut entry = entry_from(&file.ctx, task, outcome, sampler);
        entry.elapsed_ms = start.elapsed().as_millis() as u64;
        entry
    });
    entries.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    AuditReport::new(sampler, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_round_trip() {
        for (name, text) in FIXTURES {
            let f = ProblemFile::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let s = f.serialize();
            let g = ProblemFile::parse(&s).unwrap_or_else(|e| panic!("{name} reserialized: {e}\n{s}"));
            assert_eq!(f.definitions, g.definitions, "{name}");
            assert_eq!(g.serialize(), s, "{name}");
        }
    }

    #[test]
    fn status_names() {
        assert_eq!(serde_json::to_string(&Status::ProbablePass).unwrap(), "\"probable-pass\"");
        assert_eq!(Status::from_verdict(&Verdict::ZeroSymbolic), Status::Pass);
    }

    #[test]
    fn case_ids_are_unique() {
        let mut ids = entry_ids();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }
}
