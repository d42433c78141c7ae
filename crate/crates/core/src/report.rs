//! Per-statement verification summary and its plain-text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Statement ids in report order.
pub const STATEMENT_IDS: [&str; 10] = [
    "Prop2.2",
    "Prop2.3",
    "Prop2.4",
    "Thm2.6-consistency",
    "Thm3.2",
    "Thm3.4",
    "Thm3.6",
    "Thm4.4",
    "Thm1.1",
    "Lemma5.1",
];

/// Short description of what each id checks.
pub fn anchor(id: &str) -> &'static str {
    match id {
        "Prop2.2" => "D = -2(Delta-2)^-1 is self-adjoint and positive",
        "Prop2.3" => "Green kernel of D is pointwise positive, symmetric, reproduces constants",
        "Prop2.4" => "curvature tensor index symmetries; R_iiii > 0, holomorphic sectional curvature < 0",
        "Thm2.6-consistency" => "tensor-path and integral-path values of Q agree",
        "Thm3.2" => "Q negative definite on span{dx_i ^ dx_j}",
        "Thm3.4" => "Q vanishes on dx_i ^ dy_j with antisymmetric coefficients",
        "Thm3.6" => "Q negative definite on span{dy_i ^ dy_j}",
        "Thm4.4" => "Q(A, A) = 0 for A = B - J(B)",
        "Thm1.1" => "Q <= 0 with kernel exactly the -1 eigenspace of J on 2-vectors",
        "Lemma5.1" => "v^Jv + Kv^Iv in quaternionic hyperbolic space: Q-null, J-fixed, outside range(I - J)",
        _ => "unknown statement",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub id: String,
    pub anchor: String,
    pub status: Status,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl ReportEntry {
    pub fn new(id: &str, passed: bool, residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            anchor: anchor(id).into(),
            status: if passed { Status::Pass } else { Status::Fail },
            residual,
            tolerance,
            detail: detail.into(),
        }
    }

    pub fn skipped(id: &str) -> Self {
        Self {
            id: id.into(),
            anchor: anchor(id).into(),
            status: Status::Skipped,
            residual: 0.0,
            tolerance: 0.0,
            detail: "stage not selected".into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config_hash: String,
    pub entries: Vec<ReportEntry>,
    pub warnings: Vec<String>,
}

impl VerificationReport {
    /// Report with every statement marked skipped.
    pub fn new(config_hash: &str) -> Self {
        Self {
            config_hash: config_hash.into(),
            entries: STATEMENT_IDS.iter().map(|id| ReportEntry::skipped(id)).collect(),
            warnings: Vec::new(),
        }
    }

    /// Replaces the entry with the same id.
    pub fn record(&mut self, entry: ReportEntry) -> Result<()> {
        let slot = self
            .entries
            .iter_mut()
            .find(|e| e.id == entry.id)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown statement id '{}'", entry.id)))?;
        *slot = entry;
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Every id present exactly once, in order.
    pub fn is_well_formed(&self) -> bool {
        self.entries.len() == STATEMENT_IDS.len() && self.entries.iter().zip(STATEMENT_IDS).all(|(e, id)| e.id == id)
    }

    /// True when no selected check failed.
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail)
    }

    pub fn failed(&self) -> Vec<&ReportEntry> {
        self.entries.iter().filter(|e| e.status == Status::Fail).collect()
    }
}

/// One line per statement, then warnings.
pub fn explain(report: &VerificationReport) -> Result<String> {
    if report.entries.is_empty() {
        return Err(Error::InvalidParameter("report has no entries".into()));
    }
    if !report.is_well_formed() {
        return Err(Error::InvalidParameter(format!(
            "report must list {} statements once each in order, found {}",
            STATEMENT_IDS.len(),
            report.entries.len()
        )));
    }
    let mut out = String::new();
    for e in &report.entries {
        let status = match e.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        let _ = write!(out, "{status} {:<18} residual={:.3e} tol={:.1e} [{}]", e.id, e.residual, e.tolerance, e.anchor);
        if !e.detail.is_empty() {
            let _ = write!(out, " {}", e.detail);
        }
        out.push('\n');
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    Ok(out)
}
