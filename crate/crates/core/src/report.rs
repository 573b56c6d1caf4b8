//! Run reports: per-instance policy metrics, check summaries and ratios.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::ArrivalCheck;
use crate::model::{Instance, Metrics, Mode};

/// Hex SHA-256 of the instance's JSON form.
pub fn instance_digest(instance: &Instance) -> String {
    let json = serde_json::to_vec(instance).expect("instances serialize");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

/// A ratio against the offline proxy, or the reason it is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ratio {
    Value(f64),
    Missing(String),
}

impl Ratio {
    pub const NOT_COMPUTED: &'static str = "not computed";

    pub fn not_computed() -> Self {
        Ratio::Missing(Self::NOT_COMPUTED.into())
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(*v),
            Ratio::Missing(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub name: String,
    pub speedup: f64,
    pub metrics: Metrics,
    pub objective: f64,
    pub ratio_vs_proxy: Ratio,
}

/// Pass count, total, skips and the smallest slack seen (`None` when
/// nothing was checked).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub passed: u64,
    pub total: u64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub skipped: u64,
    pub worst_margin: Option<f64>,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

impl CheckSummary {
    pub fn record(&mut self, pass: bool, margin: f64) {
        self.total += 1;
        if pass {
            self.passed += 1;
        }
        self.worst_margin = Some(self.worst_margin.map_or(margin, |m| m.min(margin)));
    }

    pub fn merge(&mut self, other: &CheckSummary) {
        self.passed += other.passed;
        self.total += other.total;
        self.skipped += other.skipped;
        self.worst_margin = match (self.worst_margin, other.worst_margin) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }

    pub fn all_pass(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub machines: usize,
    pub jobs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub policies: Vec<PolicyReport>,
    /// Keyed by check name; empty for plain runs.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub checks: BTreeMap<String, CheckSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub arrivals: Vec<AdversaryArrivals>,
}

/// Arrival checks against one adversary; index 0 is the proxy when it was computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryArrivals {
    pub adversary: usize,
    pub checks: Vec<ArrivalCheck>,
}

impl InstanceReport {
    pub fn all_pass(&self) -> bool {
        self.checks.values().all(CheckSummary::all_pass)
    }

    pub fn policy(&self, name: &str) -> Option<&PolicyReport> {
        self.policies.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub instances: u64,
    pub ratios: u64,
    pub max_ratio: Option<f64>,
    pub mean_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub instances: u64,
    pub checks: BTreeMap<String, CheckSummary>,
    pub policies: BTreeMap<String, PolicySummary>,
    /// Largest `online / proxy` divided by its bound `2 (c + d)`.
    pub max_ratio_over_bound: Option<f64>,
    pub all_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub mode: Mode,
    pub instances: Vec<InstanceReport>,
    pub summary: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl RunReport {
    /// Builds the summary from the instance reports. `bounds[i]` is the
    /// ratio bound for instance `i`, if any.
    pub fn new(command: &str, mode: Mode, instances: Vec<InstanceReport>, bounds: &[Option<f64>]) -> Self {
        let mut summary = Summary { instances: instances.len() as u64, ..Default::default() };
        let mut sums: BTreeMap<String, f64> = BTreeMap::new();
        for (i, inst) in instances.iter().enumerate() {
            for (name, check) in &inst.checks {
                summary.checks.entry(name.clone()).or_default().merge(check);
            }
            for p in &inst.policies {
                let entry = summary.policies.entry(p.name.clone()).or_default();
                entry.instances += 1;
                if let Some(r) = p.ratio_vs_proxy.value() {
                    entry.ratios += 1;
                    entry.max_ratio = Some(entry.max_ratio.map_or(r, |m| m.max(r)));
                    *sums.entry(p.name.clone()).or_default() += r;
                    if p.name == "online" {
                        if let Some(Some(bound)) = bounds.get(i) {
                            let q = r / bound;
                            summary.max_ratio_over_bound = Some(summary.max_ratio_over_bound.map_or(q, |m| m.max(q)));
                        }
                    }
                }
            }
        }
        for (name, p) in summary.policies.iter_mut() {
            if p.ratios > 0 {
                p.mean_ratio = Some(sums[name] / p.ratios as f64);
            }
        }
        summary.all_passed = summary.checks.values().all(CheckSummary::all_pass);
        RunReport { command: command.into(), mode, instances, summary, wall_clock_seconds: None }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
