//! The run report: the single source of truth for what a scenario did.
//! Acceptance checks read the report; nothing is asserted inside the loop.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::alerts::{Alert, SigKind};
use crate::defender::Decision;

use super::scenario::Expectations;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventRecord {
    pub tick: u64,
    pub seq: u64,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub uri: Option<String>,
    pub permitted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BeliefSnapshot {
    pub tick: u64,
    pub goal_belief: f64,
    pub digest: String,
    pub conditions: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub ticks: u64,
    pub seed: u64,
    pub alerts: Vec<Alert>,
    pub alert_total: usize,
    /// Multiset of signature-alert SIDs.
    pub signature_sids: BTreeMap<u32, usize>,
    pub informative_total: usize,
    pub events: Vec<EventRecord>,
    pub permitted_events: usize,
    pub blocked_events: usize,
    pub beliefs: Vec<BeliefSnapshot>,
    pub decisions: Vec<Decision>,
    /// Rendered rule lines in deployment order.
    pub rules: Vec<String>,
    /// Goals that the reasoner could not derive, if any.
    pub unreachable_goals: Vec<String>,
    /// True iff mitigation happened and every later event touching a
    /// blocked address was dropped.
    pub verdict: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub(super) fn sid_multiset(alerts: &[Alert]) -> BTreeMap<u32, usize> {
    let mut counts = BTreeMap::new();
    for alert in alerts.iter().filter(|a| a.kind == SigKind::Alert) {
        *counts.entry(alert.sid).or_insert(0) += 1;
    }
    counts
}

/// Compares a report against a scenario's expectations; returns one diff
/// line per violated assertion.
pub fn check_expectations(report: &Report, expect: &Expectations) -> Vec<String> {
    let mut diffs = Vec::new();
    if let Some(total) = expect.alerts_total {
        if report.alert_total != total {
            diffs.push(format!(
                "alerts_total: expected {total}, got {}",
                report.alert_total
            ));
        }
    }
    if let Some(expected) = &expect.signature_sids {
        if &report.signature_sids != expected {
            for (sid, want) in expected {
                let got = report.signature_sids.get(sid).copied().unwrap_or(0);
                if got != *want {
                    diffs.push(format!("sid {sid}: expected {want}, got {got}"));
                }
            }
            for (sid, got) in &report.signature_sids {
                if !expected.contains_key(sid) {
                    diffs.push(format!("sid {sid}: unexpected ({got} alerts)"));
                }
            }
        }
    }
    if let Some(total) = expect.informative_total {
        if report.informative_total != total {
            diffs.push(format!(
                "informative_total: expected {total}, got {}",
                report.informative_total
            ));
        }
    }
    if let Some(rules) = &expect.rules {
        if &report.rules != rules {
            diffs.push(format!(
                "rules: expected {rules:?}, got {:?}",
                report.rules
            ));
        }
    }
    if let Some(verdict) = expect.verdict {
        if report.verdict != verdict {
            diffs.push(format!("verdict: expected {verdict}, got {}", report.verdict));
        }
    }
    diffs
}
