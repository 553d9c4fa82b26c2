//! Belief-driven response: consume matched alerts, update the attack-graph
//! belief, and pick the cheapest mitigation.
//!
//! The policy is one-step greedy over expected cost: damage (goal-node
//! belief times a loss weight) plus the availability price of the action.
//! Post-action belief is evaluated by zeroing exploits whose reachability
//! the action severs and re-propagating; the graph itself stays immutable.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::alerts::{Alert, MatchLevel, MatchResult};
use crate::bag::{posterior_update, propagate, Bag, Belief};
use crate::mitigation::{is_enforced, FirewallState};
use crate::netmodel::HostMap;

/// Mitigation action space: do nothing, cut one connection, or isolate a
/// host entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Noop,
    BlockSpecific { src: Ipv4Addr, dst: Ipv4Addr },
    BlockGeneral { src: Ipv4Addr },
}

impl Action {
    /// Tie-break key: noop, then specific, then general; addresses compare
    /// lexicographically as dotted text.
    fn key(&self) -> (u8, String, String) {
        match self {
            Action::Noop => (0, String::new(), String::new()),
            Action::BlockSpecific { src, dst } => (1, src.to_string(), dst.to_string()),
            Action::BlockGeneral { src } => (2, src.to_string(), String::new()),
        }
    }
}

impl PartialOrd for Action {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Action {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Loss per unit of attack-goal belief.
    pub goal_loss: f64,
    /// Availability price of blocking one (src, dst) pair.
    pub block_cost_specific: f64,
    /// Availability price of isolating one host.
    pub block_cost_general: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            goal_loss: 100.0,
            block_cost_specific: 1.0,
            block_cost_general: 5.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.goal_loss > 0.0 && self.block_cost_specific > 0.0 && self.block_cost_general > 0.0)
        {
            return Err("all costs must be positive".to_string());
        }
        if self.block_cost_general <= self.block_cost_specific {
            return Err("block_cost_general must exceed block_cost_specific".to_string());
        }
        Ok(())
    }
}

/// Per-level alert likelihood ratios; more specific matches carry more
/// evidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodRatios {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl Default for LikelihoodRatios {
    fn default() -> Self {
        LikelihoodRatios {
            l1: 9.0,
            l2: 4.0,
            l3: 2.0,
        }
    }
}

impl LikelihoodRatios {
    pub fn validate(&self) -> Result<(), String> {
        if self.l1 > 0.0 && self.l2 > 0.0 && self.l3 > 0.0 {
            Ok(())
        } else {
            Err("likelihood ratios must be positive".to_string())
        }
    }

    pub fn for_level(&self, level: MatchLevel) -> Option<f64> {
        match level {
            MatchLevel::L1 => Some(self.l1),
            MatchLevel::L2 => Some(self.l2),
            MatchLevel::L3 => Some(self.l3),
            MatchLevel::None => None,
        }
    }
}

/// The defender actor's state. One batch in, one action out.
#[derive(Debug, Clone)]
pub struct DefenderState {
    pub bag: Bag,
    pub belief: Belief,
    pub firewall: FirewallState,
    pub tick: u64,
    pub costs: CostModel,
    pub likelihoods: LikelihoodRatios,
    pub hostmap: HostMap,
}

/// One decision-log line.
#[derive(Debug, Clone, Serialize)]
pub struct Decision {
    pub tick: u64,
    pub goal_belief: f64,
    pub belief_digest: String,
    pub candidates: Vec<CandidateCost>,
    pub chosen: Action,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateCost {
    pub action: Action,
    pub cost: f64,
}

/// Folds a batch of matched signature alerts into the belief and advances
/// the clock. Informative alerts must already be filtered out.
pub fn observe(mut state: DefenderState, matched: &[(Alert, MatchResult)]) -> DefenderState {
    for (_alert, result) in matched {
        let Some(lr) = state.likelihoods.for_level(result.level) else {
            continue;
        };
        for &and_id in &result.and_node_ids {
            state.belief = posterior_update(&state.bag, &state.belief, and_id, lr)
                .expect("match results reference nodes of this graph");
        }
    }
    state.tick += 1;
    state
}

/// Candidate actions for the batch: always noop; a specific block per
/// alerted pair whose port is actually modeled (L1/L2); a general block
/// per alerted internal source. Already-enforced actions are excluded.
pub fn candidate_actions(state: &DefenderState, matched: &[(Alert, MatchResult)]) -> Vec<Action> {
    let mut set: BTreeSet<Action> = BTreeSet::new();
    set.insert(Action::Noop);
    for (alert, result) in matched {
        match result.level {
            MatchLevel::L1 | MatchLevel::L2 => {
                if state.hostmap.resolve(alert.src_ip).is_some()
                    && state.hostmap.resolve(alert.dst_ip).is_some()
                {
                    set.insert(Action::BlockSpecific {
                        src: alert.src_ip,
                        dst: alert.dst_ip,
                    });
                }
            }
            MatchLevel::L3 => {}
            MatchLevel::None => continue,
        }
        if let Some(host) = state.hostmap.resolve(alert.src_ip) {
            if state.hostmap.is_internal(host) {
                set.insert(Action::BlockGeneral { src: alert.src_ip });
            }
        }
    }
    set.into_iter()
        .filter(|action| *action == Action::Noop || !is_enforced(&state.firewall, action))
        .collect()
}

/// AND nodes whose required reachability is severed by the already
/// enforced rules plus `action`.
fn severed_exploits(state: &DefenderState, action: &Action) -> BTreeSet<usize> {
    let mut isolated: Vec<String> = Vec::new();
    let mut pairs: Vec<(String, String)> = Vec::new();
    let resolve = |ip: Ipv4Addr| state.hostmap.resolve(ip).map(|s| s.to_string());

    for addr in state.firewall.isolated_addrs() {
        if let Some(name) = resolve(addr) {
            isolated.push(name);
        }
    }
    for (src, dst) in state.firewall.blocked_pairs() {
        if let (Some(s), Some(d)) = (resolve(src), resolve(dst)) {
            pairs.push((s, d));
        }
    }
    match action {
        Action::Noop => {}
        Action::BlockGeneral { src } => {
            if let Some(name) = resolve(*src) {
                isolated.push(name);
            }
        }
        Action::BlockSpecific { src, dst } => {
            if let (Some(s), Some(d)) = (resolve(*src), resolve(*dst)) {
                pairs.push((s, d));
            }
        }
    }

    let mut severed = BTreeSet::new();
    for and_id in state.bag.and_ids() {
        for hacl in state.bag.hacl_parents(and_id) {
            let (src, dst) = (&hacl.args[0], &hacl.args[1]);
            let hit = isolated.iter().any(|h| h == src || h == dst)
                || pairs.iter().any(|(s, d)| s == src && d == dst);
            if hit {
                severed.insert(and_id);
                break;
            }
        }
    }
    severed
}

/// Expected cost of an action: residual goal-belief damage after severing
/// what the action cuts, plus the action's availability price.
pub fn expected_cost(state: &DefenderState, action: &Action) -> f64 {
    let severed = severed_exploits(state, action);
    let priors = state.belief.leaf_priors(&state.bag);
    let post = propagate(&state.bag, &priors, state.belief.evidence(), &severed);
    let damage = state.costs.goal_loss * post.goal_belief(&state.bag);
    let availability = match action {
        Action::Noop => 0.0,
        Action::BlockSpecific { .. } => state.costs.block_cost_specific,
        Action::BlockGeneral { .. } => state.costs.block_cost_general,
    };
    damage + availability
}

/// Argmin of [`expected_cost`] over [`candidate_actions`]; ties break on
/// the action ordering (noop, then specific, then general, then address).
pub fn select_action(state: &DefenderState, matched: &[(Alert, MatchResult)]) -> Action {
    let mut best: Option<(f64, Action)> = None;
    for action in candidate_actions(state, matched) {
        let cost = expected_cost(state, &action);
        best = match best {
            None => Some((cost, action)),
            Some((best_cost, best_action)) => {
                if cost < best_cost || (cost == best_cost && action < best_action) {
                    Some((cost, action))
                } else {
                    Some((best_cost, best_action))
                }
            }
        };
    }
    best.map(|(_, a)| a).unwrap_or(Action::Noop)
}

/// Decision record for the log, including per-candidate costs.
pub fn decide(state: &DefenderState, matched: &[(Alert, MatchResult)]) -> (Decision, Action) {
    let candidates: Vec<CandidateCost> = candidate_actions(state, matched)
        .into_iter()
        .map(|action| CandidateCost {
            cost: expected_cost(state, &action),
            action,
        })
        .collect();
    let chosen = select_action(state, matched);
    let decision = Decision {
        tick: state.tick,
        goal_belief: state.belief.goal_belief(&state.bag),
        belief_digest: digest(&state.belief.table(&state.bag)),
        candidates,
        chosen,
    };
    (decision, chosen)
}

/// FNV-1a64 hex digest; stable across runs and platforms.
pub fn digest(text: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}
