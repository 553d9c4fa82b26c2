//! Defender actions rendered as iptables text and enforced against the
//! virtual network.
//!
//! Rendered text is byte-exact (`iptables -A <chain> -s <ip> [-d <ip>] -j
//! DROP`). Virtual enforcement follows the rules' intent: an INPUT/OUTPUT
//! pair with a source match drops every event touching that address in
//! either direction, a FORWARD pair rule drops one direction of one pair.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::alerts::TrafficEvent;
use crate::defender::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Chain {
    Input,
    Output,
    Forward,
}

impl Chain {
    fn as_str(self) -> &'static str {
        match self {
            Chain::Input => "INPUT",
            Chain::Output => "OUTPUT",
            Chain::Forward => "FORWARD",
        }
    }
}

/// One DROP rule. DROP is the only target the defender ever deploys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FirewallRule {
    pub chain: Chain,
    pub src: Ipv4Addr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dst: Option<Ipv4Addr>,
}

impl FirewallRule {
    /// Exact iptables text, flag order `-A <chain> -s <ip> [-d <ip>] -j DROP`.
    pub fn render(&self) -> String {
        match self.dst {
            Some(dst) => format!(
                "iptables -A {} -s {} -d {} -j DROP",
                self.chain.as_str(),
                self.src,
                dst
            ),
            None => format!("iptables -A {} -s {} -j DROP", self.chain.as_str(), self.src),
        }
    }

    fn matches(&self, ev: &TrafficEvent) -> bool {
        match self.chain {
            // The INPUT/OUTPUT pair blocks both directions touching the
            // source address; that is the stated intent of a general rule.
            Chain::Input | Chain::Output => {
                let touches = ev.src_ip == self.src || ev.dst_ip == self.src;
                match self.dst {
                    Some(dst) => touches && (ev.src_ip == dst || ev.dst_ip == dst),
                    None => touches,
                }
            }
            Chain::Forward => {
                ev.src_ip == self.src && self.dst.map(|d| ev.dst_ip == d).unwrap_or(true)
            }
        }
    }
}

/// Ordered, duplicate-free rule list (first-match semantics).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FirewallState {
    pub rules: Vec<FirewallRule>,
}

impl FirewallState {
    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Rendered text for every rule, in application order.
    pub fn render(&self) -> Vec<String> {
        self.rules.iter().map(FirewallRule::render).collect()
    }

    /// Addresses fully isolated by general (INPUT chain) rules.
    pub fn isolated_addrs(&self) -> Vec<Ipv4Addr> {
        self.rules
            .iter()
            .filter(|r| r.chain == Chain::Input && r.dst.is_none())
            .map(|r| r.src)
            .collect()
    }

    /// (src, dst) pairs blocked by specific FORWARD rules.
    pub fn blocked_pairs(&self) -> Vec<(Ipv4Addr, Ipv4Addr)> {
        self.rules
            .iter()
            .filter_map(|r| match (r.chain, r.dst) {
                (Chain::Forward, Some(dst)) => Some((r.src, dst)),
                _ => None,
            })
            .collect()
    }
}

/// Rules an action expands to, in deployment order.
pub fn rules_for_action(action: &Action) -> Vec<FirewallRule> {
    match action {
        Action::Noop => Vec::new(),
        Action::BlockGeneral { src } => vec![
            FirewallRule {
                chain: Chain::Input,
                src: *src,
                dst: None,
            },
            FirewallRule {
                chain: Chain::Output,
                src: *src,
                dst: None,
            },
        ],
        Action::BlockSpecific { src, dst } => vec![FirewallRule {
            chain: Chain::Forward,
            src: *src,
            dst: Some(*dst),
        }],
    }
}

/// Byte-exact shell lines for an action.
pub fn render_iptables(action: &Action) -> Vec<String> {
    rules_for_action(action)
        .iter()
        .map(FirewallRule::render)
        .collect()
}

/// Appends the action's rules, skipping ones already present. Idempotent.
pub fn apply(state: &FirewallState, action: &Action) -> FirewallState {
    let mut next = state.clone();
    for rule in rules_for_action(action) {
        if !next.rules.contains(&rule) {
            next.rules.push(rule);
        }
    }
    next
}

/// True when the action's full rule expansion is already deployed.
pub fn is_enforced(state: &FirewallState, action: &Action) -> bool {
    let rules = rules_for_action(action);
    !rules.is_empty() && rules.iter().all(|r| state.rules.contains(r))
}

/// False iff any rule drops the event.
pub fn permits(state: &FirewallState, ev: &TrafficEvent) -> bool {
    !state.rules.iter().any(|rule| rule.matches(ev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alerts::{AppProto, L4Proto};

    fn ev(src: &str, dst: &str) -> TrafficEvent {
        TrafficEvent {
            ts: 1,
            seq: 0,
            src_ip: src.parse().unwrap(),
            dst_ip: dst.parse().unwrap(),
            src_port: 49152,
            dst_port: 80,
            proto: L4Proto::Tcp,
            app: AppProto::Http,
            uri: Some("/".to_string()),
            http_method: Some("GET".to_string()),
            headers: Vec::new(),
            payload: Vec::new(),
        }
    }

    fn block_general(ip: &str) -> Action {
        Action::BlockGeneral {
            src: ip.parse().unwrap(),
        }
    }

    #[test]
    fn general_rule_renders_byte_exact() {
        assert_eq!(
            render_iptables(&block_general("192.168.0.17")),
            vec![
                "iptables -A INPUT -s 192.168.0.17 -j DROP".to_string(),
                "iptables -A OUTPUT -s 192.168.0.17 -j DROP".to_string(),
            ]
        );
    }

    #[test]
    fn noop_renders_nothing() {
        assert!(render_iptables(&Action::Noop).is_empty());
    }

    #[test]
    fn specific_rule_renders_one_forward_line() {
        let action = Action::BlockSpecific {
            src: "192.168.0.17".parse().unwrap(),
            dst: "172.16.4.67".parse().unwrap(),
        };
        assert_eq!(
            render_iptables(&action),
            vec!["iptables -A FORWARD -s 192.168.0.17 -d 172.16.4.67 -j DROP".to_string()]
        );
    }

    #[test]
    fn apply_is_idempotent_for_every_action() {
        let actions = [
            Action::Noop,
            Action::BlockSpecific {
                src: "192.168.0.17".parse().unwrap(),
                dst: "172.16.4.67".parse().unwrap(),
            },
            block_general("192.168.0.17"),
        ];
        let mut state = FirewallState::default();
        for action in &actions {
            let once = apply(&state, action);
            let twice = apply(&once, action);
            assert_eq!(once, twice);
            state = once;
        }
        assert_eq!(state.rules.len(), 3);
    }

    #[test]
    fn apply_noop_is_identity() {
        let state = apply(&FirewallState::default(), &block_general("192.168.0.17"));
        assert_eq!(apply(&state, &Action::Noop), state);
    }

    #[test]
    fn empty_state_permits_everything() {
        let state = FirewallState::default();
        assert!(permits(&state, &ev("192.168.0.17", "172.16.4.67")));
    }

    #[test]
    fn general_block_drops_both_directions() {
        let state = apply(&FirewallState::default(), &block_general("192.168.0.17"));
        assert!(!permits(&state, &ev("192.168.0.17", "172.16.4.67")));
        assert!(!permits(&state, &ev("172.16.4.67", "192.168.0.17")));
    }

    #[test]
    fn general_block_leaves_other_hosts_alone() {
        let state = apply(&FirewallState::default(), &block_general("192.168.0.17"));
        assert!(permits(&state, &ev("172.16.4.67", "192.168.0.11")));
    }

    #[test]
    fn specific_block_is_directional() {
        let action = Action::BlockSpecific {
            src: "192.168.0.17".parse().unwrap(),
            dst: "172.16.4.67".parse().unwrap(),
        };
        let state = apply(&FirewallState::default(), &action);
        assert!(!permits(&state, &ev("192.168.0.17", "172.16.4.67")));
        assert!(permits(&state, &ev("172.16.4.67", "192.168.0.17")));
    }

    #[test]
    fn permits_is_monotone_under_rule_addition() {
        let mut state = FirewallState::default();
        let events = [
            ev("192.168.0.17", "172.16.4.67"),
            ev("172.16.4.67", "192.168.0.17"),
            ev("192.168.0.1", "172.16.4.67"),
        ];
        let mut blocked: Vec<bool> = events.iter().map(|e| !permits(&state, e)).collect();
        for action in [
            Action::BlockSpecific {
                src: "192.168.0.17".parse().unwrap(),
                dst: "172.16.4.67".parse().unwrap(),
            },
            block_general("192.168.0.17"),
            block_general("192.168.0.1"),
        ] {
            state = apply(&state, &action);
            let now: Vec<bool> = events.iter().map(|e| !permits(&state, e)).collect();
            for (before, after) in blocked.iter().zip(&now) {
                assert!(!before || *after, "blocked event became permitted");
            }
            blocked = now;
        }
    }

    #[test]
    fn is_enforced_tracks_deployment() {
        let action = block_general("192.168.0.17");
        let state = FirewallState::default();
        assert!(!is_enforced(&state, &action));
        let state = apply(&state, &action);
        assert!(is_enforced(&state, &action));
        assert!(!is_enforced(&state, &Action::Noop));
    }
}
