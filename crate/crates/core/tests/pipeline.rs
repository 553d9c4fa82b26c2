//! Cross-module integration checks on the full pipeline and the report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use irsim::alerts::{
    load_signatures, map_alert, parse_alert_log, render_alert_log, Alert, L4Proto, MatchLevel,
    SigKind,
};
use irsim::bag::prior_propagate;
use irsim::defender::{candidate_actions, observe, Action, CostModel, DefenderState, LikelihoodRatios};
use irsim::harness::{
    compile_model, load_scenario, replay_events, run_scenario, scenario_events, Report,
};
use irsim::mitigation::FirewallState;

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn run(rel: &str) -> Report {
    let scenario = load_scenario(&repo_path(rel)).unwrap();
    run_scenario(&scenario).unwrap()
}

/// verdict=true must be checkable from the report alone: after the first
/// non-noop decision, no permitted event touches a blocked address.
#[test]
fn verdict_is_sound_from_the_report_alone() {
    for rel in ["scenarios/zeus-variation1.json", "scenarios/zeus-variation2.json"] {
        let report = run(rel);
        assert!(report.verdict);
        let mitigation_tick = report
            .decisions
            .iter()
            .find(|d| d.chosen != Action::Noop)
            .map(|d| d.tick)
            .expect("mitigation happened");
        let blocked: Vec<&str> = report
            .rules
            .iter()
            .filter_map(|r| r.split("-s ").nth(1))
            .filter_map(|r| r.split_whitespace().next())
            .collect();
        assert!(!blocked.is_empty());
        for event in &report.events {
            if event.tick <= mitigation_tick {
                continue;
            }
            let touches_blocked = blocked
                .iter()
                .any(|b| *b == event.src_ip.to_string() || *b == event.dst_ip.to_string());
            assert!(
                !touches_blocked || !event.permitted,
                "permitted post-mitigation event touching a blocked address"
            );
        }
    }
}

#[test]
fn alert_log_is_eve_subset_round_trippable() {
    let report = run("scenarios/zeus-variation2.json");
    let log = render_alert_log(&report.alerts);
    let parsed = parse_alert_log(&log).unwrap();
    assert_eq!(parsed, report.alerts);
    // every line carries the EVE-subset fields
    for line in log.lines() {
        let value: serde_json::Value = serde_json::from_str(line).unwrap();
        for field in ["ts", "sid", "msg", "kind", "src_ip", "dst_ip", "dst_port", "proto"] {
            assert!(value.get(field).is_some(), "missing {field} in {line}");
        }
    }
}

#[test]
fn warmup_prefix_has_no_alerts_and_noop_decisions() {
    let mut scenario = load_scenario(&repo_path("scenarios/zeus-variation2.json")).unwrap();
    scenario.start_tick = 5;
    scenario.ticks = 10;
    scenario.expect = None;
    let report = run_scenario(&scenario).unwrap();
    assert!(report.alerts.iter().all(|a| a.ts >= 5));
    for decision in report.decisions.iter().filter(|d| d.tick < 5) {
        assert_eq!(decision.chosen, Action::Noop);
        assert!(decision.candidates.len() == 1);
    }
    assert_eq!(report.alert_total, 17, "batch arrives intact after the warm-up");
}

#[test]
fn extended_topology_with_inert_hosts_keeps_the_goal_derivable() {
    let topology = std::fs::read_to_string(repo_path("scenarios/paper-testbed-extended.json")).unwrap();
    let compiled = compile_model(&topology, None).unwrap();
    assert!(compiled.unreachable_goals.is_empty());
    // the extra workstations are modeled but do not join the attack slice
    let facts: Vec<&str> = compiled
        .bag
        .lag
        .nodes
        .iter()
        .map(|n| n.fact.as_str())
        .collect();
    assert!(facts.iter().any(|f| f.contains("execCode(win7,user)")));
    assert!(!facts.iter().any(|f| f.contains("ws1")));
}

#[test]
fn modeled_ports_enable_specific_blocks() {
    let topology = r#"{
      "hosts": [
        {"name": "win7", "interfaces": ["192.168.0.17"], "zone": "internal"},
        {"name": "cnc", "interfaces": ["172.16.4.67"], "zone": "external"}
      ],
      "hacl": [
        {"src": "external", "dst": "win7", "proto": "tcp", "port": 80},
        {"src": "win7", "dst": "cnc", "proto": "tcp", "port": 80}
      ],
      "services": [
        {"host": "win7", "program": "browser", "proto": "tcp", "port": 80, "user": "user"}
      ],
      "vulns": [
        {"host": "win7", "vuln_id": "ZBOT-DROP", "program": "browser", "range": "remote",
         "consequence": "privEscalation", "success_prob": 0.75}
      ],
      "attacker": "external",
      "goals": ["execCode(win7, user)"]
    }"#;
    let compiled = compile_model(topology, None).unwrap();
    let priors: BTreeMap<usize, f64> = compiled.bag.leaf_ids().map(|id| (id, 1.0)).collect();
    let belief = prior_propagate(&compiled.bag, &priors);
    let state = DefenderState {
        bag: compiled.bag,
        belief,
        firewall: FirewallState::default(),
        tick: 0,
        costs: CostModel::default(),
        likelihoods: LikelihoodRatios::default(),
        hostmap: compiled.hostmap,
    };
    let alert = Alert {
        ts: 1,
        sid: 2016858,
        msg: "m".to_string(),
        kind: SigKind::Alert,
        src_ip: "192.168.0.17".parse().unwrap(),
        dst_ip: "172.16.4.67".parse().unwrap(),
        dst_port: 80,
        proto: L4Proto::Tcp,
        hostname: None,
    };
    let result = map_alert(&state.bag, &state.hostmap, &alert);
    assert_eq!(result.level, MatchLevel::L1, "port and protocol are modeled");
    let batch = vec![(alert, result)];
    let state = observe(state, &batch);
    let candidates = candidate_actions(&state, &batch);
    assert!(candidates.contains(&Action::BlockSpecific {
        src: "192.168.0.17".parse().unwrap(),
        dst: "172.16.4.67".parse().unwrap(),
    }));
}

#[test]
fn no_matching_signatures_means_noop_forever() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.json"), r#"{"signatures": []}"#).unwrap();
    let mut scenario = load_scenario(&repo_path("scenarios/zeus-variation2.json")).unwrap();
    scenario.signatures = dir.path().join("empty.json");
    scenario.ticks = 30;
    scenario.expect = None;
    let report = run_scenario(&scenario).unwrap();
    assert_eq!(report.alert_total, 0);
    assert!(report.decisions.iter().all(|d| d.chosen == Action::Noop));
    assert!(report.rules.is_empty());
    assert!(!report.verdict, "no mitigation, no success claim");
    assert_eq!(report.blocked_events, 0);
}

#[test]
fn scripted_events_replayed_match_the_scenario_rules() {
    let scenario = load_scenario(&repo_path("scenarios/zeus-variation2.json")).unwrap();
    let topology = std::fs::read_to_string(&scenario.topology).unwrap();
    let compiled = compile_model(&topology, None).unwrap();
    let events = scenario_events(&scenario, &compiled.hostmap).unwrap();
    let signatures =
        load_signatures(&std::fs::read_to_string(&scenario.signatures).unwrap()).unwrap();
    let (decisions, rules) = replay_events(
        &compiled,
        &signatures,
        events,
        CostModel::default(),
        LikelihoodRatios::default(),
    );
    assert_eq!(
        rules,
        vec![
            "iptables -A INPUT -s 192.168.0.17 -j DROP".to_string(),
            "iptables -A OUTPUT -s 192.168.0.17 -j DROP".to_string(),
        ]
    );
    assert!(decisions.iter().any(|d| d.chosen != Action::Noop));
}

#[test]
fn beliefs_and_decisions_are_logged_per_tick() {
    let report = run("scenarios/zeus-variation1.json");
    assert_eq!(report.beliefs.len() as u64, report.ticks);
    assert_eq!(report.decisions.len() as u64, report.ticks);
    // belief rises at the alert tick and the digest tracks the change
    let first = &report.beliefs[0];
    assert!(first.goal_belief > 0.9);
    assert_eq!(first.digest.len(), 16);
    assert!(first.conditions.contains_key("execCode(win7,user)"));
}

#[test]
fn shipped_signature_set_has_eleven_signatures_plus_informative_templates() {
    let set =
        load_signatures(&std::fs::read_to_string(repo_path("signatures/zeus.json")).unwrap())
            .unwrap();
    let alerts = set
        .signatures
        .iter()
        .filter(|s| s.kind == SigKind::Alert)
        .count();
    let informative = set
        .signatures
        .iter()
        .filter(|s| s.kind == SigKind::Informative)
        .count();
    assert_eq!(alerts, 11);
    assert_eq!(informative, 8);
}

#[test]
fn proto_modeled_but_port_wildcard_matches_at_l2_and_allows_specific_blocks() {
    let topology = r#"{
      "hosts": [
        {"name": "win7", "interfaces": ["192.168.0.17"], "zone": "internal"},
        {"name": "cnc", "interfaces": ["172.16.4.67"], "zone": "external"}
      ],
      "hacl": [
        {"src": "external", "dst": "win7", "proto": "tcp", "port": "any"},
        {"src": "win7", "dst": "cnc", "proto": "tcp", "port": "any"}
      ],
      "services": [
        {"host": "win7", "program": "browser", "proto": "tcp", "port": "any", "user": "user"}
      ],
      "vulns": [
        {"host": "win7", "vuln_id": "ZBOT-DROP", "program": "browser", "range": "remote",
         "consequence": "privEscalation", "success_prob": 0.75}
      ],
      "attacker": "external",
      "goals": ["execCode(win7, user)"]
    }"#;
    let compiled = compile_model(topology, None).unwrap();
    let priors: BTreeMap<usize, f64> = compiled.bag.leaf_ids().map(|id| (id, 1.0)).collect();
    let belief = prior_propagate(&compiled.bag, &priors);
    let state = DefenderState {
        bag: compiled.bag,
        belief,
        firewall: FirewallState::default(),
        tick: 0,
        costs: CostModel::default(),
        likelihoods: LikelihoodRatios::default(),
        hostmap: compiled.hostmap,
    };
    let alert = Alert {
        ts: 1,
        sid: 2016858,
        msg: "m".to_string(),
        kind: SigKind::Alert,
        src_ip: "192.168.0.17".parse().unwrap(),
        dst_ip: "172.16.4.67".parse().unwrap(),
        dst_port: 49152, // ephemeral: the model only pins the protocol
        proto: L4Proto::Tcp,
        hostname: None,
    };
    let result = map_alert(&state.bag, &state.hostmap, &alert);
    assert_eq!(result.level, MatchLevel::L2);
    let batch = vec![(alert, result)];
    let state = observe(state, &batch);
    let candidates = candidate_actions(&state, &batch);
    assert!(candidates.contains(&Action::BlockSpecific {
        src: "192.168.0.17".parse().unwrap(),
        dst: "172.16.4.67".parse().unwrap(),
    }));
    // a UDP alert contradicts the modeled protocol outright
    let udp_alert = Alert {
        proto: L4Proto::Udp,
        ..batch[0].0.clone()
    };
    assert_eq!(
        map_alert(&state.bag, &state.hostmap, &udp_alert).level,
        MatchLevel::None
    );
}
