//! The deterministic event loop wiring the whole pipeline together:
//! topology -> tuples -> reasoner -> attack graph -> belief, then per tick
//! emulator events -> firewall -> IDS -> alert mapping -> defender ->
//! mitigation.

use std::collections::BTreeMap;

use crate::alerts::{self, Alert, MatchResult, SigKind, SignatureSet, TrafficEvent};
use crate::bag::{lag_to_bag, prior_propagate, Bag};
use crate::datalog::{build_lag, builtin_rules, parse_program, solve, Program};
use crate::defender::{decide, observe, Action, CostModel, DefenderState, LikelihoodRatios};
use crate::emulators::{
    zeus_bot_run, zeus_bot_run_resumed, ZeusBotConfig, EPHEMERAL_PORT_BASE,
};
use crate::mitigation::{apply, permits, rules_for_action, FirewallState};
use crate::netmodel::{host_map, load_topology, to_datalog, HostMap, NetworkModel};

use super::report::{sid_multiset, BeliefSnapshot, EventRecord, Report};
use super::scenario::{Scenario, Variation};
use super::HarnessError;

/// Agent string for the victim's browser in the download variation;
/// distinct from the bot's wininet-style string on purpose.
pub const BROWSER_USER_AGENT: &str =
    "Mozilla/5.0 (Windows NT 6.1; WOW64; Trident/7.0; rv:11.0) like Gecko";

fn read(path: &std::path::Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::File {
        path: path.display().to_string(),
        source: e,
    })
}

/// Everything the pipeline derives from a topology before any traffic.
pub struct CompiledModel {
    pub model: NetworkModel,
    pub hostmap: HostMap,
    pub bag: Bag,
    pub unreachable_goals: Vec<String>,
    pub tuples_text: String,
}

/// Loads a topology and runs the reasoning half of the pipeline.
pub fn compile_model(
    topology_text: &str,
    rules_text: Option<&str>,
) -> Result<CompiledModel, HarnessError> {
    let model = load_topology(topology_text)?;
    let hostmap = host_map(&model);
    let tuples = to_datalog(&model);
    let tuples_text = tuples.text();

    let mut program = match rules_text {
        Some(text) => parse_program(text)?,
        None => builtin_rules(),
    };
    program.extend(Program::new(tuples.atoms, Vec::new()));
    let graph = solve(&program);
    let build = build_lag(&graph, &model.goal_atoms());
    let unreachable_goals = build
        .unreachable
        .iter()
        .map(|a| a.canonical())
        .collect();
    let bag = lag_to_bag(build.lag, &model.vuln_probs())?;
    Ok(CompiledModel {
        model,
        hostmap,
        bag,
        unreachable_goals,
        tuples_text,
    })
}

fn zeus_config(scenario: &Scenario, hostmap: &HostMap) -> Result<ZeusBotConfig, HarnessError> {
    let bot_ip = hostmap
        .primary_addr(&scenario.zeus.bot)
        .ok_or_else(|| HarnessError::BadScenario(format!("unknown bot host `{}`", scenario.zeus.bot)))?;
    let cnc_ip = hostmap
        .primary_addr(&scenario.zeus.cnc)
        .ok_or_else(|| HarnessError::BadScenario(format!("unknown cnc host `{}`", scenario.zeus.cnc)))?;
    Ok(ZeusBotConfig {
        bot_ip,
        cnc_ip,
        rc4_key: scenario.zeus.rc4_key.clone(),
        cfg_uri: scenario.zeus.cfg_uri.clone(),
        gate_uri: scenario.zeus.gate_uri.clone(),
        ping_interval_ticks: scenario.zeus.ping_interval_ticks,
        cnc_port: scenario.zeus.cnc_port,
    })
}

fn download_event(scenario: &Scenario, cfg: &ZeusBotConfig) -> TrafficEvent {
    TrafficEvent {
        ts: 1,
        seq: 0,
        src_ip: cfg.bot_ip,
        dst_ip: cfg.cnc_ip,
        src_port: EPHEMERAL_PORT_BASE,
        dst_port: cfg.cnc_port,
        proto: alerts::L4Proto::Tcp,
        app: alerts::AppProto::Http,
        uri: Some(scenario.zeus.download_uri.clone()),
        http_method: Some("GET".to_string()),
        headers: vec![
            ("host".to_string(), cfg.cnc_ip.to_string()),
            ("user-agent".to_string(), BROWSER_USER_AGENT.to_string()),
        ],
        payload: Vec::new(),
    }
}

/// Scripted traffic for a scenario, sorted by tick with global sequence
/// numbers assigned.
pub fn scenario_events(
    scenario: &Scenario,
    hostmap: &HostMap,
) -> Result<Vec<TrafficEvent>, HarnessError> {
    let cfg = zeus_config(scenario, hostmap)?;
    let mut events = match scenario.variation {
        Variation::InfectionDownload => {
            let mut events = vec![download_event(scenario, &cfg)];
            // the bot starts its life one tick after the download
            if scenario.ticks > 1 {
                let mut bot = zeus_bot_run(&cfg, scenario.ticks - 1)?;
                for event in &mut bot {
                    event.ts += 1;
                }
                events.extend(bot);
            }
            events
        }
        Variation::PreInfected => zeus_bot_run_resumed(&cfg, scenario.ticks)?,
    };
    for event in &mut events {
        event.ts += scenario.start_tick - 1;
    }
    events.sort_by_key(|e| e.ts);
    for (seq, event) in events.iter_mut().enumerate() {
        event.seq = seq as u64;
    }
    Ok(events)
}

/// Runs the scenario loop and assembles the report.
pub fn run_scenario(scenario: &Scenario) -> Result<Report, HarnessError> {
    scenario.validate()?;
    let topology_text = read(&scenario.topology)?;
    let signatures_text = read(&scenario.signatures)?;
    let rules_text = match &scenario.rules {
        Some(path) => Some(read(path)?),
        None => None,
    };

    let compiled = compile_model(&topology_text, rules_text.as_deref())?;
    let signatures: SignatureSet = alerts::load_signatures(&signatures_text)?;
    let events = scenario_events(scenario, &compiled.hostmap)?;

    let leaf_priors: BTreeMap<usize, f64> = compiled
        .bag
        .leaf_ids()
        .map(|id| (id, scenario.leaf_prior))
        .collect();
    let belief = prior_propagate(&compiled.bag, &leaf_priors);
    let mut state = DefenderState {
        bag: compiled.bag,
        belief,
        firewall: FirewallState::default(),
        tick: 0,
        costs: scenario.costs.unwrap_or_default(),
        likelihoods: scenario.likelihoods.unwrap_or_default(),
        hostmap: compiled.hostmap,
    };

    let mut alert_log: Vec<Alert> = Vec::new();
    let mut event_log: Vec<EventRecord> = Vec::new();
    let mut beliefs: Vec<BeliefSnapshot> = Vec::new();
    let mut decisions = Vec::new();
    let mut rules: Vec<String> = Vec::new();
    let mut first_rule_tick: Option<u64> = None;

    let mut cursor = 0usize;
    for tick in 1..=scenario.ticks {
        let mut batch: Vec<(Alert, MatchResult)> = Vec::new();
        while cursor < events.len() && events[cursor].ts == tick {
            let event = &events[cursor];
            cursor += 1;
            let permitted = permits(&state.firewall, event);
            event_log.push(EventRecord {
                tick,
                seq: event.seq,
                src_ip: event.src_ip,
                dst_ip: event.dst_ip,
                src_port: event.src_port,
                dst_port: event.dst_port,
                uri: event.uri.clone(),
                permitted,
            });
            if !permitted {
                continue;
            }
            for mut alert in alerts::match_traffic(&signatures, event) {
                alert.hostname = state
                    .hostmap
                    .resolve(alert.dst_ip)
                    .map(|s| s.to_string());
                if alert.kind == SigKind::Alert {
                    let result = alerts::map_alert(&state.bag, &state.hostmap, &alert);
                    if result.level != alerts::MatchLevel::None {
                        batch.push((alert.clone(), result));
                    }
                }
                alert_log.push(alert);
            }
        }

        state = observe(state, &batch);
        let (decision, action) = decide(&state, &batch);
        if action != Action::Noop {
            for rule in rules_for_action(&action) {
                if !state.firewall.rules.contains(&rule) {
                    rules.push(rule.render());
                }
            }
            first_rule_tick.get_or_insert(tick);
            state.firewall = apply(&state.firewall, &action);
        }
        decisions.push(decision);
        beliefs.push(BeliefSnapshot {
            tick,
            goal_belief: state.belief.goal_belief(&state.bag),
            digest: crate::defender::digest(&state.belief.table(&state.bag)),
            conditions: belief_conditions(&state),
        });
    }

    let verdict = compute_verdict(&event_log, &state.firewall, first_rule_tick);
    let permitted_events = event_log.iter().filter(|e| e.permitted).count();
    let blocked_events = event_log.len() - permitted_events;
    Ok(Report {
        scenario: scenario.name.clone(),
        ticks: scenario.ticks,
        seed: scenario.seed,
        alert_total: alert_log.len(),
        signature_sids: sid_multiset(&alert_log),
        informative_total: alert_log
            .iter()
            .filter(|a| a.kind == SigKind::Informative)
            .count(),
        alerts: alert_log,
        events: event_log,
        permitted_events,
        blocked_events,
        beliefs,
        decisions,
        rules,
        unreachable_goals: compiled.unreachable_goals,
        verdict,
    })
}

fn belief_conditions(state: &DefenderState) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for node in &state.bag.lag.nodes {
        if node.kind != crate::datalog::LagNodeKind::And {
            if let Some(p) = state.belief.prob(node.id) {
                out.insert(node.fact.clone(), p);
            }
        }
    }
    out
}

/// Sound from the report alone: mitigation happened, and afterwards no
/// event touching a blocked address (or blocked pair) was permitted.
fn compute_verdict(
    events: &[EventRecord],
    firewall: &FirewallState,
    first_rule_tick: Option<u64>,
) -> bool {
    let Some(mitigation_tick) = first_rule_tick else {
        return false;
    };
    let isolated = firewall.isolated_addrs();
    let pairs = firewall.blocked_pairs();
    events.iter().all(|e| {
        if e.tick <= mitigation_tick {
            return true;
        }
        let covered = isolated.contains(&e.src_ip)
            || isolated.contains(&e.dst_ip)
            || pairs.contains(&(e.src_ip, e.dst_ip));
        !covered || !e.permitted
    })
}

/// Re-drives the defender from a recorded alert log (tick-batched by the
/// alerts' timestamps). Returns the decision log and the rendered rules.
pub fn replay_alerts(
    compiled: &CompiledModel,
    alerts_in: Vec<Alert>,
    costs: CostModel,
    likelihoods: LikelihoodRatios,
) -> (Vec<crate::defender::Decision>, Vec<String>) {
    let leaf_priors: BTreeMap<usize, f64> = compiled.bag.leaf_ids().map(|id| (id, 1.0)).collect();
    let belief = prior_propagate(&compiled.bag, &leaf_priors);
    let mut state = DefenderState {
        bag: compiled.bag.clone(),
        belief,
        firewall: FirewallState::default(),
        tick: 0,
        costs,
        likelihoods,
        hostmap: compiled.hostmap.clone(),
    };

    let mut by_tick: BTreeMap<u64, Vec<Alert>> = BTreeMap::new();
    for alert in alerts_in {
        by_tick.entry(alert.ts).or_default().push(alert);
    }

    let mut decisions = Vec::new();
    let mut rules = Vec::new();
    for (_tick, batch_alerts) in by_tick {
        let mut batch: Vec<(Alert, MatchResult)> = Vec::new();
        for alert in batch_alerts {
            if alert.kind != SigKind::Alert {
                continue;
            }
            let result = alerts::map_alert(&state.bag, &state.hostmap, &alert);
            if result.level != alerts::MatchLevel::None {
                batch.push((alert, result));
            }
        }
        state = observe(state, &batch);
        let (decision, action) = decide(&state, &batch);
        if action != Action::Noop {
            for rule in rules_for_action(&action) {
                if !state.firewall.rules.contains(&rule) {
                    rules.push(rule.render());
                }
            }
            state.firewall = apply(&state.firewall, &action);
        }
        decisions.push(decision);
    }
    (decisions, rules)
}

/// Re-drives the full IDS-plus-defender loop from a recorded traffic
/// event log.
pub fn replay_events(
    compiled: &CompiledModel,
    signatures: &SignatureSet,
    mut events: Vec<TrafficEvent>,
    costs: CostModel,
    likelihoods: LikelihoodRatios,
) -> (Vec<crate::defender::Decision>, Vec<String>) {
    events.sort_by_key(|e| (e.ts, e.seq));
    let leaf_priors: BTreeMap<usize, f64> = compiled.bag.leaf_ids().map(|id| (id, 1.0)).collect();
    let belief = prior_propagate(&compiled.bag, &leaf_priors);
    let mut state = DefenderState {
        bag: compiled.bag.clone(),
        belief,
        firewall: FirewallState::default(),
        tick: 0,
        costs,
        likelihoods,
        hostmap: compiled.hostmap.clone(),
    };

    let mut decisions = Vec::new();
    let mut rules = Vec::new();
    let mut cursor = 0usize;
    let last_tick = events.last().map(|e| e.ts).unwrap_or(0);
    for tick in 1..=last_tick {
        let mut batch: Vec<(Alert, MatchResult)> = Vec::new();
        while cursor < events.len() && events[cursor].ts == tick {
            let event = &events[cursor];
            cursor += 1;
            if !permits(&state.firewall, event) {
                continue;
            }
            for alert in alerts::match_traffic(signatures, event) {
                if alert.kind != SigKind::Alert {
                    continue;
                }
                let result = alerts::map_alert(&state.bag, &state.hostmap, &alert);
                if result.level != alerts::MatchLevel::None {
                    batch.push((alert, result));
                }
            }
        }
        state = observe(state, &batch);
        let (decision, action) = decide(&state, &batch);
        if action != Action::Noop {
            for rule in rules_for_action(&action) {
                if !state.firewall.rules.contains(&rule) {
                    rules.push(rule.render());
                }
            }
            state.firewall = apply(&state.firewall, &action);
        }
        decisions.push(decision);
    }
    (decisions, rules)
}
