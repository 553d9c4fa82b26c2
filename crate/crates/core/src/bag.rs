//! Bayesian attack graph: the logical attack graph annotated with exploit
//! success probabilities and a per-condition marginal belief.
//!
//! The belief is factorized (one marginal per node). AND nodes combine as
//! `e * prod(parents)`, OR nodes as noisy-OR. IDS evidence accumulates per
//! AND node as a likelihood ratio and re-weights that exploit's
//! contribution by Bayes' rule on every recompute.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::datalog::{GroundAtom, Lag, LagNodeKind, NodePayload, ANY_PORT};

#[derive(Debug, Error)]
pub enum BagError {
    #[error("no success probability for vulnerability atom {0}")]
    MissingVulnProb(String),
    #[error("unknown node id {0}")]
    UnknownNode(usize),
    #[error("likelihood ratio must be positive, got {0}")]
    BadLikelihood(f64),
}

/// How specifically an exploit node pins the traffic that would exercise
/// it. `Unmodeled` mirrors wildcard reachability in the network model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PortAnnotation {
    Unmodeled,
    Concrete(u16),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtoAnnotation {
    Unmodeled,
    Concrete(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploitAnnotation {
    pub host: Option<String>,
    pub proto: ProtoAnnotation,
    pub port: PortAnnotation,
}

/// Immutable annotated graph. Cycles in the input are broken at
/// construction; the removed edges are kept for inspection.
#[derive(Debug, Clone)]
pub struct Bag {
    pub lag: Lag,
    pub exploit_prob: BTreeMap<usize, f64>,
    pub topo_order: Vec<usize>,
    pub removed_edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    annotations: BTreeMap<usize, ExploitAnnotation>,
}

impl Bag {
    pub fn parents(&self, id: usize) -> &[usize] {
        &self.parents[id]
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    pub fn node_count(&self) -> usize {
        self.lag.nodes.len()
    }

    pub fn goal_ids(&self) -> &[usize] {
        &self.lag.goal_ids
    }

    pub fn kind(&self, id: usize) -> LagNodeKind {
        self.lag.nodes[id].kind
    }

    pub fn annotation(&self, id: usize) -> Option<&ExploitAnnotation> {
        self.annotations.get(&id)
    }

    pub fn and_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.lag
            .nodes
            .iter()
            .filter(|n| n.kind == LagNodeKind::And)
            .map(|n| n.id)
    }

    pub fn leaf_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.lag
            .nodes
            .iter()
            .filter(|n| n.kind == LagNodeKind::Leaf)
            .map(|n| n.id)
    }

    /// LEAF parents of an AND node whose condition is a `hacl` tuple,
    /// i.e. the reachability this exploit depends on.
    pub fn hacl_parents(&self, and_id: usize) -> Vec<&GroundAtom> {
        self.parents[and_id]
            .iter()
            .filter_map(|&p| match &self.lag.nodes[p].payload {
                NodePayload::Condition(atom)
                    if self.lag.nodes[p].kind == LagNodeKind::Leaf && atom.pred == "hacl" =>
                {
                    Some(atom)
                }
                _ => None,
            })
            .collect()
    }
}

/// Annotates the sliced graph with exploit probabilities, breaks cycles,
/// and fixes a topological order.
pub fn lag_to_bag(lag: Lag, vuln_probs: &BTreeMap<String, f64>) -> Result<Bag, BagError> {
    let n = lag.nodes.len();

    // Cycle breaking: depth-first from attacker-located leaves (then any
    // remaining roots in ascending id order), removing back edges.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(from, to) in &lag.edges {
        children[from].push(to);
    }
    for c in &mut children {
        c.sort_unstable();
    }
    let mut roots: Vec<usize> = lag
        .nodes
        .iter()
        .filter(|node| {
            node.kind == LagNodeKind::Leaf
                && matches!(&node.payload, NodePayload::Condition(a) if a.pred == "attackerLocated")
        })
        .map(|node| node.id)
        .collect();
    roots.extend(0..n);

    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color = vec![Color::White; n];
    let mut removed: BTreeSet<(usize, usize)> = BTreeSet::new();
    for root in roots {
        if color[root] != Color::White {
            continue;
        }
        // iterative DFS; stack holds (node, next child index)
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        color[root] = Color::Gray;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < children[node].len() {
                let child = children[node][*next];
                *next += 1;
                match color[child] {
                    Color::Gray => {
                        removed.insert((node, child));
                    }
                    Color::White => {
                        color[child] = Color::Gray;
                        stack.push((child, 0));
                    }
                    Color::Black => {}
                }
            } else {
                color[node] = Color::Black;
                stack.pop();
            }
        }
    }

    let edges: Vec<(usize, usize)> = lag
        .edges
        .iter()
        .copied()
        .filter(|e| !removed.contains(e))
        .collect();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(from, to) in &edges {
        parents[to].push(from);
        children[from].push(to);
    }
    for list in parents.iter_mut().chain(children.iter_mut()) {
        list.sort_unstable();
    }

    // Kahn with a min-ordered ready set keeps the order reproducible.
    let mut indegree: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut ready: BTreeSet<usize> = indegree
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(i, _)| i)
        .collect();
    let mut topo_order = Vec::with_capacity(n);
    while let Some(&node) = ready.iter().next() {
        ready.remove(&node);
        topo_order.push(node);
        for &child in &children[node] {
            indegree[child] -= 1;
            if indegree[child] == 0 {
                ready.insert(child);
            }
        }
    }
    assert_eq!(topo_order.len(), n, "cycle breaking left a cycle");

    // Exploit probabilities: the success probability of the exploit's
    // vulnerability, or 1.0 for pure plumbing rules (reachability).
    let mut exploit_prob = BTreeMap::new();
    let mut annotations = BTreeMap::new();
    for node in &lag.nodes {
        if node.kind != LagNodeKind::And {
            continue;
        }
        let NodePayload::Exploit { head, body, .. } = &node.payload else {
            continue;
        };
        let vuln = body.iter().find(|a| a.pred == "vulExists");
        let prob = match vuln {
            Some(atom) => *vuln_probs
                .get(&atom.canonical())
                .ok_or_else(|| BagError::MissingVulnProb(atom.canonical()))?,
            None => 1.0,
        };
        exploit_prob.insert(node.id, prob);
        annotations.insert(node.id, annotate(head, body));
    }

    Ok(Bag {
        lag,
        exploit_prob,
        topo_order,
        removed_edges: removed.into_iter().collect(),
        parents,
        children,
        annotations,
    })
}

/// Pulls the (host, proto, port) an exploit is about from its grounded
/// atoms: a `netAccess` shape when available, otherwise the head subject.
fn annotate(head: &GroundAtom, body: &[GroundAtom]) -> ExploitAnnotation {
    let net_access = if head.pred == "netAccess" && head.args.len() == 3 {
        Some(head)
    } else {
        body.iter().find(|a| a.pred == "netAccess" && a.args.len() == 3)
    };
    match net_access {
        Some(atom) => ExploitAnnotation {
            host: Some(atom.args[0].clone()),
            proto: match atom.args[1].as_str() {
                "tcp" | "udp" => ProtoAnnotation::Concrete(atom.args[1].clone()),
                _ => ProtoAnnotation::Unmodeled,
            },
            port: if atom.args[2] == ANY_PORT {
                PortAnnotation::Unmodeled
            } else {
                match atom.args[2].parse::<u16>() {
                    Ok(p) => PortAnnotation::Concrete(p),
                    Err(_) => PortAnnotation::Unmodeled,
                }
            },
        },
        None => ExploitAnnotation {
            host: head.args.first().cloned(),
            proto: ProtoAnnotation::Unmodeled,
            port: PortAnnotation::Unmodeled,
        },
    }
}

/// Conjunctive combination: `e * prod(parent_beliefs)`.
pub fn and_prob(parent_beliefs: &[f64], e: f64) -> f64 {
    e * parent_beliefs.iter().product::<f64>()
}

/// Noisy-OR combination: `1 - prod(1 - q_i)`. Empty input yields 0.
pub fn or_prob(incoming: &[f64]) -> f64 {
    1.0 - incoming.iter().map(|q| 1.0 - q).product::<f64>()
}

/// Bayes re-weighting of an exploit contribution by a likelihood ratio.
fn bayes(q: f64, likelihood: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let num = q * likelihood;
    if num.is_infinite() {
        return 1.0;
    }
    num / (num + (1.0 - q))
}

/// Marginal belief over the graph: probabilities for OR and LEAF nodes,
/// computed AND contributions, and the accumulated per-exploit evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    p: BTreeMap<usize, f64>,
    and_values: BTreeMap<usize, f64>,
    evidence: BTreeMap<usize, f64>,
}

impl Belief {
    pub fn prob(&self, id: usize) -> Option<f64> {
        self.p.get(&id).copied()
    }

    pub fn and_value(&self, id: usize) -> Option<f64> {
        self.and_values.get(&id).copied()
    }

    pub fn evidence(&self) -> &BTreeMap<usize, f64> {
        &self.evidence
    }

    /// Sum of attack-goal node beliefs.
    pub fn goal_belief(&self, bag: &Bag) -> f64 {
        bag.goal_ids()
            .iter()
            .map(|id| self.p.get(id).copied().unwrap_or(0.0))
            .sum()
    }

    /// Current leaf marginals, reusable as priors for a recompute.
    pub fn leaf_priors(&self, bag: &Bag) -> BTreeMap<usize, f64> {
        bag.leaf_ids()
            .map(|id| (id, self.p.get(&id).copied().unwrap_or(1.0)))
            .collect()
    }

    /// Two-column snapshot (node fact, probability) over OR and LEAF
    /// nodes, ordered by node id.
    pub fn table(&self, bag: &Bag) -> String {
        let mut out = String::new();
        for node in &bag.lag.nodes {
            if node.kind == LagNodeKind::And {
                continue;
            }
            let p = self.p.get(&node.id).copied().unwrap_or(0.0);
            out.push_str(&format!("{}\t{:.9}\n", node.fact, p));
        }
        out
    }
}

/// Single forward pass in topological order. `severed` AND nodes
/// contribute 0 regardless of evidence; missing leaf priors default 1.0.
pub fn propagate(
    bag: &Bag,
    leaf_priors: &BTreeMap<usize, f64>,
    evidence: &BTreeMap<usize, f64>,
    severed: &BTreeSet<usize>,
) -> Belief {
    let mut p: BTreeMap<usize, f64> = BTreeMap::new();
    let mut and_values: BTreeMap<usize, f64> = BTreeMap::new();
    for &id in &bag.topo_order {
        match bag.kind(id) {
            LagNodeKind::Leaf => {
                p.insert(id, leaf_priors.get(&id).copied().unwrap_or(1.0));
            }
            LagNodeKind::And => {
                let value = if severed.contains(&id) {
                    0.0
                } else {
                    let inputs: Vec<f64> = bag
                        .parents(id)
                        .iter()
                        .map(|pid| p.get(pid).copied().unwrap_or(0.0))
                        .collect();
                    let e = bag.exploit_prob.get(&id).copied().unwrap_or(1.0);
                    let q = and_prob(&inputs, e);
                    bayes(q, evidence.get(&id).copied().unwrap_or(1.0))
                };
                and_values.insert(id, value);
            }
            LagNodeKind::Or => {
                let inputs: Vec<f64> = bag
                    .parents(id)
                    .iter()
                    .map(|pid| and_values.get(pid).copied().unwrap_or(0.0))
                    .collect();
                p.insert(id, or_prob(&inputs));
            }
        }
    }
    Belief {
        p,
        and_values,
        evidence: evidence.clone(),
    }
}

/// Forward pass with no evidence: the prior belief.
pub fn prior_propagate(bag: &Bag, leaf_priors: &BTreeMap<usize, f64>) -> Belief {
    propagate(bag, leaf_priors, &BTreeMap::new(), &BTreeSet::new())
}

/// Folds one alert-match observation into the belief: the exploit's
/// accumulated likelihood ratio is scaled by `likelihood_ratio` and all
/// descendants are recomputed.
pub fn posterior_update(
    bag: &Bag,
    belief: &Belief,
    and_node_id: usize,
    likelihood_ratio: f64,
) -> Result<Belief, BagError> {
    if and_node_id >= bag.node_count() || bag.kind(and_node_id) != LagNodeKind::And {
        return Err(BagError::UnknownNode(and_node_id));
    }
    if likelihood_ratio.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(BagError::BadLikelihood(likelihood_ratio));
    }
    let mut evidence = belief.evidence.clone();
    let entry = evidence.entry(and_node_id).or_insert(1.0);
    *entry *= likelihood_ratio;
    let priors = belief.leaf_priors(bag);
    Ok(propagate(bag, &priors, &evidence, &BTreeSet::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{build_lag, parse_program, solve};

    fn atom(text: &str) -> GroundAtom {
        parse_program(&format!("{text}."))
            .unwrap()
            .facts
            .into_iter()
            .next()
            .unwrap()
    }

    /// goal(a) :- pre(a), vulExists(a, v, p, remote, privEscalation)
    fn chain_bag(e: f64) -> Bag {
        let p = parse_program(
            "pre(a). vulExists(a, v1, p1, remote, privEscalation).\n\
             goal(X) :- pre(X), vulExists(X, V, P, remote, privEscalation).",
        )
        .unwrap();
        let graph = solve(&p);
        let lag = build_lag(&graph, &[atom("goal(a)")]).lag;
        let mut probs = BTreeMap::new();
        probs.insert("vulExists(a,v1,p1,remote,privEscalation)".to_string(), e);
        lag_to_bag(lag, &probs).unwrap()
    }

    /// Two independent rules deriving the same goal (a diamond at the OR).
    fn diamond_bag(e1: f64, e2: f64) -> Bag {
        let p = parse_program(
            "pre1(a). pre2(a).\n\
             vulExists(a, v1, p1, remote, privEscalation).\n\
             vulExists(a, v2, p2, remote, privEscalation).\n\
             goal(X) :- pre1(X), vulExists(X, v1, P, remote, privEscalation).\n\
             goal(X) :- pre2(X), vulExists(X, v2, P, remote, privEscalation).",
        )
        .unwrap();
        let graph = solve(&p);
        let lag = build_lag(&graph, &[atom("goal(a)")]).lag;
        let mut probs = BTreeMap::new();
        probs.insert("vulExists(a,v1,p1,remote,privEscalation)".to_string(), e1);
        probs.insert("vulExists(a,v2,p2,remote,privEscalation)".to_string(), e2);
        lag_to_bag(lag, &probs).unwrap()
    }

    #[test]
    fn and_prob_closed_forms() {
        assert_eq!(and_prob(&[1.0, 1.0], 0.6), 0.6);
        assert_eq!(and_prob(&[0.0, 0.7], 0.9), 0.0);
        assert_eq!(and_prob(&[0.5, 0.5], 1.0), 0.25);
    }

    #[test]
    fn or_prob_closed_forms() {
        assert!((or_prob(&[0.3]) - 0.3).abs() < 1e-12);
        assert_eq!(or_prob(&[]), 0.0);
        assert_eq!(or_prob(&[0.5, 0.5]), 0.75);
    }

    #[test]
    fn acyclic_graph_keeps_structure() {
        let bag = chain_bag(0.8);
        assert!(bag.removed_edges.is_empty());
        assert_eq!(bag.topo_order.len(), bag.node_count());
    }

    #[test]
    fn reachability_only_exploit_gets_probability_one() {
        let p = parse_program(
            "attackerLocated(z). hacl(z, h, any, anyPort).\n\
             netAccess(H, Proto, Port) :- attackerLocated(Z), hacl(Z, H, Proto, Port).",
        )
        .unwrap();
        let graph = solve(&p);
        let lag = build_lag(&graph, &[atom("netAccess(h,any,anyPort)")]).lag;
        let bag = lag_to_bag(lag, &BTreeMap::new()).unwrap();
        let and_id = bag.and_ids().next().unwrap();
        assert_eq!(bag.exploit_prob[&and_id], 1.0);
    }

    #[test]
    fn missing_vuln_probability_names_the_atom() {
        let p = parse_program(
            "pre(a). vulExists(a, v1, p1, remote, privEscalation).\n\
             goal(X) :- pre(X), vulExists(X, V, P, remote, privEscalation).",
        )
        .unwrap();
        let graph = solve(&p);
        let lag = build_lag(&graph, &[atom("goal(a)")]).lag;
        match lag_to_bag(lag, &BTreeMap::new()) {
            Err(BagError::MissingVulnProb(name)) => {
                assert_eq!(name, "vulExists(a,v1,p1,remote,privEscalation)")
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn mutual_reachability_cycle_is_broken() {
        // two hosts that can each reach the other once compromised
        let p = parse_program(
            "attackerLocated(z).\n\
             hacl(z, h1, any, anyPort).\n\
             hacl(h1, h2, any, anyPort).\n\
             hacl(h2, h1, any, anyPort).\n\
             networkServiceInfo(h1, svc, any, anyPort, user).\n\
             networkServiceInfo(h2, svc, any, anyPort, user).\n\
             vulExists(h1, v, svc, remote, privEscalation).\n\
             vulExists(h2, v, svc, remote, privEscalation).\n\
             netAccess(H2, Proto, Port) :- attackerLocated(Z), hacl(Z, H2, Proto, Port).\n\
             netAccess(H2, Proto, Port) :- execCode(H1, _), hacl(H1, H2, Proto, Port).\n\
             execCode(H, User) :- netAccess(H, Proto, Port), networkServiceInfo(H, Prog, Proto, Port, User), vulExists(H, VulnId, Prog, remote, privEscalation).",
        )
        .unwrap();
        let graph = solve(&p);
        let lag = build_lag(&graph, &[atom("execCode(h2,user)")]).lag;

        // oracle: cycle detection before and after
        assert!(has_cycle(&lag.edges, lag.nodes.len()));
        let mut probs = BTreeMap::new();
        probs.insert("vulExists(h1,v,svc,remote,privEscalation)".to_string(), 0.5);
        probs.insert("vulExists(h2,v,svc,remote,privEscalation)".to_string(), 0.5);
        let bag = lag_to_bag(lag, &probs).unwrap();
        assert!(!bag.removed_edges.is_empty());
        let kept: Vec<(usize, usize)> = bag
            .lag
            .edges
            .iter()
            .copied()
            .filter(|e| !bag.removed_edges.contains(e))
            .collect();
        assert!(!has_cycle(&kept, bag.node_count()));
        assert_eq!(bag.topo_order.len(), bag.node_count());
    }

    fn has_cycle(edges: &[(usize, usize)], n: usize) -> bool {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
        }
        let mut state = vec![0u8; n];
        fn visit(v: usize, adj: &[Vec<usize>], state: &mut [u8]) -> bool {
            state[v] = 1;
            for &w in &adj[v] {
                if state[w] == 1 || (state[w] == 0 && visit(w, adj, state)) {
                    return true;
                }
            }
            state[v] = 2;
            false
        }
        (0..n).any(|v| state[v] == 0 && visit(v, &adj, &mut state))
    }

    #[test]
    fn chain_propagation_closed_form() {
        let bag = chain_bag(0.8);
        let belief = prior_propagate(&bag, &BTreeMap::new());
        let goal = bag.goal_ids()[0];
        assert!((belief.prob(goal).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn zero_priors_zero_beliefs() {
        let bag = chain_bag(0.8);
        let priors: BTreeMap<usize, f64> = bag.leaf_ids().map(|id| (id, 0.0)).collect();
        let belief = prior_propagate(&bag, &priors);
        let goal = bag.goal_ids()[0];
        assert_eq!(belief.prob(goal).unwrap(), 0.0);
    }

    #[test]
    fn diamond_noisy_or_closed_form() {
        let bag = diamond_bag(0.5, 0.5);
        let belief = prior_propagate(&bag, &BTreeMap::new());
        let goal = bag.goal_ids()[0];
        assert!((belief.prob(goal).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn uninformative_evidence_is_identity() {
        let bag = chain_bag(0.5);
        let belief = prior_propagate(&bag, &BTreeMap::new());
        let and_id = bag.and_ids().next().unwrap();
        let updated = posterior_update(&bag, &belief, and_id, 1.0).unwrap();
        let goal = bag.goal_ids()[0];
        assert_eq!(belief.prob(goal), updated.prob(goal));
    }

    #[test]
    fn bayes_reweight_closed_form() {
        let bag = chain_bag(0.5);
        let belief = prior_propagate(&bag, &BTreeMap::new());
        let and_id = bag.and_ids().next().unwrap();
        assert!((belief.and_value(and_id).unwrap() - 0.5).abs() < 1e-12);
        let updated = posterior_update(&bag, &belief, and_id, 9.0).unwrap();
        assert!((updated.and_value(and_id).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_prior_absorbs_evidence() {
        let bag = chain_bag(0.0);
        let belief = prior_propagate(&bag, &BTreeMap::new());
        let and_id = bag.and_ids().next().unwrap();
        let updated = posterior_update(&bag, &belief, and_id, 1000.0).unwrap();
        assert_eq!(updated.and_value(and_id).unwrap(), 0.0);
        assert_eq!(updated.prob(bag.goal_ids()[0]).unwrap(), 0.0);
    }

    #[test]
    fn unknown_node_rejected() {
        let bag = chain_bag(0.5);
        let belief = prior_propagate(&bag, &BTreeMap::new());
        let or_id = bag.goal_ids()[0];
        assert!(matches!(
            posterior_update(&bag, &belief, or_id, 2.0),
            Err(BagError::UnknownNode(_))
        ));
        assert!(matches!(
            posterior_update(&bag, &belief, 9999, 2.0),
            Err(BagError::UnknownNode(9999))
        ));
    }

    #[test]
    fn severed_exploit_contributes_nothing() {
        let bag = diamond_bag(0.5, 0.5);
        let and_ids: Vec<usize> = bag.and_ids().collect();
        let mut severed = BTreeSet::new();
        severed.insert(and_ids[0]);
        let belief = propagate(&bag, &BTreeMap::new(), &BTreeMap::new(), &severed);
        let goal = bag.goal_ids()[0];
        assert!((belief.prob(goal).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn belief_table_lists_conditions() {
        let bag = chain_bag(0.8);
        let belief = prior_propagate(&bag, &BTreeMap::new());
        let table = belief.table(&bag);
        assert!(table.contains("goal(a)\t0.800000000"));
        assert!(table.contains("pre(a)\t1.000000000"));
    }
}
