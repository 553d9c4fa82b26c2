//! Logical attack graph: the backward slice of the proof hypergraph from
//! the attack goals.
//!
//! Three node kinds: LEAF for primitive facts, OR for derived conditions,
//! AND for the rule instantiations (exploits) connecting them. Edges run
//! precondition -> AND -> postcondition.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::GroundAtom;
use super::engine::DerivationGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LagNodeKind {
    And,
    Or,
    Leaf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodePayload {
    /// OR/LEAF: a network condition (a ground atom).
    Condition(GroundAtom),
    /// AND: a grounded rule instantiation.
    Exploit {
        label: String,
        head: GroundAtom,
        body: Vec<GroundAtom>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagNode {
    pub id: usize,
    pub kind: LagNodeKind,
    /// Canonical display text, unique per (kind, fact).
    pub fact: String,
    pub payload: NodePayload,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lag {
    pub nodes: Vec<LagNode>,
    pub edges: Vec<(usize, usize)>,
    pub goal_ids: Vec<usize>,
}

/// Result of slicing: the graph plus any goals that were not derivable.
#[derive(Debug)]
pub struct LagBuild {
    pub lag: Lag,
    pub unreachable: Vec<GroundAtom>,
}

impl Lag {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &LagNode {
        &self.nodes[id]
    }

    /// Incoming edges per node.
    pub fn parents(&self) -> Vec<Vec<usize>> {
        let mut parents = vec![Vec::new(); self.nodes.len()];
        for &(from, to) in &self.edges {
            parents[to].push(from);
        }
        for p in &mut parents {
            p.sort_unstable();
        }
        parents
    }

    /// Outgoing edges per node.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.nodes.len()];
        for &(from, to) in &self.edges {
            children[from].push(to);
        }
        for c in &mut children {
            c.sort_unstable();
        }
        children
    }

    /// Structural discipline check: LEAF in-degree 0, AND fed only by
    /// OR/LEAF, OR fed only by AND, goals are OR nodes.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen: BTreeSet<(LagNodeKind, &str)> = BTreeSet::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(format!("node {i} carries id {}", node.id));
            }
            if !seen.insert((node.kind, node.fact.as_str())) {
                return Err(format!("duplicate node for {:?} {}", node.kind, node.fact));
            }
        }
        for &(from, to) in &self.edges {
            if from >= self.nodes.len() || to >= self.nodes.len() {
                return Err(format!("edge ({from},{to}) out of range"));
            }
            match self.nodes[to].kind {
                LagNodeKind::Leaf => return Err(format!("LEAF node {to} has an incoming edge")),
                LagNodeKind::And => {
                    if self.nodes[from].kind == LagNodeKind::And {
                        return Err(format!("AND node {to} fed by AND node {from}"));
                    }
                }
                LagNodeKind::Or => {
                    if self.nodes[from].kind != LagNodeKind::And {
                        return Err(format!("OR node {to} fed by non-AND node {from}"));
                    }
                }
            }
        }
        for &goal in &self.goal_ids {
            if self.nodes[goal].kind != LagNodeKind::Or {
                return Err(format!("goal id {goal} is not an OR node"));
            }
        }
        Ok(())
    }
}

/// Internal slice key prior to id assignment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Condition(usize),
    Exploit(usize),
    /// OR wrapper for a goal that is itself a primitive fact.
    GivenGoalOr(usize),
    GivenGoalAnd(usize),
}

/// Slices the derivation graph backward from `goals`.
///
/// Goals that are not present in the fixpoint are reported in
/// `unreachable` instead of raising an error.
pub fn build_lag(graph: &DerivationGraph, goals: &[GroundAtom]) -> LagBuild {
    let mut unreachable = Vec::new();
    let mut work: Vec<Key> = Vec::new();
    let mut seen: BTreeSet<Key> = BTreeSet::new();
    let mut goal_keys: Vec<Key> = Vec::new();

    for goal in goals {
        match graph.atom_id(goal) {
            None => unreachable.push(goal.clone()),
            Some(id) => {
                let key = if graph.is_edb(id) {
                    // primitive-fact goal: wrap it so the goal stays an OR
                    work.push(Key::GivenGoalAnd(id));
                    work.push(Key::Condition(id));
                    Key::GivenGoalOr(id)
                } else {
                    Key::Condition(id)
                };
                goal_keys.push(key.clone());
                work.push(key);
            }
        }
    }

    let mut edges: BTreeSet<(Key, Key)> = BTreeSet::new();
    while let Some(key) = work.pop() {
        if !seen.insert(key.clone()) {
            continue;
        }
        match key {
            Key::Condition(id) => {
                if graph.is_edb(id) {
                    continue; // asserted facts are leaves even if re-derivable
                }
                for &d in &graph.derivations_of[id] {
                    edges.insert((Key::Exploit(d), Key::Condition(id)));
                    work.push(Key::Exploit(d));
                }
            }
            Key::Exploit(d) => {
                for &b in &graph.derivations[d].body {
                    edges.insert((Key::Condition(b), Key::Exploit(d)));
                    work.push(Key::Condition(b));
                }
            }
            Key::GivenGoalOr(id) => {
                edges.insert((Key::GivenGoalAnd(id), Key::GivenGoalOr(id)));
            }
            Key::GivenGoalAnd(id) => {
                edges.insert((Key::Condition(id), Key::GivenGoalAnd(id)));
            }
        }
    }

    // Assign ids deterministically: OR, then AND, then LEAF, each sorted
    // by display text.
    let mut entries: Vec<(LagNodeKind, String, NodePayload, Key)> = Vec::new();
    for key in &seen {
        match key {
            Key::Condition(id) => {
                let atom = graph.atoms[*id].clone();
                let kind = if graph.is_edb(*id) {
                    LagNodeKind::Leaf
                } else {
                    LagNodeKind::Or
                };
                entries.push((kind, atom.canonical(), NodePayload::Condition(atom), key.clone()));
            }
            Key::Exploit(d) => {
                let deriv = &graph.derivations[*d];
                let head = graph.atoms[deriv.head].clone();
                let body: Vec<GroundAtom> =
                    deriv.body.iter().map(|&b| graph.atoms[b].clone()).collect();
                let fact = format!(
                    "{}: {} :- {}",
                    deriv.label,
                    head.canonical(),
                    body.iter()
                        .map(|a| a.canonical())
                        .collect::<Vec<_>>()
                        .join(", ")
                );
                entries.push((
                    LagNodeKind::And,
                    fact,
                    NodePayload::Exploit {
                        label: deriv.label.clone(),
                        head,
                        body,
                    },
                    key.clone(),
                ));
            }
            Key::GivenGoalOr(id) => {
                let atom = graph.atoms[*id].clone();
                entries.push((
                    LagNodeKind::Or,
                    atom.canonical(),
                    NodePayload::Condition(atom),
                    key.clone(),
                ));
            }
            Key::GivenGoalAnd(id) => {
                let atom = graph.atoms[*id].clone();
                let fact = format!("given: {}", atom.canonical());
                entries.push((
                    LagNodeKind::And,
                    fact,
                    NodePayload::Exploit {
                        label: "given".to_string(),
                        head: atom.clone(),
                        body: vec![atom],
                    },
                    key.clone(),
                ));
            }
        }
    }
    let rank = |kind: LagNodeKind| match kind {
        LagNodeKind::Or => 0,
        LagNodeKind::And => 1,
        LagNodeKind::Leaf => 2,
    };
    entries.sort_by(|a, b| (rank(a.0), &a.1).cmp(&(rank(b.0), &b.1)));

    let mut ids: BTreeMap<Key, usize> = BTreeMap::new();
    let mut nodes = Vec::with_capacity(entries.len());
    for (id, (kind, fact, payload, key)) in entries.into_iter().enumerate() {
        ids.insert(key, id);
        nodes.push(LagNode {
            id,
            kind,
            fact,
            payload,
        });
    }
    let mut edge_list: Vec<(usize, usize)> = edges
        .into_iter()
        .map(|(from, to)| (ids[&from], ids[&to]))
        .collect();
    edge_list.sort_unstable();
    edge_list.dedup();
    let goal_ids: Vec<usize> = goal_keys.into_iter().map(|k| ids[&k]).collect();

    LagBuild {
        lag: Lag {
            nodes,
            edges: edge_list,
            goal_ids,
        },
        unreachable,
    }
}

/// GraphViz rendering: AND as ellipses, OR as diamonds, LEAF as boxes.
/// Output is deterministic, byte for byte.
pub fn export_dot(lag: &Lag) -> String {
    if lag.nodes.is_empty() {
        return "digraph lag { }".to_string();
    }
    let mut out = String::from("digraph lag {\n");
    for node in &lag.nodes {
        let shape = match node.kind {
            LagNodeKind::And => "ellipse",
            LagNodeKind::Or => "diamond",
            LagNodeKind::Leaf => "box",
        };
        let label = node.fact.replace('\\', "\\\\").replace('"', "\\\"");
        out.push_str(&format!(
            "  n{} [shape={}, label=\"{}\"];\n",
            node.id, shape, label
        ));
    }
    for &(from, to) in &lag.edges {
        out.push_str(&format!("  n{from} -> n{to};\n"));
    }
    out.push('}');
    out.push('\n');
    out
}
