//! Shared test infrastructure: the independent naive-evaluation oracle
//! and seeded random generators for programs and attack graphs.

#![allow(dead_code)]

pub mod naive;

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::Rng;

use irsim::bag::Bag;
use irsim::datalog::{
    GroundAtom, Lag, LagNode, LagNodeKind, NodePayload, Pattern, Program, Rule, Term,
};

const CONSTS: &[&str] = &["c0", "c1", "c2", "c3", "c4", "anyPort"];
const VARS: &[&str] = &["X", "Y", "Z", "W"];
const PREDS: &[(&str, usize)] = &[("p", 1), ("q", 2), ("r", 2), ("s", 3)];

fn random_const(rng: &mut StdRng) -> String {
    CONSTS[rng.gen_range(0..CONSTS.len())].to_string()
}

fn random_fact(rng: &mut StdRng) -> GroundAtom {
    let (pred, arity) = PREDS[rng.gen_range(0..PREDS.len())];
    let args = (0..arity).map(|_| random_const(rng)).collect();
    GroundAtom::new(pred, args)
}

/// Range-restricted random rule: head arguments are drawn from body
/// variables (or constants when no variable is available).
fn random_rule(rng: &mut StdRng, label: String) -> Rule {
    let body_len = rng.gen_range(1..=3);
    let mut body = Vec::with_capacity(body_len);
    let mut body_vars: Vec<String> = Vec::new();
    for _ in 0..body_len {
        let (pred, arity) = PREDS[rng.gen_range(0..PREDS.len())];
        let args = (0..arity)
            .map(|_| {
                if rng.gen_bool(0.6) {
                    let v = VARS[rng.gen_range(0..VARS.len())].to_string();
                    if !body_vars.contains(&v) {
                        body_vars.push(v.clone());
                    }
                    Term::Var(v)
                } else {
                    Term::Const(random_const(rng))
                }
            })
            .collect();
        body.push(Pattern {
            pred: pred.to_string(),
            args,
        });
    }
    let (pred, arity) = PREDS[rng.gen_range(0..PREDS.len())];
    let head_args = (0..arity)
        .map(|_| {
            if !body_vars.is_empty() && rng.gen_bool(0.7) {
                Term::Var(body_vars[rng.gen_range(0..body_vars.len())].clone())
            } else {
                Term::Const(random_const(rng))
            }
        })
        .collect();
    Rule {
        label,
        head: Pattern {
            pred: pred.to_string(),
            args: head_args,
        },
        body,
    }
}

/// Random program with at most `max_facts` facts and `max_rules` rules.
pub fn random_program(rng: &mut StdRng, max_facts: usize, max_rules: usize) -> Program {
    let fact_count = rng.gen_range(1..=max_facts);
    let rule_count = rng.gen_range(1..=max_rules);
    let mut facts: Vec<GroundAtom> = Vec::new();
    for _ in 0..fact_count {
        let fact = random_fact(rng);
        if !facts.contains(&fact) {
            facts.push(fact);
        }
    }
    let rules = (0..rule_count)
        .map(|i| random_rule(rng, format!("R{}", i + 1)))
        .collect();
    Program::new(facts, rules)
}

pub fn random_extra_fact(rng: &mut StdRng) -> GroundAtom {
    random_fact(rng)
}

/// Builder for randomized attack graphs with the LAG node discipline.
pub struct GraphGen {
    nodes: Vec<LagNode>,
    edges: Vec<(usize, usize)>,
    pub vuln_probs: BTreeMap<String, f64>,
    counter: usize,
}

impl GraphGen {
    pub fn new() -> Self {
        GraphGen {
            nodes: Vec::new(),
            edges: Vec::new(),
            vuln_probs: BTreeMap::new(),
            counter: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    fn fresh(&mut self) -> usize {
        self.counter += 1;
        self.counter
    }

    pub fn leaf(&mut self, prior_label: &str) -> usize {
        let n = self.fresh();
        let atom = GroundAtom::new(prior_label, vec![format!("n{n}")]);
        let id = self.nodes.len();
        self.nodes.push(LagNode {
            id,
            kind: LagNodeKind::Leaf,
            fact: atom.canonical(),
            payload: NodePayload::Condition(atom),
        });
        id
    }

    /// Leaf carrying a vulnerability atom; `e` becomes the exploit
    /// probability of any AND node it feeds.
    pub fn vuln_leaf(&mut self, e: f64) -> usize {
        let n = self.fresh();
        let atom = GroundAtom::new(
            "vulExists",
            vec![
                format!("h{n}"),
                format!("v{n}"),
                format!("p{n}"),
                "remote".to_string(),
                "privEscalation".to_string(),
            ],
        );
        self.vuln_probs.insert(atom.canonical(), e);
        let id = self.nodes.len();
        self.nodes.push(LagNode {
            id,
            kind: LagNodeKind::Leaf,
            fact: atom.canonical(),
            payload: NodePayload::Condition(atom),
        });
        id
    }

    pub fn or_node(&mut self) -> usize {
        let n = self.fresh();
        let atom = GroundAtom::new("cond", vec![format!("n{n}")]);
        let id = self.nodes.len();
        self.nodes.push(LagNode {
            id,
            kind: LagNodeKind::Or,
            fact: atom.canonical(),
            payload: NodePayload::Condition(atom),
        });
        id
    }

    /// AND node fed by `parents` and one fresh vulnerability leaf with
    /// success probability `e`, deriving `child`.
    pub fn and_node(&mut self, parents: &[usize], child: usize, e: f64) -> usize {
        let vuln = self.vuln_leaf(e);
        let n = self.fresh();
        let head = GroundAtom::new("cond", vec![format!("n{n}")]);
        let body: Vec<GroundAtom> = parents
            .iter()
            .chain(std::iter::once(&vuln))
            .map(|&p| match &self.nodes[p].payload {
                NodePayload::Condition(a) => a.clone(),
                _ => unreachable!("AND parents are conditions"),
            })
            .collect();
        let id = self.nodes.len();
        self.nodes.push(LagNode {
            id,
            kind: LagNodeKind::And,
            fact: format!("x{n}: exploit"),
            payload: NodePayload::Exploit {
                label: format!("x{n}"),
                head,
                body,
            },
        });
        for &p in parents {
            self.edges.push((p, id));
        }
        self.edges.push((vuln, id));
        self.edges.push((id, child));
        id
    }

    pub fn build(self, goal_ids: Vec<usize>) -> (Lag, BTreeMap<String, f64>) {
        let lag = Lag {
            nodes: self.nodes,
            edges: self.edges,
            goal_ids,
        };
        lag.validate().expect("generated graph satisfies discipline");
        (lag, self.vuln_probs)
    }
}

/// Random singly-connected (tree-shaped) graph: every parent is a fresh
/// node, so factorized propagation is exact and comparable to joint
/// enumeration. `budget` caps the total node count.
pub fn random_polytree(rng: &mut StdRng, budget: usize) -> (Lag, BTreeMap<String, f64>, usize) {
    let mut gen = GraphGen::new();
    let goal = gen.or_node();
    grow_or(rng, &mut gen, goal, budget, 2);
    let (lag, probs) = gen.build(vec![goal]);
    (lag, probs, goal)
}

fn grow_or(rng: &mut StdRng, gen: &mut GraphGen, or_id: usize, budget: usize, depth: usize) {
    let fanin = rng.gen_range(1..=2);
    for _ in 0..fanin {
        if gen.len() + 2 > budget {
            break;
        }
        let e = rng.gen_range(0.05..1.0);
        let extra_parents = rng.gen_range(0..=1);
        let mut parents = Vec::new();
        for _ in 0..extra_parents {
            if gen.len() + 3 > budget {
                break;
            }
            if depth > 0 && rng.gen_bool(0.4) && gen.len() + 5 <= budget {
                let child_or = gen.or_node();
                grow_or(rng, gen, child_or, budget - 2, depth - 1);
                parents.push(child_or);
            } else {
                let id = gen.leaf("fact");
                parents.push(id);
            }
        }
        // the AND plus its vulnerability leaf cost two more nodes
        if gen.len() + 2 > budget {
            break;
        }
        gen.and_node(&parents, or_id, e);
    }
}

/// Random DAG (sharing allowed) with the LAG discipline, for monotonicity
/// and bounds properties where exactness is not claimed.
pub fn random_dag(rng: &mut StdRng, layers: usize, width: usize) -> (Lag, BTreeMap<String, f64>, Vec<usize>) {
    let mut gen = GraphGen::new();
    let mut condition_pool: Vec<usize> = (0..width.max(1))
        .map(|_| gen.leaf("fact"))
        .collect();
    let mut or_layer: Vec<usize> = Vec::new();
    for _ in 0..layers.max(1) {
        or_layer = (0..rng.gen_range(1..=width.max(1)))
            .map(|_| gen.or_node())
            .collect();
        for &or_id in &or_layer {
            let fanin = rng.gen_range(1..=2);
            for _ in 0..fanin {
                let parent_count = rng.gen_range(0..=2.min(condition_pool.len()));
                let mut parents = Vec::new();
                for _ in 0..parent_count {
                    let p = condition_pool[rng.gen_range(0..condition_pool.len())];
                    if !parents.contains(&p) {
                        parents.push(p);
                    }
                }
                gen.and_node(&parents, or_id, rng.gen_range(0.05..1.0));
            }
        }
        condition_pool.extend(or_layer.iter().copied());
    }
    let goals = vec![*or_layer.last().expect("at least one layer")];
    let (lag, probs) = gen.build(goals.clone());
    (lag, probs, goals)
}

/// Exact joint enumeration over all binary node states; the independent
/// numeric oracle for belief propagation on singly-connected graphs.
pub fn enumerate_marginals(
    bag: &Bag,
    leaf_priors: &BTreeMap<usize, f64>,
) -> BTreeMap<usize, f64> {
    let n = bag.node_count();
    assert!(n <= 20, "enumeration oracle is exponential");
    let mut marginals: BTreeMap<usize, f64> = (0..n).map(|i| (i, 0.0)).collect();
    for assignment in 0u32..(1 << n) {
        let on = |id: usize| assignment & (1 << id) != 0;
        let mut prob = 1.0f64;
        for id in 0..n {
            let node_prob = match bag.kind(id) {
                LagNodeKind::Leaf => {
                    let p = leaf_priors.get(&id).copied().unwrap_or(1.0);
                    if on(id) {
                        p
                    } else {
                        1.0 - p
                    }
                }
                LagNodeKind::And => {
                    let all_parents = bag.parents(id).iter().all(|&p| on(p));
                    let e = bag.exploit_prob.get(&id).copied().unwrap_or(1.0);
                    match (all_parents, on(id)) {
                        (true, true) => e,
                        (true, false) => 1.0 - e,
                        (false, true) => 0.0,
                        (false, false) => 1.0,
                    }
                }
                LagNodeKind::Or => {
                    let any_parent = bag.parents(id).iter().any(|&p| on(p));
                    if any_parent == on(id) {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            prob *= node_prob;
            if prob == 0.0 {
                break;
            }
        }
        if prob > 0.0 {
            for id in 0..n {
                if on(id) {
                    *marginals.get_mut(&id).unwrap() += prob;
                }
            }
        }
    }
    marginals
}
