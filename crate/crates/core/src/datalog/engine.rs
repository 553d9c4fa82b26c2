//! Semi-naive bottom-up evaluation with full proof recording.
//!
//! Every rule instantiation that derives an atom is kept, not just the
//! first one: the proof hypergraph is the logical attack graph. Evaluation
//! order is fully deterministic (rules by index, candidate facts by atom
//! id), so two runs over the same program produce identical graphs.

use std::collections::{BTreeMap, HashMap};

use super::ast::{GroundAtom, Pattern, Program, Term, ANY_PORT};

/// One recorded rule instantiation: `body` facts ground `rule`'s body in
/// order and together derive `head`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule_index: usize,
    pub label: String,
    pub head: usize,
    pub body: Vec<usize>,
}

/// The least fixpoint plus its proof hypergraph.
#[derive(Debug, Default)]
pub struct DerivationGraph {
    pub atoms: Vec<GroundAtom>,
    index: HashMap<GroundAtom, usize>,
    /// True for atoms asserted as facts (EDB) rather than derived.
    pub edb: Vec<bool>,
    pub derivations: Vec<Derivation>,
    /// Derivation ids per head atom.
    pub derivations_of: Vec<Vec<usize>>,
}

impl DerivationGraph {
    pub fn atom_id(&self, atom: &GroundAtom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.index.contains_key(atom)
    }

    pub fn is_edb(&self, id: usize) -> bool {
        self.edb[id]
    }

    fn intern(&mut self, atom: GroundAtom, edb: bool) -> (usize, bool) {
        if let Some(&id) = self.index.get(&atom) {
            if edb && !self.edb[id] {
                self.edb[id] = true;
            }
            return (id, false);
        }
        let id = self.atoms.len();
        self.index.insert(atom.clone(), id);
        self.atoms.push(atom);
        self.edb.push(edb);
        self.derivations_of.push(Vec::new());
        (id, true)
    }
}

/// Variable bindings; `BTreeMap` keeps candidate enumeration deterministic.
type Bindings = BTreeMap<String, String>;

/// Constant unification with the `anyPort` wildcard: the wildcard matches
/// any constant and resolves to the more specific side.
fn unify_const(a: &str, b: &str) -> Option<String> {
    if a == b {
        Some(a.to_string())
    } else if a == ANY_PORT {
        Some(b.to_string())
    } else if b == ANY_PORT {
        Some(a.to_string())
    } else {
        None
    }
}

fn match_pattern(pattern: &Pattern, atom: &GroundAtom, binds: &Bindings) -> Option<Bindings> {
    if pattern.pred != atom.pred || pattern.args.len() != atom.args.len() {
        return None;
    }
    let mut out = binds.clone();
    for (term, value) in pattern.args.iter().zip(&atom.args) {
        match term {
            Term::Anon => {}
            Term::Const(c) => {
                unify_const(c, value)?;
            }
            Term::Var(v) => match out.get(v) {
                None => {
                    out.insert(v.clone(), value.clone());
                }
                Some(bound) => {
                    let merged = unify_const(bound, value)?;
                    out.insert(v.clone(), merged);
                }
            },
        }
    }
    Some(out)
}

fn instantiate_head(head: &Pattern, binds: &Bindings) -> GroundAtom {
    let args = head
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => binds
                .get(v)
                .expect("range restriction guarantees head vars are bound")
                .clone(),
            Term::Anon => unreachable!("`_` cannot appear in a head"),
        })
        .collect();
    GroundAtom::new(head.pred.clone(), args)
}

/// Computes the least fixpoint of `program` and records every derivation.
pub fn solve(program: &Program) -> DerivationGraph {
    let mut graph = DerivationGraph::default();
    // pred/arity -> atom ids, ascending (append order)
    let mut by_pred: HashMap<(String, usize), Vec<usize>> = HashMap::new();

    for fact in &program.facts {
        let (id, new) = graph.intern(fact.clone(), true);
        if new {
            by_pred
                .entry((fact.pred.clone(), fact.args.len()))
                .or_default()
                .push(id);
        }
    }

    // Semi-naive frontier: atoms with id in [frontier_start, frontier_end)
    // were added in the previous round.
    let mut frontier_start = 0usize;
    let mut frontier_end = graph.atoms.len();

    while frontier_start < frontier_end {
        let mut new_atoms: Vec<usize> = Vec::new();
        for (rule_index, rule) in program.rules.iter().enumerate() {
            // Enumerate each instantiation exactly once via its first
            // frontier position: earlier body atoms range over old facts
            // only, later ones over old plus frontier.
            for delta_pos in 0..rule.body.len() {
                join(
                    rule_index,
                    rule,
                    delta_pos,
                    0,
                    Bindings::new(),
                    Vec::new(),
                    &mut graph,
                    &by_pred,
                    frontier_start,
                    frontier_end,
                    &mut new_atoms,
                );
            }
        }
        frontier_start = frontier_end;
        frontier_end = graph.atoms.len();
        for &id in &new_atoms {
            let atom = &graph.atoms[id];
            by_pred
                .entry((atom.pred.clone(), atom.args.len()))
                .or_default()
                .push(id);
        }
    }
    graph
}

#[allow(clippy::too_many_arguments)]
fn join(
    rule_index: usize,
    rule: &super::ast::Rule,
    delta_pos: usize,
    pos: usize,
    binds: Bindings,
    chosen: Vec<usize>,
    graph: &mut DerivationGraph,
    by_pred: &HashMap<(String, usize), Vec<usize>>,
    frontier_start: usize,
    frontier_end: usize,
    new_atoms: &mut Vec<usize>,
) {
    if pos == rule.body.len() {
        let head = instantiate_head(&rule.head, &binds);
        let (head_id, new) = graph.intern(head, false);
        if new {
            new_atoms.push(head_id);
        }
        let derivation = Derivation {
            rule_index,
            label: rule.label.clone(),
            head: head_id,
            body: chosen,
        };
        // The first-frontier-position scheme visits each instantiation
        // once, but a repeated body atom can still echo; drop exact dupes.
        if !graph.derivations_of[head_id]
            .iter()
            .any(|&d| graph.derivations[d] == derivation)
        {
            graph.derivations_of[head_id].push(graph.derivations.len());
            graph.derivations.push(derivation);
        }
        return;
    }

    let pattern = &rule.body[pos];
    let Some(ids) = by_pred.get(&(pattern.pred.clone(), pattern.args.len())) else {
        return;
    };
    // id ranges per semi-naive mode
    let (lo, hi) = if pos < delta_pos {
        (0, frontier_start)
    } else if pos == delta_pos {
        (frontier_start, frontier_end)
    } else {
        (0, frontier_end)
    };
    let start = ids.partition_point(|&id| id < lo);
    for &id in &ids[start..] {
        if id >= hi {
            break;
        }
        if let Some(next_binds) = match_pattern(pattern, &graph.atoms[id], &binds) {
            let mut next_chosen = chosen.clone();
            next_chosen.push(id);
            join(
                rule_index,
                rule,
                delta_pos,
                pos + 1,
                next_binds,
                next_chosen,
                graph,
                by_pred,
                frontier_start,
                frontier_end,
                new_atoms,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse::parse_program;

    fn atom(text: &str) -> GroundAtom {
        let program = parse_program(&format!("{text}.")).unwrap();
        program.facts.into_iter().next().unwrap()
    }

    #[test]
    fn facts_only_no_derivations() {
        let p = parse_program("a(x). b(y).").unwrap();
        let g = solve(&p);
        assert_eq!(g.atoms.len(), 2);
        assert!(g.derivations.is_empty());
    }

    #[test]
    fn one_step_reachability() {
        let p = parse_program(
            "attackerLocated(internet).\n\
             hacl(internet, win7, tcp, anyPort).\n\
             netAccess(H2, Proto, Port) :- attackerLocated(Z), hacl(Z, H2, Proto, Port).",
        )
        .unwrap();
        let g = solve(&p);
        assert!(g.contains(&atom("netAccess(win7,tcp,anyPort)")));
        assert_eq!(g.derivations.len(), 1);
    }

    #[test]
    fn any_port_unifies_with_concrete_port() {
        // reachability is port-agnostic, the service is concrete: the join
        // must still go through and resolve to the concrete port
        let p = parse_program(
            "attackerLocated(internet).\n\
             hacl(internet, win7, tcp, anyPort).\n\
             networkServiceInfo(win7, iis, tcp, 80, user).\n\
             netAccess(H, Proto, Port) :- attackerLocated(Z), hacl(Z, H, Proto, Port).\n\
             reachableService(H, Prog, Port) :- netAccess(H, Proto, Port), networkServiceInfo(H, Prog, Proto, Port, U).",
        )
        .unwrap();
        let g = solve(&p);
        assert!(g.contains(&atom("reachableService(win7,iis,80)")));
    }

    #[test]
    fn transitive_closure_records_all_proofs() {
        let p = parse_program(
            "edge(a, b). edge(b, c). edge(a, c).\n\
             path(X, Y) :- edge(X, Y).\n\
             path(X, Z) :- path(X, Y), edge(Y, Z).",
        )
        .unwrap();
        let g = solve(&p);
        let ac = g.atom_id(&atom("path(a,c)")).unwrap();
        // path(a,c) has two proofs: directly from edge(a,c) and via b
        assert_eq!(g.derivations_of[ac].len(), 2);
    }

    #[test]
    fn repeated_runs_are_identical() {
        let text = "edge(a, b). edge(b, a).\n\
                    path(X, Y) :- edge(X, Y).\n\
                    path(X, Z) :- path(X, Y), edge(Y, Z).";
        let p = parse_program(text).unwrap();
        let g1 = solve(&p);
        let g2 = solve(&p);
        assert_eq!(g1.atoms, g2.atoms);
        assert_eq!(g1.derivations, g2.derivations);
    }
}
