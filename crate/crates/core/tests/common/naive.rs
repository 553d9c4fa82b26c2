//! Independent naive bottom-up evaluation oracle: re-evaluates every rule
//! against the full fact set until nothing changes. Shares only the AST
//! with the engine under test; matching and iteration are re-implemented
//! from scratch so evaluation bugs cannot cancel out.

use std::collections::{BTreeMap, BTreeSet};

use irsim::datalog::{GroundAtom, Pattern, Program, Term, ANY_PORT};

/// A derivation witnessed by the oracle: rule label, grounded head, and
/// the grounded body atoms in order.
pub type NaiveDerivation = (String, GroundAtom, Vec<GroundAtom>);

#[derive(Debug, Default)]
pub struct NaiveResult {
    pub atoms: BTreeSet<GroundAtom>,
    pub derivations: BTreeSet<NaiveDerivation>,
}

fn merge(a: &str, b: &str) -> Option<String> {
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

fn match_atom(
    pattern: &Pattern,
    atom: &GroundAtom,
    binds: &BTreeMap<String, String>,
) -> Option<BTreeMap<String, String>> {
    if pattern.pred != atom.pred || pattern.args.len() != atom.args.len() {
        return None;
    }
    let mut next = binds.clone();
    for (term, value) in pattern.args.iter().zip(&atom.args) {
        match term {
            Term::Anon => {}
            Term::Const(c) => {
                merge(c, value)?;
            }
            Term::Var(v) => match next.get(v).cloned() {
                None => {
                    next.insert(v.clone(), value.clone());
                }
                Some(bound) => {
                    let merged = merge(&bound, value)?;
                    next.insert(v.clone(), merged);
                }
            },
        }
    }
    Some(next)
}

fn enumerate(
    rule_body: &[Pattern],
    pos: usize,
    binds: &BTreeMap<String, String>,
    chosen: &mut Vec<GroundAtom>,
    atoms: &BTreeSet<GroundAtom>,
    found: &mut Vec<(BTreeMap<String, String>, Vec<GroundAtom>)>,
) {
    if pos == rule_body.len() {
        found.push((binds.clone(), chosen.clone()));
        return;
    }
    for atom in atoms {
        if let Some(next) = match_atom(&rule_body[pos], atom, binds) {
            chosen.push(atom.clone());
            enumerate(rule_body, pos + 1, &next, chosen, atoms, found);
            chosen.pop();
        }
    }
}

pub fn naive_solve(program: &Program) -> NaiveResult {
    let mut atoms: BTreeSet<GroundAtom> = program.facts.iter().cloned().collect();
    let mut derivations: BTreeSet<NaiveDerivation> = BTreeSet::new();
    loop {
        let before_atoms = atoms.len();
        let before_derivations = derivations.len();
        for rule in &program.rules {
            let mut found = Vec::new();
            enumerate(
                &rule.body,
                0,
                &BTreeMap::new(),
                &mut Vec::new(),
                &atoms.clone(),
                &mut found,
            );
            for (binds, body) in found {
                let head_args: Vec<String> = rule
                    .head
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Const(c) => c.clone(),
                        Term::Var(v) => binds[v].clone(),
                        Term::Anon => unreachable!("no `_` in heads"),
                    })
                    .collect();
                let head = GroundAtom::new(rule.head.pred.clone(), head_args);
                derivations.insert((rule.label.clone(), head.clone(), body));
                atoms.insert(head);
            }
        }
        if atoms.len() == before_atoms && derivations.len() == before_derivations {
            return NaiveResult { atoms, derivations };
        }
    }
}
