//! Ground atoms, rule patterns, and programs.

use std::fmt;

/// Port wildcard: unifies with any constant during rule matching, encoding
/// reachability whose concrete port is not modeled.
pub const ANY_PORT: &str = "anyPort";

/// A ground atom. Arguments are canonical constant strings; a compound
/// argument such as `execCode(win7,user)` is stored in its compact
/// canonical rendering and treated as an opaque constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub pred: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(pred: impl Into<String>, args: Vec<String>) -> Self {
        GroundAtom {
            pred: pred.into(),
            args,
        }
    }

    /// Compact canonical rendering: `pred(a,b,c)`, arguments quoted only
    /// when they are not plain identifiers or numbers.
    pub fn canonical(&self) -> String {
        if self.args.is_empty() {
            return self.pred.clone();
        }
        let args: Vec<String> = self.args.iter().map(|a| quote_constant(a)).collect();
        format!("{}({})", self.pred, args.join(","))
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Quotes a constant for rendering unless it is a bare identifier, a
/// number, or a compound term (already canonical).
pub fn quote_constant(value: &str) -> String {
    if is_bare_constant(value) || value.contains('(') {
        value.to_string()
    } else {
        format!("'{value}'")
    }
}

pub fn is_bare_constant(value: &str) -> bool {
    let mut chars = value.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        Some(c) if c.is_ascii_digit() => value.chars().all(|c| c.is_ascii_digit()),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Const(String),
    Var(String),
    /// `_`: matches anything, binds nothing.
    Anon,
}

/// An atom pattern as it appears in a rule head or body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub pred: String,
    pub args: Vec<Term>,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return f.write_str(&self.pred);
        }
        let args: Vec<String> = self
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => quote_constant(c),
                Term::Var(v) => v.clone(),
                Term::Anon => "_".to_string(),
            })
            .collect();
        write!(f, "{}({})", self.pred, args.join(","))
    }
}

/// A Horn clause. Labels are assigned by parse order (`R1`, `R2`, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub label: String,
    pub head: Pattern,
    pub body: Vec<Pattern>,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.body.iter().map(|p| p.to_string()).collect();
        write!(f, "{} :- {}", self.head, body.join(", "))
    }
}

/// Facts plus rules; negation-free, function-symbol-free at the top level.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub facts: Vec<GroundAtom>,
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn new(facts: Vec<GroundAtom>, rules: Vec<Rule>) -> Self {
        Program { facts, rules }
    }

    /// Merges another program's clauses into this one.
    pub fn extend(&mut self, other: Program) {
        self.facts.extend(other.facts);
        self.rules.extend(other.rules);
        for (i, rule) in self.rules.iter_mut().enumerate() {
            rule.label = format!("R{}", i + 1);
        }
    }
}
