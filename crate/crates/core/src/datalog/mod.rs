//! Minimal forward-chaining Datalog with proof recording, plus the
//! interaction-rule set that turns network tuples into an attack graph.

mod ast;
mod engine;
mod lag;
mod parse;

pub use ast::{is_bare_constant, quote_constant, GroundAtom, Pattern, Program, Rule, Term, ANY_PORT};
pub use engine::{solve, Derivation, DerivationGraph};
pub use lag::{build_lag, export_dot, Lag, LagBuild, LagNode, LagNodeKind, NodePayload};
pub use parse::{parse_program, ParseError};

/// Built-in interaction rules: attacker entry reachability, lateral
/// reachability from compromised hosts, and remote service exploitation.
/// Loadable rule files can replace this set.
pub const BUILTIN_RULES: &str = "\
% Attacker's entry reachability.
netAccess(H2, Proto, Port) :- attackerLocated(Z), hacl(Z, H2, Proto, Port).
% Multi-hop reachability from a compromised host.
netAccess(H2, Proto, Port) :- execCode(H1, _), hacl(H1, H2, Proto, Port).
% Remote exploitation of a vulnerable network service.
execCode(H, User) :- netAccess(H, Proto, Port), networkServiceInfo(H, Prog, Proto, Port, User), vulExists(H, VulnId, Prog, remote, privEscalation).
";

/// Parses the built-in rule set. Panics only if the embedded text is
/// itself broken, which the test suite pins.
pub fn builtin_rules() -> Program {
    parse_program(BUILTIN_RULES).expect("builtin rules parse")
}
