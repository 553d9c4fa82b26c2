//! Deterministic intrusion-response simulation pipeline: a network model is
//! compiled to Datalog tuples, a forward-chaining reasoner derives a logical
//! attack graph, the graph is annotated into a Bayesian attack graph, and a
//! belief-driven defender reacts to synthetic IDS alerts by deploying virtual
//! iptables rules. Benign protocol emulators for three banking-trojan C2
//! families (Zeus, ZitMo, Emotet) drive the traffic side.

pub mod alerts;
pub mod bag;
pub mod codecs;
pub mod datalog;
pub mod defender;
pub mod emulators;
pub mod harness;
pub mod mitigation;
pub mod netmodel;
