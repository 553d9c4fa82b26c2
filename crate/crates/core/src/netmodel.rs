//! Network description: hosts, zones, reachability, services, and
//! vulnerabilities, compiled into Datalog input tuples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datalog::{parse_program, quote_constant, GroundAtom, ANY_PORT};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("topology document invalid at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("no hosts")]
    NoHosts,
    #[error("duplicate host name `{0}`")]
    DuplicateHost(String),
    #[error("`{0}` is declared both as a host and as a zone")]
    HostZoneClash(String),
    #[error("host `{host}` has no interfaces")]
    NoInterfaces { host: String },
    #[error("host `{host}` interface `{addr}` is not a dotted-quad IPv4 address")]
    BadAddress { host: String, addr: String },
    #[error("interface address {addr} assigned to both `{first}` and `{second}`")]
    DuplicateAddress {
        addr: Ipv4Addr,
        first: String,
        second: String,
    },
    #[error("{context} references undeclared name `{name}`")]
    DanglingReference { context: String, name: String },
    #[error("duplicate service entry ({host}, {program}, {proto}, {port})")]
    DuplicateService {
        host: String,
        program: String,
        proto: String,
        port: String,
    },
    #[error("vulnerability `{vuln_id}` on `{host}`: success_prob {value} outside [0,1]")]
    BadProbability {
        host: String,
        vuln_id: String,
        value: f64,
    },
    #[error("attacker location `{0}` is not a declared host or zone")]
    UnknownAttacker(String),
    #[error("goal `{goal}` does not parse as a ground atom: {reason}")]
    BadGoal { goal: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proto {
    Tcp,
    Udp,
    Any,
}

impl Proto {
    pub fn atom(self) -> &'static str {
        match self {
            Proto::Tcp => "tcp",
            Proto::Udp => "udp",
            Proto::Any => "any",
        }
    }
}

impl fmt::Display for Proto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.atom())
    }
}

/// A concrete port or the wildcard for reachability whose ports cannot be
/// modeled. JSON accepts an integer or `"any"`/`"*"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PortSpec {
    Number(u16),
    Wildcard,
}

impl PortSpec {
    pub fn atom(&self) -> String {
        match self {
            PortSpec::Number(n) => n.to_string(),
            PortSpec::Wildcard => ANY_PORT.to_string(),
        }
    }
}

impl Serialize for PortSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            PortSpec::Number(n) => serializer.serialize_u16(*n),
            PortSpec::Wildcard => serializer.serialize_str("any"),
        }
    }
}

impl<'de> Deserialize<'de> for PortSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(i64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(n) if (1..=65535).contains(&n) => Ok(PortSpec::Number(n as u16)),
            Raw::Number(n) => Err(D::Error::custom(format!("port {n} outside 1..65535"))),
            Raw::Text(s) if s == "any" || s == "*" => Ok(PortSpec::Wildcard),
            Raw::Text(s) => Err(D::Error::custom(format!("invalid port `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HostSpec {
    pub name: String,
    pub interfaces: Vec<String>,
    pub zone: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachabilityEntry {
    pub src: String,
    pub dst: String,
    pub proto: Proto,
    pub port: PortSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceSpec {
    pub host: String,
    pub program: String,
    pub proto: Proto,
    pub port: PortSpec,
    pub user: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum VulnRange {
    Remote,
    Local,
}

impl VulnRange {
    pub fn atom(self) -> &'static str {
        match self {
            VulnRange::Remote => "remote",
            VulnRange::Local => "local",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum VulnConsequence {
    PrivEscalation,
    PrivLoss,
    Dos,
}

impl VulnConsequence {
    pub fn atom(self) -> &'static str {
        match self {
            VulnConsequence::PrivEscalation => "privEscalation",
            VulnConsequence::PrivLoss => "privLoss",
            VulnConsequence::Dos => "dos",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VulnSpec {
    pub host: String,
    pub vuln_id: String,
    pub program: String,
    pub range: VulnRange,
    pub consequence: VulnConsequence,
    pub success_prob: f64,
}

/// Validated network description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkModel {
    pub hosts: Vec<HostSpec>,
    #[serde(default)]
    pub hacl: Vec<ReachabilityEntry>,
    #[serde(default)]
    pub services: Vec<ServiceSpec>,
    #[serde(default)]
    pub vulns: Vec<VulnSpec>,
    #[serde(rename = "attacker")]
    pub attacker_zone: String,
    #[serde(default)]
    pub goals: Vec<String>,
}

impl NetworkModel {
    pub fn zones(&self) -> BTreeSet<String> {
        self.hosts.iter().map(|h| h.zone.clone()).collect()
    }

    pub fn host(&self, name: &str) -> Option<&HostSpec> {
        self.hosts.iter().find(|h| h.name == name)
    }

    /// Parsed goal atoms.
    pub fn goal_atoms(&self) -> Vec<GroundAtom> {
        self.goals
            .iter()
            .map(|g| parse_goal(g).expect("goals validated at load"))
            .collect()
    }

    /// Success probabilities keyed by the canonical `vulExists` atom,
    /// which is how the attack-graph annotation looks them up.
    pub fn vuln_probs(&self) -> BTreeMap<String, f64> {
        self.vulns
            .iter()
            .map(|v| (vul_exists_atom(v).canonical(), v.success_prob))
            .collect()
    }
}

fn parse_goal(goal: &str) -> Result<GroundAtom, String> {
    let program = parse_program(&format!("{goal}.")).map_err(|e| e.to_string())?;
    program
        .facts
        .into_iter()
        .next()
        .ok_or_else(|| "empty goal".to_string())
}

fn vul_exists_atom(v: &VulnSpec) -> GroundAtom {
    GroundAtom::new(
        "vulExists",
        vec![
            v.host.clone(),
            v.vuln_id.clone(),
            v.program.clone(),
            v.range.atom().to_string(),
            v.consequence.atom().to_string(),
        ],
    )
}

/// Loads and validates a topology document (JSON).
pub fn load_topology(source: &str) -> Result<NetworkModel, TopologyError> {
    let de = &mut serde_json::Deserializer::from_str(source);
    let model: NetworkModel =
        serde_path_to_error::deserialize(de).map_err(|e| TopologyError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    validate(&model)?;
    Ok(model)
}

fn validate(model: &NetworkModel) -> Result<(), TopologyError> {
    if model.hosts.is_empty() {
        return Err(TopologyError::NoHosts);
    }
    let mut host_names = BTreeSet::new();
    for host in &model.hosts {
        if !host_names.insert(host.name.clone()) {
            return Err(TopologyError::DuplicateHost(host.name.clone()));
        }
        if host.interfaces.is_empty() {
            return Err(TopologyError::NoInterfaces {
                host: host.name.clone(),
            });
        }
    }
    let zones = model.zones();
    for host in &model.hosts {
        if zones.contains(&host.name) {
            return Err(TopologyError::HostZoneClash(host.name.clone()));
        }
    }

    let mut addr_owner: BTreeMap<Ipv4Addr, String> = BTreeMap::new();
    for host in &model.hosts {
        for addr in &host.interfaces {
            let parsed = Ipv4Addr::from_str(addr).map_err(|_| TopologyError::BadAddress {
                host: host.name.clone(),
                addr: addr.clone(),
            })?;
            if let Some(first) = addr_owner.insert(parsed, host.name.clone()) {
                return Err(TopologyError::DuplicateAddress {
                    addr: parsed,
                    first,
                    second: host.name.clone(),
                });
            }
        }
    }

    let resolves = |name: &str| host_names.contains(name) || zones.contains(name);
    for (i, entry) in model.hacl.iter().enumerate() {
        for name in [&entry.src, &entry.dst] {
            if !resolves(name) {
                return Err(TopologyError::DanglingReference {
                    context: format!("hacl[{i}]"),
                    name: name.clone(),
                });
            }
        }
    }
    let mut service_keys = BTreeSet::new();
    for (i, service) in model.services.iter().enumerate() {
        if !host_names.contains(&service.host) {
            return Err(TopologyError::DanglingReference {
                context: format!("services[{i}]"),
                name: service.host.clone(),
            });
        }
        let key = (
            service.host.clone(),
            service.program.clone(),
            service.proto,
            service.port,
        );
        if !service_keys.insert(key) {
            return Err(TopologyError::DuplicateService {
                host: service.host.clone(),
                program: service.program.clone(),
                proto: service.proto.to_string(),
                port: service.port.atom(),
            });
        }
    }
    for (i, vuln) in model.vulns.iter().enumerate() {
        if !host_names.contains(&vuln.host) {
            return Err(TopologyError::DanglingReference {
                context: format!("vulns[{i}]"),
                name: vuln.host.clone(),
            });
        }
        if !(0.0..=1.0).contains(&vuln.success_prob) {
            return Err(TopologyError::BadProbability {
                host: vuln.host.clone(),
                vuln_id: vuln.vuln_id.clone(),
                value: vuln.success_prob,
            });
        }
    }
    if !resolves(&model.attacker_zone) {
        return Err(TopologyError::UnknownAttacker(model.attacker_zone.clone()));
    }
    for goal in &model.goals {
        let atom = parse_goal(goal).map_err(|reason| TopologyError::BadGoal {
            goal: goal.clone(),
            reason,
        })?;
        if let Some(subject) = atom.args.first() {
            if !resolves(subject) {
                return Err(TopologyError::DanglingReference {
                    context: format!("goal `{goal}`"),
                    name: subject.clone(),
                });
            }
        }
    }
    Ok(())
}

/// The compiled tuple set, ordered lexicographically by rendered line.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleSet {
    pub atoms: Vec<GroundAtom>,
}

impl TupleSet {
    /// One `fact(arg, ...).` line per tuple.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for atom in &self.atoms {
            out.push_str(&render_tuple(atom));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

fn render_tuple(atom: &GroundAtom) -> String {
    let args: Vec<String> = atom.args.iter().map(|a| quote_constant(a)).collect();
    format!("{}({}).", atom.pred, args.join(", "))
}

/// Compiles the model into ground facts: `hacl/4`, `networkServiceInfo/5`,
/// `vulExists/5`, `attackerLocated/1`, `attackGoal/1`. Pure; identical
/// models yield byte-identical output.
pub fn to_datalog(model: &NetworkModel) -> TupleSet {
    let mut atoms: Vec<GroundAtom> = Vec::new();
    for entry in &model.hacl {
        atoms.push(GroundAtom::new(
            "hacl",
            vec![
                entry.src.clone(),
                entry.dst.clone(),
                entry.proto.atom().to_string(),
                entry.port.atom(),
            ],
        ));
    }
    for service in &model.services {
        atoms.push(GroundAtom::new(
            "networkServiceInfo",
            vec![
                service.host.clone(),
                service.program.clone(),
                service.proto.atom().to_string(),
                service.port.atom(),
                service.user.clone(),
            ],
        ));
    }
    for vuln in &model.vulns {
        atoms.push(vul_exists_atom(vuln));
    }
    atoms.push(GroundAtom::new(
        "attackerLocated",
        vec![model.attacker_zone.clone()],
    ));
    for goal in model.goal_atoms() {
        atoms.push(GroundAtom::new("attackGoal", vec![goal.canonical()]));
    }
    atoms.sort_by_key(render_tuple);
    TupleSet { atoms }
}

/// Address book derived from the model: IP -> host plus zone membership.
#[derive(Debug, Clone)]
pub struct HostMap {
    by_addr: BTreeMap<Ipv4Addr, String>,
    zone_of: BTreeMap<String, String>,
    primary: BTreeMap<String, Ipv4Addr>,
    attacker_zone: String,
}

impl HostMap {
    pub fn resolve(&self, addr: Ipv4Addr) -> Option<&str> {
        self.by_addr.get(&addr).map(|s| s.as_str())
    }

    pub fn primary_addr(&self, host: &str) -> Option<Ipv4Addr> {
        self.primary.get(host).copied()
    }

    pub fn zone(&self, host: &str) -> Option<&str> {
        self.zone_of.get(host).map(|s| s.as_str())
    }

    /// A host is internal when it does not sit in the attacker's zone.
    pub fn is_internal(&self, host: &str) -> bool {
        match self.zone_of.get(host) {
            Some(zone) => *zone != self.attacker_zone,
            None => false,
        }
    }
}

pub fn host_map(model: &NetworkModel) -> HostMap {
    let mut by_addr = BTreeMap::new();
    let mut zone_of = BTreeMap::new();
    let mut primary = BTreeMap::new();
    for host in &model.hosts {
        zone_of.insert(host.name.clone(), host.zone.clone());
        for (i, addr) in host.interfaces.iter().enumerate() {
            let parsed: Ipv4Addr = addr.parse().expect("addresses validated at load");
            by_addr.insert(parsed, host.name.clone());
            if i == 0 {
                primary.insert(host.name.clone(), parsed);
            }
        }
    }
    HostMap {
        by_addr,
        zone_of,
        primary,
        attacker_zone: model.attacker_zone.clone(),
    }
}
