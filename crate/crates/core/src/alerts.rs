//! Synthetic IDS: signature matching over simulated traffic events, and
//! the cascading three-level mapping of alerts onto exploit nodes.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bag::{Bag, PortAnnotation, ProtoAnnotation};
use crate::netmodel::HostMap;

#[derive(Debug, Error)]
pub enum SignatureError {
    #[error("signature document invalid at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate sid {0}")]
    DuplicateSid(u32),
    #[error("sid {sid}: malformed predicate: {reason}")]
    BadPredicate { sid: u32, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum L4Proto {
    Tcp,
    Udp,
}

impl L4Proto {
    pub fn as_str(self) -> &'static str {
        match self {
            L4Proto::Tcp => "tcp",
            L4Proto::Udp => "udp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppProto {
    Http,
    Dns,
    Raw,
}

/// One simulated wire exchange (request granularity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficEvent {
    /// Simulation tick the event occurs on.
    pub ts: u64,
    /// Global sequence number; breaks ordering ties within a tick.
    pub seq: u64,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub proto: L4Proto,
    pub app: AppProto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub http_method: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub headers: Vec<(String, String)>,
    #[serde(default, with = "payload_b64")]
    pub payload: Vec<u8>,
}

mod payload_b64 {
    use base64::engine::general_purpose::STANDARD as BASE64;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&BASE64.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(de)?;
        BASE64.decode(text).map_err(serde::de::Error::custom)
    }
}

impl TrafficEvent {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// Structural invariants for events coming from outside (replay
    /// files); emulator output satisfies them by construction.
    pub fn validate(&self) -> Result<(), String> {
        if self.src_port == 0 || self.dst_port == 0 {
            return Err("ports must be in 1..65535".to_string());
        }
        match self.app {
            AppProto::Http if self.uri.is_none() => {
                Err("http events must carry a uri".to_string())
            }
            AppProto::Dns | AppProto::Raw if self.uri.is_some() => {
                Err("only http events carry a uri".to_string())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigKind {
    Alert,
    Informative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchOp {
    Exact,
    Prefix,
    Substring,
    Glob,
}

/// A conjunct of a signature: one field, one pattern.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldPredicate {
    /// `src_ip`, `dst_ip`, `src_port`, `dst_port`, `proto`, `app`, `uri`,
    /// `http_method`, `payload`, or `header:<name>`.
    pub field: String,
    pub op: MatchOp,
    pub value: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Signature {
    pub sid: u32,
    pub msg: String,
    pub kind: SigKind,
    #[serde(rename = "match")]
    pub predicates: Vec<FieldPredicate>,
}

#[derive(Debug, Clone, Default)]
pub struct SignatureSet {
    pub signatures: Vec<Signature>,
}

#[derive(Debug, Deserialize)]
struct SignatureDoc {
    signatures: Vec<Signature>,
}

pub fn load_signatures(source: &str) -> Result<SignatureSet, SignatureError> {
    let de = &mut serde_json::Deserializer::from_str(source);
    let doc: SignatureDoc =
        serde_path_to_error::deserialize(de).map_err(|e| SignatureError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    let mut sids = BTreeSet::new();
    for sig in &doc.signatures {
        if !sids.insert(sig.sid) {
            return Err(SignatureError::DuplicateSid(sig.sid));
        }
        for pred in &sig.predicates {
            if extract_field(&dummy_event(), &pred.field).is_err() {
                return Err(SignatureError::BadPredicate {
                    sid: sig.sid,
                    reason: format!("unknown field `{}`", pred.field),
                });
            }
        }
    }
    Ok(SignatureSet {
        signatures: doc.signatures,
    })
}

fn dummy_event() -> TrafficEvent {
    TrafficEvent {
        ts: 0,
        seq: 0,
        src_ip: Ipv4Addr::UNSPECIFIED,
        dst_ip: Ipv4Addr::UNSPECIFIED,
        src_port: 1,
        dst_port: 1,
        proto: L4Proto::Tcp,
        app: AppProto::Raw,
        uri: None,
        http_method: None,
        headers: Vec::new(),
        payload: Vec::new(),
    }
}

fn extract_field(ev: &TrafficEvent, field: &str) -> Result<Option<String>, ()> {
    Ok(match field {
        "src_ip" => Some(ev.src_ip.to_string()),
        "dst_ip" => Some(ev.dst_ip.to_string()),
        "src_port" => Some(ev.src_port.to_string()),
        "dst_port" => Some(ev.dst_port.to_string()),
        "proto" => Some(ev.proto.as_str().to_string()),
        "app" => Some(
            match ev.app {
                AppProto::Http => "http",
                AppProto::Dns => "dns",
                AppProto::Raw => "raw",
            }
            .to_string(),
        ),
        "uri" => ev.uri.clone(),
        "http_method" => ev.http_method.clone(),
        "payload" => Some(String::from_utf8_lossy(&ev.payload).into_owned()),
        other => match other.strip_prefix("header:") {
            Some(name) => ev.header(name).map(|v| v.to_string()),
            None => return Err(()),
        },
    })
}

/// Glob matching with `*` and `?`; no regex machinery.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let pat: Vec<char> = pattern.chars().collect();
    let txt: Vec<char> = text.chars().collect();
    let (mut p, mut t) = (0usize, 0usize);
    let (mut star, mut mark) = (usize::MAX, 0usize);
    while t < txt.len() {
        if p < pat.len() && (pat[p] == '?' || pat[p] == txt[t]) {
            p += 1;
            t += 1;
        } else if p < pat.len() && pat[p] == '*' {
            star = p;
            mark = t;
            p += 1;
        } else if star != usize::MAX {
            p = star + 1;
            mark += 1;
            t = mark;
        } else {
            return false;
        }
    }
    while p < pat.len() && pat[p] == '*' {
        p += 1;
    }
    p == pat.len()
}

fn predicate_matches(pred: &FieldPredicate, ev: &TrafficEvent) -> bool {
    let value = match extract_field(ev, &pred.field) {
        Ok(Some(v)) => v,
        _ => return false,
    };
    match pred.op {
        MatchOp::Exact => value == pred.value,
        MatchOp::Prefix => value.starts_with(&pred.value),
        MatchOp::Substring => value.contains(&pred.value),
        MatchOp::Glob => glob_match(&pred.value, &value),
    }
}

fn signature_matches(sig: &Signature, ev: &TrafficEvent) -> bool {
    sig.predicates.iter().all(|p| predicate_matches(p, ev))
}

/// An IDS alert; a field subset of Suricata's EVE alert records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub ts: u64,
    pub sid: u32,
    pub msg: String,
    pub kind: SigKind,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub dst_port: u16,
    pub proto: L4Proto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hostname: Option<String>,
}

/// Matches one event against the set. Signature alerts come first in
/// ascending sid order, informative alerts after, also by sid.
pub fn match_traffic(set: &SignatureSet, ev: &TrafficEvent) -> Vec<Alert> {
    let mut hits: Vec<&Signature> = set
        .signatures
        .iter()
        .filter(|sig| signature_matches(sig, ev))
        .collect();
    hits.sort_by_key(|sig| (sig.kind, sig.sid));
    hits.into_iter()
        .map(|sig| Alert {
            ts: ev.ts,
            sid: sig.sid,
            msg: sig.msg.clone(),
            kind: sig.kind,
            src_ip: ev.src_ip,
            dst_ip: ev.dst_ip,
            dst_port: ev.dst_port,
            proto: ev.proto,
            hostname: None,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatchLevel {
    L1,
    L2,
    L3,
    #[serde(rename = "none")]
    None,
}

/// Alert-to-exploit mapping outcome: the level that fired and the AND
/// nodes it selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub level: MatchLevel,
    pub and_node_ids: Vec<usize>,
}

impl MatchResult {
    pub fn none() -> Self {
        MatchResult {
            level: MatchLevel::None,
            and_node_ids: Vec::new(),
        }
    }
}

/// Cascading match: L1 wants host plus concretely modeled port and
/// protocol; L2 wants host plus protocol with the port unmodeled; L3 wants
/// host only, both port and protocol unmodeled. A concretely modeled field
/// that contradicts the alert disqualifies the node outright.
pub fn map_alert(bag: &Bag, hostmap: &HostMap, alert: &Alert) -> MatchResult {
    let mut hosts: Vec<&str> = Vec::new();
    for addr in [alert.src_ip, alert.dst_ip] {
        if let Some(name) = hostmap.resolve(addr) {
            if !hosts.contains(&name) {
                hosts.push(name);
            }
        }
    }
    if hosts.is_empty() {
        return MatchResult::none();
    }

    let mut l1 = Vec::new();
    let mut l2 = Vec::new();
    let mut l3 = Vec::new();
    for and_id in bag.and_ids() {
        let Some(anno) = bag.annotation(and_id) else {
            continue;
        };
        let Some(host) = anno.host.as_deref() else {
            continue;
        };
        if !hosts.contains(&host) {
            continue;
        }
        let proto = match &anno.proto {
            ProtoAnnotation::Concrete(p) => {
                if p != alert.proto.as_str() {
                    continue; // modeled protocol contradicts the alert
                }
                true
            }
            ProtoAnnotation::Unmodeled => false,
        };
        let port = match &anno.port {
            PortAnnotation::Concrete(p) => {
                if *p != alert.dst_port {
                    continue; // node models a different port
                }
                true
            }
            PortAnnotation::Unmodeled => false,
        };
        match (proto, port) {
            (true, true) => l1.push(and_id),
            (true, false) | (false, true) => l2.push(and_id),
            (false, false) => l3.push(and_id),
        }
    }
    for (level, ids) in [
        (MatchLevel::L1, l1),
        (MatchLevel::L2, l2),
        (MatchLevel::L3, l3),
    ] {
        if !ids.is_empty() {
            return MatchResult {
                level,
                and_node_ids: ids,
            };
        }
    }
    MatchResult::none()
}

/// Serializes alerts as line-delimited JSON (the EVE-subset log format).
pub fn render_alert_log(alerts: &[Alert]) -> String {
    let mut out = String::new();
    for alert in alerts {
        out.push_str(&serde_json::to_string(alert).expect("alert serializes"));
        out.push('\n');
    }
    out
}

/// Parses a line-delimited alert log; unknown extra fields are ignored so
/// real EVE-subset exports replay cleanly.
pub fn parse_alert_log(text: &str) -> Result<Vec<Alert>, serde_json::Error> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(serde_json::from_str)
        .collect()
}
