//! Zeus bot/C&C traffic emulation: one configuration download, then
//! periodic sealed status reports to the gate endpoint. Benign payloads,
//! faithful flow shape.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::alerts::{AppProto, L4Proto, TrafficEvent};
use crate::codecs::{zeus_open, zeus_seal, CodecError};

use super::http::{HttpRequest, HttpResponse};
use super::{EmulatorError, EPHEMERAL_PORT_BASE};

/// Classic wininet-style agent the bot identifies with; IDS signatures
/// key on it.
pub const ZEUS_BOT_USER_AGENT: &str = "Mozilla/4.0 (compatible; MSIE 6.0; Windows NT 5.1)";

fn default_cfg_uri() -> String {
    "/cfg.bin".to_string()
}

fn default_gate_uri() -> String {
    "/gate.php".to_string()
}

fn default_cnc_port() -> u16 {
    80
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeusBotConfig {
    pub bot_ip: Ipv4Addr,
    pub cnc_ip: Ipv4Addr,
    pub rc4_key: String,
    #[serde(default = "default_cfg_uri")]
    pub cfg_uri: String,
    #[serde(default = "default_gate_uri")]
    pub gate_uri: String,
    pub ping_interval_ticks: u64,
    #[serde(default = "default_cnc_port")]
    pub cnc_port: u16,
}

impl ZeusBotConfig {
    fn validate(&self) -> Result<(), EmulatorError> {
        if self.ping_interval_ticks < 1 {
            return Err(EmulatorError::BadConfig(
                "ping_interval_ticks must be at least 1".to_string(),
            ));
        }
        if self.rc4_key.is_empty() {
            return Err(EmulatorError::BadConfig("rc4_key must not be empty".to_string()));
        }
        Ok(())
    }
}

fn report_payload(bot_ip: Ipv4Addr, seq: u64) -> Vec<u8> {
    format!("id={bot_ip}&status=online&seq={seq}").into_bytes()
}

fn http_event(
    cfg: &ZeusBotConfig,
    ts: u64,
    conn_index: u64,
    method: &str,
    uri: &str,
    payload: Vec<u8>,
) -> TrafficEvent {
    TrafficEvent {
        ts,
        seq: 0, // assigned by the scheduler
        src_ip: cfg.bot_ip,
        dst_ip: cfg.cnc_ip,
        // each connection opens a fresh ephemeral port, staying in range
        src_port: EPHEMERAL_PORT_BASE + (conn_index % 16384) as u16,
        dst_port: cfg.cnc_port,
        proto: L4Proto::Tcp,
        app: AppProto::Http,
        uri: Some(uri.to_string()),
        http_method: Some(method.to_string()),
        headers: vec![
            ("host".to_string(), cfg.cnc_ip.to_string()),
            ("user-agent".to_string(), ZEUS_BOT_USER_AGENT.to_string()),
        ],
        payload,
    }
}

fn run(cfg: &ZeusBotConfig, ticks: u64, initial_report: bool) -> Result<Vec<TrafficEvent>, EmulatorError> {
    cfg.validate()?;
    if ticks < 1 {
        return Err(EmulatorError::BadConfig("ticks must be at least 1".to_string()));
    }
    let mut events = Vec::new();
    let mut conn: u64 = 0;
    events.push(http_event(cfg, 1, conn, "GET", &cfg.cfg_uri, Vec::new()));
    conn += 1;

    let mut report_seq: u64 = 0;
    if initial_report {
        let sealed = zeus_seal(cfg.rc4_key.as_bytes(), &report_payload(cfg.bot_ip, report_seq))?;
        events.push(http_event(cfg, 1, conn, "POST", &cfg.gate_uri, sealed));
        conn += 1;
        report_seq += 1;
    }
    let mut t = 1 + cfg.ping_interval_ticks;
    while t <= ticks {
        let sealed = zeus_seal(cfg.rc4_key.as_bytes(), &report_payload(cfg.bot_ip, report_seq))?;
        events.push(http_event(cfg, t, conn, "POST", &cfg.gate_uri, sealed));
        conn += 1;
        report_seq += 1;
        t += cfg.ping_interval_ticks;
    }
    Ok(events)
}

/// Freshly infected bot: configuration download on tick 1, then one
/// status report every `ping_interval_ticks`.
pub fn zeus_bot_run(cfg: &ZeusBotConfig, ticks: u64) -> Result<Vec<TrafficEvent>, EmulatorError> {
    run(cfg, ticks, false)
}

/// Bot resuming on a new network: it refreshes its configuration and
/// reports in immediately, then falls back to the periodic schedule.
pub fn zeus_bot_run_resumed(
    cfg: &ZeusBotConfig,
    ticks: u64,
) -> Result<Vec<TrafficEvent>, EmulatorError> {
    run(cfg, ticks, true)
}

/// The C&C side: serves the sealed configuration, accepts sealed reports.
#[derive(Debug)]
pub struct ZeusCnc {
    rc4_key: Vec<u8>,
    cfg_uri: String,
    gate_uri: String,
    config_plain: Vec<u8>,
    /// One line per accepted bot report; the data behind a control-panel
    /// bot listing.
    pub reports: Vec<String>,
}

impl ZeusCnc {
    pub fn new(rc4_key: &str, cfg_uri: &str, gate_uri: &str) -> Self {
        let config_plain = format!(
            "url_config=http://cnc{cfg_uri}\nurl_gate=http://cnc{gate_uri}\ntimer=25\nwebinjects=disabled\n"
        );
        ZeusCnc {
            rc4_key: rc4_key.as_bytes().to_vec(),
            cfg_uri: cfg_uri.to_string(),
            gate_uri: gate_uri.to_string(),
            config_plain: config_plain.into_bytes(),
            reports: Vec::new(),
        }
    }

    pub fn sealed_config(&self) -> Result<Vec<u8>, CodecError> {
        zeus_seal(&self.rc4_key, &self.config_plain)
    }

    pub fn handle(&mut self, request: &HttpRequest) -> HttpResponse {
        if request.method == "GET" && request.uri == self.cfg_uri {
            match self.sealed_config() {
                Ok(blob) => HttpResponse::ok(blob),
                Err(_) => HttpResponse::not_found(),
            }
        } else if request.method == "POST" && request.uri == self.gate_uri {
            match zeus_open(&self.rc4_key, &request.body) {
                Ok(plain) => {
                    self.reports
                        .push(String::from_utf8_lossy(&plain).into_owned());
                    match zeus_seal(&self.rc4_key, b"OK") {
                        Ok(ack) => HttpResponse::ok(ack),
                        Err(_) => HttpResponse::ok(Vec::new()),
                    }
                }
                Err(_) => HttpResponse::ok(Vec::new()),
            }
        } else {
            HttpResponse::not_found()
        }
    }
}

/// Live-mode client: replays the scripted flow over real HTTP and returns
/// one status line per exchange.
pub fn zeus_client_live(
    cfg: &ZeusBotConfig,
    server_addr: &str,
    ticks: u64,
    tick_ms: u64,
    resumed: bool,
) -> Result<Vec<String>, EmulatorError> {
    let events = run(cfg, ticks, resumed)?;
    let mut log = Vec::new();
    let mut last_tick = 0u64;
    for event in events {
        if tick_ms > 0 && event.ts > last_tick {
            std::thread::sleep(std::time::Duration::from_millis(
                (event.ts - last_tick) * tick_ms,
            ));
        }
        last_tick = event.ts;
        let uri = event.uri.clone().unwrap_or_default();
        let method = event.http_method.clone().unwrap_or_default();
        let request = HttpRequest::new(&method, &uri)
            .with_header("User-Agent", ZEUS_BOT_USER_AGENT)
            .with_body(event.payload.clone());
        let response = super::http::http_request(server_addr, &request).map_err(EmulatorError::Io)?;
        log.push(format!("tick={} {} {} -> {}", event.ts, method, uri, response.status));
    }
    Ok(log)
}
