//! Emotet-style check-in traffic: HTTP GETs whose Cookie header carries
//! the hybrid-sealed payload. One session key per run, generated from the
//! seed and RSA-wrapped in every cookie.

use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::alerts::{AppProto, L4Proto, TrafficEvent};
use crate::codecs::{emotet_open, emotet_seal, EmotetPrivateKey, EmotetPublicKey};

use super::http::{HttpRequest, HttpResponse};
use super::{EmulatorError, EPHEMERAL_PORT_BASE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadProfile {
    Checkin,
    ModuleFetch,
    Exfil,
}

fn default_cnc_port() -> u16 {
    8080
}

#[derive(Debug, Clone)]
pub struct EmotetTrafficConfig {
    pub bot_ip: Ipv4Addr,
    pub cnc_ip: Ipv4Addr,
    pub rsa_public: EmotetPublicKey,
    pub checkin_interval_ticks: u64,
    pub payload_profile: PayloadProfile,
    pub cnc_port: u16,
}

impl EmotetTrafficConfig {
    pub fn new(
        bot_ip: Ipv4Addr,
        cnc_ip: Ipv4Addr,
        rsa_public: EmotetPublicKey,
        checkin_interval_ticks: u64,
        payload_profile: PayloadProfile,
    ) -> Self {
        EmotetTrafficConfig {
            bot_ip,
            cnc_ip,
            rsa_public,
            checkin_interval_ticks,
            payload_profile,
            cnc_port: default_cnc_port(),
        }
    }
}

fn payload_text(cfg: &EmotetTrafficConfig, seq: u64) -> String {
    match cfg.payload_profile {
        PayloadProfile::Checkin => format!("id={}&action=checkin&seq={seq}", cfg.bot_ip),
        PayloadProfile::ModuleFetch => {
            format!("id={}&action=fetch&module=core&seq={seq}", cfg.bot_ip)
        }
        PayloadProfile::Exfil => format!("id={}&action=submit&records={}", cfg.bot_ip, seq * 3),
    }
}

/// Scheduled check-ins at ticks 1, 1+i, 1+2i, ...; the seed fixes the
/// session key, the timing is seed-independent.
pub fn emotet_traffic(
    cfg: &EmotetTrafficConfig,
    ticks: u64,
    seed: u64,
) -> Result<Vec<TrafficEvent>, EmulatorError> {
    if ticks < 1 {
        return Err(EmulatorError::BadConfig("ticks must be at least 1".to_string()));
    }
    if cfg.checkin_interval_ticks < 1 {
        return Err(EmulatorError::BadConfig(
            "checkin_interval_ticks must be at least 1".to_string(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let session_key: [u8; 16] = rng.gen();

    let mut events = Vec::new();
    let mut seq: u64 = 0;
    let mut t: u64 = 1;
    while t <= ticks {
        let cookie = emotet_seal(
            &cfg.rsa_public,
            &session_key,
            payload_text(cfg, seq).as_bytes(),
        )?;
        events.push(TrafficEvent {
            ts: t,
            seq: 0,
            src_ip: cfg.bot_ip,
            dst_ip: cfg.cnc_ip,
            src_port: EPHEMERAL_PORT_BASE + (seq % 16384) as u16,
            dst_port: cfg.cnc_port,
            proto: L4Proto::Tcp,
            app: AppProto::Http,
            uri: Some("/".to_string()),
            http_method: Some("GET".to_string()),
            headers: vec![
                ("host".to_string(), cfg.cnc_ip.to_string()),
                ("cookie".to_string(), cookie),
            ],
            payload: Vec::new(),
        });
        seq += 1;
        t += cfg.checkin_interval_ticks;
    }
    Ok(events)
}

/// The C&C side: opens each cookie with the epoch private key and logs
/// the plaintext. Anything unreadable gets a bare 200, like a server
/// hiding in plain sight.
#[derive(Debug)]
pub struct EmotetCnc {
    private: EmotetPrivateKey,
    pub log: Vec<String>,
}

impl EmotetCnc {
    pub fn new(private: EmotetPrivateKey) -> Self {
        EmotetCnc {
            private,
            log: Vec::new(),
        }
    }

    pub fn handle(&mut self, request: &HttpRequest) -> HttpResponse {
        if let Some(cookie) = request.header("cookie") {
            if let Ok(plain) = emotet_open(&self.private, cookie) {
                self.log.push(String::from_utf8_lossy(&plain).into_owned());
                return HttpResponse::ok(b"ok".to_vec());
            }
        }
        HttpResponse::ok(Vec::new())
    }
}

/// Live mode: performs the scheduled check-ins over real HTTP.
pub fn emotet_client_live(
    cfg: &EmotetTrafficConfig,
    server_addr: &str,
    ticks: u64,
    seed: u64,
    tick_ms: u64,
) -> Result<Vec<String>, EmulatorError> {
    let events = emotet_traffic(cfg, ticks, seed)?;
    let mut log = Vec::new();
    let mut last_tick = 0u64;
    for event in events {
        if tick_ms > 0 && event.ts > last_tick {
            std::thread::sleep(std::time::Duration::from_millis(
                (event.ts - last_tick) * tick_ms,
            ));
        }
        last_tick = event.ts;
        let cookie = event
            .headers
            .iter()
            .find(|(k, _)| k == "cookie")
            .map(|(_, v)| v.clone())
            .unwrap_or_default();
        let request = HttpRequest::new("GET", "/").with_header("Cookie", &cookie);
        let response =
            super::http::http_request(server_addr, &request).map_err(EmulatorError::Io)?;
        log.push(format!("tick={} GET / -> {}", event.ts, response.status));
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codecs::EmotetKeyPair;

    fn keys() -> EmotetKeyPair {
        EmotetKeyPair::generate(1024, 7).unwrap()
    }

    fn cfg(keys: &EmotetKeyPair, interval: u64) -> EmotetTrafficConfig {
        EmotetTrafficConfig::new(
            "192.168.0.23".parse().unwrap(),
            "172.16.4.80".parse().unwrap(),
            keys.public.clone(),
            interval,
            PayloadProfile::Checkin,
        )
    }

    #[test]
    fn single_tick_emits_handshake_with_cookie() {
        let keys = keys();
        let events = emotet_traffic(&cfg(&keys, 4), 1, 11).unwrap();
        assert_eq!(events.len(), 1);
        assert!(events[0].headers.iter().any(|(k, _)| k == "cookie"));
    }

    #[test]
    fn every_cookie_opens_with_the_private_key() {
        let keys = keys();
        let events = emotet_traffic(&cfg(&keys, 2), 7, 11).unwrap();
        assert_eq!(events.len(), 4);
        for (i, event) in events.iter().enumerate() {
            let cookie = event.headers.iter().find(|(k, _)| k == "cookie").unwrap();
            let plain = emotet_open(&keys.private, &cookie.1).unwrap();
            let text = String::from_utf8(plain).unwrap();
            assert_eq!(text, format!("id=192.168.0.23&action=checkin&seq={i}"));
        }
    }

    #[test]
    fn different_seeds_same_timing_different_keys() {
        let keys = keys();
        let a = emotet_traffic(&cfg(&keys, 3), 10, 1).unwrap();
        let b = emotet_traffic(&cfg(&keys, 3), 10, 2).unwrap();
        let ticks_a: Vec<u64> = a.iter().map(|e| e.ts).collect();
        let ticks_b: Vec<u64> = b.iter().map(|e| e.ts).collect();
        assert_eq!(ticks_a, ticks_b);
        assert_ne!(a[0].header("cookie"), b[0].header("cookie"));
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let keys = keys();
        let a = emotet_traffic(&cfg(&keys, 3), 10, 5).unwrap();
        let b = emotet_traffic(&cfg(&keys, 3), 10, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cnc_logs_decrypted_checkins() {
        let keys = keys();
        let events = emotet_traffic(&cfg(&keys, 1), 2, 3).unwrap();
        let mut cnc = EmotetCnc::new(keys.private.clone());
        for event in &events {
            let cookie = event.header("cookie").unwrap();
            let request = HttpRequest::new("GET", "/").with_header("Cookie", cookie);
            let response = cnc.handle(&request);
            assert_eq!(response.status, 200);
        }
        assert_eq!(cnc.log.len(), 2);
        assert!(cnc.log[0].contains("action=checkin"));
    }
}
