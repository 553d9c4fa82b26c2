//! ZitMo message formatting and transport encryption.
//!
//! Wire text is `key=value` pairs joined by `&` in a fixed per-service
//! order, followed (for `timer` messages) by a bare update flag and the
//! device's current C&C URL list. Messages other than `sms` end with the
//! `&Sign28tepXXX` terminator; `sms` reports end with a bare `&`.
//! Transport encryption is AES-128-ECB under a pre-shared 16-byte key with
//! space padding, then Base64.

use aes::cipher::generic_array::GenericArray;
use aes::cipher::{BlockDecrypt, BlockEncrypt, KeyInit};
use aes::Aes128;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::CodecError;

/// Pre-shared transport key common to most ZitMo/ZertSecurity variants.
pub const ZITMO_DEFAULT_KEY: &str = "0523850789a8cfed";

/// Terminator appended to all valid C&C responses and non-sms reports.
pub const ZITMO_TERMINATOR: &str = "&Sign28tepXXX";

const TERMINATOR_BARE: &str = "Sign28tepXXX";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZitMoService {
    Timer,
    Login,
    Sms,
}

impl ZitMoService {
    fn as_str(self) -> &'static str {
        match self {
            ZitMoService::Timer => "timer",
            ZitMoService::Login => "login",
            ZitMoService::Sms => "sms",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZitMoMessage {
    pub services: ZitMoService,
    /// Bank account number; empty until the victim enters one.
    #[serde(default)]
    pub login: String,
    #[serde(default)]
    pub phone: String,
    /// Device IMEI.
    #[serde(default)]
    pub devid: String,
    /// CRC32 over the device's current URL list, 8 hex digits. Opaque on
    /// parse; only recomputed over our own canonical serialization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dd: Option<String>,
    /// 0 on the boot report (URL list attached), 1 on periodic pings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub urls: Option<Vec<String>>,
    /// Forwarded SMS body, stored decoded; percent-encoded on the wire.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Sender of the forwarded SMS.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub number: Option<String>,
}

impl ZitMoMessage {
    pub fn timer(login: &str, phone: &str, devid: &str, dd: &str, flag: u8) -> Self {
        ZitMoMessage {
            services: ZitMoService::Timer,
            login: login.to_string(),
            phone: phone.to_string(),
            devid: devid.to_string(),
            dd: Some(dd.to_string()),
            flag: Some(flag),
            urls: None,
            text: None,
            number: None,
        }
    }

    pub fn login(login: &str, phone: &str, devid: &str) -> Self {
        ZitMoMessage {
            services: ZitMoService::Login,
            login: login.to_string(),
            phone: phone.to_string(),
            devid: devid.to_string(),
            dd: None,
            flag: None,
            urls: None,
            text: None,
            number: None,
        }
    }

    pub fn sms(text: &str, number: &str, login: &str) -> Self {
        ZitMoMessage {
            services: ZitMoService::Sms,
            login: login.to_string(),
            phone: String::new(),
            devid: String::new(),
            dd: None,
            flag: None,
            urls: None,
            text: Some(text.to_string()),
            number: Some(number.to_string()),
        }
    }
}

/// Renders a message to wire text. Field order and separators follow the
/// observed protocol exactly; see the golden tests.
pub fn zitmo_format(msg: &ZitMoMessage) -> String {
    let mut out = String::new();
    let push_kv = |out: &mut String, k: &str, v: &str| {
        out.push_str(k);
        out.push('=');
        out.push_str(v);
        out.push('&');
    };
    match msg.services {
        ZitMoService::Timer => {
            push_kv(&mut out, "services", msg.services.as_str());
            push_kv(&mut out, "login", &msg.login);
            push_kv(&mut out, "phone", &msg.phone);
            push_kv(&mut out, "devid", &msg.devid);
            if let Some(dd) = &msg.dd {
                push_kv(&mut out, "dd", dd);
            }
            if let Some(flag) = msg.flag {
                out.push_str(&flag.to_string());
            }
            if let Some(urls) = &msg.urls {
                for url in urls {
                    out.push('&');
                    out.push_str(url);
                }
            }
            out.push_str(ZITMO_TERMINATOR);
        }
        ZitMoService::Login => {
            push_kv(&mut out, "services", msg.services.as_str());
            push_kv(&mut out, "login", &msg.login);
            push_kv(&mut out, "phone", &msg.phone);
            push_kv(&mut out, "devid", &msg.devid);
            out.push_str(ZITMO_TERMINATOR);
        }
        ZitMoService::Sms => {
            push_kv(&mut out, "services", msg.services.as_str());
            if let Some(text) = &msg.text {
                push_kv(&mut out, "text", &form_encode(text));
            }
            if let Some(number) = &msg.number {
                push_kv(&mut out, "number", number);
            }
            push_kv(&mut out, "login", &msg.login);
            // sms reports go out without the signature terminator
        }
    }
    out
}

/// Parses wire text back into a message. Inverse of [`zitmo_format`] on
/// its output domain.
pub fn zitmo_parse(text: &str) -> Result<ZitMoMessage, CodecError> {
    let mut tokens: Vec<&str> = text.split('&').collect();
    let terminated = match tokens.last() {
        Some(&TERMINATOR_BARE) => {
            tokens.pop();
            true
        }
        Some(&"") => {
            tokens.pop();
            false
        }
        _ => return Err(CodecError::MissingTerminator),
    };

    let mut services: Option<ZitMoService> = None;
    let mut msg = ZitMoMessage {
        services: ZitMoService::Timer,
        login: String::new(),
        phone: String::new(),
        devid: String::new(),
        dd: None,
        flag: None,
        urls: None,
        text: None,
        number: None,
    };
    for token in tokens {
        if token.is_empty() {
            continue; // separator artifact before the terminator
        }
        if let Some((key, value)) = token.split_once('=') {
            match key {
                "services" => {
                    services = Some(match value {
                        "timer" => ZitMoService::Timer,
                        "login" => ZitMoService::Login,
                        "sms" => ZitMoService::Sms,
                        other => return Err(CodecError::UnknownService(other.to_string())),
                    })
                }
                "login" => msg.login = value.to_string(),
                "phone" => msg.phone = value.to_string(),
                "devid" => msg.devid = value.to_string(),
                "dd" => {
                    if value.len() != 8 || !value.bytes().all(|b| b.is_ascii_hexdigit()) {
                        return Err(CodecError::MalformedField {
                            field: "dd",
                            reason: format!("expected 8 hex digits, got `{value}`"),
                        });
                    }
                    msg.dd = Some(value.to_string());
                }
                "text" => msg.text = Some(form_decode(value)?),
                "number" => msg.number = Some(value.to_string()),
                other => return Err(CodecError::UnknownKey(other.to_string())),
            }
        } else if msg.flag.is_none() && msg.urls.is_none() && (token == "0" || token == "1") {
            msg.flag = Some(if token == "0" { 0 } else { 1 });
        } else {
            msg.urls.get_or_insert_with(Vec::new).push(token.to_string());
        }
    }

    msg.services = services.ok_or(CodecError::MalformedField {
        field: "services",
        reason: "missing".to_string(),
    })?;
    if msg.services != ZitMoService::Sms && !terminated {
        return Err(CodecError::MissingTerminator);
    }
    Ok(msg)
}

/// AES-128-ECB under a 16-byte key, space-padded to a block multiple,
/// Base64-encoded.
pub fn zitmo_encrypt(key16: &str, plaintext: &str) -> Result<String, CodecError> {
    let key = key_bytes(key16)?;
    let mut data = plaintext.as_bytes().to_vec();
    let rem = data.len() % 16;
    if rem != 0 {
        data.resize(data.len() + (16 - rem), b' ');
    }
    let cipher = Aes128::new(GenericArray::from_slice(&key));
    for block in data.chunks_mut(16) {
        cipher.encrypt_block(GenericArray::from_mut_slice(block));
    }
    Ok(BASE64.encode(&data))
}

/// Inverse of [`zitmo_encrypt`]; strips all trailing spaces, so messages
/// legitimately ending in spaces are unsupported.
pub fn zitmo_decrypt(key16: &str, b64: &str) -> Result<String, CodecError> {
    let key = key_bytes(key16)?;
    let mut data = BASE64.decode(b64.trim())?;
    if data.len() % 16 != 0 {
        return Err(CodecError::BadCiphertextLength(data.len()));
    }
    let cipher = Aes128::new(GenericArray::from_slice(&key));
    for block in data.chunks_mut(16) {
        cipher.decrypt_block(GenericArray::from_mut_slice(block));
    }
    let text = String::from_utf8(data).map_err(|e| CodecError::MalformedField {
        field: "plaintext",
        reason: e.to_string(),
    })?;
    Ok(text.trim_end_matches(' ').to_string())
}

fn key_bytes(key16: &str) -> Result<[u8; 16], CodecError> {
    let bytes = key16.as_bytes();
    if bytes.len() != 16 {
        return Err(CodecError::BadKeyLength {
            expected: 16,
            got: bytes.len(),
        });
    }
    let mut key = [0u8; 16];
    key.copy_from_slice(bytes);
    Ok(key)
}

/// Form-style percent encoding as the Android client produces it: space
/// becomes `+`, `[A-Za-z0-9.*_-]` pass through, everything else `%XX`.
pub fn form_encode(s: &str) -> String {
    let mut out = String::new();
    for &b in s.as_bytes() {
        match b {
            b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'.' | b'-' | b'*' | b'_' => {
                out.push(b as char)
            }
            b' ' => out.push('+'),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

pub fn form_decode(s: &str) -> Result<String, CodecError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'+' => {
                out.push(b' ');
                i += 1;
            }
            b'%' => {
                let hex = s.get(i + 1..i + 3).ok_or(CodecError::MalformedField {
                    field: "text",
                    reason: "truncated percent escape".to_string(),
                })?;
                let v = u8::from_str_radix(hex, 16).map_err(|_| CodecError::MalformedField {
                    field: "text",
                    reason: format!("bad percent escape `%{hex}`"),
                })?;
                out.push(v);
                i += 3;
            }
            b => {
                out.push(b);
                i += 1;
            }
        }
    }
    String::from_utf8(out).map_err(|e| CodecError::MalformedField {
        field: "text",
        reason: e.to_string(),
    })
}
