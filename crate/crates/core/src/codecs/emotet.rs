//! Emotet-style hybrid envelope: the payload is AES-128 encrypted under a
//! per-session key, the session key is RSA-wrapped under the campaign's
//! public key, and the two are concatenated and Base64-encoded into a
//! single HTTP cookie value.
//!
//! Envelope layout (before Base64):
//!
//! ```text
//! [2-byte big-endian wrapped-key length][RSA(session_key)][AES-ECB(payload, PKCS#7)]
//! ```
//!
//! Sealing is deterministic: the RSA padding entropy is derived from the
//! inputs. Wire confidentiality is explicitly not a goal here; the format
//! only has to be self-consistent and faithful in shape.

use aes::cipher::generic_array::GenericArray;
use aes::cipher::{BlockDecrypt, BlockEncrypt, KeyInit};
use aes::Aes128;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rsa::traits::{PrivateKeyParts, PublicKeyParts};
use rsa::{BigUint, Pkcs1v15Encrypt, RsaPrivateKey, RsaPublicKey};
use serde::{Deserialize, Serialize};

use super::CodecError;

#[derive(Debug, Clone, PartialEq)]
pub struct EmotetPublicKey {
    inner: RsaPublicKey,
}

#[derive(Debug, Clone)]
pub struct EmotetPrivateKey {
    inner: RsaPrivateKey,
}

#[derive(Debug, Clone)]
pub struct EmotetKeyPair {
    pub public: EmotetPublicKey,
    pub private: EmotetPrivateKey,
}

/// Hex-component key files; see `docs/formats.md`.
#[derive(Debug, Serialize, Deserialize)]
struct PublicKeyFile {
    n: String,
    e: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct PrivateKeyFile {
    n: String,
    e: String,
    d: String,
    primes: Vec<String>,
}

impl EmotetKeyPair {
    /// Deterministic keypair generation from a seed.
    pub fn generate(bits: usize, seed: u64) -> Result<EmotetKeyPair, CodecError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let private =
            RsaPrivateKey::new(&mut rng, bits).map_err(|e| CodecError::Rsa(e.to_string()))?;
        let public = RsaPublicKey::from(&private);
        Ok(EmotetKeyPair {
            public: EmotetPublicKey { inner: public },
            private: EmotetPrivateKey { inner: private },
        })
    }
}

impl EmotetPublicKey {
    pub fn to_json(&self) -> String {
        let file = PublicKeyFile {
            n: self.inner.n().to_str_radix(16),
            e: self.inner.e().to_str_radix(16),
        };
        serde_json::to_string_pretty(&file).expect("key file serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, CodecError> {
        let file: PublicKeyFile =
            serde_json::from_str(json).map_err(|e| CodecError::Rsa(e.to_string()))?;
        let inner = RsaPublicKey::new(parse_hex(&file.n)?, parse_hex(&file.e)?)
            .map_err(|e| CodecError::Rsa(e.to_string()))?;
        Ok(EmotetPublicKey { inner })
    }
}

impl EmotetPrivateKey {
    pub fn to_json(&self) -> String {
        let file = PrivateKeyFile {
            n: self.inner.n().to_str_radix(16),
            e: self.inner.e().to_str_radix(16),
            d: self.inner.d().to_str_radix(16),
            primes: self
                .inner
                .primes()
                .iter()
                .map(|p| p.to_str_radix(16))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("key file serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, CodecError> {
        let file: PrivateKeyFile =
            serde_json::from_str(json).map_err(|e| CodecError::Rsa(e.to_string()))?;
        let primes = file
            .primes
            .iter()
            .map(|p| parse_hex(p))
            .collect::<Result<Vec<_>, _>>()?;
        let inner = RsaPrivateKey::from_components(
            parse_hex(&file.n)?,
            parse_hex(&file.e)?,
            parse_hex(&file.d)?,
            primes,
        )
        .map_err(|e| CodecError::Rsa(e.to_string()))?;
        Ok(EmotetPrivateKey { inner })
    }

    pub fn public(&self) -> EmotetPublicKey {
        EmotetPublicKey {
            inner: RsaPublicKey::from(&self.inner),
        }
    }
}

fn parse_hex(s: &str) -> Result<BigUint, CodecError> {
    BigUint::parse_bytes(s.as_bytes(), 16)
        .ok_or_else(|| CodecError::Rsa(format!("invalid hex integer `{s}`")))
}

/// Seals `payload` under a 16-byte session key and the campaign public key
/// into a cookie-safe Base64 token.
pub fn emotet_seal(
    rsa_public: &EmotetPublicKey,
    session_key: &[u8],
    payload: &[u8],
) -> Result<String, CodecError> {
    if session_key.len() != 16 {
        return Err(CodecError::BadKeyLength {
            expected: 16,
            got: session_key.len(),
        });
    }
    if payload.is_empty() {
        return Err(CodecError::EmptyPayload);
    }

    // Deterministic padding entropy: seal is a pure function of its inputs.
    let mut rng = ChaCha20Rng::from_seed(derive_seed(&[
        session_key,
        payload,
        &rsa_public.inner.n().to_bytes_be(),
    ]));
    let wrapped = rsa_public
        .inner
        .encrypt(&mut rng, Pkcs1v15Encrypt, session_key)
        .map_err(|e| CodecError::Rsa(e.to_string()))?;

    let mut data = pkcs7_pad(payload);
    let cipher = Aes128::new(GenericArray::from_slice(session_key));
    for block in data.chunks_mut(16) {
        cipher.encrypt_block(GenericArray::from_mut_slice(block));
    }

    let mut blob = Vec::with_capacity(2 + wrapped.len() + data.len());
    blob.extend_from_slice(&(wrapped.len() as u16).to_be_bytes());
    blob.extend_from_slice(&wrapped);
    blob.extend_from_slice(&data);
    Ok(BASE64.encode(&blob))
}

/// Opens a sealed cookie value with the matching private key.
pub fn emotet_open(
    rsa_private: &EmotetPrivateKey,
    cookie_value: &str,
) -> Result<Vec<u8>, CodecError> {
    let blob = BASE64.decode(cookie_value.trim())?;
    if blob.len() < 2 {
        return Err(CodecError::TruncatedEnvelope);
    }
    let wrapped_len = u16::from_be_bytes([blob[0], blob[1]]) as usize;
    if blob.len() < 2 + wrapped_len {
        return Err(CodecError::TruncatedEnvelope);
    }
    let (wrapped, ct) = blob[2..].split_at(wrapped_len);
    if ct.is_empty() || ct.len() % 16 != 0 {
        return Err(CodecError::BadCiphertextLength(ct.len()));
    }

    let session_key = rsa_private
        .inner
        .decrypt(Pkcs1v15Encrypt, wrapped)
        .map_err(|_| CodecError::KeyUnwrap)?;
    if session_key.len() != 16 {
        return Err(CodecError::KeyUnwrap);
    }

    let mut data = ct.to_vec();
    let cipher = Aes128::new(GenericArray::from_slice(&session_key));
    for block in data.chunks_mut(16) {
        cipher.decrypt_block(GenericArray::from_mut_slice(block));
    }
    pkcs7_unpad(&mut data)?;
    Ok(data)
}

fn pkcs7_pad(data: &[u8]) -> Vec<u8> {
    let pad = 16 - data.len() % 16;
    let mut out = data.to_vec();
    out.resize(data.len() + pad, pad as u8);
    out
}

fn pkcs7_unpad(data: &mut Vec<u8>) -> Result<(), CodecError> {
    let pad = *data.last().ok_or(CodecError::BadPadding)? as usize;
    if pad == 0 || pad > 16 || pad > data.len() {
        return Err(CodecError::BadPadding);
    }
    if data[data.len() - pad..].iter().any(|&b| b as usize != pad) {
        return Err(CodecError::BadPadding);
    }
    data.truncate(data.len() - pad);
    Ok(())
}

fn derive_seed(parts: &[&[u8]]) -> [u8; 32] {
    // FNV-1a chained with a lane counter; enough to diversify padding.
    let mut seed = [0u8; 32];
    for lane in 0u64..4 {
        let mut h: u64 = 0xcbf29ce484222325 ^ lane.wrapping_mul(0x9e3779b97f4a7c15);
        for part in parts {
            for &b in *part {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
            h ^= 0xff;
            h = h.wrapping_mul(0x100000001b3);
        }
        seed[(lane as usize) * 8..(lane as usize + 1) * 8].copy_from_slice(&h.to_le_bytes());
    }
    seed
}
