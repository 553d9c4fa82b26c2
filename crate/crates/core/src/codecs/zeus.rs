//! Zeus wire sealing: a byte-chaining XOR pass ("visual encryption")
//! followed by RC4 under the per-botnet key.

use super::rc4::rc4;
use super::CodecError;

/// Byte-chaining XOR: `out[0] = in[0]`, `out[i] = in[i] ^ in[i-1]`.
pub fn zeus_visual_encode(data: &[u8]) -> Vec<u8> {
    let mut out = data.to_vec();
    for i in 1..out.len() {
        out[i] = data[i] ^ data[i - 1];
    }
    out
}

/// Exact inverse of [`zeus_visual_encode`].
pub fn zeus_visual_decode(data: &[u8]) -> Vec<u8> {
    let mut out = data.to_vec();
    for i in 1..out.len() {
        out[i] = data[i] ^ out[i - 1];
    }
    out
}

/// Seals a payload for the wire: visual-encode, then RC4.
pub fn zeus_seal(key: &[u8], payload: &[u8]) -> Result<Vec<u8>, CodecError> {
    rc4(key, &zeus_visual_encode(payload))
}

/// Opens a sealed blob. There is no integrity tag in this format; a
/// truncated or corrupted blob decodes to garbage rather than an error.
pub fn zeus_open(key: &[u8], blob: &[u8]) -> Result<Vec<u8>, CodecError> {
    Ok(zeus_visual_decode(&rc4(key, blob)?))
}
