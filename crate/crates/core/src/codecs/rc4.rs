//! RC4 stream cipher (KSA + PRGA). Encryption and decryption are the same
//! operation, which the Zeus codec relies on.

use super::CodecError;

/// Applies the RC4 keystream for `key` to `data`. Involutive:
/// `rc4(k, rc4(k, m)) == m`.
pub fn rc4(key: &[u8], data: &[u8]) -> Result<Vec<u8>, CodecError> {
    if key.is_empty() {
        return Err(CodecError::EmptyKey);
    }
    let mut s: [u8; 256] = [0; 256];
    for (i, v) in s.iter_mut().enumerate() {
        *v = i as u8;
    }
    let mut j: u8 = 0;
    for i in 0..256 {
        j = j
            .wrapping_add(s[i])
            .wrapping_add(key[i % key.len()]);
        s.swap(i, j as usize);
    }

    let mut out = Vec::with_capacity(data.len());
    let (mut i, mut j) = (0u8, 0u8);
    for &byte in data {
        i = i.wrapping_add(1);
        j = j.wrapping_add(s[i as usize]);
        s.swap(i as usize, j as usize);
        let k = s[(s[i as usize].wrapping_add(s[j as usize])) as usize];
        out.push(byte ^ k);
    }
    Ok(out)
}
