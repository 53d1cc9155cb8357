//! Symmetric building blocks: hashing, keyed hashing, authenticated
//! encryption, and the two key-derivation shapes used elsewhere.
//!
//! Algorithms are fixed (SHA-256, HMAC-SHA-256, AES-128-GCM) and every
//! derivation is domain-separated by an explicit label, so transcripts are
//! stable across versions and platforms.

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes128Gcm, Nonce};
use hmac::{Hmac, Mac};
use sha2::{Digest, Sha256};

pub const HASH_LEN: usize = 32;
pub const SYM_KEY_LEN: usize = 16;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;

/// SHA-256.
pub fn hash(data: &[u8]) -> [u8; HASH_LEN] {
    Sha256::digest(data).into()
}

/// SHA-256 over a label and each part, length-prefixed, so concatenation
/// ambiguity cannot arise.
pub fn hash_parts(label: &str, parts: &[&[u8]]) -> [u8; HASH_LEN] {
    let mut h = Sha256::new();
    h.update((label.len() as u32).to_be_bytes());
    h.update(label.as_bytes());
    for part in parts {
        h.update((part.len() as u32).to_be_bytes());
        h.update(part);
    }
    h.finalize().into()
}

/// HMAC-SHA-256.
pub fn keyed_hash(key: &[u8], data: &[u8]) -> [u8; HASH_LEN] {
    let mut mac =
        <Hmac<Sha256> as Mac>::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(data);
    mac.finalize().into_bytes().into()
}

pub fn keyed_hash_verify(key: &[u8], data: &[u8], tag: &[u8]) -> bool {
    let mut mac =
        <Hmac<Sha256> as Mac>::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(data);
    mac.verify_slice(tag).is_ok()
}

/// Authenticated encryption failure (wrong key, wrong nonce, or tampering;
/// deliberately indistinguishable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AeadError;

impl std::fmt::Display for AeadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "authenticated decryption failed")
    }
}

impl std::error::Error for AeadError {}

/// AES-128-GCM. Output is nonce || ciphertext || tag.
pub fn aead_encrypt(
    key: &[u8; SYM_KEY_LEN],
    nonce: &[u8; NONCE_LEN],
    plaintext: &[u8],
    associated: &[u8],
) -> Vec<u8> {
    let cipher = Aes128Gcm::new(key.into());
    let sealed = cipher
        .encrypt(
            Nonce::from_slice(nonce),
            Payload {
                msg: plaintext,
                aad: associated,
            },
        )
        .expect("AES-GCM encryption is infallible for in-memory buffers");
    let mut out = Vec::with_capacity(NONCE_LEN + sealed.len());
    out.extend_from_slice(nonce);
    out.extend_from_slice(&sealed);
    out
}

pub fn aead_decrypt(
    key: &[u8; SYM_KEY_LEN],
    sealed: &[u8],
    associated: &[u8],
) -> Result<Vec<u8>, AeadError> {
    if sealed.len() < NONCE_LEN + TAG_LEN {
        return Err(AeadError);
    }
    let (nonce, body) = sealed.split_at(NONCE_LEN);
    let cipher = Aes128Gcm::new(key.into());
    cipher
        .decrypt(
            Nonce::from_slice(nonce),
            Payload {
                msg: body,
                aad: associated,
            },
        )
        .map_err(|_| AeadError)
}

/// Derives `out.len()` bytes from input material under a label, by counter
/// expansion of SHA-256.
pub fn kdf(label: &str, material: &[u8], out: &mut [u8]) {
    let mut counter = 0u32;
    for chunk in out.chunks_mut(HASH_LEN) {
        let mut h = Sha256::new();
        h.update(b"lpki.kdf.v1\x00");
        h.update((label.len() as u32).to_be_bytes());
        h.update(label.as_bytes());
        h.update(counter.to_be_bytes());
        h.update(material);
        let block: [u8; 32] = h.finalize().into();
        chunk.copy_from_slice(&block[..chunk.len()]);
        counter += 1;
    }
}

/// Iterated, salted key stretching for low-entropy secrets such as card
/// activation codes. `iterations` is fixed by callers at 10_000.
pub fn stretch_secret(secret: &[u8], salt: &[u8; 16], iterations: u32) -> [u8; SYM_KEY_LEN] {
    let mut h = Sha256::new();
    h.update(b"lpki.stretch.v1\x00");
    h.update(salt);
    h.update(secret);
    let mut state: [u8; HASH_LEN] = h.finalize().into();
    for i in 0..iterations {
        let mut h = Sha256::new();
        h.update(state);
        h.update(i.to_be_bytes());
        h.update(salt);
        state = h.finalize().into();
    }
    let mut out = [0u8; SYM_KEY_LEN];
    out.copy_from_slice(&state[..SYM_KEY_LEN]);
    out
}
