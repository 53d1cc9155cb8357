//! The comparison scheme for the benchmark: classic sign-then-encrypt.
//!
//! Sign with the sender's static key, then encrypt signature and message
//! under an ephemeral Diffie-Hellman agreement — the standard composition
//! a combined signcryption scheme is measured against. Component costs in
//! scalar multiplications: sender sign 1 + ephemeral key 1 + agreement 1
//! = 3; recipient agreement 1 + verify 2 = 3; six in total per message,
//! against three for signcryption.

use anyhow::{anyhow, bail, Result};
use lpki_core::ec::{DomainParameters, ECPoint};
use lpki_core::ecdsa::{self, Signature};
use lpki_core::primitives::{aead_decrypt, aead_encrypt, kdf, NONCE_LEN, SYM_KEY_LEN};
use lpki_core::rng::RandomSource;
use lpki_core::uint::U256;

pub struct SignedEnvelope {
    /// Compressed ephemeral public point.
    pub ephemeral: Vec<u8>,
    /// AEAD over signature || message.
    pub sealed: Vec<u8>,
}

fn derive_key(params: &DomainParameters, shared: &ECPoint) -> ([u8; SYM_KEY_LEN], [u8; NONCE_LEN]) {
    let encoded = params.compress(shared);
    let mut key = [0u8; SYM_KEY_LEN];
    let mut nonce = [0u8; NONCE_LEN];
    kdf("bench.baseline.key", &encoded, &mut key);
    kdf("bench.baseline.nonce", &encoded, &mut nonce);
    (key, nonce)
}

pub fn sign_then_encrypt(
    params: &DomainParameters,
    sk_sender: &U256,
    pk_recipient: &ECPoint,
    msg: &[u8],
    rng: &mut dyn RandomSource,
) -> Result<SignedEnvelope> {
    let sig = ecdsa::sign(params, sk_sender, msg, rng).map_err(|e| anyhow!("{e}"))?;
    let (eph_sk, eph_pk) = params.generate_keypair(rng).map_err(|e| anyhow!("{e}"))?;
    let shared = params.scalar_mult(&eph_sk, pk_recipient);
    let (key, nonce) = derive_key(params, &shared);
    let mut payload = Vec::new();
    payload.extend_from_slice(&sig.r.to_be_bytes_sized(params.scalar_len()));
    payload.extend_from_slice(&sig.s.to_be_bytes_sized(params.scalar_len()));
    payload.extend_from_slice(msg);
    Ok(SignedEnvelope {
        ephemeral: params.compress(&eph_pk),
        sealed: aead_encrypt(&key, &nonce, &payload, b""),
    })
}

pub fn decrypt_then_verify(
    params: &DomainParameters,
    sk_recipient: &U256,
    pk_sender: &ECPoint,
    envelope: &SignedEnvelope,
) -> Result<Vec<u8>> {
    let eph_pk = params
        .decompress(&envelope.ephemeral)
        .map_err(|e| anyhow!("ephemeral point: {e}"))?;
    let shared = params.scalar_mult(sk_recipient, &eph_pk);
    let (key, _) = derive_key(params, &shared);
    let payload = aead_decrypt(&key, &envelope.sealed, b"").map_err(|e| anyhow!("{e}"))?;
    let sig_len = 2 * params.scalar_len();
    if payload.len() < sig_len {
        bail!("payload shorter than a signature");
    }
    let (sig_bytes, msg) = payload.split_at(sig_len);
    let (r, s) = sig_bytes.split_at(params.scalar_len());
    let sig = Signature {
        r: U256::from_be_bytes(r).map_err(|e| anyhow!("{e}"))?,
        s: U256::from_be_bytes(s).map_err(|e| anyhow!("{e}"))?,
    };
    if !ecdsa::verify(params, pk_sender, msg, &sig) {
        bail!("signature did not verify");
    }
    Ok(msg.to_vec())
}

/// Bytes the baseline adds beyond the shared symmetric layer: one
/// compressed ephemeral point plus a two-scalar signature.
pub fn overhead_bytes(params: &DomainParameters) -> usize {
    (params.field_len() + 1) + 2 * params.scalar_len()
}
