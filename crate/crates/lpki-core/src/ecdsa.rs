//! Nonce-based digital signatures over the curve layer (the classic
//! x-coordinate scheme). Signing costs one scalar multiplication,
//! verification two; certificates, revocation tokens and validation
//! reports are all signed with this.

use crate::codec::DecodeError;
use crate::ec::{DomainParameters, ECPoint, KeyGenError};
use crate::primitives::hash;
use crate::rng::RandomSource;
use crate::uint::U256;

/// (r, s) pair, both nonzero scalars mod n.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Signature {
    pub r: U256,
    pub s: U256,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SignError {
    KeyGen(KeyGenError),
    /// Every nonce attempt produced r = 0 or s = 0.
    RetriesExhausted,
}

impl std::fmt::Display for SignError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SignError::KeyGen(e) => write!(f, "{e}"),
            SignError::RetriesExhausted => write!(f, "signing retries exhausted"),
        }
    }
}

impl std::error::Error for SignError {}

impl From<KeyGenError> for SignError {
    fn from(e: KeyGenError) -> Self {
        SignError::KeyGen(e)
    }
}

const MAX_SIGN_RETRIES: usize = 16;

/// Message digest reduced into the scalar field.
fn digest_scalar(params: &DomainParameters, msg: &[u8]) -> U256 {
    U256::from_be_bytes(&hash(msg)).expect("32 bytes").rem(&params.n)
}

/// Signs `msg` with `sk`. One scalar multiplication per attempt; attempts
/// beyond the first only happen when r or s collapses to zero.
pub fn sign(
    params: &DomainParameters,
    sk: &U256,
    msg: &[u8],
    rng: &mut dyn RandomSource,
) -> Result<Signature, SignError> {
    let e = digest_scalar(params, msg);
    for _ in 0..MAX_SIGN_RETRIES {
        let k = params.random_scalar(rng)?;
        let point = params.scalar_mult(&k, &params.g);
        let (x, _) = point.coords().expect("k in [1, n-1] cannot reach infinity");
        let r = x.rem(&params.n);
        if r.is_zero() {
            continue;
        }
        let k_inv = k.inv_mod(&params.n).expect("k nonzero, n prime");
        let s = k_inv.mul_mod(&e.add_mod(&r.mul_mod(sk, &params.n), &params.n), &params.n);
        if s.is_zero() {
            continue;
        }
        return Ok(Signature { r, s });
    }
    Err(SignError::RetriesExhausted)
}

/// Verifies in exactly two scalar multiplications.
pub fn verify(params: &DomainParameters, pk: &ECPoint, msg: &[u8], sig: &Signature) -> bool {
    let in_range = |v: &U256| !v.is_zero() && v < &params.n;
    if !in_range(&sig.r) || !in_range(&sig.s) {
        return false;
    }
    let e = digest_scalar(params, msg);
    let w = sig.s.inv_mod(&params.n).expect("s in [1, n-1], n prime");
    let u1 = e.mul_mod(&w, &params.n);
    let u2 = sig.r.mul_mod(&w, &params.n);
    let point = params.point_add(
        &params.scalar_mult(&u1, &params.g),
        &params.scalar_mult(&u2, pk),
    );
    match point.coords() {
        None => false,
        Some((x, _)) => x.rem(&params.n) == sig.r,
    }
}

impl Signature {
    /// r then s, each in `scalar_len` big-endian bytes.
    pub fn encode(&self, params: &DomainParameters) -> Vec<u8> {
        let w = params.scalar_len();
        let mut out = self.r.to_be_bytes_sized(w);
        out.extend_from_slice(&self.s.to_be_bytes_sized(w));
        out
    }

    pub fn decode(params: &DomainParameters, bytes: &[u8]) -> Result<Signature, DecodeError> {
        let w = params.scalar_len();
        if bytes.len() != 2 * w {
            return Err(DecodeError::new(format!(
                "signature must be {} bytes, got {}",
                2 * w,
                bytes.len()
            )));
        }
        let r = U256::from_be_bytes(&bytes[..w]).expect("w <= 32");
        let s = U256::from_be_bytes(&bytes[w..]).expect("w <= 32");
        Ok(Signature { r, s })
    }
}
