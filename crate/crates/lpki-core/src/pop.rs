//! Proof of possession of a private key, used when a subscriber generates
//! their own keypair and the certification authority must check the
//! registrant really holds the private half.
//!
//! The proof is a Schnorr identification transcript made non-interactive
//! over a caller-supplied context string (registration id, authority name,
//! parameter digest). Crucially, verifying the transcript does NOT
//! establish that the claimed public key lies on the curve: a point of
//! small order under the shared addition formulas admits a forged
//! transcript, built here by [`forge_for_small_order_point`] so tests and
//! demos can show exactly what skipping key validation costs.

use crate::ec::{DomainParameters, ECPoint, ForeignPoint, KeyGenError};
use crate::primitives::hash_parts;
use crate::rng::RandomSource;
use crate::uint::U256;

/// Non-interactive Schnorr transcript (commitment, response).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PossessionProof {
    pub commitment: ECPoint,
    pub response: U256,
}

fn challenge(
    params: &DomainParameters,
    commitment: &ECPoint,
    pk: &ECPoint,
    context: &[u8],
) -> U256 {
    let digest = hash_parts(
        "lpki.pop.challenge",
        &[
            &params.digest(),
            &params.compress(commitment),
            &params.compress(pk),
            context,
        ],
    );
    U256::from_be_bytes(&digest).expect("32 bytes").rem(&params.n)
}

/// Proves possession of `sk` for `pk`; one scalar multiplication.
pub fn prove_possession(
    params: &DomainParameters,
    sk: &U256,
    pk: &ECPoint,
    context: &[u8],
    rng: &mut dyn RandomSource,
) -> Result<PossessionProof, KeyGenError> {
    let t = params.random_scalar(rng)?;
    let commitment = params.scalar_mult(&t, &params.g);
    let ch = challenge(params, &commitment, pk, context);
    let response = t.add_mod(&ch.mul_mod(&sk.rem(&params.n), &params.n), &params.n);
    Ok(PossessionProof {
        commitment,
        response,
    })
}

/// Checks z*G = T + ch*PK in two scalar multiplications.
///
/// This deliberately performs no structural validation of `pk`; whether a
/// candidate key is a legitimate group element is a separate question
/// answered by [`DomainParameters::validate_public_key`], and the
/// certification layer decides whether to ask it.
pub fn verify_possession(
    params: &DomainParameters,
    pk: &ECPoint,
    proof: &PossessionProof,
    context: &[u8],
) -> bool {
    if proof.response >= params.n {
        return false;
    }
    let ch = challenge(params, &proof.commitment, pk, context);
    let lhs = params.scalar_mult(&proof.response, &params.g);
    let rhs = params.point_add(&proof.commitment, &params.scalar_mult(&ch, pk));
    lhs == rhs
}

/// Forges a transcript for a point of small order l without knowing any
/// discrete log: grind commitments T = t*G until the challenge is
/// divisible by l, so ch * point vanishes and z = t closes the equation.
/// Expected l attempts; gives up after `max_attempts`.
pub fn forge_for_small_order_point(
    params: &DomainParameters,
    foreign: &ForeignPoint,
    context: &[u8],
    max_attempts: u64,
) -> Option<PossessionProof> {
    let order = U256::from_u64(foreign.order);
    for t in 1..=max_attempts {
        let t_scalar = U256::from_u64(t).rem(&params.n);
        if t_scalar.is_zero() {
            continue;
        }
        let commitment = params.scalar_mult(&t_scalar, &params.g);
        let ch = challenge(params, &commitment, &foreign.point, context);
        if ch.rem(&order).is_zero() {
            return Some(PossessionProof {
                commitment,
                response: t_scalar,
            });
        }
    }
    None
}
