//! Two-party authenticated key agreement in the MQV family, used for the
//! private enrollment channel between a subscriber and the key generation
//! server.
//!
//! Both sides combine a static identity key with a fresh ephemeral key.
//! The combining exponents d and e come from truncated hashes binding
//! each ephemeral to the peer identity, so neither side can steer the
//! session key alone. Peer keys, static and ephemeral, are structurally
//! validated before any secret-dependent arithmetic; refusal happens
//! first, which the tests check by metering.

use crate::ec::{DomainParameters, ECPoint, PublicKeyFlaw};
use crate::primitives::{hash_parts, kdf};
use crate::uint::U256;

pub const SESSION_KEY_LEN: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Role {
    Initiator,
    Responder,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AgreementError {
    /// A peer key failed validation; nothing was derived.
    PeerStaticKey(PublicKeyFlaw),
    PeerEphemeralKey(PublicKeyFlaw),
    /// The combined secret degenerated to the identity point.
    DegenerateSession,
}

impl std::fmt::Display for AgreementError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AgreementError::PeerStaticKey(flaw) => write!(f, "peer static key rejected: {flaw}"),
            AgreementError::PeerEphemeralKey(flaw) => {
                write!(f, "peer ephemeral key rejected: {flaw}")
            }
            AgreementError::DegenerateSession => write!(f, "session secret degenerated"),
        }
    }
}

impl std::error::Error for AgreementError {}

/// Truncated hash: the top half of SHA-256, reduced mod n.
fn combine_exponent(params: &DomainParameters, eph: &ECPoint, peer_id: &str) -> U256 {
    let digest = hash_parts(
        "lpki.akex.exponent",
        &[&params.digest(), &params.compress(eph), peer_id.as_bytes()],
    );
    U256::from_be_bytes(&digest[..16]).expect("16 bytes").rem(&params.n)
}

/// One party's view of a session.
pub struct SessionInputs<'a> {
    pub params: &'a DomainParameters,
    pub role: Role,
    pub my_id: &'a str,
    pub peer_id: &'a str,
    pub my_static_sk: &'a U256,
    pub my_ephemeral_sk: &'a U256,
    pub my_ephemeral_pk: &'a ECPoint,
    pub peer_static_pk: &'a ECPoint,
    pub peer_ephemeral_pk: &'a ECPoint,
}

/// Derives the shared session key. Two scalar multiplications after the
/// ephemerals exist (three per party including ephemeral generation).
pub fn derive_session_key(inputs: &SessionInputs<'_>) -> Result<[u8; SESSION_KEY_LEN], AgreementError> {
    let params = inputs.params;
    params
        .validate_public_key(inputs.peer_static_pk)
        .map_err(AgreementError::PeerStaticKey)?;
    params
        .validate_public_key(inputs.peer_ephemeral_pk)
        .map_err(AgreementError::PeerEphemeralKey)?;

    // d binds the initiator ephemeral to the responder identity, e the
    // responder ephemeral to the initiator identity.
    let (initiator_id, responder_id) = match inputs.role {
        Role::Initiator => (inputs.my_id, inputs.peer_id),
        Role::Responder => (inputs.peer_id, inputs.my_id),
    };
    let (d, e) = match inputs.role {
        Role::Initiator => (
            combine_exponent(params, inputs.my_ephemeral_pk, responder_id),
            combine_exponent(params, inputs.peer_ephemeral_pk, initiator_id),
        ),
        Role::Responder => (
            combine_exponent(params, inputs.peer_ephemeral_pk, responder_id),
            combine_exponent(params, inputs.my_ephemeral_pk, initiator_id),
        ),
    };
    let (my_exp_hash, peer_exp_hash) = match inputs.role {
        Role::Initiator => (d, e),
        Role::Responder => (e, d),
    };
    // sigma = (eph + h*static) * (PeerEph + peerh*PeerStatic).
    let scalar = inputs
        .my_ephemeral_sk
        .rem(&params.n)
        .add_mod(
            &my_exp_hash.mul_mod(&inputs.my_static_sk.rem(&params.n), &params.n),
            &params.n,
        );
    let peer_combined = params.point_add(
        inputs.peer_ephemeral_pk,
        &params.scalar_mult(&peer_exp_hash, inputs.peer_static_pk),
    );
    let sigma = params.scalar_mult(&scalar, &peer_combined);
    if sigma.is_infinity() {
        return Err(AgreementError::DegenerateSession);
    }
    let mut material = params.compress(&sigma);
    material.extend_from_slice(&hash_parts(
        "lpki.akex.binding",
        &[initiator_id.as_bytes(), responder_id.as_bytes()],
    ));
    let mut key = [0u8; SESSION_KEY_LEN];
    kdf("lpki.akex.session", &material, &mut key);
    Ok(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::CostMeter;
    use crate::rng::CounterDrbg;

    struct Party {
        id: String,
        static_sk: U256,
        static_pk: ECPoint,
        eph_sk: U256,
        eph_pk: ECPoint,
    }

    fn make_party(params: &DomainParameters, id: &str, rng: &mut CounterDrbg) -> Party {
        let (static_sk, static_pk) = params.generate_keypair(rng).unwrap();
        let (eph_sk, eph_pk) = params.generate_keypair(rng).unwrap();
        Party {
            id: id.into(),
            static_sk,
            static_pk,
            eph_sk,
            eph_pk,
        }
    }

    fn run_both(params: &DomainParameters, a: &Party, b: &Party) -> ([u8; 32], [u8; 32]) {
        let ka = derive_session_key(&SessionInputs {
            params,
            role: Role::Initiator,
            my_id: &a.id,
            peer_id: &b.id,
            my_static_sk: &a.static_sk,
            my_ephemeral_sk: &a.eph_sk,
            my_ephemeral_pk: &a.eph_pk,
            peer_static_pk: &b.static_pk,
            peer_ephemeral_pk: &b.eph_pk,
        })
        .unwrap();
        let kb = derive_session_key(&SessionInputs {
            params,
            role: Role::Responder,
            my_id: &b.id,
            peer_id: &a.id,
            my_static_sk: &b.static_sk,
            my_ephemeral_sk: &b.eph_sk,
            my_ephemeral_pk: &b.eph_pk,
            peer_static_pk: &a.static_pk,
            peer_ephemeral_pk: &a.eph_pk,
        })
        .unwrap();
        (ka, kb)
    }

    #[test]
    fn both_sides_agree() {
        for (params, seed) in [(DomainParameters::toy17(), 31), (DomainParameters::p256(), 32)] {
            let mut rng = CounterDrbg::new(seed);
            let a = make_party(&params, "alice", &mut rng);
            let b = make_party(&params, "kgs", &mut rng);
            let (ka, kb) = run_both(&params, &a, &b);
            assert_eq!(ka, kb);
        }
    }

    #[test]
    fn sessions_differ_across_ephemerals_and_ids() {
        let params = DomainParameters::p256();
        let mut rng = CounterDrbg::new(33);
        let a = make_party(&params, "alice", &mut rng);
        let b = make_party(&params, "kgs", &mut rng);
        let (k1, _) = run_both(&params, &a, &b);

        // New ephemerals, same statics: different key.
        let mut a2 = Party {
            id: a.id.clone(),
            static_sk: a.static_sk,
            static_pk: a.static_pk,
            eph_sk: a.eph_sk,
            eph_pk: a.eph_pk,
        };
        let (eph_sk, eph_pk) = params.generate_keypair(&mut rng).unwrap();
        a2.eph_sk = eph_sk;
        a2.eph_pk = eph_pk;
        let (k2, k2b) = run_both(&params, &a2, &b);
        assert_eq!(k2, k2b);
        assert_ne!(k1, k2);

        // Same keys, different claimed identity: different key.
        let renamed = Party {
            id: "allison".into(),
            ..Party {
                id: a.id.clone(),
                static_sk: a.static_sk,
                static_pk: a.static_pk,
                eph_sk: a.eph_sk,
                eph_pk: a.eph_pk,
            }
        };
        let ka = derive_session_key(&SessionInputs {
            params: &params,
            role: Role::Initiator,
            my_id: &renamed.id,
            peer_id: &b.id,
            my_static_sk: &renamed.static_sk,
            my_ephemeral_sk: &renamed.eph_sk,
            my_ephemeral_pk: &renamed.eph_pk,
            peer_static_pk: &b.static_pk,
            peer_ephemeral_pk: &b.eph_pk,
        })
        .unwrap();
        assert_ne!(ka, k1);
    }

    #[test]
    fn peer_keys_validated_before_any_derivation_work() {
        let params = DomainParameters::p256();
        let mut rng = CounterDrbg::new(34);
        let a = make_party(&params, "alice", &mut rng);
        let b = make_party(&params, "kgs", &mut rng);

        let meter = CostMeter::start();
        let err = derive_session_key(&SessionInputs {
            params: &params,
            role: Role::Initiator,
            my_id: &a.id,
            peer_id: &b.id,
            my_static_sk: &a.static_sk,
            my_ephemeral_sk: &a.eph_sk,
            my_ephemeral_pk: &a.eph_pk,
            peer_static_pk: &b.static_pk,
            peer_ephemeral_pk: &ECPoint::Infinity,
        })
        .unwrap_err();
        assert_eq!(err, AgreementError::PeerEphemeralKey(PublicKeyFlaw::AtInfinity));
        assert_eq!(meter.reading(), 0, "refusal costs no multiplications");

        let off_curve = ECPoint::affine(U256::from_u64(1), U256::from_u64(1));
        assert!(!params.is_on_curve(&off_curve));
        let err = derive_session_key(&SessionInputs {
            params: &params,
            role: Role::Responder,
            my_id: &b.id,
            peer_id: &a.id,
            my_static_sk: &b.static_sk,
            my_ephemeral_sk: &b.eph_sk,
            my_ephemeral_pk: &b.eph_pk,
            peer_static_pk: &off_curve,
            peer_ephemeral_pk: &a.eph_pk,
        })
        .unwrap_err();
        assert_eq!(err, AgreementError::PeerStaticKey(PublicKeyFlaw::OffCurve));
    }

    #[test]
    fn cost_contract_two_mults_per_derivation() {
        let params = DomainParameters::p256();
        let mut rng = CounterDrbg::new(35);
        let a = make_party(&params, "alice", &mut rng);
        let b = make_party(&params, "kgs", &mut rng);
        let meter = CostMeter::start();
        let _ = derive_session_key(&SessionInputs {
            params: &params,
            role: Role::Initiator,
            my_id: &a.id,
            peer_id: &b.id,
            my_static_sk: &a.static_sk,
            my_ephemeral_sk: &a.eph_sk,
            my_ephemeral_pk: &a.eph_pk,
            peer_static_pk: &b.static_pk,
            peer_ephemeral_pk: &b.eph_pk,
        })
        .unwrap();
        assert_eq!(meter.reading(), 2);
    }

    #[test]
    fn degenerate_session_is_refused() {
        // Search the toy group for an (ephemeral, static) pair whose
        // combined exponent vanishes, making sigma the identity.
        let params = DomainParameters::toy17();
        let mut rng = CounterDrbg::new(36);
        let b = make_party(&params, "kgs", &mut rng);
        let mut hit = None;
        'outer: for static_sk in 1u64..19 {
            for eph_sk in 1u64..19 {
                let eph_pk = params.scalar_mult(&U256::from_u64(eph_sk), &params.g);
                let d = combine_exponent(&params, &eph_pk, "kgs");
                let total = U256::from_u64(eph_sk)
                    .add_mod(&d.mul_mod(&U256::from_u64(static_sk), &params.n), &params.n);
                if total.is_zero() {
                    hit = Some((static_sk, eph_sk, eph_pk));
                    break 'outer;
                }
            }
        }
        let (static_sk, eph_sk, eph_pk) = hit.expect("19^2 search space contains a zero");
        let static_pk = params.scalar_mult(&U256::from_u64(static_sk), &params.g);
        let _ = static_pk;
        let err = derive_session_key(&SessionInputs {
            params: &params,
            role: Role::Initiator,
            my_id: "alice",
            peer_id: "kgs",
            my_static_sk: &U256::from_u64(static_sk),
            my_ephemeral_sk: &U256::from_u64(eph_sk),
            my_ephemeral_pk: &eph_pk,
            peer_static_pk: &b.static_pk,
            peer_ephemeral_pk: &b.eph_pk,
        })
        .unwrap_err();
        assert_eq!(err, AgreementError::DegenerateSession);
    }
}
