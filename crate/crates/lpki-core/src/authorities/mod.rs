//! The authority cast: registration, certification (with its status
//! responder), key generation, delegated validation, and timestamping.
//!
//! Everything is plain in-process state plus explicit `now` arguments;
//! nothing reads a wall clock. The shared [`validate_certificate`] here is
//! the one full validation pipeline every consumer runs, whether that
//! consumer is an end entity doing its own checking or the validation
//! authority doing it on everyone's behalf.

pub mod ca;
pub mod kgs;
pub mod ra;
pub mod ts;
pub mod va;

use crate::cert::{Certificate, CERT_VERSION, EXT_PARAMS_DIGEST};
use crate::ec::{DomainParameters, ECPoint, PublicKeyFlaw};
use crate::ocsp::{CertStatus, OcspToken};

/// Why a certificate was rejected, in check order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CertValidationError {
    WrongVersion(u8),
    BadSignature,
    NotYetValid { not_before: u64, now: u64 },
    Expired { not_after: u64, now: u64 },
    /// Missing or mismatched parameter-set digest extension.
    ParameterMismatch,
    SubjectKeyUndecodable,
    SubjectKeyInvalid(PublicKeyFlaw),
    /// Revocation status required but not supplied.
    StatusMissing,
    /// Status token signature did not verify under the issuer key.
    StatusUntrusted,
    /// Status token speaks about a different serial.
    StatusWrongSerial,
    /// Status token outside its freshness window.
    StatusStale,
    /// Issuer does not know this serial.
    StatusUnknownSerial,
    Revoked { since: u64, reason: u8 },
}

impl std::fmt::Display for CertValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CertValidationError::WrongVersion(v) => write!(f, "unsupported certificate version {v}"),
            CertValidationError::BadSignature => write!(f, "issuer signature invalid"),
            CertValidationError::NotYetValid { not_before, now } => {
                write!(f, "not valid before {not_before} (now {now})")
            }
            CertValidationError::Expired { not_after, now } => {
                write!(f, "expired at {not_after} (now {now})")
            }
            CertValidationError::ParameterMismatch => write!(f, "parameter set mismatch"),
            CertValidationError::SubjectKeyUndecodable => write!(f, "subject key undecodable"),
            CertValidationError::SubjectKeyInvalid(flaw) => write!(f, "subject key invalid: {flaw}"),
            CertValidationError::StatusMissing => write!(f, "revocation status missing"),
            CertValidationError::StatusUntrusted => write!(f, "revocation status signature invalid"),
            CertValidationError::StatusWrongSerial => {
                write!(f, "revocation status for wrong serial")
            }
            CertValidationError::StatusStale => write!(f, "revocation status stale"),
            CertValidationError::StatusUnknownSerial => {
                write!(f, "issuer does not know this serial")
            }
            CertValidationError::Revoked { since, reason } => {
                write!(f, "revoked since {since} (reason {reason})")
            }
        }
    }
}

impl std::error::Error for CertValidationError {}

/// Runs the full acceptance pipeline for one certificate: profile
/// version, issuer signature, validity window, parameter binding, subject
/// key structure, and (when a token is supplied) revocation status.
/// Returns the validated subject public key.
///
/// Costs two scalar multiplications, four with a status token.
pub fn validate_certificate(
    params: &DomainParameters,
    cert: &Certificate,
    issuer_pk: &ECPoint,
    now: u64,
    status: Option<&OcspToken>,
    freshness_window: u64,
) -> Result<ECPoint, CertValidationError> {
    if cert.version != CERT_VERSION {
        return Err(CertValidationError::WrongVersion(cert.version));
    }
    if !cert.verify_signature(params, issuer_pk) {
        return Err(CertValidationError::BadSignature);
    }
    if now < cert.not_before {
        return Err(CertValidationError::NotYetValid {
            not_before: cert.not_before,
            now,
        });
    }
    if now >= cert.not_after {
        return Err(CertValidationError::Expired {
            not_after: cert.not_after,
            now,
        });
    }
    if cert.extension(EXT_PARAMS_DIGEST) != Some(&params.digest()[..]) {
        return Err(CertValidationError::ParameterMismatch);
    }
    let subject_pk = params
        .decompress(&cert.subject_pk)
        .map_err(|_| CertValidationError::SubjectKeyUndecodable)?;
    params
        .validate_public_key(&subject_pk)
        .map_err(CertValidationError::SubjectKeyInvalid)?;
    if let Some(token) = status {
        if !token.verify_signature(params, issuer_pk) {
            return Err(CertValidationError::StatusUntrusted);
        }
        if token.serial != cert.serial {
            return Err(CertValidationError::StatusWrongSerial);
        }
        if !token.is_fresh(now, freshness_window) {
            return Err(CertValidationError::StatusStale);
        }
        match token.status {
            CertStatus::Good => {}
            CertStatus::Revoked { since, reason } => {
                return Err(CertValidationError::Revoked { since, reason })
            }
            CertStatus::Unknown => return Err(CertValidationError::StatusUnknownSerial),
        }
    }
    Ok(subject_pk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert::{issue, USAGE_SIGNCRYPT};
    use crate::instrument::CostMeter;
    use crate::ocsp::REASON_KEY_COMPROMISE;
    use crate::rng::CounterDrbg;
    use crate::uint::U256;

    struct Fixture {
        params: DomainParameters,
        ca_sk: U256,
        ca_pk: ECPoint,
        cert: Certificate,
        rng: CounterDrbg,
    }

    fn fixture() -> Fixture {
        let params = DomainParameters::p256();
        let mut rng = CounterDrbg::new(81);
        let (ca_sk, ca_pk) = params.generate_keypair(&mut rng).unwrap();
        let (_, pk) = params.generate_keypair(&mut rng).unwrap();
        let cert = issue(
            &params, "ca", &ca_sk, 5, "alice", &pk, 1_000, 2_000, USAGE_SIGNCRYPT, &mut rng,
        )
        .unwrap();
        Fixture {
            params,
            ca_sk,
            ca_pk,
            cert,
            rng,
        }
    }

    fn good_token(fx: &mut Fixture, produced_at: u64) -> OcspToken {
        OcspToken::build_signed(
            &fx.params,
            "ca",
            &fx.ca_sk,
            fx.cert.serial,
            CertStatus::Good,
            produced_at,
            &mut fx.rng,
        )
        .unwrap()
    }

    #[test]
    fn accepts_valid_cert_with_fresh_status() {
        let mut fx = fixture();
        let token = good_token(&mut fx, 1_400);
        let meter = CostMeter::start();
        let pk = validate_certificate(&fx.params, &fx.cert, &fx.ca_pk, 1_500, Some(&token), 300)
            .unwrap();
        assert_eq!(meter.reading(), 4, "two signature checks at two each");
        assert_eq!(fx.params.compress(&pk), fx.cert.subject_pk);
    }

    #[test]
    fn accepts_without_status_when_not_required() {
        let fx = fixture();
        let meter = CostMeter::start();
        validate_certificate(&fx.params, &fx.cert, &fx.ca_pk, 1_500, None, 300).unwrap();
        assert_eq!(meter.reading(), 2);
    }

    #[test]
    fn rejects_each_failure_mode_in_order() {
        let mut fx = fixture();

        let mut wrong_version = fx.cert.clone();
        wrong_version.version = 2;
        assert_eq!(
            validate_certificate(&fx.params, &wrong_version, &fx.ca_pk, 1_500, None, 300),
            Err(CertValidationError::WrongVersion(2))
        );

        let mut tampered = fx.cert.clone();
        tampered.subject = "mallory".into();
        assert_eq!(
            validate_certificate(&fx.params, &tampered, &fx.ca_pk, 1_500, None, 300),
            Err(CertValidationError::BadSignature)
        );

        assert_eq!(
            validate_certificate(&fx.params, &fx.cert, &fx.ca_pk, 500, None, 300),
            Err(CertValidationError::NotYetValid {
                not_before: 1_000,
                now: 500
            })
        );
        assert_eq!(
            validate_certificate(&fx.params, &fx.cert, &fx.ca_pk, 2_000, None, 300),
            Err(CertValidationError::Expired {
                not_after: 2_000,
                now: 2_000
            })
        );

        // A certificate minted for a different parameter set.
        let toy = DomainParameters::toy17();
        let mut toy_rng = CounterDrbg::new(82);
        let (toy_ca_sk, toy_ca_pk) = toy.generate_keypair(&mut toy_rng).unwrap();
        let (_, toy_pk) = toy.generate_keypair(&mut toy_rng).unwrap();
        let toy_cert = issue(
            &toy, "ca", &toy_ca_sk, 6, "bob", &toy_pk, 1_000, 2_000, USAGE_SIGNCRYPT, &mut toy_rng,
        )
        .unwrap();
        let mut cross = toy_cert.clone();
        // Re-sign under the main CA so the signature check passes and the
        // parameter check is what trips.
        cross.extensions[1].1 = toy.digest().to_vec();
        cross.signature =
            crate::ecdsa::sign(&fx.params, &fx.ca_sk, &cross.to_signable_bytes(), &mut fx.rng)
                .unwrap();
        assert_eq!(
            validate_certificate(&fx.params, &cross, &fx.ca_pk, 1_500, None, 300),
            Err(CertValidationError::ParameterMismatch)
        );
        let _ = toy_ca_pk;

        // Unparsable subject key encoding, properly signed.
        let mut bad_key = fx.cert.clone();
        bad_key.subject_pk = vec![0x05; 33];
        bad_key.signature =
            crate::ecdsa::sign(&fx.params, &fx.ca_sk, &bad_key.to_signable_bytes(), &mut fx.rng)
                .unwrap();
        assert_eq!(
            validate_certificate(&fx.params, &bad_key, &fx.ca_pk, 1_500, None, 300),
            Err(CertValidationError::SubjectKeyUndecodable)
        );

        // Identity element as subject key: decodes, then fails the
        // structural check.
        let mut infinity_key = fx.cert.clone();
        infinity_key.subject_pk = vec![0x00];
        infinity_key.signature = crate::ecdsa::sign(
            &fx.params,
            &fx.ca_sk,
            &infinity_key.to_signable_bytes(),
            &mut fx.rng,
        )
        .unwrap();
        assert_eq!(
            validate_certificate(&fx.params, &infinity_key, &fx.ca_pk, 1_500, None, 300),
            Err(CertValidationError::SubjectKeyInvalid(
                crate::ec::PublicKeyFlaw::AtInfinity
            ))
        );
    }

    #[test]
    fn status_checks() {
        let mut fx = fixture();

        // Token signed by someone else.
        let (other_sk, _) = fx.params.generate_keypair(&mut fx.rng).unwrap();
        let alien = OcspToken::build_signed(
            &fx.params,
            "ca",
            &other_sk,
            fx.cert.serial,
            CertStatus::Good,
            1_400,
            &mut fx.rng,
        )
        .unwrap();
        assert_eq!(
            validate_certificate(&fx.params, &fx.cert, &fx.ca_pk, 1_500, Some(&alien), 300),
            Err(CertValidationError::StatusUntrusted)
        );

        // Token for a different serial.
        let wrong_serial = OcspToken::build_signed(
            &fx.params,
            "ca",
            &fx.ca_sk,
            fx.cert.serial + 1,
            CertStatus::Good,
            1_400,
            &mut fx.rng,
        )
        .unwrap();
        assert_eq!(
            validate_certificate(&fx.params, &fx.cert, &fx.ca_pk, 1_500, Some(&wrong_serial), 300),
            Err(CertValidationError::StatusWrongSerial)
        );

        // Stale token.
        let stale = good_token(&mut fx, 1_000);
        assert_eq!(
            validate_certificate(&fx.params, &fx.cert, &fx.ca_pk, 1_500, Some(&stale), 300),
            Err(CertValidationError::StatusStale)
        );

        // Revoked.
        let revoked = OcspToken::build_signed(
            &fx.params,
            "ca",
            &fx.ca_sk,
            fx.cert.serial,
            CertStatus::Revoked {
                since: 1_200,
                reason: REASON_KEY_COMPROMISE,
            },
            1_400,
            &mut fx.rng,
        )
        .unwrap();
        assert_eq!(
            validate_certificate(&fx.params, &fx.cert, &fx.ca_pk, 1_500, Some(&revoked), 300),
            Err(CertValidationError::Revoked {
                since: 1_200,
                reason: REASON_KEY_COMPROMISE
            })
        );

        // Unknown serial.
        let unknown = OcspToken::build_signed(
            &fx.params,
            "ca",
            &fx.ca_sk,
            fx.cert.serial,
            CertStatus::Unknown,
            1_400,
            &mut fx.rng,
        )
        .unwrap();
        assert_eq!(
            validate_certificate(&fx.params, &fx.cert, &fx.ca_pk, 1_500, Some(&unknown), 300),
            Err(CertValidationError::StatusUnknownSerial)
        );
    }
}
