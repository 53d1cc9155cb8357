//! Validation authority: performs certificate-path and status checking
//! on behalf of thin clients, then vouches for the result with a signed
//! report. The report carries both parties' static public keys so the
//! relying entity never has to parse a certificate itself.

use crate::authorities::ca::CertificationAuthority;
use crate::authorities::{validate_certificate, CertValidationError};
use crate::codec::{ByteReader, ByteWriter, DecodeError};
use crate::ec::{DomainParameters, ECPoint};
use crate::ecdsa::{self, Signature};
use crate::primitives::HASH_LEN;
use crate::repository::{subscriber_dn, Repository};
use crate::rng::RandomSource;
use crate::uint::U256;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum VaError {
    /// No repository entry under the subscriber DN.
    NotInRepository { id: String },
    SenderInvalid(CertValidationError),
    RecipientInvalid(CertValidationError),
    Signing(ecdsa::SignError),
}

impl std::fmt::Display for VaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VaError::NotInRepository { id } => write!(f, "no published certificate for {id}"),
            VaError::SenderInvalid(e) => write!(f, "sender certificate rejected: {e}"),
            VaError::RecipientInvalid(e) => write!(f, "recipient certificate rejected: {e}"),
            VaError::Signing(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for VaError {}

/// Signed attestation that both parties' certificates were valid at
/// `produced_at`. Static keys ride along in compressed form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ValidationReport {
    pub produced_at: u64,
    pub sender_id: String,
    pub recipient_id: String,
    pub params_digest: [u8; HASH_LEN],
    pub sender_pk: Vec<u8>,
    pub recipient_pk: Vec<u8>,
    pub signature: Signature,
}

impl ValidationReport {
    fn signable_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.raw(b"lpki.va.report.v1");
        w.u64(self.produced_at);
        w.str16(&self.sender_id);
        w.str16(&self.recipient_id);
        w.raw(&self.params_digest);
        w.bytes16(&self.sender_pk);
        w.bytes16(&self.recipient_pk);
        w.finish()
    }

    /// Checks the report signature and that it speaks about the expected
    /// parties under the expected domain parameters.
    pub fn verify(
        &self,
        params: &DomainParameters,
        va_pk: &ECPoint,
        sender_id: &str,
        recipient_id: &str,
    ) -> bool {
        self.sender_id == sender_id
            && self.recipient_id == recipient_id
            && self.params_digest == params.digest()
            && ecdsa::verify(params, va_pk, &self.signable_bytes(), &self.signature)
    }

    pub fn encode(&self, params: &DomainParameters) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.u64(self.produced_at);
        w.str16(&self.sender_id);
        w.str16(&self.recipient_id);
        w.raw(&self.params_digest);
        w.bytes16(&self.sender_pk);
        w.bytes16(&self.recipient_pk);
        w.raw(&self.signature.encode(params));
        w.finish()
    }

    pub fn decode(params: &DomainParameters, bytes: &[u8]) -> Result<ValidationReport, DecodeError> {
        let mut r = ByteReader::new(bytes);
        let produced_at = r.u64()?;
        let sender_id = r.str16()?.to_string();
        let recipient_id = r.str16()?.to_string();
        let params_digest: [u8; HASH_LEN] = r.take(HASH_LEN)?.try_into().expect("fixed width");
        let sender_pk = r.bytes16()?.to_vec();
        let recipient_pk = r.bytes16()?.to_vec();
        let sig_bytes = r.take(2 * params.scalar_len())?.to_vec();
        r.expect_end()?;
        let signature = Signature::decode(params, &sig_bytes)?;
        Ok(ValidationReport {
            produced_at,
            sender_id,
            recipient_id,
            params_digest,
            sender_pk,
            recipient_pk,
            signature,
        })
    }
}

pub struct ValidationAuthority {
    pub name: String,
    sk: U256,
    pub pk: ECPoint,
    /// `time | sender | recipient | verdict | detail` per request.
    log: Vec<String>,
}

impl ValidationAuthority {
    pub fn new(
        params: &DomainParameters,
        name: &str,
        rng: &mut dyn RandomSource,
    ) -> Result<ValidationAuthority, crate::ec::KeyGenError> {
        let (sk, pk) = params.generate_keypair(rng)?;
        Ok(ValidationAuthority {
            name: name.into(),
            sk,
            pk,
            log: Vec::new(),
        })
    }

    fn check_party(
        &self,
        params: &DomainParameters,
        repository: &Repository,
        ca: &CertificationAuthority,
        id: &str,
        now: u64,
        freshness_window: u64,
        rng: &mut dyn RandomSource,
    ) -> Result<ECPoint, VaError> {
        let cert = repository
            .fetch(&subscriber_dn(id))
            .ok_or_else(|| VaError::NotInRepository { id: id.into() })?;
        let token = ca
            .ocsp_response(params, cert.serial, now, rng)
            .map_err(VaError::Signing)?;
        // The error is attributed to sender or recipient by the caller.
        validate_certificate(params, cert, &ca.pk, now, Some(&token), freshness_window)
            .map_err(VaError::SenderInvalid)
    }

    /// Validates both parties and returns a signed report, or an error
    /// naming the failing side. Every request leaves a log line.
    pub fn validate_pair(
        &mut self,
        params: &DomainParameters,
        repository: &Repository,
        ca: &CertificationAuthority,
        sender_id: &str,
        recipient_id: &str,
        now: u64,
        freshness_window: u64,
        rng: &mut dyn RandomSource,
    ) -> Result<ValidationReport, VaError> {
        let outcome = self.validate_pair_inner(
            params,
            repository,
            ca,
            sender_id,
            recipient_id,
            now,
            freshness_window,
            rng,
        );
        let line = match &outcome {
            Ok(_) => format!("{now} | {sender_id} | {recipient_id} | valid | both certificates current"),
            Err(e) => format!("{now} | {sender_id} | {recipient_id} | rejected | {e}"),
        };
        self.log.push(line);
        outcome
    }

    #[allow(clippy::too_many_arguments)]
    fn validate_pair_inner(
        &self,
        params: &DomainParameters,
        repository: &Repository,
        ca: &CertificationAuthority,
        sender_id: &str,
        recipient_id: &str,
        now: u64,
        freshness_window: u64,
        rng: &mut dyn RandomSource,
    ) -> Result<ValidationReport, VaError> {
        let sender_pk = self
            .check_party(params, repository, ca, sender_id, now, freshness_window, rng)?;
        let recipient_pk = self
            .check_party(params, repository, ca, recipient_id, now, freshness_window, rng)
            .map_err(|e| match e {
                VaError::SenderInvalid(inner) => VaError::RecipientInvalid(inner),
                other => other,
            })?;
        let mut report = ValidationReport {
            produced_at: now,
            sender_id: sender_id.into(),
            recipient_id: recipient_id.into(),
            params_digest: params.digest(),
            sender_pk: params.compress(&sender_pk),
            recipient_pk: params.compress(&recipient_pk),
            signature: Signature {
                r: U256::ONE,
                s: U256::ONE,
            },
        };
        report.signature =
            ecdsa::sign(params, &self.sk, &report.signable_bytes(), rng).map_err(VaError::Signing)?;
        Ok(report)
    }

    pub fn log(&self) -> &[String] {
        &self.log
    }

    pub(crate) fn signing_key(&self) -> &U256 {
        &self.sk
    }

    pub(crate) fn from_parts(
        name: String,
        sk: U256,
        pk: ECPoint,
        log: Vec<String>,
    ) -> ValidationAuthority {
        ValidationAuthority { name, sk, pk, log }
    }
}
