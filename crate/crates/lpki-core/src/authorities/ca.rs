//! Certification authority: issues against registrations, keeps the
//! status book, answers online status queries, renews, and optionally
//! escrows infrastructure-generated private keys.
//!
//! Policy knobs exist to demonstrate *why* they must stay on: turning
//! `validate_subject_keys` off makes the CA certify a small-order
//! off-curve key whose possession proof was forged, which is exactly the
//! regression the attack demo pins.

use crate::authorities::ra::RegistrationRecord;
use crate::cert::{issue, Certificate, USAGE_KEY_AGREEMENT, USAGE_SIGN, USAGE_SIGNCRYPT};
use crate::ec::{DomainParameters, ECPoint, PublicKeyFlaw};
use crate::ecdsa::SignError;
use crate::ocsp::{CertStatus, OcspToken, REASON_SUPERSEDED};
use crate::pop::{verify_possession, PossessionProof};
use crate::rng::RandomSource;
use crate::uint::U256;
use std::collections::BTreeMap;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CaPolicy {
    /// Structurally validate subject keys before certification.
    pub validate_subject_keys: bool,
    /// Require a possession proof for subscriber-generated keys.
    pub require_possession_proof: bool,
    /// Lifetime of issued certificates, seconds.
    pub cert_lifetime: u64,
    /// Keep a copy of infrastructure-generated private keys.
    pub escrow_enabled: bool,
}

impl Default for CaPolicy {
    fn default() -> CaPolicy {
        CaPolicy {
            validate_subject_keys: true,
            require_possession_proof: true,
            cert_lifetime: 86_400,
            escrow_enabled: false,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IssuedRecord {
    pub cert: Certificate,
    pub status: CertStatus,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CertifyError {
    ProofMissing,
    ProofInvalid,
    KeyRejected(PublicKeyFlaw),
    Signing(SignError),
}

impl std::fmt::Display for CertifyError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CertifyError::ProofMissing => write!(f, "possession proof required"),
            CertifyError::ProofInvalid => write!(f, "possession proof rejected"),
            CertifyError::KeyRejected(flaw) => write!(f, "subject key rejected: {flaw}"),
            CertifyError::Signing(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CertifyError {}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RevokeError {
    UnknownSerial(u64),
}

impl std::fmt::Display for RevokeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let RevokeError::UnknownSerial(s) = self;
        write!(f, "serial {s} was never issued here")
    }
}

impl std::error::Error for RevokeError {}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RenewError {
    UnknownSerial(u64),
    /// Revoked certificates stay dead; subscribers re-enroll instead.
    Revoked { since: u64 },
    Signing(SignError),
}

impl std::fmt::Display for RenewError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RenewError::UnknownSerial(s) => write!(f, "serial {s} was never issued here"),
            RenewError::Revoked { since } => write!(f, "cannot renew, revoked since {since}"),
            RenewError::Signing(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RenewError {}

/// Domain-separated context a subscriber proves possession against.
pub fn possession_context(ca_name: &str, subject_id: &str) -> Vec<u8> {
    let mut ctx = Vec::new();
    ctx.extend_from_slice(b"lpki.enroll\x00");
    ctx.extend_from_slice(ca_name.as_bytes());
    ctx.push(0x00);
    ctx.extend_from_slice(subject_id.as_bytes());
    ctx
}

pub struct CertificationAuthority {
    pub name: String,
    sk: U256,
    pub pk: ECPoint,
    /// Self-issued certificate, serial 1.
    pub cert: Certificate,
    pub policy: CaPolicy,
    next_serial: u64,
    records: BTreeMap<u64, IssuedRecord>,
    escrow: BTreeMap<u64, U256>,
}

impl CertificationAuthority {
    pub fn new(
        params: &DomainParameters,
        name: &str,
        policy: CaPolicy,
        now: u64,
        rng: &mut dyn RandomSource,
    ) -> Result<CertificationAuthority, CertifyError> {
        let (sk, pk) = params.generate_keypair(rng).map_err(|e| {
            CertifyError::Signing(SignError::KeyGen(e))
        })?;
        // The root certificate outlives everything it signs.
        let cert = issue(
            params,
            name,
            &sk,
            1,
            name,
            &pk,
            now,
            now.saturating_add(policy.cert_lifetime.saturating_mul(1_000).max(1)),
            USAGE_SIGN,
            rng,
        )
        .map_err(CertifyError::Signing)?;
        let mut records = BTreeMap::new();
        records.insert(
            1,
            IssuedRecord {
                cert: cert.clone(),
                status: CertStatus::Good,
            },
        );
        Ok(CertificationAuthority {
            name: name.into(),
            sk,
            pk,
            cert,
            policy,
            next_serial: 2,
            records,
            escrow: BTreeMap::new(),
        })
    }

    fn issue_for(
        &mut self,
        params: &DomainParameters,
        subject_id: &str,
        subject_pk: &ECPoint,
        now: u64,
        rng: &mut dyn RandomSource,
    ) -> Result<Certificate, SignError> {
        let serial = self.next_serial;
        let cert = issue(
            params,
            &self.name,
            &self.sk,
            serial,
            subject_id,
            subject_pk,
            now,
            now.saturating_add(self.policy.cert_lifetime),
            USAGE_SIGN | USAGE_SIGNCRYPT | USAGE_KEY_AGREEMENT,
            rng,
        )?;
        self.next_serial += 1;
        self.records.insert(
            serial,
            IssuedRecord {
                cert: cert.clone(),
                status: CertStatus::Good,
            },
        );
        Ok(cert)
    }

    /// Certifies a key the subscriber generated themselves. Runs the
    /// possession proof and key validation as policy dictates.
    pub fn certify_external(
        &mut self,
        params: &DomainParameters,
        registration: &RegistrationRecord,
        subject_pk: &ECPoint,
        proof: Option<&PossessionProof>,
        now: u64,
        rng: &mut dyn RandomSource,
    ) -> Result<Certificate, CertifyError> {
        if self.policy.require_possession_proof {
            let proof = proof.ok_or(CertifyError::ProofMissing)?;
            let ctx = possession_context(&self.name, &registration.subject_id);
            if !verify_possession(params, subject_pk, proof, &ctx) {
                return Err(CertifyError::ProofInvalid);
            }
        }
        if self.policy.validate_subject_keys {
            params
                .validate_public_key(subject_pk)
                .map_err(CertifyError::KeyRejected)?;
        }
        self.issue_for(params, &registration.subject_id, subject_pk, now, rng)
            .map_err(CertifyError::Signing)
    }

    /// Certifies a key generated inside the infrastructure; no proof
    /// needed, escrow applies when enabled.
    pub fn certify_generated(
        &mut self,
        params: &DomainParameters,
        registration: &RegistrationRecord,
        subject_sk: &U256,
        subject_pk: &ECPoint,
        now: u64,
        rng: &mut dyn RandomSource,
    ) -> Result<Certificate, CertifyError> {
        if self.policy.validate_subject_keys {
            params
                .validate_public_key(subject_pk)
                .map_err(CertifyError::KeyRejected)?;
        }
        let cert = self
            .issue_for(params, &registration.subject_id, subject_pk, now, rng)
            .map_err(CertifyError::Signing)?;
        if self.policy.escrow_enabled {
            self.escrow.insert(cert.serial, *subject_sk);
        }
        Ok(cert)
    }

    /// Marks a serial revoked. Idempotent: repeated calls keep the
    /// earliest revocation time and original reason.
    pub fn revoke(&mut self, serial: u64, now: u64, reason: u8) -> Result<CertStatus, RevokeError> {
        let record = self
            .records
            .get_mut(&serial)
            .ok_or(RevokeError::UnknownSerial(serial))?;
        if let CertStatus::Good = record.status {
            record.status = CertStatus::Revoked { since: now, reason };
        }
        Ok(record.status)
    }

    /// Issues a successor certificate for the same subject and key, and
    /// supersedes the old serial as of `now`.
    pub fn renew(
        &mut self,
        params: &DomainParameters,
        serial: u64,
        now: u64,
        rng: &mut dyn RandomSource,
    ) -> Result<Certificate, RenewError> {
        let record = self
            .records
            .get(&serial)
            .ok_or(RenewError::UnknownSerial(serial))?;
        if let CertStatus::Revoked { since, .. } = record.status {
            return Err(RenewError::Revoked { since });
        }
        let subject = record.cert.subject.clone();
        let subject_pk = params
            .decompress(&record.cert.subject_pk)
            .expect("issued certificates hold well-formed keys");
        let new_cert = self
            .issue_for(params, &subject, &subject_pk, now, rng)
            .map_err(RenewError::Signing)?;
        self.revoke(serial, now, REASON_SUPERSEDED)
            .expect("serial known");
        // Escrowed material follows the subject, not the serial; keep the
        // old entry and add one for the successor when present.
        if let Some(sk) = self.escrow.get(&serial).copied() {
            self.escrow.insert(new_cert.serial, sk);
        }
        Ok(new_cert)
    }

    /// Signed status answer for any serial, including never-issued ones.
    pub fn ocsp_response(
        &self,
        params: &DomainParameters,
        serial: u64,
        now: u64,
        rng: &mut dyn RandomSource,
    ) -> Result<OcspToken, SignError> {
        let status = match self.records.get(&serial) {
            Some(record) => record.status,
            None => CertStatus::Unknown,
        };
        OcspToken::build_signed(params, &self.name, &self.sk, serial, status, now, rng)
    }

    pub fn record(&self, serial: u64) -> Option<&IssuedRecord> {
        self.records.get(&serial)
    }

    pub fn records(&self) -> impl Iterator<Item = (&u64, &IssuedRecord)> {
        self.records.iter()
    }

    /// Newest non-revoked serial for a subject, if any.
    pub fn current_serial_for(&self, subject_id: &str) -> Option<u64> {
        self.records
            .iter()
            .rev()
            .find(|(_, rec)| {
                rec.cert.subject == subject_id && matches!(rec.status, CertStatus::Good)
            })
            .map(|(serial, _)| *serial)
    }

    /// Escrowed private key for a serial, when policy kept one.
    pub fn recover_escrowed(&self, serial: u64) -> Option<U256> {
        self.escrow.get(&serial).copied()
    }


    pub(crate) fn from_parts(
        name: String,
        sk: U256,
        pk: ECPoint,
        cert: Certificate,
        policy: CaPolicy,
        next_serial: u64,
        records: BTreeMap<u64, IssuedRecord>,
        escrow: BTreeMap<u64, U256>,
    ) -> CertificationAuthority {
        CertificationAuthority {
            name,
            sk,
            pk,
            cert,
            policy,
            next_serial,
            records,
            escrow,
        }
    }

    pub(crate) fn parts(
        &self,
    ) -> (
        &U256,
        u64,
        &BTreeMap<u64, IssuedRecord>,
        &BTreeMap<u64, U256>,
    ) {
        (&self.sk, self.next_serial, &self.records, &self.escrow)
    }
}
