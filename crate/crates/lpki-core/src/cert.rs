//! Certificates: the profile, its deterministic encoding, and the text
//! file form used on disk (`.lcrt`).
//!
//! The profile is a compact analog of the common v3 layout: serial,
//! issuer, subject, validity interval, subject public key, tagged
//! extensions, signature. Certificates bind the subject key to the
//! parameter set through a digest extension, so a certificate can never be
//! replayed onto a different group.

use crate::codec::{ByteReader, ByteWriter, DecodeError};
use crate::ec::DomainParameters;
use crate::ecdsa::{self, Signature};
use crate::uint::U256;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;

pub const CERT_VERSION: u8 = 3;

/// Extension tags.
pub const EXT_KEY_USAGE: u8 = 0x01;
pub const EXT_PARAMS_DIGEST: u8 = 0x02;

/// Key usage bits.
pub const USAGE_SIGN: u8 = 0x01;
pub const USAGE_SIGNCRYPT: u8 = 0x02;
pub const USAGE_KEY_AGREEMENT: u8 = 0x04;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Certificate {
    pub version: u8,
    pub serial: u64,
    pub issuer: String,
    pub subject: String,
    /// Unix seconds, inclusive.
    pub not_before: u64,
    /// Unix seconds, exclusive.
    pub not_after: u64,
    /// Compressed subject public key.
    pub subject_pk: Vec<u8>,
    /// Tagged extensions in ascending tag order.
    pub extensions: Vec<(u8, Vec<u8>)>,
    pub signature: Signature,
}

impl Certificate {
    /// The bytes the issuer signs: everything except the signature.
    pub fn to_signable_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.u8(self.version);
        w.u64(self.serial);
        w.str16(&self.issuer);
        w.str16(&self.subject);
        w.u64(self.not_before);
        w.u64(self.not_after);
        w.bytes16(&self.subject_pk);
        w.u8(self.extensions.len() as u8);
        for (tag, value) in &self.extensions {
            w.field(*tag, value);
        }
        w.finish()
    }

    pub fn encode(&self, params: &DomainParameters) -> Vec<u8> {
        let mut out = self.to_signable_bytes();
        let mut w = ByteWriter::new();
        w.bytes16(&self.signature.encode(params));
        out.extend_from_slice(&w.finish());
        out
    }

    pub fn decode(params: &DomainParameters, bytes: &[u8]) -> Result<Certificate, DecodeError> {
        let mut r = ByteReader::new(bytes);
        let version = r.u8()?;
        let serial = r.u64()?;
        let issuer = r.str16()?;
        let subject = r.str16()?;
        let not_before = r.u64()?;
        let not_after = r.u64()?;
        let subject_pk = r.bytes16()?.to_vec();
        let ext_count = r.u8()?;
        let mut extensions = Vec::with_capacity(ext_count as usize);
        let mut last_tag = None;
        for _ in 0..ext_count {
            let (tag, value) = r.field()?;
            if last_tag.is_some_and(|t| t >= tag) {
                return Err(DecodeError::new("extension tags out of order"));
            }
            last_tag = Some(tag);
            extensions.push((tag, value.to_vec()));
        }
        let signature = Signature::decode(params, r.bytes16()?)?;
        r.expect_end()?;
        Ok(Certificate {
            version,
            serial,
            issuer,
            subject,
            not_before,
            not_after,
            subject_pk,
            extensions,
            signature,
        })
    }

    pub fn extension(&self, tag: u8) -> Option<&[u8]> {
        self.extensions
            .iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, v)| v.as_slice())
    }

    /// Checks the issuer signature over the signable bytes. Says nothing
    /// about validity period or revocation.
    pub fn verify_signature(
        &self,
        params: &DomainParameters,
        issuer_pk: &crate::ec::ECPoint,
    ) -> bool {
        ecdsa::verify(params, issuer_pk, &self.to_signable_bytes(), &self.signature)
    }

    /// True when `now` falls inside [not_before, not_after).
    pub fn in_validity_window(&self, now: u64) -> bool {
        self.not_before <= now && now < self.not_after
    }

    /// The `.lcrt` text form: a type line, then the encoding in base64.
    pub fn to_file_text(&self, params: &DomainParameters) -> String {
        format!(
            "lpki-certificate-v1\n{}\n",
            BASE64.encode(self.encode(params))
        )
    }

    pub fn from_file_text(params: &DomainParameters, text: &str) -> Result<Certificate, DecodeError> {
        let mut lines = text.lines();
        match lines.next() {
            Some("lpki-certificate-v1") => {}
            _ => return Err(DecodeError::new("missing lpki-certificate-v1 header")),
        }
        let body = lines.next().ok_or_else(|| DecodeError::new("missing body"))?;
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(DecodeError::new("trailing content after body"));
        }
        let raw = BASE64
            .decode(body.trim())
            .map_err(|e| DecodeError::new(format!("base64: {e}")))?;
        Certificate::decode(params, &raw)
    }
}

/// Test and bootstrap helper: build and sign a certificate in one step.
pub fn issue(
    params: &DomainParameters,
    issuer: &str,
    issuer_sk: &U256,
    serial: u64,
    subject: &str,
    subject_pk: &crate::ec::ECPoint,
    not_before: u64,
    not_after: u64,
    usage: u8,
    rng: &mut dyn crate::rng::RandomSource,
) -> Result<Certificate, ecdsa::SignError> {
    let mut cert = Certificate {
        version: CERT_VERSION,
        serial,
        issuer: issuer.into(),
        subject: subject.into(),
        not_before,
        not_after,
        subject_pk: params.compress(subject_pk),
        extensions: vec![
            (EXT_KEY_USAGE, vec![usage]),
            (EXT_PARAMS_DIGEST, params.digest().to_vec()),
        ],
        signature: Signature {
            r: U256::ONE,
            s: U256::ONE,
        },
    };
    cert.signature = ecdsa::sign(params, issuer_sk, &cert.to_signable_bytes(), rng)?;
    Ok(cert)
}
