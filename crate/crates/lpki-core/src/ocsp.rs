//! Signed certificate status tokens, the online-responder answer to "is
//! this serial still good right now".
//!
//! A token carries the serial, a status, and the production time; the
//! responder signs all of it. Consumers accept a token only inside a
//! freshness window measured from `produced_at`, so replaying an old
//! "good" answer for a since-revoked certificate fails closed.

use crate::codec::{ByteReader, ByteWriter, DecodeError};
use crate::ec::{DomainParameters, ECPoint};
use crate::ecdsa::{self, Signature};
use crate::rng::RandomSource;
use crate::uint::U256;

/// Revocation state of one serial at one instant.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CertStatus {
    Good,
    Revoked { since: u64, reason: u8 },
    /// The responder has never issued this serial.
    Unknown,
}

/// Revocation reason codes carried in tokens.
pub const REASON_UNSPECIFIED: u8 = 0;
pub const REASON_KEY_COMPROMISE: u8 = 1;
pub const REASON_SUPERSEDED: u8 = 2;
pub const REASON_CESSATION: u8 = 3;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OcspToken {
    pub serial: u64,
    pub status: CertStatus,
    /// Unix seconds at signing time.
    pub produced_at: u64,
    /// Name of the signing responder.
    pub responder: String,
    pub signature: Signature,
}

impl OcspToken {
    fn write_body(&self, w: &mut ByteWriter) {
        w.u64(self.serial);
        match self.status {
            CertStatus::Good => {
                w.u8(0x00);
            }
            CertStatus::Revoked { since, reason } => {
                w.u8(0x01);
                w.u64(since);
                w.u8(reason);
            }
            CertStatus::Unknown => {
                w.u8(0x02);
            }
        }
        w.u64(self.produced_at);
        w.str16(&self.responder);
    }

    fn signable_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.raw(b"lpki.ocsp.v1");
        self.write_body(&mut w);
        w.finish()
    }

    pub fn build_signed(
        params: &DomainParameters,
        responder: &str,
        responder_sk: &U256,
        serial: u64,
        status: CertStatus,
        produced_at: u64,
        rng: &mut dyn RandomSource,
    ) -> Result<OcspToken, ecdsa::SignError> {
        let mut token = OcspToken {
            serial,
            status,
            produced_at,
            responder: responder.into(),
            signature: Signature {
                r: U256::ONE,
                s: U256::ONE,
            },
        };
        token.signature = ecdsa::sign(params, responder_sk, &token.signable_bytes(), rng)?;
        Ok(token)
    }

    pub fn verify_signature(&self, params: &DomainParameters, responder_pk: &ECPoint) -> bool {
        ecdsa::verify(params, responder_pk, &self.signable_bytes(), &self.signature)
    }

    /// Fresh means produced_at <= now < produced_at + window. Tokens from
    /// the future are not fresh; clocks here are explicit, not forgiving.
    pub fn is_fresh(&self, now: u64, window: u64) -> bool {
        self.produced_at <= now && now < self.produced_at.saturating_add(window)
    }

    pub fn encode(&self, params: &DomainParameters) -> Vec<u8> {
        let mut w = ByteWriter::new();
        self.write_body(&mut w);
        w.bytes16(&self.signature.encode(params));
        w.finish()
    }

    pub fn decode(params: &DomainParameters, bytes: &[u8]) -> Result<OcspToken, DecodeError> {
        let mut r = ByteReader::new(bytes);
        let serial = r.u64()?;
        let status = match r.u8()? {
            0x00 => CertStatus::Good,
            0x01 => CertStatus::Revoked {
                since: r.u64()?,
                reason: r.u8()?,
            },
            0x02 => CertStatus::Unknown,
            other => return Err(DecodeError::new(format!("unknown status byte 0x{other:02x}"))),
        };
        let produced_at = r.u64()?;
        let responder = r.str16()?;
        let signature = Signature::decode(params, r.bytes16()?)?;
        r.expect_end()?;
        Ok(OcspToken {
            serial,
            status,
            produced_at,
            responder,
            signature,
        })
    }
}
