//! Timestamp authority: binds a document digest to a time and a
//! monotonic sequence number under its signature, giving flows a
//! non-repudiable "existed by" anchor.

use crate::codec::{ByteReader, ByteWriter, DecodeError};
use crate::ec::{DomainParameters, ECPoint};
use crate::ecdsa::{self, Signature};
use crate::primitives::HASH_LEN;
use crate::rng::RandomSource;
use crate::uint::U256;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TimestampToken {
    pub sequence: u64,
    pub stamped_at: u64,
    pub digest: [u8; HASH_LEN],
    pub authority: String,
    pub signature: Signature,
}

impl TimestampToken {
    fn signable_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.raw(b"lpki.tstamp.v1");
        w.u64(self.sequence);
        w.u64(self.stamped_at);
        w.raw(&self.digest);
        w.str16(&self.authority);
        w.finish()
    }

    /// True when the token covers `digest` under the authority key.
    pub fn verify(&self, params: &DomainParameters, pk: &ECPoint, digest: &[u8; HASH_LEN]) -> bool {
        self.digest == *digest
            && ecdsa::verify(params, pk, &self.signable_bytes(), &self.signature)
    }

    pub fn encode(&self, params: &DomainParameters) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.u64(self.sequence);
        w.u64(self.stamped_at);
        w.raw(&self.digest);
        w.str16(&self.authority);
        w.raw(&self.signature.encode(params));
        w.finish()
    }

    pub fn decode(params: &DomainParameters, bytes: &[u8]) -> Result<TimestampToken, DecodeError> {
        let mut r = ByteReader::new(bytes);
        let sequence = r.u64()?;
        let stamped_at = r.u64()?;
        let digest: [u8; HASH_LEN] = r.take(HASH_LEN)?.try_into().expect("fixed width");
        let authority = r.str16()?.to_string();
        let sig_bytes = r.take(2 * params.scalar_len())?.to_vec();
        r.expect_end()?;
        let signature = Signature::decode(params, &sig_bytes)?;
        Ok(TimestampToken {
            sequence,
            stamped_at,
            digest,
            authority,
            signature,
        })
    }
}

pub struct TimestampAuthority {
    pub name: String,
    sk: U256,
    pub pk: ECPoint,
    next_sequence: u64,
}

impl TimestampAuthority {
    pub fn new(
        params: &DomainParameters,
        name: &str,
        rng: &mut dyn RandomSource,
    ) -> Result<TimestampAuthority, crate::ec::KeyGenError> {
        let (sk, pk) = params.generate_keypair(rng)?;
        Ok(TimestampAuthority {
            name: name.into(),
            sk,
            pk,
            next_sequence: 1,
        })
    }

    /// Issues the next token in sequence for `digest` at `now`.
    pub fn stamp(
        &mut self,
        params: &DomainParameters,
        digest: &[u8; HASH_LEN],
        now: u64,
        rng: &mut dyn RandomSource,
    ) -> Result<TimestampToken, ecdsa::SignError> {
        let mut token = TimestampToken {
            sequence: self.next_sequence,
            stamped_at: now,
            digest: *digest,
            authority: self.name.clone(),
            signature: Signature {
                r: U256::ONE,
                s: U256::ONE,
            },
        };
        token.signature = ecdsa::sign(params, &self.sk, &token.signable_bytes(), rng)?;
        self.next_sequence += 1;
        Ok(token)
    }

    pub(crate) fn signing_key(&self) -> &U256 {
        &self.sk
    }

    pub(crate) fn from_parts(
        name: String,
        sk: U256,
        pk: ECPoint,
        next_sequence: u64,
    ) -> TimestampAuthority {
        TimestampAuthority {
            name,
            sk,
            pk,
            next_sequence,
        }
    }

    pub(crate) fn next_sequence(&self) -> u64 {
        self.next_sequence
    }
}
