//! Subscriber key storage modeled on a SIM-style file system.
//!
//! Two dedicated files: 0x4F50 holds the private key sealed under a
//! low-entropy activation code (stretched with salt), 0x4F51 holds the
//! public key and certificate in the clear. Three wrong codes block the
//! card. The whole card serializes to one blob, so scenarios can persist
//! and reload subscriber state byte for byte.

use crate::cert::Certificate;
use crate::codec::{ByteReader, ByteWriter, DecodeError};
use crate::ec::{DomainParameters, ECPoint, PointDecodeError};
use crate::primitives::{aead_decrypt, aead_encrypt, kdf, stretch_secret, NONCE_LEN};
use crate::rng::{RandomSource, RngFailure};
use crate::uint::U256;
use std::collections::BTreeMap;

/// File holding the sealed private key record.
pub const PRIVATE_KEY_FILE: u16 = 0x4F50;
/// File holding the public key and certificate.
pub const PUBLIC_RECORD_FILE: u16 = 0x4F51;

pub const STRETCH_ITERATIONS: u32 = 10_000;
pub const MAX_PIN_ATTEMPTS: u8 = 3;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CardError {
    /// Wrong activation code; remaining attempts included.
    BadPin { attempts_left: u8 },
    /// Attempt counter exhausted; the card no longer answers.
    Blocked,
    /// Required file missing or unparsable.
    Corrupt(String),
    Rng(RngFailure),
}

impl std::fmt::Display for CardError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CardError::BadPin { attempts_left } => {
                write!(f, "wrong activation code, {attempts_left} attempts left")
            }
            CardError::Blocked => write!(f, "card is blocked"),
            CardError::Corrupt(msg) => write!(f, "card data corrupt: {msg}"),
            CardError::Rng(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CardError {}

impl From<RngFailure> for CardError {
    fn from(e: RngFailure) -> Self {
        CardError::Rng(e)
    }
}

/// In-memory card: numbered files plus the attempt counter.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SmartCard {
    files: BTreeMap<u16, Vec<u8>>,
    attempts_left: u8,
}

impl SmartCard {
    /// Seals `sk` under `pin` and writes both files.
    pub fn provision(
        params: &DomainParameters,
        sk: &U256,
        pk: &ECPoint,
        cert: &Certificate,
        pin: &str,
        rng: &mut dyn RandomSource,
    ) -> Result<SmartCard, CardError> {
        let mut salt = [0u8; 16];
        rng.fill(&mut salt)?;
        let key = stretch_secret(pin.as_bytes(), &salt, STRETCH_ITERATIONS);
        let mut nonce = [0u8; NONCE_LEN];
        // Nonce bound to the salt; each provisioning draws a fresh salt.
        kdf("lpki.card.nonce", &salt, &mut nonce);
        let sk_bytes = sk.to_be_bytes_sized(params.scalar_len());
        let sealed = aead_encrypt(&key, &nonce, &sk_bytes, b"lpki.card.sk");

        let mut private_file = ByteWriter::new();
        private_file.raw(&salt);
        private_file.bytes16(&sealed);

        let mut public_file = ByteWriter::new();
        public_file.bytes16(&params.compress(pk));
        public_file.bytes16(&cert.encode(params));

        let mut files = BTreeMap::new();
        files.insert(PRIVATE_KEY_FILE, private_file.finish());
        files.insert(PUBLIC_RECORD_FILE, public_file.finish());
        Ok(SmartCard {
            files,
            attempts_left: MAX_PIN_ATTEMPTS,
        })
    }

    /// Recovers the private key with the activation code. Wrong codes
    /// decrement the attempt counter; at zero the card blocks for good.
    pub fn unlock_private_key(
        &mut self,
        params: &DomainParameters,
        pin: &str,
    ) -> Result<U256, CardError> {
        if self.attempts_left == 0 {
            return Err(CardError::Blocked);
        }
        let raw = self
            .files
            .get(&PRIVATE_KEY_FILE)
            .ok_or_else(|| CardError::Corrupt("private key file missing".into()))?;
        let mut r = ByteReader::new(raw);
        let salt: [u8; 16] = r
            .take(16)
            .map_err(|e| CardError::Corrupt(e.to_string()))?
            .try_into()
            .expect("16 bytes");
        let sealed = r.bytes16().map_err(|e| CardError::Corrupt(e.to_string()))?;
        let key = stretch_secret(pin.as_bytes(), &salt, STRETCH_ITERATIONS);
        match aead_decrypt(&key, sealed, b"lpki.card.sk") {
            Ok(sk_bytes) => {
                if sk_bytes.len() != params.scalar_len() {
                    return Err(CardError::Corrupt("sealed key has wrong width".into()));
                }
                self.attempts_left = MAX_PIN_ATTEMPTS;
                Ok(U256::from_be_bytes(&sk_bytes).expect("scalar_len <= 32"))
            }
            Err(_) => {
                self.attempts_left -= 1;
                if self.attempts_left == 0 {
                    Err(CardError::Blocked)
                } else {
                    Err(CardError::BadPin {
                        attempts_left: self.attempts_left,
                    })
                }
            }
        }
    }

    /// The public half: key and certificate, no code required.
    pub fn public_record(
        &self,
        params: &DomainParameters,
    ) -> Result<(ECPoint, Certificate), CardError> {
        let raw = self
            .files
            .get(&PUBLIC_RECORD_FILE)
            .ok_or_else(|| CardError::Corrupt("public record file missing".into()))?;
        let mut r = ByteReader::new(raw);
        let pk_bytes = r.bytes16().map_err(|e| CardError::Corrupt(e.to_string()))?;
        let pk = params
            .decompress(pk_bytes)
            .map_err(|e: PointDecodeError| CardError::Corrupt(e.to_string()))?;
        let cert_bytes = r.bytes16().map_err(|e| CardError::Corrupt(e.to_string()))?;
        let cert = Certificate::decode(params, cert_bytes)
            .map_err(|e| CardError::Corrupt(e.to_string()))?;
        Ok((pk, cert))
    }

    /// Overwrites the public record, used after renewal.
    pub fn replace_certificate(
        &mut self,
        params: &DomainParameters,
        pk: &ECPoint,
        cert: &Certificate,
    ) {
        let mut public_file = ByteWriter::new();
        public_file.bytes16(&params.compress(pk));
        public_file.bytes16(&cert.encode(params));
        self.files.insert(PUBLIC_RECORD_FILE, public_file.finish());
    }

    pub fn is_blocked(&self) -> bool {
        self.attempts_left == 0
    }

    /// Raw file access, mirroring a card reader.
    pub fn read_file(&self, id: u16) -> Option<&[u8]> {
        self.files.get(&id).map(Vec::as_slice)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.u8(self.attempts_left);
        w.u16(self.files.len() as u16);
        for (id, content) in &self.files {
            w.u16(*id);
            w.bytes16(content);
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<SmartCard, DecodeError> {
        let mut r = ByteReader::new(bytes);
        let attempts_left = r.u8()?;
        let count = r.u16()?;
        let mut files = BTreeMap::new();
        let mut last = None;
        for _ in 0..count {
            let id = r.u16()?;
            if last.is_some_and(|l| l >= id) {
                return Err(DecodeError::new("file ids out of order"));
            }
            last = Some(id);
            files.insert(id, r.bytes16()?.to_vec());
        }
        r.expect_end()?;
        Ok(SmartCard {
            files,
            attempts_left,
        })
    }
}
