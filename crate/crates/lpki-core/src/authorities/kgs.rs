//! Key generation server: makes subscriber keypairs on the operator
//! side, has them certified, and hands back a sealed card plus its
//! activation code. Subscribers who bring their own keys skip this
//! component entirely and enroll through the possession-proof path.

use crate::authorities::ca::{CertificationAuthority, CertifyError};
use crate::authorities::ra::RegistrationRecord;
use crate::cert::Certificate;
use crate::ec::{DomainParameters, KeyGenError};
use crate::rng::{RandomSource, RngFailure};
use crate::smartcard::{CardError, SmartCard};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ProvisionError {
    KeyGen(KeyGenError),
    Certify(CertifyError),
    Card(CardError),
    Rng(RngFailure),
}

impl std::fmt::Display for ProvisionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProvisionError::KeyGen(e) => write!(f, "{e}"),
            ProvisionError::Certify(e) => write!(f, "certification refused: {e}"),
            ProvisionError::Card(e) => write!(f, "{e}"),
            ProvisionError::Rng(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ProvisionError {}

/// Everything the subscriber walks away with.
#[derive(Debug)]
pub struct ProvisionedSubscriber {
    pub card: SmartCard,
    pub certificate: Certificate,
    /// Six-digit activation code, delivered out of band in a real
    /// deployment; returned here so scenarios can drive the card.
    pub activation_code: String,
}

/// Uniform six-digit code. Rejection sampling over a 32-bit draw keeps
/// the distribution exact.
pub fn activation_code(rng: &mut dyn RandomSource) -> Result<String, RngFailure> {
    loop {
        let mut raw = [0u8; 4];
        rng.fill(&mut raw)?;
        let v = u32::from_be_bytes(raw);
        // Largest multiple of 10^6 below 2^32.
        if v < 4_294_000_000 {
            return Ok(format!("{:06}", v % 1_000_000));
        }
    }
}

/// Generates a keypair for `registration`, certifies it (escrow applies
/// per CA policy), and seals it onto a card.
pub fn provision_subscriber(
    params: &DomainParameters,
    ca: &mut CertificationAuthority,
    registration: &RegistrationRecord,
    now: u64,
    rng: &mut dyn RandomSource,
) -> Result<ProvisionedSubscriber, ProvisionError> {
    let (sk, pk) = params.generate_keypair(rng).map_err(ProvisionError::KeyGen)?;
    let certificate = ca
        .certify_generated(params, registration, &sk, &pk, now, rng)
        .map_err(ProvisionError::Certify)?;
    let pin = activation_code(rng).map_err(ProvisionError::Rng)?;
    let card = SmartCard::provision(params, &sk, &pk, &certificate, &pin, rng)
        .map_err(ProvisionError::Card)?;
    Ok(ProvisionedSubscriber {
        card,
        certificate,
        activation_code: pin,
    })
}
