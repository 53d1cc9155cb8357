//! Signcryption: confidentiality and origin authentication in one pass,
//! cheaper than signing then encrypting.
//!
//! The sender spends one scalar multiplication, the recipient two. The
//! scheme is the shortened x-coordinate variant: a fresh scalar v yields a
//! shared point v*PK_B whose hash splits into a cipher key and a tag key;
//! the tag doubles as the challenge in s = v / (tag + sk_A) mod n.
//!
//! Ordinarily only the recipient can check origin, since unwinding s needs
//! sk_B. For disputes the recipient can publish the shared point together
//! with a discrete-log equality proof, after which anyone can replay the
//! decryption and attribute the message; see [`disclose`] and
//! [`judge_verify`].

use crate::codec::{ByteReader, ByteWriter, DecodeError};
use crate::ec::{DomainParameters, ECPoint, KeyGenError};
use crate::primitives::{
    aead_decrypt, aead_encrypt, hash_parts, kdf, keyed_hash, AeadError, NONCE_LEN, SYM_KEY_LEN,
};
use crate::rng::RandomSource;
use crate::uint::U256;

/// Output of [`signcrypt`]: ciphertext plus the (r, s) pair. The r
/// component is a full keyed-hash tag; s is a scalar mod n.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SigncryptedMessage {
    pub c: Vec<u8>,
    pub r: [u8; 32],
    pub s: U256,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SigncryptError {
    KeyGen(KeyGenError),
    /// tag + sk_A vanished mod n on every attempt.
    RetriesExhausted,
}

impl std::fmt::Display for SigncryptError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SigncryptError::KeyGen(e) => write!(f, "{e}"),
            SigncryptError::RetriesExhausted => write!(f, "signcryption retries exhausted"),
        }
    }
}

impl std::error::Error for SigncryptError {}

impl From<KeyGenError> for SigncryptError {
    fn from(e: KeyGenError) -> Self {
        SigncryptError::KeyGen(e)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum UnsigncryptError {
    /// s outside [1, n-1].
    MalformedS,
    /// The recovered shared point is the identity; inputs are hostile.
    DegenerateSharedPoint,
    /// Ciphertext failed authenticated decryption.
    BadCiphertext,
    /// Plaintext recovered but the origin tag does not match.
    TagMismatch,
}

impl std::fmt::Display for UnsigncryptError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            UnsigncryptError::MalformedS => "s component out of range",
            UnsigncryptError::DegenerateSharedPoint => "shared point degenerated to identity",
            UnsigncryptError::BadCiphertext => "ciphertext failed authentication",
            UnsigncryptError::TagMismatch => "origin tag mismatch",
        };
        f.write_str(msg)
    }
}

impl std::error::Error for UnsigncryptError {}

impl From<AeadError> for UnsigncryptError {
    fn from(_: AeadError) -> Self {
        UnsigncryptError::BadCiphertext
    }
}

const MAX_SIGNCRYPT_RETRIES: usize = 16;

/// Splits the hash of a shared point into (cipher key, tag key, nonce).
fn derive_keys(
    params: &DomainParameters,
    shared: &ECPoint,
) -> ([u8; SYM_KEY_LEN], [u8; SYM_KEY_LEN], [u8; NONCE_LEN]) {
    let encoded = params.compress(shared);
    let full = hash_parts("lpki.signcrypt.key", &[&encoded]);
    let mut k1 = [0u8; SYM_KEY_LEN];
    let mut k2 = [0u8; SYM_KEY_LEN];
    k1.copy_from_slice(&full[..SYM_KEY_LEN]);
    k2.copy_from_slice(&full[SYM_KEY_LEN..]);
    let mut nonce = [0u8; NONCE_LEN];
    kdf("lpki.signcrypt.nonce", &full, &mut nonce);
    (k1, k2, nonce)
}

/// Tag bytes interpreted as a scalar mod n.
fn tag_scalar(params: &DomainParameters, r: &[u8; 32]) -> U256 {
    U256::from_be_bytes(r).expect("32 bytes").rem(&params.n)
}

/// Signcrypts `msg` from the holder of `sk_sender` to `pk_recipient`.
/// One scalar multiplication per attempt; retries only on the negligible
/// event tag + sk_sender = 0 mod n.
pub fn signcrypt(
    params: &DomainParameters,
    sk_sender: &U256,
    pk_recipient: &ECPoint,
    msg: &[u8],
    rng: &mut dyn RandomSource,
) -> Result<SigncryptedMessage, SigncryptError> {
    for _ in 0..MAX_SIGNCRYPT_RETRIES {
        let v = params.random_scalar(rng)?;
        let shared = params.scalar_mult(&v, pk_recipient);
        let (k1, k2, nonce) = derive_keys(params, &shared);
        let c = aead_encrypt(&k1, &nonce, msg, b"");
        let r = keyed_hash(&k2, msg);
        let denom = tag_scalar(params, &r).add_mod(&sk_sender.rem(&params.n), &params.n);
        let denom_inv = match denom.inv_mod(&params.n) {
            Some(inv) => inv,
            None => continue,
        };
        let s = v.mul_mod(&denom_inv, &params.n);
        return Ok(SigncryptedMessage { c, r, s });
    }
    Err(SigncryptError::RetriesExhausted)
}

/// Recovers and authenticates a signcrypted message. Exactly two scalar
/// multiplications: the shared point is rebuilt as
/// (s*sk_recipient)*PK_sender + (s*sk_recipient*tag)*G.
pub fn unsigncrypt(
    params: &DomainParameters,
    sk_recipient: &U256,
    pk_sender: &ECPoint,
    sealed: &SigncryptedMessage,
) -> Result<Vec<u8>, UnsigncryptError> {
    if sealed.s.is_zero() || sealed.s >= params.n {
        return Err(UnsigncryptError::MalformedS);
    }
    let t = sealed.s.mul_mod(sk_recipient, &params.n);
    let r_scalar = tag_scalar(params, &sealed.r);
    let shared = params.point_add(
        &params.scalar_mult(&t, pk_sender),
        &params.scalar_mult(&t.mul_mod(&r_scalar, &params.n), &params.g),
    );
    if shared.is_infinity() {
        return Err(UnsigncryptError::DegenerateSharedPoint);
    }
    let (k1, k2, _) = derive_keys(params, &shared);
    let msg = aead_decrypt(&k1, &sealed.c, b"")?;
    if keyed_hash(&k2, &msg) != sealed.r {
        return Err(UnsigncryptError::TagMismatch);
    }
    Ok(msg)
}

impl SigncryptedMessage {
    /// Bytes beyond the plaintext the scheme itself adds: the two
    /// signature-like components. Framing the cipher layer adds (nonce,
    /// tag) is common to any encrypted baseline and excluded.
    pub fn scheme_overhead(&self, params: &DomainParameters) -> usize {
        self.r.len() + params.scalar_len()
    }

    pub fn encode(&self, params: &DomainParameters) -> Vec<u8> {
        let mut w = ByteWriter::new();
        // 32-bit length: ciphertexts may exceed 64 KiB.
        w.u32(self.c.len() as u32);
        w.raw(&self.c);
        w.raw(&self.r);
        w.raw(&self.s.to_be_bytes_sized(params.scalar_len()));
        w.finish()
    }

    pub fn decode(params: &DomainParameters, bytes: &[u8]) -> Result<SigncryptedMessage, DecodeError> {
        let mut rd = ByteReader::new(bytes);
        let c_len = rd.u32()? as usize;
        let c = rd.take(c_len)?.to_vec();
        let r: [u8; 32] = rd
            .take(32)?
            .try_into()
            .expect("take returned exactly 32 bytes");
        let s_bytes = rd.take(params.scalar_len())?;
        rd.expect_end()?;
        let s = U256::from_be_bytes(s_bytes).expect("scalar_len <= 32");
        Ok(SigncryptedMessage { c, r, s })
    }
}

/// Evidence a recipient publishes to make one signcrypted message
/// third-party checkable: the shared point and a Chaum-Pedersen proof
/// that it is sk_recipient * U for the same sk_recipient behind
/// PK_recipient.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Disclosure {
    pub shared_point: ECPoint,
    pub challenge: U256,
    pub response: U256,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DiscloseError {
    KeyGen(KeyGenError),
    /// The bundle does not decrypt for this recipient, so there is
    /// nothing to attest.
    Unverifiable(UnsigncryptError),
}

impl std::fmt::Display for DiscloseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DiscloseError::KeyGen(e) => write!(f, "{e}"),
            DiscloseError::Unverifiable(e) => write!(f, "cannot attest bundle: {e}"),
        }
    }
}

impl std::error::Error for DiscloseError {}

/// The point anyone can compute from public data: U = s*(PK_sender + tag*G).
fn public_base(params: &DomainParameters, pk_sender: &ECPoint, sealed: &SigncryptedMessage) -> ECPoint {
    let r_scalar = tag_scalar(params, &sealed.r);
    let shifted = params.point_add(pk_sender, &params.scalar_mult(&r_scalar, &params.g));
    params.scalar_mult(&sealed.s, &shifted)
}

fn dleq_challenge(
    params: &DomainParameters,
    pk_recipient: &ECPoint,
    u: &ECPoint,
    v: &ECPoint,
    a1: &ECPoint,
    a2: &ECPoint,
) -> U256 {
    let digest = hash_parts(
        "lpki.signcrypt.dleq",
        &[
            &params.digest(),
            &params.compress(pk_recipient),
            &params.compress(u),
            &params.compress(v),
            &params.compress(a1),
            &params.compress(a2),
        ],
    );
    U256::from_be_bytes(&digest).expect("32 bytes").rem(&params.n)
}

/// Recipient-side: verify the bundle, then produce the public evidence.
pub fn disclose(
    params: &DomainParameters,
    sk_recipient: &U256,
    pk_sender: &ECPoint,
    sealed: &SigncryptedMessage,
    rng: &mut dyn RandomSource,
) -> Result<Disclosure, DiscloseError> {
    unsigncrypt(params, sk_recipient, pk_sender, sealed).map_err(DiscloseError::Unverifiable)?;
    let u = public_base(params, pk_sender, sealed);
    let v = params.scalar_mult(sk_recipient, &u);
    let w = params.random_scalar(rng).map_err(DiscloseError::KeyGen)?;
    let a1 = params.scalar_mult(&w, &params.g);
    let a2 = params.scalar_mult(&w, &u);
    let pk_recipient = params.scalar_mult(sk_recipient, &params.g);
    let challenge = dleq_challenge(params, &pk_recipient, &u, &v, &a1, &a2);
    let response = w.add_mod(&challenge.mul_mod(sk_recipient, &params.n), &params.n);
    Ok(Disclosure {
        shared_point: v,
        challenge,
        response,
    })
}

/// Anyone-side: given both public keys, the bundle and the disclosure,
/// recover the message and confirm it was signcrypted by the sender for
/// the recipient. Errors name the first check that failed.
pub fn judge_verify(
    params: &DomainParameters,
    pk_sender: &ECPoint,
    pk_recipient: &ECPoint,
    sealed: &SigncryptedMessage,
    disclosure: &Disclosure,
) -> Result<Vec<u8>, JudgeError> {
    if sealed.s.is_zero() || sealed.s >= params.n {
        return Err(JudgeError::MalformedBundle);
    }
    let u = public_base(params, pk_sender, sealed);
    if u.is_infinity() || disclosure.shared_point.is_infinity() {
        return Err(JudgeError::DegeneratePoint);
    }
    // Reconstruct the commitments from (challenge, response) and check the
    // challenge binds them.
    let neg_c = disclosure.challenge.neg_mod(&params.n);
    let a1 = params.point_add(
        &params.scalar_mult(&disclosure.response, &params.g),
        &params.scalar_mult(&neg_c, pk_recipient),
    );
    let a2 = params.point_add(
        &params.scalar_mult(&disclosure.response, &u),
        &params.scalar_mult(&neg_c, &disclosure.shared_point),
    );
    let expect = dleq_challenge(params, pk_recipient, &u, &disclosure.shared_point, &a1, &a2);
    if expect != disclosure.challenge {
        return Err(JudgeError::ProofRejected);
    }
    let (k1, k2, _) = derive_keys(params, &disclosure.shared_point);
    let msg = aead_decrypt(&k1, &sealed.c, b"").map_err(|_| JudgeError::DecryptionFailed)?;
    if keyed_hash(&k2, &msg) != sealed.r {
        return Err(JudgeError::TagMismatch);
    }
    Ok(msg)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum JudgeError {
    MalformedBundle,
    DegeneratePoint,
    /// The discrete-log equality proof did not verify.
    ProofRejected,
    DecryptionFailed,
    TagMismatch,
}

impl std::fmt::Display for JudgeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            JudgeError::MalformedBundle => "bundle components out of range",
            JudgeError::DegeneratePoint => "disclosure contains a degenerate point",
            JudgeError::ProofRejected => "equality proof rejected",
            JudgeError::DecryptionFailed => "disclosed key fails to decrypt",
            JudgeError::TagMismatch => "decrypted message does not match origin tag",
        };
        f.write_str(msg)
    }
}

impl std::error::Error for JudgeError {}
