//! End-entity message flows over an inspectable in-memory network.
//!
//! Two operating modes for sending: in mode 1 each entity fetches and
//! validates its peer's certificate and revocation status itself; in
//! mode 2 everything is routed through the validation authority, which
//! validates both sides and attaches a signed report the recipient can
//! check with a single signature verification. The same world runs both,
//! so the cost difference is directly measurable per entity.

use crate::authorities::ca::possession_context;
use crate::authorities::kgs::{self, ProvisionError};
use crate::authorities::ra::{RaError, SubscriberDetails};
use crate::authorities::va::ValidationReport;
use crate::authorities::{validate_certificate, CertValidationError};
use crate::cert::Certificate;
use crate::codec::DecodeError;
use crate::ec::{ECPoint, KeyGenError, PublicKeyFlaw};
use crate::hmqv::{derive_session_key, AgreementError, Role, SessionInputs, SESSION_KEY_LEN};
use crate::instrument::CostMeter;
use crate::ocsp::{OcspToken, REASON_SUPERSEDED};
use crate::pop::{prove_possession, PossessionProof};
use crate::primitives::hash;
use crate::repository::subscriber_dn;
use crate::signcrypt::{signcrypt, unsigncrypt, SigncryptError, SigncryptedMessage, UnsigncryptError};
use crate::smartcard::SmartCard;
use crate::wire::{
    MalformedWireMessage, MsgType, WireMessage, F_CERT, F_DETAIL, F_DIGEST, F_ENVELOPE,
    F_EPHEMERAL, F_INFO_TAG, F_OCSP, F_POLICY, F_REASON, F_REPORT, F_SENDER, F_SERIAL, F_TARGET,
    F_TSTOKEN, REASON_MALFORMED, REASON_NOT_FOUND, REASON_REFUSED, REASON_VALIDATION_FAILED,
};
use crate::world::{EndEntity, World};
use std::collections::VecDeque;

/// Test-only delivery faults, applied one per frame in injection order.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Fault {
    /// The next frame passes untouched; a spacer for aiming the faults
    /// below at a later frame in an exchange.
    PassNext,
    /// The next frame vanishes in flight.
    DropNext,
    /// One byte of the next frame is flipped: non-negative `offset`
    /// counts from the frame start, negative from the end.
    CorruptNext { offset: i64 },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TransportError {
    Dropped { from: String, to: String },
    /// Frame arrived but no longer parses.
    Garbled(MalformedWireMessage),
}

impl std::fmt::Display for TransportError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransportError::Dropped { from, to } => {
                write!(f, "frame from {from} to {to} was lost")
            }
            TransportError::Garbled(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for TransportError {}

/// Synchronous frame bus with a transcript. Exchanges are serialized by
/// the driving flow, which gives reliable ordered delivery by
/// construction; the fault queue exists for tests.
#[derive(Default)]
pub struct SimNetwork {
    transcript: Vec<String>,
    raw_frames: Vec<Vec<u8>>,
    faults: VecDeque<Fault>,
    seq: u64,
}

impl SimNetwork {
    pub fn new() -> SimNetwork {
        SimNetwork::default()
    }

    pub fn inject_fault(&mut self, fault: Fault) {
        self.faults.push_back(fault);
    }

    /// Carries one frame from `from` to `to`, applying at most one
    /// pending fault and logging the transit.
    pub fn frame(
        &mut self,
        from: &str,
        to: &str,
        msg: &WireMessage,
    ) -> Result<WireMessage, TransportError> {
        let mut bytes = msg.encode();
        self.seq += 1;
        let mut note = "";
        match self.faults.pop_front() {
            Some(Fault::PassNext) | None => {}
            Some(Fault::DropNext) => {
                self.transcript.push(format!(
                    "{:04} {from} -> {to} {} {}B dropped",
                    self.seq,
                    msg.msg_type,
                    bytes.len()
                ));
                return Err(TransportError::Dropped {
                    from: from.into(),
                    to: to.into(),
                });
            }
            Some(Fault::CorruptNext { offset }) => {
                let i = offset.rem_euclid(bytes.len() as i64) as usize;
                bytes[i] ^= 0x01;
                note = " corrupted";
            }
        }
        self.transcript.push(format!(
            "{:04} {from} -> {to} {} {}B{note}",
            self.seq,
            msg.msg_type,
            bytes.len()
        ));
        self.raw_frames.push(bytes.clone());
        WireMessage::decode(&bytes).map_err(TransportError::Garbled)
    }

    /// One line per frame: `seq from -> to type size[ note]`.
    pub fn transcript(&self) -> &[String] {
        &self.transcript
    }

    /// Raw bytes of every frame that reached the wire this session.
    /// Not persisted across snapshots.
    pub fn raw_frames(&self) -> &[Vec<u8>] {
        &self.raw_frames
    }

    pub fn frames_carried(&self) -> u64 {
        self.seq
    }

    pub(crate) fn from_parts(transcript: Vec<String>, seq: u64) -> SimNetwork {
        SimNetwork {
            transcript,
            raw_frames: Vec::new(),
            faults: VecDeque::new(),
            seq,
        }
    }
}

/// Everything that can go wrong driving a flow end to end.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FlowError {
    UnknownEntity(String),
    AlreadyCertified(String),
    Registration(RaError),
    Provision(ProvisionError),
    Certify(crate::authorities::ca::CertifyError),
    /// Claimed key failed structural validation at enrollment.
    InvalidPublicKey(PublicKeyFlaw),
    KeyGen(KeyGenError),
    Signcrypt(SigncryptError),
    Sign(crate::ecdsa::SignError),
    Transport(TransportError),
    /// The peer answered with a protocol error frame.
    PeerError { reason: u8, detail: String },
    /// A response frame was structurally wrong for the exchange.
    Protocol(String),
    /// Envelope bytes did not parse at the recipient.
    MalformedEnvelope(DecodeError),
    /// Sender-side certificate validation of the recipient failed.
    SenderValidationFailed(CertValidationError),
    /// Recipient-side certificate validation of the sender failed.
    RecipientValidationFailed(CertValidationError),
    /// Unsigncryption failed: tampered, misdirected, or forged.
    Verification(UnsigncryptError),
    /// The validation authority refused the exchange.
    DelegatedValidationFailed { detail: String },
    /// Attached validation report did not parse.
    MalformedReport(DecodeError),
    /// Attached validation report failed signature or binding checks.
    VaSignatureInvalid,
    Agreement(AgreementError),
    /// Operation requires capabilities the entity lacks.
    Refused { detail: String },
}

impl std::fmt::Display for FlowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FlowError::UnknownEntity(id) => write!(f, "no enrolled entity {id}"),
            FlowError::AlreadyCertified(id) => write!(f, "{id} is already enrolled"),
            FlowError::Registration(e) => write!(f, "{e}"),
            FlowError::Provision(e) => write!(f, "{e}"),
            FlowError::Certify(e) => write!(f, "{e}"),
            FlowError::InvalidPublicKey(flaw) => write!(f, "invalid public key: {flaw}"),
            FlowError::KeyGen(e) => write!(f, "{e}"),
            FlowError::Signcrypt(e) => write!(f, "{e}"),
            FlowError::Sign(e) => write!(f, "{e}"),
            FlowError::Transport(e) => write!(f, "{e}"),
            FlowError::PeerError { reason, detail } => {
                write!(f, "peer error 0x{reason:02x}: {detail}")
            }
            FlowError::Protocol(msg) => write!(f, "protocol violation: {msg}"),
            FlowError::MalformedEnvelope(e) => write!(f, "envelope: {e}"),
            FlowError::SenderValidationFailed(e) => {
                write!(f, "sender-side validation failed: {e}")
            }
            FlowError::RecipientValidationFailed(e) => {
                write!(f, "recipient-side validation failed: {e}")
            }
            FlowError::Verification(e) => write!(f, "verification failure: {e}"),
            FlowError::DelegatedValidationFailed { detail } => {
                write!(f, "delegated validation failed: {detail}")
            }
            FlowError::MalformedReport(e) => write!(f, "validation report: {e}"),
            FlowError::VaSignatureInvalid => write!(f, "validation report signature invalid"),
            FlowError::Agreement(e) => write!(f, "{e}"),
            FlowError::Refused { detail } => write!(f, "refused: {detail}"),
        }
    }
}

impl std::error::Error for FlowError {}

/// Result of a completed send: the recovered plaintext plus the curve
/// work each end entity spent on this delivery.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DeliveryOutcome {
    pub message: Vec<u8>,
    pub sender_mults: u64,
    pub recipient_mults: u64,
}

/// Result of an authenticated key agreement routed through the VA.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SessionOutcome {
    pub initiator_key: [u8; SESSION_KEY_LEN],
    pub responder_key: [u8; SESSION_KEY_LEN],
    pub initiator_mults: u64,
    pub responder_mults: u64,
}

const GATEWAY: &str = "gateway";
const VA_NODE: &str = "va";
const CA_NODE: &str = "ca";
const TS_NODE: &str = "ts";

impl World {
    fn require_entity(&self, id: &str) -> Result<&EndEntity, FlowError> {
        self.entities
            .get(id)
            .ok_or_else(|| FlowError::UnknownEntity(id.into()))
    }

    fn credit_mults(&mut self, id: &str, delta: u64) {
        if let Some(e) = self.entities.get_mut(id) {
            e.mults += delta;
        }
    }

    fn transit(&mut self, from: &str, to: &str, msg: &WireMessage) -> Result<WireMessage, FlowError> {
        self.network.frame(from, to, msg).map_err(FlowError::Transport)
    }

    fn expect_response(
        exchange: &str,
        want: MsgType,
        got: WireMessage,
    ) -> Result<WireMessage, FlowError> {
        match got.msg_type {
            t if t == want => Ok(got),
            MsgType::Error => Err(FlowError::PeerError {
                reason: got.field(F_REASON).and_then(|r| r.first().copied()).unwrap_or(0),
                detail: got.field_str(F_DETAIL).unwrap_or("").to_string(),
            }),
            other => Err(FlowError::Protocol(format!(
                "{exchange}: expected {want}, got {other}"
            ))),
        }
    }

    /// Enrolls a subscriber. Mode 1 has the infrastructure generate the
    /// key and provision a sealed card; mode 2 generates locally and
    /// proves possession to the certification authority. Returns the
    /// normalized subject identifier.
    pub fn enroll(
        &mut self,
        msisdn: &str,
        display_name: &str,
        mode: u8,
        can_validate: bool,
    ) -> Result<String, FlowError> {
        assert!(mode == 1 || mode == 2, "mode is 1 or 2");
        let details = SubscriberDetails {
            display_name: display_name.into(),
            msisdn: msisdn.into(),
        };
        let registration = self.ra.register(&details, self.clock).map_err(|e| match e {
            RaError::DuplicateRegistration { subject_id } => {
                FlowError::AlreadyCertified(subject_id)
            }
            other => FlowError::Registration(other),
        })?;
        let id = registration.subject_id.clone();
        if self.entities.contains_key(&id) {
            return Err(FlowError::AlreadyCertified(id));
        }

        let entity = if mode == 1 {
            let provisioned = kgs::provision_subscriber(
                &self.params,
                &mut self.ca,
                &registration,
                self.clock,
                &mut self.rng,
            )
            .map_err(FlowError::Provision)?;
            let mut card = provisioned.card;
            let sk = card
                .unlock_private_key(&self.params, &provisioned.activation_code)
                .expect("freshly provisioned card accepts its own code");
            EndEntity::assemble(
                &registration,
                can_validate,
                1,
                card,
                provisioned.activation_code,
                provisioned.certificate,
                sk,
                &self.ca.pk,
                &self.va.pk,
            )
        } else {
            // Subscriber-side generation with proof of possession; the
            // entity pays for the key and the proof.
            let meter = CostMeter::start();
            let (sk, pk) = self
                .params
                .generate_keypair(&mut self.rng)
                .map_err(FlowError::KeyGen)?;
            let ctx = possession_context(&self.ca.name, &id);
            let proof = prove_possession(&self.params, &sk, &pk, &ctx, &mut self.rng)
                .map_err(FlowError::KeyGen)?;
            let own_mults = meter.reading();
            let certificate = self
                .ca
                .certify_external(
                    &self.params,
                    &registration,
                    &pk,
                    Some(&proof),
                    self.clock,
                    &mut self.rng,
                )
                .map_err(FlowError::Certify)?;
            let pin = kgs::activation_code(&mut self.rng)
                .map_err(|e| FlowError::KeyGen(KeyGenError::Rng(e)))?;
            let card = SmartCard::provision(&self.params, &sk, &pk, &certificate, &pin, &mut self.rng)
                .map_err(|e| FlowError::Refused {
                    detail: e.to_string(),
                })?;
            let mut entity = EndEntity::assemble(
                &registration,
                can_validate,
                2,
                card,
                pin,
                certificate,
                sk,
                &self.ca.pk,
                &self.va.pk,
            );
            entity.mults += own_mults;
            entity
        };

        self.repository
            .publish(&subscriber_dn(&id), entity.certificate.clone());
        self.entities.insert(id.clone(), entity);
        Ok(id)
    }

    /// Registers `msisdn` and asks the certification authority to certify
    /// a caller-supplied public key. This is the enrollment surface the
    /// attack demonstration drives: the key is whatever the caller
    /// claims, and the proof is whatever the caller produced.
    pub fn enroll_claimed_key(
        &mut self,
        msisdn: &str,
        display_name: &str,
        claimed_pk: &ECPoint,
        proof: Option<&PossessionProof>,
    ) -> Result<Certificate, FlowError> {
        let details = SubscriberDetails {
            display_name: display_name.into(),
            msisdn: msisdn.into(),
        };
        let registration = self.ra.register(&details, self.clock).map_err(|e| match e {
            RaError::DuplicateRegistration { subject_id } => {
                FlowError::AlreadyCertified(subject_id)
            }
            other => FlowError::Registration(other),
        })?;
        let cert = self
            .ca
            .certify_external(
                &self.params,
                &registration,
                claimed_pk,
                proof,
                self.clock,
                &mut self.rng,
            )
            .map_err(|e| match e {
                crate::authorities::ca::CertifyError::KeyRejected(flaw) => {
                    FlowError::InvalidPublicKey(flaw)
                }
                other => FlowError::Certify(other),
            })?;
        self.repository
            .publish(&subscriber_dn(&registration.subject_id), cert.clone());
        Ok(cert)
    }

    /// Answers one service request the way the addressed infrastructure
    /// node would: gateway lookups, status queries, timestamp requests,
    /// and delegated validation. This is the handler behind the in-world
    /// flows and the socket transport alike.
    pub fn service_answer(&mut self, request: &WireMessage) -> WireMessage {
        match request.msg_type {
            MsgType::GatewayQuery => self.gateway_answer(request),
            MsgType::OcspRequest => self.ocsp_answer(request),
            MsgType::TsRequest => self.ts_answer(request),
            MsgType::DpvRequest => self.dpv_answer(request),
            other => WireMessage::error(
                REASON_REFUSED,
                &format!("{other} is not a service request"),
            ),
        }
    }

    fn gateway_answer(&mut self, query: &WireMessage) -> WireMessage {
        let Some(target) = query.field_str(F_TARGET) else {
            return WireMessage::error(REASON_MALFORMED, "query lacks a target");
        };
        let Some(info_tag) = query.field_str(F_INFO_TAG) else {
            return WireMessage::error(REASON_MALFORMED, "query lacks an information tag");
        };
        if info_tag != "1" && info_tag != "2" {
            return WireMessage::error(
                REASON_MALFORMED,
                &format!("unknown information tag {info_tag:?}"),
            );
        }
        let Some(cert) = self.repository.fetch(&subscriber_dn(target)).cloned() else {
            return WireMessage::error(
                REASON_NOT_FOUND,
                &format!("no repository entry for {target}"),
            );
        };
        let mut response = WireMessage::new(MsgType::GatewayResponse)
            .with_str(F_TARGET, target)
            .with(F_CERT, cert.encode(&self.params));
        if info_tag == "2" {
            match self
                .ca
                .ocsp_response(&self.params, cert.serial, self.clock, &mut self.rng)
            {
                Ok(token) => response = response.with(F_OCSP, token.encode(&self.params)),
                Err(e) => return WireMessage::error(REASON_REFUSED, &e.to_string()),
            }
        }
        response
    }

    /// Fetches a peer's certificate via the gateway; information tag "1"
    /// asks for the certificate alone, "2" adds a fresh status token.
    pub fn gateway_fetch(
        &mut self,
        requester: &str,
        target: &str,
        info_tag: &str,
    ) -> Result<(Certificate, Option<OcspToken>), FlowError> {
        let query = WireMessage::new(MsgType::GatewayQuery)
            .with_str(F_SENDER, requester)
            .with_str(F_TARGET, target)
            .with_str(F_INFO_TAG, info_tag);
        let query = self.transit(requester, GATEWAY, &query)?;
        let response = self.gateway_answer(&query);
        let response = self.transit(GATEWAY, requester, &response)?;
        let response = Self::expect_response("gateway", MsgType::GatewayResponse, response)?;
        let cert_bytes = response
            .field(F_CERT)
            .ok_or_else(|| FlowError::Protocol("gateway response lacks certificate".into()))?;
        let cert = Certificate::decode(&self.params, cert_bytes)
            .map_err(|e| FlowError::Protocol(format!("gateway certificate: {e}")))?;
        let token = match response.field(F_OCSP) {
            Some(bytes) => Some(
                OcspToken::decode(&self.params, bytes)
                    .map_err(|e| FlowError::Protocol(format!("gateway status token: {e}")))?,
            ),
            None => None,
        };
        Ok((cert, token))
    }

    /// Direct status query to the issuer, used when the certificate is
    /// already cached.
    pub fn ocsp_query(&mut self, requester: &str, serial: u64) -> Result<OcspToken, FlowError> {
        let request = WireMessage::new(MsgType::OcspRequest)
            .with_str(F_SENDER, requester)
            .with_u64(F_SERIAL, serial);
        let request = self.transit(requester, CA_NODE, &request)?;
        let response = self.ocsp_answer(&request);
        let response = self.transit(CA_NODE, requester, &response)?;
        let response = Self::expect_response("status", MsgType::OcspResponse, response)?;
        let bytes = response
            .field(F_OCSP)
            .ok_or_else(|| FlowError::Protocol("status response lacks token".into()))?;
        OcspToken::decode(&self.params, bytes)
            .map_err(|e| FlowError::Protocol(format!("status token: {e}")))
    }

    fn ocsp_answer(&mut self, request: &WireMessage) -> WireMessage {
        match request.field_u64(F_SERIAL) {
            None => WireMessage::error(REASON_MALFORMED, "status request lacks serial"),
            Some(serial) => match self
                .ca
                .ocsp_response(&self.params, serial, self.clock, &mut self.rng)
            {
                Ok(token) => WireMessage::new(MsgType::OcspResponse)
                    .with(F_OCSP, token.encode(&self.params)),
                Err(e) => WireMessage::error(REASON_REFUSED, &e.to_string()),
            },
        }
    }

    fn ts_answer(&mut self, request: &WireMessage) -> WireMessage {
        match request.field(F_DIGEST) {
            Some(d) if d.len() == 32 => {
                let d: [u8; 32] = d.try_into().expect("length checked");
                match self.ts.stamp(&self.params, &d, self.clock, &mut self.rng) {
                    Ok(token) => WireMessage::new(MsgType::TsResponse)
                        .with(F_TSTOKEN, token.encode(&self.params)),
                    Err(e) => WireMessage::error(REASON_REFUSED, &e.to_string()),
                }
            }
            _ => WireMessage::error(REASON_MALFORMED, "timestamp request lacks digest"),
        }
    }

    fn dpv_answer(&mut self, request: &WireMessage) -> WireMessage {
        match (request.field_str(F_SENDER), request.field_str(F_TARGET)) {
            (Some(s), Some(r)) => {
                let (s, r) = (s.to_string(), r.to_string());
                let meter = CostMeter::start();
                let verdict = self.va.validate_pair(
                    &self.params,
                    &self.repository,
                    &self.ca,
                    &s,
                    &r,
                    self.clock,
                    self.ocsp_window,
                    &mut self.rng,
                );
                self.va_mults += meter.reading();
                match verdict {
                    Ok(report) => WireMessage::new(MsgType::DpvResponse)
                        .with(F_REPORT, report.encode(&self.params)),
                    Err(e) => WireMessage::error(REASON_VALIDATION_FAILED, &e.to_string()),
                }
            }
            _ => WireMessage::error(REASON_MALFORMED, "validation request lacks parties"),
        }
    }

    /// Explicit delegated validation: ask the VA for a signed report on a
    /// (sender, recipient) pair without sending any data.
    pub fn dpv_validate(
        &mut self,
        requester: &str,
        sender_id: &str,
        recipient_id: &str,
    ) -> Result<ValidationReport, FlowError> {
        let request = WireMessage::new(MsgType::DpvRequest)
            .with_str(F_POLICY, "default")
            .with_str(F_SENDER, sender_id)
            .with_str(F_TARGET, recipient_id);
        let request = self.transit(requester, VA_NODE, &request)?;
        let response = self.dpv_answer(&request);
        let response = self.transit(VA_NODE, requester, &response)?;
        let response = Self::expect_response("delegated validation", MsgType::DpvResponse, response)?;
        let bytes = response
            .field(F_REPORT)
            .ok_or_else(|| FlowError::Protocol("validation response lacks report".into()))?;
        ValidationReport::decode(&self.params, bytes).map_err(FlowError::MalformedReport)
    }

    /// Obtains peer material for a local validation: the cached
    /// certificate plus a direct status query when available, otherwise a
    /// full gateway fetch with tag "2".
    fn peer_material(
        &mut self,
        requester: &str,
        peer: &str,
    ) -> Result<(Certificate, OcspToken), FlowError> {
        let cached = self
            .entities
            .get(requester)
            .and_then(|e| e.peer_cache.get(peer))
            .cloned();
        match cached {
            Some(cert) => {
                let token = self.ocsp_query(requester, cert.serial)?;
                Ok((cert, token))
            }
            None => {
                let (cert, token) = self.gateway_fetch(requester, peer, "2")?;
                let token =
                    token.ok_or_else(|| FlowError::Protocol("tag-2 fetch lacks status".into()))?;
                Ok((cert, token))
            }
        }
    }

    /// Local validation of a peer certificate, metered against `owner`.
    /// On failure the stale cache entry is evicted so the next attempt
    /// refetches.
    fn validate_peer_locally(
        &mut self,
        owner: &str,
        peer: &str,
        cert: &Certificate,
        token: &OcspToken,
    ) -> Result<ECPoint, CertValidationError> {
        let anchor = self.entities[owner].trusted_ca_pk;
        let meter = CostMeter::start();
        let verdict = validate_certificate(
            &self.params,
            cert,
            &anchor,
            self.clock,
            Some(token),
            self.ocsp_window,
        );
        let delta = meter.reading();
        self.credit_mults(owner, delta);
        let entity = self.entities.get_mut(owner).expect("caller checked");
        match verdict {
            Ok(pk) => {
                entity.peer_cache.insert(peer.into(), cert.clone());
                Ok(pk)
            }
            Err(e) => {
                entity.peer_cache.remove(peer);
                Err(e)
            }
        }
    }

    /// Mode-1 delivery: both end entities fetch and validate each other's
    /// material themselves, then the envelope crosses directly.
    pub fn mode1_send(
        &mut self,
        sender_id: &str,
        recipient_id: &str,
        message: &[u8],
    ) -> Result<DeliveryOutcome, FlowError> {
        let sender = self.require_entity(sender_id)?;
        if !sender.can_validate {
            return Err(FlowError::Refused {
                detail: format!("{sender_id} is not configured for local validation"),
            });
        }
        let sender_sk = sender.sk;
        let sender_mults_before = sender.mults;

        // Sender side: peer material, validation, signcryption.
        let (peer_cert, token) = self.peer_material(sender_id, recipient_id)?;
        let recipient_pk = self
            .validate_peer_locally(sender_id, recipient_id, &peer_cert, &token)
            .map_err(FlowError::SenderValidationFailed)?;
        let meter = CostMeter::start();
        let sealed = signcrypt(&self.params, &sender_sk, &recipient_pk, message, &mut self.rng)
            .map_err(FlowError::Signcrypt)?;
        let delta = meter.reading();
        self.credit_mults(sender_id, delta);

        let frame = WireMessage::new(MsgType::Mode1Data)
            .with_str(F_SENDER, sender_id)
            .with_str(F_TARGET, recipient_id)
            .with_chunked(F_ENVELOPE, &sealed.encode(&self.params));
        let delivered = self.transit(sender_id, recipient_id, &frame)?;

        // Recipient side: symmetric fetch/validate, then unsigncrypt.
        let recipient = self.require_entity(recipient_id)?;
        let recipient_sk = recipient.sk;
        let recipient_mults_before = recipient.mults;
        let envelope = delivered
            .field_concat(F_ENVELOPE)
            .ok_or_else(|| FlowError::Protocol("data frame lacks envelope".into()))?;
        let sealed = SigncryptedMessage::decode(&self.params, &envelope)
            .map_err(FlowError::MalformedEnvelope)?;
        let (sender_cert, sender_token) = self.peer_material(recipient_id, sender_id)?;
        let sender_pk = self
            .validate_peer_locally(recipient_id, sender_id, &sender_cert, &sender_token)
            .map_err(FlowError::RecipientValidationFailed)?;
        let meter = CostMeter::start();
        let plain = unsigncrypt(&self.params, &recipient_sk, &sender_pk, &sealed)
            .map_err(FlowError::Verification)?;
        let delta = meter.reading();
        self.credit_mults(recipient_id, delta);

        Ok(DeliveryOutcome {
            message: plain,
            sender_mults: self.entities[sender_id].mults - sender_mults_before,
            recipient_mults: self.entities[recipient_id].mults - recipient_mults_before,
        })
    }

    /// Mode-2 delivery: the envelope goes to the validation authority,
    /// which validates both parties, then forwards it with a signed
    /// report. The recipient checks one signature instead of running the
    /// validation pipeline.
    pub fn mode2_send(
        &mut self,
        sender_id: &str,
        recipient_id: &str,
        message: &[u8],
    ) -> Result<DeliveryOutcome, FlowError> {
        let sender = self.require_entity(sender_id)?;
        let sender_sk = sender.sk;
        let sender_mults_before = sender.mults;

        // The sender's only curve work is the signcryption itself. The
        // recipient key comes from its own certificate material held
        // since enrollment or the last exchange; first contact uses a
        // tag-"1" gateway fetch (no validation, the VA does that).
        let recipient_pk_bytes = match self
            .entities
            .get(sender_id)
            .and_then(|e| e.peer_cache.get(recipient_id))
        {
            Some(cert) => cert.subject_pk.clone(),
            None => {
                let (cert, _) = self.gateway_fetch(sender_id, recipient_id, "1")?;
                let bytes = cert.subject_pk.clone();
                self.entities
                    .get_mut(sender_id)
                    .expect("checked above")
                    .peer_cache
                    .insert(recipient_id.into(), cert);
                bytes
            }
        };
        let recipient_pk = self
            .params
            .decompress(&recipient_pk_bytes)
            .map_err(|_| FlowError::Protocol("peer key undecodable".into()))?;
        let meter = CostMeter::start();
        let sealed = signcrypt(&self.params, &sender_sk, &recipient_pk, message, &mut self.rng)
            .map_err(FlowError::Signcrypt)?;
        let delta = meter.reading();
        self.credit_mults(sender_id, delta);

        let frame = WireMessage::new(MsgType::Mode2Data)
            .with_str(F_SENDER, sender_id)
            .with_str(F_TARGET, recipient_id)
            .with_chunked(F_ENVELOPE, &sealed.encode(&self.params));
        let at_va = self.transit(sender_id, VA_NODE, &frame)?;

        // VA: validate both parties, then forward verbatim with a report.
        let (fwd_sender, fwd_target) =
            match (at_va.field_str(F_SENDER), at_va.field_str(F_TARGET)) {
                (Some(s), Some(t)) => (s.to_string(), t.to_string()),
                _ => {
                    let err = WireMessage::error(REASON_MALFORMED, "data frame lacks parties");
                    let back = self.transit(VA_NODE, sender_id, &err)?;
                    return Err(Self::expect_response("relay", MsgType::Mode2Data, back)
                        .expect_err("error frame"));
                }
            };
        let meter = CostMeter::start();
        let verdict = self.va.validate_pair(
            &self.params,
            &self.repository,
            &self.ca,
            &fwd_sender,
            &fwd_target,
            self.clock,
            self.ocsp_window,
            &mut self.rng,
        );
        self.va_mults += meter.reading();
        let report = match verdict {
            Ok(report) => report,
            Err(e) => {
                let err = WireMessage::error(REASON_VALIDATION_FAILED, &e.to_string());
                let back = self.transit(VA_NODE, sender_id, &err)?;
                let refusal = Self::expect_response("relay", MsgType::Mode2Data, back)
                    .expect_err("error frame");
                return Err(match refusal {
                    FlowError::PeerError { detail, .. } => {
                        FlowError::DelegatedValidationFailed { detail }
                    }
                    other => other,
                });
            }
        };
        let envelope_bytes = at_va
            .field_concat(F_ENVELOPE)
            .ok_or_else(|| FlowError::Protocol("data frame lacks envelope".into()))?;
        if self.va_archive {
            self.va_archived.push(envelope_bytes.clone());
        }
        let forward = WireMessage::new(MsgType::Mode2Data)
            .with_str(F_SENDER, &fwd_sender)
            .with_str(F_TARGET, &fwd_target)
            .with_chunked(F_ENVELOPE, &envelope_bytes)
            .with(F_REPORT, report.encode(&self.params));
        let delivered = self.transit(VA_NODE, recipient_id, &forward)?;

        // Recipient: one signature check on the report, then unsigncrypt
        // with the sender key the report vouches for.
        let recipient = self.require_entity(recipient_id)?;
        let recipient_sk = recipient.sk;
        let recipient_va_pk = recipient.trusted_va_pk;
        let recipient_mults_before = recipient.mults;
        let report_bytes = delivered
            .field(F_REPORT)
            .ok_or_else(|| FlowError::Protocol("forwarded frame lacks report".into()))?;
        let report =
            ValidationReport::decode(&self.params, report_bytes).map_err(FlowError::MalformedReport)?;
        let claimed_sender = delivered
            .field_str(F_SENDER)
            .ok_or_else(|| FlowError::Protocol("forwarded frame lacks sender".into()))?
            .to_string();
        let meter = CostMeter::start();
        let report_ok =
            report.verify(&self.params, &recipient_va_pk, &claimed_sender, recipient_id);
        let delta = meter.reading();
        self.credit_mults(recipient_id, delta);
        if !report_ok {
            return Err(FlowError::VaSignatureInvalid);
        }
        let sender_pk = self
            .params
            .decompress(&report.sender_pk)
            .map_err(|_| FlowError::Protocol("reported sender key undecodable".into()))?;
        let envelope = delivered
            .field_concat(F_ENVELOPE)
            .ok_or_else(|| FlowError::Protocol("forwarded frame lacks envelope".into()))?;
        let sealed = SigncryptedMessage::decode(&self.params, &envelope)
            .map_err(FlowError::MalformedEnvelope)?;
        let meter = CostMeter::start();
        let unsigncrypted = unsigncrypt(&self.params, &recipient_sk, &sender_pk, &sealed);
        let delta = meter.reading();
        self.credit_mults(recipient_id, delta);
        let plain = match unsigncrypted {
            Ok(plain) => plain,
            Err(e) => {
                // A failed open usually means the sender sealed to a
                // superseded key it still had cached; dropping the entry
                // makes the next attempt refetch the current certificate.
                if let Some(sender) = self.entities.get_mut(sender_id) {
                    sender.peer_cache.remove(recipient_id);
                }
                return Err(FlowError::Verification(e));
            }
        };

        Ok(DeliveryOutcome {
            message: plain,
            sender_mults: self.entities[sender_id].mults - sender_mults_before,
            recipient_mults: self.entities[recipient_id].mults - recipient_mults_before,
        })
    }

    /// Authenticated key agreement routed through the VA: each side's
    /// ephemeral key is structurally validated by the VA alongside the
    /// usual certificate checks, and each side takes the peer's static
    /// key from the VA report rather than validating certificates itself.
    pub fn establish_session(
        &mut self,
        initiator_id: &str,
        responder_id: &str,
    ) -> Result<SessionOutcome, FlowError> {
        let initiator = self.require_entity(initiator_id)?;
        let init_sk = initiator.sk;
        let init_mults_before = initiator.mults;
        let responder = self.require_entity(responder_id)?;
        let resp_sk = responder.sk;
        let resp_va_pk = responder.trusted_va_pk;
        let resp_mults_before = responder.mults;
        let init_va_pk = self.entities[initiator_id].trusted_va_pk;

        let meter = CostMeter::start();
        let (init_eph_sk, init_eph_pk) = self
            .params
            .generate_keypair(&mut self.rng)
            .map_err(FlowError::KeyGen)?;
        let delta = meter.reading();
        self.credit_mults(initiator_id, delta);

        let request = WireMessage::new(MsgType::Mode2Data)
            .with_str(F_SENDER, initiator_id)
            .with_str(F_TARGET, responder_id)
            .with(F_EPHEMERAL, self.params.compress(&init_eph_pk));
        let at_va = self.transit(initiator_id, VA_NODE, &request)?;
        let forward = self.va_relay_session(initiator_id, &at_va)?;
        let to_responder = self.transit(VA_NODE, responder_id, &forward)?;

        // Responder: check the report, mint an ephemeral, derive, reply.
        let report_bytes = to_responder
            .field(F_REPORT)
            .ok_or_else(|| FlowError::Protocol("session frame lacks report".into()))?;
        let report =
            ValidationReport::decode(&self.params, report_bytes).map_err(FlowError::MalformedReport)?;
        let meter = CostMeter::start();
        let ok = report.verify(&self.params, &resp_va_pk, initiator_id, responder_id);
        let peer_eph_bytes = to_responder
            .field(F_EPHEMERAL)
            .ok_or_else(|| FlowError::Protocol("session frame lacks ephemeral".into()))?;
        let outcome: Result<([u8; SESSION_KEY_LEN], ECPoint, crate::uint::U256), FlowError> =
            (|| {
                if !ok {
                    return Err(FlowError::VaSignatureInvalid);
                }
                let peer_eph = self
                    .params
                    .decompress(peer_eph_bytes)
                    .map_err(|_| FlowError::Protocol("ephemeral undecodable".into()))?;
                let initiator_static = self
                    .params
                    .decompress(&report.sender_pk)
                    .map_err(|_| FlowError::Protocol("reported key undecodable".into()))?;
                let (resp_eph_sk, resp_eph_pk) = self
                    .params
                    .generate_keypair(&mut self.rng)
                    .map_err(FlowError::KeyGen)?;
                let key = derive_session_key(&SessionInputs {
                    params: &self.params,
                    role: Role::Responder,
                    my_id: responder_id,
                    peer_id: initiator_id,
                    my_static_sk: &resp_sk,
                    my_ephemeral_sk: &resp_eph_sk,
                    my_ephemeral_pk: &resp_eph_pk,
                    peer_static_pk: &initiator_static,
                    peer_ephemeral_pk: &peer_eph,
                })
                .map_err(FlowError::Agreement)?;
                Ok((key, resp_eph_pk, resp_eph_sk))
            })();
        let delta = meter.reading();
        self.credit_mults(responder_id, delta);
        let (responder_key, resp_eph_pk, _resp_eph_sk) = outcome?;

        // Reply leg, symmetric: responder's ephemeral goes back through
        // the VA with a second report.
        let reply = WireMessage::new(MsgType::Mode2Data)
            .with_str(F_SENDER, responder_id)
            .with_str(F_TARGET, initiator_id)
            .with(F_EPHEMERAL, self.params.compress(&resp_eph_pk));
        let at_va = self.transit(responder_id, VA_NODE, &reply)?;
        let forward = self.va_relay_session(responder_id, &at_va)?;
        let to_initiator = self.transit(VA_NODE, initiator_id, &forward)?;

        let report_bytes = to_initiator
            .field(F_REPORT)
            .ok_or_else(|| FlowError::Protocol("session frame lacks report".into()))?;
        let report =
            ValidationReport::decode(&self.params, report_bytes).map_err(FlowError::MalformedReport)?;
        let meter = CostMeter::start();
        let ok = report.verify(&self.params, &init_va_pk, responder_id, initiator_id);
        let initiator_key: Result<[u8; SESSION_KEY_LEN], FlowError> = (|| {
            if !ok {
                return Err(FlowError::VaSignatureInvalid);
            }
            let peer_eph_bytes = to_initiator
                .field(F_EPHEMERAL)
                .ok_or_else(|| FlowError::Protocol("session frame lacks ephemeral".into()))?;
            let peer_eph = self
                .params
                .decompress(peer_eph_bytes)
                .map_err(|_| FlowError::Protocol("ephemeral undecodable".into()))?;
            let responder_static = self
                .params
                .decompress(&report.sender_pk)
                .map_err(|_| FlowError::Protocol("reported key undecodable".into()))?;
            derive_session_key(&SessionInputs {
                params: &self.params,
                role: Role::Initiator,
                my_id: initiator_id,
                peer_id: responder_id,
                my_static_sk: &init_sk,
                my_ephemeral_sk: &init_eph_sk,
                my_ephemeral_pk: &init_eph_pk,
                peer_static_pk: &responder_static,
                peer_ephemeral_pk: &peer_eph,
            })
            .map_err(FlowError::Agreement)
        })();
        let delta = meter.reading();
        self.credit_mults(initiator_id, delta);
        let initiator_key = initiator_key?;

        Ok(SessionOutcome {
            initiator_key,
            responder_key,
            initiator_mults: self.entities[initiator_id].mults - init_mults_before,
            responder_mults: self.entities[responder_id].mults - resp_mults_before,
        })
    }

    /// VA half of a session leg: validate the pair and the carried
    /// ephemeral, then forward with a report. Failures go back to the
    /// requester as error frames.
    fn va_relay_session(
        &mut self,
        requester: &str,
        at_va: &WireMessage,
    ) -> Result<WireMessage, FlowError> {
        let (s, t) = match (at_va.field_str(F_SENDER), at_va.field_str(F_TARGET)) {
            (Some(s), Some(t)) => (s.to_string(), t.to_string()),
            _ => {
                let err = WireMessage::error(REASON_MALFORMED, "session frame lacks parties");
                let back = self.transit(VA_NODE, requester, &err)?;
                return Err(
                    Self::expect_response("relay", MsgType::Mode2Data, back).expect_err("error"),
                );
            }
        };
        let meter = CostMeter::start();
        let eph_check = at_va
            .field(F_EPHEMERAL)
            .ok_or_else(|| "session frame lacks ephemeral".to_string())
            .and_then(|bytes| {
                self.params
                    .decompress(bytes)
                    .map_err(|e| format!("ephemeral undecodable: {e}"))
            })
            .and_then(|pt| {
                self.params
                    .validate_public_key(&pt)
                    .map_err(|flaw| format!("ephemeral key invalid: {flaw}"))
            });
        let verdict = match eph_check {
            Err(detail) => Err(detail),
            Ok(()) => self
                .va
                .validate_pair(
                    &self.params,
                    &self.repository,
                    &self.ca,
                    &s,
                    &t,
                    self.clock,
                    self.ocsp_window,
                    &mut self.rng,
                )
                .map_err(|e| e.to_string()),
        };
        self.va_mults += meter.reading();
        match verdict {
            Ok(report) => {
                let mut forward = WireMessage::new(MsgType::Mode2Data)
                    .with_str(F_SENDER, &s)
                    .with_str(F_TARGET, &t)
                    .with(F_REPORT, report.encode(&self.params));
                if let Some(eph) = at_va.field(F_EPHEMERAL) {
                    forward = forward.with(F_EPHEMERAL, eph.to_vec());
                }
                Ok(forward)
            }
            Err(detail) => {
                let err = WireMessage::error(REASON_VALIDATION_FAILED, &detail);
                let back = self.transit(VA_NODE, requester, &err)?;
                let refusal =
                    Self::expect_response("relay", MsgType::Mode2Data, back).expect_err("error");
                Err(match refusal {
                    FlowError::PeerError { detail, .. } => {
                        FlowError::DelegatedValidationFailed { detail }
                    }
                    other => other,
                })
            }
        }
    }

    /// Key-and-certificate rotation for a subscriber that manages its own
    /// keys: fresh key pair, fresh proof of possession, new certificate,
    /// old serial superseded, repository and card updated together.
    pub fn renew(&mut self, id: &str) -> Result<Certificate, FlowError> {
        let entity = self.require_entity(id)?;
        if entity.enrolled_mode != 2 {
            return Err(FlowError::Refused {
                detail: format!(
                    "{id} was provisioned by the key generation server; rotation happens there"
                ),
            });
        }
        let old_serial = entity.certificate.serial;
        let pin = entity.activation_code.clone();
        let registration = self
            .ra
            .lookup(id)
            .cloned()
            .expect("enrolled entities are registered");

        let meter = CostMeter::start();
        let (sk, pk) = self
            .params
            .generate_keypair(&mut self.rng)
            .map_err(FlowError::KeyGen)?;
        let ctx = possession_context(&self.ca.name, id);
        let proof = prove_possession(&self.params, &sk, &pk, &ctx, &mut self.rng)
            .map_err(FlowError::KeyGen)?;
        let delta = meter.reading();
        self.credit_mults(id, delta);

        let new_cert = self
            .ca
            .certify_external(
                &self.params,
                &registration,
                &pk,
                Some(&proof),
                self.clock,
                &mut self.rng,
            )
            .map_err(FlowError::Certify)?;
        self.ca
            .revoke(old_serial, self.clock, REASON_SUPERSEDED)
            .expect("entity's serial was issued here");

        // Repository replacement is one map insert: at no point does the
        // directory hold zero or two entries for this subject.
        self.repository
            .publish(&subscriber_dn(id), new_cert.clone());
        let card = SmartCard::provision(&self.params, &sk, &pk, &new_cert, &pin, &mut self.rng)
            .map_err(|e| FlowError::Refused {
                detail: e.to_string(),
            })?;
        let entity = self.entities.get_mut(id).expect("checked above");
        entity.card = card;
        entity.certificate = new_cert.clone();
        entity.sk = sk;
        Ok(new_cert)
    }

    /// Obtains a signed timestamp token binding `payload`'s digest to the
    /// current clock; the entity verifies the token before accepting it.
    pub fn request_timestamp(
        &mut self,
        requester: &str,
        payload: &[u8],
    ) -> Result<crate::authorities::ts::TimestampToken, FlowError> {
        self.require_entity(requester)?;
        let digest = hash(payload);
        let request = WireMessage::new(MsgType::TsRequest)
            .with_str(F_SENDER, requester)
            .with(F_DIGEST, digest.to_vec());
        let request = self.transit(requester, TS_NODE, &request)?;
        let response = self.ts_answer(&request);
        let response = self.transit(TS_NODE, requester, &response)?;
        let response = Self::expect_response("timestamp", MsgType::TsResponse, response)?;
        let bytes = response
            .field(F_TSTOKEN)
            .ok_or_else(|| FlowError::Protocol("timestamp response lacks token".into()))?;
        let token = crate::authorities::ts::TimestampToken::decode(&self.params, bytes)
            .map_err(|e| FlowError::Protocol(format!("timestamp token: {e}")))?;
        let meter = CostMeter::start();
        let ok = token.verify(&self.params, &self.ts.pk, &digest);
        let delta = meter.reading();
        self.credit_mults(requester, delta);
        if !ok {
            return Err(FlowError::Protocol("timestamp token does not verify".into()));
        }
        Ok(token)
    }
}
