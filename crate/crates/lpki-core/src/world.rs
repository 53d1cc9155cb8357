//! The assembled testbed: every authority, the repository, the network,
//! and all enrolled end entities in one deterministic in-memory state
//! with snapshot and restore.

use crate::authorities::ca::{possession_context, CaPolicy, CertificationAuthority, IssuedRecord};
use crate::authorities::ra::{RegistrationAuthority, RegistrationRecord};
use crate::authorities::ts::TimestampAuthority;
use crate::authorities::va::ValidationAuthority;
use crate::cert::Certificate;
use crate::codec::{ByteReader, ByteWriter, DecodeError};
use crate::ec::{DomainParameters, ECPoint};
use crate::flows::SimNetwork;
use crate::ocsp::CertStatus;
use crate::pop::prove_possession;
use crate::repository::{authority_dn, Repository};
use crate::rng::CounterDrbg;
use crate::smartcard::SmartCard;
use crate::uint::U256;
use std::collections::BTreeMap;

/// Knobs for building a fresh world. `new` gives the defaults used by
/// the standard scenarios; tests and demos override individual fields.
#[derive(Clone, Debug)]
pub struct WorldConfig {
    pub params: DomainParameters,
    /// Seed for the deterministic generator behind every keypair, nonce,
    /// and activation code in the world.
    pub seed: u64,
    /// How old a status token may be before relying parties refuse it,
    /// in seconds.
    pub ocsp_window: u64,
    /// Subscriber certificate lifetime in seconds.
    pub cert_lifetime: u64,
    /// Key generation server keeps recoverable copies of the keys it
    /// generates.
    pub escrow_enabled: bool,
    /// Certification authority structurally validates subject keys
    /// before signing. Turning this off reproduces a known mistake.
    pub validate_subject_keys: bool,
    /// Certification authority demands proof of possession for
    /// subscriber-generated keys.
    pub require_possession_proof: bool,
    /// Validation authority keeps a copy of every envelope it relays.
    pub va_archive: bool,
}

impl WorldConfig {
    pub fn new(params: DomainParameters) -> WorldConfig {
        WorldConfig {
            params,
            seed: 1,
            ocsp_window: 300,
            cert_lifetime: 86_400,
            escrow_enabled: false,
            validate_subject_keys: true,
            require_possession_proof: true,
            va_archive: false,
        }
    }
}

/// One subscriber with everything it holds: sealed card, certificate,
/// trust anchors, a peer certificate cache, and a running count of the
/// scalar multiplications it has spent.
pub struct EndEntity {
    pub id: String,
    pub display_name: String,
    /// Whether this entity validates peer certificates itself (mode-1
    /// sending requires it) or leans on the validation authority.
    pub can_validate: bool,
    /// 1 = infrastructure-generated key, 2 = self-generated key.
    pub enrolled_mode: u8,
    pub card: SmartCard,
    /// The card activation code the subscriber received at enrollment.
    pub activation_code: String,
    pub certificate: Certificate,
    pub(crate) sk: U256,
    pub trusted_ca_pk: ECPoint,
    pub trusted_va_pk: ECPoint,
    pub peer_cache: BTreeMap<String, Certificate>,
    /// Scalar multiplications this entity has performed.
    pub mults: u64,
}

impl EndEntity {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        registration: &RegistrationRecord,
        can_validate: bool,
        enrolled_mode: u8,
        card: SmartCard,
        activation_code: String,
        certificate: Certificate,
        sk: U256,
        trusted_ca_pk: &ECPoint,
        trusted_va_pk: &ECPoint,
    ) -> EndEntity {
        EndEntity {
            id: registration.subject_id.clone(),
            display_name: registration.display_name.clone(),
            can_validate,
            enrolled_mode,
            card,
            activation_code,
            certificate,
            sk,
            trusted_ca_pk: *trusted_ca_pk,
            trusted_va_pk: *trusted_va_pk,
            peer_cache: BTreeMap::new(),
            mults: 0,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WorldError(pub String);

impl std::fmt::Display for WorldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for WorldError {}

/// The whole infrastructure in one value. All mutation goes through the
/// flow methods, so a world plus its seed fully determines every byte
/// that ever crosses the network.
pub struct World {
    pub params: DomainParameters,
    pub seed: u64,
    /// Simulated Unix time in seconds; advanced explicitly.
    pub clock: u64,
    pub(crate) rng: CounterDrbg,
    pub ra: RegistrationAuthority,
    pub ca: CertificationAuthority,
    pub va: ValidationAuthority,
    pub ts: TimestampAuthority,
    pub repository: Repository,
    pub network: SimNetwork,
    pub entities: BTreeMap<String, EndEntity>,
    pub ocsp_window: u64,
    pub va_archive: bool,
    /// Envelopes the validation authority kept, oldest first.
    pub va_archived: Vec<Vec<u8>>,
    /// Scalar multiplications spent by the validation authority.
    pub va_mults: u64,
}

impl World {
    /// Builds the authority cast: certification authority with a
    /// self-signed root, validation and timestamp authorities certified
    /// under it (with possession proofs), everything published in the
    /// repository.
    pub fn new(config: WorldConfig) -> Result<World, WorldError> {
        let WorldConfig {
            params,
            seed,
            ocsp_window,
            cert_lifetime,
            escrow_enabled,
            validate_subject_keys,
            require_possession_proof,
            va_archive,
        } = config;
        let mut rng = CounterDrbg::new(seed);
        let policy = CaPolicy {
            validate_subject_keys,
            require_possession_proof,
            cert_lifetime,
            escrow_enabled,
        };
        let mut ca = CertificationAuthority::new(&params, "ca", policy, 0, &mut rng)
            .map_err(|e| WorldError(format!("building certification authority: {e}")))?;
        let va = ValidationAuthority::new(&params, "va", &mut rng)
            .map_err(|e| WorldError(format!("building validation authority: {e}")))?;
        let ts = TimestampAuthority::new(&params, "ts", &mut rng)
            .map_err(|e| WorldError(format!("building timestamp authority: {e}")))?;

        let mut repository = Repository::new();
        repository.publish(&authority_dn(&ca.name), ca.cert.clone());
        for (name, display, sk, pk) in [
            ("va", "Validation Authority", va.signing_key().clone(), va.pk),
            ("ts", "Timestamp Authority", ts.signing_key().clone(), ts.pk),
        ] {
            let registration = RegistrationRecord {
                subject_id: name.into(),
                display_name: display.into(),
                approved_at: 0,
            };
            let ctx = possession_context(&ca.name, name);
            let proof = prove_possession(&params, &sk, &pk, &ctx, &mut rng)
                .map_err(|e| WorldError(format!("proving {name} key possession: {e}")))?;
            let cert = ca
                .certify_external(&params, &registration, &pk, Some(&proof), 0, &mut rng)
                .map_err(|e| WorldError(format!("certifying {name}: {e}")))?;
            repository.publish(&authority_dn(name), cert);
        }

        Ok(World {
            params,
            seed,
            clock: 0,
            rng,
            ra: RegistrationAuthority::new(),
            ca,
            va,
            ts,
            repository,
            network: SimNetwork::new(),
            entities: BTreeMap::new(),
            ocsp_window,
            va_archive,
            va_archived: Vec::new(),
            va_mults: 0,
        })
    }

    pub fn advance_clock(&mut self, seconds: u64) {
        self.clock += seconds;
    }

    pub fn entity(&self, id: &str) -> Option<&EndEntity> {
        self.entities.get(id)
    }

    /// Serializes the complete world state. The raw-frame capture and
    /// any pending injected faults are session-local and not included.
    pub fn snapshot(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.raw(SNAPSHOT_MAGIC);
        put(&mut w, T_PARAMS, self.params.to_config_text().as_bytes());
        put_u64(&mut w, T_SEED, self.seed);
        put_u64(&mut w, T_CLOCK, self.clock);
        put_u64(&mut w, T_OCSP_WINDOW, self.ocsp_window);
        put(&mut w, T_VA_ARCHIVE_FLAG, &[self.va_archive as u8]);
        put(&mut w, T_RNG_STATE, &self.rng.state_blob());
        put_u64(&mut w, T_VA_MULTS, self.va_mults);

        put(&mut w, T_CA_NAME, self.ca.name.as_bytes());
        let (ca_sk, next_serial, records, escrow) = self.ca.parts();
        put(&mut w, T_CA_SK, &ca_sk.to_be_bytes());
        put(&mut w, T_CA_POLICY, &encode_policy(&self.ca.policy));
        put_u64(&mut w, T_CA_NEXT_SERIAL, next_serial);
        for (serial, record) in records {
            put(&mut w, T_CA_RECORD, &encode_record(&self.params, *serial, record));
        }
        for (serial, sk) in escrow {
            let mut inner = ByteWriter::new();
            inner.u64(*serial);
            inner.raw(&sk.to_be_bytes());
            put(&mut w, T_CA_ESCROW, &inner.finish());
        }

        for record in self.ra.records() {
            let mut inner = ByteWriter::new();
            inner.str16(&record.subject_id);
            inner.str16(&record.display_name);
            inner.u64(record.approved_at);
            put(&mut w, T_RA_RECORD, &inner.finish());
        }

        put(&mut w, T_VA_NAME, self.va.name.as_bytes());
        put(&mut w, T_VA_SK, &self.va.signing_key().to_be_bytes());
        for line in self.va.log() {
            put(&mut w, T_VA_LOG, line.as_bytes());
        }
        for envelope in &self.va_archived {
            put(&mut w, T_VA_ARCHIVED, envelope);
        }

        put(&mut w, T_TS_NAME, self.ts.name.as_bytes());
        put(&mut w, T_TS_SK, &self.ts.signing_key().to_be_bytes());
        put_u64(&mut w, T_TS_NEXT_SEQ, self.ts.next_sequence());

        for dn in self.repository.dns() {
            let cert = self.repository.fetch(dn).expect("listed dn resolves");
            let mut inner = ByteWriter::new();
            inner.str16(dn);
            let bytes = cert.encode(&self.params);
            inner.u32(bytes.len() as u32);
            inner.raw(&bytes);
            put(&mut w, T_REPO_ENTRY, &inner.finish());
        }

        for entity in self.entities.values() {
            put(&mut w, T_ENTITY, &encode_entity(&self.params, entity));
        }

        for line in self.network.transcript() {
            put(&mut w, T_NET_LINE, line.as_bytes());
        }
        put_u64(&mut w, T_NET_SEQ, self.network.frames_carried());
        w.finish()
    }

    /// Rebuilds a world from `snapshot` output. The deterministic
    /// generator resumes exactly where it stopped, so a restored world
    /// continues byte-for-byte like the original.
    pub fn restore(bytes: &[u8]) -> Result<World, DecodeError> {
        let mut rd = ByteReader::new(bytes);
        if rd.take(SNAPSHOT_MAGIC.len())? != SNAPSHOT_MAGIC {
            return Err(DecodeError::new("not a world snapshot"));
        }

        let mut params = None;
        let mut seed = 0u64;
        let mut clock = 0u64;
        let mut ocsp_window = 300u64;
        let mut va_archive = false;
        let mut rng = None;
        let mut va_mults = 0u64;
        let mut ca_name = None;
        let mut ca_sk = None;
        let mut ca_policy = None;
        let mut ca_next_serial = None;
        let mut ca_record_blobs: Vec<Vec<u8>> = Vec::new();
        let mut ca_escrow_blobs: Vec<Vec<u8>> = Vec::new();
        let mut ra_records = Vec::new();
        let mut va_name = None;
        let mut va_sk = None;
        let mut va_log = Vec::new();
        let mut va_archived = Vec::new();
        let mut ts_name = None;
        let mut ts_sk = None;
        let mut ts_next_seq = 1u64;
        let mut repo_blobs: Vec<Vec<u8>> = Vec::new();
        let mut entity_blobs: Vec<Vec<u8>> = Vec::new();
        let mut net_lines = Vec::new();
        let mut net_seq = 0u64;

        while !rd.is_empty() {
            let (tag, value) = get(&mut rd)?;
            match tag {
                T_PARAMS => {
                    let text = std::str::from_utf8(&value)
                        .map_err(|_| DecodeError::new("parameter text is not utf-8"))?;
                    params = Some(DomainParameters::from_config_text(text).map_err(|e| {
                        DecodeError::new(format!("snapshot parameters: {e}"))
                    })?);
                }
                T_SEED => seed = as_u64(&value)?,
                T_CLOCK => clock = as_u64(&value)?,
                T_OCSP_WINDOW => ocsp_window = as_u64(&value)?,
                T_VA_ARCHIVE_FLAG => va_archive = value.first().copied().unwrap_or(0) != 0,
                T_RNG_STATE => {
                    rng = Some(CounterDrbg::from_state_blob(&value).ok_or_else(|| {
                        DecodeError::new("generator state blob is malformed")
                    })?);
                }
                T_VA_MULTS => va_mults = as_u64(&value)?,
                T_CA_NAME => ca_name = Some(as_string(&value)?),
                T_CA_SK => ca_sk = Some(as_scalar(&value)?),
                T_CA_POLICY => ca_policy = Some(decode_policy(&value)?),
                T_CA_NEXT_SERIAL => ca_next_serial = Some(as_u64(&value)?),
                T_CA_RECORD => ca_record_blobs.push(value),
                T_CA_ESCROW => ca_escrow_blobs.push(value),
                T_RA_RECORD => {
                    let mut inner = ByteReader::new(&value);
                    let subject_id = inner.str16()?.to_string();
                    let display_name = inner.str16()?.to_string();
                    let approved_at = inner.u64()?;
                    inner.expect_end()?;
                    ra_records.push(RegistrationRecord {
                        subject_id,
                        display_name,
                        approved_at,
                    });
                }
                T_VA_NAME => va_name = Some(as_string(&value)?),
                T_VA_SK => va_sk = Some(as_scalar(&value)?),
                T_VA_LOG => va_log.push(as_string(&value)?),
                T_VA_ARCHIVED => va_archived.push(value),
                T_TS_NAME => ts_name = Some(as_string(&value)?),
                T_TS_SK => ts_sk = Some(as_scalar(&value)?),
                T_TS_NEXT_SEQ => ts_next_seq = as_u64(&value)?,
                T_REPO_ENTRY => repo_blobs.push(value),
                T_ENTITY => entity_blobs.push(value),
                T_NET_LINE => net_lines.push(as_string(&value)?),
                T_NET_SEQ => net_seq = as_u64(&value)?,
                other => {
                    return Err(DecodeError::new(format!(
                        "unknown snapshot tag 0x{other:02x}"
                    )))
                }
            }
        }

        let params = params.ok_or_else(|| DecodeError::new("snapshot lacks parameters"))?;
        let rng = rng.ok_or_else(|| DecodeError::new("snapshot lacks generator state"))?;
        let ca_name = ca_name.ok_or_else(|| DecodeError::new("snapshot lacks issuer name"))?;
        let ca_sk = ca_sk.ok_or_else(|| DecodeError::new("snapshot lacks issuer key"))?;
        let ca_policy =
            ca_policy.ok_or_else(|| DecodeError::new("snapshot lacks issuer policy"))?;
        let ca_next_serial =
            ca_next_serial.ok_or_else(|| DecodeError::new("snapshot lacks serial counter"))?;

        let mut records = BTreeMap::new();
        for blob in &ca_record_blobs {
            let (serial, record) = decode_record(&params, blob)?;
            records.insert(serial, record);
        }
        let mut escrow = BTreeMap::new();
        for blob in &ca_escrow_blobs {
            let mut inner = ByteReader::new(blob);
            let serial = inner.u64()?;
            let sk = as_scalar(inner.take(32)?)?;
            inner.expect_end()?;
            escrow.insert(serial, sk);
        }
        let ca_cert = records
            .get(&1)
            .map(|r| r.cert.clone())
            .ok_or_else(|| DecodeError::new("snapshot lacks the root certificate"))?;
        let ca_pk = params
            .decompress(&ca_cert.subject_pk)
            .map_err(|e| DecodeError::new(format!("root certificate key: {e}")))?;
        let ca = CertificationAuthority::from_parts(
            ca_name, ca_sk, ca_pk, ca_cert, ca_policy, ca_next_serial, records, escrow,
        );

        let va_name = va_name.ok_or_else(|| DecodeError::new("snapshot lacks validator name"))?;
        let va_sk = va_sk.ok_or_else(|| DecodeError::new("snapshot lacks validator key"))?;
        let va_pk = params.scalar_mult(&va_sk, &params.g);
        let va = ValidationAuthority::from_parts(va_name, va_sk, va_pk, va_log);

        let ts_name = ts_name.ok_or_else(|| DecodeError::new("snapshot lacks stamper name"))?;
        let ts_sk = ts_sk.ok_or_else(|| DecodeError::new("snapshot lacks stamper key"))?;
        let ts_pk = params.scalar_mult(&ts_sk, &params.g);
        let ts = TimestampAuthority::from_parts(ts_name, ts_sk, ts_pk, ts_next_seq);

        let mut repository = Repository::new();
        for blob in &repo_blobs {
            let mut inner = ByteReader::new(blob);
            let dn = inner.str16()?.to_string();
            let len = inner.u32()? as usize;
            let cert = Certificate::decode(&params, inner.take(len)?)?;
            inner.expect_end()?;
            repository.publish(&dn, cert);
        }

        let mut entities = BTreeMap::new();
        for blob in &entity_blobs {
            let entity = decode_entity(&params, blob, &ca.pk, &va.pk)?;
            entities.insert(entity.id.clone(), entity);
        }

        Ok(World {
            params,
            seed,
            clock,
            rng,
            ra: RegistrationAuthority::from_records(ra_records),
            ca,
            va,
            ts,
            repository,
            network: SimNetwork::from_parts(net_lines, net_seq),
            entities,
            ocsp_window,
            va_archive,
            va_archived,
            va_mults,
        })
    }
}

const SNAPSHOT_MAGIC: &[u8] = b"LPKIWLD1";

const T_PARAMS: u8 = 0x01;
const T_SEED: u8 = 0x02;
const T_CLOCK: u8 = 0x03;
const T_OCSP_WINDOW: u8 = 0x04;
const T_VA_ARCHIVE_FLAG: u8 = 0x05;
const T_RNG_STATE: u8 = 0x06;
const T_VA_MULTS: u8 = 0x07;
const T_CA_NAME: u8 = 0x10;
const T_CA_SK: u8 = 0x11;
const T_CA_POLICY: u8 = 0x12;
const T_CA_NEXT_SERIAL: u8 = 0x13;
const T_CA_RECORD: u8 = 0x14;
const T_CA_ESCROW: u8 = 0x15;
const T_RA_RECORD: u8 = 0x20;
const T_VA_NAME: u8 = 0x28;
const T_VA_SK: u8 = 0x29;
const T_VA_LOG: u8 = 0x2a;
const T_VA_ARCHIVED: u8 = 0x2b;
const T_TS_NAME: u8 = 0x30;
const T_TS_SK: u8 = 0x31;
const T_TS_NEXT_SEQ: u8 = 0x32;
const T_REPO_ENTRY: u8 = 0x38;
const T_ENTITY: u8 = 0x40;
const T_NET_LINE: u8 = 0x50;
const T_NET_SEQ: u8 = 0x51;

// Snapshot fields use a u32 length so archived envelopes and transcripts
// of any size fit; certificates nested inside reuse the same framing.
fn put(w: &mut ByteWriter, tag: u8, value: &[u8]) {
    w.u8(tag);
    w.u32(value.len() as u32);
    w.raw(value);
}

fn put_u64(w: &mut ByteWriter, tag: u8, value: u64) {
    let mut inner = ByteWriter::new();
    inner.u64(value);
    put(w, tag, &inner.finish());
}

fn get(rd: &mut ByteReader<'_>) -> Result<(u8, Vec<u8>), DecodeError> {
    let tag = rd.u8()?;
    let len = rd.u32()? as usize;
    Ok((tag, rd.take(len)?.to_vec()))
}

fn as_u64(value: &[u8]) -> Result<u64, DecodeError> {
    let arr: [u8; 8] = value
        .try_into()
        .map_err(|_| DecodeError::new("expected an 8-byte integer"))?;
    Ok(u64::from_be_bytes(arr))
}

fn as_string(value: &[u8]) -> Result<String, DecodeError> {
    std::str::from_utf8(value)
        .map(str::to_string)
        .map_err(|_| DecodeError::new("expected utf-8 text"))
}

fn as_scalar(value: &[u8]) -> Result<U256, DecodeError> {
    U256::from_be_bytes(value).map_err(|e| DecodeError::new(format!("scalar: {e}")))
}

fn encode_policy(policy: &CaPolicy) -> Vec<u8> {
    let mut w = ByteWriter::new();
    let flags = (policy.validate_subject_keys as u8)
        | (policy.require_possession_proof as u8) << 1
        | (policy.escrow_enabled as u8) << 2;
    w.u8(flags);
    w.u64(policy.cert_lifetime);
    w.finish()
}

fn decode_policy(value: &[u8]) -> Result<CaPolicy, DecodeError> {
    let mut rd = ByteReader::new(value);
    let flags = rd.u8()?;
    let cert_lifetime = rd.u64()?;
    rd.expect_end()?;
    Ok(CaPolicy {
        validate_subject_keys: flags & 1 != 0,
        require_possession_proof: flags & 2 != 0,
        escrow_enabled: flags & 4 != 0,
        cert_lifetime,
    })
}

fn encode_status(w: &mut ByteWriter, status: &CertStatus) {
    match status {
        CertStatus::Good => {
            w.u8(0);
            w.u64(0);
            w.u8(0);
        }
        CertStatus::Revoked { since, reason } => {
            w.u8(1);
            w.u64(*since);
            w.u8(*reason);
        }
        CertStatus::Unknown => {
            w.u8(2);
            w.u64(0);
            w.u8(0);
        }
    }
}

fn decode_status(rd: &mut ByteReader<'_>) -> Result<CertStatus, DecodeError> {
    let kind = rd.u8()?;
    let since = rd.u64()?;
    let reason = rd.u8()?;
    match kind {
        0 => Ok(CertStatus::Good),
        1 => Ok(CertStatus::Revoked { since, reason }),
        2 => Ok(CertStatus::Unknown),
        other => Err(DecodeError::new(format!("unknown status kind {other}"))),
    }
}

fn encode_record(params: &DomainParameters, serial: u64, record: &IssuedRecord) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.u64(serial);
    encode_status(&mut w, &record.status);
    let bytes = record.cert.encode(params);
    w.u32(bytes.len() as u32);
    w.raw(&bytes);
    w.finish()
}

fn decode_record(params: &DomainParameters, blob: &[u8]) -> Result<(u64, IssuedRecord), DecodeError> {
    let mut rd = ByteReader::new(blob);
    let serial = rd.u64()?;
    let status = decode_status(&mut rd)?;
    let len = rd.u32()? as usize;
    let cert = Certificate::decode(params, rd.take(len)?)?;
    rd.expect_end()?;
    Ok((serial, IssuedRecord { cert, status }))
}

const E_ID: u8 = 0x01;
const E_DISPLAY: u8 = 0x02;
const E_CAN_VALIDATE: u8 = 0x03;
const E_MODE: u8 = 0x04;
const E_CARD: u8 = 0x05;
const E_ACTIVATION: u8 = 0x06;
const E_CERT: u8 = 0x07;
const E_SK: u8 = 0x08;
const E_MULTS: u8 = 0x09;
const E_CACHE: u8 = 0x0a;

fn encode_entity(params: &DomainParameters, entity: &EndEntity) -> Vec<u8> {
    let mut w = ByteWriter::new();
    put(&mut w, E_ID, entity.id.as_bytes());
    put(&mut w, E_DISPLAY, entity.display_name.as_bytes());
    put(&mut w, E_CAN_VALIDATE, &[entity.can_validate as u8]);
    put(&mut w, E_MODE, &[entity.enrolled_mode]);
    put(&mut w, E_CARD, &entity.card.encode());
    put(&mut w, E_ACTIVATION, entity.activation_code.as_bytes());
    put(&mut w, E_CERT, &entity.certificate.encode(params));
    put(&mut w, E_SK, &entity.sk.to_be_bytes());
    put_u64(&mut w, E_MULTS, entity.mults);
    for (peer, cert) in &entity.peer_cache {
        let mut inner = ByteWriter::new();
        inner.str16(peer);
        let bytes = cert.encode(params);
        inner.u32(bytes.len() as u32);
        inner.raw(&bytes);
        put(&mut w, E_CACHE, &inner.finish());
    }
    w.finish()
}

fn decode_entity(
    params: &DomainParameters,
    blob: &[u8],
    trusted_ca_pk: &ECPoint,
    trusted_va_pk: &ECPoint,
) -> Result<EndEntity, DecodeError> {
    let mut rd = ByteReader::new(blob);
    let mut id = None;
    let mut display_name = None;
    let mut can_validate = false;
    let mut enrolled_mode = None;
    let mut card = None;
    let mut activation_code = None;
    let mut certificate = None;
    let mut sk = None;
    let mut mults = 0u64;
    let mut peer_cache = BTreeMap::new();
    while !rd.is_empty() {
        let (tag, value) = get(&mut rd)?;
        match tag {
            E_ID => id = Some(as_string(&value)?),
            E_DISPLAY => display_name = Some(as_string(&value)?),
            E_CAN_VALIDATE => can_validate = value.first().copied().unwrap_or(0) != 0,
            E_MODE => enrolled_mode = value.first().copied(),
            E_CARD => card = Some(SmartCard::decode(&value)?),
            E_ACTIVATION => activation_code = Some(as_string(&value)?),
            E_CERT => certificate = Some(Certificate::decode(params, &value)?),
            E_SK => sk = Some(as_scalar(&value)?),
            E_MULTS => mults = as_u64(&value)?,
            E_CACHE => {
                let mut inner = ByteReader::new(&value);
                let peer = inner.str16()?.to_string();
                let len = inner.u32()? as usize;
                let cert = Certificate::decode(params, inner.take(len)?)?;
                inner.expect_end()?;
                peer_cache.insert(peer, cert);
            }
            other => {
                return Err(DecodeError::new(format!(
                    "unknown subscriber tag 0x{other:02x}"
                )))
            }
        }
    }
    Ok(EndEntity {
        id: id.ok_or_else(|| DecodeError::new("subscriber lacks identifier"))?,
        display_name: display_name.ok_or_else(|| DecodeError::new("subscriber lacks name"))?,
        can_validate,
        enrolled_mode: enrolled_mode
            .ok_or_else(|| DecodeError::new("subscriber lacks enrollment mode"))?,
        card: card.ok_or_else(|| DecodeError::new("subscriber lacks card"))?,
        activation_code: activation_code
            .ok_or_else(|| DecodeError::new("subscriber lacks activation code"))?,
        certificate: certificate
            .ok_or_else(|| DecodeError::new("subscriber lacks certificate"))?,
        sk: sk.ok_or_else(|| DecodeError::new("subscriber lacks key"))?,
        trusted_ca_pk: *trusted_ca_pk,
        trusted_va_pk: *trusted_va_pk,
        peer_cache,
        mults,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::authorities::validate_certificate;

    fn toy_world(seed: u64) -> World {
        let mut config = WorldConfig::new(DomainParameters::toy17());
        config.seed = seed;
        World::new(config).expect("toy world builds")
    }

    #[test]
    fn bootstrap_publishes_and_certifies_every_authority() {
        let mut world = toy_world(1);
        for name in ["ca", "va", "ts"] {
            assert!(
                world.repository.fetch(&authority_dn(name)).is_some(),
                "{name} missing from the repository"
            );
        }
        // The validator's certificate chains to the root and is current.
        let va_cert = world.repository.fetch(&authority_dn("va")).unwrap().clone();
        let token = world
            .ca
            .ocsp_response(&world.params, va_cert.serial, 0, &mut crate::rng::CounterDrbg::new(9))
            .unwrap();
        let pk = validate_certificate(&world.params, &va_cert, &world.ca.pk, 0, Some(&token), 300)
            .expect("authority certificate validates");
        assert_eq!(pk, world.va.pk);
        assert_eq!(world.clock, 0);
        assert!(world.entities.is_empty());
    }

    #[test]
    fn same_seed_same_world_different_seed_different_keys() {
        let a = toy_world(42);
        let b = toy_world(42);
        let c = toy_world(43);
        assert_eq!(a.snapshot(), b.snapshot());
        assert_eq!(a.ca.pk, b.ca.pk);
        assert_ne!(a.snapshot(), c.snapshot());
    }

    #[test]
    fn snapshot_restores_to_an_identical_world() {
        let mut world = toy_world(5);
        world.enroll("+1 555 0101", "Alice Example", 2, true).unwrap();
        world.enroll("+1 555 0102", "Bob Example", 1, true).unwrap();
        world.mode1_send("+15550101", "+15550102", b"before the save").unwrap();
        world.advance_clock(60);

        let snap = world.snapshot();
        let restored = World::restore(&snap).expect("snapshot restores");
        assert_eq!(restored.snapshot(), snap, "restore then save is identity");
        assert_eq!(restored.clock, world.clock);
        assert_eq!(restored.entities.len(), 2);
        assert_eq!(
            restored.entities["+15550101"].mults,
            world.entities["+15550101"].mults
        );
        assert_eq!(
            restored.network.transcript(),
            world.network.transcript()
        );
    }

    #[test]
    fn a_restored_world_continues_exactly_like_the_original() {
        let mut original = toy_world(6);
        original.enroll("+1 555 0101", "Alice Example", 2, true).unwrap();
        original.enroll("+1 555 0102", "Bob Example", 1, true).unwrap();
        original.mode1_send("+15550101", "+15550102", b"first").unwrap();

        let mut restored = World::restore(&original.snapshot()).unwrap();

        // Same operation on both: same outcome, same frames, and the
        // deterministic generator stays in lockstep.
        let a = original.mode2_send("+15550101", "+15550102", b"second").unwrap();
        let b = restored.mode2_send("+15550101", "+15550102", b"second").unwrap();
        assert_eq!(a, b);
        assert_eq!(original.network.transcript(), restored.network.transcript());
        assert_eq!(original.snapshot(), restored.snapshot());
    }

    #[test]
    fn snapshots_keep_escrow_and_validator_log_and_archive() {
        let mut config = WorldConfig::new(DomainParameters::toy17());
        config.seed = 8;
        config.escrow_enabled = true;
        config.va_archive = true;
        let mut world = World::new(config).unwrap();
        world.enroll("+1 555 0101", "Alice Example", 1, false).unwrap();
        world.enroll("+1 555 0102", "Bob Example", 1, false).unwrap();
        world.mode2_send("+15550101", "+15550102", b"kept by the validator").unwrap();
        assert_eq!(world.va_archived.len(), 1);

        let restored = World::restore(&world.snapshot()).unwrap();
        assert_eq!(restored.va_archived, world.va_archived);
        assert_eq!(restored.va.log(), world.va.log());
        // Escrowed keys survive: the authority can still recover the
        // subscriber key after a restore.
        let serial = restored.entities["+15550101"].certificate.serial;
        assert!(restored.ca.recover_escrowed(serial).is_some());
    }

    #[test]
    fn restore_rejects_foreign_and_truncated_bytes() {
        assert!(World::restore(b"definitely not a snapshot").is_err());
        let world = toy_world(9);
        let snap = world.snapshot();
        assert!(World::restore(&snap[..snap.len() - 3]).is_err());
        let mut wrong_magic = snap.clone();
        wrong_magic[0] ^= 0xff;
        assert!(World::restore(&wrong_magic).is_err());
    }

    #[test]
    fn config_defaults_match_the_documented_contract() {
        let config = WorldConfig::new(DomainParameters::toy17());
        assert_eq!(config.ocsp_window, 300);
        assert_eq!(config.cert_lifetime, 86_400);
        assert!(!config.escrow_enabled);
        assert!(config.validate_subject_keys);
        assert!(config.require_possession_proof);
        assert!(!config.va_archive);
    }
}
