//! Binary wire protocol: fixed header (magic, version, type, length)
//! followed by tag/length/value fields. Decoding failures carry the byte
//! offset of the first violation so transcripts stay debuggable.

use std::fmt;

pub const MAGIC: [u8; 4] = *b"LPKI";
pub const VERSION: u8 = 0x01;

/// Per-field cap; values larger than this repeat the tag in chunks.
pub const MAX_FIELD_LEN: usize = 60_000;

/// Payload field tags shared by all message types.
pub const F_SENDER: u8 = 0x01;
pub const F_TARGET: u8 = 0x02;
pub const F_INFO_TAG: u8 = 0x03;
pub const F_CERT: u8 = 0x04;
pub const F_OCSP: u8 = 0x05;
pub const F_ENVELOPE: u8 = 0x06;
pub const F_REPORT: u8 = 0x07;
pub const F_SERIAL: u8 = 0x08;
pub const F_REASON: u8 = 0x09;
pub const F_DETAIL: u8 = 0x0a;
pub const F_DIGEST: u8 = 0x0b;
pub const F_TSTOKEN: u8 = 0x0c;
pub const F_EPHEMERAL: u8 = 0x0d;
pub const F_POLICY: u8 = 0x0e;

/// Error reason codes carried in `F_REASON`.
pub const REASON_NOT_FOUND: u8 = 0x01;
pub const REASON_VALIDATION_FAILED: u8 = 0x02;
pub const REASON_MALFORMED: u8 = 0x03;
pub const REASON_REFUSED: u8 = 0x04;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum MsgType {
    GatewayQuery,
    GatewayResponse,
    Mode1Data,
    Mode2Data,
    DpvRequest,
    DpvResponse,
    OcspRequest,
    OcspResponse,
    Error,
    TsRequest,
    TsResponse,
}

pub const ALL_MSG_TYPES: [MsgType; 11] = [
    MsgType::GatewayQuery,
    MsgType::GatewayResponse,
    MsgType::Mode1Data,
    MsgType::Mode2Data,
    MsgType::DpvRequest,
    MsgType::DpvResponse,
    MsgType::OcspRequest,
    MsgType::OcspResponse,
    MsgType::Error,
    MsgType::TsRequest,
    MsgType::TsResponse,
];

impl MsgType {
    pub fn code(self) -> u8 {
        match self {
            MsgType::GatewayQuery => 0x01,
            MsgType::GatewayResponse => 0x02,
            MsgType::Mode1Data => 0x10,
            MsgType::Mode2Data => 0x11,
            MsgType::DpvRequest => 0x20,
            MsgType::DpvResponse => 0x21,
            MsgType::OcspRequest => 0x30,
            MsgType::OcspResponse => 0x31,
            MsgType::Error => 0x40,
            MsgType::TsRequest => 0x50,
            MsgType::TsResponse => 0x51,
        }
    }

    pub fn from_code(code: u8) -> Option<MsgType> {
        ALL_MSG_TYPES.into_iter().find(|t| t.code() == code)
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MsgType::GatewayQuery => "gateway-query",
            MsgType::GatewayResponse => "gateway-response",
            MsgType::Mode1Data => "mode1-data",
            MsgType::Mode2Data => "mode2-data",
            MsgType::DpvRequest => "dpv-request",
            MsgType::DpvResponse => "dpv-response",
            MsgType::OcspRequest => "ocsp-request",
            MsgType::OcspResponse => "ocsp-response",
            MsgType::Error => "error",
            MsgType::TsRequest => "ts-request",
            MsgType::TsResponse => "ts-response",
        };
        f.write_str(name)
    }
}

/// Decode failure with the byte offset where the stream went wrong.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MalformedWireMessage {
    pub offset: usize,
    pub detail: String,
}

impl MalformedWireMessage {
    fn at(offset: usize, detail: impl Into<String>) -> MalformedWireMessage {
        MalformedWireMessage {
            offset,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for MalformedWireMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed frame at byte {}: {}", self.offset, self.detail)
    }
}

impl std::error::Error for MalformedWireMessage {}

/// One protocol frame: a type plus ordered tag/length/value fields.
/// Repeated tags are legal; readers take the first match unless they ask
/// for all of them.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WireMessage {
    pub msg_type: MsgType,
    pub fields: Vec<(u8, Vec<u8>)>,
}

impl WireMessage {
    pub fn new(msg_type: MsgType) -> WireMessage {
        WireMessage {
            msg_type,
            fields: Vec::new(),
        }
    }

    pub fn with(mut self, tag: u8, value: impl Into<Vec<u8>>) -> WireMessage {
        self.fields.push((tag, value.into()));
        self
    }

    pub fn with_str(self, tag: u8, value: &str) -> WireMessage {
        self.with(tag, value.as_bytes().to_vec())
    }

    pub fn with_u64(self, tag: u8, value: u64) -> WireMessage {
        self.with(tag, value.to_be_bytes().to_vec())
    }

    pub fn field(&self, tag: u8) -> Option<&[u8]> {
        self.fields
            .iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, v)| v.as_slice())
    }

    pub fn field_str(&self, tag: u8) -> Option<&str> {
        self.field(tag).and_then(|v| std::str::from_utf8(v).ok())
    }

    pub fn field_u64(&self, tag: u8) -> Option<u64> {
        let v = self.field(tag)?;
        Some(u64::from_be_bytes(v.try_into().ok()?))
    }

    pub fn fields_with(&self, tag: u8) -> impl Iterator<Item = &[u8]> {
        self.fields
            .iter()
            .filter(move |(t, _)| *t == tag)
            .map(|(_, v)| v.as_slice())
    }

    /// Stores `value` across repeated fields of at most
    /// [`MAX_FIELD_LEN`] bytes each; [`Self::field_concat`] reassembles.
    pub fn with_chunked(mut self, tag: u8, value: &[u8]) -> WireMessage {
        if value.is_empty() {
            self.fields.push((tag, Vec::new()));
            return self;
        }
        for chunk in value.chunks(MAX_FIELD_LEN) {
            self.fields.push((tag, chunk.to_vec()));
        }
        self
    }

    /// Concatenation of every field carrying `tag`, or None when absent.
    pub fn field_concat(&self, tag: u8) -> Option<Vec<u8>> {
        let mut out = Vec::new();
        let mut found = false;
        for v in self.fields_with(tag) {
            found = true;
            out.extend_from_slice(v);
        }
        found.then_some(out)
    }

    /// Convenience constructor for error frames.
    pub fn error(reason: u8, detail: &str) -> WireMessage {
        WireMessage::new(MsgType::Error)
            .with(F_REASON, vec![reason])
            .with_str(F_DETAIL, detail)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        for (tag, value) in &self.fields {
            assert!(value.len() <= u16::MAX as usize, "field too large for u16 length");
            payload.push(*tag);
            payload.extend_from_slice(&(value.len() as u16).to_be_bytes());
            payload.extend_from_slice(value);
        }
        let mut out = Vec::with_capacity(10 + payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.msg_type.code());
        out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<WireMessage, MalformedWireMessage> {
        if bytes.len() < 10 {
            return Err(MalformedWireMessage::at(
                bytes.len(),
                "frame shorter than header",
            ));
        }
        for (i, b) in MAGIC.iter().enumerate() {
            if bytes[i] != *b {
                return Err(MalformedWireMessage::at(i, "bad magic"));
            }
        }
        if bytes[4] != VERSION {
            return Err(MalformedWireMessage::at(
                4,
                format!("unsupported version 0x{:02x}", bytes[4]),
            ));
        }
        let msg_type = MsgType::from_code(bytes[5]).ok_or_else(|| {
            MalformedWireMessage::at(5, format!("unknown message type 0x{:02x}", bytes[5]))
        })?;
        let declared = u32::from_be_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
        let payload = &bytes[10..];
        if payload.len() != declared {
            return Err(MalformedWireMessage::at(
                6,
                format!("declared payload {declared} bytes, carried {}", payload.len()),
            ));
        }
        let mut fields = Vec::new();
        let mut pos = 0usize;
        while pos < payload.len() {
            if pos + 3 > payload.len() {
                return Err(MalformedWireMessage::at(
                    10 + pos,
                    "truncated field header",
                ));
            }
            let tag = payload[pos];
            let len =
                u16::from_be_bytes(payload[pos + 1..pos + 3].try_into().expect("2 bytes")) as usize;
            if pos + 3 + len > payload.len() {
                return Err(MalformedWireMessage::at(
                    10 + pos + 1,
                    format!("field 0x{tag:02x} overruns payload"),
                ));
            }
            fields.push((tag, payload[pos + 3..pos + 3 + len].to_vec()));
            pos += 3 + len;
        }
        Ok(WireMessage { msg_type, fields })
    }
}
