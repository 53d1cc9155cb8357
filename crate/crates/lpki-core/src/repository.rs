//! Certificate repository: a small directory keyed by distinguished
//! names, the publish/fetch half of the infrastructure.
//!
//! Names follow one fixed schema (`uid=<id>,ou=subscribers,o=lpki` for
//! subscribers, `cn=<name>,ou=authorities,o=lpki` for authorities). The
//! whole directory exports to sorted `dn<TAB>base64` lines, which is the
//! interchange format the command line tool reads and writes.

use crate::cert::Certificate;
use crate::codec::DecodeError;
use crate::ec::DomainParameters;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use std::collections::BTreeMap;

pub fn subscriber_dn(id: &str) -> String {
    format!("uid={id},ou=subscribers,o=lpki")
}

pub fn authority_dn(name: &str) -> String {
    format!("cn={name},ou=authorities,o=lpki")
}

/// In-memory directory of certificates by DN. Publishing the same DN
/// again replaces the entry, which is how renewal works.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Repository {
    entries: BTreeMap<String, Certificate>,
}

impl Repository {
    pub fn new() -> Repository {
        Repository::default()
    }

    pub fn publish(&mut self, dn: &str, cert: Certificate) {
        self.entries.insert(dn.to_string(), cert);
    }

    pub fn fetch(&self, dn: &str) -> Option<&Certificate> {
        self.entries.get(dn)
    }

    pub fn remove(&mut self, dn: &str) -> Option<Certificate> {
        self.entries.remove(dn)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dns(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// `dn<TAB>base64(certificate)` per line, sorted by DN.
    pub fn export_text(&self, params: &DomainParameters) -> String {
        let mut out = String::new();
        for (dn, cert) in &self.entries {
            out.push_str(dn);
            out.push('\t');
            out.push_str(&BASE64.encode(cert.encode(params)));
            out.push('\n');
        }
        out
    }

    pub fn import_text(params: &DomainParameters, text: &str) -> Result<Repository, DecodeError> {
        let mut repo = Repository::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (dn, body) = line
                .split_once('\t')
                .ok_or_else(|| DecodeError::new(format!("line {}: missing tab", idx + 1)))?;
            let raw = BASE64
                .decode(body.trim())
                .map_err(|e| DecodeError::new(format!("line {}: base64: {e}", idx + 1)))?;
            let cert = Certificate::decode(params, &raw)
                .map_err(|e| DecodeError::new(format!("line {}: {e}", idx + 1)))?;
            repo.publish(dn, cert);
        }
        Ok(repo)
    }
}
