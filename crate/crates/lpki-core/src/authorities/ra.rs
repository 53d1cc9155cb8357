//! Registration authority: checks subscriber details, normalizes the
//! mobile number that becomes the certificate subject, and hands the
//! certification authority an approval it can rely on.

use std::collections::BTreeMap;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SubscriberDetails {
    pub display_name: String,
    /// Mobile subscriber number in any common written form.
    pub msisdn: String,
}

/// An approved registration; `subject_id` is what certificates carry.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RegistrationRecord {
    pub subject_id: String,
    pub display_name: String,
    pub approved_at: u64,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RaError {
    /// Number normalizes to something already registered.
    DuplicateRegistration { subject_id: String },
    /// Number failed normalization.
    BadNumber(String),
}

impl std::fmt::Display for RaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RaError::DuplicateRegistration { subject_id } => {
                write!(f, "{subject_id} is already registered")
            }
            RaError::BadNumber(raw) => write!(f, "not a usable subscriber number: {raw:?}"),
        }
    }
}

impl std::error::Error for RaError {}

/// Strips separators and checks shape: optional leading +, then 4 to 15
/// digits.
pub fn normalize_msisdn(raw: &str) -> Result<String, RaError> {
    let mut out = String::new();
    for (i, c) in raw.trim().chars().enumerate() {
        match c {
            '+' if i == 0 => out.push('+'),
            '0'..='9' => out.push(c),
            ' ' | '-' | '(' | ')' | '.' => continue,
            _ => return Err(RaError::BadNumber(raw.into())),
        }
    }
    let digits = out.strip_prefix('+').unwrap_or(&out);
    if digits.len() < 4 || digits.len() > 15 || digits.is_empty() {
        return Err(RaError::BadNumber(raw.into()));
    }
    Ok(out)
}

#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct RegistrationAuthority {
    records: BTreeMap<String, RegistrationRecord>,
}

impl RegistrationAuthority {
    pub fn new() -> RegistrationAuthority {
        RegistrationAuthority::default()
    }

    /// Approves a subscriber. The same number, however written, cannot
    /// register twice.
    pub fn register(
        &mut self,
        details: &SubscriberDetails,
        now: u64,
    ) -> Result<RegistrationRecord, RaError> {
        let subject_id = normalize_msisdn(&details.msisdn)?;
        if self.records.contains_key(&subject_id) {
            return Err(RaError::DuplicateRegistration { subject_id });
        }
        let record = RegistrationRecord {
            subject_id: subject_id.clone(),
            display_name: details.display_name.clone(),
            approved_at: now,
        };
        self.records.insert(subject_id, record.clone());
        Ok(record)
    }

    pub fn lookup(&self, subject_id: &str) -> Option<&RegistrationRecord> {
        self.records.get(subject_id)
    }

    pub fn records(&self) -> impl Iterator<Item = &RegistrationRecord> {
        self.records.values()
    }

    pub(crate) fn from_records(
        records: impl IntoIterator<Item = RegistrationRecord>,
    ) -> RegistrationAuthority {
        RegistrationAuthority {
            records: records
                .into_iter()
                .map(|r| (r.subject_id.clone(), r))
                .collect(),
        }
    }
}
