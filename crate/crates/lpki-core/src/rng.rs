//! Randomness sources.
//!
//! Every key generation and every signcryption pulls bytes through the
//! [`RandomSource`] trait, so a whole run can be made reproducible by
//! seeding a [`CounterDrbg`]. Failure is explicit: a source may refuse to
//! produce bytes and callers must surface that instead of looping forever.

use sha2::{Digest, Sha256};

/// Byte source for nonces and private keys.
pub trait RandomSource {
    /// Fills `dest` with fresh bytes, or reports that entropy is
    /// unavailable.
    fn fill(&mut self, dest: &mut [u8]) -> Result<(), RngFailure>;
}

/// Entropy could not be produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngFailure(pub String);

impl std::fmt::Display for RngFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "randomness unavailable: {}", self.0)
    }
}

impl std::error::Error for RngFailure {}

/// Deterministic generator: SHA-256 over a seed and running counter.
///
/// Not fast and not intended to be; it exists so scenarios, golden files,
/// and the browser demo produce identical bytes everywhere.
#[derive(Clone)]
pub struct CounterDrbg {
    seed: [u8; 32],
    counter: u64,
    buffer: [u8; 32],
    used: usize,
}

impl CounterDrbg {
    pub fn new(seed: u64) -> CounterDrbg {
        let mut h = Sha256::new();
        h.update(b"lpki.drbg.seed");
        h.update(seed.to_be_bytes());
        CounterDrbg {
            seed: h.finalize().into(),
            counter: 0,
            buffer: [0u8; 32],
            used: 32,
        }
    }

    pub fn from_bytes(seed: &[u8]) -> CounterDrbg {
        let mut h = Sha256::new();
        h.update(b"lpki.drbg.seed.bytes");
        h.update(seed);
        CounterDrbg {
            seed: h.finalize().into(),
            counter: 0,
            buffer: [0u8; 32],
            used: 32,
        }
    }

    /// Independent stream for a named subsystem of the same run.
    pub fn fork(&self, label: &str) -> CounterDrbg {
        let mut h = Sha256::new();
        h.update(b"lpki.drbg.fork");
        h.update(self.seed);
        h.update(label.as_bytes());
        CounterDrbg {
            seed: h.finalize().into(),
            counter: 0,
            buffer: [0u8; 32],
            used: 32,
        }
    }

    fn refill(&mut self) {
        let mut h = Sha256::new();
        h.update(b"lpki.drbg.block");
        h.update(self.seed);
        h.update(self.counter.to_be_bytes());
        self.buffer = h.finalize().into();
        self.counter += 1;
        self.used = 0;
    }

    /// Full generator state, for persisting a run mid-stream.
    pub fn state_blob(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(73);
        out.extend_from_slice(&self.seed);
        out.extend_from_slice(&self.counter.to_be_bytes());
        out.extend_from_slice(&self.buffer);
        out.push(self.used as u8);
        out
    }

    /// Inverse of [`Self::state_blob`]; resumes the exact byte stream.
    pub fn from_state_blob(blob: &[u8]) -> Option<CounterDrbg> {
        if blob.len() != 73 || blob[72] > 32 {
            return None;
        }
        Some(CounterDrbg {
            seed: blob[..32].try_into().expect("32 bytes"),
            counter: u64::from_be_bytes(blob[32..40].try_into().expect("8 bytes")),
            buffer: blob[40..72].try_into().expect("32 bytes"),
            used: blob[72] as usize,
        })
    }
}

impl RandomSource for CounterDrbg {
    fn fill(&mut self, dest: &mut [u8]) -> Result<(), RngFailure> {
        for b in dest.iter_mut() {
            if self.used == 32 {
                self.refill();
            }
            *b = self.buffer[self.used];
            self.used += 1;
        }
        Ok(())
    }
}

/// Operating-system entropy via the `rand` crate.
#[cfg(feature = "os-rng")]
pub struct OsRandom;

#[cfg(feature = "os-rng")]
impl RandomSource for OsRandom {
    fn fill(&mut self, dest: &mut [u8]) -> Result<(), RngFailure> {
        use rand::RngCore;
        rand::rngs::OsRng
            .try_fill_bytes(dest)
            .map_err(|e| RngFailure(e.to_string()))
    }
}

/// Replays a fixed list of byte strings, one per `fill` call.
///
/// Used by tests that pin a nonce or private key. Runs dry after the
/// script ends.
pub struct ScriptedRng {
    script: Vec<Vec<u8>>,
    next: usize,
}

impl ScriptedRng {
    pub fn new(script: Vec<Vec<u8>>) -> ScriptedRng {
        ScriptedRng { script, next: 0 }
    }

    /// Script a sequence of scalar values, each emitted as 32 big-endian
    /// bytes.
    pub fn of_scalars(values: &[u64]) -> ScriptedRng {
        ScriptedRng::new(
            values
                .iter()
                .map(|v| {
                    let mut b = [0u8; 32];
                    b[24..].copy_from_slice(&v.to_be_bytes());
                    b.to_vec()
                })
                .collect(),
        )
    }
}

impl RandomSource for ScriptedRng {
    fn fill(&mut self, dest: &mut [u8]) -> Result<(), RngFailure> {
        let entry = self
            .script
            .get(self.next)
            .ok_or_else(|| RngFailure("script exhausted".into()))?;
        if entry.len() != dest.len() {
            return Err(RngFailure(format!(
                "script entry {} is {} bytes, caller wants {}",
                self.next,
                entry.len(),
                dest.len()
            )));
        }
        dest.copy_from_slice(entry);
        self.next += 1;
        Ok(())
    }
}

/// Returns the same bytes forever; exercises rejection-sampling retry
/// limits.
pub struct StuckRng(pub Vec<u8>);

impl RandomSource for StuckRng {
    fn fill(&mut self, dest: &mut [u8]) -> Result<(), RngFailure> {
        for (i, b) in dest.iter_mut().enumerate() {
            *b = *self.0.get(i % self.0.len().max(1)).unwrap_or(&0);
        }
        Ok(())
    }
}
