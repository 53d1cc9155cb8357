//! Desk-scale public key infrastructure testbed built around elliptic-curve
//! signcryption.
//!
//! Everything runs in-process and deterministically: curve arithmetic over
//! configurable short-Weierstrass parameters, a signcryption scheme whose
//! cost is counted in scalar multiplications, and the full authority cast
//! (registration, certification, key generation, repository, validation,
//! timestamping) wired together over an inspectable in-memory network.

pub mod authorities;
pub mod cert;
pub mod codec;
pub mod ec;
pub mod ecdsa;
pub mod flows;
pub mod hmqv;
pub mod instrument;
pub mod ocsp;
pub mod pop;
pub mod primitives;
pub mod repository;
pub mod rng;
pub mod signcrypt;
pub mod smartcard;
pub mod uint;
pub mod wire;
pub mod world;
