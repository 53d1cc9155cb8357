//! Acceptance gate: ten pinned criteria covering curve arithmetic, the
//! signcryption scheme, cost accounting, key validation, certificate
//! lifecycle, delegated validation, codec stability, and key agreement.
//!
//! Run `cargo test -p lpki-cli --test acceptance -- --nocapture` to see
//! one `criterion NN: PASS/FAIL` line per criterion. Any FAIL also
//! fails the test run.

use lpki_core::authorities::{validate_certificate, CertValidationError};
use lpki_core::cert::{Certificate, EXT_KEY_USAGE, EXT_PARAMS_DIGEST, USAGE_SIGNCRYPT};
use lpki_core::ec::{DomainParameters, ECPoint, PublicKeyFlaw};
use lpki_core::ecdsa::Signature;
use lpki_core::hmqv::{derive_session_key, AgreementError, Role, SessionInputs};
use lpki_core::ocsp::{CertStatus, OcspToken, REASON_KEY_COMPROMISE};
use lpki_core::repository::subscriber_dn;
use lpki_core::rng::{CounterDrbg, RandomSource};
use lpki_core::signcrypt::{signcrypt, unsigncrypt, SigncryptedMessage};
use lpki_core::uint::U256;
use lpki_core::wire::{WireMessage, ALL_MSG_TYPES, F_DETAIL, F_ENVELOPE, F_SENDER, F_TARGET};
use lpki_core::world::{World, WorldConfig};
use std::collections::HashSet;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

const BIN: &str = env!("CARGO_BIN_EXE_lpki");

/// Runs one criterion body and prints exactly one PASS/FAIL line.
fn criterion(number: u32, description: &str, body: impl FnOnce()) {
    let outcome = catch_unwind(AssertUnwindSafe(body));
    match &outcome {
        Ok(()) => println!("criterion {number:02}: PASS — {description}"),
        Err(_) => println!("criterion {number:02}: FAIL — {description}"),
    }
    if let Err(panic) = outcome {
        resume_unwind(panic);
    }
}

fn draw(rng: &mut CounterDrbg, bound: usize) -> usize {
    let mut buf = [0u8; 8];
    rng.fill(&mut buf).expect("drbg never fails");
    (u64::from_be_bytes(buf) % bound as u64) as usize
}

fn world_on(params: DomainParameters, seed: u64) -> World {
    let mut config = WorldConfig::new(params);
    config.seed = seed;
    World::new(config).expect("world bootstrap")
}

fn machine_value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|line| line.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no `{key}=` line in:\n{text}"))
}

// --- criterion 1 -----------------------------------------------------

#[test]
fn criterion_01_small_curve_group_oracle() {
    criterion(
        1,
        "scalar_mult matches iterated addition for k in [0,38]; group law \
         exhaustively associative and commutative over all 19 elements; < 1 s",
        || {
            let start = Instant::now();
            let params = DomainParameters::toy17();

            let mut iterated = ECPoint::Infinity;
            for k in 0..=38u64 {
                assert_eq!(
                    params.scalar_mult(&U256::from_u64(k), &params.g),
                    iterated,
                    "k = {k}"
                );
                iterated = params.point_add(&iterated, &params.g);
            }

            let elements: Vec<ECPoint> = (0..19u64)
                .map(|k| params.scalar_mult(&U256::from_u64(k), &params.g))
                .collect();
            assert_eq!(
                elements.iter().collect::<HashSet<_>>().len(),
                19,
                "the 19 multiples of the generator are distinct"
            );
            for a in &elements {
                for b in &elements {
                    assert_eq!(params.point_add(a, b), params.point_add(b, a));
                    for c in &elements {
                        assert_eq!(
                            params.point_add(&params.point_add(a, b), c),
                            params.point_add(a, &params.point_add(b, c))
                        );
                    }
                }
            }

            let elapsed = start.elapsed();
            assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
        },
    );
}

// --- criterion 2 -----------------------------------------------------

#[test]
fn criterion_02_signcryption_round_trip_and_corruption() {
    criterion(
        2,
        "1000 random messages (0–64 KiB) round trip exactly and 1000 single-bit \
         corruptions all fail verification on the 256-bit curve; < 30 s",
        || {
            let start = Instant::now();
            let params = DomainParameters::p256();
            let mut rng = CounterDrbg::new(0xACC2);
            let (sk_a, pk_a) = params.generate_keypair(&mut rng).unwrap();
            let (sk_b, pk_b) = params.generate_keypair(&mut rng).unwrap();

            for i in 0..1000 {
                let len = draw(&mut rng, 65_537);
                let mut msg = vec![0u8; len];
                rng.fill(&mut msg).unwrap();
                let sealed = signcrypt(&params, &sk_a, &pk_b, &msg, &mut rng).unwrap();
                let opened = unsigncrypt(&params, &sk_b, &pk_a, &sealed).unwrap();
                assert_eq!(opened, msg, "round trip {i} (len {len})");

                let mut bytes = sealed.encode(&params);
                let bit = draw(&mut rng, bytes.len() * 8);
                bytes[bit / 8] ^= 1 << (bit % 8);
                let rejected = match SigncryptedMessage::decode(&params, &bytes) {
                    Err(_) => true,
                    Ok(corrupted) => unsigncrypt(&params, &sk_b, &pk_a, &corrupted).is_err(),
                };
                assert!(rejected, "corruption {i} (bit {bit}) must not verify");
            }

            let elapsed = start.elapsed();
            assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
        },
    );
}

// --- criterion 3 -----------------------------------------------------

#[test]
fn criterion_03_cost_savings_with_caveat() {
    criterion(
        3,
        "counted multiplications for signcrypt+unsigncrypt are ≤ 50% of \
         sign-then-encrypt (3 vs 6) and serialized overhead saves ≥ 30% \
         (64 vs 97 bytes); the report prints both figures and the caveat",
        || {
            let output = Command::new(BIN)
                .args(["bench", "--curve", "p256", "--sizes", "64,1024,65536", "--iters", "5"])
                .output()
                .expect("bench runs");
            assert!(output.status.success());
            let text = String::from_utf8(output.stdout).unwrap();

            let sc_total: u64 = machine_value(&text, "bench.mults.signcryption.total")
                .parse()
                .unwrap();
            let base_total: u64 = machine_value(&text, "bench.mults.baseline.total")
                .parse()
                .unwrap();
            assert_eq!(sc_total, 3, "one sender + two recipient multiplications");
            assert_eq!(base_total, 6, "three per side for sign-then-encrypt");
            assert!(
                2 * sc_total <= base_total,
                "signcryption must cost at most half: {sc_total} vs {base_total}"
            );

            let sc_overhead: u64 = machine_value(&text, "bench.overhead.signcryption_bytes")
                .parse()
                .unwrap();
            let base_overhead: u64 = machine_value(&text, "bench.overhead.baseline_bytes")
                .parse()
                .unwrap();
            assert_eq!(sc_overhead, 64, "32-byte tag + 32-byte scalar");
            assert_eq!(base_overhead, 97, "33-byte compressed point + 64-byte signature");
            let comms_pct: f64 = machine_value(&text, "bench.saving.comms_pct")
                .parse()
                .unwrap();
            assert!(comms_pct >= 30.0, "communication saving {comms_pct}% < 30%");

            let compute_pct: f64 = machine_value(&text, "bench.saving.compute_pct")
                .parse()
                .unwrap();
            assert!(compute_pct >= 50.0, "compute saving {compute_pct}% < 50%");
            assert_eq!(
                machine_value(&text, "bench.caveat"),
                "published-figures-assume-shorter-keyed-hash-parameterization"
            );
            assert!(
                text.contains("not reproduced"),
                "prose caveat missing:\n{text}"
            );
        },
    );
}

// --- criterion 4 -----------------------------------------------------

#[test]
fn criterion_04_invalid_point_regression() {
    criterion(
        4,
        "the crafted small-order foreign point is certified by the \
         possession-proof-only issuer, rejected via the curve-equation \
         condition (c) by the compliant one; identity, out-of-range and \
         off-curve keys are each rejected",
        || {
            let output = Command::new(BIN)
                .arg("attack-demo")
                .output()
                .expect("attack demo runs");
            assert!(output.status.success());
            let text = String::from_utf8(output.stdout).unwrap();
            assert_eq!(machine_value(&text, "attack.lenient.issued"), "true");
            assert_eq!(machine_value(&text, "attack.strict.rejected"), "true");
            assert_eq!(machine_value(&text, "attack.condition"), "c");

            let params = DomainParameters::toy17();
            assert_eq!(
                params.validate_public_key(&ECPoint::Infinity),
                Err(PublicKeyFlaw::AtInfinity)
            );
            assert_eq!(
                params.validate_public_key(&ECPoint::affine(
                    U256::from_u64(17),
                    U256::from_u64(1)
                )),
                Err(PublicKeyFlaw::OutOfRange),
                "x = p is out of range"
            );
            assert_eq!(
                params.validate_public_key(&ECPoint::affine(
                    U256::from_u64(1),
                    U256::from_u64(1)
                )),
                Err(PublicKeyFlaw::OffCurve),
                "(1,1) does not satisfy y² = x³ + 2x + 2 over F₁₇"
            );
            let on_curve = params.scalar_mult(&U256::from_u64(3), &params.g);
            assert_eq!(params.validate_public_key(&on_curve), Ok(()));
        },
    );
}

// --- criterion 5 -----------------------------------------------------

#[test]
fn criterion_05_certificate_lifecycle() {
    criterion(
        5,
        "issued certificate validates; clock past expiry fails as Expired; \
         revocation turns the status answer and validation negative; an \
         unknown serial is answered Unknown — all with injected clocks",
        || {
            let params = DomainParameters::toy17();
            let mut world = world_on(params.clone(), 0x05);
            // A same-seed twin whose issuer never saw this serial.
            let twin = world_on(params.clone(), 0x05);
            assert_eq!(world.ca.pk, twin.ca.pk, "same seed, same issuer key");

            world.enroll("+15550101", "Alice Example", 2, true).unwrap();
            let cert = world.entity("+15550101").unwrap().certificate.clone();
            let anchor = world.ca.pk;
            let window = world.ocsp_window;
            let mut nonce_rng = CounterDrbg::new(0x55);

            // Freshly issued: all validation steps pass.
            let token = world
                .ca
                .ocsp_response(&params, cert.serial, 10, &mut nonce_rng)
                .unwrap();
            validate_certificate(&params, &cert, &anchor, 10, Some(&token), window)
                .expect("valid certificate validates");

            // Injected clock at not_after: expired (the bound is exclusive).
            let at_expiry = cert.not_after;
            let token = world
                .ca
                .ocsp_response(&params, cert.serial, at_expiry, &mut nonce_rng)
                .unwrap();
            assert_eq!(
                validate_certificate(&params, &cert, &anchor, at_expiry, Some(&token), window),
                Err(CertValidationError::Expired {
                    not_after: at_expiry,
                    now: at_expiry
                })
            );

            // Revocation: the status answer flips and validation fails on it.
            world
                .ca
                .revoke(cert.serial, 30, REASON_KEY_COMPROMISE)
                .unwrap();
            let token = world
                .ca
                .ocsp_response(&params, cert.serial, 40, &mut nonce_rng)
                .unwrap();
            assert_eq!(
                token.status,
                CertStatus::Revoked {
                    since: 30,
                    reason: REASON_KEY_COMPROMISE
                }
            );
            assert_eq!(
                validate_certificate(&params, &cert, &anchor, 40, Some(&token), window),
                Err(CertValidationError::Revoked {
                    since: 30,
                    reason: REASON_KEY_COMPROMISE
                })
            );

            // Unknown serial: answered Unknown, and a certificate bearing it
            // fails validation even though every signature checks out.
            let unknown = twin
                .ca
                .ocsp_response(&params, cert.serial, 50, &mut nonce_rng)
                .unwrap();
            assert_eq!(unknown.status, CertStatus::Unknown);
            assert_eq!(
                validate_certificate(&params, &cert, &anchor, 50, Some(&unknown), window),
                Err(CertValidationError::StatusUnknownSerial)
            );
        },
    );
}

// --- criterion 6 -----------------------------------------------------

enum Op {
    Enroll(String),
    Send {
        from: String,
        to: String,
        msg: Vec<u8>,
    },
    Revoke(String),
}

/// Twenty deterministic pseudo-random operations over a growing pool of
/// subscribers: enrollments, sends, and revocations.
fn scripted_ops(seed: u64) -> Vec<Op> {
    let mut rng = CounterDrbg::new(seed);
    let mut ops = Vec::new();
    let mut enrolled: Vec<String> = Vec::new();
    let mut live: Vec<String> = Vec::new();
    let mut next_line = 0u64;
    let new_id = |next_line: &mut u64| {
        let id = format!("+1555020{next_line:02}");
        *next_line += 1;
        id
    };
    for step in 0..20 {
        let choice = if step < 3 { 9 } else { draw(&mut rng, 10) };
        match choice {
            7 if live.len() > 2 => {
                let victim = live.remove(draw(&mut rng, live.len()));
                ops.push(Op::Revoke(victim));
            }
            8 | 9 => {
                let id = new_id(&mut next_line);
                enrolled.push(id.clone());
                live.push(id.clone());
                ops.push(Op::Enroll(id));
            }
            _ => {
                let from = enrolled[draw(&mut rng, enrolled.len())].clone();
                let mut to = enrolled[draw(&mut rng, enrolled.len())].clone();
                while to == from {
                    to = enrolled[draw(&mut rng, enrolled.len())].clone();
                }
                let mut msg = vec![0u8; 1 + draw(&mut rng, 120)];
                rng.fill(&mut msg).unwrap();
                ops.push(Op::Send { from, to, msg });
            }
        }
    }
    ops
}

/// Applies the operation list, delivering via the given mode. Returns
/// the successfully delivered messages and the end-entity multiplication
/// total.
fn apply_ops(world: &mut World, ops: &[Op], mode: u8) -> (Vec<(String, String, Vec<u8>)>, u64) {
    let mut delivered = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        world.clock = i as u64 * 10;
        match op {
            Op::Enroll(id) => {
                world
                    .enroll(id, &format!("Subscriber {id}"), 2, true)
                    .unwrap();
            }
            Op::Send { from, to, msg } => {
                let result = if mode == 1 {
                    world.mode1_send(from, to, msg)
                } else {
                    world.mode2_send(from, to, msg)
                };
                if let Ok(outcome) = result {
                    assert_eq!(outcome.message, *msg);
                    delivered.push((from.clone(), to.clone(), msg.clone()));
                }
            }
            Op::Revoke(id) => {
                let serial = world.repository.fetch(&subscriber_dn(id)).unwrap().serial;
                world
                    .ca
                    .revoke(serial, world.clock, REASON_KEY_COMPROMISE)
                    .unwrap();
            }
        }
    }
    let total = world.entities.values().map(|e| e.mults).sum();
    (delivered, total)
}

#[test]
fn criterion_06_delegation_equivalence() {
    criterion(
        6,
        "a 20-step randomized scenario delivers the identical message set \
         under direct and delegated validation, with strictly lower \
         end-entity multiplication counts when delegated",
        || {
            let ops = scripted_ops(0x6006);
            let sends = ops
                .iter()
                .filter(|op| matches!(op, Op::Send { .. }))
                .count();
            let revokes = ops
                .iter()
                .filter(|op| matches!(op, Op::Revoke(_)))
                .count();
            assert!(sends >= 8, "script exercises sends ({sends})");
            assert!(revokes >= 1, "script exercises revocation ({revokes})");

            let params = DomainParameters::p256();
            let mut direct = world_on(params.clone(), 0x66);
            let mut delegated = world_on(params, 0x66);
            let (messages_direct, mults_direct) = apply_ops(&mut direct, &ops, 1);
            let (messages_delegated, mults_delegated) = apply_ops(&mut delegated, &ops, 2);

            assert!(
                !messages_direct.is_empty(),
                "at least one delivery succeeds"
            );
            assert!(
                messages_direct.len() < sends,
                "at least one send is stopped by revocation"
            );
            assert_eq!(
                messages_direct, messages_delegated,
                "both modes deliver the identical message set"
            );
            assert!(
                mults_delegated < mults_direct,
                "delegation must lower end-entity work: {mults_delegated} \
                 (delegated) vs {mults_direct} (direct)"
            );
        },
    );
}

// --- criterion 7 -----------------------------------------------------

#[test]
fn criterion_07_validation_authority_contract() {
    criterion(
        7,
        "the validator logs one record per processed request, and 100 random \
         mutations of an identifier or the parameter digest each break the \
         report's verification",
        || {
            // The 256-bit curve: with the 19-element toy group, a mutated
            // report would still verify about once in 19 trials.
            let params = DomainParameters::p256();
            let mut world = world_on(params.clone(), 0x07);
            for (id, name) in [
                ("+15550101", "Alice Example"),
                ("+15550102", "Bob Example"),
                ("+15550103", "Carol Example"),
            ] {
                world.enroll(id, name, 2, true).unwrap();
            }

            // Five requests with mixed verdicts, then one more to keep.
            world.mode2_send("+15550101", "+15550102", b"one").unwrap();
            world.mode2_send("+15550102", "+15550103", b"two").unwrap();
            world
                .dpv_validate("+15550101", "+15550101", "+15550103")
                .unwrap();
            world
                .dpv_validate("+15550103", "+15550102", "+15550101")
                .unwrap();
            let carol_serial = world
                .repository
                .fetch(&subscriber_dn("+15550103"))
                .unwrap()
                .serial;
            world
                .ca
                .revoke(carol_serial, world.clock, REASON_KEY_COMPROMISE)
                .unwrap();
            world
                .dpv_validate("+15550101", "+15550101", "+15550103")
                .unwrap_err();
            let report = world
                .dpv_validate("+15550101", "+15550101", "+15550102")
                .unwrap();
            assert_eq!(
                world.va.log().len(),
                6,
                "exactly one log record per processed request"
            );
            assert_eq!(
                world.va.log().iter().filter(|l| l.contains("rejected")).count(),
                1,
                "the revoked party's request is logged as rejected"
            );

            let va_pk = world.va.pk;
            assert!(report.verify(&params, &va_pk, "+15550101", "+15550102"));
            let mut rng = CounterDrbg::new(0x707);
            for trial in 0..100 {
                let mut mutated = report.clone();
                let failed = match draw(&mut rng, 3) {
                    0 => {
                        let mut id = mutated.sender_id.clone().into_bytes();
                        let i = draw(&mut rng, id.len());
                        id[i] ^= 1 << draw(&mut rng, 7);
                        let id = String::from_utf8_lossy(&id).into_owned();
                        mutated.sender_id = id.clone();
                        // Even vouching for the mutated identifier fails: the
                        // signature covers the original.
                        !mutated.verify(&params, &va_pk, &id, "+15550102")
                    }
                    1 => {
                        let mut id = mutated.recipient_id.clone().into_bytes();
                        let i = draw(&mut rng, id.len());
                        id[i] ^= 1 << draw(&mut rng, 7);
                        let id = String::from_utf8_lossy(&id).into_owned();
                        mutated.recipient_id = id.clone();
                        !mutated.verify(&params, &va_pk, "+15550101", &id)
                    }
                    _ => {
                        let i = draw(&mut rng, mutated.params_digest.len());
                        mutated.params_digest[i] ^= 1 << draw(&mut rng, 8);
                        !mutated.verify(&params, &va_pk, "+15550101", "+15550102")
                    }
                };
                assert!(failed, "mutation {trial} still verified");
            }
        },
    );
}

// --- criterion 8 -----------------------------------------------------

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// The serialized artifacts pinned by golden files. Every value is
/// built from literals so the fixtures depend only on the codecs.
fn golden_artifacts() -> Vec<(String, Vec<u8>)> {
    let params = DomainParameters::toy17();
    let mut artifacts = Vec::new();

    let certificate = Certificate {
        version: 1,
        serial: 7,
        issuer: "ca".into(),
        subject: "+15550101".into(),
        not_before: 1_000,
        not_after: 87_400,
        subject_pk: params.compress(&params.g),
        extensions: vec![
            (EXT_KEY_USAGE, vec![USAGE_SIGNCRYPT]),
            (EXT_PARAMS_DIGEST, params.digest().to_vec()),
        ],
        signature: Signature {
            r: U256::from_u64(5),
            s: U256::from_u64(9),
        },
    };
    let bytes = certificate.encode(&params);
    assert_eq!(
        Certificate::decode(&params, &bytes).unwrap(),
        certificate,
        "certificate codec round trip"
    );
    artifacts.push(("certificate.bin".into(), bytes));

    let token = OcspToken {
        serial: 7,
        status: CertStatus::Revoked {
            since: 1_234,
            reason: REASON_KEY_COMPROMISE,
        },
        produced_at: 2_000,
        responder: "ca".into(),
        signature: Signature {
            r: U256::from_u64(3),
            s: U256::from_u64(4),
        },
    };
    let bytes = token.encode(&params);
    assert_eq!(
        OcspToken::decode(&params, &bytes).unwrap(),
        token,
        "status token codec round trip"
    );
    artifacts.push(("status_token.bin".into(), bytes));

    for msg_type in ALL_MSG_TYPES {
        let msg = WireMessage::new(msg_type)
            .with_str(F_SENDER, "+15550101")
            .with_str(F_TARGET, "+15550102")
            .with(F_ENVELOPE, vec![0xde, 0xad, 0xbe, 0xef])
            .with_str(F_DETAIL, "fixture");
        let bytes = msg.encode();
        assert_eq!(
            WireMessage::decode(&bytes).unwrap(),
            msg,
            "wire codec round trip for {msg_type}"
        );
        artifacts.push((format!("wire_{msg_type}.bin"), bytes));
    }

    artifacts
}

#[test]
fn criterion_08_codec_stability() {
    criterion(
        8,
        "golden files match byte-for-byte for a certificate, a status token \
         and every wire message type; 10,000 random wire messages survive \
         parse∘serialize unchanged",
        || {
            for (name, bytes) in golden_artifacts() {
                let stored = std::fs::read(golden_dir().join(&name)).unwrap_or_else(|_| {
                    panic!("missing golden fixture {name}; run the ignored regenerate test")
                });
                assert_eq!(stored, bytes, "golden fixture {name} drifted");
            }

            let mut rng = CounterDrbg::new(0xC0DEC);
            for _ in 0..10_000 {
                let msg_type = ALL_MSG_TYPES[draw(&mut rng, ALL_MSG_TYPES.len())];
                let mut msg = WireMessage::new(msg_type);
                for _ in 0..draw(&mut rng, 6) {
                    let tag = draw(&mut rng, 256) as u8;
                    let mut value = vec![0u8; draw(&mut rng, 300)];
                    rng.fill(&mut value).unwrap();
                    msg = msg.with(tag, value);
                }
                let bytes = msg.encode();
                let parsed = WireMessage::decode(&bytes).expect("valid frame parses");
                assert_eq!(parsed, msg);
                assert_eq!(parsed.encode(), bytes);
            }
        },
    );
}

#[test]
#[ignore = "rewrites the golden fixtures; run only after an intentional format change"]
fn regenerate_golden_files() {
    std::fs::create_dir_all(golden_dir()).unwrap();
    for (name, bytes) in golden_artifacts() {
        std::fs::write(golden_dir().join(name), bytes).unwrap();
    }
}

// --- criterion 9 -----------------------------------------------------

struct Party {
    id: &'static str,
    sk: U256,
    pk: ECPoint,
    esk: U256,
    epk: ECPoint,
}

fn session_key(
    params: &DomainParameters,
    me: &Party,
    role: Role,
    peer_id: &str,
    peer_pk: &ECPoint,
    peer_epk: &ECPoint,
) -> Result<[u8; 32], AgreementError> {
    derive_session_key(&SessionInputs {
        params,
        role,
        my_id: me.id,
        peer_id,
        my_static_sk: &me.sk,
        my_ephemeral_sk: &me.esk,
        my_ephemeral_pk: &me.epk,
        peer_static_pk: peer_pk,
        peer_ephemeral_pk: peer_epk,
    })
}

#[test]
fn criterion_09_key_agreement() {
    criterion(
        9,
        "100 matched key-agreement sessions agree; identity or ephemeral \
         mismatch yields different keys; an identity-point peer key is \
         refused before any derivation",
        || {
            // Everything on the 256-bit curve: in the 19-element toy group
            // roughly one session in 19 degenerates to the identity point,
            // so "100 sessions agree" only holds where degeneration has
            // negligible probability.
            let p256 = DomainParameters::p256();
            let mut rng = CounterDrbg::new(0x09);
            let mut party = |params: &DomainParameters, id: &'static str| {
                let (sk, pk) = params.generate_keypair(&mut rng).unwrap();
                let (esk, epk) = params.generate_keypair(&mut rng).unwrap();
                Party { id, sk, pk, esk, epk }
            };
            for session in 0..100 {
                let alice = party(&p256, "alice");
                let bob = party(&p256, "bob");
                let k_init =
                    session_key(&p256, &alice, Role::Initiator, "bob", &bob.pk, &bob.epk)
                        .unwrap();
                let k_resp =
                    session_key(&p256, &bob, Role::Responder, "alice", &alice.pk, &alice.epk)
                        .unwrap();
                assert_eq!(k_init, k_resp, "session {session}");
            }

            // Mismatches: different keys, not errors.
            let alice = party(&p256, "alice");
            let bob = party(&p256, "bob");
            let matched =
                session_key(&p256, &alice, Role::Initiator, "bob", &bob.pk, &bob.epk).unwrap();
            let wrong_identity =
                session_key(&p256, &bob, Role::Responder, "mallory", &alice.pk, &alice.epk)
                    .unwrap();
            assert_ne!(matched, wrong_identity, "identity binds the key");
            let stranger = party(&p256, "alice");
            let wrong_ephemeral =
                session_key(&p256, &bob, Role::Responder, "alice", &alice.pk, &stranger.epk)
                    .unwrap();
            assert_ne!(matched, wrong_ephemeral, "ephemeral binds the key");

            // Identity-point inputs are refused before derivation.
            assert_eq!(
                session_key(&p256, &alice, Role::Initiator, "bob", &ECPoint::Infinity, &bob.epk),
                Err(AgreementError::PeerStaticKey(PublicKeyFlaw::AtInfinity))
            );
            assert_eq!(
                session_key(&p256, &alice, Role::Initiator, "bob", &bob.pk, &ECPoint::Infinity),
                Err(AgreementError::PeerEphemeralKey(PublicKeyFlaw::AtInfinity))
            );
        },
    );
}

// --- criterion 10 ----------------------------------------------------

#[test]
fn criterion_10_no_dependence_on_device_timings() {
    criterion(
        10,
        "absolute per-device signing timings are measured, never asserted: \
         the benchmark prints live medians and no criterion compares \
         wall-clock figures against published numbers",
        || {
            // The comparison table of per-device RSA signing times that
            // motivated lightweight PKI work is hardware-specific and is
            // deliberately not reproduced here. Everything this suite
            // pins is either an operation count, a byte count, or a
            // generous upper bound on its own runtime.
            let output = Command::new(BIN)
                .args(["bench", "--curve", "toy17", "--sizes", "64", "--iters", "2"])
                .output()
                .expect("bench runs");
            assert!(output.status.success());
            let text = String::from_utf8(output.stdout).unwrap();
            assert!(
                text.contains("wall-clock medians"),
                "timings are labeled as live measurements:\n{text}"
            );
            assert!(
                !text.to_lowercase().contains("rsa"),
                "no borrowed per-device signing figures:\n{text}"
            );
        },
    );
}
