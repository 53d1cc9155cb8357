//! Browser bindings for the PKI testbed.
//!
//! Every export returns a JSON string so the page needs no generated
//! glue types, and every export is deterministic in its arguments (the
//! caller supplies seeds), so the demo behaves identically on every
//! load. The same functions compile natively, which is how they are
//! tested.

use lpki_core::authorities::ca::possession_context;
use lpki_core::ec::{small_order_foreign_point, DomainParameters, ECPoint, PublicKeyFlaw};
use lpki_core::flows::FlowError;
use lpki_core::instrument::CostMeter;
use lpki_core::pop::forge_for_small_order_point;
use lpki_core::rng::CounterDrbg;
use lpki_core::signcrypt::{signcrypt, unsigncrypt, SigncryptedMessage};
use lpki_core::uint::U256;
use lpki_core::world::{World, WorldConfig};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Constant communication overhead beyond the plaintext, in bytes:
/// a 32-byte keyed tag plus a 32-byte scalar for signcryption, versus a
/// 33-byte compressed ephemeral point plus a 64-byte signature for
/// sign-then-encrypt.
const SIGNCRYPTION_OVERHEAD: u64 = 64;
const BASELINE_OVERHEAD: u64 = 97;

fn condition(flaw: PublicKeyFlaw) -> &'static str {
    match flaw {
        PublicKeyFlaw::AtInfinity => "a",
        PublicKeyFlaw::OutOfRange => "b",
        PublicKeyFlaw::OffCurve => "c",
        PublicKeyFlaw::WrongOrder => "d",
    }
}

fn point_json(pt: &ECPoint) -> Value {
    match pt {
        ECPoint::Infinity => json!({ "infinity": true }),
        ECPoint::Affine { x, y } => json!({
            "x": x.as_u64(),
            "y": y.as_u64(),
        }),
    }
}

/// The full 19-element group of the teaching curve, as `k`, `k·G` pairs,
/// plus the curve constants for labeling a plot.
#[wasm_bindgen]
pub fn toy_group() -> String {
    let params = DomainParameters::toy17();
    let points: Vec<Value> = (0..19u64)
        .map(|k| {
            let mut v = point_json(&params.scalar_mult(&U256::from_u64(k), &params.g));
            v["k"] = json!(k);
            v
        })
        .collect();
    json!({
        "curve": {
            "name": params.name,
            "p": params.p.as_u64(),
            "a": params.a.as_u64(),
            "b": params.b.as_u64(),
            "n": params.n.as_u64(),
        },
        "points": points,
    })
    .to_string()
}

fn verdict_json(params: &DomainParameters, pt: &ECPoint) -> Value {
    match params.validate_public_key(pt) {
        Ok(()) => json!({ "accepted": true }),
        Err(flaw) => json!({
            "accepted": false,
            "condition": condition(flaw),
            "detail": flaw.to_string(),
        }),
    }
}

/// Structural key validation for one candidate point on the teaching
/// curve. When the point lies on a sibling curve instead (same `a`,
/// different `b`), the answer also names that curve and the point's
/// order there — the quantity an invalid-curve attacker cares about.
#[wasm_bindgen]
pub fn check_point(x: u32, y: u32) -> String {
    let params = DomainParameters::toy17();
    let pt = ECPoint::affine(U256::from_u64(x as u64), U256::from_u64(y as u64));
    let mut out = verdict_json(&params, &pt);
    out["x"] = json!(x);
    out["y"] = json!(y);
    if params.validate_public_key(&pt) == Err(PublicKeyFlaw::OffCurve) {
        // y² − x³ − ax mod p names the sibling curve the point does lie
        // on; the addition formulas never consult b, so its order there
        // is computable with the very same code path.
        let p = params.p.as_u64().expect("toy modulus fits u64");
        let (x, y) = (x as u64 % p, y as u64 % p);
        let b_alt = (y * y % p + 2 * p * p - (x * x % p * x % p) - params.a.as_u64().unwrap() * x % p) % p;
        let mut acc = pt;
        let mut order = 1u64;
        while acc != ECPoint::Infinity && order < 2 * p + 3 {
            acc = params.point_add(&acc, &pt);
            order += 1;
        }
        out["sibling"] = json!({
            "b": b_alt,
            "order": if acc == ECPoint::Infinity { Some(order) } else { None },
        });
    }
    out.to_string()
}

/// The identity element, run through the same validation.
#[wasm_bindgen]
pub fn check_identity_point() -> String {
    let params = DomainParameters::toy17();
    let mut out = verdict_json(&params, &ECPoint::Infinity);
    out["infinity"] = json!(true);
    out.to_string()
}

fn build_world(seed: u64, validate_keys: bool) -> Result<World, String> {
    let mut config = WorldConfig::new(DomainParameters::toy17());
    config.seed = seed;
    config.validate_subject_keys = validate_keys;
    World::new(config).map_err(|e| e.to_string())
}

/// Runs the forged enrollment end to end against two issuance policies:
/// a crafted point of tiny order on a sibling curve, with a possession
/// proof ground out on that tiny order, is submitted to an authority
/// that checks only the proof and to one that also validates the key.
#[wasm_bindgen]
pub fn rogue_enrollment(seed: u32) -> String {
    match rogue_enrollment_inner(seed as u64) {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn rogue_enrollment_inner(seed: u64) -> Result<Value, String> {
    let params = DomainParameters::toy17();
    let foreign = small_order_foreign_point(&params, 7)
        .ok_or("no small-order sibling point on this curve")?;

    let mut lenient = build_world(seed, false)?;
    let ctx = possession_context(&lenient.ca.name, "+15550666");
    let proof = forge_for_small_order_point(&params, &foreign, &ctx, 100_000)
        .ok_or("forgery grind exhausted")?;
    let cert = lenient
        .enroll_claimed_key("+1 555 0666", "Mallory", &foreign.point, Some(&proof))
        .map_err(|e| format!("expected the lenient authority to sign: {e}"))?;

    let mut strict = build_world(seed + 1, true)?;
    let ctx = possession_context(&strict.ca.name, "+15550666");
    let proof = forge_for_small_order_point(&params, &foreign, &ctx, 100_000)
        .ok_or("forgery grind exhausted")?;
    let refusal = strict
        .enroll_claimed_key("+1 555 0666", "Mallory", &foreign.point, Some(&proof))
        .err()
        .ok_or("the validating authority must refuse")?;
    let flaw = match refusal {
        FlowError::InvalidPublicKey(flaw) => flaw,
        other => return Err(format!("expected a key rejection, got {other}")),
    };

    let mut crafted = point_json(&foreign.point);
    crafted["foreign_b"] = json!(foreign.foreign_b.as_u64());
    crafted["order"] = json!(foreign.order);
    Ok(json!({
        "crafted": crafted,
        "lenient": { "issued": true, "serial": cert.serial },
        "strict": {
            "rejected": true,
            "condition": condition(flaw),
            "detail": flaw.to_string(),
        },
    }))
}

fn demo_envelope(
    seed: u64,
    message: &[u8],
) -> (DomainParameters, U256, ECPoint, SigncryptedMessage, u64) {
    let params = DomainParameters::p256();
    let mut rng = CounterDrbg::new(seed);
    let (sender_sk, _sender_pk) = params.generate_keypair(&mut rng).expect("keygen");
    let (recipient_sk, recipient_pk) = params.generate_keypair(&mut rng).expect("keygen");
    let meter = CostMeter::start();
    let sealed =
        signcrypt(&params, &sender_sk, &recipient_pk, message, &mut rng).expect("signcrypt");
    let sender_mults = meter.reading();
    (params, recipient_sk, _sender_pk, sealed, sender_mults)
}

/// Seals a message on the 256-bit curve between two parties derived from
/// the seed, opens it again, and reports the envelope, the exact scalar
/// multiplications each side spent, and the byte overhead next to the
/// sign-then-encrypt baseline.
#[wasm_bindgen]
pub fn signcrypt_roundtrip(seed: u32, message: &str) -> String {
    let (params, recipient_sk, sender_pk, sealed, sender_mults) =
        demo_envelope(seed as u64, message.as_bytes());
    let meter = CostMeter::start();
    let opened = unsigncrypt(&params, &recipient_sk, &sender_pk, &sealed).expect("own envelope");
    let recipient_mults = meter.reading();
    let encoded = sealed.encode(&params);
    json!({
        "curve": params.name,
        "sender_pk": hex::encode(params.compress(&sender_pk)),
        "envelope": {
            "bytes": encoded.len(),
            "hex": hex::encode(&encoded),
        },
        "opened": String::from_utf8_lossy(&opened),
        "mults": {
            "sender": sender_mults,
            "recipient": recipient_mults,
            "baseline_sender": 3,
            "baseline_recipient": 3,
        },
        "overhead_bytes": {
            "signcryption": SIGNCRYPTION_OVERHEAD,
            "baseline": BASELINE_OVERHEAD,
        },
    })
    .to_string()
}

/// Rebuilds the same envelope as [`signcrypt_roundtrip`], flips one bit
/// of its serialized form, and reports what the recipient sees.
#[wasm_bindgen]
pub fn corrupt_and_open(seed: u32, message: &str, bit: u32) -> String {
    let (params, recipient_sk, sender_pk, sealed, _) = demo_envelope(seed as u64, message.as_bytes());
    let mut bytes = sealed.encode(&params);
    let bit = bit as usize % (bytes.len() * 8);
    bytes[bit / 8] ^= 1 << (bit % 8);
    let (stage, outcome) = match SigncryptedMessage::decode(&params, &bytes) {
        Err(e) => ("decode", Err(e.to_string())),
        Ok(corrupted) => (
            "open",
            unsigncrypt(&params, &recipient_sk, &sender_pk, &corrupted)
                .map(|plain| String::from_utf8_lossy(&plain).into_owned())
                .map_err(|e| e.to_string()),
        ),
    };
    match outcome {
        Err(error) => json!({ "bit": bit, "rejected": true, "stage": stage, "error": error }),
        Ok(opened) => json!({ "bit": bit, "rejected": false, "opened": opened }),
    }
    .to_string()
}

/// Cost comparison for a message of the given length: counted scalar
/// multiplications and bytes on the wire, signcryption versus
/// sign-then-encrypt.
#[wasm_bindgen]
pub fn cost_summary(message_len: u32) -> String {
    let len = message_len as u64;
    let compute_saving = 100.0 * (1.0 - 3.0 / 6.0);
    let comms_saving =
        100.0 * (1.0 - SIGNCRYPTION_OVERHEAD as f64 / BASELINE_OVERHEAD as f64);
    json!({
        "message_len": len,
        "mults": {
            "signcryption": { "sender": 1, "recipient": 2, "total": 3 },
            "baseline": { "sender": 3, "recipient": 3, "total": 6 },
            "saving_pct": compute_saving,
        },
        "bytes": {
            "signcryption": len + SIGNCRYPTION_OVERHEAD,
            "baseline": len + BASELINE_OVERHEAD,
            "overhead_saving_pct": comms_saving,
        },
    })
    .to_string()
}
