//! Invalid-curve enrollment demonstration.
//!
//! A possession proof shows the enrollee can answer a challenge for the
//! claimed key — it does not show the key is a valid group element. The
//! shared affine addition formulas never use the curve constant `b`, so
//! a point from a sibling curve (same `a`, different `b`) runs through
//! them fine, and if its order there is tiny, a proof transcript can be
//! ground out without knowing any discrete log. An authority that only
//! checks the proof signs a certificate for a key that is not on its
//! curve at all. The four-step structural key validation stops this; the
//! demonstration runs the same forged enrollment against both policies.

use anyhow::{anyhow, Result};
use lpki_core::authorities::ca::possession_context;
use lpki_core::ec::{small_order_foreign_point, DomainParameters, ECPoint, PublicKeyFlaw};
use lpki_core::flows::FlowError;
use lpki_core::pop::forge_for_small_order_point;
use lpki_core::world::{World, WorldConfig};
use std::io::Write;

const MALLORY: &str = "+1 555 0666";

fn build_world(lenient: bool, seed: u64) -> Result<World> {
    // The demonstration runs on the enumerable toy group: sibling-curve
    // search is exhaustive there, so the crafted point is found rather
    // than assumed.
    let mut config = WorldConfig::new(DomainParameters::toy17());
    config.seed = seed;
    config.validate_subject_keys = !lenient;
    World::new(config).map_err(|e| anyhow!("{e}"))
}

pub fn run(out: &mut dyn Write) -> Result<()> {
    let params = DomainParameters::toy17();
    let foreign = small_order_foreign_point(&params, 7)
        .ok_or_else(|| anyhow!("no small-order sibling point on this curve"))?;
    let (x, y) = match foreign.point {
        ECPoint::Affine { x, y } => (x, y),
        ECPoint::Infinity => unreachable!("search never returns the identity"),
    };

    writeln!(out, "invalid-curve enrollment demonstration (curve {})", params.name)?;
    writeln!(out)?;
    writeln!(
        out,
        "crafted key: ({x}, {y}) — not on y^2 = x^3 + {}x + {}, but on the sibling",
        params.a, params.b
    )?;
    writeln!(
        out,
        "curve with b' = {} where it has prime order {}",
        foreign.foreign_b, foreign.order
    )?;
    writeln!(
        out,
        "the addition formulas never consult b, so every computation below runs anyway"
    )?;
    writeln!(out)?;

    // The proof transcript is forged against each authority's challenge
    // context by grinding commitments until the challenge vanishes on
    // the point's tiny order.
    let mut lenient_world = build_world(true, 0xA11)?;
    let subject_id = "+15550666";
    let ctx = possession_context(&lenient_world.ca.name, subject_id);
    let proof = forge_for_small_order_point(&params, &foreign, &ctx, 100_000)
        .ok_or_else(|| anyhow!("forgery grind exhausted"))?;

    writeln!(out, "-- authority that checks only the possession proof --")?;
    let cert = lenient_world
        .enroll_claimed_key(MALLORY, "Mallory", &foreign.point, Some(&proof))
        .map_err(|e| anyhow!("expected the lenient authority to sign: {e}"))?;
    writeln!(
        out,
        "FORGED PROOF ACCEPTED: certificate serial {} issued for the invalid key",
        cert.serial
    )?;
    writeln!(
        out,
        "any relying party that skips key validation now works in a group of order {}",
        foreign.order
    )?;
    writeln!(out)?;

    let mut strict_world = build_world(false, 0xA12)?;
    let ctx = possession_context(&strict_world.ca.name, subject_id);
    let proof = forge_for_small_order_point(&params, &foreign, &ctx, 100_000)
        .ok_or_else(|| anyhow!("forgery grind exhausted"))?;
    writeln!(out, "-- authority that also validates the claimed key --")?;
    let refusal = strict_world
        .enroll_claimed_key(MALLORY, "Mallory", &foreign.point, Some(&proof))
        .err()
        .ok_or_else(|| anyhow!("the compliant authority must refuse"))?;
    let flaw = match refusal {
        FlowError::InvalidPublicKey(flaw) => flaw,
        other => return Err(anyhow!("expected a key rejection, got {other}")),
    };
    writeln!(out, "rejected: {flaw}")?;
    writeln!(out)?;
    writeln!(out, "the validation checks, in order:")?;
    writeln!(out, "  (a) the key is not the identity element")?;
    writeln!(out, "  (b) both coordinates lie in [0, p-1]")?;
    writeln!(out, "  (c) the coordinates satisfy the curve equation y^2 = x^3 + ax + b")?;
    writeln!(out, "  (d) the key has the group order (checked when the cofactor exceeds 1)")?;
    let condition = match flaw {
        PublicKeyFlaw::AtInfinity => "a",
        PublicKeyFlaw::OutOfRange => "b",
        PublicKeyFlaw::OffCurve => "c",
        PublicKeyFlaw::WrongOrder => "d",
    };
    writeln!(out, "violated condition: ({condition})")?;
    writeln!(out)?;

    writeln!(out, "== machine-readable ==")?;
    writeln!(out, "attack.curve={}", params.name)?;
    writeln!(out, "attack.foreign_b={}", foreign.foreign_b)?;
    writeln!(out, "attack.foreign_order={}", foreign.order)?;
    writeln!(out, "attack.lenient.issued=true")?;
    writeln!(out, "attack.lenient.serial={}", cert.serial)?;
    writeln!(out, "attack.strict.rejected=true")?;
    writeln!(out, "attack.condition={condition}")?;
    Ok(())
}
