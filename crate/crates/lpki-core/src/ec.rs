//! Short-Weierstrass elliptic curves over prime fields.
//!
//! Curves are runtime data, not types: a [`DomainParameters`] value carries
//! p, a, b, the base point, its order and the cofactor, loaded either from
//! the built-in sets or from a parameter file. Arithmetic is plain affine
//! double-and-add; every scalar multiplication bumps the thread-local
//! counter in [`crate::instrument`], which is the cost model the rest of
//! the crate reasons in.
//!
//! The addition formulas use only `a`, never `b`. That is standard, and it
//! is exactly why unvalidated public keys are dangerous: a point on a
//! sibling curve with the same `a` multiplies "correctly" in that foreign
//! group. [`small_order_foreign_point`] constructs such a point so higher
//! layers can demonstrate and test the failure.

use crate::instrument;
use crate::rng::{RandomSource, RngFailure};
use crate::uint::U256;
use sha2::{Digest, Sha256};
use std::fmt;

/// A point in affine coordinates, or the identity.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ECPoint {
    Infinity,
    Affine { x: U256, y: U256 },
}

/// Internal projective form used by `scalar_mult`: x = X/Z², y = Y/Z³,
/// infinity encoded as Z = 0.
#[derive(Clone, Copy)]
struct Jacobian {
    x: U256,
    y: U256,
    z: U256,
}

const JACOBIAN_INFINITY: Jacobian = Jacobian {
    x: U256::ONE,
    y: U256::ONE,
    z: U256::ZERO,
};

impl ECPoint {
    pub fn affine(x: U256, y: U256) -> ECPoint {
        ECPoint::Affine { x, y }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ECPoint::Infinity)
    }

    /// (x, y) of a finite point.
    pub fn coords(&self) -> Option<(U256, U256)> {
        match self {
            ECPoint::Infinity => None,
            ECPoint::Affine { x, y } => Some((*x, *y)),
        }
    }
}

/// Why a public key failed validation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PublicKeyFlaw {
    /// The point is the identity element.
    AtInfinity,
    /// A coordinate is outside [0, p-1].
    OutOfRange,
    /// The coordinates do not satisfy the curve equation.
    OffCurve,
    /// The point is on the curve but not in the prime-order subgroup.
    WrongOrder,
}

impl fmt::Display for PublicKeyFlaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            PublicKeyFlaw::AtInfinity => "public key is the point at infinity",
            PublicKeyFlaw::OutOfRange => "public key coordinate out of field range",
            PublicKeyFlaw::OffCurve => "public key does not satisfy the curve equation",
            PublicKeyFlaw::WrongOrder => "public key is outside the prime-order subgroup",
        };
        f.write_str(msg)
    }
}

impl std::error::Error for PublicKeyFlaw {}

/// Problems loading or checking a parameter set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ParamError {
    MissingKey(&'static str),
    UnknownKey(String),
    BadValue(String),
    NotPrime(&'static str),
    Singular,
    BadGenerator,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::MissingKey(k) => write!(f, "parameter file is missing key {k:?}"),
            ParamError::UnknownKey(k) => write!(f, "parameter file has unknown key {k:?}"),
            ParamError::BadValue(msg) => write!(f, "bad parameter value: {msg}"),
            ParamError::NotPrime(k) => write!(f, "parameter {k} must be prime"),
            ParamError::Singular => write!(f, "curve is singular (4a^3 + 27b^2 = 0)"),
            ParamError::BadGenerator => write!(f, "generator is not a point of order n"),
        }
    }
}

impl std::error::Error for ParamError {}

/// Key or nonce generation failed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum KeyGenError {
    Rng(RngFailure),
    /// Rejection sampling never produced a scalar in [1, n-1].
    SamplingExhausted,
}

impl fmt::Display for KeyGenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyGenError::Rng(e) => write!(f, "{e}"),
            KeyGenError::SamplingExhausted => {
                write!(f, "could not sample a scalar in range after {MAX_SAMPLING_ATTEMPTS} draws")
            }
        }
    }
}

impl std::error::Error for KeyGenError {}

impl From<RngFailure> for KeyGenError {
    fn from(e: RngFailure) -> Self {
        KeyGenError::Rng(e)
    }
}

/// Errors decoding a compressed point.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PointDecodeError {
    BadLength,
    BadTag(u8),
    CoordinateTooLarge,
    /// No y exists for the given x: the encoding is not a curve point.
    NotOnCurve,
}

impl fmt::Display for PointDecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointDecodeError::BadLength => write!(f, "point encoding has wrong length"),
            PointDecodeError::BadTag(t) => write!(f, "unknown point encoding tag 0x{t:02x}"),
            PointDecodeError::CoordinateTooLarge => write!(f, "encoded x is not a field element"),
            PointDecodeError::NotOnCurve => write!(f, "encoded x has no square root on the curve"),
        }
    }
}

impl std::error::Error for PointDecodeError {}

const MAX_SAMPLING_ATTEMPTS: usize = 64;

/// A complete short-Weierstrass parameter set: y^2 = x^3 + ax + b over F_p,
/// base point `g` of prime order `n`, cofactor `h`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DomainParameters {
    pub name: String,
    pub p: U256,
    pub a: U256,
    pub b: U256,
    pub g: ECPoint,
    pub n: U256,
    pub h: U256,
}

impl DomainParameters {
    /// Built-in 5-bit toy group: y^2 = x^3 + 2x + 2 over F_17, base point
    /// (5, 1) of order 19. Small enough to enumerate, which the tests do.
    pub fn toy17() -> DomainParameters {
        Self::from_config_text(include_str!("../params/toy17.curve"))
            .expect("built-in toy parameters are valid")
    }

    /// Built-in 256-bit parameter set (the NIST P-256 constants).
    pub fn p256() -> DomainParameters {
        Self::from_config_text(include_str!("../params/p256.curve"))
            .expect("built-in 256-bit parameters are valid")
    }

    /// Parses the `key = value` parameter file format. Keys: `name`, `p`,
    /// `a`, `b`, `gx`, `gy`, `n`, `h`. `#` starts a comment. Values are
    /// decimal or 0x-hex. The resulting set is fully checked.
    pub fn from_config_text(text: &str) -> Result<DomainParameters, ParamError> {
        let mut name = None;
        let mut fields: [(&str, Option<U256>); 7] = [
            ("p", None),
            ("a", None),
            ("b", None),
            ("gx", None),
            ("gy", None),
            ("n", None),
            ("h", None),
        ];
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ParamError::BadValue(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "name" {
                name = Some(value.to_string());
                continue;
            }
            let slot = fields
                .iter_mut()
                .find(|(k, _)| *k == key)
                .ok_or_else(|| ParamError::UnknownKey(key.to_string()))?;
            let parsed = U256::parse(value)
                .map_err(|e| ParamError::BadValue(format!("{key}: {e}")))?;
            slot.1 = Some(parsed);
        }
        let get = |k: &'static str| -> Result<U256, ParamError> {
            fields
                .iter()
                .find(|(key, _)| *key == k)
                .and_then(|(_, v)| *v)
                .ok_or(ParamError::MissingKey(k))
        };
        let params = DomainParameters {
            name: name.ok_or(ParamError::MissingKey("name"))?,
            p: get("p")?,
            a: get("a")?,
            b: get("b")?,
            g: ECPoint::affine(get("gx")?, get("gy")?),
            n: get("n")?,
            h: get("h")?,
        };
        params.check()?;
        Ok(params)
    }

    /// Serializes back to the parameter file format.
    pub fn to_config_text(&self) -> String {
        let (gx, gy) = self.g.coords().expect("generator is finite");
        format!(
            "name = {}\np = {}\na = {}\nb = {}\ngx = {}\ngy = {}\nn = {}\nh = {}\n",
            self.name, self.p, self.a, self.b, gx, gy, self.n, self.h
        )
    }

    /// Structural checks run on every load.
    fn check(&self) -> Result<(), ParamError> {
        if !self.p.is_probable_prime() || self.p < U256::from_u64(3) {
            return Err(ParamError::NotPrime("p"));
        }
        if !self.n.is_probable_prime() {
            return Err(ParamError::NotPrime("n"));
        }
        if self.a >= self.p || self.b >= self.p {
            return Err(ParamError::BadValue("a and b must be reduced mod p".into()));
        }
        if self.h.is_zero() {
            return Err(ParamError::BadValue("cofactor must be at least 1".into()));
        }
        // 4a^3 + 27b^2 != 0 mod p.
        let a3 = self.a.mul_mod(&self.a, &self.p).mul_mod(&self.a, &self.p);
        let b2 = self.b.mul_mod(&self.b, &self.p);
        let disc = U256::from_u64(4)
            .mul_mod(&a3, &self.p)
            .add_mod(&U256::from_u64(27).rem(&self.p).mul_mod(&b2, &self.p), &self.p);
        if disc.is_zero() {
            return Err(ParamError::Singular);
        }
        if self.g.is_infinity() || !self.is_on_curve(&self.g) {
            return Err(ParamError::BadGenerator);
        }
        if !self.scalar_mult(&self.n, &self.g).is_infinity() {
            return Err(ParamError::BadGenerator);
        }
        Ok(())
    }

    /// SHA-256 over the canonical serialization; parties compare this to
    /// agree they run the same group.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"lpki.params.v1\x00");
        h.update(self.to_config_text().as_bytes());
        h.finalize().into()
    }

    /// Width in bytes of one field coordinate.
    pub fn field_len(&self) -> usize {
        self.p.byte_len()
    }

    /// Width in bytes of one scalar mod n.
    pub fn scalar_len(&self) -> usize {
        self.n.byte_len()
    }

    /// Does (x, y) satisfy y^2 = x^3 + ax + b in F_p?
    pub fn is_on_curve(&self, pt: &ECPoint) -> bool {
        match pt {
            ECPoint::Infinity => true,
            ECPoint::Affine { x, y } => {
                let x = x.rem(&self.p);
                let y = y.rem(&self.p);
                let lhs = y.mul_mod(&y, &self.p);
                let rhs = x
                    .mul_mod(&x, &self.p)
                    .mul_mod(&x, &self.p)
                    .add_mod(&self.a.mul_mod(&x, &self.p), &self.p)
                    .add_mod(&self.b, &self.p);
                lhs == rhs
            }
        }
    }

    pub fn negate(&self, pt: &ECPoint) -> ECPoint {
        match pt {
            ECPoint::Infinity => ECPoint::Infinity,
            ECPoint::Affine { x, y } => ECPoint::affine(*x, y.neg_mod(&self.p)),
        }
    }

    /// Affine group law. Inputs must have canonical coordinates.
    pub fn point_add(&self, p1: &ECPoint, p2: &ECPoint) -> ECPoint {
        let (x1, y1) = match p1 {
            ECPoint::Infinity => return *p2,
            ECPoint::Affine { x, y } => (*x, *y),
        };
        let (x2, y2) = match p2 {
            ECPoint::Infinity => return *p1,
            ECPoint::Affine { x, y } => (*x, *y),
        };
        let p = &self.p;
        let lambda = if x1 == x2 {
            if y1 != y2 || y1.is_zero() {
                // Opposite points, or a 2-torsion point doubled.
                return ECPoint::Infinity;
            }
            // (3x^2 + a) / 2y
            let num = U256::from_u64(3)
                .mul_mod(&x1.mul_mod(&x1, p), p)
                .add_mod(&self.a, p);
            let den = y1.add_mod(&y1, p);
            num.mul_mod(&den.inv_mod(p).expect("2y != 0 for doubling"), p)
        } else {
            let num = y2.sub_mod(&y1, p);
            let den = x2.sub_mod(&x1, p);
            num.mul_mod(&den.inv_mod(p).expect("x2 != x1 here"), p)
        };
        let x3 = lambda
            .mul_mod(&lambda, p)
            .sub_mod(&x1, p)
            .sub_mod(&x2, p);
        let y3 = lambda.mul_mod(&x1.sub_mod(&x3, p), p).sub_mod(&y1, p);
        ECPoint::affine(x3, y3)
    }

    /// Double-and-add scalar multiplication; counts as one metered
    /// operation regardless of scalar size.
    ///
    /// Internally the ladder runs in Jacobian coordinates so the whole
    /// multiplication costs a single field inversion instead of one per
    /// group operation. The result is identical to iterating
    /// `point_add`, which the exhaustive small-curve tests pin down;
    /// like the affine formulas, the projective ones never touch `b`.
    pub fn scalar_mult(&self, k: &U256, pt: &ECPoint) -> ECPoint {
        instrument::record_scalar_mult();
        let mut acc = JACOBIAN_INFINITY;
        for i in (0..k.bits()).rev() {
            acc = self.jac_double(&acc);
            if k.bit(i) {
                acc = self.jac_add_affine(&acc, pt);
            }
        }
        self.jac_to_affine(&acc)
    }

    fn jac_double(&self, pt: &Jacobian) -> Jacobian {
        let p = &self.p;
        if pt.z.is_zero() || pt.y.is_zero() {
            // Already at infinity, or a 2-torsion point whose tangent is
            // vertical.
            return JACOBIAN_INFINITY;
        }
        let yy = pt.y.mul_mod(&pt.y, p);
        let s = U256::from_u64(4).mul_mod(&pt.x, p).mul_mod(&yy, p);
        let zz = pt.z.mul_mod(&pt.z, p);
        let m = U256::from_u64(3)
            .mul_mod(&pt.x.mul_mod(&pt.x, p), p)
            .add_mod(&self.a.mul_mod(&zz.mul_mod(&zz, p), p), p);
        let x3 = m.mul_mod(&m, p).sub_mod(&s.add_mod(&s, p), p);
        let yyyy8 = U256::from_u64(8).mul_mod(&yy.mul_mod(&yy, p), p);
        let y3 = m.mul_mod(&s.sub_mod(&x3, p), p).sub_mod(&yyyy8, p);
        let z3 = pt.y.add_mod(&pt.y, p).mul_mod(&pt.z, p);
        Jacobian { x: x3, y: y3, z: z3 }
    }

    /// Mixed addition of a Jacobian accumulator and an affine point.
    fn jac_add_affine(&self, pt: &Jacobian, q: &ECPoint) -> Jacobian {
        let p = &self.p;
        let (qx, qy) = match q {
            ECPoint::Infinity => return *pt,
            ECPoint::Affine { x, y } => (x, y),
        };
        if pt.z.is_zero() {
            return Jacobian {
                x: *qx,
                y: *qy,
                z: U256::ONE,
            };
        }
        let zz = pt.z.mul_mod(&pt.z, p);
        let u2 = qx.mul_mod(&zz, p);
        let s2 = qy.mul_mod(&pt.z, p).mul_mod(&zz, p);
        let h = u2.sub_mod(&pt.x, p);
        let r = s2.sub_mod(&pt.y, p);
        if h.is_zero() {
            if r.is_zero() {
                // Same point: fall back to the tangent.
                return self.jac_double(pt);
            }
            // Opposite points share an x-coordinate.
            return JACOBIAN_INFINITY;
        }
        let hh = h.mul_mod(&h, p);
        let hhh = h.mul_mod(&hh, p);
        let v = pt.x.mul_mod(&hh, p);
        let x3 = r
            .mul_mod(&r, p)
            .sub_mod(&hhh, p)
            .sub_mod(&v.add_mod(&v, p), p);
        let y3 = r
            .mul_mod(&v.sub_mod(&x3, p), p)
            .sub_mod(&pt.y.mul_mod(&hhh, p), p);
        let z3 = pt.z.mul_mod(&h, p);
        Jacobian { x: x3, y: y3, z: z3 }
    }

    fn jac_to_affine(&self, pt: &Jacobian) -> ECPoint {
        if pt.z.is_zero() {
            return ECPoint::Infinity;
        }
        let p = &self.p;
        let zinv = pt.z.inv_mod(p).expect("z is nonzero");
        let zinv2 = zinv.mul_mod(&zinv, p);
        ECPoint::affine(
            pt.x.mul_mod(&zinv2, p),
            pt.y.mul_mod(&zinv2, p).mul_mod(&zinv, p),
        )
    }

    /// The four-step public key validation. `WrongOrder` can only arise
    /// when the cofactor exceeds 1; the subgroup check then costs one
    /// scalar multiplication.
    pub fn validate_public_key(&self, pk: &ECPoint) -> Result<(), PublicKeyFlaw> {
        let (x, y) = match pk {
            ECPoint::Infinity => return Err(PublicKeyFlaw::AtInfinity),
            ECPoint::Affine { x, y } => (x, y),
        };
        if x >= &self.p || y >= &self.p {
            return Err(PublicKeyFlaw::OutOfRange);
        }
        if !self.is_on_curve(pk) {
            return Err(PublicKeyFlaw::OffCurve);
        }
        if self.h > U256::ONE && !self.scalar_mult(&self.n, pk).is_infinity() {
            return Err(PublicKeyFlaw::WrongOrder);
        }
        Ok(())
    }

    /// Uniform scalar in [1, n-1] by masked rejection sampling.
    pub fn random_scalar(&self, rng: &mut dyn RandomSource) -> Result<U256, KeyGenError> {
        let bits = self.n.bits();
        let width = ((bits + 7) / 8) as usize;
        let mask = 0xffu8 >> (8 * width as u32 - bits);
        let mut buf = vec![0u8; width];
        for _ in 0..MAX_SAMPLING_ATTEMPTS {
            rng.fill(&mut buf)?;
            buf[0] &= mask;
            let candidate = U256::from_be_bytes(&buf).expect("width <= 32");
            if !candidate.is_zero() && candidate < self.n {
                return Ok(candidate);
            }
        }
        Err(KeyGenError::SamplingExhausted)
    }

    /// Fresh keypair (sk, pk = sk * G).
    pub fn generate_keypair(
        &self,
        rng: &mut dyn RandomSource,
    ) -> Result<(U256, ECPoint), KeyGenError> {
        let sk = self.random_scalar(rng)?;
        let pk = self.scalar_mult(&sk, &self.g);
        Ok((sk, pk))
    }

    /// Compressed encoding: 0x00 for infinity, else 0x02/0x03 parity tag
    /// followed by x in `field_len` big-endian bytes.
    pub fn compress(&self, pt: &ECPoint) -> Vec<u8> {
        match pt {
            ECPoint::Infinity => vec![0x00],
            ECPoint::Affine { x, y } => {
                let mut out = Vec::with_capacity(1 + self.field_len());
                out.push(if y.is_even() { 0x02 } else { 0x03 });
                out.extend_from_slice(&x.to_be_bytes_sized(self.field_len()));
                out
            }
        }
    }

    pub fn decompress(&self, bytes: &[u8]) -> Result<ECPoint, PointDecodeError> {
        match bytes.first() {
            None => Err(PointDecodeError::BadLength),
            Some(0x00) => {
                if bytes.len() == 1 {
                    Ok(ECPoint::Infinity)
                } else {
                    Err(PointDecodeError::BadLength)
                }
            }
            Some(&tag @ (0x02 | 0x03)) => {
                if bytes.len() != 1 + self.field_len() {
                    return Err(PointDecodeError::BadLength);
                }
                let x = U256::from_be_bytes(&bytes[1..]).expect("field_len <= 32");
                if x >= self.p {
                    return Err(PointDecodeError::CoordinateTooLarge);
                }
                let rhs = x
                    .mul_mod(&x, &self.p)
                    .mul_mod(&x, &self.p)
                    .add_mod(&self.a.mul_mod(&x, &self.p), &self.p)
                    .add_mod(&self.b, &self.p);
                let y = rhs.sqrt_mod(&self.p).ok_or(PointDecodeError::NotOnCurve)?;
                let want_even = tag == 0x02;
                let y = if y.is_even() == want_even {
                    y
                } else {
                    y.neg_mod(&self.p)
                };
                Ok(ECPoint::affine(x, y))
            }
            Some(&t) => Err(PointDecodeError::BadTag(t)),
        }
    }
}

/// A point that passes range checks but lies on a sibling curve
/// y^2 = x^3 + ax + b' with the same `p` and `a`, chosen so its order
/// under the (b-blind) addition formulas is a small prime.
#[derive(Clone, Debug)]
pub struct ForeignPoint {
    /// The b' of the curve the point actually lives on.
    pub foreign_b: U256,
    pub point: ECPoint,
    /// Prime order of the point in the sibling group.
    pub order: u64,
}

/// Searches sibling curves of a small parameter set for a point of prime
/// order at most `max_order`. Only practical on toy-sized fields; returns
/// `None` when `p` is large or no such point exists.
pub fn small_order_foreign_point(
    params: &DomainParameters,
    max_order: u64,
) -> Option<ForeignPoint> {
    let p = params.p.as_u64()?;
    if p > 4096 {
        return None;
    }
    let b = params.b.as_u64().expect("b < p");
    for b_alt in 0..p {
        if b_alt == b {
            continue;
        }
        let foreign = DomainParameters {
            name: format!("{}-foreign-{}", params.name, b_alt),
            b: U256::from_u64(b_alt),
            ..params.clone()
        };
        // 4a^3 + 27b'^2 may vanish; skip singular siblings.
        let a64 = params.a.as_u64().expect("a < p");
        let disc = (4 * a64 % p * a64 % p * a64 % p + 27 * b_alt % p * b_alt % p) % p;
        if disc == 0 {
            continue;
        }
        for x in 0..p {
            for y in 0..p {
                let pt = ECPoint::affine(U256::from_u64(x), U256::from_u64(y));
                if !foreign.is_on_curve(&pt) || y == 0 && x == 0 && b_alt == 0 {
                    continue;
                }
                // Order by repeated addition under the shared formulas.
                let mut acc = pt;
                let mut order = 1u64;
                while !acc.is_infinity() && order <= max_order {
                    acc = foreign.point_add(&acc, &pt);
                    order += 1;
                }
                if acc.is_infinity()
                    && order >= 2
                    && order <= max_order
                    && U256::from_u64(order).is_probable_prime()
                {
                    return Some(ForeignPoint {
                        foreign_b: U256::from_u64(b_alt),
                        point: pt,
                        order,
                    });
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::CostMeter;
    use crate::rng::{CounterDrbg, ScriptedRng, StuckRng};

    /// Independent oracle: the same group implemented with bare i64
    /// arithmetic. Nothing here touches U256 or the production formulas.
    mod oracle {
        pub const P: i64 = 17;
        pub const A: i64 = 2;
        pub const B: i64 = 2;

        pub type Pt = Option<(i64, i64)>; // None = identity

        fn modp(v: i64) -> i64 {
            v.rem_euclid(P)
        }

        fn inv(v: i64) -> i64 {
            // Fermat: v^(p-2) mod p.
            let mut acc = 1i64;
            for _ in 0..P - 2 {
                acc = modp(acc * modp(v));
            }
            acc
        }

        pub fn on_curve(x: i64, y: i64) -> bool {
            modp(y * y) == modp(x * x % P * x + A * x + B)
        }

        pub fn add(p1: Pt, p2: Pt) -> Pt {
            let (x1, y1) = match p1 {
                None => return p2,
                Some(c) => c,
            };
            let (x2, y2) = match p2 {
                None => return p1,
                Some(c) => c,
            };
            let lambda = if x1 == x2 {
                if modp(y1 + y2) == 0 {
                    return None;
                }
                modp((3 * x1 % P * x1 + A) * inv(2 * y1))
            } else {
                modp((y2 - y1) * inv(x2 - x1))
            };
            let x3 = modp(lambda * lambda - x1 - x2);
            let y3 = modp(lambda * (x1 - x3) - y1);
            Some((x3, y3))
        }

        pub fn mul(k: i64, pt: Pt) -> Pt {
            let mut acc = None;
            for _ in 0..k {
                acc = add(acc, pt);
            }
            acc
        }

        /// All finite points, by brute force.
        pub fn all_points() -> Vec<(i64, i64)> {
            let mut out = vec![];
            for x in 0..P {
                for y in 0..P {
                    if on_curve(x, y) {
                        out.push((x, y));
                    }
                }
            }
            out
        }
    }

    fn toy() -> DomainParameters {
        DomainParameters::toy17()
    }

    fn lift(pt: oracle::Pt) -> ECPoint {
        match pt {
            None => ECPoint::Infinity,
            Some((x, y)) => ECPoint::affine(U256::from_u64(x as u64), U256::from_u64(y as u64)),
        }
    }

    #[test]
    fn toy_group_has_nineteen_elements() {
        let pts = oracle::all_points();
        assert_eq!(pts.len(), 18, "18 finite points plus identity = order 19");
        let params = toy();
        for &(x, y) in &pts {
            assert!(params.is_on_curve(&lift(Some((x, y)))));
        }
    }

    #[test]
    fn addition_matches_oracle_exhaustively() {
        let params = toy();
        let mut elements: Vec<oracle::Pt> = vec![None];
        elements.extend(oracle::all_points().into_iter().map(Some));
        for &p1 in &elements {
            for &p2 in &elements {
                let want = lift(oracle::add(p1, p2));
                let got = params.point_add(&lift(p1), &lift(p2));
                assert_eq!(got, want, "{p1:?} + {p2:?}");
            }
        }
    }

    #[test]
    fn scalar_mult_matches_oracle_for_all_k() {
        let params = toy();
        let g = Some((5, 1));
        for k in 0..=2 * 19 {
            let want = lift(oracle::mul(k, g));
            let got = params.scalar_mult(&U256::from_u64(k as u64), &params.g);
            assert_eq!(got, want, "k = {k}");
        }
    }

    #[test]
    fn generator_order_is_n() {
        let params = toy();
        assert!(params.scalar_mult(&params.n, &params.g).is_infinity());
        let n_minus_1 = params.n.overflowing_sub(&U256::ONE).0;
        assert!(!params.scalar_mult(&n_minus_1, &params.g).is_infinity());
    }

    #[test]
    fn scalar_mult_is_metered() {
        let params = toy();
        let meter = CostMeter::start();
        params.scalar_mult(&U256::from_u64(7), &params.g);
        params.scalar_mult(&U256::from_u64(9), &params.g);
        assert_eq!(meter.reading(), 2);
    }

    #[test]
    fn validation_reports_each_flaw() {
        let params = toy();
        assert_eq!(
            params.validate_public_key(&ECPoint::Infinity),
            Err(PublicKeyFlaw::AtInfinity)
        );
        let out_of_range = ECPoint::affine(U256::from_u64(22), U256::from_u64(1));
        assert_eq!(
            params.validate_public_key(&out_of_range),
            Err(PublicKeyFlaw::OutOfRange)
        );
        // (3, 5): 5^2 = 8, 3^3 + 2*3 + 2 = 35 = 1 mod 17, so off curve.
        let off = ECPoint::affine(U256::from_u64(3), U256::from_u64(5));
        assert!(!params.is_on_curve(&off));
        assert_eq!(params.validate_public_key(&off), Err(PublicKeyFlaw::OffCurve));
        for (x, y) in oracle::all_points() {
            assert_eq!(params.validate_public_key(&lift(Some((x, y)))), Ok(()));
        }
    }

    #[test]
    fn cofactor_branch_rejects_small_subgroup_point() {
        // Search curves over F_23 for a group of order n * h with n prime
        // and h > 1, then check the subgroup test flags points outside the
        // order-n subgroup.
        let p = 23u64;
        let mut built = None;
        'search: for a in 0..p {
            for b in 1..p {
                if (4 * a * a % p * a + 27 * b * b) % p == 0 {
                    continue;
                }
                let probe = DomainParameters {
                    name: "f23-probe".into(),
                    p: U256::from_u64(p),
                    a: U256::from_u64(a),
                    b: U256::from_u64(b),
                    g: ECPoint::Infinity,
                    n: U256::ONE,
                    h: U256::ONE,
                };
                let mut finite = vec![];
                for x in 0..p {
                    for y in 0..p {
                        let pt = ECPoint::affine(U256::from_u64(x), U256::from_u64(y));
                        if probe.is_on_curve(&pt) {
                            finite.push(pt);
                        }
                    }
                }
                let total = finite.len() as u64 + 1;
                for n in [5u64, 7, 11, 13] {
                    let h = total / n;
                    if total % n != 0 || h < 2 || h > 6 {
                        continue;
                    }
                    // Generator of the order-n subgroup and a point
                    // outside it.
                    let gen = finite.iter().find(|pt| {
                        probe.scalar_mult(&U256::from_u64(n), pt).is_infinity()
                    });
                    let outsider = finite.iter().find(|pt| {
                        !probe.scalar_mult(&U256::from_u64(n), pt).is_infinity()
                    });
                    if let (Some(gen), Some(outsider)) = (gen, outsider) {
                        built = Some((
                            DomainParameters {
                                name: "f23-cofactor".into(),
                                g: *gen,
                                n: U256::from_u64(n),
                                h: U256::from_u64(h),
                                ..probe.clone()
                            },
                            *outsider,
                        ));
                        break 'search;
                    }
                }
            }
        }
        let (params, outsider) = built.expect("some curve over F_23 has a cofactor");
        params.check().unwrap();
        assert_eq!(
            params.validate_public_key(&outsider),
            Err(PublicKeyFlaw::WrongOrder)
        );
        assert_eq!(params.validate_public_key(&params.g), Ok(()));
    }

    #[test]
    fn compress_round_trips_every_toy_point() {
        let params = toy();
        for (x, y) in oracle::all_points() {
            let pt = lift(Some((x, y)));
            let enc = params.compress(&pt);
            assert_eq!(enc.len(), 1 + params.field_len());
            assert_eq!(params.decompress(&enc).unwrap(), pt);
        }
        let inf = params.compress(&ECPoint::Infinity);
        assert_eq!(inf, vec![0x00]);
        assert_eq!(params.decompress(&inf).unwrap(), ECPoint::Infinity);
    }

    #[test]
    fn decompress_rejects_garbage() {
        let params = toy();
        assert_eq!(params.decompress(&[]), Err(PointDecodeError::BadLength));
        assert_eq!(params.decompress(&[0x04, 1]), Err(PointDecodeError::BadTag(0x04)));
        assert_eq!(
            params.decompress(&[0x02, 1, 2]),
            Err(PointDecodeError::BadLength)
        );
        assert_eq!(
            params.decompress(&[0x02, 20]),
            Err(PointDecodeError::CoordinateTooLarge)
        );
        // x = 2: 2^3 + 2*2 + 2 = 14, a non-residue mod 17.
        assert_eq!(params.decompress(&[0x02, 2]), Err(PointDecodeError::NotOnCurve));
    }

    #[test]
    fn p256_loads_and_produces_known_points() {
        let params = DomainParameters::p256();
        assert_eq!(params.field_len(), 32);
        assert_eq!(params.scalar_len(), 32);
        assert_eq!(params.validate_public_key(&params.g), Ok(()));
        // 2G for the standard 256-bit curve, a widely published value.
        let two_g = params.scalar_mult(&U256::from_u64(2), &params.g);
        let (x, y) = two_g.coords().unwrap();
        assert_eq!(
            x,
            U256::parse("0x7cf27b188d034f7e8a52380304b51ac3c08969e277f21b35a60b48fc47669978")
                .unwrap()
        );
        assert_eq!(
            y,
            U256::parse("0x07775510db8ed040293d9ac69f7430dbba7dade63ce982299e04b79d227873d1")
                .unwrap()
        );
    }

    #[test]
    fn p256_scalar_mult_matches_commutativity_probe() {
        // (ab)G computed two ways; a cheap self-consistency check on the
        // big curve where exhaustive enumeration is impossible.
        let params = DomainParameters::p256();
        let mut rng = CounterDrbg::new(42);
        let a = params.random_scalar(&mut rng).unwrap();
        let b = params.random_scalar(&mut rng).unwrap();
        let ab = a.mul_mod(&b, &params.n);
        let left = params.scalar_mult(&ab, &params.g);
        let via_a = params.scalar_mult(&a, &params.g);
        let right = params.scalar_mult(&b, &via_a);
        assert_eq!(left, right);
    }

    #[test]
    fn keypair_generation_and_sampling_edges() {
        let params = toy();
        let mut rng = CounterDrbg::new(1);
        for _ in 0..50 {
            let (sk, pk) = params.generate_keypair(&mut rng).unwrap();
            assert!(!sk.is_zero() && sk < params.n);
            assert_eq!(params.validate_public_key(&pk), Ok(()));
        }
        // A source stuck at zero can never produce a valid scalar.
        let mut stuck = StuckRng(vec![0x00]);
        assert_eq!(
            params.random_scalar(&mut stuck),
            Err(KeyGenError::SamplingExhausted)
        );
        // Scripted draws land exactly; toy scalars are single bytes.
        let mut scripted = ScriptedRng::new(vec![vec![0x07]]);
        assert_eq!(params.random_scalar(&mut scripted).unwrap(), U256::from_u64(7));
        // Out-of-range draws are skipped, then the next value is taken.
        let mut scripted = ScriptedRng::new(vec![vec![0x1f], vec![0x00], vec![0x12]]);
        assert_eq!(params.random_scalar(&mut scripted).unwrap(), U256::from_u64(18));
    }

    #[test]
    fn foreign_point_has_small_order_and_passes_weak_checks() {
        let params = toy();
        let foreign = small_order_foreign_point(&params, 7).expect("toy field has one");
        // Looks fine to anything that skips the curve equation.
        let (x, y) = foreign.point.coords().unwrap();
        assert!(x < params.p && y < params.p);
        // But full validation flags it.
        assert_eq!(
            params.validate_public_key(&foreign.point),
            Err(PublicKeyFlaw::OffCurve)
        );
        // And its order under the shared formulas really is small.
        let mult = params.scalar_mult(&U256::from_u64(foreign.order), &foreign.point);
        assert!(mult.is_infinity());
        assert!(!params
            .scalar_mult(&U256::ONE, &foreign.point)
            .is_infinity());
    }

    #[test]
    fn param_file_round_trip_and_errors() {
        let params = toy();
        let text = params.to_config_text();
        let reloaded = DomainParameters::from_config_text(&text).unwrap();
        assert_eq!(params, reloaded);
        assert_eq!(params.digest(), reloaded.digest());
        assert_ne!(params.digest(), DomainParameters::p256().digest());

        let missing = "name = x\np = 17\na = 2\nb = 2\ngx = 5\ngy = 1\nn = 19\n";
        assert_eq!(
            DomainParameters::from_config_text(missing),
            Err(ParamError::MissingKey("h"))
        );
        let unknown = format!("{text}q = 4\n");
        assert!(matches!(
            DomainParameters::from_config_text(&unknown),
            Err(ParamError::UnknownKey(_))
        ));
        let composite_p = text.replace("p = 0x11", "p = 0x10");
        let alt = composite_p.replace("p = 17", "p = 16");
        assert!(matches!(
            DomainParameters::from_config_text(&alt),
            Err(ParamError::NotPrime("p")) | Err(ParamError::BadValue(_)) | Err(ParamError::BadGenerator)
        ));
        let bad_gen = text.replace("gx = 0x5", "gx = 0x6").replace("gx = 5", "gx = 6");
        assert!(matches!(
            DomainParameters::from_config_text(&bad_gen),
            Err(ParamError::BadGenerator)
        ));
    }
}
