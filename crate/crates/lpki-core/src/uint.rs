//! Fixed-width 256-bit unsigned integers and the modular arithmetic the
//! curve layer is built on.
//!
//! Values are four little-endian `u64` limbs, sized for the largest
//! parameter set shipped with the crate (256-bit prime curves). Products
//! widen into eight limbs and are reduced by long division, so moduli are
//! arbitrary; nothing here is specialised to a particular prime.

use std::cmp::Ordering;
use std::fmt;

pub const LIMBS: usize = 4;
pub const BYTES: usize = LIMBS * 8;

/// Unsigned 256-bit integer, little-endian limbs.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct U256(pub(crate) [u64; LIMBS]);

/// Error from parsing a big-integer literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseUintError {
    Empty,
    BadDigit(char),
    Overflow,
}

impl fmt::Display for ParseUintError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseUintError::Empty => write!(f, "empty integer literal"),
            ParseUintError::BadDigit(c) => write!(f, "invalid digit {c:?}"),
            ParseUintError::Overflow => write!(f, "integer literal exceeds 256 bits"),
        }
    }
}

impl std::error::Error for ParseUintError {}

impl U256 {
    pub const ZERO: U256 = U256([0; LIMBS]);
    pub const ONE: U256 = U256([1, 0, 0, 0]);

    pub fn from_u64(v: u64) -> U256 {
        U256([v, 0, 0, 0])
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; LIMBS]
    }

    pub fn is_even(&self) -> bool {
        self.0[0] & 1 == 0
    }

    pub fn as_u64(&self) -> Option<u64> {
        if self.0[1] == 0 && self.0[2] == 0 && self.0[3] == 0 {
            Some(self.0[0])
        } else {
            None
        }
    }

    /// Number of significant bits; 0 for zero.
    pub fn bits(&self) -> u32 {
        for i in (0..LIMBS).rev() {
            if self.0[i] != 0 {
                return 64 * i as u32 + 64 - self.0[i].leading_zeros();
            }
        }
        0
    }

    pub fn bit(&self, i: u32) -> bool {
        let (limb, off) = (i / 64, i % 64);
        limb < LIMBS as u32 && (self.0[limb as usize] >> off) & 1 == 1
    }

    /// Minimum byte count holding the value; at least 1.
    pub fn byte_len(&self) -> usize {
        ((self.bits().max(1) + 7) / 8) as usize
    }

    pub fn from_be_bytes(bytes: &[u8]) -> Result<U256, ParseUintError> {
        if bytes.len() > BYTES {
            // Tolerate leading zero padding beyond 32 bytes.
            let extra = bytes.len() - BYTES;
            if bytes[..extra].iter().any(|&b| b != 0) {
                return Err(ParseUintError::Overflow);
            }
            return U256::from_be_bytes(&bytes[extra..]);
        }
        let mut limbs = [0u64; LIMBS];
        for (i, &b) in bytes.iter().rev().enumerate() {
            limbs[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        Ok(U256(limbs))
    }

    /// Full-width big-endian encoding (32 bytes).
    pub fn to_be_bytes(&self) -> [u8; BYTES] {
        let mut out = [0u8; BYTES];
        for i in 0..BYTES {
            out[BYTES - 1 - i] = (self.0[i / 8] >> (8 * (i % 8))) as u8;
        }
        out
    }

    /// Big-endian encoding truncated/padded to `width` bytes.
    /// Panics if the value does not fit, which callers prevent by sizing
    /// widths from the relevant modulus.
    pub fn to_be_bytes_sized(&self, width: usize) -> Vec<u8> {
        let full = self.to_be_bytes();
        if width >= BYTES {
            let mut out = vec![0u8; width - BYTES];
            out.extend_from_slice(&full);
            return out;
        }
        assert!(
            full[..BYTES - width].iter().all(|&b| b == 0),
            "value does not fit in {width} bytes"
        );
        full[BYTES - width..].to_vec()
    }

    /// Parses a decimal or `0x`-prefixed hex literal. Underscores are
    /// permitted as visual separators.
    pub fn parse(text: &str) -> Result<U256, ParseUintError> {
        let text = text.trim();
        let (radix, digits) = match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
            Some(rest) => (16u64, rest),
            None => (10u64, text),
        };
        let mut acc = U256::ZERO;
        let mut seen = false;
        for c in digits.chars() {
            if c == '_' {
                continue;
            }
            let d = c.to_digit(radix as u32).ok_or(ParseUintError::BadDigit(c))? as u64;
            acc = acc
                .checked_mul_u64(radix)
                .and_then(|v| v.checked_add_u64(d))
                .ok_or(ParseUintError::Overflow)?;
            seen = true;
        }
        if !seen {
            return Err(ParseUintError::Empty);
        }
        Ok(acc)
    }

    fn checked_mul_u64(&self, m: u64) -> Option<U256> {
        let mut out = [0u64; LIMBS];
        let mut carry = 0u128;
        for i in 0..LIMBS {
            let v = self.0[i] as u128 * m as u128 + carry;
            out[i] = v as u64;
            carry = v >> 64;
        }
        if carry != 0 {
            None
        } else {
            Some(U256(out))
        }
    }

    fn checked_add_u64(&self, a: u64) -> Option<U256> {
        let (v, overflow) = self.overflowing_add(&U256::from_u64(a));
        if overflow {
            None
        } else {
            Some(v)
        }
    }

    pub fn overflowing_add(&self, rhs: &U256) -> (U256, bool) {
        let mut out = [0u64; LIMBS];
        let mut carry = false;
        for i in 0..LIMBS {
            let (v, c1) = self.0[i].overflowing_add(rhs.0[i]);
            let (v, c2) = v.overflowing_add(carry as u64);
            out[i] = v;
            carry = c1 | c2;
        }
        (U256(out), carry)
    }

    pub fn overflowing_sub(&self, rhs: &U256) -> (U256, bool) {
        let mut out = [0u64; LIMBS];
        let mut borrow = false;
        for i in 0..LIMBS {
            let (v, b1) = self.0[i].overflowing_sub(rhs.0[i]);
            let (v, b2) = v.overflowing_sub(borrow as u64);
            out[i] = v;
            borrow = b1 | b2;
        }
        (U256(out), borrow)
    }

    /// Widening product, eight little-endian limbs.
    pub fn widening_mul(&self, rhs: &U256) -> [u64; 2 * LIMBS] {
        let mut out = [0u64; 2 * LIMBS];
        for i in 0..LIMBS {
            let mut carry = 0u128;
            for j in 0..LIMBS {
                let v = self.0[i] as u128 * rhs.0[j] as u128 + out[i + j] as u128 + carry;
                out[i + j] = v as u64;
                carry = v >> 64;
            }
            out[i + LIMBS] = carry as u64;
        }
        out
    }

    /// Halves the (value, extra top bit) pair.
    fn shr1_with_carry(&self, top: bool) -> U256 {
        let mut out = [0u64; LIMBS];
        for i in 0..LIMBS {
            let lo = self.0[i] >> 1;
            let hi = if i + 1 < LIMBS {
                self.0[i + 1] << 63
            } else {
                (top as u64) << 63
            };
            out[i] = lo | hi;
        }
        U256(out)
    }

    /// `self mod m`, for arbitrary nonzero `m`.
    pub fn rem(&self, m: &U256) -> U256 {
        if self < m {
            return *self;
        }
        let mut wide = [0u64; 2 * LIMBS];
        wide[..LIMBS].copy_from_slice(&self.0);
        rem_wide(&wide, m)
    }

    pub fn add_mod(&self, rhs: &U256, m: &U256) -> U256 {
        debug_assert!(self < m && rhs < m);
        let (sum, carry) = self.overflowing_add(rhs);
        if carry || &sum >= m {
            sum.overflowing_sub(m).0
        } else {
            sum
        }
    }

    pub fn sub_mod(&self, rhs: &U256, m: &U256) -> U256 {
        debug_assert!(self < m && rhs < m);
        let (diff, borrow) = self.overflowing_sub(rhs);
        if borrow {
            diff.overflowing_add(m).0
        } else {
            diff
        }
    }

    pub fn neg_mod(&self, m: &U256) -> U256 {
        if self.is_zero() {
            U256::ZERO
        } else {
            m.overflowing_sub(self).0
        }
    }

    pub fn mul_mod(&self, rhs: &U256, m: &U256) -> U256 {
        rem_wide(&self.widening_mul(rhs), m)
    }

    pub fn pow_mod(&self, exp: &U256, m: &U256) -> U256 {
        if m == &U256::ONE {
            return U256::ZERO;
        }
        let mut result = U256::ONE;
        let base = self.rem(m);
        let top = exp.bits();
        for i in (0..top).rev() {
            result = result.mul_mod(&result, m);
            if exp.bit(i) {
                result = result.mul_mod(&base, m);
            }
        }
        result
    }

    /// Modular inverse for odd modulus via the binary extended gcd.
    /// Returns `None` when `gcd(self, m) != 1`.
    pub fn inv_mod(&self, m: &U256) -> Option<U256> {
        debug_assert!(!m.is_even(), "binary inversion requires an odd modulus");
        let a = self.rem(m);
        if a.is_zero() {
            return None;
        }
        let mut u = a;
        let mut v = *m;
        let mut x1 = U256::ONE;
        let mut x2 = U256::ZERO;
        while u != U256::ONE && v != U256::ONE {
            // u or v collapsing to zero means the other is gcd(a, m) > 1.
            if u.is_zero() || v.is_zero() {
                return None;
            }
            while u.is_even() {
                u = u.shr1_with_carry(false);
                x1 = if x1.is_even() {
                    x1.shr1_with_carry(false)
                } else {
                    let (s, c) = x1.overflowing_add(m);
                    s.shr1_with_carry(c)
                };
            }
            while v.is_even() {
                v = v.shr1_with_carry(false);
                x2 = if x2.is_even() {
                    x2.shr1_with_carry(false)
                } else {
                    let (s, c) = x2.overflowing_add(m);
                    s.shr1_with_carry(c)
                };
            }
            if u >= v {
                u = u.overflowing_sub(&v).0;
                x1 = x1.sub_mod(&x2, m);
            } else {
                v = v.overflowing_sub(&u).0;
                x2 = x2.sub_mod(&x1, m);
            }
        }
        let inv = if u == U256::ONE { x1 } else { x2 };
        // gcd(a, m) = 1 exactly when the loop terminated at 1.
        if u != U256::ONE && v != U256::ONE {
            return None;
        }
        let inv = inv.rem(m);
        debug_assert_eq!(inv.mul_mod(&a, m), U256::ONE);
        Some(inv)
    }

    /// Square root modulo an odd prime (Tonelli–Shanks, with the
    /// `p = 3 mod 4` shortcut). Returns `None` for non-residues.
    pub fn sqrt_mod(&self, p: &U256) -> Option<U256> {
        let a = self.rem(p);
        if a.is_zero() {
            return Some(U256::ZERO);
        }
        let one = U256::ONE;
        let p_minus_1 = p.overflowing_sub(&one).0;
        let half = p_minus_1.shr1_with_carry(false);
        if a.pow_mod(&half, p) != one {
            return None;
        }
        if p.0[0] & 3 == 3 {
            let exp = p.overflowing_add(&one).0.shr1_with_carry(false).shr1_with_carry(false);
            let r = a.pow_mod(&exp, p);
            return Some(r);
        }
        // Write p-1 = q * 2^s with q odd.
        let mut q = p_minus_1;
        let mut s = 0u32;
        while q.is_even() {
            q = q.shr1_with_carry(false);
            s += 1;
        }
        // Smallest quadratic non-residue.
        let mut z = U256::from_u64(2);
        while z.pow_mod(&half, p) == one {
            z = z.overflowing_add(&one).0;
        }
        let mut m = s;
        let mut c = z.pow_mod(&q, p);
        let mut t = a.pow_mod(&q, p);
        let q_plus_1_half = q.overflowing_add(&one).0.shr1_with_carry(false);
        let mut r = a.pow_mod(&q_plus_1_half, p);
        loop {
            if t == one {
                return Some(r);
            }
            let mut i = 0u32;
            let mut t2 = t;
            while t2 != one {
                t2 = t2.mul_mod(&t2, p);
                i += 1;
                if i == m {
                    return None;
                }
            }
            let mut b = c;
            for _ in 0..(m - i - 1) {
                b = b.mul_mod(&b, p);
            }
            m = i;
            c = b.mul_mod(&b, p);
            t = t.mul_mod(&c, p);
            r = r.mul_mod(&b, p);
        }
    }

    /// Miller–Rabin with the first twelve prime bases. Deterministic below
    /// 3.3e24; a strong sanity check for larger inputs.
    pub fn is_probable_prime(&self) -> bool {
        const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
        if let Some(v) = self.as_u64() {
            if v < 2 {
                return false;
            }
            if SMALL.contains(&v) {
                return true;
            }
        }
        if self.is_even() {
            return false;
        }
        for &sp in &SMALL {
            if self.rem(&U256::from_u64(sp)).is_zero() {
                return self.as_u64() == Some(sp);
            }
        }
        let one = U256::ONE;
        let n_minus_1 = self.overflowing_sub(&one).0;
        let mut d = n_minus_1;
        let mut r = 0u32;
        while d.is_even() {
            d = d.shr1_with_carry(false);
            r += 1;
        }
        'witness: for &w in &SMALL {
            let mut x = U256::from_u64(w).pow_mod(&d, self);
            if x == one || x == n_minus_1 {
                continue;
            }
            for _ in 0..r - 1 {
                x = x.mul_mod(&x, self);
                if x == n_minus_1 {
                    continue 'witness;
                }
            }
            return false;
        }
        true
    }
}

impl Ord for U256 {
    fn cmp(&self, other: &Self) -> Ordering {
        for i in (0..LIMBS).rev() {
            match self.0[i].cmp(&other.0[i]) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for U256 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for U256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x")?;
        let mut leading = true;
        for i in (0..LIMBS).rev() {
            if leading && self.0[i] == 0 && i > 0 {
                continue;
            }
            if leading {
                write!(f, "{:x}", self.0[i])?;
                leading = false;
            } else {
                write!(f, "{:016x}", self.0[i])?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for U256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<u64> for U256 {
    fn from(v: u64) -> Self {
        U256::from_u64(v)
    }
}

/// Remainder of an up-to-512-bit numerator modulo a nonzero `U256`
/// (Knuth algorithm D, remainder only).
fn rem_wide(num: &[u64; 2 * LIMBS], m: &U256) -> U256 {
    assert!(!m.is_zero(), "division by zero");
    let dn = {
        let mut n = LIMBS;
        while n > 1 && m.0[n - 1] == 0 {
            n -= 1;
        }
        n
    };
    let mut un = 2 * LIMBS;
    while un > 1 && num[un - 1] == 0 {
        un -= 1;
    }
    if dn == 1 {
        let d = m.0[0];
        let mut rem = 0u128;
        for i in (0..un).rev() {
            rem = ((rem << 64) | num[i] as u128) % d as u128;
        }
        return U256::from_u64(rem as u64);
    }
    // Quick exit when the numerator is already smaller.
    {
        let small = un <= LIMBS && {
            let head = U256({
                let mut l = [0u64; LIMBS];
                l[..un].copy_from_slice(&num[..un]);
                l
            });
            &head < m
        };
        if small {
            let mut l = [0u64; LIMBS];
            l[..un.min(LIMBS)].copy_from_slice(&num[..un.min(LIMBS)]);
            return U256(l);
        }
    }

    let shift = m.0[dn - 1].leading_zeros();
    // Normalized divisor v and numerator u (u gains one limb).
    let mut v = [0u64; LIMBS];
    for i in (0..dn).rev() {
        v[i] = if shift == 0 {
            m.0[i]
        } else {
            (m.0[i] << shift) | if i > 0 { m.0[i - 1] >> (64 - shift) } else { 0 }
        };
    }
    let mut u = [0u64; 2 * LIMBS + 1];
    if shift == 0 {
        u[..2 * LIMBS].copy_from_slice(num);
    } else {
        for i in (0..2 * LIMBS).rev() {
            u[i] = (num[i] << shift) | if i > 0 { num[i - 1] >> (64 - shift) } else { 0 };
        }
        u[2 * LIMBS] = num[2 * LIMBS - 1] >> (64 - shift);
    }

    let n = dn;
    let mlen = 2 * LIMBS - n; // number of quotient digits - 1
    for j in (0..=mlen).rev() {
        // Estimate the quotient digit from the top two numerator limbs.
        let top = ((u[j + n] as u128) << 64) | u[j + n - 1] as u128;
        let mut qhat = top / v[n - 1] as u128;
        let mut rhat = top % v[n - 1] as u128;
        while qhat >> 64 != 0
            || qhat * v[n - 2] as u128 > ((rhat << 64) | u[j + n - 2] as u128)
        {
            qhat -= 1;
            rhat += v[n - 1] as u128;
            if rhat >> 64 != 0 {
                break;
            }
        }
        // Multiply-subtract qhat * v from u[j..j+n+1].
        let mut borrow = 0i128;
        let mut carry = 0u128;
        for i in 0..n {
            let p = qhat * v[i] as u128 + carry;
            carry = p >> 64;
            let sub = (u[j + i] as i128) - (p as u64 as i128) + borrow;
            u[j + i] = sub as u64;
            borrow = sub >> 64;
        }
        let sub = (u[j + n] as i128) - (carry as i128) + borrow;
        u[j + n] = sub as u64;
        if sub < 0 {
            // qhat was one too large: add the divisor back.
            let mut c = false;
            for i in 0..n {
                let (s, c1) = u[j + i].overflowing_add(v[i]);
                let (s, c2) = s.overflowing_add(c as u64);
                u[j + i] = s;
                c = c1 | c2;
            }
            u[j + n] = u[j + n].wrapping_add(c as u64);
        }
    }
    // Remainder sits in u[..n], denormalize.
    let mut rem = [0u64; LIMBS];
    for i in 0..n {
        rem[i] = if shift == 0 {
            u[i]
        } else {
            (u[i] >> shift) | if i + 1 < 2 * LIMBS + 1 { u[i + 1] << (64 - shift) } else { 0 }
        };
    }
    U256(rem)
}
