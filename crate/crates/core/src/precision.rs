//! Fractional parts of large products and powers.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::error::{Error, Result};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl DoubleDouble {
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    /// Exact product of two doubles.
    pub fn product(a: f64, b: f64) -> Self {
        let hi = a * b;
        Self { hi, lo: a.mul_add(b, -hi) }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        Self::new(s, e + self.lo + other.lo)
    }

    /// `self * k` for an integer `k` that fits in 53 bits.
    pub fn scale(self, k: i64) -> Self {
        let k = k as f64;
        let p = Self::product(self.hi, k);
        Self::new(p.hi, p.lo + self.lo * k)
    }

    /// Representative of `self` modulo 1 in `[0, 1)`.
    pub fn fract(self) -> Self {
        // Exact; a small negative `lo` is kept as is rather than wrapped.
        let a = self.hi - self.hi.floor();
        let b = if self.lo.abs() < 1.0 { self.lo } else { self.lo - self.lo.floor() };
        let r = Self::new(a, b);
        if r.hi < 0.0 || (r.hi == 0.0 && r.lo < 0.0) {
            r.add(Self { hi: 1.0, lo: 0.0 })
        } else if r.hi > 1.0 || (r.hi == 1.0 && r.lo >= 0.0) {
            r.add(Self { hi: -1.0, lo: 0.0 })
        } else {
            r
        }
    }
}

/// Guard bits kept below the binary point of a power tower.
pub const TOWER_GUARD_BITS: usize = 128;

/// Working precision for `g^b`: the integer-part bits plus the guard.
pub fn tower_precision(g: f64, b: f64) -> usize {
    (b * g.log2()).max(0.0).ceil() as usize + TOWER_GUARD_BITS
}

/// `{g^b}` to about `2^-128`, with `g` taken as the exact binary value of the
/// double. Returns the fractional part and the working precision in bits.
pub fn tower_fract(g: f64, b: f64, consts: &mut Consts) -> Result<(DoubleDouble, usize)> {
    if !(g > 1.0 && g.is_finite()) {
        return Err(Error::param(format!("power-tower base must exceed 1, got {g}")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::param(format!("power-tower exponent must be finite and non-negative, got {b}")));
    }
    let p = tower_precision(g, b).div_ceil(64) * 64;
    // Correct rounding can loop forever on exact results such as 4^0.5.
    let rm = RoundingMode::None;
    let base = BigFloat::from_f64(g, p);
    let power = if b.fract() == 0.0 && b < 9.0e15 {
        base.powi(b as usize, p, rm)
    } else {
        base.pow(&BigFloat::from_f64(b, p), p, rm, consts)
    };
    if power.is_nan() || power.is_inf() {
        return Err(Error::param(format!("power tower {g}^{b} exceeds the arbitrary-precision range")));
    }
    Ok((to_double_double(&power.fract()), p))
}

/// Leading 128 bits of a value in `[0, 1)`.
fn to_double_double(v: &BigFloat) -> DoubleDouble {
    if v.is_zero() {
        return DoubleDouble::default();
    }
    let (words, _, sign, exp, _) = v.as_raw_parts().expect("finite value");
    let top = words[words.len() - 1] as u128;
    let next = if words.len() > 1 { words[words.len() - 2] as u128 } else { 0 };
    let m = (top << 64) | next;
    // value = m * 2^(exp - 128)
    let hi_bits = m & !((1u128 << 75) - 1);
    let hi = hi_bits as f64;
    let rest = m - hi_bits;
    let scale = 2f64.powi(exp - 128);
    let r = DoubleDouble::new(hi * scale, rest as f64 * scale);
    if sign == Sign::Neg {
        DoubleDouble::new(-r.hi, -r.lo)
    } else {
        r
    }
}
