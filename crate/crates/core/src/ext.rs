//! Floats with an unbounded binary exponent.
//!
//! Used for sequences such as `exp(exp(floor(log n)))` that leave the `f64`
//! range while their differences still matter.

use std::cmp::Ordering;
use std::fmt;

/// `mant * 2^exp2` with `|mant|` in `[1, 2)`, or exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtFloat {
    mant: f64,
    exp2: i64,
}

impl ExtFloat {
    pub const ZERO: ExtFloat = ExtFloat { mant: 0.0, exp2: 0 };

    /// Panics on non-finite input.
    pub fn from_f64(v: f64) -> Self {
        assert!(v.is_finite(), "ExtFloat::from_f64 on non-finite {v}");
        if v == 0.0 {
            return Self::ZERO;
        }
        let bits = v.abs().to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        let bit_len = 64 - m.leading_zeros() as i64;
        let mant = m as f64 / 2f64.powi(bit_len as i32 - 1);
        Self {
            mant: mant.copysign(v),
            exp2: e + bit_len - 1,
        }
    }

    /// `2^t` for a finite `t`.
    pub fn from_log2(t: f64) -> Self {
        let e = t.floor();
        Self {
            mant: (t - e).exp2(),
            exp2: e as i64,
        }
        .normalized()
    }

    pub fn mantissa(&self) -> f64 {
        self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp2
    }

    pub fn is_zero(&self) -> bool {
        self.mant == 0.0
    }

    /// Nearest `f64`, saturating to infinity or zero outside the range.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.exp2 > 1023 {
            return f64::INFINITY.copysign(self.mant);
        }
        if self.exp2 < -1080 {
            return 0.0f64.copysign(self.mant);
        }
        let e = self.exp2 as i32;
        // Two steps keep the scale factor itself representable.
        let half = e / 2;
        self.mant * 2f64.powi(half) * 2f64.powi(e - half)
    }

    /// Binary logarithm of the magnitude.
    pub fn log2_abs(&self) -> f64 {
        self.exp2 as f64 + self.mant.abs().log2()
    }

    pub fn abs(self) -> Self {
        Self {
            mant: self.mant.abs(),
            exp2: self.exp2,
        }
    }

    pub fn neg(self) -> Self {
        Self {
            mant: -self.mant,
            exp2: self.exp2,
        }
    }

    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.exp2 >= other.exp2 { (self, other) } else { (other, self) };
        let shift = big.exp2 - small.exp2;
        if shift > 64 {
            return big;
        }
        let sum = big.mant + small.mant * 2f64.powi(-(shift as i32));
        if sum == 0.0 {
            return Self::ZERO;
        }
        let r = Self::from_f64(sum);
        Self {
            mant: r.mant,
            exp2: r.exp2 + big.exp2,
        }
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(other.neg())
    }

    pub fn scale(self, w: f64) -> Self {
        if self.is_zero() || w == 0.0 {
            return Self::ZERO;
        }
        let w = Self::from_f64(w);
        let r = Self::from_f64(self.mant * w.mant);
        Self {
            mant: r.mant,
            exp2: r.exp2 + self.exp2 + w.exp2,
        }
    }

    /// `|self - other|` rounded to `f64`, saturating at infinity.
    pub fn abs_diff(self, other: Self) -> f64 {
        self.sub(other).abs().to_f64()
    }

    fn normalized(self) -> Self {
        if self.mant == 0.0 {
            return Self::ZERO;
        }
        let r = Self::from_f64(self.mant);
        Self {
            mant: r.mant,
            exp2: r.exp2 + self.exp2,
        }
    }
}

impl PartialOrd for ExtFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

impl ExtFloat {
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        let sign = |v: &Self| if v.mant > 0.0 { 1 } else if v.mant < 0.0 { -1 } else { 0 };
        let (sa, sb) = (sign(self), sign(other));
        if sa != sb || sa == 0 {
            return sa.cmp(&sb);
        }
        let by_magnitude = self.exp2.cmp(&other.exp2).then(self.mant.abs().total_cmp(&other.mant.abs()));
        if sa > 0 {
            by_magnitude
        } else {
            by_magnitude.reverse()
        }
    }
}

impl fmt::Display for ExtFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mant, self.exp2)
    }
}
