use astro_float::Consts;
use num_bigint::BigUint;
use udlab::precision::{tower_fract, DoubleDouble};

/// `{1.5^n} = (3^n mod 2^n) / 2^n`, returned as its leading 128 bits.
fn exact_top_bits(n: u32) -> u128 {
    let r = BigUint::from(3u32).pow(n) % (BigUint::from(1u32) << n);
    let scaled: BigUint = (r << 128u32) >> n;
    let digits = scaled.to_u64_digits();
    let lo = digits.first().copied().unwrap_or(0) as u128;
    let hi = digits.get(1).copied().unwrap_or(0) as u128;
    (hi << 64) | lo
}

fn error_against(f: DoubleDouble, exact: u128) -> f64 {
    let hi_scaled = (f.hi * 2f64.powi(128)) as u128;
    let diff = exact as i128 - hi_scaled as i128;
    (diff as f64 * 2f64.powi(-128) - f.lo).abs()
}

#[test]
fn three_halves_power_fractions_match_integer_reference() {
    let mut cc = Consts::new().unwrap();
    let mut worst = 0.0f64;
    for n in 1..=200u32 {
        let (f, bits) = tower_fract(1.5, n as f64, &mut cc).unwrap();
        assert!(bits >= 128);
        worst = worst.max(error_against(f, exact_top_bits(n)));
    }
    assert!(worst <= 1e-20, "worst error {worst:e}");
}

#[test]
fn double_double_products_keep_the_fraction() {
    // A plain f64 product rounds 3 * 2^50 + 0.75 to an integer.
    assert_eq!(((2f64.powi(52) + 1.0) * 0.75).fract(), 0.0);
    let big = 2f64.powi(52) + 1.0;
    let f = DoubleDouble::product(big, 0.75).fract();
    assert_eq!(f.to_f64(), 0.75);
}
