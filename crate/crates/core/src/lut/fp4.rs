//! FP-4 E2M1: 1 sign, 2 exponent, 1 mantissa bit, bias 1, no inf/NaN.
//! Magnitudes: 0, 0.5, 1, 1.5, 2, 3, 4, 6.

use super::nearest_code;

pub fn fp4_decode(code: u8) -> f64 {
    let code = code & 0xF;
    let exp = (code >> 1) & 0b11;
    let man = f64::from(code & 1);
    let mag = if exp == 0 {
        man * 0.5
    } else {
        (1.0 + man * 0.5) * f64::from(1u32 << (exp - 1))
    };
    if code & 0x8 != 0 {
        -mag
    } else {
        mag
    }
}

/// Nearest code, ties to even mantissa, saturating at ±6. Values that round
/// to zero (and NaN) encode as +0.
pub fn fp4_encode(x: f64) -> u8 {
    if x.is_nan() {
        return 0;
    }
    let mag = nearest_code(x.abs(), (0u8..8).map(|c| (c, fp4_decode(c))));
    if mag == 0 || x >= 0.0 {
        mag
    } else {
        mag | 0x8
    }
}
