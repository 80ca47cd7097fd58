//! 4-bit posits with configurable exponent size. 0000 is zero, 1000 is NaR.

use super::{nearest_code, LutError};

pub const NAR: u8 = 0b1000;

pub fn check_es(es: u32) -> Result<(), LutError> {
    if es > 2 {
        return Err(LutError::InvalidCodec(format!("posit es {es} outside 0..=2")));
    }
    Ok(())
}

/// Standard decode (sign, regime, exponent, fraction). NaR decodes to NaN.
pub fn posit4_decode(code: u8, es: u32) -> f64 {
    let code = code & 0xF;
    if code == 0 {
        return 0.0;
    }
    if code == NAR {
        return f64::NAN;
    }
    if code & 0x8 != 0 {
        return -posit4_decode(code.wrapping_neg() & 0xF, es);
    }
    let bits: Vec<bool> = (0..3).rev().map(|i| (code >> i) & 1 == 1).collect();
    let lead = bits[0];
    let run = bits.iter().take_while(|&&b| b == lead).count();
    let k = if lead { run as i32 - 1 } else { -(run as i32) };
    let rest = bits.get(run + 1..).unwrap_or(&[]);
    let mut e = 0u32;
    for i in 0..es as usize {
        e = (e << 1) | u32::from(rest.get(i).copied().unwrap_or(false));
    }
    let frac_bits = rest.get(es as usize..).unwrap_or(&[]);
    let mut frac = 1.0;
    for (i, &b) in frac_bits.iter().enumerate() {
        if b {
            frac += 0.5f64.powi(i as i32 + 1);
        }
    }
    let useed_log2 = 1i32 << es;
    frac * 2f64.powi(k * useed_log2 + e as i32)
}

/// Nearest finite code in value space, ties to the even code, saturating at
/// ±maxpos. Small magnitudes may round to zero.
pub fn posit4_encode(x: f64, es: u32) -> Result<u8, LutError> {
    check_es(es)?;
    if !x.is_finite() {
        return Err(LutError::NaRInput);
    }
    Ok(nearest_code(
        x,
        (0u8..16).filter(|&c| c != NAR).map(|c| (c, posit4_decode(c, es))),
    ))
}
