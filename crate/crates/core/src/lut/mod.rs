//! CAM-backed 4-bit lookup tables for activation functions.

mod activation;
mod fp4;
mod posit;
mod table;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::cell_array::ArrayError;

pub use activation::{relu_vector, softmax, softmax_with};
pub use fp4::{fp4_decode, fp4_encode};
pub use posit::{posit4_decode, posit4_encode, NAR};
pub use table::{LutEntry, LutFunction, LutTable, KEY_BITS, LUT_ROWS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LutError {
    #[error("no key row matches code {0:#06b}")]
    NoMatch(u8),
    #[error("code {code:#06b} matches several key rows {rows:?}")]
    MultipleMatch { code: u8, rows: Vec<usize> },
    #[error("table needs rows {base}..{needed} and 4 columns, array is {rows}x{cols}")]
    CapacityExceeded {
        base: usize,
        needed: usize,
        rows: usize,
        cols: usize,
    },
    #[error("NaR has no encoding for this input")]
    NaRInput,
    #[error("code {0} is not a 4-bit pattern")]
    InvalidCode(u8),
    #[error("empty input")]
    EmptyInput,
    #[error("value {value} outside the {mode} range")]
    OperandOutOfRange { value: i128, mode: String },
    #[error("invalid codec: {0}")]
    InvalidCodec(String),
    #[error(transparent)]
    Array(#[from] ArrayError),
}

/// Number format of a 4-bit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Codec {
    #[default]
    Fp4,
    Posit4 { es: u32 },
}

impl Codec {
    pub fn decode(self, code: u8) -> f64 {
        match self {
            Codec::Fp4 => fp4_decode(code),
            Codec::Posit4 { es } => posit4_decode(code, es),
        }
    }

    pub fn encode(self, x: f64) -> Result<u8, LutError> {
        match self {
            Codec::Fp4 => Ok(fp4_encode(x)),
            Codec::Posit4 { es } => posit4_encode(x, es),
        }
    }

    pub fn is_nar(self, code: u8) -> bool {
        matches!(self, Codec::Posit4 { .. }) && code & 0xF == NAR
    }

    /// Distinct finite values, ascending.
    pub fn values(self) -> Vec<f64> {
        let mut v: Vec<f64> = (0u8..16)
            .map(|c| self.decode(c))
            .filter(|x| x.is_finite())
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Gap between the representable values bracketing `y` (the larger
    /// neighbouring gap when `y` is representable). Infinite outside the
    /// representable range.
    pub fn local_spacing(self, y: f64) -> f64 {
        let v = self.values();
        let (lo, hi) = (v[0], v[v.len() - 1]);
        if !(lo..=hi).contains(&y) {
            return f64::INFINITY;
        }
        let i = v.partition_point(|&x| x < y);
        if v[i] == y {
            let below = if i > 0 { y - v[i - 1] } else { 0.0 };
            let above = v.get(i + 1).map_or(0.0, |&x| x - y);
            below.max(above)
        } else {
            v[i] - v[i - 1]
        }
    }
}

impl fmt::Display for Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Codec::Fp4 => f.write_str("fp4"),
            Codec::Posit4 { es } => write!(f, "posit4:{es}"),
        }
    }
}

impl FromStr for Codec {
    type Err = LutError;

    /// `fp4`, `posit4` (es = 1) or `posit4:<es>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fp4" => Ok(Codec::Fp4),
            "posit4" => Ok(Codec::Posit4 { es: 1 }),
            other => {
                let es = other
                    .strip_prefix("posit4:")
                    .and_then(|e| e.parse().ok())
                    .ok_or_else(|| {
                        LutError::InvalidCodec(format!(
                            "expected fp4, posit4 or posit4:<es>, got {other:?}"
                        ))
                    })?;
                posit::check_es(es)?;
                Ok(Codec::Posit4 { es })
            }
        }
    }
}

/// Nearest candidate to `x`; ties go to the even code.
fn nearest_code(x: f64, candidates: impl Iterator<Item = (u8, f64)>) -> u8 {
    let candidates: Vec<(u8, f64)> = candidates.collect();
    // Saturate explicitly: far outside the range |v − x| rounds to the same
    // float for every candidate.
    let lo = candidates.iter().min_by(|a, b| a.1.total_cmp(&b.1));
    let hi = candidates.iter().max_by(|a, b| a.1.total_cmp(&b.1));
    if let (Some(&(lc, lv)), Some(&(hc, hv))) = (lo, hi) {
        if x >= hv {
            return hc;
        }
        if x <= lv {
            return lc;
        }
    }
    let mut best: Option<(u8, f64)> = None;
    for (code, value) in candidates {
        let d = (value - x).abs();
        best = match best {
            None => Some((code, d)),
            Some((bc, bd)) => {
                if d < bd || (d == bd && code & 1 == 0 && bc & 1 == 1) {
                    Some((code, d))
                } else {
                    Some((bc, bd))
                }
            }
        };
    }
    best.map_or(0, |(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codec_parsing() {
        assert_eq!("fp4".parse::<Codec>().unwrap(), Codec::Fp4);
        assert_eq!("posit4".parse::<Codec>().unwrap(), Codec::Posit4 { es: 1 });
        assert_eq!("posit4:2".parse::<Codec>().unwrap(), Codec::Posit4 { es: 2 });
        assert!("posit4:5".parse::<Codec>().is_err());
        assert!("fp8".parse::<Codec>().is_err());
        assert_eq!(Codec::Posit4 { es: 0 }.to_string(), "posit4:0");
    }

    #[test]
    fn spacing() {
        let fp = Codec::Fp4;
        assert_eq!(fp.local_spacing(0.7), 0.5);
        assert_eq!(fp.local_spacing(5.0), 2.0);
        assert_eq!(fp.local_spacing(4.0), 2.0);
        assert!(fp.local_spacing(7.0).is_infinite());
        assert_eq!(Codec::Posit4 { es: 1 }.local_spacing(0.03), 1.0 / 16.0);
        assert_eq!(fp.values().len(), 15);
    }
}
