//! 16-entry direct-mapped LUT stored in a cell array.
//!
//! Rows `base..base+16` hold the keys (all 16 codes, MSB in column 0) and
//! row `base+16+r` holds the result code for key row `r`. A lookup is a BCAM
//! search of the key bits over the key rows followed by a row read of the
//! paired value row.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use super::{Codec, LutError};
use crate::cell_array::CellArray;

pub const LUT_ROWS: usize = 16;
pub const KEY_BITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LutFunction {
    Sigmoid,
    Tanh,
    SoftmaxExp,
}

impl LutFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            LutFunction::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            LutFunction::Tanh => x.tanh(),
            LutFunction::SoftmaxExp => x.exp(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LutFunction::Sigmoid => "sigmoid",
            LutFunction::Tanh => "tanh",
            LutFunction::SoftmaxExp => "softmax_exp",
        }
    }
}

impl fmt::Display for LutFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LutFunction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sigmoid" => Ok(LutFunction::Sigmoid),
            "tanh" => Ok(LutFunction::Tanh),
            "softmax_exp" | "exp" => Ok(LutFunction::SoftmaxExp),
            other => Err(format!("unknown function {other:?} (sigmoid, tanh, softmax_exp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LutEntry {
    pub key_code: u8,
    pub key_value: f64,
    pub value_code: u8,
    pub value_real: f64,
}

#[derive(Debug)]
pub struct LutTable {
    label: String,
    codec: Codec,
    array: CellArray,
    base: usize,
    search_bits: AtomicU64,
    lookups: AtomicU64,
}

fn code_bits(code: u8) -> [bool; KEY_BITS] {
    std::array::from_fn(|i| (code >> (KEY_BITS - 1 - i)) & 1 == 1)
}

fn bits_code(bits: &[bool]) -> u8 {
    bits.iter().take(KEY_BITS).fold(0, |acc, &b| (acc << 1) | u8::from(b))
}

impl LutTable {
    pub fn build(function: LutFunction, codec: Codec, array: CellArray) -> Result<Self, LutError> {
        Self::build_at(function, codec, array, 0)
    }

    pub fn build_at(
        function: LutFunction,
        codec: Codec,
        array: CellArray,
        base: usize,
    ) -> Result<Self, LutError> {
        Self::build_custom(function.label(), |x| function.eval(x), codec, array, base)
    }

    /// Builds a table for any host function. NaR keys map to NaR.
    pub fn build_custom(
        label: &str,
        f: impl Fn(f64) -> f64,
        codec: Codec,
        mut array: CellArray,
        base: usize,
    ) -> Result<Self, LutError> {
        let needed = base + 2 * LUT_ROWS;
        if array.rows() < needed || array.cols() < KEY_BITS {
            return Err(LutError::CapacityExceeded {
                base,
                needed,
                rows: array.rows(),
                cols: array.cols(),
            });
        }
        let cols = array.cols();
        for key in 0..LUT_ROWS as u8 {
            let value = if codec.is_nar(key) {
                key
            } else {
                codec.encode(f(codec.decode(key)))?
            };
            for (row, code) in [(base + key as usize, key), (base + LUT_ROWS + key as usize, value)] {
                let mut bits = array.read_row(row)?;
                bits[..KEY_BITS].copy_from_slice(&code_bits(code));
                debug_assert_eq!(bits.len(), cols);
                array.write_row(row, &bits)?;
            }
        }
        Ok(Self {
            label: label.to_string(),
            codec,
            array,
            base,
            search_bits: AtomicU64::new(0),
            lookups: AtomicU64::new(0),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn codec(&self) -> Codec {
        self.codec
    }

    pub fn array(&self) -> &CellArray {
        &self.array
    }

    /// Direct access to the backing storage, e.g. for fault injection.
    pub fn array_mut(&mut self) -> &mut CellArray {
        &mut self.array
    }

    pub fn lookup(&self, code: u8) -> Result<u8, LutError> {
        if code > 0xF {
            return Err(LutError::InvalidCode(code));
        }
        let mut key = vec![None; self.array.cols()];
        for (slot, bit) in key.iter_mut().zip(code_bits(code)) {
            *slot = Some(bit);
        }
        let matches = self.array.bcam_search_masked(&key)?;
        self.search_bits
            .fetch_add((LUT_ROWS * KEY_BITS) as u64, Ordering::Relaxed);
        self.lookups.fetch_add(1, Ordering::Relaxed);
        let rows: Vec<usize> = (0..LUT_ROWS)
            .filter(|&r| matches[self.base + r])
            .collect();
        match rows.as_slice() {
            [] => Err(LutError::NoMatch(code)),
            [r] => Ok(bits_code(&self.array.read_row(self.base + LUT_ROWS + r)?)),
            _ => Err(LutError::MultipleMatch { code, rows }),
        }
    }

    /// Decoded lookup.
    pub fn eval(&self, code: u8) -> Result<f64, LutError> {
        Ok(self.codec.decode(self.lookup(code)?))
    }

    /// Searched key bits so far (16 rows × 4 bits per lookup).
    pub fn search_bit_count(&self) -> u64 {
        self.search_bits.load(Ordering::Relaxed)
    }

    pub fn lookup_count(&self) -> u64 {
        self.lookups.load(Ordering::Relaxed)
    }

    /// Stored entries read back from the array.
    pub fn entries(&self) -> Result<Vec<LutEntry>, LutError> {
        (0..LUT_ROWS)
            .map(|r| {
                let key_code = bits_code(&self.array.read_row(self.base + r)?);
                let value_code = bits_code(&self.array.read_row(self.base + LUT_ROWS + r)?);
                Ok(LutEntry {
                    key_code,
                    key_value: self.codec.decode(key_code),
                    value_code,
                    value_real: self.codec.decode(value_code),
                })
            })
            .collect()
    }

    /// CSV dump: `key_code,key_value_real,value_code,value_real`.
    pub fn to_csv(&self) -> Result<String, LutError> {
        let mut out = String::from("key_code,key_value_real,value_code,value_real\n");
        for e in self.entries()? {
            out.push_str(&format!(
                "{:04b},{},{:04b},{}\n",
                e.key_code, e.key_value, e.value_code, e.value_real
            ));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_fp4_zero_key() {
        let t = LutTable::build(LutFunction::Sigmoid, Codec::Fp4, CellArray::default()).unwrap();
        assert_eq!(t.lookup(0).unwrap(), super::super::fp4_encode(0.5));
        assert_eq!(t.search_bit_count(), 64);
        assert_eq!(t.lookup_count(), 1);
    }

    #[test]
    fn tanh_posit_zero_and_nar() {
        let codec = Codec::Posit4 { es: 1 };
        let t = LutTable::build(LutFunction::Tanh, codec, CellArray::default()).unwrap();
        assert_eq!(t.lookup(0).unwrap(), 0);
        assert_eq!(t.lookup(super::super::NAR).unwrap(), super::super::NAR);
    }

    #[test]
    fn every_code_matches_direct_evaluation() {
        for codec in [Codec::Fp4, Codec::Posit4 { es: 0 }, Codec::Posit4 { es: 1 }] {
            for f in [LutFunction::Sigmoid, LutFunction::Tanh, LutFunction::SoftmaxExp] {
                let t = LutTable::build_at(f, codec, CellArray::default(), 8).unwrap();
                for c in 0u8..16 {
                    let expected = if codec.is_nar(c) {
                        c
                    } else {
                        codec.encode(f.eval(codec.decode(c))).unwrap()
                    };
                    assert_eq!(t.lookup(c).unwrap(), expected);
                }
            }
        }
    }

    #[test]
    fn corrupted_tables() {
        let mut t = LutTable::build(LutFunction::Sigmoid, Codec::Fp4, CellArray::default()).unwrap();
        let dup = t.array().read_row(3).unwrap();
        t.array_mut().write_row(5, &dup).unwrap();
        assert_eq!(
            t.lookup(3),
            Err(LutError::MultipleMatch { code: 3, rows: vec![3, 5] })
        );
        assert_eq!(t.lookup(5), Err(LutError::NoMatch(5)));
        assert_eq!(t.lookup(16), Err(LutError::InvalidCode(16)));
    }

    #[test]
    fn capacity_check() {
        let small = CellArray::new(16, 4).unwrap();
        assert!(matches!(
            LutTable::build(LutFunction::Tanh, Codec::Fp4, small),
            Err(LutError::CapacityExceeded { .. })
        ));
        assert!(LutTable::build_at(LutFunction::Tanh, Codec::Fp4, CellArray::default(), 40).is_err());
    }

    #[test]
    fn csv_dump() {
        let t = LutTable::build(LutFunction::Sigmoid, Codec::Fp4, CellArray::default()).unwrap();
        let csv = t.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 17);
        assert!(csv.lines().nth(1).unwrap().starts_with("0000,0,0001,0.5"));
    }
}
