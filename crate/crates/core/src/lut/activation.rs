use super::{Codec, LutError, LutFunction, LutTable};
use crate::cell_array::CellArray;
use crate::mac::{PrecisionMode, Signedness};

/// Elementwise max(0, v). Lanes whose sign bit is set are cleared, which is
/// a no-op for unsigned modes.
pub fn relu_vector(values: &[i128], mode: PrecisionMode) -> Result<Vec<i128>, LutError> {
    values
        .iter()
        .map(|&v| {
            mode.check(v).map_err(|_| LutError::OperandOutOfRange {
                value: v,
                mode: mode.to_string(),
            })?;
            let negative = match mode.signedness() {
                Signedness::Unsigned => false,
                Signedness::TwosComplement => (v as u128 >> (mode.bits() - 1)) & 1 == 1,
                Signedness::BipolarBinary => v < 0,
            };
            Ok(if negative { 0 } else { v })
        })
        .collect()
}

/// Softmax over codes using a freshly built `softmax_exp` table.
pub fn softmax(codes: &[u8], codec: Codec) -> Result<Vec<f64>, LutError> {
    let table = LutTable::build(LutFunction::SoftmaxExp, codec, CellArray::default())?;
    softmax_with(&table, codes)
}

/// The maximum is subtracted and each difference re-encoded in the table's
/// codec before the exp lookup; subtraction and normalisation are host-side.
pub fn softmax_with(table: &LutTable, codes: &[u8]) -> Result<Vec<f64>, LutError> {
    if codes.is_empty() {
        return Err(LutError::EmptyInput);
    }
    let codec = table.codec();
    let mut xs = Vec::with_capacity(codes.len());
    for &c in codes {
        if c > 0xF {
            return Err(LutError::InvalidCode(c));
        }
        if codec.is_nar(c) {
            return Err(LutError::NaRInput);
        }
        xs.push(codec.decode(c));
    }
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = xs
        .iter()
        .map(|&x| table.eval(codec.encode(x - max)?))
        .collect::<Result<Vec<f64>, LutError>>()?;
    let sum: f64 = exps.iter().sum();
    Ok(exps.iter().map(|e| e / sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_examples() {
        let m = PrecisionMode::signed(8).unwrap();
        assert_eq!(relu_vector(&[-3, 0, 5], m).unwrap(), vec![0, 0, 5]);
        assert_eq!(relu_vector(&[-1, -128], m).unwrap(), vec![0, 0]);
        assert!(matches!(
            relu_vector(&[200], m),
            Err(LutError::OperandOutOfRange { value: 200, .. })
        ));
        let u = PrecisionMode::unsigned(4).unwrap();
        assert_eq!(relu_vector(&[15, 0], u).unwrap(), vec![15, 0]);
    }

    #[test]
    fn softmax_examples() {
        for codec in [Codec::Fp4, Codec::Posit4 { es: 1 }] {
            assert_eq!(softmax(&[3], codec).unwrap(), vec![1.0]);
            assert_eq!(softmax(&[5, 5], codec).unwrap(), vec![0.5, 0.5]);
            assert_eq!(softmax(&[], codec), Err(LutError::EmptyInput));
        }
        assert_eq!(softmax(&[8], Codec::Posit4 { es: 1 }), Err(LutError::NaRInput));
    }
}
