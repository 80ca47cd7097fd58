//! 4:2 compressor primitives, reduction trees and error characterisation.

mod metrics;
mod spec;
mod tree;

use thiserror::Error;

pub use metrics::{
    error_metrics, error_metrics_with, ErrorMetrics, ErrorTarget, MetricsRecord, Policy, MAX_EXHAUSTIVE_BITS,
};
pub use spec::{
    entry_index, entry_inputs, CompressorSpec, Outputs, CONVENTIONAL_TRANSISTORS,
    PROPOSED_TRANSISTORS, REFERENCE_40T_TRANSISTORS,
};
pub use tree::{bits_to_biguint, bits_to_u128, reduce_columns, Layer, ReductionTree};

/// Largest input count accepted by [`popcount`].
pub const MAX_POPCOUNT_WIDTH: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompressorError {
    #[error("incomplete compressor table: missing entries {missing:?}")]
    IncompleteSpec { missing: Vec<usize> },
    #[error("duplicate truth-table entry at line {line}")]
    DuplicateEntry { line: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("width exceeded: {value} does not fit in {width} bits")]
    WidthExceeded { value: u128, width: u32 },
    #[error("exhaustive enumeration of 2^{bits} inputs exceeds the 2^24 bound")]
    SpaceTooLarge { bits: u32 },
    #[error("invalid metric target: {0}")]
    InvalidTarget(String),
}

/// Counts set bits with a single-column compressor tree.
pub fn popcount(spec: &CompressorSpec, bits: &[bool]) -> Result<u32, CompressorError> {
    if bits.len() > MAX_POPCOUNT_WIDTH {
        return Err(CompressorError::WidthExceeded {
            value: bits.len() as u128,
            width: MAX_POPCOUNT_WIDTH as u32,
        });
    }
    let out = reduce_columns(spec, vec![bits.to_vec()]);
    Ok(bits_to_u128(&out) as u32)
}

/// Output width of an accumulation: `width + ceil(log2(count))`.
pub fn accumulate_width(width: u32, count: usize) -> u32 {
    width + (count.max(1) as u64).next_power_of_two().trailing_zeros()
}

/// Sums `width`-bit unsigned addends through the compressor tree. The
/// result is taken modulo 2^[`accumulate_width`], which the exact sum never
/// exceeds.
pub fn accumulate(spec: &CompressorSpec, addends: &[u64], width: u32) -> Result<u128, CompressorError> {
    if width == 0 || width > 64 {
        return Err(CompressorError::InvalidTarget(format!(
            "addend width {width} outside 1..=64"
        )));
    }
    if let Some(&bad) = addends
        .iter()
        .find(|&&a| width < 64 && a >> width != 0)
    {
        return Err(CompressorError::WidthExceeded {
            value: u128::from(bad),
            width,
        });
    }
    let cols: Vec<Vec<bool>> = (0..width)
        .map(|b| addends.iter().map(|a| (a >> b) & 1 == 1).collect())
        .collect();
    let bits = reduce_columns(spec, cols);
    let out_width = accumulate_width(width, addends.len());
    let value = bits_to_u128(&bits);
    Ok(if out_width >= 128 {
        value
    } else {
        value & ((1u128 << out_width) - 1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn popcount_examples() {
        let exact = CompressorSpec::exact();
        assert_eq!(popcount(&exact, &[true; 64]).unwrap(), 64);
        assert_eq!(popcount(&exact, &[false; 64]).unwrap(), 0);
        assert_eq!(
            popcount(&CompressorSpec::approximate(), &[false; 64]).unwrap(),
            0
        );
        assert!(matches!(
            popcount(&exact, &[true; 65]),
            Err(CompressorError::WidthExceeded { .. })
        ));
    }

    #[test]
    fn popcount_matches_builtin() {
        let exact = CompressorSpec::exact();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..2000 {
            let w: u64 = rng.gen();
            let bits: Vec<bool> = (0..64).map(|i| (w >> i) & 1 == 1).collect();
            assert_eq!(popcount(&exact, &bits).unwrap(), w.count_ones());
        }
    }

    #[test]
    fn accumulate_examples() {
        let exact = CompressorSpec::exact();
        assert_eq!(accumulate(&exact, &[5, 3, 2, 7], 8).unwrap(), 17);
        assert_eq!(accumulate(&exact, &[0, 0, 0, 0], 8).unwrap(), 0);
        assert!(matches!(
            accumulate(&exact, &[256], 8),
            Err(CompressorError::WidthExceeded { .. })
        ));
        assert_eq!(accumulate_width(8, 16), 12);
        assert_eq!(accumulate_width(8, 1), 8);
        assert_eq!(accumulate_width(8, 5), 11);
    }

    #[test]
    fn accumulate_matches_integer_sum() {
        let exact = CompressorSpec::exact();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let addends: Vec<u64> = (0..16).map(|_| rng.gen_range(0..256)).collect();
            let sum: u128 = addends.iter().map(|&a| u128::from(a)).sum();
            assert_eq!(accumulate(&exact, &addends, 8).unwrap(), sum);
        }
        let wide: Vec<u64> = vec![u64::MAX; 3];
        assert_eq!(
            accumulate(&exact, &wide, 64).unwrap(),
            3 * u128::from(u64::MAX)
        );
    }
}
