use super::MapError;

pub const QUANT_BITS: [u32; 6] = [1, 2, 4, 8, 16, 32];

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub values: Vec<i128>,
    pub scale: f64,
    /// Set when the input was all zeros (values are zero, scale 1).
    pub all_zero: bool,
}

impl Quantized {
    pub fn dequantize(&self) -> Vec<f64> {
        self.values.iter().map(|&q| q as f64 * self.scale).collect()
    }
}

/// Symmetric per-tensor quantization.
///
/// `scale = max|w| / (2^(bits−1) − 1)` and `q = round(w / scale)` (half away
/// from zero) clamped to ±(2^(bits−1) − 1). With `bits = 1` the codes are
/// the signs (±1, zero maps to +1) and the scale is mean |w|.
pub fn quantize(values: &[f64], bits: u32) -> Result<Quantized, MapError> {
    if !QUANT_BITS.contains(&bits) {
        return Err(MapError::InvalidBits(bits));
    }
    if values.is_empty() {
        return Err(MapError::EmptyTensor);
    }
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Ok(Quantized {
            values: vec![0; values.len()],
            scale: 1.0,
            all_zero: true,
        });
    }
    if bits == 1 {
        let scale = values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64;
        return Ok(Quantized {
            values: values.iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect(),
            scale,
            all_zero: false,
        });
    }
    let qmax = (1i128 << (bits - 1)) - 1;
    let scale = max / qmax as f64;
    Ok(Quantized {
        values: values
            .iter()
            .map(|&v| ((v / scale).round() as i128).clamp(-qmax, qmax))
            .collect(),
        scale,
        all_zero: false,
    })
}

/// Zeroes the `floor(fraction · len)` smallest-magnitude entries; ties go to
/// the lower index.
pub fn prune(values: &[f64], fraction: f64) -> Result<Vec<f64>, MapError> {
    let mut out = values.to_vec();
    let mut refs: Vec<&mut [f64]> = vec![out.as_mut_slice()];
    prune_global(&mut refs, fraction)?;
    Ok(out)
}

/// Global magnitude pruning across several tensors, ranked jointly in
/// concatenation order. Returns the number of entries zeroed.
pub fn prune_global(tensors: &mut [&mut [f64]], fraction: f64) -> Result<usize, MapError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(MapError::InvalidFraction(fraction));
    }
    let total: usize = tensors.iter().map(|t| t.len()).sum();
    let k = (fraction * total as f64).floor() as usize;
    let mut order: Vec<(f64, usize, usize)> = tensors
        .iter()
        .enumerate()
        .flat_map(|(t, v)| v.iter().enumerate().map(move |(i, x)| (x.abs(), t, i)))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for &(_, t, i) in order.iter().take(k) {
        tensors[t][i] = 0.0;
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        for bits in [2u32, 4, 8, 16, 32] {
            let q = quantize(&[-0.3, 0.0, 1.7], bits).unwrap();
            let qmax = (1i128 << (bits - 1)) - 1;
            assert_eq!(q.values[2], qmax);
            assert_eq!(q.values[1], 0);
        }
        let q = quantize(&[0.0, 0.0], 4).unwrap();
        assert!(q.all_zero);
        assert_eq!((q.values.clone(), q.scale), (vec![0, 0], 1.0));
        assert_eq!(quantize(&[-2.0, 0.0, 3.0], 1).unwrap().values, vec![-1, 1, 1]);
        assert!(quantize(&[1.0], 3).is_err());
        assert!(quantize(&[], 4).is_err());
    }

    #[test]
    fn prune_counts() {
        let w: Vec<f64> = (1..=10).map(f64::from).collect();
        let p = prune(&w, 0.4).unwrap();
        assert_eq!(p.iter().filter(|&&v| v == 0.0).count(), 4);
        assert_eq!(&p[..4], &[0.0; 4]);
        assert_eq!(prune(&w, 0.0).unwrap(), w);
        let tied = prune(&[1.0, -1.0, 1.0, 2.0], 0.5).unwrap();
        assert_eq!(tied, vec![0.0, 0.0, 1.0, 2.0]);
        assert!(prune(&w, 1.0).is_err());
    }
}
