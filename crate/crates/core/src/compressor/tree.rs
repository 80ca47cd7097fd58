//! Wallace-style multi-column reduction with 4:2 compressors.
//!
//! Each layer walks the columns from least significant upwards. A column
//! with at least four bits feeds them four at a time into compressors whose
//! `cin` is taken from the previous column's `cout`s (in order, 0 when
//! exhausted). Unused incoming `cout`s drop into the column. A leftover group
//! of three bits goes through an exact full adder; one or two leftover bits
//! pass through. Layers repeat until every column holds at most two bits,
//! then an exact ripple adder produces the result.
//!
//! The wiring depends only on column heights, so planning a tree and
//! evaluating it run the same code.

use num_bigint::BigUint;
use num_traits::Zero;

use super::CompressorSpec;

/// Per-column placement counts for one layer.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Layer {
    pub compressors: Vec<usize>,
    pub full_adders: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionTree {
    pub input_heights: Vec<usize>,
    pub layers: Vec<Layer>,
    /// Width of the final carry-propagate adder.
    pub cpa_width: usize,
}

fn full_add(a: bool, b: bool, c: bool) -> (bool, bool) {
    (a ^ b ^ c, (a && b) || (a && c) || (b && c))
}

fn reduce_layer(
    spec: &CompressorSpec,
    cols: &[Vec<bool>],
    layer: Option<&mut Layer>,
) -> Vec<Vec<bool>> {
    let n = cols.len();
    let mut next: Vec<Vec<bool>> = vec![Vec::new(); n + 1];
    let mut counts = Layer {
        compressors: vec![0; n],
        full_adders: vec![0; n],
    };
    let mut prev_couts: Vec<bool> = Vec::new();
    for (i, col) in cols.iter().enumerate() {
        let mut k = 0;
        let mut used = 0;
        let mut couts = Vec::with_capacity(col.len() / 4);
        while col.len() - k >= 4 {
            let cin = prev_couts.get(used).copied().unwrap_or(false);
            let o = spec.compress42(col[k], col[k + 1], col[k + 2], col[k + 3], cin);
            next[i].push(o.sum);
            next[i + 1].push(o.carry);
            couts.push(o.cout);
            k += 4;
            used += 1;
        }
        counts.compressors[i] = couts.len();
        if used < prev_couts.len() {
            next[i].extend_from_slice(&prev_couts[used..]);
        }
        let rest = &col[k..];
        if rest.len() == 3 {
            let (s, c) = full_add(rest[0], rest[1], rest[2]);
            next[i].push(s);
            next[i + 1].push(c);
            counts.full_adders[i] = 1;
        } else {
            next[i].extend_from_slice(rest);
        }
        prev_couts = couts;
    }
    next[n].extend_from_slice(&prev_couts);
    while next.len() > 1 && next.last().is_some_and(Vec::is_empty) {
        next.pop();
    }
    if let Some(layer) = layer {
        *layer = counts;
    }
    next
}

fn ripple(cols: &[Vec<bool>]) -> Vec<bool> {
    let mut out = Vec::with_capacity(cols.len() + 1);
    let mut carry = false;
    for col in cols {
        let a = col.first().copied().unwrap_or(false);
        let b = col.get(1).copied().unwrap_or(false);
        let (s, c) = full_add(a, b, carry);
        out.push(s);
        carry = c;
    }
    out.push(carry);
    out
}

fn needs_reduction(cols: &[Vec<bool>]) -> bool {
    cols.iter().any(|c| c.len() > 2)
}

/// Reduces weighted bit columns (column `i` has weight 2^i) to a single
/// binary number, least significant bit first.
pub fn reduce_columns(spec: &CompressorSpec, mut cols: Vec<Vec<bool>>) -> Vec<bool> {
    if cols.is_empty() {
        return vec![false];
    }
    while needs_reduction(&cols) {
        cols = reduce_layer(spec, &cols, None);
    }
    ripple(&cols)
}

pub fn bits_to_biguint(bits: &[bool]) -> BigUint {
    let mut v = BigUint::zero();
    for (i, &b) in bits.iter().enumerate() {
        if b {
            v.set_bit(i as u64, true);
        }
    }
    v
}

pub fn bits_to_u128(bits: &[bool]) -> u128 {
    bits.iter()
        .enumerate()
        .take(128)
        .filter(|(_, &b)| b)
        .fold(0u128, |acc, (i, _)| acc | (1u128 << i))
}

impl ReductionTree {
    pub fn plan(heights: &[usize]) -> Self {
        let spec = CompressorSpec::exact();
        let mut cols: Vec<Vec<bool>> = heights.iter().map(|&h| vec![false; h]).collect();
        let mut layers = Vec::new();
        if cols.is_empty() {
            cols.push(Vec::new());
        }
        while needs_reduction(&cols) {
            let mut layer = Layer::default();
            cols = reduce_layer(&spec, &cols, Some(&mut layer));
            layers.push(layer);
        }
        Self {
            input_heights: heights.to_vec(),
            layers,
            cpa_width: cols.len(),
        }
    }

    /// Tree that sums `count` single-bit inputs.
    pub fn popcount(count: usize) -> Self {
        Self::plan(&[count])
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn compressor_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.compressors.iter().sum::<usize>())
            .sum()
    }

    pub fn full_adder_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.full_adders.iter().sum::<usize>())
            .sum()
    }

    /// Sum of the compressors' transistor counts. Full adders and the final
    /// adder are not included.
    pub fn transistor_count(&self, spec: &CompressorSpec) -> u64 {
        self.compressor_count() as u64 * u64::from(spec.transistor_count)
    }

    /// Worst-case |approximate − exact| for this tree. Every other cell is
    /// exact, so each compressor in column c contributes at most
    /// `max_entry_error · 2^c`.
    pub fn error_bound(&self, spec: &CompressorSpec) -> BigUint {
        let e = BigUint::from(spec.max_entry_error());
        let mut bound = BigUint::zero();
        for layer in &self.layers {
            for (c, &n) in layer.compressors.iter().enumerate() {
                if n > 0 {
                    bound += (&e * BigUint::from(n)) << c;
                }
            }
        }
        bound
    }

    pub fn evaluate(&self, spec: &CompressorSpec, cols: Vec<Vec<bool>>) -> Vec<bool> {
        debug_assert_eq!(
            cols.iter().map(Vec::len).collect::<Vec<_>>(),
            self.input_heights
        );
        reduce_columns(spec, cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_reduction_sums_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = CompressorSpec::exact();
        for _ in 0..500 {
            let ncols = rng.gen_range(1..12);
            let cols: Vec<Vec<bool>> = (0..ncols)
                .map(|_| {
                    let h = rng.gen_range(0..20);
                    (0..h).map(|_| rng.gen()).collect()
                })
                .collect();
            let expected: u128 = cols
                .iter()
                .enumerate()
                .map(|(i, c)| (c.iter().filter(|&&b| b).count() as u128) << i)
                .sum();
            assert_eq!(bits_to_u128(&reduce_columns(&spec, cols)), expected);
        }
    }

    #[test]
    fn popcount_depth_is_logarithmic() {
        for n in [4usize, 8, 16, 64, 256, 4096] {
            let t = ReductionTree::popcount(n);
            let log = (n as f64).log2().ceil() as usize;
            assert!(t.depth() <= 2 * log, "n={n} depth={}", t.depth());
        }
    }

    #[test]
    fn eight_bit_popcount_uses_three_compressors() {
        let t = ReductionTree::popcount(8);
        assert_eq!(t.compressor_count(), 3);
        assert_eq!(t.transistor_count(&CompressorSpec::approximate()), 66);
    }

    #[test]
    fn single_compressor_cost() {
        let t = ReductionTree::popcount(4);
        assert_eq!(t.compressor_count(), 1);
        assert_eq!(t.transistor_count(&CompressorSpec::approximate()), 22);
        assert_eq!(t.transistor_count(&CompressorSpec::exact()), 56);
    }

    #[test]
    fn approximate_error_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = CompressorSpec::approximate();
        let heights = [16usize; 8];
        let tree = ReductionTree::plan(&heights);
        let bound = tree.error_bound(&spec);
        for _ in 0..300 {
            let cols: Vec<Vec<bool>> = heights
                .iter()
                .map(|&h| (0..h).map(|_| rng.gen()).collect())
                .collect();
            let exact = bits_to_biguint(&reduce_columns(&CompressorSpec::exact(), cols.clone()));
            let approx = bits_to_biguint(&tree.evaluate(&spec, cols));
            let diff = if exact > approx { &exact - &approx } else { &approx - &exact };
            assert!(diff <= bound);
        }
    }
}
