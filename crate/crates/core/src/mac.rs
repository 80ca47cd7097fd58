//! Variable-precision SIMD multiply-accumulate.
//!
//! Weights are lane-packed into the cell array: lane `k` owns an n×n block
//! (blocks tiled row-major), and every row of the block holds the same n-bit
//! weight. Input bit `i` of lane `k` is streamed on the search lines of row
//! `i` of that block, so one pass produces all n² partial products per lane
//! from the cells' XNOR outputs gated by the input bit (`a ∧ XNOR(a, w) =
//! a ∧ w`). Partial product (i, j) lands in column i+j of a compressor tree.
//!
//! In two's complement the 2(n−1) mixed-sign partial products carry negative
//! weight. They are reduced in a second tree and subtracted in the final
//! adder, so zero operands contribute only zero bits to either tree. (The
//! complement-plus-correction form fills the columns with ones, which is
//! exactly the input pattern an approximate compressor gets wrong.) Results
//! fit in W = 2n + ceil(log2 m) signed bits. Bipolar binary (n = 1) encodes
//! −1/+1 as 0/1 and reduces the raw XNOR bits.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cell_array::{ArrayError, CellArray, DEFAULT_COLS, DEFAULT_ROWS};
use crate::compressor::{bits_to_biguint, reduce_columns, CompressorSpec};
use crate::exec::{self, Strategy};

pub const SUPPORTED_BITS: [u32; 7] = [1, 2, 4, 8, 16, 32, 64];
/// Bit-level operations per full pass (multiply + accumulate per cell).
pub const BIT_OPS_PER_PASS: u64 = 4096 * 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MacError {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("operand {value} not representable in {mode}")]
    OperandOutOfRange { value: i128, mode: PrecisionMode },
    #[error("{count} elements exceed the {lanes}-lane capacity")]
    CapacityExceeded { count: usize, lanes: usize },
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("invalid precision mode: {0}")]
    InvalidMode(String),
    #[error(transparent)]
    Array(#[from] ArrayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signedness {
    Unsigned,
    TwosComplement,
    BipolarBinary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PrecisionMode {
    bits: u32,
    signedness: Signedness,
}

impl PrecisionMode {
    pub fn new(bits: u32, signedness: Signedness) -> Result<Self, MacError> {
        if !SUPPORTED_BITS.contains(&bits) {
            return Err(MacError::InvalidMode(format!(
                "{bits}-bit operands (supported: 1, 2, 4, 8, 16, 32, 64)"
            )));
        }
        if signedness == Signedness::BipolarBinary && bits != 1 {
            return Err(MacError::InvalidMode(format!(
                "bipolar binary needs 1-bit operands, got {bits}"
            )));
        }
        Ok(Self { bits, signedness })
    }

    pub fn unsigned(bits: u32) -> Result<Self, MacError> {
        Self::new(bits, Signedness::Unsigned)
    }

    pub fn signed(bits: u32) -> Result<Self, MacError> {
        Self::new(bits, Signedness::TwosComplement)
    }

    /// The default 1-bit mode: XNOR / bipolar.
    pub fn binary() -> Self {
        Self {
            bits: 1,
            signedness: Signedness::BipolarBinary,
        }
    }

    /// Default mode per width: bipolar at n = 1, two's complement otherwise.
    pub fn all() -> Vec<Self> {
        SUPPORTED_BITS
            .iter()
            .map(|&b| {
                if b == 1 {
                    Self::binary()
                } else {
                    Self::signed(b).expect("supported width")
                }
            })
            .collect()
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn signedness(self) -> Signedness {
        self.signedness
    }

    /// Lane count on the default 64×64 macro.
    pub fn lanes(self) -> usize {
        self.lanes_for(DEFAULT_ROWS, DEFAULT_COLS)
    }

    pub fn lanes_for(self, rows: usize, cols: usize) -> usize {
        let n = self.bits as usize;
        if n > rows || n > cols {
            0
        } else {
            (rows / n) * (cols / n)
        }
    }

    /// Cycles for one pass: n² partial-product cycles, ceil(log4(n²))
    /// reduction levels and one final-add cycle.
    pub fn cycles_per_pass(self) -> u64 {
        let n = u64::from(self.bits);
        n * n + u64::from(self.bits.trailing_zeros()) + 1
    }

    /// Inclusive operand range.
    pub fn range(self) -> (i128, i128) {
        let n = self.bits;
        match self.signedness {
            Signedness::Unsigned => (0, (1i128 << n) - 1),
            Signedness::TwosComplement => (-(1i128 << (n - 1)), (1i128 << (n - 1)) - 1),
            Signedness::BipolarBinary => (-1, 1),
        }
    }

    pub fn check(self, value: i128) -> Result<(), MacError> {
        let (lo, hi) = self.range();
        let ok = match self.signedness {
            Signedness::BipolarBinary => value == -1 || value == 1,
            _ => (lo..=hi).contains(&value),
        };
        if ok {
            Ok(())
        } else {
            Err(MacError::OperandOutOfRange { value, mode: self })
        }
    }

    /// Accumulator width for `elements` products: 2n + ceil(log2 elements).
    pub fn result_width(self, elements: usize) -> u32 {
        2 * self.bits + (elements.max(1) as u64).next_power_of_two().trailing_zeros()
    }

    fn bit(self, value: i128, i: u32) -> bool {
        match self.signedness {
            Signedness::BipolarBinary => value == 1,
            _ => (value as u128 >> i) & 1 == 1,
        }
    }

    fn decode_bits(self, bits: &[bool]) -> i128 {
        match self.signedness {
            Signedness::BipolarBinary => {
                if bits[0] {
                    1
                } else {
                    -1
                }
            }
            _ => {
                let mut v: u128 = 0;
                for (i, &b) in bits.iter().enumerate() {
                    if b {
                        v |= 1 << i;
                    }
                }
                let n = self.bits;
                if self.signedness == Signedness::TwosComplement && bits[n as usize - 1] && n < 128 {
                    (v as i128) - (1i128 << n)
                } else {
                    v as i128
                }
            }
        }
    }
}

impl fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.signedness {
            Signedness::Unsigned => write!(f, "u{}", self.bits),
            Signedness::TwosComplement => write!(f, "i{}", self.bits),
            Signedness::BipolarBinary => f.write_str("b1"),
        }
    }
}

impl FromStr for PrecisionMode {
    type Err = MacError;

    /// `b1` (bipolar), `u<n>` / `uint<n>`, `i<n>` / `int<n>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        if s == "b1" || s == "bin" || s == "bipolar" {
            return Ok(Self::binary());
        }
        let (sign, digits) = if let Some(d) = s.strip_prefix("uint").or_else(|| s.strip_prefix('u')) {
            (Signedness::Unsigned, d)
        } else if let Some(d) = s.strip_prefix("int").or_else(|| s.strip_prefix('i')) {
            (Signedness::TwosComplement, d)
        } else {
            return Err(MacError::InvalidMode(format!("unrecognised mode {s:?}")));
        };
        let bits = digits
            .parse()
            .map_err(|_| MacError::InvalidMode(format!("unrecognised mode {s:?}")))?;
        Self::new(bits, sign)
    }
}

impl TryFrom<String> for PrecisionMode {
    type Error = MacError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PrecisionMode> for String {
    fn from(m: PrecisionMode) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacResult {
    pub values: Vec<BigInt>,
    /// Accumulator width in bits.
    pub width: u32,
    pub cycle_count: u64,
    pub bit_op_count: u64,
}

impl MacResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lane,value,cycle_count,bit_op_count\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{v},{},{}\n", self.cycle_count, self.bit_op_count));
        }
        out
    }
}

/// Host-side wide accumulator for results spanning several passes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Accumulator {
    mode: PrecisionMode,
    values: Vec<BigInt>,
    elements: usize,
    cycle_count: u64,
    bit_op_count: u64,
}

impl Accumulator {
    pub fn new(mode: PrecisionMode) -> Self {
        Self {
            mode,
            values: Vec::new(),
            elements: 0,
            cycle_count: 0,
            bit_op_count: 0,
        }
    }

    /// Adds a pass result covering `elements` products per lane.
    pub fn add(&mut self, r: &MacResult, elements: usize) -> Result<(), MacError> {
        if self.values.is_empty() {
            self.values = vec![BigInt::zero(); r.values.len()];
        }
        if r.values.len() != self.values.len() {
            return Err(MacError::ModeMismatch(format!(
                "accumulating {} lanes into {}",
                r.values.len(),
                self.values.len()
            )));
        }
        for (acc, v) in self.values.iter_mut().zip(&r.values) {
            *acc += v;
        }
        self.elements += elements;
        self.cycle_count += r.cycle_count;
        self.bit_op_count += r.bit_op_count;
        Ok(())
    }

    pub fn finish(self) -> MacResult {
        MacResult {
            width: self.mode.result_width(self.elements),
            values: self.values,
            cycle_count: self.cycle_count,
            bit_op_count: self.bit_op_count,
        }
    }
}

/// Bipolar dot product `2·popcount(XNOR) − N` over at most 4096 bits.
pub fn xac(inputs: &[bool], weights: &[bool], spec: &CompressorSpec) -> Result<i64, MacError> {
    if inputs.len() != weights.len() {
        return Err(MacError::LengthMismatch {
            expected: weights.len(),
            found: inputs.len(),
        });
    }
    let capacity = DEFAULT_ROWS * DEFAULT_COLS;
    if inputs.len() > capacity {
        return Err(MacError::CapacityExceeded {
            count: inputs.len(),
            lanes: capacity,
        });
    }
    let mut array = CellArray::default();
    let mut products = Vec::with_capacity(inputs.len());
    for (r, (w, a)) in weights
        .chunks(DEFAULT_COLS)
        .zip(inputs.chunks(DEFAULT_COLS))
        .enumerate()
    {
        let mut row = vec![false; DEFAULT_COLS];
        row[..w.len()].copy_from_slice(w);
        array.write_row(r, &row)?;
        let mut operand = vec![false; DEFAULT_COLS];
        operand[..a.len()].copy_from_slice(a);
        let xnor = array.pim_multiply_row(r, &operand)?;
        products.extend_from_slice(&xnor[..a.len()]);
    }
    let count = bits_to_biguint(&reduce_columns(spec, vec![products]));
    let count = i64::try_from(count).unwrap_or(i64::MAX);
    Ok(2 * count - inputs.len() as i64)
}

struct Layout {
    n: usize,
    blocks_per_row: usize,
    lanes: usize,
}

impl Layout {
    fn new(mode: PrecisionMode, rows: usize, cols: usize) -> Result<Self, MacError> {
        let lanes = mode.lanes_for(rows, cols);
        if lanes == 0 {
            return Err(MacError::ModeMismatch(format!(
                "{rows}x{cols} array cannot hold a {}-bit lane",
                mode.bits
            )));
        }
        let n = mode.bits as usize;
        Ok(Self {
            n,
            blocks_per_row: cols / n,
            lanes,
        })
    }

    /// (first row, first column) of lane `k`'s block.
    fn origin(&self, k: usize) -> (usize, usize) {
        (
            (k / self.blocks_per_row) * self.n,
            (k % self.blocks_per_row) * self.n,
        )
    }
}

/// Packs up to `lanes` weights into a default-size array.
pub fn lane_pack(weights: &[i128], mode: PrecisionMode) -> Result<CellArray, MacError> {
    lane_pack_with(weights, mode, DEFAULT_ROWS, DEFAULT_COLS)
}

pub fn lane_pack_with(
    weights: &[i128],
    mode: PrecisionMode,
    rows: usize,
    cols: usize,
) -> Result<CellArray, MacError> {
    let mut array = CellArray::new(rows, cols)?;
    let layout = Layout::new(mode, rows, cols)?;
    if weights.len() > layout.lanes {
        return Err(MacError::CapacityExceeded {
            count: weights.len(),
            lanes: layout.lanes,
        });
    }
    for &w in weights {
        mode.check(w)?;
    }
    let n = layout.n;
    let block_rows = weights.len().div_ceil(layout.blocks_per_row);
    for br in 0..block_rows {
        let mut row = vec![false; cols];
        for bc in 0..layout.blocks_per_row {
            let k = br * layout.blocks_per_row + bc;
            if let Some(&w) = weights.get(k) {
                for j in 0..n {
                    row[bc * n + j] = mode.bit(w, j as u32);
                }
            }
        }
        for i in 0..n {
            array.write_row(br * n + i, &row)?;
        }
    }
    Ok(array)
}

/// Reads back the first `count` lane weights (row 0 of each block).
pub fn lane_unpack(array: &CellArray, mode: PrecisionMode, count: usize) -> Result<Vec<i128>, MacError> {
    let layout = Layout::new(mode, array.rows(), array.cols())?;
    if count > layout.lanes {
        return Err(MacError::CapacityExceeded {
            count,
            lanes: layout.lanes,
        });
    }
    let n = layout.n;
    let mut out = Vec::with_capacity(count);
    let mut cached: Option<(usize, Vec<bool>)> = None;
    for k in 0..count {
        let (r, c) = layout.origin(k);
        if cached.as_ref().map(|(cr, _)| *cr) != Some(r) {
            cached = Some((r, array.read_row(r)?));
        }
        let row = &cached.as_ref().expect("row cached").1;
        out.push(mode.decode_bits(&row[c..c + n]));
    }
    Ok(out)
}

/// Streams one input per lane through the packed array and returns each
/// lane's n² partial products in (input bit i, weight bit j) order.
fn partial_products(
    array: &CellArray,
    layout: &Layout,
    mode: PrecisionMode,
    inputs: &[i128],
) -> Result<Vec<Vec<bool>>, MacError> {
    let n = layout.n;
    let bipolar = mode.signedness == Signedness::BipolarBinary;
    let mut pps: Vec<Vec<bool>> = vec![vec![false; n * n]; inputs.len()];
    let block_rows = inputs.len().div_ceil(layout.blocks_per_row);
    let mut operand = vec![false; array.cols()];
    for br in 0..block_rows {
        let first = br * layout.blocks_per_row;
        let last = (first + layout.blocks_per_row).min(inputs.len());
        for i in 0..n {
            operand.iter_mut().for_each(|b| *b = false);
            for (slot, &x) in inputs[first..last].iter().enumerate() {
                let a = mode.bit(x, i as u32);
                operand[slot * n..(slot + 1) * n].iter_mut().for_each(|b| *b = a);
            }
            let xnor = array.pim_multiply_row(br * n + i, &operand)?;
            for k in first..last {
                let c = (k - first) * n;
                let a = mode.bit(inputs[k], i as u32);
                for j in 0..n {
                    pps[k][i * n + j] = if bipolar { xnor[c + j] } else { a && xnor[c + j] };
                }
            }
        }
    }
    Ok(pps)
}

/// Positive- and negative-weight partial-product columns of one tree.
struct Columns {
    pos: Vec<Vec<bool>>,
    neg: Vec<Vec<bool>>,
}

impl Columns {
    fn new(width: u32) -> Self {
        Self {
            pos: vec![Vec::new(); width as usize],
            neg: vec![Vec::new(); width as usize],
        }
    }

    /// Places one element's partial products. In two's complement the
    /// mixed-sign products (exactly one operand bit is an MSB) carry weight
    /// −2^(i+j).
    fn push(&mut self, pps: &[bool], mode: PrecisionMode) {
        let n = mode.bits as usize;
        if mode.signedness == Signedness::BipolarBinary {
            self.pos[0].push(pps[0]);
            return;
        }
        let signed = mode.signedness == Signedness::TwosComplement;
        for i in 0..n {
            for j in 0..n {
                let p = pps[i * n + j];
                if signed && ((i == n - 1) != (j == n - 1)) {
                    self.neg[i + j].push(p);
                } else {
                    self.pos[i + j].push(p);
                }
            }
        }
    }

    /// Reduces both trees and combines them per the mode.
    fn finish(self, spec: &CompressorSpec, mode: PrecisionMode, m: usize) -> BigInt {
        let reduce = |cols: Vec<Vec<bool>>| {
            if cols.iter().all(Vec::is_empty) {
                BigInt::zero()
            } else {
                BigInt::from_biguint(Sign::Plus, bits_to_biguint(&reduce_columns(spec, cols)))
            }
        };
        let pos = reduce(self.pos);
        match mode.signedness {
            Signedness::Unsigned => pos,
            Signedness::TwosComplement => pos - reduce(self.neg),
            Signedness::BipolarBinary => 2 * pos - BigInt::from(m),
        }
    }
}

fn check_all(values: &[i128], mode: PrecisionMode) -> Result<(), MacError> {
    values.iter().try_for_each(|&v| mode.check(v))
}

/// Dot product of at most `lanes` elements in one pass, all partial products
/// reduced by a single tree.
pub fn mac(
    inputs: &[i128],
    weights: &[i128],
    mode: PrecisionMode,
    spec: &CompressorSpec,
) -> Result<MacResult, MacError> {
    if inputs.len() != weights.len() {
        return Err(MacError::LengthMismatch {
            expected: weights.len(),
            found: inputs.len(),
        });
    }
    check_all(inputs, mode)?;
    let array = lane_pack(weights, mode)?;
    let layout = Layout::new(mode, array.rows(), array.cols())?;
    let m = inputs.len();
    let width = mode.result_width(m);
    let pps = partial_products(&array, &layout, mode, inputs)?;
    let mut cols = Columns::new(width);
    for p in &pps {
        cols.push(p, mode);
    }
    let n2 = u64::from(mode.bits) * u64::from(mode.bits);
    Ok(MacResult {
        values: vec![cols.finish(spec, mode, m)],
        width,
        cycle_count: mode.cycles_per_pass(),
        bit_op_count: 2 * n2 * m as u64,
    })
}

/// Dot product of any length: `lanes`-sized chunks run as separate passes
/// and are summed host-side.
pub fn dot(
    inputs: &[i128],
    weights: &[i128],
    mode: PrecisionMode,
    spec: &CompressorSpec,
) -> Result<MacResult, MacError> {
    if inputs.len() != weights.len() {
        return Err(MacError::LengthMismatch {
            expected: weights.len(),
            found: inputs.len(),
        });
    }
    let lanes = mode.lanes();
    if inputs.len() <= lanes {
        return mac(inputs, weights, mode, spec);
    }
    let mut acc = Accumulator::new(mode);
    for (a, w) in inputs.chunks(lanes).zip(weights.chunks(lanes)) {
        acc.add(&mac(a, w, mode, spec)?, a.len())?;
    }
    Ok(acc.finish())
}

/// One or more passes over a lane-packed weight array. `inputs[t][k]` is
/// the value broadcast to lane `k` in pass `t`; every row must have the same
/// length (the active lane count). Lane `k` returns Σ_t inputs[t][k]·w_k.
pub fn simd_pass(
    inputs: &[Vec<i128>],
    weight_array: &CellArray,
    mode: PrecisionMode,
    spec: &CompressorSpec,
) -> Result<MacResult, MacError> {
    simd_pass_with(Strategy::default(), inputs, weight_array, mode, spec)
}

pub fn simd_pass_with(
    strategy: Strategy,
    inputs: &[Vec<i128>],
    weight_array: &CellArray,
    mode: PrecisionMode,
    spec: &CompressorSpec,
) -> Result<MacResult, MacError> {
    let layout = Layout::new(mode, weight_array.rows(), weight_array.cols())?;
    let active = inputs.first().map_or(0, Vec::len);
    if active > layout.lanes {
        return Err(MacError::ModeMismatch(format!(
            "{active} inputs per pass but {mode} has {} lanes",
            layout.lanes
        )));
    }
    if let Some(bad) = inputs.iter().find(|row| row.len() != active) {
        return Err(MacError::ModeMismatch(format!(
            "pass rows have {} and {} inputs",
            active,
            bad.len()
        )));
    }
    for row in inputs {
        check_all(row, mode)?;
    }
    let steps = inputs.len();
    let width = mode.result_width(steps);
    let per_step: Vec<Vec<Vec<bool>>> = exec::map_slice(strategy, inputs, |row| {
        partial_products(weight_array, &layout, mode, row)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let values = exec::map_indexed(strategy, active, |k| {
        let mut cols = Columns::new(width);
        for step in &per_step {
            cols.push(&step[k], mode);
        }
        cols.finish(spec, mode, steps)
    });
    Ok(MacResult {
        values,
        width,
        cycle_count: steps as u64 * mode.cycles_per_pass(),
        bit_op_count: steps as u64 * BIT_OPS_PER_PASS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_operands(rng: &mut ChaCha8Rng, mode: PrecisionMode, len: usize) -> Vec<i128> {
        let (lo, hi) = mode.range();
        (0..len)
            .map(|_| {
                if mode.signedness() == Signedness::BipolarBinary {
                    if rng.gen() { 1 } else { -1 }
                } else {
                    rng.gen_range(lo..=hi)
                }
            })
            .collect()
    }

    fn oracle(a: &[i128], w: &[i128]) -> BigInt {
        a.iter()
            .zip(w)
            .map(|(&x, &y)| BigInt::from(x) * BigInt::from(y))
            .sum()
    }

    #[test]
    fn lane_law() {
        let lanes: Vec<usize> = PrecisionMode::all().iter().map(|m| m.lanes()).collect();
        assert_eq!(lanes, vec![4096, 1024, 256, 64, 16, 4, 1]);
        for m in PrecisionMode::all() {
            assert_eq!(m.lanes() * (m.bits() as usize).pow(2), 4096);
        }
    }

    #[test]
    fn mode_parsing_and_validation() {
        assert_eq!("i8".parse::<PrecisionMode>().unwrap(), PrecisionMode::signed(8).unwrap());
        assert_eq!("uint4".parse::<PrecisionMode>().unwrap(), PrecisionMode::unsigned(4).unwrap());
        assert_eq!("b1".parse::<PrecisionMode>().unwrap(), PrecisionMode::binary());
        assert!("i3".parse::<PrecisionMode>().is_err());
        assert!(PrecisionMode::new(4, Signedness::BipolarBinary).is_err());
    }

    #[test]
    fn cycle_formula() {
        let c: Vec<u64> = PrecisionMode::all().iter().map(|m| m.cycles_per_pass()).collect();
        assert_eq!(c, vec![2, 6, 19, 68, 261, 1030, 4103]);
    }

    #[test]
    fn small_examples() {
        let exact = CompressorSpec::exact();
        let r = mac(&[5], &[3], PrecisionMode::unsigned(4).unwrap(), &exact).unwrap();
        assert_eq!(r.values, vec![BigInt::from(15)]);
        let r = mac(&[-8], &[7], PrecisionMode::signed(8).unwrap(), &exact).unwrap();
        assert_eq!(r.values, vec![BigInt::from(-56)]);
        let r = mac(&[-128], &[-128], PrecisionMode::signed(8).unwrap(), &exact).unwrap();
        assert_eq!(r.values, vec![BigInt::from(16384)]);
        let r = mac(&[-1], &[-1], PrecisionMode::signed(1).unwrap(), &exact).unwrap();
        assert_eq!(r.values, vec![BigInt::from(1)]);
    }

    #[test]
    fn exact_mac_matches_oracle_every_mode() {
        let exact = CompressorSpec::exact();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut modes = PrecisionMode::all();
        modes.extend(SUPPORTED_BITS.iter().map(|&b| PrecisionMode::unsigned(b).unwrap()));
        modes.push(PrecisionMode::signed(1).unwrap());
        for mode in modes {
            for _ in 0..20 {
                let len = rng.gen_range(0..=mode.lanes().min(64));
                let a = random_operands(&mut rng, mode, len);
                let w = random_operands(&mut rng, mode, len);
                let r = mac(&a, &w, mode, &exact).unwrap();
                assert_eq!(r.values[0], oracle(&a, &w), "mode {mode}");
            }
        }
    }

    #[test]
    fn extreme_operands() {
        let exact = CompressorSpec::exact();
        for mode in [PrecisionMode::unsigned(64).unwrap(), PrecisionMode::signed(64).unwrap()] {
            let (lo, hi) = mode.range();
            for (a, w) in [(hi, hi), (lo, lo), (lo, hi)] {
                let r = mac(&[a], &[w], mode, &exact).unwrap();
                assert_eq!(r.values[0], oracle(&[a], &[w]));
            }
        }
        let m = PrecisionMode::signed(8).unwrap();
        let a = vec![-128; 64];
        let r = mac(&a, &a, m, &exact).unwrap();
        assert_eq!(r.values[0], BigInt::from(64 * 16384));
        assert_eq!(r.width, 22);
    }

    #[test]
    fn operand_and_capacity_errors() {
        let exact = CompressorSpec::exact();
        let m = PrecisionMode::unsigned(4).unwrap();
        assert!(matches!(
            mac(&[16], &[1], m, &exact),
            Err(MacError::OperandOutOfRange { value: 16, .. })
        ));
        assert!(matches!(
            mac(&[1, 2], &[1], m, &exact),
            Err(MacError::LengthMismatch { .. })
        ));
        let big = vec![1i128; 257];
        assert!(matches!(
            mac(&big, &big, m, &exact),
            Err(MacError::CapacityExceeded { count: 257, lanes: 256 })
        ));
        let r = dot(&big, &big, m, &exact).unwrap();
        assert_eq!(r.values[0], BigInt::from(257));
        assert_eq!(r.cycle_count, 2 * m.cycles_per_pass());
    }

    #[test]
    fn xac_identities() {
        let exact = CompressorSpec::exact();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 64, 100, 4096] {
            let v: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let nv: Vec<bool> = v.iter().map(|b| !b).collect();
            assert_eq!(xac(&v, &v, &exact).unwrap(), n as i64);
            assert_eq!(xac(&v, &nv, &exact).unwrap(), -(n as i64));
            let w: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let expected: i64 = v
                .iter()
                .zip(&w)
                .map(|(&a, &b)| if a == b { 1 } else { -1 })
                .sum();
            assert_eq!(xac(&v, &w, &exact).unwrap(), expected);
        }
        assert!(xac(&[true; 4097], &[true; 4097], &exact).is_err());
    }

    #[test]
    fn pack_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for mode in PrecisionMode::all() {
            let w = random_operands(&mut rng, mode, mode.lanes());
            let array = lane_pack(&w, mode).unwrap();
            assert_eq!(lane_unpack(&array, mode, w.len()).unwrap(), w);
        }
        let m = PrecisionMode::unsigned(4).unwrap();
        let array = lane_pack(&[0], m).unwrap();
        assert!(array.storage().iter().flatten().all(|&b| !b));
        let i32m = PrecisionMode::signed(32).unwrap();
        let array = lane_pack(&[-1; 4], i32m).unwrap();
        assert!(array.storage().iter().flatten().all(|&b| b));
    }

    #[test]
    fn simd_pass_per_lane_products() {
        let exact = CompressorSpec::exact();
        let bin = PrecisionMode::binary();
        let array = lane_pack(&vec![1; 4096], bin).unwrap();
        let r = simd_pass(&[vec![1; 4096]], &array, bin, &exact).unwrap();
        assert!(r.values.iter().all(|v| *v == BigInt::from(1)));
        assert_eq!(r.bit_op_count, 8192);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = PrecisionMode::signed(8).unwrap();
        let w = random_operands(&mut rng, m, 64);
        let array = lane_pack(&w, m).unwrap();
        let steps: Vec<Vec<i128>> = (0..3).map(|_| random_operands(&mut rng, m, 64)).collect();
        let seq = simd_pass_with(Strategy::Sequential, &steps, &array, m, &exact).unwrap();
        let par = simd_pass_with(Strategy::Parallel, &steps, &array, m, &exact).unwrap();
        assert_eq!(seq, par);
        for k in 0..64 {
            let expected: i128 = steps.iter().map(|s| s[k] * w[k]).sum();
            assert_eq!(seq.values[k], BigInt::from(expected));
        }
        assert_eq!(seq.cycle_count, 3 * 68);
        assert!(matches!(
            simd_pass(&[vec![0; 65]], &array, m, &exact),
            Err(MacError::ModeMismatch(_))
        ));
    }

    #[test]
    fn lane_isolation() {
        let exact = CompressorSpec::exact();
        let m = PrecisionMode::unsigned(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = random_operands(&mut rng, m, 256);
        let array = lane_pack(&w, m).unwrap();
        let a = random_operands(&mut rng, m, 256);
        let base = simd_pass(std::slice::from_ref(&a), &array, m, &exact).unwrap();
        let mut b = a.clone();
        b[17] = (b[17] + 1) % 16;
        let moved = simd_pass(&[b], &array, m, &exact).unwrap();
        for k in 0..256 {
            assert_eq!(base.values[k] == moved.values[k], k != 17 || w[17] == 0);
        }
    }
}
