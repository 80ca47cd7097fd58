//! Bit-accurate model of the 9T XNOR bit-cell array.
//!
//! The array supports the six operation families of the cell: write, row
//! read, column (transpose) read, binary and ternary CAM search, and PIM
//! (two-row Boolean and per-cell XNOR multiply). Each operation drives a
//! [`ControlVector`] per cell, collects discharge paths on precharged lines,
//! and senses the lines that stayed high. Rows that are not selected always
//! see RWL low.

mod control;
mod io;

use std::fmt;

use thiserror::Error;

pub use control::{cell_effect, CellEffect, CellOp, ControlVector, Drive, LineState};
pub use io::{bits_to_string, Trace, TraceEntry};

pub const DEFAULT_ROWS: usize = 64;
pub const DEFAULT_COLS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArrayError {
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("PIM activation needs two distinct rows, got row {0} twice")]
    SameRow(usize),
    #[error("invalid geometry {rows}x{cols}: dimensions must be non-zero powers of two")]
    InvalidGeometry { rows: usize, cols: usize },
    #[error("ternary search needs an even column count, got {0}")]
    OddColumns(usize),
    #[error("invalid ternary encoding (stored pair 1,0) in rows {0:?}")]
    InvalidTernaryEncoding(Vec<usize>),
    #[error("control vector {0} (WWL WBL WBLB SL SLB RWL ML) is not a valid operation")]
    InvalidControl(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

/// Operation mode of one simulation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Idle,
    Write,
    ReadRow,
    ReadColumn,
    Bcam,
    Tcam,
    PimMultiply,
    PimBoolean,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Idle => "idle",
            Mode::Write => "write",
            Mode::ReadRow => "read_row",
            Mode::ReadColumn => "read_column",
            Mode::Bcam => "bcam",
            Mode::Tcam => "tcam",
            Mode::PimMultiply => "pim_multiply",
            Mode::PimBoolean => "pim_boolean",
        };
        f.write_str(s)
    }
}

/// One ternary search/storage symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ternary {
    Zero,
    One,
    X,
}

impl Ternary {
    /// Cell-pair code: (0,0) = 0, (1,1) = 1, (0,1) = X.
    pub fn pair(self) -> (bool, bool) {
        match self {
            Ternary::Zero => (false, false),
            Ternary::One => (true, true),
            Ternary::X => (false, true),
        }
    }

    pub fn from_pair(first: bool, second: bool) -> Option<Self> {
        match (first, second) {
            (false, false) => Some(Ternary::Zero),
            (true, true) => Some(Ternary::One),
            (false, true) => Some(Ternary::X),
            (true, false) => None,
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(Ternary::Zero),
            '1' => Some(Ternary::One),
            'x' | 'X' => Some(Ternary::X),
            _ => None,
        }
    }
}

/// Result of a ternary search. Rows holding an invalid (1,0) pair always
/// report a mismatch and are listed in `invalid_rows`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcamMatch {
    pub matches: Vec<bool>,
    pub invalid_rows: Vec<usize>,
}

impl TcamMatch {
    /// Turns the diagnostic into an error if any row was invalid.
    pub fn strict(self) -> Result<Vec<bool>, ArrayError> {
        if self.invalid_rows.is_empty() {
            Ok(self.matches)
        } else {
            Err(ArrayError::InvalidTernaryEncoding(self.invalid_rows))
        }
    }
}

/// Per-column output of a two-row PIM activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BooleanOut {
    pub and: bool,
    pub nor: bool,
    pub xnor: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellArray {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Default for CellArray {
    fn default() -> Self {
        Self::new(DEFAULT_ROWS, DEFAULT_COLS).expect("default geometry is valid")
    }
}

impl CellArray {
    /// All-zero array. Both dimensions must be powers of two.
    pub fn new(rows: usize, cols: usize) -> Result<Self, ArrayError> {
        if !rows.is_power_of_two() || !cols.is_power_of_two() {
            return Err(ArrayError::InvalidGeometry { rows, cols });
        }
        Ok(Self {
            rows,
            cols,
            bits: vec![false; rows * cols],
        })
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self, ArrayError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut array = Self::new(rows.len(), cols)?;
        for (r, row) in rows.iter().enumerate() {
            array.write_row(r, row)?;
        }
        Ok(array)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Raw storage access, bypassing the control lines. Used by tests and
    /// file I/O.
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn storage(&self) -> Vec<Vec<bool>> {
        self.bits.chunks(self.cols).map(<[bool]>::to_vec).collect()
    }

    fn check_row(&self, row: usize) -> Result<(), ArrayError> {
        if row >= self.rows {
            return Err(ArrayError::IndexOutOfRange {
                index: row,
                bound: self.rows,
            });
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<(), ArrayError> {
        if len != self.cols {
            return Err(ArrayError::LengthMismatch {
                expected: self.cols,
                found: len,
            });
        }
        Ok(())
    }

    fn row_slice(&self, row: usize) -> &[bool] {
        &self.bits[row * self.cols..(row + 1) * self.cols]
    }

    /// Drives WWL on `row` with WBL/WBLB set from `bits`.
    pub fn write_row(&mut self, row: usize, bits: &[bool]) -> Result<(), ArrayError> {
        self.check_row(row)?;
        self.check_len(bits.len())?;
        let cols = self.cols;
        for (c, &bit) in bits.iter().enumerate() {
            if let CellOp::Write(v) = ControlVector::write(bit).classify()? {
                self.bits[row * cols + c] = v;
            }
        }
        Ok(())
    }

    /// Activates RWL on the given rows with RBL/RBLB precharged and returns
    /// the per-column (RBL, RBLB) line levels.
    fn activate_rows(&self, rows: &[usize]) -> Vec<(LineState, LineState)> {
        let cv = ControlVector::row_read();
        let mut lines = vec![(LineState::High, LineState::High); self.cols];
        for &r in rows {
            for (c, &stored) in self.row_slice(r).iter().enumerate() {
                let e = cell_effect(stored, &cv);
                let (rbl, rblb) = lines[c];
                lines[c] = (rbl.pull_down(e.rbl), rblb.pull_down(e.rblb));
            }
        }
        lines
    }

    /// Differential row read: RBLB stays high for a stored 1.
    pub fn read_row(&self, row: usize) -> Result<Vec<bool>, ArrayError> {
        self.check_row(row)?;
        Ok(self
            .activate_rows(&[row])
            .into_iter()
            .map(|(rbl, rblb)| rblb.is_high() && !rbl.is_high())
            .collect())
    }

    /// Per-row ML levels after driving one control vector per column.
    fn match_lines(&self, drives: &[ControlVector]) -> Vec<LineState> {
        (0..self.rows)
            .map(|r| {
                self.row_slice(r)
                    .iter()
                    .zip(drives)
                    .fold(LineState::High, |ml, (&stored, cv)| {
                        ml.pull_down(cell_effect(stored, cv).ml)
                    })
            })
            .collect()
    }

    /// Column-wise read through the match lines: the selected column gets
    /// RBL high / RBLB low, every other column is held with both lines high.
    pub fn read_column(&self, col: usize) -> Result<Vec<bool>, ArrayError> {
        if col >= self.cols {
            return Err(ArrayError::IndexOutOfRange {
                index: col,
                bound: self.cols,
            });
        }
        let drives: Vec<ControlVector> = (0..self.cols)
            .map(|c| {
                if c == col {
                    ControlVector::column_read()
                } else {
                    ControlVector::masked()
                }
            })
            .collect();
        Ok(self
            .match_lines(&drives)
            .into_iter()
            .map(LineState::is_high)
            .collect())
    }

    /// Transpose (cols × rows) assembled from one column read per column.
    pub fn transpose_read(&self) -> Vec<Vec<bool>> {
        (0..self.cols)
            .map(|c| self.read_column(c).expect("column index in range"))
            .collect()
    }

    /// Binary CAM search over every row. `match[r]` is true iff row `r`
    /// equals `key` bit for bit.
    pub fn bcam_search(&self, key: &[bool]) -> Result<Vec<bool>, ArrayError> {
        self.check_len(key.len())?;
        let drives: Vec<ControlVector> = key.iter().map(|&k| ControlVector::search(k)).collect();
        Ok(self
            .match_lines(&drives)
            .into_iter()
            .map(LineState::is_high)
            .collect())
    }

    /// Binary CAM search where `None` columns are excluded from the compare.
    pub fn bcam_search_masked(&self, key: &[Option<bool>]) -> Result<Vec<bool>, ArrayError> {
        self.check_len(key.len())?;
        let drives: Vec<ControlVector> = key
            .iter()
            .map(|k| k.map_or_else(ControlVector::masked, ControlVector::search))
            .collect();
        Ok(self
            .match_lines(&drives)
            .into_iter()
            .map(LineState::is_high)
            .collect())
    }

    /// Ternary search using cell pairs (2i, 2i+1). The first cell's RBL acts
    /// as SL and the second cell's RBLB as SLB; the other two lines stay high.
    /// A key symbol `X` drives nothing and matches any valid stored code.
    pub fn tcam_search(&self, key: &[Ternary]) -> Result<TcamMatch, ArrayError> {
        if !self.cols.is_multiple_of(2) {
            return Err(ArrayError::OddColumns(self.cols));
        }
        if key.len() * 2 != self.cols {
            return Err(ArrayError::LengthMismatch {
                expected: self.cols / 2,
                found: key.len(),
            });
        }
        let mut drives = Vec::with_capacity(self.cols);
        for &k in key {
            match k {
                Ternary::X => {
                    drives.push(ControlVector::masked());
                    drives.push(ControlVector::masked());
                }
                Ternary::Zero | Ternary::One => {
                    let bit = k == Ternary::One;
                    drives.push(ControlVector::search_sl_only(bit));
                    drives.push(ControlVector::search_slb_only(bit));
                }
            }
        }
        let lines = self.match_lines(&drives);
        let mut invalid_rows = Vec::new();
        let matches = lines
            .into_iter()
            .enumerate()
            .map(|(r, ml)| {
                let row = self.row_slice(r);
                let invalid = row.chunks(2).any(|p| p[0] && !p[1]);
                if invalid {
                    invalid_rows.push(r);
                    false
                } else {
                    ml.is_high()
                }
            })
            .collect();
        Ok(TcamMatch {
            matches,
            invalid_rows,
        })
    }

    /// Two-row activation. RBL survives iff neither cell stores 1 (NOR),
    /// RBLB survives iff neither stores 0 (AND); XNOR is their OR.
    pub fn pim_boolean(&self, row_a: usize, row_b: usize) -> Result<Vec<BooleanOut>, ArrayError> {
        self.check_row(row_a)?;
        self.check_row(row_b)?;
        if row_a == row_b {
            return Err(ArrayError::SameRow(row_a));
        }
        Ok(self
            .activate_rows(&[row_a, row_b])
            .into_iter()
            .map(|(rbl, rblb)| {
                let nor = rbl.is_high();
                let and = rblb.is_high();
                BooleanOut {
                    and,
                    nor,
                    xnor: and || nor,
                }
            })
            .collect())
    }

    /// Per-cell XNOR of a stored row with an operand streamed on SL/SLB.
    /// Each cell senses its own ML segment: high on match, discharged on
    /// mismatch.
    pub fn pim_multiply_row(&self, row: usize, operand: &[bool]) -> Result<Vec<bool>, ArrayError> {
        self.check_row(row)?;
        self.check_len(operand.len())?;
        Ok(self
            .row_slice(row)
            .iter()
            .zip(operand)
            .map(|(&stored, &op)| {
                LineState::High
                    .pull_down(cell_effect(stored, &ControlVector::search(op)).ml)
                    .is_high()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_array(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CellArray {
        let data: Vec<Vec<bool>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.gen()).collect())
            .collect();
        CellArray::from_rows(&data).unwrap()
    }

    fn pattern(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn write_then_read() {
        let mut a = CellArray::default();
        let bits: Vec<bool> = (0..64).map(|i| i % 2 == 0).collect();
        a.write_row(0, &bits).unwrap();
        assert_eq!(a.read_row(0).unwrap(), bits);
    }

    #[test]
    fn write_row_only_touches_its_row() {
        let mut a = CellArray::default();
        for r in 0..64 {
            a.write_row(r, &[true; 64]).unwrap();
        }
        a.write_row(0, &[false; 64]).unwrap();
        assert_eq!(a.read_row(0).unwrap(), vec![false; 64]);
        for r in 1..64 {
            assert_eq!(a.read_row(r).unwrap(), vec![true; 64]);
        }
    }

    #[test]
    fn read_patterns() {
        let mut a = CellArray::new(4, 4).unwrap();
        a.write_row(1, &pattern("1111")).unwrap();
        a.write_row(2, &pattern("0101")).unwrap();
        assert_eq!(a.read_row(1).unwrap(), pattern("1111"));
        assert_eq!(a.read_row(2).unwrap(), pattern("0101"));
    }

    #[test]
    fn random_write_sequence_keeps_last_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut a = CellArray::default();
        let mut expected = vec![vec![false; 64]; 64];
        for _ in 0..1000 {
            let r = rng.gen_range(0..64);
            let bits: Vec<bool> = (0..64).map(|_| rng.gen()).collect();
            a.write_row(r, &bits).unwrap();
            expected[r] = bits;
        }
        for (r, row) in expected.iter().enumerate() {
            assert_eq!(&a.read_row(r).unwrap(), row);
        }
    }

    #[test]
    fn errors_on_bad_indices() {
        let mut a = CellArray::new(4, 4).unwrap();
        assert_eq!(
            a.write_row(4, &[false; 4]),
            Err(ArrayError::IndexOutOfRange { index: 4, bound: 4 })
        );
        assert_eq!(
            a.write_row(0, &[false; 3]),
            Err(ArrayError::LengthMismatch {
                expected: 4,
                found: 3
            })
        );
        assert!(matches!(
            a.read_row(9),
            Err(ArrayError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            a.read_column(4),
            Err(ArrayError::IndexOutOfRange { .. })
        ));
        assert_eq!(a.pim_boolean(1, 1), Err(ArrayError::SameRow(1)));
        assert!(CellArray::new(6, 4).is_err());
        assert!(CellArray::new(0, 4).is_err());
    }

    #[test]
    fn identity_columns_are_unit_vectors() {
        let rows: Vec<Vec<bool>> = (0..64).map(|r| (0..64).map(|c| r == c).collect()).collect();
        let a = CellArray::from_rows(&rows).unwrap();
        for k in 0..64 {
            let col = a.read_column(k).unwrap();
            assert!(col.iter().enumerate().all(|(i, &b)| b == (i == k)));
        }
        assert_eq!(a.transpose_read(), rows);
    }

    #[test]
    fn single_bit_transposes() {
        let mut a = CellArray::new(8, 8).unwrap();
        let mut row = vec![false; 8];
        row[5] = true;
        a.write_row(2, &row).unwrap();
        let t = a.transpose_read();
        for (r, line) in t.iter().enumerate() {
            for (c, &b) in line.iter().enumerate() {
                assert_eq!(b, r == 5 && c == 2);
            }
        }
    }

    #[test]
    fn all_ones_columns() {
        let a = CellArray::from_rows(&vec![vec![true; 64]; 64]).unwrap();
        assert_eq!(a.read_column(17).unwrap(), vec![true; 64]);
    }

    #[test]
    fn random_transpose_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_array(&mut rng, 64, 64);
        let s = a.storage();
        let t = a.transpose_read();
        for r in 0..64 {
            for c in 0..64 {
                assert_eq!(t[c][r], s[r][c]);
            }
        }
    }

    #[test]
    fn bcam_examples() {
        let mut a = CellArray::new(2, 4).unwrap();
        a.write_row(0, &pattern("1011")).unwrap();
        a.write_row(1, &pattern("0000")).unwrap();
        assert_eq!(a.bcam_search(&pattern("1011")).unwrap(), vec![true, false]);
        assert_eq!(a.bcam_search(&pattern("1001")).unwrap(), vec![false, false]);
        assert!(matches!(
            a.bcam_search(&pattern("101")),
            Err(ArrayError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn bcam_multi_bit_mismatch_reports_zero() {
        let mut a = CellArray::new(2, 4).unwrap();
        a.write_row(0, &pattern("1111")).unwrap();
        assert_eq!(a.bcam_search(&pattern("0000")).unwrap()[0], false);
    }

    #[test]
    fn bcam_matches_equality_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut a = random_array(&mut rng, 64, 8);
            // plant the key in a few rows so matches actually occur
            let key: Vec<bool> = (0..8).map(|_| rng.gen()).collect();
            for _ in 0..3 {
                let r = rng.gen_range(0..64);
                a.write_row(r, &key).unwrap();
            }
            let got = a.bcam_search(&key).unwrap();
            for (r, row) in a.storage().iter().enumerate() {
                assert_eq!(got[r], *row == key);
            }
        }
    }

    #[test]
    fn masked_search_ignores_columns() {
        let mut a = CellArray::new(2, 4).unwrap();
        a.write_row(0, &pattern("1011")).unwrap();
        a.write_row(1, &pattern("1100")).unwrap();
        let key = [Some(true), None, None, None];
        assert_eq!(a.bcam_search_masked(&key).unwrap(), vec![true, true]);
    }

    #[test]
    fn tcam_x_stored_matches_either_key() {
        let mut a = CellArray::new(1, 2).unwrap();
        a.write_row(0, &[false, true]).unwrap();
        for k in [Ternary::Zero, Ternary::One, Ternary::X] {
            let m = a.tcam_search(&[k]).unwrap();
            assert_eq!(m.matches, vec![true]);
            assert!(m.invalid_rows.is_empty());
        }
    }

    #[test]
    fn tcam_stored_one_rejects_zero_key() {
        let mut a = CellArray::new(1, 2).unwrap();
        a.write_row(0, &[true, true]).unwrap();
        assert_eq!(a.tcam_search(&[Ternary::Zero]).unwrap().matches, vec![false]);
        assert_eq!(a.tcam_search(&[Ternary::One]).unwrap().matches, vec![true]);
    }

    #[test]
    fn tcam_invalid_pair_always_mismatches() {
        let mut a = CellArray::new(2, 2).unwrap();
        a.write_row(0, &[true, false]).unwrap();
        for k in [Ternary::Zero, Ternary::One, Ternary::X] {
            let m = a.tcam_search(&[k]).unwrap();
            assert!(!m.matches[0]);
            assert_eq!(m.invalid_rows, vec![0]);
            assert!(matches!(
                m.strict(),
                Err(ArrayError::InvalidTernaryEncoding(_))
            ));
        }
    }

    #[test]
    fn pim_boolean_truth_table() {
        let mut a = CellArray::new(2, 4).unwrap();
        a.write_row(0, &pattern("0011")).unwrap();
        a.write_row(1, &pattern("0101")).unwrap();
        let out = a.pim_boolean(0, 1).unwrap();
        let expect = [(false, true, true), (false, false, false), (false, false, false), (true, false, true)];
        for (o, (and, nor, xnor)) in out.iter().zip(expect) {
            assert_eq!((o.and, o.nor, o.xnor), (and, nor, xnor));
        }
    }

    #[test]
    fn pim_multiply_is_xnor() {
        let mut a = CellArray::new(1, 4).unwrap();
        a.write_row(0, &pattern("0011")).unwrap();
        assert_eq!(
            a.pim_multiply_row(0, &pattern("0101")).unwrap(),
            pattern("1001")
        );
        assert_eq!(
            a.pim_multiply_row(0, &pattern("0011")).unwrap(),
            pattern("1111")
        );
    }

    #[test]
    fn bcam_is_and_reduction_of_multiply() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_array(&mut rng, 16, 4);
        for _ in 0..32 {
            let key: Vec<bool> = (0..4).map(|_| rng.gen()).collect();
            let m = a.bcam_search(&key).unwrap();
            for r in 0..16 {
                let all = a.pim_multiply_row(r, &key).unwrap().into_iter().all(|b| b);
                assert_eq!(m[r], all);
            }
        }
    }

    #[test]
    fn reads_and_searches_hold_storage() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_array(&mut rng, 8, 8);
        let before = a.clone();
        let _ = a.read_row(3).unwrap();
        let _ = a.read_column(2).unwrap();
        let _ = a.transpose_read();
        let _ = a.bcam_search(&[true; 8]).unwrap();
        let _ = a.tcam_search(&[Ternary::X; 4]).unwrap();
        let _ = a.pim_boolean(0, 1).unwrap();
        let _ = a.pim_multiply_row(4, &[false; 8]).unwrap();
        assert_eq!(a, before);
    }
}
