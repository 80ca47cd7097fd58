//! Control-line abstraction for a single bit-cell.
//!
//! Every array operation is expressed as a [`ControlVector`] applied to each
//! cell. A cell either writes, or opens discharge paths on the precharged
//! lines it is attached to. Sensing then reads the surviving line levels.

use std::fmt;

use super::ArrayError;

/// Logical level driven onto a control line. `Float` is the "NC" entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Drive {
    Low,
    High,
    Float,
}

impl Drive {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Drive::High
        } else {
            Drive::Low
        }
    }

    fn symbol(self) -> char {
        match self {
            Drive::Low => '0',
            Drive::High => '1',
            Drive::Float => '-',
        }
    }
}

/// Levels on the seven lines of one bit-cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ControlVector {
    pub wwl: Drive,
    pub wbl: Drive,
    pub wblb: Drive,
    pub sl_rbl: Drive,
    pub rblb_slb: Drive,
    pub rwl: Drive,
    pub ml_hbl: Drive,
}

impl fmt::Display for ControlVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines = [
            self.wwl,
            self.wbl,
            self.wblb,
            self.sl_rbl,
            self.rblb_slb,
            self.rwl,
            self.ml_hbl,
        ];
        for d in lines {
            write!(f, "{}", d.symbol())?;
        }
        Ok(())
    }
}

/// What a control vector asks a single cell to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellOp {
    Hold,
    Write(bool),
    /// RWL asserted with ML grounded: the cell discharges RBL (stored 1) or
    /// RBLB (stored 0). Used for row read and multi-row PIM.
    RowActivate,
    /// Differential drive on SL/SLB with the ML precharged; the ML survives
    /// iff the stored bit equals the driven bit. A column-wise read is the
    /// `Search(true)` pattern on the selected column.
    Search(bool),
    /// Search-type column left out of the comparison (SL = SLB = High).
    Masked,
}

impl ControlVector {
    const fn new(
        wwl: Drive,
        wbl: Drive,
        wblb: Drive,
        sl_rbl: Drive,
        rblb_slb: Drive,
        rwl: Drive,
        ml_hbl: Drive,
    ) -> Self {
        Self {
            wwl,
            wbl,
            wblb,
            sl_rbl,
            rblb_slb,
            rwl,
            ml_hbl,
        }
    }

    pub fn hold() -> Self {
        use Drive::*;
        Self::new(Low, Float, Float, Float, Float, Low, High)
    }

    pub fn write(bit: bool) -> Self {
        use Drive::*;
        Self::new(
            High,
            Drive::from_bit(bit),
            Drive::from_bit(!bit),
            Float,
            Float,
            Low,
            Float,
        )
    }

    pub fn row_read() -> Self {
        use Drive::*;
        Self::new(Low, Float, Float, High, High, High, Low)
    }

    pub fn column_read() -> Self {
        use Drive::*;
        Self::new(Low, Float, Float, High, Low, Low, High)
    }

    pub fn search(bit: bool) -> Self {
        use Drive::*;
        Self::new(
            Low,
            Float,
            Float,
            Drive::from_bit(bit),
            Drive::from_bit(!bit),
            Low,
            High,
        )
    }

    pub fn masked() -> Self {
        use Drive::*;
        Self::new(Low, Float, Float, High, High, Low, High)
    }

    /// First cell of a ternary pair: SL carries the key, SLB is held high.
    pub fn search_sl_only(bit: bool) -> Self {
        use Drive::*;
        Self::new(Low, Float, Float, Drive::from_bit(bit), High, Low, High)
    }

    /// Second cell of a ternary pair: SLB carries the inverted key, SL is held high.
    pub fn search_slb_only(bit: bool) -> Self {
        use Drive::*;
        Self::new(Low, Float, Float, High, Drive::from_bit(!bit), Low, High)
    }

    /// Decodes the vector into a cell operation, rejecting line combinations
    /// that are not part of the operation table.
    pub fn classify(&self) -> Result<CellOp, ArrayError> {
        use Drive::*;
        let reject = || Err(ArrayError::InvalidControl(self.to_string()));
        match self.wwl {
            High => {
                if self.rwl != Low {
                    return reject();
                }
                match (self.wbl, self.wblb) {
                    (High, Low) => Ok(CellOp::Write(true)),
                    (Low, High) => Ok(CellOp::Write(false)),
                    _ => reject(),
                }
            }
            Low => {
                if self.wbl != Float || self.wblb != Float {
                    return reject();
                }
                match (self.rwl, self.ml_hbl, self.sl_rbl, self.rblb_slb) {
                    (Low, High, Float, Float) => Ok(CellOp::Hold),
                    (High, Low, High, High) => Ok(CellOp::RowActivate),
                    (Low, High, High, Low) => Ok(CellOp::Search(true)),
                    (Low, High, High, High) => Ok(CellOp::Masked),
                    (Low, High, Low, High) => Ok(CellOp::Search(false)),
                    _ => reject(),
                }
            }
            Float => reject(),
        }
    }
}

/// Which precharged lines a cell pulls down under a given operation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CellEffect {
    pub rbl: bool,
    pub rblb: bool,
    pub ml: bool,
}

/// Functional model of the cell: stored 1 connects the ML to SL, stored 0
/// connects it to SLB; the ML discharges when the connected line is low.
/// With RWL asserted the cell instead sinks RBL (stored 1) or RBLB (stored 0).
pub fn cell_effect(stored: bool, cv: &ControlVector) -> CellEffect {
    let mut effect = CellEffect::default();
    if cv.wwl == Drive::High {
        return effect;
    }
    if cv.rwl == Drive::High {
        if stored {
            effect.rbl = true;
        } else {
            effect.rblb = true;
        }
        return effect;
    }
    if cv.ml_hbl == Drive::High {
        let path = if stored { cv.sl_rbl } else { cv.rblb_slb };
        effect.ml = path == Drive::Low;
    }
    effect
}

/// Level of a precharged line during one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineState {
    High,
    Low,
    Discharged,
}

impl LineState {
    /// A high line falls to `Discharged`; it never recharges within a step.
    #[must_use]
    pub fn pull_down(self, path: bool) -> Self {
        match (self, path) {
            (LineState::High, true) => LineState::Discharged,
            (state, _) => state,
        }
    }

    pub fn is_high(self) -> bool {
        self == LineState::High
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_patterns_classify() {
        assert_eq!(ControlVector::hold().classify().unwrap(), CellOp::Hold);
        assert_eq!(
            ControlVector::write(true).classify().unwrap(),
            CellOp::Write(true)
        );
        assert_eq!(
            ControlVector::write(false).classify().unwrap(),
            CellOp::Write(false)
        );
        assert_eq!(
            ControlVector::row_read().classify().unwrap(),
            CellOp::RowActivate
        );
        assert_eq!(
            ControlVector::column_read().classify().unwrap(),
            CellOp::Search(true)
        );
        assert_eq!(ControlVector::masked().classify().unwrap(), CellOp::Masked);
        assert_eq!(
            ControlVector::search(false).classify().unwrap(),
            CellOp::Search(false)
        );
    }

    #[test]
    fn rejects_single_ended_write() {
        let mut cv = ControlVector::write(true);
        cv.wblb = Drive::High;
        assert!(cv.classify().is_err());
        cv.wblb = Drive::Float;
        assert!(cv.classify().is_err());
    }

    #[test]
    fn rejects_write_with_read_wordline() {
        let mut cv = ControlVector::write(false);
        cv.rwl = Drive::High;
        assert!(cv.classify().is_err());
    }

    #[test]
    fn rejects_both_search_lines_low() {
        let mut cv = ControlVector::search(true);
        cv.sl_rbl = Drive::Low;
        assert!(cv.classify().is_err());
    }

    #[test]
    fn half_driven_ternary_patterns_are_valid() {
        for bit in [false, true] {
            assert!(ControlVector::search_sl_only(bit).classify().is_ok());
            assert!(ControlVector::search_slb_only(bit).classify().is_ok());
        }
    }

    #[test]
    fn search_discharges_only_on_mismatch() {
        for stored in [false, true] {
            for key in [false, true] {
                let e = cell_effect(stored, &ControlVector::search(key));
                assert_eq!(e.ml, stored != key);
                assert!(!e.rbl && !e.rblb);
            }
        }
    }

    #[test]
    fn line_never_recharges() {
        let l = LineState::High.pull_down(true);
        assert_eq!(l, LineState::Discharged);
        assert_eq!(l.pull_down(false), LineState::Discharged);
        assert_eq!(LineState::Low.pull_down(true), LineState::Low);
    }
}
