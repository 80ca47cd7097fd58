use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::CompressorError;

/// Transistor count of the conventional exact 4:2 compressor (two full adders).
pub const CONVENTIONAL_TRANSISTORS: u32 = 56;
/// Transistor count of the 22T approximate compressor.
pub const PROPOSED_TRANSISTORS: u32 = 22;
/// Comparison point: the 40T compressor from prior work.
pub const REFERENCE_40T_TRANSISTORS: u32 = 40;

/// Outputs of one 4:2 compressor evaluation. Weighted value is
/// `sum + 2 * (carry + cout)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outputs {
    pub sum: bool,
    pub carry: bool,
    pub cout: bool,
}

impl Outputs {
    pub fn value(self) -> u32 {
        u32::from(self.sum) + 2 * (u32::from(self.carry) + u32::from(self.cout))
    }
}

/// Truth-table index: `x1 x2 x3 x4 cin` read as a 5-bit number, x1 most
/// significant.
pub fn entry_index(x: [bool; 4], cin: bool) -> usize {
    (usize::from(x[0]) << 4)
        | (usize::from(x[1]) << 3)
        | (usize::from(x[2]) << 2)
        | (usize::from(x[3]) << 1)
        | usize::from(cin)
}

pub fn entry_inputs(index: usize) -> ([bool; 4], bool) {
    (
        [
            index & 16 != 0,
            index & 8 != 0,
            index & 4 != 0,
            index & 2 != 0,
        ],
        index & 1 != 0,
    )
}

fn majority(a: bool, b: bool, c: bool) -> bool {
    (a && b) || (a && c) || (b && c)
}

/// Two cascaded full adders: stage 1 compresses x1..x3 into (s1, cout),
/// stage 2 compresses (s1, x4, cin) into (sum, carry).
fn exact_outputs(x: [bool; 4], cin: bool) -> Outputs {
    let s1 = x[0] ^ x[1] ^ x[2];
    let cout = majority(x[0], x[1], x[2]);
    Outputs {
        sum: s1 ^ x[3] ^ cin,
        carry: majority(s1, x[3], cin),
        cout,
    }
}

/// A 4:2 compressor described by its complete 32-entry truth table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressorSpec {
    pub label: String,
    pub transistor_count: u32,
    /// User-supplied characterisation constants; not simulated.
    pub delay_ns: Option<f64>,
    pub power_uw: Option<f64>,
    table: Vec<Outputs>,
}

impl CompressorSpec {
    pub fn from_table(label: impl Into<String>, transistor_count: u32, table: [Outputs; 32]) -> Self {
        Self {
            label: label.into(),
            transistor_count,
            delay_ns: None,
            power_uw: None,
            table: table.to_vec(),
        }
    }

    /// Exact reference compressor at the conventional 56T cost.
    pub fn exact() -> Self {
        Self::exact_with_cost("exact-56t", CONVENTIONAL_TRANSISTORS)
    }

    pub fn exact_with_cost(label: &str, transistor_count: u32) -> Self {
        let table = std::array::from_fn(|i| {
            let (x, cin) = entry_inputs(i);
            exact_outputs(x, cin)
        });
        Self::from_table(label, transistor_count, table)
    }

    /// Shipped approximate 22T compressor.
    ///
    /// Identical to the exact table except for the all-ones input
    /// (1,1,1,1,cin=1), whose value 5 needs all three outputs high; there the
    /// carry is dropped and the cell yields 3. This is a single-entry change
    /// to one output, so the single-cell error rate is 1/32 with a maximum
    /// error distance of 2, and `cout` still ignores `cin`.
    pub fn approximate() -> Self {
        let mut spec = Self::exact_with_cost("c22t-approx", PROPOSED_TRANSISTORS);
        spec.table[31].carry = false;
        spec
    }

    pub fn outputs(&self, index: usize) -> Outputs {
        self.table[index]
    }

    pub fn table(&self) -> &[Outputs] {
        &self.table
    }

    #[inline]
    pub fn compress42(&self, x1: bool, x2: bool, x3: bool, x4: bool, cin: bool) -> Outputs {
        self.table[entry_index([x1, x2, x3, x4], cin)]
    }

    /// Signed difference between this entry's weighted output and the true
    /// input count.
    pub fn entry_error(&self, index: usize) -> i32 {
        let (x, cin) = entry_inputs(index);
        let exact = x.iter().filter(|&&b| b).count() as i32 + i32::from(cin);
        self.table[index].value() as i32 - exact
    }

    /// Largest |entry_error| over the table.
    pub fn max_entry_error(&self) -> u32 {
        (0..32).map(|i| self.entry_error(i).unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_exact(&self) -> bool {
        (0..32).all(|i| self.entry_error(i) == 0)
    }

    /// True when `cout` depends only on x1..x4.
    pub fn cout_ignores_cin(&self) -> bool {
        (0..32)
            .step_by(2)
            .all(|i| self.table[i].cout == self.table[i + 1].cout)
    }

    /// Parses the 32-line text format `x1 x2 x3 x4 cin : sum carry cout`.
    ///
    /// Blank lines and `#` comments are ignored, except the metadata comments
    /// `# label: <text>` and `# transistors: <n>`.
    pub fn parse(text: &str) -> Result<Self, CompressorError> {
        let mut label = String::from("custom");
        let mut transistors = 0u32;
        let mut table: [Option<Outputs>; 32] = [None; 32];
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("label:") {
                    label = v.trim().to_string();
                } else if let Some(v) = comment.strip_prefix("transistors:") {
                    transistors = v.trim().parse().map_err(|_| CompressorError::Parse {
                        line: lineno,
                        message: format!("bad transistor count {:?}", v.trim()),
                    })?;
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line.split_once(':').ok_or_else(|| CompressorError::Parse {
                line: lineno,
                message: "missing ':' separator".into(),
            })?;
            let inputs = parse_bits(lhs, 5, lineno)?;
            let outputs = parse_bits(rhs, 3, lineno)?;
            let idx = entry_index([inputs[0], inputs[1], inputs[2], inputs[3]], inputs[4]);
            if table[idx].is_some() {
                return Err(CompressorError::DuplicateEntry { line: lineno });
            }
            table[idx] = Some(Outputs {
                sum: outputs[0],
                carry: outputs[1],
                cout: outputs[2],
            });
        }
        let missing: Vec<usize> = (0..32).filter(|&i| table[i].is_none()).collect();
        if !missing.is_empty() {
            return Err(CompressorError::IncompleteSpec { missing });
        }
        Ok(Self::from_table(
            label,
            transistors,
            std::array::from_fn(|i| table[i].expect("checked complete")),
        ))
    }

    pub fn to_text(&self) -> String {
        let b = |v: bool| u8::from(v);
        let mut out = format!(
            "# label: {}\n# transistors: {}\n",
            self.label, self.transistor_count
        );
        for (i, o) in self.table.iter().enumerate() {
            let (x, cin) = entry_inputs(i);
            let _ = writeln!(
                out,
                "{} {} {} {} {} : {} {} {}",
                b(x[0]),
                b(x[1]),
                b(x[2]),
                b(x[3]),
                b(cin),
                b(o.sum),
                b(o.carry),
                b(o.cout)
            );
        }
        out
    }
}

fn parse_bits(field: &str, expected: usize, line: usize) -> Result<Vec<bool>, CompressorError> {
    let bits = field
        .split_whitespace()
        .map(|t| match t {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(CompressorError::Parse {
                line,
                message: format!("expected 0 or 1, found {other:?}"),
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if bits.len() != expected {
        return Err(CompressorError::Parse {
            line,
            message: format!("expected {expected} bits, found {}", bits.len()),
        });
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_identity_holds_on_all_entries() {
        let spec = CompressorSpec::exact();
        for i in 0..32 {
            assert_eq!(spec.entry_error(i), 0, "entry {i}");
        }
        assert!(spec.is_exact());
        assert!(spec.cout_ignores_cin());
    }

    #[test]
    fn exact_examples() {
        let s = CompressorSpec::exact();
        let o = s.compress42(false, false, false, false, false);
        assert_eq!((o.sum, o.carry, o.cout), (false, false, false));
        let o = s.compress42(true, true, true, true, false);
        assert_eq!((o.sum, o.carry, o.cout), (false, true, true));
        let o = s.compress42(true, false, true, false, true);
        assert_eq!((o.sum, o.carry, o.cout), (true, false, true));
        assert_eq!(o.value(), 3);
    }

    #[test]
    fn approximate_differs_in_one_carry_entry() {
        let exact = CompressorSpec::exact();
        let approx = CompressorSpec::approximate();
        let diffs: Vec<usize> = (0..32)
            .filter(|&i| exact.outputs(i) != approx.outputs(i))
            .collect();
        assert_eq!(diffs, vec![31]);
        assert_eq!(exact.outputs(31).sum, approx.outputs(31).sum);
        assert_eq!(exact.outputs(31).cout, approx.outputs(31).cout);
        assert_eq!(approx.entry_error(31), -2);
        assert_eq!(approx.max_entry_error(), 2);
        assert!(approx.cout_ignores_cin());
        assert_eq!(approx.transistor_count, 22);
    }

    #[test]
    fn text_round_trip() {
        let spec = CompressorSpec::approximate();
        let parsed = CompressorSpec::parse(&spec.to_text()).unwrap();
        assert_eq!(parsed, spec);
    }

    #[test]
    fn incomplete_and_duplicate_files() {
        let text = CompressorSpec::exact().to_text();
        let short: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        match CompressorSpec::parse(&short) {
            Err(CompressorError::IncompleteSpec { missing }) => assert_eq!(missing.len(), 24),
            other => panic!("unexpected {other:?}"),
        }
        let dup = format!("{text}0 0 0 0 0 : 0 0 0\n");
        assert!(matches!(
            CompressorSpec::parse(&dup),
            Err(CompressorError::DuplicateEntry { .. })
        ));
        assert!(matches!(
            CompressorSpec::parse("0 0 0 0 : 0 0 0"),
            Err(CompressorError::Parse { line: 1, .. })
        ));
    }
}
