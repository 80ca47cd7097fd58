//! Array image files and the per-operation trace log.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{ArrayError, CellArray, Mode};

fn parse_bits(line: &str, sep: Option<char>, lineno: usize) -> Result<Vec<bool>, ArrayError> {
    let bad = |c: &str| ArrayError::Parse {
        line: lineno,
        message: format!("expected '0' or '1', found {c:?}"),
    };
    match sep {
        None => line
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(bad(&other.to_string())),
            })
            .collect(),
        Some(sep) => line
            .split(sep)
            .map(|cell| match cell.trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(bad(other)),
            })
            .collect(),
    }
}

fn read_image<R: BufRead>(reader: R, sep: Option<char>) -> Result<CellArray, ArrayError> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ArrayError::Io(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bits = parse_bits(line, sep, i + 1)?;
        if let Some(first) = rows.first().map(Vec::len) {
            if bits.len() != first {
                return Err(ArrayError::Parse {
                    line: i + 1,
                    message: format!("row has {} bits, expected {first}", bits.len()),
                });
            }
        }
        rows.push(bits);
    }
    if rows.is_empty() {
        return Err(ArrayError::Parse {
            line: 0,
            message: "empty image".into(),
        });
    }
    CellArray::from_rows(&rows)
}

fn bit_char(b: bool) -> char {
    if b {
        '1'
    } else {
        '0'
    }
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().copied().map(bit_char).collect()
}

impl CellArray {
    /// Plain-text image: one row per line, characters '0'/'1'.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self, ArrayError> {
        read_image(reader, None)
    }

    pub fn write_text<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for row in self.storage() {
            writeln!(writer, "{}", bits_to_string(&row))?;
        }
        Ok(())
    }

    /// CSV image: one row per line, comma-separated 0/1 cells, no header.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self, ArrayError> {
        read_image(reader, Some(','))
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for row in self.storage() {
            let cells: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
            writeln!(writer, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub step: usize,
    pub mode: Mode,
    pub inputs: String,
    pub outputs: String,
}

/// Append-only operation log, one CSV line per step.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, mode: Mode, inputs: impl Into<String>, outputs: impl Into<String>) {
        let step = self.entries.len();
        self.entries.push(TraceEntry {
            step,
            mode,
            inputs: inputs.into(),
            outputs: outputs.into(),
        });
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,mode,inputs,outputs\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{},{}", e.step, e.mode, e.inputs, e.outputs);
        }
        out
    }
}
