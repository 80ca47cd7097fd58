mod array;
mod compute;
mod model;

use std::fs;
use std::path::Path;

pub use array::{array, ArrayArgs};
pub use compute::{lut, mac, metrics, perf, LutArgs, MacArgs, MetricsArgs, PerfArgs};
pub use model::{demo_conv, infer, map, ConvArgs, InferArgs, MapArgs};

use crate::error::{CliError, Result};

/// Integer rows from a CSV-ish file: values split on commas or whitespace,
/// blank lines and `#` comments skipped.
fn read_int_rows(path: &Path) -> Result<Vec<Vec<i128>>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<i128>().map_err(|_| {
                    CliError::usage(format!("{}:{}: {t:?} is not an integer", path.display(), i + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
