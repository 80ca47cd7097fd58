use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};

use insitu_core::cell_array::{bits_to_string, Mode, Ternary, Trace};
use insitu_core::CellArray;

use crate::config::Context;
use crate::error::{CliError, Result};

#[derive(Debug, Args)]
pub struct ArrayArgs {
    /// Initial contents: rows of 0/1 characters, or comma-separated cells
    /// when the file ends in .csv. Defaults to an all-zero array.
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    rows: usize,
    #[arg(long, default_value_t = 64)]
    cols: usize,
    #[command(subcommand)]
    op: ArrayOp,
}

#[derive(Debug, Subcommand)]
enum ArrayOp {
    /// Write one row and save the resulting image
    Write {
        #[arg(long)]
        row: usize,
        #[arg(long)]
        bits: String,
    },
    /// Read one row or one column
    Read {
        #[arg(long, conflicts_with = "col", required_unless_present = "col")]
        row: Option<usize>,
        #[arg(long)]
        col: Option<usize>,
    },
    /// Read every column and save the transposed image
    Transpose,
    /// Binary search; 'x' in the key masks a column
    Bcam {
        #[arg(long)]
        key: String,
    },
    /// Ternary search over cell pairs; key symbols are 0, 1 or x
    Tcam {
        #[arg(long)]
        key: String,
    },
    /// Two-row Boolean activation, or per-cell XNOR with --operand
    Pim {
        #[arg(long)]
        row_a: usize,
        #[arg(long, required_unless_present = "operand")]
        row_b: Option<usize>,
        #[arg(long, conflicts_with = "row_b")]
        operand: Option<String>,
    },
}

fn load(args: &ArrayArgs) -> Result<CellArray> {
    match &args.image {
        None => Ok(CellArray::new(args.rows, args.cols)?),
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            let reader = BufReader::new(file);
            let is_csv = path.extension().is_some_and(|e| e == "csv");
            Ok(if is_csv {
                CellArray::read_csv(reader)?
            } else {
                CellArray::read_text(reader)?
            })
        }
    }
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(CliError::usage(format!("bit string contains {other:?}"))),
        })
        .collect()
}

fn parse_masked(s: &str) -> Result<Vec<Option<bool>>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(Some(false)),
            '1' => Ok(Some(true)),
            'x' | 'X' => Ok(None),
            other => Err(CliError::usage(format!("key contains {other:?}"))),
        })
        .collect()
}

fn save_image(ctx: &Context, name: &str, array: &CellArray) -> Result<PathBuf> {
    let path = ctx.output(name)?;
    let mut buf = Vec::new();
    if Path::new(name).extension().is_some_and(|e| e == "csv") {
        array.write_csv(&mut buf)?;
    } else {
        array.write_text(&mut buf)?;
    }
    std::fs::write(&path, buf)?;
    Ok(path)
}

fn flag(b: bool) -> u8 {
    u8::from(b)
}

pub fn array(ctx: &Context, args: ArrayArgs) -> Result<()> {
    let mut array = load(&args)?;
    let mut trace = Trace::new();
    match args.op {
        ArrayOp::Write { row, bits } => {
            let bits = parse_bits(&bits)?;
            array.write_row(row, &bits)?;
            trace.record(Mode::Write, format!("row={row} bits={}", bits_to_string(&bits)), "");
            let path = save_image(ctx, "array.txt", &array)?;
            println!("wrote row {row}; image saved to {}", path.display());
        }
        ArrayOp::Read { row, col } => {
            let (mode, label, bits) = match (row, col) {
                (Some(r), _) => (Mode::ReadRow, format!("row={r}"), array.read_row(r)?),
                (None, Some(c)) => (Mode::ReadColumn, format!("col={c}"), array.read_column(c)?),
                (None, None) => return Err(CliError::usage("read needs --row or --col")),
            };
            let s = bits_to_string(&bits);
            trace.record(mode, label.clone(), s.clone());
            ctx.write("read.csv", &format!("index,bits\n{},{s}\n", label.replace('=', ":")))?;
            println!("{s}");
        }
        ArrayOp::Transpose => {
            let t = array.transpose_read();
            for (c, col) in t.iter().enumerate() {
                trace.record(Mode::ReadColumn, format!("col={c}"), bits_to_string(col));
            }
            let path = save_image(ctx, "transpose.txt", &CellArray::from_rows(&t)?)?;
            println!("transpose saved to {}", path.display());
        }
        ArrayOp::Bcam { key } => {
            let key = parse_masked(&key)?;
            let matches = array.bcam_search_masked(&key)?;
            let shown: String = key
                .iter()
                .map(|k| k.map_or('x', |b| if b { '1' } else { '0' }))
                .collect();
            trace.record(Mode::Bcam, format!("key={shown}"), bits_to_string(&matches));
            let mut csv = String::from("row,match\n");
            for (r, m) in matches.iter().enumerate() {
                csv.push_str(&format!("{r},{}\n", flag(*m)));
            }
            ctx.write("match.csv", &csv)?;
            let hits: Vec<usize> = (0..matches.len()).filter(|&r| matches[r]).collect();
            println!("matching rows: {hits:?}");
        }
        ArrayOp::Tcam { key } => {
            let key: Vec<Ternary> = key
                .chars()
                .map(|c| Ternary::from_char(c).ok_or_else(|| CliError::usage(format!("key contains {c:?}"))))
                .collect::<Result<_>>()?;
            let result = array.tcam_search(&key)?;
            trace.record(Mode::Tcam, format!("symbols={}", key.len()), bits_to_string(&result.matches));
            let mut csv = String::from("row,match,invalid\n");
            for (r, m) in result.matches.iter().enumerate() {
                csv.push_str(&format!("{r},{},{}\n", flag(*m), flag(result.invalid_rows.contains(&r))));
            }
            ctx.write("match.csv", &csv)?;
            let hits: Vec<usize> = (0..result.matches.len()).filter(|&r| result.matches[r]).collect();
            println!("matching rows: {hits:?}");
            if !result.invalid_rows.is_empty() {
                eprintln!("warning: rows {:?} hold the invalid (1,0) pair", result.invalid_rows);
            }
        }
        ArrayOp::Pim { row_a, row_b, operand } => {
            let mut csv;
            if let Some(op) = operand {
                let op = parse_bits(&op)?;
                let out = array.pim_multiply_row(row_a, &op)?;
                trace.record(
                    Mode::PimMultiply,
                    format!("row={row_a} operand={}", bits_to_string(&op)),
                    bits_to_string(&out),
                );
                csv = String::from("col,xnor\n");
                for (c, b) in out.iter().enumerate() {
                    csv.push_str(&format!("{c},{}\n", flag(*b)));
                }
                println!("xnor {}", bits_to_string(&out));
            } else {
                let row_b = row_b.ok_or_else(|| CliError::usage("pim needs --row-b or --operand"))?;
                let out = array.pim_boolean(row_a, row_b)?;
                let xnor: Vec<bool> = out.iter().map(|o| o.xnor).collect();
                trace.record(Mode::PimBoolean, format!("rows={row_a},{row_b}"), bits_to_string(&xnor));
                csv = String::from("col,and,nor,xnor\n");
                for (c, o) in out.iter().enumerate() {
                    csv.push_str(&format!("{c},{},{},{}\n", flag(o.and), flag(o.nor), flag(o.xnor)));
                }
                let and: Vec<bool> = out.iter().map(|o| o.and).collect();
                let nor: Vec<bool> = out.iter().map(|o| o.nor).collect();
                println!("and  {}\nnor  {}\nxnor {}", bits_to_string(&and), bits_to_string(&nor), bits_to_string(&xnor));
            }
            ctx.write("pim.csv", &csv)?;
        }
    }
    ctx.write("trace.csv", &trace.to_csv())?;
    Ok(())
}
