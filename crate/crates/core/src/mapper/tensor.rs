//! Weight tensors in the `tensor,index,value` CSV format, where `index` is a
//! colon-separated row-major index tuple, and evaluation sets.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::MapError;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    /// Row-major values.
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, MapError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() || shape.is_empty() {
            return Err(MapError::ShapeMismatch(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.shape.len() {
            return None;
        }
        let mut off = 0;
        for (&i, &d) in index.iter().zip(&self.shape) {
            if i >= d {
                return None;
            }
            off = off * d + i;
        }
        Some(off)
    }

    fn unravel(&self, mut off: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for (slot, &d) in idx.iter_mut().zip(&self.shape).rev() {
            *slot = off % d;
            off /= d;
        }
        idx
    }
}

pub type TensorSet = BTreeMap<String, Tensor>;

fn malformed(line: u64, column: usize, message: impl Into<String>) -> MapError {
    MapError::MalformedCsv {
        line,
        column,
        message: message.into(),
    }
}

/// Parses weight CSV text. Shapes are inferred from the largest index per
/// dimension; every element must appear exactly once.
pub fn parse_weights<R: Read>(reader: R) -> Result<TensorSet, MapError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| malformed(1, 1, e.to_string()))?
        .clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["tensor", "index", "value"] {
        return Err(malformed(1, 1, "header must be tensor,index,value"));
    }
    let mut raw: BTreeMap<String, Vec<(Vec<usize>, f64, u64)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, 1, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(malformed(line, rec.len().min(3), "expected 3 fields"));
        }
        let name = rec[0].trim().to_string();
        if name.is_empty() {
            return Err(malformed(line, 1, "empty tensor name"));
        }
        let index = rec[1]
            .trim()
            .split(':')
            .map(|t| t.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| malformed(line, 2, format!("bad index {:?}", &rec[1])))?;
        let value: f64 = rec[2]
            .trim()
            .parse()
            .map_err(|_| malformed(line, 3, format!("non-numeric value {:?}", &rec[2])))?;
        if !value.is_finite() {
            return Err(malformed(line, 3, format!("non-finite value {:?}", &rec[2])));
        }
        raw.entry(name).or_default().push((index, value, line));
    }
    let mut set = TensorSet::new();
    for (name, entries) in raw {
        let rank = entries[0].0.len();
        if let Some((_, _, line)) = entries.iter().find(|(i, _, _)| i.len() != rank) {
            return Err(malformed(*line, 2, format!("index rank differs within {name}")));
        }
        let shape: Vec<usize> = (0..rank)
            .map(|d| entries.iter().map(|(i, _, _)| i[d]).max().unwrap_or(0) + 1)
            .collect();
        let total: usize = shape.iter().product();
        let mut data = vec![None; total];
        let mut t = Tensor {
            shape: shape.clone(),
            data: Vec::new(),
        };
        for (idx, v, line) in entries {
            let off = t.offset(&idx).expect("index within inferred shape");
            if data[off].replace(v).is_some() {
                return Err(malformed(line, 2, format!("duplicate index in {name}")));
            }
        }
        if let Some(missing) = data.iter().position(Option::is_none) {
            return Err(MapError::ShapeMismatch(format!(
                "{name} {shape:?} is missing element {:?}",
                t.unravel(missing)
            )));
        }
        t.data = data.into_iter().map(|v| v.expect("checked")).collect();
        set.insert(name, t);
    }
    Ok(set)
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<TensorSet, MapError> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| MapError::Io(format!("{}: {e}", path.display())))?;
    parse_weights(f)
}

pub fn write_weights<W: Write>(set: &TensorSet, writer: W) -> Result<(), MapError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| MapError::Io(e.to_string());
    w.write_record(["tensor", "index", "value"]).map_err(io)?;
    for (name, t) in set {
        for (off, v) in t.data.iter().enumerate() {
            let idx: Vec<String> = t.unravel(off).iter().map(usize::to_string).collect();
            w.write_record([name.as_str(), &idx.join(":"), &format!("{v:?}")])
                .map_err(io)?;
        }
    }
    w.flush().map_err(|e| MapError::Io(e.to_string()))
}

pub fn save_weights(set: &TensorSet, path: impl AsRef<Path>) -> Result<(), MapError> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| MapError::Io(format!("{}: {e}", path.display())))?;
    write_weights(set, f)
}

/// Labelled samples: CSV rows of `features…, label` with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl EvalSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn parse<R: Read>(reader: R) -> Result<Self, MapError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                malformed(line, 1, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() < 2 {
                return Err(malformed(line, 1, "need at least one feature and a label"));
            }
            let n = rec.len() - 1;
            let row = rec
                .iter()
                .take(n)
                .enumerate()
                .map(|(c, v)| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| malformed(line, c + 1, format!("non-numeric {v:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let label = rec[n]
                .trim()
                .parse::<usize>()
                .map_err(|_| malformed(line, n + 1, format!("bad label {:?}", &rec[n])))?;
            features.push(row);
            labels.push(label);
        }
        Ok(Self { features, labels })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MapError> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| MapError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_row_major() {
        let text = "tensor,index,value\nw,1:1,4\nw,0:0,1\nw,0:1,2\nw,1:0,3\n";
        let set = parse_weights(text.as_bytes()).unwrap();
        assert_eq!(set["w"].shape, vec![2, 2]);
        assert_eq!(set["w"].data, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn malformed_cells() {
        let text = "tensor,index,value\nw,0,1\nw,1,abc\n";
        assert!(matches!(
            parse_weights(text.as_bytes()),
            Err(MapError::MalformedCsv { line: 3, column: 3, .. })
        ));
        let text = "tensor,index,value\nw,0,1\nw,2,1\n";
        assert!(matches!(parse_weights(text.as_bytes()), Err(MapError::ShapeMismatch(_))));
        let text = "name,idx,val\n";
        assert!(matches!(parse_weights(text.as_bytes()), Err(MapError::MalformedCsv { line: 1, .. })));
        let text = "tensor,index,value\nw,0,1\nw,0,2\n";
        assert!(matches!(parse_weights(text.as_bytes()), Err(MapError::MalformedCsv { line: 3, .. })));
    }

    #[test]
    fn eval_set_parse() {
        let e = EvalSet::parse("a,b,label\n0.5,1,3\n0,0,7\n".as_bytes()).unwrap();
        assert_eq!(e.features, vec![vec![0.5, 1.0], vec![0.0, 0.0]]);
        assert_eq!(e.labels, vec![3, 7]);
    }
}
