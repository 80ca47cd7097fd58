//! Error-rate / NMED / MRED characterisation of a compressor spec.
//!
//! NMED is the mean error distance divided by the largest exact output of the
//! configuration; MRED is the mean of `|approx − exact| / max(exact, 1)`.
//! Inputs are split into fixed-size chunks that are reduced in chunk order,
//! so results are identical for any execution strategy. Sampled chunks draw
//! from ChaCha8 seeded with `seed` on stream `chunk index`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{bits_to_u128, reduce_columns};
use super::{CompressorError, CompressorSpec};
use crate::exec::{self, Strategy};

/// Largest input space (in bits) accepted for exhaustive enumeration.
pub const MAX_EXHAUSTIVE_BITS: u32 = 24;
const CHUNK: u64 = 1 << 14;

/// What gets characterised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorTarget {
    /// One compressor over its 32 inputs (x1..x4, cin).
    Compressor,
    /// Sum of `addends` unsigned `width`-bit values.
    Accumulate { width: u32, addends: usize },
    /// Sum of `products` unsigned `width`×`width` products, reduced from their
    /// AND partial products in a single tree (the MAC accumulation path).
    ProductSum { width: u32, products: usize },
}

impl ErrorTarget {
    fn validate(&self) -> Result<(), CompressorError> {
        let bad = |m: String| Err(CompressorError::InvalidTarget(m));
        match *self {
            ErrorTarget::Compressor => Ok(()),
            ErrorTarget::Accumulate { width, addends } => {
                if !(1..=64).contains(&width) || !(1..=1 << 16).contains(&addends) {
                    return bad(format!("accumulate width {width}, addends {addends}"));
                }
                Ok(())
            }
            ErrorTarget::ProductSum { width, products } => {
                if !(1..=32).contains(&width) || !(1..=1 << 16).contains(&products) {
                    return bad(format!("product width {width}, products {products}"));
                }
                Ok(())
            }
        }
    }

    fn operand_width(&self) -> u32 {
        match *self {
            ErrorTarget::Compressor => 1,
            ErrorTarget::Accumulate { width, .. } | ErrorTarget::ProductSum { width, .. } => width,
        }
    }

    fn operand_count(&self) -> usize {
        match *self {
            ErrorTarget::Compressor => 5,
            ErrorTarget::Accumulate { addends, .. } => addends,
            ErrorTarget::ProductSum { products, .. } => 2 * products,
        }
    }

    /// Total input bits; the exhaustive space is 2^input_bits.
    pub fn input_bits(&self) -> u64 {
        u64::from(self.operand_width()) * self.operand_count() as u64
    }

    /// Largest exact output, the NMED normaliser.
    pub fn max_output(&self) -> u128 {
        match *self {
            ErrorTarget::Compressor => 5,
            ErrorTarget::Accumulate { width, addends } => addends as u128 * mask(width),
            ErrorTarget::ProductSum { width, products } => {
                products as u128 * mask(width) * mask(width)
            }
        }
    }

    /// (exact, approximate) outputs for one operand vector.
    fn evaluate(&self, spec: &CompressorSpec, ops: &[u64]) -> (u128, u128) {
        match *self {
            ErrorTarget::Compressor => {
                let b = |i: usize| ops[i] & 1 == 1;
                let o = spec.compress42(b(0), b(1), b(2), b(3), b(4));
                let exact = ops.iter().sum::<u64>();
                (u128::from(exact), u128::from(o.value()))
            }
            ErrorTarget::Accumulate { width, .. } => {
                let cols: Vec<Vec<bool>> = (0..width)
                    .map(|b| ops.iter().map(|a| (a >> b) & 1 == 1).collect())
                    .collect();
                let exact = ops.iter().map(|&a| u128::from(a)).sum();
                (exact, bits_to_u128(&reduce_columns(spec, cols)))
            }
            ErrorTarget::ProductSum { width, .. } => {
                let w = width as usize;
                let mut cols: Vec<Vec<bool>> = vec![Vec::new(); 2 * w];
                let mut exact = 0u128;
                for pair in ops.chunks(2) {
                    let (a, b) = (pair[0], pair[1]);
                    exact += u128::from(a) * u128::from(b);
                    for i in 0..w {
                        for j in 0..w {
                            cols[i + j].push((a >> i) & (b >> j) & 1 == 1);
                        }
                    }
                }
                (exact, bits_to_u128(&reduce_columns(spec, cols)))
            }
        }
    }

    fn decode(&self, index: u64, ops: &mut [u64]) {
        let w = self.operand_width();
        for (k, op) in ops.iter_mut().enumerate() {
            *op = (index >> (k as u32 * w)) & (mask(w) as u64);
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, ops: &mut [u64]) {
        let w = self.operand_width();
        for op in ops.iter_mut() {
            let v: u64 = rng.gen();
            *op = if w >= 64 { v } else { v & ((1u64 << w) - 1) };
        }
    }

    /// (width, count) pair used in reports.
    pub fn shape(&self) -> (u32, usize) {
        match *self {
            ErrorTarget::Compressor => (1, 1),
            ErrorTarget::Accumulate { width, addends } => (width, addends),
            ErrorTarget::ProductSum { width, products } => (width, products),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ErrorTarget::Compressor => "compressor",
            ErrorTarget::Accumulate { .. } => "accumulate",
            ErrorTarget::ProductSum { .. } => "product_sum",
        }
    }
}

fn mask(width: u32) -> u128 {
    (1u128 << width) - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum Policy {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Exhaustive => f.write_str("exhaustive"),
            Policy::Sampled { samples, seed } => write!(f, "sampled:{samples}:{seed}"),
        }
    }
}

impl FromStr for Policy {
    type Err = String;

    /// `exhaustive` or `sampled:<n>:<seed>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "exhaustive" {
            return Ok(Policy::Exhaustive);
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["sampled", n, seed] => Ok(Policy::Sampled {
                samples: n.parse().map_err(|_| format!("bad sample count {n:?}"))?,
                seed: seed.parse().map_err(|_| format!("bad seed {seed:?}"))?,
            }),
            _ => Err(format!(
                "policy must be 'exhaustive' or 'sampled:<n>:<seed>', got {s:?}"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub error_rate: f64,
    pub nmed: f64,
    pub mred: f64,
    pub max_error: u128,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Partial {
    n: u64,
    errors: u64,
    sum_ed: u128,
    sum_red: f64,
    max_ed: u128,
}

impl Partial {
    fn add(&mut self, exact: u128, approx: u128) {
        let ed = exact.abs_diff(approx);
        self.n += 1;
        if ed != 0 {
            self.errors += 1;
            self.sum_ed += ed;
            self.sum_red += ed as f64 / exact.max(1) as f64;
            self.max_ed = self.max_ed.max(ed);
        }
    }

    fn merge(mut self, other: &Partial) -> Self {
        self.n += other.n;
        self.errors += other.errors;
        self.sum_ed += other.sum_ed;
        self.sum_red += other.sum_red;
        self.max_ed = self.max_ed.max(other.max_ed);
        self
    }
}

pub fn error_metrics(
    spec: &CompressorSpec,
    target: ErrorTarget,
    policy: Policy,
) -> Result<ErrorMetrics, CompressorError> {
    error_metrics_with(Strategy::default(), spec, target, policy)
}

pub fn error_metrics_with(
    strategy: Strategy,
    spec: &CompressorSpec,
    target: ErrorTarget,
    policy: Policy,
) -> Result<ErrorMetrics, CompressorError> {
    target.validate()?;
    let total = match policy {
        Policy::Exhaustive => {
            let bits = target.input_bits();
            if bits > u64::from(MAX_EXHAUSTIVE_BITS) {
                return Err(CompressorError::SpaceTooLarge { bits: bits as u32 });
            }
            1u64 << bits
        }
        Policy::Sampled { samples, .. } => samples,
    };
    let chunks = total.div_ceil(CHUNK) as usize;
    let partials = exec::map_indexed(strategy, chunks, |k| {
        let start = k as u64 * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut ops = vec![0u64; target.operand_count()];
        let mut part = Partial::default();
        match policy {
            Policy::Exhaustive => {
                for idx in start..end {
                    target.decode(idx, &mut ops);
                    let (e, a) = target.evaluate(spec, &ops);
                    part.add(e, a);
                }
            }
            Policy::Sampled { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                for _ in start..end {
                    target.sample(&mut rng, &mut ops);
                    let (e, a) = target.evaluate(spec, &ops);
                    part.add(e, a);
                }
            }
        }
        part
    });
    let p = partials.iter().fold(Partial::default(), Partial::merge);
    if p.n == 0 {
        return Ok(ErrorMetrics {
            error_rate: 0.0,
            nmed: 0.0,
            mred: 0.0,
            max_error: 0,
            samples: 0,
        });
    }
    let n = p.n as f64;
    Ok(ErrorMetrics {
        error_rate: p.errors as f64 / n,
        nmed: p.sum_ed as f64 / n / target.max_output() as f64,
        mred: p.sum_red / n,
        max_error: p.max_ed,
        samples: p.n,
    })
}

/// Flat record for CSV/JSON emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub spec: String,
    pub target: String,
    pub width: u32,
    pub count: usize,
    pub policy: String,
    pub seed: Option<u64>,
    pub error_rate: f64,
    pub nmed: f64,
    pub mred: f64,
    pub max_error: u128,
}

impl MetricsRecord {
    pub fn new(spec: &CompressorSpec, target: ErrorTarget, policy: Policy, m: &ErrorMetrics) -> Self {
        let (width, count) = target.shape();
        let (policy_name, seed) = match policy {
            Policy::Exhaustive => ("exhaustive".to_string(), None),
            Policy::Sampled { samples, seed } => (format!("sampled:{samples}"), Some(seed)),
        };
        Self {
            spec: spec.label.clone(),
            target: target.kind().to_string(),
            width,
            count,
            policy: policy_name,
            seed,
            error_rate: m.error_rate,
            nmed: m.nmed,
            mred: m.mred,
            max_error: m.max_error,
        }
    }

    pub const CSV_HEADER: &'static str =
        "spec,target,width,count,policy,seed,error_rate,nmed,mred,max_error";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.spec,
            self.target,
            self.width,
            self.count,
            self.policy,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.error_rate,
            self.nmed,
            self.mred,
            self.max_error
        )
    }
}
