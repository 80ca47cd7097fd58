//! Neural-network front end: weight ingestion, quantization, pruning,
//! tiling, inference through the macro, and image filtering demos.

mod conv;
mod infer;
mod model;
mod quant;
mod schedule;
mod tensor;

use thiserror::Error;

use crate::lut::LutError;
use crate::mac::MacError;

pub use conv::{conv_demo, filter, psnr, ConvDemo, ConvKernel, GrayImage};
pub use infer::{
    argmax, forward_float, forward_quantized, infer, prepare, ActivationLuts, InferenceOptions,
    InferenceReport, QorReport, QuantizedLayer, QuantizedModel, SampleOutput,
};
pub use model::{Activation, Layer, LayerKind, LayerSpec, Model};
pub use quant::{prune, prune_global, quantize, Quantized, QUANT_BITS};
pub use schedule::{map_layer, MacroGeometry, PassWork, Tile, TileSchedule};
pub use tensor::{load_weights, parse_weights, save_weights, write_weights, EvalSet, Tensor, TensorSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("malformed CSV at line {line}, column {column}: {message}")]
    MalformedCsv {
        line: u64,
        column: usize,
        message: String,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("quantization width {0} not in 1, 2, 4, 8, 16, 32")]
    InvalidBits(u32),
    #[error("cannot quantize an empty tensor")]
    EmptyTensor,
    #[error("prune fraction {0} outside [0, 1)")]
    InvalidFraction(f64),
    #[error("layer needs {required} banks, {available} available")]
    InsufficientBanks { required: usize, available: usize },
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Mac(#[from] MacError),
    #[error(transparent)]
    Lut(#[from] LutError),
}
