//! Bit-accurate functional simulator of a 64×64 memory-in-situ SRAM macro
//! built from 9T XNOR bit-cells: memory, binary/ternary CAM and PIM modes,
//! approximate 4:2 compressor trees, variable-precision SIMD MAC, CAM-backed
//! activation LUTs, an analytical perf model, and a small NN mapper.

pub mod cell_array;
pub mod compressor;
pub mod exec;
pub mod lut;
pub mod mac;
pub mod mapper;
pub mod perf;

pub use cell_array::{ArrayError, CellArray};
pub use compressor::{CompressorError, CompressorSpec};
pub use exec::Strategy;
pub use lut::{Codec, LutError};
pub use mac::{MacError, PrecisionMode};
pub use mapper::MapError;
pub use perf::{EnergyParams, PerfError};
