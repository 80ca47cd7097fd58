//! Layer descriptions and the JSON model file.
//!
//! ```json
//! { "name": "digits-mlp", "input_shape": [64], "weights": "mlp_weights.csv",
//!   "layers": [ { "kind": "dense", "in_features": 64, "out_features": 32,
//!                 "activation": "relu", "precision": "i4",
//!                 "weight": "fc1.weight", "bias": "fc1.bias" } ] }
//! ```
//!
//! Dense weights are `[out, in]`; conv weights are `[out_c, in_c, kh, kw]`
//! with valid padding. Layer inputs and outputs are flat row-major vectors
//! (`[c, h, w]` for conv layers).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tensor::{load_weights, Tensor, TensorSet};
use super::MapError;
use crate::mac::{PrecisionMode, Signedness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    Dense {
        in_features: usize,
        out_features: usize,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
        stride: usize,
        input_hw: [usize; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    #[serde(flatten)]
    pub kind: LayerKind,
    pub activation: Activation,
    pub precision: PrecisionMode,
    pub weight: String,
    #[serde(default)]
    pub bias: Option<String>,
}

impl LayerSpec {
    pub fn dense(in_features: usize, out_features: usize, precision: PrecisionMode) -> Self {
        Self {
            kind: LayerKind::Dense {
                in_features,
                out_features,
            },
            activation: Activation::None,
            precision,
            weight: "weight".into(),
            bias: None,
        }
    }

    pub fn validate(&self) -> Result<(), MapError> {
        let positive = match &self.kind {
            LayerKind::Dense {
                in_features,
                out_features,
            } => *in_features > 0 && *out_features > 0,
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                input_hw,
            } => {
                *in_channels > 0
                    && *out_channels > 0
                    && kernel.iter().all(|&k| k > 0)
                    && *stride > 0
                    && kernel[0] <= input_hw[0]
                    && kernel[1] <= input_hw[1]
            }
        };
        if !positive {
            return Err(MapError::InvalidLayer(format!("non-positive shape in {:?}", self.kind)));
        }
        if self.precision.signedness() == Signedness::Unsigned || self.precision.bits() > 32 {
            return Err(MapError::InvalidLayer(format!(
                "layer precision {} must be signed (or bipolar) and at most 32 bits",
                self.precision
            )));
        }
        Ok(())
    }

    pub fn weight_shape(&self) -> Vec<usize> {
        match &self.kind {
            LayerKind::Dense {
                in_features,
                out_features,
            } => vec![*out_features, *in_features],
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![*out_channels, *in_channels, kernel[0], kernel[1]],
        }
    }

    pub fn weight_count(&self) -> usize {
        self.weight_shape().iter().product()
    }

    pub fn out_channels(&self) -> usize {
        self.weight_shape()[0]
    }

    /// Output spatial size (1×1 for dense layers).
    pub fn output_hw(&self) -> [usize; 2] {
        match &self.kind {
            LayerKind::Dense { .. } => [1, 1],
            LayerKind::Conv2d {
                kernel,
                stride,
                input_hw,
                ..
            } => [
                (input_hw[0] - kernel[0]) / stride + 1,
                (input_hw[1] - kernel[1]) / stride + 1,
            ],
        }
    }

    /// Number of input positions each weight is applied to.
    pub fn reuse(&self) -> usize {
        let [h, w] = self.output_hw();
        h * w
    }

    pub fn input_len(&self) -> usize {
        match &self.kind {
            LayerKind::Dense { in_features, .. } => *in_features,
            LayerKind::Conv2d {
                in_channels,
                input_hw,
                ..
            } => in_channels * input_hw[0] * input_hw[1],
        }
    }

    pub fn output_len(&self) -> usize {
        self.out_channels() * self.reuse()
    }

    /// Dot-product length per output.
    pub fn fan_in(&self) -> usize {
        self.weight_count() / self.out_channels()
    }

    /// For output position `p`, the input index feeding each of the
    /// `fan_in` kernel taps (identity for dense layers).
    pub fn receptive_field(&self, p: usize) -> Vec<usize> {
        match &self.kind {
            LayerKind::Dense { in_features, .. } => (0..*in_features).collect(),
            LayerKind::Conv2d {
                in_channels,
                kernel,
                stride,
                input_hw,
                ..
            } => {
                let ow = self.output_hw()[1];
                let (oy, ox) = (p / ow, p % ow);
                let mut idx = Vec::with_capacity(in_channels * kernel[0] * kernel[1]);
                for c in 0..*in_channels {
                    for ky in 0..kernel[0] {
                        for kx in 0..kernel[1] {
                            let y = oy * stride + ky;
                            let x = ox * stride + kx;
                            idx.push((c * input_hw[0] + y) * input_hw[1] + x);
                        }
                    }
                }
                idx
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub weight: Tensor,
    pub bias: Option<Tensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    name: String,
    #[serde(default)]
    input_shape: Vec<usize>,
    weights: String,
    layers: Vec<LayerSpec>,
}

impl Model {
    /// Builds a model, checking tensor shapes and layer chaining.
    pub fn new(name: impl Into<String>, layers: Vec<Layer>) -> Result<Self, MapError> {
        if layers.is_empty() {
            return Err(MapError::InvalidLayer("model has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            l.spec.validate()?;
            if l.weight.shape != l.spec.weight_shape() {
                return Err(MapError::ShapeMismatch(format!(
                    "layer {i} weight {:?}, expected {:?}",
                    l.weight.shape,
                    l.spec.weight_shape()
                )));
            }
            if let Some(b) = &l.bias {
                if b.shape != [l.spec.out_channels()] {
                    return Err(MapError::ShapeMismatch(format!(
                        "layer {i} bias {:?}, expected [{}]",
                        b.shape,
                        l.spec.out_channels()
                    )));
                }
            }
            if i > 0 && layers[i - 1].spec.output_len() != l.spec.input_len() {
                return Err(MapError::ShapeMismatch(format!(
                    "layer {} outputs {} values, layer {i} expects {}",
                    i - 1,
                    layers[i - 1].spec.output_len(),
                    l.spec.input_len()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            layers,
        })
    }

    pub fn from_specs(name: &str, specs: Vec<LayerSpec>, tensors: &TensorSet) -> Result<Self, MapError> {
        let fetch = |key: &str| {
            tensors
                .get(key)
                .cloned()
                .ok_or_else(|| MapError::ShapeMismatch(format!("tensor {key:?} not in weight file")))
        };
        let layers = specs
            .into_iter()
            .map(|spec| {
                Ok(Layer {
                    weight: fetch(&spec.weight)?,
                    bias: spec.bias.as_deref().map(fetch).transpose()?,
                    spec,
                })
            })
            .collect::<Result<Vec<_>, MapError>>()?;
        Self::new(name, layers)
    }

    /// Loads a JSON model file; the weight CSV path is relative to it.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MapError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| MapError::Io(format!("{}: {e}", path.display())))?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| MapError::InvalidModel(e.to_string()))?;
        let weights = path.parent().unwrap_or(Path::new(".")).join(&file.weights);
        let tensors = load_weights(weights)?;
        let model = Self::from_specs(&file.name, file.layers, &tensors)?;
        let expected: usize = file.input_shape.iter().product();
        if !file.input_shape.is_empty() && expected != model.input_len() {
            return Err(MapError::ShapeMismatch(format!(
                "input_shape {:?} but first layer takes {}",
                file.input_shape,
                model.input_len()
            )));
        }
        Ok(model)
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].spec.input_len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_json() {
        let text = r#"{"kind":"conv2d","in_channels":1,"out_channels":4,"kernel":[3,3],
            "stride":1,"input_hw":[8,8],"activation":"relu","precision":"i8",
            "weight":"c.w","bias":"c.b"}"#;
        let l: LayerSpec = serde_json::from_str(text).unwrap();
        assert_eq!(l.output_hw(), [6, 6]);
        assert_eq!(l.output_len(), 144);
        assert_eq!(l.fan_in(), 9);
        assert_eq!(l.receptive_field(7), vec![9, 10, 11, 17, 18, 19, 25, 26, 27]);
        assert_eq!(l.precision, PrecisionMode::signed(8).unwrap());
        assert!(serde_json::from_str::<LayerSpec>(&text.replace("i8", "i5")).is_err());
    }

    #[test]
    fn rejects_unsigned_layers() {
        let l = LayerSpec::dense(2, 2, PrecisionMode::unsigned(4).unwrap());
        assert!(l.validate().is_err());
    }
}
