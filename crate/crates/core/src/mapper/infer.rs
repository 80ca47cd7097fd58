//! Quantized inference through the simulated macro.
//!
//! Weights are globally pruned, then quantized per tensor at the layer's
//! precision. Activations are requantized per sample at each layer input.
//! Every output is one dot product through the MAC engine, to which the
//! integer bias `round(b / (s_in · s_w))` is added on the host; ReLU runs on
//! the integer accumulators, sigmoid/tanh/softmax go through 4-bit LUTs.
//! Predictions are the argmax of the last layer's pre-activation outputs.

use num_traits::ToPrimitive;
use serde::Serialize;

use super::model::{Activation, Model};
use super::quant::{prune_global, quantize, Quantized};
use super::schedule::{map_layer, MacroGeometry, TileSchedule};
use super::tensor::EvalSet;
use super::MapError;
use crate::cell_array::CellArray;
use crate::compressor::CompressorSpec;
use crate::exec::{self, Strategy};
use crate::lut::{relu_vector, softmax_with, Codec, LutFunction, LutTable};
use crate::mac::{dot, PrecisionMode};
use crate::perf::OpTally;

#[derive(Debug, Clone, Copy)]
pub struct InferenceOptions {
    pub prune_fraction: f64,
    pub codec: Codec,
    pub geometry: MacroGeometry,
    pub strategy: Strategy,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        Self {
            prune_fraction: 0.4,
            codec: Codec::Fp4,
            geometry: MacroGeometry::default(),
            strategy: Strategy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedLayer {
    pub weights: Quantized,
    pub bias: Vec<f64>,
    pub zero_weights: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedModel {
    pub model: Model,
    pub layers: Vec<QuantizedLayer>,
    /// Fraction of weights zeroed by pruning.
    pub sparsity: f64,
}

/// Prunes (globally, weights only) and quantizes a model.
pub fn prepare(model: &Model, prune_fraction: f64) -> Result<QuantizedModel, MapError> {
    let mut pruned = model.clone();
    let total: usize = pruned.layers.iter().map(|l| l.weight.len()).sum();
    let removed = {
        let mut refs: Vec<&mut [f64]> = pruned
            .layers
            .iter_mut()
            .map(|l| l.weight.data.as_mut_slice())
            .collect();
        prune_global(&mut refs, prune_fraction)?
    };
    let layers = pruned
        .layers
        .iter()
        .map(|l| {
            let weights = quantize(&l.weight.data, l.spec.precision.bits())?;
            Ok(QuantizedLayer {
                zero_weights: weights.values.iter().filter(|&&v| v == 0).count(),
                weights,
                bias: l
                    .bias
                    .as_ref()
                    .map_or_else(|| vec![0.0; l.spec.out_channels()], |b| b.data.clone()),
            })
        })
        .collect::<Result<Vec<_>, MapError>>()?;
    Ok(QuantizedModel {
        model: pruned,
        layers,
        sparsity: removed as f64 / total.max(1) as f64,
    })
}

/// LUTs for the LUT-backed activations, built once per run.
#[derive(Debug)]
pub struct ActivationLuts {
    pub sigmoid: LutTable,
    pub tanh: LutTable,
    pub exp: LutTable,
}

impl ActivationLuts {
    pub fn new(codec: Codec) -> Result<Self, MapError> {
        let build = |f| LutTable::build(f, codec, CellArray::default());
        Ok(Self {
            sigmoid: build(LutFunction::Sigmoid)?,
            tanh: build(LutFunction::Tanh)?,
            exp: build(LutFunction::SoftmaxExp)?,
        })
    }

    fn tally(&self) -> OpTally {
        let mut t = OpTally::default();
        for table in [&self.sigmoid, &self.tanh, &self.exp] {
            t.record_lookups(table.lookup_count(), table.search_bit_count());
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutput {
    /// Per layer: quantized input activations.
    pub inputs: Vec<Vec<i128>>,
    /// Per layer: activation scale used to quantize the input.
    pub input_scales: Vec<f64>,
    /// Per layer: integer accumulators (dot product + bias) before activation.
    pub accumulators: Vec<Vec<i128>>,
    /// Dequantized last-layer values before activation.
    pub logits: Vec<f64>,
    /// Last-layer values after activation.
    pub output: Vec<f64>,
    pub tally: OpTally,
}

impl SampleOutput {
    pub fn prediction(&self) -> usize {
        argmax(&self.logits)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn lut_apply(table: &LutTable, codec: Codec, y: &[f64]) -> Result<Vec<f64>, MapError> {
    y.iter()
        .map(|&v| Ok(table.eval(codec.encode(v)?)?))
        .collect()
}

/// Runs one sample through the quantized model on the simulated macro.
pub fn forward_quantized(
    qm: &QuantizedModel,
    x: &[f64],
    spec: &CompressorSpec,
    luts: &ActivationLuts,
) -> Result<SampleOutput, MapError> {
    if x.len() != qm.model.input_len() {
        return Err(MapError::ShapeMismatch(format!(
            "sample has {} features, model expects {}",
            x.len(),
            qm.model.input_len()
        )));
    }
    let codec = luts.exp.codec();
    let mut out = SampleOutput {
        inputs: Vec::new(),
        input_scales: Vec::new(),
        accumulators: Vec::new(),
        logits: Vec::new(),
        output: Vec::new(),
        tally: OpTally::default(),
    };
    let mut h = x.to_vec();
    for (layer, ql) in qm.model.layers.iter().zip(&qm.layers) {
        let spec_l = &layer.spec;
        let mode = spec_l.precision;
        let xq = quantize(&h, mode.bits())?;
        let scale = xq.scale * ql.weights.scale;
        let fan_in = spec_l.fan_in();
        let mut z = Vec::with_capacity(spec_l.output_len());
        for oc in 0..spec_l.out_channels() {
            let w = &ql.weights.values[oc * fan_in..(oc + 1) * fan_in];
            let zeros = w.iter().filter(|&&v| v == 0).count() as u64;
            let bias_q = (ql.bias[oc] / scale).round() as i128;
            for p in 0..spec_l.reuse() {
                let a: Vec<i128> = spec_l
                    .receptive_field(p)
                    .into_iter()
                    .map(|i| xq.values[i])
                    .collect();
                let r = dot(&a, w, mode, spec)?;
                out.tally.record_mac(&r, mode);
                out.tally.skip_products(zeros, mode);
                let acc = r.values[0]
                    .to_i128()
                    .ok_or_else(|| MapError::InvalidModel("accumulator overflow".into()))?;
                z.push(acc + bias_q);
            }
        }
        if spec_l.activation == Activation::Relu {
            z = relu_vector(&z, PrecisionMode::signed(64).expect("supported"))?;
        }
        let y: Vec<f64> = z.iter().map(|&v| v as f64 * scale).collect();
        out.logits = y.clone();
        h = match spec_l.activation {
            Activation::Relu | Activation::None => y,
            Activation::Sigmoid => lut_apply(&luts.sigmoid, codec, &y)?,
            Activation::Tanh => lut_apply(&luts.tanh, codec, &y)?,
            Activation::Softmax => {
                let codes = y.iter().map(|&v| codec.encode(v)).collect::<Result<Vec<_>, _>>()?;
                softmax_with(&luts.exp, &codes)?
            }
        };
        out.inputs.push(xq.values);
        out.input_scales.push(xq.scale);
        out.accumulators.push(z);
    }
    out.output = h;
    Ok(out)
}

/// Float reference with the original (unpruned, unquantized) weights.
/// Returns (pre-activation last layer, final output).
pub fn forward_float(model: &Model, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut h = x.to_vec();
    let mut logits = Vec::new();
    for layer in &model.layers {
        let s = &layer.spec;
        let fan_in = s.fan_in();
        let mut y = Vec::with_capacity(s.output_len());
        for oc in 0..s.out_channels() {
            let w = &layer.weight.data[oc * fan_in..(oc + 1) * fan_in];
            let b = layer.bias.as_ref().map_or(0.0, |b| b.data[oc]);
            for p in 0..s.reuse() {
                let acc: f64 = s
                    .receptive_field(p)
                    .into_iter()
                    .zip(w)
                    .map(|(i, &wv)| h[i] * wv)
                    .sum();
                y.push(acc + b);
            }
        }
        logits = y.clone();
        h = match s.activation {
            Activation::None => y,
            Activation::Relu => y.into_iter().map(|v| v.max(0.0)).collect(),
            Activation::Sigmoid => y.into_iter().map(|v| LutFunction::Sigmoid.eval(v)).collect(),
            Activation::Tanh => y.into_iter().map(f64::tanh).collect(),
            Activation::Softmax => {
                let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = y.iter().map(|v| (v - m).exp()).collect();
                let sum: f64 = e.iter().sum();
                e.into_iter().map(|v| v / sum).collect()
            }
        };
    }
    (logits, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QorReport {
    pub quantized_accuracy: f64,
    pub float_accuracy: f64,
    pub qor: f64,
    pub sparsity: f64,
    pub samples: usize,
}

impl QorReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[derive(Debug, Clone)]
pub struct InferenceReport {
    pub qor: QorReport,
    pub predictions: Vec<usize>,
    pub float_predictions: Vec<usize>,
    pub samples: Vec<SampleOutput>,
    pub schedules: Vec<TileSchedule>,
    pub tally: OpTally,
}

pub fn infer(
    model: &Model,
    eval: &EvalSet,
    spec: &CompressorSpec,
    opts: &InferenceOptions,
) -> Result<InferenceReport, MapError> {
    if eval.is_empty() {
        return Err(MapError::InvalidModel("empty evaluation set".into()));
    }
    let schedules = model
        .layers
        .iter()
        .map(|l| map_layer(&l.spec, opts.geometry))
        .collect::<Result<Vec<_>, _>>()?;
    let qm = prepare(model, opts.prune_fraction)?;
    let luts = ActivationLuts::new(opts.codec)?;
    let samples = exec::map_slice(opts.strategy, &eval.features, |x| {
        forward_quantized(&qm, x, spec, &luts)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let float_predictions: Vec<usize> = exec::map_slice(opts.strategy, &eval.features, |x| {
        argmax(&forward_float(model, x).0)
    });
    let predictions: Vec<usize> = samples.iter().map(SampleOutput::prediction).collect();
    let accuracy = |p: &[usize]| {
        p.iter().zip(&eval.labels).filter(|(a, b)| a == b).count() as f64 / eval.len() as f64
    };
    let quantized_accuracy = accuracy(&predictions);
    let float_accuracy = accuracy(&float_predictions);
    let mut tally = luts.tally();
    for s in &samples {
        tally.merge(&s.tally);
    }
    Ok(InferenceReport {
        qor: QorReport {
            quantized_accuracy,
            float_accuracy,
            qor: if float_accuracy > 0.0 {
                quantized_accuracy / float_accuracy
            } else {
                0.0
            },
            sparsity: qm.sparsity,
            samples: eval.len(),
        },
        predictions,
        float_predictions,
        samples,
        schedules,
        tally,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapper::model::{Layer, LayerSpec};
    use crate::mapper::tensor::Tensor;

    #[test]
    fn identity_layer_returns_quantized_input() {
        let n = 8;
        let mode = PrecisionMode::signed(4).unwrap();
        let mut eye = vec![0.0; n * n];
        for i in 0..n {
            eye[i * n + i] = 1.0;
        }
        let model = Model::new(
            "identity",
            vec![Layer {
                spec: LayerSpec::dense(n, n, mode),
                weight: Tensor::new(vec![n, n], eye).unwrap(),
                bias: None,
            }],
        )
        .unwrap();
        let qm = prepare(&model, 0.0).unwrap();
        let luts = ActivationLuts::new(Codec::Fp4).unwrap();
        let x = vec![0.1, -0.5, 0.9, 0.0, 0.33, -0.7, 0.2, 0.6];
        let out = forward_quantized(&qm, &x, &CompressorSpec::exact(), &luts).unwrap();
        let xq = quantize(&x, 4).unwrap();
        let expected: Vec<i128> = xq.values.iter().map(|v| v * 7).collect();
        assert_eq!(out.accumulators[0], expected);
        for (o, d) in out.output.iter().zip(xq.dequantize()) {
            assert!((o - d).abs() < 1e-12);
        }
    }
}
