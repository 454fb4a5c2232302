//! Network description: dilated 1-D convolutional layer stacks, their
//! receptive fields, streaming window plans, workloads and memory footprints.
//!
//! A network is an ordered chain of layers: layer `i` consumes the output of
//! layer `i - 1` (layer 0 consumes the external input). A layer may
//! additionally tap the output of an earlier layer as an element-wise
//! residual addend.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_STRIDE: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    None,
}

/// One dilated 1-D convolutional layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerDef {
    pub id: u32,
    pub in_ch: u32,
    pub out_ch: u32,
    /// Kernel size, >= 1.
    pub k: u32,
    /// Dilation rate, >= 1.
    pub d: u32,
    /// Temporal stride; the hardware supports 1..=3.
    pub stride: u32,
    /// Earlier layer whose output is added element-wise to this layer's
    /// convolution output, aligned at the window end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_from: Option<u32>,
    pub activation: Activation,
    #[serde(default)]
    pub bias: bool,
    /// Arithmetic right shift applied to the accumulator on requantization.
    pub requant_shift: u32,
}

impl LayerDef {
    /// Minimum input samples per channel to produce one output sample:
    /// `1 + (k - 1) * d`.
    pub fn local_receptive_field(&self) -> u64 {
        1 + (self.k as u64 - 1) * self.d as u64
    }
}

/// Per-layer local receptive field; see [`LayerDef::local_receptive_field`].
pub fn local_receptive_field(layer: &LayerDef) -> u64 {
    layer.local_receptive_field()
}

/// An ordered stack of layers plus input metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDef {
    pub name: String,
    pub input_channels: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub layers: Vec<LayerDef>,
}

impl NetworkDef {
    /// Channel count feeding layer `index`.
    pub fn in_channels_of(&self, index: usize) -> u32 {
        if index == 0 {
            self.input_channels
        } else {
            self.layers[index - 1].out_ch
        }
    }

    pub fn layer_index(&self, id: u32) -> Option<usize> {
        self.layers.iter().position(|l| l.id == id)
    }

    pub fn output_channels(&self) -> u32 {
        self.layers.last().map(|l| l.out_ch).unwrap_or(0)
    }

    /// Validate all structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Network("network has no layers".into()));
        }
        if self.input_channels == 0 {
            return Err(Error::Network("input_channels must be positive".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut prev_id: Option<u32> = None;
        for (i, layer) in self.layers.iter().enumerate() {
            let lid = layer.id;
            if !seen.insert(lid) {
                return Err(Error::Invariant {
                    layer: lid,
                    message: "duplicate layer id".into(),
                });
            }
            if let Some(p) = prev_id {
                if lid <= p {
                    return Err(Error::Invariant {
                        layer: lid,
                        message: format!("layer ids must be increasing (previous id {p})"),
                    });
                }
            }
            prev_id = Some(lid);
            if layer.k < 1 {
                return Err(Error::Invariant {
                    layer: lid,
                    message: "kernel size k must be >= 1".into(),
                });
            }
            if layer.d < 1 {
                return Err(Error::Invariant {
                    layer: lid,
                    message: "dilation d must be >= 1".into(),
                });
            }
            if layer.stride < 1 || layer.stride > MAX_STRIDE {
                return Err(Error::Invariant {
                    layer: lid,
                    message: format!(
                        "stride {} outside supported range 1..={MAX_STRIDE}",
                        layer.stride
                    ),
                });
            }
            if layer.in_ch == 0 || layer.out_ch == 0 {
                return Err(Error::Invariant {
                    layer: lid,
                    message: "channel counts must be positive".into(),
                });
            }
            let expect_in = self.in_channels_of(i);
            if layer.in_ch != expect_in {
                return Err(Error::Invariant {
                    layer: lid,
                    message: format!(
                        "in_ch {} does not match producing channel count {expect_in}",
                        layer.in_ch
                    ),
                });
            }
            if let Some(rid) = layer.residual_from {
                let Some(ridx) = self.layer_index(rid) else {
                    return Err(Error::Invariant {
                        layer: lid,
                        message: format!("residual_from references unknown layer {rid}"),
                    });
                };
                if ridx >= i {
                    return Err(Error::Invariant {
                        layer: lid,
                        message: format!("residual_from {rid} is not an earlier layer"),
                    });
                }
                let src = &self.layers[ridx];
                if src.out_ch != layer.out_ch {
                    return Err(Error::Invariant {
                        layer: lid,
                        message: format!(
                            "residual source layer {rid} has {} output channels, layer needs {}",
                            src.out_ch, layer.out_ch
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Parse a network definition document (UTF-8 JSON) and validate it.
pub fn parse_network(text: &str) -> Result<NetworkDef> {
    let net: NetworkDef = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!(
            "network document line {} column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    net.validate()?;
    Ok(net)
}

/// Serialize a network back to its document form.
pub fn serialize_network(net: &NetworkDef) -> String {
    serde_json::to_string_pretty(net).expect("network serialization cannot fail")
}

/// Minimum input-sequence length needed for one valid output sample.
///
/// Per-layer contributions `(k - 1) * d` are scaled by the product of the
/// strides of all preceding layers, since one sample step at depth `l`
/// spans that many samples of the original input.
pub fn receptive_field(net: &NetworkDef) -> u64 {
    let mut rf = 1u64;
    let mut stride_product = 1u64;
    for layer in &net.layers {
        rf += (layer.k as u64 - 1) * layer.d as u64 * stride_product;
        stride_product *= layer.stride as u64;
    }
    rf
}

/// Steady-state per-layer sample counts for an execution that emits `B`
/// final output samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamPlan {
    pub output_batch: u64,
    pub layers: Vec<LayerWindow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerWindow {
    pub layer_id: u32,
    /// Samples per input channel the layer reads in one execution
    /// (`RF_local + (out_samples - 1) * stride`).
    pub in_samples: u64,
    /// New output samples the layer produces in one execution.
    pub out_samples: u64,
}

/// Back-propagate sample counts from the final layer (B outputs) to the
/// input. In steady state each layer only has to produce the *new* samples
/// the next layer consumes, i.e. `out(l) = out(l+1) * stride(l+1)`; history
/// within each window is retained between executions.
pub fn plan_stream(net: &NetworkDef, batch: u64) -> Result<StreamPlan> {
    if batch < 1 {
        return Err(Error::Network("batch size must be >= 1".into()));
    }
    net.validate()?;
    let n = net.layers.len();
    let mut windows = vec![
        LayerWindow {
            layer_id: 0,
            in_samples: 0,
            out_samples: 0
        };
        n
    ];
    let mut out = batch;
    for i in (0..n).rev() {
        let layer = &net.layers[i];
        windows[i] = LayerWindow {
            layer_id: layer.id,
            in_samples: layer.local_receptive_field() + (out - 1) * layer.stride as u64,
            out_samples: out,
        };
        out *= layer.stride as u64;
    }
    Ok(StreamPlan {
        output_batch: batch,
        layers: windows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workload {
    pub macs: u64,
    pub ops: u64,
}

/// Multiply-accumulate count for one execution under `plan`. Residual adds
/// and activations are excluded.
pub fn workload(net: &NetworkDef, plan: &StreamPlan) -> Workload {
    let mut macs = 0u64;
    for (layer, window) in net.layers.iter().zip(&plan.layers) {
        macs += layer.in_ch as u64 * layer.out_ch as u64 * layer.k as u64 * window.out_samples;
    }
    Workload {
        macs,
        ops: 2 * macs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryFootprint {
    pub weights_bytes: u64,
    pub activations_bytes: u64,
}

/// External-memory footprint of one execution: all kernels (plus 32-bit bias
/// terms where present) and every layer's input window, plus the final
/// output. Two bytes per sample and per weight.
pub fn memory_footprint(net: &NetworkDef, plan: &StreamPlan) -> MemoryFootprint {
    let mut weights = 0u64;
    let mut activations = 0u64;
    for (layer, window) in net.layers.iter().zip(&plan.layers) {
        weights += layer.k as u64 * layer.in_ch as u64 * layer.out_ch as u64 * 2;
        if layer.bias {
            weights += layer.out_ch as u64 * 4;
        }
        activations += window.in_samples * layer.in_ch as u64 * 2;
    }
    if let (Some(layer), Some(window)) = (net.layers.last(), plan.layers.last()) {
        activations += window.out_samples * layer.out_ch as u64 * 2;
    }
    MemoryFootprint {
        weights_bytes: weights,
        activations_bytes: activations,
    }
}
