//! Kernel parameter storage and file formats.
//!
//! On disk a weight set is a little-endian signed 16-bit binary blob in
//! `[layer][out_ch][in_ch][k]` order plus a JSON sidecar carrying per-layer
//! quantization metadata and optional 32-bit biases.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkDef;
use crate::qformat::QFormat;

/// Kernels and bias for a single layer, `[out_ch][in_ch][k]` flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub layer_id: u32,
    pub out_ch: usize,
    pub in_ch: usize,
    pub k: usize,
    pub kernels: Vec<i16>,
    pub bias: Option<Vec<i32>>,
    pub qformat: QFormat,
    pub requant_shift: u32,
}

impl LayerWeights {
    #[inline]
    pub fn weight(&self, oc: usize, ic: usize, tap: usize) -> i16 {
        self.kernels[(oc * self.in_ch + ic) * self.k + tap]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub layers: Vec<LayerWeights>,
}

impl WeightSet {
    pub fn layer(&self, layer_id: u32) -> Option<&LayerWeights> {
        self.layers.iter().find(|l| l.layer_id == layer_id)
    }

    /// Deterministic pseudo-random weights for benchmark runs where trained
    /// parameters are unavailable. Magnitudes are kept small enough that the
    /// default per-layer shifts do not saturate on small-signal inputs.
    pub fn synthetic(net: &NetworkDef, seed: u64) -> WeightSet {
        let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
        let mut next = move || {
            // xorshift64*, plenty for synthetic parameters
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            state.wrapping_mul(0x2545_f491_4f6c_dd1d)
        };
        let mut layers = Vec::with_capacity(net.layers.len());
        for l in &net.layers {
            let count = l.out_ch as usize * l.in_ch as usize * l.k as usize;
            let kernels: Vec<i16> = (0..count).map(|_| ((next() % 193) as i16) - 96).collect();
            let bias = l.bias.then(|| {
                (0..l.out_ch as usize)
                    .map(|_| ((next() % 4001) as i32) - 2000)
                    .collect()
            });
            layers.push(LayerWeights {
                layer_id: l.id,
                out_ch: l.out_ch as usize,
                in_ch: l.in_ch as usize,
                k: l.k as usize,
                kernels,
                bias,
                qformat: QFormat::q8_8(),
                requant_shift: l.requant_shift,
            });
        }
        WeightSet { layers }
    }
}

/// Sidecar entry for one layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarEntry {
    pub layer_id: u32,
    pub frac_bits: u8,
    pub requant_shift: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<i32>>,
}

pub fn write_weights(set: &WeightSet, bin_path: &Path, sidecar_path: &Path) -> Result<()> {
    let mut blob = Vec::new();
    let mut sidecar = Vec::new();
    for l in &set.layers {
        for w in &l.kernels {
            blob.extend_from_slice(&w.to_le_bytes());
        }
        sidecar.push(SidecarEntry {
            layer_id: l.layer_id,
            frac_bits: l.qformat.frac_bits,
            requant_shift: l.requant_shift,
            bias: l.bias.clone(),
        });
    }
    std::fs::write(bin_path, blob)?;
    std::fs::write(sidecar_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

pub fn read_weights(net: &NetworkDef, bin_path: &Path, sidecar_path: &Path) -> Result<WeightSet> {
    let blob = std::fs::read(bin_path)?;
    let sidecar: Vec<SidecarEntry> = serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)?;

    let expected: usize = net
        .layers
        .iter()
        .map(|l| l.out_ch as usize * l.in_ch as usize * l.k as usize * 2)
        .sum();
    if blob.len() != expected {
        return Err(Error::Weights(format!(
            "binary holds {} bytes, network needs {expected}",
            blob.len()
        )));
    }

    let mut offset = 0usize;
    let mut layers = Vec::with_capacity(net.layers.len());
    for l in &net.layers {
        let count = l.out_ch as usize * l.in_ch as usize * l.k as usize;
        let kernels: Vec<i16> = blob[offset..offset + count * 2]
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]))
            .collect();
        offset += count * 2;
        let entry = sidecar
            .iter()
            .find(|e| e.layer_id == l.id)
            .ok_or_else(|| Error::Weights(format!("sidecar missing layer {}", l.id)))?;
        if let Some(b) = &entry.bias {
            if b.len() != l.out_ch as usize {
                return Err(Error::Weights(format!(
                    "layer {} bias has {} entries, expected {}",
                    l.id,
                    b.len(),
                    l.out_ch
                )));
            }
        }
        layers.push(LayerWeights {
            layer_id: l.id,
            out_ch: l.out_ch as usize,
            in_ch: l.in_ch as usize,
            k: l.k as usize,
            kernels,
            bias: entry.bias.clone(),
            qformat: QFormat::new(entry.frac_bits)?,
            requant_shift: entry.requant_shift,
        });
    }
    Ok(WeightSet { layers })
}
