//! Bit-exact 16-bit fixed-point execution of dilated 1-D convolutions,
//! single layers and whole networks, both over complete tensors and in
//! sample-by-sample streaming form.
//!
//! Convolutions are causal with fully populated windows (no zero padding):
//! output sample `j` of a layer reads its input window ending at index
//! `j * stride + RF_local - 1`. Accumulation is exact in 64-bit signed
//! integers, the bias is added in the accumulator, and requantization is an
//! arithmetic right shift with round-to-nearest-even followed by saturation
//! to 16 bits. The shift comes from the weight set (the sidecar is the
//! authority for a trained artifact's quantization recipe); the layer field
//! of the same name is the default that synthetic weights inherit.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::network::{Activation, LayerDef, NetworkDef};
use crate::qformat::{rne_shift, sat_add_i16, saturate_i16, QFormat, QTensor};
use crate::weights::{LayerWeights, WeightSet};

/// Saturation bookkeeping across an execution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SaturationStats {
    /// Samples clamped during requantization.
    pub requant: u64,
    /// Samples clamped by the residual add.
    pub residual: u64,
}

impl SaturationStats {
    pub fn total(&self) -> u64 {
        self.requant + self.residual
    }
}

fn check_layer_shapes(input: &QTensor, weights: &LayerWeights, layer: &LayerDef) -> Result<()> {
    if input.channels != layer.in_ch as usize {
        return Err(Error::Shape(format!(
            "layer {}: input has {} channels, layer expects {}",
            layer.id, input.channels, layer.in_ch
        )));
    }
    if weights.out_ch != layer.out_ch as usize
        || weights.in_ch != layer.in_ch as usize
        || weights.k != layer.k as usize
    {
        return Err(Error::Shape(format!(
            "layer {}: weight extents ({}x{}x{}) do not match layer ({}x{}x{})",
            layer.id, weights.out_ch, weights.in_ch, weights.k, layer.out_ch, layer.in_ch, layer.k
        )));
    }
    let rf = layer.local_receptive_field() as usize;
    if input.length < rf {
        return Err(Error::Shape(format!(
            "layer {}: input window of {} samples is shorter than the local receptive field {}",
            layer.id, input.length, rf
        )));
    }
    Ok(())
}

/// Requantize one accumulator value: shift with round-to-nearest-even, then
/// saturate to 16 bits.
#[inline]
pub fn requantize(acc: i64, shift: u32, stats: &mut SaturationStats) -> i16 {
    let (v, clamped) = saturate_i16(rne_shift(acc, shift));
    if clamped {
        stats.requant += 1;
    }
    v
}

/// Dilated causal convolution of a full input tensor.
///
/// Output length is `floor((input.length - RF_local) / stride) + 1`.
pub fn dilated_conv1d(
    input: &QTensor,
    weights: &LayerWeights,
    layer: &LayerDef,
    stats: &mut SaturationStats,
) -> Result<QTensor> {
    check_layer_shapes(input, weights, layer)?;
    let rf = layer.local_receptive_field() as usize;
    let stride = layer.stride as usize;
    let d = layer.d as usize;
    let k = layer.k as usize;
    let out_len = (input.length - rf) / stride + 1;
    let mut out = QTensor::new(layer.out_ch as usize, out_len, input.qformat);
    for oc in 0..layer.out_ch as usize {
        let bias = weights.bias.as_ref().map_or(0i64, |b| b[oc] as i64);
        for j in 0..out_len {
            let end = j * stride + rf - 1;
            let mut acc = bias;
            for ic in 0..layer.in_ch as usize {
                let x = input.channel(ic);
                for i in 0..k {
                    acc += weights.weight(oc, ic, i) as i64 * x[end - d * i] as i64;
                }
            }
            out.set(oc, j, requantize(acc, weights.requant_shift, stats));
        }
    }
    Ok(out)
}

/// Convolution plus optional residual add and activation.
///
/// The residual tensor must be time-aligned with the convolution output
/// (same channel count and length); it is added with 16-bit saturation.
pub fn run_layer(
    layer: &LayerDef,
    input: &QTensor,
    residual: Option<&QTensor>,
    weights: &LayerWeights,
    stats: &mut SaturationStats,
) -> Result<QTensor> {
    let mut out = dilated_conv1d(input, weights, layer, stats)?;
    if let Some(res) = residual {
        if res.channels != out.channels || res.length != out.length {
            return Err(Error::Shape(format!(
                "layer {}: residual is {}x{}, output is {}x{}",
                layer.id, res.channels, res.length, out.channels, out.length
            )));
        }
        for c in 0..out.channels {
            for t in 0..out.length {
                let (v, clamped) = sat_add_i16(out.get(c, t), res.get(c, t));
                if clamped {
                    stats.residual += 1;
                }
                out.set(c, t, v);
            }
        }
    }
    if layer.activation == Activation::Relu {
        for v in out.data.iter_mut() {
            if *v < 0 {
                *v = 0;
            }
        }
    }
    Ok(out)
}

/// Residual tap of layer `index`: maps one of its output ordinals to the
/// ordinal of the source layer's output stream by composing each
/// intermediate layer's window-end map `j -> j * stride + RF_local - 1`.
pub fn residual_tap_index(net: &NetworkDef, index: usize, source_index: usize, j: u64) -> u64 {
    let mut t = j;
    for l in (source_index + 1..=index).rev() {
        let layer = &net.layers[l];
        t = t * layer.stride as u64 + layer.local_receptive_field() - 1;
    }
    t
}

/// Whole-tensor network execution, layer by layer. Returns every layer's
/// output; the last entry is the network output.
pub fn run_network_unrolled(
    net: &NetworkDef,
    weights: &WeightSet,
    input: &QTensor,
    stats: &mut SaturationStats,
) -> Result<Vec<QTensor>> {
    net.validate()?;
    let mut outputs: Vec<QTensor> = Vec::with_capacity(net.layers.len());
    for (i, layer) in net.layers.iter().enumerate() {
        let src = if i == 0 { input } else { &outputs[i - 1] };
        let lw = weights
            .layer(layer.id)
            .ok_or_else(|| Error::Weights(format!("no weights for layer {}", layer.id)))?;
        let residual = match layer.residual_from {
            None => None,
            Some(rid) => {
                let ridx = net.layer_index(rid).expect("validated");
                let conv_len = {
                    let rf = layer.local_receptive_field() as usize;
                    if src.length < rf {
                        return Err(Error::Shape(format!(
                            "layer {}: input window of {} samples is shorter than the local receptive field {}",
                            layer.id, src.length, rf
                        )));
                    }
                    (src.length - rf) / layer.stride as usize + 1
                };
                let source = &outputs[ridx];
                let mut res = QTensor::new(source.channels, conv_len, source.qformat);
                for j in 0..conv_len {
                    let t = residual_tap_index(net, i, ridx, j as u64) as usize;
                    // The convolution window itself required this sample.
                    debug_assert!(t < source.length);
                    for c in 0..source.channels {
                        res.set(c, j, source.get(c, t));
                    }
                }
                Some(res)
            }
        };
        let out = run_layer(layer, src, residual.as_ref(), lw, stats)?;
        outputs.push(out);
    }
    Ok(outputs)
}

/// Absolute-indexed sample history for one stream (channels x time).
struct History {
    channels: usize,
    capacity: usize,
    base: u64,
    data: Vec<VecDeque<i16>>,
}

impl History {
    fn new(channels: usize, capacity: usize) -> Self {
        Self {
            channels,
            capacity,
            base: 0,
            data: (0..channels).map(|_| VecDeque::new()).collect(),
        }
    }

    fn push(&mut self, frame: &[i16]) {
        debug_assert_eq!(frame.len(), self.channels);
        for (q, &v) in self.data.iter_mut().zip(frame) {
            q.push_back(v);
        }
        if self.data[0].len() > self.capacity {
            for q in self.data.iter_mut() {
                q.pop_front();
            }
            self.base += 1;
        }
    }

    fn end(&self) -> u64 {
        self.base + self.data[0].len() as u64
    }

    #[inline]
    fn get(&self, channel: usize, abs: u64) -> i16 {
        debug_assert!(abs >= self.base, "history trimmed past a needed sample");
        self.data[channel][(abs - self.base) as usize]
    }
}

struct LayerState {
    history: History,
    /// Number of output samples produced so far.
    produced: u64,
    /// Retained output samples for layers tapped by a residual connection.
    retain: Option<History>,
}

/// Incremental network execution with per-layer history buffers.
///
/// Feed input frames one at a time; finished output frames are appended to
/// an internal queue grouped in batches of `B`. One session must be fed from
/// a single producer; separate sessions are independent.
pub struct StreamingRunner<'a> {
    net: &'a NetworkDef,
    weights: &'a WeightSet,
    batch: u64,
    layers: Vec<LayerState>,
    pending: Vec<Vec<i16>>,
    emitted: Vec<Vec<i16>>,
    pub stats: SaturationStats,
    qformat: QFormat,
}

impl<'a> StreamingRunner<'a> {
    pub fn new(net: &'a NetworkDef, weights: &'a WeightSet, batch: u64) -> Result<Self> {
        net.validate()?;
        if batch < 1 {
            return Err(Error::Network("batch size must be >= 1".into()));
        }
        let mut retained: Vec<Option<usize>> = vec![None; net.layers.len()];
        for (i, layer) in net.layers.iter().enumerate() {
            if let Some(rid) = layer.residual_from {
                let ridx = net.layer_index(rid).expect("validated");
                // Retain enough of the source stream to serve the composed
                // window-end taps plus stride slack.
                let tap0 = residual_tap_index(net, i, ridx, 0);
                let rate: u64 = net.layers[ridx + 1..=i]
                    .iter()
                    .map(|l| l.stride as u64)
                    .product();
                let need = (tap0 + rate + 8) as usize;
                let slot = &mut retained[ridx];
                *slot = Some(slot.map_or(need, |n| n.max(need)));
            }
        }
        let mut layers = Vec::with_capacity(net.layers.len());
        for (i, layer) in net.layers.iter().enumerate() {
            let rf = layer.local_receptive_field() as usize;
            layers.push(LayerState {

                history: History::new(layer.in_ch as usize, rf + layer.stride as usize + 4),
                produced: 0,
                retain: retained[i].map(|cap| History::new(layer.out_ch as usize, cap)),
            });
        }
        let qformat = QFormat::q8_8();
        Ok(Self {
            net,
            weights,
            batch,
            layers,
            pending: Vec::new(),
            emitted: Vec::new(),
            stats: SaturationStats::default(),
            qformat,
        })
    }

    /// Push one input frame (one sample per input channel).
    pub fn feed_frame(&mut self, frame: &[i16]) -> Result<()> {
        if frame.len() != self.net.input_channels as usize {
            return Err(Error::Shape(format!(
                "input frame has {} channels, network expects {}",
                frame.len(),
                self.net.input_channels
            )));
        }
        self.cascade(0, frame)?;
        while self.pending.len() >= self.batch as usize {
            let rest = self.pending.split_off(self.batch as usize);
            self.emitted.append(&mut self.pending);
            self.pending = rest;
        }
        Ok(())
    }

    fn cascade(&mut self, index: usize, frame: &[i16]) -> Result<()> {
        self.layers[index].history.push(frame);
        loop {
            let layer = &self.net.layers[index];
            let rf = layer.local_receptive_field();
            let produced = self.layers[index].produced;
            let end = produced * layer.stride as u64 + rf - 1;
            if end >= self.layers[index].history.end() {
                return Ok(());
            }
            let out_frame = self.step_layer(index, produced, end)?;
            self.layers[index].produced += 1;
            if let Some(retain) = &mut self.layers[index].retain {
                retain.push(&out_frame);
            }
            if index + 1 < self.net.layers.len() {
                self.cascade(index + 1, &out_frame)?;
            } else {
                self.pending.push(out_frame);
            }
        }
    }

    fn step_layer(&mut self, index: usize, j: u64, end: u64) -> Result<Vec<i16>> {
        let layer = &self.net.layers[index];
        let lw = self
            .weights
            .layer(layer.id)
            .ok_or_else(|| Error::Weights(format!("no weights for layer {}", layer.id)))?;
        let d = layer.d as u64;
        let k = layer.k as usize;
        let hist = &self.layers[index].history;
        let mut frame = vec![0i16; layer.out_ch as usize];
        for oc in 0..layer.out_ch as usize {
            let bias = lw.bias.as_ref().map_or(0i64, |b| b[oc] as i64);
            let mut acc = bias;
            for ic in 0..layer.in_ch as usize {
                for i in 0..k {
                    acc += lw.weight(oc, ic, i) as i64 * hist.get(ic, end - d * i as u64) as i64;
                }
            }
            frame[oc] = requantize(acc, lw.requant_shift, &mut self.stats);
        }
        if let Some(rid) = layer.residual_from {
            let ridx = self.net.layer_index(rid).expect("validated");
            let tap = residual_tap_index(self.net, index, ridx, j);
            let retain = self.layers[ridx]
                .retain
                .as_ref()
                .expect("residual source retains outputs");
            for (oc, v) in frame.iter_mut().enumerate() {
                let (sum, clamped) = sat_add_i16(*v, retain.get(oc, tap));
                if clamped {
                    self.stats.residual += 1;
                }
                *v = sum;
            }
        }
        if layer.activation == Activation::Relu {
            for v in frame.iter_mut() {
                if *v < 0 {
                    *v = 0;
                }
            }
        }
        Ok(frame)
    }

    /// Emit any outputs still waiting for a full batch.
    pub fn flush(&mut self) {
        self.emitted.append(&mut self.pending);
    }

    /// All emitted output frames as one channels x time tensor.
    pub fn output_tensor(&self) -> QTensor {
        let ch = self.net.output_channels() as usize;
        let len = self.emitted.len();
        let mut out = QTensor::new(ch, len, self.qformat);
        for (t, frame) in self.emitted.iter().enumerate() {
            for (c, &v) in frame.iter().enumerate() {
                out.set(c, t, v);
            }
        }
        out
    }

    pub fn emitted_frames(&self) -> usize {
        self.emitted.len()
    }
}

/// Run a whole input stream through the network in streaming mode and
/// return the concatenated output plus saturation statistics.
///
/// Outputs are emitted in groups of `batch`; the tail shorter than a batch
/// is flushed at end of stream, so the result is independent of `batch`.
pub fn run_network_streaming(
    net: &NetworkDef,
    weights: &WeightSet,
    input: &QTensor,
    batch: u64,
) -> Result<(QTensor, SaturationStats)> {
    let mut runner = StreamingRunner::new(net, weights, batch)?;
    let mut frame = vec![0i16; input.channels];
    for t in 0..input.length {
        for (c, slot) in frame.iter_mut().enumerate() {
            *slot = input.get(c, t);
        }
        runner.feed_frame(&frame)?;
    }
    runner.flush();
    Ok((runner.output_tensor(), runner.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Activation;
    use rand::{Rng, SeedableRng};

    fn layer(id: u32, in_ch: u32, out_ch: u32, k: u32, d: u32, stride: u32) -> LayerDef {
        LayerDef {
            id,
            in_ch,
            out_ch,
            k,
            d,
            stride,
            residual_from: None,
            activation: Activation::None,
            bias: false,
            requant_shift: 0,
        }
    }

    fn weights_for(layer: &LayerDef, kernels: Vec<i16>, bias: Option<Vec<i32>>) -> LayerWeights {
        LayerWeights {
            layer_id: layer.id,
            out_ch: layer.out_ch as usize,
            in_ch: layer.in_ch as usize,
            k: layer.k as usize,
            kernels,
            bias,
            qformat: QFormat::q8_8(),
            requant_shift: layer.requant_shift,
        }
    }

    #[test]
    fn identity_kernel_reproduces_input() {
        // k=1 weight encoding 1.0 in Q8.8 with shift 8 cancels the scaling.
        let mut l = layer(0, 1, 1, 1, 1, 1);
        l.requant_shift = 8;
        let w = weights_for(&l, vec![256], None);
        let input = QTensor::from_data(1, 6, vec![5, -3, 1000, -32768, 32767, 0], QFormat::q8_8())
            .unwrap();
        let mut stats = SaturationStats::default();
        let out = dilated_conv1d(&input, &w, &l, &mut stats).unwrap();
        assert_eq!(out.data, input.data);
        assert_eq!(stats.total(), 0);
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let l = layer(0, 3, 2, 4, 2, 1);
        let w = weights_for(&l, vec![7; 2 * 3 * 4], None);
        let input = QTensor::new(3, 20, QFormat::q8_8());
        let mut stats = SaturationStats::default();
        let out = dilated_conv1d(&input, &w, &l, &mut stats).unwrap();
        assert!(out.data.iter().all(|&v| v == 0));
    }

    #[test]
    fn window_shorter_than_rf_is_rejected() {
        let l = layer(0, 1, 1, 4, 3, 1); // RF = 10
        let w = weights_for(&l, vec![1; 4], None);
        let input = QTensor::new(1, 9, QFormat::q8_8());
        let mut stats = SaturationStats::default();
        assert!(dilated_conv1d(&input, &w, &l, &mut stats).is_err());
    }

    /// Independent brute-force oracle: i128 accumulation over an explicitly
    /// materialized tap list, with its own rounding implementation.
    fn oracle_conv(
        input: &QTensor,
        w: &LayerWeights,
        l: &LayerDef,
    ) -> Vec<i16> {
        let rf = (1 + (l.k - 1) * l.d) as usize;
        let s = l.stride as usize;
        let out_len = (input.length - rf) / s + 1;
        let mut out = Vec::new();
        for oc in 0..l.out_ch as usize {
            for j in 0..out_len {
                let mut acc: i128 = w.bias.as_ref().map_or(0, |b| b[oc] as i128);
                for ic in 0..l.in_ch as usize {
                    for i in 0..l.k as usize {
                        let t = j * s + rf - 1 - i * l.d as usize;
                        acc += w.weight(oc, ic, i) as i128 * input.get(ic, t) as i128;
                    }
                }
                // round half to even via exact rational comparison
                let shift = l.requant_shift;
                let denom: i128 = 1 << shift;
                let two_acc = 2 * acc;
                let mut q = acc.div_euclid(denom);
                let rem2 = two_acc - 2 * q * denom;
                if rem2 > denom || (rem2 == denom && q % 2 != 0) {
                    q += 1;
                }
                let v = q.clamp(i16::MIN as i128, i16::MAX as i128) as i16;
                out.push(v);
            }
        }
        out
    }

    #[test]
    fn conv_matches_brute_force_oracle_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for case in 0..300 {
            let in_ch = rng.gen_range(1..=4);
            let out_ch = rng.gen_range(1..=4);
            let k = rng.gen_range(1..=5);
            let d = rng.gen_range(1..=4);
            let s = rng.gen_range(1..=3);
            let mut l = layer(0, in_ch, out_ch, k, d, s);
            l.requant_shift = rng.gen_range(0..=12);
            let rf = (1 + (k - 1) * d) as usize;
            let len = rf + rng.gen_range(0..=48);
            let kernels: Vec<i16> = (0..(out_ch * in_ch * k) as usize)
                .map(|_| rng.gen_range(i16::MIN..=i16::MAX))
                .collect();
            let bias = rng.gen_bool(0.5).then(|| {
                (0..out_ch as usize)
                    .map(|_| rng.gen_range(-1_000_000..=1_000_000))
                    .collect()
            });
            let w = weights_for(&l, kernels, bias);
            let data: Vec<i16> = (0..in_ch as usize * len)
                .map(|_| rng.gen_range(i16::MIN..=i16::MAX))
                .collect();
            let input = QTensor::from_data(in_ch as usize, len, data, QFormat::q8_8()).unwrap();
            let mut stats = SaturationStats::default();
            let got = dilated_conv1d(&input, &w, &l, &mut stats).unwrap();
            assert_eq!(got.data, oracle_conv(&input, &w, &l), "case {case}: {l:?}");
        }
    }

    #[test]
    fn channel_group_partials_sum_to_untiled_result() {
        // Integer associativity across input-channel groups: the property
        // that licenses tiled accumulation in the scheduler.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let in_ch = rng.gen_range(2..=8usize);
            let k = rng.gen_range(1..=4usize);
            let len = 16;
            let x: Vec<Vec<i16>> = (0..in_ch)
                .map(|_| (0..len).map(|_| rng.gen()).collect())
                .collect();
            let w: Vec<Vec<i16>> = (0..in_ch)
                .map(|_| (0..k).map(|_| rng.gen()).collect())
                .collect();
            let full: i64 = (0..in_ch)
                .map(|ic| {
                    (0..k)
                        .map(|i| w[ic][i] as i64 * x[ic][len - 1 - i] as i64)
                        .sum::<i64>()
                })
                .sum();
            let group = rng.gen_range(1..=in_ch);
            let mut tiled = 0i64;
            for g in (0..in_ch).step_by(group) {
                let hi = (g + group).min(in_ch);
                let partial: i64 = (g..hi)
                    .map(|ic| {
                        (0..k)
                            .map(|i| w[ic][i] as i64 * x[ic][len - 1 - i] as i64)
                            .sum::<i64>()
                    })
                    .sum();
                tiled += partial;
            }
            assert_eq!(full, tiled);
        }
    }

    #[test]
    fn relu_clamps_negative_and_residual_identity_holds() {
        let mut l = layer(0, 1, 1, 1, 1, 1);
        l.activation = Activation::Relu;
        l.requant_shift = 0;
        let w = weights_for(&l, vec![1], None);
        let input = QTensor::from_data(1, 4, vec![-5, 3, -1, 0], QFormat::q8_8()).unwrap();
        let mut stats = SaturationStats::default();
        let out = run_layer(&l, &input, None, &w, &mut stats).unwrap();
        assert_eq!(out.data, vec![0, 3, 0, 0]);

        let zeros = QTensor::new(1, 4, QFormat::q8_8());
        let with_res = run_layer(&l, &input, Some(&zeros), &w, &mut stats).unwrap();
        assert_eq!(with_res.data, out.data);
    }

    #[test]
    fn no_saturation_when_worst_case_accumulator_fits() {
        // Worst-case |acc| = sum |w| * max|x| plus |bias|; when the shifted
        // bound stays inside 16 bits no sample may clamp.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let in_ch = rng.gen_range(1..=4u32);
            let k = rng.gen_range(1..=5u32);
            let mut l = layer(0, in_ch, 2, k, rng.gen_range(1..=3), 1);
            l.requant_shift = 8;
            let kernels: Vec<i16> = (0..(2 * in_ch * k) as usize)
                .map(|_| rng.gen_range(-500..=500))
                .collect();
            let max_x = 900i64;
            let per_oc = (in_ch * k) as usize;
            let worst: i64 = kernels
                .chunks(per_oc)
                .map(|oc| oc.iter().map(|&w| (w as i64).abs() * max_x).sum::<i64>() + 1000)
                .max()
                .unwrap();
            assert!(rne_shift(worst, l.requant_shift) <= i16::MAX as i64);
            let w = weights_for(&l, kernels, Some(vec![1000, -1000]));
            let len = l.local_receptive_field() as usize + 20;
            let data: Vec<i16> = (0..in_ch as usize * len)
                .map(|_| rng.gen_range(-max_x as i16..=max_x as i16))
                .collect();
            let input = QTensor::from_data(in_ch as usize, len, data, QFormat::q8_8()).unwrap();
            let mut stats = SaturationStats::default();
            dilated_conv1d(&input, &w, &l, &mut stats).unwrap();
            assert_eq!(stats.total(), 0);
        }
    }

    #[test]
    fn saturating_residual_add_counts_clamps() {
        let mut l = layer(0, 1, 1, 1, 1, 1);
        l.requant_shift = 0;
        let w = weights_for(&l, vec![1], None);
        let input =
            QTensor::from_data(1, 3, vec![i16::MAX, i16::MAX, 10], QFormat::q8_8()).unwrap();
        let res = QTensor::from_data(1, 3, vec![i16::MAX, 1, -4], QFormat::q8_8()).unwrap();
        let mut stats = SaturationStats::default();
        let out = run_layer(&l, &input, Some(&res), &w, &mut stats).unwrap();
        assert_eq!(out.data, vec![i16::MAX, i16::MAX, 6]);
        assert_eq!(stats.residual, 2);
    }

    fn random_net(rng: &mut impl Rng, with_residual: bool) -> NetworkDef {
        let depth = rng.gen_range(1..=3);
        let mut layers: Vec<LayerDef> = Vec::new();
        let mut ch = rng.gen_range(1..=3u32);
        let input_channels = ch;
        for i in 0..depth {
            let out = rng.gen_range(1..=3u32);
            let mut l = layer(
                i as u32,
                ch,
                out,
                rng.gen_range(1..=3),
                rng.gen_range(1..=3),
                rng.gen_range(1..=2),
            );
            l.requant_shift = rng.gen_range(4..=10);
            l.activation = if rng.gen_bool(0.5) {
                Activation::Relu
            } else {
                Activation::None
            };
            layers.push(l);
            ch = out;
        }
        if with_residual && depth >= 2 {
            // make the last layer tap the previous one when channels permit
            let prev_out = layers[depth - 2].out_ch;
            if layers[depth - 1].out_ch == prev_out {
                layers[depth - 1].residual_from = Some(layers[depth - 2].id);
            }
        }
        NetworkDef {
            name: "rand".into(),
            input_channels,
            sample_rate_hz: None,
            description: None,
            layers,
        }
    }

    #[test]
    fn streaming_matches_unrolled_execution() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        for case in 0..60 {
            let net = random_net(&mut rng, case % 2 == 0);
            let ws = WeightSet::synthetic(&net, case as u64);
            let len = crate::network::receptive_field(&net) as usize + rng.gen_range(0..40);
            let data: Vec<i16> = (0..net.input_channels as usize * len)
                .map(|_| rng.gen_range(-2000..=2000))
                .collect();
            let input =
                QTensor::from_data(net.input_channels as usize, len, data, QFormat::q8_8())
                    .unwrap();
            let mut stats = SaturationStats::default();
            let unrolled = run_network_unrolled(&net, &ws, &input, &mut stats).unwrap();
            let (streamed, _) = run_network_streaming(&net, &ws, &input, 1).unwrap();
            let expect = unrolled.last().unwrap();
            assert_eq!(streamed.channels, expect.channels);
            assert_eq!(streamed.length, expect.length, "case {case}: {net:?}");
            assert_eq!(streamed.data, expect.data, "case {case}");
        }
    }

    #[test]
    fn streaming_output_is_batch_invariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(321);
        let net = random_net(&mut rng, true);
        let ws = WeightSet::synthetic(&net, 5);
        let len = crate::network::receptive_field(&net) as usize + 37;
        let data: Vec<i16> = (0..net.input_channels as usize * len)
            .map(|_| rng.gen_range(-500..=500))
            .collect();
        let input =
            QTensor::from_data(net.input_channels as usize, len, data, QFormat::q8_8()).unwrap();
        let (b1, _) = run_network_streaming(&net, &ws, &input, 1).unwrap();
        let (b8, _) = run_network_streaming(&net, &ws, &input, 8).unwrap();
        assert_eq!(b1, b8);
    }

    #[test]
    fn stream_shorter_than_receptive_field_yields_no_frames() {
        let n = NetworkDef {
            name: "short".into(),
            input_channels: 1,
            sample_rate_hz: None,
            description: None,
            layers: vec![layer(0, 1, 1, 4, 3, 1)], // RF = 10
        };
        let ws = WeightSet::synthetic(&n, 1);
        let input = QTensor::new(1, 9, QFormat::q8_8());
        let (out, _) = run_network_streaming(&n, &ws, &input, 1).unwrap();
        assert_eq!(out.length, 0);
    }
}
