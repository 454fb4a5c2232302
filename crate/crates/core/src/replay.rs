//! Functional execution of a verified command stream.
//!
//! Replay walks the commands in stream order, accumulating CE runs as exact
//! 64-bit integer partial sums per (out_group, position) slot, and
//! materializes each layer's outputs on its store commands with the same
//! requantize / residual-add / activation pipeline as the direct engine.
//! Because integer addition is associative, a stream whose tiles cover each
//! output exactly once (verifier rule e) must reproduce the direct result
//! bit for bit; this module is what the equivalence tests drive.
//!
//! A stream describes one steady-state execution: every layer starts with
//! its input window already in external memory. The replay context carries
//! those windows plus, for residual taps, each layer's position within the
//! whole output history.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::network::{Activation, NetworkDef};
use crate::qconv::{requantize, residual_tap_index, SaturationStats};
use crate::qformat::{sat_add_i16, QFormat, QTensor};
use crate::scheduler::{Command, CommandKind, CommandStream};
use crate::weights::WeightSet;

/// Per-layer inputs for one steady-state execution round.
pub struct ReplayContext {
    /// Layer input windows, `in_samples(l)` samples per channel.
    pub layer_inputs: Vec<QTensor>,
    /// Output ordinal (from cold start) of each layer's first sample in
    /// this round; residual taps are absolute ordinals.
    pub warm_offsets: Vec<u64>,
}

impl ReplayContext {
    /// Build the round context from full per-layer histories: each layer's
    /// input window is the tail of its producer's output, ending at the
    /// last sample the direct execution actually consumed. With a stride
    /// `s`, up to `s - 1` trailing history samples belong to no window yet;
    /// slicing from the raw end would shift every window off the grid.
    pub fn from_histories(
        net: &NetworkDef,
        input: &QTensor,
        layer_outputs: &[QTensor],
        plan: &crate::network::StreamPlan,
    ) -> Result<ReplayContext> {
        let mut layer_inputs = Vec::with_capacity(net.layers.len());
        let mut warm_offsets = Vec::with_capacity(net.layers.len());
        for (i, window) in plan.layers.iter().enumerate() {
            let layer = &net.layers[i];
            let src = if i == 0 { input } else { &layer_outputs[i - 1] };
            let produced = layer_outputs[i].length as u64;
            if produced < window.out_samples {
                return Err(Error::Shape(format!(
                    "layer {}: only {produced} outputs exist, round needs {}",
                    layer.id, window.out_samples
                )));
            }
            // Newest input index any produced output read.
            let used_end = (produced - 1) * layer.stride as u64 + layer.local_receptive_field();
            if used_end > src.length as u64 || used_end < window.in_samples {
                return Err(Error::Shape(format!(
                    "layer {}: history of {} samples cannot supply a window of {}",
                    layer.id, src.length, window.in_samples
                )));
            }
            let len = window.in_samples as usize;
            let start = (used_end - window.in_samples) as usize;
            let mut aligned = QTensor::new(src.channels, len, src.qformat);
            for c in 0..src.channels {
                aligned.data[c * len..(c + 1) * len]
                    .copy_from_slice(&src.channel(c)[start..start + len]);
            }
            layer_inputs.push(aligned);
            warm_offsets.push(produced - window.out_samples);
        }
        Ok(ReplayContext {
            layer_inputs,
            warm_offsets,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayOutcome {
    /// Every layer's outputs for the round, in layer order.
    pub outputs: Vec<QTensor>,
    pub stats: SaturationStats,
}

/// Execute a command stream against the given weights and round context.
pub fn replay_stream(
    stream: &CommandStream,
    weights: &WeightSet,
    ctx: &ReplayContext,
) -> Result<ReplayOutcome> {
    let net = &stream.meta.net;
    let mut stats = SaturationStats::default();

    let mut outputs: Vec<QTensor> = net
        .layers
        .iter()
        .zip(&stream.meta.tilings)
        .map(|(l, t)| QTensor::new(l.out_ch as usize, t.out_samples as usize, QFormat::q8_8()))
        .collect();
    // Exact partial sums per (layer, chunk, out_group) -> rows x positions.
    let mut partials: HashMap<(u32, u32, u32), Vec<i64>> = HashMap::new();

    for cmd in &stream.commands {
        match cmd.kind {
            CommandKind::LoadWeights | CommandKind::LoadActivations | CommandKind::LoadPartials => {
                // Data movement is timing-only; operands come from the
                // context and the already-replayed producer outputs.
            }
            CommandKind::StorePartials => {
                return Err(Error::Parse(
                    "partial spills are not produced by this scheduler".into(),
                ));
            }
            CommandKind::RunCe => run_tile(stream, cmd, weights, ctx, &mut partials)?,
            CommandKind::StoreOutputs => {
                store_tile(stream, cmd, weights, ctx, &mut partials, &mut outputs, &mut stats)?
            }
        }
    }

    Ok(ReplayOutcome { outputs, stats })
}

fn layer_of(net: &NetworkDef, id: u32) -> Result<usize> {
    net.layer_index(id)
        .ok_or_else(|| Error::Parse(format!("stream references unknown layer {id}")))
}

fn run_tile(
    stream: &CommandStream,
    cmd: &Command,
    weights: &WeightSet,
    ctx: &ReplayContext,
    partials: &mut HashMap<(u32, u32, u32), Vec<i64>>,
) -> Result<()> {
    let net = &stream.meta.net;
    let cfg = stream.meta.arch();
    let li = layer_of(net, cmd.layer)?;
    let layer = &net.layers[li];
    let tiling = stream
        .meta
        .tiling_of(cmd.layer)
        .ok_or_else(|| Error::Parse(format!("no tiling for layer {}", cmd.layer)))?;
    let lw = weights
        .layer(cmd.layer)
        .ok_or_else(|| Error::Weights(format!("no weights for layer {}", cmd.layer)))?;

    let input = &ctx.layer_inputs[li];
    let rf = layer.local_receptive_field();
    let s = layer.stride as u64;
    let d = layer.d as usize;
    let k = layer.k as usize;

    let og = cmd.tile.out_group;
    let ig = cmd.tile.in_group;
    let chunk = cmd.tile.time_chunk;
    let chunk_base = chunk as u64 * tiling.chunk_length;
    let chunk_out = cmd.out_samples;
    let rows = (layer.out_ch - og * cfg.n_rows).min(cfg.n_rows) as usize;
    let cols = (layer.in_ch - ig * cfg.n_cols).min(cfg.n_cols) as usize;

    let slot = partials
        .entry((cmd.layer, chunk, og))
        .or_insert_with(|| vec![0i64; rows * chunk_out as usize]);
    if slot.len() != rows * chunk_out as usize {
        return Err(Error::Shape(format!(
            "partial slot shape mismatch on layer {} out_group {og}",
            cmd.layer
        )));
    }

    for row in 0..rows {
        let oc = (og * cfg.n_rows) as usize + row;
        // Bias enters the accumulator exactly once, with the first
        // in_group's contribution.
        let bias = if ig == 0 {
            lw.bias.as_ref().map_or(0i64, |b| b[oc] as i64)
        } else {
            0
        };
        for pos in 0..chunk_out as usize {
            let j = chunk_base + pos as u64;
            let end = (j * s + rf - 1) as usize;
            let mut acc = bias;
            for col in 0..cols {
                let ic = (ig * cfg.n_cols) as usize + col;
                let x = input.channel(ic);
                for tap in 0..k {
                    acc += lw.weight(oc, ic, tap) as i64 * x[end - d * tap] as i64;
                }
            }
            slot[row * chunk_out as usize + pos] += acc;
        }
    }
    Ok(())
}

fn store_tile(
    stream: &CommandStream,
    cmd: &Command,
    weights: &WeightSet,
    ctx: &ReplayContext,
    partials: &mut HashMap<(u32, u32, u32), Vec<i64>>,
    outputs: &mut [QTensor],
    stats: &mut SaturationStats,
) -> Result<()> {
    let net = &stream.meta.net;
    let cfg = stream.meta.arch();
    let li = layer_of(net, cmd.layer)?;
    let layer = &net.layers[li];
    let tiling = stream
        .meta
        .tiling_of(cmd.layer)
        .ok_or_else(|| Error::Parse(format!("no tiling for layer {}", cmd.layer)))?;

    let og = cmd.tile.out_group;
    let chunk = cmd.tile.time_chunk;
    let chunk_base = chunk as u64 * tiling.chunk_length;
    let rows = (layer.out_ch - og * cfg.n_rows).min(cfg.n_rows) as usize;

    let shift = weights
        .layer(cmd.layer)
        .ok_or_else(|| Error::Weights(format!("no weights for layer {}", cmd.layer)))?
        .requant_shift;
    let slot = partials.remove(&(cmd.layer, chunk, og)).ok_or_else(|| {
        Error::Parse(format!(
            "store for layer {} out_group {og} has no accumulated partials",
            cmd.layer
        ))
    })?;
    let chunk_out = slot.len() / rows;

    let residual_source = layer
        .residual_from
        .map(|rid| net.layer_index(rid).expect("validated"));

    for row in 0..rows {
        let oc = (og * cfg.n_rows) as usize + row;
        for pos in 0..chunk_out {
            let j = chunk_base + pos as u64;
            let mut v = requantize(slot[row * chunk_out + pos], shift, stats);
            if let Some(ridx) = residual_source {
                // Tap the source's round output at the window-end ordinal.
                let abs = residual_tap_index(net, li, ridx, ctx.warm_offsets[li] + j);
                let rel = abs
                    .checked_sub(ctx.warm_offsets[ridx])
                    .ok_or_else(|| Error::Shape("residual tap precedes the round".into()))?;
                if rel >= outputs[ridx].length as u64 {
                    return Err(Error::Shape(format!(
                        "residual tap {rel} beyond the source round of {}",
                        outputs[ridx].length
                    )));
                }
                let (sum, clamped) = sat_add_i16(v, outputs[ridx].get(oc, rel as usize));
                if clamped {
                    stats.residual += 1;
                }
                v = sum;
            }
            if layer.activation == Activation::Relu && v < 0 {
                v = 0;
            }
            outputs[li].set(oc, j as usize, v);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::ArchConfig;
    use crate::network::{plan_stream, receptive_field, Activation, LayerDef};
    use crate::qconv::run_network_unrolled;
    use crate::scheduler::{schedule_network, verify_schedule, Policy};
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
            requant_shift: 6,
        }
    }

    #[test]
    fn replay_matches_direct_execution_on_toy_nets() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let cfg = ArchConfig::new(3, 5, 100.0).unwrap();
        for case in 0..40 {
            let mut l0 = layer(0, rng.gen_range(1..=8), rng.gen_range(1..=8), 3, 2, 1);
            l0.activation = Activation::Relu;
            l0.bias = true;
            let mut l1 = layer(1, l0.out_ch, l0.out_ch, 2, rng.gen_range(1..=3), 1);
            l1.residual_from = Some(0);
            let net = NetworkDef {
                name: "toy".into(),
                input_channels: l0.in_ch,
                sample_rate_hz: None,
                description: None,
                layers: vec![l0, l1],
            };
            let ws = crate::weights::WeightSet::synthetic(&net, case);
            let batch = rng.gen_range(1..=9);
            let plan = plan_stream(&net, batch).unwrap();

            let len = receptive_field(&net) as usize + 40;
            let data: Vec<i16> = (0..net.input_channels as usize * len)
                .map(|_| rng.gen_range(-3000..=3000))
                .collect();
            let input =
                QTensor::from_data(net.input_channels as usize, len, data, QFormat::q8_8())
                    .unwrap();

            let mut stats = SaturationStats::default();
            let history = run_network_unrolled(&net, &ws, &input, &mut stats).unwrap();
            let ctx = ReplayContext::from_histories(&net, &input, &history, &plan).unwrap();

            let stream = schedule_network(&net, &cfg, &plan, Policy::Stream).unwrap();
            assert!(verify_schedule(&stream, &cfg).is_empty());
            let outcome = replay_stream(&stream, &ws, &ctx).unwrap();

            for (li, out) in outcome.outputs.iter().enumerate() {
                let want = history[li].tail(plan.layers[li].out_samples as usize);
                assert_eq!(out.data, want.data, "case {case} layer {li} B={batch}");
            }
        }
    }

    #[test]
    fn replay_is_invariant_to_out_group_tile_order() {
        // Permuting independent out_group runs must not change any output.
        let cfg = ArchConfig::new(2, 3, 100.0).unwrap();
        let l0 = layer(0, 6, 6, 2, 1, 1);
        let net = NetworkDef {
            name: "perm".into(),
            input_channels: 6,
            sample_rate_hz: None,
            description: None,
            layers: vec![l0],
        };
        let ws = crate::weights::WeightSet::synthetic(&net, 9);
        let plan = plan_stream(&net, 4).unwrap();
        let len = receptive_field(&net) as usize + 12;
        let data: Vec<i16> = (0..6 * len).map(|i| (i as i16).wrapping_mul(211)).collect();
        let input = QTensor::from_data(6, len, data, QFormat::q8_8()).unwrap();
        let mut stats = SaturationStats::default();
        let history = run_network_unrolled(&net, &ws, &input, &mut stats).unwrap();
        let ctx = ReplayContext::from_histories(&net, &input, &history, &plan).unwrap();

        let stream = schedule_network(&net, &cfg, &plan, Policy::Stream).unwrap();
        assert_eq!(stream.meta.tilings[0].in_groups, 2);
        assert_eq!(stream.meta.tilings[0].out_groups, 3);
        let base = replay_stream(&stream, &ws, &ctx).unwrap();

        // Recompute each out_group in reverse order: gather every command
        // that belongs to one out_group (its loads, runs and store keep
        // their relative order) and emit the groups back to front. Distinct
        // out_groups touch disjoint output rows, so results must agree.
        let mut shuffled = stream.clone();
        let mut groups: Vec<Vec<Command>> = vec![Vec::new(); 3];
        for c in &stream.commands {
            groups[c.tile.out_group as usize].push(c.clone());
        }
        let mut reordered: Vec<Command> = Vec::new();
        for g in groups.into_iter().rev() {
            reordered.extend(g);
        }
        for (slot, mut cmd) in shuffled.commands.iter_mut().zip(reordered) {
            cmd.id = slot.id;
            cmd.depends_on.clear(); // replay is program-order; deps unused
            *slot = cmd;
        }
        let permuted = replay_stream(&shuffled, &ws, &ctx).unwrap();
        assert_eq!(base.outputs, permuted.outputs);
    }
}
