//! Compilation of a network into a tiled command stream of DMA transfers and
//! convolution-engine runs, with double buffering, plus the
//! on-chip-resident scheduling variant and the stream verifier.
//!
//! Tiling maps `in_ch` input features onto `n_cols` ports and `out_ch`
//! output features onto `n_rows` ports, in ceiling groups. Per layer the
//! loop nest is:
//!
//! ```text
//! for time_chunk            (output positions, only when a batch overflows)
//!   for out_group block     (as many groups as the partial region holds)
//!     for in_group
//!       load activations    (window for this in_group, once per block)
//!       for out_group in block
//!         load weights      (one kernel tile)
//!         run CE            (accumulates onto the block's partials)
//!       store outputs       (after the last in_group contribution)
//! ```
//!
//! Weight tiles are loaded exactly once per (out_group, in_group) pair per
//! time chunk, so with a single chunk the traffic equals the network's
//! weight footprint regardless of batch size. Partial sums stay in the
//! on-chip partial region as 48-bit words; the out-group block width is
//! chosen so they always fit, which keeps tiled accumulation exact.
//! Consecutive loads alternate the A/B halves of their region so every
//! transfer can overlap the run that reads the other half.

use serde::{Deserialize, Serialize};

use crate::arch::{ArchConfig, RAMB18_BYTES};
use crate::error::{Error, Result};
use crate::membank::{aligned_window_samples, tile_fit};
use crate::network::{LayerDef, NetworkDef, StreamPlan};

/// Bytes per partial-sum word in the on-chip partial region (48-bit
/// accumulator words, the native DSP accumulator width).
pub const PARTIAL_BYTES: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Every execution reloads each layer's full input window.
    Stream,
    /// Layers whose receptive-field windows fit on chip concurrently keep
    /// them there and only transfer new samples.
    Resident,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    LoadWeights,
    LoadActivations,
    LoadPartials,
    RunCe,
    StorePartials,
    StoreOutputs,
}

impl CommandKind {
    pub fn is_load(self) -> bool {
        matches!(
            self,
            CommandKind::LoadWeights | CommandKind::LoadActivations | CommandKind::LoadPartials
        )
    }

    pub fn is_store(self) -> bool {
        matches!(self, CommandKind::StorePartials | CommandKind::StoreOutputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BufferId {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TileCoord {
    pub in_group: u32,
    pub out_group: u32,
    pub time_chunk: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Command {
    pub id: u32,
    pub kind: CommandKind,
    pub layer: u32,
    pub tile: TileCoord,
    /// Transfer size; zero for CE runs.
    pub bytes: u64,
    /// Multiply-accumulates of a CE run; zero for transfers.
    pub macs: u64,
    /// Output samples a CE run produces (drives its cycle cost).
    pub out_samples: u64,
    pub buffer: BufferId,
    pub depends_on: Vec<u32>,
}

/// Per-layer tiling decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerTiling {
    pub layer_id: u32,
    pub in_groups: u32,
    pub out_groups: u32,
    pub time_chunks: u32,
    /// Output samples per time chunk (the last chunk may be shorter).
    pub chunk_length: u64,
    /// Out-groups whose partials are kept on chip simultaneously.
    pub out_group_block: u32,
    pub in_samples: u64,
    pub out_samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidencyEntry {
    pub layer_id: u32,
    pub resident: bool,
    /// Window bytes this layer parks on chip (aligned), when resident.
    pub window_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamMeta {
    pub net: NetworkDef,
    pub n_rows: u32,
    pub n_cols: u32,
    pub freq_mhz: f64,
    pub batch: u64,
    pub policy: Policy,
    pub tilings: Vec<LayerTiling>,
    /// Present for the resident policy.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residency: Vec<ResidencyEntry>,
}

impl StreamMeta {
    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            freq_mhz: self.freq_mhz,
        }
    }

    pub fn tiling_of(&self, layer_id: u32) -> Option<&LayerTiling> {
        self.tilings.iter().find(|t| t.layer_id == layer_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandStream {
    pub meta: StreamMeta,
    pub commands: Vec<Command>,
}

impl CommandStream {
    pub fn total_bytes(&self, kind: CommandKind) -> u64 {
        self.commands
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| c.bytes)
            .sum()
    }

    pub fn load_bytes(&self) -> u64 {
        self.commands
            .iter()
            .filter(|c| c.kind.is_load())
            .map(|c| c.bytes)
            .sum()
    }

    pub fn store_bytes(&self) -> u64 {
        self.commands
            .iter()
            .filter(|c| c.kind.is_store())
            .map(|c| c.bytes)
            .sum()
    }

    pub fn total_macs(&self) -> u64 {
        self.commands.iter().map(|c| c.macs).sum()
    }

    /// JSON-lines serialization: metadata record first, then one command
    /// per line, in stream order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        out.push_str(&serde_json::to_string(&self.meta).expect("meta serializes"));
        out.push('\n');
        for c in &self.commands {
            out.push_str(&serde_json::to_string(c).expect("command serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<CommandStream> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let meta_line = lines
            .next()
            .ok_or_else(|| Error::Parse("empty command-stream file".into()))?;
        let meta: StreamMeta = serde_json::from_str(meta_line)?;
        let mut commands = Vec::new();
        for line in lines {
            commands.push(serde_json::from_str::<Command>(line)?);
        }
        Ok(CommandStream { meta, commands })
    }
}

pub(crate) fn active_rows(cfg: &ArchConfig, layer: &LayerDef, og: u32) -> u64 {
    (layer.out_ch - og * cfg.n_rows).min(cfg.n_rows) as u64
}

pub(crate) fn active_cols(cfg: &ArchConfig, layer: &LayerDef, ig: u32) -> u64 {
    (layer.in_ch - ig * cfg.n_cols).min(cfg.n_cols) as u64
}

/// Partial-region bytes available per row port.
fn partial_row_capacity(cfg: &ArchConfig) -> u64 {
    let caps = crate::arch::resource_estimate(cfg).capacities;
    caps.output_partial_bytes / (2 * cfg.n_rows as u64)
}

/// Largest power-of-two multiple of four lanes not exceeding `limit`, so CE
/// runs keep all lanes busy except possibly the tail; degenerates to
/// `limit` below one lane group.
fn lane_aligned_chunk(limit: u64) -> u64 {
    if limit < 4 {
        return limit.max(1);
    }
    let mut c = 4u64;
    while c * 2 <= limit {
        c *= 2;
    }
    c
}

/// Choose groups, chunking and the out-group block width for one layer.
pub fn tile_layer(
    layer: &LayerDef,
    cfg: &ArchConfig,
    window: &crate::network::LayerWindow,
) -> Result<LayerTiling> {
    let in_groups = layer.in_ch.div_ceil(cfg.n_cols);
    let out_groups = layer.out_ch.div_ceil(cfg.n_rows);
    let fit = tile_fit(cfg, layer, window.in_samples, window.out_samples)?;

    let mut limit = fit.max_chunk_out;
    if in_groups > 1 {
        // Accumulation across in_groups keeps one block of partials on
        // chip; the chunk must leave room for at least one out_group.
        limit = limit.min(partial_row_capacity(cfg) / PARTIAL_BYTES);
    }
    let chunk_length = if window.out_samples <= limit {
        window.out_samples
    } else {
        lane_aligned_chunk(limit)
    };
    let time_chunks = window.out_samples.div_ceil(chunk_length) as u32;

    let out_group_block = if in_groups == 1 {
        out_groups
    } else {
        ((partial_row_capacity(cfg) / (PARTIAL_BYTES * chunk_length)) as u32).clamp(1, out_groups)
    };

    Ok(LayerTiling {
        layer_id: layer.id,
        in_groups,
        out_groups,
        time_chunks,
        chunk_length,
        out_group_block,
        in_samples: window.in_samples,
        out_samples: window.out_samples,
    })
}

/// Double-buffer bookkeeping: which half the next load takes and who read
/// the half's previous occupant.
#[derive(Default)]
struct DoubleBuffer {
    readers: [Vec<u32>; 2],
    next: usize,
}

impl DoubleBuffer {
    /// Begin a load into the next half: returns the buffer id and the
    /// write-after-read dependencies (readers of the evicted occupant).
    fn begin_load(&mut self) -> (BufferId, Vec<u32>) {
        let h = self.next;
        self.next = 1 - h;
        let deps = std::mem::take(&mut self.readers[h]);
        (if h == 0 { BufferId::A } else { BufferId::B }, deps)
    }

    fn note_reader(&mut self, buffer: BufferId, id: u32) {
        let h = if buffer == BufferId::A { 0 } else { 1 };
        self.readers[h].push(id);
    }
}

struct Emitter {
    commands: Vec<Command>,
    weight_buf: DoubleBuffer,
    act_buf: DoubleBuffer,
    out_buf: DoubleBuffer,
    last_run: Option<u32>,
}

impl Emitter {
    fn new() -> Self {
        Self {
            commands: Vec::new(),
            weight_buf: DoubleBuffer::default(),
            act_buf: DoubleBuffer::default(),
            out_buf: DoubleBuffer::default(),
            last_run: None,
        }
    }

    fn push(&mut self, mut cmd: Command) -> u32 {
        let id = self.commands.len() as u32;
        cmd.id = id;
        cmd.depends_on.sort_unstable();
        cmd.depends_on.dedup();
        self.commands.push(cmd);
        id
    }
}

/// Compile one execution of the network into a command stream.
pub fn schedule_network(
    net: &NetworkDef,
    cfg: &ArchConfig,
    plan: &StreamPlan,
    policy: Policy,
) -> Result<CommandStream> {
    net.validate()?;
    let residency = match policy {
        Policy::Stream => Vec::new(),
        Policy::Resident => residency_map(net, cfg),
    };
    let mut tilings = Vec::with_capacity(net.layers.len());
    for (layer, window) in net.layers.iter().zip(&plan.layers) {
        tilings.push(tile_layer(layer, cfg, window)?);
    }

    let mut em = Emitter::new();
    // Store command ids per layer, for barriers and residual preloads.
    let mut stores_of: Vec<Vec<u32>> = vec![Vec::new(); net.layers.len()];

    for (li, layer) in net.layers.iter().enumerate() {
        let tiling = tilings[li];
        let resident = residency
            .iter()
            .find(|r| r.layer_id == layer.id)
            .is_some_and(|r| r.resident);
        let producer_stores: Vec<u32> = if li == 0 {
            Vec::new()
        } else {
            stores_of[li - 1].clone()
        };
        let residual_source_stores: Option<Vec<u32>> = layer.residual_from.map(|rid| {
            let ridx = net.layer_index(rid).expect("validated");
            stores_of[ridx].clone()
        });

        let s = layer.stride as u64;
        let rf = layer.local_receptive_field();
        let mut resident_act_loads: Vec<Vec<Option<u32>>> =
            vec![vec![None; tiling.in_groups as usize]; tiling.time_chunks as usize];

        for chunk in 0..tiling.time_chunks {
            let chunk_base = chunk as u64 * tiling.chunk_length;
            let chunk_out = tiling.chunk_length.min(tiling.out_samples - chunk_base);
            let window_samples = rf + (chunk_out - 1) * s;

            let mut og_start = 0u32;
            while og_start < tiling.out_groups {
                let og_end = (og_start + tiling.out_group_block).min(tiling.out_groups);
                for ig in 0..tiling.in_groups {
                    let cols = active_cols(cfg, layer, ig);
                    // Activation window for this in_group: full window under
                    // the streaming policy; new samples only when resident,
                    // loaded once per chunk (block sweeps reuse the ring).
                    let act_id = if resident {
                        match resident_act_loads[chunk as usize][ig as usize] {
                            Some(id) => id,
                            None => {
                                // New samples land in the parked window
                                // ring, outside the A/B rotation.
                                let bytes = chunk_out * s * cols * 2;
                                let buffer = BufferId::A;
                                let deps: Vec<u32> = producer_stores.clone();
                                let id = em.push(Command {
                                    id: 0,
                                    kind: CommandKind::LoadActivations,
                                    layer: layer.id,
                                    tile: TileCoord {
                                        in_group: ig,
                                        out_group: og_start,
                                        time_chunk: chunk,
                                    },
                                    bytes,
                                    macs: 0,
                                    out_samples: 0,
                                    buffer,
                                    depends_on: deps,
                                });
                                resident_act_loads[chunk as usize][ig as usize] = Some(id);
                                id
                            }
                        }
                    } else {
                        let bytes = window_samples * cols * 2;
                        let (buffer, mut deps) = em.act_buf.begin_load();
                        deps.extend(producer_stores.iter().copied());
                        em.push(Command {
                            id: 0,
                            kind: CommandKind::LoadActivations,
                            layer: layer.id,
                            tile: TileCoord {
                                in_group: ig,
                                out_group: og_start,
                                time_chunk: chunk,
                            },
                            bytes,
                            macs: 0,
                            out_samples: 0,
                            buffer,
                            depends_on: deps,
                        })
                    };

                    for og in og_start..og_end {
                        let rows = active_rows(cfg, layer, og);
                        // Weight tile; bias terms ride on the first
                        // in_group's tile.
                        let mut bytes = rows * cols * layer.k as u64 * 2;
                        if layer.bias && ig == 0 {
                            bytes += rows * 4;
                        }
                        let (wbuf, wdeps) = em.weight_buf.begin_load();
                        let w_id = em.push(Command {
                            id: 0,
                            kind: CommandKind::LoadWeights,
                            layer: layer.id,
                            tile: TileCoord {
                                in_group: ig,
                                out_group: og,
                                time_chunk: chunk,
                            },
                            bytes,
                            macs: 0,
                            out_samples: 0,
                            buffer: wbuf,
                            depends_on: wdeps,
                        });

                        // Residual preload into the partial slot, before the
                        // first accumulating run of this out_group.
                        let partial_id = match (&residual_source_stores, ig) {
                            (Some(src_stores), 0) => {
                                let mut deps = src_stores.clone();
                                if let Some(r) = em.last_run {
                                    deps.push(r); // slot reuse barrier
                                }
                                Some(em.push(Command {
                                    id: 0,
                                    kind: CommandKind::LoadPartials,
                                    layer: layer.id,
                                    tile: TileCoord {
                                        in_group: 0,
                                        out_group: og,
                                        time_chunk: chunk,
                                    },
                                    bytes: chunk_out * rows * 2,
                                    macs: 0,
                                    out_samples: 0,
                                    buffer: BufferId::A,
                                    depends_on: deps,
                                }))
                            }
                            _ => None,
                        };

                        let mut deps = vec![w_id, act_id];
                        if let Some(p) = partial_id {
                            deps.push(p);
                        }
                        if let Some(r) = em.last_run {
                            deps.push(r);
                        }
                        let last_ig = ig == tiling.in_groups - 1;
                        let obuf = if last_ig {
                            // The finishing run writes the output half; wait
                            // until its previous occupant is stored out.
                            let (obuf, odeps) = em.out_buf.begin_load();
                            deps.extend(odeps);
                            Some(obuf)
                        } else {
                            None
                        };
                        let run_id = em.push(Command {
                            id: 0,
                            kind: CommandKind::RunCe,
                            layer: layer.id,
                            tile: TileCoord {
                                in_group: ig,
                                out_group: og,
                                time_chunk: chunk,
                            },
                            bytes: 0,
                            macs: rows * cols * layer.k as u64 * chunk_out,
                            out_samples: chunk_out,
                            buffer: BufferId::A,
                            depends_on: deps,
                        });
                        let wbuf = em.commands[w_id as usize].buffer;
                        em.weight_buf.note_reader(wbuf, run_id);
                        if !resident {
                            let abuf = em.commands[act_id as usize].buffer;
                            em.act_buf.note_reader(abuf, run_id);
                        }
                        em.last_run = Some(run_id);

                        if let Some(obuf) = obuf {
                            let store_id = em.push(Command {
                                id: 0,
                                kind: CommandKind::StoreOutputs,
                                layer: layer.id,
                                tile: TileCoord {
                                    in_group: 0,
                                    out_group: og,
                                    time_chunk: chunk,
                                },
                                bytes: chunk_out * rows * 2,
                                macs: 0,
                                out_samples: 0,
                                buffer: obuf,
                                depends_on: vec![run_id],
                            });
                            em.out_buf.note_reader(obuf, store_id);
                            stores_of[li].push(store_id);
                        }
                    }
                }
                og_start = og_end;
            }
        }
    }

    Ok(CommandStream {
        meta: StreamMeta {
            net: net.clone(),
            n_rows: cfg.n_rows,
            n_cols: cfg.n_cols,
            freq_mhz: cfg.freq_mhz,
            batch: plan.output_batch,
            policy,
            tilings,
            residency,
        },
        commands: em.commands,
    })
}

/// Decide which layers keep their receptive-field windows on chip.
///
/// Each layer's parked window costs `ceil(in_ch / n_cols)` features per
/// port, each a whole number of interleave rows. Layers are dropped largest
/// window first until the total fits one port's banks.
pub fn residency_map(net: &NetworkDef, cfg: &ArchConfig) -> Vec<ResidencyEntry> {
    let caps = crate::arch::resource_estimate(cfg).capacities;
    let budget = caps.activation_bytes_per_port();
    let per_port_cost = |layer: &LayerDef| -> u64 {
        let feats = layer.in_ch.div_ceil(cfg.n_cols) as u64;
        feats * aligned_window_samples(layer.local_receptive_field()) * 2
    };
    let mut resident: Vec<bool> = vec![true; net.layers.len()];
    loop {
        let total: u64 = net
            .layers
            .iter()
            .zip(&resident)
            .filter(|(_, r)| **r)
            .map(|(l, _)| per_port_cost(l))
            .sum();
        if total <= budget {
            break;
        }
        let victim = net
            .layers
            .iter()
            .enumerate()
            .filter(|(i, _)| resident[*i])
            .max_by_key(|(i, l)| (aligned_window_samples(l.local_receptive_field()), *i))
            .map(|(i, _)| i);
        match victim {
            Some(i) => resident[i] = false,
            None => break,
        }
    }
    net.layers
        .iter()
        .zip(&resident)
        .map(|(l, r)| ResidencyEntry {
            layer_id: l.id,
            resident: *r,
            window_bytes: if *r {
                aligned_window_samples(l.local_receptive_field()) * l.in_ch as u64 * 2
            } else {
                0
            },
        })
        .collect()
}

/// Compile with input-history residency for every layer whose window fits;
/// the rest fall back to the streaming policy automatically.
pub fn schedule_resident(
    net: &NetworkDef,
    cfg: &ArchConfig,
    plan: &StreamPlan,
) -> Result<CommandStream> {
    schedule_network(net, cfg, plan, Policy::Resident)
}

/// One broken rule found by [`verify_schedule`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: char,
    pub command: Option<u32>,
    pub message: String,
}

/// Check a command stream against the structural rules:
///
/// (a) dependencies are acyclic (ids reference earlier commands only);
/// (b) every CE run directly depends on its weight and activation loads
///     (and residual preload where the layer has one);
/// (c) no load overwrites a buffer half while a run that reads the previous
///     occupant may still be pending under some dependency-legal order;
/// (d) per-command byte counts fit the double-buffered region halves;
/// (e) each (out_group, time_chunk) accumulates exactly in_groups
///     contributions.
pub fn verify_schedule(stream: &CommandStream, cfg: &ArchConfig) -> Vec<Violation> {
    let mut violations = Vec::new();
    let cmds = &stream.commands;

    // (a) topological order consistent with depends_on
    for c in cmds {
        for &d in &c.depends_on {
            if d >= c.id {
                violations.push(Violation {
                    rule: 'a',
                    command: Some(c.id),
                    message: format!("dependency {d} does not precede command {}", c.id),
                });
            }
        }
    }
    if cmds.iter().enumerate().any(|(i, c)| c.id as usize != i) {
        violations.push(Violation {
            rule: 'a',
            command: None,
            message: "command ids are not dense stream positions".into(),
        });
        return violations; // downstream checks index by id
    }
    if !violations.is_empty() {
        return violations;
    }

    // (b) runs carry their loads as direct dependencies
    for c in cmds.iter().filter(|c| c.kind == CommandKind::RunCe) {
        let dep_cmds: Vec<&Command> = c.depends_on.iter().map(|&d| &cmds[d as usize]).collect();
        let has_weights = dep_cmds.iter().any(|d| {
            d.kind == CommandKind::LoadWeights
                && d.layer == c.layer
                && d.tile.in_group == c.tile.in_group
                && d.tile.out_group == c.tile.out_group
        });
        if !has_weights {
            violations.push(Violation {
                rule: 'b',
                command: Some(c.id),
                message: format!("run {} lacks a matching weight load dependency", c.id),
            });
        }
        let has_acts = dep_cmds.iter().any(|d| {
            d.kind == CommandKind::LoadActivations
                && d.layer == c.layer
                && d.tile.in_group == c.tile.in_group
        });
        if !has_acts {
            violations.push(Violation {
                rule: 'b',
                command: Some(c.id),
                message: format!("run {} lacks a matching activation load dependency", c.id),
            });
        }
        let layer = stream.meta.net.layers.iter().find(|l| l.id == c.layer);
        if let Some(layer) = layer {
            if layer.residual_from.is_some() && c.tile.in_group == 0 {
                let has_partial = dep_cmds.iter().any(|d| {
                    d.kind == CommandKind::LoadPartials
                        && d.layer == c.layer
                        && d.tile.out_group == c.tile.out_group
                        && d.tile.time_chunk == c.tile.time_chunk
                });
                if !has_partial {
                    violations.push(Violation {
                        rule: 'b',
                        command: Some(c.id),
                        message: format!(
                            "run {} of a residual layer lacks its partial preload",
                            c.id
                        ),
                    });
                }
            }
        }
    }

    // Exact reverse reachability with memoization for rule (c).
    fn reaches(
        cmds: &[Command],
        from: u32,
        target: u32,
        memo: &mut std::collections::HashMap<(u32, u32), bool>,
    ) -> bool {
        if from == target {
            return true;
        }
        if from < target {
            return false;
        }
        if let Some(&r) = memo.get(&(from, target)) {
            return r;
        }
        let r = cmds[from as usize]
            .depends_on
            .iter()
            .any(|&d| reaches(cmds, d, target, memo));
        memo.insert((from, target), r);
        r
    }
    let mut memo = std::collections::HashMap::new();

    // (c) write-after-read on buffer halves. Readers are indexed up front so
    // the scan is linear in the stream.
    let mut readers_of: Vec<Vec<u32>> = vec![Vec::new(); cmds.len()];
    for c in cmds {
        if c.kind == CommandKind::RunCe {
            for &d in &c.depends_on {
                if cmds[d as usize].kind.is_load() {
                    readers_of[d as usize].push(c.id);
                }
            }
        }
    }
    let resident_layer = |id: u32| {
        stream
            .meta
            .residency
            .iter()
            .any(|r| r.layer_id == id && r.resident)
    };
    for region in [CommandKind::LoadWeights, CommandKind::LoadActivations] {
        for half in [BufferId::A, BufferId::B] {
            // Parked resident windows live outside the A/B rotation.
            let loads: Vec<&Command> = cmds
                .iter()
                .filter(|c| {
                    c.kind == region
                        && c.buffer == half
                        && !(region == CommandKind::LoadActivations && resident_layer(c.layer))
                })
                .collect();
            for pair in loads.windows(2) {
                let (w1, w2) = (pair[0], pair[1]);
                for &r in &readers_of[w1.id as usize] {
                    if !reaches(cmds, w2.id, r, &mut memo) {
                        violations.push(Violation {
                            rule: 'c',
                            command: Some(w2.id),
                            message: format!(
                                "load {} may overwrite buffer {half:?} while run {r} can still \
                                 read it",
                                w2.id
                            ),
                        });
                    }
                }
            }
        }
    }

    // (d) byte counts against the double-buffered region halves
    let caps = crate::arch::resource_estimate(cfg).capacities;
    for c in cmds {
        match c.kind {
            CommandKind::LoadWeights => {
                if c.bytes > caps.weight_bytes / 2 {
                    violations.push(Violation {
                        rule: 'd',
                        command: Some(c.id),
                        message: format!("weight tile of {} bytes overflows its half", c.bytes),
                    });
                }
                if let Some(l) = stream.meta.net.layers.iter().find(|l| l.id == c.layer) {
                    if l.k as u64 * 2 * 2 > RAMB18_BYTES {
                        violations.push(Violation {
                            rule: 'd',
                            command: Some(c.id),
                            message: format!("kernel of {} taps overflows a weight bank", l.k),
                        });
                    }
                }
            }
            CommandKind::LoadActivations => {
                let cfg_meta = stream.meta.arch();
                let cols = stream
                    .meta
                    .net
                    .layers
                    .iter()
                    .find(|l| l.id == c.layer)
                    .map_or(stream.meta.n_cols as u64, |l| {
                        active_cols(&cfg_meta, l, c.tile.in_group)
                    });
                let per_port = c.bytes.div_ceil(cols.max(1));
                if per_port * 2 > caps.activation_bytes_per_port() {
                    violations.push(Violation {
                        rule: 'd',
                        command: Some(c.id),
                        message: format!(
                            "activation window of {per_port} bytes per port overflows the bank \
                             group"
                        ),
                    });
                }
            }
            CommandKind::StoreOutputs | CommandKind::LoadPartials | CommandKind::StorePartials => {
                let row_half = caps.output_partial_bytes / (2 * stream.meta.n_rows as u64);
                let per_row = c.bytes.div_ceil(stream.meta.n_rows as u64);
                if per_row > row_half {
                    violations.push(Violation {
                        rule: 'd',
                        command: Some(c.id),
                        message: format!("output tile of {} bytes overflows its region", c.bytes),
                    });
                }
            }
            CommandKind::RunCe => {}
        }
    }

    // (e) accumulation completeness per (layer, out_group, time_chunk)
    for tiling in &stream.meta.tilings {
        use std::collections::BTreeMap;
        let mut seen: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
        for c in cmds
            .iter()
            .filter(|c| c.kind == CommandKind::RunCe && c.layer == tiling.layer_id)
        {
            seen.entry((c.tile.time_chunk, c.tile.out_group))
                .or_default()
                .push(c.tile.in_group);
        }
        let expected_tiles = tiling.time_chunks as usize * tiling.out_groups as usize;
        if seen.len() != expected_tiles {
            violations.push(Violation {
                rule: 'e',
                command: None,
                message: format!(
                    "layer {}: {} (chunk, out_group) tiles ran, expected {}",
                    tiling.layer_id,
                    seen.len(),
                    expected_tiles
                ),
            });
        }
        for ((chunk, og), mut igs) in seen {
            igs.sort_unstable();
            let want: Vec<u32> = (0..tiling.in_groups).collect();
            if igs != want {
                violations.push(Violation {
                    rule: 'e',
                    command: None,
                    message: format!(
                        "layer {} chunk {chunk} out_group {og}: in_group contributions {igs:?} \
                         do not cover 0..{}",
                        tiling.layer_id, tiling.in_groups
                    ),
                });
            }
        }
    }

    violations
}
