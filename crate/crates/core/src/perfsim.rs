//! Discrete-event timing simulation of a command stream plus the analytical
//! roofline model.
//!
//! Three resources — one input DMA channel, one output DMA channel and the
//! convolution engine — execute commands as soon as their dependencies have
//! completed and the resource is free, earliest-ready-first with stream
//! order as the tie break. Transfers cost `ceil(bytes / bandwidth)` plus a
//! fixed per-transfer latency; a CE run costs `k * ceil(out_samples / 4)`
//! plus a fixed warm-up, independent of how many rows or columns of the
//! matrix the tile actually uses (idle units are how underutilization
//! shows up as lost efficiency).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::arch::{resource_estimate, ArchConfig, DeviceSpec};
use crate::error::{Error, Result};
use crate::network::{LayerDef, NetworkDef};
use crate::scheduler::{CommandKind, CommandStream, Policy};

/// Default per-run engine warm-up: source-module reprogramming and pipeline
/// fill by the on-board scheduler core. Fitted together with the DMA
/// latency so that minimum-latency (B=1) executions land in the observed
/// low-efficiency regime; see the calibration notes in the README.
pub const DEFAULT_CE_WARMUP_CYCLES: u64 = 16;
/// Default fixed DMA descriptor cost per transfer.
pub const DEFAULT_DMA_LATENCY_CYCLES: u64 = 64;
/// Default DDR bandwidth per direction (64-bit port), bytes per cycle.
pub const DEFAULT_BW_BYTES_PER_CYCLE: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingModel {
    pub freq_mhz: f64,
    pub bw_in_bytes_per_cycle: f64,
    pub bw_out_bytes_per_cycle: f64,
    pub dma_latency_cycles: u64,
    pub ce_warmup_cycles: u64,
}

impl TimingModel {
    pub fn new(cfg: &ArchConfig, dev: &DeviceSpec) -> Self {
        Self {
            freq_mhz: cfg.freq_mhz,
            bw_in_bytes_per_cycle: dev.bw_in_bpc,
            bw_out_bytes_per_cycle: dev.bw_out_bpc,
            dma_latency_cycles: dev.dma_latency_cycles,
            ce_warmup_cycles: DEFAULT_CE_WARMUP_CYCLES,
        }
    }

    pub fn with_defaults(cfg: &ArchConfig) -> Self {
        Self {
            freq_mhz: cfg.freq_mhz,
            bw_in_bytes_per_cycle: DEFAULT_BW_BYTES_PER_CYCLE,
            bw_out_bytes_per_cycle: DEFAULT_BW_BYTES_PER_CYCLE,
            dma_latency_cycles: DEFAULT_DMA_LATENCY_CYCLES,
            ce_warmup_cycles: DEFAULT_CE_WARMUP_CYCLES,
        }
    }

    pub fn cycles_to_ms(&self, cycles: u64) -> f64 {
        cycles as f64 / (self.freq_mhz * 1e3)
    }
}

/// Cycle cost of one CE run: the kernel is reused over `k` cycles for each
/// group of four neighbouring output positions.
pub fn ce_run_cycles(layer: &LayerDef, out_samples: u64, timing: &TimingModel) -> u64 {
    layer.k as u64 * out_samples.div_ceil(4) + timing.ce_warmup_cycles
}

/// Cycle cost of one DMA transfer.
pub fn transfer_cycles(bytes: u64, bw_bytes_per_cycle: f64, latency: u64) -> u64 {
    (bytes as f64 / bw_bytes_per_cycle).ceil() as u64 + latency
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SimResource {
    DmaIn,
    DmaOut,
    Ce,
}

fn resource_of(kind: CommandKind) -> SimResource {
    match kind {
        CommandKind::LoadWeights | CommandKind::LoadActivations | CommandKind::LoadPartials => {
            SimResource::DmaIn
        }
        CommandKind::StorePartials | CommandKind::StoreOutputs => SimResource::DmaOut,
        CommandKind::RunCe => SimResource::Ce,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RooflinePoint {
    /// Operations per byte moved to and from external memory.
    pub operational_intensity: f64,
    pub attainable_gops: f64,
    pub achieved_gops: f64,
}

/// Attainable performance at a given operational intensity:
/// `min(peak, OI * min(bw_in, bw_out) * clock)`.
pub fn attainable_gops(oi: f64, peak_gops: f64, timing: &TimingModel) -> f64 {
    let bw = timing
        .bw_in_bytes_per_cycle
        .min(timing.bw_out_bytes_per_cycle);
    peak_gops.min(oi * bw * timing.freq_mhz / 1000.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerReport {
    pub layer_id: u32,
    pub ce_busy_cycles: u64,
    pub dma_in_cycles: u64,
    pub dma_out_cycles: u64,
    /// First-start to last-end over the layer's commands.
    pub makespan_cycles: u64,
    pub bytes_in: u64,
    pub bytes_out: u64,
    pub macs: u64,
    pub time_ms: f64,
    pub achieved_gops: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub layers: Vec<LayerReport>,
    pub total: LayerReport,
    pub peak_gops: f64,
    pub batch: u64,
    pub policy: Policy,
    pub roofline: RooflinePoint,
    /// Leading input transfer and trailing output transfer cannot overlap
    /// any computation; checked on every simulation.
    pub edge_transfers_serial: bool,
}

impl SimReport {
    pub fn efficiency(&self) -> f64 {
        self.total.efficiency
    }

    pub fn makespan_cycles(&self) -> u64 {
        self.total.makespan_cycles
    }

    pub fn time_ms(&self) -> f64 {
        self.total.time_ms
    }

    /// Fixed-format CSV: one row per layer plus a total row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "layer,ce_busy_cycles,dma_in_cycles,dma_out_cycles,makespan_cycles,bytes_in,\
             bytes_out,macs,time_ms,achieved_gops,efficiency\n",
        );
        for l in &self.layers {
            out.push_str(&layer_csv_row(&l.layer_id.to_string(), l));
        }
        out.push_str(&layer_csv_row("total", &self.total));
        out
    }
}

fn layer_csv_row(name: &str, l: &LayerReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{:.6},{:.4},{:.6}\n",
        name,
        l.ce_busy_cycles,
        l.dma_in_cycles,
        l.dma_out_cycles,
        l.makespan_cycles,
        l.bytes_in,
        l.bytes_out,
        l.macs,
        l.time_ms,
        l.achieved_gops,
        l.efficiency
    )
}

/// Event-driven execution of a command stream. Deterministic: identical
/// inputs produce identical reports.
pub fn simulate(stream: &CommandStream, timing: &TimingModel) -> Result<SimReport> {
    let cfg = stream.meta.arch();
    let net = &stream.meta.net;
    let n = stream.commands.len();

    let mut durations = vec![0u64; n];
    let mut resources = vec![SimResource::Ce; n];
    for (i, c) in stream.commands.iter().enumerate() {
        let res = resource_of(c.kind);
        resources[i] = res;
        durations[i] = match res {
            SimResource::DmaIn => transfer_cycles(
                c.bytes,
                timing.bw_in_bytes_per_cycle,
                timing.dma_latency_cycles,
            ),
            SimResource::DmaOut => transfer_cycles(
                c.bytes,
                timing.bw_out_bytes_per_cycle,
                timing.dma_latency_cycles,
            ),
            SimResource::Ce => {
                let layer = net
                    .layers
                    .iter()
                    .find(|l| l.id == c.layer)
                    .ok_or_else(|| Error::Parse(format!("unknown layer {} in stream", c.layer)))?;
                ce_run_cycles(layer, c.out_samples, timing)
            }
        };
    }

    // Dependency bookkeeping.
    let mut remaining = vec![0usize; n];
    let mut dependents: Vec<Vec<u32>> = vec![Vec::new(); n];
    for c in &stream.commands {
        remaining[c.id as usize] = c.depends_on.len();
        for &d in &c.depends_on {
            if d as usize >= n {
                return Err(Error::Parse(format!("dangling dependency {d}")));
            }
            dependents[d as usize].push(c.id);
        }
    }

    let mut ready_heap: [BinaryHeap<Reverse<(u64, u32)>>; 3] = Default::default();
    let heap_of = |r: SimResource| -> usize {
        match r {
            SimResource::DmaIn => 0,
            SimResource::DmaOut => 1,
            SimResource::Ce => 2,
        }
    };
    let mut ready_at = vec![0u64; n];
    for (i, &r) in remaining.iter().enumerate() {
        if r == 0 {
            ready_heap[heap_of(resources[i])].push(Reverse((0, i as u32)));
        }
    }

    let mut free_at = [0u64; 3];
    let mut start = vec![0u64; n];
    let mut end = vec![0u64; n];
    let mut completions: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
    let mut completed = 0usize;
    let mut dispatched = vec![false; n];

    // Alternate between dispatching everything ready and retiring the
    // earliest batch of completions. Ready times only ever grow along with
    // completion times, so a command dispatched now can never be preempted
    // by one that becomes ready later with an earlier ready time; the
    // (ready_time, id) heap key is exactly the earliest-ready-first rule
    // with stream order as tie break.
    if n > 0 {
        loop {
            for h in 0..3 {
                while let Some(&Reverse((rt, id))) = ready_heap[h].peek() {
                    ready_heap[h].pop();
                    let idx = id as usize;
                    start[idx] = free_at[h].max(rt);
                    end[idx] = start[idx] + durations[idx];
                    free_at[h] = end[idx];
                    dispatched[idx] = true;
                    completions.push(Reverse((end[idx], id)));
                }
            }
            if completed == n {
                break;
            }
            let Some(&Reverse((t, _))) = completions.peek() else {
                return Err(Error::Parse(
                    "simulation stalled: dependency cycle or dangling reference".into(),
                ));
            };
            while let Some(&Reverse((tt, id))) = completions.peek() {
                if tt != t {
                    break;
                }
                completions.pop();
                completed += 1;
                let idx = id as usize;
                for &dep in &dependents[idx] {
                    let di = dep as usize;
                    remaining[di] -= 1;
                    ready_at[di] = ready_at[di].max(t);
                    if remaining[di] == 0 {
                        ready_heap[heap_of(resources[di])].push(Reverse((ready_at[di], dep)));
                    }
                }
            }
        }
    }
    debug_assert!(dispatched.iter().all(|&d| d));

    build_report(stream, timing, &cfg, &resources, &durations, &start, &end)
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    stream: &CommandStream,
    timing: &TimingModel,
    cfg: &ArchConfig,
    resources: &[SimResource],
    durations: &[u64],
    start: &[u64],
    end: &[u64],
) -> Result<SimReport> {
    let peak = resource_estimate(cfg).peak_gops;
    let mut layer_ids: Vec<u32> = stream.meta.net.layers.iter().map(|l| l.id).collect();
    layer_ids.dedup();

    let mut layers = Vec::new();
    for lid in layer_ids {
        let idxs: Vec<usize> = stream
            .commands
            .iter()
            .enumerate()
            .filter(|(_, c)| c.layer == lid)
            .map(|(i, _)| i)
            .collect();
        if idxs.is_empty() {
            continue;
        }
        layers.push(summarize(stream, timing, peak, &idxs, resources, durations, start, end, lid));
    }
    let all: Vec<usize> = (0..stream.commands.len()).collect();
    let total = summarize(
        stream, timing, peak, &all, resources, durations, start, end, u32::MAX,
    );

    // Leading load and trailing store stay clear of all computation.
    let first_ce_start = stream
        .commands
        .iter()
        .filter(|c| c.kind == CommandKind::RunCe)
        .map(|c| start[c.id as usize])
        .min();
    let last_ce_end = stream
        .commands
        .iter()
        .filter(|c| c.kind == CommandKind::RunCe)
        .map(|c| end[c.id as usize])
        .max();
    let first_load_end = stream
        .commands
        .iter()
        .filter(|c| c.kind.is_load())
        .map(|c| end[c.id as usize])
        .min();
    let last_store_start = stream
        .commands
        .iter()
        .filter(|c| c.kind.is_store())
        .map(|c| start[c.id as usize])
        .max();
    let edge_transfers_serial = match (first_ce_start, last_ce_end, first_load_end, last_store_start)
    {
        (Some(cs), Some(ce), Some(le), Some(ss)) => le <= cs && ss >= ce,
        _ => true,
    };

    let ops = 2 * stream.total_macs();
    let bytes = (total.bytes_in + total.bytes_out).max(1);
    let oi = ops as f64 / bytes as f64;
    let roofline = RooflinePoint {
        operational_intensity: oi,
        attainable_gops: attainable_gops(oi, peak, timing),
        achieved_gops: total.achieved_gops,
    };

    Ok(SimReport {
        layers,
        total,
        peak_gops: peak,
        batch: stream.meta.batch,
        policy: stream.meta.policy,
        roofline,
        edge_transfers_serial,
    })
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    stream: &CommandStream,
    timing: &TimingModel,
    peak_gops: f64,
    idxs: &[usize],
    resources: &[SimResource],
    durations: &[u64],
    start: &[u64],
    end: &[u64],
    layer_id: u32,
) -> LayerReport {
    let mut ce = 0u64;
    let mut din = 0u64;
    let mut dout = 0u64;
    let mut bytes_in = 0u64;
    let mut bytes_out = 0u64;
    let mut macs = 0u64;
    let mut lo = u64::MAX;
    let mut hi = 0u64;
    for &i in idxs {
        let c = &stream.commands[i];
        match resources[i] {
            SimResource::Ce => ce += durations[i],
            SimResource::DmaIn => {
                din += durations[i];
                bytes_in += c.bytes;
            }
            SimResource::DmaOut => {
                dout += durations[i];
                bytes_out += c.bytes;
            }
        }
        macs += c.macs;
        lo = lo.min(start[i]);
        hi = hi.max(end[i]);
    }
    let span = if idxs.is_empty() { 0 } else { hi - lo };
    let time_ms = timing.cycles_to_ms(span);
    let ops = 2 * macs;
    let achieved = if span == 0 {
        0.0
    } else {
        ops as f64 / span as f64 * timing.freq_mhz / 1000.0
    };
    LayerReport {
        layer_id,
        ce_busy_cycles: ce,
        dma_in_cycles: din,
        dma_out_cycles: dout,
        makespan_cycles: span,
        bytes_in,
        bytes_out,
        macs,
        time_ms,
        achieved_gops: achieved,
        efficiency: if peak_gops > 0.0 { achieved / peak_gops } else { 0.0 },
    }
}

/// Compute the roofline point for an already-simulated report.
pub fn roofline_point(report: &SimReport) -> RooflinePoint {
    report.roofline
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealTimeVerdict {
    pub sample_rate_hz: f64,
    pub deadline_ms: f64,
    pub time_ms: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub batch: u64,
    pub report: SimReport,
    pub time_per_sample_ms: f64,
    pub realtime: Option<RealTimeVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    /// Batch values that failed to schedule or simulate, with the reason.
    pub failures: Vec<(u64, String)>,
}

/// Schedule and simulate one batch value.
pub fn simulate_batch(
    net: &NetworkDef,
    cfg: &ArchConfig,
    timing: &TimingModel,
    batch: u64,
    policy: Policy,
) -> Result<(CommandStream, SimReport)> {
    let plan = crate::network::plan_stream(net, batch)?;
    let stream = crate::scheduler::schedule_network(net, cfg, &plan, policy)?;
    let violations = crate::scheduler::verify_schedule(&stream, cfg);
    if !violations.is_empty() {
        return Err(Error::Verification(violations.len()));
    }
    let report = simulate(&stream, timing)?;
    Ok((stream, report))
}

/// One schedule plus simulation per batch value; failures annotate the
/// sweep instead of aborting it.
pub fn batch_sweep(
    net: &NetworkDef,
    cfg: &ArchConfig,
    timing: &TimingModel,
    batches: &[u64],
    policy: Policy,
) -> Result<SweepOutcome> {
    if batches.is_empty() {
        return Err(Error::Parse("batch list is empty".into()));
    }
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for &b in batches {
        match simulate_batch(net, cfg, timing, b, policy) {
            Ok((_, report)) => {
                let time_per_sample_ms = report.time_ms() / b as f64;
                let realtime = net.sample_rate_hz.map(|rate| {
                    let deadline_ms = b as f64 / rate * 1000.0;
                    RealTimeVerdict {
                        sample_rate_hz: rate,
                        deadline_ms,
                        time_ms: report.time_ms(),
                        pass: report.time_ms() <= deadline_ms,
                    }
                });
                points.push(SweepPoint {
                    batch: b,
                    report,
                    time_per_sample_ms,
                    realtime,
                });
            }
            Err(e) => failures.push((b, e.to_string())),
        }
    }
    Ok(SweepOutcome { points, failures })
}

/// Roofline series CSV: one row per batch value.
pub fn roofline_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("batch,operational_intensity,attainable_gops,achieved_gops\n");
    for p in points {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4}\n",
            p.batch,
            p.report.roofline.operational_intensity,
            p.report.roofline.attainable_gops,
            p.report.roofline.achieved_gops
        ));
    }
    out
}
