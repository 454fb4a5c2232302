//! On-chip memory organization: bank interleaving, read-conflict detection
//! for strided and dilated fetch patterns, and capacity checks for tiling.
//!
//! Samples are interleaved across the banks of a port group, consecutive
//! samples in adjacent banks. A conflict check asks whether the four lanes
//! of a SoP can fetch their windows' taps in the same cycle without
//! exceeding a bank's port count. Conflicts are configuration diagnostics:
//! a provisioned design is conflict-free and the timing simulator assumes
//! stall-free fetches.

use serde::Serialize;

use crate::arch::{ArchConfig, Capacities, BANKS_PER_PORT};
use crate::error::{Error, Result};
use crate::network::LayerDef;

/// How many same-cycle accesses one bank tolerates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortMode {
    /// One access per bank per cycle (one port reserved for writes).
    Strict,
    /// Both 16-bit ports serve reads.
    DualPort,
}

impl PortMode {
    pub fn ports(self) -> usize {
        match self {
            PortMode::Strict => 1,
            PortMode::DualPort => 2,
        }
    }
}

/// A group of independently addressable banks with sample interleaving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BankLayout {
    pub banks: usize,
    pub words_per_bank: usize,
}

impl BankLayout {
    pub fn new(banks: usize, words_per_bank: usize) -> Result<Self> {
        if banks < 1 || words_per_bank < 1 {
            return Err(Error::Parse("bank layout needs banks >= 1, depth >= 1".into()));
        }
        Ok(Self {
            banks,
            words_per_bank,
        })
    }
}

/// Bank holding a given sample offset.
pub fn bank_of(index: u64, layout: &BankLayout) -> usize {
    (index % layout.banks as u64) as usize
}

/// Same-cycle fetch pattern of a SoP's lanes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchPattern {
    pub start_index: u64,
    pub stride: u64,
    /// Parallel consumers (4 per SoP).
    pub lanes: usize,
    /// Per-cycle kernel tap offsets, `i * d` for `i in 0..k`.
    pub cycle_offsets: Vec<u64>,
}

impl FetchPattern {
    /// Pattern of one convolution run: `lanes` neighbouring windows read tap
    /// `i` in cycle `i`.
    pub fn for_layer(start_index: u64, layer: &LayerDef, lanes: usize) -> Self {
        Self {
            start_index,
            stride: layer.stride as u64,
            lanes,
            cycle_offsets: (0..layer.k as u64).map(|i| i * layer.d as u64).collect(),
        }
    }
}

/// One over-subscribed bank in one kernel cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub cycle: usize,
    pub bank: usize,
    pub lane_list: Vec<usize>,
}

/// Check every kernel cycle of a fetch pattern against the bank layout.
///
/// In cycle `i` lane `l` reads sample `start + l * stride + offset_i`; a
/// bank is in conflict when more lanes map to it than it has ports.
pub fn detect_conflicts(
    pattern: &FetchPattern,
    layout: &BankLayout,
    mode: PortMode,
) -> Vec<Conflict> {
    let mut conflicts = Vec::new();
    for (cycle, offset) in pattern.cycle_offsets.iter().enumerate() {
        let mut per_bank: Vec<Vec<usize>> = vec![Vec::new(); layout.banks];
        for lane in 0..pattern.lanes {
            let addr = pattern.start_index + lane as u64 * pattern.stride + offset;
            per_bank[bank_of(addr, layout)].push(lane);
        }
        for (bank, lanes) in per_bank.into_iter().enumerate() {
            if lanes.len() > mode.ports() {
                conflicts.push(Conflict {
                    cycle,
                    bank,
                    lane_list: lanes,
                });
            }
        }
    }
    conflicts
}

/// Smallest power-of-two bank count that is conflict-free for every stride
/// up to `max_stride` and every start offset.
///
/// Bank counts are powers of two because the interleave is an address-bit
/// split. A single tap cycle suffices: adding a tap offset only shifts the
/// start, which the start sweep already covers.
pub fn min_banks(max_stride: u64, lanes: usize, mode: PortMode) -> usize {
    let mut banks = 1usize;
    loop {
        let layout = BankLayout {
            banks,
            words_per_bank: 1024,
        };
        let clean = (1..=max_stride).all(|stride| {
            (0..banks as u64).all(|start| {
                let pattern = FetchPattern {
                    start_index: start,
                    stride,
                    lanes,
                    cycle_offsets: vec![0],
                };
                detect_conflicts(&pattern, &layout, mode).is_empty()
            })
        });
        if clean {
            return banks;
        }
        banks *= 2;
    }
}

/// Windows are stored in whole interleave rows: a window of `samples`
/// samples reserves a multiple of the bank-group width.
pub fn aligned_window_samples(samples: u64) -> u64 {
    samples.div_ceil(BANKS_PER_PORT) * BANKS_PER_PORT
}

/// Capacity verdict for one layer tile at a given window extent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitReport {
    pub fits: bool,
    /// Largest number of output samples per time chunk that fits; equals the
    /// requested out_samples when `fits`.
    pub max_chunk_out: u64,
    /// Weight bytes of one (out_group, in_group) tile, double-buffered.
    pub weight_tile_bytes: u64,
    /// Activation bytes behind one port for the full window, double-buffered.
    pub activation_port_bytes: u64,
    /// Output bytes per row for one chunk, double-buffered.
    pub output_row_bytes: u64,
}

/// Bytes reserved behind one activation port for a window of `in_samples`,
/// with interleave alignment and A/B buffering.
pub fn activation_port_bytes(in_samples: u64) -> u64 {
    aligned_window_samples(in_samples) * 2 * 2
}

/// Check one layer's tile against the on-chip capacities and derive the
/// largest workable time-chunk length.
///
/// The weight tile must fit a SoP's weight bank, the (double-buffered)
/// activation window one input port's bank group, and the chunk's output
/// slice one row's output half. A layer whose local receptive field alone
/// overflows the activation banks is impossible at any chunk length.
pub fn tile_fit(
    cfg: &ArchConfig,
    layer: &LayerDef,
    in_samples: u64,
    out_samples: u64,
) -> Result<FitReport> {
    if layer.in_ch == 0 || layer.out_ch == 0 {
        return Err(Error::Invariant {
            layer: layer.id,
            message: "channel counts must be positive".into(),
        });
    }
    let caps: Capacities = crate::arch::resource_estimate(cfg).capacities;
    let port_capacity = caps.activation_bytes_per_port();
    let row_output_capacity = caps.output_partial_bytes / (2 * cfg.n_rows as u64);

    let rf = layer.local_receptive_field();
    if activation_port_bytes(rf) > port_capacity {
        return Err(Error::Capacity {
            layer: layer.id,
            message: format!(
                "receptive-field window of {rf} samples exceeds the activation bank depth \
                 ({} bytes per port)",
                port_capacity
            ),
        });
    }
    // Weight tile: k taps per kernel, two bytes each, A/B buffered in the
    // SoP's weight bank.
    let weight_tile = layer.k as u64 * 2 * 2;
    if weight_tile > crate::arch::RAMB18_BYTES {
        return Err(Error::Capacity {
            layer: layer.id,
            message: format!("kernel of {} taps exceeds the weight bank", layer.k),
        });
    }

    // Largest chunk whose window fits one port and whose output slice fits
    // one row half. The port capacity is a whole number of interleave rows,
    // so the alignment never tightens the sample bound.
    let s = layer.stride as u64;
    let max_window = port_capacity / 4;
    let window_limit = (max_window - rf) / s + 1;
    let output_limit = row_output_capacity / (2 * 2);
    let max_chunk = window_limit.min(output_limit);
    let fits = activation_port_bytes(in_samples) <= port_capacity && out_samples <= output_limit;
    let chunk = if fits { out_samples } else { max_chunk };
    Ok(FitReport {
        fits,
        max_chunk_out: chunk,
        weight_tile_bytes: weight_tile,
        activation_port_bytes: activation_port_bytes(rf + (chunk - 1) * s),
        output_row_bytes: chunk * 2 * 2,
    })
}
