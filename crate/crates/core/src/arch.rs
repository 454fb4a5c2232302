//! Resource and peak-performance model of the convolution engine template,
//! plus the grid-search design-space exploration.
//!
//! A configuration is an `n_rows x n_cols` matrix of sum-of-products units,
//! each built from 4 DSP slices working on 4 neighbouring convolution
//! windows. Block-RAM cost follows directly from the memory organization:
//! one RAMB18 per SoP for weights, 8 per input-feature port, 8 per
//! output-write and partial-read port per row, plus a fixed block of 32 for
//! the on-board scheduler core.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LANES_PER_SOP: u32 = 4;
/// One RAMB18: 1024 words x 16 bits.
pub const RAMB18_BYTES: u64 = 2048;
/// RAMB18 banks per activation input port and per output/partial port.
pub const BANKS_PER_PORT: u64 = 8;

/// MAC-matrix geometry plus clock. Bare "AxB" matrix labels are ambiguous
/// about orientation, so rows and columns are always explicit: `n_rows`
/// output-feature ports, `n_cols` input-feature ports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub n_rows: u32,
    pub n_cols: u32,
    pub freq_mhz: f64,
}

impl ArchConfig {
    pub fn new(n_rows: u32, n_cols: u32, freq_mhz: f64) -> Result<Self> {
        if n_rows < 1 || n_cols < 1 {
            return Err(Error::Parse("matrix needs at least one row and column".into()));
        }
        if freq_mhz <= 0.0 {
            return Err(Error::Parse("clock frequency must be positive".into()));
        }
        Ok(Self {
            n_rows,
            n_cols,
            freq_mhz,
        })
    }

    pub fn lanes(&self) -> u32 {
        LANES_PER_SOP
    }

    pub fn sops(&self) -> u32 {
        self.n_rows * self.n_cols
    }

    /// Peak MAC lanes: one MAC per DSP per cycle.
    pub fn peak_macs_per_cycle(&self) -> u64 {
        self.sops() as u64 * LANES_PER_SOP as u64
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ArchConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        ArchConfig::new(cfg.n_rows, cfg.n_cols, cfg.freq_mhz)
    }
}

/// A device's resource and interface budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub name: String,
    pub dsp_total: u32,
    pub ramb18_total: u32,
    pub max_freq_mhz: f64,
    /// DDR read bandwidth seen by the accelerator, bytes per cycle.
    #[serde(rename = "bw_in_Bpc")]
    pub bw_in_bpc: f64,
    /// DDR write bandwidth, bytes per cycle.
    #[serde(rename = "bw_out_Bpc")]
    pub bw_out_bpc: f64,
    /// Fixed per-transfer setup cost in cycles.
    pub dma_latency_cycles: u64,
}

impl DeviceSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let dev: DeviceSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if dev.dsp_total == 0 || dev.ramb18_total == 0 {
            return Err(Error::Parse(format!(
                "device {} has an empty resource budget",
                dev.name
            )));
        }
        if dev.max_freq_mhz <= 0.0 || dev.bw_in_bpc <= 0.0 || dev.bw_out_bpc <= 0.0 {
            return Err(Error::Parse(format!(
                "device {}: clock and bandwidths must be positive",
                dev.name
            )));
        }
        Ok(dev)
    }
}

/// On-chip memory capacities implied by a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capacities {
    /// Weight memory: one RAMB18 per SoP.
    pub weight_bytes: u64,
    /// Activation memory: 8 RAMB18 per input-feature port.
    pub activation_bytes: u64,
    /// Output plus partial-result memory: 2 x 8 RAMB18 per row.
    pub output_partial_bytes: u64,
}

impl Capacities {
    /// Activation bytes behind a single input port.
    pub fn activation_bytes_per_port(&self) -> u64 {
        self.activation_bytes / self.activation_ports() as u64
    }

    fn activation_ports(&self) -> u32 {
        (self.activation_bytes / (BANKS_PER_PORT * RAMB18_BYTES)) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub dsps: u32,
    pub ramb18: u32,
    pub peak_gops: f64,
    pub capacities: Capacities,
}

/// Deterministic resource cost of a configuration.
pub fn resource_estimate(cfg: &ArchConfig) -> ResourceEstimate {
    let r = cfg.n_rows as u64;
    let c = cfg.n_cols as u64;
    let dsps = (r * c * LANES_PER_SOP as u64) as u32;
    let ramb18 = (r * c + c * BANKS_PER_PORT + r * 2 * BANKS_PER_PORT + 32) as u32;
    ResourceEstimate {
        dsps,
        ramb18,
        peak_gops: dsps as f64 * 2.0 * cfg.freq_mhz / 1000.0,
        capacities: Capacities {
            weight_bytes: r * c * RAMB18_BYTES,
            activation_bytes: c * BANKS_PER_PORT * RAMB18_BYTES,
            output_partial_bytes: r * 2 * BANKS_PER_PORT * RAMB18_BYTES,
        },
    }
}

/// Feasibility verdict with the violated budgets spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub reasons: Vec<String>,
}

pub fn is_feasible(cfg: &ArchConfig, dev: &DeviceSpec) -> Feasibility {
    let est = resource_estimate(cfg);
    let mut reasons = Vec::new();
    if est.dsps > dev.dsp_total {
        reasons.push(format!("DSP {} > {}", est.dsps, dev.dsp_total));
    }
    if est.ramb18 > dev.ramb18_total {
        reasons.push(format!("RAMB18 {} > {}", est.ramb18, dev.ramb18_total));
    }
    if cfg.freq_mhz > dev.max_freq_mhz {
        reasons.push(format!(
            "clock {} MHz > {} MHz",
            cfg.freq_mhz, dev.max_freq_mhz
        ));
    }
    Feasibility {
        feasible: reasons.is_empty(),
        reasons,
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n_rows: u32,
    pub n_cols: u32,
    pub estimate: ResourceEstimate,
    pub feasible: bool,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DseResult {
    /// Every evaluated point in grid order (rows outer, columns inner).
    pub grid: Vec<GridPoint>,
    /// Feasible points ranked by SoP count descending, ties broken by lower
    /// RAMB18 count, then lower row count.
    pub ranked: Vec<GridPoint>,
}

impl DseResult {
    pub fn best(&self) -> Option<&GridPoint> {
        self.ranked.first()
    }
}

/// Exhaustive grid search over the given row/column ranges at the device's
/// maximum clock.
pub fn dse_grid_search(
    dev: &DeviceSpec,
    row_range: std::ops::RangeInclusive<u32>,
    col_range: std::ops::RangeInclusive<u32>,
) -> Result<DseResult> {
    if row_range.is_empty() || col_range.is_empty() {
        return Err(Error::Parse("empty design-space range".into()));
    }
    let mut grid = Vec::new();
    for r in row_range.clone() {
        for c in col_range.clone() {
            let cfg = ArchConfig::new(r, c, dev.max_freq_mhz)?;
            let est = resource_estimate(&cfg);
            let f = is_feasible(&cfg, dev);
            grid.push(GridPoint {
                n_rows: r,
                n_cols: c,
                estimate: est,
                feasible: f.feasible,
                reasons: f.reasons,
            });
        }
    }
    let mut ranked: Vec<GridPoint> = grid.iter().filter(|p| p.feasible).cloned().collect();
    ranked.sort_by(|a, b| {
        (b.n_rows * b.n_cols)
            .cmp(&(a.n_rows * a.n_cols))
            .then(a.estimate.ramb18.cmp(&b.estimate.ramb18))
            .then(a.n_rows.cmp(&b.n_rows))
    });
    Ok(DseResult { grid, ranked })
}
