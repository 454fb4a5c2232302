//! Command-line front end: design-space exploration, scheduling, timing
//! simulation, roofline sweeps, fixed-point inference and validation.
//!
//! Exit codes: 0 success, 1 input error, 2 verification or infeasibility
//! failure, 3 internal invariant breach. Outputs are written only after a
//! command has fully succeeded, so failures never leave partial files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tcnsim_core::arch::{dse_grid_search, ArchConfig, DeviceSpec};
use tcnsim_core::network::{parse_network, plan_stream, receptive_field, NetworkDef};
use tcnsim_core::perfsim::{batch_sweep, roofline_csv, TimingModel};
use tcnsim_core::qconv::{run_network_streaming, run_network_unrolled, SaturationStats};
use tcnsim_core::qformat::{QFormat, QTensor};
use tcnsim_core::replay::{replay_stream, ReplayContext};
use tcnsim_core::scheduler::{schedule_network, verify_schedule, Policy};
use tcnsim_core::weights::{read_weights, write_weights, WeightSet};

#[derive(Parser)]
#[command(
    name = "tcnsim",
    about = "Modeling toolkit for MAC-matrix TCN accelerators",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Stream,
    Resident,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::Stream => Policy::Stream,
            PolicyArg::Resident => Policy::Resident,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Architecture selection: a config file or explicit geometry.
#[derive(Args)]
struct ArchArgs {
    /// Architecture JSON {n_rows, n_cols, freq_mhz}
    #[arg(long)]
    arch: Option<PathBuf>,
    /// Output-feature ports (rows of the MAC matrix)
    #[arg(long)]
    rows: Option<u32>,
    /// Input-feature ports (columns of the MAC matrix)
    #[arg(long)]
    cols: Option<u32>,
    /// Clock in MHz
    #[arg(long)]
    freq: Option<f64>,
}

impl ArchArgs {
    fn resolve(&self) -> Result<ArchConfig, Failure> {
        match (&self.arch, self.rows, self.cols, self.freq) {
            (Some(path), None, None, None) => {
                ArchConfig::load(path).map_err(|e| Failure::input(format!("{path:?}: {e}")))
            }
            (None, Some(r), Some(c), Some(f)) => {
                ArchConfig::new(r, c, f).map_err(Failure::from_input)
            }
            _ => Err(Failure::input(
                "give either --arch FILE or all of --rows/--cols/--freq".into(),
            )),
        }
    }
}

#[derive(Args)]
struct TimingArgs {
    /// Device JSON with budgets and bandwidths
    #[arg(long)]
    device: PathBuf,
    /// Override timing fields, e.g. --timing-override bw_in=4
    /// (keys: bw_in, bw_out, dma_latency, ce_warmup, freq)
    #[arg(long = "timing-override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl TimingArgs {
    fn resolve(&self, cfg: &ArchConfig) -> Result<(DeviceSpec, TimingModel), Failure> {
        let dev = DeviceSpec::load(&self.device)
            .map_err(|e| Failure::input(format!("{:?}: {e}", self.device)))?;
        let mut tm = TimingModel::new(cfg, &dev);
        for kv in &self.overrides {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Failure::input(format!("bad override {kv:?}")))?;
            let v: f64 = value
                .parse()
                .map_err(|_| Failure::input(format!("bad override value {kv:?}")))?;
            match key {
                "bw_in" => tm.bw_in_bytes_per_cycle = v,
                "bw_out" => tm.bw_out_bytes_per_cycle = v,
                "dma_latency" => tm.dma_latency_cycles = v as u64,
                "ce_warmup" => tm.ce_warmup_cycles = v as u64,
                "freq" => tm.freq_mhz = v,
                _ => return Err(Failure::input(format!("unknown timing key {key:?}"))),
            }
        }
        Ok((dev, tm))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Grid-search the MAC-matrix shapes a device can host
    Dse {
        #[arg(long)]
        device: PathBuf,
        /// Inclusive row range, e.g. 4..12
        #[arg(long, default_value = "4..12")]
        rows: String,
        /// Inclusive column range
        #[arg(long, default_value = "4..12")]
        cols: String,
        /// How many ranked configurations to print
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Compile a network into a command stream and verify it
    Schedule {
        #[arg(long)]
        net: PathBuf,
        #[command(flatten)]
        arch: ArchArgs,
        #[arg(long, default_value_t = 1)]
        batch: u64,
        #[arg(long, value_enum, default_value_t = PolicyArg::Stream)]
        policy: PolicyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate scheduled executions and report timing and efficiency
    Simulate {
        #[arg(long)]
        net: PathBuf,
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        timing: TimingArgs,
        /// Comma-separated batch sizes
        #[arg(long, default_value = "1")]
        batch: String,
        #[arg(long, value_enum, default_value_t = PolicyArg::Stream)]
        policy: PolicyArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run the fixed-point golden model over a sample stream
    Infer {
        #[arg(long)]
        net: PathBuf,
        /// Little-endian i16 kernel blob; sidecar JSON sits next to it
        #[arg(long)]
        weights: PathBuf,
        /// Sidecar path (defaults to the weights path with .json)
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Little-endian i16 frame-interleaved input samples
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        batch: u64,
    },
    /// Sweep batch sizes and emit plot-ready roofline coordinates
    Roofline {
        #[arg(long)]
        net: PathBuf,
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        timing: TimingArgs,
        #[arg(long, default_value = "1")]
        batch: String,
        #[arg(long, value_enum, default_value_t = PolicyArg::Stream)]
        policy: PolicyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check a schedule against the golden model
    Validate {
        #[arg(long)]
        net: PathBuf,
        #[command(flatten)]
        arch: ArchArgs,
        #[arg(long, default_value_t = 8)]
        batch: u64,
        #[arg(long, value_enum, default_value_t = PolicyArg::Stream)]
        policy: PolicyArg,
        /// Seed for the synthetic weights used by the check
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the synthetic weights (blob plus sidecar) here
        #[arg(long)]
        emit_weights: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: String) -> Self {
        Self { code: 1, message }
    }
    fn from_input(e: tcnsim_core::Error) -> Self {
        Self::input(e.to_string())
    }
    fn verify(message: String) -> Self {
        Self { code: 2, message }
    }
    fn internal(message: String) -> Self {
        Self { code: 3, message }
    }
}

fn load_net(path: &Path) -> Result<NetworkDef, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{path:?}: {e}")))?;
    parse_network(&text).map_err(|e| Failure::input(format!("{path:?}: {e}")))
}

fn parse_range(text: &str) -> Result<std::ops::RangeInclusive<u32>, Failure> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| Failure::input(format!("range {text:?} must look like 4..12")))?;
    let lo: u32 = a
        .parse()
        .map_err(|_| Failure::input(format!("bad range bound in {text:?}")))?;
    let hi: u32 = b
        .trim_start_matches('=')
        .parse()
        .map_err(|_| Failure::input(format!("bad range bound in {text:?}")))?;
    if lo < 1 || hi < lo {
        return Err(Failure::input(format!("empty range {text:?}")));
    }
    Ok(lo..=hi)
}

fn parse_batches(text: &str) -> Result<Vec<u64>, Failure> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let b: u64 = part
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("bad batch value {part:?}")))?;
        if b < 1 {
            return Err(Failure::input("batch values must be >= 1".into()));
        }
        out.push(b);
    }
    if out.is_empty() {
        return Err(Failure::input("batch list is empty".into()));
    }
    Ok(out)
}

/// Buffered output: nothing touches the filesystem until the command has
/// fully succeeded.
struct OutBox {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutBox {
    fn new() -> Self {
        Self { files: Vec::new() }
    }
    fn push(&mut self, path: PathBuf, contents: impl Into<Vec<u8>>) {
        self.files.push((path, contents.into()));
    }
    fn commit(self) -> Result<(), Failure> {
        for (path, bytes) in self.files {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)
                        .map_err(|e| Failure::input(format!("{dir:?}: {e}")))?;
                }
            }
            std::fs::write(&path, bytes).map_err(|e| Failure::input(format!("{path:?}: {e}")))?;
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Dse {
            device,
            rows,
            cols,
            top,
            out,
            format,
        } => cmd_dse(&device, &rows, &cols, top, out, format),
        Command::Schedule {
            net,
            arch,
            batch,
            policy,
            out,
        } => cmd_schedule(&net, &arch, batch, policy.into(), out),
        Command::Simulate {
            net,
            arch,
            timing,
            batch,
            policy,
            out,
            format,
        } => cmd_simulate(&net, &arch, &timing, &batch, policy.into(), out, format),
        Command::Infer {
            net,
            weights,
            sidecar,
            input,
            output,
            batch,
        } => cmd_infer(&net, &weights, sidecar, &input, &output, batch),
        Command::Roofline {
            net,
            arch,
            timing,
            batch,
            policy,
            out,
        } => cmd_roofline(&net, &arch, &timing, &batch, policy.into(), out),
        Command::Validate {
            net,
            arch,
            batch,
            policy,
            seed,
            emit_weights,
        } => cmd_validate(&net, &arch, batch, policy.into(), seed, emit_weights),
    }
}

fn cmd_dse(
    device: &Path,
    rows: &str,
    cols: &str,
    top: usize,
    out: Option<PathBuf>,
    format: Format,
) -> Result<(), Failure> {
    let dev =
        DeviceSpec::load(device).map_err(|e| Failure::input(format!("{device:?}: {e}")))?;
    let rows = parse_range(rows)?;
    let cols = parse_range(cols)?;
    let result = dse_grid_search(&dev, rows, cols).map_err(Failure::from_input)?;

    let mut grid_csv = String::from("n_rows,n_cols,dsps,ramb18,peak_gops,feasible,reasons\n");
    for p in &result.grid {
        let _ = writeln!(
            grid_csv,
            "{},{},{},{},{:.2},{},{}",
            p.n_rows,
            p.n_cols,
            p.estimate.dsps,
            p.estimate.ramb18,
            p.estimate.peak_gops,
            p.feasible,
            p.reasons.join("; ")
        );
    }

    println!(
        "device {}: {} grid points, {} feasible",
        dev.name,
        result.grid.len(),
        result.ranked.len()
    );
    if result.ranked.is_empty() {
        println!("no feasible configuration in the explored ranges");
    }
    for (i, p) in result.ranked.iter().take(top).enumerate() {
        println!(
            "#{} rows={} cols={} sops={} dsp={} ramb18={} peak={:.2} GOPS",
            i + 1,
            p.n_rows,
            p.n_cols,
            p.n_rows * p.n_cols,
            p.estimate.dsps,
            p.estimate.ramb18,
            p.estimate.peak_gops
        );
    }

    if let Some(dir) = out {
        let mut outbox = OutBox::new();
        match format {
            Format::Csv => outbox.push(dir.join("dse_grid.csv"), grid_csv),
            Format::Json => outbox.push(
                dir.join("dse_grid.json"),
                serde_json::to_vec_pretty(&result.grid)
                    .map_err(|e| Failure::internal(e.to_string()))?,
            ),
        }
        let ranked: Vec<_> = result.ranked.iter().take(top).collect();
        outbox.push(
            dir.join("dse_ranked.json"),
            serde_json::to_vec_pretty(&ranked).map_err(|e| Failure::internal(e.to_string()))?,
        );
        outbox.commit()?;
    }
    Ok(())
}

fn cmd_schedule(
    net_path: &Path,
    arch: &ArchArgs,
    batch: u64,
    policy: Policy,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let net = load_net(net_path)?;
    let cfg = arch.resolve()?;
    let plan = plan_stream(&net, batch).map_err(Failure::from_input)?;
    let stream = schedule_network(&net, &cfg, &plan, policy).map_err(|e| {
        Failure::verify(format!("scheduling failed: {e}"))
    })?;
    let violations = verify_schedule(&stream, &cfg);

    println!(
        "scheduled {} commands for {} at B={batch} ({:?})",
        stream.commands.len(),
        net.name,
        policy
    );
    println!(
        "bytes: weights {} activations {} outputs {}",
        stream.total_bytes(tcnsim_core::scheduler::CommandKind::LoadWeights),
        stream.total_bytes(tcnsim_core::scheduler::CommandKind::LoadActivations),
        stream.total_bytes(tcnsim_core::scheduler::CommandKind::StoreOutputs),
    );
    if policy == Policy::Resident {
        let resident: Vec<u32> = stream
            .meta
            .residency
            .iter()
            .filter(|r| r.resident)
            .map(|r| r.layer_id)
            .collect();
        let fallback: Vec<u32> = stream
            .meta
            .residency
            .iter()
            .filter(|r| !r.resident)
            .map(|r| r.layer_id)
            .collect();
        println!("resident layers: {resident:?}");
        println!("streaming fallback layers: {fallback:?}");
    }

    if !violations.is_empty() {
        for v in &violations {
            eprintln!("rule ({}) {}", v.rule, v.message);
        }
        return Err(Failure::verify(format!(
            "schedule verification found {} violation(s)",
            violations.len()
        )));
    }
    println!("verification: PASS");

    if let Some(dir) = out {
        let mut outbox = OutBox::new();
        outbox.push(
            dir.join(format!("{}_b{batch}.stream.jsonl", net.name)),
            stream.to_jsonl(),
        );
        outbox.commit()?;
    }
    Ok(())
}

fn cmd_simulate(
    net_path: &Path,
    arch: &ArchArgs,
    timing: &TimingArgs,
    batch: &str,
    policy: Policy,
    out: Option<PathBuf>,
    format: Format,
) -> Result<(), Failure> {
    let net = load_net(net_path)?;
    let cfg = arch.resolve()?;
    let (_, tm) = timing.resolve(&cfg)?;
    let batches = parse_batches(batch)?;

    let sweep =
        batch_sweep(&net, &cfg, &tm, &batches, policy).map_err(Failure::from_input)?;
    for (b, reason) in &sweep.failures {
        eprintln!("B={b}: {reason}");
    }
    if !sweep.failures.is_empty() {
        return Err(Failure::verify(format!(
            "{} batch point(s) failed",
            sweep.failures.len()
        )));
    }

    let mut outbox = OutBox::new();
    for point in &sweep.points {
        let r = &point.report;
        print!(
            "B={}: {:.4} ms, {:.3} GOPS achieved of {:.3} peak, efficiency {:.4}, \
             {:.4} ms/sample",
            point.batch,
            r.time_ms(),
            r.total.achieved_gops,
            r.peak_gops,
            r.efficiency(),
            point.time_per_sample_ms
        );
        match &point.realtime {
            Some(v) => println!(
                ", real-time {} ({:.4} ms deadline at {} Hz)",
                if v.pass { "PASS" } else { "FAIL" },
                v.deadline_ms,
                v.sample_rate_hz
            ),
            None => println!(),
        }
        if let Some(dir) = &out {
            let stem = format!("{}_b{}", net.name, point.batch);
            match format {
                Format::Csv => outbox.push(dir.join(format!("{stem}.csv")), r.to_csv()),
                Format::Json => outbox.push(
                    dir.join(format!("{stem}.json")),
                    serde_json::to_vec_pretty(r).map_err(|e| Failure::internal(e.to_string()))?,
                ),
            }
        }
    }
    outbox.commit()
}

fn read_stream_file(path: &Path, channels: usize) -> Result<QTensor, Failure> {
    let blob = std::fs::read(path).map_err(|e| Failure::input(format!("{path:?}: {e}")))?;
    if blob.len() % 2 != 0 {
        return Err(Failure::input(format!(
            "{path:?}: odd byte count {} for 16-bit samples",
            blob.len()
        )));
    }
    let samples: Vec<i16> = blob
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]))
        .collect();
    if !samples.len().is_multiple_of(channels) {
        return Err(Failure::input(format!(
            "{path:?}: {} samples do not divide into frames of {channels} channels",
            samples.len()
        )));
    }
    let frames = samples.len() / channels;
    // Frame-interleaved on disk; channel-major in memory.
    let mut tensor = QTensor::new(channels, frames, QFormat::q8_8());
    for t in 0..frames {
        for c in 0..channels {
            tensor.set(c, t, samples[t * channels + c]);
        }
    }
    Ok(tensor)
}

fn write_stream_bytes(tensor: &QTensor) -> Vec<u8> {
    let mut blob = Vec::with_capacity(tensor.channels * tensor.length * 2);
    for t in 0..tensor.length {
        for c in 0..tensor.channels {
            blob.extend_from_slice(&tensor.get(c, t).to_le_bytes());
        }
    }
    blob
}

fn cmd_infer(
    net_path: &Path,
    weights: &Path,
    sidecar: Option<PathBuf>,
    input: &Path,
    output: &Path,
    batch: u64,
) -> Result<(), Failure> {
    let net = load_net(net_path)?;
    let sidecar = sidecar.unwrap_or_else(|| weights.with_extension("json"));
    let ws = read_weights(&net, weights, &sidecar)
        .map_err(|e| Failure::input(format!("weights: {e}")))?;
    let stream = read_stream_file(input, net.input_channels as usize)?;

    let (out_tensor, stats) =
        run_network_streaming(&net, &ws, &stream, batch).map_err(Failure::from_input)?;
    if out_tensor.length == 0 {
        eprintln!(
            "warning: stream of {} frames is shorter than the receptive field ({}); \
             zero output frames",
            stream.length,
            receptive_field(&net)
        );
    }
    println!(
        "inferred {} output frames x {} channels (B={batch})",
        out_tensor.length, out_tensor.channels
    );
    println!(
        "saturation: {} requantize, {} residual-add",
        stats.requant, stats.residual
    );

    let mut outbox = OutBox::new();
    outbox.push(output.to_path_buf(), write_stream_bytes(&out_tensor));
    outbox.commit()
}

fn cmd_roofline(
    net_path: &Path,
    arch: &ArchArgs,
    timing: &TimingArgs,
    batch: &str,
    policy: Policy,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let net = load_net(net_path)?;
    let cfg = arch.resolve()?;
    let (_, tm) = timing.resolve(&cfg)?;
    let batches = parse_batches(batch)?;
    let sweep =
        batch_sweep(&net, &cfg, &tm, &batches, policy).map_err(Failure::from_input)?;
    if !sweep.failures.is_empty() {
        for (b, reason) in &sweep.failures {
            eprintln!("B={b}: {reason}");
        }
        return Err(Failure::verify("roofline sweep had failing points".into()));
    }
    let csv = roofline_csv(&sweep.points);
    print!("{csv}");
    for p in &sweep.points {
        let r = p.report.roofline;
        if r.achieved_gops > r.attainable_gops * 1.01 {
            return Err(Failure::internal(format!(
                "B={}: achieved {:.3} GOPS above the roofline {:.3}",
                p.batch, r.achieved_gops, r.attainable_gops
            )));
        }
    }
    if let Some(dir) = out {
        let mut outbox = OutBox::new();
        outbox.push(dir.join(format!("{}_roofline.csv", net.name)), csv);
        outbox.commit()?;
    }
    Ok(())
}

fn cmd_validate(
    net_path: &Path,
    arch: &ArchArgs,
    batch: u64,
    policy: Policy,
    seed: u64,
    emit_weights: Option<PathBuf>,
) -> Result<(), Failure> {
    let net = load_net(net_path)?;
    let cfg = arch.resolve()?;
    println!(
        "{}: {} layers, receptive field {}",
        net.name,
        net.layers.len(),
        receptive_field(&net)
    );

    let plan = plan_stream(&net, batch).map_err(Failure::from_input)?;
    let stream = schedule_network(&net, &cfg, &plan, policy)
        .map_err(|e| Failure::verify(format!("scheduling failed: {e}")))?;
    let violations = verify_schedule(&stream, &cfg);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("rule ({}) {}", v.rule, v.message);
        }
        return Err(Failure::verify(format!(
            "schedule verification found {} violation(s)",
            violations.len()
        )));
    }
    println!("schedule verification: PASS");

    // Golden-model equivalence: replay the verified stream against a direct
    // execution over a synthetic history.
    let ws = WeightSet::synthetic(&net, seed);
    let total_stride: u64 = net.layers.iter().map(|l| l.stride as u64).product();
    let hist_len = (receptive_field(&net) + batch * total_stride + 16) as usize;
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
    let mut data = Vec::with_capacity(net.input_channels as usize * hist_len);
    for _ in 0..net.input_channels as usize * hist_len {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        data.push((state % 4001) as i16 - 2000);
    }
    let input = QTensor::from_data(net.input_channels as usize, hist_len, data, QFormat::q8_8())
        .map_err(|e| Failure::internal(e.to_string()))?;
    let mut stats = SaturationStats::default();
    let history = run_network_unrolled(&net, &ws, &input, &mut stats)
        .map_err(|e| Failure::internal(e.to_string()))?;
    let ctx = ReplayContext::from_histories(&net, &input, &history, &plan)
        .map_err(|e| Failure::internal(e.to_string()))?;
    let outcome =
        replay_stream(&stream, &ws, &ctx).map_err(|e| Failure::internal(e.to_string()))?;
    for (li, out) in outcome.outputs.iter().enumerate() {
        let want = history[li].tail(plan.layers[li].out_samples as usize);
        if out.data != want.data {
            return Err(Failure::verify(format!(
                "layer {} replay diverges from direct execution",
                net.layers[li].id
            )));
        }
    }
    println!("tiled replay vs golden model: PASS (B={batch}, seed {seed})");

    if let Some(dir) = emit_weights {
        std::fs::create_dir_all(&dir).map_err(|e| Failure::input(format!("{dir:?}: {e}")))?;
        let bin = dir.join(format!("{}_weights.bin", net.name));
        let side = dir.join(format!("{}_weights.json", net.name));
        write_weights(&ws, &bin, &side).map_err(|e| Failure::input(e.to_string()))?;
        println!("synthetic weights written to {bin:?}");
    }
    Ok(())
}
