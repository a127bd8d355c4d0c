use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use q2d2::analytics::{
    matched_rectangle, measure_utilization, mi_report, packing_efficiency, quantization_mse, run_sweep,
    uniform_latents, SWEEP_CSV_HEADER,
};
use q2d2::token_io::{ingest_latents, read_stream, write_stream, LatentFormat};
use q2d2::trainer::{make_synthetic_dataset, train, Activation, ToyPipeline, TrainConfig};
use q2d2::{build_grid, CodebookLayout, PairGridSpec, QuantizerConfig, TilingKind, TokenStreamHeader};

const DEFAULT_SEED: u64 = 0;

#[derive(Parser)]
#[command(name = "q2d2", version, about = "Two-dimensional grid quantization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a single pair grid and print or dump it.
    #[command(subcommand)]
    Grid(GridCommand),
    /// Quantize a latent stream into a token file.
    Quantize(QuantizeArgs),
    /// Turn a token file back into grid-point rows (CSV).
    Dequantize(DequantizeArgs),
    /// Utilization, distortion, packing and mutual-information reports.
    Analyze(AnalyzeArgs),
    /// Compare tilings and level schedules on one synthetic latent stream.
    Sweep(SweepArgs),
    /// Train the toy autoencoder and report its loss curve.
    TrainToy(TrainArgs),
    /// Measure quantization throughput.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum GridCommand {
    /// Print a summary, or the points with --dump.
    Build {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum)]
        dump: Option<DumpFormat>,
    },
    /// Write the points as CSV or SVG.
    Dump {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: DumpFormat,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    kind: TilingKind,
    /// `lx,ly`, or a single value for both axes.
    #[arg(long, value_delimiter = ',', num_args = 1..=2, required = true)]
    levels: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpFormat {
    Csv,
    Svg,
}

#[derive(Args)]
struct ConfigArgs {
    /// Tiling per pair, or one tiling for every pair.
    #[arg(long, value_delimiter = ',', required = true)]
    kinds: Vec<TilingKind>,
    /// Levels per latent dimension.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<usize>,
}

impl ConfigArgs {
    fn build(&self) -> Result<QuantizerConfig> {
        let pairs = self.levels.len() / 2;
        let tilings = match self.kinds.as_slice() {
            [one] => vec![*one; pairs],
            many => many.to_vec(),
        };
        Ok(QuantizerConfig::new(self.levels.clone(), tilings)?)
    }
}

#[derive(Args)]
struct LatentArgs {
    /// Latent rows: CSV, or little-endian f32 with --raw.
    #[arg(long)]
    latents: PathBuf,
    #[arg(long)]
    raw: bool,
    /// Pass values through tanh before quantizing.
    #[arg(long)]
    apply_tanh: bool,
}

impl LatentArgs {
    fn load(&self, d: usize) -> Result<Vec<Vec<f64>>> {
        let file = File::open(&self.latents).with_context(|| format!("opening {}", self.latents.display()))?;
        let format = if self.raw { LatentFormat::RawF32 } else { LatentFormat::Csv };
        let rows = ingest_latents(BufReader::new(file), format, d, self.apply_tanh)
            .with_context(|| format!("reading {}", self.latents.display()))?;
        Ok(rows.into_iter().map(|r| r.into_inner()).collect())
    }
}

#[derive(Args)]
struct QuantizeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    input: LatentArgs,
    /// Token file to write.
    #[arg(long, short)]
    output: PathBuf,
    /// Tokens per second recorded in the header (0 = unspecified).
    #[arg(long, default_value_t = 0)]
    tps: u32,
}

#[derive(Args)]
struct DequantizeArgs {
    /// Token file to read.
    #[arg(long, short)]
    input: PathBuf,
    /// CSV output; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Emit unbounded values in [-1, 1] instead of grid coordinates.
    #[arg(long)]
    unbound: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["tokens", "latents"])))]
struct AnalyzeArgs {
    /// Token file: utilization and bitrate.
    #[arg(long, conflicts_with = "latents")]
    tokens: Option<PathBuf>,
    /// Tiling per pair for --latents.
    #[arg(long, value_delimiter = ',', requires = "latents")]
    kinds: Vec<TilingKind>,
    /// Levels per dimension for --latents.
    #[arg(long, value_delimiter = ',', requires = "latents")]
    levels: Vec<usize>,
    /// Latent stream: distortion, MI and packing (requires --kinds and --levels).
    #[arg(long, requires_all = ["kinds", "levels"])]
    latents: Option<PathBuf>,
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    apply_tanh: bool,
    /// Histogram bins per axis for pre-quantization MI.
    #[arg(long, default_value_t = 16)]
    bins: usize,
    /// Monte Carlo samples per pair for packing efficiency.
    #[arg(long, default_value_t = 200_000)]
    packing_samples: usize,
    /// Per-pair CSV table.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "rect,hex,rhombic")]
    kinds: Vec<TilingKind>,
    /// Levels per dimension; a single value is repeated.
    #[arg(long, value_delimiter = ',', default_value = "7")]
    levels: Vec<usize>,
    /// Latent dimension used when --levels is a single value.
    #[arg(long, default_value_t = 6)]
    dim: usize,
    #[arg(long, default_value_t = 100_000)]
    frames: usize,
    /// Add a rectangle row with the same per-pair point counts for every non-rectangle row.
    #[arg(long)]
    matched: bool,
    /// RNG seed (default: Q2D2_SEED or 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 5000)]
    steps: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value = "rhombic")]
    kind: TilingKind,
    #[arg(long, value_delimiter = ',', default_value = "7,7,7,7,7,7")]
    levels: Vec<usize>,
    #[arg(long, default_value_t = 32)]
    input_dim: usize,
    #[arg(long, default_value_t = 10_000)]
    frames: usize,
    #[arg(long, value_enum, default_value = "tanh")]
    activation: ActivationArg,
    /// RNG seed (default: Q2D2_SEED or 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Loss-curve CSV; stdout when omitted.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ActivationArg {
    Tanh,
    Clamp,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "rect,hex,rhombic")]
    kinds: Vec<TilingKind>,
    #[arg(long, value_delimiter = ',', default_value = "7,7,7,7,7,7")]
    levels: Vec<usize>,
    #[arg(long, default_value_t = 200_000)]
    frames: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

fn seed(explicit: Option<u64>) -> Result<u64> {
    if let Some(s) = explicit {
        return Ok(s);
    }
    match std::env::var("Q2D2_SEED") {
        Ok(v) => v.trim().parse().with_context(|| format!("Q2D2_SEED={v:?} is not an unsigned integer")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn grid_of(args: &GridArgs) -> Result<q2d2::PairGrid> {
    let (lx, ly) = match args.levels[..] {
        [l] => (l, l),
        [lx, ly] => (lx, ly),
        _ => unreachable!("clap limits --levels to two values"),
    };
    Ok(build_grid(PairGridSpec::from_levels(args.kind, lx, ly)?)?)
}

fn dump(grid: &q2d2::PairGrid, format: DumpFormat, out: &mut dyn Write) -> Result<()> {
    match format {
        DumpFormat::Csv => out.write_all(grid.to_csv().as_bytes())?,
        DumpFormat::Svg => out.write_all(grid.to_svg().as_bytes())?,
    }
    Ok(out.flush()?)
}

fn cmd_grid(cmd: GridCommand) -> Result<()> {
    match cmd {
        GridCommand::Build { grid, dump: Some(format) } => dump(&grid_of(&grid)?, format, &mut *output(None)?),
        GridCommand::Build { grid, dump: None } => {
            let g = grid_of(&grid)?;
            let (x0, x1, y0, y1) = g.bounds();
            let spec = g.spec();
            let mut out = output(None)?;
            writeln!(out, "kind={}", g.kind())?;
            writeln!(out, "lx={}\nly={}", spec.lx, spec.ly)?;
            writeln!(out, "points={}", g.len())?;
            writeln!(out, "dx={}\ndy={}", g.lattice().dx, g.lattice().dy)?;
            writeln!(out, "x_range={x0},{x1}\ny_range={y0},{y1}")?;
            writeln!(out, "distinct_y={}", g.distinct_y_count(false))?;
            writeln!(out, "distinct_y_within_spread={}", g.distinct_y_count(true))?;
            Ok(out.flush()?)
        }
        GridCommand::Dump { grid, format, out } => dump(&grid_of(&grid)?, format, &mut *output(out.as_deref())?),
    }
}

fn cmd_quantize(args: QuantizeArgs) -> Result<()> {
    let config = args.config.build()?;
    let latents = args.input.load(config.dim())?;
    let frames: Vec<Vec<u32>> = config.quantize_batch(&latents)?.into_iter().map(|q| q.pair_codes).collect();
    let header = TokenStreamHeader::new(&config, args.tps, frames.len() as u64);
    let file = File::create(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    let bytes = write_stream(&header, &frames, BufWriter::new(file))?;
    eprintln!("wrote {} frames ({bytes} bytes) to {}", frames.len(), args.output.display());
    Ok(())
}

fn load_tokens(path: &Path) -> Result<(TokenStreamHeader, Vec<Vec<u32>>)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_stream(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn cmd_dequantize(args: DequantizeArgs) -> Result<()> {
    let (header, frames) = load_tokens(&args.input)?;
    let config = header.config()?;
    let mut out = output(args.output.as_deref())?;
    let names: Vec<String> = (0..config.dim()).map(|i| format!("v{i}")).collect();
    writeln!(out, "frame,{}", names.join(","))?;
    for (i, codes) in frames.iter().enumerate() {
        let q = config.dequantize(codes)?;
        let values = if args.unbound { config.unbound(&q.values) } else { q.values };
        let cells: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{i},{}", cells.join(","))?;
    }
    Ok(out.flush()?)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let mut out = output(None)?;
    let mut table = vec!["pair,kind,lx,ly,points,used,fraction,mse_bounded,mse_latent,mi_pre,mi_post,nsm".to_string()];
    if let Some(path) = &args.tokens {
        let (header, frames) = load_tokens(path)?;
        let config = header.config()?;
        let layout = CodebookLayout::from_config(&config)?;
        let report = measure_utilization(frames.iter().map(|f| f.as_slice()), &layout)?;
        writeln!(out, "frames={}", frames.len())?;
        writeln!(out, "codebook_size={}", layout.total_size())?;
        writeln!(out, "bits_per_token={:.6}", layout.bits_per_token())?;
        if header.tokens_per_second > 0 {
            writeln!(out, "tokens_per_second={}", header.tokens_per_second)?;
            writeln!(out, "bandwidth_bps={:.3}", layout.bandwidth(header.tokens_per_second as f64)?)?;
        }
        for (k, v) in report.key_values() {
            writeln!(out, "{k}={v}")?;
        }
        for (j, grid) in config.grids().iter().enumerate() {
            let s = grid.spec();
            table.push(format!(
                "{j},{},{},{},{},{},{:.6},,,,,",
                grid.kind(),
                s.lx,
                s.ly,
                grid.len(),
                report.per_pair_used[j],
                report.per_pair_fraction[j]
            ));
        }
    } else {
        let Some(latents) = &args.latents else {
            bail!("analyze needs --tokens or --latents");
        };
        let config = ConfigArgs { kinds: args.kinds.clone(), levels: args.levels.clone() }.build()?;
        let input = LatentArgs { latents: latents.clone(), raw: args.raw, apply_tanh: args.apply_tanh };
        let latents = input.load(config.dim())?;
        let layout = CodebookLayout::from_config(&config)?;
        let frames: Vec<Vec<u32>> = config.quantize_batch(&latents)?.into_iter().map(|q| q.pair_codes).collect();
        let util = measure_utilization(frames.iter().map(|f| f.as_slice()), &layout)?;
        let mse = quantization_mse(&latents, &config)?;
        let mi = mi_report(&latents, &config, args.bins).ok();
        writeln!(out, "frames={}", latents.len())?;
        writeln!(out, "codebook_size={}", layout.total_size())?;
        writeln!(out, "bits_per_token={:.6}", layout.bits_per_token())?;
        writeln!(out, "mse_bounded={:.8}", mse.total_bounded)?;
        writeln!(out, "mse_latent={:.8}", mse.total_latent)?;
        for (k, v) in util.key_values() {
            writeln!(out, "{k}={v}")?;
        }
        match &mi {
            Some(mi) => {
                writeln!(out, "mi_units={}", mi.units)?;
                writeln!(out, "mi_bins={}", mi.histogram_bins)?;
                writeln!(out, "mi_bias_bound={:.6}", mi.bias_bound)?;
            }
            None => writeln!(out, "mi=unavailable (needs at least 1000 frames)")?,
        }
        for (j, grid) in config.grids().iter().enumerate() {
            let s = grid.spec();
            let nsm = packing_efficiency(grid, args.packing_samples, j as u64)?.normalized_second_moment;
            let (pre, post) = mi
                .as_ref()
                .map(|m| (format!("{:.6}", m.per_pair_mi_pre[j]), format!("{:.6}", m.per_pair_mi_post[j])))
                .unwrap_or_default();
            table.push(format!(
                "{j},{},{},{},{},{},{:.6},{:.8},{:.8},{pre},{post},{nsm:.6}",
                grid.kind(),
                s.lx,
                s.ly,
                grid.len(),
                util.per_pair_used[j],
                util.per_pair_fraction[j],
                mse.per_pair_bounded[j],
                mse.per_pair_latent[j],
            ));
        }
    }
    match &args.csv {
        Some(path) => {
            let mut f = output(Some(path))?;
            for line in &table {
                writeln!(f, "{line}")?;
            }
            f.flush()?;
        }
        None => {
            writeln!(out)?;
            for line in &table {
                writeln!(out, "{line}")?;
            }
        }
    }
    Ok(out.flush()?)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let levels = match args.levels[..] {
        [l] => {
            ensure!(args.dim >= 2 && args.dim.is_multiple_of(2), "--dim must be a positive even number");
            vec![l; args.dim]
        }
        _ => args.levels.clone(),
    };
    let mut configs = Vec::new();
    for &kind in &args.kinds {
        let config = QuantizerConfig::uniform(kind, levels.clone())?;
        if args.matched && kind != TilingKind::Rectangle {
            let rect = matched_rectangle(&config)?;
            configs.push((kind.to_string(), config));
            configs.push((format!("rect-matched-{kind}"), rect));
        } else {
            configs.push((kind.to_string(), config));
        }
    }
    let latents = uniform_latents(seed(args.seed)?, args.frames, levels.len());
    let rows = run_sweep(&configs, &latents)?;
    let mut out = output(args.output.as_deref())?;
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(out.flush()?)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let seed = seed(args.seed)?;
    let quantizer = QuantizerConfig::uniform(args.kind, args.levels.clone())?;
    let activation = match args.activation {
        ActivationArg::Tanh => Activation::Tanh,
        ActivationArg::Clamp => Activation::Clamp,
    };
    let mut pipeline = ToyPipeline::new(args.input_dim, quantizer, seed).with_activation(activation);
    let data = make_synthetic_dataset(seed, args.frames, args.input_dim);
    let config = TrainConfig {
        steps: args.steps,
        learning_rate: args.lr,
        batch_size: args.batch,
        seed,
        ..TrainConfig::default()
    };
    let report = train(&mut pipeline, &data, &config)?;
    match &args.loss_csv {
        Some(path) => {
            let mut f = output(Some(path))?;
            f.write_all(report.loss_csv().as_bytes())?;
            f.flush()?;
            print!("{}", report.summary());
        }
        None => {
            let mut out = output(None)?;
            out.write_all(report.loss_csv().as_bytes())?;
            writeln!(out)?;
            out.write_all(report.summary().as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    ensure!(args.frames > 0 && args.repeats > 0, "--frames and --repeats must be positive");
    let latents = uniform_latents(DEFAULT_SEED, args.frames, args.levels.len());
    let mut out = output(None)?;
    writeln!(out, "kind,mode,frames,seconds,frames_per_second")?;
    for &kind in &args.kinds {
        let config = QuantizerConfig::uniform(kind, args.levels.clone())?;
        for (mode, parallel) in [("sequential", false), ("batch", true)] {
            let mut best = f64::INFINITY;
            for _ in 0..args.repeats {
                let start = Instant::now();
                let q = if parallel {
                    config.quantize_batch(&latents)?
                } else {
                    config.quantize_batch_sequential(&latents)?
                };
                best = best.min(start.elapsed().as_secs_f64());
                std::hint::black_box(q);
            }
            writeln!(out, "{kind},{mode},{},{best:.6},{:.0}", args.frames, args.frames as f64 / best)?;
        }
    }
    writeln!(out, "# batch mode uses {}", if q2d2::par::is_parallel() { "rayon" } else { "one thread" })?;
    Ok(out.flush()?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Grid(cmd) => cmd_grid(cmd),
        Command::Quantize(args) => cmd_quantize(args),
        Command::Dequantize(args) => cmd_dequantize(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::TrainToy(args) => cmd_train(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn main() -> ExitCode {
    // clap prints usage errors and exits with status 2 itself.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
