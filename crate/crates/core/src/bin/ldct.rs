use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ldct::boxstats::BoxRadius;
use ldct::cli::{self, PipelineConfig};
use ldct::ctgeom::{FanBeamGeometry, FilterKind, ReconFilter};
use ldct::filters::Method;
use ldct::noise_model::SystemFactor;
use ldct::{Error, Result};

/// Low-dose CT simulation, sinogram denoising and fan-beam reconstruction.
#[derive(Parser)]
#[command(name = "ldct", version)]
struct Cli {
    /// JSON config; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for within-stage parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an n x n modified Shepp-Logan phantom (SGF1 plus PGM).
    Phantom {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fan-beam projection of an SGF1 image.
    Project {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Add signal-dependent Gaussian noise to a sinogram.
    Addnoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Filter a sinogram with one method: none, med, llmmse, llmmse-raw, llmmse-b.
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Filtered backprojection of a sinogram (SGF1 plus PGM).
    Fbp {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Output image size; defaults to the config's phantom size.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        recon: ReconArgs,
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Full experiment: phantom, projection, noise, every method, FBP, metrics.
    Pipeline {
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Comma-separated method list.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long)]
        phantom_size: Option<usize>,
        #[arg(long)]
        timing_runs: Option<usize>,
        #[arg(long)]
        scale: Option<f64>,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        recon: ReconArgs,
    },
    /// Time box_mean and llmmse_block across grid sizes and radii.
    Bench {
        /// Sizes as N or RxC, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "888x984")]
        sizes: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1,5,15")]
        radii: Vec<usize>,
        #[arg(long, default_value_t = 9)]
        repeats: usize,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    angles: Option<usize>,
    #[arg(long)]
    source_distance: Option<f64>,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    f: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    variance_scale: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    radius: Option<usize>,
    /// Leave the LLMMSE gain unclamped.
    #[arg(long)]
    no_clamp: bool,
}

#[derive(Args)]
struct ReconArgs {
    /// ramp or hanning.
    #[arg(long)]
    recon_filter: Option<String>,
    #[arg(long)]
    cutoff: Option<f64>,
}

impl GeometryArgs {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        if self.bins.is_none() && self.angles.is_none() && self.source_distance.is_none() {
            return Ok(());
        }
        let g = &cfg.geometry;
        let bins = self.bins.unwrap_or(g.n_bins());
        let angles = self.angles.unwrap_or(g.n_angles());
        cfg.geometry = match self.source_distance {
            Some(d) => FanBeamGeometry::new(bins, angles, d)?,
            None => FanBeamGeometry::with_fan_angle(bins, angles, g.source_to_center(), g.fan_half_angle())?,
        };
        Ok(())
    }
}

impl NoiseArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        let n = &mut cfg.noise;
        if let Some(f) = self.f {
            n.f = SystemFactor::Scalar(f);
        }
        if let Some(eta) = self.eta {
            n.eta = eta;
        }
        if let Some(s) = self.variance_scale {
            n.variance_scale = s;
        }
        if let Some(seed) = self.seed {
            n.seed = seed;
        }
    }
}

impl FilterArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(r) = self.radius {
            cfg.filter.radius = BoxRadius(r);
        }
        if self.no_clamp {
            cfg.filter.clamp_coefficients = false;
        }
    }
}

impl ReconArgs {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        if let Some(kind) = &self.recon_filter {
            cfg.recon_filter.kind = match kind.as_str() {
                "ramp" => FilterKind::Ramp,
                "hanning" => FilterKind::Hanning,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown reconstruction filter {other:?}; valid: ramp, hanning"
                    )))
                }
            };
        }
        if let Some(c) = self.cutoff {
            cfg.recon_filter = ReconFilter { cutoff: c, ..cfg.recon_filter };
        }
        cfg.recon_filter.validate()
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if cfg.threads == 0 {
        return Err(Error::InvalidParameter("threads must be at least 1".into()));
    }
    if !matches!(cli.command, Command::Pipeline { .. }) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }

    match cli.command {
        Command::Phantom { n, out } => cli::cmd_phantom(n.unwrap_or(cfg.phantom_size), &out, &cfg),
        Command::Project { input, out, geometry, scale } => {
            geometry.apply(&mut cfg)?;
            cfg.sinogram_scale = scale.unwrap_or(cfg.sinogram_scale);
            cli::cmd_project(&input, &out, &cfg)
        }
        Command::Addnoise { input, out, noise } => {
            noise.apply(&mut cfg);
            cli::cmd_addnoise(&input, &out, &cfg)
        }
        Command::Filter { input, method, out, noise, filter } => {
            let method: Method = method.parse()?;
            noise.apply(&mut cfg);
            filter.apply(&mut cfg);
            cli::cmd_filter(&input, method, &out, &cfg)
        }
        Command::Fbp { input, out, n, geometry, recon, scale } => {
            geometry.apply(&mut cfg)?;
            recon.apply(&mut cfg)?;
            cfg.sinogram_scale = scale.unwrap_or(cfg.sinogram_scale);
            cli::cmd_fbp(&input, n.unwrap_or(cfg.phantom_size), &out, &cfg)
        }
        Command::Pipeline {
            out_dir,
            methods,
            phantom_size,
            timing_runs,
            scale,
            geometry,
            noise,
            filter,
            recon,
        } => {
            if let Some(d) = out_dir {
                cfg.output_dir = d;
            }
            if let Some(m) = methods {
                cfg.methods = m.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            }
            cfg.phantom_size = phantom_size.unwrap_or(cfg.phantom_size);
            cfg.timing_runs = timing_runs.unwrap_or(cfg.timing_runs);
            cfg.sinogram_scale = scale.unwrap_or(cfg.sinogram_scale);
            geometry.apply(&mut cfg)?;
            noise.apply(&mut cfg);
            filter.apply(&mut cfg);
            recon.apply(&mut cfg)?;
            let summary = cli::cmd_pipeline(&cfg)?;
            for o in &summary.outcomes {
                let width = o.edge_width.map_or("flat".to_string(), |w| format!("{w:.3}"));
                println!(
                    "{:<10} snr {:>8.4} dB  runtime {:.4} s  edge width {width}",
                    o.report.method, o.report.snr_db, o.report.runtime_seconds
                );
            }
            println!("outputs in {}", summary.output_dir.display());
            Ok(())
        }
        Command::Bench { sizes, radii, repeats, out } => {
            let sizes = sizes.iter().map(|s| cli::parse_size(s)).collect::<Result<Vec<_>>>()?;
            let rows = cli::cmd_bench(&sizes, &radii, repeats)?;
            match out {
                Some(path) => {
                    let file = File::create(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
                    cli::write_bench_csv(BufWriter::new(file), &rows)
                }
                None => cli::write_bench_csv(io::stdout().lock(), &rows),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
