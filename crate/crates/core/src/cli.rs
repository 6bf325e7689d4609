//! Command implementations behind the `ldct` binary.
//!
//! Every command is a plain function over a [`PipelineConfig`], so the same
//! code paths serve the binary, the examples and the tests. Stage outputs are
//! rounded to `f32` exactly as an SGF1 save/load cycle would round them, which
//! makes a fused [`cmd_pipeline`] run and a chain of individual commands
//! produce identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::boxstats::{box_mean_into, BoxRadius, BoxWorkspace};
use crate::ctgeom::{fbp_fan, forward_project_fan, shepp_logan, FanBeamGeometry, ReconFilter};
use crate::filters::{llmmse_block_into, BlockWorkspace, FilterConfig, Method};
use crate::grid::{load_raw, save_pgm, save_raw, Image2D, Sinogram};
use crate::metrics::{
    csv_error, edge_width, extract_profile, median, snr_db, time_filter, write_profiles_csv, write_report_csv,
    EvalReport,
};
use crate::noise_model::{add_noise, estimate_noise_variance, NoiseParams};
use crate::rng::CounterRng;
use crate::{Error, Result};

/// Sinogram units per unit line integral (in image half-widths).
pub const DEFAULT_SINOGRAM_SCALE: f64 = 7000.0;

/// Column and 1-based row range of the line profile used for edge width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileLocation {
    pub row_start: usize,
    pub row_end: usize,
    pub col: usize,
}

/// Linear grey-level window for PGM renderings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplayWindow {
    pub min: f64,
    pub max: f64,
}

impl Default for DisplayWindow {
    fn default() -> Self {
        DisplayWindow { min: 0.0, max: 0.5 }
    }
}

/// Image the SNR is measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnrReference {
    /// The sampled phantom itself.
    #[default]
    Phantom,
    /// FBP of the noise-free sinogram, which removes the reconstruction
    /// error common to every method.
    NoiseFreeRecon,
}

/// Everything a run needs. Missing JSON fields take the default values, so
/// `{}` is the standard desk-scale experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub phantom_size: usize,
    pub geometry: FanBeamGeometry,
    /// Multiplier from projector line integrals to noise-model units; the
    /// reconstruction divides it back out.
    pub sinogram_scale: f64,
    pub noise: NoiseParams,
    pub filter: FilterConfig,
    pub recon_filter: ReconFilter,
    pub methods: Vec<Method>,
    pub output_dir: PathBuf,
    pub profile: ProfileLocation,
    pub snr_reference: SnrReference,
    pub display_window: DisplayWindow,
    /// Timed repetitions per method (median reported, after one warm-up).
    pub timing_runs: usize,
    /// Worker threads for within-stage parallelism.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            phantom_size: 128,
            geometry: FanBeamGeometry::new(444, 492, 2.5).expect("desk geometry is valid"),
            sinogram_scale: DEFAULT_SINOGRAM_SCALE,
            noise: NoiseParams::default(),
            filter: FilterConfig::default(),
            recon_filter: ReconFilter::default(),
            methods: vec![Method::None, Method::Median, Method::Llmmse, Method::LlmmseBlock],
            output_dir: PathBuf::from("ldct-out"),
            profile: ProfileLocation {
                row_start: 10,
                row_end: 20,
                col: 40,
            },
            snr_reference: SnrReference::Phantom,
            display_window: DisplayWindow::default(),
            timing_runs: 5,
            threads: 1,
        }
    }
}

impl PipelineConfig {
    /// Full-size protocol: 256 x 256 phantom and an 888 x 984 sinogram.
    pub fn paper_scale() -> Self {
        PipelineConfig {
            phantom_size: 256,
            geometry: FanBeamGeometry::default(),
            profile: ProfileLocation {
                row_start: 203,
                row_end: 209,
                col: 126,
            },
            ..PipelineConfig::default()
        }
    }

    /// Reads a JSON config. An empty file yields the defaults.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::parse(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn parse(text: &str) -> serde_json::Result<Self> {
        if text.trim().is_empty() {
            return Ok(PipelineConfig::default());
        }
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.phantom_size == 0 {
            return Err(Error::InvalidDimensions { rows: 0, cols: 0 });
        }
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        if !(self.sinogram_scale > 0.0 && self.sinogram_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sinogram_scale must be > 0, got {}",
                self.sinogram_scale
            )));
        }
        if !(self.display_window.max > self.display_window.min) {
            return Err(Error::InvalidParameter("display window must have max > min".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidParameter("threads must be at least 1".into()));
        }
        let ProfileLocation { row_start, row_end, col } = self.profile;
        let n = self.phantom_size;
        if row_start == 0 || row_start >= row_end || row_end > n || col == 0 || col > n {
            return Err(Error::IndexOutOfRange(format!(
                "profile rows {row_start}..={row_end}, column {col} on a {n}x{n} reconstruction (1-based)"
            )));
        }
        self.filter.validate()?;
        self.recon_filter.validate()?;
        self.noise.validate(self.geometry.n_bins())
    }
}

fn window_of(cfg: &PipelineConfig) -> (f64, f64) {
    (cfg.display_window.min, cfg.display_window.max)
}

/// Sampled phantom, rounded to its stored precision.
pub fn phantom_stage(n: usize) -> Result<Image2D> {
    shepp_logan(n)?.quantized_f32()
}

/// Scaled fan-beam projection of `image`.
pub fn project_stage(image: &Image2D, geom: &FanBeamGeometry, scale: f64) -> Result<Sinogram> {
    forward_project_fan(image, geom)?.map(|v| v * scale)?.quantized_f32()
}

pub fn noise_stage(sino: &Sinogram, noise: &NoiseParams) -> Result<Sinogram> {
    add_noise(sino, noise)?.quantized_f32()
}

/// Noise variance map for the methods that need one.
fn sigma2_for(method: Method, q: &Sinogram, cfg: &PipelineConfig) -> Result<Option<Image2D>> {
    if method.needs_noise_variance() {
        estimate_noise_variance(q, &cfg.noise, cfg.filter.radius).map(Some)
    } else {
        Ok(None)
    }
}

pub fn filter_stage(q: &Sinogram, method: Method, cfg: &PipelineConfig) -> Result<Sinogram> {
    let sigma2 = sigma2_for(method, q, cfg)?;
    method.apply(q, sigma2.as_ref(), &cfg.filter)?.quantized_f32()
}

/// Reconstruction of a scaled sinogram.
pub fn fbp_stage(sino: &Sinogram, geom: &FanBeamGeometry, filt: &ReconFilter, n: usize, scale: f64) -> Result<Image2D> {
    let unscaled = sino.map(|v| v / scale)?;
    fbp_fan(&unscaled, geom, filt, n)?.quantized_f32()
}

fn pgm_path(out: &Path) -> PathBuf {
    out.with_extension("pgm")
}

/// Writes the `n x n` phantom to `out` (SGF1) and a PGM beside it.
pub fn cmd_phantom(n: usize, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let p = phantom_stage(n)?;
    save_raw(out, &p)?;
    let (lo, hi) = window_of(cfg);
    save_pgm(pgm_path(out), &p, lo, hi)
}

pub fn cmd_project(image_path: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let image = load_raw(image_path)?;
    save_raw(out, &project_stage(&image, &cfg.geometry, cfg.sinogram_scale)?)
}

pub fn cmd_addnoise(sino_path: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let sino = load_raw(sino_path)?;
    save_raw(out, &noise_stage(&sino, &cfg.noise)?)
}

pub fn cmd_filter(sino_path: &Path, method: Method, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let q = load_raw(sino_path)?;
    save_raw(out, &filter_stage(&q, method, cfg)?)
}

/// Reconstructs an `n x n` image; also writes a PGM beside `out`.
pub fn cmd_fbp(sino_path: &Path, n: usize, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let sino = load_raw(sino_path)?;
    let image = fbp_stage(&sino, &cfg.geometry, &cfg.recon_filter, n, cfg.sinogram_scale)?;
    save_raw(out, &image)?;
    let (lo, hi) = window_of(cfg);
    save_pgm(pgm_path(out), &image, lo, hi)
}

/// Result of one method in a pipeline run.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodOutcome {
    pub report: EvalReport,
    /// `None` when the profile is flat.
    pub edge_width: Option<f64>,
    pub reconstruction: Image2D,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineSummary {
    pub outcomes: Vec<MethodOutcome>,
    pub output_dir: PathBuf,
}

impl PipelineSummary {
    pub fn reports(&self) -> Vec<EvalReport> {
        self.outcomes.iter().map(|o| o.report.clone()).collect()
    }

    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.report.method == method.name())
    }
}

/// File names written by [`cmd_pipeline`] inside the output directory.
pub mod files {
    use crate::filters::Method;

    pub const PHANTOM: &str = "phantom.sgf";
    pub const SINOGRAM_CLEAN: &str = "sinogram_clean.sgf";
    pub const SINOGRAM_NOISY: &str = "sinogram_noisy.sgf";
    pub const REPORT: &str = "report.csv";
    pub const PROFILES: &str = "profiles.csv";
    pub const CONFIG: &str = "config.json";

    pub fn filtered(method: Method) -> String {
        format!("sinogram_{}.sgf", method.name())
    }

    pub fn reconstruction(method: Method) -> String {
        format!("recon_{}.sgf", method.name())
    }
}

fn create_csv(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Runs phantom -> project -> addnoise -> each filter -> FBP -> metrics,
/// writing every intermediate into `cfg.output_dir`. Failures carry the name
/// of the stage that raised them.
pub fn cmd_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_pipeline(cfg))
}

fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).in_stage("setup"))?;
    fs::write(dir.join(files::CONFIG), cfg.to_json()).map_err(|e| Error::io(dir.join(files::CONFIG), e).in_stage("setup"))?;
    let (lo, hi) = window_of(cfg);
    let n = cfg.phantom_size;
    let scale = cfg.sinogram_scale;

    let phantom = (|| {
        let p = phantom_stage(n)?;
        save_raw(dir.join(files::PHANTOM), &p)?;
        save_pgm(pgm_path(&dir.join(files::PHANTOM)), &p, lo, hi)?;
        Ok(p)
    })()
    .map_err(|e: Error| e.in_stage("phantom"))?;

    let clean = (|| {
        let s = project_stage(&phantom, &cfg.geometry, scale)?;
        save_raw(dir.join(files::SINOGRAM_CLEAN), &s)?;
        Ok(s)
    })()
    .map_err(|e: Error| e.in_stage("project"))?;

    let noisy = (|| {
        let s = noise_stage(&clean, &cfg.noise)?;
        save_raw(dir.join(files::SINOGRAM_NOISY), &s)?;
        Ok(s)
    })()
    .map_err(|e: Error| e.in_stage("addnoise"))?;

    let reference = match cfg.snr_reference {
        SnrReference::Phantom => phantom.clone(),
        SnrReference::NoiseFreeRecon => fbp_stage(&clean, &cfg.geometry, &cfg.recon_filter, n, scale)
            .map_err(|e| e.in_stage("fbp"))?,
    };

    let mut outcomes = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let filtered = (|| {
            let f = filter_stage(&noisy, method, cfg)?;
            save_raw(dir.join(files::filtered(method)), &f)?;
            Ok(f)
        })()
        .map_err(|e: Error| e.in_stage("filter"))?;

        let runtime = if method == Method::None {
            0.0
        } else {
            time_filter(cfg.timing_runs, || {
                let sigma2 = sigma2_for(method, &noisy, cfg).expect("estimate succeeded above");
                method
                    .apply(&noisy, sigma2.as_ref(), &cfg.filter)
                    .expect("filter succeeded above")
            })
        };

        let recon = (|| {
            let r = fbp_stage(&filtered, &cfg.geometry, &cfg.recon_filter, n, scale)?;
            let path = dir.join(files::reconstruction(method));
            save_raw(&path, &r)?;
            save_pgm(pgm_path(&path), &r, lo, hi)?;
            Ok(r)
        })()
        .map_err(|e: Error| e.in_stage("fbp"))?;

        let (report, width) = (|| {
            let snr = snr_db(&reference, &recon)?.db();
            let ProfileLocation { row_start, row_end, col } = cfg.profile;
            let profile = extract_profile(&recon, row_start, row_end, col)?;
            let width = match edge_width(&profile) {
                Ok(w) => Some(w),
                Err(Error::FlatProfile) => None,
                Err(e) => return Err(e),
            };
            let report = EvalReport {
                method: method.name().to_string(),
                snr_db: snr,
                runtime_seconds: runtime,
                profile: Some(profile),
            };
            Ok((report, width))
        })()
        .map_err(|e: Error| e.in_stage("metrics"))?;

        outcomes.push(MethodOutcome {
            report,
            edge_width: width,
            reconstruction: recon,
        });
    }

    let summary = PipelineSummary {
        outcomes,
        output_dir: dir.to_path_buf(),
    };
    (|| {
        let reports = summary.reports();
        write_report_csv(create_csv(&dir.join(files::REPORT))?, &reports)?;
        write_profiles_csv(create_csv(&dir.join(files::PROFILES))?, &reports)
    })()
    .map_err(|e: Error| e.in_stage("report"))?;
    Ok(summary)
}

/// Operation timed by [`cmd_bench`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchOp {
    BoxMean,
    LlmmseBlock,
}

/// One timing: median seconds over the repeats.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub op: BenchOp,
    pub size: String,
    pub radius: usize,
    pub seconds: f64,
}

/// Parses `N` (square) or `RxC`.
pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidParameter(format!("grid size {s:?}: expected N or RxC"));
    let (r, c) = match s.split_once(['x', 'X']) {
        Some((r, c)) => (r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if r == 0 || c == 0 {
        return Err(bad());
    }
    Ok((r, c))
}

/// Synthetic sinogram-like input: level 5000 plus Gaussian noise of std 150.
fn bench_grid(rows: usize, cols: usize) -> Result<Image2D> {
    let rng = CounterRng::new(1);
    Image2D::from_fn(rows, cols, |i, j| {
        5000.0 + 150.0 * rng.standard_normal((i * cols + j) as u64)
    })
}

/// Times `box_mean` and `llmmse_block` for every size and radius; each row
/// is the median of `repeats` runs after one warm-up.
///
/// All (size, radius) cases are timed round-robin, so slow drift in machine
/// load affects every case alike. The timed calls write into buffers
/// allocated beforehand, so the figures measure the filters rather than the
/// allocator (whose cost for fresh multi-megabyte buffers depends on the
/// allocation history).
pub fn cmd_bench(sizes: &[(usize, usize)], radii: &[usize], repeats: usize) -> Result<Vec<BenchRow>> {
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    struct Grid {
        q: Image2D,
        boxes: BoxWorkspace,
        block: BlockWorkspace,
        out: Vec<f64>,
    }
    struct Case {
        grid: usize,
        radius: BoxRadius,
        sigma2: Image2D,
        cfg: FilterConfig,
        mean_samples: Vec<f64>,
        block_samples: Vec<f64>,
    }

    let noise = NoiseParams::default();
    let mut grids = Vec::with_capacity(sizes.len());
    let mut cases = Vec::with_capacity(sizes.len() * radii.len());
    for (g, &(rows, cols)) in sizes.iter().enumerate() {
        let q = bench_grid(rows, cols)?;
        for &radius in radii {
            let r = BoxRadius(radius);
            cases.push(Case {
                grid: g,
                radius: r,
                sigma2: estimate_noise_variance(&q, &noise, r)?,
                cfg: FilterConfig {
                    radius: r,
                    ..FilterConfig::default()
                },
                mean_samples: Vec::with_capacity(repeats),
                block_samples: Vec::with_capacity(repeats),
            });
        }
        grids.push(Grid {
            q,
            boxes: BoxWorkspace::default(),
            block: BlockWorkspace::default(),
            out: Vec::new(),
        });
    }

    // Round 0 is the warm-up.
    for round in 0..=repeats {
        for c in &mut cases {
            let g = &mut grids[c.grid];
            let t0 = Instant::now();
            box_mean_into(&g.q, c.radius, &mut g.boxes, &mut g.out);
            let t_mean = t0.elapsed().as_secs_f64();
            let t0 = Instant::now();
            llmmse_block_into(&g.q, &c.sigma2, &c.cfg, &mut g.block, &mut g.out)?;
            let t_block = t0.elapsed().as_secs_f64();
            std::hint::black_box(&g.out);
            if round > 0 {
                c.mean_samples.push(t_mean);
                c.block_samples.push(t_block);
            }
        }
    }

    let mut rows = Vec::with_capacity(2 * cases.len());
    for mut c in cases {
        let (r_count, c_count) = sizes[c.grid];
        let size = format!("{r_count}x{c_count}");
        rows.push(BenchRow {
            op: BenchOp::BoxMean,
            size: size.clone(),
            radius: c.radius.0,
            seconds: median(&mut c.mean_samples),
        });
        rows.push(BenchRow {
            op: BenchOp::LlmmseBlock,
            size,
            radius: c.radius.0,
            seconds: median(&mut c.block_samples),
        });
    }
    Ok(rows)
}

/// Writes bench rows as `op,size,radius,seconds`.
pub fn write_bench_csv<W: Write>(writer: W, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("<bench csv>", e))
}
