//! `lightrl`: render, train and evaluate from the command line.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lightrl_core::baking::{
    eval_baked, generate_training_data, render_baked, train_voxel_networks, BakeConfig, TrainSettings, VoxelNetGrid,
};
use lightrl_core::geometry::scene_file::load_scene;
use lightrl_core::geometry::Scene;
use lightrl_core::guiding::{train_q_network_online, QNetwork, QTrainConfig};
use lightrl_core::nee::SelectorName;
use lightrl_core::nn::{write_network, LearningRate};
use lightrl_core::render::{
    builtin_by_name, difference_image, path_trace_reference, read_pfm, render_direct_reference, rmse, write_image,
    ExperimentConfig, ImageBuffer, ImageFormat, Integrator, LearnerSettings, PtSettings,
};
use lightrl_core::{Error, Vec3};

#[derive(Parser)]
#[command(name = "lightrl", version, about = "Path tracing with learned importance sampling and baked radiance")]
struct Cli {
    /// Worker threads; defaults to one per core. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene with one integrator.
    Render(RenderArgs),
    /// Train a Q network on a scene with residual updates.
    TrainQ(TrainQArgs),
    /// Bake scattered radiance into a voxel grid of tiny networks.
    Bake(BakeArgs),
    /// Query a baked grid at one point.
    Eval(EvalArgs),
    /// Render a scene from a baked grid.
    RenderBaked(RenderBakedArgs),
    /// Error of an image against a reference.
    Compare(CompareArgs),
    /// Error against a reference for several integrators and sample counts.
    Metrics(MetricsArgs),
}

#[derive(Args, Clone)]
struct SceneArg {
    /// Built-in scene (cornell-diffuse, cornell-glossy, split-room, furnace,
    /// bandit-2) or the path of a scene file.
    #[arg(long, default_value = "cornell-diffuse")]
    scene: String,
}

impl SceneArg {
    fn load(&self) -> Result<Scene> {
        let path = Path::new(&self.scene);
        if path.is_file() {
            Ok(load_scene(path)?)
        } else {
            Ok(builtin_by_name(&self.scene)?)
        }
    }
}

#[derive(Args, Clone)]
struct FilmArgs {
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, default_value_t = 16)]
    spp: usize,
    /// Maximum path length in segments.
    #[arg(long, default_value_t = 6)]
    max_length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tile edge in pixels.
    #[arg(long, default_value_t = 16)]
    tiles: usize,
}

impl FilmArgs {
    fn pt(&self) -> PtSettings {
        PtSettings {
            width: self.width,
            height: self.height,
            spp: self.spp,
            max_path_length: self.max_length,
            seed: self.seed,
            tile: self.tiles,
        }
    }
}

#[derive(Args, Clone, Default)]
struct LearnerArgs {
    /// Light selection policy of the next-event integrators.
    #[arg(long)]
    selector: Option<SelectorName>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Outer iterations of the online light-selection loop.
    #[arg(long)]
    iterations: Option<usize>,
    /// Minibatches per iteration.
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Base learning rate of the network being trained.
    #[arg(long)]
    rate: Option<f64>,
    /// Training epochs of the network being trained.
    #[arg(long)]
    epochs: Option<usize>,
    /// Spatial resolution of the tabular light-selection table.
    #[arg(long)]
    td_res: Option<usize>,
    /// Weight of cosine sampling in guided scattering.
    #[arg(long)]
    guide_mix: Option<f64>,
    #[arg(long)]
    guide_res: Option<usize>,
    /// Voxels per axis of the baked grid.
    #[arg(long)]
    grid_res: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    rays: Option<usize>,
}

impl LearnerArgs {
    fn settings(&self) -> LearnerSettings {
        let mut l = LearnerSettings::default();
        if let Some(v) = self.selector {
            l.selector = v;
        }
        if let Some(v) = self.epsilon {
            l.epsilon = v;
        }
        if let Some(v) = self.temperature {
            l.temperature = v;
        }
        if let Some(v) = self.iterations {
            l.iterations = v;
        }
        if let Some(v) = self.batches {
            l.batches = v;
        }
        if let Some(v) = self.batch_size {
            l.batch_size = v;
        }
        if let Some(v) = self.rate {
            l.rate = v;
            l.bake_rate = v;
        }
        if let Some(v) = self.epochs {
            l.epochs = v;
            l.bake_epochs = v;
        }
        if let Some(v) = self.td_res {
            l.td_resolution = v;
        }
        if let Some(v) = self.guide_mix {
            l.guide_mix = v;
        }
        if let Some(v) = self.guide_res {
            l.guide_resolution = v;
        }
        if let Some(v) = self.grid_res {
            l.bake_resolution = v;
        }
        if let Some(v) = self.points {
            l.bake_points = v;
        }
        if let Some(v) = self.rays {
            l.bake_rays = v;
        }
        l
    }

    /// Integrator named explicitly, else implied by the selector.
    fn integrator(&self, explicit: Option<Integrator>) -> Integrator {
        explicit
            .or(self.selector.map(Integrator::for_selector))
            .unwrap_or(Integrator::PtReference)
    }
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output image.
    #[arg(long)]
    out: PathBuf,
    /// ppm or pfm; taken from the extension when omitted.
    #[arg(long)]
    format: Option<ImageFormat>,
}

impl OutArgs {
    fn write(&self, image: &ImageBuffer) -> Result<()> {
        let format = self
            .format
            .or_else(|| ImageFormat::from_path(&self.out))
            .unwrap_or(ImageFormat::Pfm);
        write_image(image, &self.out, format)?;
        Ok(())
    }
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    scene: SceneArg,
    /// pt-reference, nee-uniform, nee-tabular, nee-net, baked or guided-pt.
    #[arg(long)]
    integrator: Option<Integrator>,
    #[command(flatten)]
    film: FilmArgs,
    #[command(flatten)]
    learner: LearnerArgs,
    #[command(flatten)]
    out: OutArgs,
    /// PFM reference; when given a metrics row is printed.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Append the metrics row to this CSV file instead of printing it.
    #[arg(long, requires = "reference")]
    metrics: Option<PathBuf>,
    /// Save the trained light-selection network (nee-net).
    #[arg(long)]
    net_out: Option<PathBuf>,
    /// Save the baked grid (baked).
    #[arg(long)]
    grid_out: Option<PathBuf>,
    /// Dump the learned Q grid as text (guided-pt).
    #[arg(long)]
    qgrid_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainQArgs {
    #[command(flatten)]
    scene: SceneArg,
    /// Number of training paths, each used once.
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 6)]
    max_vertices: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-2)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hidden layer widths, comma separated.
    #[arg(long, default_value = "64,64", value_delimiter = ',')]
    hidden: Vec<usize>,
    /// Network output (binary plus a metadata sidecar).
    #[arg(long)]
    out: PathBuf,
    /// Loss trace CSV, one row per 1000 paths.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BakeArgs {
    #[command(flatten)]
    scene: SceneArg,
    #[arg(long, default_value_t = 3)]
    grid_res: usize,
    #[arg(long, default_value_t = 10_000)]
    points: usize,
    #[arg(long, default_value_t = 512)]
    rays: usize,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-2)]
    rate: f64,
    #[arg(long, default_value_t = 6)]
    max_length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Per-voxel training report CSV.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("'{c}': {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got '{s}'")),
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    position: Vec3,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    normal: Vec3,
    /// Direction the radiance leaves in.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    direction: Vec3,
}

#[derive(Args)]
struct RenderBakedArgs {
    #[command(flatten)]
    scene: SceneArg,
    #[arg(long)]
    grid: PathBuf,
    #[command(flatten)]
    film: FilmArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    /// Write the amplified squared difference here.
    #[arg(long)]
    diff: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    gain: f64,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    scene: SceneArg,
    /// Integrators to measure, comma separated.
    #[arg(long, value_delimiter = ',')]
    integrators: Vec<Integrator>,
    /// Light selection policies to measure, comma separated; each maps to
    /// its next-event integrator.
    #[arg(long, value_delimiter = ',')]
    selectors: Vec<SelectorName>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    spp_list: Vec<usize>,
    #[command(flatten)]
    film: FilmArgs,
    #[command(flatten)]
    learner: LearnerArgs,
    /// PFM reference; rendered at --reference-spp when omitted.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    reference_spp: usize,
    /// Metrics CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Next-event CSV (spp, selector, rmse, mean_loss).
    #[arg(long)]
    nee_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct MetricsRow {
    scene: String,
    integrator: String,
    spp: usize,
    seed: u64,
    rmse_rel: f64,
    rmse_abs: f64,
    wall_seconds: f64,
}

#[derive(Serialize)]
struct NeeRow {
    spp: usize,
    selector: String,
    rmse: f64,
    mean_loss: Option<f64>,
}

#[derive(Serialize)]
struct TraceRow {
    paths: usize,
    mean_sq_delta_q: f64,
}

#[derive(Serialize)]
struct VoxelRow {
    voxel: usize,
    trained: bool,
    train_samples: usize,
    holdout_samples: usize,
    train_mse: f64,
    holdout_mse: f64,
}

fn csv_writer(path: Option<&Path>, append: bool) -> Result<csv::Writer<Box<dyn std::io::Write>>> {
    let (sink, header): (Box<dyn std::io::Write>, bool) = match path {
        Some(p) => {
            let fresh = !append || !p.exists() || std::fs::metadata(p).map(|m| m.len() == 0).unwrap_or(true);
            let f = std::fs::OpenOptions::new()
                .create(true)
                .write(true)
                .append(append)
                .truncate(!append)
                .open(p)
                .map_err(|e| Error::io(p, e))?;
            (Box::new(f), fresh)
        }
        None => (Box::new(std::io::stdout()), true),
    };
    Ok(csv::WriterBuilder::new().has_headers(header).from_writer(sink))
}

fn experiment(scene: &SceneArg, integrator: Integrator, film: &FilmArgs, learner: &LearnerArgs) -> ExperimentConfig {
    ExperimentConfig {
        scene: scene.scene.clone(),
        integrator,
        width: film.width,
        height: film.height,
        spp: film.spp,
        max_path_length: film.max_length,
        seed: film.seed,
        tile: film.tiles,
        learner: learner.settings(),
    }
}

fn cmd_render(a: &RenderArgs) -> Result<()> {
    let scene = a.scene.load()?;
    let cfg = experiment(&a.scene, a.learner.integrator(a.integrator), &a.film, &a.learner);
    let start = Instant::now();
    let out = cfg.run(&scene)?;
    let wall = start.elapsed().as_secs_f64();
    a.out.write(&out.image)?;
    eprintln!("{} {}: {} spp in {:.2}s", cfg.scene, cfg.integrator, cfg.spp, wall);
    if let Some(loss) = out.mean_loss {
        eprintln!("final training loss {loss:.6}");
    }
    if let (Some(path), Some(net)) = (&a.net_out, &out.net) {
        write_network(net.net(), path, "light selection network")?;
    }
    if let (Some(path), Some(grid)) = (&a.grid_out, &out.baked) {
        grid.write(path)?;
    }
    if let (Some(path), Some(grid)) = (&a.qgrid_out, &out.qgrid) {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        grid.dump(std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))?;
    }
    if let Some(reference) = &a.reference {
        let reference = read_pfm(reference)?;
        let mut w = csv_writer(a.metrics.as_deref(), true)?;
        w.serialize(MetricsRow {
            scene: cfg.scene.clone(),
            integrator: cfg.integrator.name().into(),
            spp: cfg.spp,
            seed: cfg.seed,
            rmse_rel: rmse(&out.image, &reference, true)?,
            rmse_abs: rmse(&out.image, &reference, false)?,
            wall_seconds: wall,
        })?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_train_q(a: &TrainQArgs) -> Result<()> {
    let scene = a.scene.load()?;
    if a.rate <= 0.0 {
        return Err(Error::usage("learning rate must be positive").into());
    }
    let mut net = QNetwork::new(scene.bounds(), &a.hidden, a.seed)?;
    let cfg = QTrainConfig {
        paths: a.paths,
        max_vertices: a.max_vertices,
        batch_size: a.batch_size,
        rate: LearningRate::with_base(a.rate),
        seed: a.seed,
        ..QTrainConfig::default()
    };
    let report = train_q_network_online(&mut net, &scene, &cfg)?;
    write_network(net.net(), &a.out, "residual-trained Q network")?;
    if let Some(path) = &a.trace {
        let mut w = csv_writer(Some(path), false)?;
        for (i, &loss) in report.loss_trace.iter().enumerate() {
            w.serialize(TraceRow {
                paths: (i + 1) * cfg.trace_interval,
                mean_sq_delta_q: loss,
            })?;
        }
        w.flush()?;
    }
    eprintln!(
        "{} vertices, final mean squared residual {:.6}",
        report.vertices,
        report.loss_trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_bake(a: &BakeArgs) -> Result<()> {
    let scene = a.scene.load()?;
    if a.rate <= 0.0 {
        return Err(Error::usage("learning rate must be positive").into());
    }
    let data = generate_training_data(
        &scene,
        &BakeConfig {
            points: a.points,
            rays: a.rays,
            max_path_length: a.max_length,
            seed: a.seed,
        },
    )?;
    let mut grid = VoxelNetGrid::new(scene.bounds(), a.grid_res, a.seed)?;
    grid.assign(&data);
    let reports = train_voxel_networks(
        &mut grid,
        &TrainSettings {
            epochs: a.epochs,
            rate: LearningRate::with_base(a.rate),
            seed: a.seed,
            ..TrainSettings::default()
        },
    )?;
    grid.write(&a.out)?;
    if let Some(path) = &a.report {
        let mut w = csv_writer(Some(path), false)?;
        for r in &reports {
            w.serialize(VoxelRow {
                voxel: r.voxel,
                trained: r.trained,
                train_samples: r.train_samples,
                holdout_samples: r.holdout_samples,
                train_mse: r.train_mse,
                holdout_mse: r.holdout_mse,
            })?;
        }
        w.flush()?;
    }
    let trained = reports.iter().filter(|r| r.trained).count();
    eprintln!("{trained}/{} voxels trained", reports.len());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let grid = VoxelNetGrid::read(&a.grid)?;
    let n = a.normal.normalized();
    let d = a.direction.normalized();
    if !(n.is_finite() && d.is_finite()) {
        return Err(Error::usage("normal and direction must be nonzero").into());
    }
    let v = eval_baked(&grid, a.position, n, d);
    match v.voxel {
        Some(voxel) => println!(
            "{} {} {} voxel {voxel}{}",
            v.radiance.x,
            v.radiance.y,
            v.radiance.z,
            if v.fallback { " (nearest trained)" } else { "" }
        ),
        None => println!("0 0 0 no trained voxel"),
    }
    Ok(())
}

fn cmd_render_baked(a: &RenderBakedArgs) -> Result<()> {
    let scene = a.scene.load()?;
    let grid = VoxelNetGrid::read(&a.grid)?;
    let image = render_baked(&scene, &grid, &a.film.pt())?;
    a.out.write(&image)
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let image = read_pfm(&a.image)?;
    let reference = read_pfm(&a.reference)?;
    println!("rmse_rel {}", rmse(&image, &reference, true)?);
    println!("rmse_abs {}", rmse(&image, &reference, false)?);
    if let Some(path) = &a.diff {
        let d = difference_image(&image, &reference, a.gain)?;
        let format = ImageFormat::from_path(path).unwrap_or(ImageFormat::Pfm);
        write_image(&d, path, format)?;
    }
    Ok(())
}

fn is_nee(i: Integrator) -> bool {
    matches!(i, Integrator::NeeUniform | Integrator::NeeTabular | Integrator::NeeNet)
}

fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    let scene = a.scene.load()?;
    // (integrator, selector) pairs
    let mut runs: Vec<(Integrator, Option<SelectorName>)> = a.integrators.iter().map(|&i| (i, None)).collect();
    runs.extend(a.selectors.iter().map(|&s| (Integrator::for_selector(s), Some(s))));
    if runs.is_empty() {
        return Err(Error::usage("give at least one of --integrators, --selectors").into());
    }
    if a.spp_list.is_empty() || a.spp_list.contains(&0) {
        return Err(Error::usage("--spp-list needs positive sample counts").into());
    }
    let reference = match &a.reference {
        Some(p) => read_pfm(p)?,
        None => {
            let pt = PtSettings {
                spp: a.reference_spp,
                seed: a.film.seed ^ 0x9e37_79b9,
                ..a.film.pt()
            };
            // next-event integrators estimate direct light only
            if runs.iter().all(|&(i, _)| is_nee(i)) {
                render_direct_reference(&scene, &pt)?
            } else {
                path_trace_reference(&scene, &pt)?
            }
        }
    };
    let mut out = csv_writer(a.out.as_deref(), false)?;
    let mut nee_out = a.nee_out.as_deref().map(|p| csv_writer(Some(p), false)).transpose()?;
    for &(integrator, selector) in &runs {
        for &spp in &a.spp_list {
            let mut learner = a.learner.clone();
            if selector.is_some() {
                learner.selector = selector;
            }
            let film = FilmArgs { spp, ..a.film.clone() };
            let cfg = experiment(&a.scene, integrator, &film, &learner);
            let start = Instant::now();
            let run = cfg.run(&scene)?;
            let wall = start.elapsed().as_secs_f64();
            let rel = rmse(&run.image, &reference, true)?;
            out.serialize(MetricsRow {
                scene: cfg.scene.clone(),
                integrator: integrator.name().into(),
                spp,
                seed: cfg.seed,
                rmse_rel: rel,
                rmse_abs: rmse(&run.image, &reference, false)?,
                wall_seconds: wall,
            })?;
            if let (Some(w), true) = (nee_out.as_mut(), is_nee(integrator)) {
                let name = match integrator {
                    Integrator::NeeUniform => SelectorName::Uniform,
                    Integrator::NeeNet => SelectorName::Net,
                    _ => cfg.learner.selector,
                };
                w.serialize(NeeRow {
                    spp,
                    selector: name.name().into(),
                    rmse: rel,
                    mean_loss: run.mean_loss,
                })?;
            }
        }
    }
    out.flush()?;
    if let Some(w) = nee_out.as_mut() {
        w.flush()?;
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Usage(_) | Error::Contract(_) => 2,
                Error::Training(_) => 3,
                Error::Io { .. } => 4,
            };
        }
        if cause.is::<std::io::Error>() {
            return 4;
        }
        if let Some(c) = cause.downcast_ref::<csv::Error>() {
            return if c.is_io_error() { 4 } else { 1 };
        }
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(Error::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match &cli.command {
        Command::Render(a) => cmd_render(a),
        Command::TrainQ(a) => cmd_train_q(a),
        Command::Bake(a) => cmd_bake(a),
        Command::Eval(a) => cmd_eval(a),
        Command::RenderBaked(a) => cmd_render_baked(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Metrics(a) => cmd_metrics(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
