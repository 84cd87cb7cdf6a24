use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use thermodmn::bounds::{isotropic_moduli, voigt_reuss_slack, HashinShtrikman};
use thermodmn::dmn::{ModelFile, Topology};
use thermodmn::driver::{
    cyclic_metrics, error_metrics, run_program, write_cycles_csv, write_metrics_csv, Amplitude, Control, LoadProgram,
    ProgramSpec, ThermalMode,
};
use thermodmn::fft::{homogenize_fft, FftConfig, InclusionShape, VoxelGrid};
use thermodmn::material::{MaterialsFile, PhasePair};
use thermodmn::reference::ReferenceSolver;
use thermodmn::solver::{DmnSolver, MaterialPoint};
use thermodmn::tensor::Vec6;
use thermodmn::trainer::{
    contrast_histogram, material_contrast, sample_pair, train, write_history_csv, Dataset, SamplingConfig,
    TrainingConfig,
};
use thermodmn::{Error, Result};

#[derive(Parser)]
#[command(name = "thermodmn", version, about = "Thermomechanical deep material networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw random stiffness pairs and write their contrast histogram.
    Sample(SampleArgs),
    /// Label a pair dataset with FFT effective stiffnesses.
    Homogenize(HomogenizeArgs),
    /// Fit a network to a labelled dataset.
    Train(TrainArgs),
    /// Run a load program on a trained network.
    Evaluate(EvaluateArgs),
    /// Compare the network solver with the nested laminate solver.
    Validate(ValidateArgs),
    /// Time single online evaluations.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "pairs.json")]
    out: PathBuf,
    #[arg(long, default_value = "contrast_histogram.csv")]
    histogram: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct SampleJob {
    sampling: SamplingConfig,
    count: usize,
    bins: usize,
    seed: u64,
}

impl Default for SampleJob {
    fn default() -> Self {
        Self { sampling: SamplingConfig::default(), count: 1000, bins: 40, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
enum Microstructure {
    Sphere,
    Cylinder,
    Laminate,
    Random,
}

#[derive(Args)]
struct HomogenizeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Unlabelled pair dataset.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "dataset.json")]
    out: PathBuf,
    /// Voxel microstructure file; overrides the generated geometry.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    microstructure: Option<Microstructure>,
    /// Voxels per edge of a generated geometry.
    #[arg(long)]
    resolution: Option<usize>,
    /// Volume fraction of the first phase in a generated geometry.
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct HomogenizeJob {
    microstructure: Microstructure,
    resolution: usize,
    fraction: f64,
    tol: f64,
    max_iterations: usize,
    seed: u64,
}

impl Default for HomogenizeJob {
    fn default() -> Self {
        let fft = FftConfig::default();
        Self {
            microstructure: Microstructure::Sphere,
            resolution: 16,
            fraction: 0.2,
            tol: fft.tol,
            max_iterations: fft.max_iterations,
            seed: 0,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Labelled dataset.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr_max: Option<f64>,
    #[arg(long)]
    lr_min: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    #[arg(long, default_value = "history.csv")]
    history: PathBuf,
}

#[derive(Args)]
struct NetworkArgs {
    /// Trained model; a random network of `--depth` is used without it.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Phase parameters; glass fibers in PA66 by default.
    #[arg(long)]
    materials: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl NetworkArgs {
    fn topology(&self) -> Result<Topology> {
        match &self.model {
            Some(path) => ModelFile::load(path)?.topology(),
            None => Topology::random(self.depth, &mut ChaCha8Rng::seed_from_u64(self.seed)),
        }
    }

    fn phases(&self) -> Result<PhasePair> {
        match &self.materials {
            Some(path) => MaterialsFile::load(path)?.phases(),
            None => Ok(PhasePair::glass_pa66()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AmplitudeKind {
    Component,
    Principal,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Load program JSON, either compact or fully explicit.
    #[arg(long)]
    program: PathBuf,
    #[arg(long, default_value = "trajectory.csv")]
    out: PathBuf,
    /// Per-cycle metrics, written for programs with a cycle period.
    #[arg(long)]
    cycles: Option<PathBuf>,
    #[arg(long, value_enum)]
    amplitude: Option<AmplitudeKind>,
    #[arg(long)]
    theta0: Option<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Load program JSON; uniaxial 4 % tension at four rates in all six
    /// directions when omitted.
    #[arg(long)]
    program: Option<PathBuf>,
    #[arg(long, default_value = "eta.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    network: NetworkArgs,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    /// Strain increment magnitude of the timed step.
    #[arg(long, default_value_t = 1e-3)]
    strain: f64,
    #[arg(long, default_value_t = 1e-2)]
    dt: f64,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

fn config_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn sample(args: SampleArgs) -> Result<()> {
    let mut job: SampleJob = config_or_default(args.config.as_deref())?;
    job.count = args.count.unwrap_or(job.count);
    job.bins = args.bins.unwrap_or(job.bins);
    job.seed = args.seed.unwrap_or(job.seed);
    if job.count == 0 || job.bins == 0 {
        return Err(Error::InvalidInput("count and bins must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let pairs: Vec<_> = (0..job.count).map(|_| sample_pair(&job.sampling, &mut rng)).collect();
    let contrasts = pairs.iter().map(|(a, b)| material_contrast(a, b)).collect::<Result<Vec<_>>>()?;
    Dataset::from_pairs(pairs, "GPa", &format!("sample seed {}", job.seed)).save(&args.out)?;
    let mut out = create(&args.histogram)?;
    thermodmn::trainer::write_histogram_csv(&mut out, &contrast_histogram(&contrasts, job.bins))?;
    out.flush()?;
    log::info!("wrote {} pairs to {}", job.count, args.out.display());
    Ok(())
}

fn generated_grid(job: &HomogenizeJob) -> Result<VoxelGrid> {
    let n = job.resolution;
    match job.microstructure {
        Microstructure::Sphere => VoxelGrid::inclusion([n; 3], [1.0; 3], InclusionShape::Sphere, job.fraction),
        Microstructure::Cylinder => {
            VoxelGrid::inclusion([n; 3], [1.0; 3], InclusionShape::Cylinder { axis: 0 }, job.fraction)
        }
        Microstructure::Laminate => VoxelGrid::laminate([n; 3], 0, job.fraction),
        Microstructure::Random => {
            if !(0.0..=1.0).contains(&job.fraction) {
                return Err(Error::InvalidInput(format!("fraction {} outside [0, 1]", job.fraction)));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
            let phases = (0..n * n * n).map(|_| u8::from(!rng.gen_bool(job.fraction))).collect();
            VoxelGrid::new([n; 3], [1.0; 3], phases)
        }
    }
}

fn homogenize(args: HomogenizeArgs) -> Result<()> {
    let mut job: HomogenizeJob = config_or_default(args.config.as_deref())?;
    job.microstructure = args.microstructure.unwrap_or(job.microstructure);
    job.resolution = args.resolution.unwrap_or(job.resolution);
    job.fraction = args.fraction.unwrap_or(job.fraction);
    job.tol = args.tol.unwrap_or(job.tol);
    job.max_iterations = args.max_iterations.unwrap_or(job.max_iterations);
    job.seed = args.seed.unwrap_or(job.seed);
    let grid = match &args.grid {
        Some(path) => VoxelGrid::load(path)?,
        None => generated_grid(&job)?,
    };
    let cfg = FftConfig { tol: job.tol, max_iterations: job.max_iterations };
    let f1 = grid.fraction(0);
    let mut dataset = Dataset::load(&args.dataset)?;
    let results = dataset
        .pairs
        .par_iter()
        .map(|(c1, c2)| homogenize_fft(&grid, c1, c2, &cfg).map(|(c, _)| c))
        .collect::<Result<Vec<_>>>()?;
    for (i, (eff, (c1, c2))) in results.iter().zip(&dataset.pairs).enumerate() {
        let slack = voigt_reuss_slack(eff, c1, c2, f1)?;
        if slack < -1e-8 {
            log::warn!("sample {i}: Voigt-Reuss slack {slack:e}");
        }
        let hs = HashinShtrikman::new(isotropic_moduli(c1), isotropic_moduli(c2), f1);
        let (k, g) = isotropic_moduli(eff);
        log::debug!("sample {i}: Voigt-Reuss slack {slack:e}, Hashin-Shtrikman slack {:e}", hs.slack(k, g));
    }
    dataset.effective = results.into_iter().map(Some).collect();
    dataset.header.source = format!("fft {:?} {} voxels/edge, first-phase fraction {f1}", job.microstructure, grid.dims()[0]);
    dataset.save(&args.out)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn train_network(args: TrainArgs) -> Result<()> {
    let mut cfg: TrainingConfig = config_or_default(args.config.as_deref())?;
    cfg.depth = args.depth.unwrap_or(cfg.depth);
    cfg.epochs = args.epochs.unwrap_or(cfg.epochs);
    cfg.batch_size = args.batch_size.unwrap_or(cfg.batch_size);
    cfg.lr_max = args.lr_max.unwrap_or(cfg.lr_max);
    cfg.lr_min = args.lr_min.unwrap_or(cfg.lr_min);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.validate()?;
    let samples = Dataset::load(&args.dataset)?.samples()?;
    let outcome = train(&cfg, &samples)?;
    let digest = sha256_hex(serde_json::to_string(&cfg)?.as_bytes());
    outcome.topology.to_model(Some(digest)).save(&args.model)?;
    let mut out = create(&args.history)?;
    write_history_csv(&mut out, &outcome.history)?;
    out.flush()?;
    if let Some(last) = outcome.history.last() {
        log::info!(
            "epoch {}: train error {:.4e}, validation error {:?}, weight sum {:.6}",
            last.epoch,
            last.error_train,
            last.error_val,
            outcome.weight_sum
        );
    }
    Ok(())
}

fn load_program(path: &Path) -> Result<LoadProgram> {
    let value: serde_json::Value = read_json(path)?;
    let program = if value.get("load").is_some() {
        serde_json::from_value::<ProgramSpec>(value).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?.expand()?
    } else {
        serde_json::from_value::<LoadProgram>(value).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?
    };
    program.validate()?;
    Ok(program)
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let mut program = load_program(&args.program)?;
    program.theta0 = args.theta0.unwrap_or(program.theta0);
    let point = DmnSolver::new(args.network.topology()?, args.network.phases()?);
    let trajectory = run_program(&point, &program)?;
    let mut out = create(&args.out)?;
    trajectory.write_csv(&mut out)?;
    out.flush()?;
    if let (Some(path), Some(period)) = (&args.cycles, program.cycle_period) {
        let amplitude = match args.amplitude {
            Some(AmplitudeKind::Principal) => Amplitude::Principal,
            Some(AmplitudeKind::Component) | None => {
                let driven = (0..6)
                    .max_by(|&a, &b| {
                        let peak = |i: usize| program.steps.iter().map(|s| s.target[i].abs()).fold(0.0, f64::max);
                        peak(a).total_cmp(&peak(b))
                    })
                    .unwrap_or(0);
                Amplitude::Component(driven)
            }
        };
        let mut out = create(path)?;
        write_cycles_csv(&mut out, &cyclic_metrics(&trajectory, period, amplitude)?)?;
        out.flush()?;
    }
    log::info!("final temperature change {:.6e} K", trajectory.last().delta_theta);
    Ok(())
}

fn default_validation_programs() -> Vec<(String, LoadProgram)> {
    let rates = [5e-4, 5e-3, 5e-2, 5e-1];
    let mut programs = Vec::new();
    for component in 0..6 {
        for rate in rates {
            let program = LoadProgram::uniaxial(component, 0.04, rate, 40, true, 293.15, ThermalMode::Adiabatic);
            programs.push((format!("component{}_rate{rate:e}", component + 1), program));
        }
    }
    programs
}

fn validate(args: ValidateArgs) -> Result<()> {
    let topology = args.network.topology()?;
    let phases = args.network.phases()?;
    let programs = match &args.program {
        Some(path) => vec![(path.display().to_string(), load_program(path)?)],
        None => default_validation_programs(),
    };
    let dmn = DmnSolver::new(topology.clone(), phases.clone());
    let oracle = ReferenceSolver::new(topology, phases);
    let rows = programs
        .par_iter()
        .map(|(label, program)| {
            let measured: Vec<usize> = (0..6).filter(|&i| program.control[i] == Control::Strain).collect();
            let model = run_program(&dmn, program)?;
            let reference = run_program(&oracle, program)?;
            Ok((label.clone(), error_metrics(&model, &reference, &measured)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = create(&args.out)?;
    write_metrics_csv(&mut out, &rows)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BenchReport {
    depth: usize,
    unknowns: usize,
    repeats: usize,
    min_ms: f64,
    median_ms: f64,
    newton_iterations: usize,
}

fn bench(args: BenchArgs) -> Result<()> {
    if args.repeats == 0 {
        return Err(Error::InvalidInput("repeats must be positive".into()));
    }
    let topology = args.network.topology()?;
    let depth = topology.depth();
    let unknowns = 3 * topology.n_nodes();
    let point = DmnSolver::new(topology, args.network.phases()?);
    let state = point.initial_state();
    let mut rng = ChaCha8Rng::seed_from_u64(args.network.seed);
    let direction = Vec6::from_fn(|_, _| rng.gen_range(-1.0..1.0)).normalize();
    let strain = direction * args.strain;
    let theta = point.phases().first.theta0();
    let mut times = Vec::with_capacity(args.repeats);
    let mut iterations = 0;
    for _ in 0..args.repeats {
        let start = Instant::now();
        let (out, _) = point.evaluate(&state, &strain, theta, args.dt)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        iterations = out.iterations;
    }
    times.sort_by(f64::total_cmp);
    let report = BenchReport {
        depth,
        unknowns,
        repeats: args.repeats,
        min_ms: times[0],
        median_ms: times[times.len() / 2],
        newton_iterations: iterations,
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample(a) => sample(a),
        Command::Homogenize(a) => homogenize(a),
        Command::Train(a) => train_network(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Validate(a) => validate(a),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
