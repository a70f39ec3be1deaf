//! Command-line front end: instance generation, teacher labeling, model
//! training, solving, routing and benchmark sweeps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ncc::bench::{run_benchmark, Method};
use ncc::instance::{
    generate_gmm_instance, load_cvrp_instance, load_instance, save_instance, subsample_rectangle,
    GmmSpec,
};
use ncc::routing::{c1r2_solve, load_vrp, sweep_baseline, sweep_plus_baseline, CvrpSolution};
use ncc::scoring::{make_teacher_labels, train, ModelConfig, TeacherConfig, TrainConfig, TrainSample};
use ncc::solver::{AssignMode, ClusterResult, InitMethod, NccOptions, SolverConfig};
use ncc::{CvrpInstance, ProblemInstance, Result, ScoreModel};

#[derive(Parser)]
#[command(name = "ncc", about = "Capacitated spatial clustering toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample Gaussian-mixture instances into a directory.
    Generate(GenerateArgs),
    /// Produce teacher assignments for every instance in a directory.
    Teach(TeachArgs),
    /// Train a scoring model on teacher samples.
    Train(TrainArgs),
    /// Cluster one instance with a chosen method.
    Solve(SolveArgs),
    /// Solve a vehicle-routing instance.
    Route(RouteArgs),
    /// Run a method sweep over a dataset and write a CSV report.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Points per instance.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Number of instances.
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 3)]
    k_min: usize,
    #[arg(long, default_value_t = 12)]
    k_max: usize,
    #[arg(long, default_value_t = 1.1)]
    capacity_factor: f64,
    #[arg(long, default_value_t = 0.1)]
    std_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also attach a depot drawn uniformly from the unit box.
    #[arg(long, default_value_t = false)]
    cvrp: bool,
    /// Instead of sampling a mixture, sub-sample rectangular regions of
    /// this source instance.
    #[arg(long)]
    subsample_from: Option<PathBuf>,
    /// Weight rescale range for sub-samples.
    #[arg(long, default_value_t = 1.0)]
    weight_scale_min: f64,
    #[arg(long, default_value_t = 1.0)]
    weight_scale_max: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TeachArgs {
    /// Directory of instance JSON files.
    #[arg(long)]
    dataset_dir: PathBuf,
    /// Restarts per initialization for the teacher solver.
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for sample JSON files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of teacher sample JSON files.
    #[arg(long)]
    dataset_dir: PathBuf,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    d_emb: usize,
    #[arg(long, default_value_t = 64)]
    d_hidden: usize,
    #[arg(long, default_value_t = 3)]
    layers: usize,
    #[arg(long, default_value_t = 25)]
    knn_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the trained model JSON.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of per-epoch loss / accuracy / learning rate.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Greedy,
    Sampling,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    TopkWeights,
    Kmeanspp,
    Ckmpp,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = InitArg::Ckmpp)]
    init: InitArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Greedy)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Rollouts per iteration in sampling mode.
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 25)]
    knn_k: usize,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
}

impl SolverArgs {
    fn to_config(&self) -> SolverConfig {
        SolverConfig {
            init: match self.init {
                InitArg::TopkWeights => InitMethod::TopkWeights,
                InitArg::Kmeanspp => InitMethod::KMeansPlusPlus,
                InitArg::Ckmpp => InitMethod::CkmPlusPlus,
            },
            max_iters: self.max_iters,
            alpha: self.alpha,
            mode: match self.mode {
                ModeArg::Greedy => AssignMode::Greedy,
                ModeArg::Sampling => AssignMode::Sampling,
            },
            num_samples: self.samples,
            restarts: self.restarts,
            seed: self.seed,
            knn_k: self.knn_k,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// random | rnd-nn | topk-nn | capkmeans | ncc
    #[arg(long, default_value = "ncc")]
    method: String,
    /// Trained model JSON; only used by the ncc method.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Result JSON path (stdout summary otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
    /// GeoJSON visualization path.
    #[arg(long)]
    geojson: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteMethod {
    Ncc,
    Sweep,
    SweepPlus,
}

#[derive(Args)]
struct RouteArgs {
    /// CVRP instance: a JSON file with a depot, or a plain-text `.vrp`.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = RouteMethod::Ncc)]
    method: RouteMethod,
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Result JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of instance JSON files.
    #[arg(long)]
    dataset_dir: PathBuf,
    /// Comma-separated list; defaults to every method.
    #[arg(long, default_value = "random,rnd-nn,topk-nn,capkmeans,ncc")]
    methods: String,
    /// Number of seeds per (instance, method) pair.
    #[arg(long, default_value_t = 3)]
    seeds: usize,
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV report path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Teach(a) => cmd_teach(a),
        Command::Train(a) => cmd_train(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Route(a) => cmd_route(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_generate(a: GenerateArgs) -> anyhow::Result<()> {
    std::fs::create_dir_all(&a.out)?;
    println!(
        "generate: n={} count={} k=[{},{}] capacity_factor={} std_scale={} seed={} cvrp={} out={}",
        a.n,
        a.count,
        a.k_min,
        a.k_max,
        a.capacity_factor,
        a.std_scale,
        a.seed,
        a.cvrp,
        a.out.display()
    );
    if let Some(p) = &a.subsample_from {
        println!(
            "generate: subsampling from {} (weight scale [{}, {}])",
            p.display(),
            a.weight_scale_min,
            a.weight_scale_max
        );
    }
    let source = a.subsample_from.as_ref().map(load_instance).transpose()?;
    for i in 0..a.count {
        let inst = match &source {
            Some(full) => subsample_rectangle(
                full,
                a.n,
                (a.weight_scale_min, a.weight_scale_max),
                ncc::rng::derive_seed(a.seed, i as u64),
            )?,
            None => {
                let spec = GmmSpec {
                    k_min: a.k_min,
                    k_max: a.k_max,
                    capacity_factor: a.capacity_factor,
                    std_scale: a.std_scale,
                    seed: ncc::rng::derive_seed(a.seed, i as u64),
                };
                generate_gmm_instance(&spec, a.n)?
            }
        };
        let path = a.out.join(format!("inst-{i:04}.json"));
        if a.cvrp {
            use rand::Rng;
            let mut r = ncc::rng::derived(a.seed, 1_000_000 + i as u64);
            let depot = vec![r.random_range(0.0..1.0), r.random_range(0.0..1.0)];
            save_instance(&inst, Some(&depot), &path)?;
        } else {
            save_instance(&inst, None, &path)?;
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn instance_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        anyhow::bail!("no .json files in {}", dir.display());
    }
    Ok(files)
}

fn sample_to_json(sample: &TrainSample) -> serde_json::Value {
    let k = sample.instance.k;
    let centers: Vec<Vec<f64>> = (0..k).map(|c| sample.centers.position(c).to_vec()).collect();
    serde_json::json!({
        "instance_id": sample.instance.id,
        "labels": sample.labels,
        "centers": centers,
    })
}

fn cmd_teach(a: TeachArgs) -> anyhow::Result<()> {
    std::fs::create_dir_all(&a.out)?;
    let teacher_cfg = TeacherConfig {
        restarts: a.restarts,
        seed: a.seed,
        ..TeacherConfig::default()
    };
    println!(
        "teach: dataset={} restarts={} seed={} out={}",
        a.dataset_dir.display(),
        a.restarts,
        a.seed,
        a.out.display()
    );
    let mut kept = 0;
    let mut dropped = 0;
    for path in instance_files(&a.dataset_dir)? {
        let inst = load_instance(&path)?;
        match make_teacher_labels(&inst, &teacher_cfg) {
            Some(sample) => {
                let name = path.file_stem().unwrap().to_string_lossy();
                let out_path = a.out.join(format!("{name}.sample.json"));
                let mut value = sample_to_json(&sample);
                // embed the instance so samples are self-contained
                let inst_json = serde_json::from_str::<serde_json::Value>(
                    &std::fs::read_to_string(&path)?,
                )?;
                value["instance"] = inst_json;
                std::fs::write(&out_path, serde_json::to_string(&value)?)?;
                kept += 1;
            }
            None => {
                eprintln!("dropped {}: no feasible teacher assignment", path.display());
                dropped += 1;
            }
        }
    }
    println!("teach: kept {kept}, dropped {dropped}");
    Ok(())
}

#[derive(serde::Deserialize)]
struct SampleFile {
    labels: Vec<usize>,
    centers: Vec<Vec<f64>>,
    instance: SampleInstance,
}

#[derive(serde::Deserialize)]
struct SampleInstance {
    id: String,
    dim: usize,
    k: usize,
    capacity: f64,
    coords: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn load_sample(path: &Path) -> anyhow::Result<TrainSample> {
    let file: SampleFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let inst = file.instance;
    let coords: Vec<f64> = inst.coords.into_iter().flatten().collect();
    let instance =
        ProblemInstance::new(inst.id, inst.dim, inst.k, inst.capacity, coords, inst.weights)?;
    let flat: Vec<f64> = file.centers.into_iter().flatten().collect();
    let centers = ncc::solver::Centers::from_positions(instance.dim, flat);
    Ok(TrainSample {
        instance,
        labels: file.labels,
        centers,
    })
}

fn cmd_train(a: TrainArgs) -> anyhow::Result<()> {
    let mut samples = Vec::new();
    for path in instance_files(&a.dataset_dir)? {
        samples.push(load_sample(&path)?);
    }
    let dim = samples[0].instance.dim;
    let model_cfg = ModelConfig {
        dim,
        d_emb: a.d_emb,
        d_hidden: a.d_hidden,
        layers: a.layers,
        kappa: a.knn_k,
        ..ModelConfig::default()
    };
    let train_cfg = TrainConfig {
        epochs: a.epochs,
        lr: a.lr,
        seed: a.seed,
        ..TrainConfig::default()
    };
    println!(
        "train: samples={} epochs={} lr={} d_emb={} d_hidden={} layers={} knn_k={} seed={} out={}",
        samples.len(),
        a.epochs,
        a.lr,
        a.d_emb,
        a.d_hidden,
        a.layers,
        a.knn_k,
        a.seed,
        a.out.display()
    );
    let mut model = ScoreModel::init(model_cfg, a.seed);
    let history = train(&mut model, &samples, &train_cfg)?;
    model.save(&a.out)?;
    println!(
        "train: loss {:.6} -> {:.6}, accuracy {:.4}",
        history.initial_loss(),
        history.final_loss(),
        history.final_accuracy()
    );
    if let Some(hist_path) = a.history {
        history.save_csv(&hist_path)?;
        println!("wrote {}", hist_path.display());
    }
    Ok(())
}

fn result_to_json(inst: &ProblemInstance, method: &str, res: &ClusterResult) -> serde_json::Value {
    let k = res.assignment.k();
    let centers: Vec<Vec<f64>> = (0..k).map(|c| res.centers.position(c).to_vec()).collect();
    serde_json::json!({
        "instance_id": inst.id,
        "method": method,
        "labels": res.assignment.labels(),
        "centers": centers,
        "inertia": res.inertia,
        "dummy_penalty": res.dummy_penalty,
        "feasible": res.feasible,
        "iterations": res.iterations,
        "runtime_s": res.runtime,
        "encoder_passes": res.encoder_passes,
    })
}

fn load_model_arg(path: &Option<PathBuf>) -> Result<Option<ScoreModel>> {
    path.as_ref().map(ScoreModel::load).transpose()
}

fn cmd_solve(a: SolveArgs) -> anyhow::Result<()> {
    let inst = load_instance(&a.instance)?;
    let method: Method = a.method.parse()?;
    let model = load_model_arg(&a.model)?;
    let config = a.solver.to_config();
    println!(
        "solve: instance={} n={} k={} method={} model={} config={:?}",
        inst.id,
        inst.n(),
        inst.k,
        method.name(),
        a.model.as_deref().map(Path::display).map_or("none".to_string(), |d| d.to_string()),
        config
    );
    let res = ncc::bench::run_method(&inst, method, model.as_ref(), &config)?;
    println!(
        "solve: inertia={:.6} feasible={} iterations={} runtime={:.3}s",
        res.inertia, res.feasible, res.iterations, res.runtime
    );
    if let Some(out) = a.out {
        std::fs::write(&out, serde_json::to_string_pretty(&result_to_json(&inst, method.name(), &res))?)?;
        println!("wrote {}", out.display());
    }
    if let Some(geo) = a.geojson {
        ncc::export::save_geojson(&inst, &res, &geo)?;
        println!("wrote {}", geo.display());
    }
    Ok(())
}

fn load_cvrp_any(path: &Path) -> anyhow::Result<CvrpInstance> {
    if path.extension().is_some_and(|x| x == "vrp") {
        Ok(load_vrp(path)?)
    } else {
        Ok(load_cvrp_instance(path)?)
    }
}

fn routes_to_json(sol: &CvrpSolution, method: &str) -> serde_json::Value {
    serde_json::json!({
        "method": method,
        "total_length": sol.total_length,
        "k_used": sol.k_used(),
        "feasible": sol.feasible,
        "runtime_s": sol.runtime,
        "routes": sol.routes.iter().map(|r| serde_json::json!({
            "customers": r.customers,
            "length": r.length,
            "load": r.load,
        })).collect::<Vec<_>>(),
    })
}

fn cmd_route(a: RouteArgs) -> anyhow::Result<()> {
    let cvrp = load_cvrp_any(&a.instance)?;
    let model = load_model_arg(&a.model)?;
    let config = a.solver.to_config();
    let (name, sol) = match a.method {
        RouteMethod::Ncc => {
            let opts = NccOptions {
                model: model.as_ref(),
                depot: None,
            };
            ("ncc", c1r2_solve(&cvrp, &opts, &config)?)
        }
        RouteMethod::Sweep => ("sweep", sweep_baseline(&cvrp)),
        RouteMethod::SweepPlus => ("sweep-plus", sweep_plus_baseline(&cvrp)),
    };
    println!(
        "route: instance={} customers={} method={name} config={:?}",
        cvrp.base.id,
        cvrp.base.n(),
        config
    );
    println!(
        "route: total_length={:.6} k_used={} feasible={}",
        sol.total_length,
        sol.k_used(),
        sol.feasible
    );
    if let Some(out) = a.out {
        std::fs::write(&out, serde_json::to_string_pretty(&routes_to_json(&sol, name))?)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<()> {
    let mut instances = Vec::new();
    for path in instance_files(&a.dataset_dir)? {
        instances.push(load_instance(&path)?);
    }
    let methods: Vec<Method> = a
        .methods
        .split(',')
        .map(|m| m.trim().parse())
        .collect::<Result<_>>()?;
    let seeds: Vec<u64> = (0..a.seeds as u64).collect();
    let model = load_model_arg(&a.model)?;
    let config = a.solver.to_config();
    println!(
        "bench: instances={} methods={:?} seeds={} config={:?}",
        instances.len(),
        methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
        a.seeds,
        config
    );
    let report = run_benchmark(&instances, &methods, &seeds, model.as_ref(), &config);
    report.save_csv(&a.out)?;
    println!("bench: {} rows, {} failures -> {}", report.rows.len(), report.failures.len(), a.out.display());
    for m in &methods {
        println!(
            "bench: {:<10} mean_inertia={:.6} infeasible={:.2}",
            m.name(),
            report.mean_inertia(m.name()),
            report.infeasible_fraction(m.name())
        );
    }
    Ok(())
}
