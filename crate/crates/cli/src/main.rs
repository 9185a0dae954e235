use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use ncv::exec::with_threads;
use ncv::graph::{load_edge_list, write_edge_list, Membership};
use ncv::models::{BlockMatrix, DcbmParams, DegreeParams, ModelParams, SbmParams};
use ncv::sim::{self, RunConfig, Sim1Spec, Sim2Spec, Sim3Spec, SuccessTable};
use ncv::{ncv_select, Candidate, LossFn, ModelKind, NcvConfig, NcvReport};

#[derive(Parser)]
#[command(name = "ncv", version, about = "Network cross-validation for block model selection")]
struct Cli {
    /// Worker threads; 0 uses every available core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select the model type and number of communities for an edge list.
    Select(SelectArgs),
    /// Sample a graph from a block model.
    Simulate(SimulateArgs),
    /// Run a simulation study or the political-blogs analysis.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SelectArgs {
    /// Edge list: two whitespace-separated node ids per line, '#' comments.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 6)]
    kmax: usize,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    #[arg(long, value_delimiter = ',', default_value = "sbm,dcbm")]
    models: Vec<Model>,
    #[arg(long, value_enum, default_value_t = Loss::Nll)]
    loss: Loss,
    #[arg(long, env = "NCV_SEED")]
    seed: Option<u64>,
    /// Keep only reciprocated pairs instead of symmetrizing.
    #[arg(long)]
    no_symmetrize: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(value_enum)]
    model: Model,
    #[arg(long, required_unless_present = "params")]
    n: Option<usize>,
    #[arg(long, required_unless_present = "params")]
    k: Option<usize>,
    #[arg(long, conflicts_with = "params")]
    b_diag: Option<f64>,
    #[arg(long, conflicts_with = "params")]
    b_off: Option<f64>,
    /// Community sizes; balanced when omitted.
    #[arg(long, value_delimiter = ',', conflicts_with = "params")]
    sizes: Option<Vec<usize>>,
    /// Whitespace-separated activeness values, one per node (DCBM). Scaled
    /// to block-wise maximum 1. Drawn from Unif(0.2, 1) when omitted.
    #[arg(long, conflicts_with = "params")]
    psi: Option<PathBuf>,
    /// Full parameter set as JSON, as written by the library.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, env = "NCV_SEED")]
    seed: Option<u64>,
    /// Edge list path; labels go to `<output>.labels`.
    #[arg(long, default_value = "simulated.edges")]
    output: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    which: Experiment,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Smallest community sizes (sim1); `balanced` means n / K.
    #[arg(long, value_delimiter = ',')]
    n1: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    /// True model types (sim3).
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<Model>>,
    #[arg(long, default_value_t = sim::DEFAULT_REPS)]
    reps: usize,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    #[arg(long, value_enum, default_value_t = Loss::Nll)]
    loss: Loss,
    /// Candidates run up to K_true + extra_k.
    #[arg(long, default_value_t = 2)]
    extra_k: usize,
    #[arg(long, env = "NCV_SEED")]
    seed: Option<u64>,
    /// Edge list for `polblogs`.
    #[arg(long, env = "NCV_POLBLOGS")]
    input: Option<PathBuf>,
    /// Success-table CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the full result as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Loss curves CSV for `polblogs`.
    #[arg(long)]
    curves: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Sbm,
    Dcbm,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Sbm => ModelKind::Sbm,
            Model::Dcbm => ModelKind::Dcbm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Loss {
    L2,
    Nll,
}

impl From<Loss> for LossFn {
    fn from(l: Loss) -> Self {
        match l {
            Loss::L2 => LossFn::Squared,
            Loss::Nll => LossFn::NegLogLik,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Sim1,
    Sim2,
    Sim3,
    Polblogs,
}

/// Exit status and message for a failed command.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }
}

impl From<ncv::Error> for Failure {
    fn from(e: ncv::Error) -> Self {
        Self {
            code: if e.is_user_error() { 2 } else { 1 },
            msg: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli.threads;
    let result = with_threads(threads, move || match cli.command {
        Command::Select(args) => select(args),
        Command::Simulate(args) => simulate(args),
        Command::Bench(args) => bench(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::rng().random::<u64>();
        eprintln!("no --seed given, using {s}");
        s
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

/// Write `body` to `path`, or to stdout when `path` is `None`.
fn emit(path: Option<&Path>, body: &[u8]) -> Outcome {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(body).and_then(|_| w.flush()).map_err(|e| io_failure(p, e))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body)
                .and_then(|_| out.flush())
                .map_err(|e| Failure { code: 1, msg: format!("stdout: {e}") })
        }
    }
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_vec_pretty(value).map_err(|e| Failure { code: 1, msg: e.to_string() })?;
    s.push(b'\n');
    Ok(s)
}

fn select(args: SelectArgs) -> Outcome {
    if args.kmax == 0 {
        return Err(Failure::usage("--kmax must be at least 1"));
    }
    if args.folds < 2 {
        return Err(Failure::usage("--folds must be at least 2"));
    }
    if args.models.is_empty() {
        return Err(Failure::usage("--models needs at least one of sbm, dcbm"));
    }
    let seed = resolve_seed(args.seed);
    let (graph, _) = load_edge_list(&args.input, !args.no_symmetrize)?;
    let mut models: Vec<ModelKind> = args.models.iter().map(|&m| m.into()).collect();
    models.sort();
    models.dedup();
    let candidates = Candidate::grid(&models, args.kmax);
    let cfg = NcvConfig::default().with_folds(args.folds).with_loss(args.loss.into());
    let report = ncv_select(&graph, &candidates, &cfg, seed)?;
    print_report(&report, graph.n(), graph.edge_count());
    emit(args.output.as_deref(), &json_bytes(&report)?)
}

fn print_report(report: &NcvReport, n: usize, edges: usize) {
    eprintln!("n = {n}, edges = {edges}, V = {}, loss = {}, seed = {}", report.folds, report.loss, report.seed);
    eprintln!("{:<6} {:>3} {:>16}", "model", "K", "total loss");
    for c in &report.candidates {
        let mark = if c.candidate() == report.selected { " *" } else { "" };
        eprintln!("{:<6} {:>3} {:>16.4}{mark}", c.model.to_string(), c.k, c.total);
    }
    eprintln!("selected: {}", report.selected);
}

fn balanced_sizes(n: usize, k: usize) -> Vec<usize> {
    let mut sizes = vec![n / k; k];
    sizes[k - 1] += n % k;
    sizes
}

fn read_psi(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Failure::usage(format!("{}: {tok:?} is not a number", path.display())))
        })
        .collect()
}

fn simulate(args: SimulateArgs) -> Outcome {
    let seed = resolve_seed(args.seed);
    let mut rng = ncv::seed::rng(seed);
    let params: ModelParams = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            let params: ModelParams = serde_json::from_str(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let kind = match params {
                ModelParams::Sbm(_) => ModelKind::Sbm,
                ModelParams::Dcbm(_) => ModelKind::Dcbm,
            };
            if kind != args.model.into() {
                return Err(Failure::usage(format!("{} holds {kind} parameters", path.display())));
            }
            params
        }
        None => {
            let (n, k) = (args.n.expect("required by clap"), args.k.expect("required by clap"));
            if k == 0 || n < k {
                return Err(Failure::usage(format!("cannot split n = {n} nodes into k = {k} communities")));
            }
            let sizes = args.sizes.clone().unwrap_or_else(|| balanced_sizes(n, k));
            if sizes.len() != k || sizes.iter().sum::<usize>() != n {
                return Err(Failure::usage(format!("--sizes must list {k} sizes summing to {n}")));
            }
            let g = Membership::from_sizes(&sizes)?;
            let diag = args.b_diag.ok_or_else(|| Failure::usage("--b-diag is required without --params"))?;
            let off = args.b_off.unwrap_or(if k == 1 { 0.0 } else { diag });
            let b = BlockMatrix::planted(k, diag, off)?;
            match args.model {
                Model::Sbm => SbmParams::new(g, b)?.into(),
                Model::Dcbm => {
                    let raw = match &args.psi {
                        Some(p) => read_psi(p)?,
                        None => (0..n).map(|_| rng.random_range(0.2..1.0)).collect(),
                    };
                    let psi = DegreeParams::normalized(raw, &g)?;
                    DcbmParams::new(g, b, psi)?.into()
                }
            }
        }
    };
    let graph = params.sample(&mut rng)?;

    let mut w = create(&args.output)?;
    write_edge_list(&mut w, &graph, None)
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(&args.output, e))?;
    let labels_path = labels_path(&args.output);
    let mut lw = create(&labels_path)?;
    let g = params.membership();
    (|| {
        writeln!(lw, "# node community")?;
        for i in 0..g.n() {
            writeln!(lw, "{i} {}", g.label(i) + 1)?;
        }
        lw.flush()
    })()
    .map_err(|e| io_failure(&labels_path, e))?;
    eprintln!(
        "wrote {} ({} nodes, {} edges) and {}, seed = {seed}",
        args.output.display(),
        graph.n(),
        graph.edge_count(),
        labels_path.display()
    );
    Ok(())
}

fn labels_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".labels");
    PathBuf::from(s)
}

fn parse_n1(values: &[String]) -> Result<Vec<Option<usize>>, Failure> {
    values
        .iter()
        .map(|v| match v.as_str() {
            "balanced" => Ok(None),
            other => other
                .parse()
                .map(Some)
                .map_err(|_| Failure::usage(format!("--n1 expects sizes or 'balanced', got {other:?}"))),
        })
        .collect()
}

fn bench(args: BenchArgs) -> Outcome {
    if args.reps == 0 {
        return Err(Failure::usage("--reps must be at least 1"));
    }
    let run = RunConfig {
        reps: args.reps,
        folds: args.folds,
        loss: args.loss.into(),
        seed: resolve_seed(args.seed),
        extra_k: args.extra_k,
        ..RunConfig::default()
    };
    let table: SuccessTable = match args.which {
        Experiment::Sim1 => {
            let mut spec = Sim1Spec {
                run,
                ..Sim1Spec::default()
            };
            if let Some(n) = &args.n {
                match n.as_slice() {
                    [one] => spec.n = *one,
                    _ => return Err(Failure::usage("sim1 takes a single --n")),
                }
            }
            if let Some(k) = args.k.clone() {
                spec.k = k;
            }
            if let Some(n1) = &args.n1 {
                spec.n1 = parse_n1(n1)?;
            }
            if let Some(r) = args.r.clone() {
                spec.r = r;
            }
            let table = sim::run_sim1(&spec)?;
            write_json(args.json.as_deref(), &table)?;
            table
        }
        Experiment::Sim2 => {
            let mut spec = Sim2Spec {
                run,
                ..Sim2Spec::default()
            };
            if let Some(n) = args.n.clone() {
                spec.n = n;
            }
            if let Some(k) = args.k.clone() {
                spec.k = k;
            }
            let table = sim::run_sim2(&spec)?;
            write_json(args.json.as_deref(), &table)?;
            table
        }
        Experiment::Sim3 => {
            let mut spec = Sim3Spec {
                run,
                ..Sim3Spec::default()
            };
            if let Some(n) = args.n.clone() {
                spec.n = n;
            }
            if let Some(k) = args.k.clone() {
                spec.k = k;
            }
            if let Some(m) = &args.models {
                spec.model = m.iter().map(|&m| m.into()).collect();
            }
            let table = sim::run_sim3(&spec)?;
            write_json(args.json.as_deref(), &table)?;
            table
        }
        Experiment::Polblogs => {
            let input = args
                .input
                .clone()
                .ok_or_else(|| Failure::usage(format!("polblogs needs --input; {}", sim::POLBLOGS_HINT)))?;
            let report = sim::run_polblogs(&input, &run)?;
            eprintln!(
                "largest component: {} nodes, {} edges; modal selection {} in {}/{} splits",
                report.n,
                report.edges,
                report.modal,
                report.selections.count(report.modal),
                report.reps
            );
            if let Some(path) = &args.curves {
                let mut w = create(path)?;
                report.write_curves_csv(&mut w)?;
            }
            write_json(args.json.as_deref(), &report)?;
            report.success_table(&run)
        }
    };
    for row in &table.rows {
        eprintln!(
            "n={} K={} n1={} r={} model={} rate={:.3}",
            row.n,
            row.k,
            row.n1.map_or("-".into(), |v| v.to_string()),
            row.r.map_or("-".into(), |v| v.to_string()),
            row.model.map_or("-".into(), |m| m.to_string()),
            row.rate
        );
    }
    emit(args.output.as_deref(), table.to_csv_string()?.as_bytes())
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Outcome {
    match path {
        Some(p) => emit(Some(p), &json_bytes(value)?),
        None => Ok(()),
    }
}
