//! Command-line interface: validate knowledge bases, build target
//! manifests, train scorers, solve learning problems, run benchmarks, and
//! embed expressions.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use nero::concepts::parse_concept;
use nero::harness::{
    parse_problems, run_benchmark, BenchmarkSpec, ProblemSource, SolverKind,
};
use nero::kb::{load_kb_path, validate, KbFormat, KnowledgeBase, Severity};
use nero::model::{train, NeroModel, TrainingConfig};
use nero::refinement::{build_targets, RefinementConfig, TargetSpace};
use nero::retrieval::{LearningProblem, RetrievalEngine};
use nero::search::{celoe_solve, nero_dagger_solve, nero_solve, SearchConfig, SolveResult};

#[derive(Parser)]
#[command(name = "nero", version, about = "Concept learning over description-logic knowledge bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Knowledge-base utilities
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
    /// Target-space utilities
    Targets {
        #[command(subcommand)]
        command: TargetsCommand,
    },
    /// Train a scorer against a target manifest
    Train(TrainArgs),
    /// Solve one learning problem
    Solve(SolveArgs),
    /// Solve a batch of learning problems and report metrics
    Benchmark(BenchmarkArgs),
    /// Print the embedding of a class expression
    Embed(EmbedArgs),
}

#[derive(Subcommand)]
enum KbCommand {
    /// Parse a knowledge base and print diagnostics
    Validate(KbArgs),
}

#[derive(Subcommand)]
enum TargetsCommand {
    /// Construct a target space and write its manifest
    Build(TargetsBuildArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Native,
    Ntriples,
}

impl From<FormatArg> for KbFormat {
    fn from(value: FormatArg) -> KbFormat {
        match value {
            FormatArg::Native => KbFormat::Native,
            FormatArg::Ntriples => KbFormat::NTriples,
        }
    }
}

#[derive(Args)]
struct KbArgs {
    /// Knowledge base file (.nt selects N-Triples unless --format is given)
    #[arg(long)]
    kb: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

impl KbArgs {
    fn load(&self) -> Result<KnowledgeBase> {
        let (kb, warnings) = load_kb_path(&self.kb, self.format.map(Into::into))
            .with_context(|| format!("loading {}", self.kb.display()))?;
        for warning in warnings {
            eprintln!("{warning}");
        }
        Ok(kb)
    }

    fn engine(&self) -> Result<RetrievalEngine> {
        Ok(RetrievalEngine::build(self.load()?))
    }
}

#[derive(Args)]
struct RefinementFlags {
    /// Drop negated atomics from the refinements of Top
    #[arg(long)]
    no_negations: bool,
    /// Drop role restrictions from the refinements of Top
    #[arg(long)]
    no_restrictions: bool,
    /// Cap the number of refinements per expansion
    #[arg(long)]
    max_children: Option<usize>,
}

impl RefinementFlags {
    fn to_config(&self) -> RefinementConfig {
        RefinementConfig {
            use_negations: !self.no_negations,
            use_restrictions: !self.no_restrictions,
            max_children: self.max_children.unwrap_or(usize::MAX),
        }
    }
}

#[derive(Args)]
struct TargetsBuildArgs {
    #[command(flatten)]
    kb: KbArgs,
    /// Number of target expressions to construct
    #[arg(long = "d", default_value_t = 100)]
    count: usize,
    /// Maximum syntactic length of seed expressions
    #[arg(long = "maxlength", default_value_t = 3)]
    max_length: usize,
    /// Manifest output path (one expression per line, order-significant)
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    refinement: RefinementFlags,
    /// Accepted for interface uniformity; construction is deterministic
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    kb: KbArgs,
    /// Target manifest produced by `targets build`
    #[arg(long)]
    targets: PathBuf,
    /// Output path for the trained model container
    #[arg(long)]
    out: PathBuf,
    /// Embedding dimensionality
    #[arg(long = "m", default_value_t = 32)]
    embedding_dim: usize,
    /// Examples sampled per side of each training problem
    #[arg(long = "k", default_value_t = 10)]
    examples_per_side: usize,
    /// Training points regenerated each epoch
    #[arg(long, default_value_t = 50)]
    points_per_epoch: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 10)]
    minibatch: usize,
    /// Adam learning rate
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SearchFlags {
    /// Wall-clock budget in seconds
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
    /// Node budget for the best-first search
    #[arg(long, default_value_t = 10_000)]
    max_nodes: usize,
    /// Ranked targets the ranked solver may explore
    #[arg(long, default_value_t = 100)]
    top_k: usize,
    /// Weight on the child-versus-parent quality gain
    #[arg(long, default_value_t = 0.01)]
    gain_weight: f64,
    /// Penalty per unit of expression length (must exceed the gain weight)
    #[arg(long, default_value_t = 0.05)]
    length_penalty: f64,
}

impl SearchFlags {
    fn to_config(&self) -> SearchConfig {
        SearchConfig {
            gain_weight: self.gain_weight,
            length_penalty: self.length_penalty,
            max_runtime: Duration::from_secs_f64(self.timeout),
            max_nodes: self.max_nodes,
            top_k: self.top_k,
        }
    }
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse()
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    kb: KbArgs,
    /// Trained model (required for the nero and nero_dagger solvers)
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_parser = parse_solver, default_value = "nero")]
    solver: SolverKind,
    /// Positive example (repeatable)
    #[arg(long = "pos")]
    positives: Vec<String>,
    /// Negative example (repeatable)
    #[arg(long = "neg")]
    negatives: Vec<String>,
    /// JSON problem file with positives/negatives name arrays
    #[arg(long, conflicts_with_all = ["positives", "negatives"])]
    problem: Option<PathBuf>,
    #[command(flatten)]
    search: SearchFlags,
    #[command(flatten)]
    refinement: RefinementFlags,
    /// Render the best expression with the Unicode constructors
    #[arg(long)]
    unicode: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_parser = parse_solver, default_value = "nero")]
    solver: SolverKind,
    /// JSON file with an array of learning problems
    #[arg(long, conflicts_with_all = ["random", "size"])]
    problems: Option<PathBuf>,
    /// Generate this many random problems instead of reading a file
    #[arg(long, requires = "size")]
    random: Option<usize>,
    /// Examples per random problem, split evenly into positives/negatives
    #[arg(long, requires = "random")]
    size: Option<usize>,
    /// Report output path; .csv selects CSV, anything else JSON
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (rows stay in problem order)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Reload the model for every problem and bill the load to its row
    #[arg(long)]
    reload_per_problem: bool,
    #[command(flatten)]
    search: SearchFlags,
    #[command(flatten)]
    refinement: RefinementFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[arg(long)]
    model: PathBuf,
    /// Class expression in either token style
    #[arg(long)]
    concept: String,
}

fn load_model(path: &Path, kb: &KnowledgeBase) -> Result<(NeroModel, Vec<nero::concepts::Concept>)> {
    let model = NeroModel::load_from_path(path).with_context(|| format!("loading {}", path.display()))?;
    model.check_compatible(kb)?;
    let targets = model.target_concepts()?;
    Ok((model, targets))
}

fn cmd_kb_validate(args: &KbArgs) -> Result<()> {
    let kb = args.load()?;
    let diagnostics = validate(&kb);
    for diagnostic in &diagnostics {
        println!("{diagnostic}");
    }
    println!(
        "{}: {} individuals, {} concepts, {} roles, {} axioms, {} assertions",
        args.kb.display(),
        kb.individuals().len(),
        kb.concepts().len(),
        kb.roles().len(),
        kb.tbox().count(),
        kb.abox().count(),
    );
    if diagnostics.iter().any(|d| d.severity == Severity::Error) {
        bail!("knowledge base has errors");
    }
    Ok(())
}

fn cmd_targets_build(args: &TargetsBuildArgs) -> Result<()> {
    let _ = args.seed;
    let engine = args.kb.engine()?;
    let space = build_targets(&engine, &args.refinement.to_config(), args.count, args.max_length)?;
    if space.is_saturated() {
        eprintln!(
            "warning: target space saturated at {} of {} requested targets",
            space.len(),
            args.count
        );
    }
    std::fs::write(&args.out, space.to_manifest())
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} targets to {}", space.len(), args.out.display());
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let engine = args.kb.engine()?;
    let manifest = std::fs::read_to_string(&args.targets)
        .with_context(|| format!("reading {}", args.targets.display()))?;
    let targets = TargetSpace::from_manifest(&engine, &manifest)?;
    let cfg = TrainingConfig {
        embedding_dim: args.embedding_dim,
        examples_per_side: args.examples_per_side,
        points_per_epoch: args.points_per_epoch,
        epochs: args.epochs,
        minibatch: args.minibatch,
        learning_rate: args.lr,
        seed: args.seed,
        ..TrainingConfig::default()
    };
    let run = train(&engine, &targets, &cfg)?;
    match (run.epoch_losses.first(), run.epoch_losses.last()) {
        (Some(first), Some(last)) => {
            println!("trained {} epochs: mean loss {first:.6} -> {last:.6}", args.epochs);
            if run.improved() == Some(false) {
                eprintln!("warning: mean loss did not improve; consider more epochs or a lower --lr");
            }
        }
        _ => println!("trained 0 epochs: parameters left at initialization"),
    }
    run.model.save_to_path(&args.out)?;
    println!(
        "saved model ({} targets, {} individuals, m={}) to {}",
        run.model.target_count(),
        run.model.individual_count(),
        run.model.embedding_dim(),
        args.out.display()
    );
    Ok(())
}

fn solve_learning_problem(args: &SolveArgs, engine: &RetrievalEngine) -> Result<SolveResult> {
    let lp = if let Some(path) = &args.problem {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut problems = parse_problems(engine.kb(), &text)?;
        if problems.len() != 1 {
            bail!(
                "{} holds {} problems; `solve` expects exactly one (use `benchmark` for batches)",
                path.display(),
                problems.len()
            );
        }
        problems.remove(0)
    } else {
        LearningProblem::from_names(
            engine.kb(),
            args.positives.iter().map(String::as_str),
            args.negatives.iter().map(String::as_str),
        )?
    };
    let search = args.search.to_config();
    let refinement = args.refinement.to_config();
    let result = match args.solver {
        SolverKind::Celoe => celoe_solve(engine, &refinement, &lp, &search, &[])?,
        SolverKind::Nero | SolverKind::NeroDagger => {
            let path = args
                .model
                .as_ref()
                .ok_or_else(|| anyhow!("--solver {} needs --model", args.solver))?;
            let (model, targets) = load_model(path, engine.kb())?;
            match args.solver {
                SolverKind::Nero => nero_solve(&model, engine, &targets, &lp, &search)?,
                _ => nero_dagger_solve(&model, engine, &targets, &refinement, &lp, &search)?,
            }
        }
    };
    Ok(result)
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let _ = args.seed;
    let engine = args.kb.engine()?;
    let result = solve_learning_problem(args, &engine)?;
    let rendering = if args.unicode {
        result.best_concept.to_unicode()
    } else {
        result.best_concept.to_ascii()
    };
    println!("best concept: {rendering}");
    println!("f1:           {:.6}", result.best_f1);
    println!("explored:     {}", result.explored);
    println!("runtime_s:    {:.6}", result.runtime.as_secs_f64());
    println!("termination:  {}", result.termination);
    Ok(())
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<()> {
    let problems = match (&args.problems, args.random, args.size) {
        (Some(path), None, _) => ProblemSource::File(path.clone()),
        (None, Some(count), Some(size)) => ProblemSource::Random { count, size },
        _ => bail!("provide either --problems FILE or --random N --size E"),
    };
    let spec = BenchmarkSpec {
        kb_path: args.kb.kb.clone(),
        kb_format: args.kb.format.map(Into::into),
        problems,
        solver: args.solver,
        search: args.search.to_config(),
        refinement: args.refinement.to_config(),
        model_path: args.model.clone(),
        output: args.out.clone(),
        reload_per_problem: args.reload_per_problem,
        jobs: args.jobs,
        seed: args.seed,
    };
    let report = run_benchmark(&spec)?;
    for agg in &report.aggregates {
        println!(
            "{}: n={} f1 {:.3} ± {:.3}, runtime_s {:.3} ± {:.3}, explored {:.1} ± {:.1}",
            agg.solver,
            agg.count,
            agg.f1_mean,
            agg.f1_std,
            agg.runtime_mean,
            agg.runtime_std,
            agg.explored_mean,
            agg.explored_std,
        );
    }
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("warning: {failed} problem(s) failed; see the report rows");
    }
    if let Some(out) = &args.out {
        println!("report written to {}", out.display());
    }
    Ok(())
}

fn cmd_embed(args: &EmbedArgs) -> Result<()> {
    let engine = args.kb.engine()?;
    let (model, _) = load_model(&args.model, engine.kb())?;
    let concept = parse_concept(&args.concept)?;
    let embedding = model.embed_concept(&engine, &concept)?;
    let rendered: Vec<String> = embedding.iter().map(f64::to_string).collect();
    println!("{}", rendered.join(" "));
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Kb { command: KbCommand::Validate(args) } => cmd_kb_validate(args),
        Command::Targets { command: TargetsCommand::Build(args) } => cmd_targets_build(args),
        Command::Train(args) => cmd_train(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Embed(args) => cmd_embed(args),
    }
}

fn main() -> ExitCode {
    // Die quietly when stdout is a closed pipe (e.g. `nero embed ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
