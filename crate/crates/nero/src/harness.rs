//! Benchmark running: learning-problem generation and loading, per-problem
//! solver execution, and report serialization.
//!
//! A benchmark run loads one knowledge base, materializes the retrieval
//! engine once, and solves a list of learning problems with one solver.
//! Each problem yields one report row; solver failures are recorded in the
//! row and the run continues. Aggregate rows carry the mean and population
//! standard deviation over the successful rows, and are always recomputable
//! from the per-problem rows.
//!
//! Reports serialize to JSON and to CSV (one row per problem plus
//! `count`/`mean`/`std` footer rows per solver); both forms parse back to
//! an identical report. Apart from the wall-clock columns, a run is a
//! deterministic function of the spec and its seed.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::IndividualSet;
use crate::concepts::Concept;
use crate::kb::{load_kb_path, KbError, KbFormat, KnowledgeBase};
use crate::model::{ModelError, NeroModel};
use crate::refinement::RefinementConfig;
use crate::retrieval::{LearningProblem, LearningProblemError, RetrievalEngine};
use crate::search::{celoe_solve, nero_dagger_solve, nero_solve, SearchConfig, SolveError};

/// Which solver a benchmark run uses.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Nero,
    Celoe,
    NeroDagger,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Nero => "nero",
            SolverKind::Celoe => "celoe",
            SolverKind::NeroDagger => "nero_dagger",
        }
    }

    /// Whether this solver requires a trained model.
    pub fn needs_model(self) -> bool {
        matches!(self, SolverKind::Nero | SolverKind::NeroDagger)
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nero" => Ok(SolverKind::Nero),
            "celoe" => Ok(SolverKind::Celoe),
            "nero_dagger" => Ok(SolverKind::NeroDagger),
            other => Err(format!("unknown solver `{other}` (expected nero, celoe, or nero_dagger)")),
        }
    }
}

/// Where the learning problems come from.
#[derive(Clone, Debug)]
pub enum ProblemSource {
    /// JSON file with `positives`/`negatives` name arrays.
    File(PathBuf),
    /// `count` problems of `size` examples each, split evenly into
    /// positives and negatives.
    Random { count: usize, size: usize },
}

/// Everything one benchmark run needs.
#[derive(Clone, Debug)]
pub struct BenchmarkSpec {
    pub kb_path: PathBuf,
    pub kb_format: Option<KbFormat>,
    pub problems: ProblemSource,
    pub solver: SolverKind,
    pub search: SearchConfig,
    pub refinement: RefinementConfig,
    /// Required for solvers that score with a model.
    pub model_path: Option<PathBuf>,
    /// When set, the report is also written here; `.csv` selects CSV,
    /// anything else JSON.
    pub output: Option<PathBuf>,
    /// Reload the model from disk for every problem and bill the load time
    /// to that problem's row.
    pub reload_per_problem: bool,
    /// Worker threads; rows keep problem order regardless.
    pub jobs: usize,
    pub seed: u64,
}

impl BenchmarkSpec {
    pub fn new(kb_path: impl Into<PathBuf>, solver: SolverKind, problems: ProblemSource) -> Self {
        BenchmarkSpec {
            kb_path: kb_path.into(),
            kb_format: None,
            problems,
            solver,
            search: SearchConfig::default(),
            refinement: RefinementConfig::default(),
            model_path: None,
            output: None,
            reload_per_problem: false,
            jobs: 1,
            seed: 0,
        }
    }
}

/// One solved (or failed) learning problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemRow {
    pub problem: usize,
    pub solver: SolverKind,
    pub f1: f64,
    pub runtime_s: f64,
    pub explored: usize,
    pub best_concept: String,
    pub termination: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Mean and population standard deviation over the successful rows of one
/// solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub solver: SolverKind,
    pub count: usize,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub runtime_mean: f64,
    pub runtime_std: f64,
    pub explored_mean: f64,
    pub explored_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ProblemRow>,
    pub aggregates: Vec<AggregateRow>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    LearningProblem(#[from] LearningProblemError),
    #[error("problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("benchmark needs at least one learning problem")]
    EmptyProblemSet,
    #[error("problem size {size} is invalid for {universe} individuals (need 2 ≤ size ≤ universe)")]
    ProblemSize { size: usize, universe: usize },
    #[error("solver `{0}` needs a model path")]
    MissingModel(SolverKind),
    #[error("malformed report: {0}")]
    Report(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Draws `count` problems of `size` distinct individuals each, split into
/// positive and negative halves; odd sizes give the extra example to the
/// positives. Deterministic under the seed.
pub fn generate_random_problems(
    engine: &RetrievalEngine,
    count: usize,
    size: usize,
    seed: u64,
) -> Result<Vec<LearningProblem>, HarnessError> {
    let universe = engine.universe();
    if size < 2 || size > universe {
        return Err(HarnessError::ProblemSize { size, universe });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = size.div_ceil(2);
    let mut problems = Vec::with_capacity(count);
    for _ in 0..count {
        let picks = rand::seq::index::sample(&mut rng, universe, size);
        let mut positives = IndividualSet::empty(universe);
        let mut negatives = IndividualSet::empty(universe);
        for (i, pick) in picks.iter().enumerate() {
            if i < half {
                positives.insert(pick);
            } else {
                negatives.insert(pick);
            }
        }
        problems.push(LearningProblem::new(positives, negatives).expect("halves are disjoint"));
    }
    Ok(problems)
}

#[derive(Serialize, Deserialize)]
struct ProblemEntry {
    positives: Vec<String>,
    negatives: Vec<String>,
}

/// Parses learning problems from JSON: either an array of
/// `{"positives": [...], "negatives": [...]}` objects or a single such
/// object.
pub fn parse_problems(kb: &KnowledgeBase, text: &str) -> Result<Vec<LearningProblem>, HarnessError> {
    let entries: Vec<ProblemEntry> = match serde_json::from_str::<Vec<ProblemEntry>>(text) {
        Ok(list) => list,
        Err(_) => vec![serde_json::from_str::<ProblemEntry>(text)?],
    };
    entries
        .iter()
        .map(|entry| {
            LearningProblem::from_names(
                kb,
                entry.positives.iter().map(String::as_str),
                entry.negatives.iter().map(String::as_str),
            )
            .map_err(HarnessError::from)
        })
        .collect()
}

pub fn load_problems(kb: &KnowledgeBase, path: &Path) -> Result<Vec<LearningProblem>, HarnessError> {
    parse_problems(kb, &std::fs::read_to_string(path)?)
}

fn load_model_bundle(path: &Path, kb: &KnowledgeBase) -> Result<(NeroModel, Vec<Concept>), ModelError> {
    let model = NeroModel::load_from_path(path)?;
    model.check_compatible(kb)?;
    let targets = model.target_concepts()?;
    Ok((model, targets))
}

fn solve_one(
    index: usize,
    problem: &LearningProblem,
    spec: &BenchmarkSpec,
    engine: &RetrievalEngine,
    shared: Option<&(NeroModel, Vec<Concept>)>,
) -> ProblemRow {
    let started = Instant::now();
    let outcome = (|| -> Result<crate::search::SolveResult, String> {
        let reloaded;
        let bundle = match shared {
            Some(bundle) => Some(bundle),
            None if spec.solver.needs_model() => {
                let path = spec.model_path.as_ref().ok_or("missing model path")?;
                reloaded = load_model_bundle(path, engine.kb()).map_err(|e| e.to_string())?;
                Some(&reloaded)
            }
            None => None,
        };
        match spec.solver {
            SolverKind::Nero => {
                let (model, targets) = bundle.expect("model loaded for nero");
                nero_solve(model, engine, targets, problem, &spec.search)
            }
            SolverKind::Celoe => celoe_solve(engine, &spec.refinement, problem, &spec.search, &[]),
            SolverKind::NeroDagger => {
                let (model, targets) = bundle.expect("model loaded for nero_dagger");
                nero_dagger_solve(model, engine, targets, &spec.refinement, problem, &spec.search)
            }
        }
        .map_err(|e| e.to_string())
    })();
    match outcome {
        Ok(result) => ProblemRow {
            problem: index,
            solver: spec.solver,
            f1: result.best_f1,
            // Reloading bills preprocessing to the row; otherwise only the
            // solver's own wall clock counts.
            runtime_s: if spec.reload_per_problem {
                started.elapsed().as_secs_f64()
            } else {
                result.runtime.as_secs_f64()
            },
            explored: result.explored,
            best_concept: result.best_concept.to_ascii(),
            termination: result.termination.to_string(),
            error: None,
        },
        Err(message) => ProblemRow {
            problem: index,
            solver: spec.solver,
            f1: 0.0,
            runtime_s: started.elapsed().as_secs_f64(),
            explored: 0,
            best_concept: String::new(),
            termination: "error".into(),
            error: Some(message),
        },
    }
}

/// Computes per-solver aggregates over the successful rows, in solver
/// first-appearance order.
pub fn compute_aggregates(rows: &[ProblemRow]) -> Vec<AggregateRow> {
    let mut solvers: Vec<SolverKind> = Vec::new();
    for row in rows {
        if !solvers.contains(&row.solver) {
            solvers.push(row.solver);
        }
    }
    solvers
        .into_iter()
        .map(|solver| {
            let values: Vec<&ProblemRow> = rows
                .iter()
                .filter(|r| r.solver == solver && r.error.is_none())
                .collect();
            let stats = |select: &dyn Fn(&ProblemRow) -> f64| -> (f64, f64) {
                if values.is_empty() {
                    return (0.0, 0.0);
                }
                let n = values.len() as f64;
                let mean = values.iter().map(|r| select(r)).sum::<f64>() / n;
                let var = values
                    .iter()
                    .map(|r| {
                        let d = select(r) - mean;
                        d * d
                    })
                    .sum::<f64>()
                    / n;
                (mean, var.sqrt())
            };
            let (f1_mean, f1_std) = stats(&|r| r.f1);
            let (runtime_mean, runtime_std) = stats(&|r| r.runtime_s);
            let (explored_mean, explored_std) = stats(&|r| r.explored as f64);
            AggregateRow {
                solver,
                count: values.len(),
                f1_mean,
                f1_std,
                runtime_mean,
                runtime_std,
                explored_mean,
                explored_std,
            }
        })
        .collect()
}

/// Runs the whole benchmark: load, solve every problem, aggregate, and
/// optionally write the report to the spec's output path.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkReport, HarnessError> {
    let (kb, warnings) = load_kb_path(&spec.kb_path, spec.kb_format)?;
    for warning in warnings {
        log::warn!("{}: {warning}", spec.kb_path.display());
    }
    let engine = RetrievalEngine::build(kb);
    let problems = match &spec.problems {
        ProblemSource::File(path) => load_problems(engine.kb(), path)?,
        ProblemSource::Random { count, size } => {
            generate_random_problems(&engine, *count, *size, spec.seed)?
        }
    };
    if problems.is_empty() {
        return Err(HarnessError::EmptyProblemSet);
    }
    spec.search.validate().map_err(SolveError::from)?;
    if spec.solver.needs_model() && spec.model_path.is_none() {
        return Err(HarnessError::MissingModel(spec.solver));
    }
    let shared = if spec.solver.needs_model() && !spec.reload_per_problem {
        Some(load_model_bundle(spec.model_path.as_ref().unwrap(), engine.kb())?)
    } else {
        None
    };

    let n = problems.len();
    let rows: Vec<ProblemRow> = if spec.jobs <= 1 {
        problems
            .iter()
            .enumerate()
            .map(|(i, p)| solve_one(i, p, spec, &engine, shared.as_ref()))
            .collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<ProblemRow>>> = (0..n).map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..spec.jobs.min(n) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let row = solve_one(i, &problems[i], spec, &engine, shared.as_ref());
                    *slots[i].lock().unwrap() = Some(row);
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
            .collect()
    };

    let aggregates = compute_aggregates(&rows);
    let report = BenchmarkReport { rows, aggregates };
    if let Some(path) = &spec.output {
        write_report(&report, path)?;
    }
    Ok(report)
}

/// Writes CSV for a `.csv` extension and JSON otherwise.
pub fn write_report(report: &BenchmarkReport, path: &Path) -> Result<(), HarnessError> {
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => report.to_csv()?,
        _ => report.to_json()?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

const CSV_HEADER: [&str; 8] = [
    "problem",
    "solver",
    "f1",
    "runtime_s",
    "explored",
    "best_concept",
    "termination",
    "error",
];

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<BenchmarkReport, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per problem followed by `count`/`mean`/`std` footer rows per
    /// solver. Floats print in shortest round-trip form, so parsing the
    /// output reproduces the report exactly.
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_HEADER)?;
        for row in &self.rows {
            writer.write_record([
                row.problem.to_string(),
                row.solver.to_string(),
                row.f1.to_string(),
                row.runtime_s.to_string(),
                row.explored.to_string(),
                row.best_concept.clone(),
                row.termination.clone(),
                row.error.clone().unwrap_or_default(),
            ])?;
        }
        for agg in &self.aggregates {
            writer.write_record([
                "count".to_string(),
                agg.solver.to_string(),
                agg.count.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
            for (label, f1, runtime, explored) in [
                ("mean", agg.f1_mean, agg.runtime_mean, agg.explored_mean),
                ("std", agg.f1_std, agg.runtime_std, agg.explored_std),
            ] {
                writer.write_record([
                    label.to_string(),
                    agg.solver.to_string(),
                    f1.to_string(),
                    runtime.to_string(),
                    explored.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])?;
            }
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| HarnessError::Report(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Report(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<BenchmarkReport, HarnessError> {
        let bad = |msg: String| HarnessError::Report(msg);
        let parse_f64 = |s: &str, what: &str| -> Result<f64, HarnessError> {
            s.parse::<f64>().map_err(|_| bad(format!("bad {what} value `{s}`")))
        };
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        {
            let headers = reader.headers()?;
            if headers.iter().ne(CSV_HEADER) {
                return Err(bad("unexpected header row".into()));
            }
        }
        let mut rows = Vec::new();
        let mut aggregates = Vec::new();
        let mut pending: Option<AggregateRow> = None;
        for record in reader.records() {
            let record = record?;
            if record.len() != CSV_HEADER.len() {
                return Err(bad(format!("expected {} fields, found {}", CSV_HEADER.len(), record.len())));
            }
            let solver: SolverKind = record[1].parse().map_err(bad)?;
            match &record[0] {
                "count" => {
                    if pending.is_some() {
                        return Err(bad("count row with an unfinished aggregate".into()));
                    }
                    pending = Some(AggregateRow {
                        solver,
                        count: record[2].parse().map_err(|_| bad("bad count".into()))?,
                        f1_mean: 0.0,
                        f1_std: 0.0,
                        runtime_mean: 0.0,
                        runtime_std: 0.0,
                        explored_mean: 0.0,
                        explored_std: 0.0,
                    });
                }
                kind @ ("mean" | "std") => {
                    let agg = pending
                        .as_mut()
                        .ok_or_else(|| bad(format!("{kind} row without a count row")))?;
                    if agg.solver != solver {
                        return Err(bad("aggregate rows mix solvers".into()));
                    }
                    let f1 = parse_f64(&record[2], "f1")?;
                    let runtime = parse_f64(&record[3], "runtime")?;
                    let explored = parse_f64(&record[4], "explored")?;
                    if *kind == *"mean" {
                        agg.f1_mean = f1;
                        agg.runtime_mean = runtime;
                        agg.explored_mean = explored;
                    } else {
                        agg.f1_std = f1;
                        agg.runtime_std = runtime;
                        agg.explored_std = explored;
                        aggregates.push(pending.take().unwrap());
                    }
                }
                index => {
                    let problem = index
                        .parse::<usize>()
                        .map_err(|_| bad(format!("bad problem id `{index}`")))?;
                    let error = &record[7];
                    rows.push(ProblemRow {
                        problem,
                        solver,
                        f1: parse_f64(&record[2], "f1")?,
                        runtime_s: parse_f64(&record[3], "runtime_s")?,
                        explored: record[4]
                            .parse()
                            .map_err(|_| bad("bad explored count".into()))?,
                        best_concept: record[5].to_string(),
                        termination: record[6].to_string(),
                        error: if error.is_empty() { None } else { Some(error.to_string()) },
                    });
                }
            }
        }
        if pending.is_some() {
            return Err(bad("trailing unfinished aggregate".into()));
        }
        Ok(BenchmarkReport { rows, aggregates })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{train, TrainingConfig};
    use crate::refinement::build_targets;

    const T1: &str = "sub Brother Male\nsub Male Person\nsub Female Person\n\
                      type a Brother\ntype b Female\ntype c Male\nrel a hasSibling b\n";

    // Two structurally interchangeable individuals: no expression separates
    // them, so problems putting them on opposite sides have no goal.
    const TWINS: &str = "type a A\ntype b A\ntype c B\nrel a r c\nrel b r c\n";

    fn t1_engine() -> RetrievalEngine {
        RetrievalEngine::build(KnowledgeBase::parse_native(T1).unwrap())
    }

    #[test]
    fn random_problems_split_evenly_and_deterministically() {
        let engine = t1_engine();
        let problems = generate_random_problems(&engine, 10, 2, 42).unwrap();
        assert_eq!(problems.len(), 10);
        for p in &problems {
            assert_eq!(p.positives().len(), 1);
            assert_eq!(p.negatives().len(), 1);
            assert!(p.positives().is_disjoint(p.negatives()));
        }
        let again = generate_random_problems(&engine, 10, 2, 42).unwrap();
        assert_eq!(problems, again);
        let other_seed = generate_random_problems(&engine, 10, 2, 43).unwrap();
        assert_ne!(problems, other_seed);
    }

    #[test]
    fn odd_sizes_favor_positives_and_bounds_are_checked() {
        let engine = t1_engine();
        let problems = generate_random_problems(&engine, 3, 3, 0).unwrap();
        for p in &problems {
            assert_eq!(p.positives().len(), 2);
            assert_eq!(p.negatives().len(), 1);
        }
        assert!(matches!(
            generate_random_problems(&engine, 1, 4, 0),
            Err(HarnessError::ProblemSize { size: 4, universe: 3 })
        ));
        assert!(matches!(
            generate_random_problems(&engine, 1, 1, 0),
            Err(HarnessError::ProblemSize { .. })
        ));
    }

    #[test]
    fn problem_files_accept_arrays_and_single_objects() {
        let engine = t1_engine();
        let kb = engine.kb();
        let list = parse_problems(kb, r#"[{"positives": ["a"], "negatives": ["b"]}]"#).unwrap();
        assert_eq!(list.len(), 1);
        let single = parse_problems(kb, r#"{"positives": ["a", "c"], "negatives": []}"#).unwrap();
        assert_eq!(single[0].positives().len(), 2);
        let err = parse_problems(kb, r#"{"positives": ["nobody"], "negatives": []}"#).unwrap_err();
        assert!(matches!(err, HarnessError::LearningProblem(_)));
    }

    fn write_temp(dir: &tempfile::TempDir, name: &str, contents: &str) -> PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn trained_model_file(dir: &tempfile::TempDir, source: &str, d: usize) -> PathBuf {
        let engine = RetrievalEngine::build(KnowledgeBase::parse_native(source).unwrap());
        let targets = build_targets(&engine, &RefinementConfig::default(), d, 3).unwrap();
        let cfg = TrainingConfig {
            embedding_dim: 8,
            examples_per_side: 1,
            points_per_epoch: 16,
            epochs: 30,
            minibatch: 8,
            seed: 5,
            ..TrainingConfig::default()
        };
        let model = train(&engine, &targets, &cfg).unwrap().model;
        let path = dir.path().join("model.nero");
        model.save_to_path(&path).unwrap();
        path
    }

    #[test]
    fn benchmark_runs_celoe_without_a_model() {
        let dir = tempfile::tempdir().unwrap();
        let kb_path = write_temp(&dir, "t1.kb", T1);
        let spec = BenchmarkSpec {
            search: SearchConfig {
                max_nodes: 200,
                ..SearchConfig::default()
            },
            ..BenchmarkSpec::new(kb_path, SolverKind::Celoe, ProblemSource::Random { count: 50, size: 2 })
        };
        let report = run_benchmark(&spec).unwrap();
        assert_eq!(report.rows.len(), 50);
        assert_eq!(report.aggregates.len(), 1);
        let agg = &report.aggregates[0];
        assert_eq!(agg.count, 50);
        assert_eq!(compute_aggregates(&report.rows), report.aggregates);
        assert!(report.rows.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn benchmark_requires_problems_and_model() {
        let dir = tempfile::tempdir().unwrap();
        let kb_path = write_temp(&dir, "t1.kb", T1);
        let problems = write_temp(&dir, "empty.json", "[]");
        let spec = BenchmarkSpec::new(
            kb_path.clone(),
            SolverKind::Celoe,
            ProblemSource::File(problems),
        );
        assert!(matches!(run_benchmark(&spec), Err(HarnessError::EmptyProblemSet)));

        let spec = BenchmarkSpec::new(kb_path, SolverKind::Nero, ProblemSource::Random { count: 1, size: 2 });
        assert!(matches!(
            run_benchmark(&spec),
            Err(HarnessError::MissingModel(SolverKind::Nero))
        ));
    }

    #[test]
    fn unsolvable_problems_explore_exactly_top_k() {
        let dir = tempfile::tempdir().unwrap();
        let kb_path = write_temp(&dir, "twins.kb", TWINS);
        let model_path = trained_model_file(&dir, TWINS, 3);
        let problems = write_temp(
            &dir,
            "problems.json",
            r#"[{"positives": ["a"], "negatives": ["b"]}]"#,
        );
        let spec = BenchmarkSpec {
            model_path: Some(model_path),
            search: SearchConfig {
                top_k: 2,
                ..SearchConfig::default()
            },
            ..BenchmarkSpec::new(kb_path, SolverKind::Nero, ProblemSource::File(problems))
        };
        let report = run_benchmark(&spec).unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        assert_eq!(row.explored, 2, "explored must equal top_k when no goal exists");
        assert!(row.f1 < 1.0);
        assert_eq!(row.termination, "budget");
    }

    #[test]
    fn reload_and_parallel_runs_match_the_serial_run() {
        let dir = tempfile::tempdir().unwrap();
        let kb_path = write_temp(&dir, "t1.kb", T1);
        let model_path = trained_model_file(&dir, T1, 7);
        let base = BenchmarkSpec {
            model_path: Some(model_path),
            ..BenchmarkSpec::new(kb_path, SolverKind::NeroDagger, ProblemSource::Random { count: 8, size: 2 })
        };
        let serial = run_benchmark(&base).unwrap();
        let parallel = run_benchmark(&BenchmarkSpec { jobs: 4, ..base.clone() }).unwrap();
        let reloaded = run_benchmark(&BenchmarkSpec {
            reload_per_problem: true,
            ..base.clone()
        })
        .unwrap();
        for (a, b) in serial.rows.iter().zip(&parallel.rows).chain(serial.rows.iter().zip(&reloaded.rows)) {
            assert_eq!(a.problem, b.problem);
            assert_eq!(a.f1, b.f1);
            assert_eq!(a.explored, b.explored);
            assert_eq!(a.best_concept, b.best_concept);
            assert_eq!(a.termination, b.termination);
        }
    }

    #[test]
    fn reports_round_trip_through_json_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let kb_path = write_temp(&dir, "t1.kb", T1);
        let out_csv = dir.path().join("report.csv");
        let spec = BenchmarkSpec {
            output: Some(out_csv.clone()),
            ..BenchmarkSpec::new(kb_path, SolverKind::Celoe, ProblemSource::Random { count: 5, size: 2 })
        };
        let mut report = run_benchmark(&spec).unwrap();
        // Exercise the error column and floats that are hard to round-trip
        // (this runtime_s once exposed lossy JSON float parsing).
        report.rows.push(ProblemRow {
            problem: 5,
            solver: SolverKind::Celoe,
            f1: 0.1 + 0.2,
            runtime_s: 2.6353393254000518e-6,
            explored: 0,
            best_concept: String::new(),
            termination: "error".into(),
            error: Some("sampling needs 10 individuals, knowledge base has 3".into()),
        });
        report.aggregates = compute_aggregates(&report.rows);

        let json = report.to_json().unwrap();
        assert_eq!(BenchmarkReport::from_json(&json).unwrap(), report);
        let csv_text = report.to_csv().unwrap();
        assert_eq!(BenchmarkReport::from_csv(&csv_text).unwrap(), report);

        // write_report picked CSV from the extension.
        let written = std::fs::read_to_string(&out_csv).unwrap();
        assert!(written.starts_with("problem,solver,f1"));
        assert!(BenchmarkReport::from_csv(&written).is_ok());
    }

    #[test]
    fn solver_names_parse_and_print() {
        for kind in [SolverKind::Nero, SolverKind::Celoe, SolverKind::NeroDagger] {
            assert_eq!(kind.as_str().parse::<SolverKind>().unwrap(), kind);
        }
        assert!("eltl".parse::<SolverKind>().is_err());
    }
}
