//! Solvers: ranked exploration of the target space, best-first refinement
//! search, and their combination.
//!
//! Every solver counts one *explored concept* per quality evaluation — one
//! retrieval followed by an F1 computation — and records the full
//! exploration trace. The ranked solver walks the targets in descending
//! order of predicted score and stops at the first goal. The best-first
//! solver keeps a frontier ordered by
//!
//! ```text
//! h(child) = Q(child) + gain_weight·(Q(child) − Q(parent)) − length_penalty·|child|
//! ```
//!
//! with a zero gain term for root nodes, and never scores the same
//! canonical form twice. The combined solver runs the ranked phase first
//! and, short of a goal, continues with the best-first search seeded by the
//! concepts the ranked phase explored, under whatever remains of the shared
//! time budget.

use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::concepts::Concept;
use crate::model::{ModelError, NeroModel};
use crate::refinement::{refine, RefinementConfig};
use crate::retrieval::{
    f1_of_retrieval, is_goal_retrieval, LearningProblem, RetrievalEngine, RetrievalError,
};

/// Weights and budgets shared by all solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Bonus weight on the child-versus-parent quality gain.
    pub gain_weight: f64,
    /// Penalty weight per unit of expression length; must exceed the gain
    /// weight.
    pub length_penalty: f64,
    /// Wall-clock budget for one solve call.
    pub max_runtime: Duration,
    /// Upper bound on explored concepts in the best-first search.
    pub max_nodes: usize,
    /// How many top-ranked targets the ranked solver may explore.
    pub top_k: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            gain_weight: 0.01,
            length_penalty: 0.05,
            max_runtime: Duration::from_secs(10),
            max_nodes: 10_000,
            top_k: 100,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("length penalty must exceed the gain weight, which must be non-negative")]
    WeightOrder,
    #[error("top_k must be at least 1")]
    ZeroTopK,
    #[error("node budget must be at least 1")]
    ZeroNodes,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gain_weight >= 0.0
            && self.length_penalty > self.gain_weight
            && self.length_penalty.is_finite())
        {
            return Err(ConfigError::WeightOrder);
        }
        if self.top_k == 0 {
            return Err(ConfigError::ZeroTopK);
        }
        if self.max_nodes == 0 {
            return Err(ConfigError::ZeroNodes);
        }
        Ok(())
    }
}

/// Why a solve call stopped.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Termination {
    /// A concept covering every positive and no negative was found.
    Goal,
    /// The node or top-k budget ran out.
    Budget,
    /// The wall-clock budget ran out.
    Timeout,
    /// Nothing left to explore.
    Exhausted,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Goal => "goal",
            Termination::Budget => "budget",
            Termination::Timeout => "timeout",
            Termination::Exhausted => "exhausted",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one solve call.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub best_concept: Concept,
    pub best_f1: f64,
    /// Number of quality evaluations; equals the trace length.
    pub explored: usize,
    pub runtime: Duration,
    pub termination: Termination,
    /// Every explored concept with its true F1, in exploration order.
    pub trace: Vec<(Concept, f64)>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the model scores {model} targets but {given} were supplied")]
    TargetCountMismatch { model: usize, given: usize },
    #[error("no targets to explore")]
    NoTargets,
}

/// Sorts indices by score descending, ties broken by ascending index.
pub fn rank_by_scores(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Target indices in descending order of predicted score.
pub fn rank_targets(model: &NeroModel, lp: &LearningProblem) -> Result<Vec<usize>, ModelError> {
    let scores = model.forward(lp.positives(), lp.negatives())?;
    Ok(rank_by_scores(&scores))
}

// Shared bookkeeping: trace, best-so-far, and stop conditions.
struct Exploration<'a> {
    engine: &'a RetrievalEngine,
    lp: &'a LearningProblem,
    started: Instant,
    deadline: Duration,
    trace: Vec<(Concept, f64)>,
    best: Option<(usize, f64)>,
}

impl<'a> Exploration<'a> {
    fn new(engine: &'a RetrievalEngine, lp: &'a LearningProblem, deadline: Duration) -> Self {
        Exploration {
            engine,
            lp,
            started: Instant::now(),
            deadline,
            trace: Vec::new(),
            best: None,
        }
    }

    fn timed_out(&self) -> bool {
        self.started.elapsed() >= self.deadline
    }

    /// Retrieves, scores, and records one concept; returns its F1 and
    /// whether it is a goal.
    fn explore(&mut self, concept: &Concept) -> Result<(f64, bool), RetrievalError> {
        let retrieval = self.engine.retrieve(concept)?;
        let quality = f1_of_retrieval(&retrieval, self.lp);
        let goal = is_goal_retrieval(&retrieval, self.lp);
        let index = self.trace.len();
        self.trace.push((concept.clone(), quality));
        if self.best.is_none_or(|(_, best)| quality > best) {
            self.best = Some((index, quality));
        }
        Ok((quality, goal))
    }

    fn finish(self, termination: Termination) -> Result<SolveResult, SolveError> {
        let (index, best_f1) = self.best.ok_or(SolveError::NoTargets)?;
        Ok(SolveResult {
            best_concept: self.trace[index].0.clone(),
            best_f1,
            explored: self.trace.len(),
            runtime: self.started.elapsed(),
            termination,
            trace: self.trace,
        })
    }
}

/// Ranks the targets by predicted score and evaluates the true F1 of the
/// top ones in order, stopping at the first goal, after `top_k`
/// evaluations, or at the deadline — whichever comes first.
pub fn nero_solve(
    model: &NeroModel,
    engine: &RetrievalEngine,
    targets: &[Concept],
    lp: &LearningProblem,
    cfg: &SearchConfig,
) -> Result<SolveResult, SolveError> {
    cfg.validate()?;
    if targets.is_empty() {
        return Err(SolveError::NoTargets);
    }
    if targets.len() != model.target_count() {
        return Err(SolveError::TargetCountMismatch {
            model: model.target_count(),
            given: targets.len(),
        });
    }
    let ranking = rank_targets(model, lp)?;
    let mut walk = Exploration::new(engine, lp, cfg.max_runtime);
    let budget = cfg.top_k.min(targets.len());
    for &index in ranking.iter().take(budget) {
        if walk.timed_out() {
            return walk.finish(Termination::Timeout);
        }
        let (_, goal) = walk.explore(&targets[index])?;
        if goal {
            return walk.finish(Termination::Goal);
        }
    }
    if budget == targets.len() {
        walk.finish(Termination::Exhausted)
    } else {
        walk.finish(Termination::Budget)
    }
}

#[derive(Clone, Debug)]
struct FrontierNode {
    concept: Concept,
    quality: f64,
    heuristic: f64,
    length: usize,
    rendering: String,
    parent: Option<usize>,
    expansions: usize,
}

// Max-heap ordering: heuristic, then quality, then shorter length, then
// rendering, so the pop order is total and deterministic.
#[derive(PartialEq)]
struct FrontierKey {
    heuristic: f64,
    quality: f64,
    length: usize,
    rendering: String,
    node: usize,
}

impl Eq for FrontierKey {}

impl Ord for FrontierKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.heuristic
            .total_cmp(&other.heuristic)
            .then(self.quality.total_cmp(&other.quality))
            .then(other.length.cmp(&self.length))
            .then(other.rendering.cmp(&self.rendering))
    }
}

impl PartialOrd for FrontierKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// The best-first heuristic: child quality plus a weighted quality gain
/// over the parent, minus a length penalty.
fn heuristic(cfg: &SearchConfig, parent_quality: f64, quality: f64, length: usize) -> f64 {
    quality + cfg.gain_weight * (quality - parent_quality) - cfg.length_penalty * length as f64
}

/// Best-first refinement search from `⊤` and the given seeds.
///
/// Roots carry a zero gain term. Children already seen in canonical form
/// are discarded before scoring, so no concept is explored twice.
pub fn celoe_solve(
    engine: &RetrievalEngine,
    refinement: &RefinementConfig,
    lp: &LearningProblem,
    cfg: &SearchConfig,
    seeds: &[Concept],
) -> Result<SolveResult, SolveError> {
    cfg.validate()?;
    let mut walk = Exploration::new(engine, lp, cfg.max_runtime);
    let mut seen: HashSet<Concept> = HashSet::new();
    let mut nodes: Vec<FrontierNode> = Vec::new();
    let mut frontier: BinaryHeap<FrontierKey> = BinaryHeap::new();

    let push = |node: FrontierNode, nodes: &mut Vec<FrontierNode>, frontier: &mut BinaryHeap<FrontierKey>| {
        frontier.push(FrontierKey {
            heuristic: node.heuristic,
            quality: node.quality,
            length: node.length,
            rendering: node.rendering.clone(),
            node: nodes.len(),
        });
        nodes.push(node);
    };

    for root in std::iter::once(&Concept::Top).chain(seeds) {
        if !seen.insert(root.clone()) {
            continue;
        }
        if walk.timed_out() {
            return walk.finish(Termination::Timeout);
        }
        let (quality, goal) = walk.explore(root)?;
        if goal {
            return walk.finish(Termination::Goal);
        }
        let length = root.length();
        push(
            FrontierNode {
                concept: root.clone(),
                quality,
                heuristic: heuristic(cfg, quality, quality, length),
                length,
                rendering: root.to_ascii(),
                parent: None,
                expansions: 0,
            },
            &mut nodes,
            &mut frontier,
        );
        if walk.trace.len() >= cfg.max_nodes {
            return walk.finish(Termination::Budget);
        }
    }

    while let Some(key) = frontier.pop() {
        if walk.timed_out() {
            return walk.finish(Termination::Timeout);
        }
        let parent = key.node;
        nodes[parent].expansions += 1;
        let parent_quality = nodes[parent].quality;
        // Heuristics stay recomputable from the stored fields alone.
        debug_assert_eq!(nodes[parent].heuristic, {
            let grandparent_quality = nodes[parent].parent.map_or(parent_quality, |g| nodes[g].quality);
            heuristic(cfg, grandparent_quality, parent_quality, nodes[parent].length)
        });
        let children = refine(engine, &nodes[parent].concept.clone(), refinement);
        for child in children {
            if !seen.insert(child.clone()) {
                continue;
            }
            if walk.timed_out() {
                return walk.finish(Termination::Timeout);
            }
            let (quality, goal) = walk.explore(&child)?;
            if goal {
                return walk.finish(Termination::Goal);
            }
            let length = child.length();
            push(
                FrontierNode {
                    rendering: child.to_ascii(),
                    heuristic: heuristic(cfg, parent_quality, quality, length),
                    concept: child,
                    quality,
                    length,
                    parent: Some(parent),
                    expansions: 0,
                },
                &mut nodes,
                &mut frontier,
            );
            if walk.trace.len() >= cfg.max_nodes {
                return walk.finish(Termination::Budget);
            }
        }
    }
    walk.finish(Termination::Exhausted)
}

/// Ranked exploration first; on anything short of a goal, a best-first
/// continuation seeded with every concept the ranked phase explored, run on
/// the remaining share of the time budget. Explored counts, runtimes, and
/// traces add up across the two phases.
pub fn nero_dagger_solve(
    model: &NeroModel,
    engine: &RetrievalEngine,
    targets: &[Concept],
    refinement: &RefinementConfig,
    lp: &LearningProblem,
    cfg: &SearchConfig,
) -> Result<SolveResult, SolveError> {
    let first = nero_solve(model, engine, targets, lp, cfg)?;
    if first.termination == Termination::Goal {
        return Ok(first);
    }
    let seeds: Vec<Concept> = first.trace.iter().map(|(c, _)| c.clone()).collect();
    let continuation_cfg = SearchConfig {
        max_runtime: cfg.max_runtime.saturating_sub(first.runtime),
        ..cfg.clone()
    };
    let second = celoe_solve(engine, refinement, lp, &continuation_cfg, &seeds)?;

    // Prefer the ranked phase's concept on an exact tie.
    let (best_concept, best_f1) = if second.best_f1 > first.best_f1 {
        (second.best_concept, second.best_f1)
    } else {
        (first.best_concept, first.best_f1)
    };
    let mut trace = first.trace;
    trace.extend(second.trace);
    Ok(SolveResult {
        best_concept,
        best_f1,
        explored: trace.len(),
        runtime: first.runtime + second.runtime,
        termination: second.termination,
        trace,
    })
}
