//! Concept learning over description-logic knowledge bases.
//!
//! Given a TBox/ABox knowledge base and positive/negative example
//! individuals, this crate learns ALC class expressions that cover the
//! positives and exclude the negatives. Instead of searching the concept
//! space from scratch, it pre-selects a space of target expressions,
//! trains a permutation-invariant neural scorer to predict their F1 scores
//! from the example sets alone, and then only retrieves the instances of
//! the top-ranked targets. A best-first refinement search is available as
//! a fallback and can be seeded with the top-ranked expressions.
//!
//! The pieces, bottom to top:
//!
//! * [`kb`] — knowledge-base model and file ingestion (native format and an
//!   N-Triples subset);
//! * [`concepts`] — ALC expression syntax, parser, printer, and length;
//! * [`retrieval`] — closed-world instance retrieval over bit sets, F1, and
//!   goal checks;
//! * [`refinement`] — the top-down refinement operator and target-space
//!   construction;
//! * [`model`] — the set-embedding scorer, its training loop, and
//!   persistence;
//! * [`search`] — the ranked solver, the best-first solver, and their
//!   combination;
//! * [`harness`] — learning-problem generation, benchmark running, and
//!   CSV/JSON reports.
//!
//! ```
//! use nero::kb::KnowledgeBase;
//! use nero::retrieval::{LearningProblem, RetrievalEngine};
//! use nero::concepts::parse_concept;
//!
//! let kb = KnowledgeBase::parse_native(
//!     "sub Brother Male\n\
//!      type anna Female\n\
//!      type ben Brother\n\
//!      rel ben hasSibling anna\n",
//! )?;
//! let engine = RetrievalEngine::build(kb);
//! let concept = parse_concept("exists hasSibling.Female")?;
//! let lp = LearningProblem::from_names(engine.kb(), ["ben"], ["anna"])?;
//! assert!(engine.is_goal(&concept, &lp)?);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod bitset;
pub mod concepts;
pub mod harness;
pub mod kb;
pub mod model;
pub mod refinement;
pub mod retrieval;
pub mod search;

// The guide's code blocks compile and run as doctests, so the book in
// book/ cannot drift from the API.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/knowledge-bases.md")]
    pub mod knowledge_bases {}
    #[doc = include_str!("../../../book/src/class-expressions.md")]
    pub mod class_expressions {}
    #[doc = include_str!("../../../book/src/instance-retrieval.md")]
    pub mod instance_retrieval {}
    #[doc = include_str!("../../../book/src/refinement.md")]
    pub mod refinement_guide {}
    #[doc = include_str!("../../../book/src/scorer.md")]
    pub mod scorer {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    pub mod solvers {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}

pub use bitset::IndividualSet;
pub use concepts::{parse_concept, render_concept, Concept, Style};
pub use harness::{
    generate_random_problems, run_benchmark, BenchmarkReport, BenchmarkSpec, ProblemSource,
    SolverKind,
};
pub use kb::{load_kb, validate, KbFormat, KnowledgeBase};
pub use model::{sample_training_point, train, NeroModel, TrainingConfig};
pub use refinement::{build_targets, refine, RefinementConfig, TargetSpace};
pub use retrieval::{LearningProblem, RetrievalEngine};
pub use search::{celoe_solve, nero_dagger_solve, nero_solve, SearchConfig, SolveResult};
