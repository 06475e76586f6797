//! Top-down refinement of class expressions and construction of the target
//! space the scorer is trained against.
//!
//! The operator maps every expression to a set of syntactic specializations
//! whose retrievals are subsets of the parent's retrieval under the closed
//! world assumption:
//!
//! * `⊤` refines to every atomic concept, every negated atomic, and
//!   `∃r.⊤` / `∀r.⊤` for every role;
//! * an atomic `A` refines to its directly asserted subsumees and to
//!   `A ⊓ D` for every `D` in the refinements of `⊤`;
//! * `¬A` refines to `¬A'` for every directly asserted subsumer `A'`;
//! * conjunctions and disjunctions refine one operand in place, and a
//!   disjunction additionally refines to either operand alone;
//! * restrictions refine their filler in place.
//!
//! Outputs are deduplicated by canonical form, emitted in a fixed
//! generation order, and truncated to a configurable bound.

use thiserror::Error;

use crate::bitset::IndividualSet;
use crate::concepts::Concept;
use crate::retrieval::{RetrievalEngine, RetrievalError};
use std::collections::HashSet;

/// Knobs for the refinement operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinementConfig {
    /// Emit negated atomics from `⊤`.
    pub use_negations: bool,
    /// Emit `∃r.⊤` and `∀r.⊤` from `⊤`.
    pub use_restrictions: bool,
    /// Upper bound on the number of refinements per expansion.
    pub max_children: usize,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            use_negations: true,
            use_restrictions: true,
            max_children: usize::MAX,
        }
    }
}

/// Downward refinements of `concept`, deduplicated and in deterministic
/// order. Expressions mentioning names outside the knowledge base simply
/// have no TBox neighbours.
pub fn refine(engine: &RetrievalEngine, concept: &Concept, cfg: &RefinementConfig) -> Vec<Concept> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut emit = |c: Concept, out: &mut Vec<Concept>| {
        if out.len() < cfg.max_children && seen.insert(c.clone()) {
            out.push(c);
        }
    };
    let kb = engine.kb();

    match concept {
        Concept::Top => {
            for name in kb.concepts().iter() {
                emit(Concept::atomic(name), &mut out);
            }
            if cfg.use_negations {
                for name in kb.concepts().iter() {
                    emit(Concept::not(Concept::atomic(name)), &mut out);
                }
            }
            if cfg.use_restrictions {
                for role in kb.roles().iter() {
                    emit(Concept::exists(role, Concept::Top), &mut out);
                    emit(Concept::forall(role, Concept::Top), &mut out);
                }
            }
        }
        Concept::Bottom => {}
        Concept::Atomic(name) => {
            if let Some(id) = kb.concepts().get(name) {
                for sub in engine.direct_subsumees(id) {
                    emit(Concept::atomic(kb.concept_name(*sub)), &mut out);
                }
            }
            for d in refine(engine, &Concept::Top, cfg) {
                emit(Concept::and(concept.clone(), d), &mut out);
            }
        }
        Concept::Not(inner) => {
            if let Concept::Atomic(name) = inner.as_ref() {
                if let Some(id) = kb.concepts().get(name) {
                    for sup in engine.direct_subsumers(id) {
                        emit(Concept::not(Concept::atomic(kb.concept_name(*sup))), &mut out);
                    }
                }
            }
        }
        Concept::And(l, r) => {
            for l2 in refine(engine, l, cfg) {
                emit(Concept::and(l2, (**r).clone()), &mut out);
            }
            for r2 in refine(engine, r, cfg) {
                emit(Concept::and((**l).clone(), r2), &mut out);
            }
        }
        Concept::Or(l, r) => {
            for l2 in refine(engine, l, cfg) {
                emit(Concept::or(l2, (**r).clone()), &mut out);
            }
            for r2 in refine(engine, r, cfg) {
                emit(Concept::or((**l).clone(), r2), &mut out);
            }
            emit((**l).clone(), &mut out);
            emit((**r).clone(), &mut out);
        }
        Concept::Exists(role, filler) => {
            for f2 in refine(engine, filler, cfg) {
                emit(Concept::exists(role.clone(), f2), &mut out);
            }
        }
        Concept::Forall(role, filler) => {
            for f2 in refine(engine, filler, cfg) {
                emit(Concept::forall(role.clone(), f2), &mut out);
            }
        }
    }
    out
}

/// Where a target expression came from.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TargetOrigin {
    /// Member of the refinements of `⊤`.
    Seed,
    /// Conjunction of two earlier targets.
    Conjunction,
    /// Disjunction of two earlier targets.
    Disjunction,
    /// Re-read from a manifest file.
    Manifest,
}

/// An ordered list of distinct target expressions with cached retrievals.
///
/// The order is the deterministic construction order and fixes the output
/// coordinates of any model trained against the space. No two targets share
/// a retrieval set and every retrieval is nonempty.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpace {
    targets: Vec<Concept>,
    retrievals: Vec<IndividualSet>,
    origins: Vec<TargetOrigin>,
    saturated: bool,
}

#[derive(Debug, Error)]
pub enum TargetSpaceError {
    #[error("requested target count must be at least 1")]
    ZeroTargets,
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
}

impl TargetSpace {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.targets
    }

    pub fn retrievals(&self) -> &[IndividualSet] {
        &self.retrievals
    }

    pub fn origins(&self) -> &[TargetOrigin] {
        &self.origins
    }

    /// True when construction stopped early because a full pass added no
    /// new target.
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// One ASCII-rendered expression per line, order-significant.
    pub fn to_manifest(&self) -> String {
        let mut out = String::new();
        for target in &self.targets {
            out.push_str(&target.to_ascii());
            out.push('\n');
        }
        out
    }

    /// Re-reads a manifest, recomputing and revalidating the cached
    /// retrievals against the given engine.
    pub fn from_manifest(engine: &RetrievalEngine, text: &str) -> Result<TargetSpace, TargetSpaceError> {
        let mut targets = Vec::new();
        let mut retrievals: Vec<IndividualSet> = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fail = |message: String| TargetSpaceError::Manifest {
                line: idx + 1,
                message,
            };
            let concept = crate::concepts::parse_concept(line).map_err(|e| fail(e.to_string()))?;
            let retrieval = engine.retrieve(&concept)?;
            if retrieval.is_empty() {
                return Err(fail(format!("target `{line}` has an empty retrieval")));
            }
            if !seen.insert(retrieval.clone()) {
                return Err(fail(format!(
                    "target `{line}` duplicates the retrieval of an earlier target"
                )));
            }
            targets.push(concept);
            retrievals.push(retrieval);
        }
        if targets.is_empty() {
            return Err(TargetSpaceError::ZeroTargets);
        }
        let origins = vec![TargetOrigin::Manifest; targets.len()];
        Ok(TargetSpace {
            targets,
            retrievals,
            origins,
            saturated: false,
        })
    }
}

/// Builds the target space: seeds with refinements of `⊤` of bounded length
/// and nonempty retrieval, then repeatedly sweeps over snapshot pairs with
/// differing retrievals, adding their conjunction and disjunction whenever
/// the combination is nonempty and retrieval-distinct from every target so
/// far. Construction stops at `count` targets, or earlier — flagged as
/// saturated — once a full pass adds nothing.
///
/// `max_seed_length` applies to the seeds only; combinations may exceed it.
pub fn build_targets(
    engine: &RetrievalEngine,
    cfg: &RefinementConfig,
    count: usize,
    max_seed_length: usize,
) -> Result<TargetSpace, TargetSpaceError> {
    if count == 0 {
        return Err(TargetSpaceError::ZeroTargets);
    }
    let mut space = TargetSpace {
        targets: Vec::new(),
        retrievals: Vec::new(),
        origins: Vec::new(),
        saturated: false,
    };
    let mut seen = HashSet::new();

    for seed in refine(engine, &Concept::Top, cfg) {
        if space.len() == count {
            return Ok(space);
        }
        if seed.length() > max_seed_length {
            continue;
        }
        let retrieval = engine.retrieve(&seed)?;
        if retrieval.is_empty() || !seen.insert(retrieval.clone()) {
            continue;
        }
        space.targets.push(seed);
        space.retrievals.push(retrieval);
        space.origins.push(TargetOrigin::Seed);
    }

    while space.len() < count {
        let snapshot = space.len();
        let before = space.len();
        for i in 0..snapshot {
            for j in 0..snapshot {
                if space.retrievals[i] == space.retrievals[j] {
                    continue;
                }
                let candidates = [
                    (
                        Concept::and(space.targets[i].clone(), space.targets[j].clone()),
                        space.retrievals[i].intersection(&space.retrievals[j]),
                        TargetOrigin::Conjunction,
                    ),
                    (
                        Concept::or(space.targets[i].clone(), space.targets[j].clone()),
                        space.retrievals[i].union(&space.retrievals[j]),
                        TargetOrigin::Disjunction,
                    ),
                ];
                for (concept, retrieval, origin) in candidates {
                    if retrieval.is_empty() || !seen.insert(retrieval.clone()) {
                        continue;
                    }
                    space.targets.push(concept);
                    space.retrievals.push(retrieval);
                    space.origins.push(origin);
                    if space.len() == count {
                        return Ok(space);
                    }
                }
            }
        }
        if space.len() == before {
            space.saturated = true;
            log::warn!(
                "target space saturated at {} of {count} requested targets",
                space.len()
            );
            break;
        }
    }
    Ok(space)
}
