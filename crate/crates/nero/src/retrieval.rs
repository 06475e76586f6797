//! Closed-world instance retrieval, the F1 quality measure, and goal checks.
//!
//! The engine materializes, once per knowledge base, the extension of every
//! named concept closed under the TBox subsumption preorder, together with
//! per-role successor indexes. Complex expressions are then evaluated
//! bottom-up over bit sets: negation is complement against the full
//! individual domain, conjunction is intersection, disjunction is union, and
//! the role restrictions quantify over the successor lists. A universal
//! restriction holds vacuously for individuals without successors.
//!
//! Evaluation results for composite expressions are memoized in a bounded
//! LRU cache keyed by the canonical ASCII rendering; the search loops
//! re-evaluate overlapping subexpressions heavily.

use std::num::NonZeroUsize;
use std::sync::Mutex;

use lru::LruCache;
use thiserror::Error;

use crate::bitset::IndividualSet;
use crate::concepts::Concept;
use crate::kb::{Assertion, ConceptId, KnowledgeBase, RoleId};

/// Default capacity of the per-engine retrieval memo.
pub const DEFAULT_CACHE_CAPACITY: usize = 10_000;

/// Immutable retrieval index over one knowledge base.
///
/// Safe to share across threads; the memo cache is internally synchronized.
pub struct RetrievalEngine {
    kb: KnowledgeBase,
    domain: IndividualSet,
    atomic_ext: Vec<IndividualSet>,
    role_succ: Vec<Vec<Vec<u32>>>,
    role_has_edge: Vec<IndividualSet>,
    direct_subsumees: Vec<Vec<ConceptId>>,
    direct_subsumers: Vec<Vec<ConceptId>>,
    cache: Option<Mutex<LruCache<String, IndividualSet>>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RetrievalError {
    #[error("unknown concept name `{0}`")]
    UnknownConcept(String),
    #[error("unknown role name `{0}`")]
    UnknownRole(String),
}

impl RetrievalEngine {
    /// Builds the engine with the default memo capacity.
    pub fn build(kb: KnowledgeBase) -> Self {
        Self::build_with_cache(kb, DEFAULT_CACHE_CAPACITY)
    }

    /// Builds the engine with an explicit memo capacity; zero disables the
    /// memo entirely.
    pub fn build_with_cache(kb: KnowledgeBase, cache_capacity: usize) -> Self {
        let n_individuals = kb.individuals().len();
        let n_concepts = kb.concepts().len();
        let n_roles = kb.roles().len();

        // Direct subsumption edges, then per-concept reachability so that
        // Type(x, B) contributes x to every A with B ⊑* A. Cycles simply
        // make all members reachable from each other, which gives them
        // identical extensions.
        let mut direct_subsumees = vec![Vec::new(); n_concepts];
        let mut direct_subsumers = vec![Vec::new(); n_concepts];
        for axiom in kb.tbox() {
            if !direct_subsumers[axiom.sub.index()].contains(&axiom.sup) {
                direct_subsumers[axiom.sub.index()].push(axiom.sup);
            }
            if !direct_subsumees[axiom.sup.index()].contains(&axiom.sub) {
                direct_subsumees[axiom.sup.index()].push(axiom.sub);
            }
        }
        let mut supers = Vec::with_capacity(n_concepts);
        for start in 0..n_concepts {
            let mut reached = vec![false; n_concepts];
            let mut stack = vec![start];
            reached[start] = true;
            while let Some(c) = stack.pop() {
                for sup in &direct_subsumers[c] {
                    if !reached[sup.index()] {
                        reached[sup.index()] = true;
                        stack.push(sup.index());
                    }
                }
            }
            supers.push(reached);
        }

        let mut atomic_ext = vec![IndividualSet::empty(n_individuals); n_concepts];
        let mut role_succ = vec![vec![Vec::new(); n_individuals]; n_roles];
        for assertion in kb.abox() {
            match assertion {
                Assertion::Type { individual, concept } => {
                    for (sup, reached) in supers[concept.index()].iter().enumerate() {
                        if *reached {
                            atomic_ext[sup].insert(individual.index());
                        }
                    }
                }
                Assertion::Rel { subject, role, object } => {
                    role_succ[role.index()][subject.index()].push(object.raw());
                }
            }
        }
        let mut role_has_edge = Vec::with_capacity(n_roles);
        for successors in &mut role_succ {
            let mut has_edge = IndividualSet::empty(n_individuals);
            for (x, list) in successors.iter_mut().enumerate() {
                list.sort_unstable();
                list.dedup();
                if !list.is_empty() {
                    has_edge.insert(x);
                }
            }
            role_has_edge.push(has_edge);
        }

        let cache = NonZeroUsize::new(cache_capacity).map(|cap| Mutex::new(LruCache::new(cap)));
        RetrievalEngine {
            domain: IndividualSet::full(n_individuals),
            kb,
            atomic_ext,
            role_succ,
            role_has_edge,
            direct_subsumees,
            direct_subsumers,
            cache,
        }
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    /// The full individual domain Δ.
    pub fn domain(&self) -> &IndividualSet {
        &self.domain
    }

    pub fn universe(&self) -> usize {
        self.domain.universe()
    }

    /// Subsumption-closed extension of a named concept.
    pub fn atomic_extension(&self, name: &str) -> Option<&IndividualSet> {
        self.kb.concepts().get(name).map(|id| &self.atomic_ext[id.index()])
    }

    /// Concepts `X` with an asserted axiom `X ⊑ A`.
    pub fn direct_subsumees(&self, id: ConceptId) -> &[ConceptId] {
        &self.direct_subsumees[id.index()]
    }

    /// Concepts `X` with an asserted axiom `A ⊑ X`.
    pub fn direct_subsumers(&self, id: ConceptId) -> &[ConceptId] {
        &self.direct_subsumers[id.index()]
    }

    /// The set of individuals belonging to the expression under the closed
    /// world assumption.
    pub fn retrieve(&self, concept: &Concept) -> Result<IndividualSet, RetrievalError> {
        match concept {
            Concept::Top => Ok(self.domain.clone()),
            Concept::Bottom => Ok(IndividualSet::empty(self.universe())),
            Concept::Atomic(name) => {
                let id = self
                    .kb
                    .concepts()
                    .get(name)
                    .ok_or_else(|| RetrievalError::UnknownConcept(name.clone()))?;
                Ok(self.atomic_ext[id.index()].clone())
            }
            composite => {
                let Some(cache) = &self.cache else {
                    return self.evaluate(composite);
                };
                let key = composite.to_ascii();
                if let Some(hit) = cache.lock().unwrap().get(&key) {
                    return Ok(hit.clone());
                }
                let value = self.evaluate(composite)?;
                cache.lock().unwrap().put(key, value.clone());
                Ok(value)
            }
        }
    }

    fn evaluate(&self, concept: &Concept) -> Result<IndividualSet, RetrievalError> {
        match concept {
            Concept::Not(inner) => Ok(self.retrieve(inner)?.complement()),
            Concept::And(l, r) => {
                let mut out = self.retrieve(l)?;
                out.intersect_with(&self.retrieve(r)?);
                Ok(out)
            }
            Concept::Or(l, r) => {
                let mut out = self.retrieve(l)?;
                out.union_with(&self.retrieve(r)?);
                Ok(out)
            }
            Concept::Exists(role, filler) => {
                let (successors, has_edge) = self.role(role)?;
                let filler_set = self.retrieve(filler)?;
                let mut out = IndividualSet::empty(self.universe());
                for x in has_edge.iter() {
                    if successors[x].iter().any(|&y| filler_set.contains(y as usize)) {
                        out.insert(x);
                    }
                }
                Ok(out)
            }
            Concept::Forall(role, filler) => {
                let (successors, has_edge) = self.role(role)?;
                let filler_set = self.retrieve(filler)?;
                // Individuals without successors satisfy the restriction
                // vacuously, so start from the full domain.
                let mut out = self.domain.clone();
                for x in has_edge.iter() {
                    if !successors[x].iter().all(|&y| filler_set.contains(y as usize)) {
                        out.remove(x);
                    }
                }
                Ok(out)
            }
            trivial => self.retrieve(trivial),
        }
    }

    fn role(&self, name: &str) -> Result<(&Vec<Vec<u32>>, &IndividualSet), RetrievalError> {
        let id: RoleId = self
            .kb
            .roles()
            .get(name)
            .ok_or_else(|| RetrievalError::UnknownRole(name.to_string()))?;
        Ok((&self.role_succ[id.index()], &self.role_has_edge[id.index()]))
    }

    /// F1 score of the expression against a learning problem.
    pub fn f1(&self, concept: &Concept, lp: &LearningProblem) -> Result<f64, RetrievalError> {
        Ok(f1_of_retrieval(&self.retrieve(concept)?, lp))
    }

    /// True when the expression covers every positive and no negative.
    pub fn is_goal(&self, concept: &Concept, lp: &LearningProblem) -> Result<bool, RetrievalError> {
        Ok(is_goal_retrieval(&self.retrieve(concept)?, lp))
    }
}

/// F1 from an already-computed retrieval set and raw example sets.
///
/// With true positives `tp = |E⁺ ∩ R|`, false positives `fp = |E⁻ ∩ R|`,
/// and false negatives `fn = |E⁺ \ R|`, the score is
/// `tp / (tp + 0.5·(fp + fn))`, or 0 when the denominator vanishes.
pub fn f1_of_sets(retrieval: &IndividualSet, positives: &IndividualSet, negatives: &IndividualSet) -> f64 {
    let tp = positives.intersection_len(retrieval);
    let fp = negatives.intersection_len(retrieval);
    let false_neg = positives.len() - tp;
    let denominator = tp as f64 + 0.5 * (fp + false_neg) as f64;
    if denominator == 0.0 {
        0.0
    } else {
        tp as f64 / denominator
    }
}

pub fn f1_of_retrieval(retrieval: &IndividualSet, lp: &LearningProblem) -> f64 {
    f1_of_sets(retrieval, lp.positives(), lp.negatives())
}

/// Exact goal test on integer counts; equivalent to `f1 == 1.0` but free of
/// floating-point comparison.
pub fn is_goal_retrieval(retrieval: &IndividualSet, lp: &LearningProblem) -> bool {
    lp.positives().is_subset(retrieval) && lp.negatives().is_disjoint(retrieval)
}

/// Positive and negative example sets of one learning problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearningProblem {
    positives: IndividualSet,
    negatives: IndividualSet,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LearningProblemError {
    #[error("positive example set is empty")]
    EmptyPositives,
    #[error("examples appear as both positive and negative")]
    Overlap,
    #[error("positive and negative sets cover different universes")]
    UniverseMismatch,
    #[error("unknown individual `{0}`")]
    UnknownIndividual(String),
}

impl LearningProblem {
    pub fn new(positives: IndividualSet, negatives: IndividualSet) -> Result<Self, LearningProblemError> {
        if positives.universe() != negatives.universe() {
            return Err(LearningProblemError::UniverseMismatch);
        }
        if positives.is_empty() {
            return Err(LearningProblemError::EmptyPositives);
        }
        if !positives.is_disjoint(&negatives) {
            return Err(LearningProblemError::Overlap);
        }
        Ok(LearningProblem { positives, negatives })
    }

    /// Resolves example names against the knowledge base registry.
    pub fn from_names<'a>(
        kb: &KnowledgeBase,
        positives: impl IntoIterator<Item = &'a str>,
        negatives: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self, LearningProblemError> {
        let universe = kb.individuals().len();
        let resolve = |names: &mut dyn Iterator<Item = &'a str>| -> Result<IndividualSet, LearningProblemError> {
            let mut set = IndividualSet::empty(universe);
            for name in names {
                let id = kb
                    .individuals()
                    .get(name)
                    .ok_or_else(|| LearningProblemError::UnknownIndividual(name.to_string()))?;
                set.insert(id.index());
            }
            Ok(set)
        };
        let positives = resolve(&mut positives.into_iter())?;
        let negatives = resolve(&mut negatives.into_iter())?;
        LearningProblem::new(positives, negatives)
    }

    pub fn positives(&self) -> &IndividualSet {
        &self.positives
    }

    pub fn negatives(&self) -> &IndividualSet {
        &self.negatives
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::parse_concept;

    // Small fixture mirroring the sibling example used throughout the suite.
    pub(crate) const T1: &str = "sub Brother Male\nsub Male Person\nsub Female Person\n\
                                 type a Brother\ntype b Female\ntype c Male\nrel a hasSibling b\n";

    fn engine() -> RetrievalEngine {
        RetrievalEngine::build(KnowledgeBase::parse_native(T1).unwrap())
    }

    fn names(engine: &RetrievalEngine, set: &IndividualSet) -> Vec<String> {
        set.iter()
            .map(|i| engine.kb().individual_name(crate::kb::IndividualId::from_raw(i as u32)).to_string())
            .collect()
    }

    fn retrieve_names(engine: &RetrievalEngine, text: &str) -> Vec<String> {
        let set = engine.retrieve(&parse_concept(text).unwrap()).unwrap();
        names(engine, &set)
    }

    #[test]
    fn closes_extensions_under_subsumption() {
        let engine = engine();
        assert_eq!(retrieve_names(&engine, "Male"), vec!["a", "c"]);
        assert_eq!(retrieve_names(&engine, "Person"), vec!["a", "b", "c"]);
        assert_eq!(retrieve_names(&engine, "Brother"), vec!["a"]);
    }

    #[test]
    fn no_tbox_means_asserted_types_only() {
        let kb = KnowledgeBase::parse_native("type a A\ntype b B\n").unwrap();
        let engine = RetrievalEngine::build(kb);
        assert_eq!(retrieve_names(&engine, "A"), vec!["a"]);
        assert_eq!(retrieve_names(&engine, "B"), vec!["b"]);
    }

    #[test]
    fn subsumption_cycles_collapse_to_equal_extensions() {
        let kb = KnowledgeBase::parse_native("sub A B\nsub B C\nsub C A\ntype x A\ntype y C\n").unwrap();
        let engine = RetrievalEngine::build(kb);
        let a = engine.atomic_extension("A").unwrap();
        assert_eq!(a, engine.atomic_extension("B").unwrap());
        assert_eq!(a, engine.atomic_extension("C").unwrap());
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn equiv_means_equal_extensions() {
        let kb = KnowledgeBase::parse_native("equiv A B\ntype x A\ntype y B\n").unwrap();
        let engine = RetrievalEngine::build(kb);
        assert_eq!(engine.atomic_extension("A"), engine.atomic_extension("B"));
    }

    #[test]
    fn evaluates_restrictions() {
        let engine = engine();
        assert_eq!(retrieve_names(&engine, "exists hasSibling.Female"), vec!["a"]);
        // b and c have no siblings, so they satisfy the universal vacuously.
        assert_eq!(retrieve_names(&engine, "forall hasSibling.Female"), vec!["a", "b", "c"]);
        assert_eq!(retrieve_names(&engine, "exists hasSibling.Male"), Vec::<String>::new());
    }

    #[test]
    fn negated_top_is_empty() {
        let engine = engine();
        assert!(engine.retrieve(&parse_concept("not Top").unwrap()).unwrap().is_empty());
    }

    #[test]
    fn boolean_laws_hold_on_fixture() {
        let engine = engine();
        for (lhs, rhs) in [
            ("not (Male and Female)", "not Male or not Female"),
            ("not not Brother", "Brother"),
            ("forall hasSibling.Female", "not exists hasSibling.not Female"),
        ] {
            let l = engine.retrieve(&parse_concept(lhs).unwrap()).unwrap();
            let r = engine.retrieve(&parse_concept(rhs).unwrap()).unwrap();
            assert_eq!(l, r, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn reports_unknown_names() {
        let engine = engine();
        assert_eq!(
            engine.retrieve(&parse_concept("Ghost").unwrap()),
            Err(RetrievalError::UnknownConcept("Ghost".into()))
        );
        assert_eq!(
            engine.retrieve(&parse_concept("exists ghost.Male").unwrap()),
            Err(RetrievalError::UnknownRole("ghost".into()))
        );
    }

    #[test]
    fn memo_returns_consistent_results() {
        let kb = KnowledgeBase::parse_native(T1).unwrap();
        let cached = RetrievalEngine::build_with_cache(kb.clone(), 2);
        let uncached = RetrievalEngine::build_with_cache(kb, 0);
        let exprs = [
            "Male and Person",
            "not Male or Female",
            "exists hasSibling.(Female or Male)",
            "Male and Person",
        ];
        for text in exprs {
            let c = parse_concept(text).unwrap();
            assert_eq!(cached.retrieve(&c).unwrap(), uncached.retrieve(&c).unwrap(), "{text}");
            assert_eq!(cached.retrieve(&c).unwrap(), uncached.retrieve(&c).unwrap(), "{text} (repeat)");
        }
    }

    fn lp(engine: &RetrievalEngine, pos: &[&str], neg: &[&str]) -> LearningProblem {
        LearningProblem::from_names(engine.kb(), pos.iter().copied(), neg.iter().copied()).unwrap()
    }

    #[test]
    fn f1_matches_hand_counts() {
        let engine = engine();
        // R(Male) = {a, c}: one true positive, one false positive, one miss.
        let problem = lp(&engine, &["a", "b"], &["c"]);
        let male = parse_concept("Male").unwrap();
        assert_eq!(engine.f1(&male, &problem).unwrap(), 0.5);

        // Perfect coverage.
        let problem = lp(&engine, &["a", "c"], &["b"]);
        assert_eq!(engine.f1(&male, &problem).unwrap(), 1.0);

        // No positive covered.
        let problem = lp(&engine, &["b"], &["a"]);
        assert_eq!(engine.f1(&male, &problem).unwrap(), 0.0);
    }

    #[test]
    fn f1_ignores_example_ordering() {
        let engine = engine();
        let a = lp(&engine, &["a", "b"], &["c"]);
        let b = lp(&engine, &["b", "a"], &["c"]);
        assert_eq!(a, b);
    }

    #[test]
    fn goal_checks_use_exact_counts() {
        let engine = engine();
        let male = parse_concept("Male").unwrap();
        assert!(engine.is_goal(&male, &lp(&engine, &["a"], &["b"])).unwrap());
        assert!(!engine.is_goal(&male, &lp(&engine, &["a", "b"], &[])).unwrap());
        // Everything is a goal against Top when there are no negatives.
        assert!(engine.is_goal(&Concept::Top, &lp(&engine, &["a", "b", "c"], &[])).unwrap());
    }

    #[test]
    fn learning_problem_invariants() {
        let engine = engine();
        let kb = engine.kb();
        assert_eq!(
            LearningProblem::from_names(kb, [], ["a"]).unwrap_err(),
            LearningProblemError::EmptyPositives
        );
        assert_eq!(
            LearningProblem::from_names(kb, ["a"], ["a"]).unwrap_err(),
            LearningProblemError::Overlap
        );
        assert_eq!(
            LearningProblem::from_names(kb, ["zz"], []).unwrap_err(),
            LearningProblemError::UnknownIndividual("zz".into())
        );
    }
}
