//! Shared test support: random knowledge bases and expressions, plus
//! brute-force oracles kept deliberately independent of the library's
//! retrieval and scoring paths.

// Each integration test binary compiles this module and uses a subset.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;

use nero::bitset::IndividualSet;
use nero::concepts::Concept;
use nero::kb::{Assertion, KbBuilder, KnowledgeBase};
use nero::refinement::TargetSpace;
use nero::retrieval::{LearningProblem, RetrievalEngine};

pub fn family_kb_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/family.kb")
}

/// A small random knowledge base: up to 30 individuals, 6 concepts, and 3
/// roles, with random type assertions, role edges, and subsumption axioms
/// (cycles allowed). All names are pre-registered so random expressions
/// over the signature always resolve.
pub fn random_kb(rng: &mut impl Rng) -> KnowledgeBase {
    let n_individuals = rng.gen_range(1..=30);
    let n_concepts = rng.gen_range(1..=6);
    let n_roles = rng.gen_range(0..=3);
    let individual = |i: usize| format!("x{i}");
    let concept = |i: usize| format!("C{i}");
    let role = |i: usize| format!("r{i}");

    let mut builder = KbBuilder::new();
    for i in 0..n_individuals {
        builder.individual(&individual(i)).unwrap();
    }
    for i in 0..n_concepts {
        builder.concept(&concept(i)).unwrap();
    }
    for i in 0..n_roles {
        builder.role(&role(i)).unwrap();
    }
    for _ in 0..rng.gen_range(0..=2 * n_individuals) {
        builder
            .assert_type(
                &individual(rng.gen_range(0..n_individuals)),
                &concept(rng.gen_range(0..n_concepts)),
            )
            .unwrap();
    }
    if n_roles > 0 {
        for _ in 0..rng.gen_range(0..=2 * n_individuals) {
            builder
                .assert_rel(
                    &individual(rng.gen_range(0..n_individuals)),
                    &role(rng.gen_range(0..n_roles)),
                    &individual(rng.gen_range(0..n_individuals)),
                )
                .unwrap();
        }
    }
    for _ in 0..rng.gen_range(0..=2 * n_concepts) {
        builder
            .sub(
                &concept(rng.gen_range(0..n_concepts)),
                &concept(rng.gen_range(0..n_concepts)),
            )
            .unwrap();
    }
    builder.finish()
}

/// A random expression over the knowledge base signature with bounded
/// constructor depth.
pub fn random_concept(kb: &KnowledgeBase, rng: &mut impl Rng, depth: usize) -> Concept {
    let concepts: Vec<&str> = kb.concepts().iter().collect();
    let roles: Vec<&str> = kb.roles().iter().collect();
    let leaf = |rng: &mut dyn rand::RngCore| -> Concept {
        match rng.gen_range(0..8) {
            0 => Concept::Top,
            1 => Concept::Bottom,
            _ if !concepts.is_empty() => Concept::atomic(*concepts.choose(rng).unwrap()),
            _ => Concept::Top,
        }
    };
    if depth == 0 || rng.gen_bool(0.25) {
        return leaf(rng);
    }
    match rng.gen_range(0..5) {
        0 => Concept::not(random_concept(kb, rng, depth - 1)),
        1 => Concept::and(
            random_concept(kb, rng, depth - 1),
            random_concept(kb, rng, depth - 1),
        ),
        2 => Concept::or(
            random_concept(kb, rng, depth - 1),
            random_concept(kb, rng, depth - 1),
        ),
        _ if !roles.is_empty() => {
            let role = *roles.choose(rng).unwrap();
            let filler = random_concept(kb, rng, depth - 1);
            if rng.gen_bool(0.5) {
                Concept::exists(role, filler)
            } else {
                Concept::forall(role, filler)
            }
        }
        _ => leaf(rng),
    }
}

/// Brute-force model checker working directly off the raw statement lists.
///
/// Subsumption is re-derived by breadth-first search over the axioms on
/// every membership query; no extensions, closures, or bit sets are shared
/// with the engine under test.
pub struct ModelCheckOracle {
    types: Vec<(usize, usize)>,
    rels: Vec<(usize, usize, usize)>,
    subs: Vec<(usize, usize)>,
    n_concepts: usize,
    n_individuals: usize,
}

impl ModelCheckOracle {
    pub fn new(kb: &KnowledgeBase) -> Self {
        let mut types = Vec::new();
        let mut rels = Vec::new();
        for assertion in kb.abox() {
            match assertion {
                Assertion::Type { individual, concept } => {
                    types.push((individual.index(), concept.index()));
                }
                Assertion::Rel { subject, role, object } => {
                    rels.push((subject.index(), role.index(), object.index()));
                }
            }
        }
        let subs = kb.tbox().map(|a| (a.sub.index(), a.sup.index())).collect();
        ModelCheckOracle {
            types,
            rels,
            subs,
            n_concepts: kb.concepts().len(),
            n_individuals: kb.individuals().len(),
        }
    }

    fn subsumed(&self, sub: usize, sup: usize) -> bool {
        if sub == sup {
            return true;
        }
        let mut reached = vec![false; self.n_concepts];
        let mut queue = vec![sub];
        reached[sub] = true;
        while let Some(c) = queue.pop() {
            for &(a, b) in &self.subs {
                if a == c && !reached[b] {
                    if b == sup {
                        return true;
                    }
                    reached[b] = true;
                    queue.push(b);
                }
            }
        }
        false
    }

    /// Does individual `x` belong to the expression?
    pub fn holds(&self, kb: &KnowledgeBase, concept: &Concept, x: usize) -> bool {
        match concept {
            Concept::Top => true,
            Concept::Bottom => false,
            Concept::Atomic(name) => {
                let target = kb.concepts().get(name).expect("generated name").index();
                self.types
                    .iter()
                    .any(|&(ind, asserted)| ind == x && self.subsumed(asserted, target))
            }
            Concept::Not(inner) => !self.holds(kb, inner, x),
            Concept::And(l, r) => self.holds(kb, l, x) && self.holds(kb, r, x),
            Concept::Or(l, r) => self.holds(kb, l, x) || self.holds(kb, r, x),
            Concept::Exists(role, filler) => {
                let role = kb.roles().get(role).expect("generated role").index();
                self.rels
                    .iter()
                    .any(|&(s, r, o)| s == x && r == role && self.holds(kb, filler, o))
            }
            Concept::Forall(role, filler) => {
                let role = kb.roles().get(role).expect("generated role").index();
                self.rels
                    .iter()
                    .filter(|&&(s, r, _)| s == x && r == role)
                    .all(|&(_, _, o)| self.holds(kb, filler, o))
            }
        }
    }

    /// Full retrieval by checking each individual separately.
    pub fn retrieve(&self, kb: &KnowledgeBase, concept: &Concept) -> IndividualSet {
        IndividualSet::from_indices(
            self.n_individuals,
            (0..self.n_individuals).filter(|&x| self.holds(kb, concept, x)),
        )
    }
}

/// F1 recomputed from a per-individual confusion-matrix tally.
pub fn confusion_matrix_f1(retrieval: &IndividualSet, lp: &LearningProblem) -> f64 {
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut missed = 0u64;
    for x in 0..retrieval.universe() {
        let retrieved = retrieval.contains(x);
        if lp.positives().contains(x) {
            if retrieved {
                tp += 1;
            } else {
                missed += 1;
            }
        } else if lp.negatives().contains(x) && retrieved {
            fp += 1;
        }
    }
    let denominator = tp as f64 + 0.5 * (fp + missed) as f64;
    if denominator == 0.0 {
        0.0
    } else {
        tp as f64 / denominator
    }
}

/// Random example sets over the universe: a nonempty positive set and a
/// disjoint (possibly empty) negative set.
pub fn random_examples(universe: usize, rng: &mut impl Rng) -> LearningProblem {
    let mut order: Vec<usize> = (0..universe).collect();
    order.shuffle(rng);
    let n_pos = rng.gen_range(1..=universe.min(5));
    let n_neg = rng.gen_range(0..=(universe - n_pos).min(5));
    let positives = IndividualSet::from_indices(universe, order[..n_pos].iter().copied());
    let negatives =
        IndividualSet::from_indices(universe, order[n_pos..n_pos + n_neg].iter().copied());
    LearningProblem::new(positives, negatives).unwrap()
}

/// Held-out problems drawn from target expressions: positives sampled
/// inside the target's retrieval, negatives outside it.
pub fn heldout_problems(
    engine: &RetrievalEngine,
    targets: &TargetSpace,
    count: usize,
    per_side: usize,
    rng: &mut impl Rng,
) -> Vec<LearningProblem> {
    let universe = engine.universe();
    let mut qualifying: Vec<usize> = (0..targets.len())
        .filter(|&i| {
            let covered = targets.retrievals()[i].len();
            covered >= per_side && universe - covered >= per_side
        })
        .collect();
    assert!(!qualifying.is_empty(), "no target can generate problems");
    qualifying.shuffle(rng);
    (0..count)
        .map(|i| {
            let target = qualifying[i % qualifying.len()];
            let inside = targets.retrievals()[target].to_vec();
            let outside = targets.retrievals()[target].complement().to_vec();
            let mut positives = IndividualSet::empty(universe);
            for pick in rand::seq::index::sample(rng, inside.len(), per_side) {
                positives.insert(inside[pick]);
            }
            let mut negatives = IndividualSet::empty(universe);
            for pick in rand::seq::index::sample(rng, outside.len(), per_side) {
                negatives.insert(outside[pick]);
            }
            LearningProblem::new(positives, negatives).unwrap()
        })
        .collect()
}
