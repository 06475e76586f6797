//! In-memory knowledge bases and file ingestion.
//!
//! A knowledge base is a TBox of subsumption axioms between named concepts
//! plus an ABox of concept and role assertions over named individuals.
//! Two input formats are supported:
//!
//! * the native line format: `sub A B`, `equiv A B`, `type x A`,
//!   `rel x r y`, with `#` starting a comment;
//! * an N-Triples subset mapping `rdf:type` to concept assertions,
//!   `rdfs:subClassOf` to subsumptions, `owl:equivalentClass` to
//!   equivalences, and any other non-vocabulary predicate between two
//!   resources to a role assertion.
//!
//! Names are interned in first-occurrence order and receive dense integer
//! indices that stay stable for the lifetime of the knowledge base.
//! `equiv A B` is stored as the axiom pair `sub A B`, `sub B A`.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::marker::PhantomData;
use std::path::Path;

use thiserror::Error;

use crate::concepts;

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
        pub struct $name(u32);

        impl $name {
            pub fn from_raw(raw: u32) -> Self {
                $name(raw)
            }

            pub fn raw(self) -> u32 {
                self.0
            }

            /// Dense index into the owning registry.
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(
    /// Identifier of a named concept.
    ConceptId
);
id_type!(
    /// Identifier of a role.
    RoleId
);
id_type!(
    /// Identifier of an individual.
    IndividualId
);

mod sealed {
    pub trait FromRaw {
        fn from_raw_id(raw: u32) -> Self;
    }
}
use sealed::FromRaw;

impl FromRaw for ConceptId {
    fn from_raw_id(raw: u32) -> Self {
        ConceptId(raw)
    }
}
impl FromRaw for RoleId {
    fn from_raw_id(raw: u32) -> Self {
        RoleId(raw)
    }
}
impl FromRaw for IndividualId {
    fn from_raw_id(raw: u32) -> Self {
        IndividualId(raw)
    }
}

/// An ordered name table; iteration order is first-occurrence order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Registry<I> {
    names: Vec<String>,
    index: HashMap<String, u32>,
    _id: PhantomData<I>,
}

impl<I> Default for Registry<I> {
    fn default() -> Self {
        Registry {
            names: Vec::new(),
            index: HashMap::new(),
            _id: PhantomData,
        }
    }
}

impl<I: Copy + FromRaw> Registry<I> {
    fn intern(&mut self, name: &str) -> I {
        if let Some(&raw) = self.index.get(name) {
            return I::from_raw_id(raw);
        }
        let raw = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), raw);
        I::from_raw_id(raw)
    }

    pub fn get(&self, name: &str) -> Option<I> {
        self.index.get(name).map(|&raw| I::from_raw_id(raw))
    }

    pub fn ids(&self) -> impl Iterator<Item = I> + '_ {
        (0..self.names.len() as u32).map(I::from_raw_id)
    }
}

impl<I> Registry<I> {
    pub fn name(&self, raw: u32) -> &str {
        &self.names[raw as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Names in first-occurrence order.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| s.as_str())
    }
}

/// A TBox axiom `sub ⊑ sup` between named concepts.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SubAxiom {
    pub sub: ConceptId,
    pub sup: ConceptId,
}

/// An ABox assertion.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Assertion {
    /// `A(x)`: the individual is an instance of the named concept.
    Type {
        individual: IndividualId,
        concept: ConceptId,
    },
    /// `r(x, y)`: the subject is related to the object through the role.
    Rel {
        subject: IndividualId,
        role: RoleId,
        object: IndividualId,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Statement {
    Sub(ConceptId, ConceptId),
    Type(IndividualId, ConceptId),
    Rel(IndividualId, RoleId, IndividualId),
}

/// A validated TBox/ABox knowledge base.
///
/// Immutable after construction; share it freely between threads.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct KnowledgeBase {
    concepts: Registry<ConceptId>,
    roles: Registry<RoleId>,
    individuals: Registry<IndividualId>,
    statements: Vec<Statement>,
}

impl KnowledgeBase {
    pub fn concepts(&self) -> &Registry<ConceptId> {
        &self.concepts
    }

    pub fn roles(&self) -> &Registry<RoleId> {
        &self.roles
    }

    pub fn individuals(&self) -> &Registry<IndividualId> {
        &self.individuals
    }

    pub fn concept_name(&self, id: ConceptId) -> &str {
        self.concepts.name(id.raw())
    }

    pub fn role_name(&self, id: RoleId) -> &str {
        self.roles.name(id.raw())
    }

    pub fn individual_name(&self, id: IndividualId) -> &str {
        self.individuals.name(id.raw())
    }

    /// Subsumption axioms in statement order; `equiv` appears as two axioms.
    pub fn tbox(&self) -> impl Iterator<Item = SubAxiom> + '_ {
        self.statements.iter().filter_map(|s| match *s {
            Statement::Sub(sub, sup) => Some(SubAxiom { sub, sup }),
            _ => None,
        })
    }

    /// ABox assertions in statement order.
    pub fn abox(&self) -> impl Iterator<Item = Assertion> + '_ {
        self.statements.iter().filter_map(|s| match *s {
            Statement::Type(individual, concept) => Some(Assertion::Type { individual, concept }),
            Statement::Rel(subject, role, object) => Some(Assertion::Rel { subject, role, object }),
            Statement::Sub(..) => None,
        })
    }

    /// Parses the native line format from a string, discarding warnings.
    pub fn parse_native(text: &str) -> Result<KnowledgeBase, KbError> {
        load_kb(text.as_bytes(), KbFormat::Native).map(|(kb, _)| kb)
    }

    /// Serializes back to the native format. The statement order reproduces
    /// the original first-occurrence interning order, so re-parsing the
    /// output yields an identical knowledge base.
    pub fn render_native(&self) -> String {
        let mut out = String::new();
        for stmt in &self.statements {
            match *stmt {
                Statement::Sub(a, b) => {
                    out.push_str("sub ");
                    out.push_str(self.concept_name(a));
                    out.push(' ');
                    out.push_str(self.concept_name(b));
                }
                Statement::Type(x, a) => {
                    out.push_str("type ");
                    out.push_str(self.individual_name(x));
                    out.push(' ');
                    out.push_str(self.concept_name(a));
                }
                Statement::Rel(x, r, y) => {
                    out.push_str("rel ");
                    out.push_str(self.individual_name(x));
                    out.push(' ');
                    out.push_str(self.role_name(r));
                    out.push(' ');
                    out.push_str(self.individual_name(y));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Incremental construction of a [`KnowledgeBase`].
///
/// The named methods intern as they go and cannot produce dangling
/// references; the `*_ids` methods accept raw identifiers unchecked, which
/// [`validate`] will diagnose.
#[derive(Default)]
pub struct KbBuilder {
    kb: KnowledgeBase,
    seen: HashSet<Statement>,
    kinds: HashMap<String, NameKind>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum NameKind {
    Concept,
    Role,
    Individual,
}

impl fmt::Display for NameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NameKind::Concept => "concept",
            NameKind::Role => "role",
            NameKind::Individual => "individual",
        })
    }
}

impl KbBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn checked_name(&mut self, name: &str, kind: NameKind) -> Result<(), String> {
        if !concepts::is_valid_name(name) {
            return Err(format!("invalid name `{name}`"));
        }
        match self.kinds.entry(name.to_string()) {
            Entry::Vacant(v) => {
                v.insert(kind);
                Ok(())
            }
            Entry::Occupied(o) if *o.get() == kind => Ok(()),
            Entry::Occupied(o) => Err(format!("`{name}` used as a {kind} but declared as a {}", o.get())),
        }
    }

    pub fn concept(&mut self, name: &str) -> Result<ConceptId, String> {
        self.checked_name(name, NameKind::Concept)?;
        Ok(self.kb.concepts.intern(name))
    }

    pub fn role(&mut self, name: &str) -> Result<RoleId, String> {
        self.checked_name(name, NameKind::Role)?;
        Ok(self.kb.roles.intern(name))
    }

    pub fn individual(&mut self, name: &str) -> Result<IndividualId, String> {
        self.checked_name(name, NameKind::Individual)?;
        Ok(self.kb.individuals.intern(name))
    }

    fn push(&mut self, stmt: Statement) {
        if self.seen.insert(stmt) {
            self.kb.statements.push(stmt);
        }
    }

    pub fn sub(&mut self, sub: &str, sup: &str) -> Result<(), String> {
        let a = self.concept(sub)?;
        let b = self.concept(sup)?;
        self.push(Statement::Sub(a, b));
        Ok(())
    }

    pub fn equiv(&mut self, a: &str, b: &str) -> Result<(), String> {
        let a = self.concept(a)?;
        let b = self.concept(b)?;
        self.push(Statement::Sub(a, b));
        self.push(Statement::Sub(b, a));
        Ok(())
    }

    pub fn assert_type(&mut self, individual: &str, concept: &str) -> Result<(), String> {
        let x = self.individual(individual)?;
        let a = self.concept(concept)?;
        self.push(Statement::Type(x, a));
        Ok(())
    }

    pub fn assert_rel(&mut self, subject: &str, role: &str, object: &str) -> Result<(), String> {
        let x = self.individual(subject)?;
        let r = self.role(role)?;
        let y = self.individual(object)?;
        self.push(Statement::Rel(x, r, y));
        Ok(())
    }

    /// Records a subsumption between raw identifiers without bounds checks.
    pub fn sub_ids(&mut self, sub: ConceptId, sup: ConceptId) {
        self.push(Statement::Sub(sub, sup));
    }

    /// Records a type assertion between raw identifiers without bounds checks.
    pub fn type_ids(&mut self, individual: IndividualId, concept: ConceptId) {
        self.push(Statement::Type(individual, concept));
    }

    /// Records a role assertion between raw identifiers without bounds checks.
    pub fn rel_ids(&mut self, subject: IndividualId, role: RoleId, object: IndividualId) {
        self.push(Statement::Rel(subject, role, object));
    }

    pub fn finish(self) -> KnowledgeBase {
        self.kb
    }
}

/// Supported input formats.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum KbFormat {
    Native,
    NTriples,
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("knowledge base declares no individuals")]
    NoIndividuals,
    #[error("failed to read knowledge base: {0}")]
    Io(#[from] std::io::Error),
}

/// Severity of a [`Diagnostic`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Severity {
    Warning,
    Error,
}

/// A validation or ingestion finding.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn warning(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    fn error(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Warning => write!(f, "warning: {}", self.message),
            Severity::Error => write!(f, "error: {}", self.message),
        }
    }
}

/// Loads a knowledge base from a reader, returning it together with any
/// non-fatal warnings. Duplicate statements are dropped; a source with no
/// individuals is rejected.
pub fn load_kb<R: Read>(source: R, format: KbFormat) -> Result<(KnowledgeBase, Vec<Diagnostic>), KbError> {
    let reader = BufReader::new(source);
    let mut builder = KbBuilder::new();
    let mut warnings = Vec::new();
    match format {
        KbFormat::Native => parse_native(reader, &mut builder)?,
        KbFormat::NTriples => parse_ntriples(reader, &mut builder, &mut warnings)?,
    }
    let kb = builder.finish();
    if kb.individuals.is_empty() {
        return Err(KbError::NoIndividuals);
    }
    Ok((kb, warnings))
}

/// Loads from a file path; unless `format` is given, `.nt` selects
/// N-Triples and anything else the native format.
pub fn load_kb_path(path: &Path, format: Option<KbFormat>) -> Result<(KnowledgeBase, Vec<Diagnostic>), KbError> {
    let format = format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some("nt") => KbFormat::NTriples,
        _ => KbFormat::Native,
    });
    let file = std::fs::File::open(path)?;
    load_kb(file, format)
}

fn parse_native<R: BufRead>(reader: R, builder: &mut KbBuilder) -> Result<(), KbError> {
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let text = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let fail = |message: String| KbError::Parse {
            line: line_no,
            message,
        };
        let arity_err = |want: usize| {
            format!("`{}` expects {} names, found {}", tokens[0], want, tokens.len() - 1)
        };
        let result = match tokens[0] {
            "sub" if tokens.len() == 3 => builder.sub(tokens[1], tokens[2]),
            "equiv" if tokens.len() == 3 => builder.equiv(tokens[1], tokens[2]),
            "type" if tokens.len() == 3 => builder.assert_type(tokens[1], tokens[2]),
            "rel" if tokens.len() == 4 => builder.assert_rel(tokens[1], tokens[2], tokens[3]),
            "sub" | "equiv" | "type" => return Err(fail(arity_err(2))),
            "rel" => return Err(fail(arity_err(3))),
            other => return Err(fail(format!("unknown statement `{other}`"))),
        };
        result.map_err(fail)?;
    }
    Ok(())
}

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const RDFS_SUBCLASS: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
const OWL_EQUIVALENT: &str = "http://www.w3.org/2002/07/owl#equivalentClass";
const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
const OWL_OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
const OWL_NAMED_INDIVIDUAL: &str = "http://www.w3.org/2002/07/owl#NamedIndividual";

const VOCAB_PREFIXES: [&str; 6] = [
    "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "http://www.w3.org/2000/01/rdf-schema#",
    "http://www.w3.org/2002/07/owl#",
    "rdf:",
    "rdfs:",
    "owl:",
];

fn is_vocab(iri: &str) -> bool {
    VOCAB_PREFIXES.iter().any(|p| iri.starts_with(p))
}

/// Matches an IRI against a vocabulary term, accepting both the full form
/// and the conventional prefixed shorthand.
fn vocab_is(iri: &str, full: &str) -> bool {
    if iri == full {
        return true;
    }
    let local = &full[full.rfind('#').unwrap() + 1..];
    matches!(iri.split_once(':'), Some((prefix, rest))
        if rest == local && matches!(prefix, "rdf" | "rdfs" | "owl"))
}

#[derive(Debug, PartialEq)]
enum NtTerm {
    Iri(String),
    Literal,
    Blank,
}

struct NtScanner<'a> {
    rest: &'a str,
}

impl<'a> NtScanner<'a> {
    fn term(&mut self) -> Result<NtTerm, String> {
        self.rest = self.rest.trim_start();
        if let Some(stripped) = self.rest.strip_prefix('<') {
            let end = stripped.find('>').ok_or("unterminated IRI")?;
            let iri = &stripped[..end];
            self.rest = &stripped[end + 1..];
            Ok(NtTerm::Iri(iri.to_string()))
        } else if let Some(stripped) = self.rest.strip_prefix('"') {
            let mut escaped = false;
            let mut end = None;
            for (i, c) in stripped.char_indices() {
                match c {
                    '\\' if !escaped => escaped = true,
                    '"' if !escaped => {
                        end = Some(i);
                        break;
                    }
                    _ => escaped = false,
                }
            }
            let end = end.ok_or("unterminated literal")?;
            let mut rest = &stripped[end + 1..];
            // Skip a language tag or datatype annotation.
            if let Some(tagged) = rest.strip_prefix('@') {
                let cut = tagged.find(|c: char| c.is_whitespace()).unwrap_or(tagged.len());
                rest = &tagged[cut..];
            } else if let Some(typed) = rest.strip_prefix("^^<") {
                let end = typed.find('>').ok_or("unterminated datatype IRI")?;
                rest = &typed[end + 1..];
            }
            self.rest = rest;
            Ok(NtTerm::Literal)
        } else if let Some(stripped) = self.rest.strip_prefix("_:") {
            let cut = stripped
                .find(|c: char| c.is_whitespace() || c == '.')
                .unwrap_or(stripped.len());
            self.rest = &stripped[cut..];
            Ok(NtTerm::Blank)
        } else {
            Err(format!("expected an RDF term at `{}`", self.rest))
        }
    }

    fn finish(&mut self) -> Result<(), String> {
        let rest = self.rest.trim_start();
        let Some(rest) = rest.strip_prefix('.') else {
            return Err("missing terminating '.'".into());
        };
        if !rest.trim().is_empty() {
            return Err(format!("trailing content `{}`", rest.trim()));
        }
        Ok(())
    }
}

/// Shortens IRIs to their fragment or last path segment, tracking the
/// originals so that two distinct IRIs cannot silently share a short name.
#[derive(Default)]
struct Shortener {
    taken: HashMap<String, String>,
}

impl Shortener {
    fn shorten(&mut self, iri: &str) -> Result<String, String> {
        let short = iri
            .rsplit_once('#')
            .map(|(_, frag)| frag)
            .or_else(|| iri.rsplit_once('/').map(|(_, seg)| seg))
            .unwrap_or(iri);
        if !concepts::is_valid_name(short) {
            return Err(format!("IRI <{iri}> shortens to unusable name `{short}`"));
        }
        match self.taken.entry(short.to_string()) {
            Entry::Vacant(v) => {
                v.insert(iri.to_string());
                Ok(short.to_string())
            }
            Entry::Occupied(o) if o.get() == iri => Ok(short.to_string()),
            Entry::Occupied(o) => Err(format!(
                "short name collision: `{short}` from both <{}> and <{iri}>",
                o.get()
            )),
        }
    }
}

fn parse_ntriples<R: BufRead>(
    reader: R,
    builder: &mut KbBuilder,
    warnings: &mut Vec<Diagnostic>,
) -> Result<(), KbError> {
    let mut short = Shortener::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fail = |message: String| KbError::Parse {
            line: line_no,
            message,
        };
        let mut scanner = NtScanner { rest: text };
        let subject = scanner.term().map_err(fail)?;
        let predicate = scanner.term().map_err(fail)?;
        let object = scanner.term().map_err(fail)?;
        scanner.finish().map_err(fail)?;

        let NtTerm::Iri(subject) = subject else {
            warnings.push(Diagnostic::warning(format!(
                "line {line_no}: anonymous subject ignored"
            )));
            continue;
        };
        let NtTerm::Iri(predicate) = predicate else {
            return Err(fail("predicate must be an IRI".into()));
        };
        let object = match object {
            NtTerm::Iri(iri) => iri,
            NtTerm::Literal => {
                warnings.push(Diagnostic::warning(format!(
                    "line {line_no}: literal object ignored"
                )));
                continue;
            }
            NtTerm::Blank => {
                warnings.push(Diagnostic::warning(format!(
                    "line {line_no}: anonymous object ignored"
                )));
                continue;
            }
        };

        let result = if vocab_is(&predicate, RDF_TYPE) {
            if is_vocab(&object) {
                if vocab_is(&object, OWL_CLASS) {
                    short.shorten(&subject).and_then(|s| builder.concept(&s).map(|_| ()))
                } else if vocab_is(&object, OWL_OBJECT_PROPERTY) {
                    short.shorten(&subject).and_then(|s| builder.role(&s).map(|_| ()))
                } else if vocab_is(&object, OWL_NAMED_INDIVIDUAL) {
                    short.shorten(&subject).and_then(|s| builder.individual(&s).map(|_| ()))
                } else {
                    warnings.push(Diagnostic::warning(format!(
                        "line {line_no}: unsupported declaration <{object}> ignored"
                    )));
                    continue;
                }
            } else {
                let x = short.shorten(&subject).map_err(fail)?;
                let a = short.shorten(&object).map_err(fail)?;
                builder.assert_type(&x, &a)
            }
        } else if vocab_is(&predicate, RDFS_SUBCLASS) || vocab_is(&predicate, OWL_EQUIVALENT) {
            if is_vocab(&object) {
                warnings.push(Diagnostic::warning(format!(
                    "line {line_no}: axiom over vocabulary term <{object}> ignored"
                )));
                continue;
            }
            let a = short.shorten(&subject).map_err(fail)?;
            let b = short.shorten(&object).map_err(fail)?;
            if vocab_is(&predicate, RDFS_SUBCLASS) {
                builder.sub(&a, &b)
            } else {
                builder.equiv(&a, &b)
            }
        } else if is_vocab(&predicate) {
            warnings.push(Diagnostic::warning(format!(
                "line {line_no}: vocabulary predicate <{predicate}> outside the supported fragment ignored"
            )));
            continue;
        } else {
            let x = short.shorten(&subject).map_err(fail)?;
            let r = short.shorten(&predicate).map_err(fail)?;
            let y = short.shorten(&object).map_err(fail)?;
            builder.assert_rel(&x, &r, &y)
        };
        result.map_err(fail)?;
    }
    Ok(())
}

/// Checks referential integrity and reports unused names.
///
/// Knowledge bases produced by [`load_kb`] contain no errors by
/// construction; hand-built ones may.
pub fn validate(kb: &KnowledgeBase) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    let n_concepts = kb.concepts.len() as u32;
    let n_roles = kb.roles.len() as u32;
    let n_individuals = kb.individuals.len() as u32;

    let mut concept_used = vec![false; n_concepts as usize];
    let mut role_used = vec![false; n_roles as usize];
    let mut individual_used = vec![false; n_individuals as usize];

    let mut check_concept = |id: ConceptId, what: &str, out: &mut Vec<Diagnostic>| {
        if id.raw() < n_concepts {
            concept_used[id.index()] = true;
        } else {
            out.push(Diagnostic::error(format!(
                "{what} references unregistered concept #{}",
                id.raw()
            )));
        }
    };

    for (i, stmt) in kb.statements.iter().enumerate() {
        let what = format!("statement {i}");
        match *stmt {
            Statement::Sub(a, b) => {
                check_concept(a, &what, &mut diagnostics);
                check_concept(b, &what, &mut diagnostics);
            }
            Statement::Type(x, a) => {
                check_concept(a, &what, &mut diagnostics);
                if x.raw() < n_individuals {
                    individual_used[x.index()] = true;
                } else {
                    diagnostics.push(Diagnostic::error(format!(
                        "{what} references unregistered individual #{}",
                        x.raw()
                    )));
                }
            }
            Statement::Rel(x, r, y) => {
                for ind in [x, y] {
                    if ind.raw() < n_individuals {
                        individual_used[ind.index()] = true;
                    } else {
                        diagnostics.push(Diagnostic::error(format!(
                            "{what} references unregistered individual #{}",
                            ind.raw()
                        )));
                    }
                }
                if r.raw() < n_roles {
                    role_used[r.index()] = true;
                } else {
                    diagnostics.push(Diagnostic::error(format!(
                        "{what} references unregistered role #{}",
                        r.raw()
                    )));
                }
            }
        }
    }

    for (i, used) in concept_used.iter().enumerate() {
        if !used {
            diagnostics.push(Diagnostic::warning(format!(
                "concept `{}` is declared but never used",
                kb.concepts.name(i as u32)
            )));
        }
    }
    for (i, used) in role_used.iter().enumerate() {
        if !used {
            diagnostics.push(Diagnostic::warning(format!(
                "role `{}` is declared but never used",
                kb.roles.name(i as u32)
            )));
        }
    }
    for (i, used) in individual_used.iter().enumerate() {
        if !used {
            diagnostics.push(Diagnostic::warning(format!(
                "individual `{}` has no assertions",
                kb.individuals.name(i as u32)
            )));
        }
    }
    diagnostics
}
