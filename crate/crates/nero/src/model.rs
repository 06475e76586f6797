//! The permutation-invariant scorer and its training loop.
//!
//! The model holds one embedding row per individual and one affine output
//! per target expression. Scoring a learning problem sums the embeddings of
//! the positive examples and of the negative examples separately — always in
//! ascending individual-index order, which makes permutation invariance
//! bit-exact — maps the difference of the two sums through the affine layer,
//! and squashes each coordinate with the logistic function:
//!
//! ```text
//! score = σ(W·(Σ_{x∈E⁺} ψ(x) − Σ_{x∈E⁻} ψ(x)))
//! ```
//!
//! Because only the difference of the two affine images matters, the output
//! bias cancels: it receives an identically zero gradient and the scores are
//! unchanged under any constant shift of it. The bias still participates in
//! [`NeroModel::embed_concept`], which maps a single retrieval sum through
//! the full affine layer.
//!
//! Training minimizes binary cross entropy against soft F1 labels with
//! hand-derived gradients and Adam updates. Everything runs in `f64` and is
//! deterministic for a fixed seed, configuration, and knowledge base.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bitset::IndividualSet;
use crate::concepts::Concept;
use crate::kb::KnowledgeBase;
use crate::refinement::TargetSpace;
use crate::retrieval::{f1_of_sets, RetrievalEngine, RetrievalError};

/// Predictions are clamped into `[CLAMP, 1 − CLAMP]` inside the loss so
/// that the logarithms stay finite.
const CLAMP: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A trained scorer: embedding table, affine output layer, and the name
/// table plus target manifest it was trained against.
///
/// Immutable once trained; forward passes and embeddings may run from many
/// threads concurrently.
#[derive(Clone, Debug, PartialEq)]
pub struct NeroModel {
    embedding_dim: usize,
    psi: Matrix,
    w: Matrix,
    bias: Vec<f64>,
    individual_names: Vec<String>,
    target_manifest: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("example sets cover {got} individuals, the model was trained over {expected}")]
    UniverseMismatch { expected: usize, got: usize },
    #[error("incompatible knowledge base: {0}")]
    Incompatible(String),
    #[error("no target retrieval holds at least {k} individuals")]
    SamplingExhausted { k: usize },
    #[error("sampling {k} examples per side needs {needed} individuals, knowledge base has {available}")]
    NotEnoughIndividuals { k: usize, needed: usize, available: usize },
    #[error("training diverged with non-finite values in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("unsupported model format version {found}")]
    Version { found: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NeroModel {
    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn target_count(&self) -> usize {
        self.w.rows
    }

    pub fn individual_count(&self) -> usize {
        self.psi.rows
    }

    /// ASCII renderings of the target expressions, in output order.
    pub fn target_manifest(&self) -> &[String] {
        &self.target_manifest
    }

    pub fn individual_names(&self) -> &[String] {
        &self.individual_names
    }

    /// Parses the embedded manifest back into expressions.
    pub fn target_concepts(&self) -> Result<Vec<Concept>, ModelError> {
        self.target_manifest
            .iter()
            .map(|line| {
                crate::concepts::parse_concept(line)
                    .map_err(|e| ModelError::Format(format!("manifest entry `{line}`: {e}")))
            })
            .collect()
    }

    /// Verifies that the knowledge base assigns every model individual the
    /// same dense index the model was trained with.
    pub fn check_compatible(&self, kb: &KnowledgeBase) -> Result<(), ModelError> {
        for (index, name) in self.individual_names.iter().enumerate() {
            match kb.individuals().get(name) {
                Some(id) if id.index() == index => {}
                Some(_) => {
                    return Err(ModelError::Incompatible(format!(
                        "individual `{name}` is indexed differently in the knowledge base"
                    )))
                }
                None => {
                    return Err(ModelError::Incompatible(format!(
                        "individual `{name}` is missing from the knowledge base"
                    )))
                }
            }
        }
        if kb.individuals().len() != self.individual_names.len() {
            let extra = kb
                .individuals()
                .iter()
                .nth(self.individual_names.len())
                .unwrap_or("?");
            return Err(ModelError::Incompatible(format!(
                "knowledge base individual `{extra}` is not in the model name table"
            )));
        }
        Ok(())
    }

    fn check_universe(&self, set: &IndividualSet) -> Result<(), ModelError> {
        if set.universe() != self.individual_count() {
            return Err(ModelError::UniverseMismatch {
                expected: self.individual_count(),
                got: set.universe(),
            });
        }
        Ok(())
    }

    /// Sum of embedding rows in ascending index order.
    fn sum_rows(&self, set: &IndividualSet) -> Vec<f64> {
        let mut acc = vec![0.0; self.embedding_dim];
        for x in set.iter() {
            for (a, p) in acc.iter_mut().zip(self.psi.row(x)) {
                *a += p;
            }
        }
        acc
    }

    fn forward_parts(
        &self,
        positives: &IndividualSet,
        negatives: &IndividualSet,
    ) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        self.check_universe(positives)?;
        self.check_universe(negatives)?;
        let s_plus = self.sum_rows(positives);
        let s_minus = self.sum_rows(negatives);
        let diff: Vec<f64> = s_plus.iter().zip(&s_minus).map(|(a, b)| a - b).collect();
        let scores = (0..self.target_count())
            .map(|j| sigmoid(dot(self.w.row(j), &diff)))
            .collect();
        Ok((diff, scores))
    }

    /// Predicted scores for every target, each in `(0, 1)`.
    ///
    /// The negative set may be empty (its sum is zero); feeding the same set
    /// on both sides yields exactly `0.5` everywhere.
    pub fn forward(
        &self,
        positives: &IndividualSet,
        negatives: &IndividualSet,
    ) -> Result<Vec<f64>, ModelError> {
        Ok(self.forward_parts(positives, negatives)?.1)
    }

    /// Embedding of an arbitrary expression: the affine image of its
    /// retrieval sum, with no difference and no squashing. An empty
    /// retrieval embeds to the output bias.
    pub fn embed_concept(
        &self,
        engine: &RetrievalEngine,
        concept: &Concept,
    ) -> Result<Vec<f64>, ModelError> {
        let retrieval = engine.retrieve(concept)?;
        self.check_universe(&retrieval)?;
        if retrieval.is_empty() {
            log::warn!("concept `{concept}` has an empty retrieval; its embedding is the output bias");
        }
        let sum = self.sum_rows(&retrieval);
        Ok((0..self.target_count())
            .map(|j| dot(self.w.row(j), &sum) + self.bias[j])
            .collect())
    }

    /// Mean binary cross entropy over the batch and all targets, with
    /// analytic gradients for every parameter. The bias gradient is
    /// identically zero because the bias cancels in the forward difference.
    pub fn loss_and_gradients(&self, batch: &[TrainingPoint]) -> Result<(f64, Gradients), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::InvalidConfig("empty training batch".into()));
        }
        let t = self.target_count();
        let m = self.embedding_dim;
        let mut grads = Gradients {
            psi: vec![0.0; self.psi.data.len()],
            w: vec![0.0; self.w.data.len()],
            bias: vec![0.0; t],
        };
        let scale = 1.0 / (t as f64 * batch.len() as f64);
        let mut total = 0.0;
        for point in batch {
            if point.labels.len() != t {
                return Err(ModelError::InvalidConfig(format!(
                    "training point carries {} labels for {t} targets",
                    point.labels.len()
                )));
            }
            let (diff, scores) = self.forward_parts(&point.positives, &point.negatives)?;
            let mut point_loss = 0.0;
            let mut upstream = vec![0.0; t];
            for j in 0..t {
                let p = scores[j].clamp(CLAMP, 1.0 - CLAMP);
                let y = point.labels[j];
                point_loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
                upstream[j] = (scores[j] - y) * scale;
            }
            total += point_loss / t as f64;

            for (j, &u) in upstream.iter().enumerate() {
                let row = &mut grads.w[j * m..(j + 1) * m];
                for i in 0..m {
                    row[i] += u * diff[i];
                }
            }
            let mut pulled = vec![0.0; m];
            for (j, &u) in upstream.iter().enumerate() {
                let row = self.w.row(j);
                for i in 0..m {
                    pulled[i] += row[i] * u;
                }
            }
            for x in point.positives.iter() {
                let row = &mut grads.psi[x * m..(x + 1) * m];
                for i in 0..m {
                    row[i] += pulled[i];
                }
            }
            for x in point.negatives.iter() {
                let row = &mut grads.psi[x * m..(x + 1) * m];
                for i in 0..m {
                    row[i] -= pulled[i];
                }
            }
        }
        let loss = total / batch.len() as f64;
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss);
        }
        Ok((loss, grads))
    }

    /// Total number of scalar parameters.
    pub fn parameter_count(&self) -> usize {
        self.psi.data.len() + self.w.data.len() + self.bias.len()
    }

    /// Reads one parameter in the flat order: embeddings row-major, output
    /// weights row-major, bias.
    pub fn parameter(&self, index: usize) -> f64 {
        let np = self.psi.data.len();
        let nw = self.w.data.len();
        if index < np {
            self.psi.data[index]
        } else if index < np + nw {
            self.w.data[index - np]
        } else {
            self.bias[index - np - nw]
        }
    }

    /// Writes one parameter in the flat order used by [`Self::parameter`].
    pub fn set_parameter(&mut self, index: usize, value: f64) {
        let np = self.psi.data.len();
        let nw = self.w.data.len();
        if index < np {
            self.psi.data[index] = value;
        } else if index < np + nw {
            self.w.data[index - np] = value;
        } else {
            self.bias[index - np - nw] = value;
        }
    }
}

/// Parameter-shaped gradients in the same flat layout as the model.
pub struct Gradients {
    pub psi: Vec<f64>,
    pub w: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    /// Flat view matching [`NeroModel::parameter`] indices.
    pub fn parameter(&self, index: usize) -> f64 {
        if index < self.psi.len() {
            self.psi[index]
        } else if index < self.psi.len() + self.w.len() {
            self.w[index - self.psi.len()]
        } else {
            self.bias[index - self.psi.len() - self.w.len()]
        }
    }
}

/// One supervised example: two example sets and the per-target F1 labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPoint {
    pub positives: IndividualSet,
    pub negatives: IndividualSet,
    pub labels: Vec<f64>,
}

/// Hyperparameters for [`train`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    /// Embedding width `m`.
    pub embedding_dim: usize,
    /// Examples drawn per side of each training problem.
    pub examples_per_side: usize,
    /// Training points regenerated at the start of every epoch.
    pub points_per_epoch: usize,
    pub epochs: usize,
    pub minibatch: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            embedding_dim: 32,
            examples_per_side: 10,
            points_per_epoch: 50,
            epochs: 100,
            minibatch: 10,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidConfig(msg.into()));
        if self.embedding_dim == 0 {
            return bad("embedding dimension must be positive");
        }
        if self.examples_per_side == 0 {
            return bad("examples per side must be positive");
        }
        if self.points_per_epoch == 0 {
            return bad("points per epoch must be positive");
        }
        if self.minibatch == 0 {
            return bad("minibatch size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive and finite");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam momentum factors must lie in [0, 1)");
        }
        let epsilon_ok = self.epsilon.is_finite() && self.epsilon > 0.0;
        if !epsilon_ok {
            return bad("Adam epsilon must be positive");
        }
        Ok(())
    }
}

/// A trained model together with the mean loss recorded per epoch.
pub struct TrainingRun {
    pub model: NeroModel,
    pub epoch_losses: Vec<f64>,
}

impl TrainingRun {
    /// Whether the final epoch improved on the first; `None` below two
    /// epochs.
    pub fn improved(&self) -> Option<bool> {
        match (self.epoch_losses.first(), self.epoch_losses.last()) {
            (Some(first), Some(last)) if self.epoch_losses.len() >= 2 => Some(last < first),
            _ => None,
        }
    }
}

/// Draws one training point: a target sampled uniformly (retried while its
/// retrieval holds fewer than `k` individuals), `k` positives from inside
/// the retrieval, `k` negatives from the rest of the domain excluding the
/// positives — so negatives may still fall inside the retrieval — and the
/// F1 label vector over all targets.
pub fn sample_training_point(
    engine: &RetrievalEngine,
    targets: &TargetSpace,
    examples_per_side: usize,
    rng: &mut impl Rng,
) -> Result<TrainingPoint, ModelError> {
    let k = examples_per_side;
    let universe = engine.universe();
    if k == 0 {
        return Err(ModelError::InvalidConfig("examples per side must be positive".into()));
    }
    if universe < 2 * k {
        return Err(ModelError::NotEnoughIndividuals {
            k,
            needed: 2 * k,
            available: universe,
        });
    }
    if targets.is_empty() {
        return Err(ModelError::SamplingExhausted { k });
    }

    let retries = 1000.max(10 * targets.len());
    let mut chosen = None;
    for _ in 0..retries {
        let candidate = rng.gen_range(0..targets.len());
        if targets.retrievals()[candidate].len() >= k {
            chosen = Some(candidate);
            break;
        }
    }
    let target = chosen.ok_or(ModelError::SamplingExhausted { k })?;

    let members = targets.retrievals()[target].to_vec();
    let mut positives = IndividualSet::empty(universe);
    for pick in rand::seq::index::sample(rng, members.len(), k) {
        positives.insert(members[pick]);
    }
    let pool: Vec<usize> = (0..universe).filter(|&x| !positives.contains(x)).collect();
    let mut negatives = IndividualSet::empty(universe);
    for pick in rand::seq::index::sample(rng, pool.len(), k) {
        negatives.insert(pool[pick]);
    }
    let labels = targets
        .retrievals()
        .iter()
        .map(|r| f1_of_sets(r, &positives, &negatives))
        .collect();
    Ok(TrainingPoint {
        positives,
        negatives,
        labels,
    })
}

struct AdamSlot {
    first: Vec<f64>,
    second: Vec<f64>,
}

impl AdamSlot {
    fn new(len: usize) -> Self {
        AdamSlot {
            first: vec![0.0; len],
            second: vec![0.0; len],
        }
    }

    fn update(&mut self, step: u64, params: &mut [f64], grads: &[f64], cfg: &TrainingConfig) {
        let correct1 = 1.0 - cfg.beta1.powi(step as i32);
        let correct2 = 1.0 - cfg.beta2.powi(step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.first[i] = cfg.beta1 * self.first[i] + (1.0 - cfg.beta1) * g;
            self.second[i] = cfg.beta2 * self.second[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.first[i] / correct1;
            let v_hat = self.second[i] / correct2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// Trains a fresh model against the target space.
///
/// Embeddings and output weights start uniform in `(−0.1, 0.1)` from the
/// seeded generator, the bias at zero. Every epoch draws
/// `points_per_epoch` fresh training points and applies one Adam step per
/// minibatch. Identical seeds and inputs reproduce the parameters bit for
/// bit; `epochs == 0` returns the freshly initialized model.
pub fn train(
    engine: &RetrievalEngine,
    targets: &TargetSpace,
    cfg: &TrainingConfig,
) -> Result<TrainingRun, ModelError> {
    cfg.validate()?;
    if targets.is_empty() {
        return Err(ModelError::InvalidConfig("target space is empty".into()));
    }
    let universe = engine.universe();
    let t = targets.len();
    let m = cfg.embedding_dim;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut psi = Matrix::zeros(universe, m);
    for v in &mut psi.data {
        *v = rng.gen_range(-0.1..0.1);
    }
    let mut w = Matrix::zeros(t, m);
    for v in &mut w.data {
        *v = rng.gen_range(-0.1..0.1);
    }

    let mut model = NeroModel {
        embedding_dim: m,
        psi,
        w,
        bias: vec![0.0; t],
        individual_names: engine.kb().individuals().iter().map(String::from).collect(),
        target_manifest: targets.concepts().iter().map(|c| c.to_ascii()).collect(),
    };

    let mut adam_psi = AdamSlot::new(model.psi.data.len());
    let mut adam_w = AdamSlot::new(model.w.data.len());
    let mut step = 0;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut points = Vec::with_capacity(cfg.points_per_epoch);
        for _ in 0..cfg.points_per_epoch {
            points.push(sample_training_point(engine, targets, cfg.examples_per_side, &mut rng)?);
        }
        let mut loss_sum = 0.0;
        for batch in points.chunks(cfg.minibatch) {
            let (loss, grads) = model.loss_and_gradients(batch).map_err(|e| match e {
                ModelError::NonFiniteLoss => ModelError::Diverged { epoch },
                other => other,
            })?;
            loss_sum += loss * batch.len() as f64;
            step += 1;
            adam_psi.update(step, &mut model.psi.data, &grads.psi, cfg);
            adam_w.update(step, &mut model.w.data, &grads.w, cfg);
            let finite = model.psi.data.iter().chain(&model.w.data).all(|v| v.is_finite());
            if !finite {
                return Err(ModelError::Diverged { epoch });
            }
        }
        epoch_losses.push(loss_sum / cfg.points_per_epoch as f64);
    }

    let run = TrainingRun { model, epoch_losses };
    if run.improved() == Some(false) {
        log::warn!(
            "mean training loss did not improve: first epoch {:.6}, final epoch {:.6}",
            run.epoch_losses.first().unwrap(),
            run.epoch_losses.last().unwrap()
        );
    }
    Ok(run)
}

const MAGIC: &[u8; 4] = b"NERO";
const FORMAT_VERSION: u32 = 1;
// Caps on header-declared sizes so a corrupt file cannot drive allocations.
const MAX_STRING: u32 = 1 << 20;
const MAX_PARAMETERS: u64 = 1 << 30;

fn fill(source: &mut impl Read, buf: &mut [u8]) -> Result<(), ModelError> {
    source.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            ModelError::Format("unexpected end of file".into())
        } else {
            ModelError::Io(e)
        }
    })
}

fn read_u32(source: &mut impl Read) -> Result<u32, ModelError> {
    let mut buf = [0u8; 4];
    fill(source, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(source: &mut impl Read) -> Result<u64, ModelError> {
    let mut buf = [0u8; 8];
    fill(source, &mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64s(source: &mut impl Read, count: usize) -> Result<Vec<f64>, ModelError> {
    let mut out = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        fill(source, &mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

fn read_string(source: &mut impl Read) -> Result<String, ModelError> {
    let len = read_u32(source)?;
    if len > MAX_STRING {
        return Err(ModelError::Format(format!("implausible string length {len}")));
    }
    let mut buf = vec![0u8; len as usize];
    fill(source, &mut buf)?;
    String::from_utf8(buf).map_err(|_| ModelError::Format("string is not valid UTF-8".into()))
}

fn write_string(sink: &mut impl Write, s: &str) -> Result<(), ModelError> {
    let len = u32::try_from(s.len())
        .map_err(|_| ModelError::Format("string too long to serialize".into()))?;
    sink.write_all(&len.to_le_bytes())?;
    sink.write_all(s.as_bytes())?;
    Ok(())
}

impl NeroModel {
    /// Writes the versioned container: header, individual name table,
    /// target manifest, then the parameter matrices as little-endian
    /// 64-bit floats in row-major order.
    pub fn save(&self, sink: &mut impl Write) -> Result<(), ModelError> {
        sink.write_all(MAGIC)?;
        sink.write_all(&FORMAT_VERSION.to_le_bytes())?;
        sink.write_all(&(self.embedding_dim as u64).to_le_bytes())?;
        sink.write_all(&(self.target_count() as u64).to_le_bytes())?;
        sink.write_all(&(self.individual_count() as u64).to_le_bytes())?;
        for name in &self.individual_names {
            write_string(sink, name)?;
        }
        for line in &self.target_manifest {
            write_string(sink, line)?;
        }
        for v in self.psi.data.iter().chain(&self.w.data).chain(&self.bias) {
            sink.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn save_to_path(&self, path: &Path) -> Result<(), ModelError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.save(&mut file)?;
        use std::io::Write as _;
        file.flush()?;
        Ok(())
    }

    /// Reads a container written by [`Self::save`]; the round trip is exact
    /// to the bit.
    pub fn load(source: &mut impl Read) -> Result<NeroModel, ModelError> {
        let mut magic = [0u8; 4];
        fill(source, &mut magic)?;
        if &magic != MAGIC {
            return Err(ModelError::Format("bad magic bytes".into()));
        }
        let version = read_u32(source)?;
        if version != FORMAT_VERSION {
            return Err(ModelError::Version { found: version });
        }
        let m = read_u64(source)?;
        let t = read_u64(source)?;
        let i = read_u64(source)?;
        let total = i
            .checked_mul(m)
            .and_then(|p| p.checked_add(t.checked_mul(m)?))
            .and_then(|p| p.checked_add(t));
        match total {
            Some(total) if total <= MAX_PARAMETERS && m >= 1 => {}
            _ => return Err(ModelError::Format("implausible header sizes".into())),
        }
        let (m, t, i) = (m as usize, t as usize, i as usize);
        let mut individual_names = Vec::with_capacity(i);
        for _ in 0..i {
            individual_names.push(read_string(source)?);
        }
        let mut target_manifest = Vec::with_capacity(t);
        for _ in 0..t {
            target_manifest.push(read_string(source)?);
        }
        let psi = Matrix {
            rows: i,
            cols: m,
            data: read_f64s(source, i * m)?,
        };
        let w = Matrix {
            rows: t,
            cols: m,
            data: read_f64s(source, t * m)?,
        };
        let bias = read_f64s(source, t)?;
        let mut probe = [0u8; 1];
        if source.read(&mut probe)? != 0 {
            return Err(ModelError::Format("trailing data after parameters".into()));
        }
        Ok(NeroModel {
            embedding_dim: m,
            psi,
            w,
            bias,
            individual_names,
            target_manifest,
        })
    }

    pub fn load_from_path(path: &Path) -> Result<NeroModel, ModelError> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::load(&mut file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refinement::{build_targets, RefinementConfig};

    const T1: &str = "sub Brother Male\nsub Male Person\nsub Female Person\n\
                      type a Brother\ntype b Female\ntype c Male\nrel a hasSibling b\n";

    fn fixture() -> (RetrievalEngine, TargetSpace) {
        let engine = RetrievalEngine::build(KnowledgeBase::parse_native(T1).unwrap());
        let targets = build_targets(&engine, &RefinementConfig::default(), 7, 3).unwrap();
        (engine, targets)
    }

    fn quick_config() -> TrainingConfig {
        TrainingConfig {
            embedding_dim: 4,
            examples_per_side: 1,
            points_per_epoch: 8,
            epochs: 3,
            minibatch: 4,
            seed: 7,
            ..TrainingConfig::default()
        }
    }

    fn trained() -> (RetrievalEngine, TargetSpace, NeroModel) {
        let (engine, targets) = fixture();
        let model = train(&engine, &targets, &quick_config()).unwrap().model;
        (engine, targets, model)
    }

    fn set(universe: usize, indices: &[usize]) -> IndividualSet {
        IndividualSet::from_indices(universe, indices.iter().copied())
    }

    #[test]
    fn equal_sets_score_exactly_half() {
        let (_, _, model) = trained();
        let e = set(3, &[0, 2]);
        for score in model.forward(&e, &e).unwrap() {
            assert_eq!(score, 0.5);
        }
    }

    #[test]
    fn forward_matches_literal_affine_difference() {
        // Straight-line evaluation through both affine images, bias included.
        let (_, _, mut model) = trained();
        for (j, b) in model.bias.iter_mut().enumerate() {
            *b = 0.25 * (j as f64 + 1.0);
        }
        let pos = set(3, &[0]);
        let neg = set(3, &[1]);
        let got = model.forward(&pos, &neg).unwrap();
        for (j, &value) in got.iter().enumerate() {
            let phi = |s: &[f64]| dot(model.w.row(j), s) + model.bias[j];
            let expected = sigmoid(phi(model.psi.row(0)) - phi(model.psi.row(1)));
            assert!((value - expected).abs() < 1e-12, "target {j}");
        }
    }

    #[test]
    fn bias_shift_leaves_scores_bitwise_identical() {
        let (_, _, model) = trained();
        let pos = set(3, &[0, 1]);
        let neg = set(3, &[2]);
        let before = model.forward(&pos, &neg).unwrap();
        let mut shifted = model.clone();
        for b in &mut shifted.bias {
            *b += 123.456;
        }
        assert_eq!(before, shifted.forward(&pos, &neg).unwrap());
    }

    #[test]
    fn scores_are_antisymmetric() {
        let (_, _, model) = trained();
        let pos = set(3, &[0]);
        let neg = set(3, &[1, 2]);
        let forward = model.forward(&pos, &neg).unwrap();
        let backward = model.forward(&neg, &pos).unwrap();
        for (f, b) in forward.iter().zip(&backward) {
            assert!((f + b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn universe_mismatch_is_reported() {
        let (_, _, model) = trained();
        let err = model.forward(&set(5, &[0]), &set(5, &[1])).unwrap_err();
        assert!(matches!(err, ModelError::UniverseMismatch { expected: 3, got: 5 }));
    }

    #[test]
    fn perfect_predictions_zero_every_gradient() {
        let (_, _, model) = trained();
        let pos = set(3, &[0]);
        let neg = set(3, &[1]);
        let labels = model.forward(&pos, &neg).unwrap();
        let point = TrainingPoint {
            positives: pos,
            negatives: neg,
            labels,
        };
        let (_, grads) = model.loss_and_gradients(&[point]).unwrap();
        assert!(grads.psi.iter().all(|&g| g == 0.0));
        assert!(grads.w.iter().all(|&g| g == 0.0));
        assert!(grads.bias.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn bias_gradient_is_identically_zero() {
        let (engine, targets, model) = trained();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let batch: Vec<_> = (0..4)
            .map(|_| sample_training_point(&engine, &targets, 1, &mut rng).unwrap())
            .collect();
        let (loss, grads) = model.loss_and_gradients(&batch).unwrap();
        assert!(loss.is_finite());
        assert!(grads.bias.iter().all(|&g| g == 0.0));
        assert!(grads.w.iter().any(|&g| g != 0.0));
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let (engine, targets, mut model) = trained();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let batch: Vec<_> = (0..3)
            .map(|_| sample_training_point(&engine, &targets, 1, &mut rng).unwrap())
            .collect();
        let (_, grads) = model.loss_and_gradients(&batch).unwrap();
        let h = 1e-5;
        for index in 0..model.parameter_count() {
            let original = model.parameter(index);
            model.set_parameter(index, original + h);
            let (plus, _) = model.loss_and_gradients(&batch).unwrap();
            model.set_parameter(index, original - h);
            let (minus, _) = model.loss_and_gradients(&batch).unwrap();
            model.set_parameter(index, original);
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = grads.parameter(index);
            let scale = analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(
                ((analytic - numeric) / scale).abs() < 1e-4,
                "parameter {index}: analytic {analytic}, numeric {numeric}"
            );
        }
    }

    #[test]
    fn sampling_respects_the_four_steps() {
        let (engine, targets) = fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let point = sample_training_point(&engine, &targets, 1, &mut rng).unwrap();
            assert_eq!(point.positives.len(), 1);
            assert_eq!(point.negatives.len(), 1);
            assert!(point.positives.is_disjoint(&point.negatives));
            // The positives fit inside at least one target retrieval.
            assert!(targets.retrievals().iter().any(|r| point.positives.is_subset(r)));
            assert_eq!(point.labels.len(), targets.len());
            for (j, label) in point.labels.iter().enumerate() {
                assert_eq!(
                    *label,
                    f1_of_sets(&targets.retrievals()[j], &point.positives, &point.negatives)
                );
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_guards_preconditions() {
        let (engine, targets) = fixture();
        let a = sample_training_point(&engine, &targets, 1, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_training_point(&engine, &targets, 1, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);

        // Three individuals cannot provide two examples per side.
        let err = sample_training_point(&engine, &targets, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, ModelError::NotEnoughIndividuals { .. }));

        // A knowledge base where every retrieval is a singleton cannot
        // serve k = 2 even though 2k individuals exist.
        let kb = KnowledgeBase::parse_native("type a A\ntype b B\ntype c C\ntype d D\n").unwrap();
        let engine = RetrievalEngine::build(kb);
        let targets = build_targets(&engine, &RefinementConfig::default(), 4, 3).unwrap();
        let err = sample_training_point(&engine, &targets, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, ModelError::SamplingExhausted { k: 2 }));
    }

    #[test]
    fn zero_epochs_returns_initialized_model() {
        let (engine, targets) = fixture();
        let cfg = TrainingConfig {
            epochs: 0,
            ..quick_config()
        };
        let run = train(&engine, &targets, &cfg).unwrap();
        assert!(run.epoch_losses.is_empty());
        assert_eq!(run.improved(), None);
        // Bias starts at zero and every weight inside the init range.
        assert!(run.model.bias.iter().all(|&b| b == 0.0));
        assert!(run.model.psi.data.iter().all(|&v| (-0.1..0.1).contains(&v)));
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let (engine, targets) = fixture();
        let run1 = train(&engine, &targets, &quick_config()).unwrap();
        let run2 = train(&engine, &targets, &quick_config()).unwrap();
        assert_eq!(run1.model, run2.model);
        assert_eq!(run1.epoch_losses, run2.epoch_losses);
    }

    #[test]
    fn training_halves_the_loss_on_the_fixture() {
        let (engine, targets) = fixture();
        let cfg = TrainingConfig {
            embedding_dim: 16,
            examples_per_side: 1,
            points_per_epoch: 32,
            epochs: 200,
            minibatch: 8,
            learning_rate: 5e-3,
            seed: 1,
            ..TrainingConfig::default()
        };
        let run = train(&engine, &targets, &cfg).unwrap();
        let first = run.epoch_losses[0];
        let last = *run.epoch_losses.last().unwrap();
        assert!(
            last <= 0.5 * first,
            "expected ≥50% improvement, got {first} -> {last}"
        );
        assert_eq!(run.improved(), Some(true));
    }

    #[test]
    fn embeddings_depend_only_on_the_retrieval() {
        let (engine, _, mut model) = trained();
        for (j, b) in model.bias.iter_mut().enumerate() {
            *b = j as f64;
        }
        let bottom = model.embed_concept(&engine, &Concept::Bottom).unwrap();
        assert_eq!(bottom, model.bias);

        // R(Male ⊓ ∃ hasSibling.Female) = {a}, so the embedding is the
        // affine image of ψ(a).
        let concept = crate::concepts::parse_concept("Male and exists hasSibling.Female").unwrap();
        let got = model.embed_concept(&engine, &concept).unwrap();
        for (j, &value) in got.iter().enumerate() {
            let expected = dot(model.w.row(j), model.psi.row(0)) + model.bias[j];
            assert_eq!(value, expected);
        }

        // Equal retrievals embed equally: R(Brother) = R(∃ hasSibling.Top).
        let brother = model.embed_concept(&engine, &Concept::atomic("Brother")).unwrap();
        let sibling = model
            .embed_concept(&engine, &crate::concepts::parse_concept("exists hasSibling.Top").unwrap())
            .unwrap();
        assert_eq!(brother, sibling);
    }

    #[test]
    fn container_round_trips_bitwise() {
        let (_, _, model) = trained();
        let mut buffer = Vec::new();
        model.save(&mut buffer).unwrap();
        let loaded = NeroModel::load(&mut buffer.as_slice()).unwrap();
        assert_eq!(model, loaded);
        let pos = set(3, &[0]);
        let neg = set(3, &[1, 2]);
        let a = model.forward(&pos, &neg).unwrap();
        let b = loaded.forward(&pos, &neg).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn corrupt_containers_fail_structurally() {
        let (_, _, model) = trained();
        let mut buffer = Vec::new();
        model.save(&mut buffer).unwrap();

        let truncated = &buffer[..buffer.len() - 9];
        assert!(matches!(
            NeroModel::load(&mut &truncated[..]),
            Err(ModelError::Format(_))
        ));

        let mut bad_magic = buffer.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            NeroModel::load(&mut bad_magic.as_slice()),
            Err(ModelError::Format(_))
        ));

        let mut bad_version = buffer.clone();
        bad_version[4] = 9;
        assert!(matches!(
            NeroModel::load(&mut bad_version.as_slice()),
            Err(ModelError::Version { found: 9 })
        ));

        let mut trailing = buffer.clone();
        trailing.push(0);
        assert!(matches!(
            NeroModel::load(&mut trailing.as_slice()),
            Err(ModelError::Format(_))
        ));
    }

    #[test]
    fn compatibility_check_names_the_offender() {
        let (engine, _, model) = trained();
        model.check_compatible(engine.kb()).unwrap();

        let missing = KnowledgeBase::parse_native("type a Brother\ntype c Male\n").unwrap();
        let err = model.check_compatible(&missing).unwrap_err();
        assert!(err.to_string().contains("`b`"), "{err}");

        let extra = KnowledgeBase::parse_native(
            "type a Brother\ntype b Female\ntype c Male\ntype d Male\n",
        )
        .unwrap();
        let err = model.check_compatible(&extra).unwrap_err();
        assert!(err.to_string().contains("`d`"), "{err}");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn forward_is_permutation_invariant(order in proptest::sample::subsequence(vec![0usize, 1, 2], 3)) {
                // Building the set from any insertion order gives identical
                // bits because summation runs in ascending index order.
                let (_, _, model) = trained();
                let mut shuffled = order.clone();
                shuffled.reverse();
                let a = set(3, &order);
                let b = set(3, &shuffled);
                let neg = IndividualSet::empty(3);
                prop_assert_eq!(
                    model.forward(&a, &neg).unwrap(),
                    model.forward(&b, &neg).unwrap()
                );
            }
        }
    }
}
