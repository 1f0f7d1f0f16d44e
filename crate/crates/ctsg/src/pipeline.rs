//! Pipeline orchestration: the training phase (VAE + condition clustering),
//! the generation phase (selection + on-the-fly mapping + decode), the
//! evaluation protocols, the ablation table, and the sensitivity sweep.

use std::time::Instant;

use ctsg_core::clustering;
use ctsg_core::eval::{
    accuracy, acd, auc, cfid, default_max_lag, dtw, ecod_fit, ecod_flag, ecod_score, ed,
    rocket_fit, rocket_predict, weighted_f1,
};
use ctsg_core::latent::{blend, BlendMode, BlendWitness, ConditionLatentPairs};
use ctsg_core::mapping::{self, Explanation, MappingModel, MappingVariant, TreeConfig};
use ctsg_core::nn::TrainConfig;
use ctsg_core::rng::SeedRng;
use ctsg_core::selection::{dcs, rand_select, select, SelectionConfig, SelectionStrategy};
use ctsg_core::vae::{train, VaeModel};
use ctsg_core::{ConditionValue, ConditionVector, Error as CoreError, SlotKind, TimeSeries};
use serde::{Deserialize, Serialize};

use crate::bundle::Bundle;
use crate::data::{denormalize_series, normalize, normalize_condition, normalize_series, split, Dataset};
use crate::error::{CtsgError, Result};
use crate::report::{
    CoherenceMetrics, Controllability, EvalReport, FidelityMetrics, SampleCounts,
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

fn default_latent_dim() -> usize {
    16
}
fn default_hidden() -> Vec<usize> {
    vec![128, 128]
}
fn default_kl_weight() -> f64 {
    1.0
}
fn default_learning_rate() -> f64 {
    1e-3
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_epochs() -> usize {
    500
}
fn default_batch_size() -> usize {
    32
}
fn default_k() -> usize {
    50
}
fn default_cluster_iterations() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    Dcs,
    Rand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingName {
    Linear,
    Tree,
    Forest,
}

impl MappingName {
    pub fn to_variant(self) -> MappingVariant {
        match self {
            MappingName::Linear => MappingVariant::Linear,
            MappingName::Tree => MappingVariant::Tree,
            MappingName::Forest => MappingVariant::Forest,
        }
    }
}

/// How the blended latent for the altered conditions is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlendStrategy {
    /// Predict with the fitted regressor (required for multi-condition
    /// edits).
    DirectRegression,
    /// Bracketed linear interpolation/extrapolation over the selected
    /// subset's pairs; single numeric (or ordinal) altered condition only.
    BracketedLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfigDoc {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
    pub n_trees: usize,
    pub bootstrap: bool,
    pub feature_subset: Option<usize>,
}

impl Default for TreeConfigDoc {
    fn default() -> Self {
        let d = TreeConfig::default();
        TreeConfigDoc {
            max_depth: d.max_depth,
            min_samples_leaf: d.min_samples_leaf,
            seed: d.seed,
            n_trees: d.n_trees,
            bootstrap: d.bootstrap,
            feature_subset: d.feature_subset,
        }
    }
}

impl TreeConfigDoc {
    pub fn to_core(self) -> TreeConfig {
        TreeConfig {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            seed: self.seed,
            n_trees: self.n_trees,
            bootstrap: self.bootstrap,
            feature_subset: self.feature_subset,
        }
    }
}

/// Every knob of the pipeline; all fields have defaults so a config file
/// only needs the overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    // Time series generation module.
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub kl_weight: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub train_seed: u64,
    // Condition clustering module.
    pub k: usize,
    pub cluster_max_iterations: usize,
    pub gamma: Option<f64>,
    pub cluster_seed: u64,
    // Data selection module. `None` resolves to the recommended defaults:
    // k1 = k/2 rounded up to even, k2 = half the average cluster size.
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub strategy: StrategyName,
    pub selection_seed: u64,
    // Condition mapping module.
    pub mapping: MappingName,
    pub tree: TreeConfigDoc,
    // Generation.
    pub blend: BlendStrategy,
    pub deterministic: bool,
    pub noise_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            latent_dim: default_latent_dim(),
            hidden: default_hidden(),
            kl_weight: default_kl_weight(),
            learning_rate: default_learning_rate(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            train_seed: 0,
            k: default_k(),
            cluster_max_iterations: default_cluster_iterations(),
            gamma: None,
            cluster_seed: 1,
            k1: None,
            k2: None,
            strategy: StrategyName::Dcs,
            selection_seed: 2,
            mapping: MappingName::Tree,
            tree: TreeConfigDoc::default(),
            blend: BlendStrategy::DirectRegression,
            deterministic: true,
            noise_seed: 3,
        }
    }
}

impl PipelineConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.train_seed,
        }
    }

    /// Default k1: half of k, rounded up, then up to even.
    pub fn resolved_k1(&self, k: usize) -> usize {
        match self.k1 {
            Some(v) => v,
            None => {
                let half = k.div_ceil(2);
                let even = if half % 2 == 1 { half + 1 } else { half };
                even.clamp(1, k)
            }
        }
    }

    /// Default k2: half the average cluster size, rounded up.
    pub fn resolved_k2(&self, n: usize, k: usize) -> usize {
        match self.k2 {
            Some(v) => v,
            None => (((n as f64 / k as f64) * 0.5).ceil() as usize).max(1),
        }
    }

    pub fn gen_options(&self, n: usize, k: usize) -> GenOptions {
        GenOptions {
            k1: self.resolved_k1(k),
            k2: self.resolved_k2(n, k),
            strategy: match self.strategy {
                StrategyName::Dcs => SelectionStrategy::Dcs,
                StrategyName::Rand => SelectionStrategy::Rand,
            },
            selection_mode: SelectionMode::Full,
            selection_seed: self.selection_seed,
            mapping: self.mapping.to_variant(),
            tree: self.tree.to_core(),
            blend: self.blend,
            deterministic: self.deterministic,
            noise_seed: self.noise_seed,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::error::json_err("pipeline config", e))
    }
}

/// Ablation switch for the data-selection stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// Cluster choice plus per-cluster nearest neighbors.
    Full,
    /// Cluster choice only; every member of the chosen clusters is kept.
    NoNns,
    /// No cluster choice; global nearest neighbors of size k1*k2.
    NoDcs,
    /// No selection at all: the mapping sees the whole training set.
    NoSelection,
}

/// Fully resolved per-request generation options.
#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions {
    pub k1: usize,
    pub k2: usize,
    pub strategy: SelectionStrategy,
    pub selection_mode: SelectionMode,
    pub selection_seed: u64,
    pub mapping: MappingVariant,
    pub tree: TreeConfig,
    pub blend: BlendStrategy,
    pub deterministic: bool,
    pub noise_seed: u64,
}

// ---------------------------------------------------------------------------
// Training phase
// ---------------------------------------------------------------------------

/// Train the VAE and the condition clustering, cache every training series'
/// posterior mean, and box it all into a bundle. Deterministic under the
/// config's seeds.
pub fn train_phase(dataset: &Dataset, cfg: &PipelineConfig) -> Result<Bundle> {
    let (normalized, meta) = normalize(dataset);
    let mut vae = VaeModel::dense(
        dataset.series_len(),
        dataset.channels(),
        cfg.latent_dim,
        &cfg.hidden,
        cfg.train_seed,
    )
    .map_err(CtsgError::Core)?;
    train(&mut vae, normalized.series(), &cfg.train_config(), cfg.kl_weight)
        .map_err(CtsgError::Core)?;
    let latents: Vec<Vec<f64>> = normalized
        .series()
        .iter()
        .map(|s| vae.encode(s).map(|(mu, _)| mu))
        .collect::<std::result::Result<_, _>>()
        .map_err(CtsgError::Core)?;
    let clusters = clustering::fit(
        normalized.conditions(),
        normalized.schema(),
        cfg.k,
        cfg.cluster_max_iterations,
        cfg.cluster_seed,
        cfg.gamma,
    )
    .map_err(CtsgError::Core)?;
    Ok(Bundle {
        vae,
        clusters,
        normalization: meta,
        latents,
        conditions: normalized.conditions().to_vec(),
        kl_weight: cfg.kl_weight,
    })
}

// ---------------------------------------------------------------------------
// Generation phase
// ---------------------------------------------------------------------------

/// One generation request, in raw (denormalized) space.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub x0: TimeSeries,
    pub c0: ConditionVector,
    pub c0_prime: ConditionVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub mode: String,
    /// Bracket endpoints in the normalized condition space the blend ran in.
    pub left_c: f64,
    pub right_c: f64,
    pub coefficient: f64,
}

fn witness_doc(w: &BlendWitness) -> WitnessDoc {
    WitnessDoc {
        mode: match w.mode {
            BlendMode::Exact => "exact",
            BlendMode::Interp => "interp",
            BlendMode::ExtrapAbove => "extrap_above",
            BlendMode::ExtrapBelow => "extrap_below",
        }
        .to_string(),
        left_c: w.left_c,
        right_c: w.right_c,
        coefficient: w.coefficient,
    }
}

/// Everything that produced one generated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub selected_clusters: Vec<usize>,
    pub xs_indices: Vec<usize>,
    pub xs_size: usize,
    pub mapping_variant: String,
    pub mapping_training_loss: f64,
    pub blend_strategy: String,
    pub blend_witness: Option<WitnessDoc>,
    pub altered_slots: Vec<String>,
    pub deterministic: bool,
    /// Wall time of selection + mapping fit + latent inference + decode.
    pub elapsed_ms: f64,
}

struct SelectedSubset {
    indices: Vec<usize>,
    conditions: Vec<ConditionVector>,
    latents: Vec<Vec<f64>>,
    selected_clusters: Vec<usize>,
}

fn run_selection(
    bundle: &Bundle,
    x0n: &TimeSeries,
    c0n: &ConditionVector,
    opts: &GenOptions,
) -> Result<SelectedSubset> {
    let n = bundle.conditions.len();
    match opts.selection_mode {
        SelectionMode::Full => {
            let cfg = SelectionConfig {
                k1: opts.k1.min(bundle.clusters.k()),
                k2: opts.k2,
                strategy: opts.strategy,
                seed: opts.selection_seed,
            };
            let result = select(
                x0n,
                c0n,
                &bundle.vae,
                &bundle.clusters,
                &bundle.conditions,
                &bundle.latents,
                &cfg,
            )
            .map_err(CtsgError::Core)?;
            Ok(SelectedSubset {
                indices: result.indices,
                conditions: result.conditions,
                latents: result.latents,
                selected_clusters: result.selected_clusters,
            })
        }
        SelectionMode::NoNns => {
            let k1 = opts.k1.min(bundle.clusters.k());
            let clusters = match opts.strategy {
                SelectionStrategy::Dcs => {
                    dcs(&bundle.clusters, c0n, k1).map_err(CtsgError::Core)?
                }
                SelectionStrategy::Rand => {
                    rand_select(&bundle.clusters, k1, opts.selection_seed)
                        .map_err(CtsgError::Core)?
                }
            };
            let mut indices = Vec::new();
            for &cluster in &clusters {
                indices.extend(bundle.clusters.members(cluster));
            }
            gather(bundle, indices, clusters)
        }
        SelectionMode::NoDcs => {
            let (z0_mu, _) = bundle.vae.encode(x0n).map_err(CtsgError::Core)?;
            let mut ranked: Vec<(f64, usize)> = bundle
                .latents
                .iter()
                .enumerate()
                .map(|(i, mu)| {
                    let d: f64 = mu
                        .iter()
                        .zip(z0_mu.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d, i)
                })
                .collect();
            ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let take = (opts.k1 * opts.k2).min(n);
            let indices: Vec<usize> = ranked.iter().take(take).map(|&(_, i)| i).collect();
            let mut clusters: Vec<usize> = indices
                .iter()
                .map(|&i| bundle.clusters.assignment()[i])
                .collect();
            clusters.sort_unstable();
            clusters.dedup();
            gather(bundle, indices, clusters)
        }
        SelectionMode::NoSelection => {
            let indices: Vec<usize> = (0..n).collect();
            let clusters: Vec<usize> = (0..bundle.clusters.k()).collect();
            gather(bundle, indices, clusters)
        }
    }
}

fn gather(bundle: &Bundle, indices: Vec<usize>, clusters: Vec<usize>) -> Result<SelectedSubset> {
    if indices.is_empty() {
        return Err(CtsgError::Core(CoreError::Empty("selected subset")));
    }
    Ok(SelectedSubset {
        conditions: indices.iter().map(|&i| bundle.conditions[i].clone()).collect(),
        latents: indices.iter().map(|&i| bundle.latents[i].clone()).collect(),
        indices,
        selected_clusters: clusters,
    })
}

/// Reject alterations that push a categorical slot outside its vocabulary:
/// nominal slots have no order to extrapolate along, and an unseen ordinal
/// token has no rank.
fn check_categorical_targets(bundle: &Bundle, c0_prime: &ConditionVector) -> Result<()> {
    let schema = bundle.clusters.schema();
    match schema.validate(c0_prime) {
        Ok(()) => Ok(()),
        Err(CoreError::UnknownCategory { slot, value }) => {
            let ordinal = schema
                .slot_index(&slot)
                .map(|i| match &schema.slot(i).kind {
                    SlotKind::Categorical { ordinal, .. } => *ordinal,
                    SlotKind::Numeric => false,
                })
                .unwrap_or(false);
            if ordinal {
                Err(CtsgError::Core(CoreError::UnknownCategory { slot, value }))
            } else {
                Err(CtsgError::Core(CoreError::NominalExtrapolation { slot }))
            }
        }
        Err(other) => Err(CtsgError::Core(other)),
    }
}

/// Generate a series for altered conditions. The bundle is read-only; the
/// mapping function is fitted on the fly from the selected subset.
pub fn generate(
    bundle: &Bundle,
    req: &GenerationRequest,
    opts: &GenOptions,
) -> Result<(TimeSeries, Provenance)> {
    let schema = bundle.clusters.schema();
    schema.validate(&req.c0).map_err(CtsgError::Core)?;
    check_categorical_targets(bundle, &req.c0_prime)?;

    let started = Instant::now();
    let x0n = normalize_series(&req.x0, &bundle.normalization)?;
    let c0n = normalize_condition(&req.c0, &bundle.normalization);
    let c0pn = normalize_condition(&req.c0_prime, &bundle.normalization);
    let altered = req.c0.differing_slots(&req.c0_prime);
    let altered_slots: Vec<String> = altered
        .iter()
        .map(|&i| schema.slot(i).name.clone())
        .collect();

    let subset = run_selection(bundle, &x0n, &c0n, opts)?;
    let model = mapping::fit(
        &subset.conditions,
        &subset.latents,
        schema,
        opts.mapping,
        &opts.tree,
    )
    .map_err(CtsgError::Core)?;

    let (mu0_prime, witness) = match opts.blend {
        BlendStrategy::DirectRegression => {
            (model.predict(&c0pn).map_err(CtsgError::Core)?, None)
        }
        BlendStrategy::BracketedLinear => {
            let (mu, w) = bracketed_blend(schema, &subset, &altered, &c0pn)?;
            (mu, Some(w))
        }
    };

    let z0_prime = if opts.deterministic {
        mu0_prime
    } else {
        let (_, log_var0) = bundle.vae.encode(&x0n).map_err(CtsgError::Core)?;
        let mut noise = vec![0.0; bundle.vae.latent_dim()];
        SeedRng::new(opts.noise_seed).fill_normal(&mut noise);
        mapping::sample_latent(&mu0_prime, &log_var0, &noise).map_err(CtsgError::Core)?
    };
    let decoded = bundle.vae.decode(&z0_prime).map_err(CtsgError::Core)?;
    let output = denormalize_series(&decoded, &bundle.normalization)?;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;

    let provenance = Provenance {
        selected_clusters: subset.selected_clusters,
        xs_size: subset.indices.len(),
        xs_indices: subset.indices,
        mapping_variant: format!("{:?}", opts.mapping).to_lowercase(),
        mapping_training_loss: model.training_loss(),
        blend_strategy: match opts.blend {
            BlendStrategy::DirectRegression => "direct-regression",
            BlendStrategy::BracketedLinear => "bracketed-linear",
        }
        .to_string(),
        blend_witness: witness.as_ref().map(witness_doc),
        altered_slots,
        deterministic: opts.deterministic,
        elapsed_ms,
    };
    Ok((output, provenance))
}

/// Single-altered-condition blend over the selected subset's
/// (condition value, mean latent) pairs.
fn bracketed_blend(
    schema: &ctsg_core::ConditionSchema,
    subset: &SelectedSubset,
    altered: &[usize],
    c0pn: &ConditionVector,
) -> Result<(Vec<f64>, BlendWitness)> {
    if altered.len() != 1 {
        return Err(CtsgError::invalid(format!(
            "bracketed-linear blending needs exactly one altered condition, got {} \
             (use direct-regression for multi-condition edits)",
            altered.len()
        )));
    }
    let slot = altered[0];
    let slot_value = |c: &ConditionVector| -> Result<f64> {
        match (&schema.slot(slot).kind, c.value(slot)) {
            (SlotKind::Numeric, ConditionValue::Numeric(v)) => Ok(*v),
            (SlotKind::Categorical { ordinal: true, .. }, ConditionValue::Category(tok)) => {
                // Ordinal categories blend over their vocabulary rank.
                Ok(schema.category_index(slot, tok).map_err(CtsgError::Core)? as f64)
            }
            (SlotKind::Categorical { ordinal: false, .. }, _) => {
                Err(CtsgError::Core(CoreError::NominalExtrapolation {
                    slot: schema.slot(slot).name.clone(),
                }))
            }
            _ => Err(CtsgError::invalid("slot value does not match its kind")),
        }
    };
    let target = slot_value(c0pn)?;
    let samples: Vec<(f64, Vec<f64>)> = subset
        .conditions
        .iter()
        .zip(subset.latents.iter())
        .map(|(c, mu)| slot_value(c).map(|v| (v, mu.clone())))
        .collect::<Result<_>>()?;
    let pairs = ConditionLatentPairs::from_samples(&samples).map_err(CtsgError::Core)?;
    blend(&pairs, target).map_err(CtsgError::Core)
}

// ---------------------------------------------------------------------------
// Class handling shared by the protocols
// ---------------------------------------------------------------------------

/// Distinct values of one condition slot, treated as class levels.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassLevels {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl ClassLevels {
    pub fn len(&self) -> usize {
        match self {
            ClassLevels::Numeric(v) => v.len(),
            ClassLevels::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn value(&self, class: usize) -> ConditionValue {
        match self {
            ClassLevels::Numeric(v) => ConditionValue::Numeric(v[class]),
            ClassLevels::Categorical(v) => ConditionValue::Category(v[class].clone()),
        }
    }
}

/// Enumerate the class levels of a slot and label every row.
pub fn class_labels(dataset: &Dataset, class_slot: &str) -> Result<(ClassLevels, Vec<usize>, usize)> {
    let slot = dataset
        .schema()
        .slot_index(class_slot)
        .ok_or_else(|| CtsgError::invalid(format!("no condition slot named {class_slot:?}")))?;
    let levels = match &dataset.schema().slot(slot).kind {
        SlotKind::Numeric => {
            let mut values: Vec<f64> = Vec::new();
            for c in dataset.conditions() {
                let v = c.value(slot).as_numeric().unwrap();
                if !values.contains(&v) {
                    values.push(v);
                }
            }
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ClassLevels::Numeric(values)
        }
        SlotKind::Categorical { vocabulary, .. } => {
            let present: Vec<String> = vocabulary
                .iter()
                .filter(|tok| {
                    dataset
                        .conditions()
                        .iter()
                        .any(|c| c.value(slot).as_category() == Some(tok.as_str()))
                })
                .cloned()
                .collect();
            ClassLevels::Categorical(present)
        }
    };
    if levels.len() < 2 {
        return Err(CtsgError::invalid(format!(
            "class slot {class_slot:?} has fewer than two levels"
        )));
    }
    if levels.len() > 16 {
        return Err(CtsgError::invalid(format!(
            "class slot {class_slot:?} has {} distinct values; not class-like",
            levels.len()
        )));
    }
    let labels: Vec<usize> = dataset
        .conditions()
        .iter()
        .map(|c| match (&levels, c.value(slot)) {
            (ClassLevels::Numeric(vs), ConditionValue::Numeric(v)) => {
                vs.iter().position(|x| x == v).unwrap()
            }
            (ClassLevels::Categorical(vs), ConditionValue::Category(tok)) => {
                vs.iter().position(|x| x == tok).unwrap()
            }
            _ => unreachable!("schema validated on load"),
        })
        .collect();
    Ok((levels, labels, slot))
}

// ---------------------------------------------------------------------------
// Evaluation protocols
// ---------------------------------------------------------------------------

fn default_eval_pairs() -> usize {
    64
}
fn default_rocket_kernels() -> usize {
    1000
}
fn default_fractions() -> (f64, f64, f64) {
    (0.6, 0.2, 0.2)
}
fn default_ecod_quantile() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterpolationProtocol {
    /// Condition slot whose levels define the classes.
    pub class_slot: String,
    pub eval_pairs: usize,
    pub rocket_kernels: usize,
    pub rocket_seed: u64,
    pub split_fractions: (f64, f64, f64),
    pub split_seed: u64,
    pub request_seed: u64,
    /// Skip generation and score the held-out set itself (the baseline row).
    pub validation_only: bool,
    pub max_lag: Option<usize>,
}

impl Default for InterpolationProtocol {
    fn default() -> Self {
        InterpolationProtocol {
            class_slot: "amplitude".to_string(),
            eval_pairs: default_eval_pairs(),
            rocket_kernels: default_rocket_kernels(),
            rocket_seed: 7,
            split_fractions: default_fractions(),
            split_seed: 11,
            request_seed: 13,
            validation_only: false,
            max_lag: None,
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Fidelity and coherence of a generated (or comparison) set against its
/// paired inputs.
fn pairwise_metrics(
    bundle: &Bundle,
    inputs: &[TimeSeries],
    outputs: &[TimeSeries],
    max_lag: Option<usize>,
) -> Result<(FidelityMetrics, CoherenceMetrics)> {
    let mut eds = Vec::with_capacity(inputs.len());
    let mut dtws = Vec::with_capacity(inputs.len());
    let mut acds = Vec::with_capacity(inputs.len());
    let lag = max_lag.unwrap_or_else(|| default_max_lag(inputs[0].len()));
    for (x, y) in inputs.iter().zip(outputs.iter()) {
        eds.push(ed(x, y).map_err(CtsgError::Core)?);
        dtws.push(dtw(x, y).map_err(CtsgError::Core)?);
        acds.push(acd(x, y, lag).map_err(CtsgError::Core)?);
    }
    let embed = |s: &TimeSeries| {
        let normalized = normalize_series(s, &bundle.normalization).map_err(|_| {
            CoreError::NonFinite {
                what: "embedding normalization",
            }
        })?;
        bundle.vae.encode(&normalized).map(|(mu, _)| mu)
    };
    let cfid_value = cfid(inputs, outputs, embed).map_err(CtsgError::Core)?;
    Ok((
        FidelityMetrics {
            ed_mean: mean(&eds),
            dtw_mean: mean(&dtws),
        },
        CoherenceMetrics {
            cfid: cfid_value,
            acd_mean: mean(&acds),
        },
    ))
}

/// Draw `count` row indices from `0..n`, distinct while possible, then
/// cycling with fresh draws.
fn draw_rows(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = SeedRng::new(seed);
    if count <= n {
        rng.sample_distinct(n, count)
    } else {
        (0..count).map(|_| rng.index(n)).collect()
    }
}

/// Interpolation protocol: a random-kernel classifier is fitted on the
/// train split and asked to recognize the class that each generated series
/// was requested to follow.
pub fn evaluate_interpolation(
    bundle: &Bundle,
    dataset: &Dataset,
    protocol: &InterpolationProtocol,
    opts: &GenOptions,
    variant: &str,
) -> Result<EvalReport> {
    let (levels, labels, slot) = class_labels(dataset, &protocol.class_slot)?;
    let n = dataset.len();
    let mut indices: Vec<usize> = (0..n).collect();
    SeedRng::new(protocol.split_seed).shuffle(&mut indices);
    let (f1, f2, _) = protocol.split_fractions;
    let n1 = ((f1 * n as f64).round() as usize).clamp(1, n - 2);
    let n2 = ((f2 * n as f64).round() as usize).clamp(1, n - n1 - 1);
    let train_rows = &indices[..n1];
    let val_rows = &indices[n1..n1 + n2];
    let test_rows = &indices[n1 + n2..];

    let train_series: Vec<TimeSeries> =
        train_rows.iter().map(|&i| dataset.series()[i].clone()).collect();
    let train_labels: Vec<usize> = train_rows.iter().map(|&i| labels[i]).collect();
    let classifier = rocket_fit(
        &train_series,
        &train_labels,
        protocol.rocket_kernels,
        protocol.rocket_seed,
    )
    .map_err(CtsgError::Core)?;

    let mut val_preds = Vec::with_capacity(val_rows.len());
    for &i in val_rows {
        val_preds.push(
            rocket_predict(&classifier, &dataset.series()[i])
                .map_err(CtsgError::Core)?
                .0,
        );
    }
    let val_labels: Vec<usize> = val_rows.iter().map(|&i| labels[i]).collect();
    let validation_acc = accuracy(&val_labels, &val_preds).map_err(CtsgError::Core)?;
    let validation_wf1 = weighted_f1(&val_labels, &val_preds).map_err(CtsgError::Core)?;

    let echo = serde_json::json!({
        "protocol": protocol,
        "classes": levels.len(),
        "k1": opts.k1,
        "k2": opts.k2,
        "selection_mode": format!("{:?}", opts.selection_mode),
        "strategy": format!("{:?}", opts.strategy),
        "mapping": format!("{:?}", opts.mapping),
        "blend": format!("{:?}", opts.blend),
        "rocket_lambda": classifier.ridge_lambda,
        "validation_acc": validation_acc,
        "validation_weighted_f1": validation_wf1,
    });

    if protocol.validation_only {
        // Baseline row: the held-out set scored directly, no generation.
        let picked = draw_rows(val_rows.len(), protocol.eval_pairs.min(val_rows.len()), protocol.request_seed);
        let val_sample: Vec<TimeSeries> = picked
            .iter()
            .map(|&i| dataset.series()[val_rows[i]].clone())
            .collect();
        let train_sample: Vec<TimeSeries> = draw_rows(
            train_rows.len(),
            val_sample.len(),
            protocol.request_seed ^ 0x9e3779b97f4a7c15,
        )
        .iter()
        .map(|&i| dataset.series()[train_rows[i]].clone())
        .collect();
        let (fidelity, coherence) =
            pairwise_metrics(bundle, &train_sample, &val_sample, protocol.max_lag)?;
        let report = EvalReport {
            scenario: "interpolation".to_string(),
            variant: "validation".to_string(),
            fidelity,
            coherence,
            controllability: Controllability::Classifier {
                acc: validation_acc,
                weighted_f1: validation_wf1,
            },
            counts: SampleCounts {
                train: train_rows.len(),
                validation: val_rows.len(),
                test: test_rows.len(),
                generated: 0,
            },
            config_echo: echo,
        };
        report.check()?;
        return Ok(report);
    }

    // Generation requests drawn from the test split; each request retargets
    // the class slot to a different level, cycling deterministically.
    let picked = draw_rows(test_rows.len(), protocol.eval_pairs, protocol.request_seed);
    let mut inputs = Vec::with_capacity(picked.len());
    let mut generated = Vec::with_capacity(picked.len());
    let mut requested = Vec::with_capacity(picked.len());
    for (r, &pick) in picked.iter().enumerate() {
        let row = test_rows[pick];
        let x0 = dataset.series()[row].clone();
        let c0 = dataset.conditions()[row].clone();
        let own = labels[row];
        let target = (own + 1 + r % (levels.len() - 1)) % levels.len();
        let mut c0_prime = c0.clone();
        c0_prime.set(slot, levels.value(target));
        let (x_gen, _) = generate(
            bundle,
            &GenerationRequest {
                x0: x0.clone(),
                c0,
                c0_prime,
            },
            opts,
        )?;
        inputs.push(x0);
        generated.push(x_gen);
        requested.push(target);
    }
    let mut preds = Vec::with_capacity(generated.len());
    for x in &generated {
        preds.push(rocket_predict(&classifier, x).map_err(CtsgError::Core)?.0);
    }
    let acc = accuracy(&requested, &preds).map_err(CtsgError::Core)?;
    let wf1 = weighted_f1(&requested, &preds).map_err(CtsgError::Core)?;
    let (fidelity, coherence) = pairwise_metrics(bundle, &inputs, &generated, protocol.max_lag)?;

    let report = EvalReport {
        scenario: "interpolation".to_string(),
        variant: variant.to_string(),
        fidelity,
        coherence,
        controllability: Controllability::Classifier {
            acc,
            weighted_f1: wf1,
        },
        counts: SampleCounts {
            train: train_rows.len(),
            validation: val_rows.len(),
            test: test_rows.len(),
            generated: generated.len(),
        },
        config_echo: echo,
    };
    report.check()?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtrapolationProtocol {
    /// Numeric slot pushed beyond its training range.
    pub target_slot: String,
    /// Raw-space extreme value requested for every generated series.
    pub target_value: f64,
    pub eval_pairs: usize,
    pub ecod_quantile: f64,
    pub split_fractions: (f64, f64, f64),
    pub split_seed: u64,
    pub request_seed: u64,
    pub validation_only: bool,
    pub max_lag: Option<usize>,
}

impl Default for ExtrapolationProtocol {
    fn default() -> Self {
        ExtrapolationProtocol {
            target_slot: "amplitude".to_string(),
            target_value: 3.0,
            eval_pairs: default_eval_pairs(),
            ecod_quantile: default_ecod_quantile(),
            split_fractions: default_fractions(),
            split_seed: 11,
            request_seed: 13,
            validation_only: false,
            max_lag: None,
        }
    }
}

/// Extrapolation protocol: an outlier detector trained on normal series
/// should flag series generated under the extreme condition, while the
/// generated series still resemble their inputs.
pub fn evaluate_extrapolation(
    bundle: &Bundle,
    dataset: &Dataset,
    protocol: &ExtrapolationProtocol,
    opts: &GenOptions,
    variant: &str,
) -> Result<EvalReport> {
    let slot = dataset
        .schema()
        .slot_index(&protocol.target_slot)
        .ok_or_else(|| {
            CtsgError::invalid(format!("no condition slot named {:?}", protocol.target_slot))
        })?;
    if !dataset.schema().slot(slot).is_numeric() {
        return Err(CtsgError::invalid(format!(
            "extrapolation target slot {:?} must be numeric",
            protocol.target_slot
        )));
    }
    let (train_d, val_d, test_d) = split(dataset, protocol.split_fractions, protocol.split_seed)?;
    let detector =
        ecod_fit(train_d.series(), protocol.ecod_quantile).map_err(CtsgError::Core)?;

    let val_flags: Vec<bool> = val_d
        .series()
        .iter()
        .map(|s| ecod_flag(&detector, s))
        .collect::<std::result::Result<_, _>>()
        .map_err(CtsgError::Core)?;
    let flag_rate_validation =
        val_flags.iter().filter(|&&f| f).count() as f64 / val_flags.len() as f64;

    let echo = serde_json::json!({
        "protocol": protocol,
        "k1": opts.k1,
        "k2": opts.k2,
        "selection_mode": format!("{:?}", opts.selection_mode),
        "strategy": format!("{:?}", opts.strategy),
        "mapping": format!("{:?}", opts.mapping),
        "blend": format!("{:?}", opts.blend),
        "ecod_threshold": detector.threshold(),
    });

    if protocol.validation_only {
        let picked = draw_rows(val_d.len(), protocol.eval_pairs.min(val_d.len()), protocol.request_seed);
        let val_sample: Vec<TimeSeries> =
            picked.iter().map(|&i| val_d.series()[i].clone()).collect();
        let train_sample: Vec<TimeSeries> = draw_rows(
            train_d.len(),
            val_sample.len(),
            protocol.request_seed ^ 0x9e3779b97f4a7c15,
        )
        .iter()
        .map(|&i| train_d.series()[i].clone())
        .collect();
        let (fidelity, coherence) =
            pairwise_metrics(bundle, &train_sample, &val_sample, protocol.max_lag)?;
        let report = EvalReport {
            scenario: "extrapolation".to_string(),
            variant: "validation".to_string(),
            fidelity,
            coherence,
            controllability: Controllability::Detector {
                acc: 1.0 - flag_rate_validation,
                auc: None,
                flag_rate_generated: None,
                flag_rate_validation,
            },
            counts: SampleCounts {
                train: train_d.len(),
                validation: val_d.len(),
                test: test_d.len(),
                generated: 0,
            },
            config_echo: echo,
        };
        report.check()?;
        return Ok(report);
    }

    let picked = draw_rows(test_d.len(), protocol.eval_pairs, protocol.request_seed);
    let mut inputs = Vec::with_capacity(picked.len());
    let mut generated = Vec::with_capacity(picked.len());
    for &pick in &picked {
        let x0 = test_d.series()[pick].clone();
        let c0 = test_d.conditions()[pick].clone();
        let mut c0_prime = c0.clone();
        c0_prime.set(slot, ConditionValue::Numeric(protocol.target_value));
        let (x_gen, _) = generate(
            bundle,
            &GenerationRequest {
                x0: x0.clone(),
                c0,
                c0_prime,
            },
            opts,
        )?;
        inputs.push(x0);
        generated.push(x_gen);
    }

    let gen_flags: Vec<bool> = generated
        .iter()
        .map(|s| ecod_flag(&detector, s))
        .collect::<std::result::Result<_, _>>()
        .map_err(CtsgError::Core)?;
    let flag_rate_generated =
        gen_flags.iter().filter(|&&f| f).count() as f64 / gen_flags.len() as f64;

    // Detector accuracy over held-out normals (not flagged = correct) and
    // generated extremes (flagged = correct), plus the ranking AUC.
    let correct = val_flags.iter().filter(|&&f| !f).count()
        + gen_flags.iter().filter(|&&f| f).count();
    let acc_value = correct as f64 / (val_flags.len() + gen_flags.len()) as f64;
    let mut auc_labels = Vec::new();
    let mut auc_scores = Vec::new();
    for s in val_d.series() {
        auc_labels.push(false);
        auc_scores.push(ecod_score(&detector, s).map_err(CtsgError::Core)?);
    }
    for s in &generated {
        auc_labels.push(true);
        auc_scores.push(ecod_score(&detector, s).map_err(CtsgError::Core)?);
    }
    let auc_value = auc(&auc_labels, &auc_scores).map_err(CtsgError::Core)?;
    let (fidelity, coherence) = pairwise_metrics(bundle, &inputs, &generated, protocol.max_lag)?;

    let report = EvalReport {
        scenario: "extrapolation".to_string(),
        variant: variant.to_string(),
        fidelity,
        coherence,
        controllability: Controllability::Detector {
            acc: acc_value,
            auc: Some(auc_value),
            flag_rate_generated: Some(flag_rate_generated),
            flag_rate_validation,
        },
        counts: SampleCounts {
            train: train_d.len(),
            validation: val_d.len(),
            test: test_d.len(),
            generated: generated.len(),
        },
        config_echo: echo,
    };
    report.check()?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

/// One row of the ablation table.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationVariant {
    pub name: String,
    pub selection_mode: SelectionMode,
    pub strategy: SelectionStrategy,
    pub mapping: MappingVariant,
}

impl AblationVariant {
    fn new(
        name: &str,
        selection_mode: SelectionMode,
        strategy: SelectionStrategy,
        mapping: MappingVariant,
    ) -> Self {
        AblationVariant {
            name: name.to_string(),
            selection_mode,
            strategy,
            mapping,
        }
    }
}

/// The standard ablation grid: the full pipeline, the three selection
/// ablations, and the strategy x regressor benchmark grid (DCS-DT is the
/// full pipeline itself).
pub fn standard_variants() -> Vec<AblationVariant> {
    use MappingVariant::{Forest, Linear, Tree};
    use SelectionMode::{Full, NoDcs, NoNns, NoSelection};
    use SelectionStrategy::{Dcs, Rand};
    vec![
        AblationVariant::new("CTS", Full, Dcs, Tree),
        AblationVariant::new("CTS-NNS", NoNns, Dcs, Tree),
        AblationVariant::new("CTS-DCS", NoDcs, Dcs, Tree),
        AblationVariant::new("CTS-NNS-DCS", NoSelection, Dcs, Tree),
        AblationVariant::new("Rand-LR", Full, Rand, Linear),
        AblationVariant::new("Rand-RF", Full, Rand, Forest),
        AblationVariant::new("Rand-DT", Full, Rand, Tree),
        AblationVariant::new("DCS-LR", Full, Dcs, Linear),
        AblationVariant::new("DCS-RF", Full, Dcs, Forest),
    ]
}

/// Run the interpolation protocol once per variant against a shared bundle.
pub fn ablate(
    bundle: &Bundle,
    dataset: &Dataset,
    protocol: &InterpolationProtocol,
    base: &GenOptions,
    variants: &[AblationVariant],
) -> Result<Vec<EvalReport>> {
    let mut reports = Vec::with_capacity(variants.len());
    for variant in variants {
        let opts = GenOptions {
            selection_mode: variant.selection_mode,
            strategy: variant.strategy,
            mapping: variant.mapping,
            ..base.clone()
        };
        reports.push(evaluate_interpolation(
            bundle,
            dataset,
            protocol,
            &opts,
            &variant.name,
        )?);
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Sensitivity sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrids {
    pub k: Vec<usize>,
    pub k1_ratio: Vec<f64>,
    pub k2_ratio: Vec<f64>,
}

impl Default for SweepGrids {
    fn default() -> Self {
        SweepGrids {
            k: vec![5, 10, 20, 50],
            k1_ratio: vec![0.2, 0.4, 0.6, 0.8],
            k2_ratio: vec![0.2, 0.4, 0.6],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub k: usize,
    pub k1_ratio: f64,
    pub k2_ratio: f64,
    pub k1: usize,
    pub k2: usize,
    pub request_seed: u64,
    pub report: EvalReport,
}

/// Metric surfaces over the cluster-count and selection-ratio grids. The
/// VAE is shared across cells; only the clustering is refitted per k.
pub fn sweep(
    dataset: &Dataset,
    cfg: &PipelineConfig,
    grids: &SweepGrids,
    protocol: &InterpolationProtocol,
) -> Result<Vec<SweepCell>> {
    if grids.k.is_empty() || grids.k1_ratio.is_empty() || grids.k2_ratio.is_empty() {
        return Err(CtsgError::invalid("sweep grids must be nonempty"));
    }
    let base_bundle = train_phase(dataset, cfg)?;
    let n = dataset.len();
    let mut cells = Vec::new();
    for &k in &grids.k {
        let clusters = clustering::fit(
            &base_bundle.conditions,
            base_bundle.clusters.schema(),
            k,
            cfg.cluster_max_iterations,
            cfg.cluster_seed,
            cfg.gamma,
        )
        .map_err(CtsgError::Core)?;
        let bundle_k = Bundle {
            clusters,
            ..base_bundle.clone()
        };
        let avg_cluster = n as f64 / k as f64;
        for &r1 in &grids.k1_ratio {
            for &r2 in &grids.k2_ratio {
                let k1 = ((r1 * k as f64).round() as usize).clamp(1, k);
                let k2 = ((r2 * avg_cluster).round() as usize).max(1);
                let opts = GenOptions {
                    k1,
                    k2,
                    ..cfg.gen_options(n, k)
                };
                let report = evaluate_interpolation(
                    &bundle_k,
                    dataset,
                    protocol,
                    &opts,
                    &format!("k={k},k1/k={r1},k2/|Xc|={r2}"),
                )?;
                cells.push(SweepCell {
                    k,
                    k1_ratio: r1,
                    k2_ratio: r2,
                    k1,
                    k2,
                    request_seed: protocol.request_seed,
                    report,
                });
            }
        }
    }
    Ok(cells)
}

/// Plot-ready CSV of a sweep: one row per cell.
pub fn sweep_to_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from(
        "k,k1_ratio,k2_ratio,k1,k2,request_seed,acc,weighted_f1,ed_mean,dtw_mean,cfid,acd_mean\n",
    );
    for cell in cells {
        let (acc, wf1) = match &cell.report.controllability {
            Controllability::Classifier { acc, weighted_f1 } => (*acc, *weighted_f1),
            Controllability::Detector { acc, auc, .. } => (*acc, auc.unwrap_or(f64::NAN)),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            cell.k,
            cell.k1_ratio,
            cell.k2_ratio,
            cell.k1,
            cell.k2,
            cell.request_seed,
            acc,
            wf1,
            cell.report.fidelity.ed_mean,
            cell.report.fidelity.dtw_mean,
            cell.report.coherence.cfid,
            cell.report.coherence.acd_mean,
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Explain
// ---------------------------------------------------------------------------

/// Selection + mapping fit for one request, returning the fitted mapping
/// model for rule dumps and importances (no decoding).
pub fn fit_mapping_for_request(
    bundle: &Bundle,
    req: &GenerationRequest,
    opts: &GenOptions,
) -> Result<(MappingModel, Provenance)> {
    let schema = bundle.clusters.schema();
    schema.validate(&req.c0).map_err(CtsgError::Core)?;
    let x0n = normalize_series(&req.x0, &bundle.normalization)?;
    let c0n = normalize_condition(&req.c0, &bundle.normalization);
    let subset = run_selection(bundle, &x0n, &c0n, opts)?;
    let model = mapping::fit(
        &subset.conditions,
        &subset.latents,
        schema,
        opts.mapping,
        &opts.tree,
    )
    .map_err(CtsgError::Core)?;
    let provenance = Provenance {
        selected_clusters: subset.selected_clusters,
        xs_size: subset.indices.len(),
        xs_indices: subset.indices,
        mapping_variant: format!("{:?}", opts.mapping).to_lowercase(),
        mapping_training_loss: model.training_loss(),
        blend_strategy: "n/a".to_string(),
        blend_witness: None,
        altered_slots: req.c0.differing_slots(&req.c0_prime)
            .iter()
            .map(|&i| schema.slot(i).name.clone())
            .collect(),
        deterministic: opts.deterministic,
        elapsed_ms: 0.0,
    };
    Ok((model, provenance))
}

/// JSON rendering of a mapping explanation: tree nodes carry the split
/// feature/threshold (or category) and children; leaves carry the latent
/// vector.
pub fn explanation_to_json(model: &MappingModel) -> serde_json::Value {
    use ctsg_core::mapping::{MappingParams, TreeNode};
    fn node_json(model: &MappingModel, nodes: &[TreeNode], at: usize) -> serde_json::Value {
        match &nodes[at] {
            TreeNode::Leaf { value, count } => serde_json::json!({
                "leaf": value,
                "count": count,
            }),
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                gain,
            } => {
                let col = &model.columns()[*feature];
                let mut obj = serde_json::json!({
                    "feature": col.name,
                    "gain": gain,
                    "left": node_json(model, nodes, *left),
                    "right": node_json(model, nodes, *right),
                });
                match &col.category {
                    Some(cat) => {
                        obj["category"] = serde_json::json!(cat);
                    }
                    None => {
                        obj["threshold"] = serde_json::json!(threshold);
                    }
                }
                obj
            }
        }
    }
    match (model.params(), model.explain()) {
        (MappingParams::Tree(tree), Explanation::Tree(e)) => serde_json::json!({
            "variant": "tree",
            "importances": e.importances,
            "tree": node_json(model, tree.nodes(), 0),
        }),
        (MappingParams::Forest(trees), Explanation::Forest(e)) => serde_json::json!({
            "variant": "forest",
            "importances": e.importances,
            "trees": trees
                .iter()
                .map(|t| node_json(model, t.nodes(), 0))
                .collect::<Vec<_>>(),
        }),
        (_, Explanation::Linear { coefficients }) => serde_json::json!({
            "variant": "linear",
            "flag": "linear variant has no rules; coefficients reported instead",
            "coefficients": coefficients,
        }),
        _ => unreachable!("explanation variant always matches params"),
    }
}

/// Indented-text rendering of a mapping explanation.
pub fn explanation_to_text(model: &MappingModel) -> String {
    match model.explain() {
        Explanation::Tree(e) | Explanation::Forest(e) => {
            let mut out = String::new();
            out.push_str("importances:\n");
            for (name, value) in &e.importances {
                out.push_str(&format!("  {name}: {value:.4}\n"));
            }
            out.push_str("rules:\n");
            for line in e.rules.lines() {
                out.push_str("  ");
                out.push_str(line);
                out.push('\n');
            }
            out
        }
        Explanation::Linear { coefficients } => {
            let mut out = String::from("linear variant (no rules); coefficients:\n");
            for (name, values) in &coefficients {
                let rendered: Vec<String> =
                    values.iter().map(|v| format!("{v:.4}")).collect();
                out.push_str(&format!("  {name}: [{}]\n", rendered.join(", ")));
            }
            out
        }
    }
}
