//! Trained-pipeline bundle: the VAE, the condition clustering, the
//! normalization metadata, and the cached per-series mean latents, all in
//! one versioned JSON document.
//!
//! Network parameters serialize as flat row-major arrays per layer (weights
//! then bias), so the document is diffable and a load/save round trip
//! reproduces bitwise-identical predictions.

use std::fs;
use std::path::Path;

use ctsg_core::clustering::ClusterModel;
use ctsg_core::math::Mat;
use ctsg_core::nn::{Activation, DenseNet, Layer};
use ctsg_core::vae::VaeModel;
use ctsg_core::{ConditionSchema, ConditionValue, ConditionVector};
use serde::{Deserialize, Serialize};

use crate::data::{schema_from_docs, schema_to_docs, NormalizationMeta, SlotDoc};
use crate::error::{io_err, json_err, CtsgError, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Everything the generation phase needs; immutable once trained.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub vae: VaeModel,
    pub clusters: ClusterModel,
    pub normalization: NormalizationMeta,
    /// Encoder mean for every training series (normalized space).
    pub latents: Vec<Vec<f64>>,
    /// Normalized training condition vectors, parallel to `latents`.
    pub conditions: Vec<ConditionVector>,
    /// KL weight the VAE was trained with (kept for reporting).
    pub kl_weight: f64,
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    output_dim: usize,
    input_dim: usize,
    /// Row-major `output_dim x input_dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: String,
}

#[derive(Serialize, Deserialize)]
struct NetDoc {
    layers: Vec<LayerDoc>,
}

#[derive(Serialize, Deserialize)]
struct VaeDoc {
    latent_dim: usize,
    series_len: usize,
    channels: usize,
    encoder: NetDoc,
    decoder: NetDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ValueDoc {
    Numeric(f64),
    Category(String),
}

type CondDoc = Vec<ValueDoc>;

#[derive(Serialize, Deserialize)]
struct ClusterDoc {
    k: usize,
    gamma: f64,
    iterations_run: usize,
    schema: Vec<SlotDoc>,
    centers: Vec<CondDoc>,
    assignment: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct BundleDoc {
    format_version: u32,
    vae: VaeDoc,
    clusters: ClusterDoc,
    normalization: NormalizationMeta,
    latents: Vec<Vec<f64>>,
    conditions: Vec<CondDoc>,
    kl_weight: f64,
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Identity => "identity",
        Activation::Relu => "relu",
        Activation::Tanh => "tanh",
    }
}

fn activation_from_name(name: &str) -> Result<Activation> {
    match name {
        "identity" => Ok(Activation::Identity),
        "relu" => Ok(Activation::Relu),
        "tanh" => Ok(Activation::Tanh),
        other => Err(CtsgError::invalid(format!("unknown activation {other:?}"))),
    }
}

fn net_to_doc(net: &DenseNet) -> NetDoc {
    NetDoc {
        layers: net
            .layers()
            .iter()
            .map(|l| LayerDoc {
                output_dim: l.output_dim(),
                input_dim: l.input_dim(),
                weights: l.weights.data().to_vec(),
                bias: l.bias.clone(),
                activation: activation_name(l.activation).to_string(),
            })
            .collect(),
    }
}

fn net_from_doc(doc: &NetDoc) -> Result<DenseNet> {
    let layers: Result<Vec<Layer>> = doc
        .layers
        .iter()
        .map(|l| {
            let weights = Mat::from_vec(l.output_dim, l.input_dim, l.weights.clone())
                .map_err(CtsgError::Core)?;
            Layer::new(weights, l.bias.clone(), activation_from_name(&l.activation)?)
                .map_err(CtsgError::Core)
        })
        .collect();
    DenseNet::new(layers?).map_err(CtsgError::Core)
}

fn condition_to_doc(c: &ConditionVector) -> CondDoc {
    c.values()
        .iter()
        .map(|v| match v {
            ConditionValue::Numeric(x) => ValueDoc::Numeric(*x),
            ConditionValue::Category(tok) => ValueDoc::Category(tok.clone()),
        })
        .collect()
}

fn condition_from_doc(doc: &CondDoc) -> ConditionVector {
    ConditionVector::new(
        doc.iter()
            .map(|v| match v {
                ValueDoc::Numeric(x) => ConditionValue::Numeric(*x),
                ValueDoc::Category(tok) => ConditionValue::Category(tok.clone()),
            })
            .collect(),
    )
}

fn bundle_to_doc(bundle: &Bundle) -> BundleDoc {
    BundleDoc {
        format_version: FORMAT_VERSION,
        vae: VaeDoc {
            latent_dim: bundle.vae.latent_dim(),
            series_len: bundle.vae.series_len(),
            channels: bundle.vae.channels(),
            encoder: net_to_doc(bundle.vae.encoder()),
            decoder: net_to_doc(bundle.vae.decoder()),
        },
        clusters: ClusterDoc {
            k: bundle.clusters.k(),
            gamma: bundle.clusters.gamma(),
            iterations_run: bundle.clusters.iterations_run(),
            schema: schema_to_docs(bundle.clusters.schema()),
            centers: bundle.clusters.centers().iter().map(condition_to_doc).collect(),
            assignment: bundle.clusters.assignment().to_vec(),
        },
        normalization: bundle.normalization.clone(),
        latents: bundle.latents.clone(),
        conditions: bundle.conditions.iter().map(condition_to_doc).collect(),
        kl_weight: bundle.kl_weight,
    }
}

fn bundle_from_doc(doc: BundleDoc) -> Result<Bundle> {
    if doc.format_version != FORMAT_VERSION {
        return Err(CtsgError::FormatVersion {
            found: doc.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let encoder = net_from_doc(&doc.vae.encoder)?;
    let decoder = net_from_doc(&doc.vae.decoder)?;
    let vae = VaeModel::new(
        encoder,
        decoder,
        doc.vae.latent_dim,
        doc.vae.series_len,
        doc.vae.channels,
    )
    .map_err(CtsgError::Core)?;
    let schema: ConditionSchema = schema_from_docs(&doc.clusters.schema)?;
    let centers: Vec<ConditionVector> =
        doc.clusters.centers.iter().map(condition_from_doc).collect();
    if centers.len() != doc.clusters.k {
        return Err(CtsgError::invalid(format!(
            "bundle declares k = {} but stores {} centers",
            doc.clusters.k,
            centers.len()
        )));
    }
    let clusters = ClusterModel::from_parts(
        centers,
        doc.clusters.assignment,
        schema,
        doc.clusters.gamma,
        doc.clusters.iterations_run,
    )
    .map_err(CtsgError::Core)?;
    let conditions: Vec<ConditionVector> =
        doc.conditions.iter().map(condition_from_doc).collect();
    if conditions.len() != doc.latents.len() {
        return Err(CtsgError::invalid(format!(
            "bundle stores {} conditions but {} latents",
            conditions.len(),
            doc.latents.len()
        )));
    }
    if conditions.len() != clusters.assignment().len() {
        return Err(CtsgError::invalid(format!(
            "bundle stores {} conditions but assigns {} rows",
            conditions.len(),
            clusters.assignment().len()
        )));
    }
    for mu in &doc.latents {
        if mu.len() != doc.vae.latent_dim {
            return Err(CtsgError::invalid(format!(
                "cached latent of width {} does not match latent_dim {}",
                mu.len(),
                doc.vae.latent_dim
            )));
        }
    }
    Ok(Bundle {
        vae,
        clusters,
        normalization: doc.normalization,
        latents: doc.latents,
        conditions,
        kl_weight: doc.kl_weight,
    })
}

pub fn save_bundle(bundle: &Bundle, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    let doc = bundle_to_doc(bundle);
    let text = serde_json::to_string(&doc).map_err(|e| json_err("bundle", e))?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn load_bundle(path: &Path) -> Result<Bundle> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    // Check the version tag before strict field validation so a version
    // bump reports itself rather than a missing-field error.
    let probe: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| json_err("bundle", e))?;
    match probe.get("format_version").and_then(|v| v.as_u64()) {
        None => {
            return Err(CtsgError::invalid(
                "bundle is missing its format_version tag",
            ))
        }
        Some(v) if v != FORMAT_VERSION as u64 => {
            return Err(CtsgError::FormatVersion {
                found: v as u32,
                expected: FORMAT_VERSION,
            })
        }
        Some(_) => {}
    }
    let doc: BundleDoc = serde_json::from_str(&text).map_err(|e| json_err("bundle", e))?;
    bundle_from_doc(doc)
}
