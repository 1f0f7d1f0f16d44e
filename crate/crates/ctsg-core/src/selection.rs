//! Data selection for the generation phase.
//!
//! Two stages narrow the training set to the small subset the mapping
//! regressor is fitted on:
//!
//! * cluster choice — either diverse condition selection (the nearest half
//!   of the cluster centers to the input's conditions plus the furthest
//!   half) or a uniform random baseline;
//! * per-cluster nearest-neighbor search in latent space, ranking members by
//!   the Euclidean distance between their posterior mean and the input's.

use alloc::vec::Vec;

use crate::clustering::ClusterModel;
use crate::condition::ConditionVector;
use crate::error::{Error, Result};
use crate::math::squared_distance;
use crate::rng::SeedRng;
use crate::vae::VaeModel;
use crate::TimeSeries;

/// Which cluster-choice strategy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionStrategy {
    /// Nearest half plus furthest half of the cluster centers.
    Dcs,
    /// Uniform random clusters (baseline).
    Rand,
}

/// Selection parameters: `k1` clusters, `k2` neighbors per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub k1: usize,
    pub k2: usize,
    pub strategy: SelectionStrategy,
    /// Seed for the random baseline; ignored by DCS.
    pub seed: u64,
}

/// The selected subset: row indices into the training set together with the
/// gathered conditions and mean latents the mapping stage consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub indices: Vec<usize>,
    pub conditions: Vec<ConditionVector>,
    pub latents: Vec<Vec<f64>>,
    /// Source cluster of each selected index, parallel to `indices`.
    pub source_cluster: Vec<usize>,
    /// Cluster ids chosen by the strategy, in selection order.
    pub selected_clusters: Vec<usize>,
}

impl SelectionResult {
    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Diverse condition selection: the `ceil(k1/2)` nearest cluster centers to
/// `c0` plus the `floor(k1/2)` furthest, under the model's dissimilarity.
/// Nearest come first in ascending distance, then furthest in descending
/// distance; distance ties break to the lower cluster id.
pub fn dcs(model: &ClusterModel, c0: &ConditionVector, k1: usize) -> Result<Vec<usize>> {
    let k = model.k();
    if k1 == 0 || k1 > k {
        return Err(Error::InvalidParameter(alloc::format!(
            "k1 = {k1} must be in 1..={k}"
        )));
    }
    let distances = model.center_distances(c0)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        distances[a]
            .partial_cmp(&distances[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let near = k1.div_ceil(2);
    let far = k1 / 2;
    let mut picked: Vec<usize> = order[..near].to_vec();
    for &cluster in order[k - far..].iter().rev() {
        if !picked.contains(&cluster) {
            picked.push(cluster);
        }
    }
    Ok(picked)
}

/// The random baseline: `k1` distinct clusters drawn uniformly.
pub fn rand_select(model: &ClusterModel, k1: usize, seed: u64) -> Result<Vec<usize>> {
    let k = model.k();
    if k1 == 0 || k1 > k {
        return Err(Error::InvalidParameter(alloc::format!(
            "k1 = {k1} must be in 1..={k}"
        )));
    }
    Ok(SeedRng::new(seed).sample_distinct(k, k1))
}

/// Per-cluster nearest neighbors of `z0_mu` among the cached mean latents.
/// Returns one index list per entry of `clusters`, each holding the `k2`
/// members with the smallest Euclidean distance (ties to the lower index);
/// clusters with fewer than `k2` members contribute all of them.
pub fn nns(
    z0_mu: &[f64],
    clusters: &[usize],
    latents: &[Vec<f64>],
    assignment: &[usize],
    k2: usize,
) -> Result<Vec<Vec<usize>>> {
    if k2 == 0 {
        return Err(Error::InvalidParameter(alloc::string::String::from(
            "k2 must be positive",
        )));
    }
    if latents.len() != assignment.len() {
        return Err(Error::DimensionMismatch {
            what: "cached latents",
            expected: assignment.len(),
            got: latents.len(),
        });
    }
    for mu in latents {
        if mu.len() != z0_mu.len() {
            return Err(Error::DimensionMismatch {
                what: "latent width",
                expected: z0_mu.len(),
                got: mu.len(),
            });
        }
    }
    let mut out = Vec::with_capacity(clusters.len());
    for &cluster in clusters {
        let mut members: Vec<(f64, usize)> = assignment
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == cluster)
            .map(|(i, _)| (squared_distance(&latents[i], z0_mu), i))
            .collect();
        members.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        members.truncate(k2);
        out.push(members.into_iter().map(|(_, i)| i).collect());
    }
    Ok(out)
}

/// Full data selection: strategy choice over clusters, then per-cluster
/// latent nearest-neighbor search, gathering conditions and mean latents
/// for the mapping stage.
pub fn select(
    x0: &TimeSeries,
    c0: &ConditionVector,
    vae: &VaeModel,
    model: &ClusterModel,
    conditions: &[ConditionVector],
    latents: &[Vec<f64>],
    cfg: &SelectionConfig,
) -> Result<SelectionResult> {
    if conditions.len() != model.assignment().len() {
        return Err(Error::DimensionMismatch {
            what: "conditions vs cluster assignment",
            expected: model.assignment().len(),
            got: conditions.len(),
        });
    }
    let (z0_mu, _) = vae.encode(x0)?;
    let selected_clusters = match cfg.strategy {
        SelectionStrategy::Dcs => dcs(model, c0, cfg.k1)?,
        SelectionStrategy::Rand => {
            model.schema().validate(c0)?;
            rand_select(model, cfg.k1, cfg.seed)?
        }
    };
    let per_cluster = nns(&z0_mu, &selected_clusters, latents, model.assignment(), cfg.k2)?;
    let mut indices = Vec::new();
    let mut source_cluster = Vec::new();
    for (cluster, list) in selected_clusters.iter().zip(per_cluster.iter()) {
        for &idx in list {
            indices.push(idx);
            source_cluster.push(*cluster);
        }
    }
    if indices.is_empty() {
        return Err(Error::Empty("selected subset"));
    }
    let gathered_conditions = indices.iter().map(|&i| conditions[i].clone()).collect();
    let gathered_latents = indices.iter().map(|&i| latents[i].clone()).collect();
    Ok(SelectionResult {
        indices,
        conditions: gathered_conditions,
        latents: gathered_latents,
        source_cluster,
        selected_clusters,
    })
}
