//! Condition clustering.
//!
//! Partitions the training set by external-condition similarity. The
//! dissimilarity is k-prototypes style: squared Euclidean over numeric slots
//! plus `gamma` times the mismatch count over categorical slots. With a
//! purely numeric schema this is Lloyd's k-means, with a purely categorical
//! schema it degenerates to k-modes (`gamma` scales the whole objective and
//! leaves the partition unchanged), and mixed schemas get the full
//! k-prototypes treatment.
//!
//! Numeric condition slots are expected to be min-max normalized before
//! clustering so the `gamma` balance between the two parts is meaningful;
//! the data-io layer does this.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::condition::{ConditionSchema, ConditionValue, ConditionVector, SlotKind};
use crate::error::{Error, Result};
use crate::rng::SeedRng;

/// Mixed-type dissimilarity between two schema-valid condition vectors.
///
/// Symmetric and zero iff the vectors agree slot-wise (for `gamma > 0`).
pub fn dissimilarity(
    a: &ConditionVector,
    b: &ConditionVector,
    schema: &ConditionSchema,
    gamma: f64,
) -> Result<f64> {
    schema.validate(a)?;
    schema.validate(b)?;
    Ok(dissimilarity_unchecked(a, b, schema, gamma))
}

fn dissimilarity_unchecked(
    a: &ConditionVector,
    b: &ConditionVector,
    schema: &ConditionSchema,
    gamma: f64,
) -> f64 {
    let mut numeric = 0.0;
    let mut mismatches = 0usize;
    for (i, slot) in schema.slots().iter().enumerate() {
        match slot.kind {
            SlotKind::Numeric => {
                let x = a.value(i).as_numeric().unwrap();
                let y = b.value(i).as_numeric().unwrap();
                numeric += (x - y) * (x - y);
            }
            SlotKind::Categorical { .. } => {
                if a.value(i) != b.value(i) {
                    mismatches += 1;
                }
            }
        }
    }
    numeric + gamma * mismatches as f64
}

/// Default mixed-distance weight: half the mean per-slot standard deviation
/// of the numeric slots, or 1 when the schema has none (pure k-modes).
pub fn default_gamma(conditions: &[ConditionVector], schema: &ConditionSchema) -> f64 {
    let numeric_slots = schema.numeric_slot_indices();
    if numeric_slots.is_empty() || conditions.is_empty() {
        return 1.0;
    }
    let n = conditions.len() as f64;
    let mut total_std = 0.0;
    for &slot in &numeric_slots {
        let mean: f64 = conditions
            .iter()
            .map(|c| c.value(slot).as_numeric().unwrap())
            .sum::<f64>()
            / n;
        let var: f64 = conditions
            .iter()
            .map(|c| {
                let v = c.value(slot).as_numeric().unwrap() - mean;
                v * v
            })
            .sum::<f64>()
            / n;
        total_std += libm::sqrt(var);
    }
    let gamma = 0.5 * total_std / numeric_slots.len() as f64;
    if gamma > 0.0 {
        gamma
    } else {
        1.0
    }
}

/// A fitted condition clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    k: usize,
    centers: Vec<ConditionVector>,
    assignment: Vec<usize>,
    schema: ConditionSchema,
    gamma: f64,
    iterations_run: usize,
}

impl ClusterModel {
    pub fn from_parts(
        centers: Vec<ConditionVector>,
        assignment: Vec<usize>,
        schema: ConditionSchema,
        gamma: f64,
        iterations_run: usize,
    ) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Empty("cluster centers"));
        }
        schema.validate_all(&centers)?;
        let k = centers.len();
        if assignment.iter().any(|&c| c >= k) {
            return Err(Error::InvalidParameter(alloc::format!(
                "assignment references cluster >= {k}"
            )));
        }
        Ok(ClusterModel {
            k,
            centers,
            assignment,
            schema,
            gamma,
            iterations_run,
        })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn centers(&self) -> &[ConditionVector] {
        &self.centers
    }

    #[inline]
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    #[inline]
    pub fn schema(&self) -> &ConditionSchema {
        &self.schema
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    /// Dataset indices assigned to one cluster.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (c == cluster).then_some(i))
            .collect()
    }

    /// Nearest center under the model's dissimilarity; ties break to the
    /// lowest cluster index.
    pub fn assign(&self, c: &ConditionVector) -> Result<usize> {
        self.schema.validate(c)?;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, center) in self.centers.iter().enumerate() {
            let d = dissimilarity_unchecked(c, center, &self.schema, self.gamma);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        Ok(best)
    }

    /// Dissimilarity of `c` to every center, in cluster order.
    pub fn center_distances(&self, c: &ConditionVector) -> Result<Vec<f64>> {
        self.schema.validate(c)?;
        Ok(self
            .centers
            .iter()
            .map(|center| dissimilarity_unchecked(c, center, &self.schema, self.gamma))
            .collect())
    }

    /// Sum of member-to-center dissimilarities over a dataset.
    pub fn objective(&self, conditions: &[ConditionVector]) -> f64 {
        conditions
            .iter()
            .zip(self.assignment.iter())
            .map(|(c, &j)| dissimilarity_unchecked(c, &self.centers[j], &self.schema, self.gamma))
            .sum()
    }
}

fn distinct_count(conditions: &[ConditionVector]) -> usize {
    let mut distinct: Vec<&ConditionVector> = Vec::new();
    for c in conditions {
        if !distinct.contains(&c) {
            distinct.push(c);
        }
    }
    distinct.len()
}

/// Optimal center of a member set: slot-wise mean for numeric slots, mode
/// for categorical slots (ties to the lexicographically smallest token).
fn optimal_center(
    members: &[usize],
    conditions: &[ConditionVector],
    schema: &ConditionSchema,
) -> ConditionVector {
    let mut values = Vec::with_capacity(schema.len());
    for (i, slot) in schema.slots().iter().enumerate() {
        match slot.kind {
            SlotKind::Numeric => {
                let sum: f64 = members
                    .iter()
                    .map(|&m| conditions[m].value(i).as_numeric().unwrap())
                    .sum();
                values.push(ConditionValue::Numeric(sum / members.len() as f64));
            }
            SlotKind::Categorical { .. } => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for &m in members {
                    *counts
                        .entry(conditions[m].value(i).as_category().unwrap())
                        .or_insert(0) += 1;
                }
                // BTreeMap iterates tokens in lexicographic order, so the
                // first max is the tie rule.
                let mode = counts
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                    .map(|(tok, _)| *tok)
                    .unwrap();
                values.push(ConditionValue::Category(String::from(mode)));
            }
        }
    }
    ConditionVector::new(values)
}

/// Fit a k-means / k-modes / k-prototypes model (dispatch is implicit in the
/// schema). `gamma == None` applies [`default_gamma`].
///
/// Seeding is k-means++ style over the mixed dissimilarity. The total
/// within-cluster dissimilarity is non-increasing across Lloyd iterations;
/// iteration stops at convergence or `max_iterations`.
pub fn fit(
    conditions: &[ConditionVector],
    schema: &ConditionSchema,
    k: usize,
    max_iterations: usize,
    seed: u64,
    gamma: Option<f64>,
) -> Result<ClusterModel> {
    if conditions.is_empty() {
        return Err(Error::Empty("clustering input"));
    }
    schema.validate_all(conditions)?;
    if k == 0 {
        return Err(Error::InvalidParameter(String::from("k must be positive")));
    }
    if max_iterations == 0 {
        return Err(Error::InvalidParameter(String::from(
            "max_iterations must be positive",
        )));
    }
    let distinct = distinct_count(conditions);
    if k > distinct {
        return Err(Error::InvalidParameter(alloc::format!(
            "k = {k} exceeds the {distinct} distinct condition vectors"
        )));
    }
    let gamma = gamma.unwrap_or_else(|| default_gamma(conditions, schema));
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "gamma must be finite and nonnegative, got {gamma}"
        )));
    }

    let n = conditions.len();
    let mut rng = SeedRng::new(seed);

    // k-means++ seeding: first center uniform, then weight by dissimilarity
    // to the nearest chosen center. Points coinciding with a chosen center
    // carry zero weight, so the k <= distinct precondition guarantees k
    // distinct seeds.
    let mut centers: Vec<ConditionVector> = Vec::with_capacity(k);
    centers.push(conditions[rng.index(n)].clone());
    let mut nearest: Vec<f64> = conditions
        .iter()
        .map(|c| dissimilarity_unchecked(c, &centers[0], schema, gamma))
        .collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            rng.weighted_index(&nearest)
        } else {
            // All remaining mass sits on chosen centers (possible only when
            // gamma == 0 collapses categorical distinctions); fall back to
            // the first unchosen distinct vector.
            (0..n)
                .find(|&i| !centers.contains(&conditions[i]))
                .expect("distinct count checked above")
        };
        let center = conditions[next].clone();
        for (i, c) in conditions.iter().enumerate() {
            let d = dissimilarity_unchecked(c, &center, schema, gamma);
            if d < nearest[i] {
                nearest[i] = d;
            }
        }
        centers.push(center);
    }

    let mut assignment = vec![0usize; n];
    let mut iterations_run = 0;
    for _ in 0..max_iterations {
        iterations_run += 1;
        // Assignment step: argmin dissimilarity, ties to the lowest index.
        let mut changed = false;
        for (i, c) in conditions.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, center) in centers.iter().enumerate() {
                let d = dissimilarity_unchecked(c, center, schema, gamma);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        // Update step.
        for j in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == j).collect();
            if members.is_empty() {
                // Reseed at the point with maximal dissimilarity to the
                // empty cluster's current center.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = dissimilarity_unchecked(&conditions[a], &centers[j], schema, gamma);
                        let db = dissimilarity_unchecked(&conditions[b], &centers[j], schema, gamma);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centers[j] = conditions[far].clone();
                changed = true;
            } else {
                let center = optimal_center(&members, conditions, schema);
                if center != centers[j] {
                    centers[j] = center;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Final assignment against the final centers keeps the stored
    // assignment consistent with `assign`.
    for (i, c) in conditions.iter().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, center) in centers.iter().enumerate() {
            let d = dissimilarity_unchecked(c, center, schema, gamma);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        assignment[i] = best;
    }

    Ok(ClusterModel {
        k,
        centers,
        assignment,
        schema: schema.clone(),
        gamma,
        iterations_run,
    })
}
