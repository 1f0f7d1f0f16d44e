//! Condition mapping: a white-box regressor from condition vectors to mean
//! latent vectors, fitted on the selected subset at generation time.
//!
//! Three variants share one interface: ridge-regularized linear regression,
//! a multi-output CART regression tree (splits minimize the summed
//! per-output variance, leaves predict the member mean), and a bagged forest
//! of such trees. Trees and forests expose rule dumps and per-condition
//! importance scores; the linear variant reports its coefficients instead.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::condition::{ConditionSchema, ConditionVector, SlotKind};
use crate::error::{Error, Result};
use crate::math::{self, Mat};
use crate::rng::SeedRng;

/// Ridge regularization applied to the linear variant (intercept excluded).
pub const RIDGE_LAMBDA: f64 = 1e-6;

/// Which regressor backs the mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingVariant {
    Linear,
    Tree,
    Forest,
}

/// Tree and forest hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
    /// Forest only: ensemble size.
    pub n_trees: usize,
    /// Forest only: draw a bootstrap sample per tree.
    pub bootstrap: bool,
    /// Forest only: features scanned per split; `None` = ceil(sqrt(F)).
    pub feature_subset: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 8,
            min_samples_leaf: 1,
            seed: 0,
            n_trees: 20,
            bootstrap: true,
            feature_subset: None,
        }
    }
}

impl TreeConfig {
    /// Effectively unbounded depth.
    pub fn unbounded() -> Self {
        TreeConfig {
            max_depth: usize::MAX,
            ..TreeConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_depth == 0 || self.min_samples_leaf == 0 || self.n_trees == 0 {
            return Err(Error::InvalidParameter(String::from(
                "max_depth, min_samples_leaf and n_trees must be positive",
            )));
        }
        Ok(())
    }
}

/// One column of the encoded design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnInfo {
    /// Index of the originating condition slot.
    pub slot: usize,
    pub name: String,
    /// Set for one-hot columns: the category this column indicates.
    pub category: Option<String>,
}

impl ColumnInfo {
    fn label(&self) -> String {
        match &self.category {
            Some(cat) => alloc::format!("{} == {:?}", self.name, cat),
            None => self.name.clone(),
        }
    }
}

/// Encoded conditions: numeric slots pass through, categorical slots one-hot
/// per vocabulary; column order is schema order, then vocabulary order.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub matrix: Mat,
    pub columns: Vec<ColumnInfo>,
}

fn design_columns(schema: &ConditionSchema) -> Vec<ColumnInfo> {
    let mut columns = Vec::new();
    for (i, slot) in schema.slots().iter().enumerate() {
        match &slot.kind {
            SlotKind::Numeric => columns.push(ColumnInfo {
                slot: i,
                name: slot.name.clone(),
                category: None,
            }),
            SlotKind::Categorical { vocabulary, .. } => {
                for cat in vocabulary {
                    columns.push(ColumnInfo {
                        slot: i,
                        name: slot.name.clone(),
                        category: Some(cat.clone()),
                    });
                }
            }
        }
    }
    columns
}

fn encode_row(c: &ConditionVector, schema: &ConditionSchema, out: &mut [f64]) -> Result<()> {
    schema.validate(c)?;
    let mut col = 0;
    for (i, slot) in schema.slots().iter().enumerate() {
        match &slot.kind {
            SlotKind::Numeric => {
                out[col] = c.value(i).as_numeric().unwrap();
                col += 1;
            }
            SlotKind::Categorical { vocabulary, .. } => {
                let hit = schema.category_index(i, c.value(i).as_category().unwrap())?;
                for j in 0..vocabulary.len() {
                    out[col + j] = if j == hit { 1.0 } else { 0.0 };
                }
                col += vocabulary.len();
            }
        }
    }
    Ok(())
}

/// Encode a batch of condition vectors into a design matrix.
pub fn encode_conditions(
    conditions: &[ConditionVector],
    schema: &ConditionSchema,
) -> Result<DesignMatrix> {
    let columns = design_columns(schema);
    let mut matrix = Mat::zeros(conditions.len(), columns.len());
    for (r, c) in conditions.iter().enumerate() {
        encode_row(c, schema, matrix.row_mut(r))?;
    }
    Ok(DesignMatrix { matrix, columns })
}

/// Node of a fitted regression tree, arena-indexed.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Summed-variance reduction achieved by this split.
        gain: f64,
    },
    Leaf {
        value: Vec<f64>,
        count: usize,
    },
}

/// Multi-output CART regression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    #[inline]
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn predict(&self, row: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                TreeNode::Leaf { value, .. } => return value,
            }
        }
    }

    fn split_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }
}

struct TreeBuilder<'a> {
    x: &'a Mat,
    y: &'a Mat,
    max_depth: usize,
    min_samples_leaf: usize,
    /// `Some(s)`: scan a fresh random subset of `s` features per split.
    feature_subset: Option<usize>,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl<'a> TreeBuilder<'a> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let d = self.y.cols();
        let mut value = vec![0.0; d];
        for &r in rows {
            for (v, t) in value.iter_mut().zip(self.y.row(r).iter()) {
                *v += t;
            }
        }
        let inv = 1.0 / rows.len() as f64;
        value.iter_mut().for_each(|v| *v *= inv);
        self.nodes.push(TreeNode::Leaf {
            value,
            count: rows.len(),
        });
        self.nodes.len() - 1
    }

    /// Sum over outputs of `sum(y^2) - sum(y)^2 / n` for the row set.
    fn sse(&self, rows: &[usize]) -> f64 {
        let d = self.y.cols();
        let mut sums = vec![0.0; d];
        let mut sumsq = 0.0;
        for &r in rows {
            for (j, &t) in self.y.row(r).iter().enumerate() {
                sums[j] += t;
                sumsq += t * t;
            }
        }
        let n = rows.len() as f64;
        sumsq - sums.iter().map(|s| s * s).sum::<f64>() / n
    }

    /// Exhaustive scan over candidate thresholds (midpoints of sorted
    /// distinct values) for one feature. Returns the best valid split, if
    /// any, with its summed-variance gain.
    fn scan_feature(&self, rows: &[usize], feature: usize, node_sse: f64) -> Option<BestSplit> {
        let n = rows.len();
        let d = self.y.cols();
        let mut order: Vec<usize> = rows.to_vec();
        order.sort_by(|&a, &b| {
            self.x[(a, feature)]
                .partial_cmp(&self.x[(b, feature)])
                .unwrap()
                .then(a.cmp(&b))
        });

        let mut total_sums = vec![0.0; d];
        let mut total_sumsq = 0.0;
        for &r in &order {
            for (j, &t) in self.y.row(r).iter().enumerate() {
                total_sums[j] += t;
                total_sumsq += t * t;
            }
        }

        let mut left_sums = vec![0.0; d];
        let mut left_sumsq = 0.0;
        let mut best: Option<BestSplit> = None;
        for i in 1..n {
            let prev = order[i - 1];
            for (j, &t) in self.y.row(prev).iter().enumerate() {
                left_sums[j] += t;
                left_sumsq += t * t;
            }
            let v_prev = self.x[(prev, feature)];
            let v_here = self.x[(order[i], feature)];
            if v_prev == v_here {
                continue;
            }
            if i < self.min_samples_leaf || n - i < self.min_samples_leaf {
                continue;
            }
            let nl = i as f64;
            let nr = (n - i) as f64;
            let left_sse = left_sumsq - left_sums.iter().map(|s| s * s).sum::<f64>() / nl;
            let right_sumsq = total_sumsq - left_sumsq;
            let right_sse = right_sumsq
                - total_sums
                    .iter()
                    .zip(left_sums.iter())
                    .map(|(t, l)| {
                        let s = t - l;
                        s * s
                    })
                    .sum::<f64>()
                    / nr;
            let gain = node_sse - (left_sse + right_sse);
            let threshold = 0.5 * (v_prev + v_here);
            let better = match &best {
                None => true,
                Some(b) => gain > b.gain,
            };
            if better {
                best = Some(BestSplit {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
        best
    }

    fn build(&mut self, rows: &[usize], depth: usize, rng: &mut Option<&mut SeedRng>) -> usize {
        let node_sse = self.sse(rows);
        if node_sse <= 1e-12
            || depth >= self.max_depth
            || rows.len() < self.min_samples_leaf.saturating_mul(2)
        {
            return self.leaf(rows);
        }
        let n_features = self.x.cols();
        let candidates: Vec<usize> = match (self.feature_subset, rng.as_mut()) {
            (Some(s), Some(rng)) if s < n_features => {
                let mut picked = rng.sample_distinct(n_features, s);
                picked.sort_unstable();
                picked
            }
            _ => (0..n_features).collect(),
        };
        // Features ascending, thresholds ascending inside the scan: the
        // first strict maximum realizes the lowest-feature/lowest-threshold
        // tie rule.
        let mut best: Option<BestSplit> = None;
        for &feature in &candidates {
            if let Some(candidate) = self.scan_feature(rows, feature, node_sse) {
                let better = match &best {
                    None => true,
                    Some(b) => candidate.gain > b.gain,
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
        let Some(split) = best else {
            return self.leaf(rows);
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[(r, split.feature)] <= split.threshold);
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            value: vec![],
            count: 0,
        });
        let left = self.build(&left_rows, depth + 1, rng);
        let right = self.build(&right_rows, depth + 1, rng);
        self.nodes[at] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            gain: split.gain,
        };
        at
    }
}

fn fit_tree(
    x: &Mat,
    y: &Mat,
    rows: &[usize],
    cfg: &TreeConfig,
    feature_subset: Option<usize>,
    mut rng: Option<&mut SeedRng>,
) -> RegressionTree {
    let mut builder = TreeBuilder {
        x,
        y,
        max_depth: cfg.max_depth,
        min_samples_leaf: cfg.min_samples_leaf,
        feature_subset,
        nodes: Vec::new(),
    };
    builder.build(rows, 0, &mut rng);
    RegressionTree {
        nodes: builder.nodes,
    }
}

/// Fitted parameters of a mapping model.
#[derive(Debug, Clone, PartialEq)]
pub enum MappingParams {
    /// `(features + 1) x d_l` weights; the last row is the intercept.
    Linear { weights: Mat },
    Tree(RegressionTree),
    Forest(Vec<RegressionTree>),
}

/// A fitted condition-to-latent regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingModel {
    params: MappingParams,
    schema: ConditionSchema,
    columns: Vec<ColumnInfo>,
    latent_dim: usize,
    training_loss: f64,
}

impl MappingModel {
    pub fn variant(&self) -> MappingVariant {
        match self.params {
            MappingParams::Linear { .. } => MappingVariant::Linear,
            MappingParams::Tree(_) => MappingVariant::Tree,
            MappingParams::Forest(_) => MappingVariant::Forest,
        }
    }

    #[inline]
    pub fn params(&self) -> &MappingParams {
        &self.params
    }

    #[inline]
    pub fn schema(&self) -> &ConditionSchema {
        &self.schema
    }

    #[inline]
    pub fn columns(&self) -> &[ColumnInfo] {
        &self.columns
    }

    #[inline]
    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    /// Summed l2 loss over the training rows at fit time.
    #[inline]
    pub fn training_loss(&self) -> f64 {
        self.training_loss
    }

    fn predict_encoded(&self, row: &[f64]) -> Vec<f64> {
        match &self.params {
            MappingParams::Linear { weights } => {
                let mut out = vec![0.0; self.latent_dim];
                for (j, o) in out.iter_mut().enumerate() {
                    let mut acc = weights[(row.len(), j)];
                    for (f, &v) in row.iter().enumerate() {
                        acc += weights[(f, j)] * v;
                    }
                    *o = acc;
                }
                out
            }
            MappingParams::Tree(tree) => tree.predict(row).to_vec(),
            MappingParams::Forest(trees) => {
                let mut out = vec![0.0; self.latent_dim];
                for tree in trees {
                    for (o, v) in out.iter_mut().zip(tree.predict(row).iter()) {
                        *o += v;
                    }
                }
                let inv = 1.0 / trees.len() as f64;
                out.iter_mut().for_each(|v| *v *= inv);
                out
            }
        }
    }

    /// Predicted mean latent vector for a schema-valid condition vector.
    pub fn predict(&self, c: &ConditionVector) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.columns.len()];
        encode_row(c, &self.schema, &mut row)?;
        let out = self.predict_encoded(&row);
        math::ensure_finite(&out, "mapping prediction")?;
        Ok(out)
    }

    /// Rule dump and per-condition importances; the linear variant reports
    /// coefficients instead, flagged by the returned variant.
    pub fn explain(&self) -> Explanation {
        match &self.params {
            MappingParams::Linear { weights } => {
                let mut coefficients = Vec::new();
                for (f, col) in self.columns.iter().enumerate() {
                    coefficients.push((col.label(), weights.row(f).to_vec()));
                }
                coefficients.push((
                    String::from("(intercept)"),
                    weights.row(self.columns.len()).to_vec(),
                ));
                Explanation::Linear { coefficients }
            }
            MappingParams::Tree(tree) => {
                Explanation::Tree(self.explain_trees(core::slice::from_ref(tree)))
            }
            MappingParams::Forest(trees) => Explanation::Forest(self.explain_trees(trees)),
        }
    }

    fn explain_trees(&self, trees: &[RegressionTree]) -> TreeExplanation {
        let mut per_slot = vec![0.0; self.schema.len()];
        let mut any_split = false;
        for tree in trees {
            for node in tree.nodes() {
                if let TreeNode::Split { feature, gain, .. } = node {
                    per_slot[self.columns[*feature].slot] += gain.max(0.0);
                    any_split = true;
                }
            }
        }
        let total: f64 = per_slot.iter().sum();
        if any_split && total > 0.0 {
            per_slot.iter_mut().for_each(|v| *v /= total);
        } else if any_split {
            // Splits exist but all gains are zero; spread the mass evenly
            // over the split slots so the scores still sum to one.
            let split_slots: Vec<usize> = trees
                .iter()
                .flat_map(|t| t.nodes())
                .filter_map(|n| match n {
                    TreeNode::Split { feature, .. } => Some(self.columns[*feature].slot),
                    TreeNode::Leaf { .. } => None,
                })
                .collect();
            for &slot in &split_slots {
                per_slot[slot] += 1.0 / split_slots.len() as f64;
            }
        }
        let mut rules = String::new();
        for (t, tree) in trees.iter().enumerate() {
            if trees.len() > 1 {
                rules.push_str(&alloc::format!("tree {t}:\n"));
            }
            self.render_tree(tree, 0, if trees.len() > 1 { 1 } else { 0 }, &mut rules);
        }
        let importances = self
            .schema
            .slots()
            .iter()
            .zip(per_slot.iter())
            .map(|(slot, &v)| (slot.name.clone(), v))
            .collect();
        TreeExplanation {
            rules,
            importances,
            split_count: trees.iter().map(|t| t.split_count()).sum(),
        }
    }

    fn render_tree(&self, tree: &RegressionTree, at: usize, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match &tree.nodes()[at] {
            TreeNode::Leaf { value, count } => {
                let rendered: Vec<String> =
                    value.iter().map(|v| alloc::format!("{v:.4}")).collect();
                out.push_str(&alloc::format!(
                    "{pad}leaf [{}] (n={count})\n",
                    rendered.join(", ")
                ));
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let col = &self.columns[*feature];
                match &col.category {
                    Some(cat) => {
                        out.push_str(&alloc::format!("{pad}if {} != {:?}\n", col.name, cat));
                        self.render_tree(tree, *left, indent + 1, out);
                        out.push_str(&alloc::format!("{pad}else ({} == {:?})\n", col.name, cat));
                        self.render_tree(tree, *right, indent + 1, out);
                    }
                    None => {
                        out.push_str(&alloc::format!(
                            "{pad}if {} <= {threshold:.6}\n",
                            col.name
                        ));
                        self.render_tree(tree, *left, indent + 1, out);
                        out.push_str(&alloc::format!("{pad}else ({} > {threshold:.6})\n", col.name));
                        self.render_tree(tree, *right, indent + 1, out);
                    }
                }
            }
        }
    }
}

/// Tree/forest explanation: indented rules and per-condition importance
/// scores that sum to one whenever at least one split exists.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeExplanation {
    pub rules: String,
    pub importances: Vec<(String, f64)>,
    pub split_count: usize,
}

/// Output of [`MappingModel::explain`].
#[derive(Debug, Clone, PartialEq)]
pub enum Explanation {
    Tree(TreeExplanation),
    Forest(TreeExplanation),
    /// The linear variant has no rules; per-column coefficient vectors are
    /// returned instead.
    Linear { coefficients: Vec<(String, Vec<f64>)> },
}

/// Fit a mapping model on `(condition, mean latent)` pairs by minimizing the
/// l2 loss between true and predicted latents.
pub fn fit(
    conditions: &[ConditionVector],
    targets: &[Vec<f64>],
    schema: &ConditionSchema,
    variant: MappingVariant,
    cfg: &TreeConfig,
) -> Result<MappingModel> {
    cfg.validate()?;
    if conditions.is_empty() {
        return Err(Error::Empty("mapping training rows"));
    }
    if conditions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            what: "mapping rows vs targets",
            expected: conditions.len(),
            got: targets.len(),
        });
    }
    let d = targets[0].len();
    if d == 0 {
        return Err(Error::Empty("mapping target width"));
    }
    for t in targets {
        if t.len() != d {
            return Err(Error::DimensionMismatch {
                what: "mapping target width",
                expected: d,
                got: t.len(),
            });
        }
        math::ensure_finite(t, "mapping targets")?;
    }
    let design = encode_conditions(conditions, schema)?;
    let x = design.matrix;
    let mut y = Mat::zeros(targets.len(), d);
    for (r, t) in targets.iter().enumerate() {
        y.row_mut(r).copy_from_slice(t);
    }

    let params = match variant {
        MappingVariant::Linear => MappingParams::Linear {
            weights: ridge_solve(&x, &y, RIDGE_LAMBDA)?,
        },
        MappingVariant::Tree => {
            let rows: Vec<usize> = (0..x.rows()).collect();
            MappingParams::Tree(fit_tree(&x, &y, &rows, cfg, None, None))
        }
        MappingVariant::Forest => {
            let mut rng = SeedRng::new(cfg.seed);
            let subset = cfg
                .feature_subset
                .unwrap_or_else(|| (libm::ceil(math::sqrt(x.cols() as f64))) as usize)
                .clamp(1, x.cols());
            let mut trees = Vec::with_capacity(cfg.n_trees);
            for _ in 0..cfg.n_trees {
                let rows: Vec<usize> = if cfg.bootstrap {
                    (0..x.rows()).map(|_| rng.index(x.rows())).collect()
                } else {
                    (0..x.rows()).collect()
                };
                let mut tree_rng = rng.fork();
                trees.push(fit_tree(&x, &y, &rows, cfg, Some(subset), Some(&mut tree_rng)));
            }
            MappingParams::Forest(trees)
        }
    };

    let mut model = MappingModel {
        params,
        schema: schema.clone(),
        columns: design.columns,
        latent_dim: d,
        training_loss: 0.0,
    };
    let mut loss = 0.0;
    for (r, t) in targets.iter().enumerate() {
        let pred = model.predict_encoded(x.row(r));
        loss += math::squared_distance(&pred, t);
    }
    model.training_loss = loss;
    Ok(model)
}

/// Ridge normal equations with an unpenalized intercept: solves
/// `(X'^T X' + lambda D) W = X'^T Y` where `X'` is `X` with an appended
/// ones column and `D` is the identity with a zero in the intercept slot.
fn ridge_solve(x: &Mat, y: &Mat, lambda: f64) -> Result<Mat> {
    let n = x.rows();
    let f = x.cols();
    let mut xe = Mat::zeros(n, f + 1);
    for r in 0..n {
        xe.row_mut(r)[..f].copy_from_slice(x.row(r));
        xe.row_mut(r)[f] = 1.0;
    }
    let xt = xe.transpose();
    let mut a = xt.matmul(&xe);
    for i in 0..f {
        a[(i, i)] += lambda;
    }
    let b = xt.matmul(y);
    math::solve_linear(&a, &b)
}

/// Sample the actual latent from the predicted mean and the input series'
/// log-variance: `z = mu' + exp(log_var / 2) * noise`. Zero noise is the
/// deterministic mode.
pub fn sample_latent(mu0_prime: &[f64], log_var0: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
    crate::vae::reparameterize(mu0_prime, log_var0, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::{ConditionValue, Slot};

    fn numeric_schema(m: usize) -> ConditionSchema {
        ConditionSchema::new(
            (0..m)
                .map(|i| Slot::numeric(&alloc::format!("c{i}")))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn encode_numeric_passthrough() {
        let schema = numeric_schema(3);
        let conds = vec![
            ConditionVector::numeric(&[1.0, 2.0, 3.0]),
            ConditionVector::numeric(&[4.0, 5.0, 6.0]),
        ];
        let design = encode_conditions(&conds, &schema).unwrap();
        assert_eq!(design.matrix.data(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn encode_one_hot() {
        let schema =
            ConditionSchema::new(vec![Slot::categorical("w", &["sine", "square", "saw"])])
                .unwrap();
        let conds = vec![ConditionVector::new(vec![ConditionValue::Category(
            String::from("square"),
        )])];
        let design = encode_conditions(&conds, &schema).unwrap();
        assert_eq!(design.matrix.data(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn encode_column_count() {
        let schema = ConditionSchema::new(vec![
            Slot::numeric("a"),
            Slot::categorical("b", &["x", "y", "z"]),
            Slot::numeric("c"),
            Slot::categorical("d", &["p", "q"]),
        ])
        .unwrap();
        let design = encode_conditions(&[], &schema).unwrap();
        assert_eq!(design.columns.len(), 2 + 3 + 2);
    }

    #[test]
    fn encode_rejects_out_of_vocabulary() {
        let schema = ConditionSchema::new(vec![Slot::categorical("w", &["a"])]).unwrap();
        let conds = vec![ConditionVector::new(vec![ConditionValue::Category(
            String::from("b"),
        )])];
        assert!(matches!(
            encode_conditions(&conds, &schema),
            Err(Error::UnknownCategory { .. })
        ));
    }

    fn random_conditions(n: usize, m: usize, seed: u64) -> Vec<ConditionVector> {
        let mut rng = SeedRng::new(seed);
        (0..n)
            .map(|_| {
                ConditionVector::numeric(
                    &(0..m).map(|_| rng.uniform_in(-1.0, 1.0)).collect::<Vec<_>>(),
                )
            })
            .collect()
    }

    #[test]
    fn identical_targets_collapse_to_single_leaf() {
        let schema = numeric_schema(2);
        let conds = random_conditions(10, 2, 1);
        let targets = vec![vec![0.5, -0.5]; 10];
        let model = fit(&conds, &targets, &schema, MappingVariant::Tree, &TreeConfig::unbounded())
            .unwrap();
        match model.params() {
            MappingParams::Tree(tree) => assert_eq!(tree.nodes().len(), 1),
            _ => unreachable!(),
        }
        let pred = model.predict(&ConditionVector::numeric(&[9.0, 9.0])).unwrap();
        assert_eq!(pred, vec![0.5, -0.5]);
    }

    #[test]
    fn unbounded_tree_reaches_zero_training_loss() {
        let schema = numeric_schema(3);
        let conds = random_conditions(40, 3, 2);
        let mut rng = SeedRng::new(3);
        let targets: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..4).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .collect();
        let model = fit(&conds, &targets, &schema, MappingVariant::Tree, &TreeConfig::unbounded())
            .unwrap();
        assert!(model.training_loss() < 1e-18, "loss {}", model.training_loss());
        for (c, t) in conds.iter().zip(targets.iter()) {
            assert_eq!(&model.predict(c).unwrap(), t);
        }
    }

    #[test]
    fn xor_targets_still_fit_exactly() {
        // Greedy gain alone cannot separate XOR; zero-gain splits must still
        // be taken when the node is impure.
        let schema = numeric_schema(2);
        let conds = vec![
            ConditionVector::numeric(&[0.0, 0.0]),
            ConditionVector::numeric(&[0.0, 1.0]),
            ConditionVector::numeric(&[1.0, 0.0]),
            ConditionVector::numeric(&[1.0, 1.0]),
        ];
        let targets = vec![vec![0.0], vec![1.0], vec![1.0], vec![0.0]];
        let model = fit(&conds, &targets, &schema, MappingVariant::Tree, &TreeConfig::unbounded())
            .unwrap();
        assert!(model.training_loss() < 1e-18);
    }

    #[test]
    fn identical_conditions_with_differing_targets_fit_the_mean() {
        let schema = numeric_schema(1);
        let conds = vec![
            ConditionVector::numeric(&[1.0]),
            ConditionVector::numeric(&[1.0]),
        ];
        let targets = vec![vec![0.0], vec![2.0]];
        let model = fit(&conds, &targets, &schema, MappingVariant::Tree, &TreeConfig::unbounded())
            .unwrap();
        assert_eq!(model.predict(&conds[0]).unwrap(), vec![1.0]);
    }

    fn wide_conditions(n: usize, m: usize, seed: u64) -> Vec<ConditionVector> {
        let mut rng = SeedRng::new(seed);
        (0..n)
            .map(|_| {
                ConditionVector::numeric(
                    &(0..m).map(|_| rng.uniform_in(-3.0, 3.0)).collect::<Vec<_>>(),
                )
            })
            .collect()
    }

    #[test]
    fn linear_recovers_exactly_linear_targets() {
        let schema = numeric_schema(3);
        let conds = wide_conditions(1000, 3, 5);
        let w = [[0.5, -1.0], [2.0, 0.25], [-0.75, 1.5]];
        let b = [0.1, -0.2];
        let targets: Vec<Vec<f64>> = conds
            .iter()
            .map(|c| {
                (0..2)
                    .map(|j| {
                        b[j] + (0..3)
                            .map(|i| w[i][j] * c.value(i).as_numeric().unwrap())
                            .sum::<f64>()
                    })
                    .collect()
            })
            .collect();
        let model = fit(&conds, &targets, &schema, MappingVariant::Linear, &TreeConfig::default())
            .unwrap();
        let mut max_resid = 0.0f64;
        for (c, t) in conds.iter().zip(targets.iter()) {
            let pred = model.predict(c).unwrap();
            for (p, v) in pred.iter().zip(t.iter()) {
                max_resid = max_resid.max((p - v).abs());
            }
        }
        assert!(max_resid < 1e-8, "max residual {max_resid}");
    }

    /// Independent normal-equations oracle: assemble the same ridge system
    /// and invert it by Gauss-Jordan with full row scaling.
    fn ridge_oracle(conds: &[ConditionVector], targets: &[Vec<f64>], schema: &ConditionSchema) -> Mat {
        let design = encode_conditions(conds, schema).unwrap();
        let x = design.matrix;
        let (n, f) = (x.rows(), x.cols());
        let d = targets[0].len();
        let mut a = vec![vec![0.0; f + 1]; f + 1];
        let mut b = vec![vec![0.0; d]; f + 1];
        let xe = |r: usize, c: usize| if c == f { 1.0 } else { x[(r, c)] };
        for i in 0..=f {
            for j in 0..=f {
                a[i][j] = (0..n).map(|r| xe(r, i) * xe(r, j)).sum();
            }
            for j in 0..d {
                b[i][j] = (0..n).map(|r| xe(r, i) * targets[r][j]).sum();
            }
        }
        for i in 0..f {
            a[i][i] += RIDGE_LAMBDA;
        }
        // Gauss-Jordan without pivot search; fine for the well-conditioned
        // oracle instances used in tests.
        for col in 0..=f {
            let d0 = a[col][col];
            for j in 0..=f {
                a[col][j] /= d0;
            }
            for j in 0..d {
                b[col][j] /= d0;
            }
            for r in 0..=f {
                if r == col {
                    continue;
                }
                let factor = a[r][col];
                for j in 0..=f {
                    a[r][j] -= factor * a[col][j];
                }
                for j in 0..d {
                    b[r][j] -= factor * b[col][j];
                }
            }
        }
        let mut w = Mat::zeros(f + 1, d);
        for r in 0..=f {
            w.row_mut(r).copy_from_slice(&b[r]);
        }
        w
    }

    #[test]
    fn linear_matches_normal_equations_oracle() {
        let schema = numeric_schema(4);
        let conds = random_conditions(60, 4, 7);
        let mut rng = SeedRng::new(8);
        let targets: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..3).map(|_| rng.uniform_in(-2.0, 2.0)).collect())
            .collect();
        let model = fit(&conds, &targets, &schema, MappingVariant::Linear, &TreeConfig::default())
            .unwrap();
        let oracle = ridge_oracle(&conds, &targets, &schema);
        match model.params() {
            MappingParams::Linear { weights } => {
                for (a, b) in weights.data().iter().zip(oracle.data().iter()) {
                    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn one_split_tree_routes_by_threshold() {
        let schema = numeric_schema(1);
        let conds = vec![
            ConditionVector::numeric(&[0.0]),
            ConditionVector::numeric(&[1.0]),
        ];
        let targets = vec![vec![-5.0], vec![5.0]];
        let model = fit(&conds, &targets, &schema, MappingVariant::Tree, &TreeConfig::unbounded())
            .unwrap();
        // Split lands at the midpoint 0.5; 0.3 goes left.
        assert_eq!(model.predict(&ConditionVector::numeric(&[0.3])).unwrap(), vec![-5.0]);
        assert_eq!(model.predict(&ConditionVector::numeric(&[0.7])).unwrap(), vec![5.0]);
    }

    #[test]
    fn split_gain_ties_prefer_lowest_feature() {
        // Both features separate the two rows equally well; the split must
        // land on feature 0.
        let schema = numeric_schema(2);
        let conds = vec![
            ConditionVector::numeric(&[0.0, 0.0]),
            ConditionVector::numeric(&[1.0, 1.0]),
        ];
        let targets = vec![vec![0.0], vec![1.0]];
        let model = fit(&conds, &targets, &schema, MappingVariant::Tree, &TreeConfig::unbounded())
            .unwrap();
        match model.params() {
            MappingParams::Tree(tree) => match &tree.nodes()[0] {
                TreeNode::Split { feature, .. } => assert_eq!(*feature, 0),
                _ => unreachable!("expected a split at the root"),
            },
            _ => unreachable!(),
        }
    }

    #[test]
    fn degenerate_forest_equals_its_tree() {
        let schema = numeric_schema(2);
        let conds = random_conditions(30, 2, 9);
        let mut rng = SeedRng::new(10);
        let targets: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..2).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .collect();
        let cfg = TreeConfig {
            n_trees: 1,
            bootstrap: false,
            feature_subset: Some(2),
            ..TreeConfig::default()
        };
        let forest = fit(&conds, &targets, &schema, MappingVariant::Forest, &cfg).unwrap();
        let tree = fit(&conds, &targets, &schema, MappingVariant::Tree, &cfg).unwrap();
        for c in &conds {
            assert_eq!(forest.predict(c).unwrap(), tree.predict(c).unwrap());
        }
    }

    #[test]
    fn forest_prediction_is_permutation_invariant() {
        let schema = numeric_schema(2);
        let conds = random_conditions(25, 2, 11);
        let mut rng = SeedRng::new(12);
        let targets: Vec<Vec<f64>> = (0..25)
            .map(|_| (0..2).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .collect();
        let model = fit(
            &conds,
            &targets,
            &schema,
            MappingVariant::Forest,
            &TreeConfig::default(),
        )
        .unwrap();
        let mut reversed = model.clone();
        if let MappingParams::Forest(trees) = &mut reversed.params {
            trees.reverse();
        }
        let q = ConditionVector::numeric(&[0.1, -0.3]);
        let a = model.predict(&q).unwrap();
        let b = reversed.predict(&q).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_is_deterministic_under_seed() {
        let schema = numeric_schema(3);
        let conds = random_conditions(30, 3, 13);
        let mut rng = SeedRng::new(14);
        let targets: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..2).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .collect();
        let cfg = TreeConfig {
            seed: 42,
            ..TreeConfig::default()
        };
        let a = fit(&conds, &targets, &schema, MappingVariant::Forest, &cfg).unwrap();
        let b = fit(&conds, &targets, &schema, MappingVariant::Forest, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fit_rejects_empty_input() {
        let schema = numeric_schema(1);
        assert!(matches!(
            fit(&[], &[], &schema, MappingVariant::Tree, &TreeConfig::default()),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn sample_latent_modes() {
        let mu = [1.0, -1.0];
        assert_eq!(sample_latent(&mu, &[0.3, 0.4], &[0.0, 0.0]).unwrap(), mu.to_vec());
        assert_eq!(
            sample_latent(&mu, &[0.0, 0.0], &[0.5, -0.5]).unwrap(),
            vec![1.5, -1.5]
        );
    }

    #[test]
    fn sample_latent_monte_carlo_variance() {
        let mu = [0.0, 0.0];
        let log_var = [0.6, -1.2];
        let draws = 10_000;
        let mut rng = SeedRng::new(15);
        let mut sums = [0.0; 2];
        let mut sumsq = [0.0; 2];
        let mut noise = [0.0; 2];
        for _ in 0..draws {
            rng.fill_normal(&mut noise);
            let z = sample_latent(&mu, &log_var, &noise).unwrap();
            for j in 0..2 {
                sums[j] += z[j];
                sumsq[j] += z[j] * z[j];
            }
        }
        for j in 0..2 {
            let mean = sums[j] / draws as f64;
            let var = sumsq[j] / draws as f64 - mean * mean;
            let expected = math::exp(log_var[j]);
            assert!(
                (var - expected).abs() < 0.1 * expected,
                "coord {j}: var {var} vs {expected}"
            );
        }
    }

    #[test]
    fn explain_single_leaf_is_empty() {
        let schema = numeric_schema(2);
        let conds = random_conditions(5, 2, 16);
        let targets = vec![vec![1.0]; 5];
        let model = fit(&conds, &targets, &schema, MappingVariant::Tree, &TreeConfig::default())
            .unwrap();
        match model.explain() {
            Explanation::Tree(e) => {
                assert_eq!(e.split_count, 0);
                assert!(e.importances.iter().all(|(_, v)| *v == 0.0));
                assert!(e.rules.starts_with("leaf"));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn explain_one_split_concentrates_importance() {
        let schema = numeric_schema(2);
        let conds = vec![
            ConditionVector::numeric(&[0.0, 0.5]),
            ConditionVector::numeric(&[1.0, 0.5]),
        ];
        let targets = vec![vec![0.0], vec![1.0]];
        let model = fit(&conds, &targets, &schema, MappingVariant::Tree, &TreeConfig::unbounded())
            .unwrap();
        match model.explain() {
            Explanation::Tree(e) => {
                assert_eq!(e.split_count, 1);
                assert_eq!(e.importances[0].1, 1.0);
                assert_eq!(e.importances[1].1, 0.0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn explain_importances_sum_to_one() {
        let schema = numeric_schema(3);
        let conds = random_conditions(50, 3, 17);
        let mut rng = SeedRng::new(18);
        let targets: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..2).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .collect();
        for variant in [MappingVariant::Tree, MappingVariant::Forest] {
            let model = fit(&conds, &targets, &schema, variant, &TreeConfig::default()).unwrap();
            let e = match model.explain() {
                Explanation::Tree(e) | Explanation::Forest(e) => e,
                Explanation::Linear { .. } => unreachable!(),
            };
            assert!(e.split_count >= 1);
            let total: f64 = e.importances.iter().map(|(_, v)| v).sum();
            assert!((total - 1.0).abs() < 1e-9, "total {total}");
        }
    }

    #[test]
    fn explain_linear_reports_coefficients() {
        let schema = numeric_schema(2);
        let conds = random_conditions(10, 2, 19);
        let targets: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let model = fit(&conds, &targets, &schema, MappingVariant::Linear, &TreeConfig::default())
            .unwrap();
        match model.explain() {
            Explanation::Linear { coefficients } => {
                // Two feature rows plus the intercept.
                assert_eq!(coefficients.len(), 3);
                assert_eq!(coefficients[2].0, "(intercept)");
            }
            _ => unreachable!(),
        }
    }
}
