//! Cost-shape checks: selection work grows roughly linearly in the dataset,
//! and mapping fit time does not depend on the dataset size at all (it only
//! sees the selected rows).

use std::time::Instant;

use ctsg_core::clustering::ClusterModel;
use ctsg_core::mapping::{self, MappingVariant, TreeConfig};
use ctsg_core::rng::SeedRng;
use ctsg_core::selection::{select, SelectionConfig, SelectionStrategy};
use ctsg_core::vae::VaeModel;
use ctsg_core::{ConditionSchema, ConditionVector, Slot, TimeSeries};

fn synthetic_world(
    n: usize,
    k: usize,
    seed: u64,
) -> (ClusterModel, Vec<ConditionVector>, Vec<Vec<f64>>) {
    let schema = ConditionSchema::new(vec![Slot::numeric("a"), Slot::numeric("b")]).unwrap();
    let mut rng = SeedRng::new(seed);
    let mut conditions = Vec::with_capacity(n);
    let mut assignment = Vec::with_capacity(n);
    for i in 0..n {
        let cluster = i % k;
        conditions.push(ConditionVector::numeric(&[
            cluster as f64 + rng.uniform_in(-0.2, 0.2),
            cluster as f64 + rng.uniform_in(-0.2, 0.2),
        ]));
        assignment.push(cluster);
    }
    let centers: Vec<ConditionVector> = (0..k)
        .map(|j| ConditionVector::numeric(&[j as f64, j as f64]))
        .collect();
    let model = ClusterModel::from_parts(centers, assignment, schema, 1.0, 0).unwrap();
    let d_l = 8;
    let latents: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d_l).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
        .collect();
    (model, conditions, latents)
}

fn median_of(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples[samples.len() / 2]
}

fn time_select(n: usize, repeats: usize) -> f64 {
    let k = 20;
    let (model, conditions, latents) = synthetic_world(n, k, 7);
    let vae = VaeModel::dense(16, 1, 8, &[16], 1).unwrap();
    let mut rng = SeedRng::new(2);
    let x0 = TimeSeries::new((0..16).map(|_| rng.uniform_in(-1.0, 1.0)).collect(), 16, 1).unwrap();
    let c0 = conditions[0].clone();
    let cfg = SelectionConfig {
        k1: 10,
        k2: 8,
        strategy: SelectionStrategy::Dcs,
        seed: 0,
    };
    // Warm-up.
    select(&x0, &c0, &vae, &model, &conditions, &latents, &cfg).unwrap();
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        for _ in 0..20 {
            select(&x0, &c0, &vae, &model, &conditions, &latents, &cfg).unwrap();
        }
        samples.push(start.elapsed().as_secs_f64());
    }
    median_of(samples)
}

#[test]
fn selection_runtime_grows_subquadratically() {
    let base = time_select(2_000, 7);
    let scaled = time_select(8_000, 7);
    let ratio = scaled / base;
    assert!(
        ratio < 6.0,
        "4x data should cost < 6x time, measured {ratio:.2}x ({base:.4}s -> {scaled:.4}s)"
    );
}

fn time_fit_after_select(n: usize, repeats: usize) -> f64 {
    let k = 20;
    let (model, conditions, latents) = synthetic_world(n, k, 11);
    let vae = VaeModel::dense(16, 1, 8, &[16], 1).unwrap();
    let mut rng = SeedRng::new(3);
    let x0 = TimeSeries::new((0..16).map(|_| rng.uniform_in(-1.0, 1.0)).collect(), 16, 1).unwrap();
    let cfg = SelectionConfig {
        k1: 10,
        k2: 20,
        strategy: SelectionStrategy::Dcs,
        seed: 0,
    };
    let picked = select(&x0, &conditions[0].clone(), &vae, &model, &conditions, &latents, &cfg)
        .unwrap();
    assert_eq!(picked.len(), 200, "fixed selection size expected");
    let schema = model.schema().clone();
    let tree_cfg = TreeConfig::default();
    mapping::fit(&picked.conditions, &picked.latents, &schema, MappingVariant::Tree, &tree_cfg)
        .unwrap();
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        for _ in 0..30 {
            mapping::fit(
                &picked.conditions,
                &picked.latents,
                &schema,
                MappingVariant::Tree,
                &tree_cfg,
            )
            .unwrap();
        }
        samples.push(start.elapsed().as_secs_f64());
    }
    median_of(samples)
}

#[test]
fn mapping_fit_cost_is_independent_of_dataset_size() {
    let small = time_fit_after_select(1_000, 7);
    let large = time_fit_after_select(10_000, 7);
    let ratio = large / small;
    assert!(
        ratio < 1.5,
        "10x data with fixed selection should not change fit cost, measured {ratio:.2}x"
    );
}
