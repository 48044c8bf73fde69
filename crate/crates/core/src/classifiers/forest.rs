//! Random forest of Gini-impurity decision trees with axis-aligned
//! threshold splits, bootstrap resampling, and 4 (= sqrt(16)) candidate
//! features per node. Prediction averages per-tree leaf class frequencies.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{distribution_from, validate_training, DensityClassifier, FeatureRow, TrainError};
use crate::density::{Density, DensityDistribution};
use crate::features::N_BINS;
use crate::stats::parallel_map;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    /// Random feature candidates per node.
    pub features_per_split: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 200,
            max_depth: None,
            min_samples_leaf: 1,
            min_samples_split: 2,
            features_per_split: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: [u32; 4],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn leaf_frequencies(&self, x: &FeatureRow) -> [f64; 4] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { counts } => {
                    let total: u32 = counts.iter().sum();
                    return counts.map(|c| c as f64 / total as f64);
                }
            }
        }
    }

    /// Depth of the tree; 0 for a single leaf.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match &nodes[idx] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Smallest leaf count total in the tree.
    pub fn min_leaf_total(&self) -> u32 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { counts } => Some(counts.iter().sum()),
                _ => None,
            })
            .min()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    trees: Vec<Tree>,
}

impl ForestModel {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Arithmetic mean of per-tree leaf frequency vectors, exposed so the
    /// vote-averaging identity is directly checkable.
    pub fn tree_votes(&self, x: &FeatureRow) -> Vec<[f64; 4]> {
        self.trees.iter().map(|t| t.leaf_frequencies(x)).collect()
    }
}

impl DensityClassifier for ForestModel {
    fn predict_proba(&self, x: &FeatureRow) -> DensityDistribution {
        let mut acc = [0.0; 4];
        for tree in &self.trees {
            let freq = tree.leaf_frequencies(x);
            for (a, f) in acc.iter_mut().zip(freq) {
                *a += f;
            }
        }
        distribution_from(acc.map(|a| a / self.trees.len() as f64))
    }
}

/// Train `n_trees` trees, each on a same-size bootstrap resample, grown
/// until purity or the min-samples constraints. Per-tree seeds derive as
/// master XOR tree-index, so results are identical however many worker
/// threads run.
pub fn train_forest(
    x: &[FeatureRow],
    y: &[Density],
    cfg: &ForestConfig,
) -> Result<ForestModel, TrainError> {
    validate_training(x, y)?;
    let cfg = *cfg;
    let labels: Vec<usize> = y.iter().map(|d| d.index()).collect();

    let trees = parallel_map(cfg.n_trees, crate::stats::configured_threads(), |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ i as u64);
        let indices: Vec<usize> = (0..x.len()).map(|_| rng.gen_range(0..x.len())).collect();
        let mut builder = TreeBuilder {
            x,
            y: &labels,
            cfg: &cfg,
            rng,
            nodes: Vec::new(),
        };
        builder.build(indices, 0);
        Tree {
            nodes: builder.nodes,
        }
    });

    Ok(ForestModel { config: cfg, trees })
}

struct TreeBuilder<'a> {
    x: &'a [FeatureRow],
    y: &'a [usize],
    cfg: &'a ForestConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    /// Build the subtree over `indices`; returns its root node index.
    fn build(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let mut counts = [0u32; 4];
        for &i in &indices {
            counts[self.y[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || indices.len() < self.cfg.min_samples_split {
            return self.push_leaf(counts);
        }

        match self.best_split(&indices) {
            None => self.push_leaf(counts),
            Some((feature, threshold)) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .into_iter()
                    .partition(|&i| self.x[i][feature] <= threshold);
                let node = self.nodes.len();
                self.nodes.push(Node::Leaf { counts }); // placeholder
                let left = self.build(left_idx, depth + 1);
                let right = self.build(right_idx, depth + 1);
                self.nodes[node] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                node
            }
        }
    }

    fn push_leaf(&mut self, counts: [u32; 4]) -> usize {
        self.nodes.push(Node::Leaf { counts });
        self.nodes.len() - 1
    }

    /// Minimum-weighted-Gini split over a random feature subset; candidate
    /// thresholds are midpoints between consecutive distinct values. Ties
    /// keep the first candidate encountered, which is deterministic.
    fn best_split(&mut self, indices: &[usize]) -> Option<(usize, f64)> {
        let mut features: Vec<usize> = (0..N_BINS).collect();
        features.shuffle(&mut self.rng);
        features.truncate(self.cfg.features_per_split);

        let n = indices.len() as f64;
        let min_leaf = self.cfg.min_samples_leaf;
        let mut best: Option<(f64, usize, f64)> = None;

        for &feature in &features {
            let mut pairs: Vec<(f64, usize)> =
                indices.iter().map(|&i| (self.x[i][feature], self.y[i])).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

            let mut left = [0u32; 4];
            let mut right = [0u32; 4];
            for &(_, label) in &pairs {
                right[label] += 1;
            }

            for cut in 1..pairs.len() {
                let label = pairs[cut - 1].1;
                left[label] += 1;
                right[label] -= 1;
                if pairs[cut].0 == pairs[cut - 1].0 {
                    continue; // not a boundary between distinct values
                }
                if cut < min_leaf || pairs.len() - cut < min_leaf {
                    continue;
                }
                let nl = cut as f64;
                let nr = n - nl;
                let score = nl / n * gini(&left, nl) + nr / n * gini(&right, nr);
                let threshold = (pairs[cut - 1].0 + pairs[cut].0) / 2.0;
                if best.is_none_or(|(b, _, _)| score < b) {
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}

fn gini(counts: &[u32; 4], total: f64) -> f64 {
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn clustered(n_per_class: usize, seed: u64) -> (Vec<FeatureRow>, Vec<Density>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for class in 0..4usize {
            for _ in 0..n_per_class {
                let mut row: FeatureRow = std::array::from_fn(|_| rng.gen::<f64>() * 0.05);
                row[class * 4] = 0.6 + rng.gen::<f64>() * 0.1;
                x.push(row);
                y.push(Density::from_index(class).unwrap());
            }
        }
        (x, y)
    }

    #[test]
    fn memorizes_distinct_rows_with_defaults() {
        let (x, y) = clustered(15, 3);
        let cfg = ForestConfig {
            n_trees: 30,
            ..Default::default()
        };
        let model = train_forest(&x, &y, &cfg).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(xi, yi)| model.predict(xi) == **yi)
            .count();
        assert_eq!(correct, x.len());
    }

    #[test]
    fn min_leaf_equal_to_n_gives_single_leaves() {
        let (x, y) = clustered(10, 4);
        let cfg = ForestConfig {
            n_trees: 12,
            min_samples_leaf: x.len(),
            ..Default::default()
        };
        let model = train_forest(&x, &y, &cfg).unwrap();
        for tree in model.trees() {
            assert_eq!(tree.depth(), 0);
        }
        // prediction is then the average of bootstrap class priors
        let p = model.predict_proba(&x[0]).probabilities();
        for v in p {
            assert!((v - 0.25).abs() < 0.15, "roughly the uniform prior: {p:?}");
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (x, y) = clustered(12, 5);
        let cfg = ForestConfig {
            n_trees: 25,
            seed: 99,
            ..Default::default()
        };
        let a = train_forest(&x, &y, &cfg).unwrap();
        let b = train_forest(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        let probe: FeatureRow = [0.05; N_BINS];
        assert_eq!(
            a.predict_proba(&probe).probabilities(),
            b.predict_proba(&probe).probabilities()
        );
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let (x, y) = clustered(10, 6);
        let cfg = ForestConfig {
            n_trees: 16,
            seed: 7,
            ..Default::default()
        };
        std::env::set_var("BUSDENSITY_THREADS", "1");
        let sequential = train_forest(&x, &y, &cfg).unwrap();
        std::env::set_var("BUSDENSITY_THREADS", "4");
        let parallel = train_forest(&x, &y, &cfg).unwrap();
        std::env::remove_var("BUSDENSITY_THREADS");
        assert_eq!(sequential, parallel);
    }

    #[test]
    fn prediction_is_mean_of_tree_votes() {
        let (x, y) = clustered(8, 8);
        let model = train_forest(
            &x,
            &y,
            &ForestConfig {
                n_trees: 11,
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let probe = x[3];
        let votes = model.tree_votes(&probe);
        let mut mean = [0.0; 4];
        for v in &votes {
            for (m, p) in mean.iter_mut().zip(v) {
                *m += p / votes.len() as f64;
            }
        }
        let predicted = model.predict_proba(&probe).probabilities();
        for (a, b) in predicted.iter().zip(mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn leaves_respect_min_samples_leaf() {
        let (x, y) = clustered(20, 9);
        let cfg = ForestConfig {
            n_trees: 10,
            min_samples_leaf: 5,
            seed: 1,
            ..Default::default()
        };
        let model = train_forest(&x, &y, &cfg).unwrap();
        for tree in model.trees() {
            assert!(tree.min_leaf_total() >= 5);
        }
    }

    #[test]
    fn label_permutation_permutes_votes() {
        let (x, y) = clustered(10, 10);
        let cfg = ForestConfig {
            n_trees: 20,
            seed: 13,
            ..Default::default()
        };
        let (base, _) = (train_forest(&x, &y, &cfg).unwrap(), ());
        let swapped: Vec<Density> = y
            .iter()
            .map(|&l| match l {
                Density::B => Density::D,
                Density::D => Density::B,
                other => other,
            })
            .collect();
        let perm = train_forest(&x, &swapped, &cfg).unwrap();
        for xi in x.iter().take(8) {
            let p0 = base.predict_proba(xi).probabilities();
            let p1 = perm.predict_proba(xi).probabilities();
            assert!((p0[1] - p1[3]).abs() < 1e-12);
            assert!((p0[3] - p1[1]).abs() < 1e-12);
            assert!((p0[0] - p1[0]).abs() < 1e-12);
        }
    }
}
