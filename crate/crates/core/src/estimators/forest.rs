//! Regression forest: bagged CART trees with per-node feature subsampling.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FitSummary, Regressor};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::RngSpec;

fn d_trees() -> usize {
    500
}
fn d_mtry() -> usize {
    32
}
fn d_min_leaf() -> usize {
    5
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    #[serde(default = "d_trees")]
    pub n_trees: usize,
    /// Columns tried at each node.
    #[serde(default = "d_mtry")]
    pub mtry: usize,
    /// Smallest number of (bootstrap) samples in a leaf.
    #[serde(default = "d_min_leaf")]
    pub min_leaf: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    /// Grow each tree on a size-n1 resample drawn with replacement.
    #[serde(default = "d_true")]
    pub bootstrap: bool,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: d_trees(),
            mtry: d_mtry(),
            min_leaf: d_min_leaf(),
            max_depth: None,
            bootstrap: true,
            execution: Execution::default(),
        }
    }
}

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    value: f64,
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut k = 0usize;
        loop {
            let n = &self.nodes[k];
            if n.feature == LEAF {
                return n.value;
            }
            k = if x[n.feature as usize] <= n.threshold {
                n.left as usize
            } else {
                n.right as usize
            };
        }
    }

    fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == LEAF).count()
    }
}

struct Grower<'a> {
    data: &'a Dataset,
    cfg: &'a ForestConfig,
    nodes: Vec<Node>,
    pairs: Vec<(f64, f64)>,
}

impl Grower<'_> {
    fn leaf(&mut self, value: f64) -> u32 {
        self.nodes.push(Node {
            feature: LEAF,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
        });
        (self.nodes.len() - 1) as u32
    }

    /// Best (feature, threshold) among `mtry` random columns, by largest
    /// `S_L^2/n_L + S_R^2/n_R`. `None` when no admissible split improves SSE.
    fn best_split<R: Rng>(&mut self, idx: &[usize], sum: f64, rng: &mut R) -> Option<(usize, f64)> {
        let m = idx.len();
        let min_leaf = self.cfg.min_leaf.max(1);
        let parent = sum * sum / m as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for f in sample(rng, self.data.p(), self.cfg.mtry).into_iter() {
            self.pairs.clear();
            self.pairs
                .extend(idx.iter().map(|&i| (self.data.value(i, f), self.data.y()[i])));
            self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.pairs[0].0 == self.pairs[m - 1].0 {
                continue;
            }
            let mut left = 0.0;
            for k in 0..m - min_leaf {
                left += self.pairs[k].1;
                let nl = k + 1;
                if nl < min_leaf || self.pairs[k].0 == self.pairs[k + 1].0 {
                    continue;
                }
                let right = sum - left;
                let score = left * left / nl as f64 + right * right / (m - nl) as f64;
                if best.is_none_or(|b| score > b.0) {
                    let thr = 0.5 * (self.pairs[k].0 + self.pairs[k + 1].0);
                    // Midpoint can round up to the right value; keep the split honest.
                    let thr = if thr < self.pairs[k + 1].0 { thr } else { self.pairs[k].0 };
                    best = Some((score, f, thr));
                }
            }
        }
        match best {
            Some((score, f, thr)) if score > parent * (1.0 + 1e-12) + 1e-300 => Some((f, thr)),
            _ => None,
        }
    }

    fn grow<R: Rng>(&mut self, idx: &mut [usize], depth: usize, rng: &mut R) -> u32 {
        let m = idx.len();
        let sum: f64 = idx.iter().map(|&i| self.data.y()[i]).sum();
        let mean = sum / m as f64;
        let first = self.data.y()[idx[0]];
        let constant = idx.iter().all(|&i| self.data.y()[i] == first);
        let depth_ok = self.cfg.max_depth.is_none_or(|d| depth < d);
        if constant || !depth_ok || m < 2 * self.cfg.min_leaf.max(1) {
            return self.leaf(if constant { first } else { mean });
        }
        let Some((f, thr)) = self.best_split(idx, sum, rng) else {
            return self.leaf(mean);
        };
        // Partition in place.
        let mut lo = 0;
        for k in 0..m {
            if self.data.value(idx[k], f) <= thr {
                idx.swap(lo, k);
                lo += 1;
            }
        }
        let me = self.nodes.len();
        self.nodes.push(Node {
            feature: f as u32,
            threshold: thr,
            left: 0,
            right: 0,
            value: mean,
        });
        let (l, r) = idx.split_at_mut(lo);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[me].left = left;
        self.nodes[me].right = right;
        me as u32
    }
}

#[derive(Debug, Clone)]
pub struct ForestModel {
    trees: Vec<Tree>,
    mtry: usize,
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

impl Regressor for ForestModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    fn summary(&self) -> FitSummary {
        let leaves: usize = self.trees.iter().map(Tree::leaves).sum();
        FitSummary::Forest {
            trees: self.trees.len(),
            mtry: self.mtry,
            mean_leaves: leaves as f64 / self.trees.len() as f64,
        }
    }
}

pub fn fit_forest(cfg: &ForestConfig, data: &Dataset, rows: &[usize], rng: &RngSpec) -> Result<ForestModel> {
    if cfg.n_trees == 0 || cfg.mtry == 0 || cfg.mtry > data.p() {
        return Err(Error::InvalidConfig(format!(
            "forest needs n_trees >= 1 and 1 <= mtry <= p (got n_trees={}, mtry={}, p={})",
            cfg.n_trees,
            cfg.mtry,
            data.p()
        )));
    }
    if rows.len() < cfg.min_leaf {
        return Err(Error::InvalidData(format!(
            "forest needs at least min_leaf={} rows, got {}",
            cfg.min_leaf,
            rows.len()
        )));
    }
    let trees = cfg.execution.map(cfg.n_trees, |t| {
        let mut r = rng.child(t as u64).rng();
        let mut idx: Vec<usize> = if cfg.bootstrap {
            (0..rows.len()).map(|_| rows[r.gen_range(0..rows.len())]).collect()
        } else {
            rows.to_vec()
        };
        let mut g = Grower {
            data,
            cfg,
            nodes: Vec::new(),
            pairs: Vec::with_capacity(idx.len()),
        };
        g.grow(&mut idx, 0, &mut r);
        Tree { nodes: g.nodes }
    });
    Ok(ForestModel {
        trees,
        mtry: cfg.mtry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, proptest};
    use rand::Rng;

    fn toy(n: usize, seed: u64) -> Dataset {
        let mut r = RngSpec::new(seed).rng();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![r.gen_range(0.0..1.0), r.gen_range(0.0..1.0), r.gen_range(-1.0..1.0)])
            .collect();
        let y = rows
            .iter()
            .map(|x| if x[0] < 0.5 { 1.0 } else { 3.0 } + x[1] + 0.1 * r.gen_range(-1.0..1.0))
            .collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    fn small(trees: usize) -> ForestConfig {
        ForestConfig {
            n_trees: trees,
            mtry: 2,
            ..ForestConfig::default()
        }
    }

    #[test]
    fn constant_response() {
        let d = toy(50, 1);
        let d = Dataset::new(
            (0..50).flat_map(|i| d.row(i).to_vec()).collect(),
            3,
            vec![4.5; 50],
            None,
        )
        .unwrap();
        let all: Vec<usize> = (0..50).collect();
        let m = fit_forest(&small(20), &d, &all, &RngSpec::new(0)).unwrap();
        for i in 0..50 {
            assert_eq!(m.predict(d.row(i)), 4.5);
        }
    }

    #[test]
    fn single_root_leaf_is_mean() {
        let d = toy(40, 2);
        let all: Vec<usize> = (0..40).collect();
        let cfg = ForestConfig {
            n_trees: 1,
            mtry: 3,
            min_leaf: 40,
            bootstrap: false,
            ..ForestConfig::default()
        };
        let m = fit_forest(&cfg, &d, &all, &RngSpec::new(0)).unwrap();
        let mean = d.y().iter().sum::<f64>() / 40.0;
        assert!((m.predict(&[0.2, 0.3, 0.0]) - mean).abs() < 1e-12);
        assert!((m.predict(&[0.9, 0.9, 0.9]) - mean).abs() < 1e-12);
    }

    #[test]
    fn learns_step() {
        let d = toy(400, 3);
        let all: Vec<usize> = (0..400).collect();
        let m = fit_forest(&small(50), &d, &all, &RngSpec::new(1)).unwrap();
        assert!(m.predict(&[0.9, 0.5, 0.0]) - m.predict(&[0.1, 0.5, 0.0]) > 1.5);
    }

    #[test]
    fn deterministic_and_schedule_free() {
        let d = toy(100, 4);
        let all: Vec<usize> = (0..100).collect();
        let mut cfg = small(16);
        let a = fit_forest(&cfg, &d, &all, &RngSpec::new(9)).unwrap();
        cfg.execution = Execution::Sequential;
        let b = fit_forest(&cfg, &d, &all, &RngSpec::new(9)).unwrap();
        for i in 0..100 {
            assert_eq!(a.predict(d.row(i)), b.predict(d.row(i)));
        }
    }

    #[test]
    fn mtry_above_p_rejected() {
        let d = toy(30, 5);
        let all: Vec<usize> = (0..30).collect();
        let cfg = ForestConfig {
            mtry: 4,
            ..small(2)
        };
        assert!(fit_forest(&cfg, &d, &all, &RngSpec::new(0)).is_err());
    }

    #[test]
    fn leaves_respect_min_size() {
        let d = toy(200, 6);
        let all: Vec<usize> = (0..200).collect();
        let cfg = ForestConfig {
            n_trees: 1,
            mtry: 3,
            min_leaf: 7,
            bootstrap: false,
            ..ForestConfig::default()
        };
        let m = fit_forest(&cfg, &d, &all, &RngSpec::new(0)).unwrap();
        let tree = &m.trees[0];
        let mut counts = std::collections::HashMap::new();
        for i in 0..200 {
            let mut k = 0usize;
            while tree.nodes[k].feature != LEAF {
                let n = tree.nodes[k];
                k = if d.row(i)[n.feature as usize] <= n.threshold { n.left } else { n.right } as usize;
            }
            *counts.entry(k).or_insert(0usize) += 1;
        }
        assert!(counts.len() > 1);
        assert!(counts.values().all(|&c| c >= 7));
    }

    proptest! {
        #[test]
        fn predictions_within_training_range(seed in any::<u64>()) {
            let d = toy(60, seed);
            let train: Vec<usize> = (0..40).collect();
            let m = fit_forest(&small(8), &d, &train, &RngSpec::new(seed)).unwrap();
            let lo = train.iter().map(|&i| d.y()[i]).fold(f64::INFINITY, f64::min);
            let hi = train.iter().map(|&i| d.y()[i]).fold(f64::NEG_INFINITY, f64::max);
            for i in 0..60 {
                let p = m.predict(d.row(i));
                prop_assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
            }
        }
    }
}
