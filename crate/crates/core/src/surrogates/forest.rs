//! Random forest regression.
//!
//! Trees are grown on bootstrap resamples to unlimited depth; a node with at
//! most `min_node_size` samples becomes a leaf. Each split considers
//! `ceil(sqrt(p))` randomly chosen features and maximizes the reduction in
//! squared error. Categorical features are split by ordering the levels
//! present in the node by their mean target and scanning the ordered
//! prefixes, so `.missing` behaves like any other level.
//!
//! A level absent from a node at training time is routed by comparing its
//! mean target over the whole training set (or, if never observed, the
//! overall target mean) with the split threshold, which is the midpoint of
//! the node means on either side of the cut.

use rand::seq::index::sample as sample_indices;
use rand::{Rng as _, RngCore};

use super::{check_row, PosteriorPrediction, Surrogate, TrainingSet};
use crate::encodings::ColumnKind;
use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, Rng};

const MAX_LEVELS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncertaintyMethod {
    /// Sample standard deviation of the per-tree predictions.
    PerTreeSd,
    /// Bias-corrected jackknife-after-bootstrap, truncated at zero. This is
    /// an approximation of the estimator found in common forest libraries.
    Jackknife,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub num_trees: usize,
    pub uncertainty: UncertaintyMethod,
    pub min_node_size: usize,
    /// Features tried per split; `None` means `ceil(sqrt(p))`.
    pub mtry: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            num_trees: 500,
            uncertainty: UncertaintyMethod::PerTreeSd,
            min_node_size: 5,
            mtry: None,
        }
    }
}

/// Flat tree node. A leaf points to itself on both sides so that stepping
/// past it is a no-op.
#[derive(Debug, Clone)]
struct Node {
    feature: u32,
    left: u32,
    right: u32,
    categorical: bool,
    /// split threshold, or the prediction of a leaf
    value: f64,
    left_levels: u128,
}

impl Node {
    fn leaf(id: u32, value: f64) -> Self {
        Self {
            feature: 0,
            left: id,
            right: id,
            categorical: false,
            value,
            left_levels: 0,
        }
    }

    #[inline(always)]
    fn step(&self, x: &[f64]) -> u32 {
        let v = x[self.feature as usize];
        let go_left = if self.categorical {
            self.left_levels >> (v as u32 & 127) & 1 == 1
        } else {
            v <= self.value
        };
        if go_left {
            self.left
        } else {
            self.right
        }
    }
}

/// Rows routed through one tree together.
const LANES: usize = 8;

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
    /// in-bag multiplicity per training row
    in_bag: Vec<u16>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0u32;
        loop {
            let next = self.nodes[i as usize].step(x);
            if next == i {
                return self.nodes[i as usize].value;
            }
            i = next;
        }
    }

    /// Routes `LANES` rows in lockstep to hide load latency.
    fn predict_lanes(&self, xs: &[Vec<f64>], out: &mut [f64]) {
        let mut idx = [0u32; LANES];
        loop {
            let mut moved = false;
            for k in 0..LANES {
                let next = self.nodes[idx[k] as usize].step(&xs[k]);
                moved |= next != idx[k];
                idx[k] = next;
            }
            if !moved {
                break;
            }
        }
        for k in 0..LANES {
            out[k] = self.nodes[idx[k] as usize].value;
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForestModel {
    kinds: Vec<ColumnKind>,
    trees: Vec<Tree>,
    uncertainty: UncertaintyMethod,
    n_train: usize,
    /// present when every column is categorical
    masks: Option<LeafMasks>,
}

impl ForestModel {
    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn uncertainty(&self) -> UncertaintyMethod {
        self.uncertainty
    }

    fn summarize(&self, per_tree: &[f64]) -> PosteriorPrediction {
        match self.uncertainty {
            UncertaintyMethod::PerTreeSd => PosteriorPrediction::from_members(per_tree),
            UncertaintyMethod::Jackknife => self.jackknife(per_tree),
        }
    }

    fn jackknife(&self, per_tree: &[f64]) -> PosteriorPrediction {
        let b = per_tree.len() as f64;
        let n = self.n_train as f64;
        let mean = per_tree.iter().sum::<f64>() / b;
        let mut sum_sq = 0.0;
        for i in 0..self.n_train {
            let (mut s, mut c) = (0.0, 0usize);
            for (tree, &t) in self.trees.iter().zip(per_tree) {
                if tree.in_bag[i] == 0 {
                    s += t;
                    c += 1;
                }
            }
            if c > 0 {
                let d = s / c as f64 - mean;
                sum_sq += d * d;
            }
        }
        let jack = (n - 1.0) / n * sum_sq;
        let tree_var: f64 = per_tree.iter().map(|t| (t - mean) * (t - mean)).sum();
        let correction = (std::f64::consts::E - 1.0) * n / (b * b) * tree_var;
        PosteriorPrediction::new(mean, (jack - correction).max(0.0).sqrt())
    }
}

impl Surrogate for ForestModel {
    fn member_predictions(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_row(&self.kinds, x)?;
        Ok(self.trees.iter().map(|t| t.predict(x)).collect())
    }

    fn predict(&self, x: &[f64]) -> Result<PosteriorPrediction> {
        let per_tree = self.member_predictions(x)?;
        Ok(self.summarize(&per_tree))
    }

    fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<PosteriorPrediction>> {
        for x in xs {
            check_row(&self.kinds, x)?;
        }
        let n_trees = self.trees.len();
        let mut per_tree = vec![0.0; n_trees];
        if let Some(masks) = &self.masks {
            let mut alive = vec![0u64; n_trees];
            return Ok(xs
                .iter()
                .map(|x| {
                    masks.evaluate(&self.trees, x, &mut alive, &mut per_tree);
                    self.summarize(&per_tree)
                })
                .collect());
        }
        // tree-major over chunks keeps each tree hot in cache
        const CHUNK: usize = 64;
        let mut buf = vec![0.0; CHUNK * n_trees];
        let mut out = Vec::with_capacity(xs.len());
        let mut lane_out = [0.0; LANES];
        for chunk in xs.chunks(CHUNK) {
            let full = chunk.len() / LANES * LANES;
            for (t, tree) in self.trees.iter().enumerate() {
                for c0 in (0..full).step_by(LANES) {
                    tree.predict_lanes(&chunk[c0..c0 + LANES], &mut lane_out);
                    for (k, &v) in lane_out.iter().enumerate() {
                        buf[(c0 + k) * n_trees + t] = v;
                    }
                }
                for (c, x) in chunk.iter().enumerate().skip(full) {
                    buf[c * n_trees + t] = tree.predict(x);
                }
            }
            out.extend((0..chunk.len()).map(|c| self.summarize(&buf[c * n_trees..(c + 1) * n_trees])));
        }
        Ok(out)
    }
}

/// Leaf-elimination tables for forests over categorical columns.
///
/// Leaves of each tree are numbered left to right. For every column, level
/// and tree, `table` holds the leaves a row with that level can still reach;
/// the reached leaf is the single bit left after AND-ing the entries of all
/// columns. Trees with more than 64 leaves are traversed instead.
#[derive(Debug, Clone)]
struct LeafMasks {
    /// start of each column's block; a block is `[level][tree]`
    offsets: Vec<usize>,
    table: Vec<u64>,
    /// one bit per leaf, or 0 for traversed trees
    initial: Vec<u64>,
    leaf_values: Vec<Vec<f64>>,
}

impl LeafMasks {
    fn compile(kinds: &[ColumnKind], trees: &[Tree]) -> Option<Self> {
        let n_trees = trees.len();
        let mut offsets = Vec::with_capacity(kinds.len());
        let mut total = 0;
        for kind in kinds {
            let ColumnKind::Categorical { levels } = *kind else {
                return None;
            };
            offsets.push(total);
            total += levels * n_trees;
        }
        let mut table = vec![!0u64; total];
        let mut initial = vec![0u64; n_trees];
        let mut leaf_values = vec![Vec::new(); n_trees];
        for (t, tree) in trees.iter().enumerate() {
            let mut subtree = vec![0u64; tree.nodes.len()];
            if !number_leaves(tree, 0, &mut subtree, &mut leaf_values[t]) {
                leaf_values[t].clear();
                continue;
            }
            initial[t] = subtree[0];
            for (id, node) in tree.nodes.iter().enumerate() {
                if node.left as usize == id {
                    continue;
                }
                let f = node.feature as usize;
                let ColumnKind::Categorical { levels } = kinds[f] else {
                    unreachable!()
                };
                for level in 0..levels {
                    let cut = if node.left_levels >> level & 1 == 1 {
                        subtree[node.right as usize]
                    } else {
                        subtree[node.left as usize]
                    };
                    table[offsets[f] + level * n_trees + t] &= !cut;
                }
            }
        }
        Some(Self {
            offsets,
            table,
            initial,
            leaf_values,
        })
    }

    fn evaluate(&self, trees: &[Tree], x: &[f64], alive: &mut [u64], out: &mut [f64]) {
        let n_trees = trees.len();
        alive.copy_from_slice(&self.initial);
        for (f, &v) in x.iter().enumerate() {
            let start = self.offsets[f] + v as usize * n_trees;
            for (a, m) in alive.iter_mut().zip(&self.table[start..start + n_trees]) {
                *a &= m;
            }
        }
        for (t, o) in out.iter_mut().enumerate() {
            *o = if self.initial[t] == 0 {
                trees[t].predict(x)
            } else {
                self.leaf_values[t][alive[t].trailing_zeros() as usize]
            };
        }
    }
}

/// Assigns leaf bits below `id`; false when the tree has more than 64 leaves.
fn number_leaves(tree: &Tree, id: usize, subtree: &mut [u64], values: &mut Vec<f64>) -> bool {
    let node = &tree.nodes[id];
    if node.left as usize == id {
        if values.len() == 64 {
            return false;
        }
        subtree[id] = 1 << values.len();
        values.push(node.value);
        return true;
    }
    let (l, r) = (node.left as usize, node.right as usize);
    if !number_leaves(tree, l, subtree, values) || !number_leaves(tree, r, subtree, values) {
        return false;
    }
    subtree[id] = subtree[l] | subtree[r];
    true
}

struct Grower<'a> {
    columns: Vec<Vec<f64>>,
    kinds: &'a [ColumnKind],
    targets: &'a [f64],
    /// whole-training-set mean target per level, per categorical column
    fallback_means: Vec<Vec<f64>>,
    min_node_size: usize,
    mtry: usize,
}

struct Split {
    feature: usize,
    gain: f64,
    kind: SplitKind,
}

enum SplitKind {
    Numeric(f64),
    Categorical(u128),
}

impl Grower<'_> {
    fn grow(&self, rows: Vec<usize>, rng: &mut Rng, nodes: &mut Vec<Node>) -> u32 {
        let id = nodes.len() as u32;
        let n = rows.len();
        let first = self.targets[rows[0]];
        if rows.iter().all(|&r| self.targets[r] == first) {
            nodes.push(Node::leaf(id, first));
            return id;
        }
        let sum: f64 = rows.iter().map(|&r| self.targets[r]).sum();
        nodes.push(Node::leaf(id, sum / n as f64));
        if n <= self.min_node_size {
            return id;
        }
        let p = self.kinds.len();
        let mut best: Option<Split> = None;
        for f in sample_indices(rng, p, self.mtry.min(p)).into_iter() {
            let candidate = match self.kinds[f] {
                ColumnKind::Numeric => self.best_numeric(f, &rows, sum),
                ColumnKind::Categorical { levels } => self.best_categorical(f, levels, &rows, sum),
            };
            if let Some(c) = candidate {
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        let Some(split) = best else {
            return id;
        };
        let col = &self.columns[split.feature];
        let goes_left = |r: usize| match split.kind {
            SplitKind::Numeric(t) => col[r] <= t,
            SplitKind::Categorical(mask) => mask >> (col[r] as u32) & 1 == 1,
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| goes_left(r));
        let left = self.grow(left_rows, rng, nodes);
        let right = self.grow(right_rows, rng, nodes);
        let node = &mut nodes[id as usize];
        node.feature = split.feature as u32;
        node.left = left;
        node.right = right;
        match split.kind {
            SplitKind::Numeric(threshold) => node.value = threshold,
            SplitKind::Categorical(mask) => {
                node.categorical = true;
                node.left_levels = mask;
            }
        }
        id
    }

    fn best_numeric(&self, f: usize, rows: &[usize], total: f64) -> Option<Split> {
        let col = &self.columns[f];
        let mut pairs: Vec<(f64, f64)> = rows.iter().map(|&r| (col[r], self.targets[r])).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pairs.len();
        let parent = total * total / n as f64;
        let mut left_sum = 0.0;
        let mut best: Option<(f64, f64)> = None;
        for i in 0..n - 1 {
            left_sum += pairs[i].1;
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let nl = (i + 1) as f64;
            let nr = (n - i - 1) as f64;
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, 0.5 * (pairs[i].0 + pairs[i + 1].0)));
            }
        }
        best.filter(|(g, _)| *g > 1e-15).map(|(gain, t)| Split {
            feature: f,
            gain,
            kind: SplitKind::Numeric(t),
        })
    }

    fn best_categorical(&self, f: usize, levels: usize, rows: &[usize], total: f64) -> Option<Split> {
        let col = &self.columns[f];
        let mut sums = vec![0.0; levels];
        let mut counts = vec![0usize; levels];
        for &r in rows {
            let l = col[r] as usize;
            sums[l] += self.targets[r];
            counts[l] += 1;
        }
        let mut present: Vec<(usize, f64)> = (0..levels)
            .filter(|&l| counts[l] > 0)
            .map(|l| (l, sums[l] / counts[l] as f64))
            .collect();
        if present.len() < 2 {
            return None;
        }
        present.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let n = rows.len() as f64;
        let parent = total * total / n;
        let (mut left_sum, mut left_n) = (0.0, 0usize);
        let mut best: Option<(f64, usize)> = None;
        for (i, &(l, _)) in present[..present.len() - 1].iter().enumerate() {
            left_sum += sums[l];
            left_n += counts[l];
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / left_n as f64
                + right_sum * right_sum / (rows.len() - left_n) as f64
                - parent;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, i));
            }
        }
        let (gain, cut) = best.filter(|(g, _)| *g > 1e-15)?;
        let threshold = 0.5 * (present[cut].1 + present[cut + 1].1);
        let mut mask = 0u128;
        for &(l, _) in &present[..=cut] {
            mask |= 1 << l;
        }
        for l in 0..levels {
            if counts[l] == 0 && self.fallback_means[f][l] <= threshold {
                mask |= 1 << l;
            }
        }
        Some(Split {
            feature: f,
            gain,
            kind: SplitKind::Categorical(mask),
        })
    }
}

/// Fits `cfg.num_trees` trees on bootstrap resamples of `data`.
pub fn fit_forest(data: &TrainingSet, cfg: &ForestConfig, rng: &mut Rng) -> Result<ForestModel> {
    if cfg.num_trees < 2 {
        return Err(Error::Config("forest needs at least 2 trees".into()));
    }
    if data.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: data.len(),
        });
    }
    let kinds = data.kinds();
    for kind in kinds {
        if let ColumnKind::Categorical { levels } = kind {
            if *levels > MAX_LEVELS {
                return Err(Error::SchemaMismatch(format!(
                    "categorical column with {levels} levels exceeds the supported {MAX_LEVELS}"
                )));
            }
        }
    }
    for row in data.rows() {
        check_row(kinds, row)?;
    }
    let n = data.len();
    let p = kinds.len();
    let columns: Vec<Vec<f64>> = (0..p)
        .map(|j| data.rows().iter().map(|r| r[j]).collect())
        .collect();
    let targets = data.targets();
    let overall = targets.iter().sum::<f64>() / n as f64;
    let fallback_means = kinds
        .iter()
        .enumerate()
        .map(|(j, kind)| match kind {
            ColumnKind::Numeric => Vec::new(),
            ColumnKind::Categorical { levels } => {
                let mut sums = vec![0.0; *levels];
                let mut counts = vec![0usize; *levels];
                for (v, t) in columns[j].iter().zip(targets) {
                    sums[*v as usize] += t;
                    counts[*v as usize] += 1;
                }
                sums.iter()
                    .zip(&counts)
                    .map(|(s, &c)| if c > 0 { s / c as f64 } else { overall })
                    .collect()
            }
        })
        .collect();
    let mtry = cfg
        .mtry
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .clamp(1, p.max(1));
    let grower = Grower {
        columns,
        kinds,
        targets,
        fallback_means,
        min_node_size: cfg.min_node_size.max(1),
        mtry,
    };
    let seeds: Vec<u64> = (0..cfg.num_trees).map(|_| rng.next_u64()).collect();
    let trees: Vec<Tree> = seeds
        .into_iter()
        .map(|seed| {
            let mut tree_rng = rng_from_seed(seed);
            let mut in_bag = vec![0u16; n];
            let rows: Vec<usize> = (0..n)
                .map(|_| {
                    let r = tree_rng.random_range(0..n);
                    in_bag[r] += 1;
                    r
                })
                .collect();
            let mut nodes = Vec::new();
            grower.grow(rows, &mut tree_rng, &mut nodes);
            Tree { nodes, in_bag }
        })
        .collect();
    let masks = LeafMasks::compile(kinds, &trees);
    Ok(ForestModel {
        kinds: kinds.to_vec(),
        trees,
        uncertainty: cfg.uncertainty,
        n_train: n,
        masks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn categorical_set(rows: &[(Vec<f64>, f64)], levels: &[usize]) -> TrainingSet {
        let kinds = levels
            .iter()
            .map(|&l| ColumnKind::Categorical { levels: l })
            .collect();
        let mut t = TrainingSet::new(kinds);
        for (x, y) in rows {
            t.push(x.clone(), *y).unwrap();
        }
        t
    }

    #[test]
    fn two_noise_rows_stay_in_range() {
        let mut t = TrainingSet::new(vec![ColumnKind::Numeric; 3]);
        t.push(vec![0.1, 0.7, 0.3], 0.89).unwrap();
        t.push(vec![0.9, 0.2, 0.4], 0.93).unwrap();
        let model = fit_forest(&t, &ForestConfig::default(), &mut rng_from_seed(1)).unwrap();
        let mut rng = rng_from_seed(2);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let p = model.predict(&x).unwrap();
            assert!(p.mean >= 0.89 && p.mean <= 0.93);
            assert!(p.sd >= 0.0);
        }
    }

    #[test]
    fn identical_targets_give_constant_model() {
        let rows: Vec<_> = (0..10).map(|i| (vec![(i % 4) as f64], 0.91)).collect();
        let t = categorical_set(&rows, &[4]);
        let model = fit_forest(&t, &ForestConfig::default(), &mut rng_from_seed(0)).unwrap();
        for l in 0..4 {
            let p = model.predict(&[l as f64]).unwrap();
            assert_eq!(p.mean, 0.91);
            assert_eq!(p.sd, 0.0);
        }
    }

    #[test]
    fn learns_step_function_of_one_categorical() {
        // y depends only on column 0 (8 levels); two noise columns
        let step = [0.88, 0.95, 0.90, 0.93, 0.89, 0.94, 0.91, 0.92];
        let mut rng = rng_from_seed(11);
        let mut make = |n: usize| -> Vec<(Vec<f64>, f64)> {
            (0..n)
                .map(|_| {
                    let a = rng.random_range(0..8usize);
                    let b = rng.random_range(0..5usize);
                    let c = rng.random_range(0..9usize);
                    (vec![a as f64, b as f64, c as f64], step[a])
                })
                .collect()
        };
        let train = make(200);
        let test = make(200);
        let model = fit_forest(
            &categorical_set(&train, &[8, 5, 9]),
            &ForestConfig::default(),
            &mut rng_from_seed(3),
        )
        .unwrap();
        // nearest step value counts as an exact match
        let hits = test
            .iter()
            .filter(|(x, y)| {
                let m = model.predict(x).unwrap().mean;
                let nearest = step
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - m).abs().total_cmp(&(b - m).abs()))
                    .unwrap();
                nearest == *y
            })
            .count();
        assert!(hits as f64 / test.len() as f64 >= 0.95, "hits {hits}");
    }

    #[test]
    fn refit_is_identical() {
        let rows: Vec<_> = (0..30)
            .map(|i| (vec![(i % 5) as f64, (i % 3) as f64], 0.88 + 0.002 * i as f64))
            .collect();
        let t = categorical_set(&rows, &[5, 3]);
        let a = fit_forest(&t, &ForestConfig::default(), &mut rng_from_seed(8)).unwrap();
        let b = fit_forest(&t, &ForestConfig::default(), &mut rng_from_seed(8)).unwrap();
        for (x, _) in &rows {
            assert_eq!(a.member_predictions(x).unwrap(), b.member_predictions(x).unwrap());
        }
    }

    #[test]
    fn unseen_level_gets_finite_prediction() {
        // level 3 never appears in training
        let rows: Vec<_> = (0..40)
            .map(|i| (vec![(i % 3) as f64], [0.88, 0.9, 0.94][i % 3]))
            .collect();
        let t = categorical_set(&rows, &[4]);
        let model = fit_forest(&t, &ForestConfig::default(), &mut rng_from_seed(2)).unwrap();
        let p = model.predict(&[3.0]).unwrap();
        assert!(p.mean.is_finite() && p.mean >= 0.88 && p.mean <= 0.94);
        assert!(model.predict(&[4.0]).is_err());
        assert!(model.predict(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn missing_level_splits_like_any_other() {
        // level 2 plays the role of `.missing` and carries the signal
        let rows: Vec<_> = (0..60)
            .map(|i| {
                let l = i % 3;
                (vec![l as f64], if l == 2 { 0.95 } else { 0.88 })
            })
            .collect();
        let t = categorical_set(&rows, &[3]);
        let model = fit_forest(&t, &ForestConfig::default(), &mut rng_from_seed(4)).unwrap();
        assert!(model.predict(&[2.0]).unwrap().mean > 0.94);
        assert!(model.predict(&[0.0]).unwrap().mean < 0.89);
    }

    #[test]
    fn jackknife_is_nonnegative_and_opt_in() {
        let mut rng = rng_from_seed(5);
        let rows: Vec<_> = (0..50)
            .map(|_| {
                let a = rng.random_range(0..4usize);
                (vec![a as f64], 0.88 + 0.01 * a as f64 + 0.005 * rng.random::<f64>())
            })
            .collect();
        let t = categorical_set(&rows, &[4]);
        let cfg = ForestConfig {
            uncertainty: UncertaintyMethod::Jackknife,
            ..ForestConfig::default()
        };
        let model = fit_forest(&t, &cfg, &mut rng_from_seed(6)).unwrap();
        assert_eq!(model.uncertainty(), UncertaintyMethod::Jackknife);
        for l in 0..4 {
            let p = model.predict(&[l as f64]).unwrap();
            assert!(p.sd >= 0.0 && p.sd.is_finite());
        }
        let plain = fit_forest(&t, &ForestConfig::default(), &mut rng_from_seed(6)).unwrap();
        // same trees, same means
        assert_eq!(
            plain.predict(&[1.0]).unwrap().mean,
            model.predict(&[1.0]).unwrap().mean
        );
    }

    #[test]
    fn needs_two_rows_and_two_trees() {
        let t = categorical_set(&[(vec![0.0], 0.9)], &[2]);
        assert!(fit_forest(&t, &ForestConfig::default(), &mut rng_from_seed(0)).is_err());
        let t = categorical_set(&[(vec![0.0], 0.9), (vec![1.0], 0.8)], &[2]);
        let cfg = ForestConfig {
            num_trees: 1,
            ..ForestConfig::default()
        };
        assert!(fit_forest(&t, &cfg, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn batch_matches_row_prediction() {
        let mut rng = rng_from_seed(21);
        let levels = [9usize, 4, 7, 3, 9, 5];
        let make = |rng: &mut Rng| -> Vec<f64> {
            levels.iter().map(|&l| rng.random_range(0..l) as f64).collect()
        };
        let mut t = TrainingSet::new(levels.iter().map(|&l| ColumnKind::Categorical { levels: l }).collect());
        for _ in 0..100 {
            let row = make(&mut rng);
            let y = 0.9 + 0.003 * row[0] - 0.002 * row[2] + 0.01 * rng.random::<f64>();
            t.push(row, y).unwrap();
        }
        // deep trees exceed the 64-leaf tables and take the traversal path
        let cfg = ForestConfig {
            num_trees: 40,
            min_node_size: 1,
            ..ForestConfig::default()
        };
        let model = fit_forest(&t, &cfg, &mut rng).unwrap();
        let masks = model.masks.as_ref().unwrap();
        assert!(masks.initial.iter().any(|&m| m == 0));
        assert!(masks.initial.iter().any(|&m| m != 0));
        let probes: Vec<Vec<f64>> = (0..203).map(|_| make(&mut rng)).collect();
        let batch = model.predict_batch(&probes).unwrap();
        for (x, b) in probes.iter().zip(&batch) {
            assert_eq!(*b, model.predict(x).unwrap());
        }

        let mut numeric = TrainingSet::new(vec![ColumnKind::Numeric; 3]);
        for _ in 0..60 {
            let row: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let y = row[0] + 0.5 * row[1];
            numeric.push(row, y).unwrap();
        }
        let model = fit_forest(&numeric, &ForestConfig::default(), &mut rng).unwrap();
        assert!(model.masks.is_none());
        let probes: Vec<Vec<f64>> = (0..37).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let batch = model.predict_batch(&probes).unwrap();
        for (x, b) in probes.iter().zip(&batch) {
            assert_eq!(*b, model.predict(x).unwrap());
        }
    }
}
