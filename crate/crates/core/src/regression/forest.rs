//! CART regression forest: bootstrap resampling, per-node feature
//! subsampling, variance-reduction splits and a minimum leaf size.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    value: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    count: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ForestParams {
    pub n_trees: usize,
    pub min_leaf: usize,
    pub max_features: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    /// `columns[f][i]` is feature `f` of training row `i`.
    pub fn fit(columns: &[Vec<f64>], y: &[f64], params: ForestParams) -> Forest {
        let d = columns.len();
        let mtry = ((params.max_features * d as f64).ceil() as usize).clamp(1, d);
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
                grow_tree(columns, y, mtry, params.min_leaf.max(1), &mut rng)
            })
            .collect();
        Forest { trees }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        sum / self.trees.len() as f64
    }

    /// Mean prediction over copies of `row` whose coordinate `j` takes each
    /// value in `values`. Each tree is walked once, forking only at nodes
    /// that split on `j`.
    pub fn mean_with_replaced(&self, row: &[f64], j: usize, values: &[f64]) -> f64 {
        if values.is_empty() {
            return f64::NAN;
        }
        let mut scratch = values.to_vec();
        let mut sum = 0.0;
        for t in &self.trees {
            sum += t.sum_with_replaced(0, row, j as u32, &mut scratch);
        }
        sum / (self.trees.len() as f64 * values.len() as f64)
    }
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        let mut idx = 0usize;
        loop {
            let n = &self.nodes[idx];
            if n.feature == LEAF {
                return n.value;
            }
            idx = if row[n.feature as usize] <= n.threshold {
                n.left as usize
            } else {
                n.right as usize
            };
        }
    }

    fn sum_with_replaced(&self, mut idx: usize, row: &[f64], j: u32, vals: &mut [f64]) -> f64 {
        loop {
            let n = &self.nodes[idx];
            if n.feature == LEAF {
                return n.value * vals.len() as f64;
            }
            if n.feature != j {
                idx = if row[n.feature as usize] <= n.threshold {
                    n.left as usize
                } else {
                    n.right as usize
                };
                continue;
            }
            let split = partition(vals, n.threshold);
            let (lo, hi) = vals.split_at_mut(split);
            let mut s = 0.0;
            if !lo.is_empty() {
                s += self.sum_with_replaced(n.left as usize, row, j, lo);
            }
            if !hi.is_empty() {
                s += self.sum_with_replaced(n.right as usize, row, j, hi);
            }
            return s;
        }
    }
}

/// Moves values `<= threshold` to the front; returns their count.
fn partition(vals: &mut [f64], threshold: f64) -> usize {
    let mut k = 0;
    for i in 0..vals.len() {
        if vals[i] <= threshold {
            vals.swap(i, k);
            k += 1;
        }
    }
    k
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn grow_tree(columns: &[Vec<f64>], y: &[f64], mtry: usize, min_leaf: usize, rng: &mut ChaCha8Rng) -> Tree {
    let n = y.len();
    let d = columns.len();
    let mut boot: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut nodes: Vec<Node> = Vec::new();
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);

    // (node index, start, end) ranges into `boot`
    nodes.push(leaf(0.0, 0));
    let mut stack = vec![(0usize, 0usize, n)];
    while let Some((node_idx, start, end)) = stack.pop() {
        let idx = &mut boot[start..end];
        let count = idx.len();
        let sum: f64 = idx.iter().map(|&i| y[i]).sum();
        let mean = sum / count as f64;
        nodes[node_idx] = leaf(mean, count);
        if count < 2 * min_leaf {
            continue;
        }
        let parent_score = sum * sum / count as f64;

        let mut features: Vec<usize> = sample(rng, d, mtry).into_iter().collect();
        features.sort_unstable();

        let mut best: Option<Split> = None;
        for &f in &features {
            let col = &columns[f];
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (col[i], y[i])));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for k in 1..count {
                left_sum += pairs[k - 1].1;
                if k < min_leaf || count - k < min_leaf {
                    continue;
                }
                if pairs[k - 1].0 >= pairs[k].0 {
                    continue;
                }
                let right_sum = sum - left_sum;
                let score = left_sum * left_sum / k as f64 + right_sum * right_sum / (count - k) as f64;
                // strict improvement keeps the lowest feature, then lowest threshold
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(Split {
                        feature: f,
                        threshold: 0.5 * (pairs[k - 1].0 + pairs[k].0),
                        score,
                    });
                }
            }
        }
        let Some(split) = best else { continue };
        if split.score <= parent_score * (1.0 + 1e-12) + 1e-300 {
            continue;
        }
        let col = &columns[split.feature];
        let mut k = 0;
        for i in 0..count {
            if col[idx[i]] <= split.threshold {
                idx.swap(i, k);
                k += 1;
            }
        }
        let left = nodes.len();
        nodes.push(leaf(0.0, 0));
        nodes.push(leaf(0.0, 0));
        nodes[node_idx] = Node {
            feature: split.feature as u32,
            threshold: split.threshold,
            left: left as u32,
            right: (left + 1) as u32,
            value: mean,
            count: count as u32,
        };
        stack.push((left + 1, start + k, end));
        stack.push((left, start, start + k));
    }
    Tree { nodes }
}

fn leaf(value: f64, count: usize) -> Node {
    Node {
        feature: LEAF,
        threshold: 0.0,
        left: 0,
        right: 0,
        value,
        count: count as u32,
    }
}
