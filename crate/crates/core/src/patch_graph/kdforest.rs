//! Approximate K-nearest-neighbor search with a forest of randomized k-d trees.
//!
//! Each tree splits on the mean of a coordinate drawn at random from the
//! highest-variance ones. Queries explore all trees together in
//! best-bin-first order, stopping after a fixed number of leaf probes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::knn::{check_k, Candidate, Neighbors, TopK};
use super::patches::PatchSet;
use crate::error::Result;
use crate::scalar::{dist_sq, Real};

const SPLIT_CANDIDATES: usize = 5;
const VARIANCE_SAMPLE: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ApproxParams {
    /// Leaves visited per query; `None` searches exhaustively.
    pub max_leaf_probes: Option<usize>,
    pub trees: usize,
    pub leaf_size: usize,
    pub seed: u64,
}

impl Default for ApproxParams {
    fn default() -> Self {
        ApproxParams {
            max_leaf_probes: Some(32),
            trees: 4,
            leaf_size: 16,
            seed: 0,
        }
    }
}

enum Node<T> {
    Leaf { start: u32, end: u32 },
    Split { dim: u32, value: T, left: u32, right: u32 },
}

struct Tree<T> {
    nodes: Vec<Node<T>>,
    order: Vec<u32>,
}

impl<T: Real> Tree<T> {
    fn build(patches: &PatchSet<T>, leaf_size: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut tree = Tree {
            nodes: Vec::new(),
            order: (0..patches.len() as u32).collect(),
        };
        let mut order = std::mem::take(&mut tree.order);
        tree.grow(patches, &mut order, 0, leaf_size.max(1), rng);
        tree.order = order;
        tree
    }

    fn grow(
        &mut self,
        patches: &PatchSet<T>,
        order: &mut [u32],
        offset: usize,
        leaf_size: usize,
        rng: &mut ChaCha8Rng,
    ) -> u32 {
        let id = self.nodes.len() as u32;
        let leaf = Node::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        };
        if order.len() <= leaf_size {
            self.nodes.push(leaf);
            return id;
        }
        let Some((dim, value)) = choose_split(patches, order, rng) else {
            self.nodes.push(leaf);
            return id;
        };
        // Partition: coordinate < value goes left.
        let mut mid = 0;
        for i in 0..order.len() {
            if patches.patch(order[i] as usize)[dim] < value {
                order.swap(i, mid);
                mid += 1;
            }
        }
        if mid == 0 || mid == order.len() {
            self.nodes.push(leaf);
            return id;
        }
        self.nodes.push(Node::Split {
            dim: dim as u32,
            value,
            left: 0,
            right: 0,
        });
        let (lo, hi) = order.split_at_mut(mid);
        let left = self.grow(patches, lo, offset, leaf_size, rng);
        let right = self.grow(patches, hi, offset + mid, leaf_size, rng);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[id as usize] {
            *l = left;
            *r = right;
        }
        id
    }
}

/// Picks a random dimension among the highest-variance ones and its mean.
fn choose_split<T: Real>(patches: &PatchSet<T>, order: &[u32], rng: &mut ChaCha8Rng) -> Option<(usize, T)> {
    let dim = patches.dim();
    let stride = (order.len() / VARIANCE_SAMPLE).max(1);
    let sample: Vec<&[T]> = order
        .iter()
        .step_by(stride)
        .map(|&i| patches.patch(i as usize))
        .collect();
    let count = T::from_usize_lossy(sample.len());
    let mut stats: Vec<(T, usize, T)> = (0..dim)
        .map(|d| {
            let mean = sample.iter().map(|p| p[d]).sum::<T>() / count;
            let var = sample.iter().map(|p| (p[d] - mean) * (p[d] - mean)).sum::<T>() / count;
            (var, d, mean)
        })
        .filter(|s| s.0 > T::zero())
        .collect();
    if stats.is_empty() {
        return None;
    }
    stats.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    stats.truncate(SPLIT_CANDIDATES);
    let &(_, d, mean) = stats.choose(rng)?;
    Some((d, mean))
}

/// Unexplored branch, ordered so the smallest bound pops first.
struct Branch<T> {
    bound: T,
    tree: u32,
    node: u32,
}

impl<T: Real> PartialEq for Branch<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Branch<T> {}

impl<T: Real> PartialOrd for Branch<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Branch<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(other.tree.cmp(&self.tree))
            .then(other.node.cmp(&self.node))
    }
}

/// A forest of randomized k-d trees over a patch set.
pub struct KdForest<'a, T> {
    patches: &'a PatchSet<T>,
    trees: Vec<Tree<T>>,
}

impl<'a, T: Real> KdForest<'a, T> {
    pub fn build(patches: &'a PatchSet<T>, params: &ApproxParams) -> Self {
        let trees = (0..params.trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
                Tree::build(patches, params.leaf_size, &mut rng)
            })
            .collect();
        KdForest { patches, trees }
    }

    fn query(&self, i: usize, k: usize, max_probes: Option<usize>, stamp: &mut [u32], generation: u32) -> Vec<Candidate<T>> {
        let q = self.patches.patch(i);
        let mut top = TopK::new(k);
        let mut queue = BinaryHeap::new();
        for t in 0..self.trees.len() {
            queue.push(Branch {
                bound: T::zero(),
                tree: t as u32,
                node: 0,
            });
        }
        stamp[i] = generation;
        let mut probes = 0usize;
        while let Some(branch) = queue.pop() {
            if let Some(limit) = max_probes {
                if probes >= limit && top.len() == k {
                    break;
                }
            }
            if branch.bound > top.bound() {
                // Everything left is at least this far.
                break;
            }
            let tree = &self.trees[branch.tree as usize];
            let mut node = branch.node;
            loop {
                match &tree.nodes[node as usize] {
                    Node::Split { dim, value, left, right } => {
                        let diff = q[*dim as usize] - *value;
                        let (near, far) = if diff < T::zero() { (*left, *right) } else { (*right, *left) };
                        let bound = branch.bound.max(diff * diff);
                        queue.push(Branch {
                            bound,
                            tree: branch.tree,
                            node: far,
                        });
                        node = near;
                    }
                    Node::Leaf { start, end } => {
                        probes += 1;
                        for &j in &tree.order[*start as usize..*end as usize] {
                            let j = j as usize;
                            if stamp[j] == generation {
                                continue;
                            }
                            stamp[j] = generation;
                            top.push(Candidate {
                                dist_sq: dist_sq(q, self.patches.patch(j)),
                                index: j as u32,
                            });
                        }
                        break;
                    }
                }
            }
        }
        top.into_sorted()
    }

    /// K nearest neighbors of every patch in the set (self excluded).
    pub fn knn_all(&self, k: usize, max_probes: Option<usize>) -> Result<Neighbors<T>> {
        check_k(self.patches, k)?;
        let count = self.patches.len();
        let lists: Vec<Vec<Candidate<T>>> = (0..count)
            .into_par_iter()
            .map_init(
                || (vec![u32::MAX; count], 0u32),
                |(stamp, generation), i| {
                    *generation = generation.wrapping_add(1);
                    if *generation == u32::MAX {
                        stamp.iter_mut().for_each(|s| *s = u32::MAX);
                        *generation = 0;
                    }
                    self.query(i, k, max_probes, stamp, *generation)
                },
            )
            .collect();
        Ok(Neighbors::from_lists(k, lists))
    }
}

/// Approximate K nearest neighbors; with `max_leaf_probes = None` the result
/// equals [`super::knn_exact`].
pub fn knn_approx<T: Real>(patches: &PatchSet<T>, k: usize, params: &ApproxParams) -> Result<Neighbors<T>> {
    check_k(patches, k)?;
    KdForest::build(patches, params).knn_all(k, params.max_leaf_probes)
}
