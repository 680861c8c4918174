use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::patches::PatchSet;
use crate::error::{invalid, Result};
use crate::scalar::{dist_sq, Real};

/// Directed K-nearest-neighbor lists: for every node, `k` neighbors sorted by
/// increasing distance (ties by smaller index). Self-matches are excluded.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighbors<T> {
    k: usize,
    indices: Vec<u32>,
    distances: Vec<T>,
}

impl<T: Real> Neighbors<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.indices.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    /// Euclidean distances matching [`Neighbors::neighbors`].
    pub fn distances(&self, i: usize) -> &[T] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    pub(crate) fn from_lists(k: usize, lists: Vec<Vec<Candidate<T>>>) -> Self {
        let mut indices = Vec::with_capacity(lists.len() * k);
        let mut distances = Vec::with_capacity(lists.len() * k);
        for list in lists {
            debug_assert_eq!(list.len(), k);
            for c in list {
                indices.push(c.index);
                distances.push(c.dist_sq.sqrt());
            }
        }
        Neighbors {
            k,
            indices,
            distances,
        }
    }

    /// Builds neighbor lists from explicit `(i, j, distance)` triples.
    pub fn from_triples(nodes: usize, k: usize, triples: &[(usize, usize, T)]) -> Result<Self> {
        let mut lists: Vec<Vec<Candidate<T>>> = vec![Vec::new(); nodes];
        for &(i, j, d) in triples {
            if i >= nodes || j >= nodes || i == j || !(d >= T::zero()) {
                return invalid("invalid neighbor triple");
            }
            lists[i].push(Candidate {
                dist_sq: d * d,
                index: j as u32,
            });
        }
        if lists.iter().any(|l| l.len() != k) {
            return invalid(format!("every node needs exactly {k} neighbors"));
        }
        for l in &mut lists {
            l.sort();
        }
        Ok(Self::from_lists(k, lists))
    }
}

/// Heap/sort key ordered by squared distance, then by index.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Candidate<T> {
    pub dist_sq: T,
    pub index: u32,
}

impl<T: Real> PartialEq for Candidate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Candidate<T> {}

impl<T: Real> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Candidate<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .partial_cmp(&other.dist_sq)
            .unwrap_or(Ordering::Equal)
            .then(self.index.cmp(&other.index))
    }
}

/// Bounded max-heap keeping the `k` smallest candidates.
pub(crate) struct TopK<T> {
    k: usize,
    heap: BinaryHeap<Candidate<T>>,
}

impl<T: Real> TopK<T> {
    pub fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    pub fn push(&mut self, c: Candidate<T>) {
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if let Some(top) = self.heap.peek() {
            if c < *top {
                self.heap.pop();
                self.heap.push(c);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    /// Current k-th smallest squared distance, or infinity while not full.
    pub fn bound(&self) -> T {
        if self.heap.len() < self.k {
            T::infinity()
        } else {
            self.heap.peek().map(|c| c.dist_sq).unwrap_or_else(T::infinity)
        }
    }

    pub fn into_sorted(self) -> Vec<Candidate<T>> {
        self.heap.into_sorted_vec()
    }
}

pub(crate) fn check_k<T: Real>(patches: &PatchSet<T>, k: usize) -> Result<()> {
    if k == 0 {
        return invalid("neighbor count must be at least 1");
    }
    if k >= patches.len() {
        return invalid(format!(
            "neighbor count {k} must be smaller than the number of patches {}",
            patches.len()
        ));
    }
    Ok(())
}

/// Exact K nearest neighbors by a full quadratic scan.
pub fn knn_exact<T: Real>(patches: &PatchSet<T>, k: usize) -> Result<Neighbors<T>> {
    check_k(patches, k)?;
    let count = patches.len();
    let lists: Vec<Vec<Candidate<T>>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let query = patches.patch(i);
            let mut top = TopK::new(k);
            for j in 0..count {
                if j != i {
                    top.push(Candidate {
                        dist_sq: dist_sq(query, patches.patch(j)),
                        index: j as u32,
                    });
                }
            }
            top.into_sorted()
        })
        .collect();
    Ok(Neighbors::from_lists(k, lists))
}

/// Fraction of true neighbors recovered by `approx`. A returned neighbor also
/// counts when it ties the exact k-th distance, so tie-breaking differences
/// are not penalized.
pub fn recall<T: Real>(approx: &Neighbors<T>, exact: &Neighbors<T>) -> f64 {
    let mut hits = 0usize;
    let mut total = 0usize;
    for i in 0..exact.node_count() {
        let kth = *exact.distances(i).last().unwrap();
        let truth = exact.neighbors(i);
        for (j, d) in approx.neighbors(i).iter().zip(approx.distances(i)) {
            if truth.contains(j) || *d <= kth {
                hits += 1;
            }
        }
        total += exact.k();
    }
    hits as f64 / total.max(1) as f64
}
