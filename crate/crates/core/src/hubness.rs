//! Exact cosine k-NN, k-occurrence skewness and localized centering.
//!
//! Hubs are points that show up in many other points' neighbor lists. The
//! skewness of the k-occurrence distribution N_k measures how pronounced
//! that is. Localized centering counters it by subtracting (or penalizing
//! with) each point's local centroid, the mean of its k nearest neighbors.
//!
//! Neighbor search is a full scan with a bounded heap per query, parallel
//! across queries. Ties in similarity go to the lower word index, so
//! results never depend on the thread count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{norm, EmbeddingSpace};
use crate::error::{Error, Result};
use crate::similarity::signed_pow;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenteringMode {
    /// `v_i' = v_i − sgn(c_i)|c_i|^γ`, componentwise.
    #[default]
    VectorLiteral,
    /// `sim(x, y) = cos(x, y) − cos(y, c_y)^γ`, leaving vectors alone.
    SimilarityShift,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HubnessConfig {
    pub knn_k: usize,
    pub gamma: f64,
    pub mode: CenteringMode,
}

impl Default for HubnessConfig {
    fn default() -> Self {
        HubnessConfig {
            knn_k: 10,
            gamma: 9.0,
            mode: CenteringMode::VectorLiteral,
        }
    }
}

impl HubnessConfig {
    pub fn validate(&self, space: &EmbeddingSpace) -> Result<()> {
        check_k(self.knn_k, space.len())?;
        if !self.gamma.is_finite() {
            return Err(Error::Config(format!("gamma must be finite, got {}", self.gamma)));
        }
        Ok(())
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "k must satisfy 1 <= k < vocabulary size ({n}), got {k}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub similarity: f64,
}

/// Neighbors in descending similarity, ties by ascending index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeighborList {
    pub entries: Vec<Neighbor>,
}

impl NeighborList {
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|n| n.index)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

// Heap entry ordered so that "greater" means "better neighbor".
#[derive(Clone, Copy)]
struct Candidate {
    score: f64,
    index: usize,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

/// Cosine scanner over a borrowed space. Zero rows have cosine 0 against
/// everything.
pub struct CosineIndex<'a> {
    space: &'a EmbeddingSpace,
    inv_norms: Vec<f64>,
}

impl<'a> CosineIndex<'a> {
    pub fn new(space: &'a EmbeddingSpace) -> Self {
        let inv_norms = space
            .data()
            .par_chunks_exact(space.dim())
            .map(|row| {
                let n = norm(row);
                if n > 0.0 {
                    1.0 / n
                } else {
                    0.0
                }
            })
            .collect();
        CosineIndex { space, inv_norms }
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// The `k` rows with highest cosine to `query`, optionally minus a
    /// per-row `penalty`, skipping `exclude`.
    pub fn knn_with_penalty(
        &self,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
        penalty: Option<&[f64]>,
    ) -> Result<NeighborList> {
        let dim = self.space.dim();
        check_k(k, self.len())?;
        if query.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: query.len(),
            });
        }
        let qn = norm(query);
        let q: Vec<f64> = if qn > 0.0 {
            query.iter().map(|x| x / qn).collect()
        } else {
            vec![0.0; dim]
        };

        let mut heap: BinaryHeap<std::cmp::Reverse<Candidate>> = BinaryHeap::with_capacity(k + 1);
        for (index, row) in self.space.rows().enumerate() {
            if Some(index) == exclude {
                continue;
            }
            let mut score = dot(&q, row) * self.inv_norms[index];
            if let Some(p) = penalty {
                score -= p[index];
            }
            let cand = Candidate { score, index };
            if heap.len() < k {
                heap.push(std::cmp::Reverse(cand));
            } else if let Some(worst) = heap.peek() {
                if cand > worst.0 {
                    heap.pop();
                    heap.push(std::cmp::Reverse(cand));
                }
            }
        }
        let mut found: Vec<Candidate> = heap.into_iter().map(|r| r.0).collect();
        found.sort_by(|a, b| b.cmp(a));
        Ok(NeighborList {
            entries: found
                .into_iter()
                .map(|c| Neighbor {
                    index: c.index,
                    similarity: c.score,
                })
                .collect(),
        })
    }

    pub fn knn(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Result<NeighborList> {
        self.knn_with_penalty(query, k, exclude, None)
    }

    /// Mean vector of the `k` nearest neighbors of row `index`.
    pub fn local_centroid(&self, index: usize, k: usize) -> Result<Vec<f64>> {
        let neighbors = self.knn(self.space.row(index), k, Some(index))?;
        Ok(mean_of(self.space, &neighbors))
    }

    /// Neighbor lists of every row against the rest of the space.
    pub fn all_knn(&self, k: usize, penalty: Option<&[f64]>) -> Result<Vec<NeighborList>> {
        self.knn_of(&(0..self.len()).collect::<Vec<_>>(), k, penalty)
    }

    fn knn_of(&self, queries: &[usize], k: usize, penalty: Option<&[f64]>) -> Result<Vec<NeighborList>> {
        queries
            .par_iter()
            .map(|&i| self.knn_with_penalty(self.space.row(i), k, Some(i), penalty))
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The `k` most cosine-similar words to `query`, excluding `exclude`.
pub fn knn(space: &EmbeddingSpace, query: &[f64], k: usize, exclude: Option<usize>) -> Result<NeighborList> {
    CosineIndex::new(space).knn(query, k, exclude)
}

fn mean_of(space: &EmbeddingSpace, neighbors: &NeighborList) -> Vec<f64> {
    let mut c = vec![0.0; space.dim()];
    for i in neighbors.indices() {
        c.iter_mut().zip(space.row(i)).for_each(|(a, x)| *a += x);
    }
    let n = neighbors.len() as f64;
    c.iter_mut().for_each(|a| *a /= n);
    c
}

/// Mean of the `knn_k` nearest neighbors of word `index` (the word itself
/// excluded).
pub fn centroid(space: &EmbeddingSpace, index: usize, cfg: &HubnessConfig) -> Result<Vec<f64>> {
    cfg.validate(space)?;
    CosineIndex::new(space).local_centroid(index, cfg.knn_k)
}

/// Local centroids of every word, computed against the same snapshot.
pub fn all_centroids(space: &EmbeddingSpace, cfg: &HubnessConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate(space)?;
    let lists = CosineIndex::new(space).all_knn(cfg.knn_k, None)?;
    Ok(lists.par_iter().map(|l| mean_of(space, l)).collect())
}

/// Replaces each vector by `v_i − sgn(c_i)|c_i|^γ`, componentwise.
pub fn localized_center(space: &EmbeddingSpace, cfg: &HubnessConfig) -> Result<EmbeddingSpace> {
    if cfg.mode != CenteringMode::VectorLiteral {
        return Err(Error::Config("localized_center needs the vector_literal mode".into()));
    }
    let centroids = all_centroids(space, cfg)?;
    let dim = space.dim();
    let mut data = space.data().to_vec();
    data.par_chunks_exact_mut(dim)
        .zip(centroids.par_iter())
        .for_each(|(row, c)| {
            row.iter_mut()
                .zip(c)
                .for_each(|(x, ci)| *x -= signed_pow(*ci, cfg.gamma));
        });
    if let Some(i) = data
        .chunks_exact(dim)
        .position(|row| row.iter().any(|x| !x.is_finite()))
    {
        return Err(Error::NonFinite(space.word(i).to_string()));
    }
    Ok(space.with_data(data))
}

/// Per-word penalty `sgn(a)|a|^γ` with `a = cos(v_y, c_y)`.
pub fn local_affinity_penalties(space: &EmbeddingSpace, cfg: &HubnessConfig) -> Result<Vec<f64>> {
    let centroids = all_centroids(space, cfg)?;
    Ok(centroids
        .par_iter()
        .enumerate()
        .map(|(y, c)| signed_pow(cosine_or_zero(space.row(y), c), cfg.gamma))
        .collect())
}

fn cosine_or_zero(a: &[f64], b: &[f64]) -> f64 {
    let n = norm(a) * norm(b);
    if n > 0.0 {
        dot(a, b) / n
    } else {
        0.0
    }
}

/// `cos(v_x, v_y) − cos(v_y, c_y)^γ`. Not symmetric in `x` and `y`.
pub fn localized_similarity(space: &EmbeddingSpace, x: usize, y: usize, cfg: &HubnessConfig) -> Result<f64> {
    if cfg.mode != CenteringMode::SimilarityShift {
        return Err(Error::Config("localized_similarity needs the similarity_shift mode".into()));
    }
    let c = centroid(space, y, cfg)?;
    Ok(shifted_similarity(space.row(x), space.row(y), &c, cfg.gamma))
}

/// Shift formula with a precomputed centroid for `y`.
pub fn shifted_similarity(x: &[f64], y: &[f64], centroid_y: &[f64], gamma: f64) -> f64 {
    cosine_or_zero(x, y) - signed_pow(cosine_or_zero(y, centroid_y), gamma)
}

/// Uniform sample of query points for skewness estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sample {
    pub size: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Skewness {
    pub value: f64,
    /// Set when every N_k count was equal; `value` is then 0.
    pub degenerate: bool,
}

/// Counts how often each word appears in the other words' neighbor lists.
pub fn koccurrence_counts(lists: &[NeighborList], len: usize) -> Vec<u32> {
    let mut counts = vec![0u32; len];
    for list in lists {
        for i in list.indices() {
            counts[i] += 1;
        }
    }
    counts
}

/// Third standardized moment (population form) of integer counts.
pub fn moment_skewness(counts: &[u32]) -> Skewness {
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let (m2, m3) = counts.iter().fold((0.0, 0.0), |(m2, m3), &c| {
        let d = c as f64 - mean;
        (m2 + d * d, m3 + d * d * d)
    });
    let (m2, m3) = (m2 / n, m3 / n);
    if counts.is_empty() || m2 <= f64::EPSILON * mean.abs().max(1.0) {
        return Skewness {
            value: 0.0,
            degenerate: true,
        };
    }
    Skewness {
        value: m3 / m2.powf(1.5),
        degenerate: false,
    }
}

fn sampled_queries(len: usize, sample: Option<Sample>) -> Vec<usize> {
    match sample {
        Some(s) if s.size < len => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let mut picked = rand::seq::index::sample(&mut rng, len, s.size).into_vec();
            picked.sort_unstable();
            picked
        }
        _ => (0..len).collect(),
    }
}

/// Skewness of the N_k distribution under plain cosine k-NN.
pub fn koccurrence_skewness(space: &EmbeddingSpace, k: usize, sample: Option<Sample>) -> Result<Skewness> {
    skewness_with_penalty(space, k, sample, None)
}

/// Skewness of N_k when neighbors are ranked by the shifted similarity.
pub fn shifted_koccurrence_skewness(
    space: &EmbeddingSpace,
    cfg: &HubnessConfig,
    sample: Option<Sample>,
) -> Result<Skewness> {
    let penalties = local_affinity_penalties(space, cfg)?;
    skewness_with_penalty(space, cfg.knn_k, sample, Some(&penalties))
}

fn skewness_with_penalty(
    space: &EmbeddingSpace,
    k: usize,
    sample: Option<Sample>,
    penalty: Option<&[f64]>,
) -> Result<Skewness> {
    check_k(k, space.len())?;
    if matches!(sample, Some(s) if s.size == 0) {
        return Err(Error::invalid("sample size must be positive"));
    }
    let index = CosineIndex::new(space);
    let queries = sampled_queries(space.len(), sample);
    let lists = index.knn_of(&queries, k, penalty)?;
    let skew = moment_skewness(&koccurrence_counts(&lists, space.len()));
    if skew.degenerate {
        log::warn!("k-occurrence distribution has zero variance; skewness reported as 0");
    }
    Ok(skew)
}
