//! Direct-formula reference implementations used as test oracles. These
//! avoid the library's code paths: ranks come from counting instead of
//! sorting, cosine from a single fused expression, RESM from a scan over
//! every component.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use resm::EmbeddingSpace;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn gaussian_space(n: usize, d: usize, seed: u64) -> EmbeddingSpace {
    let mut rng = rng(seed);
    EmbeddingSpace::from_rows((0..n).map(|i| {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        (format!("w{i}"), v)
    }))
    .unwrap()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    ab / (aa * bb).sqrt()
}

pub fn euclid_sim(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..a.len() {
        let diff = a[i] - b[i];
        sum += diff * diff;
    }
    1.0 / (1.0 + sum.sqrt())
}

/// 1-based rank of component `c`: one plus the number of components that
/// beat it (larger value for descending, smaller for ascending; equal
/// values are beaten by lower indices).
pub fn rank(v: &[f64], descending: bool, c: usize) -> usize {
    1 + (0..v.len())
        .filter(|&j| {
            let beats = if descending { v[j] > v[c] } else { v[j] < v[c] };
            beats || (v[j] == v[c] && j < c)
        })
        .count()
}

pub fn apsyn(a: &[f64], b: &[f64], top_n: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..a.len() {
        let (ra, rb) = (rank(a, true, c), rank(b, true, c));
        if ra <= top_n && rb <= top_n {
            total += 2.0 / (ra + rb) as f64;
        }
    }
    total
}

pub fn score(rank: usize, k: f64, d: usize) -> f64 {
    (-(rank as f64) * k / d as f64).exp()
}

/// One ordering of RESM by brute force over every component.
pub fn resm_one(a: &[f64], b: &[f64], context: &[Vec<f64>], k: f64, top_n: usize, descending: bool) -> f64 {
    let d = a.len();
    let mut total = 0.0;
    for c in 0..d {
        let (ra, rb) = (rank(a, descending, c), rank(b, descending, c));
        if ra > top_n || rb > top_n {
            continue;
        }
        let h = if context.is_empty() {
            1.0
        } else {
            context
                .iter()
                .map(|w| {
                    let r = rank(w, descending, c);
                    if r <= top_n {
                        score(r, k, d)
                    } else {
                        0.0
                    }
                })
                .sum()
        };
        if h != 0.0 {
            total += score(ra, k, d) * score(rb, k, d) / h;
        }
    }
    total
}

pub fn resm(a: &[f64], b: &[f64], context: &[Vec<f64>], k: f64, top_n: usize) -> f64 {
    resm_one(a, b, context, k, top_n, false) + resm_one(a, b, context, k, top_n, true)
}

/// k nearest rows by cosine via a full sort of all similarities.
pub fn knn(rows: &[Vec<f64>], query: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, r)| (cosine(query, r), i))
        .collect();
    all.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

/// N_k histogram skewness by brute force.
pub fn koccurrence_skewness(rows: &[Vec<f64>], k: usize) -> f64 {
    let n = rows.len();
    let mut counts = vec![0.0f64; n];
    for (i, r) in rows.iter().enumerate() {
        for j in knn(rows, r, k, Some(i)) {
            counts[j] += 1.0;
        }
    }
    let mean = counts.iter().sum::<f64>() / n as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64;
    let m3 = counts.iter().map(|c| (c - mean).powi(3)).sum::<f64>() / n as f64;
    if var == 0.0 {
        0.0
    } else {
        m3 / var.powf(1.5)
    }
}

/// Jacobi retrofitting written as a plain nested loop. `l2` selects the
/// spherical variant.
pub fn retrofit(rows: &[Vec<f64>], edges: &[(usize, Vec<usize>)], iterations: usize, l2: bool) -> Vec<Vec<f64>> {
    let norm = |v: &Vec<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut cur = rows.to_vec();
    for _ in 0..iterations {
        let old = cur.clone();
        for (head, syns) in edges {
            let d = old[*head].len();
            let mut mean = vec![0.0; d];
            for &s in syns {
                let scale = if l2 { 1.0 / norm(&old[s]) } else { 1.0 };
                for c in 0..d {
                    mean[c] += old[s][c] * scale;
                }
            }
            let own_norm = norm(&old[*head]);
            for c in 0..d {
                mean[c] /= syns.len() as f64;
                cur[*head][c] = if l2 {
                    own_norm * (old[*head][c] / own_norm + mean[c]) / 2.0
                } else {
                    (old[*head][c] + mean[c]) / 2.0
                };
            }
        }
    }
    cur
}

pub fn rows_of(space: &EmbeddingSpace) -> Vec<Vec<f64>> {
    space.rows().map(|r| r.to_vec()).collect()
}
