//! Retrofitting: pulling each lexicon head toward the mean of its synonyms.
//!
//! Both variants use a Jacobi schedule. Every iteration reads the previous
//! iteration's matrix and writes a fresh one, so the result does not depend
//! on the order (or parallelism) in which heads are visited. Words without a
//! lexicon entry are copied through untouched.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{norm, EmbeddingSpace};
use crate::error::{Error, Result};
use crate::lexicon::SynonymLexicon;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RetrofitVariant {
    #[default]
    None,
    /// Euclidean average with the synonym mean.
    Original,
    /// Average of unit directions, rescaled by the head's norm.
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetrofitConfig {
    pub iterations: usize,
    /// Weight on the head's own vector.
    pub alpha: f64,
    /// Uniform weight on each synonym.
    pub beta: f64,
    pub variant: RetrofitVariant,
}

impl Default for RetrofitConfig {
    fn default() -> Self {
        RetrofitConfig {
            iterations: 10,
            alpha: 1.0,
            beta: 1.0,
            variant: RetrofitVariant::L2,
        }
    }
}

impl RetrofitConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("retrofit iterations must be at least 1".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        if !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be finite, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Dispatches on `cfg.variant`; `None` returns a copy of the input.
pub fn retrofit(space: &EmbeddingSpace, lex: &SynonymLexicon, cfg: &RetrofitConfig) -> Result<EmbeddingSpace> {
    match cfg.variant {
        RetrofitVariant::None => Ok(space.clone()),
        RetrofitVariant::Original => retrofit_original(space, lex, cfg),
        RetrofitVariant::L2 => retrofit_l2(space, lex, cfg),
    }
}

/// `v_i' = (α v_i + Σ_j β v_j / |L(w_i)|) / 2`, repeated `cfg.iterations` times.
pub fn retrofit_original(
    space: &EmbeddingSpace,
    lex: &SynonymLexicon,
    cfg: &RetrofitConfig,
) -> Result<EmbeddingSpace> {
    cfg.validate()?;
    let edges = lex.to_indices(space)?;
    let dim = space.dim();
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    run_jacobi(space, &edges, cfg.iterations, |prev, head, syns, out| {
        let inv = 1.0 / syns.len() as f64;
        out.fill(0.0);
        for &j in syns {
            let v = &prev[j * dim..(j + 1) * dim];
            out.iter_mut().zip(v).for_each(|(o, x)| *o += beta * x);
        }
        let own = &prev[head * dim..(head + 1) * dim];
        out.iter_mut()
            .zip(own)
            .for_each(|(o, x)| *o = (alpha * x + *o * inv) / 2.0);
        Ok(())
    })
}

/// `v_i' = ‖v_i‖ (v̂_i + Σ_j v̂_j / |L(w_i)|) / 2` where `v̂ = v / ‖v‖`.
///
/// The output is not renormalized, so a head's norm can only shrink.
pub fn retrofit_l2(space: &EmbeddingSpace, lex: &SynonymLexicon, cfg: &RetrofitConfig) -> Result<EmbeddingSpace> {
    cfg.validate()?;
    let edges = lex.to_indices(space)?;
    let dim = space.dim();
    run_jacobi(space, &edges, cfg.iterations, |prev, head, syns, out| {
        let unit_norm = |i: usize| {
            let n = norm(&prev[i * dim..(i + 1) * dim]);
            if n == 0.0 {
                Err(Error::ZeroNorm(space.word(i).to_string()))
            } else {
                Ok(n)
            }
        };
        let inv = 1.0 / syns.len() as f64;
        out.fill(0.0);
        for &j in syns {
            let n = unit_norm(j)?;
            let v = &prev[j * dim..(j + 1) * dim];
            out.iter_mut().zip(v).for_each(|(o, x)| *o += x / n);
        }
        let head_norm = unit_norm(head)?;
        let own = &prev[head * dim..(head + 1) * dim];
        out.iter_mut()
            .zip(own)
            .for_each(|(o, x)| *o = head_norm * (x / head_norm + *o * inv) / 2.0);
        // nearly aligned synonyms can round the norm one ulp above the bound
        while norm(out) > head_norm {
            out.iter_mut().for_each(|o| *o *= 1.0 - f64::EPSILON);
        }
        Ok(())
    })
}

fn run_jacobi<F>(space: &EmbeddingSpace, edges: &[(usize, Vec<usize>)], iterations: usize, update: F) -> Result<EmbeddingSpace>
where
    F: Fn(&[f64], usize, &[usize], &mut [f64]) -> Result<()> + Sync,
{
    let dim = space.dim();
    let mut current = space.data().to_vec();
    let mut updated = vec![0.0; edges.len() * dim];
    for _ in 0..iterations {
        let prev = &current;
        updated
            .par_chunks_exact_mut(dim)
            .zip(edges.par_iter())
            .try_for_each(|(out, (head, syns))| update(prev, *head, syns, out))?;
        for ((head, _), row) in edges.iter().zip(updated.chunks_exact(dim)) {
            current[head * dim..(head + 1) * dim].copy_from_slice(row);
        }
    }
    if let Some((head, _)) = edges
        .iter()
        .find(|(h, _)| current[h * dim..(h + 1) * dim].iter().any(|x| !x.is_finite()))
    {
        return Err(Error::NonFinite(space.word(*head).to_string()));
    }
    Ok(space.with_data(current))
}
