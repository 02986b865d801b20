//! Similarity measures over word vectors.
//!
//! Besides cosine and inverse-Euclidean similarity this module implements
//! two measures built on component rankings. A ranking orders a vector's
//! components by value (descending, or ascending to capture strongly
//! negative components) and assigns 1-based ranks; only the first `top_n`
//! are kept.
//!
//! * APSyn sums `2 / (rank_i + rank_j)` over components ranked by both words.
//! * RESM replaces raw ranks by the exponential score `exp(-rank·k/d)`,
//!   multiplies the two words' scores per shared component and divides by
//!   the summed score of that component across a set of context words.
//!   Components that are prominent for every context word get discounted.
//!   The final value adds the ascending and descending parts.

use serde::{Deserialize, Serialize};

use crate::embedding::norm;
use crate::error::{Error, Result};

/// `sgn(x)·|x|^p`. Odd, continuous, and the identity at `p = 1`.
pub fn signed_pow(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else {
        x.signum() * x.abs().powf(p)
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// `1 / (1 + ‖a − b‖)`.
pub fn euclidean_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    Ok(1.0 / (1.0 + d))
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine of a zero vector is undefined"));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankOrder {
    /// Smallest value gets rank 1.
    Ascending,
    /// Largest value gets rank 1.
    Descending,
}

/// The `top_n` best components of one vector under an ordering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentRanking {
    order: RankOrder,
    /// Component indices, best first; `top[r - 1]` has rank `r`.
    top: Vec<usize>,
    /// Rank per component, 0 when outside the top.
    rank_of: Vec<u32>,
}

impl ComponentRanking {
    pub fn order(&self) -> RankOrder {
        self.order
    }

    pub fn top_n(&self) -> usize {
        self.top.len()
    }

    pub fn dim(&self) -> usize {
        self.rank_of.len()
    }

    /// 1-based rank of `component`, or `None` outside the top.
    pub fn rank(&self, component: usize) -> Option<usize> {
        match self.rank_of.get(component) {
            Some(&r) if r > 0 => Some(r as usize),
            _ => None,
        }
    }

    /// `(component, rank)` pairs in rank order.
    pub fn ranked(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.top.iter().enumerate().map(|(r, &c)| (c, r + 1))
    }

    fn compatible(&self, other: &ComponentRanking) -> Result<()> {
        if self.order != other.order {
            return Err(Error::invalid("rankings use different orderings"));
        }
        if self.top_n() != other.top_n() || self.dim() != other.dim() {
            return Err(Error::invalid(format!(
                "rankings differ in shape: top_n {} vs {}, dimension {} vs {}",
                self.top_n(),
                other.top_n(),
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

/// Ranks the components of `v`; equal values rank by ascending index.
pub fn rank_components(v: &[f64], order: RankOrder, top_n: usize) -> Result<ComponentRanking> {
    if top_n == 0 || top_n > v.len() {
        return Err(Error::invalid(format!(
            "top_n must be in 1..={}, got {top_n}",
            v.len()
        )));
    }
    let better = |a: &usize, b: &usize| {
        let by_value = match order {
            RankOrder::Descending => v[*b].total_cmp(&v[*a]),
            RankOrder::Ascending => v[*a].total_cmp(&v[*b]),
        };
        by_value.then(a.cmp(b))
    };
    let mut idx: Vec<usize> = (0..v.len()).collect();
    if top_n < idx.len() {
        idx.select_nth_unstable_by(top_n - 1, better);
        idx.truncate(top_n);
    }
    idx.sort_unstable_by(better);
    let mut rank_of = vec![0u32; v.len()];
    for (r, &c) in idx.iter().enumerate() {
        rank_of[c] = r as u32 + 1;
    }
    Ok(ComponentRanking {
        order,
        top: idx,
        rank_of,
    })
}

/// `(component, rank_i, rank_j)` for components in both tops, in component
/// order so that sums do not depend on argument order.
fn shared<'a>(ri: &'a ComponentRanking, rj: &'a ComponentRanking) -> impl Iterator<Item = (usize, usize, usize)> + 'a {
    ri.rank_of
        .iter()
        .zip(&rj.rank_of)
        .enumerate()
        .filter(|(_, (a, b))| **a > 0 && **b > 0)
        .map(|(c, (a, b))| (c, *a as usize, *b as usize))
}

/// Σ over shared top components of `2 / (rank_i + rank_j)`.
pub fn apsyn(ri: &ComponentRanking, rj: &ComponentRanking) -> Result<f64> {
    ri.compatible(rj)?;
    if ri.order != RankOrder::Descending {
        return Err(Error::invalid("APSyn is defined on descending rankings"));
    }
    Ok(shared(ri, rj).map(|(_, a, b)| 2.0 / (a + b) as f64).sum())
}

/// Weight `k` and dimension `d` of the exponential rank score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreParams {
    pub k_weight: f64,
    pub dim: usize,
}

impl ScoreParams {
    pub fn new(k_weight: f64, dim: usize) -> Result<Self> {
        if !(k_weight > 0.0 && k_weight.is_finite()) {
            return Err(Error::Config(format!("score weight must be positive, got {k_weight}")));
        }
        if dim == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        Ok(ScoreParams { k_weight, dim })
    }
}

/// `exp(−rank · k / d)`.
pub fn score(rank: usize, p: &ScoreParams) -> f64 {
    (-(rank as f64) * p.k_weight / p.dim as f64).exp()
}

/// Per-component sum of context words' scores for one ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextScores {
    order: RankOrder,
    /// `None` when there is no context: every component weighs 1.
    h: Option<Vec<f64>>,
}

impl ContextScores {
    pub fn uniform(order: RankOrder) -> Self {
        ContextScores { order, h: None }
    }

    pub fn order(&self) -> RankOrder {
        self.order
    }

    pub fn get(&self, component: usize) -> f64 {
        match &self.h {
            None => 1.0,
            Some(h) => h.get(component).copied().unwrap_or(0.0),
        }
    }
}

/// Sums each component's score over the context rankings. A context word
/// contributes nothing for components outside its top. An empty context
/// gives `h ≡ 1`.
pub fn context_scores(order: RankOrder, context: &[ComponentRanking], p: &ScoreParams) -> Result<ContextScores> {
    let Some(first) = context.first() else {
        return Ok(ContextScores::uniform(order));
    };
    if first.order != order {
        return Err(Error::invalid("context ranking ordering mismatch"));
    }
    let mut h = vec![0.0; first.dim()];
    for r in context {
        first.compatible(r)?;
        for (c, rank) in r.ranked() {
            h[c] += score(rank, p);
        }
    }
    Ok(ContextScores { order, h: Some(h) })
}

/// One ordering's RESM term: Σ over shared top components of
/// `s_i · s_j / h`. Components with `h = 0` are skipped.
pub fn resm_directional(
    ri: &ComponentRanking,
    rj: &ComponentRanking,
    h: &ContextScores,
    p: &ScoreParams,
) -> Result<f64> {
    ri.compatible(rj)?;
    if h.order != ri.order {
        return Err(Error::invalid("context scores ordering mismatch"));
    }
    Ok(shared(ri, rj)
        .filter_map(|(c, a, b)| {
            let hc = h.get(c);
            (hc != 0.0).then(|| score(a, p) * score(b, p) / hc)
        })
        .sum())
}

/// Both halves of a RESM value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResmParts {
    pub ascending: f64,
    pub descending: f64,
}

impl ResmParts {
    pub fn total(&self) -> f64 {
        self.ascending + self.descending
    }
}

/// RESM of `vi` and `vj`, split by ordering. Each ordering uses its own
/// rankings of the pair and of every context vector.
pub fn resm_parts(vi: &[f64], vj: &[f64], context: &[&[f64]], p: &ScoreParams, top_n: usize) -> Result<ResmParts> {
    check_dims(vi, vj)?;
    for c in context {
        check_dims(vi, c)?;
    }
    let part = |order| -> Result<f64> {
        let ri = rank_components(vi, order, top_n)?;
        let rj = rank_components(vj, order, top_n)?;
        let ctx = context
            .iter()
            .map(|c| rank_components(c, order, top_n))
            .collect::<Result<Vec<_>>>()?;
        let h = context_scores(order, &ctx, p)?;
        resm_directional(&ri, &rj, &h, p)
    };
    Ok(ResmParts {
        ascending: part(RankOrder::Ascending)?,
        descending: part(RankOrder::Descending)?,
    })
}

pub fn resm(vi: &[f64], vj: &[f64], context: &[&[f64]], p: &ScoreParams, top_n: usize) -> Result<f64> {
    resm_parts(vi, vj, context, p, top_n).map(|r| r.total())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranks(r: &ComponentRanking) -> Vec<(usize, usize)> {
        r.ranked().collect()
    }

    #[test]
    fn euclidean_cases() {
        assert_eq!(euclidean_similarity(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert!((euclidean_similarity(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(euclidean_similarity(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn cosine_cases() {
        assert_eq!(cosine_similarity(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let a = [0.2, 0.7, -1.1];
        let b = [1.5, -0.3, 0.4];
        let scaled: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        let d = cosine_similarity(&scaled, &b).unwrap() - cosine_similarity(&a, &b).unwrap();
        assert!(d.abs() < 1e-12);
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn ranking_orders() {
        let v = [0.5, -1.0, 2.0];
        let d = rank_components(&v, RankOrder::Descending, 3).unwrap();
        assert_eq!(ranks(&d), vec![(2, 1), (0, 2), (1, 3)]);
        let a = rank_components(&v, RankOrder::Ascending, 3).unwrap();
        assert_eq!(ranks(&a), vec![(1, 1), (0, 2), (2, 3)]);
    }

    #[test]
    fn ranking_ties_follow_index() {
        let r = rank_components(&[0.1; 4], RankOrder::Descending, 4).unwrap();
        assert_eq!(ranks(&r), vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        let r = rank_components(&[0.1; 4], RankOrder::Ascending, 2).unwrap();
        assert_eq!(ranks(&r), vec![(0, 1), (1, 2)]);
        assert_eq!(r.rank(3), None);
    }

    #[test]
    fn ranking_top_n_bounds() {
        assert!(rank_components(&[1.0, 2.0], RankOrder::Descending, 3).is_err());
        assert!(rank_components(&[1.0, 2.0], RankOrder::Descending, 0).is_err());
        let r = rank_components(&[5.0, 1.0, 4.0, 3.0], RankOrder::Descending, 2).unwrap();
        assert_eq!(ranks(&r), vec![(0, 1), (2, 2)]);
    }

    #[test]
    fn apsyn_cases() {
        let a = rank_components(&[3.0, 2.0, 1.0, 0.0], RankOrder::Descending, 2).unwrap();
        let b = rank_components(&[0.0, 1.0, 2.0, 3.0], RankOrder::Descending, 2).unwrap();
        assert_eq!(apsyn(&a, &b).unwrap(), 0.0);
        let c = rank_components(&[2.0, 3.0, 1.0, 0.0], RankOrder::Descending, 2).unwrap();
        // shared {0, 1}: 2/(1+2) + 2/(2+1)
        assert!((apsyn(&a, &c).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(apsyn(&a, &c).unwrap(), apsyn(&c, &a).unwrap());
        let asc = rank_components(&[2.0, 3.0, 1.0, 0.0], RankOrder::Ascending, 2).unwrap();
        assert!(apsyn(&a, &asc).is_err());
    }

    #[test]
    fn score_values() {
        let p = ScoreParams::new(10.0, 300).unwrap();
        assert!((score(1, &p) - (-1.0f64 / 30.0).exp()).abs() < 1e-15);
        assert!((score(1, &p) - 0.96722).abs() < 5e-6);
        assert!((score(300, &p) - 4.54e-5).abs() < 5e-8);
        let tiny = ScoreParams::new(1e-12, 300).unwrap();
        assert!((score(300, &tiny) - 1.0).abs() < 1e-11);
        assert!(ScoreParams::new(0.0, 300).is_err());
    }

    #[test]
    fn context_scores_linearity() {
        let p = ScoreParams::new(10.0, 3).unwrap();
        let r = rank_components(&[0.5, -1.0, 2.0], RankOrder::Descending, 2).unwrap();
        let one = context_scores(RankOrder::Descending, std::slice::from_ref(&r), &p).unwrap();
        assert_eq!(one.get(2), score(1, &p));
        assert_eq!(one.get(0), score(2, &p));
        assert_eq!(one.get(1), 0.0);
        let two = context_scores(RankOrder::Descending, &[r.clone(), r], &p).unwrap();
        for c in 0..3 {
            assert_eq!(two.get(c), 2.0 * one.get(c));
        }
        let empty = context_scores(RankOrder::Ascending, &[], &p).unwrap();
        assert_eq!(empty.get(1), 1.0);
    }

    #[test]
    fn resm_empty_intersection() {
        let p = ScoreParams::new(10.0, 4).unwrap();
        let a = rank_components(&[3.0, 2.0, 1.0, 0.0], RankOrder::Descending, 2).unwrap();
        let b = rank_components(&[0.0, 1.0, 2.0, 3.0], RankOrder::Descending, 2).unwrap();
        let h = ContextScores::uniform(RankOrder::Descending);
        assert_eq!(resm_directional(&a, &b, &h, &p).unwrap(), 0.0);
        let wrong = ContextScores::uniform(RankOrder::Ascending);
        assert!(resm_directional(&a, &b, &wrong, &p).is_err());
    }

    #[test]
    fn resm_identical_rankings_geometric_sum() {
        let p = ScoreParams::new(10.0, 6).unwrap();
        let v = [0.3, -0.2, 1.4, 0.0, 0.9, -1.1];
        let r = rank_components(&v, RankOrder::Descending, 6).unwrap();
        let h = ContextScores::uniform(RankOrder::Descending);
        let expected: f64 = (1..=6).map(|n| (-2.0 * n as f64 * 10.0 / 6.0).exp()).sum();
        assert!((resm_directional(&r, &r, &h, &p).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn resm_is_sum_of_parts_and_symmetric() {
        let p = ScoreParams::new(10.0, 5).unwrap();
        let a = [0.3, -0.2, 1.4, 0.0, 0.9];
        let b = [1.1, -0.5, 0.4, 0.2, -0.9];
        let c = [0.0, 0.7, -0.4, 1.2, 0.1];
        let ctx: [&[f64]; 2] = [&b, &c];
        let parts = resm_parts(&a, &b, &ctx, &p, 5).unwrap();
        assert_eq!(resm(&a, &b, &ctx, &p, 5).unwrap(), parts.ascending + parts.descending);
        assert_eq!(resm(&a, &b, &ctx, &p, 5).unwrap(), resm(&b, &a, &ctx, &p, 5).unwrap());
    }

    #[test]
    fn signed_power() {
        assert_eq!(signed_pow(-2.0, 3.0), -8.0);
        assert_eq!(signed_pow(-0.25, 0.5), -0.5);
        assert_eq!(signed_pow(0.0, 9.0), 0.0);
        assert_eq!(signed_pow(-0.3, 1.0), -0.3);
    }
}
