//! Multiple-choice synonym tests (TOEFL/ESL style).
//!
//! Question files have one question per line with six tab-separated
//! fields: the question word, four candidates, and the 0-based index of the
//! correct candidate. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{CaseFolding, EmbeddingSpace};
use crate::error::{Error, Result};
use crate::hubness::{shifted_similarity, CenteringMode, CosineIndex, HubnessConfig};
use crate::similarity::{
    apsyn, context_scores, cosine_similarity, euclidean_similarity, rank_components, resm_directional,
    ComponentRanking, RankOrder, ScoreParams,
};

pub const CANDIDATES: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Question {
    pub word: String,
    pub candidates: [String; CANDIDATES],
    pub correct: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuestionSet {
    pub name: String,
    pub questions: Vec<Question>,
}

pub fn load_questions<R: BufRead>(reader: R, name: &str) -> Result<QuestionSet> {
    let mut questions = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != CANDIDATES + 2 {
            return Err(Error::parse(
                line_no,
                format!("expected {} tab-separated fields, found {}", CANDIDATES + 2, fields.len()),
            ));
        }
        if let Some(bad) = fields[..=CANDIDATES]
            .iter()
            .find(|f| f.is_empty() || f.chars().any(char::is_whitespace))
        {
            return Err(Error::parse(line_no, format!("invalid word {bad:?}")));
        }
        let correct: usize = fields[CANDIDATES + 1]
            .trim()
            .parse()
            .ok()
            .filter(|&i| i < CANDIDATES)
            .ok_or_else(|| Error::parse(line_no, format!("bad answer index {:?}", fields[CANDIDATES + 1])))?;
        let candidates: [String; CANDIDATES] = std::array::from_fn(|i| fields[i + 1].to_string());
        for i in 0..CANDIDATES {
            if candidates[i + 1..].contains(&candidates[i]) {
                return Err(Error::parse(line_no, format!("duplicate candidate {:?}", candidates[i])));
            }
        }
        questions.push(Question {
            word: fields[0].to_string(),
            candidates,
            correct,
        });
    }
    if questions.is_empty() {
        return Err(Error::EmptyInput("question set"));
    }
    Ok(QuestionSet {
        name: name.to_string(),
        questions,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    #[default]
    Cosine,
    Euclid,
    Apsyn,
    Resm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureConfig {
    pub measure: Measure,
    /// Weight `k` of the exponential rank score.
    pub score_k: f64,
    /// Ranking cutoff; `None` means the full dimension.
    pub top_n: Option<usize>,
    pub folding: CaseFolding,
    /// When set (similarity_shift mode), cosine is replaced by the
    /// localized-centering shifted similarity.
    pub shift: Option<HubnessConfig>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            measure: Measure::Cosine,
            score_k: 10.0,
            top_n: None,
            folding: CaseFolding::Exact,
            shift: None,
        }
    }
}

/// Scores word pairs under one [`MeasureConfig`] over a fixed space.
pub struct Scorer<'a> {
    space: &'a EmbeddingSpace,
    cfg: MeasureConfig,
    params: ScoreParams,
    top_n: usize,
    index: Option<CosineIndex<'a>>,
}

impl<'a> Scorer<'a> {
    pub fn new(space: &'a EmbeddingSpace, cfg: MeasureConfig) -> Result<Self> {
        let params = ScoreParams::new(cfg.score_k, space.dim())?;
        let top_n = cfg.top_n.unwrap_or(space.dim());
        if top_n == 0 || top_n > space.dim() {
            return Err(Error::Config(format!(
                "top-n must be in 1..={}, got {top_n}",
                space.dim()
            )));
        }
        let index = match cfg.shift {
            Some(h) => {
                if h.mode != CenteringMode::SimilarityShift {
                    return Err(Error::Config("shifted scoring needs the similarity_shift mode".into()));
                }
                if cfg.measure != Measure::Cosine {
                    return Err(Error::Config("similarity_shift applies to the cosine measure only".into()));
                }
                h.validate(space)?;
                Some(CosineIndex::new(space))
            }
            None => None,
        };
        Ok(Scorer {
            space,
            cfg,
            params,
            top_n,
            index,
        })
    }

    pub fn space(&self) -> &EmbeddingSpace {
        self.space
    }

    pub fn config(&self) -> &MeasureConfig {
        &self.cfg
    }

    pub fn lookup(&self, word: &str) -> Result<usize> {
        self.space.lookup(word, self.cfg.folding)
    }

    /// Similarity of `a` to each of `targets`. For RESM the context is
    /// `context`, given as word indices.
    pub fn score_many(&self, a: usize, targets: &[usize], context: &[usize]) -> Result<Vec<f64>> {
        let va = self.space.row(a);
        match self.cfg.measure {
            Measure::Cosine => match (&self.index, &self.cfg.shift) {
                (Some(index), Some(h)) => targets
                    .iter()
                    .map(|&t| {
                        let c = index.local_centroid(t, h.knn_k)?;
                        Ok(shifted_similarity(va, self.space.row(t), &c, h.gamma))
                    })
                    .collect(),
                _ => targets
                    .iter()
                    .map(|&t| cosine_similarity(va, self.space.row(t)))
                    .collect(),
            },
            Measure::Euclid => targets
                .iter()
                .map(|&t| euclidean_similarity(va, self.space.row(t)))
                .collect(),
            Measure::Apsyn => {
                let ra = self.ranking(a, RankOrder::Descending)?;
                targets
                    .iter()
                    .map(|&t| apsyn(&ra, &self.ranking(t, RankOrder::Descending)?))
                    .collect()
            }
            Measure::Resm => {
                let mut totals = vec![0.0; targets.len()];
                // ascending first, matching `similarity::resm`
                for order in [RankOrder::Ascending, RankOrder::Descending] {
                    let ra = self.ranking(a, order)?;
                    let ctx = context
                        .iter()
                        .map(|&c| self.ranking(c, order))
                        .collect::<Result<Vec<_>>>()?;
                    let h = context_scores(order, &ctx, &self.params)?;
                    for (total, &t) in totals.iter_mut().zip(targets) {
                        let rt = self.ranking(t, order)?;
                        let part = resm_directional(&ra, &rt, &h, &self.params)?;
                        *total = if order == RankOrder::Ascending { part } else { *total + part };
                    }
                }
                Ok(totals)
            }
        }
    }

    pub fn score_pair(&self, a: usize, b: usize, context: &[usize]) -> Result<f64> {
        Ok(self.score_many(a, &[b], context)?[0])
    }

    fn ranking(&self, word: usize, order: RankOrder) -> Result<ComponentRanking> {
        rank_components(self.space.row(word), order, self.top_n)
    }
}

/// Result of answering one question.
#[derive(Clone, Debug, PartialEq)]
pub struct QuestionOutcome {
    pub question: Question,
    /// `-inf` for out-of-vocabulary candidates (and for every candidate
    /// of an unanswerable question).
    pub scores: [f64; CANDIDATES],
    /// `None` when the question could not be answered.
    pub chosen: Option<usize>,
    /// 1 + number of candidates scoring strictly higher than the correct
    /// one; `CANDIDATES` for unanswerable questions.
    pub rank_of_correct: usize,
    pub question_oov: bool,
    pub candidate_oov: [bool; CANDIDATES],
}

impl QuestionOutcome {
    pub fn is_correct(&self) -> bool {
        self.chosen == Some(self.question.correct)
    }

    /// Builds an outcome from per-candidate scores, choosing the first
    /// maximal candidate.
    pub fn from_scores(
        question: Question,
        scores: [f64; CANDIDATES],
        question_oov: bool,
        candidate_oov: [bool; CANDIDATES],
    ) -> Self {
        let answerable = !question_oov && candidate_oov.iter().any(|oov| !oov);
        let (chosen, rank_of_correct) = if answerable {
            (Some(argmax_first(&scores)), competition_rank(&scores, question.correct))
        } else {
            (None, CANDIDATES)
        };
        QuestionOutcome {
            question,
            scores,
            chosen,
            rank_of_correct,
            question_oov,
            candidate_oov,
        }
    }

    fn flags(&self) -> String {
        let mut flags = Vec::new();
        if self.question_oov {
            flags.push("oov_q".to_string());
        }
        for (i, oov) in self.candidate_oov.iter().enumerate() {
            if *oov {
                flags.push(format!("oov_c{i}"));
            }
        }
        if flags.is_empty() {
            "-".to_string()
        } else {
            flags.join(",")
        }
    }
}

fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Competition rank of `scores[target]` in descending order; ties share
/// the better rank.
fn competition_rank(scores: &[f64], target: usize) -> usize {
    1 + scores.iter().filter(|s| **s > scores[target]).count()
}

pub fn answer_question(q: &Question, scorer: &Scorer<'_>) -> Result<QuestionOutcome> {
    let Ok(word) = scorer.lookup(&q.word) else {
        return Ok(QuestionOutcome::from_scores(
            q.clone(),
            [f64::NEG_INFINITY; CANDIDATES],
            true,
            [false; CANDIDATES],
        ));
    };
    let ids: [Option<usize>; CANDIDATES] = std::array::from_fn(|i| scorer.lookup(&q.candidates[i]).ok());
    let present: Vec<usize> = ids.iter().flatten().copied().collect();
    let values = scorer.score_many(word, &present, &present)?;
    let mut scores = [f64::NEG_INFINITY; CANDIDATES];
    let mut values = values.into_iter();
    for (slot, id) in scores.iter_mut().zip(&ids) {
        if id.is_some() {
            let v = values.next().expect("one score per present candidate");
            *slot = if v.is_nan() { f64::NEG_INFINITY } else { v };
        }
    }
    Ok(QuestionOutcome::from_scores(
        q.clone(),
        scores,
        false,
        std::array::from_fn(|i| ids[i].is_none()),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub name: String,
    pub outcomes: Vec<QuestionOutcome>,
}

impl EvaluationReport {
    pub fn new(name: impl Into<String>, outcomes: Vec<QuestionOutcome>) -> Self {
        EvaluationReport {
            name: name.into(),
            outcomes,
        }
    }

    pub fn total(&self) -> usize {
        self.outcomes.len()
    }

    pub fn correct(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_correct()).count()
    }

    pub fn answered(&self) -> usize {
        self.outcomes.iter().filter(|o| o.chosen.is_some()).count()
    }

    /// Correct answers over all questions, unanswerable ones included.
    pub fn accuracy(&self) -> f64 {
        if self.outcomes.is_empty() {
            0.0
        } else {
            self.correct() as f64 / self.total() as f64
        }
    }

    pub fn average_rank(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.outcomes.iter().map(|o| o.rank_of_correct).sum::<usize>() as f64 / self.total() as f64
    }

    /// One line per question, then the summary line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            let chosen = o.chosen.map_or("-".to_string(), |c| c.to_string());
            let _ = write!(out, "{} {} {}", o.question.word, chosen, o.rank_of_correct);
            for s in &o.scores {
                let _ = write!(out, " {}", format_score(*s));
            }
            let _ = writeln!(out, " {}", o.flags());
        }
        let _ = writeln!(
            out,
            "accuracy={:.6} average_rank={:.6} answered={}/{}",
            self.accuracy(),
            self.average_rank(),
            self.answered(),
            self.total()
        );
        out
    }
}

fn format_score(s: f64) -> String {
    if s == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{s:.6}")
    }
}

/// Answers every question; questions run in parallel, output keeps the
/// set's order.
pub fn evaluate(set: &QuestionSet, scorer: &Scorer<'_>) -> Result<EvaluationReport> {
    let outcomes = set
        .questions
        .par_iter()
        .map(|q| answer_question(q, scorer))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport::new(set.name.clone(), outcomes))
}

/// Merges two runs over the same questions by mean candidate rank.
///
/// Candidates are ranked within each report (competition ranking); the one
/// with the lowest mean rank wins, ties going to the better rank in
/// `a`, then to the lower candidate index. The combined scores are the
/// negated mean ranks.
pub fn heuristic_combine(a: &EvaluationReport, b: &EvaluationReport) -> Result<EvaluationReport> {
    if a.outcomes.len() != b.outcomes.len()
        || a.outcomes.iter().zip(&b.outcomes).any(|(x, y)| x.question != y.question)
    {
        return Err(Error::invalid("reports cover different question sets"));
    }
    let outcomes = a
        .outcomes
        .iter()
        .zip(&b.outcomes)
        .map(|(oa, ob)| {
            let ra: [usize; CANDIDATES] = std::array::from_fn(|c| competition_rank(&oa.scores, c));
            let rb: [usize; CANDIDATES] = std::array::from_fn(|c| competition_rank(&ob.scores, c));
            let mean: [f64; CANDIDATES] = std::array::from_fn(|c| (ra[c] + rb[c]) as f64 / 2.0);
            let question_oov = oa.question_oov || ob.question_oov;
            let candidate_oov = std::array::from_fn(|c| oa.candidate_oov[c] || ob.candidate_oov[c]);
            let answerable = oa.chosen.is_some() || ob.chosen.is_some();
            let mut order: Vec<usize> = (0..CANDIDATES).collect();
            order.sort_by(|&x, &y| {
                mean[x]
                    .total_cmp(&mean[y])
                    .then(ra[x].cmp(&ra[y]))
                    .then(x.cmp(&y))
            });
            let correct = oa.question.correct;
            let (chosen, rank_of_correct) = if answerable {
                (
                    Some(order[0]),
                    1 + mean.iter().filter(|m| **m < mean[correct]).count(),
                )
            } else {
                (None, CANDIDATES)
            };
            QuestionOutcome {
                question: oa.question.clone(),
                scores: mean.map(|m| -m),
                chosen,
                rank_of_correct,
                question_oov: question_oov && !answerable,
                candidate_oov,
            }
        })
        .collect();
    Ok(EvaluationReport::new(a.name.clone(), outcomes))
}
