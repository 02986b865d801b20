//! Post-processing and similarity scoring for pretrained word embeddings.
//!
//! The pipeline mirrors how the pieces are meant to be combined:
//!
//! 1. load a space ([`embedding`]) and optionally normalize it,
//! 2. retrofit it to a synonym lexicon ([`lexicon`], [`retrofit`]),
//! 3. reduce hubness with localized centering ([`hubness`]),
//! 4. score word pairs with cosine, APSyn or RESM ([`similarity`]),
//! 5. answer multiple-choice synonym questions ([`evaluation`]).
//!
//! [`cli`] wires these into the `resm` binary.

pub mod cli;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod hubness;
pub mod lexicon;
pub mod retrofit;
pub mod similarity;

pub use embedding::{load_embeddings, CaseFolding, EmbeddingSpace, LoadSummary};
pub use error::{Error, Result};
pub use evaluation::{
    answer_question, evaluate, heuristic_combine, load_questions, EvaluationReport, Measure, MeasureConfig,
    Question, QuestionOutcome, QuestionSet, Scorer,
};
pub use hubness::{
    centroid, knn, koccurrence_skewness, localized_center, localized_similarity, CenteringMode, HubnessConfig,
    NeighborList, Sample, Skewness,
};
pub use lexicon::{load_lexicon, SynonymLexicon};
pub use retrofit::{retrofit_l2, retrofit_original, RetrofitConfig, RetrofitVariant};
pub use similarity::{
    apsyn, context_scores, cosine_similarity, euclidean_similarity, rank_components, resm, resm_directional,
    score, ComponentRanking, ContextScores, RankOrder, ScoreParams,
};
