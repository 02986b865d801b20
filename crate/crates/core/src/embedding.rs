//! Dense word-embedding storage in the GloVe text format.
//!
//! Each line is `token c1 c2 ... cd`, fields separated by a single ASCII
//! space. Vectors live in one contiguous row-major `f64` matrix so that
//! full scans (k-NN, centering) walk memory linearly.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// How query words are matched against the vocabulary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseFolding {
    /// Token must match exactly.
    #[default]
    Exact,
    /// Query is lowercased before the exact match.
    Lowercase,
}

impl CaseFolding {
    fn fold<'a>(&self, word: &'a str) -> std::borrow::Cow<'a, str> {
        match self {
            CaseFolding::Exact => std::borrow::Cow::Borrowed(word),
            CaseFolding::Lowercase => std::borrow::Cow::Owned(word.to_lowercase()),
        }
    }
}

/// Counts reported by [`load_embeddings`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadSummary {
    /// Distinct tokens kept.
    pub words: usize,
    /// Lines whose token had already been seen (first occurrence wins).
    pub duplicates: usize,
}

/// Vocabulary plus a row-major matrix of word vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpace {
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    dim: usize,
}

impl EmbeddingSpace {
    /// Builds a space from `(token, vector)` pairs. Duplicate tokens are
    /// rejected here; the text loader handles them by keeping the first.
    pub fn from_rows<S, I>(rows: I) -> Result<Self>
    where
        S: Into<String>,
        I: IntoIterator<Item = (S, Vec<f64>)>,
    {
        let mut words = Vec::new();
        let mut index = HashMap::new();
        let mut data = Vec::new();
        let mut dim = 0;
        for (word, vector) in rows {
            let word = word.into();
            validate_token(&word).map_err(Error::invalid)?;
            if words.is_empty() {
                if vector.is_empty() {
                    return Err(Error::invalid("vectors must have at least one component"));
                }
                dim = vector.len();
            } else if vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: vector.len(),
                });
            }
            if vector.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite(word));
            }
            if index.contains_key(&word) {
                return Err(Error::invalid(format!("duplicate token {word:?}")));
            }
            index.insert(word.clone(), words.len());
            words.push(word);
            data.extend_from_slice(&vector);
        }
        if words.is_empty() {
            return Err(Error::EmptyInput("embedding space"));
        }
        Ok(EmbeddingSpace {
            words,
            index,
            data,
            dim,
        })
    }

    /// Same vocabulary, new matrix. Used by transforms.
    pub(crate) fn with_data(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        EmbeddingSpace {
            words: self.words.clone(),
            index: self.index.clone(),
            data,
            dim: self.dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Tokens in load order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }

    /// Exact-match index lookup.
    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Index lookup after applying `folding` to the query word.
    pub fn lookup(&self, word: &str, folding: CaseFolding) -> Result<usize> {
        self.index_of(&folding.fold(word))
            .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))
    }

    /// The stored vector for `word` (exact match).
    pub fn vector_of(&self, word: &str) -> Result<&[f64]> {
        self.vector_of_folded(word, CaseFolding::Exact)
    }

    pub fn vector_of_folded(&self, word: &str, folding: CaseFolding) -> Result<&[f64]> {
        self.lookup(word, folding).map(|i| self.row(i))
    }

    /// Returns a copy with every row scaled to unit Euclidean norm.
    pub fn l2_normalize(&self) -> Result<EmbeddingSpace> {
        let mut data = self.data.clone();
        for (i, row) in data.chunks_exact_mut(self.dim).enumerate() {
            let norm = norm(row);
            if norm == 0.0 {
                return Err(Error::ZeroNorm(self.words[i].clone()));
            }
            row.iter_mut().for_each(|c| *c /= norm);
        }
        Ok(self.with_data(data))
    }

    /// Writes the space in the text format, six significant digits per
    /// component.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut line = String::new();
        for (word, row) in self.words.iter().zip(self.rows()) {
            line.clear();
            line.push_str(word);
            for &c in row {
                line.push(' ');
                line.push_str(&format_g6(c));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn validate_token(token: &str) -> std::result::Result<(), String> {
    if token.is_empty() {
        Err("empty token".to_string())
    } else if token.chars().any(char::is_whitespace) {
        Err(format!("token {token:?} contains whitespace"))
    } else {
        Ok(())
    }
}

/// Reads an embedding space from the text format.
///
/// The dimension is taken from `expected_dim` when given, otherwise from the
/// first nonempty line. Blank lines are skipped; a trailing CR is tolerated.
pub fn load_embeddings<R: BufRead>(
    reader: R,
    expected_dim: Option<usize>,
) -> Result<(EmbeddingSpace, LoadSummary)> {
    if expected_dim == Some(0) {
        return Err(Error::invalid("expected dimension must be positive"));
    }
    let mut dim = expected_dim;
    let mut words = Vec::new();
    let mut index = HashMap::new();
    let mut data = Vec::new();
    let mut summary = LoadSummary::default();

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        // GloVe distributions sometimes end rows with a stray space.
        let line = line.trim_end_matches(' ');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let token = fields.next().unwrap_or_default();
        validate_token(token).map_err(|m| Error::parse(line_no, m))?;

        let start = data.len();
        let mut count = 0;
        for field in fields {
            let value: f64 = field
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad component {field:?}")))?;
            if !value.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite component {field:?}")));
            }
            data.push(value);
            count += 1;
        }
        let expected = *dim.get_or_insert(count);
        if count != expected || count == 0 {
            return Err(Error::parse(
                line_no,
                format!("expected {expected} components, found {count}"),
            ));
        }
        if index.contains_key(token) {
            data.truncate(start);
            summary.duplicates += 1;
            continue;
        }
        index.insert(token.to_string(), words.len());
        words.push(token.to_string());
    }

    if words.is_empty() {
        return Err(Error::EmptyInput("embedding file"));
    }
    summary.words = words.len();
    let dim = dim.unwrap_or_default();
    Ok((
        EmbeddingSpace {
            words,
            index,
            data,
            dim,
        },
        summary,
    ))
}

/// Formats like C's `%g` with precision 6: six significant digits,
/// trailing zeros removed, exponent notation outside `1e-4..1e6`.
pub fn format_g6(value: f64) -> String {
    const PRECISION: i32 = 6;
    if value == 0.0 {
        return if value.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..PRECISION).contains(&exp) {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_zeros(&format!("{value:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<(EmbeddingSpace, LoadSummary)> {
        load_embeddings(text.as_bytes(), None)
    }

    #[test]
    fn loads_two_words() {
        let (space, summary) = load("a 1 0\nb 0 1").unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(space.dim(), 2);
        assert_eq!(summary.words, 2);
        assert_eq!(space.vector_of("a").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_names_line() {
        match load("a 1 0\nb 0 1 2") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expected_dim_overrides_first_line() {
        assert!(matches!(
            load_embeddings("a 1 0\n".as_bytes(), Some(3)),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(load("a 1 NaN"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load("a inf 0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load(""), Err(Error::EmptyInput(_))));
        assert!(matches!(load("\n\r\n"), Err(Error::EmptyInput(_))));
        assert!(matches!(load("a"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn duplicates_keep_first() {
        let (space, summary) = load("a 1 0\r\nb 0 1\r\na 5 5\r\n").unwrap();
        assert_eq!(summary.duplicates, 1);
        assert_eq!(summary.words, 2);
        assert_eq!(space.vector_of("a").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn oov_and_case_folding() {
        let (space, _) = load("a 1 0\nIron 2 2\niron 3 3").unwrap();
        assert!(matches!(space.vector_of("z"), Err(Error::OutOfVocabulary(w)) if w == "z"));
        assert_eq!(space.vector_of("Iron").unwrap(), &[2.0, 2.0]);
        assert_eq!(
            space.vector_of_folded("IRON", CaseFolding::Lowercase).unwrap(),
            &[3.0, 3.0]
        );
        assert!(space.vector_of("IRON").is_err());
    }

    #[test]
    fn normalize_scales_rows() {
        let space = EmbeddingSpace::from_rows([("a", vec![3.0, 4.0]), ("b", vec![0.6, 0.8])]).unwrap();
        let unit = space.l2_normalize().unwrap();
        assert!((unit.row(0)[0] - 0.6).abs() < 1e-12);
        assert!((unit.row(0)[1] - 0.8).abs() < 1e-12);
        assert!((unit.row(1)[0] - 0.6).abs() < 1e-6);
    }

    #[test]
    fn normalize_rejects_zero_row() {
        let space = EmbeddingSpace::from_rows([("a", vec![1.0, 0.0]), ("zero", vec![0.0, 0.0])]).unwrap();
        assert!(matches!(space.l2_normalize(), Err(Error::ZeroNorm(w)) if w == "zero"));
    }

    #[test]
    fn g6_formatting() {
        assert_eq!(format_g6(0.0), "0");
        assert_eq!(format_g6(1.0), "1");
        assert_eq!(format_g6(0.5), "0.5");
        assert_eq!(format_g6(-0.123456789), "-0.123457");
        assert_eq!(format_g6(123456.7), "123457");
        assert_eq!(format_g6(1234567.0), "1.23457e+06");
        assert_eq!(format_g6(0.0001), "0.0001");
        assert_eq!(format_g6(0.00001234), "1.234e-05");
        assert_eq!(format_g6(9.999996), "10");
    }

    #[test]
    fn write_then_load() {
        let (space, _) = load("a 0.25 -1.5\nb 3 4e-7").unwrap();
        let mut out = Vec::new();
        space.write_to(&mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "a 0.25 -1.5\nb 3 4e-07\n");
        let (again, _) = load_embeddings(out.as_slice(), None).unwrap();
        assert_eq!(again, space);
    }
}
