//! Word-embedding tables in the common text vector format, tokenization and
//! sentence-matrix construction.
//!
//! The text format is UTF-8 with an optional `<count> <dim>` header line,
//! followed by one `<token> <f1> ... <fd>` line per word.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::encoder::SentenceMatrix;
use crate::{Error, Result};

/// Vocabulary to `dim`-dimensional vectors, in file order.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    // row-major, words.len() x dim
    data: Vec<f32>,
    source_path: String,
}

impl EmbeddingTable {
    /// Builds a table from `(token, vector)` pairs. Duplicates keep the first
    /// occurrence.
    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        if dim == 0 {
            return Err(Error::Dimension("embedding dimension must be >= 1".into()));
        }
        let mut table = EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            source_path: "<memory>".into(),
        };
        for (i, (word, vector)) in entries.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(Error::LineDimension {
                    line: i + 1,
                    expected: dim,
                    found: vector.len(),
                });
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "non-finite vector component".into(),
                });
            }
            table.insert(word.into(), &vector);
        }
        if table.is_empty() {
            return Err(Error::EmptyInput("embedding table has no entries".into()));
        }
        Ok(table)
    }

    fn insert(&mut self, word: String, vector: &[f32]) -> bool {
        if self.index.contains_key(&word) {
            return false;
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        true
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

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Entries in file order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> + '_ {
        self.words
            .iter()
            .zip(self.data.chunks_exact(self.dim))
            .map(|(w, v)| (w.as_str(), v))
    }

    /// Writes the table with a `<count> <dim>` header. Components are printed
    /// with the shortest representation that reads back to the same `f32`.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (word, vector) in self.iter() {
            write!(out, "{word}")?;
            for v in vector {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_text(BufWriter::new(file))
    }
}

/// Loads a text vector file, keeping at most `limit` entries.
pub fn load_table(path: impl AsRef<Path>, limit: Option<usize>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table = read_table(BufReader::new(file), limit)?;
    table.source_path = path.display().to_string();
    Ok(table)
}

/// Reads a text vector table from any buffered reader.
pub fn read_table<R: BufRead>(reader: R, limit: Option<usize>) -> Result<EmbeddingTable> {
    if limit == Some(0) {
        return Err(Error::Config("limit must be a positive integer".into()));
    }
    let mut dim: Option<usize> = None;
    let mut declared: Option<usize> = None;
    let mut table: Option<EmbeddingTable> = None;
    let mut values = Vec::new();
    let mut saw_line = false;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();

        if !saw_line {
            saw_line = true;
            if let Some((count, d)) = parse_header(line) {
                if d == 0 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "header declares dimension 0".into(),
                    });
                }
                declared = Some(count);
                dim = Some(d);
                continue;
            }
        }

        let word = fields.next().expect("non-blank line has a field");
        values.clear();
        for field in fields {
            let v = f32::from_str(field).map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("malformed float {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("non-finite value {field:?}"),
                });
            }
            values.push(v);
        }
        let d = *dim.get_or_insert(values.len());
        if d == 0 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("token {word:?} has no vector components"),
            });
        }
        if values.len() != d {
            return Err(Error::LineDimension {
                line: lineno,
                expected: d,
                found: values.len(),
            });
        }
        let table = table.get_or_insert_with(|| EmbeddingTable {
            dim: d,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            source_path: "<reader>".into(),
        });
        if !table.insert(word.to_owned(), &values) {
            warn!("duplicate token {word:?} at line {lineno}; keeping the first occurrence");
        }
        let cap = match (declared, limit) {
            (Some(c), Some(l)) => Some(c.min(l)),
            (c, l) => c.or(l),
        };
        if cap.is_some_and(|c| table.len() >= c) {
            break;
        }
    }

    match table {
        Some(t) => {
            if let Some(count) = declared {
                if t.len() < count && limit.is_none_or(|l| t.len() < l) {
                    warn!("header declares {count} entries but {} were read", t.len());
                }
            }
            Ok(t)
        }
        None => Err(Error::EmptyInput("embedding file has no vectors".into())),
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let count = fields.next()?.parse().ok()?;
    let dim = fields.next()?.parse().ok()?;
    fields.next().is_none().then_some((count, dim))
}

/// One whitespace-delimited unit of an input line.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token(String);

impl Token {
    pub fn new(surface: impl Into<String>) -> Option<Self> {
        let s = surface.into();
        (!s.is_empty() && !s.chars().any(char::is_whitespace)).then_some(Token(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Whitespace tokenizer with optional lowercase folding (on by default).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tokenizer {
    pub lowercase: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer { lowercase: true }
    }
}

impl Tokenizer {
    pub fn new(lowercase: bool) -> Self {
        Tokenizer { lowercase }
    }

    pub fn tokenize(&self, sentence: &str) -> Vec<Token> {
        sentence
            .split_whitespace()
            .map(|s| {
                if self.lowercase {
                    Token(s.to_lowercase())
                } else {
                    Token(s.to_owned())
                }
            })
            .collect()
    }
}

/// Tokenizes with the default configuration (lowercase on).
pub fn tokenize(sentence: &str) -> Vec<Token> {
    Tokenizer::default().tokenize(sentence)
}

/// What an out-of-vocabulary token contributes to the sentence matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OovPolicy {
    #[default]
    Skip,
    ZeroVector,
}

impl OovPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            OovPolicy::Skip => "skip",
            OovPolicy::ZeroVector => "zero-vector",
        }
    }
}

impl fmt::Display for OovPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OovPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skip" => Ok(OovPolicy::Skip),
            "zero" | "zero-vector" => Ok(OovPolicy::ZeroVector),
            other => Err(Error::Config(format!("unknown OOV policy {other:?}"))),
        }
    }
}

/// Stacks the vectors of `tokens` into an `N x d` matrix.
///
/// The result is the empty-sentence marker (`n_words() == 0`) when no token
/// contributes a row.
pub fn lookup_sentence(
    table: &EmbeddingTable,
    tokens: &[Token],
    policy: OovPolicy,
) -> SentenceMatrix {
    let dim = table.dim();
    let mut rows: Vec<f64> = Vec::with_capacity(tokens.len() * dim);
    let mut n = 0;
    for token in tokens {
        match (table.get(token.as_str()), policy) {
            (Some(v), _) => rows.extend(v.iter().map(|&x| f64::from(x))),
            (None, OovPolicy::ZeroVector) => rows.extend(std::iter::repeat_n(0.0, dim)),
            (None, OovPolicy::Skip) => continue,
        }
        n += 1;
    }
    SentenceMatrix::from_row_slice(n, dim, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Result<EmbeddingTable> {
        read_table(text.as_bytes(), None)
    }

    #[test]
    fn loads_with_header() {
        let t = table("2 3\na 1 0 0\nb 0 1 0\n").unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("b"), Some(&[0.0, 1.0, 0.0][..]));
    }

    #[test]
    fn limit_truncates() {
        let t = read_table("2 3\na 1 0 0\nb 0 1 0\n".as_bytes(), Some(1)).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.contains("a"));
        assert!(!t.contains("b"));
    }

    #[test]
    fn headerless_infers_dim() {
        let t = table("a 1 0 0 0\nb 0 1 0 0\n").unwrap();
        assert_eq!(t.dim(), 4);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn short_line_is_dimension_mismatch() {
        match table("3 3\na 1 0 0\nc 1 2\n") {
            Err(Error::LineDimension {
                line: 3,
                expected: 3,
                found: 2,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_float_names_line() {
        match table("a 1 0 0\nb 0 x 0\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_empty_input() {
        assert!(matches!(table(""), Err(Error::EmptyInput(_))));
        assert!(matches!(table("0 3\n"), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn duplicates_keep_first() {
        let t = table("a 1 2\nb 3 4\na 5 6\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("a"), Some(&[1.0, 2.0][..]));
        let order: Vec<_> = t.iter().map(|(w, _)| w).collect();
        assert_eq!(order, ["a", "b"]);
    }

    #[test]
    fn tokenizer_examples() {
        let s = |v: Vec<Token>| v.into_iter().map(|t| t.0).collect::<Vec<_>>();
        assert_eq!(s(tokenize("The cat sat")), ["the", "cat", "sat"]);
        assert!(tokenize("  ").is_empty());
        assert_eq!(s(tokenize("a\tb")), ["a", "b"]);
        assert_eq!(s(Tokenizer::new(false).tokenize("The Cat")), ["The", "Cat"]);
    }

    #[test]
    fn lookup_policies() {
        let t = table("2 3\na 1 0 0\nb 0 1 0\n").unwrap();
        let m = lookup_sentence(&t, &tokenize("a b"), OovPolicy::Skip);
        assert_eq!((m.n_words(), m.dim()), (2, 3));
        assert_eq!(m.row(1), vec![0.0, 1.0, 0.0]);

        let m = lookup_sentence(&t, &tokenize("a zzz"), OovPolicy::Skip);
        assert_eq!(m.n_words(), 1);
        assert_eq!(m.row(0), vec![1.0, 0.0, 0.0]);

        let m = lookup_sentence(&t, &tokenize("a zzz"), OovPolicy::ZeroVector);
        assert_eq!(m.n_words(), 2);
        assert_eq!(m.row(1), vec![0.0; 3]);

        let m = lookup_sentence(&t, &tokenize("zzz"), OovPolicy::Skip);
        assert!(m.is_empty());
    }

    #[test]
    fn token_rejects_whitespace() {
        assert!(Token::new("a b").is_none());
        assert!(Token::new("").is_none());
        assert_eq!(Token::new("ab").unwrap().as_str(), "ab");
    }
}
