//! Tokenization of sample matrices.
//!
//! Every matrix entry is one token (`"-2"` is a single token). Rows end with
//! a newline token, which under [`Scheme::LineNumbered`] carries the 1-based
//! row number. Sequences are wrapped in start and end markers.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Standard,
    LineNumbered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Pad,
    Sos,
    Eos,
    Newline,
    /// Row terminator carrying the 1-based row number.
    NewlineAt(u32),
    Int(i64),
}

impl Token {
    pub fn is_newline(&self) -> bool {
        matches!(self, Token::Newline | Token::NewlineAt(_))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Pad => f.write_str("<pad>"),
            Token::Sos => f.write_str("<sos>"),
            Token::Eos => f.write_str("<eos>"),
            Token::Newline => f.write_str("<nl>"),
            Token::NewlineAt(k) => write!(f, "<nl:{k}>"),
            Token::Int(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for Token {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "<pad>" => Token::Pad,
            "<sos>" => Token::Sos,
            "<eos>" => Token::Eos,
            "<nl>" => Token::Newline,
            _ => {
                if let Some(k) = s.strip_prefix("<nl:").and_then(|r| r.strip_suffix('>')) {
                    Token::NewlineAt(k.parse().map_err(|_| Error::UnknownToken(s.into()))?)
                } else {
                    Token::Int(s.parse().map_err(|_| Error::UnknownToken(s.into()))?)
                }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSeq {
    pub scheme: Scheme,
    pub tokens: Vec<Token>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Why a token sequence does not describe a matrix.
#[derive(Clone, Debug, PartialEq, Eq, ThisError)]
pub enum IllFormed {
    #[error("sequence does not start with <sos>")]
    MissingSos,
    #[error("no <eos> within {0} tokens")]
    MissingEos(usize),
    #[error("unexpected token {0} at position {1}")]
    Unexpected(String, usize),
    #[error("empty row at position {0}")]
    EmptyRow(usize),
    #[error("last row is not terminated by a newline token")]
    UnterminatedRow,
    #[error("no rows")]
    NoRows,
    #[error("rows of unequal length ({expected} and {got})")]
    Ragged { expected: usize, got: usize },
}

/// `<sos>`, each row's entries followed by its newline token, then `<eos>`.
pub fn tokenize(matrix: &Matrix<i64>, scheme: Scheme) -> TokenSeq {
    let mut tokens = Vec::with_capacity(2 + matrix.nrows() * (matrix.ncols() + 1));
    tokens.push(Token::Sos);
    for (i, row) in matrix.rows().enumerate() {
        tokens.extend(row.iter().map(|&x| Token::Int(x)));
        tokens.push(match scheme {
            Scheme::Standard => Token::Newline,
            Scheme::LineNumbered => Token::NewlineAt(i as u32 + 1),
        });
    }
    tokens.push(Token::Eos);
    TokenSeq { scheme, tokens }
}

/// Number of tokens [`tokenize`] produces for an `rows x cols` matrix.
pub fn token_count(rows: usize, cols: usize) -> usize {
    rows * (cols + 1) + 2
}

/// Inverse of [`tokenize`].
///
/// Any newline token ends a row regardless of its line number; padding after
/// `<eos>` is ignored. `max_len` bounds the search for `<eos>`.
pub fn detokenize(seq: &TokenSeq, max_len: usize) -> Result<Matrix<i64>, IllFormed> {
    let tokens = &seq.tokens;
    if tokens.first() != Some(&Token::Sos) {
        return Err(IllFormed::MissingSos);
    }
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    let mut closed = false;
    for (pos, token) in tokens.iter().enumerate().skip(1).take(max_len.saturating_sub(1)) {
        match token {
            Token::Int(x) => current.push(*x),
            t if t.is_newline() => {
                if current.is_empty() {
                    return Err(IllFormed::EmptyRow(pos));
                }
                if let Some(first) = rows.first() {
                    if first.len() != current.len() {
                        return Err(IllFormed::Ragged {
                            expected: first.len(),
                            got: current.len(),
                        });
                    }
                }
                rows.push(std::mem::take(&mut current));
            }
            Token::Eos => {
                closed = true;
                break;
            }
            other => return Err(IllFormed::Unexpected(other.to_string(), pos)),
        }
    }
    if !closed {
        return Err(IllFormed::MissingEos(max_len));
    }
    if !current.is_empty() {
        return Err(IllFormed::UnterminatedRow);
    }
    if rows.is_empty() {
        return Err(IllFormed::NoRows);
    }
    Ok(Matrix::from_rows(&rows).expect("rows checked rectangular"))
}

/// Bijective token/id map built from a dataset.
///
/// Ids are assigned in a fixed order: `<pad>`, `<sos>`, `<eos>`, the newline
/// token(s), then integer literals in increasing numeric order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    scheme: Scheme,
    tokens: Vec<Token>,
    ids: HashMap<Token, u32>,
}

impl Vocab {
    pub fn build(samples: &[Sample], scheme: Scheme) -> Self {
        let mut ints = BTreeSet::new();
        let mut max_rows = 0;
        for s in samples {
            ints.extend(s.matrix.data().iter().copied());
            max_rows = max_rows.max(s.matrix.nrows());
        }
        let mut tokens = vec![Token::Pad, Token::Sos, Token::Eos];
        match scheme {
            Scheme::Standard => tokens.push(Token::Newline),
            Scheme::LineNumbered => {
                tokens.extend((1..=max_rows as u32).map(Token::NewlineAt));
            }
        }
        tokens.extend(ints.into_iter().map(Token::Int));
        Self::from_tokens(scheme, tokens)
    }

    pub fn from_tokens(scheme: Scheme, tokens: Vec<Token>) -> Self {
        let ids = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (*t, i as u32))
            .collect();
        Self {
            scheme,
            tokens,
            ids,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn id(&self, token: &Token) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<Token> {
        self.tokens.get(id as usize).copied()
    }

    pub fn sos(&self) -> u32 {
        self.ids[&Token::Sos]
    }

    pub fn eos(&self) -> u32 {
        self.ids[&Token::Eos]
    }

    pub fn encode(&self, seq: &TokenSeq) -> Result<Vec<u32>> {
        seq.tokens
            .iter()
            .map(|t| self.id(t).ok_or_else(|| Error::UnknownToken(t.to_string())))
            .collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Result<TokenSeq> {
        Ok(TokenSeq {
            scheme: self.scheme,
            tokens: ids
                .iter()
                .map(|&i| self.token(i).ok_or(Error::UnknownTokenId(i)))
                .collect::<Result<_>>()?,
        })
    }

    /// Space-separated token list, the persisted form.
    pub fn to_line(&self) -> String {
        self.tokens
            .iter()
            .map(Token::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_line(scheme: Scheme, line: &str) -> Result<Self> {
        let tokens = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<Token>>>()?;
        Ok(Self::from_tokens(scheme, tokens))
    }
}
