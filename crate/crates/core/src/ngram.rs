//! Count-based next-token baseline with longest-match backoff.
//!
//! For every position of every training sequence the model records the next
//! token under each context length `0..=n`. Sequences are left-padded with
//! `<sos>` so the first tokens also have full contexts. Sampling uses the
//! longest context suffix that was seen in training.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::tokens::{detokenize, token_count, tokenize, Scheme, Token, TokenSeq, Vocab};

pub const DEFAULT_ORDER: usize = 10;

/// Slack added to the longest training sequence for the default length bound.
pub const MAX_LEN_SLACK: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NGramModel {
    n: usize,
    vocab: Vocab,
    counts: HashMap<Vec<u32>, BTreeMap<u32, u64>>,
    /// Longest training sequence, in tokens.
    max_seen_len: usize,
}

impl NGramModel {
    /// Fits on encoded sequences, each starting with `<sos>`.
    pub fn fit_ids(vocab: Vocab, sequences: &[Vec<u32>], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidOrder(n));
        }
        if sequences.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let sos = vocab.sos();
        let mut counts: HashMap<Vec<u32>, BTreeMap<u32, u64>> = HashMap::new();
        let mut max_seen_len = 0;
        for seq in sequences {
            max_seen_len = max_seen_len.max(seq.len());
            let body = match seq.first() {
                Some(&first) if first == sos => &seq[1..],
                _ => &seq[..],
            };
            let mut padded = vec![sos; n];
            padded.extend_from_slice(body);
            for (i, &next) in body.iter().enumerate() {
                let context = &padded[i..i + n];
                for k in 0..=n {
                    *counts
                        .entry(context[n - k..].to_vec())
                        .or_default()
                        .entry(next)
                        .or_insert(0) += 1;
                }
            }
        }
        if counts.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            n,
            vocab,
            counts,
            max_seen_len,
        })
    }

    /// Tokenizes with line-numbered newlines and fits.
    pub fn fit(samples: &[Sample], n: usize) -> Result<Self> {
        let vocab = Vocab::build(samples, Scheme::LineNumbered);
        let sequences = samples
            .iter()
            .map(|s| vocab.encode(&tokenize(&s.matrix, Scheme::LineNumbered)))
            .collect::<Result<Vec<_>>>()?;
        Self::fit_ids(vocab, &sequences, n)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Histogram of tokens following exactly `context`.
    pub fn histogram(&self, context: &[u32]) -> Option<&BTreeMap<u32, u64>> {
        self.counts.get(context)
    }

    pub fn n_contexts(&self) -> usize {
        self.counts.len()
    }

    /// Longest training sequence plus [`MAX_LEN_SLACK`].
    pub fn default_max_len(&self) -> usize {
        self.max_seen_len + MAX_LEN_SLACK
    }

    /// The histogram for the longest seen suffix of `context`.
    fn backoff(&self, context: &[u32]) -> &BTreeMap<u32, u64> {
        for k in (0..=context.len().min(self.n)).rev() {
            if let Some(h) = self.counts.get(&context[context.len() - k..]) {
                return h;
            }
        }
        unreachable!("order-0 histogram exists after fit")
    }

    /// Encoded sequence starting with `<sos>`, ending at `<eos>` or when it
    /// reaches `max_len` tokens.
    pub fn sample_ids<R: RngCore>(&self, rng: &mut R, max_len: usize) -> Vec<u32> {
        let sos = self.vocab.sos();
        let eos = self.vocab.eos();
        let mut out = vec![sos];
        let mut context = vec![sos; self.n];
        while out.len() < max_len {
            let hist = self.backoff(&context);
            let total: u64 = hist.values().sum();
            let mut r = rng.next_u64() % total;
            let mut next = *hist.keys().next_back().expect("nonempty histogram");
            for (&tok, &c) in hist {
                if r < c {
                    next = tok;
                    break;
                }
                r -= c;
            }
            out.push(next);
            if next == eos {
                break;
            }
            context.remove(0);
            context.push(next);
        }
        out
    }

    pub fn sample<R: RngCore>(&self, rng: &mut R, max_len: usize) -> TokenSeq {
        self.vocab
            .decode(&self.sample_ids(rng, max_len))
            .expect("sampled ids come from the vocabulary")
    }

    /// `count` samples; sample `i` draws from ChaCha8 seeded with `seed` on
    /// stream `i`, so the result does not depend on the thread count.
    pub fn sample_many(&self, count: usize, seed: u64, max_len: usize) -> Vec<TokenSeq> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                self.sample(&mut rng, max_len)
            })
            .collect()
    }

    /// Header, vocabulary line, then one `context<TAB>next<TAB>count` line per
    /// entry, sorted. Contexts are space-separated ids, `-` when empty.
    pub fn to_text(&self) -> String {
        let scheme = match self.vocab.scheme() {
            Scheme::Standard => "standard",
            Scheme::LineNumbered => "line_numbered",
        };
        let mut out = format!(
            "# ngram n={} scheme={} max_seen_len={}\n{}\n",
            self.n,
            scheme,
            self.max_seen_len,
            self.vocab.to_line()
        );
        let mut contexts: Vec<&Vec<u32>> = self.counts.keys().collect();
        contexts.sort();
        for ctx in contexts {
            let ctx_str = if ctx.is_empty() {
                "-".to_string()
            } else {
                ctx.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
            };
            for (next, count) in &self.counts[ctx] {
                let _ = writeln!(out, "{ctx_str}\t{next}\t{count}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("ngram model: {what}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("missing header"))?;
        let mut n = None;
        let mut scheme = None;
        let mut max_seen_len = 0;
        for field in header.trim_start_matches('#').split_whitespace() {
            match field.split_once('=') {
                Some(("n", v)) => n = v.parse().ok(),
                Some(("scheme", "standard")) => scheme = Some(Scheme::Standard),
                Some(("scheme", "line_numbered")) => scheme = Some(Scheme::LineNumbered),
                Some(("max_seen_len", v)) => max_seen_len = v.parse().map_err(|_| bad("max_seen_len"))?,
                _ => {}
            }
        }
        let n: usize = n.ok_or_else(|| bad("missing n"))?;
        let scheme = scheme.ok_or_else(|| bad("missing scheme"))?;
        let vocab = Vocab::from_line(scheme, lines.next().ok_or_else(|| bad("missing vocabulary"))?)?;
        let mut counts: HashMap<Vec<u32>, BTreeMap<u32, u64>> = HashMap::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let mut parts = line.split('\t');
            let (Some(ctx), Some(next), Some(count), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad("malformed entry"));
            };
            let ctx = if ctx == "-" {
                Vec::new()
            } else {
                ctx.split(' ')
                    .map(|x| x.parse::<u32>().map_err(|_| bad("context id")))
                    .collect::<Result<Vec<_>>>()?
            };
            let next: u32 = next.parse().map_err(|_| bad("next id"))?;
            let count: u64 = count.parse().map_err(|_| bad("count"))?;
            if count == 0 || ctx.len() > n || vocab.token(next).is_none() {
                return Err(bad("entry out of range"));
            }
            counts.entry(ctx).or_default().insert(next, count);
        }
        if !counts.contains_key(&Vec::new()) {
            return Err(bad("missing order-0 histogram"));
        }
        Ok(Self {
            n,
            vocab,
            counts,
            max_seen_len,
        })
    }
}

/// Renders a generated sequence in the dataset text format.
///
/// Well-formed sequences come out exactly as [`crate::dataset::serialize`]
/// would write them. Anything else is written so that parsing it yields an
/// ill-formed block: stray special tokens are kept verbatim, empty rows
/// become `<empty>` and a missing `<eos>` adds a trailing `<no-eos>` line.
pub fn render_generated(seq: &TokenSeq) -> String {
    let max_len = seq.tokens.len().max(1);
    if let Ok(m) = detokenize(seq, max_len) {
        return crate::dataset::serialize(&m);
    }
    let mut out = String::new();
    let mut row: Vec<String> = Vec::new();
    let mut closed = false;
    for t in seq.tokens.iter().skip(usize::from(seq.tokens.first() == Some(&Token::Sos))) {
        match t {
            Token::Eos => {
                closed = true;
                break;
            }
            t if t.is_newline() => {
                if row.is_empty() {
                    out.push_str("<empty>\n");
                } else {
                    out.push_str(&row.join(" "));
                    out.push('\n');
                    row.clear();
                }
            }
            t => row.push(t.to_string()),
        }
    }
    if !row.is_empty() {
        out.push_str(&row.join(" "));
        out.push_str(" <unterminated>\n");
    }
    if !closed {
        out.push_str("<no-eos>\n");
    }
    if out.is_empty() {
        out.push_str("<empty>\n");
    }
    out
}

/// Default bound for a dataset: longest tokenization plus [`MAX_LEN_SLACK`].
pub fn default_max_len(samples: &[Sample]) -> usize {
    samples
        .iter()
        .map(|s| token_count(s.matrix.nrows(), s.matrix.ncols()))
        .max()
        .unwrap_or(0)
        + MAX_LEN_SLACK
}
