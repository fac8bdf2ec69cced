//! Okapi BM25 over a [`PassageIndex`].
//!
//! IDF uses `ln(1 + (N - df + 0.5) / (df + 0.5))`, which is always positive.
//! Query terms are scored per occurrence, so a repeated query term counts
//! twice.

use super::{rank, PassageIndex, RetrievalError, RetrievalResult, ScoredPassage};
use crate::metrics::normalize;
use crate::scalar::Scalar;

pub fn idf<T: Scalar>(corpus_size: usize, df: usize) -> T {
    let n = T::from_usize_lossy(corpus_size);
    let df = T::from_usize_lossy(df);
    let half = T::half();
    ((n - df + half) / (df + half)).ln_1p()
}

/// Contribution of one query term occurrence to one passage.
#[inline]
fn term_weight<T: Scalar>(idf: T, tf: u32, doc_len: u32, avg_len: T, k1: T, b: T) -> T {
    if tf == 0 {
        return T::zero();
    }
    let tf = T::from_f64_lossy(tf as f64);
    let len = T::from_f64_lossy(doc_len as f64);
    let norm = if avg_len > T::zero() {
        len / avg_len
    } else {
        T::zero()
    };
    idf * tf * (k1 + T::one()) / (tf + k1 * (T::one() - b + b * norm))
}

/// BM25 score of one passage for already-normalized query terms.
pub fn bm25_score<T: Scalar, S: AsRef<str>>(
    query_terms: &[S],
    pid: &str,
    index: &PassageIndex,
    k1: T,
    b: T,
) -> Result<T, RetrievalError> {
    let doc = index
        .doc_of(pid)
        .ok_or_else(|| RetrievalError::UnknownPid(pid.to_string()))?;
    let avg_len = index.average_length::<T>();
    let doc_len = index.doc_length(doc);
    let mut score = T::zero();
    for term in query_terms {
        let term = term.as_ref();
        let tf = index.term_frequency(term, doc);
        if tf == 0 {
            continue;
        }
        let w = idf::<T>(index.len(), index.document_frequency(term));
        score += term_weight(w, tf, doc_len, avg_len, k1, b);
    }
    Ok(score)
}

/// Top-`k` passages with positive BM25 score, descending, ties by pid.
///
/// Accumulates term-at-a-time over postings in query-term order, the same
/// summation order as [`bm25_score`], so both agree bit for bit.
pub fn retrieve_topk<T: Scalar>(
    index: &PassageIndex,
    query: &str,
    k: usize,
    k1: T,
    b: T,
) -> RetrievalResult<T> {
    let terms = normalize(query);
    let avg_len = index.average_length::<T>();
    let mut scores: Vec<T> = vec![T::zero(); index.len()];
    let mut touched: Vec<usize> = Vec::new();
    for term in terms.iter() {
        let postings = index.postings(term);
        if postings.is_empty() {
            continue;
        }
        let w = idf::<T>(index.len(), postings.len());
        for p in postings {
            let doc = p.doc as usize;
            if scores[doc] == T::zero() {
                touched.push(doc);
            }
            scores[doc] += term_weight(w, p.tf, index.doc_length(doc), avg_len, k1, b);
        }
    }
    touched.sort_unstable();
    touched.dedup();
    let candidates = touched
        .into_iter()
        .filter(|&d| scores[d] > T::zero())
        .map(|d| ScoredPassage {
            pid: index.passage_at(d).pid.clone(),
            score: scores[d],
        })
        .collect();
    RetrievalResult {
        query: query.to_string(),
        ranked: rank(candidates, k),
    }
}
