use super::{PassageIndex, RetrievalError, RetrievalResult, ScoredPassage};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sample `k` distinct passages uniformly without replacement (all of them
/// when `k` exceeds the corpus). Scores are zero.
///
/// Uses a partial Fisher-Yates shuffle over index order, so for a fixed seed
/// a smaller `k` yields a prefix of a larger one.
pub fn retrieve_random<T: Scalar>(
    index: &PassageIndex,
    k: usize,
    seed: u64,
) -> Result<RetrievalResult<T>, RetrievalError> {
    if index.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    let n = index.len();
    let take = k.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..take {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    Ok(RetrievalResult {
        query: String::new(),
        ranked: order[..take]
            .iter()
            .map(|&d| ScoredPassage {
                pid: index.passage_at(d).pid.clone(),
                score: T::zero(),
            })
            .collect(),
    })
}
