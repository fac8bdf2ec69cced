//! Longest common subsequence and Rouge-L.

use super::normalize::normalize;
use super::MetricError;
use crate::scalar::Scalar;

/// Length of the longest common subsequence of two token sequences.
pub fn lcs_length<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    // iterate the longer sequence, keep rows over the shorter one
    let (outer, inner) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if inner.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; inner.len() + 1];
    let mut curr = vec![0usize; inner.len() + 1];
    for x in outer {
        for (j, y) in inner.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                curr[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[inner.len()]
}

/// β=1 LCS F-measure between two token sequences, in `[0, 1]`.
pub fn lcs_f1<T: Scalar, S: PartialEq>(prediction: &[S], reference: &[S]) -> T {
    if prediction.is_empty() || reference.is_empty() {
        return T::zero();
    }
    let lcs = lcs_length(prediction, reference);
    if lcs == 0 {
        return T::zero();
    }
    let lcs = T::from_usize_lossy(lcs);
    let p = lcs / T::from_usize_lossy(prediction.len());
    let r = lcs / T::from_usize_lossy(reference.len());
    (p + p) * r / (p + r)
}

/// Rouge-L of a prediction against its references, maximum over references,
/// scaled to `[0, 100]`.
pub fn rouge_l<T: Scalar, R: AsRef<str>>(prediction: &str, references: &[R]) -> Result<T, MetricError> {
    if references.is_empty() {
        return Err(MetricError::NoReferences);
    }
    let pred = normalize(prediction);
    let best = references
        .iter()
        .map(|r| lcs_f1::<T, _>(&pred, &normalize(r.as_ref())))
        .fold(T::zero(), T::max);
    Ok(best * T::hundred())
}
