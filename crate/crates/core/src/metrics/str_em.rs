use super::normalize::{contains_folded, fold_for_match};
use crate::dataset::QaSample;
use crate::scalar::Scalar;

/// Number of disambiguations with at least one accepted answer occurring
/// verbatim (case-folded, whitespace collapsed) in `text`.
pub fn matched_disambiguations(text: &str, sample: &QaSample) -> usize {
    let folded = fold_for_match(text);
    sample
        .disambiguations
        .iter()
        .filter(|d| d.accepted_answers.iter().any(|a| contains_folded(&folded, a)))
        .count()
}

/// Fraction of the sample's disambiguations answered verbatim, in `[0, 1]`.
pub fn str_em<T: Scalar>(prediction: &str, sample: &QaSample) -> T {
    let n = sample.disambiguations.len();
    if n == 0 {
        return T::zero();
    }
    T::from_usize_lossy(matched_disambiguations(prediction, sample)) / T::from_usize_lossy(n)
}
