use super::normalize::normalize;
use crate::scalar::Scalar;
use std::collections::HashMap;

/// Token-level F1 over normalized multisets, in `[0, 1]`.
///
/// Both sides empty scores 1, exactly one side empty scores 0.
pub fn token_f1<T: Scalar>(predicted: &str, gold: &str) -> T {
    let pred = normalize(predicted);
    let gold = normalize(gold);
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => return T::one(),
        (true, false) | (false, true) => return T::zero(),
        _ => {}
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in gold.iter() {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in pred.iter() {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return T::zero();
    }
    let overlap = T::from_usize_lossy(overlap);
    let precision = overlap / T::from_usize_lossy(pred.len());
    let recall = overlap / T::from_usize_lossy(gold.len());
    (precision + precision) * recall / (precision + recall)
}

/// Best token F1 of a predicted short answer against any accepted alias.
pub fn best_alias_f1<T: Scalar, A: AsRef<str>>(predicted: &str, aliases: &[A]) -> T {
    aliases
        .iter()
        .map(|a| token_f1::<T>(predicted, a.as_ref()))
        .fold(T::zero(), T::max)
}
