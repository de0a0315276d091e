//! Binary ±1 label helpers.

use crate::error::{Error, Result};

/// Counts `(positives, negatives)`, rejecting anything other than ±1 and
/// label sets that miss a class.
pub fn class_counts(labels: &[i8]) -> Result<(usize, usize)> {
    let mut pos = 0;
    let mut neg = 0;
    for (i, &y) in labels.iter().enumerate() {
        match y {
            1 => pos += 1,
            -1 => neg += 1,
            other => return Err(Error::Label(format!("label {other} at index {i} is not ±1"))),
        }
    }
    if pos == 0 || neg == 0 {
        return Err(Error::Label(format!(
            "both classes are required, got {pos} positive and {neg} negative"
        )));
    }
    Ok((pos, neg))
}
