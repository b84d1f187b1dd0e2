use super::MetricError;

/// Token-level Levenshtein distance with unit costs (two-row dynamic program).
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(x != y);
            cur[j + 1] = substitution.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `edit_distance(reference, hypothesis) / |reference|`.
pub fn word_error_rate<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    Ok(edit_distance(reference, hypothesis) as f64 / reference.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize;

    #[test]
    fn examples() {
        let r = tokenize("the cat sat down");
        assert_eq!(word_error_rate(&r, &r).unwrap(), 0.0);
        assert_eq!(word_error_rate(&r, &tokenize("the dog sat down")).unwrap(), 0.25);
        assert_eq!(word_error_rate(&r, &[]).unwrap(), 1.0);
        assert_eq!(word_error_rate(&r, &tokenize("the cat sat")).unwrap(), 0.25);
        assert_eq!(word_error_rate(&r, &tokenize("the cat sat down now")).unwrap(), 0.25);
        assert_eq!(word_error_rate::<&str>(&[], &["a"]), Err(MetricError::EmptyReference));
        assert_eq!(edit_distance(&[1, 2, 3], &[3, 2, 1]), 2);
        assert_eq!(edit_distance::<u8>(&[], &[]), 0);
    }
}
