use crate::error::DataError;

/// Window indices of one cross-validation fold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Time-blocked k-fold: fold `f` validates on the `f`-th contiguous block of
/// windows and trains on everything else. Windows are never shuffled across
/// time. Block sizes differ by at most one, the larger blocks first.
pub fn kfold_split(n_windows: usize, k: usize) -> Result<Vec<FoldSplit>, DataError> {
    if k < 2 {
        return Err(DataError::Invalid(format!("k must be at least 2, got {k}")));
    }
    if k > n_windows {
        return Err(DataError::Invalid(format!(
            "k = {k} exceeds the number of windows ({n_windows})"
        )));
    }
    let base = n_windows / k;
    let extra = n_windows % k;
    let mut start = 0;
    Ok((0..k)
        .map(|fold| {
            let size = base + usize::from(fold < extra);
            let validation: Vec<usize> = (start..start + size).collect();
            let train = (0..start).chain(start + size..n_windows).collect();
            start += size;
            FoldSplit {
                fold,
                train,
                validation,
            }
        })
        .collect())
}
