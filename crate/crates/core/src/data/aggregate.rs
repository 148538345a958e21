use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::DataError;

/// `sum_i target_i(t) + extra(t) + e(t)` clamped at 0 W, with `e` zero-mean
/// Gaussian noise of standard deviation `noise_std` truncated at five
/// standard deviations.
pub fn build_aggregate<R: Rng>(
    targets: &[Vec<f64>],
    extra: Option<&[f64]>,
    noise_std: f64,
    rng: &mut R,
) -> Result<Vec<f64>, DataError> {
    let len = targets
        .first()
        .map(Vec::len)
        .or(extra.map(<[f64]>::len))
        .ok_or_else(|| DataError::Invalid("no signals to aggregate".into()))?;
    for t in targets.iter().map(Vec::as_slice).chain(extra) {
        if t.len() != len {
            return Err(DataError::LengthMismatch {
                expected: len,
                actual: t.len(),
            });
        }
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(DataError::Invalid(format!("noise std {noise_std} must be >= 0")));
    }
    let noise = (noise_std > 0.0).then(|| Normal::new(0.0, noise_std).expect("valid std"));
    let bound = 5.0 * noise_std;
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let mut v: f64 = targets.iter().map(|s| s[t]).sum();
        if let Some(x) = extra {
            v += x[t];
        }
        if let Some(n) = &noise {
            v += n.sample(rng).clamp(-bound, bound);
        }
        out.push(v.max(0.0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_sum_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = vec![1.0, 2.0, 3.0];
        let b = vec![0.5, 0.0, 7.0];
        let agg = build_aggregate(&[a.clone(), b], None, 0.0, &mut rng).unwrap();
        assert_eq!(agg, vec![1.5, 2.0, 10.0]);
        let zero = vec![0.0; 3];
        let single = build_aggregate(&[a.clone()], Some(&zero), 0.0, &mut rng).unwrap();
        assert_eq!(single, a);
    }

    #[test]
    fn length_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = build_aggregate(&[vec![1.0, 2.0], vec![1.0]], None, 0.0, &mut rng);
        assert!(matches!(r, Err(DataError::LengthMismatch { .. })));
    }

    #[test]
    fn noise_magnitude_matches_half_normal_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let base = vec![1000.0; n];
        let agg = build_aggregate(&[base.clone()], None, 10.0, &mut rng).unwrap();
        let mad: f64 = agg.iter().zip(&base).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;
        assert!((6.0..=10.0).contains(&mad), "mean abs noise {mad}");
        assert!((mad - 7.98).abs() < 0.1);
    }
}
