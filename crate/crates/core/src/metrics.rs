//! Disaggregation metrics on `[C][T]` arrays.
//!
//! Totals follow each metric's own definition: MAE and SAE are averaged over
//! appliances, estimated accuracy sums over appliances before dividing.

use std::fmt;
use std::fmt::Write as _;

use log::warn;

use crate::error::MetricsError;

fn check(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<(usize, usize), MetricsError> {
    let c = target.len();
    let t = target.first().map_or(0, Vec::len);
    let shape = |x: &[Vec<f64>]| (x.len(), x.first().map_or(0, Vec::len));
    if pred.len() != c
        || pred.iter().any(|r| r.len() != t)
        || target.iter().any(|r| r.len() != t)
    {
        return Err(MetricsError::ShapeMismatch {
            pred: shape(pred),
            target: shape(target),
        });
    }
    if c == 0 || t == 0 {
        return Err(MetricsError::Empty);
    }
    Ok((c, t))
}

/// Per-appliance values plus their total.
#[derive(Clone, Debug, PartialEq)]
pub struct PerAppliance<T> {
    pub per_appliance: Vec<T>,
    pub total: f64,
}

/// `(1/T) sum_t |pred - target|` per appliance; total is the appliance mean.
pub fn mae(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<PerAppliance<f64>, MetricsError> {
    let (c, t) = check(pred, target)?;
    let per: Vec<f64> = pred
        .iter()
        .zip(target)
        .map(|(p, y)| p.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / t as f64)
        .collect();
    let total = per.iter().sum::<f64>() / c as f64;
    Ok(PerAppliance {
        per_appliance: per,
        total,
    })
}

fn acc(abs_err: f64, energy: f64) -> f64 {
    1.0 - abs_err / (2.0 * energy)
}

/// `1 - sum |pred - target| / (2 sum target)` over all appliances.
pub fn est_acc(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<f64, MetricsError> {
    check(pred, target)?;
    let err: f64 = pred
        .iter()
        .zip(target)
        .flat_map(|(p, y)| p.iter().zip(y).map(|(a, b)| (a - b).abs()))
        .sum();
    let energy: f64 = target.iter().flatten().sum();
    if energy <= 0.0 {
        return Err(MetricsError::ZeroTarget);
    }
    Ok(acc(err, energy))
}

/// Estimated accuracy of each appliance on its own; `None` where the
/// appliance consumed no energy.
pub fn est_acc_per_appliance(
    pred: &[Vec<f64>],
    target: &[Vec<f64>],
) -> Result<Vec<Option<f64>>, MetricsError> {
    check(pred, target)?;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, y)| {
            let energy: f64 = y.iter().sum();
            (energy > 0.0).then(|| acc(p.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(), energy))
        })
        .collect())
}

/// `|sum pred - sum target| / sum target` per appliance. Appliances with no
/// energy are undefined and left out of the total.
pub fn sae(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<PerAppliance<Option<f64>>, MetricsError> {
    check(pred, target)?;
    let per: Vec<Option<f64>> = pred
        .iter()
        .zip(target)
        .map(|(p, y)| {
            let r: f64 = y.iter().sum();
            let r_hat: f64 = p.iter().sum();
            (r > 0.0).then(|| (r_hat - r).abs() / r)
        })
        .collect();
    let defined: Vec<f64> = per.iter().flatten().copied().collect();
    if defined.len() < per.len() {
        warn!(
            "SAE undefined for {} appliance(s) with zero energy; excluded from the total",
            per.len() - defined.len()
        );
    }
    let total = if defined.is_empty() {
        f64::NAN
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    };
    Ok(PerAppliance {
        per_appliance: per,
        total,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricSpace {
    Watts,
    Scaled,
}

impl fmt::Display for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricSpace::Watts => "watts",
            MetricSpace::Scaled => "scaled",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub names: Vec<String>,
    pub space: MetricSpace,
    pub windows: usize,
    pub mae: PerAppliance<f64>,
    pub est_acc: f64,
    pub est_acc_per_appliance: Vec<Option<f64>>,
    pub sae: PerAppliance<Option<f64>>,
}

impl MetricsReport {
    /// Computes every metric over `pred` and `target`, which hold the
    /// concatenation of `windows` windows per appliance.
    pub fn compute(
        names: &[String],
        pred: &[Vec<f64>],
        target: &[Vec<f64>],
        space: MetricSpace,
        windows: usize,
    ) -> Result<Self, MetricsError> {
        let (c, _) = check(pred, target)?;
        if names.len() != c {
            return Err(MetricsError::ShapeMismatch {
                pred: (names.len(), 0),
                target: (c, 0),
            });
        }
        Ok(Self {
            names: names.to_vec(),
            space,
            windows,
            mae: mae(pred, target)?,
            est_acc: est_acc(pred, target)?,
            est_acc_per_appliance: est_acc_per_appliance(pred, target)?,
            sae: sae(pred, target)?,
        })
    }

    /// `appliance,mae_w,est_acc,sae` with one row per appliance and a final
    /// `total` row. Undefined values are empty cells.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        let mut out = String::from("appliance,mae_w,est_acc,sae\n");
        for i in 0..self.names.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.names[i],
                self.mae.per_appliance[i],
                cell(self.est_acc_per_appliance[i]),
                cell(self.sae.per_appliance[i]),
            );
        }
        let total_sae = (!self.sae.total.is_nan()).then_some(self.sae.total);
        let _ = writeln!(
            out,
            "total,{},{},{}",
            self.mae.total,
            self.est_acc,
            cell(total_sae)
        );
        out
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        let unit = match self.space {
            MetricSpace::Watts => "MAE (W)",
            MetricSpace::Scaled => "MAE (scaled)",
        };
        writeln!(f, "metrics in {} space over {} window(s)", self.space, self.windows)?;
        writeln!(f, "{:<20} {:>12} {:>10} {:>10}", "appliance", unit, "Est.Acc", "SAE")?;
        for i in 0..self.names.len() {
            writeln!(
                f,
                "{:<20} {:>12.4} {:>10} {:>10}",
                self.names[i],
                self.mae.per_appliance[i],
                cell(self.est_acc_per_appliance[i]),
                cell(self.sae.per_appliance[i]),
            )?;
        }
        write!(
            f,
            "{:<20} {:>12.4} {:>10.4} {:>10}",
            "total",
            self.mae.total,
            self.est_acc,
            cell((!self.sae.total.is_nan()).then_some(self.sae.total)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(mae(&[vec![3.0]], &[vec![1.0]]).unwrap().total, 2.0);
        assert_eq!(est_acc(&[vec![2.0]], &[vec![1.0]]).unwrap(), 0.5);
        let s = sae(&[vec![60.0, 50.0]], &[vec![50.0, 50.0]]).unwrap();
        assert!((s.total - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_predictor_laws() {
        let y = vec![vec![1.0, 2.0, 0.5], vec![4.0, 0.0, 3.0]];
        let z = vec![vec![0.0; 3]; 2];
        assert_eq!(est_acc(&z, &y).unwrap(), 0.5);
        let s = sae(&z, &y).unwrap();
        assert_eq!(s.per_appliance, vec![Some(1.0), Some(1.0)]);
        assert_eq!(s.total, 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        let z = vec![vec![0.0; 2]];
        assert_eq!(est_acc(&z, &z), Err(MetricsError::ZeroTarget));
        let s = sae(&[vec![1.0], vec![1.0]], &[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(s.per_appliance[0], None);
        assert_eq!(s.total, 0.5);
        assert!(mae(&[vec![1.0]], &[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn csv_has_a_row_per_appliance_plus_total() {
        let names = vec!["a".to_string(), "b".to_string()];
        let y = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let r = MetricsReport::compute(&names, &y, &y, MetricSpace::Watts, 1).unwrap();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 + 1);
        assert!(csv.lines().last().unwrap().starts_with("total,0,1,0"));
        assert!(r.to_string().contains("watts"));
    }
}
