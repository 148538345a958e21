/// Watches for the model collapsing onto null outputs: fires once mean
/// |prediction| stays below `ratio * mean |target|` for `patience`
/// consecutive epochs.
#[derive(Clone, Debug)]
pub struct CollapseMonitor {
    ratio: f64,
    patience: usize,
    streak: usize,
    fired: bool,
}

impl Default for CollapseMonitor {
    fn default() -> Self {
        Self::new(1e-6, 5)
    }
}

impl CollapseMonitor {
    pub fn new(ratio: f64, patience: usize) -> Self {
        Self {
            ratio,
            patience,
            streak: 0,
            fired: false,
        }
    }

    /// Records one epoch. Returns true when the alarm is raised. An epoch
    /// with an all-zero target neither extends nor resets the streak.
    pub fn observe(&mut self, mean_abs_pred: f64, mean_abs_target: f64) -> bool {
        if mean_abs_target <= 0.0 || !mean_abs_target.is_finite() {
            return self.fired;
        }
        if mean_abs_pred < self.ratio * mean_abs_target {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        if self.streak >= self.patience {
            self.fired = true;
        }
        self.fired
    }

    pub fn fired(&self) -> bool {
        self.fired
    }

    pub fn streak(&self) -> usize {
        self.streak
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fires_after_five_quiet_epochs() {
        let mut m = CollapseMonitor::default();
        for _ in 0..4 {
            assert!(!m.observe(0.0, 1.0));
        }
        assert!(!m.observe(1.0, 1.0));
        for _ in 0..4 {
            assert!(!m.observe(1e-9, 1.0));
        }
        assert!(m.observe(1e-9, 1.0));
    }

    #[test]
    fn zero_targets_disable_it() {
        let mut m = CollapseMonitor::default();
        for _ in 0..10 {
            assert!(!m.observe(0.0, 0.0));
        }
        assert_eq!(m.streak(), 0);
    }
}
