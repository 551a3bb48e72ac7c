use serde::{Deserialize, Serialize};

/// Count of events in independent Bernoulli trials with a 3-sigma
/// normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialEstimate {
    pub events: u64,
    pub trials: u64,
    pub rate: f64,
    pub half_width: f64,
}

impl BinomialEstimate {
    pub fn from_counts(events: u64, trials: u64) -> Self {
        assert!(trials > 0 && events <= trials);
        let n = trials as f64;
        let rate = events as f64 / n;
        // The normal approximation degenerates when every trial agrees; fall
        // back to the one-sided 3/n bound.
        let half_width = if events == 0 || events == trials {
            3.0 / n
        } else {
            3.0 * (rate * (1.0 - rate) / n).sqrt()
        };
        BinomialEstimate {
            events,
            trials,
            rate,
            half_width,
        }
    }

    /// Whether `value` lies within the half-width of the estimate.
    pub fn covers(&self, value: f64) -> bool {
        (value - self.rate).abs() <= self.half_width
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_width_rules() {
        let e = BinomialEstimate::from_counts(25, 100);
        assert!((e.rate - 0.25).abs() < 1e-15);
        assert!((e.half_width - 3.0 * (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(BinomialEstimate::from_counts(0, 1000).half_width, 0.003);
        assert_eq!(BinomialEstimate::from_counts(1000, 1000).half_width, 0.003);
        assert!(BinomialEstimate::from_counts(0, 1000).covers(0.002));
        assert!(!BinomialEstimate::from_counts(0, 1000).covers(0.004));
    }
}
