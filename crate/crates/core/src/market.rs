//! Piecewise-constant market term structure.

use crate::error::{Error, Result};

/// Risk-free rates and volatilities that are constant on each withdrawal
/// period, together with the proportional annual fee charged on the wealth
/// account.
///
/// Period `n` (1-based) spans `(times[n-1], times[n]]` and uses `rates[n-1]`
/// and `vols[n-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketTermStructure {
    rates: Vec<f64>,
    vols: Vec<f64>,
    fee: f64,
    times: Vec<f64>,
    /// Cumulative integral of the short rate at each date.
    rate_integral: Vec<f64>,
}

/// Drift and standard deviation of the log-wealth increment over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WealthStep {
    pub drift: f64,
    pub vol: f64,
}

impl MarketTermStructure {
    pub fn new(rates: Vec<f64>, vols: Vec<f64>, fee: f64, times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidInput("need at least one period".into()));
        }
        let n = times.len() - 1;
        if rates.len() != n || vols.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} periods but {} rates and {} volatilities",
                n,
                rates.len(),
                vols.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("dates must be strictly increasing".into()));
        }
        if let Some(v) = vols.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!("volatility {v} must be positive")));
        }
        if rates.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidInput("rates must be finite".into()));
        }
        if !fee.is_finite() {
            return Err(Error::InvalidInput(format!("fee {fee} must be finite")));
        }
        let mut rate_integral = Vec::with_capacity(times.len());
        rate_integral.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            acc += rates[i] * (times[i + 1] - times[i]);
            rate_integral.push(acc);
        }
        Ok(Self {
            rates,
            vols,
            fee,
            times,
            rate_integral,
        })
    }

    /// Flat rate and volatility over the given dates.
    pub fn flat(rate: f64, vol: f64, fee: f64, times: &[f64]) -> Result<Self> {
        let n = times.len().saturating_sub(1);
        Self::new(vec![rate; n], vec![vol; n], fee, times.to_vec())
    }

    /// The same term structure with a different fee.
    ///
    /// Calibration may probe negative fees, so only finiteness is required.
    pub fn with_fee(&self, fee: f64) -> Self {
        assert!(fee.is_finite(), "fee must be finite");
        Self { fee, ..self.clone() }
    }

    pub fn fee(&self) -> f64 {
        self.fee
    }

    pub fn periods(&self) -> usize {
        self.rates.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rate(&self, n: usize) -> f64 {
        self.rates[n - 1]
    }

    pub fn vol(&self, n: usize) -> f64 {
        self.vols[n - 1]
    }

    pub fn max_vol(&self) -> f64 {
        self.vols.iter().cloned().fold(0.0, f64::max)
    }

    /// Length of period `n`.
    pub fn dt(&self, n: usize) -> f64 {
        self.times[n] - self.times[n - 1]
    }

    fn check_period(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.periods() {
            return Err(Error::IndexOutOfRange {
                index: n,
                min: 1,
                max: self.periods(),
            });
        }
        Ok(())
    }

    /// Discount factor from date `j` back to date `i`.
    pub fn discount(&self, i: usize, j: usize) -> Result<f64> {
        let last = self.periods();
        if j > last {
            return Err(Error::IndexOutOfRange {
                index: j,
                min: i,
                max: last,
            });
        }
        if i > j {
            return Err(Error::IndexOutOfRange {
                index: i,
                min: 0,
                max: j,
            });
        }
        Ok((self.rate_integral[i] - self.rate_integral[j]).exp())
    }

    /// Parameters of the lognormal wealth transition over period `n`.
    pub fn wealth_step_params(&self, n: usize) -> Result<WealthStep> {
        self.check_period(n)?;
        let dt = self.dt(n);
        let sigma = self.vol(n);
        Ok(WealthStep {
            drift: (self.rate(n) - self.fee - 0.5 * sigma * sigma) * dt,
            vol: sigma * dt.sqrt(),
        })
    }

    /// Mean of the wealth at the end of period `n` given wealth `w` at its start.
    pub fn expected_wealth(&self, n: usize, w: f64) -> Result<f64> {
        self.check_period(n)?;
        if !(w >= 0.0) {
            return Err(Error::InvalidInput(format!("wealth {w} must be non-negative")));
        }
        Ok(w * ((self.rate(n) - self.fee) * self.dt(n)).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn flat_one_year_discount() {
        let m = MarketTermStructure::flat(0.05, 0.2, 0.0, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(m.discount(0, 1).unwrap(), (-0.05f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(m.discount(0, 1).unwrap(), 0.951229, epsilon = 1e-6);
        assert_eq!(m.discount(1, 1).unwrap(), 1.0);
        assert_eq!(m.discount(0, 0).unwrap(), 1.0);
    }

    #[test]
    fn two_rate_discount() {
        let m = MarketTermStructure::new(vec![0.02, 0.04], vec![0.2, 0.2], 0.0, vec![0.0, 0.5, 1.0]).unwrap();
        assert_abs_diff_eq!(m.discount(0, 2).unwrap(), (-0.03f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(m.discount(0, 2).unwrap(), 0.970446, epsilon = 1e-6);
    }

    #[test]
    fn discount_index_errors() {
        let m = MarketTermStructure::flat(0.05, 0.2, 0.0, &[0.0, 1.0]).unwrap();
        assert!(m.discount(0, 2).is_err());
        assert!(m.discount(1, 0).is_err());
    }

    #[test]
    fn step_params() {
        let m = MarketTermStructure::flat(0.05, 0.2, 0.0, &[0.0, 1.0]).unwrap();
        let s = m.wealth_step_params(1).unwrap();
        assert_abs_diff_eq!(s.drift, 0.03, epsilon = 1e-15);
        assert_abs_diff_eq!(s.vol, 0.2, epsilon = 1e-15);
        let m = MarketTermStructure::flat(0.05, 0.3, 0.05 - 0.045, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(m.wealth_step_params(1).unwrap().drift, 0.0, epsilon = 1e-15);
        assert!(m.wealth_step_params(0).is_err());
        assert!(m.wealth_step_params(2).is_err());
    }

    #[test]
    fn fee_shift_moves_drift() {
        let times: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25).collect();
        let a = MarketTermStructure::flat(0.05, 0.2, 0.01, &times).unwrap();
        let b = a.with_fee(0.01 + 0.003);
        for n in 1..=8 {
            let d = a.wealth_step_params(n).unwrap().drift - b.wealth_step_params(n).unwrap().drift;
            assert_abs_diff_eq!(d, 0.003 * 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn degenerate_period_rejected() {
        assert!(MarketTermStructure::flat(0.05, 0.2, 0.0, &[0.0, 0.0]).is_err());
        assert!(MarketTermStructure::flat(0.05, 0.0, 0.0, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn expected_wealth_values() {
        let m = MarketTermStructure::flat(0.05, 0.2, 0.01, &[0.0, 0.25]).unwrap();
        assert_abs_diff_eq!(
            m.expected_wealth(1, 100.0).unwrap(),
            100.0 * 0.01f64.exp(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(m.expected_wealth(1, 100.0).unwrap(), 101.005, epsilon = 1e-3);
        assert_eq!(m.expected_wealth(1, 0.0).unwrap(), 0.0);
        let m = m.with_fee(0.05);
        assert_abs_diff_eq!(m.expected_wealth(1, 100.0).unwrap(), 100.0, epsilon = 1e-12);
    }

    #[test]
    fn sampled_mean_matches_expected_wealth() {
        let m = MarketTermStructure::flat(0.05, 0.2, 0.01, &[0.0, 0.25]).unwrap();
        let step = m.wealth_step_params(1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            let w = 100.0 * (step.drift + step.vol * z).exp();
            sum += w;
            sum2 += w * w;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = m.expected_wealth(1, 100.0).unwrap();
        assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact} (se {se})");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn discount_multiplicative(
                rates in proptest::collection::vec(-0.02f64..0.15, 6),
                i in 0usize..=6, j in 0usize..=6, k in 0usize..=6,
            ) {
                let mut idx = [i, j, k];
                idx.sort();
                let [i, j, k] = idx;
                let times: Vec<f64> = (0..=6).map(|x| x as f64 * 0.5).collect();
                let m = MarketTermStructure::new(rates, vec![0.2; 6], 0.0, times).unwrap();
                let lhs = m.discount(i, k).unwrap();
                let rhs = m.discount(i, j).unwrap() * m.discount(j, k).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-14);
            }
        }
    }
}
