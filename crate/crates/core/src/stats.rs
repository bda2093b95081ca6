//! Goodness-of-fit tests used to validate the samplers.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestOutcome {
    pub fn rejected_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Asymptotic Kolmogorov distribution `P(K > x)`.
fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test of `samples` against `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestOutcome> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("KS test needs at least one sample".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max);
    // Stephens' small-sample correction
    let sqrt_n = n.sqrt();
    let p = kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    Ok(TestOutcome {
        statistic: d,
        p_value: p,
    })
}

/// Pearson chi-square goodness of fit of `observed` counts to `probs`.
/// Cells with zero expected probability must have zero counts.
pub fn chi_square_test(observed: &[u64], probs: &[f64]) -> Result<TestOutcome> {
    if observed.len() != probs.len() || observed.len() < 2 {
        return Err(Error::InvalidArgument("chi-square needs matching cell lists of length >= 2".into()));
    }
    let total: u64 = observed.iter().sum();
    let psum: f64 = probs.iter().sum();
    if total == 0 || !(psum > 0.0) {
        return Err(Error::InvalidArgument("chi-square needs positive totals".into()));
    }
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = total as f64 * p / psum;
        if e > 0.0 {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        } else if o > 0 {
            return Ok(TestOutcome {
                statistic: f64::INFINITY,
                p_value: 0.0,
            });
        }
    }
    let df = (cells - 1) as f64;
    let dist = ChiSquared::new(df).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(TestOutcome {
        statistic: stat,
        p_value: 1.0 - dist.cdf(stat),
    })
}
