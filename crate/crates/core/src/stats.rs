//! Verification statistics: two-sample and one-sample Kolmogorov-Smirnov,
//! Hill tail-index estimation, robust standardization.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Sorted, NaN-free sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooSmall { got: 0, need: 1 });
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite);
        }
        values.sort_unstable_by(|a, b| a.total_cmp(b));
        Ok(Sample { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Empirical CDF `#{x_i <= x} / n`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Linear-interpolation quantile (Hyndman-Fan type 7).
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.len();
        let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let frac = h - lo as f64;
        self.values[lo] + frac * (self.values[hi] - self.values[lo])
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn iqr(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Fraction of values strictly above `x`.
    pub fn fraction_above(&self, x: f64) -> f64 {
        1.0 - self.ecdf(x)
    }

    /// Apply an increasing map elementwise (order is preserved).
    fn map_monotone(&self, f: impl Fn(f64) -> f64) -> Sample {
        Sample {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Result of a Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
    /// `true` when the null is rejected at the requested significance.
    pub reject: bool,
}

const KS_MIN: usize = 50;

/// Two-sample KS test; `p_value` from the asymptotic Kolmogorov law with
/// effective size `n m / (n + m)`.
pub fn ks_two_sample(x: &Sample, y: &Sample, significance: f64) -> Result<KsReport> {
    let (n, m) = (x.len(), y.len());
    if n.min(m) < KS_MIN {
        return Err(Error::TooSmall { got: n.min(m), need: KS_MIN });
    }
    let (xs, ys) = (x.values(), y.values());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = if xs[i] <= ys[j] { xs[i] } else { ys[j] };
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let p_value = kolmogorov_sf(ne.sqrt() * d);
    Ok(KsReport {
        statistic: d,
        p_value,
        n,
        m,
        reject: p_value < significance,
    })
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample(x: &Sample, cdf: impl Fn(f64) -> f64, significance: f64) -> Result<KsReport> {
    let n = x.len();
    if n < KS_MIN {
        return Err(Error::TooSmall { got: n, need: KS_MIN });
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.values().iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / nf - f).max(f - i as f64 / nf);
    }
    let p_value = kolmogorov_sf(nf.sqrt() * d);
    Ok(KsReport {
        statistic: d,
        p_value,
        n,
        m: 0,
        reject: p_value < significance,
    })
}

/// `P[K > lambda]` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form, fast for small lambda.
        let pi2 = core::f64::consts::PI * core::f64::consts::PI;
        let mut cdf = 0.0;
        for k in 1..=20 {
            let odd = (2 * k - 1) as f64;
            cdf += (-odd * odd * pi2 / (8.0 * lambda * lambda)).exp();
        }
        cdf *= (2.0 * core::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sf += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

/// Hill estimate of the tail index from the top `k` order statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillEstimate {
    pub alpha: f64,
    pub std_error: f64,
    pub k: usize,
}

/// `alpha = k / sum_{i=1}^k log(x_(n-i+1) / x_(n-k))`, standard error
/// `alpha / sqrt(k)`. Requires `50 <= k <= n / 10` and positive values.
pub fn hill_index(x: &Sample, k: usize) -> Result<HillEstimate> {
    let n = x.len();
    if k < 50 || k > n / 10 {
        return Err(Error::InvalidK { k, n });
    }
    if x.min() <= 0.0 {
        return Err(Error::NonPositive);
    }
    let v = x.values();
    let threshold = v[n - k - 1].ln();
    let s: f64 = v[n - k..].iter().map(|y| y.ln() - threshold).sum();
    let alpha = k as f64 / s;
    Ok(HillEstimate {
        alpha,
        std_error: alpha / (k as f64).sqrt(),
        k,
    })
}

/// Hill estimates at `k = n/200, n/100, n/50` and a heaviness verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillPlateau {
    pub estimates: [HillEstimate; 3],
    /// Spread of the three estimates relative to their mean.
    pub relative_spread: f64,
    /// `true` when the spread is at most 20% of the mean.
    pub heavy: bool,
}

pub fn hill_plateau(x: &Sample) -> Result<HillPlateau> {
    let n = x.len();
    let estimates = [hill_index(x, n / 200)?, hill_index(x, n / 100)?, hill_index(x, n / 50)?];
    let alphas = estimates.map(|e| e.alpha);
    let mean = alphas.iter().sum::<f64>() / 3.0;
    let spread = alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max) - alphas.iter().copied().fold(f64::INFINITY, f64::min);
    let relative_spread = spread / mean;
    Ok(HillPlateau {
        estimates,
        relative_spread,
        heavy: relative_spread <= 0.2,
    })
}

/// `(x - median) / IQR`.
pub fn standardize(x: &Sample) -> Result<Sample> {
    let iqr = x.iqr();
    if !(iqr > 0.0 && iqr.is_finite()) {
        return Err(Error::DegenerateSample);
    }
    let med = x.median();
    Ok(x.map_monotone(|v| (v - med) / iqr))
}

/// Levy distance between the empirical law of `x` and the point mass at
/// zero: the least `eps` with `P[x < -eps] <= eps` and `P[x > eps] <= eps`.
pub fn levy_distance_to_zero(x: &Sample) -> f64 {
    let n = x.len() as f64;
    let below = |e: f64| x.values().partition_point(|&v| v < -e) as f64 / n;
    let above = |e: f64| x.fraction_above(e);
    let ok = |e: f64| below(e) <= e && above(e) <= e;
    if ok(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Mean with its standard error.
pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let (m, var) = crate::math::mean_var(v);
    (m, (var / v.len() as f64).sqrt())
}
