//! Sojourn-time families and the special samplers used by the limit laws.

use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{incomplete_gamma, normal_cdf, normal_sf};

/// Parametric family of a sojourn law. Parameters are in time units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Exponential { rate: f64 },
    /// Support `[scale, inf)`, survival `(scale / x)^shape`.
    Pareto { shape: f64, scale: f64 },
    Weibull { shape: f64, scale: f64 },
    Gamma { shape: f64, scale: f64 },
    LogNormal { mu: f64, sigma: f64 },
    /// Uniform on `[low, high]` with `0 < low < high`.
    Uniform { low: f64, high: f64 },
}

/// Regular-variation data: `survival(x) ~ constant * x^(-index)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSpec {
    pub index: f64,
    pub constant: f64,
}

/// A validated, atomless sojourn law with finite mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SojournLaw {
    family: Family,
    mean: f64,
}

fn positive(x: f64, what: &'static str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(what))
    }
}

impl SojournLaw {
    pub fn new(family: Family) -> Result<Self> {
        let mean = match family {
            Family::Exponential { rate } => {
                positive(rate, "exponential rate must be positive")?;
                1.0 / rate
            }
            Family::Pareto { shape, scale } => {
                positive(shape, "pareto shape must be positive")?;
                positive(scale, "pareto scale must be positive")?;
                if shape <= 1.0 {
                    return Err(Error::InfiniteMean);
                }
                shape * scale / (shape - 1.0)
            }
            Family::Weibull { shape, scale } => {
                positive(shape, "weibull shape must be positive")?;
                positive(scale, "weibull scale must be positive")?;
                scale * libm::tgamma(1.0 + 1.0 / shape)
            }
            Family::Gamma { shape, scale } => {
                positive(shape, "gamma shape must be positive")?;
                positive(scale, "gamma scale must be positive")?;
                shape * scale
            }
            Family::LogNormal { mu, sigma } => {
                if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
                    return Err(Error::InvalidParameter("lognormal parameters"));
                }
                if sigma == 0.0 {
                    return Err(Error::PointMass);
                }
                (mu + 0.5 * sigma * sigma).exp()
            }
            Family::Uniform { low, high } => {
                positive(low, "uniform lower bound must be positive")?;
                if !high.is_finite() || high < low {
                    return Err(Error::InvalidParameter("uniform bounds out of order"));
                }
                if high == low {
                    return Err(Error::PointMass);
                }
                0.5 * (low + high)
            }
        };
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InfiniteMean);
        }
        Ok(SojournLaw { family, mean })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Family::Exponential { rate })
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Family::Pareto { shape, scale })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Family::Weibull { shape, scale })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Family::Gamma { shape, scale })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::LogNormal { mu, sigma })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        Self::new(Family::Uniform { low, high })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `P[W > x]`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match self.family {
            Family::Exponential { rate } => (-rate * x).exp(),
            Family::Pareto { shape, scale } => {
                if x <= scale {
                    1.0
                } else {
                    (scale / x).powf(shape)
                }
            }
            Family::Weibull { shape, scale } => (-(x / scale).powf(shape)).exp(),
            Family::Gamma { shape, scale } => incomplete_gamma(shape, x / scale).1,
            Family::LogNormal { mu, sigma } => normal_sf((x.ln() - mu) / sigma),
            Family::Uniform { low, high } => {
                if x <= low {
                    1.0
                } else if x >= high {
                    0.0
                } else {
                    (high - x) / (high - low)
                }
            }
        }
    }

    /// Regular-variation data; only the Pareto family is heavy tailed.
    pub fn tail(&self) -> Option<TailSpec> {
        match self.family {
            Family::Pareto { shape, scale } => Some(TailSpec {
                index: shape,
                constant: scale.powf(shape),
            }),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            Family::Exponential { rate } => -open01(rng).ln() / rate,
            Family::Pareto { shape, scale } => scale * open01(rng).powf(-1.0 / shape),
            Family::Weibull { shape, scale } => scale * (-open01(rng).ln()).powf(1.0 / shape),
            Family::Gamma { shape, scale } => {
                let g = GammaDist::new(shape, scale).expect("validated gamma parameters");
                g.sample(rng).max(f64::MIN_POSITIVE)
            }
            Family::LogNormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp().max(f64::MIN_POSITIVE)
            }
            Family::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }

    /// CDF of the equilibrium law, `(1/mean) * int_0^x survival`.
    pub fn equilibrium_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let h = match self.family {
            Family::Exponential { rate } => -libm::expm1(-rate * x),
            Family::Pareto { .. } => 1.0 - self.equilibrium_survival(x),
            Family::Weibull { shape, scale } => incomplete_gamma(1.0 / shape, (x / scale).powf(shape)).0,
            Family::Gamma { shape, scale } => {
                let z = x / scale;
                x / self.mean * incomplete_gamma(shape, z).1 + incomplete_gamma(shape + 1.0, z).0
            }
            Family::LogNormal { mu, sigma } => {
                let lx = x.ln();
                x / self.mean * normal_sf((lx - mu) / sigma) + normal_cdf((lx - mu - sigma * sigma) / sigma)
            }
            Family::Uniform { low, high } => {
                let integral = if x <= low {
                    x
                } else if x >= high {
                    self.mean
                } else {
                    let w = high - low;
                    low + (w * w - (high - x) * (high - x)) / (2.0 * w)
                };
                integral / self.mean
            }
        };
        h.clamp(0.0, 1.0)
    }

    /// Survival function of the equilibrium law.
    pub fn equilibrium_survival(&self, x: f64) -> f64 {
        match self.family {
            Family::Exponential { .. } => self.survival(x),
            Family::Pareto { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else if x < scale {
                    ((scale - x) + scale / (shape - 1.0)) / self.mean
                } else {
                    scale.powf(shape) * x.powf(1.0 - shape) / ((shape - 1.0) * self.mean)
                }
            }
            _ => 1.0 - self.equilibrium_cdf(x),
        }
    }

    /// Draw from the integrated-tail density `survival(x) / mean`.
    ///
    /// Exponential and Pareto use closed-form inverses; the other families
    /// invert the closed-form integrated tail by safeguarded Newton steps,
    /// stopping once the CDF matches the target to `1e-10`.
    pub fn equilibrium_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            Family::Exponential { rate } => -open01(rng).ln() / rate,
            Family::Pareto { shape, scale } => {
                let s = open01(rng);
                if s >= 1.0 / shape {
                    (1.0 - s) * shape * scale / (shape - 1.0)
                } else {
                    scale * (shape * s).powf(-1.0 / (shape - 1.0))
                }
            }
            _ => {
                let u = open01(rng);
                self.equilibrium_quantile(u)
            }
        }
    }

    /// Inverse of [`equilibrium_cdf`](Self::equilibrium_cdf).
    pub fn equilibrium_quantile(&self, u: f64) -> f64 {
        const TOL: f64 = 1e-10;
        let mut lo = 0.0;
        let mut hi = self.mean;
        while self.equilibrium_cdf(hi) < u {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return lo;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.equilibrium_cdf(x) - u;
            if f.abs() <= TOL {
                return x;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.survival(x) / self.mean;
            let newton = x - f / slope;
            x = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        x
    }
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(Open01)
}

/// Parameters of a stable law `S_alpha(scale, skew, shift)` with
/// characteristic function
/// `exp(-scale^alpha |t|^alpha (1 - i skew sign(t) tan(pi alpha / 2)) + i shift t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    alpha: f64,
    scale: f64,
    skew: f64,
    shift: f64,
    b: f64,
    s: f64,
}

impl StableParams {
    /// Only `1 < alpha <= 2` is supported.
    pub fn new(alpha: f64, scale: f64, skew: f64, shift: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::UnsupportedAlpha(alpha));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter("stable scale must be positive"));
        }
        if !(-1.0..=1.0).contains(&skew) {
            return Err(Error::InvalidParameter("stable skewness must lie in [-1, 1]"));
        }
        if !shift.is_finite() {
            return Err(Error::InvalidParameter("stable shift must be finite"));
        }
        let t = skew * (PI * alpha / 2.0).tan();
        Ok(StableParams {
            alpha,
            scale,
            skew,
            shift,
            b: t.atan() / alpha,
            s: (1.0 + t * t).powf(1.0 / (2.0 * alpha)),
        })
    }

    /// Standard law `S_alpha(1, skew, 0)`.
    pub fn standard(alpha: f64, skew: f64) -> Result<Self> {
        Self::new(alpha, 1.0, skew, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn skew(&self) -> f64 {
        self.skew
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `C_alpha = (int_0^inf x^(-alpha) sin x dx)^(-1)`; zero at `alpha = 2`.
    pub fn tail_constant(&self) -> f64 {
        if self.alpha == 2.0 {
            return 0.0;
        }
        1.0 / (libm::tgamma(1.0 - self.alpha) * (PI * self.alpha / 2.0).cos())
    }

    /// Characteristic function at `theta` as `(re, im)`.
    pub fn characteristic_function(&self, theta: f64) -> (f64, f64) {
        let a = self.alpha;
        let m = (self.scale * theta.abs()).powf(a);
        let sign = if theta > 0.0 {
            1.0
        } else if theta < 0.0 {
            -1.0
        } else {
            0.0
        };
        let im_exp = m * self.skew * sign * (PI * a / 2.0).tan() + self.shift * theta;
        let modulus = (-m).exp();
        (modulus * im_exp.cos(), modulus * im_exp.sin())
    }

    /// Chambers-Mallows-Stuck draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * self.sample_standard(rng) + self.shift
    }

    fn sample_standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.alpha;
        let v = PI * (open01(rng) - 0.5);
        let w = -open01(rng).ln();
        let av = a * (v + self.b);
        self.s * av.sin() / v.cos().powf(1.0 / a) * ((v - av).cos() / w).powf((1.0 - a) / a)
    }
}

/// Draw `(F1, F2)`: the terminal value and running maximum of standard
/// Brownian motion on `[0, 1]`.
///
/// `U` is chi with three degrees of freedom, `X ~ Uniform(-U, U)`, and the
/// pair is `(X, (U + X) / 2)`.
pub fn brownian_max_pair_sample<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let mut r2 = 0.0;
    for _ in 0..3 {
        let z: f64 = rng.sample(StandardNormal);
        r2 += z * z;
    }
    let u = r2.sqrt();
    let x = u * (2.0 * rng.random::<f64>() - 1.0);
    (x, 0.5 * (u + x))
}

/// Default grid for [`StablePathSampler`].
pub const DEFAULT_PATH_STEPS: usize = 1 << 14;

/// Euler partial-sum approximation of a standard stable motion on `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct StablePathSampler {
    increment: StableParams,
    steps: usize,
}

impl StablePathSampler {
    pub fn new(alpha: f64, skew: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("path needs at least one step"));
        }
        let dt = 1.0 / steps as f64;
        Ok(StablePathSampler {
            increment: StableParams::new(alpha, dt.powf(1.0 / alpha), skew, 0.0)?,
            steps,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `(endpoint, running maximum)`; the maximum includes the origin.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let mut x = 0.0;
        let mut max = 0.0f64;
        for _ in 0..self.steps {
            x += self.increment.sample(rng);
            max = max.max(x);
        }
        (x, max)
    }
}

/// One-shot form of [`StablePathSampler::sample`].
pub fn sup_stable_path_sample<R: Rng + ?Sized>(alpha: f64, skew: f64, steps: usize, rng: &mut R) -> Result<(f64, f64)> {
    Ok(StablePathSampler::new(alpha, skew, steps)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn analytic_means() {
        assert_eq!(SojournLaw::exponential(2.0).unwrap().mean(), 0.5);
        assert!((SojournLaw::pareto(1.5, 1.0).unwrap().mean() - 3.0).abs() < 1e-15);
        assert_eq!(SojournLaw::uniform(0.5, 1.5).unwrap().mean(), 1.0);
        assert!((SojournLaw::weibull(1.0, 2.0).unwrap().mean() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(SojournLaw::pareto(0.9, 1.0), Err(Error::InfiniteMean));
        assert_eq!(SojournLaw::pareto(1.0, 1.0), Err(Error::InfiniteMean));
        assert_eq!(SojournLaw::uniform(1.0, 1.0), Err(Error::PointMass));
        assert_eq!(SojournLaw::lognormal(0.0, 0.0), Err(Error::PointMass));
        assert!(matches!(SojournLaw::exponential(-1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(SojournLaw::uniform(0.0, 1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(SojournLaw::gamma(f64::NAN, 1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn survival_values() {
        let e = SojournLaw::exponential(1.0).unwrap();
        assert_eq!(e.survival(0.0), 1.0);
        assert!((e.survival(core::f64::consts::LN_2) - 0.5).abs() < 1e-15);
        let p = SojournLaw::pareto(2.0, 1.0).unwrap();
        assert!((p.survival(2.0) - 0.25).abs() < 1e-15);
        let g = SojournLaw::gamma(1.0, 2.0).unwrap();
        assert!((g.survival(3.0) - (-1.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn pareto_equilibrium_survival_at_scale() {
        // mean 2, int_1^inf x^-2 dx = 1
        let p = SojournLaw::pareto(2.0, 1.0).unwrap();
        assert!((p.equilibrium_survival(1.0) - 0.5).abs() < 1e-15);
        assert!((p.equilibrium_cdf(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_quantile_inverts_cdf() {
        let laws = [
            SojournLaw::weibull(0.7, 1.3).unwrap(),
            SojournLaw::gamma(2.5, 0.4).unwrap(),
            SojournLaw::lognormal(0.2, 0.8).unwrap(),
            SojournLaw::uniform(0.5, 2.0).unwrap(),
        ];
        for law in &laws {
            for &u in &[1e-6, 0.1, 0.5, 0.9, 0.999] {
                let x = law.equilibrium_quantile(u);
                assert!((law.equilibrium_cdf(x) - u).abs() <= 1e-10, "{law:?} u={u}");
            }
        }
    }

    #[test]
    fn tail_spec_only_for_pareto() {
        let p = SojournLaw::pareto(1.5, 0.04).unwrap();
        let t = p.tail().unwrap();
        assert_eq!(t.index, 1.5);
        assert!((t.constant - 0.04f64.powf(1.5)).abs() < 1e-15);
        assert!(SojournLaw::exponential(1.0).unwrap().tail().is_none());
    }

    #[test]
    fn stable_rejects_alpha_at_most_one() {
        assert_eq!(StableParams::standard(1.0, 0.0), Err(Error::UnsupportedAlpha(1.0)));
        assert_eq!(StableParams::standard(0.7, 0.0), Err(Error::UnsupportedAlpha(0.7)));
        assert!(StableParams::standard(2.0, 0.0).is_ok());
        assert!(StablePathSampler::new(0.5, 0.0, 10).is_err());
    }

    #[test]
    fn tail_constant_at_one_and_a_half() {
        let p = StableParams::standard(1.5, 1.0).unwrap();
        let c = p.tail_constant();
        assert!((c - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-12, "{c}");
    }

    #[test]
    fn brownian_pair_support() {
        let mut r = rng(3);
        for _ in 0..10_000 {
            let (f1, f2) = brownian_max_pair_sample(&mut r);
            assert!(f2 >= 0.0 && f2 >= f1);
        }
    }

    #[test]
    fn half_normal_mean_of_brownian_max() {
        let mut r = rng(4);
        let n = 200_000;
        let m: f64 = (0..n).map(|_| brownian_max_pair_sample(&mut r).1).sum::<f64>() / n as f64;
        assert!((m - (2.0 / PI).sqrt()).abs() < 0.01, "{m}");
    }

    #[test]
    fn stable_path_max_dominates_endpoint() {
        let s = StablePathSampler::new(1.5, 0.3, 256).unwrap();
        let mut r = rng(5);
        for _ in 0..1000 {
            let (end, max) = s.sample(&mut r);
            assert!(max >= end.max(0.0));
        }
    }
}
