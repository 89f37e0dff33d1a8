//! Affine recursion `X = A X + B` in law: contraction diagnostics, the
//! backward-series sampler of the fixed point, moment recursion and the
//! tail exponent solving `E[A^nu] = 1`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::math::{log_mean_exp, mean_var};
use crate::perpetuity::{SignedLogFunctional, StateFns};
use crate::semimarkov::SemiMarkovModel;

/// `(A, B)` with `A = exp(log_a) >= 0` (`log_a = -inf` encodes `A = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinePair {
    pub log_a: f64,
    pub b: f64,
}

impl AffinePair {
    pub fn new(a: f64, b: f64) -> Self {
        AffinePair { log_a: a.ln(), b }
    }

    pub fn a(&self) -> f64 {
        self.log_a.exp()
    }
}

/// Source of i.i.d. affine pairs.
pub trait AffinePairSampler {
    fn sample_pair(&self, rng: &mut dyn RngCore) -> AffinePair;
}

/// Deterministic pair.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPair(pub AffinePair);

impl AffinePairSampler for ConstantPair {
    fn sample_pair(&self, _rng: &mut dyn RngCore) -> AffinePair {
        self.0
    }
}

/// Pair drawn by a closure.
pub struct PairFn<F>(pub F);

impl<F: Fn(&mut dyn RngCore) -> AffinePair> AffinePairSampler for PairFn<F> {
    fn sample_pair(&self, rng: &mut dyn RngCore) -> AffinePair {
        (self.0)(rng)
    }
}

/// Cycle quantities `(L, Q)` of one renewal cycle at `anchor`:
/// `L = exp(-int_cycle a)`, `Q = int_cycle b(Y_s) exp(-int_s^end a) ds`.
#[derive(Debug, Clone)]
pub struct CyclePair<'m> {
    model: &'m SemiMarkovModel,
    fns: StateFns,
    anchor: usize,
}

impl<'m> CyclePair<'m> {
    pub fn new(model: &'m SemiMarkovModel, fns: &StateFns, anchor: usize) -> Result<Self> {
        model.check_state(anchor)?;
        fns.check(model)?;
        Ok(CyclePair { model, fns: fns.clone(), anchor })
    }

    /// Functional over one freshly simulated cycle.
    pub fn sample_cycle(&self, rng: &mut dyn RngCore) -> SignedLogFunctional {
        let mut f = SignedLogFunctional::IDENTITY;
        let (a, b) = (self.fns.a(), self.fns.b());
        self.model.run_cycle(self.anchor, rng, |s, d| f = f.accumulate(a[s], b[s], d));
        f
    }
}

impl AffinePairSampler for CyclePair<'_> {
    fn sample_pair(&self, rng: &mut dyn RngCore) -> AffinePair {
        let f = self.sample_cycle(rng);
        AffinePair { log_a: f.log_phi, b: f.i() }
    }
}

/// Cycle pair read forwards in time: `(1 / L, Q / L)`, i.e.
/// `(exp(int_cycle a), int_cycle b(Y_s) exp(int_start^s a) ds)`.
#[derive(Debug, Clone)]
pub struct ForwardCyclePair<'m>(pub CyclePair<'m>);

impl AffinePairSampler for ForwardCyclePair<'_> {
    fn sample_pair(&self, rng: &mut dyn RngCore) -> AffinePair {
        let f = self.0.sample_cycle(rng);
        let b = f64::from(f.i_sign) * (f.log_abs_i - f.log_phi).exp();
        AffinePair { log_a: -f.log_phi, b }
    }
}

/// Verdict on `E log A < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contraction {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Monte Carlo check of the contraction and integrability conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SreDiagnostics {
    pub mean_log_a: f64,
    /// 95% normal-approximation interval for `E log A`.
    pub mean_log_a_ci: (f64, f64),
    pub mean_log_plus_b: f64,
    pub mean_log_plus_b_ci: (f64, f64),
    pub verdict: Contraction,
}

const Z95: f64 = 1.959_963_984_540_054;

pub fn check_conditions(s: &dyn AffinePairSampler, reps: usize, rng: &mut dyn RngCore) -> Result<SreDiagnostics> {
    if reps < 1000 {
        return Err(Error::TooSmall { got: reps, need: 1000 });
    }
    let pairs: Vec<AffinePair> = (0..reps).map(|_| s.sample_pair(rng)).collect();
    let log_a: Vec<f64> = pairs.iter().map(|p| p.log_a).collect();
    let log_b: Vec<f64> = pairs.iter().map(|p| p.b.abs().ln().max(0.0)).collect();
    let (mean_log_a, mean_log_a_ci) = if log_a.iter().any(|v| *v == f64::NEG_INFINITY) {
        (f64::NEG_INFINITY, (f64::NEG_INFINITY, f64::NEG_INFINITY))
    } else {
        ci(&log_a)
    };
    let (mean_log_plus_b, mean_log_plus_b_ci) = ci(&log_b);
    let verdict = if !mean_log_plus_b.is_finite() {
        Contraction::Inconclusive
    } else if mean_log_a_ci.1 < 0.0 {
        Contraction::Convergent
    } else if mean_log_a_ci.0 > 0.0 {
        Contraction::Divergent
    } else {
        Contraction::Inconclusive
    };
    Ok(SreDiagnostics {
        mean_log_a,
        mean_log_a_ci,
        mean_log_plus_b,
        mean_log_plus_b_ci,
        verdict,
    })
}

fn ci(v: &[f64]) -> (f64, (f64, f64)) {
    let (m, var) = mean_var(v);
    let h = Z95 * (var / v.len() as f64).sqrt();
    (m, (m - h, m + h))
}

/// Default truncation level of the backward series.
pub const DEFAULT_TOL: f64 = 1e-12;
const MAX_TERMS: usize = 10_000_000;

/// Draw from the fixed point via `sum_{k>=1} (prod_{i<k} A_i) B_k`,
/// stopping once the running product drops below `tol`.
pub fn stationary_sample(s: &dyn AffinePairSampler, tol: f64, rng: &mut dyn RngCore) -> Result<f64> {
    let log_tol = tol.ln();
    let mut log_prod = 0.0;
    let mut sum = 0.0;
    for _ in 0..MAX_TERMS {
        let p = s.sample_pair(rng);
        if p.b != 0.0 {
            sum += p.b * log_prod.exp();
        }
        log_prod += p.log_a;
        if log_prod < log_tol {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergent { terms: MAX_TERMS })
}

/// Moments `E[V^k]`, `k = 1..=order`, with batch-means standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub moments: Vec<f64>,
    pub std_errors: Vec<f64>,
}

const BATCHES: usize = 20;

/// Moment recursion
/// `E[V^m] = (1 - E A^m)^{-1} sum_{k<m} C(m,k) E[A^k B^{m-k}] E[V^k]`
/// with all mixed moments estimated from `reps` pairs.
pub fn sre_moments(s: &dyn AffinePairSampler, order: usize, reps: usize, rng: &mut dyn RngCore) -> Result<MomentEstimate> {
    if order == 0 {
        return Err(Error::InvalidParameter("moment order must be positive"));
    }
    if reps < 2 * BATCHES {
        return Err(Error::TooSmall { got: reps, need: 2 * BATCHES });
    }
    let pairs: Vec<(f64, f64)> = (0..reps)
        .map(|_| {
            let p = s.sample_pair(rng);
            (p.a(), p.b)
        })
        .collect();
    for k in 1..=order {
        let ak: Vec<f64> = pairs.iter().map(|(a, _)| a.powi(k as i32)).collect();
        let (_, (_, upper)) = ci(&ak);
        if upper >= 1.0 {
            return Err(Error::MomentDiverges { order: k });
        }
    }
    let moments = recursion(&pairs, order);
    let size = reps / BATCHES;
    let batch: Vec<Vec<f64>> = (0..BATCHES).map(|i| recursion(&pairs[i * size..(i + 1) * size], order)).collect();
    let std_errors = (0..order)
        .map(|k| {
            let col: Vec<f64> = batch.iter().map(|b| b[k]).collect();
            (mean_var(&col).1 / BATCHES as f64).sqrt()
        })
        .collect();
    Ok(MomentEstimate { moments, std_errors })
}

fn recursion(pairs: &[(f64, f64)], order: usize) -> Vec<f64> {
    let n = pairs.len() as f64;
    // mixed[k][l] = E[A^k B^l]
    let mut mixed = vec![vec![0.0; order + 1]; order + 1];
    for &(a, b) in pairs {
        let mut ak = 1.0;
        for row in mixed.iter_mut() {
            let mut bl = 1.0;
            for cell in row.iter_mut() {
                *cell += ak * bl;
                bl *= b;
            }
            ak *= a;
        }
    }
    mixed.iter_mut().flatten().for_each(|v| *v /= n);
    let mut ev = vec![1.0; order + 1];
    for m in 1..=order {
        let mut s = 0.0;
        let mut binom = 1.0;
        for k in 0..m {
            s += binom * mixed[k][m - k] * ev[k];
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
        ev[m] = s / (1.0 - mixed[m][0]);
    }
    ev[1..].to_vec()
}

/// Root of `h(nu) = log E[A^nu]` away from zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KestenRoot {
    pub nu: f64,
    /// Delta-method standard error of `h` at the root.
    pub h_std_error: f64,
    pub bracket: (f64, f64),
}

const ROOT_WIDTH: f64 = 1e-3;

/// Bisection for `E[A^nu] = 1` on `[lo, hi]`. One sample of `log A` is
/// reused at every evaluation so the estimated `h` is a smooth function.
pub fn kesten_exponent(s: &dyn AffinePairSampler, lo: f64, hi: f64, reps: usize, rng: &mut dyn RngCore) -> Result<KestenRoot> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter("kesten bracket must satisfy 0 < lo < hi"));
    }
    let logs = sample_log_a(s, reps, rng);
    root_on(&logs, lo, hi)
}

/// As [`kesten_exponent`], searching `lo = 1e-3` and doubling `hi` from 1
/// up to 64 until `h(hi) > 0`.
pub fn kesten_exponent_auto(s: &dyn AffinePairSampler, reps: usize, rng: &mut dyn RngCore) -> Result<KestenRoot> {
    let logs = sample_log_a(s, reps, rng);
    let lo = 1e-3;
    let mut hi = 1.0;
    while h_of(&logs, hi) <= 0.0 {
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::NoSignChange);
        }
    }
    root_on(&logs, lo, hi)
}

fn sample_log_a(s: &dyn AffinePairSampler, reps: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    (0..reps).map(|_| s.sample_pair(rng).log_a).collect()
}

fn h_of(logs: &[f64], nu: f64) -> f64 {
    let scaled: Vec<f64> = logs.iter().map(|l| nu * l).collect();
    log_mean_exp(&scaled)
}

fn root_on(logs: &[f64], lo: f64, hi: f64) -> Result<KestenRoot> {
    let (mut a, mut b) = (lo, hi);
    if !(h_of(logs, a) < 0.0 && h_of(logs, b) > 0.0) {
        return Err(Error::NoSignChange);
    }
    while b - a > ROOT_WIDTH {
        let mid = 0.5 * (a + b);
        if h_of(logs, mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let nu = 0.5 * (a + b);
    let powers: Vec<f64> = logs.iter().map(|l| (nu * l).exp()).collect();
    let (m, var) = mean_var(&powers);
    Ok(KestenRoot {
        nu,
        h_std_error: (var / powers.len() as f64).sqrt() / m,
        bracket: (a, b),
    })
}

/// Wrap a closure as an [`AffinePairSampler`].
pub fn pair_fn<F: Fn(&mut dyn RngCore) -> AffinePair>(f: F) -> PairFn<F> {
    PairFn(f)
}

/// Uniform in `(0, 1)` for closures over `dyn RngCore`.
pub fn uniform01(rng: &mut dyn RngCore) -> f64 {
    rng.random::<f64>()
}
