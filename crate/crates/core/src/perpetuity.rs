//! Path functionals `Phi_t = exp(-int_0^t a(Y))` and
//! `I_t = int_0^t b(Y_s) exp(-int_s^t a(Y)) ds`, per-cycle quantities and
//! cycle-integral variances.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{log_add_exp, log_sub_exp};
use crate::semimarkov::{CycleIndex, SemiMarkovModel, Trajectory};
use crate::stats::{hill_index, Sample};

const SERIES_THRESHOLD: f64 = 1e-8;

/// Per-state coefficients `a(.)` and `b(.)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFns {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl StateFns {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch("a and b must have equal length"));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("state functions must be finite"));
        }
        Ok(StateFns { a, b })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Check the length against a model.
    pub fn check(&self, model: &SemiMarkovModel) -> Result<()> {
        if self.len() == model.num_states() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch("state functions must have one entry per state"))
        }
    }

    /// `(k a, b)`.
    pub fn scale_a(&self, k: f64) -> StateFns {
        StateFns {
            a: self.a.iter().map(|x| k * x).collect(),
            b: self.b.clone(),
        }
    }

    /// `(a, f(b))`.
    pub fn map_b(&self, f: impl Fn(f64) -> f64) -> StateFns {
        StateFns {
            a: self.a.clone(),
            b: self.b.iter().map(|&x| f(x)).collect(),
        }
    }
}

/// `int_0^x d exp(-c (x - s)) ds`, i.e. `x d` for `c = 0` and
/// `(d / c)(1 - exp(-x c))` otherwise.
pub fn g_fun(c: f64, d: f64, x: f64) -> f64 {
    let y = x * c;
    if y.abs() < SERIES_THRESHOLD {
        d * x * (1.0 - 0.5 * y)
    } else {
        -d / c * libm::expm1(-y)
    }
}

/// `log |g_fun(c, d, x)|` for `x > 0`, finite even when `g_fun` overflows.
fn log_abs_g(c: f64, d: f64, x: f64) -> f64 {
    let ld = d.abs().ln();
    let y = x * c;
    if y.abs() < SERIES_THRESHOLD {
        ld + x.ln() + libm::log1p(-0.5 * y)
    } else if c > 0.0 {
        ld - c.ln() + (-libm::expm1(-y)).ln()
    } else {
        let y = -y;
        let l = if y > 30.0 { y + libm::log1p(-(-y).exp()) } else { libm::expm1(y).ln() };
        ld - (-c).ln() + l
    }
}

/// `(Phi, I)` stored as `(log Phi, sign I, log |I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogFunctional {
    pub log_phi: f64,
    pub i_sign: i8,
    pub log_abs_i: f64,
}

impl Default for SignedLogFunctional {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl SignedLogFunctional {
    /// Value on an empty interval: `Phi = 1`, `I = 0`.
    pub const IDENTITY: Self = SignedLogFunctional {
        log_phi: 0.0,
        i_sign: 0,
        log_abs_i: f64::NEG_INFINITY,
    };

    pub fn from_linear(phi: f64, i: f64) -> Self {
        SignedLogFunctional {
            log_phi: phi.ln(),
            i_sign: sign_of(i),
            log_abs_i: i.abs().ln(),
        }
    }

    pub fn phi(&self) -> f64 {
        self.log_phi.exp()
    }

    pub fn i(&self) -> f64 {
        f64::from(self.i_sign) * self.log_abs_i.exp()
    }

    /// Extend by a sojourn of length `dt` with coefficients `(a, b)`.
    pub fn accumulate(self, a: f64, b: f64, dt: f64) -> Self {
        let log_phi = self.log_phi - a * dt;
        let carried = (self.i_sign, self.log_abs_i - a * dt);
        let fresh = if b == 0.0 || dt == 0.0 { (0, f64::NEG_INFINITY) } else { (sign_of(b), log_abs_g(a, b, dt)) };
        let (i_sign, log_abs_i) = signed_log_add(carried, fresh);
        SignedLogFunctional { log_phi, i_sign, log_abs_i }
    }

    /// Functional over `[0, s] + [s, t]` from the pieces over each interval.
    pub fn then(self, later: Self) -> Self {
        let carried = (self.i_sign, self.log_abs_i + later.log_phi);
        let (i_sign, log_abs_i) = signed_log_add(carried, (later.i_sign, later.log_abs_i));
        SignedLogFunctional {
            log_phi: self.log_phi + later.log_phi,
            i_sign,
            log_abs_i,
        }
    }
}

fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

pub(crate) fn signed_log_add(x: (i8, f64), y: (i8, f64)) -> (i8, f64) {
    match (x.0, y.0) {
        (0, _) => y,
        (_, 0) => x,
        (sx, sy) if sx == sy => (sx, log_add_exp(x.1, y.1)),
        _ => {
            if x.1 > y.1 {
                (x.0, log_sub_exp(x.1, y.1))
            } else if y.1 > x.1 {
                (y.0, log_sub_exp(y.1, x.1))
            } else {
                (0, f64::NEG_INFINITY)
            }
        }
    }
}

/// One-step form of [`SignedLogFunctional::accumulate`] using the
/// coefficients of state `j`.
pub fn accumulate(f: SignedLogFunctional, j: usize, dt: f64, fns: &StateFns) -> SignedLogFunctional {
    f.accumulate(fns.a[j], fns.b[j], dt)
}

/// `(Phi_t, I_t)` along a stored trajectory.
pub fn compute_phi_i(traj: &Trajectory, fns: &StateFns, t: f64) -> Result<SignedLogFunctional> {
    if !(t >= 0.0 && t <= traj.coverage()) {
        return Err(Error::OutOfRange(t));
    }
    let mut f = SignedLogFunctional::IDENTITY;
    for s in traj.segments() {
        if s.start >= t {
            break;
        }
        f = accumulate(f, s.state, s.end().min(t) - s.start, fns);
    }
    Ok(f)
}

/// `(Phi_t, I_t)` at each of the increasing `times` along a stored
/// trajectory.
pub fn compute_phi_i_grid(traj: &Trajectory, fns: &StateFns, times: &[f64]) -> Result<Vec<SignedLogFunctional>> {
    let mut out = Vec::with_capacity(times.len());
    let segs = traj.segments();
    let mut k = 0;
    let mut done = SignedLogFunctional::IDENTITY;
    let mut last = 0.0;
    for &t in times {
        if !(t >= last && t <= traj.coverage()) {
            return Err(Error::OutOfRange(t));
        }
        while k < segs.len() && segs[k].end() <= t {
            done = accumulate(done, segs[k].state, segs[k].duration, fns);
            k += 1;
        }
        let f = if k < segs.len() && t > segs[k].start {
            accumulate(done, segs[k].state, t - segs[k].start, fns)
        } else {
            done
        };
        out.push(f);
        last = t;
    }
    Ok(out)
}

/// Simulate the environment from its initial distribution and return
/// `(Phi_t, I_t)` without storing the path.
pub fn simulate_phi_i<R: Rng + ?Sized>(model: &SemiMarkovModel, fns: &StateFns, t: f64, rng: &mut R) -> SignedLogFunctional {
    let mut state = model.sample_initial(rng);
    let mut f = SignedLogFunctional::IDENTITY;
    let mut now = 0.0;
    while now < t {
        let (next, d) = model.step(state, rng);
        let used = d.min(t - now);
        f = accumulate(f, state, used, fns);
        now += d;
        state = next;
    }
    f
}

/// Cycle decomposition of a trajectory at an anchor state.
#[derive(Debug, Clone)]
pub struct CycleQuantities {
    /// Functional over `[0, tau_0]`.
    pub pre: SignedLogFunctional,
    /// Functional over each complete cycle `[tau_{i-1}, tau_i]`:
    /// `log L_i = log_phi`, `Q_i = i()`.
    pub cycles: Vec<SignedLogFunctional>,
}

impl CycleQuantities {
    /// `(L_i, Q_i)` in linear scale.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cycles.iter().map(|c| (c.phi(), c.i()))
    }

    /// `(Phi, I)` at `tau_k` rebuilt from the pre-cycle piece and the first
    /// `k` cycles.
    pub fn reconstruct(&self, k: usize) -> SignedLogFunctional {
        self.cycles[..k].iter().fold(self.pre, |acc, c| acc.then(*c))
    }
}

/// Split the functional of a trajectory at the entry epochs into `ci.state()`.
pub fn cycle_quantities(traj: &Trajectory, ci: &CycleIndex, fns: &StateFns) -> CycleQuantities {
    let segs = traj.segments();
    let idx = ci.entry_segments();
    let fold = |from: usize, to: usize| {
        segs[from..to]
            .iter()
            .fold(SignedLogFunctional::IDENTITY, |f, s| accumulate(f, s.state, s.duration, fns))
    };
    let pre = fold(0, idx[0]);
    let cycles = idx.windows(2).map(|w| fold(w[0], w[1])).collect();
    CycleQuantities { pre, cycles }
}

/// Estimated variance of a cycle integral, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub variance: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of `Var(int_cycle (f(Y_s) - E_pi f) ds)` over
/// `reps` independent cycles at anchor `j`.
///
/// The centring uses the exact `E_pi f`, so the cycle integral has mean
/// zero and the estimate is the mean of squares. Returns
/// `InfiniteVarianceSuspected` when the Hill index of `|integral|` sits
/// clearly below 2.
pub fn cycle_integral_variance<R: Rng + ?Sized>(
    model: &SemiMarkovModel,
    j: usize,
    f: &[f64],
    reps: usize,
    rng: &mut R,
) -> Result<VarianceEstimate> {
    model.check_state(j)?;
    if f.len() != model.num_states() {
        return Err(Error::DimensionMismatch("f must have one entry per state"));
    }
    if reps < 2 {
        return Err(Error::TooSmall { got: reps, need: 2 });
    }
    let centre = model.pi_mean(f);
    let centred: Vec<f64> = f.iter().map(|v| v - centre).collect();
    let draws: Vec<f64> = (0..reps)
        .map(|_| {
            let mut x = 0.0;
            model.run_cycle(j, rng, |s, d| x += centred[s] * d);
            x
        })
        .collect();
    let n = reps as f64;
    let sq: Vec<f64> = draws.iter().map(|x| x * x).collect();
    let variance = sq.iter().sum::<f64>() / n;
    let var_sq = sq.iter().map(|s| (s - variance) * (s - variance)).sum::<f64>() / (n - 1.0);
    let std_error = (var_sq / n).sqrt();
    if looks_infinite(&draws) {
        return Err(Error::InfiniteVarianceSuspected);
    }
    Ok(VarianceEstimate { variance, std_error })
}

fn looks_infinite(draws: &[f64]) -> bool {
    let n = draws.len();
    if n < 500 {
        return false;
    }
    let abs: Vec<f64> = draws.iter().map(|x| x.abs()).filter(|x| *x > 0.0).collect();
    let k = (abs.len() / 100).max(50);
    if k * 10 > abs.len() {
        return false;
    }
    let Ok(sample) = Sample::new(abs) else {
        return false;
    };
    match hill_index(&sample, k) {
        Ok(h) => h.alpha + 2.0 * h.std_error < 2.0,
        Err(_) => false,
    }
}
