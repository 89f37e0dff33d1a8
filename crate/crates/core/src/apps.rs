//! Regime-switching pitchfork and Ornstein-Uhlenbeck type models, evaluated
//! through their exact affine representations along a simulated
//! environment path.
//!
//! Pitchfork: `d rho / dt = rho (a(Y) - b(Y) rho^2)` gives
//! `rho_t^{-2} = rho_0^{-2} Phi_t^{(2a)} + 2 I_t^{(2a, b)}`.
//!
//! Generalized OU: with `h' = 1 / beta`,
//! `h(X_t) = h(x_0) Phi_t^{(a)} + sqrt(I_t^{(2a, b^2)}) N` given the path.
//!
//! Stable-noise OU: `X_t = x_0 Phi_t^{(a)} + |I_t^{(s a, b^s)}|^{1/s} S`
//! with `S` symmetric `s`-stable.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::distributions::StableParams;
use crate::error::{Error, Result};
use crate::limitlaws::{constant_a, StationaryLaw, CRITICAL_TOL};
use crate::math::log_add_exp;
use crate::perpetuity::{compute_phi_i, compute_phi_i_grid, signed_log_add, SignedLogFunctional, StateFns};
use crate::semimarkov::{SemiMarkovModel, Trajectory};
use crate::sre::{kesten_exponent_auto, CyclePair, KestenRoot};

const HALF_PI: f64 = core::f64::consts::FRAC_PI_2;

/// Cap on consecutive redraws of the Gaussian factor.
const MAX_REDRAWS: usize = 1_000_000;

/// Monotone change of variables `h` with `h' = 1 / beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HTransform {
    /// `h(x) = x`, `beta = 1`.
    Identity,
    /// `h = arctan`, `beta(x) = x^2 + 1`; range `(-pi/2, pi/2)`.
    Arctan,
    /// `h = exp`, `beta(x) = e^{-x}`; range `(0, inf)`.
    Exp,
}

impl HTransform {
    pub fn h(self, x: f64) -> f64 {
        match self {
            HTransform::Identity => x,
            HTransform::Arctan => x.atan(),
            HTransform::Exp => x.exp(),
        }
    }

    pub fn in_range(self, y: f64) -> bool {
        match self {
            HTransform::Identity => y.is_finite(),
            HTransform::Arctan => y.abs() < HALF_PI,
            HTransform::Exp => y > 0.0 && y.is_finite(),
        }
    }

    pub fn h_inv(self, y: f64) -> Result<f64> {
        if !self.in_range(y) {
            return Err(Error::DomainError(y));
        }
        Ok(match self {
            HTransform::Identity => y,
            HTransform::Arctan => y.tan(),
            HTransform::Exp => y.ln(),
        })
    }

    pub fn beta(self, x: f64) -> f64 {
        match self {
            HTransform::Identity => 1.0,
            HTransform::Arctan => x * x + 1.0,
            HTransform::Exp => (-x).exp(),
        }
    }

    pub fn beta_prime(self, x: f64) -> f64 {
        match self {
            HTransform::Identity => 0.0,
            HTransform::Arctan => 2.0 * x,
            HTransform::Exp => -(-x).exp(),
        }
    }
}

fn check_positive_b(fns: &StateFns) -> Result<()> {
    match fns.b().iter().position(|b| !(*b > 0.0)) {
        Some(state) => Err(Error::NonPositiveB { state }),
        None => Ok(()),
    }
}

fn check_nonnegative_b(fns: &StateFns) -> Result<()> {
    match fns.b().iter().position(|b| !(*b >= 0.0)) {
        Some(state) => Err(Error::NegativeB { state }),
        None => Ok(()),
    }
}

/// `rho_t^2` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchforkState {
    pub rho0: f64,
    pub times: Vec<f64>,
    pub rho_sq: Vec<f64>,
}

/// `log rho_t^{-2}` from the `(2a, b)` functional.
fn log_inv_rho_sq(rho0: f64, f: &SignedLogFunctional) -> f64 {
    let from_start = -2.0 * rho0.ln() + f.log_phi;
    if f.i_sign > 0 {
        log_add_exp(from_start, core::f64::consts::LN_2 + f.log_abs_i)
    } else {
        from_start
    }
}

/// Pitchfork path along a stored environment path.
pub fn pitchfork_on_path(traj: &Trajectory, fns: &StateFns, rho0: f64, times: &[f64]) -> Result<PitchforkState> {
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::InvalidParameter("rho0 must be positive"));
    }
    check_positive_b(fns)?;
    let doubled = fns.scale_a(2.0);
    let fs = compute_phi_i_grid(traj, &doubled, times)?;
    let rho_sq = fs.iter().map(|f| (-log_inv_rho_sq(rho0, f)).exp()).collect();
    Ok(PitchforkState { rho0, times: times.to_vec(), rho_sq })
}

/// Simulate one environment path and evaluate the pitchfork on `times`.
pub fn pitchfork_path<R: Rng + ?Sized>(
    model: &SemiMarkovModel,
    fns: &StateFns,
    rho0: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<PitchforkState> {
    fns.check(model)?;
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let traj = model.simulate(horizon, rng);
    pitchfork_on_path(&traj, fns, rho0, times)
}

/// Stationary law of `rho^2` when `E_pi a > 0`: `1 / (2 Z)` with `Z` the
/// stationary perpetuity for `(2a, b)`.
#[derive(Debug, Clone)]
pub struct PitchforkStationary<'m> {
    law: StationaryLaw<'m>,
}

impl<'m> PitchforkStationary<'m> {
    pub fn new(model: &'m SemiMarkovModel, fns: &StateFns) -> Result<Self> {
        check_positive_b(fns)?;
        Ok(PitchforkStationary { law: StationaryLaw::new(model, &fns.scale_a(2.0))? })
    }

    /// `rho^{-2}` at stationarity.
    pub fn sample_inverse(&self, rng: &mut dyn RngCore) -> Result<f64> {
        Ok(2.0 * self.law.sample(rng)?.value)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<f64> {
        Ok(1.0 / self.sample_inverse(rng)?)
    }
}

/// Small-ball exponent of the stationary `rho^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallBall {
    pub nu: f64,
    pub per_state: Vec<KestenRoot>,
}

/// `nu* = min_j nu_j` with `E[exp(-nu_j int_cycle 2a)] = 1` at anchor `j`.
pub fn smallball_exponent(model: &SemiMarkovModel, fns: &StateFns, reps: usize, rng: &mut dyn RngCore) -> Result<SmallBall> {
    fns.check(model)?;
    if fns.a().iter().all(|a| *a >= 0.0) {
        return Err(Error::NoSignChange);
    }
    let mean_a = model.pi_mean(fns.a());
    if !(mean_a > 0.0) {
        return Err(Error::NotStable(mean_a));
    }
    let doubled = fns.scale_a(2.0);
    let per_state = (0..model.num_states())
        .map(|j| kesten_exponent_auto(&CyclePair::new(model, &doubled, j)?, reps, rng))
        .collect::<Result<Vec<_>>>()?;
    let nu = per_state.iter().map(|r| r.nu).fold(f64::INFINITY, f64::min);
    Ok(SmallBall { nu, per_state })
}

/// `eps^{-nu} P[rho^2 < eps]` estimated from stationary samples.
pub fn smallball_ratio(rho_sq: &[f64], eps: f64, nu: f64) -> f64 {
    let below = rho_sq.iter().filter(|r| **r < eps).count();
    eps.powf(-nu) * below as f64 / rho_sq.len() as f64
}

/// A transformed draw and the number of rejected Gaussian factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GouDraw {
    pub value: f64,
    pub rejections: usize,
}

/// Draw `h^{-1}(centre + spread N)`, redrawing `N` while the argument is
/// outside the range of `h`.
fn transformed_gaussian(h: HTransform, centre: f64, spread: f64, rng: &mut dyn RngCore) -> Result<GouDraw> {
    let mut y = centre;
    for rejections in 0..MAX_REDRAWS {
        let z: f64 = rng.sample(StandardNormal);
        y = centre + spread * z;
        if h.in_range(y) {
            return Ok(GouDraw { value: h.h_inv(y)?, rejections });
        }
    }
    Err(Error::DomainError(y))
}

/// `(Phi_t^{(a)}, I_t^{(2a, b^2)})` along a stored path.
fn gou_functionals(traj: &Trajectory, fns: &StateFns, t: f64) -> Result<(SignedLogFunctional, SignedLogFunctional)> {
    let drift = compute_phi_i(traj, fns, t)?;
    let noise = compute_phi_i(traj, &fns.scale_a(2.0).map_b(|b| b * b), t)?;
    Ok((drift, noise))
}

/// `X_t` of the generalized OU model given a stored environment path.
pub fn gou_on_path(traj: &Trajectory, fns: &StateFns, h: HTransform, x0: f64, t: f64, rng: &mut dyn RngCore) -> Result<GouDraw> {
    let (drift, noise) = gou_functionals(traj, fns, t)?;
    let centre = h.h(x0) * drift.phi();
    transformed_gaussian(h, centre, noise.i().max(0.0).sqrt(), rng)
}

/// Simulate one environment path and draw `X_t`.
pub fn gou_sample(
    model: &SemiMarkovModel,
    fns: &StateFns,
    h: HTransform,
    x0: f64,
    t: f64,
    rng: &mut dyn RngCore,
) -> Result<GouDraw> {
    fns.check(model)?;
    if !h.in_range(h.h(x0)) {
        return Err(Error::DomainError(x0));
    }
    let traj = model.simulate(t, rng);
    gou_on_path(&traj, fns, h, x0, t, rng)
}

/// Stationary law of the generalized OU model: `h^{-1}(sqrt(Z) N)` with
/// `Z` the stationary perpetuity for `(2a, b^2)`.
#[derive(Debug, Clone)]
pub struct GouStationary<'m> {
    law: StationaryLaw<'m>,
    h: HTransform,
}

impl<'m> GouStationary<'m> {
    pub fn new(model: &'m SemiMarkovModel, fns: &StateFns, h: HTransform) -> Result<Self> {
        let law = StationaryLaw::new(model, &fns.scale_a(2.0).map_b(|b| b * b))?;
        Ok(GouStationary { law, h })
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<GouDraw> {
        let z = self.law.sample(rng)?.value;
        transformed_gaussian(self.h, 0.0, z.max(0.0).sqrt(), rng)
    }
}

fn check_stable_index(alpha: f64) -> Result<StableParams> {
    StableParams::standard(alpha, 0.0).map_err(|_| Error::UnsupportedAlpha(alpha))
}

/// `X_t` of the stable-noise OU model given a stored environment path.
pub fn stable_ou_on_path(traj: &Trajectory, fns: &StateFns, alpha: f64, x0: f64, t: f64, rng: &mut dyn RngCore) -> Result<f64> {
    let noise_law = check_stable_index(alpha)?;
    check_nonnegative_b(fns)?;
    let drift = compute_phi_i(traj, fns, t)?;
    let noise = compute_phi_i(traj, &fns.scale_a(alpha).map_b(|b| b.powf(alpha)), t)?;
    let spread = if noise.i_sign == 0 { 0.0 } else { (noise.log_abs_i / alpha).exp() };
    Ok(x0 * drift.phi() + spread * noise_law.sample(rng))
}

/// Simulate one environment path and draw `X_t` of the stable-noise model.
pub fn stable_ou_sample(
    model: &SemiMarkovModel,
    fns: &StateFns,
    alpha: f64,
    x0: f64,
    t: f64,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    fns.check(model)?;
    check_stable_index(alpha)?;
    let traj = model.simulate(t, rng);
    stable_ou_on_path(&traj, fns, alpha, x0, t, rng)
}

/// Stationary law of the stable-noise OU model: `|Z|^{1/s} S` with `Z` the
/// stationary perpetuity for `(s a, b^s)`.
#[derive(Debug, Clone)]
pub struct StableOuStationary<'m> {
    law: StationaryLaw<'m>,
    alpha: f64,
    noise: StableParams,
}

impl<'m> StableOuStationary<'m> {
    pub fn new(model: &'m SemiMarkovModel, fns: &StateFns, alpha: f64) -> Result<Self> {
        let noise = check_stable_index(alpha)?;
        check_nonnegative_b(fns)?;
        let law = StationaryLaw::new(model, &fns.scale_a(alpha).map_b(|b| b.powf(alpha)))?;
        Ok(StableOuStationary { law, alpha, noise })
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<f64> {
        let z = self.law.sample(rng)?.value;
        Ok(z.abs().powf(1.0 / self.alpha) * self.noise.sample(rng))
    }
}

/// Model whose divergent behaviour is being summarized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Application {
    Pitchfork { rho0: f64 },
    Ou { h: HTransform, x0: f64 },
}

/// Scaling regime of a divergence statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceCase {
    /// `E_pi a < 0`, finite cycle variance: centred and scaled by `sqrt t`.
    GaussianDivergent,
    /// `E_pi a = 0`, finite cycle variance: scaled by `sqrt t`.
    GaussianCritical,
    /// `E_pi a < 0`, heavy tails of index `alpha`: centred, scaled by `t^{1/alpha}`.
    StableDivergent { alpha: f64 },
    /// `E_pi a = 0`, heavy tails of index `alpha`: scaled by `t^{1/alpha}`.
    StableCritical { alpha: f64 },
    /// Constant `a < 0`: `e^{2at} rho_t^{-2}` or `e^{at} h(X_t)`.
    ConstantNegative,
    /// `a = 0`: `rho_t^{-2} / t` or `h(X_t) / sqrt t`.
    ConstantZero,
}

fn check_case(model: &SemiMarkovModel, fns: &StateFns, case: DivergenceCase) -> Result<()> {
    let mean_a = model.pi_mean(fns.a());
    match case {
        DivergenceCase::GaussianDivergent | DivergenceCase::StableDivergent { .. } if !(mean_a < 0.0) => {
            Err(Error::CaseMismatch("divergent case needs E_pi a < 0"))
        }
        DivergenceCase::GaussianCritical | DivergenceCase::StableCritical { .. } if mean_a.abs() > CRITICAL_TOL => {
            Err(Error::CaseMismatch("critical case needs E_pi a = 0"))
        }
        DivergenceCase::StableDivergent { alpha } | DivergenceCase::StableCritical { alpha } if !(alpha > 1.0 && alpha < 2.0) => {
            Err(Error::UnsupportedAlpha(alpha))
        }
        DivergenceCase::ConstantNegative => match constant_a(fns) {
            Ok(a) if a < 0.0 => Ok(()),
            _ => Err(Error::CaseMismatch("needs a constant negative a")),
        },
        DivergenceCase::ConstantZero => match constant_a(fns) {
            Ok(a) if a == 0.0 => Ok(()),
            _ => Err(Error::CaseMismatch("needs a identically zero")),
        },
        _ => Ok(()),
    }
}

/// Scaled statistic of a divergent model at time `t` along a stored path.
///
/// `h(X_t)` is taken from its affine-Gaussian representation, so the
/// statistic is defined even when the value leaves the range of `h`.
pub fn divergence_on_path(
    model: &SemiMarkovModel,
    traj: &Trajectory,
    fns: &StateFns,
    app: Application,
    case: DivergenceCase,
    t: f64,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    fns.check(model)?;
    check_case(model, fns, case)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("t must be positive"));
    }
    let mean_a = model.pi_mean(fns.a());
    // log |y| and its sign, where y is rho_t^{-2} or h(X_t).
    let (sign, log_abs) = match app {
        Application::Pitchfork { rho0 } => {
            if !(rho0 > 0.0) {
                return Err(Error::InvalidParameter("rho0 must be positive"));
            }
            check_positive_b(fns)?;
            let f = compute_phi_i(traj, &fns.scale_a(2.0), t)?;
            (1i8, log_inv_rho_sq(rho0, &f))
        }
        Application::Ou { h, x0 } => {
            let (drift, noise) = gou_functionals(traj, fns, t)?;
            let hx0 = h.h(x0);
            let start = if hx0 == 0.0 { (0, f64::NEG_INFINITY) } else { (sign_of(hx0), hx0.abs().ln() + drift.log_phi) };
            let z: f64 = rng.sample(StandardNormal);
            let kick = if noise.i_sign <= 0 || z == 0.0 { (0, f64::NEG_INFINITY) } else { (sign_of(z), 0.5 * noise.log_abs_i + z.abs().ln()) };
            signed_log_add(start, kick)
        }
    };
    // The pitchfork statistics use 2a throughout.
    let k = match app {
        Application::Pitchfork { .. } => 2.0,
        Application::Ou { .. } => 1.0,
    };
    let value = match case {
        DivergenceCase::GaussianDivergent => (log_abs + k * t * mean_a) / t.sqrt(),
        DivergenceCase::GaussianCritical => log_abs / t.sqrt(),
        DivergenceCase::StableDivergent { alpha } => (log_abs + k * t * mean_a) / t.powf(1.0 / alpha),
        DivergenceCase::StableCritical { alpha } => log_abs / t.powf(1.0 / alpha),
        DivergenceCase::ConstantNegative => {
            let a = constant_a(fns)?;
            f64::from(sign) * (log_abs + k * a * t).exp()
        }
        DivergenceCase::ConstantZero => {
            let scale = match app {
                Application::Pitchfork { .. } => t.ln(),
                Application::Ou { .. } => 0.5 * t.ln(),
            };
            f64::from(sign) * (log_abs - scale).exp()
        }
    };
    Ok(value)
}

/// Simulate one path and return its divergence statistic.
pub fn divergence_transform(
    model: &SemiMarkovModel,
    fns: &StateFns,
    app: Application,
    case: DivergenceCase,
    t: f64,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    fns.check(model)?;
    check_case(model, fns, case)?;
    let traj = model.simulate(t, rng);
    divergence_on_path(model, &traj, fns, app, case, t, rng)
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
