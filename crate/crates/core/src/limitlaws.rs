//! Reference laws for the long-time limits of `(log Phi_t, log |I_t|)` and
//! `I_t`. Every law is a mixture over the environment state `U ~ pi`: draw
//! `U`, then draw the `U`-th component.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::distributions::{brownian_max_pair_sample, Family, StableParams, StablePathSampler};
use crate::error::{Error, Result};
use crate::perpetuity::{cycle_integral_variance, g_fun, StateFns};
use crate::semimarkov::SemiMarkovModel;
use crate::sre::{check_conditions, stationary_sample, CyclePair, ForwardCyclePair, SreDiagnostics, DEFAULT_TOL};

/// Tolerance on `|E_pi a|` for the critical case.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Which limit a mixture law describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitTag {
    /// Stationary law of `I_t` when `E_pi a > 0`.
    Stable,
    /// Gaussian fluctuations of the log functionals when `E_pi a < 0`.
    GaussianDivergent,
    /// Brownian endpoint and maximum when `E_pi a = 0`.
    GaussianCritical,
    /// Stable fluctuations when `E_pi a < 0` and sojourns are heavy-tailed.
    StableDivergent,
    /// Stable endpoint and supremum when `E_pi a = 0`.
    StableCritical,
    /// `e^{at} I_t` for constant `a < 0`.
    ConstantNegative,
    /// `I_t / t` for `a = 0`.
    ConstantZero,
}

/// One draw of a mixture law together with the mixing component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureDraw<T> {
    pub component: usize,
    pub value: T,
}

/// Stationary law of `I_t` when `E_pi a > 0`: component `j` is
/// `g(a_j, b_j, T) + e^{-a_j T} V_j` with `T ~ pi*_j` and `V_j` the fixed
/// point of the cycle pair at anchor `j`.
#[derive(Debug, Clone)]
pub struct StationaryLaw<'m> {
    model: &'m SemiMarkovModel,
    fns: StateFns,
    pairs: Vec<CyclePair<'m>>,
    tol: f64,
}

impl<'m> StationaryLaw<'m> {
    pub fn new(model: &'m SemiMarkovModel, fns: &StateFns) -> Result<Self> {
        fns.check(model)?;
        let mean_a = model.pi_mean(fns.a());
        if !(mean_a > 0.0) {
            return Err(Error::NotStable(mean_a));
        }
        let pairs = (0..model.num_states())
            .map(|j| CyclePair::new(model, fns, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(StationaryLaw { model, fns: fns.clone(), pairs, tol: DEFAULT_TOL })
    }

    /// Truncation level passed to the backward-series sampler.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tag(&self) -> LimitTag {
        LimitTag::Stable
    }

    /// Monte Carlo check of `E log L < 0` and `E log+ |Q| < inf` for the
    /// cycle pair at each anchor.
    pub fn diagnostics(&self, reps: usize, rng: &mut dyn RngCore) -> Result<Vec<SreDiagnostics>> {
        self.pairs.iter().map(|p| check_conditions(p, reps, rng)).collect()
    }

    /// Component `j` of the mixture.
    pub fn sample_component(&self, j: usize, rng: &mut dyn RngCore) -> Result<f64> {
        self.model.check_state(j)?;
        let t = self.model.pi_star_sample(j, rng);
        let v = stationary_sample(&self.pairs[j], self.tol, rng)?;
        let (a, b) = (self.fns.a()[j], self.fns.b()[j]);
        let carried = if v == 0.0 { 0.0 } else { (-a * t).exp() * v };
        Ok(g_fun(a, b, t) + carried)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<MixtureDraw<f64>> {
        let j = self.model.sample_pi(rng);
        Ok(MixtureDraw { component: j, value: self.sample_component(j, rng)? })
    }
}

/// Per-state scales `sigma_j / sqrt(E |cycle_j|)`, with `sigma_j^2` the
/// variance of `int_cycle (a - E_pi a)`.
fn gaussian_scales(model: &SemiMarkovModel, fns: &StateFns, reps: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    (0..model.num_states())
        .map(|j| {
            let v = cycle_integral_variance(model, j, fns.a(), reps, rng)?;
            Ok((v.variance / model.mean_cycle_length(j)).sqrt())
        })
        .collect()
}

fn check_scales(model: &SemiMarkovModel, scales: &[f64]) -> Result<()> {
    if scales.len() != model.num_states() {
        return Err(Error::DimensionMismatch("one scale per state"));
    }
    if scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidParameter("scales must be finite and non-negative"));
    }
    Ok(())
}

/// Limit of `((log Phi_t + t E_pi a) / sqrt t, (log |I_t| + t E_pi a) / sqrt t)`
/// when `E_pi a < 0`: component `j` is `scale_j (N, N)`.
#[derive(Debug, Clone)]
pub struct GaussianDivergentLaw<'m> {
    model: &'m SemiMarkovModel,
    scales: Vec<f64>,
}

impl<'m> GaussianDivergentLaw<'m> {
    /// Estimate the scales from `reps` simulated cycles per state.
    pub fn new(model: &'m SemiMarkovModel, fns: &StateFns, reps: usize, rng: &mut dyn RngCore) -> Result<Self> {
        fns.check(model)?;
        let mean_a = model.pi_mean(fns.a());
        if !(mean_a < 0.0) {
            return Err(Error::NotDivergent(mean_a));
        }
        let scales = gaussian_scales(model, fns, reps, rng)?;
        Ok(GaussianDivergentLaw { model, scales })
    }

    pub fn from_scales(model: &'m SemiMarkovModel, scales: Vec<f64>) -> Result<Self> {
        check_scales(model, &scales)?;
        Ok(GaussianDivergentLaw { model, scales })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn tag(&self) -> LimitTag {
        LimitTag::GaussianDivergent
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> MixtureDraw<(f64, f64)> {
        let j = self.model.sample_pi(rng);
        let z: f64 = rng.sample(StandardNormal);
        let x = self.scales[j] * z;
        MixtureDraw { component: j, value: (x, x) }
    }
}

/// Limit of `(log Phi_t / sqrt t, log |I_t| / sqrt t)` when `E_pi a = 0`:
/// component `j` is `scale_j (B_1, max_{s<=1} B_s)`.
#[derive(Debug, Clone)]
pub struct GaussianCriticalLaw<'m> {
    model: &'m SemiMarkovModel,
    scales: Vec<f64>,
}

impl<'m> GaussianCriticalLaw<'m> {
    pub fn new(model: &'m SemiMarkovModel, fns: &StateFns, reps: usize, rng: &mut dyn RngCore) -> Result<Self> {
        check_critical(model, fns)?;
        let scales = gaussian_scales(model, fns, reps, rng)?;
        Ok(GaussianCriticalLaw { model, scales })
    }

    pub fn from_scales(model: &'m SemiMarkovModel, scales: Vec<f64>) -> Result<Self> {
        check_scales(model, &scales)?;
        Ok(GaussianCriticalLaw { model, scales })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn tag(&self) -> LimitTag {
        LimitTag::GaussianCritical
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> MixtureDraw<(f64, f64)> {
        let j = self.model.sample_pi(rng);
        let (f1, f2) = brownian_max_pair_sample(rng);
        let s = self.scales[j];
        MixtureDraw { component: j, value: (s * f1, s * f2) }
    }
}

fn check_critical(model: &SemiMarkovModel, fns: &StateFns) -> Result<()> {
    fns.check(model)?;
    let mean_a = model.pi_mean(fns.a());
    if mean_a.abs() > CRITICAL_TOL {
        return Err(Error::NotCritical(mean_a));
    }
    if fns.b().iter().all(|b| *b == 0.0) {
        return Err(Error::ZeroB);
    }
    Ok(())
}

/// Closed-form parameters of the stable limits.
///
/// With `c(i) = a(i) - E_pi a`, a heavy transition `(i, l)` has a Pareto
/// sojourn law of the minimal shape `alpha` and `c(i) != 0`; its tail
/// constant is `scale^alpha`. For anchor `j`,
/// `alpha_plus_j = (1 / mu_j) sum_{c(i) > 0} mu_i P_il c_il c(i)^alpha`,
/// `alpha_minus_j` likewise over `c(i) < 0` with `|c(i)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct StableCaseParams {
    pub alpha: f64,
    pub mean_a: f64,
    pub sigma: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha_plus: Vec<f64>,
    pub alpha_minus: Vec<f64>,
    /// Heavy transitions from states with `c(i) > 0`.
    pub heavy_plus: Vec<(usize, usize)>,
    /// Heavy transitions from states with `c(i) < 0`.
    pub heavy_minus: Vec<(usize, usize)>,
    /// `((i, l), c_il)` for every heavy transition.
    pub tail_constants: Vec<((usize, usize), f64)>,
}

/// Classify the transitions and assemble `(sigma_j, beta_j)`.
pub fn stable_case_params(model: &SemiMarkovModel, fns: &StateFns) -> Result<StableCaseParams> {
    fns.check(model)?;
    let mean_a = model.pi_mean(fns.a());
    let centred: Vec<f64> = fns.a().iter().map(|a| a - mean_a).collect();
    let alpha = model
        .transitions()
        .filter(|(i, _, _, _)| centred[*i] != 0.0)
        .filter_map(|(_, _, _, law)| match law.family() {
            Family::Pareto { shape, .. } => Some(shape),
            _ => None,
        })
        .fold(f64::INFINITY, f64::min);
    if alpha == f64::INFINITY {
        return Err(Error::EmptyHeavySet);
    }
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::UnsupportedAlpha(alpha));
    }
    let mu = model.stationary_embedded();
    let mut heavy_plus = Vec::new();
    let mut heavy_minus = Vec::new();
    let mut tail_constants = Vec::new();
    let (mut plus, mut minus) = (0.0, 0.0);
    for (i, l, p, law) in model.transitions() {
        let Family::Pareto { shape, scale } = law.family() else { continue };
        if shape != alpha || centred[i] == 0.0 {
            continue;
        }
        let c = scale.powf(alpha);
        let w = mu[i] * p * c * centred[i].abs().powf(alpha);
        if centred[i] > 0.0 {
            heavy_plus.push((i, l));
            plus += w;
        } else {
            heavy_minus.push((i, l));
            minus += w;
        }
        tail_constants.push(((i, l), c));
    }
    let n = model.num_states();
    let alpha_plus: Vec<f64> = (0..n).map(|j| plus / mu[j]).collect();
    let alpha_minus: Vec<f64> = (0..n).map(|j| minus / mu[j]).collect();
    let sigma = (0..n).map(|j| (alpha_plus[j] + alpha_minus[j]).powf(1.0 / alpha)).collect();
    let beta = (0..n).map(|j| (alpha_minus[j] - alpha_plus[j]) / (alpha_plus[j] + alpha_minus[j])).collect();
    Ok(StableCaseParams {
        alpha,
        mean_a,
        sigma,
        beta,
        alpha_plus,
        alpha_minus,
        heavy_plus,
        heavy_minus,
        tail_constants,
    })
}

fn stable_scales(model: &SemiMarkovModel, params: &StableCaseParams) -> Result<Vec<f64>> {
    if params.sigma.len() != model.num_states() || params.beta.len() != model.num_states() {
        return Err(Error::DimensionMismatch("stable parameters need one entry per state"));
    }
    Ok((0..model.num_states())
        .map(|j| params.sigma[j] * (1.0 / model.mean_cycle_length(j)).powf(1.0 / params.alpha))
        .collect())
}

/// Stable limit when `E_pi a < 0`: component `j` is
/// `scale_j S_alpha(1, beta_j, 0)` in both coordinates.
#[derive(Debug, Clone)]
pub struct StableDivergentLaw<'m> {
    model: &'m SemiMarkovModel,
    components: Vec<StableParams>,
}

impl<'m> StableDivergentLaw<'m> {
    pub fn new(model: &'m SemiMarkovModel, params: &StableCaseParams) -> Result<Self> {
        let scales = stable_scales(model, params)?;
        let components = scales
            .iter()
            .zip(&params.beta)
            .map(|(s, b)| StableParams::new(params.alpha, *s, *b, 0.0))
            .collect::<Result<Vec<_>>>()?;
        Ok(StableDivergentLaw { model, components })
    }

    pub fn components(&self) -> &[StableParams] {
        &self.components
    }

    pub fn tag(&self) -> LimitTag {
        LimitTag::StableDivergent
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> MixtureDraw<(f64, f64)> {
        let j = self.model.sample_pi(rng);
        let x = self.components[j].sample(rng);
        MixtureDraw { component: j, value: (x, x) }
    }
}

/// Stable limit when `E_pi a = 0`: component `j` is
/// `scale_j (S(1), sup_{u<=1} S(u))` for a stable motion with skewness
/// `beta_j`, approximated on a grid of `steps` increments.
#[derive(Debug, Clone)]
pub struct StableCriticalLaw<'m> {
    model: &'m SemiMarkovModel,
    scales: Vec<f64>,
    paths: Vec<StablePathSampler>,
}

impl<'m> StableCriticalLaw<'m> {
    pub fn new(model: &'m SemiMarkovModel, params: &StableCaseParams, steps: usize) -> Result<Self> {
        if params.mean_a.abs() > CRITICAL_TOL {
            return Err(Error::NotCritical(params.mean_a));
        }
        let scales = stable_scales(model, params)?;
        let paths = params
            .beta
            .iter()
            .map(|b| StablePathSampler::new(params.alpha, *b, steps))
            .collect::<Result<Vec<_>>>()?;
        Ok(StableCriticalLaw { model, scales, paths })
    }

    pub fn tag(&self) -> LimitTag {
        LimitTag::StableCritical
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> MixtureDraw<(f64, f64)> {
        let j = self.model.sample_pi(rng);
        let (end, max) = self.paths[j].sample(rng);
        let s = self.scales[j];
        MixtureDraw { component: j, value: (s * end, s * max) }
    }
}

/// Constant value of `a(.)`, or `NotConstantA`.
pub fn constant_a(fns: &StateFns) -> Result<f64> {
    let a = fns.a();
    let first = a.first().copied().ok_or(Error::DimensionMismatch("no states"))?;
    if a.iter().any(|v| *v != first) {
        return Err(Error::NotConstantA);
    }
    Ok(first)
}

/// Limit of `e^{at} I_t` for constant `a < 0`: component `j` is
/// `int_0^{tau_j} b(Y_s) e^{as} ds + e^{a tau_j} V_j`, where `tau_j` is the
/// first hit of `j` from the model's initial law and `V_j` is the fixed
/// point of the forward cycle pair at `j`.
#[derive(Debug, Clone)]
pub struct ConstantNegativeLaw<'m> {
    model: &'m SemiMarkovModel,
    a: f64,
    b: Vec<f64>,
    pairs: Vec<ForwardCyclePair<'m>>,
}

impl<'m> ConstantNegativeLaw<'m> {
    pub fn new(model: &'m SemiMarkovModel, fns: &StateFns) -> Result<Self> {
        fns.check(model)?;
        let a = constant_a(fns)?;
        if !(a < 0.0) {
            return Err(Error::NotDivergent(a));
        }
        let pairs = (0..model.num_states())
            .map(|j| CyclePair::new(model, fns, j).map(ForwardCyclePair))
            .collect::<Result<Vec<_>>>()?;
        Ok(ConstantNegativeLaw { model, a, b: fns.b().to_vec(), pairs })
    }

    pub fn tag(&self) -> LimitTag {
        LimitTag::ConstantNegative
    }

    /// Component `j`, with the pre-cycle piece started from `start`.
    pub fn sample_component_from(&self, start: usize, j: usize, rng: &mut dyn RngCore) -> Result<f64> {
        self.model.check_state(start)?;
        self.model.check_state(j)?;
        let a = self.a;
        let mut pre = 0.0;
        let mut now = 0.0;
        let tau = self.model.run_until_hit(start, j, rng, |s, d| {
            pre += self.b[s] * (a * now).exp() * g_fun(-a, 1.0, d);
            now += d;
        });
        let v = stationary_sample(&self.pairs[j], DEFAULT_TOL, rng)?;
        Ok(pre + (a * tau).exp() * v)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<MixtureDraw<f64>> {
        let j = self.model.sample_pi(rng);
        let start = self.model.sample_initial(rng);
        Ok(MixtureDraw { component: j, value: self.sample_component_from(start, j, rng)? })
    }
}

/// Centring and fluctuation scale of `I_t` when `a = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroDriftSummary {
    /// `E_pi b`, the limit of `I_t / t`.
    pub mean_b: f64,
    /// Scale of `(I_t - t E_pi b) / sqrt t`; `None` when the cycle
    /// variance of `b` looks infinite.
    pub clt_scale: Option<f64>,
    pub anchor: usize,
}

/// `E_pi b` and the CLT scale `sigma_b / sqrt(E |cycle|)` at the most
/// likely state, for `a = 0`.
pub fn zero_drift_summary(model: &SemiMarkovModel, fns: &StateFns, reps: usize, rng: &mut dyn RngCore) -> Result<ZeroDriftSummary> {
    fns.check(model)?;
    let a = constant_a(fns)?;
    if a != 0.0 {
        return Err(Error::NotCritical(a));
    }
    let anchor = model.most_likely_state();
    let mean_b = model.pi_mean(fns.b());
    let clt_scale = match cycle_integral_variance(model, anchor, fns.b(), reps, rng) {
        Ok(v) => Some((v.variance / model.mean_cycle_length(anchor)).sqrt()),
        Err(Error::InfiniteVarianceSuspected) => None,
        Err(e) => return Err(e),
    };
    Ok(ZeroDriftSummary { mean_b, clt_scale, anchor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SojournLaw;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn swap(l0: SojournLaw, l1: SojournLaw) -> SemiMarkovModel {
        SemiMarkovModel::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![None, Some(l0)], vec![Some(l1), None]],
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    fn exp_swap() -> SemiMarkovModel {
        swap(SojournLaw::exponential(1.0).unwrap(), SojournLaw::exponential(2.0).unwrap())
    }

    #[test]
    fn zero_b_gives_zero_stationary_law() {
        let m = exp_swap();
        let fns = StateFns::new(vec![1.0, 0.5], vec![0.0, 0.0]).unwrap();
        let law = StationaryLaw::new(&m, &fns).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(law.sample(&mut rng).unwrap().value, 0.0);
        }
    }

    #[test]
    fn constant_coefficients_give_point_mass() {
        // a = 2, b = 3 in every state: I_t -> b / a.
        let m = exp_swap();
        let fns = StateFns::new(vec![2.0, 2.0], vec![3.0, 3.0]).unwrap();
        let law = StationaryLaw::new(&m, &fns).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            assert!((law.sample(&mut rng).unwrap().value - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn regime_checks() {
        let m = exp_swap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let neg = StateFns::new(vec![-1.0, 0.5], vec![1.0, 1.0]).unwrap();
        assert!(matches!(StationaryLaw::new(&m, &neg), Err(Error::NotStable(_))));
        let pos = StateFns::new(vec![1.0, 0.5], vec![1.0, 1.0]).unwrap();
        assert!(matches!(GaussianDivergentLaw::new(&m, &pos, 100, &mut rng), Err(Error::NotDivergent(_))));
        assert!(matches!(GaussianCriticalLaw::new(&m, &pos, 100, &mut rng), Err(Error::NotCritical(_))));
        // pi = (2/3, 1/3): a = (1, -2) is critical.
        let zero_b = StateFns::new(vec![1.0, -2.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(GaussianCriticalLaw::new(&m, &zero_b, 100, &mut rng).err(), Some(Error::ZeroB));
        assert_eq!(ConstantNegativeLaw::new(&m, &pos).err(), Some(Error::NotConstantA));
    }

    #[test]
    fn gaussian_divergent_coordinates_coincide() {
        let m = exp_swap();
        let law = GaussianDivergentLaw::from_scales(&m, vec![1.0, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let d = law.sample(&mut rng);
            assert_eq!(d.value.0, d.value.1);
        }
    }

    #[test]
    fn mixing_frequencies_follow_pi() {
        let m = exp_swap();
        let law = GaussianCriticalLaw::from_scales(&m, vec![1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let mut hits = 0;
        for _ in 0..n {
            let d = law.sample(&mut rng);
            assert!(d.value.1 >= 0.0 && d.value.1 >= d.value.0);
            hits += usize::from(d.component == 0);
        }
        let p = 2.0 / 3.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 3.0 * se);
    }

    fn heavy_swap() -> SemiMarkovModel {
        swap(SojournLaw::pareto(1.5, 0.5).unwrap(), SojournLaw::uniform(0.5, 1.5).unwrap())
    }

    #[test]
    fn stable_params_sign_conventions() {
        let m = heavy_swap();
        // Heavy state 0 has a(0) above the mean: only the plus set is used.
        let fns = StateFns::new(vec![1.0, -3.0], vec![1.0, 1.0]).unwrap();
        let p = stable_case_params(&m, &fns).unwrap();
        assert_eq!(p.alpha, 1.5);
        assert_eq!(p.heavy_plus, vec![(0, 1)]);
        assert!(p.heavy_minus.is_empty());
        assert!(p.beta.iter().all(|b| *b == -1.0));
        // Mirrored coefficients flip beta and keep sigma.
        let mirror = StateFns::new(vec![-1.0, 3.0], vec![1.0, 1.0]).unwrap();
        let q = stable_case_params(&m, &mirror).unwrap();
        assert!(q.beta.iter().all(|b| *b == 1.0));
        for j in 0..2 {
            assert!((p.sigma[j] - q.sigma[j]).abs() < 1e-14);
        }
        // By hand: mu = (1/2, 1/2), c = 0.5^1.5, centred a(0) = 1 - E_pi a.
        let mean_a = m.pi_mean(fns.a());
        let expect = 0.5 * 0.5f64.powf(1.5) * (1.0 - mean_a).powf(1.5) / 0.5;
        assert!((p.alpha_plus[0] - expect).abs() < 1e-14);
    }

    #[test]
    fn light_tails_have_no_heavy_set() {
        let m = exp_swap();
        let fns = StateFns::new(vec![1.0, -3.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(stable_case_params(&m, &fns).err(), Some(Error::EmptyHeavySet));
    }

    #[test]
    fn constant_negative_started_at_anchor_has_no_pre_cycle() {
        let m = exp_swap();
        let fns = StateFns::new(vec![-0.5, -0.5], vec![0.0, 0.0]).unwrap();
        let law = ConstantNegativeLaw::new(&m, &fns).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert_eq!(law.sample_component_from(0, 0, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn zero_drift_constant_b() {
        let m = exp_swap();
        let fns = StateFns::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = zero_drift_summary(&m, &fns, 1000, &mut rng).unwrap();
        assert!((s.mean_b - 2.0).abs() < 1e-14);
        assert!(s.clt_scale.unwrap() < 1e-12);
        let flipped = zero_drift_summary(&m, &fns.map_b(|b| -b), 1000, &mut rng).unwrap();
        assert_eq!(flipped.mean_b, -s.mean_b);
    }
}
