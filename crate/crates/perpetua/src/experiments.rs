//! One pipeline per experiment kind: simulate replications, draw from the
//! matching reference law, and compare.

use std::time::Instant;

use perpetua_core::apps::{
    divergence_transform, gou_sample, pitchfork_path, smallball_exponent, smallball_ratio, stable_ou_sample, Application,
    DivergenceCase, GouStationary, PitchforkStationary, StableOuStationary,
};
use perpetua_core::limitlaws::{
    constant_a, stable_case_params, zero_drift_summary, ConstantNegativeLaw, GaussianCriticalLaw, GaussianDivergentLaw,
    StableCriticalLaw, StableDivergentLaw, StationaryLaw,
};
use perpetua_core::perpetuity::{compute_phi_i_grid, simulate_phi_i, SignedLogFunctional, StateFns};
use perpetua_core::stats::{hill_index, ks_two_sample, levy_distance_to_zero, mean_and_se, standardize, Sample};
use perpetua_core::Error;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentKind, Validated};
use crate::error::CliError;
use crate::output::{fmt_f64, Check, ResultRecord};
use crate::runner::{replicate_settled, stream_rng, Outcomes, Purpose};

const KS_DEFAULT: f64 = 0.03;
const KS_T1_DEFAULT: f64 = 0.02;
const KS_STABLE_DEFAULT: f64 = 0.05;
const KS_MAX_DEFAULT: f64 = 0.035;
const HILL_DEFAULT: f64 = 0.2;
const HILL_RELATIVE_DEFAULT: f64 = 0.15;
const SYMMETRY_DEFAULT: f64 = 0.01;
const NU_DEFAULT: f64 = 0.01;
const RELATIVE_DEFAULT: f64 = 0.05;
const BAND_FAILURES_DEFAULT: f64 = 0.05;
const REJECTION_DEFAULT: f64 = 1e-3;
const SIGNIFICANCE_DEFAULT: f64 = 0.01;
const CRITICAL_PATH_STEPS: usize = 1024;
const EXACT_RELATIVE: f64 = 1e-10;

/// Hex SHA-256 of the configuration text.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Accumulates the pieces of a [`ResultRecord`].
struct Report {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    checks: Vec<Check>,
    estimates: Map<String, Value>,
    failed: usize,
    total: usize,
}

impl Report {
    fn new(columns: &[&str]) -> Self {
        Report {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            estimates: Map::new(),
            failed: 0,
            total: 0,
        }
    }

    fn note(&mut self, key: &str, value: Value) {
        self.estimates.insert(key.to_string(), value);
    }

    fn count<T>(&mut self, o: &Outcomes<T>) {
        self.failed += o.failed;
        self.total += o.total;
    }

    fn ks(&mut self, v: &Validated, name: &str, x: &[f64], y: &[f64], bound: f64) -> Result<(), CliError> {
        let sig = v.tol().significance.unwrap_or(SIGNIFICANCE_DEFAULT);
        let r = ks_two_sample(&Sample::new(x.to_vec())?, &Sample::new(y.to_vec())?, sig)?;
        self.note(&format!("{name}_p_value"), json!(r.p_value));
        self.checks.push(Check::at_most(name, r.statistic, bound));
        Ok(())
    }

    fn ks_standardized(&mut self, v: &Validated, name: &str, x: &[f64], y: &[f64], bound: f64) -> Result<(), CliError> {
        let sx = standardize(&Sample::new(x.to_vec())?)?;
        let sy = standardize(&Sample::new(y.to_vec())?)?;
        self.ks(v, name, sx.values(), sy.values(), bound)
    }
}

/// Run the validated experiment. `config_hash` is recorded in the summary.
pub fn run(v: &Validated, config_hash: &str) -> Result<ResultRecord, CliError> {
    let start = Instant::now();
    let report = match v.kind {
        ExperimentKind::Simulate => simulate(v)?,
        ExperimentKind::VerifyT1 => verify_stationary(v)?,
        ExperimentKind::VerifyT2a => verify_gaussian_divergent(v)?,
        ExperimentKind::VerifyT2b => verify_gaussian_critical(v)?,
        ExperimentKind::VerifyT3a => verify_stable_divergent(v)?,
        ExperimentKind::VerifyT3b => verify_stable_critical(v)?,
        ExperimentKind::VerifyT4 => verify_constant(v)?,
        ExperimentKind::Pitchfork => match v.case() {
            Some(case) => divergence(v, Application::Pitchfork { rho0: rho0(v) }, case)?,
            None => pitchfork(v)?,
        },
        ExperimentKind::PitchforkSmallball => smallball(v)?,
        ExperimentKind::Ou => match v.case() {
            Some(case) => divergence(v, Application::Ou { h: v.transform(), x0: x0(v) }, case)?,
            None => ou(v)?,
        },
        ExperimentKind::StableOu => stable_ou(v)?,
    };
    Ok(ResultRecord {
        kind: v.kind,
        seed: v.seed,
        config_hash: config_hash.to_string(),
        columns: report.columns,
        rows: report.rows,
        checks: report.checks,
        estimates: report.estimates,
        replications: report.total,
        failed_replications: report.failed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

fn rho0(v: &Validated) -> f64 {
    v.config.experiment.rho0.unwrap_or(1.0)
}

fn x0(v: &Validated) -> f64 {
    v.config.experiment.x0.unwrap_or(0.0)
}

fn sims<T, F>(v: &Validated, f: F) -> Result<Outcomes<T>, CliError>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T, Error> + Sync,
{
    replicate_settled(v.workers, v.seed, Purpose::Simulation, v.reps, |_, rng| f(rng))
}

fn refs<T, F>(v: &Validated, f: F) -> Result<Outcomes<T>, CliError>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T, Error> + Sync,
{
    replicate_settled(v.workers, v.seed, Purpose::Reference, v.reps, |_, rng| f(rng))
}

fn setup_rng(v: &Validated) -> ChaCha8Rng {
    stream_rng(v.seed, Purpose::Setup, 0)
}

fn signed_log(f: &SignedLogFunctional) -> f64 {
    f.log_abs_i
}

/// Rows `rep, simulated..., reference..., component`, pairing replication
/// `r` of each side.
fn paired_rows(report: &mut Report, sim: &Outcomes<Vec<f64>>, refs: &Outcomes<(usize, Vec<f64>)>) {
    let mut ri = refs.values.iter().peekable();
    for (r, s) in &sim.values {
        let mut row = vec![r.to_string()];
        row.extend(s.iter().map(|x| fmt_f64(*x)));
        while ri.peek().is_some_and(|(k, _)| k < r) {
            ri.next();
        }
        match ri.peek() {
            Some((k, (c, vals))) if k == r => {
                row.extend(vals.iter().map(|x| fmt_f64(*x)));
                row.push(c.to_string());
            }
            _ => {
                row.extend(std::iter::repeat_n(String::new(), report.columns.len() - row.len()));
            }
        }
        report.rows.push(row);
    }
}

fn column(o: &Outcomes<Vec<f64>>, i: usize) -> Vec<f64> {
    o.values.iter().map(|(_, v)| v[i]).collect()
}

fn ref_column(o: &Outcomes<(usize, Vec<f64>)>, i: usize) -> Vec<f64> {
    o.values.iter().map(|(_, (_, v))| v[i]).collect()
}

fn simulate(v: &Validated) -> Result<Report, CliError> {
    let horizon = v.horizon();
    let grid: Vec<f64> = match &v.config.experiment.grid {
        Some(g) => g.clone(),
        None => (0..=100).map(|k| horizon * k as f64 / 100.0).collect(),
    };
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.iter().any(|t| *t < 0.0 || *t > horizon) {
        return Err(CliError::Invalid("grid must be increasing and inside [0, horizon]".into()));
    }
    let n = v.model.num_states();
    let out = sims(v, |rng| {
        let traj = v.model.simulate(horizon, rng);
        let fs = compute_phi_i_grid(&traj, &v.fns, &grid)?;
        let states = grid.iter().map(|t| traj.state_at(*t)).collect::<Result<Vec<_>, _>>()?;
        let occupation = traj.occupation_fractions(n, horizon)?;
        Ok((states, fs, occupation))
    })?;
    let mut report = Report::new(&["rep", "t", "state", "log_phi", "sign_i", "log_abs_i"]);
    report.count(&out);
    let mut occ = vec![0.0; n];
    for (r, (states, fs, o)) in &out.values {
        for ((t, s), f) in grid.iter().zip(states).zip(fs) {
            report
                .rows
                .push(vec![r.to_string(), fmt_f64(*t), s.to_string(), fmt_f64(f.log_phi), f.i_sign.to_string(), fmt_f64(f.log_abs_i)]);
        }
        for (acc, x) in occ.iter_mut().zip(o) {
            *acc += x / out.values.len() as f64;
        }
    }
    let pi = v.model.limiting_pi();
    let err = occ.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    report.note("limiting_pi", json!(pi));
    report.note("mean_occupation", json!(occ));
    report.note("max_occupation_error", json!(err));
    report.note("mean_a", json!(v.mean_a()));
    Ok(report)
}

fn verify_stationary(v: &Validated) -> Result<Report, CliError> {
    let t = v.horizon();
    let law = StationaryLaw::new(&v.model, &v.fns)?;
    let sim = sims(v, |rng| Ok(vec![simulate_phi_i(&v.model, &v.fns, t, rng).i()]))?;
    let rf = refs(v, |rng| law.sample(rng).map(|d| (d.component, vec![d.value])))?;
    let mut report = Report::new(&["rep", "simulated_i", "reference_i", "component"]);
    report.count(&sim);
    report.count(&rf);
    paired_rows(&mut report, &sim, &rf);
    let (x, y) = (column(&sim, 0), ref_column(&rf, 0));
    report.note("simulated_mean", json!(mean_and_se(&x)));
    report.note("reference_mean", json!(mean_and_se(&y)));
    report.ks(v, "ks_i", &x, &y, v.tol().ks.unwrap_or(KS_T1_DEFAULT))?;
    Ok(report)
}

fn log_pair(f: &SignedLogFunctional) -> (f64, f64) {
    (f.log_phi, signed_log(f))
}

fn verify_gaussian_divergent(v: &Validated) -> Result<Report, CliError> {
    let t = v.horizon();
    let mean_a = v.mean_a();
    let law = GaussianDivergentLaw::new(&v.model, &v.fns, v.cycles(), &mut setup_rng(v))?;
    let sim = sims(v, |rng| {
        let (lp, li) = log_pair(&simulate_phi_i(&v.model, &v.fns, t, rng));
        let s = t.sqrt();
        Ok(vec![(lp + t * mean_a) / s, (li + t * mean_a) / s])
    })?;
    let rf = refs(v, |rng| {
        let d = law.sample(rng);
        Ok((d.component, vec![d.value.0, d.value.1]))
    })?;
    let mut report = Report::new(&["rep", "stat_phi", "stat_i", "reference_phi", "reference_i", "component"]);
    report.count(&sim);
    report.count(&rf);
    paired_rows(&mut report, &sim, &rf);
    report.note("scales", json!(law.scales()));
    let bound = v.tol().ks.unwrap_or(KS_DEFAULT);
    let (x, y, r) = (column(&sim, 0), column(&sim, 1), ref_column(&rf, 0));
    report.ks(v, "ks_phi", &x, &r, bound)?;
    report.ks(v, "ks_i", &y, &r, bound)?;
    let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
    let levy = levy_distance_to_zero(&Sample::new(diff)?);
    report.checks.push(Check::at_most("levy_difference_to_zero", levy, bound));
    Ok(report)
}

fn verify_gaussian_critical(v: &Validated) -> Result<Report, CliError> {
    let t = v.horizon();
    let law = GaussianCriticalLaw::new(&v.model, &v.fns, v.cycles(), &mut setup_rng(v))?;
    let sim = sims(v, |rng| {
        let (lp, li) = log_pair(&simulate_phi_i(&v.model, &v.fns, t, rng));
        Ok(vec![lp / t.sqrt(), li / t.sqrt()])
    })?;
    let rf = refs(v, |rng| {
        let d = law.sample(rng);
        Ok((d.component, vec![d.value.0, d.value.1]))
    })?;
    let mut report = Report::new(&["rep", "stat_phi", "stat_i", "reference_end", "reference_max", "component"]);
    report.count(&sim);
    report.count(&rf);
    paired_rows(&mut report, &sim, &rf);
    report.note("scales", json!(law.scales()));
    report.ks(v, "ks_phi", &column(&sim, 0), &ref_column(&rf, 0), v.tol().ks.unwrap_or(KS_DEFAULT))?;
    report.ks(v, "ks_i", &column(&sim, 1), &ref_column(&rf, 1), v.tol().ks_max.unwrap_or(KS_MAX_DEFAULT))?;
    Ok(report)
}

/// `q(0.9) + q(0.1) - 2 q(0.5)`.
fn quantile_skewness(x: &[f64]) -> Result<f64, CliError> {
    let s = Sample::new(x.to_vec())?;
    Ok(s.quantile(0.9) + s.quantile(0.1) - 2.0 * s.median())
}

/// Hill index of the heavier tail side: the positive part when `side > 0`,
/// otherwise the negative part.
fn tail_hill(x: &[f64], side: f64) -> Result<(f64, f64, usize), CliError> {
    let part: Vec<f64> = x.iter().map(|v| if side >= 0.0 { *v } else { -*v }).filter(|v| *v > 0.0).collect();
    let k = (x.len() / 50).min(part.len() / 10).max(50);
    let h = hill_index(&Sample::new(part)?, k)?;
    Ok((h.alpha, h.std_error, h.k))
}

fn verify_stable_divergent(v: &Validated) -> Result<Report, CliError> {
    let t = v.horizon();
    let params = stable_case_params(&v.model, &v.fns)?;
    let law = StableDivergentLaw::new(&v.model, &params)?;
    let scale = t.powf(1.0 / params.alpha);
    let mean_a = params.mean_a;
    let sim = sims(v, |rng| {
        let (lp, li) = log_pair(&simulate_phi_i(&v.model, &v.fns, t, rng));
        Ok(vec![(lp + t * mean_a) / scale, (li + t * mean_a) / scale])
    })?;
    let rf = refs(v, |rng| {
        let d = law.sample(rng);
        Ok((d.component, vec![d.value.0]))
    })?;
    let mut report = Report::new(&["rep", "stat_phi", "stat_i", "reference", "component"]);
    report.count(&sim);
    report.count(&rf);
    paired_rows(&mut report, &sim, &rf);
    let pi = v.model.limiting_pi();
    let beta: f64 = pi.iter().zip(&params.beta).map(|(p, b)| p * b).sum();
    report.note("alpha", json!(params.alpha));
    report.note("sigma", json!(params.sigma));
    report.note("beta", json!(params.beta));
    report.note("alpha_plus", json!(params.alpha_plus));
    report.note("alpha_minus", json!(params.alpha_minus));
    let x = column(&sim, 0);
    let (hill, se, k) = tail_hill(&x, beta)?;
    report.note("hill", json!({ "alpha": hill, "std_error": se, "k": k }));
    let tol = v.tol().hill.unwrap_or(HILL_DEFAULT);
    report.checks.push(Check::within("hill_tail_index", hill, params.alpha, tol));
    let skew = quantile_skewness(&x)?;
    report.note("quantile_skewness", json!(skew));
    report.note("mixture_beta", json!(beta));
    let agree = beta == 0.0 || skew.signum() == beta.signum();
    report.checks.push(Check::at_least("skewness_sign_agrees", f64::from(u8::from(agree)), 1.0));
    report.ks_standardized(v, "ks_standardized", &x, &ref_column(&rf, 0), v.tol().ks.unwrap_or(KS_STABLE_DEFAULT))?;
    Ok(report)
}

fn verify_stable_critical(v: &Validated) -> Result<Report, CliError> {
    let t = v.horizon();
    let params = stable_case_params(&v.model, &v.fns)?;
    let steps = v.config.experiment.path_steps.unwrap_or(CRITICAL_PATH_STEPS);
    let law = StableCriticalLaw::new(&v.model, &params, steps)?;
    let scale = t.powf(1.0 / params.alpha);
    let sim = sims(v, |rng| {
        let (lp, li) = log_pair(&simulate_phi_i(&v.model, &v.fns, t, rng));
        Ok(vec![lp / scale, li / scale])
    })?;
    let rf = refs(v, |rng| {
        let d = law.sample(rng);
        Ok((d.component, vec![d.value.0, d.value.1]))
    })?;
    let mut report = Report::new(&["rep", "stat_phi", "stat_i", "reference_end", "reference_sup", "component"]);
    report.count(&sim);
    report.count(&rf);
    paired_rows(&mut report, &sim, &rf);
    report.note("alpha", json!(params.alpha));
    report.note("beta", json!(params.beta));
    let bound = v.tol().ks.unwrap_or(KS_STABLE_DEFAULT);
    report.ks_standardized(v, "ks_phi_standardized", &column(&sim, 0), &ref_column(&rf, 0), bound)?;
    report.ks_standardized(v, "ks_i_standardized", &column(&sim, 1), &ref_column(&rf, 1), v.tol().ks_max.unwrap_or(bound))?;
    Ok(report)
}

fn verify_constant(v: &Validated) -> Result<Report, CliError> {
    let a = constant_a(&v.fns)?;
    if a < 0.0 {
        let t = v.config.experiment.horizon.unwrap_or(50.0 / a.abs());
        let law = ConstantNegativeLaw::new(&v.model, &v.fns)?;
        let sim = sims(v, |rng| {
            let f = simulate_phi_i(&v.model, &v.fns, t, rng);
            Ok(vec![f64::from(f.i_sign) * (f.log_abs_i + a * t).exp()])
        })?;
        let rf = refs(v, |rng| law.sample(rng).map(|d| (d.component, vec![d.value])))?;
        let mut report = Report::new(&["rep", "scaled_i", "reference", "component"]);
        report.count(&sim);
        report.count(&rf);
        paired_rows(&mut report, &sim, &rf);
        report.note("horizon", json!(t));
        report.ks(v, "ks_scaled_i", &column(&sim, 0), &ref_column(&rf, 0), v.tol().ks.unwrap_or(KS_DEFAULT))?;
        return Ok(report);
    }
    let t = v.horizon();
    let summary = zero_drift_summary(&v.model, &v.fns, v.cycles(), &mut setup_rng(v))?;
    let sim = sims(v, |rng| Ok(vec![simulate_phi_i(&v.model, &v.fns, t, rng).i()]))?;
    let mut report = Report::new(&["rep", "i", "i_over_t"]);
    report.count(&sim);
    for (r, x) in &sim.values {
        report.rows.push(vec![r.to_string(), fmt_f64(x[0]), fmt_f64(x[0] / t)]);
    }
    report.note("mean_b", json!(summary.mean_b));
    report.note("clt_scale", json!(summary.clt_scale));
    let b = v.fns.b();
    if b.iter().all(|x| *x == b[0]) {
        let worst = sim
            .values
            .iter()
            .map(|(_, x)| (x[0] - b[0] * t).abs() / (b[0].abs() * t).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        report.checks.push(Check::at_most("constant_b_relative_error", worst, EXACT_RELATIVE));
    } else {
        let scale = summary.clt_scale.ok_or(Error::InfiniteVarianceSuspected)?;
        let band = 3.0 * scale / t.sqrt();
        let outside = sim.values.iter().filter(|(_, x)| (x[0] / t - summary.mean_b).abs() > band).count();
        let frac = outside as f64 / sim.values.len() as f64;
        report.note("band_half_width", json!(band));
        report.checks.push(Check::at_most("fraction_outside_clt_band", frac, v.tol().band_failures.unwrap_or(BAND_FAILURES_DEFAULT)));
    }
    Ok(report)
}

fn pitchfork(v: &Validated) -> Result<Report, CliError> {
    let t = v.horizon();
    let rho0 = rho0(v);
    let law = PitchforkStationary::new(&v.model, &v.fns)?;
    let sim = sims(v, |rng| Ok(vec![pitchfork_path(&v.model, &v.fns, rho0, &[t], rng)?.rho_sq[0]]))?;
    let rf = refs(v, |rng| Ok((0, vec![law.sample(rng)?])))?;
    let mut report = Report::new(&["rep", "rho_sq", "reference_rho_sq", "component"]);
    report.count(&sim);
    report.count(&rf);
    paired_rows(&mut report, &sim, &rf);
    report.ks(v, "ks_rho_sq", &column(&sim, 0), &ref_column(&rf, 0), v.tol().ks.unwrap_or(KS_DEFAULT))?;
    Ok(report)
}

fn smallball(v: &Validated) -> Result<Report, CliError> {
    let sb = smallball_exponent(&v.model, &v.fns, v.cycles(), &mut setup_rng(v))?;
    let law = PitchforkStationary::new(&v.model, &v.fns)?;
    let rf = refs(v, |rng| Ok((0, vec![law.sample_inverse(rng)?])))?;
    let mut report = Report::new(&["rep", "inverse_rho_sq"]);
    report.count(&rf);
    for (r, (_, x)) in &rf.values {
        report.rows.push(vec![r.to_string(), fmt_f64(x[0])]);
    }
    let inv = ref_column(&rf, 0);
    let rho_sq: Vec<f64> = inv.iter().map(|x| 1.0 / x).collect();
    report.note("nu", json!(sb.nu));
    report.note("per_state_nu", json!(sb.per_state.iter().map(|r| r.nu).collect::<Vec<_>>()));
    for eps in [1e-2, 1e-3] {
        report.note(&format!("smallball_ratio_{eps:e}"), json!(smallball_ratio(&rho_sq, eps, sb.nu)));
    }
    if let Some(expected) = v.config.experiment.expected_nu {
        report.checks.push(Check::within("kesten_nu", sb.nu, expected, v.tol().nu.unwrap_or(NU_DEFAULT)));
    }
    let k = (inv.len() / 100).max(50);
    let h = hill_index(&Sample::new(inv)?, k)?;
    report.note("hill", json!({ "alpha": h.alpha, "std_error": h.std_error, "k": h.k }));
    let rel = (h.alpha - sb.nu).abs() / sb.nu;
    report.checks.push(Check::at_most("hill_relative_error", rel, v.tol().hill_relative.unwrap_or(HILL_RELATIVE_DEFAULT)));
    Ok(report)
}

fn ou(v: &Validated) -> Result<Report, CliError> {
    let t = v.horizon();
    let (h, x0) = (v.transform(), x0(v));
    let law = GouStationary::new(&v.model, &v.fns, h)?;
    let sim = sims(v, |rng| gou_sample(&v.model, &v.fns, h, x0, t, rng))?;
    let rf = refs(v, |rng| law.sample(rng))?;
    let mut report = Report::new(&["rep", "x", "reference_x", "component"]);
    report.count(&sim);
    report.count(&rf);
    let sim_vals = Outcomes { values: sim.values.iter().map(|(r, d)| (*r, vec![d.value])).collect(), failed: sim.failed, total: sim.total };
    let ref_vals = Outcomes { values: rf.values.iter().map(|(r, d)| (*r, (0, vec![d.value]))).collect(), failed: rf.failed, total: rf.total };
    paired_rows(&mut report, &sim_vals, &ref_vals);
    let rejections: usize = sim.values.iter().chain(&rf.values).map(|(_, d)| d.rejections).sum();
    let draws = sim.values.len() + rf.values.len();
    let rate = rejections as f64 / (rejections + draws) as f64;
    report.note("rejections", json!(rejections));
    report.checks.push(Check::at_most("rejection_rate", rate, v.tol().rejection_rate.unwrap_or(REJECTION_DEFAULT)));
    report.ks(v, "ks_x", &column(&sim_vals, 0), &ref_column(&ref_vals, 0), v.tol().ks.unwrap_or(KS_DEFAULT))?;
    Ok(report)
}

fn stable_ou(v: &Validated) -> Result<Report, CliError> {
    let t = v.horizon();
    let alpha = v.config.functions.alpha_star.ok_or_else(|| CliError::Invalid("alpha_star missing".into()))?;
    let x0 = x0(v);
    let law = StableOuStationary::new(&v.model, &v.fns, alpha)?;
    let sim = sims(v, |rng| Ok(vec![stable_ou_sample(&v.model, &v.fns, alpha, x0, t, rng)?]))?;
    let rf = refs(v, |rng| Ok((0, vec![law.sample(rng)?])))?;
    let mut report = Report::new(&["rep", "x", "reference_x", "component"]);
    report.count(&sim);
    report.count(&rf);
    paired_rows(&mut report, &sim, &rf);
    let y = ref_column(&rf, 0);
    report.ks(v, "ks_x", &column(&sim, 0), &y, v.tol().ks.unwrap_or(KS_DEFAULT))?;
    let abs: Vec<f64> = y.iter().map(|x| x.abs()).filter(|x| *x > 0.0).collect();
    let k = (abs.len() / 100).max(50);
    let h = hill_index(&Sample::new(abs)?, k)?;
    report.note("hill", json!({ "alpha": h.alpha, "std_error": h.std_error, "k": h.k }));
    report.checks.push(Check::within("hill_tail_index", h.alpha, alpha, v.tol().hill.unwrap_or(HILL_DEFAULT)));
    let above = y.iter().filter(|x| **x > 0.0).count() as f64 / y.len() as f64;
    report.checks.push(Check::within("fraction_positive", above, 0.5, v.tol().symmetry.unwrap_or(SYMMETRY_DEFAULT)));
    Ok(report)
}

/// Reference law of a divergence statistic.
enum DivergenceRef<'m> {
    Gaussian(GaussianDivergentLaw<'m>),
    Critical(GaussianCriticalLaw<'m>),
    Stable(StableDivergentLaw<'m>),
    StableSup(StableCriticalLaw<'m>),
    /// `shift + scale_of(V)` with `V` from the constant-coefficient law.
    Constant { law: ConstantNegativeLaw<'m>, app: Application },
    /// `sqrt(second moment) N`.
    Normal(f64),
    Point(f64),
}

impl DivergenceRef<'_> {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<(usize, f64), Error> {
        Ok(match self {
            DivergenceRef::Gaussian(l) => {
                let d = l.sample(rng);
                (d.component, d.value.0)
            }
            DivergenceRef::Critical(l) => {
                let d = l.sample(rng);
                (d.component, d.value.1)
            }
            DivergenceRef::Stable(l) => {
                let d = l.sample(rng);
                (d.component, d.value.0)
            }
            DivergenceRef::StableSup(l) => {
                let d = l.sample(rng);
                (d.component, d.value.1)
            }
            DivergenceRef::Constant { law, app } => {
                let d = law.sample(rng)?;
                let value = match *app {
                    Application::Pitchfork { rho0 } => rho0.powi(-2) + 2.0 * d.value,
                    Application::Ou { h, x0 } => {
                        let z: f64 = rng.sample(rand_distr::StandardNormal);
                        h.h(x0) + d.value.max(0.0).sqrt() * z
                    }
                };
                (d.component, value)
            }
            DivergenceRef::Normal(s) => {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                (0, s * z)
            }
            DivergenceRef::Point(p) => (0, *p),
        })
    }
}

fn divergence(v: &Validated, app: Application, case: DivergenceCase) -> Result<Report, CliError> {
    let t = v.horizon();
    // The pitchfork statistics are those of (2a, b); the OU ones of (a, b)
    // for the log scale and (2a, b^2) for the constant-a limits.
    let (log_fns, const_fns) = match app {
        Application::Pitchfork { .. } => (v.fns.scale_a(2.0), v.fns.scale_a(2.0)),
        Application::Ou { .. } => (v.fns.clone(), v.fns.scale_a(2.0).map_b(|b| b * b)),
    };
    let reference = divergence_reference(v, app, case, &log_fns, &const_fns)?;
    let sim = sims(v, |rng| Ok(vec![divergence_transform(&v.model, &v.fns, app, case, t, rng)?]))?;
    let mut report = Report::new(&["rep", "statistic", "reference", "component"]);
    report.count(&sim);
    let x = column(&sim, 0);
    match &reference {
        DivergenceRef::Point(p) => {
            for (r, s) in &sim.values {
                report.rows.push(vec![r.to_string(), fmt_f64(s[0]), fmt_f64(*p), String::new()]);
            }
            let med = Sample::new(x)?.median();
            report.note("median_statistic", json!(med));
            let tol = v.tol().relative.unwrap_or(RELATIVE_DEFAULT);
            report.checks.push(Check::within("median_vs_limit", med, *p, tol * p.abs()));
        }
        _ => {
            let rf = refs(v, |rng| reference.sample(rng).map(|(c, x)| (c, vec![x])))?;
            report.count(&rf);
            paired_rows(&mut report, &sim, &rf);
            let y = ref_column(&rf, 0);
            if matches!(case, DivergenceCase::StableDivergent { .. } | DivergenceCase::StableCritical { .. }) {
                report.ks_standardized(v, "ks_standardized", &x, &y, v.tol().ks.unwrap_or(KS_STABLE_DEFAULT))?;
            } else {
                report.ks(v, "ks_statistic", &x, &y, v.tol().ks.unwrap_or(KS_DEFAULT))?;
            }
        }
    }
    Ok(report)
}

fn divergence_reference<'m>(
    v: &'m Validated,
    app: Application,
    case: DivergenceCase,
    log_fns: &StateFns,
    const_fns: &StateFns,
) -> Result<DivergenceRef<'m>, CliError> {
    let mut rng = setup_rng(v);
    Ok(match case {
        DivergenceCase::GaussianDivergent => DivergenceRef::Gaussian(GaussianDivergentLaw::new(&v.model, log_fns, v.cycles(), &mut rng)?),
        DivergenceCase::GaussianCritical => DivergenceRef::Critical(GaussianCriticalLaw::new(&v.model, log_fns, v.cycles(), &mut rng)?),
        DivergenceCase::StableDivergent { .. } => {
            let p = stable_case_params(&v.model, log_fns)?;
            DivergenceRef::Stable(StableDivergentLaw::new(&v.model, &p)?)
        }
        DivergenceCase::StableCritical { .. } => {
            let p = stable_case_params(&v.model, log_fns)?;
            let steps = v.config.experiment.path_steps.unwrap_or(CRITICAL_PATH_STEPS);
            DivergenceRef::StableSup(StableCriticalLaw::new(&v.model, &p, steps)?)
        }
        DivergenceCase::ConstantNegative => DivergenceRef::Constant { law: ConstantNegativeLaw::new(&v.model, const_fns)?, app },
        DivergenceCase::ConstantZero => match app {
            Application::Pitchfork { .. } => DivergenceRef::Point(2.0 * v.model.pi_mean(v.fns.b())),
            Application::Ou { .. } => {
                let b2: Vec<f64> = v.fns.b().iter().map(|b| b * b).collect();
                DivergenceRef::Normal(v.model.pi_mean(&b2).sqrt())
            }
        },
    })
}
