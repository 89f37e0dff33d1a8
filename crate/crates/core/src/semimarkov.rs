//! Finite-state semi-Markov environments: validation, stationary measures,
//! trajectory simulation and renewal-cycle bookkeeping.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::distributions::SojournLaw;
use crate::error::{Error, Result};
use crate::linalg::stationary_vector;

const ROW_TOL: f64 = 1e-12;

/// Validated semi-Markov model on states `0..n`.
///
/// Holds the embedded transition matrix, one sojourn law per allowed
/// transition and an initial distribution, plus the derived stationary
/// quantities.
#[derive(Debug, Clone)]
pub struct SemiMarkovModel {
    n: usize,
    p: Vec<f64>,
    laws: Vec<Option<SojournLaw>>,
    initial: Vec<f64>,
    successors: Vec<Vec<Successor>>,
    mu: Vec<f64>,
    mean_sojourn: Vec<f64>,
    pi: Vec<f64>,
    // cumulative P_jk m_jk / m_j over successors, for the equilibrium mixture
    equilibrium_weights: Vec<Vec<f64>>,
    initial_cum: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Successor {
    state: usize,
    cum: f64,
    law: SojournLaw,
}

impl SemiMarkovModel {
    /// Validate and build a model.
    ///
    /// `laws[i][j]` must be present whenever `p[i][j] > 0`; entries for
    /// zero-probability transitions are ignored. Rows of `p` and the
    /// initial vector are renormalized after the tolerance check.
    pub fn new(p: Vec<Vec<f64>>, laws: Vec<Vec<Option<SojournLaw>>>, initial: Vec<f64>) -> Result<Self> {
        let n = p.len();
        if n < 2 {
            return Err(Error::TooFewStates(n));
        }
        if p.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("transition matrix must be square"));
        }
        if laws.len() != n || laws.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("sojourn table must match the transition matrix"));
        }
        if initial.len() != n {
            return Err(Error::DimensionMismatch("initial distribution length"));
        }
        let mut flat = vec![0.0; n * n];
        for (i, row) in p.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidProbability { row: i, col: j });
                }
            }
            if row[i] != 0.0 {
                return Err(Error::SelfLoopError { state: i });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::RowSumError { row: i, sum });
            }
            for (j, &v) in row.iter().enumerate() {
                flat[i * n + j] = v / sum;
            }
        }
        check_irreducible(&flat, n)?;

        let mut table = vec![None; n * n];
        for i in 0..n {
            for j in 0..n {
                if flat[i * n + j] > 0.0 {
                    match laws[i][j] {
                        Some(l) => table[i * n + j] = Some(l),
                        None => return Err(Error::MissingSojournLaw { from: i, to: j }),
                    }
                }
            }
        }
        let mut model = SemiMarkovModel {
            n,
            p: flat,
            laws: table,
            initial: Vec::new(),
            successors: Vec::new(),
            mu: Vec::new(),
            mean_sojourn: Vec::new(),
            pi: Vec::new(),
            equilibrium_weights: Vec::new(),
            initial_cum: Vec::new(),
        };
        model.derive();
        model.set_initial(initial)?;
        Ok(model)
    }

    /// Same model with a different initial distribution.
    pub fn with_initial(&self, initial: Vec<f64>) -> Result<Self> {
        let mut m = self.clone();
        m.set_initial(initial)?;
        Ok(m)
    }

    /// Same model started from the limiting distribution `pi`.
    pub fn started_at_pi(&self) -> Self {
        self.with_initial(self.pi.clone()).expect("pi is a probability vector")
    }

    /// Same model started deterministically in `state`.
    pub fn started_in(&self, state: usize) -> Result<Self> {
        self.check_state(state)?;
        let mut v = vec![0.0; self.n];
        v[state] = 1.0;
        self.with_initial(v)
    }

    fn set_initial(&mut self, initial: Vec<f64>) -> Result<()> {
        if initial.len() != self.n {
            return Err(Error::DimensionMismatch("initial distribution length"));
        }
        if initial.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInitial);
        }
        let sum: f64 = initial.iter().sum();
        if (sum - 1.0).abs() > ROW_TOL {
            return Err(Error::InvalidInitial);
        }
        self.initial = initial.iter().map(|v| v / sum).collect();
        self.initial_cum = cumulative(&self.initial);
        Ok(())
    }

    fn derive(&mut self) {
        let n = self.n;
        self.successors = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                (0..n)
                    .filter(|&j| self.p[i * n + j] > 0.0)
                    .map(|j| {
                        acc += self.p[i * n + j];
                        Successor {
                            state: j,
                            cum: acc,
                            law: self.laws[i * n + j].expect("checked"),
                        }
                    })
                    .collect()
            })
            .collect();
        self.mu = stationary_vector(&self.p, n);
        self.mean_sojourn = (0..n)
            .map(|i| self.successors[i].iter().map(|s| self.p[i * n + s.state] * s.law.mean()).sum())
            .collect();
        let weights: Vec<f64> = (0..n).map(|i| self.mu[i] * self.mean_sojourn[i]).collect();
        let total: f64 = weights.iter().sum();
        self.pi = weights.iter().map(|w| w / total).collect();
        self.equilibrium_weights = (0..n)
            .map(|i| {
                let w: Vec<f64> = self.successors[i]
                    .iter()
                    .map(|s| self.p[i * n + s.state] * s.law.mean() / self.mean_sojourn[i])
                    .collect();
                cumulative(&w)
            })
            .collect();
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    /// Embedded transition probability `P_ij`.
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    /// Sojourn law `F_ij`, present iff `P_ij > 0`.
    pub fn law(&self, i: usize, j: usize) -> Option<&SojournLaw> {
        self.laws[i * self.n + j].as_ref()
    }

    /// Transitions `(i, j, P_ij, F_ij)` with positive probability.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, f64, &SojournLaw)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.successors[i]
                .iter()
                .map(move |s| (i, s.state, self.p[i * self.n + s.state], &s.law))
        })
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Stationary law `mu` of the embedded chain.
    pub fn stationary_embedded(&self) -> &[f64] {
        &self.mu
    }

    /// `m_j = sum_k P_jk m_jk`.
    pub fn mean_sojourn(&self, j: usize) -> f64 {
        self.mean_sojourn[j]
    }

    /// Long-run occupation law `pi_j = mu_j m_j / sum_k mu_k m_k`.
    pub fn limiting_pi(&self) -> &[f64] {
        &self.pi
    }

    /// `sum_j pi_j f(j)`.
    pub fn pi_mean(&self, f: &[f64]) -> f64 {
        self.pi.iter().zip(f).map(|(p, v)| p * v).sum()
    }

    /// Expected length of a renewal cycle between visits to `j`.
    pub fn mean_cycle_length(&self, j: usize) -> f64 {
        let total: f64 = (0..self.n).map(|k| self.mu[k] * self.mean_sojourn[k]).sum();
        total / self.mu[j]
    }

    /// Expected number of embedded steps in a cycle at `j`, i.e. `1 / mu_j`.
    pub fn mean_cycle_steps(&self, j: usize) -> f64 {
        1.0 / self.mu[j]
    }

    /// State with the largest limiting probability (lowest index on ties).
    pub fn most_likely_state(&self) -> usize {
        let mut best = 0;
        for j in 1..self.n {
            if self.pi[j] > self.pi[best] {
                best = j;
            }
        }
        best
    }

    pub fn check_state(&self, j: usize) -> Result<()> {
        if j < self.n {
            Ok(())
        } else {
            Err(Error::UnknownState(j))
        }
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        pick(&self.initial_cum, rng.random())
    }

    /// Draw a state from `pi`.
    pub fn sample_pi<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (j, p) in self.pi.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        self.n - 1
    }

    /// One embedded step from `i`: `(next state, sojourn in i)`.
    pub fn step<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> (usize, f64) {
        let succ = &self.successors[i];
        let u: f64 = rng.random::<f64>() * succ.last().map_or(1.0, |s| s.cum);
        let s = succ.iter().find(|s| u < s.cum).unwrap_or(succ.last().expect("irreducible"));
        (s.state, s.law.sample(rng))
    }

    /// Draw from the size-biased averaged sojourn law of state `j`.
    pub fn pi_star_sample<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> f64 {
        let k = pick(&self.equilibrium_weights[j], rng.random());
        self.successors[j][k].law.equilibrium_sample(rng)
    }

    /// Simulate from the initial distribution until the first jump epoch at
    /// or after `horizon`.
    pub fn simulate<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> Trajectory {
        let start = self.sample_initial(rng);
        self.simulate_from(start, horizon, rng)
    }

    /// Like [`simulate`](Self::simulate) but started in `start`.
    pub fn simulate_from<R: Rng + ?Sized>(&self, start: usize, horizon: f64, rng: &mut R) -> Trajectory {
        let mut segments = Vec::new();
        let mut t = 0.0;
        let mut state = start;
        loop {
            let (next, d) = self.step(state, rng);
            segments.push(Segment { state, start: t, duration: d });
            t += d;
            state = next;
            if t >= horizon {
                break;
            }
        }
        Trajectory { segments, horizon, exit_state: state }
    }

    /// Run one renewal cycle from `j` back to `j`, feeding each
    /// `(state, duration)` to `visit`. Returns the cycle length.
    pub fn run_cycle<R: Rng + ?Sized>(&self, j: usize, rng: &mut R, mut visit: impl FnMut(usize, f64)) -> f64 {
        let mut state = j;
        let mut len = 0.0;
        loop {
            let (next, d) = self.step(state, rng);
            visit(state, d);
            len += d;
            state = next;
            if state == j {
                return len;
            }
        }
    }

    /// Run from `start` until the first entry into `target` (nothing when
    /// they coincide). Returns the hitting time.
    pub fn run_until_hit<R: Rng + ?Sized>(
        &self,
        start: usize,
        target: usize,
        rng: &mut R,
        mut visit: impl FnMut(usize, f64),
    ) -> f64 {
        let mut state = start;
        let mut t = 0.0;
        while state != target {
            let (next, d) = self.step(state, rng);
            visit(state, d);
            t += d;
            state = next;
        }
        t
    }
}

fn cumulative(w: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    w.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

fn pick(cum: &[f64], u: f64) -> usize {
    let total = *cum.last().expect("non-empty");
    let target = u * total;
    cum.iter().position(|&c| target < c).unwrap_or(cum.len() - 1)
}

fn check_irreducible(p: &[f64], n: usize) -> Result<()> {
    for transpose in [false, true] {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                let w = if transpose { p[j * n + i] } else { p[i * n + j] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if let Some(u) = seen.iter().position(|s| !s) {
            return Err(Error::NotIrreducible { unreachable: u });
        }
    }
    Ok(())
}

/// A sojourn of `duration` in `state` starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub state: usize,
    pub start: f64,
    pub duration: f64,
}

impl Segment {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// Materialized path of the environment on `[0, horizon]`. The last
/// segment may overhang the horizon.
#[derive(Debug, Clone)]
pub struct Trajectory {
    segments: Vec<Segment>,
    horizon: f64,
    exit_state: usize,
}

impl Trajectory {
    /// Build from explicit `(state, duration)` pairs. `exit_state` is the
    /// state entered when the last segment ends.
    pub fn from_segments(parts: &[(usize, f64)], exit_state: usize) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("trajectory needs at least one segment"));
        }
        let mut segments = Vec::with_capacity(parts.len());
        let mut t = 0.0;
        for (k, &(state, duration)) in parts.iter().enumerate() {
            if !(duration > 0.0 && duration.is_finite()) {
                return Err(Error::InvalidParameter("segment durations must be positive"));
            }
            if k > 0 && parts[k - 1].0 == state {
                return Err(Error::SelfLoopError { state });
            }
            segments.push(Segment { state, start: t, duration });
            t += duration;
        }
        if parts.last().map(|s| s.0) == Some(exit_state) {
            return Err(Error::SelfLoopError { state: exit_state });
        }
        Ok(Trajectory { segments, horizon: t, exit_state })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// End of the last segment (`>= horizon`).
    pub fn coverage(&self) -> f64 {
        self.segments.last().map_or(0.0, Segment::end)
    }

    /// State entered at [`coverage`](Self::coverage).
    pub fn exit_state(&self) -> usize {
        self.exit_state
    }

    /// Jump epochs `S_1, S_2, ...` (ends of segments).
    pub fn jump_epochs(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().map(Segment::end)
    }

    /// Number of jumps in `(0, t]`.
    pub fn jumps_before(&self, t: f64) -> usize {
        self.segments.iter().take_while(|s| s.end() <= t).count()
    }

    pub fn visit_counts(&self, n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for s in &self.segments {
            c[s.state] += 1;
        }
        c
    }

    /// State occupied at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Result<usize> {
        if !(0.0..self.coverage()).contains(&t) {
            return Err(Error::OutOfRange(t));
        }
        let k = self.segments.partition_point(|s| s.start <= t) - 1;
        Ok(self.segments[k].state)
    }

    /// Fraction of `[0, t]` spent in each state.
    pub fn occupation_fractions(&self, n: usize, t: f64) -> Result<Vec<f64>> {
        if !(t > 0.0 && t <= self.coverage()) {
            return Err(Error::OutOfRange(t));
        }
        let mut occ = vec![0.0; n];
        for s in &self.segments {
            if s.start >= t {
                break;
            }
            occ[s.state] += s.end().min(t) - s.start;
        }
        occ.iter_mut().for_each(|v| *v /= t);
        Ok(occ)
    }
}

/// Entry epochs of a trajectory into a fixed state.
#[derive(Debug, Clone)]
pub struct CycleIndex {
    state: usize,
    entries: Vec<f64>,
    // segment index at each entry, or segments.len() for the exit entry
    segment_index: Vec<usize>,
}

impl CycleIndex {
    pub fn new(traj: &Trajectory, j: usize) -> Result<Self> {
        let mut entries = Vec::new();
        let mut segment_index = Vec::new();
        for (k, s) in traj.segments.iter().enumerate() {
            if s.state == j {
                entries.push(s.start);
                segment_index.push(k);
            }
        }
        if traj.exit_state == j {
            entries.push(traj.coverage());
            segment_index.push(traj.segments.len());
        }
        if entries.is_empty() || entries[0] > traj.horizon {
            return Err(Error::NeverHits { state: j });
        }
        Ok(CycleIndex { state: j, entries, segment_index })
    }

    pub fn state(&self) -> usize {
        self.state
    }

    /// First hitting time `tau_0`.
    pub fn first_hit(&self) -> f64 {
        self.entries[0]
    }

    /// Entry epochs `tau_0 < tau_1 < ...`.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Segment index at which each entry starts.
    pub fn entry_segments(&self) -> &[usize] {
        &self.segment_index
    }

    /// Number of complete cycles `tau_{k+1} - tau_k`.
    pub fn complete_cycles(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn cycle_lengths(&self) -> Vec<f64> {
        self.entries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Index `k` of the last entry `tau_k <= t`; `None` before `tau_0`.
    pub fn last_renewal(&self, t: f64) -> Option<usize> {
        let k = self.entries.partition_point(|&e| e <= t);
        k.checked_sub(1)
    }

    /// `(t - tau_g, tau_{g+1} - t)` for the cycle containing `t`.
    pub fn residual_times(&self, t: f64) -> Result<(f64, f64)> {
        let g = self.last_renewal(t).ok_or(Error::OutOfRange(t))?;
        let next = *self.entries.get(g + 1).ok_or(Error::OutOfRange(t))?;
        Ok((t - self.entries[g], next - t))
    }
}

/// Convenience wrapper for [`CycleIndex::new`].
pub fn cycle_index(traj: &Trajectory, j: usize) -> Result<CycleIndex> {
    CycleIndex::new(traj, j)
}
