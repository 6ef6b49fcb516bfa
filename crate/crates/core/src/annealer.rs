//! Potts spin mean field annealing solver.
//!
//! Minimizes the pairwise-conflict energy by relaxing cluster membership
//! probabilities `V_ia` under a geometric cooling schedule that starts at an
//! eigenvalue-based critical temperature. Rows may be clamped one-hot (core
//! membership) and an extra per-(report, cluster) coupling column carries
//! template penalties during refined runs; standard clustering is the same
//! loop with no clamps and zero coupling.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::evidence::{build_conflict_matrix, energy, ConflictMatrix, HardAssignment, Report};
use crate::Result;

/// Floor for the per-cluster normalization term and for a degenerate
/// critical temperature.
const NORMALIZATION_FLOOR: f64 = 1e-6;

/// Hard bound on sweeps within one temperature stage; the stated inner
/// tolerance terminates far earlier in practice.
const MAX_INNER_SWEEPS: usize = 10_000;

/// Global inhibition per cluster count. Zero except for a handful of cluster
/// counts with tabulated nonzero values; larger counts default to zero.
pub fn alpha_for_k(k: usize) -> f64 {
    match k {
        8 => 1e-6,
        10 => 3e-7,
        11 => 3e-8,
        _ => 0.0,
    }
}

/// Solver parameters. `new` fills in the standard constants; every field
/// stays adjustable afterwards.
#[derive(Clone, Debug, Serialize)]
pub struct AnnealConfig {
    /// Cluster count (the Potts state count).
    pub k: usize,
    /// Noise amplitude added to every updated entry.
    pub epsilon: f64,
    /// Geometric cooling factor.
    pub tau: f64,
    /// Self-coupling strength.
    pub gamma: f64,
    /// Global inhibition; defaults to the per-k table.
    pub alpha: f64,
    /// Mean absolute row change that ends a temperature stage.
    pub inner_tol: f64,
    /// Mean squared saturation that ends the whole schedule.
    pub freeze_tol: f64,
    /// Membership level at which a report is moved into a core during
    /// refined runs.
    pub promote_threshold: f64,
    pub seed: u64,
    /// Safety bound on temperature stages.
    pub max_outer_steps: usize,
}

impl AnnealConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        AnnealConfig {
            k,
            epsilon: 0.001,
            tau: 0.9,
            gamma: 0.5,
            alpha: alpha_for_k(k),
            inner_tol: 0.01,
            freeze_tol: 0.99,
            promote_threshold: 0.99,
            seed,
            max_outer_steps: 500,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("cluster count must be >= 1"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::invalid("tau must lie in (0, 1)"));
        }
        if self.epsilon < 0.0 {
            return Err(Error::invalid("epsilon must be >= 0"));
        }
        for (name, v) in [
            ("inner_tol", self.inner_tol),
            ("freeze_tol", self.freeze_tol),
            ("promote_threshold", self.promote_threshold),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1]")));
            }
        }
        Ok(())
    }
}

/// The mean field assignment matrix with clamp marks for core membership.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinField {
    n: usize,
    k: usize,
    v: Vec<f64>,
    clamp: Vec<Option<usize>>,
}

impl SpinField {
    /// Unclamped rows start at `1/k` plus noise and are renormalized;
    /// clamped rows are exactly one-hot.
    pub fn init<R: Rng>(
        n: usize,
        k: usize,
        epsilon: f64,
        clamps: &[Option<usize>],
        rng: &mut R,
    ) -> Self {
        debug_assert_eq!(clamps.len(), n);
        let mut field = SpinField {
            n,
            k,
            v: vec![0.0; n * k],
            clamp: clamps.to_vec(),
        };
        for i in 0..n {
            match clamps[i] {
                Some(a) => field.v[i * k + a] = 1.0,
                None => field.randomize_row(i, epsilon, rng),
            }
        }
        field
    }

    fn randomize_row<R: Rng>(&mut self, i: usize, epsilon: f64, rng: &mut R) {
        let row = &mut self.v[i * self.k..(i + 1) * self.k];
        let mut sum = 0.0;
        for entry in row.iter_mut() {
            *entry = 1.0 / self.k as f64 + epsilon * rng.gen::<f64>();
            sum += *entry;
        }
        for entry in row.iter_mut() {
            *entry /= sum;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, a: usize) -> f64 {
        self.v[i * self.k + a]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.v[i * self.k..(i + 1) * self.k]
    }

    pub fn clamp_of(&self, i: usize) -> Option<usize> {
        self.clamp[i]
    }

    pub fn is_clamped(&self, i: usize) -> bool {
        self.clamp[i].is_some()
    }

    /// Clamps row `i` one-hot on cluster `a`.
    pub fn clamp_to(&mut self, i: usize, a: usize) {
        for b in 0..self.k {
            self.v[i * self.k + b] = if b == a { 1.0 } else { 0.0 };
        }
        self.clamp[i] = Some(a);
    }

    fn set_row(&mut self, i: usize, row: &[f64]) {
        self.v[i * self.k..(i + 1) * self.k].copy_from_slice(row);
    }

    /// Mean squared entry, the freeze criterion.
    pub fn saturation(&self) -> f64 {
        self.v.iter().map(|v| v * v).sum::<f64>() / self.n as f64
    }

    /// Hard assignment by row argmax.
    pub fn argmax_assignment(&self) -> HardAssignment {
        let cluster_of = (0..self.n)
            .map(|i| {
                let row = self.row(i);
                let mut best = 0;
                for a in 1..self.k {
                    if row[a] > row[best] {
                        best = a;
                    }
                }
                best
            })
            .collect();
        HardAssignment {
            k: self.k,
            cluster_of,
        }
    }
}

/// Critical temperature estimate from the extreme eigenvalues of
/// `M = J + alpha - gamma I`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TemperatureEstimate {
    pub t_c: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn critical_temperature(
    j: &ConflictMatrix,
    alpha: f64,
    gamma: f64,
    k: usize,
) -> TemperatureEstimate {
    let n = j.n();
    let m = DMatrix::from_fn(n, n, |r, c| {
        j.get(r, c) + alpha - if r == c { gamma } else { 0.0 }
    });
    let eigenvalues = m.symmetric_eigen().eigenvalues;
    let lambda_min = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let lambda_max = eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut t_c = (-lambda_min).max(lambda_max) / k as f64;
    if t_c <= 0.0 {
        t_c = NORMALIZATION_FLOOR;
    }
    TemperatureEstimate {
        t_c,
        lambda_min,
        lambda_max,
    }
}

/// Spin field initialization with a fresh RNG seeded from the config.
pub fn init_spin_field(n: usize, config: &AnnealConfig, clamps: &[Option<usize>]) -> SpinField {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    SpinField::init(n, config.k, config.epsilon, clamps, &mut rng)
}

/// Per-cluster normalization `G_a = (k/n) sum_i V_ia`, floored to avoid
/// division blow-up on empty clusters.
pub fn normalization(field: &SpinField) -> Vec<f64> {
    let (n, k) = (field.n(), field.k());
    let mut g = vec![0.0; k];
    for i in 0..n {
        for (a, ga) in g.iter_mut().enumerate() {
            *ga += field.get(i, a);
        }
    }
    for ga in g.iter_mut() {
        *ga = (*ga * k as f64 / n as f64).max(NORMALIZATION_FLOOR);
    }
    g
}

/// Local field for report `i`:
/// `H_ia = [sum_j (J_ij + alpha) V_ja + coupling_ia + alpha - gamma V_ia] / G_a`.
///
/// `coupling_row` is the report's template interaction row (one entry per
/// cluster); absent means standard clustering.
pub fn local_field(
    field: &SpinField,
    j: &ConflictMatrix,
    coupling_row: Option<&[f64]>,
    i: usize,
    config: &AnnealConfig,
    g: &[f64],
) -> Vec<f64> {
    let (n, k) = (field.n(), field.k());
    let mut h = vec![0.0; k];
    for (a, ha) in h.iter_mut().enumerate() {
        let mut sum = 0.0;
        for l in 0..n {
            sum += (j.get(i, l) + config.alpha) * field.get(l, a);
        }
        if let Some(c) = coupling_row {
            sum += c[a];
        }
        sum += config.alpha - config.gamma * field.get(i, a);
        *ha = sum / g[a];
    }
    h
}

/// Softmax of `-H/T` (max-stabilized), plus noise, renormalized to a
/// stochastic row.
pub fn mean_field_update<R: Rng>(
    h: &[f64],
    temperature: f64,
    epsilon: f64,
    rng: &mut R,
) -> Vec<f64> {
    let x_max = h
        .iter()
        .map(|&ha| -ha / temperature)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut row: Vec<f64> = h
        .iter()
        .map(|&ha| (-ha / temperature - x_max).exp())
        .collect();
    let f: f64 = row.iter().sum();
    let mut sum = 0.0;
    for entry in row.iter_mut() {
        *entry = *entry / f + epsilon * rng.gen::<f64>();
        sum += *entry;
    }
    for entry in row.iter_mut() {
        *entry /= sum;
    }
    row
}

/// One (outer step, temperature, energy, saturation) record per completed
/// temperature stage. Energy is the pairwise-conflict energy of the current
/// argmax assignment.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceRecord {
    pub outer_step: usize,
    pub temperature: f64,
    pub energy: f64,
    pub saturation: f64,
}

#[derive(Clone, Debug)]
pub struct AnnealOutcome {
    pub assignment: HardAssignment,
    pub field: SpinField,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
}

/// What a post-sweep hook did; a restart skips the stage's convergence
/// check and cooling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SweepAction {
    Continue,
    Restarted,
}

/// The two-loop schedule shared by standard and refined clustering. Refined
/// runs install a post-sweep hook that performs move-to-core promotions.
pub(crate) struct Engine<'a> {
    j: &'a ConflictMatrix,
    config: &'a AnnealConfig,
    pub(crate) field: SpinField,
    /// Template interaction per (report, cluster), row-major; all zero for
    /// standard clustering.
    pub(crate) coupling: Vec<f64>,
    t_c: f64,
    temperature: f64,
    rng: ChaCha8Rng,
    pub(crate) trace: Vec<TraceRecord>,
    stage: usize,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(
        j: &'a ConflictMatrix,
        config: &'a AnnealConfig,
        clamps: &[Option<usize>],
        coupling: Option<Vec<f64>>,
    ) -> Result<Self> {
        config.validate()?;
        let n = j.n();
        if clamps.len() != n {
            return Err(Error::invalid("clamp list length must match report count"));
        }
        if let Some(&Some(c)) = clamps.iter().find(|c| matches!(c, Some(c) if *c >= config.k)) {
            return Err(Error::invalid(format!(
                "clamp target {c} out of range for k = {}",
                config.k
            )));
        }
        let coupling = coupling.unwrap_or_else(|| vec![0.0; n * config.k]);
        if coupling.len() != n * config.k {
            return Err(Error::invalid("coupling table must be n x k"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let field = SpinField::init(n, config.k, config.epsilon, clamps, &mut rng);
        let t_c = critical_temperature(j, config.alpha, config.gamma, config.k).t_c;
        Ok(Engine {
            j,
            config,
            field,
            coupling,
            t_c,
            temperature: t_c,
            rng,
            trace: Vec::new(),
            stage: 0,
        })
    }

    pub(crate) fn config(&self) -> &AnnealConfig {
        self.config
    }

    pub(crate) fn stage(&self) -> usize {
        self.stage
    }

    fn coupling_row(&self, i: usize) -> &[f64] {
        &self.coupling[i * self.config.k..(i + 1) * self.config.k]
    }

    pub(crate) fn set_coupling(&mut self, i: usize, a: usize, value: f64) {
        self.coupling[i * self.config.k + a] = value;
    }

    pub(crate) fn zero_coupling_row(&mut self, i: usize) {
        for a in 0..self.config.k {
            self.coupling[i * self.config.k + a] = 0.0;
        }
    }

    /// Clamps report `i` one-hot on `a` and drops its couplings (a clamped
    /// row no longer reads them).
    pub(crate) fn promote(&mut self, i: usize, a: usize) {
        self.field.clamp_to(i, a);
        self.zero_coupling_row(i);
    }

    /// Re-randomizes unclamped rows and restarts the cooling schedule.
    pub(crate) fn restart(&mut self) {
        for i in 0..self.field.n() {
            if !self.field.is_clamped(i) {
                self.field.randomize_row(i, self.config.epsilon, &mut self.rng);
            }
        }
        self.temperature = self.t_c;
    }

    fn sweep(&mut self) {
        let g = normalization(&self.field);
        for i in 0..self.field.n() {
            if self.field.is_clamped(i) {
                continue;
            }
            let h = local_field(
                &self.field,
                self.j,
                Some(self.coupling_row(i)),
                i,
                self.config,
                &g,
            );
            let row = mean_field_update(&h, self.temperature, self.config.epsilon, &mut self.rng);
            self.field.set_row(i, &row);
        }
    }

    /// Runs the full schedule. The hook fires after every sweep; it may
    /// promote rows and request a restart. Returns true on convergence.
    pub(crate) fn run<H>(&mut self, hook: &mut H) -> bool
    where
        H: FnMut(&mut Engine) -> SweepAction,
    {
        loop {
            let mut restarted = false;
            for _ in 0..MAX_INNER_SWEEPS {
                let before = self.field.v.clone();
                self.sweep();
                if hook(self) == SweepAction::Restarted {
                    restarted = true;
                    break;
                }
                let delta: f64 = self
                    .field
                    .v
                    .iter()
                    .zip(&before)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
                    / self.field.n() as f64;
                if delta <= self.config.inner_tol {
                    break;
                }
            }
            if !restarted {
                let saturation = self.field.saturation();
                let assignment = self.field.argmax_assignment();
                self.trace.push(TraceRecord {
                    outer_step: self.stage,
                    temperature: self.temperature,
                    energy: energy(&assignment, self.j),
                    saturation,
                });
                if saturation >= self.config.freeze_tol {
                    return true;
                }
                self.temperature *= self.config.tau;
            }
            self.stage += 1;
            if self.stage >= self.config.max_outer_steps {
                return false;
            }
        }
    }
}

/// Standard clustering: the full schedule over the reports' conflict
/// matrix. `clamps` and `coupling` are for refined-style runs; pass `None`
/// for plain step-1 clustering.
pub fn anneal(
    reports: &[Report],
    config: &AnnealConfig,
    clamps: Option<&[Option<usize>]>,
    coupling: Option<Vec<f64>>,
) -> Result<AnnealOutcome> {
    let j = build_conflict_matrix(reports)?;
    anneal_matrix(&j, config, clamps, coupling)
}

/// [`anneal`] over a prebuilt conflict matrix.
pub fn anneal_matrix(
    j: &ConflictMatrix,
    config: &AnnealConfig,
    clamps: Option<&[Option<usize>]>,
    coupling: Option<Vec<f64>>,
) -> Result<AnnealOutcome> {
    let n = j.n();
    let no_clamps = vec![None; n];
    let clamps = clamps.unwrap_or(&no_clamps);
    if clamps.iter().all(|c| c.is_none()) && n < config.k {
        return Err(Error::invalid(format!(
            "need at least k = {} reports to form {} clusters, got {n}",
            config.k, config.k
        )));
    }
    let mut engine = Engine::new(j, config, clamps, coupling)?;
    let converged = engine.run(&mut |_: &mut Engine| SweepAction::Continue);
    Ok(AnnealOutcome {
        assignment: engine.field.argmax_assignment(),
        field: engine.field,
        trace: engine.trace,
        converged,
    })
}
