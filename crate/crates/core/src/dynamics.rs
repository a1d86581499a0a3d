//! Euler time stepping for interacting, ensemble and self-interacting particle
//! systems, with exact accounting of kernel evaluations and noise draws.
//!
//! Every particle slot owns its own [`RngStream`], so an ensemble's trajectory
//! depends only on the experiment seed and the ensemble index.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{config, precondition, Error, Result};
use crate::estimators::Accumulator;
use crate::model::{Diffusion, KernelScratch, ModelSpec};
use crate::numeric::{ceil_tol, floor_tol, ExactSum};
use crate::rng::{RngStream, StreamId};

/// Uniform grid `t_k = k / n` on `[0, t]`; `⌈t n⌉` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    n: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(n: usize, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(config("steps per unit time n must be at least 1"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(config(format!("horizon t must be positive, got {horizon}")));
        }
        Ok(Self { n, horizon })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of Euler steps, `⌈t n⌉`.
    pub fn steps(&self) -> usize {
        ceil_tol(self.horizon * self.n as f64) as usize
    }

    pub fn step_size(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        k as f64 / self.n as f64
    }

    /// Time actually covered by the grid, `⌈t n⌉ / n`.
    pub fn covered_horizon(&self) -> f64 {
        self.point(self.steps())
    }
}

/// `κ_n(s)`: the grid point at or immediately below `s`.
pub fn kappa(s: f64, n: usize) -> f64 {
    debug_assert!(n >= 1 && s >= 0.0);
    floor_tol(s * n as f64) / n as f64
}

/// Number of active particles per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParticleSchedule {
    Constant(usize),
    /// `N_k = min(cap, max(1, round(n N / k)))` for `k ≥ 1`, `N_0 = min(cap, n N)`.
    Harmonic {
        base: usize,
        cap: usize,
    },
}

impl ParticleSchedule {
    /// Harmonic schedule with the default cap `n N`.
    pub fn harmonic(base: usize, n: usize) -> Self {
        Self::Harmonic {
            base,
            cap: base * n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant(0) => Err(config("particle count N must be at least 1")),
            Self::Harmonic { base, cap } if base == 0 || cap == 0 => {
                Err(config("harmonic schedule needs N >= 1 and N_max >= 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn initial_count(&self, n: usize) -> usize {
        match *self {
            Self::Constant(count) => count,
            Self::Harmonic { base, cap } => cap.min(n * base),
        }
    }

    /// Particles active during step `k` (1-based: the step that produces `t_k`).
    pub fn count_at(&self, k: usize, n: usize) -> usize {
        match *self {
            Self::Constant(count) => count,
            Self::Harmonic { base, cap } => {
                if k == 0 {
                    return self.initial_count(n);
                }
                let ideal = libm::round((n * base) as f64 / k as f64) as usize;
                cap.min(ideal.max(1))
            }
        }
    }

    pub fn label(&self) -> alloc::string::String {
        match *self {
            Self::Constant(count) => format!("constant({count})"),
            Self::Harmonic { base, cap } => format!("harmonic({base};{cap})"),
        }
    }
}

/// Exact operation counters for one run.
///
/// `kernel_evals` counts pairwise kernel, feature-map and combiner calls;
/// `steps` counts ensemble-steps, so a run with `M` ensembles of `K` steps
/// reports `M K`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub kernel_evals: u64,
    pub noise_draws: u64,
    pub steps: u64,
}

impl CostLedger {
    pub fn merge(&mut self, other: &CostLedger) {
        self.kernel_evals += other.kernel_evals;
        self.noise_draws += other.noise_draws;
        self.steps += other.steps;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DynamicsKind {
    /// Interacting particle system, measure = current empirical measure.
    Ips,
    /// Self-interacting system, measure = particles' time-averaged history.
    SelfInteracting,
}

/// How measure-dependent drift is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evaluation {
    /// Average the primary kernel over every atom for every particle.
    Naive,
    /// Compute one mean feature per step and reuse it (O(N) per step).
    Fast,
}

#[derive(Debug, Clone)]
struct Snapshots {
    data: Vec<f64>,
    /// `(offset, particle count)` of each stored grid time.
    spans: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
struct FeatureSums {
    dim: usize,
    sums: Vec<f64>,
}

/// One ensemble of particles at one grid time.
#[derive(Debug, Clone)]
pub struct EnsembleState {
    index: usize,
    dim: usize,
    positions: Vec<f64>,
    active: usize,
    step: usize,
    streams: Vec<RngStream>,
    snapshots: Option<Snapshots>,
    features: Option<FeatureSums>,
}

impl EnsembleState {
    /// Build an ensemble from explicit positions and one stream per particle.
    pub fn new(
        index: usize,
        dim: usize,
        positions: Vec<f64>,
        streams: Vec<RngStream>,
    ) -> Result<Self> {
        if dim == 0 || positions.is_empty() || !positions.len().is_multiple_of(dim) {
            return Err(config(
                "ensemble positions must hold at least one particle of the given dimension",
            ));
        }
        let count = positions.len() / dim;
        if streams.len() != count {
            return Err(config(format!(
                "{count} particles but {} random streams",
                streams.len()
            )));
        }
        Ok(Self {
            index,
            dim,
            positions,
            active: count,
            step: 0,
            streams,
            snapshots: None,
            features: None,
        })
    }

    /// Draw `count` initial positions, particle `i` from stream `(index, i)`.
    pub fn sample(
        model: &ModelSpec,
        index: usize,
        count: usize,
        seed: u64,
        antithetic: bool,
    ) -> Result<Self> {
        if count == 0 {
            return Err(config("particle count must be at least 1"));
        }
        let d = model.dim();
        let mut positions = vec![0.0; count * d];
        let mut streams = Vec::with_capacity(count);
        for (i, slot) in positions.chunks_exact_mut(d).enumerate() {
            let mut s = RngStream::new(seed, StreamId::new(index, i)).antithetic(antithetic);
            model.initial().sample_into(&mut s, slot);
            streams.push(s);
        }
        Self::new(index, d, positions, streams)
    }

    /// Start recording history for self-interacting dynamics: a buffer of past
    /// states, running feature sums of the fast-path kernel, or both.
    pub fn track_history(
        mut self,
        model: &ModelSpec,
        snapshots: bool,
        features: bool,
        ledger: &mut CostLedger,
    ) -> Result<Self> {
        if self.step != 0 {
            return Err(precondition(
                "history must be enabled before the first step",
            ));
        }
        if snapshots {
            self.snapshots = Some(Snapshots {
                data: self.positions.clone(),
                spans: vec![(0, self.active)],
            });
        }
        if features {
            let fk = model
                .fast_drift()
                .ok_or_else(|| config("model has no feature form for the fast path"))?;
            let p = fk.feature_dim();
            let mut sums = vec![0.0; self.active * p];
            for (x, s) in self
                .positions
                .chunks_exact(self.dim)
                .zip(sums.chunks_exact_mut(p))
            {
                fk.feature(x, s);
            }
            ledger.kernel_evals += self.active as u64;
            self.features = Some(FeatureSums { dim: p, sums });
        }
        Ok(self)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Completed steps; the state sits at grid time `step / n`.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Particle slots, including frozen ones.
    pub fn capacity(&self) -> usize {
        self.positions.len() / self.dim
    }

    /// Particles that still move and enter the measure.
    pub fn active(&self) -> usize {
        self.active
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn active_positions(&self) -> &[f64] {
        &self.positions[..self.active * self.dim]
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn streams(&self) -> &[RngStream] {
        &self.streams
    }

    /// Number of stored history states (snapshot buffer), if tracked.
    pub fn history_len(&self) -> Option<usize> {
        self.snapshots.as_ref().map(|s| s.spans.len())
    }

    /// Positions of the particles stored at history index `m`.
    pub fn history_state(&self, m: usize) -> Option<&[f64]> {
        let s = self.snapshots.as_ref()?;
        let &(off, count) = s.spans.get(m)?;
        Some(&s.data[off..off + count * self.dim])
    }

    /// Running sums `Σ_m h(r^i_m)` for particle `i`, if tracked.
    pub fn feature_sum(&self, i: usize) -> Option<&[f64]> {
        let f = self.features.as_ref()?;
        f.sums.get(i * f.dim..(i + 1) * f.dim)
    }
}

/// State of all `M` ensembles.
#[derive(Debug, Clone)]
pub struct ParticleCloud {
    pub ensembles: Vec<EnsembleState>,
}

/// Reusable per-worker buffers for stepping.
#[derive(Debug, Default)]
pub struct StepScratch {
    kernel: KernelScratch,
    next: Vec<f64>,
    drift: Vec<f64>,
    sigma: Vec<f64>,
    noise: Vec<f64>,
    mean_feature: Vec<f64>,
    feature: Vec<f64>,
    sums: Vec<ExactSum>,
}

impl StepScratch {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, model: &ModelSpec, slots: usize) {
        let (d, k) = (model.dim(), model.noise_dim());
        self.next.resize(slots * d, 0.0);
        self.drift.resize(d, 0.0);
        self.sigma.resize(d * k, 0.0);
        self.noise.resize(k, 0.0);
    }
}

/// Mean over particles of the feature map, with exact summation.
fn mean_feature(
    fk: &crate::model::FeatureKernel,
    atoms: &[f64],
    dim: usize,
    ledger: &mut CostLedger,
    scratch: &mut StepScratch,
) {
    let p = fk.feature_dim();
    scratch.sums.resize_with(p, ExactSum::new);
    scratch.sums.iter_mut().for_each(ExactSum::clear);
    scratch.feature.resize(p, 0.0);
    scratch.mean_feature.resize(p, 0.0);
    let mut count = 0u64;
    for y in atoms.chunks_exact(dim) {
        fk.feature(y, &mut scratch.feature);
        for (s, &v) in scratch.sums.iter_mut().zip(&scratch.feature) {
            s.add(v);
        }
        count += 1;
    }
    ledger.kernel_evals += count;
    for (m, s) in scratch.mean_feature.iter_mut().zip(&scratch.sums) {
        *m = s.value() / count as f64;
    }
}

/// `x + b h + σ ΔW` for particle `i`, with `drift` and `sigma` already in scratch.
fn advance_particle(
    x: &[f64],
    stream: &mut RngStream,
    model: &ModelSpec,
    h: f64,
    scratch: &mut StepScratch,
    out: &mut [f64],
) {
    let k = model.noise_dim();
    let sqrt_h = libm::sqrt(h);
    for w in scratch.noise.iter_mut() {
        *w = sqrt_h * stream.normal();
    }
    let sigma: &[f64] = match model.diffusion() {
        Diffusion::Constant(m) => m,
        Diffusion::Interacting(_) => &scratch.sigma,
    };
    for (r, o) in out.iter_mut().enumerate() {
        let noise: f64 = (0..k).map(|c| sigma[r * k + c] * scratch.noise[c]).sum();
        *o = x[r] + scratch.drift[r] * h + noise;
    }
}

fn check_finite(ens: &EnsembleState, next: &[f64], count: usize) -> Result<()> {
    for i in 0..count {
        if next[i * ens.dim..(i + 1) * ens.dim]
            .iter()
            .any(|v| !v.is_finite())
        {
            return Err(Error::Divergence {
                seed: ens.streams[i].seed(),
                step: ens.step + 1,
                ensemble: ens.index,
                particle: i,
            });
        }
    }
    Ok(())
}

/// One Euler step of the interacting particle system for one ensemble.
///
/// Every particle moves with `b(y_i, μ̄) / n + σ(y_i, μ̄) ΔW_i`, where `μ̄` is the
/// ensemble's empirical measure at the current grid time.
pub fn euler_step_ips(
    ens: &mut EnsembleState,
    model: &ModelSpec,
    grid: &TimeGrid,
    evaluation: Evaluation,
    ledger: &mut CostLedger,
    scratch: &mut StepScratch,
) -> Result<()> {
    if ens.dim != model.dim() {
        return Err(config("ensemble and model dimensions differ"));
    }
    if ens.step >= grid.steps() {
        return Err(precondition(format!(
            "grid has {} steps, ensemble already at step {}",
            grid.steps(),
            ens.step
        )));
    }
    let d = ens.dim;
    let count = ens.active;
    let h = grid.step_size();
    scratch.prepare(model, ens.capacity());
    let fast = match evaluation {
        Evaluation::Fast => {
            let fk = model
                .fast_drift()
                .ok_or_else(|| config("model has no feature form for the fast path"))?;
            mean_feature(fk, &ens.positions[..count * d], d, ledger, scratch);
            Some(fk)
        }
        Evaluation::Naive => None,
    };

    for i in 0..count {
        let x = &ens.positions[i * d..(i + 1) * d];
        let measure = &ens.positions[..count * d];
        match fast {
            Some(fk) => {
                fk.combine(x, &scratch.mean_feature, &mut scratch.drift);
                ledger.kernel_evals += 1;
            }
            None => model.drift().average_against(
                x,
                measure.chunks_exact(d),
                ledger,
                &mut scratch.kernel,
                &mut scratch.drift,
            ),
        }
        if let Diffusion::Interacting(kernel) = model.diffusion() {
            kernel.average_against(
                x,
                measure.chunks_exact(d),
                ledger,
                &mut scratch.kernel,
                &mut scratch.sigma,
            );
        }
        let mut out = core::mem::take(&mut scratch.next);
        advance_particle(
            x,
            &mut ens.streams[i],
            model,
            h,
            scratch,
            &mut out[i * d..(i + 1) * d],
        );
        scratch.next = out;
    }
    ledger.noise_draws += (count * model.noise_dim()) as u64;
    check_finite(ens, &scratch.next, count)?;
    ens.positions[..count * d].copy_from_slice(&scratch.next[..count * d]);
    ens.step += 1;
    ledger.steps += 1;
    Ok(())
}

/// One Euler step of the self-interacting system for one ensemble.
///
/// During step `j = step + 1` the `N_j` lowest-indexed particles move with drift
/// `(1/N_j) Σ_l (1/j) Σ_{m<j} b(r^i, r^l_m)`: an average over every stored
/// grid time `0..=step`, the current one included. Particles beyond `N_j` are
/// frozen and leave the measure.
pub fn euler_step_self(
    ens: &mut EnsembleState,
    model: &ModelSpec,
    grid: &TimeGrid,
    schedule: &ParticleSchedule,
    evaluation: Evaluation,
    ledger: &mut CostLedger,
    scratch: &mut StepScratch,
) -> Result<()> {
    if ens.dim != model.dim() {
        return Err(config("ensemble and model dimensions differ"));
    }
    if ens.step >= grid.steps() {
        return Err(precondition(format!(
            "grid has {} steps, ensemble already at step {}",
            grid.steps(),
            ens.step
        )));
    }
    let j = ens.step + 1;
    let count = schedule.count_at(j, grid.n());
    if count > ens.active {
        return Err(config(format!(
            "schedule requests {count} particles at step {j}, only {} available",
            ens.active
        )));
    }
    let d = ens.dim;
    let h = grid.step_size();
    let history = j;
    let needs_snapshots =
        evaluation == Evaluation::Naive || matches!(model.diffusion(), Diffusion::Interacting(_));
    if needs_snapshots && ens.snapshots.is_none() {
        return Err(precondition(
            "self-interacting step needs the history buffer",
        ));
    }
    if evaluation == Evaluation::Fast && ens.features.is_none() {
        return Err(precondition(
            "fast self-interacting step needs running feature sums",
        ));
    }
    scratch.prepare(model, ens.capacity());

    let fast = match evaluation {
        Evaluation::Fast => {
            let fk = model
                .fast_drift()
                .ok_or_else(|| config("model has no feature form for the fast path"))?;
            let feats = ens.features.as_ref().expect("checked above");
            let p = feats.dim;
            scratch.sums.resize_with(p, ExactSum::new);
            scratch.sums.iter_mut().for_each(ExactSum::clear);
            for row in feats.sums[..count * p].chunks_exact(p) {
                for (s, &v) in scratch.sums.iter_mut().zip(row) {
                    s.add(v);
                }
            }
            scratch.mean_feature.resize(p, 0.0);
            let denom = (count * history) as f64;
            for (m, s) in scratch.mean_feature.iter_mut().zip(&scratch.sums) {
                *m = s.value() / denom;
            }
            Some(fk)
        }
        Evaluation::Naive => None,
    };

    for i in 0..count {
        let x = &ens.positions[i * d..(i + 1) * d];
        let snaps = ens.snapshots.as_ref();
        let history_atoms = || {
            let s = snaps.expect("checked above");
            s.spans
                .iter()
                .flat_map(move |&(off, _)| s.data[off..off + count * d].chunks_exact(d))
        };
        match fast {
            Some(fk) => {
                fk.combine(x, &scratch.mean_feature, &mut scratch.drift);
                ledger.kernel_evals += 1;
            }
            None => model.drift().average_against(
                x,
                history_atoms(),
                ledger,
                &mut scratch.kernel,
                &mut scratch.drift,
            ),
        }
        if let Diffusion::Interacting(kernel) = model.diffusion() {
            kernel.average_against(
                x,
                history_atoms(),
                ledger,
                &mut scratch.kernel,
                &mut scratch.sigma,
            );
        }
        let mut out = core::mem::take(&mut scratch.next);
        advance_particle(
            x,
            &mut ens.streams[i],
            model,
            h,
            scratch,
            &mut out[i * d..(i + 1) * d],
        );
        scratch.next = out;
    }
    ledger.noise_draws += (count * model.noise_dim()) as u64;
    check_finite(ens, &scratch.next, count)?;
    ens.positions[..count * d].copy_from_slice(&scratch.next[..count * d]);
    ens.active = count;
    ens.step += 1;
    ledger.steps += 1;

    if let Some(s) = ens.snapshots.as_mut() {
        let off = s.data.len();
        s.data.extend_from_slice(&ens.positions[..count * d]);
        s.spans.push((off, count));
    }
    if let Some(f) = ens.features.as_mut() {
        let fk = model
            .fast_drift()
            .expect("feature sums imply a feature form");
        let p = f.dim;
        scratch.feature.resize(p, 0.0);
        for (x, sum) in ens.positions[..count * d]
            .chunks_exact(d)
            .zip(f.sums.chunks_exact_mut(p))
        {
            fk.feature(x, &mut scratch.feature);
            for (a, &b) in sum.iter_mut().zip(&scratch.feature) {
                *a += b;
            }
        }
        ledger.kernel_evals += count as u64;
    }
    Ok(())
}

/// Everything except the model needed to run one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub grid: TimeGrid,
    pub ensembles: usize,
    pub schedule: ParticleSchedule,
    pub kind: DynamicsKind,
    pub evaluation: Evaluation,
    pub seed: u64,
    pub antithetic: bool,
}

impl SimulationConfig {
    pub fn new(grid: TimeGrid, particles: usize, kind: DynamicsKind, seed: u64) -> Self {
        Self {
            grid,
            ensembles: 1,
            schedule: ParticleSchedule::Constant(particles),
            kind,
            evaluation: Evaluation::Naive,
            seed,
            antithetic: false,
        }
    }

    pub fn with_ensembles(mut self, m: usize) -> Self {
        self.ensembles = m;
        self
    }

    pub fn with_schedule(mut self, schedule: ParticleSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_evaluation(mut self, evaluation: Evaluation) -> Self {
        self.evaluation = evaluation;
        self
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        self.schedule.validate()?;
        if self.ensembles == 0 {
            return Err(config("ensemble count M must be at least 1"));
        }
        if self.kind == DynamicsKind::Ips && !matches!(self.schedule, ParticleSchedule::Constant(_))
        {
            return Err(config(
                "interacting particle dynamics requires a constant particle schedule",
            ));
        }
        if self.evaluation == Evaluation::Fast && model.fast_drift().is_none() {
            return Err(config(format!(
                "model '{}' has no fast-path feature form",
                model.name()
            )));
        }
        Ok(())
    }
}

/// Sample and prepare ensemble `index` for the configured dynamics.
pub fn init_ensemble(
    model: &ModelSpec,
    cfg: &SimulationConfig,
    index: usize,
    ledger: &mut CostLedger,
) -> Result<EnsembleState> {
    let count = cfg.schedule.initial_count(cfg.grid.n());
    let ens = EnsembleState::sample(model, index, count, cfg.seed, cfg.antithetic)?;
    match cfg.kind {
        DynamicsKind::Ips => Ok(ens),
        DynamicsKind::SelfInteracting => {
            let snapshots = cfg.evaluation == Evaluation::Naive
                || matches!(model.diffusion(), Diffusion::Interacting(_));
            let features = cfg.evaluation == Evaluation::Fast;
            ens.track_history(model, snapshots, features, ledger)
        }
    }
}

/// Run ensemble `index` over the whole grid, calling `observer` at every grid
/// time `t_0, …, t_K` (initial and final states included).
pub fn run_ensemble(
    model: &ModelSpec,
    cfg: &SimulationConfig,
    index: usize,
    observer: &mut dyn FnMut(&EnsembleState),
) -> Result<(EnsembleState, CostLedger)> {
    cfg.validate(model)?;
    let mut ledger = CostLedger::default();
    let mut ens = init_ensemble(model, cfg, index, &mut ledger)?;
    let mut scratch = StepScratch::new();
    observer(&ens);
    for _ in 0..cfg.grid.steps() {
        match cfg.kind {
            DynamicsKind::Ips => euler_step_ips(
                &mut ens,
                model,
                &cfg.grid,
                cfg.evaluation,
                &mut ledger,
                &mut scratch,
            )?,
            DynamicsKind::SelfInteracting => euler_step_self(
                &mut ens,
                model,
                &cfg.grid,
                &cfg.schedule,
                cfg.evaluation,
                &mut ledger,
                &mut scratch,
            )?,
        }
        observer(&ens);
    }
    Ok((ens, ledger))
}

/// Run all `M` ensembles in index order, feeding every accumulator.
pub fn simulate(
    model: &ModelSpec,
    cfg: &SimulationConfig,
    sinks: &mut [Accumulator],
) -> Result<(ParticleCloud, CostLedger)> {
    cfg.validate(model)?;
    let mut ledger = CostLedger::default();
    let mut ensembles = Vec::with_capacity(cfg.ensembles);
    for j in 0..cfg.ensembles {
        let (ens, l) = run_ensemble(model, cfg, j, &mut |state| {
            for sink in sinks.iter_mut() {
                sink.observe(state);
            }
        })?;
        ledger.merge(&l);
        ensembles.push(ens);
    }
    Ok((ParticleCloud { ensembles }, ledger))
}

/// Kernel evaluations a naive pairwise run must charge with constant diffusion:
/// `M ⌈tn⌉ N²` for IPS and `M Σ_{k=1}^{⌈tn⌉} N_k² k` for self-interacting runs.
pub fn naive_kernel_evals(cfg: &SimulationConfig) -> u64 {
    let steps = cfg.grid.steps() as u64;
    let m = cfg.ensembles as u64;
    match cfg.kind {
        DynamicsKind::Ips => {
            let n = cfg.schedule.initial_count(cfg.grid.n()) as u64;
            m * steps * n * n
        }
        DynamicsKind::SelfInteracting => {
            let per: u64 = (1..=steps)
                .map(|k| {
                    let nk = cfg.schedule.count_at(k as usize, cfg.grid.n()) as u64;
                    nk * nk * k
                })
                .sum();
            m * per
        }
    }
}

/// Largest state gap between the naive pairwise path and the feature fast path
/// of an interacting particle system, over every particle and grid time.
pub fn fast_path_check(
    model: &ModelSpec,
    grid: &TimeGrid,
    particles: usize,
    seed: u64,
) -> Result<f64> {
    let cfg = SimulationConfig::new(*grid, particles, DynamicsKind::Ips, seed);
    path_gap(model, &cfg)
}

/// Same comparison for self-interacting dynamics: history buffer against
/// running feature sums.
pub fn fast_path_check_self(
    model: &ModelSpec,
    grid: &TimeGrid,
    schedule: ParticleSchedule,
    seed: u64,
) -> Result<f64> {
    let cfg = SimulationConfig::new(*grid, 1, DynamicsKind::SelfInteracting, seed)
        .with_schedule(schedule);
    path_gap(model, &cfg)
}

fn path_gap(model: &ModelSpec, cfg: &SimulationConfig) -> Result<f64> {
    if model.fast_drift().is_none() {
        return Err(config("model is not expressible as a feature average"));
    }
    let mut naive = Vec::new();
    run_ensemble(
        model,
        &cfg.with_evaluation(Evaluation::Naive),
        0,
        &mut |s| naive.extend_from_slice(s.positions()),
    )?;
    let mut fast = Vec::new();
    run_ensemble(model, &cfg.with_evaluation(Evaluation::Fast), 0, &mut |s| {
        fast.extend_from_slice(s.positions())
    })?;
    Ok(naive
        .iter()
        .zip(&fast)
        .fold(0.0f64, |worst, (a, b)| worst.max((a - b).abs())))
}
